//! Unified tool registry: every tool exposes the same callable schema (typed
//! input parameters, an output contract, and a binding to an executor), and
//! calls are validated against that schema before anything runs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::canonical;

/// Name of the tool that ends a session and carries the final answer.
pub const TERMINATE: &str = "Terminate";

const DEFAULT_REGISTRY_JSON: &str = include_str!("../assets/registry.json");
const DEFAULT_CATEGORY_MAP_JSON: &str = include_str!("../assets/category_map.json");

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("duplicate tool name `{0}`")]
    DuplicateName(String),
    #[error("invalid descriptor `{tool}`: {detail}")]
    InvalidDescriptor { tool: String, detail: String },
    #[error("category override names unknown tool `{0}`")]
    UnknownOverride(String),
    #[error("malformed registry file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Functional category used for per-category F1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Perception,
    Operation,
    Logic,
    Gis,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::Perception,
        Category::Operation,
        Category::Logic,
        Category::Gis,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Perception => "perception",
            Category::Operation => "operation",
            Category::Logic => "logic",
            Category::Gis => "gis",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Closed set of argument kinds a parameter may declare.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ParamKind {
    String,
    Number,
    Integer,
    Boolean,
    ImageRef,
    GeoBundleRef,
    LayerName,
    BboxWsen,
    CoordinateLonLat,
    StructuredObject,
    ArrayOf(Box<ParamKind>),
}

impl ParamKind {
    /// Kinds whose values name a file or bundle; compared by final path segment when scoring.
    pub fn is_path_like(&self) -> bool {
        matches!(self, ParamKind::ImageRef | ParamKind::GeoBundleRef)
    }

    /// Whether `value` conforms to this kind. `None` on success, otherwise a reason.
    pub fn check(&self, value: &Value) -> Option<String> {
        match self {
            ParamKind::String => (!value.is_string()).then(|| "expected a string".into()),
            ParamKind::Number => (!value.is_number()).then(|| "expected a number".into()),
            ParamKind::Integer => {
                (!(value.is_i64() || value.is_u64())).then(|| "expected an integer".into())
            }
            ParamKind::Boolean => (!value.is_boolean()).then(|| "expected a boolean".into()),
            ParamKind::ImageRef | ParamKind::GeoBundleRef | ParamKind::LayerName => {
                match value.as_str() {
                    Some(s) if !s.trim().is_empty() => None,
                    Some(_) => Some("expected a non-empty reference".into()),
                    None => Some("expected a string reference".into()),
                }
            }
            ParamKind::BboxWsen => match numbers(value, 4) {
                None => Some("expected [west, south, east, north]".into()),
                Some(b) if b[0] > b[2] => Some(format!("west {} exceeds east {}", b[0], b[2])),
                Some(b) if b[1] > b[3] => Some(format!("south {} exceeds north {}", b[1], b[3])),
                Some(_) => None,
            },
            ParamKind::CoordinateLonLat => match numbers(value, 2) {
                None => Some("expected [lon, lat]".into()),
                Some(c) if !(-180.0..=180.0).contains(&c[0]) => {
                    Some(format!("longitude {} outside [-180, 180]", c[0]))
                }
                Some(c) if !(-90.0..=90.0).contains(&c[1]) => {
                    Some(format!("latitude {} outside [-90, 90]", c[1]))
                }
                Some(_) => None,
            },
            ParamKind::StructuredObject => (!value.is_object()).then(|| "expected an object".into()),
            ParamKind::ArrayOf(inner) => match value.as_array() {
                None => Some("expected an array".into()),
                Some(items) => items
                    .iter()
                    .enumerate()
                    .find_map(|(i, item)| inner.check(item).map(|why| format!("element {i}: {why}"))),
            },
        }
    }
}

fn numbers(value: &Value, len: usize) -> Option<Vec<f64>> {
    let items = value.as_array()?;
    if items.len() != len {
        return None;
    }
    items.iter().map(Value::as_f64).collect()
}

impl fmt::Display for ParamKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamKind::String => f.write_str("string"),
            ParamKind::Number => f.write_str("number"),
            ParamKind::Integer => f.write_str("integer"),
            ParamKind::Boolean => f.write_str("boolean"),
            ParamKind::ImageRef => f.write_str("image-ref"),
            ParamKind::GeoBundleRef => f.write_str("geo-bundle-ref"),
            ParamKind::LayerName => f.write_str("layer-name"),
            ParamKind::BboxWsen => f.write_str("bbox-wsen"),
            ParamKind::CoordinateLonLat => f.write_str("coordinate-lonlat"),
            ParamKind::StructuredObject => f.write_str("structured-object"),
            ParamKind::ArrayOf(inner) => write!(f, "array-of({inner})"),
        }
    }
}

impl FromStr for ParamKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Some(inner) = s.strip_prefix("array-of(").and_then(|r| r.strip_suffix(')')) {
            return Ok(ParamKind::ArrayOf(Box::new(inner.parse()?)));
        }
        Ok(match s {
            "string" => ParamKind::String,
            "number" => ParamKind::Number,
            "integer" => ParamKind::Integer,
            "boolean" => ParamKind::Boolean,
            "image-ref" => ParamKind::ImageRef,
            "geo-bundle-ref" => ParamKind::GeoBundleRef,
            "layer-name" => ParamKind::LayerName,
            "bbox-wsen" => ParamKind::BboxWsen,
            "coordinate-lonlat" => ParamKind::CoordinateLonLat,
            "structured-object" => ParamKind::StructuredObject,
            other => return Err(format!("unknown parameter kind `{other}`")),
        })
    }
}

impl TryFrom<String> for ParamKind {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<ParamKind> for String {
    fn from(kind: ParamKind) -> String {
        kind.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub kind: ParamKind,
    pub required: bool,
    pub description: String,
}

/// One registry entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolDescriptor {
    pub name: String,
    pub category: Category,
    pub description: String,
    pub params: Vec<ParamSpec>,
    pub output: String,
    pub executor_id: String,
}

impl ToolDescriptor {
    pub fn param(&self, name: &str) -> Option<&ParamSpec> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn required_params(&self) -> impl Iterator<Item = &ParamSpec> {
        self.params.iter().filter(|p| p.required)
    }

    fn check(&self) -> Result<(), RegistryError> {
        let invalid = |detail: String| RegistryError::InvalidDescriptor {
            tool: self.name.clone(),
            detail,
        };
        if self.name.trim().is_empty() {
            return Err(invalid("empty tool name".into()));
        }
        if self.output.trim().is_empty() {
            return Err(invalid("empty output contract".into()));
        }
        if self.executor_id.trim().is_empty() {
            return Err(invalid("empty executor id".into()));
        }
        let mut seen = BTreeSet::new();
        for p in &self.params {
            if p.name.trim().is_empty() {
                return Err(invalid("parameter with empty name".into()));
            }
            if !seen.insert(p.name.as_str()) {
                return Err(invalid(format!("parameter `{}` declared twice", p.name)));
            }
        }
        Ok(())
    }
}

/// Immutable set of registered tools, keyed by name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ToolRegistry {
    tools: BTreeMap<String, ToolDescriptor>,
}

impl ToolRegistry {
    /// Builds a registry, rejecting duplicate names and malformed descriptors.
    pub fn new(descriptors: Vec<ToolDescriptor>) -> Result<Self, RegistryError> {
        let mut tools = BTreeMap::new();
        for d in descriptors {
            d.check()?;
            if tools.contains_key(&d.name) {
                return Err(RegistryError::DuplicateName(d.name));
            }
            tools.insert(d.name.clone(), d);
        }
        Ok(Self { tools })
    }

    /// The shipped 24-tool registry with the default category table applied.
    pub fn default_registry() -> Self {
        let registry = Self::from_json(DEFAULT_REGISTRY_JSON).expect("bundled registry is valid");
        let map = parse_category_map(DEFAULT_CATEGORY_MAP_JSON).expect("bundled category map is valid");
        registry
            .with_category_overrides(&map)
            .expect("bundled category map covers the bundled registry")
    }

    pub fn from_json(text: &str) -> Result<Self, RegistryError> {
        let descriptors: Vec<ToolDescriptor> = serde_json::from_str(text)?;
        Self::new(descriptors)
    }

    pub fn load(path: &Path) -> Result<Self, RegistryError> {
        let text = std::fs::read_to_string(path)?;
        if text.trim().is_empty() {
            return Ok(Self::default());
        }
        Self::from_json(&text)
    }

    /// Canonical file form: a JSON array with one canonical tool object per line.
    pub fn to_canonical_json(&self) -> String {
        let mut out = String::from("[\n");
        let lines: Vec<String> = self
            .tools
            .values()
            .map(|d| canonical::to_canonical_string(d).expect("descriptor serializes"))
            .collect();
        out.push_str(&lines.join(",\n"));
        if !lines.is_empty() {
            out.push('\n');
        }
        out.push_str("]\n");
        out
    }

    /// Returns a copy with categories replaced per `overrides`.
    pub fn with_category_overrides(
        &self,
        overrides: &BTreeMap<String, Category>,
    ) -> Result<Self, RegistryError> {
        let mut tools = self.tools.clone();
        for (name, category) in overrides {
            match tools.get_mut(name) {
                Some(d) => d.category = *category,
                None => return Err(RegistryError::UnknownOverride(name.clone())),
            }
        }
        Ok(Self { tools })
    }

    pub fn get(&self, name: &str) -> Option<&ToolDescriptor> {
        self.tools.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.tools.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.tools.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tools.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ToolDescriptor> {
        self.tools.values()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.tools.keys().map(String::as_str)
    }

    pub fn category_of(&self, name: &str) -> Option<Category> {
        self.tools.get(name).map(|d| d.category)
    }

    /// Tool names carrying `category`, sorted lexicographically.
    pub fn list_by_category(&self, category: Category) -> Vec<String> {
        // BTreeMap iteration is already sorted by name.
        self.tools
            .values()
            .filter(|d| d.category == category)
            .map(|d| d.name.clone())
            .collect()
    }

    /// Name → category table, the shape of the category-override file.
    pub fn category_map(&self) -> BTreeMap<String, Category> {
        self.tools
            .values()
            .map(|d| (d.name.clone(), d.category))
            .collect()
    }

    pub fn validate_call(&self, name: &str, args: &Value, mode: ValidationMode) -> ValidationReport {
        validate_call(self, name, args, mode)
    }
}

/// Parses a category-override file (`{"ToolName": "gis", ...}`).
pub fn parse_category_map(text: &str) -> Result<BTreeMap<String, Category>, RegistryError> {
    Ok(serde_json::from_str(text)?)
}

pub fn load_category_map(path: &Path) -> Result<BTreeMap<String, Category>, RegistryError> {
    parse_category_map(&std::fs::read_to_string(path)?)
}

/// Unknown arguments fail validation in strict mode and become warnings in lenient mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValidationMode {
    #[default]
    Strict,
    Lenient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IssueCode {
    UnknownTool,
    MissingRequired,
    UnknownArg,
    TypeMismatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationIssue {
    pub code: IssueCode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param: Option<String>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub issues: Vec<ValidationIssue>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<ValidationIssue>,
}

impl ValidationReport {
    fn from_parts(issues: Vec<ValidationIssue>, warnings: Vec<ValidationIssue>) -> Self {
        Self {
            ok: issues.is_empty(),
            issues,
            warnings,
        }
    }

    pub fn has(&self, code: IssueCode) -> bool {
        self.issues.iter().any(|i| i.code == code)
    }

    /// One-line human summary of the issues.
    pub fn summary(&self) -> String {
        self.issues
            .iter()
            .map(|i| match &i.param {
                Some(p) => format!("{:?}({p}): {}", i.code, i.detail),
                None => format!("{:?}: {}", i.code, i.detail),
            })
            .collect::<Vec<_>>()
            .join("; ")
    }
}

/// Checks a call against the registered schema. Never fails; problems land in the report.
pub fn validate_call(
    registry: &ToolRegistry,
    name: &str,
    args: &Value,
    mode: ValidationMode,
) -> ValidationReport {
    let issue = |code, param: Option<&str>, detail: String| ValidationIssue {
        code,
        param: param.map(str::to_owned),
        detail,
    };

    let Some(tool) = registry.get(name) else {
        return ValidationReport::from_parts(
            vec![issue(IssueCode::UnknownTool, None, format!("no tool named `{name}`"))],
            Vec::new(),
        );
    };
    let Some(obj) = args.as_object() else {
        return ValidationReport::from_parts(
            vec![issue(IssueCode::TypeMismatch, None, "arguments must be a JSON object".into())],
            Vec::new(),
        );
    };

    let mut issues = Vec::new();
    let mut warnings = Vec::new();
    for spec in &tool.params {
        match obj.get(&spec.name) {
            None | Some(Value::Null) => {
                if spec.required {
                    issues.push(issue(
                        IssueCode::MissingRequired,
                        Some(&spec.name),
                        format!("`{}` requires `{}`", tool.name, spec.name),
                    ));
                }
            }
            Some(v) => {
                if let Some(why) = spec.kind.check(v) {
                    issues.push(issue(
                        IssueCode::TypeMismatch,
                        Some(&spec.name),
                        format!("{} ({})", why, spec.kind),
                    ));
                }
            }
        }
    }
    for key in obj.keys() {
        if tool.param(key).is_none() {
            let i = issue(
                IssueCode::UnknownArg,
                Some(key),
                format!("`{}` has no parameter `{key}`", tool.name),
            );
            match mode {
                ValidationMode::Strict => issues.push(i),
                ValidationMode::Lenient => warnings.push(i),
            }
        }
    }
    ValidationReport::from_parts(issues, warnings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn calc() -> ToolDescriptor {
        ToolDescriptor {
            name: "Calculator".into(),
            category: Category::Logic,
            description: "math".into(),
            params: vec![ParamSpec {
                name: "expression".into(),
                kind: ParamKind::String,
                required: true,
                description: String::new(),
            }],
            output: "number".into(),
            executor_id: "calculator".into(),
        }
    }

    #[test]
    fn default_registry_has_all_24_tools() {
        let r = ToolRegistry::default_registry();
        assert_eq!(r.len(), 24);
        assert!(r.contains(TERMINATE));
    }

    #[test]
    fn duplicate_names_rejected() {
        let err = ToolRegistry::new(vec![calc(), calc()]).unwrap_err();
        assert!(matches!(err, RegistryError::DuplicateName(n) if n == "Calculator"));
    }

    #[test]
    fn empty_registry_is_valid() {
        let r = ToolRegistry::new(vec![]).unwrap();
        assert!(r.is_empty());
        assert!(r.list_by_category(Category::Logic).is_empty());
    }

    #[test]
    fn duplicate_param_rejected() {
        let mut d = calc();
        d.params.push(d.params[0].clone());
        assert!(matches!(
            ToolRegistry::new(vec![d]),
            Err(RegistryError::InvalidDescriptor { .. })
        ));
    }

    #[test]
    fn minimal_valid_call() {
        let r = ToolRegistry::default_registry();
        let rep = r.validate_call("Calculator", &json!({"expression": "1+1"}), ValidationMode::Strict);
        assert!(rep.ok, "{rep:?}");
    }

    #[test]
    fn missing_required_reports_the_param() {
        let r = ToolRegistry::default_registry();
        let rep = r.validate_call(
            "ComputeDistance",
            &json!({"geopackage": "a.bundle", "source_layer": "kindergarten"}),
            ValidationMode::Strict,
        );
        assert!(!rep.ok);
        assert_eq!(rep.issues.len(), 1);
        assert_eq!(rep.issues[0].code, IssueCode::MissingRequired);
        assert_eq!(rep.issues[0].param.as_deref(), Some("target_layer"));
    }

    #[test]
    fn unknown_tool() {
        let r = ToolRegistry::default_registry();
        let rep = r.validate_call("FlyToMoon", &json!({}), ValidationMode::Strict);
        assert!(rep.has(IssueCode::UnknownTool));
    }

    #[test]
    fn unknown_arg_is_strict_failure_and_lenient_warning() {
        let r = ToolRegistry::default_registry();
        let args = json!({"expression": "1", "precision": 3});
        let strict = r.validate_call("Calculator", &args, ValidationMode::Strict);
        assert!(strict.has(IssueCode::UnknownArg));
        let lenient = r.validate_call("Calculator", &args, ValidationMode::Lenient);
        assert!(lenient.ok);
        assert_eq!(lenient.warnings.len(), 1);
    }

    #[test]
    fn number_accepts_integer_literal_integer_rejects_float() {
        assert!(ParamKind::Number.check(&json!(3)).is_none());
        assert!(ParamKind::Integer.check(&json!(3)).is_none());
        assert!(ParamKind::Integer.check(&json!(3.5)).is_some());
    }

    #[test]
    fn bbox_and_coordinate_rules() {
        assert!(ParamKind::BboxWsen.check(&json!([0, 0, 1, 1])).is_none());
        assert!(ParamKind::BboxWsen.check(&json!([2, 0, 1, 1])).is_some());
        assert!(ParamKind::BboxWsen.check(&json!([0, 2, 1, 1])).is_some());
        assert!(ParamKind::BboxWsen.check(&json!([0, 0, 1])).is_some());
        assert!(ParamKind::CoordinateLonLat.check(&json!([180, -90])).is_none());
        assert!(ParamKind::CoordinateLonLat.check(&json!([180.5, 0])).is_some());
        assert!(ParamKind::CoordinateLonLat.check(&json!([0, 91])).is_some());
    }

    #[test]
    fn kind_strings_round_trip() {
        for s in ["string", "bbox-wsen", "array-of(array-of(number))", "array-of(layer-name)"] {
            assert_eq!(s.parse::<ParamKind>().unwrap().to_string(), s);
        }
        assert!("tensor".parse::<ParamKind>().is_err());
    }

    #[test]
    fn categories_partition_default_registry() {
        let r = ToolRegistry::default_registry();
        let mut all: Vec<String> = Category::ALL
            .iter()
            .flat_map(|c| r.list_by_category(*c))
            .collect();
        assert_eq!(all.len(), r.len());
        all.sort();
        all.dedup();
        assert_eq!(all.len(), r.len());
        let gis = r.list_by_category(Category::Gis);
        assert!(gis.contains(&"ComputeDistance".to_string()));
        let mut sorted = gis.clone();
        sorted.sort();
        assert_eq!(gis, sorted);
    }

    #[test]
    fn category_override_applies_and_rejects_unknown() {
        let r = ToolRegistry::default_registry();
        let mut m = BTreeMap::new();
        m.insert("GoogleSearch".to_string(), Category::Operation);
        let r2 = r.with_category_overrides(&m).unwrap();
        assert_eq!(r2.category_of("GoogleSearch"), Some(Category::Operation));
        m.insert("Nope".to_string(), Category::Gis);
        assert!(r.with_category_overrides(&m).is_err());
    }
}
