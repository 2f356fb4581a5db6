//! Read-only fixture data standing in for external services: a gazetteer, a
//! POI database, image annotations for the perception oracles, canned text for
//! OCR and search, image metadata, and multispectral scenes.
//!
//! All files live under one root directory and are optional:
//!
//! ```text
//! gazetteer.json      {"Place": [[lon, lat], ...]}
//! pois.json           [{"region", "query", "features": [...]}]
//! annotations.json    [{"image", "label", "boxes", "masks_px", "caption"}]
//! canned_text.json    {"key": "text"}       (OCR keyed by image, search by query)
//! images.json         {"image-id": {"width", "height", "gsd_m_per_px"?}}
//! scenes.json         [{"region", "year", "grid": RasterGrid}]
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::bundle::{GeoBundle, RasterGrid};
use super::geometry::{Feature, LonLat};
use super::GeoError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    #[serde(default)]
    pub boxes: Vec<[f64; 4]>,
    #[serde(default)]
    pub masks_px: Vec<u64>,
    #[serde(default)]
    pub caption: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageInfo {
    pub width: u32,
    pub height: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gsd_m_per_px: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoiRecord {
    pub region: String,
    pub query: String,
    pub features: Vec<Feature>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub image: String,
    pub label: String,
    #[serde(flatten)]
    pub annotation: Annotation,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneRecord {
    pub region: String,
    pub year: i64,
    pub grid: RasterGrid,
}

#[derive(Debug, Clone, Default)]
pub struct FixtureStore {
    root: PathBuf,
    pub gazetteer: BTreeMap<String, Vec<LonLat>>,
    pub poi_db: BTreeMap<(String, String), Vec<Feature>>,
    pub annotations: BTreeMap<(String, String), Annotation>,
    pub canned_text: BTreeMap<String, String>,
    pub images: BTreeMap<String, ImageInfo>,
    pub scenes: BTreeMap<(String, i64), RasterGrid>,
}

fn key(s: &str) -> String {
    s.trim().to_lowercase()
}

impl FixtureStore {
    /// Empty store whose bundle references resolve relative to `root`.
    pub fn empty(root: impl Into<PathBuf>) -> Self {
        Self {
            root: root.into(),
            ..Default::default()
        }
    }

    pub fn load(root: &Path) -> Result<Self, GeoError> {
        let mut store = Self::empty(root);
        if let Some(g) = read_opt::<BTreeMap<String, Vec<LonLat>>>(&root.join("gazetteer.json"))? {
            store.gazetteer = g.into_iter().map(|(k, v)| (key(&k), v)).collect();
        }
        if let Some(pois) = read_opt::<Vec<PoiRecord>>(&root.join("pois.json"))? {
            for p in pois {
                store.poi_db.insert((key(&p.region), key(&p.query)), p.features);
            }
        }
        if let Some(anns) = read_opt::<Vec<AnnotationRecord>>(&root.join("annotations.json"))? {
            for a in anns {
                store.annotations.insert((a.image, key(&a.label)), a.annotation);
            }
        }
        if let Some(t) = read_opt(&root.join("canned_text.json"))? {
            store.canned_text = t;
        }
        if let Some(i) = read_opt(&root.join("images.json"))? {
            store.images = i;
        }
        if let Some(scenes) = read_opt::<Vec<SceneRecord>>(&root.join("scenes.json"))? {
            for s in scenes {
                s.grid.check()?;
                store.scenes.insert((key(&s.region), s.year), s.grid);
            }
        }
        store.check()?;
        Ok(store)
    }

    fn check(&self) -> Result<(), GeoError> {
        for (id, info) in &self.images {
            if let Some(g) = info.gsd_m_per_px {
                if !(g > 0.0 && g.is_finite()) {
                    return Err(GeoError::InvalidBundle(format!("image `{id}` has non-positive gsd {g}")));
                }
            }
        }
        Ok(())
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn place(&self, name: &str) -> Result<&[LonLat], GeoError> {
        self.gazetteer
            .get(&key(name))
            .map(Vec::as_slice)
            .ok_or_else(|| GeoError::PlaceNotFound(name.to_owned()))
    }

    pub fn pois(&self, region: &str, query: &str) -> Result<&[Feature], GeoError> {
        self.poi_db
            .get(&(key(region), key(query)))
            .map(Vec::as_slice)
            .ok_or_else(|| GeoError::UnknownPoiQuery(format!("{query} in {region}")))
    }

    pub fn knows_image(&self, image: &str) -> bool {
        self.images.contains_key(image) || self.annotations.keys().any(|(i, _)| i == image)
    }

    pub fn annotation(&self, image: &str, label: &str) -> Result<&Annotation, GeoError> {
        if !self.knows_image(image) {
            return Err(GeoError::UnknownImage(image.to_owned()));
        }
        self.annotations
            .get(&(image.to_owned(), key(label)))
            .ok_or_else(|| GeoError::UnknownLabel(format!("{label} in {image}")))
    }

    /// All `(label, annotation)` pairs for an image, sorted by label.
    pub fn annotations_for(&self, image: &str) -> Vec<(&str, &Annotation)> {
        self.annotations
            .iter()
            .filter(|((i, _), _)| i == image)
            .map(|((_, l), a)| (l.as_str(), a))
            .collect()
    }

    pub fn text(&self, key: &str) -> Option<&str> {
        self.canned_text.get(key).map(String::as_str)
    }

    pub fn gsd(&self, image: &str) -> Option<f64> {
        self.images.get(image).and_then(|i| i.gsd_m_per_px)
    }

    pub fn image_size(&self, image: &str) -> Option<(u32, u32)> {
        self.images.get(image).map(|i| (i.width, i.height))
    }

    pub fn scene(&self, region: &str, year: i64) -> Result<&RasterGrid, GeoError> {
        self.scenes
            .get(&(key(region), year))
            .ok_or_else(|| GeoError::MissingLayer(format!("no scene for {region} in {year}")))
    }

    /// Loads a bundle directory referenced relative to the fixture root.
    pub fn load_bundle(&self, reference: &str) -> Result<GeoBundle, GeoError> {
        let path = self.root.join(reference);
        if !path.is_dir() {
            return Err(GeoError::UnknownBundle(reference.to_owned()));
        }
        GeoBundle::load(&path)
    }
}

fn read_opt<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Option<T>, GeoError> {
    if !path.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(path).map_err(|e| GeoError::IoFailure(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map(Some)
        .map_err(|e| GeoError::InvalidBundle(format!("{}: {e}", path.display())))
}
