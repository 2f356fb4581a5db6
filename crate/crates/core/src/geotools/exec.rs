//! Executor table: one function per `executor_id`, each mapping validated
//! arguments to a structured JSON observation.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde_json::{json, Value};

use super::bundle::GeoBundle;
use super::calculator::calculator_eval;
use super::fixtures::FixtureStore;
use super::geodesy::{buffer_envelope, nearest};
use super::geometry::{envelope, point_in_polygon, rectangle, Feature, Geometry};
use super::render;
use super::solver::solver_eval;
use super::spectral::{self, band_stats, IndexKind, INDEX_BAND};
use super::GeoError;
use crate::canonical;

pub type ExecFn = fn(&Value, &mut ExecContext<'_>) -> Result<Value, GeoError>;

/// Session-owned bundles, keyed by reference. Unknown references are loaded
/// from the fixture root on first use.
#[derive(Debug, Clone, Default)]
pub struct BundleStore {
    bundles: BTreeMap<String, GeoBundle>,
}

impl BundleStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, reference: &str, bundle: GeoBundle) {
        self.bundles.insert(reference.to_owned(), bundle);
    }

    pub fn get(&self, reference: &str) -> Option<&GeoBundle> {
        self.bundles.get(reference)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &GeoBundle)> {
        self.bundles.iter().map(|(k, v)| (k.as_str(), v))
    }

    fn ensure(&mut self, reference: &str, fixtures: &FixtureStore) -> Result<(), GeoError> {
        if !self.bundles.contains_key(reference) {
            let b = fixtures.load_bundle(reference)?;
            self.bundles.insert(reference.to_owned(), b);
        }
        Ok(())
    }
}

/// Everything an executor may touch during one call.
pub struct ExecContext<'a> {
    pub fixtures: &'a FixtureStore,
    pub bundles: &'a mut BundleStore,
    /// Root for rendered images; observations carry paths relative to it.
    pub out_dir: &'a Path,
    /// When set, GoogleSearch queries this URL instead of canned text.
    pub search_endpoint: Option<&'a str>,
    /// Bundle references created or modified by the current call.
    pub mutated: BTreeSet<String>,
}

impl<'a> ExecContext<'a> {
    pub fn new(fixtures: &'a FixtureStore, bundles: &'a mut BundleStore, out_dir: &'a Path) -> Self {
        Self {
            fixtures,
            bundles,
            out_dir,
            search_endpoint: None,
            mutated: BTreeSet::new(),
        }
    }

    fn bundle(&mut self, reference: &str) -> Result<&GeoBundle, GeoError> {
        self.bundles.ensure(reference, self.fixtures)?;
        Ok(&self.bundles.bundles[reference])
    }

    fn bundle_mut(&mut self, reference: &str) -> Result<&mut GeoBundle, GeoError> {
        self.bundles.ensure(reference, self.fixtures)?;
        self.mutated.insert(reference.to_owned());
        Ok(self.bundles.bundles.get_mut(reference).expect("ensured above"))
    }

    fn store_bundle(&mut self, reference: &str, bundle: GeoBundle) {
        self.mutated.insert(reference.to_owned());
        self.bundles.insert(reference, bundle);
    }
}

pub const EXECUTOR_IDS: [&str; 24] = [
    "calculator",
    "ocr",
    "draw_box",
    "add_text",
    "google_search",
    "plot",
    "solver",
    "text_to_bbox",
    "image_description",
    "region_attribute_description",
    "count_given_object",
    "change_detection",
    "segment_object_pixels",
    "object_detection",
    "get_area_boundary",
    "add_pois_layer",
    "compute_distance",
    "display_on_map",
    "add_index_layer",
    "compute_index_change",
    "show_index_layer",
    "get_bbox_from_geotiff",
    "display_on_geotiff",
    "terminate",
];

pub fn executor_for(id: &str) -> Option<ExecFn> {
    let f: ExecFn = match id {
        "calculator" => calculator,
        "ocr" => ocr,
        "draw_box" => draw_box,
        "add_text" => add_text,
        "google_search" => google_search,
        "plot" => plot,
        "solver" => solver,
        "text_to_bbox" => text_to_bbox,
        "image_description" => image_description,
        "region_attribute_description" => region_attribute_description,
        "count_given_object" => count_given_object,
        "change_detection" => change_detection,
        "segment_object_pixels" => segment_object_pixels,
        "object_detection" => object_detection,
        "get_area_boundary" => get_area_boundary,
        "add_pois_layer" => add_pois_layer,
        "compute_distance" => compute_distance,
        "display_on_map" => display_on_map,
        "add_index_layer" => add_index_layer,
        "compute_index_change" => compute_index_change,
        "show_index_layer" => show_index_layer,
        "get_bbox_from_geotiff" => get_bbox_from_geotiff,
        "display_on_geotiff" => display_on_geotiff,
        "terminate" => terminate,
        _ => return None,
    };
    Some(f)
}

// --- argument access ------------------------------------------------------

fn arg<'v>(args: &'v Value, name: &str) -> Option<&'v Value> {
    args.get(name).filter(|v| !v.is_null())
}

fn str_arg<'v>(args: &'v Value, name: &str) -> Result<&'v str, GeoError> {
    arg(args, name)
        .and_then(Value::as_str)
        .ok_or_else(|| GeoError::InvalidArgument(format!("`{name}` must be a string")))
}

fn opt_str<'v>(args: &'v Value, name: &str) -> Option<&'v str> {
    arg(args, name).and_then(Value::as_str)
}

fn num_arg(args: &Value, name: &str) -> Result<Option<f64>, GeoError> {
    match arg(args, name) {
        None => Ok(None),
        Some(v) => v
            .as_f64()
            .map(Some)
            .ok_or_else(|| GeoError::InvalidArgument(format!("`{name}` must be a number"))),
    }
}

fn nums_arg(args: &Value, name: &str) -> Result<Option<Vec<f64>>, GeoError> {
    match arg(args, name) {
        None => Ok(None),
        Some(v) => v
            .as_array()
            .and_then(|a| a.iter().map(Value::as_f64).collect::<Option<Vec<_>>>())
            .map(Some)
            .ok_or_else(|| GeoError::InvalidArgument(format!("`{name}` must be an array of numbers"))),
    }
}

fn box_arg(args: &Value, name: &str) -> Result<Option<[f64; 4]>, GeoError> {
    match nums_arg(args, name)? {
        None => Ok(None),
        Some(v) if v.len() == 4 => Ok(Some([v[0], v[1], v[2], v[3]])),
        Some(_) => Err(GeoError::InvalidArgument(format!("`{name}` must have 4 numbers"))),
    }
}

fn strings_arg(args: &Value, name: &str) -> Result<Vec<String>, GeoError> {
    arg(args, name)
        .and_then(Value::as_array)
        .and_then(|a| a.iter().map(|v| v.as_str().map(str::to_owned)).collect::<Option<Vec<_>>>())
        .ok_or_else(|| GeoError::InvalidArgument(format!("`{name}` must be an array of strings")))
}

fn slug(s: &str) -> String {
    let mut out: String = s
        .trim()
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect();
    while out.contains("__") {
        out = out.replace("__", "_");
    }
    out.trim_matches('_').to_owned()
}

/// Relative output path for a rendering tool, derived from the call itself.
fn render_path(tool: &str, args: &Value) -> String {
    let digest = canonical::sha256_hex(canonical::canonical_value(args).as_bytes());
    format!("renders/{tool}_{}.png", &digest[..16])
}

fn save(ctx: &ExecContext<'_>, img: &image::RgbImage, rel: &str) -> Result<Value, GeoError> {
    let digest = render::save_png(img, &ctx.out_dir.join(rel))?;
    Ok(json!({ "image_path": rel, "digest": digest }))
}

/// Canvas for image-annotation tools: fixture images are blank canvases of
/// their declared size; anything else must be a previously rendered PNG.
fn base_image(ctx: &ExecContext<'_>, image: &str) -> Result<image::RgbImage, GeoError> {
    if let Some((w, h)) = ctx.fixtures.image_size(image) {
        return Ok(render::blank(w, h));
    }
    let rendered = ctx.out_dir.join(image);
    if rendered.is_file() {
        return render::load_png(&rendered);
    }
    Err(GeoError::UnknownImage(image.to_owned()))
}

// --- utility tools --------------------------------------------------------

fn calculator(args: &Value, _: &mut ExecContext<'_>) -> Result<Value, GeoError> {
    let v = calculator_eval(str_arg(args, "expression")?)?;
    Ok(json!({ "result": v }))
}

fn solver(args: &Value, _: &mut ExecContext<'_>) -> Result<Value, GeoError> {
    Ok(solver_eval(str_arg(args, "command")?)?)
}

fn google_search(args: &Value, ctx: &mut ExecContext<'_>) -> Result<Value, GeoError> {
    let query = str_arg(args, "query")?;
    if let Some(endpoint) = ctx.search_endpoint {
        let body = reqwest::blocking::Client::new()
            .get(endpoint)
            .query(&[("q", query)])
            .send()
            .and_then(|r| r.error_for_status())
            .and_then(|r| r.text())
            .map_err(|e| GeoError::IoFailure(e.to_string()))?;
        return Ok(json!({ "results": body, "offline": false }));
    }
    let text = ctx
        .fixtures
        .text(query)
        .ok_or_else(|| GeoError::NoCannedText(query.to_owned()))?;
    Ok(json!({ "results": text, "offline": true }))
}

fn plot(args: &Value, ctx: &mut ExecContext<'_>) -> Result<Value, GeoError> {
    let command = str_arg(args, "command")?.trim();
    let (kind, body) = command
        .split_once('(')
        .and_then(|(k, rest)| rest.strip_suffix(')').map(|b| (k.trim(), b)))
        .ok_or_else(|| GeoError::InvalidArgument("plot command must look like bar(1, 2, 3)".into()))?;
    if kind != "bar" && kind != "line" {
        return Err(GeoError::InvalidArgument(format!("unknown plot kind `{kind}`")));
    }
    let values = if body.trim().is_empty() {
        Vec::new()
    } else {
        body.split(',').map(calculator_eval).collect::<Result<Vec<_>, _>>()?
    };
    let img = render::render_plot(kind, &values);
    save(ctx, &img, &render_path("Plot", args))
}

fn draw_box(args: &Value, ctx: &mut ExecContext<'_>) -> Result<Value, GeoError> {
    let image = str_arg(args, "image")?;
    let bbox = box_arg(args, "bbox")?.ok_or_else(|| GeoError::InvalidArgument("`bbox` is required".into()))?;
    let mut img = base_image(ctx, image)?;
    render::rect(&mut img, bbox, [214, 39, 40]);
    if let Some(label) = opt_str(args, "label") {
        render::text_mark(&mut img, label, (bbox[0] as i64, bbox[1] as i64 - 9), [214, 39, 40]);
    }
    save(ctx, &img, &render_path("DrawBox", args))
}

fn add_text(args: &Value, ctx: &mut ExecContext<'_>) -> Result<Value, GeoError> {
    let image = str_arg(args, "image")?;
    let text = str_arg(args, "text")?;
    let pos = nums_arg(args, "position")?.unwrap_or_default();
    if pos.len() != 2 {
        return Err(GeoError::InvalidArgument("`position` must be [x, y]".into()));
    }
    let mut img = base_image(ctx, image)?;
    let color = render::color_by_name(opt_str(args, "color"));
    render::text_mark(&mut img, text, (pos[0].round() as i64, pos[1].round() as i64), color);
    save(ctx, &img, &render_path("AddText", args))
}

fn terminate(args: &Value, _: &mut ExecContext<'_>) -> Result<Value, GeoError> {
    Ok(json!({ "answer": str_arg(args, "answer")? }))
}

// --- perception oracles ---------------------------------------------------

fn ocr(args: &Value, ctx: &mut ExecContext<'_>) -> Result<Value, GeoError> {
    let image = str_arg(args, "image")?;
    if !ctx.fixtures.knows_image(image) {
        return Err(GeoError::UnknownImage(image.to_owned()));
    }
    let text = ctx
        .fixtures
        .text(image)
        .ok_or_else(|| GeoError::NoCannedText(image.to_owned()))?;
    let boxes = ctx
        .fixtures
        .annotation(image, "text")
        .map(|a| a.boxes.clone())
        .unwrap_or_default();
    Ok(json!({ "text": text, "boxes": boxes }))
}

fn text_to_bbox(args: &Value, ctx: &mut ExecContext<'_>) -> Result<Value, GeoError> {
    let (image, label) = (str_arg(args, "image")?, str_arg(args, "text")?);
    let ann = ctx.fixtures.annotation(image, label)?;
    let first = ann
        .boxes
        .first()
        .ok_or_else(|| GeoError::UnknownLabel(format!("{label} has no box in {image}")))?;
    Ok(json!({ "bbox": first }))
}

fn image_description(args: &Value, ctx: &mut ExecContext<'_>) -> Result<Value, GeoError> {
    let ann = ctx.fixtures.annotation(str_arg(args, "image")?, "scene")?;
    Ok(json!({ "caption": ann.caption }))
}

fn region_attribute_description(args: &Value, ctx: &mut ExecContext<'_>) -> Result<Value, GeoError> {
    let ann = ctx
        .fixtures
        .annotation(str_arg(args, "image")?, str_arg(args, "attribute")?)?;
    Ok(json!({ "description": ann.caption }))
}

fn count_given_object(args: &Value, ctx: &mut ExecContext<'_>) -> Result<Value, GeoError> {
    let ann = ctx.fixtures.annotation(str_arg(args, "image")?, str_arg(args, "text")?)?;
    let count = match box_arg(args, "bbox")? {
        None => ann.boxes.len(),
        Some([x1, y1, x2, y2]) => ann
            .boxes
            .iter()
            .filter(|b| {
                let (cx, cy) = ((b[0] + b[2]) / 2.0, (b[1] + b[3]) / 2.0);
                cx >= x1 && cx <= x2 && cy >= y1 && cy <= y2
            })
            .count(),
    };
    Ok(json!({ "count": count }))
}

fn change_detection(args: &Value, ctx: &mut ExecContext<'_>) -> Result<Value, GeoError> {
    let pre = str_arg(args, "pre_image")?;
    if !ctx.fixtures.knows_image(pre) {
        return Err(GeoError::UnknownImage(pre.to_owned()));
    }
    let ann = ctx
        .fixtures
        .annotation(str_arg(args, "post_image")?, str_arg(args, "text")?)?;
    Ok(json!({ "description": ann.caption }))
}

fn segment_object_pixels(args: &Value, ctx: &mut ExecContext<'_>) -> Result<Value, GeoError> {
    // The optional `flag` has no effect on the fixture oracle.
    let ann = ctx.fixtures.annotation(str_arg(args, "image")?, str_arg(args, "text")?)?;
    let total: u64 = ann.masks_px.iter().sum();
    Ok(json!({ "pixel_counts": ann.masks_px, "total": total }))
}

fn object_detection(args: &Value, ctx: &mut ExecContext<'_>) -> Result<Value, GeoError> {
    let image = str_arg(args, "image")?;
    if !ctx.fixtures.knows_image(image) {
        return Err(GeoError::UnknownImage(image.to_owned()));
    }
    let detections: Vec<Value> = ctx
        .fixtures
        .annotations_for(image)
        .into_iter()
        .filter(|(label, _)| *label != "text")
        .flat_map(|(label, a)| {
            a.boxes
                .iter()
                .map(move |b| json!({ "label": label, "bbox": b, "score": 1.0 }))
        })
        .collect();
    Ok(json!({ "detections": detections }))
}

// --- GIS ------------------------------------------------------------------

fn get_area_boundary(args: &Value, ctx: &mut ExecContext<'_>) -> Result<Value, GeoError> {
    let buffer_m = num_arg(args, "buffer_m")?.unwrap_or(0.0);
    if !(buffer_m >= 0.0 && buffer_m.is_finite()) {
        return Err(GeoError::InvalidArgument("`buffer_m` must be a non-negative number".into()));
    }
    let (ring, provenance, reference) = match (opt_str(args, "place"), box_arg(args, "bbox")?) {
        (Some(place), _) => (
            ctx.fixtures.place(place)?.to_vec(),
            place.to_owned(),
            format!("{}.gpkg", slug(place)),
        ),
        (None, Some(bbox)) => (rectangle(bbox), "bbox".to_owned(), "area.gpkg".to_owned()),
        (None, None) => return Err(GeoError::InvalidArgument("one of `place` or `bbox` is required".into())),
    };
    let ring = if buffer_m > 0.0 {
        let env = envelope(&ring).ok_or_else(|| GeoError::InvalidBundle("empty boundary".into()))?;
        rectangle(buffer_envelope(env, buffer_m))
    } else {
        ring
    };
    let bundle = GeoBundle::with_boundary(ring, provenance);
    let bbox = bundle.bbox;
    ctx.store_bundle(&reference, bundle);
    Ok(json!({ "geopackage": reference, "layer": "boundary", "bbox": bbox }))
}

fn add_pois_layer(args: &Value, ctx: &mut ExecContext<'_>) -> Result<Value, GeoError> {
    let reference = str_arg(args, "geopackage")?;
    let query = str_arg(args, "query")?;
    let layer = str_arg(args, "layer_name")?;
    let fixtures = ctx.fixtures;
    let bundle = ctx.bundle_mut(reference)?;
    let ring = bundle.boundary_ring().ok_or(GeoError::NoBoundary)?.to_vec();
    let features: Vec<Feature> = fixtures
        .pois(&bundle.provenance, query)?
        .iter()
        .filter(|f| f.geometry.positions().iter().all(|p| point_in_polygon(*p, &ring)))
        .cloned()
        .collect();
    let count = features.len();
    bundle.put_layer(layer, features);
    Ok(json!({ "geopackage": reference, "layer": layer, "count": count }))
}

fn point_layer(bundle: &GeoBundle, name: &str) -> Result<Vec<(LonLatName, [f64; 2])>, GeoError> {
    let features = bundle.layer(name)?;
    if features.is_empty() {
        return Err(GeoError::EmptyLayer(name.to_owned()));
    }
    features
        .iter()
        .map(|f| {
            f.geometry
                .as_point()
                .map(|p| (f.name().map(str::to_owned), p))
                .ok_or_else(|| GeoError::InvalidArgument(format!("layer `{name}` holds non-point features")))
        })
        .collect()
}

type LonLatName = Option<String>;

fn compute_distance(args: &Value, ctx: &mut ExecContext<'_>) -> Result<Value, GeoError> {
    let reference = str_arg(args, "geopackage")?;
    let source = str_arg(args, "source_layer")?;
    let target = str_arg(args, "target_layer")?;
    let bundle = ctx.bundle_mut(reference)?;
    let sources = point_layer(bundle, source)?;
    let targets = point_layer(bundle, target)?;
    let target_pts: Vec<[f64; 2]> = targets.iter().map(|t| t.1).collect();

    let mut distances = Vec::with_capacity(sources.len());
    let mut links = Vec::with_capacity(sources.len());
    for (i, (name, p)) in sources.iter().enumerate() {
        let (j, d) = nearest(*p, &target_pts).expect("targets non-empty");
        distances.push(d);
        let mut f = Feature {
            geometry: Geometry::LineString(vec![*p, target_pts[j]]),
            properties: BTreeMap::new(),
        }
        .with_property("source_index", i)
        .with_property("target_index", j)
        .with_property("distance_m", d);
        if let Some(n) = name {
            f = f.with_property("source_name", n.as_str());
        }
        if let Some(n) = &targets[j].0 {
            f = f.with_property("target_name", n.as_str());
        }
        links.push(f);
    }
    let links_layer = format!("{source}_to_{target}");
    bundle.put_layer(&links_layer, links);

    let min = distances.iter().copied().fold(f64::INFINITY, f64::min);
    let max = distances.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = distances.iter().sum::<f64>() / distances.len() as f64;
    let summary = format!(
        "{} {source} features matched to nearest {target}: min {min:.1} m, mean {mean:.1} m, max {max:.1} m",
        distances.len()
    );
    Ok(json!({
        "summary": summary,
        "links_layer": links_layer,
        "distances_m": distances,
        "min_m": min,
        "mean_m": mean,
        "max_m": max,
    }))
}

fn display_on_map(args: &Value, ctx: &mut ExecContext<'_>) -> Result<Value, GeoError> {
    let reference = str_arg(args, "geopackage")?;
    let layers = strings_arg(args, "layers")?;
    let img = render::render_map(ctx.bundle(reference)?, &layers)?;
    save(ctx, &img, &render_path("DisplayOnMap", args))
}

fn index_kind(args: &Value) -> Result<IndexKind, GeoError> {
    str_arg(args, "index_type")?.parse()
}

fn add_index_layer(args: &Value, ctx: &mut ExecContext<'_>) -> Result<Value, GeoError> {
    let reference = str_arg(args, "geopackage")?;
    let kind = index_kind(args)?;
    let year = arg(args, "year")
        .and_then(Value::as_i64)
        .ok_or_else(|| GeoError::InvalidArgument("`year` must be an integer".into()))?;
    let layer = str_arg(args, "layer_name")?;
    let fixtures = ctx.fixtures;
    let bundle = ctx.bundle_mut(reference)?;
    let scene = fixtures.scene(&bundle.provenance, year)?;
    let values = spectral::compute_index(scene, kind)?;
    let stats = band_stats(&values, scene.nodata);
    let classes = kind.default_classes().counts(&values, scene.nodata);
    bundle.put_raster(layer, scene.with_single_band(INDEX_BAND, values));
    Ok(json!({
        "geopackage": reference,
        "layer": layer,
        "index": kind,
        "year": year,
        "stats": stats,
        "classes": classes,
    }))
}

fn compute_index_change(args: &Value, ctx: &mut ExecContext<'_>) -> Result<Value, GeoError> {
    let reference = str_arg(args, "geopackage")?;
    let kind = index_kind(args)?;
    let earlier = str_arg(args, "earlier_layer")?;
    let later = str_arg(args, "later_layer")?;
    let out_layer = opt_str(args, "layer_name")
        .map(str::to_owned)
        .unwrap_or_else(|| format!("{}_change", kind.to_string().to_lowercase()));
    let bundle = ctx.bundle_mut(reference)?;
    let e = bundle.raster(earlier)?;
    let l = bundle.raster(later)?;
    let values = spectral::index_change(e, l)?;
    let stats = band_stats(&values, e.nodata);
    let classes = spectral::ClassScheme::symmetric(0.1).counts(&values, e.nodata);
    let grid = e.with_single_band(INDEX_BAND, values);
    bundle.put_raster(&out_layer, grid);
    Ok(json!({
        "geopackage": reference,
        "change_layer": out_layer,
        "index": kind,
        "stats": stats,
        "classes": classes,
    }))
}

fn show_index_layer(args: &Value, ctx: &mut ExecContext<'_>) -> Result<Value, GeoError> {
    let reference = str_arg(args, "geopackage")?;
    let kind = index_kind(args)?;
    let layer = str_arg(args, "layer_name")?;
    let grid = ctx.bundle(reference)?.raster(layer)?.clone();
    let scheme = kind.default_classes();
    let values = grid.band(INDEX_BAND)?;
    let classes = scheme.counts(values, grid.nodata);
    let img = render::render_classes(&grid, INDEX_BAND, &scheme)?;
    let mut out = save(ctx, &img, &render_path("ShowIndexLayer", args))?;
    out["layer"] = json!(layer);
    out["classes"] = json!(classes);
    Ok(out)
}

fn geotiff_grid(ctx: &mut ExecContext<'_>, reference: &str) -> Result<(GeoBundle, super::bundle::RasterGrid), GeoError> {
    let bundle = ctx.bundle(reference)?.clone();
    let grid = bundle
        .rasters
        .values()
        .next()
        .cloned()
        .ok_or_else(|| GeoError::MissingMetadata(format!("{reference} holds no raster")))?;
    Ok((bundle, grid))
}

fn get_bbox_from_geotiff(args: &Value, ctx: &mut ExecContext<'_>) -> Result<Value, GeoError> {
    let reference = str_arg(args, "geotiff")?;
    let (source, grid) = geotiff_grid(ctx, reference)?;
    let bbox = grid.bbox();
    let stem = Path::new(reference)
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("geotiff");
    let out_ref = format!("{}_bbox.gpkg", slug(stem));
    let provenance = if source.provenance.is_empty() {
        reference.to_owned()
    } else {
        source.provenance
    };
    ctx.store_bundle(&out_ref, GeoBundle::rectangle_boundary(bbox, provenance));
    Ok(json!({ "geopackage": out_ref, "layer": "boundary", "bbox": bbox }))
}

fn display_on_geotiff(args: &Value, ctx: &mut ExecContext<'_>) -> Result<Value, GeoError> {
    let reference = str_arg(args, "geopackage")?;
    let layers = strings_arg(args, "layers")?;
    let (_, grid) = geotiff_grid(ctx, str_arg(args, "geotiff")?)?;
    let img = render::render_over_raster(&grid, ctx.bundle(reference)?, &layers)?;
    save(ctx, &img, &render_path("DisplayOnGeotiff", args))
}
