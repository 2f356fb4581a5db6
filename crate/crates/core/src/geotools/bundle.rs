//! The on-disk geo bundle: CRS metadata plus named vector layers and raster grids.
//!
//! ```text
//! <bundle>/meta.json             {crs, bbox, provenance}
//! <bundle>/layers/<name>.json    [Feature, ...]
//! <bundle>/rasters/<name>.json   {width, height, origin, pixel_size, nodata, bands}
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::geometry::{envelope, rectangle, Feature, Geometry, LonLat};
use super::GeoError;
use crate::canonical;

pub const DEFAULT_CRS: &str = "EPSG:4326";
pub const NODATA: f64 = -9999.0;
/// Slack allowed when checking that features sit inside the bundle bbox.
pub const BBOX_SLACK_DEG: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RasterGrid {
    pub width: usize,
    pub height: usize,
    /// Top-left corner.
    pub origin: LonLat,
    /// Degrees per pixel; latitude component negative for north-up grids.
    pub pixel_size: [f64; 2],
    pub nodata: f64,
    pub bands: BTreeMap<String, Vec<f64>>,
}

impl RasterGrid {
    pub fn check(&self) -> Result<(), GeoError> {
        if self.width == 0 || self.height == 0 {
            return Err(GeoError::InvalidBundle("raster with zero extent".into()));
        }
        if self.pixel_size[0] == 0.0 || self.pixel_size[1] == 0.0 {
            return Err(GeoError::InvalidBundle("raster with zero pixel size".into()));
        }
        let n = self.width * self.height;
        for (name, values) in &self.bands {
            if values.len() != n {
                return Err(GeoError::InvalidBundle(format!(
                    "band `{name}` has {} values, expected {n}",
                    values.len()
                )));
            }
        }
        Ok(())
    }

    pub fn band(&self, name: &str) -> Result<&[f64], GeoError> {
        self.bands
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| GeoError::MissingBand(name.to_owned()))
    }

    /// `[w, s, e, n]` footprint.
    pub fn bbox(&self) -> [f64; 4] {
        let [ox, oy] = self.origin;
        let ex = ox + self.width as f64 * self.pixel_size[0];
        let ey = oy + self.height as f64 * self.pixel_size[1];
        [ox.min(ex), oy.min(ey), ox.max(ex), oy.max(ey)]
    }

    pub fn same_geometry(&self, other: &RasterGrid) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.origin == other.origin
            && self.pixel_size == other.pixel_size
    }

    /// A grid with the same georeferencing and a single band.
    pub fn with_single_band(&self, band: &str, values: Vec<f64>) -> RasterGrid {
        RasterGrid {
            width: self.width,
            height: self.height,
            origin: self.origin,
            pixel_size: self.pixel_size,
            nodata: self.nodata,
            bands: BTreeMap::from([(band.to_owned(), values)]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleMeta {
    pub crs: String,
    pub bbox: [f64; 4],
    #[serde(default)]
    pub provenance: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GeoBundle {
    pub crs: String,
    pub bbox: [f64; 4],
    pub vector_layers: BTreeMap<String, Vec<Feature>>,
    pub rasters: BTreeMap<String, RasterGrid>,
    pub provenance: String,
}

impl GeoBundle {
    pub fn new(bbox: [f64; 4], provenance: impl Into<String>) -> Self {
        Self {
            crs: DEFAULT_CRS.to_owned(),
            bbox,
            vector_layers: BTreeMap::new(),
            rasters: BTreeMap::new(),
            provenance: provenance.into(),
        }
    }

    /// Bundle holding one `boundary` polygon whose envelope is the bundle bbox.
    pub fn with_boundary(ring: Vec<LonLat>, provenance: impl Into<String>) -> Self {
        let bbox = envelope(&ring).unwrap_or([0.0; 4]);
        let mut b = Self::new(bbox, provenance);
        b.vector_layers.insert(
            "boundary".into(),
            vec![Feature {
                geometry: Geometry::Polygon(ring),
                properties: BTreeMap::new(),
            }],
        );
        b
    }

    pub fn rectangle_boundary(bbox: [f64; 4], provenance: impl Into<String>) -> Self {
        Self::with_boundary(rectangle(bbox), provenance)
    }

    pub fn meta(&self) -> BundleMeta {
        BundleMeta {
            crs: self.crs.clone(),
            bbox: self.bbox,
            provenance: self.provenance.clone(),
        }
    }

    pub fn has_layer(&self, name: &str) -> bool {
        self.vector_layers.contains_key(name) || self.rasters.contains_key(name)
    }

    pub fn layer(&self, name: &str) -> Result<&[Feature], GeoError> {
        self.vector_layers
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| GeoError::MissingLayer(name.to_owned()))
    }

    pub fn raster(&self, name: &str) -> Result<&RasterGrid, GeoError> {
        self.rasters
            .get(name)
            .ok_or_else(|| GeoError::MissingLayer(name.to_owned()))
    }

    /// The first polygon of the `boundary` layer.
    pub fn boundary_ring(&self) -> Option<&[LonLat]> {
        self.vector_layers.get("boundary")?.iter().find_map(|f| match &f.geometry {
            Geometry::Polygon(r) => Some(r.as_slice()),
            _ => None,
        })
    }

    /// Inserts a vector layer, evicting any raster of the same name.
    pub fn put_layer(&mut self, name: &str, features: Vec<Feature>) {
        self.rasters.remove(name);
        self.vector_layers.insert(name.to_owned(), features);
    }

    /// Inserts a raster layer, evicting any vector layer of the same name.
    pub fn put_raster(&mut self, name: &str, grid: RasterGrid) {
        self.vector_layers.remove(name);
        self.rasters.insert(name.to_owned(), grid);
    }

    /// All invariant violations: features outside the bbox, invalid geometries,
    /// malformed rasters, layer names shared between vector and raster maps.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let [w, s, e, n] = self.bbox;
        if !(w <= e && s <= n) {
            out.push(format!("bbox {:?} is not ordered (W<=E, S<=N)", self.bbox));
        }
        for (name, features) in &self.vector_layers {
            if self.rasters.contains_key(name) {
                out.push(format!("layer `{name}` is both vector and raster"));
            }
            for (i, f) in features.iter().enumerate() {
                if let Some(why) = f.geometry.validity_problem() {
                    out.push(format!("layer `{name}` feature {i}: {why}"));
                }
                let outside = f.geometry.positions().iter().any(|p| {
                    p[0] < w - BBOX_SLACK_DEG
                        || p[0] > e + BBOX_SLACK_DEG
                        || p[1] < s - BBOX_SLACK_DEG
                        || p[1] > n + BBOX_SLACK_DEG
                });
                if outside {
                    out.push(format!("layer `{name}` feature {i} lies outside the bundle bbox"));
                }
            }
        }
        for (name, grid) in &self.rasters {
            if let Err(e) = grid.check() {
                out.push(format!("raster `{name}`: {e}"));
            }
        }
        out
    }

    pub fn load(dir: &Path) -> Result<Self, GeoError> {
        let meta_path = dir.join("meta.json");
        let meta: BundleMeta = read_json(&meta_path).map_err(|e| match e {
            GeoError::IoFailure(_) if !meta_path.exists() => {
                GeoError::MissingMetadata(meta_path.display().to_string())
            }
            other => other,
        })?;
        let mut bundle = GeoBundle {
            crs: meta.crs,
            bbox: meta.bbox,
            provenance: meta.provenance,
            ..Default::default()
        };
        for (name, path) in json_files(&dir.join("layers"))? {
            bundle.vector_layers.insert(name, read_json(&path)?);
        }
        for (name, path) in json_files(&dir.join("rasters"))? {
            let grid: RasterGrid = read_json(&path)?;
            grid.check()?;
            bundle.rasters.insert(name, grid);
        }
        Ok(bundle)
    }

    /// Writes the bundle as canonical JSON files, replacing any previous content.
    pub fn save(&self, dir: &Path) -> Result<(), GeoError> {
        if dir.exists() {
            fs::remove_dir_all(dir).map_err(io_err)?;
        }
        fs::create_dir_all(dir.join("layers")).map_err(io_err)?;
        fs::create_dir_all(dir.join("rasters")).map_err(io_err)?;
        write_json(&dir.join("meta.json"), &self.meta())?;
        for (name, features) in &self.vector_layers {
            write_json(&dir.join("layers").join(format!("{name}.json")), features)?;
        }
        for (name, grid) in &self.rasters {
            write_json(&dir.join("rasters").join(format!("{name}.json")), grid)?;
        }
        Ok(())
    }
}

fn io_err(e: std::io::Error) -> GeoError {
    GeoError::IoFailure(e.to_string())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, GeoError> {
    let text = fs::read_to_string(path).map_err(|e| GeoError::IoFailure(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| GeoError::InvalidBundle(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), GeoError> {
    let mut text = canonical::to_canonical_string(value).map_err(|e| GeoError::IoFailure(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(io_err)
}

fn json_files(dir: &Path) -> Result<Vec<(String, std::path::PathBuf)>, GeoError> {
    if !dir.exists() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err)? {
        let path = entry.map_err(io_err)?.path();
        if path.extension().and_then(|e| e.to_str()) == Some("json") {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                out.push((stem.to_owned(), path.clone()));
            }
        }
    }
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> GeoBundle {
        let mut b = GeoBundle::rectangle_boundary([10.0, 49.0, 11.0, 50.0], "sample");
        b.put_layer("pois", vec![Feature::point(10.5, 49.5).with_property("name", "a")]);
        b.put_raster(
            "scene",
            RasterGrid {
                width: 2,
                height: 1,
                origin: [10.0, 50.0],
                pixel_size: [0.5, -1.0],
                nodata: NODATA,
                bands: BTreeMap::from([("nir".to_string(), vec![0.5, 0.25])]),
            },
        );
        b
    }

    #[test]
    fn disk_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let b = sample();
        b.save(dir.path()).unwrap();
        assert_eq!(GeoBundle::load(dir.path()).unwrap(), b);
    }

    #[test]
    fn missing_meta_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(GeoBundle::load(dir.path()), Err(GeoError::MissingMetadata(_))));
    }

    #[test]
    fn raster_bbox_from_georeferencing() {
        let g = RasterGrid {
            width: 100,
            height: 100,
            origin: [10.0, 50.0],
            pixel_size: [0.01, -0.01],
            nodata: NODATA,
            bands: BTreeMap::new(),
        };
        let b = g.bbox();
        for (got, want) in b.iter().zip([10.0, 49.0, 11.0, 50.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn problems_detects_outside_feature_and_bad_band() {
        let mut b = sample();
        assert!(b.problems().is_empty());
        b.put_layer("far", vec![Feature::point(20.0, 49.5)]);
        b.rasters.get_mut("scene").unwrap().bands.insert("red".into(), vec![0.0]);
        assert_eq!(b.problems().len(), 2);
    }
}
