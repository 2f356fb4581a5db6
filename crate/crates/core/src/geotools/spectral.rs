//! Normalized-difference spectral indices, index change, and class statistics.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::bundle::RasterGrid;
use super::GeoError;

/// Denominators smaller than this yield nodata.
pub const DENOMINATOR_GUARD: f64 = 1e-12;
/// Name of the single band stored in index and change layers.
pub const INDEX_BAND: &str = "index";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum IndexKind {
    Ndvi,
    Nbr,
    Ndbi,
}

impl IndexKind {
    /// Ordered band pair `(a, b)` of `(a - b) / (a + b)`.
    pub fn bands(self) -> (&'static str, &'static str) {
        match self {
            IndexKind::Ndvi => ("nir", "red"),
            IndexKind::Nbr => ("nir", "swir2"),
            IndexKind::Ndbi => ("swir1", "nir"),
        }
    }

    pub fn default_classes(self) -> ClassScheme {
        match self {
            IndexKind::Ndvi => ClassScheme {
                labels: ["barren".into(), "sparse".into(), "dense".into()],
                low: 0.2,
                high: 0.5,
            },
            IndexKind::Nbr | IndexKind::Ndbi => ClassScheme::symmetric(0.1),
        }
    }
}

impl fmt::Display for IndexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IndexKind::Ndvi => "NDVI",
            IndexKind::Nbr => "NBR",
            IndexKind::Ndbi => "NDBI",
        })
    }
}

impl FromStr for IndexKind {
    type Err = GeoError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "NDVI" => Ok(IndexKind::Ndvi),
            "NBR" => Ok(IndexKind::Nbr),
            "NDBI" => Ok(IndexKind::Ndbi),
            other => Err(GeoError::InvalidArgument(format!("unknown index type `{other}`"))),
        }
    }
}

/// Normalized difference of one pixel pair.
pub fn normalized_difference(a: f64, b: f64, nodata: f64) -> f64 {
    if a == nodata || b == nodata || !a.is_finite() || !b.is_finite() {
        return nodata;
    }
    let den = a + b;
    if den.abs() < DENOMINATOR_GUARD {
        return nodata;
    }
    let v = (a - b) / den;
    // Negative reflectances can push the ratio outside [-1, 1]; such pixels are invalid.
    if (-1.0..=1.0).contains(&v) {
        v
    } else {
        nodata
    }
}

/// Per-pixel index band for `grid`.
pub fn compute_index(grid: &RasterGrid, kind: IndexKind) -> Result<Vec<f64>, GeoError> {
    let (a_name, b_name) = kind.bands();
    let a = grid.band(a_name)?;
    let b = grid.band(b_name)?;
    Ok(a.iter()
        .zip(b)
        .map(|(&a, &b)| normalized_difference(a, b, grid.nodata))
        .collect())
}

/// `later - earlier` per pixel; nodata where either side is nodata.
pub fn index_change(earlier: &RasterGrid, later: &RasterGrid) -> Result<Vec<f64>, GeoError> {
    if !earlier.same_geometry(later) {
        return Err(GeoError::GridMismatch);
    }
    let e = earlier.band(INDEX_BAND)?;
    let l = later.band(INDEX_BAND)?;
    let (en, ln) = (earlier.nodata, later.nodata);
    Ok(e.iter()
        .zip(l)
        .map(|(&e, &l)| if e == en || l == ln { en } else { l - e })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandStats {
    pub valid_pixels: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub frac_negative: f64,
    pub frac_positive: f64,
}

/// Statistics over non-nodata pixels; all zeros when no pixel is valid.
pub fn band_stats(values: &[f64], nodata: f64) -> BandStats {
    let valid: Vec<f64> = values.iter().copied().filter(|v| *v != nodata).collect();
    if valid.is_empty() {
        return BandStats {
            valid_pixels: 0,
            mean: 0.0,
            min: 0.0,
            max: 0.0,
            frac_negative: 0.0,
            frac_positive: 0.0,
        };
    }
    let n = valid.len() as f64;
    BandStats {
        valid_pixels: valid.len(),
        mean: valid.iter().sum::<f64>() / n,
        min: valid.iter().copied().fold(f64::INFINITY, f64::min),
        max: valid.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        frac_negative: valid.iter().filter(|v| **v < 0.0).count() as f64 / n,
        frac_positive: valid.iter().filter(|v| **v > 0.0).count() as f64 / n,
    }
}

/// Three-way classification: `< low`, `[low, high]`, `> high`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScheme {
    pub labels: [String; 3],
    pub low: f64,
    pub high: f64,
}

impl ClassScheme {
    pub fn symmetric(t: f64) -> Self {
        Self {
            labels: ["negative".into(), "neutral".into(), "positive".into()],
            low: -t,
            high: t,
        }
    }

    pub fn classify(&self, v: f64) -> usize {
        if v < self.low {
            0
        } else if v <= self.high {
            1
        } else {
            2
        }
    }

    /// Pixel counts per class label, plus `nodata`.
    pub fn counts(&self, values: &[f64], nodata: f64) -> BTreeMap<String, usize> {
        let mut out: BTreeMap<String, usize> = self.labels.iter().map(|l| (l.clone(), 0)).collect();
        out.insert("nodata".into(), 0);
        for &v in values {
            let key = if v == nodata {
                "nodata"
            } else {
                self.labels[self.classify(v)].as_str()
            };
            *out.get_mut(key).expect("label pre-seeded") += 1;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geotools::bundle::NODATA;

    fn grid(bands: &[(&str, Vec<f64>)], w: usize, h: usize) -> RasterGrid {
        RasterGrid {
            width: w,
            height: h,
            origin: [0.0, 1.0],
            pixel_size: [0.1, -0.1],
            nodata: NODATA,
            bands: bands.iter().map(|(n, v)| (n.to_string(), v.clone())).collect(),
        }
    }

    #[test]
    fn ndvi_examples() {
        let g = grid(&[("nir", vec![0.6, 0.3]), ("red", vec![0.2, 0.3])], 2, 1);
        let out = compute_index(&g, IndexKind::Ndvi).unwrap();
        assert!((out[0] - 0.5).abs() < 1e-15);
        assert_eq!(out[1], 0.0);
    }

    #[test]
    fn nodata_and_guard() {
        assert_eq!(normalized_difference(NODATA, 0.2, NODATA), NODATA);
        assert_eq!(normalized_difference(0.0, 0.0, NODATA), NODATA);
        assert_eq!(normalized_difference(1.0, -0.5, NODATA), NODATA);
    }

    #[test]
    fn missing_band() {
        let g = grid(&[("nir", vec![0.6])], 1, 1);
        assert!(matches!(compute_index(&g, IndexKind::Nbr), Err(GeoError::MissingBand(b)) if b == "swir2"));
    }

    #[test]
    fn ndbi_uses_swir1_minus_nir() {
        let g = grid(&[("nir", vec![0.2]), ("swir1", vec![0.6])], 1, 1);
        assert!((compute_index(&g, IndexKind::Ndbi).unwrap()[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn change_is_later_minus_earlier() {
        let e = grid(&[(INDEX_BAND, vec![0.5, NODATA])], 2, 1);
        let l = grid(&[(INDEX_BAND, vec![0.1, 0.3])], 2, 1);
        let c = index_change(&e, &l).unwrap();
        assert!((c[0] + 0.4).abs() < 1e-15);
        assert_eq!(c[1], NODATA);
        let mut other = l.clone();
        other.origin = [5.0, 5.0];
        assert!(matches!(index_change(&e, &other), Err(GeoError::GridMismatch)));
    }

    #[test]
    fn class_boundaries() {
        let s = IndexKind::Ndvi.default_classes();
        assert_eq!(s.classify(0.1999), 0);
        assert_eq!(s.classify(0.2), 1);
        assert_eq!(s.classify(0.5), 1);
        assert_eq!(s.classify(0.5001), 2);
        let c = s.counts(&[0.1, 0.3, 0.6, 0.7, NODATA], NODATA);
        assert_eq!(c["barren"], 1);
        assert_eq!(c["sparse"], 1);
        assert_eq!(c["dense"], 2);
        assert_eq!(c["nodata"], 1);
    }

    #[test]
    fn stats_of_empty_band_are_zero() {
        let s = band_stats(&[NODATA, NODATA], NODATA);
        assert_eq!(s.valid_pixels, 0);
        assert_eq!(s.mean, 0.0);
    }
}
