//! Seeded input generators shared by the benchmarks.

use std::collections::BTreeMap;
use std::path::PathBuf;

use geoagent_core::geotools::geometry::LonLat;
use geoagent_core::geotools::{RasterGrid, NODATA};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixtures_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

/// `n` points scattered over roughly a 50 km square around Los Angeles.
pub fn random_points(n: usize, seed: u64) -> Vec<LonLat> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| [rng.random_range(-118.6..-118.1), rng.random_range(33.8..34.3)])
        .collect()
}

/// Square raster with the four reflectance bands the index tools read.
pub fn synthetic_grid(side: usize, seed: u64) -> RasterGrid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bands = BTreeMap::new();
    for name in ["nir", "red", "swir1", "swir2"] {
        let band: Vec<f64> = (0..side * side).map(|_| rng.random_range(0.01..0.6)).collect();
        bands.insert(name.to_owned(), band);
    }
    RasterGrid {
        width: side,
        height: side,
        origin: [-118.6, 34.1],
        pixel_size: [1e-4, -1e-4],
        nodata: NODATA,
        bands,
    }
}

/// Random permutation of `0..n`.
pub fn shuffled(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<usize> = (0..n).collect();
    v.shuffle(&mut rng);
    v
}
