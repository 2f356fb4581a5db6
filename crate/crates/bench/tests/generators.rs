use geoagent_bench::{random_points, shuffled, synthetic_grid};
use geoagent_core::geotools::{compute_index, IndexKind};

#[test]
fn generators_are_seeded() {
    assert_eq!(random_points(50, 1), random_points(50, 1));
    assert_ne!(random_points(50, 1), random_points(50, 2));
    assert_eq!(shuffled(100, 4), shuffled(100, 4));
}

#[test]
fn shuffled_is_a_permutation() {
    let mut v = shuffled(257, 9);
    v.sort_unstable();
    assert_eq!(v, (0..257).collect::<Vec<_>>());
}

#[test]
fn synthetic_grid_feeds_every_index() {
    let grid = synthetic_grid(16, 5);
    for kind in [IndexKind::Ndvi, IndexKind::Nbr, IndexKind::Ndbi] {
        let band = compute_index(&grid, kind).unwrap();
        assert_eq!(band.len(), 256);
        assert!(band.iter().all(|v| (-1.0..=1.0).contains(v)));
    }
}
