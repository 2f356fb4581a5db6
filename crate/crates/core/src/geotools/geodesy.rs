//! Spherical geodesy helpers. Mean Earth radius, no ellipsoidal correction.

use super::geometry::LonLat;

pub const EARTH_RADIUS_M: f64 = 6_371_008.8;
/// Meters per degree used for envelope buffering.
pub const METERS_PER_DEGREE: f64 = 111_320.0;

/// Great-circle distance in meters between two lon/lat positions.
pub fn haversine_m(a: LonLat, b: LonLat) -> f64 {
    let (lon1, lat1) = (a[0].to_radians(), a[1].to_radians());
    let (lon2, lat2) = (b[0].to_radians(), b[1].to_radians());
    let dlat = lat2 - lat1;
    let dlon = lon2 - lon1;
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

/// Expands `[w, s, e, n]` by `buffer_m` meters on every side.
///
/// Latitude uses 111 320 m per degree; longitude uses 111 320·cos(lat) with
/// `lat` the envelope's center latitude.
pub fn buffer_envelope(bbox: [f64; 4], buffer_m: f64) -> [f64; 4] {
    if buffer_m <= 0.0 {
        return bbox;
    }
    let [w, s, e, n] = bbox;
    let center_lat = ((s + n) / 2.0).to_radians();
    let dlat = buffer_m / METERS_PER_DEGREE;
    let dlon = buffer_m / (METERS_PER_DEGREE * center_lat.cos().max(1e-12));
    [w - dlon, s - dlat, e + dlon, n + dlat]
}

/// Index and distance of the nearest target for one source.
pub fn nearest(source: LonLat, targets: &[LonLat]) -> Option<(usize, f64)> {
    targets
        .iter()
        .enumerate()
        .map(|(i, t)| (i, haversine_m(source, *t)))
        .fold(None, |best, cur| match best {
            Some((_, d)) if d <= cur.1 => best,
            _ => Some(cur),
        })
}
