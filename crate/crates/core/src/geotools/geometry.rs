//! Planar vector geometry in lon/lat degrees.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub type LonLat = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "coordinates", rename_all = "lowercase")]
pub enum Geometry {
    Point(LonLat),
    /// Single closed ring (first == last), at least four positions.
    Polygon(Vec<LonLat>),
    LineString(Vec<LonLat>),
}

impl Geometry {
    pub fn positions(&self) -> &[LonLat] {
        match self {
            Geometry::Point(p) => std::slice::from_ref(p),
            Geometry::Polygon(r) | Geometry::LineString(r) => r,
        }
    }

    pub fn as_point(&self) -> Option<LonLat> {
        match self {
            Geometry::Point(p) => Some(*p),
            _ => None,
        }
    }

    /// `None` when the geometry is well-formed, otherwise the reason.
    pub fn validity_problem(&self) -> Option<String> {
        if self.positions().iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Some("non-finite coordinate".into());
        }
        match self {
            Geometry::Point(_) => None,
            Geometry::LineString(l) if l.len() < 2 => Some("line with fewer than 2 positions".into()),
            Geometry::LineString(_) => None,
            Geometry::Polygon(ring) => {
                if ring.len() < 4 {
                    Some(format!("ring has {} positions, need at least 4", ring.len()))
                } else if !ring_is_closed(ring) {
                    Some("ring is not closed".into())
                } else if !ring_is_simple(ring) {
                    Some("ring self-intersects".into())
                } else {
                    None
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feature {
    pub geometry: Geometry,
    #[serde(default)]
    pub properties: BTreeMap<String, Value>,
}

impl Feature {
    pub fn point(lon: f64, lat: f64) -> Self {
        Self {
            geometry: Geometry::Point([lon, lat]),
            properties: BTreeMap::new(),
        }
    }

    pub fn with_property(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.properties.insert(key.to_owned(), value.into());
        self
    }

    pub fn name(&self) -> Option<&str> {
        self.properties.get("name").and_then(Value::as_str)
    }
}

pub fn ring_is_closed(ring: &[LonLat]) -> bool {
    ring.len() >= 2 && ring.first() == ring.last()
}

/// Axis-aligned rectangle ring, counter-clockwise from the south-west corner.
pub fn rectangle(bbox: [f64; 4]) -> Vec<LonLat> {
    let [w, s, e, n] = bbox;
    vec![[w, s], [e, s], [e, n], [w, n], [w, s]]
}

/// `[west, south, east, north]` envelope of a set of positions.
pub fn envelope(points: &[LonLat]) -> Option<[f64; 4]> {
    let first = points.first()?;
    let mut b = [first[0], first[1], first[0], first[1]];
    for p in points {
        b[0] = b[0].min(p[0]);
        b[1] = b[1].min(p[1]);
        b[2] = b[2].max(p[0]);
        b[3] = b[3].max(p[1]);
    }
    Some(b)
}

fn cross(o: LonLat, a: LonLat, b: LonLat) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn on_segment(p: LonLat, a: LonLat, b: LonLat) -> bool {
    cross(a, b, p) == 0.0
        && p[0] >= a[0].min(b[0])
        && p[0] <= a[0].max(b[0])
        && p[1] >= a[1].min(b[1])
        && p[1] <= a[1].max(b[1])
}

/// Closed-segment intersection test, collinear overlaps included.
pub fn segments_intersect(a1: LonLat, a2: LonLat, b1: LonLat, b2: LonLat) -> bool {
    let d1 = cross(b1, b2, a1);
    let d2 = cross(b1, b2, a2);
    let d3 = cross(a1, a2, b1);
    let d4 = cross(a1, a2, b2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(a1, b1, b2))
        || (d2 == 0.0 && on_segment(a2, b1, b2))
        || (d3 == 0.0 && on_segment(b1, a1, a2))
        || (d4 == 0.0 && on_segment(b2, a1, a2))
}

/// Segment-pair test: no two non-adjacent edges of the closed ring touch.
pub fn ring_is_simple(ring: &[LonLat]) -> bool {
    let n = ring.len() - 1; // edge count of a closed ring
    if n < 3 {
        return false;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            if segments_intersect(ring[i], ring[i + 1], ring[j], ring[j + 1]) {
                return false;
            }
        }
    }
    true
}

/// Ray-casting containment on a closed ring; points on the boundary count as inside.
pub fn point_in_polygon(p: LonLat, ring: &[LonLat]) -> bool {
    if ring.len() < 2 {
        return false;
    }
    let mut inside = false;
    for w in ring.windows(2) {
        let (a, b) = (w[0], w[1]);
        if on_segment(p, a, b) {
            return true;
        }
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}
