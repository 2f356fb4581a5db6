//! Deterministic rasterisation of layers, index grids, boxes, text marks and plots to PNG.

use std::path::Path;

use image::{Rgb, RgbImage};

use super::bundle::{GeoBundle, RasterGrid};
use super::geometry::{Geometry, LonLat};
use super::spectral::ClassScheme;
use super::GeoError;
use crate::canonical::sha256_hex;

pub const MAP_SIZE: u32 = 256;

const PALETTE: [[u8; 3]; 6] = [
    [31, 119, 180],
    [214, 39, 40],
    [44, 160, 44],
    [255, 127, 14],
    [148, 103, 189],
    [23, 190, 207],
];
const CLASS_COLORS: [[u8; 3]; 3] = [[215, 48, 39], [254, 224, 139], [26, 152, 80]];
const NODATA_COLOR: [u8; 3] = [200, 200, 200];

pub fn blank(width: u32, height: u32) -> RgbImage {
    RgbImage::from_pixel(width.max(1), height.max(1), Rgb([255, 255, 255]))
}

fn put(img: &mut RgbImage, x: i64, y: i64, c: [u8; 3]) {
    if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
        img.put_pixel(x as u32, y as u32, Rgb(c));
    }
}

pub fn line(img: &mut RgbImage, (x0, y0): (i64, i64), (x1, y1): (i64, i64), c: [u8; 3]) {
    let (dx, dy) = ((x1 - x0).abs(), -(y1 - y0).abs());
    let (sx, sy) = (if x0 < x1 { 1 } else { -1 }, if y0 < y1 { 1 } else { -1 });
    let (mut x, mut y, mut err) = (x0, y0, dx + dy);
    loop {
        put(img, x, y, c);
        if x == x1 && y == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

pub fn rect(img: &mut RgbImage, b: [f64; 4], c: [u8; 3]) {
    let [x1, y1, x2, y2] = b.map(|v| v.round() as i64);
    line(img, (x1, y1), (x2, y1), c);
    line(img, (x2, y1), (x2, y2), c);
    line(img, (x2, y2), (x1, y2), c);
    line(img, (x1, y2), (x1, y1), c);
}

fn dot(img: &mut RgbImage, (x, y): (i64, i64), c: [u8; 3]) {
    for dy in -2..=2 {
        for dx in -2..=2 {
            put(img, x + dx, y + dy, c);
        }
    }
}

/// Glyph-free text mark: one 4x7 cell per byte, bit pattern taken from the byte value.
pub fn text_mark(img: &mut RgbImage, text: &str, at: (i64, i64), c: [u8; 3]) {
    for (i, byte) in text.bytes().enumerate() {
        let x0 = at.0 + 5 * i as i64;
        for bit in 0..7 {
            if byte >> bit & 1 == 1 {
                for dx in 0..4 {
                    put(img, x0 + dx, at.1 + bit as i64, c);
                }
            }
        }
    }
}

pub fn color_by_name(name: Option<&str>) -> [u8; 3] {
    match name.map(|s| s.trim().to_lowercase()).as_deref() {
        Some("red") => [214, 39, 40],
        Some("green") => [44, 160, 44],
        Some("blue") => [31, 119, 180],
        Some("white") => [255, 255, 255],
        Some("yellow") => [255, 221, 0],
        _ => [0, 0, 0],
    }
}

/// Maps lon/lat into pixel space of a square canvas over `bbox`.
struct Projector {
    bbox: [f64; 4],
    w: f64,
    h: f64,
}

impl Projector {
    fn new(bbox: [f64; 4], w: u32, h: u32) -> Self {
        Self {
            bbox,
            w: w as f64,
            h: h as f64,
        }
    }

    fn px(&self, p: LonLat) -> (i64, i64) {
        let [west, south, east, north] = self.bbox;
        let sx = if east > west { (p[0] - west) / (east - west) } else { 0.5 };
        let sy = if north > south { (north - p[1]) / (north - south) } else { 0.5 };
        (
            (sx * (self.w - 1.0)).round() as i64,
            (sy * (self.h - 1.0)).round() as i64,
        )
    }
}

fn draw_layers(img: &mut RgbImage, bundle: &GeoBundle, layers: &[String], bbox: [f64; 4]) -> Result<(), GeoError> {
    let proj = Projector::new(bbox, img.width(), img.height());
    for (i, name) in layers.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        for f in bundle.layer(name)? {
            match &f.geometry {
                Geometry::Point(p) => {
                    let at = proj.px(*p);
                    dot(img, at, color);
                    if let Some(label) = f.name() {
                        text_mark(img, label, (at.0 + 4, at.1 - 3), [0, 0, 0]);
                    }
                }
                Geometry::Polygon(r) | Geometry::LineString(r) => {
                    for w in r.windows(2) {
                        line(img, proj.px(w[0]), proj.px(w[1]), color);
                    }
                }
            }
        }
    }
    Ok(())
}

pub fn render_map(bundle: &GeoBundle, layers: &[String]) -> Result<RgbImage, GeoError> {
    let mut img = blank(MAP_SIZE, MAP_SIZE);
    draw_layers(&mut img, bundle, layers, bundle.bbox)?;
    Ok(img)
}

/// Class-coloured preview of one raster band, upscaled to about `MAP_SIZE`.
pub fn render_classes(grid: &RasterGrid, band: &str, scheme: &ClassScheme) -> Result<RgbImage, GeoError> {
    let values = grid.band(band)?;
    let scale = (MAP_SIZE as usize / grid.width.max(grid.height)).max(1) as u32;
    let mut img = blank(grid.width as u32 * scale, grid.height as u32 * scale);
    for (i, &v) in values.iter().enumerate() {
        let (x, y) = ((i % grid.width) as u32, (i / grid.width) as u32);
        let c = if v == grid.nodata {
            NODATA_COLOR
        } else {
            CLASS_COLORS[scheme.classify(v)]
        };
        for dy in 0..scale {
            for dx in 0..scale {
                img.put_pixel(x * scale + dx, y * scale + dy, Rgb(c));
            }
        }
    }
    Ok(img)
}

/// Greyscale raster background (first band, min-max stretched) with vector layers on top.
pub fn render_over_raster(grid: &RasterGrid, bundle: &GeoBundle, layers: &[String]) -> Result<RgbImage, GeoError> {
    let (_, values) = grid
        .bands
        .iter()
        .next()
        .ok_or_else(|| GeoError::MissingBand("any".into()))?;
    let valid = values.iter().copied().filter(|v| *v != grid.nodata);
    let (lo, hi) = valid.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let scale = (MAP_SIZE as usize / grid.width.max(grid.height)).max(1) as u32;
    let mut img = blank(grid.width as u32 * scale, grid.height as u32 * scale);
    for (i, &v) in values.iter().enumerate() {
        let (x, y) = ((i % grid.width) as u32, (i / grid.width) as u32);
        let g = if v == grid.nodata || hi <= lo {
            0
        } else {
            ((v - lo) / (hi - lo) * 255.0).round() as u8
        };
        for dy in 0..scale {
            for dx in 0..scale {
                img.put_pixel(x * scale + dx, y * scale + dy, Rgb([g, g, g]));
            }
        }
    }
    draw_layers(&mut img, bundle, layers, grid.bbox())?;
    Ok(img)
}

pub fn render_plot(kind: &str, values: &[f64]) -> RgbImage {
    let mut img = blank(MAP_SIZE, MAP_SIZE);
    let axis = [0, 0, 0];
    line(&mut img, (16, 240), (250, 240), axis);
    line(&mut img, (16, 240), (16, 8), axis);
    if values.is_empty() {
        return img;
    }
    let lo = values.iter().copied().fold(0.0, f64::min);
    let hi = values.iter().copied().fold(0.0, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let y_of = |v: f64| (240.0 - (v - lo) / span * 230.0).round() as i64;
    let step = 230.0 / values.len() as f64;
    let x_of = |i: usize| (18.0 + step * (i as f64 + 0.5)).round() as i64;
    match kind {
        "line" => {
            for i in 1..values.len() {
                line(&mut img, (x_of(i - 1), y_of(values[i - 1])), (x_of(i), y_of(values[i])), PALETTE[0]);
            }
        }
        _ => {
            let half = (step * 0.35).max(1.0) as i64;
            for (i, &v) in values.iter().enumerate() {
                let (x, top, base) = (x_of(i), y_of(v), y_of(0.0));
                for xx in (x - half)..=(x + half) {
                    line(&mut img, (xx, top), (xx, base), PALETTE[0]);
                }
            }
        }
    }
    img
}

/// Encodes to PNG at `path` (parents created) and returns the SHA-256 of the file bytes.
pub fn save_png(img: &RgbImage, path: &Path) -> Result<String, GeoError> {
    let io = |e: std::io::Error| GeoError::IoFailure(format!("{}: {e}", path.display()));
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(parent).map_err(io)?;
    let mut bytes = Vec::new();
    img.write_to(&mut std::io::Cursor::new(&mut bytes), image::ImageFormat::Png)
        .map_err(|e| GeoError::IoFailure(e.to_string()))?;
    // Concurrent sessions may render the same file; readers never see a partial write.
    let mut tmp = tempfile::NamedTempFile::new_in(parent).map_err(io)?;
    std::io::Write::write_all(&mut tmp, &bytes).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(sha256_hex(&bytes))
}

pub fn load_png(path: &Path) -> Result<RgbImage, GeoError> {
    image::open(path)
        .map(|i| i.to_rgb8())
        .map_err(|e| GeoError::IoFailure(format!("{}: {e}", path.display())))
}
