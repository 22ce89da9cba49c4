//! Colour-mapped PNG of a depth raster.

use bluegreen_core::exposure::{MEAN_THRESHOLD, P90_THRESHOLD};
use bluegreen_core::hydro::MaxDepthRaster;
use serde_json::json;

/// Depths at or below this are drawn transparent (m).
pub const DRY_DEPTH: f64 = 0.001;
/// Depth at which the ramp saturates (m).
pub const RAMP_MAX: f64 = 1.0;

// Viridis samples at the legend breakpoints.
const STOPS: [(f64, [u8; 3]); 4] = [
    (0.0, [253, 231, 37]),
    (MEAN_THRESHOLD, [53, 183, 121]),
    (P90_THRESHOLD, [49, 104, 142]),
    (RAMP_MAX, [68, 1, 84]),
];

pub fn colour(depth: f64) -> [u8; 4] {
    if !(depth > DRY_DEPTH) {
        return [0, 0, 0, 0];
    }
    let d = depth.min(RAMP_MAX);
    let i = STOPS.iter().rposition(|s| s.0 <= d).unwrap_or(0).min(STOPS.len() - 2);
    let (d0, c0) = STOPS[i];
    let (d1, c1) = STOPS[i + 1];
    let t = (d - d0) / (d1 - d0);
    let mix = |k: usize| (c0[k] as f64 + t * (c1[k] as f64 - c0[k] as f64)).round() as u8;
    [mix(0), mix(1), mix(2), 200]
}

/// RGBA PNG, one pixel per cell, north up. Georeferencing and the legend
/// go in text chunks.
pub fn depth_png(r: &MaxDepthRaster) -> Vec<u8> {
    let g = r.georef;
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, g.n_cols as u32, g.n_rows as u32);
        enc.set_color(png::ColorType::Rgba);
        enc.set_depth(png::BitDepth::Eight);
        enc.add_text_chunk("georef".into(), json!(g).to_string()).expect("text chunk");
        let legend = json!({
            "breakpoints_m": [MEAN_THRESHOLD, P90_THRESHOLD],
            "dry_below_m": DRY_DEPTH,
            "saturates_at_m": RAMP_MAX,
        });
        enc.add_text_chunk("legend".into(), legend.to_string()).expect("text chunk");
        let mut w = enc.write_header().expect("png header");
        let pixels: Vec<u8> = r.depth.iter().flat_map(|&d| colour(d)).collect();
        w.write_image_data(&pixels).expect("png data");
    }
    out
}
