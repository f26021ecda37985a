//! Scalogram images: time runs left to right, log-frequency bottom to top.
//!
//! Amplitudes are normalised per image to decibels below the peak, clipped
//! at [`DYNAMIC_RANGE_DB`], and mapped through a black → red → yellow → white
//! ramp whose channels are all non-decreasing (so brightness is monotone).

use std::path::Path;

use image::{Rgb, RgbImage};

use crate::error::{Error, Result};
use crate::scattering::Scalogram;

pub const MAX_COLUMNS: usize = 2048;
pub const DYNAMIC_RANGE_DB: f64 = 60.0;

const STOPS: [(f64, [f64; 3]); 5] = [
    (0.0, [0.0, 0.0, 0.0]),
    (0.35, [170.0, 20.0, 0.0]),
    (0.65, [250.0, 140.0, 0.0]),
    (0.85, [255.0, 230.0, 60.0]),
    (1.0, [255.0, 255.0, 255.0]),
];

/// Colour of a level in `[0, 1]`.
pub fn colormap(level: f64) -> Rgb<u8> {
    let v = level.clamp(0.0, 1.0);
    let i = STOPS.iter().rposition(|(p, _)| *p <= v).unwrap_or(0).min(STOPS.len() - 2);
    let (p0, c0) = STOPS[i];
    let (p1, c1) = STOPS[i + 1];
    let t = ((v - p0) / (p1 - p0)).clamp(0.0, 1.0);
    let mix = |a: f64, b: f64| (a + t * (b - a)).round() as u8;
    Rgb([mix(c0[0], c1[0]), mix(c0[1], c1[1]), mix(c0[2], c1[2])])
}

/// Max-pools each row down to at most [`MAX_COLUMNS`] columns.
fn pooled_rows(scal: &Scalogram) -> Vec<Vec<f64>> {
    let t = scal.time_len();
    let width = t.min(MAX_COLUMNS);
    scal.rows()
        .iter()
        .map(|row| {
            (0..width)
                .map(|c| {
                    let lo = c * t / width;
                    let hi = ((c + 1) * t / width).max(lo + 1);
                    row[lo..hi].iter().cloned().fold(0.0, f64::max)
                })
                .collect()
        })
        .collect()
}

pub fn scalogram_image(scal: &Scalogram) -> Result<RgbImage> {
    if scal.bands() == 0 || scal.time_len() == 0 {
        return Err(Error::InvalidParameter("cannot render an empty scalogram".into()));
    }
    let rows = pooled_rows(scal);
    let width = rows[0].len();
    let height = rows.len();
    let peak = rows.iter().flatten().cloned().fold(0.0, f64::max);
    let mut img = RgbImage::new(width as u32, height as u32);
    for (band, row) in rows.iter().enumerate() {
        let y = (height - 1 - band) as u32;
        for (x, &v) in row.iter().enumerate() {
            let level = if peak > 0.0 && v > 0.0 { 1.0 + 20.0 * (v / peak).log10() / DYNAMIC_RANGE_DB } else { 0.0 };
            img.put_pixel(x as u32, y, colormap(level));
        }
    }
    Ok(img)
}

pub fn render_scalogram(scal: &Scalogram, path: impl AsRef<Path>) -> Result<()> {
    scalogram_image(scal)?.save_with_format(path, image::ImageFormat::Png)?;
    Ok(())
}
