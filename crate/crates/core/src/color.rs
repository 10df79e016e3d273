//! sRGB (D65) to CIELab conversion.
//!
//! Channels are linearized with the piecewise sRGB transfer curve, mapped to XYZ with the
//! IEC 61966-2-1 matrix, and converted to Lab against the white point obtained by pushing
//! linear `(1, 1, 1)` through that same matrix, so pure white lands on `(100, 0, 0)`.

use crate::error::{Error, Result};
use crate::types::FeatureImage;
use image::RgbImage;

const RGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.412_456_4, 0.357_576_1, 0.180_437_5],
    [0.212_672_9, 0.715_152_2, 0.072_175_0],
    [0.019_333_9, 0.119_192_0, 0.950_304_1],
];

const EPSILON: f64 = 216.0 / 24389.0;
const KAPPA: f64 = 24389.0 / 27.0;

fn linearize(c: u8) -> f64 {
    let v = f64::from(c) / 255.0;
    if v <= 0.04045 {
        v / 12.92
    } else {
        ((v + 0.055) / 1.055).powf(2.4)
    }
}

fn white_point() -> [f64; 3] {
    RGB_TO_XYZ.map(|row| row[0] + row[1] + row[2])
}

fn lab_f(t: f64) -> f64 {
    if t > EPSILON {
        t.cbrt()
    } else {
        (KAPPA * t + 16.0) / 116.0
    }
}

fn linear_to_lab(rgb: [f64; 3], white: [f64; 3]) -> [f64; 3] {
    let xyz = RGB_TO_XYZ.map(|row| row[0] * rgb[0] + row[1] * rgb[1] + row[2] * rgb[2]);
    let fx = lab_f(xyz[0] / white[0]);
    let fy = lab_f(xyz[1] / white[1]);
    let fz = lab_f(xyz[2] / white[2]);
    let l = (116.0 * fy - 16.0).clamp(0.0, 100.0);
    [l, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

/// Converts one 8-bit sRGB triple to `(L, a, b)`.
pub fn srgb_to_cielab(rgb: [u8; 3]) -> [f64; 3] {
    linear_to_lab(rgb.map(linearize), white_point())
}

/// Converts every pixel of `image` to the `[x, y, L, a, b]` feature layout.
pub fn build_feature_image(image: &RgbImage) -> Result<FeatureImage> {
    let (w, h) = image.dimensions();
    if w == 0 || h == 0 {
        return Err(Error::EmptyImage);
    }
    let lut: Vec<f64> = (0..=255u8).map(linearize).collect();
    let white = white_point();
    let lab: Vec<[f64; 3]> = image
        .pixels()
        .map(|p| {
            let [r, g, b] = p.0;
            linear_to_lab([lut[r as usize], lut[g as usize], lut[b as usize]], white)
        })
        .collect();
    FeatureImage::from_lab(w as usize, h as usize, &lab)
}
