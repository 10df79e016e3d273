//! Synthetic segmentation cases with controlled coarse-score corruption.
//!
//! Shapes are painted in saturated colors over a gray background with low-amplitude
//! per-pixel texture. The ground truth is the pixel-center rasterization of the shapes
//! (binary: 1 inside any shape). The coarse score is the ground truth morphologically
//! grown or shrunk by a disk, optionally with an enclosed hole that the coarse mask fills
//! in (a false positive), then blurred, perturbed with uniform noise, and clipped.

use crate::error::{Error, Result};
use crate::filters::{dilate_disk, erode_disk, gaussian_blur};
use crate::rng::Rng;
use crate::types::{LabelMap, ScoreStack};
use image::{Rgb, RgbImage};
use serde::{Deserialize, Serialize};

const BACKGROUND: [u8; 3] = [128, 128, 128];
const PALETTE: [[u8; 3]; 6] = [
    [220, 30, 30],
    [30, 200, 40],
    [40, 60, 230],
    [220, 40, 220],
    [230, 220, 30],
    [30, 210, 220],
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeKind {
    Rectangle,
    Ellipse,
    Polygon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Shape {
    Rectangle { x0: f64, y0: f64, x1: f64, y1: f64 },
    Ellipse { cx: f64, cy: f64, rx: f64, ry: f64 },
    /// Closed polygon, even-odd fill.
    Polygon { points: Vec<(f64, f64)> },
}

impl Shape {
    /// Whether the point lies inside the shape.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        match self {
            Shape::Rectangle { x0, y0, x1, y1 } => x >= *x0 && x < *x1 && y >= *y0 && y < *y1,
            Shape::Ellipse { cx, cy, rx, ry } => {
                let (u, v) = ((x - cx) / rx, (y - cy) / ry);
                u * u + v * v <= 1.0
            }
            Shape::Polygon { points } => {
                let mut inside = false;
                let n = points.len();
                for i in 0..n {
                    let (xi, yi) = points[i];
                    let (xj, yj) = points[(i + n - 1) % n];
                    if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
                        inside = !inside;
                    }
                }
                inside
            }
        }
    }

    /// Pixel-center rasterization.
    pub fn rasterize(&self, width: usize, height: usize) -> Vec<bool> {
        (0..width * height)
            .map(|j| self.contains((j % width) as f64 + 0.5, (j / width) as f64 + 0.5))
            .collect()
    }
}

/// Disk of background inside the first shape that the coarse score marks as foreground.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Blob {
    pub cx: f64,
    pub cy: f64,
    pub radius: f64,
}

impl Blob {
    pub fn mask(&self, width: usize, height: usize) -> Vec<bool> {
        Shape::Ellipse { cx: self.cx, cy: self.cy, rx: self.radius, ry: self.radius }.rasterize(width, height)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corruption {
    /// Disk radius in pixels; positive dilates, negative erodes.
    pub dilate_radius: f64,
    pub blur_sigma: f64,
    /// Half-width of the uniform score noise.
    pub noise: f64,
    pub blob: Option<Blob>,
}

/// Parameters of a randomly drawn case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub width: usize,
    pub height: usize,
    pub min_shapes: usize,
    pub max_shapes: usize,
    pub kinds: Vec<ShapeKind>,
    /// Shape half-extent range as a fraction of the shorter canvas side.
    pub min_extent: f64,
    pub max_extent: f64,
    /// Amplitude of the uniform per-channel background and shape texture, in 8-bit units.
    pub texture: f64,
    pub dilate_radius: f64,
    pub blur_sigma: f64,
    pub noise: f64,
    /// Radius of an enclosed false-positive blob; `None` disables it.
    pub blob_radius: Option<f64>,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            width: 256,
            height: 256,
            min_shapes: 1,
            max_shapes: 1,
            kinds: vec![ShapeKind::Rectangle, ShapeKind::Ellipse, ShapeKind::Polygon],
            min_extent: 0.15,
            max_extent: 0.3,
            texture: 6.0,
            dilate_radius: 5.0,
            blur_sigma: 3.0,
            noise: 0.1,
            blob_radius: None,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.width < 8 || self.height < 8 {
            return bad("canvas must be at least 8x8");
        }
        if self.min_shapes == 0 || self.max_shapes > 3 || self.min_shapes > self.max_shapes {
            return bad("shape count must satisfy 1 <= min_shapes <= max_shapes <= 3");
        }
        if self.kinds.is_empty() {
            return bad("kinds must not be empty");
        }
        if !(self.min_extent > 0.0 && self.min_extent <= self.max_extent && self.max_extent < 0.5) {
            return bad("extents must satisfy 0 < min_extent <= max_extent < 0.5");
        }
        for (name, v) in [("texture", self.texture), ("blur_sigma", self.blur_sigma), ("noise", self.noise)] {
            if !(v >= 0.0) || !v.is_finite() {
                return bad(&format!("{name} must be a finite non-negative number"));
            }
        }
        if !self.dilate_radius.is_finite() {
            return bad("dilate_radius must be finite");
        }
        if self.blob_radius.is_some_and(|r| !(r > 0.0)) {
            return bad("blob_radius must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SynthCase {
    pub image: RgbImage,
    pub gt: LabelMap,
    pub coarse: ScoreStack,
    pub shapes: Vec<Shape>,
    pub corruption: Corruption,
}

fn random_shape(kind: ShapeKind, spec: &SynthSpec, rng: &mut Rng) -> Shape {
    let (w, h) = (spec.width as f64, spec.height as f64);
    let side = w.min(h);
    let rx = side * rng.uniform_range(spec.min_extent, spec.max_extent);
    let ry = side * rng.uniform_range(spec.min_extent, spec.max_extent);
    let cx = rng.uniform_range(rx + 2.0, w - rx - 2.0);
    let cy = rng.uniform_range(ry + 2.0, h - ry - 2.0);
    match kind {
        ShapeKind::Rectangle => Shape::Rectangle { x0: cx - rx, y0: cy - ry, x1: cx + rx, y1: cy + ry },
        ShapeKind::Ellipse => Shape::Ellipse { cx, cy, rx, ry },
        ShapeKind::Polygon => {
            let n = 5 + rng.below(4) as usize;
            let points = (0..n)
                .map(|i| {
                    let t = (i as f64 + rng.uniform_range(0.0, 0.6)) / n as f64 * std::f64::consts::TAU;
                    let r = rng.uniform_range(0.6, 1.0);
                    (cx + r * rx * t.cos(), cy + r * ry * t.sin())
                })
                .collect();
            Shape::Polygon { points }
        }
    }
}

/// Coarse score plane for a binary ground truth.
pub fn corrupt(gt: &[bool], width: usize, height: usize, c: &Corruption, rng: &mut Rng) -> Vec<f32> {
    let mut mask = if c.dilate_radius > 0.0 {
        dilate_disk(gt, width, height, c.dilate_radius)
    } else if c.dilate_radius < 0.0 {
        erode_disk(gt, width, height, -c.dilate_radius)
    } else {
        gt.to_vec()
    };
    if let Some(blob) = &c.blob {
        for (m, b) in mask.iter_mut().zip(blob.mask(width, height)) {
            *m |= b;
        }
    }
    let plane: Vec<f64> = mask.iter().map(|&m| f64::from(u8::from(m))).collect();
    let mut plane = gaussian_blur(&plane, width, height, c.blur_sigma);
    if c.noise > 0.0 {
        for v in &mut plane {
            *v += rng.uniform_range(-c.noise, c.noise);
        }
    }
    plane.iter().map(|v| v.clamp(0.0, 1.0) as f32).collect()
}

/// Paints `shapes` in the given colors, carving out `hole` as background.
pub fn render(
    width: usize,
    height: usize,
    shapes: &[(Shape, [u8; 3])],
    hole: Option<&Blob>,
    texture: f64,
    rng: &mut Rng,
) -> Result<(RgbImage, Vec<bool>)> {
    let mut fg = vec![false; width * height];
    let mut color = vec![BACKGROUND; width * height];
    for (i, (shape, rgb)) in shapes.iter().enumerate() {
        let m = shape.rasterize(width, height);
        if !m.contains(&true) {
            return Err(Error::DegenerateShape(format!("shape {i} covers no pixel")));
        }
        for j in 0..m.len() {
            if m[j] {
                fg[j] = true;
                color[j] = *rgb;
            }
        }
    }
    if let Some(h) = hole {
        for (j, inside) in h.mask(width, height).into_iter().enumerate() {
            if inside {
                fg[j] = false;
                color[j] = BACKGROUND;
            }
        }
    }
    let mut img = RgbImage::new(width as u32, height as u32);
    for (j, px) in img.pixels_mut().enumerate() {
        let mut out = [0u8; 3];
        for ch in 0..3 {
            let t = if texture > 0.0 { rng.uniform_range(-texture, texture) } else { 0.0 };
            out[ch] = (f64::from(color[j][ch]) + t).round().clamp(0.0, 255.0) as u8;
        }
        *px = Rgb(out);
    }
    Ok((img, fg))
}

pub fn synth_case(spec: &SynthSpec, rng: &mut Rng) -> Result<SynthCase> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let count = spec.min_shapes + rng.below((spec.max_shapes - spec.min_shapes + 1) as u64) as usize;
    let mut palette: Vec<[u8; 3]> = PALETTE.to_vec();
    let mut shapes = Vec::with_capacity(count);
    for i in 0..count {
        // A hole needs a shape that encloses it with margin; polygons may be too thin.
        let kinds: Vec<ShapeKind> = if i == 0 && spec.blob_radius.is_some() {
            spec.kinds.iter().copied().filter(|k| *k != ShapeKind::Polygon).collect()
        } else {
            spec.kinds.clone()
        };
        let kinds = if kinds.is_empty() { vec![ShapeKind::Ellipse] } else { kinds };
        let kind = kinds[rng.below(kinds.len() as u64) as usize];
        let shape = random_shape(kind, spec, rng);
        let color = palette.remove(rng.below(palette.len() as u64) as usize);
        shapes.push((shape, color));
    }
    let blob = match spec.blob_radius {
        Some(radius) => {
            let (cx, cy, reach) = match &shapes[0].0 {
                Shape::Rectangle { x0, y0, x1, y1 } => ((x0 + x1) / 2.0, (y0 + y1) / 2.0, (x1 - x0).min(y1 - y0) / 2.0),
                Shape::Ellipse { cx, cy, rx, ry } => (*cx, *cy, rx.min(*ry)),
                Shape::Polygon { .. } => unreachable!("polygons are excluded for blob cases"),
            };
            if radius + 4.0 > reach {
                return Err(Error::DegenerateShape(format!(
                    "blob radius {radius} does not fit inside a shape of inner radius {reach:.1}"
                )));
            }
            Some(Blob { cx, cy, radius })
        }
        None => None,
    };
    let (image, fg) = render(w, h, &shapes, blob.as_ref(), spec.texture, rng)?;
    let corruption = Corruption {
        dilate_radius: spec.dilate_radius,
        blur_sigma: spec.blur_sigma,
        noise: spec.noise,
        blob,
    };
    let coarse = corrupt(&fg, w, h, &corruption, rng);
    Ok(SynthCase {
        image,
        gt: LabelMap::new(w, h, fg.iter().map(|&f| u32::from(f)).collect())?,
        coarse: ScoreStack::new(w, h, vec!["foreground".into()], vec![coarse])?,
        shapes: shapes.into_iter().map(|(s, _)| s).collect(),
        corruption,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clean() -> SynthSpec {
        SynthSpec { dilate_radius: 0.0, blur_sigma: 0.0, noise: 0.0, ..Default::default() }
    }

    #[test]
    fn zero_corruption_reproduces_gt() {
        for s in 0..5 {
            let case = synth_case(&clean(), &mut Rng::new(s)).unwrap();
            for (j, &v) in case.coarse.plane(0).iter().enumerate() {
                assert_eq!(v, case.gt.get(j) as f32);
            }
        }
    }

    #[test]
    fn dilation_contains_gt_with_margin() {
        let spec = SynthSpec { blur_sigma: 0.0, noise: 0.0, ..Default::default() };
        let case = synth_case(&spec, &mut Rng::new(9)).unwrap();
        let (w, h) = (256usize, 256usize);
        let gt: Vec<(usize, usize)> = (0..w * h).filter(|&j| case.gt.get(j) == 1).map(|j| (j % w, j / w)).collect();
        for j in 0..w * h {
            let (x, y) = ((j % w) as f64, (j / w) as f64);
            let near = gt.iter().any(|&(gx, gy)| (gx as f64 - x).powi(2) + (gy as f64 - y).powi(2) <= 25.0);
            assert_eq!(case.coarse.plane(0)[j] == 1.0, near, "pixel {j}");
        }
    }

    #[test]
    fn blurred_edge_crosses_half_near_dilated_edge() {
        // Vertical half-plane edge: the blurred step crosses 0.5 between the last set column
        // and the first unset one.
        let (w, h) = (64, 16);
        let gt: Vec<bool> = (0..w * h).map(|j| j % w < 20).collect();
        let c = Corruption { dilate_radius: 5.0, blur_sigma: 3.0, noise: 0.0, blob: None };
        let plane = corrupt(&gt, w, h, &c, &mut Rng::new(0));
        let row = &plane[8 * w..9 * w];
        let cross = row.iter().position(|&v| v < 0.5).unwrap();
        assert!((cross as isize - 25).abs() <= 1, "crossing at column {cross}");
    }

    #[test]
    fn polygons_and_degenerate_shapes() {
        let tri = Shape::Polygon { points: vec![(0.0, 0.0), (10.0, 0.0), (0.0, 10.0)] };
        assert!(tri.contains(2.0, 2.0));
        assert!(!tri.contains(8.0, 8.0));
        let empty = Shape::Rectangle { x0: 3.0, y0: 3.0, x1: 3.0, y1: 9.0 };
        let err = render(16, 16, &[(empty, [255, 0, 0])], None, 0.0, &mut Rng::new(0));
        assert!(matches!(err, Err(Error::DegenerateShape(_))));
    }

    #[test]
    fn blob_is_background_in_gt_and_foreground_in_coarse() {
        let spec = SynthSpec { blob_radius: Some(10.0), min_extent: 0.25, blur_sigma: 0.0, noise: 0.0, ..Default::default() };
        let case = synth_case(&spec, &mut Rng::new(5)).unwrap();
        let blob = case.corruption.blob.as_ref().unwrap().mask(256, 256);
        for (j, &b) in blob.iter().enumerate() {
            if b {
                assert_eq!(case.gt.get(j), 0);
                assert_eq!(case.coarse.plane(0)[j], 1.0);
            }
        }
    }

    #[test]
    fn spec_json_round_trip_and_validation() {
        let spec = SynthSpec { blob_radius: Some(6.0), ..Default::default() };
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<SynthSpec>(&text).unwrap(), spec);
        assert!(SynthSpec { max_shapes: 4, ..Default::default() }.validate().is_err());
        assert!(SynthSpec { noise: -1.0, ..Default::default() }.validate().is_err());
    }
}
