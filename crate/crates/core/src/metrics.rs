//! Segmentation quality measures.
//!
//! Boundary pixels of a binary mask are mask pixels with a 4-neighbor outside the mask,
//! the image border counting as outside. Trimap bands are built from the ground truth
//! only: pixels with a 4-neighbor of a different ground-truth label, dilated by the band
//! width with a 3×3 square. Mean IoU averages over classes present in either map.

use crate::error::{Error, Result};
use crate::filters::{dilate_square, label_boundary, mask_boundary};
use crate::types::LabelMap;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

fn check_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::InvalidArgument(format!("plane sizes differ: {a} vs {b}")));
    }
    Ok(())
}

fn iou_in_region(pred: &LabelMap, gt: &LabelMap, class: u32, region: Option<&[bool]>) -> Result<f64> {
    pred.same_shape(gt)?;
    let (mut inter, mut union) = (0u64, 0u64);
    for j in 0..gt.len() {
        let g = gt.get(j);
        if g == LabelMap::IGNORE || region.is_some_and(|r| !r[j]) {
            continue;
        }
        let (p, g) = (pred.get(j) == class, g == class);
        inter += u64::from(p && g);
        union += u64::from(p || g);
    }
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}

/// Intersection over union of `class`, skipping ground-truth [`LabelMap::IGNORE`] pixels.
/// Two empty sets score 1.
pub fn iou(pred: &LabelMap, gt: &LabelMap, class: u32) -> Result<f64> {
    iou_in_region(pred, gt, class, None)
}

/// Pixels within Chebyshev distance `band_px` of a ground-truth label change.
pub fn trimap_band(gt: &LabelMap, band_px: usize) -> Vec<bool> {
    let boundary = label_boundary(gt.labels(), gt.width(), gt.height());
    dilate_square(&boundary, gt.width(), gt.height(), band_px)
}

/// IoU restricted to the trimap band of width `band_px`.
pub fn trimap_iou(pred: &LabelMap, gt: &LabelMap, class: u32, band_px: usize) -> Result<f64> {
    if band_px < 1 {
        return Err(Error::InvalidArgument("band width must be at least 1".into()));
    }
    pred.same_shape(gt)?;
    let band = trimap_band(gt, band_px);
    iou_in_region(pred, gt, class, Some(&band))
}

/// Contour F-measure between two binary masks with a Chebyshev matching tolerance.
pub fn boundary_f(pred: &[bool], gt: &[bool], width: usize, height: usize, tolerance_px: usize) -> Result<f64> {
    check_len(pred.len(), gt.len())?;
    check_len(pred.len(), width * height)?;
    let pb = mask_boundary(pred, width, height);
    let gb = mask_boundary(gt, width, height);
    let (np, ng) = (pb.iter().filter(|&&b| b).count(), gb.iter().filter(|&&b| b).count());
    match (np, ng) {
        (0, 0) => return Ok(1.0),
        (0, _) | (_, 0) => return Ok(0.0),
        _ => {}
    }
    let gd = dilate_square(&gb, width, height, tolerance_px);
    let pd = dilate_square(&pb, width, height, tolerance_px);
    let matched_p = pb.iter().zip(&gd).filter(|(&b, &d)| b && d).count();
    let matched_g = gb.iter().zip(&pd).filter(|(&b, &d)| b && d).count();
    let precision = matched_p as f64 / np as f64;
    let recall = matched_g as f64 / ng as f64;
    Ok(if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) })
}

/// Cumulative accuracy as a function of the fraction of pixels admitted by increasing
/// variance thresholds, with the R² of its least-squares line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceCurve {
    /// `(variance threshold, fraction of pixels at or below it, accuracy among them)`.
    pub points: Vec<(f64, f64, f64)>,
    pub r_squared: f64,
    /// Set when the fit is undefined (constant variance or constant accuracy); `r_squared`
    /// is then reported as 1.
    pub degenerate: bool,
}

/// Thresholds are `n_buckets` equally spaced variance values from the minimum (exclusive)
/// to the maximum (inclusive).
pub fn variance_accuracy_curve(variance: &[f64], correct: &[bool], n_buckets: usize) -> Result<VarianceCurve> {
    check_len(variance.len(), correct.len())?;
    if n_buckets < 2 {
        return Err(Error::InvalidArgument("need at least two buckets".into()));
    }
    if variance.is_empty() {
        return Err(Error::InvalidArgument("no pixels".into()));
    }
    let mut order: Vec<usize> = (0..variance.len()).collect();
    order.sort_by(|&a, &b| variance[a].total_cmp(&variance[b]));
    let (vmin, vmax) = (variance[order[0]], variance[order[order.len() - 1]]);
    let n = variance.len() as f64;
    if vmax <= vmin {
        let acc = correct.iter().filter(|&&c| c).count() as f64 / n;
        return Ok(VarianceCurve { points: vec![(vmax, 1.0, acc)], r_squared: 1.0, degenerate: true });
    }
    let mut points = Vec::with_capacity(n_buckets);
    let (mut taken, mut hits) = (0usize, 0usize);
    for i in 1..=n_buckets {
        let t = if i == n_buckets { vmax } else { vmin + (vmax - vmin) * i as f64 / n_buckets as f64 };
        while taken < order.len() && variance[order[taken]] <= t {
            hits += usize::from(correct[order[taken]]);
            taken += 1;
        }
        points.push((t, taken as f64 / n, hits as f64 / taken as f64));
    }
    let (r_squared, degenerate) = match linear_fit_r2(points.iter().map(|p| (p.1, p.2))) {
        Some(r2) => (r2, false),
        None => (1.0, true),
    };
    Ok(VarianceCurve { points, r_squared, degenerate })
}

/// R² of the least-squares line through `(x, y)`; `None` when `y` is constant.
pub fn linear_fit_r2(data: impl Iterator<Item = (f64, f64)>) -> Option<f64> {
    let pts: Vec<(f64, f64)> = data.collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if syy <= 1e-300 {
        return None;
    }
    if sxx <= 1e-300 {
        return Some(0.0);
    }
    Some((sxy * sxy / (sxx * syy)).clamp(0.0, 1.0))
}

/// Error rates of the lowest- and highest-variance deciles (ties broken by pixel index).
pub fn decile_error_rates(variance: &[f64], correct: &[bool]) -> Result<(f64, f64)> {
    check_len(variance.len(), correct.len())?;
    let mut order: Vec<usize> = (0..variance.len()).collect();
    order.sort_by(|&a, &b| variance[a].total_cmp(&variance[b]).then(a.cmp(&b)));
    let k = (variance.len() / 10).max(1);
    let rate = |idx: &[usize]| idx.iter().filter(|&&j| !correct[j]).count() as f64 / idx.len() as f64;
    Ok((rate(&order[..k]), rate(&order[order.len() - k..])))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrimapEntry {
    pub band_px: usize,
    pub mean_iou: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_class_iou: BTreeMap<String, f64>,
    pub mean_iou: f64,
    pub trimap: Vec<TrimapEntry>,
    /// Mean region similarity over object classes (all labels except 0).
    pub j_mean: f64,
    /// Mean contour accuracy over object classes.
    pub f_mean: f64,
    pub boundary_tolerance: usize,
    pub variance_correlation: Option<VarianceCurve>,
}

/// Options for [`evaluate`].
#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub num_classes: u32,
    pub trimap_bands: Vec<usize>,
    pub boundary_tolerance: usize,
    pub variance_buckets: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { num_classes: 2, trimap_bands: vec![1, 3, 5, 10], boundary_tolerance: 2, variance_buckets: 10 }
    }
}

fn present_classes(pred: &LabelMap, gt: &LabelMap, num_classes: u32) -> Vec<u32> {
    let mut seen = vec![false; num_classes as usize];
    for j in 0..gt.len() {
        let g = gt.get(j);
        if g == LabelMap::IGNORE {
            continue;
        }
        for l in [pred.get(j), g] {
            if l < num_classes {
                seen[l as usize] = true;
            }
        }
    }
    (0..num_classes).filter(|&c| seen[c as usize]).collect()
}

fn mean_or_one(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    if v.is_empty() {
        1.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Full report for a predicted label map. `variance`, when given, is the per-pixel
/// uncertainty of the predicted label.
pub fn evaluate(pred: &LabelMap, gt: &LabelMap, opts: &EvalOptions, variance: Option<&[f64]>) -> Result<EvalReport> {
    pred.same_shape(gt)?;
    let classes = present_classes(pred, gt, opts.num_classes);
    let mut per_class_iou = BTreeMap::new();
    for &c in &classes {
        per_class_iou.insert(c.to_string(), iou(pred, gt, c)?);
    }
    let mean_iou = mean_or_one(per_class_iou.values().copied());
    let mut trimap = Vec::new();
    for &band in &opts.trimap_bands {
        let vals = classes.iter().map(|&c| trimap_iou(pred, gt, c, band)).collect::<Result<Vec<_>>>()?;
        trimap.push(TrimapEntry { band_px: band, mean_iou: mean_or_one(vals.into_iter()) });
    }
    let objects: Vec<u32> = classes.iter().copied().filter(|&c| c != 0).collect();
    let j_mean = mean_or_one(objects.iter().map(|c| per_class_iou[&c.to_string()]));
    let (w, h) = (gt.width(), gt.height());
    let f_vals = objects
        .iter()
        .map(|&c| boundary_f(&pred.mask(c), &gt.mask(c), w, h, opts.boundary_tolerance))
        .collect::<Result<Vec<_>>>()?;
    let f_mean = mean_or_one(f_vals.into_iter());
    let variance_correlation = match variance {
        Some(v) => {
            check_len(v.len(), gt.len())?;
            let keep: Vec<usize> = (0..gt.len()).filter(|&j| gt.get(j) != LabelMap::IGNORE).collect();
            let var: Vec<f64> = keep.iter().map(|&j| v[j]).collect();
            let correct: Vec<bool> = keep.iter().map(|&j| pred.get(j) == gt.get(j)).collect();
            Some(variance_accuracy_curve(&var, &correct, opts.variance_buckets)?)
        }
        None => None,
    };
    Ok(EvalReport {
        per_class_iou,
        mean_iou,
        trimap,
        j_mean,
        f_mean,
        boundary_tolerance: opts.boundary_tolerance,
        variance_correlation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(w: usize, h: usize, f: impl Fn(usize, usize) -> u32) -> LabelMap {
        LabelMap::new(w, h, (0..w * h).map(|j| f(j % w, j / w)).collect()).unwrap()
    }

    fn square(w: usize, x0: usize, y0: usize, side: usize) -> Vec<bool> {
        (0..w * w)
            .map(|j| {
                let (x, y) = (j % w, j / w);
                x >= x0 && x < x0 + side && y >= y0 && y < y0 + side
            })
            .collect()
    }

    #[test]
    fn iou_cases() {
        let gt = map(8, 8, |x, _| u32::from(x < 4));
        assert_eq!(iou(&gt, &gt, 1).unwrap(), 1.0);
        let disjoint = map(8, 8, |x, _| u32::from(x >= 4));
        assert_eq!(iou(&disjoint, &gt, 1).unwrap(), 0.0);
        let half = map(8, 8, |x, _| u32::from(x < 2));
        assert_eq!(iou(&half, &gt, 1).unwrap(), 0.5);
        let empty = map(8, 8, |_, _| 0);
        assert_eq!(iou(&empty, &empty, 1).unwrap(), 1.0);
        let other = map(4, 4, |_, _| 0);
        assert!(iou(&other, &gt, 1).is_err());
    }

    #[test]
    fn ignore_pixels_are_skipped() {
        let gt = map(4, 1, |x, _| [1, 1, LabelMap::IGNORE, 0][x]);
        let pred = map(4, 1, |x, _| [1, 1, 1, 0][x]);
        assert_eq!(iou(&pred, &gt, 1).unwrap(), 1.0);
    }

    #[test]
    fn trimap_cases() {
        let gt = map(8, 8, |x, _| u32::from(x < 4));
        let pred = map(8, 8, |x, y| u32::from(x < 4 || (x == 4 && y == 0)));
        assert_eq!(trimap_iou(&gt, &gt, 1, 1).unwrap(), 1.0);
        assert_eq!(trimap_iou(&pred, &gt, 1, 8).unwrap(), iou(&pred, &gt, 1).unwrap());
        // Boundary columns 3 and 4; band 1 covers columns 2..=5: 16 gt pixels, one extra.
        assert_eq!(trimap_iou(&pred, &gt, 1, 1).unwrap(), 16.0 / 17.0);
        assert!(trimap_iou(&pred, &gt, 1, 0).is_err());
    }

    #[test]
    fn boundary_f_cases() {
        let gt = square(16, 4, 4, 8);
        assert_eq!(boundary_f(&gt, &gt, 16, 16, 0).unwrap(), 1.0);
        let shifted = square(16, 5, 4, 8);
        assert_eq!(boundary_f(&shifted, &gt, 16, 16, 1).unwrap(), 1.0);
        // Concentric squares whose contours are 3 px apart everywhere.
        let inner = square(16, 7, 7, 2);
        let outer = square(16, 4, 4, 8);
        assert_eq!(boundary_f(&inner, &outer, 16, 16, 1).unwrap(), 0.0);
        let none = vec![false; 256];
        assert_eq!(boundary_f(&none, &none, 16, 16, 1).unwrap(), 1.0);
        assert_eq!(boundary_f(&none, &gt, 16, 16, 1).unwrap(), 0.0);
    }

    #[test]
    fn boundary_f_shifted_three_pixels_by_counting() {
        // Square 4..12 against the same square moved right by 3: the contours only meet on
        // the top and bottom rows. Counted by hand: 28 boundary pixels each; 14 of each
        // lie within one pixel of the other contour.
        let gt = square(16, 4, 4, 8);
        let pred = square(16, 7, 4, 8);
        let f = boundary_f(&pred, &gt, 16, 16, 1).unwrap();
        assert!((f - 0.5).abs() < 1e-12, "{f}");
    }

    #[test]
    fn variance_curve_all_correct_is_degenerate() {
        let var: Vec<f64> = (0..100).map(f64::from).collect();
        let curve = variance_accuracy_curve(&var, &vec![true; 100], 10).unwrap();
        assert!(curve.degenerate);
        assert_eq!(curve.r_squared, 1.0);
        assert!(curve.points.iter().all(|p| p.2 == 1.0));
        let flat = variance_accuracy_curve(&[0.5; 10], &[true; 10], 10).unwrap();
        assert!(flat.degenerate);
        assert_eq!(flat.points.len(), 1);
    }

    #[test]
    fn variance_curve_with_errors_in_top_half() {
        // Variance equals rank, errors on the top half; thresholds land on decile edges.
        let var: Vec<f64> = (0..=100).map(f64::from).collect();
        let correct: Vec<bool> = (0..=100).map(|i| i <= 50).collect();
        let curve = variance_accuracy_curve(&var, &correct, 10).unwrap();
        // Oracle: threshold 10 i admits 10 i + 1 pixels of which min(10 i, 50) + 1 correct.
        for (i, p) in curve.points.iter().enumerate() {
            let t = 10 * (i + 1);
            assert_eq!(p.0, t as f64);
            assert!((p.1 - (t + 1) as f64 / 101.0).abs() < 1e-12);
            assert!((p.2 - (t.min(50) + 1) as f64 / (t + 1) as f64).abs() < 1e-12);
        }
        let oracle_r2 = {
            let pts: Vec<(f64, f64)> = curve.points.iter().map(|p| (p.1, p.2)).collect();
            let n = pts.len() as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
            let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
                / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
            let ss_res: f64 = pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum();
            let ss_tot: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
            1.0 - ss_res / ss_tot
        };
        assert!((curve.r_squared - oracle_r2).abs() < 1e-12);
        assert!(!curve.degenerate);
    }

    #[test]
    fn variance_independent_of_errors_gives_flat_curve() {
        // Every fourth pixel wrong; thresholds admit multiples of 40 pixels.
        let var: Vec<f64> = (0..400).map(|i| f64::from(i / 40 + 1)).collect();
        let correct: Vec<bool> = (0..400).map(|i| i % 4 != 0).collect();
        let curve = variance_accuracy_curve(&var, &correct, 9).unwrap();
        assert!(curve.points.iter().all(|p| (p.2 - 0.75).abs() < 1e-12));
        assert!(curve.degenerate);
        assert_eq!(curve.r_squared, 1.0);
    }

    #[test]
    fn decile_rates() {
        let var: Vec<f64> = (0..100).map(f64::from).collect();
        let correct: Vec<bool> = (0..100).map(|i| i < 90 || i % 2 == 0).collect();
        assert_eq!(decile_error_rates(&var, &correct).unwrap(), (0.0, 0.5));
    }

    #[test]
    fn report_on_identical_maps() {
        let gt = map(8, 8, |x, y| u32::from(x > 2 && y > 2));
        let r = evaluate(&gt, &gt, &EvalOptions::default(), None).unwrap();
        assert_eq!(r.mean_iou, 1.0);
        assert_eq!(r.j_mean, 1.0);
        assert_eq!(r.f_mean, 1.0);
        assert!(r.trimap.iter().all(|t| t.mean_iou == 1.0));
    }
}
