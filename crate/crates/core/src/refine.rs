//! Monte Carlo refinement of class scoremaps.
//!
//! For every class plane: seed weights come from the score CDFs, spacings are drawn by
//! stratified sampling, and each spacing runs an antithetic pair of growing iterations.
//! Every iteration replaces each clustered pixel's score by its cluster's
//! probability-weighted mean score; orphan pixels keep their input score. The Monte Carlo
//! mean is smoothed with a 3×3 Gaussian and returned together with the per-pixel variance
//! across iterations.

use crate::clusters::{assignment_probability, Sign};
use crate::color::build_feature_image;
use crate::confidence::{estimate_score_cdfs, seed_weight_field, SeedWeightField};
use crate::config::RefineConfig;
use crate::error::{Error, Result};
use crate::filters::smooth3x3;
use crate::grower::{grow, GrowOutcome, Seed};
use crate::rng::Rng;
use crate::types::{FeatureImage, LabelMap, ScoreStack};
use image::RgbImage;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Floor applied to variances before inverse-variance weighting.
pub const VARIANCE_FLOOR: f64 = 1e-6;

/// Cells whose total seed weight falls below this yield no seed.
const MIN_CELL_WEIGHT: f64 = 1e-6;

/// Draws `n_gamma` spacings by systematic stratified sampling over `[gamma_low, gamma_high]`,
/// one uniform draw per stratum, rounded and clamped to at least 2. Sorted ascending.
pub fn sample_gammas(cfg: &RefineConfig, rng: &mut Rng) -> Result<Vec<u32>> {
    if cfg.n_gamma < 1 {
        return Err(Error::InvalidConfig("n_gamma must be at least 1".into()));
    }
    let lo = f64::from(cfg.gamma_low);
    let hi = f64::from(cfg.gamma_high);
    let width = (hi - lo) / f64::from(cfg.n_gamma);
    let mut gammas: Vec<u32> = (0..cfg.n_gamma)
        .map(|i| {
            let start = lo + width * f64::from(i);
            let g = rng.uniform_range(start, start + width);
            (g.round() as u32).max(2)
        })
        .collect();
    gammas.sort_unstable();
    Ok(gammas)
}

/// Samples at most one seed per `gamma × gamma` cell.
///
/// Within a cell a candidate is drawn with probability proportional to its weight and then
/// kept with probability equal to that weight. An empty result means the iteration has
/// nothing to grow.
pub fn sample_seeds(weights: &SeedWeightField, gamma: u32, rng: &mut Rng) -> Vec<Seed> {
    let g = gamma.max(1) as usize;
    let (w, h) = (weights.width, weights.height);
    let mut seeds = Vec::new();
    let mut cell = Vec::with_capacity(g * g);
    let mut index = Vec::with_capacity(g * g);
    for cy in (0..h).step_by(g) {
        for cx in (0..w).step_by(g) {
            cell.clear();
            index.clear();
            for y in cy..(cy + g).min(h) {
                for x in cx..(cx + g).min(w) {
                    let j = y * w + x;
                    cell.push(weights.weights[j]);
                    index.push(j);
                }
            }
            if cell.iter().sum::<f64>() < MIN_CELL_WEIGHT {
                continue;
            }
            let Some(pick) = rng.categorical(&cell) else { continue };
            let weight = cell[pick];
            if rng.uniform() < weight {
                seeds.push(Seed { pixel: index[pick], confidence: weight });
            }
        }
    }
    seeds
}

/// Probability-weighted mean score of every cluster, using the final cluster statistics.
/// A cluster whose weights all vanish falls back to its plain mean.
pub fn cluster_scores(
    features: &FeatureImage,
    scores: &[f32],
    outcome: &GrowOutcome,
    eta: u32,
) -> Vec<f64> {
    let k = outcome.clusters.len();
    let mut weighted = vec![0.0; k];
    let mut weight = vec![0.0; k];
    let mut plain = vec![0.0; k];
    let mut count = vec![0usize; k];
    for (j, &label) in outcome.labels.labels().iter().enumerate() {
        if label == LabelMap::ORPHAN {
            continue;
        }
        let c = label as usize;
        let p = assignment_probability(outcome.clusters[c].mahalanobis(features.get(j)), eta);
        let s = f64::from(scores[j]);
        weighted[c] += s * p;
        weight[c] += p;
        plain[c] += s;
        count[c] += 1;
    }
    (0..k)
        .map(|c| {
            if weight[c] > 0.0 {
                (weighted[c] / weight[c]).clamp(0.0, 1.0)
            } else if count[c] > 0 {
                plain[c] / count[c] as f64
            } else {
                0.0
            }
        })
        .collect()
}

/// Audit record of one growing iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub index: usize,
    pub gamma: u32,
    pub sign: Sign,
    pub seeds: usize,
    pub orphans: usize,
    /// No seed was accepted; the input plane stood in for this iteration.
    pub skipped: bool,
}

/// Refined mean (smoothed), Monte Carlo variance, and iteration records for one plane.
#[derive(Debug, Clone)]
pub struct ClassRefinement {
    pub refined: Vec<f64>,
    pub variance: Vec<f64>,
    pub iterations: Vec<IterationRecord>,
}

fn run_iteration(
    features: &FeatureImage,
    scores: &[f32],
    weights: &SeedWeightField,
    index: usize,
    gamma: u32,
    sign: Sign,
    cfg: &RefineConfig,
    mut rng: Rng,
) -> Result<(Vec<f64>, IterationRecord)> {
    let seeds = sample_seeds(weights, gamma, &mut rng);
    let mut plane: Vec<f64> = scores.iter().map(|&s| f64::from(s)).collect();
    let mut record = IterationRecord {
        index,
        gamma,
        sign,
        seeds: seeds.len(),
        orphans: plane.len(),
        skipped: seeds.is_empty(),
    };
    if seeds.is_empty() {
        return Ok((plane, record));
    }
    let outcome = grow(features, &seeds, gamma, sign, cfg, &mut rng)?;
    let means = cluster_scores(features, scores, &outcome, cfg.eta);
    let mut orphans = 0;
    for (j, &label) in outcome.labels.labels().iter().enumerate() {
        if label == LabelMap::ORPHAN {
            orphans += 1;
        } else {
            plane[j] = means[label as usize];
        }
    }
    record.orphans = orphans;
    Ok((plane, record))
}

/// Per-pixel mean and population variance over equally weighted planes.
///
/// Sums are shifted by the first plane so identical planes reproduce it exactly.
pub fn monte_carlo_moments(planes: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let n = planes[0].len();
    let m = planes.len() as f64;
    let base = &planes[0];
    let mut shift = vec![0.0; n];
    for p in &planes[1..] {
        for ((acc, v), b) in shift.iter_mut().zip(p).zip(base) {
            *acc += v - b;
        }
    }
    let mean: Vec<f64> = base.iter().zip(&shift).map(|(b, s)| b + s / m).collect();
    let mut var = vec![0.0; n];
    for p in planes {
        for ((acc, v), mu) in var.iter_mut().zip(p).zip(&mean) {
            *acc += (v - mu) * (v - mu);
        }
    }
    var.iter_mut().for_each(|v| *v /= m);
    (mean, var)
}

/// Refines one class plane. `foreground[j]` marks pixels predicted as this class.
pub fn refine_class(
    features: &FeatureImage,
    scores: &[f32],
    foreground: &[bool],
    cfg: &RefineConfig,
    rng: &Rng,
) -> Result<ClassRefinement> {
    cfg.validate()?;
    let (w, h) = (features.width(), features.height());
    if scores.len() != features.len() || foreground.len() != features.len() {
        return Err(Error::InvalidArgument(format!(
            "plane holds {} scores and {} labels for a {w}x{h} image",
            scores.len(),
            foreground.len()
        )));
    }
    let cdfs = estimate_score_cdfs(scores, foreground, cfg.cdf_points);
    let weights = seed_weight_field(scores, w, h, &cdfs);
    let gammas = sample_gammas(cfg, &mut rng.child(0))?;
    let per_gamma = cfg.iterations_per_gamma as usize;
    let total = cfg.total_iterations();

    let results: Vec<(Vec<f64>, IterationRecord)> = (0..total)
        .into_par_iter()
        .map(|m| {
            let gamma = gammas[m / per_gamma];
            let sign = Sign::for_iteration(m % per_gamma);
            run_iteration(features, scores, &weights, m, gamma, sign, cfg, rng.child(1 + m as u64))
        })
        .collect::<Result<_>>()?;
    debug_assert_eq!(results.len(), total);

    let (planes, iterations): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let (mean, variance) = monte_carlo_moments(&planes);
    let refined = smooth3x3(&mean, w, h).into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
    Ok(ClassRefinement { refined, variance, iterations })
}

/// Inverse-variance fusion of per-run `(estimate, variance)` planes. Returns the fused
/// estimate and `1 / Σ 1/σ²`. Variances are floored at [`VARIANCE_FLOOR`].
pub fn combine_runs(estimates: &[(Vec<f64>, Vec<f64>)]) -> Result<(Vec<f64>, Vec<f64>)> {
    let Some((first, _)) = estimates.first() else {
        return Err(Error::NoRuns);
    };
    if estimates.len() == 1 {
        return Ok(estimates[0].clone());
    }
    let n = first.len();
    if estimates.iter().any(|(c, v)| c.len() != n || v.len() != n) {
        return Err(Error::InvalidArgument("run planes differ in size".into()));
    }
    let mut fused = vec![0.0; n];
    let mut variance = vec![0.0; n];
    for j in 0..n {
        let (mut num, mut den) = (0.0, 0.0);
        for (c, v) in estimates {
            let inv = 1.0 / v[j].max(VARIANCE_FLOOR);
            num += c[j] * inv;
            den += inv;
        }
        fused[j] = num / den;
        variance[j] = 1.0 / den;
    }
    Ok((fused, variance))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassManifest {
    pub class: usize,
    pub name: String,
    pub iterations: Vec<IterationRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run: usize,
    pub classes: Vec<ClassManifest>,
}

/// Everything needed to audit a refinement: the configuration and every iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationManifest {
    pub config: RefineConfig,
    pub width: usize,
    pub height: usize,
    pub runs: Vec<RunManifest>,
}

#[derive(Debug, Clone)]
pub struct RefineOutput {
    pub refined: ScoreStack,
    /// Per-class variance planes.
    pub variance: Vec<Vec<f32>>,
    /// Decision over the refined stack (see [`ScoreStack::argmax`]).
    pub labels: LabelMap,
    pub manifest: IterationManifest,
}

fn to_f32(plane: &[f64]) -> Vec<f32> {
    plane.iter().map(|&v| v as f32).collect()
}

/// Refines a whole score stack for an sRGB image.
pub fn refine_multiclass(image: &RgbImage, stack: &ScoreStack, cfg: &RefineConfig) -> Result<RefineOutput> {
    let features = build_feature_image(image)?;
    refine_stack(&features, stack, cfg)
}

/// Refines every plane of `stack`, chaining and fusing runs when `cfg.runs > 1`.
pub fn refine_stack(features: &FeatureImage, stack: &ScoreStack, cfg: &RefineConfig) -> Result<RefineOutput> {
    cfg.validate()?;
    if stack.width() != features.width() || stack.height() != features.height() {
        return Err(Error::DimensionMismatch {
            expected_width: features.width(),
            expected_height: features.height(),
            width: stack.width(),
            height: stack.height(),
        });
    }
    let master = Rng::new(cfg.rng_seed);
    let mut input = stack.clone();
    let mut run_estimates: Vec<Vec<(Vec<f64>, Vec<f64>)>> = Vec::new();
    let mut manifests = Vec::new();
    for run in 0..cfg.runs as usize {
        let run_rng = master.child(run as u64);
        let argmax = input.argmax();
        let per_class: Vec<ClassRefinement> = (0..input.num_classes())
            .into_par_iter()
            .map(|k| {
                let fg = input.foreground_mask(&argmax, k);
                refine_class(features, input.plane(k), &fg, cfg, &run_rng.child(k as u64))
            })
            .collect::<Result<_>>()?;
        manifests.push(RunManifest {
            run,
            classes: per_class
                .iter()
                .enumerate()
                .map(|(k, c)| ClassManifest {
                    class: k,
                    name: input.class_names()[k].clone(),
                    iterations: c.iterations.clone(),
                })
                .collect(),
        });
        let planes = per_class.iter().map(|c| to_f32(&c.refined)).collect();
        input = ScoreStack::new(stack.width(), stack.height(), stack.class_names().to_vec(), planes)?;
        run_estimates.push(per_class.into_iter().map(|c| (c.refined, c.variance)).collect());
    }

    let mut refined_planes = Vec::with_capacity(stack.num_classes());
    let mut variance_planes = Vec::with_capacity(stack.num_classes());
    for k in 0..stack.num_classes() {
        let runs: Vec<(Vec<f64>, Vec<f64>)> = run_estimates.iter().map(|r| r[k].clone()).collect();
        let (c, v) = combine_runs(&runs)?;
        refined_planes.push(c.iter().map(|&x| x.clamp(0.0, 1.0) as f32).collect());
        variance_planes.push(to_f32(&v));
    }
    let refined = ScoreStack::new(stack.width(), stack.height(), stack.class_names().to_vec(), refined_planes)?;
    let labels = refined.argmax();
    Ok(RefineOutput {
        refined,
        variance: variance_planes,
        labels,
        manifest: IterationManifest {
            config: cfg.clone(),
            width: stack.width(),
            height: stack.height(),
            runs: manifests,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clusters::ClusterStats;

    #[test]
    fn gammas_fall_in_their_strata() {
        let cfg = RefineConfig { gamma_low: 2, gamma_high: 16, n_gamma: 10, ..Default::default() };
        for seed in 0..50 {
            let mut rng = Rng::new(seed);
            // Reproduce the raw draws to check stratum membership before rounding.
            let mut probe = rng.clone();
            let raw: Vec<f64> = (0..10)
                .map(|i| probe.uniform_range(2.0 + 1.4 * i as f64, 2.0 + 1.4 * (i + 1) as f64))
                .collect();
            for (i, r) in raw.iter().enumerate() {
                assert!(*r >= 2.0 + 1.4 * i as f64 && *r < 2.0 + 1.4 * (i + 1) as f64);
            }
            let g = sample_gammas(&cfg, &mut rng).unwrap();
            let mut expected: Vec<u32> = raw.iter().map(|r| (r.round() as u32).max(2)).collect();
            expected.sort_unstable();
            assert_eq!(g, expected);
            assert!(g.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn single_stratum_and_degenerate_range() {
        let cfg = RefineConfig { n_gamma: 1, gamma_high: 16, ..Default::default() };
        let g = sample_gammas(&cfg, &mut Rng::new(1)).unwrap();
        assert_eq!(g.len(), 1);
        assert!((2..=16).contains(&g[0]));
        let cfg = RefineConfig { gamma_low: 7, gamma_high: 7, ..Default::default() };
        assert!(sample_gammas(&cfg, &mut Rng::new(1)).unwrap().iter().all(|&g| g == 7));
        let cfg = RefineConfig { n_gamma: 0, ..Default::default() };
        assert!(sample_gammas(&cfg, &mut Rng::new(1)).is_err());
    }

    fn field(w: usize, h: usize, weights: Vec<f64>) -> SeedWeightField {
        SeedWeightField { width: w, height: h, weights }
    }

    #[test]
    fn uniform_weights_give_one_seed_per_cell() {
        let f = field(8, 8, vec![1.0; 64]);
        let mut counts = vec![0u32; 64];
        for s in 0..2000 {
            let seeds = sample_seeds(&f, 4, &mut Rng::new(s));
            assert_eq!(seeds.len(), 4);
            let mut cells: Vec<usize> = seeds.iter().map(|s| (s.pixel / 8 / 4) * 2 + (s.pixel % 8) / 4).collect();
            cells.sort_unstable();
            assert_eq!(cells, vec![0, 1, 2, 3]);
            for s in seeds {
                counts[s.pixel] += 1;
            }
        }
        // 2000 draws over 16 pixels per cell: about 125 each.
        assert!(counts.iter().all(|&c| (70..190).contains(&c)), "{counts:?}");
    }

    #[test]
    fn zero_weights_give_no_seeds_and_single_mass_is_certain() {
        assert!(sample_seeds(&field(8, 8, vec![0.0; 64]), 4, &mut Rng::new(0)).is_empty());
        let mut w = vec![0.0; 16];
        w[5] = 1.0;
        for s in 0..50 {
            let seeds = sample_seeds(&field(4, 4, w.clone()), 4, &mut Rng::new(s));
            assert_eq!(seeds, vec![Seed { pixel: 5, confidence: 1.0 }]);
        }
    }

    #[test]
    fn equal_weights_average_scores() {
        let lab = vec![[50.0, 0.0, 0.0]; 2];
        let features = FeatureImage::from_lab(2, 1, &lab).unwrap();
        let cfg = RefineConfig::default();
        let cluster = ClusterStats::new(features.get(0), 2, 1.0, Sign::Plus, &cfg).unwrap();
        let outcome = GrowOutcome {
            labels: LabelMap::new(2, 1, vec![0, 0]).unwrap(),
            clusters: vec![cluster],
            visits: vec![1, 1],
            flushes: 0,
        };
        // Identical features give identical assignment probabilities.
        let means = cluster_scores(&features, &[0.2, 1.0], &outcome, 8);
        assert!((means[0] - 0.6).abs() < 1e-7);
    }

    #[test]
    fn combine_runs_cases() {
        assert!(matches!(combine_runs(&[]), Err(Error::NoRuns)));
        let single = vec![(vec![0.3, 0.9], vec![0.01, 0.0])];
        assert_eq!(combine_runs(&single).unwrap(), single[0]);
        let equal = vec![(vec![0.2], vec![0.05]), (vec![0.6], vec![0.05])];
        assert!((combine_runs(&equal).unwrap().0[0] - 0.4).abs() < 1e-12);
        let weighted = vec![(vec![0.8], vec![0.01]), (vec![0.4], vec![0.04])];
        let (c, v) = combine_runs(&weighted).unwrap();
        assert!((c[0] - 0.72).abs() < 1e-12);
        assert!((v[0] - 1.0 / 125.0).abs() < 1e-12);
    }

    #[test]
    fn moments_of_identical_planes_have_zero_variance() {
        let planes = vec![vec![0.1, 0.7, 0.3]; 5];
        let (m, v) = monte_carlo_moments(&planes);
        assert_eq!(m, planes[0]);
        assert!(v.iter().all(|&x| x == 0.0));
        let (m, v) = monte_carlo_moments(&[vec![0.0], vec![1.0]]);
        assert_eq!((m[0], v[0]), (0.5, 0.25));
    }
}
