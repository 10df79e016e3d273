//! Score distributions of the predicted foreground and background, and the per-pixel
//! probability of lying in a high-confidence region.

use libm::erfc;
use std::f64::consts::SQRT_2;

/// Smoothed cumulative distributions of background (`fb`) and foreground (`ff`) scores,
/// tabulated on an equally spaced grid over `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CdfPair {
    fb: Vec<f64>,
    ff: Vec<f64>,
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// Gaussian-kernel estimate of the CDF of `samples`, tabulated at `points` grid values and
/// rescaled so the last grid value is exactly 1.
fn kde_cdf(samples: &mut [f64], points: usize) -> Vec<f64> {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    let h = silverman_bandwidth(samples).max(1.0 / points as f64);
    let reach = 9.0 * h;
    let step = 1.0 / (points - 1) as f64;
    let mut cdf: Vec<f64> = (0..points)
        .map(|i| {
            let t = i as f64 * step;
            // Samples far below t contribute a full unit; far above contribute nothing.
            let lo = samples.partition_point(|&x| x < t - reach);
            let hi = samples.partition_point(|&x| x <= t + reach);
            let near: f64 = samples[lo..hi].iter().map(|&x| normal_cdf((t - x) / h)).sum();
            (lo as f64 + near) / n
        })
        .collect();
    let last = cdf[points - 1];
    let mut running: f64 = 0.0;
    for v in &mut cdf {
        running = running.max((*v / last).clamp(0.0, 1.0));
        *v = running;
    }
    cdf[points - 1] = 1.0;
    cdf
}

/// Silverman's rule of thumb on sorted samples.
fn silverman_bandwidth(sorted: &[f64]) -> f64 {
    let n = sorted.len() as f64;
    if sorted.len() < 2 {
        return 0.0;
    }
    let mean = sorted.iter().sum::<f64>() / n;
    let var = sorted.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let sd = var.sqrt();
    let q = |p: f64| {
        let pos = p * (n - 1.0);
        let i = pos.floor() as usize;
        let frac = pos - i as f64;
        let next = sorted[(i + 1).min(sorted.len() - 1)];
        sorted[i] + frac * (next - sorted[i])
    };
    let iqr = (q(0.75) - q(0.25)) / 1.34;
    let spread = if iqr > 0.0 { sd.min(iqr) } else { sd };
    0.9 * spread * n.powf(-0.2)
}

/// Step from 0 to 1 located at grid value `at` (0 or 1).
fn step_cdf(points: usize, at_one: bool) -> Vec<f64> {
    let mut v = vec![if at_one { 0.0 } else { 1.0 }; points];
    v[points - 1] = 1.0;
    v
}

impl CdfPair {
    pub fn from_tables(fb: Vec<f64>, ff: Vec<f64>) -> Self {
        assert!(fb.len() >= 2 && fb.len() == ff.len(), "CDF tables need equal length >= 2");
        Self { fb, ff }
    }

    pub fn points(&self) -> usize {
        self.fb.len()
    }

    pub fn fb_table(&self) -> &[f64] {
        &self.fb
    }

    pub fn ff_table(&self) -> &[f64] {
        &self.ff
    }

    fn lookup(table: &[f64], c: f64) -> f64 {
        if c < 0.0 {
            return 0.0;
        }
        if c >= 1.0 {
            return 1.0;
        }
        let pos = c * (table.len() - 1) as f64;
        let i = pos.floor() as usize;
        let frac = pos - i as f64;
        table[i] + frac * (table[i + 1] - table[i])
    }

    pub fn fb(&self, c: f64) -> f64 {
        Self::lookup(&self.fb, c)
    }

    pub fn ff(&self, c: f64) -> f64 {
        Self::lookup(&self.ff, c)
    }
}

/// Estimates background and foreground score CDFs for one class plane.
///
/// `foreground[j]` says whether pixel `j` was predicted as the class. An empty foreground
/// yields a step at 1 for `ff`; an empty background yields a step at 0 for `fb`.
pub fn estimate_score_cdfs(scores: &[f32], foreground: &[bool], points: usize) -> CdfPair {
    assert_eq!(scores.len(), foreground.len());
    assert!(points >= 2);
    let (mut fg, mut bg): (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
    for (&s, &f) in scores.iter().zip(foreground) {
        if f {
            fg.push(f64::from(s));
        } else {
            bg.push(f64::from(s));
        }
    }
    let ff = if fg.is_empty() { step_cdf(points, true) } else { kde_cdf(&mut fg, points) };
    let fb = if bg.is_empty() { step_cdf(points, false) } else { kde_cdf(&mut bg, points) };
    CdfPair { fb, ff }
}

/// Probability that a pixel scored `c` is below the background threshold or at or above the
/// foreground threshold: `1 - Fb(c) + Fb(c) Ff(c)`.
pub fn high_confidence_probability(c: f64, cdfs: &CdfPair) -> f64 {
    let fb = cdfs.fb(c);
    let ff = cdfs.ff(c);
    (1.0 - fb + fb * ff).clamp(0.0, 1.0)
}

/// Row-major seed weights `w_j = P(I_H | c_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedWeightField {
    pub width: usize,
    pub height: usize,
    pub weights: Vec<f64>,
}

pub fn seed_weight_field(scores: &[f32], width: usize, height: usize, cdfs: &CdfPair) -> SeedWeightField {
    assert_eq!(scores.len(), width * height);
    let weights = scores
        .iter()
        .map(|&c| high_confidence_probability(f64::from(c), cdfs))
        .collect();
    SeedWeightField { width, height, weights }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn constant_pair(fb: f64, ff: f64) -> CdfPair {
        // Tables whose interpolated value at 0.5 equals the requested constants.
        let mut b = vec![fb; 3];
        let mut f = vec![ff; 3];
        b[2] = 1.0;
        f[2] = 1.0;
        CdfPair::from_tables(b, f)
    }

    #[test]
    fn high_confidence_formula_cases() {
        assert_eq!(high_confidence_probability(0.5, &constant_pair(0.0, 0.3)), 1.0);
        assert_eq!(high_confidence_probability(0.5, &constant_pair(1.0, 0.0)), 0.0);
        assert!((high_confidence_probability(0.5, &constant_pair(0.5, 0.5)) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn identical_foreground_scores_give_a_step() {
        let scores = vec![0.9f32; 200];
        let cdf = estimate_score_cdfs(&scores, &vec![true; 200], 256);
        assert!(cdf.ff(0.85) < 0.01);
        assert!(cdf.ff(0.95) > 0.99);
        // Empty background is the step at zero.
        assert_eq!(cdf.fb(0.0), 1.0);
    }

    #[test]
    fn identical_background_scores_give_a_step() {
        let scores = vec![0.1f32; 200];
        let cdf = estimate_score_cdfs(&scores, &vec![false; 200], 256);
        assert!(cdf.fb(0.05) < 0.01);
        assert!(cdf.fb(0.15) > 0.99);
        assert!(cdf.ff(0.99) < 0.01);
        assert_eq!(cdf.ff(1.0), 1.0);
    }

    #[test]
    fn uniform_split_matches_empirical_cdf() {
        let mut scores = Vec::new();
        let mut fg = Vec::new();
        for i in 0..50 {
            scores.push(i as f32 * 0.01);
            fg.push(false);
        }
        for i in 51..=100 {
            scores.push(i as f32 * 0.01);
            fg.push(true);
        }
        let cdf = estimate_score_cdfs(&scores, &fg, 256);
        // Empirical oracle.
        let ecdf = |t: f64| (0..50).filter(|&i| f64::from(i as f32 * 0.01) <= t).count() as f64 / 50.0;
        for t in [0.1, 0.25, 0.4] {
            assert!((cdf.fb(t) - ecdf(t)).abs() < 0.05, "t={t}: {} vs {}", cdf.fb(t), ecdf(t));
        }
        assert!((cdf.fb(0.25) - 0.5).abs() < 0.05);
    }

    #[test]
    fn weight_field_matches_scalar_formula() {
        let scores: Vec<f32> = (0..64).map(|i| i as f32 / 63.0).collect();
        let fg: Vec<bool> = scores.iter().map(|&s| s >= 0.5).collect();
        let cdf = estimate_score_cdfs(&scores, &fg, 256);
        let field = seed_weight_field(&scores, 8, 8, &cdf);
        for (j, &c) in scores.iter().enumerate() {
            assert_eq!(field.weights[j], high_confidence_probability(f64::from(c), &cdf));
        }
    }

    #[test]
    fn certain_plane_gives_unit_weights() {
        let scores = vec![1.0f32; 16];
        let cdf = estimate_score_cdfs(&scores, &vec![true; 16], 256);
        let field = seed_weight_field(&scores, 4, 4, &cdf);
        assert!(field.weights.iter().all(|&w| w == 1.0));
    }

    #[test]
    fn unreachable_score_gets_zero_weight() {
        let cdf = constant_pair(1.0, 0.0);
        let field = seed_weight_field(&[0.5, 1.0], 2, 1, &cdf);
        assert_eq!(field.weights[0], 0.0);
        assert_eq!(field.weights[1], 1.0);
    }

    proptest! {
        #[test]
        fn cdfs_are_monotone_and_bounded(
            samples in proptest::collection::vec((0.0f32..=1.0, any::<bool>()), 1..300),
            points in 2usize..300,
        ) {
            let (scores, fg): (Vec<f32>, Vec<bool>) = samples.into_iter().unzip();
            let cdf = estimate_score_cdfs(&scores, &fg, points);
            for table in [cdf.fb_table(), cdf.ff_table()] {
                prop_assert_eq!(table[points - 1], 1.0);
                for w in table.windows(2) {
                    prop_assert!(w[0] <= w[1]);
                }
                prop_assert!(table.iter().all(|v| (0.0..=1.0).contains(v)));
            }
            for &c in &scores {
                let p = high_confidence_probability(f64::from(c), &cdf);
                prop_assert!((0.0..=1.0).contains(&p));
            }
        }
    }
}
