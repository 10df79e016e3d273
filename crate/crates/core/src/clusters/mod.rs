//! Per-cluster Gaussian statistics with Normal-inverse-chi-squared priors.

mod chi2;

pub use chi2::{assignment_probability, chi2_cdf5, chi2_sf5, GAMMA_3_2, GAMMA_5_2};

use crate::config::RefineConfig;
use crate::error::{Error, Result};
use crate::types::{Feature, DIMS};
use serde::{Deserialize, Serialize};

/// Direction of the antithetic color-variance perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    /// Alternates `+, -, +, ...` over iteration indices.
    pub fn for_iteration(i: usize) -> Self {
        if i % 2 == 0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

/// Statistics of one growing cluster, independent per feature dimension.
///
/// Sample moments are kept with Welford's recurrence (`sample_mean`, `m2`), from which the
/// running sums are recoverable as `n * mean` and `m2 + n * mean^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterStats {
    mu0: Feature,
    kappa0: f64,
    nu0: Feature,
    sigma2_0: Feature,
    size: u64,
    sample_mean: Feature,
    m2: Feature,
    mu: Feature,
    sigma2: Feature,
    inv_sigma2: Feature,
    seed_confidence: f64,
    size_gate: u64,
    sign: Sign,
}

impl ClusterStats {
    /// Prior for a cluster seeded at `seed` with spacing `gamma`.
    pub fn new(seed: &Feature, gamma: u32, seed_conf: f64, sign: Sign, cfg: &RefineConfig) -> Result<Self> {
        if !(seed_conf > 0.0) {
            return Err(Error::NonPositiveSeedConfidence(seed_conf));
        }
        let conf = seed_conf.clamp(cfg.p_ih_floor, 1.0);
        let ratio2 = (f64::from(gamma) / conf).powi(2);
        let spatial = (cfg.lambda * f64::from(gamma)).powi(2);
        let scale = 1.0 + sign.factor() * cfg.rho;
        let sigma2_0 = [
            spatial,
            spatial,
            cfg.sigma0_l * scale,
            cfg.sigma0_ab * scale,
            cfg.sigma0_ab * scale,
        ];
        let (nu_s, nu_c) = (cfg.alpha_spatial * ratio2, cfg.alpha_color * ratio2);
        Ok(Self {
            mu0: *seed,
            kappa0: cfg.kappa0,
            nu0: [nu_s, nu_s, nu_c, nu_c, nu_c],
            sigma2_0,
            size: 0,
            sample_mean: [0.0; DIMS],
            m2: [0.0; DIMS],
            mu: *seed,
            sigma2: sigma2_0,
            inv_sigma2: sigma2_0.map(|v| 1.0 / v),
            seed_confidence: conf,
            size_gate: ratio2.ceil() as u64,
            sign,
        })
    }

    /// Adds one member and refreshes the posterior.
    ///
    /// The posterior mean is updated on every call; the posterior variance only once the
    /// cluster has reached `size_gate` members, using all members seen so far.
    pub fn update(&mut self, z: &Feature) {
        self.size += 1;
        let n = self.size as f64;
        let kappa_n = self.kappa0 + n;
        let gated = self.size >= self.size_gate;
        for d in 0..DIMS {
            let delta = z[d] - self.sample_mean[d];
            self.sample_mean[d] += delta / n;
            self.m2[d] += delta * (z[d] - self.sample_mean[d]);
            self.mu[d] = (self.kappa0 * self.mu0[d] + n * self.sample_mean[d]) / kappa_n;
            if gated {
                let shift = self.mu0[d] - self.sample_mean[d];
                let nu_n = self.nu0[d] + n;
                let s2 = (self.nu0[d] * self.sigma2_0[d]
                    + self.m2[d]
                    + n * self.kappa0 / kappa_n * shift * shift)
                    / nu_n;
                self.sigma2[d] = s2;
                self.inv_sigma2[d] = 1.0 / s2;
            }
        }
    }

    /// Squared Mahalanobis distance of `z` under the diagonal posterior.
    #[inline]
    pub fn mahalanobis(&self, z: &Feature) -> f64 {
        let mut d = 0.0;
        for k in 0..DIMS {
            let diff = z[k] - self.mu[k];
            d += diff * diff * self.inv_sigma2[k];
        }
        d
    }

    pub fn size(&self) -> u64 {
        self.size
    }

    pub fn size_gate(&self) -> u64 {
        self.size_gate
    }

    pub fn seed_confidence(&self) -> f64 {
        self.seed_confidence
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    pub fn mu0(&self) -> &Feature {
        &self.mu0
    }

    pub fn nu0(&self) -> &Feature {
        &self.nu0
    }

    pub fn sigma2_0(&self) -> &Feature {
        &self.sigma2_0
    }

    pub fn kappa0(&self) -> f64 {
        self.kappa0
    }

    pub fn kappa(&self) -> f64 {
        self.kappa0 + self.size as f64
    }

    pub fn nu(&self) -> Feature {
        self.nu0.map(|v| v + self.size as f64)
    }

    /// Posterior means `μ_n`.
    pub fn mean(&self) -> &Feature {
        &self.mu
    }

    /// Posterior variances `σ²_n`.
    pub fn variance(&self) -> &Feature {
        &self.sigma2
    }

    /// Running `Σ x_i` per dimension.
    pub fn sum(&self) -> Feature {
        self.sample_mean.map(|m| m * self.size as f64)
    }

    /// Running `Σ x_i²` per dimension.
    pub fn sum_sq(&self) -> Feature {
        let n = self.size as f64;
        let mut out = [0.0; DIMS];
        for d in 0..DIMS {
            out[d] = self.m2[d] + n * self.sample_mean[d] * self.sample_mean[d];
        }
        out
    }
}
