use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::str::FromStr;

/// Parameters of one refinement. Missing fields in a config file take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefineConfig {
    /// Smallest inter-seed spacing.
    pub gamma_low: u32,
    /// Largest inter-seed spacing.
    pub gamma_high: u32,
    /// Number of spacing strata.
    pub n_gamma: u32,
    /// Growing iterations per spacing; consecutive iterations alternate the color sign.
    pub iterations_per_gamma: u32,
    /// Antithetic scale applied to prior color variances as `1 ± rho`.
    pub rho: f64,
    /// Prior spatial standard deviation per unit of spacing.
    pub lambda: f64,
    pub alpha_spatial: f64,
    pub alpha_color: f64,
    pub kappa0: f64,
    pub sigma0_l: f64,
    pub sigma0_ab: f64,
    /// Number of competing clusters in the assignment probability.
    pub eta: u32,
    /// Maximum number of sampling attempts per pixel.
    pub visit_cap: u32,
    /// Complete refinement passes fused by inverse variance.
    pub runs: u32,
    pub rng_seed: u64,
    pub cdf_points: usize,
    /// Lower clamp on a seed's high-confidence probability.
    pub p_ih_floor: f64,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            gamma_low: 2,
            gamma_high: 16,
            n_gamma: 10,
            iterations_per_gamma: 2,
            rho: 0.6,
            lambda: 27.0,
            alpha_spatial: 5.0,
            alpha_color: 0.1,
            kappa0: 1.0,
            sigma0_l: 1000.0,
            sigma0_ab: 300.0,
            eta: 8,
            visit_cap: 8,
            runs: 1,
            rng_seed: 0,
            cdf_points: 256,
            p_ih_floor: 0.2,
        }
    }
}

impl RefineConfig {
    pub fn for_preset(preset: Preset) -> Self {
        let mut cfg = Self::default();
        preset.apply(&mut cfg);
        cfg
    }

    pub fn total_iterations(&self) -> usize {
        (self.n_gamma * self.iterations_per_gamma) as usize
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        let positive = [
            ("lambda", self.lambda),
            ("alpha_spatial", self.alpha_spatial),
            ("alpha_color", self.alpha_color),
            ("kappa0", self.kappa0),
            ("sigma0_l", self.sigma0_l),
            ("sigma0_ab", self.sigma0_ab),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if self.gamma_low < 2 {
            return fail("gamma_low must be at least 2");
        }
        if self.gamma_low > self.gamma_high {
            return fail("gamma_low must not exceed gamma_high");
        }
        if self.n_gamma < 1 || self.iterations_per_gamma < 1 {
            return fail("n_gamma and iterations_per_gamma must be at least 1");
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return fail("rho must lie in (0, 1)");
        }
        if self.eta < 1 {
            return fail("eta must be at least 1");
        }
        if !(1..=255).contains(&self.visit_cap) {
            return fail("visit_cap must lie in 1..=255");
        }
        if self.runs < 1 {
            return fail("runs must be at least 1");
        }
        if self.cdf_points < 2 {
            return fail("cdf_points must be at least 2");
        }
        if !(self.p_ih_floor > 0.0 && self.p_ih_floor <= 1.0) {
            return fail("p_ih_floor must lie in (0, 1]");
        }
        Ok(())
    }
}

/// Per-network settings: maximum spacing and whether to refine twice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Largefov,
    V2vgg,
    V2resnet,
    V3plus,
    Custom,
}

impl Preset {
    /// `(gamma_high, runs)`, or `None` for [`Preset::Custom`].
    pub fn settings(self) -> Option<(u32, u32)> {
        match self {
            Preset::Largefov => Some((48, 2)),
            Preset::V2vgg => Some((32, 2)),
            Preset::V2resnet => Some((24, 1)),
            Preset::V3plus => Some((16, 1)),
            Preset::Custom => None,
        }
    }

    pub fn apply(self, cfg: &mut RefineConfig) {
        if let Some((gamma_high, runs)) = self.settings() {
            cfg.gamma_high = gamma_high;
            cfg.runs = runs;
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "largefov" => Ok(Preset::Largefov),
            "v2vgg" => Ok(Preset::V2vgg),
            "v2resnet" => Ok(Preset::V2resnet),
            "v3plus" => Ok(Preset::V3plus),
            "custom" => Ok(Preset::Custom),
            other => Err(Error::InvalidArgument(format!("unknown preset {other:?}"))),
        }
    }
}
