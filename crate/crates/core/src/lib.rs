//! Probabilistic region-growing refinement of semantic segmentation scoremaps.
//!
//! A coarse per-class score stack is refined by repeatedly growing clusters from
//! randomly drawn high-confidence seeds over CIELab+position features, replacing each
//! pixel's score by the weighted score of its cluster, and averaging over many random
//! spacings. The spread of those Monte-Carlo estimates is reported as a variance map.

pub mod clusters;
pub mod color;
pub mod confidence;
pub mod config;
pub mod error;
pub mod filters;
pub mod grower;
pub mod io;
pub mod metrics;
pub mod refine;
pub mod rng;
pub mod synth;
pub mod types;

pub use clusters::{assignment_probability, chi2_cdf5, chi2_sf5, ClusterStats, Sign};
pub use color::{build_feature_image, srgb_to_cielab};
pub use confidence::{estimate_score_cdfs, high_confidence_probability, CdfPair};
pub use config::{Preset, RefineConfig};
pub use error::{Error, Result};
pub use grower::{grow, GrowOutcome, Seed};
pub use refine::{combine_runs, refine_class, refine_multiclass, refine_stack, RefineOutput};
pub use rng::Rng;
pub use types::{Feature, FeatureImage, LabelMap, ScoreStack};
