//! Probabilistic seeded region growing.
//!
//! Tentative `(pixel, cluster, probability)` assignments wait in a max-priority queue.
//! Each pop draws `u ~ U[0, 1)` and assigns the pixel when `u < P`; on success the cluster
//! statistics absorb the pixel and every unlabeled 8-neighbor is queued against that
//! cluster. Failed attempts go to a recycling queue that is re-scored against the current
//! cluster statistics whenever the main queue drains. A pixel is attempted at most
//! `visit_cap` times; pixels never assigned stay [`LabelMap::ORPHAN`].

use crate::clusters::{assignment_probability, ClusterStats, Sign};
use crate::config::RefineConfig;
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::types::{FeatureImage, LabelMap};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// A pixel chosen to start a cluster, with its high-confidence probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Seed {
    pub pixel: usize,
    pub confidence: f64,
}

/// Queued tentative assignment. Higher probability first, then lower sequence number.
#[derive(Debug, Clone, Copy)]
struct Tentative {
    probability: f64,
    sequence: u64,
    pixel: u32,
    cluster: u32,
}

impl PartialEq for Tentative {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Tentative {}

impl PartialOrd for Tentative {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Tentative {
    fn cmp(&self, other: &Self) -> Ordering {
        self.probability
            .total_cmp(&other.probability)
            .then_with(|| other.sequence.cmp(&self.sequence))
    }
}

#[derive(Debug, Clone)]
pub struct GrowOutcome {
    /// Cluster index per pixel, or [`LabelMap::ORPHAN`].
    pub labels: LabelMap,
    /// Final statistics, indexed like the seeds.
    pub clusters: Vec<ClusterStats>,
    /// Sampling attempts per pixel.
    pub visits: Vec<u8>,
    /// Number of times the recycling queue was flushed back.
    pub flushes: usize,
}

impl GrowOutcome {
    pub fn orphan_count(&self) -> usize {
        self.labels.labels().iter().filter(|&&l| l == LabelMap::ORPHAN).count()
    }
}

/// Offsets of the 8-connected neighborhood.
pub(crate) const NEIGHBORS: [(isize, isize); 8] =
    [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];

struct Queues {
    main: BinaryHeap<Tentative>,
    recycle: Vec<(u32, u32)>,
    sequence: u64,
}

impl Queues {
    fn push(&mut self, pixel: usize, cluster: usize, probability: f64) {
        self.main.push(Tentative {
            probability,
            sequence: self.sequence,
            pixel: pixel as u32,
            cluster: cluster as u32,
        });
        self.sequence += 1;
    }
}

/// Grows `seeds` into clusters over `features`.
pub fn grow(
    features: &FeatureImage,
    seeds: &[Seed],
    gamma: u32,
    sign: Sign,
    cfg: &RefineConfig,
    rng: &mut Rng,
) -> Result<GrowOutcome> {
    if seeds.is_empty() {
        return Err(Error::NoSeeds);
    }
    let (width, height) = (features.width(), features.height());
    let n = features.len();
    if n > u32::MAX as usize - 1 {
        return Err(Error::InvalidArgument("image too large".into()));
    }
    let cap = cfg.visit_cap.min(255) as u8;
    let eta = cfg.eta;

    let mut labels = vec![LabelMap::ORPHAN; n];
    let mut visits = vec![0u8; n];
    let mut clusters = Vec::with_capacity(seeds.len());
    let mut queues = Queues {
        main: BinaryHeap::with_capacity(seeds.len() * 4),
        recycle: Vec::new(),
        sequence: 0,
    };

    let mut claimed = vec![false; n];
    for (k, seed) in seeds.iter().enumerate() {
        if seed.pixel >= n {
            return Err(Error::InvalidArgument(format!("seed pixel {} out of bounds", seed.pixel)));
        }
        if std::mem::replace(&mut claimed[seed.pixel], true) {
            return Err(Error::DuplicateSeed(seed.pixel));
        }
        clusters.push(ClusterStats::new(features.get(seed.pixel), gamma, seed.confidence, sign, cfg)?);
        queues.push(seed.pixel, k, 1.0);
    }
    drop(claimed);

    let max_flushes = usize::from(cap) * n;
    let mut flushes = 0;
    loop {
        while let Some(e) = queues.main.pop() {
            let j = e.pixel as usize;
            if visits[j] >= cap || labels[j] != LabelMap::ORPHAN {
                continue;
            }
            let u = rng.uniform();
            visits[j] += 1;
            if u < e.probability {
                let k = e.cluster as usize;
                labels[j] = e.cluster;
                let cluster = &mut clusters[k];
                cluster.update(features.get(j));
                let (x, y) = ((j % width) as isize, (j / width) as isize);
                for (dx, dy) in NEIGHBORS {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= width as isize || ny >= height as isize {
                        continue;
                    }
                    let nj = ny as usize * width + nx as usize;
                    // Exhausted pixels would be dropped on pop without a draw.
                    if labels[nj] == LabelMap::ORPHAN && visits[nj] < cap {
                        let p = assignment_probability(cluster.mahalanobis(features.get(nj)), eta);
                        queues.push(nj, k, p);
                    }
                }
            } else if visits[j] < cap {
                queues.recycle.push((e.pixel, e.cluster));
            }
        }
        if queues.recycle.is_empty() || flushes >= max_flushes {
            break;
        }
        flushes += 1;
        let pending = std::mem::take(&mut queues.recycle);
        for (pixel, cluster) in pending {
            let j = pixel as usize;
            // Already-labeled entries would be skipped on pop without drawing.
            if labels[j] != LabelMap::ORPHAN {
                continue;
            }
            let k = cluster as usize;
            let p = assignment_probability(clusters[k].mahalanobis(features.get(j)), eta);
            queues.push(j, k, p);
        }
    }

    Ok(GrowOutcome {
        labels: LabelMap::new(width, height, labels)?,
        clusters,
        visits,
        flushes,
    })
}
