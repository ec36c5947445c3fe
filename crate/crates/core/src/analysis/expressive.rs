use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::{Compiled, GameDesign};
use crate::evolution::{sample_random_design, SamplerCaps};
use crate::seeds;
use crate::sim::{simulate_compiled, Metric, MetricVector, MetricWeights, SimConfig};

pub const HISTOGRAM_BINS: usize = 40;

const DESIGN_STREAM: u64 = 1;
const SIM_STREAM: u64 = 2;

/// Summary statistics of one metric over the playable designs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MetricStats {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
    /// Population variance.
    pub variance: f64,
    /// Population skewness; 0 when the variance is 0.
    pub skewness: f64,
    /// Share of values exactly equal to 0.
    pub share_at_zero: f64,
    /// Share of values exactly equal to 1.
    pub share_at_one: f64,
}

impl MetricStats {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let m2 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let m3 = values.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
        let share = |x: f64| values.iter().filter(|&&v| v == x).count() as f64 / n;
        Some(MetricStats {
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            mean,
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            variance: m2,
            skewness: if m2 > 0.0 { m3 / m2.powf(1.5) } else { 0.0 },
            share_at_zero: share(0.0),
            share_at_one: share(1.0),
        })
    }
}

/// Equal-width bins spanning the observed range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `HISTOGRAM_BINS + 1` edges, or none when there is no data.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn of(values: &[f64]) -> Self {
        let mut counts = vec![0u64; HISTOGRAM_BINS];
        if values.is_empty() {
            return Histogram { edges: Vec::new(), counts };
        }
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        // A constant metric still gets a unit-wide range.
        let width = if hi > lo { (hi - lo) / HISTOGRAM_BINS as f64 } else { 1.0 / HISTOGRAM_BINS as f64 };
        let edges = (0..=HISTOGRAM_BINS).map(|i| lo + width * i as f64).collect();
        for &v in values {
            let bin = (((v - lo) / width) as usize).min(HISTOGRAM_BINS - 1);
            counts[bin] += 1;
        }
        Histogram { edges, counts }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MetricDistribution {
    pub metric: Metric,
    pub stats: Option<MetricStats>,
    pub histogram: Histogram,
}

/// One sampled design's play-through summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DesignRow {
    pub index: usize,
    pub playable: bool,
    pub path_length: usize,
    pub mean_metrics: MetricVector,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExpressiveRangeReport {
    pub n_generated: usize,
    pub n_playable: usize,
    pub seed: u64,
    pub caps: SamplerCaps,
    pub sim_config: SimConfig,
    /// One entry per metric, in the fixed metric order.
    pub metrics: Vec<MetricDistribution>,
    pub designs: Vec<DesignRow>,
}

/// The `index`-th random design of a study seeded with `seed`.
pub fn study_design(caps: &SamplerCaps, seed: u64, index: usize) -> GameDesign {
    let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(seed, DESIGN_STREAM, index as u64));
    sample_random_design(caps, &mut rng)
}

/// Samples `n` random designs, plays each once with all weights 1, and
/// describes the distribution of per-design mean metric scores over the
/// playable ones.
///
/// Design `i` and its play-through use seeds derived from `(seed, i)`, so
/// results do not depend on thread scheduling.
pub fn expressive_range(n: usize, caps: &SamplerCaps, sim: &SimConfig, seed: u64) -> ExpressiveRangeReport {
    let weights = MetricWeights::default();
    let designs: Vec<DesignRow> = (0..n)
        .into_par_iter()
        .map(|i| {
            let design = study_design(caps, seed, i);
            let c = Compiled::new(&design).expect("sampled designs are valid");
            let cfg = sim.clone().with_seed(seeds::derive(seed, SIM_STREAM, i as u64));
            let r = simulate_compiled(&c, &weights, &cfg, |_| {});
            DesignRow {
                index: i,
                playable: r.playable,
                path_length: r.state_path.len(),
                mean_metrics: r.mean_metrics,
            }
        })
        .collect();
    let playable: Vec<&DesignRow> = designs.iter().filter(|d| d.playable).collect();
    let metrics = Metric::ALL
        .into_iter()
        .map(|m| {
            let values: Vec<f64> = playable.iter().map(|d| d.mean_metrics.get(m)).collect();
            MetricDistribution {
                metric: m,
                stats: MetricStats::of(&values),
                histogram: Histogram::of(&values),
            }
        })
        .collect();
    ExpressiveRangeReport {
        n_generated: n,
        n_playable: playable.len(),
        seed,
        caps: caps.clone(),
        sim_config: sim.clone(),
        metrics,
        designs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stats_by_hand() {
        let s = MetricStats::of(&[0.0, 1.0, 1.0, 2.0]).unwrap();
        assert_eq!((s.min, s.mean, s.max), (0.0, 1.0, 2.0));
        assert_eq!(s.variance, 0.5);
        assert_eq!(s.skewness, 0.0);
        assert_eq!((s.share_at_zero, s.share_at_one), (0.25, 0.5));
        assert!(MetricStats::of(&[]).is_none());
        // Right tail: 0,0,0,4 -> mean 1, m2 3, m3 (3*(-1) + 27)/4 = 6.
        let s = MetricStats::of(&[0.0, 0.0, 0.0, 4.0]).unwrap();
        assert!((s.skewness - 6.0 / 3f64.powf(1.5)).abs() < 1e-12);
    }

    #[test]
    fn histogram_edges_and_counts() {
        let h = Histogram::of(&[0.0, 40.0, 10.0, 10.0]);
        assert_eq!(h.edges.len(), HISTOGRAM_BINS + 1);
        assert_eq!(h.edges[0], 0.0);
        assert_eq!(h.edges[HISTOGRAM_BINS], 40.0);
        assert_eq!(h.counts[0], 1);
        assert_eq!(h.counts[10], 2);
        assert_eq!(h.counts[39], 1);
        let flat = Histogram::of(&[3.0, 3.0]);
        assert_eq!(flat.counts[0], 2);
        let empty = Histogram::of(&[]);
        assert!(empty.edges.is_empty());
        assert_eq!(empty.counts.iter().sum::<u64>(), 0);
    }
}
