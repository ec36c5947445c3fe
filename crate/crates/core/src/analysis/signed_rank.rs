use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

/// Which way the alternative hypothesis shifts the deltas.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Positive,
    Negative,
}

/// Sample sizes up to this use the exact null distribution. Probabilities
/// stay exact dyadic rationals in f64 up to 53 nonzero deltas.
const EXACT_LIMIT: usize = 200;

/// Twice the midrank of each value's magnitude, so tied ranks stay integral.
fn doubled_midranks(magnitudes: &[f64]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..magnitudes.len()).collect();
    order.sort_by(|&a, &b| magnitudes[a].total_cmp(&magnitudes[b]));
    let mut ranks = vec![0u64; magnitudes.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && magnitudes[order[j + 1]] == magnitudes[order[i]] {
            j += 1;
        }
        // Ranks i+1..=j+1 share their mean; doubled that is i+j+2.
        for &k in &order[i..=j] {
            ranks[k] = (i + j + 2) as u64;
        }
        i = j + 1;
    }
    ranks
}

/// One-sided Wilcoxon signed-rank p-value for the deltas shifting in
/// `direction`.
///
/// Zero deltas are dropped; with nothing left the result is 0.5. Ties share
/// midranks and the exact permutation distribution is used for up to 200
/// nonzero deltas, a tie-corrected normal approximation beyond.
pub fn signed_rank_test(deltas: &[f64], direction: Direction) -> f64 {
    let nonzero: Vec<f64> = deltas.iter().copied().filter(|&d| d != 0.0).collect();
    if nonzero.is_empty() {
        return 0.5;
    }
    let magnitudes: Vec<f64> = nonzero.iter().map(|d| d.abs()).collect();
    let ranks = doubled_midranks(&magnitudes);
    let w_plus: u64 = nonzero.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let p = if nonzero.len() <= EXACT_LIMIT {
        exact_tail(&ranks, w_plus, direction)
    } else {
        normal_tail(&ranks, w_plus, direction)
    };
    p.clamp(0.0, 1.0)
}

/// P(W+ >= w) (or <= w) when each rank's sign is a fair coin.
fn exact_tail(ranks: &[u64], w: u64, direction: Direction) -> f64 {
    let total: u64 = ranks.iter().sum();
    let mut dist = vec![0.0f64; total as usize + 1];
    dist[0] = 1.0;
    let mut reach = 0usize;
    for &r in ranks {
        let r = r as usize;
        for s in (0..=reach).rev() {
            let p = dist[s] * 0.5;
            dist[s] = p;
            dist[s + r] += p;
        }
        reach += r;
    }
    match direction {
        Direction::Positive => dist[w as usize..].iter().sum(),
        Direction::Negative => dist[..=w as usize].iter().sum(),
    }
}

fn normal_tail(ranks: &[u64], w: u64, direction: Direction) -> f64 {
    // Work in undoubled ranks.
    let w = w as f64 / 2.0;
    let mean: f64 = ranks.iter().map(|&r| r as f64 / 2.0).sum::<f64>() / 2.0;
    let var: f64 = ranks.iter().map(|&r| (r as f64 / 2.0).powi(2)).sum::<f64>() / 4.0;
    let z = match direction {
        Direction::Positive => (w - 0.5 - mean) / var.sqrt(),
        Direction::Negative => (mean - w - 0.5) / var.sqrt(),
    };
    upper_normal(z)
}

/// Upper tail of the standard normal.
fn upper_normal(z: f64) -> f64 {
    Normal::standard().sf(z)
}
