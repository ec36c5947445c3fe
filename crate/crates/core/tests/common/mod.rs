#![allow(dead_code)]

use gamesys_core::design::{load_design, GameDesign};
use gamesys_core::sim::{Metric, MetricWeights, Polarity};

pub fn fixture(name: &str) -> GameDesign {
    let path = format!("{}/tests/fixtures/{name}.json", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"));
    load_design(&text).unwrap_or_else(|e| panic!("{path}: {e}"))
}

/// Strips every resource-related component, leaving a pure state graph.
pub fn without_resources(mut d: GameDesign) -> GameDesign {
    d.resources.clear();
    d.taps.clear();
    d.drains.clear();
    d.converters.clear();
    for a in &mut d.actions {
        a.costs.clear();
    }
    d
}

/// Weighted reward written out from the metric definitions.
pub fn weighted(m: &[f64; 10], w: &MetricWeights) -> f64 {
    Metric::ALL
        .iter()
        .map(|&k| {
            let sign = match k.polarity() {
                Polarity::Reward => 1.0,
                Polarity::Penalty => -1.0,
            };
            sign * w.get(k) * m[k.index()]
        })
        .sum()
}

fn successors<'a>(d: &'a GameDesign, state: &str) -> Vec<(&'a str, &'a str)> {
    let mut out: Vec<(&str, &str)> = d
        .transitions
        .iter()
        .filter(|t| t.from == state)
        .map(|t| (t.action.as_str(), t.to.as_str()))
        .collect();
    out.sort();
    out
}

/// Per-step metric vectors and rewards of a path through a resource-free
/// design, recomputed by brute force from the definitions.
pub fn replay_resource_free(
    d: &GameDesign,
    path: &[String],
    actions: &[String],
    w: &MetricWeights,
) -> (Vec<[f64; 10]>, Vec<f64>) {
    let mut metrics = Vec::new();
    let mut rewards: Vec<f64> = Vec::new();
    for (i, state) in path.iter().enumerate() {
        let prior_visits = |s: &str| path[..i].iter().filter(|p| p.as_str() == s).count() as f64;
        let rep = prior_visits(state);
        let (act_rep, act_nov) = match i {
            0 => (0.0, 0.0),
            _ => {
                let a = &actions[i - 1];
                let uses = actions[..i - 1].iter().filter(|x| *x == a).count() as f64;
                (uses, if uses == 0.0 { 1.0 } else { 0.0 })
            }
        };
        let succ = successors(d, state);
        let mut unvisited: Vec<&str> =
            succ.iter().map(|&(_, to)| to).filter(|&to| to != state && prior_visits(to) == 0.0).collect();
        unvisited.sort();
        unvisited.dedup();
        let window = i / 2;
        let consistency: f64 = rewards[i - window..].iter().sum();
        let importance = d.states.iter().find(|s| &s.id == state).unwrap().importance;
        let m = [
            importance,
            rep,
            if rep == 0.0 { 1.0 } else { 0.0 },
            act_rep,
            act_nov,
            0.0,
            0.0,
            consistency,
            succ.len() as f64,
            unvisited.len() as f64,
        ];
        rewards.push(weighted(&m, w));
        metrics.push(m);
    }
    (metrics, rewards)
}

/// Best total reward over every action sequence of at most `horizon`
/// actions (sequences stop early only where no action exists).
pub fn brute_force_best(d: &GameDesign, horizon: usize, w: &MetricWeights) -> f64 {
    fn go(
        d: &GameDesign,
        path: &mut Vec<String>,
        actions: &mut Vec<String>,
        horizon: usize,
        w: &MetricWeights,
        best: &mut f64,
    ) {
        let state = path.last().unwrap().clone();
        let succ: Vec<(String, String)> =
            successors(d, &state).into_iter().map(|(a, t)| (a.to_string(), t.to_string())).collect();
        if actions.len() == horizon || succ.is_empty() {
            let (_, rewards) = replay_resource_free(d, path, actions, w);
            *best = best.max(rewards.iter().sum());
            return;
        }
        for (a, to) in succ {
            path.push(to);
            actions.push(a);
            go(d, path, actions, horizon, w, best);
            path.pop();
            actions.pop();
        }
    }
    let mut best = f64::NEG_INFINITY;
    go(d, &mut vec![d.start_state.clone()], &mut Vec::new(), horizon, w, &mut best);
    best
}
