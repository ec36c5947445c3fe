//! Designer-facing digests of a play-through.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{
    simulate, Metric, MetricVector, MetricWeights, PlaythroughReport, SimConfig, SimError, TerminationReason,
};
use crate::design::GameDesign;

/// A compact view of a play-through, small enough to show next to a
/// candidate design.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PlaythroughDigest {
    pub path_length: usize,
    /// Up to three most-visited states with their counts, most visited first.
    pub top_states: Vec<(String, u32)>,
    pub path_preview: Vec<String>,
    pub mean_metrics: MetricVector,
    pub total_reward: f64,
    pub termination_reason: TerminationReason,
}

const PREVIEW: usize = 8;

fn ranked<'a>(counts: impl Iterator<Item = (&'a String, &'a u32)>) -> Vec<(String, u32)> {
    let mut v: Vec<(String, u32)> = counts.map(|(k, &c)| (k.clone(), c)).collect();
    // Ties go to the smaller id.
    v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    v
}

impl PlaythroughDigest {
    pub fn of(report: &PlaythroughReport) -> Self {
        let mut top_states = ranked(report.state_counts.iter());
        top_states.truncate(3);
        PlaythroughDigest {
            path_length: report.state_path.len(),
            top_states,
            path_preview: report.state_path.iter().take(PREVIEW).cloned().collect(),
            mean_metrics: report.mean_metrics,
            total_reward: report.total_reward,
            termination_reason: report.termination_reason,
        }
    }
}

fn path_digest(path: &[String]) -> String {
    if path.len() <= PREVIEW + 2 {
        return path.join(" -> ");
    }
    format!(
        "{} -> ... ({} more) ... -> {}",
        path[..PREVIEW].join(" -> "),
        path.len() - PREVIEW - 1,
        path[path.len() - 1]
    )
}

/// Renders a report as plain text for a designer.
pub fn summarize(design_name: &str, report: &PlaythroughReport) -> String {
    let mut s = String::new();
    let arrivals = report.state_path.len();
    let ending = match report.termination_reason {
        TerminationReason::MaxEpochs => "reached the epoch limit",
        TerminationReason::NoValidActions => "ran out of valid actions",
    };
    let _ = writeln!(
        s,
        "Play-through of `{design_name}`: {arrivals} arrival(s), {} action(s); {ending}.",
        report.actions_taken.len()
    );
    let _ = writeln!(s, "Total reward: {}", report.total_reward);

    let _ = writeln!(s, "Insights:");
    if report.actions_taken.is_empty() {
        let start = report.state_path.first().map(String::as_str).unwrap_or("?");
        let _ = writeln!(
            s,
            "  - No valid actions from start state `{start}`: the player can never act. Add a transition out of it or make its actions affordable."
        );
    }
    if let Some((state, count)) = ranked(report.state_counts.iter()).first() {
        let _ = writeln!(s, "  - Most visited state: `{state}` ({count} of {arrivals} arrivals)");
    }
    if let Some((action, count)) = ranked(report.action_counts.iter()).first() {
        let _ = writeln!(s, "  - Most used action: `{action}` ({count} uses)");
    }
    let never: Vec<&str> =
        report.state_counts.iter().filter(|(_, &c)| c == 0).map(|(k, _)| k.as_str()).collect();
    if !never.is_empty() {
        let _ = writeln!(s, "  - Never visited: {}", never.join(", "));
    }
    if !report.playable {
        let _ = writeln!(s, "  - Design is not playable under the current settings.");
    }

    let _ = writeln!(s, "Path: {}", path_digest(&report.state_path));

    let _ = writeln!(s, "State visits:");
    for (state, count) in ranked(report.state_counts.iter()) {
        let _ = writeln!(s, "  {state}: {count}");
    }
    if !report.action_counts.is_empty() {
        let _ = writeln!(s, "Action uses:");
        for (action, count) in ranked(report.action_counts.iter()) {
            let _ = writeln!(s, "  {action}: {count}");
        }
    }
    if !report.resource_totals.is_empty() {
        let _ = writeln!(s, "Resources (gained / lost / spent):");
        for (r, t) in &report.resource_totals {
            let _ = writeln!(s, "  {r}: {} / {} / {}", t.gained, t.lost, t.spent);
        }
    }
    let _ = writeln!(s, "Mean metrics:");
    for m in Metric::ALL {
        let _ = writeln!(s, "  {}: {}", m.name(), report.mean_metrics.get(m));
    }
    s
}

/// Simulates `design` and renders the result for a designer.
pub fn evaluate(
    design: &GameDesign,
    w: &MetricWeights,
    cfg: &SimConfig,
) -> Result<(PlaythroughReport, String), SimError> {
    let report = simulate(design, w, cfg)?;
    let summary = summarize(&design.name, &report);
    Ok((report, summary))
}
