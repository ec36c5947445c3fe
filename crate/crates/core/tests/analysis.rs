use gamesys_core::analysis::{
    controllability, export_report, expressive_range, render_report, signed_rank_test, ControllabilityReport,
    Direction, ExportFormat, ExpressiveRangeReport, OptimizerMode, HISTOGRAM_BINS,
};
use gamesys_core::evolution::{EvolutionConfig, SamplerCaps};
use gamesys_core::sim::{Metric, SimConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Exhaustive one-sided p-value: the share of all 2^n sign flips of the
/// magnitudes whose positive rank sum is at least (or at most) the observed.
fn enumerate_p(deltas: &[f64], direction: Direction) -> f64 {
    let d: Vec<f64> = deltas.iter().copied().filter(|&x| x != 0.0).collect();
    if d.is_empty() {
        return 0.5;
    }
    let mags: Vec<f64> = d.iter().map(|x| x.abs()).collect();
    // Midrank = (# smaller) + (# equal + 1) / 2.
    let ranks: Vec<f64> = mags
        .iter()
        .map(|&m| {
            let less = mags.iter().filter(|&&o| o < m).count() as f64;
            let equal = mags.iter().filter(|&&o| o == m).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect();
    let observed: f64 = d.iter().zip(&ranks).filter(|(x, _)| **x > 0.0).map(|(_, r)| r).sum();
    let n = d.len();
    let mut hits = 0u64;
    for mask in 0u64..(1 << n) {
        let w: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        let hit = match direction {
            Direction::Positive => w >= observed,
            Direction::Negative => w <= observed,
        };
        hits += u64::from(hit);
    }
    hits as f64 / (1u64 << n) as f64
}

#[test]
fn signed_rank_matches_enumeration_up_to_eight() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut checked = 0;
    for n in 2..=8 {
        for _ in 0..400 {
            // Small integers force ties and zeros.
            let d: Vec<f64> = (0..n).map(|_| rng.random_range(-4i32..=4) as f64 * 0.5).collect();
            for dir in [Direction::Positive, Direction::Negative] {
                assert_eq!(signed_rank_test(&d, dir), enumerate_p(&d, dir), "{d:?} {dir:?}");
                checked += 1;
            }
        }
    }
    assert!(checked > 5000);
}

#[test]
fn signed_rank_matches_enumeration_on_continuous_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for n in 2..=10 {
        for _ in 0..100 {
            let d: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            for dir in [Direction::Positive, Direction::Negative] {
                assert_eq!(signed_rank_test(&d, dir), enumerate_p(&d, dir));
            }
        }
    }
}

#[test]
fn signed_rank_examples() {
    let pos: Vec<f64> = (1..=10).map(|i| i as f64 * 0.3).collect();
    assert_eq!(signed_rank_test(&pos, Direction::Positive), 1.0 / 1024.0);
    assert_eq!(signed_rank_test(&[0.0, 0.0, 0.0], Direction::Negative), 0.5);
    // Symmetric pairs sit at the centre of the null distribution.
    let sym = [1.0, -1.0, 2.5, -2.5, 4.0, -4.0, 7.0, -7.0, 9.0, -9.0];
    for dir in [Direction::Positive, Direction::Negative] {
        let p = signed_rank_test(&sym, dir);
        assert_eq!(p, enumerate_p(&sym, dir));
        assert!((0.5..0.65).contains(&p), "{p}");
    }
}

proptest! {
    #[test]
    fn signed_rank_is_order_free(mut d in prop::collection::vec(-5i32..=5, 2..12), seed in any::<u64>()) {
        let d0: Vec<f64> = d.iter().map(|&x| x as f64).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..d.len()).rev() {
            d.swap(i, rng.random_range(0..=i));
        }
        let d1: Vec<f64> = d.iter().map(|&x| x as f64).collect();
        for dir in [Direction::Positive, Direction::Negative] {
            prop_assert_eq!(signed_rank_test(&d0, dir), signed_rank_test(&d1, dir));
        }
    }
}

fn small_range(n: usize, seed: u64) -> ExpressiveRangeReport {
    expressive_range(n, &SamplerCaps::default(), &SimConfig::study(), seed)
}

#[test]
fn expressive_range_is_reproducible_and_consistent() {
    let a = small_range(400, 5);
    let b = small_range(400, 5);
    assert_eq!(
        render_report(&a, ExportFormat::Json).unwrap(),
        render_report(&b, ExportFormat::Json).unwrap()
    );
    assert_eq!(a.n_generated, 400);
    assert_eq!(a.designs.len(), 400);
    assert_eq!(a.n_playable, a.designs.iter().filter(|d| d.playable).count());
    assert!(a.n_playable > 0 && a.n_playable <= a.n_generated);
    assert_eq!(a.metrics.len(), 10);
    for (dist, m) in a.metrics.iter().zip(Metric::ALL) {
        assert_eq!(dist.metric, m);
        assert_eq!(dist.histogram.counts.len(), HISTOGRAM_BINS);
        assert_eq!(dist.histogram.counts.iter().sum::<u64>() as usize, a.n_playable);
        let s = dist.stats.unwrap();
        assert!(s.min <= s.mean && s.mean <= s.max);
        assert!(s.variance >= 0.0);
    }
    assert_ne!(
        render_report(&small_range(400, 6), ExportFormat::Json).unwrap(),
        render_report(&a, ExportFormat::Json).unwrap()
    );
}

#[test]
fn expressive_range_with_nothing_playable() {
    // A minimum arrival count beyond the horizon rules every design out.
    let sim = SimConfig { min_playable_steps: 1000, ..SimConfig::study() };
    let r = expressive_range(50, &SamplerCaps::uniform(1), &sim, 1);
    assert_eq!(r.n_playable, 0);
    for dist in &r.metrics {
        assert!(dist.stats.is_none());
        assert_eq!(dist.histogram.counts.iter().sum::<u64>(), 0);
    }
    let json = render_report(&r, ExportFormat::Json).unwrap();
    assert!(!json.contains("NaN"));
    let back: ExpressiveRangeReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back, r);
}

fn tiny_evo() -> EvolutionConfig {
    EvolutionConfig {
        population_size: 4,
        generations: 2,
        human_every_k: 0,
        sim_config: SimConfig::study(),
        ..EvolutionConfig::default()
    }
}

#[test]
fn controllability_shapes() {
    let r = controllability(3, -100.0, 100.0, OptimizerMode::Generator, &tiny_evo(), 2).unwrap();
    assert_eq!(r.n_games, 3);
    assert_eq!(r.games.len(), 3);
    assert_eq!(r.metrics.len(), 10);
    for (m, metric) in r.metrics.iter().zip(Metric::ALL) {
        assert_eq!(m.metric, metric);
        assert_eq!(m.deltas.len(), 3);
        for g in 0..3 {
            assert_eq!(m.deltas[g], m.high_scores[g] - m.low_scores[g]);
        }
        assert!((0.0..=1.0).contains(&m.p_value));
    }
}

#[test]
fn equal_weights_give_no_effect() {
    // Both arms share the GA seed, so identical weights give identical optima.
    let r = controllability(4, 1.0, 1.0, OptimizerMode::Balancer, &tiny_evo(), 3).unwrap();
    for m in &r.metrics {
        assert!(m.deltas.iter().all(|&d| d == 0.0));
        assert_eq!(m.p_value, 0.5);
    }
}

#[test]
fn gains_respond_to_their_weight() {
    let evo = EvolutionConfig { population_size: 12, generations: 20, ..tiny_evo() };
    let r = controllability(10, -100.0, 100.0, OptimizerMode::Balancer, &evo, 0).unwrap();
    let gains = &r.metrics[Metric::ResourceGains.index()];
    assert!(gains.mean_delta.unwrap() > 0.0);
    assert!(gains.p_value < 0.1, "{}", gains.p_value);
}

#[test]
fn exports_are_deterministic_and_round_trip() {
    let er = small_range(30, 7);
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("er.csv");
    export_report(&er, ExportFormat::Csv, &csv_path).unwrap();
    let first = std::fs::read(&csv_path).unwrap();
    export_report(&er, ExportFormat::Csv, &csv_path).unwrap();
    assert_eq!(first, std::fs::read(&csv_path).unwrap());
    let text = String::from_utf8(first).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("index,playable,pathLength,goalImportance,stateRepetition"));
    assert!(header.ends_with("interactivity,curiosity"));
    assert_eq!(lines.count(), 30);

    let json_path = dir.path().join("er.json");
    export_report(&er, ExportFormat::Json, &json_path).unwrap();
    let back: ExpressiveRangeReport =
        serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(back, er);

    let cr = controllability(2, -100.0, 100.0, OptimizerMode::Balancer, &tiny_evo(), 4).unwrap();
    let csv = render_report(&cr, ExportFormat::Csv).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 10);
    assert!(csv.lines().next().unwrap().ends_with(",pValue"));
    let json = render_report(&cr, ExportFormat::Json).unwrap();
    let back: ControllabilityReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back, cr);
}

#[test]
fn empty_reports_export_header_only() {
    let mut er = small_range(5, 8);
    er.designs.clear();
    let csv = render_report(&er, ExportFormat::Csv).unwrap();
    assert_eq!(csv.lines().count(), 1);
    let mut cr = controllability(2, -1.0, 1.0, OptimizerMode::Balancer, &tiny_evo(), 5).unwrap();
    cr.n_games = 0;
    for m in &mut cr.metrics {
        m.deltas.clear();
    }
    let csv = render_report(&cr, ExportFormat::Csv).unwrap();
    assert_eq!(csv.lines().count(), 1);
}

#[test]
fn unwritable_path_is_an_io_error() {
    let er = small_range(3, 9);
    let err =
        export_report(&er, ExportFormat::Csv, std::path::Path::new("/nonexistent/dir/x.csv")).unwrap_err();
    assert_eq!(err.code(), "IO_ERROR");
}
