use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use falqon::estimators::{collect_shadow, shadow_expectations, ShadowData, ShadowEnsemble};
use falqon::experiments::{
    budget_search, derive_seed, emit_results, load_results, scaling_run, BudgetSearchConfig, MeasurementMode,
    ResultRow, ScalingRunConfig,
};
use falqon::falqon::{run_falqon, EstimatorMode, FalqonConfig};
use falqon::graph::Graph;
use falqon::hamiltonian::ObservableSet;
use falqon::simulator::StateVector;

fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut r = vec![0.0; xs.len()];
    for (rank, &i) in idx.iter().enumerate() {
        r[i] = rank as f64;
    }
    r
}

fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let d2: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b).powi(2)).sum();
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}

fn small_scaling() -> ScalingRunConfig {
    ScalingRunConfig {
        sizes: vec![3, 4, 5, 6],
        epsilons: vec![0.1, 0.2],
        runs: 4,
        layers: 4,
        seed: 11,
        ..ScalingRunConfig::default()
    }
}

fn mean_budget(samples: &[falqon::experiments::ScalingSample], n: usize, eps: f64) -> f64 {
    let v: Vec<f64> = samples
        .iter()
        .filter(|s| s.n == n && s.epsilon == eps)
        .map(|s| s.budget_per_layer)
        .collect();
    v.iter().sum::<f64>() / v.len() as f64
}

#[test]
fn scaling_budgets_grow_with_observable_count() {
    let cfg = small_scaling();
    let samples = scaling_run(&cfg).unwrap();
    assert_eq!(samples.len(), 4 * 2 * 4);
    for &eps in &cfg.epsilons {
        let ls: Vec<f64> = cfg.sizes.iter().map(|&n| (n * (n - 1)) as f64).collect();
        let means: Vec<f64> = cfg.sizes.iter().map(|&n| mean_budget(&samples, n, eps)).collect();
        assert!(spearman(&ls, &means) > 0.0, "eps {eps}: {means:?}");
    }
}

#[test]
fn looser_epsilon_needs_fewer_measurements() {
    let cfg = small_scaling();
    let samples = scaling_run(&cfg).unwrap();
    for &n in &cfg.sizes {
        assert!(mean_budget(&samples, n, 0.2) < mean_budget(&samples, n, 0.1), "n = {n}");
    }
}

#[test]
fn scaling_run_is_reproducible() {
    let cfg = small_scaling();
    assert_eq!(scaling_run(&cfg).unwrap(), scaling_run(&cfg).unwrap());
    let other = ScalingRunConfig {
        seed: 12,
        ..small_scaling()
    };
    assert_ne!(scaling_run(&cfg).unwrap(), scaling_run(&other).unwrap());
}

#[test]
fn search_returns_first_passing_probe() {
    for mode in [MeasurementMode::Direct, MeasurementMode::shadow_default()] {
        let mut cfg = BudgetSearchConfig::new(Graph::cycle(4).unwrap(), mode);
        cfg.template.layers = 15;
        cfg.err = 0.05;
        cfg.template.seed = 5;
        let r = budget_search(&cfg).unwrap();
        let (last, earlier) = r.probes.split_last().unwrap();
        assert_eq!(last.budget, r.budget);
        assert!(last.mean_delta_c <= cfg.err);
        assert!(earlier.iter().all(|p| p.mean_delta_c > cfg.err));
        assert_eq!(r.estimated.records.len(), 15);
        assert!(r.estimated.records.iter().all(|rec| rec.budget == r.budget));
    }
}

#[test]
fn estimated_runs_track_exact_run() {
    let g = Graph::cycle(4).unwrap();
    let exact = run_falqon(&g, &FalqonConfig::default()).unwrap();
    let modes = [
        EstimatorMode::Direct { shots: 1 << 20 },
        EstimatorMode::Shadow {
            ensemble: ShadowEnsemble::biased(),
            rounds: 1 << 13,
            shots_per_round: 128,
        },
    ];
    for mode in modes {
        let cfg = FalqonConfig {
            estimator: mode,
            seed: 21,
            ..FalqonConfig::default()
        };
        let trace = run_falqon(&g, &cfg).unwrap();
        let last = trace.records.last().unwrap().c_exact;
        assert!((last - exact.final_exact_cost()).abs() < 0.05, "{last}");
        assert!(trace.records.iter().all(|r| (r.c_est - r.c_exact).abs() < 0.1));
    }
}

#[test]
fn shadow_file_round_trip_reproduces_estimates() {
    let g = Graph::complete(4).unwrap();
    let obs = ObservableSet::build(&g).unwrap().all_terms();
    let mut psi = StateVector::plus_state(4).unwrap();
    psi.apply_problem_unitary(&g, 0.3).unwrap();
    psi.apply_driver_unitary(-0.8, 0.5);
    let ens = ShadowEnsemble::biased();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(3, &[1, 2]));
    let data = collect_shadow(&psi, &ens, 200, 16, &mut rng).unwrap();

    let mut buf = Vec::new();
    data.write_to(&mut buf).unwrap();
    let back = ShadowData::read_from(buf.as_slice()).unwrap();
    assert_eq!(back, data);
    assert_eq!(
        shadow_expectations(&back, &ens, &obs).unwrap(),
        shadow_expectations(&data, &ens, &obs).unwrap()
    );
}

#[test]
fn results_file_round_trip_through_disk() {
    let dir = std::env::temp_dir().join(format!("falqon-invariants-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("samples.csv");
    let samples = scaling_run(&small_scaling()).unwrap();
    let rows: Vec<ResultRow> = samples.iter().map(ResultRow::from_scaling).collect();
    emit_results(&rows, &[("seed".to_string(), "11".to_string())], &path).unwrap();
    assert_eq!(load_results(&path).unwrap(), rows);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn edge_list_file_matches_generator() {
    let text = "# square\nn 4\n0 1\n1 2\n2 3\n3 0\n";
    assert_eq!(Graph::parse_edge_list(text).unwrap(), Graph::cycle(4).unwrap());
}
