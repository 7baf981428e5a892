//! The feedback loop: alternate `U_p` and `U_d(beta_k)` layers, estimate the
//! commutator expectation `A_k` and cost `C_k` on the new state, and feed
//! `beta_{k+1} = -alpha * A_k` into the next layer.

use std::io::Write;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::estimators::{DirectEstimator, ExactEstimator, ObservableEstimator, ShadowEnsemble, ShadowEstimator};
use crate::graph::Graph;
use crate::hamiltonian::{dense_problem_hamiltonian, ObservableSet};
use crate::simulator::StateVector;

pub const DEFAULT_DT: f64 = 0.05;
pub const DEFAULT_LAYERS: usize = 75;
pub const DEFAULT_SHOTS_PER_ROUND: u64 = 128;

/// How observables are evaluated inside the loop.
#[derive(Clone, Debug, PartialEq)]
pub enum EstimatorMode {
    Exact,
    Direct {
        shots: u64,
    },
    Shadow {
        ensemble: ShadowEnsemble,
        rounds: usize,
        shots_per_round: u64,
    },
}

impl EstimatorMode {
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorMode::Exact => "exact",
            EstimatorMode::Direct { .. } => "direct",
            EstimatorMode::Shadow { .. } => "shadow",
        }
    }

    /// Measurements per layer.
    pub fn budget(&self) -> u64 {
        match self {
            EstimatorMode::Exact => 0,
            EstimatorMode::Direct { shots } => *shots,
            EstimatorMode::Shadow {
                rounds,
                shots_per_round,
                ..
            } => *rounds as u64 * shots_per_round,
        }
    }

    pub fn estimator(&self) -> Box<dyn ObservableEstimator> {
        match self {
            EstimatorMode::Exact => Box::new(ExactEstimator),
            EstimatorMode::Direct { shots } => Box::new(DirectEstimator { shots: *shots }),
            EstimatorMode::Shadow {
                ensemble,
                rounds,
                shots_per_round,
            } => Box::new(ShadowEstimator {
                ensemble: ensemble.clone(),
                rounds: *rounds,
                shots_per_round: *shots_per_round,
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FalqonConfig {
    pub dt: f64,
    pub layers: usize,
    /// Feedback gain in `beta_{k+1} = -alpha * A_k`.
    pub alpha: f64,
    pub estimator: EstimatorMode,
    /// Stop once `|C_l - C_{l+1}| < tol` on consecutive estimated costs.
    pub halt_tolerance: Option<f64>,
    pub seed: u64,
}

impl Default for FalqonConfig {
    fn default() -> Self {
        Self {
            dt: DEFAULT_DT,
            layers: DEFAULT_LAYERS,
            alpha: 1.0,
            estimator: EstimatorMode::Exact,
            halt_tolerance: None,
            seed: 0,
        }
    }
}

impl FalqonConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Domain(format!("dt must be positive, got {}", self.dt)));
        }
        if self.layers == 0 {
            return Err(Error::Domain("at least one layer is required".into()));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Domain(format!("alpha must be positive, got {}", self.alpha)));
        }
        match &self.estimator {
            EstimatorMode::Exact => {}
            EstimatorMode::Direct { shots } if *shots == 0 => {
                return Err(Error::Domain("direct mode needs a positive shot budget".into()))
            }
            EstimatorMode::Shadow {
                rounds,
                shots_per_round,
                ..
            } if *rounds == 0 || *shots_per_round == 0 => {
                return Err(Error::Domain("shadow mode needs M >= 1 and K >= 1".into()))
            }
            _ => {}
        }
        if let Some(tol) = self.halt_tolerance {
            if tol.is_nan() || tol <= 0.0 {
                return Err(Error::Domain(format!("halt tolerance must be positive, got {tol}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LayerRecord {
    /// 1-based layer index `k`.
    pub layer: usize,
    /// `beta_k`, the driver strength applied in this layer.
    pub beta: f64,
    pub a_est: f64,
    pub c_est: f64,
    /// Exact cost of this run's own state after the layer.
    pub c_exact: f64,
    pub budget: u64,
}

#[derive(Clone, Debug)]
pub struct FalqonTrace {
    pub records: Vec<LayerRecord>,
    pub final_state: StateVector,
    pub alpha: f64,
}

impl FalqonTrace {
    pub fn final_exact_cost(&self) -> f64 {
        self.records.last().map(|r| r.c_exact).unwrap_or(0.0)
    }

    /// `-C_final / maxcut`, using the exact cost of the final state.
    pub fn approximation_ratio(&self, g: &Graph) -> Result<f64> {
        let best = g.max_cut_brute_force()?.value;
        if best == 0 {
            return Err(Error::Domain("graph has no edges to cut".into()));
        }
        Ok(-self.final_exact_cost() / best as f64)
    }

    pub fn exact_costs(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.c_exact).collect()
    }

    pub fn estimated_costs(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.c_est).collect()
    }

    /// CSV with columns `layer,beta,A_est,C_est,C_exact,budget`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "layer,beta,A_est,C_est,C_exact,budget")?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.layer, r.beta, r.a_est, r.c_est, r.c_exact, r.budget
            )?;
        }
        Ok(())
    }
}

/// Quantities shared by every layer of one run.
pub struct LayerContext {
    pub observables: ObservableSet,
    terms: Vec<crate::pauli::PauliString>,
    problem_diagonal: Vec<f64>,
}

impl LayerContext {
    pub fn new(g: &Graph) -> Result<Self> {
        let observables = ObservableSet::build(g)?;
        Ok(Self {
            terms: observables.all_terms(),
            problem_diagonal: dense_problem_hamiltonian(g)?,
            observables,
        })
    }

    pub fn problem_diagonal(&self) -> &[f64] {
        &self.problem_diagonal
    }

    /// `<psi|H_p|psi>` from the diagonal.
    pub fn exact_cost(&self, psi: &StateVector) -> f64 {
        psi.amplitudes()
            .iter()
            .zip(&self.problem_diagonal)
            .map(|(a, d)| a.norm_sqr() * d)
            .sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOutcome {
    pub a_est: f64,
    pub c_est: f64,
    pub c_exact: f64,
    pub budget: u64,
}

/// One layer: `psi <- U_d(beta) U_p psi`, then a fresh estimate of `A` and `C`
/// on the new state.
pub fn step(
    psi: &mut StateVector,
    beta: f64,
    dt: f64,
    ctx: &LayerContext,
    estimator: &dyn ObservableEstimator,
    rng: &mut dyn RngCore,
) -> Result<StepOutcome> {
    psi.apply_diagonal_phase(&ctx.problem_diagonal, dt)?;
    psi.apply_driver_unitary(beta, dt);
    let report = estimator.estimate(psi, &ctx.terms, rng)?;
    let n_control = ctx.observables.control_terms().len();
    let (control, cost) = report.estimates.split_at(n_control);
    Ok(StepOutcome {
        a_est: ctx.observables.control_from_expectations(control)?,
        c_est: ctx.observables.cost_from_expectations(cost)?,
        c_exact: ctx.exact_cost(psi),
        budget: report.budget,
    })
}

/// Runs the loop from `|+>^n` with `beta_1 = 0`, drawing randomness from `cfg.seed`.
pub fn run_falqon(g: &Graph, cfg: &FalqonConfig) -> Result<FalqonTrace> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    run_falqon_with_rng(g, cfg, &mut rng)
}

pub fn run_falqon_with_rng(g: &Graph, cfg: &FalqonConfig, rng: &mut dyn RngCore) -> Result<FalqonTrace> {
    cfg.validate()?;
    let ctx = LayerContext::new(g)?;
    let estimator = cfg.estimator.estimator();
    let mut psi = StateVector::plus_state(g.num_vertices())?;
    let mut beta = 0.0;
    let mut records: Vec<LayerRecord> = Vec::with_capacity(cfg.layers);

    for layer in 1..=cfg.layers {
        let out = step(&mut psi, beta, cfg.dt, &ctx, estimator.as_ref(), rng)?;
        let prev_cost = records.last().map(|r| r.c_est);
        records.push(LayerRecord {
            layer,
            beta,
            a_est: out.a_est,
            c_est: out.c_est,
            c_exact: out.c_exact,
            budget: out.budget,
        });
        beta = -cfg.alpha * out.a_est;
        if let (Some(tol), Some(prev)) = (cfg.halt_tolerance, prev_cost) {
            if (prev - out.c_est).abs() < tol {
                break;
            }
        }
    }
    Ok(FalqonTrace {
        records,
        final_state: psi,
        alpha: cfg.alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::PauliString;

    fn exact_cfg(layers: usize) -> FalqonConfig {
        FalqonConfig {
            layers,
            ..FalqonConfig::default()
        }
    }

    #[test]
    fn first_layer_has_zero_beta() {
        let g = Graph::cycle(4).unwrap();
        let t = run_falqon(&g, &exact_cfg(3)).unwrap();
        assert_eq!(t.records[0].beta, 0.0);

        // layer 1 is U_p alone
        let mut psi = StateVector::plus_state(4).unwrap();
        psi.apply_problem_unitary(&g, DEFAULT_DT).unwrap();
        let t1 = run_falqon(&g, &exact_cfg(1)).unwrap();
        assert_eq!(t1.final_state, psi);
    }

    #[test]
    fn beta_recurrence_holds() {
        let g = Graph::complete(4).unwrap();
        for mode in [
            EstimatorMode::Exact,
            EstimatorMode::Direct { shots: 512 },
            EstimatorMode::Shadow {
                ensemble: ShadowEnsemble::biased(),
                rounds: 4,
                shots_per_round: 128,
            },
        ] {
            let cfg = FalqonConfig {
                layers: 20,
                alpha: 0.7,
                estimator: mode,
                seed: 11,
                ..FalqonConfig::default()
            };
            let t = run_falqon(&g, &cfg).unwrap();
            for w in t.records.windows(2) {
                assert_eq!(w[1].beta + cfg.alpha * w[0].a_est, 0.0);
            }
        }
    }

    #[test]
    fn exact_a1_on_single_edge_matches_dense() {
        let g = Graph::complete(2).unwrap();
        let t = run_falqon(&g, &exact_cfg(1)).unwrap();
        // dense: psi_1 = U_p |++>, A_1 = <psi_1| YZ + ZY |psi_1>
        let mut psi = StateVector::plus_state(2).unwrap();
        let diag = dense_problem_hamiltonian(&g).unwrap();
        let amps: Vec<_> = psi
            .amplitudes()
            .iter()
            .zip(&diag)
            .map(|(a, d)| a * num_complex::Complex64::from_polar(1.0, -DEFAULT_DT * d))
            .collect();
        psi = StateVector::from_amplitudes(amps).unwrap();
        let comm = PauliString::from_label("YZ").unwrap().dense_matrix().unwrap()
            + PauliString::from_label("ZY").unwrap().dense_matrix().unwrap();
        let v = nalgebra::DVector::from_vec(psi.amplitudes().to_vec());
        let a1 = (v.adjoint() * comm * &v)[(0, 0)].re;
        assert!((t.records[0].a_est - a1).abs() <= 1e-10);
        // closed form for one edge: A_1 = 2 sin(dt)
        assert!((a1 - 2.0 * DEFAULT_DT.sin()).abs() <= 1e-12);
    }

    #[test]
    fn exact_cost_is_monotone_on_test_graphs() {
        let graphs = [
            Graph::complete(2).unwrap(),
            Graph::cycle(3).unwrap(),
            Graph::cycle(4).unwrap(),
            Graph::complete(4).unwrap(),
            Graph::complete(6).unwrap(),
        ];
        for g in graphs {
            let t = run_falqon(&g, &exact_cfg(DEFAULT_LAYERS)).unwrap();
            let costs = t.exact_costs();
            assert!((costs[0] + g.num_edges() as f64 / 2.0).abs() < 1e-12);
            for w in costs.windows(2) {
                assert!(w[1] <= w[0] + 1e-9, "{:?}: {} -> {}", g.edges(), w[0], w[1]);
            }
        }
    }

    #[test]
    fn approximation_ratio_cases() {
        let g = Graph::cycle(4).unwrap();
        let t = FalqonTrace {
            records: vec![LayerRecord {
                layer: 1,
                beta: 0.0,
                a_est: 0.0,
                c_est: -2.0,
                c_exact: -2.0,
                budget: 0,
            }],
            final_state: StateVector::plus_state(4).unwrap(),
            alpha: 1.0,
        };
        assert_eq!(t.approximation_ratio(&g).unwrap(), 0.5);

        let tri = Graph::cycle(3).unwrap();
        let t = run_falqon(&tri, &exact_cfg(200)).unwrap();
        let r = t.approximation_ratio(&tri).unwrap();
        assert!(r > 2.0 / 3.0 && r <= 1.0, "{r}");
    }

    #[test]
    fn deterministic_given_seed() {
        let g = Graph::cycle(4).unwrap();
        let cfg = FalqonConfig {
            layers: 10,
            estimator: EstimatorMode::Shadow {
                ensemble: ShadowEnsemble::biased(),
                rounds: 8,
                shots_per_round: 128,
            },
            seed: 99,
            ..FalqonConfig::default()
        };
        let a = run_falqon(&g, &cfg).unwrap();
        let b = run_falqon(&g, &cfg).unwrap();
        assert_eq!(a.records, b.records);
        let mut c1 = Vec::new();
        let mut c2 = Vec::new();
        a.write_csv(&mut c1).unwrap();
        b.write_csv(&mut c2).unwrap();
        assert_eq!(c1, c2);
    }

    #[test]
    fn halting_stops_early() {
        let g = Graph::cycle(4).unwrap();
        let cfg = FalqonConfig {
            layers: 500,
            halt_tolerance: Some(1e-3),
            ..FalqonConfig::default()
        };
        let t = run_falqon(&g, &cfg).unwrap();
        assert!(t.records.len() < 500);
        let n = t.records.len();
        assert!((t.records[n - 1].c_est - t.records[n - 2].c_est).abs() < 1e-3);
    }

    #[test]
    fn config_validation() {
        let g = Graph::cycle(4).unwrap();
        let bad = [
            FalqonConfig {
                dt: 0.0,
                ..FalqonConfig::default()
            },
            FalqonConfig {
                layers: 0,
                ..FalqonConfig::default()
            },
            FalqonConfig {
                alpha: -1.0,
                ..FalqonConfig::default()
            },
            FalqonConfig {
                estimator: EstimatorMode::Direct { shots: 0 },
                ..FalqonConfig::default()
            },
        ];
        for cfg in bad {
            assert!(run_falqon(&g, &cfg).is_err());
        }
    }

    #[test]
    fn trace_csv_layout() {
        let g = Graph::cycle(4).unwrap();
        let t = run_falqon(&g, &exact_cfg(5)).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "layer,beta,A_est,C_est,C_exact,budget");
        assert_eq!(lines.len(), 6);
        assert!(lines[1].starts_with("1,0,"));
    }
}
