//! Measurement-budget experiments.
//!
//! * [`budget_search`] grows the per-layer budget geometrically until the
//!   layer-averaged cost error against an exact-feedback reference run drops
//!   to `err`.
//! * [`scaling_run`] measures, on complete graphs, the per-layer shadow budget
//!   needed for every control observable to land within `epsilon` of its exact
//!   value, and [`fit_log`] fits `N = A * 4 log10(L) / eps^2 + B` to the result.
//!
//! Every stochastic piece is seeded from a master seed through
//! [`derive_seed`], so results are independent of thread scheduling.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{ShadowData, ShadowEnsemble};
use crate::falqon::{run_falqon, EstimatorMode, FalqonConfig, FalqonTrace, LayerContext, DEFAULT_SHOTS_PER_ROUND};
use crate::graph::Graph;
use crate::simulator::StateVector;

/// SplitMix64 finaliser.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic child seed for a tuple of coordinates under `master`.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(mix(master), |acc, &p| mix(acc ^ mix(p)))
}

#[derive(Clone, Debug, PartialEq)]
pub enum MeasurementMode {
    Direct,
    /// Shadows with a fixed `K`; the budget grows through `M`.
    Shadow {
        ensemble: ShadowEnsemble,
        shots_per_round: u64,
    },
}

impl MeasurementMode {
    pub fn shadow_default() -> Self {
        MeasurementMode::Shadow {
            ensemble: ShadowEnsemble::biased(),
            shots_per_round: DEFAULT_SHOTS_PER_ROUND,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MeasurementMode::Direct => "direct",
            MeasurementMode::Shadow { .. } => "shadow",
        }
    }

    fn tag(&self) -> u64 {
        match self {
            MeasurementMode::Direct => 1,
            MeasurementMode::Shadow { .. } => 2,
        }
    }

    /// Estimator for a per-layer budget, or `None` when the budget cannot be
    /// realised (not a multiple of `K`, or fewer shots than direct settings).
    fn estimator_for(&self, budget: u64, settings: usize) -> Option<EstimatorMode> {
        match self {
            MeasurementMode::Direct => (budget >= settings as u64).then_some(EstimatorMode::Direct { shots: budget }),
            MeasurementMode::Shadow {
                ensemble,
                shots_per_round,
            } => (budget.is_multiple_of(*shots_per_round) && budget > 0).then(|| EstimatorMode::Shadow {
                ensemble: ensemble.clone(),
                rounds: (budget / shots_per_round) as usize,
                shots_per_round: *shots_per_round,
            }),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BudgetSearchConfig {
    pub graph: Graph,
    /// Supplies `dt`, `layers`, `alpha` and the master seed; its estimator is ignored.
    pub template: FalqonConfig,
    pub mode: MeasurementMode,
    /// Threshold on the layer-averaged `|C_est - C_exact|`.
    pub err: f64,
    pub start_budget: u64,
    pub growth: u64,
    pub max_budget: u64,
    pub repetitions: usize,
}

impl BudgetSearchConfig {
    pub fn new(graph: Graph, mode: MeasurementMode) -> Self {
        Self {
            graph,
            template: FalqonConfig::default(),
            mode,
            err: 0.01,
            start_budget: DEFAULT_SHOTS_PER_ROUND,
            growth: 2,
            max_budget: 1 << 24,
            repetitions: 3,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.err.is_nan() || self.err <= 0.0 {
            return Err(Error::Domain(format!("err must be positive, got {}", self.err)));
        }
        if self.growth < 2 {
            return Err(Error::Domain(format!(
                "growth factor must be at least 2, got {}",
                self.growth
            )));
        }
        if self.start_budget == 0 || self.start_budget > self.max_budget {
            return Err(Error::Domain("start budget must be in 1..=max budget".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::Domain("at least one repetition is required".into()));
        }
        if let MeasurementMode::Shadow { shots_per_round, .. } = &self.mode {
            if *shots_per_round == 0 || !self.start_budget.is_multiple_of(*shots_per_round) {
                return Err(Error::Domain(format!(
                    "shadow start budget {} must be a positive multiple of K = {shots_per_round}",
                    self.start_budget
                )));
            }
        }
        self.template.validate()
    }
}

/// One rung of the budget schedule.
#[derive(Clone, Debug, PartialEq)]
pub struct BudgetProbe {
    pub budget: u64,
    /// Layer-averaged `|C_est - C_exact|` for each repetition.
    pub per_repetition: Vec<f64>,
    pub mean_delta_c: f64,
}

#[derive(Clone, Debug)]
pub struct BudgetSearchResult {
    pub budget: u64,
    pub probes: Vec<BudgetProbe>,
    /// First repetition at the accepted budget.
    pub estimated: FalqonTrace,
    /// Exact-feedback reference run.
    pub exact: FalqonTrace,
}

/// Mean over layers of `|C_est,i - C_exact,i|`, comparing an estimated run
/// against a separate exact reference run.
pub fn mean_delta_c(estimated: &FalqonTrace, reference: &FalqonTrace) -> f64 {
    let n = estimated.records.len().min(reference.records.len());
    if n == 0 {
        return f64::INFINITY;
    }
    estimated.records[..n]
        .iter()
        .zip(&reference.records[..n])
        .map(|(e, x)| (e.c_est - x.c_exact).abs())
        .sum::<f64>()
        / n as f64
}

/// Smallest budget on `start * growth^m` whose repetition-averaged mean
/// cost error is at most `err`.
pub fn budget_search(cfg: &BudgetSearchConfig) -> Result<BudgetSearchResult> {
    cfg.validate()?;
    let exact_cfg = FalqonConfig {
        estimator: EstimatorMode::Exact,
        halt_tolerance: None,
        ..cfg.template.clone()
    };
    let exact = run_falqon(&cfg.graph, &exact_cfg)?;
    let settings = {
        let (nb, nc) = cfg.graph.operator_counts();
        nb + usize::from(nc > 0)
    };

    let mut probes = Vec::new();
    let mut best = f64::INFINITY;
    let mut budget = cfg.start_budget;
    loop {
        if let Some(mode) = cfg.mode.estimator_for(budget, settings) {
            let runs: Vec<FalqonTrace> = (0..cfg.repetitions)
                .into_par_iter()
                .map(|rep| {
                    let run_cfg = FalqonConfig {
                        estimator: mode.clone(),
                        halt_tolerance: None,
                        seed: derive_seed(cfg.template.seed, &[cfg.mode.tag(), budget, rep as u64]),
                        ..cfg.template.clone()
                    };
                    run_falqon(&cfg.graph, &run_cfg)
                })
                .collect::<Result<_>>()?;
            let per_repetition: Vec<f64> = runs.iter().map(|t| mean_delta_c(t, &exact)).collect();
            let mean = per_repetition.iter().sum::<f64>() / per_repetition.len() as f64;
            best = best.min(mean);
            probes.push(BudgetProbe {
                budget,
                per_repetition,
                mean_delta_c: mean,
            });
            if mean <= cfg.err {
                let estimated = runs.into_iter().next().expect("at least one repetition");
                return Ok(BudgetSearchResult {
                    budget,
                    probes,
                    estimated,
                    exact,
                });
            }
        }
        match budget.checked_mul(cfg.growth) {
            Some(next) if next <= cfg.max_budget => budget = next,
            _ => {
                return Err(Error::Exhausted {
                    max_budget: cfg.max_budget,
                    best_score: best,
                    target: cfg.err,
                })
            }
        }
    }
}

/// How the shadow budget grows between accuracy checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GrowthRule {
    /// Multiply the number of rounds `M` by the factor (`M = 1, f, f^2, ...`).
    Geometric(u64),
    /// Add a fixed number of rounds per check (`M = s, 2s, 3s, ...`).
    Linear(usize),
}

impl GrowthRule {
    fn next_rounds(self, rounds: usize) -> usize {
        match self {
            GrowthRule::Geometric(f) => rounds.saturating_mul(f as usize),
            GrowthRule::Linear(step) => rounds.saturating_add(step),
        }
    }

    fn initial_rounds(self) -> usize {
        match self {
            GrowthRule::Geometric(_) => 1,
            GrowthRule::Linear(step) => step,
        }
    }

    fn validate(self) -> Result<()> {
        match self {
            GrowthRule::Geometric(f) if f < 2 => Err(Error::Domain(format!(
                "geometric growth factor must be at least 2, got {f}"
            ))),
            GrowthRule::Linear(0) => Err(Error::Domain("linear growth step must be positive".into())),
            _ => Ok(()),
        }
    }
}

impl std::fmt::Display for GrowthRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GrowthRule::Geometric(g) => write!(f, "geometric:{g}"),
            GrowthRule::Linear(s) => write!(f, "linear:{s}"),
        }
    }
}

impl std::str::FromStr for GrowthRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::parse(
                "growth rule",
                format!("expected `geometric:<factor>` or `linear:<rounds>`, got {s:?}"),
            )
        };
        let (kind, value) = s.split_once(':').ok_or_else(bad)?;
        let rule = match kind {
            "geometric" => GrowthRule::Geometric(value.parse().map_err(|_| bad())?),
            "linear" => GrowthRule::Linear(value.parse().map_err(|_| bad())?),
            _ => return Err(bad()),
        };
        rule.validate()?;
        Ok(rule)
    }
}

#[derive(Clone, Debug)]
pub struct ScalingRunConfig {
    /// Complete-graph sizes.
    pub sizes: Vec<usize>,
    /// Per-observable additive error targets.
    pub epsilons: Vec<f64>,
    pub runs: usize,
    pub shots_per_round: u64,
    pub ensemble: ShadowEnsemble,
    pub dt: f64,
    /// Length of the exact-feedback reference evolution checked at every layer.
    pub layers: usize,
    pub growth: GrowthRule,
    pub max_budget: u64,
    pub seed: u64,
}

impl Default for ScalingRunConfig {
    fn default() -> Self {
        Self {
            sizes: vec![4, 5, 6, 7, 8],
            epsilons: vec![0.05, 0.1],
            runs: 10,
            shots_per_round: DEFAULT_SHOTS_PER_ROUND,
            ensemble: ShadowEnsemble::biased(),
            dt: crate::falqon::DEFAULT_DT,
            layers: 10,
            growth: GrowthRule::Geometric(2),
            max_budget: 1 << 24,
            seed: 0,
        }
    }
}

impl ScalingRunConfig {
    fn validate(&self) -> Result<()> {
        if self.sizes.iter().any(|&n| n < 3) {
            return Err(Error::Domain("scaling sizes must be at least 3".into()));
        }
        if self.epsilons.iter().any(|&e| e.is_nan() || e <= 0.0) {
            return Err(Error::Domain("epsilon values must be positive".into()));
        }
        if self.runs == 0 || self.layers == 0 || self.shots_per_round == 0 {
            return Err(Error::Domain("runs, layers and K must be positive".into()));
        }
        if self.dt.is_nan() || self.dt <= 0.0 {
            return Err(Error::Domain("dt must be positive".into()));
        }
        self.growth.validate()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingSample {
    pub n: usize,
    /// Number of control observables, `n (n - 1)` on a complete graph.
    pub num_observables: usize,
    pub epsilon: f64,
    pub run: usize,
    /// Mean over reference layers of the accepted budget.
    pub budget_per_layer: f64,
    pub layer_budgets: Vec<u64>,
}

/// Exact-feedback states `|psi_1>, ..., |psi_layers>` together with the exact
/// control-observable values on each.
pub fn reference_states(g: &Graph, dt: f64, layers: usize) -> Result<Vec<(StateVector, Vec<f64>)>> {
    let ctx = LayerContext::new(g)?;
    let control = ctx.observables.control_terms();
    let mut psi = StateVector::plus_state(g.num_vertices())?;
    let mut beta = 0.0;
    let mut out = Vec::with_capacity(layers);
    for _ in 0..layers {
        psi.apply_diagonal_phase(ctx.problem_diagonal(), dt)?;
        psi.apply_driver_unitary(beta, dt);
        let exact = control.iter().map(|p| psi.expectation(p)).collect::<Result<Vec<_>>>()?;
        beta = -exact.iter().sum::<f64>();
        out.push((psi.clone(), exact));
    }
    Ok(out)
}

/// Accumulates fresh shadow rounds on `psi` until every estimate is within
/// `epsilon` of `exact`, checking at each budget of the growth schedule.
/// Returns the accepted budget `M * K`.
fn smallest_accurate_budget(
    psi: &StateVector,
    observables: &[crate::pauli::PauliString],
    exact: &[f64],
    epsilon: f64,
    cfg: &ScalingRunConfig,
    seed: u64,
) -> Result<u64> {
    for p in observables {
        if !cfg.ensemble.supports(p) {
            return Err(Error::UnsupportedObservable {
                observable: p.label(),
                allowed: cfg.ensemble.allowed_bases().iter().map(|b| b.as_char()).collect(),
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = cfg.shots_per_round;
    let mut acc = ShadowAccumulator::new(&cfg.ensemble, observables);
    let mut rounds = 0usize;
    let mut target = cfg.growth.initial_rounds();
    let mut best = f64::INFINITY;
    loop {
        if target as u64 * k > cfg.max_budget {
            return Err(Error::Exhausted {
                max_budget: cfg.max_budget,
                best_score: best,
                target: epsilon,
            });
        }
        let mut chunk = ShadowData::new(psi.num_qubits(), k, Vec::new())?;
        chunk.extend(psi, &cfg.ensemble, target - rounds, &mut rng)?;
        acc.add(&chunk);
        rounds = target;
        let total = rounds as u64 * k;
        let worst = acc
            .estimates(total)
            .zip(exact)
            .map(|(e, x)| (e - x).abs())
            .fold(0.0, f64::max);
        best = best.min(worst);
        if worst <= epsilon {
            return Ok(total);
        }
        target = cfg.growth.next_rounds(rounds);
    }
}

type Support = Vec<(usize, crate::pauli::Pauli)>;

/// Running snapshot sums for a fixed observable list, so data can be added
/// round by round without re-reading earlier rounds.
struct ShadowAccumulator {
    /// Support, outcome parity mask and snapshot scale per observable.
    observables: Vec<(Support, usize, f64)>,
    sums: Vec<i64>,
}

impl ShadowAccumulator {
    fn new(ensemble: &ShadowEnsemble, observables: &[crate::pauli::PauliString]) -> Self {
        let f = ensemble.inverse_factor();
        let observables: Vec<_> = observables
            .iter()
            .map(|p| {
                let n = p.num_qubits();
                let support: Vec<_> = p.support().into_iter().map(|q| (q, p.get(q))).collect();
                let mask = support.iter().fold(0usize, |m, &(q, _)| m | (1usize << (n - 1 - q)));
                (support.clone(), mask, f.powi(support.len() as i32))
            })
            .collect();
        Self {
            sums: vec![0; observables.len()],
            observables,
        }
    }

    fn add(&mut self, data: &ShadowData) {
        for r in data.records() {
            for ((support, mask, _), sum) in self.observables.iter().zip(self.sums.iter_mut()) {
                if support.iter().all(|&(q, b)| r.basis.get(q) == b) {
                    *sum += r
                        .counts
                        .iter()
                        .map(|(idx, c)| {
                            if (idx & mask).count_ones() % 2 == 0 {
                                c as i64
                            } else {
                                -(c as i64)
                            }
                        })
                        .sum::<i64>();
                }
            }
        }
    }

    fn estimates(&self, total: u64) -> impl Iterator<Item = f64> + '_ {
        self.observables
            .iter()
            .zip(&self.sums)
            .map(move |((_, _, scale), &s)| scale * s as f64 / total as f64)
    }
}

/// One `(n, epsilon, run)` point of the scaling experiment.
pub fn scaling_point(cfg: &ScalingRunConfig, n: usize, epsilon: f64, run: usize) -> Result<ScalingSample> {
    let g = Graph::complete(n)?;
    let ctx = LayerContext::new(&g)?;
    let observables = ctx.observables.control_terms();
    let reference = reference_states(&g, cfg.dt, cfg.layers)?;
    let layer_budgets = reference
        .iter()
        .enumerate()
        .map(|(layer, (psi, exact))| {
            let seed = derive_seed(cfg.seed, &[n as u64, epsilon.to_bits(), run as u64, layer as u64]);
            smallest_accurate_budget(psi, observables, exact, epsilon, cfg, seed)
        })
        .collect::<Result<Vec<_>>>()?;
    let budget_per_layer = layer_budgets.iter().sum::<u64>() as f64 / layer_budgets.len() as f64;
    Ok(ScalingSample {
        n,
        num_observables: observables.len(),
        epsilon,
        run,
        budget_per_layer,
        layer_budgets,
    })
}

/// All `(n, epsilon, run)` points, ordered by size, then epsilon, then run.
pub fn scaling_run(cfg: &ScalingRunConfig) -> Result<Vec<ScalingSample>> {
    cfg.validate()?;
    let points: Vec<(usize, f64, usize)> = cfg
        .sizes
        .iter()
        .flat_map(|&n| {
            cfg.epsilons
                .iter()
                .flat_map(move |&e| (0..cfg.runs).map(move |r| (n, e, r)))
        })
        .collect();
    points
        .into_par_iter()
        .map(|(n, e, r)| scaling_point(cfg, n, e, r))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitResult {
    pub epsilon: f64,
    pub a: f64,
    pub b: f64,
    /// Euclidean norm of the residuals at the per-L mean budgets.
    pub residual: f64,
}

/// Abscissa of the logarithmic scaling law, `4 log10(L) / eps^2`.
pub fn log_feature(num_observables: usize, epsilon: f64) -> f64 {
    4.0 * (num_observables as f64).log10() / (epsilon * epsilon)
}

/// Ordinary least squares `y = a x + b`.
pub fn linear_fit(points: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return Err(Error::Fit("need at least two points".into()));
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let scale = points.iter().map(|p| p.0.abs()).fold(0.0, f64::max).max(1.0);
    if sxx <= 1e-12 * scale * scale {
        return Err(Error::Fit("degenerate design: all abscissae coincide".into()));
    }
    let a = sxy / sxx;
    let b = my - a * mx;
    let residual = points.iter().map(|p| (p.1 - (a * p.0 + b)).powi(2)).sum::<f64>().sqrt();
    Ok((a, b, residual))
}

/// Fits `N = A * 4 log10(L) / eps^2 + B` separately for each epsilon, on the
/// mean budget per distinct `L`. Results are ordered by increasing epsilon.
pub fn fit_log(rows: &[ResultRow]) -> Result<Vec<FitResult>> {
    let mut eps: Vec<f64> = rows.iter().map(|r| r.epsilon_or_err).collect();
    eps.sort_by(f64::total_cmp);
    eps.dedup();
    if eps.is_empty() {
        return Err(Error::Fit("no samples to fit".into()));
    }
    eps.into_iter()
        .map(|e| {
            let mut by_l: Vec<(usize, f64, usize)> = Vec::new();
            for r in rows.iter().filter(|r| r.epsilon_or_err == e) {
                match by_l.iter_mut().find(|(l, _, _)| *l == r.num_observables) {
                    Some(slot) => {
                        slot.1 += r.budget_per_layer;
                        slot.2 += 1;
                    }
                    None => by_l.push((r.num_observables, r.budget_per_layer, 1)),
                }
            }
            let points: Vec<(f64, f64)> = by_l
                .iter()
                .map(|&(l, sum, count)| (log_feature(l, e), sum / count as f64))
                .collect();
            let (a, b, residual) = linear_fit(&points).map_err(|err| Error::Fit(format!("epsilon = {e}: {err}")))?;
            Ok(FitResult {
                epsilon: e,
                a,
                b,
                residual,
            })
        })
        .collect()
}

/// `ceil(max A)` over a set of fits.
pub fn ceil_bound(fits: &[FitResult]) -> Result<i64> {
    fits.iter()
        .map(|f| f.a)
        .max_by(f64::total_cmp)
        .map(|a| a.ceil() as i64)
        .ok_or_else(|| Error::Fit("no fits to bound".into()))
}

/// One line of the results CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub mode: String,
    pub graph: String,
    pub n: usize,
    /// `L`, the number of observables estimated per layer.
    pub num_observables: usize,
    pub epsilon_or_err: f64,
    pub run: usize,
    pub budget_per_layer: f64,
}

impl ResultRow {
    pub fn from_scaling(s: &ScalingSample) -> Self {
        Self {
            mode: "shadow".into(),
            graph: format!("complete:{}", s.n),
            n: s.n,
            num_observables: s.num_observables,
            epsilon_or_err: s.epsilon,
            run: s.run,
            budget_per_layer: s.budget_per_layer,
        }
    }

    /// Row for a budget-search outcome; `L` counts cost and control terms.
    pub fn from_search(mode: &MeasurementMode, graph_name: &str, g: &Graph, err: f64, run: usize, budget: u64) -> Self {
        let (nb, nc) = g.operator_counts();
        Self {
            mode: mode.name().into(),
            graph: graph_name.into(),
            n: g.num_vertices(),
            num_observables: nb + nc,
            epsilon_or_err: err,
            run,
            budget_per_layer: budget as f64,
        }
    }
}

pub const RESULTS_HEADER: [&str; 7] = ["mode", "graph", "n", "L", "epsilon_or_err", "run", "budget_per_layer"];

/// Writes `# key: value` comment lines followed by the results table.
pub fn write_results_csv<W: Write>(rows: &[ResultRow], comments: &[(String, String)], mut w: W) -> std::io::Result<()> {
    for (k, v) in comments {
        writeln!(w, "# {k}: {v}")?;
    }
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(RESULTS_HEADER)?;
    for r in rows {
        csv.write_record([
            r.mode.clone(),
            r.graph.clone(),
            r.n.to_string(),
            r.num_observables.to_string(),
            r.epsilon_or_err.to_string(),
            r.run.to_string(),
            r.budget_per_layer.to_string(),
        ])?;
    }
    csv.flush()
}

pub fn read_results_csv<R: Read>(r: R) -> Result<Vec<ResultRow>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
    let headers = rdr
        .headers()
        .map_err(|e| Error::parse("header", e.to_string()))?
        .clone();
    if headers.iter().ne(RESULTS_HEADER) {
        return Err(Error::parse("header", format!("unexpected columns {:?}", headers)));
    }
    rdr.records()
        .map(|rec| {
            let rec = rec.map_err(|e| Error::parse("record", e.to_string()))?;
            let at = format!("line {}", rec.position().map(|p| p.line()).unwrap_or(0));
            let field = |i: usize| rec.get(i).unwrap_or_default();
            let num = |i: usize| -> Result<f64> {
                field(i)
                    .parse()
                    .map_err(|_| Error::parse(at.clone(), format!("invalid number {:?}", field(i))))
            };
            let int = |i: usize| -> Result<usize> {
                field(i)
                    .parse()
                    .map_err(|_| Error::parse(at.clone(), format!("invalid integer {:?}", field(i))))
            };
            Ok(ResultRow {
                mode: field(0).to_string(),
                graph: field(1).to_string(),
                n: int(2)?,
                num_observables: int(3)?,
                epsilon_or_err: num(4)?,
                run: int(5)?,
                budget_per_layer: num(6)?,
            })
        })
        .collect()
}

pub fn write_fit_csv<W: Write>(fits: &[FitResult], w: W) -> std::io::Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["epsilon", "A", "B", "residual"])?;
    for f in fits {
        csv.write_record([
            f.epsilon.to_string(),
            f.a.to_string(),
            f.b.to_string(),
            f.residual.to_string(),
        ])?;
    }
    csv.flush()
}

/// Writes a results CSV to `path`, replacing any existing file.
pub fn emit_results(rows: &[ResultRow], comments: &[(String, String)], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_results_csv(rows, comments, &mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_results(path: &Path) -> Result<Vec<ResultRow>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_results_csv(file)
}
