//! `falqon` command-line harness: single runs, budget searches, the
//! complete-graph scaling experiment and the logarithmic fit.

mod graph_spec;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use falqon::estimators::ShadowEnsemble;
use falqon::experiments::{
    budget_search, ceil_bound, fit_log, load_results, scaling_run, write_fit_csv, write_results_csv,
    BudgetSearchConfig, BudgetSearchResult, GrowthRule, MeasurementMode, ResultRow, ScalingRunConfig,
};
use falqon::falqon::{run_falqon, EstimatorMode, FalqonConfig, DEFAULT_DT, DEFAULT_LAYERS, DEFAULT_SHOTS_PER_ROUND};
use falqon::Error;

use graph_spec::GraphSpec;

#[derive(Parser, Debug)]
#[command(name = "falqon", version, about = "Feedback-based quantum optimization for MaxCut")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run FALQON once and write the per-layer trace.
    Run(RunArgs),
    /// Search the smallest per-layer budget meeting the mean cost-error target.
    Budget(BudgetArgs),
    /// Measure shadow budgets on complete graphs for the scaling fit.
    Scaling(ScalingArgs),
    /// Fit the logarithmic scaling law to a samples CSV.
    Fit(FitArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Exact,
    Direct,
    Shadow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Ensemble {
    Uniform,
    Biased,
}

impl Ensemble {
    fn build(self) -> ShadowEnsemble {
        match self {
            Ensemble::Uniform => ShadowEnsemble::uniform(),
            Ensemble::Biased => ShadowEnsemble::biased(),
        }
    }
}

#[derive(Args, Debug)]
struct DynamicsArgs {
    /// Layer time step.
    #[arg(long, default_value_t = DEFAULT_DT)]
    dt: f64,
    #[arg(long, default_value_t = DEFAULT_LAYERS)]
    layers: usize,
    /// Feedback gain.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// cycle:<n>, complete:<n> or file:<path>
    #[arg(long)]
    graph: GraphSpec,
    #[arg(long, value_enum, default_value_t = Mode::Exact)]
    mode: Mode,
    #[arg(long, value_enum, default_value_t = Ensemble::Biased)]
    ensemble: Ensemble,
    #[command(flatten)]
    dynamics: DynamicsArgs,
    /// Shadow rounds per layer.
    #[arg(long = "M", default_value_t = 128)]
    rounds: usize,
    /// Shots per shadow round.
    #[arg(long = "K", default_value_t = DEFAULT_SHOTS_PER_ROUND)]
    shots_per_round: u64,
    /// Direct-mode shots per layer.
    #[arg(long, default_value_t = 16384)]
    budget: u64,
    /// Stop once consecutive estimated costs differ by less than this.
    #[arg(long)]
    halt: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Trace CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BudgetArgs {
    #[arg(long)]
    graph: GraphSpec,
    /// Restrict the search to one mode; both are searched by default.
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long, value_enum, default_value_t = Ensemble::Biased)]
    ensemble: Ensemble,
    #[command(flatten)]
    dynamics: DynamicsArgs,
    /// Threshold on the layer-averaged |C_est - C_exact|.
    #[arg(long, default_value_t = 0.01)]
    err: f64,
    #[arg(long = "K", default_value_t = DEFAULT_SHOTS_PER_ROUND)]
    shots_per_round: u64,
    /// First budget of the doubling schedule.
    #[arg(long, default_value_t = DEFAULT_SHOTS_PER_ROUND)]
    budget: u64,
    #[arg(long, default_value_t = 1 << 24)]
    max_budget: u64,
    /// Repetitions averaged at every budget.
    #[arg(long, default_value_t = 3)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Results CSV destination.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ScalingArgs {
    /// Complete-graph sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [4usize, 5, 6, 7, 8])]
    sizes: Vec<usize>,
    /// Per-observable error targets; repeat for several.
    #[arg(long, default_values_t = [0.05, 0.1])]
    epsilon: Vec<f64>,
    #[arg(long, value_enum, default_value_t = Ensemble::Biased)]
    ensemble: Ensemble,
    #[arg(long, default_value_t = DEFAULT_DT)]
    dt: f64,
    /// Reference layers checked per run.
    #[arg(long, default_value_t = 10)]
    layers: usize,
    #[arg(long = "K", default_value_t = DEFAULT_SHOTS_PER_ROUND)]
    shots_per_round: u64,
    /// geometric:<factor> or linear:<rounds>
    #[arg(long, default_value = "geometric:2")]
    growth: GrowthRule,
    #[arg(long, default_value_t = 1 << 24)]
    max_budget: u64,
    #[arg(long, default_value_t = 10)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Samples CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FitArgs {
    /// Samples CSV written by `scaling`.
    #[arg(long = "in")]
    input: PathBuf,
    /// Fit CSV destination.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Budget(a) => cmd_budget(a),
        Command::Scaling(a) => cmd_scaling(a),
        Command::Fit(a) => cmd_fit(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

type Comments = Vec<(String, String)>;

fn comment(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

/// Opens `path` for writing, or stdout.
fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| Error::io(p, e))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn io_err(path: Option<&Path>, e: io::Error) -> Error {
    Error::io(path.unwrap_or(Path::new("<stdout>")), e)
}

fn cmd_run(a: RunArgs) -> Result<(), Error> {
    let g = a.graph.load()?;
    let estimator = match a.mode {
        Mode::Exact => EstimatorMode::Exact,
        Mode::Direct => EstimatorMode::Direct { shots: a.budget },
        Mode::Shadow => EstimatorMode::Shadow {
            ensemble: a.ensemble.build(),
            rounds: a.rounds,
            shots_per_round: a.shots_per_round,
        },
    };
    let cfg = FalqonConfig {
        dt: a.dynamics.dt,
        layers: a.dynamics.layers,
        alpha: a.dynamics.alpha,
        estimator,
        halt_tolerance: a.halt,
        seed: a.seed,
    };
    let trace = run_falqon(&g, &cfg)?;

    let mut comments = vec![
        comment("graph", &a.graph),
        comment("mode", cfg.estimator.name()),
        comment("seed", a.seed),
        comment("dt", cfg.dt),
        comment("layers", cfg.layers),
        comment("alpha", cfg.alpha),
        comment("budget_per_layer", cfg.estimator.budget()),
    ];
    if let EstimatorMode::Shadow { ensemble, .. } = &cfg.estimator {
        comments.push(comment("ensemble", ensemble_name(ensemble)));
        comments.push(comment("M", a.rounds));
        comments.push(comment("K", a.shots_per_round));
    }
    let out = a.out.as_deref();
    let mut w = sink(out)?;
    write_comments(&mut w, &comments).map_err(|e| io_err(out, e))?;
    trace.write_csv(&mut w).map_err(|e| io_err(out, e))?;
    w.flush().map_err(|e| io_err(out, e))?;

    if out.is_some() {
        let ratio = trace.approximation_ratio(&g)?;
        println!(
            "{} layers, final cost {:.6}, approximation ratio {:.4}",
            trace.records.len(),
            trace.final_exact_cost(),
            ratio
        );
    }
    Ok(())
}

fn ensemble_name(e: &ShadowEnsemble) -> &'static str {
    if *e == ShadowEnsemble::biased() {
        "biased"
    } else {
        "uniform"
    }
}

fn write_comments(w: &mut dyn Write, comments: &[(String, String)]) -> io::Result<()> {
    for (k, v) in comments {
        writeln!(w, "# {k}: {v}")?;
    }
    Ok(())
}

fn cmd_budget(a: BudgetArgs) -> Result<(), Error> {
    let g = a.graph.load()?;
    let shadow = MeasurementMode::Shadow {
        ensemble: a.ensemble.build(),
        shots_per_round: a.shots_per_round,
    };
    let modes = match a.mode {
        None => vec![shadow, MeasurementMode::Direct],
        Some(Mode::Shadow) => vec![shadow],
        Some(Mode::Direct) => vec![MeasurementMode::Direct],
        Some(Mode::Exact) => return Err(Error::Domain("budget search needs a sampling mode".into())),
    };

    let header: Comments = vec![
        comment("graph", &a.graph),
        comment("seed", a.seed),
        comment("err", a.err),
        comment("dt", a.dynamics.dt),
        comment("layers", a.dynamics.layers),
        comment("alpha", a.dynamics.alpha),
        comment("K", a.shots_per_round),
        comment("ensemble", ensemble_name(&a.ensemble.build())),
        comment("repetitions", a.runs),
    ];
    let mut stdout = io::stdout().lock();
    write_comments(&mut stdout, &header).map_err(|e| io_err(None, e))?;
    writeln!(stdout, "{:<8} {:>12} {:>14}", "mode", "budget", "mean |dC|").map_err(|e| io_err(None, e))?;

    let mut rows = Vec::new();
    let mut failure = None;
    for mode in modes {
        let mut cfg = BudgetSearchConfig::new(g.clone(), mode.clone());
        cfg.template.dt = a.dynamics.dt;
        cfg.template.layers = a.dynamics.layers;
        cfg.template.alpha = a.dynamics.alpha;
        cfg.template.seed = a.seed;
        cfg.err = a.err;
        cfg.start_budget = a.budget;
        cfg.max_budget = a.max_budget;
        cfg.repetitions = a.runs;
        match budget_search(&cfg) {
            Ok(r) => {
                print_search(&mut stdout, &mode, &r).map_err(|e| io_err(None, e))?;
                rows.push(ResultRow::from_search(
                    &mode,
                    &a.graph.to_string(),
                    &g,
                    a.err,
                    0,
                    r.budget,
                ));
            }
            Err(e) => {
                writeln!(stdout, "{:<8} {:>12} {:>14}", mode.name(), "exhausted", "-").map_err(|e| io_err(None, e))?;
                failure.get_or_insert(Error::Domain(format!("{} search: {e}", mode.name())));
            }
        }
    }
    stdout.flush().map_err(|e| io_err(None, e))?;
    drop(stdout);

    if let Some(path) = a.out.as_deref() {
        let mut w = sink(Some(path))?;
        write_results_csv(&rows, &header, &mut w).map_err(|e| io_err(Some(path), e))?;
        w.flush().map_err(|e| io_err(Some(path), e))?;
    }
    failure.map_or(Ok(()), Err)
}

fn print_search(w: &mut dyn Write, mode: &MeasurementMode, r: &BudgetSearchResult) -> io::Result<()> {
    let last = r.probes.last().map_or(f64::NAN, |p| p.mean_delta_c);
    writeln!(w, "{:<8} {:>12} {:>14.6}", mode.name(), r.budget, last)
}

fn cmd_scaling(a: ScalingArgs) -> Result<(), Error> {
    let ensemble = a.ensemble.build();
    let cfg = ScalingRunConfig {
        sizes: a.sizes,
        epsilons: a.epsilon,
        runs: a.runs,
        shots_per_round: a.shots_per_round,
        ensemble,
        dt: a.dt,
        layers: a.layers,
        growth: a.growth,
        max_budget: a.max_budget,
        seed: a.seed,
    };
    let samples = scaling_run(&cfg)?;
    let rows: Vec<ResultRow> = samples.iter().map(ResultRow::from_scaling).collect();
    let sizes: Vec<String> = cfg.sizes.iter().map(ToString::to_string).collect();
    let eps: Vec<String> = cfg.epsilons.iter().map(ToString::to_string).collect();
    let header = vec![
        comment("seed", cfg.seed),
        comment("sizes", sizes.join(",")),
        comment("epsilons", eps.join(",")),
        comment("runs", cfg.runs),
        comment("dt", cfg.dt),
        comment("layers", cfg.layers),
        comment("K", cfg.shots_per_round),
        comment("ensemble", ensemble_name(&cfg.ensemble)),
        comment("growth", cfg.growth),
    ];
    let out = a.out.as_deref();
    let mut w = sink(out)?;
    write_results_csv(&rows, &header, &mut w).map_err(|e| io_err(out, e))?;
    w.flush().map_err(|e| io_err(out, e))?;
    if out.is_some() {
        println!("{} samples written", rows.len());
    }
    Ok(())
}

fn cmd_fit(a: FitArgs) -> Result<(), Error> {
    let rows = load_results(&a.input)?;
    let fits = fit_log(&rows)?;
    let bound = ceil_bound(&fits)?;
    let mut stdout = io::stdout().lock();
    let mut print = || -> io::Result<()> {
        writeln!(stdout, "{:>8} {:>12} {:>14} {:>12}", "epsilon", "A", "B", "residual")?;
        for f in &fits {
            writeln!(
                stdout,
                "{:>8} {:>12.4} {:>14.2} {:>12.2}",
                f.epsilon, f.a, f.b, f.residual
            )?;
        }
        writeln!(stdout, "ceil(max A) = {bound}")
    };
    print().map_err(|e| io_err(None, e))?;
    if let Some(path) = a.out.as_deref() {
        let mut w = sink(Some(path))?;
        write_fit_csv(&fits, &mut w).map_err(|e| io_err(Some(path), e))?;
        w.flush().map_err(|e| io_err(Some(path), e))?;
    }
    Ok(())
}
