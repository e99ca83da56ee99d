//! Command-line interface wiring the library together.
//!
//! Exit codes: 0 success, 1 usage error, 2 data/schema error,
//! 3 numeric failure. Results go to `--out` files or stdout;
//! diagnostics go to stderr.

use crate::dataio::{
    generate_synthetic, load_params, parse_dataset_file, write_dataset, write_dataset_file,
    AssignmentMode, Human, ParamSet, PeerTrustMode, Robot, SynthConfig,
};
use crate::equilibrium::{solve, ScheduleSpec, SolveMethod};
use crate::error::Error;
use crate::evaluation::{compare_models, holdout_rmse, LabeledHistory};
use crate::inference::{estimate_missing, fit, FitOptions, FitReport, ModelVariant};
use crate::simulator::{monte_carlo_limit, run_schedule, CommunicationMode, SimConfig};
use crate::trust::TrustParams;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "tip",
    version,
    about = "Trust inference and propagation for human-robot teams: simulate trust dynamics, solve equilibria, generate synthetic session logs, and fit model parameters"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic two-human two-robot session log.
    Synth(SynthArgs),
    /// Run the alternating-schedule simulator and summarize convergence.
    Simulate(SimArgs),
    /// Solve for the long-run trust equilibrium.
    Equilibrium(EquilibriumArgs),
    /// Fit trust parameters for one (agent, robot) pair from a dataset.
    Fit(FitArgs),
    /// Hold out the last sessions, fit on the rest, and score predictions.
    Estimate(EstimateArgs),
    /// Fit all pairs under every model variant and tabulate errors.
    Eval(EvalArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Tip,
    Direct,
    Indirect,
}

impl From<ModelArg> for ModelVariant {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Tip => ModelVariant::Tip,
            ModelArg::Direct => ModelVariant::DirectOnly,
            ModelArg::Indirect => ModelVariant::IndirectOnly,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Newton,
    Grid,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 15)]
    sessions: u32,
    #[arg(long, default_value_t = 10)]
    tasks: u32,
    #[arg(long = "rel-a", default_value_t = 0.9)]
    rel_a: f64,
    #[arg(long = "rel-b", default_value_t = 0.6)]
    rel_b: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON file with true parameters per pair; defaults to the
    /// protocol parameters when omitted.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long = "peer-xy", default_value_t = 0.85)]
    peer_xy: f64,
    #[arg(long = "peer-yx", default_value_t = 0.85)]
    peer_yx: f64,
    /// Resample peer-trust ratings around their constants with this
    /// Beta concentration instead of holding them fixed.
    #[arg(long)]
    drift: Option<f64>,
    /// Assign x to robot A every session instead of randomizing.
    #[arg(long = "fixed-assignment")]
    fixed_assignment: bool,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScheduleArgs {
    #[arg(long, default_value_t = 1)]
    m: u32,
    #[arg(long, default_value_t = 1)]
    n: u32,
    #[arg(long, default_value_t = 0.7)]
    reliability: f64,
    #[arg(long = "trust-xy", default_value_t = 0.8)]
    trust_xy: f64,
    #[arg(long = "trust-yx", default_value_t = 0.8)]
    trust_yx: f64,
    /// JSON parameter file; pairs x:A and y:A drive the schedule.
    /// All-ones parameters when omitted.
    #[arg(long)]
    params: Option<PathBuf>,
}

impl ScheduleArgs {
    fn schedule(&self) -> crate::error::Result<ScheduleSpec> {
        ScheduleSpec::new(self.m, self.n, self.reliability, self.trust_xy, self.trust_yx)
    }

    fn params(&self) -> crate::error::Result<(TrustParams, TrustParams)> {
        match &self.params {
            Some(path) => {
                let set = load_params(path)?;
                Ok((*set.get(Human::X, Robot::A)?, *set.get(Human::Y, Robot::A)?))
            }
            None => Ok((TrustParams::ones(), TrustParams::ones())),
        }
    }
}

#[derive(Args)]
struct SimArgs {
    #[command(flatten)]
    schedule: ScheduleArgs,
    #[arg(long, default_value_t = 1000)]
    turns: u32,
    #[arg(long, default_value_t = 30)]
    replicas: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Communicate expected trust instead of sampled reports.
    #[arg(long = "expected-value")]
    expected_value: bool,
    /// Write the replica-0 trajectory CSV here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EquilibriumArgs {
    #[command(flatten)]
    schedule: ScheduleArgs,
    #[arg(long, value_enum, default_value_t = MethodArg::Newton)]
    method: MethodArg,
}

#[derive(Args)]
struct FitArgs {
    dataset: PathBuf,
    #[arg(long)]
    agent: String,
    #[arg(long)]
    robot: String,
    #[arg(long, value_enum, default_value_t = ModelArg::Tip)]
    model: ModelArg,
    #[arg(long, default_value_t = 10)]
    tasks: u32,
    /// Output JSON path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    dataset: PathBuf,
    /// Number of trailing sessions to hold out per pair.
    #[arg(long)]
    holdout: usize,
    #[arg(long, value_enum, default_value_t = ModelArg::Tip)]
    model: ModelArg,
    #[arg(long, default_value_t = 10)]
    tasks: u32,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    dataset: PathBuf,
    #[arg(long, default_value_t = 10)]
    tasks: u32,
    /// Comparison-table CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn write_output(out: &Option<PathBuf>, bytes: &[u8]) -> crate::error::Result<()> {
    match out {
        Some(path) => std::fs::write(path, bytes)?,
        None => std::io::stdout().write_all(bytes)?,
    }
    Ok(())
}

/// The JSON shape of a fit result.
#[derive(Serialize)]
struct FitReportJson<'a> {
    theta_star: &'a TrustParams,
    final_loglik: f64,
    iterations: usize,
    converged: bool,
    model_variant: ModelVariant,
    expected_trust: &'a [f64],
    #[serde(skip_serializing_if = "Option::is_none")]
    warning: &'a Option<String>,
}

impl<'a> From<&'a FitReport> for FitReportJson<'a> {
    fn from(r: &'a FitReport) -> Self {
        Self {
            theta_star: &r.theta_star,
            final_loglik: r.final_loglik,
            iterations: r.iterations,
            converged: r.converged,
            model_variant: r.variant,
            expected_trust: &r.expected_trust,
            warning: &r.warning,
        }
    }
}

fn run_synth(args: &SynthArgs) -> crate::error::Result<()> {
    let defaults = SynthConfig::protocol_defaults(args.seed);
    let (pxa, pxb, pya, pyb) = match &args.params {
        Some(path) => {
            let set: ParamSet = load_params(path)?;
            (
                *set.get(Human::X, Robot::A)?,
                *set.get(Human::X, Robot::B)?,
                *set.get(Human::Y, Robot::A)?,
                *set.get(Human::Y, Robot::B)?,
            )
        }
        None => (
            defaults.params_x_a,
            defaults.params_x_b,
            defaults.params_y_a,
            defaults.params_y_b,
        ),
    };
    let cfg = SynthConfig {
        sessions: args.sessions,
        tasks_per_session: args.tasks,
        reliability_a: args.rel_a,
        reliability_b: args.rel_b,
        params_x_a: pxa,
        params_x_b: pxb,
        params_y_a: pya,
        params_y_b: pyb,
        peer_trust_x_in_y: args.peer_xy,
        peer_trust_y_in_x: args.peer_yx,
        peer_mode: match args.drift {
            Some(concentration) => PeerTrustMode::Drift { concentration },
            None => PeerTrustMode::Constant,
        },
        assignment: if args.fixed_assignment {
            AssignmentMode::Fixed
        } else {
            AssignmentMode::Randomized
        },
        seed: args.seed,
    };
    let ds = generate_synthetic(&cfg)?;
    match &args.out {
        Some(path) => write_dataset_file(&ds, path)?,
        None => {
            let mut buf = Vec::new();
            write_dataset(&ds, &mut buf)?;
            std::io::stdout().write_all(&buf)?;
        }
    }
    Ok(())
}

fn run_simulate(args: &SimArgs) -> crate::error::Result<()> {
    let (params_x, params_y) = args.schedule.params()?;
    let cfg = SimConfig {
        sched: args.schedule.schedule()?,
        params_x,
        params_y,
        turns: args.turns,
        replicas: args.replicas,
        seed: args.seed,
        communication: if args.expected_value {
            CommunicationMode::ExpectedValue
        } else {
            CommunicationMode::ReportedSample
        },
    };
    cfg.validate()?;
    if let Some(path) = &args.out {
        let traj = run_schedule(&cfg, 0);
        let mut buf = Vec::new();
        traj.write_csv(&mut buf)?;
        std::fs::write(path, buf)?;
    }
    let summary = monte_carlo_limit(&cfg)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn run_equilibrium(args: &EquilibriumArgs) -> crate::error::Result<()> {
    let (params_x, params_y) = args.schedule.params()?;
    let sched = args.schedule.schedule()?;
    let method = match args.method {
        MethodArg::Newton => SolveMethod::Newton,
        MethodArg::Grid => SolveMethod::Grid,
    };
    let eq = solve(&params_x, &params_y, &sched, method)?;
    println!("t_x = {:.12}", eq.t_x);
    println!("t_y = {:.12}", eq.t_y);
    println!("case = {}", eq.case_used);
    println!("residual = {:.3e}", eq.residual);
    if eq.fell_back_to_grid {
        eprintln!("note: Newton failed to converge; grid search supplied the result");
    }
    for (tx, ty) in &eq.alternate_roots {
        eprintln!("note: additional root candidate at ({tx:.9}, {ty:.9})");
    }
    Ok(())
}

fn run_fit(args: &FitArgs) -> crate::error::Result<()> {
    let ds = parse_dataset_file(&args.dataset, args.tasks)?;
    let human: Human = args.agent.parse()?;
    let robot: Robot = args.robot.parse()?;
    let history = ds.agent_history(human, robot)?;
    let opts = FitOptions::default();
    let report = if history.is_complete() {
        fit(&history, args.model.into(), &opts)?
    } else {
        estimate_missing(&history, args.model.into(), &opts)?.fit
    };
    let json = serde_json::to_string_pretty(&FitReportJson::from(&report))?;
    write_output(&args.out, json.as_bytes())?;
    if args.out.is_some() {
        eprintln!(
            "fit {human}:{robot} ({}) loglik {:.4} after {} iterations (converged: {})",
            report.variant, report.final_loglik, report.iterations, report.converged
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct PairEstimate {
    agent: String,
    robot: String,
    estimates: Vec<(usize, f64)>,
    truths: Vec<(usize, f64)>,
}

#[derive(Serialize)]
struct EstimateOutput {
    k_hat: usize,
    model_variant: ModelVariant,
    pairs: Vec<PairEstimate>,
    /// Holdout RMSE per robot for the model predictions.
    holdout_rmse: BTreeMap<String, f64>,
    /// Same metric for the carry-forward (last observed value) baseline.
    naive_rmse: BTreeMap<String, f64>,
}

fn run_estimate(args: &EstimateArgs) -> crate::error::Result<()> {
    let ds = parse_dataset_file(&args.dataset, args.tasks)?;
    let k = ds.session_count();
    if args.holdout == 0 || args.holdout >= k {
        return Err(Error::misuse(format!(
            "holdout must lie in [1, {}), got {}",
            k, args.holdout
        )));
    }
    let opts = FitOptions::default();
    let mut pairs = Vec::new();
    let mut per_robot: BTreeMap<String, (Vec<Vec<(usize, f64)>>, Vec<Vec<(usize, f64)>>, Vec<Vec<(usize, f64)>>)> =
        BTreeMap::new();

    for human in [Human::X, Human::Y] {
        for robot in [Robot::A, Robot::B] {
            let full = ds.agent_history(human, robot)?;
            let mut truths = Vec::new();
            let mut ratings = full.ratings().to_vec();
            for u in (k + 1 - args.holdout)..=k {
                let t = ratings[u].ok_or_else(|| {
                    Error::misuse(format!(
                        "holdout scoring needs the true rating at session {u} for {human}:{robot}"
                    ))
                })?;
                truths.push((u, t));
                ratings[u] = None;
            }
            let masked = crate::inference::AgentHistory::new(ratings, full.sessions().to_vec())?;
            let est = estimate_missing(&masked, args.model.into(), &opts)?;
            let last_observed = full.ratings()[k - args.holdout].expect("present by holdout bound");
            let naive: Vec<(usize, f64)> =
                truths.iter().map(|&(u, _)| (u, last_observed)).collect();

            let entry = per_robot.entry(robot.to_string()).or_default();
            entry.0.push(est.estimates.clone());
            entry.1.push(truths.clone());
            entry.2.push(naive);
            pairs.push(PairEstimate {
                agent: human.to_string(),
                robot: robot.to_string(),
                estimates: est.estimates,
                truths,
            });
        }
    }

    let mut model_rmse = BTreeMap::new();
    let mut naive_rmse = BTreeMap::new();
    for (robot, (est, truth, naive)) in &per_robot {
        model_rmse.insert(robot.clone(), holdout_rmse(est, truth, args.holdout)?);
        naive_rmse.insert(robot.clone(), holdout_rmse(naive, truth, args.holdout)?);
    }
    let output = EstimateOutput {
        k_hat: args.holdout,
        model_variant: args.model.into(),
        pairs,
        holdout_rmse: model_rmse,
        naive_rmse,
    };
    let json = serde_json::to_string_pretty(&output)?;
    write_output(&args.out, json.as_bytes())?;
    Ok(())
}

fn run_eval(args: &EvalArgs) -> crate::error::Result<()> {
    let ds = parse_dataset_file(&args.dataset, args.tasks)?;
    let mut corpus = Vec::new();
    for human in [Human::X, Human::Y] {
        for robot in [Robot::A, Robot::B] {
            corpus.push(LabeledHistory {
                agent: human.to_string(),
                robot: robot.to_string(),
                history: ds.agent_history(human, robot)?,
            });
        }
    }
    let variants = [
        ModelVariant::Tip,
        ModelVariant::DirectOnly,
        ModelVariant::IndirectOnly,
    ];
    let cmp = compare_models(&corpus, &variants, &FitOptions::default());
    let mut buf = Vec::new();
    cmp.write_csv(&mut buf)?;
    write_output(&args.out, &buf)?;
    for (key, rmse) in &cmp.rmse_by_robot {
        eprintln!("rmse {key} = {rmse:.6}");
    }
    Ok(())
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Numeric(_) => 3,
        _ => 2,
    }
}

/// Parses and runs one CLI invocation, returning the process exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Synth(args) => run_synth(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Equilibrium(args) => run_equilibrium(args),
        Command::Fit(args) => run_fit(args),
        Command::Estimate(args) => run_estimate(args),
        Command::Eval(args) => run_eval(args),
    };
    match result {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code(&err)
        }
    }
}
