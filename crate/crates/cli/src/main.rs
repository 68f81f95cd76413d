//! `discordlab`: correlations, steering ellipsoids, dephasing trajectories and
//! conjecture sweeps for two-qubit states.
//!
//! Exit codes: 0 success, 1 other failure, 2 bad flags, 3 invalid state,
//! 4 conjecture violation or failed `--verify`.

mod output;
mod state;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use discordlab::conjectures::{
    classify_optimal_line, make_general_r_state, mixture_correlations_numeric, mixture_correlations_via_conjecture,
    random_general_r, sample_rng, test_equi_entropy_conjecture, ClassThresholds, GapSummary, LineClass,
    MixtureParams,
};
use discordlab::discord::{correlation_report, CorrelationReport, Direction, GridSpec, Method};
use discordlab::dynamics::{evolve_trajectory, ChannelKind};
use discordlab::steering::ellipsoid_for_state;
use rayon::prelude::*;
use serde_json::json;

use output::{cell, emit, json_bytes, sig9, vec_json, Provenance, Table};
use state::{load_state, StateError, StateFile};

#[derive(Parser, Debug)]
#[command(name = "discordlab", version, about = "Quantum discord of two-qubit states via steering ellipsoids")]
struct Cli {
    /// Seed for every random draw; recorded in each output header.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "DISCORDLAB_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Mutual information, classical correlation and discord of one state.
    Compute(ComputeArgs),
    /// Steering ellipsoid of one state.
    Ellipsoid(EllipsoidArgs),
    /// Correlations along a decoherence trajectory.
    Dynamics(DynamicsArgs),
    /// Monte-Carlo tests of the mixture and general-R conjectures.
    #[command(subcommand)]
    Conjecture(ConjectureCommand),
    /// Correlation surfaces over parameter grids.
    #[command(subcommand)]
    Sweep(SweepCommand),
    /// Writes a state as an explicit density matrix.
    Export(ExportArgs),
}

#[derive(Args, Debug)]
struct StateSource {
    /// JSON file, or inline JSON starting with `{`.
    #[arg(long)]
    state: String,
}

#[derive(Args, Debug)]
struct OutPath {
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DirectionArg {
    BToA,
    AToB,
}

impl From<DirectionArg> for Direction {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::BToA => Direction::BToA,
            DirectionArg::AToB => Direction::AToB,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Auto,
    Analytic,
    Numeric,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Auto => Method::Auto,
            MethodArg::Analytic => Method::Analytic,
            MethodArg::Numeric => Method::Numeric,
        }
    }
}

#[derive(Args, Debug)]
struct ComputeArgs {
    #[command(flatten)]
    source: StateSource,
    #[arg(long, value_enum, default_value = "b-to-a")]
    direction: DirectionArg,
    #[arg(long, value_enum, default_value = "auto")]
    method: MethodArg,
    /// Search grid `<polar>x<azimuth>` for the numerical minimization.
    #[arg(long, default_value = "181x360")]
    grid: GridSpec,
    /// Run both the closed form and the numerical search and fail with exit
    /// code 4 if they disagree by more than 1e-5.
    #[arg(long)]
    verify: bool,
    #[command(flatten)]
    out: OutPath,
}

#[derive(Args, Debug)]
struct EllipsoidArgs {
    #[command(flatten)]
    source: StateSource,
    #[command(flatten)]
    out: OutPath,
}

#[derive(Args, Debug)]
struct DynamicsArgs {
    #[command(flatten)]
    source: StateSource,
    /// Decay rate of the channel.
    #[arg(long)]
    rate: f64,
    #[arg(long)]
    t_max: f64,
    #[arg(long, default_value_t = 101)]
    steps: usize,
    /// phase_damping, amplitude_damping or depolarizing.
    #[arg(long, default_value = "phase_damping", value_parser = parse_channel)]
    channel: ChannelKind,
    #[arg(long, value_enum, default_value = "auto")]
    method: MethodArg,
    #[arg(long, default_value = "181x360")]
    grid: GridSpec,
    #[command(flatten)]
    out: OutPath,
}

fn parse_channel(s: &str) -> std::result::Result<ChannelKind, String> {
    ChannelKind::parse(s).map_err(|e| e.to_string())
}

#[derive(Subcommand, Debug)]
enum ConjectureCommand {
    /// Gap `| |y+| - |y-| |` at the optimum for random mixture states.
    Mixture(MixtureConjectureArgs),
    /// Class I / Class II split of the optimal chord for random general-R states.
    GeneralR(GeneralRArgs),
}

#[derive(Args, Debug)]
struct MixtureConjectureArgs {
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value = "31x60")]
    grid: GridSpec,
    #[command(flatten)]
    out: OutPath,
}

#[derive(Args, Debug)]
struct GeneralRArgs {
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value = "31x60")]
    grid: GridSpec,
    /// Largest vertical component of a chord still counted as horizontal.
    #[arg(long, default_value_t = 1e-6)]
    chord_tol: f64,
    /// Largest `| |y+| - |y-| |` still counted as equi-entropic.
    #[arg(long, default_value_t = 1e-6)]
    gap_tol: f64,
    /// Draws allowed per accepted sample before giving up.
    #[arg(long, default_value_t = 10_000_000)]
    max_draws: usize,
    #[command(flatten)]
    out: OutPath,
}

#[derive(Subcommand, Debug)]
enum SweepCommand {
    /// I, C and Q of the mixture family over an (alpha, beta) grid.
    Mixture(SweepMixtureArgs),
}

#[derive(Args, Debug)]
struct SweepMixtureArgs {
    #[arg(long)]
    lambda: f64,
    /// Nodes `<alpha>x<beta>` on [0, pi/2]^2, endpoints included.
    #[arg(long, default_value = "31x31", value_parser = parse_pair)]
    grid: (usize, usize),
    /// Search grid for the unconstrained cross-check.
    #[arg(long, default_value = "31x60")]
    oracle_grid: GridSpec,
    /// Skip the equal-distance construction and use the search alone.
    #[arg(long)]
    numeric: bool,
    #[command(flatten)]
    out: OutPath,
}

fn parse_pair(s: &str) -> std::result::Result<(usize, usize), String> {
    let bad = || format!("`{s}` is not of the form <n>x<m> with n, m >= 2");
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let (a, b): (usize, usize) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
    if a < 2 || b < 2 {
        return Err(bad());
    }
    Ok((a, b))
}

#[derive(Args, Debug)]
struct ExportArgs {
    #[command(flatten)]
    source: StateSource,
    #[command(flatten)]
    out: OutPath,
}

/// A run that completed but found a counterexample or a mismatch.
#[derive(Debug)]
struct Finding(String);

impl std::fmt::Display for Finding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Finding {}

/// Bad numeric flag values caught after parsing.
#[derive(Debug)]
struct FlagError(String);

impl std::fmt::Display for FlagError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for FlagError {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<StateError>().is_some() {
        return 3;
    }
    if err.downcast_ref::<Finding>().is_some() {
        return 4;
    }
    if err.downcast_ref::<FlagError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<discordlab::Error>() {
        Some(e) if e.is_state_validation() => 3,
        Some(discordlab::Error::ConjectureViolation { .. }) => 4,
        Some(discordlab::Error::InvalidParameter(_) | discordlab::Error::UnknownChannel(_)) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let cli = Cli::parse_from(&args);
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    let provenance = Provenance::from_args(&args, cli.seed);
    match run(cli, &provenance) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cli: Cli, provenance: &Provenance) -> Result<()> {
    match cli.command {
        Command::Compute(a) => compute(a, provenance),
        Command::Ellipsoid(a) => ellipsoid(a, provenance),
        Command::Dynamics(a) => dynamics(a, provenance),
        Command::Conjecture(ConjectureCommand::Mixture(a)) => conjecture_mixture(a, cli.seed, provenance),
        Command::Conjecture(ConjectureCommand::GeneralR(a)) => conjecture_general_r(a, cli.seed, provenance),
        Command::Sweep(SweepCommand::Mixture(a)) => sweep_mixture(a, provenance),
        Command::Export(a) => export(a),
    }
}

/// Summaries go to stdout unless stdout already carries the main output.
fn summary(out: Option<&Path>, line: &str) {
    if out.is_some() {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
}

fn report_json(r: &CorrelationReport) -> serde_json::Value {
    json!({
        "direction": r.direction.as_str(),
        "search_space": CorrelationReport::SEARCH_SPACE,
        "mutual_info": sig9(r.mutual_info),
        "classical": sig9(r.classical),
        "discord": sig9(r.discord),
        "min_avg_entropy": sig9(r.min_avg_entropy),
        "marginal_entropy": sig9(r.marginal_entropy),
        "branch": r.branch.as_str(),
        "optimal_measurement": vec_json(r.optimal_measurement.direction()),
        "optimal_ensemble": r.optimal_ensemble.iter().map(|m| json!({
            "probability": sig9(m.probability),
            "bloch": vec_json(&m.bloch),
            "negligible": m.negligible,
        })).collect::<Vec<_>>(),
    })
}

/// Largest allowed gap between the closed form and the search under `--verify`.
const VERIFY_TOLERANCE: f64 = 1e-5;

fn compute(a: ComputeArgs, provenance: &Provenance) -> Result<()> {
    let rho = load_state(&a.source.state)?;
    let direction = Direction::from(a.direction);
    let report = correlation_report(&rho, direction, a.method.into(), &a.grid)?;
    let mut value = report_json(&report);
    value["provenance"] = provenance.json();

    let mut mismatch = None;
    if a.verify {
        let verification = match correlation_report(&rho, direction, Method::Analytic, &a.grid) {
            Ok(analytic) => {
                let numeric = correlation_report(&rho, direction, Method::Numeric, &a.grid)?;
                let difference = (analytic.min_avg_entropy - numeric.min_avg_entropy).abs();
                let passed = difference <= VERIFY_TOLERANCE;
                if !passed {
                    mismatch = Some(difference);
                }
                json!({
                    "analytic": sig9(analytic.min_avg_entropy),
                    "numeric": sig9(numeric.min_avg_entropy),
                    "difference": sig9(difference),
                    "passed": passed,
                })
            }
            Err(discordlab::Error::UnsupportedStructure) => serde_json::Value::Null,
            Err(e) => return Err(e.into()),
        };
        value["verification"] = verification;
    }
    emit(a.out.out.as_deref(), &json_bytes(&value)?)?;
    if let Some(d) = mismatch {
        return Err(Finding(format!("closed form and search disagree by {d:e}")).into());
    }
    Ok(())
}

fn ellipsoid(a: EllipsoidArgs, provenance: &Provenance) -> Result<()> {
    let rho = load_state(&a.source.state)?;
    let e = ellipsoid_for_state(&rho)?;
    let rotation: Vec<Vec<f64>> = (0..3).map(|r| (0..3).map(|c| sig9(e.rotation[(r, c)])).collect()).collect();
    let value = json!({
        "provenance": provenance.json(),
        "center": vec_json(&e.center),
        "semi_axes": e.semi_axes.map(sig9),
        "rotation": rotation,
        "degeneracy": e.degeneracy.as_str(),
        "det_R": sig9(rho.correlation_matrix().det()),
    });
    emit(a.out.out.as_deref(), &json_bytes(&value)?)
}

fn dynamics(a: DynamicsArgs, provenance: &Provenance) -> Result<()> {
    if !(a.rate >= 0.0 && a.rate.is_finite()) {
        return Err(FlagError(format!("--rate must be a nonnegative number, got {}", a.rate)).into());
    }
    if !(a.t_max > 0.0 && a.t_max.is_finite()) || a.steps < 2 {
        return Err(FlagError("--t-max must be positive and --steps at least 2".into()).into());
    }
    let rho = load_state(&a.source.state)?;
    let traj = evolve_trajectory(&rho, a.channel, a.rate, a.t_max, a.steps, a.method.into(), &a.grid)?;
    let t_bar = traj.critical_time.map_or_else(|| "none".to_string(), cell);
    let mut comments = provenance.csv_comments();
    comments.push(format!("channel: {} rate: {}", a.channel.as_str(), cell(a.rate)));
    comments.push(format!("t_bar={t_bar}"));
    let mut table = Table::new(comments, &["t", "gamma", "I", "C", "Q", "branch", "l1", "l2", "l3"]);
    for p in &traj.points {
        let axes = p.axes.map_or_else(|| vec![String::new(); 3], |ax| ax.iter().map(|&x| cell(x)).collect());
        let mut row = vec![
            cell(p.t),
            cell(p.gamma),
            cell(p.report.mutual_info),
            cell(p.report.classical),
            cell(p.report.discord),
            p.report.branch.as_str().to_string(),
        ];
        row.extend(axes);
        table.push(row);
    }
    emit(a.out.out.as_deref(), &table.to_bytes()?)?;
    summary(a.out.out.as_deref(), &format!("t_bar={t_bar}"));
    Ok(())
}

fn conjecture_mixture(a: MixtureConjectureArgs, seed: u64, provenance: &Provenance) -> Result<()> {
    if a.samples == 0 {
        return Err(FlagError("--samples must be at least 1".into()).into());
    }
    let samples = test_equi_entropy_conjecture(a.samples, seed, &a.grid)?;
    let mut comments = provenance.csv_comments();
    comments.push("sampling: lambda ~ U[0,1], alpha, beta ~ U[0,pi/2], one ChaCha8 stream per sample".into());
    let mut table =
        Table::new(comments, &["lambda", "alpha", "beta", "n1", "n2", "n3", "gap", "min_entropy"]);
    for s in &samples {
        let n = s.optimal_measurement.direction();
        table.push(vec![
            cell(s.params.lambda),
            cell(s.params.alpha),
            cell(s.params.beta),
            cell(n.x),
            cell(n.y),
            cell(n.z),
            cell(s.gap),
            cell(s.min_entropy),
        ]);
    }
    emit(a.out.out.as_deref(), &table.to_bytes()?)?;

    let stats = GapSummary::from_samples(&samples);
    let counterexamples: Vec<_> = stats
        .counterexamples
        .iter()
        .map(|s| {
            json!({
                "index": s.index,
                "lambda": s.params.lambda,
                "alpha": s.params.alpha,
                "beta": s.params.beta,
                "measurement": vec_json(s.optimal_measurement.direction()),
                "gap": s.gap,
                "min_entropy": s.min_entropy,
            })
        })
        .collect();
    let value = json!({
        "samples": stats.samples,
        "max_gap": sig9(stats.max_gap),
        "fraction_gap_le_1e-6": sig9(stats.fraction_within_1e6),
        "fraction_gap_le_1e-5": sig9(stats.fraction_within_1e5),
        "gap_percentile_99.9": sig9(stats.percentile_999),
        "counterexamples": counterexamples,
    });
    summary(a.out.out.as_deref(), &serde_json::to_string(&value)?);
    if !stats.counterexamples.is_empty() {
        return Err(Finding(format!("{} sample(s) with gap above 1e-5", stats.counterexamples.len())).into());
    }
    Ok(())
}

fn conjecture_general_r(a: GeneralRArgs, seed: u64, provenance: &Provenance) -> Result<()> {
    if a.samples == 0 {
        return Err(FlagError("--samples must be at least 1".into()).into());
    }
    let thresholds = ClassThresholds { chord_y3: a.chord_tol, gap: a.gap_tol };
    let rows = (0..a.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i);
            let (p, draws) = random_general_r(&mut rng, a.max_draws)
                .with_context(|| format!("sample {i}: no valid state in {} draws", a.max_draws))?;
            make_general_r_state(&p)?;
            let c = classify_optimal_line(&p, &a.grid, &thresholds)?;
            Ok((p, draws, c))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut comments = provenance.csv_comments();
    comments.push("sampling: r1, r3, s1, s3, t13, t22, t31 ~ U[-1,1], rejected until the state is valid".into());
    let header = [
        "r1", "r3", "s1", "s3", "t13", "t22", "t31", "t11", "t33", "class", "gap", "chord_y3", "S_min_A",
        "S_min_Atilde",
    ];
    let mut table = Table::new(comments, &header);
    let (mut class_one, mut draws_total) = (0usize, 0usize);
    for (p, draws, c) in &rows {
        draws_total += draws;
        class_one += usize::from(c.class == LineClass::I);
        table.push(vec![
            cell(p.r1),
            cell(p.r3),
            cell(p.s1),
            cell(p.s3),
            cell(p.t13),
            cell(p.t22),
            cell(p.t31),
            cell(p.t11()),
            cell(p.t33()),
            c.class.as_str().to_string(),
            cell(c.gap),
            cell(c.chord_y3),
            cell(c.s_min_a),
            c.s_min_a_tilde.map(cell).unwrap_or_default(),
        ]);
    }
    emit(a.out.out.as_deref(), &table.to_bytes()?)?;
    let value = json!({
        "samples": rows.len(),
        "class_I": class_one,
        "class_II": rows.len() - class_one,
        "acceptance_rate": sig9(rows.len() as f64 / draws_total as f64),
    });
    summary(a.out.out.as_deref(), &serde_json::to_string(&value)?);
    Ok(())
}

fn sweep_mixture(a: SweepMixtureArgs, provenance: &Provenance) -> Result<()> {
    if !(0.0..=1.0).contains(&a.lambda) {
        return Err(FlagError(format!("--lambda must lie in [0, 1], got {}", a.lambda)).into());
    }
    let (na, nb) = a.grid;
    let half_pi = std::f64::consts::FRAC_PI_2;
    let node = |i: usize, n: usize| if i + 1 == n { half_pi } else { i as f64 * half_pi / (n - 1) as f64 };
    let points: Vec<(f64, f64)> =
        (0..na).flat_map(|i| (0..nb).map(move |j| (node(i, na), node(j, nb)))).collect();
    let reports = points
        .par_iter()
        .map(|&(alpha, beta)| {
            let p = MixtureParams::new(a.lambda, alpha, beta)?;
            if a.numeric {
                mixture_correlations_numeric(&p, &a.oracle_grid)
            } else {
                mixture_correlations_via_conjecture(&p, &a.oracle_grid)
            }
        })
        .collect::<discordlab::Result<Vec<_>>>()?;
    let mut comments = provenance.csv_comments();
    comments.push(format!(
        "lambda: {} method: {}",
        cell(a.lambda),
        if a.numeric { "numeric" } else { "equi_entropy" }
    ));
    let mut table = Table::new(comments, &["alpha", "beta", "I", "C", "Q"]);
    for (&(alpha, beta), r) in points.iter().zip(&reports) {
        table.push(vec![cell(alpha), cell(beta), cell(r.mutual_info), cell(r.classical), cell(r.discord)]);
    }
    emit(a.out.out.as_deref(), &table.to_bytes()?)
}

fn export(a: ExportArgs) -> Result<()> {
    let rho = load_state(&a.source.state)?;
    let mut bytes = serde_json::to_vec(&StateFile::from_state(&rho))?;
    bytes.push(b'\n');
    emit(a.out.out.as_deref(), &bytes)
}
