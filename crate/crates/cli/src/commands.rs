use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use dlm_core::analysis::check_bounds;
use dlm_core::case_io::bus_derived_graph;
use dlm_core::trace::fmt_num;
use dlm_core::{
    run_dlm, solve_centralized, synth_ieee118_style, OracleSolution, RunTrace, StepSchedule,
};

use crate::config::{
    default_checkpoints, parse_checkpoints, parse_shares, problems, read_file, write_file,
    CaseSource, GraphSpec, WeightSpec,
};
use crate::error::{core, CliError};
use crate::svg::{line_chart, Series};

/// Options shared by every command that sets up a network.
#[derive(Debug, Clone, clap::Args)]
pub struct NetworkArgs {
    /// builtin:ieee14, synth:<seed>[:<generators>] or a case file.
    #[arg(long, default_value = "builtin:ieee14")]
    pub case: String,
    /// cycle, path, complete, bus-derived or an edge-list file.
    #[arg(long, default_value = "cycle")]
    pub graph: String,
    /// metropolis, lazy or a weight-matrix file.
    #[arg(long, default_value = "metropolis")]
    pub weights: String,
    /// equal or a comma-separated list summing to the demand.
    #[arg(long, default_value = "equal")]
    pub shares: String,
    /// recipsqrt, recip or powerlaw:<c>:<p>.
    #[arg(long, default_value = "recipsqrt")]
    pub schedule: String,
}

struct Network {
    case: dlm_core::DispatchCase,
    problems: Vec<dlm_core::LocalProblem>,
    weights: dlm_core::WeightMatrix,
    schedule: StepSchedule,
}

impl NetworkArgs {
    fn build(&self) -> Result<Network, CliError> {
        let case = CaseSource::parse(&self.case)?.load()?;
        let problems = problems(&case, &parse_shares(&self.shares)?)?;
        let graph = GraphSpec::parse(&self.graph).build(&case)?;
        let weights = WeightSpec::parse(&self.weights).build(&graph)?;
        let schedule = self.schedule.parse::<StepSchedule>().map_err(core)?;
        Ok(Network {
            case,
            problems,
            weights,
            schedule,
        })
    }
}

pub fn oracle_csv(sol: &OracleSolution) -> String {
    let mut out = format!(
        "# f_star={} lam_star={} residual={}\nnode,x_star\n",
        fmt_num(sol.f_star),
        fmt_num(sol.lam_star),
        fmt_num(sol.residual)
    );
    for (i, x) in sol.x_star.iter().enumerate() {
        let _ = writeln!(out, "{i},{}", fmt_num(*x));
    }
    out
}

/// Reads `lam_star` from the first line of an `oracle.csv`.
pub fn parse_oracle_lamstar(text: &str) -> Result<f64, CliError> {
    text.lines()
        .next()
        .and_then(|l| l.strip_prefix('#'))
        .into_iter()
        .flat_map(str::split_whitespace)
        .find_map(|tok| tok.strip_prefix("lam_star="))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| CliError::Config("oracle file has no lam_star=<value> header".into()))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Write {
        path: dir.to_path_buf(),
        source,
    })
}

#[derive(Debug, clap::Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub net: NetworkArgs,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    pub iters: u64,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Comma-separated dual-gap checkpoints; defaults to 1,10,100,1000,iters.
    #[arg(long)]
    pub checkpoints: Option<String>,
}

pub fn run(args: &RunArgs) -> Result<(), CliError> {
    let net = args.net.build()?;
    let iters = args.iters as usize;
    let checkpoints = match &args.checkpoints {
        Some(s) => parse_checkpoints(s)?,
        None => default_checkpoints(iters),
    };
    let n = net.problems.len();
    let trace = run_dlm(&net.problems, &net.weights, &net.schedule, iters, &vec![0.0; n])
        .map_err(core)?;
    let total: f64 = net.problems.iter().map(|p| p.share).sum();
    let oracle = solve_centralized(&net.problems, total).map_err(core)?;

    create_dir(&args.out)?;
    write_file(&args.out.join("trace.csv"), &trace.to_trace_csv())?;
    write_file(&args.out.join("summary.csv"), &trace.to_summary_csv())?;
    write_file(&args.out.join("oracle.csv"), &oracle_csv(&oracle))?;
    let bounds_path = args.out.join("bounds.csv");
    match check_bounds(&trace, &net.problems, &net.weights, oracle.lam_star, &checkpoints) {
        Ok(report) => {
            write_file(&bounds_path, &report.to_csv())?;
            println!("bounds_satisfied={}", report.satisfied());
        }
        Err(e) => {
            // a stale report from an earlier run would be misleading
            let _ = fs::remove_file(&bounds_path);
            eprintln!("note: bounds.csv not written: {e}");
        }
    }
    write_plots(&args.out, &trace)?;

    let last = trace.last();
    let cost = net.case.total_cost(&last.x);
    println!("nodes={n} iters={iters} schedule={} sigma2={}", net.schedule, fmt_num(net.weights.sigma2()));
    println!("residual={}", fmt_num(trace.summary()[iters].residual));
    println!("cost={} f_star={} rel_gap={}", fmt_num(cost), fmt_num(oracle.f_star), fmt_num((cost - oracle.f_star).abs() / oracle.f_star.abs().max(1e-300)));
    println!("spread={} lam_star={}", fmt_num(last.spread()), fmt_num(oracle.lam_star));
    Ok(())
}

fn write_plots(dir: &Path, trace: &RunTrace) -> Result<(), CliError> {
    let rows = trace.rows();
    let per_node = |f: &dyn Fn(&dlm_core::trace::TraceRow, usize) -> f64| -> Vec<Series> {
        (0..trace.node_count())
            .map(|i| Series {
                label: format!("node {i}"),
                values: rows.iter().map(|r| f(r, i)).collect(),
            })
            .collect()
    };
    let alloc = line_chart("Allocation", "x_i(k)", &per_node(&|r, i| r.x[i]));
    let mults = line_chart("Multipliers", "lambda_i(k)", &per_node(&|r, i| r.lam[i]));
    let residual = Series {
        label: "residual".into(),
        values: trace
            .summary()
            .iter()
            .map(|s| s.residual.abs().max(1e-16).log10())
            .collect(),
    };
    let residual = line_chart("Coupling residual", "log10 |sum x - b|", &[residual]);
    write_file(&dir.join("alloc.svg"), &alloc)?;
    write_file(&dir.join("multipliers.svg"), &mults)?;
    write_file(&dir.join("residual.svg"), &residual)
}

#[derive(Debug, clap::Args)]
pub struct OracleArgs {
    #[arg(long, default_value = "builtin:ieee14")]
    pub case: String,
    #[arg(long, default_value = "equal")]
    pub shares: String,
    /// Solve for this total instead of the case demand.
    #[arg(long)]
    pub demand: Option<f64>,
    /// Also write the solution to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn oracle(args: &OracleArgs) -> Result<(), CliError> {
    let case = CaseSource::parse(&args.case)?.load()?;
    let problems = problems(&case, &parse_shares(&args.shares)?)?;
    let total = args.demand.unwrap_or(case.demand);
    let sol = solve_centralized(&problems, total).map_err(core)?;
    print!("{}", oracle_csv(&sol));
    if let Some(path) = &args.out {
        write_file(path, &oracle_csv(&sol))?;
    }
    Ok(())
}

#[derive(Debug, clap::Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub net: NetworkArgs,
    /// trace.csv written by `run` with the same network options.
    #[arg(long)]
    pub trace: PathBuf,
    #[arg(long, conflicts_with = "oracle", allow_hyphen_values = true)]
    pub lamstar: Option<f64>,
    /// oracle.csv providing lam_star.
    #[arg(long)]
    pub oracle: Option<PathBuf>,
    #[arg(long)]
    pub checkpoints: Option<String>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn bounds(args: &BoundsArgs) -> Result<(), CliError> {
    let net = args.net.build()?;
    let trace = RunTrace::from_csv(&read_file(&args.trace)?, &net.problems, net.schedule.clone())
        .map_err(core)?;
    let lamstar = match (args.lamstar, &args.oracle) {
        (Some(l), _) => l,
        (None, Some(path)) => parse_oracle_lamstar(&read_file(path)?)?,
        (None, None) => {
            let total: f64 = net.problems.iter().map(|p| p.share).sum();
            solve_centralized(&net.problems, total).map_err(core)?.lam_star
        }
    };
    let checkpoints = match &args.checkpoints {
        Some(s) => parse_checkpoints(s)?,
        None => default_checkpoints(trace.iterations()),
    };
    let report = check_bounds(&trace, &net.problems, &net.weights, lamstar, &checkpoints)
        .map_err(core)?;
    match &args.out {
        Some(path) => write_file(path, &report.to_csv())?,
        None => print!("{}", report.to_csv()),
    }
    if report.satisfied() {
        Ok(())
    } else {
        Err(CliError::BoundsViolated(report.violations()))
    }
}

#[derive(Debug, clap::Args)]
pub struct ValidateArgs {
    /// builtin:ieee14, synth:<seed>[:<generators>] or a case file.
    pub case: String,
}

pub fn case_validate(args: &ValidateArgs) -> Result<(), CliError> {
    let case = CaseSource::parse(&args.case)?.load()?;
    let pmin: f64 = case.generators.iter().map(|g| g.pmin).sum();
    let pmax: f64 = case.generators.iter().map(|g| g.pmax).sum();
    print!(
        "ok name={} generators={} demand={} pmin_total={pmin} pmax_total={pmax}",
        case.name,
        case.generators.len(),
        case.demand
    );
    if case.lines.is_empty() {
        println!(" lines=0");
    } else {
        let g = bus_derived_graph(&case).map_err(core)?;
        println!(" lines={} bus_graph_edges={}", case.lines.len(), g.edge_count());
    }
    Ok(())
}

#[derive(Debug, clap::Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 54)]
    pub generators: usize,
    /// Write the case here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn case_synth(args: &SynthArgs) -> Result<(), CliError> {
    let case = synth_ieee118_style(args.seed, args.generators).map_err(core)?;
    match &args.out {
        Some(path) => write_file(path, &case.to_text()),
        None => {
            print!("{}", case.to_text());
            Ok(())
        }
    }
}
