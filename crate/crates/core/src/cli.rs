//! Command-line front end.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{self, RunReport};
use crate::controller::GainSet;
use crate::design::{self, evaluate_ledger, verify_gains, DwellTime, GainLedger, InequalityCheck};
use crate::error::{Error, Result};
use crate::graph::{has_rooted_spanning_tree, laplacian, solve_gamma, DirectedGraph, LEADER};
use crate::scenario::{Overrides, Scenario, ScenarioConfig};
use crate::simulation::{self, SimTrace};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_CERTIFICATION: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "lagrange-swarm", version, about = "Leader tracking for networks of Euler-Lagrange agents")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a scenario and write the trace, report and plot data.
    Run(RunArgs),
    /// Design gains and check every stability inequality.
    Certify(CertifyArgs),
    /// Check a graph for a leader-rooted spanning tree and print its scaling.
    CheckGraph(CheckGraphArgs),
    /// Run a scenario over a list of epsilon or mu values.
    Sweep(SweepArgs),
}

#[derive(Debug, Args, Clone, Default)]
pub struct OverrideArgs {
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Horizon override in seconds.
    #[arg(long)]
    pub t_end: Option<f64>,
}

impl OverrideArgs {
    fn to_overrides(&self) -> Overrides {
        Overrides {
            dt: self.dt,
            epsilon: self.epsilon,
            mu: self.mu,
            eta: self.eta,
            beta: self.beta,
            seed: self.seed,
            t_end: self.t_end,
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub overrides: OverrideArgs,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: OverrideArgs,
}

#[derive(Debug, Args)]
pub struct CheckGraphArgs {
    /// Edge-list file.
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, default_value_t = LEADER)]
    pub root: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParam {
    Epsilon,
    Mu,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub param: SweepParam,
    /// Comma-separated values.
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<f64>,
    #[command(flatten)]
    pub overrides: OverrideArgs,
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Validation(_) | Error::Parse(_) => EXIT_VALIDATION,
        Error::NoSpanningTree | Error::IterationCap { .. } => EXIT_CERTIFICATION,
        _ => EXIT_RUNTIME,
    }
}

/// Parses arguments, dispatches and maps the outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    match dispatch(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn dispatch(cmd: &Command) -> Result<i32> {
    match cmd {
        Command::Run(a) => cmd_run(a),
        Command::Certify(a) => cmd_certify(a),
        Command::CheckGraph(a) => cmd_check_graph(a),
        Command::Sweep(a) => cmd_sweep(a),
    }
}

pub fn load_scenario(path: &Path, overrides: &Overrides) -> Result<Scenario> {
    let (mut cfg, base) = ScenarioConfig::load(path)?;
    cfg.apply(overrides);
    cfg.build(&base)
}

/// Ledgers of the scenario's gains on each control topology.
pub fn scenario_ledgers(s: &Scenario) -> Result<Vec<GainLedger>> {
    Ok(s.design_inputs()?.iter().map(|inp| evaluate_ledger(inp, &s.gains)).collect())
}

fn report_for(s: &Scenario, trace: &SimTrace) -> Result<RunReport> {
    let ledgers = scenario_ledgers(s)?;
    Ok(analysis::analyze(trace, s.blackout, ledgers.first()))
}

fn cmd_run(a: &RunArgs) -> Result<i32> {
    let s = load_scenario(&a.scenario, &a.overrides.to_overrides())?;
    std::fs::create_dir_all(&a.out)?;
    let trace = match simulation::run(&s) {
        Ok(t) => t,
        Err(Error::NonFiniteState { component, t, partial }) => {
            if let Some(p) = &partial {
                std::fs::write(a.out.join("partial_trace.csv"), p.to_csv())?;
            }
            return Err(Error::NonFiniteState { component, t, partial });
        }
        Err(e) => return Err(e),
    };
    let report = report_for(&s, &trace)?;
    write_run_outputs(&a.out, &trace, &report)?;
    print!("{}", report.to_text());
    Ok(EXIT_OK)
}

pub fn write_run_outputs(dir: &Path, trace: &SimTrace, report: &RunReport) -> Result<()> {
    std::fs::write(dir.join("trace.csv"), trace.to_csv())?;
    std::fs::write(dir.join("report.json"), report.to_json())?;
    std::fs::write(dir.join("report.txt"), report.to_text())?;
    for (name, table) in plot_tables(trace) {
        std::fs::write(dir.join(format!("{name}.dat")), table)?;
    }
    std::fs::write(dir.join("plot.gp"), plot_script(trace.n, trace.p))?;
    Ok(())
}

/// Whitespace-separated tables for gnuplot: coordinates, velocities,
/// tracking errors, observer estimates and V.
pub fn plot_tables(trace: &SimTrace) -> Vec<(&'static str, String)> {
    let (n, p) = (trace.n, trace.p);
    let mut coords = String::from("# t");
    let mut vels = String::from("# t");
    let mut obs = String::from("# t");
    for k in 1..=p {
        let _ = write!(coords, " q0_{k}");
        let _ = write!(vels, " qdot0_{k}");
    }
    for i in 1..=n {
        for k in 1..=p {
            let _ = write!(coords, " q_{i}_{k}");
            let _ = write!(vels, " qdot_{i}_{k}");
            let _ = write!(obs, " rhat_{i}_{k} vhat_{i}_{k}");
        }
    }
    let mut errs = String::from("# t");
    for i in 1..=n {
        let _ = write!(errs, " err_pos_{i}");
    }
    for i in 1..=n {
        let _ = write!(errs, " err_vel_{i}");
    }
    let mut lyap = String::from("# t V");
    for s in [&mut coords, &mut vels, &mut obs, &mut errs, &mut lyap] {
        s.push('\n');
    }
    for r in &trace.rows {
        let _ = write!(coords, "{:e}", r.t);
        let _ = write!(vels, "{:e}", r.t);
        let _ = write!(obs, "{:e}", r.t);
        let _ = write!(errs, "{:e}", r.t);
        for k in 0..p {
            let _ = write!(coords, " {:e}", r.leader_q[k]);
            let _ = write!(vels, " {:e}", r.leader_qdot[k]);
        }
        for i in 0..n {
            for k in 0..p {
                let _ = write!(coords, " {:e}", r.q[i][k]);
                let _ = write!(vels, " {:e}", r.qdot[i][k]);
                let _ = write!(obs, " {:e} {:e}", r.r_hat[i][k], r.v_hat[i][k]);
            }
        }
        for e in r.err_pos.iter().chain(&r.err_vel) {
            let _ = write!(errs, " {e:e}");
        }
        let _ = writeln!(lyap, "{:e} {:e}", r.t, r.v);
        for s in [&mut coords, &mut vels, &mut obs, &mut errs] {
            s.push('\n');
        }
    }
    vec![
        ("coordinates", coords),
        ("velocities", vels),
        ("observer", obs),
        ("errors", errs),
        ("lyapunov", lyap),
    ]
}

/// Reads a table written by [`plot_tables`] back as column names and rows.
pub fn read_plot_table(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .and_then(|l| l.strip_prefix('#'))
        .ok_or_else(|| Error::parse("plot table lacks a header"))?;
    let cols: Vec<String> = header.split_whitespace().map(String::from).collect();
    let mut rows = Vec::new();
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let row: Vec<f64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::parse(format!("plot table: {e}")))?;
        if row.len() != cols.len() {
            return Err(Error::parse("plot table row width does not match its header"));
        }
        rows.push(row);
    }
    Ok((cols, rows))
}

fn plot_script(n: usize, p: usize) -> String {
    let mut s = String::from("set terminal pngcairo size 1200,800\nset xlabel 't [s]'\nset grid\n");
    for (file, prefix, title) in [("coordinates", "coords", "q"), ("velocities", "vels", "qdot")] {
        for k in 1..=p {
            let _ = writeln!(s, "set output '{prefix}_{k}.png'\nset ylabel '{title}_{k}'");
            let _ = write!(s, "plot '{file}.dat' using 1:{} with lines lw 2 title 'leader'", 1 + k);
            for i in 1..=n {
                let col = 1 + p + (i - 1) * p + k;
                let _ = write!(s, ", '' using 1:{col} with lines title 'agent {i}'");
            }
            s.push('\n');
        }
    }
    let _ = writeln!(s, "set output 'errors.png'\nset ylabel 'position error'\nset logscale y");
    let _ = write!(s, "plot 'errors.dat' using 1:2 with lines title 'agent 1'");
    for i in 2..=n {
        let _ = write!(s, ", '' using 1:{} with lines title 'agent {i}'", 1 + i);
    }
    s.push('\n');
    let _ = writeln!(s, "set output 'lyapunov.png'\nset ylabel 'V'\nplot 'lyapunov.dat' using 1:2 with lines title 'V'");
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyCertificate {
    pub index: usize,
    pub gamma: Vec<f64>,
    pub min_eig: f64,
    pub max_eig: f64,
    pub ledger: GainLedger,
    pub checks: Vec<InequalityCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub scenario: String,
    pub gains: GainSet,
    pub all_satisfied: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub designed_gains: Option<GainSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design_failure: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dwell: Option<DwellTime>,
    /// Shortest interval between configured switches.
    pub configured_dwell: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dwell_satisfied: Option<bool>,
    pub topologies: Vec<TopologyCertificate>,
}

impl Certificate {
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::parse(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::parse(e.to_string()))
    }

    pub fn violations(&self) -> Vec<(usize, &InequalityCheck)> {
        self.topologies
            .iter()
            .flat_map(|t| t.checks.iter().filter(|c| !c.satisfied).map(move |c| (t.index, c)))
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let g = &self.gains;
        let _ = writeln!(
            s,
            "gains: mu = {}, eta = {}, beta = {}, epsilon = {}",
            g.mu, g.eta, g.beta, g.epsilon
        );
        if let Some(d) = &self.designed_gains {
            let _ = writeln!(s, "designer output: mu = {:.6}, eta = {:.6}, beta = {:.6}", d.mu, d.eta, d.beta);
        }
        if let Some(f) = &self.design_failure {
            let _ = writeln!(s, "designer failed: {f}");
        }
        for t in &self.topologies {
            let _ = writeln!(s, "topology {}: lambda(X) in [{:.4e}, {:.4e}]", t.index, t.min_eig, t.max_eig);
            for c in &t.checks {
                let _ = writeln!(
                    s,
                    "  [{}] {:<20} lhs {:>12.5e} rhs {:>12.5e} slack {:>12.5e}  {}",
                    if c.satisfied { "ok" } else { "FAIL" },
                    c.id,
                    c.lhs,
                    c.rhs,
                    c.slack,
                    c.description
                );
            }
        }
        match (&self.dwell, self.dwell_satisfied) {
            (Some(d), Some(ok)) => {
                let _ = writeln!(
                    s,
                    "dwell: kappa = {:.4e}, Lambda = {:.4e}, required {:.4e} s, configured {:.4e} s: {}",
                    d.kappa,
                    d.big_lambda,
                    d.pi_d_min,
                    self.configured_dwell,
                    if ok { "sufficient" } else { "insufficient" }
                );
            }
            _ => {
                let _ = writeln!(s, "dwell: not computable for these gains");
            }
        }
        let _ = writeln!(s, "certificate: {}", if self.all_satisfied { "clean" } else { "violations present" });
        s
    }
}

/// Runs the designer and the independent verifier on every control topology.
pub fn certify(s: &Scenario) -> Result<Certificate> {
    let inputs = s.design_inputs()?;
    let (designed_gains, design_failure) = match s.designed_gains() {
        Ok((g, _)) => (Some(g), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let mut topologies = Vec::with_capacity(inputs.len());
    for (index, (inp, (_, cert))) in inputs.iter().zip(&s.certificates).enumerate() {
        topologies.push(TopologyCertificate {
            index,
            gamma: cert.gamma.clone(),
            min_eig: cert.min_eig,
            max_eig: cert.max_eig,
            ledger: evaluate_ledger(inp, &s.gains),
            checks: verify_gains(&s.gains, inp),
        });
    }
    let entries: Vec<(f64, f64, f64)> = topologies
        .iter()
        .map(|t| (t.ledger.n_mu_min, t.ledger.l_mu_max, t.ledger.a3))
        .collect();
    let dwell = design::dwell_time(&entries).ok();
    let switches: Vec<f64> = s.g_a.switch_times().filter(|&t| t <= s.t_end).collect();
    let configured_dwell = if switches.len() < 2 {
        f64::INFINITY
    } else {
        s.g_a.min_spacing()
    };
    let dwell_satisfied = dwell.map(|d| configured_dwell >= d.pi_d_min);
    let all_satisfied = topologies.iter().all(|t| design::all_satisfied(&t.checks));
    Ok(Certificate {
        scenario: s.name.clone(),
        gains: s.gains,
        all_satisfied,
        designed_gains,
        design_failure,
        dwell,
        configured_dwell,
        dwell_satisfied,
        topologies,
    })
}

fn cmd_certify(a: &CertifyArgs) -> Result<i32> {
    let s = load_scenario(&a.scenario, &a.overrides.to_overrides())?;
    let cert = certify(&s)?;
    if let Some(dir) = &a.out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("certificate.toml"), cert.to_toml()?)?;
    }
    print!("{}", cert.to_text());
    if cert.all_satisfied {
        Ok(EXIT_OK)
    } else {
        for (topo, c) in cert.violations() {
            eprintln!("violated on topology {topo}: {} ({})", c.id, c.description);
        }
        Ok(EXIT_CERTIFICATION)
    }
}

fn cmd_check_graph(a: &CheckGraphArgs) -> Result<i32> {
    let text = std::fs::read_to_string(&a.graph)?;
    let g = DirectedGraph::parse_edge_list(&text)?;
    if a.root >= g.node_count() {
        return Err(Error::invalid(format!("root {} is not a node", a.root)));
    }
    let rooted = has_rooted_spanning_tree(&g, a.root);
    println!("nodes: {}", g.node_count());
    println!(
        "spanning tree rooted at {}: {}",
        a.root,
        if rooted { "yes" } else { "no" }
    );
    if !rooted {
        return Err(Error::NoSpanningTree);
    }
    if a.root != LEADER {
        return Ok(EXIT_OK);
    }
    let part = laplacian(&g);
    println!("L21 = {:?}", part.l21.as_slice());
    println!("L22 =");
    for i in 0..part.l22.nrows() {
        let row: Vec<String> = part.l22.row(i).iter().map(|x| format!("{x:8.3}")).collect();
        println!("  {}", row.join(" "));
    }
    let cert = solve_gamma(&part)?;
    println!("gamma = {:?}", cert.gamma);
    println!("method: {:?}", cert.method);
    println!("lambda_min(X) = {:.6e}, lambda_max(X) = {:.6e}", cert.min_eig, cert.max_eig);
    Ok(EXIT_OK)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub value: f64,
    pub steady_state_norm: f64,
    pub final_pos_err: f64,
    pub final_vel_err: f64,
    pub t1: Option<f64>,
    pub omega_radius: f64,
}

pub fn sweep(s: &Scenario, param: SweepParam, values: &[f64]) -> Result<Vec<SweepEntry>> {
    values
        .par_iter()
        .map(|&value| {
            let mut sc = s.clone();
            match param {
                SweepParam::Epsilon => sc.gains.epsilon = value,
                SweepParam::Mu => sc.gains.mu = value,
            }
            sc.gains.validate()?;
            let trace = simulation::run(&sc)?;
            let ledgers = scenario_ledgers(&sc)?;
            let report = analysis::analyze(&trace, sc.blackout, ledgers.first());
            Ok(SweepEntry {
                value,
                steady_state_norm: analysis::steady_state_norm(&trace),
                final_pos_err: report.final_pos_err,
                final_vel_err: report.final_vel_err,
                t1: report.t1,
                omega_radius: ledgers.iter().map(|l| l.omega_radius).fold(f64::INFINITY, f64::min),
            })
        })
        .collect()
}

fn cmd_sweep(a: &SweepArgs) -> Result<i32> {
    let s = load_scenario(&a.scenario, &a.overrides.to_overrides())?;
    let entries = sweep(&s, a.param, &a.values)?;
    std::fs::create_dir_all(&a.out)?;
    let mut table = String::from("# value steady_state_norm final_pos_err final_vel_err omega_radius\n");
    for e in &entries {
        let _ = writeln!(
            table,
            "{:e} {:e} {:e} {:e} {:e}",
            e.value, e.steady_state_norm, e.final_pos_err, e.final_vel_err, e.omega_radius
        );
        println!(
            "{:?} = {:<10} steady-state {:.4e}  final |q~| {:.4e}  |q~'| {:.4e}",
            a.param, e.value, e.steady_state_norm, e.final_pos_err, e.final_vel_err
        );
    }
    std::fs::write(a.out.join("sweep.dat"), table)?;
    std::fs::write(
        a.out.join("sweep.json"),
        serde_json::to_string_pretty(&entries).map_err(|e| Error::parse(e.to_string()))?,
    )?;
    Ok(EXIT_OK)
}
