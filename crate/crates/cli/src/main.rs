//! CSV front end for the tradeoff laboratory.
//!
//! Subcommands: `sweep` (closed-form family curves), `optimize` (leakage
//! minimization over a download grid), `bounds` (converse rates),
//! `compare-epsp` (additive family vs the leaky-PIR baseline), and
//! `verify` (retrievability and oracle-equivalence suites).
//!
//! Exit codes: 0 success, 1 usage, 2 verification failure, 3 infeasible
//! budget in an optimize run.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use serde::Serialize;

use wpir::bounds::{lpir_rate, lpir_ub, r_ub_maxl, r_ub_mi, RateBound};
use wpir::metrics::evaluate_tradeoff;
use wpir::optimizer::{minimize_leakage, LeakageObjective, OptProblem};
use wpir::scheme_a::{bernoulli_tuple_a, eps_privacy_rate_a};
use wpir::scheme_b::{bernoulli_tuple_b, sphere_tuple_b};
use wpir::sim::run_exhaustive;
use wpir::wrappers::partition_tuple_a;
use wpir::{PartitionScheme, PartitionSchemeA, Scheme, SchemeA, SchemeB, TimeShareScheme};

const EXIT_USAGE: i32 = 1;
const EXIT_VERIFY: i32 = 2;
const EXIT_INFEASIBLE: i32 = 3;

#[derive(Parser)]
#[command(name = "wpir", version, about = "Weakly-private retrieval tradeoff tool")]
struct Cli {
    /// Number of files.
    #[arg(long = "M", global = true, value_name = "M")]
    files: Option<usize>,
    /// Number of servers (default 2).
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Seed for randomized suites.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write output to this file instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Divide mi by log2(M), upload by 2(M-1), and access by M.
    #[arg(long, global = true)]
    normalize: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Closed-form tradeoff sweep over a parameter grid.
    Sweep {
        /// scheme-a-bernoulli | scheme-a-partition | scheme-b-bernoulli | scheme-b-sphere
        family: String,
        /// Parameter grid start:end[:step]; an optional "name=" prefix is ignored.
        grid: String,
    },
    /// Minimize leakage for each download budget in the grid.
    Optimize {
        /// mi | maxl
        metric: String,
        /// Download-budget grid start:end[:step].
        grid: String,
    },
    /// Converse rate bound across a leakage grid (bits).
    Bounds {
        /// mi | maxl
        metric: String,
        /// Leakage grid start:end[:step].
        grid: String,
    },
    /// Rate comparison against the leaky-PIR baseline across a leakage grid (nats).
    CompareEpsp { grid: String },
    /// Run the retrievability and oracle-equivalence suites up to the given caps.
    Verify {
        m_max: usize,
        n_max: usize,
        /// Overrides --seed when given.
        #[arg(value_name = "SEED")]
        round_seed: Option<u64>,
    },
}

/// Where the main body of a command's output goes.
enum Dest {
    Stdout,
    File(PathBuf),
}

struct CmdOut {
    text: String,
    dest: Dest,
    code: i32,
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let ok = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = e.print();
            return if ok { 0 } else { EXIT_USAGE };
        }
    };
    match dispatch(&cli) {
        Ok(out) => {
            match &out.dest {
                Dest::Stdout => print!("{}", out.text),
                Dest::File(path) => {
                    if let Err(e) = std::fs::write(path, &out.text) {
                        eprintln!("error: cannot write {}: {e}", path.display());
                        return EXIT_USAGE;
                    }
                }
            }
            out.code
        }
        Err(msg) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
    }
}

fn dispatch(cli: &Cli) -> Result<CmdOut, String> {
    let csv_dest = || match &cli.out {
        Some(p) => Dest::File(p.clone()),
        None => Dest::Stdout,
    };
    match &cli.cmd {
        Cmd::Sweep { family, grid } => {
            let text = sweep(cli, family, grid)?;
            Ok(CmdOut { text, dest: csv_dest(), code: 0 })
        }
        Cmd::Optimize { metric, grid } => {
            let (text, code) = optimize(cli, metric, grid)?;
            Ok(CmdOut { text, dest: csv_dest(), code })
        }
        Cmd::Bounds { metric, grid } => {
            let text = bounds(cli, metric, grid)?;
            Ok(CmdOut { text, dest: csv_dest(), code: 0 })
        }
        Cmd::CompareEpsp { grid } => {
            let text = compare_epsp(cli, grid)?;
            Ok(CmdOut { text, dest: csv_dest(), code: 0 })
        }
        Cmd::Verify { m_max, n_max, round_seed } => {
            let seed = round_seed.or(cli.seed).unwrap_or(1);
            verify(cli, *m_max, *n_max, seed)
        }
    }
}

/// Renders with 9 significant digits in plain decimal; "inf" is the
/// infinity sentinel and exact zero prints as "0".
fn fmt(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return "0".into();
    }
    let mag = x.abs().log10().floor() as i32;
    let prec = (8 - mag).max(0) as usize;
    format!("{x:.prec$}")
}

/// Parses "start:end[:step]" (step defaults to 1) into the inclusive grid;
/// a single number is a one-point grid and start > end is an empty one.
/// A leading "name=" tag, as in "p=0:0.5:0.05", is tolerated and dropped.
fn parse_grid(spec: &str) -> Result<Vec<f64>, String> {
    let body = spec.rsplit('=').next().unwrap_or(spec);
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| format!("grid piece {t:?} is not a number"))
    };
    let parts: Vec<&str> = body.split(':').collect();
    match parts.len() {
        1 => Ok(vec![num(parts[0])?]),
        2 | 3 => {
            let start = num(parts[0])?;
            let end = num(parts[1])?;
            let step = if parts.len() == 3 { num(parts[2])? } else { 1.0 };
            if !step.is_finite() || step <= 0.0 {
                return Err("grid step must be positive".into());
            }
            let count = (end - start) / step + 1e-9;
            if count < 0.0 {
                return Ok(Vec::new());
            }
            Ok((0..=count as usize).map(|i| start + i as f64 * step).collect())
        }
        _ => Err(format!("grid {spec:?} is not start:end[:step]")),
    }
}

fn grid_int(v: f64) -> Result<usize, String> {
    let r = v.round();
    if (v - r).abs() > 1e-9 || r < 0.0 {
        return Err(format!("grid value {v} is not a nonnegative integer"));
    }
    Ok(r as usize)
}

fn need_files(cli: &Cli) -> Result<usize, String> {
    cli.files.ok_or_else(|| "--M is required".into())
}

fn sweep(cli: &Cli, family: &str, grid: &str) -> Result<String, String> {
    let files = need_files(cli)?;
    let n = cli.n.unwrap_or(2);
    let need_n2 = |n: usize| {
        if n == 2 {
            Ok(())
        } else {
            Err(format!("family {family} is two-server only, got --n {n}"))
        }
    };
    let mut out = String::from("family,M,n,param,rate,upload,access,mi,wil,maxl,epsp\n");
    for &v in &parse_grid(grid)? {
        let (param, mut t) = match family {
            "scheme-a-bernoulli" => {
                need_n2(n)?;
                (fmt(v), bernoulli_tuple_a(files, v).map_err(|e| e.to_string())?)
            }
            "scheme-b-bernoulli" => {
                need_n2(n)?;
                (fmt(v), bernoulli_tuple_b(files, v).map_err(|e| e.to_string())?)
            }
            "scheme-b-sphere" => {
                need_n2(n)?;
                let w = grid_int(v)?;
                (w.to_string(), sphere_tuple_b(files, w).map_err(|e| e.to_string())?)
            }
            "scheme-a-partition" => {
                let eta = grid_int(v)?;
                (eta.to_string(), partition_tuple_a(files, n, eta).map_err(|e| e.to_string())?)
            }
            other => return Err(format!("unknown family {other:?}")),
        };
        if cli.normalize {
            t.rho_mi /= (files as f64).log2();
            t.upload /= 2.0 * (files - 1) as f64;
            t.access /= files as f64;
        }
        writeln!(
            out,
            "{family},{files},{n},{param},{},{},{},{},{},{},{}",
            fmt(t.rate),
            fmt(t.upload),
            fmt(t.access),
            fmt(t.rho_mi),
            fmt(t.rho_wil),
            fmt(t.rho_maxl),
            fmt(t.rho_epsp),
        )
        .unwrap();
    }
    Ok(out)
}

fn parse_metric(metric: &str) -> Result<LeakageObjective, String> {
    match metric {
        "mi" => Ok(LeakageObjective::MutualInformation),
        "maxl" => Ok(LeakageObjective::MaxLeakage),
        other => Err(format!("metric must be mi or maxl, got {other:?}")),
    }
}

fn optimize(cli: &Cli, metric: &str, grid: &str) -> Result<(String, i32), String> {
    let files = need_files(cli)?;
    let n = cli.n.unwrap_or(2);
    let objective = parse_metric(metric)?;
    let mut out = String::from("D,rate,rho,gap,status\n");
    let mut code = 0;
    for &d in &parse_grid(grid)? {
        let problem = OptProblem::new(files, n, d).map_err(|e| e.to_string())?;
        match problem.floor_mass() {
            Err(_) => {
                // infeasible budgets keep their row; values stay blank
                writeln!(out, "{},,,,infeasible", fmt(d)).unwrap();
                code = EXIT_INFEASIBLE;
            }
            Ok(floor) => {
                let r = minimize_leakage(&problem, objective).map_err(|e| e.to_string())?;
                let rate = (n - 1) as f64 / (n as f64 - floor);
                writeln!(out, "{},{},{},{},ok", fmt(d), fmt(rate), fmt(r.rho), fmt(r.gap))
                    .unwrap();
            }
        }
    }
    Ok((out, code))
}

fn bounds(cli: &Cli, metric: &str, grid: &str) -> Result<String, String> {
    let files = need_files(cli)?;
    let n = cli.n.unwrap_or(2);
    let bound: fn(usize, usize, f64) -> wpir::error::Result<RateBound> = match metric {
        "mi" => r_ub_mi,
        "maxl" => r_ub_maxl,
        other => return Err(format!("metric must be mi or maxl, got {other:?}")),
    };
    let mut out = String::from("rho,r_ub_raw,r_ub_clamped,vacuous\n");
    for &rho in &parse_grid(grid)? {
        let b = bound(files, n, rho).map_err(|e| e.to_string())?;
        writeln!(
            out,
            "{},{},{},{}",
            fmt(rho),
            fmt(b.raw),
            fmt(b.clamped),
            u8::from(b.vacuous)
        )
        .unwrap();
    }
    Ok(out)
}

fn compare_epsp(cli: &Cli, grid: &str) -> Result<String, String> {
    let files = need_files(cli)?;
    let n = cli.n.unwrap_or(2);
    if n != 2 {
        return Err("compare-epsp is two-server only".into());
    }
    let mut out = String::from("rho,r_lpir,r_a,r_ub_epsp\n");
    for &rho in &parse_grid(grid)? {
        let lp = lpir_rate(files, 2, rho).map_err(|e| e.to_string())?;
        let ra = eps_privacy_rate_a(files, rho).map_err(|e| e.to_string())?;
        let ub = lpir_ub(files, 2, rho).map_err(|e| e.to_string())?;
        writeln!(out, "{},{},{},{}", fmt(rho), fmt(lp), fmt(ra), fmt(ub)).unwrap();
    }
    Ok(out)
}

#[derive(Serialize)]
struct VerifyCheck {
    name: String,
    rounds: usize,
    failures: Vec<String>,
}

#[derive(Serialize)]
struct VerifyReport {
    m_max: usize,
    n_max: usize,
    seed: u64,
    pass: bool,
    checks: Vec<VerifyCheck>,
}

const VERIFY_DBS: usize = 8;

fn retrieval_check(
    name: String,
    scheme: &dyn Scheme,
    seed: u64,
    checks: &mut Vec<VerifyCheck>,
) -> Result<(), String> {
    let report = run_exhaustive(scheme, VERIFY_DBS, seed).map_err(|e| e.to_string())?;
    let failures = report
        .failures
        .iter()
        .map(|f| format!("{name}: m={} s={} ({})", f.m, f.strategy, f.detail))
        .collect();
    checks.push(VerifyCheck { name, rounds: report.rounds, failures });
    Ok(())
}

fn oracle_check(
    name: String,
    closed: wpir::TradeoffPoint,
    scheme: &dyn Scheme,
    checks: &mut Vec<VerifyCheck>,
) -> Result<(), String> {
    let measured = evaluate_tradeoff(scheme).map_err(|e| e.to_string())?;
    let mut failures = Vec::new();
    if !closed.approx_eq(&measured, 1e-9) {
        failures.push(format!("{name}: closed {closed:?} != measured {measured:?}"));
    }
    checks.push(VerifyCheck { name, rounds: 1, failures });
    Ok(())
}

fn verify(cli: &Cli, m_max: usize, n_max: usize, seed: u64) -> Result<CmdOut, String> {
    if m_max < 2 || n_max < 2 {
        return Err("verify needs m_max >= 2 and n_max >= 2".into());
    }
    let mut checks = Vec::new();

    // retrievability: both schemes and both wrappers, exhaustively
    for files in 2..=m_max {
        for n in 2..=n_max {
            let tag = format!("M={files} n={n}");
            let a = SchemeA::uniform(files, n).map_err(|e| e.to_string())?;
            let b = SchemeB::uniform(files, n).map_err(|e| e.to_string())?;
            retrieval_check(format!("retrieve scheme-a {tag}"), &a, seed, &mut checks)?;
            retrieval_check(format!("retrieve scheme-b {tag}"), &b, seed, &mut checks)?;
            let pa = PartitionScheme::new(a, 2).map_err(|e| e.to_string())?;
            retrieval_check(format!("retrieve partition(scheme-a) {tag}"), &pa, seed, &mut checks)?;
            let tb = TimeShareScheme::new(b).map_err(|e| e.to_string())?;
            retrieval_check(format!("retrieve timeshare(scheme-b) {tag}"), &tb, seed, &mut checks)?;
        }
    }

    // oracle equivalence: closed forms against enumeration
    for files in 2..=m_max {
        let p = 0.3;
        oracle_check(
            format!("closed-form scheme-a-bernoulli M={files}"),
            bernoulli_tuple_a(files, p).map_err(|e| e.to_string())?,
            &SchemeA::bernoulli(files, p).map_err(|e| e.to_string())?,
            &mut checks,
        )?;
        oracle_check(
            format!("closed-form scheme-b-bernoulli M={files}"),
            bernoulli_tuple_b(files, p).map_err(|e| e.to_string())?,
            &SchemeB::bernoulli(files, p).map_err(|e| e.to_string())?,
            &mut checks,
        )?;
        oracle_check(
            format!("closed-form scheme-b-sphere M={files} w=1"),
            sphere_tuple_b(files, 1).map_err(|e| e.to_string())?,
            &SchemeB::sphere(files, 1).map_err(|e| e.to_string())?,
            &mut checks,
        )?;
        if files % 2 == 0 && files > 2 {
            for n in 2..=n_max {
                oracle_check(
                    format!("closed-form scheme-a-partition M={files} n={n} eta=2"),
                    partition_tuple_a(files, n, 2).map_err(|e| e.to_string())?,
                    &PartitionSchemeA::new(files, n, 2).map_err(|e| e.to_string())?,
                    &mut checks,
                )?;
            }
        }
    }

    let pass = checks.iter().all(|c| c.failures.is_empty());
    let report = VerifyReport { m_max, n_max, seed, pass, checks };

    let path = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("wpir-verify.json"));
    let json = serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?;
    std::fs::write(&path, json + "\n")
        .map_err(|e| format!("cannot write {}: {e}", path.display()))?;

    let mut text = String::new();
    for c in &report.checks {
        if c.failures.is_empty() {
            writeln!(text, "ok   {} ({} rounds)", c.name, c.rounds).unwrap();
        } else {
            writeln!(text, "FAIL {}", c.name).unwrap();
            for f in &c.failures {
                writeln!(text, "     {f}").unwrap();
            }
        }
    }
    let total: usize = report.checks.len();
    let failed: usize = report.checks.iter().filter(|c| !c.failures.is_empty()).count();
    writeln!(
        text,
        "verify: {total} checks, {failed} failed (report written to {})",
        path.display()
    )
    .unwrap();
    Ok(CmdOut {
        text,
        dest: Dest::Stdout,
        code: if report.pass { 0 } else { EXIT_VERIFY },
    })
}
