//! Command-line front end: run scenarios, check histories, and reproduce
//! the latency and impossibility experiments.
//!
//! Exit status is 0 when the outcome is the satisfied/expected one, 1 when
//! a checked property is violated (or an operation never terminated), and
//! 2 on any usage or input error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context as _, Result};
use clap::{Parser, Subcommand};

use partsim::checkers::{check, CheckError, PropertyName};
use partsim::experiments::{
    availability_report, bound_check_attiya_welch, bound_check_lipton_sandberg, latency_sweep,
    replay_theorem_1, replay_theorem_3, topology_experiment, LatencyReport, Workload,
    DEFAULT_DELAYS,
};
use partsim::histories::{opportunistic, History};
use partsim::registers::{Algorithm, LeaderVariant};
use partsim::scenario::{build_sim, validate_scenario, ScenarioError, ScenarioSpec};

#[derive(Parser)]
#[command(
    name = "partsim",
    version,
    about = "Replicated registers over partitionable links"
)]
struct Cli {
    /// Directory for histories and reports.
    #[arg(long, global = true, env = "PARTSIM_OUT", default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write its history.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Replace the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a history file against a consistency property.
    Check {
        #[arg(long)]
        history: PathBuf,
        /// linearizability, sequential, causal or eventual
        #[arg(long)]
        property: PropertyName,
        /// Count partitioned executions as satisfying the property.
        #[arg(long)]
        opportunistic: bool,
    },
    /// Measure latency against network delay and classify it.
    Sweep {
        /// Defaults to the scenario's algorithm.
        #[arg(long)]
        algorithm: Option<String>,
        /// Take processes and workload from this scenario instead of the
        /// built-in workload. Its delay model and faults are ignored.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_DELAYS)]
        delays: Vec<u64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Rebuild the executions of an impossibility argument and check them.
    Replay {
        /// 1: terminating register with lossy vs late links; 3: eventual
        /// consistency under a permanent partition.
        #[arg(long, value_parser = ["1", "3"])]
        theorem: String,
    },
    /// Fraction of requests answered within a latency bound.
    Avail {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        sla: u64,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// ABD and causal registers over a two-level site topology.
    Topo {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Compare measured latencies with the known lower bounds.
    Bounds {
        #[arg(long, default_value_t = 100)]
        d: u64,
        /// Delay uncertainty for the ABD check; defaults to d.
        #[arg(long)]
        u: Option<u64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Parse and validate a scenario file, reporting every problem.
    Validate { scenario: PathBuf },
}

enum Outcome {
    Ok,
    Violated,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Violated) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Run { scenario, seed } => cmd_run(&cli.out, scenario, *seed),
        Command::Check {
            history,
            property,
            opportunistic,
        } => cmd_check(history, *property, *opportunistic),
        Command::Sweep {
            algorithm,
            scenario,
            delays,
            seed,
        } => cmd_sweep(
            &cli.out,
            algorithm.as_deref(),
            scenario.as_deref(),
            delays,
            *seed,
        ),
        Command::Replay { theorem } => cmd_replay(&cli.out, theorem),
        Command::Avail {
            scenario,
            sla,
            seed,
        } => cmd_avail(&cli.out, scenario, *sla, *seed),
        Command::Topo { seed } => cmd_topo(&cli.out, *seed),
        Command::Bounds { d, u, seed } => cmd_bounds(*d, u.unwrap_or(*d), *seed),
        Command::Validate { scenario } => {
            let spec = load_scenario(scenario, None)?;
            println!("valid: {spec}");
            Ok(Outcome::Ok)
        }
    }
}

fn load_scenario(path: &Path, seed: Option<u64>) -> Result<ScenarioSpec> {
    let mut spec = match validate_scenario(path) {
        Ok(spec) => spec,
        Err(ScenarioError::Invalid(issues)) => {
            let lines: Vec<String> = issues.0.iter().map(|i| format!("  {i}")).collect();
            bail!("{} is invalid:\n{}", path.display(), lines.join("\n"));
        }
        Err(e) => return Err(e.into()),
    };
    if seed.is_some() {
        spec.seed = seed;
    }
    Ok(spec)
}

fn write(out: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let path = out.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".into())
}

/// Runs to quiescence; a non-terminating run still yields its history.
fn simulate(spec: &ScenarioSpec) -> Result<(History, Vec<u64>)> {
    let mut sim = build_sim(spec)?;
    Ok(match sim.run_to_quiescence() {
        Ok(h) => (h, Vec::new()),
        Err(e) => (*e.history, e.pending),
    })
}

fn cmd_run(out: &Path, scenario: &Path, seed: Option<u64>) -> Result<Outcome> {
    let spec = load_scenario(scenario, seed)?;
    let (h, pending) = simulate(&spec)?;
    let path = write(out, &format!("{}.ndjson", stem(scenario)), &h.to_ndjson())?;
    println!(
        "{spec}: {} ops, {} sent, {} delivered, ended at t={}; history in {}",
        h.ops().len(),
        h.sends().len(),
        h.deliveries().len(),
        h.meta().end_time,
        path.display()
    );
    if pending.is_empty() {
        Ok(Outcome::Ok)
    } else {
        println!("non-terminating: op(s) {pending:?} never completed");
        Ok(Outcome::Violated)
    }
}

fn cmd_check(history: &Path, property: PropertyName, opp: bool) -> Result<Outcome> {
    let h = History::load(history).with_context(|| format!("loading {}", history.display()))?;
    let verdict = if opp {
        opportunistic::<CheckError, _>(|h| check(property, h), &h)?
    } else {
        check(property, &h)?
    };
    println!("{}", serde_json::to_string(&verdict)?);
    Ok(if verdict.satisfied {
        Outcome::Ok
    } else {
        Outcome::Violated
    })
}

fn parse_algorithm(name: &str) -> Result<Algorithm> {
    match Algorithm::from_name(name) {
        Some(a) => Ok(a),
        None => bail!(
            "unknown algorithm {name:?}; valid names: {}",
            Algorithm::names().join(", ")
        ),
    }
}

fn save_report(out: &Path, name: &str, report: &LatencyReport) -> Result<()> {
    write(out, &format!("{name}.csv"), &report.to_csv())?;
    write(out, &format!("{name}.json"), &report.to_json())?;
    Ok(())
}

fn cmd_sweep(
    out: &Path,
    algorithm: Option<&str>,
    scenario: Option<&Path>,
    delays: &[u64],
    seed: u64,
) -> Result<Outcome> {
    let (algorithm, workload) = match (algorithm, scenario) {
        (Some(name), None) => (parse_algorithm(name)?, Workload::standard()),
        (name, Some(path)) => {
            let spec = load_scenario(path, None)?;
            let alg = match name {
                Some(n) => parse_algorithm(n)?,
                None => spec.algorithm().expect("validated"),
            };
            let workload = Workload {
                processes: spec.processes.count,
                entries: spec.workload,
            };
            (alg, workload)
        }
        (None, None) => bail!("sweep needs --algorithm or --scenario"),
    };
    let report = latency_sweep(algorithm, delays, &workload, seed)?;
    save_report(out, &format!("sweep_{}", algorithm.name()), &report)?;
    print!("{}", report.to_csv());
    Ok(Outcome::Ok)
}

fn cmd_replay(out: &Path, theorem: &str) -> Result<Outcome> {
    let expected = if theorem == "1" {
        let r = replay_theorem_1()?;
        write(out, "theorem1_e1.ndjson", &r.e1.to_ndjson())?;
        write(out, "theorem1_e2.ndjson", &r.e2.to_ndjson())?;
        write(out, "theorem1.json", &serde_json::to_string_pretty(&r)?)?;
        let verdict =
            |v: &partsim::histories::Verdict| if v.satisfied { "satisfied" } else { "violated" };
        println!(
            "E1: loss-free={} linearizable={}",
            r.e1_loss_free,
            verdict(&r.e1_linearizable)
        );
        println!(
            "E2: loss-free={} linearizable={} (read returned at {}, all deliveries after: {})",
            r.e2_loss_free,
            verdict(&r.e2_linearizable),
            r.read_response,
            r.deliveries_after_read()
        );
        r.as_expected()
    } else {
        let r = replay_theorem_3()?;
        write(out, "theorem3_forever.ndjson", &r.partitioned.to_ndjson())?;
        write(out, "theorem3_healed.ndjson", &r.healed.to_ndjson())?;
        write(out, "theorem3.json", &serde_json::to_string_pretty(&r)?)?;
        let reason = r
            .eventual
            .counterexample
            .as_ref()
            .map_or(String::new(), |c| format!(" ({})", c.reason));
        println!(
            "permanent partition: eventual={}{reason}",
            r.eventual.satisfied
        );
        println!(
            "permanent partition: opportunistic eventual={}",
            r.opportunistic.satisfied
        );
        println!("healed partition: eventual={}", r.healed_eventual.satisfied);
        r.as_expected()
    };
    println!(
        "replay {}",
        if expected {
            "matched expectations"
        } else {
            "DID NOT match expectations"
        }
    );
    Ok(if expected {
        Outcome::Ok
    } else {
        Outcome::Violated
    })
}

fn cmd_avail(out: &Path, scenario: &Path, sla: u64, seed: Option<u64>) -> Result<Outcome> {
    let spec = load_scenario(scenario, seed)?;
    let (h, _) = simulate(&spec)?;
    let report = availability_report(&h, sla);
    let name = stem(scenario);
    write(out, &format!("{name}.ndjson"), &h.to_ndjson())?;
    write(
        out,
        &format!("{name}_avail.json"),
        &serde_json::to_string_pretty(&report)?,
    )?;
    println!(
        "{}: {}/{} requests within {} ticks, fraction_within_bound={:.4}",
        spec.algorithm.name, report.within_bound, report.invoked, sla, report.fraction_within_bound
    );
    Ok(Outcome::Ok)
}

fn cmd_topo(out: &Path, seed: u64) -> Result<Outcome> {
    let r = topology_experiment(seed)?;
    save_report(out, "topo_abd_intra_site", &r.abd_intra_site)?;
    save_report(out, "topo_causal_cross_site", &r.causal_cross_site)?;
    save_report(out, "topo_abd_spread", &r.abd_spread)?;
    write(out, "topo.json", &serde_json::to_string_pretty(&r)?)?;
    for (label, rep) in [
        ("abd, one site", &r.abd_intra_site),
        ("causal, one replica per site", &r.causal_cross_site),
        ("abd, one replica per site", &r.abd_spread),
    ] {
        println!(
            "{label}: read {} {:?}, write {} {:?} over d_remote {:?}",
            rep.read.classification,
            rep.maxima(partsim::histories::OpKind::Read),
            rep.write.classification,
            rep.maxima(partsim::histories::OpKind::Write),
            rep.rows.iter().map(|row| row.d).collect::<Vec<_>>()
        );
    }
    Ok(Outcome::Ok)
}

fn cmd_bounds(d: u64, u: u64, seed: u64) -> Result<Outcome> {
    let aw = bound_check_attiya_welch(d, u, seed)?;
    println!("{aw}");
    let mut ok = aw.holds;
    for variant in [LeaderVariant::FastRead, LeaderVariant::FastWrite] {
        let ls = bound_check_lipton_sandberg(variant, d, seed)?;
        println!("{ls}");
        ok &= ls.holds;
    }
    Ok(if ok { Outcome::Ok } else { Outcome::Violated })
}
