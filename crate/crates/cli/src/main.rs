//! `a653`: run scenarios, explore their state space, check refinement and
//! translate service specifications.
//!
//! Exit codes: 0 pass, 1 fail with counterexample, 2 configuration or parse
//! error, 3 budget exceeded.

use a653_core::checker::{
    self, Budget, CheckReport, ExploreOptions, Interleave, Pairing, RefinementOptions, Verdict,
};
use a653_core::config::{ConfigError, Scenario};
use a653_core::invariants;
use a653_core::kernel::TransitionModelVariant;
use a653_core::pipeline::{self, RunOptions};
use a653_core::types::Variant;
use clap::{Args, Parser, Subcommand};
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;
use thiserror::Error;

#[derive(Parser)]
#[command(
    name = "a653",
    version,
    about = "ARINC 653 kernel model: simulation and bounded checking"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the tick pipeline and the scenario script.
    Run {
        config: PathBuf,
        #[arg(long, default_value_t = 30)]
        ticks: u64,
        #[command(flatten)]
        variants: VariantArgs,
    },
    /// Explore the reachable states and check the invariants.
    Explore {
        config: PathBuf,
        #[command(flatten)]
        bounds: BoundArgs,
        #[command(flatten)]
        variants: VariantArgs,
    },
    /// Check guard strengthening and simulation against the abstract model.
    CheckRefinement {
        config: PathBuf,
        /// Abstract process transition relation: augmented or as_figured.
        #[arg(long, default_value = "augmented")]
        model: TransitionModelVariant,
        /// `default` or a pairing table file.
        #[arg(long, default_value = "default")]
        pairing: String,
        /// Only check guard strengthening.
        #[arg(long, conflicts_with = "simulation_only")]
        guards_only: bool,
        /// Only check simulation.
        #[arg(long)]
        simulation_only: bool,
        #[command(flatten)]
        bounds: BoundArgs,
        #[command(flatten)]
        variants: VariantArgs,
    },
    /// Parse a service specification and translate it into events.
    Translate {
        file: PathBuf,
        #[arg(long)]
        check_disjoint: bool,
        #[arg(long)]
        check_coverage: bool,
    },
    /// Print the default refinement pairing table.
    Pairings,
}

#[derive(Args)]
struct BoundArgs {
    /// Clock bound: ticks (`30`) or major frames (`3mtf`).
    #[arg(long, default_value = "3mtf")]
    depth: String,
    /// `free` or `pipeline`.
    #[arg(long, default_value = "free")]
    mode: Interleave,
    /// Worker threads; 1 explores sequentially, 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long, default_value_t = 1_000_000)]
    max_states: usize,
    #[arg(long, default_value_t = 60)]
    max_seconds: u64,
}

#[derive(Args)]
struct VariantArgs {
    /// Override a variant toggle, e.g. `resume=as_written`.
    #[arg(long = "variant", value_name = "TOGGLE=VARIANT")]
    variant: Vec<String>,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {err}")]
    Parse {
        path: String,
        err: apex_dsl::ParseError,
    },
    #[error("{0}")]
    Pairing(#[from] checker::PairingError),
    #[error("cannot read {path}: {err}")]
    Io { path: String, err: std::io::Error },
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|err| CliError::Io {
        path: path.display().to_string(),
        err,
    })
}

fn load(path: &Path, v: &VariantArgs) -> Result<Scenario, CliError> {
    let mut scn = Scenario::parse(&read(path)?)?;
    for t in &v.variant {
        let (k, val) = t.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("bad --variant `{t}`, expected toggle=variant"))
        })?;
        let val: Variant = val.parse().map_err(|e| CliError::Usage(format!("{e}")))?;
        match k {
            "resume" => scn.variants.resume = val,
            "send_queuing" => scn.variants.send_queuing = val,
            "receive_buffer" => scn.variants.receive_buffer = val,
            _ => return Err(CliError::Usage(format!("unknown variant toggle `{k}`"))),
        }
    }
    Ok(scn)
}

fn depth_ticks(scn: &Scenario, depth: &str) -> Result<u64, CliError> {
    let bad = || CliError::Usage(format!("bad --depth `{depth}`, expected <ticks> or <n>mtf"));
    match depth.strip_suffix("mtf") {
        Some(n) => Ok(n.parse::<u64>().map_err(|_| bad())? * scn.schedule.mtf),
        None => depth.parse().map_err(|_| bad()),
    }
}

fn options(scn: &Scenario, b: &BoundArgs) -> Result<ExploreOptions, CliError> {
    let ticks = depth_ticks(scn, &b.depth)?;
    if ticks == 0 {
        return Err(CliError::Usage("--depth must be at least 1".into()));
    }
    Ok(ExploreOptions {
        max_tick: ticks,
        interleave: b.mode,
        budget: Budget {
            max_states: b.max_states,
            max_time: Duration::from_secs(b.max_seconds),
        },
        threads: b.threads,
    })
}

fn exit_for(r: &CheckReport) -> u8 {
    match r.verdict {
        Verdict::Pass => 0,
        Verdict::Fail => 1,
        Verdict::Budget => 3,
    }
}

fn cmd_run(out: &mut String, path: &Path, ticks: u64, v: &VariantArgs) -> Result<u8, CliError> {
    let scn = load(path, v)?;
    let report = pipeline::run(
        &scn,
        RunOptions {
            ticks,
            stop_on_violation: false,
        },
    );
    for line in &report.trace {
        let _ = writeln!(out, "{line}");
    }
    let s = &report.final_state;
    let _ = writeln!(
        out,
        "final tick={} partition={} process={}",
        s.clock_tick,
        s.current_partition.map_or("-", |p| scn.partition_name(p)),
        s.current_process.map_or("-", |p| scn.process_name(p)),
    );
    match &report.violation {
        None => {
            let _ = writeln!(
                out,
                "invariants: all {} hold, message conservation holds",
                invariants::INVARIANT_COUNT
            );
            let _ = writeln!(out, "verdict=PASS");
            Ok(0)
        }
        Some((tick, event, v)) => {
            let _ = writeln!(out, "violation at tick={tick} after {event}:");
            for x in v {
                let _ = writeln!(out, "  {x}");
            }
            let _ = writeln!(out, "verdict=FAIL");
            Ok(1)
        }
    }
}

fn cmd_explore(
    out: &mut String,
    path: &Path,
    b: &BoundArgs,
    v: &VariantArgs,
) -> Result<u8, CliError> {
    let scn = load(path, v)?;
    let report = checker::explore(&scn, &options(&scn, b)?);
    out.push_str(&report.render());
    Ok(exit_for(&report))
}

fn cmd_check_refinement(
    out: &mut String,
    path: &Path,
    ropts: RefinementOptions,
    b: &BoundArgs,
    v: &VariantArgs,
) -> Result<u8, CliError> {
    let scn = load(path, v)?;
    let report = checker::check_refinement(&scn, &options(&scn, b)?, &ropts);
    out.push_str(&report.render());
    Ok(exit_for(&report))
}

fn cmd_translate(
    out: &mut String,
    path: &Path,
    disjoint: bool,
    coverage: bool,
) -> Result<u8, CliError> {
    let text = read(path)?;
    let spec = apex_dsl::parse_service(&text).map_err(|err| CliError::Parse {
        path: path.display().to_string(),
        err,
    })?;
    let t = apex_dsl::translate_detailed(&spec);
    for e in &t.events {
        let _ = write!(out, "{e}");
    }
    let _ = writeln!(out, "events={}", t.events.len());
    let mut ok = true;
    if disjoint {
        let d = apex_dsl::check_disjointness(&t.events);
        let _ = writeln!(out, "disjoint={d}");
        ok &= d;
    }
    if coverage {
        let c = apex_dsl::check_branch_coverage(&t);
        let _ = writeln!(out, "coverage={c}");
        ok &= c;
    }
    Ok(if ok { 0 } else { 1 })
}

fn dispatch(out: &mut String, cmd: Cmd) -> Result<u8, CliError> {
    match cmd {
        Cmd::Run {
            config,
            ticks,
            variants,
        } => cmd_run(out, &config, ticks, &variants),
        Cmd::Explore {
            config,
            bounds,
            variants,
        } => cmd_explore(out, &config, &bounds, &variants),
        Cmd::CheckRefinement {
            config,
            model,
            pairing,
            guards_only,
            simulation_only,
            bounds,
            variants,
        } => {
            let pairing = match pairing.as_str() {
                "default" => Pairing::default_table(),
                file => Pairing::parse(&read(Path::new(file))?)?,
            };
            let ropts = RefinementOptions {
                model,
                pairing,
                guard_strengthening: !simulation_only,
                simulation: !guards_only,
            };
            cmd_check_refinement(out, &config, ropts, &bounds, &variants)
        }
        Cmd::Translate {
            file,
            check_disjoint,
            check_coverage,
        } => cmd_translate(out, &file, check_disjoint, check_coverage),
        Cmd::Pairings => {
            out.push_str(&Pairing::default_table().render());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let mut out = String::new();
    let result = dispatch(&mut out, cli.cmd);
    // A closed pipe (`| head`) is not an error worth reporting.
    let _ = std::io::stdout().lock().write_all(out.as_bytes());
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
