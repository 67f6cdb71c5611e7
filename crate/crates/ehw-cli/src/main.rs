//! Command-line driver: validate machine definitions, learn models of them
//! over a single reset-free run, replay trace logs, and export graphs.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};

use ehw::abstraction::Interface;
use ehw::backbone::Session;
use ehw::config::parse_config;
use ehw::dot::{efsm_dot, reduced_dot, sampled_fsm, snapshot_dot};
use ehw::dsl::{parse_concrete_input, parse_concrete_output, parse_efsm, serialize_efsm};
use ehw::efsm::{ConcreteInput, Efsm};
use ehw::infer::ehw_main;
use ehw::interp::{validate_efsm, Sul, SulMachine};
use ehw::value::{Domain, Value};

#[derive(Parser)]
#[command(
    name = "ehw",
    version,
    about = "Learn register machines from a black box over one unbroken run"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check a machine definition is deterministic, observable and strongly connected
    Validate {
        /// Machine definition file
        efsm: PathBuf,
    },
    /// Drive the machine as a black box and learn a model of it
    Infer {
        /// Machine definition standing in for the system under learning
        efsm: PathBuf,
        /// Learner session file: h, W, input sets, register sets, seed, budgets
        config: PathBuf,
        /// Directory the artifacts are written to
        #[arg(short, long)]
        out: PathBuf,
        /// Override the seed given in the session file
        #[arg(long)]
        seed: Option<u64>,
        /// Always walk back through the homing sequence between targets
        #[arg(long)]
        no_bounded_transfer: bool,
    },
    /// Re-execute a trace log against a machine and diff the outputs
    Replay {
        /// Trace log, as written by `infer` into trace.log
        log: PathBuf,
        /// Machine definition to replay against
        efsm: PathBuf,
    },
    /// Print a machine definition or a table snapshot as Graphviz DOT
    ExportDot {
        /// A machine definition or a sampled.fsm snapshot
        file: PathBuf,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Cmd::Validate { efsm } => cmd_validate(&efsm),
        Cmd::Infer {
            efsm,
            config,
            out,
            seed,
            no_bounded_transfer,
        } => cmd_infer(&efsm, &config, &out, seed, no_bounded_transfer),
        Cmd::Replay { log, efsm } => cmd_replay(&log, &efsm),
        Cmd::ExportDot { file } => cmd_export_dot(&file),
    }
}

fn load_machine(path: &Path) -> Result<Efsm> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let machine =
        parse_efsm(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(machine)
}

/// Concrete inputs for the validator's reachability probe: a small sample
/// of every input event's parameter space.
fn probe_inputs(machine: &Efsm) -> Vec<ConcreteInput> {
    const INT_SAMPLES: [i64; 4] = [0, 1, 100, -1];
    const MAX_PER_EVENT: usize = 64;
    let mut probes = Vec::new();
    for sig in &machine.inputs {
        let mut combos: Vec<Vec<Value>> = vec![Vec::new()];
        for (_, domain) in &sig.params {
            let choices: Vec<Value> = match domain {
                Domain::Int => INT_SAMPLES.iter().map(|&i| Value::Int(i)).collect(),
                Domain::Enum(syms) => syms.iter().map(|s| Value::sym(s)).collect(),
            };
            let mut next = Vec::new();
            for combo in &combos {
                for v in &choices {
                    let mut c = combo.clone();
                    c.push(v.clone());
                    next.push(c);
                    if next.len() >= MAX_PER_EVENT {
                        break;
                    }
                }
            }
            combos = next;
        }
        for args in combos {
            probes.push(ConcreteInput::new(&sig.name, args));
        }
    }
    probes
}

fn cmd_validate(path: &Path) -> Result<()> {
    let machine = load_machine(path)?;
    let report = validate_efsm(&machine, &probe_inputs(&machine));
    println!("{report}");
    if report.ok() {
        Ok(())
    } else {
        bail!(
            "{} violation{} in {}",
            report.violations.len(),
            if report.violations.len() == 1 { "" } else { "s" },
            path.display()
        )
    }
}

fn cmd_infer(
    efsm: &Path,
    config: &Path,
    out: &Path,
    seed: Option<u64>,
    no_bounded_transfer: bool,
) -> Result<()> {
    let machine = load_machine(efsm)?;
    let report = validate_efsm(&machine, &probe_inputs(&machine));
    if !report.ok() {
        println!("{report}");
        bail!("{} failed validation", efsm.display());
    }

    let iface = Interface::of(&machine);
    let text = fs::read_to_string(config)
        .with_context(|| format!("reading {}", config.display()))?;
    let mut cfg = parse_config(&text, &iface)
        .with_context(|| format!("parsing {}", config.display()))?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    if no_bounded_transfer {
        cfg.no_bounded_transfer = true;
    }

    let mut session = Session::new(cfg, iface, SulMachine::new(machine));
    let outcome = ehw_main(&mut session);

    // The trace and event log document the run whether or not it converged.
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let write = |name: &str, contents: String| -> Result<()> {
        let path = out.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
    };
    write("trace.log", session.trace.render_log(&session.cfg.rg))?;
    write("events.log", session.log.render())?;

    let inference = outcome
        .map_err(|e| anyhow!("inference aborted at step {}: {e}", session.trace.len()))?;

    if let Some(scc) = &session.scc {
        write(
            "sampled.fsm",
            sampled_fsm(&session.table, &session.delta, &session.lambda, scc),
        )?;
    }
    write("sampled.dot", reduced_dot(&inference.reduced))?;
    write("learned.efsm", serialize_efsm(&inference.model))?;
    write("learned.dot", efsm_dot(&inference.model))?;
    let mut stats = serde_json::to_string_pretty(&inference.stats)?;
    stats.push('\n');
    write("stats.json", stats)?;

    let s = &inference.stats;
    println!(
        "learned {} states ({} before merging), {} transitions",
        s.states_after_reduce, s.states_before_reduce, s.transitions
    );
    println!(
        "{} steps on the system, {} counterexample{}",
        s.steps,
        s.ce_count,
        if s.ce_count == 1 { "" } else { "s" }
    );
    println!("artifacts in {}", out.display());
    Ok(())
}

fn cmd_replay(log: &Path, efsm: &Path) -> Result<()> {
    let machine = load_machine(efsm)?;
    let iface = Interface::of(&machine);
    let text =
        fs::read_to_string(log).with_context(|| format!("reading {}", log.display()))?;

    let mut sul = SulMachine::new(machine);
    let mut steps = 0usize;
    for (no, line) in text.lines().enumerate() {
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let mut cols = line.split('\t');
        let (Some(index), Some(input), Some(output)) =
            (cols.next(), cols.next(), cols.next())
        else {
            bail!("log line {} is not tab-separated", no + 1);
        };
        let index: usize = index.trim().parse().unwrap_or(no + 1);
        let x = parse_concrete_input(input, &iface)
            .with_context(|| format!("log step {index}: bad input"))?;
        let logged = parse_concrete_output(output, &iface)
            .with_context(|| format!("log step {index}: bad output"))?;
        let y = sul
            .step(&x)
            .with_context(|| format!("machine failed at step {index}"))?;
        steps += 1;
        if y != logged {
            println!("divergence at step {index}: log has {logged}, machine answered {y}");
            bail!("replay diverged");
        }
    }
    println!("match: {steps} steps replayed");
    Ok(())
}

fn cmd_export_dot(file: &Path) -> Result<()> {
    let text =
        fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
    match parse_efsm(&text) {
        Ok(machine) => {
            print!("{}", efsm_dot(&machine));
            Ok(())
        }
        Err(e) => match snapshot_dot(&text) {
            Some(dot) => {
                print!("{dot}");
                Ok(())
            }
            None => Err(anyhow!(
                "{} is neither a machine definition ({e}) nor a table snapshot",
                file.display()
            )),
        },
    }
}
