//! Command-line driver: proves safety properties of finite protocol
//! instances, runs the finite-convergence loop and refinement hierarchies,
//! certifies and minimizes invariant files, replays counterexample traces,
//! and dumps grounding statistics. Every run prints a summary JSON line
//! with wall time, per-level assertion counts, and the total solver query
//! count. Exit codes: 0 proved/valid, 1 counterexample found, 2
//! certification failure, 3 error or inconclusive.

mod trc;

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};

use qinv_core::certify::{check_inductive, check_trace, minimize, CertOutcome, TraceCheck};
use qinv_core::converge::{converge, ConvergeConfig, ConvergeOutcome};
use qinv_core::frontend::{corpus, parse_assertions, parse_hierarchy, parse_protocol};
use qinv_core::grounder::{g_and, instantiate, FiniteInstance, SizeAssignment};
use qinv_core::hierarchy::run_hierarchy;
use qinv_core::ic3::{prove, BoostMode, Ic3Config, Outcome};
use qinv_core::ir::{NamedFormula, Protocol};

#[derive(Parser)]
#[command(name = "qinv", version, about = "Quantified invariant inference for finite protocol instances")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the IC3 engine once at fixed sizes.
    Prove {
        /// Protocol file (.ptp); bundled corpus names also resolve.
        file: PathBuf,
        /// Sort sizes, e.g. value=2,acceptor=3,ballot=4
        #[arg(long)]
        size: String,
        /// Assertion file (.inv) conjoined to the property as strengthening.
        #[arg(long)]
        strengthen: Option<PathBuf>,
        /// Where to write the inferred assertions (.inv).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Where to write a counterexample trace (.trc); defaults to the
        /// protocol file's stem.
        #[arg(long)]
        trace_out: Option<PathBuf>,
        /// Boost mode: full, symmetry, or none.
        #[arg(long, default_value = "full")]
        boost: String,
    },
    /// Finite-convergence loop: prove, saturation-check, grow, repeat.
    Converge {
        file: PathBuf,
        #[arg(long)]
        size: String,
        #[arg(long)]
        strengthen: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        trace_out: Option<PathBuf>,
    },
    /// Run a refinement chain (.hchy) top-down, writing one .inv per level.
    Hierarchy {
        file: PathBuf,
        #[arg(long)]
        size: String,
        /// Directory for per-level .inv outputs.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Check that an assertion file is an inductive invariant.
    Certify {
        file: PathBuf,
        #[arg(long)]
        size: String,
        #[arg(long)]
        inv: PathBuf,
        /// Also reduce the set to a subsumption-free core and print it.
        #[arg(long)]
        minimize: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate a counterexample trace step by step.
    Replay {
        file: PathBuf,
        #[arg(long)]
        size: String,
        #[arg(long)]
        trace: PathBuf,
    },
    /// Dump grounding statistics for an instance.
    Ground {
        file: PathBuf,
        #[arg(long)]
        size: String,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli.cmd) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            3
        }
    };
    std::process::exit(code);
}

/// Reads an input file, falling back to the bundled corpus when the path
/// does not exist but its file name is a corpus member.
fn read_input(path: &Path) -> Result<String> {
    if path.exists() {
        return std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()));
    }
    if let Some(name) = path.file_name().and_then(|n| n.to_str()) {
        if let Some(text) = corpus::file_text(name) {
            return Ok(text.to_string());
        }
    }
    bail!("{} does not exist and is not a bundled corpus file", path.display())
}

fn parse_sizes(spec: &str) -> Result<SizeAssignment> {
    let mut pairs = Vec::new();
    for part in spec.split(',') {
        let (name, n) = part
            .split_once('=')
            .ok_or_else(|| anyhow!("bad size entry {part:?}; expected sort=count"))?;
        let n: usize = n.trim().parse().with_context(|| format!("size {part:?}"))?;
        pairs.push((name.trim().to_string(), n));
    }
    let refs: Vec<(&str, usize)> = pairs.iter().map(|(s, n)| (s.as_str(), *n)).collect();
    Ok(SizeAssignment::new(&refs))
}

fn parse_boost(name: &str) -> Result<BoostMode> {
    match name {
        "full" => Ok(BoostMode::Full),
        "symmetry" => Ok(BoostMode::Symmetry),
        "none" => Ok(BoostMode::None),
        other => bail!("unknown boost mode {other:?} (expected full, symmetry, or none)"),
    }
}

fn load_protocol(path: &Path) -> Result<Protocol> {
    Ok(parse_protocol(&read_input(path)?)?)
}

fn load_assertions(path: &Path, p: &Protocol) -> Result<Vec<NamedFormula>> {
    Ok(parse_assertions(&read_input(path)?, p)?)
}

fn render_inv(protocol: &str, assertions: &[NamedFormula]) -> String {
    let mut out = format!("(invariants {protocol}\n");
    for a in assertions {
        out.push_str(&format!("  (assertion {} {})\n", a.name, a.formula));
    }
    out.push_str(")\n");
    out
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Strengthened property: Safety conjoined with the ground expansion of the
/// given assertions.
fn strengthened_property(
    inst: &FiniteInstance,
    strengthening: &[NamedFormula],
) -> Result<qinv_core::grounder::G> {
    let mut parts = vec![inst.safety.clone()];
    for a in strengthening {
        parts.push(inst.expand(&a.formula)?);
    }
    Ok(g_and(parts))
}

fn summary(command: &str, started: Instant, queries: u64, levels: &[(String, usize)]) {
    let levels: Vec<serde_json::Value> = levels
        .iter()
        .map(|(name, n)| serde_json::json!({"name": name, "assertions": n}))
        .collect();
    let line = serde_json::json!({
        "command": command,
        "wall_time_s": started.elapsed().as_secs_f64(),
        "queries": queries,
        "levels": levels,
    });
    println!("{line}");
}

fn run(cmd: Cmd) -> Result<i32> {
    let started = Instant::now();
    match cmd {
        Cmd::Prove {
            file,
            size,
            strengthen,
            out,
            trace_out,
            boost,
        } => {
            let p = load_protocol(&file)?;
            let sizes = parse_sizes(&size)?;
            let inst = instantiate(&p, &sizes)?;
            let strengthening = match &strengthen {
                Some(path) => load_assertions(path, &p)?,
                None => Vec::new(),
            };
            let property = strengthened_property(&inst, &strengthening)?;
            let cfg = Ic3Config {
                boost: parse_boost(&boost)?,
                ..Ic3Config::default()
            };
            match prove(&inst, &property, &cfg)? {
                Outcome::Proof(proof) => {
                    let mut assertions = strengthening;
                    for a in &proof.assertions {
                        assertions.push(NamedFormula {
                            name: a.name.clone(),
                            formula: a.formula.clone(),
                        });
                    }
                    if let Some(out) = out {
                        write_file(&out, &render_inv(&p.name, &assertions))?;
                    }
                    summary(
                        "prove",
                        started,
                        proof.stats.queries,
                        &[(p.name.clone(), assertions.len())],
                    );
                    Ok(0)
                }
                Outcome::Trace(t) => {
                    let path = trace_out.unwrap_or_else(|| {
                        file.file_stem()
                            .map(|s| PathBuf::from(format!("{}.trc", s.to_string_lossy())))
                            .unwrap_or_else(|| PathBuf::from("counterexample.trc"))
                    });
                    write_file(&path, &trc::render(&inst, &t))?;
                    eprintln!(
                        "counterexample with {} states written to {}",
                        t.states.len(),
                        path.display()
                    );
                    summary("prove", started, t.stats.queries, &[]);
                    Ok(1)
                }
                Outcome::Inconclusive(msg, stats) => {
                    eprintln!("inconclusive: {msg}");
                    summary("prove", started, stats.queries, &[]);
                    Ok(3)
                }
            }
        }
        Cmd::Converge {
            file,
            size,
            strengthen,
            out,
            trace_out,
        } => {
            let p = load_protocol(&file)?;
            let sizes = parse_sizes(&size)?;
            let strengthening = match &strengthen {
                Some(path) => load_assertions(path, &p)?,
                None => Vec::new(),
            };
            let report = converge(&p, &sizes, &strengthening, &ConvergeConfig::default())?;
            for it in &report.iterations {
                let sz: Vec<String> =
                    it.sizes.0.iter().map(|(s, n)| format!("{s}={n}")).collect();
                println!(
                    "sizes {} proved={} saturation={} gate={}",
                    sz.join(","),
                    it.proved,
                    it.saturation.as_deref().unwrap_or("-"),
                    it.gate_passed.map_or("-".into(), |g| g.to_string()),
                );
            }
            println!("growth: {}", report.growth_summary());
            match &report.outcome {
                ConvergeOutcome::Converged { assertions } => {
                    if let Some(out) = out {
                        write_file(&out, &render_inv(&p.name, assertions))?;
                    }
                    summary(
                        "converge",
                        started,
                        report.queries,
                        &[(p.name.clone(), assertions.len())],
                    );
                    Ok(0)
                }
                ConvergeOutcome::Counterexample(t) => {
                    let final_inst = instantiate(&p, &report.final_sizes)?;
                    let path = trace_out.unwrap_or_else(|| {
                        file.file_stem()
                            .map(|s| PathBuf::from(format!("{}.trc", s.to_string_lossy())))
                            .unwrap_or_else(|| PathBuf::from("counterexample.trc"))
                    });
                    write_file(&path, &trc::render(&final_inst, t))?;
                    eprintln!("counterexample written to {}", path.display());
                    summary("converge", started, report.queries, &[]);
                    Ok(1)
                }
                ConvergeOutcome::Inconclusive(msg) => {
                    eprintln!("inconclusive: {msg}");
                    summary("converge", started, report.queries, &[]);
                    Ok(3)
                }
            }
        }
        Cmd::Hierarchy { file, size, out_dir } => {
            let text = read_input(&file)?;
            let cfg = parse_hierarchy(&text)?;
            let sizes = parse_sizes(&size)?;
            let dir = file.parent().map(Path::to_path_buf).unwrap_or_default();
            let resolve = |name: &str| -> Option<String> {
                let local = dir.join(name);
                std::fs::read_to_string(local)
                    .ok()
                    .or_else(|| corpus::file_text(name).map(str::to_string))
            };
            let run = run_hierarchy(&cfg, &resolve, &sizes, &ConvergeConfig::default())?;
            std::fs::create_dir_all(&out_dir)
                .with_context(|| format!("creating {}", out_dir.display()))?;
            let mut queries = 0;
            let mut levels = Vec::new();
            for lvl in &run.levels {
                queries += lvl.report.queries;
                println!("level {}: {}", lvl.level, lvl.report.growth_summary());
                if !lvl.invariant.is_empty() {
                    let path = out_dir.join(format!("{}.inv", lvl.level));
                    write_file(&path, &render_inv(&lvl.report.protocol, &lvl.invariant))?;
                    levels.push((lvl.level.clone(), lvl.invariant.len()));
                }
            }
            if run.completed {
                // reduce the final level's set to its subsumption-free core
                let last = run.levels.last().expect("completed chain has levels");
                let last_file = &cfg.levels.last().expect("levels").protocol_file;
                let text = resolve(last_file)
                    .ok_or_else(|| anyhow!("cannot resolve {last_file}"))?;
                let proto = parse_protocol(&text)?;
                let inst = instantiate(&proto, &last.report.final_sizes)?;
                let min = minimize(&inst, &inst.safety.clone(), &last.invariant)?;
                println!(
                    "final minimized set ({}): {}",
                    min.len(),
                    min.iter().map(|a| a.name.as_str()).collect::<Vec<_>>().join(", ")
                );
                summary("hierarchy", started, queries, &levels);
                Ok(0)
            } else {
                let msg = run.stopped.as_deref().unwrap_or("stopped");
                eprintln!("{msg}");
                summary("hierarchy", started, queries, &levels);
                Ok(if msg.contains("counterexample") { 1 } else { 3 })
            }
        }
        Cmd::Certify {
            file,
            size,
            inv,
            minimize: do_min,
            out,
        } => {
            let p = load_protocol(&file)?;
            let sizes = parse_sizes(&size)?;
            let inst = instantiate(&p, &sizes)?;
            let assertions = load_assertions(&inv, &p)?;
            match check_inductive(&inst, &inst.safety.clone(), &assertions)? {
                CertOutcome::Pass => {
                    let kept = if do_min {
                        let min = minimize(&inst, &inst.safety.clone(), &assertions)?;
                        println!(
                            "minimized set ({}): {}",
                            min.len(),
                            min.iter().map(|a| a.name.as_str()).collect::<Vec<_>>().join(", ")
                        );
                        min
                    } else {
                        assertions
                    };
                    if let Some(out) = out {
                        write_file(&out, &render_inv(&p.name, &kept))?;
                    }
                    summary("certify", started, 0, &[(p.name.clone(), kept.len())]);
                    Ok(0)
                }
                CertOutcome::Fail(witness) => {
                    eprintln!("certification failed: {witness:?}");
                    summary("certify", started, 0, &[]);
                    Ok(2)
                }
            }
        }
        Cmd::Replay { file, size, trace } => {
            let p = load_protocol(&file)?;
            let sizes = parse_sizes(&size)?;
            let inst = instantiate(&p, &sizes)?;
            let text = read_input(&trace)?;
            let t = trc::parse(&inst, &text)?;
            match check_trace(&inst, &t, &inst.safety.clone()) {
                TraceCheck::Valid => {
                    println!("trace valid: {} states", t.states.len());
                    summary("replay", started, 0, &[]);
                    Ok(0)
                }
                TraceCheck::Invalid(step, why) => {
                    eprintln!("trace invalid at step {step}: {why}");
                    summary("replay", started, 0, &[]);
                    Ok(2)
                }
            }
        }
        Cmd::Ground { file, size } => {
            let p = load_protocol(&file)?;
            let sizes = parse_sizes(&size)?;
            let inst = instantiate(&p, &sizes)?;
            let (bools, enum_bits, total) = inst.state_bits();
            let sorts: Vec<serde_json::Value> = inst
                .sorts
                .iter()
                .map(|s| serde_json::json!({"name": s.name, "size": s.consts.len()}))
                .collect();
            let actions: Vec<serde_json::Value> = inst
                .action_tuple_counts
                .iter()
                .map(|(name, tuples, kept)| {
                    serde_json::json!({"name": name, "tuples": tuples, "kept": kept})
                })
                .collect();
            let line = serde_json::json!({
                "protocol": p.name,
                "sorts": sorts,
                "bool_atoms": bools,
                "enum_bits": enum_bits,
                "state_bits": total,
                "actions": actions,
                "transition_disjuncts": inst.disjuncts.len(),
            });
            println!("{line}");
            summary("ground", started, 0, &[]);
            Ok(0)
        }
    }
}
