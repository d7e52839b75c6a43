use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use holecycle_core::driver::{check_necessary, check_theorem_hypotheses, decompose_traced};
use holecycle_core::subsolvers::SolverBudget;
use holecycle_core::{from_json, to_json, verify_decomposition, Error, Verdict};

/// Cycle decompositions of the complete graph with a hole, K_{u+w} - K_u.
#[derive(Parser)]
#[command(name = "holecycle", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the necessary conditions for a length list.
    Feasible(Instance),
    /// Build and verify a decomposition.
    Decompose {
        #[command(flatten)]
        inst: Instance,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the decomposition here instead of stdout.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Print the route, case tags and merge steps to stderr.
        #[arg(long)]
        trace: bool,
    },
    /// Verify a decomposition file against a length list.
    Verify {
        #[arg(long)]
        json: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        lengths: Vec<usize>,
    },
    /// Run a fixed set of instances through the pipeline.
    Selftest {
        #[arg(long)]
        quick: bool,
    },
}

#[derive(Args)]
struct Instance {
    /// Hole size.
    #[arg(long)]
    u: usize,
    /// Size of the other part.
    #[arg(long)]
    w: usize,
    /// Cycle lengths, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    lengths: Vec<usize>,
}

/// Fixed selftest instances: (u, w, lengths as (length, count) pairs).
const SELFTEST: &[(usize, usize, &[(usize, usize)])] = &[
    (1, 6, &[(3, 7)]),
    (3, 4, &[(3, 2), (4, 3)]),
    (5, 10, &[(3, 5), (4, 5), (5, 12)]),
    (5, 10, &[(4, 10), (5, 11)]),
    (7, 10, &[(3, 10), (4, 2), (5, 8), (6, 5), (7, 1)]),
    (9, 10, &[(3, 37), (6, 1), (9, 2)]),
    (9, 12, &[(5, 12), (8, 3), (9, 10)]),
];

fn expand(pairs: &[(usize, usize)]) -> Vec<usize> {
    pairs.iter().flat_map(|&(l, n)| std::iter::repeat(l).take(n)).collect()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // keep 2 for "infeasible"
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {:#}", e);
            let code = e.downcast_ref::<Error>().map_or(1, Error::exit_code);
            ExitCode::from(code as u8)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.cmd {
        Command::Feasible(Instance { u, w, lengths }) => {
            if let Err(bad) = check_necessary(u, w, &lengths) {
                for c in &bad {
                    println!("violated ({}): {}", c.id(), c.describe());
                }
                return Err(Error::Infeasible(format!("{} condition(s) fail", bad.len())).into());
            }
            println!("feasible");
            match check_theorem_hypotheses(u, w, &lengths) {
                Ok(()) => println!("constructive route applies"),
                Err(e) => println!("search route ({})", e),
            }
            Ok(0)
        }
        Command::Decompose { inst, seed, json, trace } => {
            let budget = SolverBudget::seeded(seed);
            let start = Instant::now();
            let out = decompose_traced(inst.u, inst.w, &inst.lengths, &budget)?;
            if trace {
                eprintln!("route: {}", out.route);
                for line in &out.trace {
                    eprintln!("{}", line);
                }
            }
            let text = to_json(&out.certificate.host, &out.certificate.cycles);
            match json {
                Some(path) => {
                    std::fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
                    println!("pass: {} cycles via {} in {:.2?}", out.certificate.cycles.len(), out.route, start.elapsed());
                }
                None => println!("{}", text),
            }
            Ok(0)
        }
        Command::Verify { json, lengths } => {
            let text = std::fs::read_to_string(&json).with_context(|| format!("reading {}", json.display()))?;
            let (host, cycles) = from_json(&text)?;
            let cert = verify_decomposition(&host, &cycles, &lengths);
            match cert.verdict {
                Verdict::Pass => {
                    println!("pass: {} cycles cover K_{{{}}} - K_{{{}}}", cert.cycles.len(), host.u() + host.w(), host.u());
                    Ok(0)
                }
                Verdict::Fail(why) => {
                    println!("fail: {}", why);
                    Ok(1)
                }
            }
        }
        Command::Selftest { quick } => {
            let cases = if quick { &SELFTEST[..3] } else { SELFTEST };
            let mut failed = 0;
            for &(u, w, pairs) in cases {
                let m = expand(pairs);
                let start = Instant::now();
                let res = decompose_traced(u, w, &m, &SolverBudget::seeded(1));
                let label = format!("(u, w) = ({}, {}), {} cycles", u, w, m.len());
                match res {
                    Ok(o) if o.certificate.passed() => println!("ok    {} via {} in {:.2?}", label, o.route, start.elapsed()),
                    Ok(_) => {
                        failed += 1;
                        println!("FAIL  {}: certificate rejected", label);
                    }
                    Err(e) => {
                        failed += 1;
                        println!("FAIL  {}: {}", label, e);
                    }
                }
            }
            if failed > 0 {
                bail!("{} of {} selftest instances failed", failed, cases.len());
            }
            Ok(0)
        }
    }
}
