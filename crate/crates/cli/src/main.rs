//! Command-line front end: solve single instances from JSON files, run the
//! timing benchmark, fit observed complexity, and cross-check solvers
//! against the grid oracle.
//!
//! Exit codes: 0 success, 2 validation/input error, 3 solver failure.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Deserialize;

use dro_core::bench::{self, Method};
use dro_core::oracle::{self, GridConfig};
use dro_core::{
    cost_stats, solve_box_simplex, solve_dro, validate_distribution, BoxSimplexInstance,
    DroInstance, SolverResult,
};

#[derive(Parser)]
#[command(
    name = "dro",
    about = "Worst-case distributions over divergence/norm balls and box-simplex projections"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance read from a JSON file.
    Solve {
        /// kl|burg|hellinger|chi2|mchi2|l1|l2|linf|simplex
        #[arg(long)]
        method: String,
        /// Instance file: {"q": [...], "c": [...]} for the ball methods,
        /// {"q": [...], "l": [...], "u": [...]} for simplex.
        #[arg(long)]
        input: PathBuf,
        /// Ball radius; required for every method except simplex.
        #[arg(long)]
        epsilon: Option<f64>,
        /// Write the result JSON here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Time the solvers on deterministic random instances and write a CSV.
    Bench {
        /// Comma-separated method list, or "all".
        #[arg(long)]
        methods: String,
        /// Comma-separated sizes, ascending.
        #[arg(long)]
        sizes: String,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Fit t = a * n^b per method from a bench CSV.
    Fit {
        #[arg(long)]
        input: PathBuf,
    },
    /// Compare a solver against the brute-force grid oracle at n = 2 or 3.
    OracleCheck {
        #[arg(long)]
        method: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        /// Grid step; defaults to 1e-5 for n = 2 and 1e-3 for n = 3.
        #[arg(long)]
        step: Option<f64>,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Deserialize)]
struct DroInput {
    q: Vec<f64>,
    c: Vec<f64>,
}

#[derive(Deserialize)]
struct SimplexInput {
    q: Vec<f64>,
    l: Vec<f64>,
    u: Vec<f64>,
}

enum CliError {
    /// Bad input: malformed files, invalid data, unusable arguments.
    Validation(String),
    /// The solver itself failed.
    Solver(String),
}

impl CliError {
    fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Validation(_) => ExitCode::from(2),
            CliError::Solver(_) => ExitCode::from(3),
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Solver(m) => m,
        }
    }
}

fn validation(err: impl std::fmt::Display) -> CliError {
    CliError::Validation(err.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message());
            err.exit_code()
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve {
            method,
            input,
            epsilon,
            output,
        } => cmd_solve(&method, &input, epsilon, output.as_deref()),
        Command::Bench {
            methods,
            sizes,
            trials,
            epsilon,
            seed,
            output,
        } => cmd_bench(&methods, &sizes, trials, epsilon, seed, &output),
        Command::Fit { input } => cmd_fit(&input),
        Command::OracleCheck {
            method,
            n,
            trials,
            step,
            epsilon,
            seed,
        } => cmd_oracle_check(&method, n, trials, step, epsilon, seed),
    }
}

fn read_to_string(path: &Path) -> Result<String, CliError> {
    let mut buf = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut buf))
        .map_err(|e| validation(format!("{}: {e}", path.display())))?;
    Ok(buf)
}

fn emit_result(result: &SolverResult, output: Option<&Path>) -> Result<(), CliError> {
    let json = serde_json::to_string_pretty(result).map_err(validation)?;
    match output {
        Some(path) => {
            let mut f = File::create(path).map_err(validation)?;
            writeln!(f, "{json}").map_err(validation)?;
        }
        None => println!("{json}"),
    }
    Ok(())
}

fn cmd_solve(
    method: &str,
    input: &Path,
    epsilon: Option<f64>,
    output: Option<&Path>,
) -> Result<(), CliError> {
    let method = Method::parse(method).map_err(validation)?;
    let text = read_to_string(input)?;
    let result = match method.distance() {
        Some(kind) => {
            let epsilon = epsilon.ok_or_else(|| {
                validation(format!(
                    "--epsilon is required for method {}",
                    method.name()
                ))
            })?;
            let parsed: DroInput = serde_json::from_str(&text).map_err(validation)?;
            let q = validate_distribution(parsed.q).map_err(validation)?;
            let c = cost_stats(parsed.c).map_err(validation)?;
            let inst = DroInstance::new(q, c, epsilon, kind).map_err(validation)?;
            solve_dro(&inst).map_err(|e| CliError::Solver(e.to_string()))?
        }
        None => {
            let parsed: SimplexInput = serde_json::from_str(&text).map_err(validation)?;
            let inst = BoxSimplexInstance::new(parsed.q, parsed.l, parsed.u).map_err(validation)?;
            solve_box_simplex(&inst)
        }
    };
    emit_result(&result, output)
}

fn parse_methods(list: &str) -> Result<Vec<Method>, CliError> {
    if list.trim() == "all" {
        return Ok(Method::ALL.to_vec());
    }
    list.split(',')
        .map(|name| Method::parse(name.trim()).map_err(validation))
        .collect()
}

fn cmd_bench(
    methods: &str,
    sizes: &str,
    trials: usize,
    epsilon: f64,
    seed: u64,
    output: &Path,
) -> Result<(), CliError> {
    let methods = parse_methods(methods)?;
    let sizes: Vec<usize> = sizes
        .split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|e| validation(format!("bad size {s}: {e}")))
        })
        .collect::<Result<_, _>>()?;
    if trials == 0 {
        return Err(validation("--trials must be at least 1"));
    }
    let records = bench::run_bench(&methods, &sizes, trials, epsilon, seed)
        .map_err(|e| CliError::Solver(e.to_string()))?;
    let file = File::create(output).map_err(validation)?;
    let mut out = BufWriter::new(file);
    bench::write_csv(&records, &mut out).map_err(|e| CliError::Solver(e.to_string()))?;
    eprintln!(
        "wrote {} records ({} methods x {} sizes) to {}",
        records.len(),
        methods.len(),
        sizes.len(),
        output.display()
    );
    Ok(())
}

fn cmd_fit(input: &Path) -> Result<(), CliError> {
    let file = File::open(input).map_err(validation)?;
    let mut reader = BufReader::new(file);
    let records = bench::read_csv(&mut reader).map_err(validation)?;
    for (method, fit) in bench::fit_records(&records) {
        match fit {
            Ok(fit) => println!("{method}: a = {:.4e}, b = {:.4}", fit.a, fit.b),
            Err(e) => println!("{method}: fit failed ({e})"),
        }
    }
    Ok(())
}

fn cmd_oracle_check(
    method: &str,
    n: usize,
    trials: usize,
    step: Option<f64>,
    epsilon: f64,
    seed: u64,
) -> Result<(), CliError> {
    let method = Method::parse(method).map_err(validation)?;
    if n != 2 && n != 3 {
        return Err(validation("--n must be 2 or 3"));
    }
    let cfg = match step {
        Some(step) if step > 0.0 => GridConfig { step },
        Some(step) => return Err(validation(format!("--step must be positive, got {step}"))),
        None => GridConfig::for_dimension(n),
    };
    // the solver may not beat the lattice optimum by more than a lattice
    // cell, nor fall below it by more than the check slack
    let slack = 5.0 * cfg.step;
    let mut worst_gap: f64 = 0.0;
    let mut failures = 0usize;
    for trial in 0..trials {
        let s = bench::trial_seed(seed, 0, n as u64, trial as u64);
        let (solver_obj, grid_obj, max_residual) = match method.distance() {
            Some(kind) => {
                let (q, c) = bench::generate_instance(n, s).map_err(validation)?;
                let inst = DroInstance::new(q, c, epsilon, kind).map_err(validation)?;
                let result = solve_dro(&inst).map_err(|e| CliError::Solver(e.to_string()))?;
                let (_, grid_obj) =
                    oracle::grid_solve(&inst, &cfg).map_err(|e| CliError::Solver(e.to_string()))?;
                let rep = oracle::residuals(&inst, &result);
                let max_res = rep
                    .sum_violation
                    .max(rep.nonneg_violation)
                    .max(rep.ball_violation)
                    .max(rep.root_residual);
                (result.objective, grid_obj, max_res)
            }
            None => {
                let inst = bench::generate_box_instance(n, s).map_err(validation)?;
                let result = solve_box_simplex(&inst);
                let (_, grid_obj) = oracle::grid_solve_box(&inst, &cfg)
                    .map_err(|e| CliError::Solver(e.to_string()))?;
                let rep = oracle::residuals_box(&inst, &result);
                let max_res = rep
                    .sum_violation
                    .max(rep.nonneg_violation)
                    .max(rep.ball_violation)
                    .max(rep.root_residual);
                // projection minimizes, so the roles flip
                (grid_obj, result.objective, max_res)
            }
        };
        let gap = grid_obj - solver_obj;
        worst_gap = worst_gap.max(gap);
        if gap > slack || max_residual > 1e-6 {
            failures += 1;
            eprintln!(
                "trial {trial}: gap {gap:.3e} (allowed {slack:.1e}), max residual {max_residual:.3e}"
            );
        }
    }
    println!(
        "{}: n={n} trials={trials} step={:.0e} worst objective gap {:.3e} -> {}",
        method.name(),
        cfg.step,
        worst_gap,
        if failures == 0 { "OK" } else { "FAIL" }
    );
    if failures > 0 {
        return Err(CliError::Solver(format!(
            "{failures}/{trials} trials outside tolerance"
        )));
    }
    Ok(())
}
