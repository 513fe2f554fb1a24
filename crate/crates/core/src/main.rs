//! Command-line front end for the solver library.
//!
//! Subcommands: `validate` (structural checks on a built-in model),
//! `simulate` (one trajectory as CSV), `converge` (Monte Carlo strong
//! convergence study), and `demo-paper` (the premade convergence study
//! on the built-in example, reproducing order 1/2).
//!
//! Conventions: progress and resolved configuration go to stderr;
//! results go to stdout; CSV goes to `--out` when given, otherwise to
//! stdout. Exit codes: 0 success, 1 failed validation or numerical
//! error, 2 usage error, 3 trajectory diverged.

use std::error::Error;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sdae::convergence::{strong_error, ConvergenceConfig, ConvergenceReport};
use sdae::model::{by_name, names};
use sdae::scheme::{self, SchemeKind};
use sdae::{SdaeProblem, Trajectory, WienerGrid};

#[derive(Parser)]
#[command(
    name = "sdae",
    version,
    about = "Tamed semi-implicit solver for index-1 stochastic differential-algebraic equations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check that a model is index-1 with noise outside the constraints,
    /// and probe its drift for one-sided Lipschitz and monotonicity
    /// constants.
    Validate {
        /// Built-in model name.
        #[arg(long)]
        model: String,
        /// Random states probed per check.
        #[arg(long, default_value_t = 64)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Integrate one trajectory and write it as CSV.
    Simulate {
        /// Built-in model name.
        #[arg(long)]
        model: String,
        /// direct-tamed, dual-tamed, or direct-untamed.
        #[arg(long, value_parser = parse_scheme)]
        scheme: SchemeKind,
        /// Number of grid steps.
        #[arg(long)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Wiener stream index; distinct indices give independent paths.
        #[arg(long, default_value_t = 0)]
        path_index: u64,
        /// Trajectory CSV file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the driving Wiener increments as CSV.
        #[arg(long)]
        wiener_out: Option<PathBuf>,
    },
    /// Measure the strong convergence order against a fine-grid
    /// reference over an ensemble of coupled paths.
    Converge {
        /// Built-in model name.
        #[arg(long)]
        model: String,
        /// direct-tamed, dual-tamed, or direct-untamed.
        #[arg(long, value_parser = parse_scheme)]
        scheme: SchemeKind,
        /// Reference grid resolution (power of two).
        #[arg(long)]
        nref: usize,
        /// Comma-separated coarse resolutions, e.g. 64,128,256.
        #[arg(long, value_delimiter = ',', required = true)]
        nlist: Vec<usize>,
        /// Monte Carlo paths.
        #[arg(long)]
        paths: usize,
        /// Moment exponent in the error norm.
        #[arg(long, default_value_t = 2)]
        p: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Convergence table CSV file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write a log-log plot as SVG.
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Worker threads (results do not depend on this).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Run the premade convergence study: direct-tamed on the built-in
    /// example, reference N = 16384, coarse N = 64..2048, 128 paths,
    /// mean-square error, seed 42.
    DemoPaper {
        /// Convergence table CSV file.
        #[arg(long, default_value = "demo-paper.csv")]
        out: PathBuf,
        /// Also write a log-log plot as SVG.
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Worker threads (results do not depend on this).
        #[arg(long)]
        workers: Option<usize>,
    },
}

fn parse_scheme(s: &str) -> Result<SchemeKind, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn resolve_model(name: &str) -> Result<SdaeProblem, String> {
    by_name(name).ok_or_else(|| {
        format!(
            "unknown model {name:?}; available models: {}",
            names().join(", ")
        )
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<ExitCode, Box<dyn Error>> {
    match command {
        Command::Validate {
            model,
            samples,
            seed,
        } => {
            let problem = resolve_model(&model)?;
            eprintln!(
                "validating {} (dim {}, noise dim {}, horizon {}) with {} samples, seed {}",
                problem.name(),
                problem.dim(),
                problem.noise_dim(),
                problem.horizon(),
                samples,
                seed
            );
            let report = problem.validate_index1(samples, seed)?;
            println!("{report}");
            if report.passed() {
                println!("validation PASSED");
                Ok(ExitCode::SUCCESS)
            } else {
                println!("validation FAILED");
                Ok(ExitCode::from(1))
            }
        }
        Command::Simulate {
            model,
            scheme,
            steps,
            seed,
            path_index,
            out,
            wiener_out,
        } => {
            let problem = resolve_model(&model)?;
            let h = problem.horizon() / steps as f64;
            eprintln!(
                "simulating {} with {} on N = {} (h = {}), seed {}, path {}",
                problem.name(),
                scheme,
                steps,
                h,
                seed,
                path_index
            );
            let grid = WienerGrid::generate(
                seed,
                path_index,
                problem.noise_dim(),
                steps,
                problem.horizon(),
            )?;
            if let Some(path) = &wiener_out {
                let mut w = BufWriter::new(File::create(path)?);
                grid.write_csv(&mut w)?;
                w.flush()?;
                eprintln!("wrote Wiener increments to {}", path.display());
            }
            let trajectory = scheme::simulate(&problem, scheme, &grid)?;
            let summary = summarize_trajectory(&trajectory);
            match &out {
                Some(path) => {
                    let mut w = BufWriter::new(File::create(path)?);
                    trajectory.write_csv(&mut w)?;
                    w.flush()?;
                    eprintln!("wrote trajectory to {}", path.display());
                    println!("{summary}");
                }
                None => {
                    let stdout = io::stdout();
                    let mut w = BufWriter::new(stdout.lock());
                    trajectory.write_csv(&mut w)?;
                    w.flush()?;
                    eprintln!("{summary}");
                }
            }
            if let Some(n) = trajectory.diverged_at {
                eprintln!(
                    "trajectory diverged at step {} (t = {}); later states are frozen",
                    n,
                    trajectory.time(n)
                );
                Ok(ExitCode::from(3))
            } else {
                Ok(ExitCode::SUCCESS)
            }
        }
        Command::Converge {
            model,
            scheme,
            nref,
            nlist,
            paths,
            p,
            seed,
            out,
            svg,
            workers,
        } => {
            let problem = resolve_model(&model)?;
            let config = ConvergenceConfig {
                scheme,
                n_ref: nref,
                n_list: nlist,
                paths,
                p_exponent: p,
                seed,
            };
            run_convergence(&problem, &config, out.as_deref(), svg.as_deref(), workers)
        }
        Command::DemoPaper { out, svg, workers } => {
            let problem = resolve_model("paper-example")?;
            let config = ConvergenceConfig {
                scheme: SchemeKind::DirectTamed,
                n_ref: 1 << 14,
                n_list: vec![64, 128, 256, 512, 1024, 2048],
                paths: 128,
                p_exponent: 2,
                seed: 42,
            };
            run_convergence(&problem, &config, Some(&out), svg.as_deref(), workers)
        }
    }
}

fn run_convergence(
    problem: &SdaeProblem,
    config: &ConvergenceConfig,
    out: Option<&std::path::Path>,
    svg: Option<&std::path::Path>,
    workers: Option<usize>,
) -> Result<ExitCode, Box<dyn Error>> {
    eprintln!(
        "measuring {} with {}: reference N = {}, coarse N = {:?}, {} paths, p = {}, seed {}",
        problem.name(),
        config.scheme,
        config.n_ref,
        config.n_list,
        config.paths,
        config.p_exponent,
        config.seed
    );
    let report = match workers {
        Some(w) => {
            eprintln!("using {w} worker threads");
            rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()?
                .install(|| strong_error(problem, config))?
        }
        None => strong_error(problem, config)?,
    };
    for row in &report.rows {
        if row.diverged_paths > 0 {
            eprintln!(
                "warning: N = {}: {} of {} paths diverged and were excluded",
                row.n, row.diverged_paths, config.paths
            );
        }
    }
    match out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            report.write_csv(&mut w)?;
            w.flush()?;
            eprintln!("wrote convergence table to {}", path.display());
            println!("{}", summarize_fit(&report));
        }
        None => {
            let stdout = io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            report.write_csv(&mut w)?;
            w.flush()?;
            eprintln!("{}", summarize_fit(&report));
        }
    }
    if let Some(path) = svg {
        let mut w = BufWriter::new(File::create(path)?);
        report.write_svg(&mut w)?;
        w.flush()?;
        eprintln!("wrote plot to {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn summarize_fit(report: &ConvergenceReport) -> String {
    match &report.fit {
        Some(fit) => format!(
            "slope = {:.4} over {} resolutions (intercept {:.4}, fit residual {:.4})",
            fit.slope, fit.points_used, fit.intercept, fit.residual
        ),
        None => "no slope: fewer than two resolutions gave a usable error".to_string(),
    }
}

fn summarize_trajectory(trajectory: &Trajectory) -> String {
    let max_finite = |values: &[f64]| {
        values
            .iter()
            .copied()
            .filter(|v| v.is_finite())
            .fold(0.0_f64, f64::max)
    };
    let state = trajectory.final_state();
    let coords: Vec<String> = (0..trajectory.dim)
        .map(|i| format!("{:.6}", state.get(i)))
        .collect();
    format!(
        "final state [{}] after {} steps; max solve residual {:.3e}; max constraint residual {:.3e}",
        coords.join(", "),
        trajectory.steps,
        max_finite(&trajectory.solve_residuals),
        max_finite(&trajectory.constraint_residuals)
    )
}
