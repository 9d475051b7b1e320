//! Command-line driver: parameter sweeps to CSV grids, resonance
//! finding, reflection-scaling fits, saturation metrics, and the
//! closed-form-vs-brute-force verification suite.
//!
//! Exit codes: 0 success, 2 invalid configuration, 3 oracle mismatch,
//! 4 I/O error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};

use svc_scatter::analysis::{find_resonances, fit_scaling, saturation_metric};
use svc_scatter::engine::transmission;
use svc_scatter::error::Error;
use svc_scatter::geometry::{build_layout, PotentialSpec};
use svc_scatter::oracle::{brute_force_transmission, chain_from_layout};
use svc_scatter::sweep::{
    apply_override, parse_config_builder, run_sweep, write_grid, ConfigBuilder, ORACLE_TOLERANCE,
};

#[derive(Parser)]
#[command(
    name = "svc-scatter",
    about = "Scattering from generalized Smith-Volterra-Cantor potentials",
    long_about = "Computes transmission/reflection of SVC(rho, n) fractal potentials at \
arbitrary stage G via a super-periodic closed form, with a brute-force transfer-matrix \
oracle for verification.\n\nConfig files are flat `key = value` text. Keys: rho, n, G, V, L \
(the potential), optional poly (comma-separated exponent polynomial coefficients), k (fixed \
wave number when k is not an axis), axis1/axis2 (`k|rho|n MIN MAX COUNT` or `G 0,1,2,...`), \
quantity (T, R or R_scaled), oracle_check (true/false), seed (integer)."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Path to a flat key-value config file
    #[arg(long)]
    config: PathBuf,
    /// Override a config key, e.g. --set G=5 (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a 1- or 2-axis parameter sweep and write a CSV grid
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output CSV path
        #[arg(long, short)]
        output: PathBuf,
        /// Omit the timestamp line so identical runs are byte-identical
        #[arg(long)]
        reproducible: bool,
    },
    /// Locate perfect-transmission resonances in a k range
    Resonances {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value_t = 2.0)]
        k_min: f64,
        #[arg(long, default_value_t = 5.0)]
        k_max: f64,
        /// Transmission level defining a resonance
        #[arg(long, default_value_t = 0.999)]
        threshold: f64,
        /// Number of scan-grid points
        #[arg(long, default_value_t = 20000)]
        grid: usize,
    },
    /// Fit the log-log envelope slope of the renormalized reflection
    Scaling {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        k_min: f64,
        #[arg(long)]
        k_max: f64,
        #[arg(long, default_value_t = 4000)]
        points: usize,
    },
    /// Sup-norm distance between transmissions at two powers n
    Saturation {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        n_a: f64,
        #[arg(long)]
        n_b: f64,
        #[arg(long, default_value_t = 2.0)]
        k_min: f64,
        #[arg(long, default_value_t = 10.0)]
        k_max: f64,
        #[arg(long, default_value_t = 2000)]
        points: usize,
    },
    /// Compare the closed form against the brute-force oracle on random specs
    Verify {
        /// Number of random potential specs
        #[arg(long, default_value_t = 50)]
        specs: usize,
        /// k-points per spec
        #[arg(long, default_value_t = 200)]
        k_points: usize,
        /// Largest stage to draw
        #[arg(long, default_value_t = 6)]
        max_stage: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn load_builder(args: &ConfigArgs) -> Result<ConfigBuilder, Error> {
    let text = std::fs::read_to_string(&args.config).map_err(|source| Error::Io {
        path: args.config.display().to_string(),
        source,
    })?;
    let mut builder = parse_config_builder(&text)?;
    for assignment in &args.overrides {
        apply_override(&mut builder, assignment)?;
    }
    Ok(builder)
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Sweep {
            config,
            output,
            reproducible,
        } => {
            let run_config = load_builder(&config)?.finish()?;
            let grid = run_sweep(&run_config)?;
            write_grid(&grid, &output, reproducible)?;
            println!(
                "wrote {} ({} x {} {} grid)",
                output.display(),
                grid.rows(),
                grid.cols(),
                run_config.quantity.label()
            );
        }
        Command::Resonances {
            config,
            k_min,
            k_max,
            threshold,
            grid,
        } => {
            let spec = load_builder(&config)?.finish_spec()?;
            let list = find_resonances(&spec, k_min, k_max, threshold, grid)?;
            if list.trivially_transparent {
                println!("T >= {threshold} over the whole range [{k_min}, {k_max}]");
                return Ok(());
            }
            println!(
                "{} resonance(s) with T >= {threshold} in [{k_min}, {k_max}]:",
                list.resonances.len()
            );
            for r in &list.resonances {
                println!("  k = {:.12}  width = {:.6e}", r.k_center, r.width);
            }
        }
        Command::Scaling {
            config,
            k_min,
            k_max,
            points,
        } => {
            let spec = load_builder(&config)?.finish_spec()?;
            let fit = fit_scaling(&spec, k_min, k_max, points)?;
            println!(
                "envelope slope = {:.4}  (r^2 = {:.4}, k in [{:.4}, {:.4}])",
                fit.slope, fit.r_squared, fit.k_range.0, fit.k_range.1
            );
        }
        Command::Saturation {
            config,
            n_a,
            n_b,
            k_min,
            k_max,
            points,
        } => {
            let spec = load_builder(&config)?.finish_spec()?;
            let grid: Vec<f64> = (0..points)
                .map(|i| k_min + (k_max - k_min) * i as f64 / (points - 1).max(1) as f64)
                .collect();
            let metric = saturation_metric(&spec, n_a, n_b, &grid)?;
            println!("sup |T(n={n_a}) - T(n={n_b})| = {metric:.6e}");
        }
        Command::Verify {
            specs,
            k_points,
            max_stage,
            seed,
        } => {
            verify(specs, k_points, max_stage, seed)?;
        }
    }
    Ok(())
}

/// Draws random specs, sweeps k across both tunneling and propagating
/// regimes, and demands closed form and oracle agree pointwise.
fn verify(specs: usize, k_points: usize, max_stage: u32, seed: u64) -> Result<(), Error> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut checked = 0usize;
    let mut worst = 0.0f64;
    for i in 0..specs {
        let spec = PotentialSpec::new(
            rng.gen_range(1.2..5.0),
            rng.gen_range(-0.75..2.0),
            rng.gen_range(0..=max_stage),
            rng.gen_range(1.0..50.0),
            rng.gen_range(1.0..20.0),
        )?;
        let layout = build_layout(&spec)?;
        let chain = chain_from_layout(&layout)?;
        let k_lo = 0.05 * spec.height.sqrt();
        let k_hi = 3.0 * spec.height.sqrt();
        for j in 0..k_points {
            let k = k_lo + (k_hi - k_lo) * j as f64 / (k_points - 1).max(1) as f64;
            let e = k * k;
            let closed = transmission(&spec, e)?.t;
            let brute = brute_force_transmission(&chain, spec.height, e)?.t;
            let delta = (closed - brute).abs();
            worst = worst.max(delta);
            if delta >= ORACLE_TOLERANCE {
                return Err(Error::OracleMismatch {
                    k,
                    delta,
                    rho: spec.rho,
                    n: spec.n,
                    stage: spec.stage,
                    v: spec.height,
                    l: spec.span,
                });
            }
            checked += 1;
        }
        println!(
            "spec {:>3}/{specs}: rho={:.3} n={:+.3} G={} V={:.2} L={:.2}  ok",
            i + 1,
            spec.rho,
            spec.n,
            spec.stage,
            spec.height,
            spec.span
        );
    }
    println!("verified {checked} points; worst |T_closed - T_brute| = {worst:.3e}");
    Ok(())
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::OracleMismatch { .. } => 3,
        Error::Io { .. } | Error::GridParse { .. } => 4,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
