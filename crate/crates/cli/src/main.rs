//! Command-line front end: simulate, filter, estimate, query the homogenization
//! oracle and run parameter sweeps.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use homodyn::estimators::{
    filtered_drift, hat_sigma_filtered, mle_drift, qv_sigma, subsampled_diffusion,
    subsampled_drift, tilde_sigma_from_parts, DiffusionEstimate, DriftEstimate,
};
use homodyn::filtering::{filter_exponential, filter_moving_average};
use homodyn::harness::{trajfile, write_results, Method, ModelFamily, SweepConfig};
use homodyn::homogenization::homogenize;
use homodyn::nalgebra::DMatrix;
use homodyn::sde::{simulate_effective, simulate_multiscale, RandomStream, Trajectory};
use homodyn::{Error, Result};

#[derive(Parser)]
#[command(name = "homodyn", version, about = "Drift and diffusion estimation for multiscale Langevin dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a preset model and save the path.
    Simulate(SimulateArgs),
    /// Smooth a saved path with a moving-average or exponential kernel.
    Filter(FilterArgs),
    /// Estimate the effective coefficients from a saved path.
    Estimate(EstimateArgs),
    /// Print the homogenized coefficients of a preset.
    Oracle(OracleArgs),
    /// Run a grid of simulations and estimators and write a CSV.
    Sweep(SweepArgs),
}

#[derive(clap::Args)]
struct SimulateArgs {
    #[arg(long)]
    preset: ModelFamily,
    #[arg(long)]
    sigma: f64,
    #[arg(long)]
    epsilon: f64,
    /// Time horizon; defaults to the preset's.
    #[arg(short = 'T', long = "horizon")]
    horizon: Option<f64>,
    /// Step size; defaults to epsilon^3.
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    stream: u64,
    /// Multiply the horizon by this factor.
    #[arg(long = "scale-T")]
    scale_t: Option<f64>,
    /// Initial point, comma separated; defaults to the origin.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x0: Option<Vec<f64>>,
    /// Simulate the homogenized equation instead of the multiscale one.
    #[arg(long)]
    effective: bool,
    #[arg(long)]
    out: PathBuf,
    /// Also write the path as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kernel {
    Ma,
    Exp,
}

#[derive(clap::Args)]
struct FilterArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    kind: Kernel,
    #[arg(long)]
    delta: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(clap::Args)]
struct EstimateArgs {
    #[arg(long)]
    input: PathBuf,
    /// Preset whose slow potential basis is fitted.
    #[arg(long)]
    preset: ModelFamily,
    /// Comma-separated estimator names.
    #[arg(long, value_delimiter = ',', default_value = "mle,qv,drift_ma,hat_ma,tilde_ma")]
    methods: Vec<Method>,
    /// Filter or subsampling width.
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Print homogenized reference values for this sigma.
    #[arg(long)]
    sigma: Option<f64>,
}

#[derive(clap::Args)]
struct OracleArgs {
    #[arg(long)]
    preset: ModelFamily,
    #[arg(long)]
    sigma: f64,
}

#[derive(clap::Args)]
struct SweepArgs {
    /// TOML configuration file.
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Run a preset's default grid instead of a config file.
    #[arg(long)]
    preset: Option<ModelFamily>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, env = "HOMODYN_THREADS", default_value_t = 0)]
    threads: usize,
    /// Output CSV; defaults to the config's `output`, then stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long = "scale-T")]
    scale_t: Option<f64>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Filter(a) => filter(a),
        Command::Estimate(a) => estimate(a),
        Command::Oracle(a) => oracle(a),
        Command::Sweep(a) => sweep(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let model = a.preset.multiscale(a.sigma, a.epsilon)?;
    let mut horizon = a.horizon.unwrap_or(a.preset.default_config().horizon);
    if let Some(f) = a.scale_t {
        if !(f > 0.0 && f.is_finite()) {
            return Err(Error::Config {
                field: "scale-T".into(),
                reason: "must be positive and finite".into(),
            });
        }
        horizon *= f;
    }
    let dt = a.dt.unwrap_or(a.epsilon.powi(3));
    let x0 = a.x0.unwrap_or_else(|| vec![0.0; model.dim()]);
    let stream = RandomStream::new(a.seed, a.stream);
    let traj = if a.effective {
        let (_, effective) = homogenize(&model)?;
        simulate_effective(&effective, horizon, dt, stream, &x0)?
    } else {
        simulate_multiscale(&model, horizon, dt, stream, &x0)?
    };
    save(&traj, &a.out, a.csv.as_deref())?;
    println!("wrote {} steps (dt = {dt:e}) to {}", traj.n_steps(), a.out.display());
    Ok(())
}

fn filter(a: FilterArgs) -> Result<()> {
    let traj = load_input(&a.input)?;
    let z = apply_kernel(&traj, a.kind, a.delta, a.beta)?;
    save(&z, &a.out, a.csv.as_deref())?;
    println!("wrote {} to {}", z.filter().expect("filtered"), a.out.display());
    Ok(())
}

fn load_input(path: &Path) -> Result<Trajectory> {
    trajfile::load(path).map_err(|e| match e {
        Error::Io(io) => Error::Config {
            field: "input".into(),
            reason: format!("{}: {io}", path.display()),
        },
        other => other,
    })
}

fn apply_kernel(traj: &Trajectory, kind: Kernel, delta: f64, beta: f64) -> Result<Trajectory> {
    match kind {
        Kernel::Ma => filter_moving_average(traj, delta),
        Kernel::Exp => filter_exponential(traj, delta, beta),
    }
}

fn save(traj: &Trajectory, out: &Path, csv: Option<&Path>) -> Result<()> {
    trajfile::save(traj, out)?;
    if let Some(path) = csv {
        trajfile::export_csv(traj, BufWriter::new(File::create(path)?))?;
    }
    Ok(())
}

enum Estimate {
    Drift(DriftEstimate),
    Diffusion(DiffusionEstimate),
}

fn estimate(a: EstimateArgs) -> Result<()> {
    let traj = load_input(&a.input)?;
    let basis = a.preset.basis();
    if traj.dim() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            found: traj.dim(),
        });
    }
    let reference = match a.sigma {
        Some(sigma) => Some(homogenize(&a.preset.multiscale(sigma, 1.0)?)?.1),
        None => None,
    };
    let ma = || filter_moving_average(&traj, a.delta);
    let exp = || filter_exponential(&traj, a.delta, a.beta);
    let tilde = |drift: DriftEstimate| -> Result<Estimate> {
        let mle = mle_drift(&traj, &basis).map_err(|e| match e {
            Error::SingularSystem { .. } => Error::DegenerateAlpha,
            other => other,
        })?;
        Ok(Estimate::Diffusion(tilde_sigma_from_parts(&mle, &qv_sigma(&traj), &drift)?))
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "method\tcomponent\testimate{}", if reference.is_some() { "\treference" } else { "" })?;
    for method in &a.methods {
        let est = match method {
            Method::Mle => Estimate::Drift(mle_drift(&traj, &basis)?),
            Method::Qv => Estimate::Diffusion(qv_sigma(&traj)),
            Method::DriftSub => Estimate::Drift(subsampled_drift(&traj, &basis, a.delta)?),
            Method::DriftMa => Estimate::Drift(filtered_drift(&traj, &ma()?, &basis)?),
            Method::DriftExp => Estimate::Drift(filtered_drift(&traj, &exp()?, &basis)?),
            Method::HatSub => Estimate::Diffusion(subsampled_diffusion(&traj, a.delta)?),
            Method::HatMa => Estimate::Diffusion(hat_sigma_filtered(&traj, &ma()?, a.delta)?),
            Method::HatExp => Estimate::Diffusion(hat_sigma_filtered(&traj, &exp()?, a.delta)?),
            Method::TildeSub => tilde(subsampled_drift(&traj, &basis, a.delta)?)?,
            Method::TildeMa => tilde(filtered_drift(&traj, &ma()?, &basis)?)?,
            Method::TildeExp => tilde(filtered_drift(&traj, &exp()?, &basis)?)?,
        };
        let (values, refs) = match &est {
            Estimate::Drift(e) => (
                drift_components(&e.blocks()),
                reference.as_ref().map(|r| drift_components(r.a())),
            ),
            Estimate::Diffusion(e) => (
                matrix_components("Sigma", e.matrix()),
                reference.as_ref().map(|r| matrix_components("Sigma", r.sigma())),
            ),
        };
        for (i, (name, v)) in values.iter().enumerate() {
            write!(out, "{method}\t{name}\t{v:.6}")?;
            if let Some(r) = &refs {
                write!(out, "\t{:.6}", r[i].1)?;
            }
            writeln!(out)?;
        }
    }
    Ok(())
}

fn matrix_components(label: &str, m: &DMatrix<f64>) -> Vec<(String, f64)> {
    let d = m.nrows();
    if d == 1 {
        return vec![(label.to_string(), m[(0, 0)])];
    }
    let mut out = Vec::new();
    for r in 0..d {
        for c in r..d {
            out.push((format!("{label}[{},{}]", r + 1, c + 1), m[(r, c)]));
        }
    }
    out
}

fn drift_components(blocks: &[DMatrix<f64>]) -> Vec<(String, f64)> {
    let mut out = Vec::new();
    for (i, a) in blocks.iter().enumerate() {
        let d = a.nrows();
        if d == 1 {
            out.push((format!("A{}", i + 1), a[(0, 0)]));
            continue;
        }
        for r in 0..d {
            for c in 0..d {
                out.push((format!("A{}[{},{}]", i + 1, r + 1, c + 1), a[(r, c)]));
            }
        }
    }
    out
}

fn oracle(a: OracleArgs) -> Result<()> {
    let model = a.preset.multiscale(a.sigma, 1.0)?;
    let (result, effective) = homogenize(&model)?;
    println!("preset={} sigma={}", a.preset, a.sigma);
    for (name, v) in matrix_components("K", &result.k) {
        println!("{name}={v:.6}");
    }
    for (i, (cp, cm)) in result.c_plus.iter().zip(&result.c_minus).enumerate() {
        let suffix = if result.k.nrows() == 1 { String::new() } else { format!("[{}]", i + 1) };
        println!("C+{suffix}={cp:.6} C-{suffix}={cm:.6}");
    }
    for (name, v) in drift_components(effective.a()) {
        println!("{name}={v:.6}");
    }
    for (name, v) in matrix_components("Sigma", effective.sigma()) {
        println!("{name}={v:.6}");
    }
    println!("quad_error={:.1e}", result.quad_error_estimate);
    Ok(())
}

fn sweep(a: SweepArgs) -> Result<()> {
    let mut cfg = match (&a.config, a.preset) {
        (Some(path), _) => SweepConfig::from_file(path)?,
        (None, Some(preset)) => preset.default_config(),
        (None, None) => unreachable!("clap requires --config or --preset"),
    };
    if let Some(seed) = a.seed {
        cfg.base_seed = seed;
    }
    if let Some(f) = a.scale_t {
        cfg.scale_horizon(f)?;
    }
    cfg.validate()?;
    let rows = homodyn::harness::run_sweep(&cfg, a.threads)?;
    match a.out.or(cfg.output) {
        Some(path) => {
            write_results(&rows, BufWriter::new(File::create(&path)?))?;
            eprintln!("wrote {} rows to {}", rows.len(), path.display());
        }
        None => write_results(&rows, io::stdout().lock())?,
    }
    Ok(())
}
