use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use gaussdens_core::density::{self, DensityOptions};
use gaussdens_core::flow::{self, EvolveOptions, FlowParams, StopRule, Trajectory};
use gaussdens_core::geometry::{shapes, DiscreteCurve, Vec2};
use gaussdens_core::io::{self as gio, CurveFile};
use gaussdens_core::singularity;
use gaussdens_core::verify::{self, VerifyConfig};

/// Exit code for unreadable inputs and invalid configurations.
const EXIT_INPUT: u8 = 2;
/// Exit code when a run finished on a flagged condition.
const EXIT_FLAGGED: u8 = 3;

#[derive(Parser)]
#[command(name = "gaussdens", version, about = "Gaussian densities along curve shortening flow")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve a curve and write its trajectory.
    Flow {
        #[command(flatten)]
        curve: CurveArgs,
        #[command(flatten)]
        flow: FlowArgs,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// σ(τ) profile and ν for a curve.
    Density {
        #[command(flatten)]
        curve: CurveArgs,
        #[command(flatten)]
        density: DensityArgs,
        /// Evaluate σ at this scale only.
        #[arg(long)]
        tau: Option<f64>,
        /// Number of log-spaced scales in the profile.
        #[arg(long, default_value_t = 48)]
        taus: usize,
        /// Accepted for interface uniformity; the computation is deterministic.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Flow to the singular time and classify the singularity.
    Analyze {
        #[command(flatten)]
        curve: CurveArgs,
        #[command(flatten)]
        flow: FlowArgs,
        #[command(flatten)]
        density: DensityArgs,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run the property battery; exits 0 only if every property passes.
    Verify {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Multiplies every tolerance.
        #[arg(long, default_value_t = 1.0)]
        tol_scale: f64,
        /// Vertex count of the test curves.
        #[arg(long, default_value_t = 128)]
        n: usize,
        /// Random draws for the Harnack check.
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Shape {
    Circle,
    Ellipse,
    RoundedSquare,
}

#[derive(Args)]
struct CurveArgs {
    #[arg(long, value_enum, default_value = "circle", conflicts_with = "input")]
    shape: Shape,
    /// Curve JSON file: {"n": 1, "vertices": [[x, y], ...]}.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    /// Ellipse semi-axes.
    #[arg(long, default_value_t = 2.0)]
    a: f64,
    #[arg(long, default_value_t = 1.0)]
    b: f64,
    /// Rounded square side and corner radius.
    #[arg(long, default_value_t = 2.0)]
    side: f64,
    #[arg(long, default_value_t = 0.4)]
    corner: f64,
    /// Vertex count for built-in shapes.
    #[arg(long, default_value_t = 256)]
    n: usize,
}

#[derive(Args)]
struct FlowArgs {
    #[arg(long, default_value_t = 0.25)]
    cfl: f64,
    /// Stop once sup|k| times the initial diameter exceeds this.
    #[arg(long, default_value_t = 100.0)]
    k_stop: f64,
    /// Stop once the length falls below this fraction of the initial length.
    #[arg(long, default_value_t = 1e-3)]
    length_stop: f64,
    #[arg(long, default_value_t = 5_000_000)]
    max_steps: usize,
}

#[derive(Args)]
struct DensityArgs {
    /// Polishing restarts of the center search.
    #[arg(long, default_value_t = 3)]
    restarts: usize,
    /// Side of the start grid over the bounding box.
    #[arg(long, default_value_t = 5)]
    grid: usize,
}

/// Failure to read the inputs or a bad parameter; reported with exit code 2.
#[derive(Debug)]
struct InputError(String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

fn input_error(msg: impl Into<String>) -> anyhow::Error {
    InputError(msg.into()).into()
}

impl CurveArgs {
    fn load(&self) -> anyhow::Result<DiscreteCurve> {
        if let Some(path) = &self.input {
            if !path.exists() {
                return Err(input_error(format!("input file not found: {}", path.display())));
            }
            return gio::read_curve(path)
                .map_err(|e| input_error(format!("cannot read {}: {e}", path.display())));
        }
        if self.n < 3 {
            return Err(input_error("--n must be at least 3"));
        }
        let curve = match self.shape {
            Shape::Circle => shapes::circle(Vec2::zeros(), self.radius, self.n),
            Shape::Ellipse => shapes::ellipse(self.a, self.b, self.n),
            Shape::RoundedSquare => shapes::rounded_square(self.side, self.corner, self.n),
        };
        curve.map_err(|e| input_error(e.to_string()))
    }
}

impl FlowArgs {
    fn options(&self) -> anyhow::Result<EvolveOptions> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(input_error("--cfl must lie in (0, 1]"));
        }
        if !(self.k_stop > 0.0) || !(self.length_stop > 0.0 && self.length_stop < 1.0) {
            return Err(input_error("stop thresholds must be positive, length below 1"));
        }
        Ok(EvolveOptions {
            flow: FlowParams {
                cfl: self.cfl,
                redistribute: true,
            },
            stop: StopRule {
                k_stop: self.k_stop,
                length_ratio: self.length_stop,
                max_steps: self.max_steps,
            },
            ..EvolveOptions::default()
        })
    }
}

impl DensityArgs {
    fn options(&self) -> anyhow::Result<DensityOptions> {
        if self.grid == 0 {
            return Err(input_error("--grid must be positive"));
        }
        Ok(DensityOptions {
            grid: self.grid,
            max_restarts: self.restarts,
            ..DensityOptions::default()
        })
    }
}

fn create_out(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_trajectory_files(dir: &Path, traj: &Trajectory) -> anyhow::Result<()> {
    gio::write_trajectory(BufWriter::new(File::create(dir.join("trajectory.jsonl"))?), traj)?;
    gio::write_diagnostics(BufWriter::new(File::create(dir.join("diagnostics.csv"))?), &traj.steps)?;
    let summary = json!({
        "estimated_t": traj.estimated_t.value,
        "uncertainty": traj.estimated_t.uncertainty,
        "type_one_constant": traj.estimated_t.type_one_constant,
        "stop": format!("{:?}", traj.stop),
        "truncated": traj.truncated(),
        "frames": traj.frames.len(),
        "steps": traj.steps.len(),
        "initial_length": traj.frames[0].curve.length(),
        "final_length": traj.last().curve.length(),
    });
    gio::write_json(&dir.join("summary.json"), &summary)?;
    Ok(())
}

fn cmd_flow(curve: &CurveArgs, flow_args: &FlowArgs, out: &Path) -> anyhow::Result<u8> {
    let c = curve.load()?;
    let opts = flow_args.options()?;
    let traj = flow::evolve(&c, &opts)?;
    create_out(out)?;
    write_trajectory_files(out, &traj)?;
    println!(
        "estimated T = {:.8} ± {:.2e} ({} frames, {} steps, stop: {:?})",
        traj.estimated_t.value,
        traj.estimated_t.uncertainty,
        traj.frames.len(),
        traj.steps.len(),
        traj.stop
    );
    Ok(if traj.truncated() { EXIT_FLAGGED } else { 0 })
}

fn cmd_density(
    curve: &CurveArgs,
    dargs: &DensityArgs,
    tau: Option<f64>,
    taus: usize,
    out: &Path,
) -> anyhow::Result<u8> {
    let c = curve.load()?;
    let opts = dargs.options()?;
    create_out(out)?;
    if let Some(tau) = tau {
        if !(tau > 0.0) {
            return Err(input_error("--tau must be positive"));
        }
        let r = density::sigma(&c, tau, &opts)?;
        gio::write_json(&out.join("sigma.json"), &r)?;
        println!("sigma = {:.10} at p = ({:.6}, {:.6})", r.value, r.p_star[0], r.p_star[1]);
        return Ok(0);
    }
    if taus < 2 {
        return Err(input_error("--taus must be at least 2"));
    }
    // from the resolution limit to where length/√(4πτ) drops to 1e-2
    let lo = density::nu_lower_scale(&c);
    let hi = (c.length() / 1e-2).powi(2) / (4.0 * std::f64::consts::PI);
    let grid: Vec<f64> = (0..taus)
        .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (taus - 1) as f64).exp())
        .collect();
    let profile = density::sigma_profile(&c, &grid, &opts)?;
    gio::write_profile(BufWriter::new(File::create(out.join("profile.csv"))?), &profile)?;
    let nu = density::nu(&c, &opts)?;
    gio::write_json(&out.join("nu.json"), &nu)?;
    println!(
        "nu = {:.10} at tau = {:.8}, p = ({:.6}, {:.6})",
        nu.value,
        nu.tau_star.unwrap_or(f64::NAN),
        nu.p_star[0],
        nu.p_star[1]
    );
    Ok(0)
}

fn cmd_analyze(curve: &CurveArgs, fargs: &FlowArgs, dargs: &DensityArgs, out: &Path) -> anyhow::Result<u8> {
    let c = curve.load()?;
    let traj = flow::evolve(&c, &fargs.options()?)?;
    let opts = dargs.options()?;
    let report = singularity::classify(&traj, &opts)?;
    create_out(out)?;
    write_trajectory_files(out, &traj)?;
    gio::write_json(&out.join("report.json"), &report)?;
    let dir = out.join("rescaled");
    create_out(&dir)?;
    for (i, f) in report.rescaled.iter().enumerate() {
        gio::write_json(&dir.join(format!("frame_{i:03}.json")), &CurveFile::from(f))?;
    }
    println!(
        "{:?}: typeI constant {:.4}, limit {:?} (Hausdorff {:.2e}), Sigma {:.6}, limit density {:.6}",
        report.kind,
        report.type_one_constant,
        report.limit_match,
        report.hausdorff,
        report.sigma,
        report.limit_density
    );
    let flagged = traj.truncated() || report.center_jump_flagged;
    Ok(if flagged { EXIT_FLAGGED } else { 0 })
}

fn cmd_verify(cfg: VerifyConfig, out: Option<&Path>) -> anyhow::Result<u8> {
    if !(cfg.tol_scale > 0.0) {
        return Err(input_error("--tol-scale must be positive"));
    }
    if cfg.resolution < 16 {
        return Err(input_error("--n must be at least 16"));
    }
    let rows = verify::run(&cfg)?;
    print!("{}", verify::format_table(&rows));
    if let Some(dir) = out {
        create_out(dir)?;
        gio::write_json(&dir.join("verify.json"), &rows)?;
    }
    let all = rows.iter().all(|r| r.passed);
    Ok(if all { 0 } else { 1 })
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("GAUSSDENS_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| input_error(format!("GAUSSDENS_THREADS must be a positive integer, got {v:?}")))?;
        if n == 0 {
            return Err(input_error("GAUSSDENS_THREADS must be positive"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    configure_threads()?;
    match &cli.command {
        Command::Flow { curve, flow, out } => cmd_flow(curve, flow, out),
        Command::Density {
            curve,
            density,
            tau,
            taus,
            seed: _,
            out,
        } => cmd_density(curve, density, *tau, *taus, out),
        Command::Analyze {
            curve,
            flow,
            density,
            out,
        } => cmd_analyze(curve, flow, density, out),
        Command::Verify {
            seed,
            tol_scale,
            n,
            samples,
            out,
        } => cmd_verify(
            VerifyConfig {
                seed: *seed,
                tol_scale: *tol_scale,
                samples: *samples,
                resolution: *n,
            },
            out.as_deref(),
        ),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<InputError>().is_some() {
                ExitCode::from(EXIT_INPUT)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
