use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use superint_core::chain::FamilyTag;
use superint_core::integrator::integrate;
use superint_core::report::{report_json, trajectory_csv};
use superint_core::{emit_outputs, parse_config, run_suite, PhasePoint, RunConfig, SuiteName};

/// Numerical certificates for chained superintegrable Hamiltonians.
///
/// Worker threads follow RAYON_NUM_THREADS.
#[derive(Parser)]
#[command(name = "superint", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the suites of a config and write a JSON report; exits 0 iff all pass
    Verify {
        config: PathBuf,
        /// Overrides the config seed
        #[arg(long)]
        seed: Option<u64>,
        /// Replaces the config's suite list (repeatable)
        #[arg(long = "suite")]
        suites: Vec<String>,
        /// Report path; the report goes to stdout when neither this nor the config sets one
        #[arg(long)]
        out: Option<PathBuf>,
        /// Directory for conservation trajectories as CSV
        #[arg(long)]
        traj_dir: Option<PathBuf>,
        /// Multiplies every tolerance
        #[arg(long, default_value_t = 1.0)]
        tol_scale: f64,
    },
    /// List built-in families with their parameter arities
    Families,
    /// Integrate one trajectory and print it as CSV
    Trajectory {
        config: PathBuf,
        /// Initial state q1..qn p1..pn
        #[arg(long, num_args = 1.., value_delimiter = ',', allow_negative_numbers = true, required = true)]
        x0: Vec<f64>,
        #[arg(long)]
        tmax: f64,
        /// Writes the CSV here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_config(&text).with_context(|| format!("in {}", path.display()))
}

fn verify(
    path: &Path,
    seed: Option<u64>,
    suites: &[String],
    out: Option<PathBuf>,
    traj_dir: Option<PathBuf>,
    tol_scale: f64,
) -> Result<bool> {
    let mut cfg = load(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if !suites.is_empty() {
        cfg.suites.clear();
        for s in suites {
            let name: SuiteName = s.parse()?;
            if !cfg.suites.contains(&name) {
                cfg.suites.push(name);
            }
        }
    }
    if !(tol_scale > 0.0 && tol_scale.is_finite()) {
        bail!("--tol-scale must be positive, got {tol_scale}");
    }
    cfg.tolerances = cfg.tolerances.scaled(tol_scale);
    if out.is_some() {
        cfg.output.report = out;
    }
    if traj_dir.is_some() {
        cfg.output.trajectory_dir = traj_dir;
    }

    let outcome = run_suite(&cfg)?;
    let report = &outcome.report;
    for (name, s) in &report.suites {
        let worst = s
            .residuals
            .iter()
            .filter(|r| !r.pass)
            .map(|r| format!("{} = {:e}", r.check, r.value))
            .collect::<Vec<_>>();
        eprintln!(
            "{:<20} {}  ({:.2}s){}",
            name,
            if s.pass { "PASS" } else { "FAIL" },
            s.wall_time,
            if worst.is_empty() { String::new() } else { format!("  failing: {}", worst.join("; ")) }
        );
    }
    let written = emit_outputs(report, &outcome.trajectories, &cfg.output)?;
    if cfg.output.report.is_none() {
        std::io::stdout().write_all(report_json(report)?.as_bytes())?;
    }
    for p in written {
        eprintln!("wrote {}", p.display());
    }
    Ok(report.all_pass())
}

fn families() {
    println!("{:<18} {:>3} {:>6} {:>3}", "family", "n", "beta", "k");
    for f in FamilyTag::BUILT_IN {
        let (n, nb, nk) = f.arities().expect("built-in families have arities");
        println!("{:<18} {n:>3} {nb:>6} {nk:>3}", f.name());
    }
    println!("{:<18} {:>3} {:>6} {:>3}", "custom", "-", "-", "-");
}

fn trajectory(path: &Path, x0: &[f64], tmax: f64, out: Option<PathBuf>) -> Result<()> {
    let cfg = load(path)?;
    let system = cfg.build_system()?;
    let n = system.dim();
    if x0.len() != 2 * n {
        bail!("--x0 needs {} values (q1..q{n} p1..p{n}), got {}", 2 * n, x0.len());
    }
    let start = PhasePoint::from_flat(x0)?;
    let tr = cfg.trajectory;
    let traj = integrate(&system, &start, tmax, tr.rel_tol, tr.abs_tol)?;
    let csv = trajectory_csv(&system, &traj)?;
    match out {
        Some(p) => fs::write(&p, csv).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().write_all(csv.as_bytes())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Verify {
            config,
            seed,
            suites,
            out,
            traj_dir,
            tol_scale,
        } => verify(&config, seed, &suites, out, traj_dir, tol_scale),
        Command::Families => {
            families();
            Ok(true)
        }
        Command::Trajectory { config, x0, tmax, out } => trajectory(&config, &x0, tmax, out).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
