use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use sta_cli::{atom, compare_columns, lz, parse_config, trap, ConfigFile, Settings, Table};

#[derive(Parser)]
#[command(name = "sta", version, about = "Shortcut-to-adiabaticity reproduction runs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Landau-Zener population inversion under the two-level protocols.
    LzInversion(SweepArgs),
    /// The same protocols written in the laboratory frame of an atom.
    AtomLabFrame(AtomArgs),
    /// Harmonic trap expansion on a grid.
    TrapExpansion(TrapArgs),
    /// Compare columns of two CSV tables on the same time grid.
    Compare(CompareArgs),
}

#[derive(Args)]
struct Common {
    /// `key = value` file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<String>,
    /// Comma-separated protocol names.
    #[arg(long)]
    protocols: Option<String>,
    #[arg(long)]
    grid_points: Option<String>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Sweep rate; defaults to −20/T.
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    x0: Option<String>,
    /// Duration.
    #[arg(long = "T")]
    t: Option<String>,
    #[arg(long)]
    tolerance: Option<String>,
    #[arg(long)]
    report_points: Option<String>,
}

impl SweepArgs {
    fn flags(&self) -> Vec<(&'static str, Option<String>)> {
        vec![
            ("out", self.common.out.clone()),
            ("protocols", self.common.protocols.clone()),
            ("grid-points", self.common.grid_points.clone()),
            ("alpha", self.alpha.clone()),
            ("x0", self.x0.clone()),
            ("T", self.t.clone()),
            ("tolerance", self.tolerance.clone()),
            ("report-points", self.report_points.clone()),
        ]
    }
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct AtomArgs {
    #[command(flatten)]
    sweep: SweepArgs,
    /// Atomic transition frequency.
    #[arg(long)]
    omega0: Option<String>,
    /// `resonant` or `chirped` carrier for the cd0-only field.
    #[arg(long)]
    carrier: Option<String>,
}

#[derive(Args)]
struct TrapArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    omega_start: Option<String>,
    #[arg(long)]
    omega_end: Option<String>,
    #[arg(long)]
    tf: Option<String>,
    #[arg(long)]
    hbar: Option<String>,
    #[arg(long)]
    mass: Option<String>,
    #[arg(long)]
    steps: Option<String>,
    #[arg(long)]
    snapshot_every: Option<String>,
    #[arg(long)]
    levels: Option<String>,
    #[arg(long)]
    max_levels: Option<String>,
    /// `chirp` or `spline`.
    #[arg(long)]
    dilation: Option<String>,
}

#[derive(Args)]
struct CompareArgs {
    a: PathBuf,
    b: PathBuf,
    /// Columns to compare; all shared columns after the first by default.
    #[arg(long = "column")]
    columns: Vec<String>,
    #[arg(long, default_value_t = 1e-6)]
    tolerance: f64,
}

fn load_config(path: Option<&Path>) -> anyhow::Result<Option<ConfigFile>> {
    path.map(|p| {
        let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        parse_config(&text).with_context(|| format!("in {}", p.display()))
    })
    .transpose()
}

fn resolve(
    scenario: &str,
    defaults: &[(&str, &str)],
    config: Option<&Path>,
    flags: &[(&'static str, Option<String>)],
) -> anyhow::Result<Settings> {
    let config = load_config(config)?;
    Ok(Settings::resolve(scenario, defaults, config.as_ref(), flags)?)
}

fn print_two_level(runs: &[sta_cli::TwoLevelRun], out: &Path) {
    println!("{:<10} {:>14} {:>14} {:>14} {:>10}", "protocol", "P1(t_f)", "eigen P1", "fidelity", "steps");
    for r in runs {
        let s = &r.summary;
        print!("{:<10} {:>14.10} {:>14.10} {:>14.10} {:>10}", s.protocol, s.final_p1, s.final_eigen_p1, s.fidelity, s.accepted_steps);
        if let Some(d) = s.rotating_frame_max_population_difference {
            print!("  |dP| vs rotating frame {d:.2e}");
        }
        println!();
    }
    println!("outputs written to {}", out.display());
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::LzInversion(args) => {
            let settings = resolve(lz::SCENARIO, lz::DEFAULTS, args.common.config.as_deref(), &args.flags())?;
            let report = lz::execute(settings)?;
            print_two_level(&report.runs, &report.params.out);
        }
        Command::AtomLabFrame(args) => {
            let mut flags = args.sweep.flags();
            flags.push(("omega0", args.omega0.clone()));
            flags.push(("carrier", args.carrier.clone()));
            let settings = resolve(atom::SCENARIO, atom::DEFAULTS, args.sweep.common.config.as_deref(), &flags)?;
            let report = atom::execute(settings)?;
            print_two_level(&report.runs, &report.params.sweep.out);
        }
        Command::TrapExpansion(args) => {
            let flags = vec![
                ("out", args.common.out.clone()),
                ("protocols", args.common.protocols.clone()),
                ("grid-points", args.common.grid_points.clone()),
                ("omega-start", args.omega_start.clone()),
                ("omega-end", args.omega_end.clone()),
                ("tf", args.tf.clone()),
                ("hbar", args.hbar.clone()),
                ("mass", args.mass.clone()),
                ("steps", args.steps.clone()),
                ("snapshot-every", args.snapshot_every.clone()),
                ("levels", args.levels.clone()),
                ("max-levels", args.max_levels.clone()),
                ("dilation", args.dilation.clone()),
            ];
            let settings = resolve(trap::SCENARIO, trap::DEFAULTS, args.common.config.as_deref(), &flags)?;
            let report = trap::execute(settings)?;
            println!("{:<10} {:>14} {:>8} {:>14} {:>12}", "protocol", "P0(t_f)", "levels", "max width err", "norm drift");
            for r in &report.runs {
                let s = &r.summary;
                println!(
                    "{:<10} {:>14.10} {:>8} {:>14.3e} {:>12.3e}",
                    s.protocol, s.final_p0, s.levels, s.max_width_error, s.max_norm_drift
                );
                if let Some(p0) = s.oracle_p0 {
                    println!("{:<10} {:>14.10}", "  oracle", p0);
                }
            }
            if let Some(c) = &report.comparison {
                println!("cd vs modified: density L1 {:.3e}, U_q-mapped L2 {:.3e}", c.max_density_l1, c.max_mapped_l2);
            }
            println!("outputs written to {}", report.params.out.display());
        }
        Command::Compare(args) => {
            let a = Table::read(&args.a)?;
            let b = Table::read(&args.b)?;
            let columns = if args.columns.is_empty() {
                a.columns.iter().skip(1).filter(|c| b.columns.contains(c)).cloned().collect()
            } else {
                args.columns
            };
            anyhow::ensure!(!columns.is_empty(), "the tables share no data columns");
            let mut pass = true;
            for c in &columns {
                let cmp = compare_columns(&a, &b, c, args.tolerance)?;
                println!(
                    "{} {:<16} max_abs {:.6e}  L1 {:.6e}  tolerance {:.1e}",
                    if cmp.pass { "PASS" } else { "FAIL" },
                    c,
                    cmp.max_abs,
                    cmp.l1,
                    cmp.tolerance
                );
                pass &= cmp.pass;
            }
            return Ok(if pass { ExitCode::SUCCESS } else { ExitCode::from(1) });
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
