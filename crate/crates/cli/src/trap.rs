//! Expansion of a harmonic trap: reference ramp, counterdiabatic run and the
//! local modified-frequency trap.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use sta_core::harmonic::{
    ermakov_oracle, final_excitation, grid_for_ramp, ground_density, make_ramp, omega_prime_sq, propagate_grid, u_q_map,
    DilationScheme, ErmakovSolution, Excitation, FrequencyRamp, GridOptions, GridRun, GridWavefunction, MapDirection,
    OscillatorUnits, TrapProtocol,
};

use crate::config::Settings;
use crate::plot::{render, Panel, Series};
use crate::table::Table;
use crate::{create_dir, parse_protocols, write_json, write_text, CliError, Protocol, Result};

pub const SCENARIO: &str = "trap-expansion";

pub const DEFAULTS: &[(&str, &str)] = &[
    ("protocols", "reference,cd,modified"),
    ("omega-start", "1"),
    ("omega-end", "0.1"),
    ("tf", "1"),
    ("hbar", "1"),
    ("mass", "1"),
    ("grid-points", "2048"),
    ("steps", "4000"),
    ("snapshot-every", "40"),
    ("levels", "32"),
    ("max-levels", "1024"),
    ("dilation", "chirp"),
    ("out", "out/trap-expansion"),
];

/// Oracle resolution for the reference widths.
const ORACLE_STEPS: usize = 20_000;

#[derive(Clone, Debug, PartialEq)]
pub struct TrapParams {
    pub protocols: Vec<TrapProtocol>,
    pub omega_start: f64,
    pub omega_end: f64,
    pub t_f: f64,
    pub units: OscillatorUnits,
    pub grid_points: usize,
    pub levels: usize,
    pub max_levels: usize,
    pub options: GridOptions,
    pub out: PathBuf,
}

pub fn trap_protocol(p: Protocol) -> Result<TrapProtocol> {
    match p {
        Protocol::Bare => Ok(TrapProtocol::Reference),
        Protocol::Cd0 => Ok(TrapProtocol::Counterdiabatic),
        Protocol::ModifiedFrequency => Ok(TrapProtocol::ModifiedFrequency),
        _ => Err(CliError::UnsupportedProtocol { protocol: p.name().into(), scenario: SCENARIO }),
    }
}

impl TrapParams {
    pub fn from_settings(settings: &Settings) -> Result<Self> {
        let protocols = parse_protocols(settings.raw("protocols"))?.into_iter().map(trap_protocol).collect::<Result<Vec<_>>>()?;
        let units = OscillatorUnits { hbar: settings.positive("hbar")?, mass: settings.positive("mass")? };
        let dilation = match settings.raw("dilation") {
            "chirp" => DilationScheme::Chirp,
            "spline" => DilationScheme::SplineResample,
            other => {
                return Err(CliError::InvalidValue { key: "dilation".into(), value: other.into(), expected: "chirp or spline".into() })
            }
        };
        let options = GridOptions {
            steps: settings.count("steps", 1)?,
            snapshot_every: settings.count("snapshot-every", 1)?,
            units,
            dilation,
            ..Default::default()
        };
        let params = Self {
            protocols,
            omega_start: settings.positive("omega-start")?,
            omega_end: settings.positive("omega-end")?,
            t_f: settings.positive("tf")?,
            units,
            grid_points: settings.count("grid-points", 16)?,
            levels: settings.count("levels", 1)?,
            max_levels: settings.count("max-levels", 1)?,
            options,
            out: PathBuf::from(settings.raw("out")),
        };
        params.ramp()?;
        Ok(params)
    }

    pub fn ramp(&self) -> Result<FrequencyRamp> {
        Ok(make_ramp(self.omega_start, self.omega_end, self.t_f)?)
    }
}

/// Projection onto the final trap, doubling the basis while it misses
/// probability.
pub fn excitation_with_retry(psi: &GridWavefunction, omega: f64, units: &OscillatorUnits, levels: usize, max_levels: usize) -> Result<(Excitation, usize)> {
    let mut n = levels;
    loop {
        match final_excitation(psi, omega, units, n) {
            Ok(ex) => return Ok((ex, n)),
            Err(sta_core::Error::IncompleteBasis { .. }) if n < max_levels => n = (2 * n).min(max_levels),
            Err(e) => return Err(e.into()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrapSummary {
    pub protocol: &'static str,
    pub final_p0: f64,
    pub levels: usize,
    pub captured: f64,
    pub mean_energy: f64,
    pub final_ground_energy: f64,
    pub max_norm_drift: f64,
    /// Reference: Ermakov width. Other protocols: instantaneous ground width.
    pub max_width_error: f64,
    pub max_ground_density_l1: f64,
    pub final_ground_density_l1: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_p0: Option<f64>,
}

pub struct TrapRun {
    pub run: GridRun,
    pub observables: Table,
    pub summary: TrapSummary,
}

fn expected_width(p: TrapProtocol, oracle: &ErmakovSolution, ramp: &FrequencyRamp, units: &OscillatorUnits, t: f64) -> f64 {
    match p {
        TrapProtocol::Reference => oracle.width(t, units),
        _ => units.ground_width(ramp.omega(t)),
    }
}

pub fn run_protocol(
    protocol: TrapProtocol,
    params: &TrapParams,
    ramp: &FrequencyRamp,
    oracle: &ErmakovSolution,
    psi0: &GridWavefunction,
) -> Result<TrapRun> {
    let units = &params.units;
    let run = propagate_grid(protocol, ramp, psi0, &params.options)?;
    let mut observables =
        Table::new(&["t", "omega", "omega_prime_sq", "width", "expected_width", "ground_density_l1", "norm"]);
    let (mut width_err, mut dens) = (0.0f64, 0.0f64);
    for s in &run.snapshots {
        let w = ramp.omega(s.t);
        let width = s.width();
        let expected = expected_width(protocol, oracle, ramp, units, s.t);
        let l1 = s.density_l1_to(|q| ground_density(q, w, units));
        width_err = width_err.max((width / expected - 1.0).abs());
        dens = dens.max(l1);
        observables.push(vec![s.t, w, omega_prime_sq(ramp, s.t), width, expected, l1, s.norm()]);
    }
    let last = run.final_state();
    let (ex, levels) = excitation_with_retry(last, ramp.end(), units, params.levels, params.max_levels)?;
    let summary = TrapSummary {
        protocol: protocol.name(),
        final_p0: ex.ground(),
        levels,
        captured: ex.captured,
        mean_energy: ex.mean_energy,
        final_ground_energy: 0.5 * units.hbar * ramp.end(),
        max_norm_drift: run.max_norm_drift,
        max_width_error: width_err,
        max_ground_density_l1: dens,
        final_ground_density_l1: last.density_l1_to(|q| ground_density(q, ramp.end(), units)),
        oracle_p0: (protocol == TrapProtocol::Reference).then(|| oracle.ground_overlap(params.t_f, ramp.end(), units)),
    };
    Ok(TrapRun { run, observables, summary })
}

/// `cd` against `modified` at every snapshot.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrameComparison {
    pub max_density_l1: f64,
    /// After mapping the modified-frequency state with `U_q`.
    pub max_mapped_l2: f64,
    pub final_overlap_abs: f64,
    pub final_overlap_arg: f64,
}

pub fn compare_cd_modified(cd: &GridRun, modified: &GridRun, ramp: &FrequencyRamp, units: &OscillatorUnits) -> FrameComparison {
    let (mut dens, mut l2) = (0.0f64, 0.0f64);
    for (c, m) in cd.snapshots.iter().zip(&modified.snapshots) {
        dens = dens.max(c.density_l1(m));
        l2 = l2.max(c.l2_distance(&u_q_map(m, ramp, m.t, MapDirection::Forward, units)));
    }
    let overlap = cd.final_state().overlap(modified.final_state());
    FrameComparison { max_density_l1: dens, max_mapped_l2: l2, final_overlap_abs: overlap.norm(), final_overlap_arg: overlap.arg() }
}

pub struct TrapReport {
    pub settings: Settings,
    pub params: TrapParams,
    pub ramp: FrequencyRamp,
    pub runs: Vec<TrapRun>,
    pub comparison: Option<FrameComparison>,
}

#[derive(Serialize)]
struct Summary<'a> {
    scenario: &'static str,
    settings: &'a Settings,
    box_half_width: f64,
    protocols: Vec<&'a TrapSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cd_vs_modified: Option<&'a FrameComparison>,
}

fn write_state(path: &Path, psi: &GridWavefunction) -> Result<()> {
    let f = File::create(path).map_err(|e| CliError::io(path, e))?;
    psi.write_csv(BufWriter::new(f)).map_err(|e| CliError::io(path, e))
}

impl TrapReport {
    pub fn write(&self, out: &Path) -> Result<()> {
        create_dir(out)?;
        let units = &self.params.units;
        let mut ramp_table = Table::new(&["t", "omega", "omega_dot", "omega_ddot", "omega_prime_sq"]);
        for k in 0..=1000 {
            let t = self.params.t_f * k as f64 / 1000.0;
            let [w, wd, wdd] = self.ramp.values(t);
            ramp_table.push(vec![t, w, wd, wdd, omega_prime_sq(&self.ramp, t)]);
        }
        ramp_table.write(&out.join("ramp.csv"))?;

        for r in &self.runs {
            let dir = out.join(r.summary.protocol);
            create_dir(&dir)?;
            r.observables.write(&dir.join("observables.csv"))?;
            write_json(&dir.join("summary.json"), &r.summary)?;
            let snaps = &r.run.snapshots;
            write_state(&dir.join("psi_initial.csv"), &snaps[0])?;
            write_state(&dir.join("psi_mid.csv"), &snaps[snaps.len() / 2])?;
            write_state(&dir.join("psi_final.csv"), r.run.final_state())?;
            let t = r.observables.abscissa();
            let last = r.run.final_state();
            let q: Vec<f64> = last.grid.points().collect();
            let ground: Vec<f64> = q.iter().map(|&x| ground_density(x, self.ramp.end(), units)).collect();
            let panels = [
                Panel::new(
                    "width",
                    "width",
                    vec![
                        Series::new("grid", &t, &r.observables.column("width")?),
                        Series::new("expected", &t, &r.observables.column("expected_width")?).dashed(),
                    ],
                ),
                Panel::new(
                    "final density",
                    "density",
                    vec![Series::new("grid", &q, &last.density()), Series::new("final ground", &q, &ground).dashed()],
                ),
            ];
            write_text(&dir.join("plot.svg"), &render(r.summary.protocol, "t (top), q (bottom)", &panels))?;
        }

        let widths: Vec<Series> =
            self.runs.iter().map(|r| Series::new(r.summary.protocol, &r.observables.abscissa(), &r.observables.column("width").unwrap_or_default())).collect();
        let densities: Vec<Series> = self
            .runs
            .iter()
            .map(|r| {
                let s = r.run.final_state();
                Series::new(r.summary.protocol, &s.grid.points().collect::<Vec<_>>(), &s.density())
            })
            .collect();
        write_text(&out.join("widths.svg"), &render("Trap expansion", "t", &[Panel::new("width", "width", widths)]))?;
        write_text(&out.join("densities.svg"), &render("Final densities", "q", &[Panel::new("density", "|psi|^2", densities)]))?;

        let grid = self.runs[0].run.final_state().grid;
        let summary = Summary {
            scenario: SCENARIO,
            settings: &self.settings,
            box_half_width: -grid.q(0),
            protocols: self.runs.iter().map(|r| &r.summary).collect(),
            cd_vs_modified: self.comparison.as_ref(),
        };
        write_json(&out.join("summary.json"), &summary)
    }
}

pub fn execute(settings: Settings) -> Result<TrapReport> {
    let params = TrapParams::from_settings(&settings)?;
    let ramp = params.ramp()?;
    let oracle = ermakov_oracle(&ramp, ORACLE_STEPS);
    let grid = grid_for_ramp(&ramp, &params.units, params.grid_points)?;
    let psi0 = GridWavefunction::ground_state(grid, ramp.start(), &params.units);
    let runs = params
        .protocols
        .par_iter()
        .map(|&p| run_protocol(p, &params, &ramp, &oracle, &psi0))
        .collect::<Result<Vec<_>>>()?;
    let find = |p| runs.iter().find(|r| r.run.protocol == p).map(|r| &r.run);
    let comparison = match (find(TrapProtocol::Counterdiabatic), find(TrapProtocol::ModifiedFrequency)) {
        (Some(cd), Some(m)) => Some(compare_cd_modified(cd, m, &ramp, &params.units)),
        _ => None,
    };
    let report = TrapReport { settings, params, ramp, runs, comparison };
    report.write(&report.params.out)?;
    Ok(report)
}
