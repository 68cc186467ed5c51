//! Landau–Zener population inversion under the two-level protocols.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use sta_core::adiabatic::{cd_term_0, cd_term_01, cd_term_1, iterate, AdiabaticFrame, FrameOptions, Sum};
use sta_core::pictures::{z_rotation_shortcut, FrameGenerator};
use sta_core::{DriveSchedule, Hamiltonian, LzSchedule, PropagatorOptions};

use crate::config::Settings;
use crate::two_level::{run_setup, write_overlays, RunSummary, Setup, TwoLevelRun, UnitaryFn};
use crate::{create_dir, parse_protocols, write_json, CliError, Protocol, Result};

pub const SCENARIO: &str = "lz-inversion";

pub const DEFAULTS: &[(&str, &str)] = &[
    ("protocols", "bare,cd0,cd1,cd01,cd0-only,zrot"),
    ("alpha", ""),
    ("x0", "1"),
    ("T", "2"),
    ("tolerance", "1e-10"),
    ("report-points", "2001"),
    ("grid-points", "4001"),
    ("out", "out/lz-inversion"),
];

/// Sweep and numerics shared by both two-level scenarios.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepParams {
    pub alpha: f64,
    pub x0: f64,
    pub t_f: f64,
    pub tolerance: f64,
    pub report_points: usize,
    pub grid_points: usize,
    pub protocols: Vec<Protocol>,
    pub out: PathBuf,
}

impl SweepParams {
    /// An empty `alpha` becomes `−20/T`, recorded as a derived setting.
    pub fn from_settings(settings: &mut Settings) -> Result<Self> {
        let t_f = settings.positive("T")?;
        if settings.is_empty_value("alpha") {
            settings.set_derived("alpha", format!("{}", -20.0 / t_f));
        }
        let params = Self {
            alpha: settings.f64("alpha")?,
            x0: settings.f64("x0")?,
            t_f,
            tolerance: settings.positive("tolerance")?,
            report_points: settings.count("report-points", 2)?,
            grid_points: settings.count("grid-points", 3)?,
            protocols: parse_protocols(settings.raw("protocols"))?,
            out: PathBuf::from(settings.raw("out")),
        };
        params.schedule()?;
        Ok(params)
    }

    pub fn schedule(&self) -> Result<LzSchedule> {
        Ok(LzSchedule::new(self.alpha, self.x0, self.t_f)?)
    }

    pub fn propagator_options(&self) -> PropagatorOptions {
        PropagatorOptions { tolerance: self.tolerance, report_points: self.report_points, ..Default::default() }
    }
}

/// Adiabatic frames of the sweep, built once and shared by all runs.
#[derive(Clone)]
pub struct LzContext {
    pub schedule: Arc<dyn DriveSchedule>,
    pub frame0: Arc<AdiabaticFrame>,
    pub frame1: Option<Arc<AdiabaticFrame>>,
}

impl LzContext {
    pub fn new(schedule: Arc<dyn DriveSchedule>, grid_points: usize, with_frame1: bool) -> Result<Self> {
        let opts = FrameOptions { grid_points, ..Default::default() };
        let frame0 = AdiabaticFrame::build(Arc::clone(&schedule), &opts)?;
        let frame1 = if with_frame1 { Some(iterate(&frame0, &opts)?) } else { None };
        Ok(Self { schedule, frame0, frame1 })
    }

    pub fn for_protocols(params: &SweepParams) -> Result<Self> {
        let needs1 = params.protocols.iter().any(|p| matches!(p, Protocol::Cd1 | Protocol::Cd01));
        Self::new(Arc::new(params.schedule()?), params.grid_points, needs1)
    }

    fn frame1(&self) -> &Arc<AdiabaticFrame> {
        self.frame1.as_ref().expect("context built with the first iterated frame")
    }

    /// Rotating-frame setup of one protocol. `cd0-only` and `cd01` drive
    /// with the counterdiabatic terms alone.
    pub(crate) fn setup(&self, protocol: Protocol, scenario: &'static str) -> Result<Setup> {
        let f0 = Arc::clone(&self.frame0);
        let a0: UnitaryFn = Arc::new(move |t| f0.basis(t));
        let h0 = Arc::clone(&self.schedule);
        let a01 = || -> UnitaryFn {
            let (f0, f1) = (Arc::clone(&self.frame0), Arc::clone(self.frame1()));
            Arc::new(move |t| f0.basis(t) * f1.basis(t))
        };
        let (hamiltonian, dressed): (Arc<dyn Hamiltonian>, UnitaryFn) = match protocol {
            Protocol::Bare => (Arc::new(h0), Arc::clone(&a0)),
            Protocol::Cd0 => (Arc::new(Sum(h0, cd_term_0(&self.frame0))), Arc::clone(&a0)),
            Protocol::Cd0Only => (Arc::new(cd_term_0(&self.frame0)), Arc::clone(&a0)),
            Protocol::Cd1 => (Arc::new(Sum(h0, cd_term_1(&self.frame0, self.frame1())?)), a01()),
            Protocol::Cd01 => (Arc::new(cd_term_01(&self.frame0, self.frame1())?), a01()),
            Protocol::Zrot => {
                let shortcut = z_rotation_shortcut(&self.frame0)?;
                let rotation = shortcut.rotation().clone();
                let f0 = Arc::clone(&self.frame0);
                let basis: UnitaryFn = Arc::new(move |t| rotation.unitary(t).adjoint() * f0.basis(t));
                return Ok(Setup { protocol, hamiltonian: Arc::new(shortcut), dressed: Arc::clone(&basis), eigen: basis });
            }
            Protocol::ModifiedFrequency => {
                return Err(CliError::UnsupportedProtocol { protocol: protocol.name().into(), scenario })
            }
        };
        Ok(Setup { protocol, hamiltonian, dressed, eigen: a0 })
    }

    pub fn run_protocol(&self, protocol: Protocol, opts: &PropagatorOptions) -> Result<TwoLevelRun> {
        run_setup(&self.setup(protocol, SCENARIO)?, self.frame0.duration(), opts)
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    scenario: &'static str,
    settings: &'a Settings,
    energy_scale: f64,
    protocols: Vec<&'a RunSummary>,
}

pub struct LzReport {
    pub settings: Settings,
    pub params: SweepParams,
    pub energy_scale: f64,
    pub runs: Vec<TwoLevelRun>,
}

impl LzReport {
    pub fn write(&self, out: &Path) -> Result<()> {
        create_dir(out)?;
        for run in &self.runs {
            run.write(&out.join(run.protocol.name()))?;
        }
        write_overlays(out, "Landau-Zener inversion", &self.runs)?;
        let summary = Summary {
            scenario: SCENARIO,
            settings: &self.settings,
            energy_scale: self.energy_scale,
            protocols: self.runs.iter().map(|r| &r.summary).collect(),
        };
        write_json(&out.join("summary.json"), &summary)
    }
}

/// Validates the settings, runs every protocol concurrently and writes the
/// outputs under the `out` setting.
pub fn execute(mut settings: Settings) -> Result<LzReport> {
    let params = SweepParams::from_settings(&mut settings)?;
    for &p in &params.protocols {
        if p == Protocol::ModifiedFrequency {
            return Err(CliError::UnsupportedProtocol { protocol: p.name().into(), scenario: SCENARIO });
        }
    }
    let ctx = LzContext::for_protocols(&params)?;
    let opts = params.propagator_options();
    let runs = params.protocols.par_iter().map(|&p| ctx.run_protocol(p, &opts)).collect::<Result<Vec<_>>>()?;
    let report = LzReport { energy_scale: ctx.frame0.energy_scale(), settings, params, runs };
    report.write(&report.params.out)?;
    Ok(report)
}
