//! The Landau–Zener protocols written in the laboratory frame of a
//! two-level atom, each checked against its rotating-frame counterpart.

use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use sta_core::pictures::{lab_rotation_for, FrameGenerator, LabFrameHamiltonian, LabRotation};
use sta_core::PropagatorOptions;

use crate::config::Settings;
use crate::lz::{LzContext, SweepParams};
use crate::two_level::{run_setup, write_overlays, RunSummary, Setup, TwoLevelRun, UnitaryFn};
use crate::{create_dir, write_json, CliError, Protocol, Result};

pub const SCENARIO: &str = "atom-lab-frame";

pub const DEFAULTS: &[(&str, &str)] = &[
    ("protocols", "bare,cd0,cd0-only"),
    ("alpha", ""),
    ("x0", "1"),
    ("T", "2"),
    ("omega0", "100"),
    ("carrier", "resonant"),
    ("tolerance", "1e-11"),
    ("report-points", "2001"),
    ("grid-points", "4001"),
    ("out", "out/atom-lab-frame"),
];

/// Carrier of the field that carries `K₀` alone.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Carrier {
    /// Fixed at `ω₀`.
    Resonant,
    /// Chirped like the reference drive, `ω₀ + 2Z₀(t)`.
    Chirped,
}

impl std::str::FromStr for Carrier {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "resonant" => Ok(Self::Resonant),
            "chirped" => Ok(Self::Chirped),
            _ => Err(CliError::InvalidValue { key: "carrier".into(), value: s.into(), expected: "resonant or chirped".into() }),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AtomParams {
    pub sweep: SweepParams,
    pub omega0: f64,
    pub carrier: Carrier,
}

impl AtomParams {
    pub fn from_settings(settings: &mut Settings) -> Result<Self> {
        let sweep = SweepParams::from_settings(settings)?;
        for &p in &sweep.protocols {
            if matches!(p, Protocol::Zrot | Protocol::ModifiedFrequency) {
                return Err(CliError::UnsupportedProtocol { protocol: p.name().into(), scenario: SCENARIO });
            }
        }
        Ok(Self { sweep, omega0: settings.positive("omega0")?, carrier: settings.parse("carrier", "resonant or chirped")? })
    }
}

/// Laboratory-frame setup `K_L + U_L H U_L†` from a rotating-frame one.
fn lab_setup(rotating: &Setup, rotation: LabRotation, omega0: f64) -> Setup {
    let hamiltonian = Arc::new(LabFrameHamiltonian::new(Arc::clone(&rotating.hamiltonian), rotation.clone(), omega0));
    let lift = |inner: &UnitaryFn| -> UnitaryFn {
        let (inner, rotation) = (Arc::clone(inner), rotation.clone());
        Arc::new(move |t| rotation.unitary(t) * inner(t))
    };
    Setup { protocol: rotating.protocol, hamiltonian, dressed: lift(&rotating.dressed), eigen: lift(&rotating.eigen) }
}

/// Lab-frame run of one protocol, with the largest population difference
/// to the rotating-frame run recorded in its summary.
pub fn run_protocol(ctx: &LzContext, params: &AtomParams, protocol: Protocol, opts: &PropagatorOptions) -> Result<TwoLevelRun> {
    let rotating = ctx.setup(protocol, SCENARIO)?;
    let rotation = match (protocol, params.carrier) {
        (Protocol::Cd0Only, Carrier::Resonant) => LabRotation::constant(params.omega0),
        _ => lab_rotation_for(&ctx.schedule, params.omega0)?,
    };
    let t_f = ctx.frame0.duration();
    let (lab, rot) = rayon::join(
        || run_setup(&lab_setup(&rotating, rotation, params.omega0), t_f, opts),
        || run_setup(&rotating, t_f, opts),
    );
    let (mut lab, rot) = (lab?, rot?);
    let diff = lab
        .populations
        .iter()
        .zip(&rot.populations)
        .zip(lab.eigen_p1.iter().zip(&rot.eigen_p1))
        .map(|((a, b), (c, d))| (a.0 - b.0).abs().max((c - d).abs()))
        .fold(0.0, f64::max);
    lab.summary.rotating_frame_max_population_difference = Some(diff);
    Ok(lab)
}

#[derive(Serialize)]
struct Summary<'a> {
    scenario: &'static str,
    settings: &'a Settings,
    protocols: Vec<&'a RunSummary>,
}

pub struct AtomReport {
    pub settings: Settings,
    pub params: AtomParams,
    pub runs: Vec<TwoLevelRun>,
}

impl AtomReport {
    pub fn write(&self, out: &Path) -> Result<()> {
        create_dir(out)?;
        for run in &self.runs {
            run.write(&out.join(run.protocol.name()))?;
        }
        write_overlays(out, "Laboratory frame", &self.runs)?;
        let summary =
            Summary { scenario: SCENARIO, settings: &self.settings, protocols: self.runs.iter().map(|r| &r.summary).collect() };
        write_json(&out.join("summary.json"), &summary)
    }
}

pub fn execute(mut settings: Settings) -> Result<AtomReport> {
    let params = AtomParams::from_settings(&mut settings)?;
    let ctx = LzContext::for_protocols(&params.sweep)?;
    lab_rotation_for(&ctx.schedule, params.omega0)?;
    let opts = params.sweep.propagator_options();
    let runs =
        params.sweep.protocols.par_iter().map(|&p| run_protocol(&ctx, &params, p, &opts)).collect::<Result<Vec<_>>>()?;
    let report = AtomReport { settings, params, runs };
    report.write(&report.params.sweep.out)?;
    Ok(report)
}
