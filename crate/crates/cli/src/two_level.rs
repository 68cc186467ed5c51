//! Propagation and output shared by the two-level scenarios.

use std::path::Path;
use std::sync::Arc;

use serde::Serialize;
use sta_core::propagator::fidelity;
use sta_core::{propagate, Hamiltonian, PropagatorOptions, Su2Coords, TwoLevelState, Unitary2};

use crate::plot::{render, Panel, Series};
use crate::table::Table;
use crate::{create_dir, write_json, write_text, Protocol, Result};

pub(crate) type UnitaryFn = Arc<dyn Fn(f64) -> Unitary2 + Send + Sync>;

/// What to propagate and in which bases to read the result.
#[derive(Clone)]
pub(crate) struct Setup {
    pub protocol: Protocol,
    pub hamiltonian: Arc<dyn Hamiltonian>,
    /// Starts in `dressed(0)|1⟩`; fidelity is measured against
    /// `dressed(t_f)|1⟩`.
    pub dressed: UnitaryFn,
    /// `eigen_P1 = |⟨1|eigen(t)†ψ⟩|²`.
    pub eigen: UnitaryFn,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub protocol: String,
    pub final_p1: f64,
    pub final_p2: f64,
    pub final_eigen_p1: f64,
    pub fidelity: f64,
    pub initial_p1: f64,
    pub initial_eigen_p1: f64,
    pub norm_error: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub max_abs_x: f64,
    pub max_abs_y: f64,
    pub max_abs_z: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rotating_frame_max_population_difference: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct TwoLevelRun {
    pub protocol: Protocol,
    pub times: Vec<f64>,
    pub hamiltonian: Vec<Su2Coords>,
    pub populations: Vec<(f64, f64)>,
    pub eigen_p1: Vec<f64>,
    pub final_state: TwoLevelState,
    pub summary: RunSummary,
}

pub(crate) fn run_setup(setup: &Setup, t_f: f64, opts: &PropagatorOptions) -> Result<TwoLevelRun> {
    let psi0 = (setup.dressed)(0.0).apply(&TwoLevelState::bare(0));
    let traj = propagate(&setup.hamiltonian, psi0, t_f, opts)?;
    let populations = traj.populations();
    let eigen_p1: Vec<f64> =
        traj.times.iter().zip(&traj.states).map(|(&t, psi)| (setup.eigen)(t).adjoint().apply(psi).populations().0).collect();
    let hamiltonian: Vec<Su2Coords> = traj.times.iter().map(|&t| setup.hamiltonian.coords(t)).collect();
    let final_state = traj.final_state();
    let target = (setup.dressed)(t_f).apply(&TwoLevelState::bare(0));
    let max_abs = |f: fn(&Su2Coords) -> f64| hamiltonian.iter().map(|c| f(c).abs()).fold(0.0, f64::max);
    let last = populations.len() - 1;
    let summary = RunSummary {
        protocol: setup.protocol.name().to_string(),
        final_p1: populations[last].0,
        final_p2: populations[last].1,
        final_eigen_p1: eigen_p1[last],
        fidelity: fidelity(&final_state, &target),
        initial_p1: populations[0].0,
        initial_eigen_p1: eigen_p1[0],
        norm_error: traj.norm_error,
        accepted_steps: traj.accepted_steps,
        rejected_steps: traj.rejected_steps,
        max_abs_x: max_abs(|c| c.x),
        max_abs_y: max_abs(|c| c.y),
        max_abs_z: max_abs(|c| c.z),
        rotating_frame_max_population_difference: None,
    };
    Ok(TwoLevelRun { protocol: setup.protocol, times: traj.times, hamiltonian, populations, eigen_p1, final_state, summary })
}

impl TwoLevelRun {
    pub fn hamiltonian_table(&self) -> Table {
        let mut t = Table::new(&["t", "X", "Y", "Z"]);
        for (&time, c) in self.times.iter().zip(&self.hamiltonian) {
            t.push(vec![time, c.x, c.y, c.z]);
        }
        t
    }

    pub fn population_table(&self) -> Table {
        let mut t = Table::new(&["t", "P1", "P2", "eigen_P1"]);
        for ((&time, &(p1, p2)), &e) in self.times.iter().zip(&self.populations).zip(&self.eigen_p1) {
            t.push(vec![time, p1, p2, e]);
        }
        t
    }

    fn column(&self, f: impl Fn(usize) -> f64) -> Vec<f64> {
        (0..self.times.len()).map(f).collect()
    }

    /// Writes `hamiltonian.csv`, `populations.csv`, `summary.json` and
    /// `plot.svg` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        create_dir(dir)?;
        self.hamiltonian_table().write(&dir.join("hamiltonian.csv"))?;
        self.population_table().write(&dir.join("populations.csv"))?;
        write_json(&dir.join("summary.json"), &self.summary)?;
        let t = &self.times;
        let pops = Panel::new(
            "populations",
            "population",
            vec![
                Series::new("P1", t, &self.column(|k| self.populations[k].0)),
                Series::new("P2", t, &self.column(|k| self.populations[k].1)),
                Series::new("eigen P1", t, &self.eigen_p1).dashed(),
            ],
        );
        let ham = Panel::new(
            "Hamiltonian",
            "coefficient",
            vec![
                Series::new("X", t, &self.column(|k| self.hamiltonian[k].x)),
                Series::new("Y", t, &self.column(|k| self.hamiltonian[k].y)),
                Series::new("Z", t, &self.column(|k| self.hamiltonian[k].z)),
            ],
        );
        write_text(&dir.join("plot.svg"), &render(self.protocol.name(), "t", &[ham, pops]))
    }
}

/// Cross-protocol overlays: `populations.svg` and `hamiltonian.svg`.
pub(crate) fn write_overlays(out: &Path, title: &str, runs: &[TwoLevelRun]) -> Result<()> {
    let series = |f: &dyn Fn(&TwoLevelRun, usize) -> f64| -> Vec<Series> {
        runs.iter().map(|r| Series::new(r.protocol.name(), &r.times, &r.column(|k| f(r, k)))).collect()
    };
    let pops = [
        Panel::new("bare population P1", "P1", series(&|r, k| r.populations[k].0)),
        Panel::new("adiabatic population", "eigen P1", series(&|r, k| r.eigen_p1[k])),
    ];
    write_text(&out.join("populations.svg"), &render(title, "t", &pops))?;
    let ham = [
        Panel::new("X", "X", series(&|r, k| r.hamiltonian[k].x)),
        Panel::new("Y", "Y", series(&|r, k| r.hamiltonian[k].y)),
        Panel::new("Z", "Z", series(&|r, k| r.hamiltonian[k].z)),
    ];
    write_text(&out.join("hamiltonian.svg"), &render(title, "t", &ham))
}
