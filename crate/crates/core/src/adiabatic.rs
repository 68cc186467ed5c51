//! Adiabatic and superadiabatic frames, coupling operators and
//! counterdiabatic corrections.
//!
//! A frame of level `j` is built on a Hamiltonian `H_j` (a
//! [`DriveSchedule`]). Its basis `A_j(t) = Σₙ |n_j(t)⟩⟨n|` has the
//! instantaneous eigenvectors of `H_j` as columns, phased so that
//! `⟨n_j|ṅ_j⟩ = 0`. The coupling `K_j = i Ȧ_j A_j†` then has the
//! gauge-invariant Pauli vector `½ n̂ × dn̂/dt`, with `n̂` the unit vector
//! of `H_j`, and the next iterate is `H_{j+1} = A_j† (H_j − K_j) A_j`.
//!
//! Everything is evaluated pointwise from the schedule's analytic
//! derivatives. The time grid is used to validate the trajectory
//! (degeneracies, gauge poles, resolution) and to tabulate the running
//! geometric phase.

use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::pictures::FrameGenerator;
use crate::quadrature::CumulativeIntegral;
use crate::schedules::{DriveSchedule, Hamiltonian, TimeGrid};
use crate::su2::{connection, eigenvectors, Gauge, LevelOrder, Mat2, Su2Coords, TwoLevelState, Unitary2};

/// Absolute accuracy of each panel of the geometric-phase table (radians).
const PHASE_TOL: f64 = 1e-15;

/// Nodes of the default frame grid.
pub const DEFAULT_GRID_POINTS: usize = 4001;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameOptions {
    pub grid_points: usize,
    /// Radius below `degeneracy_tol · max R` is treated as a level crossing.
    pub degeneracy_tol: f64,
    /// Smallest acceptable `|⟨n(t_k)|n(t_{k+1})⟩|` between grid nodes.
    pub min_overlap: f64,
    pub order: LevelOrder,
    /// Extra constant phases applied to the two basis vectors. Physical
    /// results must not depend on them.
    pub phase_offsets: [f64; 2],
}

impl Default for FrameOptions {
    fn default() -> Self {
        Self {
            grid_points: DEFAULT_GRID_POINTS,
            degeneracy_tol: 1e-12,
            min_overlap: 0.99,
            order: LevelOrder::BareOverlap,
            phase_offsets: [0.0, 0.0],
        }
    }
}

/// Local geometry of the Hamiltonian vector at one instant.
#[derive(Clone, Copy, Debug)]
pub struct Geometry {
    pub h: Su2Coords,
    pub h_dot: Su2Coords,
    pub h_ddot: Su2Coords,
    pub radius: f64,
    pub n: Su2Coords,
    pub n_dot: Su2Coords,
    pub n_ddot: Su2Coords,
}

impl Geometry {
    pub fn new(h: Su2Coords, h_dot: Su2Coords, h_ddot: Su2Coords) -> Self {
        let radius = h.radius();
        let n = (1.0 / radius) * h;
        let r_dot = n.dot(&h_dot);
        let n_dot = (1.0 / radius) * (h_dot - r_dot * n);
        let r_ddot = n_dot.dot(&h_dot) + n.dot(&h_ddot);
        let n_ddot = (1.0 / radius) * (h_ddot - 2.0 * r_dot * n_dot - r_ddot * n);
        Self { h, h_dot, h_ddot, radius, n, n_dot, n_ddot }
    }

    /// Pauli vector of `K = i Ȧ A†` in the parallel-transport gauge.
    pub fn coupling(&self) -> Su2Coords {
        0.5 * self.n.cross(&self.n_dot)
    }

    pub fn coupling_dot(&self) -> Su2Coords {
        0.5 * self.n.cross(&self.n_ddot)
    }
}

/// Adiabatic (`level = 0`) or superadiabatic (`level ≥ 1`) frame.
pub struct AdiabaticFrame {
    level: usize,
    schedule: Arc<dyn DriveSchedule>,
    grid: TimeGrid,
    gauge: Gauge,
    upper_first: bool,
    column_phases: [C64; 2],
    /// Running integral of the upper vector's connection coefficient.
    berry: Option<CumulativeIntegral>,
    energy_scale: f64,
    initial_deficit: f64,
    basis_nodes: Vec<Unitary2>,
    coupling_nodes: Vec<Su2Coords>,
    next_nodes: Vec<Su2Coords>,
}

impl std::fmt::Debug for AdiabaticFrame {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AdiabaticFrame")
            .field("level", &self.level)
            .field("grid_points", &self.grid.len())
            .field("gauge", &self.gauge)
            .field("upper_first", &self.upper_first)
            .field("energy_scale", &self.energy_scale)
            .field("initial_deficit", &self.initial_deficit)
            .finish()
    }
}

impl AdiabaticFrame {
    pub fn build(schedule: Arc<dyn DriveSchedule>, opts: &FrameOptions) -> Result<Arc<Self>> {
        let t_f = schedule.duration();
        let grid = TimeGrid::new(t_f, opts.grid_points)?;
        let level = schedule.level();

        let hs: Vec<Su2Coords> = grid.times().map(|t| schedule.coords(t)).collect();
        let energy_scale = hs.iter().map(Su2Coords::radius).fold(0.0, f64::max);
        let tol = opts.degeneracy_tol * energy_scale;
        if let Some(h) = hs.iter().find(|h| !(h.radius() > tol)) {
            return Err(Error::DegenerateHamiltonian { radius: h.radius(), tolerance: tol });
        }

        let clearance = |g: Gauge| hs.iter().map(|h| g.pole_clearance(*h)).fold(f64::INFINITY, f64::min);
        let (north, south) = (clearance(Gauge::North), clearance(Gauge::South));
        let gauge = if north >= south { Gauge::North } else { Gauge::South };
        if north.max(south) < 1e-6 {
            return Err(Error::GaugeSingular { clearance: north.max(south) });
        }

        let coeff = {
            let s = schedule.clone();
            move |t: f64| {
                let (h, h_dot) = s.coords_with_dot(t);
                connection(h, h_dot, gauge).0
            }
        };
        let node_coeffs: Vec<f64> = grid.times().map(&coeff).collect();
        let berry = if node_coeffs.iter().all(|&c| c == 0.0) {
            None
        } else {
            Some(CumulativeIntegral::build(&coeff, 0.0, t_f, grid.len(), PHASE_TOL))
        };

        let (up0, down0) = eigenvectors(hs[0], gauge);
        let upper_first = match opts.order {
            LevelOrder::UpperFirst => true,
            LevelOrder::LowerFirst => false,
            LevelOrder::BareOverlap => up0[0].norm_sqr() >= down0[0].norm_sqr(),
        };
        let (c1, c2) = if upper_first { (up0, down0) } else { (down0, up0) };
        let align = |v: C64, offset: f64| {
            let base = if v.norm() > 1e-300 { v.conj() / v.norm() } else { C64::new(1.0, 0.0) };
            base * C64::from_polar(1.0, offset)
        };
        let column_phases = [align(c1[0], opts.phase_offsets[0]), align(c2[1], opts.phase_offsets[1])];

        let mut frame = Self {
            level,
            schedule,
            grid,
            gauge,
            upper_first,
            column_phases,
            berry,
            energy_scale,
            initial_deficit: 0.0,
            basis_nodes: Vec::new(),
            coupling_nodes: Vec::new(),
            next_nodes: Vec::new(),
        };

        let n = frame.grid.len();
        let mut basis_nodes = Vec::with_capacity(n);
        let mut coupling_nodes = Vec::with_capacity(n);
        let mut next_nodes = Vec::with_capacity(n);
        for k in 0..n {
            let t = frame.grid.time(k);
            let a = frame.basis(t);
            if let Some(prev) = basis_nodes.last() {
                let overlap = column_overlap(prev, &a);
                if overlap < opts.min_overlap {
                    return Err(Error::GridTooCoarse { overlap, t0: frame.grid.time(k - 1), t1: t });
                }
            }
            let geo = frame.geometry(t);
            let kc = geo.coupling();
            basis_nodes.push(a);
            coupling_nodes.push(kc);
            next_nodes.push(a.conjugate(geo.h - kc));
        }
        frame.initial_deficit = 1.0 - basis_nodes[0].mat().0[0][0].norm_sqr();
        frame.basis_nodes = basis_nodes;
        frame.coupling_nodes = coupling_nodes;
        frame.next_nodes = next_nodes;
        Ok(Arc::new(frame))
    }

    pub fn with_defaults(schedule: Arc<dyn DriveSchedule>) -> Result<Arc<Self>> {
        Self::build(schedule, &FrameOptions::default())
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn schedule(&self) -> &Arc<dyn DriveSchedule> {
        &self.schedule
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn duration(&self) -> f64 {
        self.grid.duration()
    }

    pub fn gauge(&self) -> Gauge {
        self.gauge
    }

    /// Largest `|H_j|` on the grid.
    pub fn energy_scale(&self) -> f64 {
        self.energy_scale
    }

    /// `1 − |⟨1|A_j(0)|1⟩|²`: how far the first eigenvector at `t = 0` is
    /// from the bare state `|1⟩`.
    pub fn initial_overlap_deficit(&self) -> f64 {
        self.initial_deficit
    }

    /// Whether column 1 of the basis is the upper (`+R`) eigenvector.
    pub fn upper_first(&self) -> bool {
        self.upper_first
    }

    /// Tabulated `A_j` at the grid nodes.
    pub fn basis_nodes(&self) -> &[Unitary2] {
        &self.basis_nodes
    }

    /// Tabulated `K_j` at the grid nodes.
    pub fn coupling_nodes(&self) -> &[Su2Coords] {
        &self.coupling_nodes
    }

    /// Tabulated `H_{j+1}` at the grid nodes.
    pub fn next_nodes(&self) -> &[Su2Coords] {
        &self.next_nodes
    }

    pub fn geometry(&self, t: f64) -> Geometry {
        let [h, h_dot, h_ddot] = self.schedule.jet(t);
        Geometry::new(h, h_dot, h_ddot)
    }

    fn berry_phase(&self, t: f64) -> f64 {
        self.berry.as_ref().map_or(0.0, |table| table.eval(t))
    }

    /// `A_j(t)`.
    pub fn basis(&self, t: f64) -> Unitary2 {
        self.basis_at(t, self.schedule.coords(t))
    }

    /// `A_j(t)` given `H_j(t)`.
    fn basis_at(&self, t: f64, h: Su2Coords) -> Unitary2 {
        let (up, down) = eigenvectors(h, self.gauge);
        let c = self.berry_phase(t);
        let up = scale(up, C64::from_polar(1.0, -c));
        let down = scale(down, C64::from_polar(1.0, c));
        let (a, b) = if self.upper_first { (up, down) } else { (down, up) };
        Unitary2::from_mat_unchecked(Mat2::from_columns(
            scale(a, self.column_phases[0]),
            scale(b, self.column_phases[1]),
        ))
    }

    /// The `k`-th tracked eigenvector `A_j(t)|k⟩` (k = 0 or 1).
    pub fn eigenstate(&self, t: f64, k: usize) -> TwoLevelState {
        TwoLevelState(self.basis(t).mat().column(k))
    }

    /// Energy of the `k`-th tracked eigenvector.
    pub fn eigenvalue(&self, t: f64, k: usize) -> f64 {
        let r = self.schedule.coords(t).radius();
        if (k == 0) == self.upper_first {
            r
        } else {
            -r
        }
    }

    /// `K_j(t)`.
    pub fn coupling(&self, t: f64) -> Su2Coords {
        // K only needs first derivatives
        let (h, h_dot) = self.schedule.coords_with_dot(t);
        Geometry::new(h, h_dot, Su2Coords::ZERO).coupling()
    }

    /// `H_{j+1}(t) = A_j† (H_j − K_j) A_j`.
    pub fn next_coords(&self, t: f64) -> Su2Coords {
        let (h, h_dot) = self.schedule.coords_with_dot(t);
        let geo = Geometry::new(h, h_dot, Su2Coords::ZERO);
        self.basis_at(t, h).conjugate(geo.h - geo.coupling())
    }

    /// `dH_{j+1}/dt = A_j† (Ḣ_j − K̇_j + i[K_j, H_j]) A_j`.
    pub fn next_coords_dot(&self, t: f64) -> Su2Coords {
        self.next_coords_with_dot(t).1
    }

    /// `(H_{j+1}, dH_{j+1}/dt)` sharing one basis evaluation.
    pub fn next_coords_with_dot(&self, t: f64) -> (Su2Coords, Su2Coords) {
        let geo = self.geometry(t);
        let k = geo.coupling();
        let v = geo.h_dot - geo.coupling_dot() - 2.0 * k.cross(&geo.h);
        let a = self.basis_at(t, geo.h);
        (a.conjugate(geo.h - k), a.conjugate(v))
    }

    /// The next iterate `H_{j+1}` as a schedule.
    pub fn iterate(self: &Arc<Self>) -> IterateSchedule {
        IterateSchedule { parent: Arc::clone(self) }
    }
}

impl FrameGenerator for AdiabaticFrame {
    fn unitary(&self, t: f64) -> Unitary2 {
        self.basis(t)
    }
    fn generator(&self, t: f64) -> Su2Coords {
        self.coupling(t)
    }
}

fn scale(v: [C64; 2], s: C64) -> [C64; 2] {
    [v[0] * s, v[1] * s]
}

fn column_overlap(a: &Unitary2, b: &Unitary2) -> f64 {
    (0..2)
        .map(|k| {
            let (u, v) = (a.mat().column(k), b.mat().column(k));
            (u[0].conj() * v[0] + u[1].conj() * v[1]).norm()
        })
        .fold(f64::INFINITY, f64::min)
}

/// `H_{j+1}` of a built frame, usable as the input of the next level.
#[derive(Clone, Debug)]
pub struct IterateSchedule {
    parent: Arc<AdiabaticFrame>,
}

impl IterateSchedule {
    pub fn parent(&self) -> &Arc<AdiabaticFrame> {
        &self.parent
    }
}

impl Hamiltonian for IterateSchedule {
    fn coords(&self, t: f64) -> Su2Coords {
        self.parent.next_coords(t)
    }
}

impl DriveSchedule for IterateSchedule {
    fn duration(&self) -> f64 {
        self.parent.duration()
    }
    fn coords_dot(&self, t: f64) -> Su2Coords {
        self.parent.next_coords_dot(t)
    }
    fn coords_with_dot(&self, t: f64) -> (Su2Coords, Su2Coords) {
        self.parent.next_coords_with_dot(t)
    }
    fn level(&self) -> usize {
        self.parent.level() + 1
    }
}

/// Builds the frame of `H_{j+1}` from the frame of `H_j`.
pub fn iterate(frame: &Arc<AdiabaticFrame>, opts: &FrameOptions) -> Result<Arc<AdiabaticFrame>> {
    AdiabaticFrame::build(Arc::new(frame.iterate()), opts)
}

/// Convenience: build a frame on a laboratory schedule.
pub fn build_frame<S: DriveSchedule + 'static>(s: S, opts: &FrameOptions) -> Result<Arc<AdiabaticFrame>> {
    AdiabaticFrame::build(Arc::new(s), opts)
}

/// `H_cd^(0) = K₀`.
#[derive(Clone, Debug)]
pub struct CdTerm0 {
    frame0: Arc<AdiabaticFrame>,
}

impl Hamiltonian for CdTerm0 {
    fn coords(&self, t: f64) -> Su2Coords {
        self.frame0.coupling(t)
    }
}

pub fn cd_term_0(frame0: &Arc<AdiabaticFrame>) -> CdTerm0 {
    CdTerm0 { frame0: Arc::clone(frame0) }
}

/// `H_cd^(1) = A₀ K₁ A₀†`.
#[derive(Clone, Debug)]
pub struct CdTerm1 {
    frame0: Arc<AdiabaticFrame>,
    frame1: Arc<AdiabaticFrame>,
}

impl Hamiltonian for CdTerm1 {
    fn coords(&self, t: f64) -> Su2Coords {
        self.frame0.basis(t).transform(self.frame1.coupling(t))
    }
}

pub fn cd_term_1(frame0: &Arc<AdiabaticFrame>, frame1: &Arc<AdiabaticFrame>) -> Result<CdTerm1> {
    check_chain(frame0, frame1)?;
    Ok(CdTerm1 { frame0: Arc::clone(frame0), frame1: Arc::clone(frame1) })
}

/// `H_cd^(01) = H_cd^(0) + H_cd^(1)`.
#[derive(Clone, Debug)]
pub struct CdTerm01 {
    zero: CdTerm0,
    one: CdTerm1,
}

impl Hamiltonian for CdTerm01 {
    fn coords(&self, t: f64) -> Su2Coords {
        self.zero.coords(t) + self.one.coords(t)
    }
}

pub fn cd_term_01(frame0: &Arc<AdiabaticFrame>, frame1: &Arc<AdiabaticFrame>) -> Result<CdTerm01> {
    Ok(CdTerm01 { zero: cd_term_0(frame0), one: cd_term_1(frame0, frame1)? })
}

fn check_chain(frame0: &AdiabaticFrame, frame1: &AdiabaticFrame) -> Result<()> {
    if frame1.level() != frame0.level() + 1 || frame0.duration() != frame1.duration() {
        return Err(Error::InvalidArgument(format!(
            "frames do not form a chain (levels {} and {}, durations {} and {})",
            frame0.level(),
            frame1.level(),
            frame0.duration(),
            frame1.duration()
        )));
    }
    Ok(())
}

/// Pointwise sum of two Hamiltonians.
#[derive(Clone, Debug)]
pub struct Sum<A, B>(pub A, pub B);

impl<A: Hamiltonian, B: Hamiltonian> Hamiltonian for Sum<A, B> {
    fn coords(&self, t: f64) -> Su2Coords {
        self.0.coords(t) + self.1.coords(t)
    }
}
