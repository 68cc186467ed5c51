//! Interaction-picture transforms and the concrete frames used by the
//! two-level constructions: rotations about `z` that remove the `σ_y`
//! component of a counterdiabatic Hamiltonian, and the laboratory-frame
//! family for a driven atom.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::adiabatic::{AdiabaticFrame, Geometry};
use crate::error::{Error, Result};
use crate::quadrature::CumulativeIntegral;
use crate::schedules::{DriveSchedule, Hamiltonian, TimeGrid};
use crate::su2::{Mat2, Su2Coords, Unitary2};

/// A moving frame `U(t)` together with its generator `K = i U̇ U†`.
///
/// All generators used here are traceless, so `K` is stored as a Pauli
/// vector.
pub trait FrameGenerator: Send + Sync {
    fn unitary(&self, t: f64) -> Unitary2;
    fn generator(&self, t: f64) -> Su2Coords;
}

impl<F: FrameGenerator + ?Sized> FrameGenerator for Arc<F> {
    fn unitary(&self, t: f64) -> Unitary2 {
        (**self).unitary(t)
    }
    fn generator(&self, t: f64) -> Su2Coords {
        (**self).generator(t)
    }
}

impl<F: FrameGenerator + ?Sized> FrameGenerator for &F {
    fn unitary(&self, t: f64) -> Unitary2 {
        (**self).unitary(t)
    }
    fn generator(&self, t: f64) -> Su2Coords {
        (**self).generator(t)
    }
}

/// `i U̇ U†` by fourth-order central differences.
pub fn generator_by_differences<F: FrameGenerator + ?Sized>(frame: &F, t: f64, h: f64) -> Mat2 {
    let u = |s: f64| *frame.unitary(s).mat();
    let d = (u(t - 2.0 * h) - u(t + 2.0 * h) + (u(t + h) - u(t - h)).scale(C64::new(8.0, 0.0)))
        .scale(C64::new(1.0 / (12.0 * h), 0.0));
    (d * u(t).adjoint()).scale(C64::new(0.0, 1.0))
}

/// `H_I = U† (H_S − K) U`.
#[derive(Clone)]
pub struct InteractionHamiltonian<H, F> {
    pub h: H,
    pub frame: F,
}

impl<H: Hamiltonian, F: FrameGenerator> Hamiltonian for InteractionHamiltonian<H, F> {
    fn coords(&self, t: f64) -> Su2Coords {
        self.frame.unitary(t).conjugate(self.h.coords(t) - self.frame.generator(t))
    }
}

pub fn ip_transform<H: Hamiltonian, F: FrameGenerator>(h: H, frame: F) -> InteractionHamiltonian<H, F> {
    InteractionHamiltonian { h, frame }
}

/// `U = U_outer U_inner`, `K = K_outer + U_outer K_inner U_outer†`.
#[derive(Clone, Debug)]
pub struct Composed<A, B> {
    pub outer: A,
    pub inner: B,
}

impl<A: FrameGenerator, B: FrameGenerator> FrameGenerator for Composed<A, B> {
    fn unitary(&self, t: f64) -> Unitary2 {
        self.outer.unitary(t) * self.inner.unitary(t)
    }
    fn generator(&self, t: f64) -> Su2Coords {
        let outer = self.outer.unitary(t);
        self.outer.generator(t) + outer.transform(self.inner.generator(t))
    }
}

pub fn compose<A: FrameGenerator, B: FrameGenerator>(outer: A, inner: B) -> Composed<A, B> {
    Composed { outer, inner }
}

/// The identity frame.
#[derive(Clone, Copy, Debug, Default)]
pub struct Identity;

impl FrameGenerator for Identity {
    fn unitary(&self, _t: f64) -> Unitary2 {
        Unitary2::IDENTITY
    }
    fn generator(&self, _t: f64) -> Su2Coords {
        Su2Coords::ZERO
    }
}

/// Rotation `U_z = diag(e^{−iφ/2}, e^{iφ/2})` that turns
/// `X₀σ_x + (Θ̇₀/2)σ_y + Z₀σ_z` into `Pσ_x + (Z₀ − φ̇/2)σ_z`.
#[derive(Clone)]
pub struct ZRotation {
    schedule: Arc<dyn DriveSchedule>,
    /// `π` when `X₀ < 0` throughout, so that φ stays on one branch.
    branch: f64,
}

impl fmt::Debug for ZRotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ZRotation").field("branch", &self.branch).finish()
    }
}

/// Values of the rotation angle and the rotated drive at one instant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZRotationPoint {
    pub phi: f64,
    pub phi_dot: f64,
    /// `P = [X₀² + (Θ̇₀/2)²]^{1/2}`.
    pub p: f64,
    pub z: f64,
}

impl ZRotation {
    /// Checks `Y₀ ≡ 0` and that `X₀` keeps one sign on a grid of
    /// `samples` points.
    pub fn new(schedule: Arc<dyn DriveSchedule>, samples: usize) -> Result<Self> {
        let grid = TimeGrid::new(schedule.duration(), samples)?;
        let mut scale = 0.0f64;
        let mut sign = 0.0f64;
        let mut y_max = 0.0f64;
        for t in grid.times() {
            let c = schedule.coords(t);
            scale = scale.max(c.radius());
            y_max = y_max.max(c.y.abs());
        }
        if y_max > 1e-12 * scale {
            return Err(Error::InvalidArgument(format!("z-rotation needs Y ≡ 0 (found |Y| = {y_max:e})")));
        }
        for t in grid.times() {
            let x = schedule.coords(t).x;
            if x.abs() <= 1e-12 * scale {
                return Err(Error::PhaseBranch { t, reason: "X vanishes".into() });
            }
            if sign == 0.0 {
                sign = x.signum();
            } else if x.signum() != sign {
                return Err(Error::PhaseBranch { t, reason: "X changes sign".into() });
            }
        }
        Ok(Self { schedule, branch: if sign < 0.0 { std::f64::consts::PI } else { 0.0 } })
    }

    pub fn schedule(&self) -> &Arc<dyn DriveSchedule> {
        &self.schedule
    }

    pub fn point(&self, t: f64) -> ZRotationPoint {
        let s = &self.schedule;
        let [h, h_dot, h_ddot] = s.jet(t);
        let geo = Geometry::new(h, h_dot, h_ddot);
        let (x, x_dot) = (geo.h.x, geo.h_dot.x);
        // σ_y part of K₀ and its rate: ±Θ̇₀/2 and ±Θ̈₀/2
        let (y, y_dot) = (geo.coupling().y, geo.coupling_dot().y);
        let phi = (y / x).atan() + self.branch;
        let phi_dot = (x * y_dot - y * x_dot) / (x * x + y * y);
        ZRotationPoint { phi, phi_dot, p: x.hypot(y), z: geo.h.z - 0.5 * phi_dot }
    }

    pub fn phi(&self, t: f64) -> f64 {
        self.point(t).phi
    }
}

impl FrameGenerator for ZRotation {
    fn unitary(&self, t: f64) -> Unitary2 {
        Unitary2::z_rotation(self.phi(t))
    }
    fn generator(&self, t: f64) -> Su2Coords {
        Su2Coords::new(0.0, 0.0, 0.5 * self.point(t).phi_dot)
    }
}

/// The rotated shortcut `Pσ_x + (Z₀ − φ̇/2)σ_z`.
#[derive(Clone, Debug)]
pub struct ZRotShortcut {
    rotation: ZRotation,
}

impl ZRotShortcut {
    pub fn rotation(&self) -> &ZRotation {
        &self.rotation
    }
}

impl Hamiltonian for ZRotShortcut {
    fn coords(&self, t: f64) -> Su2Coords {
        let p = self.rotation.point(t);
        Su2Coords::new(p.p, 0.0, p.z)
    }
}

impl DriveSchedule for ZRotShortcut {
    fn duration(&self) -> f64 {
        self.rotation.schedule.duration()
    }
}

/// Builds the `σ_y`-free shortcut from the adiabatic frame of a drive with
/// `Y₀ ≡ 0`.
pub fn z_rotation_shortcut(frame0: &AdiabaticFrame) -> Result<ZRotShortcut> {
    let rotation = ZRotation::new(Arc::clone(frame0.schedule()), frame0.grid().len())?;
    Ok(ZRotShortcut { rotation })
}

/// Accumulated phase `θ(t) = ∫₀ᵗ ω`.
#[derive(Clone)]
pub enum Phase {
    Constant(f64),
    Tabulated { omega: Arc<dyn Fn(f64) -> f64 + Send + Sync>, table: Arc<CumulativeIntegral> },
}

impl fmt::Debug for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Phase::Constant(w) => write!(f, "Phase::Constant({w})"),
            Phase::Tabulated { table, .. } => write!(f, "Phase::Tabulated({} nodes)", table.node_values().len()),
        }
    }
}

impl Phase {
    pub fn omega(&self, t: f64) -> f64 {
        match self {
            Phase::Constant(w) => *w,
            Phase::Tabulated { omega, .. } => omega(t),
        }
    }

    pub fn theta(&self, t: f64) -> f64 {
        match self {
            Phase::Constant(w) => w * t,
            Phase::Tabulated { table, .. } => table.eval(t),
        }
    }
}

/// `U = diag(e^{iθ/2}, e^{−iθ/2})` with `K = −(ω/2)σ_z`.
#[derive(Clone, Debug)]
pub struct LabRotation {
    phase: Phase,
}

impl LabRotation {
    /// Constant angular frequency, `θ = ω t`.
    pub fn constant(omega: f64) -> Self {
        Self { phase: Phase::Constant(omega) }
    }

    /// Time-dependent frequency integrated on `[0, t_f]`.
    pub fn new<W>(omega: W, t_f: f64, nodes: usize) -> Self
    where
        W: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let scale = (0..=16).map(|k| omega(t_f * k as f64 / 16.0).abs()).fold(0.0, f64::max) * t_f;
        let table = CumulativeIntegral::build(&omega, 0.0, t_f, nodes.max(2), 1e-15 * scale.max(1e-300));
        Self { phase: Phase::Tabulated { omega: Arc::new(omega), table: Arc::new(table) } }
    }

    pub fn phase(&self) -> &Phase {
        &self.phase
    }
}

impl FrameGenerator for LabRotation {
    fn unitary(&self, t: f64) -> Unitary2 {
        Unitary2::z_rotation(-self.phase.theta(t))
    }
    fn generator(&self, t: f64) -> Su2Coords {
        Su2Coords::new(0.0, 0.0, -0.5 * self.phase.omega(t))
    }
}

/// Laboratory-frame atom Hamiltonian `K_L + U_L H U_L†` for a
/// rotating-frame Hamiltonian `H`.
#[derive(Clone)]
pub struct LabFrameHamiltonian {
    rotating: Arc<dyn Hamiltonian>,
    rotation: LabRotation,
    omega0: f64,
}

impl fmt::Debug for LabFrameHamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LabFrameHamiltonian")
            .field("omega0", &self.omega0)
            .field("rotation", &self.rotation)
            .finish()
    }
}

impl LabFrameHamiltonian {
    pub fn new(rotating: Arc<dyn Hamiltonian>, rotation: LabRotation, omega0: f64) -> Self {
        Self { rotating, rotation, omega0 }
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    /// Frame mapping this Hamiltonian back to the rotating frame.
    pub fn rotation(&self) -> &LabRotation {
        &self.rotation
    }

    pub fn rotating(&self) -> &Arc<dyn Hamiltonian> {
        &self.rotating
    }

    pub fn theta(&self, t: f64) -> f64 {
        self.rotation.phase.theta(t)
    }

    pub fn matrix(&self, t: f64) -> Mat2 {
        self.coords(t).to_matrix()
    }
}

impl Hamiltonian for LabFrameHamiltonian {
    fn coords(&self, t: f64) -> Su2Coords {
        let u = self.rotation.unitary(t);
        self.rotation.generator(t) + u.transform(self.rotating.coords(t))
    }
}

fn check_carrier<W: Fn(f64) -> f64>(omega: &W, t_f: f64) -> Result<()> {
    for k in 0..=1000 {
        let t = t_f * k as f64 / 1000.0;
        let w = omega(t);
        if !(w > 0.0) {
            return Err(Error::InvalidArgument(format!("laser frequency must stay positive (ω({t}) = {w})")));
        }
    }
    Ok(())
}

const PHASE_NODES: usize = 4001;

/// Two-level atom driven at Rabi frequency `Ω_R(t)` and detuning `Δ(t)`;
/// the laser frequency is `ω = ω₀ − Δ`. The rotating-frame Hamiltonian has
/// `X₀ = Ω_R/2`, `Z₀ = −Δ/2`.
pub fn rwa_lab_frame<R, D>(rabi: R, detuning: D, omega0: f64, t_f: f64) -> Result<LabFrameHamiltonian>
where
    R: Fn(f64) -> f64 + Send + Sync + 'static,
    D: Fn(f64) -> f64 + Send + Sync + 'static,
{
    let detuning = Arc::new(detuning);
    let d = Arc::clone(&detuning);
    let omega = move |t: f64| omega0 - d(t);
    check_carrier(&omega, t_f)?;
    let rotating = move |t: f64| Su2Coords::new(0.5 * rabi(t), 0.0, -0.5 * detuning(t));
    Ok(LabFrameHamiltonian::new(Arc::new(rotating), LabRotation::new(omega, t_f, PHASE_NODES), omega0))
}

/// Rotation to the laboratory frame for a rotating-frame drive
/// (`ω = ω₀ + 2Z₀`).
pub fn lab_rotation_for(schedule: &Arc<dyn DriveSchedule>, omega0: f64) -> Result<LabRotation> {
    let s = Arc::clone(schedule);
    let omega = move |t: f64| omega0 + 2.0 * s.coords(t).z;
    let t_f = schedule.duration();
    check_carrier(&omega, t_f)?;
    Ok(LabRotation::new(omega, t_f, PHASE_NODES))
}

/// Laboratory-frame version of a rotating-frame drive.
pub fn lab_frame_of(schedule: &Arc<dyn DriveSchedule>, omega0: f64) -> Result<LabFrameHamiltonian> {
    let rotation = lab_rotation_for(schedule, omega0)?;
    let rotating: Arc<dyn Hamiltonian> = Arc::new(Arc::clone(schedule));
    Ok(LabFrameHamiltonian::new(rotating, rotation, omega0))
}

/// `K_L + U_L (H₀ + K₀) U_L†`: two fields in quadrature on a chirped
/// carrier.
pub fn cd_lab_frame(frame0: &Arc<AdiabaticFrame>, omega0: f64) -> Result<LabFrameHamiltonian> {
    let rotation = lab_rotation_for(frame0.schedule(), omega0)?;
    let f = Arc::clone(frame0);
    let rotating = move |t: f64| f.schedule().coords(t) + f.coupling(t);
    Ok(LabFrameHamiltonian::new(Arc::new(rotating), rotation, omega0))
}

/// `K′ + U′ K₀ U′†` with `U′ = diag(e^{iω₀t/2}, e^{−iω₀t/2})`: the
/// counterdiabatic field alone on a resonant carrier.
pub fn resonant_cd_only(frame0: &Arc<AdiabaticFrame>, omega0: f64) -> LabFrameHamiltonian {
    let f = Arc::clone(frame0);
    let rotating = move |t: f64| f.coupling(t);
    LabFrameHamiltonian::new(Arc::new(rotating), LabRotation::constant(omega0), omega0)
}

/// `K_L + U_L K₀ U_L†`: the counterdiabatic field alone but on the chirped
/// carrier of the reference drive.
pub fn chirped_cd_only(frame0: &Arc<AdiabaticFrame>, omega0: f64) -> Result<LabFrameHamiltonian> {
    let rotation = lab_rotation_for(frame0.schedule(), omega0)?;
    let f = Arc::clone(frame0);
    let rotating = move |t: f64| f.coupling(t);
    Ok(LabFrameHamiltonian::new(Arc::new(rotating), rotation, omega0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adiabatic::{build_frame, cd_term_0, FrameOptions, Sum};
    use crate::propagator::{propagate, PropagatorOptions};
    use crate::schedules::{ConstantSchedule, FnSchedule, LzSchedule};
    use crate::schedules::theta_derivatives;
    use crate::su2::TwoLevelState;
    use approx::assert_relative_eq;

    fn lz_frame() -> Arc<AdiabaticFrame> {
        build_frame(LzSchedule::reference(), &FrameOptions::default()).unwrap()
    }

    fn check_generator<F: FrameGenerator>(frame: &F, times: &[f64], tol: f64) {
        for &t in times {
            let u = frame.unitary(t);
            assert!(u.unitarity_defect() < 1e-12);
            let fd = generator_by_differences(frame, t, 1e-4);
            let k = frame.generator(t).to_matrix();
            assert!((fd - k).max_abs() < tol, "t = {t}: {}", (fd - k).max_abs());
        }
    }

    #[test]
    fn identity_frame_is_transparent() {
        let h = |t: f64| Su2Coords::new(t, 1.0, -t);
        let hi = ip_transform(h, Identity);
        assert_eq!(hi.coords(0.3), h(0.3));
    }

    #[test]
    fn adiabatic_frame_freezes_cd0_drive() {
        let f0 = lz_frame();
        let hi = ip_transform(cd_term_0(&f0), Arc::clone(&f0));
        for t in [0.0, 0.5, 1.0, 1.7] {
            assert!(hi.coords(t).radius() < 1e-14);
        }
        let h1 = ip_transform(Arc::clone(f0.schedule()), Arc::clone(&f0));
        for t in [0.1, 1.0, 1.9] {
            assert!((h1.coords(t) - f0.next_coords(t)).radius() < 1e-10);
        }
    }

    #[test]
    fn frame_generators_match_differences() {
        let f0 = lz_frame();
        let times = [0.2, 0.9, 1.0, 1.3];
        check_generator(&Arc::clone(&f0), &times, 1e-8);
        let zr = z_rotation_shortcut(&f0).unwrap();
        check_generator(zr.rotation(), &times, 1e-8);
        let lab = lab_rotation_for(f0.schedule(), 100.0).unwrap();
        check_generator(&lab, &times, 1e-6);
        check_generator(&LabRotation::constant(3.0), &times, 1e-8);
        check_generator(&compose(lab.clone(), Arc::clone(&f0)), &times, 1e-6);
    }

    #[test]
    fn z_rotation_removes_sigma_y() {
        let f0 = lz_frame();
        let zr = z_rotation_shortcut(&f0).unwrap();
        let sum = Sum(Arc::clone(f0.schedule()), cd_term_0(&f0));
        let rotated = ip_transform(sum, zr.rotation().clone());
        for t in f0.grid().times().step_by(97) {
            let a = zr.coords(t);
            assert_eq!(a.y, 0.0);
            assert!((rotated.coords(t) - a).radius() < 1e-10, "t = {t}");
        }
        let mid = zr.rotation().point(1.0);
        assert_relative_eq!(mid.p, 26f64.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(mid.phi.abs(), 5f64.atan(), max_relative = 1e-12);
        // φ̇ against differences of φ
        let h = 1e-5;
        let fd = (zr.rotation().phi(1.0 + h) - zr.rotation().phi(1.0 - h)) / (2.0 * h);
        assert!((fd - mid.phi_dot).abs() < 1e-6);
        assert!((mid.z - (0.0 - 0.5 * mid.phi_dot)).abs() < 1e-12);
    }

    #[test]
    fn z_rotation_trivial_and_branch_errors() {
        let c = Su2Coords::new(0.7, 0.0, 0.2);
        let f0 = build_frame(ConstantSchedule { coords: c, duration: 1.0 }, &FrameOptions::default()).unwrap();
        let zr = z_rotation_shortcut(&f0).unwrap();
        assert_eq!(zr.rotation().phi(0.5), 0.0);
        assert!((zr.coords(0.5) - c).radius() < 1e-15);

        let neg = FnSchedule::new(2.0, |t| Su2Coords::new(-1.0, 0.0, 10.0 * (t - 1.0)));
        let f0 = build_frame(neg, &FrameOptions::default()).unwrap();
        let zr = z_rotation_shortcut(&f0).unwrap();
        let sum = Sum(Arc::clone(f0.schedule()), cd_term_0(&f0));
        let rotated = ip_transform(sum, zr.rotation().clone());
        for t in [0.0, 0.99, 1.0, 1.01, 2.0] {
            assert!((rotated.coords(t) - zr.coords(t)).radius() < 1e-9);
        }

        let crossing = FnSchedule::new(2.0, |t| Su2Coords::new(t - 1.0, 0.0, 1.0));
        let f0 = build_frame(crossing, &FrameOptions::default()).unwrap();
        assert!(matches!(z_rotation_shortcut(&f0).unwrap_err(), Error::PhaseBranch { .. }));
        let tilted = FnSchedule::new(1.0, |t| Su2Coords::new(1.0, t, 1.0));
        let f0 = build_frame(tilted, &FrameOptions::default()).unwrap();
        assert!(matches!(z_rotation_shortcut(&f0).unwrap_err(), Error::InvalidArgument(_)));
    }

    #[test]
    fn interaction_picture_reproduces_schrodinger_states() {
        let f0 = lz_frame();
        let opts = PropagatorOptions { tolerance: 1e-11, report_points: 201, ..Default::default() };
        let hs = Arc::clone(f0.schedule());
        let psi0 = TwoLevelState::bare(0);
        let s = propagate(&hs, psi0, 2.0, &opts).unwrap();
        let frame = Arc::clone(&f0);
        let hi = ip_transform(Arc::clone(&hs), Arc::clone(&frame));
        let i = propagate(&hi, frame.unitary(0.0).adjoint().apply(&psi0), 2.0, &opts).unwrap();
        for (k, &t) in s.times.iter().enumerate() {
            let back = frame.unitary(t).apply(&i.states[k]);
            assert!(back.distance(&s.states[k]) < 1e-7, "t = {t}");
        }
    }

    #[test]
    fn lab_frame_matrix_entries() {
        let lab = rwa_lab_frame(|t| 2.0 + t, |t| 0.5 * t, 50.0, 1.0).unwrap();
        for t in [0.0, 0.4, 1.0] {
            let m = lab.matrix(t);
            assert_relative_eq!(m.0[0][0].re, -25.0, epsilon = 1e-12);
            assert_relative_eq!(m.0[1][1].re, 25.0, epsilon = 1e-12);
            let theta = 50.0 * t - 0.25 * t * t;
            let expected = C64::from_polar(0.5 * (2.0 + t), theta);
            assert!((m.0[0][1] - expected).norm() < 1e-10, "t = {t}: {} vs {expected}", m.0[0][1]);
            assert!((m.0[1][0] - expected.conj()).norm() < 1e-10);
        }
        assert!(rwa_lab_frame(|_| 1.0, |_| 60.0, 50.0, 1.0).is_err());
    }

    #[test]
    fn cd_lab_frame_entries() {
        let f0 = lz_frame();
        let lab = cd_lab_frame(&f0, 100.0).unwrap();
        for t in [0.0, 0.6, 1.0, 2.0] {
            let m = lab.matrix(t);
            let th = theta_derivatives(f0.schedule().as_ref(), t, 0.0).unwrap();
            let rabi = 2.0 * f0.schedule().coords(t).x;
            let expected = C64::new(rabi, -th.theta_dot) * C64::from_polar(0.5, lab.theta(t));
            assert!((m.0[0][1] - expected).norm() < 1e-10, "t = {t}");
            assert!((m.0[0][0].re + 50.0).abs() < 1e-12);
            assert_relative_eq!(m.0[0][1].norm(), 0.5 * rabi.hypot(th.theta_dot), max_relative = 1e-12);
        }
        let plain = FnSchedule::new(1.0, |_| Su2Coords::new(0.4, 0.0, 0.3));
        let f0 = build_frame(plain, &FrameOptions::default()).unwrap();
        let cd = cd_lab_frame(&f0, 20.0).unwrap();
        let rwa = rwa_lab_frame(|_| 0.8, |_| -0.6, 20.0, 1.0).unwrap();
        for t in [0.1, 0.5, 0.9] {
            assert!((cd.coords(t) - rwa.coords(t)).radius() < 1e-12);
        }
    }

    #[test]
    fn resonant_cd_only_entries() {
        let f0 = lz_frame();
        let lab = resonant_cd_only(&f0, 100.0);
        for t in [0.0, 0.5, 1.0] {
            let m = lab.matrix(t);
            let th = theta_derivatives(f0.schedule().as_ref(), t, 0.0).unwrap();
            let expected = C64::new(0.0, -0.5 * th.theta_dot) * C64::from_polar(1.0, 100.0 * t);
            assert!((m.0[0][1] - expected).norm() < 1e-12);
            assert!((m.0[1][1].re - 50.0).abs() < 1e-12);
        }
    }

    #[test]
    fn resonant_rabi_oscillation() {
        let lab = rwa_lab_frame(|_| 2.0, |_| 0.0, 40.0, 3.0).unwrap();
        let opts = PropagatorOptions { tolerance: 1e-11, report_points: 31, ..Default::default() };
        let traj = propagate(&lab, TwoLevelState::bare(0), 3.0, &opts).unwrap();
        for (t, psi) in traj.times.iter().zip(&traj.states) {
            assert!((psi.populations().1 - t.sin().powi(2)).abs() < 1e-6, "t = {t}: {:?}", psi.populations());
        }
    }
}
