//! Norm-preserving propagation of two-level states.
//!
//! Each step applies the exact exponential of the Hamiltonian frozen at the
//! step midpoint, which is unitary to rounding for any step size and second
//! order accurate in time. Local error is estimated by comparing one full
//! step against two half steps; the half-step result is kept.

use crate::error::{Error, Result};
use crate::pictures::FrameGenerator;
use crate::schedules::Hamiltonian;
use crate::su2::{fidelity as state_fidelity, TwoLevelState, Unitary2};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PropagatorOptions {
    /// Absolute local error allowed per step (state-vector norm).
    pub tolerance: f64,
    /// Number of equally spaced report times including both endpoints.
    pub report_points: usize,
    /// Initial step; defaults to the report spacing.
    pub initial_step: Option<f64>,
    /// Steps shorter than this fraction of the duration abort the run.
    pub min_step_fraction: f64,
}

impl Default for PropagatorOptions {
    fn default() -> Self {
        Self { tolerance: 1e-10, report_points: 2001, initial_step: None, min_step_fraction: 1e-14 }
    }
}

impl PropagatorOptions {
    pub fn with_tolerance(tolerance: f64) -> Self {
        Self { tolerance, ..Self::default() }
    }
}

/// States at the report times of a propagation run.
#[derive(Clone, Debug)]
pub struct TwoLevelTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<TwoLevelState>,
    /// `max |‖ψ‖² − 1|` over the report times.
    pub norm_error: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl TwoLevelTrajectory {
    pub fn final_state(&self) -> TwoLevelState {
        *self.states.last().expect("trajectory has at least one state")
    }

    /// Bare populations `(P₁, P₂)` at every report time.
    pub fn populations(&self) -> Vec<(f64, f64)> {
        populations(self)
    }
}

pub fn populations(traj: &TwoLevelTrajectory) -> Vec<(f64, f64)> {
    traj.states.iter().map(TwoLevelState::populations).collect()
}

/// Populations in the moving basis `{U(t)|1⟩, U(t)|2⟩}` of a frame, e.g. the
/// tracked adiabatic eigenvectors of an [`AdiabaticFrame`](crate::adiabatic::AdiabaticFrame).
pub fn eigen_populations<F: FrameGenerator + ?Sized>(traj: &TwoLevelTrajectory, frame: &F) -> Vec<(f64, f64)> {
    traj.times
        .iter()
        .zip(&traj.states)
        .map(|(&t, psi)| frame.unitary(t).adjoint().apply(psi).populations())
        .collect()
}

/// `|⟨φ|ψ⟩|²`.
pub fn fidelity(psi: &TwoLevelState, phi: &TwoLevelState) -> f64 {
    state_fidelity(psi, phi)
}

/// One midpoint-exponential step from `t` to `t + dt`.
pub fn midpoint_step<H: Hamiltonian + ?Sized>(h: &H, t: f64, dt: f64, psi: &TwoLevelState) -> TwoLevelState {
    Unitary2::evolution(h.coords(t + 0.5 * dt), dt).apply(psi)
}

/// Fixed-step propagation over `[0, t_f]` in `steps` equal steps.
pub fn propagate_fixed<H: Hamiltonian + ?Sized>(h: &H, psi0: TwoLevelState, t_f: f64, steps: usize) -> TwoLevelState {
    let dt = t_f / steps as f64;
    (0..steps).fold(psi0, |psi, k| midpoint_step(h, k as f64 * dt, dt, &psi))
}

/// Adaptive propagation of `psi0` under `h` over `[0, t_f]`.
pub fn propagate<H: Hamiltonian + ?Sized>(
    h: &H,
    psi0: TwoLevelState,
    t_f: f64,
    opts: &PropagatorOptions,
) -> Result<TwoLevelTrajectory> {
    if !(t_f > 0.0) || !t_f.is_finite() {
        return Err(Error::InvalidArgument(format!("duration must be positive (got {t_f})")));
    }
    if !(opts.tolerance > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive (got {})", opts.tolerance)));
    }
    let n_report = opts.report_points.max(2);
    let report_time = |k: usize| if k + 1 == n_report { t_f } else { t_f * k as f64 / (n_report - 1) as f64 };
    let min_step = opts.min_step_fraction * t_f;

    let mut psi = psi0;
    let mut t = 0.0;
    let mut dt = opts.initial_step.unwrap_or(t_f / (n_report - 1) as f64);
    let mut times = Vec::with_capacity(n_report);
    let mut states = Vec::with_capacity(n_report);
    let mut norm_error = (psi.norm_sqr() - 1.0).abs();
    let (mut accepted, mut rejected) = (0usize, 0usize);
    times.push(0.0);
    states.push(psi);

    for k in 1..n_report {
        let target = report_time(k);
        while t < target {
            let remaining = target - t;
            let clipped = dt >= remaining;
            let step = if clipped { remaining } else { dt };
            let full = midpoint_step(h, t, step, &psi);
            let half = midpoint_step(h, t, 0.5 * step, &psi);
            let half = midpoint_step(h, t + 0.5 * step, 0.5 * step, &half);
            let err = full.distance(&half);
            if err <= opts.tolerance {
                psi = half;
                t = if clipped { target } else { t + step };
                accepted += 1;
                let grow = if err == 0.0 { 2.0 } else { (0.9 * (opts.tolerance / err).cbrt()).min(2.0) };
                if !clipped || grow < 1.0 {
                    dt = step * grow.max(0.5);
                }
            } else {
                rejected += 1;
                dt = 0.5 * step;
                if dt < min_step {
                    return Err(Error::StepUnderflow { t, step: dt, min_step });
                }
            }
        }
        norm_error = norm_error.max((psi.norm_sqr() - 1.0).abs());
        times.push(target);
        states.push(psi);
    }

    Ok(TwoLevelTrajectory { times, states, norm_error, accepted_steps: accepted, rejected_steps: rejected })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::su2::Su2Coords;
    use num_complex::Complex64 as C64;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    proptest! {
        #[test]
        fn steps_are_unitary(x in -50.0f64..50.0, y in -50.0f64..50.0, z in -50.0f64..50.0, w in -20.0f64..20.0, dt in 1e-6f64..2.0) {
            let h = move |t: f64| Su2Coords::new(x, y + w * t, z * (w * t).cos());
            let psi = midpoint_step(&h, 0.3, dt, &TwoLevelState::new(C64::new(0.6, 0.0), C64::new(0.0, 0.8)));
            prop_assert!((psi.norm_sqr() - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_hamiltonian_keeps_state() {
        let psi0 = TwoLevelState::new(C64::new(0.6, 0.0), C64::new(0.0, 0.8));
        let traj = propagate(&|_t: f64| Su2Coords::ZERO, psi0, 3.0, &PropagatorOptions::default()).unwrap();
        assert!(traj.states.iter().all(|s| s.distance(&psi0) < 1e-15));
        assert_eq!(traj.times.len(), 2001);
        assert_eq!(*traj.times.last().unwrap(), 3.0);
    }

    #[test]
    fn rabi_pi_pulse_inverts() {
        let h = |_t: f64| Su2Coords::new(PI / 2.0, 0.0, 0.0);
        let traj = propagate(&h, TwoLevelState::bare(0), 1.0, &PropagatorOptions::default()).unwrap();
        let (p1, p2) = traj.final_state().populations();
        assert!(p1 < 1e-14 && (p2 - 1.0).abs() < 1e-12, "{p1} {p2}");
        assert!((traj.final_state().0[1] - C64::new(0.0, -1.0)).norm() < 1e-12);
        // Rabi oscillation P₂(t) = sin²(πt/2)
        for (t, (_, p2)) in traj.times.iter().zip(traj.populations()) {
            assert!((p2 - (PI * t / 2.0).sin().powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn populations_of_simple_states() {
        assert_eq!(TwoLevelState::bare(0).populations(), (1.0, 0.0));
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let (a, b) = TwoLevelState::new(C64::new(h, 0.0), C64::new(0.0, h)).populations();
        assert!((a - 0.5).abs() < 1e-15 && (b - 0.5).abs() < 1e-15);
        assert_eq!(fidelity(&TwoLevelState::bare(0), &TwoLevelState::bare(0)), 1.0);
        assert_eq!(fidelity(&TwoLevelState::bare(0), &TwoLevelState::bare(1)), 0.0);
    }

    #[test]
    fn fidelity_symmetric_and_bounded() {
        let a = TwoLevelState::new(C64::new(0.3, 0.4), C64::new(0.5, -0.7)).normalized();
        let b = TwoLevelState::new(C64::new(-0.1, 0.9), C64::new(0.2, 0.1)).normalized();
        let f = fidelity(&a, &b);
        assert!((f - fidelity(&b, &a)).abs() < 1e-15);
        assert!((0.0..=1.0).contains(&f));
    }

    #[test]
    fn step_underflow_reported() {
        // variation far faster than the smallest allowed step can resolve
        let h = |t: f64| Su2Coords::new(1e4 * (1e8 * t).sin(), 0.0, 1e4);
        let opts = PropagatorOptions { tolerance: 1e-14, min_step_fraction: 1e-9, ..Default::default() };
        let err = propagate(&h, TwoLevelState::bare(0), 1.0, &opts).unwrap_err();
        assert!(matches!(err, Error::StepUnderflow { .. }));
    }

    #[test]
    fn adaptive_run_matches_fine_fixed_run() {
        // chirped drive with non-commuting components
        let h = |t: f64| Su2Coords::new(1.0 + 0.5 * (3.0 * t).sin(), 0.2 * t, 4.0 * (t - 1.0));
        let traj = propagate(&h, TwoLevelState::bare(0), 2.0, &PropagatorOptions::with_tolerance(1e-12)).unwrap();
        let reference = propagate_fixed(&h, TwoLevelState::bare(0), 2.0, 400_000);
        assert!(traj.final_state().distance(&reference) < 1e-8);
        assert!(traj.norm_error < 1e-12);
    }
}
