//! Harmonic-trap expansions on a one-dimensional grid.
//!
//! Three dynamics are propagated from the ground state of `ω̃(0)`:
//! the bare trap `p²/2m + mω̃²q²/2`, the same trap with the
//! counterdiabatic dilation term `−(pq+qp)ω̇̃/(4ω̃)`, and an ordinary
//! trap of frequency `ω̃′` that reproduces the counterdiabatic densities.

use std::fmt;
use std::io::{self, Write};
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OscillatorUnits {
    pub hbar: f64,
    pub mass: f64,
}

impl Default for OscillatorUnits {
    fn default() -> Self {
        Self { hbar: 1.0, mass: 1.0 }
    }
}

impl OscillatorUnits {
    /// Ground-state position spread `√(ħ/(2mω))`.
    pub fn ground_width(&self, omega: f64) -> f64 {
        (self.hbar / (2.0 * self.mass * omega)).sqrt()
    }
}

type RampFn = dyn Fn(f64) -> [f64; 3] + Send + Sync;

/// Trap frequency `ω̃(t)` on `[0, t_f]` with its first two derivatives.
#[derive(Clone)]
pub struct FrequencyRamp {
    duration: f64,
    eval: Arc<RampFn>,
}

impl fmt::Debug for FrequencyRamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FrequencyRamp")
            .field("duration", &self.duration)
            .field("start", &self.start())
            .field("end", &self.end())
            .finish()
    }
}

impl FrequencyRamp {
    /// Ramp from a function returning `[ω̃, ω̇̃, ω̈̃]`. Checks `ω̃ > 0` on a
    /// sample grid.
    pub fn from_fn<F>(duration: f64, f: F) -> Result<Self>
    where
        F: Fn(f64) -> [f64; 3] + Send + Sync + 'static,
    {
        if !(duration > 0.0) || !duration.is_finite() {
            return Err(Error::InvalidRamp(format!("duration must be positive (got {duration})")));
        }
        let ramp = Self { duration, eval: Arc::new(f) };
        for k in 0..=1000 {
            let t = duration * k as f64 / 1000.0;
            let w = ramp.omega(t);
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::InvalidRamp(format!("frequency must stay positive (ω({t}) = {w})")));
            }
        }
        Ok(ramp)
    }

    pub fn constant(omega: f64, duration: f64) -> Result<Self> {
        Self::from_fn(duration, move |_| [omega, 0.0, 0.0])
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn values(&self, t: f64) -> [f64; 3] {
        (self.eval)(t)
    }

    pub fn omega(&self, t: f64) -> f64 {
        self.values(t)[0]
    }

    pub fn omega_dot(&self, t: f64) -> f64 {
        self.values(t)[1]
    }

    pub fn omega_ddot(&self, t: f64) -> f64 {
        self.values(t)[2]
    }

    pub fn start(&self) -> f64 {
        self.omega(0.0)
    }

    pub fn end(&self) -> f64 {
        self.omega(self.duration)
    }

    /// Whether `ω̇̃` and `ω̈̃` vanish (to `tol`) at both endpoints.
    pub fn is_flat_ended(&self, tol: f64) -> bool {
        [0.0, self.duration].iter().all(|&t| {
            let [_, d, dd] = self.values(t);
            d.abs() <= tol && dd.abs() <= tol
        })
    }

    /// Largest relative mismatch between the supplied derivatives and
    /// five-point central differences on `samples` interior points.
    pub fn derivative_mismatch(&self, samples: usize) -> f64 {
        let h = 1e-4 * self.duration;
        let diff = |f: &dyn Fn(f64) -> f64, t: f64| {
            (f(t - 2.0 * h) - 8.0 * f(t - h) + 8.0 * f(t + h) - f(t + 2.0 * h)) / (12.0 * h)
        };
        let mut worst = 0.0f64;
        for k in 1..samples {
            let t = self.duration * k as f64 / samples as f64;
            let [w, d, dd] = self.values(t);
            let fd = diff(&|s| self.omega(s), t);
            let fdd = diff(&|s| self.omega_dot(s), t);
            let scale = w.abs() / self.duration;
            worst = worst.max((fd - d).abs() / (d.abs() + scale));
            worst = worst.max((fdd - dd).abs() / (dd.abs() + scale / self.duration));
        }
        worst
    }
}

/// Quintic smoothstep from `omega_start` to `omega_end` with vanishing first
/// and second derivatives at both ends.
pub fn make_ramp(omega_start: f64, omega_end: f64, t_f: f64) -> Result<FrequencyRamp> {
    if !(omega_start > 0.0) || !(omega_end > 0.0) || !omega_start.is_finite() || !omega_end.is_finite() {
        return Err(Error::InvalidRamp(format!(
            "endpoint frequencies must be positive (got {omega_start} and {omega_end})"
        )));
    }
    if !(t_f > 0.0) || !t_f.is_finite() {
        return Err(Error::InvalidRamp(format!("duration must be positive (got {t_f})")));
    }
    let delta = omega_end - omega_start;
    FrequencyRamp::from_fn(t_f, move |t| {
        let s = (t / t_f).clamp(0.0, 1.0);
        let s2 = s * s;
        let step = s2 * s * (10.0 - 15.0 * s + 6.0 * s2);
        let slope = 30.0 * s2 * (1.0 - s) * (1.0 - s);
        let curve = 60.0 * s * (1.0 - s) * (1.0 - 2.0 * s);
        [omega_start + delta * step, delta * slope / t_f, delta * curve / (t_f * t_f)]
    })
}

/// `ω̃′² = ω̃² − 3ω̇̃²/(4ω̃²) + ω̈̃/(2ω̃)`; may be negative.
pub fn omega_prime_sq(ramp: &FrequencyRamp, t: f64) -> f64 {
    let [w, d, dd] = ramp.values(t);
    w * w - 0.75 * d * d / (w * w) + 0.5 * dd / w
}

/// Scaling factor `b(t)` of the bare-trap Gaussian, from
/// `b̈ + ω̃²b = ω̃(0)²/b³`, `b(0) = 1`, `ḃ(0) = 0`.
#[derive(Clone, Debug)]
pub struct ErmakovSolution {
    ramp: FrequencyRamp,
    step: f64,
    b: Vec<f64>,
    b_dot: Vec<f64>,
}

pub fn ermakov_oracle(ramp: &FrequencyRamp, steps: usize) -> ErmakovSolution {
    let steps = steps.max(1);
    let w0 = ramp.start();
    let h = ramp.duration() / steps as f64;
    let rhs = |t: f64, y: [f64; 2]| {
        let w = ramp.omega(t);
        [y[1], w0 * w0 / y[0].powi(3) - w * w * y[0]]
    };
    let mut y = [1.0, 0.0];
    let mut b = Vec::with_capacity(steps + 1);
    let mut b_dot = Vec::with_capacity(steps + 1);
    b.push(y[0]);
    b_dot.push(y[1]);
    for k in 0..steps {
        let t = k as f64 * h;
        let k1 = rhs(t, y);
        let k2 = rhs(t + 0.5 * h, [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
        let k3 = rhs(t + 0.5 * h, [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
        let k4 = rhs(t + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
        for i in 0..2 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        b.push(y[0]);
        b_dot.push(y[1]);
    }
    ErmakovSolution { ramp: ramp.clone(), step: h, b, b_dot }
}

impl ErmakovSolution {
    fn b_ddot_at(&self, t: f64, b: f64) -> f64 {
        let w0 = self.ramp.start();
        let w = self.ramp.omega(t);
        w0 * w0 / b.powi(3) - w * w * b
    }

    /// `(b, ḃ)` at any `t` by quintic Hermite interpolation between steps.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let last = self.b.len() - 1;
        let k = ((t / self.step).floor().max(0.0) as usize).min(last - 1);
        let (t0, h) = (k as f64 * self.step, self.step);
        let s = ((t - t0) / h).clamp(0.0, 1.0);
        let (p0, p1) = (self.b[k], self.b[k + 1]);
        let (v0, v1) = (self.b_dot[k] * h, self.b_dot[k + 1] * h);
        let (a0, a1) = (self.b_ddot_at(t0, p0) * h * h, self.b_ddot_at(t0 + h, p1) * h * h);
        let (s2, s3) = (s * s, s * s * s);
        let (s4, s5) = (s3 * s, s3 * s2);
        let h0 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5;
        let h1 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
        let h2 = 0.5 * (s2 - 3.0 * s3 + 3.0 * s4 - s5);
        let h5 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;
        let h4 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5;
        let h3 = 0.5 * (s3 - 2.0 * s4 + s5);
        let value = h0 * p0 + h1 * v0 + h2 * a0 + h3 * a1 + h4 * v1 + h5 * p1;
        let d0 = -30.0 * s2 + 60.0 * s3 - 30.0 * s4;
        let d1 = 1.0 - 18.0 * s2 + 32.0 * s3 - 15.0 * s4;
        let d2 = 0.5 * (2.0 * s - 9.0 * s2 + 12.0 * s3 - 5.0 * s4);
        let d3 = 0.5 * (3.0 * s2 - 8.0 * s3 + 5.0 * s4);
        let d4 = -12.0 * s2 + 28.0 * s3 - 15.0 * s4;
        let d5 = -d0;
        let slope = (d0 * p0 + d1 * v0 + d2 * a0 + d3 * a1 + d4 * v1 + d5 * p1) / h;
        (value, slope)
    }

    pub fn b(&self, t: f64) -> f64 {
        self.eval(t).0
    }

    pub fn max_b(&self) -> f64 {
        self.b.iter().cloned().fold(0.0, f64::max)
    }

    /// Position spread of the bare-trap state at `t`.
    pub fn width(&self, t: f64, units: &OscillatorUnits) -> f64 {
        self.b(t) * units.ground_width(self.ramp.start())
    }

    /// `a` in `ψ ∝ exp(−a q²)` for the bare-trap state at `t`.
    pub fn gaussian_coefficient(&self, t: f64, units: &OscillatorUnits) -> C64 {
        let (b, bd) = self.eval(t);
        let m_over_2hbar = units.mass / (2.0 * units.hbar);
        C64::new(m_over_2hbar * self.ramp.start() / (b * b), -m_over_2hbar * bd / b)
    }

    /// `|⟨0_ω|ψ(t)⟩|²` for the ground state of a trap of frequency `omega`.
    pub fn ground_overlap(&self, t: f64, omega: f64, units: &OscillatorUnits) -> f64 {
        let a = self.gaussian_coefficient(t, units);
        let c = units.mass * omega / (2.0 * units.hbar);
        2.0 * (a.re * c).sqrt() / (a + c).norm()
    }
}

/// Periodic uniform grid `q_k = q_min + k·dq`, `k = 0..n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpatialGrid {
    q_min: f64,
    dq: f64,
    n: usize,
}

impl SpatialGrid {
    pub fn new(q_min: f64, q_max: f64, n: usize) -> Result<Self> {
        if n < 16 || n % 2 != 0 {
            return Err(Error::InvalidArgument(format!("grid needs an even number of points ≥ 16 (got {n})")));
        }
        if !(q_max > q_min) || !q_min.is_finite() || !q_max.is_finite() {
            return Err(Error::InvalidArgument(format!("empty box [{q_min}, {q_max}]")));
        }
        Ok(Self { q_min, dq: (q_max - q_min) / n as f64, n })
    }

    /// Symmetric box `[−half_width, half_width)`.
    pub fn symmetric(half_width: f64, n: usize) -> Result<Self> {
        Self::new(-half_width, half_width, n)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dq(&self) -> f64 {
        self.dq
    }

    pub fn q(&self, k: usize) -> f64 {
        self.q_min + k as f64 * self.dq
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |k| self.q(k))
    }

    /// Wave numbers in FFT order.
    pub fn wave_numbers(&self) -> Vec<f64> {
        let dk = 2.0 * std::f64::consts::PI / (self.n as f64 * self.dq);
        (0..self.n)
            .map(|k| if k < self.n / 2 { k as f64 * dk } else { (k as f64 - self.n as f64) * dk })
            .collect()
    }
}

/// Default box for a ramp: `±12σ_max` with `σ_max` 1.5 times the widest
/// spread among the bare-trap oracle and the instantaneous ground states.
pub fn grid_for_ramp(ramp: &FrequencyRamp, units: &OscillatorUnits, n: usize) -> Result<SpatialGrid> {
    let oracle = ermakov_oracle(ramp, 4000);
    let bare = oracle.max_b() * units.ground_width(ramp.start());
    let w_min = (0..=1000).map(|k| ramp.omega(ramp.duration() * k as f64 / 1000.0)).fold(f64::INFINITY, f64::min);
    let sigma_max = 1.5 * bare.max(units.ground_width(w_min));
    SpatialGrid::symmetric(12.0 * sigma_max, n)
}

/// Sampled wavefunction on a [`SpatialGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct GridWavefunction {
    pub grid: SpatialGrid,
    pub psi: Vec<C64>,
    pub t: f64,
}

/// `|φ₀(q)|²` for the ground state of a trap of frequency `omega`.
pub fn ground_density(q: f64, omega: f64, units: &OscillatorUnits) -> f64 {
    let s = units.ground_width(omega);
    (-(q * q) / (2.0 * s * s)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt())
}

impl GridWavefunction {
    /// Ground state of a trap of frequency `omega`, normalized on the grid.
    pub fn ground_state(grid: SpatialGrid, omega: f64, units: &OscillatorUnits) -> Self {
        let psi = grid.points().map(|q| C64::new(ground_density(q, omega, units).sqrt(), 0.0)).collect();
        let mut wf = Self { grid, psi, t: 0.0 };
        wf.normalize();
        wf
    }

    pub fn norm(&self) -> f64 {
        self.psi.iter().map(C64::norm_sqr).sum::<f64>() * self.grid.dq
    }

    pub fn normalize(&mut self) {
        let s = 1.0 / self.norm().sqrt();
        self.psi.iter_mut().for_each(|c| *c *= s);
    }

    pub fn density(&self) -> Vec<f64> {
        self.psi.iter().map(C64::norm_sqr).collect()
    }

    /// Largest amplitude on the two outermost points relative to the peak.
    pub fn edge_ratio(&self) -> f64 {
        let peak = self.psi.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let n = self.psi.len();
        let edge = [0, 1, n - 2, n - 1].iter().map(|&k| self.psi[k].norm()).fold(0.0, f64::max);
        edge / peak
    }

    /// `⟨self|other⟩`.
    pub fn overlap(&self, other: &Self) -> C64 {
        self.psi.iter().zip(&other.psi).map(|(a, b)| a.conj() * b).sum::<C64>() * self.grid.dq
    }

    pub fn l2_distance(&self, other: &Self) -> f64 {
        (self.psi.iter().zip(&other.psi).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() * self.grid.dq).sqrt()
    }

    /// `∫ |ρ − ρ′| dq`.
    pub fn density_l1(&self, other: &Self) -> f64 {
        self.psi.iter().zip(&other.psi).map(|(a, b)| (a.norm_sqr() - b.norm_sqr()).abs()).sum::<f64>() * self.grid.dq
    }

    /// `∫ |ρ − f| dq` against a density function.
    pub fn density_l1_to<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.grid.points().zip(&self.psi).map(|(q, c)| (c.norm_sqr() - f(q)).abs()).sum::<f64>() * self.grid.dq
    }

    /// Position spread `(⟨q²⟩ − ⟨q⟩²)^{1/2}`.
    pub fn width(&self) -> f64 {
        let n = self.norm();
        let (m1, m2) = self.grid.points().zip(&self.psi).fold((0.0, 0.0), |(a, b), (q, c)| {
            let r = c.norm_sqr();
            (a + q * r, b + q * q * r)
        });
        let (m1, m2) = (m1 * self.grid.dq / n, m2 * self.grid.dq / n);
        (m2 - m1 * m1).sqrt()
    }

    /// Columns `q, Re ψ, Im ψ, |ψ|²`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "q,re,im,density")?;
        for (q, c) in self.grid.points().zip(&self.psi) {
            writeln!(w, "{:.16e},{:.16e},{:.16e},{:.16e}", q, c.re, c.im, c.norm_sqr())?;
        }
        Ok(())
    }
}

/// Dynamics propagated by [`propagate_grid`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TrapProtocol {
    /// `p²/2m + mω̃²q²/2`.
    Reference,
    /// Reference plus `−(pq+qp)ω̇̃/(4ω̃)`.
    Counterdiabatic,
    /// `p²/2m + mω̃′²q²/2`.
    ModifiedFrequency,
}

impl TrapProtocol {
    pub const ALL: [TrapProtocol; 3] = [Self::Reference, Self::Counterdiabatic, Self::ModifiedFrequency];

    pub fn name(self) -> &'static str {
        match self {
            Self::Reference => "reference",
            Self::Counterdiabatic => "cd",
            Self::ModifiedFrequency => "modified",
        }
    }
}

/// How the dilation term of the counterdiabatic run is applied.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DilationScheme {
    /// Absorbed into the kinetic substep: `(p − mκq)²/2m` is diagonalized by
    /// the chirp `e^{imκq²/2ħ}`, `κ = ω̇̃/(2ω̃)`, so the substep stays
    /// spectral.
    Chirp,
    /// Separate substep `ψ(q) → e^{−λ/2}ψ(e^{−λ}q)` by cubic-spline
    /// resampling.
    SplineResample,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridOptions {
    pub steps: usize,
    /// Keep every `snapshot_every`-th state (the final state is always kept).
    pub snapshot_every: usize,
    pub units: OscillatorUnits,
    pub dilation: DilationScheme,
    pub max_norm_drift: f64,
    pub max_edge_ratio: f64,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self {
            steps: 4000,
            snapshot_every: 40,
            units: OscillatorUnits::default(),
            dilation: DilationScheme::Chirp,
            max_norm_drift: 1e-6,
            max_edge_ratio: 1e-6,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GridRun {
    pub protocol: TrapProtocol,
    pub snapshots: Vec<GridWavefunction>,
    pub max_norm_drift: f64,
}

impl GridRun {
    pub fn final_state(&self) -> &GridWavefunction {
        self.snapshots.last().expect("run keeps the final state")
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }
}

struct Spectral {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<C64>,
    scale: f64,
}

impl Spectral {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        Self { forward, inverse, scratch: vec![C64::new(0.0, 0.0); len], scale: 1.0 / n as f64 }
    }

    fn apply(&mut self, psi: &mut [C64], phases: &[C64]) {
        self.forward.process_with_scratch(psi, &mut self.scratch);
        for (c, p) in psi.iter_mut().zip(phases) {
            *c *= p * self.scale;
        }
        self.inverse.process_with_scratch(psi, &mut self.scratch);
    }
}

fn multiply_phase(psi: &mut [C64], grid: &SpatialGrid, coeff: f64) {
    for (k, c) in psi.iter_mut().enumerate() {
        let q = grid.q(k);
        *c *= C64::from_polar(1.0, coeff * q * q);
    }
}

/// Propagates `psi0` over the ramp with a symmetric second-order splitting:
/// half kinetic step, full potential step, half kinetic step, with the
/// Hamiltonian frozen at the step midpoint.
pub fn propagate_grid(
    protocol: TrapProtocol,
    ramp: &FrequencyRamp,
    psi0: &GridWavefunction,
    opts: &GridOptions,
) -> Result<GridRun> {
    if opts.steps == 0 {
        return Err(Error::InvalidArgument("at least one time step is needed".into()));
    }
    let grid = psi0.grid;
    let OscillatorUnits { hbar, mass } = opts.units;
    let dt = ramp.duration() / opts.steps as f64;
    let half_kinetic: Vec<C64> = grid
        .wave_numbers()
        .iter()
        .map(|k| C64::from_polar(1.0, -0.5 * dt * hbar * k * k / (2.0 * mass)))
        .collect();
    let mut fft = Spectral::new(grid.len());
    let every = opts.snapshot_every.max(1);

    let mut psi = psi0.psi.clone();
    let norm0 = psi0.norm();
    let mut snapshots = vec![GridWavefunction { grid, psi: psi.clone(), t: 0.0 }];
    let mut max_drift = 0.0f64;
    let mut resample = Vec::new();

    for step in 0..opts.steps {
        let t_mid = (step as f64 + 0.5) * dt;
        let [w, wd, _] = ramp.values(t_mid);
        let spring = match protocol {
            TrapProtocol::Reference => w * w,
            TrapProtocol::ModifiedFrequency => omega_prime_sq(ramp, t_mid),
            TrapProtocol::Counterdiabatic => match opts.dilation {
                DilationScheme::Chirp => w * w - wd * wd / (4.0 * w * w),
                DilationScheme::SplineResample => w * w,
            },
        };
        // U_q-type chirp that removes the cross term from (p − mκq)²
        let chirp = mass * wd / (4.0 * hbar * w);
        let lambda = -wd * dt / (2.0 * w);
        let cd = protocol == TrapProtocol::Counterdiabatic;

        if cd && opts.dilation == DilationScheme::SplineResample {
            dilate(&mut psi, &grid, 0.5 * lambda, &mut resample);
        }
        let kinetic = |psi: &mut Vec<C64>, fft: &mut Spectral| {
            if cd && opts.dilation == DilationScheme::Chirp {
                multiply_phase(psi, &grid, -chirp);
                fft.apply(psi, &half_kinetic);
                multiply_phase(psi, &grid, chirp);
            } else {
                fft.apply(psi, &half_kinetic);
            }
        };
        kinetic(&mut psi, &mut fft);
        multiply_phase(&mut psi, &grid, -0.5 * mass * spring * dt / hbar);
        kinetic(&mut psi, &mut fft);
        if cd && opts.dilation == DilationScheme::SplineResample {
            dilate(&mut psi, &grid, 0.5 * lambda, &mut resample);
        }

        let t = if step + 1 == opts.steps { ramp.duration() } else { (step + 1) as f64 * dt };
        let state = GridWavefunction { grid, psi: psi.clone(), t };
        let drift = (state.norm() - norm0).abs();
        max_drift = max_drift.max(drift);
        if drift > opts.max_norm_drift {
            return Err(Error::NormDrift { t, drift });
        }
        let ratio = state.edge_ratio();
        if ratio > opts.max_edge_ratio {
            return Err(Error::BoxOverflow { t, ratio });
        }
        if (step + 1) % every == 0 || step + 1 == opts.steps {
            snapshots.push(state);
        }
    }
    Ok(GridRun { protocol, snapshots, max_norm_drift: max_drift })
}

/// `ψ(q) → e^{−λ/2} ψ(e^{−λ}q)`, i.e. `exp[−iλ(pq+qp)/(2ħ)]`.
fn dilate(psi: &mut [C64], grid: &SpatialGrid, lambda: f64, work: &mut Vec<C64>) {
    let spline = NaturalSpline::new(psi, grid);
    let factor = (-lambda).exp();
    let amp = (-0.5 * lambda).exp();
    work.clear();
    work.extend((0..grid.len()).map(|k| spline.eval(grid.q(k) * factor) * amp));
    psi.copy_from_slice(work);
}

/// Natural cubic spline through complex samples on a uniform grid; zero
/// outside the sampled range.
struct NaturalSpline<'a> {
    values: &'a [C64],
    second: Vec<C64>,
    q_min: f64,
    dq: f64,
}

impl<'a> NaturalSpline<'a> {
    fn new(values: &'a [C64], grid: &SpatialGrid) -> Self {
        let n = values.len();
        let h = grid.dq;
        // tridiagonal system for interior second derivatives (Thomas algorithm)
        let mut second = vec![C64::new(0.0, 0.0); n];
        let mut c_prime = vec![0.0; n];
        let mut d_prime = vec![C64::new(0.0, 0.0); n];
        for i in 1..n - 1 {
            let rhs = (values[i + 1] - values[i] * 2.0 + values[i - 1]) * (6.0 / (h * h));
            let denom = 4.0 - c_prime[i - 1];
            c_prime[i] = 1.0 / denom;
            d_prime[i] = (rhs - d_prime[i - 1]) / denom;
        }
        for i in (1..n - 1).rev() {
            second[i] = d_prime[i] - second[i + 1] * c_prime[i];
        }
        Self { values, second, q_min: grid.q_min, dq: h }
    }

    fn eval(&self, q: f64) -> C64 {
        let x = (q - self.q_min) / self.dq;
        let n = self.values.len();
        if x < 0.0 || x > (n - 1) as f64 {
            return C64::new(0.0, 0.0);
        }
        let i = (x.floor() as usize).min(n - 2);
        let b = x - i as f64;
        let a = 1.0 - b;
        let h2 = self.dq * self.dq / 6.0;
        self.values[i] * a
            + self.values[i + 1] * b
            + (self.second[i] * (a * a * a - a) + self.second[i + 1] * (b * b * b - b)) * h2
    }
}

/// Direction of the `U_q` map.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MapDirection {
    /// `ψ → U_q ψ` (modified-frequency frame to laboratory frame).
    Forward,
    /// `ψ → U_q† ψ`.
    Backward,
}

/// Multiplies by `U_q^{±1} = exp(±i mω̇̃q²/(4ħω̃))` at time `t`.
pub fn u_q_map(
    psi: &GridWavefunction,
    ramp: &FrequencyRamp,
    t: f64,
    direction: MapDirection,
    units: &OscillatorUnits,
) -> GridWavefunction {
    let [w, wd, _] = ramp.values(t);
    let sign = if direction == MapDirection::Forward { 1.0 } else { -1.0 };
    let mut out = psi.clone();
    multiply_phase(&mut out.psi, &psi.grid, sign * units.mass * wd / (4.0 * units.hbar * w));
    out
}

/// Populations of the lowest eigenstates of a target trap.
#[derive(Clone, Debug, PartialEq)]
pub struct Excitation {
    pub populations: Vec<f64>,
    /// `Σ Pₙ`.
    pub captured: f64,
    /// `⟨H⟩` of the target trap evaluated on the grid.
    pub mean_energy: f64,
}

impl Excitation {
    pub fn ground(&self) -> f64 {
        self.populations[0]
    }
}

pub const DEFAULT_LEVELS: usize = 32;

/// Projects onto the lowest `levels` Hermite functions of a trap of
/// frequency `omega`.
pub fn final_excitation(
    psi: &GridWavefunction,
    omega: f64,
    units: &OscillatorUnits,
    levels: usize,
) -> Result<Excitation> {
    if levels == 0 {
        return Err(Error::InvalidArgument("need at least one level".into()));
    }
    let grid = psi.grid;
    let scale = (units.mass * omega / units.hbar).sqrt();
    let norm = scale.sqrt() / std::f64::consts::PI.powf(0.25);
    let mut amps = vec![C64::new(0.0, 0.0); levels];
    for (k, c) in psi.psi.iter().enumerate() {
        let x = grid.q(k) * scale;
        let mut prev = 0.0;
        let mut cur = norm * (-0.5 * x * x).exp();
        for (n, amp) in amps.iter_mut().enumerate() {
            *amp += c * cur;
            let next = (2.0 / (n as f64 + 1.0)).sqrt() * x * cur - (n as f64 / (n as f64 + 1.0)).sqrt() * prev;
            prev = cur;
            cur = next;
        }
    }
    let populations: Vec<f64> = amps.iter().map(|a| (a * grid.dq).norm_sqr()).collect();
    let captured: f64 = populations.iter().sum();
    if captured < 1.0 - 1e-6 {
        return Err(Error::IncompleteBasis { levels, captured });
    }

    // ⟨H⟩ with the kinetic part evaluated spectrally
    let mut spectrum = psi.psi.clone();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(grid.len()).process(&mut spectrum);
    let ks = grid.wave_numbers();
    let total: f64 = spectrum.iter().map(C64::norm_sqr).sum();
    let kinetic = spectrum.iter().zip(&ks).map(|(c, k)| c.norm_sqr() * k * k).sum::<f64>() / total
        * units.hbar
        * units.hbar
        / (2.0 * units.mass);
    let q2 = grid.points().zip(&psi.psi).map(|(q, c)| q * q * c.norm_sqr()).sum::<f64>() * grid.dq / psi.norm();
    let mean_energy = kinetic + 0.5 * units.mass * omega * omega * q2;
    Ok(Excitation { populations, captured, mean_energy })
}
