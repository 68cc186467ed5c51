//! Time-parameterized two-level Hamiltonians with first and second time
//! derivatives.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::su2::Su2Coords;

/// Relative finite-difference step used when a schedule does not supply
/// analytic derivatives.
pub const FD_STEP: f64 = 1e-5;

/// A time-dependent traceless Hamiltonian `H(t) = X σx + Y σy + Z σz`.
pub trait Hamiltonian: Send + Sync {
    fn coords(&self, t: f64) -> Su2Coords;
}

impl<F> Hamiltonian for F
where
    F: Fn(f64) -> Su2Coords + Send + Sync,
{
    fn coords(&self, t: f64) -> Su2Coords {
        self(t)
    }
}

impl<H: Hamiltonian + ?Sized> Hamiltonian for Arc<H> {
    fn coords(&self, t: f64) -> Su2Coords {
        (**self).coords(t)
    }
}

/// A Hamiltonian trajectory on `[0, duration]` with time derivatives.
///
/// Implementations must be evaluable slightly outside the interval (a few
/// finite-difference steps) since derivative fallbacks use central
/// differences. The default derivatives are Richardson-refined central
/// differences with step `FD_STEP · duration`.
pub trait DriveSchedule: Hamiltonian {
    fn duration(&self) -> f64;

    fn coords_dot(&self, t: f64) -> Su2Coords {
        richardson(&|s| self.coords(s), t, FD_STEP * self.duration())
    }

    fn coords_ddot(&self, t: f64) -> Su2Coords {
        richardson(&|s| self.coords_dot(s), t, FD_STEP * self.duration())
    }

    /// `(H, Ḣ)` at once; override when the two share work.
    fn coords_with_dot(&self, t: f64) -> (Su2Coords, Su2Coords) {
        (self.coords(t), self.coords_dot(t))
    }

    /// `[H, Ḣ, Ḧ]` at once.
    fn jet(&self, t: f64) -> [Su2Coords; 3] {
        let (h, h_dot) = self.coords_with_dot(t);
        [h, h_dot, self.coords_ddot(t)]
    }

    /// Depth in a superadiabatic chain (0 for a laboratory schedule).
    fn level(&self) -> usize {
        0
    }
}

impl<S: DriveSchedule + ?Sized> DriveSchedule for Arc<S> {
    fn duration(&self) -> f64 {
        (**self).duration()
    }
    fn coords_dot(&self, t: f64) -> Su2Coords {
        (**self).coords_dot(t)
    }
    fn coords_ddot(&self, t: f64) -> Su2Coords {
        (**self).coords_ddot(t)
    }
    fn coords_with_dot(&self, t: f64) -> (Su2Coords, Su2Coords) {
        (**self).coords_with_dot(t)
    }
    fn jet(&self, t: f64) -> [Su2Coords; 3] {
        (**self).jet(t)
    }
    fn level(&self) -> usize {
        (**self).level()
    }
}

/// Central difference refined once by Richardson extrapolation (O(h⁴)).
pub fn richardson<F: Fn(f64) -> Su2Coords>(f: &F, t: f64, h: f64) -> Su2Coords {
    let d = |h: f64| (0.5 / h) * (f(t + h) - f(t - h));
    let coarse = d(h);
    let fine = d(0.5 * h);
    (1.0 / 3.0) * (4.0 * fine - coarse)
}

/// Largest radius over `samples` uniformly spaced times.
pub fn energy_scale<S: DriveSchedule + ?Sized>(s: &S, samples: usize) -> f64 {
    let n = samples.max(2);
    (0..n)
        .map(|k| s.coords(s.duration() * k as f64 / (n - 1) as f64).radius())
        .fold(0.0, f64::max)
}

/// Landau–Zener sweep: `X = x0`, `Y = 0`, `Z = α (t − T/2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LzSchedule {
    pub alpha: f64,
    pub x0: f64,
    pub duration: f64,
}

impl LzSchedule {
    pub fn new(alpha: f64, x0: f64, duration: f64) -> Result<Self> {
        if x0 == 0.0 || !x0.is_finite() {
            return Err(Error::InvalidSchedule(format!(
                "LZ coupling x0 must be nonzero and finite (got {x0}); x0 = 0 makes the crossing an exact degeneracy"
            )));
        }
        if !(duration > 0.0) || !duration.is_finite() {
            return Err(Error::InvalidSchedule(format!("duration must be positive (got {duration})")));
        }
        if !alpha.is_finite() {
            return Err(Error::InvalidSchedule(format!("sweep rate must be finite (got {alpha})")));
        }
        Ok(Self { alpha, x0, duration })
    }

    /// The sweep of the reference figures: `α = −10`, `T = 20/|α|`, `X₀ = 1`.
    pub fn reference() -> Self {
        Self { alpha: -10.0, x0: 1.0, duration: 2.0 }
    }
}

/// Convenience constructor matching `lz_schedule(α, x0, T)`.
pub fn lz_schedule(alpha: f64, x0: f64, duration: f64) -> Result<LzSchedule> {
    LzSchedule::new(alpha, x0, duration)
}

impl Hamiltonian for LzSchedule {
    fn coords(&self, t: f64) -> Su2Coords {
        Su2Coords::new(self.x0, 0.0, self.alpha * (t - 0.5 * self.duration))
    }
}

impl DriveSchedule for LzSchedule {
    fn duration(&self) -> f64 {
        self.duration
    }
    fn coords_dot(&self, _t: f64) -> Su2Coords {
        Su2Coords::new(0.0, 0.0, self.alpha)
    }
    fn coords_ddot(&self, _t: f64) -> Su2Coords {
        Su2Coords::ZERO
    }
}

/// Time-independent Hamiltonian over a fixed duration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstantSchedule {
    pub coords: Su2Coords,
    pub duration: f64,
}

impl Hamiltonian for ConstantSchedule {
    fn coords(&self, _t: f64) -> Su2Coords {
        self.coords
    }
}

impl DriveSchedule for ConstantSchedule {
    fn duration(&self) -> f64 {
        self.duration
    }
    fn coords_dot(&self, _t: f64) -> Su2Coords {
        Su2Coords::ZERO
    }
    fn coords_ddot(&self, _t: f64) -> Su2Coords {
        Su2Coords::ZERO
    }
}

/// One Cartesian component as a truncated Fourier series in `t / duration`:
/// `c(t) = offset + slope·t + Σₖ aₖ cos(2πk t/T) + bₖ sin(2πk t/T)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FourierComponent {
    pub offset: f64,
    pub slope: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl FourierComponent {
    pub fn constant(v: f64) -> Self {
        Self { offset: v, ..Default::default() }
    }

    fn modes(&self) -> usize {
        self.cos.len().max(self.sin.len())
    }

    /// Value and first two derivatives, given `(sin kwt, cos kwt)` for
    /// `k = 1, 2, …`.
    fn eval(&self, t: f64, w: f64, harmonics: &[(f64, f64)]) -> [f64; 3] {
        let mut out = [self.offset + self.slope * t, self.slope, 0.0];
        for (k, &(s, c)) in harmonics.iter().enumerate().take(self.modes()) {
            let a = self.cos.get(k).copied().unwrap_or(0.0);
            let b = self.sin.get(k).copied().unwrap_or(0.0);
            let kw = (k + 1) as f64 * w;
            out[0] += a * c + b * s;
            out[1] += kw * (-a * s + b * c);
            out[2] += -kw * kw * (a * c + b * s);
        }
        out
    }
}

/// A smooth user schedule with analytic derivatives, each component a
/// [`FourierComponent`]. Used for randomized property tests and as a
/// template for pluggable schedules.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierSchedule {
    pub x: FourierComponent,
    pub y: FourierComponent,
    pub z: FourierComponent,
    pub duration: f64,
}

impl FourierSchedule {
    fn eval(&self, t: f64) -> [Su2Coords; 3] {
        let w = 2.0 * std::f64::consts::PI / self.duration;
        let modes = self.x.modes().max(self.y.modes()).max(self.z.modes());
        // one sin_cos, higher harmonics by angle addition
        let base = (w * t).sin_cos();
        let mut harmonics = Vec::with_capacity(modes);
        let mut cur = base;
        for _ in 0..modes {
            harmonics.push(cur);
            cur = (cur.0 * base.1 + cur.1 * base.0, cur.1 * base.1 - cur.0 * base.0);
        }
        let x = self.x.eval(t, w, &harmonics);
        let y = self.y.eval(t, w, &harmonics);
        let z = self.z.eval(t, w, &harmonics);
        [0, 1, 2].map(|k| Su2Coords::new(x[k], y[k], z[k]))
    }
}

impl Hamiltonian for FourierSchedule {
    fn coords(&self, t: f64) -> Su2Coords {
        self.eval(t)[0]
    }
}

impl DriveSchedule for FourierSchedule {
    fn duration(&self) -> f64 {
        self.duration
    }
    fn coords_dot(&self, t: f64) -> Su2Coords {
        self.eval(t)[1]
    }
    fn coords_ddot(&self, t: f64) -> Su2Coords {
        self.eval(t)[2]
    }
    fn coords_with_dot(&self, t: f64) -> (Su2Coords, Su2Coords) {
        let [h, h_dot, _] = self.eval(t);
        (h, h_dot)
    }
    fn jet(&self, t: f64) -> [Su2Coords; 3] {
        self.eval(t)
    }
}

type CoordFn = Arc<dyn Fn(f64) -> Su2Coords + Send + Sync>;

/// A schedule from closures; derivatives fall back to finite differences
/// unless supplied.
#[derive(Clone)]
pub struct FnSchedule {
    duration: f64,
    f: CoordFn,
    df: Option<CoordFn>,
    ddf: Option<CoordFn>,
}

impl FnSchedule {
    pub fn new<F>(duration: f64, f: F) -> Self
    where
        F: Fn(f64) -> Su2Coords + Send + Sync + 'static,
    {
        Self { duration, f: Arc::new(f), df: None, ddf: None }
    }

    pub fn with_first_derivative<F>(mut self, df: F) -> Self
    where
        F: Fn(f64) -> Su2Coords + Send + Sync + 'static,
    {
        self.df = Some(Arc::new(df));
        self
    }

    pub fn with_second_derivative<F>(mut self, ddf: F) -> Self
    where
        F: Fn(f64) -> Su2Coords + Send + Sync + 'static,
    {
        self.ddf = Some(Arc::new(ddf));
        self
    }
}

impl std::fmt::Debug for FnSchedule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FnSchedule")
            .field("duration", &self.duration)
            .field("analytic_dot", &self.df.is_some())
            .field("analytic_ddot", &self.ddf.is_some())
            .finish()
    }
}

impl Hamiltonian for FnSchedule {
    fn coords(&self, t: f64) -> Su2Coords {
        (self.f)(t)
    }
}

impl DriveSchedule for FnSchedule {
    fn duration(&self) -> f64 {
        self.duration
    }
    fn coords_dot(&self, t: f64) -> Su2Coords {
        match &self.df {
            Some(df) => df(t),
            None => richardson(&|s| (self.f)(s), t, FD_STEP * self.duration),
        }
    }
    fn coords_ddot(&self, t: f64) -> Su2Coords {
        match &self.ddf {
            Some(ddf) => ddf(t),
            None => richardson(&|s| self.coords_dot(s), t, FD_STEP * self.duration),
        }
    }
}

/// Polar angle of the Hamiltonian vector and its first two time derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThetaDerivatives {
    pub theta: f64,
    pub theta_dot: f64,
    pub theta_ddot: f64,
}

/// `Θ = atan2(√(X²+Y²), Z)` and its derivatives by the chain rule.
///
/// Requires `R(t)` above `tol` and, for the derivatives to be finite,
/// `sin Θ ≠ 0`.
pub fn theta_derivatives<S: DriveSchedule + ?Sized>(s: &S, t: f64, tol: f64) -> Result<ThetaDerivatives> {
    theta_derivatives_from(s.coords(t), s.coords_dot(t), s.coords_ddot(t), tol)
}

pub fn theta_derivatives_from(
    c: Su2Coords,
    cd: Su2Coords,
    cdd: Su2Coords,
    tol: f64,
) -> Result<ThetaDerivatives> {
    let r2 = c.dot(&c);
    if r2.sqrt() < tol {
        return Err(Error::DegenerateHamiltonian { radius: r2.sqrt(), tolerance: tol });
    }
    let rho = c.x.hypot(c.y);
    let theta = rho.atan2(c.z);
    if rho == 0.0 {
        // on the pole the polar angle is not differentiable in general; for
        // a trajectory that stays on the axis it is constant
        return Ok(ThetaDerivatives { theta, theta_dot: 0.0, theta_ddot: 0.0 });
    }
    let rho_dot = (c.x * cd.x + c.y * cd.y) / rho;
    let rho_ddot = (cd.x * cd.x + cd.y * cd.y + c.x * cdd.x + c.y * cdd.y) / rho - rho_dot * rho_dot / rho;
    let num = rho_dot * c.z - rho * cd.z;
    let num_dot = rho_ddot * c.z - rho * cdd.z;
    let r2_dot = 2.0 * c.dot(&cd);
    let theta_dot = num / r2;
    let theta_ddot = num_dot / r2 - num * r2_dot / (r2 * r2);
    Ok(ThetaDerivatives { theta, theta_dot, theta_ddot })
}

/// Uniform time grid on `[0, t_f]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeGrid {
    t_f: f64,
    points: usize,
}

impl TimeGrid {
    pub fn new(t_f: f64, points: usize) -> Result<Self> {
        if !(t_f > 0.0) || !t_f.is_finite() {
            return Err(Error::InvalidArgument(format!("grid duration must be positive (got {t_f})")));
        }
        if points < 2 {
            return Err(Error::InvalidArgument(format!("grid needs at least 2 points (got {points})")));
        }
        Ok(Self { t_f, points })
    }

    pub fn len(&self) -> usize {
        self.points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn duration(&self) -> f64 {
        self.t_f
    }

    pub fn step(&self) -> f64 {
        self.t_f / (self.points - 1) as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        if k + 1 == self.points {
            self.t_f
        } else {
            self.t_f * k as f64 / (self.points - 1) as f64
        }
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.points).map(move |k| self.time(k))
    }
}
