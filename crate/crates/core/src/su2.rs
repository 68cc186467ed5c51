//! Exact algebra of traceless Hermitian 2×2 Hamiltonians.
//!
//! A Hamiltonian `H = X σx + Y σy + Z σz` is stored by its Pauli components
//! ([`Su2Coords`]); matrices are written in the bare basis `{|1⟩, |2⟩}` as
//!
//! ```text
//! [[ Z,      X − iY ],
//!  [ X + iY, −Z     ]]
//! ```
//!
//! Units are ħ = 1 throughout the two-level stack.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Pauli components of a traceless Hermitian 2×2 matrix (energy units).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Su2Coords {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Su2Coords {
    pub const ZERO: Self = Self { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn radius(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(&self, other: &Self) -> Self {
        Self {
            x: self.y * other.z - self.z * other.y,
            y: self.z * other.x - self.x * other.z,
            z: self.x * other.y - self.y * other.x,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }

    pub fn to_matrix(&self) -> Mat2 {
        to_matrix(*self)
    }

    /// Pauli components of a matrix, assuming it is traceless and Hermitian.
    /// Any anti-Hermitian or trace part is discarded.
    pub fn from_matrix(m: &Mat2) -> Self {
        let [[a, b], [c, d]] = m.0;
        Self {
            x: 0.5 * (c + b).re,
            y: 0.5 * (c - b).im,
            z: 0.5 * (a - d).re,
        }
    }

    pub fn to_sphere(&self) -> SphereCoords {
        cart_to_sphere(*self)
    }
}

impl Add for Su2Coords {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Su2Coords {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl Sub for Su2Coords {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Su2Coords {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<Su2Coords> for f64 {
    type Output = Su2Coords;
    fn mul(self, v: Su2Coords) -> Su2Coords {
        Su2Coords::new(self * v.x, self * v.y, self * v.z)
    }
}

/// Spherical coordinates of a Hamiltonian's Pauli vector.
///
/// `theta` is the polar angle in `[0, π]` measured from the `+Z` axis and
/// `phi` the azimuth in `[0, 2π)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SphereCoords {
    pub r: f64,
    pub theta: f64,
    pub phi: f64,
}

impl SphereCoords {
    pub fn to_cart(&self) -> Su2Coords {
        sphere_to_cart(*self)
    }
}

/// `[[Z, X − iY], [X + iY, −Z]]`.
pub fn to_matrix(c: Su2Coords) -> Mat2 {
    Mat2([
        [C64::new(c.z, 0.0), C64::new(c.x, -c.y)],
        [C64::new(c.x, c.y), C64::new(-c.z, 0.0)],
    ])
}

/// Cartesian to spherical. `phi` is set to 0 on the polar axis and `theta`
/// to 0 at the origin.
pub fn cart_to_sphere(c: Su2Coords) -> SphereCoords {
    let rho = c.x.hypot(c.y);
    let r = rho.hypot(c.z);
    if r == 0.0 {
        return SphereCoords::default();
    }
    let theta = rho.atan2(c.z);
    let phi = if rho == 0.0 {
        0.0
    } else {
        let p = c.y.atan2(c.x);
        if p < 0.0 {
            // atan2 of a tiny negative y can round to exactly 2π
            let wrapped = p + 2.0 * PI;
            if wrapped >= 2.0 * PI {
                0.0
            } else {
                wrapped
            }
        } else {
            p
        }
    };
    SphereCoords { r, theta, phi }
}

pub fn sphere_to_cart(s: SphereCoords) -> Su2Coords {
    let (st, ct) = s.theta.sin_cos();
    let (sp, cp) = s.phi.sin_cos();
    Su2Coords::new(s.r * st * cp, s.r * st * sp, s.r * ct)
}

/// General complex 2×2 matrix, row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2(pub [[C64; 2]; 2]);

impl Mat2 {
    pub const ZERO: Self = Self([[ZERO, ZERO], [ZERO, ZERO]]);
    pub const IDENTITY: Self = Self([[ONE, ZERO], [ZERO, ONE]]);

    pub fn from_columns(a: [C64; 2], b: [C64; 2]) -> Self {
        Self([[a[0], b[0]], [a[1], b[1]]])
    }

    pub fn diag(a: C64, d: C64) -> Self {
        Self([[a, ZERO], [ZERO, d]])
    }

    pub fn column(&self, k: usize) -> [C64; 2] {
        [self.0[0][k], self.0[1][k]]
    }

    pub fn adjoint(&self) -> Self {
        let [[a, b], [c, d]] = self.0;
        Self([[a.conj(), c.conj()], [b.conj(), d.conj()]])
    }

    pub fn scale(&self, s: C64) -> Self {
        let [[a, b], [c, d]] = self.0;
        Self([[a * s, b * s], [c * s, d * s]])
    }

    pub fn apply(&self, v: [C64; 2]) -> [C64; 2] {
        let [[a, b], [c, d]] = self.0;
        [a * v[0] + b * v[1], c * v[0] + d * v[1]]
    }

    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> C64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    /// Largest entrywise modulus.
    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// `U† M U`.
    pub fn conjugate_by(&self, u: &Mat2) -> Mat2 {
        u.adjoint() * *self * *u
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        let a = self.0;
        let b = o.0;
        let mut out = [[ZERO; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Mat2(out)
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        let mut out = self.0;
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] += o.0[i][j];
            }
        }
        Mat2(out)
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        self + o.scale(-ONE)
    }
}

/// A 2×2 unitary built by this library.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Unitary2(Mat2);

impl Unitary2 {
    pub const IDENTITY: Self = Self(Mat2::IDENTITY);

    /// Wraps a matrix the caller guarantees to be unitary. Checked in debug
    /// builds.
    pub fn from_mat_unchecked(m: Mat2) -> Self {
        debug_assert!(
            unitarity_defect(&m) < 1e-9,
            "matrix is not unitary: defect {}",
            unitarity_defect(&m)
        );
        Self(m)
    }

    /// Exact propagator `exp(−i H dt)` for a constant traceless `H`.
    pub fn evolution(h: Su2Coords, dt: f64) -> Self {
        let r = h.radius();
        let a = r * dt;
        let (s, c) = a.sin_cos();
        // sin(a)/r, well-conditioned as r → 0
        let sr = if a.abs() < 1e-8 {
            dt * (1.0 - a * a / 6.0)
        } else {
            s / r
        };
        let m = Mat2([
            [C64::new(c, -sr * h.z), C64::new(-sr * h.y, -sr * h.x)],
            [C64::new(sr * h.y, -sr * h.x), C64::new(c, sr * h.z)],
        ]);
        Self(m)
    }

    /// `diag(e^{−iφ/2}, e^{iφ/2})`, a rotation by `φ` about the Z axis.
    pub fn z_rotation(phi: f64) -> Self {
        Self(Mat2::diag(C64::from_polar(1.0, -0.5 * phi), C64::from_polar(1.0, 0.5 * phi)))
    }

    pub fn mat(&self) -> &Mat2 {
        &self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn apply(&self, s: &TwoLevelState) -> TwoLevelState {
        TwoLevelState(self.0.apply(s.0))
    }

    /// `U† H U` for a traceless Hermitian `H`.
    pub fn conjugate(&self, h: Su2Coords) -> Su2Coords {
        Su2Coords::from_matrix(&h.to_matrix().conjugate_by(&self.0))
    }

    /// `U H U†`.
    pub fn transform(&self, h: Su2Coords) -> Su2Coords {
        Su2Coords::from_matrix(&(self.0 * h.to_matrix() * self.0.adjoint()))
    }

    pub fn unitarity_defect(&self) -> f64 {
        unitarity_defect(&self.0)
    }
}

impl Mul for Unitary2 {
    type Output = Unitary2;
    fn mul(self, o: Unitary2) -> Unitary2 {
        Unitary2(self.0 * o.0)
    }
}

/// `max |U U† − I|`, entrywise.
pub fn unitarity_defect(m: &Mat2) -> f64 {
    (*m * m.adjoint() - Mat2::IDENTITY).max_abs()
}

/// Pure state of a two-level system in the bare basis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoLevelState(pub [C64; 2]);

impl TwoLevelState {
    pub const GROUND_BARE_1: Self = Self([ONE, ZERO]);
    pub const BARE_2: Self = Self([ZERO, ONE]);

    pub fn new(c1: C64, c2: C64) -> Self {
        Self([c1, c2])
    }

    pub fn bare(level: usize) -> Self {
        match level {
            0 => Self([ONE, ZERO]),
            _ => Self([ZERO, ONE]),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0[0].norm_sqr() + self.0[1].norm_sqr()
    }

    pub fn populations(&self) -> (f64, f64) {
        (self.0[0].norm_sqr(), self.0[1].norm_sqr())
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> C64 {
        self.0[0].conj() * other.0[0] + self.0[1].conj() * other.0[1]
    }

    /// Euclidean distance `‖self − other‖`.
    pub fn distance(&self, other: &Self) -> f64 {
        ((self.0[0] - other.0[0]).norm_sqr() + (self.0[1] - other.0[1]).norm_sqr()).sqrt()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm_sqr().sqrt();
        Self([self.0[0] / n, self.0[1] / n])
    }
}

/// `|⟨φ|ψ⟩|²`.
pub fn fidelity(psi: &TwoLevelState, phi: &TwoLevelState) -> f64 {
    phi.inner(psi).norm_sqr()
}

/// How eigenpairs are ordered by [`eigensystem`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LevelOrder {
    /// `+R` first.
    UpperFirst,
    /// `−R` first.
    LowerFirst,
    /// The eigenvector with the larger overlap with `|1⟩` first (ties go to
    /// the upper level).
    BareOverlap,
}

/// Phase convention of the closed-form eigenvectors.
///
/// `North` is smooth everywhere except on the `−Z` axis, `South` everywhere
/// except on the `+Z` axis. The two differ by the azimuthal phase `e^{iΦ}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gauge {
    North,
    South,
}

impl Gauge {
    /// The gauge whose singular pole is farther from `c`.
    pub fn best_for(c: Su2Coords) -> Self {
        if c.z >= 0.0 {
            Gauge::North
        } else {
            Gauge::South
        }
    }

    /// Distance (in units of `R`) from the gauge's singular pole, in `[0, 2]`.
    pub fn pole_clearance(self, c: Su2Coords) -> f64 {
        let r = c.radius();
        match self {
            Gauge::North => (r + c.z) / r,
            Gauge::South => (r - c.z) / r,
        }
    }
}

/// Upper (`+R`) and lower (`−R`) eigenvectors in the given gauge.
pub fn eigenvectors(c: Su2Coords, gauge: Gauge) -> ([C64; 2], [C64; 2]) {
    let r = c.radius();
    let w = C64::new(c.x, c.y);
    match gauge {
        Gauge::North => {
            let s = (2.0 * r * (r + c.z)).sqrt();
            let a = ((r + c.z) / (2.0 * r)).sqrt();
            ([C64::new(a, 0.0), w / s], [-w.conj() / s, C64::new(a, 0.0)])
        }
        Gauge::South => {
            let s = (2.0 * r * (r - c.z)).sqrt();
            let b = ((r - c.z) / (2.0 * r)).sqrt();
            ([w.conj() / s, C64::new(b, 0.0)], [C64::new(-b, 0.0), w / s])
        }
    }
}

/// Connection coefficients `(c₊, c₋)` with `⟨n|ṅ⟩ = i c_n` for the gauge's
/// closed-form eigenvectors, given coordinates and their time derivative.
pub fn connection(c: Su2Coords, c_dot: Su2Coords, gauge: Gauge) -> (f64, f64) {
    let r = c.radius();
    let flux = c.x * c_dot.y - c.y * c_dot.x;
    match gauge {
        Gauge::North => {
            let w = flux / (2.0 * r * (r + c.z));
            (w, -w)
        }
        Gauge::South => {
            let w = flux / (2.0 * r * (r - c.z));
            (-w, w)
        }
    }
}

/// Eigenvalues and orthonormal eigenvectors of a [`Su2Coords`] Hamiltonian.
#[derive(Clone, Copy, Debug)]
pub struct Eigensystem {
    pub values: [f64; 2],
    pub vectors: [[C64; 2]; 2],
}

pub fn eigensystem(c: Su2Coords, order: LevelOrder, tol: f64) -> Result<Eigensystem> {
    let r = c.radius();
    if r < tol {
        return Err(Error::DegenerateHamiltonian { radius: r, tolerance: tol });
    }
    let (up, down) = eigenvectors(c, Gauge::best_for(c));
    let upper_first = match order {
        LevelOrder::UpperFirst => true,
        LevelOrder::LowerFirst => false,
        LevelOrder::BareOverlap => up[0].norm_sqr() >= down[0].norm_sqr(),
    };
    Ok(if upper_first {
        Eigensystem { values: [r, -r], vectors: [up, down] }
    } else {
        Eigensystem { values: [-r, r], vectors: [down, up] }
    })
}

pub fn pauli_x() -> Mat2 {
    to_matrix(Su2Coords::new(1.0, 0.0, 0.0))
}

pub fn pauli_y() -> Mat2 {
    Mat2([[ZERO, -I], [I, ZERO]])
}

pub fn pauli_z() -> Mat2 {
    to_matrix(Su2Coords::new(0.0, 0.0, 1.0))
}
