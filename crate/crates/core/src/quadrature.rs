//! Gauss–Legendre quadrature and cumulative integrals of smooth functions.

/// 8-point Gauss–Legendre nodes and weights on `[-1, 1]`.
const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
];

/// ∫ₐᵇ f with one 8-point Gauss–Legendre panel.
pub fn gauss_legendre<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    half * GL8.iter().map(|&(x, w)| w * f(mid + half * x)).sum::<f64>()
}

/// ∫ₐᵇ f by recursive bisection until two half panels agree with the whole
/// panel to `tol` (absolute).
pub fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let left = gauss_legendre(f, a, m);
        let right = gauss_legendre(f, m, b);
        let diff = (left + right - whole).abs();
        // below the rounding floor further bisection cannot help
        if depth == 0 || diff <= tol || diff <= 4.0 * f64::EPSILON * (left.abs() + right.abs()) {
            return left + right;
        }
        recurse(f, a, m, left, 0.5 * tol, depth - 1) + recurse(f, m, b, right, 0.5 * tol, depth - 1)
    }
    recurse(f, a, b, gauss_legendre(f, a, b), tol, 16)
}

/// Tabulated running integral `F(t) = ∫₀ᵗ f` on a uniform grid. Each panel
/// also keeps the Legendre expansion of `f` through its Gauss nodes, so
/// `F` between nodes costs no further evaluations of `f`.
#[derive(Clone, Debug)]
pub struct CumulativeIntegral {
    t0: f64,
    step: f64,
    table: Vec<f64>,
    panels: Vec<[f64; 8]>,
}

/// Legendre coefficients of the degree-7 interpolant through the GL8 nodes.
fn legendre_coeffs<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> [f64; 8] {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut c = [0.0; 8];
    for &(x, w) in &GL8 {
        let fx = w * f(mid + half * x);
        let (mut p0, mut p1) = (1.0, x);
        c[0] += fx;
        c[1] += fx * x;
        for n in 1..7 {
            let p2 = ((2 * n + 1) as f64 * x * p1 - n as f64 * p0) / (n + 1) as f64;
            c[n + 1] += fx * p2;
            (p0, p1) = (p1, p2);
        }
    }
    for (n, v) in c.iter_mut().enumerate() {
        *v *= (2 * n + 1) as f64 / 2.0;
    }
    c
}

/// `∫_{-1}^{s} Σ cₙPₙ`, using `∫Pₙ = (Pₙ₊₁ − Pₙ₋₁)/(2n+1)`.
fn legendre_partial(c: &[f64; 8], s: f64) -> f64 {
    let mut p = [0.0; 9];
    p[0] = 1.0;
    p[1] = s;
    for n in 1..8 {
        p[n + 1] = ((2 * n + 1) as f64 * s * p[n] - n as f64 * p[n - 1]) / (n + 1) as f64;
    }
    let mut acc = c[0] * (s + 1.0);
    for n in 1..8 {
        acc += c[n] * (p[n + 1] - p[n - 1]) / (2 * n + 1) as f64;
    }
    acc
}

impl CumulativeIntegral {
    /// `nodes` uniform nodes on `[t0, t1]` (at least 2).
    pub fn build<F: Fn(f64) -> f64>(f: &F, t0: f64, t1: f64, nodes: usize, tol: f64) -> Self {
        let nodes = nodes.max(2);
        let step = (t1 - t0) / (nodes - 1) as f64;
        let mut table = Vec::with_capacity(nodes);
        let mut panels = Vec::with_capacity(nodes - 1);
        let mut acc = 0.0;
        table.push(0.0);
        for k in 1..nodes {
            let a = t0 + (k - 1) as f64 * step;
            acc += adaptive(f, a, a + step, tol);
            table.push(acc);
            panels.push(legendre_coeffs(f, a, a + step));
        }
        Self { t0, step, table, panels }
    }

    pub fn zero(t0: f64, t1: f64) -> Self {
        Self { t0, step: t1 - t0, table: vec![0.0, 0.0], panels: vec![[0.0; 8]] }
    }

    pub fn is_identically_zero(&self) -> bool {
        self.table.iter().all(|&v| v == 0.0)
    }

    pub fn node_values(&self) -> &[f64] {
        &self.table
    }

    /// `F(t)`. Beyond the last node the final panel's expansion is
    /// extrapolated.
    pub fn eval(&self, t: f64) -> f64 {
        let k = (((t - self.t0) / self.step).floor().max(0.0) as usize).min(self.panels.len() - 1);
        let tk = self.t0 + k as f64 * self.step;
        if t == tk {
            return self.table[k];
        }
        let s = 2.0 * (t - tk) / self.step - 1.0;
        self.table[k] + 0.5 * self.step * legendre_partial(&self.panels[k], s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        // degree ≤ 7 is reproduced exactly between nodes
        #[test]
        fn partial_panels_integrate_septics(c in prop::array::uniform8(-2.0f64..2.0), t in 0.0f64..3.0) {
            let f = |x: f64| c.iter().rev().fold(0.0, |acc, &a| acc * x + a);
            let exact = |x: f64| c.iter().enumerate().rev().fold(0.0, |acc, (k, &a)| acc + a * x.powi(k as i32 + 1) / (k + 1) as f64);
            let table = CumulativeIntegral::build(&f, 0.0, 3.0, 7, 1e-14);
            prop_assert!((table.eval(t) - exact(t)).abs() < 1e-11 * (1.0 + exact(t).abs()));
        }
    }

    #[test]
    fn polynomial_exactness() {
        let f = |x: f64| 3.0 * x.powi(15) - x.powi(4) + 2.0;
        let exact = |x: f64| 3.0 / 16.0 * x.powi(16) - x.powi(5) / 5.0 + 2.0 * x;
        let v = gauss_legendre(&f, -0.3, 0.9);
        assert!((v - (exact(0.9) - exact(-0.3))).abs() < 1e-14);
    }

    #[test]
    fn cumulative_matches_closed_form() {
        let f = |t: f64| (3.0 * t).cos() * (-t).exp();
        // ∫ e^{-t} cos 3t = e^{-t}(3 sin 3t − cos 3t)/10 + 1/10
        let exact = |t: f64| ((-t).exp() * (3.0 * (3.0 * t).sin() - (3.0 * t).cos()) + 1.0) / 10.0;
        let table = CumulativeIntegral::build(&f, 0.0, 4.0, 101, 1e-14);
        for &t in &[0.0, 0.013, 1.0, 2.71828, 3.99, 4.0] {
            assert!((table.eval(t) - exact(t)).abs() < 1e-13, "t = {t}");
        }
    }

    #[test]
    fn adaptive_handles_peaks() {
        let f = |t: f64| 1.0 / (1e-4 + t * t);
        let exact = 2.0 * (1.0 / 1e-2f64).atan() / 1e-2;
        let v = adaptive(&f, -1.0, 1.0, 1e-10);
        assert!((v - exact).abs() < 1e-8 * exact);
    }
}
