//! Acceptance criteria, one PASS/FAIL line each with the measured values
//! and runtime.

use std::f64::consts::PI;
use std::io::Write as _;
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sta_cli::config::Settings;
use sta_cli::lz::LzContext;
use sta_cli::{trap, Protocol};
use sta_core::adiabatic::{cd_term_0, cd_term_01, cd_term_1, iterate, AdiabaticFrame, FrameOptions, Sum};
use sta_core::pictures::{
    cd_lab_frame, compose, generator_by_differences, ip_transform, lab_frame_of, resonant_cd_only, z_rotation_shortcut,
    FrameGenerator, LabRotation,
};
use sta_core::propagator::{propagate, propagate_fixed, PropagatorOptions};
use sta_core::schedules::{FourierComponent, FourierSchedule, LzSchedule};
use sta_core::{DriveSchedule, Hamiltonian, Su2Coords, TwoLevelState};

struct Outcome {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: String,
    seconds: f64,
    budget: Option<f64>,
}

fn criterion(id: u32, name: &'static str, budget: Option<f64>, check: impl FnOnce() -> (bool, String)) -> Outcome {
    let start = Instant::now();
    let (ok, detail) = check();
    let seconds = start.elapsed().as_secs_f64();
    let pass = ok && budget.map_or(true, |b| seconds < b);
    let o = Outcome { id, name, pass, detail, seconds, budget };
    let limit = o.budget.map_or(String::new(), |b| format!(" / {b:.0} s"));
    // straight to the handle so the lines survive the harness's output capture
    let _ = writeln!(
        std::io::stdout().lock(),
        "{} criterion {}: {} | {} [{:.2} s{limit}]",
        if o.pass { "PASS" } else { "FAIL" },
        o.id,
        o.name,
        o.detail,
        o.seconds
    );
    o
}

fn reference_sweep() -> Arc<dyn DriveSchedule> {
    Arc::new(LzSchedule::reference())
}

/// Random smooth drive; `y_free` schedules keep `Y ≡ 0` and `X > 0`.
fn random_schedule(rng: &mut ChaCha8Rng, y_free: bool) -> FourierSchedule {
    let amp_x = if y_free { 0.1 } else { 0.2 };
    let mut comp = |offset: f64, slope: f64, amp: f64| FourierComponent {
        offset,
        slope,
        cos: (0..3).map(|_| rng.gen_range(-amp..amp)).collect(),
        sin: (0..3).map(|_| rng.gen_range(-amp..amp)).collect(),
    };
    let x = comp(1.0, 0.0, amp_x);
    let y = if y_free { FourierComponent::constant(0.0) } else { comp(0.3, 0.2, 0.2) };
    let z = comp(4.0, -8.0, 0.5);
    let duration = 1.0 + rng.gen_range(0.0..1.0);
    FourierSchedule { x, y, z, duration }
}

fn random_schedules(seed: u64, y_free: bool) -> Vec<Arc<dyn DriveSchedule>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..10).map(|_| Arc::new(random_schedule(&mut rng, y_free)) as Arc<dyn DriveSchedule>).collect()
}

fn frame_opts() -> FrameOptions {
    FrameOptions::default()
}

/// Classical fixed-step RK4 for `iψ̇ = Hψ`, independent of the
/// exponential propagator.
fn rk4(h: &dyn Hamiltonian, psi0: TwoLevelState, t_f: f64, steps: usize) -> TwoLevelState {
    let rhs = |t: f64, psi: &[C64; 2]| -> [C64; 2] {
        let v = h.coords(t).to_matrix().apply(*psi);
        [v[0] * C64::new(0.0, -1.0), v[1] * C64::new(0.0, -1.0)]
    };
    let dt = t_f / steps as f64;
    let mut psi = psi0.0;
    let axpy = |a: &[C64; 2], s: f64, b: &[C64; 2]| [a[0] + b[0] * s, a[1] + b[1] * s];
    for k in 0..steps {
        let t = k as f64 * dt;
        let k1 = rhs(t, &psi);
        let k2 = rhs(t + 0.5 * dt, &axpy(&psi, 0.5 * dt, &k1));
        let k3 = rhs(t + 0.5 * dt, &axpy(&psi, 0.5 * dt, &k2));
        let k4 = rhs(t + dt, &axpy(&psi, dt, &k3));
        for i in 0..2 {
            psi[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (dt / 6.0);
        }
    }
    TwoLevelState(psi)
}

fn criterion_1() -> Outcome {
    criterion(1, "LZ inversion: bare fails, shortcuts reach the target", Some(5.0), || {
        let ctx = LzContext::new(reference_sweep(), 4001, true).unwrap();
        let t_f = ctx.frame0.duration();
        let target_p1 = ctx.frame0.eigenstate(t_f, 0).populations().0;
        let tight = PropagatorOptions::with_tolerance(1e-12);
        let bare = ctx.run_protocol(Protocol::Bare, &tight).unwrap();
        let psi0 = ctx.frame0.eigenstate(0.0, 0);
        let rk = rk4(&ctx.schedule, psi0, t_f, 40_000).populations().0;
        let gap = (bare.summary.final_p1 - target_p1).abs();
        let dual = (bare.summary.final_p1 - rk).abs();
        let mut ok = gap > 0.1 && dual < 1e-8;
        let mut detail = format!(
            "bare P1 {:.10} vs target {:.6} (gap {gap:.4}), RK4 agreement {dual:.1e};",
            bare.summary.final_p1, target_p1
        );
        let opts = PropagatorOptions::default();
        let runs: Vec<_> = [Protocol::Cd0, Protocol::Cd1, Protocol::Zrot, Protocol::Cd0Only, Protocol::Cd01]
            .par_iter()
            .map(|&p| ctx.run_protocol(p, &opts).unwrap())
            .collect();
        for r in &runs {
            ok &= r.summary.fidelity > 1.0 - 1e-6;
            detail += &format!(" {} 1-F {:.1e} (eigen {:.1e})", r.protocol, 1.0 - r.summary.fidelity, 1.0 - r.summary.final_eigen_p1);
        }
        (ok, detail)
    })
}

/// `Θ₀` and its first two derivatives for a drive with `Y ≡ 0`, `X > 0`.
fn theta0(s: &dyn DriveSchedule, t: f64) -> (f64, f64, f64, f64, f64) {
    let (h, hd, hdd) = (s.coords(t), s.coords_dot(t), s.coords_ddot(t));
    let r2 = h.x * h.x + h.z * h.z;
    let r = r2.sqrt();
    let num = hd.x * h.z - h.x * hd.z;
    let th_d = num / r2;
    let num_d = hdd.x * h.z - h.x * hdd.z;
    let r2_d = 2.0 * (h.x * hd.x + h.z * hd.z);
    let th_dd = (num_d * r2 - num * r2_d) / (r2 * r2);
    let r_d = 0.5 * r2_d / r;
    (h.x.atan2(h.z), th_d, th_dd, r, r_d)
}

/// Closed form `(Θ̇₁/2)(cos Θ₀, 0, −sin Θ₀)` up to an overall sign.
fn cd1_closed_form(s: &dyn DriveSchedule, t: f64) -> Su2Coords {
    let (th, th_d, th_dd, r, r_d) = theta0(s, t);
    let u = th_d / (2.0 * r);
    let u_d = (th_dd * r - th_d * r_d) / (2.0 * r * r);
    let th1_d = u_d / (1.0 + u * u);
    0.5 * th1_d * Su2Coords::new(th.cos(), 0.0, -th.sin())
}

/// Worst pointwise error over both overall signs, keeping the better one.
fn best_sign(points: &[(Su2Coords, Su2Coords)]) -> f64 {
    [1.0, -1.0]
        .iter()
        .map(|&s| points.iter().map(|(num, closed)| (*num - s * *closed).max_abs()).fold(0.0, f64::max))
        .fold(f64::INFINITY, f64::min)
}

fn criterion_2() -> Outcome {
    criterion(2, "Hamiltonian shapes of the zrot and cd1 shortcuts", Some(1.0), || {
        let s = reference_sweep();
        let f0 = AdiabaticFrame::build(Arc::clone(&s), &frame_opts()).unwrap();
        let f1 = iterate(&f0, &frame_opts()).unwrap();
        let zrot = z_rotation_shortcut(&f0).unwrap();
        let cd1 = Sum(Arc::clone(&s), cd_term_1(&f0, &f1).unwrap());
        let t_f = s.duration();
        let times: Vec<f64> = f0.grid().times().collect();
        let peak = zrot.coords(0.5 * t_f).x;
        let peak_err = (peak - 26f64.sqrt()).abs();
        let zrot_max = times.iter().map(|&t| zrot.coords(t).x).fold(f64::MIN, f64::max);
        let cd1_max = times.iter().map(|&t| cd1.coords(t).x).fold(f64::MIN, f64::max);

        // zrot: P = √(X₀² + y²), Z = Z₀ − φ̇/2 with y = ±Θ̇₀/2, φ = atan(y/X₀)
        let zrot_closed = |sign: f64, t: f64| {
            let (_, th_d, th_dd, _, _) = theta0(s.as_ref(), t);
            let h = s.coords(t);
            let (y, y_d) = (sign * 0.5 * th_d, sign * 0.5 * th_dd);
            let phi_d = h.x * y_d / (h.x * h.x + y * y);
            Su2Coords::new(h.x.hypot(y), 0.0, h.z - 0.5 * phi_d)
        };
        let zrot_err = [1.0, -1.0]
            .iter()
            .map(|&sg| times.iter().map(|&t| (zrot.coords(t) - zrot_closed(sg, t)).max_abs()).fold(0.0, f64::max))
            .fold(f64::INFINITY, f64::min);
        let cd1_points: Vec<_> = times.iter().map(|&t| (cd1.coords(t) - s.coords(t), cd1_closed_form(s.as_ref(), t))).collect();
        let cd1_err = best_sign(&cd1_points);
        let ok = peak_err < 1e-9 && zrot_max <= peak + 1e-12 && cd1_max < zrot_max && zrot_err < 1e-9 && cd1_err < 1e-9;
        (
            ok,
            format!(
                "zrot X(T/2) {peak:.12} (|-√26| {peak_err:.1e}), max X zrot {zrot_max:.6} > cd1 {cd1_max:.6}, closed-form error zrot {zrot_err:.1e} cd1 {cd1_err:.1e}"
            ),
        )
    })
}

/// `max_k ‖U(t_k)ψ_I(t_k) − ψ_S(t_k)‖`.
fn picture_error(h_s: Arc<dyn Hamiltonian>, frame: Arc<dyn FrameGenerator>, t_f: f64, tolerance: f64) -> f64 {
    let opts = PropagatorOptions { tolerance, report_points: 401, ..Default::default() };
    let psi0 = TwoLevelState::new(C64::new(0.6, 0.0), C64::new(0.0, 0.8));
    let s = propagate(&h_s, psi0, t_f, &opts).unwrap();
    let psi_i0 = frame.unitary(0.0).adjoint().apply(&psi0);
    let h_i = ip_transform(Arc::clone(&h_s), Arc::clone(&frame));
    let i = propagate(&h_i, psi_i0, t_f, &opts).unwrap();
    s.times
        .iter()
        .zip(s.states.iter().zip(&i.states))
        .map(|(&t, (ps, pi))| frame.unitary(t).apply(pi).distance(ps))
        .fold(0.0, f64::max)
}

/// Carrier of the lab-frame cases. Any positive carrier gives a valid
/// frame; the lab-frame criterion runs at 100.
const PICTURE_OMEGA0: f64 = 30.0;

/// Step tolerances: the carrier makes the lab-frame runs accumulate more
/// error per unit tolerance.
const FRAME_TOL: f64 = 1e-12;
const LAB_TOL: f64 = 3e-13;

type Case = (&'static str, Arc<dyn Hamiltonian>, Arc<dyn FrameGenerator>, f64, f64);

/// All six frames on a `Y ≡ 0` schedule (required by `U_z`).
fn picture_cases(s: &Arc<dyn DriveSchedule>) -> Vec<Case> {
    let t_f = s.duration();
    let f0 = AdiabaticFrame::build(Arc::clone(s), &frame_opts()).unwrap();
    let f1 = iterate(&f0, &frame_opts()).unwrap();
    let lab = lab_frame_of(s, PICTURE_OMEGA0).unwrap();
    let rotation = z_rotation_shortcut(&f0).unwrap().rotation().clone();
    vec![
        ("A0", Arc::new(Arc::clone(s)), Arc::new(Arc::clone(&f0)), t_f, FRAME_TOL),
        ("A1", Arc::new(Arc::clone(f1.schedule())), Arc::new(Arc::clone(&f1)), t_f, FRAME_TOL),
        ("U01", Arc::new(Arc::clone(s)), Arc::new(compose(Arc::clone(&f0), Arc::clone(&f1))), t_f, FRAME_TOL),
        ("U_z", Arc::new(Sum(Arc::clone(s), cd_term_0(&f0))), Arc::new(rotation), t_f, FRAME_TOL),
        ("U_L", Arc::new(lab.clone()), Arc::new(lab.rotation().clone()), t_f, LAB_TOL),
        (
            "U'",
            Arc::new(resonant_cd_only(&f0, PICTURE_OMEGA0)),
            Arc::new(LabRotation::constant(PICTURE_OMEGA0)),
            t_f,
            LAB_TOL,
        ),
    ]
}

fn criterion_3() -> Outcome {
    criterion(3, "picture equivalence for A0, A1, U_z, U_L, U', U01", Some(10.0), || {
        let mut schedules = vec![reference_sweep()];
        schedules.extend(random_schedules(32, true));
        let cases: Vec<Case> = schedules.par_iter().flat_map_iter(picture_cases).collect();
        let errors: Vec<(&str, f64)> = cases
            .into_par_iter()
            .map(|(name, h, frame, t_f, tol)| (name, picture_error(h, frame, t_f, tol)))
            .collect();
        let mut detail = format!("{} runs;", errors.len());
        let mut ok = true;
        for name in ["A0", "A1", "U_z", "U_L", "U'", "U01"] {
            let worst = errors.iter().filter(|e| e.0 == name).map(|e| e.1).fold(0.0, f64::max);
            let count = errors.iter().filter(|e| e.0 == name).count();
            ok &= worst < 1e-8 && count == 11;
            detail += &format!(" {name} {worst:.1e}");
        }
        (ok, detail)
    })
}

fn interior_nodes(frame: &AdiabaticFrame) -> Vec<f64> {
    let n = frame.grid().len();
    (1..n - 1).map(|k| frame.grid().time(k)).collect()
}

fn criterion_4() -> Outcome {
    criterion(4, "identities for K0 and H_cd^(01)", None, || {
        let mut schedules = vec![reference_sweep()];
        schedules.extend(random_schedules(41, false));
        let (mut r0, mut r01) = (0.0f64, 0.0f64);
        for s in &schedules {
            let f0 = AdiabaticFrame::build(Arc::clone(s), &frame_opts()).unwrap();
            let f1 = iterate(&f0, &frame_opts()).unwrap();
            let u01 = compose(Arc::clone(&f0), Arc::clone(&f1));
            let (cd0, cd01) = (cd_term_0(&f0), cd_term_01(&f0, &f1).unwrap());
            for t in interior_nodes(&f0) {
                let a0 = *f0.basis(t).mat();
                let k0 = generator_by_differences(f0.as_ref(), t, 1e-4);
                r0 = r0.max(((cd0.coords(t).to_matrix() - k0).conjugate_by(&a0)).max_abs());
                let u = *u01.unitary(t).mat();
                let k01 = generator_by_differences(&u01, t, 1e-4);
                r01 = r01.max(((cd01.coords(t).to_matrix() - k01).conjugate_by(&u)).max_abs());
            }
        }
        (r0 < 1e-8 && r01 < 1e-8, format!("LZ + 10 random schedules: A0 residual {r0:.1e}, U01 residual {r01:.1e}"))
    })
}

fn criterion_5() -> Outcome {
    criterion(5, "superadiabatic structure of H1 and the closed-form H_cd^(1)", None, || {
        let mut schedules = vec![reference_sweep()];
        schedules.extend(random_schedules(51, true));
        let (mut structure, mut closed) = (0.0f64, 0.0f64);
        for s in &schedules {
            let f0 = AdiabaticFrame::build(Arc::clone(s), &frame_opts()).unwrap();
            let f1 = iterate(&f0, &frame_opts()).unwrap();
            let cd1 = cd_term_1(&f0, &f1).unwrap();
            let times: Vec<f64> = f0.grid().times().collect();
            for &t in &times {
                let h1 = f1.schedule().coords(t);
                let (_, th_d, _, r, _) = theta0(s.as_ref(), t);
                let e = h1.x.abs().max((h1.y.abs() - 0.5 * th_d.abs()).abs()).max((h1.z.abs() - r).abs());
                structure = structure.max(e);
            }
            let points: Vec<_> = times.iter().map(|&t| (cd1.coords(t), cd1_closed_form(s.as_ref(), t))).collect();
            closed = closed.max(best_sign(&points));
        }
        (
            structure < 1e-9 && closed < 1e-9,
            format!("LZ + 10 random Y=0 schedules: (X1, |Y1|, |Z1|) error {structure:.1e}, closed form error {closed:.1e}"),
        )
    })
}

fn criterion_6() -> Outcome {
    criterion(6, "lab-frame fields reproduce the rotating frame (omega0 = 100)", Some(30.0), || {
        let s = reference_sweep();
        let t_f = s.duration();
        let f0 = AdiabaticFrame::build(Arc::clone(&s), &frame_opts()).unwrap();
        let opts = PropagatorOptions { tolerance: 1e-11, ..Default::default() };
        let psi0 = f0.eigenstate(0.0, 0);
        let pairs: Vec<(&str, Arc<dyn Hamiltonian>, Arc<dyn Hamiltonian>)> = vec![
            ("two fields", Arc::new(cd_lab_frame(&f0, 100.0).unwrap()), Arc::new(Sum(Arc::clone(&s), cd_term_0(&f0)))),
            ("resonant K0 only", Arc::new(resonant_cd_only(&f0, 100.0)), Arc::new(cd_term_0(&f0))),
        ];
        let results: Vec<(&str, f64, usize)> = pairs
            .into_par_iter()
            .map(|(name, lab, rot)| {
                let (a, b) = rayon::join(|| propagate(&lab, psi0, t_f, &opts).unwrap(), || propagate(&rot, psi0, t_f, &opts).unwrap());
                let diff = a
                    .populations()
                    .iter()
                    .zip(b.populations())
                    .map(|(x, y)| (x.0 - y.0).abs().max((x.1 - y.1).abs()))
                    .fold(0.0, f64::max);
                (name, diff, a.accepted_steps)
            })
            .collect();
        let ok = results.iter().all(|r| r.1 < 1e-6);
        let detail = results.iter().map(|(n, d, k)| format!("{n}: max |dP| {d:.1e} ({k} steps)")).collect::<Vec<_>>().join(", ");
        (ok, detail)
    })
}

fn criterion_7() -> Outcome {
    criterion(7, "trap expansion: cd, modified frequency and reference", Some(60.0), || {
        let tmp = tempfile::tempdir().unwrap();
        let out = tmp.path().join("trap");
        let out_flag = Some(out.to_str().unwrap().to_string());
        let settings = Settings::resolve(trap::SCENARIO, trap::DEFAULTS, None, &[("out", out_flag)]).unwrap();
        let report = trap::execute(settings).unwrap();
        let get = |name: &str| &report.runs.iter().find(|r| r.summary.protocol == name).unwrap().summary;
        let (reference, cd, modified) = (get("reference"), get("cd"), get("modified"));
        let cmp = report.comparison.as_ref().unwrap();
        let overlap = C64::from_polar(cmp.final_overlap_abs, cmp.final_overlap_arg);
        let overlap_err = (overlap - 1.0).norm();
        let oracle_p0 = reference.oracle_p0.unwrap();
        let p0_err = (reference.final_p0 - oracle_p0).abs();
        let ok = cmp.max_density_l1 < 1e-5
            && cd.final_p0 > 1.0 - 1e-6
            && modified.final_p0 > 1.0 - 1e-6
            && overlap_err < 1e-4
            && reference.max_width_error < 1e-4
            && p0_err < 1e-4;
        (
            ok,
            format!(
                "(a) density L1 {:.1e}; (b) 1-P0 cd {:.1e}, modified {:.1e}, |overlap-1| {overlap_err:.1e}; (c) width error {:.1e}; (d) P0 {:.10} vs {:.10} ({} levels)",
                cmp.max_density_l1,
                1.0 - cd.final_p0,
                1.0 - modified.final_p0,
                reference.max_width_error,
                reference.final_p0,
                oracle_p0,
                reference.levels
            ),
        )
    })
}

fn criterion_8() -> Outcome {
    criterion(8, "propagator is second order", None, || {
        // pulse area π: Ω(t) = 3πt², exact final state −i|2⟩
        let h = |t: f64| Su2Coords::new(1.5 * PI * t * t, 0.0, 0.0);
        let exact = TwoLevelState::new(C64::new(0.0, 0.0), C64::new(0.0, -1.0));
        let err = |n: usize| propagate_fixed(&h, TwoLevelState::bare(0), 1.0, n).distance(&exact);
        let (e1, e2, e3) = (err(100), err(200), err(400));
        let (r1, r2) = (e1 / e2, e2 / e3);
        let ok = (3.5..=4.5).contains(&r1) && (3.5..=4.5).contains(&r2);
        (ok, format!("errors {e1:.3e}, {e2:.3e}, {e3:.3e} at 100/200/400 steps; ratios {r1:.4}, {r2:.4}"))
    })
}

#[test]
fn acceptance() {
    let outcomes =
        [criterion_1(), criterion_2(), criterion_3(), criterion_4(), criterion_5(), criterion_6(), criterion_7(), criterion_8()];
    let failed: Vec<u32> = outcomes.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
