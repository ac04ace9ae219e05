//! Cross-module invariants: closed-form residuals, conservation, dual-route
//! agreements, and property tests over parameter grids.

use proptest::prelude::*;

use bubbletower::classifier::{
    self, BubbleSumOrbit, ClassifyTolerances, ProfileTag, TraceSource, WTrace,
};
use bubbletower::dynamics::{
    self, ef_transform, ef_untransform, integrate, ClosedFormProfile, IntegrationSettings,
    PhaseEval, PhaseState,
};
use bubbletower::numerics::{self, Bracket, QuadSpec};
use bubbletower::pohozaev;
use bubbletower::ProblemParams;

fn p(n: u32, s: f64, q: f64, mu: f64) -> ProblemParams {
    ProblemParams::new(n, s, q, mu).unwrap()
}

const NS_GRID: [(u32, f64); 16] = [
    (3, 0.25),
    (3, 0.5),
    (3, 1.0),
    (3, 1.5),
    (4, 0.25),
    (4, 0.5),
    (4, 1.0),
    (4, 1.5),
    (5, 0.25),
    (5, 0.5),
    (5, 1.0),
    (5, 1.5),
    (6, 0.25),
    (6, 0.5),
    (6, 1.0),
    (6, 1.5),
];

// ---------------------------------------------------------------------------
// params
// ---------------------------------------------------------------------------

#[test]
fn blowup_exponent_continuous_at_sobolev_cut() {
    for &(n, s) in &NS_GRID {
        let probe = p(n, s, 2.0, 1.0);
        let q_sob = probe.exponents().two_star - 1.0;
        let eps = 1e-9;
        let below = p(n, s, q_sob - eps, 1.0).blowup_exponent();
        let at = p(n, s, q_sob, 1.0).blowup_exponent();
        let above = p(n, s, q_sob + eps, 1.0).blowup_exponent();
        assert!((below - at).abs() < 1e-7, "(n,s)=({n},{s}): {below} vs {at}");
        assert!((above - at).abs() < 1e-7, "(n,s)=({n},{s}): {above} vs {at}");
        // middle branch equals the max-of-bounds form above the first cut
        let q_mid = 0.5 * (probe.exponents().two_star_s - 1.0) + 0.5 * q_sob;
        let mid = p(n, s, q_mid, 1.0);
        let alt = (s / (q_mid - (mid.exponents().two_star_s - 1.0))).max(2.0 / (q_mid - 1.0));
        assert!((mid.blowup_exponent() - alt).abs() < 1e-12);
    }
}

#[test]
fn operational_mu_one_below_mu_zero_on_grid() {
    for &(n, s) in &NS_GRID {
        let params = p(n, s, 2.0, 1.0);
        let mu1 = params.mu_one().unwrap();
        let mu0 = params.mu_zero();
        assert!(
            mu1.operational > 0.0 && mu1.operational < mu0,
            "(n,s)=({n},{s}): mu1 = {}, mu0 = {mu0}",
            mu1.operational
        );
    }
}

#[test]
fn recurrence_forms_agree_on_admissible_grid() {
    for &(n, s) in &NS_GRID {
        let probe = p(n, s, 2.0, 1.0);
        let ex = probe.exponents();
        let (q_lo, q_hi) = (ex.two_star - 2.0, ex.two_star - 1.0);
        for frac in [0.25, 0.5, 0.75] {
            let q = q_lo + frac * (q_hi - q_lo);
            for mu in [0.5, 1.0, 3.0] {
                let params = p(n, s, q, mu);
                let rec = params.mb_recurrence_constant().unwrap();
                let gap = (rec.k - rec.k_weight_form).abs() / rec.k.max(1e-300);
                assert!(gap <= 1e-10, "(n,s,q,mu)=({n},{s},{q},{mu}): gap {gap:e}");
            }
        }
    }
}

#[test]
fn constant_orbit_sits_at_threshold_level_on_grid() {
    for &(n, s) in &NS_GRID {
        let params = p(n, s, 2.0, 0.0);
        let ex = params.exponents();
        let h = dynamics::hamiltonian(&params, &PhaseState::new(0.0, ex.v_bar, 0.0));
        assert!(
            (h - ex.k_ns).abs() <= 1e-12 * ex.k_ns.max(1.0),
            "(n,s)=({n},{s}): H(v_bar) = {h} vs K = {}",
            ex.k_ns
        );
    }
}

#[test]
fn degenerate_root_matches_constant_limit_coefficient_on_grid() {
    // two independent formulas for the same constant: the double root of g
    // at mu0, and the closed-form limit coefficient
    for &(n, s) in &NS_GRID {
        let probe = p(n, s, 2.0, 1.0);
        let q_crit = probe.exponents().two_star - 1.0;
        let mu0 = probe.mu_zero();
        let params = p(n, s, q_crit, mu0);
        let eq = dynamics::crit_equilibria(&params).unwrap();
        assert!(eq.degenerate, "(n,s)=({n},{s})");
        let coeff = params.critical_thresholds().unwrap().u_const_coeff;
        assert!(
            (eq.v_plus - coeff).abs() <= 1e-10 * coeff.max(1.0),
            "(n,s)=({n},{s}): root {} vs coefficient {coeff}",
            eq.v_plus
        );
    }
}

#[test]
fn separatrix_energy_sign_flips_at_operational_mu_one_on_grid() {
    for &(n, s) in &[(3u32, 1.0), (4, 1.0), (5, 0.5), (6, 1.5)] {
        let probe = p(n, s, 2.0, 1.0);
        let q_crit = probe.exponents().two_star - 1.0;
        let mu1 = probe.mu_one().unwrap().operational;
        let e_sep = |mu: f64| {
            let params = p(n, s, q_crit, mu);
            let eq = dynamics::crit_equilibria(&params).unwrap();
            -params.crit_f_with(mu, eq.v_plus)
        };
        let delta = 1e-7;
        assert!(e_sep(mu1 * (1.0 - delta)) > 0.0, "(n,s)=({n},{s})");
        assert!(e_sep(mu1 * (1.0 + delta)) < 0.0, "(n,s)=({n},{s})");
    }
}

// ---------------------------------------------------------------------------
// dynamics: closed-form residuals and the reduction itself
// ---------------------------------------------------------------------------

/// Five-point second derivative from position samples.
fn second_derivative_5pt(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h) - f(x - 2.0 * h))
        / (12.0 * h * h)
}

#[test]
fn homoclinic_satisfies_flow_by_finite_differences() {
    let params = p(4, 1.0, 2.5, 0.0);
    let a = params.kappa_sq();
    let ps = params.exponents().two_star_s - 1.0;
    for i in 0..=40 {
        let t = -4.0 + 0.2 * i as f64;
        let ddv = second_derivative_5pt(|x| dynamics::homoclinic_profile(&params, x), t, 1e-3);
        let v = dynamics::homoclinic_profile(&params, t);
        let residual = (ddv - (a * v - v.powf(ps))).abs();
        assert!(residual < 1e-8, "t = {t}: residual {residual:e}");
    }
}

#[test]
fn periodic_orbit_satisfies_flow_by_finite_differences() {
    let params = p(4, 1.0, 2.5, 0.0);
    let a = params.kappa_sq();
    let ps = params.exponents().two_star_s - 1.0;
    let k = 1.0 / 12.0;
    let (v_min, _) = dynamics::turning_points(&params, k).unwrap();
    let settings = IntegrationSettings { tol: 1e-12, stride: 1e-3, ..Default::default() };
    let traj = integrate(&params, &PhaseState::new(0.0, v_min, 0.0), 8.0, &settings).unwrap();
    let s = &traj.samples;
    let h = 1e-3;
    let mut checked = 0;
    for i in (20..s.len() - 20).step_by(97) {
        // samples lie exactly on the stride grid
        let ddv = (-s[i + 2].v + 16.0 * s[i + 1].v - 30.0 * s[i].v + 16.0 * s[i - 1].v
            - s[i - 2].v)
            / (12.0 * h * h);
        let v = s[i].v;
        let residual = (ddv - (a * v - v.powf(ps))).abs();
        assert!(residual < 1e-8, "t = {}: residual {residual:e}", s[i].t);
        checked += 1;
    }
    assert!(checked > 50);
}

#[test]
fn bubble_satisfies_radial_equation() {
    // u'' + (n-1)/r u' + r^{-s} u^{2*(s)-1} = 0, second derivative taken by
    // differencing the analytic first derivative
    for &(n, s) in &[(4u32, 1.0), (3, 0.5), (5, 1.5)] {
        let params = p(n, s, 2.0, 0.0);
        let ps = params.exponents().two_star_s - 1.0;
        for lambda in [0.5, 1.0, 2.0] {
            for i in 0..=40 {
                let r = 0.1 * 10f64.powf(2.0 * i as f64 / 40.0); // [0.1, 10]
                let h = 1e-5 * r.max(0.5);
                let ddu = (dynamics::bubble_profile_deriv(&params, lambda, r + h)
                    - dynamics::bubble_profile_deriv(&params, lambda, r - h))
                    / (2.0 * h);
                let du = dynamics::bubble_profile_deriv(&params, lambda, r);
                let u = dynamics::bubble_profile(&params, lambda, r);
                let residual = ddu + (params.nf() - 1.0) / r * du + r.powf(-s) * u.powf(ps);
                assert!(
                    residual.abs() < 1e-8 * (1.0 + u.powf(ps) * r.powf(-s)),
                    "(n,s)=({n},{s}), lambda={lambda}, r={r}: {residual:e}"
                );
            }
        }
    }
}

#[test]
fn phase_reduction_matches_direct_radial_integration() {
    // Independent oracle: integrate the radial equation itself
    //   u'' = -(n-1)/r u' - r^{-s} u^{2*(s)-1} + mu u^q
    // with fixed-step RK4, transform to phase variables, and compare with
    // the phase-flow integrator.
    let params = p(4, 1.0, 2.5, 1.0);
    let ps = params.exponents().two_star_s - 1.0;
    let (n, s, q, mu) = (params.nf(), params.s(), params.q(), params.mu());
    let rhs = |r: f64, u: f64, du: f64| -> (f64, f64) {
        (du, -(n - 1.0) / r * du - r.powf(-s) * u.powf(ps) + mu * u.powf(q))
    };

    // start in phase variables, convert to radial
    let start = PhaseState::new(-0.5f64.ln(), 1.1, 0.2);
    let (r0, u0, du0) = ef_untransform(&params, &start);
    let r1 = 0.05;
    let steps = 200_000usize;
    let h = (r1 - r0) / steps as f64; // negative: integrating inward
    let (mut r, mut u, mut du) = (r0, u0, du0);
    let mut checkpoints: Vec<(f64, f64, f64)> = Vec::new();
    for i in 0..steps {
        if i % 10_000 == 0 {
            checkpoints.push((r, u, du));
        }
        let (k1u, k1d) = rhs(r, u, du);
        let (k2u, k2d) = rhs(r + 0.5 * h, u + 0.5 * h * k1u, du + 0.5 * h * k1d);
        let (k3u, k3d) = rhs(r + 0.5 * h, u + 0.5 * h * k2u, du + 0.5 * h * k2d);
        let (k4u, k4d) = rhs(r + h, u + h * k3u, du + h * k3d);
        u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
        du += h / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
        r += h;
    }
    checkpoints.push((r, u, du));

    let settings = IntegrationSettings { tol: 1e-12, ..Default::default() };
    let traj = integrate(&params, &start, -r1.ln() + 0.01, &settings).unwrap();
    let mut worst = 0.0f64;
    for &(rc, uc, duc) in &checkpoints {
        let oracle = ef_transform(&params, rc, uc, duc).unwrap();
        let ours = traj.state_at(oracle.t).unwrap();
        worst = worst.max((ours.v - oracle.v).abs());
        worst = worst.max((ours.dv - oracle.dv).abs());
    }
    assert!(worst < 1e-8, "max deviation {worst:e}");
}

#[test]
fn bubble_transform_equals_homoclinic_pointwise() {
    for &(n, s) in &[(4u32, 1.0), (5, 0.5), (3, 1.5)] {
        let params = p(n, s, 2.0, 0.0);
        for i in 0..=60 {
            let t = -6.0 + 0.2 * i as f64;
            let r = (-t).exp();
            let u = dynamics::bubble_profile(&params, 1.0, r);
            let du = dynamics::bubble_profile_deriv(&params, 1.0, r);
            let st = ef_transform(&params, r, u, du).unwrap();
            let v0 = dynamics::homoclinic_profile(&params, t);
            assert!(
                (st.v - v0).abs() <= 1e-10 * v0.max(1e-12),
                "(n,s)=({n},{s}), t={t}"
            );
        }
    }
}

#[test]
fn conservation_under_integration() {
    // mu = 0: Hamiltonian; q = 2*-1: energy. Both tracked by the drift field.
    let settings = IntegrationSettings { tol: 1e-10, ..Default::default() };
    let params = p(4, 1.0, 2.5, 0.0);
    for v0 in [0.6, 1.2, 1.45] {
        let traj = integrate(&params, &PhaseState::new(0.0, v0, 0.0), 50.0, &settings).unwrap();
        assert!(traj.drift < 1e-7, "v0 = {v0}: drift {:e}", traj.drift);
    }
    let params = p(4, 1.0, 3.0, 0.2);
    let traj = integrate(&params, &PhaseState::new(0.0, 1.3820, 0.3), 50.0, &settings).unwrap();
    assert!(traj.drift < 1e-7, "critical drift {:e}", traj.drift);
}

// ---------------------------------------------------------------------------
// pohozaev
// ---------------------------------------------------------------------------

#[test]
fn flux_is_radius_independent_when_mu_vanishes() {
    let params = p(4, 1.0, 2.5, 0.0);
    let ex = params.exponents();
    let settings = IntegrationSettings { tol: 1e-11, ..Default::default() };
    for v0 in [0.7, 1.2] {
        let traj = integrate(&params, &PhaseState::new(0.0, v0, 0.0), 8.0, &settings).unwrap();
        let vals: Vec<f64> = [0.9, 0.5, 0.2, 0.05, 0.01, 0.001]
            .iter()
            .map(|&r| pohozaev::pohozaev_at(&params, &traj, r).unwrap())
            .collect();
        let spread = vals.iter().cloned().fold(f64::MIN, f64::max)
            - vals.iter().cloned().fold(f64::MAX, f64::min);
        assert!(
            spread < 1e-7 * ex.omega * ex.k_ns.max(1.0),
            "v0 = {v0}: spread {spread:e}"
        );
    }
}

#[test]
fn flux_reductions_agree_at_random_states() {
    use rand::{rngs::StdRng, Rng, SeedableRng};
    let mut rng = StdRng::seed_from_u64(7);
    for _ in 0..100 {
        let n = rng.random_range(3u32..=6);
        let s = rng.random_range(0.2..1.8);
        let q = rng.random_range(1.5..4.0);
        let mu = rng.random_range(0.0..3.0);
        let params = p(n, s, q, mu);
        let st = PhaseState::new(
            rng.random_range(-1.5..2.0),
            rng.random_range(0.01..3.0),
            rng.random_range(-2.0..2.0),
        );
        let a = pohozaev::pohozaev_ef(&params, &st);
        let (r, u, du) = ef_untransform(&params, &st);
        let b = pohozaev::pohozaev_radial(&params, r, u, du).unwrap();
        assert!(
            (a - b).abs() <= 1e-10 * a.abs().max(1.0),
            "(n,s,q,mu)=({n},{s},{q},{mu}) at {st:?}: {a} vs {b}"
        );
    }
}

#[test]
fn flux_differences_are_positive_below_critical_q() {
    for mu in [0.3, 1.0, 2.5] {
        let params = p(4, 1.0, 2.5, mu);
        let settings = IntegrationSettings { tol: 1e-11, ..Default::default() };
        // large mu drives the orbit up fast; sample radii inside whatever
        // span the integration actually covered
        let traj = integrate(&params, &PhaseState::new(0.0, 0.9, 0.1), 5.0, &settings).unwrap();
        let r_hi = (-(traj.t_start() + 1e-6)).exp();
        let r_lo = (-(traj.t_end() - 1e-6)).exp();
        let vals: Vec<f64> = (0..5)
            .map(|i| {
                let t = (i as f64) / 4.0;
                let r = r_lo * (r_hi / r_lo).powf(t);
                pohozaev::pohozaev_at(&params, &traj, r).unwrap()
            })
            .collect();
        for w in vals.windows(2) {
            assert!(w[1] > w[0], "mu = {mu}: {vals:?}");
        }
    }
}

// ---------------------------------------------------------------------------
// classifier
// ---------------------------------------------------------------------------

fn geometric_r_grid(r_hi: f64, r_lo: f64, per_decade: usize) -> Vec<f64> {
    let t_lo = -r_hi.ln();
    let t_hi = -r_lo.ln();
    let steps = ((t_hi - t_lo) / std::f64::consts::LN_10 * per_decade as f64).ceil() as usize;
    (0..=steps)
        .map(|i| (-(t_lo + (t_hi - t_lo) * i as f64 / steps as f64)).exp())
        .collect()
}

#[test]
fn interleaving_and_convexity_on_oscillating_traces() {
    let params = p(4, 1.0, 2.5, 1.0);
    let eps0 = classifier::convexity_threshold(&params);

    // tower trace
    let radii = classifier::mb_generate(&params, 0.3, 7).unwrap();
    let orbit = BubbleSumOrbit { radii: radii.clone() };
    // reach two decades past the deepest scale so its peak is interior
    let r_lo = radii.last().unwrap() * 1e-2;
    let grid = geometric_r_grid(1.0, r_lo, 15);
    let trace = WTrace::from_phase_eval(params, &orbit, &grid, TraceSource::FromClosedForm).unwrap();
    let crit = classifier::critical_radii(&trace, eps0).unwrap();
    assert!(crit.interleaved_ok());
    assert_eq!(crit.maxima.len(), radii.len());
    assert_eq!(crit.minima.len(), radii.len() - 1);
    // maxima land within 2% of the generating scales
    for (found, expect) in crit.maxima.iter().zip(&radii) {
        assert!(
            (found / expect - 1.0).abs() < 0.02,
            "max at {found:e} vs scale {expect:e}"
        );
    }
    // detected minima sit below the convexity threshold and interleave
    for (i, &tau) in crit.minima.iter().enumerate() {
        assert!(tau < crit.maxima[i] && tau > crit.maxima[i + 1]);
    }
    convexity_check(&params, &trace, eps0);

    // periodic trace on a level deep enough to dip below the threshold
    let mu0 = params.with_mu(0.0).unwrap();
    let (v_min, _) = dynamics::turning_points(&mu0, 0.02).unwrap();
    let settings = IntegrationSettings { tol: 1e-11, ..Default::default() };
    let orbit = integrate(&mu0, &PhaseState::new(0.0, v_min, 0.0), 50.0, &settings).unwrap();
    let grid = geometric_r_grid(0.9, 1e-20, 50);
    let trace = WTrace::from_phase_eval(mu0, &orbit, &grid, TraceSource::FromTrajectory).unwrap();
    let crit = classifier::critical_radii(&trace, eps0).unwrap();
    assert!(crit.interleaved_ok());
    assert!(crit.minima.len() >= 5);
    convexity_check(&mu0, &trace, eps0);
}

/// Discrete convexity of `W(t)` wherever `W <= eps0`.
fn convexity_check(_params: &ProblemParams, trace: &WTrace, eps0: f64) {
    let samples = trace.samples();
    let mut below = 0usize;
    for i in 1..samples.len() - 1 {
        let (r_prev, w_prev) = samples[i - 1];
        let (r, w) = samples[i];
        let (r_next, w_next) = samples[i + 1];
        if w > eps0 {
            continue;
        }
        let (t1, t2, t3) = (-r_prev.ln(), -r.ln(), -r_next.ln());
        let d1 = (w - w_prev) / (t2 - t1);
        let d2 = (w_next - w) / (t3 - t2);
        let curv = (d2 - d1) / (0.5 * (t3 - t1));
        assert!(curv > 0.0, "W''({t2}) = {curv:e} at w = {w:e}");
        below += 1;
    }
    assert!(below > 0, "no samples below the threshold; check the trace");
}

#[test]
fn canonical_traces_classify_on_wider_grid() {
    // dimension-3 cascades underflow f64 beyond six scales, so that grid
    // point runs with a four-window requirement
    let cases: [(ProblemParams, f64, usize, usize); 2] = [
        (p(3, 0.5, 4.5, 1.0), 0.3, 6, 4),
        (p(6, 1.5, 1.7, 1.0), 0.3, 11, 5),
    ];
    for (params, r0, count, min_windows) in cases {
        let tol = ClassifyTolerances { min_windows, ..Default::default() };
        let ex = params.exponents();

        let grid = geometric_r_grid(5.0, 1e-7, 40);
        let trace = WTrace::from_phase_eval(
            params,
            &ClosedFormProfile::Bubble { lambda: 1.0 },
            &grid,
            TraceSource::FromClosedForm,
        )
        .unwrap();
        let verdict = classifier::classify(&params, &trace, &tol).unwrap();
        assert_eq!(verdict.tag, ProfileTag::Removable, "{params:?}: {verdict:?}");

        let radii = classifier::mb_generate(&params, r0, count).unwrap();
        assert!(radii.len() >= min_windows + 2, "{params:?}: {} scales", radii.len());
        let orbit = BubbleSumOrbit { radii: radii.clone() };
        let m = radii.len();
        let r_lo = (0.5 * (radii[m - 2].ln() + radii[m - 1].ln())).exp() * 1e-3;
        let grid = geometric_r_grid(1.0, r_lo, 12);
        let trace =
            WTrace::from_phase_eval(params, &orbit, &grid, TraceSource::FromClosedForm).unwrap();
        let verdict = classifier::classify(&params, &trace, &tol).unwrap();
        assert_eq!(verdict.tag, ProfileTag::Mb, "{params:?}: {verdict:?}");
        assert!((verdict.limsup_est / (ex.c_ns * 2f64.powf(-(params.nf() - 2.0) / (2.0 - params.s()))) - 1.0).abs() < 0.05);

        let grid = geometric_r_grid(0.5, 1e-7, 40);
        let trace = WTrace::from_phase_eval(
            params,
            &ClosedFormProfile::NdPower,
            &grid,
            TraceSource::FromClosedForm,
        )
        .unwrap();
        let verdict = classifier::classify(&params, &trace, &tol).unwrap();
        assert_eq!(verdict.tag, ProfileTag::Nd, "{params:?}: {verdict:?}");
    }
}

#[test]
fn bubble_trace_peak_is_scale_invariant() {
    let params = p(4, 1.0, 2.5, 1.0);
    let ex = params.exponents();
    let expect = ex.c_ns * 2f64.powf(-(params.nf() - 2.0) / (2.0 - params.s()));
    for lambda in [0.5, 1.0, 2.0] {
        let grid = geometric_r_grid(20.0 * lambda, 1e-4 * lambda, 60);
        let trace = WTrace::from_phase_eval(
            params,
            &ClosedFormProfile::Bubble { lambda },
            &grid,
            TraceSource::FromClosedForm,
        )
        .unwrap();
        let crit = classifier::critical_radii(&trace, 0.5).unwrap();
        assert_eq!(crit.maxima.len(), 1);
        assert!(
            (crit.w_at_max[0] - expect).abs() < 1e-4 * expect,
            "lambda = {lambda}: {} vs {expect}",
            crit.w_at_max[0]
        );
    }
}

#[test]
fn two_bubble_window_approximates_full_sum_between_scales() {
    let params = p(4, 1.0, 2.5, 1.0);
    let radii = classifier::mb_generate(&params, 0.3, 5).unwrap();
    for k in 0..radii.len() - 1 {
        let lam = (0.5 * (radii[k].ln() + radii[k + 1].ln())).exp();
        for factor in [0.5, 1.0, 2.0] {
            let r = lam * factor;
            let v = classifier::bubble_sum(&params, &radii, r).unwrap();
            assert!(
                ((v.total - v.two_bubble) / v.total).abs() < 0.01,
                "k = {k}, factor = {factor}: total {} vs window {}",
                v.total,
                v.two_bubble
            );
        }
    }
}

#[test]
fn nd_profile_transform_is_consistent() {
    // the power profile maps to the exponential phase orbit
    let params = p(4, 1.0, 2.5, 1.0);
    let profile = ClosedFormProfile::NdPower;
    for &r in &[0.5f64, 0.1, 1e-3] {
        let st = profile.phase_at(&params, -r.ln()).unwrap();
        let (u, _du) = profile.eval_radial(&params, r).unwrap();
        assert!((st.v - r.powf(params.kappa()) * u).abs() < 1e-12 * st.v);
    }
}

// ---------------------------------------------------------------------------
// property tests
// ---------------------------------------------------------------------------

proptest! {
    #[test]
    fn root_finder_matches_bisection_oracle(
        p_coef in 0.05f64..5.0,
        q_coef in -5.0f64..5.0,
    ) {
        // x^3 + p x + q with p > 0 is strictly increasing: unique root
        let f = move |x: f64| x * x * x + p_coef * x + q_coef;
        let bound = 1.0 + (q_coef.abs() / p_coef).max(q_coef.abs().cbrt());
        let tol = 1e-10;
        let bracket = Bracket::new(f, -bound, bound).unwrap();
        let brent = numerics::find_root(f, &bracket, tol).unwrap();

        let (mut lo, mut hi) = (-bound, bound);
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if f(mid) * f(lo) <= 0.0 { hi = mid; } else { lo = mid; }
        }
        let bisect = 0.5 * (lo + hi);
        prop_assert!((brent - bisect).abs() <= 2.0 * tol);
    }

    #[test]
    fn quadrature_is_additive(c in 0.02f64..2.98) {
        let f = |x: f64| (2.5 * x).sin().exp() / (1.0 + x * x);
        let whole = numerics::integrate_adaptive(f, &QuadSpec::plain(0.0, 3.0)).unwrap();
        let left = numerics::integrate_adaptive(f, &QuadSpec::plain(0.0, c)).unwrap();
        let right = numerics::integrate_adaptive(f, &QuadSpec::plain(c, 3.0)).unwrap();
        let gap = (left.value + right.value - whole.value).abs();
        prop_assert!(gap <= left.error + right.error + whole.error + 1e-12);
    }

    #[test]
    fn phase_transform_round_trips(
        r in 1e-3f64..10.0,
        u in 1e-3f64..50.0,
        du in -20.0f64..20.0,
        s in 0.2f64..1.8,
        n in 3u32..7,
    ) {
        let params = p(n, s, 2.0, 1.0);
        let st = ef_transform(&params, r, u, du).unwrap();
        let (r2, u2, du2) = ef_untransform(&params, &st);
        prop_assert!((r - r2).abs() <= 1e-12 * r);
        prop_assert!((u - u2).abs() <= 1e-12 * u);
        prop_assert!((du - du2).abs() <= 1e-11 * du.abs().max(u));
    }

    #[test]
    fn hamiltonian_level_sets_have_ordered_turning_points(frac in 0.01f64..0.99) {
        let params = p(4, 1.0, 2.5, 0.0);
        let ex = params.exponents();
        let k = frac * ex.k_ns;
        let (v_min, v_max) = dynamics::turning_points(&params, k).unwrap();
        prop_assert!(0.0 < v_min && v_min < ex.v_bar && ex.v_bar < v_max);
        // both ends sit on the level
        let h_lo = dynamics::hamiltonian(&params, &PhaseState::new(0.0, v_min, 0.0));
        let h_hi = dynamics::hamiltonian(&params, &PhaseState::new(0.0, v_max, 0.0));
        prop_assert!((h_lo - k).abs() < 1e-12 * k.max(1e-6));
        prop_assert!((h_hi - k).abs() < 1e-12 * k.max(1e-6));
    }
}
