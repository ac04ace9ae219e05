//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured quantities. Run with `cargo test --test acceptance`.

use std::time::Instant;

use bubbletower::classifier::{
    self, BubbleSumOrbit, ClassifyTolerances, ProfileTag, TraceSource, WTrace,
};
use bubbletower::dynamics::{
    self, crit_classify_orbit, crit_equilibria, integrate, ClosedFormProfile,
    IntegrationSettings, OrbitTag, PhaseState,
};
use bubbletower::pohozaev::{self, AsymptoticOptions};
use bubbletower::ProblemParams;

fn p(n: u32, s: f64, q: f64, mu: f64) -> ProblemParams {
    ProblemParams::new(n, s, q, mu).unwrap()
}

fn geometric_r_grid(r_hi: f64, r_lo: f64, per_decade: usize) -> Vec<f64> {
    let t_lo = -r_hi.ln();
    let t_hi = -r_lo.ln();
    let steps = ((t_hi - t_lo) / std::f64::consts::LN_10 * per_decade as f64).ceil() as usize;
    (0..=steps)
        .map(|i| (-(t_lo + (t_hi - t_lo) * i as f64 / steps as f64)).exp())
        .collect()
}

/// First return time to the starting minimum of a mu = 0 level orbit:
/// the first `t > 0` where `dv` crosses zero from below at a local minimum
/// of `v`, i.e. the second upward crossing after leaving the turning point.
fn first_return_time(params: &ProblemParams, v_min: f64, horizon: f64) -> f64 {
    let settings = IntegrationSettings { tol: 1e-12, stride: 0.005, ..Default::default() };
    let start = PhaseState::new(0.0, v_min, 0.0);
    let traj = integrate(params, &start, horizon, &settings).unwrap();
    let s = &traj.samples;
    for w in s.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        // upward crossing of dv with v below the constant orbit: a minimum
        if a.t > 0.5 && a.dv < 0.0 && b.dv >= 0.0 {
            // refine on the interpolant of dv
            let f = |t: f64| traj.state_at(t).unwrap().dv;
            let bracket = bubbletower::numerics::Bracket::new(f, a.t, b.t).unwrap();
            return bubbletower::numerics::find_root(f, &bracket, 1e-12).unwrap();
        }
    }
    panic!("no return within the horizon");
}

#[test]
fn criterion_01_closed_form_constants() {
    let started = Instant::now();
    let params = p(4, 1.0, 2.5, 1.0);
    let ex = params.exponents();
    let eps0 = classifier::convexity_threshold(&params);
    let mu0 = params.mu_zero();

    assert!((ex.two_star_s - 3.0).abs() <= 1e-12);
    assert!((ex.c_ns - 6.0).abs() <= 1e-12);
    assert!((ex.k_ns - 1.0 / 6.0).abs() <= 1e-12);
    assert!((ex.v_bar - 1.0).abs() <= 1e-12);
    assert!((mu0 - 0.25).abs() <= 1e-12);
    assert!((eps0 - 0.5).abs() <= 1e-12);
    let dt = started.elapsed();
    assert!(dt.as_secs_f64() < 1.0, "took {dt:?}");
    println!(
        "PASS criterion 1: 2*(s)={} c_ns={} K_ns={} v_bar={} mu0={mu0} eps0={eps0} ({dt:?})",
        ex.two_star_s, ex.c_ns, ex.k_ns, ex.v_bar
    );
}

#[test]
fn criterion_02_homoclinic_fidelity() {
    let started = Instant::now();
    let params = p(4, 1.0, 2.5, 0.0);

    let settings = IntegrationSettings { tol: 1e-12, ..Default::default() };
    let traj = integrate(&params, &PhaseState::new(0.0, 1.5, 0.0), 10.0, &settings).unwrap();
    let mut worst_rel = 0.0f64;
    for s in &traj.samples {
        let want = dynamics::homoclinic_profile(&params, s.t);
        worst_rel = worst_rel.max((s.v - want).abs() / want);
    }
    assert!(worst_rel <= 1e-8, "max relative error {worst_rel:e}");

    let settings = IntegrationSettings { tol: 1e-10, ..Default::default() };
    let long = integrate(&params, &PhaseState::new(0.0, 1.5, 0.0), 50.0, &settings).unwrap();
    assert!(long.drift < 1e-7, "drift {:e}", long.drift);

    let dt = started.elapsed();
    assert!(dt.as_secs_f64() < 1.0, "took {dt:?}");
    println!(
        "PASS criterion 2: max rel err {worst_rel:.3e} on [0,10]; H drift {:.3e} on [0,50] ({dt:?})",
        long.drift
    );
}

#[test]
fn criterion_03_flux_invariance_of_limit_orbits() {
    let params = p(4, 1.0, 2.5, 0.0);
    let omega = params.exponents().omega;

    let mut worst_bubble = 0.0f64;
    for lambda in [0.5, 1.0, 2.0] {
        let profile = ClosedFormProfile::Bubble { lambda };
        for r in [0.1, 1.0, 10.0] {
            let val = pohozaev::pohozaev_at(&params, &profile, r).unwrap();
            worst_bubble = worst_bubble.max(val.abs());
        }
    }
    assert!(worst_bubble < 1e-8 * omega, "max |P_r(bubble)| = {worst_bubble:e}");

    let k = params.exponents().k_ns / 2.0;
    let profile = ClosedFormProfile::PeriodicVk { k, phase: 0.0 };
    let mut worst_periodic = 0.0f64;
    for r in [0.1, 0.4, 1.0] {
        let val = pohozaev::pohozaev_at(&params, &profile, r).unwrap();
        worst_periodic = worst_periodic.max((val - omega * k).abs() / (omega * k));
    }
    assert!(worst_periodic < 1e-6, "max rel err {worst_periodic:e}");
    println!(
        "PASS criterion 3: |P_r(U_lambda)| <= {worst_bubble:.2e} (< 1e-8 w); P_r(v_K) rel err {worst_periodic:.2e}"
    );
}

#[test]
fn criterion_04_flux_identity_along_solutions() {
    // generic subcritical q: positive residual test on r in [0.05, 0.5]
    let params = p(4, 1.0, 2.5, 1.0);
    let settings = IntegrationSettings { tol: 1e-12, ..Default::default() };
    let start = PhaseState::new(-0.5f64.ln(), 1.0, 0.0);
    let traj = integrate(&params, &start, 3.1, &settings).unwrap();
    let report = pohozaev::identity_residual(&params, &traj, 0.05, 0.5).unwrap();
    let rel = report.relative_residual();
    assert!(rel < 1e-5, "relative residual {rel:e}");
    assert!(report.bulk > 0.0);

    // critical q: zero bulk and r-independent flux
    let params_c = p(4, 1.0, 3.0, 0.2);
    let start = PhaseState::new(0.0, 1.3820, 0.3);
    let traj_c = integrate(&params_c, &start, 5.0, &settings).unwrap();
    let report_c = pohozaev::identity_residual(&params_c, &traj_c, 0.05, 0.9).unwrap();
    assert_eq!(report_c.bulk, 0.0);
    let mut spread = 0.0f64;
    let base = report_c.p_r1;
    for r in [0.05, 0.1, 0.2, 0.4, 0.8] {
        let val = pohozaev::pohozaev_at(&params_c, &traj_c, r).unwrap();
        spread = spread.max((val - base).abs());
    }
    assert!(spread < 1e-8, "P_r spread {spread:e}");
    println!(
        "PASS criterion 4: generic-q rel residual {rel:.2e}; critical-q bulk = 0, P_r spread {spread:.2e}"
    );
}

#[test]
fn criterion_05_turning_points_and_period() {
    let params = p(4, 1.0, 2.5, 0.0);
    let ex = params.exponents();

    let (v_min, v_max) = dynamics::turning_points(&params, 1.0 / 12.0).unwrap();
    assert!((v_min - 0.5).abs() <= 1e-10);
    assert!((v_max - (1.0 + 3f64.sqrt()) / 2.0).abs() <= 1e-10);

    let t_quad = dynamics::period(&params, 1.0 / 12.0).unwrap();
    let t_oracle = first_return_time(&params, v_min, 20.0);
    let rel = (t_quad - t_oracle).abs() / t_oracle;
    assert!(rel < 1e-6, "quadrature {t_quad} vs first return {t_oracle} (rel {rel:e})");
    // independent cross-check value
    assert!((t_quad - 6.901643615).abs() < 1e-8, "{t_quad}");

    let t_small = dynamics::period(&params, 0.999 * ex.k_ns).unwrap();
    let two_pi = 2.0 * std::f64::consts::PI;
    assert!((t_small - two_pi).abs() < 0.01 * two_pi, "{t_small}");

    let t_deep = dynamics::period(&params, 1e-6 * ex.k_ns).unwrap();
    let t_half = dynamics::period(&params, ex.k_ns / 2.0).unwrap();
    assert!(t_deep > t_half);
    println!(
        "PASS criterion 5: tp=({v_min},{v_max}); T(1/12)={t_quad:.9} vs oracle {t_oracle:.9}; T(0.999K)={t_small:.6}; T(1e-6 K)={t_deep:.3} > {t_half:.3}"
    );
}

#[test]
fn criterion_06_recurrence_constant() {
    let params = p(4, 1.0, 2.5, 1.0);
    let rec = params.mb_recurrence_constant().unwrap();

    // Beta-function oracle: int_0^inf r^3 (1+r)^{-7} dr = G(4)G(3)/G(7)
    let beta_oracle = 6.0 * 2.0 / 5040.0 * 7.0; // = 1/60
    assert!((rec.radial_integral - beta_oracle).abs() < 1e-8, "{}", rec.radial_integral);

    // hand-assembled constant
    let k_oracle = (0.5 * 6f64.powf(3.5) / (3.5 * 2.0 * 36.0 * 60.0)).powi(2);
    assert!((rec.k - k_oracle).abs() <= 1e-10 * k_oracle, "{} vs {k_oracle}", rec.k);
    assert!((rec.k - 3.061e-4).abs() < 1e-6);

    // the two published forms agree
    let gap = (rec.k - rec.k_weight_form).abs() / rec.k;
    assert!(gap <= 1e-10, "form gap {gap:e}");
    println!(
        "PASS criterion 6: integral {:.12} (=1/60); K = {:.6e} (forms agree to {gap:.1e})",
        rec.radial_integral, rec.k
    );
}

#[test]
fn criterion_07_critical_thresholds() {
    let params = p(4, 1.0, 3.0, 0.2);

    // brute-force oracle: bisect mu on the sign of min_v g(v)
    let min_g = |mu: f64| -> f64 {
        // golden-section minimization on (1e-4, 50)
        let g = |v: f64| params.crit_g_with(mu, v);
        let (mut a, mut b) = (1e-4f64, 50.0f64);
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut c, mut d) = (b - phi * (b - a), a + phi * (b - a));
        for _ in 0..200 {
            if g(c) < g(d) {
                b = d;
            } else {
                a = c;
            }
            c = b - phi * (b - a);
            d = a + phi * (b - a);
        }
        g(0.5 * (a + b))
    };
    let (mut lo, mut hi) = (0.01f64, 1.0f64);
    assert!(min_g(lo) < 0.0 && min_g(hi) > 0.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if min_g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mu0_oracle = 0.5 * (lo + hi);
    let mu0 = params.mu_zero();
    assert!((mu0 - mu0_oracle).abs() <= 1e-8, "{mu0} vs oracle {mu0_oracle}");
    assert!((mu0 - 0.25).abs() <= 1e-12);

    let mu_one = params.mu_one().unwrap();
    assert!((mu_one.operational - 2.0 / 9.0).abs() <= 1e-10);
    assert!((mu_one.saddle_v - 3.0).abs() <= 1e-10);
    let f_at_saddle = params.crit_f_with(mu_one.operational, 3.0);
    assert!(f_at_saddle.abs() <= 1e-10, "{f_at_saddle:e}");
    assert!(!mu_one.consistent, "printed form should be flagged as mismatching");

    // E_sep changes sign exactly at the operational threshold
    let e_sep = |mu: f64| {
        let pp = p(4, 1.0, 3.0, mu);
        let eq = crit_equilibria(&pp).unwrap();
        -pp.crit_f_with(mu, eq.v_plus)
    };
    let delta = 1e-6;
    assert!(e_sep(mu_one.operational * (1.0 - delta)) > 0.0);
    assert!(e_sep(mu_one.operational * (1.0 + delta)) < 0.0);
    println!(
        "PASS criterion 7: mu0={mu0} (oracle {mu0_oracle:.10}); mu1_op={:.10} saddle v+=3, F(3)={f_at_saddle:.1e}; printed mu1={} flagged mismatch; E_sep flips at mu1",
        mu_one.operational, mu_one.printed
    );
}

#[test]
fn criterion_08_orbit_classification() {
    // periodic orbit with verified first return
    let params = p(4, 1.0, 3.0, 0.2);
    let start = PhaseState::new(0.0, 1.3820, 0.3);
    let class = crit_classify_orbit(&params, &start).unwrap();
    assert_eq!(class.tag, OrbitTag::Periodic);

    let settings = IntegrationSettings { tol: 1e-12, stride: 0.005, ..Default::default() };
    let traj = integrate(&params, &start, 30.0, &settings).unwrap();
    let mut returned = false;
    for w in traj.samples.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if a.t > 0.5 && a.dv > 0.0 && (a.v - start.v) * (b.v - start.v) <= 0.0 {
            // v crosses its initial value moving upward; compare dv there
            let f = |t: f64| traj.state_at(t).unwrap().v - start.v;
            let bracket = bubbletower::numerics::Bracket::new(f, a.t, b.t).unwrap();
            let t_ret = bubbletower::numerics::find_root(f, &bracket, 1e-10).unwrap();
            let st = traj.state_at(t_ret).unwrap();
            if (st.dv - start.dv).abs() < 1e-6 {
                returned = true;
                break;
            }
        }
    }
    assert!(returned, "orbit did not return to its initial point");

    // constant orbit at the saddle
    let eq = crit_equilibria(&params).unwrap();
    let class = crit_classify_orbit(&params, &PhaseState::new(0.0, eq.v_plus, 0.0)).unwrap();
    assert_eq!(class.tag, OrbitTag::Constant);

    // separatrix orbit at mu = 0.23: classified homoclinic, and the
    // integrated orbit reaches the saddle to 1e-4 by t = 40 and dwells there
    let params = p(4, 1.0, 3.0, 0.23);
    let eq = crit_equilibria(&params).unwrap();
    let f_sep = params.crit_f_with(0.23, eq.v_plus);
    let g = |v: f64| params.crit_f_with(0.23, v) - f_sep;
    let bracket = bubbletower::numerics::Bracket::new(g, 1e-6, eq.v_minus).unwrap();
    let v_h = bubbletower::numerics::find_root(g, &bracket, 1e-15).unwrap();

    let class = crit_classify_orbit(&params, &PhaseState::new(0.0, v_h, 0.0)).unwrap();
    assert_eq!(class.tag, OrbitTag::HomoclinicToSaddle);

    let traj = integrate(&params, &PhaseState::new(0.0, v_h, 0.0), 40.0, &settings).unwrap();
    let mut t_first: Option<f64> = None;
    let mut dwell_end = 0.0f64;
    for s in &traj.samples {
        if (s.v - eq.v_plus).abs() <= 1e-4 {
            if t_first.is_none() {
                t_first = Some(s.t);
            }
            if t_first.is_some() && dwell_end < s.t {
                dwell_end = s.t;
            }
        } else if t_first.is_some() && dwell_end > t_first.unwrap() {
            break;
        }
    }
    let t_first = t_first.expect("separatrix orbit never approached the saddle");
    assert!(t_first <= 40.0);
    assert!(
        dwell_end - t_first >= 5.0,
        "approach too brief: [{t_first}, {dwell_end}]"
    );
    println!(
        "PASS criterion 8: periodic return verified; saddle constant; separatrix orbit within 1e-4 of v+ from t={t_first:.2} to t={dwell_end:.2}"
    );
}

fn canonical_four(params: &ProblemParams, r0: f64, count: usize) {
    let tol = ClassifyTolerances::default();
    let ex = params.exponents();

    // bubble -> removable
    let grid = geometric_r_grid(5.0, 1e-7, 40);
    let trace = WTrace::from_phase_eval(
        *params,
        &ClosedFormProfile::Bubble { lambda: 1.0 },
        &grid,
        TraceSource::FromClosedForm,
    )
    .unwrap();
    let verdict = classifier::classify(params, &trace, &tol).unwrap();
    assert_eq!(verdict.tag, ProfileTag::Removable, "bubble: {verdict:?}");

    // periodic level -> bounded oscillation
    let k = ex.k_ns / 2.0;
    let mu0_params = params.with_mu(0.0).unwrap();
    let (v_min, _) = dynamics::turning_points(&mu0_params, k).unwrap();
    let settings = IntegrationSettings { tol: 1e-11, ..Default::default() };
    let orbit = integrate(&mu0_params, &PhaseState::new(0.0, v_min, 0.0), 60.0, &settings).unwrap();
    let grid = geometric_r_grid(0.9, 1e-25, 40);
    let trace =
        WTrace::from_phase_eval(mu0_params, &orbit, &grid, TraceSource::FromTrajectory).unwrap();
    let verdict = classifier::classify(&mu0_params, &trace, &tol).unwrap();
    assert_eq!(verdict.tag, ProfileTag::Cgs, "periodic: {verdict:?}");

    // bubble tower -> multi-bump
    let radii = classifier::mb_generate(params, r0, count).unwrap();
    assert!(radii.len() >= 7, "cascade too shallow: {}", radii.len());
    let orbit = BubbleSumOrbit { radii: radii.clone() };
    let m = radii.len();
    let r_lo = (0.5 * (radii[m - 2].ln() + radii[m - 1].ln())).exp() * 1e-3;
    let grid = geometric_r_grid(1.0, r_lo, 12);
    let trace = WTrace::from_phase_eval(*params, &orbit, &grid, TraceSource::FromClosedForm).unwrap();
    let verdict = classifier::classify(params, &trace, &tol).unwrap();
    assert_eq!(verdict.tag, ProfileTag::Mb, "tower: {verdict:?}");

    // exact power balance -> non-differential
    let grid = geometric_r_grid(0.5, 1e-7, 40);
    let trace = WTrace::from_phase_eval(
        *params,
        &ClosedFormProfile::NdPower,
        &grid,
        TraceSource::FromClosedForm,
    )
    .unwrap();
    let verdict = classifier::classify(params, &trace, &tol).unwrap();
    assert_eq!(verdict.tag, ProfileTag::Nd, "power: {verdict:?}");
    let nd = params.nd_profile().unwrap();
    let est = verdict.nd_limit_est.unwrap();
    assert!((est - nd.coeff).abs() < 1e-6 * nd.coeff.max(1.0), "{est}");
}

#[test]
fn criterion_09_profile_classifier() {
    canonical_four(&p(4, 1.0, 2.5, 1.0), 0.3, 7);
    canonical_four(&p(5, 0.5, 2.2, 1.0), 0.3, 14);

    // fit-generate round trip
    let params = p(4, 1.0, 2.5, 1.0);
    let radii = classifier::mb_generate(&params, 0.3, 6).unwrap();
    let fit = classifier::mb_fit(&params, &radii, None).unwrap();
    assert!((fit.beta_hat - fit.beta_expected).abs() <= 1e-10);
    assert!((fit.k_hat - fit.k_expected).abs() <= 1e-10 * fit.k_expected);

    // the tower's asymptotic flux estimate is compatible with zero
    let ex = params.exponents();
    let radii = classifier::mb_generate(&params, 0.3, 7).unwrap();
    let orbit = BubbleSumOrbit { radii };
    let tol = 1e-4 * ex.omega * ex.k_ns;
    let opts = AsymptoticOptions { r0: 0.25, abs_tol: tol, max_rungs: 45 };
    let est = pohozaev::asymptotic_pohozaev(&params, &orbit, &opts).unwrap();
    assert!(est.value.abs() < tol, "asymptotic estimate {:e} vs {tol:e}", est.value);
    println!(
        "PASS criterion 9: canonical 4/4 at (4,1,2.5,1) and (5,0.5,2.2,1); fit round trip exact; tower flux estimate {:.2e} ~ 0",
        est.value
    );
}

#[test]
fn criterion_10_nd_cancellation() {
    use rand::{rngs::StdRng, Rng, SeedableRng};
    let mut rng = StdRng::seed_from_u64(0x1bb1e);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(3u32..=6);
        let s = rng.random_range(0.2..1.8);
        let probe = ProblemParams::new(n, s, 2.0, 1.0).unwrap();
        let ex = probe.exponents();
        let q_lo = ex.two_star_s - 1.0;
        let q_hi = ex.two_star - 1.0;
        let q = q_lo + rng.random_range(0.2..0.8) * (q_hi - q_lo);
        let mu = rng.random_range(0.1..10.0);
        let params = ProblemParams::new(n, s, q, mu).unwrap();
        let nd = params.nd_profile().unwrap();
        let r = rng.random_range(0.01..10.0);
        let u = nd.eval(r);
        let nl = pohozaev::nonlinearity(&params, r, u).unwrap();
        let scale = (u.powf(ex.two_star_s - 1.0) / r.powf(s)).abs();
        worst = worst.max(nl.f.abs() / scale);
    }
    assert!(worst <= 1e-11, "worst relative residual {worst:e}");

    // p_nd exceeds (n-2)/2 exactly on the sub-Sobolev side
    for &(n, s) in &[(3u32, 0.5), (4, 1.0), (5, 0.5), (5, 1.5), (6, 0.25)] {
        let probe = ProblemParams::new(n, s, 2.0, 1.0).unwrap();
        let ex = probe.exponents();
        let q_lo = ex.two_star_s - 1.0;
        let q_hi = ex.two_star - 1.0;
        for frac in [0.05, 0.3, 0.6, 0.95] {
            let q = q_lo + frac * (q_hi - q_lo);
            let params = ProblemParams::new(n, s, q, 1.0).unwrap();
            if params.regime().nd_admissible {
                let nd = params.nd_profile().unwrap();
                assert!(nd.p_nd > params.kappa(), "(n,s,q)=({n},{s},{q})");
            }
        }
    }
    println!("PASS criterion 10: 100 random draws cancel to {worst:.2e}; exponent ordering holds");
}
