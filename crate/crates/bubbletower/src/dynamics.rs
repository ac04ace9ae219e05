//! The phase-plane dynamical system obtained from the radial equation by the
//! change of variables `v(t) = r^{(n-2)/2} u(r)`, `t = -ln r`:
//!
//! ```text
//!     v'' = (n-2)^2/4 v - v^{2*(s)-1} + μ e^{-γt} v^q,      γ = (n-2)(2*-1-q)/2.
//! ```
//!
//! For `μ = 0` the flow conserves
//! `H = -(v')^2/2 + (n-2)^2/8 v^2 - v^{2*(s)}/2*(s)`; for `q = 2*-1` (γ = 0)
//! it conserves `E = (v')^2/2 - F(v)` with
//! `F(v) = (n-2)^2/8 v^2 + μ v^{2*}/2* - v^{2*(s)}/2*(s)`.
//!
//! Besides the integrator this module owns every closed-form orbit: the
//! bubble family, the homoclinic, the periodic level sets, the constant
//! orbits, and the non-differential power profile.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{self, Bracket, QuadSpec};
use crate::params::{ProblemParams, RegimeTag};

/// A point of a phase-plane orbit: time `t = -ln r`, height `v >= 0`, and
/// velocity `dv = v'(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseState {
    pub t: f64,
    pub v: f64,
    pub dv: f64,
}

impl PhaseState {
    pub fn new(t: f64, v: f64, dv: f64) -> Self {
        PhaseState { t, v, dv }
    }
}

// ---------------------------------------------------------------------------
// Variable changes
// ---------------------------------------------------------------------------

/// Maps a radial point `(r, u, du)` to phase variables:
/// `t = -ln r`, `v = r^{(n-2)/2} u`, `dv = -(n-2)/2 v - r^{(n-2)/2+1} du`.
pub fn ef_transform(params: &ProblemParams, r: f64, u: f64, du: f64) -> Result<PhaseState> {
    if !(r > 0.0) {
        return Err(Error::domain(format!("radius must be positive, got {r}")));
    }
    let kappa = params.kappa();
    let rp = r.powf(kappa);
    let v = rp * u;
    let dv = -kappa * v - rp * r * du;
    Ok(PhaseState { t: -r.ln(), v, dv })
}

/// Inverse of [`ef_transform`]: recovers `(r, u, du)` from a phase point.
pub fn ef_untransform(params: &ProblemParams, state: &PhaseState) -> (f64, f64, f64) {
    let kappa = params.kappa();
    let r = (-state.t).exp();
    let rp = r.powf(kappa);
    let u = state.v / rp;
    let du = -(state.dv + kappa * state.v) / (rp * r);
    (r, u, du)
}

// ---------------------------------------------------------------------------
// Vector field
// ---------------------------------------------------------------------------

/// Precomputed coefficients of the flow.
#[derive(Debug, Clone, Copy)]
struct EfSystem {
    a: f64,      // (n-2)^2/4
    ps: f64,     // 2*(s)-1
    q: f64,
    mu: f64,
    gamma: f64,
}

impl EfSystem {
    fn new(params: &ProblemParams) -> Self {
        let ex = params.exponents();
        EfSystem {
            a: params.kappa_sq(),
            ps: ex.two_star_s - 1.0,
            q: params.q(),
            mu: params.mu(),
            gamma: ex.gamma,
        }
    }

    fn accel(&self, t: f64, v: f64) -> f64 {
        // Stages of a step may transiently dip below zero; clamp before the
        // fractional powers.
        let vp = v.max(0.0);
        let mut ddv = self.a * v - vp.powf(self.ps);
        if self.mu != 0.0 {
            ddv += self.mu * (-self.gamma * t).exp() * vp.powf(self.q);
        }
        ddv
    }
}

/// The right-hand side `(v', v'')` at a phase point.
pub fn vector_field(params: &ProblemParams, state: &PhaseState) -> (f64, f64) {
    let sys = EfSystem::new(params);
    (state.dv, sys.accel(state.t, state.v))
}

// ---------------------------------------------------------------------------
// Conserved quantities
// ---------------------------------------------------------------------------

/// `H = -(dv)^2/2 + (n-2)^2/8 v^2 - v^{2*(s)}/2*(s)`.
///
/// Exactly conserved when `mu = 0`; otherwise a diagnostic.
pub fn hamiltonian(params: &ProblemParams, state: &PhaseState) -> f64 {
    let ex = params.exponents();
    -state.dv * state.dv / 2.0 + params.kappa_sq() / 2.0 * state.v * state.v
        - state.v.max(0.0).powf(ex.two_star_s) / ex.two_star_s
}

/// `E = (dv)^2/2 - F(v)`, conserved along the Sobolev-critical flow.
/// Errors with `Regime` unless `q = 2*-1`.
pub fn crit_energy(params: &ProblemParams, state: &PhaseState) -> Result<f64> {
    require_critical(params)?;
    Ok(state.dv * state.dv / 2.0 - params.crit_f_with(params.mu(), state.v))
}

fn require_critical(params: &ProblemParams) -> Result<()> {
    if params.regime().tag != RegimeTag::CriticalSobolev {
        let ex = params.exponents();
        return Err(Error::Regime(format!(
            "operation defined only at q = 2*-1 = {} (got q = {})",
            ex.two_star - 1.0,
            params.q()
        )));
    }
    Ok(())
}

/// The conserved (or diagnostic) density tracked along trajectories:
/// `-(dv)^2/2 + (n-2)^2/8 v^2 - v^{2*(s)}/2*(s) + μ e^{-γt} v^{q+1}/(q+1)`.
///
/// Reduces to `H` when `μ = 0` and to `-E` when `q = 2*-1`; for general
/// parameters it equals the flux integral divided by `ω_{n-1}` and drifts
/// monotonically.
pub fn flux_density(params: &ProblemParams, state: &PhaseState) -> f64 {
    let ex = params.exponents();
    let vp = state.v.max(0.0);
    let mut d = -state.dv * state.dv / 2.0 + params.kappa_sq() / 2.0 * state.v * state.v
        - vp.powf(ex.two_star_s) / ex.two_star_s;
    if params.mu() != 0.0 {
        d += params.mu() * (-ex.gamma * state.t).exp() * vp.powf(params.q() + 1.0)
            / (params.q() + 1.0);
    }
    d
}

// ---------------------------------------------------------------------------
// Integrator
// ---------------------------------------------------------------------------

/// Invariant-manifold handling after accepted steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Conservation {
    /// Project the state back onto the conserved level set whenever one
    /// exists (`mu = 0` or `q = 2*-1`). Orbits near separatrices and
    /// long-time tails are tracked far more faithfully this way.
    Auto,
    /// Raw embedded-pair output.
    Off,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct IntegrationSettings {
    /// Local error tolerance per step (relative, with a small absolute floor).
    pub tol: f64,
    /// Output sample spacing in `t`; steps land exactly on the grid.
    pub stride: f64,
    /// Halt with `Overflow` when `v` exceeds this ceiling.
    pub v_ceiling: f64,
    pub conserve: Conservation,
}

impl Default for IntegrationSettings {
    fn default() -> Self {
        IntegrationSettings {
            tol: 1e-10,
            stride: 0.01,
            v_ceiling: 1e8,
            conserve: Conservation::Auto,
        }
    }
}

impl IntegrationSettings {
    pub fn with_tol(tol: f64) -> Self {
        IntegrationSettings { tol, ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum HaltReason {
    /// Reached `t_end`.
    SpanComplete,
    /// `v` crossed zero; the final sample sits at the located crossing.
    PositivityLost,
    /// `v` exceeded the configured ceiling.
    Overflow,
}

/// An integrated orbit: samples strictly increasing in `t`, the halt reason,
/// and the maximal drift of the applicable conserved density.
#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub params: ProblemParams,
    pub samples: Vec<PhaseState>,
    pub halt: HaltReason,
    /// Max over samples of `|flux_density - flux_density(t0)|`. An exact
    /// invariant exists only for `mu = 0` or `q = 2*-1`; otherwise this is a
    /// diagnostic of the (physical plus numerical) drift.
    pub drift: f64,
}

impl Trajectory {
    pub fn t_start(&self) -> f64 {
        self.samples.first().map(|s| s.t).unwrap_or(f64::NAN)
    }

    pub fn t_end(&self) -> f64 {
        self.samples.last().map(|s| s.t).unwrap_or(f64::NAN)
    }

    /// Cubic Hermite interpolation between the bracketing samples.
    pub fn state_at(&self, t: f64) -> Result<PhaseState> {
        let (lo, hi) = (self.t_start(), self.t_end());
        if !(t >= lo && t <= hi) {
            return Err(Error::OutOfSpan { t, lo, hi });
        }
        let idx = match self
            .samples
            .binary_search_by(|s| s.t.total_cmp(&t))
        {
            Ok(i) => return Ok(self.samples[i]),
            Err(i) => i,
        };
        let s0 = &self.samples[idx - 1];
        let s1 = &self.samples[idx];
        let sys = EfSystem::new(&self.params);
        let v = hermite(t, s0.t, s0.v, s0.dv, s1.t, s1.v, s1.dv);
        let dv = hermite(
            t,
            s0.t,
            s0.dv,
            sys.accel(s0.t, s0.v),
            s1.t,
            s1.dv,
            sys.accel(s1.t, s1.v),
        );
        Ok(PhaseState { t, v, dv })
    }
}

/// Cubic Hermite basis evaluation on `[t0, t1]`.
fn hermite(t: f64, t0: f64, y0: f64, d0: f64, t1: f64, y1: f64, d1: f64) -> f64 {
    let h = t1 - t0;
    let x = (t - t0) / h;
    let x2 = x * x;
    let x3 = x2 * x;
    y0 * (2.0 * x3 - 3.0 * x2 + 1.0)
        + d0 * h * (x3 - 2.0 * x2 + x)
        + y1 * (-2.0 * x3 + 3.0 * x2)
        + d1 * h * (x3 - x2)
}

// Dormand-Prince 5(4) tableau.
const DP_C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 6] = [
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

#[derive(Debug, Clone, Copy)]
enum Invariant {
    Hamiltonian,
    CritEnergy,
}

fn invariant_for(params: &ProblemParams, conserve: Conservation) -> Option<Invariant> {
    match conserve {
        Conservation::Off => None,
        Conservation::Auto => {
            if params.mu() == 0.0 {
                Some(Invariant::Hamiltonian)
            } else if params.regime().tag == RegimeTag::CriticalSobolev {
                Some(Invariant::CritEnergy)
            } else {
                None
            }
        }
    }
}

fn invariant_value(params: &ProblemParams, inv: Invariant, v: f64, dv: f64) -> (f64, f64, f64) {
    // Returns (value, d/dv, d/ddv).
    let ex = params.exponents();
    let vp = v.max(0.0);
    match inv {
        Invariant::Hamiltonian => {
            let h = -dv * dv / 2.0 + params.kappa_sq() / 2.0 * v * v
                - vp.powf(ex.two_star_s) / ex.two_star_s;
            (h, params.kappa_sq() * v - vp.powf(ex.two_star_s - 1.0), -dv)
        }
        Invariant::CritEnergy => {
            let e = dv * dv / 2.0 - params.crit_f_with(params.mu(), vp);
            (e, -params.crit_f_prime_with(params.mu(), vp), dv)
        }
    }
}

/// Newton projection of `(v, dv)` onto the level set `invariant = target`.
fn project_onto_level(params: &ProblemParams, inv: Invariant, target: f64, v: &mut f64, dv: &mut f64) {
    for _ in 0..2 {
        let (val, gv, gdv) = invariant_value(params, inv, *v, *dv);
        let g2 = gv * gv + gdv * gdv;
        if g2 < 1e-300 {
            return;
        }
        let lambda = (target - val) / g2;
        *v += lambda * gv;
        *dv += lambda * gdv;
    }
}

const MAX_STEP_ATTEMPTS: usize = 20_000_000;

/// Integrates the phase flow from `state0` forward to `t_end` with an
/// embedded Dormand-Prince 5(4) pair.
///
/// Samples are emitted exactly on the `stride` grid (steps are clamped to
/// grid points, so no interpolation error enters the output). Positivity
/// loss is an integration event: the crossing time is located by root
/// finding on the step's Hermite interpolant and becomes the final sample.
pub fn integrate(
    params: &ProblemParams,
    state0: &PhaseState,
    t_end: f64,
    settings: &IntegrationSettings,
) -> Result<Trajectory> {
    if !(settings.tol > 0.0) || !(settings.stride > 0.0) {
        return Err(Error::domain("integration tol and stride must be > 0"));
    }
    if !(t_end > state0.t) {
        return Err(Error::domain(format!(
            "t_end = {t_end} must exceed the initial time {}",
            state0.t
        )));
    }
    if !(state0.v >= 0.0) {
        return Err(Error::domain(format!("initial v must be >= 0, got {}", state0.v)));
    }

    let sys = EfSystem::new(params);
    let inv = invariant_for(params, settings.conserve);
    let inv_target = inv.map(|i| invariant_value(params, i, state0.v, state0.dv).0);

    let mut samples = Vec::with_capacity(((t_end - state0.t) / settings.stride) as usize + 2);
    samples.push(*state0);

    let mut t = state0.t;
    let mut y = [state0.v, state0.dv];
    let mut halt = HaltReason::SpanComplete;
    let mut next_grid = 1usize; // index of the next sample grid point

    let rtol = settings.tol;
    let atol = settings.tol * 1e-2;
    let mut h = settings.stride.min(1e-3);
    let mut k = [[0.0f64; 2]; 7];
    let mut attempts = 0usize;

    'outer: while t < t_end {
        let grid_t = (state0.t + next_grid as f64 * settings.stride).min(t_end);
        let stop = grid_t;
        h = h.min(stop - t).max(1e-14 * t.abs().max(1.0));

        // One Dormand-Prince attempt.
        attempts += 1;
        if attempts > MAX_STEP_ATTEMPTS {
            return Err(Error::MaxIterations(MAX_STEP_ATTEMPTS));
        }
        k[0] = [y[1], sys.accel(t, y[0])];
        for stage in 1..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(stage) {
                let a = if stage < 6 { DP_A[stage - 1][j] } else { DP_B5[j] };
                ys[0] += h * a * kj[0];
                ys[1] += h * a * kj[1];
            }
            let ts = t + DP_C[stage] * h;
            k[stage] = [ys[1], sys.accel(ts, ys[0])];
        }
        let mut y5 = y;
        let mut y4 = y;
        for (j, kj) in k.iter().enumerate() {
            y5[0] += h * DP_B5[j] * kj[0];
            y5[1] += h * DP_B5[j] * kj[1];
            y4[0] += h * DP_B4[j] * kj[0];
            y4[1] += h * DP_B4[j] * kj[1];
        }
        let mut err_ratio = 0.0f64;
        for i in 0..2 {
            let sc = atol + rtol * y[i].abs().max(y5[i].abs());
            err_ratio = err_ratio.max((y5[i] - y4[i]).abs() / sc);
        }

        if err_ratio <= 1.0 {
            // Accepted.
            let t_prev = t;
            let y_prev = y;
            t += h;
            y = y5;
            if let (Some(i), Some(target)) = (inv, inv_target) {
                let (v, dv) = y.split_at_mut(1);
                project_onto_level(params, i, target, &mut v[0], &mut dv[0]);
            }

            if y[0] <= 0.0 {
                // Locate the positivity-loss event on the Hermite interpolant.
                let d_prev = y_prev[1];
                let d_now = k[6][1]; // derivative of dv at the step end
                let interp = |tau: f64| hermite(tau, t_prev, y_prev[0], d_prev, t, y[0], y[1]);
                let tau = if y[0] == 0.0 {
                    t
                } else {
                    let bracket = Bracket::new(interp, t_prev, t)?;
                    numerics::find_root(interp, &bracket, settings.tol.max(1e-14))?
                };
                let dv_tau =
                    hermite(tau, t_prev, d_prev, sys.accel(t_prev, y_prev[0]), t, y[1], d_now);
                samples.push(PhaseState { t: tau, v: 0.0, dv: dv_tau });
                halt = HaltReason::PositivityLost;
                break 'outer;
            }
            if y[0] > settings.v_ceiling {
                samples.push(PhaseState { t, v: y[0], dv: y[1] });
                halt = HaltReason::Overflow;
                break 'outer;
            }
            if t >= stop - 1e-14 * stop.abs().max(1.0) {
                samples.push(PhaseState { t, v: y[0], dv: y[1] });
                if (stop - t_end).abs() < f64::EPSILON * t_end.abs().max(1.0) && stop <= t {
                    break 'outer;
                }
                next_grid += 1;
            }
            let factor = if err_ratio == 0.0 {
                5.0
            } else {
                (0.9 * err_ratio.powf(-0.2)).clamp(0.2, 5.0)
            };
            h = (h * factor).min(settings.stride * 64.0);
        } else {
            h *= (0.9 * err_ratio.powf(-0.2)).clamp(0.1, 0.9);
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(Error::ToleranceNotMet { requested: settings.tol, achieved: err_ratio * settings.tol });
            }
        }
    }

    let d0 = flux_density(params, &samples[0]);
    let drift = samples
        .iter()
        .map(|s| (flux_density(params, s) - d0).abs())
        .fold(0.0, f64::max);

    Ok(Trajectory { params: *params, samples, halt, drift })
}

// ---------------------------------------------------------------------------
// Closed-form orbits
// ---------------------------------------------------------------------------

/// The bubble `U_λ(r) = c_{n,s} (λ^{1-s/2} / (λ^{2-s} + r^{2-s}))^{(n-2)/(2-s)}`,
/// evaluated in an overflow-safe split form.
pub fn bubble_profile(params: &ProblemParams, lambda: f64, r: f64) -> f64 {
    let n = params.nf();
    let s = params.s();
    let m = (n - 2.0) / (2.0 - s);
    let c = params.exponents().c_ns;
    let x = r / lambda;
    let u1 = if x <= 1.0 {
        c * (1.0 + x.powf(2.0 - s)).powf(-m)
    } else {
        c * x.powf(-(n - 2.0)) * (1.0 + x.powf(-(2.0 - s))).powf(-m)
    };
    lambda.powf(-params.kappa()) * u1
}

/// `d U_λ / dr`.
pub fn bubble_profile_deriv(params: &ProblemParams, lambda: f64, r: f64) -> f64 {
    let n = params.nf();
    let s = params.s();
    let m = (n - 2.0) / (2.0 - s);
    let c = params.exponents().c_ns;
    let x = r / lambda;
    let du1 = if x <= 1.0 {
        -(n - 2.0) * c * x.powf(1.0 - s) * (1.0 + x.powf(2.0 - s)).powf(-m - 1.0)
    } else {
        -(n - 2.0) * c * x.powf(-(n - 1.0)) * (1.0 + x.powf(-(2.0 - s))).powf(-m - 1.0)
    };
    lambda.powf(-params.kappa() - 1.0) * du1
}

/// The zero-level orbit
/// `v0(t) = c_{n,s} (e^{(2-s)t/2} + e^{-(2-s)t/2})^{-(n-2)/(2-s)}`,
/// homoclinic to the origin; it is the phase-plane image of the unit bubble.
pub fn homoclinic_profile(params: &ProblemParams, t: f64) -> f64 {
    let s = params.s();
    let m = (params.nf() - 2.0) / (2.0 - s);
    let beta = (2.0 - s) / 2.0;
    let c = params.exponents().c_ns;
    let a = t.abs();
    // c e^{-mβ|t|} (1 + e^{-2β|t|})^{-m}, safe for large |t|
    c * (-m * beta * a).exp() * (1.0 + (-2.0 * beta * a).exp()).powf(-m)
}

/// `d v0 / dt` in the same overflow-safe form (odd in `t`).
pub fn homoclinic_profile_deriv(params: &ProblemParams, t: f64) -> f64 {
    let s = params.s();
    let m = (params.nf() - 2.0) / (2.0 - s);
    let beta = (2.0 - s) / 2.0;
    let c = params.exponents().c_ns;
    let a = t.abs();
    let e2 = (-2.0 * beta * a).exp();
    let magnitude = c * m * beta * (-m * beta * a).exp() * (1.0 - e2) * (1.0 + e2).powf(-m - 1.0);
    -magnitude * t.signum()
}

/// The two positive turning points of the level set
/// `(n-2)^2/8 v^2 - v^{2*(s)}/2*(s) = K` for `0 < K < K_{n,s}`,
/// bracketed on either side of the constant orbit `v̄`.
pub fn turning_points(params: &ProblemParams, k: f64) -> Result<(f64, f64)> {
    let ex = params.exponents();
    if !(k > 0.0 && k < ex.k_ns) {
        return Err(Error::Regime(format!(
            "level must satisfy 0 < K < K_ns = {} (got {k})",
            ex.k_ns
        )));
    }
    let h0 = move |v: f64| {
        params.kappa_sq() / 2.0 * v * v - v.powf(ex.two_star_s) / ex.two_star_s
    };
    let f = move |v: f64| h0(v) - k;
    // Zero of the potential to the right of v_bar.
    let v_zero = (params.kappa_sq() / 2.0 * ex.two_star_s).powf(1.0 / (ex.two_star_s - 2.0));

    let mut lo = 0.5 * ex.v_bar;
    while f(lo) >= 0.0 {
        lo *= 0.5;
        if lo < 1e-300 {
            return Err(Error::RootNotBracketed("lower turning point".into()));
        }
    }
    let v_min = numerics::find_root(f, &Bracket::new(f, lo, ex.v_bar)?, 1e-15)?;
    let v_max = numerics::find_root(f, &Bracket::new(f, ex.v_bar, v_zero)?, 1e-15)?;
    Ok((v_min, v_max))
}

/// Period of the level-`K` orbit:
/// `T(K) = 2 int_{v_min}^{v_max} dv / sqrt(2(H0(v) - K))`,
/// computed with inverse-square-root endpoint handling. Diverges as
/// `K -> 0+` and tends to `4π/((n-2) sqrt(2*(s)-2))` as `K -> K_ns^-`.
pub fn period(params: &ProblemParams, k: f64) -> Result<f64> {
    let (v_min, v_max) = turning_points(params, k)?;
    let ex = params.exponents();
    let h0 = move |v: f64| {
        params.kappa_sq() / 2.0 * v * v - v.powf(ex.two_star_s) / ex.two_star_s
    };
    let integrand = move |v: f64| {
        let d = (h0(v) - k).max(1e-300);
        1.0 / (2.0 * d).sqrt()
    };
    let mid = 0.5 * (v_min + v_max);
    let left = numerics::integrate_adaptive(
        integrand,
        &QuadSpec::with_singular_ends(v_min, mid, true, false),
    )?;
    let right = numerics::integrate_adaptive(
        integrand,
        &QuadSpec::with_singular_ends(mid, v_max, false, true),
    )?;
    Ok(2.0 * (left.value + right.value))
}

/// Phase state of the periodic orbit `v_K` normalized to its minimum at
/// `t = 0`, using the fold `v_K(-t) = v_K(t)`, `v_K(t + T) = v_K(t)`.
pub fn periodic_state(params: &ProblemParams, k: f64, t: f64) -> Result<PhaseState> {
    let (v_min, _) = turning_points(params, k)?;
    let t_period = period(params, k)?;
    let tau = t.rem_euclid(t_period);
    // fold onto [0, T/2]; the second half has reversed velocity
    let (tau_f, flip) = if tau <= t_period / 2.0 {
        (tau, false)
    } else {
        (t_period - tau, true)
    };
    let (v, dv) = if tau_f < 1e-12 {
        (v_min, 0.0)
    } else {
        let mu0_params = params.with_mu(0.0)?;
        let settings = IntegrationSettings {
            tol: 1e-12,
            stride: (tau_f / 8.0).min(0.01),
            ..Default::default()
        };
        let start = PhaseState { t: 0.0, v: v_min, dv: 0.0 };
        let traj = integrate(&mu0_params, &start, tau_f, &settings)?;
        let end = traj.samples.last().unwrap();
        (end.v, end.dv)
    };
    Ok(PhaseState { t, v, dv: if flip { -dv } else { dv } })
}

/// Value of the periodic orbit `v_K(t)`.
pub fn periodic_profile(params: &ProblemParams, k: f64, t: f64) -> Result<f64> {
    Ok(periodic_state(params, k, t)?.v)
}

// ---------------------------------------------------------------------------
// Critical case q = 2*-1
// ---------------------------------------------------------------------------

/// `(F, F', g)` of the critical potential at the problem's own `mu`.
pub fn crit_potential(params: &ProblemParams, v: f64) -> Result<(f64, f64, f64)> {
    require_critical(params)?;
    if !(v >= 0.0) {
        return Err(Error::domain(format!("v must be >= 0, got {v}")));
    }
    let mu = params.mu();
    Ok((
        params.crit_f_with(mu, v),
        params.crit_f_prime_with(mu, v),
        params.crit_g_with(mu, v),
    ))
}

/// Equilibria of the critical flow for `0 < mu <= mu0`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CritEquilibria {
    /// Center of the potential well (`g'(v-) < 0`).
    pub v_minus: f64,
    /// Saddle (`g'(v+) > 0`).
    pub v_plus: f64,
    /// True at `mu = mu0`, where both collapse onto the double root.
    pub degenerate: bool,
}

pub fn crit_equilibria(params: &ProblemParams) -> Result<CritEquilibria> {
    require_critical(params)?;
    let mu0 = params.mu_zero();
    if params.mu() > mu0 * (1.0 + 1e-13) {
        return Err(Error::Regime(format!(
            "no equilibria: mu = {} exceeds mu0 = {mu0}",
            params.mu()
        )));
    }
    let (v_minus, v_plus, degenerate) = params.crit_g_roots_with(params.mu())?;
    Ok(CritEquilibria { v_minus, v_plus, degenerate })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OrbitTag {
    /// Sits at an equilibrium of the potential.
    Constant,
    /// Closed orbit inside the well around `v-`.
    Periodic,
    /// On the separatrix level through the saddle; converges to `v+`.
    HomoclinicToSaddle,
    /// Leaves the set of positive bounded orbits (reaches `v = 0`, or lies
    /// outside the separatrix loop).
    TouchesZero,
}

/// Classification of a critical-case orbit by its conserved energy relative
/// to the center and saddle levels.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct OrbitClass {
    pub tag: OrbitTag,
    pub energy: f64,
    /// `(E_center, E_separatrix) = (-F(v-), -F(v+))` when equilibria exist.
    pub band: Option<(f64, f64)>,
}

/// Classifies an orbit of the critical flow started at `state0`.
///
/// Requires `q = 2*-1`, `0 < mu < mu0`, `state0.v > 0`. Periodic orbits fill
/// the energy band `(E_center, min(E_sep, 0))` inside the well; the zero
/// level set is the touching threshold because `F(0) = 0`.
pub fn crit_classify_orbit(params: &ProblemParams, state0: &PhaseState) -> Result<OrbitClass> {
    require_critical(params)?;
    if !(state0.v > 0.0) {
        return Err(Error::domain("orbit classification needs v > 0"));
    }
    let eq = crit_equilibria(params)?;
    if eq.degenerate {
        return Err(Error::Regime(
            "orbit classification needs 0 < mu < mu0 (equilibria are degenerate at mu0)".into(),
        ));
    }
    let energy = crit_energy(params, state0)?;
    let e_center = -params.crit_f_with(params.mu(), eq.v_minus);
    let e_sep = -params.crit_f_with(params.mu(), eq.v_plus);
    let band = Some((e_center, e_sep));

    let tol = 1e-9;
    let scale_e = e_center.abs().max(e_sep.abs()).max(1.0);
    let at = |v_eq: f64| {
        (state0.v - v_eq).abs() <= tol * v_eq.max(1.0) && state0.dv.abs() <= tol
    };
    if at(eq.v_minus) || at(eq.v_plus) {
        return Ok(OrbitClass { tag: OrbitTag::Constant, energy, band });
    }
    if (energy - e_sep).abs() <= tol * scale_e
        && e_sep < 0.0
        && state0.v <= eq.v_plus * (1.0 + tol)
    {
        return Ok(OrbitClass { tag: OrbitTag::HomoclinicToSaddle, energy, band });
    }
    if e_center < energy && energy < e_sep.min(0.0) && state0.v < eq.v_plus {
        return Ok(OrbitClass { tag: OrbitTag::Periodic, energy, band });
    }
    Ok(OrbitClass { tag: OrbitTag::TouchesZero, energy, band })
}

// ---------------------------------------------------------------------------
// Closed-form profile catalogue
// ---------------------------------------------------------------------------

/// Orbits with closed-form (or quadrature-exact) evaluation, usable wherever
/// a trajectory is.
#[derive(Debug, Clone, Copy, Serialize)]
pub enum ClosedFormProfile {
    /// The bubble `U_λ`; its phase-plane image is the homoclinic shifted by
    /// `ln λ`.
    Bubble { lambda: f64 },
    /// The zero-level homoclinic `v0`.
    Homoclinic,
    /// The constant orbit `v ≡ v̄` of the unperturbed flow.
    LimitConstant,
    /// The periodic orbit at level `K`, minimum at `t = phase`.
    PeriodicVk { k: f64, phase: f64 },
    /// The non-differential power `u* = coeff r^{-p_nd}` (unbounded in `v`).
    NdPower,
    /// The constant critical orbit at `mu = mu0`.
    CritConstant,
}

impl ClosedFormProfile {
    /// Kind-specific parameter domain check.
    pub fn validate(&self, params: &ProblemParams) -> Result<()> {
        match *self {
            ClosedFormProfile::Bubble { lambda } => {
                if !(lambda > 0.0) {
                    return Err(Error::domain(format!("bubble scale must be > 0, got {lambda}")));
                }
            }
            ClosedFormProfile::Homoclinic | ClosedFormProfile::LimitConstant => {}
            ClosedFormProfile::PeriodicVk { k, .. } => {
                let ex = params.exponents();
                if !(k > 0.0 && k < ex.k_ns) {
                    return Err(Error::Regime(format!(
                        "periodic level must satisfy 0 < K < {} (got {k})",
                        ex.k_ns
                    )));
                }
            }
            ClosedFormProfile::NdPower => {
                params.nd_profile()?;
            }
            ClosedFormProfile::CritConstant => {
                require_critical(params)?;
                let eq = crit_equilibria(params)?;
                if !eq.degenerate {
                    return Err(Error::Regime(
                        "constant critical orbit exists only at mu = mu0".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Phase state at time `t`.
    pub fn eval_ef(&self, params: &ProblemParams, t: f64) -> Result<PhaseState> {
        self.validate(params)?;
        Ok(match *self {
            ClosedFormProfile::Bubble { lambda } => {
                let tau = t + lambda.ln();
                PhaseState {
                    t,
                    v: homoclinic_profile(params, tau),
                    dv: homoclinic_profile_deriv(params, tau),
                }
            }
            ClosedFormProfile::Homoclinic => PhaseState {
                t,
                v: homoclinic_profile(params, t),
                dv: homoclinic_profile_deriv(params, t),
            },
            ClosedFormProfile::LimitConstant => {
                PhaseState { t, v: params.exponents().v_bar, dv: 0.0 }
            }
            ClosedFormProfile::PeriodicVk { k, phase } => {
                let st = periodic_state(params, k, t - phase)?;
                PhaseState { t, ..st }
            }
            ClosedFormProfile::NdPower => {
                let nd = params.nd_profile()?;
                let rate = nd.p_nd - params.kappa();
                let v = nd.coeff * (rate * t).exp();
                PhaseState { t, v, dv: rate * v }
            }
            ClosedFormProfile::CritConstant => {
                let eq = crit_equilibria(params)?;
                PhaseState { t, v: eq.v_plus, dv: 0.0 }
            }
        })
    }

    /// Radial point `(u, du)` at radius `r`.
    pub fn eval_radial(&self, params: &ProblemParams, r: f64) -> Result<(f64, f64)> {
        if !(r > 0.0) {
            return Err(Error::domain(format!("radius must be positive, got {r}")));
        }
        match *self {
            ClosedFormProfile::Bubble { lambda } => {
                self.validate(params)?;
                Ok((bubble_profile(params, lambda, r), bubble_profile_deriv(params, lambda, r)))
            }
            ClosedFormProfile::NdPower => {
                let nd = params.nd_profile()?;
                Ok((nd.eval(r), nd.eval_deriv(r)))
            }
            _ => {
                let state = self.eval_ef(params, -r.ln())?;
                let (_, u, du) = ef_untransform(params, &state);
                Ok((u, du))
            }
        }
    }
}

/// Anything that can produce a phase state at a given time: integrated
/// trajectories and closed-form profiles.
pub trait PhaseEval {
    fn phase_at(&self, params: &ProblemParams, t: f64) -> Result<PhaseState>;
}

impl PhaseEval for Trajectory {
    fn phase_at(&self, _params: &ProblemParams, t: f64) -> Result<PhaseState> {
        self.state_at(t)
    }
}

impl PhaseEval for ClosedFormProfile {
    fn phase_at(&self, params: &ProblemParams, t: f64) -> Result<PhaseState> {
        self.eval_ef(params, t)
    }
}
