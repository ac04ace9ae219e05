//! The flux integral attached to the radial equation, its exact change-of-
//! radius identity, and the asymptotic limit at the singularity.
//!
//! For radial functions the surface integral over `∂B_r` reduces exactly to
//! a pointwise expression; the sphere enters only through its measure
//! `ω_{n-1}`. In phase variables at `t = -ln r`:
//!
//! ```text
//!   P_r(u) = ω_{n-1} [ -(v')^2/2 + (n-2)^2/8 v^2 - v^{2*(s)}/2*(s)
//!                       + μ e^{-γt} v^{q+1}/(q+1) ],
//! ```
//!
//! and in the original variables
//!
//! ```text
//!   P_r(u) = ω_{n-1} r^{n-1} [ -r (u')^2/2 - (n-2)/2 u u' - r F_{μ,q}(r, u) ].
//! ```
//!
//! Both reductions are implemented; they agree to rounding. Across radii,
//! `P_{r2} - P_{r1} = (n-2)(2*-1-q)/(2(q+1)) μ ∫_{annulus} u^{q+1}`, so `P_r`
//! is constant when `μ = 0` or `q = 2*-1` and increasing in `r` otherwise.

use serde::Serialize;

use crate::dynamics::{PhaseEval, PhaseState, Trajectory};
use crate::error::{Error, Result};
use crate::numerics::{self, QuadSpec};
use crate::params::ProblemParams;

/// The nonlinearity `f_{μ,q}(x,t) = t^{2*(s)-1}/|x|^s - μ t^q` and its
/// primitive `F_{μ,q}(x,t) = t^{2*(s)}/(2*(s)|x|^s) - μ t^{q+1}/(q+1)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct NonlinearityValue {
    pub f: f64,
    pub f_big: f64,
}

pub fn nonlinearity(params: &ProblemParams, r: f64, t_val: f64) -> Result<NonlinearityValue> {
    if !(r > 0.0) {
        return Err(Error::domain(format!("radius must be positive, got {r}")));
    }
    if !(t_val >= 0.0) {
        return Err(Error::domain(format!("t must be >= 0, got {t_val}")));
    }
    let ex = params.exponents();
    let rs = r.powf(params.s());
    let (q, mu) = (params.q(), params.mu());
    Ok(NonlinearityValue {
        f: t_val.powf(ex.two_star_s - 1.0) / rs - mu * t_val.powf(q),
        f_big: t_val.powf(ex.two_star_s) / (ex.two_star_s * rs)
            - mu * t_val.powf(q + 1.0) / (q + 1.0),
    })
}

/// Flux value from a phase state (the `t` field fixes the radius).
pub fn pohozaev_ef(params: &ProblemParams, state: &PhaseState) -> f64 {
    let ex = params.exponents();
    let vp = state.v.max(0.0);
    let mut density = -state.dv * state.dv / 2.0
        + params.kappa_sq() / 2.0 * state.v * state.v
        - vp.powf(ex.two_star_s) / ex.two_star_s;
    if params.mu() != 0.0 {
        density += params.mu() * (-ex.gamma * state.t).exp() * vp.powf(params.q() + 1.0)
            / (params.q() + 1.0);
    }
    ex.omega * density
}

/// Flux value from a radial point `(r, u, du)`.
pub fn pohozaev_radial(params: &ProblemParams, r: f64, u: f64, du: f64) -> Result<f64> {
    let ex = params.exponents();
    let nl = nonlinearity(params, r, u.max(0.0))?;
    let kappa = params.kappa();
    Ok(ex.omega
        * r.powf(params.nf() - 1.0)
        * (-r * du * du / 2.0 - kappa * u * du - r * nl.f_big))
}

/// Evaluates the flux integral of an orbit (trajectory or closed form) at
/// radius `r`, through the phase-variable reduction.
pub fn pohozaev_at<P: PhaseEval + ?Sized>(
    params: &ProblemParams,
    orbit: &P,
    r: f64,
) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::domain(format!("radius must be positive, got {r}")));
    }
    let state = orbit.phase_at(params, -r.ln())?;
    Ok(pohozaev_ef(params, &state))
}

/// The two-radius identity evaluated on a trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct PohozaevReport {
    pub r1: f64,
    pub r2: f64,
    pub p_r1: f64,
    pub p_r2: f64,
    /// `(n-2)(2*-1-q)/(2(q+1)) μ ω ∫ ρ^{n-1} u^{q+1} dρ` over `[r1, r2]`.
    pub bulk: f64,
    /// `P_{r2} - P_{r1} - bulk`; vanishes for exact solutions.
    pub residual: f64,
    /// Estimated limit of `P_r` as `r -> 0`, when requested.
    pub asymptotic: Option<f64>,
}

impl PohozaevReport {
    /// Residual scaled by the largest participating magnitude (floored to
    /// avoid 0/0 on identically-zero invariants).
    pub fn relative_residual(&self) -> f64 {
        let scale = self
            .p_r1
            .abs()
            .max(self.p_r2.abs())
            .max(self.bulk.abs())
            .max(1e-300);
        self.residual.abs() / scale
    }
}

/// Evaluates `P_{r1}`, `P_{r2}`, the bulk correction, and their residual on
/// an integrated trajectory. Requires `0 < r1 < r2`, both within the span.
pub fn identity_residual(
    params: &ProblemParams,
    traj: &Trajectory,
    r1: f64,
    r2: f64,
) -> Result<PohozaevReport> {
    if !(r1 > 0.0 && r1 < r2) {
        return Err(Error::domain(format!(
            "radii must satisfy 0 < r1 < r2, got ({r1}, {r2})"
        )));
    }
    let t1 = -r2.ln();
    let t2 = -r1.ln();
    let p_r2 = pohozaev_ef(params, &traj.state_at(t1)?);
    let p_r1 = pohozaev_ef(params, &traj.state_at(t2)?);

    let ex = params.exponents();
    let (q, mu) = (params.q(), params.mu());
    // The prefactor carries 2*-1-q, so the bulk term vanishes identically
    // at q = 2*-1 as well as for mu = 0.
    let bulk = if mu == 0.0 || ex.gamma == 0.0 {
        0.0
    } else {
        // In phase time the annulus integral is ∫ e^{-γt} v^{q+1} dt.
        let integrand = |t: f64| {
            traj.state_at(t)
                .map(|s| (-ex.gamma * t).exp() * s.v.max(0.0).powf(q + 1.0))
                .unwrap_or(f64::NAN)
        };
        let quad = QuadSpec::plain(t1, t2).tolerances(1e-13, 1e-11);
        let integral = numerics::integrate_adaptive(integrand, &quad)?.value;
        (params.nf() - 2.0) / (2.0 * (q + 1.0)) * (ex.two_star - 1.0 - q) * mu * ex.omega
            * integral
    };

    Ok(PohozaevReport {
        r1,
        r2,
        p_r1,
        p_r2,
        bulk,
        residual: p_r2 - p_r1 - bulk,
        asymptotic: None,
    })
}

/// Options for the asymptotic limit estimate.
#[derive(Debug, Clone, Copy)]
pub struct AsymptoticOptions {
    /// Top of the radius ladder `r_j = r0 2^{-j}`.
    pub r0: f64,
    /// Successive-estimate agreement required (absolute).
    pub abs_tol: f64,
    pub max_rungs: usize,
}

impl Default for AsymptoticOptions {
    fn default() -> Self {
        AsymptoticOptions { r0: 0.25, abs_tol: 1e-8, max_rungs: 60 }
    }
}

/// Richardson-style ladder estimate of `lim_{r->0} P_r`.
#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticEstimate {
    pub value: f64,
    /// Observed contraction rate per halving, `log2 |d_{j-1}| / |d_j|`,
    /// when the differences allow it.
    pub observed_rate: Option<f64>,
    /// The a-priori rate `γ = (n-2)(2*-1-q)/2` of the tail bound, reported
    /// as a cross-check only.
    pub expected_rate: f64,
    /// The `(r_j, P_{r_j})` ladder actually evaluated.
    pub ladder: Vec<(f64, f64)>,
}

/// Estimates the asymptotic flux value by evaluating `P_r` on a geometric
/// ladder of radii and stopping once three successive estimates agree to
/// `abs_tol`. Requires `q <= 2*-1` (no limit is guaranteed above).
pub fn asymptotic_pohozaev<P: PhaseEval + ?Sized>(
    params: &ProblemParams,
    orbit: &P,
    opts: &AsymptoticOptions,
) -> Result<AsymptoticEstimate> {
    let ex = params.exponents();
    if params.q() > ex.two_star - 1.0 {
        return Err(Error::Regime(format!(
            "asymptotic flux limit needs q <= 2*-1 = {} (got q = {})",
            ex.two_star - 1.0,
            params.q()
        )));
    }
    if !(opts.r0 > 0.0) || !(opts.abs_tol > 0.0) {
        return Err(Error::domain("asymptotic options must be positive"));
    }

    let mut ladder = Vec::new();
    let mut r = opts.r0;
    for _ in 0..opts.max_rungs {
        match pohozaev_at(params, orbit, r) {
            Ok(p) => ladder.push((r, p)),
            Err(Error::OutOfSpan { .. }) => break,
            Err(e) => return Err(e),
        }
        let n = ladder.len();
        if n >= 3 {
            let d1 = (ladder[n - 1].1 - ladder[n - 2].1).abs();
            let d2 = (ladder[n - 2].1 - ladder[n - 3].1).abs();
            if d1 <= opts.abs_tol && d2 <= opts.abs_tol {
                let observed_rate = if d1 > 0.0 && d2 > 0.0 {
                    Some((d2 / d1).log2())
                } else {
                    None
                };
                return Ok(AsymptoticEstimate {
                    value: ladder[n - 1].1,
                    observed_rate,
                    expected_rate: ex.gamma,
                    ladder,
                });
            }
        }
        r *= 0.5;
    }
    let tail: Vec<f64> = ladder.iter().rev().take(3).map(|&(_, p)| p).collect();
    Err(Error::NotConverged(format!(
        "flux ladder did not stabilize within {} rungs; last estimates {:?}",
        ladder.len(),
        tail
    )))
}
