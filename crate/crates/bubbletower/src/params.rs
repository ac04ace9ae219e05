//! Problem parameters and every closed-form exponent, constant, and threshold
//! attached to the equation
//!
//! ```text
//!     -Δu = |x|^{-s} u^{2*(s)-1} - μ u^q     on B_1(0) \ {0},  n >= 3
//! ```
//!
//! with `2*(s) = 2(n-s)/(n-2)` the Hardy-Sobolev critical exponent and
//! `2* = 2n/(n-2)` the Sobolev one. All types here are immutable after
//! construction and every operation is pure.

use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numerics::{self, Bracket, QuadSpec};

/// The validated quadruple `(n, s, q, mu)`.
///
/// Construction fails (never clamps) when any bound is violated:
/// `n >= 3`, `0 < s < 2`, `q > 1`, `mu >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProblemParams {
    n: u32,
    s: f64,
    q: f64,
    mu: f64,
}

impl ProblemParams {
    pub fn new(n: u32, s: f64, q: f64, mu: f64) -> Result<Self> {
        let mut violations = Vec::new();
        if n < 3 {
            violations.push(format!("n >= 3 (got {n})"));
        }
        if !(s > 0.0) || !(s < 2.0) || !s.is_finite() {
            violations.push(format!("0 < s < 2 (got {s})"));
        }
        if !(q > 1.0) || !q.is_finite() {
            violations.push(format!("q > 1 (got {q})"));
        }
        if !(mu >= 0.0) || !mu.is_finite() {
            violations.push(format!("mu >= 0 (got {mu})"));
        }
        if violations.is_empty() {
            Ok(ProblemParams { n, s, q, mu })
        } else {
            Err(Error::Domain { detail: violations.join("; ") })
        }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// Dimension as a float, for formulas.
    pub fn nf(&self) -> f64 {
        f64::from(self.n)
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Same parameters with a different perturbation exponent.
    pub fn with_q(&self, q: f64) -> Result<Self> {
        ProblemParams::new(self.n, self.s, q, self.mu)
    }

    /// Same parameters with a different perturbation coefficient.
    pub fn with_mu(&self, mu: f64) -> Result<Self> {
        ProblemParams::new(self.n, self.s, self.q, mu)
    }

    /// `(n-2)/2`, the decay rate of `|x|^{-(n-2)/2}` profiles.
    pub fn kappa(&self) -> f64 {
        (self.nf() - 2.0) / 2.0
    }

    /// `(n-2)^2/4`, the linear coefficient of the phase-plane vector field.
    pub fn kappa_sq(&self) -> f64 {
        let k = self.kappa();
        k * k
    }
}

/// `Γ(two_x / 2)` for positive half-integer arguments, computed exactly by
/// the recursion `Γ(x+1) = x Γ(x)` from `Γ(1/2) = sqrt(pi)`, `Γ(1) = 1`.
fn gamma_half(two_x: u32) -> f64 {
    debug_assert!(two_x >= 1);
    let (mut val, mut k) = if two_x.is_multiple_of(2) {
        (1.0, 2u32)
    } else {
        (PI.sqrt(), 1u32)
    };
    while k < two_x {
        val *= k as f64 / 2.0;
        k += 2;
    }
    val
}

/// All derived exponents and constants of the problem.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExponentTable {
    /// Hardy-Sobolev critical exponent `2*(s) = 2(n-s)/(n-2)`.
    pub two_star_s: f64,
    /// Sobolev critical exponent `2* = 2n/(n-2)`.
    pub two_star: f64,
    /// Sharp blow-up exponent `p` (three-branch formula, see
    /// [`ProblemParams::blowup_exponent`]).
    pub p: f64,
    /// Bubble normalization `c_{n,s} = ((n-s)(n-2))^{1/(2*(s)-2)}`.
    pub c_ns: f64,
    /// Hamiltonian level of the constant orbit,
    /// `K_{n,s} = (2*(s)-2)/(2 2*(s)) ((n-2)^2/4)^{2*(s)/(2*(s)-2)}`.
    pub k_ns: f64,
    /// Decay rate of the perturbation in phase-plane time,
    /// `γ = (n-2)(2*-1-q)/2`; positive iff `q < 2*-1`, zero at `q = 2*-1`.
    pub gamma: f64,
    /// Surface measure of the unit sphere, `ω_{n-1} = 2 π^{n/2} / Γ(n/2)`.
    pub omega: f64,
    /// Constant orbit value `v̄ = ((n-2)^2/4)^{1/(2*(s)-2)}`.
    pub v_bar: f64,
}

impl ProblemParams {
    pub fn exponents(&self) -> ExponentTable {
        let n = self.nf();
        let two_star_s = 2.0 * (n - self.s) / (n - 2.0);
        let two_star = 2.0 * n / (n - 2.0);
        let c_ns = ((n - self.s) * (n - 2.0)).powf(1.0 / (two_star_s - 2.0));
        let k_ns = (two_star_s - 2.0) / (2.0 * two_star_s)
            * self.kappa_sq().powf(two_star_s / (two_star_s - 2.0));
        let gamma = (n - 2.0) * (two_star - 1.0 - self.q) / 2.0;
        let omega = 2.0 * PI.powf(n / 2.0) / gamma_half(self.n);
        let v_bar = self.kappa_sq().powf(1.0 / (two_star_s - 2.0));
        ExponentTable {
            two_star_s,
            two_star,
            p: self.blowup_exponent(),
            c_ns,
            k_ns,
            gamma,
            omega,
            v_bar,
        }
    }

    /// The sharp pointwise bound exponent: `u <= C |x|^{-p}` near 0, with
    ///
    /// ```text
    ///   p = (n-2)/2                  if 1 < q <= 2*(s)-1,
    ///   p = s / (q - (2*(s)-1))      if 2*(s)-1 < q < 2*-1,
    ///   p = 2 / (q-1)                if q >= 2*-1.
    /// ```
    ///
    /// Ties go to the closed branches exactly as written. The middle branch
    /// diverges as `q` approaches `2*(s)-1` from above and matches `(n-2)/2`
    /// at `q = 2*-1`, so the formula is continuous at the Sobolev cut only.
    pub fn blowup_exponent(&self) -> f64 {
        let n = self.nf();
        let q_hs = 2.0 * (n - self.s) / (n - 2.0) - 1.0;
        let q_sob = 2.0 * n / (n - 2.0) - 1.0;
        if self.q <= q_hs {
            (n - 2.0) / 2.0
        } else if self.q < q_sob {
            self.s / (self.q - q_hs)
        } else {
            2.0 / (self.q - 1.0)
        }
    }
}

/// Position of `q` relative to the cut points `2*(s)-1` and `2*-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RegimeTag {
    /// `1 < q <= 2*(s)-1`
    Subcritical,
    /// `2*(s)-1 < q < 2*-1`
    Intermediate,
    /// `q = 2*-1`
    CriticalSobolev,
    /// `q > 2*-1` (the singularity is always removable here)
    Supercritical,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Regime {
    pub tag: RegimeTag,
    /// Multi-bump window: `2*-2 < q < 2*-1`.
    pub mb_admissible: bool,
    /// Non-differential window: `2*(s)-1 < q < 2*-1`.
    pub nd_admissible: bool,
}

impl ProblemParams {
    pub fn regime(&self) -> Regime {
        let n = self.nf();
        let q_hs = 2.0 * (n - self.s) / (n - 2.0) - 1.0;
        let two_star = 2.0 * n / (n - 2.0);
        let q_sob = two_star - 1.0;
        let tag = if self.q <= q_hs {
            RegimeTag::Subcritical
        } else if self.q < q_sob {
            RegimeTag::Intermediate
        } else if self.q == q_sob {
            RegimeTag::CriticalSobolev
        } else {
            RegimeTag::Supercritical
        };
        Regime {
            tag,
            mb_admissible: two_star - 2.0 < self.q && self.q < q_sob,
            nd_admissible: q_hs < self.q && self.q < q_sob,
        }
    }
}

// ---------------------------------------------------------------------------
// Critical-case (q = 2*-1) potential. These take the coefficient explicitly
// because the threshold solves vary it independently of `self.mu`.
// ---------------------------------------------------------------------------

impl ProblemParams {
    /// `F(v) = (n-2)^2/8 v^2 + μ' v^{2*}/2* - v^{2*(s)}/2*(s)`.
    pub fn crit_f_with(&self, mu: f64, v: f64) -> f64 {
        let ex = self.exponents();
        self.kappa_sq() / 2.0 * v * v + mu * v.powf(ex.two_star) / ex.two_star
            - v.powf(ex.two_star_s) / ex.two_star_s
    }

    /// `F'(v) = (n-2)^2/4 v + μ' v^{2*-1} - v^{2*(s)-1}`.
    pub fn crit_f_prime_with(&self, mu: f64, v: f64) -> f64 {
        let ex = self.exponents();
        self.kappa_sq() * v + mu * v.powf(ex.two_star - 1.0) - v.powf(ex.two_star_s - 1.0)
    }

    /// `g(v) = F'(v)/v`, extended by `g(0) = (n-2)^2/4`.
    pub fn crit_g_with(&self, mu: f64, v: f64) -> f64 {
        if v == 0.0 {
            return self.kappa_sq();
        }
        let ex = self.exponents();
        self.kappa_sq() + mu * v.powf(ex.two_star - 2.0) - v.powf(ex.two_star_s - 2.0)
    }

    /// The two positive roots of `g` for `0 < μ' < μ0`, bracketed around its
    /// unique minimum; `(v, v, true)` at the degenerate double root `μ' = μ0`.
    pub(crate) fn crit_g_roots_with(&self, mu: f64) -> Result<(f64, f64, bool)> {
        if !(mu > 0.0) {
            return Err(Error::Regime(format!(
                "equilibria of the critical potential need mu > 0 (got {mu})"
            )));
        }
        let ex = self.exponents();
        // g decreases to its unique minimum and increases after; the minimum
        // sits where mu (2*-2) v^{2*-3} = (2*(s)-2) v^{2*(s)-3}.
        let v_c = ((ex.two_star_s - 2.0) / (mu * (ex.two_star - 2.0)))
            .powf(1.0 / (ex.two_star - ex.two_star_s));
        let g_min = self.crit_g_with(mu, v_c);
        let scale = self.kappa_sq();
        if g_min > 1e-13 * scale {
            return Err(Error::Regime(format!(
                "g has no positive root (min g = {g_min:e} > 0, i.e. mu >= mu0)"
            )));
        }
        if g_min.abs() <= 1e-13 * scale {
            return Ok((v_c, v_c, true));
        }
        let g = |v: f64| self.crit_g_with(mu, v);
        let mut lo = 0.5 * v_c;
        while g(lo) <= 0.0 {
            lo *= 0.5;
            if lo < 1e-300 {
                return Err(Error::RootNotBracketed("left root of g".to_string()));
            }
        }
        let mut hi = 2.0 * v_c;
        while g(hi) <= 0.0 {
            hi *= 2.0;
            if hi > 1e300 {
                return Err(Error::RootNotBracketed("right root of g".to_string()));
            }
        }
        let v_minus = numerics::find_root(g, &Bracket::new(g, lo, v_c)?, 1e-15)?;
        let v_plus = numerics::find_root(g, &Bracket::new(g, v_c, hi)?, 1e-15)?;
        Ok((v_minus, v_plus, false))
    }
}

// ---------------------------------------------------------------------------
// Thresholds of the critical case
// ---------------------------------------------------------------------------

/// The two threshold values of `μ1(n,s)` and the mismatch flag between them.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MuOneReport {
    /// Direct evaluation of the published closed form
    /// `(2-s) n / (2(n-s)) * (2 s (n-s)/(n-2))^{s(n-2)/(2-s)}`.
    pub printed: f64,
    /// Value solving the system `F(v) = F'(v) = 0` in `(v, μ)` with `v > 0`:
    /// the coefficient at which the saddle sits exactly at potential level 0.
    pub operational: f64,
    /// The saddle position `v+` of the operational solve.
    pub saddle_v: f64,
    /// True when printed and operational agree to 1e-9 relative. They do not
    /// at (4,1) and on every grid point we checked; the operational value is
    /// the one that satisfies `0 < μ1 < μ0` and is authoritative for orbit
    /// classification.
    pub consistent: bool,
}

impl ProblemParams {
    /// `μ0(n,s) = (2-s) s^{s/(2-s)} / (2^{2(1-s)/(2-s)} (n-2)^{2s/(2-s)})`:
    /// above it the critical equation has no positive singular solution.
    pub fn mu_zero(&self) -> f64 {
        let n = self.nf();
        let s = self.s;
        (2.0 - s) * s.powf(s / (2.0 - s))
            / (2.0f64.powf(2.0 * (1.0 - s) / (2.0 - s)) * (n - 2.0).powf(2.0 * s / (2.0 - s)))
    }

    /// Both forms of `μ1(n,s)` (see [`MuOneReport`]).
    pub fn mu_one(&self) -> Result<MuOneReport> {
        let n = self.nf();
        let s = self.s;
        let ex = self.exponents();
        let printed = (2.0 - s) * n / (2.0 * (n - s))
            * (2.0 * s * (n - s) / (n - 2.0)).powf(s * (n - 2.0) / (2.0 - s));

        // Eliminating μ from F = F' = 0 gives
        //   v^{2*(s)-2} = (n-2)^2/4 * 2*(s)(2*-2) / (2(2*-2*(s))),
        // then μ follows from F'(v) = 0.
        let saddle_v = (self.kappa_sq() * ex.two_star_s * (ex.two_star - 2.0)
            / (2.0 * (ex.two_star - ex.two_star_s)))
            .powf(1.0 / (ex.two_star_s - 2.0));
        let operational = saddle_v.powf(ex.two_star_s - ex.two_star)
            - self.kappa_sq() * saddle_v.powf(2.0 - ex.two_star);
        let residual_f = self.crit_f_with(operational, saddle_v).abs();
        let residual_fp = self.crit_f_prime_with(operational, saddle_v).abs();
        let scale = self.kappa_sq() * saddle_v * saddle_v;
        if !(operational > 0.0) || residual_f > 1e-10 * scale || residual_fp > 1e-10 * scale {
            return Err(Error::RootNotBracketed(format!(
                "operational mu1 solve failed: mu = {operational}, |F| = {residual_f:e}, |F'| = {residual_fp:e}"
            )));
        }
        let consistent = (printed - operational).abs() <= 1e-9 * printed.abs().max(operational.abs());
        Ok(MuOneReport { printed, operational, saddle_v, consistent })
    }
}

/// Threshold data for the Sobolev-critical case, plus the equilibria of the
/// potential at the problem's own `mu` when they exist.
#[derive(Debug, Clone, Serialize)]
pub struct CriticalThresholds {
    pub mu0: f64,
    pub mu1_printed: f64,
    pub mu1_operational: f64,
    pub mu1_consistent: bool,
    /// Stable-well equilibrium of `g` at `self.mu`, when `q = 2*-1` and
    /// `0 < mu <= mu0`.
    pub v_minus: Option<f64>,
    /// Saddle equilibrium, same conditions.
    pub v_plus: Option<f64>,
    /// True when `mu` sits at the degenerate double root `mu = mu0`.
    pub degenerate: bool,
    /// Constant orbit value `v̄` of the unperturbed limit equation.
    pub v_bar_limit: f64,
    /// `((2-s)/(2 μ0))^{(n-2)/(2s)}`: the constant phase-plane limit attained
    /// by non-removable solutions at `mu = mu0`.
    pub u_const_coeff: f64,
}

impl ProblemParams {
    pub fn critical_thresholds(&self) -> Result<CriticalThresholds> {
        let mu0 = self.mu_zero();
        let mu_one = self.mu_one()?;
        let ex = self.exponents();
        let crit = self.regime().tag == RegimeTag::CriticalSobolev;
        let (v_minus, v_plus, degenerate) = if crit && self.mu > 0.0 {
            match self.crit_g_roots_with(self.mu) {
                Ok((vm, vp, d)) => (Some(vm), Some(vp), d),
                Err(Error::Regime(_)) => (None, None, false),
                Err(e) => return Err(e),
            }
        } else {
            (None, None, false)
        };
        let u_const_coeff =
            ((2.0 - self.s) / (2.0 * mu0)).powf((self.nf() - 2.0) / (2.0 * self.s));
        Ok(CriticalThresholds {
            mu0,
            mu1_printed: mu_one.printed,
            mu1_operational: mu_one.operational,
            mu1_consistent: mu_one.consistent,
            v_minus,
            v_plus,
            degenerate,
            v_bar_limit: ex.v_bar,
            u_const_coeff,
        })
    }
}

// ---------------------------------------------------------------------------
// Multi-bump recurrence constant
// ---------------------------------------------------------------------------

/// The constant and exponent of the bubble-scale recurrence
/// `r_{k+1} = K r_k^beta`, with the two algebraic forms of `K` computed by
/// independent quadratures.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MbRecurrence {
    /// Recurrence constant (the full-integral form; the authoritative value).
    pub k: f64,
    /// `beta = 1/(q - (2*-2))`.
    pub beta: f64,
    /// Same constant assembled from the weight-integral form with
    /// `c_{n,s}^{q-1}` pulled out; agrees with `k` to 1e-10 relative.
    pub k_weight_form: f64,
    /// The radial weight integral
    /// `int_0^inf r^{n-1} (1 + r^{2-s})^{-(q+1)(n-2)/(2-s)} dr`.
    pub radial_integral: f64,
}

impl ProblemParams {
    /// Computes the multi-bump recurrence data. Requires `2*-2 < q < 2*-1`
    /// and `mu > 0`; the integrals converge automatically on that window.
    pub fn mb_recurrence_constant(&self) -> Result<MbRecurrence> {
        let regime = self.regime();
        if !regime.mb_admissible {
            let ex = self.exponents();
            return Err(Error::Regime(format!(
                "multi-bump recurrence needs {} < q < {} (got q = {})",
                ex.two_star - 2.0,
                ex.two_star - 1.0,
                self.q
            )));
        }
        if !(self.mu > 0.0) {
            return Err(Error::domain("multi-bump recurrence needs mu > 0"));
        }
        let ex = self.exponents();
        let n = self.nf();
        let beta = 1.0 / (self.q - (ex.two_star - 2.0));
        let m = (n - 2.0) / (2.0 - self.s);
        let decay = (self.q + 1.0) * m;

        let quad = QuadSpec::to_infinity(0.0).tolerances(1e-14, 1e-12);
        // Weight-integral route: raw profile weight, c_{n,s} pulled out.
        let radial_integral = numerics::integrate_adaptive(
            |r| r.powf(n - 1.0) * (1.0 + r.powf(2.0 - self.s)).powf(-decay),
            &quad,
        )?
        .value;
        // Full-integral route: the (q+1)-power of the unit bubble itself.
        let c = ex.c_ns;
        let bubble = |r: f64| c * (1.0 + r.powf(2.0 - self.s)).powf(-m);
        let bubble_integral = numerics::integrate_adaptive(
            |r| r.powf(n - 1.0) * bubble(r).powf(self.q + 1.0),
            &quad,
        )?
        .value;

        let expo = 2.0 * beta / (n - 2.0);
        let pref = (ex.two_star - 1.0 - self.q) * self.mu / ((self.q + 1.0) * (n - 2.0));
        // ∫_{R^n} U_1^{q+1} dx = ω_{n-1} c^{q+1} * radial_integral; the c^2 ω
        // in the denominator cancels against it in the weight form.
        let k = (pref * ex.omega * bubble_integral / (c * c * ex.omega)).powf(expo);
        let k_weight_form = (pref * c.powf(self.q - 1.0) * radial_integral).powf(expo);
        Ok(MbRecurrence { k, beta, k_weight_form, radial_integral })
    }
}

// ---------------------------------------------------------------------------
// Non-differential profile
// ---------------------------------------------------------------------------

/// The exact zero of the nonlinearity: `u*(r) = coeff * r^{-p_nd}` with
/// `f_{μ,q}(x, u*) = 0` identically.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct NdProfile {
    /// `p_nd = s / (q - (2*(s)-1))`.
    pub p_nd: f64,
    /// `coeff = μ^{-1/(q - (2*(s)-1))}`.
    pub coeff: f64,
}

impl NdProfile {
    pub fn eval(&self, r: f64) -> f64 {
        self.coeff * r.powf(-self.p_nd)
    }

    /// Radial derivative of the profile.
    pub fn eval_deriv(&self, r: f64) -> f64 {
        -self.p_nd * self.coeff * r.powf(-self.p_nd - 1.0)
    }
}

impl ProblemParams {
    /// Requires `2*(s)-1 < q < 2*-1` (both endpoints excluded) and `mu > 0`.
    pub fn nd_profile(&self) -> Result<NdProfile> {
        let regime = self.regime();
        if !regime.nd_admissible {
            let ex = self.exponents();
            return Err(Error::Regime(format!(
                "non-differential profile needs {} < q < {} (got q = {})",
                ex.two_star_s - 1.0,
                ex.two_star - 1.0,
                self.q
            )));
        }
        if self.mu == 0.0 {
            return Err(Error::domain("non-differential profile needs mu > 0"));
        }
        let ex = self.exponents();
        let gap = self.q - (ex.two_star_s - 1.0);
        Ok(NdProfile { p_nd: self.s / gap, coeff: self.mu.powf(-1.0 / gap) })
    }
}
