//! Profile classification: turns a trace of `w(r) = r^{(n-2)/2} u(r)` into a
//! verdict — Removable, (CGS), (MB), or (ND) — and extracts the multi-bump
//! structure (critical radii, scale recurrence, bubble-sum reconstruction).
//!
//! The four verdicts follow the liminf/limsup table of `w` at the
//! singularity:
//!
//! | tag       | liminf    | limsup    |
//! |-----------|-----------|-----------|
//! | Removable | 0         | 0         |
//! | CGS       | positive  | positive  |
//! | MB        | 0         | positive  |
//! | ND        | infinite  | infinite  |

use serde::Serialize;

use crate::dynamics::{self, PhaseEval};
use crate::error::{Error, Result};
use crate::params::ProblemParams;

/// Provenance of a trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TraceSource {
    FromTrajectory,
    FromClosedForm,
    External,
}

/// An ordered trace of `(r, w)` pairs with `r` strictly decreasing toward 0
/// and `w >= 0`. For radial solutions the spherical average equals the
/// function itself, so `w` is exactly the phase variable `v` at `t = -ln r`.
#[derive(Debug, Clone, Serialize)]
pub struct WTrace {
    pub params: ProblemParams,
    samples: Vec<(f64, f64)>,
    pub source: TraceSource,
}

impl WTrace {
    pub fn new(params: ProblemParams, samples: Vec<(f64, f64)>, source: TraceSource) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::TooFewSamples("empty trace".into()));
        }
        let mut prev = f64::INFINITY;
        for &(r, w) in &samples {
            if !(r > 0.0) || !r.is_finite() {
                return Err(Error::Malformed(format!("radius {r} must be finite and positive")));
            }
            if r >= prev {
                return Err(Error::Malformed(format!(
                    "radii must be strictly decreasing, got {r} after {prev}"
                )));
            }
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::Malformed(format!("w = {w} must be finite and >= 0")));
            }
            prev = r;
        }
        Ok(WTrace { params, samples, source })
    }

    /// Samples a phase-evaluable orbit on the given radius grid
    /// (decreasing). `w(r) = v(-ln r)` exactly.
    pub fn from_phase_eval<P: PhaseEval + ?Sized>(
        params: ProblemParams,
        orbit: &P,
        r_grid: &[f64],
        source: TraceSource,
    ) -> Result<Self> {
        let mut samples = Vec::with_capacity(r_grid.len());
        for &r in r_grid {
            if !(r > 0.0) {
                return Err(Error::domain(format!("grid radius must be positive, got {r}")));
            }
            let st = orbit.phase_at(&params, -r.ln())?;
            samples.push((r, st.v));
        }
        WTrace::new(params, samples, source)
    }

    /// Parses an external two-column CSV with mandatory header `r,u`,
    /// decimal points, and strictly decreasing radii.
    pub fn from_radial_csv(params: ProblemParams, text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Malformed("empty file".into()))?
            .trim_start_matches('\u{feff}')
            .trim();
        if header != "r,u" {
            return Err(Error::Malformed(format!("expected header 'r,u', got '{header}'")));
        }
        let kappa = params.kappa();
        let mut samples = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut cols = line.split(',');
            let parse = |field: Option<&str>| -> Result<f64> {
                field
                    .ok_or_else(|| Error::Malformed(format!("line {}: missing column", i + 2)))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Malformed(format!("line {}: {e}", i + 2)))
            };
            let r = parse(cols.next())?;
            let u = parse(cols.next())?;
            if cols.next().is_some() {
                return Err(Error::Malformed(format!("line {}: expected two columns", i + 2)));
            }
            samples.push((r, r.powf(kappa) * u));
        }
        WTrace::new(params, samples, TraceSource::External)
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn r_min(&self) -> f64 {
        self.samples.last().unwrap().0
    }

    pub fn r_max(&self) -> f64 {
        self.samples.first().unwrap().0
    }

    /// Samples reindexed by increasing `t = -ln r`.
    fn t_series(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.samples.len();
        let mut ts = Vec::with_capacity(n);
        let mut ws = Vec::with_capacity(n);
        for &(r, w) in self.samples.iter() {
            ts.push(-r.ln());
            ws.push(w);
        }
        (ts, ws)
    }
}

/// Convenience constructor matching the operation name.
pub fn w_trace<P: PhaseEval + ?Sized>(
    params: ProblemParams,
    orbit: &P,
    r_grid: &[f64],
    source: TraceSource,
) -> Result<WTrace> {
    WTrace::from_phase_eval(params, orbit, r_grid, source)
}

/// The convexity threshold `ε0 = ((n-2)^2 / (8 C1^{2*(s)-1}))^{1/(2*(s)-2)}`
/// below which `W(t)` is strictly convex; the spherical Harnack constant is
/// `C1 = 1` for radial traces, the only kind accepted here.
pub fn convexity_threshold(params: &ProblemParams) -> f64 {
    let ex = params.exponents();
    (params.kappa_sq() / 2.0).powf(1.0 / (ex.two_star_s - 2.0))
}

/// Local extrema of a trace: maxima radii `r_k` and minima radii `τ_k`,
/// strictly interleaved, both decreasing toward 0.
#[derive(Debug, Clone, Serialize)]
pub struct CriticalRadii {
    pub maxima: Vec<f64>,
    pub w_at_max: Vec<f64>,
    pub minima: Vec<f64>,
    pub w_at_min: Vec<f64>,
    /// Flags minima sitting below the convexity threshold.
    pub min_below_threshold: Vec<bool>,
}

impl CriticalRadii {
    pub fn interleaved_ok(&self) -> bool {
        // merged by decreasing radius the kinds must alternate
        let mut merged: Vec<(f64, bool)> = self
            .maxima
            .iter()
            .map(|&r| (r, true))
            .chain(self.minima.iter().map(|&r| (r, false)))
            .collect();
        merged.sort_by(|a, b| b.0.total_cmp(&a.0));
        merged.windows(2).all(|w| w[0].1 != w[1].1)
    }
}

/// Parabolic vertex through three points, clamped to `[x1, x3]`.
fn quadratic_vertex(x1: f64, y1: f64, x2: f64, y2: f64, x3: f64, y3: f64) -> (f64, f64) {
    let d1 = (y2 - y1) / (x2 - x1);
    let d2 = (y3 - y2) / (x3 - x2);
    let a = (d2 - d1) / (x3 - x1);
    if a == 0.0 || !a.is_finite() {
        return (x2, y2);
    }
    let x_star = (0.5 * (x1 + x2) - d1 / (2.0 * a)).clamp(x1, x3);
    let y_star = y1 + d1 * (x_star - x1) + a * (x_star - x1) * (x_star - x2);
    (x_star, y_star)
}

/// Locates local maxima and minima of `w` by discrete slope sign changes,
/// refined by a local quadratic fit in `t = -ln r`. Plateaus carry the
/// previous slope sign. Errors if the extrema fail to alternate.
pub fn critical_radii(trace: &WTrace, eps0: f64) -> Result<CriticalRadii> {
    let (ts, ws) = trace.t_series();
    if ts.len() < 3 {
        return Err(Error::TooFewSamples(format!(
            "{} samples; extremum detection needs at least 3",
            ts.len()
        )));
    }
    let mut maxima = Vec::new();
    let mut w_at_max = Vec::new();
    let mut minima = Vec::new();
    let mut w_at_min = Vec::new();

    let mut prev_sign = 0i8;
    for i in 0..ts.len() - 1 {
        let d = ws[i + 1] - ws[i];
        let sign = if d > 0.0 {
            1
        } else if d < 0.0 {
            -1
        } else {
            prev_sign
        };
        if prev_sign != 0 && sign != 0 && sign != prev_sign {
            // extremum between samples i-1 and i+1, vertex near sample i
            let (t_star, w_star) =
                quadratic_vertex(ts[i - 1], ws[i - 1], ts[i], ws[i], ts[i + 1], ws[i + 1]);
            let r_star = (-t_star).exp();
            if prev_sign > 0 {
                maxima.push(r_star);
                w_at_max.push(w_star);
            } else {
                minima.push(r_star);
                w_at_min.push(w_star);
            }
        }
        if sign != 0 {
            prev_sign = sign;
        }
    }

    let min_below_threshold = w_at_min.iter().map(|&w| w < eps0).collect();
    let radii = CriticalRadii { maxima, w_at_max, minima, w_at_min, min_below_threshold };
    if !radii.interleaved_ok() {
        return Err(Error::Malformed(
            "detected extrema do not alternate between maxima and minima".into(),
        ));
    }
    Ok(radii)
}

/// Tunable thresholds of the classifier.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ClassifyTolerances {
    /// `w` below `zero_tol_factor * v_bar` counts as vanishing.
    pub zero_tol_factor: f64,
    /// Relative stability required between oscillation windows.
    pub stability: f64,
    /// Agreement required between the fitted and exact non-differential
    /// limits before the estimate is reported as matching.
    pub nd_rel_tol: f64,
    /// The trace must reach this radius for an asymptotic verdict.
    pub r_tail: f64,
    /// Completed oscillation windows required by the liminf/limsup path.
    pub min_windows: usize,
}

impl Default for ClassifyTolerances {
    fn default() -> Self {
        ClassifyTolerances {
            zero_tol_factor: 1e-2,
            stability: 0.10,
            nd_rel_tol: 1e-3,
            r_tail: 1e-6,
            min_windows: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ProfileTag {
    Removable,
    #[serde(rename = "CGS")]
    Cgs,
    #[serde(rename = "MB")]
    Mb,
    #[serde(rename = "ND")]
    Nd,
    Undetermined,
}

/// Verdict with the evidence that produced it.
#[derive(Debug, Clone, Serialize)]
pub struct ProfileClass {
    pub tag: ProfileTag,
    pub liminf_est: f64,
    pub limsup_est: f64,
    /// Estimated limit of `r^{p_nd} u(r)` when the divergent branch applies.
    pub nd_limit_est: Option<f64>,
}

/// Classifies a trace against the liminf/limsup table.
///
/// Divergence is tested first (a trace blowing past `10 v_bar` has no
/// meaningful oscillations); otherwise the last completed oscillation
/// windows estimate liminf/limsup, and traces without oscillations fall to
/// a monotone/flat tail analysis. Straddling estimates yield Undetermined.
pub fn classify(
    params: &ProblemParams,
    trace: &WTrace,
    tol: &ClassifyTolerances,
) -> Result<ProfileClass> {
    if trace.r_min() > tol.r_tail {
        return Err(Error::TooFewSamples(format!(
            "trace reaches r = {:e} but the verdict needs r <= {:e}",
            trace.r_min(),
            tol.r_tail
        )));
    }
    let ex = params.exponents();
    let v_bar = ex.v_bar;
    let zero_tol = tol.zero_tol_factor * v_bar;
    let (ts, ws) = trace.t_series();
    let n = ts.len();

    // -- divergence branch -------------------------------------------------
    let blow_idx = ws.iter().position(|&w| w > 10.0 * v_bar);
    if let Some(i) = blow_idx {
        let stays_high = ws[i..].iter().all(|&w| w > 5.0 * v_bar);
        if stays_high {
            let nd_limit_est = params.nd_profile().ok().map(|nd| {
                let rate = nd.p_nd - params.kappa();
                let m = n.min(8);
                ws[n - m..]
                    .iter()
                    .zip(&ts[n - m..])
                    .map(|(&w, &t)| w * (-rate * t).exp())
                    .sum::<f64>()
                    / m as f64
            });
            if nd_limit_est.is_some() {
                return Ok(ProfileClass {
                    tag: ProfileTag::Nd,
                    liminf_est: f64::INFINITY,
                    limsup_est: f64::INFINITY,
                    nd_limit_est,
                });
            }
            // unbounded trace outside the admissible window: no theory match
            return Ok(ProfileClass {
                tag: ProfileTag::Undetermined,
                liminf_est: f64::INFINITY,
                limsup_est: f64::INFINITY,
                nd_limit_est: None,
            });
        }
    }

    // -- oscillation branch -------------------------------------------------
    let radii = critical_radii(trace, convexity_threshold(params))?;
    let n_windows = radii.minima.len().saturating_sub(1);
    if n_windows >= tol.min_windows {
        let take = tol.min_windows;
        let mins: Vec<f64> = radii.w_at_min[radii.w_at_min.len() - (take + 1)..].to_vec();
        // maxima inside those windows are the last `take` ones that sit
        // between the first and last of the selected minima
        let lo_r = radii.minima[radii.minima.len() - 1];
        let hi_r = radii.minima[radii.minima.len() - (take + 1)];
        let maxs: Vec<f64> = radii
            .maxima
            .iter()
            .zip(&radii.w_at_max)
            .filter(|&(&r, _)| r > lo_r && r < hi_r)
            .map(|(_, &w)| w)
            .collect();
        if maxs.is_empty() {
            return Ok(undetermined(&ws));
        }
        let max_hi = maxs.iter().cloned().fold(f64::MIN, f64::max);
        let max_lo = maxs.iter().cloned().fold(f64::MAX, f64::min);
        let maxima_stable = max_hi <= (1.0 + tol.stability) * max_lo;
        let limsup_est = maxs.iter().sum::<f64>() / maxs.len() as f64;

        let min_hi = mins.iter().cloned().fold(f64::MIN, f64::max);
        let min_lo = mins.iter().cloned().fold(f64::MAX, f64::min);
        let minima_stable = min_hi <= (1.0 + tol.stability) * min_lo && min_lo > zero_tol;
        let minima_vanishing =
            mins.windows(2).all(|w| w[1] < w[0]) && *mins.last().unwrap() < zero_tol;

        if maxima_stable && minima_stable {
            return Ok(ProfileClass {
                tag: ProfileTag::Cgs,
                liminf_est: mins.iter().sum::<f64>() / mins.len() as f64,
                limsup_est,
                nd_limit_est: None,
            });
        }
        if maxima_stable && minima_vanishing {
            return Ok(ProfileClass {
                tag: ProfileTag::Mb,
                liminf_est: *mins.last().unwrap(),
                limsup_est,
                nd_limit_est: None,
            });
        }
        return Ok(undetermined(&ws));
    }

    // -- monotone / flat tail branch ----------------------------------------
    // behavior past the last extremum (or over the final quarter of the span)
    let t_last_ext = radii
        .maxima
        .iter()
        .chain(radii.minima.iter())
        .map(|&r| -r.ln())
        .fold(f64::MIN, f64::max);
    let t_cut = if t_last_ext.is_finite() && t_last_ext > ts[0] {
        t_last_ext
    } else {
        ts[0] + 0.75 * (ts[n - 1] - ts[0])
    };
    let tail: Vec<usize> = (0..n).filter(|&i| ts[i] >= t_cut).collect();
    if tail.len() < 3 {
        return Ok(undetermined(&ws));
    }
    let w_end = ws[*tail.last().unwrap()];
    let tail_max = tail.iter().map(|&i| ws[i]).fold(f64::MIN, f64::max);
    let tail_min = tail.iter().map(|&i| ws[i]).fold(f64::MAX, f64::min);
    let nonincreasing = tail.windows(2).all(|p| ws[p[1]] <= ws[p[0]] * (1.0 + 1e-12) + 1e-300);

    if nonincreasing && w_end < zero_tol {
        return Ok(ProfileClass {
            tag: ProfileTag::Removable,
            liminf_est: w_end,
            limsup_est: w_end,
            nd_limit_est: None,
        });
    }
    if tail_min > zero_tol && tail_max <= (1.0 + tol.stability) * tail_min {
        let mean = tail.iter().map(|&i| ws[i]).sum::<f64>() / tail.len() as f64;
        return Ok(ProfileClass {
            tag: ProfileTag::Cgs,
            liminf_est: mean,
            limsup_est: mean,
            nd_limit_est: None,
        });
    }
    Ok(undetermined(&ws))
}

fn undetermined(ws: &[f64]) -> ProfileClass {
    let n = ws.len();
    let tail = &ws[n - n.min(64)..];
    ProfileClass {
        tag: ProfileTag::Undetermined,
        liminf_est: tail.iter().cloned().fold(f64::MAX, f64::min),
        limsup_est: tail.iter().cloned().fold(f64::MIN, f64::max),
        nd_limit_est: None,
    }
}

// ---------------------------------------------------------------------------
// Multi-bump machinery
// ---------------------------------------------------------------------------

/// Iterates the scale recurrence `r_{k+1} = K r_k^{1/(q-(2*-2))}` from `r0`.
/// The list is truncated when a scale falls below 1e-300.
pub fn mb_generate(params: &ProblemParams, r0: f64, count: usize) -> Result<Vec<f64>> {
    if !(r0 > 0.0 && r0 < 1.0) {
        return Err(Error::domain(format!("r0 must lie in (0, 1), got {r0}")));
    }
    if count < 2 {
        return Err(Error::domain(format!("count must be >= 2, got {count}")));
    }
    let rec = params.mb_recurrence_constant()?;
    let mut radii = Vec::with_capacity(count);
    radii.push(r0);
    for _ in 1..count {
        let prev = *radii.last().unwrap();
        let next = rec.k * prev.powf(rec.beta);
        if next < 1e-300 {
            break;
        }
        radii.push(next);
    }
    if radii.len() < 2 {
        return Err(Error::Underflow(format!(
            "recurrence from r0 = {r0:e} underflows immediately"
        )));
    }
    Ok(radii)
}

/// Least-squares fit of the recurrence law on a list of maxima radii.
#[derive(Debug, Clone, Serialize)]
pub struct MbFit {
    pub beta_hat: f64,
    pub k_hat: f64,
    pub beta_expected: f64,
    pub k_expected: f64,
    /// Ratios `τ_{k+1} / sqrt(r_k r_{k+1})`, expected to approach 1, when
    /// minima radii are supplied.
    pub tau_check: Vec<f64>,
}

/// Fits `ln r_{k+1} = beta ln r_k + ln K` by least squares. Needs at least
/// 3 decreasing radii.
pub fn mb_fit(params: &ProblemParams, radii: &[f64], minima: Option<&[f64]>) -> Result<MbFit> {
    if radii.len() < 3 {
        return Err(Error::TooFewSamples(format!(
            "{} radii; the recurrence fit needs at least 3",
            radii.len()
        )));
    }
    if radii.windows(2).any(|w| !(w[1] < w[0]) || !(w[1] > 0.0)) {
        return Err(Error::Malformed("radii must be positive and strictly decreasing".into()));
    }
    let xs: Vec<f64> = radii[..radii.len() - 1].iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = radii[1..].iter().map(|r| r.ln()).collect();
    let m = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
    let denom = m * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return Err(Error::Malformed("degenerate radii ladder (all scales equal)".into()));
    }
    let beta_hat = (m * sxy - sx * sy) / denom;
    let k_hat = ((sy - beta_hat * sx) / m).exp();

    let rec = params.mb_recurrence_constant()?;
    // geometric means in log space: deep ladders underflow the product
    let tau_check = match minima {
        Some(taus) => taus
            .iter()
            .zip(radii.windows(2))
            .map(|(&tau, w)| tau / (0.5 * (w[0].ln() + w[1].ln())).exp())
            .collect(),
        None => Vec::new(),
    };
    Ok(MbFit {
        beta_hat,
        k_hat,
        beta_expected: rec.beta,
        k_expected: rec.k,
        tau_check,
    })
}

/// A bubble-sum evaluation at one radius.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BubbleSumValue {
    /// Full superposition `Σ_k U_{r_k}(r)` (terms below 1e-16 of the running
    /// sum are dropped).
    pub total: f64,
    /// The two-bubble window `U_{r_{k+1}}(r) + U_{r_k}(r)` for the bracketing
    /// `k` (a single term beyond the ends of the ladder).
    pub two_bubble: f64,
    /// Index `k` with `r_{k+1} <= r <= r_k`, when `r` is interior.
    pub window: Option<usize>,
}

/// Evaluates the bubble superposition at radius `r`.
pub fn bubble_sum(params: &ProblemParams, radii: &[f64], r: f64) -> Result<BubbleSumValue> {
    if radii.is_empty() {
        return Err(Error::TooFewSamples("bubble sum needs at least one scale".into()));
    }
    if radii.windows(2).any(|w| !(w[1] < w[0]) || !(w[1] > 0.0)) {
        return Err(Error::Malformed("radii must be positive and strictly decreasing".into()));
    }
    if !(r > 0.0) {
        return Err(Error::domain(format!("radius must be positive, got {r}")));
    }
    let mut terms: Vec<f64> = radii
        .iter()
        .map(|&lambda| dynamics::bubble_profile(params, lambda, r))
        .collect();
    let window = if r > radii[0] || r < *radii.last().unwrap() {
        None
    } else {
        radii.windows(2).position(|w| r <= w[0] && r >= w[1])
    };
    let two_bubble = match window {
        Some(k) => terms[k] + terms[k + 1],
        None => {
            if r > radii[0] {
                terms[0]
            } else {
                *terms.last().unwrap()
            }
        }
    };
    terms.sort_by(|a, b| b.total_cmp(a));
    let mut total = 0.0;
    for term in terms {
        if total > 0.0 && term < 1e-16 * total {
            break;
        }
        total += term;
    }
    Ok(BubbleSumValue { total, two_bubble, window })
}

/// The bubble superposition expressed directly in the phase variable:
/// `w(t) = Σ_k v0(t - t_k)` with `t_k = -ln r_k`. Identical to
/// `r^{(n-2)/2} * bubble_sum(..)` but safe for arbitrarily deep scales.
pub fn bubble_sum_w(params: &ProblemParams, radii: &[f64], t: f64) -> f64 {
    radii
        .iter()
        .map(|&rk| dynamics::homoclinic_profile(params, t + rk.ln()))
        .sum()
}

/// Phase-space view of a bubble superposition, usable as a trace source.
#[derive(Debug, Clone)]
pub struct BubbleSumOrbit {
    pub radii: Vec<f64>,
}

impl PhaseEval for BubbleSumOrbit {
    fn phase_at(&self, params: &ProblemParams, t: f64) -> Result<crate::dynamics::PhaseState> {
        let v = bubble_sum_w(params, &self.radii, t);
        let dv: f64 = self
            .radii
            .iter()
            .map(|&rk| dynamics::homoclinic_profile_deriv(params, t + rk.ln()))
            .sum();
        Ok(crate::dynamics::PhaseState { t, v, dv })
    }
}
