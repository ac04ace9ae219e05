//! Scalar numerical kernels: a guaranteed-convergence bracketing root finder
//! and adaptive Gauss-Kronrod quadrature that removes inverse-square-root
//! endpoint singularities by substitution.
//!
//! Both kernels are pure functions over caller-supplied closures and are
//! reentrant; they own no state beyond their arguments.

use crate::error::{Error, Result};

/// A root bracket `[lo, hi]` with a verified sign change.
#[derive(Debug, Clone, Copy)]
pub struct Bracket {
    lo: f64,
    hi: f64,
}

impl Bracket {
    /// Verifies `f(lo) * f(hi) <= 0` at construction. An endpoint that is an
    /// exact zero is accepted.
    pub fn new(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::domain(format!(
                "bracket requires finite lo < hi, got [{lo}, {hi}]"
            )));
        }
        let product = f(lo) * f(hi);
        if !(product <= 0.0) {
            return Err(Error::NoSignChange { lo, hi, product });
        }
        Ok(Bracket { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }
}

const ROOT_MAX_ITER: usize = 200;

/// Brent's method: inverse-quadratic / secant steps guarded by bisection, so
/// convergence is guaranteed for any continuous `f` with a sign change.
///
/// Returns `x` with the enclosing interval narrowed below
/// `tol + 4*eps*|x|`.
pub fn find_root(f: impl Fn(f64) -> f64, bracket: &Bracket, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::domain(format!("root tolerance must be > 0, got {tol}")));
    }
    let (mut a, mut b) = (bracket.lo, bracket.hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    // c is the previous iterate; (b, fb) is the best root estimate.
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;

    for _ in 0..ROOT_MAX_ITER {
        if fb.abs() > fc.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            // Attempt inverse quadratic interpolation (secant when a == c).
            let s = fb / fa;
            let (mut p, mut q) = if a == c {
                (2.0 * xm * s, 1.0 - s)
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                (
                    s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0)),
                    (qq - 1.0) * (r - 1.0) * (s - 1.0),
                )
            };
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
    }
    Err(Error::MaxIterations(ROOT_MAX_ITER))
}

/// Upper integration limit: finite or `+inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UpperLimit {
    Finite(f64),
    PlusInfinity,
}

/// Declarative description of a 1-d integral.
///
/// `singular_lo` / `singular_hi` declare `f ~ C / sqrt(x - a)` (resp.
/// `C / sqrt(b - x)`) behavior; the solver removes these by the substitution
/// `x = a + u^2` (resp. `x = b - u^2`). An infinite tail is folded onto a
/// finite interval by `x -> 1/x`.
#[derive(Debug, Clone, Copy)]
pub struct QuadSpec {
    pub a: f64,
    pub b: UpperLimit,
    pub singular_lo: bool,
    pub singular_hi: bool,
    pub abs_tol: f64,
    pub rel_tol: f64,
}

pub const DEFAULT_ABS_TOL: f64 = 1e-12;
pub const DEFAULT_REL_TOL: f64 = 1e-10;

impl QuadSpec {
    pub fn plain(a: f64, b: f64) -> Self {
        QuadSpec {
            a,
            b: UpperLimit::Finite(b),
            singular_lo: false,
            singular_hi: false,
            abs_tol: DEFAULT_ABS_TOL,
            rel_tol: DEFAULT_REL_TOL,
        }
    }

    pub fn with_singular_ends(a: f64, b: f64, lo: bool, hi: bool) -> Self {
        QuadSpec {
            singular_lo: lo,
            singular_hi: hi,
            ..QuadSpec::plain(a, b)
        }
    }

    pub fn to_infinity(a: f64) -> Self {
        QuadSpec {
            b: UpperLimit::PlusInfinity,
            ..QuadSpec::plain(a, 0.0)
        }
    }

    pub fn tolerances(mut self, abs_tol: f64, rel_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self.rel_tol = rel_tol;
        self
    }
}

/// Quadrature estimate with its accumulated error bound.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
}

/// How panel abscissae map back into the caller's variable.
#[derive(Debug, Clone, Copy)]
enum Map {
    Identity,
    /// x = a + u^2, weight 2u.
    SqrtFromLo { a: f64 },
    /// x = b - u^2, weight 2u.
    SqrtFromHi { b: f64 },
    /// x = 1/t, weight 1/t^2 (tail of an infinite interval).
    Reciprocal,
}

impl Map {
    fn eval(&self, f: &dyn Fn(f64) -> f64, x: f64) -> f64 {
        match *self {
            Map::Identity => f(x),
            Map::SqrtFromLo { a } => 2.0 * x * f(a + x * x),
            Map::SqrtFromHi { b } => 2.0 * x * f(b - x * x),
            Map::Reciprocal => {
                let inv = 1.0 / x;
                f(inv) * inv * inv
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    map: Map,
    value: f64,
    error: f64,
}

// 15-point Kronrod / 7-point Gauss pair on [-1, 1].
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// QUADPACK-style error rescaling from the raw |K15 - G7| difference.
fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled = scaled.max(50.0 * f64::EPSILON * res_abs);
    }
    scaled
}

fn gk15(f: &dyn Fn(f64) -> f64, map: Map, lo: f64, hi: f64) -> (f64, f64) {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = map.eval(f, center);

    let mut res_g = fc * WG[3];
    let mut res_k = fc * WGK[7];
    let mut res_abs = fc.abs() * WGK[7];
    let mut fv = [0.0f64; 15];
    fv[7] = fc;

    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = map.eval(f, center - dx);
        let f2 = map.eval(f, center + dx);
        fv[j] = f1;
        fv[14 - j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            // Kronrod nodes 1, 3, 5 coincide with the Gauss-7 nodes.
            res_g += WG[j / 2] * (f1 + f2);
        }
    }

    let mean = res_k * 0.5;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv[j] - mean).abs() + (fv[14 - j] - mean).abs());
    }

    let value = res_k * half;
    let err = rescale_error((res_k - res_g) * half, res_abs * half.abs(), res_asc * half.abs());
    (value, err)
}

const MAX_PANELS: usize = 4000;

/// Adaptive Gauss-Kronrod integration of `f` per `spec`.
///
/// Endpoint substitutions make declared singular integrands smooth, so the
/// nested G7/K15 pair converges at high order; the panel with the largest
/// error estimate is bisected until the combined estimate meets
/// `max(abs_tol, rel_tol * |I|)`.
pub fn integrate_adaptive(f: impl Fn(f64) -> f64, spec: &QuadSpec) -> Result<QuadResult> {
    if !(spec.abs_tol > 0.0) || !(spec.rel_tol > 0.0) {
        return Err(Error::domain("quadrature tolerances must be > 0"));
    }
    if !spec.a.is_finite() {
        return Err(Error::domain("lower limit must be finite"));
    }
    let f_ref: &dyn Fn(f64) -> f64 = &f;

    // Decompose into panels with the appropriate variable maps.
    let mut panels: Vec<Panel> = Vec::new();
    let seed = |lo: f64, hi: f64, map: Map, panels: &mut Vec<Panel>| {
        if hi > lo {
            let (value, error) = gk15(f_ref, map, lo, hi);
            panels.push(Panel { lo, hi, map, value, error });
        }
    };

    match spec.b {
        UpperLimit::Finite(b) => {
            if !(b > spec.a) || !b.is_finite() {
                return Err(Error::domain(format!(
                    "integration limits must satisfy a < b, got [{}, {b}]",
                    spec.a
                )));
            }
            match (spec.singular_lo, spec.singular_hi) {
                (false, false) => seed(spec.a, b, Map::Identity, &mut panels),
                (true, false) => seed(0.0, (b - spec.a).sqrt(), Map::SqrtFromLo { a: spec.a }, &mut panels),
                (false, true) => seed(0.0, (b - spec.a).sqrt(), Map::SqrtFromHi { b }, &mut panels),
                (true, true) => {
                    let mid = 0.5 * (spec.a + b);
                    seed(0.0, (mid - spec.a).sqrt(), Map::SqrtFromLo { a: spec.a }, &mut panels);
                    seed(0.0, (b - mid).sqrt(), Map::SqrtFromHi { b }, &mut panels);
                }
            }
        }
        UpperLimit::PlusInfinity => {
            if spec.singular_hi {
                return Err(Error::domain(
                    "singular_hi is meaningless with an infinite upper limit",
                ));
            }
            // Split at max(a, 1); map the tail by x -> 1/x.
            if spec.a < 1.0 {
                if spec.singular_lo {
                    seed(0.0, (1.0 - spec.a).sqrt(), Map::SqrtFromLo { a: spec.a }, &mut panels);
                } else {
                    seed(spec.a, 1.0, Map::Identity, &mut panels);
                }
                seed(0.0, 1.0, Map::Reciprocal, &mut panels);
            } else {
                seed(0.0, 1.0 / spec.a, Map::Reciprocal, &mut panels);
            }
        }
    }

    if panels.is_empty() {
        return Ok(QuadResult { value: 0.0, error: 0.0, panels: 0 });
    }

    loop {
        let total: f64 = panels.iter().map(|p| p.value).sum();
        let err: f64 = panels.iter().map(|p| p.error).sum();
        let target = spec.abs_tol.max(spec.rel_tol * total.abs());
        if err <= target {
            return Ok(QuadResult { value: total, error: err, panels: panels.len() });
        }
        if panels.len() >= MAX_PANELS {
            return Err(Error::ToleranceNotMet { requested: target, achieved: err });
        }
        // Bisect the worst panel.
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.error.total_cmp(&b.1.error))
            .map(|(i, _)| i)
            .unwrap();
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.lo + p.hi);
        if mid <= p.lo || mid >= p.hi {
            // Interval no longer representable; accept what we have.
            let achieved = err;
            if achieved <= 10.0 * target {
                panels.push(p);
                let total: f64 = panels.iter().map(|q| q.value).sum();
                return Ok(QuadResult { value: total, error: achieved, panels: panels.len() });
            }
            return Err(Error::ToleranceNotMet { requested: target, achieved });
        }
        let (v1, e1) = gk15(f_ref, p.map, p.lo, mid);
        let (v2, e2) = gk15(f_ref, p.map, mid, p.hi);
        panels.push(Panel { lo: p.lo, hi: mid, map: p.map, value: v1, error: e1 });
        panels.push(Panel { lo: mid, hi: p.hi, map: p.map, value: v2, error: e2 });
    }
}
