//! Command-line front end: scenario parsing, dispatch, and machine-readable
//! reports.
//!
//! Every command emits one JSON report (schema 1) on stdout or `--out`, with
//! floats fixed at 17 significant digits so identical scenarios produce
//! byte-identical output. `--trace` writes plot-ready CSV in the variable
//! space chosen by `--space`. Errors become `{error, module, detail}` objects
//! with exit code 2 (domain/regime), 3 (numerical), or 4 (i/o).

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::classifier::{self, ClassifyTolerances, WTrace};
use crate::dynamics::{
    self, crit_classify_orbit, crit_equilibria, integrate,turning_points, Conservation,
    IntegrationSettings, PhaseState, Trajectory,
};
use crate::error::{Error, Result};
use crate::params::ProblemParams;
use crate::pohozaev::{self, AsymptoticOptions};

pub const REPORT_SCHEMA: u32 = 1;

#[derive(Parser, Debug)]
#[command(
    name = "bubbletower",
    version,
    about = "Phase-plane laboratory for singular radial profiles of a Hardy-Sobolev equation",
    allow_negative_numbers = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Dimension n (>= 3)
    #[arg(long, global = true)]
    pub n: Option<u32>,

    /// Weight exponent s in (0, 2)
    #[arg(long, global = true)]
    pub s: Option<f64>,

    /// Perturbation exponent q (> 1); `crit` defaults it to 2*-1
    #[arg(long, global = true)]
    pub q: Option<f64>,

    /// Perturbation coefficient mu (>= 0)
    #[arg(long, global = true)]
    pub mu: Option<f64>,

    /// Integrator local error tolerance
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub tol: f64,

    /// Write the JSON report to this file instead of stdout
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Write a CSV trace of the produced orbit to this file
    #[arg(long, global = true)]
    pub trace: Option<PathBuf>,

    /// Variable space for CSV traces
    #[arg(long, global = true, value_enum, default_value_t = Space::R)]
    pub space: Space,

    /// Re-check module invariants on the produced objects and fail loudly
    #[arg(long, global = true)]
    pub verify: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Space {
    /// Radial variables: header `r,u`
    R,
    /// Phase variables: header `t,v,dv`
    Ef,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Every closed-form exponent, constant, and threshold
    Constants,
    /// Integrate a phase-plane orbit from (v0, dv0)
    #[command(allow_negative_numbers = true)]
    Solve {
        #[arg(long)]
        v0: f64,
        #[arg(long, default_value_t = 0.0)]
        dv0: f64,
        /// Final phase time t = -ln r
        #[arg(long)]
        tend: f64,
        #[arg(long, default_value_t = 0.0)]
        t0: f64,
        /// Output sample spacing
        #[arg(long, default_value_t = 0.01)]
        stride: f64,
    },
    /// Level-set analysis of the unperturbed (mu = 0) phase plane
    Phase {
        /// Hamiltonian levels K, comma separated, each in (0, K_ns)
        #[arg(long, value_delimiter = ',', required = true)]
        levels: Vec<f64>,
    },
    /// Flux integral at two radii, the annulus identity, and optionally the
    /// asymptotic limit, along an integrated orbit started at t = -ln r2
    #[command(allow_negative_numbers = true)]
    Pohozaev {
        #[arg(long)]
        v0: f64,
        #[arg(long, default_value_t = 0.0)]
        dv0: f64,
        #[arg(long)]
        r1: f64,
        #[arg(long)]
        r2: f64,
        /// Estimate lim_{r->0} P_r on a halving ladder below r1
        #[arg(long)]
        asymptotic: bool,
    },
    /// Classify an external (r, u) trace
    Classify {
        /// Two-column CSV with mandatory header `r,u`, radii decreasing
        #[arg(long)]
        input: PathBuf,
        /// Radius the trace must reach for an asymptotic verdict
        #[arg(long, default_value_t = 1e-6)]
        rtail: f64,
    },
    /// Multi-bump scale ladder: generate, fit, reconstruct
    Mb {
        /// Leading scale r0 in (0, 1)
        #[arg(long)]
        r0: f64,
        #[arg(long, default_value_t = 6)]
        count: usize,
    },
    /// Critical-case (q = 2*-1) thresholds, equilibria, orbit classification
    #[command(allow_negative_numbers = true)]
    Crit {
        /// Classify the orbit through (v0, dv0) when given
        #[arg(long)]
        v0: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        dv0: f64,
    },
}

// ---------------------------------------------------------------------------
// Deterministic JSON: floats at 17 significant digits
// ---------------------------------------------------------------------------

struct SigFigFormatter;

impl serde_json::ser::Formatter for SigFigFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }
}

/// Renders a JSON value with fixed 17-significant-digit floats.
pub fn render_json(value: &Value) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigFigFormatter);
    value
        .serialize(&mut ser)
        .expect("in-memory JSON serialization cannot fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

fn finite_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report payloads contain finite numbers")
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

/// Runs a parsed scenario and writes its report; returns the process exit
/// code (0 success, 2 domain/regime, 3 numerical, 4 i/o).
pub fn run(cli: &Cli) -> i32 {
    match execute(cli) {
        Ok(report) => {
            let text = render_json(&report);
            match write_output(cli, &text) {
                Ok(()) => 0,
                Err(e) => {
                    emit_error(&e);
                    e.exit_code()
                }
            }
        }
        Err(e) => {
            emit_error(&e);
            e.exit_code()
        }
    }
}

fn emit_error(e: &Error) {
    let obj = json!({
        "error": e.kind(),
        "module": module_of(e),
        "detail": e.to_string(),
    });
    println!("{}", render_json(&obj));
}

fn module_of(e: &Error) -> &'static str {
    match e {
        Error::Domain { .. } | Error::Regime(_) => "params",
        Error::NoSignChange { .. }
        | Error::MaxIterations(_)
        | Error::ToleranceNotMet { .. }
        | Error::RootNotBracketed(_) => "numerics",
        Error::OutOfSpan { .. } | Error::Overflow(_) => "dynamics",
        Error::TooFewSamples(_) | Error::Underflow(_) | Error::Malformed(_) => "classifier",
        Error::NotConverged(_) => "pohozaev",
        Error::Io(_) => "cli",
    }
}

fn write_output(cli: &Cli, text: &str) -> Result<()> {
    match &cli.out {
        Some(path) => {
            let mut f = std::fs::File::create(path)?;
            f.write_all(text.as_bytes())?;
            f.write_all(b"\n")?;
            Ok(())
        }
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn require_params(cli: &Cli) -> Result<ProblemParams> {
    let n = cli.n.ok_or_else(|| Error::domain("--n is required"))?;
    let s = cli.s.ok_or_else(|| Error::domain("--s is required"))?;
    let q = cli.q.ok_or_else(|| Error::domain("--q is required"))?;
    let mu = cli.mu.ok_or_else(|| Error::domain("--mu is required"))?;
    ProblemParams::new(n, s, q, mu)
}

fn report(cli: &Cli, command: &str, params: &ProblemParams, results: Value, diagnostics: Value) -> Value {
    json!({
        "schema": REPORT_SCHEMA,
        "command": command,
        "params": to_value(params),
        "tol": cli.tol,
        "results": results,
        "diagnostics": diagnostics,
        "exit_code": 0,
    })
}

fn execute(cli: &Cli) -> Result<Value> {
    match &cli.command {
        Command::Constants => cmd_constants(cli),
        Command::Solve { v0, dv0, tend, t0, stride } => {
            cmd_solve(cli, *v0, *dv0, *tend, *t0, *stride)
        }
        Command::Phase { levels } => cmd_phase(cli, levels),
        Command::Pohozaev { v0, dv0, r1, r2, asymptotic } => {
            cmd_pohozaev(cli, *v0, *dv0, *r1, *r2, *asymptotic)
        }
        Command::Classify { input, rtail } => cmd_classify(cli, input, *rtail),
        Command::Mb { r0, count } => cmd_mb(cli, *r0, *count),
        Command::Crit { v0, dv0 } => cmd_crit(cli, *v0, *dv0),
    }
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

fn cmd_constants(cli: &Cli) -> Result<Value> {
    let params = require_params(cli)?;
    let ex = params.exponents();
    let regime = params.regime();
    let thresholds = params.critical_thresholds()?;
    let eps0 = classifier::convexity_threshold(&params);
    let recurrence = if regime.mb_admissible && params.mu() > 0.0 {
        Some(params.mb_recurrence_constant()?)
    } else {
        None
    };
    let nd = if regime.nd_admissible && params.mu() > 0.0 {
        Some(params.nd_profile()?)
    } else {
        None
    };

    if cli.verify {
        verify_constants(&params)?;
    }

    let results = json!({
        "exponents": to_value(&ex),
        "regime": to_value(&regime),
        "thresholds": to_value(&thresholds),
        "eps0": eps0,
        "recurrence": recurrence.as_ref().map(to_value),
        "nd_profile": nd.as_ref().map(to_value),
    });
    Ok(report(cli, "constants", &params, results, json!({"verified": cli.verify})))
}

fn verify_constants(params: &ProblemParams) -> Result<()> {
    fn check(ok: bool, achieved: f64) -> Result<()> {
        if ok {
            Ok(())
        } else {
            Err(Error::ToleranceNotMet { requested: 1e-10, achieved })
        }
    }
    let ex = params.exponents();
    // constant orbit sits exactly at the threshold level
    let h = dynamics::hamiltonian(params, &PhaseState::new(0.0, ex.v_bar, 0.0));
    check((h - ex.k_ns).abs() <= 1e-12 * ex.k_ns.max(1.0), (h - ex.k_ns).abs())?;
    // threshold ordering
    let eps0 = classifier::convexity_threshold(params);
    check(eps0 < ex.v_bar, eps0 - ex.v_bar)?;
    let mu1 = params.mu_one()?;
    check(mu1.operational < params.mu_zero(), mu1.operational)?;
    // recurrence dual forms
    if params.regime().mb_admissible && params.mu() > 0.0 {
        let rec = params.mb_recurrence_constant()?;
        let gap = (rec.k - rec.k_weight_form).abs();
        check(gap <= 1e-10 * rec.k.abs().max(1e-300), gap)?;
    }
    Ok(())
}

fn cmd_solve(cli: &Cli, v0: f64, dv0: f64, tend: f64, t0: f64, stride: f64) -> Result<Value> {
    let params = require_params(cli)?;
    let settings = IntegrationSettings {
        tol: cli.tol,
        stride,
        v_ceiling: 1e8,
        conserve: Conservation::Auto,
    };
    let start = PhaseState::new(t0, v0, dv0);
    let traj = integrate(&params, &start, tend, &settings)?;

    if let Some(path) = &cli.trace {
        write_trace_csv(path, &params, &traj, cli.space)?;
    }
    if cli.verify {
        let invariant_exists = params.mu() == 0.0 || params.exponents().gamma == 0.0;
        if invariant_exists && traj.drift > 1e-7 {
            return Err(Error::ToleranceNotMet { requested: 1e-7, achieved: traj.drift });
        }
    }

    let last = traj.samples.last().expect("trajectory has samples");
    let results = json!({
        "halt": to_value(&traj.halt),
        "final_state": to_value(last),
        "samples": traj.samples.len(),
    });
    let diagnostics = json!({
        "drift": traj.drift,
        "verified": cli.verify,
    });
    Ok(report(cli, "solve", &params, results, diagnostics))
}

fn cmd_phase(cli: &Cli, levels: &[f64]) -> Result<Value> {
    let params = require_params(cli)?;
    if params.mu() != 0.0 {
        return Err(Error::domain(
            "phase-plane level analysis is defined for mu = 0 (use `crit` for q = 2*-1)",
        ));
    }
    let ex = params.exponents();
    let mut rows = Vec::new();
    for &k in levels {
        let (v_min, v_max) = turning_points(&params, k)?;
        let period = dynamics::period(&params, k)?;
        if cli.verify {
            let h = dynamics::hamiltonian(&params, &PhaseState::new(0.0, v_min, 0.0));
            if (h - k).abs() > 1e-10 * k.max(1.0) {
                return Err(Error::ToleranceNotMet { requested: 1e-10, achieved: (h - k).abs() });
            }
        }
        rows.push(json!({
            "k": k,
            "v_min": v_min,
            "v_max": v_max,
            "period": period,
        }));
    }
    if let Some(path) = &cli.trace {
        // one full period of the first level
        let k = levels[0];
        let (v_min, _) = turning_points(&params, k)?;
        let t_period = dynamics::period(&params, k)?;
        let settings = IntegrationSettings { tol: cli.tol, ..Default::default() };
        let traj = integrate(&params, &PhaseState::new(0.0, v_min, 0.0), t_period, &settings)?;
        write_trace_csv(path, &params, &traj, cli.space)?;
    }
    let results = json!({
        "k_ns": ex.k_ns,
        "v_bar": ex.v_bar,
        "levels": rows,
    });
    Ok(report(cli, "phase", &params, results, json!({"verified": cli.verify})))
}

fn cmd_pohozaev(cli: &Cli, v0: f64, dv0: f64, r1: f64, r2: f64, asymptotic: bool) -> Result<Value> {
    let params = require_params(cli)?;
    if !(r1 > 0.0 && r1 < r2 && r2 < 1.0) {
        return Err(Error::domain(format!(
            "radii must satisfy 0 < r1 < r2 < 1, got ({r1}, {r2})"
        )));
    }
    let t_start = -r2.ln();
    let t_identity = -r1.ln();
    // leave room below r1 for the asymptotic ladder
    let t_end = if asymptotic { t_identity + 30.0 } else { t_identity };
    let settings = IntegrationSettings { tol: cli.tol, ..Default::default() };
    let start = PhaseState::new(t_start, v0, dv0);
    let traj = integrate(&params, &start, t_end, &settings)?;

    let mut rep = pohozaev::identity_residual(&params, &traj, r1, r2)?;
    let asym = if asymptotic {
        let opts = AsymptoticOptions { r0: r1, abs_tol: 1e-6, max_rungs: 45 };
        let est = pohozaev::asymptotic_pohozaev(&params, &traj, &opts)?;
        rep.asymptotic = Some(est.value);
        Some(est)
    } else {
        None
    };

    if cli.verify && rep.relative_residual() > 1e-5 {
        return Err(Error::ToleranceNotMet { requested: 1e-5, achieved: rep.relative_residual() });
    }
    if let Some(path) = &cli.trace {
        write_trace_csv(path, &params, &traj, cli.space)?;
    }

    let results = json!({
        "report": to_value(&rep),
        "relative_residual": rep.relative_residual(),
        "asymptotic": asym.as_ref().map(|e| json!({
            "value": e.value,
            "observed_rate": e.observed_rate,
            "expected_rate": e.expected_rate,
            "rungs": e.ladder.len(),
        })),
    });
    let diagnostics = json!({
        "drift": traj.drift,
        "halt": to_value(&traj.halt),
        "verified": cli.verify,
    });
    Ok(report(cli, "pohozaev", &params, results, diagnostics))
}

fn cmd_classify(cli: &Cli, input: &PathBuf, rtail: f64) -> Result<Value> {
    let params = require_params(cli)?;
    let text = std::fs::read_to_string(input)?;
    let trace = WTrace::from_radial_csv(params, &text)?;
    let tol = ClassifyTolerances { r_tail: rtail, ..Default::default() };
    let verdict = classifier::classify(&params, &trace, &tol)?;
    let eps0 = classifier::convexity_threshold(&params);
    let radii = classifier::critical_radii(&trace, eps0)?;
    if cli.verify && !radii.interleaved_ok() {
        return Err(Error::Malformed("critical radii failed interleaving".into()));
    }
    let fit = if radii.maxima.len() >= 3 {
        classifier::mb_fit(&params, &radii.maxima, Some(&radii.minima)).ok()
    } else {
        None
    };
    let results = json!({
        "tag": to_value(&verdict.tag),
        "liminf_est": finite_or_null(verdict.liminf_est),
        "limsup_est": finite_or_null(verdict.limsup_est),
        "nd_limit_est": verdict.nd_limit_est.map(finite_or_null),
        "critical_radii": to_value(&radii),
        "mb_fit": fit.as_ref().map(to_value),
    });
    let diagnostics = json!({
        "samples": trace.samples().len(),
        "r_min": trace.r_min(),
        "r_max": trace.r_max(),
        "eps0": eps0,
        "verified": cli.verify,
    });
    Ok(report(cli, "classify", &params, results, diagnostics))
}

fn cmd_mb(cli: &Cli, r0: f64, count: usize) -> Result<Value> {
    let params = require_params(cli)?;
    let rec = params.mb_recurrence_constant()?;
    let radii = classifier::mb_generate(&params, r0, count)?;
    let fit = if radii.len() >= 3 {
        Some(classifier::mb_fit(&params, &radii, None)?)
    } else {
        None
    };
    if cli.verify {
        if let Some(f) = &fit {
            let gap = (f.beta_hat - f.beta_expected).abs().max(
                (f.k_hat - f.k_expected).abs() / f.k_expected.max(1e-300),
            );
            if gap > 1e-10 {
                return Err(Error::ToleranceNotMet { requested: 1e-10, achieved: gap });
            }
        }
    }
    if let Some(path) = &cli.trace {
        write_bubble_sum_csv(path, &params, &radii, cli.space)?;
    }
    let results = json!({
        "k": rec.k,
        "beta": rec.beta,
        "radial_integral": rec.radial_integral,
        "radii": radii,
        "fit": fit.as_ref().map(to_value),
    });
    Ok(report(cli, "mb", &params, results, json!({"verified": cli.verify})))
}

fn cmd_crit(cli: &Cli, v0: Option<f64>, dv0: f64) -> Result<Value> {
    // q defaults to the critical exponent when omitted
    let params = match cli.q {
        Some(_) => require_params(cli)?,
        None => {
            let n = cli.n.ok_or_else(|| Error::domain("--n is required"))?;
            let s = cli.s.ok_or_else(|| Error::domain("--s is required"))?;
            let mu = cli.mu.ok_or_else(|| Error::domain("--mu is required"))?;
            let q = 2.0 * f64::from(n) / (f64::from(n) - 2.0) - 1.0;
            ProblemParams::new(n, s, q, mu)?
        }
    };
    let thresholds = params.critical_thresholds()?;
    let equilibria = crit_equilibria(&params).ok();
    let energies = equilibria.as_ref().map(|eq| {
        let e_center = -params.crit_f_with(params.mu(), eq.v_minus);
        let e_sep = -params.crit_f_with(params.mu(), eq.v_plus);
        json!({"e_center": e_center, "e_separatrix": e_sep})
    });
    let orbit = match v0 {
        Some(v) => {
            let class = crit_classify_orbit(&params, &PhaseState::new(0.0, v, dv0))?;
            Some(to_value(&class))
        }
        None => None,
    };
    if cli.verify {
        if let Some(eq) = &equilibria {
            let g1 = params.crit_g_with(params.mu(), eq.v_minus).abs();
            let g2 = params.crit_g_with(params.mu(), eq.v_plus).abs();
            let worst = g1.max(g2);
            if worst > 1e-10 * params.kappa_sq() {
                return Err(Error::ToleranceNotMet { requested: 1e-10, achieved: worst });
            }
        }
    }
    let results = json!({
        "thresholds": to_value(&thresholds),
        "equilibria": equilibria.as_ref().map(to_value),
        "energies": energies,
        "orbit": orbit,
    });
    Ok(report(cli, "crit", &params, results, json!({"verified": cli.verify})))
}

// ---------------------------------------------------------------------------
// CSV traces
// ---------------------------------------------------------------------------

fn write_trace_csv(path: &PathBuf, params: &ProblemParams, traj: &Trajectory, space: Space) -> Result<()> {
    let mut out = String::new();
    match space {
        Space::Ef => {
            out.push_str("t,v,dv\n");
            for s in &traj.samples {
                out.push_str(&format!("{},{},{}\n", s.t, s.v, s.dv));
            }
        }
        Space::R => {
            out.push_str("r,u\n");
            for s in &traj.samples {
                let (r, u, _) = dynamics::ef_untransform(params, s);
                out.push_str(&format!("{r},{u}\n"));
            }
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn write_bubble_sum_csv(
    path: &PathBuf,
    params: &ProblemParams,
    radii: &[f64],
    space: Space,
) -> Result<()> {
    // grid spanning the whole ladder, kept shallow enough that u = w r^{-κ}
    // stays representable
    let kappa = params.kappa();
    let r_hi = (radii[0] * 4.0).min(0.99);
    let floor = 10f64.powf(-260.0 / kappa.max(1.0));
    let r_lo = (radii.last().unwrap() * 1e-2).max(floor);
    let t_lo = -r_hi.ln();
    let t_hi = -r_lo.ln();
    let steps = ((t_hi - t_lo) / 0.05).ceil() as usize;
    let mut out = String::new();
    match space {
        Space::R => out.push_str("r,u\n"),
        Space::Ef => out.push_str("t,v,dv\n"),
    }
    let orbit = classifier::BubbleSumOrbit { radii: radii.to_vec() };
    for i in 0..=steps {
        let t = t_lo + (t_hi - t_lo) * i as f64 / steps as f64;
        let st = crate::dynamics::PhaseEval::phase_at(&orbit, params, t)?;
        match space {
            Space::R => {
                let r = (-t).exp();
                let u = st.v * r.powf(-kappa);
                out.push_str(&format!("{r},{u}\n"));
            }
            Space::Ef => {
                out.push_str(&format!("{},{},{}\n", st.t, st.v, st.dv));
            }
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}
