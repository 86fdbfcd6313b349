//! Two nonlinear Gronwall bounds and their certification against the
//! worst-case ODEs they dominate.
//!
//! * log-plus form: `x(t) <= c0 + int_0^t c1 x + int_0^t c2 x log_+ x` gives
//!   `x(t) <= c0^{e^{A(t)}} exp(e^{A(t)} int_0^t c1(s) e^{-A(s)} ds)`.
//! * log-reciprocal form: `x(t) <= c0 + int_0^t c1 x + int_0^t c2 x log_+(1/x)` gives
//!   `x(t) <= (c0 + c0^{e^{-A(t)}}) e^{int_0^t (c1 + c2)}`,
//!
//! where `A(t) = int_0^t c2`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::{summarize, Check, InequalityReport};
use crate::rng::stream_rng;
use crate::weights::log_plus;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Lemma {
    /// `x log_+ x` growth.
    LogPlus,
    /// `x log_+ (1/x)` growth.
    LogReciprocal,
}

impl Lemma {
    pub fn id(&self) -> &'static str {
        match self {
            Lemma::LogPlus => "gronwall/log-plus",
            Lemma::LogReciprocal => "gronwall/log-reciprocal",
        }
    }
}

/// Nonnegative coefficients `c1`, `c2` tabulated at increasing times,
/// interpolated piecewise linearly. Repeat a time to encode a jump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub times: Vec<f64>,
    pub c1: Vec<f64>,
    pub c2: Vec<f64>,
}

impl Coefficients {
    pub fn constant(c1: f64, c2: f64, horizon: f64) -> Result<Self> {
        Coefficients::new(vec![0.0, horizon], vec![c1, c1], vec![c2, c2])
    }

    /// Piecewise-constant coefficients on the intervals between `breaks`.
    pub fn piecewise_constant(breaks: &[f64], c1: &[f64], c2: &[f64]) -> Result<Self> {
        if breaks.len() != c1.len() + 1 || c1.len() != c2.len() || c1.is_empty() {
            return Err(Error::shape("piecewise-constant coefficients need one value per interval"));
        }
        let mut times = Vec::new();
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for i in 0..c1.len() {
            times.extend([breaks[i], breaks[i + 1]]);
            a.extend([c1[i], c1[i]]);
            b.extend([c2[i], c2[i]]);
        }
        Coefficients::new(times, a, b)
    }

    pub fn new(times: Vec<f64>, c1: Vec<f64>, c2: Vec<f64>) -> Result<Self> {
        if times.len() < 2 || c1.len() != times.len() || c2.len() != times.len() {
            return Err(Error::shape("coefficient tables need matching lengths >= 2"));
        }
        if times[0] != 0.0 || times.windows(2).any(|w| !(w[1] >= w[0])) || times.last() == times.first() {
            return Err(Error::domain("tabulation times must start at 0 and be nondecreasing"));
        }
        if c1.iter().chain(&c2).any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::domain("c1 and c2 must be finite and nonnegative"));
        }
        Ok(Coefficients { times, c1, c2 })
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("nonempty")
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(t >= 0.0 && t <= self.horizon()) {
            return Err(Error::domain(format!("t = {t} outside the tabulated range [0, {}]", self.horizon())));
        }
        Ok(())
    }

    /// Tabulation segments clipped to `[0, t]`, as `(t0, t1, c1(t0), c1(t1), c2(t0), c2(t1))`.
    fn segments(&self, t: f64) -> Vec<[f64; 6]> {
        let mut out = Vec::new();
        for i in 0..self.times.len() - 1 {
            let (t0, t1) = (self.times[i], self.times[i + 1]);
            if t0 >= t {
                break;
            }
            if t1 == t0 {
                continue;
            }
            let end = t1.min(t);
            let lerp = |v: &[f64], s: f64| v[i] + (v[i + 1] - v[i]) * (s - t0) / (t1 - t0);
            out.push([t0, end, self.c1[i], lerp(&self.c1, end), self.c2[i], lerp(&self.c2, end)]);
        }
        out
    }
}

/// Trapezoid integrals up to `t`: `(int c1, int c2, int c1 e^{-A})`.
fn integrals(c: &Coefficients, t: f64) -> (f64, f64, f64) {
    let (mut i1, mut a, mut weighted) = (0.0, 0.0, 0.0);
    for [t0, t1, p0, p1, q0, q1] in c.segments(t) {
        let h = t1 - t0;
        let a_next = a + 0.5 * h * (q0 + q1);
        weighted += 0.5 * h * (p0 * (-a).exp() + p1 * (-a_next).exp());
        i1 += 0.5 * h * (p0 + p1);
        a = a_next;
    }
    (i1, a, weighted)
}

/// `c0^{e^A} exp(e^A int c1 e^{-A})`, requiring `c0 >= 1`.
pub fn log_plus_bound(c0: f64, coeffs: &Coefficients, t: f64) -> Result<f64> {
    if !(c0 >= 1.0) || !c0.is_finite() {
        return Err(Error::domain(format!("log-plus bound needs c0 >= 1, got {c0}")));
    }
    coeffs.check_time(t)?;
    let (_, a, weighted) = integrals(coeffs, t);
    Ok((a.exp() * (c0.ln() + weighted)).exp())
}

/// `(c0 + c0^{e^{-A}}) e^{int (c1 + c2)}`, with `0^p = 0`.
pub fn log_reciprocal_bound(c0: f64, coeffs: &Coefficients, t: f64) -> Result<f64> {
    if !(c0 >= 0.0) || !c0.is_finite() {
        return Err(Error::domain(format!("log-reciprocal bound needs c0 >= 0, got {c0}")));
    }
    coeffs.check_time(t)?;
    let (i1, a, _) = integrals(coeffs, t);
    let power = if c0 == 0.0 { 0.0 } else { c0.powf((-a).exp()) };
    Ok((c0 + power) * (i1 + a).exp())
}

pub fn bound(lemma: Lemma, c0: f64, coeffs: &Coefficients, t: f64) -> Result<f64> {
    match lemma {
        Lemma::LogPlus => log_plus_bound(c0, coeffs, t),
        Lemma::LogReciprocal => log_reciprocal_bound(c0, coeffs, t),
    }
}

fn rhs(lemma: Lemma, c1: f64, c2: f64, y: f64) -> f64 {
    match lemma {
        Lemma::LogPlus => c1 * y + c2 * y * log_plus(y),
        Lemma::LogReciprocal => {
            let inv = if y > 0.0 { log_plus(1.0 / y) } else { 0.0 };
            (c1 + c2) * y + c2 * y * inv
        }
    }
}

/// RK4 with `per_segment` steps on each tabulation segment.
fn rk4(lemma: Lemma, c0: f64, coeffs: &Coefficients, t: f64, per_segment: usize) -> f64 {
    let mut y = c0;
    for [t0, t1, p0, p1, q0, q1] in coeffs.segments(t) {
        let h = (t1 - t0) / per_segment as f64;
        let f = |s: f64, y: f64| {
            let w = (s - t0) / (t1 - t0);
            rhs(lemma, p0 + (p1 - p0) * w, q0 + (q1 - q0) * w, y)
        };
        for k in 0..per_segment {
            let s = t0 + k as f64 * h;
            let k1 = f(s, y);
            let k2 = f(s + h / 2.0, y + h / 2.0 * k1);
            let k3 = f(s + h / 2.0, y + h / 2.0 * k2);
            let k4 = f(s + h, y + h * k3);
            y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if !y.is_finite() {
                return y;
            }
        }
    }
    y
}

/// Outcome of comparing a bound with the integrated majorant ODE.
#[derive(Clone, Debug, Serialize)]
pub struct OdeCertificate {
    pub lemma: Lemma,
    pub c0: f64,
    pub t: f64,
    pub bound: f64,
    pub ode_value: f64,
    /// RK4 steps per tabulation segment at which halving changed `y(t)` by < 1e-8 relative.
    pub steps: usize,
    pub blew_up: bool,
    pub passed: bool,
}

/// Relative slack allowed when comparing the bound with `y(t)`.
pub const ODE_TOLERANCE: f64 = 1e-6;

/// Integrates the worst-case ODE for `lemma` from `y(0) = c0` and checks
/// `bound >= y(t) (1 - 1e-6)`. Step counts double from `steps` until
/// successive solutions agree to 1e-8 relative.
pub fn certify_against_ode(lemma: Lemma, c0: f64, coeffs: &Coefficients, t: f64, steps: usize) -> Result<OdeCertificate> {
    let b = bound(lemma, c0, coeffs, t)?;
    let mut n = steps.max(1);
    let mut prev = rk4(lemma, c0, coeffs, t, n);
    let mut blew_up = !prev.is_finite();
    while !blew_up {
        n *= 2;
        let next = rk4(lemma, c0, coeffs, t, n);
        if !next.is_finite() {
            blew_up = true;
            prev = next;
            break;
        }
        let done = (next - prev).abs() <= 1e-8 * next.abs().max(f64::MIN_POSITIVE) || n >= 1 << 16;
        prev = next;
        if done {
            break;
        }
    }
    let passed = if blew_up {
        b.is_finite()
    } else {
        b >= prev * (1.0 - ODE_TOLERANCE)
    };
    Ok(OdeCertificate {
        lemma,
        c0,
        t,
        bound: b,
        ode_value: prev,
        steps: n,
        blew_up,
        passed,
    })
}

/// Random configuration: `c0` in `[1, 5]` (log-reciprocal: `[0, 5]`),
/// 1 to 5 constant pieces with `c1, c2` in `[0, 1]`, `t` in `(0, 1.5]`.
fn random_config(lemma: Lemma, seed: u64, index: u64) -> (f64, Coefficients, f64) {
    let stream = match lemma {
        Lemma::LogPlus => 201,
        Lemma::LogReciprocal => 202,
    };
    let mut rng = stream_rng(seed, stream, index);
    let c0 = match lemma {
        Lemma::LogPlus => rng.random_range(1.0..5.0),
        Lemma::LogReciprocal => {
            if rng.random::<bool>() {
                rng.random_range(0.0..1.0)
            } else {
                rng.random_range(1.0..5.0)
            }
        }
    };
    let t = rng.random_range(0.05..1.5);
    let pieces = rng.random_range(1..=5usize);
    let mut breaks: Vec<f64> = (0..pieces - 1).map(|_| rng.random_range(0.0..t)).collect();
    breaks.push(0.0);
    breaks.push(t);
    breaks.sort_by(f64::total_cmp);
    let c1: Vec<f64> = (0..pieces).map(|_| rng.random_range(0.0..1.0)).collect();
    let c2: Vec<f64> = (0..pieces).map(|_| rng.random_range(0.0..1.0)).collect();
    let coeffs = Coefficients::piecewise_constant(&breaks, &c1, &c2).expect("valid random config");
    (c0, coeffs, t)
}

fn certificate_check(c: &OdeCertificate) -> Check {
    Check {
        lhs: c.ode_value,
        rhs: c.bound,
        tolerance: ODE_TOLERANCE * c.ode_value.abs(),
        point: vec![("c0", c.c0), ("t", c.t), ("rk4_steps", c.steps as f64)],
    }
}

/// Domination over `configs` random configurations for one lemma.
pub fn domination_suite(lemma: Lemma, configs: usize, seed: u64) -> Result<InequalityReport> {
    let checks: Vec<Check> = (0..configs as u64)
        .into_par_iter()
        .map(|i| {
            let (c0, coeffs, t) = random_config(lemma, seed, i);
            certify_against_ode(lemma, c0, &coeffs, t, 16).map(|c| certificate_check(&c))
        })
        .collect::<Result<_>>()?;
    Ok(summarize(lemma.id(), checks))
}

/// Largest relative gap `|bound - y| / y` over random equality cases of the
/// log-plus bound (`c2 = 0`, where the ODE is `y' = c1 y` and the bound is exact).
pub fn equality_case_gap(configs: usize, seed: u64) -> Result<f64> {
    let gaps: Vec<f64> = (0..configs as u64)
        .into_par_iter()
        .map(|i| {
            let (c0, coeffs, t) = random_config(Lemma::LogPlus, seed ^ 0x5eed, i);
            let flat = Coefficients::new(coeffs.times.clone(), coeffs.c1.clone(), vec![0.0; coeffs.times.len()])?;
            let c = certify_against_ode(Lemma::LogPlus, c0, &flat, t, 16)?;
            Ok((c.bound - c.ode_value).abs() / c.ode_value)
        })
        .collect::<Result<_>>()?;
    Ok(gaps.into_iter().fold(0.0, f64::max))
}

/// Summary of the Gronwall checks.
#[derive(Clone, Debug, Serialize)]
pub struct GronwallSuite {
    pub reports: Vec<InequalityReport>,
    pub equality_case_max_relative_gap: f64,
}

impl GronwallSuite {
    pub fn passed(&self) -> bool {
        self.reports.iter().all(InequalityReport::passed) && self.equality_case_max_relative_gap <= ODE_TOLERANCE
    }
}

pub fn gronwall_suite(configs: usize, seed: u64) -> Result<GronwallSuite> {
    if configs == 0 {
        return Err(Error::domain("Gronwall suite needs at least one configuration"));
    }
    Ok(GronwallSuite {
        reports: vec![
            domination_suite(Lemma::LogPlus, configs, seed)?,
            domination_suite(Lemma::LogReciprocal, configs, seed)?,
        ],
        equality_case_max_relative_gap: equality_case_gap(configs, seed)?,
    })
}
