//! Drift/diffusion pairs, their hypothesis constants, the mollified
//! approximations `b_n`, `sigma_n`, and sampled checks of the hypotheses.

use std::f64::consts::{E, LN_2, PI};
use std::fmt;
use std::sync::{Arc, OnceLock};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, integrate, QuadratureOptions};
use crate::report::{summarize, Check, InequalityReport};
use crate::rng::stream_rng;
use crate::weights::log_plus;

/// Smallest `|u|` used when evaluating `log|u|` in derivatives.
pub const LOG_FLOOR: f64 = 1e-12;

type Scalar = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A scalar nonlinearity with its derivative.
#[derive(Clone)]
pub enum ScalarMap {
    /// `slope * u + intercept`
    Affine { slope: f64, intercept: f64 },
    /// `u log|u|`, extended by 0 at the origin.
    ULogU,
    /// `base + scale * atan(u)`
    Arctan { base: f64, scale: f64 },
    /// `base + scale * tanh(u)`
    Tanh { base: f64, scale: f64 },
    Mollified(Arc<MollifiedMap>),
    Custom {
        name: String,
        value: Scalar,
        derivative: Scalar,
    },
}

impl ScalarMap {
    pub fn zero() -> Self {
        ScalarMap::constant(0.0)
    }

    pub fn constant(c: f64) -> Self {
        ScalarMap::Affine {
            slope: 0.0,
            intercept: c,
        }
    }

    pub fn custom(
        name: impl Into<String>,
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        derivative: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ScalarMap::Custom {
            name: name.into(),
            value: Arc::new(value),
            derivative: Arc::new(derivative),
        }
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        match self {
            ScalarMap::Affine { slope, intercept } => slope * u + intercept,
            ScalarMap::ULogU => {
                if u == 0.0 {
                    0.0
                } else {
                    u * u.abs().ln()
                }
            }
            ScalarMap::Arctan { base, scale } => base + scale * u.atan(),
            ScalarMap::Tanh { base, scale } => base + scale * u.tanh(),
            ScalarMap::Mollified(m) => m.eval(u),
            ScalarMap::Custom { value, .. } => value(u),
        }
    }

    #[inline]
    pub fn deriv(&self, u: f64) -> f64 {
        match self {
            ScalarMap::Affine { slope, .. } => *slope,
            ScalarMap::ULogU => u.abs().max(LOG_FLOOR).ln() + 1.0,
            ScalarMap::Arctan { scale, .. } => scale / (1.0 + u * u),
            ScalarMap::Tanh { scale, .. } => {
                let t = u.tanh();
                scale * (1.0 - t * t)
            }
            ScalarMap::Mollified(m) => m.deriv(u),
            ScalarMap::Custom { derivative, .. } => derivative(u),
        }
    }

    /// Points where the map is not smooth; quadrature splits there.
    fn kinks(&self) -> &'static [f64] {
        match self {
            ScalarMap::ULogU => &[0.0],
            _ => &[],
        }
    }

    /// `sup_u |f(u)|` when known in closed form, otherwise infinity.
    pub fn sup_abs(&self) -> f64 {
        match self {
            ScalarMap::Affine { slope, intercept } if *slope == 0.0 => intercept.abs(),
            ScalarMap::Arctan { base, scale } => base.abs() + scale.abs() * PI / 2.0,
            ScalarMap::Tanh { base, scale } => base.abs() + scale.abs(),
            ScalarMap::Mollified(m) => m.base.sup_abs(),
            _ => f64::INFINITY,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ScalarMap::Affine { slope, intercept } if *slope == 0.0 && *intercept == 0.0)
    }
}

impl fmt::Display for ScalarMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarMap::Affine { slope, intercept } => write!(f, "{slope}*u + {intercept}"),
            ScalarMap::ULogU => write!(f, "u*log|u|"),
            ScalarMap::Arctan { base, scale } => write!(f, "{base} + {scale}*atan(u)"),
            ScalarMap::Tanh { base, scale } => write!(f, "{base} + {scale}*tanh(u)"),
            ScalarMap::Mollified(m) => write!(f, "mollify({}, n={})", m.base, m.n),
            ScalarMap::Custom { name, .. } => write!(f, "{name}"),
        }
    }
}

impl fmt::Debug for ScalarMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarMap({self})")
    }
}

const MOLLIFIER_NODES: usize = 48;

fn bump(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - s * s)).exp()
    }
}

struct MollifierTables {
    /// `1 / int bump`
    scale: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

fn tables() -> &'static MollifierTables {
    static T: OnceLock<MollifierTables> = OnceLock::new();
    T.get_or_init(|| {
        let mass = integrate(
            bump,
            -1.0,
            1.0,
            QuadratureOptions {
                abs_tol: 1e-15,
                rel_tol: 1e-15,
                max_intervals: 4000,
            },
        )
        .expect("bump integral converges");
        let (nodes, weights) = gauss_legendre(MOLLIFIER_NODES);
        MollifierTables {
            scale: 1.0 / mass.value,
            nodes,
            weights,
        }
    })
}

/// The mollifier `phi = C exp(-1/(1 - x^2))` on `(-1, 1)`, `int phi = 1`.
pub fn mollifier(s: f64) -> f64 {
    bump(s) * tables().scale
}

/// `int_a^b f(s) phi(s) ds` by Gauss–Legendre on `[a, b]`.
fn against_phi(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let t = tables();
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    let mut acc = 0.0;
    for (x, w) in t.nodes.iter().zip(&t.weights) {
        let s = mid + half * x;
        acc += w * bump(s) * f(s);
    }
    acc * half * t.scale
}

/// `S(z) = int_{-1}^{2z-1} phi`, rising from 0 at `z = 0` to 1 at `z = 1`.
fn smoothstep(z: f64) -> f64 {
    if z <= 0.0 {
        0.0
    } else if z >= 1.0 {
        1.0
    } else {
        against_phi(-1.0, 2.0 * z - 1.0, |_| 1.0)
    }
}

/// Radial cutoff: 1 on `[-n, n]`, 0 outside `(-(n+2), n+2)`.
pub fn cutoff(n: f64, x: f64) -> f64 {
    smoothstep((n + 2.0 - x.abs()) / 2.0)
}

fn cutoff_deriv(n: f64, x: f64) -> f64 {
    let z = (n + 2.0 - x.abs()) / 2.0;
    if z <= 0.0 || z >= 1.0 {
        return 0.0;
    }
    -x.signum() * mollifier(2.0 * z - 1.0)
}

/// `x -> eta_n(x) n int f(y) phi(n (x - y)) dy`.
pub struct MollifiedMap {
    pub base: ScalarMap,
    pub n: u32,
}

impl MollifiedMap {
    fn convolve(&self, x: f64, f: impl Fn(f64) -> f64) -> f64 {
        self.convolve_weighted(x, |_| 1.0, f)
    }

    /// `int f(x - s/n) w(s) phi(s) ds`, split at the kinks of the base map.
    fn convolve_weighted(&self, x: f64, w: impl Fn(f64) -> f64, f: impl Fn(f64) -> f64) -> f64 {
        let n = self.n as f64;
        let mut breaks = vec![-1.0];
        for &k in self.base.kinks() {
            let s = n * (x - k);
            if s > -1.0 && s < 1.0 {
                breaks.push(s);
            }
        }
        breaks.push(1.0);
        breaks.sort_by(f64::total_cmp);
        breaks
            .windows(2)
            .map(|p| against_phi(p[0], p[1], |s| w(s) * f(x - s / n)))
            .sum()
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.n as f64;
        if x.abs() >= n + 2.0 {
            return 0.0;
        }
        let eta = cutoff(n, x);
        if eta == 0.0 {
            return 0.0;
        }
        eta * self.convolve(x, |y| self.base.eval(y))
    }

    pub fn deriv(&self, x: f64) -> f64 {
        let n = self.n as f64;
        if x.abs() >= n + 2.0 {
            return 0.0;
        }
        let eta = cutoff(n, x);
        let d_eta = cutoff_deriv(n, x);
        let mut out = 0.0;
        if eta != 0.0 {
            // Differentiate the mollifier rather than b: b' may be singular at a kink.
            let conv = self.convolve_weighted(x, |s| -2.0 * s / (1.0 - s * s).powi(2), |y| self.base.eval(y));
            out += eta * n * conv;
        }
        if d_eta != 0.0 {
            out += d_eta * self.convolve(x, |y| self.base.eval(y));
        }
        out
    }
}

/// The `n`-th mollified approximation of `f`.
pub fn mollify(f: &ScalarMap, n: u32) -> Result<ScalarMap> {
    if n == 0 {
        return Err(Error::domain("mollification index must be >= 1"));
    }
    Ok(ScalarMap::Mollified(Arc::new(MollifiedMap { base: f.clone(), n })))
}

/// Constants of the log-Lipschitz hypotheses.
///
/// `|b(u)| <= c1 |u| log_+|u| + c2`,
/// `|b(u) - b(v)| <= c3 |u-v| log_+(1/|u-v|) + c4 log_+(|u| v |v|) |u-v| + c5 |u-v|`,
/// `|sigma| <= k_sigma`, `|sigma(u) - sigma(v)| <= l_sigma |u - v|`, and
/// `l_b` is the affine part of the mollified growth bound
/// `|b_n(x)| <= c1 |x| log_+|x| + l_b (|x| + 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct H1Constants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub l_sigma: f64,
    pub k_sigma: f64,
    pub l_b: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum Regime {
    /// `|b(u) - b(v)| + |sigma(u) - sigma(v)| <= lipschitz |u - v|`.
    H0Lipschitz { lipschitz: f64 },
    H1LogLipschitz(H1Constants),
}

impl Regime {
    /// Constant playing the role of the drift growth rate in `beta(kappa, lambda)`.
    pub fn growth_constant(&self) -> f64 {
        match self {
            Regime::H0Lipschitz { lipschitz } => *lipschitz,
            Regime::H1LogLipschitz(c) => c.c1.max(c.c4),
        }
    }

    /// Every constant must be finite and nonnegative.
    pub fn validate(&self) -> Result<()> {
        let named: Vec<(&str, f64)> = match self {
            Regime::H0Lipschitz { lipschitz } => vec![("lipschitz", *lipschitz)],
            Regime::H1LogLipschitz(c) => vec![
                ("c1", c.c1),
                ("c2", c.c2),
                ("c3", c.c3),
                ("c4", c.c4),
                ("c5", c.c5),
                ("l_sigma", c.l_sigma),
                ("k_sigma", c.k_sigma),
                ("l_b", c.l_b),
            ],
        };
        match named.into_iter().find(|(_, v)| !(v.is_finite() && *v >= 0.0)) {
            Some((name, v)) => Err(Error::domain(format!("regime constant {name} must be finite and >= 0, got {v}"))),
            None => Ok(()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CoefficientSet {
    pub name: String,
    pub drift: ScalarMap,
    pub diffusion: ScalarMap,
    pub regime: Regime,
}

/// Serializable description of a [`CoefficientSet`].
#[derive(Clone, Debug, Serialize)]
pub struct CoefficientSummary {
    pub name: String,
    pub drift: String,
    pub diffusion: String,
    #[serde(flatten)]
    pub regime: Regime,
}

impl CoefficientSet {
    pub fn summary(&self) -> CoefficientSummary {
        CoefficientSummary {
            name: self.name.clone(),
            drift: self.drift.to_string(),
            diffusion: self.diffusion.to_string(),
            regime: self.regime,
        }
    }

    pub fn is_lipschitz(&self) -> bool {
        matches!(self.regime, Regime::H0Lipschitz { .. })
    }

    /// `(b_n, sigma_n)`; each is globally Lipschitz.
    pub fn mollified(&self, n: u32) -> Result<CoefficientSet> {
        Ok(CoefficientSet {
            name: format!("{}@n={n}", self.name),
            drift: mollify(&self.drift, n)?,
            diffusion: mollify(&self.diffusion, n)?,
            regime: self.regime,
        })
    }
}

pub const BUILTIN_NAMES: [&str; 4] = ["ulogu_bounded_sigma", "linear", "zero_drift_unit_sigma", "lipschitz_tanh"];

/// Frozen affine constant of the mollified growth bound for `u log|u|`;
/// the fitted value over `n in {1,...,128}` is about 0.268.
const ULOGU_L_B: f64 = 0.28;

/// Built-in coefficient sets.
///
/// * `ulogu_bounded_sigma`: `b = u log|u|`, `sigma = 1 + atan(u)/4`.
/// * `linear`: `b = -u/2`, `sigma = 1`.
/// * `zero_drift_unit_sigma`: `b = 0`, `sigma = 1`.
/// * `lipschitz_tanh`: `b = tanh u`, `sigma = 1 + tanh(u)/2`.
pub fn builtin(name: &str) -> Result<CoefficientSet> {
    let unit = ScalarMap::constant(1.0);
    let set = match name {
        "ulogu_bounded_sigma" => CoefficientSet {
            name: name.into(),
            drift: ScalarMap::ULogU,
            diffusion: ScalarMap::Arctan { base: 1.0, scale: 0.25 },
            regime: Regime::H1LogLipschitz(H1Constants {
                c1: 1.0,
                c2: 1.0 / E,
                c3: 1.0,
                c4: 1.0,
                c5: 1.0 + LN_2,
                l_sigma: 0.25,
                k_sigma: 1.0 + PI / 8.0,
                l_b: ULOGU_L_B,
            }),
        },
        "linear" => CoefficientSet {
            name: name.into(),
            drift: ScalarMap::Affine {
                slope: -0.5,
                intercept: 0.0,
            },
            diffusion: unit,
            regime: Regime::H0Lipschitz { lipschitz: 0.5 },
        },
        "zero_drift_unit_sigma" => CoefficientSet {
            name: name.into(),
            drift: ScalarMap::zero(),
            diffusion: unit,
            regime: Regime::H0Lipschitz { lipschitz: 0.0 },
        },
        "lipschitz_tanh" => CoefficientSet {
            name: name.into(),
            drift: ScalarMap::Tanh { base: 0.0, scale: 1.0 },
            diffusion: ScalarMap::Tanh { base: 1.0, scale: 0.5 },
            regime: Regime::H0Lipschitz { lipschitz: 1.5 },
        },
        _ => return Err(Error::UnknownCoefficients(name.into())),
    };
    Ok(set)
}

// Sampling: |u| log-uniform on [1e-6, 1e3] with random sign, plus points
// clustered around 0 and +-1 where log_+ switches branches.
const U_MIN: f64 = 1e-6;
const U_MAX: f64 = 1e3;

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.random::<f64>() * (hi / lo).ln()).exp()
}

fn signed(rng: &mut ChaCha8Rng, m: f64) -> f64 {
    if rng.random::<bool>() {
        m
    } else {
        -m
    }
}

fn sample_point(rng: &mut ChaCha8Rng) -> f64 {
    if rng.random::<f64>() < 0.25 {
        let centre = [0.0, 1.0, -1.0][rng.random_range(0..3)];
        let m = log_uniform(rng, 1e-9, 1e-1);
        centre + signed(rng, m)
    } else {
        let m = log_uniform(rng, U_MIN, U_MAX);
        signed(rng, m)
    }
}

fn sample_pair(rng: &mut ChaCha8Rng) -> (f64, f64) {
    match rng.random_range(0..3) {
        0 => (sample_point(rng), sample_point(rng)),
        1 => {
            let u = sample_point(rng);
            let m = log_uniform(rng, 1e-10, 1.0);
            (u, u + signed(rng, m))
        }
        _ => {
            // Mesh near 0 and +-1, both points in the same cluster.
            let centre = [0.0, 1.0, -1.0][rng.random_range(0..3)];
            let h = 1e-2;
            (
                centre + h * (2.0 * rng.random::<f64>() - 1.0),
                centre + h * (2.0 * rng.random::<f64>() - 1.0),
            )
        }
    }
}

fn sampled<F>(id: &str, count: usize, seed: u64, stream: u64, f: F) -> InequalityReport
where
    F: Fn(&mut ChaCha8Rng) -> Check + Sync,
{
    let checks: Vec<Check> = (0..count as u64)
        .into_par_iter()
        .map(|i| f(&mut stream_rng(seed, stream, i)))
        .collect();
    summarize(id, checks)
}

fn roundoff(a: f64, b: f64) -> f64 {
    64.0 * f64::EPSILON * (a.abs() + b.abs()) + f64::MIN_POSITIVE
}

/// Sampled check of `|b(u)| <= c1 |u| log_+|u| + c2`.
pub fn verify_h1_growth(b: &ScalarMap, c1: f64, c2: f64, samples: usize, seed: u64) -> InequalityReport {
    sampled("hypotheses/h1-growth", samples, seed, 101, |rng| {
        let u = sample_point(rng);
        let bu = b.eval(u);
        Check {
            lhs: bu.abs(),
            rhs: c1 * u.abs() * log_plus(u.abs()) + c2,
            tolerance: roundoff(bu, 0.0),
            point: vec![("u", u)],
        }
    })
}

/// Sampled check of the log-Lipschitz modulus.
pub fn verify_h1_log_lipschitz(b: &ScalarMap, c3: f64, c4: f64, c5: f64, pairs: usize, seed: u64) -> InequalityReport {
    sampled("hypotheses/h1-log-lipschitz", pairs, seed, 102, |rng| {
        let (u, v) = sample_pair(rng);
        let (bu, bv) = (b.eval(u), b.eval(v));
        let d = (u - v).abs();
        let rhs = if d == 0.0 {
            0.0
        } else {
            c3 * d * log_plus(1.0 / d) + c4 * log_plus(u.abs().max(v.abs())) * d + c5 * d
        };
        Check {
            lhs: (bu - bv).abs(),
            rhs,
            tolerance: roundoff(bu, bv),
            point: vec![("u", u), ("v", v)],
        }
    })
}

/// Sampled check of `|sigma| <= k_sigma` and `|sigma(u) - sigma(v)| <= l_sigma |u - v|`.
pub fn verify_h1_diffusion(sigma: &ScalarMap, k_sigma: f64, l_sigma: f64, samples: usize, seed: u64) -> Vec<InequalityReport> {
    let bound = sampled("hypotheses/h1-sigma-bound", samples, seed, 103, |rng| {
        let u = sample_point(rng);
        let s = sigma.eval(u);
        Check {
            lhs: s.abs(),
            rhs: k_sigma,
            tolerance: roundoff(s, 0.0),
            point: vec![("u", u)],
        }
    });
    let lip = sampled("hypotheses/h1-sigma-lipschitz", samples, seed, 104, |rng| {
        let (u, v) = sample_pair(rng);
        let (su, sv) = (sigma.eval(u), sigma.eval(v));
        Check {
            lhs: (su - sv).abs(),
            rhs: l_sigma * (u - v).abs(),
            tolerance: roundoff(su, sv),
            point: vec![("u", u), ("v", v)],
        }
    });
    vec![bound, lip]
}

/// Sampled check of the joint Lipschitz condition of the H0 regime.
pub fn verify_h0_lipschitz(set: &CoefficientSet, lipschitz: f64, pairs: usize, seed: u64) -> InequalityReport {
    sampled("hypotheses/h0-lipschitz", pairs, seed, 105, |rng| {
        let (u, v) = sample_pair(rng);
        let (bu, bv) = (set.drift.eval(u), set.drift.eval(v));
        let (su, sv) = (set.diffusion.eval(u), set.diffusion.eval(v));
        Check {
            lhs: (bu - bv).abs() + (su - sv).abs(),
            rhs: lipschitz * (u - v).abs(),
            tolerance: roundoff(bu, bv) + roundoff(su, sv),
            point: vec![("u", u), ("v", v)],
        }
    })
}

/// Result of [`verify_mollified_bounds`].
#[derive(Clone, Debug, Serialize)]
pub struct MollifiedBoundsReport {
    /// `max_n max_x (|b_n(x)| - c1 |x| log_+|x|) / (|x| + 1)` over a dense grid.
    pub fitted_l_b: f64,
    /// The frozen constant the sampled checks use.
    pub frozen_l_b: f64,
    pub n_list: Vec<u32>,
    pub reports: Vec<InequalityReport>,
}

impl MollifiedBoundsReport {
    pub fn passed(&self) -> bool {
        self.fitted_l_b.is_finite() && self.reports.iter().all(InequalityReport::passed)
    }
}

/// Dense-grid fit of the affine constant in the growth bound of `b_n`.
pub fn fit_mollified_l_b(b: &ScalarMap, c1: f64, n_list: &[u32]) -> Result<f64> {
    let fits: Vec<f64> = n_list
        .par_iter()
        .map(|&n| -> Result<f64> {
            let bn = mollify(b, n)?;
            let reach = n as f64 + 2.0;
            let points = 4000;
            Ok((0..=points)
                .map(|i| -reach + 2.0 * reach * i as f64 / points as f64)
                .chain((0..=400).map(|i| -2.0 + i as f64 * 0.01))
                .map(|x| (bn.eval(x).abs() - c1 * x.abs() * log_plus(x.abs())) / (x.abs() + 1.0))
                .fold(0.0, f64::max))
        })
        .collect::<Result<_>>()?;
    Ok(fits.into_iter().fold(0.0, f64::max))
}

/// Checks the growth bound of `b_n` with a frozen `l_b`, and `|sigma_n| <= k_sigma`,
/// uniformly over `n_list` and sampled `x`.
///
/// `l_b` comes from the H1 constants when present; otherwise the fitted
/// value is frozen.
pub fn verify_mollified_bounds(set: &CoefficientSet, n_list: &[u32], samples: usize, seed: u64) -> Result<MollifiedBoundsReport> {
    if n_list.is_empty() {
        return Err(Error::domain("mollified bound check needs a nonempty n list"));
    }
    let (c1, k_sigma, frozen) = match set.regime {
        Regime::H1LogLipschitz(c) => (c.c1, c.k_sigma, Some(c.l_b)),
        // Lipschitz drifts grow at most linearly: c1 = 0 and l_b is fitted.
        Regime::H0Lipschitz { .. } => (0.0, set.diffusion.sup_abs(), None),
    };
    let fitted = fit_mollified_l_b(&set.drift, c1, n_list)?;
    let l_b = frozen.unwrap_or(fitted);
    let drifts: Vec<ScalarMap> = n_list.iter().map(|&n| mollify(&set.drift, n)).collect::<Result<_>>()?;
    let sigmas: Vec<ScalarMap> = n_list.iter().map(|&n| mollify(&set.diffusion, n)).collect::<Result<_>>()?;
    let span = n_list.iter().copied().max().unwrap_or(1) as f64 + 3.0;
    let draw_x = |rng: &mut ChaCha8Rng| {
        if rng.random::<f64>() < 0.5 {
            span * (2.0 * rng.random::<f64>() - 1.0)
        } else {
            sample_point(rng).clamp(-span, span)
        }
    };
    let growth = sampled("hypotheses/mollified-drift-growth", samples, seed, 106, |rng| {
        let i = rng.random_range(0..drifts.len());
        let x = draw_x(rng);
        let v = drifts[i].eval(x);
        Check {
            lhs: v.abs(),
            rhs: c1 * x.abs() * log_plus(x.abs()) + l_b * (x.abs() + 1.0),
            tolerance: roundoff(v, 0.0) + 1e-9,
            point: vec![("n", n_list[i] as f64), ("x", x)],
        }
    });
    let bounded = sampled("hypotheses/mollified-sigma-bound", samples, seed, 107, |rng| {
        let i = rng.random_range(0..sigmas.len());
        let x = draw_x(rng);
        let v = sigmas[i].eval(x);
        Check {
            lhs: v.abs(),
            rhs: k_sigma,
            tolerance: roundoff(v, 0.0) + 1e-9,
            point: vec![("n", n_list[i] as f64), ("x", x)],
        }
    });
    Ok(MollifiedBoundsReport {
        fitted_l_b: fitted,
        frozen_l_b: l_b,
        n_list: n_list.to_vec(),
        reports: vec![growth, bounded],
    })
}

/// Every hypothesis check that applies to `set`'s regime.
pub fn hypothesis_suite(set: &CoefficientSet, samples: usize, seed: u64) -> Result<Vec<InequalityReport>> {
    Ok(match set.regime {
        Regime::H0Lipschitz { lipschitz } => vec![verify_h0_lipschitz(set, lipschitz, samples, seed)],
        Regime::H1LogLipschitz(c) => {
            let mut out = vec![
                verify_h1_growth(&set.drift, c.c1, c.c2, samples, seed),
                verify_h1_log_lipschitz(&set.drift, c.c3, c.c4, c.c5, samples, seed),
            ];
            out.extend(verify_h1_diffusion(&set.diffusion, c.k_sigma, c.l_sigma, samples, seed));
            let m = verify_mollified_bounds(set, &[1, 2, 4, 8, 16, 32, 64, 128], samples.min(20_000), seed)?;
            out.extend(m.reports);
            out
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mollifier_normalized() {
        let m = integrate(mollifier, -1.0, 1.0, QuadratureOptions::default()).unwrap();
        assert!((m.value - 1.0).abs() < 1e-12);
        assert_eq!(mollifier(1.0), 0.0);
        assert_eq!(mollifier(-1.5), 0.0);
    }

    #[test]
    fn cutoff_profile() {
        for n in [1.0, 8.0, 64.0] {
            assert_eq!(cutoff(n, 0.0), 1.0);
            assert_eq!(cutoff(n, n), 1.0);
            assert_eq!(cutoff(n, -n), 1.0);
            assert_eq!(cutoff(n, n + 2.0), 0.0);
            assert!((cutoff(n, n + 1.0) - 0.5).abs() < 1e-12);
            let mut prev = 1.0;
            for i in 0..=40 {
                let v = cutoff(n, n + i as f64 * 0.05);
                assert!(v <= prev + 1e-15);
                prev = v;
            }
        }
    }

    #[test]
    fn mollify_preserves_affine_inside_cutoff() {
        let f = ScalarMap::Affine { slope: 1.7, intercept: -0.4 };
        for n in [1u32, 4, 16] {
            let g = mollify(&f, n).unwrap();
            for i in 0..=50 {
                let x = -(n as f64) + 2.0 * n as f64 * i as f64 / 50.0;
                assert!((g.eval(x) - f.eval(x)).abs() < 1e-8, "n={n} x={x}");
            }
        }
    }

    #[test]
    fn mollified_vanishes_outside_support() {
        let g = mollify(&ScalarMap::ULogU, 3).unwrap();
        assert_eq!(g.eval(5.0), 0.0);
        assert_eq!(g.eval(-7.5), 0.0);
        assert_eq!(g.deriv(5.0), 0.0);
    }

    #[test]
    fn mollified_ulogu_converges_along_sequences() {
        let b = ScalarMap::ULogU;
        for x in [0.0, 0.3, -1.0, 2.5] {
            let mut prev = f64::INFINITY;
            for n in [4u32, 16, 64, 256] {
                let xn = x + 1.0 / n as f64;
                let err = (mollify(&b, n).unwrap().eval(xn) - b.eval(x)).abs();
                assert!(err < prev, "x={x} n={n}");
                prev = err;
            }
            assert!(prev < 0.03, "x={x}: {prev}");
        }
    }

    #[test]
    fn mollified_derivative_matches_difference_quotient() {
        let g = mollify(&ScalarMap::ULogU, 4).unwrap();
        for x in [-5.3, -0.1, 0.05, 0.7, 4.5] {
            let h = 1e-5;
            let fd = (g.eval(x + h) - g.eval(x - h)) / (2.0 * h);
            assert!((fd - g.deriv(x)).abs() < 1e-5 * (1.0 + fd.abs()), "x={x}: {fd} vs {}", g.deriv(x));
        }
    }

    #[test]
    fn mollified_is_lipschitz() {
        for n in [2u32, 8] {
            let g = mollify(&ScalarMap::ULogU, n).unwrap();
            let xs: Vec<f64> = (0..=2000).map(|i| -(n as f64 + 3.0) + i as f64 * (2.0 * n as f64 + 6.0) / 2000.0).collect();
            let q = xs
                .windows(2)
                .map(|w| ((g.eval(w[1]) - g.eval(w[0])) / (w[1] - w[0])).abs())
                .fold(0.0, f64::max);
            assert!(q.is_finite() && q < 10.0 + (n as f64).ln() * 4.0, "n={n}: {q}");
        }
    }

    #[test]
    fn builtins_resolve() {
        for name in BUILTIN_NAMES {
            assert_eq!(builtin(name).unwrap().name, name);
        }
        assert!(matches!(builtin("nope"), Err(Error::UnknownCoefficients(_))));
        let z = builtin("zero_drift_unit_sigma").unwrap();
        assert_eq!(z.regime, Regime::H0Lipschitz { lipschitz: 0.0 });
        assert_eq!(z.diffusion.eval(3.0), 1.0);
        assert!(z.drift.is_zero());
        let u = builtin("ulogu_bounded_sigma").unwrap();
        assert_eq!(u.drift.eval(0.0), 0.0);
        assert!((u.drift.eval(E) - E).abs() < 1e-15);
    }

    #[test]
    fn regime_constants_must_be_nonnegative() {
        for name in BUILTIN_NAMES {
            builtin(name).unwrap().regime.validate().unwrap();
        }
        assert!(Regime::H0Lipschitz { lipschitz: -1.0 }.validate().is_err());
        assert!(Regime::H0Lipschitz { lipschitz: f64::NAN }.validate().is_err());
        let Regime::H1LogLipschitz(mut c) = builtin("ulogu_bounded_sigma").unwrap().regime else { unreachable!() };
        c.c3 = -0.5;
        assert!(Regime::H1LogLipschitz(c).validate().is_err());
    }

    #[test]
    fn growth_checks() {
        let r = verify_h1_growth(&ScalarMap::ULogU, 1.0, 1.0 / E, 20_000, 1);
        assert!(r.passed(), "{r:?}");
        let r = verify_h1_growth(&ScalarMap::zero(), 0.0, 0.0, 1000, 1);
        assert!(r.passed());
        let sq = ScalarMap::custom("u^2", |u| u * u, |u| 2.0 * u);
        assert!(verify_h1_growth(&sq, 1.0, 1.0, 5000, 1).violations > 0);
    }

    #[test]
    fn log_lipschitz_checks() {
        let r = verify_h1_log_lipschitz(&ScalarMap::ULogU, 1.0, 1.0, 1.0 + LN_2, 20_000, 2);
        assert!(r.passed(), "{r:?}");
        let t = ScalarMap::Tanh { base: 0.0, scale: 1.0 };
        assert!(verify_h1_log_lipschitz(&t, 0.0, 0.0, 1.0, 20_000, 2).passed());
        // u log u is not Lipschitz near 0.
        assert!(verify_h1_log_lipschitz(&ScalarMap::ULogU, 0.0, 0.0, 1.0 + LN_2, 20_000, 2).violations > 0);
    }

    #[test]
    fn h0_builtins_pass_lipschitz() {
        for name in ["linear", "zero_drift_unit_sigma", "lipschitz_tanh"] {
            let set = builtin(name).unwrap();
            let Regime::H0Lipschitz { lipschitz } = set.regime else { unreachable!() };
            assert!(verify_h0_lipschitz(&set, lipschitz, 20_000, 3).passed(), "{name}");
        }
    }

    #[test]
    fn diffusion_bounds_for_ulogu_set() {
        let set = builtin("ulogu_bounded_sigma").unwrap();
        let Regime::H1LogLipschitz(c) = set.regime else { unreachable!() };
        for r in verify_h1_diffusion(&set.diffusion, c.k_sigma, c.l_sigma, 20_000, 4) {
            assert!(r.passed(), "{r:?}");
        }
    }

    #[test]
    fn mollified_bounds_for_ulogu() {
        let set = builtin("ulogu_bounded_sigma").unwrap();
        let r = verify_mollified_bounds(&set, &[1, 4, 16, 64], 4000, 5).unwrap();
        assert!(r.passed(), "{r:?}");
        assert!(r.fitted_l_b <= r.frozen_l_b);
        assert!(r.fitted_l_b > 0.1);
    }

    #[test]
    fn mollified_bounds_zero_drift() {
        let set = builtin("zero_drift_unit_sigma").unwrap();
        let r = verify_mollified_bounds(&set, &[1, 8], 1000, 6).unwrap();
        assert_eq!(r.fitted_l_b, 0.0);
        assert!(r.passed(), "{r:?}");
    }

    proptest! {
        #[test]
        fn log_lipschitz_holds_on_diagonal(u in -1e3f64..1e3) {
            let b = ScalarMap::ULogU;
            prop_assert_eq!((b.eval(u) - b.eval(u)).abs(), 0.0);
        }

        #[test]
        fn fitted_l_b_is_stable_in_n(n in 1u32..96) {
            let a = fit_mollified_l_b(&ScalarMap::ULogU, 1.0, &[n]).unwrap();
            prop_assert!(a <= ULOGU_L_B, "n={} fit={}", n, a);
        }
    }
}
