//! Monte Carlo checks of the large-deviation behaviour: endpoint tail
//! probabilities (plain and tilted), and the two weak-convergence claims for
//! oscillating controls and vanishing noise.

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::coefficients::CoefficientSet;
use crate::control::ControlField;
use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec};
use crate::noise::continuum_variance;
use crate::rate::EndpointConstraint;
use crate::rng::derive_seed;
use crate::scheme::{ForcingFilter, Stepper};
use crate::skeleton::skeleton_path;
use crate::spde::{drive, ensemble, least_squares_slope, Noise, SolveConfig};
use crate::weights::{MetricWeights, DEFAULT_METRIC_TERMS};

/// Below this effective sample size an estimate carries a warning.
pub const MIN_EFFECTIVE_SAMPLES: f64 = 10.0;

/// `z_{0.975}`.
const Z95: f64 = 1.959963984540054;

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ProbabilityEstimate {
    pub p: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub samples: usize,
    /// `(sum w)^2 / sum w^2` over the estimator's terms.
    pub effective_samples: f64,
    pub tilted: bool,
    pub warning: Option<String>,
}

/// `P(u^eps(T, x0) > a)`, by plain Monte Carlo or, given a tilt `h`, by
/// simulating the controlled equation and reweighting each sample with
/// `exp(-sum h dW / sqrt(eps) - sum h^2 dt dx / (2 eps))`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_probability(
    event: &EndpointConstraint,
    coeffs: &CoefficientSet,
    u0: &Field,
    eps: f64,
    samples: usize,
    tilt: Option<&ControlField>,
    seed: u64,
) -> Result<ProbabilityEstimate> {
    if samples < 100 {
        return Err(Error::domain(format!("probability estimates need at least 100 samples, got {samples}")));
    }
    if !(eps > 0.0) {
        return Err(Error::domain(format!("noise intensity must be > 0, got {eps}")));
    }
    let g = u0.grid;
    check_event(event, &g)?;
    let node = g.index_of(event.x0);
    let mut cfg = SolveConfig::new(coeffs.clone(), g, eps).with_u0(u0.clone()).with_seed(seed, 0);
    cfg.control = tilt.cloned();
    let terms = ensemble(&cfg, samples, |end| {
        if end.last[node] > event.a {
            end.log_weight.exp()
        } else {
            0.0
        }
    })?;
    Ok(summarize_terms(&terms, tilt.is_some()))
}

fn check_event(event: &EndpointConstraint, g: &GridSpec) -> Result<()> {
    if (event.t - g.final_time).abs() > 1e-12 * g.final_time.max(1.0) {
        return Err(Error::domain(format!("event time {} differs from the grid horizon {}", event.t, g.final_time)));
    }
    if !(event.x0.abs() <= g.half_width) {
        return Err(Error::domain(format!("x0 = {} lies outside the window", event.x0)));
    }
    Ok(())
}

fn summarize_terms(terms: &[f64], tilted: bool) -> ProbabilityEstimate {
    let n = terms.len() as f64;
    let p = terms.iter().sum::<f64>() / n;
    let var = terms.iter().map(|t| (t - p).powi(2)).sum::<f64>() / (n - 1.0);
    let std_error = (var / n).sqrt();
    let s1: f64 = terms.iter().sum();
    let s2: f64 = terms.iter().map(|t| t * t).sum();
    let effective_samples = if s2 > 0.0 { s1 * s1 / s2 } else { 0.0 };
    let warning = (effective_samples < MIN_EFFECTIVE_SAMPLES).then(|| {
        format!("effective sample size {effective_samples:.1} below {MIN_EFFECTIVE_SAMPLES}; estimate unreliable")
    });
    ProbabilityEstimate {
        p,
        std_error,
        ci_low: (p - Z95 * std_error).max(0.0),
        ci_high: p + Z95 * std_error,
        samples: terms.len(),
        effective_samples,
        tilted,
        warning,
    }
}

/// `1 - Phi(a / sqrt(eps sqrt(T/pi)))`: the endpoint tail for `b = 0`, `sigma = 1`, `u0 = 0`.
pub fn linear_tail_probability(a: f64, eps: f64, t: f64) -> f64 {
    let sd = (eps * continuum_variance(t)).sqrt();
    Normal::new(0.0, sd).expect("positive standard deviation").sf(a)
}

pub const DEFAULT_EPS_GRID: [f64; 7] = [1.0, 0.5, 0.2, 0.1, 0.05, 0.02, 0.01];

/// Noise levels at or above this use plain Monte Carlo in [`ldp_curve`].
pub const PLAIN_MC_MIN_EPS: f64 = 0.2;

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct LdpRow {
    pub eps: f64,
    #[serde(flatten)]
    pub estimate: ProbabilityEstimate,
    pub eps_log_p: f64,
    pub minus_rate: f64,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct LdpCurve {
    pub event: EndpointConstraint,
    pub rate: f64,
    pub rows: Vec<LdpRow>,
}

impl LdpCurve {
    /// Relative distance of the last row's `eps log p` from `-I`.
    pub fn final_relative_gap(&self) -> Option<f64> {
        let last = self.rows.last()?;
        Some(((last.eps_log_p - last.minus_rate) / last.minus_rate).abs())
    }
}

/// `eps log p(eps)` against `-I` over `eps_list`. `tilt` is the minimizing
/// control of the rate problem and `rate` its energy; levels below
/// [`PLAIN_MC_MIN_EPS`] are estimated with the tilt.
#[allow(clippy::too_many_arguments)]
pub fn ldp_curve(
    event: &EndpointConstraint,
    coeffs: &CoefficientSet,
    u0: &Field,
    eps_list: &[f64],
    samples: usize,
    tilt: &ControlField,
    rate: f64,
    seed: u64,
) -> Result<LdpCurve> {
    let mut rows = Vec::with_capacity(eps_list.len());
    for (i, &eps) in eps_list.iter().enumerate() {
        let use_tilt = (eps < PLAIN_MC_MIN_EPS).then_some(tilt);
        let estimate = estimate_probability(event, coeffs, u0, eps, samples, use_tilt, derive_seed(seed, i as u64))?;
        rows.push(LdpRow {
            eps,
            eps_log_p: eps * estimate.p.ln(),
            minus_rate: -rate,
            estimate,
        });
    }
    Ok(LdpCurve { event: *event, rate, rows })
}

/// Weakly null perturbation `sin(m x) g(x)` with `g = amplitude * 1_{x >= 0} e^{-x/4}`.
/// The edge at `x = 0` makes the response decay like `1/m`.
pub fn oscillating_control(grid: GridSpec, m: f64, amplitude: f64) -> ControlField {
    ControlField::from_fn(grid, |_, x| if x >= 0.0 { amplitude * (m * x).sin() * (-x / 4.0).exp() } else { 0.0 })
}

pub const DEFAULT_M_LIST: [u32; 7] = [1, 2, 4, 8, 16, 32, 64];

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct C1Row {
    pub m: u32,
    pub distance: f64,
    pub energy: f64,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct C1Table {
    pub coefficients: String,
    pub amplitude: f64,
    pub rows: Vec<C1Row>,
    /// Last distance over the first.
    pub final_ratio: f64,
    pub passed: bool,
}

/// `d~(Y^{h_m}, Y^h)` for `h_m = h + sin(m x) g`. Passes when the last
/// distance is below 5% of the first and strictly below it.
pub fn c1_experiment(coeffs: &CoefficientSet, u0: &Field, h: &ControlField, m_list: &[u32], amplitude: f64) -> Result<C1Table> {
    if m_list.len() < 2 {
        return Err(Error::domain("C1 needs at least two frequencies"));
    }
    let g = u0.grid;
    let filter = ForcingFilter::default();
    let base = skeleton_path(coeffs, u0, h, filter)?;
    let weights = MetricWeights::new(&g, DEFAULT_METRIC_TERMS)?;
    let rows: Vec<C1Row> = m_list
        .par_iter()
        .map(|&m| {
            let hm = h.add(&oscillating_control(g, m as f64, amplitude))?;
            let y = skeleton_path(coeffs, u0, &hm, filter)?;
            let distance = (0..y.rows()).fold(0.0f64, |d, k| d.max(weights.distance(y.row(k), base.row(k))));
            Ok(C1Row {
                m,
                distance,
                energy: hm.energy(),
            })
        })
        .collect::<Result<_>>()?;
    let first = rows[0].distance;
    let last = rows[rows.len() - 1].distance;
    let final_ratio = if first > 0.0 { last / first } else { 0.0 };
    Ok(C1Table {
        coefficients: coeffs.name.clone(),
        amplitude,
        passed: first > 0.0 && last < first && final_ratio < 0.05,
        final_ratio,
        rows,
    })
}

pub const DEFAULT_C2_EPS: [f64; 6] = [0.05, 0.02, 0.01, 0.005, 0.002, 0.001];

/// Exceedance level for C2, in units of `d~`.
pub const DEFAULT_C2_DELTA: f64 = 0.05;

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct C2Row {
    pub eps: f64,
    pub mean_distance: f64,
    pub std_error: f64,
    pub exceedance: f64,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct C2Table {
    pub coefficients: String,
    pub delta: f64,
    pub samples: usize,
    pub rows: Vec<C2Row>,
    /// Least-squares slope of `log mean_distance` on `log eps`.
    pub slope: f64,
    pub passed: bool,
}

/// Distances `d~(X^{eps,h}, Y^h)` between the controlled equation with fresh
/// noise and the skeleton, for each `eps`. Passes when the log-log slope lies in `[0.4, 0.6]`.
#[allow(clippy::too_many_arguments)]
pub fn c2_experiment(
    coeffs: &CoefficientSet,
    u0: &Field,
    h: &ControlField,
    eps_list: &[f64],
    samples: usize,
    delta: f64,
    seed: u64,
) -> Result<C2Table> {
    if eps_list.len() < 2 || samples < 2 {
        return Err(Error::domain("C2 needs at least two noise levels and two samples"));
    }
    if let Some(e) = eps_list.iter().find(|&&e| !(e > 0.0)) {
        return Err(Error::domain(format!("noise levels must be > 0, got {e}")));
    }
    let g = u0.grid;
    let filter = ForcingFilter::default();
    SolveConfig::new(coeffs.clone(), g, eps_list[0]).with_u0(u0.clone()).with_control(h.clone()).validate()?;
    let skeleton = skeleton_path(coeffs, u0, h, filter)?;
    let weights = MetricWeights::new(&g, DEFAULT_METRIC_TERMS)?;
    let mut rows = Vec::with_capacity(eps_list.len());
    for (i, &eps) in eps_list.iter().enumerate() {
        let level_seed = derive_seed(seed, i as u64);
        let distances: Vec<f64> = (0..samples)
            .into_par_iter()
            .map_init(
                || Stepper::new(g, filter),
                |stepper, s| {
                    let mut d = 0.0f64;
                    let noise = Noise::Stream {
                        seed: level_seed,
                        stream: s as u64,
                    };
                    drive(stepper, coeffs, &u0.values, eps, Some(h), noise, |k, u| {
                        d = d.max(weights.distance(u, skeleton.row(k)))
                    })?;
                    Ok(d)
                },
            )
            .collect::<Result<_>>()?;
        let n = samples as f64;
        let mean = distances.iter().sum::<f64>() / n;
        let var = distances.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
        rows.push(C2Row {
            eps,
            mean_distance: mean,
            std_error: (var / n).sqrt(),
            exceedance: distances.iter().filter(|&&d| d > delta).count() as f64 / n,
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.eps.ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.mean_distance.ln()).collect();
    let slope = least_squares_slope(&xs, &ys);
    Ok(C2Table {
        coefficients: coeffs.name.clone(),
        delta,
        samples,
        rows,
        passed: (0.4..=0.6).contains(&slope),
        slope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::builtin;
    use crate::control::builtin_control;
    use crate::grid::Trajectory;
    use crate::noise::sample_noise;
    use crate::spde::solve_spde_with_noise;

    fn unit() -> CoefficientSet {
        builtin("zero_drift_unit_sigma").unwrap()
    }

    fn small() -> GridSpec {
        GridSpec::new(1.0, 40, 6.0, 128).unwrap()
    }

    #[test]
    fn plain_estimate_matches_gaussian_tail() {
        let g = small();
        let ev = EndpointConstraint { x0: 0.0, a: 0.5, t: 1.0 };
        let est = estimate_probability(&ev, &unit(), &Field::zeros(g), 1.0, 4000, None, 3).unwrap();
        let exact = linear_tail_probability(0.5, 1.0, 1.0);
        assert!((est.p - exact).abs() < 4.0 * est.std_error + 0.01, "{} vs {exact}", est.p);
        assert!(est.warning.is_none());
    }

    #[test]
    fn certain_event() {
        let g = small();
        let ev = EndpointConstraint { x0: 0.0, a: -1e6, t: 1.0 };
        let est = estimate_probability(&ev, &unit(), &Field::zeros(g), 1.0, 100, None, 1).unwrap();
        assert_eq!(est.p, 1.0);
    }

    #[test]
    fn too_few_samples_rejected() {
        let g = small();
        let ev = EndpointConstraint { x0: 0.0, a: 1.0, t: 1.0 };
        assert!(estimate_probability(&ev, &unit(), &Field::zeros(g), 1.0, 99, None, 1).is_err());
    }

    #[test]
    fn tilted_agrees_with_plain_and_reduces_variance() {
        let g = small();
        let ev = EndpointConstraint { x0: 0.0, a: 1.0, t: 1.0 };
        let u0 = Field::zeros(g);
        let sol = crate::rate::minimize_rate_endpoint(&unit(), &u0, &ev, &Default::default()).unwrap();
        let eps = 0.2;
        let plain = estimate_probability(&ev, &unit(), &u0, eps, 4000, None, 1).unwrap();
        let tilted = estimate_probability(&ev, &unit(), &u0, eps, 4000, Some(&sol.control), 2).unwrap();
        let overlap = plain.ci_low <= tilted.ci_high && tilted.ci_low <= plain.ci_high;
        assert!(overlap, "{plain:?} {tilted:?}");
        let small_eps = 0.02;
        let plain = estimate_probability(&ev, &unit(), &u0, small_eps, 2000, None, 3).unwrap();
        let tilted = estimate_probability(&ev, &unit(), &u0, small_eps, 2000, Some(&sol.control), 4).unwrap();
        assert!(tilted.std_error * tilted.std_error * 10.0 < plain.std_error.powi(2).max(tilted.p * (1.0 - tilted.p) / 2000.0));
    }

    #[test]
    fn zero_threshold_is_half_for_all_eps() {
        let g = small();
        let ev = EndpointConstraint { x0: 0.0, a: 0.0, t: 1.0 };
        let h = ControlField::zeros(g);
        let curve = ldp_curve(&ev, &unit(), &Field::zeros(g), &[1.0, 0.1], 2000, &h, 0.0, 5).unwrap();
        for row in &curve.rows {
            assert!((row.estimate.p - 0.5).abs() < 0.05);
        }
    }

    #[test]
    fn tail_decreases_in_threshold() {
        let g = small();
        let u0 = Field::zeros(g);
        let p = |a: f64| {
            let ev = EndpointConstraint { x0: 0.0, a, t: 1.0 };
            estimate_probability(&ev, &unit(), &u0, 0.5, 1000, None, 9).unwrap().p
        };
        assert!(p(0.0) >= p(0.3) && p(0.3) >= p(0.6));
    }

    #[test]
    fn c1_without_perturbation_is_zero() {
        let g = small();
        let t = c1_experiment(&unit(), &Field::zeros(g), &ControlField::zeros(g), &[1, 4], 0.0).unwrap();
        assert!(t.rows.iter().all(|r| r.distance == 0.0));
    }

    #[test]
    fn c1_linear_decay_close_to_inverse_m() {
        let g = GridSpec::default();
        let t = c1_experiment(&unit(), &Field::zeros(g), &ControlField::zeros(g), &DEFAULT_M_LIST, 1.0).unwrap();
        // m * distance against its geometric mean.
        let scaled: Vec<f64> = t.rows.iter().map(|r| r.distance * r.m as f64).collect();
        let centre = (scaled.iter().map(|v| v.ln()).sum::<f64>() / scaled.len() as f64).exp();
        for v in &scaled {
            assert!((1.0 / 3.0..=3.0).contains(&(v / centre)), "{t:?}");
        }
        assert!(t.rows.last().unwrap().distance < t.rows[0].distance);
    }

    #[test]
    fn c2_zero_noise_limit_and_linear_decomposition() {
        // b = 0, sigma = 1: X^{eps,h} - Y^h = sqrt(eps) V on the same noise.
        let g = small();
        let h = builtin_control("gaussian", g).unwrap();
        let w = sample_noise(&g, 0, 0);
        let u0 = Field::zeros(g);
        let cfg = SolveConfig::new(unit(), g, 0.04).with_control(h.clone());
        let x = solve_spde_with_noise(&cfg, Noise::Given(&w)).unwrap().path;
        let y = skeleton_path(&unit(), &u0, &h, ForcingFilter::default()).unwrap();
        let v = crate::noise::stochastic_convolution(&Trajectory::from_fn(g, |_, _| 1.0), &w).unwrap();
        for i in 0..x.values.len() {
            assert!((x.values[i] - y.values[i] - 0.2 * v.values[i]).abs() < 1e-12);
        }
        let zero = solve_spde_with_noise(&SolveConfig::new(unit(), g, 0.0).with_control(h), Noise::Given(&w)).unwrap();
        assert_eq!(zero.path, y);
    }

    #[test]
    fn c2_exceedance_falls_with_eps() {
        let g = small();
        let h = builtin_control("gaussian", g).unwrap();
        let t = c2_experiment(&unit(), &Field::zeros(g), &h, &[0.5, 0.05, 0.005], 200, DEFAULT_C2_DELTA, 1).unwrap();
        assert!(t.rows.windows(2).all(|p| p[1].exceedance <= p[0].exceedance), "{t:?}");
        assert!(t.rows.windows(2).all(|p| p[1].mean_distance < p[0].mean_distance));
    }
}
