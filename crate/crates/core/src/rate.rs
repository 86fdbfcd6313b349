//! The rate functional `I(f) = inf { (1/2)|h|_H^2 : f = Y^h }`: inversion of
//! a target path and penalized minimization for endpoint events.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::coefficients::CoefficientSet;
use crate::control::ControlField;
use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec, Trajectory};
use crate::rng::stream_rng;
use crate::scheme::{ForcingFilter, Stepper};
use crate::skeleton::skeleton_path;
use crate::spde::{drive, Noise};

pub use crate::control::energy;

/// The event `{ f : f(T, x0) = a }`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EndpointConstraint {
    pub x0: f64,
    pub a: f64,
    pub t: f64,
}

impl EndpointConstraint {
    fn node(&self, grid: &GridSpec) -> Result<usize> {
        if (self.t - grid.final_time).abs() > 1e-12 * grid.final_time.max(1.0) {
            return Err(Error::domain(format!(
                "constraint time {} differs from the grid horizon {}",
                self.t, grid.final_time
            )));
        }
        if !self.a.is_finite() {
            return Err(Error::domain(format!("target level must be finite, got {}", self.a)));
        }
        if !(self.x0.abs() <= grid.half_width) {
            return Err(Error::domain(format!("x0 = {} lies outside the window", self.x0)));
        }
        Ok(grid.index_of(self.x0))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OptimizerConfig {
    /// Penalty weight of the first round.
    pub mu0: f64,
    pub mu_factor: f64,
    pub rounds: usize,
    pub armijo: f64,
    pub max_inner: usize,
    /// Inner loop stops once `|grad| <= grad_tol max(1, |h|)` in `L^2`.
    pub grad_tol: f64,
    /// Required `|Y^h(T, x0) - a|`.
    pub constraint_tol: f64,
    /// Extra starts from random controls; the lowest penalized objective wins.
    pub restarts: usize,
    pub seed: u64,
    pub filter: ForcingFilter,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            mu0: 10.0,
            mu_factor: 10.0,
            rounds: 5,
            armijo: 1e-4,
            max_inner: 500,
            grad_tol: 1e-7,
            constraint_tol: 1e-3,
            restarts: 0,
            seed: 0,
            filter: ForcingFilter::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct HistoryRow {
    pub start: usize,
    pub round: usize,
    pub mu: f64,
    pub iteration: usize,
    pub objective: f64,
    pub energy: f64,
    pub endpoint: f64,
    pub grad_norm: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RateSolution {
    #[serde(skip)]
    pub control: ControlField,
    /// `I = energy(h*)`.
    pub rate: f64,
    pub endpoint: f64,
    pub constraint_gap: f64,
    pub mu: f64,
    pub start: usize,
    pub converged: bool,
    pub history: Vec<HistoryRow>,
}

/// Value of the penalized objective `energy(h) + (mu/2)(Y^h(T, x0) - a)^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub objective: f64,
    pub energy: f64,
    pub endpoint: f64,
}

/// Forward solve and discrete adjoint of the penalized endpoint objective.
pub struct EndpointObjective<'a> {
    coeffs: &'a CoefficientSet,
    u0: &'a Field,
    node: usize,
    a: f64,
    pub mu: f64,
    stepper: Stepper,
    path: Trajectory,
}

impl<'a> EndpointObjective<'a> {
    pub fn new(coeffs: &'a CoefficientSet, u0: &'a Field, constraint: &EndpointConstraint, mu: f64, filter: ForcingFilter) -> Result<Self> {
        let g = u0.grid;
        let node = constraint.node(&g)?;
        if !(mu >= 0.0) {
            return Err(Error::domain(format!("penalty weight must be >= 0, got {mu}")));
        }
        Ok(EndpointObjective {
            coeffs,
            u0,
            node,
            a: constraint.a,
            mu,
            stepper: Stepper::new(g, filter),
            path: Trajectory::zeros(g),
        })
    }

    pub fn grid(&self) -> GridSpec {
        self.u0.grid
    }

    pub fn evaluate(&mut self, h: &ControlField) -> Result<Evaluation> {
        let run = drive(&mut self.stepper, self.coeffs, &self.u0.values, 0.0, Some(h), Noise::Off, |_, _| {})?;
        Ok(self.assemble(h, run.last[self.node]))
    }

    fn assemble(&self, h: &ControlField, endpoint: f64) -> Evaluation {
        let energy = h.energy();
        let gap = endpoint - self.a;
        Evaluation {
            objective: energy + 0.5 * self.mu * gap * gap,
            energy,
            endpoint,
        }
    }

    /// Objective and its `L^2` gradient `h_k + sigma(Y_k) (Q lam_{k+1}) / dx`, where
    /// `lam_N = mu (Y_N(x0) - a) e_{x0}` and
    /// `lam_k = S lam_{k+1} + dt (b'(Y_k) + sigma'(Y_k) h_k) Q lam_{k+1}`.
    pub fn gradient(&mut self, h: &ControlField) -> Result<(Evaluation, ControlField)> {
        let g = self.grid();
        h.grid.same_as(&g)?;
        let n = g.space_points;
        let (dt, dx) = (g.dt(), g.dx());
        let path = &mut self.path;
        let run = drive(&mut self.stepper, self.coeffs, &self.u0.values, 0.0, Some(h), Noise::Off, |k, u| {
            path.row_mut(k).copy_from_slice(u)
        })?;
        let eval = self.assemble(h, run.last[self.node]);
        let mut grad = h.clone();
        grad.ball = None;
        let mut lam = vec![0.0; n];
        lam[self.node] = self.mu * (eval.endpoint - self.a);
        let mut s_lam = vec![0.0; n];
        let mut q_lam = vec![0.0; n];
        for k in (0..g.time_steps).rev() {
            self.stepper.adjoint(&lam, &mut s_lam, &mut q_lam);
            let y = self.path.row(k);
            let hk = h.row(k);
            let gk = grad.row_mut(k);
            for j in 0..n {
                let (b, s) = (&self.coeffs.drift, &self.coeffs.diffusion);
                gk[j] += s.eval(y[j]) * q_lam[j] / dx;
                lam[j] = s_lam[j] + dt * (b.deriv(y[j]) + s.deriv(y[j]) * hk[j]) * q_lam[j];
            }
        }
        Ok((eval, grad))
    }
}

fn l2_inner(a: &[f64], b: &[f64], g: &GridSpec) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() * g.dt() * g.dx()
}

/// Gradient descent with Barzilai–Borwein steps and Armijo backtracking.
/// Returns the final control and whether the line search gave out.
fn descend(
    objective: &mut EndpointObjective<'_>,
    mut h: ControlField,
    cfg: &OptimizerConfig,
    start: usize,
    round: usize,
    history: &mut Vec<HistoryRow>,
) -> Result<(ControlField, Evaluation, bool)> {
    let g = objective.grid();
    let (mut eval, mut grad) = objective.gradient(&h)?;
    let mut alpha = 1.0;
    for iteration in 0..cfg.max_inner {
        let gnorm2 = l2_inner(&grad.values, &grad.values, &g);
        let gnorm = gnorm2.sqrt();
        history.push(HistoryRow {
            start,
            round,
            mu: objective.mu,
            iteration,
            objective: eval.objective,
            energy: eval.energy,
            endpoint: eval.endpoint,
            grad_norm: gnorm,
        });
        if gnorm <= cfg.grad_tol * h.norm().max(1.0) {
            return Ok((h, eval, false));
        }
        let mut accepted = None;
        for _ in 0..60 {
            let trial = ControlField {
                grid: g,
                values: h.values.iter().zip(&grad.values).map(|(x, d)| x - alpha * d).collect(),
                ball: None,
            };
            let e = objective.evaluate(&trial)?;
            if e.objective <= eval.objective - cfg.armijo * alpha * gnorm2 {
                accepted = Some(trial);
                break;
            }
            alpha *= 0.5;
        }
        let Some(next) = accepted else {
            return Ok((h, eval, true));
        };
        let (e, gr) = objective.gradient(&next)?;
        let s: Vec<f64> = next.values.iter().zip(&h.values).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gr.values.iter().zip(&grad.values).map(|(a, b)| a - b).collect();
        let sy = l2_inner(&s, &y, &g);
        alpha = if sy > 0.0 { (l2_inner(&s, &s, &g) / sy).clamp(1e-12, 1e12) } else { 1.0 };
        h = next;
        eval = e;
        grad = gr;
    }
    Ok((h, eval, false))
}

fn run_start(
    coeffs: &CoefficientSet,
    u0: &Field,
    constraint: &EndpointConstraint,
    cfg: &OptimizerConfig,
    start: usize,
    h0: ControlField,
) -> Result<RateSolution> {
    let mut objective = EndpointObjective::new(coeffs, u0, constraint, cfg.mu0, cfg.filter)?;
    let mut history = Vec::new();
    let mut h = h0;
    let mut last = objective.evaluate(&h)?;
    let mut mu = cfg.mu0;
    for round in 0..cfg.rounds.max(1) {
        mu = cfg.mu0 * cfg.mu_factor.powi(round as i32);
        objective.mu = mu;
        let (next, eval, _) = descend(&mut objective, h, cfg, start, round, &mut history)?;
        h = next;
        last = eval;
        if (eval.endpoint - constraint.a).abs() < cfg.constraint_tol {
            break;
        }
    }
    let constraint_gap = (last.endpoint - constraint.a).abs();
    Ok(RateSolution {
        rate: last.energy,
        endpoint: last.endpoint,
        constraint_gap,
        mu,
        start,
        converged: constraint_gap < cfg.constraint_tol,
        history,
        control: h,
    })
}

/// Minimizes `energy(h) + (mu/2)(Y^h(T, x0) - a)^2` over controls on the grid
/// of `u0`, raising `mu` each round until the endpoint constraint holds.
/// Only a local minimum is claimed. If no start meets the constraint the best
/// one is returned inside [`Error::Stalled`].
pub fn minimize_rate_endpoint(coeffs: &CoefficientSet, u0: &Field, constraint: &EndpointConstraint, cfg: &OptimizerConfig) -> Result<RateSolution> {
    let g = u0.grid;
    constraint.node(&g)?;
    let starts: Vec<ControlField> = (0..=cfg.restarts)
        .map(|s| {
            if s == 0 {
                ControlField::zeros(g)
            } else {
                let mut rng = stream_rng(cfg.seed, 401, s as u64);
                let values = (0..g.time_steps * g.space_points)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        0.1 * z
                    })
                    .collect();
                ControlField { grid: g, values, ball: None }
            }
        })
        .collect();
    let solutions: Vec<RateSolution> = starts
        .into_par_iter()
        .enumerate()
        .map(|(s, h0)| run_start(coeffs, u0, constraint, cfg, s, h0))
        .collect::<Result<_>>()?;
    // Prefer starts that meet the constraint, then the smaller rate.
    let best = solutions
        .into_iter()
        .min_by(|a, b| (!a.converged, a.rate).partial_cmp(&(!b.converged, b.rate)).expect("finite rates"))
        .expect("at least one start");
    if !best.converged {
        return Err(Error::Stalled {
            reason: format!(
                "endpoint misses the target by {:e} (tolerance {:e}) after {} rounds",
                best.constraint_gap, cfg.constraint_tol, cfg.rounds
            ),
            best: Box::new(best),
        });
    }
    Ok(best)
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ProbeRow {
    pub finite_difference: f64,
    pub adjoint: f64,
    pub relative_error: f64,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct GradientCheckReport {
    pub mu: f64,
    pub step: f64,
    pub probes: Vec<ProbeRow>,
    pub max_relative_error: f64,
    pub tolerance: f64,
}

impl GradientCheckReport {
    pub fn passed(&self) -> bool {
        self.max_relative_error < self.tolerance
    }
}

/// Compares `<grad J(h), d>` from the adjoint with central differences of `J`
/// along `probes` random unit directions `d`.
pub fn finite_difference_gradient_check(
    h: &ControlField,
    coeffs: &CoefficientSet,
    u0: &Field,
    constraint: &EndpointConstraint,
    mu: f64,
    probes: usize,
    seed: u64,
) -> Result<GradientCheckReport> {
    let g = u0.grid;
    h.grid.same_as(&g)?;
    let mut objective = EndpointObjective::new(coeffs, u0, constraint, mu, ForcingFilter::default())?;
    let (_, grad) = objective.gradient(h)?;
    let step = 1e-4 * h.norm().max(1.0);
    let mut rows = Vec::with_capacity(probes);
    for p in 0..probes {
        let mut rng = stream_rng(seed, 402, p as u64);
        let mut d: Vec<f64> = (0..h.values.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = l2_inner(&d, &d, &g).sqrt();
        d.iter_mut().for_each(|v| *v /= norm);
        let shifted = |sign: f64| ControlField {
            grid: g,
            values: h.values.iter().zip(&d).map(|(x, v)| x + sign * step * v).collect(),
            ball: None,
        };
        let plus = objective.evaluate(&shifted(1.0))?.objective;
        let minus = objective.evaluate(&shifted(-1.0))?.objective;
        let fd = (plus - minus) / (2.0 * step);
        let adjoint = l2_inner(&grad.values, &d, &g);
        let denom = fd.abs().max(adjoint.abs()).max(1e-300);
        let diff = (fd - adjoint).abs();
        rows.push(ProbeRow {
            finite_difference: fd,
            adjoint,
            relative_error: if diff == 0.0 { 0.0 } else { diff / denom },
        });
    }
    Ok(GradientCheckReport {
        mu,
        step,
        max_relative_error: rows.iter().fold(0.0f64, |m, r| m.max(r.relative_error)),
        probes: rows,
        tolerance: 1e-4,
    })
}

/// How the time derivative and the Laplacian are discretized when a path is inverted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InversionScheme {
    /// `h_k = [(f_{k+1} - f_k)/dt - (1/2) Δ m_k - b(m_k)] / sigma(m_k)` with the midpoint
    /// `m_k = (f_k + f_{k+1})/2` and a spectral Laplacian.
    #[default]
    Centered,
    /// Inverts the solver's own step: `h_k = [Q^{-1}(f_{k+1} - S f_k)/dt - b(f_k)] / sigma(f_k)`.
    /// Exact for paths produced by the skeleton solver.
    Discrete,
}

#[derive(Clone, Debug)]
pub struct Inversion {
    pub control: ControlField,
    /// `sup |Y^h - f|` over the grid.
    pub residual: f64,
}

/// Recovers `h` with `f = Y^h` where `sigma` does not vanish, and reports how
/// well the recovered control reproduces `f`. Unreachable targets show up as
/// a large residual, not an error.
pub fn invert_control(f: &Trajectory, coeffs: &CoefficientSet, u0: &Field, sigma_min: f64, scheme: InversionScheme) -> Result<Inversion> {
    let g = f.grid;
    u0.grid.same_as(&g)?;
    let distance = f.row(0).iter().zip(&u0.values).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    if distance > 1e-9 * (1.0 + u0.max_abs()) {
        return Err(Error::Incompatible { distance });
    }
    let n = g.space_points;
    let dt = g.dt();
    let filter = ForcingFilter::default();
    let mut stepper = Stepper::new(g, filter);
    let mut h = ControlField::zeros(g);
    let mut state = vec![0.0; n];
    let mut rate = vec![0.0; n];
    for k in 0..g.time_steps {
        let (a, b) = (f.row(k), f.row(k + 1));
        match scheme {
            InversionScheme::Centered => {
                for j in 0..n {
                    state[j] = 0.5 * (a[j] + b[j]);
                }
                rate.copy_from_slice(&state);
                stepper.half_laplacian(&mut rate);
                for j in 0..n {
                    rate[j] = (b[j] - a[j]) / dt - rate[j];
                }
            }
            InversionScheme::Discrete => {
                state.copy_from_slice(a);
                let mut s = a.to_vec();
                stepper.heat(&mut s);
                for j in 0..n {
                    rate[j] = b[j] - s[j];
                }
                stepper.unsmooth(&mut rate);
                rate.iter_mut().for_each(|v| *v /= dt);
            }
        }
        let row = h.row_mut(k);
        for j in 0..n {
            let sigma = coeffs.diffusion.eval(state[j]);
            if !(sigma.abs() >= sigma_min) {
                return Err(Error::NotInvertible {
                    sigma: sigma.abs(),
                    sigma_min,
                    step: k,
                    index: j,
                });
            }
            row[j] = (rate[j] - coeffs.drift.eval(state[j])) / sigma;
        }
    }
    let residual = match skeleton_path(coeffs, u0, &h, filter) {
        Ok(y) => y.max_abs_diff(f)?,
        Err(Error::BlowUp { .. }) => f64::INFINITY,
        Err(e) => return Err(e),
    };
    Ok(Inversion { control: h, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::builtin;
    use crate::control::builtin_control;
    use crate::skeleton::heat_flow;

    fn unit() -> CoefficientSet {
        builtin("zero_drift_unit_sigma").unwrap()
    }

    fn small() -> GridSpec {
        GridSpec::new(1.0, 40, 6.0, 128).unwrap()
    }

    #[test]
    fn mu_zero_gradient_is_h() {
        let g = small();
        let u0 = Field::zeros(g);
        let c = EndpointConstraint { x0: 0.0, a: 1.0, t: 1.0 };
        let h = builtin_control("pulse", g).unwrap();
        let coeffs = unit();
        let mut obj = EndpointObjective::new(&coeffs, &u0, &c, 0.0, ForcingFilter::default()).unwrap();
        let (_, grad) = obj.gradient(&h).unwrap();
        assert_eq!(grad.values, h.values);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let g = small();
        let c = EndpointConstraint { x0: 0.3, a: 0.7, t: 1.0 };
        let h = builtin_control("travelling", g).unwrap();
        let linear = finite_difference_gradient_check(&h, &unit(), &Field::zeros(g), &c, 100.0, 10, 1).unwrap();
        assert!(linear.max_relative_error < 1e-6, "{linear:?}");
        let u0 = Field::from_fn(g, |x| 0.5 * (-x * x).exp());
        for name in ["ulogu_bounded_sigma", "lipschitz_tanh", "linear"] {
            let r = finite_difference_gradient_check(&h, &builtin(name).unwrap(), &u0, &c, 100.0, 10, 2).unwrap();
            assert!(r.passed(), "{name}: {r:?}");
        }
    }

    #[test]
    fn linear_rate_matches_discrete_closed_form() {
        // Y(T, 0) = <K, h> with |K|^2 the discrete variance, so I = a^2 / (2 |K|^2).
        let g = small();
        let v = crate::noise::discrete_variance(&g, ForcingFilter::default());
        let c = EndpointConstraint { x0: 0.0, a: 1.0, t: 1.0 };
        let sol = minimize_rate_endpoint(&unit(), &Field::zeros(g), &c, &OptimizerConfig::default()).unwrap();
        let want = 1.0 / (2.0 * v);
        assert!((sol.rate / want - 1.0).abs() < 2e-3, "{} vs {want}", sol.rate);
        assert!(sol.converged);
    }

    #[test]
    fn zero_target_is_free() {
        let g = small();
        let c = EndpointConstraint { x0: 0.0, a: 0.0, t: 1.0 };
        let sol = minimize_rate_endpoint(&builtin("ulogu_bounded_sigma").unwrap(), &Field::zeros(g), &c, &OptimizerConfig::default()).unwrap();
        assert_eq!(sol.rate, 0.0);
        assert!(sol.control.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rate_scales_quadratically() {
        let g = small();
        let cfg = OptimizerConfig::default();
        let rate = |a: f64| {
            let c = EndpointConstraint { x0: 0.0, a, t: 1.0 };
            minimize_rate_endpoint(&unit(), &Field::zeros(g), &c, &cfg).unwrap().rate
        };
        assert!((rate(2.0) / (4.0 * rate(1.0)) - 1.0).abs() < 0.03);
    }

    #[test]
    fn stalled_carries_best_iterate() {
        let g = small();
        let c = EndpointConstraint { x0: 0.0, a: 1.0, t: 1.0 };
        let cfg = OptimizerConfig { rounds: 1, mu0: 1.0, ..Default::default() };
        match minimize_rate_endpoint(&unit(), &Field::zeros(g), &c, &cfg) {
            Err(Error::Stalled { best, .. }) => assert!(best.rate > 0.0 && !best.converged),
            other => panic!("expected stall, got {other:?}"),
        }
    }

    #[test]
    fn restarts_agree_in_linear_case() {
        let g = small();
        let c = EndpointConstraint { x0: 0.0, a: 1.0, t: 1.0 };
        let base = minimize_rate_endpoint(&unit(), &Field::zeros(g), &c, &OptimizerConfig::default()).unwrap();
        let cfg = OptimizerConfig { restarts: 2, seed: 5, ..Default::default() };
        let multi = minimize_rate_endpoint(&unit(), &Field::zeros(g), &c, &cfg).unwrap();
        assert!((multi.rate - base.rate).abs() < 1e-3 * base.rate);
    }

    #[test]
    fn round_trip_energy() {
        let g = GridSpec::default();
        let u0 = Field::from_fn(g, |x| 0.5 * (-x * x).exp());
        for set in ["ulogu_bounded_sigma", "linear", "lipschitz_tanh", "zero_drift_unit_sigma"] {
            let coeffs = builtin(set).unwrap();
            for name in ["gaussian", "pulse", "travelling"] {
                let h = builtin_control(name, g).unwrap();
                let y = skeleton_path(&coeffs, &u0, &h, ForcingFilter::default()).unwrap();
                for scheme in [InversionScheme::Centered, InversionScheme::Discrete] {
                    let inv = invert_control(&y, &coeffs, &u0, 1e-3, scheme).unwrap();
                    let ratio = inv.control.energy() / h.energy();
                    assert!((ratio - 1.0).abs() < 0.02, "{set}/{name}/{scheme:?}: {ratio}");
                }
                let exact = invert_control(&y, &coeffs, &u0, 1e-3, InversionScheme::Discrete).unwrap();
                assert!(exact.residual < 1e-9, "{}", exact.residual);
            }
        }
    }

    #[test]
    fn heat_flow_inverts_to_zero() {
        let g = small();
        let u0 = Field::from_fn(g, |x| (-x * x).exp());
        let f = heat_flow(&u0, ForcingFilter::default());
        let inv = invert_control(&f, &unit(), &u0, 1e-3, InversionScheme::Discrete).unwrap();
        assert!(inv.control.values.iter().all(|v| v.abs() < 1e-9));
        let centered = invert_control(&f, &unit(), &u0, 1e-3, InversionScheme::Centered).unwrap();
        assert!(centered.control.energy() < 1e-4);
    }

    #[test]
    fn inversion_errors() {
        let g = small();
        let u0 = Field::zeros(g);
        let f = Trajectory::from_fn(g, |t, x| t * (-x * x).exp());
        let mut flat = unit();
        flat.diffusion = crate::coefficients::ScalarMap::zero();
        assert!(matches!(invert_control(&f, &flat, &u0, 1e-3, InversionScheme::Centered), Err(Error::NotInvertible { .. })));
        let shifted = Trajectory::from_fn(g, |_, _| 1.0);
        assert!(matches!(invert_control(&shifted, &unit(), &u0, 1e-3, InversionScheme::Centered), Err(Error::Incompatible { .. })));
    }

    #[test]
    fn discontinuous_target_costs_grow_with_refinement() {
        // A jump in time is reachable on a grid, but only at a cost of order 1/dt.
        let cost = |nt: usize| {
            let g = GridSpec::new(1.0, nt, 6.0, 128).unwrap();
            let f = Trajectory::from_fn(g, |t, x| if t > 0.5 { (-x * x).exp() } else { 0.0 });
            let inv = invert_control(&f, &unit(), &Field::zeros(g), 1e-3, InversionScheme::Centered).unwrap();
            assert!(inv.residual.is_finite());
            inv.control.energy()
        };
        assert!(cost(80) > 1.8 * cost(40));
    }

    #[test]
    fn optimizer_below_inversion_bound() {
        let g = small();
        let u0 = Field::zeros(g);
        let coeffs = builtin("lipschitz_tanh").unwrap();
        let h = builtin_control("pulse", g).unwrap();
        let y = skeleton_path(&coeffs, &u0, &h, ForcingFilter::default()).unwrap();
        let o = g.origin_index();
        let c = EndpointConstraint { x0: 0.0, a: y.at(g.time_steps, o), t: 1.0 };
        let sol = minimize_rate_endpoint(&coeffs, &u0, &c, &OptimizerConfig::default()).unwrap();
        let bound = invert_control(&y, &coeffs, &u0, 1e-3, InversionScheme::Discrete).unwrap().control.energy();
        assert!(sol.rate <= bound, "{} > {bound}", sol.rate);
    }
}
