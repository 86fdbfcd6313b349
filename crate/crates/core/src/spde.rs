//! Simulation of the driven equation
//!
//! `du = (1/2) Δu dt + b(u) dt + sigma(u) h dt + sqrt(eps) sigma(u) W(dt, dx)`
//!
//! in mild form, with or without a control `h`. The same recursion with
//! `eps = 0` is the skeleton map.

use rayon::prelude::*;
use serde::Serialize;

use crate::coefficients::{CoefficientSet, Regime};
use crate::control::ControlField;
use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec, Trajectory};
use crate::noise::{noise_row, NoiseRealization};
use crate::scheme::{ForcingFilter, Stepper};
use crate::weights::{time_weighted_sup, WeightParams};

/// `dt * L` must stay below this for explicit drift steps with a Lipschitz drift.
pub const STABILITY_LIMIT: f64 = 0.5;

/// Values beyond this magnitude abort the trajectory.
pub const BLOW_UP_LIMIT: f64 = 1e100;

#[derive(Clone, Debug)]
pub struct SolveConfig {
    pub coeffs: CoefficientSet,
    pub u0: Field,
    pub eps: f64,
    pub control: Option<ControlField>,
    pub grid: GridSpec,
    pub seed: u64,
    pub stream: u64,
    pub filter: ForcingFilter,
    /// Rate `lambda` of the diagnostic weight `exp(-lambda |x| e^{beta t})`.
    pub lambda: f64,
}

impl SolveConfig {
    /// Uncontrolled run from `u0 = 0`, seed 0, stream 0.
    pub fn new(coeffs: CoefficientSet, grid: GridSpec, eps: f64) -> Self {
        SolveConfig {
            coeffs,
            u0: Field::zeros(grid),
            eps,
            control: None,
            grid,
            seed: 0,
            stream: 0,
            filter: ForcingFilter::default(),
            lambda: 1.0,
        }
    }

    pub fn with_u0(mut self, u0: Field) -> Self {
        self.u0 = u0;
        self
    }

    pub fn with_control(mut self, h: ControlField) -> Self {
        self.control = Some(h);
        self
    }

    pub fn with_seed(mut self, seed: u64, stream: u64) -> Self {
        self.seed = seed;
        self.stream = stream;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(Error::domain(format!("noise intensity must be finite and >= 0, got {}", self.eps)));
        }
        self.u0.grid.same_as(&self.grid)?;
        if let Some(h) = &self.control {
            h.grid.same_as(&self.grid)?;
        }
        check_stability(&self.coeffs, &self.grid)?;
        WeightParams::new(self.coeffs.regime.growth_constant(), self.lambda)?;
        Ok(())
    }

    pub fn weight(&self) -> Result<WeightParams> {
        WeightParams::new(self.coeffs.regime.growth_constant(), self.lambda)
    }
}

/// Guard for the explicit drift step: `dt * L < 0.5` for Lipschitz coefficient sets.
/// Log-Lipschitz sets are guarded by the blow-up check instead.
pub fn check_stability(coeffs: &CoefficientSet, grid: &GridSpec) -> Result<()> {
    coeffs.regime.validate()?;
    if let Regime::H0Lipschitz { lipschitz } = coeffs.regime {
        let product = grid.dt() * lipschitz;
        if product >= STABILITY_LIMIT {
            return Err(Error::Unstable {
                product,
                limit: STABILITY_LIMIT,
            });
        }
    }
    Ok(())
}

/// Where the cell increments come from.
#[derive(Clone, Copy, Debug)]
pub enum Noise<'a> {
    Off,
    Stream { seed: u64, stream: u64 },
    Given(&'a NoiseRealization),
}

/// Outcome of one pass of the recursion.
#[derive(Clone, Debug)]
pub(crate) struct Drive {
    pub last: Vec<f64>,
    /// `-sum h dW / sqrt(eps) - sum h^2 dt dx / (2 eps)`; zero without control or noise.
    pub log_weight: f64,
}

/// Runs `u_{k+1} = S u_k + Q [dt b(u_k) + dt sigma(u_k) h_k + sqrt(eps) sigma(u_k) dW_k / dx]`,
/// calling `visit(k, u_k)` for `k = 0..=n_t`.
pub(crate) fn drive(
    stepper: &mut Stepper,
    coeffs: &CoefficientSet,
    u0: &[f64],
    eps: f64,
    control: Option<&ControlField>,
    noise: Noise<'_>,
    mut visit: impl FnMut(usize, &[f64]),
) -> Result<Drive> {
    let g = stepper.grid;
    let n = g.space_points;
    let (dt, dx) = (g.dt(), g.dx());
    let amp = eps.sqrt() / dx;
    let noisy = eps > 0.0 && !matches!(noise, Noise::Off);
    let mut u = u0.to_vec();
    let mut next = vec![0.0; n];
    let mut forcing = vec![0.0; n];
    let mut dw = vec![0.0; n];
    let mut cross = 0.0;
    visit(0, &u);
    for k in 0..g.time_steps {
        if noisy {
            match noise {
                Noise::Stream { seed, stream } => noise_row(&g, seed, stream, k, &mut dw),
                Noise::Given(w) => dw.copy_from_slice(w.row(k)),
                Noise::Off => unreachable!(),
            }
        }
        let h = control.map(|c| c.row(k));
        for j in 0..n {
            let v = u[j];
            let mut f = dt * coeffs.drift.eval(v);
            let s = if h.is_some() || noisy { coeffs.diffusion.eval(v) } else { 0.0 };
            if let Some(h) = h {
                f += dt * s * h[j];
                if noisy {
                    cross += h[j] * dw[j];
                }
            }
            if noisy {
                f += amp * s * dw[j];
            }
            forcing[j] = f;
        }
        stepper.step(&u, &forcing, &mut next);
        if let Some((j, &value)) = next.iter().enumerate().find(|(_, v)| !(v.abs() <= BLOW_UP_LIMIT)) {
            return Err(Error::BlowUp {
                step: k + 1,
                index: j,
                t: g.t(k + 1),
                x: g.x(j),
                value,
            });
        }
        std::mem::swap(&mut u, &mut next);
        visit(k + 1, &u);
    }
    let log_weight = match control {
        Some(h) if noisy => -cross / eps.sqrt() - h.energy() / eps,
        _ => 0.0,
    };
    Ok(Drive { last: u, log_weight })
}

#[derive(Clone, Debug)]
pub struct SpdeSolution {
    pub path: Trajectory,
    /// `sup_{t,x} |u| exp(-lambda |x| e^{beta t})` with `beta = beta(kappa, lambda)`.
    pub weighted_sup: f64,
    pub weight: WeightParams,
    /// Log of the discrete likelihood ratio of the uncontrolled law against the
    /// controlled one; `None` unless both a control and noise are present.
    pub log_weight: Option<f64>,
}

pub fn solve_spde(cfg: &SolveConfig) -> Result<SpdeSolution> {
    solve_spde_with_noise(cfg, Noise::Stream {
        seed: cfg.seed,
        stream: cfg.stream,
    })
}

pub fn solve_spde_with_noise(cfg: &SolveConfig, noise: Noise<'_>) -> Result<SpdeSolution> {
    cfg.validate()?;
    if let Noise::Given(w) = noise {
        w.grid.same_as(&cfg.grid)?;
    }
    let mut stepper = Stepper::new(cfg.grid, cfg.filter);
    let mut path = Trajectory::zeros(cfg.grid);
    let run = drive(&mut stepper, &cfg.coeffs, &cfg.u0.values, cfg.eps, cfg.control.as_ref(), noise, |k, u| {
        path.row_mut(k).copy_from_slice(u)
    })?;
    let weight = cfg.weight()?;
    let noisy = cfg.eps > 0.0 && !matches!(noise, Noise::Off);
    Ok(SpdeSolution {
        weighted_sup: time_weighted_sup(&path, &weight),
        weight,
        log_weight: (noisy && cfg.control.is_some()).then_some(run.log_weight),
        path,
    })
}

/// The final profile of one ensemble member.
#[derive(Clone, Copy, Debug)]
pub struct EndState<'a> {
    pub sample: usize,
    pub last: &'a [f64],
    pub log_weight: f64,
}

/// Runs `samples` independent copies of `cfg` (member `i` uses stream
/// `cfg.stream + i`) and maps each final profile through `observe`.
/// Output order follows the member index, whatever the thread count.
pub fn ensemble<R, F>(cfg: &SolveConfig, samples: usize, observe: F) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(EndState<'_>) -> R + Sync,
{
    cfg.validate()?;
    (0..samples)
        .into_par_iter()
        .map_init(
            || Stepper::new(cfg.grid, cfg.filter),
            |stepper, i| {
                let noise = Noise::Stream {
                    seed: cfg.seed,
                    stream: cfg.stream + i as u64,
                };
                let run = drive(stepper, &cfg.coeffs, &cfg.u0.values, cfg.eps, cfg.control.as_ref(), noise, |_, _| {})?;
                Ok(observe(EndState {
                    sample: i,
                    last: &run.last,
                    log_weight: run.log_weight,
                }))
            },
        )
        .collect()
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ExplosionRow {
    pub window: f64,
    pub mean_sup: f64,
    pub std_error: f64,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ExplosionTable {
    pub t: f64,
    pub samples: usize,
    pub grid: GridSpec,
    pub rows: Vec<ExplosionRow>,
    /// `E|u(t, 0)|` from the same samples.
    pub point_mean: f64,
    /// Folded-normal mean `sqrt(2 sqrt(t/pi) / pi)`.
    pub point_reference: f64,
    /// Least-squares slope of `mean_sup^2` against `log window`, divided by
    /// `2 sqrt(t/pi)`; one under `sup ~ sqrt(2 v log window)` growth.
    pub fitted_exponent: f64,
    pub strictly_increasing: bool,
}

impl ExplosionTable {
    pub fn passed(&self) -> bool {
        self.strictly_increasing && (self.fitted_exponent - 1.0).abs() <= 0.2
    }
}

/// Grid used by [`explosion_demo`]: `[-128, 128)` with `dx = 1/8` and four steps.
/// The exact-variance filter makes the law of `u(t, .)` exact in time for any step count.
pub fn explosion_grid(t: f64) -> Result<GridSpec> {
    GridSpec::new(t, 4, 128.0, 2048)
}

pub fn explosion_demo(t: f64, windows: &[f64], samples: usize, seed: u64) -> Result<ExplosionTable> {
    explosion_demo_on(explosion_grid(t)?, windows, samples, seed)
}

/// `E sup_{|x| <= window} |u(t, x)|` for `b = 0`, `sigma = 1`, `u0 = 0`, `eps = 1`.
/// Every window is evaluated on the same samples, so the table is monotone per sample.
pub fn explosion_demo_on(grid: GridSpec, windows: &[f64], samples: usize, seed: u64) -> Result<ExplosionTable> {
    if windows.len() < 2 || samples < 2 {
        return Err(Error::domain("explosion demo needs at least two windows and two samples"));
    }
    if let Some(w) = windows.iter().find(|&&w| !(w > 0.0 && w <= grid.half_width)) {
        return Err(Error::domain(format!("window {w} outside (0, {}]", grid.half_width)));
    }
    let coeffs = crate::coefficients::builtin("zero_drift_unit_sigma")?;
    let cfg = SolveConfig::new(coeffs, grid, 1.0).with_seed(seed, 0);
    let origin = grid.origin_index();
    let sups = ensemble(&cfg, samples, |end| {
        let mut out = Vec::with_capacity(windows.len() + 1);
        out.push(end.last[origin].abs());
        for &w in windows {
            let m = end
                .last
                .iter()
                .enumerate()
                .filter(|(j, _)| grid.x(*j).abs() <= w)
                .fold(0.0f64, |m, (_, v)| m.max(v.abs()));
            out.push(m);
        }
        out
    })?;
    let n = samples as f64;
    let column = |c: usize| {
        let mean = sups.iter().map(|r| r[c]).sum::<f64>() / n;
        let var = sups.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, (var / n).sqrt())
    };
    let rows: Vec<ExplosionRow> = windows
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            let (mean_sup, std_error) = column(i + 1);
            ExplosionRow {
                window: w,
                mean_sup,
                std_error,
            }
        })
        .collect();
    let v = (grid.final_time / std::f64::consts::PI).sqrt();
    let xs: Vec<f64> = rows.iter().map(|r| r.window.ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.mean_sup * r.mean_sup).collect();
    let slope = least_squares_slope(&xs, &ys);
    Ok(ExplosionTable {
        t: grid.final_time,
        samples,
        grid,
        strictly_increasing: rows.windows(2).all(|p| p[1].mean_sup > p[0].mean_sup),
        point_mean: column(0).0,
        point_reference: (2.0 * v / std::f64::consts::PI).sqrt(),
        fitted_exponent: slope / (2.0 * v),
        rows,
    })
}

/// Ordinary least-squares slope of `ys` on `xs`.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{builtin, ScalarMap};
    use crate::heat_kernel::p;
    use crate::noise::{sample_noise, sample_stats};

    fn unit() -> CoefficientSet {
        builtin("zero_drift_unit_sigma").unwrap()
    }

    #[test]
    fn pure_heat_flow() {
        let g = GridSpec::new(1.0, 50, 12.0, 512).unwrap();
        let mut set = unit();
        set.diffusion = ScalarMap::zero();
        let s = 0.2;
        let cfg = SolveConfig::new(set, g, 1.0).with_u0(Field::from_fn(g, |x| p(s, x)));
        let sol = solve_spde(&cfg).unwrap();
        for j in 0..g.space_points {
            assert!((sol.path.at(g.time_steps, j) - p(s + 1.0, g.x(j))).abs() < 1e-4);
        }
    }

    #[test]
    fn unit_noise_endpoint_variance() {
        let g = GridSpec::new(1.0, 20, 8.0, 256).unwrap();
        let cfg = SolveConfig::new(unit(), g, 1.0).with_seed(4, 0);
        let o = g.origin_index();
        let xs = ensemble(&cfg, 3000, |e| e.last[o]).unwrap();
        let st = sample_stats(&xs).unwrap();
        let want = (1.0 / std::f64::consts::PI).sqrt();
        assert!((st.variance / want - 1.0).abs() < 0.08, "{}", st.variance);
        assert!(st.normality_p_value > 1e-3);
    }

    #[test]
    fn ensemble_matches_single_solves() {
        let g = GridSpec::new(0.5, 10, 4.0, 64).unwrap();
        let cfg = SolveConfig::new(builtin("ulogu_bounded_sigma").unwrap(), g, 0.3).with_seed(7, 10);
        let ends = ensemble(&cfg, 3, |e| e.last.to_vec()).unwrap();
        for (i, end) in ends.iter().enumerate() {
            let single = solve_spde(&cfg.clone().with_seed(7, 10 + i as u64)).unwrap();
            assert_eq!(single.path.row(g.time_steps), &end[..]);
        }
    }

    #[test]
    fn given_noise_matches_stream() {
        let g = GridSpec::new(0.5, 10, 4.0, 64).unwrap();
        let cfg = SolveConfig::new(builtin("linear").unwrap(), g, 0.5).with_seed(3, 2);
        let w = sample_noise(&g, 3, 2);
        let a = solve_spde(&cfg).unwrap();
        let b = solve_spde_with_noise(&cfg, Noise::Given(&w)).unwrap();
        assert_eq!(a.path, b.path);
    }

    #[test]
    fn superposition_in_control_and_noise() {
        // b = 0, sigma = 1: u = P u0 + Ctrl(h) + sqrt(eps) V(W), all linear.
        let g = GridSpec::new(1.0, 20, 4.0, 64).unwrap();
        let h = ControlField::from_fn(g, |t, x| (x - t).cos() * (-x * x).exp());
        let w = sample_noise(&g, 1, 0);
        let base = SolveConfig::new(unit(), g, 0.25);
        let both = solve_spde_with_noise(&base.clone().with_control(h.clone()), Noise::Given(&w)).unwrap();
        let ctrl = solve_spde_with_noise(&base.clone().with_control(h), Noise::Off).unwrap();
        let noise = solve_spde_with_noise(&base, Noise::Given(&w)).unwrap();
        for i in 0..both.path.values.len() {
            let sum = ctrl.path.values[i] + noise.path.values[i];
            assert!((both.path.values[i] - sum).abs() < 1e-12);
        }
    }

    #[test]
    fn log_weight_formula() {
        let g = GridSpec::new(1.0, 8, 2.0, 16).unwrap();
        let h = ControlField::from_fn(g, |_, x| 0.5 + 0.1 * x);
        let eps = 0.2;
        let w = sample_noise(&g, 5, 0);
        let cfg = SolveConfig::new(unit(), g, eps).with_control(h.clone());
        let sol = solve_spde_with_noise(&cfg, Noise::Given(&w)).unwrap();
        let cross: f64 = h.values.iter().zip(&w.increments).map(|(a, b)| a * b).sum();
        let sq: f64 = h.values.iter().map(|a| a * a).sum::<f64>() * g.dt() * g.dx();
        let want = -cross / eps.sqrt() - sq / (2.0 * eps);
        assert!((sol.log_weight.unwrap() - want).abs() < 1e-12);
        assert!(solve_spde_with_noise(&cfg, Noise::Off).unwrap().log_weight.is_none());
    }

    #[test]
    fn unstable_step_rejected() {
        let g = GridSpec::new(10.0, 10, 4.0, 64).unwrap();
        let cfg = SolveConfig::new(builtin("lipschitz_tanh").unwrap(), g, 0.0);
        assert!(matches!(solve_spde(&cfg), Err(Error::Unstable { .. })));
    }

    #[test]
    fn blow_up_reports_location() {
        let g = GridSpec::new(1.0, 20, 4.0, 64).unwrap();
        let mut set = builtin("ulogu_bounded_sigma").unwrap();
        set.drift = ScalarMap::custom("u^3", |u| u * u * u, |u| 3.0 * u * u);
        let cfg = SolveConfig::new(set, g, 0.0).with_u0(Field::from_fn(g, |x| 50.0 * (-x * x).exp()));
        match solve_spde(&cfg) {
            Err(Error::BlowUp { step, t, .. }) => {
                assert!(step >= 1 && step <= g.time_steps);
                assert!((t - g.t(step)).abs() < 1e-15);
            }
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    #[test]
    fn negative_eps_rejected() {
        let g = GridSpec::new(1.0, 10, 4.0, 64).unwrap();
        assert!(matches!(solve_spde(&SolveConfig::new(unit(), g, -1.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn explosion_small_window_near_point_mean() {
        let t = explosion_demo(1.0, &[0.125, 1.0, 4.0, 16.0], 400, 2).unwrap();
        assert!(t.strictly_increasing);
        assert!((t.point_mean / t.point_reference - 1.0).abs() < 0.1, "{t:?}");
        assert!(t.rows[0].mean_sup >= t.point_mean);
    }
}
