//! The controlled deterministic equation
//!
//! `dY = (1/2) ΔY dt + b(Y) dt + sigma(Y) h dt`, `Y(0) = u0`,
//!
//! solved by Picard iteration of its discretized mild map, directly for
//! Lipschitz coefficients and through the mollified sequence `(b_n, sigma_n)`
//! for log-Lipschitz drifts.

use rand::Rng;
use serde::Serialize;

use crate::coefficients::{CoefficientSet, Regime};
use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec, Trajectory};
use crate::rng::stream_rng;
use crate::scheme::{ForcingFilter, Stepper};
use crate::spde::{drive, Noise, BLOW_UP_LIMIT};
use crate::weights::{time_weighted_distance, time_weighted_sup, WeightParams};

pub use crate::control::{int_map, ControlField};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SkeletonOptions {
    /// Stop once successive iterates differ by less than this in the time-weighted sup.
    pub tol: f64,
    pub max_iter: usize,
    /// `lambda` of the stopping norm.
    pub lambda: f64,
    pub filter: ForcingFilter,
    /// Allow coefficient sets outside the Lipschitz regime in
    /// [`solve_skeleton_lipschitz`]; the caller vouches for local Lipschitz
    /// behaviour on the range the solution visits.
    pub assume_local_lipschitz: bool,
}

impl Default for SkeletonOptions {
    fn default() -> Self {
        SkeletonOptions {
            tol: 1e-8,
            max_iter: 200,
            lambda: 1.0,
            filter: ForcingFilter::default(),
            assume_local_lipschitz: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SkeletonSolution {
    pub path: Trajectory,
    pub iterations: usize,
    /// Time-weighted sup distance between the last two iterates.
    pub residual: f64,
}

/// Initial iterate of the Picard loop.
#[derive(Clone, Debug)]
pub enum PicardStart {
    Zero,
    /// `Y^0(t) = P_t u0`.
    HeatFlow,
    Given(Trajectory),
}

fn check_inputs(u0: &Field, h: &ControlField) -> Result<GridSpec> {
    u0.grid.same_as(&h.grid)?;
    Ok(h.grid)
}

fn stop_weight(coeffs: &CoefficientSet, lambda: f64) -> Result<WeightParams> {
    coeffs.regime.validate()?;
    WeightParams::new(coeffs.regime.growth_constant(), lambda)
}

/// `P_t u0` on the time nodes.
pub fn heat_flow(u0: &Field, filter: ForcingFilter) -> Trajectory {
    let g = u0.grid;
    let mut stepper = Stepper::new(g, filter);
    let mut out = Trajectory::zeros(g);
    let mut cur = u0.values.clone();
    out.row_mut(0).copy_from_slice(&cur);
    for k in 0..g.time_steps {
        stepper.heat(&mut cur);
        out.row_mut(k + 1).copy_from_slice(&cur);
    }
    out
}

/// One application of the discretized mild map:
/// `Phi(Y)_{k+1} = S Phi(Y)_k + Q [dt b(Y_k) + dt sigma(Y_k) h_k]`, `Phi(Y)_0 = u0`.
pub fn mild_map(coeffs: &CoefficientSet, u0: &Field, h: &ControlField, y: &Trajectory, filter: ForcingFilter) -> Result<Trajectory> {
    let g = check_inputs(u0, h)?;
    y.grid.same_as(&g)?;
    let mut stepper = Stepper::new(g, filter);
    let mut out = Trajectory::zeros(g);
    apply_mild_map(&mut stepper, coeffs, u0, h, y, &mut out)?;
    Ok(out)
}

fn apply_mild_map(
    stepper: &mut Stepper,
    coeffs: &CoefficientSet,
    u0: &Field,
    h: &ControlField,
    y: &Trajectory,
    out: &mut Trajectory,
) -> Result<()> {
    let g = stepper.grid;
    let n = g.space_points;
    let dt = g.dt();
    let mut cur = u0.values.clone();
    let mut next = vec![0.0; n];
    let mut forcing = vec![0.0; n];
    out.row_mut(0).copy_from_slice(&cur);
    for k in 0..g.time_steps {
        for ((f, &v), &hv) in forcing.iter_mut().zip(y.row(k)).zip(h.row(k)) {
            let mut x = coeffs.drift.eval(v);
            if hv != 0.0 {
                x += coeffs.diffusion.eval(v) * hv;
            }
            *f = dt * x;
        }
        stepper.step(&cur, &forcing, &mut next);
        if let Some((j, &value)) = next.iter().enumerate().find(|(_, v)| !(v.abs() <= BLOW_UP_LIMIT)) {
            return Err(Error::BlowUp {
                step: k + 1,
                index: j,
                t: g.t(k + 1),
                x: g.x(j),
                value,
            });
        }
        std::mem::swap(&mut cur, &mut next);
        out.row_mut(k + 1).copy_from_slice(&cur);
    }
    Ok(())
}

/// Picard iteration without any regime check.
pub fn picard(
    coeffs: &CoefficientSet,
    u0: &Field,
    h: &ControlField,
    opts: &SkeletonOptions,
    start: PicardStart,
) -> Result<SkeletonSolution> {
    let g = check_inputs(u0, h)?;
    if !(opts.tol > 0.0) {
        return Err(Error::domain(format!("Picard tolerance must be > 0, got {}", opts.tol)));
    }
    let w = stop_weight(coeffs, opts.lambda)?;
    let mut y = match start {
        PicardStart::Zero => Trajectory::zeros(g),
        PicardStart::HeatFlow => heat_flow(u0, opts.filter),
        PicardStart::Given(t) => {
            t.grid.same_as(&g)?;
            t
        }
    };
    let mut stepper = Stepper::new(g, opts.filter);
    let mut next = Trajectory::zeros(g);
    let mut residual = f64::INFINITY;
    for it in 1..=opts.max_iter {
        apply_mild_map(&mut stepper, coeffs, u0, h, &y, &mut next)?;
        residual = time_weighted_distance(&next, &y, &w)?;
        std::mem::swap(&mut y, &mut next);
        if residual < opts.tol {
            return Ok(SkeletonSolution {
                path: y,
                iterations: it,
                residual,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iter,
        residual,
    })
}

/// Picard fixed point for Lipschitz coefficients, started from `P_t u0`.
pub fn solve_skeleton_lipschitz(coeffs: &CoefficientSet, u0: &Field, h: &ControlField, opts: &SkeletonOptions) -> Result<SkeletonSolution> {
    if !coeffs.is_lipschitz() && !opts.assume_local_lipschitz {
        return Err(Error::domain(format!(
            "coefficient set `{}` is not in the Lipschitz regime; use the mollified solver or assume local Lipschitz",
            coeffs.name
        )));
    }
    picard(coeffs, u0, h, opts, PicardStart::HeatFlow)
}

/// The fixed point of the discretized mild map, obtained in one forward pass.
///
/// Row `k + 1` of the map only reads row `k` of its argument, so the fixed
/// point is the explicit recursion; Picard iteration reaches it in at most
/// `n_t` sweeps.
pub fn skeleton_path(coeffs: &CoefficientSet, u0: &Field, h: &ControlField, filter: ForcingFilter) -> Result<Trajectory> {
    let g = check_inputs(u0, h)?;
    let mut stepper = Stepper::new(g, filter);
    let mut path = Trajectory::zeros(g);
    drive(&mut stepper, coeffs, &u0.values, 0.0, Some(h), Noise::Off, |k, u| {
        path.row_mut(k).copy_from_slice(u)
    })?;
    Ok(path)
}

pub const DEFAULT_N_SCHEDULE: [u32; 5] = [8, 16, 32, 64, 128];

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct MollifiedRow {
    pub n: u32,
    pub iterations: usize,
    pub weighted_sup: f64,
    /// Time-weighted sup distance to the previous row's solution.
    pub gap: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct MollifiedSolution {
    /// Solution for the last `n` in the schedule.
    pub path: Trajectory,
    pub rows: Vec<MollifiedRow>,
    pub gap_tol: f64,
    /// The last two gaps decrease and the final gap is below `gap_tol`.
    pub converged: bool,
}

impl MollifiedSolution {
    pub fn gaps(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.gap).collect()
    }

    pub fn gaps_decreasing(&self) -> bool {
        self.gaps().windows(2).all(|p| p[1] < p[0])
    }
}

/// Solves the skeleton equation with `(b_n, sigma_n)` for each `n` of the
/// schedule, warm-starting each Picard loop from the previous solution.
/// Failing to converge is reported through the flag, not as an error.
pub fn solve_skeleton_mollified(
    coeffs: &CoefficientSet,
    u0: &Field,
    h: &ControlField,
    n_schedule: &[u32],
    gap_tol: f64,
    opts: &SkeletonOptions,
) -> Result<MollifiedSolution> {
    let (paths, rows) = mollified_sequence(coeffs, u0, h, n_schedule, opts)?;
    let gaps: Vec<f64> = rows.iter().filter_map(|r| r.gap).collect();
    let converged = match gaps.as_slice() {
        [] => false,
        [only] => *only < gap_tol,
        [.., a, b] => b < a && *b < gap_tol,
    };
    Ok(MollifiedSolution {
        path: paths.into_iter().last().expect("schedule is non-empty"),
        rows,
        gap_tol,
        converged,
    })
}

fn mollified_sequence(
    coeffs: &CoefficientSet,
    u0: &Field,
    h: &ControlField,
    n_schedule: &[u32],
    opts: &SkeletonOptions,
) -> Result<(Vec<Trajectory>, Vec<MollifiedRow>)> {
    if n_schedule.is_empty() {
        return Err(Error::domain("mollification schedule is empty"));
    }
    let w = stop_weight(coeffs, opts.lambda)?;
    let mut paths: Vec<Trajectory> = Vec::with_capacity(n_schedule.len());
    let mut rows = Vec::with_capacity(n_schedule.len());
    for &n in n_schedule {
        let set = coeffs.mollified(n)?;
        let start = match paths.last() {
            Some(p) => PicardStart::Given(p.clone()),
            None => PicardStart::HeatFlow,
        };
        let sol = picard(&set, u0, h, opts, start)?;
        let gap = match paths.last() {
            Some(p) => Some(time_weighted_distance(&sol.path, p, &w)?),
            None => None,
        };
        rows.push(MollifiedRow {
            n,
            iterations: sol.iterations,
            weighted_sup: time_weighted_sup(&sol.path, &w),
            gap,
        });
        paths.push(sol.path);
    }
    Ok((paths, rows))
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ProbeStart {
    pub start: String,
    pub iterations: usize,
    /// Time-weighted sup distance to the first start's fixed point.
    pub distance: f64,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct UniquenessReport {
    pub coefficients: String,
    pub starts: Vec<ProbeStart>,
    pub max_distance: f64,
    pub tolerance: f64,
    pub agreed: bool,
}

/// Re-solves from `Y^0 = 0`, `Y^0 = P_t u0` and a random field bounded by 1,
/// and checks that the fixed points agree within `10 tol`. Coefficients are
/// evaluated directly, whatever their regime.
pub fn uniqueness_probe(coeffs: &CoefficientSet, u0: &Field, h: &ControlField, opts: &SkeletonOptions, seed: u64) -> Result<UniquenessReport> {
    let g = check_inputs(u0, h)?;
    let w = stop_weight(coeffs, opts.lambda)?;
    let mut rng = stream_rng(seed, 301, 0);
    let random = Trajectory::from_rows(g, (0..(g.time_steps + 1) * g.space_points).map(|_| rng.random_range(-1.0..=1.0)).collect())?;
    let starts = [
        ("zero", PicardStart::Zero),
        ("heat-flow", PicardStart::HeatFlow),
        ("random", PicardStart::Given(random)),
    ];
    let mut reference: Option<Trajectory> = None;
    let mut out = Vec::new();
    for (label, start) in starts {
        let sol = picard(coeffs, u0, h, opts, start)?;
        let distance = match &reference {
            Some(r) => time_weighted_distance(&sol.path, r, &w)?,
            None => 0.0,
        };
        out.push(ProbeStart {
            start: label.into(),
            iterations: sol.iterations,
            distance,
        });
        reference.get_or_insert(sol.path);
    }
    let max_distance = out.iter().fold(0.0f64, |m, s| m.max(s.distance));
    let tolerance = 10.0 * opts.tol;
    Ok(UniquenessReport {
        coefficients: coeffs.name.clone(),
        starts: out,
        max_distance,
        tolerance,
        agreed: max_distance <= tolerance,
    })
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct UniformBoundRow {
    pub n: u32,
    /// `sup_{t,x} |Y^n| exp(-lambda |x| e^{beta t})`.
    pub weighted_sup: f64,
    /// Same norm of the control part `V^n = int P_{t-s} sigma_n(Y^n) h ds`.
    pub control_weighted_sup: f64,
    /// Fitted exponents of the maximal increments of `V^n` on the central window.
    pub time_holder: Option<f64>,
    pub space_holder: Option<f64>,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct UniformBoundReport {
    pub lambda: f64,
    pub beta: f64,
    pub rows: Vec<UniformBoundRow>,
    pub max_weighted_sup: f64,
    pub bounded: bool,
}

/// Half-width of the window on which Hölder exponents are fitted.
const HOLDER_WINDOW: f64 = 1.0;
const HOLDER_LAGS: [usize; 5] = [1, 2, 4, 8, 16];

/// Boundedness of `Y^n` in the time-weighted norm uniformly over the schedule,
/// and the equicontinuity of the control part through fitted Hölder exponents.
pub fn uniform_bound_diagnostic(
    coeffs: &CoefficientSet,
    u0: &Field,
    h: &ControlField,
    lambda: f64,
    n_schedule: &[u32],
    opts: &SkeletonOptions,
) -> Result<UniformBoundReport> {
    let kappa = match coeffs.regime {
        Regime::H1LogLipschitz(c) => c.c1,
        Regime::H0Lipschitz { lipschitz } => lipschitz,
    };
    let w = WeightParams::new(kappa, lambda)?;
    let (paths, _) = mollified_sequence(coeffs, u0, h, n_schedule, opts)?;
    let g = h.grid;
    let mut rows = Vec::with_capacity(paths.len());
    for (&n, y) in n_schedule.iter().zip(&paths) {
        let set = coeffs.mollified(n)?;
        let v = control_part(&set, y, h, opts.filter);
        let (time_holder, space_holder) = holder_exponents(&v, &g);
        rows.push(UniformBoundRow {
            n,
            weighted_sup: time_weighted_sup(y, &w),
            control_weighted_sup: time_weighted_sup(&v, &w),
            time_holder,
            space_holder,
        });
    }
    let max_weighted_sup = rows.iter().fold(0.0f64, |m, r| m.max(r.weighted_sup));
    Ok(UniformBoundReport {
        lambda,
        beta: w.beta,
        bounded: max_weighted_sup.is_finite(),
        max_weighted_sup,
        rows,
    })
}

/// `V_{k+1} = S V_k + Q dt sigma(Y_k) h_k`, `V_0 = 0`.
fn control_part(coeffs: &CoefficientSet, y: &Trajectory, h: &ControlField, filter: ForcingFilter) -> Trajectory {
    let g = h.grid;
    let dt = g.dt();
    let mut stepper = Stepper::new(g, filter);
    let mut v = Trajectory::zeros(g);
    let mut cur = vec![0.0; g.space_points];
    let mut next = vec![0.0; g.space_points];
    let mut forcing = vec![0.0; g.space_points];
    for k in 0..g.time_steps {
        for ((f, &yv), &hv) in forcing.iter_mut().zip(y.row(k)).zip(h.row(k)) {
            *f = dt * coeffs.diffusion.eval(yv) * hv;
        }
        stepper.step(&cur, &forcing, &mut next);
        std::mem::swap(&mut cur, &mut next);
        v.row_mut(k + 1).copy_from_slice(&cur);
    }
    v
}

/// Slopes of `log max |increment|` against `log lag` in time and in space,
/// over `|x| <= 1`. `None` when the field is flat or too few lags fit.
pub fn holder_exponents(v: &Trajectory, g: &GridSpec) -> (Option<f64>, Option<f64>) {
    let window: Vec<usize> = (0..g.space_points).filter(|&j| g.x(j).abs() <= HOLDER_WINDOW).collect();
    let mut time = Vec::new();
    for &lag in HOLDER_LAGS.iter().filter(|&&l| 2 * l <= g.time_steps) {
        let mut m = 0.0f64;
        for k in 0..=g.time_steps - lag {
            for &j in &window {
                m = m.max((v.at(k + lag, j) - v.at(k, j)).abs());
            }
        }
        time.push((lag as f64 * g.dt(), m));
    }
    let mut space = Vec::new();
    for &lag in HOLDER_LAGS.iter().filter(|&&l| 2 * l <= window.len()) {
        let mut m = 0.0f64;
        for k in 0..=g.time_steps {
            for &j in window.iter().take(window.len() - lag) {
                m = m.max((v.at(k, j + lag) - v.at(k, j)).abs());
            }
        }
        space.push((lag as f64 * g.dx(), m));
    }
    (log_log_slope(&time), log_log_slope(&space))
}

fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 || points.iter().any(|&(_, m)| !(m > 0.0)) {
        return None;
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    Some(crate::spde::least_squares_slope(&xs, &ys))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{builtin, ScalarMap, BUILTIN_NAMES};
    use crate::control::builtin_control;
    use crate::heat_kernel::p;
    use crate::quadrature::{integrate, QuadratureOptions};

    fn unit() -> CoefficientSet {
        builtin("zero_drift_unit_sigma").unwrap()
    }

    fn bump(g: GridSpec) -> Field {
        Field::from_fn(g, |x| 0.5 * (-x * x).exp())
    }

    #[test]
    fn duhamel_reference() {
        // g(y) = exp(-y^2) = sqrt(pi) p_{1/2}(y), so P_r g = sqrt(pi) p_{r + 1/2}.
        let g = GridSpec::default();
        let h = ControlField::from_fn(g, |_, y| (-y * y).exp());
        let sol = solve_skeleton_lipschitz(&unit(), &Field::zeros(g), &h, &SkeletonOptions::default()).unwrap();
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for k in [25, 50, 100] {
            for j in (0..g.space_points).step_by(8) {
                let (t, x) = (g.t(k), g.x(j));
                let pi = std::f64::consts::PI;
                let r = integrate(|r| pi.sqrt() * p(r + 0.5, x), 0.0, t, QuadratureOptions::default()).unwrap();
                worst = worst.max((sol.path.at(k, j) - r.value).abs());
                scale = scale.max(r.value.abs());
            }
        }
        assert!(worst / scale < 1e-3, "relative error {}", worst / scale);
    }

    #[test]
    fn zero_drift_zero_control_is_heat_flow() {
        let g = GridSpec::new(1.0, 40, 6.0, 128).unwrap();
        let u0 = bump(g);
        let sol = solve_skeleton_lipschitz(&unit(), &u0, &ControlField::zeros(g), &SkeletonOptions::default()).unwrap();
        assert_eq!(sol.iterations, 1);
        let flow = heat_flow(&u0, ForcingFilter::default());
        assert!(sol.path.max_abs_diff(&flow).unwrap() < 1e-14);
    }

    #[test]
    fn linear_drift_scales_heat_flow() {
        let a = -0.5;
        let g = GridSpec::new(1.0, 2000, 8.0, 256).unwrap();
        let set = CoefficientSet {
            name: "au".into(),
            drift: ScalarMap::Affine { slope: a, intercept: 0.0 },
            diffusion: ScalarMap::zero(),
            regime: Regime::H0Lipschitz { lipschitz: a.abs() },
        };
        let u0 = Field::from_fn(g, |x| p(0.5, x));
        let sol = solve_skeleton_lipschitz(&set, &u0, &ControlField::zeros(g), &SkeletonOptions::default()).unwrap();
        for j in 0..g.space_points {
            let want = (a * 1.0f64).exp() * p(1.5, g.x(j));
            assert!((sol.path.at(g.time_steps, j) - want).abs() < 1e-4);
        }
    }

    #[test]
    fn fixed_point_equals_recursion_and_residual() {
        let g = GridSpec::new(1.0, 50, 6.0, 128).unwrap();
        let set = builtin("lipschitz_tanh").unwrap();
        let u0 = bump(g);
        let h = ControlField::from_fn(g, |t, x| (1.0 + t) * (-x * x).exp());
        let opts = SkeletonOptions::default();
        let sol = solve_skeleton_lipschitz(&set, &u0, &h, &opts).unwrap();
        let direct = skeleton_path(&set, &u0, &h, opts.filter).unwrap();
        let d = sol.path.max_abs_diff(&direct).unwrap();
        assert!(d < 1e-6, "{d} after {}", sol.iterations);
        let again = mild_map(&set, &u0, &h, &sol.path, opts.filter).unwrap();
        let w = stop_weight(&set, 1.0).unwrap();
        assert!(time_weighted_distance(&again, &sol.path, &w).unwrap() < opts.tol);
    }

    #[test]
    fn log_lipschitz_needs_assumption() {
        let g = GridSpec::new(1.0, 20, 4.0, 64).unwrap();
        let set = builtin("ulogu_bounded_sigma").unwrap();
        let (u0, h) = (bump(g), ControlField::zeros(g));
        let opts = SkeletonOptions::default();
        assert!(matches!(solve_skeleton_lipschitz(&set, &u0, &h, &opts), Err(Error::Domain(_))));
        let relaxed = SkeletonOptions {
            assume_local_lipschitz: true,
            ..opts
        };
        assert!(solve_skeleton_lipschitz(&set, &u0, &h, &relaxed).is_ok());
    }

    #[test]
    fn non_convergence_reported() {
        let g = GridSpec::new(1.0, 50, 4.0, 64).unwrap();
        let opts = SkeletonOptions {
            max_iter: 2,
            ..Default::default()
        };
        let h = ControlField::from_fn(g, |_, x| (-x * x).exp());
        let r = picard(&builtin("lipschitz_tanh").unwrap(), &bump(g), &h, &opts, PicardStart::Zero);
        assert!(matches!(r, Err(Error::NonConvergence { iterations: 2, .. })));
    }

    #[test]
    fn mollified_zero_is_fixed() {
        let g = GridSpec::new(1.0, 20, 4.0, 64).unwrap();
        let set = builtin("ulogu_bounded_sigma").unwrap();
        let sol = solve_skeleton_mollified(&set, &Field::zeros(g), &ControlField::zeros(g), &[8, 16], 1e-3, &SkeletonOptions::default()).unwrap();
        assert!(sol.path.values.iter().all(|&v| v == 0.0));
        assert_eq!(sol.gaps(), vec![0.0]);
    }

    #[test]
    fn mollified_matches_lipschitz_for_h0() {
        let g = GridSpec::new(1.0, 50, 6.0, 128).unwrap();
        let set = builtin("lipschitz_tanh").unwrap();
        let u0 = bump(g);
        let h = ControlField::from_fn(g, |_, x| (-x * x).exp());
        let opts = SkeletonOptions::default();
        let direct = solve_skeleton_lipschitz(&set, &u0, &h, &opts).unwrap();
        let moll = solve_skeleton_mollified(&set, &u0, &h, &[32, 64, 128], 1e-3, &opts).unwrap();
        let w = stop_weight(&set, 1.0).unwrap();
        assert!(time_weighted_distance(&direct.path, &moll.path, &w).unwrap() < 1e-3);
    }

    #[test]
    fn uniqueness_for_builtins() {
        let g = GridSpec::new(1.0, 50, 6.0, 128).unwrap();
        let u0 = bump(g);
        let h = ControlField::from_fn(g, |_, x| (-x * x).exp());
        for name in BUILTIN_NAMES {
            let r = uniqueness_probe(&builtin(name).unwrap(), &u0, &h, &SkeletonOptions::default(), 1).unwrap();
            assert!(r.agreed, "{r:?}");
        }
    }

    #[test]
    fn uniform_bound_zero_case() {
        let g = GridSpec::new(1.0, 20, 4.0, 64).unwrap();
        let set = builtin("ulogu_bounded_sigma").unwrap();
        let r = uniform_bound_diagnostic(&set, &Field::zeros(g), &ControlField::zeros(g), 1.0, &[8, 16], &SkeletonOptions::default()).unwrap();
        assert!(r.rows.iter().all(|row| row.weighted_sup == 0.0 && row.time_holder.is_none()));
    }

    #[test]
    fn uniform_bound_stable_along_schedule() {
        let g = GridSpec::new(1.0, 50, 8.0, 256).unwrap();
        let set = builtin("ulogu_bounded_sigma").unwrap();
        let u0 = Field::from_fn(g, |x| 0.5 * (-x * x).exp());
        let h = builtin_control("pulse", g).unwrap();
        let r = uniform_bound_diagnostic(&set, &u0, &h, 1.0, &DEFAULT_N_SCHEDULE, &SkeletonOptions::default()).unwrap();
        assert!(r.bounded);
        let first = r.rows[0].weighted_sup;
        for row in &r.rows {
            assert!(row.weighted_sup.is_finite() && row.control_weighted_sup > 0.0);
            assert!((row.weighted_sup / first - 1.0).abs() < 0.05, "{:?}", r.rows);
            assert!(row.time_holder.is_some() && row.space_holder.is_some());
        }
    }

    #[test]
    fn holder_exponent_of_smooth_and_rough_paths() {
        let g = GridSpec::new(1.0, 64, 4.0, 128).unwrap();
        let smooth = Trajectory::from_fn(g, |t, x| t + x);
        let (t, s) = holder_exponents(&smooth, &g);
        assert!((t.unwrap() - 1.0).abs() < 1e-9 && (s.unwrap() - 1.0).abs() < 1e-9);
        let rough = Trajectory::from_fn(g, |t, _| t.sqrt());
        assert!((holder_exponents(&rough, &g).0.unwrap() - 0.5).abs() < 0.05);
    }
}
