//! Tempered norms, the metrics `d` and `d~`, and the time-dependent weight
//! `exp(-lambda |x| e^{beta t})`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec, Trajectory};

/// `log_+ u = log(max(u, 1))`; in particular `log_+ 0 = 0`.
#[inline]
pub fn log_plus(u: f64) -> f64 {
    if u > 1.0 {
        u.ln()
    } else {
        0.0
    }
}

/// `beta(kappa, lambda) = max(lambda^2 / 2, 4 kappa)`.
pub fn beta(kappa: f64, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::domain(format!("weight rate lambda must be > 0, got {lambda}")));
    }
    if !(kappa >= 0.0) || !kappa.is_finite() {
        return Err(Error::domain(format!("growth constant kappa must be >= 0, got {kappa}")));
    }
    Ok((0.5 * lambda * lambda).max(4.0 * kappa))
}

/// Largest horizon on which the weighted fixed-point estimate closes:
/// `(1/(2 beta)) [1 + log((4 beta / lambda^2) log(beta / (2 kappa)))]`.
pub fn t_star(kappa: f64, lambda: f64) -> Result<f64> {
    let b = beta(kappa, lambda)?;
    if kappa == 0.0 {
        return Err(Error::domain("t_star needs kappa > 0 (log beta/(2 kappa) is undefined)"));
    }
    let inner = (4.0 * b / (lambda * lambda)) * (b / (2.0 * kappa)).ln();
    Ok((1.0 + inner.ln()) / (2.0 * b))
}

/// `(kappa/beta) exp((lambda^2 / (4 beta)) e^{2 beta T - 1})`; at most 1/2 exactly when `T <= t_star`.
pub fn t_star_condition(kappa: f64, lambda: f64, horizon: f64) -> Result<f64> {
    let b = beta(kappa, lambda)?;
    Ok(kappa / b * ((lambda * lambda / (4.0 * b)) * (2.0 * b * horizon - 1.0).exp()).exp())
}

/// `(lambda, kappa)` together with the derived `beta` and `t_star`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightParams {
    pub lambda: f64,
    pub kappa: f64,
    pub beta: f64,
    /// Infinite when `kappa = 0`.
    pub t_star: f64,
}

impl WeightParams {
    pub fn new(kappa: f64, lambda: f64) -> Result<Self> {
        let beta = beta(kappa, lambda)?;
        let t_star = if kappa == 0.0 {
            f64::INFINITY
        } else {
            t_star(kappa, lambda)?
        };
        Ok(WeightParams {
            lambda,
            kappa,
            beta,
            t_star,
        })
    }
}

/// A grid supremum together with the bound on what the window misses.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WindowedSup {
    pub value: f64,
    /// `max|f| e^{-lambda L}`: the weighted value just inside the window edge.
    pub truncation_bound: f64,
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0) {
        return Err(Error::domain(format!("weight rate lambda must be > 0, got {lambda}")));
    }
    Ok(())
}

fn weighted_max(values: &[f64], xs: impl Iterator<Item = f64>, lambda: f64) -> f64 {
    values
        .iter()
        .zip(xs)
        .fold(0.0, |m, (v, x)| m.max(v.abs() * (-lambda * x.abs()).exp()))
}

/// `|f|_(-lambda) = sup_x |f(x)| e^{-lambda|x|}` over the grid.
pub fn tem_norm(f: &Field, lambda: f64) -> Result<WindowedSup> {
    check_lambda(lambda)?;
    let g = f.grid;
    Ok(WindowedSup {
        value: weighted_max(&f.values, (0..g.space_points).map(|j| g.x(j)), lambda),
        truncation_bound: f.max_abs() * (-lambda * g.half_width).exp(),
    })
}

/// Truncated series `sum_{n <= N} 2^{-n} min(1, |f - g|_(-1/n))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MetricValue {
    pub value: f64,
    /// `2^{-N}`: the omitted terms sum to at most this.
    pub tail_bound: f64,
}

pub const DEFAULT_METRIC_TERMS: usize = 20;

fn metric_rows(a: &[f64], b: &[f64], xs: &[f64], terms: usize) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(p, q)| (p - q).abs()).collect();
    let mut total = 0.0;
    let mut scale = 1.0;
    for n in 1..=terms {
        scale *= 0.5;
        let lambda = 1.0 / n as f64;
        let norm = weighted_max(&diff, xs.iter().copied(), lambda);
        total += scale * norm.min(1.0);
    }
    total
}

pub fn tem_metric(f: &Field, g: &Field, terms: usize) -> Result<MetricValue> {
    f.grid.same_as(&g.grid)?;
    if terms == 0 {
        return Err(Error::domain("metric needs at least one series term"));
    }
    Ok(MetricValue {
        value: metric_rows(&f.values, &g.values, &f.grid.xs(), terms),
        tail_bound: 0.5f64.powi(terms as i32),
    })
}

/// `d~(F, G) = sup_t d(F(t), G(t))` over the time nodes.
pub fn path_metric(a: &Trajectory, b: &Trajectory, terms: usize) -> Result<MetricValue> {
    a.grid.same_as(&b.grid)?;
    if terms == 0 {
        return Err(Error::domain("metric needs at least one series term"));
    }
    let xs = a.grid.xs();
    let value = (0..a.rows()).fold(0.0, |m: f64, k| m.max(metric_rows(a.row(k), b.row(k), &xs, terms)));
    Ok(MetricValue {
        value,
        tail_bound: 0.5f64.powi(terms as i32),
    })
}

/// Precomputed weights `e^{-|x_j|/n}` for evaluating `d` row by row.
#[derive(Clone, Debug)]
pub struct MetricWeights {
    terms: usize,
    table: Vec<Vec<f64>>,
}

impl MetricWeights {
    pub fn new(grid: &GridSpec, terms: usize) -> Result<Self> {
        if terms == 0 {
            return Err(Error::domain("metric needs at least one series term"));
        }
        let table = (1..=terms)
            .map(|n| grid.xs().iter().map(|x| (-x.abs() / n as f64).exp()).collect())
            .collect();
        Ok(MetricWeights { terms, table })
    }

    /// `d(a, b)` for two profiles on the grid.
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut total = 0.0;
        let mut scale = 1.0;
        for w in &self.table {
            scale *= 0.5;
            let norm = a
                .iter()
                .zip(b)
                .zip(w)
                .fold(0.0f64, |m, ((p, q), w)| m.max((p - q).abs() * w));
            total += scale * norm.min(1.0);
        }
        total
    }

    pub fn tail_bound(&self) -> f64 {
        0.5f64.powi(self.terms as i32)
    }
}

/// `sup_{t, x} |F(t,x)| exp(-lambda |x| e^{beta t})` over the grid.
pub fn time_weighted_sup(path: &Trajectory, w: &WeightParams) -> f64 {
    let g = path.grid;
    let mut best = 0.0f64;
    for k in 0..path.rows() {
        let rate = w.lambda * (w.beta * g.t(k)).exp();
        for (j, v) in path.row(k).iter().enumerate() {
            best = best.max(v.abs() * (-rate * g.x(j).abs()).exp());
        }
    }
    best
}

/// [`time_weighted_sup`] of `a - b` without allocating.
pub fn time_weighted_distance(a: &Trajectory, b: &Trajectory, w: &WeightParams) -> Result<f64> {
    a.grid.same_as(&b.grid)?;
    let g = a.grid;
    let mut best = 0.0f64;
    for k in 0..a.rows() {
        let rate = w.lambda * (w.beta * g.t(k)).exp();
        for (j, (p, q)) in a.row(k).iter().zip(b.row(k)).enumerate() {
            best = best.max((p - q).abs() * (-rate * g.x(j).abs()).exp());
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_weights_match_path_metric() {
        let g = GridSpec::new(1.0, 5, 4.0, 64).unwrap();
        let a = Trajectory::from_fn(g, |t, x| (x + t).sin() * 3.0);
        let b = Trajectory::from_fn(g, |t, x| (x * t).cos());
        let w = MetricWeights::new(&g, DEFAULT_METRIC_TERMS).unwrap();
        let direct = path_metric(&a, &b, DEFAULT_METRIC_TERMS).unwrap().value;
        let rows = (0..a.rows()).fold(0.0f64, |m, k| m.max(w.distance(a.row(k), b.row(k))));
        assert!((direct - rows).abs() < 1e-15);
    }
    use proptest::prelude::*;

    #[test]
    fn beta_cases() {
        assert_eq!(beta(1.0, 1.0).unwrap(), 4.0);
        assert_eq!(beta(0.0, 2.0).unwrap(), 2.0);
        let l = 0.7;
        assert_eq!(beta(l * l / 8.0, l).unwrap(), l * l / 2.0);
        assert!(beta(1.0, 0.0).is_err());
        assert!(beta(-1.0, 1.0).is_err());
    }

    #[test]
    fn t_star_reference_value() {
        let t = t_star(1.0, 0.1).unwrap();
        // beta = 4: (1 + log(1600 log 2)) / 8
        let want = (1.0 + (1600.0 * 2f64.ln()).ln()) / 8.0;
        assert!((t - want).abs() < 1e-14);
        assert!((t - 1.001_405_748_455_776).abs() < 1e-12);
        assert!((t_star_condition(1.0, 0.1, t).unwrap() - 0.5).abs() < 1e-9);
        assert!(t_star(0.0, 1.0).is_err());
    }

    #[test]
    fn t_star_grows_as_lambda_shrinks() {
        let mut prev = 0.0;
        for l in [1.0, 0.1, 1e-2, 1e-4, 1e-8] {
            let t = t_star(1.0, l).unwrap();
            assert!(t > prev);
            prev = t;
        }
    }

    #[test]
    fn log_plus_floor() {
        assert_eq!(log_plus(0.0), 0.0);
        assert_eq!(log_plus(0.5), 0.0);
        assert_eq!(log_plus(1.0), 0.0);
        assert!((log_plus(std::f64::consts::E) - 1.0).abs() < 1e-15);
    }

    fn grid() -> GridSpec {
        GridSpec::new(1.0, 4, 8.0, 64).unwrap()
    }

    #[test]
    fn tem_norm_cases() {
        let g = grid();
        assert_eq!(tem_norm(&Field::zeros(g), 1.0).unwrap().value, 0.0);
        assert_eq!(tem_norm(&Field::from_fn(g, |_| 2.5), 0.3).unwrap().value, 2.5);
        let f = Field::from_fn(g, |x| (0.6 * x.abs() / 2.0).exp());
        assert!((tem_norm(&f, 0.6).unwrap().value - 1.0).abs() < 1e-15);
        assert!(tem_norm(&f, 0.0).is_err());
    }

    #[test]
    fn metric_saturates() {
        let g = grid();
        let f = Field::zeros(g);
        let big = Field::from_fn(g, |_| 1e6);
        let d = tem_metric(&f, &big, 20).unwrap();
        assert!((d.value - (1.0 - 0.5f64.powi(20))).abs() < 1e-15);
        assert_eq!(tem_metric(&f, &f, 20).unwrap().value, 0.0);
    }

    #[test]
    fn path_metric_at_final_step() {
        let g = grid();
        let a = Trajectory::zeros(g);
        let mut b = a.clone();
        for v in b.row_mut(g.time_steps) {
            *v = 0.3;
        }
        let d = path_metric(&a, &b, 20).unwrap().value;
        let want = tem_metric(&a.last(), &b.last(), 20).unwrap().value;
        assert_eq!(d, want);
    }

    #[test]
    fn time_weighted_sup_cases() {
        let g = grid();
        let w = WeightParams::new(0.5, 1.0).unwrap();
        assert_eq!(time_weighted_sup(&Trajectory::zeros(g), &w), 0.0);
        assert_eq!(time_weighted_sup(&Trajectory::from_fn(g, |_, _| 1.0), &w), 1.0);
        let f = Trajectory::from_fn(g, |t, x| (t + 1.0) * (x * 0.3).cos() * 3.0);
        let floor = (-w.lambda * g.half_width * (w.beta * g.final_time).exp()).exp() * f.max_abs();
        assert!(time_weighted_sup(&f, &w) >= floor);
    }

    fn field_strategy() -> impl Strategy<Value = Field> {
        prop::collection::vec(-50.0f64..50.0, 64).prop_map(|v| Field::new(grid(), v).unwrap())
    }

    proptest! {
        #[test]
        fn metric_axioms(f in field_strategy(), g in field_strategy(), h in field_strategy()) {
            let d = |a: &Field, b: &Field| tem_metric(a, b, 20).unwrap().value;
            prop_assert_eq!(d(&f, &f), 0.0);
            prop_assert!((d(&f, &g) - d(&g, &f)).abs() <= 1e-12);
            prop_assert!(d(&f, &h) <= d(&f, &g) + d(&g, &h) + 1e-12);
        }

        #[test]
        fn path_metric_triangle(seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut mk = || Trajectory::from_rows(grid(), (0..5 * 64).map(|_| rng.random_range(-3.0..3.0)).collect()).unwrap();
            let (a, b, c) = (mk(), mk(), mk());
            let d = |p: &Trajectory, q: &Trajectory| path_metric(p, q, 20).unwrap().value;
            prop_assert_eq!(d(&a, &a), 0.0);
            prop_assert!((d(&a, &b) - d(&b, &a)).abs() <= 1e-12);
            prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-12);
        }

        #[test]
        fn weighted_sup_monotone_in_lambda(seed in any::<u64>(), l1 in 0.01f64..3.0, l2 in 0.01f64..3.0, kappa in 0.0f64..2.0) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let f = Trajectory::from_rows(grid(), (0..5 * 64).map(|_| rng.random_range(-3.0..3.0)).collect()).unwrap();
            let (lo, hi) = if l1 <= l2 { (l1, l2) } else { (l2, l1) };
            // Same beta for both, so only lambda moves.
            let mut w_lo = WeightParams::new(kappa, lo).unwrap();
            let mut w_hi = WeightParams::new(kappa, hi).unwrap();
            w_lo.beta = w_hi.beta.max(w_lo.beta);
            w_hi.beta = w_lo.beta;
            prop_assert!(time_weighted_sup(&f, &w_hi) <= time_weighted_sup(&f, &w_lo));
        }

        #[test]
        fn t_star_root_condition(kappa in 1e-3f64..10.0, lambda in 1e-3f64..4.0) {
            let t = t_star(kappa, lambda).unwrap();
            let c = t_star_condition(kappa, lambda, t).unwrap();
            prop_assert!((c - 0.5).abs() < 1e-9, "kappa={} lambda={} c={}", kappa, lambda, c);
        }

        #[test]
        fn t_star_nondecreasing_when_lambda_halves(kappa in 0.01f64..10.0, lambda in 1e-3f64..1.0) {
            prop_assume!(4.0 * kappa >= lambda * lambda / 2.0);
            prop_assert!(t_star(kappa, lambda / 2.0).unwrap() >= t_star(kappa, lambda).unwrap());
        }
    }
}
