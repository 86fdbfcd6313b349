//! The Gaussian kernel of `(1/2) d^2/dx^2`, its semigroup on a grid, and
//! numerical certification of the standard kernel estimates.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec};
use crate::quadrature::{integrate, integrate_pieces, Integral, QuadratureOptions};
use crate::report::{summarize, Check, InequalityReport};
use crate::rng::stream_rng;

/// `p_t(x, y) = (2 pi t)^{-1/2} exp(-(x - y)^2 / (2t))`.
pub fn kernel_value(t: f64, x: f64, y: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::domain(format!("heat kernel needs t > 0, got {t}")));
    }
    Ok(p(t, x - y))
}

#[inline]
pub(crate) fn p(t: f64, d: f64) -> f64 {
    (-d * d / (2.0 * t)).exp() / (2.0 * PI * t).sqrt()
}

/// FFT machinery for translation-invariant operators on a grid.
///
/// Operators are Fourier multipliers `m(k^2)`; on a periodic grid the heat
/// multiplier `exp(-k^2 t / 2)` is exactly convolution with the periodized
/// kernel. Non-periodic grids are zero-padded to twice their length.
#[derive(Clone)]
pub struct Spectral {
    len: usize,
    nodes: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    k2: Vec<f64>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral")
            .field("len", &self.len)
            .field("nodes", &self.nodes)
            .finish()
    }
}

impl Spectral {
    pub fn new(grid: &GridSpec) -> Self {
        let nodes = grid.space_points;
        let len = if grid.periodic { nodes } else { 2 * nodes };
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(len);
        let inv = planner.plan_fft_inverse(len);
        let period = len as f64 * grid.dx();
        let k2 = (0..len)
            .map(|i| {
                let m = if i <= len / 2 { i as f64 } else { i as f64 - len as f64 };
                let k = 2.0 * PI * m / period;
                k * k
            })
            .collect();
        Spectral {
            len,
            nodes,
            fwd,
            inv,
            k2,
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Squared wavenumbers in FFT order.
    pub fn k2(&self) -> &[f64] {
        &self.k2
    }

    pub fn buffer(&self) -> Vec<Complex64> {
        vec![Complex64::new(0.0, 0.0); self.len]
    }

    /// Loads real node values into `buf` and transforms forward.
    pub fn forward(&self, values: &[f64], buf: &mut [Complex64]) {
        for (b, &v) in buf.iter_mut().zip(values) {
            *b = Complex64::new(v, 0.0);
        }
        for b in buf[self.nodes..].iter_mut() {
            *b = Complex64::new(0.0, 0.0);
        }
        self.fwd.process(buf);
    }

    /// Forward transform of two real vectors packed as `a + i b`.
    pub fn forward_pair(&self, a: &[f64], b: &[f64], buf: &mut [Complex64]) {
        for ((z, &x), &y) in buf.iter_mut().zip(a).zip(b) {
            *z = Complex64::new(x, y);
        }
        for z in buf[self.nodes..].iter_mut() {
            *z = Complex64::new(0.0, 0.0);
        }
        self.fwd.process(buf);
    }

    /// Inverse transform; writes the normalized real part into `out`.
    pub fn inverse_real(&self, buf: &mut [Complex64], out: &mut [f64]) {
        self.inv.process(buf);
        let scale = 1.0 / self.len as f64;
        for (o, z) in out.iter_mut().zip(buf.iter()) {
            *o = z.re * scale;
        }
    }

    /// Inverse transform; writes real and imaginary parts separately.
    pub fn inverse_pair(&self, buf: &mut [Complex64], re: &mut [f64], im: &mut [f64]) {
        self.inv.process(buf);
        let scale = 1.0 / self.len as f64;
        for ((r, i), z) in re.iter_mut().zip(im.iter_mut()).zip(buf.iter()) {
            *r = z.re * scale;
            *i = z.im * scale;
        }
    }

    /// Multiplies the spectrum of `values` by `table` (FFT order) in place.
    pub fn apply_table(&self, values: &mut [f64], buf: &mut [Complex64], table: &[f64]) {
        self.forward(values, buf);
        for (z, &m) in buf.iter_mut().zip(table) {
            *z *= m;
        }
        self.inverse_real(buf, values);
    }

    /// Applies the multiplier `m(k^2)` to `values` in place.
    pub fn apply(&self, values: &mut [f64], buf: &mut [Complex64], m: impl Fn(f64) -> f64) {
        self.forward(values, buf);
        for (z, &k2) in buf.iter_mut().zip(&self.k2) {
            *z *= m(k2);
        }
        self.inverse_real(buf, values);
    }
}

/// Heat-semigroup multiplier `exp(-k^2 t / 2)`.
#[inline]
pub fn heat_multiplier(k2: f64, t: f64) -> f64 {
    (-0.5 * k2 * t).exp()
}

/// `P_t f` on the grid of `f`; `t = 0` returns `f` unchanged.
pub fn semigroup_apply(f: &Field, t: f64, grid: &GridSpec) -> Result<Field> {
    f.grid.same_as(grid)?;
    if !(t >= 0.0) {
        return Err(Error::domain(format!("semigroup time must be >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(f.clone());
    }
    let spectral = Spectral::new(grid);
    let mut buf = spectral.buffer();
    let mut values = f.values.clone();
    spectral.apply(&mut values, &mut buf, |k2| heat_multiplier(k2, t));
    Ok(Field {
        grid: *grid,
        values,
    })
}

fn quad_opts() -> QuadratureOptions {
    QuadratureOptions {
        abs_tol: 1e-10,
        rel_tol: 1e-10,
        max_intervals: 4000,
    }
}

/// Integrates over the real line: pieces between the sorted `breaks`,
/// then outward shells of width `width` until a shell adds less than the
/// tolerance.
pub(crate) fn integrate_line(f: impl Fn(f64) -> f64, breaks: &[f64], width: f64) -> Result<Integral> {
    let opts = quad_opts();
    let mut pts: Vec<f64> = breaks.to_vec();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut lo = pts[0] - width;
    let mut hi = pts[pts.len() - 1] + width;
    let mut all = Vec::with_capacity(pts.len() + 2);
    all.push(lo);
    all.extend_from_slice(&pts);
    all.push(hi);
    let mut total = integrate_pieces(&f, &all, opts)?;
    for _ in 0..64 {
        let shell = integrate(&f, lo - width, lo, opts)? + integrate(&f, hi, hi + width, opts)?;
        total = total + shell;
        lo -= width;
        hi += width;
        if shell.value.abs() <= opts.abs_tol.max(opts.rel_tol * total.value.abs()) {
            return Ok(total);
        }
    }
    Err(Error::Quadrature {
        lower: lo,
        upper: hi,
        value: total.value,
        error: total.error,
        intervals: total.intervals,
    })
}

/// Exact value (by quadrature) against the closed-form bound.
#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct BoundPair {
    pub exact: f64,
    pub error: f64,
    pub bound: f64,
}

impl BoundPair {
    pub fn holds(&self) -> bool {
        self.exact - self.error <= self.bound
    }
}

/// The three exponentially weighted kernel integrals with their bounds.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct WeightedKernelIntegrals {
    /// `int p_t(x,y) e^{eta|y|} dy <= 2 e^{eta^2 t/2} e^{eta|x|}`
    pub mass: BoundPair,
    /// `int p_t(x,y)^2 e^{eta|y|} dy <= (pi t)^{-1/2} e^{eta^2 t/4} e^{eta|x|}`
    pub square: BoundPair,
    /// `int p_t(x,y) e^{eta|y|} eta|y| dy`; only defined for `eta > 0`.
    pub moment: Option<BoundPair>,
}

pub fn weighted_kernel_integrals(t: f64, x: f64, eta: f64) -> Result<WeightedKernelIntegrals> {
    if !(t > 0.0) {
        return Err(Error::domain(format!("kernel integrals need t > 0, got {t}")));
    }
    let width = 12.0 * t.sqrt() + eta.abs() * t + 1e-3;
    let breaks = [0.0, x];
    let ex = (eta * x.abs()).exp();

    let mass = integrate_line(|y| p(t, x - y) * (eta * y.abs()).exp(), &breaks, width)?;
    let square = integrate_line(|y| p(t, x - y).powi(2) * (eta * y.abs()).exp(), &breaks, width)?;
    let moment = if eta > 0.0 {
        let m = integrate_line(
            |y| p(t, x - y) * (eta * y.abs()).exp() * eta * y.abs(),
            &breaks,
            width,
        )?;
        let g = (eta * eta * t / 2.0).exp();
        let bound = g * ex * eta * x.abs() + 2.0 * g * (eta * eta * t + eta * (t / (2.0 * PI)).sqrt()) * ex;
        Some(BoundPair {
            exact: m.value,
            error: m.error + 8.0 * f64::EPSILON * m.value.abs(),
            bound,
        })
    } else {
        None
    };
    Ok(WeightedKernelIntegrals {
        mass: BoundPair {
            exact: mass.value,
            error: mass.error + 8.0 * f64::EPSILON * mass.value.abs(),
            bound: 2.0 * (eta * eta * t / 2.0).exp() * ex,
        },
        square: BoundPair {
            exact: square.value,
            error: square.error + 8.0 * f64::EPSILON * square.value.abs(),
            bound: (PI * t).powf(-0.5) * (eta * eta * t / 4.0).exp() * ex,
        },
        moment,
    })
}

/// `|p_t - p_s|(x,y) <= (2 sqrt 2)^theta |t-s|^theta / s^theta (p_s + p_t + p_2t)`, `0 < s <= t`.
pub fn time_increment_check(t: f64, s: f64, x: f64, y: f64, theta: f64) -> Check {
    let d = x - y;
    let (pt, ps, p2t) = (p(t, d), p(s, d), p(2.0 * t, d));
    let lhs = (pt - ps).abs();
    let rhs = (2.0 * 2f64.sqrt()).powf(theta) * (t - s).abs().powf(theta) / s.powf(theta) * (ps + pt + p2t);
    Check {
        lhs,
        rhs,
        tolerance: 4.0 * f64::EPSILON * (pt + ps),
        point: vec![("t", t), ("s", s), ("x", x), ("y", y), ("theta", theta)],
    }
}

fn space_breaks(x: f64, y: f64) -> [f64; 4] {
    [x, y, 0.5 * (x + y), 0.0]
}

/// `int |p_t(x,z) - p_t(y,z)| dz <= sqrt(2/pi) |x-y| / sqrt(t)`.
pub fn space_increment_check(t: f64, x: f64, y: f64) -> Result<Check> {
    let lhs = integrate_line(
        |z| (p(t, x - z) - p(t, y - z)).abs(),
        &space_breaks(x, y),
        12.0 * t.sqrt(),
    )?;
    Ok(Check {
        lhs: lhs.value,
        rhs: (2.0 / PI).sqrt() * (x - y).abs() / t.sqrt(),
        tolerance: lhs.error + 16.0 * f64::EPSILON,
        point: vec![("t", t), ("x", x), ("y", y)],
    })
}

/// `int |p_t(x,z) - p_t(y,z)| e^{eta|z|} dz <= 2 sqrt 2 |x-y|/sqrt t e^{eta^2 t} e^{eta(|x|+|x-y|)}`.
pub fn weighted_space_increment_check(t: f64, x: f64, y: f64, eta: f64) -> Result<Check> {
    let lhs = integrate_line(
        |z| (p(t, x - z) - p(t, y - z)).abs() * (eta * z.abs()).exp(),
        &space_breaks(x, y),
        12.0 * t.sqrt() + 2.0 * eta * t + 1e-3,
    )?;
    let dxy = (x - y).abs();
    let rhs = 2.0 * 2f64.sqrt() * dxy / t.sqrt() * (eta * eta * t).exp() * (eta * (x.abs() + dxy)).exp();
    Ok(Check {
        lhs: lhs.value,
        rhs,
        tolerance: lhs.error + 16.0 * f64::EPSILON * lhs.value.abs(),
        point: vec![("t", t), ("x", x), ("y", y), ("eta", eta)],
    })
}

/// The `eta|z|`-moment version of [`weighted_space_increment_check`].
pub fn weighted_moment_increment_check(t: f64, x: f64, y: f64, eta: f64) -> Result<Check> {
    let lhs = integrate_line(
        |z| (p(t, x - z) - p(t, y - z)).abs() * (eta * z.abs()).exp() * eta * z.abs(),
        &space_breaks(x, y),
        12.0 * t.sqrt() + 2.0 * eta * t + 1e-3,
    )?;
    let dxy = (x - y).abs();
    let a = x.abs() + dxy;
    let g = (eta * eta * t).exp() * (eta * a).exp();
    let rhs = 2f64.sqrt() * dxy / t.sqrt()
        * (g * eta * a + 2.0 * g * (2.0 * eta * eta * t + eta * (t / PI).sqrt()));
    Ok(Check {
        lhs: lhs.value,
        rhs,
        tolerance: lhs.error + 16.0 * f64::EPSILON * lhs.value.abs(),
        point: vec![("t", t), ("x", x), ("y", y), ("eta", eta)],
    })
}

/// `int_0^s int |p_{t-r}(x,z) - p_{s-r}(y,z)|^2 dz dr <= (sqrt2 - 1)/sqrt(pi) |t-s|^{1/2} + 2/sqrt(pi) |x-y|`.
///
/// The inner integral is Gaussian: `1/(2 sqrt(pi a)) + 1/(2 sqrt(pi b)) - 2 p_{a+b}(x,y)`.
/// The first two terms integrate in closed form; the cross term becomes
/// `int_{t-s}^{t+s} p_u(x,y) du`, taken by quadrature after `u = w^2`.
pub fn space_time_increment_check(t: f64, s: f64, x: f64, y: f64) -> Result<Check> {
    let d = x - y;
    let diag = ((t.sqrt() - (t - s).sqrt()) + s.sqrt()) / PI.sqrt();
    let cross = integrate(
        |w: f64| {
            if w == 0.0 {
                if d == 0.0 {
                    (2.0 / PI).sqrt()
                } else {
                    0.0
                }
            } else {
                (2.0 / PI).sqrt() * (-d * d / (2.0 * w * w)).exp()
            }
        },
        (t - s).sqrt(),
        (t + s).sqrt(),
        quad_opts(),
    )?;
    let lhs = diag - cross.value;
    Ok(Check {
        lhs,
        rhs: (2f64.sqrt() - 1.0) / PI.sqrt() * (t - s).abs().sqrt() + 2.0 / PI.sqrt() * d.abs(),
        tolerance: cross.error + 16.0 * f64::EPSILON * diag,
        point: vec![("t", t), ("s", s), ("x", x), ("y", y)],
    })
}

/// Sampling ranges for [`kernel_inequality_suite`].
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SampleRanges {
    pub time_min: f64,
    pub time_max: f64,
    pub space_max: f64,
    pub eta_max: f64,
}

impl Default for SampleRanges {
    fn default() -> Self {
        SampleRanges {
            time_min: 1e-3,
            time_max: 5.0,
            space_max: 10.0,
            eta_max: 2.0,
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Draw {
    t: f64,
    s: f64,
    x: f64,
    y: f64,
    eta: f64,
    theta: f64,
}

fn draw(ranges: &SampleRanges, seed: u64, stream: u64, index: u64) -> Draw {
    let mut rng = stream_rng(seed, stream, index);
    let log_t = |rng: &mut rand_chacha::ChaCha8Rng| {
        (ranges.time_min.ln() + rng.random::<f64>() * (ranges.time_max / ranges.time_min).ln()).exp()
    };
    let a = log_t(&mut rng);
    let b = log_t(&mut rng);
    let (s, t) = if a <= b { (a, b) } else { (b, a) };
    let x = ranges.space_max * (2.0 * rng.random::<f64>() - 1.0);
    // One draw in ten sits near the diagonal, where several bounds are tight.
    let y = if rng.random::<f64>() < 0.1 {
        (x + 1e-3 * (2.0 * rng.random::<f64>() - 1.0)).clamp(-ranges.space_max, ranges.space_max)
    } else {
        ranges.space_max * (2.0 * rng.random::<f64>() - 1.0)
    };
    Draw {
        t,
        s,
        x,
        y,
        eta: ranges.eta_max * rng.random::<f64>(),
        theta: rng.random::<f64>(),
    }
}

/// Identifiers of the eight kernel estimates, in order.
pub const KERNEL_INEQUALITIES: [&str; 8] = [
    "heat-kernel/i-weighted-mass",
    "heat-kernel/ii-weighted-square",
    "heat-kernel/iii-weighted-moment",
    "heat-kernel/iv-time-increment",
    "heat-kernel/v-space-increment",
    "heat-kernel/vi-weighted-space-increment",
    "heat-kernel/vii-weighted-moment-increment",
    "heat-kernel/viii-space-time-square",
];

fn evaluate(which: usize, d: Draw) -> Result<Check> {
    let pair_check = |pair: BoundPair, extra: Vec<(&'static str, f64)>| Check {
        lhs: pair.exact,
        rhs: pair.bound,
        tolerance: pair.error,
        point: extra,
    };
    match which {
        0..=2 => {
            // (iii) requires eta > 0; keep eta off zero for it.
            let eta = if which == 2 { d.eta.max(1e-6) } else { d.eta };
            let w = weighted_kernel_integrals(d.t, d.x, eta)?;
            let pt = vec![("t", d.t), ("x", d.x), ("eta", eta)];
            Ok(match which {
                0 => pair_check(w.mass, pt),
                1 => pair_check(w.square, pt),
                _ => pair_check(w.moment.expect("eta > 0"), pt),
            })
        }
        3 => Ok(time_increment_check(d.t, d.s, d.x, d.y, d.theta)),
        4 => space_increment_check(d.t, d.x, d.y),
        5 => weighted_space_increment_check(d.t, d.x, d.y, d.eta),
        6 => weighted_moment_increment_check(d.t, d.x, d.y, d.eta.max(1e-6)),
        _ => space_time_increment_check(d.t, d.s, d.x, d.y),
    }
}

/// Checks all eight kernel estimates on `samples` random points each.
///
/// Violations are counted, not raised. Samples are drawn from
/// counter-addressed streams, so the reports do not depend on scheduling.
pub fn kernel_inequality_suite(samples: usize, seed: u64) -> Result<Vec<InequalityReport>> {
    kernel_inequality_suite_with(samples, seed, SampleRanges::default())
}

pub fn kernel_inequality_suite_with(samples: usize, seed: u64, ranges: SampleRanges) -> Result<Vec<InequalityReport>> {
    if samples == 0 {
        return Err(Error::domain("inequality suite needs at least one sample"));
    }
    KERNEL_INEQUALITIES
        .iter()
        .enumerate()
        .map(|(which, id)| {
            let checks: Vec<Check> = (0..samples as u64)
                .into_par_iter()
                .map(|i| evaluate(which, draw(&ranges, seed, which as u64, i)))
                .collect::<Result<_>>()?;
            Ok(summarize(id, checks))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ContinuousCDF, Normal};

    #[test]
    fn kernel_at_mode_and_symmetry() {
        let v = kernel_value(1.0, 0.0, 0.0).unwrap();
        assert!((v - 0.398_942_280_401_432_7).abs() < 1e-15);
        assert_eq!(kernel_value(0.3, 1.2, -0.4).unwrap(), kernel_value(0.3, -0.4, 1.2).unwrap());
        assert!(kernel_value(0.0, 0.0, 0.0).is_err());
        assert!(kernel_value(-1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn kernel_has_unit_mass() {
        for &(t, x) in &[(1e-3, 0.0), (0.5, 3.0), (5.0, -7.0)] {
            let m = integrate_line(|y| p(t, x - y), &[x], 12.0 * f64::sqrt(t)).unwrap();
            assert!((m.value - 1.0).abs() < 1e-10, "t={t} x={x}: {}", m.value);
        }
    }

    #[test]
    fn semigroup_identity_at_zero_and_mass() {
        let g = GridSpec::new(1.0, 10, 8.0, 256).unwrap();
        let f = Field::from_fn(g, |x| (x * 0.7).sin() + 0.1 * x);
        assert_eq!(semigroup_apply(&f, 0.0, &g).unwrap(), f);
        let ones = Field::from_fn(g, |_| 1.0);
        let out = semigroup_apply(&ones, 0.7, &g).unwrap();
        assert!(out.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!(semigroup_apply(&f, -1.0, &g).is_err());
        let other = GridSpec::new(1.0, 10, 8.0, 128).unwrap();
        assert!(matches!(semigroup_apply(&f, 0.1, &other), Err(Error::Shape(_))));
    }

    #[test]
    fn semigroup_decays_fourier_modes() {
        let g = GridSpec::new(1.0, 10, PI, 128).unwrap();
        let k = 3.0;
        let t = 0.4;
        let f = Field::from_fn(g, |x| (k * x).sin());
        let out = semigroup_apply(&f, t, &g).unwrap();
        for (j, v) in out.values.iter().enumerate() {
            let want = (-k * k * t / 2.0).exp() * (k * g.x(j)).sin();
            assert!((v - want).abs() < 1e-6);
        }
    }

    #[test]
    fn semigroup_chapman_kolmogorov_on_gaussians() {
        let g = GridSpec::default();
        let s = 0.2;
        let t = 0.5;
        let f = Field::from_fn(g, |x| p(s, x));
        let out = semigroup_apply(&f, t, &g).unwrap();
        for (j, v) in out.values.iter().enumerate() {
            assert!((v - p(s + t, g.x(j))).abs() < 1e-10);
        }
        let twice = semigroup_apply(&semigroup_apply(&f, s, &g).unwrap(), t, &g).unwrap();
        let once = semigroup_apply(&f, s + t, &g).unwrap();
        for (a, b) in twice.values.iter().zip(&once.values) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_padded_semigroup_conserves_interior_gaussian() {
        let g = GridSpec::default().with_periodic(false);
        let f = Field::from_fn(g, |x| p(0.1, x));
        let out = semigroup_apply(&f, 0.3, &g).unwrap();
        let mid = g.origin_index();
        assert!((out.values[mid] - p(0.4, 0.0)).abs() < 1e-10);
    }

    #[test]
    fn weighted_mass_special_cases() {
        let w = weighted_kernel_integrals(0.8, 1.3, 0.0).unwrap();
        assert!((w.mass.exact - 1.0).abs() < 1e-10);
        assert_eq!(w.mass.bound, 2.0);
        assert!(w.moment.is_none());

        // x = 0: complete the square, 2 e^{eta^2 t/2} Phi(eta sqrt t).
        let n = Normal::standard();
        for &(t, eta) in &[(0.3, 0.5), (2.0, 1.7), (1e-3, 2.0)] {
            let w = weighted_kernel_integrals(t, 0.0, eta).unwrap();
            let want = 2.0 * (eta * eta * t / 2.0).exp() * n.cdf(eta * t.sqrt());
            assert!((w.mass.exact - want).abs() < 1e-9 * want, "{t} {eta}");
            assert!(w.mass.holds());
        }
    }

    #[test]
    fn weighted_square_without_weight() {
        for &t in &[0.01, 0.5, 3.0] {
            let w = weighted_kernel_integrals(t, -2.0, 0.0).unwrap();
            let want = 1.0 / (2.0 * (PI * t).sqrt());
            assert!((w.square.exact - want).abs() < 1e-9 * want);
            assert!((w.square.bound - 1.0 / (PI * t).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_increment_cases() {
        let c = space_increment_check(0.7, 1.5, 1.5).unwrap();
        assert_eq!(c.lhs, 0.0);
        assert_eq!(c.rhs, 0.0);
        assert!(!c.violated());

        // theta = 0 is the triangle inequality.
        let c = time_increment_check(1.0, 0.3, 0.2, -0.5, 0.0);
        let d: f64 = 0.7;
        assert!((c.rhs - (p(0.3, d) + p(1.0, d) + p(2.0, d))).abs() < 1e-15);
        assert!(!c.violated());

        let c = space_time_increment_check(0.9, 0.9, 0.4, 0.4).unwrap();
        assert!(c.lhs.abs() < 1e-12);
        assert_eq!(c.rhs, 0.0);
        assert!(!c.violated());
    }

    #[test]
    fn space_increment_matches_closed_form() {
        // int |p_t(x,.) - p_t(y,.)| = 2 (2 Phi(|x-y| / (2 sqrt t)) - 1)
        let n = Normal::standard();
        let (t, x, y) = (0.6, 0.3, 1.4);
        let c = space_increment_check(t, x, y).unwrap();
        let want = 2.0 * (2.0 * n.cdf((x - y).abs() / (2.0 * t.sqrt())) - 1.0);
        assert!((c.lhs - want).abs() < 1e-9);
    }

    #[test]
    fn small_suite_has_no_violations() {
        let reports = kernel_inequality_suite(300, 5).unwrap();
        assert_eq!(reports.len(), 8);
        for r in &reports {
            assert_eq!(r.samples, 300);
            assert!(r.passed(), "{r:?}");
            assert!(r.worst_slack >= -1e-9, "{r:?}");
        }
    }

    #[test]
    fn suite_is_deterministic() {
        let a = kernel_inequality_suite(50, 9).unwrap();
        let b = kernel_inequality_suite(50, 9).unwrap();
        assert_eq!(a, b);
    }
}
