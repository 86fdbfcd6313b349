//! Space-time white noise on grid cells and the discrete stochastic convolution.

use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, Trajectory};
use crate::rng::stream_rng;
use crate::scheme::{ForcingFilter, Stepper};

/// Cell increments `W([t_k, t_{k+1}) x [x_j, x_{j+1}))`, i.i.d. `N(0, dt dx)`,
/// stored as `n_t` rows of `n_x` values.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseRealization {
    pub grid: GridSpec,
    pub seed: u64,
    pub stream: u64,
    pub increments: Vec<f64>,
}

impl NoiseRealization {
    #[inline]
    pub fn row(&self, k: usize) -> &[f64] {
        let n = self.grid.space_points;
        &self.increments[k * n..(k + 1) * n]
    }

    /// Brownian sheet `W(t_k, x_j) = sum` of increments over `[0, t_k) x [x_0, x_j)`.
    pub fn sheet(&self) -> Trajectory {
        let g = self.grid;
        let n = g.space_points;
        let mut out = Trajectory::zeros(g);
        let mut cum = vec![0.0; n];
        for k in 0..g.time_steps {
            let row = self.row(k);
            let mut acc = 0.0;
            for j in 0..n {
                cum[j] += acc;
                acc += row[j];
            }
            out.row_mut(k + 1).copy_from_slice(&cum);
        }
        out
    }
}

/// Fills `out` with the increments of step `k` for `(seed, stream)`.
///
/// Row `k` depends only on `(seed, stream, k)`, so noise can be generated
/// step by step without storing the realization.
pub fn noise_row(grid: &GridSpec, seed: u64, stream: u64, k: usize, out: &mut [f64]) {
    let scale = (grid.dt() * grid.dx()).sqrt();
    let mut rng = stream_rng(seed, stream, k as u64);
    for v in out.iter_mut() {
        let z: f64 = StandardNormal.sample(&mut rng);
        *v = scale * z;
    }
}

pub fn sample_noise(grid: &GridSpec, seed: u64, stream: u64) -> NoiseRealization {
    let n = grid.space_points;
    let mut increments = vec![0.0; grid.time_steps * n];
    for k in 0..grid.time_steps {
        noise_row(grid, seed, stream, k, &mut increments[k * n..(k + 1) * n]);
    }
    NoiseRealization {
        grid: *grid,
        seed,
        stream,
        increments,
    }
}

/// `V_{k+1} = S V_k + Q (sigma_k * dW_k / dx)`, `V_0 = 0`: the mild
/// stochastic integral `int_0^t int p_{t-s}(x, y) sigma(s, y) W(ds, dy)`.
pub fn stochastic_convolution(sigma: &Trajectory, noise: &NoiseRealization) -> Result<Trajectory> {
    stochastic_convolution_with(sigma, noise, ForcingFilter::default())
}

pub fn stochastic_convolution_with(sigma: &Trajectory, noise: &NoiseRealization, filter: ForcingFilter) -> Result<Trajectory> {
    sigma.grid.same_as(&noise.grid)?;
    let g = noise.grid;
    let n = g.space_points;
    let inv_dx = 1.0 / g.dx();
    let mut stepper = Stepper::new(g, filter);
    let mut out = Trajectory::zeros(g);
    let mut forcing = vec![0.0; n];
    let mut next = vec![0.0; n];
    for k in 0..g.time_steps {
        for ((f, s), w) in forcing.iter_mut().zip(sigma.row(k)).zip(noise.row(k)) {
            *f = s * w * inv_dx;
        }
        stepper.step(out.row(k), &forcing, &mut next);
        out.row_mut(k + 1).copy_from_slice(&next);
    }
    Ok(out)
}

/// Variance of `V(t_k, x)` under the discrete scheme with unit `sigma`,
/// summed mode by mode. Exact for the grid, independent of `x` on a periodic grid.
pub fn discrete_variance(grid: &GridSpec, filter: ForcingFilter) -> f64 {
    // Impulse response: for each step j the contribution of a unit cell is
    // S^{N-1-j} Q e_0 / dx, and its squared l2 norm times dt dx is the variance.
    let g = *grid;
    let n = g.space_points;
    let mut stepper = Stepper::new(g, filter);
    let mut kernel = vec![0.0; n];
    kernel[g.origin_index()] = 1.0 / g.dx();
    stepper.smooth(&mut kernel);
    let mut total = 0.0;
    for _ in 0..g.time_steps {
        total += kernel.iter().map(|v| v * v).sum::<f64>() * g.dt() * g.dx();
        stepper.heat(&mut kernel);
    }
    total
}

/// Continuum variance `sqrt(t / pi)` of the unit stochastic convolution.
pub fn continuum_variance(t: f64) -> f64 {
    (t / std::f64::consts::PI).sqrt()
}

/// Sample moments with a Jarque–Bera normality test.
#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct SampleStats {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub jarque_bera: f64,
    /// `P(chi^2_2 > JB)`.
    pub normality_p_value: f64,
}

pub fn sample_stats(xs: &[f64]) -> Result<SampleStats> {
    if xs.len() < 3 {
        return Err(Error::domain("sample statistics need at least 3 values"));
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for x in xs {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    let skewness = m3 / m2.powf(1.5);
    let excess_kurtosis = m4 / (m2 * m2) - 3.0;
    let jb = n / 6.0 * (skewness * skewness + 0.25 * excess_kurtosis * excess_kurtosis);
    let chi = ChiSquared::new(2.0).expect("two degrees of freedom");
    Ok(SampleStats {
        count: xs.len(),
        mean,
        variance: m2 * n / (n - 1.0),
        skewness,
        excess_kurtosis,
        jarque_bera: jb,
        normality_p_value: 1.0 - chi.cdf(jb),
    })
}
