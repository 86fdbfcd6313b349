//! The one-step map shared by every solver:
//!
//! `u_{k+1} = S u_k + Q F_k`,  with `S = exp(dt Δ/2)`
//!
//! and `F_k` the forcing accumulated over the step (drift, control and
//! noise density). `Q` is a Fourier multiplier that smooths the forcing.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::grid::GridSpec;
use crate::heat_kernel::{heat_multiplier, Spectral};

/// Smoothing applied to the forcing of one step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ForcingFilter {
    /// `q(k) = sqrt((1 - e^{-k^2 dt}) / (k^2 dt))`: each Fourier mode of the
    /// stochastic convolution gets exactly the continuum variance
    /// `int_0^t e^{-k^2 s} ds`, for any step size.
    #[default]
    ExactVariance,
    /// `q(k) = e^{-k^2 dt / 2}`: the forcing is added and then smoothed by the
    /// semigroup (`u_{k+1} = S(u_k + F_k)`). First order in the noise variance.
    Semigroup,
}

impl ForcingFilter {
    pub fn multiplier(&self, k2: f64, dt: f64) -> f64 {
        match self {
            ForcingFilter::ExactVariance => {
                let z = k2 * dt;
                if z < 1e-8 {
                    1.0 - z / 4.0
                } else {
                    (-(-z).exp_m1() / z).sqrt()
                }
            }
            ForcingFilter::Semigroup => heat_multiplier(k2, dt),
        }
    }
}

/// Workspace for the one-step map and its adjoint.
#[derive(Clone, Debug)]
pub struct Stepper {
    pub grid: GridSpec,
    pub filter: ForcingFilter,
    spectral: Spectral,
    heat: Vec<f64>,
    smooth: Vec<f64>,
    buf: Vec<Complex64>,
    work: Vec<Complex64>,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Stepper {
    pub fn new(grid: GridSpec, filter: ForcingFilter) -> Self {
        let spectral = Spectral::new(&grid);
        let dt = grid.dt();
        let heat = spectral.k2().iter().map(|&k2| heat_multiplier(k2, dt)).collect();
        let smooth = spectral.k2().iter().map(|&k2| filter.multiplier(k2, dt)).collect();
        let len = spectral.len();
        Stepper {
            grid,
            filter,
            heat,
            smooth,
            buf: spectral.buffer(),
            work: spectral.buffer(),
            re: vec![0.0; len],
            im: vec![0.0; len],
            spectral,
        }
    }

    /// `out = S u + Q forcing`.
    pub fn step(&mut self, u: &[f64], forcing: &[f64], out: &mut [f64]) {
        let n = self.spectral.len();
        // One transform of u + i F; the two spectra separate by Hermitian symmetry.
        self.spectral.forward_pair(u, forcing, &mut self.buf);
        for k in 0..n {
            let z = self.buf[k];
            let w = self.buf[(n - k) % n].conj();
            let u_hat = (z + w) * 0.5;
            let f_hat = (z - w) * Complex64::new(0.0, -0.5);
            self.work[k] = u_hat * self.heat[k] + f_hat * self.smooth[k];
        }
        self.spectral.inverse_real(&mut self.work, &mut self.re);
        out.copy_from_slice(&self.re[..out.len()]);
    }

    /// `(S lam, Q lam)`; both operators are self-adjoint on the grid.
    pub fn adjoint(&mut self, lam: &[f64], s_out: &mut [f64], q_out: &mut [f64]) {
        let n = self.spectral.len();
        self.spectral.forward(lam, &mut self.buf);
        // S and Q map real to real, so pack S lam + i Q lam into one inverse.
        for k in 0..n {
            let z = self.buf[k];
            self.work[k] = z * self.heat[k] + z * Complex64::new(0.0, self.smooth[k]);
        }
        self.spectral.inverse_pair(&mut self.work, &mut self.re, &mut self.im);
        let m = s_out.len();
        s_out.copy_from_slice(&self.re[..m]);
        q_out.copy_from_slice(&self.im[..m]);
    }

    /// `Q f` in place.
    pub fn smooth(&mut self, f: &mut [f64]) {
        self.spectral.apply_table(f, &mut self.buf, &self.smooth);
    }

    /// Inverse of [`Stepper::smooth`] in place.
    pub fn unsmooth(&mut self, f: &mut [f64]) {
        let inverse: Vec<f64> = self.smooth.iter().map(|q| 1.0 / q).collect();
        self.spectral.apply_table(f, &mut self.buf, &inverse);
    }

    /// `S f` in place.
    pub fn heat(&mut self, f: &mut [f64]) {
        self.spectral.apply_table(f, &mut self.buf, &self.heat);
    }

    /// `Δ f / 2` in place (spectral).
    pub fn half_laplacian(&mut self, f: &mut [f64]) {
        self.spectral.apply(f, &mut self.buf, |k2| -0.5 * k2);
    }
}
