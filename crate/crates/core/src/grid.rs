//! Space-time grids on a truncated window `[0, T] x [-L, L)` and the
//! profile/path containers living on them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Uniform discretization of `[0, T] x [-L, L)`.
///
/// Spatial nodes are `x_j = -L + j dx` for `j = 0..n_x`; with an even
/// `n_x` the origin is the node `n_x / 2`. Time nodes are `t_k = k dt`
/// for `k = 0..=n_t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub final_time: f64,
    pub time_steps: usize,
    pub half_width: f64,
    pub space_points: usize,
    /// Periodic extension of the window when applying the heat semigroup.
    /// When false the profile is zero-padded instead.
    pub periodic: bool,
}

impl GridSpec {
    pub fn new(final_time: f64, time_steps: usize, half_width: f64, space_points: usize) -> Result<Self> {
        let grid = GridSpec {
            final_time,
            time_steps,
            half_width,
            space_points,
            periodic: true,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn with_periodic(mut self, periodic: bool) -> Self {
        self.periodic = periodic;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.final_time.is_finite() && self.final_time > 0.0) || self.time_steps == 0 {
            return Err(Error::domain(format!(
                "time grid needs T > 0 and n_t > 0 (got T = {}, n_t = {})",
                self.final_time, self.time_steps
            )));
        }
        if !(self.half_width.is_finite() && self.half_width > 0.0) || self.space_points < 2 {
            return Err(Error::domain(format!(
                "space grid needs L > 0 and n_x >= 2 (got L = {}, n_x = {})",
                self.half_width, self.space_points
            )));
        }
        Ok(())
    }

    /// Heat-kernel mass escaping `[-L, L]` from the origin by time `t`.
    pub fn tail_mass(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        erfc(self.half_width / (2.0 * t).sqrt())
    }

    /// Errors if the kernel tail mass at the final time exceeds `tol`.
    pub fn check_tail(&self, tol: f64) -> Result<()> {
        let mass = self.tail_mass(self.final_time);
        if mass > tol {
            return Err(Error::domain(format!(
                "kernel tail mass {mass:e} outside [-{L}, {L}] at T = {T} exceeds {tol:e}",
                L = self.half_width,
                T = self.final_time
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn dt(&self) -> f64 {
        self.final_time / self.time_steps as f64
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.space_points as f64
    }

    #[inline]
    pub fn x(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.dx()
    }

    #[inline]
    pub fn t(&self, k: usize) -> f64 {
        k as f64 * self.dt()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.space_points).map(|j| self.x(j)).collect()
    }

    /// Nearest node to `x`, clamped to the window.
    pub fn index_of(&self, x: f64) -> usize {
        let j = ((x + self.half_width) / self.dx()).round();
        j.clamp(0.0, (self.space_points - 1) as f64) as usize
    }

    pub fn origin_index(&self) -> usize {
        self.index_of(0.0)
    }

    /// Same spatial window, different horizon and step count.
    pub fn with_time(self, final_time: f64, time_steps: usize) -> Result<Self> {
        let grid = GridSpec {
            final_time,
            time_steps,
            ..self
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Halves `dt` and `dx`.
    pub fn refined(self) -> Self {
        GridSpec {
            time_steps: self.time_steps * 2,
            space_points: self.space_points * 2,
            ..self
        }
    }

    pub(crate) fn same_as(&self, other: &GridSpec) -> Result<()> {
        if self != other {
            return Err(Error::shape(format!("grid {self} does not match {other}")));
        }
        Ok(())
    }
}

impl Default for GridSpec {
    /// `T = 1`, 100 steps, window `[-8, 8)` with 512 nodes.
    fn default() -> Self {
        GridSpec {
            final_time: 1.0,
            time_steps: 100,
            half_width: 8.0,
            space_points: 512,
            periodic: true,
        }
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{}",
            self.final_time, self.time_steps, self.half_width, self.space_points
        )
    }
}

impl FromStr for GridSpec {
    type Err = Error;

    /// Parses `T,nt,L,nx`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 4 {
            return Err(Error::domain(format!("grid `{s}` is not of the form T,nt,L,nx")));
        }
        let bad = |what: &str| Error::domain(format!("grid `{s}`: cannot parse {what}"));
        let final_time: f64 = parts[0].parse().map_err(|_| bad("T"))?;
        let time_steps: usize = parts[1].parse().map_err(|_| bad("nt"))?;
        let half_width: f64 = parts[2].parse().map_err(|_| bad("L"))?;
        let space_points: usize = parts[3].parse().map_err(|_| bad("nx"))?;
        GridSpec::new(final_time, time_steps, half_width, space_points)
    }
}

/// A spatial profile sampled on the nodes of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl Field {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.space_points {
            return Err(Error::shape(format!(
                "field has {} values, grid has {} nodes",
                values.len(),
                grid.space_points
            )));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!("field value at node {j} is not finite")));
        }
        Ok(Field { grid, values })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Field {
            grid,
            values: vec![0.0; grid.space_points],
        }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64) -> f64) -> Self {
        Field {
            grid,
            values: (0..grid.space_points).map(|j| f(grid.x(j))).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// A path `t -> u(t, .)` stored row-major as `(n_t + 1) x n_x` values.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl Trajectory {
    pub fn zeros(grid: GridSpec) -> Self {
        Trajectory {
            grid,
            values: vec![0.0; (grid.time_steps + 1) * grid.space_points],
        }
    }

    pub fn from_rows(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        let expected = (grid.time_steps + 1) * grid.space_points;
        if values.len() != expected {
            return Err(Error::shape(format!(
                "trajectory has {} values, grid needs {expected}",
                values.len()
            )));
        }
        Ok(Trajectory { grid, values })
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut path = Trajectory::zeros(grid);
        for k in 0..=grid.time_steps {
            let t = grid.t(k);
            for (j, v) in path.row_mut(k).iter_mut().enumerate() {
                *v = f(t, grid.x(j));
            }
        }
        path
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.grid.time_steps + 1
    }

    #[inline]
    pub fn row(&self, k: usize) -> &[f64] {
        let n = self.grid.space_points;
        &self.values[k * n..(k + 1) * n]
    }

    #[inline]
    pub fn row_mut(&mut self, k: usize) -> &mut [f64] {
        let n = self.grid.space_points;
        &mut self.values[k * n..(k + 1) * n]
    }

    #[inline]
    pub fn at(&self, k: usize, j: usize) -> f64 {
        self.values[k * self.grid.space_points + j]
    }

    pub fn field(&self, k: usize) -> Field {
        Field {
            grid: self.grid,
            values: self.row(k).to_vec(),
        }
    }

    pub fn last(&self) -> Field {
        self.field(self.grid.time_steps)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// First non-finite entry as `(step, index)`.
    pub fn first_nonfinite(&self) -> Option<(usize, usize)> {
        let n = self.grid.space_points;
        self.values.iter().position(|v| !v.is_finite()).map(|p| (p / n, p % n))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Trajectory {
        Trajectory {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn sub(&self, other: &Trajectory) -> Result<Trajectory> {
        self.grid.same_as(&other.grid)?;
        Ok(Trajectory {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn max_abs_diff(&self, other: &Trajectory) -> Result<f64> {
        self.grid.same_as(&other.grid)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_spacings() {
        let g = GridSpec::default();
        assert_eq!(g.dt(), 0.01);
        assert_eq!(g.dx(), 1.0 / 32.0);
        assert_eq!(g.x(g.origin_index()), 0.0);
        assert!(g.tail_mass(g.final_time) < 1e-14);
    }

    #[test]
    fn parse_grid() {
        let g: GridSpec = "2,50,6,128".parse().unwrap();
        assert_eq!(g.final_time, 2.0);
        assert_eq!(g.time_steps, 50);
        assert_eq!(g.space_points, 128);
        assert!("1,2,3".parse::<GridSpec>().is_err());
        assert!("0,10,3,16".parse::<GridSpec>().is_err());
    }

    #[test]
    fn tail_check_rejects_narrow_window() {
        let g = GridSpec::new(4.0, 10, 1.0, 16).unwrap();
        assert!(g.check_tail(1e-6).is_err());
        assert!(GridSpec::default().check_tail(1e-12).is_ok());
    }

    #[test]
    fn field_rejects_wrong_length_and_nan() {
        let g = GridSpec::new(1.0, 4, 1.0, 8).unwrap();
        assert!(Field::new(g, vec![0.0; 7]).is_err());
        let mut v = vec![0.0; 8];
        v[3] = f64::NAN;
        assert!(Field::new(g, v).is_err());
    }
}
