//! Controls `h in L^2([0,T] x R)` on a grid, their energy and `Int(h)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, Trajectory};

/// A control sampled on the cells of a grid: row `k` acts on `[t_k, t_{k+1})`,
/// so there are `n_t` rows of `n_x` values.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlField {
    pub grid: GridSpec,
    pub values: Vec<f64>,
    /// Radius `N` when the control is known to lie in `H_N`.
    pub ball: Option<f64>,
}

impl ControlField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        let expected = grid.time_steps * grid.space_points;
        if values.len() != expected {
            return Err(Error::shape(format!(
                "control has {} values, grid needs {expected} ({} steps x {} nodes)",
                values.len(),
                grid.time_steps,
                grid.space_points
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!(
                "control value at step {}, node {} is not finite",
                i / grid.space_points,
                i % grid.space_points
            )));
        }
        Ok(ControlField { grid, values, ball: None })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        ControlField {
            grid,
            values: vec![0.0; grid.time_steps * grid.space_points],
            ball: None,
        }
    }

    /// Samples `h(t, x)` at the left end of each step.
    pub fn from_fn(grid: GridSpec, h: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.time_steps * grid.space_points);
        for k in 0..grid.time_steps {
            let t = grid.t(k);
            values.extend((0..grid.space_points).map(|j| h(t, grid.x(j))));
        }
        ControlField { grid, values, ball: None }
    }

    /// Tags the control as a member of `H_N`; errors if its energy exceeds `N^2/2`.
    pub fn in_ball(mut self, radius: f64) -> Result<Self> {
        let e = self.energy();
        if e > 0.5 * radius * radius * (1.0 + 1e-12) {
            return Err(Error::domain(format!(
                "control energy {e} exceeds N^2/2 = {} for N = {radius}",
                0.5 * radius * radius
            )));
        }
        self.ball = Some(radius);
        Ok(self)
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

    /// `(1/2) sum h^2 dt dx`.
    pub fn energy(&self) -> f64 {
        0.5 * self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.dt() * self.grid.dx()
    }

    /// `|h|_H`.
    pub fn norm(&self) -> f64 {
        (2.0 * self.energy()).sqrt()
    }

    pub fn scaled(&self, c: f64) -> ControlField {
        ControlField {
            grid: self.grid,
            values: self.values.iter().map(|v| c * v).collect(),
            ball: None,
        }
    }

    pub fn add(&self, other: &ControlField) -> Result<ControlField> {
        self.grid.same_as(&other.grid)?;
        Ok(ControlField {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
            ball: None,
        })
    }

    /// `<h, g>_H = sum h g dt dx`.
    pub fn inner(&self, other: &ControlField) -> Result<f64> {
        self.grid.same_as(&other.grid)?;
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>() * self.grid.dt() * self.grid.dx())
    }
}

/// `(1/2) |h|_H^2`.
pub fn energy(h: &ControlField) -> f64 {
    h.energy()
}

/// `Int(h)(t, x) = int_0^t int_0^x h(s, y) dy ds`, with `int_0^x = -int_x^0`
/// for `x < 0`. Cells `[x_j, x_{j+1})` between the origin and `x` are summed.
pub fn int_map(h: &ControlField) -> Trajectory {
    let g = h.grid;
    let n = g.space_points;
    let origin = g.origin_index();
    let (dt, dx) = (g.dt(), g.dx());
    let mut out = Trajectory::zeros(g);
    let mut running = vec![0.0; n];
    for k in 0..g.time_steps {
        let row = h.row(k);
        // Spatial antiderivative anchored at the origin node.
        let mut prim = vec![0.0; n];
        for j in origin + 1..n {
            prim[j] = prim[j - 1] + row[j - 1] * dx;
        }
        for j in (0..origin).rev() {
            prim[j] = prim[j + 1] - row[j] * dx;
        }
        for j in 0..n {
            running[j] += prim[j] * dt;
        }
        out.row_mut(k + 1).copy_from_slice(&running);
    }
    out
}

/// Names accepted by [`builtin_control`].
pub const BUILTIN_CONTROLS: [&str; 4] = ["zero", "gaussian", "pulse", "travelling"];

/// Built-in smooth controls:
///
/// * `zero`
/// * `gaussian`: `exp(-x^2)`, constant in time
/// * `pulse`: `2 sin(pi t / T) exp(-x^2 / 2)`
/// * `travelling`: `exp(-(x - 2t/T + 1)^2)`
pub fn builtin_control(name: &str, grid: GridSpec) -> Result<ControlField> {
    let horizon = grid.final_time;
    Ok(match name {
        "zero" => ControlField::zeros(grid),
        "gaussian" => ControlField::from_fn(grid, |_, x| (-x * x).exp()),
        "pulse" => ControlField::from_fn(grid, |t, x| 2.0 * (std::f64::consts::PI * t / horizon).sin() * (-x * x / 2.0).exp()),
        "travelling" => ControlField::from_fn(grid, |t, x| {
            let c = x - 2.0 * t / horizon + 1.0;
            (-c * c).exp()
        }),
        _ => return Err(Error::UnknownControl(name.into())),
    })
}

/// Serializable energy summary.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct ControlSummary {
    pub energy: f64,
    pub norm: f64,
    pub max_abs: f64,
}

impl ControlField {
    pub fn summary(&self) -> ControlSummary {
        ControlSummary {
            energy: self.energy(),
            norm: self.norm(),
            max_abs: self.values.iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }
}
