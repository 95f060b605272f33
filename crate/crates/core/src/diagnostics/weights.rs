//! Space-time test functions `psi(t, x) = eta(t) phi(x)`.

use crate::brinkman_stepper::Trajectory;
use crate::field_grid::{gradient, laplacian, Grid, ScalarField, VectorField};

/// Quintic smoothstep on `[0, 1]`.
fn smooth(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
}

fn smooth_slope(s: f64) -> f64 {
    if !(0.0..=1.0).contains(&s) {
        return 0.0;
    }
    30.0 * s * s * (1.0 - s) * (1.0 - s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeWeight {
    Constant,
    /// Zero outside `[start, end]`, one on `[start + ramp, end - ramp]`.
    Plateau { start: f64, end: f64, ramp: f64 },
}

impl TimeWeight {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Self::Constant => 1.0,
            Self::Plateau { start, end, ramp } => smooth((t - start) / ramp) * smooth((end - t) / ramp),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match *self {
            Self::Constant => 0.0,
            Self::Plateau { start, end, ramp } => {
                let up = (t - start) / ramp;
                let down = (end - t) / ramp;
                (smooth_slope(up) * smooth(down) - smooth(up) * smooth_slope(down)) / ramp
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpaceWeight {
    Constant,
    /// `(1 - |x - c|^2 / r^2)^4` inside the ball.
    Bump { center: [f64; 2], radius: f64 },
}

impl SpaceWeight {
    fn scaled(&self, x: f64, y: f64) -> Option<(f64, f64)> {
        match *self {
            Self::Constant => None,
            Self::Bump { center, radius } => {
                let r2 = (x - center[0]).powi(2) + (y - center[1]).powi(2);
                Some((r2 / (radius * radius), radius))
            }
        }
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        match self.scaled(x, y) {
            None => 1.0,
            Some((s, _)) if s < 1.0 => (1.0 - s).powi(4),
            Some(_) => 0.0,
        }
    }

    /// `|grad phi|^2 / phi`, which stays bounded for this profile.
    pub fn fisher_density(&self, x: f64, y: f64) -> f64 {
        match self.scaled(x, y) {
            Some((s, r)) if s < 1.0 => 64.0 * (1.0 - s).powi(2) * s / (r * r),
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestFunction {
    pub time: TimeWeight,
    pub space: SpaceWeight,
}

/// `phi` and its discrete derivatives on one grid.
pub(crate) struct SampledSpace {
    pub phi: ScalarField,
    pub grad: VectorField,
    pub lap: ScalarField,
    pub fisher: ScalarField,
}

impl TestFunction {
    /// `psi = 1`, which turns the balances into their total forms.
    pub fn constant() -> Self {
        Self { time: TimeWeight::Constant, space: SpaceWeight::Constant }
    }

    pub fn in_time(time: TimeWeight) -> Self {
        Self { time, space: SpaceWeight::Constant }
    }

    /// Plateau on `[0, t_end]` with ramps of a fifth of the horizon, times a
    /// bump of the given radius about the origin.
    pub fn standard(t_end: f64, radius: f64) -> Self {
        Self {
            time: TimeWeight::Plateau { start: 0.0, end: t_end, ramp: t_end / 5.0 },
            space: SpaceWeight::Bump { center: [0.0, 0.0], radius },
        }
    }

    pub(crate) fn sample(&self, grid: Grid) -> SampledSpace {
        let phi = ScalarField::from_fn(grid, |x, y| self.space.value(x, y));
        let fisher = ScalarField::from_fn(grid, |x, y| self.space.fisher_density(x, y));
        SampledSpace { grad: gradient(&phi), lap: laplacian(&phi), phi, fisher }
    }

    /// `|psi(0)|_1 + |psi|_1 + |d_t psi|_1 + | |grad psi|^2 / psi |_1` with
    /// the trajectory's time weights.
    pub fn norm(&self, traj: &Trajectory) -> f64 {
        let grid = *traj.first().pressure.grid();
        let s = self.sample(grid);
        let mass = s.phi.integral();
        let fisher = s.fisher.integral();
        let mut total = self.time.value(traj.first().time) * mass;
        for f in &traj.frames {
            let eta = self.time.value(f.time);
            total += f.dt * (eta * mass + self.time.derivative(f.time).abs() * mass + eta * fisher);
        }
        total
    }
}
