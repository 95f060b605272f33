//! Residual ledgers evaluated on stored trajectories: energy balances, the
//! derivative budget, bounds, complementarity and the quantities that
//! measure the approach to the `nu -> 0` limit.
//!
//! Space integrals are cell sums times `h^d`. Time integrals use the frames
//! of the trajectory with left-endpoint weights `frame.dt`, which matches the
//! forward Euler steppers when every step is recorded.

mod identities;
mod limits;
mod weights;

use std::fmt;

pub use identities::{
    derivative_budget, eee_residual, h1_energy_report, internal_energy_report, power_entropy_report, Coupling,
    PowerOrder,
};
pub use limits::{
    bound_monitor, complementarity_residual, flux_swap_error, singular_mass, velocity_gap, BoundTolerances,
    FluxSwap, SingularMass, VelocityGap,
};
pub use weights::{SpaceWeight, TestFunction, TimeWeight};

use crate::brinkman_stepper::{Frame, Trajectory};
use crate::checks::CheckReport;
use crate::convex_energy::ConvexError;
use crate::field_grid::{gradient, laplacian, ScalarField, VectorField};
use crate::pressure_laws::LawError;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum DiagnosticError {
    #[error("coupling relation fails at a={a}: a*c - e(a) = {found}, z'(f'(a)) = {expected}")]
    Coupling { a: f64, expected: f64, found: f64 },
    #[error(transparent)]
    Convex(#[from] ConvexError),
    #[error(transparent)]
    Law(#[from] LawError),
    #[error("invalid input: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub name: String,
    pub value: f64,
}

/// Time-integrated terms of one balance, with `residual = lhs - rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct DissipationReport {
    pub identity: String,
    pub terms: Vec<Term>,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub checks: CheckReport,
    pub cells: usize,
    pub frames: usize,
    pub final_time: f64,
}

impl DissipationReport {
    pub fn term(&self, name: &str) -> Option<f64> {
        self.terms.iter().find(|t| t.name == name).map(|t| t.value)
    }

    /// Largest term in magnitude.
    pub fn scale(&self) -> f64 {
        self.terms.iter().fold(0.0, |m, t| m.max(t.value.abs()))
    }

    /// `|residual| / scale`, or `|residual|` when every term vanishes.
    pub fn normalized_residual(&self) -> f64 {
        let s = self.scale();
        if s > 0.0 {
            self.residual.abs() / s
        } else {
            self.residual.abs()
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.passed()
    }

    /// One row per term, then the totals.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("identity,term,value\n");
        for t in &self.terms {
            out.push_str(&format!("{},{},{}\n", self.identity, t.name, t.value));
        }
        for (name, v) in [("lhs", self.lhs), ("rhs", self.rhs), ("residual", self.residual)] {
            out.push_str(&format!("{},{},{}\n", self.identity, name, v));
        }
        out
    }
}

impl fmt::Display for DissipationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} (cells {}, frames {}, T {})", self.identity, self.cells, self.frames, self.final_time)?;
        for t in &self.terms {
            writeln!(f, "  {:<24} {:+.9e}", t.name, t.value)?;
        }
        writeln!(f, "  {:<24} {:+.3e} (relative {:.3e})", "residual", self.residual, self.normalized_residual())?;
        write!(f, "{}", self.checks)
    }
}

/// Derived fields of one frame.
pub(crate) struct FrameFields<'a> {
    pub frame: &'a Frame,
    pub rho: ScalarField,
    pub grad_w: VectorField,
    pub grad_sq: ScalarField,
    /// `Lap_h w`, equal to `(w - p) / nu` when `nu > 0`.
    pub lap_w: ScalarField,
}

impl<'a> FrameFields<'a> {
    pub fn new(frame: &'a Frame, nu: f64) -> Self {
        let grad_w = gradient(&frame.potential);
        let grad_sq = grad_w.cell_square_norm();
        let lap_w = if nu > 0.0 {
            frame.potential.zip_map(&frame.pressure, |w, p| (w - p) / nu)
        } else {
            laplacian(&frame.potential)
        };
        Self { frame, rho: frame.total(), grad_w, grad_sq, lap_w }
    }

    pub fn p(&self) -> &[f64] {
        self.frame.pressure.values()
    }

    pub fn w(&self) -> &[f64] {
        self.frame.potential.values()
    }
}

pub(crate) fn check_nonempty(traj: &Trajectory) -> Result<(), DiagnosticError> {
    if traj.frames.is_empty() {
        Err(DiagnosticError::Invalid("trajectory has no frames".into()))
    } else {
        Ok(())
    }
}

/// Largest density and largest pressure or potential seen along a run.
pub(crate) fn ranges(traj: &Trajectory) -> (f64, f64) {
    traj.frames.iter().fold((0.0f64, 0.0f64), |(r, b), f| {
        (r.max(f.total().max()), b.max(f.pressure.max()).max(f.potential.max()))
    })
}
