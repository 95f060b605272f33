//! Convex scalar functions on the real line: values, subdifferentials,
//! Legendre conjugates, Moreau envelopes, and the density-energy /
//! pressure-function couplings used by the energy identities.
//!
//! A function is either a closed form (evaluated analytically) or a
//! [`Table`] sampled on a uniform grid.

mod closed;
mod construct;
mod io;
mod table;

use std::sync::Arc;

pub use closed::{ClosedForm, NegativeSide};
pub use construct::{e_from_z, h_energy, moreau_conjugate, z_from_e, MonotoneMap};
pub use io::parse_table_csv;
pub use table::{Table, Tail};

/// Upper end of the default sampling window when no scenario bound is known.
pub const DEFAULT_WINDOW: f64 = 4.0;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ConvexError {
    #[error("point {a} lies outside the domain")]
    OutsideDomain { a: f64 },
    #[error("degenerate function: {0}")]
    Degenerate(&'static str),
    #[error("map is not monotone near {at}")]
    NonMonotone { at: f64 },
    #[error("energy must vanish at the origin, found {value}")]
    NonzeroAtOrigin { value: f64 },
    #[error("coupling mismatch at a={a}: expected slope {expected}, found {found}")]
    CouplingMismatch { a: f64, expected: f64, found: f64 },
    #[error("non-finite sample at a={a}")]
    NonFiniteSample { a: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Closed interval of the extended reals; empty when `lo > hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const EMPTY: Interval = Interval { lo: f64::INFINITY, hi: f64::NEG_INFINITY };

    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    pub fn is_empty(&self) -> bool {
        !(self.lo <= self.hi)
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        x >= self.lo - tol && x <= self.hi + tol
    }

    /// Distance from `x` to the interval (0 inside).
    pub fn distance(&self, x: f64) -> f64 {
        if x < self.lo {
            self.lo - x
        } else if x > self.hi {
            x - self.hi
        } else {
            0.0
        }
    }

    /// Element of least magnitude.
    pub fn min_norm(&self) -> f64 {
        0.0f64.clamp(self.lo, self.hi)
    }
}

/// Sampling parameters for tabulated constructions.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulation {
    pub points: usize,
    /// Sampling window; constructions pick their own default when unset.
    pub window: Option<(f64, f64)>,
    /// Relative slope jump above which a node counts as a kink.
    pub kink_tol: f64,
}

impl Default for Tabulation {
    fn default() -> Self {
        Self { points: 4096, window: None, kink_tol: 1e-6 }
    }
}

impl Tabulation {
    pub fn on(lo: f64, hi: f64) -> Self {
        Self { window: Some((lo, hi)), ..Self::default() }
    }

    pub fn with_points(mut self, points: usize) -> Self {
        self.points = points;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    ClosedForm,
    Tabulated,
}

/// A proper, lower semicontinuous convex function on the real line.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexScalarFunction {
    Closed(ClosedForm),
    Tabulated(Arc<Table>),
}

impl From<ClosedForm> for ConvexScalarFunction {
    fn from(c: ClosedForm) -> Self {
        Self::Closed(c)
    }
}

impl From<Table> for ConvexScalarFunction {
    fn from(t: Table) -> Self {
        Self::Tabulated(Arc::new(t))
    }
}

impl ConvexScalarFunction {
    /// Sample an arbitrary convex closure on a window. The function is taken
    /// to be `+inf` outside the window unless `affine_tails` is set.
    pub fn tabulate(
        f: &dyn Fn(f64) -> f64,
        tab: &Tabulation,
        affine_tails: bool,
    ) -> Result<Self, ConvexError> {
        let (lo, hi) = tab.window.unwrap_or((0.0, DEFAULT_WINDOW));
        let tail = if affine_tails { Tail::Affine } else { Tail::Infinite };
        Ok(Table::from_samples(f, lo, hi, tab.points, tail, tail, tab.kink_tol)?.into())
    }

    pub fn representation(&self) -> Representation {
        match self {
            Self::Closed(_) => Representation::ClosedForm,
            Self::Tabulated(_) => Representation::Tabulated,
        }
    }

    pub fn as_table(&self) -> Option<&Table> {
        match self {
            Self::Tabulated(t) => Some(t),
            Self::Closed(_) => None,
        }
    }

    pub fn value(&self, a: f64) -> f64 {
        match self {
            Self::Closed(c) => c.value(a),
            Self::Tabulated(t) => t.value(a),
        }
    }

    pub fn subdifferential(&self, a: f64) -> Result<Interval, ConvexError> {
        match self {
            Self::Closed(c) => c.subdifferential(a),
            Self::Tabulated(t) => t.subdifferential(a),
        }
    }

    /// Least-magnitude element of the subdifferential.
    pub fn derivative(&self, a: f64) -> Result<f64, ConvexError> {
        let s = self.subdifferential(a)?;
        if s.is_empty() {
            return Err(ConvexError::OutsideDomain { a });
        }
        Ok(s.min_norm())
    }

    /// Density of the second derivative; zero at pure kinks.
    pub fn second_derivative(&self, a: f64) -> f64 {
        match self {
            Self::Closed(c) => c.second_derivative(a),
            Self::Tabulated(t) => t.second_derivative(a),
        }
    }

    /// Closure of the effective domain as `(lo, hi)`.
    pub fn domain(&self) -> (f64, f64) {
        match self {
            Self::Closed(c) => c.domain(),
            Self::Tabulated(t) => {
                let lo = match t.below() {
                    Tail::Infinite => t.lo(),
                    Tail::Affine => f64::NEG_INFINITY,
                };
                let hi = match t.above() {
                    Tail::Infinite => t.hi(),
                    Tail::Affine => f64::INFINITY,
                };
                (lo, hi)
            }
        }
    }

    /// Legendre conjugate with the default tabulation.
    pub fn conjugate(&self) -> Result<Self, ConvexError> {
        self.conjugate_with(&Tabulation::default())
    }

    /// Legendre conjugate. Closed forms map to closed forms; tables are
    /// conjugated on `tab.window` (default: the table's slope range).
    pub fn conjugate_with(&self, tab: &Tabulation) -> Result<Self, ConvexError> {
        match self {
            Self::Closed(c) => c.conjugate().map(Self::Closed),
            Self::Tabulated(t) => {
                let (lo, hi) = tab.window.unwrap_or_else(|| t.slope_range());
                Ok(t.conjugate(lo, hi, tab.points)?.into())
            }
        }
    }

    /// Convert to a table on the given window, keeping the closed form's
    /// node derivatives exact.
    pub fn to_table(&self, tab: &Tabulation) -> Result<Table, ConvexError> {
        if let Self::Tabulated(t) = self {
            return Ok((**t).clone());
        }
        let (lo, hi) = tab.window.unwrap_or((0.0, DEFAULT_WINDOW));
        let n = tab.points;
        if n < 3 || !(hi > lo) {
            return Err(ConvexError::InvalidParameter(format!("window [{lo}, {hi}]")));
        }
        let step = (hi - lo) / (n - 1) as f64;
        let mut values = Vec::with_capacity(n);
        let mut left = Vec::with_capacity(n);
        let mut right = Vec::with_capacity(n);
        let mut curv = Vec::with_capacity(n);
        for i in 0..n {
            let a = lo + i as f64 * step;
            let v = self.value(a);
            if !v.is_finite() {
                return Err(ConvexError::NonFiniteSample { a });
            }
            let s = self.subdifferential(a)?;
            values.push(v);
            left.push(s.lo);
            right.push(s.hi);
            curv.push(self.second_derivative(a));
        }
        let (dlo, dhi) = self.domain();
        let below = if lo <= dlo { Tail::Infinite } else { Tail::Affine };
        let above = if hi >= dhi { Tail::Infinite } else { Tail::Affine };
        let curv = curv.iter().all(|c| c.is_finite()).then_some(curv);
        Table::from_parts(lo, step, values, left, right, curv, below, above)
    }
}
