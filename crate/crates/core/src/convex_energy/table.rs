use super::{ConvexError, Interval};

// relative agreement between node curvature and a fitted power slope
const POWER_FIT_TOL: f64 = 1e-6;

/// Behaviour of a tabulated function outside its sampling window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tail {
    /// The function is `+inf` beyond the window.
    Infinite,
    /// The function continues affinely with the end slope.
    Affine,
}

/// A convex function sampled on uniform nodes.
///
/// Node `i` carries the value and the one-sided derivatives `left[i]`,
/// `right[i]`; inside a cell the derivative is interpolated linearly from
/// `right[i]` to `left[i + 1]`, or by a cubic when node curvatures are
/// known. Node values are reproduced exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    lo: f64,
    step: f64,
    values: Vec<f64>,
    left: Vec<f64>,
    right: Vec<f64>,
    curvature: Option<Vec<f64>>,
    below: Tail,
    above: Tail,
}

impl Table {
    /// Assemble a table from raw node data. Derivative data must be monotone.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        lo: f64,
        step: f64,
        values: Vec<f64>,
        mut left: Vec<f64>,
        mut right: Vec<f64>,
        curvature: Option<Vec<f64>>,
        below: Tail,
        above: Tail,
    ) -> Result<Self, ConvexError> {
        let n = values.len();
        if n < 3 || left.len() != n || right.len() != n {
            return Err(ConvexError::InvalidParameter(format!(
                "table needs at least 3 nodes with matching columns, got {n}"
            )));
        }
        if let Some(c) = &curvature {
            if c.len() != n {
                return Err(ConvexError::InvalidParameter("curvature column length".into()));
            }
        }
        if !(step > 0.0 && step.is_finite() && lo.is_finite()) {
            return Err(ConvexError::InvalidParameter(format!("bad grid lo={lo} step={step}")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ConvexError::Degenerate("non-finite node value in table"));
        }
        match below {
            Tail::Infinite => left[0] = f64::NEG_INFINITY,
            Tail::Affine if !left[0].is_finite() => left[0] = right[0],
            Tail::Affine => {}
        }
        match above {
            Tail::Infinite => right[n - 1] = f64::INFINITY,
            Tail::Affine if !right[n - 1].is_finite() => right[n - 1] = left[n - 1],
            Tail::Affine => {}
        }
        let mut prev = f64::NEG_INFINITY;
        for i in 0..n {
            let scale = 1.0 + left[i].abs().min(right[i].abs());
            let slack = 1e-9 * scale;
            if left[i].is_nan() || right[i].is_nan() || left[i] > right[i] + slack || left[i] < prev - slack {
                return Err(ConvexError::NonMonotone { at: lo + i as f64 * step });
            }
            prev = right[i];
        }
        Ok(Self { lo, step, values, left, right, curvature, below, above })
    }

    /// Sample `f` on `n` nodes of `[lo, hi]` and recover derivatives from
    /// differences. A node is a kink when its slope jump exceeds twice the
    /// neighbouring jumps plus `kink_tol` relative.
    pub fn from_samples(
        f: &dyn Fn(f64) -> f64,
        lo: f64,
        hi: f64,
        n: usize,
        below: Tail,
        above: Tail,
        kink_tol: f64,
    ) -> Result<Self, ConvexError> {
        if n < 3 || hi.partial_cmp(&lo) != Some(std::cmp::Ordering::Greater) {
            return Err(ConvexError::InvalidParameter(format!("window [{lo}, {hi}] with {n} nodes")));
        }
        let step = (hi - lo) / (n - 1) as f64;
        let xs: Vec<f64> = (0..n).map(|i| lo + i as f64 * step).collect();
        let values: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(ConvexError::NonFiniteSample { a: xs[i] });
        }
        let secant: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]) / step).collect();
        let jump = |i: usize| secant[i] - secant[i - 1];
        let mut left = vec![0.0; n];
        let mut right = vec![0.0; n];
        for i in 1..n - 1 {
            let j = jump(i);
            let mut neighbour: f64 = 0.0;
            if i >= 2 {
                neighbour = neighbour.max(jump(i - 1));
            }
            if i + 1 < n - 1 {
                neighbour = neighbour.max(jump(i + 1));
            }
            let scale = 1.0f64.max(secant[i].abs()).max(secant[i - 1].abs());
            if j > 2.0 * neighbour + kink_tol * scale {
                left[i] = secant[i - 1];
                right[i] = secant[i];
            } else {
                let d = 0.5 * (secant[i - 1] + secant[i]);
                left[i] = d;
                right[i] = d;
            }
        }
        let d0 = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * step);
        let d0 = d0.min(secant[0]);
        left[0] = d0;
        right[0] = d0;
        let dn = (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * step);
        let dn = dn.max(secant[n - 2]);
        left[n - 1] = dn;
        right[n - 1] = dn;
        Self::from_parts(lo, step, values, left, right, None, below, above)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.lo + (self.len() - 1) as f64 * self.step
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn below(&self) -> Tail {
        self.below
    }

    pub fn above(&self) -> Tail {
        self.above
    }

    pub fn node(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.step
    }

    pub fn node_value(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn node_subdifferential(&self, i: usize) -> Interval {
        Interval::new(self.left[i], self.right[i])
    }

    /// Locate the cell containing `a` and the offset into it.
    fn cell(&self, a: f64) -> (usize, f64) {
        let n = self.len();
        let t = ((a - self.lo) / self.step).floor();
        let i = if t < 0.0 { 0 } else { (t as usize).min(n - 2) };
        (i, a - self.node(i))
    }

    fn cell_slopes(&self, i: usize) -> (f64, f64) {
        (self.right[i], self.left[i + 1])
    }

    pub fn value(&self, a: f64) -> f64 {
        let n = self.len();
        if a.is_nan() {
            return f64::NAN;
        }
        if a < self.lo {
            return match self.below {
                Tail::Infinite => f64::INFINITY,
                Tail::Affine => self.values[0] + self.left[0] * (a - self.lo),
            };
        }
        let hi = self.hi();
        if a > hi {
            return match self.above {
                Tail::Infinite => f64::INFINITY,
                Tail::Affine => self.values[n - 1] + self.right[n - 1] * (a - hi),
            };
        }
        let (i, s) = self.cell(a);
        let h = self.step;
        let v0 = self.values[i];
        if let Some((d1, k, x0, x1)) = self.cell_power(i) {
            let int = |s: f64| d1 * x1 / (k + 1.0) * (((x0 + s) / x1).powf(k + 1.0) - (x0 / x1).powf(k + 1.0));
            let defect = self.values[i + 1] - v0 - int(h);
            return v0 + int(s) + defect * s / h;
        }
        let poly = match self.cell_curvature(i) {
            Some((d0, c0, c1, slope_defect)) => {
                let int = |s: f64| {
                    d0 * s + c0 * s * s / 2.0 + (c1 - c0) * s * s * s / (6.0 * h) + slope_defect * s * s / (2.0 * h)
                };
                Some((int(s), int(h)))
            }
            None => None,
        };
        let (at_s, at_h) = poly.unwrap_or_else(|| {
            let (d0, d1) = self.cell_slopes(i);
            let int = |s: f64| d0 * s + (d1 - d0) * s * s / (2.0 * h);
            (int(s), int(h))
        });
        let defect = self.values[i + 1] - v0 - at_h;
        v0 + at_s + defect * s / h
    }

    /// Curvature-aware cell data `(d0, c0, c1, slope_defect)`, used when the
    /// cubic slope model stays monotone on the cell.
    fn cell_curvature(&self, i: usize) -> Option<(f64, f64, f64, f64)> {
        let c = self.curvature.as_ref()?;
        let (d0, d1) = self.cell_slopes(i);
        let (c0, c1) = (c[i], c[i + 1]);
        if !(d0.is_finite() && d1.is_finite() && c0 >= 0.0 && c1 >= 0.0 && c0.is_finite() && c1.is_finite()) {
            return None;
        }
        let h = self.step;
        let slope_defect = d1 - d0 - 0.5 * h * (c0 + c1);
        (c0.min(c1) + slope_defect / h >= 0.0).then_some((d0, c0, c1, slope_defect))
    }

    /// Slopes of the form `d1 (x / x1)^k`, with `x` measured from node 0, as
    /// near the origin of `b^k`-type slopes. Node 0 must carry a vanishing
    /// slope with zero or infinite curvature, and the node data of the cell
    /// must agree with the power. Returns `(d1, k, x0, x1)`.
    fn cell_power(&self, i: usize) -> Option<(f64, f64, f64, f64)> {
        let c = self.curvature.as_ref()?;
        if self.right[0] != 0.0 || !(c[0] == 0.0 || c[0] == f64::INFINITY) {
            return None;
        }
        let (d0, d1) = self.cell_slopes(i);
        let h = self.step;
        let (x0, x1) = (i as f64 * h, (i + 1) as f64 * h);
        if !(d1 > 0.0 && c[i + 1] > 0.0 && c[i + 1].is_finite()) {
            return None;
        }
        let k = if i == 0 {
            if d0 != 0.0 {
                return None;
            }
            h * c[i + 1] / d1
        } else {
            if !(d0 > 0.0 && c[i] > 0.0 && c[i].is_finite()) {
                return None;
            }
            let k = (d1 / d0).ln() / (x1 / x0).ln();
            let fits = |x: f64, d: f64, c: f64| (c * x / d - k).abs() <= POWER_FIT_TOL * k;
            if !(fits(x0, d0, c[i]) && fits(x1, d1, c[i + 1])) {
                return None;
            }
            k
        };
        (k.is_finite() && k > 0.0).then_some((d1, k, x0, x1))
    }

    fn cell_derivative(&self, i: usize, s: f64) -> f64 {
        let h = self.step;
        if let Some((d1, k, x0, x1)) = self.cell_power(i) {
            return d1 * ((x0 + s) / x1).powf(k);
        }
        match self.cell_curvature(i) {
            Some((d0, c0, c1, sd)) => d0 + c0 * s + (c1 - c0) * s * s / (2.0 * h) + sd * s / h,
            None => {
                let (d0, d1) = self.cell_slopes(i);
                d0 + (d1 - d0) * s / h
            }
        }
    }

    pub fn subdifferential(&self, a: f64) -> Result<Interval, ConvexError> {
        let n = self.len();
        let hi = self.hi();
        if a.is_nan() {
            return Err(ConvexError::OutsideDomain { a });
        }
        if a < self.lo {
            return match self.below {
                Tail::Infinite => Err(ConvexError::OutsideDomain { a }),
                Tail::Affine => Ok(Interval::point(self.left[0])),
            };
        }
        if a > hi {
            return match self.above {
                Tail::Infinite => Err(ConvexError::OutsideDomain { a }),
                Tail::Affine => Ok(Interval::point(self.right[n - 1])),
            };
        }
        if a == hi {
            return Ok(self.node_subdifferential(n - 1));
        }
        let (i, s) = self.cell(a);
        if s == 0.0 {
            return Ok(self.node_subdifferential(i));
        }
        Ok(Interval::point(self.cell_derivative(i, s)))
    }

    pub fn second_derivative(&self, a: f64) -> f64 {
        let hi = self.hi();
        if a < self.lo || a > hi {
            return 0.0;
        }
        let (i, s) = self.cell(a);
        if let Some((d1, k, x0, x1)) = self.cell_power(i) {
            return k * d1 / x1 * ((x0 + s) / x1).powf(k - 1.0);
        }
        match self.cell_curvature(i) {
            Some((_, c0, c1, sd)) => c0 + (c1 - c0) * s / self.step + sd / self.step,
            None => {
                let (d0, d1) = self.cell_slopes(i);
                (d1 - d0) / self.step
            }
        }
    }

    /// Smallest and largest maximiser of `a*b - f(a)`, or `None` when the
    /// supremum is not attained inside the table.
    pub fn argmax_range(&self, b: f64) -> Option<(f64, f64)> {
        let n = self.len();
        if b < self.left[0] || b > self.right[n - 1] {
            return None;
        }
        // smallest node with right >= b
        let i = self.right.partition_point(|&r| r < b);
        let amin = if i == 0 {
            self.lo
        } else if i == n {
            return None;
        } else if self.left[i] > b {
            self.invert_slope(i - 1, b)
        } else {
            self.node(i)
        };
        // largest node with left <= b
        let j = self.left.partition_point(|&l| l <= b);
        if j == 0 {
            return None;
        }
        let j = j - 1;
        let amax = if j == n - 1 {
            self.hi()
        } else if self.right[j] < b {
            self.invert_slope(j, b)
        } else {
            self.node(j)
        };
        Some((amin, amax.max(amin)))
    }

    /// Point of cell `i` where the interpolated slope reaches `b`.
    fn invert_slope(&self, i: usize, b: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, self.step);
        for _ in 0..64 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cell_derivative(i, mid) < b {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        self.node(i) + 0.5 * (lo + hi)
    }

    /// Range of finite slopes carried by the table.
    pub fn slope_range(&self) -> (f64, f64) {
        let n = self.len();
        let lo = if self.left[0].is_finite() { self.left[0] } else { self.right[0] };
        let hi = if self.right[n - 1].is_finite() { self.right[n - 1] } else { self.left[n - 1] };
        (lo, hi)
    }

    /// Legendre transform on `n` nodes of `[blo, bhi]`, by locating the
    /// maximiser through the monotone derivative data.
    pub fn conjugate(&self, blo: f64, bhi: f64, n: usize) -> Result<Table, ConvexError> {
        let (smin, smax) = (self.left[0], self.right[self.len() - 1]);
        let blo = blo.max(smin);
        let bhi = bhi.min(smax);
        if n < 3 || !(bhi > blo) {
            return Err(ConvexError::Degenerate("conjugate window collapses to a point"));
        }
        let step = (bhi - blo) / (n - 1) as f64;
        let mut values = Vec::with_capacity(n);
        let mut left = Vec::with_capacity(n);
        let mut right = Vec::with_capacity(n);
        let mut curvature = Vec::with_capacity(n);
        for k in 0..n {
            let b = blo + k as f64 * step;
            let (amin, amax) = self
                .argmax_range(b)
                .ok_or(ConvexError::Degenerate("conjugate is infinite inside the window"))?;
            values.push(amin * b - self.value(amin));
            left.push(amin);
            right.push(amax);
            // a kink of the conjugate has no curvature; NaN turns the cubic off
            curvature.push(if amax > amin { f64::NAN } else { 1.0 / self.second_derivative(amin) });
        }
        let curvature = self.curvature.is_some().then_some(curvature);
        let flip = |t: Tail| match t {
            Tail::Infinite => Tail::Affine,
            Tail::Affine => Tail::Infinite,
        };
        Table::from_parts(blo, step, values, left, right, curvature, flip(self.below), flip(self.above))
    }
}
