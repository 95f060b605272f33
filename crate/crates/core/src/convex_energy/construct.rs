//! Tabulated constructions: the pressure function generated by a density
//! energy, the density energy generated by a pressure function, the `h`
//! energy, and Moreau envelopes.

use std::fmt;
use std::sync::Arc;

use super::{ConvexError, ConvexScalarFunction, Table, Tabulation, Tail, DEFAULT_WINDOW};
use crate::quadrature;

type RealMap = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Nondecreasing map together with its derivative.
#[derive(Clone)]
pub struct MonotoneMap {
    map: RealMap,
    slope: RealMap,
}

impl fmt::Debug for MonotoneMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("MonotoneMap")
    }
}

impl MonotoneMap {
    pub fn new(
        map: impl Fn(f64) -> f64 + Send + Sync + 'static,
        slope: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { map: Arc::new(map), slope: Arc::new(slope) }
    }

    pub fn identity() -> Self {
        Self::new(|b| b, |_| 1.0)
    }

    /// `S = g` for a convex `g` that is nondecreasing where it is used.
    pub fn of_convex(g: ConvexScalarFunction) -> Self {
        let g2 = g.clone();
        Self::new(
            move |b| g.value(b),
            move |b| g2.derivative(b).unwrap_or(0.0),
        )
    }

    pub fn eval(&self, b: f64) -> f64 {
        (self.map)(b)
    }

    pub fn slope(&self, b: f64) -> f64 {
        (self.slope)(b)
    }
}

fn window(tab: &Tabulation, default: (f64, f64)) -> Result<(f64, f64, f64), ConvexError> {
    let (lo, hi) = tab.window.unwrap_or(default);
    if tab.points < 3 || !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(ConvexError::InvalidParameter(format!("window [{lo}, {hi}] with {} nodes", tab.points)));
    }
    Ok((lo, hi, (hi - lo) / (tab.points - 1) as f64))
}

/// Pressure function `z` with `z'(b) = int_0^b (f*)'(beta) S'(beta) d beta`,
/// coupled to the density energy `e` whose slopes are `S` of the slopes of `f`.
pub fn z_from_e(
    e: &ConvexScalarFunction,
    s: &MonotoneMap,
    f: &ConvexScalarFunction,
    tab: &Tabulation,
) -> Result<ConvexScalarFunction, ConvexError> {
    let e0 = e.value(0.0);
    if !(e0.abs() <= 1e-12) {
        return Err(ConvexError::NonzeroAtOrigin { value: e0 });
    }
    let (lo, _hi, step) = window(tab, (0.0, DEFAULT_WINDOW))?;
    if lo != 0.0 {
        return Err(ConvexError::InvalidParameter("pressure window must start at 0".into()));
    }
    let n = tab.points;
    let mut prev = s.eval(0.0);
    for i in 1..n {
        let b = i as f64 * step;
        let v = s.eval(b);
        if v < prev - 1e-12 * (1.0 + prev.abs()) {
            return Err(ConvexError::NonMonotone { at: b });
        }
        prev = v;
    }
    let fstar = f.conjugate_with(tab)?;
    // Sampled check that slopes of e are S of slopes of f.
    for k in 1..32 {
        let b = k as f64 * (n - 1) as f64 * step / 32.0;
        let a = fstar.derivative(b)?;
        if a <= 0.0 {
            continue;
        }
        let expected = s.eval(b);
        let found = e.subdifferential(a)?;
        if found.distance(expected) > 1e-6 * (1.0 + expected.abs()) {
            return Err(ConvexError::CouplingMismatch { a, expected, found: found.min_norm() });
        }
    }
    let integrand = |beta: f64| {
        let d = fstar.derivative(beta).unwrap_or(0.0);
        d * s.slope(beta)
    };
    // z' on the half-step grid, then z by Simpson on whole cells.
    let fine = quadrature::cumulative(&integrand, 0.0, 0.5 * step, 2 * n - 1);
    let mut values = Vec::with_capacity(n);
    let mut acc = 0.0;
    values.push(0.0);
    for i in 0..n - 1 {
        acc += step * (fine[2 * i] + 4.0 * fine[2 * i + 1] + fine[2 * i + 2]) / 6.0;
        values.push(acc);
    }
    let slopes: Vec<f64> = (0..n).map(|i| fine[2 * i]).collect();
    let curv: Vec<f64> = (0..n).map(|i| integrand(i as f64 * step)).collect();
    let curv = curv.iter().all(|c| c.is_finite()).then_some(curv);
    Ok(Table::from_parts(0.0, step, values, slopes.clone(), slopes, curv, Tail::Affine, Tail::Affine)?.into())
}

/// Density energy `e(a) = a int_{a1}^a z'(f'(alpha)) / alpha^2 d alpha`.
/// A different `a1` changes the result by a linear term only.
pub fn e_from_z(
    z: &ConvexScalarFunction,
    f: &ConvexScalarFunction,
    a1: f64,
    tab: &Tabulation,
) -> Result<ConvexScalarFunction, ConvexError> {
    let (dlo, dhi) = f.domain();
    if !(a1 > dlo.max(0.0) && a1 < dhi) {
        return Err(ConvexError::OutsideDomain { a: a1 });
    }
    let default_hi = if dhi.is_finite() { 0.999 * dhi } else { DEFAULT_WINDOW };
    let (lo, _hi, step) = window(tab, (0.0, default_hi))?;
    if lo != 0.0 {
        return Err(ConvexError::InvalidParameter("density window must start at 0".into()));
    }
    let n = tab.points;
    let zf = |a: f64| z.derivative(f.derivative(a).unwrap_or(0.0)).unwrap_or(0.0);
    let g = |a: f64| zf(a) / (a * a);
    // Running integral from the first positive node.
    let running = quadrature::cumulative(&g, step, step, n - 1);
    let anchor = if a1 < step {
        -quadrature::integrate(&g, a1, step, 16)
    } else {
        let j = (((a1 - step) / step).floor() as usize).min(n - 2);
        running[j] + quadrature::integrate(&g, step * (j + 1) as f64, a1, 4)
    };
    let mut values = vec![0.0; n];
    let mut slopes = vec![0.0; n];
    let mut curv = vec![0.0; n];
    for i in 1..n {
        let a = i as f64 * step;
        let integral = running[i - 1] - anchor;
        values[i] = a * integral;
        slopes[i] = integral + zf(a) / a;
        let fp = f.derivative(a).unwrap_or(0.0);
        curv[i] = z.second_derivative(fp) * f.second_derivative(a) / a;
    }
    let secant = values[1] / step;
    let d0 = (2.0 * secant - slopes[1]).min(secant);
    slopes[0] = if d0.is_finite() { d0 } else { secant };
    curv[0] = (slopes[1] - slopes[0]) / step;
    let curv = curv.iter().all(|c| c.is_finite()).then_some(curv);
    let mut left = slopes.clone();
    left[0] = f64::NEG_INFINITY;
    Ok(Table::from_parts(0.0, step, values, left, slopes, curv, Tail::Infinite, Tail::Affine)?.into())
}

/// `h(a) = a f(a) - 2 int_0^a f`, with `a*b - f(a)` in its subdifferential
/// whenever `b` is in that of `f`.
pub fn h_energy(f: &ConvexScalarFunction, tab: &Tabulation) -> Result<ConvexScalarFunction, ConvexError> {
    let (dlo, dhi) = f.domain();
    let default_hi = if dhi.is_finite() { 0.999 * dhi } else { DEFAULT_WINDOW };
    let (lo, hi, step) = window(tab, (0.0, default_hi))?;
    if lo != 0.0 || dlo > 0.0 || hi > dhi {
        return Err(ConvexError::OutsideDomain { a: if lo != 0.0 { lo } else { hi } });
    }
    let n = tab.points;
    let fv = |a: f64| f.value(a);
    if let Some(i) = (0..n).find(|&i| !fv(i as f64 * step).is_finite()) {
        return Err(ConvexError::NonFiniteSample { a: i as f64 * step });
    }
    let running = quadrature::cumulative(&fv, 0.0, step, n);
    let mut values = Vec::with_capacity(n);
    let mut left = Vec::with_capacity(n);
    let mut right = Vec::with_capacity(n);
    let mut curv = Vec::with_capacity(n);
    for (i, integral) in running.iter().enumerate() {
        let a = i as f64 * step;
        let v = fv(a);
        values.push(a * v - 2.0 * integral);
        let sd = f.subdifferential(a)?;
        if i == 0 {
            left.push(f64::NEG_INFINITY);
            right.push(-v);
        } else {
            left.push(a * sd.lo - v);
            right.push(a * sd.hi - v);
        }
        curv.push(a * f.second_derivative(a));
    }
    let above = if right[n - 1].is_finite() { Tail::Affine } else { Tail::Infinite };
    let curv = curv.iter().all(|c| c.is_finite()).then_some(curv);
    Ok(Table::from_parts(0.0, step, values, left, right, curv, Tail::Infinite, above)?.into())
}

/// Proximal point of `g` at `b` with parameter `delta`.
fn prox(g: &ConvexScalarFunction, b: f64, delta: f64) -> f64 {
    // theta is too small when theta + delta * sup dg(theta) < b
    let too_small = |theta: f64| match g.subdifferential(theta) {
        Ok(s) => theta + delta * s.hi < b,
        Err(_) => {
            let (lo, _) = g.domain();
            theta < lo
        }
    };
    let mut width = 1.0 + b.abs();
    let mut lo = b - width;
    let mut hi = b + width;
    for _ in 0..200 {
        if too_small(lo) {
            break;
        }
        width *= 2.0;
        lo = b - width;
    }
    for _ in 0..200 {
        if !too_small(hi) {
            break;
        }
        width *= 2.0;
        hi = b + width;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if too_small(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Moreau envelope `inf_theta g(theta) + |theta - b|^2 / (2 delta)`.
pub fn moreau_conjugate(
    g: &ConvexScalarFunction,
    delta: f64,
    tab: &Tabulation,
) -> Result<ConvexScalarFunction, ConvexError> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(ConvexError::InvalidParameter(format!("delta = {delta}")));
    }
    let (lo, _hi, step) = window(tab, (0.0, DEFAULT_WINDOW))?;
    let n = tab.points;
    let mut values = Vec::with_capacity(n);
    let mut slopes = Vec::with_capacity(n);
    for i in 0..n {
        let b = lo + i as f64 * step;
        let theta = prox(g, b, delta);
        let v = g.value(theta) + (theta - b) * (theta - b) / (2.0 * delta);
        if !v.is_finite() {
            return Err(ConvexError::NonFiniteSample { a: b });
        }
        values.push(v);
        slopes.push((b - theta) / delta);
    }
    Ok(Table::from_parts(lo, step, values, slopes.clone(), slopes, None, Tail::Affine, Tail::Affine)?.into())
}
