//! Solver for the screened Poisson problem `-nu Lap w + w = p`.
//!
//! One-dimensional grids use a direct tridiagonal solve (Sherman-Morrison
//! for the periodic wrap); two-dimensional grids use conjugate gradients
//! with a Jacobi preconditioner. The discrete operator is an M-matrix, so
//! `min p <= w <= max p`.

use crate::field_grid::{laplacian, Boundary, Grid, ScalarField};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum HelmholtzError {
    #[error("viscosity must be finite and nonnegative, got {0}")]
    Viscosity(f64),
    #[error("right-hand side does not live on the operator grid")]
    GridMismatch,
    #[error("no convergence after {iterations} iterations, residual {residual:e}")]
    NotConverged { iterations: usize, residual: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct HelmholtzOperator {
    grid: Grid,
    nu: f64,
    pub rtol: f64,
    pub max_iterations: usize,
}

impl HelmholtzOperator {
    pub fn new(grid: Grid, nu: f64) -> Result<Self, HelmholtzError> {
        if !(nu >= 0.0 && nu.is_finite()) {
            return Err(HelmholtzError::Viscosity(nu));
        }
        Ok(Self { grid, nu, rtol: 1e-10, max_iterations: 10_000 })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `(I - nu Lap_h) u`.
    pub fn apply(&self, u: &ScalarField) -> ScalarField {
        if self.nu == 0.0 {
            return u.clone();
        }
        let lap = laplacian(u);
        u.zip_map(&lap, |a, l| a - self.nu * l)
    }

    pub fn solve(&self, p: &ScalarField) -> Result<ScalarField, HelmholtzError> {
        if p.grid() != &self.grid {
            return Err(HelmholtzError::GridMismatch);
        }
        if self.nu == 0.0 {
            return Ok(p.clone());
        }
        if self.grid.dim() == 1 {
            Ok(self.solve_line(p))
        } else {
            self.solve_cg(p)
        }
    }

    fn solve_line(&self, p: &ScalarField) -> ScalarField {
        let n = self.grid.cells_per_axis();
        let h = self.grid.spacing();
        let off = -self.nu / (h * h);
        let rhs = p.values();
        let out = match self.grid.boundary() {
            Boundary::Neumann => {
                let mut diag = vec![1.0 - 2.0 * off; n];
                diag[0] = 1.0 - off;
                diag[n - 1] = 1.0 - off;
                thomas(off, &diag, rhs)
            }
            Boundary::Periodic => {
                // A = T + u v^T with u = (-d0, 0, .., off), v = (1, 0, .., -off/d0)
                let d = 1.0 - 2.0 * off;
                let gamma = -d;
                let mut diag = vec![d; n];
                diag[0] = d - gamma;
                diag[n - 1] = d - off * off / gamma;
                let y = thomas(off, &diag, rhs);
                let mut u = vec![0.0; n];
                u[0] = gamma;
                u[n - 1] = off;
                let q = thomas(off, &diag, &u);
                let vy = y[0] + off / gamma * y[n - 1];
                let vq = q[0] + off / gamma * q[n - 1];
                let factor = vy / (1.0 + vq);
                y.iter().zip(&q).map(|(a, b)| a - factor * b).collect()
            }
        };
        ScalarField::from_vec(self.grid, out).expect("solution is finite")
    }

    fn solve_cg(&self, p: &ScalarField) -> Result<ScalarField, HelmholtzError> {
        let h = self.grid.spacing();
        let n = self.grid.cells_per_axis();
        let neumann = self.grid.boundary() == Boundary::Neumann;
        let diag: Vec<f64> = (0..self.grid.len())
            .map(|k| {
                let (i, j) = self.grid.unflatten(k);
                let edges = |i: usize| if neumann && (i == 0 || i == n - 1) { 1.0 } else { 2.0 };
                1.0 + self.nu * (edges(i) + edges(j)) / (h * h)
            })
            .collect();
        let target = self.rtol * p.max_abs();
        let mut x = p.clone();
        let mut r = p.zip_map(&self.apply(&x), |a, b| a - b);
        let mut z: Vec<f64> = r.values().iter().zip(&diag).map(|(a, d)| a / d).collect();
        let mut d = ScalarField::from_vec(self.grid, z.clone()).expect("finite");
        let mut rz: f64 = r.values().iter().zip(&z).map(|(a, b)| a * b).sum();
        for it in 0..self.max_iterations {
            if r.max_abs() <= target {
                return Ok(x);
            }
            let ad = self.apply(&d);
            let dad: f64 = d.values().iter().zip(ad.values()).map(|(a, b)| a * b).sum();
            if dad <= 0.0 {
                return Err(HelmholtzError::NotConverged { iterations: it, residual: r.max_abs() });
            }
            let alpha = rz / dad;
            for (xv, dv) in x.values_mut().iter_mut().zip(d.values()) {
                *xv += alpha * dv;
            }
            for (rv, av) in r.values_mut().iter_mut().zip(ad.values()) {
                *rv -= alpha * av;
            }
            for ((zv, rv), dg) in z.iter_mut().zip(r.values()).zip(&diag) {
                *zv = rv / dg;
            }
            let rz_new: f64 = r.values().iter().zip(&z).map(|(a, b)| a * b).sum();
            let beta = rz_new / rz;
            rz = rz_new;
            for (dv, zv) in d.values_mut().iter_mut().zip(&z) {
                *dv = zv + beta * *dv;
            }
        }
        let residual = r.max_abs();
        if residual <= target {
            Ok(x)
        } else {
            Err(HelmholtzError::NotConverged { iterations: self.max_iterations, residual })
        }
    }
}

/// Tridiagonal solve with constant off-diagonal `off`.
fn thomas(off: f64, diag: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = off / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - off * c[i - 1];
        c[i] = off / m;
        d[i] = (rhs[i] - off * d[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Solve `-nu Lap_h w + w = p` on the grid of `p`.
pub fn solve_w(p: &ScalarField, nu: f64) -> Result<ScalarField, HelmholtzError> {
    HelmholtzOperator::new(*p.grid(), nu)?.solve(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn zero_viscosity_is_identity() {
        let g = Grid::line(16, 1.0).unwrap();
        let p = ScalarField::from_fn(g, |x, _| x.exp());
        assert_eq!(solve_w(&p, 0.0).unwrap(), p);
    }

    #[test]
    fn constants_are_fixed() {
        for (dim, b) in [(1, Boundary::Neumann), (1, Boundary::Periodic), (2, Boundary::Neumann), (2, Boundary::Periodic)] {
            let g = Grid::new(dim, 16, 2.0, b).unwrap();
            let w = solve_w(&ScalarField::constant(g, 3.0), 0.5).unwrap();
            for v in w.values() {
                assert!((v - 3.0).abs() < 1e-9, "{dim} {b:?} {v}");
            }
        }
    }

    #[test]
    fn periodic_sine_mode() {
        let l = 1.0;
        let nu = 0.01;
        let g = Grid::new(1, 64, l, Boundary::Periodic).unwrap();
        let h = g.spacing();
        for mode in [1.0, 2.0, 5.0] {
            let k = 2.0 * PI * mode / l;
            let p = ScalarField::from_fn(g, |x, _| (k * x).sin());
            let w = solve_w(&p, nu).unwrap();
            let lambda = (2.0 - 2.0 * (k * h).cos()) / (h * h);
            for (a, b) in w.values().iter().zip(p.values()) {
                assert!((a - b / (1.0 + nu * lambda)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn negative_viscosity_rejected() {
        let g = Grid::line(16, 1.0).unwrap();
        assert!(matches!(solve_w(&ScalarField::zeros(g), -1.0), Err(HelmholtzError::Viscosity(_))));
    }

    #[test]
    fn iteration_cap_reports_residual() {
        let g = Grid::new(2, 32, 1.0, Boundary::Neumann).unwrap();
        let mut op = HelmholtzOperator::new(g, 1.0).unwrap();
        op.max_iterations = 1;
        let p = ScalarField::from_fn(g, |x, y| (3.0 * x).sin() * y.cos());
        assert!(matches!(op.solve(&p), Err(HelmholtzError::NotConverged { .. })));
    }
}
