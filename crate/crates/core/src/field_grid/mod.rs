//! Uniform Cartesian grids in one or two dimensions with cell-centred scalar
//! fields and face-centred (staggered) vector fields.
//!
//! The box is `[-L/2, L/2]^d`. Face `i` along an axis sits between cell `i`
//! and cell `i + 1`; on Neumann grids the last face of each row is the
//! boundary and carries no flux, on periodic grids it wraps to cell 0.

mod io;

pub use io::{decode_field, encode_field, parse_field_csv, FIELD_MAGIC};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum GridError {
    #[error("dimension must be 1 or 2, got {0}")]
    Dimension(usize),
    #[error("need at least 8 cells per axis, got {0}")]
    TooFewCells(usize),
    #[error("box length must be positive and finite, got {0}")]
    Length(f64),
    #[error("field has {found} values, grid expects {expected}")]
    Size { expected: usize, found: usize },
    #[error("non-finite value at cell {0}")]
    NonFinite(usize),
    #[error("malformed field data: {0}")]
    Malformed(String),
    #[error("cannot restrict {fine} cells onto {coarse}")]
    Incompatible { fine: usize, coarse: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    Neumann,
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    cells: usize,
    length: f64,
    boundary: Boundary,
}

impl Grid {
    pub fn new(dim: usize, cells: usize, length: f64, boundary: Boundary) -> Result<Self, GridError> {
        if dim != 1 && dim != 2 {
            return Err(GridError::Dimension(dim));
        }
        if cells < 8 {
            return Err(GridError::TooFewCells(cells));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(GridError::Length(length));
        }
        Ok(Self { dim, cells, length, boundary })
    }

    pub fn line(cells: usize, length: f64) -> Result<Self, GridError> {
        Self::new(1, cells, length, Boundary::Neumann)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells_per_axis(&self) -> usize {
        self.cells
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.cells as f64
    }

    /// Volume of one cell, `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn len(&self) -> usize {
        self.cells.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Centre coordinate of cell `i` along an axis.
    pub fn center(&self, i: usize) -> f64 {
        -0.5 * self.length + (i as f64 + 0.5) * self.spacing()
    }

    /// `(i, j)` indices of a flat cell index (`j = 0` in 1D).
    pub fn unflatten(&self, k: usize) -> (usize, usize) {
        (k % self.cells, k / self.cells)
    }

    pub fn position(&self, k: usize) -> (f64, f64) {
        let (i, j) = self.unflatten(k);
        (self.center(i), if self.dim == 2 { self.center(j) } else { 0.0 })
    }

    /// Grid with the same box and boundary but a different resolution.
    pub fn refined(&self, cells: usize) -> Result<Self, GridError> {
        Self::new(self.dim, cells, self.length, self.boundary)
    }

    pub(crate) fn neighbour(&self, i: usize) -> Option<usize> {
        if i + 1 < self.cells {
            Some(i + 1)
        } else {
            match self.boundary {
                Boundary::Periodic => Some(0),
                Boundary::Neumann => None,
            }
        }
    }

    fn previous(&self, i: usize) -> Option<usize> {
        if i > 0 {
            Some(i - 1)
        } else {
            match self.boundary {
                Boundary::Periodic => Some(self.cells - 1),
                Boundary::Neumann => None,
            }
        }
    }
}

/// One value per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    data: Vec<f64>,
}

/// One value per face per axis; index `k` is the face on the high side of
/// cell `k` along that axis.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: Grid,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        Self { grid, data: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self { grid, data: vec![c; grid.len()] }
    }

    pub fn from_vec(grid: Grid, data: Vec<f64>) -> Result<Self, GridError> {
        if data.len() != grid.len() {
            return Err(GridError::Size { expected: grid.len(), found: data.len() });
        }
        if let Some(k) = data.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite(k));
        }
        Ok(Self { grid, data })
    }

    /// Sample `f(x, y)` at cell centres (`y = 0` in 1D).
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let data = (0..grid.len())
            .map(|k| {
                let (x, y) = grid.position(k);
                f(x, y)
            })
            .collect();
        Self { grid, data }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_values(self) -> Vec<f64> {
        self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Self { grid: self.grid, data }
    }

    pub fn integral(&self) -> f64 {
        self.grid.cell_volume() * self.data.iter().sum::<f64>()
    }

    pub fn inner(&self, other: &Self) -> f64 {
        self.grid.cell_volume() * self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn l1_norm(&self) -> f64 {
        self.grid.cell_volume() * self.data.iter().map(|v| v.abs()).sum::<f64>()
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.data.iter().all(|&v| v >= 0.0)
    }

    /// Largest `|value|` within `cells` cells of the box boundary.
    pub fn boundary_max(&self, cells: usize) -> f64 {
        let n = self.grid.cells;
        let near = |i: usize| i < cells || i + cells >= n;
        (0..self.data.len())
            .filter(|&k| {
                let (i, j) = self.grid.unflatten(k);
                near(i) || (self.grid.dim == 2 && near(j))
            })
            .fold(0.0, |m, k| m.max(self.data[k].abs()))
    }

    /// `h^d` times the sum of `self` over cells where `mask` holds for the
    /// corresponding value of `by`.
    pub fn masked_integral(&self, by: &ScalarField, mask: impl Fn(f64) -> bool) -> f64 {
        let sum: f64 = self.data.iter().zip(&by.data).filter(|(_, &m)| mask(m)).map(|(&u, _)| u).sum();
        self.grid.cell_volume() * sum
    }
}

impl VectorField {
    pub fn zeros(grid: Grid) -> Self {
        let y = if grid.dim == 2 { vec![0.0; grid.len()] } else { Vec::new() };
        Self { grid, x: vec![0.0; grid.len()], y }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn x_faces(&self) -> &[f64] {
        &self.x
    }

    pub fn y_faces(&self) -> &[f64] {
        &self.y
    }

    pub fn x_faces_mut(&mut self) -> &mut [f64] {
        &mut self.x
    }

    pub fn y_faces_mut(&mut self) -> &mut [f64] {
        &mut self.y
    }

    /// Largest face value in magnitude.
    pub fn max_abs(&self) -> f64 {
        self.x.iter().chain(&self.y).fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `h^d` times the sum over faces of the products.
    pub fn inner(&self, other: &Self) -> f64 {
        let s: f64 = self.x.iter().zip(&other.x).chain(self.y.iter().zip(&other.y)).map(|(a, b)| a * b).sum();
        self.grid.cell_volume() * s
    }

    /// Cell-centred `|F|^2`: per axis, the mean of the squares on the two
    /// faces bounding the cell. Its integral equals `inner(self, self)`.
    pub fn cell_square_norm(&self) -> ScalarField {
        self.cell_dot(self)
    }

    /// Cell-centred `F . G` built like [`Self::cell_square_norm`].
    pub fn cell_dot(&self, other: &Self) -> ScalarField {
        let g = self.grid;
        let n = g.cells;
        let mut out = vec![0.0; g.len()];
        let faces = |f: &[f64], e: &[f64], k: usize, i: usize, stride: usize, out: &mut f64| {
            let hi = f[k] * e[k];
            let lo = match g.previous(i) {
                Some(p) => f[k - i * stride + p * stride] * e[k - i * stride + p * stride],
                None => 0.0,
            };
            *out += 0.5 * (hi + lo);
        };
        for (k, o) in out.iter_mut().enumerate() {
            let (i, j) = g.unflatten(k);
            faces(&self.x, &other.x, k, i, 1, o);
            if g.dim == 2 {
                faces(&self.y, &other.y, k, j, n, o);
            }
        }
        ScalarField { grid: g, data: out }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid, x: self.x.iter().map(|&v| f(v)).collect(), y: self.y.iter().map(|&v| f(v)).collect() }
    }
}

fn face_difference(u: &[f64], g: &Grid, k: usize, i: usize, stride: usize) -> f64 {
    match g.neighbour(i) {
        Some(nb) => (u[k - i * stride + nb * stride] - u[k]) / g.spacing(),
        None => 0.0,
    }
}

/// Face differences `(u_{i+1} - u_i) / h`; Neumann boundary faces are zero.
pub fn gradient(u: &ScalarField) -> VectorField {
    let g = u.grid;
    let n = g.cells;
    let mut out = VectorField::zeros(g);
    for k in 0..g.len() {
        let (i, j) = g.unflatten(k);
        out.x[k] = face_difference(&u.data, &g, k, i, 1);
        if g.dim == 2 {
            out.y[k] = face_difference(&u.data, &g, k, j, n);
        }
    }
    out
}

fn face_divergence(f: &[f64], g: &Grid, k: usize, i: usize, stride: usize) -> f64 {
    let hi = if g.neighbour(i).is_some() { f[k] } else { 0.0 };
    let lo = match g.previous(i) {
        Some(p) => f[k - i * stride + p * stride],
        None => 0.0,
    };
    (hi - lo) / g.spacing()
}

/// Negative adjoint of [`gradient`]. Values stored on Neumann boundary faces
/// are ignored.
pub fn divergence(f: &VectorField) -> ScalarField {
    let g = f.grid;
    let n = g.cells;
    let mut out = ScalarField::zeros(g);
    for k in 0..g.len() {
        let (i, j) = g.unflatten(k);
        let mut d = face_divergence(&f.x, &g, k, i, 1);
        if g.dim == 2 {
            d += face_divergence(&f.y, &g, k, j, n);
        }
        out.data[k] = d;
    }
    out
}

/// Three-point (1D) or five-point (2D) Laplacian, equal to
/// `divergence(gradient(u))`.
pub fn laplacian(u: &ScalarField) -> ScalarField {
    let g = u.grid;
    let n = g.cells;
    let h2 = g.spacing() * g.spacing();
    let mut out = ScalarField::zeros(g);
    let axis = |k: usize, i: usize, stride: usize| {
        let c = u.data[k];
        let hi = g.neighbour(i).map_or(0.0, |nb| u.data[k - i * stride + nb * stride] - c);
        let lo = g.previous(i).map_or(0.0, |p| u.data[k - i * stride + p * stride] - c);
        (hi + lo) / h2
    };
    for k in 0..g.len() {
        let (i, j) = g.unflatten(k);
        let mut v = axis(k, i, 1);
        if g.dim == 2 {
            v += axis(k, j, n);
        }
        out.data[k] = v;
    }
    out
}

/// Integral of `u` over cells where `mask` holds for the value of `by`.
pub fn masked_integral(u: &ScalarField, by: &ScalarField, mask: impl Fn(f64) -> bool) -> f64 {
    u.masked_integral(by, mask)
}

/// Block average of `u` onto a coarser grid whose cell count divides the
/// fine one.
pub fn restrict(u: &ScalarField, coarse: Grid) -> Result<ScalarField, GridError> {
    let fine = *u.grid();
    if fine == coarse {
        return Ok(u.clone());
    }
    let (nf, nc) = (fine.cells_per_axis(), coarse.cells_per_axis());
    let same_box = (fine.length() - coarse.length()).abs() <= 1e-12 * fine.length();
    if fine.dim() != coarse.dim() || nf % nc != 0 || !same_box || fine.boundary() != coarse.boundary() {
        return Err(GridError::Incompatible { fine: nf, coarse: nc });
    }
    let r = nf / nc;
    let mut out = ScalarField::zeros(coarse);
    let block = (r as f64).powi(fine.dim() as i32);
    for (k, &v) in u.data.iter().enumerate() {
        let (i, j) = fine.unflatten(k);
        let target = if fine.dim() == 1 { i / r } else { (j / r) * nc + i / r };
        out.data[target] += v / block;
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
