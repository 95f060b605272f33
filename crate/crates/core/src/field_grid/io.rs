//! Field snapshots as CSV (`x,value` or `x,y,value`) and as a little-endian
//! binary dump:
//!
//! ```text
//! magic "CGF1" | dim u8 | boundary u8 (0 neumann, 1 periodic) | cells u32 |
//! length f64 | cells^dim values f64
//! ```

use std::fmt::Write;

use super::{Boundary, Grid, GridError, ScalarField};

pub const FIELD_MAGIC: &[u8; 4] = b"CGF1";
const HEADER_LEN: usize = 4 + 1 + 1 + 4 + 8;
const MAX_CELLS: usize = 1 << 24;

impl ScalarField {
    pub fn to_csv(&self) -> String {
        let g = self.grid();
        let mut out = String::new();
        out.push_str(if g.dim() == 1 { "x,value\n" } else { "x,y,value\n" });
        for (k, v) in self.values().iter().enumerate() {
            let (x, y) = g.position(k);
            if g.dim() == 1 {
                let _ = writeln!(out, "{x},{v}");
            } else {
                let _ = writeln!(out, "{x},{y},{v}");
            }
        }
        out
    }
}

pub fn encode_field(field: &ScalarField) -> Vec<u8> {
    let g = field.grid();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * g.len());
    out.extend_from_slice(FIELD_MAGIC);
    out.push(g.dim() as u8);
    out.push(match g.boundary() {
        Boundary::Neumann => 0,
        Boundary::Periodic => 1,
    });
    out.extend_from_slice(&(g.cells_per_axis() as u32).to_le_bytes());
    out.extend_from_slice(&g.length().to_le_bytes());
    for v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_field(bytes: &[u8]) -> Result<ScalarField, GridError> {
    let bad = |m: &str| GridError::Malformed(m.to_string());
    if bytes.len() < HEADER_LEN {
        return Err(bad("truncated header"));
    }
    if &bytes[..4] != FIELD_MAGIC {
        return Err(bad("bad magic"));
    }
    let dim = bytes[4] as usize;
    let boundary = match bytes[5] {
        0 => Boundary::Neumann,
        1 => Boundary::Periodic,
        b => return Err(GridError::Malformed(format!("unknown boundary tag {b}"))),
    };
    let cells = u32::from_le_bytes(bytes[6..10].try_into().expect("4 bytes")) as usize;
    let length = f64::from_le_bytes(bytes[10..18].try_into().expect("8 bytes"));
    if cells > MAX_CELLS {
        return Err(bad("cell count too large"));
    }
    let grid = Grid::new(dim, cells, length, boundary)?;
    let body = &bytes[HEADER_LEN..];
    if body.len() != 8 * grid.len() {
        return Err(GridError::Size { expected: grid.len(), found: body.len() / 8 });
    }
    let data = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    ScalarField::from_vec(grid, data)
}

/// Parse the CSV form of a field. The grid is recovered from the cell
/// centres, which must be uniform and symmetric about the origin.
pub fn parse_field_csv(text: &str, boundary: Boundary) -> Result<ScalarField, GridError> {
    let bad = |m: String| GridError::Malformed(m);
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines.next().ok_or_else(|| bad("empty input".into()))?;
    let dim = match header.replace(' ', "").as_str() {
        "x,value" => 1,
        "x,y,value" => 2,
        other => return Err(bad(format!("unexpected header `{other}`"))),
    };
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != dim + 1 {
            return Err(bad(format!("row {}: expected {} columns", idx + 1, dim + 1)));
        }
        let mut row = [0.0; 3];
        for (slot, p) in row.iter_mut().zip(&parts) {
            *slot = p.trim().parse::<f64>().map_err(|e| bad(format!("row {}: {e}", idx + 1)))?;
        }
        rows.push(row);
        if rows.len() > MAX_CELLS {
            return Err(bad("too many rows".into()));
        }
    }
    let total = rows.len();
    let cells = if dim == 1 { total } else { (total as f64).sqrt().round() as usize };
    if cells.pow(dim as u32) != total || cells < 2 {
        return Err(bad(format!("{total} rows do not form a square grid")));
    }
    let h = rows[1][0] - rows[0][0];
    let length = h * cells as f64;
    let grid = Grid::new(dim, cells, length, boundary)?;
    let tol = 1e-9 * (1.0 + length);
    for (k, r) in rows.iter().enumerate() {
        let (x, y) = grid.position(k);
        if (r[0] - x).abs() > tol || (dim == 2 && (r[1] - y).abs() > tol) {
            return Err(bad(format!("row {} is not at a cell centre", k + 1)));
        }
    }
    ScalarField::from_vec(grid, rows.iter().map(|r| r[dim]).collect())
}
