//! Text form of tabulated functions: a header `a,f,sub_lo,sub_hi` followed by
//! one row per node. Infinite subdifferential ends at the first or last row
//! mark the function as `+inf` beyond that end.

use std::fmt::Write;

use super::{ConvexError, Table, Tail};

pub const TABLE_HEADER: &str = "a,f,sub_lo,sub_hi";

impl Table {
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.len() * 64);
        out.push_str(TABLE_HEADER);
        out.push('\n');
        for i in 0..self.len() {
            let s = self.node_subdifferential(i);
            let _ = writeln!(out, "{},{},{},{}", self.node(i), self.node_value(i), s.lo, s.hi);
        }
        out
    }
}

/// Parse the text produced by [`Table::to_csv`]. Nodes must be uniformly
/// spaced and the derivative columns monotone.
pub fn parse_table_csv(text: &str) -> Result<Table, ConvexError> {
    let mut rows: Vec<[f64; 4]> = Vec::new();
    let mut saw_header = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !saw_header {
            if line.replace(' ', "") != TABLE_HEADER {
                return Err(ConvexError::Parse { line: idx + 1, msg: format!("expected header `{TABLE_HEADER}`") });
            }
            saw_header = true;
            continue;
        }
        let mut row = [0.0; 4];
        let mut fields = line.split(',');
        for (k, slot) in row.iter_mut().enumerate() {
            let field = fields
                .next()
                .ok_or_else(|| ConvexError::Parse { line: idx + 1, msg: format!("missing column {}", k + 1) })?;
            *slot = field
                .trim()
                .parse::<f64>()
                .map_err(|e| ConvexError::Parse { line: idx + 1, msg: format!("column {}: {e}", k + 1) })?;
        }
        if fields.next().is_some() {
            return Err(ConvexError::Parse { line: idx + 1, msg: "too many columns".into() });
        }
        rows.push(row);
    }
    if rows.len() < 3 {
        return Err(ConvexError::Parse { line: 0, msg: format!("need at least 3 rows, got {}", rows.len()) });
    }
    let lo = rows[0][0];
    let step = (rows[rows.len() - 1][0] - lo) / (rows.len() - 1) as f64;
    if !(step > 0.0 && step.is_finite()) {
        return Err(ConvexError::Parse { line: 0, msg: "nodes must increase".into() });
    }
    for (i, r) in rows.iter().enumerate() {
        let expect = lo + i as f64 * step;
        if (r[0] - expect).abs() > 1e-9 * (step + expect.abs()) {
            return Err(ConvexError::Parse { line: 0, msg: format!("node {i} is not on a uniform grid") });
        }
    }
    let n = rows.len();
    let below = if rows[0][2] == f64::NEG_INFINITY { Tail::Infinite } else { Tail::Affine };
    let above = if rows[n - 1][3] == f64::INFINITY { Tail::Infinite } else { Tail::Affine };
    for (i, r) in rows.iter().enumerate() {
        let interior_inf = (r[2].is_infinite() && !(i == 0 && below == Tail::Infinite))
            || (r[3].is_infinite() && !(i == n - 1 && above == Tail::Infinite));
        if interior_inf {
            return Err(ConvexError::Parse { line: 0, msg: format!("infinite slope at interior node {i}") });
        }
    }
    Table::from_parts(
        lo,
        step,
        rows.iter().map(|r| r[1]).collect(),
        rows.iter().map(|r| r[2]).collect(),
        rows.iter().map(|r| r[3]).collect(),
        None,
        below,
        above,
    )
}
