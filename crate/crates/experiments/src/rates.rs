//! Error tables over a parameter schedule and their log-log slopes.

use std::fmt::Write as _;

use statrs::distribution::{ContinuousCDF, StudentsT};

/// Least-squares slope of `log y` against `log x` with a 95% band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

/// Why a column has no slope.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoFit {
    TooFewPoints,
    /// Zero or negative values, or a single parameter value.
    Degenerate,
}

impl NoFit {
    pub fn reason(self) -> &'static str {
        match self {
            Self::TooFewPoints => "fewer than 3 points",
            Self::Degenerate => "errors vanish or parameters coincide",
        }
    }
}

/// Fits through every `(x, y)` with both coordinates positive and finite.
/// Needs at least three such points.
pub fn fit_loglog(points: &[(f64, f64)]) -> Result<Fit, NoFit> {
    if points.len() < 3 {
        return Err(NoFit::TooFewPoints);
    }
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if logs.len() < points.len() {
        return Err(NoFit::Degenerate);
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= 1e-24 {
        return Err(NoFit::Degenerate);
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = logs.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let dof = n - 2.0;
    let t = StudentsT::new(0.0, 1.0, dof).map(|d| d.inverse_cdf(0.975)).unwrap_or(f64::INFINITY);
    let half = t * (sse / dof / sxx).sqrt();
    Ok(Fit { slope, intercept, lo: slope - half, hi: slope + half, points: logs.len() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub parameter: f64,
    pub values: Vec<f64>,
}

/// Rows keyed by parameter value, one column per error metric.
#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    pub arm: String,
    pub parameter: String,
    pub columns: Vec<String>,
    pub rows: Vec<RateRow>,
}

impl RateTable {
    pub fn new(arm: &str, parameter: &str, columns: &[&str]) -> Self {
        Self {
            arm: arm.to_string(),
            parameter: parameter.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    /// Inserts a row, keeping rows sorted by decreasing parameter so the
    /// table does not depend on the order results arrive in.
    pub fn push(&mut self, parameter: f64, values: Vec<f64>) {
        assert_eq!(values.len(), self.columns.len(), "one value per column");
        let at = self.rows.partition_point(|r| r.parameter > parameter);
        self.rows.insert(at, RateRow { parameter, values });
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r.values[i]).collect())
    }

    pub fn fit(&self, name: &str) -> Option<Result<Fit, NoFit>> {
        let ys = self.column(name)?;
        let pts: Vec<(f64, f64)> = self.rows.iter().map(|r| r.parameter).zip(ys).collect();
        Some(fit_loglog(&pts))
    }

    /// True when no column can be fitted.
    pub fn flagged(&self) -> bool {
        self.columns.iter().all(|c| matches!(self.fit(c), Some(Err(_))))
    }

    /// `arm,<parameter>,<columns...>`.
    pub fn to_csv(&self) -> String {
        let mut out = format!("arm,{},{}\n", self.parameter, self.columns.join(","));
        for r in &self.rows {
            let _ = write!(out, "{},{}", self.arm, r.parameter);
            for v in &r.values {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }

    /// `arm,metric,points,slope,lo,hi,note`; slopes are empty when refused.
    pub fn fits_csv(&self) -> String {
        let mut out = String::from("arm,metric,points,slope,lo,hi,note\n");
        for c in &self.columns {
            match self.fit(c).expect("column exists") {
                Ok(f) => {
                    let _ = writeln!(out, "{},{c},{},{},{},{},", self.arm, f.points, f.slope, f.lo, f.hi);
                }
                Err(e) => {
                    let _ = writeln!(out, "{},{c},{},,,,{}", self.arm, self.rows.len(), e.reason());
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_is_recovered() {
        let pts: Vec<(f64, f64)> = [1e-1, 1e-2, 1e-3, 1e-4].iter().map(|&x: &f64| (x, 3.0 * x.powf(0.5))).collect();
        let f = fit_loglog(&pts).unwrap();
        assert!((f.slope - 0.5).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(f.hi - f.lo < 1e-9);
    }

    #[test]
    fn refusals() {
        assert_eq!(fit_loglog(&[(1.0, 1.0), (2.0, 2.0)]), Err(NoFit::TooFewPoints));
        assert_eq!(fit_loglog(&[(1.0, 0.0), (2.0, 0.0), (3.0, 0.0)]), Err(NoFit::Degenerate));
        assert_eq!(fit_loglog(&[(1.0, 1.0), (1.0, 2.0), (1.0, 3.0)]), Err(NoFit::Degenerate));
    }

    #[test]
    fn rows_are_ordered_by_parameter() {
        let mut t = RateTable::new("nu", "nu", &["gap"]);
        t.push(1e-3, vec![0.1]);
        t.push(1e-1, vec![0.3]);
        t.push(1e-2, vec![0.2]);
        assert_eq!(t.column("gap").unwrap(), vec![0.3, 0.2, 0.1]);
        assert!(t.to_csv().starts_with("arm,nu,gap\nnu,0.1,0.3\n"));
        assert!(!t.flagged());
    }

    #[test]
    fn band_covers_noisy_slope() {
        let pts = [(1.0, 1.0), (2.0, 2.2), (4.0, 3.9), (8.0, 8.3)];
        let f = fit_loglog(&pts).unwrap();
        assert!(f.lo < f.slope && f.slope < f.hi);
        assert!(f.lo < 1.0 && 1.0 < f.hi);
    }
}
