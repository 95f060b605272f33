//! Pass/fail ledgers shared by validators, monitors and diagnostics.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckEntry {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CheckReport {
    pub entries: Vec<CheckEntry>,
}

impl CheckReport {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, name: &str, value: f64, limit: f64, pass: bool) -> &mut Self {
        self.entries.push(CheckEntry { name: name.to_string(), value, limit, pass });
        self
    }

    /// Passes when `value <= limit`.
    pub fn at_most(&mut self, name: &str, value: f64, limit: f64) -> &mut Self {
        self.push(name, value, limit, value <= limit)
    }

    /// Passes when `value >= limit`.
    pub fn at_least(&mut self, name: &str, value: f64, limit: f64) -> &mut Self {
        self.push(name, value, limit, value >= limit)
    }

    pub fn flag(&mut self, name: &str, pass: bool) -> &mut Self {
        self.push(name, f64::from(u8::from(pass)), 1.0, pass)
    }

    /// Recorded quantity without a pass/fail meaning.
    pub fn info(&mut self, name: &str, value: f64) -> &mut Self {
        self.push(name, value, f64::NAN, true)
    }

    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckEntry> {
        self.entries.iter().filter(|e| !e.pass)
    }

    pub fn get(&self, name: &str) -> Option<&CheckEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn extend(&mut self, other: CheckReport) {
        self.entries.extend(other.entries);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("check,value,limit,pass\n");
        for e in &self.entries {
            out.push_str(&format!("{},{},{},{}\n", e.name, e.value, e.limit, e.pass));
        }
        out
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            let tag = if e.pass { "ok  " } else { "FAIL" };
            if e.limit.is_nan() {
                writeln!(f, "{tag} {:<32} {:.6e}", e.name, e.value)?;
            } else {
                writeln!(f, "{tag} {:<32} {:.6e} (limit {:.6e})", e.name, e.value, e.limit)?;
            }
        }
        Ok(())
    }
}
