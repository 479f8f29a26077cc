//! Deterministic table writers: CSV with 6 significant digits, '.' decimal
//! separator, no thousands separators, plus a Markdown rendering.

use anyhow::{Context, Result};
use std::path::Path;

/// 6-significant-digit rendering, scientific outside [1e-4, 1e7).
pub fn fmt6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let a = x.abs();
    if (1e-4..1e7).contains(&a) {
        let decimals = (5 - a.log10().floor() as i32).clamp(0, 10) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.5e}")
    }
}

pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))
    }

    pub fn write_md(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        out.push_str(&format!("| {} |\n", self.header.join(" | ")));
        out.push_str(&format!("|{}\n", "---|".repeat(self.header.len())));
        for row in &self.rows {
            out.push_str(&format!("| {} |\n", row.join(" | ")));
        }
        std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))
    }

    pub fn write(&self, path: &Path, markdown: bool) -> Result<()> {
        if markdown {
            self.write_md(path)
        } else {
            self.write_csv(path)
        }
    }
}

pub fn weights_str(w: &[f64]) -> String {
    let parts: Vec<String> = w.iter().map(|x| fmt6(*x)).collect();
    format!("({})", parts.join(" "))
}
