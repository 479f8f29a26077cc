//! Config schemas for the subcommands. Unknown fields are rejected so typos
//! fail loudly instead of silently running defaults.

use riskmetrics::distortion::Descriptor;
use riskmetrics::experiments::NormalParam;
use riskmetrics::quantile::QDescriptor;
use serde::Deserialize;
use std::path::PathBuf;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeConfig {
    pub distortion: Descriptor,
    /// Sample count for the h / h-hat / h* grid dump.
    #[serde(default = "default_grid")]
    pub grid: usize,
    /// Also compute the convex (lower) envelope.
    #[serde(default)]
    pub lower: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundConfig {
    pub distortion: Descriptor,
    pub p: f64,
    pub m: f64,
    pub v: f64,
    /// Knot count for the extremal-quantile dump.
    #[serde(default = "default_grid")]
    pub grid: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConcentrateConfig {
    /// Model descriptor; ignored when `csv` is given.
    pub quantile: Option<QDescriptor>,
    /// Single-column CSV of samples for an empirical model.
    pub csv: Option<PathBuf>,
    pub intervals: Vec<(f64, f64)>,
    #[serde(default = "default_grid")]
    pub grid: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Random (h, F) identity pairs to run.
    #[serde(default = "default_cases")]
    pub cases: usize,
    /// Sup-equivalence instances over generated closures.
    #[serde(default = "default_sup_cases")]
    pub sup_cases: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableConfig {
    /// Table id: 1 = difference of inverse-S prices, 2 = preference robust,
    /// 3/4 = quantile-level marginal tables (wide/narrow box),
    /// 5/6 = inverse-S marginal tables (wide/narrow box).
    pub table: u8,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub ra: RaOverrides,
    #[serde(default)]
    pub search: SearchOverrides,
    #[serde(default = "default_normal_param")]
    pub normal_param: NormalParam,
    /// Marginal riskmetric grid for tables 5-6.
    pub rho_grid: Option<usize>,
    /// Lower end of the gamma window for table 2.
    pub gamma_floor: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RaOverrides {
    pub n_rows: Option<usize>,
    pub eps: Option<f64>,
    pub max_sweeps: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchOverrides {
    pub starts: Option<usize>,
    pub nm_iters: Option<usize>,
    pub search_rows: Option<usize>,
    pub spread: Option<f64>,
}

fn default_grid() -> usize {
    512
}
fn default_seed() -> u64 {
    1
}
fn default_cases() -> usize {
    200
}
fn default_sup_cases() -> usize {
    50
}
fn default_tol() -> f64 {
    1e-8
}
fn default_normal_param() -> NormalParam {
    NormalParam::Variance
}
