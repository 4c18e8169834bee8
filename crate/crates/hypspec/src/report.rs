//! Degeneration and collar sweeps, and their CSV emission.
//!
//! Every CSV starts with a `# manifest` comment line; the remaining rows are
//! plain comma-separated values with a header.

use std::io::Write;

use hypspec_core::collar::{i1_quadrature, i2_quadrature, CollarSpec};
use hypspec_core::metrics::{GramMatrix, SyntheticFamily};
use hypspec_core::selberg::pinched_factor_check;

use crate::formats::real;
use crate::manifest::RunManifest;
use crate::parallel::par_map;
use crate::Result;

/// Relative tolerance of the collar quadratures in the sweeps.
pub const COLLAR_REL_TOL: f64 = 1e-10;

/// Fixed bounded block of the synthetic family.
pub fn default_b_block() -> GramMatrix {
    GramMatrix::from_real(3, &[2.0, 0.3, 0.1, 0.3, 1.5, -0.2, 0.1, -0.2, 1.0]).expect("positive definite")
}

/// One `L` of a degeneration sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub log_inv_t: f64,
    pub log_det_h: f64,
    pub log_det_b: f64,
    pub log_theta_product: f64,
    pub delta: f64,
    /// Gram determinant over its predicted asymptotic, all nodes together.
    pub gram_ratio: f64,
    /// Block factorization residual `r`.
    pub residual: f64,
    pub fitted_constant: f64,
    /// Pinched zeta factor over its asymptotic form, raised to the node count.
    pub zeta_ratio: f64,
    pub zeta_rel_err: f64,
    /// Collar integral over its closed form, raised to the node count.
    pub collar_ratio: f64,
    pub collar_rel_err: f64,
}

#[derive(Debug, Clone)]
pub struct DegenerationSweep {
    pub k: u32,
    pub n_nodes: usize,
    pub seed: u64,
    pub c: f64,
}

impl DegenerationSweep {
    pub fn new(k: u32, n_nodes: usize, seed: u64) -> Self {
        Self { k, n_nodes, seed, c: 0.1 }
    }

    pub fn row(&self, log_inv_t: f64) -> Result<ConvergenceRow> {
        let fam =
            SyntheticFamily::new(self.k, self.n_nodes, default_b_block(), self.seed)?.with_collar_constant(self.c)?;
        let d = fam.run(log_inv_t)?;
        let z = pinched_factor_check(log_inv_t, self.k)?;
        let i1 = i1_quadrature(&CollarSpec::from_log_inv_t(log_inv_t, self.c, self.k)?, COLLAR_REL_TOL)?;
        let n = self.n_nodes as f64;
        let collar_rel = i1.relative_error.unwrap_or(f64::NAN);
        let collar_log = i1.closed_form.map(|cf| (i1.value / cf).ln()).unwrap_or(f64::NAN);
        Ok(ConvergenceRow {
            log_inv_t,
            log_det_h: d.log_det_h,
            log_det_b: d.log_det_b,
            log_theta_product: d.log_theta_product,
            delta: d.delta,
            gram_ratio: d.ratio,
            residual: d.residual,
            fitted_constant: d.fitted_constant(),
            zeta_ratio: if self.n_nodes == 0 { 1.0 } else { (n * (z.log_factor - z.log_asymptotic)).exp() },
            zeta_rel_err: z.relative_error,
            collar_ratio: if self.n_nodes == 0 { 1.0 } else { (n * collar_log).exp() },
            collar_rel_err: collar_rel,
        })
    }

    /// Rows in grid order, computed on up to `workers` threads.
    pub fn run(&self, grid: &[f64], workers: usize) -> Result<Vec<ConvergenceRow>> {
        par_map(grid, workers, |&l| self.row(l)).into_iter().collect()
    }
}

pub const CONVERGENCE_HEADER: [&str; 12] = [
    "L",
    "log_det_H",
    "log_det_B",
    "log_theta_product",
    "delta",
    "gram_ratio",
    "residual",
    "fitted_C",
    "zeta_ratio",
    "zeta_rel_err",
    "collar_ratio",
    "collar_rel_err",
];

pub fn write_convergence_csv<W: Write>(mut out: W, manifest: &RunManifest, rows: &[ConvergenceRow]) -> Result<()> {
    writeln!(out, "{}", manifest.comment_line()).map_err(csv::Error::from)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CONVERGENCE_HEADER)?;
    for r in rows {
        w.write_record([
            real(r.log_inv_t),
            real(r.log_det_h),
            real(r.log_det_b),
            real(r.log_theta_product),
            real(r.delta),
            real(r.gram_ratio),
            real(r.residual),
            real(r.fitted_constant),
            real(r.zeta_ratio),
            real(r.zeta_rel_err),
            real(r.collar_ratio),
            real(r.collar_rel_err),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// One collar of a sweep over `|t|`.
#[derive(Debug, Clone, PartialEq)]
pub struct CollarRow {
    pub log_inv_t: f64,
    pub c: f64,
    pub k: u32,
    pub i1: f64,
    pub i1_closed: f64,
    pub i1_rel_err: f64,
    pub i2_modulus: f64,
    pub i2_majorant: f64,
}

pub fn collar_row(log_inv_t: f64, c: f64, k: u32) -> Result<CollarRow> {
    let spec = CollarSpec::from_log_inv_t(log_inv_t, c, k)?;
    let i1 = i1_quadrature(&spec, COLLAR_REL_TOL)?;
    let i2 = i2_quadrature(&spec, COLLAR_REL_TOL)?;
    Ok(CollarRow {
        log_inv_t,
        c,
        k,
        i1: i1.value,
        i1_closed: i1.closed_form.unwrap_or(f64::NAN),
        i1_rel_err: i1.relative_error.unwrap_or(f64::NAN),
        i2_modulus: i2.value,
        i2_majorant: i2.majorant,
    })
}

pub const COLLAR_HEADER: [&str; 9] =
    ["t_modulus", "log_inv_t", "c", "k", "I1_value", "I1_closed", "I1_rel_err", "I2_modulus", "I2_majorant"];

pub fn write_collar_csv<W: Write>(mut out: W, manifest: &RunManifest, rows: &[CollarRow]) -> Result<()> {
    writeln!(out, "{}", manifest.comment_line()).map_err(csv::Error::from)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLLAR_HEADER)?;
    for r in rows {
        w.write_record([
            real((-r.log_inv_t).exp()),
            real(r.log_inv_t),
            real(r.c),
            r.k.to_string(),
            real(r.i1),
            real(r.i1_closed),
            real(r.i1_rel_err),
            real(r.i2_modulus),
            real(r.i2_majorant),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
