//! Invariant suites behind `hypspec verify`. Each check reports a measured
//! quantity and the threshold it must not exceed.

use std::cmp::Ordering;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use hypspec_core::collar::{
    collar_density, cylinder_density, i1_quadrature, i2_majorant_limit, i2_quadrature, CollarSpec,
};
use hypspec_core::constants::{Constants, GrowthSweep, Relation, ZetaSpecials};
use hypspec_core::hyperbolic::{modular_area_quadrature, MoebiusMap};
use hypspec_core::metrics::{degeneration_constant_identity, log_det, GramMatrix, SyntheticFamily};
use hypspec_core::scalar::Dd;
use hypspec_core::selberg::{local_factor_log, partial_zeta_log, pinched_factor_check};
use hypspec_core::spectrum::{
    enumerate_spectrum, enumerate_spectrum_with, Completeness, EnumerationBudget, GeodesicClass, GroupPresentation,
    LengthSpectrum,
};
use num_complex::Complex64;

use crate::formats::real;
use crate::manifest::RunManifest;
use crate::parallel::ThreadedRunner;
use crate::report::default_b_block;
use crate::Result;

/// `ζ′(-1)` to 32 digits, as a double-double.
pub const ZETA_PRIME_MINUS1_REFERENCE: (f64, f64) = (-0.16542114370045094, 1.0747835010305763e-17);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Constants,
    Zeta,
    Collar,
    Gram,
    Spectrum,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 6] = ["constants", "zeta", "collar", "gram", "spectrum", "all"];

    fn expand(self) -> Vec<Suite> {
        match self {
            Suite::All => vec![Suite::Constants, Suite::Zeta, Suite::Collar, Suite::Gram, Suite::Spectrum],
            s => vec![s],
        }
    }

    pub fn name(self) -> &'static str {
        Self::NAMES[self as usize]
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let all = [Suite::Constants, Suite::Zeta, Suite::Collar, Suite::Gram, Suite::Spectrum, Suite::All];
        all.into_iter().find(|x| x.name() == s).ok_or_else(|| format!("unknown suite {s:?}"))
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub measured: f64,
    pub threshold: f64,
}

impl Check {
    /// NaN never passes.
    pub fn passed(&self) -> bool {
        self.measured <= self.threshold
    }
}

#[derive(Debug, Clone, Default)]
pub struct VerifyOptions {
    /// Added to `ζ′(-1)` before any constant is evaluated.
    pub zeta_prime_delta: f64,
    pub workers: usize,
}

pub fn run(suite: Suite, opts: &VerifyOptions) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for s in suite.expand() {
        let checks = match s {
            Suite::Constants => constants_suite(opts)?,
            Suite::Zeta => zeta_suite()?,
            Suite::Collar => collar_suite()?,
            Suite::Gram => gram_suite()?,
            Suite::Spectrum => spectrum_suite(opts)?,
            Suite::All => unreachable!(),
        };
        out.extend(checks);
    }
    Ok(out)
}

pub fn write_report<W: Write>(mut out: W, manifest: &RunManifest, checks: &[Check]) -> Result<()> {
    writeln!(out, "{}", manifest.comment_line()).map_err(csv::Error::from)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["suite", "check", "measured", "threshold", "status"])?;
    for c in checks {
        let status = if c.passed() { "pass" } else { "FAIL" };
        w.write_record([c.suite, &c.name, &real(c.measured), &real(c.threshold), status])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

fn check(suite: &'static str, name: impl Into<String>, measured: f64, threshold: f64) -> Check {
    Check { suite, name: name.into(), measured, threshold }
}

fn max_of(it: impl IntoIterator<Item = f64>) -> f64 {
    // NaN propagates so that a broken evaluation fails its check.
    it.into_iter().fold(0.0, |m, x| if x.is_nan() || m.is_nan() { f64::NAN } else { m.max(x) })
}

fn stable_grid(max: u32) -> impl Iterator<Item = (u32, u32)> {
    (0..=max).flat_map(move |g| (0..=max).map(move |n| (g, n))).filter(|&(g, n)| 2 * g as i64 - 2 + n as i64 > 0)
}

fn constants_suite(opts: &VerifyOptions) -> Result<Vec<Check>> {
    const S: &str = "constants";
    let specials = ZetaSpecials::with_perturbation(opts.zeta_prime_delta);
    let run = Constants::from_specials(specials);
    let reference = Constants::from_specials(ZetaSpecials::via_zeta_prime_two());
    let pinned = Dd::from_parts(ZETA_PRIME_MINUS1_REFERENCE.0, ZETA_PRIME_MINUS1_REFERENCE.1);
    let mut v = vec![
        check(S, "zeta_prime_minus1_cross_validation", specials.cross_validation_residual(), 1e-25),
        check(S, "zeta_prime_minus1_reference", (specials.zeta_prime_minus1() - pinned).to_f64().abs(), 1e-25),
    ];
    let rels: Vec<(String, Relation)> =
        [("relation_C".to_owned(), Relation::C), ("relation_E1".to_owned(), Relation::E1)]
            .into_iter()
            .chain((1..=10).map(|k| (format!("relation_E{}", k + 1), Relation::Ek(k))))
            .collect();
    for (name, rel) in &rels {
        let own = stable_grid(20).map(|(g, n)| run.relation_residual(*rel, g, n)).collect::<Result<Vec<_>, _>>()?;
        v.push(check(S, format!("{name}_max_residual"), max_of(own), 1e-12));
    }
    for (name, rel) in &rels {
        let anchored = stable_grid(20)
            .map(|(g, n)| run.relation_residual_against(&reference, *rel, g, n))
            .collect::<Result<Vec<_>, _>>()?;
        v.push(check(S, format!("{name}_anchored_max_residual"), max_of(anchored), 1e-12));
    }
    let mut alpha = 0.0f64;
    let mut gamma2 = 0.0f64;
    let mut stirling = 0.0f64;
    for row in GrowthSweep::new(10_000)? {
        if row.k >= 2 {
            alpha = alpha.max(row.alpha_ratio());
            gamma2 = gamma2.max(row.gamma2_residual().abs());
            stirling = stirling.max(row.stirling_residual());
        }
    }
    v.push(check(S, "alpha_over_k_log_k_max", alpha, 3.0));
    v.push(check(S, "gamma2_expansion_residual_max", gamma2, 2.5));
    v.push(check(S, "stirling_residual_over_k_log_k_max", stirling, 3.0));
    Ok(v)
}

fn zeta_suite() -> Result<Vec<Check>> {
    const S: &str = "zeta";
    let tol = 1e-14;
    let ls = [1e-3, 1e-2, 0.1, 0.5, 1.0, 2.0, 5.0, 20.0];
    let mut soundness = 0usize;
    for s in [2.0, 3.0, 5.0] {
        let vals =
            ls.iter().map(|&l| local_factor_log(l, s, tol).map(|z| z.log_value)).collect::<Result<Vec<_>, _>>()?;
        soundness += vals.iter().filter(|&&x| x.is_nan() || x > 0.0).count();
        soundness += vals
            .windows(2)
            .filter(|w| !matches!(w[1].partial_cmp(&w[0]), Some(Ordering::Greater | Ordering::Equal)))
            .count();
    }
    let mut v = vec![check(S, "local_factor_log_space_violations", soundness as f64, 0.0)];

    let mut honesty = 0.0f64;
    for &l in &ls {
        for tol in [1e-6, 1e-10] {
            let a = local_factor_log(l, 2.0, tol)?;
            let b = local_factor_log(l, 2.0, tol / 2.0)?;
            let excess = (a.log_value - b.log_value).abs() / a.truncation_bound.max(f64::MIN_POSITIVE);
            honesty = honesty.max(excess);
        }
    }
    v.push(check(S, "truncation_bound_ratio_max", honesty, 1.0));

    let mk = |ls: &[f64], tag: i32| {
        let classes =
            ls.iter().enumerate().map(|(i, &l)| GeodesicClass::from_length(l, vec![tag, i as i32 + 1])).collect();
        LengthSpectrum::from_classes(classes, 10.0, [0; 32], 10.0, Completeness::Certified)
    };
    let (left, right) = ([0.3, 1.1, 2.5, 7.0], [0.8, 1.7, 4.2]);
    let union: Vec<f64> = left.iter().chain(&right).copied().collect();
    let sum =
        partial_zeta_log(&mk(&left, 1)?, 2.0, tol)?.log_value + partial_zeta_log(&mk(&right, 2)?, 2.0, tol)?.log_value;
    let whole = partial_zeta_log(&mk(&union, 1)?, 2.0, tol)?.log_value;
    v.push(check(S, "additivity_abs_diff", (sum - whole).abs(), 1e-12));

    for k in 1..=3 {
        let coarse = pinched_factor_check(1e2, k)?;
        let fine = pinched_factor_check(1e3, k)?;
        v.push(check(S, format!("pinched_factor_rel_err_k{k}_L1e3"), fine.relative_error, 1e-2));
        let improving = if fine.closure.abs() < coarse.closure.abs() { 0.0 } else { 1.0 };
        v.push(check(S, format!("pinched_closure_k{k}_not_improving"), improving, 0.0));
    }
    Ok(v)
}

fn collar_suite() -> Result<Vec<Check>> {
    const S: &str = "collar";
    let mut v = Vec::new();
    let c = 0.1;
    let mut rel = 0.0f64;
    let mut bound = 0.0f64;
    for k in [1, 2] {
        for t in [1e-4, 1e-6] {
            let spec = CollarSpec::new(t, c, k)?;
            rel = rel.max(i1_quadrature(&spec, 1e-10)?.relative_error.unwrap_or(f64::NAN));
            let i2 = i2_quadrature(&spec, 1e-8)?;
            bound = bound.max(i2.value / i2.majorant).max(i2.majorant / i2_majorant_limit(c, k));
        }
    }
    v.push(check(S, "i1_closed_form_rel_err_max", rel, 1e-6));
    v.push(check(S, "i2_over_majorant_limit_max", bound, 1.0));

    let spec = CollarSpec::new(1e-6, c, 1)?;
    let (lo, hi) = spec.log_radius_range();
    let mut mirror = 0.0f64;
    for i in 1..50 {
        let r = lo + (hi - lo) * i as f64 / 50.0;
        let a = collar_density(Complex64::from_polar(r.exp(), 0.3 * i as f64), &spec)? * (2.0 * r).exp();
        // u -> t/u exchanges the two boundary circles.
        let b = cylinder_density(-spec.log_inv_t() - r, &spec)?;
        mirror = mirror.max((a / b - 1.0).abs());
    }
    v.push(check(S, "metric_mirror_symmetry_max", mirror, 1e-12));
    Ok(v)
}

fn gram_suite() -> Result<Vec<Check>> {
    const S: &str = "gram";
    let mut v = Vec::new();
    let identity =
        (1..=50).map(|k| degeneration_constant_identity(k).map(|r| (r - 1.0).abs())).collect::<Result<Vec<_>, _>>()?;
    v.push(check(S, "degeneration_constant_identity_max", max_of(identity), 1e-12));

    let grid = [1e2, 1e3, 1e4];
    let rows = SyntheticFamily::new(1, 1, default_b_block(), 20_240_601)?.sweep(&grid)?;
    v.push(check(S, "gram_ratio_deviation_L1e4", (rows[2].ratio - 1.0).abs(), 1e-2));
    let rows = SyntheticFamily::new(2, 3, default_b_block(), 20_240_601)?.sweep(&grid)?;
    let fitted: Vec<f64> = rows.iter().map(|r| r.fitted_constant()).collect();
    let spread = max_of(fitted.windows(2).map(|w| (w[1] / w[0] - 1.0).abs()));
    v.push(check(S, "fitted_residual_constant_spread", spread, 0.1));

    // Unitary invariance under a fixed complex rotation.
    let g = GramMatrix::from_real(3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0])?;
    let (ct, st) = (0.6f64, 0.8f64);
    let ph = Complex64::from_polar(1.0, 0.9);
    let z = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let u = [Complex64::new(ct, 0.0), -ph.conj() * st, z, ph * st, Complex64::new(ct, 0.0), z, z, z, one];
    let moved = g.change_basis(&u)?;
    v.push(check(S, "log_det_unitary_invariance", (log_det(&moved)? - log_det(&g)?).abs(), 1e-12));
    Ok(v)
}

fn spectrum_suite(opts: &VerifyOptions) -> Result<Vec<Check>> {
    const S: &str = "spectrum";
    let mut v = Vec::new();
    let grp = GroupPresentation::gamma2();
    let budget = EnumerationBudget::default();
    let small = enumerate_spectrum(&grp, 4.0, &budget)?;
    let sys = small.systole().unwrap_or(f64::NAN);
    v.push(check(S, "gamma2_systole_abs_err", (sys - 2.0 * 3f64.acosh()).abs(), 1e-12));

    let seq = enumerate_spectrum(&grp, 8.0, &budget)?;
    let workers = opts.workers.max(2);
    let threaded = enumerate_spectrum_with(&grp, 8.0, &budget, &ThreadedRunner::new(workers))?;
    v.push(check(S, "worker_count_mismatch", if threaded == seq { 0.0 } else { 1.0 }, 0.0));

    let h = MoebiusMap::new(1.3, 0.4, 0.5, (1.0 + 0.4 * 0.5) / 1.3)?;
    let conj = enumerate_spectrum(&grp.conjugated(&h)?, 8.0, &budget)?;
    let drift = if conj.len() == seq.len() {
        max_of(seq.classes.iter().zip(&conj.classes).map(|(a, b)| (a.length - b.length).abs() / a.length))
    } else {
        f64::INFINITY
    };
    v.push(check(S, "conjugation_length_drift", drift, 1e-10));

    let area = modular_area_quadrature(true, 1e-8)?;
    v.push(check(S, "gamma2_area_rel_err", (area.value / (2.0 * std::f64::consts::PI) - 1.0).abs(), 1e-4));
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_parse() {
        for n in Suite::NAMES {
            assert_eq!(n.parse::<Suite>().unwrap().name(), n);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn constants_suite_passes() {
        let checks = run(Suite::Constants, &VerifyOptions::default()).unwrap();
        for c in &checks {
            assert!(c.passed(), "{c:?}");
        }
    }

    #[test]
    fn injected_fault_is_caught() {
        let opts = VerifyOptions { zeta_prime_delta: 1e-6, workers: 1 };
        let checks = run(Suite::Constants, &opts).unwrap();
        let failed: Vec<&str> = checks.iter().filter(|c| !c.passed()).map(|c| c.name.as_str()).collect();
        assert!(failed.contains(&"zeta_prime_minus1_cross_validation"));
        assert!(failed.contains(&"zeta_prime_minus1_reference"));
        assert!(failed.contains(&"relation_C_anchored_max_residual"));
        // Self-consistent relations cannot see a shifted ζ′(-1).
        assert!(!failed.contains(&"relation_C_max_residual"));
    }

    #[test]
    fn nan_fails() {
        assert!(!check("x", "y", f64::NAN, 1.0).passed());
        assert!(max_of([1.0, f64::NAN, 0.5]).is_nan());
    }
}
