//! Selberg zeta local factors, partial Euler products and pinching asymptotics.
//!
//! Everything is carried in log space: at `L = 300` the factor `|t|^{-1/6}`
//! alone is `e^{50}`, and products of such numbers leave the `f64` range.

use core::f64::consts::PI;

use crate::spectrum::LengthSpectrum;
use crate::sum::Neumaier;
use crate::{Error, Result};

/// Loosest tolerance accepted by [`local_factor_log`].
pub const MAX_FACTOR_TOL: f64 = 1e-6;

/// Tolerance used internally when a factor feeds an asymptotic comparison.
const TIGHT_TOL: f64 = 1e-15;

/// Logarithm of a (partial) Selberg zeta product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZetaEvaluation {
    pub s: f64,
    pub log_value: f64,
    /// Rigorous bound on the error from truncating each local product.
    pub truncation_bound: f64,
    /// Heuristic bound on the classes beyond the spectrum cutoff, if any.
    pub spectral_tail_bound: Option<f64>,
    pub spectral_cutoff: Option<f64>,
}

impl ZetaEvaluation {
    /// `Z` itself; underflows to zero for very negative logs.
    pub fn value(&self) -> f64 {
        libm::exp(self.log_value)
    }

    pub fn is_heuristic(&self) -> bool {
        self.spectral_tail_bound.is_some()
    }
}

/// `log(1 - e^{-x})` for `x > 0`, accurate at both ends.
#[inline]
fn log1m_exp(x: f64) -> f64 {
    if x < core::f64::consts::LN_2 {
        libm::log(-libm::expm1(-x))
    } else {
        libm::log1p(-libm::exp(-x))
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol <= MAX_FACTOR_TOL) {
        return Err(Error::InvalidTolerance { tol, lo: 0.0, hi: MAX_FACTOR_TOL });
    }
    Ok(())
}

/// `log Z_l(s) = 2 Σ_{k≥0} log(1 - e^{-(s+k) l})`.
///
/// Terms are added until the tail bound
/// `2 e^{-(s+K) l} / ((1 - e^{-l})(1 - e^{-(s+K) l}))` drops below `tol`; that
/// bound is returned as the truncation bound. The first term is always kept.
pub fn local_factor_log(l: f64, s: f64, tol: f64) -> Result<ZetaEvaluation> {
    if !(l > 0.0) || !l.is_finite() {
        return Err(Error::Domain { what: "geodesic length", value: l });
    }
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::Domain { what: "zeta argument", value: s });
    }
    check_tol(tol)?;
    let one_minus_q = -libm::expm1(-l);
    let mut acc = Neumaier::new();
    let mut k = 0u64;
    let bound = loop {
        let x = (s + k as f64) * l;
        acc.add(2.0 * log1m_exp(x));
        k += 1;
        let xk = (s + k as f64) * l;
        let e = libm::exp(-xk);
        let bound = 2.0 * e / (one_minus_q * -libm::expm1(-xk));
        if bound <= tol {
            break bound;
        }
    };
    Ok(ZetaEvaluation {
        s,
        log_value: acc.total(),
        truncation_bound: bound,
        spectral_tail_bound: None,
        spectral_cutoff: None,
    })
}

/// `Γ(s)² Z_l(s) e^{π²/(3l)} l^{2s-1} / (2π) - 1`, assembled in log space.
pub fn small_l_law_residual(l: f64, s: f64) -> Result<f64> {
    if !(l > 0.0 && l <= 0.5) {
        return Err(Error::Domain { what: "small-length law needs 0 < l <= 1/2", value: l });
    }
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::Domain { what: "zeta argument", value: s });
    }
    let z = local_factor_log(l, s, TIGHT_TOL)?;
    let mut acc = Neumaier::new();
    acc.add(z.log_value);
    acc.add(PI * PI / (3.0 * l));
    acc.add(2.0 * libm::lgamma(s));
    acc.add((2.0 * s - 1.0) * libm::log(l));
    acc.add(-libm::log(2.0 * PI));
    Ok(libm::expm1(acc.total()))
}

/// Prediction of `log Z_l(s)` from the small-length law:
/// `log 2π - 2 log Γ(s) - π²/(3l) - (2s-1) log l`.
pub fn small_l_law_log(l: f64, s: f64) -> f64 {
    libm::log(2.0 * PI) - 2.0 * libm::lgamma(s) - PI * PI / (3.0 * l) - (2.0 * s - 1.0) * libm::log(l)
}

/// Sum of multiplicity-weighted local factors over a spectrum.
///
/// The product truncation bound is the sum of per-factor bounds. The tail of
/// classes longer than `complete_below` is estimated by assuming at most
/// `e^l dl` classes per unit length, which gives
/// `2 e^{-(s-1)L} / ((s-1)(1 - e^{-L}))`; this is a heuristic and reported as such.
pub fn partial_zeta_log(spec: &LengthSpectrum, s: f64, tol: f64) -> Result<ZetaEvaluation> {
    if !(s > 1.0) || !s.is_finite() {
        return Err(Error::OutOfRegion { s });
    }
    check_tol(tol)?;
    let mut value = Neumaier::new();
    let mut bound = Neumaier::new();
    for c in &spec.classes {
        let f = local_factor_log(c.length, s, tol)?;
        let m = c.multiplicity as f64;
        value.add(m * f.log_value);
        bound.add(m * f.truncation_bound);
    }
    let lc = spec.complete_below;
    let tail =
        if lc > 0.0 { 2.0 * libm::exp(-(s - 1.0) * lc) / ((s - 1.0) * -libm::expm1(-lc)) } else { f64::INFINITY };
    Ok(ZetaEvaluation {
        s,
        log_value: value.total(),
        truncation_bound: bound.total(),
        spectral_tail_bound: Some(tail),
        spectral_cutoff: Some(spec.cutoff),
    })
}

/// Plumbing family `{|t|/c < |u| < c}` with `n` pinching nodes and weight `k`.
///
/// The modulus is stored through `L = log(1/|t|)` so that `|t| = e^{-10⁴}`
/// is representable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinchingParameter {
    log_inv_t: f64,
    c: f64,
    pub n: u32,
    pub k: u32,
}

impl PinchingParameter {
    pub fn new(log_inv_t: f64, c: f64, n: u32, k: u32) -> Result<Self> {
        if !(log_inv_t > 0.0) || !log_inv_t.is_finite() {
            return Err(Error::Domain { what: "log(1/|t|) must be positive", value: log_inv_t });
        }
        if !(c > 0.0 && c < 1.0) {
            return Err(Error::Domain { what: "collar constant c in (0, 1)", value: c });
        }
        // |t| < c² so that the annulus |t|/c < |u| < c is non-empty.
        if !(log_inv_t > -2.0 * libm::log(c)) {
            return Err(Error::Domain { what: "annulus needs |t| < c^2", value: log_inv_t });
        }
        Ok(Self { log_inv_t, c, n, k })
    }

    pub fn from_modulus(t: f64, c: f64, n: u32, k: u32) -> Result<Self> {
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::Domain { what: "|t| in (0, 1)", value: t });
        }
        Self::new(-libm::log(t), c, n, k)
    }

    /// `L = log(1/|t|)`.
    pub fn log_inv_t(&self) -> f64 {
        self.log_inv_t
    }

    pub fn t_modulus(&self) -> f64 {
        libm::exp(-self.log_inv_t)
    }

    pub fn c(&self) -> f64 {
        self.c
    }
}

/// Leading term `2π² / L` of the pinched geodesic length; the `O(L⁻⁴)`
/// correction is not modelled.
pub fn pinching_length(p: &PinchingParameter) -> f64 {
    2.0 * PI * PI / p.log_inv_t
}

/// `log(π (2π²)^{2k} (k!)²)`.
pub fn pinched_constant_log(k: u32) -> f64 {
    libm::log(PI) + 2.0 * k as f64 * libm::log(2.0 * PI * PI) + 2.0 * crate::constants::log_factorial(k as u64)
}

/// `log` of the asymptotic value of `Z_{l(t)}(k+1)`:
/// `-log(π (2π²)^{2k} (k!)²) - L/6 + (2k+1) log L`.
pub fn pinched_factor_asymptotic(p: &PinchingParameter) -> Result<f64> {
    if p.k == 0 {
        return Err(Error::UnsupportedWeight("the pinched factor asymptotic needs k >= 1"));
    }
    let l = p.log_inv_t;
    Ok(-pinched_constant_log(p.k) - l / 6.0 + (2.0 * p.k as f64 + 1.0) * libm::log(l))
}

/// Comparison of `log Z_{2π²/L}(k+1)` with its asymptotic value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinchedFactorCheck {
    pub log_inv_t: f64,
    pub k: u32,
    pub log_factor: f64,
    pub log_asymptotic: f64,
    /// `|log Z - log RHS| / |log RHS|`.
    pub relative_error: f64,
    /// `log Z + L/6 - (2k+1) log L + log(π (2π²)^{2k} (k!)²)`, which tends to zero.
    pub closure: f64,
}

pub fn pinched_factor_check(log_inv_t: f64, k: u32) -> Result<PinchedFactorCheck> {
    // The collar constant does not enter; any admissible value will do.
    let p = PinchingParameter::new(log_inv_t, 0.5, 1, k)?;
    let rhs = pinched_factor_asymptotic(&p)?;
    let z = local_factor_log(pinching_length(&p), k as f64 + 1.0, TIGHT_TOL)?;
    let mut closure = Neumaier::new();
    closure.add(z.log_value);
    closure.add(log_inv_t / 6.0);
    closure.add(-(2.0 * k as f64 + 1.0) * libm::log(log_inv_t));
    closure.add(pinched_constant_log(k));
    Ok(PinchedFactorCheck {
        log_inv_t,
        k,
        log_factor: z.log_value,
        log_asymptotic: rhs,
        relative_error: libm::fabs(z.log_value - rhs) / libm::fabs(rhs),
        closure: closure.total(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{Completeness, GeodesicClass};
    use proptest::prelude::*;

    fn spectrum(lengths: &[f64], cutoff: f64) -> LengthSpectrum {
        let classes =
            lengths.iter().enumerate().map(|(i, &l)| GeodesicClass::from_length(l, vec![i as i32 + 1])).collect();
        LengthSpectrum::from_classes(classes, cutoff, [0; 32], cutoff, Completeness::Heuristic).unwrap()
    }

    #[test]
    fn long_geodesic_factor_is_one() {
        let z = local_factor_log(50.0, 2.0, 1e-10).unwrap();
        assert!((z.log_value + 2.0 * (-100f64).exp()).abs() < 1e-30);
        assert!(z.truncation_bound <= 1e-10);
    }

    #[test]
    fn matches_brute_force_product() {
        let z = local_factor_log(1.0, 3.0, 1e-14).unwrap();
        let mut direct = 0.0;
        for k in 0..1_000_000u32 {
            direct += 2.0 * (1.0 - (-(3.0 + k as f64)).exp()).ln();
        }
        assert!((z.log_value - direct).abs() < 1e-14, "{} vs {direct}", z.log_value);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(matches!(local_factor_log(0.0, 2.0, 1e-8), Err(Error::Domain { .. })));
        assert!(matches!(local_factor_log(1.0, -1.0, 1e-8), Err(Error::Domain { .. })));
        assert!(matches!(local_factor_log(1.0, 2.0, 1e-3), Err(Error::InvalidTolerance { .. })));
        assert!(matches!(local_factor_log(1.0, 2.0, 0.0), Err(Error::InvalidTolerance { .. })));
    }

    #[test]
    fn small_length_law_at_one_hundredth() {
        // First-order behaviour puts l = 0.01 about 1.1% from the limit.
        let r = small_l_law_residual(0.01, 2.0).unwrap();
        assert!(r > 0.0 && r < 0.011, "{r}");
    }

    #[test]
    fn small_length_residual_follows_first_order_term() {
        // Residual ≈ l (s² - s + 1/6) / 2.
        for &(l, s, expected) in &[
            (0.5, 2.0, 0.6835),
            (0.1, 2.0, 0.1135),
            (0.01, 2.0, 0.01088),
            (0.001, 2.0, 1.0838e-3),
            (0.001, 3.0, 3.0877e-3),
        ] {
            let r = small_l_law_residual(l, s).unwrap();
            assert!((r / expected - 1.0).abs() < 1e-3, "l = {l}, s = {s}: {r}");
        }
        assert!(small_l_law_residual(0.1, 2.0).unwrap().abs() < 0.5);
    }

    #[test]
    fn small_length_residual_decreases() {
        let grid = [0.5, 0.2, 0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001];
        let r: Vec<f64> = grid.iter().map(|&l| small_l_law_residual(l, 2.0).unwrap().abs()).collect();
        assert!(r.windows(2).all(|w| w[1] < w[0]), "{r:?}");
        assert!(small_l_law_residual(0.6, 2.0).is_err());
    }

    #[test]
    fn partial_products() {
        let empty = spectrum(&[], 5.0);
        let z = partial_zeta_log(&empty, 2.0, 1e-12).unwrap();
        assert_eq!(z.log_value, 0.0);
        assert!(z.is_heuristic());
        let one = spectrum(&[1.0], 5.0);
        let z = partial_zeta_log(&one, 2.0, 1e-12).unwrap();
        assert_eq!(z.log_value, local_factor_log(1.0, 2.0, 1e-12).unwrap().log_value);
        assert!(matches!(partial_zeta_log(&one, 1.0, 1e-12), Err(Error::OutOfRegion { .. })));
    }

    #[test]
    fn pinching_length_examples() {
        let p = PinchingParameter::new(2.0 * PI * PI, 0.1, 1, 1).unwrap();
        assert!((pinching_length(&p) - 1.0).abs() < 1e-15);
        let p = PinchingParameter::from_modulus((-100f64).exp(), 0.1, 1, 1).unwrap();
        assert!((pinching_length(&p) - 0.197_392_088_021_787_2).abs() < 1e-12);
        assert!(PinchingParameter::from_modulus(1.0, 0.1, 1, 1).is_err());
        // |t| must stay below c².
        assert!(PinchingParameter::from_modulus(0.02, 0.1, 1, 1).is_err());
    }

    #[test]
    fn pinched_constant_for_weight_one() {
        assert!((pinched_constant_log(1).exp() / (4.0 * PI.powi(5)) - 1.0).abs() < 1e-14);
        let p = PinchingParameter::new(300.0, 0.1, 1, 0).unwrap();
        assert!(matches!(pinched_factor_asymptotic(&p), Err(Error::UnsupportedWeight(_))));
    }

    #[test]
    fn pinched_factor_at_three_hundred() {
        let c = pinched_factor_check(300.0, 1).unwrap();
        assert!(c.relative_error < 1e-2, "{c:?}");
    }

    #[test]
    fn law_substitution_reproduces_asymptotic() {
        for k in 1..=5u32 {
            for &big_l in &[50.0, 300.0, 1e4] {
                let p = PinchingParameter::new(big_l, 0.1, 1, k).unwrap();
                let via_law = small_l_law_log(pinching_length(&p), k as f64 + 1.0);
                let direct = pinched_factor_asymptotic(&p).unwrap();
                assert!((via_law - direct).abs() <= 1e-12 * direct.abs(), "k = {k}, L = {big_l}");
            }
        }
    }

    #[test]
    fn closure_tends_to_zero() {
        for k in 1..=3u32 {
            let c: Vec<f64> =
                [1e2, 1e3, 1e4].iter().map(|&l| pinched_factor_check(l, k).unwrap().closure.abs()).collect();
            assert!(c[1] < c[0] && c[2] < c[1], "k = {k}: {c:?}");
            // The closure decays like π² (s² - s + 1/6) / L with s = k + 1.
            let s = k as f64 + 1.0;
            let first_order = PI * PI * (s * s - s + 1.0 / 6.0) / 1e4;
            assert!((c[2] / first_order - 1.0).abs() < 0.05, "k = {k}: {c:?}");
        }
    }

    proptest! {
        #[test]
        fn factor_is_in_unit_interval_and_increasing(l in 0.01f64..20.0, s in 0.5f64..6.0) {
            let a = local_factor_log(l, s, 1e-12).unwrap();
            let b = local_factor_log(l * 1.5, s, 1e-12).unwrap();
            prop_assert!(a.log_value < 0.0 && a.log_value.exp() > 0.0);
            prop_assert!(b.log_value >= a.log_value);
        }

        #[test]
        fn truncation_bound_is_honest(l in 0.01f64..5.0, s in 0.5f64..4.0, e in 7i32..13) {
            let tol = 10f64.powi(-e);
            let a = local_factor_log(l, s, tol).unwrap();
            let b = local_factor_log(l, s, tol / 2.0).unwrap();
            prop_assert!((a.log_value - b.log_value).abs() <= a.truncation_bound + 1e-15 * a.log_value.abs());
        }

        #[test]
        fn partial_product_is_additive(xs in proptest::collection::vec(0.1f64..6.0, 0..8), ys in proptest::collection::vec(0.1f64..6.0, 0..8)) {
            let all: Vec<f64> = xs.iter().chain(&ys).copied().collect();
            let a = partial_zeta_log(&spectrum(&xs, 6.0), 2.0, 1e-12).unwrap();
            let b = partial_zeta_log(&spectrum(&ys, 6.0), 2.0, 1e-12).unwrap();
            let u = partial_zeta_log(&spectrum(&all, 6.0), 2.0, 1e-12).unwrap();
            prop_assert!((u.log_value - a.log_value - b.log_value).abs() <= 1e-12 * (1.0 + u.log_value.abs()));
        }
    }
}
