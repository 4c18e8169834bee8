//! PSL₂(ℝ) arithmetic, element classification and cusp-model densities.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::quadrature::{integrate, integrate_endpoint_singular, QuadResult, QuadSettings};
use crate::scalar::Scalar;
use crate::{Error, Result};

/// Default tolerance on `||trace| - 2|` separating parabolic elements.
pub const PARABOLIC_TOL: f64 = 1e-10;

/// A Möbius transformation `z ↦ (az + b)/(cz + d)` with `ad - bc = 1`.
///
/// Matrices that differ by an overall sign are the same element of PSL₂(ℝ)
/// and compare equal. The optional word records the signed generator indices
/// (`+i` for generator `i`, `-i` for its inverse, indices starting at 1).
#[derive(Clone, Debug)]
pub struct MoebiusMap<S: Scalar = f64> {
    a: S,
    b: S,
    c: S,
    d: S,
    word: Vec<i32>,
}

/// Conjugacy type of a PSL₂(ℝ) element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Classification {
    Hyperbolic,
    Parabolic,
    Elliptic,
    Identity,
}

impl<S: Scalar> MoebiusMap<S> {
    /// Entries with determinant within `1e-9` of one; the determinant is then
    /// renormalized exactly.
    pub fn new(a: S, b: S, c: S, d: S) -> Result<Self> {
        let det = (a * d - b * c).to_f64();
        if !(libm::fabs(det - 1.0) <= 1e-9) {
            return Err(Error::Domain { what: "Möbius determinant", value: det });
        }
        Self::normalized(a, b, c, d)
    }

    /// Scale entries by `det^{-1/2}`; any positive determinant is accepted.
    pub fn normalized(a: S, b: S, c: S, d: S) -> Result<Self> {
        let det = a * d - b * c;
        if !(det.to_f64() > 0.0) {
            return Err(Error::Domain { what: "Möbius determinant", value: det.to_f64() });
        }
        let s = S::ONE / det.sqrt();
        Ok(Self { a: a * s, b: b * s, c: c * s, d: d * s, word: Vec::new() })
    }

    pub fn identity() -> Self {
        Self { a: S::ONE, b: S::ZERO, c: S::ZERO, d: S::ONE, word: Vec::new() }
    }

    /// Attach a word label.
    pub fn with_word(mut self, word: Vec<i32>) -> Self {
        self.word = word;
        self
    }

    pub fn word(&self) -> &[i32] {
        &self.word
    }

    /// `[a, b, c, d]`, row-major.
    pub fn entries(&self) -> [S; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn trace(&self) -> S {
        self.a + self.d
    }

    pub fn abs_trace(&self) -> f64 {
        libm::fabs(self.trace().to_f64())
    }

    pub fn det(&self) -> S {
        self.a * self.d - self.b * self.c
    }

    pub fn inverse(&self) -> Self {
        let word = self.word.iter().rev().map(|&g| -g).collect();
        Self { a: self.d, b: -self.b, c: -self.c, d: self.a, word }
    }

    /// `self ∘ other`, i.e. the matrix product `self · other`.
    pub fn compose(&self, other: &Self) -> Self {
        let [a, b, c, d] = mul_entries(self.entries(), other.entries());
        let mut word = Vec::with_capacity(self.word.len() + other.word.len());
        word.extend_from_slice(&self.word);
        word.extend_from_slice(&other.word);
        let mut m = renormalize([a, b, c, d]);
        m.word = free_reduce(&word);
        m
    }

    /// `h · self · h⁻¹`.
    pub fn conjugate_by(&self, h: &Self) -> Self {
        let mut m = h.compose(self).compose(&h.inverse());
        m.word = self.word.clone();
        m
    }

    /// `self^n` for `n ≥ 0` by repeated squaring.
    pub fn pow(&self, mut n: u32) -> Self {
        let mut result = Self::identity();
        let mut base = self.clone();
        while n > 0 {
            if n & 1 == 1 {
                result = result.compose(&base);
            }
            base = base.compose(&base);
            n >>= 1;
        }
        result
    }

    /// Entrywise comparison up to the PSL₂ sign.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        let diff = |sign: f64| {
            self.entries()
                .iter()
                .zip(other.entries())
                .map(|(&x, y)| libm::fabs(x.to_f64() - sign * y.to_f64()))
                .fold(0.0, f64::max)
        };
        diff(1.0) <= tol || diff(-1.0) <= tol
    }

    pub fn to_f64(&self) -> MoebiusMap<f64> {
        MoebiusMap {
            a: self.a.to_f64(),
            b: self.b.to_f64(),
            c: self.c.to_f64(),
            d: self.d.to_f64(),
            word: self.word.clone(),
        }
    }

    pub fn cast<T: Scalar>(&self) -> MoebiusMap<T> {
        MoebiusMap {
            a: T::from_f64(self.a.to_f64()),
            b: T::from_f64(self.b.to_f64()),
            c: T::from_f64(self.c.to_f64()),
            d: T::from_f64(self.d.to_f64()),
            word: self.word.clone(),
        }
    }

    /// Image of a point of the upper half-plane.
    pub fn apply(&self, z: Complex64) -> Complex64 {
        let [a, b, c, d] = self.entries().map(|x| x.to_f64());
        (z * a + b) / (z * c + d)
    }
}

impl<S: Scalar> PartialEq for MoebiusMap<S> {
    fn eq(&self, other: &Self) -> bool {
        let same = self.entries() == other.entries();
        let neg = self.entries() == other.entries().map(|x| -x);
        same || neg
    }
}

#[inline]
pub(crate) fn mul_entries<S: Scalar>(x: [S; 4], y: [S; 4]) -> [S; 4] {
    [x[0] * y[0] + x[1] * y[2], x[0] * y[1] + x[1] * y[3], x[2] * y[0] + x[3] * y[2], x[2] * y[1] + x[3] * y[3]]
}

#[inline]
pub(crate) fn renormalize<S: Scalar>(e: [S; 4]) -> MoebiusMap<S> {
    let det = e[0] * e[3] - e[1] * e[2];
    let s = S::ONE / det.sqrt();
    MoebiusMap { a: e[0] * s, b: e[1] * s, c: e[2] * s, d: e[3] * s, word: Vec::new() }
}

/// Cancel adjacent `g, -g` pairs.
pub fn free_reduce(word: &[i32]) -> Vec<i32> {
    let mut out: Vec<i32> = Vec::with_capacity(word.len());
    for &g in word {
        if out.last() == Some(&-g) {
            out.pop();
        } else {
            out.push(g);
        }
    }
    out
}

/// Classify with the default parabolic tolerance.
pub fn classify<S: Scalar>(m: &MoebiusMap<S>) -> Classification {
    classify_with_tol(m, PARABOLIC_TOL)
}

pub fn classify_with_tol<S: Scalar>(m: &MoebiusMap<S>, tol: f64) -> Classification {
    let t = m.abs_trace();
    if t > 2.0 + tol {
        Classification::Hyperbolic
    } else if t < 2.0 - tol {
        Classification::Elliptic
    } else {
        let [a, b, c, d] = m.entries().map(|x| x.to_f64());
        if libm::fabs(b) <= tol && libm::fabs(c) <= tol && libm::fabs(a - d) <= tol {
            Classification::Identity
        } else {
            Classification::Parabolic
        }
    }
}

/// Translation length `2 arccosh(|tr| / 2)` of a hyperbolic element.
pub fn trace_to_length(abs_trace: f64) -> Result<f64> {
    if !(abs_trace > 2.0) {
        return Err(Error::NotHyperbolic { abs_trace });
    }
    // acosh(1 + h) = log1p(h + sqrt(h (h + 2))), exact near the parabolic edge.
    let h = 0.5 * abs_trace - 1.0;
    Ok(2.0 * libm::log1p(h + libm::sqrt(h * (h + 2.0))))
}

/// `2 cosh(l / 2)`.
pub fn length_to_trace(length: f64) -> f64 {
    2.0 * libm::cosh(0.5 * length)
}

/// Topological type `(g, n)` of a punctured surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SurfaceSignature {
    pub g: u32,
    pub n: u32,
}

impl SurfaceSignature {
    /// Any `(g, n)`; use [`SurfaceSignature::stable`] when hyperbolicity is required.
    pub const fn new(g: u32, n: u32) -> Self {
        Self { g, n }
    }

    pub fn stable(g: u32, n: u32) -> Result<Self> {
        let sig = Self { g, n };
        if sig.is_stable() {
            Ok(sig)
        } else {
            Err(Error::UnstableSignature { g, n })
        }
    }

    /// `2g - 2 + n`, the hyperbolic area divided by `2π`.
    pub fn normalized_volume(&self) -> i64 {
        2 * self.g as i64 - 2 + self.n as i64
    }

    pub fn is_stable(&self) -> bool {
        self.normalized_volume() > 0
    }

    /// Rank of the free fundamental group of a punctured surface.
    pub fn free_rank(&self) -> usize {
        2 * self.g as usize + (self.n as usize).saturating_sub(1)
    }
}

/// Point of the punctured unit disc in a cusp coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CuspModelPoint {
    pub z: Complex64,
}

impl CuspModelPoint {
    pub fn new(z: Complex64) -> Self {
        Self { z }
    }
}

/// Length density `1 / (|z| log|z|⁻¹)` of the cusp metric.
pub fn cusp_density(p: CuspModelPoint) -> Result<f64> {
    let r = p.z.norm();
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::Singularity { modulus: r });
    }
    Ok(1.0 / (r * -libm::log(r)))
}

/// Height above which the cusp at infinity is integrated in closed form.
const CUSP_HEIGHT: f64 = 1.0;

/// Hyperbolic area of a standard fundamental domain.
///
/// With `level2` the domain is `{|Re z| ≤ 1, |z ± 1/2| ≥ 1/2}` for Γ(2);
/// otherwise the modular domain `{|Re z| ≤ 1/2, |z| ≥ 1}`. Each vertical strip
/// is integrated adaptively in `log y` up to height 1, above which the area
/// `width / Y` is added exactly.
pub fn modular_area_quadrature(level2: bool, rel_tol: f64) -> Result<QuadResult> {
    if !(rel_tol > 0.0 && rel_tol <= 1e-2) {
        return Err(Error::InvalidTolerance { tol: rel_tol, lo: 0.0, hi: 1e-2 });
    }
    let inner_settings = QuadSettings::relative(rel_tol * 1e-2).with_max_cells(200);
    let mut failure = None;
    let mut strip = |y_low: f64| -> f64 {
        let lo = libm::log(y_low);
        let hi = libm::log(CUSP_HEIGHT);
        let body = match integrate(|u| libm::exp(-u), lo, hi, inner_settings) {
            Ok(r) => r.value,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        };
        body + 1.0 / CUSP_HEIGHT
    };
    let outer = QuadSettings::relative(rel_tol * 1e-1);
    let (total, cells) = if level2 {
        // The two halves are mirror images; each has cusps at both ends.
        let half = integrate_endpoint_singular(
            |x| {
                let y_low = libm::sqrt(x * (1.0 - x));
                if y_low == 0.0 {
                    0.0
                } else {
                    strip(y_low)
                }
            },
            0.0,
            1.0,
            outer,
        );
        let half = half?;
        (2.0 * half.value, 2 * half.cells)
    } else {
        let r = integrate(|x| strip(libm::sqrt(1.0 - x * x)), -0.5, 0.5, outer)?;
        (r.value, r.cells)
    };
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(QuadResult { value: total, error: rel_tol * 1e-1 * libm::fabs(total), cells })
}

/// Exact area `2π (2g - 2 + n)` of a finite-area hyperbolic surface.
pub fn gauss_bonnet_area(sig: SurfaceSignature) -> f64 {
    2.0 * PI * sig.normalized_volume() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Dd;
    use proptest::prelude::*;

    fn m(a: f64, b: f64, c: f64, d: f64) -> MoebiusMap {
        MoebiusMap::new(a, b, c, d).unwrap()
    }

    #[test]
    fn product_of_level_two_generators() {
        let a = m(1.0, 2.0, 0.0, 1.0).with_word(vec![1]);
        let b = m(1.0, 0.0, 2.0, 1.0).with_word(vec![2]);
        let ab = a.compose(&b);
        assert_eq!(ab.entries(), [5.0, 2.0, 2.0, 1.0]);
        assert_eq!(ab.word(), &[1, 2]);
        assert_eq!(classify(&ab), Classification::Hyperbolic);
    }

    #[test]
    fn identity_and_inverse() {
        let g = m(2.0, 1.0, 1.0, 1.0).with_word(vec![3]);
        assert_eq!(MoebiusMap::identity().compose(&g), g);
        let e = g.compose(&g.inverse());
        assert!(e.approx_eq(&MoebiusMap::identity(), 1e-15));
        assert!(e.word().is_empty());
        assert_eq!(classify(&e), Classification::Identity);
    }

    #[test]
    fn sign_is_forgotten() {
        let g = m(2.0, 1.0, 1.0, 1.0);
        let h = m(-2.0, -1.0, -1.0, -1.0);
        assert_eq!(g, h);
        assert_eq!(classify(&h), Classification::Hyperbolic);
    }

    #[test]
    fn classification_examples() {
        assert_eq!(classify(&m(1.0, 1.0, 0.0, 1.0)), Classification::Parabolic);
        assert_eq!(classify(&m(0.0, -1.0, 1.0, 0.0)), Classification::Elliptic);
        assert_eq!(classify(&m(5.0, 2.0, 2.0, 1.0)), Classification::Hyperbolic);
        // Borderline traces follow the configured tolerance.
        let near = m(1.0, 1e-12, 0.0, 1.0);
        assert_eq!(classify(&near), Classification::Identity);
        assert_eq!(classify_with_tol(&near, 1e-14), Classification::Parabolic);
    }

    #[test]
    fn determinant_is_checked() {
        assert!(MoebiusMap::new(2.0, 0.0, 0.0, 1.0).is_err());
        let n = MoebiusMap::normalized(2.0, 0.0, 0.0, 2.0).unwrap();
        assert_eq!(n.entries(), [1.0, 0.0, 0.0, 1.0]);
        assert!(MoebiusMap::normalized(0.0, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn trace_length_examples() {
        let l = trace_to_length(2.0 * (0.5f64).cosh()).unwrap();
        assert!((l - 1.0).abs() < 1e-15);
        // 2 acosh 3 = 2 log(3 + 2 sqrt 2)
        let oracle = 2.0 * (3.0 + 2.0 * 2f64.sqrt()).ln();
        assert!((trace_to_length(6.0).unwrap() - oracle).abs() < 1e-15);
        assert!((oracle - 3.525_494_348_078_172).abs() < 1e-15);
        assert!(matches!(trace_to_length(2.0), Err(Error::NotHyperbolic { .. })));
        assert!(trace_to_length(f64::NAN).is_err());
    }

    #[test]
    fn short_lengths_keep_relative_accuracy() {
        let l = 1e-3;
        let back = trace_to_length(length_to_trace(l)).unwrap();
        assert!((back / l - 1.0).abs() < 1e-8, "{back}");
    }

    #[test]
    fn cusp_density_examples() {
        let e = core::f64::consts::E;
        let d1 = cusp_density(CuspModelPoint::new(Complex64::new(0.0, 1.0 / e))).unwrap();
        assert!((d1 - e).abs() < 1e-14);
        let d2 = cusp_density(CuspModelPoint::new(Complex64::from_polar((-2.0f64).exp(), 0.7))).unwrap();
        assert!((d2 - e * e / 2.0).abs() < 1e-13);
        for r in [0.0, 1.0, 1.5] {
            assert!(cusp_density(CuspModelPoint::new(Complex64::new(r, 0.0))).is_err());
        }
    }

    #[test]
    fn cusp_density_matches_upper_half_plane_pullback() {
        // z = exp(2πi w): |dz| = 2π|z||dw| and the half-plane density is 1/Im w.
        for i in 1..20 {
            for j in 0..8 {
                let w = Complex64::new(j as f64 / 8.0, 0.05 * i as f64);
                let z = (Complex64::new(0.0, 2.0 * PI) * w).exp();
                let pulled = 1.0 / (w.im * 2.0 * PI * z.norm());
                let direct = cusp_density(CuspModelPoint::new(z)).unwrap();
                assert!((pulled / direct - 1.0).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn signatures() {
        assert!(SurfaceSignature::stable(0, 2).is_err());
        assert!(SurfaceSignature::stable(1, 0).is_err());
        let s = SurfaceSignature::stable(0, 3).unwrap();
        assert_eq!(s.normalized_volume(), 1);
        assert_eq!(s.free_rank(), 2);
        assert_eq!(SurfaceSignature::new(2, 0).free_rank(), 4);
        assert_eq!(SurfaceSignature::new(1, 1).free_rank(), 2);
    }

    #[test]
    fn level_two_area_is_two_pi() {
        let r = modular_area_quadrature(true, 1e-4).unwrap();
        let sig = SurfaceSignature::stable(0, 3).unwrap();
        assert!((r.value / gauss_bonnet_area(sig) - 1.0).abs() < 1e-4, "{r:?}");
        assert!((r.value / (2.0 * PI) - sig.normalized_volume() as f64).abs() < 1e-4);
    }

    #[test]
    fn modular_area_and_index() {
        let full = modular_area_quadrature(false, 1e-6).unwrap();
        assert!((full.value - PI / 3.0).abs() < 1e-6);
        let lvl2 = modular_area_quadrature(true, 1e-6).unwrap();
        assert!((lvl2.value / full.value - 6.0).abs() < 1e-5);
    }

    #[test]
    fn area_rejects_bad_tolerance() {
        for tol in [0.0, -1.0, 0.5, f64::NAN] {
            assert!(matches!(modular_area_quadrature(true, tol), Err(Error::InvalidTolerance { .. })));
        }
    }

    #[test]
    fn double_double_products_agree() {
        let a =
            MoebiusMap::<Dd>::new(Dd::from_f64(1.0), Dd::from_f64(2.0), Dd::from_f64(0.0), Dd::from_f64(1.0)).unwrap();
        let b =
            MoebiusMap::<Dd>::new(Dd::from_f64(1.0), Dd::from_f64(0.0), Dd::from_f64(2.0), Dd::from_f64(1.0)).unwrap();
        let w = a.compose(&b.inverse()).compose(&a).compose(&b);
        let wf = a.to_f64().compose(&b.to_f64().inverse()).compose(&a.to_f64()).compose(&b.to_f64());
        assert!(w.approx_eq(&wf.cast(), 1e-12));
    }

    fn unimodular() -> impl Strategy<Value = MoebiusMap> {
        (-3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0).prop_filter_map("degenerate", |(a, b, c)| {
            if a.abs() < 0.1 {
                return None;
            }
            MoebiusMap::new(a, b, c, (1.0 + b * c) / a).ok()
        })
    }

    proptest! {
        #[test]
        fn power_law(t in 2.05f64..8.0, x in -1.0f64..1.0, n in 1u32..6) {
            // Hyperbolic element with trace t, conjugated away from diagonal form.
            let l = trace_to_length(t).unwrap();
            let lam = (0.5 * l).exp();
            let d = MoebiusMap::new(lam, 0.0, 0.0, 1.0 / lam).unwrap();
            let h = MoebiusMap::new(1.0, x, 0.0, 1.0).unwrap();
            let g = d.conjugate_by(&h);
            let ln = trace_to_length(g.pow(n).abs_trace()).unwrap();
            prop_assert!((ln / (n as f64 * l) - 1.0).abs() < 1e-10);
        }

        #[test]
        fn conjugation_preserves_trace(g in unimodular(), h in unimodular()) {
            let t = g.abs_trace();
            let tc = g.conjugate_by(&h).abs_trace();
            let scale = h.entries().iter().map(|x| x * x).sum::<f64>();
            prop_assert!((t - tc).abs() <= 1e-12 * scale * scale * t.max(1.0));
        }

        #[test]
        fn sign_invariance(g in unimodular(), h in unimodular()) {
            let [a, b, c, d] = g.entries();
            let neg = MoebiusMap::new(-a, -b, -c, -d).unwrap();
            prop_assert_eq!(classify(&g), classify(&neg));
            prop_assert!(g.compose(&h).approx_eq(&neg.compose(&h), 1e-12 * g.abs_trace().max(1.0) * h.abs_trace().max(1.0) * 100.0));
            prop_assert!(g.inverse().approx_eq(&neg.inverse(), 1e-12 * g.abs_trace().max(1.0) * 100.0));
            let exact = MoebiusMap { a: -a, b: -b, c: -c, d: -d, word: Vec::new() };
            prop_assert_eq!(&exact, &g);
        }
    }
}
