//! The degenerating collar `A_t = {|t|/c < |u| < c}` with its hyperbolic
//! metric and the weighted integrals `I₁`, `I₂` of `(du/u)^{k+1}`.
//!
//! Everything is parametrized by `L = log(1/|t|)` rather than `|t|`, so the
//! annulus can be handled long after `|t|` itself underflows. Integrals run
//! over the log-radius `r = log|u|` with a uniform angular rule.

use core::f64::consts::PI;

use num_complex::Complex64;

use crate::quadrature::{integrate, QuadSettings};
use crate::sum::Neumaier;
use crate::{Error, Result};

/// Number of equispaced angles per radius.
pub const ANGLES: usize = 64;

/// Largest `k` for which [`sin_power_integral`] fits in `u128`.
pub const MAX_EXACT_WEIGHT: u32 = 60;

/// Loosest relative tolerance accepted by the annulus quadratures.
pub const MAX_REL_TOL: f64 = 1e-4;

/// Collar parameters: `L = log(1/|t|)`, the cut-off `c` and the weight `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollarSpec {
    log_inv_t: f64,
    c: f64,
    k: u32,
}

impl CollarSpec {
    pub fn new(t_modulus: f64, c: f64, k: u32) -> Result<Self> {
        if !(t_modulus > 0.0 && t_modulus < 1.0) {
            return Err(Error::Domain { what: "collar modulus |t| must lie in (0, 1)", value: t_modulus });
        }
        Self::from_log_inv_t(-libm::log(t_modulus), c, k)
    }

    /// Build from `L = log(1/|t|)`; requires `L > 2 log(1/c)`, i.e. `|t| < c²`.
    pub fn from_log_inv_t(log_inv_t: f64, c: f64, k: u32) -> Result<Self> {
        if !(c > 0.0 && c < 1.0) {
            return Err(Error::Domain { what: "collar cut-off c must lie in (0, 1)", value: c });
        }
        if k == 0 {
            return Err(Error::UnsupportedWeight("collar integrals need k ≥ 1"));
        }
        if !(log_inv_t.is_finite() && log_inv_t > -2.0 * libm::log(c)) {
            return Err(Error::Domain { what: "annulus is empty unless |t| < c²", value: log_inv_t });
        }
        Ok(Self { log_inv_t, c, k })
    }

    /// The `t = 0` limit: a punctured disc `0 < |u| < c` with the cusp metric.
    pub fn cusp_limit(c: f64, k: u32) -> Result<Self> {
        let mut s = Self::from_log_inv_t(f64::MAX, c, k)?;
        s.log_inv_t = f64::INFINITY;
        Ok(s)
    }

    pub fn with_weight(self, k: u32) -> Result<Self> {
        if self.is_cusp() {
            Self::cusp_limit(self.c, k)
        } else {
            Self::from_log_inv_t(self.log_inv_t, self.c, k)
        }
    }

    pub fn is_cusp(&self) -> bool {
        self.log_inv_t.is_infinite()
    }

    pub fn log_inv_t(&self) -> f64 {
        self.log_inv_t
    }

    /// `|t|`; underflows to zero for large `L`.
    pub fn t_modulus(&self) -> f64 {
        libm::exp(-self.log_inv_t)
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// `ε = log c / log|t| ∈ (0, 1/2)`.
    pub fn epsilon(&self) -> f64 {
        -libm::log(self.c) / self.log_inv_t
    }

    /// Log-radius range `(log(|t|/c), log c)` of the annulus.
    pub fn log_radius_range(&self) -> (f64, f64) {
        let lc = libm::log(self.c);
        (-self.log_inv_t - lc, lc)
    }
}

/// `h(u) |u|²`, the metric density in the cylinder coordinate `log u`.
///
/// For `|t| > 0` this is `½ (π / (L sin(π log|u| / log|t|)))²`; in the cusp
/// limit it is `½ / (log|u|)²`.
pub fn cylinder_density(log_radius: f64, spec: &CollarSpec) -> Result<f64> {
    let (lo, hi) = spec.log_radius_range();
    if !(log_radius > lo && log_radius < hi) {
        return Err(Error::OutsideAnnulus { log_modulus: log_radius });
    }
    if spec.is_cusp() {
        return Ok(0.5 / (log_radius * log_radius));
    }
    let l = spec.log_inv_t;
    let s = libm::sin(PI * (-log_radius / l));
    let a = PI / (l * s);
    Ok(0.5 * a * a)
}

/// `⟨∂/∂u, ∂/∂u⟩_t` at `u`.
pub fn collar_density(u: Complex64, spec: &CollarSpec) -> Result<f64> {
    let rho = u.norm();
    let r = libm::log(rho);
    Ok(cylinder_density(r, spec)? / (rho * rho))
}

/// Exact rational `p / q` in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ratio {
    pub num: u128,
    pub den: u128,
}

impl Ratio {
    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn binomial(n: u64, r: u64) -> u128 {
    let mut acc: u128 = 1;
    for i in 0..r {
        // Exact at every step: acc = C(n, i) before the update.
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// `∫₀¹ sin^{2k}(πx) dx = (2k)! / (2^{2k} (k!)²)` as an exact fraction.
pub fn sin_power_integral(k: u32) -> Result<Ratio> {
    if k > MAX_EXACT_WEIGHT {
        return Err(Error::ResourceLimit { k: k as u64, limit: MAX_EXACT_WEIGHT as u64 });
    }
    let num = binomial(2 * k as u64, k as u64);
    let den = 1u128 << (2 * k);
    let g = gcd(num, den);
    Ok(Ratio { num: num / g, den: den / g })
}

/// `∫_ε^{1-ε} sin^{2k}(πx) dx` from the cosine expansion of `sin^{2k}`.
pub fn sin_power_integral_trimmed(eps: f64, k: u32) -> f64 {
    let k64 = k as u64;
    let scale = libm::ldexp(1.0, -2 * k as i32);
    let mut acc = Neumaier::new();
    acc.add(binomial(2 * k64, k64) as f64 * (1.0 - 2.0 * eps));
    for j in 1..=k64 {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let c = binomial(2 * k64, k64 - j) as f64;
        acc.add(-2.0 * sign * c * libm::sin(2.0 * PI * j as f64 * eps) / (PI * j as f64));
    }
    scale * acc.total()
}

/// `R(t) = ∫_ε^{1-ε} sin^{2k}(πx) dx / ∫₀¹ sin^{2k}(πx) dx`.
pub fn r_factor(eps: f64, k: u32) -> f64 {
    let full = libm::ldexp(binomial(2 * k as u64, k as u64) as f64, -2 * k as i32);
    sin_power_integral_trimmed(eps, k) / full
}

/// `log[(2k)! / (2^{k-1} π^{2k} (k!)²)]`, the per-node coefficient of `L^{2k+1}`.
pub fn node_constant_log(k: u32) -> f64 {
    let mut acc = Neumaier::new();
    for j in (k + 1)..=(2 * k) {
        acc.add(libm::log(j as f64));
    }
    for j in 2..=k {
        acc.add(-libm::log(j as f64));
    }
    acc.add(-(k as f64 - 1.0) * core::f64::consts::LN_2);
    acc.add(-2.0 * k as f64 * libm::log(PI));
    acc.total()
}

/// `(1 / (2^{k-1} π^{2k})) L^{2k+1} ((2k)!/(k!)²) R(t)`.
pub fn i1_closed_form(spec: &CollarSpec) -> f64 {
    let k = spec.k;
    let l = spec.log_inv_t;
    libm::exp(node_constant_log(k) + (2 * k + 1) as f64 * libm::log(l)) * r_factor(spec.epsilon(), k)
}

/// Outcome of an annulus integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollarIntegral {
    /// The integral, or its modulus when complex.
    pub value: f64,
    pub closed_form: Option<f64>,
    pub relative_error: Option<f64>,
    pub quadrature_cells: usize,
    /// `∫ |integrand|`; equals `value` for positive integrands.
    pub majorant: f64,
}

impl CollarIntegral {
    fn with_closed_form(value: f64, closed: f64, cells: usize) -> Self {
        let rel = if closed != 0.0 { Some(libm::fabs(value - closed) / libm::fabs(closed)) } else { None };
        Self { value, closed_form: Some(closed), relative_error: rel, quadrature_cells: cells, majorant: value }
    }
}

fn check(spec: &CollarSpec, rel_tol: f64) -> Result<()> {
    if !(rel_tol > 0.0 && rel_tol <= MAX_REL_TOL) {
        return Err(Error::InvalidTolerance { tol: rel_tol, lo: 0.0, hi: MAX_REL_TOL });
    }
    if spec.is_cusp() {
        return Err(Error::Domain { what: "annulus integrals need |t| > 0", value: 0.0 });
    }
    Ok(())
}

// Pointwise `⟨(du/u)^{k+1}, (du/u)^{k+1}⟩_t` times the density of the
// normalized Kähler form `(i/2π) h du∧dū`, both in cylinder coordinates:
// `|du/u|² = 1/(h|u|²)` and `ω = (h|u|²/π) dr dθ`.
fn pairing_times_form(log_radius: f64, spec: &CollarSpec) -> f64 {
    let g = cylinder_density(log_radius, spec).expect("quadrature nodes are interior");
    libm::pow(g, -(spec.k as f64)) / PI
}

fn angular_sum<F: FnMut(f64) -> f64>(mut f: F) -> f64 {
    let h = 2.0 * PI / ANGLES as f64;
    (0..ANGLES).map(|j| f(h * j as f64) * h).collect::<Neumaier>().total()
}

/// `I₁(t) = ∫_{A_t} ⟨(du/u)^{k+1}, (du/u)^{k+1}⟩_t ω_t` by annulus quadrature.
///
/// The closed form carries `(log|t|⁻¹)^{2k+1}`.
pub fn i1_quadrature(spec: &CollarSpec, rel_tol: f64) -> Result<CollarIntegral> {
    check(spec, rel_tol)?;
    let (lo, hi) = spec.log_radius_range();
    let settings = QuadSettings::relative(rel_tol * 1e-2);
    let q = integrate(|r| angular_sum(|_theta| pairing_times_form(r, spec)), lo, hi, settings)?;
    Ok(CollarIntegral::with_closed_form(q.value, i1_closed_form(spec), q.cells))
}

/// `I₁` from the one-dimensional reduction `2^{k+1} π^{-2k} L^{2k+1} ∫_ε^{1-ε} sin^{2k}(πx) dx`.
pub fn i1_reduced(spec: &CollarSpec, rel_tol: f64) -> Result<CollarIntegral> {
    check(spec, rel_tol)?;
    let k = spec.k as f64;
    let l = spec.log_inv_t;
    let eps = spec.epsilon();
    let q =
        integrate(|x| libm::pow(libm::sin(PI * x), 2.0 * k), eps, 1.0 - eps, QuadSettings::relative(rel_tol * 1e-2))?;
    let prefactor =
        libm::exp((k + 1.0) * core::f64::consts::LN_2 - 2.0 * k * libm::log(PI) + (2.0 * k + 1.0) * libm::log(l));
    Ok(CollarIntegral::with_closed_form(prefactor * q.value, i1_closed_form(spec), q.cells))
}

/// `I₂(t) = ∫_{A_t} ⟨u (du/u)^{k+1}, (du/u)^{k+1}⟩_t ω_t`.
///
/// The angular factor `e^{iθ}` integrates to zero, so `value` is the modulus
/// of a numerically vanishing complex integral; `majorant` is `∫ |u| ⟨·,·⟩ ω`
/// and is the quantity whose boundedness in `t` is informative.
pub fn i2_quadrature(spec: &CollarSpec, rel_tol: f64) -> Result<CollarIntegral> {
    check(spec, rel_tol)?;
    let (lo, hi) = spec.log_radius_range();
    let settings = QuadSettings::relative(rel_tol * 1e-2);
    let maj = integrate(|r| libm::exp(r) * angular_sum(|_| pairing_times_form(r, spec)), lo, hi, settings)?;
    let abs = QuadSettings::relative(rel_tol * 1e-2).with_abs_tol(rel_tol * 1e-2 * maj.value);
    let re = integrate(|r| libm::exp(r) * angular_sum(|th| libm::cos(th) * pairing_times_form(r, spec)), lo, hi, abs)?;
    let im = integrate(|r| libm::exp(r) * angular_sum(|th| libm::sin(th) * pairing_times_form(r, spec)), lo, hi, abs)?;
    Ok(CollarIntegral {
        value: libm::hypot(re.value, im.value),
        closed_form: None,
        relative_error: None,
        quadrature_cells: maj.cells + re.cells + im.cells,
        majorant: maj.value,
    })
}

/// `lim_{t→0}` of the `I₂` majorant: `2^{k+1} c ∫₀^∞ e^{-s} (log(1/c) + s)^{2k} ds`.
pub fn i2_majorant_limit(c: f64, k: u32) -> f64 {
    let a = -libm::log(c);
    let n = 2 * k as u64;
    // ∫₀^∞ e^{-s}(a+s)^n ds = Σ_j C(n, j) a^{n-j} j!
    let mut fact = 1.0;
    let mut acc = Neumaier::new();
    for j in 0..=n {
        if j > 0 {
            fact *= j as f64;
        }
        acc.add(binomial(n, j) as f64 * libm::pow(a, (n - j) as f64) * fact);
    }
    libm::ldexp(c * acc.total(), k as i32 + 1)
}
