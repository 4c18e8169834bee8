//! Gram determinants, the Quillen-type rescaling and the block factorization
//! of Gram matrices along a pinching degeneration.
//!
//! Determinants are only ever handled through their logarithms: along a
//! degeneration the diagonal grows like `L^{2k+1}` per node and the products
//! leave the `f64` range quickly.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::collar::{node_constant_log, r_factor};
use crate::constants::{log_factorial, Constants};
use crate::hyperbolic::SurfaceSignature;
use crate::selberg::{pinched_constant_log, ZetaEvaluation};
use crate::sum::Neumaier;
use crate::{Error, Result};

/// Entrywise hermiticity tolerance, relative to `max(1, |a_ij|)`.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Negative pivots down to `-PSD_TOL · ‖H‖` count as rounding.
pub const PSD_TOL: f64 = 1e-10;
/// Pivots below this magnitude make a determinant unusable.
pub const MIN_PIVOT: f64 = 1e-30;

/// Hermitian positive semidefinite `d × d` matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    d: usize,
    entries: Vec<Complex64>,
}

impl GramMatrix {
    pub fn new(d: usize, entries: Vec<Complex64>) -> Result<Self> {
        if entries.len() != d * d {
            return Err(Error::Dimension("Gram matrix needs d² entries"));
        }
        for i in 0..d {
            for j in i..d {
                let a = entries[i * d + j];
                let b = entries[j * d + i];
                if !(a.re.is_finite() && a.im.is_finite()) {
                    return Err(Error::NotHermitian { row: i, col: j, defect: f64::NAN });
                }
                let defect = (a - b.conj()).norm();
                if defect > HERMITIAN_TOL * a.norm().max(b.norm()).max(1.0) {
                    return Err(Error::NotHermitian { row: i, col: j, defect });
                }
            }
        }
        let g = Self { d, entries };
        g.factor()?;
        Ok(g)
    }

    pub fn from_real(d: usize, entries: &[f64]) -> Result<Self> {
        Self::new(d, entries.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn identity(d: usize) -> Self {
        Self::diagonal(&vec![1.0; d]).expect("identity is positive definite")
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        let d = diag.len();
        let mut e = vec![Complex64::new(0.0, 0.0); d * d];
        for (i, &x) in diag.iter().enumerate() {
            e[i * d + i] = Complex64::new(x, 0.0);
        }
        Self::new(d, e)
    }

    /// `A* A` for a `rows × d` matrix `A`.
    pub fn from_factor(rows: usize, d: usize, a: &[Complex64]) -> Result<Self> {
        if a.len() != rows * d {
            return Err(Error::Dimension("factor needs rows × d entries"));
        }
        let mut e = vec![Complex64::new(0.0, 0.0); d * d];
        for i in 0..d {
            for j in 0..d {
                e[i * d + j] = (0..rows).map(|r| a[r * d + i].conj() * a[r * d + j]).sum();
            }
        }
        // Enforce exact hermiticity against rounding in the sums.
        for i in 0..d {
            e[i * d + i].im = 0.0;
            for j in 0..i {
                e[i * d + j] = e[j * d + i].conj();
            }
        }
        Self::new(d, e)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.d + j]
    }

    /// Largest entry modulus.
    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.d, self.entries.iter().map(|z| z * c).collect())
    }

    /// `A* G A`: the Gram matrix of the basis `s A`.
    pub fn change_basis(&self, a: &[Complex64]) -> Result<Self> {
        let d = self.d;
        if a.len() != d * d {
            return Err(Error::Dimension("basis change must be d × d"));
        }
        let mut ga = vec![Complex64::new(0.0, 0.0); d * d];
        for i in 0..d {
            for j in 0..d {
                ga[i * d + j] = (0..d).map(|l| self.get(i, l) * a[l * d + j]).sum();
            }
        }
        let mut e = vec![Complex64::new(0.0, 0.0); d * d];
        for i in 0..d {
            for j in i..d {
                let v: Complex64 = (0..d).map(|l| a[l * d + i].conj() * ga[l * d + j]).sum();
                e[i * d + j] = v;
                e[j * d + i] = v.conj();
            }
            e[i * d + i].im = 0.0;
        }
        Self::new(d, e)
    }

    pub fn block_diagonal(&self, other: &Self) -> Self {
        let d = self.d + other.d;
        let mut e = vec![Complex64::new(0.0, 0.0); d * d];
        for i in 0..self.d {
            for j in 0..self.d {
                e[i * d + j] = self.get(i, j);
            }
        }
        for i in 0..other.d {
            for j in 0..other.d {
                e[(self.d + i) * d + self.d + j] = other.get(i, j);
            }
        }
        Self { d, entries: e }
    }

    /// Diagonally pivoted `L D L*`; returns the pivots in elimination order
    /// and stops at the first non-positive pivot.
    fn factor(&self) -> Result<Vec<f64>> {
        let d = self.d;
        let norm = self.norm();
        let floor = PSD_TOL * norm;
        let mut a = self.entries.clone();
        let mut perm: Vec<usize> = (0..d).collect();
        let mut pivots = Vec::with_capacity(d);
        for step in 0..d {
            // Largest remaining diagonal entry.
            let (best, p) = (step..d)
                .map(|i| (i, a[perm[i] * d + perm[i]].re))
                .fold((step, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
            if p < -floor {
                return Err(Error::NotPositiveSemidefinite { pivot: p, threshold: -floor });
            }
            perm.swap(step, best);
            if p <= 0.0 {
                // Remaining block should vanish; large off-diagonal entries mean indefiniteness.
                for i in step..d {
                    for j in step..d {
                        let z = a[perm[i] * d + perm[j]].norm();
                        if z > floor.max(f64::MIN_POSITIVE) * 1e2 {
                            return Err(Error::NotPositiveSemidefinite { pivot: p, threshold: -floor });
                        }
                    }
                }
                break;
            }
            pivots.push(p);
            let k = perm[step];
            for ii in (step + 1)..d {
                let i = perm[ii];
                let lik = a[i * d + k] / p;
                if lik == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for &j in &perm[(step + 1)..d] {
                    let akj = a[k * d + j];
                    a[i * d + j] -= lik * akj;
                }
            }
        }
        Ok(pivots)
    }
}

/// `log det G` from the pivoted factorization.
pub fn log_det(g: &GramMatrix) -> Result<f64> {
    let pivots = g.factor()?;
    if pivots.len() < g.d {
        return Err(Error::Singular { pivot: 0.0, step: pivots.len() });
    }
    let mut acc = Neumaier::new();
    for (step, &p) in pivots.iter().enumerate() {
        if p < MIN_PIVOT {
            return Err(Error::Singular { pivot: p, step });
        }
        acc.add(libm::log(p));
    }
    Ok(acc.total())
}

/// `log ‖s₁ ∧ … ∧ s_d‖_{L²} = ½ log det G`.
pub fn l2_det_norm_log(g: &GramMatrix) -> Result<f64> {
    Ok(0.5 * log_det(g)?)
}

/// `‖s₁ ∧ … ∧ s_d‖_{L²} = sqrt(det G)`.
pub fn l2_det_norm(g: &GramMatrix) -> Result<f64> {
    Ok(libm::exp(l2_det_norm_log(g)?))
}

/// Log of a Quillen-type norm and its error budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuillenNorm {
    pub log_value: f64,
    /// Half the zeta truncation bound.
    pub truncation_bound: f64,
    pub spectral_tail_bound: Option<f64>,
}

/// `log‖·‖_Q = log‖·‖_{L²} - ½ (log E_{k+1} + log Z(k+1))` with `log E_{k+1}` supplied.
pub fn quillen_norm_log_with_constant(
    l2_norm_log: f64,
    log_e: f64,
    k: u32,
    zeta: &ZetaEvaluation,
) -> Result<QuillenNorm> {
    if k == 0 {
        return Err(Error::UnsupportedWeight("the k = 0 normalization needs Z′(U, 1)"));
    }
    let expected = k as f64 + 1.0;
    if zeta.s != expected {
        return Err(Error::ZetaArgumentMismatch { expected, found: zeta.s });
    }
    Ok(QuillenNorm {
        log_value: l2_norm_log - 0.5 * (log_e + zeta.log_value),
        truncation_bound: 0.5 * zeta.truncation_bound,
        spectral_tail_bound: zeta.spectral_tail_bound.map(|b| 0.5 * b),
    })
}

/// [`quillen_norm_log_with_constant`] with `log E_{k+1}(g,n)` from `consts`.
pub fn quillen_norm_log(
    l2_norm_log: f64,
    sig: SurfaceSignature,
    k: u32,
    zeta: &ZetaEvaluation,
    consts: &Constants,
) -> Result<QuillenNorm> {
    if k == 0 {
        return Err(Error::UnsupportedWeight("the k = 0 normalization needs Z′(U, 1)"));
    }
    quillen_norm_log_with_constant(l2_norm_log, consts.log_e_higher(sig, k)?, k, zeta)
}

/// Gram matrix split into a diverging θ-block, a bounded B-block and the cross terms.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockGram {
    theta: GramMatrix,
    b: GramMatrix,
    /// `n × m`, row-major.
    cross: Vec<Complex64>,
}

impl BlockGram {
    pub fn new(theta: GramMatrix, b: GramMatrix, cross: Vec<Complex64>) -> Result<Self> {
        if cross.len() != theta.d * b.d {
            return Err(Error::Dimension("cross block must be n × m"));
        }
        for i in 0..theta.d {
            let t = theta.get(i, i).re;
            if !(t > 0.0) {
                return Err(Error::Domain { what: "θ-block diagonal must be positive", value: t });
            }
        }
        let bg = Self { theta, b, cross };
        bg.assemble()?;
        Ok(bg)
    }

    pub fn theta(&self) -> &GramMatrix {
        &self.theta
    }

    pub fn b_block(&self) -> &GramMatrix {
        &self.b
    }

    pub fn cross(&self) -> &[Complex64] {
        &self.cross
    }

    /// The full `(n+m) × (n+m)` matrix `[[Θ, C], [C*, B]]`.
    pub fn assemble(&self) -> Result<GramMatrix> {
        let (n, m) = (self.theta.d, self.b.d);
        let d = n + m;
        let mut e = self.theta.block_diagonal(&self.b).entries;
        for i in 0..n {
            for j in 0..m {
                let c = self.cross[i * m + j];
                e[i * d + n + j] = c;
                e[(n + j) * d + i] = c.conj();
            }
        }
        GramMatrix::new(d, e)
    }
}

/// Output of [`block_det_factorization`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockFactorization {
    pub log_det_h: f64,
    pub log_det_b: f64,
    /// `Σ log ⟨θᵢ, θᵢ⟩`
    pub log_theta_product: f64,
    /// `δ = Σ ⟨θᵢ, θᵢ⟩⁻¹`
    pub delta: f64,
    /// `det H / (det B Π⟨θᵢ,θᵢ⟩) - 1`, computed without cancellation against the large logs.
    pub residual: f64,
}

// Gaussian elimination with partial pivoting; solves `A X = B` for `cols` right-hand sides.
fn solve(n: usize, a: &[Complex64], b: &[Complex64], cols: usize) -> Result<Vec<Complex64>> {
    let mut a = a.to_vec();
    let mut x = b.to_vec();
    for k in 0..n {
        let (best, mag) =
            (k..n).map(|i| (i, a[i * n + k].norm())).fold((k, -1.0), |acc, v| if v.1 > acc.1 { v } else { acc });
        if mag < MIN_PIVOT {
            return Err(Error::Singular { pivot: mag, step: k });
        }
        if best != k {
            for j in 0..n {
                a.swap(k * n + j, best * n + j);
            }
            for j in 0..cols {
                x.swap(k * cols + j, best * cols + j);
            }
        }
        let p = a[k * n + k];
        for i in (k + 1)..n {
            let f = a[i * n + k] / p;
            for j in k..n {
                let v = a[k * n + j];
                a[i * n + j] -= f * v;
            }
            for j in 0..cols {
                let v = x[k * cols + j];
                x[i * cols + j] -= f * v;
            }
        }
    }
    for k in (0..n).rev() {
        for j in 0..cols {
            let mut s = x[k * cols + j];
            for l in (k + 1)..n {
                s -= a[k * n + l] * x[l * cols + j];
            }
            x[k * cols + j] = s / a[k * n + k];
        }
    }
    Ok(x)
}

fn matmul(p: usize, q: usize, r: usize, a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); p * r];
    for i in 0..p {
        for l in 0..q {
            let x = a[i * q + l];
            for j in 0..r {
                out[i * r + j] += x * b[l * r + j];
            }
        }
    }
    out
}

/// `log det(I + E)` by `Σ_p (-1)^{p+1} tr(E^p)/p` when `‖E‖_F < 1/2`.
///
/// Keeps full relative accuracy when `det(I + E)` is within rounding of 1,
/// where summing `log` of pivots near 1 would not.
fn log_det_near_identity(n: usize, e: &[Complex64]) -> Option<f64> {
    let frob = libm::sqrt(e.iter().map(|z| z.norm_sqr()).sum::<f64>());
    if frob >= 0.5 {
        return None;
    }
    let mut acc = Neumaier::new();
    let mut power = e.to_vec();
    let mut bound = frob;
    for p in 1..200 {
        let tr: f64 = (0..n).map(|i| power[i * n + i].re).sum();
        let sign = if p % 2 == 1 { 1.0 } else { -1.0 };
        acc.add(sign * tr / p as f64);
        bound *= frob;
        if bound <= 1e-18 * libm::fabs(acc.total()) || bound == 0.0 {
            break;
        }
        power = matmul(n, n, n, &power, e);
    }
    Some(acc.total())
}

/// Factor `det H` as `det B · Π⟨θᵢ,θᵢ⟩ · (1 + r)`.
///
/// With `D = diag Θ`, `N = D^{-1/2} Θ D^{-1/2}`, `Ĉ = D^{-1/2} C` and
/// `K = Ĉ* N⁻¹ Ĉ = C* Θ⁻¹ C`, one has `1 + r = det N · det(I - B⁻¹K)`.
pub fn block_det_factorization(bg: &BlockGram) -> Result<BlockFactorization> {
    let (n, m) = (bg.theta.d, bg.b.d);
    let log_det_b = log_det(&bg.b)?;
    let diag: Vec<f64> = (0..n).map(|i| bg.theta.get(i, i).re).collect();
    let log_theta_product = diag.iter().map(|&t| libm::log(t)).collect::<Neumaier>().total();
    let delta = diag.iter().map(|&t| 1.0 / t).collect::<Neumaier>().total();
    let scale: Vec<f64> = diag.iter().map(|&t| 1.0 / libm::sqrt(t)).collect();
    let mut nrm = vec![Complex64::new(0.0, 0.0); n * n];
    let mut off = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                nrm[i * n + j] = Complex64::new(1.0, 0.0);
            } else {
                off[i * n + j] = bg.theta.get(i, j) * (scale[i] * scale[j]);
                nrm[i * n + j] = off[i * n + j];
            }
        }
    }
    let log_det_n = match log_det_near_identity(n, &off) {
        Some(v) => v,
        None => log_det(&GramMatrix::new(n, nrm.clone())?)?,
    };
    let mut log_det_ratio = 0.0;
    if n > 0 && m > 0 {
        let c_hat: Vec<Complex64> = (0..n * m).map(|idx| bg.cross[idx] * scale[idx / m]).collect();
        let y = solve(n, &nrm, &c_hat, m)?;
        let mut kmat = vec![Complex64::new(0.0, 0.0); m * m];
        for i in 0..m {
            for j in 0..m {
                kmat[i * m + j] = (0..n).map(|l| c_hat[l * m + i].conj() * y[l * m + j]).sum();
            }
        }
        let minus_bk: Vec<Complex64> = solve(m, &bg.b.entries, &kmat, m)?.into_iter().map(|z| -z).collect();
        log_det_ratio = match log_det_near_identity(m, &minus_bk) {
            Some(v) => v,
            None => {
                let mut s = bg.b.entries.clone();
                for (x, kv) in s.iter_mut().zip(&kmat) {
                    *x -= kv;
                }
                for i in 0..m {
                    s[i * m + i].im = 0.0;
                    for j in 0..i {
                        s[i * m + j] = s[j * m + i].conj();
                    }
                }
                log_det(&GramMatrix::new(m, s)?)? - log_det_b
            }
        };
    }
    let log_rel = log_det_n + log_det_ratio;
    Ok(BlockFactorization {
        log_det_h: log_theta_product + log_det_b + log_rel,
        log_det_b,
        log_theta_product,
        delta,
        residual: libm::expm1(log_rel),
    })
}

/// Exponents of the building blocks `2`, `π`, `(2k)!` and `k!` in a monomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Monomial {
    pub two: i64,
    pub pi: i64,
    pub fact_2k: i64,
    pub fact_k: i64,
}

impl Monomial {
    pub fn times(self, o: Self) -> Self {
        Self {
            two: self.two + o.two,
            pi: self.pi + o.pi,
            fact_2k: self.fact_2k + o.fact_2k,
            fact_k: self.fact_k + o.fact_k,
        }
    }

    pub fn inverse(self) -> Self {
        Self { two: -self.two, pi: -self.pi, fact_2k: -self.fact_2k, fact_k: -self.fact_k }
    }

    pub fn is_one(self) -> bool {
        self == Self::default()
    }

    /// Numerical log of the monomial at weight `k`.
    pub fn log_value(self, k: u32) -> f64 {
        let mut acc = Neumaier::new();
        acc.add(self.two as f64 * core::f64::consts::LN_2);
        acc.add(self.pi as f64 * libm::log(core::f64::consts::PI));
        acc.add(self.fact_2k as f64 * log_factorial(2 * k as u64));
        acc.add(self.fact_k as f64 * log_factorial(k as u64));
        acc.total()
    }
}

/// `(2k)! / (2^{k-1} π^{2k} (k!)²)`: the limit constant of the Gram determinant per node.
pub fn gram_node_monomial(k: u32) -> Monomial {
    let k = k as i64;
    Monomial { two: -(k - 1), pi: -2 * k, fact_2k: 1, fact_k: -2 }
}

/// `2^{k+1} (2k)! π^{2k+1}`: the per-node factor in the clutching relation for `E_{k+1}`.
pub fn relation_node_monomial(k: u32) -> Monomial {
    let k = k as i64;
    Monomial { two: k + 1, pi: 2 * k + 1, fact_2k: 1, fact_k: 0 }
}

/// `π (2π²)^{2k} (k!)²`: the inverse constant of the pinched zeta factor.
pub fn pinched_node_monomial(k: u32) -> Monomial {
    let k = k as i64;
    Monomial { two: 2 * k, pi: 1 + 4 * k, fact_2k: 0, fact_k: 2 }
}

/// Per-node ratio of the Gram constant to the clutching factor times the pinched zeta constant.
pub fn degeneration_constant_monomial(k: u32) -> Monomial {
    gram_node_monomial(k).times(relation_node_monomial(k).times(pinched_node_monomial(k).inverse()).inverse())
}

/// The same ratio evaluated from the three constants as computed elsewhere in the crate; equals 1.
pub fn degeneration_constant_identity(k: u32) -> Result<f64> {
    if k == 0 {
        return Err(Error::UnsupportedWeight("the degeneration identity needs k >= 1"));
    }
    let kf = k as f64;
    let mut relation = Neumaier::new();
    relation.add((kf + 1.0) * core::f64::consts::LN_2);
    relation.add(log_factorial(2 * k as u64));
    relation.add((2.0 * kf + 1.0) * libm::log(core::f64::consts::PI));
    let mut acc = Neumaier::new();
    acc.add(node_constant_log(k));
    acc.add(-relation.total());
    acc.add(pinched_constant_log(k));
    Ok(libm::exp(acc.total()))
}

/// Deterministic synthetic Gram family modelling `n` pinching nodes.
///
/// At `L = log(1/|t|)` the θ-diagonal is `const_k L^{2k+1} R(t) (1 + a/L²)`
/// with the per-node constant of [`gram_node_monomial`], `R(t)` the collar
/// trimming factor and `a` a tunable subleading coefficient. Off-diagonal θ
/// entries and cross terms are drawn once from a ChaCha8 stream keyed by `seed`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticFamily {
    pub k: u32,
    pub n_nodes: usize,
    pub seed: u64,
    pub c: f64,
    pub cross_scale: f64,
    pub subleading: f64,
    b_block: GramMatrix,
}

/// One row of a degeneration sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegenerationRow {
    pub log_inv_t: f64,
    pub log_det_h: f64,
    pub log_det_b: f64,
    pub log_theta_product: f64,
    pub delta: f64,
    /// `det H · L^{-n(2k+1)} / (const^n det B)`
    pub ratio: f64,
    pub residual: f64,
}

impl DegenerationRow {
    /// `|r| / δ`, the constant in `|r| ≤ C δ`; zero without nodes.
    pub fn fitted_constant(&self) -> f64 {
        if self.delta == 0.0 {
            0.0
        } else {
            libm::fabs(self.residual) / self.delta
        }
    }
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    // 53 random bits mapped to [-1, 1).
    (rng.next_u64() >> 11) as f64 * libm::ldexp(1.0, -52) - 1.0
}

impl SyntheticFamily {
    pub fn new(k: u32, n_nodes: usize, b_block: GramMatrix, seed: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::UnsupportedWeight("the synthetic family needs k >= 1"));
        }
        log_det(&b_block)?;
        Ok(Self { k, n_nodes, seed, c: 0.1, cross_scale: 1.0, subleading: 0.0, b_block })
    }

    pub fn with_collar_constant(mut self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c < 1.0) {
            return Err(Error::Domain { what: "collar cut-off c must lie in (0, 1)", value: c });
        }
        self.c = c;
        Ok(self)
    }

    pub fn with_cross_scale(mut self, s: f64) -> Self {
        self.cross_scale = s;
        self
    }

    pub fn with_subleading(mut self, a: f64) -> Self {
        self.subleading = a;
        self
    }

    pub fn b_block(&self) -> &GramMatrix {
        &self.b_block
    }

    /// Gram matrix of the family at `L`.
    pub fn block_gram(&self, log_inv_t: f64) -> Result<BlockGram> {
        let (n, m) = (self.n_nodes, self.b_block.d);
        let eps = -libm::log(self.c) / log_inv_t;
        if !(eps > 0.0 && eps < 0.5) {
            return Err(Error::Domain { what: "annulus is empty unless |t| < c²", value: log_inv_t });
        }
        let k = self.k;
        let diag = libm::exp(node_constant_log(k) + (2 * k + 1) as f64 * libm::log(log_inv_t))
            * r_factor(eps, k)
            * (1.0 + self.subleading / (log_inv_t * log_inv_t));
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut theta = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            theta[i * n + i] = Complex64::new(diag, 0.0);
            for j in (i + 1)..n {
                let v = Complex64::new(uniform(&mut rng), 0.0);
                theta[i * n + j] = v;
                theta[j * n + i] = v;
            }
        }
        let cross = (0..n * m).map(|_| Complex64::new(self.cross_scale * uniform(&mut rng), 0.0)).collect();
        BlockGram::new(GramMatrix::new(n, theta)?, self.b_block.clone(), cross)
    }

    pub fn run(&self, log_inv_t: f64) -> Result<DegenerationRow> {
        let f = block_det_factorization(&self.block_gram(log_inv_t)?)?;
        let n = self.n_nodes as f64;
        let k = self.k as f64;
        let mut acc = Neumaier::new();
        acc.add(f.log_det_h);
        acc.add(-n * (2.0 * k + 1.0) * libm::log(log_inv_t));
        acc.add(-n * node_constant_log(self.k));
        acc.add(-f.log_det_b);
        Ok(DegenerationRow {
            log_inv_t,
            log_det_h: f.log_det_h,
            log_det_b: f.log_det_b,
            log_theta_product: f.log_theta_product,
            delta: f.delta,
            ratio: libm::exp(acc.total()),
            residual: f.residual,
        })
    }

    pub fn sweep(&self, grid: &[f64]) -> Result<Vec<DegenerationRow>> {
        grid.iter().map(|&l| self.run(l)).collect()
    }
}
