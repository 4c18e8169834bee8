//! Primitive closed-geodesic classes of free Fuchsian groups.
//!
//! Enumeration is a depth-first walk over freely reduced words, split into
//! subtrees by first letter. A prefix `w` is abandoned once the displacement
//! `d(p, w·p)` of a well-placed basepoint `p` exceeds `L + 2D`, where `L` is the
//! cutoff and `D` the largest generator displacement (or a caller margin).
//! Every cyclically reduced hyperbolic word found is canonicalized, filtered
//! for primitivity and deduplicated on its canonical word, so the output does
//! not depend on the traversal order or on how subtrees are distributed.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;

use sha2::{Digest, Sha256};

use crate::hyperbolic::{
    classify, mul_entries, trace_to_length, Classification, MoebiusMap, SurfaceSignature, PARABOLIC_TOL,
};
use crate::scalar::{Dd, Scalar};
use crate::{Error, Result};

/// Largest cutoff enumerated in plain `f64`.
pub const F64_CUTOFF_LIMIT: f64 = 12.0;

/// Tolerance for renormalizing near-unimodular generator input.
const DET_TOL: f64 = 1e-9;

/// Two distinct classes whose traces differ by less than this are audited.
pub const TRACE_COLLISION_TOL: f64 = 1e-9;

/// Generators of a free Fuchsian group together with the surface they present.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupPresentation {
    generators: Vec<MoebiusMap>,
    signature: SurfaceSignature,
    label: String,
}

impl GroupPresentation {
    /// Validate generator count, determinants and torsion-freeness.
    ///
    /// Generator `i` (0-based) is labelled by the letter `i + 1`.
    pub fn new(label: &str, signature: SurfaceSignature, generators: &[[f64; 4]]) -> Result<Self> {
        let expected = signature.free_rank();
        if generators.len() != expected {
            return Err(Error::InvalidGroup(alloc::format!(
                "signature ({}, {}) needs {} free generators, got {}",
                signature.g,
                signature.n,
                expected,
                generators.len()
            )));
        }
        let mut gens = Vec::with_capacity(generators.len());
        for (i, &[a, b, c, d]) in generators.iter().enumerate() {
            if ![a, b, c, d].iter().all(|x| x.is_finite()) {
                return Err(Error::InvalidGroup(alloc::format!("generator {} has non-finite entries", i + 1)));
            }
            let det = a * d - b * c;
            if !(libm::fabs(det - 1.0) <= DET_TOL) {
                return Err(Error::InvalidGroup(alloc::format!(
                    "generator {} has determinant {det}, expected 1",
                    i + 1
                )));
            }
            let m = MoebiusMap::normalized(a, b, c, d)?.with_word(alloc::vec![i as i32 + 1]);
            match classify(&m) {
                Classification::Elliptic => {
                    return Err(Error::InvalidGroup(alloc::format!(
                        "generator {} is elliptic (|trace| = {})",
                        i + 1,
                        m.abs_trace()
                    )))
                }
                Classification::Identity => {
                    return Err(Error::InvalidGroup(alloc::format!("generator {} is the identity", i + 1)))
                }
                _ => {}
            }
            gens.push(m);
        }
        Ok(Self { generators: gens, signature, label: label.to_string() })
    }

    /// The principal congruence subgroup Γ(2), a thrice-punctured sphere.
    pub fn gamma2() -> Self {
        Self::new("Gamma(2)", SurfaceSignature::new(0, 3), &[[1.0, 2.0, 0.0, 1.0], [1.0, 0.0, 2.0, 1.0]])
            .expect("Γ(2) generators are valid")
    }

    /// Cyclic group generated by a hyperbolic element of translation length `length`.
    pub fn cyclic(length: f64) -> Result<Self> {
        let lam = libm::exp(0.5 * length);
        Self::new("cyclic", SurfaceSignature::new(0, 2), &[[lam, 0.0, 0.0, 1.0 / lam]])
    }

    pub fn generators(&self) -> &[MoebiusMap] {
        &self.generators
    }

    pub fn signature(&self) -> SurfaceSignature {
        self.signature
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    /// Generator entries, row-major.
    pub fn generator_entries(&self) -> Vec<[f64; 4]> {
        self.generators.iter().map(|g| g.entries()).collect()
    }

    /// Replace every generator `g` by `h g h⁻¹`.
    pub fn conjugated(&self, h: &MoebiusMap) -> Result<Self> {
        let entries: Vec<[f64; 4]> = self.generators.iter().map(|g| g.conjugate_by(h).entries()).collect();
        Self::new(&self.label, self.signature, &entries)
    }

    /// SHA-256 over the label, signature and the bit patterns of all entries.
    pub fn fingerprint(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(b"hypspec-group-v1");
        h.update((self.label.len() as u64).to_le_bytes());
        h.update(self.label.as_bytes());
        h.update(self.signature.g.to_le_bytes());
        h.update(self.signature.n.to_le_bytes());
        h.update((self.generators.len() as u64).to_le_bytes());
        for g in &self.generators {
            for x in g.entries() {
                h.update(x.to_bits().to_le_bytes());
            }
        }
        h.finalize().into()
    }

    /// Evaluate a word in the generators.
    pub fn evaluate<S: Scalar>(&self, word: &[i32]) -> MoebiusMap<S> {
        let gens: Vec<MoebiusMap<S>> = self.generators.iter().map(|g| g.cast()).collect();
        let mut m = MoebiusMap::<S>::identity();
        for &x in word {
            let g = &gens[x.unsigned_abs() as usize - 1];
            m = if x > 0 { m.compose(g) } else { m.compose(&g.inverse()) };
        }
        m.with_word(word.to_vec())
    }
}

/// A primitive non-oriented closed-geodesic class.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicClass {
    pub length: f64,
    pub abs_trace: f64,
    /// Canonical cyclic word.
    pub word: Vec<i32>,
    pub multiplicity: u32,
}

impl GeodesicClass {
    /// Class of a given length, with its trace derived from the length.
    pub fn from_length(length: f64, word: Vec<i32>) -> Self {
        Self { length, abs_trace: crate::hyperbolic::length_to_trace(length), word, multiplicity: 1 }
    }
}

/// How far the completeness bound of a spectrum can be trusted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Completeness {
    /// Provably every class below `complete_below` is present.
    Certified,
    /// The pruning radius is a heuristic for groups of rank ≥ 2.
    Heuristic,
}

impl Completeness {
    pub fn as_str(self) -> &'static str {
        match self {
            Completeness::Certified => "certified",
            Completeness::Heuristic => "heuristic",
        }
    }
}

impl core::str::FromStr for Completeness {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "certified" => Ok(Completeness::Certified),
            "heuristic" => Ok(Completeness::Heuristic),
            other => Err(Error::InvalidGroup(alloc::format!("unknown completeness flag {other:?}"))),
        }
    }
}

/// Sorted primitive classes of length at most `cutoff`.
#[derive(Debug, Clone, PartialEq)]
pub struct LengthSpectrum {
    pub classes: Vec<GeodesicClass>,
    pub cutoff: f64,
    pub group_fingerprint: [u8; 32],
    /// Every class shorter than this is present (subject to `completeness`).
    pub complete_below: f64,
    pub completeness: Completeness,
    /// Extra pruning radius beyond the cutoff.
    pub margin: f64,
    /// Pairs of distinct classes with traces closer than [`TRACE_COLLISION_TOL`].
    pub trace_collisions: usize,
}

impl LengthSpectrum {
    /// Sort and validate a list of classes.
    pub fn from_classes(
        mut classes: Vec<GeodesicClass>,
        cutoff: f64,
        group_fingerprint: [u8; 32],
        complete_below: f64,
        completeness: Completeness,
    ) -> Result<Self> {
        classes.sort_by(class_order);
        for w in classes.windows(2) {
            if w[0].word == w[1].word {
                return Err(Error::InvalidGroup(alloc::format!("duplicate class {:?}", w[0].word)));
            }
        }
        if let Some(c) = classes.iter().find(|c| !(c.length > 0.0 && c.length <= cutoff)) {
            return Err(Error::Domain { what: "class length beyond cutoff", value: c.length });
        }
        let trace_collisions = count_trace_collisions(&classes);
        Ok(Self { classes, cutoff, group_fingerprint, complete_below, completeness, margin: 0.0, trace_collisions })
    }

    pub fn empty(cutoff: f64, group_fingerprint: [u8; 32]) -> Self {
        Self {
            classes: Vec::new(),
            cutoff,
            group_fingerprint,
            complete_below: cutoff,
            completeness: Completeness::Certified,
            margin: 0.0,
            trace_collisions: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// Length of the shortest class.
    pub fn systole(&self) -> Option<f64> {
        self.classes.first().map(|c| c.length)
    }

    /// True when enumeration stopped before the requested cutoff.
    pub fn is_partial(&self) -> bool {
        self.complete_below < self.cutoff
    }

    /// Classes of length at most `cutoff`.
    pub fn truncated(&self, cutoff: f64) -> Self {
        let mut out = self.clone();
        out.classes.retain(|c| c.length <= cutoff);
        out.cutoff = out.cutoff.min(cutoff);
        out.complete_below = out.complete_below.min(cutoff);
        out.trace_collisions = count_trace_collisions(&out.classes);
        out
    }
}

fn letter_key(a: i32) -> (u32, bool) {
    (a.unsigned_abs(), a < 0)
}

/// Lexicographic order on words with letters ordered `1 < -1 < 2 < -2 < …`.
pub fn word_order(x: &[i32], y: &[i32]) -> Ordering {
    for (&a, &b) in x.iter().zip(y) {
        match letter_key(a).cmp(&letter_key(b)) {
            Ordering::Equal => {}
            ord => return ord,
        }
    }
    x.len().cmp(&y.len())
}

/// Lengths are compared on a grid of `2^-36` so that classes of equal length
/// whose computed values differ by rounding are ordered by their words.
fn length_key(l: f64) -> i64 {
    libm::round(libm::ldexp(l, 36)) as i64
}

fn class_order(x: &GeodesicClass, y: &GeodesicClass) -> Ordering {
    length_key(x.length).cmp(&length_key(y.length)).then_with(|| word_order(&x.word, &y.word))
}

fn count_trace_collisions(classes: &[GeodesicClass]) -> usize {
    let mut traces: Vec<f64> = classes.iter().map(|c| c.abs_trace).collect();
    traces.sort_by(f64::total_cmp);
    traces.windows(2).filter(|w| w[1] - w[0] < TRACE_COLLISION_TOL).count()
}

pub use crate::hyperbolic::free_reduce;

/// Canonical representative of the non-oriented conjugacy class of `word`:
/// the least word among all rotations of its cyclic reduction and of the
/// inverse.
pub fn cyclic_canonicalize(word: &[i32]) -> Result<Vec<i32>> {
    let mut w = free_reduce(word);
    while w.len() >= 2 && w[0] == -w[w.len() - 1] {
        w.pop();
        w.remove(0);
    }
    if w.is_empty() {
        return Err(Error::EmptyWord);
    }
    let inv: Vec<i32> = w.iter().rev().map(|&a| -a).collect();
    let n = w.len();
    let mut best: Option<Vec<i32>> = None;
    let mut candidate = Vec::with_capacity(n);
    for base in [&w, &inv] {
        for r in 0..n {
            candidate.clear();
            candidate.extend_from_slice(&base[r..]);
            candidate.extend_from_slice(&base[..r]);
            if best.as_ref().map_or(true, |b| word_order(&candidate, b) == Ordering::Less) {
                best = Some(candidate.clone());
            }
        }
    }
    Ok(best.expect("non-empty word has a rotation"))
}

/// True unless the word is a proper power of a shorter word.
pub fn is_primitive(word: &[i32]) -> bool {
    let n = word.len();
    (1..n).filter(|d| n % d == 0).all(|d| (d..n).any(|i| word[i] != word[i - d]))
}

/// Limits for [`enumerate_spectrum`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnumerationBudget {
    /// Total number of word-tree nodes visited across all subtrees.
    pub max_nodes: u64,
    /// Pruning margin `D`; defaults to the largest generator displacement.
    pub margin: Option<f64>,
}

impl Default for EnumerationBudget {
    fn default() -> Self {
        Self { max_nodes: 50_000_000, margin: None }
    }
}

/// Result of walking one first-letter subtree.
#[derive(Debug, Clone, Default)]
pub struct SubtreeOutcome {
    /// Canonical primitive words of hyperbolic elements found.
    pub words: BTreeSet<Vec<i32>>,
    pub nodes: u64,
    pub exhausted: bool,
}

/// Precomputed state shared by all subtree walks.
#[derive(Debug, Clone)]
pub struct Enumerator<S: Scalar> {
    /// Generators conjugated to the basepoint, indexed by `letter_index`.
    letters: Vec<(i32, [S; 4])>,
    prune_cosh: f64,
    max_abs_trace: f64,
    node_limit: u64,
}

impl<S: Scalar> Enumerator<S> {
    /// First letters, one per subtree.
    pub fn first_letters(&self) -> Vec<i32> {
        self.letters.iter().map(|&(x, _)| x).collect()
    }

    /// Walk the subtree of words starting with `first`.
    pub fn run_subtree(&self, first: i32) -> SubtreeOutcome {
        let mut out = SubtreeOutcome::default();
        let Some(&(_, g)) = self.letters.iter().find(|(x, _)| *x == first) else {
            return out;
        };
        let mut word = alloc::vec![first];
        self.visit(g, &mut word, &mut out);
        out
    }

    fn visit(&self, m: [S; 4], word: &mut Vec<i32>, out: &mut SubtreeOutcome) {
        out.nodes += 1;
        if out.nodes > self.node_limit {
            out.exhausted = true;
            return;
        }
        let first = word[0];
        let last = *word.last().expect("word is non-empty");
        if first != -last {
            let t = libm::fabs((m[0] + m[3]).to_f64());
            if t > 2.0 + PARABOLIC_TOL && t <= self.max_abs_trace {
                if let Ok(c) = cyclic_canonicalize(word) {
                    if is_primitive(&c) {
                        out.words.insert(c);
                    }
                }
            }
        }
        for &(x, g) in &self.letters {
            if x == -last {
                continue;
            }
            let n = mul_entries(m, g);
            let frob = n.iter().map(|&e| {
                let e = e.to_f64();
                e * e
            });
            if 0.5 * frob.sum::<f64>() > self.prune_cosh {
                continue;
            }
            word.push(x);
            self.visit(n, word, out);
            word.pop();
            if out.exhausted {
                return;
            }
        }
    }
}

/// Strategy for walking the first-letter subtrees; outcomes must be returned
/// in the order of `firsts`.
pub trait SubtreeRunner {
    fn run<S: Scalar>(&self, enumerator: &Enumerator<S>, firsts: &[i32]) -> Vec<SubtreeOutcome>;
}

/// Walk the subtrees one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct SequentialRunner;

impl SubtreeRunner for SequentialRunner {
    fn run<S: Scalar>(&self, enumerator: &Enumerator<S>, firsts: &[i32]) -> Vec<SubtreeOutcome> {
        firsts.iter().map(|&x| enumerator.run_subtree(x)).collect()
    }
}

/// `cosh d(q, g q)` for `q = x + i y`, via the Frobenius norm of the conjugate.
fn displacement_cosh(g: &[f64; 4], x: f64, y: f64) -> f64 {
    let c = conjugate_to_basepoint(*g, x, y);
    0.5 * c.iter().map(|e| e * e).sum::<f64>()
}

/// `P⁻¹ g P` with `P = [[√y, x/√y], [0, 1/√y]]`, which maps `i` to `x + iy`.
fn conjugate_to_basepoint<S: Scalar>(g: [S; 4], x: f64, y: f64) -> [S; 4] {
    let sy = S::from_f64(y).sqrt();
    let xs = S::from_f64(x);
    let p = [sy, xs / sy, S::ZERO, S::ONE / sy];
    let p_inv = [S::ONE / sy, S::ZERO - xs / sy, S::ZERO, sy];
    mul_entries(mul_entries(p_inv, g), p)
}

/// Basepoint `(x, y)` minimizing the summed generator displacement, found by
/// a deterministic pattern search in `(x, log y)` starting at `i`.
pub fn basepoint(grp: &GroupPresentation) -> (f64, f64) {
    let gens: Vec<[f64; 4]> = grp.generator_entries();
    let cost = |x: f64, u: f64| gens.iter().map(|g| displacement_cosh(g, x, libm::exp(u))).sum::<f64>();
    let (mut x, mut u) = (0.0, 0.0);
    let mut best = cost(x, u);
    let mut step = 0.5;
    while step > 1e-7 {
        let mut moved = false;
        for (dx, du) in [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)] {
            let c = cost(x + dx, u + du);
            if c < best {
                best = c;
                x += dx;
                u += du;
                moved = true;
                break;
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    (x, libm::exp(u))
}

impl<S: Scalar> Enumerator<S> {
    pub fn new(grp: &GroupPresentation, cutoff: f64, budget: &EnumerationBudget) -> (Self, f64) {
        let (x, y) = basepoint(grp);
        let mut letters = Vec::with_capacity(2 * grp.rank());
        let mut max_disp: f64 = 0.0;
        for (i, g) in grp.generators().iter().enumerate() {
            let e = g.entries();
            max_disp = max_disp.max(libm::acosh(displacement_cosh(&e, x, y).max(1.0)));
            let gs = e.map(S::from_f64);
            let inv = [gs[3], S::ZERO - gs[1], S::ZERO - gs[2], gs[0]];
            letters.push((i as i32 + 1, conjugate_to_basepoint(gs, x, y)));
            letters.push((-(i as i32 + 1), conjugate_to_basepoint(inv, x, y)));
        }
        let margin = budget.margin.unwrap_or(max_disp);
        let enumerator = Self {
            letters,
            prune_cosh: libm::cosh(cutoff + 2.0 * margin),
            max_abs_trace: 2.0 * libm::cosh(0.5 * cutoff) * (1.0 + 1e-12),
            node_limit: budget.max_nodes,
        };
        (enumerator, margin)
    }
}

/// Enumerate with the scalar chosen from the cutoff: `f64` up to
/// [`F64_CUTOFF_LIMIT`], double-double above.
pub fn enumerate_spectrum(grp: &GroupPresentation, cutoff: f64, budget: &EnumerationBudget) -> Result<LengthSpectrum> {
    enumerate_spectrum_with(grp, cutoff, budget, &SequentialRunner)
}

pub fn enumerate_spectrum_with<R: SubtreeRunner>(
    grp: &GroupPresentation,
    cutoff: f64,
    budget: &EnumerationBudget,
    runner: &R,
) -> Result<LengthSpectrum> {
    if cutoff > F64_CUTOFF_LIMIT {
        enumerate_spectrum_in::<Dd, R>(grp, cutoff, budget, runner)
    } else {
        enumerate_spectrum_in::<f64, R>(grp, cutoff, budget, runner)
    }
}

/// Enumerate in a fixed scalar type. Plain `f64` refuses cutoffs above
/// [`F64_CUTOFF_LIMIT`], where long traces lose the digits that separate
/// neighbouring classes.
pub fn enumerate_spectrum_in<S: Scalar, R: SubtreeRunner>(
    grp: &GroupPresentation,
    cutoff: f64,
    budget: &EnumerationBudget,
    runner: &R,
) -> Result<LengthSpectrum> {
    if !(cutoff > 0.0) || !cutoff.is_finite() {
        return Err(Error::Domain { what: "spectrum cutoff", value: cutoff });
    }
    if S::NAME == <f64 as Scalar>::NAME && cutoff > F64_CUTOFF_LIMIT {
        return Err(Error::PrecisionRequired { cutoff, limit: F64_CUTOFF_LIMIT });
    }
    match walk::<S, R>(grp, cutoff, budget, runner) {
        Some(spec) => Ok(spec),
        None => {
            // Largest integer-stepped cutoff that fits in the budget.
            let mut lower = libm::ceil(cutoff) - 1.0;
            while lower > 0.0 {
                if let Some(mut partial) = walk::<S, R>(grp, lower, budget, runner) {
                    log::warn!("node budget exhausted at cutoff {cutoff}; complete below {lower}");
                    partial.cutoff = cutoff;
                    return Err(Error::BudgetExhausted(alloc::boxed::Box::new(partial)));
                }
                lower -= 1.0;
            }
            let mut partial = LengthSpectrum::empty(cutoff, grp.fingerprint());
            partial.complete_below = 0.0;
            Err(Error::BudgetExhausted(alloc::boxed::Box::new(partial)))
        }
    }
}

fn walk<S: Scalar, R: SubtreeRunner>(
    grp: &GroupPresentation,
    cutoff: f64,
    budget: &EnumerationBudget,
    runner: &R,
) -> Option<LengthSpectrum> {
    let (enumerator, margin) = Enumerator::<S>::new(grp, cutoff, budget);
    let outcomes = runner.run(&enumerator, &enumerator.first_letters());
    let nodes: u64 = outcomes.iter().map(|o| o.nodes).sum();
    if outcomes.iter().any(|o| o.exhausted) || nodes > budget.max_nodes {
        return None;
    }
    let mut words = BTreeSet::new();
    for o in outcomes {
        words.extend(o.words);
    }
    // Traces are recomputed from the untouched generators so that they are a
    // function of the canonical word alone.
    let mut by_word: BTreeMap<Vec<i32>, (f64, f64)> = BTreeMap::new();
    for w in words {
        let t = libm::fabs(grp.evaluate::<S>(&w).trace().to_f64());
        if let Ok(l) = trace_to_length(t) {
            if l <= cutoff {
                by_word.insert(w, (l, t));
            }
        }
    }
    let classes: Vec<GeodesicClass> = by_word
        .into_iter()
        .map(|(word, (length, abs_trace))| GeodesicClass { length, abs_trace, word, multiplicity: 1 })
        .collect();
    let completeness = if grp.rank() <= 1 { Completeness::Certified } else { Completeness::Heuristic };
    let mut spec = LengthSpectrum::from_classes(classes, cutoff, grp.fingerprint(), cutoff, completeness).ok()?;
    spec.margin = margin;
    log::debug!(
        "enumerated {} classes below {cutoff} ({} nodes, {} scalar, {} trace collisions)",
        spec.len(),
        nodes,
        S::NAME,
        spec.trace_collisions
    );
    Some(spec)
}
