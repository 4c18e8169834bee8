//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! Cells are bisected in order of decreasing error estimate; the final sum is
//! taken over cells sorted by their left endpoint, so the result is a pure
//! function of the integrand and the settings.

#![allow(clippy::excessive_precision)]

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::sum::Neumaier;
use crate::{Error, Result};

// Kronrod abscissae on [-1, 1] (positive half, descending), QUADPACK qk15.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the 7-point rule (nodes are XGK[1], XGK[3], XGK[5], XGK[7]).
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Settings for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct QuadSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_cells: usize,
}

impl QuadSettings {
    pub fn relative(rel_tol: f64) -> Self {
        Self { rel_tol, abs_tol: 0.0, max_cells: 20_000 }
    }

    pub fn with_abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }

    pub fn with_max_cells(mut self, max_cells: usize) -> Self {
        self.max_cells = max_cells;
        self
    }
}

/// Value, error estimate and number of cells of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub cells: usize,
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Cell {}
impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        // Largest error first; ties broken by position for determinism.
        self.error.total_cmp(&other.error).then_with(|| other.a.total_cmp(&self.a))
    }
}

/// Single 15-point Kronrod evaluation with the embedded 7-point Gauss error.
pub fn gauss_kronrod_15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut lo = [0.0; 7];
    let mut hi = [0.0; 7];
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs_sum = libm::fabs(kronrod);
    for j in 0..7 {
        let x = half * XGK[j];
        lo[j] = f(center - x);
        hi[j] = f(center + x);
        kronrod += WGK[j] * (lo[j] + hi[j]);
        abs_sum += WGK[j] * (libm::fabs(lo[j]) + libm::fabs(hi[j]));
        if j % 2 == 1 {
            gauss += WG[j / 2] * (lo[j] + hi[j]);
        }
    }
    let value = kronrod * half;
    let mut err = libm::fabs((kronrod - gauss) * half);
    // QUADPACK's rescaling of the raw Gauss/Kronrod difference.
    let mean = 0.5 * kronrod;
    let mut asc = WGK[7] * libm::fabs(fc - mean);
    for j in 0..7 {
        asc += WGK[j] * (libm::fabs(lo[j] - mean) + libm::fabs(hi[j] - mean));
    }
    let asc = asc * libm::fabs(half);
    if asc != 0.0 && err != 0.0 {
        let scale = libm::pow(200.0 * err / asc, 1.5);
        err = if scale < 1.0 { asc * scale } else { asc };
    }
    let resabs = abs_sum * libm::fabs(half);
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (value, err)
}

/// Integrate `f` over `[a, b]` adaptively.
///
/// Fails with [`Error::NonConvergence`] if the requested accuracy is not met
/// within `settings.max_cells` cells.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, settings: QuadSettings) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult { value: 0.0, error: 0.0, cells: 0 });
    }
    let (v, e) = gauss_kronrod_15(&mut f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Cell { a, b, value: v, error: e });
    let mut total = v;
    let mut total_err = e;
    loop {
        let target = settings.abs_tol.max(settings.rel_tol * libm::fabs(total));
        if total_err <= target {
            break;
        }
        if heap.len() >= settings.max_cells {
            return Err(Error::NonConvergence { estimate: total, error: total_err, cells: heap.len() });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a.min(worst.b) || mid >= worst.a.max(worst.b) {
            // Cell cannot be split further in floating point.
            return Err(Error::NonConvergence { estimate: total, error: total_err, cells: heap.len() + 1 });
        }
        let (v1, e1) = gauss_kronrod_15(&mut f, worst.a, mid);
        let (v2, e2) = gauss_kronrod_15(&mut f, mid, worst.b);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Cell { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Cell { a: mid, b: worst.b, value: v2, error: e2 });
    }
    // Re-sum in a fixed spatial order.
    let mut cells: Vec<Cell> = heap.into_vec();
    cells.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value = cells.iter().map(|c| c.value).collect::<Neumaier>().total();
    let error = cells.iter().map(|c| c.error).collect::<Neumaier>().total();
    Ok(QuadResult { value, error, cells: cells.len() })
}

/// Map `[0, 1]` onto `[a, b]` through the cubic `3τ² − 2τ³`, whose vanishing
/// derivative at both ends absorbs inverse-square-root endpoint singularities.
pub fn integrate_endpoint_singular<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    settings: QuadSettings,
) -> Result<QuadResult> {
    let width = b - a;
    integrate(
        |tau| {
            let x = a + width * tau * tau * (3.0 - 2.0 * tau);
            let jac = 6.0 * tau * (1.0 - tau) * width;
            if jac == 0.0 {
                0.0
            } else {
                f(x) * jac
            }
        },
        0.0,
        1.0,
        settings,
    )
}
