//! Compensated summation.
//!
//! All long sums in the crate go through [`Neumaier`] so that results do not
//! depend on how callers partition work, only on the order of the terms.

/// Kahan–Babuška–Neumaier accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub const fn new() -> Self {
        Self { sum: 0.0, comp: 0.0 }
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if libm::fabs(self.sum) >= libm::fabs(x) {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

impl core::iter::FromIterator<f64> for Neumaier {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Neumaier::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated sum of an iterator, in iteration order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    terms.into_iter().collect::<Neumaier>().total()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancelled_small_terms() {
        let terms = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(compensated_sum(terms), 2.0);
        let naive: f64 = terms.iter().sum();
        assert_eq!(naive, 0.0);
    }

    #[test]
    fn harmonic_prefix_matches_pairwise_reference() {
        let n = 100_000;
        let s = compensated_sum((1..=n).map(|k| 1.0 / k as f64));
        // H_n = ln n + gamma + 1/(2n) - 1/(12 n^2) + ...
        let gamma = 0.577_215_664_901_532_9;
        let nf = n as f64;
        let reference = nf.ln() + gamma + 0.5 / nf - 1.0 / (12.0 * nf * nf);
        assert!((s - reference).abs() < 1e-14);
    }
}
