//! Compensated summation.
//!
//! All metric reductions go through [`NeumaierSum`] so that results do not
//! depend on record order beyond rounding of the final value, and through
//! [`ChunkedSum`] so that the sequential and the parallel reductions visit the
//! data in the same fixed-size chunks and produce bit-identical results.

use std::ops::AddAssign;

/// Records per reduction chunk. Independent of the thread count.
pub const CHUNK: usize = 4096;

/// Kahan-Babuska-Neumaier summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.comp += (self.sum - t) + value;
        } else {
            self.comp += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl AddAssign<f64> for NeumaierSum {
    fn add_assign(&mut self, rhs: f64) {
        self.add(rhs);
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = NeumaierSum::new();
        for v in iter {
            s.add(v);
        }
        s
    }
}

/// Compensated sum of a slice.
pub fn sum(values: &[f64]) -> f64 {
    values.iter().copied().collect::<NeumaierSum>().value()
}

/// Two-level compensated sum: values are summed inside chunks of [`CHUNK`]
/// consecutive items, and chunk totals are summed in chunk order.
#[derive(Debug, Clone, Default)]
pub struct ChunkedSum {
    outer: NeumaierSum,
    inner: NeumaierSum,
    filled: usize,
}

impl ChunkedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        self.inner.add(value);
        self.filled += 1;
        if self.filled == CHUNK {
            self.flush();
        }
    }

    /// Adds a completed chunk total; only valid on a chunk boundary.
    pub fn add_chunk(&mut self, chunk_total: f64) {
        debug_assert_eq!(self.filled, 0);
        self.outer.add(chunk_total);
    }

    fn flush(&mut self) {
        self.outer.add(self.inner.value());
        self.inner = NeumaierSum::new();
        self.filled = 0;
    }

    pub fn value(&self) -> f64 {
        let mut outer = self.outer;
        if self.filled > 0 {
            outer.add(self.inner.value());
        }
        outer.value()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_small_terms() {
        let mut s = NeumaierSum::new();
        s += 1.0;
        s += 1e100;
        s += 1.0;
        s += -1e100;
        assert_eq!(s.value(), 2.0);
    }

    #[test]
    fn chunked_matches_chunk_totals() {
        let values: Vec<f64> = (0..(3 * CHUNK + 17)).map(|i| 1.0 / (i as f64 + 1.0)).collect();
        let mut seq = ChunkedSum::new();
        values.iter().for_each(|&v| seq.add(v));

        let mut by_chunk = ChunkedSum::new();
        for chunk in values.chunks(CHUNK) {
            by_chunk.add_chunk(sum(chunk));
        }
        assert_eq!(seq.value().to_bits(), by_chunk.value().to_bits());
    }
}
