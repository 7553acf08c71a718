use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// `n × d′` binary matrix, one perturbation per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskMatrix {
    rows: usize,
    cols: usize,
    bits: Vec<bool>,
}

impl MaskMatrix {
    pub fn from_rows(rows: Vec<Vec<bool>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if cols == 0 || rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch(
                "mask rows must be nonempty and of equal length".into(),
            ));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            bits: rows.into_iter().flatten().collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[bool] {
        &self.bits[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl ExactSizeIterator<Item = &[bool]> {
        self.bits.chunks_exact(self.cols)
    }

    /// Mean of each column over rows `from..`.
    pub fn column_means(&self, from: usize) -> Vec<f64> {
        let mut sums = vec![0usize; self.cols];
        for row in self.iter_rows().skip(from) {
            for (s, &b) in sums.iter_mut().zip(row) {
                *s += b as usize;
            }
        }
        let count = self.rows.saturating_sub(from).max(1) as f64;
        sums.into_iter().map(|s| s as f64 / count).collect()
    }
}

/// Row 0 is all ones (the unperturbed input); every other bit is an
/// independent fair coin from a ChaCha8 stream seeded with `seed`, so the
/// matrix is identical on every platform.
pub fn sample_masks(num_components: usize, num_samples: usize, seed: u64) -> Result<MaskMatrix> {
    if num_components == 0 {
        return Err(Error::arg("components", "d' must be at least 1"));
    }
    if num_samples < 2 {
        return Err(Error::arg("samples", format!("{num_samples} < 2")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bits = Vec::with_capacity(num_components * num_samples);
    bits.extend(std::iter::repeat_n(true, num_components));
    for _ in 1..num_samples {
        let mut word = 0u64;
        for j in 0..num_components {
            if j % 64 == 0 {
                word = rng.next_u64();
            }
            bits.push(word & 1 == 1);
            word >>= 1;
        }
    }
    Ok(MaskMatrix {
        rows: num_samples,
        cols: num_components,
        bits,
    })
}

/// Every one of the `2^d′` masks, all-ones first, the rest in increasing
/// binary order (bit `j` of the counter is component `j`).
pub fn enumerate_masks(num_components: usize) -> Result<MaskMatrix> {
    if num_components == 0 || num_components > 20 {
        return Err(Error::arg(
            "components",
            format!("exhaustive enumeration needs 1 <= d' <= 20, got {num_components}"),
        ));
    }
    let full = (1u32 << num_components) - 1;
    let mut bits = Vec::with_capacity(num_components << num_components);
    for m in std::iter::once(full).chain(0..full) {
        bits.extend((0..num_components).map(|j| m >> j & 1 == 1));
    }
    Ok(MaskMatrix {
        rows: 1 << num_components,
        cols: num_components,
        bits,
    })
}
