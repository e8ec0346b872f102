//! Sparse fixed-width histograms for density estimation of sampled
//! series values.
//!
//! Bins are half-open `[i*w, (i+1)*w)` keyed by the signed bin index `i`,
//! stored sparsely (sample supports here are narrow slivers of the line,
//! but far from the origin). Iteration is always in ascending bin order,
//! so emitted tables are deterministic.

use crate::error::{Error, Result};
use crate::numerics::CompensatedSum;
use std::collections::BTreeMap;

/// A sparse histogram with fixed bin width.
#[derive(Debug, Clone)]
pub struct Histogram {
    bin_width: f64,
    counts: BTreeMap<i64, u64>,
    total: u64,
}

/// One bin of a normalized histogram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityRow {
    /// Left edge of the bin.
    pub bin_left: f64,
    /// Raw count.
    pub count: u64,
    /// Normalized density: `count / (total * bin_width)`.
    pub density: f64,
}

impl Histogram {
    /// Creates an empty histogram.
    ///
    /// # Errors
    ///
    /// `Error::Domain` unless `bin_width` is finite and positive.
    pub fn new(bin_width: f64) -> Result<Histogram> {
        if !(bin_width > 0.0) || !bin_width.is_finite() {
            return Err(Error::Domain(format!(
                "bin width must be finite and > 0, got {bin_width}"
            )));
        }
        Ok(Histogram {
            bin_width,
            counts: BTreeMap::new(),
            total: 0,
        })
    }

    /// Bin width.
    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    /// Total observations.
    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of nonempty bins.
    pub fn nonempty_bins(&self) -> usize {
        self.counts.len()
    }

    /// Adds one observation.
    ///
    /// # Errors
    ///
    /// `Error::Domain` on a non-finite observation.
    pub fn add(&mut self, x: f64) -> Result<()> {
        if !x.is_finite() {
            return Err(Error::Domain(format!("non-finite observation {x}")));
        }
        let idx = (x / self.bin_width).floor() as i64;
        *self.counts.entry(idx).or_insert(0) += 1;
        self.total += 1;
        Ok(())
    }

    /// Adds a batch of observations.
    ///
    /// # Errors
    ///
    /// `Error::Domain` on the first non-finite observation (prior
    /// observations remain counted).
    pub fn add_all<'a>(&mut self, xs: impl IntoIterator<Item = &'a f64>) -> Result<()> {
        for &x in xs {
            self.add(x)?;
        }
        Ok(())
    }

    /// Merges another histogram of the same bin width into this one.
    ///
    /// # Errors
    ///
    /// `Error::Domain` if the widths differ.
    pub fn merge(&mut self, other: &Histogram) -> Result<()> {
        if self.bin_width != other.bin_width {
            return Err(Error::Domain(format!(
                "bin widths differ: {} vs {}",
                self.bin_width, other.bin_width
            )));
        }
        for (&idx, &c) in &other.counts {
            *self.counts.entry(idx).or_insert(0) += c;
        }
        self.total += other.total;
        Ok(())
    }

    /// Normalized rows in ascending bin order (nonempty bins only).
    pub fn density_rows(&self) -> Vec<DensityRow> {
        let norm = self.total as f64 * self.bin_width;
        self.counts
            .iter()
            .map(|(&idx, &count)| DensityRow {
                bin_left: idx as f64 * self.bin_width,
                count,
                density: count as f64 / norm,
            })
            .collect()
    }

    /// Left edge of the first nonempty bin.
    pub fn support_start(&self) -> Option<f64> {
        self.counts
            .keys()
            .next()
            .map(|&idx| idx as f64 * self.bin_width)
    }

    /// Largest bin density.
    pub fn max_density(&self) -> Option<f64> {
        let norm = self.total as f64 * self.bin_width;
        self.counts
            .values()
            .max()
            .map(|&c| c as f64 / norm)
    }

    /// `sum density * bin_width` over all bins — 1 up to rounding for any
    /// nonempty histogram, by construction; computed compensated so the
    /// check is meaningful.
    pub fn integral(&self) -> f64 {
        let mut acc = CompensatedSum::new();
        for row in self.density_rows() {
            acc.add(row.density * self.bin_width);
        }
        acc.value()
    }
}
