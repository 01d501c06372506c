//! Projection of images onto per-axis multichannel time series.
//!
//! Summing an image along its columns yields one sample per row (the "rows"
//! series), summing along rows yields one sample per column. Each sample
//! keeps one value per channel, so a time index maps straight back to a row
//! or column of the image.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::imaging::Image;

/// Which image axis a series runs along.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    /// One sample per row; the reference profile for this axis has
    /// `ref_rows` entries.
    Rows,
    /// One sample per column.
    Cols,
}

impl Axis {
    pub const BOTH: [Axis; 2] = [Axis::Rows, Axis::Cols];

    /// Numeric axis index: 0 for rows, 1 for columns.
    pub fn index(self) -> usize {
        match self {
            Axis::Rows => 0,
            Axis::Cols => 1,
        }
    }
}

/// A nonnegative integer series of `len` samples with `channels` values each.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiSeries {
    axis: Axis,
    channels: usize,
    values: Vec<u64>,
}

impl MultiSeries {
    pub fn new(axis: Axis, channels: usize, values: Vec<u64>) -> Self {
        assert!(channels > 0 && values.len().is_multiple_of(channels), "ragged series");
        Self { axis, channels, values }
    }

    pub fn axis(&self) -> Axis {
        self.axis
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.channels
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn get(&self, t: usize, k: usize) -> u64 {
        self.values[t * self.channels + k]
    }

    /// All channel values at time `t`.
    pub fn sample(&self, t: usize) -> &[u64] {
        &self.values[t * self.channels..(t + 1) * self.channels]
    }

    /// One channel as a standalone sequence.
    pub fn channel(&self, k: usize) -> Vec<u64> {
        (0..self.len()).map(|t| self.get(t, k)).collect()
    }

    pub fn total(&self, k: usize) -> u64 {
        (0..self.len()).map(|t| self.get(t, k)).sum()
    }

    /// Writes `index,<channel columns>` CSV rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let header = if self.channels == 3 {
            "index,r,g,b"
        } else {
            "index,gray"
        };
        writeln!(out, "{header}")?;
        for t in 0..self.len() {
            write!(out, "{t}")?;
            for v in self.sample(t) {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Sums `img` along the axis orthogonal to `axis`.
pub fn project(img: &Image, axis: Axis) -> MultiSeries {
    let channels = img.channels();
    let len = match axis {
        Axis::Rows => img.rows(),
        Axis::Cols => img.cols(),
    };
    let mut values = vec![0u64; len * channels];
    for x in 0..img.rows() {
        for y in 0..img.cols() {
            let t = match axis {
                Axis::Rows => x,
                Axis::Cols => y,
            };
            for (k, &v) in img.pixel(x, y).iter().enumerate() {
                values[t * channels + k] += v as u64;
            }
        }
    }
    MultiSeries::new(axis, channels, values)
}

/// A reference image collapsed onto one axis.
///
/// For [`Axis::Rows`] entry `i` is the per-channel sum of reference row `i`;
/// for [`Axis::Cols`] it is the sum of reference column `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AxisProfile {
    series: MultiSeries,
}

impl AxisProfile {
    pub fn axis(&self) -> Axis {
        self.series.axis
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    pub fn channels(&self) -> usize {
        self.series.channels
    }

    #[inline]
    pub fn get(&self, i: usize, k: usize) -> u64 {
        self.series.get(i, k)
    }

    pub fn as_series(&self) -> &MultiSeries {
        &self.series
    }
}

/// Collapses the reference image for the per-axis profile search.
pub fn reduce_reference(reference: &Image, axis: Axis) -> AxisProfile {
    AxisProfile {
        series: project(reference, axis),
    }
}
