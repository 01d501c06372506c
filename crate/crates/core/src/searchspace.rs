//! Candidate top-left coordinates for window placement.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::Image;

/// Row and column coordinates whose cartesian product is scanned.
///
/// Every `x` satisfies `x <= rows - ref_rows` and `x % stride_x == 0`, and
/// likewise for `y`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub xs: Vec<usize>,
    pub ys: Vec<usize>,
    pub stride_x: usize,
    pub stride_y: usize,
}

impl SearchSpace {
    /// Number of window placements.
    pub fn len(&self) -> usize {
        self.xs.len() * self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty() || self.ys.is_empty()
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        self.xs.binary_search(&x).is_ok() && self.ys.binary_search(&y).is_ok()
    }

    pub fn is_subset_of(&self, other: &SearchSpace) -> bool {
        self.xs.iter().all(|x| other.xs.binary_search(x).is_ok())
            && self.ys.iter().all(|y| other.ys.binary_search(y).is_ok())
    }

    /// Row-major run-length encoding of the placement mask over a
    /// `rows`x`cols` grid. Runs alternate starting with "outside".
    pub fn run_length_mask(&self, rows: usize, cols: usize) -> RunLengthMask {
        let mut counts = Vec::new();
        let mut current = false;
        let mut run = 0u64;
        for x in 0..rows {
            let row_in = self.xs.binary_search(&x).is_ok();
            for y in 0..cols {
                let inside = row_in && self.ys.binary_search(&y).is_ok();
                if inside != current {
                    counts.push(run);
                    run = 0;
                    current = inside;
                }
                run += 1;
            }
        }
        counts.push(run);
        RunLengthMask { rows, cols, counts }
    }

    /// Black image with the placements painted white.
    pub fn mask_image(&self, rows: usize, cols: usize) -> Image {
        Image::from_fn(rows, cols, |x, y| {
            if self.contains(x, y) {
                [255, 255, 255]
            } else {
                [0, 0, 0]
            }
        })
        .expect("nonzero mask dimensions")
    }
}

/// Run-length encoded binary mask; `counts[0]` is a run of zeros (possibly empty).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunLengthMask {
    pub rows: usize,
    pub cols: usize,
    pub counts: Vec<u64>,
}

impl RunLengthMask {
    pub fn decode(&self) -> Vec<bool> {
        let mut out = Vec::with_capacity(self.rows * self.cols);
        for (i, &n) in self.counts.iter().enumerate() {
            out.extend(std::iter::repeat_n(i % 2 == 1, n as usize));
        }
        out
    }
}

fn check_strides(stride_x: usize, stride_y: usize) -> Result<()> {
    if stride_x == 0 || stride_y == 0 {
        return Err(Error::InvalidParameter("strides must be at least 1".into()));
    }
    Ok(())
}

fn check_fit(rows: usize, cols: usize, ref_rows: usize, ref_cols: usize) -> Result<()> {
    if ref_rows == 0 || ref_cols == 0 {
        return Err(Error::EmptyImage {
            rows: ref_rows,
            cols: ref_cols,
        });
    }
    if ref_rows > rows || ref_cols > cols {
        return Err(Error::ReferenceTooLarge {
            ref_rows,
            ref_cols,
            rows,
            cols,
        });
    }
    Ok(())
}

/// Every stride-aligned placement of a `ref_rows`x`ref_cols` window.
pub fn exhaustive_space(
    rows: usize,
    cols: usize,
    ref_rows: usize,
    ref_cols: usize,
    stride_x: usize,
    stride_y: usize,
) -> Result<SearchSpace> {
    check_strides(stride_x, stride_y)?;
    check_fit(rows, cols, ref_rows, ref_cols)?;
    Ok(SearchSpace {
        xs: (0..=rows - ref_rows).step_by(stride_x).collect(),
        ys: (0..=cols - ref_cols).step_by(stride_y).collect(),
        stride_x,
        stride_y,
    })
}

/// Half-width of the index interval placed around each instant.
pub fn margin(ref_rows: usize, ref_cols: usize, p: usize) -> usize {
    assert!(p > 0, "margin divisor must be positive");
    (ref_rows / p).max(ref_cols / p)
}

fn expand(instants: &[usize], margin: usize, limit: usize, stride: usize) -> Vec<usize> {
    let mut out: Vec<usize> = instants
        .iter()
        .flat_map(|&t| t.saturating_sub(margin)..=(t + margin).min(limit))
        .filter(|c| c % stride == 0)
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Placements within `margin(ref_rows, ref_cols, p)` of a segmentation instant
/// on both axes. Empty instants on either axis give an empty space.
#[allow(clippy::too_many_arguments)]
pub fn reduced_space(
    instants_x: &[usize],
    instants_y: &[usize],
    rows: usize,
    cols: usize,
    ref_rows: usize,
    ref_cols: usize,
    p: usize,
    stride_x: usize,
    stride_y: usize,
) -> Result<SearchSpace> {
    check_strides(stride_x, stride_y)?;
    check_fit(rows, cols, ref_rows, ref_cols)?;
    if p == 0 {
        return Err(Error::InvalidParameter("p must be at least 1".into()));
    }
    let m = margin(ref_rows, ref_cols, p);
    Ok(SearchSpace {
        xs: expand(instants_x, m, rows - ref_rows, stride_x),
        ys: expand(instants_y, m, cols - ref_cols, stride_y),
        stride_x,
        stride_y,
    })
}
