//! Per-axis profile search.
//!
//! The reference is collapsed to its row sums and, separately, its column
//! sums. A window is scored against each collapsed reference using row or
//! column sums of the window, which the integral image provides in constant
//! time, so one evaluation costs `O(ref_rows)` or `O(ref_cols)` instead of
//! `O(ref_rows * ref_cols)`. The two per-axis top-`M` lists are merged and
//! overlap-filtered.
//!
//! Summing out an axis discards the order of pixels along it: a window whose
//! columns are a permutation of the reference's columns has zero row-profile
//! cost. The merged ranking therefore admits false positives that the
//! pixelwise cost would reject.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::imaging::{check_window, Image, IntegralImage};
use crate::prepared::PreparedImage;
use crate::search::{
    apts_space, check_reference, filter_nonoverlap, scan_top_m, Candidate, CostSource, Method, ScanStats,
    SearchOutcome, SearchParams, WindowCost,
};
use crate::timeseries::{reduce_reference, Axis, AxisProfile};

/// Squared differences between a window's axis sums and a reference profile.
#[derive(Debug, Clone, Copy)]
pub struct ProfileCost<'a> {
    integral: &'a IntegralImage,
    profile: &'a AxisProfile,
    ref_rows: usize,
    ref_cols: usize,
}

impl<'a> ProfileCost<'a> {
    pub fn new(
        integral: &'a IntegralImage,
        profile: &'a AxisProfile,
        ref_rows: usize,
        ref_cols: usize,
    ) -> Result<Self> {
        let expected = match profile.axis() {
            Axis::Rows => ref_rows,
            Axis::Cols => ref_cols,
        };
        if profile.len() != expected || profile.channels() != integral.channels() {
            return Err(Error::InvalidParameter(format!(
                "profile of length {} with {} channels does not fit a {ref_rows}x{ref_cols} reference on a {}-channel image",
                profile.len(),
                profile.channels(),
                integral.channels()
            )));
        }
        if ref_rows > integral.rows() || ref_cols > integral.cols() {
            return Err(Error::ReferenceTooLarge {
                ref_rows,
                ref_cols,
                rows: integral.rows(),
                cols: integral.cols(),
            });
        }
        Ok(Self {
            integral,
            profile,
            ref_rows,
            ref_cols,
        })
    }

    pub fn source(&self) -> CostSource {
        match self.profile.axis() {
            Axis::Rows => CostSource::Axis0,
            Axis::Cols => CostSource::Axis1,
        }
    }
}

impl WindowCost for ProfileCost<'_> {
    fn window(&self) -> (usize, usize) {
        (self.ref_rows, self.ref_cols)
    }

    #[inline]
    fn cost(&self, x: usize, y: usize, abandon_above: Option<u64>) -> Option<u64> {
        let bound = abandon_above.unwrap_or(u64::MAX);
        let channels = self.integral.channels();
        let mut total = 0u64;
        for i in 0..self.profile.len() {
            for k in 0..channels {
                let window_sum = match self.profile.axis() {
                    Axis::Rows => self.integral.rect_sum_unchecked(x + i, y, 1, self.ref_cols, k),
                    Axis::Cols => self.integral.rect_sum_unchecked(x, y + i, self.ref_rows, 1, k),
                };
                let d = window_sum.abs_diff(self.profile.get(i, k));
                total += d * d;
            }
            if total > bound {
                return None;
            }
        }
        Some(total)
    }

    fn terms_per_window(&self) -> u64 {
        (self.profile.len() * self.integral.channels()) as u64
    }
}

/// Profile cost of the window at `(x, y)`.
pub fn cost_profile(
    integral: &IntegralImage,
    profile: &AxisProfile,
    x: usize,
    y: usize,
    ref_rows: usize,
    ref_cols: usize,
) -> Result<u64> {
    let cost = ProfileCost::new(integral, profile, ref_rows, ref_cols)?;
    check_window(integral.rows(), integral.cols(), x, y, ref_rows, ref_cols)?;
    Ok(cost.cost(x, y, None).expect("no abandon bound"))
}

/// Squared differences of per-channel window totals. Collapsing both axes
/// loses all spatial layout; kept as an opt-in mode.
#[derive(Debug, Clone)]
pub struct ScalarCost<'a> {
    integral: &'a IntegralImage,
    totals: Vec<u64>,
    ref_rows: usize,
    ref_cols: usize,
}

impl<'a> ScalarCost<'a> {
    pub fn new(integral: &'a IntegralImage, reference: &Image) -> Self {
        let ref_ii = IntegralImage::new(reference);
        let totals = (0..reference.channels())
            .map(|k| ref_ii.rect_sum_unchecked(0, 0, reference.rows(), reference.cols(), k))
            .collect();
        Self {
            integral,
            totals,
            ref_rows: reference.rows(),
            ref_cols: reference.cols(),
        }
    }
}

impl WindowCost for ScalarCost<'_> {
    fn window(&self) -> (usize, usize) {
        (self.ref_rows, self.ref_cols)
    }

    fn cost(&self, x: usize, y: usize, _abandon_above: Option<u64>) -> Option<u64> {
        Some(
            self.totals
                .iter()
                .enumerate()
                .map(|(k, &t)| {
                    let d = self
                        .integral
                        .rect_sum_unchecked(x, y, self.ref_rows, self.ref_cols, k)
                        .abs_diff(t);
                    d * d
                })
                .sum(),
        )
    }

    fn terms_per_window(&self) -> u64 {
        self.totals.len() as u64
    }
}

/// Combines per-axis candidate lists: identical placements keep the lower
/// cost (the earlier list on ties), the union is ranked by `(cost, x, y)`.
pub fn merge_axis_candidates(lists: &[Vec<Candidate>]) -> Vec<Candidate> {
    let mut best: HashMap<(usize, usize), Candidate> = HashMap::new();
    for list in lists {
        for c in list {
            best.entry((c.x, c.y))
                .and_modify(|held| {
                    if c.cost < held.cost {
                        *held = *c;
                    }
                })
                .or_insert(*c);
        }
    }
    let mut merged: Vec<Candidate> = best.into_values().collect();
    merged.sort_by(|a, b| a.cost.total_cmp(&b.cost).then(a.x.cmp(&b.x)).then(a.y.cmp(&b.y)));
    merged
}

fn normalized(candidates: Vec<Candidate>, terms: u64) -> Vec<Candidate> {
    candidates
        .into_iter()
        .map(|c| Candidate {
            cost: c.cost / terms as f64,
            ..c
        })
        .collect()
}

/// Reduced-space search scored with per-axis reference profiles.
pub fn run_apts_v2(prepared: &PreparedImage, reference: &Image, params: &SearchParams) -> Result<SearchOutcome> {
    let reduced = apts_space(prepared, reference, params)?;
    check_reference(prepared.image(), reference)?;
    let integral = prepared.integral();
    let (ref_rows, ref_cols) = (reference.rows(), reference.cols());

    let mut lists = Vec::new();
    let mut scans = Vec::new();
    if params.scalar_profile {
        let cost = ScalarCost::new(integral, reference);
        let scan = scan_top_m(&reduced.space, params.top_m, &cost)?;
        lists.push(normalized(
            scan.top.to_candidates(CostSource::Scalar),
            cost.terms_per_window(),
        ));
        scans.push(ScanStats {
            source: CostSource::Scalar,
            evaluations: scan.evaluations,
            terms: scan.terms,
        });
    } else {
        let row_profile = reduce_reference(reference, Axis::Rows);
        let col_profile = reduce_reference(reference, Axis::Cols);
        let row_cost = ProfileCost::new(integral, &row_profile, ref_rows, ref_cols)?;
        let col_cost = ProfileCost::new(integral, &col_profile, ref_rows, ref_cols)?;
        let (row_scan, col_scan) = rayon::join(
            || scan_top_m(&reduced.space, params.top_m, &row_cost),
            || scan_top_m(&reduced.space, params.top_m, &col_cost),
        );
        for (scan, cost) in [(row_scan?, &row_cost), (col_scan?, &col_cost)] {
            lists.push(normalized(
                scan.top.to_candidates(cost.source()),
                cost.terms_per_window(),
            ));
            scans.push(ScanStats {
                source: cost.source(),
                evaluations: scan.evaluations,
                terms: scan.terms,
            });
        }
    }

    let merged = merge_axis_candidates(&lists);
    Ok(SearchOutcome {
        method: Method::AptsV2,
        candidates: filter_nonoverlap(&merged, ref_rows, ref_cols),
        scans,
        space: reduced.space,
        exhaustive_size: reduced.exhaustive_size,
        segmentations: Some(reduced.segmentations),
        margin: Some(reduced.margin),
        warnings: reduced.warnings,
    })
}
