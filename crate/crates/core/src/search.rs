//! Multi-occurrence sub-image search.
//!
//! A search scores every placement of a [`SearchSpace`] with a window cost,
//! keeps the `M` cheapest placements ([`TopM`]) and then greedily drops any
//! placement whose window overlaps a cheaper kept one. [`run_exhaustive`]
//! scans every placement; [`run_apts_v1`] only scans placements near the
//! segmentation instants of the image's row and column series.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{check_window, Image};
use crate::prepared::PreparedImage;
use crate::searchspace::{exhaustive_space, margin, reduced_space, SearchSpace};
use crate::segmentation::{segment, AptsParams, Segmentation};
use crate::timeseries::Axis;

/// Search strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "exhaustive")]
    Exhaustive,
    #[serde(rename = "apts-v1")]
    AptsV1,
    #[serde(rename = "apts-v2")]
    AptsV2,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Exhaustive, Method::AptsV1, Method::AptsV2];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Exhaustive => "exhaustive",
            Method::AptsV1 => "apts-v1",
            Method::AptsV2 => "apts-v2",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown method {s:?}")))
    }
}

/// Which cost produced a candidate's score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostSource {
    /// Full pixelwise sum of squared differences.
    Full,
    /// Row-profile cost.
    Axis0,
    /// Column-profile cost.
    Axis1,
    /// Per-channel window totals.
    Scalar,
}

/// A scored window placement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub x: usize,
    pub y: usize,
    pub cost: f64,
    pub source: CostSource,
}

/// Exact integer score of a placement, ordered by `(cost, x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Scored {
    pub cost: u64,
    pub x: usize,
    pub y: usize,
}

/// The `capacity` lowest placements seen so far, ascending by `(cost, x, y)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopM {
    capacity: usize,
    entries: Vec<Scored>,
}

impl TopM {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "TopM needs a positive capacity");
        Self {
            capacity,
            entries: Vec::with_capacity(capacity + 1),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Scored] {
        &self.entries
    }

    /// Cost of the worst retained entry once full; placements costing more
    /// can never enter.
    pub fn threshold(&self) -> Option<u64> {
        if self.entries.len() == self.capacity {
            self.entries.last().map(|s| s.cost)
        } else {
            None
        }
    }

    /// Inserts `scored` if it ranks among the `capacity` best. Returns whether it was kept.
    pub fn offer(&mut self, scored: Scored) -> bool {
        if self.entries.len() == self.capacity && scored >= *self.entries.last().unwrap() {
            return false;
        }
        let at = self.entries.partition_point(|e| *e < scored);
        if self.entries.get(at) == Some(&scored) {
            return false;
        }
        self.entries.insert(at, scored);
        self.entries.truncate(self.capacity);
        true
    }

    pub fn merge(mut self, other: TopM) -> TopM {
        for s in other.entries {
            if !self.offer(s) {
                // `other` is sorted, nothing after this can enter either
                if self.entries.len() == self.capacity {
                    break;
                }
            }
        }
        self
    }

    pub fn to_candidates(&self, source: CostSource) -> Vec<Candidate> {
        self.entries
            .iter()
            .map(|s| Candidate {
                x: s.x,
                y: s.y,
                cost: s.cost as f64,
                source,
            })
            .collect()
    }
}

/// A cost of placing the reference with its top-left corner at `(x, y)`.
pub trait WindowCost: Sync {
    /// Reference extent `(rows, cols)`.
    fn window(&self) -> (usize, usize);

    /// Exact cost, or `None` as soon as the running sum exceeds `abandon_above`.
    /// The caller guarantees the window fits.
    fn cost(&self, x: usize, y: usize, abandon_above: Option<u64>) -> Option<u64>;

    /// Squared-difference terms in one full evaluation.
    fn terms_per_window(&self) -> u64;
}

/// Pixelwise sum of squared differences against the reference.
#[derive(Debug, Clone, Copy)]
pub struct SsdCost<'a> {
    image: &'a Image,
    reference: &'a Image,
}

impl<'a> SsdCost<'a> {
    pub fn new(image: &'a Image, reference: &'a Image) -> Result<Self> {
        check_reference(image, reference)?;
        Ok(Self { image, reference })
    }
}

impl WindowCost for SsdCost<'_> {
    fn window(&self) -> (usize, usize) {
        (self.reference.rows(), self.reference.cols())
    }

    #[inline]
    fn cost(&self, x: usize, y: usize, abandon_above: Option<u64>) -> Option<u64> {
        let (rows, cols) = self.window();
        let bound = abandon_above.unwrap_or(u64::MAX);
        let mut total = 0u64;
        for r in 0..rows {
            let window_row = self.image.row_span(x + r, y, cols);
            let ref_row = self.reference.row_span(r, 0, cols);
            let row_sum: u64 = window_row
                .iter()
                .zip(ref_row)
                .map(|(&a, &b)| {
                    let d = a.abs_diff(b) as u64;
                    d * d
                })
                .sum();
            total += row_sum;
            if total > bound {
                return None;
            }
        }
        Some(total)
    }

    fn terms_per_window(&self) -> u64 {
        (self.reference.rows() * self.reference.cols() * self.reference.channels()) as u64
    }
}

pub(crate) fn check_reference(image: &Image, reference: &Image) -> Result<()> {
    if image.channels() != reference.channels() {
        return Err(Error::ChannelMismatch {
            image: image.channels(),
            reference: reference.channels(),
        });
    }
    if reference.rows() > image.rows() || reference.cols() > image.cols() {
        return Err(Error::ReferenceTooLarge {
            ref_rows: reference.rows(),
            ref_cols: reference.cols(),
            rows: image.rows(),
            cols: image.cols(),
        });
    }
    Ok(())
}

/// Sum of squared channel differences between the reference and the window
/// of `image` at `(x, y)`.
pub fn cost_ssd(image: &Image, reference: &Image, x: usize, y: usize) -> Result<u64> {
    let cost = SsdCost::new(image, reference)?;
    check_window(image.rows(), image.cols(), x, y, reference.rows(), reference.cols())?;
    Ok(cost.cost(x, y, None).expect("no abandon bound"))
}

/// Outcome of [`scan_top_m`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scan {
    pub top: TopM,
    /// Cost-function invocations.
    pub evaluations: u64,
    /// Squared-difference terms of full evaluations (`evaluations * terms_per_window`).
    pub terms: u64,
}

/// Scores every placement of `space` and keeps the `m` lowest.
///
/// Rows of the space are processed in parallel chunks, each with a local
/// top-`m` used as early-abandon bound; merging the local lists gives the
/// same result as a sequential row-major scan.
pub fn scan_top_m(space: &SearchSpace, m: usize, cost: &impl WindowCost) -> Result<Scan> {
    if m == 0 {
        return Err(Error::InvalidParameter("M must be at least 1".into()));
    }
    let evaluations = AtomicU64::new(0);
    let chunk = (space.xs.len() / (rayon::current_num_threads() * 4)).max(1);
    let top = space
        .xs
        .par_chunks(chunk)
        .map(|xs| {
            let mut local = TopM::new(m);
            for &x in xs {
                for &y in &space.ys {
                    if let Some(c) = cost.cost(x, y, local.threshold()) {
                        local.offer(Scored { cost: c, x, y });
                    }
                }
            }
            evaluations.fetch_add((xs.len() * space.ys.len()) as u64, Ordering::Relaxed);
            local
        })
        .reduce(|| TopM::new(m), TopM::merge);
    let evaluations = evaluations.into_inner();
    Ok(Scan {
        top,
        evaluations,
        terms: evaluations * cost.terms_per_window(),
    })
}

fn overlaps(a: &Candidate, b: &Candidate, rows: usize, cols: usize) -> bool {
    a.x.abs_diff(b.x) < rows && a.y.abs_diff(b.y) < cols
}

/// Greedy best-first pass keeping candidates whose `rows`x`cols` windows have
/// zero intersection area with every window kept before them. Input order is
/// the ranking; output preserves it.
pub fn filter_nonoverlap(candidates: &[Candidate], rows: usize, cols: usize) -> Vec<Candidate> {
    let mut kept: Vec<Candidate> = Vec::new();
    for c in candidates {
        if kept.iter().all(|k| !overlaps(k, c, rows, cols)) {
            kept.push(*c);
        }
    }
    kept
}

/// Hyperparameters shared by all methods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchParams {
    /// Upper bound on retained candidates before overlap filtering.
    pub top_m: usize,
    /// Margin divisor: instants are widened by `max(ref_rows / p, ref_cols / p)`.
    pub p: usize,
    pub stride_x: usize,
    pub stride_y: usize,
    pub apts: AptsParams,
    /// Profile search on per-channel window totals instead of per-axis profiles.
    pub scalar_profile: bool,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self {
            top_m: 10,
            p: 2,
            stride_x: 1,
            stride_y: 1,
            apts: AptsParams::default(),
            scalar_profile: false,
        }
    }
}

impl SearchParams {
    pub fn validate(&self) -> Result<()> {
        if self.top_m == 0 {
            return Err(Error::InvalidParameter("M must be at least 1".into()));
        }
        if self.p == 0 {
            return Err(Error::InvalidParameter("p must be at least 1".into()));
        }
        if self.stride_x == 0 || self.stride_y == 0 {
            return Err(Error::InvalidParameter("strides must be at least 1".into()));
        }
        self.apts.validate()
    }
}

/// Non-fatal conditions met during a search.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Warning {
    /// The reduced search space had no placements.
    EmptySearchSpace,
    /// `k_max` could not be met and the largest-change instants were kept.
    SegmentationTruncated { axis: Axis },
}

/// Per-scan counters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanStats {
    pub source: CostSource,
    pub evaluations: u64,
    pub terms: u64,
}

/// Result of one search run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub method: Method,
    /// Accepted, pairwise non-overlapping candidates in rank order.
    pub candidates: Vec<Candidate>,
    pub scans: Vec<ScanStats>,
    /// Placements scanned (per cost).
    pub space: SearchSpace,
    /// Size of the exhaustive space with the same strides.
    pub exhaustive_size: usize,
    /// Row and column segmentations (APTS methods only).
    pub segmentations: Option<[Segmentation; 2]>,
    pub margin: Option<usize>,
    pub warnings: Vec<Warning>,
}

impl SearchOutcome {
    /// Total cost-function invocations over all scans.
    pub fn cost_evals(&self) -> u64 {
        self.scans.iter().map(|s| s.evaluations).sum()
    }

    /// Total squared-difference terms over all scans.
    pub fn cost_terms(&self) -> u64 {
        self.scans.iter().map(|s| s.terms).sum()
    }

    pub fn space_size(&self) -> usize {
        self.space.len()
    }
}

/// Scans the full stride-aligned space with the pixelwise cost.
pub fn run_exhaustive(prepared: &PreparedImage, reference: &Image, params: &SearchParams) -> Result<SearchOutcome> {
    params.validate()?;
    let image = prepared.image();
    let cost = SsdCost::new(image, reference)?;
    let space = exhaustive_space(
        image.rows(),
        image.cols(),
        reference.rows(),
        reference.cols(),
        params.stride_x,
        params.stride_y,
    )?;
    let exhaustive_size = space.len();
    let scan = scan_top_m(&space, params.top_m, &cost)?;
    Ok(SearchOutcome {
        method: Method::Exhaustive,
        candidates: filter_nonoverlap(
            &scan.top.to_candidates(CostSource::Full),
            reference.rows(),
            reference.cols(),
        ),
        scans: vec![ScanStats {
            source: CostSource::Full,
            evaluations: scan.evaluations,
            terms: scan.terms,
        }],
        space,
        exhaustive_size,
        segmentations: None,
        margin: None,
        warnings: Vec::new(),
    })
}

/// Segmentation of both image series and the reduced space built from it.
pub(crate) struct AptsSpace {
    pub space: SearchSpace,
    pub exhaustive_size: usize,
    pub segmentations: [Segmentation; 2],
    pub margin: usize,
    pub warnings: Vec<Warning>,
}

pub(crate) fn apts_space(prepared: &PreparedImage, reference: &Image, params: &SearchParams) -> Result<AptsSpace> {
    params.validate()?;
    let image = prepared.image();
    check_reference(image, reference)?;
    let rows_seg = segment(prepared.series(Axis::Rows), &params.apts)?;
    let cols_seg = segment(prepared.series(Axis::Cols), &params.apts)?;
    let space = reduced_space(
        &rows_seg.instants,
        &cols_seg.instants,
        image.rows(),
        image.cols(),
        reference.rows(),
        reference.cols(),
        params.p,
        params.stride_x,
        params.stride_y,
    )?;
    let exhaustive_size = exhaustive_space(
        image.rows(),
        image.cols(),
        reference.rows(),
        reference.cols(),
        params.stride_x,
        params.stride_y,
    )?
    .len();
    let mut warnings = Vec::new();
    for (seg, axis) in [(&rows_seg, Axis::Rows), (&cols_seg, Axis::Cols)] {
        if seg.truncated {
            warnings.push(Warning::SegmentationTruncated { axis });
        }
    }
    if space.is_empty() {
        log::warn!("reduced search space is empty");
        warnings.push(Warning::EmptySearchSpace);
    }
    Ok(AptsSpace {
        space,
        exhaustive_size,
        segmentations: [rows_seg, cols_seg],
        margin: margin(reference.rows(), reference.cols(), params.p),
        warnings,
    })
}

/// Scans only placements near segmentation instants, with the pixelwise cost.
pub fn run_apts_v1(prepared: &PreparedImage, reference: &Image, params: &SearchParams) -> Result<SearchOutcome> {
    let reduced = apts_space(prepared, reference, params)?;
    let cost = SsdCost::new(prepared.image(), reference)?;
    let scan = scan_top_m(&reduced.space, params.top_m, &cost)?;
    Ok(SearchOutcome {
        method: Method::AptsV1,
        candidates: filter_nonoverlap(
            &scan.top.to_candidates(CostSource::Full),
            reference.rows(),
            reference.cols(),
        ),
        scans: vec![ScanStats {
            source: CostSource::Full,
            evaluations: scan.evaluations,
            terms: scan.terms,
        }],
        space: reduced.space,
        exhaustive_size: reduced.exhaustive_size,
        segmentations: Some(reduced.segmentations),
        margin: Some(reduced.margin),
        warnings: reduced.warnings,
    })
}

/// Dispatches to the requested method.
pub fn run(
    method: Method,
    prepared: &PreparedImage,
    reference: &Image,
    params: &SearchParams,
) -> Result<SearchOutcome> {
    match method {
        Method::Exhaustive => run_exhaustive(prepared, reference, params),
        Method::AptsV1 => run_apts_v1(prepared, reference, params),
        Method::AptsV2 => crate::profile::run_apts_v2(prepared, reference, params),
    }
}
