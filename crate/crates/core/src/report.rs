//! Serializable run reports shared by the command line and the HTTP service.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{to_gray, Annotation, Image};
use crate::patches::build_patches;
use crate::prepared::PreparedImage;
use crate::search::{run, CostSource, Method, SearchOutcome, SearchParams, Warning};

pub const CANDIDATE_COLOR: [u8; 3] = [255, 0, 0];
pub const CONTOUR_COLOR: [u8; 3] = [0, 96, 255];

/// What to run and how to post-process it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub method: Method,
    pub params: SearchParams,
    /// The prepared image is single-channel; the reference is converted if needed.
    pub grayscale: bool,
    /// Cluster accepted windows into patches with this link factor.
    pub link_factor: Option<f64>,
}

impl RunOptions {
    pub fn new(method: Method, params: SearchParams) -> Self {
        Self {
            method,
            params,
            grayscale: false,
            link_factor: None,
        }
    }
}

/// Hyperparameters as echoed in a report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportParams {
    pub top_m: usize,
    pub k_max: usize,
    pub p: usize,
    pub stride_x: usize,
    pub stride_y: usize,
    pub scalar_profile: bool,
    pub link_factor: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dimensions {
    pub rows: usize,
    pub cols: usize,
    pub channels: usize,
}

impl Dimensions {
    pub fn of(img: &Image) -> Self {
        Self {
            rows: img.rows(),
            cols: img.cols(),
            channels: img.channels(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportCandidate {
    pub x: usize,
    pub y: usize,
    pub cost: f64,
    pub source: CostSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportPatch {
    /// Closed polygon, `[x, y]` vertices.
    pub contour: Vec<[f64; 2]>,
    /// Indices into `candidates`.
    pub members: Vec<usize>,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instants {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

/// Everything a run produced, in image coordinates (`x` = row, `y` = column).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub method: Method,
    pub grayscale: bool,
    pub params: ReportParams,
    pub image: Dimensions,
    pub reference: Dimensions,
    pub solve_time_s: f64,
    pub cost_evals: u64,
    pub cost_terms: u64,
    pub space_size: usize,
    pub exhaustive_size: usize,
    pub margin: Option<usize>,
    pub instants: Option<Instants>,
    pub candidates: Vec<ReportCandidate>,
    pub patches: Option<Vec<ReportPatch>>,
    pub warnings: Vec<Warning>,
}

impl RunReport {
    /// Boxes for every candidate, then patch contours.
    pub fn annotations(&self) -> Vec<Annotation> {
        let mut out: Vec<Annotation> = self
            .candidates
            .iter()
            .map(|c| Annotation::Rect {
                x: c.x as i64,
                y: c.y as i64,
                h: self.reference.rows,
                w: self.reference.cols,
                color: CANDIDATE_COLOR,
            })
            .collect();
        for patch in self.patches.iter().flatten() {
            out.push(Annotation::Polygon {
                vertices: patch.contour.clone(),
                color: CONTOUR_COLOR,
            });
        }
        out
    }

    /// Zeroes the timing field so reports of identical runs compare equal.
    pub fn without_timing(mut self) -> Self {
        self.solve_time_s = 0.0;
        self
    }
}

/// Runs one search and assembles its report. The solve time covers the
/// search and patch building.
pub fn execute(
    prepared: &PreparedImage,
    reference: &Image,
    options: &RunOptions,
) -> Result<(RunReport, SearchOutcome)> {
    let image = prepared.image();
    if options.grayscale != (image.channels() == 1) {
        return Err(Error::InvalidParameter(format!(
            "grayscale={} does not fit a {}-channel image",
            options.grayscale,
            image.channels()
        )));
    }
    if let Some(f) = options.link_factor {
        if !(f.is_finite() && f > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "link factor must be positive, got {f}"
            )));
        }
    }
    let converted;
    let reference = if options.grayscale && reference.channels() != 1 {
        converted = to_gray(reference);
        &converted
    } else {
        reference
    };

    let started = Instant::now();
    let outcome = run(options.method, prepared, reference, &options.params)?;
    let patches = options
        .link_factor
        .map(|f| build_patches(&outcome.candidates, reference.rows(), reference.cols(), f));
    let solve_time_s = started.elapsed().as_secs_f64();

    let params = &options.params;
    let report = RunReport {
        method: options.method,
        grayscale: options.grayscale,
        params: ReportParams {
            top_m: params.top_m,
            k_max: params.apts.k_max,
            p: params.p,
            stride_x: params.stride_x,
            stride_y: params.stride_y,
            scalar_profile: params.scalar_profile,
            link_factor: options.link_factor,
        },
        image: Dimensions::of(image),
        reference: Dimensions::of(reference),
        solve_time_s,
        cost_evals: outcome.cost_evals(),
        cost_terms: outcome.cost_terms(),
        space_size: outcome.space_size(),
        exhaustive_size: outcome.exhaustive_size,
        margin: outcome.margin,
        instants: outcome.segmentations.as_ref().map(|[rows, cols]| Instants {
            rows: rows.instants.clone(),
            cols: cols.instants.clone(),
        }),
        candidates: outcome
            .candidates
            .iter()
            .map(|c| ReportCandidate {
                x: c.x,
                y: c.y,
                cost: c.cost,
                source: c.source,
            })
            .collect(),
        patches: patches.map(|ps| {
            ps.into_iter()
                .map(|p| ReportPatch {
                    contour: p.contour.vertices,
                    members: p.members,
                    length: p.contour.length,
                })
                .collect()
        }),
        warnings: outcome.warnings.clone(),
    };
    Ok((report, outcome))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scene() -> (PreparedImage, Image) {
        let mut img = Image::filled(40, 50, [255, 255, 255]).unwrap();
        for (x0, y0) in [(5, 6), (25, 30)] {
            for x in x0..x0 + 4 {
                for y in y0..y0 + 5 {
                    for k in 0..3 {
                        img.set(x, y, k, 0);
                    }
                }
            }
        }
        let reference = img.crop(5, 6, 4, 5).unwrap();
        (PreparedImage::new(img), reference)
    }

    #[test]
    fn report_round_trips_through_json() {
        let (prepared, reference) = scene();
        let mut options = RunOptions::new(Method::AptsV1, SearchParams::default());
        options.link_factor = Some(2.0);
        let (report, outcome) = execute(&prepared, &reference, &options).unwrap();
        assert_eq!(report.candidates.len(), outcome.candidates.len());
        assert!(report.instants.is_some());
        let json = serde_json::to_string(&report).unwrap();
        let back: RunReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn annotations_follow_the_report() {
        let (prepared, reference) = scene();
        let mut options = RunOptions::new(Method::Exhaustive, SearchParams::default());
        options.params.top_m = 2;
        options.link_factor = Some(1.0);
        let (report, _) = execute(&prepared, &reference, &options).unwrap();
        let annotations = report.annotations();
        let patches = report.patches.as_ref().unwrap().len();
        assert_eq!(annotations.len(), report.candidates.len() + patches);
        assert_eq!(
            annotations[0],
            Annotation::Rect {
                x: 5,
                y: 6,
                h: 4,
                w: 5,
                color: CANDIDATE_COLOR
            }
        );
    }

    #[test]
    fn grayscale_flag_must_match_the_image() {
        let (prepared, reference) = scene();
        let mut options = RunOptions::new(Method::Exhaustive, SearchParams::default());
        options.grayscale = true;
        assert!(execute(&prepared, &reference, &options).is_err());

        let gray = PreparedImage::new(to_gray(prepared.image()));
        let (report, _) = execute(&gray, &reference, &options).unwrap();
        assert!(report.grayscale);
        assert_eq!(report.reference.channels, 1);
        assert_eq!(report.candidates[0].x, 5);
    }
}
