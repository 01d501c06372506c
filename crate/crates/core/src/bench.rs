//! Synthetic scenes and a side-by-side comparison harness for the search
//! methods.
//!
//! Evaluation counts are exact and machine-independent; solve times are
//! reported for information only.

use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::Image;
use crate::patches::build_patches;
use crate::prepared::PreparedImage;
use crate::search::{run, Candidate, Method, SearchParams};

/// A shape painted onto the background.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Shape {
    /// Disk inscribed in the `diameter`-sided square with top-left `(x, y)`.
    Disk {
        x: usize,
        y: usize,
        diameter: usize,
        color: [u8; 3],
    },
    Rect {
        x: usize,
        y: usize,
        h: usize,
        w: usize,
        color: [u8; 3],
    },
}

impl Shape {
    pub fn bounds(&self) -> BoundingBox {
        match *self {
            Shape::Disk { x, y, diameter, .. } => BoundingBox {
                x,
                y,
                h: diameter,
                w: diameter,
            },
            Shape::Rect { x, y, h, w, .. } => BoundingBox { x, y, h, w },
        }
    }

    fn color(&self) -> [u8; 3] {
        match *self {
            Shape::Disk { color, .. } | Shape::Rect { color, .. } => color,
        }
    }

    /// Whether pixel `(px, py)` is painted by this shape.
    pub fn covers(&self, px: usize, py: usize) -> bool {
        let b = self.bounds();
        if !b.contains(px, py) {
            return false;
        }
        match *self {
            Shape::Rect { .. } => true,
            Shape::Disk { x, y, diameter, .. } => {
                let r = diameter as f64 / 2.0;
                let dx = (px - x) as f64 + 0.5 - r;
                let dy = (py - y) as f64 + 0.5 - r;
                dx * dx + dy * dy <= r * r
            }
        }
    }
}

/// Axis-aligned box with top-left `(x, y)`, `h` rows and `w` columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x: usize,
    pub y: usize,
    pub h: usize,
    pub w: usize,
}

impl BoundingBox {
    pub fn contains(&self, px: usize, py: usize) -> bool {
        px >= self.x && px < self.x + self.h && py >= self.y && py < self.y + self.w
    }

    /// Whether the boxes share positive area.
    pub fn intersects(&self, other: &BoundingBox) -> bool {
        self.x < other.x + other.h
            && other.x < self.x + self.h
            && self.y < other.y + other.w
            && other.y < self.y + self.w
    }
}

/// Description of a synthetic test image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub rows: usize,
    pub cols: usize,
    pub background: [u8; 3],
    pub shapes: Vec<Shape>,
    /// Per-channel uniform integer noise in `[-noise, noise]`, clamped.
    pub noise: u8,
    pub seed: u64,
}

impl SyntheticSpec {
    /// White 376x432 scene with three black 30-pixel disks.
    pub fn planted_disks() -> Self {
        let black = [0, 0, 0];
        Self {
            rows: 376,
            cols: 432,
            background: [255, 255, 255],
            shapes: vec![
                Shape::Disk {
                    x: 61,
                    y: 83,
                    diameter: 30,
                    color: black,
                },
                Shape::Disk {
                    x: 187,
                    y: 298,
                    diameter: 30,
                    color: black,
                },
                Shape::Disk {
                    x: 290,
                    y: 142,
                    diameter: 30,
                    color: black,
                },
            ],
            noise: 0,
            seed: 7,
        }
    }
}

/// A generated image with the bounding box of every planted shape.
#[derive(Debug, Clone)]
pub struct Synthetic {
    pub image: Image,
    pub truth: Vec<BoundingBox>,
}

/// Renders a [`SyntheticSpec`]. Identical specs give identical images.
pub fn generate(spec: &SyntheticSpec) -> Result<Synthetic> {
    if spec.noise > 128 {
        return Err(Error::InvalidParameter(format!("noise {} exceeds 128", spec.noise)));
    }
    let truth: Vec<BoundingBox> = spec.shapes.iter().map(Shape::bounds).collect();
    for (i, b) in truth.iter().enumerate() {
        if b.h == 0 || b.w == 0 || b.x + b.h > spec.rows || b.y + b.w > spec.cols {
            return Err(Error::InvalidParameter(format!("shape {i} does not fit the image")));
        }
        for (j, other) in truth.iter().enumerate().take(i) {
            if b.intersects(other) {
                return Err(Error::OverlappingShapes { first: j, second: i });
            }
        }
    }
    let mut image = Image::filled(spec.rows, spec.cols, spec.background)?;
    for shape in &spec.shapes {
        let b = shape.bounds();
        let color = shape.color();
        for x in b.x..b.x + b.h {
            for y in b.y..b.y + b.w {
                if shape.covers(x, y) {
                    for (k, &c) in color.iter().enumerate() {
                        image.set(x, y, k, c);
                    }
                }
            }
        }
    }
    if spec.noise > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let amp = spec.noise as i16;
        for x in 0..spec.rows {
            for y in 0..spec.cols {
                for k in 0..3 {
                    let v = image.get(x, y, k) as i16 + rng.random_range(-amp..=amp);
                    image.set(x, y, k, v.clamp(0, 255) as u8);
                }
            }
        }
    }
    Ok(Synthetic { image, truth })
}

/// One method's settings in a comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodConfig {
    pub method: Method,
    pub params: SearchParams,
    /// Link factor for patch clustering, when patches are wanted.
    pub link_factor: Option<f64>,
}

/// Outcome of one method in a comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub method: Method,
    pub top_m: usize,
    pub k_max: usize,
    pub p: usize,
    pub stride_x: usize,
    pub stride_y: usize,
    pub solve_time_s: f64,
    /// Solve-time change relative to the exhaustive run, in percent.
    pub delta_solve_pct: Option<f64>,
    pub cost_evals: u64,
    pub cost_terms: u64,
    pub space_size: usize,
    pub exhaustive_size: usize,
    pub accepted: Vec<Candidate>,
    pub patch_count: Option<usize>,
    pub error: Option<String>,
}

/// Runs every configuration on the same inputs, sequentially.
pub fn compare_methods(prepared: &PreparedImage, reference: &Image, configs: &[MethodConfig]) -> Vec<ExperimentReport> {
    let mut reports: Vec<ExperimentReport> = configs
        .iter()
        .map(|config| {
            let params = &config.params;
            let mut report = ExperimentReport {
                method: config.method,
                top_m: params.top_m,
                k_max: params.apts.k_max,
                p: params.p,
                stride_x: params.stride_x,
                stride_y: params.stride_y,
                solve_time_s: 0.0,
                delta_solve_pct: None,
                cost_evals: 0,
                cost_terms: 0,
                space_size: 0,
                exhaustive_size: 0,
                accepted: Vec::new(),
                patch_count: None,
                error: None,
            };
            let started = Instant::now();
            match run(config.method, prepared, reference, params) {
                Ok(outcome) => {
                    report.patch_count = config
                        .link_factor
                        .map(|f| build_patches(&outcome.candidates, reference.rows(), reference.cols(), f).len());
                    report.solve_time_s = started.elapsed().as_secs_f64();
                    report.cost_evals = outcome.cost_evals();
                    report.cost_terms = outcome.cost_terms();
                    report.space_size = outcome.space_size();
                    report.exhaustive_size = outcome.exhaustive_size;
                    report.accepted = outcome.candidates;
                }
                Err(e) => report.error = Some(e.to_string()),
            }
            report
        })
        .collect();
    let baseline = reports
        .iter()
        .find(|r| r.method == Method::Exhaustive && r.error.is_none())
        .map(|r| r.solve_time_s);
    if let Some(base) = baseline.filter(|b| *b > 0.0) {
        for r in reports.iter_mut().filter(|r| r.error.is_none()) {
            r.delta_solve_pct = Some(100.0 * (r.solve_time_s - base) / base);
        }
    }
    reports
}

/// Aligned text table, one row per method.
pub fn format_table(reports: &[ExperimentReport]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<11} {:>12} {:>7} {:>10} {:>8} {:>10} {:>13} {:>9} {:>8}",
        "method", "M,Kmax,p", "stride", "solve[s]", "dsolve", "evals", "terms", "space", "accepted"
    );
    for r in reports {
        let hyper = match r.method {
            Method::Exhaustive => format!("{}", r.top_m),
            _ => format!("{},{},{}", r.top_m, r.k_max, r.p),
        };
        let delta = match (r.method, r.delta_solve_pct) {
            (Method::Exhaustive, _) | (_, None) => String::from("-"),
            (_, Some(d)) => format!("{d:+.0}%"),
        };
        if let Some(err) = &r.error {
            let _ = writeln!(out, "{:<11} {:>12} error: {err}", r.method.as_str(), hyper);
            continue;
        }
        let _ = writeln!(
            out,
            "{:<11} {:>12} {:>7} {:>10.4} {:>8} {:>10} {:>13} {:>9} {:>8}",
            r.method.as_str(),
            hyper,
            format!("{},{}", r.stride_x, r.stride_y),
            r.solve_time_s,
            delta,
            r.cost_evals,
            r.cost_terms,
            r.space_size,
            r.accepted.len()
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_intersection() {
        let a = BoundingBox { x: 0, y: 0, h: 4, w: 4 };
        assert!(a.intersects(&BoundingBox { x: 3, y: 3, h: 2, w: 2 }));
        assert!(!a.intersects(&BoundingBox { x: 4, y: 0, h: 2, w: 2 }));
        assert!(!a.intersects(&BoundingBox { x: 0, y: 4, h: 2, w: 2 }));
        assert!(!a.intersects(&BoundingBox {
            x: 10,
            y: 10,
            h: 2,
            w: 9
        }));
    }

    #[test]
    fn disk_fills_its_box_edges() {
        let disk = Shape::Disk {
            x: 0,
            y: 0,
            diameter: 30,
            color: [0, 0, 0],
        };
        assert!(disk.covers(0, 14) && disk.covers(29, 15) && disk.covers(14, 0) && disk.covers(15, 29));
        assert!(!disk.covers(0, 0) && !disk.covers(29, 29));
    }

    #[test]
    fn empty_scene_is_uniform() {
        let spec = SyntheticSpec {
            rows: 8,
            cols: 9,
            background: [1, 2, 3],
            shapes: vec![],
            noise: 0,
            seed: 0,
        };
        let scene = generate(&spec).unwrap();
        assert!(scene.truth.is_empty());
        assert_eq!(scene.image, Image::filled(8, 9, [1, 2, 3]).unwrap());
    }

    #[test]
    fn overlapping_shapes_rejected() {
        let mut spec = SyntheticSpec::planted_disks();
        spec.shapes.push(Shape::Rect {
            x: 70,
            y: 90,
            h: 5,
            w: 5,
            color: [0, 0, 0],
        });
        assert!(matches!(
            generate(&spec),
            Err(Error::OverlappingShapes { first: 0, second: 3 })
        ));
    }

    #[test]
    fn noise_bounds_checked() {
        let mut spec = SyntheticSpec::planted_disks();
        spec.noise = 129;
        assert!(generate(&spec).is_err());
        spec.noise = 0;
        spec.shapes.push(Shape::Rect {
            x: 370,
            y: 0,
            h: 10,
            w: 5,
            color: [0, 0, 0],
        });
        assert!(generate(&spec).is_err());
    }
}
