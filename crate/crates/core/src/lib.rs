//! Sub-image search accelerated by projecting the image onto per-axis time
//! series, segmenting them, and scanning only placements near the
//! segmentation instants.
//!
//! Coordinates follow the row/column convention throughout: `x` is the row,
//! `y` the column, `k` the channel. A placement `(x, y)` is the top-left
//! corner of a reference-sized window.
//!
//! ```
//! use subsearch::{run, Image, Method, PreparedImage, SearchParams};
//!
//! let mut img = Image::filled(60, 80, [255, 255, 255]).unwrap();
//! for x in 20..26 {
//!     for y in 30..38 {
//!         img.set(x, y, 0, 0);
//!     }
//! }
//! let reference = img.crop(20, 30, 6, 8).unwrap();
//! let prepared = PreparedImage::new(img);
//! let outcome = run(Method::AptsV1, &prepared, &reference, &SearchParams::default()).unwrap();
//! assert_eq!((outcome.candidates[0].x, outcome.candidates[0].y), (20, 30));
//! ```

pub mod bench;
pub mod error;
pub mod imaging;
pub mod patches;
pub mod prepared;
pub mod profile;
pub mod report;
pub mod search;
pub mod searchspace;
pub mod segmentation;
pub mod timeseries;

pub use error::{Error, Result};
pub use imaging::{integral_image, load_image, save_image, to_gray, Annotation, Image, IntegralImage};
pub use patches::{build_patches, Patch, PatchContour};
pub use prepared::PreparedImage;
pub use profile::{cost_profile, run_apts_v2};
pub use report::{execute, RunOptions, RunReport};
pub use search::{
    cost_ssd, filter_nonoverlap, run, run_apts_v1, run_exhaustive, Candidate, Method, SearchOutcome, SearchParams,
};
pub use searchspace::{exhaustive_space, reduced_space, SearchSpace};
pub use segmentation::{segment, AptsParams, Segmentation};
pub use timeseries::{project, reduce_reference, Axis, MultiSeries};
