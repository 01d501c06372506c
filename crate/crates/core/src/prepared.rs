use std::sync::OnceLock;

use crate::imaging::{Image, IntegralImage};
use crate::timeseries::{project, Axis, MultiSeries};

/// An image together with lazily built derived data that repeated searches
/// on the same image can share.
#[derive(Debug)]
pub struct PreparedImage {
    image: Image,
    integral: OnceLock<IntegralImage>,
    rows_series: OnceLock<MultiSeries>,
    cols_series: OnceLock<MultiSeries>,
}

impl PreparedImage {
    pub fn new(image: Image) -> Self {
        Self {
            image,
            integral: OnceLock::new(),
            rows_series: OnceLock::new(),
            cols_series: OnceLock::new(),
        }
    }

    pub fn image(&self) -> &Image {
        &self.image
    }

    pub fn integral(&self) -> &IntegralImage {
        self.integral.get_or_init(|| IntegralImage::new(&self.image))
    }

    pub fn series(&self, axis: Axis) -> &MultiSeries {
        let cell = match axis {
            Axis::Rows => &self.rows_series,
            Axis::Cols => &self.cols_series,
        };
        cell.get_or_init(|| project(&self.image, axis))
    }

    /// Whether the integral image and both series have been built.
    pub fn is_warm(&self) -> bool {
        self.integral.get().is_some() && self.rows_series.get().is_some() && self.cols_series.get().is_some()
    }

    /// Builds every cache entry now.
    pub fn warm(&self) {
        self.integral();
        self.series(Axis::Rows);
        self.series(Axis::Cols);
    }
}

impl From<Image> for PreparedImage {
    fn from(image: Image) -> Self {
        Self::new(image)
    }
}
