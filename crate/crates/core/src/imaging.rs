//! Image storage, PNG I/O, grayscale conversion and integral images.
//!
//! Coordinates follow the row/column convention throughout the crate: `x`
//! indexes rows (`0..rows`), `y` indexes columns (`0..cols`) and `k` indexes
//! channels. Pixel data is stored row-major with interleaved channels.

use std::path::Path;

use image::{ImageFormat, RgbImage};

use crate::error::{Error, Result};

/// An 8-bit image with either three (RGB) or one (gray) channels.
#[derive(Clone, PartialEq, Eq)]
pub struct Image {
    rows: usize,
    cols: usize,
    channels: usize,
    data: Vec<u8>,
}

impl std::fmt::Debug for Image {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Image")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .field("channels", &self.channels)
            .finish_non_exhaustive()
    }
}

impl Image {
    /// Wraps a row-major, channel-interleaved buffer.
    pub fn from_raw(rows: usize, cols: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyImage { rows, cols });
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidParameter(format!(
                "images have 1 or 3 channels, got {channels}"
            )));
        }
        if data.len() != rows * cols * channels {
            return Err(Error::InvalidParameter(format!(
                "buffer of {} bytes does not match {rows}x{cols}x{channels}",
                data.len()
            )));
        }
        Ok(Self {
            rows,
            cols,
            channels,
            data,
        })
    }

    /// A uniform RGB image.
    pub fn filled(rows: usize, cols: usize, color: [u8; 3]) -> Result<Self> {
        let data = color.iter().copied().cycle().take(rows * cols * 3).collect();
        Self::from_raw(rows, cols, 3, data)
    }

    /// Builds an RGB image by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> [u8; 3]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols * 3);
        for x in 0..rows {
            for y in 0..cols {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self::from_raw(rows, cols, 3, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn as_raw(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, k: usize) -> u8 {
        self.data[(x * self.cols + y) * self.channels + k]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, k: usize, value: u8) {
        self.data[(x * self.cols + y) * self.channels + k] = value;
    }

    /// All channel values of one pixel.
    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[u8] {
        let start = (x * self.cols + y) * self.channels;
        &self.data[start..start + self.channels]
    }

    /// Channel values of row `x`, columns `y..y + w`.
    #[inline]
    pub(crate) fn row_span(&self, x: usize, y: usize, w: usize) -> &[u8] {
        let start = (x * self.cols + y) * self.channels;
        &self.data[start..start + w * self.channels]
    }

    fn put_color(&mut self, x: usize, y: usize, color: [u8; 3]) {
        let start = (x * self.cols + y) * self.channels;
        if self.channels == 3 {
            self.data[start..start + 3].copy_from_slice(&color);
        } else {
            self.data[start] = gray_value(color[0], color[1], color[2]);
        }
    }

    /// Copies the `h`x`w` window with top-left corner `(x, y)`.
    pub fn crop(&self, x: usize, y: usize, h: usize, w: usize) -> Result<Image> {
        if h == 0 || w == 0 {
            return Err(Error::EmptyImage { rows: h, cols: w });
        }
        check_window(self.rows, self.cols, x, y, h, w)?;
        let mut data = Vec::with_capacity(h * w * self.channels);
        for row in x..x + h {
            data.extend_from_slice(self.row_span(row, y, w));
        }
        Image::from_raw(h, w, self.channels, data)
    }

    /// Expands a single-channel image to three identical channels.
    pub fn to_rgb(&self) -> Image {
        if self.channels == 3 {
            return self.clone();
        }
        let data = self.data.iter().flat_map(|&v| [v, v, v]).collect();
        Image {
            rows: self.rows,
            cols: self.cols,
            channels: 3,
            data,
        }
    }

    /// Decodes a PNG held in memory. Alpha is discarded, gray is expanded to RGB.
    pub fn from_png_bytes(bytes: &[u8]) -> Result<Image> {
        let decoded = image::load_from_memory_with_format(bytes, ImageFormat::Png).map_err(Error::Decode)?;
        let rgb = decoded.to_rgb8();
        let (cols, rows) = (rgb.width() as usize, rgb.height() as usize);
        Image::from_raw(rows, cols, 3, rgb.into_raw())
    }

    /// Encodes as PNG (RGB8, or L8 for gray images).
    pub fn to_png_bytes(&self) -> std::result::Result<Vec<u8>, image::ImageError> {
        let mut out = std::io::Cursor::new(Vec::new());
        let color = if self.channels == 3 {
            image::ExtendedColorType::Rgb8
        } else {
            image::ExtendedColorType::L8
        };
        image::write_buffer_with_format(
            &mut out,
            &self.data,
            self.cols as u32,
            self.rows as u32,
            color,
            ImageFormat::Png,
        )?;
        Ok(out.into_inner())
    }

    /// Converts into an `image` crate buffer, expanding gray if necessary.
    pub fn to_rgb_image(&self) -> RgbImage {
        let rgb = self.to_rgb();
        RgbImage::from_raw(self.cols as u32, self.rows as u32, rgb.data).expect("buffer size matches dimensions")
    }
}

pub(crate) fn check_window(rows: usize, cols: usize, x: usize, y: usize, h: usize, w: usize) -> Result<()> {
    let fits = x.checked_add(h).is_some_and(|end| end <= rows) && y.checked_add(w).is_some_and(|end| end <= cols);
    if fits {
        Ok(())
    } else {
        Err(Error::WindowOutOfBounds { x, y, h, w, rows, cols })
    }
}

/// Reads a PNG file.
pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::NotFound {
                path: path.to_path_buf(),
            }
        } else {
            Error::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    })?;
    Image::from_png_bytes(&bytes)
}

/// An overlay drawn by [`save_image`] as a one-pixel outline.
#[derive(Debug, Clone, PartialEq)]
pub enum Annotation {
    /// Axis-aligned box with top-left `(x, y)`, `h` rows and `w` columns.
    /// Parts outside the image are clipped.
    Rect {
        x: i64,
        y: i64,
        h: usize,
        w: usize,
        color: [u8; 3],
    },
    /// Closed polygon through `(x, y)` vertices (rounded to pixels).
    Polygon { vertices: Vec<[f64; 2]>, color: [u8; 3] },
}

/// Writes `img` as PNG, drawing `annotations` on a copy first.
pub fn save_image(img: &Image, path: impl AsRef<Path>, annotations: &[Annotation]) -> Result<()> {
    let path = path.as_ref();
    let rendered;
    let target = if annotations.is_empty() {
        img
    } else {
        rendered = annotate(img, annotations);
        &rendered
    };
    let bytes = target.to_png_bytes().map_err(|source| Error::Encode {
        path: path.to_path_buf(),
        source,
    })?;
    std::fs::write(path, bytes).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Returns an RGB copy of `img` with the annotations drawn on it.
pub fn annotate(img: &Image, annotations: &[Annotation]) -> Image {
    let mut out = img.to_rgb();
    for annotation in annotations {
        match annotation {
            Annotation::Rect { x, y, h, w, color } => draw_rect(&mut out, *x, *y, *h, *w, *color),
            Annotation::Polygon { vertices, color } => draw_polygon(&mut out, vertices, *color),
        }
    }
    out
}

fn plot(img: &mut Image, x: i64, y: i64, color: [u8; 3]) {
    if x >= 0 && y >= 0 && (x as usize) < img.rows && (y as usize) < img.cols {
        img.put_color(x as usize, y as usize, color);
    }
}

fn draw_rect(img: &mut Image, x: i64, y: i64, h: usize, w: usize, color: [u8; 3]) {
    if h == 0 || w == 0 {
        return;
    }
    let (bottom, right) = (x + h as i64 - 1, y + w as i64 - 1);
    for col in y..=right {
        plot(img, x, col, color);
        plot(img, bottom, col, color);
    }
    for row in x..=bottom {
        plot(img, row, y, color);
        plot(img, row, right, color);
    }
}

fn draw_polygon(img: &mut Image, vertices: &[[f64; 2]], color: [u8; 3]) {
    let points: Vec<(i64, i64)> = vertices
        .iter()
        .map(|v| (v[0].round() as i64, v[1].round() as i64))
        .collect();
    match points.len() {
        0 => {}
        1 => plot(img, points[0].0, points[0].1, color),
        n => {
            for i in 0..n {
                draw_line(img, points[i], points[(i + 1) % n], color);
            }
        }
    }
}

// Bresenham, all octants.
fn draw_line(img: &mut Image, from: (i64, i64), to: (i64, i64), color: [u8; 3]) {
    let (mut x, mut y) = from;
    let dx = (to.0 - x).abs();
    let dy = -(to.1 - y).abs();
    let sx = if x < to.0 { 1 } else { -1 };
    let sy = if y < to.1 { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        plot(img, x, y, color);
        if (x, y) == to {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

/// Weighted RGB average `0.299 R + 0.587 G + 0.114 B`, rounded to nearest with
/// ties away from zero. Computed exactly in integer thousandths.
#[inline]
pub fn gray_value(r: u8, g: u8, b: u8) -> u8 {
    let weighted = 299 * r as u32 + 587 * g as u32 + 114 * b as u32;
    ((weighted + 500) / 1000).min(255) as u8
}

/// Single-channel grayscale version of an RGB image. Gray input is returned
/// unchanged; use [`Image::to_rgb`] for the three-channel view.
pub fn to_gray(img: &Image) -> Image {
    if img.channels == 1 {
        return img.clone();
    }
    let data = img.data.chunks_exact(3).map(|p| gray_value(p[0], p[1], p[2])).collect();
    Image {
        rows: img.rows,
        cols: img.cols,
        channels: 1,
        data,
    }
}

/// Per-channel summed-area table with a zero border row and column.
///
/// Entry `(x, y, k)` holds the sum of channel `k` over rows `< x` and
/// columns `< y`, so any rectangle sum costs four lookups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntegralImage {
    rows: usize,
    cols: usize,
    channels: usize,
    sums: Vec<u64>,
}

impl IntegralImage {
    pub fn new(img: &Image) -> Self {
        let (rows, cols, channels) = (img.rows, img.cols, img.channels);
        let stride = (cols + 1) * channels;
        let mut sums = vec![0u64; (rows + 1) * stride];
        let mut running = vec![0u64; channels];
        for x in 0..rows {
            running.iter_mut().for_each(|v| *v = 0);
            for y in 0..cols {
                for k in 0..channels {
                    running[k] += img.get(x, y, k) as u64;
                    let above = sums[x * stride + (y + 1) * channels + k];
                    sums[(x + 1) * stride + (y + 1) * channels + k] = above + running[k];
                }
            }
        }
        Self {
            rows,
            cols,
            channels,
            sums,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Raw table entry: sum over rows `< x`, columns `< y`.
    #[inline]
    pub fn at(&self, x: usize, y: usize, k: usize) -> u64 {
        self.sums[(x * (self.cols + 1) + y) * self.channels + k]
    }

    /// Sum of channel `k` over the `h`x`w` window at `(x, y)`.
    pub fn rect_sum(&self, x: usize, y: usize, h: usize, w: usize, k: usize) -> Result<u64> {
        check_window(self.rows, self.cols, x, y, h, w)?;
        if k >= self.channels {
            return Err(Error::InvalidParameter(format!(
                "channel {k} out of range for {}-channel image",
                self.channels
            )));
        }
        Ok(self.rect_sum_unchecked(x, y, h, w, k))
    }

    #[inline]
    pub(crate) fn rect_sum_unchecked(&self, x: usize, y: usize, h: usize, w: usize, k: usize) -> u64 {
        debug_assert!(x + h <= self.rows && y + w <= self.cols);
        self.at(x + h, y + w, k) + self.at(x, y, k) - self.at(x, y + w, k) - self.at(x + h, y, k)
    }
}

/// Convenience wrapper for [`IntegralImage::new`].
pub fn integral_image(img: &Image) -> IntegralImage {
    IntegralImage::new(img)
}
