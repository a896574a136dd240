//! Image and mask tensors plus the pixel-level preprocessing primitives
//! (bilinear rescale, `[0, 1]` normalization, PNG round trips).

use std::path::Path;

use image::{DynamicImage, GrayImage, RgbImage};
use ndarray::{Array2, Array3};

use crate::{Error, Result};

/// Side length of the network input; everything is resampled to this.
pub const INPUT_SIZE: usize = 128;

/// An `H×W×C` float image with values in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageTensor {
    data: Array3<f32>,
}

impl ImageTensor {
    pub fn new(data: Array3<f32>) -> Result<Self> {
        let (h, w, c) = data.dim();
        if h == 0 || w == 0 || c == 0 {
            return Err(Error::InvalidInput(format!(
                "zero-sized image tensor ({h}x{w}x{c})"
            )));
        }
        Ok(Self { data })
    }

    pub fn zeros(h: usize, w: usize, c: usize) -> Self {
        Self {
            data: Array3::zeros((h, w, c)),
        }
    }

    pub fn from_fn(h: usize, w: usize, c: usize, f: impl Fn(usize, usize, usize) -> f32) -> Self {
        Self {
            data: Array3::from_shape_fn((h, w, c), |(y, x, ch)| f(y, x, ch)),
        }
    }

    /// Constant-valued image; handy in tests.
    pub fn constant(h: usize, w: usize, c: usize, value: f32) -> Self {
        Self {
            data: Array3::from_elem((h, w, c), value),
        }
    }

    pub fn height(&self) -> usize {
        self.data.dim().0
    }

    pub fn width(&self) -> usize {
        self.data.dim().1
    }

    pub fn channels(&self) -> usize {
        self.data.dim().2
    }

    pub fn data(&self) -> &Array3<f32> {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut Array3<f32> {
        &mut self.data
    }

    pub fn into_data(self) -> Array3<f32> {
        self.data
    }

    /// Mean over all pixels and channels, accumulated in f64.
    pub fn mean(&self) -> f64 {
        let sum: f64 = self.data.iter().map(|&v| v as f64).sum();
        sum / self.data.len() as f64
    }

    /// Decodes a PNG/JPEG into an `H×W×3` tensor in `[0, 1]`.
    ///
    /// Grayscale sources are replicated across the three channels so every
    /// downstream consumer sees the same input contract.
    pub fn open(path: &Path) -> Result<Self> {
        let img = image::open(path).map_err(|source| Error::ImageDecode {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(Self::from_dynamic(&img))
    }

    pub fn from_dynamic(img: &DynamicImage) -> Self {
        let rgb = img.to_rgb8();
        let (w, h) = rgb.dimensions();
        let data = Array3::from_shape_fn((h as usize, w as usize, 3), |(y, x, c)| {
            rgb.get_pixel(x as u32, y as u32).0[c] as f32 / 255.0
        });
        Self { data }
    }

    /// Encodes the first three channels as 8-bit RGB.
    pub fn to_rgb8(&self) -> RgbImage {
        assert!(self.channels() >= 3, "to_rgb8 needs 3 channels");
        RgbImage::from_fn(self.width() as u32, self.height() as u32, |x, y| {
            let px = |c: usize| {
                (self.data[(y as usize, x as usize, c)].clamp(0.0, 1.0) * 255.0).round() as u8
            };
            image::Rgb([px(0), px(1), px(2)])
        })
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        self.to_rgb8()
            .save(path)
            .map_err(|source| Error::ImageDecode {
                path: path.to_path_buf(),
                source,
            })
    }

    /// Bilinear resample (half-pixel centers) with output clamped to `[0, 1]`.
    ///
    /// Resampling to the source size reproduces the input exactly.
    pub fn resize_bilinear(&self, out_h: usize, out_w: usize) -> Result<Self> {
        if out_h == 0 || out_w == 0 {
            return Err(Error::InvalidInput("zero-sized resize target".into()));
        }
        let (h, w, c) = self.data.dim();
        let scale_y = h as f32 / out_h as f32;
        let scale_x = w as f32 / out_w as f32;
        let mut out = Array3::zeros((out_h, out_w, c));
        for oy in 0..out_h {
            let sy = ((oy as f32 + 0.5) * scale_y - 0.5).clamp(0.0, (h - 1) as f32);
            let y0 = sy.floor() as usize;
            let y1 = (y0 + 1).min(h - 1);
            let fy = sy - y0 as f32;
            for ox in 0..out_w {
                let sx = ((ox as f32 + 0.5) * scale_x - 0.5).clamp(0.0, (w - 1) as f32);
                let x0 = sx.floor() as usize;
                let x1 = (x0 + 1).min(w - 1);
                let fx = sx - x0 as f32;
                for ch in 0..c {
                    let top = self.data[(y0, x0, ch)] * (1.0 - fx) + self.data[(y0, x1, ch)] * fx;
                    let bot = self.data[(y1, x0, ch)] * (1.0 - fx) + self.data[(y1, x1, ch)] * fx;
                    out[(oy, ox, ch)] = (top * (1.0 - fy) + bot * fy).clamp(0.0, 1.0);
                }
            }
        }
        Ok(Self { data: out })
    }
}

/// Rescales an image to the 128×128 network input, channels preserved.
pub fn resize_to_input(img: &ImageTensor) -> Result<ImageTensor> {
    img.resize_bilinear(INPUT_SIZE, INPUT_SIZE)
}

/// Maps pixel values into `[0, 1]`.
///
/// Images still in the raw byte range are divided by 255; images already
/// in `[0, 1]` pass through unchanged, so the operation is idempotent.
pub fn normalize_pixels(img: &ImageTensor) -> ImageTensor {
    let max = img.data.iter().cloned().fold(f32::NEG_INFINITY, f32::max);
    if max <= 1.0 {
        img.clone()
    } else {
        ImageTensor {
            data: img.data.mapv(|v| v / 255.0),
        }
    }
}

/// An `H×W` mask holding either per-pixel probabilities in `[0, 1]` or a
/// hard `{0, 1}` segmentation.
#[derive(Clone, Debug, PartialEq)]
pub struct MaskTensor {
    data: Array2<f32>,
}

impl MaskTensor {
    pub fn new(data: Array2<f32>) -> Self {
        Self { data }
    }

    pub fn zeros(h: usize, w: usize) -> Self {
        Self {
            data: Array2::zeros((h, w)),
        }
    }

    pub fn from_fn(h: usize, w: usize, f: impl Fn(usize, usize) -> f32) -> Self {
        Self {
            data: Array2::from_shape_fn((h, w), |(y, x)| f(y, x)),
        }
    }

    pub fn height(&self) -> usize {
        self.data.dim().0
    }

    pub fn width(&self) -> usize {
        self.data.dim().1
    }

    pub fn data(&self) -> &Array2<f32> {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut Array2<f32> {
        &mut self.data
    }

    /// Sum of all pixel values (f64 accumulation).
    pub fn sum(&self) -> f64 {
        self.data.iter().map(|&v| v as f64).sum()
    }

    /// Hard-thresholds the mask at `threshold` into `{0, 1}`.
    pub fn binarize(&self, threshold: f32) -> MaskTensor {
        MaskTensor {
            data: self.data.mapv(|v| if v > threshold { 1.0 } else { 0.0 }),
        }
    }

    /// Pixelwise union (max) of two binary masks.
    pub fn union(&self, other: &MaskTensor) -> Result<MaskTensor> {
        if self.data.dim() != other.data.dim() {
            return Err(Error::shape(
                "mask union",
                format!("{:?}", self.data.dim()),
                format!("{:?}", other.data.dim()),
            ));
        }
        let mut data = self.data.clone();
        data.zip_mut_with(&other.data, |a, &b| *a = a.max(b));
        Ok(MaskTensor { data })
    }

    /// Decodes an image file as a mask: grayscale values mapped to `[0, 1]`
    /// and binarized at 0.5.
    pub fn open_binarized(path: &Path) -> Result<Self> {
        let img = image::open(path).map_err(|source| Error::ImageDecode {
            path: path.to_path_buf(),
            source,
        })?;
        let gray = img.to_luma8();
        let (w, h) = gray.dimensions();
        let data = Array2::from_shape_fn((h as usize, w as usize), |(y, x)| {
            let v = gray.get_pixel(x as u32, y as u32).0[0] as f32 / 255.0;
            if v > 0.5 {
                1.0
            } else {
                0.0
            }
        });
        Ok(Self { data })
    }

    /// Bilinear resample followed by re-binarization at 0.5.
    pub fn resize_binarized(&self, out_h: usize, out_w: usize) -> Result<MaskTensor> {
        let as_img = ImageTensor {
            data: self
                .data
                .clone()
                .insert_axis(ndarray::Axis(2)),
        };
        let resized = as_img.resize_bilinear(out_h, out_w)?;
        let data = resized.data.index_axis(ndarray::Axis(2), 0).to_owned();
        Ok(MaskTensor { data }.binarize(0.5))
    }

    pub fn to_gray8(&self) -> GrayImage {
        GrayImage::from_fn(self.width() as u32, self.height() as u32, |x, y| {
            image::Luma([(self.data[(y as usize, x as usize)].clamp(0.0, 1.0) * 255.0).round()
                as u8])
        })
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        self.to_gray8()
            .save(path)
            .map_err(|source| Error::ImageDecode {
                path: path.to_path_buf(),
                source,
            })
    }
}
