//! Unsupervised preprocessing between rescaling and the U-Net.
//!
//! Two interchangeable methods cluster the 128×128 input before
//! segmentation: SLIC superpixels rendered as per-cluster means (the
//! default), or k-means++ color quantization. `None` feeds the resized
//! image through untouched for ablation runs.

mod kmeans;
mod slic;

pub use kmeans::{kmeans_cluster, kmeanspp_quantize, kmeanspp_quantize_with, KMeansConfig, KMeansResult};
pub use slic::{
    render_superpixel_means, slic_segment, slic_segment_with, SlicConfig, SuperpixelLabelMap,
};

use serde::{Deserialize, Serialize};

use crate::imaging::ImageTensor;
use crate::{Error, Result};

/// Which unsupervised clustering step runs before the U-Net.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PreprocessMode {
    #[default]
    Slic,
    KMeansPp,
    None,
}

impl PreprocessMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "slic" => Ok(PreprocessMode::Slic),
            "kmeanspp" | "kmeans++" | "kmeans" => Ok(PreprocessMode::KMeansPp),
            "none" => Ok(PreprocessMode::None),
            other => Err(Error::InvalidConfig(format!(
                "unknown preprocess mode '{other}' (expected slic, kmeanspp or none)"
            ))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            PreprocessMode::Slic => "slic",
            PreprocessMode::KMeansPp => "kmeanspp",
            PreprocessMode::None => "none",
        }
    }
}

impl std::fmt::Display for PreprocessMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Runs the configured clustering step on an already-resized image.
pub fn unsupervised_segment(
    img: &ImageTensor,
    mode: PreprocessMode,
    slic_cfg: &SlicConfig,
    kmeans_cfg: &KMeansConfig,
    seed: u64,
) -> Result<ImageTensor> {
    match mode {
        PreprocessMode::Slic => {
            let labels = slic_segment(img, slic_cfg)?;
            render_superpixel_means(img, &labels)
        }
        PreprocessMode::KMeansPp => kmeanspp_quantize(img, kmeans_cfg, seed),
        PreprocessMode::None => Ok(img.clone()),
    }
}
