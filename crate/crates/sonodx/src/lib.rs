//! End-to-end breast-ultrasound diagnosis pipeline.
//!
//! `sonodx` turns a raw breast ultrasound image into a diagnosis in three
//! stages:
//!
//! 1. **Preprocess** — rescale to 128×128, run unsupervised superpixel
//!    clustering (SLIC by default, k-means++ color quantization as an
//!    alternative) and normalize pixels to `[0, 1]`.
//! 2. **Segment** — a modified U-Net predicts a per-pixel tumor
//!    probability mask from the clustered image.
//! 3. **Classify** — a frozen convolutional backbone (VGG16 by default)
//!    extracts features from the predicted mask, and a five-layer tanh
//!    dense head maps them to benign / malignant / normal.
//!
//! The crate also ships the training side of the pipeline
//! ([`pipeline::run_training`]) and a metrics engine
//! ([`evaluation`]) that produces per-class precision/recall/F1,
//! support-weighted averages and cross-class consistency standard
//! deviations.
//!
//! Data-parallel inner loops (per-pixel SLIC assignment, k-means
//! assignment, per-sample forward/backward passes) run on rayon when the
//! default `parallel` feature is enabled and fall back to sequential
//! loops without it. Results are bitwise identical either way: parallel
//! maps are index-ordered and all reductions happen sequentially.

pub mod backbone;
pub mod checkpoint;
pub mod classifier;
pub mod dataset;
mod error;
pub mod evaluation;
pub(crate) mod exec;
pub mod imaging;
pub mod nn;
pub mod pipeline;
pub mod preprocess;
pub mod synth;
pub mod unet;

pub use error::{Error, Result};
