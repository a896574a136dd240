//! Synthetic ultrasound-like fixtures.
//!
//! Real scan data cannot ship with the crate, so smoke tests and the
//! CLI examples generate speckled grayscale images with elliptical
//! "lesions": benign cases get a smooth ellipse, malignant cases a
//! jagged star-shaped blob, normal cases no lesion and an all-zero mask.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::ClassLabel;
use crate::imaging::{ImageTensor, MaskTensor};
use crate::{Error, Result};

/// One synthetic case at `size×size` source resolution.
pub fn synth_case(label: ClassLabel, seed: u64, size: usize) -> (ImageTensor, MaskTensor) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (label.index() as u64) << 32);
    let s = size as f32;

    let cx = s * rng.gen_range(0.38..0.62);
    let cy = s * rng.gen_range(0.38..0.62);
    let rx = s * rng.gen_range(0.16..0.28);
    let ry = s * rng.gen_range(0.16..0.28);
    let spikes = rng.gen_range(5..9) as f32;
    let spike_phase = rng.gen_range(0.0..std::f32::consts::TAU);
    let jag = match label {
        ClassLabel::Malignant => 0.35,
        _ => 0.0,
    };

    let mut mask = MaskTensor::zeros(size, size);
    if label != ClassLabel::Normal {
        for y in 0..size {
            for x in 0..size {
                let dx = (x as f32 - cx) / rx;
                let dy = (y as f32 - cy) / ry;
                let r = (dx * dx + dy * dy).sqrt();
                let theta = dy.atan2(dx);
                let boundary = 1.0 + jag * (spikes * theta + spike_phase).sin();
                if r < boundary {
                    mask.data_mut()[(y, x)] = 1.0;
                }
            }
        }
    }

    let mut img = ImageTensor::zeros(size, size, 3);
    for y in 0..size {
        for x in 0..size {
            let speckle: f32 = rng.gen_range(-1.0..1.0);
            let shade = 0.05 * ((y as f32 / s) * std::f32::consts::PI).sin();
            let base = if mask.data()[(y, x)] > 0.5 { 0.14 } else { 0.48 + shade };
            let v = (base + 0.10 * speckle).clamp(0.0, 1.0);
            for c in 0..3 {
                img.data_mut()[(y, x, c)] = v;
            }
        }
    }
    (img, mask)
}

/// Writes a synthetic dataset in the scanner's on-disk layout:
/// `<root>/{benign,malignant,normal}/<class> (<n>).png` plus mask
/// siblings. Every fifth benign case is written with two mask files
/// whose union is the full lesion, exercising multi-mask merging.
pub fn write_synth_dataset(
    root: &Path,
    counts: [usize; 3],
    seed: u64,
    size: usize,
) -> Result<()> {
    for label in ClassLabel::ALL {
        let dir = root.join(label.dir_name());
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for n in 1..=counts[label.index()] {
            let case_seed = seed
                .wrapping_mul(0x9e37_79b9)
                .wrapping_add((label.index() * 100_000 + n) as u64);
            let (img, mask) = synth_case(label, case_seed, size);
            let base = format!("{} ({n})", label.dir_name());
            img.save_png(&dir.join(format!("{base}.png")))?;

            let split_masks = label == ClassLabel::Benign && n % 5 == 0;
            if split_masks {
                let left = MaskTensor::from_fn(size, size, |y, x| {
                    if x < size / 2 { mask.data()[(y, x)] } else { 0.0 }
                });
                let right = MaskTensor::from_fn(size, size, |y, x| {
                    if x >= size / 2 { mask.data()[(y, x)] } else { 0.0 }
                });
                left.save_png(&dir.join(format!("{base}_mask.png")))?;
                right.save_png(&dir.join(format!("{base}_mask_1.png")))?;
            } else {
                mask.save_png(&dir.join(format!("{base}_mask.png")))?;
            }
        }
    }
    Ok(())
}
