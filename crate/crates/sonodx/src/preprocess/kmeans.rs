//! K-means++ color quantization.
//!
//! Pixels are clustered in color space: k-means++ seeding (first center
//! uniform over pixels, each next one sampled with probability
//! proportional to squared distance from the chosen set), then Lloyd
//! iterations until the centers stop moving or the round budget runs
//! out. Quantization replaces every pixel with its final cluster center.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::exec;
use crate::imaging::ImageTensor;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    /// Number of clusters K.
    pub k: usize,
    /// Upper bound on Lloyd rounds.
    pub max_iterations: usize,
    /// Convergence tolerance on the largest center movement.
    pub epsilon: f64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            k: 4,
            max_iterations: 100,
            epsilon: 1e-4,
        }
    }
}

impl KMeansConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::InvalidConfig(format!(
                "k-means needs K >= 1, got {}",
                self.k
            )));
        }
        if self.epsilon < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "k-means epsilon must be >= 0, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// Outcome of a clustering run, including the per-round Lloyd objective
/// (sum of squared pixel-to-nearest-center distances after assignment).
#[derive(Clone, Debug)]
pub struct KMeansResult {
    pub centers: Vec<[f32; 3]>,
    pub assignments: Vec<u32>,
    pub objective_trace: Vec<f64>,
}

/// Clusters color vectors with k-means++ seeding and Lloyd iterations.
///
/// Empty clusters are re-seeded at the pixel farthest from its current
/// center. Deterministic for a fixed seed, with or without `parallel`.
pub fn kmeans_cluster(
    pixels: &[[f32; 3]],
    cfg: &KMeansConfig,
    seed: u64,
    parallel: bool,
) -> Result<KMeansResult> {
    cfg.validate()?;
    if pixels.is_empty() {
        return Err(Error::InvalidInput("k-means on an empty pixel set".into()));
    }
    let n = pixels.len();
    let k = cfg.k;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // k-means++ seeding.
    let mut centers: Vec<[f32; 3]> = Vec::with_capacity(k);
    centers.push(pixels[rng.gen_range(0..n)]);
    let mut min_d2: Vec<f64> = pixels.iter().map(|p| dist2(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = min_d2.iter().sum();
        let next = if total > 0.0 {
            let mut u = rng.gen::<f64>() * total;
            let mut idx = n - 1;
            for (i, &d) in min_d2.iter().enumerate() {
                if u < d {
                    idx = i;
                    break;
                }
                u -= d;
            }
            idx
        } else {
            // Fewer distinct colors than K: any pixel duplicates a center.
            rng.gen_range(0..n)
        };
        let c = pixels[next];
        for (d, p) in min_d2.iter_mut().zip(pixels) {
            *d = d.min(dist2(p, &c));
        }
        centers.push(c);
    }

    let mut assignments = vec![0u32; n];
    let mut objective_trace = Vec::new();

    for _ in 0..cfg.max_iterations {
        // Assignment.
        let assigned = exec::map_indexed(n, parallel, |i| {
            let p = &pixels[i];
            let mut best = 0u32;
            let mut best_d = f64::INFINITY;
            for (j, c) in centers.iter().enumerate() {
                let d = dist2(p, c);
                if d < best_d {
                    best_d = d;
                    best = j as u32;
                }
            }
            (best, best_d)
        });
        let mut objective = 0.0f64;
        let mut counts = vec![0usize; k];
        for (i, (a, d)) in assigned.iter().enumerate() {
            assignments[i] = *a;
            objective += d;
            counts[*a as usize] += 1;
        }
        objective_trace.push(objective);

        // Re-seed empty clusters at the farthest pixel from its center.
        let mut d2_now: Vec<f64> = assigned.iter().map(|(_, d)| *d).collect();
        for j in 0..k {
            if counts[j] > 0 {
                continue;
            }
            let far = d2_now
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap().then(b.0.cmp(&a.0)))
                .map(|(i, _)| i)
                .unwrap();
            centers[j] = pixels[far];
            let old = assignments[far] as usize;
            counts[old] -= 1;
            counts[j] += 1;
            assignments[far] = j as u32;
            d2_now[far] = 0.0;
        }

        // Update step: means per cluster, f64 accumulation.
        let mut sums = vec![[0.0f64; 3]; k];
        for (p, &a) in pixels.iter().zip(&assignments) {
            let s = &mut sums[a as usize];
            s[0] += p[0] as f64;
            s[1] += p[1] as f64;
            s[2] += p[2] as f64;
        }
        let mut movement: f64 = 0.0;
        for j in 0..k {
            if counts[j] == 0 {
                continue;
            }
            let inv = 1.0 / counts[j] as f64;
            let new = [
                (sums[j][0] * inv) as f32,
                (sums[j][1] * inv) as f32,
                (sums[j][2] * inv) as f32,
            ];
            movement = movement.max(dist2(&new, &centers[j]).sqrt());
            centers[j] = new;
        }
        if movement < cfg.epsilon {
            break;
        }
    }

    Ok(KMeansResult {
        centers,
        assignments,
        objective_trace,
    })
}

fn dist2(a: &[f32; 3], b: &[f32; 3]) -> f64 {
    let dr = (a[0] - b[0]) as f64;
    let dg = (a[1] - b[1]) as f64;
    let db = (a[2] - b[2]) as f64;
    dr * dr + dg * dg + db * db
}

/// Quantizes an image by snapping every pixel to its cluster center.
pub fn kmeanspp_quantize(img: &ImageTensor, cfg: &KMeansConfig, seed: u64) -> Result<ImageTensor> {
    kmeanspp_quantize_with(img, cfg, seed, exec::default_parallel())
}

pub fn kmeanspp_quantize_with(
    img: &ImageTensor,
    cfg: &KMeansConfig,
    seed: u64,
    parallel: bool,
) -> Result<ImageTensor> {
    let (h, w) = (img.height(), img.width());
    let c = img.channels();
    let data = img.data();
    let pixels: Vec<[f32; 3]> = (0..h * w)
        .map(|i| {
            let (y, x) = (i / w, i % w);
            let mut p = [0.0f32; 3];
            for (ch, v) in p.iter_mut().enumerate().take(c.min(3)) {
                *v = data[(y, x, ch)];
            }
            p
        })
        .collect();

    let result = kmeans_cluster(&pixels, cfg, seed, parallel)?;

    let mut out = ImageTensor::zeros(h, w, c);
    for i in 0..h * w {
        let (y, x) = (i / w, i % w);
        let center = result.centers[result.assignments[i] as usize];
        for ch in 0..c.min(3) {
            out.data_mut()[(y, x, ch)] = center[ch];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_gray_levels_are_a_fixed_point() {
        // Independent oracle: with exactly K distinct values, Lloyd's fixed
        // point assigns each level its own center, so output == input.
        let levels = [0.1f32, 0.35, 0.6, 0.9];
        let img = ImageTensor::from_fn(16, 16, 3, |y, x, _| levels[(y * 16 + x) % 4]);
        let out = kmeanspp_quantize(&img, &KMeansConfig::default(), 15).unwrap();
        assert_eq!(img, out);
    }

    #[test]
    fn constant_image_any_k() {
        let img = ImageTensor::constant(12, 12, 3, 0.77);
        for k in [1, 2, 5] {
            let cfg = KMeansConfig { k, ..Default::default() };
            let out = kmeanspp_quantize(&img, &cfg, 3).unwrap();
            assert_eq!(img, out);
        }
    }

    #[test]
    fn two_value_split_is_exact() {
        // 50 black + 50 white pixels, K=2: exhaustive check of 2-cluster
        // assignments shows {0, 1} is the optimum with SSE = 0.
        let pixels: Vec<[f32; 3]> = (0..100)
            .map(|i| if i < 50 { [0.0; 3] } else { [1.0; 3] })
            .collect();
        let cfg = KMeansConfig { k: 2, ..Default::default() };
        let result = kmeans_cluster(&pixels, &cfg, 15, false).unwrap();
        let mut centers = result.centers.clone();
        centers.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
        assert_eq!(centers[0], [0.0; 3]);
        assert_eq!(centers[1], [1.0; 3]);
        assert_eq!(*result.objective_trace.last().unwrap(), 0.0);
    }

    #[test]
    fn objective_is_non_increasing() {
        let img = ImageTensor::from_fn(32, 32, 3, |y, x, c| {
            (((y * 31 + x * 17 + c * 7) % 64) as f32) / 63.0
        });
        let cfg = KMeansConfig { k: 4, max_iterations: 50, epsilon: 0.0 };
        let out = kmeanspp_quantize(&img, &cfg, 9).unwrap();
        let pixels: Vec<[f32; 3]> = img
            .data()
            .outer_iter()
            .flat_map(|row| {
                row.outer_iter()
                    .map(|p| [p[0], p[1], p[2]])
                    .collect::<Vec<_>>()
            })
            .collect();
        let result = kmeans_cluster(&pixels, &cfg, 9, false).unwrap();
        for pair in result.objective_trace.windows(2) {
            assert!(
                pair[1] <= pair[0] + 1e-9,
                "objective increased: {} -> {}",
                pair[0],
                pair[1]
            );
        }
        // Output has at most K distinct values per channel.
        let mut distinct: std::collections::BTreeSet<[u32; 3]> = Default::default();
        for p in out.data().outer_iter() {
            for px in p.outer_iter() {
                distinct.insert([px[0].to_bits(), px[1].to_bits(), px[2].to_bits()]);
            }
        }
        assert!(distinct.len() <= 4);
    }

    #[test]
    fn rejects_zero_k() {
        let img = ImageTensor::constant(4, 4, 3, 0.5);
        let cfg = KMeansConfig { k: 0, ..Default::default() };
        assert!(kmeanspp_quantize(&img, &cfg, 1).is_err());
    }

    #[test]
    fn k_exceeding_distinct_colors_is_allowed() {
        let img = ImageTensor::from_fn(4, 4, 3, |y, _, _| if y < 2 { 0.2 } else { 0.8 });
        let cfg = KMeansConfig { k: 6, ..Default::default() };
        let out = kmeanspp_quantize(&img, &cfg, 5).unwrap();
        assert_eq!(img, out);
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let img = ImageTensor::from_fn(48, 48, 3, |y, x, c| {
            (((y * 3 + x * 5 + c) % 23) as f32) / 23.0
        });
        let cfg = KMeansConfig::default();
        let seq = kmeanspp_quantize_with(&img, &cfg, 15, false).unwrap();
        let par = kmeanspp_quantize_with(&img, &cfg, 15, true).unwrap();
        assert_eq!(seq, par);
    }
}
