//! SLIC superpixel clustering.
//!
//! Localized k-means over (color, position): centers start on a regular
//! grid, get nudged to the lowest-gradient spot in their 3×3
//! neighborhood, then pixels are iteratively assigned to the nearest
//! center within a 2S×2S window under
//! `D = sqrt(d_color² + (d_spatial / S)² · m²)`
//! and centers move to their cluster means. A final pass reattaches
//! stray connected components so every label is one 4-connected region.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::exec;
use crate::imaging::ImageTensor;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlicConfig {
    /// Grid spacing S between initial centers, in pixels.
    pub region_size: usize,
    /// Compactness weight m: larger values favor square superpixels.
    pub ruler: f32,
    /// Assignment/update rounds.
    pub iterations: usize,
    /// Reattach stray components to an adjacent superpixel afterwards.
    pub enforce_connectivity: bool,
}

impl Default for SlicConfig {
    fn default() -> Self {
        Self {
            region_size: 20,
            ruler: 10.0,
            iterations: 100,
            enforce_connectivity: true,
        }
    }
}

impl SlicConfig {
    pub fn validate(&self) -> Result<()> {
        if self.region_size < 2 {
            return Err(Error::InvalidConfig(format!(
                "SLIC region size must be >= 2, got {}",
                self.region_size
            )));
        }
        if !(self.ruler > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "SLIC ruler must be > 0, got {}",
                self.ruler
            )));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("SLIC needs at least 1 iteration".into()));
        }
        Ok(())
    }
}

/// Per-pixel superpixel assignment. Labels are dense in `0..n_labels`.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperpixelLabelMap {
    labels: Array2<u32>,
    n_labels: usize,
}

impl SuperpixelLabelMap {
    pub fn labels(&self) -> &Array2<u32> {
        &self.labels
    }

    pub fn n_labels(&self) -> usize {
        self.n_labels
    }

    pub fn height(&self) -> usize {
        self.labels.dim().0
    }

    pub fn width(&self) -> usize {
        self.labels.dim().1
    }
}

#[derive(Clone, Copy)]
struct Center {
    color: [f32; 3],
    x: f32,
    y: f32,
}

pub fn slic_segment(img: &ImageTensor, cfg: &SlicConfig) -> Result<SuperpixelLabelMap> {
    slic_segment_with(img, cfg, exec::default_parallel())
}

/// Same as [`slic_segment`] with explicit control over the parallel
/// assignment loop; both settings produce identical label maps.
pub fn slic_segment_with(
    img: &ImageTensor,
    cfg: &SlicConfig,
    parallel: bool,
) -> Result<SuperpixelLabelMap> {
    cfg.validate()?;
    let (h, w) = (img.height(), img.width());
    let s = cfg.region_size;
    if s > h || s > w {
        return Err(Error::InvalidConfig(format!(
            "SLIC region size {s} exceeds image side ({h}x{w})"
        )));
    }

    let data = img.data();
    let channels = img.channels().min(3);
    let pixel = |y: usize, x: usize| -> [f32; 3] {
        let mut c = [0.0f32; 3];
        for (ch, v) in c.iter_mut().enumerate().take(channels) {
            *v = data[(y, x, ch)];
        }
        c
    };

    // Regular grid of ceil(side / S) centers per axis, spread evenly.
    let ny = h.div_ceil(s);
    let nx = w.div_ceil(s);
    let mut centers: Vec<Center> = Vec::with_capacity(nx * ny);
    for gy in 0..ny {
        for gx in 0..nx {
            let cy = (((gy as f32 + 0.5) * h as f32 / ny as f32) - 0.5)
                .round()
                .clamp(0.0, (h - 1) as f32) as usize;
            let cx = (((gx as f32 + 0.5) * w as f32 / nx as f32) - 0.5)
                .round()
                .clamp(0.0, (w - 1) as f32) as usize;
            let (py, px) = lowest_gradient_neighbor(img, cy, cx);
            centers.push(Center {
                color: pixel(py, px),
                x: px as f32,
                y: py as f32,
            });
        }
    }

    // Start from the spatially nearest center so every pixel is labeled
    // even before the first windowed pass.
    let mut labels: Vec<u32> = (0..h * w)
        .map(|i| {
            let (y, x) = (i / w, i % w);
            let mut best = 0u32;
            let mut best_d = f32::INFINITY;
            for (k, c) in centers.iter().enumerate() {
                let dx = x as f32 - c.x;
                let dy = y as f32 - c.y;
                let d = dx * dx + dy * dy;
                if d < best_d {
                    best_d = d;
                    best = k as u32;
                }
            }
            best
        })
        .collect();

    let inv_s2 = 1.0f32 / (s * s) as f32;
    let m2 = cfg.ruler * cfg.ruler;
    let window = s as isize;

    for _ in 0..cfg.iterations {
        // Assignment: candidates are centers whose 2S×2S window covers the
        // pixel; the current label stays unless someone is strictly closer.
        let rows = exec::map_indexed(h, parallel, |y| {
            let mut row = Vec::with_capacity(w);
            let mut changed = false;
            for x in 0..w {
                let col = pixel(y, x);
                let current = labels[y * w + x];
                let mut best = current;
                let mut best_d = slic_distance2(&centers[current as usize], &col, x, y, inv_s2, m2);
                for (k, c) in centers.iter().enumerate() {
                    let dx = x as isize - c.x.round() as isize;
                    let dy = y as isize - c.y.round() as isize;
                    if dx.abs() > window || dy.abs() > window || k as u32 == current {
                        continue;
                    }
                    let d = slic_distance2(c, &col, x, y, inv_s2, m2);
                    if d < best_d || (d == best_d && (k as u32) < best) {
                        best_d = d;
                        best = k as u32;
                    }
                }
                changed |= best != current;
                row.push(best);
            }
            (row, changed)
        });

        let mut any_changed = false;
        for (y, (row, changed)) in rows.into_iter().enumerate() {
            any_changed |= changed;
            labels[y * w..(y + 1) * w].copy_from_slice(&row);
        }

        // Center update: cluster means over color and position.
        let k = centers.len();
        let mut sums = vec![[0.0f64; 5]; k];
        let mut counts = vec![0usize; k];
        for y in 0..h {
            for x in 0..w {
                let l = labels[y * w + x] as usize;
                let col = pixel(y, x);
                sums[l][0] += col[0] as f64;
                sums[l][1] += col[1] as f64;
                sums[l][2] += col[2] as f64;
                sums[l][3] += x as f64;
                sums[l][4] += y as f64;
                counts[l] += 1;
            }
        }
        for (c, (sum, &n)) in centers.iter_mut().zip(sums.iter().zip(&counts)) {
            if n > 0 {
                let inv = 1.0 / n as f64;
                c.color = [
                    (sum[0] * inv) as f32,
                    (sum[1] * inv) as f32,
                    (sum[2] * inv) as f32,
                ];
                c.x = (sum[3] * inv) as f32;
                c.y = (sum[4] * inv) as f32;
            }
        }

        if !any_changed {
            break;
        }
    }

    let grid = Array2::from_shape_vec((h, w), labels).expect("label grid shape");
    let map = if cfg.enforce_connectivity {
        enforce_connectivity(grid)
    } else {
        compact_labels(grid)
    };
    Ok(map)
}

fn slic_distance2(c: &Center, color: &[f32; 3], x: usize, y: usize, inv_s2: f32, m2: f32) -> f32 {
    let dc = (color[0] - c.color[0]).powi(2)
        + (color[1] - c.color[1]).powi(2)
        + (color[2] - c.color[2]).powi(2);
    let dx = x as f32 - c.x;
    let dy = y as f32 - c.y;
    dc + (dx * dx + dy * dy) * inv_s2 * m2
}

/// Sum of squared color differences against the 4-neighbors; centers are
/// nudged to the lowest-gradient spot in their 3×3 neighborhood.
fn lowest_gradient_neighbor(img: &ImageTensor, cy: usize, cx: usize) -> (usize, usize) {
    let (h, w) = (img.height(), img.width());
    let data = img.data();
    let c = img.channels();
    let grad = |y: usize, x: usize| -> f32 {
        let mut g = 0.0;
        let neighbors = [
            (y.wrapping_sub(1), x),
            (y + 1, x),
            (y, x.wrapping_sub(1)),
            (y, x + 1),
        ];
        for (ny, nx) in neighbors {
            if ny < h && nx < w {
                for ch in 0..c {
                    let d = data[(ny, nx, ch)] - data[(y, x, ch)];
                    g += d * d;
                }
            }
        }
        g
    };
    let mut best = (cy, cx);
    let mut best_g = f32::INFINITY;
    for dy in -1isize..=1 {
        for dx in -1isize..=1 {
            let y = cy as isize + dy;
            let x = cx as isize + dx;
            if y < 0 || x < 0 || y as usize >= h || x as usize >= w {
                continue;
            }
            let g = grad(y as usize, x as usize);
            if g < best_g {
                best_g = g;
                best = (y as usize, x as usize);
            }
        }
    }
    best
}

/// Splits the map into 4-connected components, keeps the largest
/// component of every label, and folds each stray into the adjacent
/// label it touches most. Labels are then compacted to `0..n_labels`.
fn enforce_connectivity(grid: Array2<u32>) -> SuperpixelLabelMap {
    let (h, w) = grid.dim();
    let mut comp = Array2::from_elem((h, w), usize::MAX);
    let mut comp_pixels: Vec<Vec<(usize, usize)>> = Vec::new();
    let mut comp_label: Vec<u32> = Vec::new();

    for y in 0..h {
        for x in 0..w {
            if comp[(y, x)] != usize::MAX {
                continue;
            }
            let id = comp_pixels.len();
            let label = grid[(y, x)];
            let mut pixels = Vec::new();
            let mut stack = vec![(y, x)];
            comp[(y, x)] = id;
            while let Some((py, px)) = stack.pop() {
                pixels.push((py, px));
                for (ny, nx) in neighbors4(py, px, h, w) {
                    if comp[(ny, nx)] == usize::MAX && grid[(ny, nx)] == label {
                        comp[(ny, nx)] = id;
                        stack.push((ny, nx));
                    }
                }
            }
            comp_pixels.push(pixels);
            comp_label.push(label);
        }
    }

    // Largest component per label survives; ties go to the first seen.
    let n_raw = comp_label.iter().copied().max().map_or(0, |m| m as usize + 1);
    let mut largest: Vec<Option<usize>> = vec![None; n_raw];
    for (id, pixels) in comp_pixels.iter().enumerate() {
        let l = comp_label[id] as usize;
        match largest[l] {
            Some(best) if comp_pixels[best].len() >= pixels.len() => {}
            _ => largest[l] = Some(id),
        }
    }

    let mut resolved = grid.clone();
    let mut is_resolved = Array2::from_elem((h, w), false);
    for (id, pixels) in comp_pixels.iter().enumerate() {
        if largest[comp_label[id] as usize] == Some(id) {
            for &(y, x) in pixels {
                is_resolved[(y, x)] = true;
            }
        }
    }

    let mut pending: Vec<usize> = (0..comp_pixels.len())
        .filter(|&id| largest[comp_label[id] as usize] != Some(id))
        .collect();

    // Strays adjacent to resolved territory merge into the neighbor label
    // they touch most; enclosed strays wait for an outer stray to resolve.
    while !pending.is_empty() {
        let mut next = Vec::new();
        let mut progressed = false;
        for id in pending {
            let mut contact: std::collections::BTreeMap<u32, usize> = Default::default();
            for &(y, x) in &comp_pixels[id] {
                for (ny, nx) in neighbors4(y, x, h, w) {
                    if comp[(ny, nx)] != id && is_resolved[(ny, nx)] {
                        *contact.entry(resolved[(ny, nx)]).or_default() += 1;
                    }
                }
            }
            match contact.iter().max_by_key(|(label, n)| (**n, std::cmp::Reverse(**label))) {
                Some((&target, _)) => {
                    for &(y, x) in &comp_pixels[id] {
                        resolved[(y, x)] = target;
                        is_resolved[(y, x)] = true;
                    }
                    progressed = true;
                }
                None => next.push(id),
            }
        }
        assert!(progressed, "stray superpixel components cannot all be enclosed");
        pending = next;
    }

    compact_labels(resolved)
}

/// Renumbers labels to `0..n` in order of first appearance (raster scan).
fn compact_labels(grid: Array2<u32>) -> SuperpixelLabelMap {
    let mut mapping: std::collections::HashMap<u32, u32> = Default::default();
    let mut next = 0u32;
    let labels = grid.mapv(|l| {
        *mapping.entry(l).or_insert_with(|| {
            let v = next;
            next += 1;
            v
        })
    });
    SuperpixelLabelMap {
        labels,
        n_labels: next as usize,
    }
}

fn neighbors4(y: usize, x: usize, h: usize, w: usize) -> impl Iterator<Item = (usize, usize)> {
    [
        (y.wrapping_sub(1), x),
        (y + 1, x),
        (y, x.wrapping_sub(1)),
        (y, x + 1),
    ]
    .into_iter()
    .filter(move |&(ny, nx)| ny < h && nx < w)
}

/// Replaces every pixel with the mean color of its superpixel — the
/// clustered rendering handed to the segmentation network.
pub fn render_superpixel_means(
    img: &ImageTensor,
    labels: &SuperpixelLabelMap,
) -> Result<ImageTensor> {
    let (h, w, c) = (img.height(), img.width(), img.channels());
    if (labels.height(), labels.width()) != (h, w) {
        return Err(Error::shape(
            "superpixel rendering",
            format!("{h}x{w}"),
            format!("{}x{}", labels.height(), labels.width()),
        ));
    }
    let n = labels.n_labels();
    let mut sums = vec![0.0f64; n * c];
    let mut counts = vec![0usize; n];
    let data = img.data();
    for y in 0..h {
        for x in 0..w {
            let l = labels.labels()[(y, x)] as usize;
            if l >= n {
                return Err(Error::InvalidInput(format!(
                    "superpixel label {l} out of range (n_labels = {n})"
                )));
            }
            counts[l] += 1;
            for ch in 0..c {
                sums[l * c + ch] += data[(y, x, ch)] as f64;
            }
        }
    }
    let mut out = ImageTensor::zeros(h, w, c);
    for y in 0..h {
        for x in 0..w {
            let l = labels.labels()[(y, x)] as usize;
            for ch in 0..c {
                out.data_mut()[(y, x, ch)] = (sums[l * c + ch] / counts[l] as f64) as f32;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_partition(map: &SuperpixelLabelMap) {
        let mut seen = vec![false; map.n_labels()];
        for &l in map.labels().iter() {
            assert!((l as usize) < map.n_labels());
            seen[l as usize] = true;
        }
        assert!(seen.iter().all(|&s| s), "labels must be dense");
    }

    #[test]
    fn grid_count_on_constant_image() {
        let img = ImageTensor::constant(128, 128, 3, 0.5);
        let map = slic_segment(&img, &SlicConfig::default()).unwrap();
        assert_partition(&map);
        assert!(map.n_labels() <= 49, "n_labels = {}", map.n_labels());
        // Color is uniform, so the spatial term tiles the plane: the full
        // 7x7 grid survives connectivity enforcement.
        assert_eq!(map.n_labels(), 49);
    }

    #[test]
    fn each_label_is_one_connected_component() {
        let img = ImageTensor::from_fn(96, 96, 3, |y, x, _| {
            (((y / 9) * 31 + (x / 7) * 17) % 11) as f32 / 11.0
        });
        let cfg = SlicConfig {
            region_size: 16,
            ..SlicConfig::default()
        };
        let map = slic_segment(&img, &cfg).unwrap();
        assert_partition(&map);
        let (h, w) = (map.height(), map.width());
        let mut seen_comp = vec![0usize; map.n_labels()];
        let mut visited = Array2::from_elem((h, w), false);
        for y in 0..h {
            for x in 0..w {
                if visited[(y, x)] {
                    continue;
                }
                let label = map.labels()[(y, x)];
                seen_comp[label as usize] += 1;
                let mut stack = vec![(y, x)];
                visited[(y, x)] = true;
                while let Some((py, px)) = stack.pop() {
                    for (ny, nx) in neighbors4(py, px, h, w) {
                        if !visited[(ny, nx)] && map.labels()[(ny, nx)] == label {
                            visited[(ny, nx)] = true;
                            stack.push((ny, nx));
                        }
                    }
                }
            }
        }
        for (label, &n) in seen_comp.iter().enumerate() {
            assert_eq!(n, 1, "label {label} split into {n} components");
        }
    }

    #[test]
    fn two_tone_edge_alignment() {
        // Two uniform vertical halves; the superpixel boundary must sit on
        // the color edge. Oracle: with converged centers, brute-force
        // evaluation of the distance puts every pixel with the centers on
        // its own side of x = 64.
        let img = ImageTensor::from_fn(128, 128, 3, |_, x, _| if x < 64 { 0.0 } else { 1.0 });
        let cfg = SlicConfig {
            region_size: 64,
            ..SlicConfig::default()
        };
        let map = slic_segment(&img, &cfg).unwrap();
        assert_partition(&map);
        for y in 0..128 {
            for x in 0..128 {
                let left_of_edge = x < 64;
                let label = map.labels()[(y, x)];
                // Every label must live entirely on one side of the edge,
                // within 1 px of slack at the boundary column.
                for x2 in 0..128 {
                    if map.labels()[(y, x2)] == label {
                        let same_side = (x2 < 64) == left_of_edge;
                        let near_edge = (x as i32 - 64).abs() <= 1 || (x2 as i32 - 64).abs() <= 1;
                        assert!(
                            same_side || near_edge,
                            "label {label} crosses the color edge at y={y}: x={x}, x2={x2}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_region_size_larger_than_image() {
        let img = ImageTensor::constant(32, 32, 3, 0.1);
        let cfg = SlicConfig {
            region_size: 40,
            ..SlicConfig::default()
        };
        assert!(slic_segment(&img, &cfg).is_err());
    }

    #[test]
    fn render_constant_unchanged() {
        let img = ImageTensor::constant(64, 64, 3, 0.3);
        let map = slic_segment(&img, &SlicConfig { region_size: 16, ..Default::default() }).unwrap();
        let out = render_superpixel_means(&img, &map).unwrap();
        for &v in out.data().iter() {
            assert!((v - 0.3).abs() < 1e-6);
        }
    }

    #[test]
    fn render_single_label_gives_global_mean() {
        let img = ImageTensor::from_fn(16, 16, 3, |y, x, _| ((y * 16 + x) % 256) as f32 / 255.0);
        let map = SuperpixelLabelMap {
            labels: Array2::zeros((16, 16)),
            n_labels: 1,
        };
        let out = render_superpixel_means(&img, &map).unwrap();
        let mean = img.mean();
        for &v in out.data().iter() {
            assert!((v as f64 - mean).abs() < 1e-6);
        }
    }

    #[test]
    fn render_two_regions_exact() {
        let img = ImageTensor::from_fn(8, 8, 3, |_, x, _| if x < 4 { 0.0 } else { 1.0 });
        let labels = Array2::from_shape_fn((8, 8), |(_, x)| if x < 4 { 0u32 } else { 1u32 });
        let map = SuperpixelLabelMap { labels, n_labels: 2 };
        let out = render_superpixel_means(&img, &map).unwrap();
        for y in 0..8 {
            for x in 0..8 {
                let expect = if x < 4 { 0.0 } else { 1.0 };
                assert_eq!(out.data()[(y, x, 0)], expect);
            }
        }
    }

    #[test]
    fn render_rejects_out_of_range_label() {
        let img = ImageTensor::constant(4, 4, 3, 0.5);
        let mut labels = Array2::zeros((4, 4));
        labels[(0, 0)] = 7u32;
        let map = SuperpixelLabelMap { labels, n_labels: 2 };
        assert!(render_superpixel_means(&img, &map).is_err());
    }

    #[test]
    fn render_preserves_global_mean() {
        let img = ImageTensor::from_fn(128, 128, 3, |y, x, c| {
            (((y * 7 + x * 13 + c * 29) % 97) as f32) / 96.0
        });
        let map = slic_segment(&img, &SlicConfig::default()).unwrap();
        let out = render_superpixel_means(&img, &map).unwrap();
        assert!((img.mean() - out.mean()).abs() < 1e-6);
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let img = ImageTensor::from_fn(64, 64, 3, |y, x, _| ((y * 3 + x * 5) % 17) as f32 / 17.0);
        let cfg = SlicConfig {
            region_size: 12,
            iterations: 10,
            ..SlicConfig::default()
        };
        let seq = slic_segment_with(&img, &cfg, false).unwrap();
        let par = slic_segment_with(&img, &cfg, true).unwrap();
        assert_eq!(seq, par);
    }
}
