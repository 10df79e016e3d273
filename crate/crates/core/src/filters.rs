//! Small raster operations on row-major planes and masks.

/// 3×3 binomial smoothing (`[1,2,1] ⊗ [1,2,1] / 16`) with edge replication.
pub fn smooth3x3(plane: &[f64], width: usize, height: usize) -> Vec<f64> {
    assert_eq!(plane.len(), width * height);
    let clamp = |v: isize, hi: usize| v.clamp(0, hi as isize - 1) as usize;
    let mut rows = vec![0.0; plane.len()];
    for y in 0..height {
        for x in 0..width {
            let l = plane[y * width + clamp(x as isize - 1, width)];
            let r = plane[y * width + clamp(x as isize + 1, width)];
            rows[y * width + x] = (l + 2.0 * plane[y * width + x] + r) / 4.0;
        }
    }
    let mut out = vec![0.0; plane.len()];
    for y in 0..height {
        let up = clamp(y as isize - 1, height);
        let down = clamp(y as isize + 1, height);
        for x in 0..width {
            out[y * width + x] =
                (rows[up * width + x] + 2.0 * rows[y * width + x] + rows[down * width + x]) / 4.0;
        }
    }
    out
}

/// Separable Gaussian blur with standard deviation `sigma`, radius `ceil(3 sigma)`, and
/// edge replication. `sigma <= 0` returns the input unchanged.
pub fn gaussian_blur(plane: &[f64], width: usize, height: usize, sigma: f64) -> Vec<f64> {
    if !(sigma > 0.0) {
        return plane.to_vec();
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let mut kernel: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|k| *k /= total);

    let mut tmp = vec![0.0; plane.len()];
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for (i, k) in kernel.iter().enumerate() {
                let sx = (x as isize + i as isize - radius).clamp(0, width as isize - 1) as usize;
                acc += k * plane[y * width + sx];
            }
            tmp[y * width + x] = acc;
        }
    }
    let mut out = vec![0.0; plane.len()];
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for (i, k) in kernel.iter().enumerate() {
                let sy = (y as isize + i as isize - radius).clamp(0, height as isize - 1) as usize;
                acc += k * tmp[sy * width + x];
            }
            out[y * width + x] = acc;
        }
    }
    out
}

/// One step of 3×3 (Chebyshev) binary dilation.
fn dilate_once(mask: &[bool], width: usize, height: usize) -> Vec<bool> {
    let mut out = mask.to_vec();
    for y in 0..height {
        for x in 0..width {
            if mask[y * width + x] {
                continue;
            }
            'search: for dy in -1isize..=1 {
                for dx in -1isize..=1 {
                    let (nx, ny) = (x as isize + dx, y as isize + dy);
                    if nx >= 0 && ny >= 0 && (nx as usize) < width && (ny as usize) < height
                        && mask[ny as usize * width + nx as usize]
                    {
                        out[y * width + x] = true;
                        break 'search;
                    }
                }
            }
        }
    }
    out
}

/// Pixels within Chebyshev distance `steps` of a set pixel, by iterated 3×3 dilation.
pub fn dilate_square(mask: &[bool], width: usize, height: usize, steps: usize) -> Vec<bool> {
    let mut out = mask.to_vec();
    for _ in 0..steps {
        out = dilate_once(&out, width, height);
    }
    out
}

/// Pixels within Euclidean distance `radius` of a set pixel.
pub fn dilate_disk(mask: &[bool], width: usize, height: usize, radius: f64) -> Vec<bool> {
    let r = radius.floor() as isize;
    let r2 = radius * radius;
    let offsets: Vec<(isize, isize)> = (-r..=r)
        .flat_map(|dy| (-r..=r).map(move |dx| (dx, dy)))
        .filter(|&(dx, dy)| ((dx * dx + dy * dy) as f64) <= r2)
        .collect();
    let mut out = mask.to_vec();
    for y in 0..height {
        for x in 0..width {
            if !mask[y * width + x] {
                continue;
            }
            for &(dx, dy) in &offsets {
                let (nx, ny) = (x as isize + dx, y as isize + dy);
                if nx >= 0 && ny >= 0 && (nx as usize) < width && (ny as usize) < height {
                    out[ny as usize * width + nx as usize] = true;
                }
            }
        }
    }
    out
}

/// Erosion by a Euclidean disk, the dual of [`dilate_disk`]. Outside the image counts as set.
pub fn erode_disk(mask: &[bool], width: usize, height: usize, radius: f64) -> Vec<bool> {
    let inverted: Vec<bool> = mask.iter().map(|&m| !m).collect();
    dilate_disk(&inverted, width, height, radius).into_iter().map(|m| !m).collect()
}

/// Mask pixels with a 4-neighbor outside the mask; the image border counts as outside.
pub fn mask_boundary(mask: &[bool], width: usize, height: usize) -> Vec<bool> {
    let mut out = vec![false; mask.len()];
    for y in 0..height {
        for x in 0..width {
            let j = y * width + x;
            if !mask[j] {
                continue;
            }
            out[j] = x == 0
                || y == 0
                || x + 1 == width
                || y + 1 == height
                || !mask[j - 1]
                || !mask[j + 1]
                || !mask[j - width]
                || !mask[j + width];
        }
    }
    out
}

/// Pixels with a 4-neighbor carrying a different label.
pub fn label_boundary(labels: &[u32], width: usize, height: usize) -> Vec<bool> {
    let mut out = vec![false; labels.len()];
    for y in 0..height {
        for x in 0..width {
            let j = y * width + x;
            let l = labels[j];
            out[j] = (x > 0 && labels[j - 1] != l)
                || (x + 1 < width && labels[j + 1] != l)
                || (y > 0 && labels[j - width] != l)
                || (y + 1 < height && labels[j + width] != l);
        }
    }
    out
}
