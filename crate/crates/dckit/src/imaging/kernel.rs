//! Blur kernels and symmetric-boundary convolution.

use super::ImageGrid;

/// Normalized pillbox kernel of side `2 * radius + 1`.
///
/// Each entry approximates the fraction of the pixel cell covered by the
/// disk of the given radius (supersampled on a 16x16 subgrid per cell), then
/// the whole kernel is rescaled to sum exactly to 1. Entries are nonnegative,
/// so the induced blur operator has norm at most 1.
pub fn disk_kernel(radius: usize) -> ImageGrid {
    assert!(radius >= 1, "disk kernel needs radius >= 1");
    let size = 2 * radius + 1;
    let r = radius as f64;
    let sub = 16;
    let mut data = Vec::with_capacity(size * size);
    for i in 0..size {
        for j in 0..size {
            let ci = i as f64 - r;
            let cj = j as f64 - r;
            let mut hits = 0u32;
            for si in 0..sub {
                for sj in 0..sub {
                    let y = ci - 0.5 + (si as f64 + 0.5) / sub as f64;
                    let x = cj - 0.5 + (sj as f64 + 0.5) / sub as f64;
                    if y * y + x * x <= r * r {
                        hits += 1;
                    }
                }
            }
            data.push(hits as f64 / (sub * sub) as f64);
        }
    }
    let total: f64 = data.iter().sum();
    for v in &mut data {
        *v /= total;
    }
    ImageGrid::new(size, size, data).expect("disk kernel construction")
}

/// The 1x1 kernel that leaves images unchanged.
pub fn identity_kernel() -> ImageGrid {
    ImageGrid::new(1, 1, vec![1.0]).expect("identity kernel")
}

/// Reflects an out-of-range index back into `0..len` (half-sample symmetric
/// boundary, the same convention as common image-processing toolboxes).
#[inline]
fn reflect(mut i: isize, len: usize) -> usize {
    let n = len as isize;
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - 1 - i;
        } else {
            return i as usize;
        }
    }
}

fn kernel_center(kernel: &ImageGrid) -> (usize, usize) {
    assert!(
        kernel.rows() % 2 == 1 && kernel.cols() % 2 == 1,
        "kernel sides must be odd"
    );
    (kernel.rows() / 2, kernel.cols() / 2)
}

/// 2D convolution with symmetric (reflective) boundary handling.
pub fn convolve(x: &ImageGrid, kernel: &ImageGrid) -> ImageGrid {
    let (cr, cc) = kernel_center(kernel);
    let (m, n) = (x.rows(), x.cols());
    let mut out = ImageGrid::zeros(m, n);
    for i in 0..m {
        for j in 0..n {
            let mut acc = 0.0;
            for p in 0..kernel.rows() {
                for q in 0..kernel.cols() {
                    let si = reflect(i as isize - (p as isize - cr as isize), m);
                    let sj = reflect(j as isize - (q as isize - cc as isize), n);
                    acc += kernel.get(p, q) * x.get(si, sj);
                }
            }
            out.set(i, j, acc);
        }
    }
    out
}

/// Exact adjoint of [`convolve`] with the same kernel: distributes each
/// output weight back onto the source pixels the forward pass read,
/// including the reflected boundary reads.
pub fn convolve_adjoint(y: &ImageGrid, kernel: &ImageGrid) -> ImageGrid {
    let (cr, cc) = kernel_center(kernel);
    let (m, n) = (y.rows(), y.cols());
    let mut out = ImageGrid::zeros(m, n);
    for i in 0..m {
        for j in 0..n {
            let w = y.get(i, j);
            for p in 0..kernel.rows() {
                for q in 0..kernel.cols() {
                    let si = reflect(i as isize - (p as isize - cr as isize), m);
                    let sj = reflect(j as isize - (q as isize - cc as isize), n);
                    *out.at_mut(si, sj) += kernel.get(p, q) * w;
                }
            }
        }
    }
    out
}

/// Largest singular value of the blur operator on `rows x cols` images,
/// estimated by power iteration on `L^T L` from a deterministic start.
pub fn blur_operator_norm(kernel: &ImageGrid, rows: usize, cols: usize, iters: usize) -> f64 {
    let dim = rows * cols;
    let mut z: Vec<f64> = (0..dim)
        .map(|k| 1.0 + 0.01 * ((k % 17) as f64 - 8.0))
        .collect();
    let mut lambda = 0.0;
    for _ in 0..iters {
        let scale = crate::vecmath::norm(&z);
        if scale == 0.0 {
            return 0.0;
        }
        for v in &mut z {
            *v /= scale;
        }
        let zg = ImageGrid::new(rows, cols, z.clone()).expect("power iteration grid");
        let w = convolve_adjoint(&convolve(&zg, kernel), kernel).into_vec();
        lambda = crate::vecmath::dot(&z, &w);
        z = w;
    }
    lambda.max(0.0).sqrt()
}
