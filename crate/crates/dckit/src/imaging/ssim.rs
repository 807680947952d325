//! Structural similarity index for unit-range grayscale images.

use super::ImageGrid;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SsimError {
    #[error("image shapes differ: {0}x{1} vs {2}x{3}")]
    ShapeMismatch(usize, usize, usize, usize),
}

const WINDOW: usize = 11;
const WINDOW_SIGMA: f64 = 1.5;
const K1: f64 = 0.01;
const K2: f64 = 0.03;
const DYNAMIC_RANGE: f64 = 1.0;

fn gaussian_window() -> [f64; WINDOW] {
    let mut w = [0.0; WINDOW];
    let c = (WINDOW as f64 - 1.0) / 2.0;
    let mut sum = 0.0;
    for (i, v) in w.iter_mut().enumerate() {
        let d = i as f64 - c;
        *v = (-d * d / (2.0 * WINDOW_SIGMA * WINDOW_SIGMA)).exp();
        sum += *v;
    }
    for v in &mut w {
        *v /= sum;
    }
    w
}

/// Valid-mode separable correlation with a 1D window applied along both axes.
fn filter_valid(x: &ImageGrid, w: &[f64; WINDOW]) -> Vec<f64> {
    let (m, n) = (x.rows(), x.cols());
    let out_n = n - WINDOW + 1;
    // Rows first.
    let mut tmp = vec![0.0; m * out_n];
    for i in 0..m {
        for j in 0..out_n {
            let mut acc = 0.0;
            for (q, &wq) in w.iter().enumerate() {
                acc += wq * x.get(i, j + q);
            }
            tmp[i * out_n + j] = acc;
        }
    }
    let out_m = m - WINDOW + 1;
    let mut out = vec![0.0; out_m * out_n];
    for i in 0..out_m {
        for j in 0..out_n {
            let mut acc = 0.0;
            for (p, &wp) in w.iter().enumerate() {
                acc += wp * tmp[(i + p) * out_n + j];
            }
            out[i * out_n + j] = acc;
        }
    }
    out
}

fn ssim_term(mx: f64, my: f64, xx: f64, yy: f64, xy: f64) -> f64 {
    let c1 = (K1 * DYNAMIC_RANGE) * (K1 * DYNAMIC_RANGE);
    let c2 = (K2 * DYNAMIC_RANGE) * (K2 * DYNAMIC_RANGE);
    let vx = xx - mx * mx;
    let vy = yy - my * my;
    let cxy = xy - mx * my;
    ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2))
}

/// Mean structural similarity between two same-shape images.
///
/// Uses the standard 11x11 Gaussian window (sigma 1.5) with constants
/// `K1 = 0.01`, `K2 = 0.03` on a unit dynamic range, averaging the local
/// index over all fully interior window positions. Images smaller than the
/// window are compared with a single uniform window spanning the whole image.
/// `ssim(x, x) = 1` and the index is symmetric in its arguments.
pub fn ssim(x: &ImageGrid, y: &ImageGrid) -> Result<f64, SsimError> {
    if x.rows() != y.rows() || x.cols() != y.cols() {
        return Err(SsimError::ShapeMismatch(
            x.rows(),
            x.cols(),
            y.rows(),
            y.cols(),
        ));
    }
    if x.rows() < WINDOW || x.cols() < WINDOW {
        return Ok(global_ssim(x, y));
    }
    let w = gaussian_window();
    let xs = x.as_slice();
    let ys = y.as_slice();
    let sq = |s: &[f64]| -> ImageGrid {
        ImageGrid::new(x.rows(), x.cols(), s.iter().map(|v| v * v).collect())
            .expect("square grid")
    };
    let prod = ImageGrid::new(
        x.rows(),
        x.cols(),
        xs.iter().zip(ys).map(|(a, b)| a * b).collect(),
    )
    .expect("product grid");

    let mx = filter_valid(x, &w);
    let my = filter_valid(y, &w);
    let mxx = filter_valid(&sq(xs), &w);
    let myy = filter_valid(&sq(ys), &w);
    let mxy = filter_valid(&prod, &w);

    let mut acc = 0.0;
    for k in 0..mx.len() {
        acc += ssim_term(mx[k], my[k], mxx[k], myy[k], mxy[k]);
    }
    Ok(acc / mx.len() as f64)
}

fn global_ssim(x: &ImageGrid, y: &ImageGrid) -> f64 {
    let n = x.len() as f64;
    let mx = x.as_slice().iter().sum::<f64>() / n;
    let my = y.as_slice().iter().sum::<f64>() / n;
    let mxx = x.as_slice().iter().map(|v| v * v).sum::<f64>() / n;
    let myy = y.as_slice().iter().map(|v| v * v).sum::<f64>() / n;
    let mxy = x
        .as_slice()
        .iter()
        .zip(y.as_slice())
        .map(|(a, b)| a * b)
        .sum::<f64>()
        / n;
    ssim_term(mx, my, mxx, myy, mxy)
}
