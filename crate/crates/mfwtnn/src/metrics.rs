//! Restoration quality metrics for [0, 1]-scaled cubes.
//!
//! All four scores treat the cube as a stack of spatial bands: PSNR and SSIM
//! average per-band scores, ERGAS aggregates per-band relative RMSE, and the
//! spectral angle averages over pixels. Peak signal is fixed at 1.

use ndarray::{Array2, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::tensor3::Cube;

/// PSNR of an exact match; also the cap for near-exact ones.
pub const PSNR_CAP: f64 = 100.0;
/// SSIM window: 11 x 11 Gaussian, sigma 1.5, applied with valid borders.
pub const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

#[derive(Clone, Debug)]
pub struct MetricsReport {
    pub mpsnr: f64,
    pub mssim: f64,
    pub ergas: f64,
    pub msam: f64,
    pub band_psnr: Vec<f64>,
    pub band_ssim: Vec<f64>,
}

fn check_dims(reference: &Cube, estimate: &Cube) -> Result<()> {
    if reference.dims() != estimate.dims() {
        return Err(Error::DimMismatch(format!(
            "reference {:?} vs estimate {:?}",
            reference.dims(),
            estimate.dims()
        )));
    }
    Ok(())
}

/// PSNR of one band against peak 1, capped at [`PSNR_CAP`].
pub fn band_psnr(reference: ArrayView2<f64>, estimate: ArrayView2<f64>) -> f64 {
    let n = reference.len() as f64;
    let mse = reference
        .iter()
        .zip(estimate.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / n;
    if mse == 0.0 {
        return PSNR_CAP;
    }
    (-10.0 * mse.log10()).min(PSNR_CAP)
}

/// Mean PSNR over bands.
pub fn mpsnr(reference: &Cube, estimate: &Cube) -> Result<(f64, Vec<f64>)> {
    check_dims(reference, estimate)?;
    let per_band: Vec<f64> = reference
        .data
        .axis_iter(Axis(2))
        .zip(estimate.data.axis_iter(Axis(2)))
        .map(|(r, e)| band_psnr(r, e))
        .collect();
    Ok((per_band.iter().sum::<f64>() / per_band.len() as f64, per_band))
}

fn gaussian_kernel() -> [f64; SSIM_WINDOW] {
    let mut k = [0.0; SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    let mut sum = 0.0;
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - c;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
        sum += *v;
    }
    for v in k.iter_mut() {
        *v /= sum;
    }
    k
}

/// Valid-region separable Gaussian filter; output is (n1-10) x (n2-10).
fn filter_valid(img: ArrayView2<f64>, kernel: &[f64; SSIM_WINDOW]) -> Array2<f64> {
    let (n1, n2) = img.dim();
    let m2 = n2 - SSIM_WINDOW + 1;
    let mut rows = Array2::zeros((n1, m2));
    for i in 0..n1 {
        for j in 0..m2 {
            let mut acc = 0.0;
            for (t, w) in kernel.iter().enumerate() {
                acc += w * img[[i, j + t]];
            }
            rows[[i, j]] = acc;
        }
    }
    let m1 = n1 - SSIM_WINDOW + 1;
    let mut out = Array2::zeros((m1, m2));
    for j in 0..m2 {
        for i in 0..m1 {
            let mut acc = 0.0;
            for (t, w) in kernel.iter().enumerate() {
                acc += w * rows[[i + t, j]];
            }
            out[[i, j]] = acc;
        }
    }
    out
}

/// Mean structural similarity of one band, Gaussian-windowed.
pub fn band_ssim(reference: ArrayView2<f64>, estimate: ArrayView2<f64>) -> Result<f64> {
    let (n1, n2) = reference.dim();
    if n1 < SSIM_WINDOW || n2 < SSIM_WINDOW {
        return Err(Error::InvalidArgument(format!(
            "ssim needs bands of at least {SSIM_WINDOW} x {SSIM_WINDOW}, got {n1} x {n2}"
        )));
    }
    let kernel = gaussian_kernel();
    let c1 = SSIM_K1 * SSIM_K1;
    let c2 = SSIM_K2 * SSIM_K2;
    let mu_x = filter_valid(reference, &kernel);
    let mu_y = filter_valid(estimate, &kernel);
    let xx = filter_valid((&reference.to_owned() * &reference).view(), &kernel);
    let yy = filter_valid((&estimate.to_owned() * &estimate).view(), &kernel);
    let xy = filter_valid((&reference.to_owned() * &estimate).view(), &kernel);
    let mut acc = 0.0;
    for ((i, j), &mx) in mu_x.indexed_iter() {
        let my = mu_y[[i, j]];
        // identical inputs must score exactly 1, so numerator and denominator
        // are written to be the same floating-point expression in that case
        let mxx = mx * mx;
        let myy = my * my;
        let mxy = mx * my;
        let sx = xx[[i, j]] - mxx;
        let sy = yy[[i, j]] - myy;
        let sxy = xy[[i, j]] - mxy;
        let num = (2.0 * mxy + c1) * (2.0 * sxy + c2);
        let den = (mxx + myy + c1) * (sx + sy + c2);
        acc += num / den;
    }
    Ok(acc / mu_x.len() as f64)
}

/// Mean SSIM over bands.
pub fn mssim(reference: &Cube, estimate: &Cube) -> Result<(f64, Vec<f64>)> {
    check_dims(reference, estimate)?;
    let per_band = reference
        .data
        .axis_iter(Axis(2))
        .zip(estimate.data.axis_iter(Axis(2)))
        .map(|(r, e)| band_ssim(r, e))
        .collect::<Result<Vec<f64>>>()?;
    Ok((per_band.iter().sum::<f64>() / per_band.len() as f64, per_band))
}

/// Relative global dimensionless error, resolution ratio 1, factor 100.
/// Bands whose reference mean is zero cannot be normalized and are skipped
/// with a warning.
pub fn ergas(reference: &Cube, estimate: &Cube) -> Result<f64> {
    check_dims(reference, estimate)?;
    let (n1, n2, _) = reference.dims();
    let n = (n1 * n2) as f64;
    let mut acc = 0.0;
    let mut used = 0usize;
    for (k, (r, e)) in reference
        .data
        .axis_iter(Axis(2))
        .zip(estimate.data.axis_iter(Axis(2)))
        .enumerate()
    {
        let mean = r.iter().sum::<f64>() / n;
        if mean == 0.0 {
            eprintln!("warning: ergas skips band {} (zero reference mean)", k + 1);
            continue;
        }
        let mse = r
            .iter()
            .zip(e.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / n;
        acc += mse / (mean * mean);
        used += 1;
    }
    if used == 0 {
        return Err(Error::Numeric(
            "ergas undefined: every reference band has zero mean".into(),
        ));
    }
    Ok(100.0 * (acc / used as f64).sqrt())
}

/// Mean spectral angle in degrees, averaged over pixels. Pixels where either
/// spectrum has zero norm carry no angle and are skipped.
pub fn msam(reference: &Cube, estimate: &Cube) -> Result<f64> {
    check_dims(reference, estimate)?;
    let (n1, n2, n3) = reference.dims();
    let mut acc = 0.0;
    let mut used = 0usize;
    for i in 0..n1 {
        for j in 0..n2 {
            let mut dot = 0.0;
            let mut nr = 0.0;
            let mut ne = 0.0;
            for k in 0..n3 {
                let a = reference.data[[i, j, k]];
                let b = estimate.data[[i, j, k]];
                dot += a * b;
                nr += a * a;
                ne += b * b;
            }
            if nr == 0.0 || ne == 0.0 {
                continue;
            }
            // squaring first makes identical spectra give cos^2 of exactly 1,
            // so the angle of a self-comparison is exactly zero
            let cos_sqr = ((dot * dot) / (nr * ne)).min(1.0);
            let cos = dot.signum() * cos_sqr.sqrt();
            acc += cos.acos().to_degrees();
            used += 1;
        }
    }
    if used == 0 {
        return Err(Error::Numeric(
            "spectral angle undefined: every pixel has a zero-norm spectrum".into(),
        ));
    }
    let skipped = n1 * n2 - used;
    if skipped > 0 {
        eprintln!("warning: spectral angle skips {skipped} zero-norm pixels");
    }
    Ok(acc / used as f64)
}

/// Computes all four scores at once.
pub fn evaluate(reference: &Cube, estimate: &Cube) -> Result<MetricsReport> {
    let (mpsnr, band_psnr) = mpsnr(reference, estimate)?;
    let (mssim, band_ssim) = mssim(reference, estimate)?;
    let ergas = ergas(reference, estimate)?;
    let msam = msam(reference, estimate)?;
    Ok(MetricsReport {
        mpsnr,
        mssim,
        ergas,
        msam,
        band_psnr,
        band_ssim,
    })
}
