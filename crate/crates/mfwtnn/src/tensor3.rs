//! Third-order tensor container and mode-3 Fourier machinery.
//!
//! A `Cube` holds an n1 x n2 x n3 real tensor. Storage is row-major with the
//! third index fastest, so every tube x(i,j,:) is contiguous and the FFT along
//! mode 3 runs straight over memory. `permute` rotates a cube so that any of
//! the three modes becomes the tube axis, which is how the same spectral
//! machinery serves all three directions:
//!
//!   X(i,j,k) = X_1(j,k,i) = X_2(k,i,j) = X_3(i,j,k)
//!
//! The forward transform is unnormalized; the inverse carries the 1/n3 factor.
//! Because inputs are real, the spectrum of any cube satisfies
//! conj(slice k) = slice n3-k+2 (1-based), slice 1 real. `ifft_mode3` checks
//! that property indirectly: it refuses to discard an imaginary residue larger
//! than `SYMMETRY_RTOL` times the norm of the result.

use std::sync::Arc;

use ndarray::{Array3, Axis};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Relative bound on the imaginary residue `ifft_mode3` will silently drop.
pub const SYMMETRY_RTOL: f64 = 1e-8;

/// Tensor mode, used to pick the tube axis for permutations and spectra.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    M1,
    M2,
    M3,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::M1, Mode::M2, Mode::M3];

    pub fn index(self) -> usize {
        match self {
            Mode::M1 => 0,
            Mode::M2 => 1,
            Mode::M3 => 2,
        }
    }

    pub fn number(self) -> u8 {
        self.index() as u8 + 1
    }

    pub fn from_number(p: u8) -> Result<Mode> {
        match p {
            1 => Ok(Mode::M1),
            2 => Ok(Mode::M2),
            3 => Ok(Mode::M3),
            _ => Err(Error::InvalidArgument(format!(
                "mode must be 1, 2 or 3, got {p}"
            ))),
        }
    }
}

/// Real third-order tensor. All public constructors reject non-finite values
/// and zero-length dimensions; operations in this crate preserve both.
#[derive(Clone, Debug, PartialEq)]
pub struct Cube {
    pub data: Array3<f64>,
}

impl Cube {
    pub fn zeros(dims: (usize, usize, usize)) -> Result<Self> {
        check_dims(dims)?;
        Ok(Cube {
            data: Array3::zeros(dims),
        })
    }

    pub fn from_array(data: Array3<f64>) -> Result<Self> {
        check_dims(data.dim())?;
        let cube = Cube {
            data: to_standard(data),
        };
        cube.validate_finite()?;
        Ok(cube)
    }

    /// Builds a cube from values laid out tube-major (third index fastest).
    pub fn from_vec(dims: (usize, usize, usize), values: Vec<f64>) -> Result<Self> {
        check_dims(dims)?;
        let expected = dims.0 * dims.1 * dims.2;
        if values.len() != expected {
            return Err(Error::DimMismatch(format!(
                "{}x{}x{} cube needs {expected} values, got {}",
                dims.0,
                dims.1,
                dims.2,
                values.len()
            )));
        }
        let data = Array3::from_shape_vec(dims, values).expect("length checked above");
        Cube::from_array(data)
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.data.dim()
    }

    pub fn validate_finite(&self) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(i) => Err(Error::Numeric(format!(
                "non-finite value at flat index {i}"
            ))),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn l1_norm(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn inner(&self, other: &Cube) -> Result<f64> {
        if self.dims() != other.dims() {
            return Err(Error::DimMismatch(format!(
                "inner product of {:?} and {:?}",
                self.dims(),
                other.dims()
            )));
        }
        Ok(self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| a * b)
            .sum())
    }
}

/// Mode-3 spectrum of a cube. `origin` records which mode permutation the
/// source cube came from, purely as bookkeeping for multi-directional solvers.
#[derive(Clone, Debug)]
pub struct FreqCube {
    pub data: Array3<Complex64>,
    pub origin: Mode,
}

impl FreqCube {
    pub fn dims(&self) -> (usize, usize, usize) {
        self.data.dim()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

fn check_dims(dims: (usize, usize, usize)) -> Result<()> {
    if dims.0 == 0 || dims.1 == 0 || dims.2 == 0 {
        return Err(Error::InvalidArgument(format!(
            "cube dimensions must be positive, got {}x{}x{}",
            dims.0, dims.1, dims.2
        )));
    }
    Ok(())
}

fn to_standard(a: Array3<f64>) -> Array3<f64> {
    if a.is_standard_layout() {
        a
    } else {
        a.as_standard_layout().into_owned()
    }
}

/// Rotates the cube so that mode `p` becomes the tube axis.
pub fn permute(x: &Cube, p: Mode) -> Cube {
    let axes = match p {
        Mode::M3 => return x.clone(),
        Mode::M1 => [1, 2, 0],
        Mode::M2 => [2, 0, 1],
    };
    Cube {
        data: x
            .data
            .view()
            .permuted_axes(axes)
            .as_standard_layout()
            .into_owned(),
    }
}

/// Undoes `permute(_, p)`. Round-trips are index copies, hence bit-exact.
pub fn ipermute(x: &Cube, p: Mode) -> Cube {
    let axes = match p {
        Mode::M3 => return x.clone(),
        Mode::M1 => [2, 0, 1],
        Mode::M2 => [1, 2, 0],
    };
    Cube {
        data: x
            .data
            .view()
            .permuted_axes(axes)
            .as_standard_layout()
            .into_owned(),
    }
}

/// Number of frontal spectrum slices that carry independent information;
/// the remaining ones are conjugate mirrors.
pub fn half_spectrum(n3: usize) -> usize {
    n3 / 2 + 1
}

/// Index of the conjugate partner of spectrum slice `k` (0-based).
pub fn mirror_slice(k: usize, n3: usize) -> usize {
    (n3 - k) % n3
}

fn run_tubes(fft: &Arc<dyn Fft<f64>>, buf: &mut [Complex64], n3: usize) {
    buf.par_chunks_exact_mut(n3).for_each_init(
        || vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()],
        |scratch, tube| fft.process_with_scratch(tube, scratch),
    );
}

/// Unnormalized DFT along every tube.
pub fn fft_mode3(x: &Cube) -> FreqCube {
    let dims = x.dims();
    let std = x.data.as_standard_layout();
    let mut buf: Vec<Complex64> = std
        .as_slice()
        .expect("standard layout")
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    let fft = FftPlanner::new().plan_fft_forward(dims.2);
    run_tubes(&fft, &mut buf, dims.2);
    FreqCube {
        data: Array3::from_shape_vec(dims, buf).expect("shape preserved"),
        origin: Mode::M3,
    }
}

/// Inverse transform (scaled by 1/n3) without the symmetry check. Returns the
/// real part, the largest dropped imaginary magnitude, and the Frobenius norm
/// of the full complex result.
pub fn ifft_mode3_parts(xf: &FreqCube) -> (Cube, f64, f64) {
    let dims = xf.dims();
    let std = xf.data.as_standard_layout();
    let mut buf: Vec<Complex64> = std.as_slice().expect("standard layout").to_vec();
    let fft = FftPlanner::new().plan_fft_inverse(dims.2);
    run_tubes(&fft, &mut buf, dims.2);
    let scale = 1.0 / dims.2 as f64;
    let mut max_imag = 0.0_f64;
    let mut norm_sq = 0.0_f64;
    let mut real = Vec::with_capacity(buf.len());
    for z in &buf {
        let re = z.re * scale;
        let im = z.im * scale;
        norm_sq += re * re + im * im;
        max_imag = max_imag.max(im.abs());
        real.push(re);
    }
    let cube = Cube {
        data: Array3::from_shape_vec(dims, real).expect("shape preserved"),
    };
    (cube, max_imag, norm_sq.sqrt())
}

/// Inverse transform of a conjugate-symmetric spectrum. Errors if the
/// imaginary residue exceeds `SYMMETRY_RTOL` relative to the result norm.
pub fn ifft_mode3(xf: &FreqCube) -> Result<Cube> {
    let (cube, max_imag, norm) = ifft_mode3_parts(xf);
    if max_imag > SYMMETRY_RTOL * norm {
        return Err(Error::Symmetry(format!(
            "imaginary residue {max_imag:.3e} exceeds {SYMMETRY_RTOL:.0e} * norm ({norm:.3e})"
        )));
    }
    Ok(cube)
}

/// Frobenius norm of one frontal spectrum slice.
pub fn slice_norm_sqr(xf: &FreqCube, k: usize) -> f64 {
    xf.data
        .index_axis(Axis(2), k)
        .iter()
        .map(|z| z.norm_sqr())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cube(dims: (usize, usize, usize), seed: u64) -> Cube {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = dims.0 * dims.1 * dims.2;
        let values: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Cube::from_vec(dims, values).unwrap()
    }

    /// O(n3^2) reference transform, one tube at a time.
    fn naive_dft(x: &Cube) -> Array3<Complex64> {
        let (n1, n2, n3) = x.dims();
        let mut out = Array3::from_elem((n1, n2, n3), Complex64::new(0.0, 0.0));
        for i in 0..n1 {
            for j in 0..n2 {
                for t in 0..n3 {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for k in 0..n3 {
                        let ang = -2.0 * std::f64::consts::PI * (t * k) as f64 / n3 as f64;
                        acc += x.data[[i, j, k]] * Complex64::new(ang.cos(), ang.sin());
                    }
                    out[[i, j, t]] = acc;
                }
            }
        }
        out
    }

    #[test]
    fn permute_follows_index_law() {
        let (n1, n2, n3) = (3, 4, 5);
        let x = Cube::from_vec(
            (n1, n2, n3),
            (0..n1 * n2 * n3).map(|v| v as f64).collect(),
        )
        .unwrap();
        let x1 = permute(&x, Mode::M1);
        let x2 = permute(&x, Mode::M2);
        let x3 = permute(&x, Mode::M3);
        assert_eq!(x1.dims(), (n2, n3, n1));
        assert_eq!(x2.dims(), (n3, n1, n2));
        assert_eq!(x3.dims(), (n1, n2, n3));
        for i in 0..n1 {
            for j in 0..n2 {
                for k in 0..n3 {
                    let v = x.data[[i, j, k]];
                    assert_eq!(x1.data[[j, k, i]], v);
                    assert_eq!(x2.data[[k, i, j]], v);
                    assert_eq!(x3.data[[i, j, k]], v);
                }
            }
        }
    }

    #[test]
    fn permute_roundtrip_is_bit_exact() {
        let x = random_cube((4, 3, 6), 11);
        for p in Mode::ALL {
            let back = ipermute(&permute(&x, p), p);
            assert_eq!(back.data, x.data);
        }
    }

    #[test]
    fn fft_matches_naive_dft() {
        let x = random_cube((4, 4, 4), 3);
        let xf = fft_mode3(&x);
        let oracle = naive_dft(&x);
        let mut worst = 0.0_f64;
        for (a, b) in xf.data.iter().zip(oracle.iter()) {
            worst = worst.max((a - b).norm());
        }
        assert!(worst <= 1e-12, "max deviation {worst:.3e}");
    }

    #[test]
    fn constant_tubes_concentrate_in_slice_zero() {
        let (n1, n2, n3) = (3, 2, 5);
        let mut x = Cube::zeros((n1, n2, n3)).unwrap();
        for i in 0..n1 {
            for j in 0..n2 {
                let c = (i + 2 * j) as f64 * 0.25 + 0.1;
                for k in 0..n3 {
                    x.data[[i, j, k]] = c;
                }
            }
        }
        let xf = fft_mode3(&x);
        for i in 0..n1 {
            for j in 0..n2 {
                let dc = xf.data[[i, j, 0]];
                let want = n3 as f64 * x.data[[i, j, 0]];
                assert!((dc - Complex64::new(want, 0.0)).norm() <= 1e-12);
                for k in 1..n3 {
                    assert!(xf.data[[i, j, k]].norm() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn fft_ifft_roundtrip() {
        for (dims, seed) in [((4, 5, 6), 5_u64), ((3, 3, 7), 6), ((2, 2, 1), 7)] {
            let x = random_cube(dims, seed);
            let back = ifft_mode3(&fft_mode3(&x)).unwrap();
            let mut diff = 0.0_f64;
            for (a, b) in back.data.iter().zip(x.data.iter()) {
                diff = diff.max((a - b).abs());
            }
            assert!(diff <= 1e-12 * x.frobenius_norm().max(1.0));
        }
    }

    #[test]
    fn real_input_spectrum_is_conjugate_symmetric() {
        for (dims, seed) in [((5, 4, 6), 21_u64), ((3, 3, 5), 22)] {
            let x = random_cube(dims, seed);
            let xf = fft_mode3(&x);
            let n3 = dims.2;
            let scale = xf.frobenius_norm();
            for i in 0..dims.0 {
                for j in 0..dims.1 {
                    assert!(xf.data[[i, j, 0]].im.abs() <= 1e-12 * scale);
                    for k in 1..n3 {
                        let a = xf.data[[i, j, k]];
                        let b = xf.data[[i, j, mirror_slice(k, n3)]].conj();
                        assert!((a - b).norm() <= 1e-12 * scale);
                    }
                }
            }
        }
    }

    #[test]
    fn parseval_relates_norms() {
        let x = random_cube((5, 3, 8), 31);
        let xf = fft_mode3(&x);
        let lhs = xf.frobenius_norm().powi(2);
        let rhs = 8.0 * x.frobenius_norm().powi(2);
        assert!((lhs - rhs).abs() <= 1e-10 * rhs);
    }

    #[test]
    fn ifft_rejects_asymmetric_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let data = Array3::from_shape_fn((3, 3, 4), |_| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let xf = FreqCube {
            data,
            origin: Mode::M3,
        };
        assert!(matches!(ifft_mode3(&xf), Err(Error::Symmetry(_))));
    }

    #[test]
    fn norms_and_inner_product() {
        let x = Cube::from_vec((1, 1, 3), vec![1.0, 2.0, 2.0]).unwrap();
        assert_eq!(x.frobenius_norm(), 3.0);
        assert_eq!(x.l1_norm(), 5.0);
        assert_eq!(x.max_abs(), 2.0);
        assert_eq!(x.inner(&x).unwrap(), 9.0);
        let y = Cube::zeros((1, 3, 1)).unwrap();
        assert!(matches!(x.inner(&y), Err(Error::DimMismatch(_))));
    }

    #[test]
    fn constructors_reject_bad_input() {
        assert!(Cube::zeros((0, 2, 2)).is_err());
        assert!(Cube::from_vec((2, 2, 2), vec![0.0; 7]).is_err());
        assert!(Cube::from_vec((1, 1, 2), vec![0.0, f64::NAN]).is_err());
        assert!(Mode::from_number(4).is_err());
        assert_eq!(Mode::from_number(2).unwrap(), Mode::M2);
    }

    #[test]
    fn half_spectrum_and_mirrors() {
        assert_eq!(half_spectrum(1), 1);
        assert_eq!(half_spectrum(4), 3);
        assert_eq!(half_spectrum(5), 3);
        assert_eq!(mirror_slice(0, 6), 0);
        assert_eq!(mirror_slice(1, 6), 5);
        assert_eq!(mirror_slice(3, 6), 3);
    }
}
