use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Smallest admissible number of grid points.
pub const MIN_POINTS: usize = 16;

struct GridInner {
    n: usize,
    length: f64,
    /// Wavenumbers in FFT storage order: 0, 1, ..., n/2-1, -n/2, ..., -1 (times 2π/length).
    wavenumbers: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Uniform periodic grid on `[-length/2, length/2)` with its FFT plans.
///
/// Cloning is cheap (the plans and wavenumber table are shared). Two grids compare
/// equal when they have the same point count and period.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

impl Grid {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n % 2 != 0 {
            return Err(Error::InvalidGrid(format!("n = {n} is odd")));
        }
        if n < MIN_POINTS {
            return Err(Error::InvalidGrid(format!("n = {n} < {MIN_POINTS}")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!("length = {length} is not positive")));
        }
        let dk = 2.0 * PI / length;
        let wavenumbers = (0..n)
            .map(|j| {
                let k = if j < n / 2 { j as i64 } else { j as i64 - n as i64 };
                k as f64 * dk
            })
            .collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        Ok(Grid {
            inner: Arc::new(GridInner {
                n,
                length,
                wavenumbers,
                forward,
                inverse,
            }),
        })
    }

    pub fn n(&self) -> usize {
        self.inner.n
    }

    pub fn length(&self) -> f64 {
        self.inner.length
    }

    pub fn spacing(&self) -> f64 {
        self.inner.length / self.inner.n as f64
    }

    /// Wavenumbers ξ_k in FFT storage order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.inner.wavenumbers
    }

    /// Wavenumbers sorted ascending, `-n/2 .. n/2-1` times `2π/length`.
    pub fn wavenumbers_sorted(&self) -> Vec<f64> {
        let n = self.n();
        let dk = self.first_nonzero_wavenumber();
        (0..n).map(|j| (j as f64 - (n / 2) as f64) * dk).collect()
    }

    /// Index of the single unpaired (Nyquist) mode in storage order.
    pub fn nyquist_index(&self) -> usize {
        self.inner.n / 2
    }

    pub fn max_wavenumber(&self) -> f64 {
        PI * self.inner.n as f64 / self.inner.length
    }

    pub fn first_nonzero_wavenumber(&self) -> f64 {
        2.0 * PI / self.inner.length
    }

    /// Sample points `x_j = -length/2 + j·spacing`; the box midpoint `x = 0` is index `n/2`.
    pub fn points(&self) -> Vec<f64> {
        let h = self.spacing();
        let x0 = -0.5 * self.inner.length;
        (0..self.inner.n).map(|j| x0 + j as f64 * h).collect()
    }

    pub fn center_index(&self) -> usize {
        self.inner.n / 2
    }

    /// Unnormalized forward DFT of real samples.
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        debug_assert_eq!(values.len(), self.inner.n);
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.inner.forward.process(&mut buf);
        buf
    }

    /// Inverse DFT (with the 1/n factor) keeping the real part.
    pub fn inverse(&self, spectrum: &[Complex64]) -> Vec<f64> {
        debug_assert_eq!(spectrum.len(), self.inner.n);
        let mut buf = spectrum.to_vec();
        self.inner.inverse.process(&mut buf);
        let scale = 1.0 / self.inner.n as f64;
        buf.iter().map(|z| z.re * scale).collect()
    }

    /// In-place complex transforms used by the time stepper.
    pub(crate) fn forward_in_place(&self, buf: &mut [Complex64]) {
        self.inner.forward.process(buf);
    }

    pub(crate) fn inverse_in_place(&self, buf: &mut [Complex64]) {
        self.inner.inverse.process(buf);
        let scale = 1.0 / self.inner.n as f64;
        for z in buf.iter_mut() {
            *z *= scale;
        }
    }

    /// Spectral derivative factor iξ_k, zero at the Nyquist mode.
    pub fn derivative_factors(&self) -> Vec<Complex64> {
        let ny = self.nyquist_index();
        self.wavenumbers()
            .iter()
            .enumerate()
            .map(|(j, &k)| if j == ny { Complex64::new(0.0, 0.0) } else { Complex64::new(0.0, k) })
            .collect()
    }

    /// Weight turning `Σ conj(a_k) b_k` over unnormalized spectra into an L² inner product.
    pub fn plancherel_weight(&self) -> f64 {
        self.inner.length / (self.inner.n as f64 * self.inner.n as f64)
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.n == other.inner.n && self.inner.length == other.inner.length)
    }

    pub fn check_same(&self, other: &Grid) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                expected_n: self.n(),
                expected_length: self.length(),
                got_n: other.n(),
                got_length: other.length(),
            })
        }
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.inner.n)
            .field("length", &self.inner.length)
            .finish()
    }
}

pub fn make_grid(n: usize, length: f64) -> Result<Grid> {
    Grid::new(n, length)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_box_has_integer_wavenumbers() {
        let g = make_grid(16, 2.0 * PI).unwrap();
        assert!((g.spacing() - PI / 8.0).abs() < 1e-15);
        let ks = g.wavenumbers_sorted();
        for (i, k) in ks.iter().enumerate() {
            assert!((k - (i as f64 - 8.0)).abs() < 1e-12);
        }
        assert!((g.wavenumbers()[g.nyquist_index()] + 8.0).abs() < 1e-12);
    }

    #[test]
    fn max_wavenumber_for_standard_box() {
        let g = make_grid(1024, 80.0).unwrap();
        // 2π·512/80
        assert!((g.max_wavenumber() - 40.212_385_965_949_35).abs() < 1e-10);
        let max_abs = g.wavenumbers().iter().fold(0.0f64, |m, k| m.max(k.abs()));
        assert!((max_abs - g.max_wavenumber()).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(matches!(make_grid(15, 10.0), Err(Error::InvalidGrid(_))));
        assert!(matches!(make_grid(14, 10.0), Err(Error::InvalidGrid(_))));
        assert!(matches!(make_grid(16, 0.0), Err(Error::InvalidGrid(_))));
        assert!(matches!(make_grid(16, -1.0), Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn wavenumbers_symmetric_except_nyquist() {
        let g = make_grid(32, 7.0).unwrap();
        let ks = g.wavenumbers();
        let ny = g.nyquist_index();
        for j in 1..g.n() {
            if j == ny {
                continue;
            }
            assert!((ks[j] + ks[g.n() - j]).abs() < 1e-12);
        }
    }

    #[test]
    fn midpoint_is_origin() {
        let g = make_grid(64, 20.0).unwrap();
        assert!(g.points()[g.center_index()].abs() < 1e-14);
    }
}
