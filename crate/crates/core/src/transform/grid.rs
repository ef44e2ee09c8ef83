use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::legendre::{compute_ring, tri_len};
use super::TransformError;
use crate::geometry::UnitVector;
use crate::quadrature::gauss_legendre;

pub const MIN_LMAX: usize = 2;
pub const MAX_LMAX: usize = 2048;

// Above this truncation the per-ring Legendre values are recomputed on demand
// instead of being cached (the cache grows like L³).
const TABLE_LMAX: usize = 256;

/// Gauss–Legendre (colatitude) × equispaced (longitude) grid for
/// truncation degree `lmax`.
pub struct Grid {
    lmax: usize,
    n_lat: usize,
    n_lon: usize,
    colatitudes: Vec<f64>,
    cos_colat: Vec<f64>,
    sin_colat: Vec<f64>,
    quad_weights: Vec<f64>,
    fft_forward: Arc<dyn Fft<f64>>,
    fft_inverse: Arc<dyn Fft<f64>>,
    tables: OnceLock<LegendreTables>,
}

struct LegendreTables {
    values: Vec<f64>,
    derivs: Vec<f64>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("lmax", &self.lmax)
            .field("n_lat", &self.n_lat)
            .field("n_lon", &self.n_lon)
            .finish()
    }
}

/// Smallest even integer `≥ min` whose only prime factors are 2, 3 and 5.
pub fn fft_friendly_even(min: usize) -> usize {
    let mut n = min.max(2);
    loop {
        if n % 2 == 0 {
            let mut k = n;
            for p in [2, 3, 5] {
                while k % p == 0 {
                    k /= p;
                }
            }
            if k == 1 {
                return n;
            }
        }
        n += 1;
    }
}

impl Grid {
    pub fn new(lmax: usize) -> Result<Arc<Grid>, TransformError> {
        if !(MIN_LMAX..=MAX_LMAX).contains(&lmax) {
            return Err(TransformError::LmaxOutOfRange(lmax));
        }
        let n_lat = lmax + 1;
        let n_lon = fft_friendly_even(2 * lmax + 1);
        let (x, w) = gauss_legendre(n_lat);
        let colatitudes: Vec<f64> = x.iter().map(|v| v.acos()).collect();
        let sin_colat = x.iter().map(|v| (1.0 - v * v).sqrt()).collect();
        let mut planner = FftPlanner::new();
        Ok(Arc::new(Grid {
            lmax,
            n_lat,
            n_lon,
            colatitudes,
            cos_colat: x,
            sin_colat,
            quad_weights: w,
            fft_forward: planner.plan_fft_forward(n_lon),
            fft_inverse: planner.plan_fft_inverse(n_lon),
            tables: OnceLock::new(),
        }))
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }
    pub fn n_lat(&self) -> usize {
        self.n_lat
    }
    pub fn n_lon(&self) -> usize {
        self.n_lon
    }
    pub fn colatitudes(&self) -> &[f64] {
        &self.colatitudes
    }
    pub fn cos_colatitudes(&self) -> &[f64] {
        &self.cos_colat
    }
    pub fn sin_colatitudes(&self) -> &[f64] {
        &self.sin_colat
    }
    /// Gauss weights in `cos θ`; they sum to 2.
    pub fn quad_weights(&self) -> &[f64] {
        &self.quad_weights
    }
    pub fn longitude(&self, k: usize) -> f64 {
        2.0 * PI * k as f64 / self.n_lon as f64
    }
    /// Area element of node `(j, ·)`: `w_j · 2π / n_lon`.
    pub fn cell_area(&self, j: usize) -> f64 {
        self.quad_weights[j] * 2.0 * PI / self.n_lon as f64
    }
    pub fn node(&self, j: usize, k: usize) -> UnitVector {
        UnitVector::from_spherical(self.colatitudes[j], self.longitude(k))
    }

    pub(crate) fn fft_forward(&self, buf: &mut [Complex64]) {
        self.fft_forward.process(buf);
    }
    pub(crate) fn fft_inverse(&self, buf: &mut [Complex64]) {
        self.fft_inverse.process(buf);
    }

    fn tables(&self) -> &LegendreTables {
        self.tables.get_or_init(|| {
            let len = tri_len(self.lmax);
            let mut values = vec![0.0; len * self.n_lat];
            let mut derivs = vec![0.0; len * self.n_lat];
            for j in 0..self.n_lat {
                compute_ring(
                    self.lmax,
                    self.cos_colat[j],
                    self.sin_colat[j],
                    &mut values[j * len..(j + 1) * len],
                    Some(&mut derivs[j * len..(j + 1) * len]),
                );
            }
            LegendreTables { values, derivs }
        })
    }

    /// Runs `f` with the packed `P̄_ℓm` and `dP̄_ℓm/dθ` values of ring `j`.
    pub(crate) fn with_ring<R>(&self, j: usize, f: impl FnOnce(&[f64], &[f64]) -> R) -> R {
        let len = tri_len(self.lmax);
        if self.lmax <= TABLE_LMAX {
            let t = self.tables();
            f(
                &t.values[j * len..(j + 1) * len],
                &t.derivs[j * len..(j + 1) * len],
            )
        } else {
            let mut p = vec![0.0; len];
            let mut dp = vec![0.0; len];
            compute_ring(
                self.lmax,
                self.cos_colat[j],
                self.sin_colat[j],
                &mut p,
                Some(&mut dp),
            );
            f(&p, &dp)
        }
    }
}
