use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;

use super::Grid;

/// Flat index of `(ℓ, m)` in a coefficient vector: `ℓ² + ℓ + m`.
#[inline]
pub fn lm_index(l: usize, m: i64) -> usize {
    ((l * l + l) as i64 + m) as usize
}

/// Coefficients `a_ℓm`, `0 ≤ ℓ ≤ lmax`, `−ℓ ≤ m ≤ ℓ`, of a real field in the
/// orthonormal complex basis `Y_ℓm` (Condon–Shortley phase). Reality means
/// `a_{ℓ,−m} = (−1)^m conj(a_ℓm)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    lmax: usize,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(lmax: usize) -> Self {
        SpectralField {
            lmax,
            coeffs: vec![Complex64::new(0.0, 0.0); (lmax + 1) * (lmax + 1)],
        }
    }

    pub fn from_coeffs(lmax: usize, coeffs: Vec<Complex64>) -> Self {
        assert_eq!(
            coeffs.len(),
            (lmax + 1) * (lmax + 1),
            "coefficient count does not match lmax"
        );
        SpectralField { lmax, coeffs }
    }

    /// The real zonal harmonic `Y_ℓ0` (unit L² norm).
    pub fn zonal(lmax: usize, l: usize) -> Self {
        let mut f = Self::zeros(lmax);
        f.set(l, 0, Complex64::new(1.0, 0.0));
        f
    }

    /// `Re Y_ℓm` for `m ≥ 0`, stored with both `±m` coefficients.
    pub fn real_part_of_mode(lmax: usize, l: usize, m: usize) -> Self {
        let mut f = Self::zeros(lmax);
        if m == 0 {
            f.set(l, 0, Complex64::new(1.0, 0.0));
        } else {
            f.set(l, m as i64, Complex64::new(0.5, 0.0));
            let sign = if m % 2 == 0 { 0.5 } else { -0.5 };
            f.set(l, -(m as i64), Complex64::new(sign, 0.0));
        }
        f
    }

    /// Sets `a_ℓm` and its reality partner `a_{ℓ,−m}`.
    pub fn set_real_pair(&mut self, l: usize, m: usize, value: Complex64) {
        if m == 0 {
            self.set(l, 0, Complex64::new(value.re, 0.0));
        } else {
            self.set(l, m as i64, value);
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            self.set(l, -(m as i64), value.conj() * sign);
        }
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }
    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }
    pub fn get(&self, l: usize, m: i64) -> Complex64 {
        self.coeffs[lm_index(l, m)]
    }
    pub fn set(&mut self, l: usize, m: i64, v: Complex64) {
        self.coeffs[lm_index(l, m)] = v;
    }

    /// Highest degree with a nonzero coefficient (0 for the zero field).
    pub fn effective_degree(&self) -> usize {
        (0..=self.lmax)
            .rev()
            .find(|&l| (-(l as i64)..=l as i64).any(|m| self.get(l, m) != Complex64::new(0.0, 0.0)))
            .unwrap_or(0)
    }

    /// Copy with truncation degree `lmax`, zero-padding or discarding modes.
    pub fn resized(&self, lmax: usize) -> Self {
        let mut out = Self::zeros(lmax);
        for l in 0..=lmax.min(self.lmax) {
            let a = lm_index(l, -(l as i64));
            let b = lm_index(l, l as i64);
            out.coeffs[a..=b].copy_from_slice(&self.coeffs[a..=b]);
        }
        out
    }

    /// Zeroes every mode of degree above `cutoff`.
    pub fn truncate_in_place(&mut self, cutoff: usize) {
        if cutoff < self.lmax {
            let start = (cutoff + 1) * (cutoff + 1);
            self.coeffs[start..].fill(Complex64::new(0.0, 0.0));
        }
    }

    pub fn truncated(&self, cutoff: usize) -> Self {
        let mut out = self.clone();
        out.truncate_in_place(cutoff);
        out
    }

    /// Multiplies each degree block by `mult(ℓ)`.
    pub fn map_degrees(&self, mut mult: impl FnMut(usize) -> f64) -> Self {
        let mut out = self.clone();
        for l in 0..=self.lmax {
            let s = mult(l);
            for m in -(l as i64)..=l as i64 {
                out.coeffs[lm_index(l, m)] *= s;
            }
        }
        out
    }

    /// `Σ |a_ℓm|²`, the squared L² norm over the unit sphere.
    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `(Σ (ℓ(ℓ+1))^s |a_ℓm|²)^{1/2}`.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        let mut acc = 0.0;
        for l in 1..=self.lmax {
            let w = ((l * (l + 1)) as f64).powf(s);
            let block: f64 = (-(l as i64)..=l as i64)
                .map(|m| self.get(l, m).norm_sqr())
                .sum();
            acc += w * block;
        }
        acc.sqrt()
    }

    /// `∫ f g dvol` for real fields `f`, `g`.
    pub fn inner(&self, other: &SpectralField) -> f64 {
        let l = self.lmax.min(other.lmax);
        let n = (l + 1) * (l + 1);
        self.coeffs[..n]
            .iter()
            .zip(&other.coeffs[..n])
            .map(|(a, b)| (a * b.conj()).re)
            .sum()
    }

    /// Largest violation of `a_{ℓ,−m} = (−1)^m conj(a_ℓm)`.
    pub fn reality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for l in 0..=self.lmax {
            for m in 0..=l as i64 {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                let d = self.get(l, -m) - self.get(l, m).conj() * sign;
                worst = worst.max(d.norm());
            }
        }
        worst
    }

    /// Largest coefficient difference against `other` (padded with zeros).
    pub fn max_abs_diff(&self, other: &SpectralField) -> f64 {
        let l = self.lmax.max(other.lmax);
        let a = self.resized(l);
        let b = other.resized(l);
        a.coeffs
            .iter()
            .zip(&b.coeffs)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    pub fn scaled(&self, s: f64) -> Self {
        SpectralField {
            lmax: self.lmax,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    fn zip_with(
        &self,
        other: &SpectralField,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Self {
        let l = self.lmax.max(other.lmax);
        let a = self.resized(l);
        let b = other.resized(l);
        SpectralField {
            lmax: l,
            coeffs: a
                .coeffs
                .iter()
                .zip(&b.coeffs)
                .map(|(x, y)| f(*x, *y))
                .collect(),
        }
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, rhs: f64) -> SpectralField {
        self.scaled(rhs)
    }
}

impl Neg for &SpectralField {
    type Output = SpectralField;
    fn neg(self) -> SpectralField {
        self.scaled(-1.0)
    }
}

/// Real values at the nodes of a [`Grid`], indexed `[colatitude, longitude]`.
#[derive(Debug, Clone)]
pub struct PhysicalField {
    pub grid: Arc<Grid>,
    pub values: Array2<f64>,
}

impl PhysicalField {
    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = Array2::from_shape_fn((grid.n_lat(), grid.n_lon()), |(j, k)| {
            f(grid.colatitudes()[j], grid.longitude(k))
        });
        PhysicalField {
            grid: grid.clone(),
            values,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// Node index `(j, k)` of the largest `|value|`.
    pub fn argmax_abs(&self) -> (usize, usize) {
        let mut best = (0, 0);
        let mut bv = -1.0;
        for ((j, k), v) in self.values.indexed_iter() {
            if v.abs() > bv {
                bv = v.abs();
                best = (j, k);
            }
        }
        best
    }

    /// Quadrature of the field over the sphere.
    pub fn integrate(&self) -> f64 {
        let mut acc = 0.0;
        for j in 0..self.grid.n_lat() {
            let row: f64 = self.values.row(j).sum();
            acc += self.grid.cell_area(j) * row;
        }
        acc
    }
}

/// Tangent vector field in the local `(e_colat, e_lon)` frame, `e_lon`
/// pointing east.
#[derive(Debug, Clone)]
pub struct VelocityField {
    pub grid: Arc<Grid>,
    pub u_colat: Array2<f64>,
    pub u_lon: Array2<f64>,
}

impl VelocityField {
    /// Pointwise magnitude.
    pub fn magnitude(&self) -> PhysicalField {
        let values = ndarray::Zip::from(&self.u_colat)
            .and(&self.u_lon)
            .map_collect(|a, b| a.hypot(*b));
        PhysicalField {
            grid: self.grid.clone(),
            values,
        }
    }

    pub fn max_magnitude(&self) -> f64 {
        ndarray::Zip::from(&self.u_colat)
            .and(&self.u_lon)
            .fold(0.0f64, |acc, a, b| acc.max(a.hypot(*b)))
    }

    /// `sqrt(∫ |u|² dvol)`.
    pub fn l2_norm(&self) -> f64 {
        let mut acc = 0.0;
        for j in 0..self.grid.n_lat() {
            let row: f64 = self
                .u_colat
                .row(j)
                .iter()
                .zip(self.u_lon.row(j))
                .map(|(a, b)| a * a + b * b)
                .sum();
            acc += self.grid.cell_area(j) * row;
        }
        acc.sqrt()
    }

    /// Pointwise `u · v`.
    pub fn dot(&self, other: &VelocityField) -> PhysicalField {
        let values = &self.u_colat * &other.u_colat + &self.u_lon * &other.u_lon;
        PhysicalField {
            grid: self.grid.clone(),
            values,
        }
    }

    /// Ambient-coordinate vector at node `(j, k)`.
    pub fn ambient(&self, j: usize, k: usize) -> [f64; 3] {
        let t = self.grid.colatitudes()[j];
        let p = self.grid.longitude(k);
        let (st, ct) = t.sin_cos();
        let (sp, cp) = p.sin_cos();
        let e_t = [ct * cp, ct * sp, -st];
        let e_p = [-sp, cp, 0.0];
        let a = self.u_colat[[j, k]];
        let b = self.u_lon[[j, k]];
        [
            a * e_t[0] + b * e_p[0],
            a * e_t[1] + b * e_p[1],
            a * e_t[2] + b * e_p[2],
        ]
    }
}
