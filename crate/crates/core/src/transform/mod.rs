//! Spherical-harmonic analysis and synthesis on Gauss–Legendre grids, and
//! the spectral differential operators built on them.
//!
//! Conventions: `Y_ℓm = P̄_ℓm(cos θ) e^{imφ}` orthonormal on the unit sphere
//! with the Condon–Shortley phase; `θ` is colatitude, `φ` east longitude.
//! `−Δ Y_ℓm = ℓ(ℓ+1) Y_ℓm`. Gradients are returned in the `(e_θ, e_φ)`
//! frame and `∇^⊥ f = n × ∇f` with `n` the outward normal.

mod field;
mod grid;
pub mod legendre;

use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

pub use field::{lm_index, PhysicalField, SpectralField, VelocityField};
pub use grid::{fft_friendly_even, Grid, MAX_LMAX, MIN_LMAX};

use crate::geometry::UnitVector;
use legendre::{compute_ring, tri_len, tri_offset};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransformError {
    #[error("truncation degree {0} outside [{MIN_LMAX}, {MAX_LMAX}]")]
    LmaxOutOfRange(usize),
    #[error("field shape {found:?} does not match grid shape {expected:?}")]
    GridMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("spectral degree {field} exceeds grid capacity {grid}")]
    DegreeExceedsGrid { field: usize, grid: usize },
}

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[inline]
fn parity(m: usize) -> f64 {
    if m % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn check_shape(grid: &Grid, values: &Array2<f64>) -> Result<(), TransformError> {
    let expected = (grid.n_lat(), grid.n_lon());
    let found = values.dim();
    if expected != found {
        return Err(TransformError::GridMismatch { expected, found });
    }
    Ok(())
}

fn check_capacity(a: &SpectralField, grid: &Grid) -> Result<(), TransformError> {
    if a.lmax() > grid.lmax() {
        return Err(TransformError::DegreeExceedsGrid {
            field: a.lmax(),
            grid: grid.lmax(),
        });
    }
    Ok(())
}

/// Fourier coefficients `(2π/n) Σ_k f_k e^{−imφ_k}` of every ring.
fn ring_spectra(grid: &Grid, values: &Array2<f64>) -> Vec<Vec<Complex64>> {
    let n = grid.n_lon();
    let scale = 2.0 * std::f64::consts::PI / n as f64;
    (0..grid.n_lat())
        .into_par_iter()
        .map(|j| {
            let mut buf: Vec<Complex64> = values
                .row(j)
                .iter()
                .map(|&v| Complex64::new(v, 0.0))
                .collect();
            grid.fft_forward(&mut buf);
            buf.iter_mut().for_each(|c| *c *= scale);
            buf
        })
        .collect()
}

/// Inverse Fourier pass: `Σ_m spec[m] e^{imφ_k}` for `m ∈ [−L, L]`, with
/// `spec` indexed `m + L`. Returns the real part and the largest imaginary residue.
fn ring_values(grid: &Grid, spec: &[Complex64], out: &mut [f64]) -> f64 {
    let n = grid.n_lon();
    let l = (spec.len() - 1) / 2;
    let mut buf = vec![ZERO; n];
    for (i, c) in spec.iter().enumerate() {
        let m = i as i64 - l as i64;
        buf[m.rem_euclid(n as i64) as usize] += *c;
    }
    grid.fft_inverse(&mut buf);
    let mut resid: f64 = 0.0;
    for (o, c) in out.iter_mut().zip(&buf) {
        *o = c.re;
        resid = resid.max(c.im.abs());
    }
    resid
}

/// Coefficients of the orthonormal expansion of a grid field, truncated at
/// the grid degree. Exact for band-limited inputs.
pub fn analyze(f: &PhysicalField) -> Result<SpectralField, TransformError> {
    let grid = &f.grid;
    check_shape(grid, &f.values)?;
    let lmax = grid.lmax();
    let spectra = ring_spectra(grid, &f.values);
    let mut acc = vec![ZERO; tri_len(lmax)];
    for (j, fm) in spectra.iter().enumerate() {
        let w = grid.quad_weights()[j];
        grid.with_ring(j, |p, _| {
            for m in 0..=lmax {
                let off = tri_offset(lmax, m);
                let c = fm[m] * w;
                for l in m..=lmax {
                    acc[off + l - m] += c * p[off + l - m];
                }
            }
        });
    }
    Ok(unpack_real(lmax, &acc))
}

fn unpack_real(lmax: usize, packed: &[Complex64]) -> SpectralField {
    let mut out = SpectralField::zeros(lmax);
    for m in 0..=lmax {
        let off = tri_offset(lmax, m);
        for l in m..=lmax {
            out.set_real_pair(l, m, packed[off + l - m]);
        }
    }
    out
}

/// Values of `Σ a_ℓm Y_ℓm` at the grid nodes.
pub fn synthesize(a: &SpectralField, grid: &Arc<Grid>) -> Result<PhysicalField, TransformError> {
    synthesize_with_residue(a, grid).map(|(f, _)| f)
}

/// As [`synthesize`], also returning the largest discarded imaginary part.
pub fn synthesize_with_residue(
    a: &SpectralField,
    grid: &Arc<Grid>,
) -> Result<(PhysicalField, f64), TransformError> {
    check_capacity(a, grid)?;
    let la = a.lmax();
    let lg = grid.lmax();
    let n_lon = grid.n_lon();
    let rows: Vec<(Vec<f64>, f64)> = (0..grid.n_lat())
        .into_par_iter()
        .map(|j| {
            let spec = grid.with_ring(j, |p, _| {
                let mut spec = vec![ZERO; 2 * la + 1];
                for m in 0..=la {
                    let off = tri_offset(lg, m);
                    let (mut pos, mut neg) = (ZERO, ZERO);
                    for l in m..=la {
                        let pv = p[off + l - m];
                        pos += a.get(l, m as i64) * pv;
                        if m > 0 {
                            neg += a.get(l, -(m as i64)) * pv;
                        }
                    }
                    spec[la + m] = pos;
                    if m > 0 {
                        spec[la - m] = neg * parity(m);
                    }
                }
                spec
            });
            let mut row = vec![0.0; n_lon];
            let r = ring_values(grid, &spec, &mut row);
            (row, r)
        })
        .collect();
    let mut values = Array2::zeros((grid.n_lat(), n_lon));
    let mut resid: f64 = 0.0;
    for (j, (row, r)) in rows.into_iter().enumerate() {
        values.row_mut(j).assign(&ndarray::ArrayView1::from(&row));
        resid = resid.max(r);
    }
    Ok((
        PhysicalField {
            grid: grid.clone(),
            values,
        },
        resid,
    ))
}

/// Frame components `(∂_θ f, (1/sin θ) ∂_φ f)` of `∇f` at the grid nodes.
pub fn surface_gradient(
    a: &SpectralField,
    grid: &Arc<Grid>,
) -> Result<VelocityField, TransformError> {
    check_capacity(a, grid)?;
    let la = a.lmax();
    let lg = grid.lmax();
    let shape = (grid.n_lat(), grid.n_lon());
    let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..grid.n_lat())
        .into_par_iter()
        .map(|j| {
            let inv_s = 1.0 / grid.sin_colatitudes()[j];
            let (st, sp) = grid.with_ring(j, |p, dp| {
                let mut st = vec![ZERO; 2 * la + 1];
                let mut sp = vec![ZERO; 2 * la + 1];
                for m in 0..=la {
                    let off = tri_offset(lg, m);
                    let (mut dpos, mut dneg, mut pos, mut neg) = (ZERO, ZERO, ZERO, ZERO);
                    for l in m..=la {
                        let ap = a.get(l, m as i64);
                        dpos += ap * dp[off + l - m];
                        pos += ap * p[off + l - m];
                        if m > 0 {
                            let an = a.get(l, -(m as i64));
                            dneg += an * dp[off + l - m];
                            neg += an * p[off + l - m];
                        }
                    }
                    let im = Complex64::new(0.0, m as f64 * inv_s);
                    st[la + m] = dpos;
                    sp[la + m] = im * pos;
                    if m > 0 {
                        st[la - m] = dneg * parity(m);
                        sp[la - m] = -im * neg * parity(m);
                    }
                }
                (st, sp)
            });
            let mut rt = vec![0.0; shape.1];
            let mut rp = vec![0.0; shape.1];
            ring_values(grid, &st, &mut rt);
            ring_values(grid, &sp, &mut rp);
            (rt, rp)
        })
        .collect();
    let mut u_colat = Array2::zeros(shape);
    let mut u_lon = Array2::zeros(shape);
    for (j, (rt, rp)) in rows.into_iter().enumerate() {
        u_colat.row_mut(j).assign(&ndarray::ArrayView1::from(&rt));
        u_lon.row_mut(j).assign(&ndarray::ArrayView1::from(&rp));
    }
    Ok(VelocityField {
        grid: grid.clone(),
        u_colat,
        u_lon,
    })
}

/// `n × ∇f`: rotates the gradient a quarter turn counterclockwise seen from outside.
pub fn perp_gradient(a: &SpectralField, grid: &Arc<Grid>) -> Result<VelocityField, TransformError> {
    let g = surface_gradient(a, grid)?;
    Ok(VelocityField {
        grid: g.grid,
        u_colat: -&g.u_lon,
        u_lon: g.u_colat,
    })
}

/// Spectral divergence of a frame vector field, via the weak form
/// `(div u)_ℓm = −∫ u · ∇ conj(Y_ℓm)`.
pub fn divergence(u: &VelocityField) -> Result<SpectralField, TransformError> {
    let grid = &u.grid;
    check_shape(grid, &u.u_colat)?;
    check_shape(grid, &u.u_lon)?;
    let lmax = grid.lmax();
    let st = ring_spectra(grid, &u.u_colat);
    let sp = ring_spectra(grid, &u.u_lon);
    let mut acc = vec![ZERO; tri_len(lmax)];
    for j in 0..grid.n_lat() {
        let w = grid.quad_weights()[j];
        let inv_s = 1.0 / grid.sin_colatitudes()[j];
        grid.with_ring(j, |p, dp| {
            for m in 0..=lmax {
                let off = tri_offset(lmax, m);
                let ct = st[j][m] * w;
                let cp = sp[j][m] * Complex64::new(0.0, m as f64 * inv_s) * w;
                for l in m..=lmax {
                    acc[off + l - m] -= ct * dp[off + l - m] - cp * p[off + l - m];
                }
            }
        });
    }
    Ok(unpack_real(lmax, &acc))
}

/// Rotation axis of an angular-momentum generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X = 1,
    Y = 2,
    Z = 3,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];
}

/// Applies the rotation generator `(e_axis × x) · ∇`, a real vector field
/// commuting with `Δ`, in coefficient space. With `L = −i x × ∇` this is
/// `i L_axis`; the `x` and `y` components come from the ladder operators
/// `L_± Y_ℓm = √(ℓ(ℓ+1) − m(m±1)) Y_ℓ,m±1`.
pub fn angular_momentum(a: &SpectralField, axis: Axis) -> SpectralField {
    let lmax = a.lmax();
    let mut out = SpectralField::zeros(lmax);
    let i = Complex64::new(0.0, 1.0);
    for l in 0..=lmax {
        let li = l as i64;
        let ll = (l * (l + 1)) as f64;
        for m in -li..=li {
            let mf = m as f64;
            let v = match axis {
                Axis::Z => i * mf * a.get(l, m),
                Axis::X | Axis::Y => {
                    // (L+ f)_ℓm and (L- f)_ℓm
                    let plus = if m > -li {
                        a.get(l, m - 1) * (ll - (mf - 1.0) * mf).sqrt()
                    } else {
                        ZERO
                    };
                    let minus = if m < li {
                        a.get(l, m + 1) * (ll - (mf + 1.0) * mf).sqrt()
                    } else {
                        ZERO
                    };
                    if axis == Axis::X {
                        i * 0.5 * (plus + minus)
                    } else {
                        0.5 * (plus - minus)
                    }
                }
            };
            out.set(l, m, v);
        }
    }
    out
}

/// `Δf` in coefficient space.
pub fn laplacian(a: &SpectralField) -> SpectralField {
    a.map_degrees(|l| -((l * (l + 1)) as f64))
}

/// Pointwise evaluation of spectral fields at arbitrary points.
///
/// Keeps a scratch Legendre buffer; one evaluator per thread.
pub struct PointEvaluator {
    lmax: usize,
    p: Vec<f64>,
}

impl PointEvaluator {
    pub fn new(lmax: usize) -> Self {
        PointEvaluator {
            lmax,
            p: vec![0.0; tri_len(lmax)],
        }
    }

    pub fn eval(&mut self, a: &SpectralField, x: &UnitVector) -> f64 {
        let mut out = [0.0];
        self.eval_many(&[a], x, &mut out);
        out[0]
    }

    /// Evaluates several fields at one point, sharing the Legendre pass.
    pub fn eval_many(&mut self, fields: &[&SpectralField], x: &UnitVector, out: &mut [f64]) {
        let need = fields.iter().map(|f| f.lmax()).max().unwrap_or(0);
        if need > self.lmax {
            *self = PointEvaluator::new(need);
        }
        let lg = self.lmax;
        let rho = x.x.hypot(x.y);
        compute_ring(lg, x.z, rho, &mut self.p, None);
        let phi = x.y.atan2(x.x);
        for (f, o) in fields.iter().zip(out.iter_mut()) {
            let la = f.lmax();
            let mut total = 0.0;
            let mut rot = Complex64::new(1.0, 0.0);
            let step = Complex64::from_polar(1.0, phi);
            for m in 0..=la {
                let off = tri_offset(lg, m);
                let (mut pos, mut neg) = (ZERO, ZERO);
                for l in m..=la {
                    let pv = self.p[off + l - m];
                    pos += f.get(l, m as i64) * pv;
                    if m > 0 {
                        neg += f.get(l, -(m as i64)) * pv;
                    }
                }
                total += (pos * rot).re;
                if m > 0 {
                    total += (neg * rot.conj()).re * parity(m);
                }
                rot *= step;
            }
            *o = total;
        }
    }

    /// Per-degree parts `F_ℓ(x) = Σ_m a_ℓm Y_ℓm(x)`, so that `f(x) = Σ_ℓ F_ℓ(x)`.
    pub fn degree_components(&mut self, a: &SpectralField, x: &UnitVector) -> Vec<f64> {
        if a.lmax() > self.lmax {
            *self = PointEvaluator::new(a.lmax());
        }
        let lg = self.lmax;
        let la = a.lmax();
        compute_ring(lg, x.z, x.x.hypot(x.y), &mut self.p, None);
        let step = Complex64::from_polar(1.0, x.y.atan2(x.x));
        let mut out = vec![0.0; la + 1];
        let mut rot = Complex64::new(1.0, 0.0);
        for m in 0..=la {
            let off = tri_offset(lg, m);
            for l in m..=la {
                let pv = self.p[off + l - m];
                let mut v = (a.get(l, m as i64) * rot).re * pv;
                if m > 0 {
                    v += (a.get(l, -(m as i64)) * rot.conj()).re * pv * parity(m);
                }
                out[l] += v;
            }
            rot *= step;
        }
        out
    }

    /// Ambient tangent vector `∇f(x)`, assembled from the rotation
    /// generators as `r × x` with `r_i = ((e_i × x)·∇f)(x)`. Valid at the poles.
    pub fn gradient(&mut self, generators: &[SpectralField; 3], x: &UnitVector) -> [f64; 3] {
        let mut r = [0.0; 3];
        self.eval_many(&[&generators[0], &generators[1], &generators[2]], x, &mut r);
        crate::geometry::cross3(r, x.as_array())
    }
}

/// The three rotation-generator images `(R_x f, R_y f, R_z f)`.
pub fn generators(a: &SpectralField) -> [SpectralField; 3] {
    [
        angular_momentum(a, Axis::X),
        angular_momentum(a, Axis::Y),
        angular_momentum(a, Axis::Z),
    ]
}
