//! Principal-value singular integrals against the leading kernel
//! `c_α χ(d) / d^{2+α}` on the sphere.
//!
//! The `y`-integral is taken in geodesic polar coordinates about `x`:
//! Gauss–Legendre in radius on `[ε, R/2] ∪ [R/2, R]` and the trapezoid rule
//! in angle, with `R` the cutoff radius. The excluded ball `d < ε` is
//! replaced by its second-order Taylor moment, so that the result is the
//! principal value of the truncated kernel up to `O(ε^{4−α})`.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use statrs::function::gamma::gamma;

use super::{check_alpha, FractionalError};
use crate::geometry::UnitVector;
use crate::transform::{
    angular_momentum, generators, laplacian, Axis, Grid, PointEvaluator, SpectralField,
};

/// Flat-plane normalisation of `(−Δ)^{α/2}` in two dimensions,
/// `2^α Γ(1+α/2) / (π |Γ(−α/2)|)`.
pub fn c_alpha_constant(alpha: f64) -> f64 {
    2f64.powf(alpha) * gamma(1.0 + 0.5 * alpha) / (PI * gamma(-0.5 * alpha).abs())
}

/// Quintic smoothstep cutoff: 1 on `[0, R/2]`, 0 beyond `R`, `C²` in between.
pub fn cutoff_weight(r: f64, radius: f64) -> f64 {
    let half = 0.5 * radius;
    if r <= half {
        1.0
    } else if r >= radius {
        0.0
    } else {
        let s = (r - half) / half;
        1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
    }
}

/// Leading-order singular kernel with its quadrature.
#[derive(Debug, Clone)]
pub struct SingularKernel {
    pub alpha: f64,
    pub cutoff_radius: f64,
    pub pv_epsilon: f64,
    /// Constant in use; equals the seed until [`SingularKernel::calibrated`].
    pub c_alpha: f64,
    pub c_alpha_seed: f64,
    pub quad_grid: Arc<Grid>,
    radial: Vec<(f64, f64)>,
}

impl SingularKernel {
    pub const DEFAULT_CUTOFF: f64 = PI / 4.0;
    pub const DEFAULT_EPSILON: f64 = 0.05;

    pub fn new(
        alpha: f64,
        cutoff_radius: f64,
        pv_epsilon: f64,
        quad_lmax: usize,
    ) -> Result<Self, FractionalError> {
        check_alpha(alpha)?;
        if !(0.0 < pv_epsilon && pv_epsilon < cutoff_radius && cutoff_radius < 0.5 * PI) {
            return Err(FractionalError::InvalidKernel(format!(
                "need 0 < pv_epsilon < cutoff_radius < pi/2, got {pv_epsilon}, {cutoff_radius}"
            )));
        }
        if 2.0 * pv_epsilon >= cutoff_radius {
            return Err(FractionalError::InvalidKernel(
                "pv_epsilon must lie inside the plateau of the cutoff".into(),
            ));
        }
        let quad_grid = Grid::new(quad_lmax)?;
        let mut radial = Vec::with_capacity(2 * quad_grid.n_lat());
        for (a, b) in [
            (pv_epsilon, 0.5 * cutoff_radius),
            (0.5 * cutoff_radius, cutoff_radius),
        ] {
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            for (x, w) in quad_grid
                .cos_colatitudes()
                .iter()
                .zip(quad_grid.quad_weights())
            {
                radial.push((mid + half * x, half * w));
            }
        }
        let c = c_alpha_constant(alpha);
        Ok(SingularKernel {
            alpha,
            cutoff_radius,
            pv_epsilon,
            c_alpha: c,
            c_alpha_seed: c,
            quad_grid,
            radial,
        })
    }

    /// Default cutoff and exclusion radius, calibrated on `Y_10`.
    pub fn standard(alpha: f64, quad_lmax: usize) -> Result<Self, FractionalError> {
        Self::new(
            alpha,
            Self::DEFAULT_CUTOFF,
            Self::DEFAULT_EPSILON,
            quad_lmax,
        )?
        .calibrated()
    }

    /// Rescales `c_alpha` so that `Y_10` at the north pole maps to `2^{α/2} Y_10`.
    pub fn calibrated(mut self) -> Result<Self, FractionalError> {
        let y10 = SpectralField::zonal(1, 1);
        self.c_alpha = self.c_alpha_seed;
        let raw = lambda_singular(&y10, &UnitVector::NORTH, &self)?;
        let target = 2f64.powf(0.5 * self.alpha) * (3.0 / (4.0 * PI)).sqrt();
        self.c_alpha = self.c_alpha_seed * target / raw;
        Ok(self)
    }

    /// Calibrated constant over the flat-plane seed.
    pub fn calibration_ratio(&self) -> f64 {
        self.c_alpha / self.c_alpha_seed
    }

    /// Radial moment of the excluded ball, `π ε^{2−α} / (2−α)`.
    fn ball_moment(&self) -> f64 {
        PI * self.pv_epsilon.powf(2.0 - self.alpha) / (2.0 - self.alpha)
    }

    fn check_degree(&self, a: &SpectralField) -> Result<(), FractionalError> {
        let degree = a.effective_degree();
        if self.pv_epsilon * degree as f64 > 1.0 {
            return Err(FractionalError::PvEpsilonTooLarge {
                epsilon: self.pv_epsilon,
                degree,
            });
        }
        Ok(())
    }

    /// `∫_{ε<d<R} g(y) χ(d) d^{−2−α} dvol(y)` for a vector of scalar integrands.
    fn polar_integral<const N: usize>(
        &self,
        x: &UnitVector,
        lmax: usize,
        g: impl Fn(&mut PointEvaluator, &UnitVector) -> [f64; N] + Sync,
    ) -> [f64; N] {
        let basis = x.tangent_basis();
        let n_ang = self.quad_grid.n_lon();
        let dphi = 2.0 * PI / n_ang as f64;
        let rings: Vec<[f64; N]> = self
            .radial
            .par_iter()
            .map_init(
                || PointEvaluator::new(lmax),
                |ev, &(r, w)| {
                    let weight = w
                        * r.sin()
                        * cutoff_weight(r, self.cutoff_radius)
                        * r.powf(-2.0 - self.alpha)
                        * dphi;
                    let mut acc = [0.0; N];
                    for k in 0..n_ang {
                        let y = x.exp_map(&basis, r, dphi * k as f64);
                        let v = g(ev, &y);
                        for i in 0..N {
                            acc[i] += v[i];
                        }
                    }
                    acc.map(|s| s * weight)
                },
            )
            .collect();
        let mut out = [0.0; N];
        for ring in rings {
            for i in 0..N {
                out[i] += ring[i];
            }
        }
        out
    }
}

/// `Λ^α f(x)` from the leading singular kernel (`u₀ = 1`, no smoothing
/// correction kernel):
/// `c ∫_{ε<d} (f(x) − f(y)) χ(d)/d^{2+α} dvol(y) − c (π/2) Δf(x) ε^{2−α}/(2−α)`.
pub fn lambda_singular(
    a: &SpectralField,
    x: &UnitVector,
    k: &SingularKernel,
) -> Result<f64, FractionalError> {
    k.check_degree(a)?;
    let lmax = a.lmax();
    let mut ev = PointEvaluator::new(lmax);
    let fx = ev.eval(a, x);
    let lap = ev.eval(&laplacian(a), x);
    let [body] = k.polar_integral(x, lmax, |ev, y| [fx - ev.eval(a, y)]);
    Ok(k.c_alpha * (body - 0.5 * lap * k.ball_moment()))
}

/// `D(x) = c ∫ |∇f(x) − ∇f(y)|² χ(d)/d^{2+α} dvol(y)`, with the gradient
/// represented by the rotation-generator triple `(R_1 f, R_2 f, R_3 f)`.
/// The excluded ball contributes `c π Σ_ij (R_j R_i f)(x)² ε^{2−α}/(2−α)`.
pub fn dirichlet_d(
    a: &SpectralField,
    x: &UnitVector,
    k: &SingularKernel,
) -> Result<f64, FractionalError> {
    k.check_degree(a)?;
    let lmax = a.lmax();
    let gens = generators(a);
    let mut ev = PointEvaluator::new(lmax);
    let mut rx = [0.0; 3];
    ev.eval_many(&[&gens[0], &gens[1], &gens[2]], x, &mut rx);
    let mut hess = 0.0;
    for g in &gens {
        for axis in Axis::ALL {
            hess += ev.eval(&angular_momentum(g, axis), x).powi(2);
        }
    }
    let [body] = k.polar_integral(x, lmax, |ev, y| {
        let mut ry = [0.0; 3];
        ev.eval_many(&[&gens[0], &gens[1], &gens[2]], y, &mut ry);
        [(rx[0] - ry[0]).powi(2) + (rx[1] - ry[1]).powi(2) + (rx[2] - ry[2]).powi(2)]
    });
    Ok(k.c_alpha * (body + hess * k.ball_moment()))
}
