//! The fractional Laplace–Beltrami operator `Λ^α = (−Δ)^{α/2}` on the unit
//! sphere, realised three ways:
//!
//! * [`lambda_power`]: spectral multiplier `(ℓ(ℓ+1))^{α/2}`, the reference;
//! * [`lambda_semigroup`]: heat-semigroup subordination
//!   `c ∫_0^∞ t^{−1−α/2} (f(x) − e^{tΔ}f(x)) dt`;
//! * [`lambda_singular`]: principal-value singular integral against the
//!   leading kernel `c_α χ(d) / d^{2+α}`.
//!
//! Also the heat kernel, the commutator probe `[Λ^α, a]f(x₀)` and the
//! gradient-difference functional `D(x)`.

mod commutator;
mod heat;
mod semigroup;
mod singular;

use thiserror::Error;

use crate::transform::{SpectralField, TransformError};

pub use commutator::{commutator_apply, CommutatorProbe};
pub use heat::{
    heat_kernel, heat_kernel_at_distance, ln_heat_kernel, ln_heat_kernel_at_distance, series_degree,
};
pub use semigroup::{lambda_semigroup, subordination_constant, SemigroupQuadrature};
pub use singular::{c_alpha_constant, cutoff_weight, dirichlet_d, lambda_singular, SingularKernel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FractionalError {
    #[error("negative power s = {0} needs a mean-zero field (a_00 = 0)")]
    NegativePowerWithMean(f64),
    #[error("power s = {0} outside [-2, 2]")]
    PowerOutOfRange(f64),
    #[error("order alpha = {0} outside (0, 2)")]
    AlphaOutOfRange(f64),
    #[error("heat kernel time must be positive, got t = {0}")]
    NonPositiveTime(f64),
    #[error("semigroup quadrature is not calibrated")]
    Uncalibrated,
    #[error("semigroup quadrature calibrated for alpha = {calibrated}, requested {requested}")]
    CalibrationMismatch { calibrated: f64, requested: f64 },
    #[error("invalid quadrature: {0}")]
    InvalidQuadrature(String),
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error(
        "exclusion radius {epsilon} too large for field degree {degree} (epsilon * degree > 1)"
    )]
    PvEpsilonTooLarge { epsilon: f64, degree: usize },
    #[error("probe multiplier has gradient {gradient:e} at the base point (limit {limit:e})")]
    ProbeInvariant { gradient: f64, limit: f64 },
    #[error(transparent)]
    Transform(#[from] TransformError),
}

pub(crate) fn check_alpha(alpha: f64) -> Result<(), FractionalError> {
    if alpha > 0.0 && alpha < 2.0 {
        Ok(())
    } else {
        Err(FractionalError::AlphaOutOfRange(alpha))
    }
}

/// Spectral multiplier `b_ℓm = (ℓ(ℓ+1))^{s/2} a_ℓm`; `Λ^s` for `s ∈ [−2, 2]`.
///
/// The mean mode maps to zero for `s > 0`; negative powers require it to vanish.
pub fn lambda_power(a: &SpectralField, s: f64) -> Result<SpectralField, FractionalError> {
    if !(-2.0..=2.0).contains(&s) {
        return Err(FractionalError::PowerOutOfRange(s));
    }
    if s < 0.0 && a.get(0, 0).norm() != 0.0 {
        return Err(FractionalError::NegativePowerWithMean(s));
    }
    if s == 0.0 {
        return Ok(a.clone());
    }
    Ok(a.map_degrees(|l| {
        if l == 0 {
            0.0
        } else {
            ((l * (l + 1)) as f64).powf(0.5 * s)
        }
    }))
}

/// `Λ^α` for any `α ≥ 0`, skipping the range check (used by the solver and
/// by composition tests such as `Λ^α Λ^β = Λ^{α+β}`).
pub(crate) fn lambda_multiplier(a: &SpectralField, alpha: f64) -> SpectralField {
    a.map_degrees(|l| {
        if l == 0 {
            0.0
        } else {
            ((l * (l + 1)) as f64).powf(0.5 * alpha)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::{synthesize, Grid, PhysicalField};
    use num_complex::Complex64;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_field(lmax: usize, seed: u64) -> SpectralField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = SpectralField::zeros(lmax);
        for l in 1..=lmax {
            for m in 0..=l {
                let v = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                a.set_real_pair(l, m, v);
            }
        }
        a
    }

    #[test]
    fn multiplier_examples() {
        let y20 = SpectralField::zonal(4, 2);
        let b = lambda_power(&y20, 1.0).unwrap();
        assert!((b.get(2, 0).re - 6f64.sqrt()).abs() < 1e-15);
        let mut c = SpectralField::zeros(3);
        c.set(0, 0, Complex64::new(3.0, 0.0));
        assert_eq!(lambda_power(&c, 1.0).unwrap().l2_norm(), 0.0);
        let y10 = SpectralField::zonal(3, 1);
        let b = lambda_power(&y10, -1.0).unwrap();
        assert!((b.get(1, 0).re - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(
            lambda_power(&c, -1.0),
            Err(FractionalError::NegativePowerWithMean(-1.0))
        );
        assert!(lambda_power(&y10, 2.5).is_err());
    }

    #[test]
    fn positivity_at_maxima() {
        // nonnegative smooth fields: squares of band-limited fields
        for seed in 0..50u64 {
            let h = random_field(6, seed);
            let g = Grid::new(12).unwrap();
            let hv = synthesize(&h.resized(12), &g).unwrap();
            let sq = PhysicalField {
                grid: g.clone(),
                values: hv.values.mapv(|v| v * v),
            };
            let f = crate::transform::analyze(&sq).unwrap();
            let lf = synthesize(&lambda_multiplier(&f, 1.0), &g).unwrap();
            let fv = synthesize(&f, &g).unwrap();
            let (j, k) = fv.argmax_abs();
            assert!(lf.values[[j, k]] >= -1e-8 * fv.max_abs(), "seed {seed}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn self_adjoint(s1 in 0u64..500, s2 in 0u64..500, alpha in 0.1f64..1.9) {
            let f = random_field(12, s1);
            let g = random_field(12, s2);
            let lhs = f.inner(&lambda_power(&g, alpha).unwrap());
            let rhs = g.inner(&lambda_power(&f, alpha).unwrap());
            prop_assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0));
        }

        #[test]
        fn composition(seed in 0u64..500, a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let f = random_field(10, seed);
            let lhs = lambda_power(&lambda_power(&f, a).unwrap(), b).unwrap();
            let rhs = lambda_power(&f, a + b).unwrap();
            prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12 * rhs.l2_norm().max(1.0));
        }
    }
}
