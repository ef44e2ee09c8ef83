//! Pointwise commutator `[Λ^α, a] f (x₀) = Λ^α(a f)(x₀) − a(x₀) Λ^α f(x₀)`
//! for a multiplier `a` that is flat at `x₀` (`∇a(x₀) = 0`).

use std::sync::Arc;

use super::{check_alpha, lambda_multiplier, FractionalError};
use crate::geometry::UnitVector;
use crate::transform::{
    analyze, generators, synthesize, Grid, PhysicalField, PointEvaluator, SpectralField,
};

/// Relative gradient bound at the base point.
pub const PROBE_FLATNESS: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct CommutatorProbe {
    a: SpectralField,
    x0: UnitVector,
}

fn sup_norm(a: &SpectralField) -> Result<f64, FractionalError> {
    let g = Grid::new((2 * a.lmax()).max(4))?;
    Ok(synthesize(a, &g)?.max_abs())
}

impl CommutatorProbe {
    /// Validates `|∇a(x₀)| ≤ 1e−8 ‖a‖_∞`.
    pub fn new(a: SpectralField, x0: UnitVector) -> Result<Self, FractionalError> {
        let mut ev = PointEvaluator::new(a.lmax());
        let grad = ev.gradient(&generators(&a), &x0);
        let gnorm = (grad[0] * grad[0] + grad[1] * grad[1] + grad[2] * grad[2]).sqrt();
        let limit = PROBE_FLATNESS * sup_norm(&a)?.max(ev.eval(&a, &x0).abs());
        if gnorm > limit {
            return Err(FractionalError::ProbeInvariant {
                gradient: gnorm,
                limit,
            });
        }
        Ok(CommutatorProbe { a, x0 })
    }

    /// `a = Y_20` at the north pole, where its gradient vanishes.
    pub fn standard() -> Self {
        Self::new(SpectralField::zonal(2, 2), UnitVector::NORTH).expect("Y_20 is flat at the pole")
    }

    pub fn multiplier(&self) -> &SpectralField {
        &self.a
    }

    pub fn base_point(&self) -> UnitVector {
        self.x0
    }
}

/// `[Λ^α, a] f (x₀)`, with the product `a f` formed exactly on a grid of
/// degree `deg a + deg f`.
pub fn commutator_apply(
    p: &CommutatorProbe,
    f: &SpectralField,
    alpha: f64,
) -> Result<f64, FractionalError> {
    check_alpha(alpha)?;
    let lg = (p.a.lmax() + f.lmax()).max(2);
    let grid: Arc<Grid> = Grid::new(lg)?;
    let av = synthesize(&p.a, &grid)?;
    let fv = synthesize(f, &grid)?;
    let prod = PhysicalField {
        grid: grid.clone(),
        values: &av.values * &fv.values,
    };
    let af = analyze(&prod)?;
    let mut ev = PointEvaluator::new(lg);
    let lhs = ev.eval(&lambda_multiplier(&af, alpha), &p.x0);
    let rhs = ev.eval(&p.a, &p.x0) * ev.eval(&lambda_multiplier(f, alpha), &p.x0);
    Ok(lhs - rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fractional::{lambda_semigroup, SemigroupQuadrature};
    use num_complex::Complex64;

    #[test]
    fn rejects_sloped_multiplier() {
        let a = SpectralField::zonal(2, 1);
        let x = UnitVector::new(1.0, 0.0, 1.0).unwrap();
        assert!(matches!(
            CommutatorProbe::new(a, x),
            Err(FractionalError::ProbeInvariant { .. })
        ));
    }

    #[test]
    fn constant_multiplier_commutes() {
        let mut a = SpectralField::zeros(2);
        a.set(0, 0, Complex64::new(2.0, 0.0));
        let p = CommutatorProbe::new(a, UnitVector::new(0.1, 0.2, 0.3).unwrap()).unwrap();
        let f = SpectralField::real_part_of_mode(6, 5, 2);
        assert!(commutator_apply(&p, &f, 1.0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn y10_against_semigroup_oracle() {
        let p = CommutatorProbe::standard();
        let f = SpectralField::zonal(1, 1);
        let v = commutator_apply(&p, &f, 1.0).unwrap();
        assert!(v.is_finite() && v.abs() > 1e-3);
        // independent evaluation of Λ(a f) through the heat semigroup
        let q = SemigroupQuadrature::standard().calibrated(1.0).unwrap();
        let g = Grid::new(6).unwrap();
        let prod = PhysicalField {
            grid: g.clone(),
            values: &synthesize(&p.a.resized(6), &g).unwrap().values
                * &synthesize(&f.resized(6), &g).unwrap().values,
        };
        let af = analyze(&prod).unwrap();
        let n = UnitVector::NORTH;
        let mut ev = PointEvaluator::new(6);
        let oracle = lambda_semigroup(&af, &n, 1.0, &q).unwrap()
            - ev.eval(&p.a, &n) * lambda_semigroup(&f, &n, 1.0, &q).unwrap();
        assert!((v - oracle).abs() < 1e-8, "{v} {oracle}");
    }
}
