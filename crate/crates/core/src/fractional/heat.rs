//! Heat kernel of the unit sphere,
//! `G(x, y, t) = Σ_ℓ (2ℓ+1)/(4π) e^{−ℓ(ℓ+1)t} P_ℓ(x·y)`.
//!
//! The Legendre series is used wherever it keeps relative accuracy. Deep in
//! the Gaussian tail (small `t`, large distance) its terms cancel to
//! roundoff; there the kernel is evaluated in log space from the
//! image-sum integral
//!
//! ```text
//! G = √2 e^{t/4} (4πt)^{−3/2} Σ_k (−1)^k ∫_d^π (φ+2kπ) e^{−(φ+2kπ)²/4t} / √(cos d − cos φ) dφ
//! ```

use std::f64::consts::PI;

use super::FractionalError;
use crate::geometry::{geodesic_distance, UnitVector};
use crate::quadrature::integrate_adaptive;

const SERIES_TAIL: f64 = 1e-15;
// Below this fraction of the absolute term sum the series has lost accuracy.
const CANCELLATION: f64 = 1e-9;
const MAX_DISTANCE: f64 = PI - 1e-9;

/// Smallest degree `L ≥ lmax` past the peak of `(2ℓ+1) e^{−ℓ(ℓ+1)t}` with
/// `(2L+1) e^{−L(L+1)t} < 1e−15`.
pub fn series_degree(t: f64, lmax: usize) -> usize {
    let peak = (0.5 / t).sqrt().ceil() as usize;
    let mut l = lmax.max(peak).max(1);
    while (2 * l + 1) as f64 * (-((l * (l + 1)) as f64) * t).exp() >= SERIES_TAIL {
        l += 1;
    }
    l
}

/// Series value and the sum of absolute term values.
fn series(d: f64, t: f64, lmax: usize) -> (f64, f64) {
    let x = d.cos();
    let (mut p0, mut p1) = (1.0, x);
    let mut sum = 0.0;
    let mut abs = 0.0;
    for l in 0..=lmax {
        let p = match l {
            0 => 1.0,
            1 => x,
            _ => {
                let lf = l as f64;
                let p2 = ((2.0 * lf - 1.0) * x * p1 - (lf - 1.0) * p0) / lf;
                p0 = p1;
                p1 = p2;
                p2
            }
        };
        let w = (2 * l + 1) as f64 / (4.0 * PI) * (-((l * (l + 1)) as f64) * t).exp();
        sum += w * p;
        abs += w * p.abs();
    }
    (sum, abs)
}

/// `ln G` from the image-sum integral; accurate where `G` underflows.
fn ln_image(d: f64, t: f64) -> f64 {
    let theta = d.clamp(0.0, MAX_DISTANCE);
    let u = PI - theta;
    let kmax = 4 + t.ceil() as i64;
    let integrand = |v: f64| -> f64 {
        let h = 0.5 * PI * v;
        let s1 = h.sin().powi(2);
        let s2 = h.cos().powi(2);
        let gap = 2.0 * (0.5 * u * s1).sin() * (0.5 * u * (1.0 + s2)).sin();
        if gap <= 0.0 {
            return 0.0;
        }
        let jac = u * 0.5 * PI * (PI * v).sin();
        let phi = theta + u * s1;
        let mut acc = 0.0;
        for k in -kmax..=kmax {
            let shift = 2.0 * PI * k as f64;
            let expo = (u * s1 + shift) * (2.0 * theta + u * s1 + shift) / (4.0 * t);
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * (phi + shift) * (-expo).exp();
        }
        acc * jac / gap.sqrt()
    };
    let s = integrate_adaptive(integrand, 0.0, 1.0, 1e-300, 1e-12);
    0.5 * 2f64.ln() + 0.25 * t - 1.5 * (4.0 * PI * t).ln() - theta * theta / (4.0 * t) + s.ln()
}

fn check_time(t: f64) -> Result<(), FractionalError> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(FractionalError::NonPositiveTime(t))
    }
}

/// `G` as a function of geodesic distance `d`.
pub fn heat_kernel_at_distance(d: f64, t: f64, lmax: usize) -> Result<f64, FractionalError> {
    check_time(t)?;
    let l = series_degree(t, lmax);
    let (v, abs) = series(d, t, l);
    if v > CANCELLATION * abs {
        Ok(v)
    } else {
        Ok(ln_image(d, t).exp())
    }
}

/// `ln G` as a function of geodesic distance `d`; finite where `G` underflows.
pub fn ln_heat_kernel_at_distance(d: f64, t: f64, lmax: usize) -> Result<f64, FractionalError> {
    check_time(t)?;
    let l = series_degree(t, lmax);
    let (v, abs) = series(d, t, l);
    if v > CANCELLATION * abs {
        Ok(v.ln())
    } else {
        Ok(ln_image(d, t))
    }
}

/// `G(x, y, t)`. `lmax` is a lower bound on the series degree; it is raised
/// automatically until the tail falls below `1e−15`.
pub fn heat_kernel(
    x: &UnitVector,
    y: &UnitVector,
    t: f64,
    lmax: usize,
) -> Result<f64, FractionalError> {
    heat_kernel_at_distance(geodesic_distance(x, y), t, lmax)
}

pub fn ln_heat_kernel(
    x: &UnitVector,
    y: &UnitVector,
    t: f64,
    lmax: usize,
) -> Result<f64, FractionalError> {
    ln_heat_kernel_at_distance(geodesic_distance(x, y), t, lmax)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gauss_legendre;

    #[test]
    fn diagonal_value_at_unit_time() {
        // truncated series oracle, terms ℓ ≤ 10
        let g = heat_kernel(&UnitVector::NORTH, &UnitVector::NORTH, 1.0, 10).unwrap();
        assert!((g - 0.112_876_078_715_22).abs() < 1e-12, "{g}");
        assert!((g - 0.11289).abs() < 1e-4);
    }

    #[test]
    fn rejects_nonpositive_time() {
        assert_eq!(
            heat_kernel_at_distance(0.1, 0.0, 8),
            Err(FractionalError::NonPositiveTime(0.0))
        );
        assert!(heat_kernel_at_distance(0.1, -1.0, 8).is_err());
    }

    #[test]
    fn symmetric() {
        let x = UnitVector::new(0.3, -0.2, 0.9).unwrap();
        let y = UnitVector::new(-0.5, 0.1, 0.2).unwrap();
        for t in [1e-2, 0.3, 2.0] {
            assert_eq!(
                heat_kernel(&x, &y, t, 0).unwrap(),
                heat_kernel(&y, &x, t, 0).unwrap()
            );
        }
    }

    #[test]
    fn unit_mass() {
        for t in [1e-3, 1e-2, 0.1, 1.0, 5.0] {
            let l = series_degree(t, 0);
            let (x, w) = gauss_legendre(l + 1);
            let mass: f64 = x
                .iter()
                .zip(&w)
                .map(|(&c, &w)| {
                    w * heat_kernel_at_distance(c.clamp(-1.0, 1.0).acos(), t, l).unwrap()
                })
                .sum::<f64>()
                * 2.0
                * PI;
            assert!((mass - 1.0).abs() < 1e-10, "t={t} mass={mass}");
        }
    }

    #[test]
    fn image_sum_matches_series_where_both_are_accurate() {
        for (d, t) in [
            (0.5, 0.01),
            (1.5, 0.05),
            (2.5, 0.2),
            (3.0, 0.5),
            (0.1, 1e-3),
        ] {
            let (s, _) = series(d, t, series_degree(t, 0));
            let i = ln_image(d, t);
            assert!((s.ln() - i).abs() < 1e-9, "d={d} t={t} {} {}", s.ln(), i);
        }
    }

    #[test]
    fn deep_tail_is_positive_and_finite() {
        for d in [2.0, 2.8, PI] {
            let lg = ln_heat_kernel_at_distance(d, 1e-3, 0).unwrap();
            assert!(lg.is_finite());
            // Gaussian leading order
            let gauss = -(d * d) / 4e-3 - (4.0 * PI * 1e-3).ln();
            assert!((lg - gauss).abs() < 10.0, "d={d} lg={lg} gauss={gauss}");
        }
    }
}
