use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{linf_oversampled, DiagnosticsError};
use crate::fractional::{dirichlet_d, SingularKernel};
use crate::geometry::UnitVector;
use crate::transform::{surface_gradient, Grid, PointEvaluator, SpectralField};

#[derive(Debug, Clone, PartialEq)]
pub struct BoundPoint {
    pub x: UnitVector,
    /// `D(x)`.
    pub lhs: f64,
    /// `|∇f(x)|^{2+α} / ‖f‖_∞^α`.
    pub rhs: f64,
    /// `rhs / lhs`, the constant needed at this point.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheckReport {
    pub points: Vec<BoundPoint>,
    /// `max rhs/lhs`: the smallest `c` with `D(x) ≥ rhs / c` at every point.
    pub fitted_constant: f64,
    /// Points with `D(x) ≤ 0`.
    pub violations: usize,
    pub threshold: f64,
    /// No node passed the gradient threshold.
    pub empty: bool,
}

/// Checks `D(x) ≥ |∇f(x)|^{2+α} / (c ‖f‖_∞^α)` at grid nodes where
/// `|∇f(x)| ≥ threshold · ‖f‖_∞`, fitting the constant `c`.
///
/// Candidates are all nodes of the degree-`max(L, 8)` grid above the
/// threshold; `‖f‖_∞` is taken on a 4x oversampled grid plus the poles.
pub fn nonlinear_bound_check(
    f: &SpectralField,
    alpha: f64,
    k: &SingularKernel,
    threshold: f64,
) -> Result<BoundCheckReport, DiagnosticsError> {
    if (k.alpha - alpha).abs() > 1e-12 {
        return Err(DiagnosticsError::AlphaMismatch {
            kernel: k.alpha,
            requested: alpha,
        });
    }
    let grid = Grid::new(f.lmax().max(8))?;
    let fr = f.resized(grid.lmax());
    let sup = linf_oversampled(f, 4)?;
    let grad = surface_gradient(&fr, &grid)?.magnitude();
    let mut candidates: Vec<(usize, usize)> = Vec::new();
    if sup > 0.0 {
        for ((j, kk), &g) in grad.values.indexed_iter() {
            if g >= threshold * sup && g > 1e-12 * sup {
                candidates.push((j, kk));
            }
        }
    }
    let points = candidates
        .par_iter()
        .map(|&(j, kk)| {
            let x = grid.node(j, kk);
            let lhs = dirichlet_d(f, &x, k)?;
            let rhs = grad.values[[j, kk]].powf(2.0 + alpha) / sup.powf(alpha);
            Ok(BoundPoint {
                x,
                lhs,
                rhs,
                ratio: rhs / lhs,
            })
        })
        .collect::<Result<Vec<_>, DiagnosticsError>>()?;
    let violations = points
        .iter()
        .filter(|p| p.lhs <= 0.0 || p.lhs.is_nan())
        .count();
    let fitted_constant = points.iter().map(|p| p.ratio).fold(0.0, f64::max);
    Ok(BoundCheckReport {
        empty: points.is_empty(),
        points,
        fitted_constant,
        violations,
        threshold,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModulusEstimate {
    pub rho_values: Vec<f64>,
    /// Monotone envelope of the sampled oscillation at each `ρ`.
    pub omega_values: Vec<f64>,
    /// Raw per-bin maxima before the envelope.
    pub raw_values: Vec<f64>,
}

/// Pairs sampled per `ρ` bin.
pub const PAIRS_PER_BIN: usize = 10_000;

fn random_unit(rng: &mut ChaCha8Rng) -> UnitVector {
    let z: f64 = rng.random_range(-1.0..=1.0);
    let phi: f64 = rng.random_range(0.0..2.0 * PI);
    UnitVector::from_spherical(z.clamp(-1.0, 1.0).acos(), phi)
}

/// Sampled modulus of continuity: for each `ρ`, the largest `|θ(x) − θ(y)|`
/// over [`PAIRS_PER_BIN`] seeded pairs at distance within 10% of `ρ`,
/// followed by a nondecreasing envelope in `ρ`.
pub fn modulus_estimate(theta: &SpectralField, rho_values: &[f64], seed: u64) -> ModulusEstimate {
    const CHUNKS: usize = 16;
    let per_chunk = PAIRS_PER_BIN.div_ceil(CHUNKS);
    let raw: Vec<f64> = rho_values
        .iter()
        .enumerate()
        .map(|(bin, &rho)| {
            let lo = (0.9 * rho).max(0.0);
            let hi = (1.1 * rho).min(PI);
            (0..CHUNKS)
                .into_par_iter()
                .map(|c| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((bin as u64) << 32) ^ c as u64);
                    let mut ev = PointEvaluator::new(theta.lmax());
                    let mut best: f64 = 0.0;
                    for _ in 0..per_chunk {
                        let x = random_unit(&mut rng);
                        let d = if hi > lo {
                            rng.random_range(lo..=hi)
                        } else {
                            lo
                        };
                        let phi = rng.random_range(0.0..2.0 * PI);
                        let y = x.exp_map(&x.tangent_basis(), d, phi);
                        best = best.max((ev.eval(theta, &x) - ev.eval(theta, &y)).abs());
                    }
                    best
                })
                .reduce(|| 0.0, f64::max)
        })
        .collect();
    let mut order: Vec<usize> = (0..rho_values.len()).collect();
    order.sort_by(|&a, &b| rho_values[a].total_cmp(&rho_values[b]));
    let mut omega = raw.clone();
    let mut running: f64 = 0.0;
    for &i in &order {
        running = running.max(raw[i]);
        omega[i] = running;
    }
    ModulusEstimate {
        rho_values: rho_values.to_vec(),
        omega_values: omega,
        raw_values: raw,
    }
}
