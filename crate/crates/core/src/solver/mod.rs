//! Time integration of
//! `θ_t + u·∇θ + Λ^α θ = ν Δθ`, `u = ∇^⊥ Λ^{-1} θ` on the unit sphere.
//!
//! Linear terms are integrated exactly through the factor
//! `E_ℓ = e^{−λ_ℓ dt}`, `λ_ℓ = (ℓ(ℓ+1))^{α/2} + ν ℓ(ℓ+1)`; the advection
//! term uses a two-stage Heun update under that factor:
//!
//! ```text
//! θ* = E (θ + dt N(θ))
//! θ⁺ = E θ + dt/2 (E N(θ) + N(θ*)),      N(θ) = −u·∇θ
//! ```
//!
//! `u·∇θ` is formed pseudospectrally from fields truncated at
//! `K = ⌊dealias_fraction · L⌋` and truncated again afterwards.

mod initial;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use initial::InitialCondition;

use crate::fractional::lambda_multiplier;
use crate::transform::{
    analyze, perp_gradient, surface_gradient, Grid, SpectralField, TransformError, VelocityField,
};

/// Largest admissible `dt · max|u| · L`.
pub const CFL_LIMIT: f64 = 0.8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("field has nonzero mean a_00 = {0:e}")]
    NonZeroMean(f64),
    #[error("CFL guard violated at step {}: dt*max|u|*L = {cfl:.4} > {limit}", state.step_index)]
    Cfl {
        cfl: f64,
        limit: f64,
        state: Box<SimulationState>,
    },
    #[error("invalid initial condition: {0}")]
    InitialCondition(String),
    #[error("output sink failed: {0}")]
    Sink(String),
    #[error(transparent)]
    Transform(#[from] TransformError),
}

/// Run parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub lmax: usize,
    pub dt: f64,
    pub t_end: f64,
    /// Dissipation order; 1 is the critical case.
    pub alpha: f64,
    /// Artificial viscosity coefficient.
    pub nu: f64,
    pub dealias_fraction: f64,
    /// Steps between diagnostic samples.
    pub sample_every: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            lmax: 64,
            dt: 1e-3,
            t_end: 1.0,
            alpha: 1.0,
            nu: 0.0,
            dealias_fraction: 2.0 / 3.0,
            sample_every: 10,
            seed: 0,
        }
    }
}

impl SolverConfig {
    /// Checks every invariant, naming the first one violated.
    pub fn validate(&self) -> Result<(), SolverError> {
        let fail = |m: &str| Err(SolverError::InvalidConfig(m.to_string()));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return fail("dt > 0");
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return fail("t_end > 0");
        }
        if !(self.alpha > 0.0 && self.alpha <= 2.0) {
            return fail("0 < alpha <= 2");
        }
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            return fail("nu >= 0");
        }
        if !(self.dealias_fraction > 0.5 && self.dealias_fraction <= 1.0) {
            return fail("0.5 < dealias_fraction <= 1");
        }
        if !(crate::transform::MIN_LMAX..=crate::transform::MAX_LMAX).contains(&self.lmax) {
            return fail("2 <= L_max <= 2048");
        }
        if self.sample_every == 0 {
            return fail("sample_every >= 1");
        }
        Ok(())
    }

    /// Retained degree `⌊dealias_fraction · L⌋` for nonlinear products.
    pub fn dealias_degree(&self) -> usize {
        ((self.dealias_fraction * self.lmax as f64) + 1e-9).floor() as usize
    }

    /// Number of steps to reach `t_end` (the last one may be shortened).
    pub fn n_steps(&self) -> u64 {
        ((self.t_end / self.dt) - 1e-9).ceil().max(1.0) as u64
    }
}

/// The evolving `(time, θ)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationState {
    pub time: f64,
    pub theta: SpectralField,
    pub step_index: u64,
}

impl SimulationState {
    pub fn new(theta: SpectralField) -> Self {
        SimulationState {
            time: 0.0,
            theta,
            step_index: 0,
        }
    }
}

fn check_mean(theta: &SpectralField) -> Result<(), SolverError> {
    let m = theta.get(0, 0).norm();
    if m > 1e-12 * theta.l2_norm().max(1.0) {
        return Err(SolverError::NonZeroMean(m));
    }
    Ok(())
}

fn stream_function(theta: &SpectralField) -> SpectralField {
    lambda_multiplier(theta, -1.0)
}

/// `u = ∇^⊥ Λ^{-1} θ` on `grid`.
pub fn compute_velocity(
    theta: &SpectralField,
    grid: &Arc<Grid>,
) -> Result<VelocityField, SolverError> {
    check_mean(theta)?;
    Ok(perp_gradient(&stream_function(theta), grid)?)
}

/// Dealiased `u·∇θ` with `u = ∇^⊥Λ^{-1}θ`, and `max|u|` at the grid nodes.
fn advection(
    theta: &SpectralField,
    grid: &Arc<Grid>,
    k: usize,
) -> Result<(SpectralField, f64), SolverError> {
    let tk = theta.truncated(k);
    let u = compute_velocity(&tk, grid)?;
    let g = surface_gradient(&tk, grid)?;
    let mut out = analyze(&u.dot(&g))?;
    out.truncate_in_place(k);
    Ok((out.resized(theta.lmax()), u.max_magnitude()))
}

/// `u·∇θ` with modes above `⌊dealias_fraction · L⌋` removed before and after
/// the product. `grid` must have degree at least `θ.lmax()`.
pub fn nonlinear_term(
    theta: &SpectralField,
    grid: &Arc<Grid>,
    dealias_fraction: f64,
) -> Result<SpectralField, SolverError> {
    let k = ((dealias_fraction * theta.lmax() as f64) + 1e-9).floor() as usize;
    advection(theta, grid, k).map(|(n, _)| n)
}

/// Reusable stepper holding the grid for one configuration.
#[derive(Debug, Clone)]
pub struct Solver {
    config: SolverConfig,
    grid: Arc<Grid>,
    k: usize,
}

impl Solver {
    pub fn new(config: SolverConfig) -> Result<Self, SolverError> {
        config.validate()?;
        let grid = Grid::new(config.lmax)?;
        let k = config.dealias_degree();
        Ok(Solver { config, grid, k })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// Linear decay rate `λ_ℓ`.
    pub fn decay_rate(&self, l: usize) -> f64 {
        let ll = (l * (l + 1)) as f64;
        ll.powf(0.5 * self.config.alpha) + self.config.nu * ll
    }

    fn factor(&self, a: &SpectralField, dt: f64) -> SpectralField {
        a.map_degrees(|l| (-self.decay_rate(l) * dt).exp())
    }

    /// Advances by `config.dt`.
    pub fn step(&self, s: &SimulationState) -> Result<SimulationState, SolverError> {
        self.step_by(s, self.config.dt)
    }

    /// Advances by `dt`, checking the CFL guard on the incoming state.
    pub fn step_by(&self, s: &SimulationState, dt: f64) -> Result<SimulationState, SolverError> {
        let theta = s.theta.resized(self.config.lmax);
        let (adv0, umax) = advection(&theta, &self.grid, self.k)?;
        let cfl = dt * umax * self.config.lmax as f64;
        if cfl > CFL_LIMIT {
            return Err(SolverError::Cfl {
                cfl,
                limit: CFL_LIMIT,
                state: Box::new(s.clone()),
            });
        }
        let n0 = -&adv0;
        let predictor = self.factor(&(&theta + &n0.scaled(dt)), dt);
        let (adv1, _) = advection(&predictor, &self.grid, self.k)?;
        let n1 = -&adv1;
        let mut next = &self.factor(&theta, dt) + &(&self.factor(&n0, dt) + &n1).scaled(0.5 * dt);
        next.set(0, 0, num_complex::Complex64::new(0.0, 0.0));
        Ok(SimulationState {
            time: s.time + dt,
            theta: next,
            step_index: s.step_index + 1,
        })
    }

    /// Integrates from `initial` to `t_end`, handing the state to `sink` at
    /// step 0, every `sample_every` steps and at the final step.
    pub fn run_from(
        &self,
        initial: SimulationState,
        sink: &mut dyn FnMut(&SimulationState) -> Result<(), SolverError>,
    ) -> Result<SimulationState, SolverError> {
        check_mean(&initial.theta)?;
        let n = self.config.n_steps();
        let mut state = initial;
        state.theta = state.theta.resized(self.config.lmax);
        sink(&state)?;
        for i in 1..=n {
            let dt = if i == n {
                self.config.t_end - (n - 1) as f64 * self.config.dt
            } else {
                self.config.dt
            };
            state = self.step_by(&state, dt)?;
            state.time = if i == n {
                self.config.t_end
            } else {
                i as f64 * self.config.dt
            };
            if i % self.config.sample_every as u64 == 0 || i == n {
                sink(&state)?;
            }
        }
        Ok(state)
    }
}

/// One step of `c.dt` (builds a grid; prefer [`Solver`] in loops).
pub fn step(s: &SimulationState, c: &SolverConfig) -> Result<SimulationState, SolverError> {
    Solver::new(c.clone())?.step(s)
}

/// Runs `ic` to `c.t_end`. Deterministic given `(c, ic)`.
pub fn run(
    ic: &InitialCondition,
    c: &SolverConfig,
    sink: &mut dyn FnMut(&SimulationState) -> Result<(), SolverError>,
) -> Result<SimulationState, SolverError> {
    let solver = Solver::new(c.clone())?;
    let theta = ic.build(c.lmax, c.seed)?;
    solver.run_from(SimulationState::new(theta), sink)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::{divergence, synthesize};
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn random(lmax: usize, seed: u64) -> SpectralField {
        InitialCondition::RandomBand {
            lo: 1,
            hi: lmax,
            amplitude: 0.3,
            seed: Some(seed),
        }
        .build(lmax, 0)
        .unwrap()
    }

    #[test]
    fn config_defaults_and_validation() {
        let c = SolverConfig::default();
        assert!(c.validate().is_ok());
        assert_eq!(c.dealias_degree(), 42);
        assert_eq!(c.n_steps(), 1000);
        for (f, msg) in [
            (
                SolverConfig {
                    dt: -1.0,
                    ..c.clone()
                },
                "dt > 0",
            ),
            (
                SolverConfig {
                    alpha: 2.5,
                    ..c.clone()
                },
                "alpha",
            ),
            (
                SolverConfig {
                    nu: -1.0,
                    ..c.clone()
                },
                "nu",
            ),
            (
                SolverConfig {
                    dealias_fraction: 0.5,
                    ..c.clone()
                },
                "dealias",
            ),
            (
                SolverConfig {
                    lmax: 1,
                    ..c.clone()
                },
                "L_max",
            ),
            (
                SolverConfig {
                    sample_every: 0,
                    ..c.clone()
                },
                "sample_every",
            ),
        ] {
            match f.validate() {
                Err(SolverError::InvalidConfig(m)) => assert!(m.contains(msg), "{m}"),
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn velocity_examples() {
        let g = Grid::new(16).unwrap();
        let u = compute_velocity(&SpectralField::zeros(16), &g).unwrap();
        assert_eq!(u.max_magnitude(), 0.0);
        let u = compute_velocity(&SpectralField::zonal(16, 1), &g).unwrap();
        // equator: |u| = |∂_θ ψ| with ψ = Y_10/√2
        let want = (3.0 / (4.0 * PI)).sqrt() / 2f64.sqrt();
        assert!((want - 0.34549).abs() < 1e-5);
        let j = g.n_lat() / 2; // ring nearest the equator
        let t = g.colatitudes()[j];
        assert!((u.magnitude().values[[j, 0]] - want * t.sin()).abs() < 1e-13);
        let mut m = SpectralField::zonal(4, 1);
        m.set(0, 0, Complex64::new(1.0, 0.0));
        assert!(matches!(
            compute_velocity(&m, &g),
            Err(SolverError::NonZeroMean(_))
        ));
        let th = random(16, 1);
        let u = compute_velocity(&th, &g).unwrap();
        assert!(divergence(&u).unwrap().l2_norm() <= 1e-8 * u.l2_norm());
    }

    #[test]
    fn nonlinear_examples() {
        let g = Grid::new(24).unwrap();
        for l in 1..=16 {
            let n = nonlinear_term(&SpectralField::zonal(24, l), &g, 2.0 / 3.0).unwrap();
            assert!(n.l2_norm() < 1e-11, "l={l}");
        }
        assert_eq!(
            nonlinear_term(&SpectralField::zeros(24), &g, 2.0 / 3.0)
                .unwrap()
                .l2_norm(),
            0.0
        );
        let th = random(24, 7);
        let n = nonlinear_term(&th, &g, 2.0 / 3.0).unwrap();
        assert!(n.get(0, 0).norm() < 1e-12);
        let k = 16;
        let proj = th.inner(&n);
        assert!(
            proj.abs() < 1e-9 * th.truncated(k).l2_norm() * n.l2_norm(),
            "{proj}"
        );
        assert!(n.reality_defect() < 1e-13);
    }

    #[test]
    fn dealiased_product_matches_oversampled_reference() {
        // u·∇θ for θ of degree K ≤ 2L/3 is exact on the base grid
        let l = 24;
        let th = random(16, 3);
        let coarse = nonlinear_term(&th.resized(l), &Grid::new(l).unwrap(), 2.0 / 3.0).unwrap();
        let fine_grid = Grid::new(64).unwrap();
        let u = compute_velocity(&th.resized(64), &fine_grid).unwrap();
        let gr = surface_gradient(&th.resized(64), &fine_grid).unwrap();
        let fine = analyze(&u.dot(&gr)).unwrap().truncated(16);
        assert!(coarse.max_abs_diff(&fine) < 1e-12);
    }

    #[test]
    fn zonal_step_is_exact() {
        let c = SolverConfig {
            lmax: 16,
            dt: 1e-3,
            ..Default::default()
        };
        let s = SimulationState::new(SpectralField::zonal(16, 2));
        let n = step(&s, &c).unwrap();
        let ratio = n.theta.get(2, 0).re;
        assert!((ratio - (-(6f64.sqrt()) * 1e-3).exp()).abs() < 1e-15);
        assert_eq!(n.step_index, 1);
        let z = step(&SimulationState::new(SpectralField::zeros(16)), &c).unwrap();
        assert_eq!(z.theta.l2_norm(), 0.0);
    }

    #[test]
    fn random_step_does_not_increase_l2() {
        let c = SolverConfig {
            lmax: 24,
            dt: 2e-3,
            ..Default::default()
        };
        let solver = Solver::new(c).unwrap();
        let mut s = SimulationState::new(random(24, 9));
        for _ in 0..20 {
            let n = solver.step(&s).unwrap();
            assert!(n.theta.norm_sq() <= s.theta.norm_sq() + 1e-12);
            assert!(n.theta.get(0, 0).norm() <= 1e-13);
            assert!(n.theta.reality_defect() < 1e-13);
            s = n;
        }
    }

    #[test]
    fn cfl_violation_returns_snapshot() {
        let c = SolverConfig {
            lmax: 16,
            dt: 0.5,
            ..Default::default()
        };
        let s = SimulationState::new(random(16, 2).scaled(20.0));
        match Solver::new(c).unwrap().step(&s) {
            Err(SolverError::Cfl { cfl, state, .. }) => {
                assert!(cfl > CFL_LIMIT);
                assert_eq!(*state, s);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn run_samples_and_final_time() {
        let c = SolverConfig {
            lmax: 8,
            dt: 0.03,
            t_end: 0.1,
            sample_every: 2,
            ..Default::default()
        };
        let mut times = vec![];
        let fin = run(
            &InitialCondition::ZonalHarmonic { degree: 2 },
            &c,
            &mut |s| {
                times.push(s.time);
                Ok(())
            },
        )
        .unwrap();
        assert_eq!(fin.step_index, 4);
        assert_eq!(fin.time, 0.1);
        assert_eq!(times, vec![0.0, 0.06, 0.1]);
        let want = (-(6f64.sqrt()) * 0.1).exp();
        assert!((fin.theta.get(2, 0).re - want).abs() < 1e-14);
        let g = Grid::new(8).unwrap();
        let f = synthesize(&fin.theta, &g).unwrap();
        assert!(f.max_abs() > 0.0);
    }
}
