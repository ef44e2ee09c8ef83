use super::{DiagnosticsError, DiagnosticsRecord, Recorder};
use crate::solver::{run, InitialCondition, SimulationState, SolverConfig};

/// Tolerance on increases of the squared `L²` norm between samples.
pub const L2_TOLERANCE: f64 = 1e-12;
/// Relative tolerance on increases of the node maximum.
pub const LINF_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct L2DecayReport {
    /// Largest `l2(t_{i+1})² − l2(t_i)²` (nonpositive for strict decay).
    pub max_violation: f64,
    /// Largest `(linf(t_{i+1}) − linf(t_i)) / linf(t_i)`.
    pub max_linf_growth: f64,
    pub passed: bool,
}

/// Checks that `‖θ‖²` and `‖θ‖_∞` do not increase between consecutive samples.
/// Fewer than two records pass vacuously.
pub fn l2_decay_audit(records: &[DiagnosticsRecord]) -> L2DecayReport {
    if records.len() < 2 {
        return L2DecayReport {
            max_violation: 0.0,
            max_linf_growth: 0.0,
            passed: true,
        };
    }
    let mut max_violation = f64::NEG_INFINITY;
    let mut max_linf_growth = f64::NEG_INFINITY;
    for w in records.windows(2) {
        max_violation = max_violation.max(w[1].l2.powi(2) - w[0].l2.powi(2));
        if w[0].linf > 0.0 {
            max_linf_growth = max_linf_growth.max((w[1].linf - w[0].linf) / w[0].linf);
        }
    }
    L2DecayReport {
        passed: max_violation <= L2_TOLERANCE && max_linf_growth <= LINF_TOLERANCE,
        max_violation,
        max_linf_growth,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientReport {
    pub t0: f64,
    /// `sup_{t ≥ t0} grad_sup`.
    pub sup_after: f64,
    /// `sup_{t ≤ t0} grad_sup`.
    pub sup_before: f64,
    /// `sup_after / max(‖θ_0‖_∞, ‖∇θ_0‖_∞)`.
    pub ratio_to_initial: f64,
    /// Largest `grad_sup` in the last quarter of the samples.
    pub tail_sup: f64,
    /// `tail_sup ≤ 1.1 · global sup`.
    pub no_blowup: bool,
}

impl GradientReport {
    /// `sup_after / sup_before`.
    pub fn growth(&self) -> f64 {
        self.sup_after / self.sup_before
    }
}

/// Late-time gradient bound relative to the early window and the initial data.
pub fn gradient_monitor(
    records: &[DiagnosticsRecord],
    t0: f64,
) -> Result<GradientReport, DiagnosticsError> {
    let first = records.first().ok_or(DiagnosticsError::EmptyWindow(t0))?;
    let sup = |it: &mut dyn Iterator<Item = &DiagnosticsRecord>| {
        it.map(|r| r.grad_sup).fold(f64::NEG_INFINITY, f64::max)
    };
    let sup_after = sup(&mut records.iter().filter(|r| r.time >= t0));
    if sup_after == f64::NEG_INFINITY {
        return Err(DiagnosticsError::EmptyWindow(t0));
    }
    let sup_before = sup(&mut records.iter().filter(|r| r.time <= t0));
    let global = sup(&mut records.iter());
    let tail_start = records.len() - records.len().div_ceil(4);
    let tail_sup = sup(&mut records[tail_start..].iter());
    Ok(GradientReport {
        t0,
        sup_after,
        sup_before,
        ratio_to_initial: sup_after / first.linf.max(first.grad_sup),
        tail_sup,
        no_blowup: tail_sup <= 1.1 * global,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct H3Fit {
    /// `(h_{i+1}² − h_i²) / (Δt h_i³)` per sample interval.
    pub values: Vec<f64>,
    /// Maximum of `values`: the empirical constant.
    pub fitted_c: f64,
    pub first_half_max: f64,
    pub second_half_max: f64,
    /// Finite, and `second_half_max ≤ 2 · max(first_half_max, 0)`.
    pub stable: bool,
}

/// Fits `C` in `d/dt ‖θ‖²_{H³} ≤ C ‖θ‖³_{H³}` by forward differences.
pub fn h3_inequality_fit(records: &[DiagnosticsRecord]) -> Result<H3Fit, DiagnosticsError> {
    if records.len() < 3 {
        return Err(DiagnosticsError::TooFewSamples {
            needed: 3,
            got: records.len(),
        });
    }
    let values: Vec<f64> = records
        .windows(2)
        .filter(|w| w[0].h_norms[3] > 0.0 && w[1].time > w[0].time)
        .map(|w| {
            let (h0, h1) = (w[0].h_norms[3], w[1].h_norms[3]);
            (h1 * h1 - h0 * h0) / ((w[1].time - w[0].time) * h0.powi(3))
        })
        .collect();
    if values.is_empty() {
        return Err(DiagnosticsError::ZeroField);
    }
    let max = |s: &[f64]| s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let half = values.len() / 2;
    let fitted_c = max(&values);
    let first_half_max = max(&values[..half.max(1)]);
    let second_half_max = max(&values[half..]);
    Ok(H3Fit {
        stable: fitted_c.is_finite() && second_half_max <= 2.0 * first_half_max.max(0.0),
        values,
        fitted_c,
        first_half_max,
        second_half_max,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwinReport {
    pub times: Vec<f64>,
    /// `‖θ_A − θ_B‖_{L²}` on the common (coarser) truncation.
    pub distances: Vec<f64>,
    /// Gronwall rate: max `grad_sup` of the finer run.
    pub k_rate: f64,
    /// Discretisation floor: max `L²` norm of the finer run above the coarse
    /// run's dealiased band.
    pub floor: f64,
    /// `(distance(t_1) + floor) · e^{K t}` at each sample.
    pub envelope: Vec<f64>,
    pub within_envelope: bool,
}

impl TwinReport {
    pub fn final_distance(&self) -> f64 {
        *self.distances.last().unwrap_or(&0.0)
    }
}

fn collect_run(
    config: &SolverConfig,
    ic: &InitialCondition,
) -> Result<Vec<SimulationState>, DiagnosticsError> {
    let mut out = Vec::new();
    run(ic, config, &mut |s| {
        out.push(s.clone());
        Ok(())
    })?;
    Ok(out)
}

/// Runs two configurations from the same initial data concurrently and
/// compares them against a Gronwall envelope.
pub fn twin_run_compare(
    config_a: &SolverConfig,
    config_b: &SolverConfig,
    ic: &InitialCondition,
) -> Result<TwinReport, DiagnosticsError> {
    if config_a.dt != config_b.dt
        || config_a.t_end != config_b.t_end
        || config_a.sample_every != config_b.sample_every
    {
        return Err(DiagnosticsError::IncompatibleRuns(
            "dt, t_end and sample_every must agree".into(),
        ));
    }
    if config_a.alpha != config_b.alpha {
        return Err(DiagnosticsError::IncompatibleRuns(
            "alpha must agree".into(),
        ));
    }
    let ic = match ic {
        InitialCondition::RandomBand { seed: None, .. } if config_a.seed != config_b.seed => {
            return Err(DiagnosticsError::IncompatibleRuns(
                "unseeded random data with different run seeds".into(),
            ))
        }
        other => other.clone(),
    };
    let (ra, rb) = rayon::join(|| collect_run(config_a, &ic), || collect_run(config_b, &ic));
    let (ra, rb) = (ra?, rb?);
    let coarse = config_a.lmax.min(config_b.lmax);
    let (fine_run, fine_cfg, coarse_cfg) = if config_b.lmax >= config_a.lmax {
        (&rb, config_b, config_a)
    } else {
        (&ra, config_a, config_b)
    };
    let band = coarse_cfg.dealias_degree();
    let recorder = Recorder::new(fine_cfg.lmax, fine_cfg.alpha)?;
    let mut k_rate: f64 = 0.0;
    let mut floor: f64 = 0.0;
    for s in fine_run {
        k_rate = k_rate.max(recorder.record(s)?.grad_sup);
        let tail = &s.theta - &s.theta.truncated(band);
        floor = floor.max(tail.l2_norm());
    }
    let times: Vec<f64> = ra.iter().map(|s| s.time).collect();
    let distances: Vec<f64> = ra
        .iter()
        .zip(&rb)
        .map(|(a, b)| (&a.theta.resized(coarse) - &b.theta.resized(coarse)).l2_norm())
        .collect();
    let d1 = distances.get(1).copied().unwrap_or(0.0);
    let envelope: Vec<f64> = times
        .iter()
        .map(|t| (d1 + floor) * (k_rate * t).exp())
        .collect();
    let within_envelope = distances
        .iter()
        .zip(&envelope)
        .all(|(d, e)| *d <= e * (1.0 + 1e-9) + 1e-14);
    Ok(TwinReport {
        times,
        distances,
        k_rate,
        floor,
        envelope,
        within_envelope,
    })
}
