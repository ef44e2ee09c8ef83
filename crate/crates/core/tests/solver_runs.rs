use sqg_core::diagnostics::{h3_inequality_fit, record, Recorder};
use sqg_core::io::{encode_snapshot, TelemetryWriter};
use sqg_core::solver::{run, Solver, SolverError};
use sqg_core::{InitialCondition, SimulationState, SolverConfig, SpectralField};

fn random_ic(seed: u64) -> InitialCondition {
    InitialCondition::RandomBand {
        lo: 1,
        hi: 8,
        amplitude: 0.5,
        seed: Some(seed),
    }
}

fn final_theta(c: &SolverConfig, ic: &InitialCondition) -> SpectralField {
    run(ic, c, &mut |_| Ok(())).unwrap().theta
}

#[test]
fn same_seed_gives_identical_telemetry_and_snapshots() {
    let c = SolverConfig {
        lmax: 24,
        dt: 2e-3,
        t_end: 0.1,
        sample_every: 5,
        seed: 11,
        ..Default::default()
    };
    let ic = InitialCondition::RandomBand {
        lo: 1,
        hi: 10,
        amplitude: 0.4,
        seed: None,
    };
    let go = || {
        let rec = Recorder::new(c.lmax, c.alpha).unwrap();
        let mut w = TelemetryWriter::new(Vec::new()).unwrap();
        let end = run(&ic, &c, &mut |s| {
            w.write(&rec.record(s).unwrap())
                .map_err(|e| SolverError::Sink(e.to_string()))
        })
        .unwrap();
        (w.into_inner().unwrap(), encode_snapshot(&end, c.alpha))
    };
    let (csv_a, snap_a) = go();
    let (csv_b, snap_b) = go();
    assert_eq!(csv_a, csv_b);
    assert_eq!(snap_a, snap_b);
    let other = SolverConfig {
        seed: 12,
        ..c.clone()
    };
    assert_ne!(final_theta(&other, &ic), final_theta(&c, &ic));
}

#[test]
fn time_step_refinement_converges_at_second_order() {
    let ic = random_ic(2);
    let base = SolverConfig {
        lmax: 24,
        t_end: 0.2,
        sample_every: 1000,
        ..Default::default()
    };
    let at = |dt: f64| final_theta(&SolverConfig { dt, ..base.clone() }, &ic);
    let reference = at(1.25e-4);
    let e1 = (&at(4e-3) - &reference).l2_norm();
    let e2 = (&at(2e-3) - &reference).l2_norm();
    let order = (e1 / e2).log2();
    assert!(
        (1.7..2.4).contains(&order),
        "observed order {order} ({e1:e}, {e2:e})"
    );
}

#[test]
fn resolution_refinement_converges() {
    let ic = random_ic(3);
    let base = SolverConfig {
        dt: 2e-3,
        t_end: 0.3,
        sample_every: 1000,
        ..Default::default()
    };
    let at = |lmax: usize| {
        final_theta(
            &SolverConfig {
                lmax,
                ..base.clone()
            },
            &ic,
        )
        .resized(16)
    };
    let reference = at(64);
    let e16 = (&at(16) - &reference).l2_norm();
    let e32 = (&at(32) - &reference).l2_norm();
    assert!(e32 < 1e-3 * e16, "{e16:e} {e32:e}");
}

#[test]
fn viscosity_ladder_approaches_inviscid_run() {
    let ic = random_ic(4);
    let base = SolverConfig {
        lmax: 24,
        dt: 2e-3,
        t_end: 0.5,
        sample_every: 1000,
        ..Default::default()
    };
    let inviscid = final_theta(&base, &ic);
    let d: Vec<f64> = [1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&nu| (&final_theta(&SolverConfig { nu, ..base.clone() }, &ic) - &inviscid).l2_norm())
        .collect();
    assert!(d[0] > d[1] && d[1] > d[2], "{d:?}");
    assert!(
        (d[0] / d[1] - 10.0).abs() < 2.0,
        "distance should scale linearly in nu: {d:?}"
    );
}

#[test]
fn zonal_records_follow_exact_decay() {
    let c = SolverConfig {
        lmax: 16,
        dt: 1e-3,
        t_end: 0.5,
        sample_every: 50,
        ..Default::default()
    };
    let mut records = Vec::new();
    run(
        &InitialCondition::ZonalHarmonic { degree: 3 },
        &c,
        &mut |s| {
            records.push(record(s, 1.0).unwrap());
            Ok(())
        },
    )
    .unwrap();
    assert_eq!(records.len(), 11);
    let rate = 12f64.sqrt();
    for r in &records {
        assert!((r.l2 - (-rate * r.time).exp()).abs() < 1e-8);
    }
    let fit = h3_inequality_fit(&records).unwrap();
    assert!(fit.fitted_c < 0.0 && fit.stable);
}

#[test]
fn cfl_violation_reports_offending_state() {
    let c = SolverConfig {
        lmax: 32,
        dt: 0.5,
        t_end: 1.0,
        ..Default::default()
    };
    let theta = random_ic(1).build(32, 0).unwrap().scaled(20.0);
    let solver = Solver::new(c).unwrap();
    match solver.step(&SimulationState::new(theta.clone())) {
        Err(SolverError::Cfl { cfl, state, .. }) => {
            assert!(cfl > 0.8);
            assert_eq!(state.theta, theta);
        }
        other => panic!("expected CFL error, got {other:?}"),
    }
}
