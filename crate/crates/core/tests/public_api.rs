//! End-to-end checks through the public API, each against a second path.

use approx::assert_abs_diff_eq;
use cohtherm_core::analysis::{classify, GridAxis, Regime};
use cohtherm_core::collision::{fixed_point, run};
use cohtherm_core::linalg::trace_distance;
use cohtherm_core::lindblad::integrate;
use cohtherm_core::thermo::second_law_residuals;
use cohtherm_core::verify::{sample_params, sample_state, Coherence};
use cohtherm_core::{steady_report, steady_state_analytic, BathSpec, DensityMatrix, MachineParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn master_equation_relaxes_to_analytic_steady_state() {
    let p = MachineParams::cold_coherent_reference();
    let start = DensityMatrix::maximally_mixed(2).unwrap();
    let late = integrate(&p, &start, 20.0, 0.004).unwrap();
    let target = steady_state_analytic(&p).rho;
    assert!(trace_distance(late.matrix(), target.matrix()) < 1e-10);
}

#[test]
fn collision_trajectory_reaches_fixed_point() {
    let p = MachineParams::hot_coherent_reference();
    let tau = 0.02;
    let traj = run(&DensityMatrix::maximally_mixed(2).unwrap(), &p, tau, 3000).unwrap();
    let fp = fixed_point(&p, tau).unwrap();
    assert!(trace_distance(traj.final_state().matrix(), fp.matrix()) < 1e-9);
    // cumulative heat per collision time approaches the steady current
    let last = traj.points.last().unwrap();
    let prev = &traj.points[traj.points.len() - 1001];
    let rate = (last.heat1 - prev.heat1) / (1000.0 * tau);
    let closed = steady_report(&p).heat1.total;
    assert_abs_diff_eq!(rate, closed, epsilon = 0.05 * closed.abs());
}

#[test]
fn config_text_round_trips() {
    let mut r = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let p = sample_params(&mut r, Coherence::Both);
        let q = MachineParams::from_config_str(&p.to_config_string()).unwrap();
        assert_eq!(p, q);
    }
}

#[test]
fn config_reports_every_problem() {
    let text = "B = -1\ngamma = 0\nbath1.T = 2\nbath1.B = 1\nbath2.T = 2\nbath2.B = 1\n";
    match MachineParams::from_config_str(text) {
        Err(cohtherm_core::Error::InvalidConfig(problems)) => assert_eq!(problems.len(), 2),
        other => panic!("{other:?}"),
    }
}

#[test]
fn second_law_fuzz() {
    let mut r = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..1000 {
        let p = sample_params(&mut r, Coherence::Bath1);
        let rho = steady_state_analytic(&p).rho;
        for residual in second_law_residuals(&p, rho.matrix()).unwrap() {
            assert!(residual >= -1e-9, "{residual} at {p:?}");
        }
    }
}

#[test]
fn first_law_fuzz_off_steady_state() {
    let mut r = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..1000 {
        let p = sample_params(&mut r, Coherence::Both);
        let rho = sample_state(&mut r);
        let report = cohtherm_core::thermo::thermo_report(&p, &rho);
        assert!(report.first_law_residual().abs() < 1e-10);
    }
}

#[test]
fn swapping_baths_mirrors_the_regime() {
    // relabelling the baths changes neither currents nor regime
    let mut r = ChaCha8Rng::seed_from_u64(29);
    for _ in 0..300 {
        let p = sample_params(&mut r, Coherence::None);
        let q = MachineParams::new(p.field, p.gamma, p.bath2, p.bath1).unwrap();
        let (rp, rq) = (steady_report(&p), steady_report(&q));
        assert_abs_diff_eq!(rp.heat1.total, rq.heat2.total, epsilon = 1e-12);
        assert_abs_diff_eq!(rp.power.total, rq.power.total, epsilon = 1e-12);
        let (lp, lq) = (classify(&rp, &p), classify(&rq, &q));
        if lp.base != Regime::HybridRefrigerator && lq.base != Regime::HybridRefrigerator {
            assert_eq!(lp, lq);
        }
    }
}

#[test]
fn grid_axis_rejects_bad_specs() {
    assert!(GridAxis::new("bath1.B", 0.0, f64::NAN, 3).is_err());
    assert!(GridAxis::new("bath1.B", 0.0, 1.0, 0).is_err());
    assert!("bath3.B:0:1:3".parse::<GridAxis>().is_err());
    let a = GridAxis::new("B", 2.0, 1.0, 3).unwrap();
    assert_eq!(a.values(), vec![2.0, 1.5, 1.0]);
}

#[test]
fn thermal_baths_at_one_temperature_exchange_nothing() {
    let p = MachineParams::new(
        1.3,
        0.7,
        BathSpec::thermal(2.0, 0.8),
        BathSpec::thermal(2.0, 0.8),
    )
    .unwrap();
    let r = steady_report(&p);
    for x in [r.heat1.total, r.heat2.total, r.power.total] {
        assert!(x.abs() < 1e-14);
    }
    assert_eq!(classify(&r, &p).base, Regime::CarnotPoint);
}
