//! Acceptance criteria AC1 to AC10, one PASS/FAIL line each.

use std::fs;
use std::process::Command;
use std::time::{Duration, Instant};

use cohtherm_core::analysis::{
    classify, default_curve_axis, epsilon_star, max_efficiency, power_efficiency_curve,
    reference_bounds, sweep_diagram, GridAxis, Regime,
};
use cohtherm_core::collision::{fixed_point, rate_limits};
use cohtherm_core::linalg::trace_distance;
use cohtherm_core::thermo::{
    coherence_rate_closed_form, common_factor_v, common_factor_v2, common_factor_v_at,
    equivalence_terms, thermo_report,
};
use cohtherm_core::verify::{sample_params, sample_state, Coherence};
use cohtherm_core::{
    steady_report, steady_state_analytic, steady_state_numeric, Bath, BathSpec, MachineParams,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Criterion = (&'static str, &'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn rng(stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(2024);
    r.set_stream(stream);
    r
}

fn rel(x: f64, y: f64) -> f64 {
    if x == y {
        0.0
    } else {
        (x - y).abs() / x.abs().max(y.abs())
    }
}

fn cold_setup(b1: f64, eps1: f64) -> MachineParams {
    MachineParams::new(
        1.0,
        1.0,
        BathSpec::coherent(2.5, b1, eps1, 0.0),
        BathSpec::thermal(3.0, 1.2),
    )
    .unwrap()
}

fn hot_setup(b2: f64, eps1: f64) -> MachineParams {
    MachineParams::new(
        1.0,
        1.0,
        BathSpec::coherent(3.0, 1.2, eps1, 0.0),
        BathSpec::thermal(2.5, b2),
    )
    .unwrap()
}

fn ac1() -> Outcome {
    let start = Instant::now();
    let mut r = rng(1);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let p = sample_params(&mut r, Coherence::Both);
        let a = steady_state_analytic(&p).rho;
        let n = steady_state_numeric(&p).expect("numeric steady state").rho;
        worst = worst.max(a.matrix().max_abs_diff(n.matrix()));
    }
    let elapsed = start.elapsed();
    outcome(
        worst < 1e-10 && elapsed < Duration::from_secs(1),
        format!(
            "max entry deviation {worst:.2e} over 100 draws in {:.3} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn structure_error(p: &MachineParams, v: f64) -> f64 {
    let r = steady_report(p);
    let (b1, b2) = (p.bath1.field, p.bath2.field);
    rel(r.heat1.total, b1 * v)
        .max(rel(r.heat2.total, -b2 * v))
        .max(rel(r.power.total, (b2 - b1) * v))
}

fn ac2() -> Outcome {
    let mut r = rng(2);
    let mut single = 0.0f64;
    let mut double = 0.0f64;
    for _ in 0..100 {
        let p = sample_params(&mut r, Coherence::Bath1);
        single = single.max(structure_error(&p, common_factor_v(&p).unwrap()));
        let q = sample_params(&mut r, Coherence::Both);
        double = double.max(structure_error(&q, common_factor_v2(&q)));
    }
    outcome(
        single < 1e-9 && double < 1e-9,
        format!("relative error {single:.2e} (one coherence), {double:.2e} (two)"),
    )
}

fn ac3() -> Outcome {
    let mut r = rng(3);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let p = sample_params(&mut r, Coherence::Both);
        let rho = sample_state(&mut r);
        worst = worst.max(thermo_report(&p, &rho).first_law_residual().abs());
    }
    outcome(
        worst < 1e-10,
        format!("max |dU - W - Q1 - Q2| = {worst:.2e} over 1000 states"),
    )
}

fn ac4() -> Outcome {
    let mut r = rng(4);
    let (mut worst, mut used, mut skipped) = (0.0f64, 0, 0);
    while used < 500 {
        let p = sample_params(&mut r, Coherence::Both);
        let (a1, a2) = equivalence_terms(&p);
        if a1 < 0.0 || a2 <= 0.0 {
            skipped += 1;
            continue;
        }
        used += 1;
        worst = worst.max((common_factor_v_at(&p, (a1 / a2).sqrt()) - common_factor_v2(&p)).abs());
    }
    outcome(
        worst < 1e-9,
        format!(
            "max |V(A1/A2) - V2| = {worst:.2e} over 500 draws ({skipped} with A1^2 < 0 skipped)"
        ),
    )
}

fn ac5() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    let mut check = |cond: bool, note: String| {
        ok &= cond;
        notes.push(note);
    };

    let (n1, n2) = cold_setup(1.0, 0.0).occupations();
    let v_left = common_factor_v(&cold_setup(0.999, 0.0)).unwrap();
    let v_right = common_factor_v(&cold_setup(1.001, 0.0)).unwrap();
    check(
        (n1 - n2).abs() < 1e-12 && v_left * v_right < 0.0,
        format!("n1=n2 at B1=1.0 (|dn| {:.1e})", (n1 - n2).abs()),
    );
    let w_at_equal = steady_report(&cold_setup(1.2, 0.7)).power.total.abs();
    check(
        w_at_equal < 1e-12,
        format!("W=0 at B1=1.2 ({w_at_equal:.1e})"),
    );

    let p = cold_setup(1.1, 0.0);
    let e = epsilon_star(&p).unwrap();
    let flips = common_factor_v_at(&p, e - 1e-3) * common_factor_v_at(&p, e + 1e-3) < 0.0;
    check(
        (e - 0.360).abs() <= 1e-3 && flips,
        format!("eps1*(1.1) = {e:.5}"),
    );

    let d = sweep_diagram(
        &cold_setup(0.9, 0.0),
        &GridAxis::new("bath1.B", 0.8, 1.5, 36).unwrap(),
        &GridAxis::new("bath1.epsilon", 0.0, 1.0, 21).unwrap(),
    )
    .unwrap();
    let counts = [
        Regime::Refrigerator,
        Regime::HybridRefrigerator,
        Regime::Accelerator,
        Regime::Engine,
    ]
    .map(|r| d.count(r));
    check(
        counts.iter().all(|&c| c > 0),
        format!("R/HR/A/E cells {counts:?}"),
    );

    let r = steady_report(&cold_setup(0.9, 0.0));
    check(
        (r.heat1.total - 0.0862).abs() < 1e-3 && (r.power.total - 0.0287).abs() < 1e-3,
        format!(
            "eps1=0: Q1 = {:.4}, W = {:.4}",
            r.heat1.total, r.power.total
        ),
    );
    outcome(ok, notes.join("; "))
}

fn ac6() -> Outcome {
    let steps = 1000;
    let mut crossing = None;
    let mut worst = f64::NEG_INFINITY;
    let mut prev_ahead = false;
    for k in 0..=steps {
        let eps = k as f64 / steps as f64;
        let r = steady_report(&MachineParams {
            bath1: BathSpec::coherent(2.5, 0.9, eps, 0.0),
            ..MachineParams::cold_coherent_reference()
        });
        let ahead = r.heat1.coherent.abs() > r.heat1.incoherent.abs();
        if ahead && !prev_ahead && crossing.is_none() {
            crossing = Some(eps);
        }
        prev_ahead = ahead;
        worst = worst.max(-r.bound_residual1.unwrap());
    }
    let c = crossing.unwrap_or(f64::NAN);
    outcome(
        (c - 0.2).abs() <= 0.05 && worst <= 1e-9,
        format!(
            "coherent heat overtakes at eps1 = {c:.3}; min bound residual {:.2e}",
            -worst
        ),
    )
}

fn ac7() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    let mut check = |cond: bool, note: String| {
        ok &= cond;
        notes.push(note);
    };

    let d = sweep_diagram(
        &hot_setup(1.0, 0.0),
        &GridAxis::new("bath2.B", 0.7, 1.5, 41).unwrap(),
        &GridAxis::new("bath1.epsilon", 0.0, 1.0, 21).unwrap(),
    )
    .unwrap();
    let hr = d.count(Regime::HybridRefrigerator);
    check(hr == 0, format!("HR cells {hr}"));

    let bounds = reference_bounds(&hot_setup(1.0, 0.0)).unwrap();
    let incoherent = power_efficiency_curve(&hot_setup(1.0, 0.0), &default_curve_axis()).unwrap();
    let first = incoherent.points.first().expect("engine points");
    let mp = incoherent.max_power.clone().expect("max power");
    check(
        (first.efficiency - 1.0 / 6.0).abs() <= 1e-3 && first.power < 1e-3,
        format!("zero-power eta {:.5}", first.efficiency),
    );
    check(
        (mp.efficiency - bounds.eta_curzon_ahlborn).abs() <= 2e-3,
        format!(
            "eta at max power {:.5} vs eta_CA {:.5}",
            mp.efficiency, bounds.eta_curzon_ahlborn
        ),
    );

    let coherent = power_efficiency_curve(&hot_setup(1.0, 0.1), &default_curve_axis()).unwrap();
    let beyond = coherent
        .points
        .iter()
        .filter(|p| p.efficiency > bounds.eta_carnot && p.power > 1e-4)
        .count();
    check(
        beyond > 0,
        format!("{beyond} points with eta > eta_C at eps1=0.1"),
    );

    let m = max_efficiency(&hot_setup(1.0, 0.0), 0.1).unwrap();
    let miss = (epsilon_star(&hot_setup(m.field2, 0.0)).unwrap() - 0.1).abs();
    let small = max_efficiency(&hot_setup(1.0, 0.0), 1e-3).unwrap();
    check(
        miss < 1e-10 && (small.eta_max - bounds.eta_carnot).abs() <= 1e-3,
        format!(
            "eta_max(0.1) = {:.5} (root miss {miss:.1e}), eta_max(1e-3) - eta_C = {:.1e}",
            m.eta_max,
            small.eta_max - bounds.eta_carnot
        ),
    );
    outcome(ok, notes.join("; "))
}

fn ac8() -> Outcome {
    let start = Instant::now();
    let p = MachineParams::cold_coherent_reference();
    let target = steady_state_analytic(&p).rho;
    let distances: Vec<f64> = [0.1, 0.05, 0.025, 0.0125]
        .iter()
        .map(|&t| trace_distance(fixed_point(&p, t).unwrap().matrix(), target.matrix()))
        .collect();
    let monotone = distances.windows(2).all(|w| w[1] < w[0]);
    let limits = rate_limits(&p, &target, &[1e-2, 5e-3, 2.5e-3, 1.25e-3]).unwrap();
    let report = thermo_report(&p, &target);
    let rhs = p.bath1.beta() * report.heat1.coherent + report.coherence_rate1.unwrap();
    let residual = (limits.relative_entropy[0].limit - rhs).abs();
    let elapsed = start.elapsed();
    outcome(
        monotone && residual < 1e-4 && elapsed < Duration::from_secs(30),
        format!(
            "trace distances {:?}; entropy relation residual {residual:.2e}; {:.2} s",
            distances
                .iter()
                .map(|d| format!("{d:.2e}"))
                .collect::<Vec<_>>(),
            elapsed.as_secs_f64()
        ),
    )
}

fn ac9() -> Outcome {
    let mut r = rng(9);
    let mut sign_violations = 0;
    for _ in 0..1000 {
        let p = sample_params(&mut r, Coherence::Bath1);
        let c1 = coherence_rate_closed_form(&p, Bath::One).unwrap();
        let c2 = coherence_rate_closed_form(&p, Bath::Two).unwrap();
        if c1 > 0.0 || c2 < 0.0 {
            sign_violations += 1;
        }
    }
    let mut classical_violations = 0;
    let (mut engines, mut fridges) = (0, 0);
    for _ in 0..1000 {
        let p = sample_params(&mut r, Coherence::None);
        let report = steady_report(&p);
        let label = classify(&report, &p);
        let bounds = reference_bounds(&p).unwrap();
        let (t1, t2) = (p.bath1.temperature, p.bath2.temperature);
        let (q_cold, q_hot) = if t1 <= t2 {
            (report.heat1.total, report.heat2.total)
        } else {
            (report.heat2.total, report.heat1.total)
        };
        let w = report.power.total;
        match label.base {
            Regime::Engine => {
                engines += 1;
                if -w / q_hot > bounds.eta_carnot {
                    classical_violations += 1;
                }
            }
            Regime::Refrigerator => {
                fridges += 1;
                if q_cold > 0.0 && q_cold / w > bounds.cop_carnot {
                    classical_violations += 1;
                }
            }
            _ => {}
        }
        if label.beyond_carnot {
            classical_violations += 1;
        }
    }
    outcome(
        sign_violations == 0 && classical_violations == 0,
        format!(
            "{sign_violations} sign violations / 1000; {classical_violations} Carnot violations over {engines} engines and {fridges} refrigerators"
        ),
    )
}

fn ac10() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for run in 0..2 {
        let out = dir.path().join(format!("run{run}.csv"));
        let status = Command::new(env!("CARGO_BIN_EXE_cohtherm"))
            .args([
                "diagram",
                "--grid",
                "bath1.B:0.8:1.5:36",
                "--grid",
                "bath1.epsilon:0:1:21",
                "--out",
                out.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
        let mut bytes = fs::read(&out).unwrap();
        for name in ["equal_fields", "equal_occupations", "epsilon_star"] {
            bytes.extend(fs::read(dir.path().join(format!("run{run}.{name}.csv"))).unwrap());
        }
        outputs.push(bytes);
    }
    outcome(
        outputs[0] == outputs[1],
        format!("{} bytes per run incl. overlays", outputs[0].len()),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("AC1", "steady-state equivalence", ac1),
        ("AC2", "common-factor structure", ac2),
        ("AC3", "first law", ac3),
        ("AC4", "single-bath equivalence identity", ac4),
        ("AC5", "cold-bath coherence diagram", ac5),
        ("AC6", "coherent heat and local bound", ac6),
        ("AC7", "hot-bath coherence diagram and curves", ac7),
        ("AC8", "collision-limit convergence", ac8),
        ("AC9", "sign properties and classical consistency", ac9),
        ("AC10", "deterministic diagram output", ac10),
    ];
    let mut failed = 0;
    for (id, name, f) in criteria {
        let o = f();
        if !o.passed {
            failed += 1;
        }
        println!(
            "[{}] {id} {name}: {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
