use std::f64::consts::PI;
use std::time::{Duration, Instant};

use cq_circuit::fault::{LoadStatus, Protection, ProtectionKind};
use cq_circuit::fit::{catalog, catalog_topology, fit_topology};
use cq_circuit::pfc::Compensator;
use cq_circuit::sensitivity::metric_at;
use cq_circuit::three_phase::{solve_by_reduction, solve_full, Connection, Sequence, ThreePhaseLoad};
use cq_circuit::{
    correct_power_factor, fit_equivalent_circuit, parse_netlist, protection_check, sensitivity, solve, Complex64,
    FaultSpec, Metric, Parameter, PfKind, PfLoad, ThreePhaseSystem,
};
use cq_testkit::mesh::{grid, ladder, ladder_netlist, SHAPES};
use cq_testkit::{close, Rng};

#[test]
fn mesh_oracle_on_seeded_grids() {
    for seed in 0..100u64 {
        let (rows, cols) = SHAPES[seed as usize % SHAPES.len()];
        let frequency = if seed % 2 == 0 { 0.0 } else { 50.0 * (1 + seed % 7) as f64 };
        let mesh = grid(seed, rows, cols, frequency);
        let expected = mesh.solve().expect("oracle solvable");
        let c = parse_netlist(&mesh.netlist()).unwrap();
        let s = solve(&c, frequency).unwrap();
        let scale = expected.node_voltages.iter().map(|(_, v)| v.norm()).fold(0.0, f64::max);
        for (node, v) in &expected.node_voltages {
            assert!(close(s.voltage(node).unwrap(), *v, 1e-9, scale), "seed {seed} node {node}");
        }
    }
}

#[test]
fn seeded_ladder_matches_mesh_currents() {
    let mesh = ladder(42, 10.0);
    let expected = mesh.solve().unwrap();
    let c = parse_netlist(&ladder_netlist(&mesh)).unwrap();
    let s = solve(&c, 0.0).unwrap();
    for (node, v) in &expected.node_voltages {
        assert!(close(s.voltage(node).unwrap(), *v, 1e-9, 10.0), "node {node}");
    }
    // First mesh current is the source current.
    assert!(close(-s.current("V1").unwrap(), expected.mesh_currents[0], 1e-9, 0.0));
}

fn random_balanced(rng: &mut Rng) -> ThreePhaseSystem {
    let z = |rng: &mut Rng| Complex64::new(rng.range(1.0, 50.0), rng.range(-30.0, 30.0));
    let loads = (0..1 + rng.below(3))
        .map(|_| {
            let connection = if rng.chance(0.5) { Connection::Wye } else { Connection::Delta };
            ThreePhaseLoad::balanced(connection, z(rng))
        })
        .collect();
    ThreePhaseSystem {
        v_ll: rng.range(100.0, 20e3),
        sequence: if rng.chance(0.5) { Sequence::Abc } else { Sequence::Acb },
        frequency: if rng.chance(0.5) { 50.0 } else { 60.0 },
        loads,
        line: rng.chance(0.6).then(|| Complex64::new(rng.range(0.01, 1.0), rng.range(0.0, 1.0))),
        neutral: match rng.below(3) {
            0 => None,
            1 => Some(Complex64::default()),
            _ => Some(Complex64::new(rng.range(0.01, 2.0), rng.range(0.0, 1.0))),
        },
    }
}

#[test]
fn balanced_reduction_equals_full_mna() {
    let mut rng = Rng::new(3);
    for case in 0..50 {
        let system = random_balanced(&mut rng);
        let a = solve_by_reduction(&system).unwrap().report;
        let b = solve_full(&system).unwrap().report;
        let v_scale = system.v_ll;
        let i_scale = b.line_currents.iter().map(|i| i.norm()).fold(0.0, f64::max);
        for k in 0..3 {
            assert!(close(a.phase_voltages[k], b.phase_voltages[k], 1e-9, v_scale), "case {case}");
            assert!(close(a.line_voltages[k], b.line_voltages[k], 1e-9, v_scale), "case {case}");
            assert!(close(a.line_currents[k], b.line_currents[k], 1e-9, i_scale), "case {case}");
            let ratio = a.line_voltages[k].norm() / a.phase_voltages[k].norm();
            assert!((ratio - 3f64.sqrt()).abs() <= 1e-9 * 3f64.sqrt(), "case {case}");
        }
        let s_scale = b.source_power.norm();
        assert!(close(a.source_power, b.source_power, 1e-9, s_scale), "case {case}");
        assert!(close(a.load_power, b.load_power, 1e-9, s_scale), "case {case}");
        assert!(b.neutral_current.norm() <= 1e-9 * i_scale, "case {case}");
    }
}

#[test]
fn power_factor_correction_cases() {
    let mut rng = Rng::new(19);
    for case in 0..50 {
        let pf = rng.range(0.4, 0.97);
        let target = rng.range(pf + 0.01, 1.0).min(1.0);
        let kind = if rng.chance(0.7) { PfKind::Lagging } else { PfKind::Leading };
        let load = PfLoad { p: rng.log_range(100.0, 1e6), pf, kind };
        let volts = rng.range(100.0, 11e3);
        let frequency = if rng.chance(0.5) { 50.0 } else { 60.0 };
        let r = correct_power_factor(load, target, volts, frequency).unwrap();
        assert!((r.achieved.value - target).abs() <= 1e-6, "case {case}: {} vs {target}", r.achieved.value);
        let qc = load.p * (pf.acos().tan() - target.acos().tan());
        let w = 2.0 * PI * frequency;
        match r.compensator {
            Compensator::Capacitor(c) => assert!((c - qc / (w * volts * volts)).abs() <= 1e-12 * c),
            Compensator::Inductor(l) => assert!((l - volts * volts / (w * qc)).abs() <= 1e-12 * l),
        }
    }
}

#[test]
fn catalog_fits_recover_reference_parameters() {
    for topology in catalog() {
        let data = topology.reference_measurements().unwrap();
        let started = Instant::now();
        let entry = fit_topology(&topology, &data).unwrap();
        let elapsed = started.elapsed();
        assert!(entry.residual < 1e-9, "{}: residual {}", topology.id, entry.residual);
        for (got, want) in entry.parameters.iter().zip(&topology.reference) {
            assert!((got - want).abs() <= 1e-3 * want, "{}: {got} vs {want}", topology.id);
        }
        assert!(elapsed < Duration::from_secs(5), "{} took {elapsed:?}", topology.id);
    }
}

#[test]
fn battery_from_two_loads_matches_linear_solve() {
    let topology = catalog_topology("battery-thevenin").unwrap();
    let (e, rs) = (12.6, 0.05);
    let data = topology.synthesize(&[e, rs], &topology.experiments).unwrap();
    // I = E/(Rs + RL) at two loads: E - Rs·I = RL·I.
    let i: Vec<f64> = data.iter().map(|m| m.observations[0].value.magnitude).collect();
    let (r1, r2) = (10.0, 2.0);
    let rs_oracle = (r1 * i[0] - r2 * i[1]) / (i[1] - i[0]);
    let e_oracle = i[0] * (r1 + rs_oracle);
    let fit = fit_equivalent_circuit(&[topology], &data).unwrap();
    assert!((fit.parameter("E").unwrap() - e_oracle).abs() <= 1e-3 * e_oracle);
    assert!((fit.parameter("Rs").unwrap() - rs_oracle).abs() <= 1e-3 * rs_oracle);
}

#[test]
fn nested_battery_models_prefer_the_simpler() {
    let plain = catalog_topology("battery-thevenin").unwrap();
    let rc = catalog_topology("battery-thevenin-rc").unwrap();
    let data = plain.synthesize(&plain.reference, &rc.experiments).unwrap();
    let fit = fit_equivalent_circuit(&[rc, plain], &data).unwrap();
    assert_eq!(fit.topology_id, "battery-thevenin");
    assert!(fit.residual < 1e-9);
}

#[test]
fn transformer_two_test_identification() {
    let topology = catalog_topology("transformer-simple").unwrap();
    let data = topology.reference_measurements().unwrap();
    let w = 2.0 * PI * 50.0;
    // Source currents enter the + terminal, so the drawn current is negated.
    // Open circuit: only the magnetising branch draws current.
    let y0 = -data[0].observations[0].value.to_complex() / 230.0;
    let rc = 1.0 / y0.re;
    let lm = -1.0 / (w * y0.im);
    // Short circuit: the series branch in parallel with the magnetising one.
    let ysc = -data[1].observations[0].value.to_complex() / 12.0;
    let zeq = 1.0 / (ysc - y0);
    let oracle = [rc, lm, zeq.re, zeq.im / w];
    for (o, r) in oracle.iter().zip(&topology.reference) {
        assert!((o - r).abs() <= 1e-9 * r, "oracle {o} vs {r}");
    }
    let fit = fit_equivalent_circuit(&[topology], &data).unwrap();
    for (got, want) in fit.parameters.iter().zip(oracle) {
        assert!((got - want).abs() <= 1e-3 * want, "{got} vs {want}");
    }
}

#[test]
fn divider_sensitivity_matches_analytic() {
    let c = parse_netlist("VS 1 0 DC 10 RINT=0\nR1 1 2 1k\nR2 2 0 1k").unwrap();
    let d = sensitivity(&c, &Parameter::ElementValue("R2".into()), &Metric::VoltageMagnitude { a: "2".into(), b: "0".into() }, 0.0)
        .unwrap();
    let analytic = 10.0 * 1e3 / (2e3f64).powi(2);
    assert!((d.derivative - analytic).abs() <= 1e-5 * analytic);
}

fn secant_agrees(circuit: &cq_circuit::Circuit, parameter: &Parameter, metric: &Metric, frequency: f64, x: f64) {
    let d = sensitivity(circuit, parameter, metric, frequency).unwrap();
    let h = d.step / 2.0;
    let hi = metric_at(circuit, parameter, metric, frequency, x + h).unwrap();
    let lo = metric_at(circuit, parameter, metric, frequency, x - h).unwrap();
    let secant = (hi - lo) / (2.0 * h);
    assert!(d.derivative.signum() == secant.signum(), "{} vs {secant}", d.derivative);
    assert!((d.derivative - secant).abs() <= 1e-4 * secant.abs(), "{} vs {secant}", d.derivative);
}

#[test]
fn three_phase_loss_sensitivity_to_frequency() {
    let system = ThreePhaseSystem {
        v_ll: 400.0,
        sequence: Sequence::Abc,
        frequency: 50.0,
        loads: vec![ThreePhaseLoad::balanced(Connection::Wye, Complex64::new(8.0, 6.0))],
        line: Some(Complex64::new(0.2, 0.3)),
        neutral: None,
    };
    let circuit = solve_full(&system).unwrap().circuit;
    let lines = ["RLINEA", "RLINEB", "RLINEC"].map(String::from).to_vec();
    let metric = Metric::PowerSum { elements: lines };
    secant_agrees(&circuit, &Parameter::Frequency, &metric, 50.0, 50.0);
    // Higher frequency raises the inductive load reactance, so line
    // current and losses fall.
    let d = sensitivity(&circuit, &Parameter::Frequency, &metric, 50.0).unwrap();
    assert!(d.derivative < 0.0);
}

#[test]
fn sensitivity_agrees_with_secant_on_random_circuits() {
    let mut rng = Rng::new(23);
    for seed in 0..30 {
        let rc = cq_testkit::random::random_circuit(
            3000 + seed,
            cq_testkit::random::Options { max_nodes: 10, exotic: false, ..Default::default() },
        );
        let c = parse_netlist(&rc.netlist).unwrap();
        let resistors: Vec<_> = c.elements().iter().filter(|e| e.name.starts_with('R')).collect();
        let r = resistors[rng.below(resistors.len())];
        let x = r.primary_value(rc.frequency).unwrap();
        let node = rc.nodes[rng.below(rc.nodes.len())].clone();
        let metric = Metric::VoltageMagnitude { a: node, b: "0".into() };
        let parameter = Parameter::ElementValue(r.name.clone());
        let d = sensitivity(&c, &parameter, &metric, rc.frequency).unwrap();
        let m0 = metric_at(&c, &parameter, &metric, rc.frequency, x).unwrap();
        let scale = solve(&c, rc.frequency).unwrap().node_voltages.values().map(|v| v.norm()).fold(0.0, f64::max);
        // A 1e-6 step resolves the derivative to about solver rounding over
        // 1e-6 times the elasticity; skip metrics at rounding level or with
        // elasticity under 1%, where that exceeds the 1e-4 tolerance.
        if m0 < 1e-6 * scale || (d.derivative * x).abs() < 1e-2 * m0 {
            continue;
        }
        secant_agrees(&c, &parameter, &metric, rc.frequency, x);
    }
}

const FEEDERS: &str = "\
VS 1 0 DC 230 RINT=0
RF 1 bus 0.05
RWA bus a 0.2
RLA a 0 23
RWB bus b 0.2
RLB b 0 46
RWC bus c 0.2
RLC c 0 115
";

fn breakers(threshold: f64) -> Vec<Protection> {
    ["RWA", "RWB", "RWC"]
        .iter()
        .map(|e| Protection { element: e.to_string(), threshold, kind: ProtectionKind::Overcurrent })
        .collect()
}

#[test]
fn per_branch_breakers_isolate_only_the_faulted_branch() {
    let c = parse_netlist(FEEDERS).unwrap();
    let fault = FaultSpec::Short { a: "b".into(), b: "0".into(), ohms: 0.0 };
    let report = protection_check(&c, &breakers(40.0), &fault, 0.0, 0.0).unwrap();
    assert_eq!(report.tripped, vec!["RWB".to_string()]);
    assert!(report.isolated);
    let without_b = parse_netlist(&FEEDERS.replace("RWB bus b 0.2\n", "").replace("RLB b 0 46\n", "")).unwrap();
    let oracle = solve(&without_b, 0.0).unwrap();
    for e in ["RWA", "RLA", "RWC", "RLC"] {
        let want = oracle.current(e).unwrap();
        assert!(close(report.post_trip.current(e).unwrap(), want, 1e-9, 0.0), "{e}");
    }
    assert_eq!(report.loads["RLB"], LoadStatus::Deenergized);
}

#[test]
fn single_upstream_breaker_drops_every_load() {
    let c = parse_netlist(FEEDERS).unwrap();
    let fault = FaultSpec::Short { a: "b".into(), b: "0".into(), ohms: 0.0 };
    let protections = vec![Protection { element: "RF".into(), threshold: 63.0, kind: ProtectionKind::Overcurrent }];
    let report = protection_check(&c, &protections, &fault, 0.0, 0.0).unwrap();
    assert_eq!(report.tripped, vec!["RF".to_string()]);
    for load in ["RLA", "RLB", "RLC"] {
        assert_eq!(report.loads[load], LoadStatus::Deenergized, "{load}");
    }
}

#[test]
fn bypass_residual_below_threshold_does_not_trip() {
    let c = parse_netlist("VS 1 0 DC 230 RINT=0\nR1 1 2 100\nR2 2 0 100").unwrap();
    let fault = FaultSpec::Bypass { node: "2".into(), ohms: 50.0 };
    let rcd = vec![Protection { element: "R1".into(), threshold: 0.03, kind: ProtectionKind::Differential }];
    let report = protection_check(&c, &rcd, &fault, 10e3, 0.0).unwrap();
    // Thevenin view of node 2: 115 V behind 50 Ω.
    let oracle = 115.0 / (50.0 + 50.0 + 10e3);
    let residual = report.residual_current.unwrap();
    assert!((residual - oracle).abs() <= 1e-9 * oracle);
    assert!(report.tripped.is_empty());
    assert_eq!(report.readings[0].measured, residual);

    // A lower ground loop pushes the residual over 30 mA.
    let report = protection_check(&c, &rcd, &fault, 1e3, 0.0).unwrap();
    assert_eq!(report.tripped, vec!["R1".to_string()]);
}
