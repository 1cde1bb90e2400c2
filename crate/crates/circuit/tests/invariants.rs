use cq_circuit::analysis::superpose;
use cq_circuit::netlist::{Element, ElementKind};
use cq_circuit::port::thevenin;
use cq_circuit::{parse_netlist, power_summary, solve, wye_delta, Circuit, Complex64, Direction, SourceValue};
use cq_testkit::random::{random_circuit, Options};
use cq_testkit::three_terminal::{delta_currents, wye_currents};
use cq_testkit::{close, Rng};
use proptest::prelude::*;

fn random(seed: u64, options: Options) -> (Circuit, f64) {
    let rc = random_circuit(seed, options);
    let c = parse_netlist(&rc.netlist).unwrap_or_else(|e| panic!("seed {seed}: {e}\n{}", rc.netlist));
    (c, rc.frequency)
}

#[test]
fn tellegen_and_kcl_on_random_circuits() {
    let mut solved = 0;
    for seed in 0..200 {
        let (c, f) = random(seed, Options::default());
        let s = match solve(&c, f) {
            Ok(s) => s,
            Err(e) => panic!("seed {seed}: {e}"),
        };
        let report = power_summary(&c, &s).unwrap();
        assert!(report.imbalance().norm() <= 1e-9 * report.max_apparent().max(1e-300), "seed {seed}");
        assert!(s.max_relative_kcl_residual(&c).unwrap() <= 1e-9, "seed {seed}");
        for e in report.elements.values() {
            assert!((e.s * e.s - (e.p * e.p + e.q * e.q)).abs() <= 1e-9 * (e.s * e.s).max(1e-300));
        }
        solved += 1;
    }
    assert_eq!(solved, 200);
}

#[test]
fn superposition_on_five_source_circuits() {
    for seed in 0..50 {
        let options = Options { sources: Some(5), exotic: false, ..Options::default() };
        let (c, f) = random(1000 + seed, options);
        let sp = superpose(&c, f);
        let full = solve(&c, f).unwrap();
        match sp {
            Ok(sp) => {
                let scale = full.node_voltages.values().map(|v| v.norm()).fold(0.0, f64::max);
                for (node, v) in &full.node_voltages {
                    let sum: Complex64 = sp.partials.iter().map(|(_, s)| s.voltage(node).unwrap()).sum();
                    assert!(close(sum, *v, 1e-9, scale), "seed {seed} node {node}");
                }
            }
            // AC analysis of sources that only carry a DC part.
            Err(cq_circuit::CircuitError::NeedTwoSources) => assert!(f > 0.0),
            Err(e) => panic!("seed {seed}: {e}"),
        }
    }
}

#[test]
fn thevenin_predicts_loaded_currents() {
    let mut rng = Rng::new(7);
    for seed in 0..50 {
        let rc = random_circuit(2000 + seed, Options { max_nodes: 12, ..Options::default() });
        let c = parse_netlist(&rc.netlist).unwrap();
        let node = rc.nodes[rng.below(rc.nodes.len())].clone();
        let port = thevenin(&c, (&node, "0"), rc.frequency).unwrap();
        let norton = port.to_norton().unwrap();
        for _ in 0..2 {
            let load = rng.log_range(1.0, 1e4);
            let loaded = c.with_element(Element::resistor("RLOADX", &node, "0", load)).unwrap();
            let solution = solve(&loaded, rc.frequency).unwrap();
            let actual = solution.current("RLOADX").unwrap();
            let z = Complex64::new(load, 0.0);
            // A port fed by nothing has Vth at rounding level; judge it
            // against the currents flowing elsewhere.
            let scale = solution.max_current();
            assert!(close(port.load_current(z), actual, 1e-9, scale), "seed {seed}");
            assert!(close(norton.load_current(z), actual, 1e-9, scale), "seed {seed}");
        }
    }
}

/// Terminal currents of a wye or delta network found by nodal analysis when
/// terminals a, b are driven and c is ground. Each impedance is built as a
/// self-controlled VCCS (any-sign conductance) in parallel with L or C, so
/// negative real parts are realisable.
fn mna_terminal_currents(connection: Direction, z: [Complex64; 3], v: [Complex64; 2], f: f64) -> [Complex64; 3] {
    let w = 2.0 * std::f64::consts::PI * f;
    let mut elements = vec![
        Element::voltage_source("VA", "a", "0", SourceValue::ac(v[0].norm(), v[0].arg().to_degrees()))
            .with_internal_resistance(0.0),
        Element::voltage_source("VB", "b", "0", SourceValue::ac(v[1].norm(), v[1].arg().to_degrees()))
            .with_internal_resistance(0.0),
    ];
    let pairs: [(&str, &str); 3] = match connection {
        Direction::WyeToDelta => [("a", "s"), ("b", "s"), ("0", "s")],
        Direction::DeltaToWye => [("a", "b"), ("b", "0"), ("0", "a")],
    };
    for (k, (p, q)) in pairs.iter().enumerate() {
        let y = 1.0 / z[k];
        elements.push(Element::new(format!("G{k}"), &[p, q, p, q], ElementKind::Vccs { gain: y.re }));
        if y.im < 0.0 {
            elements.push(Element::inductor(&format!("L{k}"), p, q, -1.0 / (w * y.im)));
        } else if y.im > 0.0 {
            elements.push(Element::capacitor(&format!("C{k}"), p, q, y.im / w));
        }
    }
    let c = Circuit::new("three-terminal", elements).unwrap();
    let s = solve(&c, f).unwrap();
    let ia = -s.current("VA").unwrap();
    let ib = -s.current("VB").unwrap();
    [ia, ib, -(ia + ib)]
}

fn impedance(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn wye_delta_worked_case_port_equivalence() {
    let wye = [impedance(1.0, 1.0), impedance(2.0, 0.0), impedance(0.0, 5.0)];
    let delta = wye_delta(wye, Direction::WyeToDelta).unwrap();
    let v = [Complex64::new(10.0, 0.0), Complex64::from_polar(7.0, 1.0)];
    let drive = [v[0], v[1], Complex64::default()];
    let i_wye = wye_currents(wye, drive);
    let i_delta = delta_currents(delta, drive);
    let i_mna = mna_terminal_currents(Direction::WyeToDelta, wye, v, 50.0);
    for k in 0..3 {
        assert!(close(i_wye[k], i_delta[k], 1e-12, 1.0));
        assert!(close(i_mna[k], i_wye[k], 1e-9, 1.0));
    }
}

#[test]
fn wye_delta_seeded_cases() {
    let mut rng = Rng::new(11);
    for _ in 0..50 {
        let mut z = [Complex64::default(); 3];
        for zi in &mut z {
            *zi = impedance(rng.range(0.1, 100.0), rng.range(-100.0, 100.0));
        }
        let delta = wye_delta(z, Direction::WyeToDelta).unwrap();
        let back = wye_delta(delta, Direction::DeltaToWye).unwrap();
        for k in 0..3 {
            assert!(close(back[k], z[k], 1e-12, 0.0));
        }
        let v = [Complex64::from_polar(rng.range(1.0, 100.0), rng.range(-3.0, 3.0)), Complex64::from_polar(rng.range(1.0, 100.0), rng.range(-3.0, 3.0))];
        let drive = [v[0], v[1], Complex64::default()];
        let a = mna_terminal_currents(Direction::WyeToDelta, z, v, 50.0);
        let b = mna_terminal_currents(Direction::DeltaToWye, delta, v, 50.0);
        let scale = a.iter().map(|i| i.norm()).fold(0.0, f64::max);
        for k in 0..3 {
            assert!(close(a[k], b[k], 1e-9, scale));
            assert!(close(wye_currents(z, drive)[k], a[k], 1e-9, scale));
        }
    }
}

proptest! {
    #[test]
    fn random_circuits_conserve_power(seed in any::<u64>()) {
        let rc = random_circuit(seed, Options { max_nodes: 20, ..Options::default() });
        let c = parse_netlist(&rc.netlist).unwrap();
        let s = solve(&c, rc.frequency).unwrap();
        let r = power_summary(&c, &s).unwrap();
        prop_assert!(r.imbalance().norm() <= 1e-9 * r.max_apparent().max(1e-300));
        prop_assert!(s.max_relative_kcl_residual(&c).unwrap() <= 1e-9);
        prop_assert_eq!(s.voltage("0").unwrap(), Complex64::default());
    }

    #[test]
    fn netlists_round_trip(seed in any::<u64>()) {
        let rc = random_circuit(seed, Options { max_nodes: 20, ..Options::default() });
        let c = parse_netlist(&rc.netlist).unwrap();
        let again = parse_netlist(&cq_circuit::serialize_netlist(&c)).unwrap();
        prop_assert_eq!(c, again);
    }

    #[test]
    fn transform_involution(
        re in prop::array::uniform3(1e-3f64..1e3),
        im in prop::array::uniform3(-1e3f64..1e3),
    ) {
        let z = [0, 1, 2].map(|k| Complex64::new(re[k], im[k]));
        let back = wye_delta(wye_delta(z, Direction::WyeToDelta).unwrap(), Direction::DeltaToWye).unwrap();
        for k in 0..3 {
            prop_assert!(close(back[k], z[k], 1e-12, 0.0));
        }
    }

    #[test]
    fn short_fault_current_monotone(r1 in 1.0f64..100.0, rl in 1.0f64..100.0, z1 in 0.0f64..50.0, dz in 0.0f64..50.0) {
        use cq_circuit::{inject_fault, FaultSpec};
        let c = parse_netlist(&format!("V1 1 0 DC 230\nR1 1 2 {r1}\nRL 2 0 {rl}")).unwrap();
        let current = |ohms: f64| {
            let f = inject_fault(&c, &FaultSpec::Short { a: "2".into(), b: "0".into(), ohms }).unwrap();
            solve(&f, 0.0).unwrap().current("V1").unwrap().norm()
        };
        prop_assert!(current(z1) >= current(z1 + dz) * (1.0 - 1e-12));
    }
}
