//! Seeded random netlists mixing every element kind.
//!
//! A resistor spanning tree keeps every node tied to ground at any
//! frequency. Voltage-type outputs and inductors always sit in series with a
//! resistor so no loop is made of ideal branches alone.

use std::f64::consts::PI;

use crate::Rng;

#[derive(Debug, Clone)]
pub struct RandomCircuit {
    pub netlist: String,
    pub frequency: f64,
    /// Non-ground nodes of the resistor tree.
    pub nodes: Vec<String>,
    pub independent_sources: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct Options {
    pub max_nodes: usize,
    /// Exact number of independent sources; random when `None`.
    pub sources: Option<usize>,
    /// Allow dependent sources, couplings, transformers and switches.
    pub exotic: bool,
    /// Probability of an AC analysis instead of DC.
    pub ac_probability: f64,
}

impl Default for Options {
    fn default() -> Self {
        Options { max_nodes: 50, sources: None, exotic: true, ac_probability: 0.5 }
    }
}

struct Builder<'a> {
    rng: &'a mut Rng,
    lines: Vec<String>,
    counter: usize,
    nodes: Vec<String>,
    resistors: Vec<String>,
    inductors: Vec<String>,
    ac: bool,
}

impl Builder<'_> {
    fn name(&mut self, prefix: &str) -> String {
        self.counter += 1;
        format!("{prefix}{}", self.counter)
    }

    fn fresh_node(&mut self) -> String {
        self.counter += 1;
        format!("x{}", self.counter)
    }

    fn any_node(&mut self) -> String {
        let i = self.rng.below(self.nodes.len() + 1);
        if i == 0 { "0".into() } else { self.nodes[i - 1].clone() }
    }

    fn pair(&mut self) -> (String, String) {
        let a = self.any_node();
        loop {
            let b = self.any_node();
            if b != a {
                return (a, b);
            }
        }
    }

    fn resistor(&mut self, a: &str, b: &str) {
        let name = self.name("R");
        let v = self.rng.log_range(1.0, 1e4);
        self.lines.push(format!("{name} {a} {b} {v}"));
        self.resistors.push(name);
    }

    fn source_value(&mut self) -> String {
        let dc = self.rng.range(-50.0, 50.0);
        let rms = self.rng.range(0.5, 50.0);
        let phase = self.rng.range(-180.0, 180.0);
        match self.rng.below(3) {
            0 => format!("DC {dc}"),
            1 if self.ac => format!("AC {rms} {phase}"),
            _ => format!("DC {dc} AC {rms} {phase}"),
        }
    }

    /// `element` from `a` to a fresh node, resistor on to `b`.
    fn in_series(&mut self, a: &str, b: &str, element: impl FnOnce(&mut Self, &str, &str) -> String) {
        let mid = self.fresh_node();
        let line = element(self, a, &mid);
        self.lines.push(line);
        self.resistor(&mid, b);
    }

    fn voltage_source(&mut self) {
        let (a, b) = self.pair();
        self.in_series(&a, &b, |s, x, y| {
            let name = s.name("V");
            let value = s.source_value();
            format!("{name} {x} {y} {value}")
        });
    }

    fn current_source(&mut self) {
        let (a, b) = self.pair();
        let name = self.name("I");
        let value = self.source_value();
        self.lines.push(format!("{name} {a} {b} {value}"));
    }

    fn passive(&mut self) {
        let (a, b) = self.pair();
        match self.rng.below(3) {
            0 => self.resistor(&a, &b),
            1 => {
                let c = self.rng.log_range(1e-8, 1e-4);
                let name = self.name("C");
                self.lines.push(format!("{name} {a} {b} {c}"));
            }
            _ => self.in_series(&a, &b, |s, x, y| {
                let name = s.name("L");
                let l = s.rng.log_range(1e-5, 1e-1);
                s.inductors.push(name.clone());
                format!("{name} {x} {y} {l}")
            }),
        }
    }

    fn exotic(&mut self) {
        match self.rng.below(7) {
            0 => {
                let (a, b) = self.pair();
                let (c, d) = self.pair();
                let gain = self.rng.range(-0.5, 0.5);
                self.in_series(&a, &b, |s, x, y| format!("{} {x} {y} {c} {d} {gain}", s.name("E")));
            }
            1 => {
                let (a, b) = self.pair();
                let (c, d) = self.pair();
                let gain = self.rng.range(-1e-3, 1e-3);
                let name = self.name("G");
                self.lines.push(format!("{name} {a} {b} {c} {d} {gain}"));
            }
            2 if !self.resistors.is_empty() => {
                let (a, b) = self.pair();
                let control = self.resistors[self.rng.below(self.resistors.len())].clone();
                let gain = self.rng.range(-20.0, 20.0);
                self.in_series(&a, &b, |s, x, y| format!("{} {x} {y} {control} {gain}", s.name("H")));
            }
            3 if !self.resistors.is_empty() => {
                let (a, b) = self.pair();
                let control = self.resistors[self.rng.below(self.resistors.len())].clone();
                let gain = self.rng.range(-0.5, 0.5);
                let name = self.name("F");
                self.lines.push(format!("{name} {a} {b} {control} {gain}"));
            }
            4 if self.inductors.len() >= 2 => {
                let i = self.rng.below(self.inductors.len());
                let j = (i + 1 + self.rng.below(self.inductors.len() - 1)) % self.inductors.len();
                let k = self.rng.range(0.05, 0.95);
                let name = self.name("K");
                let (l1, l2) = (self.inductors[i].clone(), self.inductors[j].clone());
                self.lines.push(format!("{name} {l1} {l2} {k}"));
            }
            5 => {
                // Primary in series with a resistor; loaded secondary hangs
                // off an existing node.
                let (a, b) = self.pair();
                let anchor = self.any_node();
                let s_top = self.fresh_node();
                let ratio = self.rng.range(0.2, 5.0) * if self.rng.chance(0.2) { -1.0 } else { 1.0 };
                self.in_series(&a, &b, |s, x, y| format!("{} {x} {y} {s_top} {anchor} {ratio}", s.name("T")));
                self.resistor(&s_top, &anchor);
            }
            _ => {
                let (a, b) = self.pair();
                if self.rng.chance(0.5) {
                    let name = self.name("SW");
                    self.lines.push(format!("{name} {a} {b} OPEN"));
                } else {
                    self.in_series(&a, &b, |s, x, y| format!("{} {x} {y} CLOSED", s.name("SW")));
                }
            }
        }
    }
}

pub fn random_circuit(seed: u64, options: Options) -> RandomCircuit {
    let mut rng = Rng::new(seed);
    let n = 1 + rng.below(options.max_nodes.max(2) - 1);
    let ac = rng.chance(options.ac_probability);
    let frequency = if ac { rng.log_range(1.0, 1e5) } else { 0.0 };
    let mut b = Builder {
        rng: &mut rng,
        lines: Vec::new(),
        counter: 0,
        nodes: Vec::new(),
        resistors: Vec::new(),
        inductors: Vec::new(),
        ac,
    };
    for i in 1..=n {
        let parent = if i == 1 { "0".to_string() } else { b.any_node() };
        let node = format!("n{i}");
        b.resistor(&parent, &node);
        b.nodes.push(node);
    }
    let sources = options.sources.unwrap_or_else(|| 1 + b.rng.below(4));
    for k in 0..sources {
        if k % 2 == 0 { b.voltage_source() } else { b.current_source() }
    }
    let extras = b.rng.below(n + 2);
    for _ in 0..extras {
        if options.exotic && b.rng.chance(0.3) {
            b.exotic();
        } else {
            b.passive();
        }
    }
    let mut netlist = b.lines.join("\n");
    netlist.push('\n');
    RandomCircuit { netlist, frequency, nodes: b.nodes, independent_sources: sources }
}

/// Angular frequency helper for oracles.
pub fn omega(frequency: f64) -> f64 {
    2.0 * PI * frequency
}
