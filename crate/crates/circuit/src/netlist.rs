//! Circuit model and the line-oriented netlist format.
//!
//! ```text
//! .TITLE kettle heater
//! V1 1 0 DC 12            # DC source
//! V2 3 0 AC 230 0 RINT=0  # 230 V RMS, 0°, ideal
//! R1 1 2 4k
//! SW1 2 0 CLOSED
//! E1 4 0 1 0 2.5          # VCVS: out+ out- ctrl+ ctrl- gain
//! H1 5 0 V1 10            # CCVS: out+ out- controlling element, ohms
//! K1 L1 L2 0.9
//! T1 1 0 6 0 10           # ideal transformer, ratio primary:secondary
//! .AC 50
//! .PORT 2 0
//! ```

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::CircuitError;
use crate::units::{format_value, parse_value};

pub const GROUND: &str = "0";

/// Series resistance every voltage source carries unless `RINT=` overrides it.
pub const DEFAULT_INTERNAL_RESISTANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SwitchState {
    Open,
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcValue {
    /// RMS amplitude.
    pub rms: f64,
    pub phase_deg: f64,
}

/// Independent source excitation. The DC part drives analyses at 0 Hz, the AC
/// part drives every analysis at a positive frequency.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SourceValue {
    pub dc: Option<f64>,
    pub ac: Option<AcValue>,
}

impl SourceValue {
    pub fn dc(value: f64) -> Self {
        Self { dc: Some(value), ac: None }
    }

    pub fn ac(rms: f64, phase_deg: f64) -> Self {
        Self { dc: None, ac: Some(AcValue { rms, phase_deg }) }
    }

    pub fn at(&self, frequency: f64) -> Complex64 {
        if frequency == 0.0 {
            Complex64::new(self.dc.unwrap_or(0.0), 0.0)
        } else {
            self.ac
                .map(|ac| Complex64::from_polar(ac.rms, ac.phase_deg.to_radians()))
                .unwrap_or_default()
        }
    }

    pub fn is_active(&self, frequency: f64) -> bool {
        self.at(frequency) != Complex64::default()
    }

    fn scaled(&self, factor: f64) -> Self {
        Self {
            dc: self.dc.map(|v| v * factor),
            ac: self.ac.map(|ac| AcValue { rms: ac.rms * factor, ..ac }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ElementKind {
    Resistor { ohms: f64 },
    Inductor { henries: f64 },
    Capacitor { farads: f64 },
    VoltageSource { value: SourceValue, internal_resistance: f64 },
    CurrentSource { value: SourceValue },
    /// Nodes: out+, out-, ctrl+, ctrl-.
    Vcvs { gain: f64 },
    /// Nodes: out+, out-, ctrl+, ctrl-. Gain in siemens.
    Vccs { gain: f64 },
    /// Transresistance in ohms.
    Ccvs { control: String, gain: f64 },
    Cccs { control: String, gain: f64 },
    Coupling { first: String, second: String, k: f64 },
    /// Nodes: p+, p-, s+, s-. `ratio` is primary turns over secondary turns.
    Transformer { ratio: f64 },
    Switch { state: SwitchState },
}

/// Short discriminant of [`ElementKind`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ElementType {
    R,
    L,
    C,
    Vsrc,
    Isrc,
    Vcvs,
    Vccs,
    Ccvs,
    Cccs,
    Coupling,
    Xfmr,
    Switch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Element {
    pub name: String,
    pub nodes: Vec<String>,
    pub kind: ElementKind,
}

impl Element {
    pub fn new(name: impl Into<String>, nodes: &[&str], kind: ElementKind) -> Self {
        Self {
            name: name.into(),
            nodes: nodes.iter().map(|n| n.to_string()).collect(),
            kind,
        }
    }

    pub fn resistor(name: &str, a: &str, b: &str, ohms: f64) -> Self {
        Self::new(name, &[a, b], ElementKind::Resistor { ohms })
    }

    pub fn inductor(name: &str, a: &str, b: &str, henries: f64) -> Self {
        Self::new(name, &[a, b], ElementKind::Inductor { henries })
    }

    pub fn capacitor(name: &str, a: &str, b: &str, farads: f64) -> Self {
        Self::new(name, &[a, b], ElementKind::Capacitor { farads })
    }

    pub fn voltage_source(name: &str, pos: &str, neg: &str, value: SourceValue) -> Self {
        Self::new(
            name,
            &[pos, neg],
            ElementKind::VoltageSource { value, internal_resistance: DEFAULT_INTERNAL_RESISTANCE },
        )
    }

    pub fn current_source(name: &str, pos: &str, neg: &str, value: SourceValue) -> Self {
        Self::new(name, &[pos, neg], ElementKind::CurrentSource { value })
    }

    pub fn switch(name: &str, a: &str, b: &str, state: SwitchState) -> Self {
        Self::new(name, &[a, b], ElementKind::Switch { state })
    }

    pub fn with_internal_resistance(mut self, ohms: f64) -> Self {
        if let ElementKind::VoltageSource { internal_resistance, .. } = &mut self.kind {
            *internal_resistance = ohms;
        }
        self
    }

    pub fn element_type(&self) -> ElementType {
        match self.kind {
            ElementKind::Resistor { .. } => ElementType::R,
            ElementKind::Inductor { .. } => ElementType::L,
            ElementKind::Capacitor { .. } => ElementType::C,
            ElementKind::VoltageSource { .. } => ElementType::Vsrc,
            ElementKind::CurrentSource { .. } => ElementType::Isrc,
            ElementKind::Vcvs { .. } => ElementType::Vcvs,
            ElementKind::Vccs { .. } => ElementType::Vccs,
            ElementKind::Ccvs { .. } => ElementType::Ccvs,
            ElementKind::Cccs { .. } => ElementType::Cccs,
            ElementKind::Coupling { .. } => ElementType::Coupling,
            ElementKind::Transformer { .. } => ElementType::Xfmr,
            ElementKind::Switch { .. } => ElementType::Switch,
        }
    }

    pub fn is_independent_source(&self) -> bool {
        matches!(self.kind, ElementKind::VoltageSource { .. } | ElementKind::CurrentSource { .. })
    }

    pub fn is_source(&self) -> bool {
        matches!(
            self.element_type(),
            ElementType::Vsrc
                | ElementType::Isrc
                | ElementType::Vcvs
                | ElementType::Vccs
                | ElementType::Ccvs
                | ElementType::Cccs
        )
    }

    /// Nodes through which the element carries current.
    pub fn terminals(&self) -> &[String] {
        match self.kind {
            ElementKind::Vcvs { .. } | ElementKind::Vccs { .. } => &self.nodes[..2],
            _ => &self.nodes,
        }
    }

    /// Sense-only nodes of voltage-controlled sources.
    pub fn control_nodes(&self) -> &[String] {
        match self.kind {
            ElementKind::Vcvs { .. } | ElementKind::Vccs { .. } => &self.nodes[2..],
            _ => &[],
        }
    }

    /// The element's headline value: ohms, henries, farads, gain, coupling or
    /// ratio. Sources report their DC value at 0 Hz and RMS amplitude otherwise.
    pub fn primary_value(&self, frequency: f64) -> Option<f64> {
        Some(match &self.kind {
            ElementKind::Resistor { ohms } => *ohms,
            ElementKind::Inductor { henries } => *henries,
            ElementKind::Capacitor { farads } => *farads,
            ElementKind::VoltageSource { value, .. } | ElementKind::CurrentSource { value } => {
                if frequency == 0.0 {
                    value.dc?
                } else {
                    value.ac?.rms
                }
            }
            ElementKind::Vcvs { gain }
            | ElementKind::Vccs { gain }
            | ElementKind::Ccvs { gain, .. }
            | ElementKind::Cccs { gain, .. } => *gain,
            ElementKind::Coupling { k, .. } => *k,
            ElementKind::Transformer { ratio } => *ratio,
            ElementKind::Switch { .. } => return None,
        })
    }

    fn set_primary_value(&mut self, new: f64, frequency: f64) -> bool {
        match &mut self.kind {
            ElementKind::Resistor { ohms: v }
            | ElementKind::Inductor { henries: v }
            | ElementKind::Capacitor { farads: v }
            | ElementKind::Vcvs { gain: v }
            | ElementKind::Vccs { gain: v }
            | ElementKind::Ccvs { gain: v, .. }
            | ElementKind::Cccs { gain: v, .. }
            | ElementKind::Coupling { k: v, .. }
            | ElementKind::Transformer { ratio: v } => *v = new,
            ElementKind::VoltageSource { value, .. } | ElementKind::CurrentSource { value } => {
                if frequency == 0.0 {
                    match &mut value.dc {
                        Some(v) => *v = new,
                        None => return false,
                    }
                } else {
                    match &mut value.ac {
                        Some(ac) => ac.rms = new,
                        None => return false,
                    }
                }
            }
            ElementKind::Switch { .. } => return false,
        }
        true
    }

    fn validate(&self) -> Result<(), CircuitError> {
        let invalid = |message: &str| CircuitError::InvalidElement {
            element: self.name.clone(),
            message: message.to_string(),
        };
        let expected_nodes = match self.kind {
            ElementKind::Coupling { .. } => 0,
            ElementKind::Vcvs { .. } | ElementKind::Vccs { .. } | ElementKind::Transformer { .. } => 4,
            _ => 2,
        };
        if self.nodes.len() != expected_nodes {
            return Err(invalid(&format!(
                "expected {expected_nodes} nodes, found {}",
                self.nodes.len()
            )));
        }
        if self.nodes.iter().any(|n| n.is_empty()) {
            return Err(invalid("empty node name"));
        }
        let positive = |v: f64, what: &str| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(&format!("{what} must be strictly positive")))
            }
        };
        let finite = |v: f64, what: &str| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(invalid(&format!("{what} must be finite")))
            }
        };
        match &self.kind {
            ElementKind::Resistor { ohms } => positive(*ohms, "resistance"),
            ElementKind::Inductor { henries } => positive(*henries, "inductance"),
            ElementKind::Capacitor { farads } => positive(*farads, "capacitance"),
            ElementKind::VoltageSource { value, internal_resistance } => {
                if !(internal_resistance.is_finite() && *internal_resistance >= 0.0) {
                    return Err(invalid("internal resistance must be >= 0"));
                }
                validate_source(value).map_err(|m| invalid(m))
            }
            ElementKind::CurrentSource { value } => validate_source(value).map_err(|m| invalid(m)),
            ElementKind::Vcvs { gain } | ElementKind::Vccs { gain } => finite(*gain, "gain"),
            ElementKind::Ccvs { gain, control } | ElementKind::Cccs { gain, control } => {
                if *control == self.name {
                    return Err(invalid("cannot be controlled by its own current"));
                }
                finite(*gain, "gain")
            }
            ElementKind::Coupling { first, second, k } => {
                if first == second {
                    return Err(invalid("coupling needs two distinct inductors"));
                }
                if !(k.is_finite() && *k > 0.0 && *k <= 1.0) {
                    return Err(invalid("coupling coefficient must lie in (0, 1]"));
                }
                Ok(())
            }
            ElementKind::Transformer { ratio } => {
                if *ratio == 0.0 || !ratio.is_finite() {
                    Err(invalid("transformer ratio must be nonzero"))
                } else {
                    Ok(())
                }
            }
            ElementKind::Switch { .. } => Ok(()),
        }
    }
}

fn validate_source(value: &SourceValue) -> Result<(), &'static str> {
    if value.dc.is_none() && value.ac.is_none() {
        return Err("source needs a DC or AC value");
    }
    if value.dc.is_some_and(|v| !v.is_finite()) {
        return Err("DC value must be finite");
    }
    if let Some(ac) = value.ac {
        if !(ac.rms.is_finite() && ac.phase_deg.is_finite()) {
            return Err("AC value must be finite");
        }
    }
    Ok(())
}

/// A validated linear circuit. Construction enforces unique names, terminal
/// counts, value ranges, references, presence of ground and connectivity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CircuitData", into = "CircuitData")]
pub struct Circuit {
    title: String,
    elements: Vec<Element>,
    ac_frequency: Option<f64>,
    port: Option<(String, String)>,
    nodes: Vec<String>,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct CircuitData {
    #[serde(default)]
    title: String,
    elements: Vec<Element>,
    #[serde(default)]
    ac_frequency: Option<f64>,
    #[serde(default)]
    port: Option<(String, String)>,
}

impl TryFrom<CircuitData> for Circuit {
    type Error = CircuitError;
    fn try_from(data: CircuitData) -> Result<Self, Self::Error> {
        let mut circuit = Circuit::new(data.title, data.elements)?;
        circuit.ac_frequency = data.ac_frequency;
        if let Some((a, b)) = data.port {
            circuit = circuit.with_port(&a, &b)?;
        }
        Ok(circuit)
    }
}

impl From<Circuit> for CircuitData {
    fn from(c: Circuit) -> Self {
        CircuitData { title: c.title, elements: c.elements, ac_frequency: c.ac_frequency, port: c.port }
    }
}

impl Circuit {
    pub fn new(title: impl Into<String>, elements: Vec<Element>) -> Result<Self, CircuitError> {
        let mut index = HashMap::with_capacity(elements.len());
        for (i, element) in elements.iter().enumerate() {
            if element.name.is_empty() {
                return Err(CircuitError::InvalidElement {
                    element: String::new(),
                    message: "empty element name".into(),
                });
            }
            if index.insert(element.name.clone(), i).is_some() {
                return Err(CircuitError::DuplicateName(element.name.clone()));
            }
            element.validate()?;
        }
        for element in &elements {
            match &element.kind {
                ElementKind::Ccvs { control, .. } | ElementKind::Cccs { control, .. } => {
                    let target = index
                        .get(control)
                        .map(|&i| &elements[i])
                        .ok_or_else(|| CircuitError::InvalidElement {
                            element: element.name.clone(),
                            message: format!("controlling element `{control}` does not exist"),
                        })?;
                    if target.element_type() == ElementType::Coupling {
                        return Err(CircuitError::InvalidElement {
                            element: element.name.clone(),
                            message: "a coupling carries no current".into(),
                        });
                    }
                }
                ElementKind::Coupling { first, second, .. } => {
                    for coil in [first, second] {
                        let is_inductor = index
                            .get(coil)
                            .is_some_and(|&i| elements[i].element_type() == ElementType::L);
                        if !is_inductor {
                            return Err(CircuitError::InvalidElement {
                                element: element.name.clone(),
                                message: format!("`{coil}` is not an inductor"),
                            });
                        }
                    }
                }
                _ => {}
            }
        }

        let mut nodes: Vec<String> = vec![GROUND.to_string()];
        let mut seen: HashMap<&str, usize> = HashMap::new();
        seen.insert(GROUND, 0);
        let mut has_ground = false;
        for element in &elements {
            for node in element.terminals() {
                if node == GROUND {
                    has_ground = true;
                }
                if !seen.contains_key(node.as_str()) {
                    seen.insert(node, nodes.len());
                    nodes.push(node.clone());
                }
            }
        }
        if !has_ground {
            return Err(CircuitError::MissingGround);
        }
        for element in &elements {
            for node in element.control_nodes() {
                if !seen.contains_key(node.as_str()) {
                    return Err(CircuitError::DanglingNode(node.clone()));
                }
            }
        }

        // Every node must reach ground through element terminals.
        let mut components = UnionFind::new(nodes.len());
        for element in &elements {
            let terminals = element.terminals();
            if let Some(first) = terminals.first() {
                for other in &terminals[1..] {
                    components.union(seen[first.as_str()], seen[other.as_str()]);
                }
            }
        }
        let ground_root = components.find(0);
        if let Some(i) = (1..nodes.len()).find(|&i| components.find(i) != ground_root) {
            return Err(CircuitError::DanglingNode(nodes[i].clone()));
        }

        Ok(Self {
            title: title.into(),
            elements,
            ac_frequency: None,
            port: None,
            nodes,
            index,
        })
    }

    pub fn title(&self) -> &str {
        &self.title
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn element(&self, name: &str) -> Option<&Element> {
        self.index.get(name).map(|&i| &self.elements[i])
    }

    pub fn element_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// All nodes, ground first, then in order of first appearance.
    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn has_node(&self, node: &str) -> bool {
        self.nodes.iter().any(|n| n == node)
    }

    pub fn ac_frequency(&self) -> Option<f64> {
        self.ac_frequency
    }

    pub fn port(&self) -> Option<(&str, &str)> {
        self.port.as_ref().map(|(a, b)| (a.as_str(), b.as_str()))
    }

    pub fn with_title(mut self, title: impl Into<String>) -> Self {
        self.title = title.into();
        self
    }

    pub fn with_ac_frequency(mut self, frequency: Option<f64>) -> Self {
        self.ac_frequency = frequency;
        self
    }

    pub fn with_port(mut self, a: &str, b: &str) -> Result<Self, CircuitError> {
        for node in [a, b] {
            if !self.has_node(node) {
                return Err(CircuitError::UnknownNode(node.to_string()));
            }
        }
        self.port = Some((a.to_string(), b.to_string()));
        Ok(self)
    }

    /// Frequency the circuit is meant to be analysed at (`.AC`, else DC).
    pub fn analysis_frequency(&self) -> f64 {
        self.ac_frequency.unwrap_or(0.0)
    }

    fn rebuild(&self, elements: Vec<Element>) -> Result<Self, CircuitError> {
        let mut next = Circuit::new(self.title.clone(), elements)?;
        next.ac_frequency = self.ac_frequency;
        if let Some((a, b)) = &self.port {
            if next.has_node(a) && next.has_node(b) {
                next.port = self.port.clone();
            }
        }
        Ok(next)
    }

    pub fn with_element(&self, element: Element) -> Result<Self, CircuitError> {
        let mut elements = self.elements.clone();
        elements.push(element);
        self.rebuild(elements)
    }

    pub fn with_elements(&self, extra: impl IntoIterator<Item = Element>) -> Result<Self, CircuitError> {
        let mut elements = self.elements.clone();
        elements.extend(extra);
        self.rebuild(elements)
    }

    pub fn replace_element(&self, element: Element) -> Result<Self, CircuitError> {
        let i = self
            .element_index(&element.name)
            .ok_or_else(|| CircuitError::UnknownElement(element.name.clone()))?;
        let mut elements = self.elements.clone();
        elements[i] = element;
        self.rebuild(elements)
    }

    pub fn without_elements(&self, names: &[&str]) -> Result<Self, CircuitError> {
        for name in names {
            if self.element(name).is_none() {
                return Err(CircuitError::UnknownElement(name.to_string()));
            }
        }
        let elements = self
            .elements
            .iter()
            .filter(|e| !names.contains(&e.name.as_str()))
            .cloned()
            .collect();
        self.rebuild(elements)
    }

    /// Copy with one element's headline value replaced (see
    /// [`Element::primary_value`]).
    pub fn with_value(&self, name: &str, value: f64, frequency: f64) -> Result<Self, CircuitError> {
        let mut element = self
            .element(name)
            .cloned()
            .ok_or_else(|| CircuitError::UnknownElement(name.to_string()))?;
        if !element.set_primary_value(value, frequency) {
            return Err(CircuitError::InvalidElement {
                element: name.to_string(),
                message: "element has no adjustable value at this frequency".into(),
            });
        }
        self.replace_element(element)
    }

    /// Several value changes at once. Values cannot affect topology, so only
    /// the touched elements are re-validated.
    pub fn with_values(&self, updates: &[(&str, f64)], frequency: f64) -> Result<Self, CircuitError> {
        let mut next = self.clone();
        for &(name, value) in updates {
            let i = self.element_index(name).ok_or_else(|| CircuitError::UnknownElement(name.to_string()))?;
            if !next.elements[i].set_primary_value(value, frequency) {
                return Err(CircuitError::InvalidElement {
                    element: name.to_string(),
                    message: "element has no adjustable value at this frequency".into(),
                });
            }
            next.elements[i].validate()?;
        }
        Ok(next)
    }

    /// Copy with every independent source scaled by `factor` (0 silences
    /// them: voltage sources become shorts through their internal
    /// resistance, current sources become opens).
    pub fn with_sources_scaled(&self, keep: Option<&str>, factor: f64) -> Self {
        let mut next = self.clone();
        for element in &mut next.elements {
            if keep == Some(element.name.as_str()) {
                continue;
            }
            match &mut element.kind {
                ElementKind::VoltageSource { value, .. } | ElementKind::CurrentSource { value } => {
                    *value = value.scaled(factor);
                }
                _ => {}
            }
        }
        next
    }

    pub fn independent_sources(&self) -> impl Iterator<Item = &Element> {
        self.elements.iter().filter(|e| e.is_independent_source())
    }

    /// Picks a name starting with `prefix` that no element uses yet.
    pub fn fresh_name(&self, prefix: &str) -> String {
        if self.element(prefix).is_none() {
            return prefix.to_string();
        }
        (1..)
            .map(|i| format!("{prefix}_{i}"))
            .find(|n| self.element(n).is_none())
            .expect("unbounded name search")
    }
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[rb] = ra;
        }
    }
}

/// Parses a netlist document into a validated [`Circuit`].
pub fn parse_netlist(text: &str) -> Result<Circuit, CircuitError> {
    let mut title = String::new();
    let mut elements = Vec::new();
    let mut ac_frequency = None;
    let mut port = None;
    let mut lines_of: BTreeMap<String, usize> = BTreeMap::new();

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let syntax = |message: String| CircuitError::Syntax { line: line_no, message };
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let head = tokens[0];

        if let Some(directive) = head.strip_prefix('.') {
            match directive.to_ascii_uppercase().as_str() {
                "TITLE" => title = line[head.len()..].trim().to_string(),
                "AC" => {
                    let [_, f] = tokens[..] else {
                        return Err(syntax(".AC takes exactly one frequency".into()));
                    };
                    let f = number(f).ok_or_else(|| syntax(format!("bad frequency `{f}`")))?;
                    if f <= 0.0 {
                        return Err(syntax("frequency must be positive".into()));
                    }
                    ac_frequency = Some(f);
                }
                "PORT" => {
                    let [_, a, b] = tokens[..] else {
                        return Err(syntax(".PORT takes two nodes".into()));
                    };
                    port = Some((a.to_string(), b.to_string()));
                }
                "END" => break,
                other => return Err(syntax(format!("unknown directive `.{other}`"))),
            }
            continue;
        }

        let element = parse_element(&tokens).map_err(|e| match e {
            ElementParseError::UnknownKind => CircuitError::UnknownKind {
                line: line_no,
                name: head.to_string(),
            },
            ElementParseError::Syntax(message) => syntax(message),
        })?;
        lines_of.insert(element.name.clone(), line_no);
        elements.push(element);
    }

    let mut circuit = Circuit::new(title, elements).map_err(|e| match e {
        // Attach a line number to per-element problems where we can.
        CircuitError::InvalidElement { element, message } if lines_of.contains_key(&element) => {
            CircuitError::Syntax {
                line: lines_of[&element],
                message: format!("{element}: {message}"),
            }
        }
        other => other,
    })?;
    circuit.ac_frequency = ac_frequency;
    if let Some((a, b)) = port {
        circuit = circuit.with_port(&a, &b)?;
    }
    Ok(circuit)
}

enum ElementParseError {
    UnknownKind,
    Syntax(String),
}

fn number(token: &str) -> Option<f64> {
    parse_value(token)
}

fn parse_element(tokens: &[&str]) -> Result<Element, ElementParseError> {
    use ElementParseError::Syntax;
    let name = tokens[0];
    let upper = name.to_ascii_uppercase();
    let args = &tokens[1..];
    let value_at = |i: usize| -> Result<f64, ElementParseError> {
        let t = args.get(i).ok_or_else(|| Syntax(format!("{name}: missing value")))?;
        number(t).ok_or_else(|| Syntax(format!("{name}: bad number `{t}`")))
    };
    let arity = |n: usize| -> Result<(), ElementParseError> {
        if args.len() == n {
            Ok(())
        } else {
            Err(Syntax(format!("{name}: expected {n} fields after the name, found {}", args.len())))
        }
    };
    let nodes = |n: usize| -> Vec<String> { args[..n].iter().map(|s| s.to_string()).collect() };

    let (nodes, kind) = if upper.starts_with("SW") {
        arity(3)?;
        let state = match args[2].to_ascii_uppercase().as_str() {
            "OPEN" => SwitchState::Open,
            "CLOSED" => SwitchState::Closed,
            other => return Err(Syntax(format!("{name}: switch state must be OPEN or CLOSED, not `{other}`"))),
        };
        (nodes(2), ElementKind::Switch { state })
    } else {
        match upper.chars().next() {
            Some('R') => {
                arity(3)?;
                (nodes(2), ElementKind::Resistor { ohms: value_at(2)? })
            }
            Some('L') => {
                arity(3)?;
                (nodes(2), ElementKind::Inductor { henries: value_at(2)? })
            }
            Some('C') => {
                arity(3)?;
                (nodes(2), ElementKind::Capacitor { farads: value_at(2)? })
            }
            Some(c @ ('V' | 'I')) => {
                if args.len() < 3 {
                    return Err(Syntax(format!("{name}: expected two nodes and a value")));
                }
                let (value, rint) = parse_source_spec(name, &args[2..], c == 'V')?;
                let kind = if c == 'V' {
                    ElementKind::VoltageSource {
                        value,
                        internal_resistance: rint.unwrap_or(DEFAULT_INTERNAL_RESISTANCE),
                    }
                } else {
                    ElementKind::CurrentSource { value }
                };
                (nodes(2), kind)
            }
            Some(c @ ('E' | 'G')) => {
                arity(5)?;
                let gain = value_at(4)?;
                let kind = if c == 'E' { ElementKind::Vcvs { gain } } else { ElementKind::Vccs { gain } };
                (nodes(4), kind)
            }
            Some(c @ ('H' | 'F')) => {
                arity(4)?;
                let control = args[2].to_string();
                let gain = value_at(3)?;
                let kind = if c == 'H' {
                    ElementKind::Ccvs { control, gain }
                } else {
                    ElementKind::Cccs { control, gain }
                };
                (nodes(2), kind)
            }
            Some('K') => {
                arity(3)?;
                (
                    Vec::new(),
                    ElementKind::Coupling {
                        first: args[0].to_string(),
                        second: args[1].to_string(),
                        k: value_at(2)?,
                    },
                )
            }
            Some('T') => {
                arity(5)?;
                (nodes(4), ElementKind::Transformer { ratio: value_at(4)? })
            }
            _ => return Err(ElementParseError::UnknownKind),
        }
    };
    Ok(Element { name: name.to_string(), nodes, kind })
}

fn parse_source_spec(
    name: &str,
    fields: &[&str],
    allow_rint: bool,
) -> Result<(SourceValue, Option<f64>), ElementParseError> {
    use ElementParseError::Syntax;
    let mut value = SourceValue::default();
    let mut rint = None;
    let mut i = 0;
    let num = |t: Option<&&str>| -> Result<f64, ElementParseError> {
        let t = t.ok_or_else(|| Syntax(format!("{name}: missing number")))?;
        number(t).ok_or_else(|| Syntax(format!("{name}: bad number `{t}`")))
    };
    while i < fields.len() {
        let field = fields[i];
        let upper = field.to_ascii_uppercase();
        if upper == "DC" {
            if value.dc.is_some() {
                return Err(Syntax(format!("{name}: DC given twice")));
            }
            value.dc = Some(num(fields.get(i + 1))?);
            i += 2;
        } else if upper == "AC" {
            if value.ac.is_some() {
                return Err(Syntax(format!("{name}: AC given twice")));
            }
            let rms = num(fields.get(i + 1))?;
            let phase_deg = num(fields.get(i + 2))?;
            value.ac = Some(AcValue { rms, phase_deg });
            i += 3;
        } else if let Some(r) = upper.strip_prefix("RINT=").filter(|_| allow_rint) {
            let r = number(&field[field.len() - r.len()..])
                .ok_or_else(|| Syntax(format!("{name}: bad internal resistance `{field}`")))?;
            rint = Some(r);
            i += 1;
        } else if i == 0 && value.dc.is_none() && number(field).is_some() {
            // Bare value: DC.
            value.dc = number(field);
            i += 1;
        } else {
            return Err(Syntax(format!("{name}: unexpected `{field}`")));
        }
    }
    if value.dc.is_none() && value.ac.is_none() {
        return Err(Syntax(format!("{name}: source needs DC and/or AC value")));
    }
    Ok((value, rint))
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)?;
        if !matches!(self.kind, ElementKind::Coupling { .. }) {
            for node in &self.nodes {
                write!(f, " {node}")?;
            }
        }
        match &self.kind {
            ElementKind::Resistor { ohms: v } | ElementKind::Inductor { henries: v } | ElementKind::Capacitor { farads: v } => {
                write!(f, " {}", format_value(*v))
            }
            ElementKind::VoltageSource { value, internal_resistance } => {
                write_source(f, value)?;
                if *internal_resistance != DEFAULT_INTERNAL_RESISTANCE {
                    write!(f, " RINT={}", format_value(*internal_resistance))?;
                }
                Ok(())
            }
            ElementKind::CurrentSource { value } => write_source(f, value),
            ElementKind::Vcvs { gain } | ElementKind::Vccs { gain } => write!(f, " {}", format_value(*gain)),
            ElementKind::Ccvs { control, gain } | ElementKind::Cccs { control, gain } => {
                write!(f, " {control} {}", format_value(*gain))
            }
            ElementKind::Coupling { first, second, k } => write!(f, " {first} {second} {}", format_value(*k)),
            ElementKind::Transformer { ratio } => write!(f, " {}", format_value(*ratio)),
            ElementKind::Switch { state } => match state {
                SwitchState::Open => write!(f, " OPEN"),
                SwitchState::Closed => write!(f, " CLOSED"),
            },
        }
    }
}

fn write_source(f: &mut fmt::Formatter<'_>, value: &SourceValue) -> fmt::Result {
    if let Some(dc) = value.dc {
        write!(f, " DC {}", format_value(dc))?;
    }
    if let Some(ac) = value.ac {
        write!(f, " AC {} {}", format_value(ac.rms), format_value(ac.phase_deg))?;
    }
    Ok(())
}

/// Serializes back to netlist text; `parse_netlist` of the output yields an
/// identical circuit.
impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.title.is_empty() {
            writeln!(f, ".TITLE {}", self.title)?;
        }
        for element in &self.elements {
            writeln!(f, "{element}")?;
        }
        if let Some(freq) = self.ac_frequency {
            writeln!(f, ".AC {}", format_value(freq))?;
        }
        if let Some((a, b)) = &self.port {
            writeln!(f, ".PORT {a} {b}")?;
        }
        Ok(())
    }
}

pub fn serialize_netlist(circuit: &Circuit) -> String {
    circuit.to_string()
}
