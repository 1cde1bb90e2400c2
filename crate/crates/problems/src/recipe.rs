//! Quantities a template can ask about, each computed by the solver on the
//! drawn circuit.

use serde::{Deserialize, Serialize};

use cq_circuit::fault::{inject_fault, FaultSpec};
use cq_circuit::fit::catalog_topology;
use cq_circuit::power::element_power;
use cq_circuit::sizing::{route_resistance, size_conductor, Material, DEFAULT_CATALOG};
use cq_circuit::three_phase::{solve_three_phase, ThreePhaseSystem};
use cq_circuit::{
    correct_power_factor, maximum_power_load, sensitivity, solve, thevenin, wye_delta, Circuit, Complex64,
    Direction, ElementKind, Metric, Parameter, PfKind, PfLoad, PowerFactor,
};

use crate::energy::energy_to_co2;
use crate::template::Num;

/// Fault description whose impedances may be placeholders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FaultRecipe {
    Short {
        a: String,
        b: String,
        #[serde(default = "zero")]
        ohms: Num,
    },
    Open {
        element: String,
    },
    Bypass {
        node: String,
        ohms: Num,
    },
}

fn zero() -> Num {
    Num::Number(0.0)
}

impl FaultRecipe {
    pub fn to_spec(&self) -> Result<FaultSpec, String> {
        Ok(match self {
            FaultRecipe::Short { a, b, ohms } => FaultSpec::Short { a: a.clone(), b: b.clone(), ohms: ohms.value()? },
            FaultRecipe::Open { element } => FaultSpec::Open { element: element.clone() },
            FaultRecipe::Bypass { node, ohms } => FaultSpec::Bypass { node: node.clone(), ohms: ohms.value()? },
        })
    }
}

/// Which scalar to take from a complex result.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    /// Signed real part at DC, magnitude otherwise.
    #[default]
    Auto,
    Magnitude,
    Real,
    Imag,
    Degrees,
    /// Display only: `12.3∠-45°`.
    Phasor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerPart {
    P,
    Q,
    S,
    Pf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThreePhaseQuantity {
    PhaseVoltage,
    LineVoltage,
    LineCurrent,
    NeutralCurrent,
    /// Current in one arm of the first load.
    LoadCurrent,
    P,
    Q,
    S,
    Pf,
    LineLoss,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Quantity {
    Voltage { a: String, b: String },
    Current { element: String },
    /// Power absorbed by an element.
    Power { element: String, part: PowerPart },
    /// Power delivered by all independent sources together.
    SupplyPower { part: PowerPart },
    TotalLoss,
    TheveninVoltage { a: String, b: String },
    TheveninImpedance { a: String, b: String },
    NortonCurrent { a: String, b: String },
    MaxPower { a: String, b: String },
    MaxPowerLoad { a: String, b: String },
    /// Current through the fault branch; the evaluation must carry the fault.
    FaultCurrent,
    /// Compensator value (F or H) that lifts the power factor seen by `source`.
    PfcCompensation { source: String, target: Num },
    /// Reactive power the compensator supplies, var.
    PfcReactive { source: String, target: Num },
    ConductorSection { length: Num, current: Num, material: String, drop: Num },
    CableDrop { length: Num, current: Num, material: String, section: Num },
    CableLoss { length: Num, current: Num, material: String, section: Num },
    Sensitivity { parameter: String, metric: Metric },
    ThreePhase { quantity: ThreePhaseQuantity, #[serde(default)] phase: usize },
    /// Per-phase wye capacitor bank reaching `target` at the loads.
    ThreePhaseCapacitance { target: Num },
    FitParameter { topology: String, values: Vec<Num>, parameter: String },
    FitReading { topology: String, values: Vec<Num>, experiment: usize, probe: usize },
    WyeDelta { z: [[Num; 2]; 3], direction: Direction, index: usize },
    /// Star-triangle transform of three single R, L or C elements taken at
    /// the analysis frequency.
    ArmTransform { elements: [String; 3], direction: Direction, index: usize },
    /// Headline value of an element, for identification questions.
    ElementValue { element: String },
    /// Voltage between `a` and `b` with every source but `source` zeroed.
    Superposition { source: String, a: String, b: String },
    /// Wattmeter (`p`) or varmeter (`q`) with its voltage coil across `a`,`b`
    /// and its current coil in series with `element`: `V_ab·conj(I)`.
    Meter { a: String, b: String, element: String, part: PowerPart },
    /// |V(a,b)| / |V(ref_a,ref_b)|.
    Gain { a: String, b: String, ref_a: String, ref_b: String },
    /// kWh over `hours` for an element, or the supply when absent.
    Energy { #[serde(default)] element: Option<String>, hours: Num },
    /// kg CO₂ for that energy at `factor` kg/kWh.
    Co2 { #[serde(default)] element: Option<String>, hours: Num, factor: Num },
}

impl Quantity {
    pub fn needs_system(&self) -> bool {
        matches!(self, Quantity::ThreePhase { .. } | Quantity::ThreePhaseCapacitance { .. })
    }

    /// Whether the value has a meaningful angle.
    pub fn is_phasor(&self) -> bool {
        match self {
            Quantity::Voltage { .. }
            | Quantity::Current { .. }
            | Quantity::TheveninVoltage { .. }
            | Quantity::TheveninImpedance { .. }
            | Quantity::NortonCurrent { .. }
            | Quantity::MaxPowerLoad { .. }
            | Quantity::FaultCurrent
            | Quantity::FitReading { .. }
            | Quantity::WyeDelta { .. }
            | Quantity::ArmTransform { .. }
            | Quantity::Superposition { .. } => true,
            Quantity::ThreePhase { quantity, .. } => matches!(
                quantity,
                ThreePhaseQuantity::PhaseVoltage
                    | ThreePhaseQuantity::LineVoltage
                    | ThreePhaseQuantity::LineCurrent
                    | ThreePhaseQuantity::NeutralCurrent
                    | ThreePhaseQuantity::LoadCurrent
            ),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    #[serde(flatten)]
    pub quantity: Quantity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fault: Option<FaultRecipe>,
    /// Overrides the circuit's own analysis frequency.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency: Option<Num>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Scalar(f64),
    Phasor(Complex64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluated {
    pub value: Value,
    pub frequency: f64,
}

impl Evaluated {
    pub fn component(&self, component: Component) -> Result<f64, String> {
        match (self.value, component) {
            (Value::Scalar(x), Component::Auto | Component::Real) => Ok(x),
            (Value::Scalar(x), Component::Magnitude) => Ok(x.abs()),
            (Value::Scalar(_), c) => Err(format!("scalar quantity has no {c:?} component")),
            (Value::Phasor(z), Component::Auto) => Ok(if self.frequency == 0.0 { z.re } else { z.norm() }),
            (Value::Phasor(z), Component::Magnitude) => Ok(z.norm()),
            (Value::Phasor(z), Component::Real) => Ok(z.re),
            (Value::Phasor(z), Component::Imag) => Ok(z.im),
            (Value::Phasor(z), Component::Degrees) => Ok(z.arg().to_degrees()),
            (Value::Phasor(_), Component::Phasor) => Err("phasor is not a scalar component".into()),
        }
    }

    /// Narrative text for a given value.
    pub fn display(&self, component: Component) -> Result<String, String> {
        match (self.value, component) {
            (Value::Phasor(z), Component::Phasor) => {
                Ok(format!("{}∠{}°", round_display(z.norm()), round_display(z.arg().to_degrees())))
            }
            (Value::Scalar(x), Component::Phasor) => Ok(round_display(x)),
            _ => self.component(component).map(round_display),
        }
    }
}

/// Four significant digits, no exponent noise for course-sized numbers.
pub fn round_display(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{}", if x == 0.0 { 0.0 } else { x });
    }
    let rounded: f64 = format!("{x:.3e}").parse().unwrap_or(x);
    let magnitude = rounded.abs();
    if (1e-3..1e7).contains(&magnitude) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

/// Circuit a template drew, plus its three-phase description when it has one.
pub struct Setting<'a> {
    pub circuit: &'a Circuit,
    pub system: Option<&'a ThreePhaseSystem>,
    pub frequency: f64,
}

pub fn evaluate(eval: &Evaluation, setting: &Setting) -> Result<Evaluated, String> {
    let frequency = match &eval.frequency {
        Some(f) => f.value()?,
        None => setting.frequency,
    };
    let fault = eval.fault.as_ref().map(FaultRecipe::to_spec).transpose()?;
    let faulted;
    let circuit = match &fault {
        Some(spec) => {
            faulted = inject_fault(setting.circuit, spec).map_err(|e| e.to_string())?;
            &faulted
        }
        None => setting.circuit,
    };
    let value = quantity(&eval.quantity, circuit, setting, frequency, fault.is_some())?;
    let finite = match value {
        Value::Scalar(x) => x.is_finite(),
        Value::Phasor(z) => z.re.is_finite() && z.im.is_finite(),
    };
    if !finite {
        return Err("quantity is not finite".into());
    }
    Ok(Evaluated { value, frequency })
}

fn text<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn part(s: Complex64, part: PowerPart) -> f64 {
    match part {
        PowerPart::P => s.re,
        PowerPart::Q => s.im,
        PowerPart::S => s.norm(),
        PowerPart::Pf => PowerFactor::from_power(s).value,
    }
}

fn material(name: &str) -> Result<Material, String> {
    Material::parse(name).ok_or_else(|| format!("unknown conductor material `{name}`"))
}

fn values(nums: &[Num]) -> Result<Vec<f64>, String> {
    nums.iter().map(Num::value).collect()
}

fn complex(pair: &[Num; 2]) -> Result<Complex64, String> {
    Ok(Complex64::new(pair[0].value()?, pair[1].value()?))
}

/// Impedance of a lone R, L or C at `f`.
fn arm(circuit: &Circuit, name: &str, f: f64) -> Result<Complex64, String> {
    let omega = 2.0 * std::f64::consts::PI * f;
    match circuit.element(name).map(|e| &e.kind) {
        Some(ElementKind::Resistor { ohms }) => Ok(Complex64::new(*ohms, 0.0)),
        Some(ElementKind::Inductor { henries }) => Ok(Complex64::new(0.0, omega * henries)),
        Some(ElementKind::Capacitor { farads }) if omega > 0.0 => Ok(Complex64::new(0.0, -1.0 / (omega * farads))),
        _ => Err(format!("`{name}` is not an R, L or C with finite impedance")),
    }
}

fn supply_power(circuit: &Circuit, frequency: f64) -> Result<Complex64, String> {
    let solution = solve(circuit, frequency).map_err(text)?;
    let mut total = Complex64::new(0.0, 0.0);
    for source in circuit.independent_sources() {
        // Absorbed by the source, so delivered is its negative.
        total -= element_power(circuit, &solution, &source.name).map_err(text)?;
    }
    Ok(total)
}

/// Power delivered by `source` seen as a load on it, with the voltage at its
/// terminals.
fn load_on_source(circuit: &Circuit, source: &str, frequency: f64) -> Result<(PfLoad, f64), String> {
    let solution = solve(circuit, frequency).map_err(text)?;
    let s = -element_power(circuit, &solution, source).map_err(text)?;
    let volts = solution.element_voltage(circuit, source).map_err(text)?.norm();
    let pf = PowerFactor::from_power(s);
    Ok((PfLoad { p: s.re, pf: pf.value, kind: pf.kind }, volts))
}

fn quantity(q: &Quantity, circuit: &Circuit, setting: &Setting, f: f64, faulted: bool) -> Result<Value, String> {
    use Value::{Phasor, Scalar};
    let solved = || solve(circuit, f).map_err(text);
    Ok(match q {
        Quantity::Voltage { a, b } => Phasor(solved()?.voltage_between(a, b).map_err(text)?),
        Quantity::Current { element } => Phasor(solved()?.current(element).map_err(text)?),
        Quantity::Power { element, part: which } => {
            Scalar(part(element_power(circuit, &solved()?, element).map_err(text)?, *which))
        }
        Quantity::SupplyPower { part: which } => Scalar(part(supply_power(circuit, f)?, *which)),
        Quantity::TotalLoss => Scalar(Metric::TotalLoss.evaluate(circuit, &solved()?).map_err(text)?),
        Quantity::TheveninVoltage { a, b } => {
            Phasor(thevenin(circuit, (a, b), f).map_err(text)?.open_circuit_voltage())
        }
        Quantity::TheveninImpedance { a, b } => Phasor(thevenin(circuit, (a, b), f).map_err(text)?.impedance),
        Quantity::NortonCurrent { a, b } => {
            Phasor(thevenin(circuit, (a, b), f).map_err(text)?.to_norton().map_err(text)?.source)
        }
        Quantity::MaxPower { a, b } => {
            Scalar(maximum_power_load(&thevenin(circuit, (a, b), f).map_err(text)?).map_err(text)?.power)
        }
        Quantity::MaxPowerLoad { a, b } => {
            Phasor(maximum_power_load(&thevenin(circuit, (a, b), f).map_err(text)?).map_err(text)?.load)
        }
        Quantity::FaultCurrent => {
            if !faulted {
                return Err("fault_current needs a fault".into());
            }
            let branch = circuit
                .elements()
                .iter()
                .find(|e| setting.circuit.element(&e.name).is_none())
                .ok_or("fault adds no branch")?;
            Phasor(solved()?.current(&branch.name).map_err(text)?)
        }
        Quantity::PfcCompensation { source, target } | Quantity::PfcReactive { source, target } => {
            let (load, volts) = load_on_source(circuit, source, f)?;
            let fix = correct_power_factor(load, target.value()?, volts, f).map_err(text)?;
            match q {
                Quantity::PfcReactive { .. } => Scalar(fix.q_compensation),
                _ => Scalar(match fix.compensator {
                    cq_circuit::pfc::Compensator::Capacitor(c) => c,
                    cq_circuit::pfc::Compensator::Inductor(l) => l,
                }),
            }
        }
        Quantity::ConductorSection { length, current, material: m, drop } => Scalar(
            size_conductor(length.value()?, current.value()?, material(m)?.resistivity(), drop.value()?, &DEFAULT_CATALOG)
                .map_err(text)?
                .cross_section,
        ),
        Quantity::CableDrop { length, current, material: m, section }
        | Quantity::CableLoss { length, current, material: m, section } => {
            let r = route_resistance(length.value()?, material(m)?.resistivity(), section.value()?);
            let i = current.value()?;
            Scalar(if matches!(q, Quantity::CableDrop { .. }) { i * r } else { i * i * r })
        }
        Quantity::Sensitivity { parameter, metric } => {
            let p = if parameter == "frequency" { Parameter::Frequency } else { Parameter::ElementValue(parameter.clone()) };
            Scalar(sensitivity(circuit, &p, metric, f).map_err(text)?.derivative)
        }
        Quantity::ThreePhase { quantity: which, phase } => {
            let system = setting.system.ok_or("no three-phase system")?;
            if *phase > 2 {
                return Err("phase index must be 0, 1 or 2".into());
            }
            let r = solve_three_phase(system).map_err(text)?.report;
            match which {
                ThreePhaseQuantity::PhaseVoltage => Phasor(r.phase_voltages[*phase]),
                ThreePhaseQuantity::LineVoltage => Phasor(r.line_voltages[*phase]),
                ThreePhaseQuantity::LineCurrent => Phasor(r.line_currents[*phase]),
                ThreePhaseQuantity::NeutralCurrent => Phasor(r.neutral_current),
                ThreePhaseQuantity::LoadCurrent => Phasor(r.load_currents.first().ok_or("no load")?[*phase]),
                ThreePhaseQuantity::P => Scalar(r.source_power.re),
                ThreePhaseQuantity::Q => Scalar(r.source_power.im),
                ThreePhaseQuantity::S => Scalar(r.source_power.norm()),
                ThreePhaseQuantity::Pf => Scalar(PowerFactor::from_power(r.source_power).value),
                ThreePhaseQuantity::LineLoss => Scalar(r.line_loss),
            }
        }
        Quantity::ThreePhaseCapacitance { target } => {
            let system = setting.system.ok_or("no three-phase system")?;
            let r = solve_three_phase(system).map_err(text)?.report;
            let pf = PowerFactor::from_power(r.load_power);
            if pf.kind != PfKind::Lagging {
                return Err("capacitor bank needs a lagging load".into());
            }
            let load = PfLoad { p: r.load_power.re / 3.0, pf: pf.value, kind: pf.kind };
            let volts = r.phase_voltages[0].norm();
            match correct_power_factor(load, target.value()?, volts, system.frequency).map_err(text)?.compensator {
                cq_circuit::pfc::Compensator::Capacitor(c) => Scalar(c),
                cq_circuit::pfc::Compensator::Inductor(_) => return Err("expected a capacitor bank".into()),
            }
        }
        Quantity::FitParameter { topology, values: v, parameter } => {
            let t = catalog_topology(topology).ok_or_else(|| format!("unknown topology `{topology}`"))?;
            let v = values(v)?;
            // Rendering proves the values fit the template.
            t.render(&v).map_err(text)?;
            let i = t.params.iter().position(|p| &p.name == parameter).ok_or_else(|| format!("no parameter `{parameter}`"))?;
            Scalar(v[i])
        }
        Quantity::FitReading { topology, values: v, experiment, probe } => {
            let t = catalog_topology(topology).ok_or_else(|| format!("unknown topology `{topology}`"))?;
            let e = t.experiments.get(*experiment).ok_or("experiment index out of range")?;
            let m = t.synthesize(&values(v)?, std::slice::from_ref(e)).map_err(text)?;
            Phasor(m[0].observations.get(*probe).ok_or("probe index out of range")?.value.to_complex())
        }
        Quantity::WyeDelta { z, direction, index } => {
            let z = [complex(&z[0])?, complex(&z[1])?, complex(&z[2])?];
            Phasor(*wye_delta(z, *direction).map_err(text)?.get(*index).ok_or("index must be 0, 1 or 2")?)
        }
        Quantity::ArmTransform { elements, direction, index } => {
            let z = [arm(circuit, &elements[0], f)?, arm(circuit, &elements[1], f)?, arm(circuit, &elements[2], f)?];
            Phasor(*wye_delta(z, *direction).map_err(text)?.get(*index).ok_or("index must be 0, 1 or 2")?)
        }
        Quantity::ElementValue { element } => Scalar(
            circuit
                .element(element)
                .and_then(|e| e.primary_value(f))
                .ok_or_else(|| format!("`{element}` has no value"))?,
        ),
        Quantity::Superposition { source, a, b } => {
            if circuit.element(source).is_none_or(|e| !e.is_independent_source()) {
                return Err(format!("`{source}` is not an independent source"));
            }
            let alone = circuit.with_sources_scaled(Some(source), 0.0);
            Phasor(solve(&alone, f).map_err(text)?.voltage_between(a, b).map_err(text)?)
        }
        Quantity::Meter { a, b, element, part: which } => {
            let s = solved()?;
            let reading = s.voltage_between(a, b).map_err(text)? * s.current(element).map_err(text)?.conj();
            Scalar(part(reading, *which))
        }
        Quantity::Gain { a, b, ref_a, ref_b } => {
            let s = solved()?;
            let input = s.voltage_between(ref_a, ref_b).map_err(text)?;
            if input.norm() == 0.0 {
                return Err("reference voltage is zero".into());
            }
            Scalar(cq_circuit::analysis::gain(s.voltage_between(a, b).map_err(text)?, input))
        }
        Quantity::Energy { element, hours } | Quantity::Co2 { element, hours, .. } => {
            let watts = match element {
                Some(e) => element_power(circuit, &solved()?, e).map_err(text)?.re,
                None => supply_power(circuit, f)?.re,
            };
            let kwh = watts * hours.value()? / 1000.0;
            match q {
                Quantity::Co2 { factor, .. } => Scalar(energy_to_co2(kwh, factor.value()?).map_err(text)?),
                _ => Scalar(kwh),
            }
        }
    })
}
