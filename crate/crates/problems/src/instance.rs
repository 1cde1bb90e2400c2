//! Seeded instantiation of templates.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use cq_circuit::three_phase::{Connection, Sequence, ThreePhaseLoad, ThreePhaseSystem};
use cq_circuit::{inject_fault, parse_netlist, serialize_netlist, Circuit, FaultSpec, Phasor};

use crate::error::{ProblemError, Result};
use crate::recipe::{evaluate, Component, Setting};
use crate::render::{render_typed, visit_strings};
use crate::rng::{stream_seed, SplitMix64};
use crate::tables::Tables;
use crate::taxonomy::OutcomeTag;
use crate::template::{Num, ParamSpec, Pick, ProblemTemplate, QuestionKind, ThreePhaseRecipe};

/// Re-draws after the first attempt before giving up.
pub const REDRAWS: u32 = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Expected {
    Numeric { value: f64 },
    Phasor { value: Phasor },
    Choice { index: usize },
    Diagnosis { fault: FaultSpec },
}

/// What the student sees of a question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionView {
    pub kind: QuestionKind,
    pub prompt: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub unit: String,
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub choices: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub instance_id: String,
    pub template_id: String,
    pub campaign: String,
    pub level: u8,
    pub seed: u64,
    pub params: BTreeMap<String, String>,
    pub title: String,
    pub narrative: String,
    pub netlist: String,
    /// False for identification problems whose circuit is the unknown.
    pub reveal_circuit: bool,
    pub questions: Vec<QuestionView>,
    pub expected: Vec<Expected>,
    pub difficulty: u8,
    pub xp: u32,
    pub coins: u32,
    pub outcomes: Vec<OutcomeTag>,
    pub secondary: bool,
    /// Stamped by whoever issues the instance; generation leaves it empty so
    /// that regeneration stays byte-identical.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub issued_at: Option<String>,
}

/// Instance without the expected answers, safe to send to a student.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceView {
    pub instance_id: String,
    pub template_id: String,
    pub campaign: String,
    pub level: u8,
    pub seed: u64,
    pub title: String,
    pub narrative: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub netlist: Option<String>,
    pub questions: Vec<QuestionView>,
    pub difficulty: u8,
    pub xp: u32,
    pub coins: u32,
    pub outcomes: Vec<OutcomeTag>,
    pub secondary: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub issued_at: Option<String>,
}

impl ProblemInstance {
    pub fn view(&self) -> InstanceView {
        InstanceView {
            instance_id: self.instance_id.clone(),
            template_id: self.template_id.clone(),
            campaign: self.campaign.clone(),
            level: self.level,
            seed: self.seed,
            title: self.title.clone(),
            narrative: self.narrative.clone(),
            netlist: self.reveal_circuit.then(|| self.netlist.clone()),
            questions: self.questions.clone(),
            difficulty: self.difficulty,
            xp: self.xp,
            coins: self.coins,
            outcomes: self.outcomes.clone(),
            secondary: self.secondary,
            issued_at: self.issued_at.clone(),
        }
    }

    pub fn circuit(&self) -> Result<Circuit> {
        Ok(parse_netlist(&self.netlist)?)
    }
}

pub fn instance_id(template_id: &str, seed: u64) -> String {
    format!("{template_id}:{seed:016x}")
}

/// Deterministic instance of `template` for `seed`, drawing from the
/// shipped value tables.
pub fn instantiate(template: &ProblemTemplate, seed: u64) -> Result<ProblemInstance> {
    instantiate_with(template, seed, Tables::shipped())
}

pub fn instantiate_with(template: &ProblemTemplate, seed: u64, tables: &Tables) -> Result<ProblemInstance> {
    let mut rng = SplitMix64::new(stream_seed(&template.id, seed));
    let mut last = String::new();
    for _ in 0..=REDRAWS {
        let params = draw(template, &mut rng, tables).map_err(|message| ProblemError::InvalidTemplate {
            template: template.id.clone(),
            message,
        })?;
        match build(template, seed, params) {
            Ok(instance) => return Ok(instance),
            Err(e) => last = e,
        }
    }
    Err(ProblemError::RecipeError { template: template.id.clone(), attempts: REDRAWS + 1, last })
}

/// Shortest decimal that round-trips.
fn number(x: f64) -> String {
    format!("{x}")
}

fn significant(x: f64, digits: u32) -> f64 {
    format!("{:.*e}", digits.saturating_sub(1) as usize, x).parse().unwrap_or(x)
}

fn draw(template: &ProblemTemplate, rng: &mut SplitMix64, tables: &Tables) -> std::result::Result<BTreeMap<String, String>, String> {
    let mut params = BTreeMap::new();
    for p in &template.params {
        let value = match &p.spec {
            ParamSpec::Uniform { lo, hi, digits } => {
                number(significant(lo + (hi - lo) * rng.next_f64(), *digits).clamp(*lo, *hi))
            }
            ParamSpec::LogUniform { lo, hi, digits } => {
                let x = (lo.ln() + (hi.ln() - lo.ln()) * rng.next_f64()).exp();
                number(significant(x, *digits).clamp(*lo, *hi))
            }
            ParamSpec::Integer { lo, hi } => {
                let span = (hi - lo) as u64 + 1;
                (lo + rng.below(span) as i64).to_string()
            }
            ParamSpec::Choice { values } => values[rng.below(values.len() as u64) as usize].clone(),
            ParamSpec::Catalog { catalog } => {
                let table = tables.get(catalog).filter(|t| !t.is_empty()).ok_or_else(|| format!("unknown table `{catalog}`"))?;
                table[rng.below(table.len() as u64) as usize].clone()
            }
            ParamSpec::Lookup { from, map } => {
                let key: &String = params.get(from).ok_or_else(|| format!("lookup source `{from}` not drawn"))?;
                map.get(key).ok_or_else(|| format!("lookup `{}` has no entry for `{key}`", p.name))?.clone()
            }
        };
        params.insert(p.name.clone(), value);
    }
    Ok(params)
}

fn system_from(recipe: &ThreePhaseRecipe) -> std::result::Result<ThreePhaseSystem, String> {
    let complex = |pair: &[Num; 2]| -> std::result::Result<_, String> {
        Ok(cq_circuit::Complex64::new(pair[0].value()?, pair[1].value()?))
    };
    let sequence = match recipe.sequence.to_ascii_uppercase().as_str() {
        "ABC" => Sequence::Abc,
        "ACB" => Sequence::Acb,
        other => return Err(format!("unknown phase sequence `{other}`")),
    };
    let mut loads = Vec::new();
    for load in &recipe.loads {
        let connection = match load.connection.to_ascii_uppercase().as_str() {
            "WYE" | "STAR" | "Y" => Connection::Wye,
            "DELTA" | "TRIANGLE" | "D" => Connection::Delta,
            other => return Err(format!("unknown connection `{other}`")),
        };
        let z = match load.z.as_slice() {
            [one] => [complex(one)?; 3],
            [a, b, c] => [complex(a)?, complex(b)?, complex(c)?],
            _ => return Err("a load needs one or three impedances".into()),
        };
        loads.push(ThreePhaseLoad { connection, z });
    }
    Ok(ThreePhaseSystem {
        v_ll: recipe.v_ll.value()?,
        sequence,
        frequency: recipe.frequency.value()?,
        loads,
        line: recipe.line.as_ref().map(complex).transpose()?,
        neutral: recipe.neutral.as_ref().map(complex).transpose()?,
    })
}

fn build(template: &ProblemTemplate, seed: u64, params: BTreeMap<String, String>) -> std::result::Result<ProblemInstance, String> {
    let by_param = |name: &str| params.get(name).cloned();
    let text = |e: cq_circuit::CircuitError| e.to_string();

    let (circuit, system) = match (&template.netlist, &template.three_phase) {
        (Some(recipe), _) => {
            let rendered = cq_circuit::template::render(recipe, &by_param)?;
            (parse_netlist(&rendered).map_err(text)?, None)
        }
        (None, Some(recipe)) => {
            let system = system_from(&render_typed(recipe, &by_param)?)?;
            (system.to_circuit().map_err(text)?, Some(system))
        }
        (None, None) => return Err("template has no circuit".into()),
    };
    let setting = Setting {
        circuit: &circuit,
        system: system.as_ref(),
        frequency: system.as_ref().map_or_else(|| circuit.analysis_frequency(), |s| s.frequency),
    };
    // Every draw must at least solve before any question is asked of it.
    cq_circuit::solve(&circuit, setting.frequency).map_err(text)?;

    let mut names = params.clone();
    for given in &template.given {
        let eval = render_typed(&given.eval, &by_param)?;
        let shown = evaluate(&eval, &setting)?.display(given.format)?;
        names.insert(given.name.clone(), shown);
    }
    let by_name = |name: &str| names.get(name).cloned();

    let mut questions = Vec::new();
    let mut expected = Vec::new();
    for q in &template.questions {
        let prompt = cq_circuit::template::render(&q.prompt, &by_name)?;
        let choices = q.choices.iter().map(|c| cq_circuit::template::render(c, &by_name)).collect::<std::result::Result<Vec<_>, _>>()?;
        let truth = match q.kind {
            QuestionKind::Numeric | QuestionKind::Phasor => {
                let recipe = q.answer.as_ref().ok_or("question without answer recipe")?;
                let value = evaluate(&render_typed(recipe, &by_param)?, &setting)?;
                match (q.kind, value.value) {
                    (QuestionKind::Phasor, crate::recipe::Value::Phasor(z)) => Expected::Phasor { value: Phasor::from_complex(z) },
                    (QuestionKind::Phasor, _) => return Err("PHASOR answer is not a phasor".into()),
                    _ => Expected::Numeric { value: value.component(q.component)? },
                }
            }
            QuestionKind::Choice => {
                let index = match &q.correct {
                    Some(n) => {
                        let x = render_typed(n, &by_param)?.value()?;
                        if x.fract() != 0.0 || x < 0.0 || x as usize >= choices.len() {
                            return Err(format!("correct index {x} out of range"));
                        }
                        x as usize
                    }
                    None => rank(&q.rank, q.pick, &setting, &by_param)?,
                };
                Expected::Choice { index }
            }
            QuestionKind::Diagnosis => {
                let fault = render_typed(q.fault.as_ref().ok_or("diagnosis without fault")?, &by_param)?.to_spec()?;
                inject_fault(&circuit, &fault).map_err(text)?;
                Expected::Diagnosis { fault }
            }
        };
        questions.push(crate::instance::QuestionView { kind: q.kind, prompt, unit: q.unit.clone(), tolerance: q.tolerance, choices });
        expected.push(truth);
    }

    let title = cq_circuit::template::render(&template.title, &by_name)?;
    let narrative = cq_circuit::template::render(&template.narrative, &by_name)?;
    let netlist = serialize_netlist(&circuit);
    let instance = ProblemInstance {
        instance_id: instance_id(&template.id, seed),
        template_id: template.id.clone(),
        campaign: template.campaign.clone(),
        level: template.level,
        seed,
        params,
        title,
        narrative,
        netlist,
        reveal_circuit: template.reveal_circuit,
        questions,
        expected,
        difficulty: template.difficulty,
        xp: template.xp,
        coins: template.coins,
        outcomes: template.outcomes.clone(),
        secondary: template.secondary,
        issued_at: None,
    };
    // Placeholders left in rendered text mean a given or parameter vanished.
    let mut leftover = None;
    let value = serde_json::to_value(instance.view()).map_err(|e| e.to_string())?;
    visit_strings(&value, &mut |s| {
        if let Ok(found) = cq_circuit::template::placeholders(s) {
            if let Some(n) = found.into_iter().next() {
                leftover = Some(n);
            }
        }
    });
    if let Some(n) = leftover {
        return Err(format!("placeholder `{n}` survived rendering"));
    }
    Ok(instance)
}

/// Index of the winning option; near-ties are rejected so the answer is
/// robust to rounding.
fn rank(
    recipes: &[crate::recipe::Evaluation],
    pick: Pick,
    setting: &Setting,
    by_param: &impl Fn(&str) -> Option<String>,
) -> std::result::Result<usize, String> {
    let mut scores = Vec::new();
    for r in recipes {
        scores.push(evaluate(&render_typed(r, by_param)?, setting)?.component(Component::Magnitude)?);
    }
    let key = |x: f64| if pick == Pick::Max { x } else { -x };
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| key(scores[b]).total_cmp(&key(scores[a])));
    let (best, second) = (scores[order[0]], scores[order[1]]);
    if (best - second).abs() <= 1e-3 * best.abs().max(second.abs()) {
        return Err("ranked options tie".into());
    }
    Ok(order[0])
}
