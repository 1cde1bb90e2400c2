//! Situated problem templates as shipped in the JSON catalog.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use cq_circuit::template::placeholders;
use cq_circuit::units::parse_value;

use crate::error::{ProblemError, Result};
use crate::recipe::{Component, Evaluation, FaultRecipe};
use crate::render::typed_placeholders;
use crate::tables::Tables;
use crate::taxonomy::{OutcomeTag, Taxonomy};

pub const CAMPAIGNS: [&str; 4] = ["appliances", "power-plant", "households", "mars"];
pub const LEVELS: std::ops::RangeInclusive<u8> = 1..=5;
/// Relative tolerance when a question gives none.
pub const DEFAULT_TOLERANCE: f64 = 0.01;
pub const MAX_TOLERANCE: f64 = 0.2;

/// Literal number or a string that renders to one (`"{R1}"`, `"4.7k"`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Num {
    Number(f64),
    Text(String),
}

impl Num {
    pub fn value(&self) -> std::result::Result<f64, String> {
        match self {
            Num::Number(x) => Ok(*x),
            Num::Text(s) => parse_value(s).ok_or_else(|| format!("`{s}` is not a number")),
        }
    }
}

impl From<f64> for Num {
    fn from(x: f64) -> Self {
        Num::Number(x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParamSpec {
    /// Rounded to `digits` significant digits.
    Uniform { lo: f64, hi: f64, #[serde(default = "default_digits")] digits: u32 },
    LogUniform { lo: f64, hi: f64, #[serde(default = "default_digits")] digits: u32 },
    Integer { lo: i64, hi: i64 },
    Choice { values: Vec<String> },
    /// One entry of a shipped value table.
    Catalog { catalog: String },
    /// Deterministic function of an earlier parameter; draws nothing.
    Lookup { from: String, map: BTreeMap<String, String> },
}

fn default_digits() -> u32 {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamDef {
    pub name: String,
    #[serde(flatten)]
    pub spec: ParamSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadRecipe {
    /// `WYE` or `DELTA`, possibly a placeholder.
    pub connection: String,
    /// One `[re, im]` pair for a balanced load, three for an unbalanced one.
    pub z: Vec<[Num; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreePhaseRecipe {
    pub v_ll: Num,
    #[serde(default = "default_sequence")]
    pub sequence: String,
    pub frequency: Num,
    pub loads: Vec<LoadRecipe>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line: Option<[Num; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neutral: Option<[Num; 2]>,
}

fn default_sequence() -> String {
    "ABC".into()
}

/// Value computed from the drawn circuit and shown in the narrative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Given {
    pub name: String,
    #[serde(flatten)]
    pub eval: Evaluation,
    #[serde(default)]
    pub format: Component,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum QuestionKind {
    Numeric,
    Phasor,
    Choice,
    Diagnosis,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pick {
    #[default]
    Max,
    Min,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Question {
    pub kind: QuestionKind,
    pub prompt: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub unit: String,
    /// NUMERIC and PHASOR.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer: Option<Evaluation>,
    #[serde(default)]
    pub component: Component,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// CHOICE options.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub choices: Vec<String>,
    /// CHOICE with a fixed (possibly drawn) correct index.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correct: Option<Num>,
    /// CHOICE decided by the solver: one evaluation per option, the
    /// largest (or smallest) wins.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rank: Vec<Evaluation>,
    #[serde(default)]
    pub pick: Pick,
    /// DIAGNOSIS truth.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fault: Option<FaultRecipe>,
}

fn default_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemTemplate {
    pub id: String,
    pub campaign: String,
    pub level: u8,
    pub title: String,
    pub narrative: String,
    #[serde(default)]
    pub params: Vec<ParamDef>,
    /// Netlist text with placeholders.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub netlist: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub three_phase: Option<ThreePhaseRecipe>,
    #[serde(default)]
    pub given: Vec<Given>,
    pub questions: Vec<Question>,
    pub difficulty: u8,
    pub xp: u32,
    pub coins: u32,
    pub outcomes: Vec<OutcomeTag>,
    #[serde(default)]
    pub secondary: bool,
    /// Identification problems hide the circuit they ask about.
    #[serde(default = "default_true")]
    pub reveal_circuit: bool,
}

fn default_true() -> bool {
    true
}

impl ProblemTemplate {
    fn invalid(&self, message: impl Into<String>) -> ProblemError {
        ProblemError::InvalidTemplate { template: self.id.clone(), message: message.into() }
    }

    pub fn is_three_phase(&self) -> bool {
        self.three_phase.is_some()
    }

    /// Checks every invariant that does not need a draw.
    pub fn validate(&self, taxonomy: &Taxonomy, tables: &Tables) -> Result<()> {
        if self.id.is_empty() || self.id.chars().any(char::is_whitespace) {
            return Err(self.invalid("id must be nonempty without spaces"));
        }
        if !CAMPAIGNS.contains(&self.campaign.as_str()) {
            return Err(self.invalid(format!("unknown campaign `{}`", self.campaign)));
        }
        if !LEVELS.contains(&self.level) {
            return Err(self.invalid(format!("level {} outside 1..5", self.level)));
        }
        if !(1..=5).contains(&self.difficulty) {
            return Err(self.invalid("difficulty outside 1..5"));
        }
        if self.xp == 0 {
            return Err(self.invalid("xp reward must be positive"));
        }
        // Coins depend linearly on difficulty, one per level of difficulty.
        if self.coins != u32::from(self.difficulty) {
            return Err(self.invalid("coin reward must equal difficulty"));
        }
        if self.outcomes.is_empty() {
            return Err(self.invalid("at least one outcome tag"));
        }
        for tag in &self.outcomes {
            if !taxonomy.contains(&tag.topic) {
                return Err(self.invalid(format!("topic `{}` is not in the taxonomy", tag.topic)));
            }
        }
        if self.netlist.is_some() == self.three_phase.is_some() {
            return Err(self.invalid("exactly one of `netlist` and `three_phase`"));
        }
        if self.questions.is_empty() {
            return Err(self.invalid("at least one question"));
        }

        let mut params = BTreeSet::new();
        for p in &self.params {
            if !params.insert(p.name.as_str()) {
                return Err(self.invalid(format!("duplicate parameter `{}`", p.name)));
            }
            self.validate_param(p, &params, tables)?;
        }
        let mut names = params.clone();
        for g in &self.given {
            if !names.insert(g.name.as_str()) {
                return Err(self.invalid(format!("given `{}` clashes with another name", g.name)));
            }
        }

        let uses = |names_used: std::result::Result<Vec<String>, String>, allowed: &BTreeSet<&str>, what: &str| {
            let used = names_used.map_err(|e| self.invalid(format!("{what}: {e}")))?;
            match used.iter().find(|n| !allowed.contains(n.as_str())) {
                Some(n) => Err(self.invalid(format!("{what}: placeholder `{n}` has no parameter"))),
                None => Ok(()),
            }
        };
        // Circuit recipes see parameters; text sees parameters and givens.
        if let Some(n) = &self.netlist {
            uses(placeholders(n), &params, "netlist")?;
        }
        if let Some(tp) = &self.three_phase {
            uses(typed_placeholders(tp), &params, "three_phase")?;
        }
        for g in &self.given {
            uses(typed_placeholders(&g.eval), &params, &format!("given `{}`", g.name))?;
            if g.eval.fault.is_some() && self.three_phase.is_some() && g.eval.quantity.needs_system() {
                return Err(self.invalid("three-phase quantities ignore faults"));
            }
        }
        uses(placeholders(&self.title), &names, "title")?;
        uses(placeholders(&self.narrative), &names, "narrative")?;
        for (i, q) in self.questions.iter().enumerate() {
            let what = format!("question {}", i + 1);
            uses(placeholders(&q.prompt), &names, &what)?;
            for c in &q.choices {
                uses(placeholders(c), &names, &what)?;
            }
            uses(typed_placeholders(&q.answer), &params, &what)?;
            uses(typed_placeholders(&q.rank), &params, &what)?;
            uses(typed_placeholders(&q.correct), &params, &what)?;
            uses(typed_placeholders(&q.fault), &params, &what)?;
            self.validate_question(q, &what)?;
        }
        Ok(())
    }

    fn validate_param(&self, p: &ParamDef, seen: &BTreeSet<&str>, tables: &Tables) -> Result<()> {
        let bad = |m: &str| Err(self.invalid(format!("parameter `{}`: {m}", p.name)));
        match &p.spec {
            ParamSpec::Uniform { lo, hi, digits } | ParamSpec::LogUniform { lo, hi, digits } => {
                if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                    return bad("needs finite lo <= hi");
                }
                if matches!(p.spec, ParamSpec::LogUniform { .. }) && *lo <= 0.0 {
                    return bad("log range must be positive");
                }
                if !(1..=15).contains(digits) {
                    return bad("digits outside 1..15");
                }
            }
            ParamSpec::Integer { lo, hi } => {
                if lo > hi {
                    return bad("needs lo <= hi");
                }
            }
            ParamSpec::Choice { values } => {
                if values.is_empty() {
                    return bad("empty choice list");
                }
            }
            ParamSpec::Catalog { catalog } => {
                if tables.get(catalog).is_none_or(|t| t.is_empty()) {
                    return bad(&format!("unknown or empty table `{catalog}`"));
                }
            }
            ParamSpec::Lookup { from, map } => {
                // `seen` already holds this parameter, so a self-reference passes
                // the membership test; reject it explicitly.
                if from == &p.name || !seen.contains(from.as_str()) {
                    return bad(&format!("lookup source `{from}` must be an earlier parameter"));
                }
                if map.is_empty() {
                    return bad("empty lookup map");
                }
                if let Some(ParamSpec::Choice { values }) = self.params.iter().find(|q| &q.name == from).map(|q| &q.spec) {
                    if let Some(v) = values.iter().find(|v| !map.contains_key(*v)) {
                        return bad(&format!("lookup has no entry for `{v}`"));
                    }
                }
            }
        }
        Ok(())
    }

    fn validate_question(&self, q: &Question, what: &str) -> Result<()> {
        let bad = |m: &str| Err(self.invalid(format!("{what}: {m}")));
        if !(q.tolerance > 0.0 && q.tolerance <= MAX_TOLERANCE) {
            return bad("tolerance must lie in (0, 0.2]");
        }
        match q.kind {
            QuestionKind::Numeric | QuestionKind::Phasor => {
                let Some(answer) = &q.answer else { return bad("needs an answer recipe") };
                if q.kind == QuestionKind::Phasor && !answer.quantity.is_phasor() {
                    return bad("PHASOR needs a phasor-valued quantity");
                }
                if q.kind == QuestionKind::Numeric && q.component == Component::Phasor {
                    return bad("NUMERIC cannot ask for a phasor component");
                }
                if answer.quantity.needs_system() && self.three_phase.is_none() {
                    return bad("three-phase quantity without a three-phase system");
                }
            }
            QuestionKind::Choice => {
                if q.choices.len() < 2 {
                    return bad("CHOICE needs at least two options");
                }
                match (&q.correct, q.rank.is_empty()) {
                    (Some(_), true) => {}
                    (None, false) if q.rank.len() == q.choices.len() => {}
                    _ => return bad("CHOICE needs either `correct` or one `rank` entry per option"),
                }
                if let Some(Num::Number(i)) = &q.correct {
                    if i.fract() != 0.0 || *i < 0.0 || *i as usize >= q.choices.len() {
                        return bad("correct index out of range");
                    }
                }
            }
            QuestionKind::Diagnosis => {
                if q.fault.is_none() {
                    return bad("DIAGNOSIS needs the fault truth");
                }
            }
        }
        Ok(())
    }
}
