//! Grading of submitted answers against an instance's expectations.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use cq_circuit::phasor::angle_distance;

use crate::error::{ProblemError, Result};
use crate::instance::{Expected, ProblemInstance};

/// Scale below which an expected value counts as zero.
pub const TOLERANCE_FLOOR: f64 = 1e-12;
/// Every question needs at least this score for the problem to count as solved.
pub const QUESTION_THRESHOLD: f64 = 0.5;
pub const MEAN_THRESHOLD: f64 = 0.75;
pub const PARTIAL_SCORE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Answer {
    Number(f64),
    /// Magnitude and angle in degrees.
    Phasor { magnitude: f64, degrees: f64 },
    Choice { choice: usize },
    Diagnosis { kind: String, location: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Correct,
    Partial,
    Wrong,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feedback {
    Correct,
    OutOfTolerance,
    /// Right magnitude with the opposite sign, usually a reference direction.
    SignFlipped,
    /// Phasor magnitude right, angle wrong.
    AngleOff,
    WrongChoice,
    /// Fault kind right, location wrong.
    WrongLocation,
    WrongKind,
    /// Answer shape does not fit the question kind.
    WrongType,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuestionGrade {
    pub verdict: Verdict,
    pub score: f64,
    pub feedback: Feedback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradeResult {
    pub questions: Vec<QuestionGrade>,
    /// Mean question score.
    pub score: f64,
    pub solved: bool,
    pub xp: u32,
    pub coins: u32,
}

fn verdict(score: f64, feedback: Feedback) -> QuestionGrade {
    let verdict = if score >= 1.0 {
        Verdict::Correct
    } else if score > 0.0 {
        Verdict::Partial
    } else {
        Verdict::Wrong
    };
    QuestionGrade { verdict, score, feedback }
}

pub fn within(given: f64, expected: f64, tolerance: f64) -> bool {
    given.is_finite() && (given - expected).abs() <= tolerance * expected.abs().max(TOLERANCE_FLOOR)
}

pub fn grade_question(expected: &Expected, answer: &Answer, tolerance: f64) -> QuestionGrade {
    match (expected, answer) {
        (Expected::Numeric { value }, Answer::Number(given)) => {
            if within(*given, *value, tolerance) {
                verdict(1.0, Feedback::Correct)
            } else if *value != 0.0 && within(-*given, *value, tolerance) {
                verdict(0.0, Feedback::SignFlipped)
            } else {
                verdict(0.0, Feedback::OutOfTolerance)
            }
        }
        (Expected::Phasor { value }, Answer::Phasor { magnitude, degrees }) => {
            if !within(*magnitude, value.magnitude, tolerance) {
                return verdict(0.0, Feedback::OutOfTolerance);
            }
            // The angle of a zero phasor is meaningless.
            if value.magnitude <= TOLERANCE_FLOOR || angle_distance(degrees.to_radians(), value.angle) <= tolerance * PI {
                verdict(1.0, Feedback::Correct)
            } else {
                verdict(PARTIAL_SCORE, Feedback::AngleOff)
            }
        }
        (Expected::Choice { index }, Answer::Choice { choice }) => {
            if index == choice {
                verdict(1.0, Feedback::Correct)
            } else {
                verdict(0.0, Feedback::WrongChoice)
            }
        }
        (Expected::Diagnosis { fault }, Answer::Diagnosis { kind, location }) => {
            if !fault.kind_name().eq_ignore_ascii_case(kind.trim()) {
                verdict(0.0, Feedback::WrongKind)
            } else if normalize_location(location) == normalize_location(&fault.location()) {
                verdict(1.0, Feedback::Correct)
            } else {
                verdict(PARTIAL_SCORE, Feedback::WrongLocation)
            }
        }
        _ => verdict(0.0, Feedback::WrongType),
    }
}

/// Node pairs compare unordered; names compare case-insensitively.
fn normalize_location(location: &str) -> String {
    let mut parts: Vec<String> = location.split('-').map(|p| p.trim().to_ascii_uppercase()).collect();
    parts.sort();
    parts.join("-")
}

pub fn grade(instance: &ProblemInstance, answers: &[Answer]) -> Result<GradeResult> {
    if answers.len() != instance.expected.len() {
        return Err(ProblemError::ArityMismatch { expected: instance.expected.len(), given: answers.len() });
    }
    let questions: Vec<QuestionGrade> = instance
        .expected
        .iter()
        .zip(answers)
        .zip(&instance.questions)
        .map(|((e, a), q)| grade_question(e, a, q.tolerance))
        .collect();
    let score = if questions.is_empty() { 0.0 } else { questions.iter().map(|g| g.score).sum::<f64>() / questions.len() as f64 };
    let solved = !questions.is_empty() && questions.iter().all(|g| g.score >= QUESTION_THRESHOLD) && score >= MEAN_THRESHOLD;
    Ok(GradeResult {
        questions,
        score,
        solved,
        xp: if solved { instance.xp } else { 0 },
        coins: if solved { instance.coins } else { 0 },
    })
}

/// The answers a perfect student would submit.
pub fn expected_answers(instance: &ProblemInstance) -> Vec<Answer> {
    instance
        .expected
        .iter()
        .map(|e| match e {
            Expected::Numeric { value } => Answer::Number(*value),
            Expected::Phasor { value } => Answer::Phasor { magnitude: value.magnitude, degrees: value.degrees() },
            Expected::Choice { index } => Answer::Choice { choice: *index },
            Expected::Diagnosis { fault } => Answer::Diagnosis { kind: fault.kind_name().into(), location: fault.location() },
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use cq_circuit::{FaultSpec, Phasor};

    #[test]
    fn numeric_boundary() {
        let e = Expected::Numeric { value: 3.0 };
        assert_eq!(grade_question(&e, &Answer::Number(3.02), 0.01).verdict, Verdict::Correct);
        assert_eq!(grade_question(&e, &Answer::Number(3.04), 0.01).verdict, Verdict::Wrong);
        assert_eq!(grade_question(&e, &Answer::Number(-3.0), 0.01).feedback, Feedback::SignFlipped);
        assert_eq!(grade_question(&e, &Answer::Number(f64::NAN), 0.01).verdict, Verdict::Wrong);
    }

    #[test]
    fn phasor_angle_partial() {
        let e = Expected::Phasor { value: Phasor::from_degrees(10.0, 30.0) };
        let g = grade_question(&e, &Answer::Phasor { magnitude: 10.0, degrees: 30.0 + 360.0 }, 0.01);
        assert_eq!(g.verdict, Verdict::Correct);
        let g = grade_question(&e, &Answer::Phasor { magnitude: 10.0, degrees: 90.0 }, 0.01);
        assert_eq!((g.verdict, g.score), (Verdict::Partial, 0.5));
    }

    #[test]
    fn diagnosis_short_location_is_unordered() {
        let e = Expected::Diagnosis { fault: FaultSpec::Short { a: "3".into(), b: "1".into(), ohms: 0.0 } };
        let g = grade_question(&e, &Answer::Diagnosis { kind: "short".into(), location: "3-1".into() }, 0.01);
        assert_eq!(g.verdict, Verdict::Correct);
    }

    #[test]
    fn answers_parse_untagged() {
        let a: Vec<Answer> = serde_json::from_str(
            r#"[1.5, {"magnitude": 2, "degrees": -30}, {"choice": 1}, {"kind": "OPEN", "location": "R3"}]"#,
        )
        .unwrap();
        assert!(matches!(a[0], Answer::Number(_)));
        assert!(matches!(a[1], Answer::Phasor { .. }));
        assert!(matches!(a[2], Answer::Choice { choice: 1 }));
        assert!(matches!(a[3], Answer::Diagnosis { .. }));
    }
}
