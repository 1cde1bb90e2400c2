//! Situated problem templates, seeded instances and grading.

pub mod energy;
pub mod error;
pub mod grade;
pub mod instance;
pub mod library;
pub mod recipe;
pub mod render;
pub mod rng;
pub mod schematic;
pub mod tables;
pub mod taxonomy;
pub mod template;

pub use energy::energy_to_co2;
pub use error::{ProblemError, Result};
pub use grade::{expected_answers, grade, Answer, Feedback, GradeResult, QuestionGrade, Verdict};
pub use instance::{instantiate, instantiate_with, Expected, InstanceView, ProblemInstance, QuestionView, REDRAWS};
pub use library::{filter_templates, Library, TagFilter};
pub use schematic::{render_circuit, render_schematic};
pub use tables::Tables;
pub use taxonomy::{Bloom, OutcomeTag, Taxonomy};
pub use template::{ProblemTemplate, Question, QuestionKind, CAMPAIGNS};
