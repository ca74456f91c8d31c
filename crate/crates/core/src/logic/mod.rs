//! Ground and schematic A-Prolog programs and their answer sets.

mod ground;
mod parse;
mod program;
mod solve;
mod term;

pub use ground::{
    ground, ground_with, infer_sorts, Extensional, ArithOp, CompareOp, ElementPattern, Env, Guard, HeadPattern,
    LiteralPattern, Pattern, SchematicRule, SortedVar,
};
pub use parse::{parse_program, parse_rules, ParseError};
pub use program::{
    is_consistent, AnswerSet, ChoiceElement, CountCheck, GroundProgram, Head, Rule, Signature,
};
pub use solve::{
    enumerate_answer_sets, expand_extended_rules, is_answer_set, is_consistent_program,
    least_model, reduct, Engine, Expanded, BRUTE_FORCE_CAP,
};
pub use term::{GroundAtom, Literal, Term};

#[derive(Debug, thiserror::Error)]
pub enum LogicError {
    #[error("parse error at {0}")]
    Parse(ParseError),
    #[error("predicate {predicate} used with arity {found}, declared with arity {declared}")]
    Arity {
        predicate: String,
        declared: usize,
        found: usize,
    },
    #[error("rule {rule}: variable {variable} has no sort")]
    UnsortedVariable { rule: usize, variable: String },
    #[error("rule {rule}: {message}")]
    Grounding { rule: usize, message: String },
    #[error("candidate set is inconsistent")]
    InconsistentCandidate,
    #[error("brute-force engine would guess {size} literals (limit {cap}); use the search engine")]
    CapExceeded { size: usize, cap: usize },
}

impl From<ParseError> for LogicError {
    fn from(e: ParseError) -> Self {
        LogicError::Parse(e)
    }
}
