//! Symptoms, candidate diagnoses, and the test-and-repair loops.
//!
//! A [`Configuration`] pairs a recorded history (up to time `n`) with later
//! records (up to time `m`). It is a symptom when the history is consistent
//! but the records together are not. Candidates are read off the answer sets
//! of the diagnostic program; [`Diagnoser::find_diag`] tests their suspects
//! against the world and [`Diagnoser::diagnose`] repairs them until the
//! symptom disappears.

mod relevance;

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::action::{ab, repair, ActionDescription, ActionError, FluentLiteral, Observation, Occurrence, RecordedHistory, Records};
use crate::logic::{enumerate_answer_sets, AnswerSet, Engine, LogicError, Term};
use crate::translate::{Compiler, DiagnosticParams, Module, TranslateError};

pub use relevance::{is_well_defined, RelevanceIndex};

#[derive(Debug, thiserror::Error)]
pub enum DiagnosisError {
    #[error(transparent)]
    Translate(#[from] TranslateError),
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error(transparent)]
    Action(#[from] ActionError),
    #[error("history inconsistent, not a symptom: modeling error or missed past events")]
    HistoryInconsistent,
    #[error("{0} precedes the end of the history at {1}")]
    EarlyRecord(String, usize),
    #[error("{0} is not a component")]
    UnknownComponent(Term),
    #[error("world is at time {world} but the configuration is at {config}")]
    Clock { world: usize, config: usize },
    #[error("diagnosis loop exceeded {0} rounds")]
    LoopBound(usize),
    #[error("world: {0}")]
    Oracle(#[source] Box<dyn std::error::Error + Send + Sync>),
}

/// `⟨Γn, O⟩`: a recorded history and the records made after it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    pub history: RecordedHistory,
    pub observations: Records,
}

impl Configuration {
    /// Fails if a later record precedes the history's horizon.
    pub fn new(history: RecordedHistory, observations: Records) -> Result<Self, DiagnosisError> {
        let n = history.horizon;
        if let Some(o) = observations.observations.iter().find(|o| o.time < n) {
            return Err(DiagnosisError::EarlyRecord(o.to_string(), n));
        }
        if let Some(h) = observations.occurrences.iter().find(|h| h.time < n) {
            return Err(DiagnosisError::EarlyRecord(h.to_string(), n));
        }
        Ok(Configuration { history, observations })
    }

    /// `n`
    pub fn history_end(&self) -> usize {
        self.history.horizon
    }

    /// `m`: the latest time mentioned by the configuration.
    pub fn current_time(&self) -> usize {
        self.history.horizon.max(self.observations.extent())
    }

    pub fn records(&self) -> Records {
        self.history.records.union(&self.observations)
    }

    /// Literals observed at or after `n`.
    pub fn later_literals(&self) -> BTreeSet<FluentLiteral> {
        let n = self.history_end();
        self.records()
            .observations
            .iter()
            .filter(|o| o.time >= n)
            .map(|o| o.literal.clone())
            .collect()
    }

    /// The configuration with `extra` added to the history.
    pub fn with_history(&self, extra: &Records) -> Result<Configuration, DiagnosisError> {
        let history = RecordedHistory::new(self.history.horizon, self.history.records.union(extra))?;
        Ok(Configuration {
            history,
            observations: self.observations.clone(),
        })
    }
}

/// `⟨E, Δ⟩`: unobserved exogenous occurrences and the components some
/// model of the configuration plus `E` marks faulty at the current time.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CandidateDiagnosis {
    pub explanation: BTreeSet<Occurrence>,
    pub suspects: BTreeSet<Term>,
}

impl CandidateDiagnosis {
    pub fn is_empty(&self) -> bool {
        self.explanation.is_empty() && self.suspects.is_empty()
    }

    pub fn explanation_records(&self) -> Records {
        Records {
            observations: BTreeSet::new(),
            occurrences: self.explanation.clone(),
        }
    }
}

impl fmt::Display for CandidateDiagnosis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let e: Vec<String> = self.explanation.iter().map(|o| format!("{}@{}", o.action, o.time)).collect();
        let d: Vec<String> = self.suspects.iter().map(|c| c.to_string()).collect();
        write!(f, "<{{{}}}, {{{}}}>", e.join(", "), d.join(", "))
    }
}

/// Reads `⟨E, Δ⟩` off an answer set of a diagnostic program for `c`.
///
/// `E` holds the exogenous `o(a,t)` with `t < n` not already recorded;
/// `Δ` holds the components `c` with `h(ab(c), m)`.
pub fn determined_by(x: &AnswerSet, sd: &ActionDescription, c: &Configuration) -> CandidateDiagnosis {
    let n = c.history_end();
    let m = c.current_time();
    let recorded = c.records().occurrences;
    let mut out = CandidateDiagnosis::default();
    for l in x.with_predicate("o") {
        if l.negative {
            continue;
        }
        let (a, t) = (&l.args()[0], l.args()[1].as_int());
        let Some(t) = t.and_then(|t| usize::try_from(t).ok()) else {
            continue;
        };
        let occ = Occurrence::new(a.clone(), t);
        if t < n && sd.signature.exogenous_actions.contains(a) && !recorded.contains(&occ) {
            out.explanation.insert(occ);
        }
    }
    let now = Term::Int(m as i64);
    for comp in &sd.signature.components {
        let lit = crate::logic::Literal::atom("h", [ab(comp), now.clone()]);
        if x.0.contains(&lit) {
            out.suspects.insert(comp.clone());
        }
    }
    out
}

/// How `Candidate_Diag` picks among the candidates of a configuration.
#[derive(Clone, Default)]
pub enum Selection {
    /// The canonically smallest candidate.
    #[default]
    First,
    /// The canonically largest candidate.
    Last,
    /// Fewest suspects, then fewest occurrences, then canonical order.
    Minimal,
    /// Uniformly at random from a seeded generator.
    Seeded(u64),
    /// An index into the canonically sorted candidates.
    Custom(Arc<dyn Fn(&[CandidateDiagnosis]) -> usize + Send + Sync>),
}

impl fmt::Debug for Selection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Selection::First => f.write_str("First"),
            Selection::Last => f.write_str("Last"),
            Selection::Minimal => f.write_str("Minimal"),
            Selection::Seeded(s) => write!(f, "Seeded({s})"),
            Selection::Custom(_) => f.write_str("Custom"),
        }
    }
}

impl fmt::Display for Selection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Selection::First => f.write_str("first"),
            Selection::Last => f.write_str("last"),
            Selection::Minimal => f.write_str("minimal"),
            Selection::Seeded(s) => write!(f, "seeded:{s}"),
            Selection::Custom(_) => f.write_str("custom"),
        }
    }
}

impl PartialEq for Selection {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Selection::Custom(a), Selection::Custom(b)) => Arc::ptr_eq(a, b),
            (Selection::Seeded(a), Selection::Seeded(b)) => a == b,
            _ => std::mem::discriminant(self) == std::mem::discriminant(other),
        }
    }
}

impl std::str::FromStr for Selection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "first" => Ok(Selection::First),
            "last" => Ok(Selection::Last),
            "minimal" => Ok(Selection::Minimal),
            _ => match s.strip_prefix("seeded:").map(str::parse) {
                Some(Ok(seed)) => Ok(Selection::Seeded(seed)),
                _ => Err(format!("unknown selection {s:?} (expected first, last, minimal or seeded:N)")),
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct DiagnosisOptions {
    pub module: Module,
    pub max_actions: Option<usize>,
    pub engine: Engine,
    /// Include the awareness rules in every program.
    pub awareness: bool,
    pub selection: Selection,
    /// Fluents observed after each repair; `None` observes every observable fluent.
    pub post_repair: Option<Vec<Term>>,
    /// Upper bound on repair rounds in [`Diagnoser::diagnose`].
    pub max_rounds: usize,
}

impl Default for DiagnosisOptions {
    fn default() -> Self {
        DiagnosisOptions {
            module: Module::D0,
            max_actions: None,
            engine: Engine::Search,
            awareness: true,
            selection: Selection::First,
            post_repair: None,
            max_rounds: 16,
        }
    }
}

/// What the diagnostician can ask of the world.
pub trait WorldOracle {
    type Error: std::error::Error + Send + Sync + 'static;

    /// The latest time point of the actual trajectory.
    fn time(&self) -> usize;

    /// `f` or its negation, as it holds at `t`.
    fn observe(&self, t: usize, f: &Term) -> Result<FluentLiteral, Self::Error>;

    /// Executes `repair(c)` for every `c` in `components`, advancing time by one.
    fn repair(&mut self, components: &BTreeSet<Term>) -> Result<(), Self::Error>;
}

/// Progress reported while diagnosing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Event {
    Symptom { history_end: usize, current: usize },
    Candidate { round: usize, candidate: CandidateDiagnosis },
    Test { component: Term, time: usize, faulty: bool },
    Found(CandidateDiagnosis),
    NotFound,
    Repair { components: BTreeSet<Term>, time: usize },
    Observed(Observation),
    Resolved,
}

/// Result of [`Diagnoser::diagnose`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiagnoseOutcome {
    /// False when no diagnosis survived testing.
    pub resolved: bool,
    /// Diagnoses found, one per repair round.
    pub diagnoses: Vec<CandidateDiagnosis>,
}

pub struct Diagnoser<'a> {
    sd: &'a ActionDescription,
    pub options: DiagnosisOptions,
    rng: RefCell<Option<ChaCha8Rng>>,
}

impl<'a> Diagnoser<'a> {
    /// `sd` should already carry the repair actions if [`Self::diagnose`] is used.
    pub fn new(sd: &'a ActionDescription, options: DiagnosisOptions) -> Self {
        let rng = match options.selection {
            Selection::Seeded(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
            _ => None,
        };
        Diagnoser {
            sd,
            options,
            rng: RefCell::new(rng),
        }
    }

    pub fn description(&self) -> &ActionDescription {
        self.sd
    }

    fn has_answer_set(&self, program: &crate::logic::GroundProgram) -> Result<bool, DiagnosisError> {
        Ok(!enumerate_answer_sets(program, self.options.engine)?.is_empty())
    }

    /// Whether `history` alone has an answer set.
    pub fn is_consistent(&self, history: &RecordedHistory) -> Result<bool, DiagnosisError> {
        let p = Compiler::new(self.sd, history.horizon).history_program(&history.records, self.options.awareness)?;
        self.has_answer_set(&p)
    }

    /// `Γn` is consistent and `Γn ∪ O` is not.
    pub fn is_symptom(&self, c: &Configuration) -> Result<bool, DiagnosisError> {
        if !self.is_consistent(&c.history)? {
            return Err(DiagnosisError::HistoryInconsistent);
        }
        let p = Compiler::new(self.sd, c.current_time()).conf(
            &c.history.records,
            &c.observations,
            self.options.awareness,
        )?;
        Ok(!self.has_answer_set(&p)?)
    }

    fn params(&self, c: &Configuration) -> DiagnosticParams {
        DiagnosticParams {
            module: self.options.module,
            current_time: c.history_end(),
            max_actions: self.options.max_actions,
        }
    }

    /// Every distinct candidate determined by an answer set of the
    /// diagnostic program, canonically ordered, empty explanations dropped.
    pub fn candidates(&self, c: &Configuration) -> Result<Vec<CandidateDiagnosis>, DiagnosisError> {
        let p = Compiler::new(self.sd, c.current_time()).diagnostic(
            &c.history.records,
            &c.observations,
            &self.params(c),
            self.options.awareness,
        )?;
        let found: BTreeSet<CandidateDiagnosis> = enumerate_answer_sets(&p, self.options.engine)?
            .iter()
            .map(|x| determined_by(x, self.sd, c))
            .filter(|d| !d.explanation.is_empty())
            .collect();
        Ok(found.into_iter().collect())
    }

    fn select(&self, candidates: &[CandidateDiagnosis]) -> usize {
        match &self.options.selection {
            Selection::First => 0,
            Selection::Last => candidates.len() - 1,
            Selection::Minimal => (0..candidates.len())
                .min_by_key(|&i| {
                    let d = &candidates[i];
                    (d.suspects.len(), d.explanation.len(), i)
                })
                .unwrap_or(0),
            Selection::Seeded(_) => {
                let mut rng = self.rng.borrow_mut();
                rng.as_mut().map_or(0, |r| r.gen_range(0..candidates.len()))
            }
            Selection::Custom(f) => f(candidates).min(candidates.len() - 1),
        }
    }

    /// One candidate chosen by the selection policy, or `None` when there is
    /// none.
    pub fn candidate_diag(&self, c: &Configuration) -> Result<Option<CandidateDiagnosis>, DiagnosisError> {
        let all = self.candidates(c)?;
        if all.is_empty() {
            return Ok(None);
        }
        let i = self.select(&all);
        Ok(Some(all[i].clone()))
    }

    /// Tests the suspects of successive candidates at the current time,
    /// recording each result in `c`, until one candidate's suspects are all
    /// faulty. `None` means no candidate survived: a modeling error is likely.
    pub fn find_diag<W: WorldOracle>(
        &self,
        c: &mut Configuration,
        world: &W,
        log: &mut dyn FnMut(&Event),
    ) -> Result<Option<CandidateDiagnosis>, DiagnosisError> {
        let m = c.current_time();
        let bound = self.sd.signature.components.len() + 1;
        let mut o = c.observations.clone();
        for round in 1..=bound {
            let current = Configuration {
                history: c.history.clone(),
                observations: o.clone(),
            };
            let Some(candidate) = self.candidate_diag(&current)? else {
                log(&Event::NotFound);
                return Ok(None);
            };
            log(&Event::Candidate {
                round,
                candidate: candidate.clone(),
            });
            let mut diag = true;
            for comp in &candidate.suspects {
                let lit = world
                    .observe(m, &ab(comp))
                    .map_err(|e| DiagnosisError::Oracle(Box::new(e)))?;
                let faulty = lit.positive;
                log(&Event::Test {
                    component: comp.clone(),
                    time: m,
                    faulty,
                });
                o.observations.insert(Observation::new(lit, m));
                if !faulty {
                    diag = false;
                    break;
                }
            }
            if diag {
                c.observations = o;
                log(&Event::Found(candidate.clone()));
                return Ok(Some(candidate));
            }
        }
        Err(DiagnosisError::LoopBound(bound))
    }

    /// Repeats diagnosis and repair while the configuration, with the last
    /// explanation added to its history, remains a symptom.
    pub fn diagnose<W: WorldOracle>(
        &self,
        c: &mut Configuration,
        world: &mut W,
        log: &mut dyn FnMut(&Event),
    ) -> Result<DiagnoseOutcome, DiagnosisError> {
        let mut explanation = Records::new();
        let mut diagnoses = Vec::new();
        let mut rounds = 0;
        while self.is_symptom(&c.with_history(&explanation)?)? {
            rounds += 1;
            if rounds > self.options.max_rounds {
                return Err(DiagnosisError::LoopBound(self.options.max_rounds));
            }
            log(&Event::Symptom {
                history_end: c.history_end(),
                current: c.current_time(),
            });
            let Some(d) = self.find_diag(c, world, log)? else {
                return Ok(DiagnoseOutcome {
                    resolved: false,
                    diagnoses,
                });
            };
            explanation = d.explanation_records();
            let m = c.current_time();
            if world.time() != m {
                return Err(DiagnosisError::Clock {
                    world: world.time(),
                    config: m,
                });
            }
            world
                .repair(&d.suspects)
                .map_err(|e| DiagnosisError::Oracle(Box::new(e)))?;
            log(&Event::Repair {
                components: d.suspects.clone(),
                time: m,
            });
            for comp in &d.suspects {
                c.observations.occurrences.insert(Occurrence::new(repair(comp), m));
            }
            // records at m + 1 move the current time forward even if nothing is observed
            let next = m + 1;
            let fluents: Vec<Term> = match &self.options.post_repair {
                Some(fs) => fs.clone(),
                None => self.sd.signature.observable.iter().cloned().collect(),
            };
            for f in &fluents {
                let lit = world
                    .observe(next, f)
                    .map_err(|e| DiagnosisError::Oracle(Box::new(e)))?;
                let o = Observation::new(lit, next);
                log(&Event::Observed(o.clone()));
                c.observations.observations.insert(o);
            }
            diagnoses.push(d);
        }
        log(&Event::Resolved);
        Ok(DiagnoseOutcome {
            resolved: true,
            diagnoses,
        })
    }
}
