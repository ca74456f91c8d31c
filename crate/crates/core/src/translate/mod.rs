//! Compilation of action descriptions and histories into A-Prolog.
//!
//! Laws become facts (`d_law`, `s_law`, `head`, `action`, `prec`) read by a
//! fixed, domain-independent program; impossibility conditions become
//! constraints. On top of that sit the configuration program (laws,
//! history, later observations and the awareness rules) and the diagnostic
//! modules that guess unobserved exogenous occurrences.
//!
//! ```
//! use aldiag::action::{ActionDescription, Records};
//! use aldiag::logic::{enumerate_answer_sets, Engine};
//! use aldiag::translate::Compiler;
//!
//! let sd = ActionDescription::parse("
//!     fluent(on). a_act(flip).
//!     causes(flip, on, [-on]).
//!     causes(flip, -on, [on]).
//! ").unwrap();
//! let history = Records::parse("obs(-on, 0). hpd(flip, 0).").unwrap();
//! let program = Compiler::new(&sd, 1).history_program(&history, false).unwrap();
//! let sets = enumerate_answer_sets(&program, Engine::Search).unwrap();
//! assert_eq!(sets.len(), 1);
//! assert!(sets[0].to_string().contains("h(on,1)"));
//! ```

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::action::{ActionDescription, ActionError, FluentLiteral, LawKind, Records, State, Trajectory};
use crate::logic::{
    ground_with, AnswerSet, CompareOp, CountCheck, Extensional, GroundProgram, Guard, HeadPattern,
    Literal, LiteralPattern, LogicError, Pattern, Rule, SchematicRule, Signature, Term,
};

#[derive(Debug, thiserror::Error)]
pub enum TranslateError {
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error(transparent)]
    Action(#[from] ActionError),
    #[error("window must be at least 1")]
    ZeroWindow,
    #[error("action bound must be at least 1")]
    ZeroBound,
    #[error("unknown diagnostic module {0:?} (expected d0, d1 or d2)")]
    UnknownModule(String),
    #[error("{what} at time {time} lies beyond the horizon {horizon}")]
    BeyondHorizon {
        what: String,
        time: usize,
        horizon: usize,
    },
}

/// Predicates defined only by facts in every generated program.
pub const EXTENSIONAL_PREDICATES: [&str; 9] = [
    "d_law", "s_law", "imp", "head", "action", "prec", "obs", "hpd", "x_act",
];

/// Which diagnostic module to add to the configuration program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Module {
    /// Any exogenous occurrence at any past step.
    #[default]
    D0,
    /// As `D0`, restricted to actions relevant to the later observations.
    D1,
    /// As `D0`, restricted to the last `window` steps before the current time.
    D2 { window: usize },
}

impl FromStr for Module {
    type Err = TranslateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "d0" | "D0" => Ok(Module::D0),
            "d1" | "D1" => Ok(Module::D1),
            "d2" | "D2" => Ok(Module::D2 { window: 1 }),
            other => Err(TranslateError::UnknownModule(other.to_string())),
        }
    }
}

impl fmt::Display for Module {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Module::D0 => f.write_str("d0"),
            Module::D1 => f.write_str("d1"),
            Module::D2 { .. } => f.write_str("d2"),
        }
    }
}

/// Parameters of a diagnostic program.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiagnosticParams {
    pub module: Module,
    /// End of the recorded history; occurrences are guessed before it.
    pub current_time: usize,
    /// Reject guesses with at least this many occurrences at the last step.
    pub max_actions: Option<usize>,
}

impl DiagnosticParams {
    pub fn new(module: Module, current_time: usize) -> Self {
        DiagnosticParams {
            module,
            current_time,
            max_actions: None,
        }
    }

    pub fn with_max_actions(mut self, k: usize) -> Self {
        self.max_actions = Some(k);
        self
    }

    fn validate(&self) -> Result<(), TranslateError> {
        if let Module::D2 { window: 0 } = self.module {
            return Err(TranslateError::ZeroWindow);
        }
        if self.max_actions == Some(0) {
            return Err(TranslateError::ZeroBound);
        }
        Ok(())
    }
}

fn int(t: usize) -> Term {
    Term::Int(t as i64)
}

fn var(name: &str) -> Pattern {
    Pattern::var(name)
}

fn lp(pred: &str, args: Vec<Pattern>) -> LiteralPattern {
    LiteralPattern::new(pred, args)
}

fn h(l: Pattern, t: Pattern) -> LiteralPattern {
    lp("h", vec![l, t])
}

fn lit_pattern(l: &FluentLiteral) -> Pattern {
    Pattern::from_term(&l.to_term())
}

fn fact(pred: &str, args: impl IntoIterator<Item = Term>) -> Rule {
    Rule::fact(Literal::atom(pred, args))
}

/// The domain-independent program: effects of dynamic and static laws,
/// precondition checking, inertia, consistency, and the links between
/// recorded and hypothesised occurrences and observations.
///
/// Variables: `D` laws, `L`/`P` fluent literals, `A` actions, `T` time
/// points, `N` precondition indices. `T'` and `N'` are successors.
pub fn pi_rules() -> Vec<SchematicRule> {
    vec![
        // 1. effects of dynamic laws
        SchematicRule::literal(h(var("L"), var("T'")))
            .pos(lp("d_law", vec![var("D")]))
            .pos(lp("head", vec![var("D"), var("L")]))
            .pos(lp("action", vec![var("D"), var("A")]))
            .pos(lp("o", vec![var("A"), var("T")]))
            .pos(lp("prec_h", vec![var("D"), var("T")]))
            .var("D", "law")
            .var("L", "lit")
            .var("A", "action")
            .var("T", "step")
            .derive("T'", var("T").plus(1)),
        // 2. static laws
        SchematicRule::literal(h(var("L"), var("T")))
            .pos(lp("s_law", vec![var("D")]))
            .pos(lp("head", vec![var("D"), var("L")]))
            .pos(lp("prec_h", vec![var("D"), var("T")]))
            .var("D", "law")
            .var("L", "lit")
            .var("T", "time"),
        // 3. the precondition list is exhausted
        SchematicRule::literal(lp("all_h", vec![var("D"), var("N"), var("T")]))
            .pos(lp("prec", vec![var("D"), var("N"), Pattern::sym("nil")]))
            .var("D", "law")
            .var("N", "index")
            .var("T", "time"),
        // 4. the N-th precondition holds and so do the rest
        SchematicRule::literal(lp("all_h", vec![var("D"), var("N"), var("T")]))
            .pos(lp("prec", vec![var("D"), var("N"), var("P")]))
            .pos(h(var("P"), var("T")))
            .pos(lp("all_h", vec![var("D"), var("N'"), var("T")]))
            .var("D", "law")
            .var("N", "index")
            .var("P", "lit")
            .var("T", "time")
            .derive("N'", var("N").plus(1)),
        // 5.
        SchematicRule::literal(lp("prec_h", vec![var("D"), var("T")]))
            .pos(lp("all_h", vec![var("D"), Pattern::Int(1), var("T")]))
            .var("D", "law")
            .var("T", "time"),
        // 6. inertia
        SchematicRule::literal(h(var("L"), var("T'")))
            .pos(h(var("L"), var("T")))
            .naf(h(var("L").complement(), var("T'")))
            .var("L", "lit")
            .var("T", "step")
            .derive("T'", var("T").plus(1)),
        // 7. consistency
        SchematicRule::constraint()
            .pos(h(var("L"), var("T")))
            .pos(h(var("L").complement(), var("T")))
            .var("L", "lit")
            .var("T", "time"),
        // 8.
        SchematicRule::literal(lp("o", vec![var("A"), var("T")]))
            .pos(lp("hpd", vec![var("A"), var("T")]))
            .var("A", "action")
            .var("T", "step"),
        // 9.
        SchematicRule::literal(h(var("L"), Pattern::Int(0)))
            .pos(lp("obs", vec![var("L"), Pattern::Int(0)]))
            .var("L", "lit"),
        // 10. reality check
        SchematicRule::constraint()
            .pos(lp("obs", vec![var("L"), var("T")]))
            .naf(h(var("L"), var("T")))
            .var("L", "lit")
            .var("T", "time"),
    ]
}

/// Rules 8 to 10 of [`pi_rules`], shared with the direct encoding.
fn record_rules() -> Vec<SchematicRule> {
    pi_rules().split_off(7)
}

/// Builds programs for one action description over time points `0..=horizon`.
#[derive(Debug, Clone)]
pub struct Compiler<'a> {
    sd: &'a ActionDescription,
    horizon: usize,
    raw: bool,
}

impl<'a> Compiler<'a> {
    pub fn new(sd: &'a ActionDescription, horizon: usize) -> Self {
        Compiler {
            sd,
            horizon,
            raw: false,
        }
    }

    /// Keep every ground instance instead of dropping those that can never
    /// fire.
    pub fn raw(mut self) -> Self {
        self.raw = true;
        self
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Sorts: `law`, `lit`, `action`, `fluent`, `time` (`0..=N`), `step`
    /// (`0..N`) and `index` (`1..=k+1` for the longest precondition list).
    pub fn signature(&self) -> Signature {
        let sig = &self.sd.signature;
        let longest = self.sd.laws.iter().map(|l| l.preconditions.len()).max().unwrap_or(0);
        Signature::new()
            .with_sort("law", self.sd.laws.iter().map(|l| Term::sym(l.name.clone())))
            .with_sort("lit", sig.literals().iter().map(FluentLiteral::to_term))
            .with_sort("action", sig.actions().cloned())
            .with_sort("fluent", sig.fluents.iter().cloned())
            .with_sort("time", (0..=self.horizon).map(int))
            .with_sort("step", (0..self.horizon).map(int))
            .with_sort("index", (1..=longest + 1).map(int))
    }

    /// Facts encoding the dynamic and static laws.
    pub fn law_facts(&self) -> Vec<Rule> {
        let mut out = Vec::new();
        for law in &self.sd.laws {
            let d = Term::sym(law.name.clone());
            match &law.kind {
                LawKind::Dynamic { action, head } => {
                    out.push(fact("d_law", [d.clone()]));
                    out.push(fact("head", [d.clone(), head.to_term()]));
                    out.push(fact("action", [d.clone(), action.clone()]));
                }
                LawKind::Static { head } => {
                    out.push(fact("s_law", [d.clone()]));
                    out.push(fact("head", [d.clone(), head.to_term()]));
                }
                LawKind::Impossibility { .. } => continue,
            }
            out.extend(prec_facts(&d, &law.preconditions));
        }
        out
    }

    /// Facts naming the impossibility conditions, read by the relevance rules.
    pub fn impossibility_facts(&self) -> Vec<Rule> {
        let mut out = Vec::new();
        for law in &self.sd.laws {
            if let LawKind::Impossibility { action } = &law.kind {
                let d = Term::sym(law.name.clone());
                out.push(fact("imp", [d.clone()]));
                out.push(fact("action", [d.clone(), action.clone()]));
                out.extend(prec_facts(&d, &law.preconditions));
            }
        }
        out
    }

    /// `:- h(l1,T), ..., h(lm,T), o(a,T).` for every impossibility condition.
    pub fn impossibility_constraints(&self) -> Vec<SchematicRule> {
        self.sd
            .laws
            .iter()
            .filter_map(|law| match &law.kind {
                LawKind::Impossibility { action } => {
                    let mut r = SchematicRule::constraint();
                    for l in &law.preconditions {
                        r = r.pos(h(lit_pattern(l), var("T")));
                    }
                    Some(
                        r.pos(lp("o", vec![Pattern::from_term(action), var("T")]))
                            .var("T", "time"),
                    )
                }
                _ => None,
            })
            .collect()
    }

    /// `h(f,0) :- not h(neg(f),0).` and its mirror image, for every fluent.
    pub fn awareness_rules(&self) -> Vec<Rule> {
        let mut out = Vec::new();
        for f in &self.sd.signature.fluents {
            let pos = Literal::atom("h", [f.clone(), int(0)]);
            let neg = Literal::atom("h", [Term::neg(f.clone()), int(0)]);
            out.push(Rule::normal(pos.clone(), vec![], vec![neg.clone()]));
            out.push(Rule::normal(neg, vec![], vec![pos]));
        }
        out
    }

    fn record_facts(&self, records: &Records) -> Result<Vec<Rule>, TranslateError> {
        for o in &records.observations {
            if o.time > self.horizon {
                return Err(TranslateError::BeyondHorizon {
                    what: o.to_string(),
                    time: o.time,
                    horizon: self.horizon,
                });
            }
        }
        for a in &records.occurrences {
            if a.time >= self.horizon {
                return Err(TranslateError::BeyondHorizon {
                    what: a.to_string(),
                    time: a.time,
                    horizon: self.horizon,
                });
            }
        }
        Ok(records.to_literals().into_iter().map(Rule::fact).collect())
    }

    /// Grounds `schematic` with `facts` as the extensional database and
    /// appends the result (plus `rules`) after the facts.
    fn assemble(
        &self,
        facts: Vec<Rule>,
        rules: Vec<Rule>,
        schematic: &[SchematicRule],
    ) -> Result<GroundProgram, TranslateError> {
        let signature = self.signature();
        let mut ext = Extensional::new(EXTENSIONAL_PREDICATES);
        ext.add_facts(&facts);
        let grounded = ground_with(schematic, &signature, (!self.raw).then_some(&ext))?;
        let mut all = facts;
        all.extend(rules);
        all.extend(grounded.rules);
        let program = GroundProgram::with_signature(signature, all)?;
        Ok(if self.raw { program } else { program.simplified() })
    }

    /// The laws alone: law facts plus impossibility constraints.
    pub fn alpha(&self) -> Result<GroundProgram, TranslateError> {
        self.assemble(self.law_facts(), vec![], &self.impossibility_constraints())
    }

    /// The domain-independent rules, ground over the horizon.
    pub fn pi(&self) -> Result<GroundProgram, TranslateError> {
        self.assemble(vec![], vec![], &pi_rules())
    }

    /// Laws, domain-independent rules and `records`, optionally with the
    /// awareness rules.
    pub fn history_program(&self, records: &Records, awareness: bool) -> Result<GroundProgram, TranslateError> {
        let mut facts = self.law_facts();
        facts.extend(self.record_facts(records)?);
        let rules = if awareness { self.awareness_rules() } else { vec![] };
        let mut schematic = pi_rules();
        schematic.extend(self.impossibility_constraints());
        self.assemble(facts, rules, &schematic)
    }

    /// The configuration program for history `history` and later
    /// observations `observations`.
    pub fn conf(&self, history: &Records, observations: &Records, awareness: bool) -> Result<GroundProgram, TranslateError> {
        self.history_program(&history.union(observations), awareness)
    }

    /// Facts and rules of a diagnostic module (without the configuration).
    pub fn module_rules(&self, params: &DiagnosticParams) -> Result<(Vec<Rule>, Vec<SchematicRule>), TranslateError> {
        params.validate()?;
        let n = params.current_time;
        let lower = match params.module {
            Module::D2 { window } => n.saturating_sub(window),
            _ => 0,
        };
        let mut facts: Vec<Rule> = self
            .sd
            .signature
            .exogenous_actions
            .iter()
            .map(|a| fact("x_act", [a.clone()]))
            .collect();
        let mut schematic = generator_rules(lower, n);
        if params.module == Module::D1 {
            facts.extend(self.impossibility_facts());
            schematic.extend(relevance_rules(n));
        }
        if let Some(k) = params.max_actions {
            schematic.extend(self.k_cut(k, n));
        }
        Ok((facts, schematic))
    }

    /// `:- k{o(a, n-1) : a exogenous}.`, rejecting guesses with at least
    /// `k` occurrences at the step before `n`. Nothing when `n` is 0.
    pub fn k_cut(&self, k: usize, n: usize) -> Option<SchematicRule> {
        let t = n.checked_sub(1)?;
        let literals = self
            .sd
            .signature
            .exogenous_actions
            .iter()
            .map(|a| lp("o", vec![Pattern::from_term(a), Pattern::Int(t as i64)]))
            .collect();
        Some(SchematicRule::new(HeadPattern::Count {
            check: CountCheck::AtLeast,
            bound: k,
            literals,
        }))
    }

    /// Configuration program plus diagnostic module.
    pub fn diagnostic(
        &self,
        history: &Records,
        observations: &Records,
        params: &DiagnosticParams,
        awareness: bool,
    ) -> Result<GroundProgram, TranslateError> {
        let (module_facts, module_rules) = self.module_rules(params)?;
        let mut facts = self.law_facts();
        facts.extend(self.record_facts(&history.union(observations))?);
        facts.extend(module_facts);
        let rules = if awareness { self.awareness_rules() } else { vec![] };
        let mut schematic = pi_rules();
        schematic.extend(self.impossibility_constraints());
        schematic.extend(module_rules);
        self.assemble(facts, rules, &schematic)
    }

    /// The direct encoding: one rule per law, inertia and consistency,
    /// the record rules and the records themselves.
    pub fn direct_rules(&self) -> Vec<SchematicRule> {
        let mut out = Vec::new();
        for law in &self.sd.laws {
            let mut r = match &law.kind {
                LawKind::Dynamic { head, .. } => SchematicRule::literal(h(lit_pattern(head), var("T'"))),
                LawKind::Static { head } => SchematicRule::literal(h(lit_pattern(head), var("T"))),
                LawKind::Impossibility { .. } => SchematicRule::constraint(),
            };
            for l in &law.preconditions {
                r = r.pos(h(lit_pattern(l), var("T")));
            }
            r = match &law.kind {
                LawKind::Dynamic { action, .. } => r
                    .pos(lp("o", vec![Pattern::from_term(action), var("T")]))
                    .var("T", "step")
                    .derive("T'", var("T").plus(1)),
                LawKind::Static { .. } => r.var("T", "time"),
                LawKind::Impossibility { action } => r
                    .pos(lp("o", vec![Pattern::from_term(action), var("T")]))
                    .var("T", "time"),
            };
            out.push(r);
        }
        let pi = pi_rules();
        out.push(pi[5].clone());
        out.push(pi[6].clone());
        out.extend(record_rules());
        out
    }

    /// The direct encoding of the description with `records`.
    pub fn direct_program(&self, records: &Records, awareness: bool) -> Result<GroundProgram, TranslateError> {
        let facts = self.record_facts(records)?;
        let rules = if awareness { self.awareness_rules() } else { vec![] };
        self.assemble(facts, rules, &self.direct_rules())
    }
}

fn prec_facts(d: &Term, pre: &[FluentLiteral]) -> Vec<Rule> {
    pre.iter()
        .enumerate()
        .map(|(i, l)| fact("prec", [d.clone(), int(i + 1), l.to_term()]))
        .chain(std::iter::once(fact("prec", [d.clone(), int(pre.len() + 1), Term::sym("nil")])))
        .collect()
}

/// `o(A,T) :- x_act(A), not -o(A,T).` and `-o(A,T) :- x_act(A), not o(A,T).`
/// for `lower <= T < n`.
pub fn generator_rules(lower: usize, n: usize) -> Vec<SchematicRule> {
    let o = lp("o", vec![var("A"), var("T")]);
    let window = |r: SchematicRule| {
        r.pos(lp("x_act", vec![var("A")]))
            .guard(Guard::new(var("T"), CompareOp::Ge, Pattern::Int(lower as i64)))
            .guard(Guard::new(var("T"), CompareOp::Lt, Pattern::Int(n as i64)))
            .var("A", "action")
            .var("T", "time")
    };
    vec![
        window(SchematicRule::literal(o.clone())).naf(o.clone().negated()),
        window(SchematicRule::literal(o.clone().negated())).naf(o),
    ]
}

/// Relevance of exogenous actions to the observations made at or after `n`.
///
/// `rel(A,L)`: action `A` may affect literal `L`. `relevant(A)`: `A` may
/// affect a later observation. Guessed occurrences of other actions are
/// rejected unless recorded.
pub fn relevance_rules(n: usize) -> Vec<SchematicRule> {
    let rel = |a: &str, l: Pattern| lp("rel", vec![var(a), l]);
    let through = |kind: &str| {
        SchematicRule::literal(rel("A", var("L")))
            .pos(lp(kind, vec![var("D")]))
            .pos(lp("head", vec![var("D"), var("L")]))
            .pos(lp("prec", vec![var("D"), var("N"), var("P")]))
            .pos(rel("A", var("P")))
            .var("D", "law")
            .var("L", "lit")
            .var("N", "index")
            .var("P", "lit")
            .var("A", "action")
    };
    vec![
        SchematicRule::literal(rel("A", var("L")))
            .pos(lp("d_law", vec![var("D")]))
            .pos(lp("head", vec![var("D"), var("L")]))
            .pos(lp("action", vec![var("D"), var("A")]))
            .var("D", "law")
            .var("L", "lit")
            .var("A", "action"),
        through("d_law"),
        through("s_law"),
        SchematicRule::literal(rel("A2", var("L")))
            .pos(rel("A1", var("L")))
            .pos(lp("imp", vec![var("D")]))
            .pos(lp("action", vec![var("D"), var("A1")]))
            .pos(lp("prec", vec![var("D"), var("N"), var("P")]))
            .pos(rel("A2", var("P").complement()))
            .var("D", "law")
            .var("A1", "action")
            .var("N", "index")
            .var("P", "lit")
            .var("L", "lit")
            .var("A2", "action"),
        SchematicRule::literal(lp("relevant", vec![var("A")]))
            .pos(lp("obs", vec![var("L"), var("T")]))
            .pos(rel("A", var("L")))
            .guard(Guard::new(var("T"), CompareOp::Ge, Pattern::Int(n as i64)))
            .var("L", "lit")
            .var("T", "time")
            .var("A", "action"),
        SchematicRule::constraint()
            .pos(lp("o", vec![var("A"), var("T")]))
            .pos(lp("x_act", vec![var("A")]))
            .naf(lp("hpd", vec![var("A"), var("T")]))
            .naf(lp("relevant", vec![var("A")]))
            .guard(Guard::new(var("T"), CompareOp::Lt, Pattern::Int(n as i64)))
            .var("A", "action")
            .var("T", "time"),
    ]
}

/// The trajectory an answer set defines: the state at `t` from the
/// `h(l, t)` literals and the action at `t` from the positive `o(a, t)`.
/// `None` when some state is not complete.
pub fn defined_trajectory(x: &AnswerSet, sd: &ActionDescription, horizon: usize) -> Option<Trajectory> {
    let mut states = vec![BTreeSet::new(); horizon + 1];
    let mut actions = vec![BTreeSet::new(); horizon];
    for l in x.literals().iter().filter(|l| !l.negative && l.args().len() == 2) {
        let Some(t) = l.args()[1].as_int().and_then(|t| usize::try_from(t).ok()) else {
            continue;
        };
        match l.predicate() {
            "h" if t <= horizon => {
                states[t].insert(FluentLiteral::from_term(&l.args()[0]));
            }
            "o" if t < horizon => {
                actions[t].insert(l.args()[0].clone());
            }
            _ => {}
        }
    }
    let complete = |s: &BTreeSet<FluentLiteral>| {
        sd.signature
            .fluents
            .iter()
            .all(|f| s.contains(&FluentLiteral::pos(f.clone())) || s.contains(&FluentLiteral::neg(f.clone())))
    };
    if !states.iter().all(complete) {
        return None;
    }
    Some(Trajectory {
        states: states.into_iter().map(State::from_literals).collect(),
        actions,
    })
}
