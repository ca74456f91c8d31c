//! Action descriptions: signatures, causal laws and recorded histories.

mod semantics;

use std::collections::BTreeSet;
use std::fmt;

use crate::logic::{self, GroundProgram, Literal, LogicError, Term};

pub use semantics::{is_sound_history, State, Trajectory, MAX_ENUMERATED_FLUENTS};

#[derive(Debug, thiserror::Error)]
pub enum ActionError {
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error("system description must not use default negation (rule: {0})")]
    DefaultNegation(String),
    #[error("{law}: undeclared fluent {fluent}")]
    UndeclaredFluent { law: String, fluent: Term },
    #[error("{law}: undeclared action {action}")]
    UndeclaredAction { law: String, action: Term },
    #[error("{law}: {message}")]
    MalformedLaw { law: String, message: String },
    #[error("duplicate law name {0}")]
    DuplicateLaw(String),
    #[error("{0} is declared in two disjoint categories")]
    Overlap(Term),
    #[error("unknown action {0}")]
    UnknownAction(Term),
    #[error("unknown fluent {0}")]
    UnknownFluent(Term),
    #[error("{count} fluents exceed the state enumeration limit of {cap}")]
    TooManyFluents { count: usize, cap: usize },
    #[error("history has no models")]
    InconsistentHistory,
    #[error("{0}")]
    History(String),
}

/// A fluent or its negation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FluentLiteral {
    pub fluent: Term,
    pub positive: bool,
}

impl FluentLiteral {
    pub fn pos(fluent: Term) -> Self {
        FluentLiteral {
            fluent,
            positive: true,
        }
    }

    pub fn neg(fluent: Term) -> Self {
        FluentLiteral {
            fluent,
            positive: false,
        }
    }

    pub fn complement(&self) -> Self {
        FluentLiteral {
            fluent: self.fluent.clone(),
            positive: !self.positive,
        }
    }

    /// The term encoding used inside programs: `f` or `neg(f)`.
    pub fn to_term(&self) -> Term {
        if self.positive {
            self.fluent.clone()
        } else {
            Term::neg(self.fluent.clone())
        }
    }

    pub fn from_term(t: &Term) -> Self {
        match t {
            Term::Func(name, args) if name == "neg" && args.len() == 1 => {
                FluentLiteral::neg(args[0].clone())
            }
            other => FluentLiteral::pos(other.clone()),
        }
    }
}

impl fmt::Display for FluentLiteral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.positive {
            f.write_str("-")?;
        }
        write!(f, "{}", self.fluent)
    }
}

/// `ab(c)`, the fluent saying component `c` is faulty.
pub fn ab(component: &Term) -> Term {
    Term::func("ab", [component.clone()])
}

/// `repair(c)`, the agent action fixing component `c`.
pub fn repair(component: &Term) -> Term {
    Term::func("repair", [component.clone()])
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DomainSignature {
    pub components: BTreeSet<Term>,
    pub fluents: BTreeSet<Term>,
    pub observable: BTreeSet<Term>,
    pub agent_actions: BTreeSet<Term>,
    pub exogenous_actions: BTreeSet<Term>,
}

impl DomainSignature {
    pub fn actions(&self) -> impl Iterator<Item = &Term> {
        self.agent_actions.iter().chain(self.exogenous_actions.iter())
    }

    pub fn is_action(&self, a: &Term) -> bool {
        self.agent_actions.contains(a) || self.exogenous_actions.contains(a)
    }

    /// Every fluent literal of the signature, positive before negative.
    pub fn literals(&self) -> Vec<FluentLiteral> {
        self.fluents
            .iter()
            .flat_map(|f| [FluentLiteral::pos(f.clone()), FluentLiteral::neg(f.clone())])
            .collect()
    }

    /// Adds `ab(c)` to the fluents and the observable fluents of each component.
    fn complete(&mut self) {
        for c in &self.components {
            self.fluents.insert(ab(c));
            self.observable.insert(ab(c));
        }
    }

    fn check_disjoint(&self) -> Result<(), ActionError> {
        let groups: [&BTreeSet<Term>; 4] = [
            &self.components,
            &self.fluents,
            &self.agent_actions,
            &self.exogenous_actions,
        ];
        for (i, a) in groups.iter().enumerate() {
            for b in &groups[i + 1..] {
                if let Some(t) = a.intersection(b).next() {
                    return Err(ActionError::Overlap(t.clone()));
                }
            }
        }
        if let Some(f) = self.observable.iter().find(|f| !self.fluents.contains(f)) {
            return Err(ActionError::UnknownFluent(f.clone()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum LawKind {
    /// `causes(action, head, preconditions)`
    Dynamic { action: Term, head: FluentLiteral },
    /// `caused(head, preconditions)`
    Static { head: FluentLiteral },
    /// `impossible_if(action, preconditions)`
    Impossibility { action: Term },
}

/// Which part of the description a law belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LawPart {
    Normal,
    Breakage,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Law {
    pub name: String,
    pub kind: LawKind,
    pub preconditions: Vec<FluentLiteral>,
}

impl Law {
    pub fn action(&self) -> Option<&Term> {
        match &self.kind {
            LawKind::Dynamic { action, .. } | LawKind::Impossibility { action } => Some(action),
            LawKind::Static { .. } => None,
        }
    }

    pub fn head(&self) -> Option<&FluentLiteral> {
        match &self.kind {
            LawKind::Dynamic { head, .. } | LawKind::Static { head } => Some(head),
            LawKind::Impossibility { .. } => None,
        }
    }

    fn literals(&self) -> impl Iterator<Item = &FluentLiteral> {
        self.head().into_iter().chain(self.preconditions.iter())
    }

    /// The law as an A-Prolog fact.
    pub fn to_literal(&self) -> Literal {
        let pre = Term::List(self.preconditions.iter().map(FluentLiteral::to_term).collect());
        match &self.kind {
            LawKind::Dynamic { action, head } => {
                Literal::atom("causes", [action.clone(), head.to_term(), pre])
            }
            LawKind::Static { head } => Literal::atom("caused", [head.to_term(), pre]),
            LawKind::Impossibility { action } => {
                Literal::atom("impossible_if", [action.clone(), pre])
            }
        }
    }
}

impl fmt::Display for Law {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pre: Vec<String> = self.preconditions.iter().map(|l| l.to_string()).collect();
        let pre = pre.join(", ");
        match &self.kind {
            LawKind::Dynamic { action, head } => write!(f, "causes({action}, {head}, [{pre}])"),
            LawKind::Static { head } => write!(f, "caused({head}, [{pre}])"),
            LawKind::Impossibility { action } => write!(f, "impossible_if({action}, [{pre}])"),
        }
    }
}

/// A system description: signature plus causal laws.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionDescription {
    pub signature: DomainSignature,
    pub laws: Vec<Law>,
}

impl ActionDescription {
    /// Validates the laws against the signature. `ab(c)` is added to the
    /// fluents and observable fluents for every component.
    pub fn new(mut signature: DomainSignature, laws: Vec<Law>) -> Result<Self, ActionError> {
        signature.complete();
        signature.check_disjoint()?;
        let mut names = BTreeSet::new();
        for law in &laws {
            if !names.insert(law.name.clone()) {
                return Err(ActionError::DuplicateLaw(law.name.clone()));
            }
            for l in law.literals() {
                if !signature.fluents.contains(&l.fluent) {
                    return Err(ActionError::UndeclaredFluent {
                        law: law.name.clone(),
                        fluent: l.fluent.clone(),
                    });
                }
            }
            if let Some(a) = law.action() {
                if !signature.is_action(a) {
                    return Err(ActionError::UndeclaredAction {
                        law: law.name.clone(),
                        action: a.clone(),
                    });
                }
            }
        }
        Ok(ActionDescription { signature, laws })
    }

    /// Reads a system description from A-Prolog text.
    ///
    /// The text must be free of default negation. Its least model supplies
    /// the declarations `comp/1`, `fluent/1`, `observable/1`, `a_act/1`,
    /// `x_act/1` and the laws `causes/3`, `caused/2`, `impossible_if/2`.
    /// Laws are named `law_1`, `law_2`, ... in the order their rules appear.
    /// Other predicates are helpers and are ignored.
    ///
    /// ```
    /// use aldiag::action::ActionDescription;
    ///
    /// let sd = ActionDescription::parse("
    ///     fluent(on). a_act(flip).
    ///     causes(flip, on, [-on]).
    ///     causes(flip, -on, [on]).
    /// ").unwrap();
    /// assert_eq!(sd.laws.len(), 2);
    /// assert_eq!(sd.laws[1].name, "law_2");
    /// ```
    pub fn parse(src: &str) -> Result<Self, ActionError> {
        let program = logic::parse_program(src)?;
        Self::from_program(&program)
    }

    pub fn from_program(program: &GroundProgram) -> Result<Self, ActionError> {
        if let Some(r) = program.rules.iter().find(|r| !r.naf.is_empty() || r.is_extended()) {
            return Err(ActionError::DefaultNegation(r.to_string()));
        }
        let model = logic::least_model(program);
        let mut signature = DomainSignature::default();
        let mut declared_observable = BTreeSet::new();
        for l in model.iter().filter(|l| !l.negative && l.args().len() == 1) {
            let t = l.args()[0].clone();
            match l.predicate() {
                "comp" => {
                    signature.components.insert(t);
                }
                "fluent" => {
                    signature.fluents.insert(t);
                }
                "observable" => {
                    declared_observable.insert(t);
                }
                "a_act" => {
                    signature.agent_actions.insert(t);
                }
                "x_act" => {
                    signature.exogenous_actions.insert(t);
                }
                _ => {}
            }
        }
        signature.observable = if declared_observable.is_empty() {
            signature.fluents.clone()
        } else {
            declared_observable
        };
        let mut seen = BTreeSet::new();
        let mut laws = Vec::new();
        for rule in &program.rules {
            let Some(head) = rule.head_literal() else { continue };
            if head.negative || !model.contains(head) || !seen.insert(head.clone()) {
                continue;
            }
            let name = format!("law_{}", laws.len() + 1);
            if let Some(law) = law_from_literal(name, head)? {
                laws.push(law);
            }
        }
        Self::new(signature, laws)
    }

    /// Adds agent actions `repair(c)` with laws `causes(repair(c), -ab(c), [])`.
    pub fn with_repair_actions(&self) -> Self {
        let mut sd = self.clone();
        for c in &self.signature.components {
            let action = repair(c);
            if sd.signature.agent_actions.insert(action.clone()) {
                let name = format!("law_{}", sd.laws.len() + 1);
                sd.laws.push(Law {
                    name,
                    kind: LawKind::Dynamic {
                        action,
                        head: FluentLiteral::neg(ab(c)),
                    },
                    preconditions: Vec::new(),
                });
            }
        }
        sd
    }

    pub fn law(&self, name: &str) -> Option<&Law> {
        self.laws.iter().find(|l| l.name == name)
    }

    /// Normal-behaviour or breakage part.
    ///
    /// A law is in the breakage part when its action is exogenous, or when it
    /// makes a component faulty, or when it fires on a faulty component.
    pub fn part(&self, law: &Law) -> LawPart {
        let exogenous = law
            .action()
            .is_some_and(|a| self.signature.exogenous_actions.contains(a));
        let is_ab = |l: &FluentLiteral| l.positive && l.fluent.functor() == Some("ab");
        if exogenous || law.head().is_some_and(is_ab) || law.preconditions.iter().any(is_ab) {
            LawPart::Breakage
        } else {
            LawPart::Normal
        }
    }

    /// Canonical text form; [`ActionDescription::parse`] reads it back.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let sig = &self.signature;
        for c in &sig.components {
            out.push_str(&format!("comp({c}).\n"));
        }
        for f in &sig.fluents {
            out.push_str(&format!("fluent({f}).\n"));
        }
        if sig.observable != sig.fluents {
            for f in &sig.observable {
                out.push_str(&format!("observable({f}).\n"));
            }
        }
        for a in &sig.agent_actions {
            out.push_str(&format!("a_act({a}).\n"));
        }
        for a in &sig.exogenous_actions {
            out.push_str(&format!("x_act({a}).\n"));
        }
        for law in &self.laws {
            out.push_str(&format!("{law}.\n"));
        }
        out
    }
}

fn law_from_literal(name: String, l: &Literal) -> Result<Option<Law>, ActionError> {
    let malformed = |m: &str| ActionError::MalformedLaw {
        law: name.clone(),
        message: format!("{m} in {l}"),
    };
    let list = |t: &Term| -> Result<Vec<FluentLiteral>, ActionError> {
        match t {
            Term::List(items) => Ok(items.iter().map(FluentLiteral::from_term).collect()),
            _ => Err(malformed("preconditions must be a list")),
        }
    };
    let args = l.args();
    let (kind, pre) = match (l.predicate(), args.len()) {
        ("causes", 3) => (
            LawKind::Dynamic {
                action: args[0].clone(),
                head: FluentLiteral::from_term(&args[1]),
            },
            list(&args[2])?,
        ),
        ("caused", 2) => (
            LawKind::Static {
                head: FluentLiteral::from_term(&args[0]),
            },
            list(&args[1])?,
        ),
        ("impossible_if", 2) => (
            LawKind::Impossibility {
                action: args[0].clone(),
            },
            list(&args[1])?,
        ),
        ("causes" | "caused" | "impossible_if", _) => return Err(malformed("wrong number of arguments")),
        _ => return Ok(None),
    };
    Ok(Some(Law {
        name,
        kind,
        preconditions: pre,
    }))
}

/// `obs(l, t)`
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Observation {
    pub time: usize,
    pub literal: FluentLiteral,
}

/// `hpd(a, t)`
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Occurrence {
    pub time: usize,
    pub action: Term,
}

impl Observation {
    pub fn new(literal: FluentLiteral, time: usize) -> Self {
        Observation { time, literal }
    }

    pub fn to_literal(&self) -> Literal {
        Literal::atom("obs", [self.literal.to_term(), Term::Int(self.time as i64)])
    }
}

impl Occurrence {
    pub fn new(action: Term, time: usize) -> Self {
        Occurrence { time, action }
    }

    pub fn to_literal(&self) -> Literal {
        Literal::atom("hpd", [self.action.clone(), Term::Int(self.time as i64)])
    }
}

impl fmt::Display for Observation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "obs({}, {})", self.literal, self.time)
    }
}

impl fmt::Display for Occurrence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "hpd({}, {})", self.action, self.time)
    }
}

/// A set of `obs` and `hpd` records.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Records {
    pub observations: BTreeSet<Observation>,
    pub occurrences: BTreeSet<Occurrence>,
}

impl Records {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn obs(mut self, literal: FluentLiteral, time: usize) -> Self {
        self.observations.insert(Observation::new(literal, time));
        self
    }

    pub fn hpd(mut self, action: Term, time: usize) -> Self {
        self.occurrences.insert(Occurrence::new(action, time));
        self
    }

    pub fn union(&self, other: &Records) -> Records {
        Records {
            observations: self.observations.union(&other.observations).cloned().collect(),
            occurrences: self.occurrences.union(&other.occurrences).cloned().collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty() && self.occurrences.is_empty()
    }

    /// Latest time mentioned; occurrences at `t` count as `t + 1`.
    pub fn extent(&self) -> usize {
        let o = self.observations.iter().map(|o| o.time).max().unwrap_or(0);
        let h = self.occurrences.iter().map(|h| h.time + 1).max().unwrap_or(0);
        o.max(h)
    }

    /// The elementary actions recorded at `t`.
    pub fn actions_at(&self, t: usize) -> BTreeSet<Term> {
        self.occurrences
            .iter()
            .filter(|o| o.time == t)
            .map(|o| o.action.clone())
            .collect()
    }

    /// The records as facts, observations first.
    pub fn to_literals(&self) -> Vec<Literal> {
        self.observations
            .iter()
            .map(Observation::to_literal)
            .chain(self.occurrences.iter().map(Occurrence::to_literal))
            .collect()
    }

    /// One fact per line.
    pub fn to_text(&self) -> String {
        self.to_literals().iter().map(|l| format!("{l}.\n")).collect()
    }

    /// Reads `obs/2` and `hpd/2` facts; other statements are rejected.
    pub fn parse(src: &str) -> Result<Records, ActionError> {
        let program = logic::parse_program(src)?;
        let mut out = Records::new();
        for rule in &program.rules {
            let fact = rule
                .head_literal()
                .filter(|_| rule.pos.is_empty() && rule.naf.is_empty())
                .filter(|l| !l.negative && l.args().len() == 2);
            let Some(l) = fact else {
                return Err(ActionError::History(format!("expected an obs or hpd fact, found {rule}")));
            };
            let time = l.args()[1]
                .as_int()
                .and_then(|t| usize::try_from(t).ok())
                .ok_or_else(|| ActionError::History(format!("bad time in {l}")))?;
            match l.predicate() {
                "obs" => {
                    out.observations
                        .insert(Observation::new(FluentLiteral::from_term(&l.args()[0]), time));
                }
                "hpd" => {
                    out.occurrences.insert(Occurrence::new(l.args()[0].clone(), time));
                }
                _ => return Err(ActionError::History(format!("expected an obs or hpd fact, found {rule}"))),
            }
        }
        Ok(out)
    }
}

/// Observations up to `horizon` and occurrences strictly before it.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RecordedHistory {
    pub horizon: usize,
    pub records: Records,
}

impl RecordedHistory {
    pub fn new(horizon: usize, records: Records) -> Result<Self, ActionError> {
        if let Some(o) = records.observations.iter().find(|o| o.time > horizon) {
            return Err(ActionError::History(format!("{o} lies after the horizon {horizon}")));
        }
        if let Some(h) = records.occurrences.iter().find(|h| h.time >= horizon) {
            return Err(ActionError::History(format!("{h} is not before the horizon {horizon}")));
        }
        Ok(RecordedHistory { horizon, records })
    }

    /// Whether every fluent has an observation at time 0.
    pub fn initially_complete(&self, sd: &ActionDescription) -> bool {
        sd.signature.fluents.iter().all(|f| {
            self.records
                .observations
                .iter()
                .any(|o| o.time == 0 && o.literal.fluent == *f)
        })
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) const AC: &str = "
        comp(r). comp(b). switch(s1). switch(s2).
        fluent(active(r)). fluent(on(b)). fluent(prot(b)).
        fluent(closed(SW)) :- switch(SW).
        fluent(ab(X)) :- comp(X).
        a_act(close(s1)).
        x_act(brk). x_act(srg).
        causes(close(s1), closed(s1), []).
        caused(active(r), [closed(s1), -ab(r)]).
        caused(closed(s2), [active(r)]).
        caused(on(b), [closed(s2), -ab(b)]).
        caused(-on(b), [-closed(s2)]).
        impossible_if(close(s1), [closed(s1)]).
        causes(brk, ab(b), []).
        causes(srg, ab(r), []).
        causes(srg, ab(b), [-prot(b)]).
        caused(-on(b), [ab(b)]).
        caused(-active(r), [ab(r)]).
    ";

    #[test]
    fn parses_the_circuit() {
        let sd = ActionDescription::parse(AC).unwrap();
        assert_eq!(sd.signature.fluents.len(), 7);
        assert_eq!(sd.laws.len(), 11);
        assert_eq!(sd.laws[0].to_string(), "causes(close(s1), closed(s1), [])");
        assert_eq!(sd.laws[3].to_string(), "caused(on(b), [closed(s2), -ab(b)])");
        assert_eq!(sd.part(&sd.laws[0]), LawPart::Normal);
        assert_eq!(sd.part(&sd.laws[6]), LawPart::Breakage);
        assert_eq!(sd.part(&sd.laws[9]), LawPart::Breakage);
        assert!(sd.signature.observable.contains(&ab(&Term::sym("r"))));
    }

    #[test]
    fn text_round_trip() {
        let sd = ActionDescription::parse(AC).unwrap();
        assert_eq!(ActionDescription::parse(&sd.to_text()).unwrap(), sd);
    }

    #[test]
    fn undeclared_symbols_name_the_law() {
        let e = ActionDescription::parse("fluent(f). a_act(a). causes(a, g, []).").unwrap_err();
        assert_eq!(e.to_string(), "law_1: undeclared fluent g");
        let e = ActionDescription::parse("fluent(f). causes(a, f, []).").unwrap_err();
        assert_eq!(e.to_string(), "law_1: undeclared action a");
    }

    #[test]
    fn default_negation_is_rejected() {
        assert!(matches!(
            ActionDescription::parse("fluent(f). p :- not q."),
            Err(ActionError::DefaultNegation(_))
        ));
    }

    #[test]
    fn repair_laws() {
        let sd = ActionDescription::parse(AC).unwrap().with_repair_actions();
        assert_eq!(sd.laws.len(), 13);
        assert_eq!(sd.laws[11].to_string(), "causes(repair(b), -ab(b), [])");
        assert_eq!(sd.with_repair_actions(), sd);
    }

    #[test]
    fn history_bounds() {
        let r = Records::new().hpd(Term::sym("a"), 1);
        assert!(RecordedHistory::new(1, r.clone()).is_err());
        assert!(RecordedHistory::new(2, r).is_ok());
        let r = Records::parse("obs(-on(b), 1). hpd(close(s1), 0).").unwrap();
        assert_eq!(r.to_text(), "obs(neg(on(b)),1).\nhpd(close(s1),0).\n");
        assert_eq!(Records::parse(&r.to_text()).unwrap(), r);
    }
}
