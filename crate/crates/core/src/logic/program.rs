//! Ground programs: rules, heads, signatures and answer sets.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::term::{write_joined, Literal, Term};
use super::LogicError;

/// How a counting constraint reads its bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CountCheck {
    /// `:- k{S}, body.` is violated when at least `k` members of `S` hold.
    AtLeast,
    /// `:- not k{S}, body.` is violated when fewer than `k` members hold.
    Below,
}

/// One element `p(t) : q1(t), ..., qk(t)` of a choice head.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ChoiceElement {
    pub atom: Literal,
    pub guard: Vec<Literal>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Head {
    Literal(Literal),
    /// The head of a constraint.
    Falsum,
    Choice {
        lower: Option<usize>,
        upper: Option<usize>,
        elements: Vec<ChoiceElement>,
    },
    Count {
        check: CountCheck,
        bound: usize,
        literals: Vec<Literal>,
    },
}

/// `head :- pos_1, ..., pos_m, not naf_1, ..., not naf_k.`
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rule {
    pub head: Head,
    pub pos: Vec<Literal>,
    pub naf: Vec<Literal>,
}

impl Rule {
    pub fn fact(head: Literal) -> Self {
        Rule {
            head: Head::Literal(head),
            pos: Vec::new(),
            naf: Vec::new(),
        }
    }

    pub fn normal(head: Literal, pos: Vec<Literal>, naf: Vec<Literal>) -> Self {
        Rule {
            head: Head::Literal(head),
            pos,
            naf,
        }
    }

    pub fn constraint(pos: Vec<Literal>, naf: Vec<Literal>) -> Self {
        Rule {
            head: Head::Falsum,
            pos,
            naf,
        }
    }

    pub fn head_literal(&self) -> Option<&Literal> {
        match &self.head {
            Head::Literal(l) => Some(l),
            _ => None,
        }
    }

    pub fn is_constraint(&self) -> bool {
        matches!(self.head, Head::Falsum | Head::Count { .. })
    }

    pub fn is_extended(&self) -> bool {
        matches!(self.head, Head::Choice { .. } | Head::Count { .. })
    }

    /// Every literal mentioned anywhere in the rule.
    pub fn literals(&self) -> impl Iterator<Item = &Literal> {
        let head: Vec<&Literal> = match &self.head {
            Head::Literal(l) => vec![l],
            Head::Falsum => vec![],
            Head::Choice { elements, .. } => elements
                .iter()
                .flat_map(|e| std::iter::once(&e.atom).chain(e.guard.iter()))
                .collect(),
            Head::Count { literals, .. } => literals.iter().collect(),
        };
        head.into_iter().chain(self.pos.iter()).chain(self.naf.iter())
    }

    /// Positive body holds and no default-negated literal is in `x`.
    pub fn body_satisfied_by(&self, x: &BTreeSet<Literal>) -> bool {
        self.pos.iter().all(|l| x.contains(l)) && self.naf.iter().all(|l| !x.contains(l))
    }
}

fn write_body(f: &mut fmt::Formatter<'_>, first: bool, rule: &Rule) -> fmt::Result {
    let mut first = first;
    for l in &rule.pos {
        f.write_str(if first { "" } else { ", " })?;
        write!(f, "{l}")?;
        first = false;
    }
    for l in &rule.naf {
        f.write_str(if first { "" } else { ", " })?;
        write!(f, "not {l}")?;
        first = false;
    }
    Ok(())
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let has_body = !self.pos.is_empty() || !self.naf.is_empty();
        match &self.head {
            Head::Literal(l) => write!(f, "{l}")?,
            Head::Falsum => {}
            Head::Choice {
                lower,
                upper,
                elements,
            } => {
                if let Some(lo) = lower {
                    write!(f, "{lo}")?;
                }
                f.write_str("{")?;
                for (i, e) in elements.iter().enumerate() {
                    if i > 0 {
                        f.write_str("; ")?;
                    }
                    write!(f, "{}", e.atom)?;
                    if !e.guard.is_empty() {
                        f.write_str(" : ")?;
                        write_joined(f, &e.guard, ", ")?;
                    }
                }
                f.write_str("}")?;
                if let Some(hi) = upper {
                    write!(f, "{hi}")?;
                }
            }
            Head::Count {
                check,
                bound,
                literals,
            } => {
                f.write_str(":- ")?;
                if *check == CountCheck::Below {
                    f.write_str("not ")?;
                }
                write!(f, "{bound}{{")?;
                write_joined(f, literals, ", ")?;
                f.write_str("}")?;
                write_body(f, false, self)?;
                return f.write_str(".");
            }
        }
        if matches!(self.head, Head::Falsum) {
            f.write_str(":- ")?;
            write_body(f, true, self)?;
        } else if has_body {
            f.write_str(" :- ")?;
            write_body(f, true, self)?;
        }
        f.write_str(".")
    }
}

/// Sorts (named finite sets of ground terms) and predicate declarations.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Signature {
    pub sorts: BTreeMap<String, BTreeSet<Term>>,
    pub predicates: BTreeMap<String, usize>,
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_sort(mut self, name: &str, members: impl IntoIterator<Item = Term>) -> Self {
        self.add_sort(name, members);
        self
    }

    pub fn add_sort(&mut self, name: &str, members: impl IntoIterator<Item = Term>) {
        self.sorts
            .entry(name.to_string())
            .or_default()
            .extend(members);
    }

    pub fn sort(&self, name: &str) -> Option<&BTreeSet<Term>> {
        self.sorts.get(name)
    }

    /// Declares `predicate/arity`, rejecting a conflicting earlier declaration.
    pub fn declare(&mut self, predicate: &str, arity: usize) -> Result<(), LogicError> {
        match self.predicates.get(predicate) {
            Some(&a) if a != arity => Err(LogicError::Arity {
                predicate: predicate.to_string(),
                declared: a,
                found: arity,
            }),
            Some(_) => Ok(()),
            None => {
                self.predicates.insert(predicate.to_string(), arity);
                Ok(())
            }
        }
    }
}

/// A ground A-Prolog program together with its signature.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GroundProgram {
    pub signature: Signature,
    pub rules: Vec<Rule>,
}

impl GroundProgram {
    /// Builds a program, declaring every predicate it uses.
    ///
    /// Fails when the same predicate name is used with two arities.
    pub fn new(rules: Vec<Rule>) -> Result<Self, LogicError> {
        Self::with_signature(Signature::new(), rules)
    }

    pub fn with_signature(mut signature: Signature, rules: Vec<Rule>) -> Result<Self, LogicError> {
        for rule in &rules {
            for l in rule.literals() {
                signature.declare(l.predicate(), l.atom.arity())?;
            }
        }
        Ok(GroundProgram { signature, rules })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Appends the rules of `other`, merging signatures.
    pub fn extend(&mut self, other: GroundProgram) -> Result<(), LogicError> {
        for (name, members) in other.signature.sorts {
            self.signature.add_sort(&name, members);
        }
        for (p, a) in other.signature.predicates {
            self.signature.declare(&p, a)?;
        }
        self.rules.extend(other.rules);
        Ok(())
    }

    pub fn push(&mut self, rule: Rule) -> Result<(), LogicError> {
        for l in rule.literals() {
            self.signature.declare(l.predicate(), l.atom.arity())?;
        }
        self.rules.push(rule);
        Ok(())
    }

    /// `lit(P)`: every atom occurring in the program together with its negation.
    pub fn literals(&self) -> BTreeSet<Literal> {
        let mut out = BTreeSet::new();
        for rule in &self.rules {
            for l in rule.literals() {
                out.insert(Literal::pos(l.atom.clone()));
                out.insert(Literal::neg(l.atom.clone()));
            }
        }
        out
    }

    /// Literals that occur in the program text (without adding complements).
    pub fn occurring_literals(&self) -> BTreeSet<Literal> {
        self.rules
            .iter()
            .flat_map(|r| r.literals().cloned())
            .collect()
    }

    pub fn has_extended_rules(&self) -> bool {
        self.rules.iter().any(Rule::is_extended)
    }

    /// No `not` in any body and no choice head, which hides one.
    pub fn is_naf_free(&self) -> bool {
        self.rules
            .iter()
            .all(|r| r.naf.is_empty() && !matches!(r.head, Head::Choice { .. }))
    }

    /// Drops rules that can never fire because some positive body literal
    /// has no rule able to derive it. Repeats until nothing changes.
    ///
    /// Answer sets are unaffected: an underivable literal belongs to no
    /// answer set, so such a rule is never applicable.
    pub fn simplified(&self) -> GroundProgram {
        let mut keep = vec![true; self.rules.len()];
        loop {
            let mut derivable: BTreeSet<&Literal> = BTreeSet::new();
            for (rule, _) in self.rules.iter().zip(&keep).filter(|(_, k)| **k) {
                match &rule.head {
                    Head::Literal(l) => {
                        derivable.insert(l);
                    }
                    Head::Choice { elements, .. } => {
                        for e in elements {
                            derivable.insert(&e.atom);
                        }
                    }
                    _ => {}
                }
            }
            let mut changed = false;
            for (rule, k) in self.rules.iter().zip(keep.iter_mut()) {
                if *k && rule.pos.iter().any(|l| !derivable.contains(l)) {
                    *k = false;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let rules = self
            .rules
            .iter()
            .zip(&keep)
            .filter(|(_, k)| **k)
            .map(|(r, _)| r.clone())
            .collect();
        GroundProgram {
            signature: self.signature.clone(),
            rules,
        }
    }
}

impl fmt::Display for GroundProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for rule in &self.rules {
            writeln!(f, "{rule}")?;
        }
        Ok(())
    }
}

/// A consistent set of ground literals produced by a solver.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AnswerSet(pub BTreeSet<Literal>);

impl AnswerSet {
    pub fn literals(&self) -> &BTreeSet<Literal> {
        &self.0
    }

    pub fn contains(&self, l: &Literal) -> bool {
        self.0.contains(l)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_consistent(&self) -> bool {
        is_consistent(&self.0)
    }

    /// Literals whose predicate is one of `predicates`.
    pub fn project(&self, predicates: &[&str]) -> BTreeSet<Literal> {
        self.0
            .iter()
            .filter(|l| predicates.contains(&l.predicate()))
            .cloned()
            .collect()
    }

    pub fn with_predicate<'a>(&'a self, predicate: &'a str) -> impl Iterator<Item = &'a Literal> {
        self.0.iter().filter(move |l| l.predicate() == predicate)
    }
}

impl fmt::Display for AnswerSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{l}")?;
        }
        f.write_str("}")
    }
}

pub fn is_consistent(x: &BTreeSet<Literal>) -> bool {
    x.iter().all(|l| l.negative || !x.contains(&l.complement()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(p: &str) -> Literal {
        Literal::atom(p, [])
    }

    #[test]
    fn rule_display() {
        let r = Rule::normal(a("p"), vec![a("q")], vec![a("r").complement()]);
        assert_eq!(r.to_string(), "p :- q, not -r.");
        assert_eq!(Rule::fact(a("p")).to_string(), "p.");
        assert_eq!(Rule::constraint(vec![a("p")], vec![]).to_string(), ":- p.");
        let c = Rule {
            head: Head::Count {
                check: CountCheck::AtLeast,
                bound: 2,
                literals: vec![a("x"), a("y")],
            },
            pos: vec![a("z")],
            naf: vec![],
        };
        assert_eq!(c.to_string(), ":- 2{x, y}, z.");
    }

    #[test]
    fn arity_conflict_is_rejected() {
        let rules = vec![
            Rule::fact(Literal::atom("p", [Term::int(1)])),
            Rule::fact(a("p")),
        ];
        assert!(matches!(
            GroundProgram::new(rules),
            Err(LogicError::Arity { .. })
        ));
    }

    #[test]
    fn simplification_drops_dead_rules() {
        let p = GroundProgram::new(vec![
            Rule::fact(a("q")),
            Rule::normal(a("p"), vec![a("q")], vec![]),
            Rule::normal(a("r"), vec![a("missing")], vec![]),
            Rule::normal(a("s"), vec![a("r")], vec![]),
        ])
        .unwrap();
        let s = p.simplified();
        assert_eq!(s.rules.len(), 2);
    }
}
