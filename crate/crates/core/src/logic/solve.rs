//! Answer-set semantics: reduct, checking and enumeration.
//!
//! Two engines are provided. [`Engine::Brute`] guesses the default-negated
//! literals and checks each guess against the least model of the reduct; it
//! is the reference implementation. [`Engine::Search`] is a backtracking
//! search with propagation (forward chaining, support, backward
//! falsification, strong-negation pairs, counting constraints and an
//! unfounded-set check), verifying every leaf with the same check.

use std::collections::{BTreeSet, HashMap};

use super::program::{
    is_consistent, AnswerSet, ChoiceElement, CountCheck, GroundProgram, Head, Rule,
};
use super::term::Literal;
use super::LogicError;

/// Largest number of guessed literals the brute-force engine accepts.
pub const BRUTE_FORCE_CAP: usize = 24;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Engine {
    Brute,
    #[default]
    Search,
}

impl std::fmt::Display for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Engine::Brute => "brute",
            Engine::Search => "search",
        })
    }
}

impl std::str::FromStr for Engine {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "brute" => Ok(Engine::Brute),
            "search" => Ok(Engine::Search),
            other => Err(format!("unknown engine {other:?} (expected brute or search)")),
        }
    }
}

/// A program without choice rules, plus the companion literals introduced
/// for choices that are not part of the original vocabulary.
#[derive(Debug, Clone)]
pub struct Expanded {
    pub program: GroundProgram,
    pub hidden: BTreeSet<Literal>,
}

/// Rewrites choice rules into pairs of normal rules and bound constraints.
///
/// `lo{e_1 ; ... ; e_k}hi :- body.` becomes, for each element `p : g`,
/// `p :- body, g, not p'.` and `p' :- body, g, not p.` where `p'` is the
/// strong negation of `p`. When `p'` does not occur elsewhere it is a hidden
/// helper and is dropped from reported answer sets. Bounds become counting
/// constraints over the element atoms.
pub fn expand_extended_rules(p: &GroundProgram) -> Expanded {
    let occurring: BTreeSet<Literal> = p
        .rules
        .iter()
        .filter(|r| !matches!(r.head, Head::Choice { .. }))
        .flat_map(|r| r.literals().cloned())
        .chain(p.rules.iter().flat_map(|r| match &r.head {
            Head::Choice { elements, .. } => elements
                .iter()
                .flat_map(|e| e.guard.iter().cloned())
                .chain(r.pos.iter().cloned())
                .chain(r.naf.iter().cloned())
                .collect::<Vec<_>>(),
            _ => Vec::new(),
        }))
        .collect();
    let mut hidden = BTreeSet::new();
    let mut rules = Vec::with_capacity(p.rules.len());
    for rule in &p.rules {
        let Head::Choice {
            lower,
            upper,
            elements,
        } = &rule.head
        else {
            rules.push(rule.clone());
            continue;
        };
        let atoms: Vec<Literal> = elements.iter().map(|e| e.atom.clone()).collect();
        for ChoiceElement { atom, guard } in elements {
            let other = atom.complement();
            if !occurring.contains(&other) {
                hidden.insert(other.clone());
            }
            let mut pos = rule.pos.clone();
            pos.extend(guard.iter().cloned());
            let mut naf_a = rule.naf.clone();
            naf_a.push(other.clone());
            let mut naf_b = rule.naf.clone();
            naf_b.push(atom.clone());
            rules.push(Rule::normal(atom.clone(), pos.clone(), naf_a));
            rules.push(Rule::normal(other, pos, naf_b));
        }
        if let Some(lo) = lower {
            rules.push(Rule {
                head: Head::Count {
                    check: CountCheck::Below,
                    bound: *lo,
                    literals: atoms.clone(),
                },
                pos: rule.pos.clone(),
                naf: rule.naf.clone(),
            });
        }
        if let Some(hi) = upper {
            rules.push(Rule {
                head: Head::Count {
                    check: CountCheck::AtLeast,
                    bound: hi + 1,
                    literals: atoms,
                },
                pos: rule.pos.clone(),
                naf: rule.naf.clone(),
            });
        }
    }
    Expanded {
        program: GroundProgram {
            signature: p.signature.clone(),
            rules,
        },
        hidden,
    }
}

/// The Gelfond-Lifschitz reduct of `p` with respect to `x`.
///
/// Choice rules are expanded first. Rules whose default-negated part meets
/// `x` are dropped; the rest lose their default-negated part.
pub fn reduct(p: &GroundProgram, x: &BTreeSet<Literal>) -> GroundProgram {
    let expanded = expand_extended_rules(p).program;
    let rules = expanded
        .rules
        .into_iter()
        .filter(|r| r.naf.iter().all(|l| !x.contains(l)))
        .map(|mut r| {
            r.naf.clear();
            r
        })
        .collect();
    GroundProgram {
        signature: expanded.signature,
        rules,
    }
}

/// The least set of literals closed under the normal rules of a naf-free
/// program. Constraints are ignored; the result may be inconsistent.
pub fn least_model(p: &GroundProgram) -> BTreeSet<Literal> {
    let c = Compiled::new(p);
    let m = c.least_model(|_| true);
    c.to_set(&m)
}

/// Whether `x` is an answer set of `p`.
///
/// Fails with [`LogicError::InconsistentCandidate`] for inconsistent `x`.
pub fn is_answer_set(p: &GroundProgram, x: &BTreeSet<Literal>) -> Result<bool, LogicError> {
    if !is_consistent(x) {
        return Err(LogicError::InconsistentCandidate);
    }
    let Expanded { program, hidden } = expand_extended_rules(p);
    let c = Compiled::new(&program);
    let mut assignment = vec![false; c.lits.len()];
    for l in x {
        match c.index.get(l) {
            Some(&i) => assignment[i] = true,
            None => return Ok(false),
        }
    }
    // Hidden choice companions are determined by the visible part.
    for h in &hidden {
        if x.contains(h) {
            return Ok(false);
        }
    }
    for (ri, r) in c.rules.iter().enumerate() {
        if let Some(h) = r.head {
            if hidden.contains(&c.lits[h]) && c.body_holds(ri, &assignment) {
                assignment[h] = true;
            }
        }
    }
    Ok(c.verify(&assignment))
}

/// All answer sets of `p`, sorted and without duplicates.
pub fn enumerate_answer_sets(p: &GroundProgram, engine: Engine) -> Result<Vec<AnswerSet>, LogicError> {
    let Expanded { program, hidden } = expand_extended_rules(p);
    let c = Compiled::new(&program);
    let hidden_mask: Vec<bool> = c.lits.iter().map(|l| hidden.contains(l)).collect();
    let mut found = BTreeSet::new();
    match engine {
        Engine::Brute => c.brute(&mut |m| {
            found.insert(c.answer(m, &hidden_mask));
        })?,
        Engine::Search => {
            let mut a = vec![Val::Unknown; c.lits.len()];
            c.search(&mut a, &mut |m| {
                found.insert(c.answer(m, &hidden_mask));
            });
        }
    }
    Ok(found.into_iter().collect())
}

/// Whether `p` has at least one answer set.
pub fn is_consistent_program(p: &GroundProgram, engine: Engine) -> Result<bool, LogicError> {
    Ok(!enumerate_answer_sets(p, engine)?.is_empty())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Val {
    Unknown,
    True,
    False,
}

#[derive(Debug)]
struct CRule {
    head: Option<usize>,
    pos: Vec<usize>,
    naf: Vec<usize>,
}

#[derive(Debug)]
struct CCount {
    check: CountCheck,
    bound: usize,
    lits: Vec<usize>,
    pos: Vec<usize>,
    naf: Vec<usize>,
}

#[derive(Debug)]
struct Compiled {
    lits: Vec<Literal>,
    index: HashMap<Literal, usize>,
    complement: Vec<Option<usize>>,
    rules: Vec<CRule>,
    counts: Vec<CCount>,
    defs: Vec<Vec<usize>>,
    pos_occ: Vec<Vec<usize>>,
    in_naf: Vec<bool>,
}

#[derive(Clone, Copy)]
enum Body {
    True,
    False,
    Unknown { open: usize, last: (usize, bool) },
}

impl Compiled {
    fn new(p: &GroundProgram) -> Self {
        let mut all: BTreeSet<&Literal> = BTreeSet::new();
        for r in &p.rules {
            all.extend(r.literals());
        }
        let lits: Vec<Literal> = all.into_iter().cloned().collect();
        let index: HashMap<Literal, usize> = lits.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect();
        let complement = lits.iter().map(|l| index.get(&l.complement()).copied()).collect();
        let ix = |ls: &[Literal]| ls.iter().map(|l| index[l]).collect::<Vec<_>>();
        let mut rules = Vec::new();
        let mut counts = Vec::new();
        for r in &p.rules {
            match &r.head {
                Head::Literal(h) => rules.push(CRule {
                    head: Some(index[h]),
                    pos: ix(&r.pos),
                    naf: ix(&r.naf),
                }),
                Head::Falsum => rules.push(CRule {
                    head: None,
                    pos: ix(&r.pos),
                    naf: ix(&r.naf),
                }),
                Head::Count {
                    check,
                    bound,
                    literals,
                } => counts.push(CCount {
                    check: *check,
                    bound: *bound,
                    lits: ix(literals),
                    pos: ix(&r.pos),
                    naf: ix(&r.naf),
                }),
                Head::Choice { .. } => unreachable!("choice rules are expanded before compiling"),
            }
        }
        let n = lits.len();
        let mut defs = vec![Vec::new(); n];
        let mut pos_occ = vec![Vec::new(); n];
        let mut in_naf = vec![false; n];
        for (ri, r) in rules.iter().enumerate() {
            if let Some(h) = r.head {
                defs[h].push(ri);
            }
            for &a in &r.pos {
                pos_occ[a].push(ri);
            }
            for &a in &r.naf {
                in_naf[a] = true;
            }
        }
        for c in &counts {
            for &a in &c.naf {
                in_naf[a] = true;
            }
        }
        Compiled {
            lits,
            index,
            complement,
            rules,
            counts,
            defs,
            pos_occ,
            in_naf,
        }
    }

    fn to_set(&self, m: &[bool]) -> BTreeSet<Literal> {
        m.iter()
            .enumerate()
            .filter(|(_, &t)| t)
            .map(|(i, _)| self.lits[i].clone())
            .collect()
    }

    fn answer(&self, m: &[bool], hidden: &[bool]) -> AnswerSet {
        AnswerSet(
            m.iter()
                .enumerate()
                .filter(|(i, &t)| t && !hidden[*i])
                .map(|(i, _)| self.lits[i].clone())
                .collect(),
        )
    }

    /// Least model of the rules for which `active` holds, ignoring their
    /// default-negated parts.
    fn least_model(&self, active: impl Fn(usize) -> bool) -> Vec<bool> {
        let n = self.lits.len();
        let mut model = vec![false; n];
        let mut remaining: Vec<usize> = self.rules.iter().map(|r| r.pos.len()).collect();
        let mut enabled = vec![false; self.rules.len()];
        let mut queue = Vec::new();
        for (ri, r) in self.rules.iter().enumerate() {
            if !active(ri) {
                continue;
            }
            enabled[ri] = true;
            if r.pos.is_empty() {
                if let Some(h) = r.head {
                    if !model[h] {
                        model[h] = true;
                        queue.push(h);
                    }
                }
            }
        }
        while let Some(a) = queue.pop() {
            for &ri in &self.pos_occ[a] {
                if !enabled[ri] {
                    continue;
                }
                remaining[ri] -= 1;
                if remaining[ri] == 0 {
                    if let Some(h) = self.rules[ri].head {
                        if !model[h] {
                            model[h] = true;
                            queue.push(h);
                        }
                    }
                }
            }
        }
        model
    }

    fn body_holds(&self, ri: usize, m: &[bool]) -> bool {
        let r = &self.rules[ri];
        r.pos.iter().all(|&a| m[a]) && r.naf.iter().all(|&a| !m[a])
    }

    fn count_violated(&self, c: &CCount, m: &[bool]) -> bool {
        if !(c.pos.iter().all(|&a| m[a]) && c.naf.iter().all(|&a| !m[a])) {
            return false;
        }
        let t = c.lits.iter().filter(|&&a| m[a]).count();
        match c.check {
            CountCheck::AtLeast => t >= c.bound,
            CountCheck::Below => t < c.bound,
        }
    }

    /// The full answer-set check for a total assignment.
    fn verify(&self, m: &[bool]) -> bool {
        for (i, &t) in m.iter().enumerate() {
            if t {
                if let Some(j) = self.complement[i] {
                    if m[j] {
                        return false;
                    }
                }
            }
        }
        let lm = self.least_model(|ri| self.rules[ri].naf.iter().all(|&a| !m[a]));
        if lm != m {
            return false;
        }
        let constraint_fires = self
            .rules
            .iter()
            .enumerate()
            .any(|(ri, r)| r.head.is_none() && self.body_holds(ri, m));
        !constraint_fires && !self.counts.iter().any(|c| self.count_violated(c, m))
    }

    fn brute(&self, emit: &mut dyn FnMut(&[bool])) -> Result<(), LogicError> {
        let guessed: Vec<usize> = (0..self.lits.len()).filter(|&i| self.in_naf[i]).collect();
        if guessed.len() > BRUTE_FORCE_CAP {
            return Err(LogicError::CapExceeded {
                size: guessed.len(),
                cap: BRUTE_FORCE_CAP,
            });
        }
        let mut guess = vec![false; self.lits.len()];
        for mask in 0u64..(1u64 << guessed.len()) {
            for (bit, &a) in guessed.iter().enumerate() {
                guess[a] = mask >> bit & 1 == 1;
            }
            let lm = self.least_model(|ri| self.rules[ri].naf.iter().all(|&a| !guess[a]));
            if guessed.iter().all(|&a| lm[a] == guess[a]) && self.verify(&lm) {
                emit(&lm);
            }
        }
        Ok(())
    }

    fn body(&self, pos: &[usize], naf: &[usize], a: &[Val]) -> Body {
        let mut open = 0;
        let mut last = (0, true);
        for &p in pos {
            match a[p] {
                Val::False => return Body::False,
                Val::Unknown => {
                    open += 1;
                    last = (p, true);
                }
                Val::True => {}
            }
        }
        for &n in naf {
            match a[n] {
                Val::True => return Body::False,
                Val::Unknown => {
                    open += 1;
                    last = (n, false);
                }
                Val::False => {}
            }
        }
        if open == 0 {
            Body::True
        } else {
            Body::Unknown { open, last }
        }
    }

    /// Makes the body literal `(atom, positive)` fail.
    fn falsify(a: &mut [Val], (atom, positive): (usize, bool)) {
        a[atom] = if positive { Val::False } else { Val::True };
    }

    /// Makes every literal of a body hold; false on contradiction.
    fn force_body(pos: &[usize], naf: &[usize], a: &mut [Val]) -> bool {
        for &p in pos {
            match a[p] {
                Val::False => return false,
                _ => a[p] = Val::True,
            }
        }
        for &n in naf {
            match a[n] {
                Val::True => return false,
                _ => a[n] = Val::False,
            }
        }
        true
    }

    /// Propagates to a fixpoint. Returns false on conflict.
    fn propagate(&self, a: &mut [Val]) -> bool {
        loop {
            let before: Vec<Val> = a.to_vec();
            for r in &self.rules {
                match self.body(&r.pos, &r.naf, a) {
                    Body::True => match r.head {
                        None => return false,
                        Some(h) => match a[h] {
                            Val::False => return false,
                            _ => a[h] = Val::True,
                        },
                    },
                    Body::Unknown { open: 1, last } => {
                        let blocked = match r.head {
                            None => true,
                            Some(h) => a[h] == Val::False,
                        };
                        if blocked {
                            Self::falsify(a, last);
                        }
                    }
                    _ => {}
                }
            }
            for c in &self.counts {
                let t = c.lits.iter().filter(|&&l| a[l] == Val::True).count();
                let u = c.lits.iter().filter(|&&l| a[l] == Val::Unknown).count();
                let certain = match c.check {
                    CountCheck::AtLeast => t >= c.bound,
                    CountCheck::Below => t + u < c.bound,
                };
                match self.body(&c.pos, &c.naf, a) {
                    Body::True => {
                        if certain {
                            return false;
                        }
                        match c.check {
                            CountCheck::AtLeast if t + 1 == c.bound => {
                                for &l in &c.lits {
                                    if a[l] == Val::Unknown {
                                        a[l] = Val::False;
                                    }
                                }
                            }
                            CountCheck::Below if t + u == c.bound => {
                                for &l in &c.lits {
                                    if a[l] == Val::Unknown {
                                        a[l] = Val::True;
                                    }
                                }
                            }
                            _ => {}
                        }
                    }
                    Body::Unknown { open: 1, last } if certain => Self::falsify(a, last),
                    _ => {}
                }
            }
            for i in 0..self.lits.len() {
                if a[i] == Val::False {
                    continue;
                }
                let mut supports = 0;
                let mut only = 0;
                for &ri in &self.defs[i] {
                    let r = &self.rules[ri];
                    if !matches!(self.body(&r.pos, &r.naf, a), Body::False) {
                        supports += 1;
                        only = ri;
                    }
                }
                if supports == 0 {
                    if a[i] == Val::True {
                        return false;
                    }
                    a[i] = Val::False;
                } else if supports == 1 && a[i] == Val::True {
                    let r = &self.rules[only];
                    if !Self::force_body(&r.pos, &r.naf, a) {
                        return false;
                    }
                }
            }
            for i in 0..self.lits.len() {
                if a[i] == Val::True {
                    if let Some(j) = self.complement[i] {
                        match a[j] {
                            Val::True => return false,
                            Val::Unknown => a[j] = Val::False,
                            Val::False => {}
                        }
                    }
                }
            }
            if a == before.as_slice() {
                // Unfounded literals: not derivable even optimistically.
                let upper = self.least_model(|ri| {
                    let r = &self.rules[ri];
                    r.pos.iter().all(|&p| a[p] != Val::False) && r.naf.iter().all(|&n| a[n] != Val::True)
                });
                let mut changed = false;
                for i in 0..self.lits.len() {
                    if !upper[i] {
                        match a[i] {
                            Val::True => return false,
                            Val::Unknown => {
                                a[i] = Val::False;
                                changed = true;
                            }
                            Val::False => {}
                        }
                    }
                }
                if !changed {
                    return true;
                }
            }
        }
    }

    fn search(&self, a: &mut Vec<Val>, emit: &mut dyn FnMut(&[bool])) {
        if !self.propagate(a) {
            return;
        }
        let pick = (0..a.len())
            .find(|&i| a[i] == Val::Unknown && self.in_naf[i])
            .or_else(|| a.iter().position(|&v| v == Val::Unknown));
        match pick {
            None => {
                let m: Vec<bool> = a.iter().map(|&v| v == Val::True).collect();
                if self.verify(&m) {
                    emit(&m);
                }
            }
            Some(i) => {
                for v in [Val::True, Val::False] {
                    let mut b = a.clone();
                    b[i] = v;
                    self.search(&mut b, emit);
                }
            }
        }
    }
}
