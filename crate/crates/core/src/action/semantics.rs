//! Transition-diagram semantics of action descriptions.
//!
//! States are complete, consistent sets of fluent literals closed under the
//! static laws. `σ'` is a successor of `σ` under compound action `a` when
//! `σ' = Cn_Z(E(a,σ) ∪ (σ ∩ σ'))`, where `E(a,σ)` is the set of direct
//! effects and `Cn_Z` is closure under the static laws. Successors are
//! found by checking that equation on every complete candidate, so the
//! number of fluents is capped at [`MAX_ENUMERATED_FLUENTS`].

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use super::{ActionDescription, ActionError, FluentLiteral, Law, LawKind, RecordedHistory, Records};
use crate::logic::Term;

pub const MAX_ENUMERATED_FLUENTS: usize = 16;

/// A complete, consistent, closed set of fluent literals.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct State(BTreeSet<FluentLiteral>);

impl State {
    /// Wraps `literals` without checking the state conditions; see
    /// [`ActionDescription::is_state`].
    pub fn from_literals(literals: impl IntoIterator<Item = FluentLiteral>) -> Self {
        State(literals.into_iter().collect())
    }

    pub fn literals(&self) -> &BTreeSet<FluentLiteral> {
        &self.0
    }

    pub fn contains(&self, l: &FluentLiteral) -> bool {
        self.0.contains(l)
    }

    /// Whether fluent `f` is true.
    pub fn holds(&self, f: &Term) -> bool {
        self.0.contains(&FluentLiteral::pos(f.clone()))
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self.0.iter().map(|l| l.to_string()).collect();
        write!(f, "{{{}}}", items.join(", "))
    }
}

/// `σ_0, a_0, σ_1, ..., a_{n-1}, σ_n`
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Trajectory {
    pub states: Vec<State>,
    pub actions: Vec<BTreeSet<Term>>,
}

impl Trajectory {
    pub fn initial(state: State) -> Self {
        Trajectory {
            states: vec![state],
            actions: Vec::new(),
        }
    }

    /// Number of transitions.
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn last(&self) -> &State {
        self.states.last().expect("a trajectory has at least one state")
    }

    /// Whether the records are true of this trajectory: every observed
    /// literal holds and every recorded action is part of the action taken.
    pub fn is_sound_for(&self, records: &Records) -> bool {
        records.observations.iter().all(|o| {
            self.states
                .get(o.time)
                .is_some_and(|s| s.contains(&o.literal))
        }) && records.occurrences.iter().all(|h| {
            self.actions
                .get(h.time)
                .is_some_and(|a| a.contains(&h.action))
        })
    }
}

impl fmt::Display for Trajectory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (t, s) in self.states.iter().enumerate() {
            if t > 0 {
                let a: Vec<String> = self.actions[t - 1].iter().map(|a| a.to_string()).collect();
                write!(f, " -{{{}}}-> ", a.join(", "))?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

type Lit = (usize, bool);

/// A partial set of literals as (positive, negative) bit masks.
#[derive(Clone, Copy, PartialEq, Eq)]
struct Partial {
    pos: u64,
    neg: u64,
}

impl Partial {
    fn has(&self, (i, p): Lit) -> bool {
        if p {
            self.pos >> i & 1 == 1
        } else {
            self.neg >> i & 1 == 1
        }
    }

    fn add(&mut self, (i, p): Lit) {
        if p {
            self.pos |= 1 << i;
        } else {
            self.neg |= 1 << i;
        }
    }
}

/// The description compiled to bit masks.
pub(crate) struct Diagram<'a> {
    sd: &'a ActionDescription,
    fluents: Vec<Term>,
    index: HashMap<Term, usize>,
    statics: Vec<(Lit, Vec<Lit>)>,
    full: u64,
}

impl<'a> Diagram<'a> {
    pub(crate) fn new(sd: &'a ActionDescription) -> Result<Self, ActionError> {
        let fluents: Vec<Term> = sd.signature.fluents.iter().cloned().collect();
        if fluents.len() > MAX_ENUMERATED_FLUENTS {
            return Err(ActionError::TooManyFluents {
                count: fluents.len(),
                cap: MAX_ENUMERATED_FLUENTS,
            });
        }
        let index: HashMap<Term, usize> = fluents.iter().enumerate().map(|(i, f)| (f.clone(), i)).collect();
        let mut d = Diagram {
            sd,
            full: if fluents.is_empty() { 0 } else { u64::MAX >> (64 - fluents.len()) },
            fluents,
            index,
            statics: Vec::new(),
        };
        d.statics = sd
            .laws
            .iter()
            .filter_map(|law| match &law.kind {
                LawKind::Static { head } => Some((d.lit(head), d.lits(&law.preconditions))),
                _ => None,
            })
            .collect();
        Ok(d)
    }

    fn lit(&self, l: &FluentLiteral) -> Lit {
        (self.index[&l.fluent], l.positive)
    }

    fn lits(&self, ls: &[FluentLiteral]) -> Vec<Lit> {
        ls.iter().map(|l| self.lit(l)).collect()
    }

    fn holds(mask: u64, (i, p): Lit) -> bool {
        (mask >> i & 1 == 1) == p
    }

    fn holds_all(mask: u64, pre: &[FluentLiteral], d: &Diagram) -> bool {
        pre.iter().all(|l| Self::holds(mask, d.lit(l)))
    }

    fn close(&self, mut s: Partial) -> Partial {
        loop {
            let before = s;
            for (head, pre) in &self.statics {
                if pre.iter().all(|&l| s.has(l)) {
                    s.add(*head);
                }
            }
            if s == before {
                return s;
            }
        }
    }

    fn is_closed(&self, mask: u64) -> bool {
        self.statics
            .iter()
            .all(|(head, pre)| !pre.iter().all(|&l| Self::holds(mask, l)) || Self::holds(mask, *head))
    }

    pub(crate) fn to_state(&self, mask: u64) -> State {
        State(
            self.fluents
                .iter()
                .enumerate()
                .map(|(i, f)| FluentLiteral {
                    fluent: f.clone(),
                    positive: mask >> i & 1 == 1,
                })
                .collect(),
        )
    }

    pub(crate) fn to_mask(&self, s: &State) -> Result<u64, ActionError> {
        let mut m = 0;
        for l in s.literals() {
            let i = *self
                .index
                .get(&l.fluent)
                .ok_or_else(|| ActionError::UnknownFluent(l.fluent.clone()))?;
            if l.positive {
                m |= 1 << i;
            }
        }
        Ok(m)
    }

    fn check_actions(&self, a: &BTreeSet<Term>) -> Result<(), ActionError> {
        match a.iter().find(|x| !self.sd.signature.is_action(x)) {
            Some(x) => Err(ActionError::UnknownAction(x.clone())),
            None => Ok(()),
        }
    }

    fn blocking_law(&self, mask: u64, a: &BTreeSet<Term>) -> Option<&'a Law> {
        self.sd.laws.iter().find(|law| match &law.kind {
            LawKind::Impossibility { action } => {
                a.contains(action) && Self::holds_all(mask, &law.preconditions, self)
            }
            _ => false,
        })
    }

    fn effects(&self, mask: u64, a: &BTreeSet<Term>) -> Partial {
        let mut e = Partial { pos: 0, neg: 0 };
        for law in &self.sd.laws {
            if let LawKind::Dynamic { action, head } = &law.kind {
                if a.contains(action) && Self::holds_all(mask, &law.preconditions, self) {
                    e.add(self.lit(head));
                }
            }
        }
        e
    }

    pub(crate) fn successors(&self, mask: u64, a: &BTreeSet<Term>) -> Result<Vec<u64>, ActionError> {
        self.check_actions(a)?;
        if self.blocking_law(mask, a).is_some() {
            return Ok(Vec::new());
        }
        let e = self.effects(mask, a);
        if e.pos & e.neg != 0 {
            return Ok(Vec::new());
        }
        let mut out = Vec::new();
        for cand in 0..=self.full {
            if cand & e.pos != e.pos || cand & e.neg != 0 {
                continue;
            }
            let kept = Partial {
                pos: e.pos | (mask & cand),
                neg: e.neg | (!mask & !cand & self.full),
            };
            let c = self.close(kept);
            if c.pos == cand && c.neg == !cand & self.full {
                out.push(cand);
            }
            if self.full == u64::MAX {
                break;
            }
        }
        Ok(out)
    }

    fn states(&self) -> Vec<u64> {
        (0..=self.full).filter(|&m| self.is_closed(m)).collect()
    }

    fn models(&self, horizon: usize, records: &Records) -> Result<Vec<Trajectory>, ActionError> {
        let obs_at = |t: usize| -> Vec<Lit> {
            records
                .observations
                .iter()
                .filter(|o| o.time == t)
                .map(|o| {
                    self.index
                        .get(&o.literal.fluent)
                        .map(|&i| (i, o.literal.positive))
                        .ok_or_else(|| ActionError::UnknownFluent(o.literal.fluent.clone()))
                })
                .collect::<Result<Vec<_>, _>>()
                .unwrap_or_else(|_| vec![(usize::MAX, true)])
        };
        for o in &records.observations {
            if !self.index.contains_key(&o.literal.fluent) {
                return Err(ActionError::UnknownFluent(o.literal.fluent.clone()));
            }
        }
        let matches = |mask: u64, t: usize| obs_at(t).iter().all(|&l| Self::holds(mask, l));
        let actions: Vec<BTreeSet<Term>> = (0..horizon).map(|t| records.actions_at(t)).collect();
        for a in &actions {
            self.check_actions(a)?;
        }
        let mut out = Vec::new();
        let mut path = Vec::new();
        for s0 in self.states().into_iter().filter(|&m| matches(m, 0)) {
            path.clear();
            path.push(s0);
            self.extend(&mut path, horizon, &actions, &matches, &mut out)?;
        }
        let mut models: Vec<Trajectory> = out
            .into_iter()
            .map(|p: Vec<u64>| Trajectory {
                states: p.iter().map(|&m| self.to_state(m)).collect(),
                actions: actions.clone(),
            })
            .collect();
        models.sort();
        Ok(models)
    }

    fn extend(
        &self,
        path: &mut Vec<u64>,
        horizon: usize,
        actions: &[BTreeSet<Term>],
        matches: &dyn Fn(u64, usize) -> bool,
        out: &mut Vec<Vec<u64>>,
    ) -> Result<(), ActionError> {
        let t = path.len() - 1;
        if t == horizon {
            out.push(path.clone());
            return Ok(());
        }
        for next in self.successors(path[t], &actions[t])? {
            if matches(next, t + 1) {
                path.push(next);
                self.extend(path, horizon, actions, matches, out)?;
                path.pop();
            }
        }
        Ok(())
    }
}

impl ActionDescription {
    /// `Cn_Z(s)`: the least superset of `s` closed under the static laws.
    pub fn closure(&self, s: &BTreeSet<FluentLiteral>) -> BTreeSet<FluentLiteral> {
        let mut out = s.clone();
        loop {
            let mut changed = false;
            for law in &self.laws {
                if let LawKind::Static { head } = &law.kind {
                    if law.preconditions.iter().all(|l| out.contains(l)) && out.insert(head.clone()) {
                        changed = true;
                    }
                }
            }
            if !changed {
                return out;
            }
        }
    }

    /// `E(a, σ)`: heads of dynamic laws for actions in `a` whose
    /// preconditions hold in `s`.
    pub fn direct_effects(&self, a: &BTreeSet<Term>, s: &State) -> BTreeSet<FluentLiteral> {
        self.laws
            .iter()
            .filter_map(|law| match &law.kind {
                LawKind::Dynamic { action, head }
                    if a.contains(action) && law.preconditions.iter().all(|l| s.contains(l)) =>
                {
                    Some(head.clone())
                }
                _ => None,
            })
            .collect()
    }

    /// The impossibility law that makes `a` inexecutable in `s`, if any.
    pub fn blocking_law(&self, s: &State, a: &BTreeSet<Term>) -> Option<&Law> {
        self.laws.iter().find(|law| match &law.kind {
            LawKind::Impossibility { action } => {
                a.contains(action) && law.preconditions.iter().all(|l| s.contains(l))
            }
            _ => false,
        })
    }

    /// Whether `s` is complete, consistent and closed under the static laws.
    pub fn is_state(&self, s: &BTreeSet<FluentLiteral>) -> bool {
        let complete_consistent = self.signature.fluents.iter().all(|f| {
            s.contains(&FluentLiteral::pos(f.clone())) != s.contains(&FluentLiteral::neg(f.clone()))
        }) && s.iter().all(|l| self.signature.fluents.contains(&l.fluent));
        complete_consistent && self.closure(s) == *s
    }

    /// All states, in canonical order.
    pub fn states(&self) -> Result<Vec<State>, ActionError> {
        let d = Diagram::new(self)?;
        let mut v: Vec<State> = d.states().into_iter().map(|m| d.to_state(m)).collect();
        v.sort();
        Ok(v)
    }

    /// Every `σ'` with `⟨s, a, σ'⟩` in the transition diagram, canonically
    /// ordered. Empty when an impossibility law for some element of `a`
    /// applies in `s`.
    pub fn successors(&self, s: &State, a: &BTreeSet<Term>) -> Result<Vec<State>, ActionError> {
        let d = Diagram::new(self)?;
        let mask = d.to_mask(s)?;
        let mut v: Vec<State> = d.successors(mask, a)?.into_iter().map(|m| d.to_state(m)).collect();
        v.sort();
        Ok(v)
    }

    /// Paths of length `horizon` whose actions are exactly the recorded
    /// occurrences and whose states satisfy every observation.
    pub fn models(&self, horizon: usize, records: &Records) -> Result<Vec<Trajectory>, ActionError> {
        Diagram::new(self)?.models(horizon, records)
    }

    pub fn models_of_history(&self, g: &RecordedHistory) -> Result<Vec<Trajectory>, ActionError> {
        self.models(g.horizon, &g.records)
    }

    /// Whether `l` holds at `t` in every model of `g`.
    ///
    /// Fails with [`ActionError::InconsistentHistory`] when `g` has no model.
    pub fn entails(&self, g: &RecordedHistory, l: &FluentLiteral, t: usize) -> Result<bool, ActionError> {
        let models = self.models_of_history(g)?;
        if models.is_empty() {
            return Err(ActionError::InconsistentHistory);
        }
        Ok(models
            .iter()
            .all(|m| m.states.get(t).is_some_and(|s| s.contains(l))))
    }

    /// Whether every state has at most one successor under every compound action.
    pub fn is_deterministic(&self) -> Result<bool, ActionError> {
        let d = Diagram::new(self)?;
        let actions: Vec<Term> = self.signature.actions().cloned().collect();
        if actions.len() > 12 {
            return Err(ActionError::History("too many actions to enumerate".into()));
        }
        for s in d.states() {
            for bits in 0u32..(1 << actions.len()) {
                let a: BTreeSet<Term> = (0..actions.len())
                    .filter(|i| bits >> i & 1 == 1)
                    .map(|i| actions[i].clone())
                    .collect();
                if d.successors(s, &a)?.len() > 1 {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// Whether `w` agrees with every record of `g`.
pub fn is_sound_history(g: &RecordedHistory, w: &Trajectory) -> bool {
    w.len() >= g.horizon && w.is_sound_for(&g.records)
}

#[cfg(test)]
mod tests {
    use super::super::tests::AC;
    use super::super::{FluentLiteral as FL, Records};
    use super::*;

    fn t(s: &str) -> Term {
        crate::logic::parse_program(&format!("x({s})."))
            .unwrap()
            .rules[0]
            .head_literal()
            .unwrap()
            .args()[0]
            .clone()
    }

    fn gamma1(prot: bool) -> RecordedHistory {
        let p = if prot { "prot(b)" } else { "-prot(b)" };
        let r = Records::parse(&format!(
            "hpd(close(s1),0). obs(-closed(s1),0). obs(-closed(s2),0).
             obs(-ab(b),0). obs(-ab(r),0). obs({p},0)."
        ))
        .unwrap();
        RecordedHistory::new(1, r).unwrap()
    }

    fn act(names: &[&str]) -> BTreeSet<Term> {
        names.iter().map(|n| t(n)).collect()
    }

    #[test]
    fn gamma1_has_one_model_with_the_light_on() {
        let sd = ActionDescription::parse(AC).unwrap();
        let models = sd.models_of_history(&gamma1(true)).unwrap();
        assert_eq!(models.len(), 1);
        let s1 = &models[0].states[1];
        for f in ["closed(s1)", "active(r)", "closed(s2)", "on(b)"] {
            assert!(s1.holds(&t(f)), "{f}");
        }
        assert!(sd.entails(&gamma1(true), &FL::pos(t("on(b)")), 1).unwrap());
        assert!(!sd.entails(&gamma1(true), &FL::pos(t("ab(b)")), 1).unwrap());
    }

    #[test]
    fn symptom_history_has_no_model() {
        let sd = ActionDescription::parse(AC).unwrap();
        let mut g = gamma1(true);
        g.records = g.records.obs(FL::neg(t("on(b)")), 1);
        assert!(sd.models_of_history(&g).unwrap().is_empty());
        assert!(matches!(
            sd.entails(&g, &FL::pos(t("on(b)")), 1),
            Err(ActionError::InconsistentHistory)
        ));
    }

    #[test]
    fn direct_effects_respect_preconditions() {
        let sd = ActionDescription::parse(AC).unwrap();
        let s0 = sd.models_of_history(&gamma1(true)).unwrap()[0].states[0].clone();
        assert_eq!(
            sd.direct_effects(&act(&["srg"]), &s0),
            [FL::pos(t("ab(r)"))].into()
        );
        assert_eq!(
            sd.direct_effects(&act(&["close(s1)"]), &s0),
            [FL::pos(t("closed(s1)"))].into()
        );
        assert!(sd.direct_effects(&act(&[]), &s0).is_empty());
    }

    #[test]
    fn impossibility_and_inertia() {
        let sd = ActionDescription::parse(AC).unwrap();
        let m = &sd.models_of_history(&gamma1(true)).unwrap()[0];
        let s1 = &m.states[1];
        assert!(sd.successors(s1, &act(&["close(s1)"])).unwrap().is_empty());
        assert_eq!(sd.blocking_law(s1, &act(&["close(s1)"])).unwrap().name, "law_6");
        assert_eq!(sd.successors(s1, &act(&[])).unwrap(), vec![s1.clone()]);
        assert!(matches!(
            sd.successors(s1, &act(&["fly"])),
            Err(ActionError::UnknownAction(_))
        ));
    }

    #[test]
    fn surge_on_unprotected_bulb() {
        let sd = ActionDescription::parse(AC).unwrap();
        let s0 = sd.models_of_history(&gamma1(false)).unwrap()[0].states[0].clone();
        let next = sd.successors(&s0, &act(&["close(s1)", "srg"])).unwrap();
        assert_eq!(next.len(), 1);
        assert!(next[0].holds(&t("ab(r)")) && next[0].holds(&t("ab(b)")) && !next[0].holds(&t("on(b)")));
    }

    #[test]
    fn closure_example() {
        let sd = ActionDescription::parse(AC).unwrap();
        let s: BTreeSet<FL> = [FL::pos(t("closed(s1)")), FL::neg(t("ab(r)"))].into();
        let c = sd.closure(&s);
        assert!(c.contains(&FL::pos(t("active(r)"))));
        assert!(c.contains(&FL::pos(t("closed(s2)"))));
        assert_eq!(sd.closure(&c), c);
        assert!(sd.closure(&BTreeSet::new()).is_empty());
    }

    #[test]
    fn circuit_is_deterministic() {
        let sd = ActionDescription::parse(AC).unwrap();
        assert!(sd.is_deterministic().unwrap());
        for s in sd.states().unwrap() {
            assert!(sd.is_state(s.literals()));
        }
    }

    #[test]
    fn soundness() {
        let sd = ActionDescription::parse(AC).unwrap();
        let g = gamma1(true);
        let w = &sd.models_of_history(&g).unwrap()[0];
        assert!(is_sound_history(&g, w));
        assert!(is_sound_history(&RecordedHistory::default(), w));
        let lie = RecordedHistory::new(1, Records::new().hpd(t("brk"), 0)).unwrap();
        assert!(!is_sound_history(&lie, w));
    }
}
