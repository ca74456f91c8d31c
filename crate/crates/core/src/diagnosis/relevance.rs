use std::collections::BTreeSet;

use crate::action::{ActionDescription, ActionError, FluentLiteral, LawKind, Occurrence, State};
use crate::logic::Term;

/// Which elementary actions can influence which fluent literals, and which
/// literals matter for a set of observed literals `O`.
///
/// An action is relevant to `l` when a dynamic law for it has head `l`;
/// when a dynamic or static law with head `l` has a precondition the action
/// is relevant to; or when an impossibility condition of some action
/// relevant to `l` has a precondition whose complement the action is
/// relevant to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelevanceIndex {
    pairs: BTreeSet<(Term, FluentLiteral)>,
    observed: BTreeSet<FluentLiteral>,
    literals: BTreeSet<FluentLiteral>,
    exogenous: BTreeSet<Term>,
}

impl RelevanceIndex {
    pub fn new(sd: &ActionDescription, observed: impl IntoIterator<Item = FluentLiteral>) -> Self {
        let observed: BTreeSet<FluentLiteral> = observed.into_iter().collect();
        let pairs = relevant_pairs(sd);
        let mut index = RelevanceIndex {
            pairs,
            observed: observed.clone(),
            literals: BTreeSet::new(),
            exogenous: sd.signature.exogenous_actions.clone(),
        };
        index.literals = index.relevant_literals_of(sd, observed);
        index
    }

    fn relevant_literals_of(&self, sd: &ActionDescription, observed: BTreeSet<FluentLiteral>) -> BTreeSet<FluentLiteral> {
        let mut out = observed;
        for law in &sd.laws {
            if let LawKind::Impossibility { action } = &law.kind {
                if self.is_relevant(action) {
                    out.extend(law.preconditions.iter().map(FluentLiteral::complement));
                }
            }
        }
        loop {
            let before = out.len();
            for law in &sd.laws {
                match &law.kind {
                    LawKind::Dynamic { head, .. } | LawKind::Static { head } if out.contains(head) => {
                        out.extend(law.preconditions.iter().cloned());
                    }
                    _ => {}
                }
            }
            if out.len() == before {
                return out;
            }
        }
    }

    /// `rel(a, l)`
    pub fn is_relevant_to(&self, a: &Term, l: &FluentLiteral) -> bool {
        self.pairs.contains(&(a.clone(), l.clone()))
    }

    /// Whether elementary action `a` is relevant to some observed literal.
    pub fn is_relevant(&self, a: &Term) -> bool {
        self.observed.iter().any(|l| self.is_relevant_to(a, l))
    }

    /// Whether every element of compound action `a` is relevant.
    pub fn is_relevant_action(&self, a: &BTreeSet<Term>) -> bool {
        a.iter().all(|e| self.is_relevant(e))
    }

    /// All `(a, l)` with `rel(a, l)`.
    pub fn pairs(&self) -> &BTreeSet<(Term, FluentLiteral)> {
        &self.pairs
    }

    /// `rel(O)`
    pub fn relevant_literals(&self) -> &BTreeSet<FluentLiteral> {
        &self.literals
    }

    /// Number of elementary actions in `actions` not relevant to `O`.
    pub fn rank(&self, actions: &[BTreeSet<Term>]) -> usize {
        actions.iter().flatten().filter(|a| !self.is_relevant(a)).count()
    }

    /// Drops exogenous elements not relevant to `O` from every action.
    pub fn reduce(&self, actions: &[BTreeSet<Term>]) -> Vec<BTreeSet<Term>> {
        actions
            .iter()
            .map(|a| a.iter().filter(|e| self.keeps(e)).cloned().collect())
            .collect()
    }

    /// [`Self::reduce`] for a set of occurrences.
    pub fn reduce_occurrences(&self, e: &BTreeSet<Occurrence>) -> BTreeSet<Occurrence> {
        e.iter().filter(|o| self.keeps(&o.action)).cloned().collect()
    }

    fn keeps(&self, a: &Term) -> bool {
        !self.exogenous.contains(a) || self.is_relevant(a)
    }

    /// States agreeing on every literal of `rel(O)`.
    pub fn equivalent(&self, s1: &State, s2: &State) -> bool {
        self.literals.iter().all(|l| s1.contains(l) == s2.contains(l))
    }
}

fn relevant_pairs(sd: &ActionDescription) -> BTreeSet<(Term, FluentLiteral)> {
    let mut pairs = BTreeSet::new();
    for law in &sd.laws {
        if let LawKind::Dynamic { action, head } = &law.kind {
            pairs.insert((action.clone(), head.clone()));
        }
    }
    let actions: Vec<Term> = sd.signature.actions().cloned().collect();
    loop {
        let mut added = Vec::new();
        for law in &sd.laws {
            match &law.kind {
                LawKind::Dynamic { head, .. } | LawKind::Static { head } => {
                    for a in &actions {
                        if law.preconditions.iter().any(|p| pairs.contains(&(a.clone(), p.clone()))) {
                            added.push((a.clone(), head.clone()));
                        }
                    }
                }
                LawKind::Impossibility { action: blocked } => {
                    let targets: Vec<FluentLiteral> = pairs
                        .iter()
                        .filter(|(a, _)| a == blocked)
                        .map(|(_, l)| l.clone())
                        .collect();
                    for a in &actions {
                        let enabling = law
                            .preconditions
                            .iter()
                            .any(|p| pairs.contains(&(a.clone(), p.complement())));
                        if enabling {
                            added.extend(targets.iter().map(|l| (a.clone(), l.clone())));
                        }
                    }
                }
            }
        }
        let before = pairs.len();
        pairs.extend(added);
        if pairs.len() == before {
            return pairs;
        }
    }
}

/// Whether a compound action is inexecutable in a state exactly when some
/// impossibility condition applies.
pub fn is_well_defined(sd: &ActionDescription) -> Result<bool, ActionError> {
    let actions: Vec<Term> = sd.signature.actions().cloned().collect();
    if actions.len() > 12 {
        return Err(ActionError::History("too many actions to enumerate".into()));
    }
    for s in sd.states()? {
        for bits in 0u32..(1 << actions.len()) {
            let a: BTreeSet<Term> = (0..actions.len())
                .filter(|i| bits >> i & 1 == 1)
                .map(|i| actions[i].clone())
                .collect();
            let blocked = sd.blocking_law(&s, &a).is_some();
            if blocked != sd.successors(&s, &a)?.is_empty() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
