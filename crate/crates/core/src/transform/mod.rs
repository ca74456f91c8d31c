//! Answer-set preserving program transformations and the checks built on
//! them: partial evaluation, trimming, conservative extension and splitting.
//!
//! ```
//! use aldiag::logic::{parse_program, Literal, Term};
//! use aldiag::transform::partial_eval;
//!
//! let p = parse_program("a :- b. b :- c. c.").unwrap();
//! let b = Literal::atom("b", Vec::<Term>::new());
//! let e = partial_eval(&p, &b).unwrap();
//! assert_eq!(e.to_string(), "a :- c.\nb :- c.\nc.\n");
//! ```

use std::collections::BTreeSet;
use std::fmt;

use crate::logic::{enumerate_answer_sets, AnswerSet, Engine, GroundProgram, Head, Literal, LogicError, Rule};

#[derive(Debug, thiserror::Error)]
pub enum TransformError {
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error("{0} occurs positively in its own definition")]
    Recursive(Literal),
    #[error("rule {0} has a choice or counting head; only normal rules can be transformed")]
    Extended(String),
    #[error("literals of the smaller program missing from the larger one: {0}")]
    NotContained(String),
    #[error("not a splitting set: rule {0} has its head inside and a literal outside")]
    NotSplitting(String),
}

fn require_normal(p: &GroundProgram) -> Result<(), TransformError> {
    match p.rules.iter().find(|r| r.is_extended()) {
        Some(r) => Err(TransformError::Extended(r.to_string())),
        None => Ok(()),
    }
}

fn dedup(v: Vec<Literal>) -> Vec<Literal> {
    let mut seen = BTreeSet::new();
    v.into_iter().filter(|l| seen.insert(l.clone())).collect()
}

fn rebuild(p: &GroundProgram, rules: Vec<Rule>) -> GroundProgram {
    GroundProgram {
        signature: p.signature.clone(),
        rules,
    }
}

/// Replaces each positive body occurrence of `q` by each body of the
/// definition of `q`. Occurrences under `not` are left alone.
pub fn partial_eval(p: &GroundProgram, q: &Literal) -> Result<GroundProgram, TransformError> {
    require_normal(p)?;
    let definition: Vec<&Rule> = p.rules.iter().filter(|r| r.head_literal() == Some(q)).collect();
    if definition.iter().any(|r| r.pos.contains(q)) {
        return Err(TransformError::Recursive(q.clone()));
    }
    let mut out = Vec::new();
    for rule in &p.rules {
        if !rule.pos.contains(q) {
            out.push(rule.clone());
            continue;
        }
        for def in &definition {
            let mut pos = Vec::new();
            for l in &rule.pos {
                if l == q {
                    pos.extend(def.pos.iter().cloned());
                } else if !pos.contains(l) {
                    pos.push(l.clone());
                }
            }
            let mut naf = rule.naf.clone();
            naf.extend(def.naf.iter().cloned());
            out.push(Rule {
                head: rule.head.clone(),
                pos: dedup(pos),
                naf: dedup(naf),
            });
        }
    }
    Ok(rebuild(p, out))
}

/// Evaluates the last literal of `qs` first, then the rest in turn.
pub fn extended_eval(p: &GroundProgram, qs: &[Literal]) -> Result<GroundProgram, TransformError> {
    let mut out = p.clone();
    for q in qs.iter().rev() {
        out = partial_eval(&out, q)?;
    }
    Ok(out)
}

/// [`extended_eval`] followed by removal of the definitions of `qs`.
pub fn trim(p: &GroundProgram, qs: &[Literal]) -> Result<GroundProgram, TransformError> {
    let e = extended_eval(p, qs)?;
    let rules = e
        .rules
        .iter()
        .filter(|r| r.head_literal().is_none_or(|h| !qs.contains(h)))
        .cloned()
        .collect();
    Ok(rebuild(&e, rules))
}

/// Why a conservative-extension check failed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Witness {
    /// An answer set of the larger program whose restriction is not an
    /// answer set of the smaller one.
    Restriction(AnswerSet),
    /// An answer set of the smaller program that no answer set of the
    /// larger one extends.
    Extension(AnswerSet),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtensionCheck {
    /// Literals of the larger program absent from the smaller one.
    pub auxiliary: BTreeSet<Literal>,
    pub witness: Option<Witness>,
}

impl ExtensionCheck {
    pub fn holds(&self) -> bool {
        self.witness.is_none()
    }
}

/// Whether every answer set of `larger` minus the auxiliary literals is an
/// answer set of `smaller`, and every answer set of `smaller` extends to one
/// of `larger` by auxiliary literals alone.
pub fn check_conservative_extension(
    larger: &GroundProgram,
    smaller: &GroundProgram,
    engine: Engine,
) -> Result<ExtensionCheck, TransformError> {
    let big = larger.occurring_literals();
    let small = smaller.occurring_literals();
    let missing: Vec<String> = small.difference(&big).map(|l| l.to_string()).collect();
    if !missing.is_empty() {
        return Err(TransformError::NotContained(missing.join(", ")));
    }
    let auxiliary: BTreeSet<Literal> = big.difference(&small).cloned().collect();
    let big_sets = enumerate_answer_sets(larger, engine)?;
    let small_sets = enumerate_answer_sets(smaller, engine)?;
    let restrict = |a: &AnswerSet| AnswerSet(a.0.difference(&auxiliary).cloned().collect());
    let restricted: BTreeSet<AnswerSet> = big_sets.iter().map(restrict).collect();
    let witness = big_sets
        .iter()
        .find(|a| !small_sets.contains(&restrict(a)))
        .map(|a| Witness::Restriction(a.clone()))
        .or_else(|| {
            small_sets
                .iter()
                .find(|a| !restricted.contains(a))
                .map(|a| Witness::Extension(a.clone()))
        });
    Ok(ExtensionCheck { auxiliary, witness })
}

/// Whether `p` and `q` have the same answer sets.
pub fn equivalent(p: &GroundProgram, q: &GroundProgram, engine: Engine) -> Result<bool, TransformError> {
    Ok(enumerate_answer_sets(p, engine)? == enumerate_answer_sets(q, engine)?)
}

/// The rules of `p` whose literals all lie in `u`, and the rest.
///
/// Fails unless `u` is a splitting set: every rule with its head in `u` has
/// all its literals in `u`.
pub fn split(p: &GroundProgram, u: &BTreeSet<Literal>) -> Result<(GroundProgram, GroundProgram), TransformError> {
    require_normal(p)?;
    let mut bottom = Vec::new();
    let mut top = Vec::new();
    for rule in &p.rules {
        let inside = rule.literals().all(|l| u.contains(l));
        let head_inside = matches!(&rule.head, Head::Literal(h) if u.contains(h));
        if head_inside && !inside {
            return Err(TransformError::NotSplitting(rule.to_string()));
        }
        if inside {
            bottom.push(rule.clone());
        } else {
            top.push(rule.clone());
        }
    }
    Ok((rebuild(p, bottom), rebuild(p, top)))
}

/// Partially evaluates `top` with respect to an answer set `x` of the
/// bottom over `u`: rules whose `u`-part is false in `x` are dropped, and
/// the `u`-literals of the others are removed.
pub fn evaluate_top(top: &GroundProgram, u: &BTreeSet<Literal>, x: &AnswerSet) -> GroundProgram {
    let rules = top
        .rules
        .iter()
        .filter(|r| {
            r.pos.iter().all(|l| !u.contains(l) || x.contains(l)) && r.naf.iter().all(|l| !u.contains(l) || !x.contains(l))
        })
        .map(|r| Rule {
            head: r.head.clone(),
            pos: r.pos.iter().filter(|l| !u.contains(l)).cloned().collect(),
            naf: r.naf.iter().filter(|l| !u.contains(l)).cloned().collect(),
        })
        .collect();
    rebuild(top, rules)
}

/// Answer sets of `p` computed bottom-up through the splitting set `u`.
pub fn recompose(p: &GroundProgram, u: &BTreeSet<Literal>, engine: Engine) -> Result<Vec<AnswerSet>, TransformError> {
    let (bottom, top) = split(p, u)?;
    let mut out = BTreeSet::new();
    for x in enumerate_answer_sets(&bottom, engine)? {
        for y in enumerate_answer_sets(&evaluate_top(&top, u, &x), engine)? {
            let union: BTreeSet<Literal> = x.0.union(&y.0).cloned().collect();
            if crate::logic::is_consistent(&union) {
                out.insert(AnswerSet(union));
            }
        }
    }
    Ok(out.into_iter().collect())
}

/// Both programs of a transformation and whether their answer sets agree.
#[derive(Debug, Clone)]
pub struct TransformReport {
    pub input: GroundProgram,
    pub output: GroundProgram,
    pub sequence: Vec<Literal>,
    pub input_sets: Vec<AnswerSet>,
    pub output_sets: Vec<AnswerSet>,
}

impl TransformReport {
    pub fn new(input: GroundProgram, output: GroundProgram, sequence: Vec<Literal>, engine: Engine) -> Result<Self, TransformError> {
        let input_sets = enumerate_answer_sets(&input, engine)?;
        let output_sets = enumerate_answer_sets(&output, engine)?;
        Ok(TransformReport {
            input,
            output,
            sequence,
            input_sets,
            output_sets,
        })
    }

    pub fn equivalent(&self) -> bool {
        self.input_sets == self.output_sets
    }
}

impl fmt::Display for TransformReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let seq: Vec<String> = self.sequence.iter().map(|l| l.to_string()).collect();
        writeln!(f, "sequence: {}", seq.join(", "))?;
        writeln!(f, "input rules: {}", self.input.len())?;
        writeln!(f, "output rules: {}", self.output.len())?;
        writeln!(f, "input answer sets: {}", self.input_sets.len())?;
        writeln!(f, "output answer sets: {}", self.output_sets.len())?;
        writeln!(f, "equivalent: {}", self.equivalent())?;
        writeln!(f, "output:")?;
        write!(f, "{}", self.output)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{parse_program, Term};

    fn atom(name: &str) -> Literal {
        Literal::atom(name, Vec::<Term>::new())
    }

    #[test]
    fn single_definition() {
        let p = parse_program("a :- b. b :- c.").unwrap();
        assert_eq!(partial_eval(&p, &atom("b")).unwrap().to_string(), "a :- c.\nb :- c.\n");
    }

    #[test]
    fn empty_definition_drops_rules() {
        let p = parse_program("a :- b. c :- not a.").unwrap();
        let e = partial_eval(&p, &atom("b")).unwrap();
        assert_eq!(e.to_string(), "c :- not a.\n");
        assert!(equivalent(&p, &e, Engine::Search).unwrap());
    }

    #[test]
    fn several_definitions_and_naf_untouched() {
        let p = parse_program("a :- b, d. b :- c. b :- not e. c. d. x :- not b.").unwrap();
        let e = partial_eval(&p, &atom("b")).unwrap();
        assert!(e.to_string().contains("a :- c, d.\na :- d, not e."), "{e}");
        assert!(e.to_string().contains("x :- not b."));
        assert!(equivalent(&p, &e, Engine::Search).unwrap());
    }

    #[test]
    fn recursion_is_rejected() {
        let p = parse_program("b :- b, c. a :- b.").unwrap();
        assert!(matches!(partial_eval(&p, &atom("b")), Err(TransformError::Recursive(_))));
    }

    #[test]
    fn trimming() {
        let p = parse_program("a :- b. b :- c. c :- not d.").unwrap();
        assert_eq!(trim(&p, &[]).unwrap().to_string(), p.to_string());
        let t = trim(&p, &[atom("b")]).unwrap();
        assert_eq!(t.to_string(), "a :- c.\nc :- not d.\n");
        let check = check_conservative_extension(&p, &t, Engine::Search).unwrap();
        assert!(check.holds());
    }

    #[test]
    fn extension_with_q_empty_and_killing_constraint() {
        let p = parse_program("a :- not b. b :- not a.").unwrap();
        assert!(check_conservative_extension(&p, &p, Engine::Search).unwrap().holds());
        let killed = parse_program("a :- not b. b :- not a. :- a. :- b.").unwrap();
        let check = check_conservative_extension(&killed, &p, Engine::Search).unwrap();
        assert!(matches!(check.witness, Some(Witness::Extension(_))));
    }

    #[test]
    fn splitting() {
        let p = parse_program("a :- not b. b :- not a. c :- a. d :- not c, b.").unwrap();
        let u: BTreeSet<Literal> = [atom("a"), atom("b")].into();
        let (bottom, top) = split(&p, &u).unwrap();
        assert_eq!(bottom.len(), 2);
        assert_eq!(top.len(), 2);
        assert_eq!(recompose(&p, &u, Engine::Search).unwrap(), enumerate_answer_sets(&p, Engine::Search).unwrap());
        let all = p.occurring_literals();
        assert_eq!(split(&p, &all).unwrap().1.len(), 0);
        let bad: BTreeSet<Literal> = [atom("c")].into();
        assert!(matches!(split(&p, &bad), Err(TransformError::NotSplitting(_))));
    }

    #[test]
    fn encodings_agree_on_the_circuit() {
        use crate::action::{tests::AC, ActionDescription, Records};
        use crate::translate::Compiler;
        let sd = ActionDescription::parse(AC).unwrap();
        let g = Records::parse(
            "hpd(close(s1),0). obs(-closed(s1),0). obs(-closed(s2),0).
             obs(-ab(b),0). obs(-ab(r),0). obs(prot(b),0).",
        )
        .unwrap();
        let c = Compiler::new(&sd, 1).raw();
        let full = c.history_program(&g, true).unwrap();
        let direct = c.direct_program(&g, true).unwrap();
        let check = check_conservative_extension(&full, &direct, Engine::Search).unwrap();
        assert!(check.holds(), "{:?}", check.witness);
    }
}
