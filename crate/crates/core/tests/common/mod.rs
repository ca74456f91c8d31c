//! Seeded generators and independent oracles shared by the integration tests.

#![allow(dead_code)]

use std::collections::BTreeSet;

use aldiag::action::{ab, ActionDescription, FluentLiteral, Occurrence, RecordedHistory, Records, State, Trajectory};
use aldiag::diagnosis::{CandidateDiagnosis, Configuration};
use aldiag::logic::{ChoiceElement, CountCheck, GroundProgram, Head, Literal, Rule, Term};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn atom(name: &str) -> Literal {
    Literal::atom(name, Vec::<Term>::new())
}

// ---------------------------------------------------------------------------
// Programs

#[derive(Debug, Clone, Copy)]
pub struct ProgramShape {
    pub atoms: usize,
    pub rules: usize,
    pub naf: bool,
    pub strong: bool,
    pub constraints: bool,
    pub extended: bool,
}

impl ProgramShape {
    pub fn normal(atoms: usize, rules: usize) -> Self {
        ProgramShape {
            atoms,
            rules,
            naf: true,
            strong: true,
            constraints: true,
            extended: false,
        }
    }
}

fn pick_literal(rng: &mut ChaCha8Rng, names: &[String], strong: bool) -> Literal {
    let l = atom(names.choose(rng).unwrap());
    if strong && rng.gen_bool(0.25) {
        l.complement()
    } else {
        l
    }
}

fn pick_body(rng: &mut ChaCha8Rng, names: &[String], shape: &ProgramShape) -> (Vec<Literal>, Vec<Literal>) {
    let pos = (0..rng.gen_range(0..=2)).map(|_| pick_literal(rng, names, shape.strong)).collect();
    let naf = if shape.naf {
        (0..rng.gen_range(0..=2)).map(|_| pick_literal(rng, names, shape.strong)).collect()
    } else {
        Vec::new()
    };
    (dedup(pos), dedup(naf))
}

fn dedup(v: Vec<Literal>) -> Vec<Literal> {
    let mut seen = BTreeSet::new();
    v.into_iter().filter(|l| seen.insert(l.clone())).collect()
}

/// A random ground program over the atoms `prefix0 ..`.
pub fn program_over(rng: &mut ChaCha8Rng, prefix: &str, shape: &ProgramShape) -> Vec<Rule> {
    let names: Vec<String> = (0..shape.atoms.max(1)).map(|i| format!("{prefix}{i}")).collect();
    let mut rules = Vec::new();
    for _ in 0..shape.rules {
        let (pos, naf) = pick_body(rng, &names, shape);
        let roll: f64 = rng.gen();
        let head = if shape.constraints && roll < 0.1 {
            Head::Falsum
        } else if shape.extended && roll < 0.2 {
            let elements = (0..rng.gen_range(1..=3))
                .map(|_| ChoiceElement {
                    atom: atom(names.choose(rng).unwrap()),
                    guard: Vec::new(),
                })
                .collect::<Vec<_>>();
            let upper = rng.gen_bool(0.5).then(|| rng.gen_range(1..=elements.len()));
            Head::Choice {
                lower: None,
                upper,
                elements,
            }
        } else if shape.extended && roll < 0.25 {
            let literals = dedup((0..rng.gen_range(1..=3)).map(|_| pick_literal(rng, &names, shape.strong)).collect());
            let check = if rng.gen_bool(0.5) { CountCheck::AtLeast } else { CountCheck::Below };
            Head::Count {
                check,
                bound: rng.gen_range(1..=2),
                literals,
            }
        } else {
            Head::Literal(pick_literal(rng, &names, shape.strong))
        };
        rules.push(Rule { head, pos, naf });
    }
    rules
}

pub fn random_program(rng: &mut ChaCha8Rng, shape: &ProgramShape) -> GroundProgram {
    GroundProgram::new(program_over(rng, "p", shape)).unwrap()
}

/// A program in two layers: rules over `b*` only, then rules over `t*`
/// whose bodies may mention both. The literals over `b*` split it.
pub fn layered_program(rng: &mut ChaCha8Rng) -> (GroundProgram, BTreeSet<Literal>) {
    let bottom_shape = ProgramShape::normal(rng.gen_range(1..=4), rng.gen_range(1..=5));
    let mut rules = program_over(rng, "b", &bottom_shape);
    let tops: Vec<String> = (0..rng.gen_range(1..=4)).map(|i| format!("t{i}")).collect();
    let bottoms: Vec<String> = (0..bottom_shape.atoms).map(|i| format!("b{i}")).collect();
    let all: Vec<String> = tops.iter().chain(bottoms.iter()).cloned().collect();
    let top_shape = ProgramShape::normal(all.len(), 0);
    for _ in 0..rng.gen_range(1..=5) {
        let (pos, naf) = pick_body(rng, &all, &top_shape);
        let head = if rng.gen_bool(0.1) {
            Head::Falsum
        } else {
            Head::Literal(pick_literal(rng, &tops, true))
        };
        rules.push(Rule { head, pos, naf });
    }
    let u = bottoms.iter().flat_map(|b| [atom(b), atom(b).complement()]).collect();
    (GroundProgram::new(rules).unwrap(), u)
}

/// Answer sets of a program without choice or counting rules, computed by
/// checking every consistent set of head literals against the definition.
pub fn oracle_answer_sets(p: &GroundProgram) -> BTreeSet<BTreeSet<Literal>> {
    assert!(!p.has_extended_rules());
    let heads: Vec<Literal> = p
        .rules
        .iter()
        .filter_map(|r| r.head_literal().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    assert!(heads.len() <= 20, "oracle limited to 20 head literals");
    let mut out = BTreeSet::new();
    for bits in 0u32..(1 << heads.len()) {
        let x: BTreeSet<Literal> = (0..heads.len()).filter(|i| bits >> i & 1 == 1).map(|i| heads[i].clone()).collect();
        if x.iter().any(|l| x.contains(&l.complement())) {
            continue;
        }
        if oracle_is_answer_set(p, &x) {
            out.insert(x);
        }
    }
    out
}

/// `x` is the least model of the reduct and violates no constraint.
pub fn oracle_is_answer_set(p: &GroundProgram, x: &BTreeSet<Literal>) -> bool {
    let reduct: Vec<&Rule> = p.rules.iter().filter(|r| r.naf.iter().all(|l| !x.contains(l))).collect();
    let mut m: BTreeSet<Literal> = BTreeSet::new();
    loop {
        let mut changed = false;
        for r in &reduct {
            if r.pos.iter().all(|l| m.contains(l)) {
                match &r.head {
                    Head::Literal(h) => changed |= m.insert(h.clone()),
                    Head::Falsum => return false,
                    _ => unreachable!(),
                }
            }
        }
        if !changed {
            break;
        }
    }
    m == *x
}

// ---------------------------------------------------------------------------
// Action descriptions

pub fn sym(s: &str) -> Term {
    Term::sym(s)
}

fn literal_text(rng: &mut ChaCha8Rng, fluents: &[String]) -> String {
    let f = fluents.choose(rng).unwrap();
    if rng.gen_bool(0.5) {
        format!("-{f}")
    } else {
        f.clone()
    }
}

/// A random description with one component `c`, up to four other fluents,
/// one agent action `a`, up to two exogenous actions and up to four laws.
pub fn random_description(rng: &mut ChaCha8Rng) -> ActionDescription {
    let plain = rng.gen_range(1..=4);
    let mut fluents: Vec<String> = (0..plain).map(|i| format!("f{i}")).collect();
    let exogenous: Vec<String> = (0..rng.gen_range(1..=2)).map(|i| format!("x{i}")).collect();
    let mut text = String::from("comp(c). a_act(a).\n");
    for f in &fluents {
        text.push_str(&format!("fluent({f}).\n"));
    }
    for x in &exogenous {
        text.push_str(&format!("x_act({x}).\n"));
    }
    fluents.push("ab(c)".into());
    let actions: Vec<String> = std::iter::once("a".to_string()).chain(exogenous.iter().cloned()).collect();
    let mut laws = Vec::new();
    if rng.gen_bool(0.7) {
        laws.push(format!("causes({}, ab(c), []).", exogenous[0]));
    }
    let target = rng.gen_range(1..=4);
    while laws.len() < target {
        let pre: Vec<String> = (0..rng.gen_range(0..=1)).map(|_| literal_text(rng, &fluents)).collect();
        let pre = pre.join(", ");
        let roll: f64 = rng.gen();
        let law = if roll < 0.6 {
            format!("causes({}, {}, [{pre}]).", actions.choose(rng).unwrap(), literal_text(rng, &fluents))
        } else if roll < 0.85 {
            let pre = if pre.is_empty() { literal_text(rng, &fluents) } else { pre };
            format!("caused({}, [{pre}]).", literal_text(rng, &fluents))
        } else {
            format!("impossible_if({}, [{pre}]).", actions.choose(rng).unwrap())
        };
        laws.push(law);
    }
    for l in laws {
        text.push_str(&l);
        text.push('\n');
    }
    ActionDescription::parse(&text).unwrap_or_else(|e| panic!("{e}\n{text}"))
}

/// A random walk of `steps` transitions taking each action with
/// probability `p`; `None` when `sd` has no state.
pub fn random_walk(rng: &mut ChaCha8Rng, sd: &ActionDescription, steps: usize, p: f64) -> Option<Trajectory> {
    let states = sd.states().unwrap();
    let mut w = Trajectory::initial(states.choose(rng)?.clone());
    let actions: Vec<Term> = sd.signature.actions().cloned().collect();
    for _ in 0..steps {
        let s = w.last().clone();
        let mut a: BTreeSet<Term> = actions.iter().filter(|_| rng.gen_bool(p)).cloned().collect();
        let mut next = sd.successors(&s, &a).unwrap();
        if next.is_empty() {
            a.clear();
            next = sd.successors(&s, &a).unwrap();
        }
        w.states.push(next.choose(rng).expect("the empty action always has a successor").clone());
        w.actions.push(a);
    }
    Some(w)
}

fn observe_state(rng: &mut ChaCha8Rng, s: &State, t: usize, p: f64, out: &mut Records) {
    for l in s.literals() {
        if rng.gen_bool(p) {
            out.observations.insert(aldiag::action::Observation::new(l.clone(), t));
        }
    }
}

/// A description, a walk through it and a history recorded from the walk.
#[derive(Debug, Clone)]
pub struct HistoryCase {
    pub sd: ActionDescription,
    pub walk: Trajectory,
    pub history: RecordedHistory,
}

/// Every action of the walk is recorded. The initial state is observed in
/// full when `complete`, otherwise in part; later states are sampled. A
/// few cases get a false observation so that some histories have no model.
pub fn history_case(rng: &mut ChaCha8Rng, complete: bool) -> HistoryCase {
    loop {
        let sd = random_description(rng);
        let horizon = rng.gen_range(0..=3);
        let Some(walk) = random_walk(rng, &sd, horizon, 0.35) else { continue };
        let mut records = Records::new();
        observe_state(rng, &walk.states[0], 0, if complete { 1.0 } else { 0.4 }, &mut records);
        for t in 1..=horizon {
            observe_state(rng, &walk.states[t], t, 0.2, &mut records);
        }
        for (t, a) in walk.actions.iter().enumerate() {
            for x in a {
                records.occurrences.insert(Occurrence::new(x.clone(), t));
            }
        }
        if rng.gen_bool(0.1) {
            let t = rng.gen_range(0..=horizon);
            let l = walk.states[t].literals().iter().collect::<Vec<_>>().choose(rng).map(|l| l.complement());
            if let Some(l) = l {
                records.observations.retain(|o| !(o.time == t && o.literal == l.complement()));
                records = records.obs(l, t);
            }
        }
        let history = RecordedHistory::new(horizon, records).unwrap();
        return HistoryCase { sd, walk, history };
    }
}

/// A configuration built from a walk with some exogenous occurrences
/// left unrecorded.
#[derive(Debug, Clone)]
pub struct DiagnosisCase {
    pub sd: ActionDescription,
    pub walk: Trajectory,
    pub configuration: Configuration,
    pub hidden: BTreeSet<Occurrence>,
}

pub fn diagnosis_case(rng: &mut ChaCha8Rng, complete: bool) -> DiagnosisCase {
    loop {
        let sd = random_description(rng);
        let n = rng.gen_range(1..=2);
        let m = rng.gen_range(n..=3);
        let Some(walk) = random_walk(rng, &sd, m, 0.5) else { continue };
        let mut history = Records::new();
        observe_state(rng, &walk.states[0], 0, if complete { 1.0 } else { 0.5 }, &mut history);
        let mut hidden = BTreeSet::new();
        for (t, a) in walk.actions.iter().enumerate() {
            for x in a {
                let occ = Occurrence::new(x.clone(), t);
                let exo = sd.signature.exogenous_actions.contains(x);
                if exo && t < n && rng.gen_bool(0.8) {
                    hidden.insert(occ);
                } else if t < n {
                    history.occurrences.insert(occ);
                }
            }
        }
        // Actions after n stay in the observations so the configuration
        // fixes what happened there.
        let mut later = Records::new();
        for t in n..m {
            for x in &walk.actions[t] {
                later.occurrences.insert(Occurrence::new(x.clone(), t));
            }
        }
        for t in n..=m {
            observe_state(rng, &walk.states[t], t, if t == m { 0.8 } else { 0.3 }, &mut later);
        }
        let Ok(history) = RecordedHistory::new(n, history) else { continue };
        let Ok(configuration) = Configuration::new(history, later) else { continue };
        return DiagnosisCase {
            sd,
            walk,
            configuration,
            hidden,
        };
    }
}

/// Candidates found by enumerating every set of unrecorded exogenous
/// occurrences before `n` and reading suspects off each model.
pub fn brute_candidates(sd: &ActionDescription, c: &Configuration) -> BTreeSet<CandidateDiagnosis> {
    let n = c.history_end();
    let m = c.current_time();
    let records = c.records();
    let pool: Vec<Occurrence> = (0..n)
        .flat_map(|t| sd.signature.exogenous_actions.iter().map(move |x| Occurrence::new(x.clone(), t)))
        .filter(|o| !records.occurrences.contains(o))
        .collect();
    let mut out = BTreeSet::new();
    for bits in 1u32..(1 << pool.len()) {
        let e: BTreeSet<Occurrence> = (0..pool.len()).filter(|i| bits >> i & 1 == 1).map(|i| pool[i].clone()).collect();
        let mut with = records.clone();
        with.occurrences.extend(e.iter().cloned());
        for model in sd.models(m, &with).unwrap() {
            let suspects = sd
                .signature
                .components
                .iter()
                .filter(|k| model.states[m].contains(&FluentLiteral::pos(ab(k))))
                .cloned()
                .collect();
            out.insert(CandidateDiagnosis {
                explanation: e.clone(),
                suspects,
            });
        }
    }
    out
}
