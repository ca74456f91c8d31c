//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits nonzero if any fails.

mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use aldiag::action::{ab, ActionDescription, FluentLiteral, Occurrence, Records};
use aldiag::diagnosis::{CandidateDiagnosis, Configuration, Diagnoser, DiagnosisOptions, Event, Selection};
use aldiag::logic::{enumerate_answer_sets, Engine, GroundProgram, Literal, Term};
use aldiag::scenario::{run, RunOptions, RunStatus, Scenario};
use aldiag::transform::{check_conservative_extension, extended_eval, partial_eval, recompose, trim};
use aldiag::translate::{defined_trajectory, Compiler, Module};
use aldiag::world::World;
use common::*;
use rand::seq::SliceRandom;
use rand::Rng;

const AC_BASIC: &str = include_str!("../../../scenarios/ac_basic.scn");
const AC_REPAIR: &str = include_str!("../../../scenarios/ac_repair.scn");
const AC_SURGE_FIRST: &str = include_str!("../../../scenarios/ac_surge_first.scn");
const EXT_SA: &str = include_str!("../../../scenarios/ext_sa.scn");

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn shown(ds: &[CandidateDiagnosis]) -> Vec<String> {
    ds.iter().map(|d| d.to_string()).collect()
}

fn options(module: Module) -> DiagnosisOptions {
    DiagnosisOptions {
        module,
        ..DiagnosisOptions::default()
    }
}

fn ac_candidates() -> Check {
    let sc = Scenario::parse(AC_BASIC).map_err(err)?;
    let c = sc.configuration().map_err(err)?;
    let dx = Diagnoser::new(&sc.system, options(Module::D0));
    let got = shown(&dx.candidates(&c).map_err(err)?);
    let want = ["<{brk@0}, {b}>", "<{brk@0, srg@0}, {b, r}>", "<{srg@0}, {r}>"];
    ensure(got == want, || format!("candidates {got:?}"))?;
    Ok(got.join(" "))
}

fn symptom_detection() -> Check {
    let sc = Scenario::parse(AC_BASIC).map_err(err)?;
    let c = sc.configuration().map_err(err)?;
    let compiler = Compiler::new(&sc.system, c.current_time());
    for awareness in [false, true] {
        let conf = compiler
            .conf(&c.history.records, &c.observations, awareness)
            .map_err(err)?;
        let sets = enumerate_answer_sets(&conf, Engine::Search).map_err(err)?;
        ensure(sets.is_empty(), || format!("Conf has {} answer sets", sets.len()))?;
    }
    let models = sc.system.models_of_history(&c.history).map_err(err)?;
    ensure(models.len() == 1, || format!("{} models of the history", models.len()))?;
    let on = FluentLiteral::pos(Term::func("on", [Term::sym("b")]));
    ensure(models[0].states[1].contains(&on), || format!("model {}", models[0]))?;
    let p = Compiler::new(&sc.system, 1)
        .history_program(&c.history.records, false)
        .map_err(err)?;
    let sets = enumerate_answer_sets(&p, Engine::Search).map_err(err)?;
    let h = Literal::atom("h", [on.to_term(), Term::Int(1)]);
    ensure(sets.len() == 1 && sets[0].contains(&h), || format!("{} answer sets", sets.len()))?;
    Ok("Conf unsatisfiable, one model with on(b) at 1".into())
}

fn trajectory_equivalence() -> Check {
    let mut r = rng(3);
    let mut nonempty = 0;
    let per = 120;
    for complete in [true, false] {
        for i in 0..per {
            let case = history_case(&mut r, complete);
            let g = &case.history;
            let p = Compiler::new(&case.sd, g.horizon)
                .history_program(&g.records, !complete)
                .map_err(err)?;
            let mut from_sets = BTreeSet::new();
            for x in enumerate_answer_sets(&p, Engine::Search).map_err(err)? {
                let t = defined_trajectory(&x, &case.sd, g.horizon)
                    .ok_or_else(|| format!("case {i}: incomplete answer set {x}"))?;
                from_sets.insert(t);
            }
            let models: BTreeSet<_> = case.sd.models_of_history(g).map_err(err)?.into_iter().collect();
            if !models.is_empty() {
                nonempty += 1;
            }
            ensure(from_sets == models, || {
                format!(
                    "complete={complete} case {i}: {} answer sets vs {} models\n{}\n{}",
                    from_sets.len(),
                    models.len(),
                    case.sd.to_text(),
                    g.records.to_text()
                )
            })?;
        }
    }
    Ok(format!("{} descriptions, {nonempty} with models", 2 * per))
}

fn candidate_completeness() -> Check {
    let mut r = rng(4);
    let per = 60;
    let (mut total, mut symptoms) = (0, 0);
    for complete in [true, false] {
        for i in 0..per {
            let case = diagnosis_case(&mut r, complete);
            let c = &case.configuration;
            let dx = Diagnoser::new(&case.sd, options(Module::D0));
            let got: BTreeSet<_> = dx.candidates(c).map_err(err)?.into_iter().collect();
            let want = brute_candidates(&case.sd, c);
            total += want.len();
            if matches!(dx.is_symptom(c), Ok(true)) {
                symptoms += 1;
            }
            ensure(got == want, || {
                format!(
                    "complete={complete} case {i}: {:?} vs brute {:?}\n{}\n{}{}",
                    got.iter().map(|d| d.to_string()).collect::<Vec<_>>(),
                    want.iter().map(|d| d.to_string()).collect::<Vec<_>>(),
                    case.sd.to_text(),
                    c.history.records.to_text(),
                    c.observations.to_text()
                )
            })?;
        }
    }
    Ok(format!("{} configurations, {symptoms} symptoms, {total} candidates", 2 * per))
}

fn relevance_pruning() -> Check {
    let sc = Scenario::parse(EXT_SA).map_err(err)?;
    let c = sc.configuration().map_err(err)?;
    let d1: Vec<_> = Diagnoser::new(&sc.system, options(Module::D1)).candidates(&c).map_err(err)?;
    let want = ["<{brk@0}, {b}>", "<{brk@0, srg@0}, {b, r}>", "<{srg@0}, {r}>"];
    ensure(shown(&d1) == want, || format!("D1 gives {:?}", shown(&d1)))?;
    let d0: Vec<_> = Diagnoser::new(&sc.system, options(Module::D0)).candidates(&c).map_err(err)?;
    let a = Occurrence::new(Term::sym("a"), 0);
    let extras: Vec<_> = d0.iter().filter(|d| !d1.contains(d)).collect();
    ensure(d1.iter().all(|d| d0.contains(d)), || "D0 lost a D1 candidate".into())?;
    ensure(!extras.is_empty(), || "D0 has no extra candidates".into())?;
    for d in &extras {
        let mut base = (*d).clone();
        ensure(base.explanation.remove(&a), || format!("extra {d} lacks a"))?;
        base.suspects.remove(&Term::sym("c"));
        ensure(d1.contains(&base), || format!("extra {d} is not a superset of a D1 candidate"))?;
    }
    Ok(format!("D1 {} candidates, D0 {} ({} with a)", d1.len(), d0.len(), extras.len()))
}

fn world_with(sc: &Scenario, occurs: &[&str]) -> Result<World, String> {
    let mut sc = sc.clone();
    sc.world.occurs = occurs.iter().map(|a| Occurrence::new(Term::sym(*a), 0)).collect();
    sc.build_world().map_err(err)
}

fn find_diag_behaviour() -> Check {
    let sc = Scenario::parse(AC_SURGE_FIRST).map_err(err)?;
    let sd = sc.system.with_repair_actions();
    let bound = sd.signature.components.len() + 1;
    let mut orders: Vec<(String, Selection)> = vec![("last".into(), Selection::Last), ("first".into(), Selection::First)];
    orders.extend((0..12).map(|s| (format!("seeded:{s}"), Selection::Seeded(s))));
    let reverse_priority: Arc<dyn Fn(&[CandidateDiagnosis]) -> usize + Send + Sync> = Arc::new(|cs: &[CandidateDiagnosis]| {
        (0..cs.len()).max_by_key(|&i| (cs[i].explanation.len(), cs[i].suspects.len())).unwrap()
    });
    orders.push(("largest".into(), Selection::Custom(reverse_priority)));
    let mut checked = 0;
    let mut firsts = BTreeSet::new();
    for actual in [&["srg"][..], &["brk"], &["brk", "srg"]] {
        for (name, selection) in &orders {
            let started = Instant::now();
            let world = world_with(&sc, actual)?;
            let mut c = sc.configuration().map_err(err)?;
            let dx = Diagnoser::new(
                &sd,
                DiagnosisOptions {
                    selection: selection.clone(),
                    ..DiagnosisOptions::default()
                },
            );
            let mut rounds = Vec::new();
            let mut log = |e: &Event| {
                if let Event::Candidate { candidate, .. } = e {
                    rounds.push(candidate.to_string());
                }
            };
            let found = dx.find_diag(&mut c, &world, &mut log).map_err(err)?;
            let tag = format!("actual {actual:?} order {name}");
            ensure(rounds.len() <= bound, || format!("{tag}: {} rounds", rounds.len()))?;
            let d = found.ok_or_else(|| format!("{tag}: no diagnosis"))?;
            let m = c.current_time();
            for comp in &d.suspects {
                let faulty = world.state(m).is_some_and(|s| s.holds(&ab(comp)));
                ensure(faulty, || format!("{tag}: {comp} in {d} is not faulty"))?;
            }
            ensure(started.elapsed() < Duration::from_secs(5), || format!("{tag}: too slow"))?;
            if actual == ["srg"] {
                firsts.insert(rounds[0].clone());
            }
            checked += 1;
        }
    }
    let srg_first = "<{srg@0}, {b, r}>".to_string();
    let brk_first = "<{brk@0}, {b}>".to_string();
    ensure(firsts.contains(&srg_first) && firsts.contains(&brk_first), || format!("first picks {firsts:?}"))?;
    Ok(format!("{checked} runs within {bound} rounds"))
}

fn repair_loop() -> Check {
    let sc = Scenario::parse(AC_REPAIR).map_err(err)?;
    let report = run("ac_repair", &sc, &RunOptions::default()).map_err(err)?;
    ensure(report.status == RunStatus::Resolved, || format!("status {}", report.status))?;
    let milestones = [
        "symptom history_end=1 current=1",
        "found explanation={brk@0} suspects={b}",
        "repair components={b} time=1",
        "observe literal=-on(b) time=2",
        "symptom history_end=1 current=2",
        "found explanation={srg@0} suspects={r}",
        "repair components={r} time=2",
        "observe literal=on(b) time=3",
        "resolved",
    ];
    let mut at = 0;
    for line in &report.trace {
        if at < milestones.len() && line == milestones[at] {
            at += 1;
        }
    }
    ensure(at == milestones.len(), || {
        format!("missing milestone {:?} in\n{}", milestones.get(at), report.trace.join("\n"))
    })?;
    let sd = sc.system.with_repair_actions();
    let dx = Diagnoser::new(&sd, sc.options(Engine::Search));
    let last = report.diagnoses.last().ok_or("no diagnoses")?;
    let fin: Configuration = report
        .final_configuration
        .with_history(&last.explanation_records())
        .map_err(err)?;
    ensure(!dx.is_symptom(&fin).map_err(err)?, || "final configuration is a symptom".into())?;
    let now = report.world.now();
    let on = report.world.observe(now, &Term::func("on", [Term::sym("b")])).map_err(err)?;
    ensure(on.positive, || format!("world shows {on} at {now}"))?;
    Ok(format!("{} rounds, on(b) at {now}", report.diagnoses.len()))
}

fn sample_literal(r: &mut rand_chacha::ChaCha8Rng, p: &GroundProgram) -> Option<Literal> {
    let heads: Vec<Literal> = p.rules.iter().filter_map(|r| r.head_literal().cloned()).collect();
    heads.choose(r).cloned()
}

fn same_sets(p: &GroundProgram, q: &GroundProgram) -> Result<bool, String> {
    Ok(enumerate_answer_sets(p, Engine::Search).map_err(err)? == enumerate_answer_sets(q, Engine::Search).map_err(err)?)
}

/// `qs` occur nowhere under `not` and their complements occur nowhere.
fn trimmable(p: &GroundProgram, qs: &[Literal]) -> bool {
    p.rules.iter().all(|r| {
        r.naf.iter().all(|l| !qs.contains(l)) && r.literals().all(|l| !qs.contains(&l.complement()))
    })
}

fn transformation_suite() -> Check {
    const N: usize = 200;
    let mut r = rng(8);
    let (mut evals, mut extended, mut trims, mut splits) = (0, 0, 0, 0);
    let mut attempts = 0;
    while evals < N || extended < N || trims < N {
        attempts += 1;
        ensure(attempts < 50 * N, || "too few applicable programs".into())?;
        let shape = ProgramShape::normal(r.gen_range(2..=6), r.gen_range(2..=8));
        let p = random_program(&mut r, &shape);
        let Some(q) = sample_literal(&mut r, &p) else { continue };
        if let Ok(e) = partial_eval(&p, &q) {
            ensure(same_sets(&p, &e)?, || format!("partial evaluation of {q} changed\n{p}into\n{e}"))?;
            evals += 1;
        }
        let qs: Vec<Literal> = (0..r.gen_range(1..=3)).filter_map(|_| sample_literal(&mut r, &p)).collect();
        let mut distinct = BTreeSet::new();
        let qs: Vec<Literal> = qs.into_iter().filter(|q| distinct.insert(q.clone())).collect();
        let Ok(e) = extended_eval(&p, &qs) else { continue };
        ensure(same_sets(&p, &e)?, || format!("extended evaluation of {qs:?} changed\n{p}into\n{e}"))?;
        extended += 1;
        if trimmable(&e, &qs) && trimmable(&p, &qs) {
            let t = trim(&p, &qs).map_err(err)?;
            let check = check_conservative_extension(&p, &t, Engine::Search).map_err(err)?;
            ensure(check.holds(), || {
                format!("trimming {qs:?} is not conservative: {:?}\n{p}into\n{t}", check.witness)
            })?;
            trims += 1;
        }
    }
    for _ in 0..N {
        let (p, u) = layered_program(&mut r);
        let direct = enumerate_answer_sets(&p, Engine::Search).map_err(err)?;
        let split = recompose(&p, &u, Engine::Search).map_err(err)?;
        ensure(direct == split, || format!("splitting changed\n{p}"))?;
        splits += 1;
    }
    let src = AC_BASIC.split("%% history").next().unwrap();
    for prot in ["prot(b)", "-prot(b)"] {
        let sd = ActionDescription::parse(src.trim_start_matches("%% system")).map_err(err)?;
        let g = Records::parse(&format!(
            "hpd(close(s1),0). obs(-closed(s1),0). obs(-closed(s2),0).
             obs(-ab(b),0). obs(-ab(r),0). obs({prot},0)."
        ))
        .map_err(err)?;
        let c = Compiler::new(&sd, 1).raw();
        let full = c.history_program(&g, true).map_err(err)?;
        let direct = c.direct_program(&g, true).map_err(err)?;
        let check = check_conservative_extension(&full, &direct, Engine::Search).map_err(err)?;
        ensure(check.holds(), || format!("direct encoding differs: {:?}", check.witness))?;
    }
    Ok(format!(
        "eval {evals}, extended {extended}, trim {trims}, split {splits}, direct encoding agrees"
    ))
}

fn solver_self_consistency() -> Check {
    let mut r = rng(9);
    let (mut naf_free, mut oracle) = (0, 0);
    for i in 0..500 {
        let mut shape = ProgramShape::normal(r.gen_range(1..=10), r.gen_range(1..=12));
        shape.extended = r.gen_bool(0.3);
        shape.naf = r.gen_bool(0.8);
        shape.strong = r.gen_bool(0.5);
        let p = random_program(&mut r, &shape);
        let brute = enumerate_answer_sets(&p, Engine::Brute).map_err(err)?;
        let search = enumerate_answer_sets(&p, Engine::Search).map_err(err)?;
        ensure(brute == search, || format!("case {i}: engines disagree on\n{p}"))?;
        if p.is_naf_free() {
            naf_free += 1;
            ensure(search.len() <= 1, || format!("case {i}: naf-free program with {} answer sets", search.len()))?;
        }
        if !p.has_extended_rules() {
            oracle += 1;
            let want = oracle_answer_sets(&p);
            let got: BTreeSet<_> = search.into_iter().map(|x| x.0).collect();
            ensure(got == want, || format!("case {i}: oracle disagrees on\n{p}"))?;
        }
    }
    Ok(format!("500 programs, {naf_free} naf-free, {oracle} checked against the oracle"))
}

fn main() -> ExitCode {
    let criteria: [(&str, u64, fn() -> Check); 9] = [
        ("ac candidate diagnoses", 5, ac_candidates),
        ("symptom detection", 5, symptom_detection),
        ("answer sets define the models", 60, trajectory_equivalence),
        ("candidate completeness", 120, candidate_completeness),
        ("relevance pruning", 5, relevance_pruning),
        ("find_diag behaviour", 5 * 45, find_diag_behaviour),
        ("repair loop", 5, repair_loop),
        ("transformation suite", 120, transformation_suite),
        ("solver self-consistency", 60, solver_self_consistency),
    ];
    let mut failed = 0;
    for (i, (name, limit, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let result = check();
        let took = started.elapsed();
        let result = match result {
            Ok(s) if took > Duration::from_secs(*limit) => Err(format!("{s}; over the {limit}s limit")),
            other => other,
        };
        match result {
            Ok(detail) => println!("PASS {} {name} ({:.2}s/{limit}s): {detail}", i + 1, took.as_secs_f64()),
            Err(e) => {
                failed += 1;
                println!("FAIL {} {name} ({:.2}s/{limit}s): {e}", i + 1, took.as_secs_f64());
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
