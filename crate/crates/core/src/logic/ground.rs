//! Schematic (non-ground) rules and sort-driven grounding.
//!
//! Every variable of a schematic rule is either *sorted* (it ranges over a
//! named finite set of the signature) or *derived* (it is computed from
//! already-bound variables, e.g. `T' = T + 1`). Grounding enumerates the
//! cartesian product of the sorted variables in declaration order, computes
//! the derived ones, keeps the instances whose arithmetic guards hold and
//! substitutes. Output order is rule index first, instantiation second.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use super::program::{ChoiceElement, CountCheck, GroundProgram, Head, Rule, Signature};
use super::term::{write_joined, GroundAtom, Literal, Term};
use super::LogicError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArithOp {
    Add,
    Sub,
}

/// A term that may contain variables and evaluable operations.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Pattern {
    Var(String),
    Int(i64),
    Sym(String),
    Func(String, Vec<Pattern>),
    List(Vec<Pattern>),
    Arith(ArithOp, Box<Pattern>, Box<Pattern>),
    /// Term-level complement: `-f` is `neg(f)`, and `-neg(f)` is `f`.
    Complement(Box<Pattern>),
    /// Integer interval `lo..hi`; only meaningful in fact heads.
    Range(Box<Pattern>, Box<Pattern>),
}

impl Pattern {
    pub fn var(name: &str) -> Self {
        Pattern::Var(name.to_string())
    }

    pub fn sym(name: &str) -> Self {
        Pattern::Sym(name.to_string())
    }

    pub fn func(name: &str, args: Vec<Pattern>) -> Self {
        if args.is_empty() {
            Pattern::Sym(name.to_string())
        } else {
            Pattern::Func(name.to_string(), args)
        }
    }

    pub fn plus(self, k: i64) -> Self {
        Pattern::Arith(ArithOp::Add, Box::new(self), Box::new(Pattern::Int(k)))
    }

    pub fn complement(self) -> Self {
        Pattern::Complement(Box::new(self))
    }

    pub fn from_term(t: &Term) -> Self {
        match t {
            Term::Int(v) => Pattern::Int(*v),
            Term::Sym(s) => Pattern::Sym(s.clone()),
            Term::Func(n, args) => Pattern::Func(n.clone(), args.iter().map(Pattern::from_term).collect()),
            Term::List(items) => Pattern::List(items.iter().map(Pattern::from_term).collect()),
        }
    }

    fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            Pattern::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Pattern::Int(_) | Pattern::Sym(_) => {}
            Pattern::Func(_, args) | Pattern::List(args) => {
                args.iter().for_each(|a| a.collect_vars(out));
            }
            Pattern::Arith(_, l, r) | Pattern::Range(l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
            Pattern::Complement(inner) => inner.collect_vars(out),
        }
    }

    fn has_range(&self) -> bool {
        match self {
            Pattern::Range(..) => true,
            Pattern::Func(_, args) | Pattern::List(args) => args.iter().any(Pattern::has_range),
            Pattern::Arith(_, l, r) => l.has_range() || r.has_range(),
            Pattern::Complement(inner) => inner.has_range(),
            _ => false,
        }
    }

    /// Evaluates the pattern under `env`.
    pub fn eval(&self, env: &Env) -> Result<Term, String> {
        Ok(match self {
            Pattern::Var(v) => env
                .get(v)
                .cloned()
                .ok_or_else(|| format!("variable {v} is unbound"))?,
            Pattern::Int(i) => Term::Int(*i),
            Pattern::Sym(s) => Term::Sym(s.clone()),
            Pattern::Func(n, args) => Term::Func(
                n.clone(),
                args.iter().map(|a| a.eval(env)).collect::<Result<_, _>>()?,
            ),
            Pattern::List(items) => {
                Term::List(items.iter().map(|a| a.eval(env)).collect::<Result<_, _>>()?)
            }
            Pattern::Arith(op, l, r) => {
                let (l, r) = (l.eval(env)?, r.eval(env)?);
                match (l.as_int(), r.as_int()) {
                    (Some(a), Some(b)) => Term::Int(match op {
                        ArithOp::Add => a + b,
                        ArithOp::Sub => a - b,
                    }),
                    _ => return Err(format!("arithmetic on non-integer terms {l} and {r}")),
                }
            }
            Pattern::Complement(inner) => inner.eval(env)?.complement(),
            Pattern::Range(..) => return Err("interval outside a fact".into()),
        })
    }

    /// Expands intervals: one term per combination of interval members.
    fn expand(&self, env: &Env) -> Result<Vec<Term>, String> {
        match self {
            Pattern::Range(lo, hi) => {
                let lo = lo.eval(env)?.as_int().ok_or("interval bound is not an integer")?;
                let hi = hi.eval(env)?.as_int().ok_or("interval bound is not an integer")?;
                Ok((lo..=hi).map(Term::Int).collect())
            }
            Pattern::Func(n, args) => {
                let parts = args.iter().map(|a| a.expand(env)).collect::<Result<Vec<_>, _>>()?;
                Ok(product(&parts).into_iter().map(|args| Term::Func(n.clone(), args)).collect())
            }
            other => Ok(vec![other.eval(env)?]),
        }
    }
}

fn product(parts: &[Vec<Term>]) -> Vec<Vec<Term>> {
    let mut out = vec![Vec::new()];
    for choices in parts {
        let mut next = Vec::with_capacity(out.len() * choices.len());
        for prefix in &out {
            for c in choices {
                let mut v = prefix.clone();
                v.push(c.clone());
                next.push(v);
            }
        }
        out = next;
    }
    out
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pattern::Var(v) => f.write_str(v),
            Pattern::Int(i) => write!(f, "{i}"),
            Pattern::Sym(s) => f.write_str(s),
            Pattern::Func(n, args) => {
                write!(f, "{n}(")?;
                write_joined(f, args, ",")?;
                f.write_str(")")
            }
            Pattern::List(items) => {
                f.write_str("[")?;
                write_joined(f, items, ", ")?;
                f.write_str("]")
            }
            Pattern::Arith(op, l, r) => {
                let sym = match op {
                    ArithOp::Add => "+",
                    ArithOp::Sub => "-",
                };
                write!(f, "{l}{sym}{r}")
            }
            Pattern::Complement(inner) => write!(f, "-{inner}"),
            Pattern::Range(lo, hi) => write!(f, "{lo}..{hi}"),
        }
    }
}

/// Variable bindings during instantiation.
pub type Env = BTreeMap<String, Term>;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LiteralPattern {
    pub negative: bool,
    pub predicate: String,
    pub args: Vec<Pattern>,
}

impl LiteralPattern {
    pub fn new(predicate: &str, args: Vec<Pattern>) -> Self {
        LiteralPattern {
            negative: false,
            predicate: predicate.to_string(),
            args,
        }
    }

    pub fn negated(mut self) -> Self {
        self.negative = !self.negative;
        self
    }

    pub fn from_literal(l: &Literal) -> Self {
        LiteralPattern {
            negative: l.negative,
            predicate: l.atom.predicate.clone(),
            args: l.atom.args.iter().map(Pattern::from_term).collect(),
        }
    }

    pub fn eval(&self, env: &Env) -> Result<Literal, String> {
        let args = self.args.iter().map(|a| a.eval(env)).collect::<Result<_, _>>()?;
        Ok(Literal {
            atom: GroundAtom {
                predicate: self.predicate.clone(),
                args,
            },
            negative: self.negative,
        })
    }

    fn collect_vars(&self, out: &mut Vec<String>) {
        self.args.iter().for_each(|a| a.collect_vars(out));
    }

    pub fn is_ground(&self) -> bool {
        let mut v = Vec::new();
        self.collect_vars(&mut v);
        v.is_empty()
    }
}

impl fmt::Display for LiteralPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negative {
            f.write_str("-")?;
        }
        f.write_str(&self.predicate)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            write_joined(f, &self.args, ",")?;
            f.write_str(")")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SortedVar {
    pub name: String,
    pub sort: String,
}

impl SortedVar {
    pub fn new(name: &str, sort: &str) -> Self {
        SortedVar {
            name: name.to_string(),
            sort: sort.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ElementPattern {
    pub atom: LiteralPattern,
    pub guard: Vec<LiteralPattern>,
    /// Variables local to this element, ranging over their sorts.
    pub local_vars: Vec<SortedVar>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum HeadPattern {
    Literal(LiteralPattern),
    Falsum,
    Choice {
        lower: Option<usize>,
        upper: Option<usize>,
        elements: Vec<ElementPattern>,
    },
    Count {
        check: CountCheck,
        bound: usize,
        literals: Vec<LiteralPattern>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CompareOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CompareOp {
    fn holds(self, l: &Term, r: &Term) -> bool {
        let ord = match (l.as_int(), r.as_int()) {
            (Some(a), Some(b)) => a.cmp(&b),
            _ => l.cmp(r),
        };
        use std::cmp::Ordering::*;
        match self {
            CompareOp::Lt => ord == Less,
            CompareOp::Le => ord != Greater,
            CompareOp::Gt => ord == Greater,
            CompareOp::Ge => ord != Less,
            CompareOp::Eq => ord == Equal,
            CompareOp::Ne => ord != Equal,
        }
    }

    pub(crate) fn symbol(self) -> &'static str {
        match self {
            CompareOp::Lt => "<",
            CompareOp::Le => "<=",
            CompareOp::Gt => ">",
            CompareOp::Ge => ">=",
            CompareOp::Eq => "=",
            CompareOp::Ne => "!=",
        }
    }
}

/// An arithmetic comparison in a rule body.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Guard {
    pub lhs: Pattern,
    pub op: CompareOp,
    pub rhs: Pattern,
}

impl Guard {
    pub fn new(lhs: Pattern, op: CompareOp, rhs: Pattern) -> Self {
        Guard { lhs, op, rhs }
    }
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.lhs, self.op.symbol(), self.rhs)
    }
}

/// A rule with sorted variables, shorthand for its ground instances.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SchematicRule {
    pub head: HeadPattern,
    pub pos: Vec<LiteralPattern>,
    pub naf: Vec<LiteralPattern>,
    pub guards: Vec<Guard>,
    pub vars: Vec<SortedVar>,
    /// Variables computed from earlier bindings, in evaluation order.
    pub derived: Vec<(String, Pattern)>,
}

impl SchematicRule {
    pub fn new(head: HeadPattern) -> Self {
        SchematicRule {
            head,
            pos: Vec::new(),
            naf: Vec::new(),
            guards: Vec::new(),
            vars: Vec::new(),
            derived: Vec::new(),
        }
    }

    pub fn literal(head: LiteralPattern) -> Self {
        Self::new(HeadPattern::Literal(head))
    }

    pub fn constraint() -> Self {
        Self::new(HeadPattern::Falsum)
    }

    pub fn pos(mut self, l: LiteralPattern) -> Self {
        self.pos.push(l);
        self
    }

    pub fn naf(mut self, l: LiteralPattern) -> Self {
        self.naf.push(l);
        self
    }

    pub fn guard(mut self, g: Guard) -> Self {
        self.guards.push(g);
        self
    }

    pub fn var(mut self, name: &str, sort: &str) -> Self {
        self.vars.push(SortedVar::new(name, sort));
        self
    }

    pub fn derive(mut self, name: &str, value: Pattern) -> Self {
        self.derived.push((name.to_string(), value));
        self
    }

    /// Variables of everything but the choice elements, in order of first
    /// occurrence. Element variables not bound here are local to the element.
    pub fn global_variables(&self) -> Vec<String> {
        let mut out = Vec::new();
        match &self.head {
            HeadPattern::Literal(l) => l.collect_vars(&mut out),
            HeadPattern::Count { literals, .. } => {
                literals.iter().for_each(|l| l.collect_vars(&mut out))
            }
            HeadPattern::Falsum | HeadPattern::Choice { .. } => {}
        }
        self.pos.iter().for_each(|l| l.collect_vars(&mut out));
        self.naf.iter().for_each(|l| l.collect_vars(&mut out));
        for g in &self.guards {
            g.lhs.collect_vars(&mut out);
            g.rhs.collect_vars(&mut out);
        }
        out
    }

    pub fn is_fact(&self) -> bool {
        matches!(self.head, HeadPattern::Literal(_))
            && self.pos.is_empty()
            && self.naf.is_empty()
            && self.guards.is_empty()
    }
}

impl fmt::Display for SchematicRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut body: Vec<String> = Vec::new();
        let mut prefix = String::new();
        match &self.head {
            HeadPattern::Literal(l) => prefix = l.to_string(),
            HeadPattern::Falsum => {}
            HeadPattern::Choice {
                lower,
                upper,
                elements,
            } => {
                if let Some(lo) = lower {
                    prefix.push_str(&lo.to_string());
                }
                prefix.push('{');
                let elems: Vec<String> = elements
                    .iter()
                    .map(|e| {
                        if e.guard.is_empty() {
                            e.atom.to_string()
                        } else {
                            let g: Vec<String> = e.guard.iter().map(|g| g.to_string()).collect();
                            format!("{} : {}", e.atom, g.join(", "))
                        }
                    })
                    .collect();
                prefix.push_str(&elems.join("; "));
                prefix.push('}');
                if let Some(hi) = upper {
                    prefix.push_str(&hi.to_string());
                }
            }
            HeadPattern::Count {
                check,
                bound,
                literals,
            } => {
                let lits: Vec<String> = literals.iter().map(|l| l.to_string()).collect();
                let not = if *check == CountCheck::Below { "not " } else { "" };
                body.push(format!("{not}{bound}{{{}}}", lits.join(", ")));
            }
        }
        body.extend(self.pos.iter().map(|l| l.to_string()));
        body.extend(self.naf.iter().map(|l| format!("not {l}")));
        body.extend(self.guards.iter().map(|g| g.to_string()));
        let is_constraint = matches!(self.head, HeadPattern::Falsum | HeadPattern::Count { .. });
        if is_constraint {
            write!(f, ":- {}.", body.join(", "))
        } else if body.is_empty() {
            write!(f, "{prefix}.")
        } else {
            write!(f, "{prefix} :- {}.", body.join(", "))
        }
    }
}

fn grounding_error(rule: usize, message: impl Into<String>) -> LogicError {
    LogicError::Grounding {
        rule,
        message: message.into(),
    }
}

/// Predicates known to be defined by a fixed set of facts.
///
/// Grounding against an extensional database skips instances with a
/// positive body literal over one of these predicates that is not a fact.
/// Such instances can never fire, so answer sets are unchanged.
#[derive(Debug, Clone, Default)]
pub struct Extensional {
    predicates: BTreeSet<String>,
    facts: HashSet<Literal>,
}

impl Extensional {
    pub fn new<'a>(predicates: impl IntoIterator<Item = &'a str>) -> Self {
        Extensional {
            predicates: predicates.into_iter().map(str::to_string).collect(),
            facts: HashSet::new(),
        }
    }

    /// Records the facts among `rules` whose predicate is extensional.
    pub fn add_facts<'a>(&mut self, rules: impl IntoIterator<Item = &'a Rule>) {
        for r in rules {
            if let Some(h) = r.head_literal() {
                if r.pos.is_empty() && r.naf.is_empty() && self.predicates.contains(h.predicate()) {
                    self.facts.insert(h.clone());
                }
            }
        }
    }

    fn rejects(&self, l: &Literal) -> bool {
        self.predicates.contains(l.predicate()) && !self.facts.contains(l)
    }
}

/// Instantiates schematic rules over the sorts of `signature`.
pub fn ground(rules: &[SchematicRule], signature: &Signature) -> Result<GroundProgram, LogicError> {
    ground_with(rules, signature, None)
}

/// Like [`ground`], dropping instances refuted by the extensional database.
pub fn ground_with(
    rules: &[SchematicRule],
    signature: &Signature,
    extensional: Option<&Extensional>,
) -> Result<GroundProgram, LogicError> {
    let mut out = Vec::new();
    for (index, rule) in rules.iter().enumerate() {
        ground_rule(index, rule, signature, extensional, &mut out)?;
    }
    GroundProgram::with_signature(signature.clone(), out)
}

/// Binds `vars` one at a time, checking each guard and extensional literal
/// as soon as its variables are bound.
fn for_each_pruned(
    index: usize,
    rule: &SchematicRule,
    signature: &Signature,
    extensional: Option<&Extensional>,
    visit: &mut dyn FnMut(&Env) -> Result<(), LogicError>,
) -> Result<(), LogicError> {
    let vars = &rule.vars;
    let position = |v: &String| vars.iter().position(|s| s.name == *v);
    let ready = |names: Vec<String>| -> Option<usize> {
        let mut depth = 0;
        for n in &names {
            depth = depth.max(position(n)? + 1);
        }
        Some(depth)
    };
    let mut literal_checks: Vec<Vec<&LiteralPattern>> = vec![Vec::new(); vars.len() + 1];
    let mut guard_checks: Vec<Vec<&Guard>> = vec![Vec::new(); vars.len() + 1];
    if let Some(ext) = extensional {
        for l in rule.pos.iter().filter(|l| ext.predicates.contains(&l.predicate)) {
            let mut names = Vec::new();
            l.collect_vars(&mut names);
            if let Some(d) = ready(names) {
                literal_checks[d].push(l);
            }
        }
    }
    for g in &rule.guards {
        let mut names = Vec::new();
        g.lhs.collect_vars(&mut names);
        g.rhs.collect_vars(&mut names);
        if let Some(d) = ready(names) {
            guard_checks[d].push(g);
        }
    }
    let domains = vars
        .iter()
        .map(|v| sort_members(index, v, signature))
        .collect::<Result<Vec<_>, _>>()?;
    let err = |m: String| grounding_error(index, m);
    let passes = |depth: usize, env: &Env| -> Result<bool, LogicError> {
        for g in &guard_checks[depth] {
            let l = g.lhs.eval(env).map_err(err)?;
            let r = g.rhs.eval(env).map_err(err)?;
            if !g.op.holds(&l, &r) {
                return Ok(false);
            }
        }
        if let Some(ext) = extensional {
            for l in &literal_checks[depth] {
                if ext.rejects(&l.eval(env).map_err(err)?) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    };
    fn go(
        depth: usize,
        env: &mut Env,
        vars: &[SortedVar],
        domains: &[Vec<&Term>],
        passes: &dyn Fn(usize, &Env) -> Result<bool, LogicError>,
        visit: &mut dyn FnMut(&Env) -> Result<(), LogicError>,
    ) -> Result<(), LogicError> {
        if depth == vars.len() {
            return visit(env);
        }
        for &m in &domains[depth] {
            env.insert(vars[depth].name.clone(), m.clone());
            if passes(depth + 1, env)? {
                go(depth + 1, env, vars, domains, passes, visit)?;
            }
        }
        Ok(())
    }
    let mut env = Env::new();
    if !passes(0, &env)? {
        return Ok(());
    }
    go(0, &mut env, vars, &domains, &passes, visit)
}

fn sort_members<'a>(
    index: usize,
    var: &SortedVar,
    signature: &'a Signature,
) -> Result<Vec<&'a Term>, LogicError> {
    signature
        .sort(&var.sort)
        .map(|s| s.iter().collect())
        .ok_or_else(|| grounding_error(index, format!("unknown sort {} for variable {}", var.sort, var.name)))
}

/// Calls `visit` once per assignment of `vars` (odometer order, last var fastest).
fn for_each_binding(
    index: usize,
    vars: &[SortedVar],
    signature: &Signature,
    base: &Env,
    visit: &mut dyn FnMut(&Env) -> Result<(), LogicError>,
) -> Result<(), LogicError> {
    let domains = vars
        .iter()
        .map(|v| sort_members(index, v, signature))
        .collect::<Result<Vec<_>, _>>()?;
    if domains.iter().any(|d| d.is_empty()) {
        return Ok(());
    }
    let mut counters = vec![0usize; vars.len()];
    let mut env = base.clone();
    loop {
        for (v, (d, &c)) in vars.iter().zip(domains.iter().zip(&counters)) {
            env.insert(v.name.clone(), d[c].clone());
        }
        visit(&env)?;
        let mut pos = vars.len();
        loop {
            if pos == 0 {
                return Ok(());
            }
            pos -= 1;
            counters[pos] += 1;
            if counters[pos] < domains[pos].len() {
                break;
            }
            counters[pos] = 0;
        }
    }
}

fn ground_rule(
    index: usize,
    rule: &SchematicRule,
    signature: &Signature,
    extensional: Option<&Extensional>,
    out: &mut Vec<Rule>,
) -> Result<(), LogicError> {
    for v in rule.global_variables() {
        let known = rule.vars.iter().any(|s| s.name == v) || rule.derived.iter().any(|(d, _)| *d == v);
        if !known {
            return Err(LogicError::UnsortedVariable { rule: index, variable: v });
        }
    }
    if let HeadPattern::Choice { elements, .. } = &rule.head {
        for e in elements {
            let mut ev = Vec::new();
            e.atom.collect_vars(&mut ev);
            e.guard.iter().for_each(|g| g.collect_vars(&mut ev));
            for v in ev {
                let known = e.local_vars.iter().any(|s| s.name == v)
                    || rule.vars.iter().any(|s| s.name == v)
                    || rule.derived.iter().any(|(d, _)| *d == v);
                if !known {
                    return Err(LogicError::UnsortedVariable { rule: index, variable: v });
                }
            }
        }
    }
    let err = |m: String| grounding_error(index, m);
    let mut visit = |env: &Env| -> Result<(), LogicError> {
        let mut env = env.clone();
        for (name, value) in &rule.derived {
            let t = value.eval(&env).map_err(err)?;
            env.insert(name.clone(), t);
        }
        for g in &rule.guards {
            let l = g.lhs.eval(&env).map_err(err)?;
            let r = g.rhs.eval(&env).map_err(err)?;
            if !g.op.holds(&l, &r) {
                return Ok(());
            }
        }
        let eval_all = |ls: &[LiteralPattern]| -> Result<Vec<Literal>, LogicError> {
            ls.iter().map(|l| l.eval(&env).map_err(err)).collect()
        };
        let pos = eval_all(&rule.pos)?;
        if let Some(ext) = extensional {
            if pos.iter().any(|l| ext.rejects(l)) {
                return Ok(());
            }
        }
        let naf = eval_all(&rule.naf)?;
        match &rule.head {
            HeadPattern::Literal(l) if l.args.iter().any(Pattern::has_range) => {
                if !pos.is_empty() || !naf.is_empty() {
                    return Err(err("intervals are only allowed in facts".into()));
                }
                let parts = l
                    .args
                    .iter()
                    .map(|a| a.expand(&env))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(err)?;
                for args in product(&parts) {
                    out.push(Rule::fact(Literal {
                        atom: GroundAtom::new(l.predicate.clone(), args),
                        negative: l.negative,
                    }));
                }
            }
            HeadPattern::Literal(l) => {
                let head = l.eval(&env).map_err(err)?;
                out.push(Rule::normal(head, pos, naf));
            }
            HeadPattern::Falsum => out.push(Rule::constraint(pos, naf)),
            HeadPattern::Count {
                check,
                bound,
                literals,
            } => out.push(Rule {
                head: Head::Count {
                    check: *check,
                    bound: *bound,
                    literals: eval_all(literals)?,
                },
                pos,
                naf,
            }),
            HeadPattern::Choice {
                lower,
                upper,
                elements,
            } => {
                let mut ground_elements = Vec::new();
                for e in elements {
                    for_each_binding(index, &e.local_vars, signature, &env, &mut |local| {
                        ground_elements.push(ChoiceElement {
                            atom: e.atom.eval(local).map_err(err)?,
                            guard: e
                                .guard
                                .iter()
                                .map(|g| g.eval(local).map_err(err))
                                .collect::<Result<_, _>>()?,
                        });
                        Ok(())
                    })?;
                }
                out.push(Rule {
                    head: Head::Choice {
                        lower: *lower,
                        upper: *upper,
                        elements: ground_elements,
                    },
                    pos,
                    naf,
                });
            }
        }
        Ok(())
    };
    for_each_pruned(index, rule, signature, extensional, &mut visit)
}

/// Assigns sorts to the variables of parsed rules.
///
/// A *sort predicate* is a unary predicate defined only by ground facts
/// (intervals allowed). A variable `X` is sorted by `s` when `s(X)` occurs
/// positively in the body (or in the element guard, for choice-element
/// locals); otherwise it must be defined by an equality guard `X = expr`.
/// Returns the rules with `vars`/`derived` filled in and the signature
/// holding the sort extensions.
pub fn infer_sorts(
    rules: &[SchematicRule],
) -> Result<(Vec<SchematicRule>, Signature), LogicError> {
    let mut candidates: BTreeMap<String, bool> = BTreeMap::new();
    for rule in rules {
        let mut mark = |l: &LiteralPattern, ok: bool| {
            let e = candidates.entry(l.predicate.clone()).or_insert(true);
            *e = *e && ok;
        };
        match &rule.head {
            HeadPattern::Literal(l) => {
                let ok = rule.is_fact() && !l.negative && l.args.len() == 1 && l.is_ground();
                mark(l, ok);
            }
            HeadPattern::Choice { elements, .. } => {
                for e in elements {
                    mark(&e.atom, false);
                }
            }
            _ => {}
        }
    }
    let mut signature = Signature::new();
    for rule in rules {
        if let HeadPattern::Literal(l) = &rule.head {
            if candidates.get(&l.predicate) == Some(&true) {
                let members = l.args[0].expand(&Env::new()).map_err(|m| grounding_error(0, m))?;
                signature.add_sort(&l.predicate, members);
            }
        }
    }
    let is_sort = |l: &LiteralPattern| {
        !l.negative && l.args.len() == 1 && signature.sorts.contains_key(&l.predicate)
    };
    let sort_of = |v: &str, lits: &[LiteralPattern]| {
        lits.iter()
            .find(|l| is_sort(l) && l.args[0] == Pattern::Var(v.to_string()))
            .map(|l| l.predicate.clone())
    };

    let mut out = Vec::with_capacity(rules.len());
    for (index, rule) in rules.iter().enumerate() {
        let mut rule = rule.clone();
        rule.vars.clear();
        rule.derived.clear();
        let mut pending = Vec::new();
        for v in rule.global_variables() {
            match sort_of(&v, &rule.pos) {
                Some(sort) => rule.vars.push(SortedVar { name: v, sort }),
                None => pending.push(v),
            }
        }
        // Equality guards define the rest, possibly in chains.
        while !pending.is_empty() {
            let bound: BTreeSet<String> = rule
                .vars
                .iter()
                .map(|s| s.name.clone())
                .chain(rule.derived.iter().map(|(d, _)| d.clone()))
                .collect();
            let found = pending.iter().position(|v| {
                rule.guards.iter().any(|g| defining_expr(g, v, &bound).is_some())
            });
            match found {
                Some(i) => {
                    let v = pending.remove(i);
                    let expr = rule
                        .guards
                        .iter()
                        .find_map(|g| defining_expr(g, &v, &bound))
                        .expect("checked above");
                    rule.derived.push((v, expr));
                }
                None => {
                    return Err(LogicError::UnsortedVariable {
                        rule: index,
                        variable: pending.remove(0),
                    })
                }
            }
        }
        if let HeadPattern::Choice { elements, .. } = &mut rule.head {
            let global: Vec<String> = rule
                .vars
                .iter()
                .map(|s| s.name.clone())
                .chain(rule.derived.iter().map(|(d, _)| d.clone()))
                .collect();
            for e in elements.iter_mut() {
                e.local_vars.clear();
                let mut ev = Vec::new();
                e.atom.collect_vars(&mut ev);
                e.guard.iter().for_each(|g| g.collect_vars(&mut ev));
                for v in ev.into_iter().filter(|v| !global.contains(v)) {
                    match sort_of(&v, &e.guard) {
                        Some(sort) => e.local_vars.push(SortedVar { name: v, sort }),
                        None => return Err(LogicError::UnsortedVariable { rule: index, variable: v }),
                    }
                }
            }
        }
        out.push(rule);
    }
    Ok((out, signature))
}

fn defining_expr(g: &Guard, v: &str, bound: &BTreeSet<String>) -> Option<Pattern> {
    if g.op != CompareOp::Eq {
        return None;
    }
    let target = Pattern::Var(v.to_string());
    let candidate = if g.lhs == target {
        &g.rhs
    } else if g.rhs == target {
        &g.lhs
    } else {
        return None;
    };
    let mut vars = Vec::new();
    candidate.collect_vars(&mut vars);
    vars.iter().all(|x| bound.contains(x)).then(|| candidate.clone())
}
