//! Ground terms, atoms and literals.

use std::fmt;

/// A ground term: an integer, a symbolic constant, a compound term or a list.
///
/// The derived ordering is the canonical ordering used everywhere output has
/// to be reproducible: integers sort before symbols, symbols before compound
/// terms, compound terms before lists.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Int(i64),
    Sym(String),
    Func(String, Vec<Term>),
    List(Vec<Term>),
}

impl Term {
    pub fn sym(name: impl Into<String>) -> Self {
        Term::Sym(name.into())
    }

    pub fn int(value: i64) -> Self {
        Term::Int(value)
    }

    pub fn func(name: impl Into<String>, args: impl IntoIterator<Item = Term>) -> Self {
        let args: Vec<Term> = args.into_iter().collect();
        if args.is_empty() {
            Term::Sym(name.into())
        } else {
            Term::Func(name.into(), args)
        }
    }

    /// `neg(t)`, the term-level encoding of a negated fluent.
    pub fn neg(inner: Term) -> Self {
        Term::Func("neg".into(), vec![inner])
    }

    /// Complement at the term level: `neg(f)` for `f`, and `f` for `neg(f)`.
    pub fn complement(&self) -> Term {
        match self {
            Term::Func(name, args) if name == "neg" && args.len() == 1 => args[0].clone(),
            other => Term::neg(other.clone()),
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Term::Int(v) => Some(*v),
            _ => None,
        }
    }

    /// Functor name, for symbols and compound terms.
    pub fn functor(&self) -> Option<&str> {
        match self {
            Term::Sym(s) | Term::Func(s, _) => Some(s),
            _ => None,
        }
    }

    pub fn args(&self) -> &[Term] {
        match self {
            Term::Func(_, args) | Term::List(args) => args,
            _ => &[],
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Int(v) => write!(f, "{v}"),
            Term::Sym(s) => f.write_str(s),
            Term::Func(name, args) => {
                write!(f, "{name}(")?;
                write_joined(f, args, ",")?;
                f.write_str(")")
            }
            Term::List(items) => {
                f.write_str("[")?;
                write_joined(f, items, ", ")?;
                f.write_str("]")
            }
        }
    }
}

pub(crate) fn write_joined<T: fmt::Display>(
    f: &mut fmt::Formatter<'_>,
    items: &[T],
    sep: &str,
) -> fmt::Result {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(sep)?;
        }
        write!(f, "{item}")?;
    }
    Ok(())
}

/// `p(t1,...,tn)` with ground arguments.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroundAtom {
    pub predicate: String,
    pub args: Vec<Term>,
}

impl GroundAtom {
    pub fn new(predicate: impl Into<String>, args: impl IntoIterator<Item = Term>) -> Self {
        GroundAtom {
            predicate: predicate.into(),
            args: args.into_iter().collect(),
        }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.predicate)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            write_joined(f, &self.args, ",")?;
            f.write_str(")")?;
        }
        Ok(())
    }
}

/// An atom or its strong (classical) negation.
///
/// Ordered by atom first, so `p` and `-p` sit next to each other with the
/// positive literal first.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub atom: GroundAtom,
    pub negative: bool,
}

impl Literal {
    pub fn pos(atom: GroundAtom) -> Self {
        Literal {
            atom,
            negative: false,
        }
    }

    pub fn neg(atom: GroundAtom) -> Self {
        Literal {
            atom,
            negative: true,
        }
    }

    /// Shorthand for a positive literal `predicate(args)`.
    pub fn atom(predicate: impl Into<String>, args: impl IntoIterator<Item = Term>) -> Self {
        Literal::pos(GroundAtom::new(predicate, args))
    }

    pub fn complement(&self) -> Literal {
        Literal {
            atom: self.atom.clone(),
            negative: !self.negative,
        }
    }

    pub fn predicate(&self) -> &str {
        &self.atom.predicate
    }

    pub fn args(&self) -> &[Term] {
        &self.atom.args
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negative {
            f.write_str("-")?;
        }
        write!(f, "{}", self.atom)
    }
}
