//! Text syntax for A-Prolog programs.
//!
//! ```text
//! h(F, T') :- h(F, T), not h(-F, T'), step(T), fluent(F), T' = T+1.
//! -p(a).                       % strong negation
//! time(0..3).                  % interval facts
//! 1{o(A, 0) : x_act(A)}.       % choice with lower bound
//! :- 2{o(a, 0), o(b, 0)}.      % counting constraint
//! ```
//!
//! `←` is accepted for `:-` and `¬` for `-`. Inside an argument, `-t` is the
//! term-level complement (`neg(t)`, or `t` when `t` is already `neg(..)`).

use std::fmt;

use super::ground::{
    infer_sorts, ArithOp, CompareOp, ElementPattern, Guard, HeadPattern, LiteralPattern, Pattern,
    SchematicRule,
};
use super::program::{CountCheck, GroundProgram};
use super::LogicError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Var(String),
    Int(i64),
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Semi,
    Colon,
    Dot,
    DotDot,
    If,
    Minus,
    Plus,
    Cmp(CompareOp),
    Not,
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, column, message: String| ParseError {
        line,
        column,
        message,
    };
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let mut push = |tok, len: usize, i: &mut usize, col: &mut usize| {
            out.push(Token {
                tok,
                line: l0,
                column: c0,
            });
            *i += len;
            *col += len;
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                i += 1;
                col += 1;
            }
            '%' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '(' => push(Tok::LParen, 1, &mut i, &mut col),
            ')' => push(Tok::RParen, 1, &mut i, &mut col),
            '[' => push(Tok::LBracket, 1, &mut i, &mut col),
            ']' => push(Tok::RBracket, 1, &mut i, &mut col),
            '{' => push(Tok::LBrace, 1, &mut i, &mut col),
            '}' => push(Tok::RBrace, 1, &mut i, &mut col),
            ',' => push(Tok::Comma, 1, &mut i, &mut col),
            ';' => push(Tok::Semi, 1, &mut i, &mut col),
            '+' => push(Tok::Plus, 1, &mut i, &mut col),
            '-' | '¬' => push(Tok::Minus, 1, &mut i, &mut col),
            '←' => push(Tok::If, 1, &mut i, &mut col),
            '.' if chars.get(i + 1) == Some(&'.') => push(Tok::DotDot, 2, &mut i, &mut col),
            '.' => push(Tok::Dot, 1, &mut i, &mut col),
            ':' if chars.get(i + 1) == Some(&'-') => push(Tok::If, 2, &mut i, &mut col),
            ':' => push(Tok::Colon, 1, &mut i, &mut col),
            '<' if chars.get(i + 1) == Some(&'=') => push(Tok::Cmp(CompareOp::Le), 2, &mut i, &mut col),
            '<' => push(Tok::Cmp(CompareOp::Lt), 1, &mut i, &mut col),
            '>' if chars.get(i + 1) == Some(&'=') => push(Tok::Cmp(CompareOp::Ge), 2, &mut i, &mut col),
            '>' => push(Tok::Cmp(CompareOp::Gt), 1, &mut i, &mut col),
            '!' if chars.get(i + 1) == Some(&'=') => push(Tok::Cmp(CompareOp::Ne), 2, &mut i, &mut col),
            '=' if chars.get(i + 1) == Some(&'=') => push(Tok::Cmp(CompareOp::Eq), 2, &mut i, &mut col),
            '=' => push(Tok::Cmp(CompareOp::Eq), 1, &mut i, &mut col),
            c if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                let v = text
                    .parse()
                    .map_err(|_| err(l0, c0, format!("integer {text} out of range")))?;
                col += i - start;
                out.push(Token {
                    tok: Tok::Int(v),
                    line: l0,
                    column: c0,
                });
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                col += i - start;
                let tok = if text == "not" {
                    Tok::Not
                } else if c.is_uppercase() || c == '_' {
                    Tok::Var(text)
                } else {
                    Tok::Ident(text)
                };
                out.push(Token {
                    tok,
                    line: l0,
                    column: c0,
                });
            }
            other => return Err(err(l0, c0, format!("unexpected character {other:?}"))),
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}

enum BodyItem {
    Pos(LiteralPattern),
    Naf(LiteralPattern),
    Guard(Guard),
    Count(CountCheck, usize, Vec<LiteralPattern>),
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        let t = &self.toks[self.pos];
        Err(ParseError {
            line: t.line,
            column: t.column,
            message: message.into(),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected {what}, found {}", describe(self.peek())))
        }
    }

    fn program(&mut self) -> Result<Vec<SchematicRule>, ParseError> {
        let mut rules = Vec::new();
        while *self.peek() != Tok::Eof {
            rules.push(self.statement()?);
        }
        Ok(rules)
    }

    fn statement(&mut self) -> Result<SchematicRule, ParseError> {
        let head = match self.peek() {
            Tok::If => HeadPattern::Falsum,
            Tok::LBrace => self.choice(None)?,
            Tok::Int(_) if *self.peek_at(1) == Tok::LBrace => {
                let Tok::Int(lo) = self.bump() else { unreachable!() };
                self.choice(Some(bound(lo, self)?))?
            }
            _ => HeadPattern::Literal(self.literal()?),
        };
        let mut rule = SchematicRule::new(head);
        if *self.peek() == Tok::If {
            self.bump();
            if *self.peek() == Tok::Dot {
                return self.error("expected rule body");
            }
            loop {
                let at = self.pos;
                match self.body_item()? {
                    BodyItem::Pos(l) => rule.pos.push(l),
                    BodyItem::Naf(l) => rule.naf.push(l),
                    BodyItem::Guard(g) => rule.guards.push(g),
                    BodyItem::Count(check, bound, literals) => {
                        if rule.head != HeadPattern::Falsum {
                            self.pos = at;
                            return self.error("counting literals are only allowed in constraints");
                        }
                        rule.head = HeadPattern::Count {
                            check,
                            bound,
                            literals,
                        };
                    }
                }
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        } else if rule.head == HeadPattern::Falsum {
            return self.error("expected rule body");
        }
        self.expect(Tok::Dot, "'.'")?;
        Ok(rule)
    }

    fn choice(&mut self, lower: Option<usize>) -> Result<HeadPattern, ParseError> {
        self.expect(Tok::LBrace, "'{'")?;
        let mut elements = Vec::new();
        if *self.peek() != Tok::RBrace {
            loop {
                let atom = self.literal()?;
                let mut guard = Vec::new();
                if *self.peek() == Tok::Colon {
                    self.bump();
                    guard.push(self.literal()?);
                    while *self.peek() == Tok::Comma {
                        self.bump();
                        guard.push(self.literal()?);
                    }
                }
                elements.push(ElementPattern {
                    atom,
                    guard,
                    local_vars: Vec::new(),
                });
                if *self.peek() == Tok::Semi {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RBrace, "'}'")?;
        let upper = match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Some(bound(v, self)?)
            }
            _ => None,
        };
        Ok(HeadPattern::Choice {
            lower,
            upper,
            elements,
        })
    }

    fn count(&mut self, check: CountCheck) -> Result<BodyItem, ParseError> {
        let Tok::Int(k) = self.bump() else { unreachable!() };
        let k = bound(k, self)?;
        self.expect(Tok::LBrace, "'{'")?;
        let mut literals = Vec::new();
        if *self.peek() != Tok::RBrace {
            literals.push(self.literal()?);
            while matches!(self.peek(), Tok::Comma | Tok::Semi) {
                self.bump();
                literals.push(self.literal()?);
            }
        }
        self.expect(Tok::RBrace, "'}'")?;
        Ok(BodyItem::Count(check, k, literals))
    }

    fn body_item(&mut self) -> Result<BodyItem, ParseError> {
        match self.peek() {
            Tok::Not => {
                self.bump();
                if matches!(self.peek(), Tok::Int(_)) && *self.peek_at(1) == Tok::LBrace {
                    self.count(CountCheck::Below)
                } else {
                    Ok(BodyItem::Naf(self.literal()?))
                }
            }
            Tok::Int(_) if *self.peek_at(1) == Tok::LBrace => self.count(CountCheck::AtLeast),
            Tok::Ident(_) | Tok::Minus if !self.looks_like_comparison() => {
                Ok(BodyItem::Pos(self.literal()?))
            }
            _ => {
                let lhs = self.term()?;
                let op = match self.bump() {
                    Tok::Cmp(op) => op,
                    other => {
                        self.pos -= 1;
                        return self.error(format!("expected comparison, found {}", describe(&other)));
                    }
                };
                let rhs = self.term()?;
                Ok(BodyItem::Guard(Guard { lhs, op, rhs }))
            }
        }
    }

    /// Scans ahead over one term to see whether a comparison operator follows.
    fn looks_like_comparison(&self) -> bool {
        let mut depth = 0i32;
        let mut k = 0;
        loop {
            match self.peek_at(k) {
                Tok::LParen | Tok::LBracket => depth += 1,
                Tok::RParen | Tok::RBracket => depth -= 1,
                Tok::Cmp(_) if depth == 0 => return true,
                Tok::Eof => return false,
                Tok::Comma | Tok::Dot if depth <= 0 => return false,
                _ => {}
            }
            if depth < 0 {
                return false;
            }
            k += 1;
        }
    }

    fn literal(&mut self) -> Result<LiteralPattern, ParseError> {
        let negative = if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        let name = match self.bump() {
            Tok::Ident(s) => s,
            other => {
                self.pos -= 1;
                return self.error(format!("expected predicate name, found {}", describe(&other)));
            }
        };
        let args = if *self.peek() == Tok::LParen {
            self.bump();
            let args = self.terms(Tok::RParen)?;
            if args.is_empty() {
                return self.error("empty argument list");
            }
            args
        } else {
            Vec::new()
        };
        Ok(LiteralPattern {
            negative,
            predicate: name,
            args,
        })
    }

    fn terms(&mut self, close: Tok) -> Result<Vec<Pattern>, ParseError> {
        let mut out = Vec::new();
        if *self.peek() == close {
            self.bump();
            return Ok(out);
        }
        loop {
            out.push(self.term()?);
            match self.peek() {
                Tok::Comma => {
                    self.bump();
                }
                t if *t == close => {
                    self.bump();
                    return Ok(out);
                }
                other => return self.error(format!("expected ',' or closing bracket, found {}", describe(other))),
            }
        }
    }

    fn term(&mut self) -> Result<Pattern, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => ArithOp::Add,
                Tok::Minus => ArithOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Pattern::Arith(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Pattern, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            if let Tok::Int(v) = self.peek().clone() {
                self.bump();
                return Ok(Pattern::Int(-v));
            }
            return Ok(Pattern::Complement(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Pattern, ParseError> {
        match self.bump() {
            Tok::Int(v) => {
                if *self.peek() == Tok::DotDot {
                    self.bump();
                    let hi = self.unary()?;
                    Ok(Pattern::Range(Box::new(Pattern::Int(v)), Box::new(hi)))
                } else {
                    Ok(Pattern::Int(v))
                }
            }
            Tok::Var(v) => Ok(Pattern::Var(v)),
            Tok::Ident(name) => {
                if *self.peek() == Tok::LParen {
                    self.bump();
                    let args = self.terms(Tok::RParen)?;
                    if args.is_empty() {
                        return self.error("empty argument list");
                    }
                    Ok(Pattern::Func(name, args))
                } else {
                    Ok(Pattern::Sym(name))
                }
            }
            Tok::LBracket => Ok(Pattern::List(self.terms(Tok::RBracket)?)),
            Tok::LParen => {
                let t = self.term()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(t)
            }
            other => {
                self.pos -= 1;
                self.error(format!("expected a term, found {}", describe(&other)))
            }
        }
    }
}

fn bound(v: i64, p: &Parser) -> Result<usize, ParseError> {
    usize::try_from(v).or_else(|_| p.error("bound must be non-negative"))
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) | Tok::Var(s) => format!("'{s}'"),
        Tok::Int(v) => format!("'{v}'"),
        Tok::Eof => "end of input".into(),
        Tok::Not => "'not'".into(),
        Tok::If => "':-'".into(),
        Tok::Cmp(op) => format!("'{}'", op.symbol()),
        other => {
            let s = match other {
                Tok::LParen => "(",
                Tok::RParen => ")",
                Tok::LBracket => "[",
                Tok::RBracket => "]",
                Tok::LBrace => "{",
                Tok::RBrace => "}",
                Tok::Comma => ",",
                Tok::Semi => ";",
                Tok::Colon => ":",
                Tok::Dot => ".",
                Tok::DotDot => "..",
                Tok::Minus => "-",
                Tok::Plus => "+",
                _ => "?",
            };
            format!("'{s}'")
        }
    }
}

/// Parses program text into schematic rules (variables not yet sorted).
pub fn parse_rules(src: &str) -> Result<Vec<SchematicRule>, ParseError> {
    let toks = lex(src)?;
    Parser { toks, pos: 0 }.program()
}

/// Parses, sorts and grounds a program.
///
/// ```
/// use aldiag::logic::{parse_program, enumerate_answer_sets, Engine};
///
/// let p = parse_program("p :- not q. q :- not p.").unwrap();
/// assert_eq!(enumerate_answer_sets(&p, Engine::Search).unwrap().len(), 2);
/// ```
pub fn parse_program(src: &str) -> Result<GroundProgram, LogicError> {
    let rules = parse_rules(src)?;
    let (rules, signature) = infer_sorts(&rules)?;
    super::ground::ground(&rules, &signature)
}
