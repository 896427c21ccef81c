//! Abstract syntax, concrete grammar, parser, printer, and sugar expansion.
//!
//! The surface syntax echoes TLA⁺: `[]` for the temporal box, `[A]_<x,y>`
//! for the action box with its subscript of flexible variables, `\A`/`\E`
//! for rigid quantifiers, `\AA`/`\EE` for flexible (trace) quantifiers,
//! postfix `'` for priming, `~`, `/\`, `\/`, `=>` for the connectives.
//! Precedence, loosest to tightest: `=>` (right associative), `\/`, `/\`,
//! then `~`/`[]`; quantifier bodies extend maximally to the right.
//!
//! The parser desugars immediately: `∨`, `⇒`, `∃`, `∃∃` are eliminated by
//! their defining equations (`T1 ∨ T2 ≜ ¬(¬T1 ∧ ¬T2)`, `T1 ⇒ T2 ≜ ¬T1 ∨ T2`,
//! `∃x.T ≜ ¬∀x.¬T`, `∃∃x.P ≜ ¬∀∀x.¬P`), so parse results contain only core
//! constructors. The sugar constructors still exist in the AST for
//! programmatic use; [`desugar`] eliminates them by the same equations.
//!
//! Binding discipline: identifiers are classified against the signature
//! (function, relation, or declared flexible variable); anything else must
//! be bound by an enclosing quantifier, `\A`/`\E` binding rigid and
//! `\AA`/`\EE` binding flexible variables. The parser alpha-renames any
//! binder that would shadow an enclosing binder or clash with a signature
//! symbol, so downstream evaluators never see shadowing. Priming applies
//! to flexible variables inside atomic actions only — never to rigid
//! variables, applications, or twice.

use alloc::borrow::ToOwned;
use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::interp::Signature;

/// First-order terms. Flexible variables may appear primed (value after
/// the next change) or unprimed (value now).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Term {
    RigidVar(String),
    FlexVar(String),
    PrimedFlexVar(String),
    App(String, Vec<Term>),
}

/// Actions: first-order formulas over a pair of states.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Action {
    Rel(String, Vec<Term>),
    Eq(Term, Term),
    ForallRigid(String, Box<Action>),
    And(Box<Action>, Box<Action>),
    Not(Box<Action>),
    // Sugar, eliminated by `desugar_action`.
    Or(Box<Action>, Box<Action>),
    Implies(Box<Action>, Box<Action>),
    ExistsRigid(String, Box<Action>),
}

/// Temporal formulas. `Atom` embeds an atomic action (a relation or
/// equality, possibly mentioning primed variables) as a formula; the
/// parser keeps atoms minimal, so connectives above the leaves are always
/// temporal nodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TempFormula {
    Atom(Action),
    Always(Box<TempFormula>),
    Not(Box<TempFormula>),
    And(Box<TempFormula>, Box<TempFormula>),
    ActionBox(Action, Vec<String>),
    ForallRigid(String, Box<TempFormula>),
    ForallFlex(String, Box<TempFormula>),
    // Sugar, eliminated by `desugar`.
    Or(Box<TempFormula>, Box<TempFormula>),
    Implies(Box<TempFormula>, Box<TempFormula>),
    ExistsRigid(String, Box<TempFormula>),
    ExistsFlex(String, Box<TempFormula>),
}

/// Expands action-level sugar by its defining equations.
pub fn desugar_action(a: &Action) -> Action {
    match a {
        Action::Rel(r, args) => Action::Rel(r.clone(), args.clone()),
        Action::Eq(l, r) => Action::Eq(l.clone(), r.clone()),
        Action::ForallRigid(x, b) => Action::ForallRigid(x.clone(), Box::new(desugar_action(b))),
        Action::And(l, r) => Action::And(Box::new(desugar_action(l)), Box::new(desugar_action(r))),
        Action::Not(b) => Action::Not(Box::new(desugar_action(b))),
        // T1 ∨ T2 ≜ ¬(¬T1 ∧ ¬T2)
        Action::Or(l, r) => Action::Not(Box::new(Action::And(
            Box::new(Action::Not(Box::new(desugar_action(l)))),
            Box::new(Action::Not(Box::new(desugar_action(r)))),
        ))),
        // T1 ⇒ T2 ≜ ¬T1 ∨ T2, then the ∨ equation.
        Action::Implies(l, r) => desugar_action(&Action::Or(
            Box::new(Action::Not(l.clone())),
            r.clone(),
        )),
        // ∃x.T ≜ ¬∀x.¬T
        Action::ExistsRigid(x, b) => Action::Not(Box::new(Action::ForallRigid(
            x.clone(),
            Box::new(Action::Not(Box::new(desugar_action(b)))),
        ))),
    }
}

/// Expands temporal-level sugar by its defining equations; core
/// constructors (¬, ∧, □, action box, ∀, ∀∀, atoms) pass through.
pub fn desugar(t: &TempFormula) -> TempFormula {
    match t {
        TempFormula::Atom(a) => TempFormula::Atom(desugar_action(a)),
        TempFormula::Always(b) => TempFormula::Always(Box::new(desugar(b))),
        TempFormula::Not(b) => TempFormula::Not(Box::new(desugar(b))),
        TempFormula::And(l, r) => TempFormula::And(Box::new(desugar(l)), Box::new(desugar(r))),
        TempFormula::ActionBox(a, v) => TempFormula::ActionBox(desugar_action(a), v.clone()),
        TempFormula::ForallRigid(x, b) => TempFormula::ForallRigid(x.clone(), Box::new(desugar(b))),
        TempFormula::ForallFlex(x, b) => TempFormula::ForallFlex(x.clone(), Box::new(desugar(b))),
        TempFormula::Or(l, r) => TempFormula::Not(Box::new(TempFormula::And(
            Box::new(TempFormula::Not(Box::new(desugar(l)))),
            Box::new(TempFormula::Not(Box::new(desugar(r)))),
        ))),
        TempFormula::Implies(l, r) => desugar(&TempFormula::Or(
            Box::new(TempFormula::Not(l.clone())),
            r.clone(),
        )),
        TempFormula::ExistsRigid(x, b) => TempFormula::Not(Box::new(TempFormula::ForallRigid(
            x.clone(),
            Box::new(TempFormula::Not(Box::new(desugar(b)))),
        ))),
        TempFormula::ExistsFlex(x, b) => TempFormula::Not(Box::new(TempFormula::ForallFlex(
            x.clone(),
            Box::new(TempFormula::Not(Box::new(desugar(b)))),
        ))),
    }
}

fn term_vars(t: &Term, rigid: &mut BTreeSet<String>, flex: &mut BTreeSet<String>) {
    match t {
        Term::RigidVar(x) => {
            rigid.insert(x.clone());
        }
        Term::FlexVar(x) | Term::PrimedFlexVar(x) => {
            flex.insert(x.clone());
        }
        Term::App(_, args) => {
            for a in args {
                term_vars(a, rigid, flex);
            }
        }
    }
}

fn action_vars(a: &Action, rigid: &mut BTreeSet<String>, flex: &mut BTreeSet<String>) {
    match a {
        Action::Rel(_, args) => {
            for t in args {
                term_vars(t, rigid, flex);
            }
        }
        Action::Eq(l, r) => {
            term_vars(l, rigid, flex);
            term_vars(r, rigid, flex);
        }
        Action::ForallRigid(x, b) | Action::ExistsRigid(x, b) => {
            let mut inner = BTreeSet::new();
            action_vars(b, &mut inner, flex);
            inner.remove(x);
            rigid.extend(inner);
        }
        Action::And(l, r) | Action::Or(l, r) | Action::Implies(l, r) => {
            action_vars(l, rigid, flex);
            action_vars(r, rigid, flex);
        }
        Action::Not(b) => action_vars(b, rigid, flex),
    }
}

fn formula_vars(t: &TempFormula, rigid: &mut BTreeSet<String>, flex: &mut BTreeSet<String>) {
    match t {
        TempFormula::Atom(a) => action_vars(a, rigid, flex),
        TempFormula::Always(b) | TempFormula::Not(b) => formula_vars(b, rigid, flex),
        TempFormula::And(l, r) | TempFormula::Or(l, r) | TempFormula::Implies(l, r) => {
            formula_vars(l, rigid, flex);
            formula_vars(r, rigid, flex);
        }
        TempFormula::ActionBox(a, subs) => {
            action_vars(a, rigid, flex);
            flex.extend(subs.iter().cloned());
        }
        TempFormula::ForallRigid(x, b) | TempFormula::ExistsRigid(x, b) => {
            let mut inner_r = BTreeSet::new();
            formula_vars(b, &mut inner_r, flex);
            inner_r.remove(x);
            rigid.extend(inner_r);
        }
        TempFormula::ForallFlex(x, b) | TempFormula::ExistsFlex(x, b) => {
            let mut inner_f = BTreeSet::new();
            formula_vars(b, rigid, &mut inner_f);
            inner_f.remove(x);
            flex.extend(inner_f);
        }
    }
}

/// Free rigid variables of a formula.
pub fn free_rigid_vars(t: &TempFormula) -> BTreeSet<String> {
    let mut r = BTreeSet::new();
    let mut f = BTreeSet::new();
    formula_vars(t, &mut r, &mut f);
    r
}

/// Free flexible variables of a formula (primed or unprimed occurrences,
/// plus action-box subscripts), minus flexibly quantified ones.
pub fn free_flex_vars(t: &TempFormula) -> BTreeSet<String> {
    let mut r = BTreeSet::new();
    let mut f = BTreeSet::new();
    formula_vars(t, &mut r, &mut f);
    f
}

/// Flexible variables mentioned by an action (primed or unprimed).
pub fn flex_vars_of_action(a: &Action) -> BTreeSet<String> {
    let mut r = BTreeSet::new();
    let mut f = BTreeSet::new();
    action_vars(a, &mut r, &mut f);
    f
}

/// Does the action mention any primed variable?
pub fn action_has_primes(a: &Action) -> bool {
    fn term_primed(t: &Term) -> bool {
        match t {
            Term::PrimedFlexVar(_) => true,
            Term::App(_, args) => args.iter().any(term_primed),
            _ => false,
        }
    }
    match a {
        Action::Rel(_, args) => args.iter().any(term_primed),
        Action::Eq(l, r) => term_primed(l) || term_primed(r),
        Action::ForallRigid(_, b) | Action::ExistsRigid(_, b) | Action::Not(b) => action_has_primes(b),
        Action::And(l, r) | Action::Or(l, r) | Action::Implies(l, r) => {
            action_has_primes(l) || action_has_primes(r)
        }
    }
}

/// A parse failure, with the byte offset in the input where it happened.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub pos: usize,
    pub msg: String,
}

impl core::fmt::Display for ParseError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "parse error at byte {}: {}", self.pos, self.msg)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    LParen,
    RParen,
    LBracket,
    RBracket,
    BoxOp,
    Underscore,
    Lt,
    Gt,
    Comma,
    Dot,
    Prime,
    Equal,
    ImpliesOp,
    Tilde,
    AndOp,
    OrOp,
    ForallR,
    ExistsR,
    ForallF,
    ExistsF,
    Ident(String),
    Eof,
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0usize;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\r' | b'\n' => i += 1,
            b'(' => {
                toks.push((i, Tok::LParen));
                i += 1;
            }
            b')' => {
                toks.push((i, Tok::RParen));
                i += 1;
            }
            b'[' => {
                if bytes.get(i + 1) == Some(&b']') {
                    toks.push((i, Tok::BoxOp));
                    i += 2;
                } else {
                    toks.push((i, Tok::LBracket));
                    i += 1;
                }
            }
            b']' => {
                toks.push((i, Tok::RBracket));
                i += 1;
            }
            b'_' => {
                toks.push((i, Tok::Underscore));
                i += 1;
            }
            b'<' => {
                toks.push((i, Tok::Lt));
                i += 1;
            }
            b'>' => {
                toks.push((i, Tok::Gt));
                i += 1;
            }
            b',' => {
                toks.push((i, Tok::Comma));
                i += 1;
            }
            b'.' => {
                toks.push((i, Tok::Dot));
                i += 1;
            }
            b'\'' => {
                toks.push((i, Tok::Prime));
                i += 1;
            }
            b'~' => {
                toks.push((i, Tok::Tilde));
                i += 1;
            }
            b'=' => {
                if bytes.get(i + 1) == Some(&b'>') {
                    toks.push((i, Tok::ImpliesOp));
                    i += 2;
                } else {
                    toks.push((i, Tok::Equal));
                    i += 1;
                }
            }
            b'/' => {
                if bytes.get(i + 1) == Some(&b'\\') {
                    toks.push((i, Tok::AndOp));
                    i += 2;
                } else {
                    return Err(ParseError { pos: i, msg: "expected `/\\`".to_owned() });
                }
            }
            b'\\' => {
                if bytes.get(i + 1) == Some(&b'/') {
                    toks.push((i, Tok::OrOp));
                    i += 2;
                } else {
                    let start = i + 1;
                    let mut j = start;
                    while j < bytes.len() && bytes[j].is_ascii_alphabetic() {
                        j += 1;
                    }
                    let word = &text[start..j];
                    let tok = match word {
                        "A" => Tok::ForallR,
                        "E" => Tok::ExistsR,
                        "AA" => Tok::ForallF,
                        "EE" => Tok::ExistsF,
                        _ => {
                            return Err(ParseError {
                                pos: i,
                                msg: format!("unknown operator `\\{word}`"),
                            })
                        }
                    };
                    toks.push((i, tok));
                    i = j;
                }
            }
            _ if c.is_ascii_alphabetic() => {
                let start = i;
                let mut j = i + 1;
                while j < bytes.len()
                    && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_')
                {
                    j += 1;
                }
                toks.push((start, Tok::Ident(text[start..j].to_owned())));
                i = j;
            }
            _ => {
                return Err(ParseError { pos: i, msg: format!("unexpected character `{}`", text[i..].chars().next().unwrap()) });
            }
        }
    }
    toks.push((text.len(), Tok::Eof));
    Ok(toks)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum BinderKind {
    Rigid,
    Flex,
}

struct Parser<'a> {
    sig: &'a Signature,
    toks: Vec<(usize, Tok)>,
    i: usize,
    /// In-scope binders, innermost last: (source name, renamed name, kind).
    scope: Vec<(String, String, BinderKind)>,
    /// Names that may not be used for fresh binders: every identifier in
    /// the input plus every signature symbol, plus renames already issued.
    used: BTreeSet<String>,
}

impl<'a> Parser<'a> {
    fn new(text: &str, sig: &'a Signature) -> Result<Self, ParseError> {
        let toks = lex(text)?;
        let mut used = BTreeSet::new();
        for (_, t) in &toks {
            if let Tok::Ident(name) = t {
                used.insert(name.clone());
            }
        }
        Ok(Parser { sig, toks, i: 0, scope: Vec::new(), used })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.i].1
    }

    fn pos(&self) -> usize {
        self.toks[self.i].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.i].1.clone();
        if t != Tok::Eof {
            self.i += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError { pos: self.pos(), msg: msg.into() })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == &tok {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn ident(&mut self, what: &str) -> Result<(usize, String), ParseError> {
        let pos = self.pos();
        match self.peek() {
            Tok::Ident(name) => {
                let name = name.clone();
                self.bump();
                Ok((pos, name))
            }
            _ => self.err(format!("expected {what}")),
        }
    }

    /// Looks up an in-scope binder (innermost first).
    fn lookup(&self, name: &str) -> Option<(&str, BinderKind)> {
        self.scope
            .iter()
            .rev()
            .find(|(src, _, _)| src == name)
            .map(|(_, renamed, kind)| (renamed.as_str(), *kind))
    }

    /// Picks the stored name for a new binder, renaming away from
    /// signature symbols, enclosing binders, and every source identifier.
    fn bind(&mut self, source: &str, kind: BinderKind) -> String {
        let clashes = self.sig.mentions(source)
            || self.scope.iter().any(|(src, renamed, _)| src == source || renamed == source);
        let renamed = if !clashes {
            source.to_owned()
        } else {
            let mut n = 1u32;
            loop {
                let cand = format!("{source}_{n}");
                if !self.used.contains(&cand) && !self.sig.mentions(&cand) {
                    break cand;
                }
                n += 1;
            }
        };
        self.used.insert(renamed.clone());
        self.scope.push((source.to_owned(), renamed.clone(), kind));
        renamed
    }

    fn unbind(&mut self) {
        self.scope.pop();
    }

    // ---- Temporal grammar -------------------------------------------------

    fn formula(&mut self) -> Result<TempFormula, ParseError> {
        let lhs = self.formula_or()?;
        if self.peek() == &Tok::ImpliesOp {
            self.bump();
            let rhs = self.formula()?;
            // T1 ⇒ T2 ≜ ¬T1 ∨ T2 ≜ ¬(¬¬T1 ∧ ¬T2)
            Ok(desugar(&TempFormula::Implies(Box::new(lhs), Box::new(rhs))))
        } else {
            Ok(lhs)
        }
    }

    fn formula_or(&mut self) -> Result<TempFormula, ParseError> {
        let mut lhs = self.formula_and()?;
        while self.peek() == &Tok::OrOp {
            self.bump();
            let rhs = self.formula_and()?;
            lhs = desugar(&TempFormula::Or(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn formula_and(&mut self) -> Result<TempFormula, ParseError> {
        let mut lhs = self.formula_unary()?;
        while self.peek() == &Tok::AndOp {
            self.bump();
            let rhs = self.formula_unary()?;
            lhs = TempFormula::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn formula_unary(&mut self) -> Result<TempFormula, ParseError> {
        match self.peek().clone() {
            Tok::Tilde => {
                self.bump();
                Ok(TempFormula::Not(Box::new(self.formula_unary()?)))
            }
            Tok::BoxOp => {
                self.bump();
                Ok(TempFormula::Always(Box::new(self.formula_unary()?)))
            }
            Tok::ForallR | Tok::ExistsR | Tok::ForallF | Tok::ExistsF => self.formula_quant(),
            _ => self.formula_primary(),
        }
    }

    fn formula_quant(&mut self) -> Result<TempFormula, ParseError> {
        let quant = self.bump();
        let (_, source) = self.ident("a variable after the quantifier")?;
        self.expect(Tok::Dot, "`.` after the bound variable")?;
        let kind = match quant {
            Tok::ForallR | Tok::ExistsR => BinderKind::Rigid,
            _ => BinderKind::Flex,
        };
        let renamed = self.bind(&source, kind);
        let body = self.formula();
        self.unbind();
        let body = Box::new(body?);
        Ok(match quant {
            Tok::ForallR => TempFormula::ForallRigid(renamed, body),
            Tok::ForallF => TempFormula::ForallFlex(renamed, body),
            Tok::ExistsR => desugar(&TempFormula::ExistsRigid(renamed, body)),
            Tok::ExistsF => desugar(&TempFormula::ExistsFlex(renamed, body)),
            _ => unreachable!(),
        })
    }

    fn formula_primary(&mut self) -> Result<TempFormula, ParseError> {
        match self.peek() {
            Tok::LParen => {
                self.bump();
                let f = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            Tok::LBracket => {
                self.bump();
                let action = self.action()?;
                self.expect(Tok::RBracket, "`]` after the action")?;
                self.expect(Tok::Underscore, "`_` after `]`")?;
                self.expect(Tok::Lt, "`<` starting the subscript")?;
                let mut subs = Vec::new();
                loop {
                    let (pos, name) = self.ident("a flexible variable in the subscript")?;
                    let resolved = match self.lookup(&name) {
                        Some((renamed, BinderKind::Flex)) => renamed.to_owned(),
                        Some((_, BinderKind::Rigid)) => {
                            return Err(ParseError {
                                pos,
                                msg: format!("`{name}` is rigid; subscripts list flexible variables"),
                            })
                        }
                        None if self.sig.is_flexible(&name) => name,
                        None => {
                            return Err(ParseError {
                                pos,
                                msg: format!("`{name}` is not a flexible variable"),
                            })
                        }
                    };
                    subs.push(resolved);
                    match self.peek() {
                        Tok::Comma => {
                            self.bump();
                        }
                        Tok::Gt => {
                            self.bump();
                            break;
                        }
                        _ => return self.err("expected `,` or `>` in the subscript"),
                    }
                }
                Ok(TempFormula::ActionBox(action, subs))
            }
            Tok::Ident(_) => Ok(TempFormula::Atom(self.atom()?)),
            _ => self.err("expected a formula"),
        }
    }

    // ---- Action grammar ---------------------------------------------------

    fn action(&mut self) -> Result<Action, ParseError> {
        let lhs = self.action_or()?;
        if self.peek() == &Tok::ImpliesOp {
            self.bump();
            let rhs = self.action()?;
            Ok(desugar_action(&Action::Implies(Box::new(lhs), Box::new(rhs))))
        } else {
            Ok(lhs)
        }
    }

    fn action_or(&mut self) -> Result<Action, ParseError> {
        let mut lhs = self.action_and()?;
        while self.peek() == &Tok::OrOp {
            self.bump();
            let rhs = self.action_and()?;
            lhs = desugar_action(&Action::Or(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn action_and(&mut self) -> Result<Action, ParseError> {
        let mut lhs = self.action_unary()?;
        while self.peek() == &Tok::AndOp {
            self.bump();
            let rhs = self.action_unary()?;
            lhs = Action::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn action_unary(&mut self) -> Result<Action, ParseError> {
        match self.peek() {
            Tok::Tilde => {
                self.bump();
                Ok(Action::Not(Box::new(self.action_unary()?)))
            }
            Tok::ForallR | Tok::ExistsR => {
                let quant = self.bump();
                let (_, source) = self.ident("a variable after the quantifier")?;
                self.expect(Tok::Dot, "`.` after the bound variable")?;
                let renamed = self.bind(&source, BinderKind::Rigid);
                let body = self.action();
                self.unbind();
                let body = Box::new(body?);
                Ok(match quant {
                    Tok::ForallR => Action::ForallRigid(renamed, body),
                    _ => desugar_action(&Action::ExistsRigid(renamed, body)),
                })
            }
            Tok::ForallF | Tok::ExistsF => {
                self.err("flexible quantifiers may not appear inside an action")
            }
            Tok::BoxOp | Tok::LBracket => {
                self.err("temporal operators may not appear inside an action")
            }
            Tok::LParen => {
                self.bump();
                let a = self.action()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(a)
            }
            _ => self.atom(),
        }
    }

    /// An atomic action: a relation application or an equality.
    fn atom(&mut self) -> Result<Action, ParseError> {
        if let Tok::Ident(name) = self.peek().clone() {
            if self.sig.relation_arity(&name).is_some() && self.lookup(&name).is_none() {
                let (pos, _) = self.ident("a relation")?;
                let arity = self.sig.relation_arity(&name).unwrap();
                let args = self.arg_list(pos, &name, arity)?;
                return Ok(Action::Rel(name, args));
            }
        }
        let lhs = self.term()?;
        self.expect(Tok::Equal, "`=` (relation applications and equalities are the only atoms)")?;
        let rhs = self.term()?;
        Ok(Action::Eq(lhs, rhs))
    }

    /// `(E1, …, En)` with the exact declared arity; empty for arity 0,
    /// where the parentheses may be omitted entirely.
    fn arg_list(&mut self, at: usize, name: &str, arity: usize) -> Result<Vec<Term>, ParseError> {
        if self.peek() != &Tok::LParen {
            if arity == 0 {
                return Ok(Vec::new());
            }
            return self.err(format!("`{name}` takes {arity} argument(s)"));
        }
        self.bump();
        let mut args = Vec::new();
        if self.peek() == &Tok::RParen {
            self.bump();
        } else {
            loop {
                args.push(self.term()?);
                match self.peek() {
                    Tok::Comma => {
                        self.bump();
                    }
                    Tok::RParen => {
                        self.bump();
                        break;
                    }
                    _ => return self.err("expected `,` or `)` in the argument list"),
                }
            }
        }
        if args.len() != arity {
            return Err(ParseError {
                pos: at,
                msg: format!("`{name}` takes {arity} argument(s), got {}", args.len()),
            });
        }
        Ok(args)
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        let (pos, name) = self.ident("a term")?;
        // Bound variables shadow nothing (binders rename away from the
        // signature), so scope lookup and signature lookup are disjoint.
        let base = if let Some((renamed, kind)) = self.lookup(&name) {
            match kind {
                BinderKind::Rigid => Term::RigidVar(renamed.to_owned()),
                BinderKind::Flex => Term::FlexVar(renamed.to_owned()),
            }
        } else if self.sig.is_flexible(&name) {
            Term::FlexVar(name.clone())
        } else if let Some(arity) = self.sig.function_arity(&name) {
            let args = self.arg_list(pos, &name, arity)?;
            Term::App(name.clone(), args)
        } else if self.sig.relation_arity(&name).is_some() {
            return Err(ParseError {
                pos,
                msg: format!("relation `{name}` used as a term"),
            });
        } else {
            return Err(ParseError { pos, msg: format!("unbound variable `{name}`") });
        };
        if self.peek() == &Tok::Prime {
            let prime_pos = self.pos();
            self.bump();
            return match base {
                Term::FlexVar(x) => Ok(Term::PrimedFlexVar(x)),
                _ => Err(ParseError {
                    pos: prime_pos,
                    msg: "only flexible variables can be primed".to_owned(),
                }),
            };
        }
        Ok(base)
    }
}

/// Parses a temporal formula against the signature. The result contains
/// only core constructors; binders are renamed apart (no shadowing, no
/// clashes with signature symbols).
pub fn parse(text: &str, sig: &Signature) -> Result<TempFormula, ParseError> {
    let mut p = Parser::new(text, sig)?;
    let f = p.formula()?;
    if p.peek() != &Tok::Eof {
        return p.err("unexpected trailing input");
    }
    Ok(f)
}

// ---- Printing --------------------------------------------------------------

fn print_term(t: &Term, out: &mut String) {
    match t {
        Term::RigidVar(x) | Term::FlexVar(x) => out.push_str(x),
        Term::PrimedFlexVar(x) => {
            out.push_str(x);
            out.push('\'');
        }
        Term::App(f, args) => {
            out.push_str(f);
            if !args.is_empty() {
                out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    print_term(a, out);
                }
                out.push(')');
            }
        }
    }
}

/// Precedence levels: quantifiers 0, `=>` 1, `\/` 2, `/\` 3, `~` 4, atoms 5.
fn action_prec(a: &Action) -> u8 {
    match a {
        Action::ForallRigid(..) | Action::ExistsRigid(..) => 0,
        Action::Implies(..) => 1,
        Action::Or(..) => 2,
        Action::And(..) => 3,
        Action::Not(..) => 4,
        Action::Rel(..) | Action::Eq(..) => 5,
    }
}

fn print_action_at(a: &Action, min: u8, out: &mut String) {
    if action_prec(a) < min {
        out.push('(');
        print_action_at(a, 0, out);
        out.push(')');
        return;
    }
    match a {
        Action::Rel(r, args) => {
            out.push_str(r);
            if !args.is_empty() {
                out.push('(');
                for (i, t) in args.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    print_term(t, out);
                }
                out.push(')');
            }
        }
        Action::Eq(l, r) => {
            print_term(l, out);
            out.push_str(" = ");
            print_term(r, out);
        }
        Action::ForallRigid(x, b) => {
            out.push_str("\\A ");
            out.push_str(x);
            out.push_str(" . ");
            print_action_at(b, 0, out);
        }
        Action::ExistsRigid(x, b) => {
            out.push_str("\\E ");
            out.push_str(x);
            out.push_str(" . ");
            print_action_at(b, 0, out);
        }
        Action::And(l, r) => {
            print_action_at(l, 3, out);
            out.push_str(" /\\ ");
            print_action_at(r, 4, out);
        }
        Action::Or(l, r) => {
            print_action_at(l, 2, out);
            out.push_str(" \\/ ");
            print_action_at(r, 3, out);
        }
        Action::Implies(l, r) => {
            print_action_at(l, 2, out);
            out.push_str(" => ");
            print_action_at(r, 1, out);
        }
        Action::Not(b) => {
            out.push_str("~ ");
            print_action_at(b, 4, out);
        }
    }
}

fn temp_prec(t: &TempFormula) -> u8 {
    match t {
        TempFormula::ForallRigid(..)
        | TempFormula::ForallFlex(..)
        | TempFormula::ExistsRigid(..)
        | TempFormula::ExistsFlex(..) => 0,
        TempFormula::Implies(..) => 1,
        TempFormula::Or(..) => 2,
        TempFormula::And(..) => 3,
        TempFormula::Not(..) | TempFormula::Always(..) => 4,
        TempFormula::Atom(..) | TempFormula::ActionBox(..) => 5,
    }
}

fn print_temp_at(t: &TempFormula, min: u8, out: &mut String) {
    if temp_prec(t) < min {
        out.push('(');
        print_temp_at(t, 0, out);
        out.push(')');
        return;
    }
    match t {
        TempFormula::Atom(a) => print_action_at(a, 5, out),
        TempFormula::Always(b) => {
            out.push_str("[] ");
            print_temp_at(b, 4, out);
        }
        TempFormula::Not(b) => {
            out.push_str("~ ");
            print_temp_at(b, 4, out);
        }
        TempFormula::And(l, r) => {
            print_temp_at(l, 3, out);
            out.push_str(" /\\ ");
            print_temp_at(r, 4, out);
        }
        TempFormula::Or(l, r) => {
            print_temp_at(l, 2, out);
            out.push_str(" \\/ ");
            print_temp_at(r, 3, out);
        }
        TempFormula::Implies(l, r) => {
            print_temp_at(l, 2, out);
            out.push_str(" => ");
            print_temp_at(r, 1, out);
        }
        TempFormula::ActionBox(a, subs) => {
            out.push('[');
            print_action_at(a, 0, out);
            out.push_str("]_<");
            for (i, s) in subs.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(s);
            }
            out.push('>');
        }
        TempFormula::ForallRigid(x, b) => {
            out.push_str("\\A ");
            out.push_str(x);
            out.push_str(" . ");
            print_temp_at(b, 0, out);
        }
        TempFormula::ForallFlex(x, b) => {
            out.push_str("\\AA ");
            out.push_str(x);
            out.push_str(" . ");
            print_temp_at(b, 0, out);
        }
        TempFormula::ExistsRigid(x, b) => {
            out.push_str("\\E ");
            out.push_str(x);
            out.push_str(" . ");
            print_temp_at(b, 0, out);
        }
        TempFormula::ExistsFlex(x, b) => {
            out.push_str("\\EE ");
            out.push_str(x);
            out.push_str(" . ");
            print_temp_at(b, 0, out);
        }
    }
}

/// Prints a formula in the concrete grammar; parsing the output against
/// the same signature reproduces the AST (for parser-produced and other
/// shadowing-free core ASTs).
pub fn print(t: &TempFormula) -> String {
    let mut out = String::new();
    print_temp_at(t, 0, &mut out);
    out
}

/// Prints an action in the concrete grammar.
pub fn print_action(a: &Action) -> String {
    let mut out = String::new();
    print_action_at(a, 0, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interp::Signature;
    use alloc::string::ToString;
    use alloc::{vec, vec::Vec};

    fn s(x: &str) -> String {
        x.to_string()
    }

    fn sig() -> Signature {
        Signature::new(
            vec![(s("f"), 1), (s("g"), 2), (s("c"), 0)],
            vec![(s("P"), 1), (s("Q"), 0), (s("S"), 2)],
            vec![s("x"), s("y")],
        )
        .unwrap()
    }

    fn b<T>(t: T) -> Box<T> {
        Box::new(t)
    }

    #[test]
    fn parse_examples() {
        let sig = sig();
        assert_eq!(
            parse("[][x' = x]_<x>", &sig).unwrap(),
            TempFormula::Always(b(TempFormula::ActionBox(
                Action::Eq(Term::PrimedFlexVar(s("x")), Term::FlexVar(s("x"))),
                vec![s("x")],
            )))
        );
        assert_eq!(
            parse("\\A v . P(v)", &sig).unwrap(),
            TempFormula::ForallRigid(
                s("v"),
                b(TempFormula::Atom(Action::Rel(s("P"), vec![Term::RigidVar(s("v"))]))),
            )
        );
        // ∃∃ and ∃ desugar on sight; the shadowed rebinding of `z` is
        // renamed apart.
        assert_eq!(
            parse("\\EE z . ~ \\AA z . ~ Q", &sig).unwrap(),
            TempFormula::Not(b(TempFormula::ForallFlex(
                s("z"),
                b(TempFormula::Not(b(TempFormula::Not(b(TempFormula::ForallFlex(
                    s("z_1"),
                    b(TempFormula::Not(b(TempFormula::Atom(Action::Rel(s("Q"), vec![]))))),
                )))))),
            )))
        );
    }

    #[test]
    fn implication_desugars_in_two_steps() {
        let sig = sig();
        // P ⇒ Q → ¬P ∨ Q → ¬(¬¬P ∧ ¬Q)
        let p = TempFormula::Atom(Action::Rel(s("P"), vec![Term::FlexVar(s("x"))]));
        let q = TempFormula::Atom(Action::Rel(s("Q"), vec![]));
        let expect = TempFormula::Not(b(TempFormula::And(
            b(TempFormula::Not(b(TempFormula::Not(b(p.clone()))))),
            b(TempFormula::Not(b(q.clone()))),
        )));
        assert_eq!(parse("P(x) => Q", &sig).unwrap(), expect);
        assert_eq!(desugar(&TempFormula::Implies(b(p), b(q))), expect);
    }

    #[test]
    fn desugar_examples() {
        // ∃v.A → ¬∀v.¬A at the action level.
        let a = Action::Rel(s("P"), vec![Term::RigidVar(s("v"))]);
        assert_eq!(
            desugar_action(&Action::ExistsRigid(s("v"), b(a.clone()))),
            Action::Not(b(Action::ForallRigid(s("v"), b(Action::Not(b(a)))))),
        );
        // Core formulas are fixed points.
        let sig = sig();
        for text in ["[] (x = y)", "[x' = f(x)]_<x> /\\ ~ Q", "\\AA u . [P(u)]_<u>"] {
            let t = parse(text, &sig).unwrap();
            assert_eq!(desugar(&t), t, "{text}");
        }
    }

    #[test]
    fn desugar_preserves_free_variables() {
        let sig = sig();
        let texts = [
            "\\E v . P(v) => S(v, x)",
            "Q \\/ \\A w . S(w, c)",
            "\\EE u . P(u) => [u' = u]_<u,x>",
        ];
        for text in texts {
            let t = parse(text, &sig).unwrap();
            let d = desugar(&t);
            assert_eq!(free_rigid_vars(&t), free_rigid_vars(&d), "{text}");
            assert_eq!(free_flex_vars(&t), free_flex_vars(&d), "{text}");
        }
        // And on a sugared AST built programmatically.
        let sugared = TempFormula::Implies(
            b(TempFormula::Atom(Action::Rel(s("P"), vec![Term::RigidVar(s("v"))]))),
            b(TempFormula::ExistsRigid(
                s("w"),
                b(TempFormula::Atom(Action::Rel(s("S"), vec![Term::RigidVar(s("w")), Term::FlexVar(s("x"))]))),
            )),
        );
        assert_eq!(free_rigid_vars(&sugared), free_rigid_vars(&desugar(&sugared)));
        assert_eq!(free_flex_vars(&sugared), free_flex_vars(&desugar(&sugared)));
    }

    #[test]
    fn desugar_is_idempotent() {
        let sugared = TempFormula::Or(
            b(TempFormula::ExistsFlex(s("u"), b(TempFormula::Atom(Action::Rel(s("P"), vec![Term::FlexVar(s("u"))]))))),
            b(TempFormula::Implies(
                b(TempFormula::Atom(Action::Rel(s("Q"), vec![]))),
                b(TempFormula::Atom(Action::Eq(Term::FlexVar(s("x")), Term::FlexVar(s("y"))))),
            )),
        );
        let once = desugar(&sugared);
        assert_eq!(desugar(&once), once);
    }

    #[test]
    fn print_examples() {
        let sig = sig();
        assert_eq!(
            print(&TempFormula::Always(b(TempFormula::Atom(Action::Eq(
                Term::FlexVar(s("x")),
                Term::FlexVar(s("x"))
            ))))),
            "[] x = x"
        );
        let roundtrip = |text: &str| {
            let t = parse(text, &sig).unwrap();
            assert_eq!(parse(&print(&t), &sig).unwrap(), t, "{text}");
        };
        roundtrip("[][x' = x]_<x,y>");
        roundtrip("\\A v . (P(v) => Q) /\\ x = y");
        roundtrip("~ (Q \\/ P(c)) => [] \\AA u . [S(u, x)]_<u>");
        roundtrip("[\\A v . S(v, x') => x' = f(x)]_<x>");
    }

    #[test]
    fn minimal_atoms() {
        let sig = sig();
        // Connectives between atoms are temporal nodes, not action nodes.
        assert_eq!(
            parse("x = y /\\ Q", &sig).unwrap(),
            TempFormula::And(
                b(TempFormula::Atom(Action::Eq(Term::FlexVar(s("x")), Term::FlexVar(s("y"))))),
                b(TempFormula::Atom(Action::Rel(s("Q"), vec![]))),
            )
        );
        // Primes live in atoms; the atom is still a leaf.
        assert!(matches!(
            parse("x' = f(x)", &sig).unwrap(),
            TempFormula::Atom(Action::Eq(Term::PrimedFlexVar(_), Term::App(_, _)))
        ));
    }

    #[test]
    fn alpha_renaming_eliminates_shadowing() {
        let sig = sig();
        // Binder shadows a declared flexible variable.
        let t = parse("\\A x . x = c", &sig).unwrap();
        match &t {
            TempFormula::ForallRigid(name, body) => {
                assert_eq!(name, "x_1");
                assert_eq!(
                    **body,
                    TempFormula::Atom(Action::Eq(Term::RigidVar(s("x_1")), Term::App(s("c"), vec![])))
                );
            }
            other => panic!("unexpected shape {other:?}"),
        }
        // Nested rebinding, and freshness avoids names in the source text.
        let t = parse("\\A v . (\\A v . P(v)) /\\ P(v) /\\ P(v_1)", &sig);
        assert!(t.is_err(), "v_1 is free and unbound: {t:?}");
        let t = parse("\\A v . (\\A v . S(v, x)) /\\ P(v)", &sig).unwrap();
        let printed = print(&t);
        assert_eq!(printed, "\\A v . (\\A v_1 . S(v_1, x)) /\\ P(v)");
        assert_eq!(parse(&printed, &sig).unwrap(), t);
    }

    #[test]
    fn parse_errors_carry_positions() {
        let sig = sig();
        let cases: &[(&str, &str)] = &[
            ("z = x", "unbound variable"),
            ("P(x, y)", "argument"),
            ("f(x) = P", "used as a term"),
            ("[x' = x]_<>", "subscript"),
            ("[x' = x]_<c>", "not a flexible"),
            ("\\A v . v' = x", "only flexible variables"),
            ("x'' = x", "expected"),
            ("[] x' = x /\\ [[] Q]_<x>", "temporal operators may not appear"),
            ("[\\AA u . u = x]_<x>", "flexible quantifiers may not appear"),
            ("x = y )", "trailing"),
            ("Q %", "unexpected character"),
            ("x \\and y", "unknown operator"),
            ("", "expected a formula"),
            ("\\A x", "`.`"),
        ];
        for (text, needle) in cases {
            match parse(text, &sig) {
                Err(e) => {
                    assert!(
                        e.msg.contains(needle),
                        "error for `{text}` was `{}` (wanted `{needle}`)",
                        e.msg
                    );
                    assert!(e.pos <= text.len());
                }
                Ok(t) => panic!("`{text}` unexpectedly parsed: {t:?}"),
            }
        }
    }

    #[test]
    fn quantifier_bodies_extend_maximally() {
        let sig = sig();
        let t = parse("\\A v . P(v) /\\ Q", &sig).unwrap();
        assert!(
            matches!(&t, TempFormula::ForallRigid(_, body) if matches!(**body, TempFormula::And(..))),
            "{t:?}"
        );
        // Precedence: ~ binds tighter than /\ than \/ than =>.
        let t = parse("~ Q /\\ Q", &sig).unwrap();
        assert!(matches!(&t, TempFormula::And(l, _) if matches!(**l, TempFormula::Not(..))));
        // `=>` is right-associative: a => (b => c).
        let t = parse("Q => Q => Q", &sig).unwrap();
        let u = parse("Q => (Q => Q)", &sig).unwrap();
        assert_eq!(t, u);
    }

    /// Deterministic generator for well-formed, shadowing-free core ASTs.
    mod gen {
        use super::*;
        use rand::rngs::StdRng;
        use rand::Rng;

        pub struct Gen<'a> {
            pub sig: &'a Signature,
            pub rng: StdRng,
            pub rigid: Vec<String>,
            pub flex_bound: Vec<String>,
            pub next_binder: u32,
        }

        impl<'a> Gen<'a> {
            fn flexes(&self) -> Vec<String> {
                self.sig
                    .flexible()
                    .iter()
                    .cloned()
                    .chain(self.flex_bound.iter().cloned())
                    .collect()
            }

            pub fn term(&mut self, depth: u32, primes: bool) -> Term {
                let flexes = self.flexes();
                let pick = self.rng.gen_range(0..10);
                if depth > 0 && pick < 3 {
                    let (f, arity) = if self.rng.gen_bool(0.5) { ("f", 1) } else { ("g", 2) };
                    let args = (0..arity).map(|_| self.term(depth - 1, primes)).collect();
                    Term::App(s(f), args)
                } else if pick < 5 && !self.rigid.is_empty() {
                    let i = self.rng.gen_range(0..self.rigid.len());
                    Term::RigidVar(self.rigid[i].clone())
                } else if pick < 9 {
                    let i = self.rng.gen_range(0..flexes.len());
                    let x = flexes[i].clone();
                    if primes && self.rng.gen_bool(0.3) {
                        Term::PrimedFlexVar(x)
                    } else {
                        Term::FlexVar(x)
                    }
                } else {
                    Term::App(s("c"), vec![])
                }
            }

            pub fn leaf(&mut self, depth: u32, primes: bool) -> Action {
                match self.rng.gen_range(0..4) {
                    0 => Action::Rel(s("P"), vec![self.term(depth, primes)]),
                    1 => Action::Rel(s("Q"), vec![]),
                    2 => Action::Rel(s("S"), vec![self.term(depth, primes), self.term(depth, primes)]),
                    _ => Action::Eq(self.term(depth, primes), self.term(depth, primes)),
                }
            }

            pub fn action(&mut self, depth: u32) -> Action {
                if depth == 0 {
                    return self.leaf(1, true);
                }
                match self.rng.gen_range(0..6) {
                    0 => Action::And(b(self.action(depth - 1)), b(self.action(depth - 1))),
                    1 => Action::Not(b(self.action(depth - 1))),
                    2 => {
                        let name = format!("r{}", self.next_binder);
                        self.next_binder += 1;
                        self.rigid.push(name.clone());
                        let body = self.action(depth - 1);
                        self.rigid.pop();
                        Action::ForallRigid(name, b(body))
                    }
                    _ => self.leaf(1, true),
                }
            }

            pub fn formula(&mut self, depth: u32) -> TempFormula {
                if depth == 0 {
                    return TempFormula::Atom(self.leaf(1, true));
                }
                match self.rng.gen_range(0..9) {
                    0 => TempFormula::Always(b(self.formula(depth - 1))),
                    1 => TempFormula::Not(b(self.formula(depth - 1))),
                    2 => TempFormula::And(b(self.formula(depth - 1)), b(self.formula(depth - 1))),
                    3 => {
                        let action = self.action(depth - 1);
                        let mut subs: Vec<String> = flex_vars_of_action(&action).into_iter().collect();
                        if subs.is_empty() {
                            subs.push(s("x"));
                        }
                        TempFormula::ActionBox(action, subs)
                    }
                    4 => {
                        let name = format!("r{}", self.next_binder);
                        self.next_binder += 1;
                        self.rigid.push(name.clone());
                        let body = self.formula(depth - 1);
                        self.rigid.pop();
                        TempFormula::ForallRigid(name, b(body))
                    }
                    5 => {
                        let name = format!("u{}", self.next_binder);
                        self.next_binder += 1;
                        self.flex_bound.push(name.clone());
                        let body = self.formula(depth - 1);
                        self.flex_bound.pop();
                        TempFormula::ForallFlex(name, b(body))
                    }
                    _ => TempFormula::Atom(self.leaf(1, true)),
                }
            }
        }
    }

    #[test]
    fn random_core_asts_round_trip() {
        use rand::SeedableRng;
        let sig = sig();
        let mut g = gen::Gen {
            sig: &sig,
            rng: rand::rngs::StdRng::seed_from_u64(0x5eed),
            rigid: Vec::new(),
            flex_bound: Vec::new(),
            next_binder: 0,
        };
        for i in 0..300 {
            let t = g.formula(4);
            let printed = print(&t);
            let back = parse(&printed, &sig)
                .unwrap_or_else(|e| panic!("case {i}: `{printed}` failed to reparse: {e}"));
            assert_eq!(back, t, "case {i}: `{printed}`");
        }
    }

    #[test]
    fn fuzzed_inputs_never_crash() {
        use rand::Rng;
        use rand::SeedableRng;
        let sig = sig();
        let mut rng = rand::rngs::StdRng::seed_from_u64(0xf22);
        let alphabet: Vec<char> =
            "xyfgcPQS ()[]_<>,.'=~\\/AE1".chars().collect();
        for _ in 0..2000 {
            let len = rng.gen_range(0..40);
            let text: String =
                (0..len).map(|_| alphabet[rng.gen_range(0..alphabet.len())]).collect();
            let _ = parse(&text, &sig);
        }
        // Mutated well-formed inputs.
        let base = "\\A v . (P(v) => Q) /\\ [][x' = f(x)]_<x,y>";
        for _ in 0..2000 {
            let mut text: Vec<char> = base.chars().collect();
            let i = rng.gen_range(0..text.len());
            text[i] = alphabet[rng.gen_range(0..alphabet.len())];
            let text: String = text.into_iter().collect();
            let _ = parse(&text, &sig);
        }
    }
}
