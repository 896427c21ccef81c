//! A small proof-checking kernel for intuitionistic higher-order logic over
//! the simply typed λ-calculus with `Prop`, the implication constant `(⇒)`,
//! and a family of universal quantifier constants `∀_T`.
//!
//! The kernel checks explicit derivation trees; it never searches. Trees
//! carry the hypothesis-context and truth rules. Equality premises of those
//! rules are not themselves trees: definitional equality `Γ ⊢ M ≡ N : T` is
//! decided by [`def_eq`] (βη-normalization and α-comparison), which is sound
//! and complete for the symmetric-transitive congruence closure of β and η
//! on well-typed terms, so nothing is gained or lost by deciding instead of
//! deriving. Reflexivity-shaped premises `M ≡ M : T` amount to typing and
//! are discharged by [`infer_type`].
//!
//! The η rule is applied with the standard freshness side condition
//! (`x ∉ FV(M, N)`), which its usual statement leaves implicit.
//!
//! Connectives beyond `⇒` and `∀` are definitions, not primitives:
//! `⊥ ≜ ∀(p:Prop).p`, `⊤ ≜ ∀(p:Prop).p ⇒ p`, `¬M ≜ M ⇒ ⊥`,
//! `M ∧ N ≜ ∀(p:Prop).(M ⇒ N ⇒ p) ⇒ p`,
//! `M ∨ N ≜ ∀(p:Prop).(M ⇒ p) ⇒ (N ⇒ p) ⇒ p`, and
//! `∃(x:T).M ≜ ∀(p:Prop).(∀(x:T).M ⇒ p) ⇒ p`.
//!
//! Derivations serialize as S-expressions, one node per rule application:
//! `(rule-name (premise ...) conclusion)`. See the reader functions for the
//! concrete term and judgment grammar.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

// ---------------------------------------------------------------------------
// Types and terms
// ---------------------------------------------------------------------------

/// Simple types: named base types, functions, and the type of propositions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HolType {
    Base(String),
    Arrow(Box<HolType>, Box<HolType>),
    Prop,
}

impl HolType {
    pub fn arrow(a: HolType, b: HolType) -> HolType {
        HolType::Arrow(Box::new(a), Box::new(b))
    }
}

impl fmt::Display for HolType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", type_to_sexp(self))
    }
}

/// Terms: variables, typed λ-abstraction, application, and the two logical
/// constants `(⇒) : Prop → Prop → Prop` and `∀_T : (T → Prop) → Prop`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HolTerm {
    Var(String),
    Lam(String, HolType, Box<HolTerm>),
    App(Box<HolTerm>, Box<HolTerm>),
    Imp,
    ForallC(HolType),
}

impl HolTerm {
    pub fn var(x: &str) -> HolTerm {
        HolTerm::Var(x.to_string())
    }

    pub fn lam(x: &str, t: HolType, body: HolTerm) -> HolTerm {
        HolTerm::Lam(x.to_string(), t, Box::new(body))
    }

    pub fn app(f: HolTerm, a: HolTerm) -> HolTerm {
        HolTerm::App(Box::new(f), Box::new(a))
    }
}

/// `M ⇒ N`, i.e. `(⇒) M N`.
pub fn imp(m: HolTerm, n: HolTerm) -> HolTerm {
    HolTerm::app(HolTerm::app(HolTerm::Imp, m), n)
}

/// `∀(x:T).M`, i.e. `∀_T (λ(x:T).M)`.
pub fn forall(x: &str, t: HolType, m: HolTerm) -> HolTerm {
    HolTerm::app(HolTerm::ForallC(t.clone()), HolTerm::lam(x, t, m))
}

/// `⊥ ≜ ∀(p:Prop).p`.
pub fn bot() -> HolTerm {
    forall("p", HolType::Prop, HolTerm::var("p"))
}

/// `⊤ ≜ ∀(p:Prop).p ⇒ p`.
pub fn top() -> HolTerm {
    forall("p", HolType::Prop, imp(HolTerm::var("p"), HolTerm::var("p")))
}

/// `¬M ≜ M ⇒ ⊥`.
pub fn neg(m: HolTerm) -> HolTerm {
    imp(m, bot())
}

/// A propositional variable name not free in any of the terms and distinct
/// from the listed names; `p`, then `p_1`, `p_2`, ….
fn fresh_prop_var(avoid_terms: &[&HolTerm], avoid_names: &[&str]) -> String {
    let mut k = 0usize;
    loop {
        let cand = if k == 0 { "p".to_string() } else { format!("p_{k}") };
        if avoid_terms.iter().all(|t| !free_in(&cand, t))
            && !avoid_names.contains(&cand.as_str())
        {
            return cand;
        }
        k += 1;
    }
}

/// `M ∧ N ≜ ∀(p:Prop).(M ⇒ N ⇒ p) ⇒ p`.
pub fn conj(m: HolTerm, n: HolTerm) -> HolTerm {
    let p = fresh_prop_var(&[&m, &n], &[]);
    let pv = HolTerm::var(&p);
    forall(&p, HolType::Prop, imp(imp(m, imp(n, pv.clone())), pv))
}

/// `M ∨ N ≜ ∀(p:Prop).(M ⇒ p) ⇒ (N ⇒ p) ⇒ p`.
pub fn disj(m: HolTerm, n: HolTerm) -> HolTerm {
    let p = fresh_prop_var(&[&m, &n], &[]);
    let pv = HolTerm::var(&p);
    forall(&p, HolType::Prop, imp(imp(m, pv.clone()), imp(imp(n, pv.clone()), pv)))
}

/// `∃(x:T).M ≜ ∀(p:Prop).(∀(x:T).M ⇒ p) ⇒ p`. The fresh `p` also avoids
/// `x`, since it occurs inside `x`'s scope.
pub fn exists(x: &str, t: HolType, m: HolTerm) -> HolTerm {
    let p = fresh_prop_var(&[&m], &[x]);
    let pv = HolTerm::var(&p);
    forall(&p, HolType::Prop, imp(forall(x, t, imp(m, pv.clone())), pv))
}

/// The closed encodings of the defined connectives, λ-abstracted over their
/// proposition (or predicate) arguments. `ex` needs the domain type.
pub fn elaborate_sugar(name: &str, type_arg: Option<&HolType>) -> Option<HolTerm> {
    let prop = HolType::Prop;
    match name {
        "bot" => Some(bot()),
        "top" => Some(top()),
        "not" => Some(HolTerm::lam("m", prop, neg(HolTerm::var("m")))),
        "and" => Some(HolTerm::lam(
            "m",
            prop.clone(),
            HolTerm::lam("n", prop, conj(HolTerm::var("m"), HolTerm::var("n"))),
        )),
        "or" => Some(HolTerm::lam(
            "m",
            prop.clone(),
            HolTerm::lam("n", prop, disj(HolTerm::var("m"), HolTerm::var("n"))),
        )),
        "ex" => {
            let t = type_arg?.clone();
            let ft = HolType::arrow(t.clone(), HolType::Prop);
            Some(HolTerm::lam(
                "f",
                ft,
                exists("x", t, HolTerm::app(HolTerm::var("f"), HolTerm::var("x"))),
            ))
        }
        _ => None,
    }
}

// ---------------------------------------------------------------------------
// Free variables, substitution, normalization, α-equality
// ---------------------------------------------------------------------------

pub fn free_in(x: &str, t: &HolTerm) -> bool {
    match t {
        HolTerm::Var(y) => x == y,
        HolTerm::Lam(y, _, b) => x != y && free_in(x, b),
        HolTerm::App(f, a) => free_in(x, f) || free_in(x, a),
        HolTerm::Imp | HolTerm::ForallC(_) => false,
    }
}

fn fresh_against(base: &str, taken: impl Fn(&str) -> bool) -> String {
    if !taken(base) {
        return base.to_string();
    }
    let mut k = 1usize;
    loop {
        let cand = format!("{base}_{k}");
        if !taken(&cand) {
            return cand;
        }
        k += 1;
    }
}

/// Capture-avoiding substitution `t⟨n/x⟩`; clashing binders are renamed with
/// deterministic numeric suffixes.
pub fn subst(t: &HolTerm, x: &str, n: &HolTerm) -> HolTerm {
    match t {
        HolTerm::Var(y) => {
            if y == x {
                n.clone()
            } else {
                t.clone()
            }
        }
        HolTerm::Imp | HolTerm::ForallC(_) => t.clone(),
        HolTerm::App(f, a) => HolTerm::app(subst(f, x, n), subst(a, x, n)),
        HolTerm::Lam(y, ty, b) => {
            if y == x || !free_in(x, b) {
                return t.clone();
            }
            if free_in(y, n) {
                let fresh =
                    fresh_against(y, |c| c == x || free_in(c, b) || free_in(c, n));
                let renamed = subst(b, y, &HolTerm::Var(fresh.clone()));
                HolTerm::Lam(fresh, ty.clone(), Box::new(subst(&renamed, x, n)))
            } else {
                HolTerm::Lam(y.clone(), ty.clone(), Box::new(subst(b, x, n)))
            }
        }
    }
}

fn beta_normalize(t: &HolTerm) -> HolTerm {
    match t {
        HolTerm::Var(_) | HolTerm::Imp | HolTerm::ForallC(_) => t.clone(),
        HolTerm::Lam(x, ty, b) => HolTerm::Lam(x.clone(), ty.clone(), Box::new(beta_normalize(b))),
        HolTerm::App(f, a) => {
            let f = beta_normalize(f);
            if let HolTerm::Lam(x, _, b) = &f {
                beta_normalize(&subst(b, x, a))
            } else {
                HolTerm::app(f, beta_normalize(a))
            }
        }
    }
}

/// η-contraction of a β-normal term (bottom-up `λx.M x → M` when `x` is not
/// free in `M`); in β-normal forms this cannot create new β-redexes.
fn eta_contract(t: &HolTerm) -> HolTerm {
    match t {
        HolTerm::Var(_) | HolTerm::Imp | HolTerm::ForallC(_) => t.clone(),
        HolTerm::App(f, a) => HolTerm::app(eta_contract(f), eta_contract(a)),
        HolTerm::Lam(x, ty, b) => {
            let b = eta_contract(b);
            if let HolTerm::App(f, a) = &b {
                if matches!(&**a, HolTerm::Var(y) if y == x) && !free_in(x, f) {
                    return (**f).clone();
                }
            }
            HolTerm::Lam(x.clone(), ty.clone(), Box::new(b))
        }
    }
}

/// The βη-normal form (terminating on well-typed terms).
pub fn normalize(t: &HolTerm) -> HolTerm {
    eta_contract(&beta_normalize(t))
}

/// α-equivalence; free variables must match by name.
pub fn alpha_eq(a: &HolTerm, b: &HolTerm) -> bool {
    fn go(a: &HolTerm, b: &HolTerm, pairs: &mut Vec<(String, String)>) -> bool {
        match (a, b) {
            (HolTerm::Var(x), HolTerm::Var(y)) => {
                for (px, py) in pairs.iter().rev() {
                    if px == x || py == y {
                        return px == x && py == y;
                    }
                }
                x == y
            }
            (HolTerm::Lam(x, tx, m), HolTerm::Lam(y, ty, n)) => {
                tx == ty && {
                    pairs.push((x.clone(), y.clone()));
                    let r = go(m, n, pairs);
                    pairs.pop();
                    r
                }
            }
            (HolTerm::App(f, a1), HolTerm::App(g, a2)) => go(f, g, pairs) && go(a1, a2, pairs),
            (HolTerm::Imp, HolTerm::Imp) => true,
            (HolTerm::ForallC(t1), HolTerm::ForallC(t2)) => t1 == t2,
            _ => false,
        }
    }
    go(a, b, &mut Vec::new())
}

// ---------------------------------------------------------------------------
// Typing and definitional equality
// ---------------------------------------------------------------------------

/// A typing context: named variables in binding order, unique names.
pub type Ctx = Vec<(String, HolType)>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HolError {
    Unbound(String),
    NotAFunction(HolType),
    ArgMismatch { expected: HolType, got: HolType },
    TypeMismatch { expected: HolType, got: HolType },
    DuplicateName(String),
}

impl fmt::Display for HolError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HolError::Unbound(x) => write!(f, "unbound variable `{x}`"),
            HolError::NotAFunction(t) => write!(f, "applied a term of non-function type {t}"),
            HolError::ArgMismatch { expected, got } => {
                write!(f, "argument type {got} where {expected} was expected")
            }
            HolError::TypeMismatch { expected, got } => {
                write!(f, "term has type {got} where {expected} was expected")
            }
            HolError::DuplicateName(x) => write!(f, "duplicate context variable `{x}`"),
        }
    }
}

fn ctx_lookup<'a>(ctx: &'a [(String, HolType)], x: &str) -> Option<&'a HolType> {
    ctx.iter().rev().find(|(y, _)| y == x).map(|(_, t)| t)
}

/// Validates name uniqueness in a context.
pub fn ctx_wf(ctx: &[(String, HolType)]) -> Result<(), HolError> {
    for (i, (x, _)) in ctx.iter().enumerate() {
        if ctx[..i].iter().any(|(y, _)| y == x) {
            return Err(HolError::DuplicateName(x.clone()));
        }
    }
    Ok(())
}

/// Infers the unique simple type of a term, corresponding to the reflexive
/// equality judgment `Γ ⊢ M ≡ M : T`.
pub fn infer_type(ctx: &[(String, HolType)], t: &HolTerm) -> Result<HolType, HolError> {
    match t {
        HolTerm::Var(x) => ctx_lookup(ctx, x).cloned().ok_or_else(|| HolError::Unbound(x.clone())),
        HolTerm::Imp => Ok(HolType::arrow(
            HolType::Prop,
            HolType::arrow(HolType::Prop, HolType::Prop),
        )),
        HolTerm::ForallC(t) => Ok(HolType::arrow(
            HolType::arrow(t.clone(), HolType::Prop),
            HolType::Prop,
        )),
        HolTerm::Lam(x, tx, b) => {
            let mut inner = ctx.to_vec();
            inner.push((x.clone(), tx.clone()));
            let tb = infer_type(&inner, b)?;
            Ok(HolType::arrow(tx.clone(), tb))
        }
        HolTerm::App(f, a) => {
            let tf = infer_type(ctx, f)?;
            let ta = infer_type(ctx, a)?;
            match tf {
                HolType::Arrow(dom, cod) => {
                    if *dom == ta {
                        Ok(*cod)
                    } else {
                        Err(HolError::ArgMismatch { expected: *dom, got: ta })
                    }
                }
                other => Err(HolError::NotAFunction(other)),
            }
        }
    }
}

fn check_type(ctx: &[(String, HolType)], t: &HolTerm, expected: &HolType) -> Result<(), HolError> {
    let got = infer_type(ctx, t)?;
    if &got == expected {
        Ok(())
    } else {
        Err(HolError::TypeMismatch { expected: expected.clone(), got })
    }
}

/// Decides `Γ ⊢ M ≡ N : T`: both sides must type-check at `T`, and their
/// βη-normal forms must be α-equal. Sound and complete for the equational
/// rules (reflexivity at variables and constants, symmetry, transitivity,
/// application and abstraction congruence, β, and η with freshness).
pub fn def_eq(
    ctx: &[(String, HolType)],
    m: &HolTerm,
    n: &HolTerm,
    ty: &HolType,
) -> Result<bool, HolError> {
    ctx_wf(ctx)?;
    check_type(ctx, m, ty)?;
    check_type(ctx, n, ty)?;
    Ok(alpha_eq(&normalize(m), &normalize(n)))
}

// ---------------------------------------------------------------------------
// Judgments, derivations, checking
// ---------------------------------------------------------------------------

/// The three judgment forms. Equality judgments are decided by [`def_eq`]
/// rather than concluded by derivation nodes, but remain expressible for
/// reporting and serialization.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Judgment {
    DefEq { ctx: Ctx, lhs: HolTerm, rhs: HolTerm, ty: HolType },
    Wf { ctx: Ctx, hyps: Vec<HolTerm> },
    True { ctx: Ctx, hyps: Vec<HolTerm>, prop: HolTerm },
}

/// One rule application: a rule name, premise sub-derivations in the rule's
/// order, and the concluded judgment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Derivation {
    pub rule: String,
    pub premises: Vec<Derivation>,
    pub conclusion: Judgment,
}

impl Derivation {
    pub fn new(rule: &str, premises: Vec<Derivation>, conclusion: Judgment) -> Self {
        Derivation { rule: rule.to_string(), premises, conclusion }
    }
}

/// Why and where a derivation failed: `path` indexes premises from the root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckError {
    pub path: Vec<usize>,
    pub reason: String,
}

impl fmt::Display for CheckError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at node ")?;
        if self.path.is_empty() {
            write!(f, "root")?;
        } else {
            for (i, k) in self.path.iter().enumerate() {
                if i > 0 {
                    write!(f, ".")?;
                }
                write!(f, "{k}")?;
            }
        }
        write!(f, ": {}", self.reason)
    }
}

/// The rule names accepted as derivation nodes.
pub const RULES: &[&str] = &[
    "wf-empty",
    "wf-hyp",
    "hyp",
    "conv",
    "imp-elim",
    "imp-intro",
    "forall-elim",
    "forall-intro",
];

fn hyps_alpha_eq(a: &[HolTerm], b: &[HolTerm]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| alpha_eq(x, y))
}

fn dest_imp(t: &HolTerm) -> Option<(&HolTerm, &HolTerm)> {
    if let HolTerm::App(fun, n) = t {
        if let HolTerm::App(c, m) = &**fun {
            if matches!(&**c, HolTerm::Imp) {
                return Some((m, n));
            }
        }
    }
    None
}

fn dest_forall(t: &HolTerm) -> Option<(&HolType, &HolTerm)> {
    if let HolTerm::App(c, m) = t {
        if let HolTerm::ForallC(ty) = &**c {
            return Some((ty, m));
        }
    }
    None
}

/// Checks every node of the derivation: premises recursively, then the
/// node's own rule instantiation and side conditions. On failure, reports
/// the first failing node (in premise order) and the reason.
pub fn check(d: &Derivation) -> Result<(), CheckError> {
    fn walk(d: &Derivation, path: &mut Vec<usize>) -> Result<(), CheckError> {
        for (i, p) in d.premises.iter().enumerate() {
            path.push(i);
            walk(p, path)?;
            path.pop();
        }
        node_check(d).map_err(|reason| CheckError { path: path.clone(), reason })
    }
    let mut path = Vec::new();
    walk(d, &mut path)
}

/// Convenience boolean form of [`check`].
pub fn check_ok(d: &Derivation) -> bool {
    check(d).is_ok()
}

fn expect_premises(d: &Derivation, n: usize) -> Result<&[Derivation], String> {
    if d.premises.len() == n {
        Ok(&d.premises)
    } else {
        Err(format!("rule `{}` takes {} premise(s), found {}", d.rule, n, d.premises.len()))
    }
}

fn expect_wf(j: &Judgment) -> Result<(&Ctx, &Vec<HolTerm>), String> {
    match j {
        Judgment::Wf { ctx, hyps } => Ok((ctx, hyps)),
        _ => Err("expected a well-formedness judgment".to_string()),
    }
}

fn expect_true(j: &Judgment) -> Result<(&Ctx, &Vec<HolTerm>, &HolTerm), String> {
    match j {
        Judgment::True { ctx, hyps, prop } => Ok((ctx, hyps, prop)),
        _ => Err("expected a truth judgment".to_string()),
    }
}

fn require(cond: bool, msg: &str) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.to_string())
    }
}

fn wf_judgment_typed(ctx: &Ctx, hyps: &[HolTerm]) -> Result<(), String> {
    ctx_wf(ctx).map_err(|e| e.to_string())?;
    for h in hyps {
        check_type(ctx, h, &HolType::Prop)
            .map_err(|e| format!("hypothesis is not a proposition: {e}"))?;
    }
    Ok(())
}

fn node_check(d: &Derivation) -> Result<(), String> {
    // Belt and braces: whatever the rule, the concluded judgment itself must
    // be well-typed, so the checker can never accept an ill-typed statement.
    match &d.conclusion {
        Judgment::Wf { ctx, hyps } => wf_judgment_typed(ctx, hyps)?,
        Judgment::True { ctx, hyps, prop } => {
            wf_judgment_typed(ctx, hyps)?;
            check_type(ctx, prop, &HolType::Prop)
                .map_err(|e| format!("conclusion is not a proposition: {e}"))?;
        }
        Judgment::DefEq { .. } => {
            return Err("equality judgments are decided, not concluded by rules".to_string())
        }
    }
    match d.rule.as_str() {
        "wf-empty" => {
            expect_premises(d, 0)?;
            let (_, hyps) = expect_wf(&d.conclusion)?;
            require(hyps.is_empty(), "wf-empty concludes an empty hypothesis list")
        }
        "wf-hyp" => {
            let prem = expect_premises(d, 1)?;
            let (pctx, phyps) = expect_wf(&prem[0].conclusion)?;
            let (ctx, hyps) = expect_wf(&d.conclusion)?;
            require(ctx == pctx, "context changed across wf-hyp")?;
            require(
                hyps.len() == phyps.len() + 1 && hyps_alpha_eq(&hyps[..phyps.len()], phyps),
                "wf-hyp must extend the premise hypotheses by exactly one",
            )
            // The new hypothesis was already typed by the conclusion check.
        }
        "hyp" => {
            let prem = expect_premises(d, 1)?;
            let (pctx, phyps) = expect_wf(&prem[0].conclusion)?;
            let (ctx, hyps, prop) = expect_true(&d.conclusion)?;
            require(ctx == pctx, "context differs from the well-formedness premise")?;
            require(hyps_alpha_eq(hyps, phyps), "hypotheses differ from the premise")?;
            require(hyps.iter().any(|h| alpha_eq(h, prop)), "proposition is not a hypothesis")
        }
        "conv" => {
            let prem = expect_premises(d, 1)?;
            let (pctx, phyps, pprop) = expect_true(&prem[0].conclusion)?;
            let (ctx, hyps, prop) = expect_true(&d.conclusion)?;
            require(ctx == pctx, "context changed across conv")?;
            require(hyps_alpha_eq(hyps, phyps), "hypotheses changed across conv")?;
            match def_eq(ctx, pprop, prop, &HolType::Prop) {
                Ok(true) => Ok(()),
                Ok(false) => Err("conv premise and conclusion are not definitionally equal"
                    .to_string()),
                Err(e) => Err(format!("conv equality side condition: {e}")),
            }
        }
        "imp-elim" => {
            let prem = expect_premises(d, 2)?;
            let (c1, h1, imp_prop) = expect_true(&prem[0].conclusion)?;
            let (c2, h2, arg_prop) = expect_true(&prem[1].conclusion)?;
            let (ctx, hyps, prop) = expect_true(&d.conclusion)?;
            require(ctx == c1 && ctx == c2, "contexts differ across imp-elim")?;
            require(
                hyps_alpha_eq(hyps, h1) && hyps_alpha_eq(hyps, h2),
                "hypotheses differ across imp-elim",
            )?;
            let (m, n) = dest_imp(imp_prop)
                .ok_or_else(|| "first premise is not an implication".to_string())?;
            require(alpha_eq(m, arg_prop), "second premise does not match the antecedent")?;
            require(alpha_eq(n, prop), "conclusion does not match the consequent")
        }
        "imp-intro" => {
            let prem = expect_premises(d, 1)?;
            let (pctx, phyps, pprop) = expect_true(&prem[0].conclusion)?;
            let (ctx, hyps, prop) = expect_true(&d.conclusion)?;
            require(ctx == pctx, "context changed across imp-intro")?;
            let (m, n) =
                dest_imp(prop).ok_or_else(|| "conclusion is not an implication".to_string())?;
            require(
                phyps.len() == hyps.len() + 1 && hyps_alpha_eq(&phyps[..hyps.len()], hyps),
                "premise hypotheses must extend the conclusion's by the antecedent",
            )?;
            require(
                alpha_eq(&phyps[phyps.len() - 1], m),
                "discharged hypothesis is not the antecedent",
            )?;
            require(alpha_eq(pprop, n), "premise proposition is not the consequent")
        }
        "forall-elim" => {
            let prem = expect_premises(d, 1)?;
            let (pctx, phyps, pprop) = expect_true(&prem[0].conclusion)?;
            let (ctx, hyps, prop) = expect_true(&d.conclusion)?;
            require(ctx == pctx, "context changed across forall-elim")?;
            require(hyps_alpha_eq(hyps, phyps), "hypotheses changed across forall-elim")?;
            let (ty, body) = dest_forall(pprop)
                .ok_or_else(|| "premise is not a universal quantification".to_string())?;
            let (fun, witness) = match prop {
                HolTerm::App(f, a) => (&**f, &**a),
                _ => return Err("conclusion is not an application".to_string()),
            };
            require(alpha_eq(fun, body), "conclusion head does not match the quantified body")?;
            check_type(ctx, witness, ty)
                .map_err(|e| format!("witness fails the typing side condition: {e}"))
        }
        "forall-intro" => {
            let prem = expect_premises(d, 2)?;
            let (wctx, whyps) = expect_wf(&prem[0].conclusion)?;
            let (bctx, bhyps, bprop) = expect_true(&prem[1].conclusion)?;
            let (ctx, hyps, prop) = expect_true(&d.conclusion)?;
            require(ctx == wctx, "context differs from the well-formedness premise")?;
            require(
                hyps_alpha_eq(hyps, whyps) && hyps_alpha_eq(hyps, bhyps),
                "hypotheses differ across forall-intro",
            )?;
            let (ty, body) = dest_forall(prop)
                .ok_or_else(|| "conclusion is not a universal quantification".to_string())?;
            check_type(ctx, body, &HolType::arrow(ty.clone(), HolType::Prop))
                .map_err(|e| format!("quantified body fails its typing side condition: {e}"))?;
            require(
                bctx.len() == ctx.len() + 1 && bctx[..ctx.len()] == ctx[..],
                "truth premise must extend the context by the fresh variable",
            )?;
            let (x, xt) = &bctx[bctx.len() - 1];
            require(!ctx.iter().any(|(y, _)| y == x), "generalized variable is not fresh")?;
            require(xt == ty, "generalized variable's type differs from the quantifier's")?;
            match bprop {
                HolTerm::App(f, a) => {
                    require(
                        matches!(&**a, HolTerm::Var(y) if y == x),
                        "truth premise must apply the body to the fresh variable",
                    )?;
                    require(alpha_eq(f, body), "truth premise head does not match the body")
                }
                _ => Err("truth premise is not an application".to_string()),
            }
        }
        other => Err(format!("unknown rule `{other}`")),
    }
}

// ---------------------------------------------------------------------------
// Library derivations
// ---------------------------------------------------------------------------

/// `Γ | ∅ ⊢ wf`, …, `Γ | Θ ⊢ wf` by chained `wf-hyp`.
pub fn wf_chain(ctx: &[(String, HolType)], hyps: &[HolTerm]) -> Derivation {
    let mut d = Derivation::new(
        "wf-empty",
        Vec::new(),
        Judgment::Wf { ctx: ctx.to_vec(), hyps: Vec::new() },
    );
    for k in 1..=hyps.len() {
        d = Derivation::new(
            "wf-hyp",
            alloc::vec![d],
            Judgment::Wf { ctx: ctx.to_vec(), hyps: hyps[..k].to_vec() },
        );
    }
    d
}

fn hyp_node(ctx: &[(String, HolType)], hyps: &[HolTerm], prop: HolTerm) -> Derivation {
    Derivation::new(
        "hyp",
        alloc::vec![wf_chain(ctx, hyps)],
        Judgment::True { ctx: ctx.to_vec(), hyps: hyps.to_vec(), prop },
    )
}

fn conv_node(premise: Derivation, target: HolTerm) -> Derivation {
    let (ctx, hyps) = match &premise.conclusion {
        Judgment::True { ctx, hyps, .. } => (ctx.clone(), hyps.clone()),
        _ => panic!("conv over a non-truth premise"),
    };
    Derivation::new(
        "conv",
        alloc::vec![premise],
        Judgment::True { ctx, hyps, prop: target },
    )
}

fn imp_elim_node(fun: Derivation, arg: Derivation) -> Derivation {
    let (ctx, hyps, consequent) = match &fun.conclusion {
        Judgment::True { ctx, hyps, prop } => {
            let (_, n) = dest_imp(prop).expect("imp-elim over a non-implication");
            (ctx.clone(), hyps.clone(), n.clone())
        }
        _ => panic!("imp-elim over a non-truth premise"),
    };
    Derivation::new(
        "imp-elim",
        alloc::vec![fun, arg],
        Judgment::True { ctx, hyps, prop: consequent },
    )
}

fn imp_intro_node(premise: Derivation) -> Derivation {
    let (ctx, hyps, prop) = match &premise.conclusion {
        Judgment::True { ctx, hyps, prop } => {
            let antecedent = hyps.last().expect("imp-intro needs a hypothesis").clone();
            (ctx.clone(), hyps[..hyps.len() - 1].to_vec(), imp(antecedent, prop.clone()))
        }
        _ => panic!("imp-intro over a non-truth premise"),
    };
    Derivation::new("imp-intro", alloc::vec![premise], Judgment::True { ctx, hyps, prop })
}

fn forall_elim_node(premise: Derivation, witness: HolTerm) -> Derivation {
    let (ctx, hyps, prop) = match &premise.conclusion {
        Judgment::True { ctx, hyps, prop } => {
            let (_, body) = dest_forall(prop).expect("forall-elim over a non-quantification");
            (ctx.clone(), hyps.clone(), HolTerm::app(body.clone(), witness))
        }
        _ => panic!("forall-elim over a non-truth premise"),
    };
    Derivation::new("forall-elim", alloc::vec![premise], Judgment::True { ctx, hyps, prop })
}

/// Introduces `∀_T body` from a truth premise for `body x` in `ctx, x:T`.
fn forall_intro_node(
    ctx: &[(String, HolType)],
    hyps: &[HolTerm],
    ty: HolType,
    body: HolTerm,
    truth: Derivation,
) -> Derivation {
    Derivation::new(
        "forall-intro",
        alloc::vec![wf_chain(ctx, hyps), truth],
        Judgment::True {
            ctx: ctx.to_vec(),
            hyps: hyps.to_vec(),
            prop: HolTerm::app(HolTerm::ForallC(ty), body),
        },
    )
}

fn prop_ctx(names: &[&str]) -> Ctx {
    names.iter().map(|n| (n.to_string(), HolType::Prop)).collect()
}

/// The shipped derivation library: introduction and elimination for the
/// defined connectives, truth of `⊤`, and ex falso, each over a small
/// context of propositional (and one base-type) variables.
pub fn library() -> Vec<(String, Derivation)> {
    let mut out = Vec::new();
    let prop = HolType::Prop;
    let iota = HolType::Base("iota".to_string());
    let a = || HolTerm::var("a");
    let b = || HolTerm::var("b");
    let c = || HolTerm::var("c");

    // ⊤ true.
    {
        let ctx = prop_ctx(&[]);
        let body = HolTerm::lam("p", prop.clone(), imp(HolTerm::var("p"), HolTerm::var("p")));
        let mut inner_ctx = ctx.clone();
        inner_ctx.push(("p".to_string(), prop.clone()));
        let assume = hyp_node(&inner_ctx, &[HolTerm::var("p")], HolTerm::var("p"));
        let arrow = imp_intro_node(assume);
        let applied = conv_node(arrow, HolTerm::app(body.clone(), HolTerm::var("p")));
        out.push((
            "top-true".to_string(),
            forall_intro_node(&ctx, &[], prop.clone(), body, applied),
        ));
    }

    // a, b ⊢ a ∧ b.
    {
        let ctx = prop_ctx(&["a", "b"]);
        let hyps = alloc::vec![a(), b()];
        let goal = conj(a(), b());
        let (_, body) = dest_forall(&goal).unwrap();
        let body = body.clone();
        let mut ictx = ctx.clone();
        ictx.push(("p".to_string(), prop.clone()));
        let h = imp(a(), imp(b(), HolTerm::var("p")));
        let mut inner_hyps = hyps.clone();
        inner_hyps.push(h.clone());
        let to_p = imp_elim_node(
            imp_elim_node(
                hyp_node(&ictx, &inner_hyps, h.clone()),
                hyp_node(&ictx, &inner_hyps, a()),
            ),
            hyp_node(&ictx, &inner_hyps, b()),
        );
        let arrow = imp_intro_node(to_p);
        let applied = conv_node(arrow, HolTerm::app(body.clone(), HolTerm::var("p")));
        out.push((
            "and-intro".to_string(),
            forall_intro_node(&ctx, &hyps, prop.clone(), body, applied),
        ));
    }

    // a ∧ b ⊢ a, and a ∧ b ⊢ b.
    for (name, keep) in [("and-elim-left", a()), ("and-elim-right", b())] {
        let ctx = prop_ctx(&["a", "b"]);
        let hyps = alloc::vec![conj(a(), b())];
        let instantiated = forall_elim_node(hyp_node(&ctx, &hyps, conj(a(), b())), keep.clone());
        let shaped = conv_node(instantiated, imp(imp(a(), imp(b(), keep.clone())), keep.clone()));
        // a ⇒ b ⇒ keep, by nested discharge.
        let mut h2 = hyps.clone();
        h2.push(a());
        let mut h3 = h2.clone();
        h3.push(b());
        let selector =
            imp_intro_node(imp_intro_node(hyp_node(&ctx, &h3, keep.clone())));
        out.push((name.to_string(), imp_elim_node(shaped, selector)));
    }

    // a ⊢ a ∨ b, and b ⊢ a ∨ b.
    for (name, have) in [("or-intro-left", a()), ("or-intro-right", b())] {
        let ctx = prop_ctx(&["a", "b"]);
        let hyps = alloc::vec![have.clone()];
        let goal = disj(a(), b());
        let (_, body) = dest_forall(&goal).unwrap();
        let body = body.clone();
        let mut ictx = ctx.clone();
        ictx.push(("p".to_string(), prop.clone()));
        let ha = imp(a(), HolTerm::var("p"));
        let hb = imp(b(), HolTerm::var("p"));
        let mut h2 = hyps.clone();
        h2.push(ha.clone());
        let mut h3 = h2.clone();
        h3.push(hb.clone());
        let chosen = if name == "or-intro-left" { ha.clone() } else { hb.clone() };
        let to_p = imp_elim_node(
            hyp_node(&ictx, &h3, chosen),
            hyp_node(&ictx, &h3, have.clone()),
        );
        let arrow = imp_intro_node(imp_intro_node(to_p));
        let applied = conv_node(arrow, HolTerm::app(body.clone(), HolTerm::var("p")));
        out.push((
            name.to_string(),
            forall_intro_node(&ctx, &hyps, prop.clone(), body, applied),
        ));
    }

    // a ∨ b, a ⇒ c, b ⇒ c ⊢ c.
    {
        let ctx = prop_ctx(&["a", "b", "c"]);
        let hyps = alloc::vec![disj(a(), b()), imp(a(), c()), imp(b(), c())];
        let instantiated =
            forall_elim_node(hyp_node(&ctx, &hyps, disj(a(), b())), c());
        let shaped =
            conv_node(instantiated, imp(imp(a(), c()), imp(imp(b(), c()), c())));
        let once = imp_elim_node(shaped, hyp_node(&ctx, &hyps, imp(a(), c())));
        out.push((
            "or-elim".to_string(),
            imp_elim_node(once, hyp_node(&ctx, &hyps, imp(b(), c()))),
        ));
    }

    // f c ⊢ ∃(x:ι). f x.
    {
        let ctx: Ctx = alloc::vec![
            ("f".to_string(), HolType::arrow(iota.clone(), prop.clone())),
            ("c".to_string(), iota.clone()),
        ];
        let fx = |x: HolTerm| HolTerm::app(HolTerm::var("f"), x);
        let hyps = alloc::vec![fx(c())];
        let goal = exists("x", iota.clone(), fx(HolTerm::var("x")));
        let (_, body) = dest_forall(&goal).unwrap();
        let body = body.clone();
        let mut ictx = ctx.clone();
        ictx.push(("p".to_string(), prop.clone()));
        let h = forall("x", iota.clone(), imp(fx(HolTerm::var("x")), HolTerm::var("p")));
        let mut h2 = hyps.clone();
        h2.push(h.clone());
        let at_c = forall_elim_node(hyp_node(&ictx, &h2, h.clone()), c());
        let shaped = conv_node(at_c, imp(fx(c()), HolTerm::var("p")));
        let to_p = imp_elim_node(shaped, hyp_node(&ictx, &h2, fx(c())));
        let arrow = imp_intro_node(to_p);
        let applied = conv_node(arrow, HolTerm::app(body.clone(), HolTerm::var("p")));
        out.push((
            "exists-intro".to_string(),
            forall_intro_node(&ctx, &hyps, prop.clone(), body, applied),
        ));
    }

    // ∃(x:ι). f x, ∀(x:ι). f x ⇒ q ⊢ q.
    {
        let ctx: Ctx = alloc::vec![
            ("f".to_string(), HolType::arrow(iota.clone(), prop.clone())),
            ("q".to_string(), prop.clone()),
        ];
        let fx = |x: HolTerm| HolTerm::app(HolTerm::var("f"), x);
        let q = HolTerm::var("q");
        let ex_prop = exists("x", iota.clone(), fx(HolTerm::var("x")));
        let all_prop = forall("x", iota.clone(), imp(fx(HolTerm::var("x")), q.clone()));
        let hyps = alloc::vec![ex_prop.clone(), all_prop.clone()];
        let instantiated = forall_elim_node(hyp_node(&ctx, &hyps, ex_prop), q.clone());
        let shaped = conv_node(instantiated, imp(all_prop.clone(), q.clone()));
        out.push((
            "exists-elim".to_string(),
            imp_elim_node(shaped, hyp_node(&ctx, &hyps, all_prop)),
        ));
    }

    // ⊥ ⊢ a.
    {
        let ctx = prop_ctx(&["a"]);
        let hyps = alloc::vec![bot()];
        let instantiated = forall_elim_node(hyp_node(&ctx, &hyps, bot()), a());
        out.push(("ex-falso".to_string(), conv_node(instantiated, a())));
    }

    out
}

// ---------------------------------------------------------------------------
// S-expressions: reading and printing
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Sexp {
    Sym(String),
    List(Vec<Sexp>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SexpError {
    pub pos: usize,
    pub msg: String,
}

impl fmt::Display for SexpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at byte {}: {}", self.pos, self.msg)
    }
}

/// Reads every top-level S-expression in the input. `;` starts a comment
/// running to the end of the line.
pub fn parse_sexps(input: &str) -> Result<Vec<Sexp>, SexpError> {
    let bytes = input.as_bytes();
    let mut i = 0usize;
    let mut out = Vec::new();
    skip_ws(bytes, &mut i);
    while i < bytes.len() {
        out.push(parse_one(bytes, &mut i)?);
        skip_ws(bytes, &mut i);
    }
    Ok(out)
}

/// Reads exactly one S-expression.
pub fn parse_sexp(input: &str) -> Result<Sexp, SexpError> {
    let all = parse_sexps(input)?;
    match all.len() {
        1 => Ok(all.into_iter().next().unwrap()),
        n => Err(SexpError { pos: 0, msg: format!("expected one expression, found {n}") }),
    }
}

fn skip_ws(bytes: &[u8], i: &mut usize) {
    loop {
        while *i < bytes.len() && bytes[*i].is_ascii_whitespace() {
            *i += 1;
        }
        if *i < bytes.len() && bytes[*i] == b';' {
            while *i < bytes.len() && bytes[*i] != b'\n' {
                *i += 1;
            }
        } else {
            return;
        }
    }
}

fn parse_one(bytes: &[u8], i: &mut usize) -> Result<Sexp, SexpError> {
    skip_ws(bytes, i);
    if *i >= bytes.len() {
        return Err(SexpError { pos: *i, msg: "unexpected end of input".to_string() });
    }
    match bytes[*i] {
        b'(' => {
            let open = *i;
            *i += 1;
            let mut items = Vec::new();
            loop {
                skip_ws(bytes, i);
                if *i >= bytes.len() {
                    return Err(SexpError { pos: open, msg: "unclosed `(`".to_string() });
                }
                if bytes[*i] == b')' {
                    *i += 1;
                    return Ok(Sexp::List(items));
                }
                items.push(parse_one(bytes, i)?);
            }
        }
        b')' => Err(SexpError { pos: *i, msg: "unmatched `)`".to_string() }),
        _ => {
            let start = *i;
            while *i < bytes.len()
                && !bytes[*i].is_ascii_whitespace()
                && bytes[*i] != b'('
                && bytes[*i] != b')'
                && bytes[*i] != b';'
            {
                *i += 1;
            }
            let sym = core::str::from_utf8(&bytes[start..*i])
                .map_err(|_| SexpError { pos: start, msg: "invalid UTF-8 symbol".to_string() })?;
            Ok(Sexp::Sym(sym.to_string()))
        }
    }
}

impl fmt::Display for Sexp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexp::Sym(s) => write!(f, "{s}"),
            Sexp::List(items) => {
                write!(f, "(")?;
                for (i, it) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{it}")?;
                }
                write!(f, ")")
            }
        }
    }
}

const RESERVED: &[&str] = &[
    "Prop", "->", "=>", "forall", "lam", "app", "imp", "all", "bot", "top", "not", "and", "or",
    "ex", "==", "wf", "true",
];

fn is_reserved(s: &str) -> bool {
    RESERVED.contains(&s)
}

pub fn type_from_sexp(s: &Sexp) -> Result<HolType, String> {
    match s {
        Sexp::Sym(name) if name == "Prop" => Ok(HolType::Prop),
        Sexp::Sym(name) if !is_reserved(name) => Ok(HolType::Base(name.clone())),
        Sexp::Sym(name) => Err(format!("`{name}` is not a type")),
        Sexp::List(items) => match items.split_first() {
            Some((Sexp::Sym(h), rest)) if h == "->" && rest.len() >= 2 => {
                let mut tys: Vec<HolType> =
                    rest.iter().map(type_from_sexp).collect::<Result<_, _>>()?;
                let mut ty = tys.pop().unwrap();
                while let Some(prev) = tys.pop() {
                    ty = HolType::arrow(prev, ty);
                }
                Ok(ty)
            }
            _ => Err("expected `(-> T ... S)`".to_string()),
        },
    }
}

fn binder_from_sexp(s: &Sexp) -> Result<(String, HolType), String> {
    match s {
        Sexp::List(items) if items.len() == 2 => {
            let name = match &items[0] {
                Sexp::Sym(n) if !is_reserved(n) => n.clone(),
                other => return Err(format!("`{other}` is not a variable name")),
            };
            Ok((name, type_from_sexp(&items[1])?))
        }
        other => Err(format!("expected a `(name type)` binder, found `{other}`")),
    }
}

/// Term grammar: variables are plain symbols; `=>` is the implication
/// constant; `(forall T)` the quantifier constant; `(lam (x T) M)`,
/// `(app M N ...)` (left-associated). Sugar is expanded while reading:
/// `(imp M ... N)` (right-associated), `(all (x T) M)`, `bot`, `top`,
/// `(not M)`, `(and M N)`, `(or M N)`, `(ex (x T) M)`.
pub fn term_from_sexp(s: &Sexp) -> Result<HolTerm, String> {
    match s {
        Sexp::Sym(name) => match name.as_str() {
            "=>" => Ok(HolTerm::Imp),
            "bot" => Ok(bot()),
            "top" => Ok(top()),
            _ if !is_reserved(name) => Ok(HolTerm::Var(name.clone())),
            _ => Err(format!("`{name}` is reserved and not a term by itself")),
        },
        Sexp::List(items) => {
            let (head, rest) = items
                .split_first()
                .ok_or_else(|| "the empty list is not a term".to_string())?;
            let head = match head {
                Sexp::Sym(h) => h.as_str(),
                Sexp::List(_) => return Err("term lists start with a keyword".to_string()),
            };
            match head {
                "forall" => match rest {
                    [t] => Ok(HolTerm::ForallC(type_from_sexp(t)?)),
                    _ => Err("expected `(forall T)`".to_string()),
                },
                "lam" => match rest {
                    [binder, body] => {
                        let (x, t) = binder_from_sexp(binder)?;
                        Ok(HolTerm::Lam(x, t, Box::new(term_from_sexp(body)?)))
                    }
                    _ => Err("expected `(lam (x T) M)`".to_string()),
                },
                "app" => {
                    if rest.len() < 2 {
                        return Err("expected `(app M N ...)`".to_string());
                    }
                    let mut terms = rest.iter().map(term_from_sexp);
                    let mut acc = terms.next().unwrap()?;
                    for t in terms {
                        acc = HolTerm::app(acc, t?);
                    }
                    Ok(acc)
                }
                "imp" => {
                    if rest.len() < 2 {
                        return Err("expected `(imp M ... N)`".to_string());
                    }
                    let mut terms: Vec<HolTerm> =
                        rest.iter().map(term_from_sexp).collect::<Result<_, _>>()?;
                    let mut acc = terms.pop().unwrap();
                    while let Some(prev) = terms.pop() {
                        acc = imp(prev, acc);
                    }
                    Ok(acc)
                }
                "all" => match rest {
                    [binder, body] => {
                        let (x, t) = binder_from_sexp(binder)?;
                        Ok(forall(&x, t, term_from_sexp(body)?))
                    }
                    _ => Err("expected `(all (x T) M)`".to_string()),
                },
                "not" => match rest {
                    [m] => Ok(neg(term_from_sexp(m)?)),
                    _ => Err("expected `(not M)`".to_string()),
                },
                "and" => match rest {
                    [m, n] => Ok(conj(term_from_sexp(m)?, term_from_sexp(n)?)),
                    _ => Err("expected `(and M N)`".to_string()),
                },
                "or" => match rest {
                    [m, n] => Ok(disj(term_from_sexp(m)?, term_from_sexp(n)?)),
                    _ => Err("expected `(or M N)`".to_string()),
                },
                "ex" => match rest {
                    [binder, body] => {
                        let (x, t) = binder_from_sexp(binder)?;
                        Ok(exists(&x, t, term_from_sexp(body)?))
                    }
                    _ => Err("expected `(ex (x T) M)`".to_string()),
                },
                other => Err(format!("unknown term form `{other}`")),
            }
        }
    }
}

fn ctx_from_sexp(s: &Sexp) -> Result<Ctx, String> {
    match s {
        Sexp::List(items) => items.iter().map(binder_from_sexp).collect(),
        _ => Err("expected a context list `((x T) ...)`".to_string()),
    }
}

fn hyps_from_sexp(s: &Sexp) -> Result<Vec<HolTerm>, String> {
    match s {
        Sexp::List(items) => items.iter().map(term_from_sexp).collect(),
        _ => Err("expected a hypothesis list `(M ...)`".to_string()),
    }
}

/// Judgment grammar: `(== ctx M N T)`, `(wf ctx (M ...))`,
/// `(true ctx (M ...) M)`.
pub fn judgment_from_sexp(s: &Sexp) -> Result<Judgment, String> {
    let items = match s {
        Sexp::List(items) => items,
        _ => return Err("expected a judgment list".to_string()),
    };
    let head = match items.first() {
        Some(Sexp::Sym(h)) => h.as_str(),
        _ => return Err("judgments start with `==`, `wf`, or `true`".to_string()),
    };
    match (head, &items[1..]) {
        ("==", [ctx, m, n, t]) => Ok(Judgment::DefEq {
            ctx: ctx_from_sexp(ctx)?,
            lhs: term_from_sexp(m)?,
            rhs: term_from_sexp(n)?,
            ty: type_from_sexp(t)?,
        }),
        ("wf", [ctx, hyps]) => {
            Ok(Judgment::Wf { ctx: ctx_from_sexp(ctx)?, hyps: hyps_from_sexp(hyps)? })
        }
        ("true", [ctx, hyps, prop]) => Ok(Judgment::True {
            ctx: ctx_from_sexp(ctx)?,
            hyps: hyps_from_sexp(hyps)?,
            prop: term_from_sexp(prop)?,
        }),
        _ => Err(format!("malformed `{head}` judgment")),
    }
}

/// Derivation grammar: `(rule-name (premise ...) conclusion)`.
pub fn derivation_from_sexp(s: &Sexp) -> Result<Derivation, String> {
    let items = match s {
        Sexp::List(items) if items.len() == 3 => items,
        _ => return Err("expected `(rule (premises) conclusion)`".to_string()),
    };
    let rule = match &items[0] {
        Sexp::Sym(r) if RULES.contains(&r.as_str()) => r.clone(),
        other => return Err(format!("`{other}` is not a rule name")),
    };
    let premises = match &items[1] {
        Sexp::List(ps) => ps.iter().map(derivation_from_sexp).collect::<Result<Vec<_>, _>>()?,
        _ => return Err("expected a premise list".to_string()),
    };
    Ok(Derivation { rule, premises, conclusion: judgment_from_sexp(&items[2])? })
}

pub fn type_to_sexp(t: &HolType) -> Sexp {
    match t {
        HolType::Prop => Sexp::Sym("Prop".to_string()),
        HolType::Base(n) => Sexp::Sym(n.clone()),
        HolType::Arrow(a, b) => {
            let mut parts = alloc::vec![Sexp::Sym("->".to_string()), type_to_sexp(a)];
            let mut rest = b;
            loop {
                match &**rest {
                    HolType::Arrow(x, y) => {
                        parts.push(type_to_sexp(x));
                        rest = y;
                    }
                    other => {
                        parts.push(type_to_sexp(other));
                        break;
                    }
                }
            }
            Sexp::List(parts)
        }
    }
}

/// Core printing only: sugar is not reconstructed, so `parse ∘ print` is the
/// identity on terms.
pub fn term_to_sexp(t: &HolTerm) -> Sexp {
    match t {
        HolTerm::Var(x) => Sexp::Sym(x.clone()),
        HolTerm::Imp => Sexp::Sym("=>".to_string()),
        HolTerm::ForallC(ty) => {
            Sexp::List(alloc::vec![Sexp::Sym("forall".to_string()), type_to_sexp(ty)])
        }
        HolTerm::Lam(x, ty, b) => Sexp::List(alloc::vec![
            Sexp::Sym("lam".to_string()),
            Sexp::List(alloc::vec![Sexp::Sym(x.clone()), type_to_sexp(ty)]),
            term_to_sexp(b),
        ]),
        HolTerm::App(_, _) => {
            let mut spine = Vec::new();
            let mut cur = t;
            while let HolTerm::App(f, a) = cur {
                spine.push(term_to_sexp(a));
                cur = f;
            }
            spine.push(term_to_sexp(cur));
            spine.push(Sexp::Sym("app".to_string()));
            spine.reverse();
            Sexp::List(spine)
        }
    }
}

fn ctx_to_sexp(ctx: &[(String, HolType)]) -> Sexp {
    Sexp::List(
        ctx.iter()
            .map(|(x, t)| Sexp::List(alloc::vec![Sexp::Sym(x.clone()), type_to_sexp(t)]))
            .collect(),
    )
}

fn hyps_to_sexp(hyps: &[HolTerm]) -> Sexp {
    Sexp::List(hyps.iter().map(term_to_sexp).collect())
}

pub fn judgment_to_sexp(j: &Judgment) -> Sexp {
    match j {
        Judgment::DefEq { ctx, lhs, rhs, ty } => Sexp::List(alloc::vec![
            Sexp::Sym("==".to_string()),
            ctx_to_sexp(ctx),
            term_to_sexp(lhs),
            term_to_sexp(rhs),
            type_to_sexp(ty),
        ]),
        Judgment::Wf { ctx, hyps } => Sexp::List(alloc::vec![
            Sexp::Sym("wf".to_string()),
            ctx_to_sexp(ctx),
            hyps_to_sexp(hyps),
        ]),
        Judgment::True { ctx, hyps, prop } => Sexp::List(alloc::vec![
            Sexp::Sym("true".to_string()),
            ctx_to_sexp(ctx),
            hyps_to_sexp(hyps),
            term_to_sexp(prop),
        ]),
    }
}

pub fn derivation_to_sexp(d: &Derivation) -> Sexp {
    Sexp::List(alloc::vec![
        Sexp::Sym(d.rule.clone()),
        Sexp::List(d.premises.iter().map(derivation_to_sexp).collect()),
        judgment_to_sexp(&d.conclusion),
    ])
}

/// Renders a derivation with premise indentation, one node per line.
pub fn render_derivation(d: &Derivation) -> String {
    fn go(d: &Derivation, depth: usize, out: &mut String) {
        for _ in 0..depth {
            out.push_str("  ");
        }
        out.push('(');
        out.push_str(&d.rule);
        if d.premises.is_empty() {
            out.push_str(" ()");
        } else {
            out.push_str(" (\n");
            for (i, p) in d.premises.iter().enumerate() {
                if i > 0 {
                    out.push('\n');
                }
                go(p, depth + 1, out);
            }
            out.push('\n');
            for _ in 0..depth {
                out.push_str("  ");
            }
            out.push(')');
        }
        out.push('\n');
        for _ in 0..=depth {
            out.push_str("  ");
        }
        out.push_str(&format!("{}", judgment_to_sexp(&d.conclusion)));
        out.push(')');
    }
    let mut out = String::new();
    go(d, 0, &mut out);
    out.push('\n');
    out
}

/// Deterministic corpus of corrupted derivations for hardening the
/// checker: single mutations of the library, each with a local argument
/// for why rejection is forced (see each arm). Yields exactly `count`
/// labelled mutants while the node × operator space lasts.
pub fn mutation_corpus(count: usize) -> Vec<(String, Derivation)> {
    fn paths(d: &Derivation, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        out.push(cur.clone());
        for (i, p) in d.premises.iter().enumerate() {
            cur.push(i);
            paths(p, cur, out);
            cur.pop();
        }
    }
    fn node_mut<'a>(d: &'a mut Derivation, path: &[usize]) -> &'a mut Derivation {
        let mut cur = d;
        for &i in path {
            cur = &mut cur.premises[i];
        }
        cur
    }
    let swap_target = |rule: &str| -> &'static str {
        match rule {
            // Each target disagrees with the source in premise arity or
            // premise judgment kind, so rejection is structural.
            "hyp" => "conv",
            "conv" => "hyp",
            "imp-elim" => "forall-elim",
            "forall-elim" => "imp-elim",
            "imp-intro" => "forall-intro",
            "forall-intro" => "imp-intro",
            "wf-empty" => "wf-hyp",
            "wf-hyp" => "wf-empty",
            _ => unreachable!(),
        }
    };
    let mut out = Vec::new();
    'outer: for (name, base) in &library() {
        let mut all_paths = Vec::new();
        paths(base, &mut Vec::new(), &mut all_paths);
        for path in &all_paths {
            for op in 0..4 {
                if out.len() == count {
                    break 'outer;
                }
                let mut m = base.clone();
                let node = node_mut(&mut m, path);
                let label = format!("{name}:{path:?}:op{op}");
                match op {
                    // Rule-name swap with guaranteed structural clash.
                    0 => node.rule = swap_target(&node.rule).to_string(),
                    // Premise drop: every rule checks exact arity.
                    1 => {
                        if node.premises.is_empty() {
                            continue;
                        }
                        node.premises.pop();
                    }
                    // Conclusion wrap M ↦ M ⇒ ⊥: strictly larger than M,
                    // so never α-equal or βη-equal to what the rule and
                    // premises determine. Skipped when the wrapped form
                    // happens to be a hypothesis (only `hyp` could then
                    // legitimately conclude it).
                    2 => match &mut node.conclusion {
                        Judgment::True { hyps, prop, .. } => {
                            let wrapped = imp(prop.clone(), bot());
                            if hyps.iter().any(|h| alpha_eq(h, &wrapped)) {
                                continue;
                            }
                            *prop = wrapped;
                        }
                        _ => continue,
                    },
                    // Unbound witness in a ∀-elim conclusion: the typing
                    // side condition cannot succeed.
                    _ => {
                        if node.rule != "forall-elim" {
                            continue;
                        }
                        match &mut node.conclusion {
                            Judgment::True { prop: HolTerm::App(_, arg), .. } => {
                                **arg = HolTerm::var("undeclared_witness");
                            }
                            _ => continue,
                        }
                    }
                }
                out.push((label, m));
            }
        }
    }
    out
}
