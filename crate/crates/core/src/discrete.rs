//! Discrete-time evaluation of temporal formulas over lasso behaviours.
//!
//! The clauses follow the standard discrete semantics: `□P` quantifies
//! over all suffixes, and the action box `[A]_<x..>` demands at *every*
//! step that either the action holds of the step pair or the subscript
//! variables do not change across it. A lasso has only finitely many
//! distinct suffixes, so both are decided exactly by folding indices into
//! `0..prefix+cycle` and memoizing per (subformula, canonical suffix).
//!
//! The flexible quantifier `∀∀x.P` ranges over all behaviours stuttering
//! equivalent to the current one and all value streams for `x` — an
//! infinite space. It is finitized soundly-for-refutation: the current
//! behaviour is destuttered (covering contractions), then every
//! stutter-expansion with at most [`FlexBound::max_stutter_expansion`]
//! extra repeats per position is paired with every lasso-aligned value
//! stream. A refutation found this way is a genuine counterexample; if
//! none is found the result is only `TrueWithinBound`, never `True`.
//!
//! A bare action atom at step `n` is evaluated against the pair
//! `ρ[n], ρ[n+1]`, so unprimed atoms read the current state and primed
//! atoms the next.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand_core::RngCore;

use crate::interp::{eval_action, EvalError, FlexCtx, Interpretation, RigidEnv};
use crate::rat::Rat;
use crate::syntax::{desugar, TempFormula};
use crate::traces::{DiscreteBehavior, State, Value};

/// Finitization bound for flexible quantification: how many extra repeats
/// of each lasso position the witness search may insert. The value
/// streams are not a tunable — every lasso-aligned ultimately-periodic
/// stream over the (expanded) shape is enumerated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FlexBound {
    pub max_stutter_expansion: usize,
}

impl FlexBound {
    pub fn new(max_stutter_expansion: usize) -> Self {
        FlexBound { max_stutter_expansion }
    }
}

/// A structured reason for a `False` verdict.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Witness {
    /// The earliest step whose pair violates an action box (after
    /// unwrapping any outer `□`s).
    Step { n: usize, now: State, next: State },
    /// The earliest instant outside a continuous denotation.
    Time { t: Rat },
    /// A refuting witness for a flexible quantifier: the expanded
    /// behaviour and the value stream for the quantified variable.
    /// Replaying the body on `behavior.zip_extend(prefix_vals, cycle_vals)`
    /// re-evaluates to false.
    FlexRefutation {
        behavior: DiscreteBehavior,
        prefix_vals: Vec<Value>,
        cycle_vals: Vec<Value>,
    },
    /// The formula is false at the start of the behaviour, with no finer
    /// structure to report.
    Here,
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::Step { n, now, next } => {
                write!(f, "violated at step {n}: {now} -> {next}")
            }
            Witness::Time { t } => write!(f, "violated from time {t}"),
            Witness::FlexRefutation { .. } => f.write_str("refuted by a quantifier witness"),
            Witness::Here => f.write_str("false at the start"),
        }
    }
}

/// Evaluation result. `True` is reserved for formulas decided without any
/// bounded search; when a flexible quantifier was enumerated under a
/// bound, a positive answer is only `TrueWithinBound`. Negative answers
/// are definitive when `exact` was preserved and carry a witness when one
/// has useful structure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    True,
    False,
    TrueWithinBound { max_stutter_expansion: usize },
    FalseWitnessed(Witness),
}

impl Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::True | Verdict::TrueWithinBound { .. })
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::True => f.write_str("True"),
            Verdict::False => f.write_str("False"),
            Verdict::TrueWithinBound { max_stutter_expansion } => {
                write!(f, "TrueWithinBound(expansion<={max_stutter_expansion})")
            }
            Verdict::FalseWitnessed(w) => write!(f, "FalseWitnessed({w})"),
        }
    }
}

/// Truth value plus an exactness flag: `exact` is false as soon as any
/// flexible quantifier was decided by bounded enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub holds: bool,
    pub exact: bool,
}

type Memo = BTreeMap<(usize, usize), Outcome>;

/// Observer for the first refuting witness of a flexible quantifier:
/// receives the expanded behavior and the stream's prefix/cycle values.
type RefutationSink<'a> = &'a mut dyn FnMut(&DiscreteBehavior, &[Value], &[Value]);

struct Evaluator<'a> {
    interp: &'a Interpretation,
    bound: FlexBound,
}

fn node_id(p: &TempFormula) -> usize {
    p as *const TempFormula as usize
}

impl<'a> Evaluator<'a> {
    /// Evaluates `p` on the suffix `rho[n..]`. The memo is scoped to one
    /// `(theta, rho)` pair; recursion that changes either opens a fresh
    /// table.
    fn eval(
        &self,
        p: &TempFormula,
        flex: &FlexCtx,
        theta: &RigidEnv,
        rho: &DiscreteBehavior,
        n: usize,
        memo: &mut Memo,
    ) -> Result<Outcome, EvalError> {
        let n = rho.canonical_index(n);
        let key = (node_id(p), n);
        if let Some(out) = memo.get(&key) {
            return Ok(*out);
        }
        let out = self.eval_uncached(p, flex, theta, rho, n, memo)?;
        memo.insert(key, out);
        Ok(out)
    }

    fn eval_uncached(
        &self,
        p: &TempFormula,
        flex: &FlexCtx,
        theta: &RigidEnv,
        rho: &DiscreteBehavior,
        n: usize,
        memo: &mut Memo,
    ) -> Result<Outcome, EvalError> {
        match p {
            TempFormula::Atom(a) => {
                let holds = eval_action(self.interp, flex, a, theta, rho.at(n), rho.at(n + 1))?;
                Ok(Outcome { holds, exact: true })
            }
            TempFormula::Not(b) => {
                let out = self.eval(b, flex, theta, rho, n, memo)?;
                Ok(Outcome { holds: !out.holds, exact: out.exact })
            }
            TempFormula::And(l, r) => {
                let a = self.eval(l, flex, theta, rho, n, memo)?;
                let b = self.eval(r, flex, theta, rho, n, memo)?;
                Ok(Outcome { holds: a.holds && b.holds, exact: a.exact && b.exact })
            }
            TempFormula::Always(b) => {
                let mut holds = true;
                let mut exact = true;
                for m in self.suffixes_from(rho, n) {
                    let out = self.eval(b, flex, theta, rho, m, memo)?;
                    holds &= out.holds;
                    exact &= out.exact;
                    if !holds && exact {
                        break;
                    }
                }
                Ok(Outcome { holds, exact })
            }
            TempFormula::ActionBox(a, subs) => {
                let slots = self.subscript_slots(flex, subs)?;
                for m in self.suffixes_from(rho, n) {
                    if !self.box_step_ok(a, &slots, flex, theta, rho, m)? {
                        return Ok(Outcome { holds: false, exact: true });
                    }
                }
                Ok(Outcome { holds: true, exact: true })
            }
            TempFormula::ForallRigid(x, b) => {
                let mut holds = true;
                let mut exact = true;
                for v in 0..self.interp.domain_size() {
                    let mut env = theta.clone();
                    env.insert(x.clone(), Value(v as u32));
                    let mut inner = Memo::new();
                    let out = self.eval(b, flex, &env, rho, n, &mut inner)?;
                    holds &= out.holds;
                    exact &= out.exact;
                    if !holds && exact {
                        break;
                    }
                }
                Ok(Outcome { holds, exact })
            }
            TempFormula::ForallFlex(x, b) => {
                let out = self.forall_flex(x, b, flex, theta, rho, n, &mut |_, _, _| {})?;
                Ok(out)
            }
            // Sugar evaluates by its defining equations.
            other => {
                let core = desugar(other);
                let mut inner = Memo::new();
                self.eval(&core, flex, theta, rho, n, &mut inner)
            }
        }
    }

    /// Canonical indices of all distinct suffixes of `rho[n..]`.
    fn suffixes_from(&self, rho: &DiscreteBehavior, n: usize) -> core::ops::Range<usize> {
        if n < rho.prefix().len() {
            n..rho.lasso_len()
        } else {
            rho.prefix().len()..rho.lasso_len()
        }
    }

    fn subscript_slots(&self, flex: &FlexCtx, subs: &[String]) -> Result<Vec<usize>, EvalError> {
        subs.iter()
            .map(|name| flex.slot(name).ok_or_else(|| EvalError::UnknownFlexible(name.clone())))
            .collect()
    }

    /// One step of the action box: the pair satisfies the action, or the
    /// subscript variables are unchanged across it.
    fn box_step_ok(
        &self,
        a: &crate::syntax::Action,
        slots: &[usize],
        flex: &FlexCtx,
        theta: &RigidEnv,
        rho: &DiscreteBehavior,
        m: usize,
    ) -> Result<bool, EvalError> {
        let now = rho.at(m);
        let next = rho.at(m + 1);
        if now.agrees_on(next, slots) {
            return Ok(true);
        }
        eval_action(self.interp, flex, a, theta, now, next)
    }

    /// Bounded enumeration for `∀∀x.b` on the suffix `rho[n..]`: the
    /// destuttered suffix, all stutter-expansions within the bound, all
    /// aligned value streams. `on_refutation` observes the first failing
    /// witness (for counterexample reporting).
    #[allow(clippy::too_many_arguments)]
    fn forall_flex(
        &self,
        x: &str,
        b: &TempFormula,
        flex: &FlexCtx,
        theta: &RigidEnv,
        rho: &DiscreteBehavior,
        n: usize,
        on_refutation: RefutationSink<'_>,
    ) -> Result<Outcome, EvalError> {
        let base = rho.suffix(n).destutter();
        let inner_flex = flex.pushed(x);
        let max_reps = self.bound.max_stutter_expansion + 1;
        let shape = base.prefix().len() + base.cycle().len();
        let mut reps = alloc::vec![1usize; shape];
        loop {
            let expanded = base
                .stutter_expand(&reps[..base.prefix().len()], &reps[base.prefix().len()..])
                .expect("expansion shape matches");
            let plen = expanded.prefix().len();
            let clen = expanded.cycle().len();
            let dsize = self.interp.domain_size() as u32;
            let mut stream = alloc::vec![0u32; plen + clen];
            loop {
                let pvals: Vec<Value> = stream[..plen].iter().map(|&v| Value(v)).collect();
                let cvals: Vec<Value> = stream[plen..].iter().map(|&v| Value(v)).collect();
                let extended = expanded.zip_extend(&pvals, &cvals).expect("aligned stream");
                let mut inner = Memo::new();
                let out = self.eval(b, &inner_flex, theta, &extended, 0, &mut inner)?;
                if !out.holds {
                    on_refutation(&expanded, &pvals, &cvals);
                    // A concrete witness refutes the quantifier outright.
                    return Ok(Outcome { holds: false, exact: out.exact });
                }
                // Next value stream (odometer over the domain).
                let mut i = 0;
                loop {
                    if i == stream.len() {
                        break;
                    }
                    stream[i] += 1;
                    if stream[i] < dsize {
                        break;
                    }
                    stream[i] = 0;
                    i += 1;
                }
                if i == stream.len() {
                    break;
                }
            }
            // Next repetition vector (odometer over 1..=max_reps).
            let mut i = 0;
            loop {
                if i == reps.len() {
                    break;
                }
                reps[i] += 1;
                if reps[i] <= max_reps {
                    break;
                }
                reps[i] = 1;
                i += 1;
            }
            if i == reps.len() {
                break;
            }
        }
        Ok(Outcome { holds: true, exact: false })
    }
}

/// Whether any flexible quantifier occurs (determines verdict honesty).
fn has_flex_quant(p: &TempFormula) -> bool {
    match p {
        TempFormula::Atom(_) | TempFormula::ActionBox(..) => false,
        TempFormula::Always(b) | TempFormula::Not(b) => has_flex_quant(b),
        TempFormula::And(l, r) | TempFormula::Or(l, r) | TempFormula::Implies(l, r) => {
            has_flex_quant(l) || has_flex_quant(r)
        }
        TempFormula::ForallRigid(_, b) | TempFormula::ExistsRigid(_, b) => has_flex_quant(b),
        TempFormula::ForallFlex(..) | TempFormula::ExistsFlex(..) => true,
    }
}

/// Evaluates a closed formula on a lasso behaviour and reports an honest
/// verdict: `True`/`False` when decided exactly, `TrueWithinBound` when a
/// bounded flexible-quantifier search found no refutation, and
/// `FalseWitnessed` with structure when available. The second component
/// is the exactness flag (false iff some flexible quantifier was decided
/// by bounded enumeration on the taken evaluation path).
pub fn eval_disc_full(
    p: &TempFormula,
    interp: &Interpretation,
    theta: &RigidEnv,
    rho: &DiscreteBehavior,
    bound: FlexBound,
) -> Result<(Verdict, bool), EvalError> {
    let p = desugar(p);
    let ev = Evaluator { interp, bound };
    let flex = FlexCtx::base(interp.sig());
    if flex.width() != rho.width() {
        return Err(EvalError::TraceWidth);
    }
    let mut memo = Memo::new();
    let out = ev.eval(&p, &flex, theta, rho, 0, &mut memo)?;
    let verdict = if out.holds {
        if out.exact && !has_flex_quant(&p) {
            Verdict::True
        } else {
            Verdict::TrueWithinBound { max_stutter_expansion: bound.max_stutter_expansion }
        }
    } else {
        match find_witness(&ev, &p, &flex, theta, rho)? {
            Some(w) => Verdict::FalseWitnessed(w),
            None => Verdict::False,
        }
    };
    Ok((verdict, out.exact))
}

/// [`eval_disc_full`] without the exactness flag.
pub fn eval_disc(
    p: &TempFormula,
    interp: &Interpretation,
    theta: &RigidEnv,
    rho: &DiscreteBehavior,
    bound: FlexBound,
) -> Result<Verdict, EvalError> {
    eval_disc_full(p, interp, theta, rho, bound).map(|(v, _)| v)
}

/// Locates a structured witness for a false formula when the root shape
/// admits one: the earliest violating step of an action box (through
/// outer `□`s), the earliest failing suffix of a `□`, or the refuting
/// (behaviour, stream) pair of a flexible quantifier.
fn find_witness(
    ev: &Evaluator<'_>,
    p: &TempFormula,
    flex: &FlexCtx,
    theta: &RigidEnv,
    rho: &DiscreteBehavior,
) -> Result<Option<Witness>, EvalError> {
    // A `□` directly over an action box reports the violating *step*, the
    // most useful counterexample shape; unwrap it first.
    let target = match p {
        TempFormula::Always(inner) if matches!(**inner, TempFormula::ActionBox(..)) => &**inner,
        other => other,
    };
    match target {
        TempFormula::ActionBox(a, subs) => {
            let slots = ev.subscript_slots(flex, subs)?;
            for m in 0..rho.lasso_len() {
                if !ev.box_step_ok(a, &slots, flex, theta, rho, m)? {
                    return Ok(Some(Witness::Step {
                        n: m,
                        now: rho.at(m).clone(),
                        next: rho.at(m + 1).clone(),
                    }));
                }
            }
            Ok(None)
        }
        TempFormula::Always(b) => {
            for m in 0..rho.lasso_len() {
                let mut memo = Memo::new();
                if !ev.eval(b, flex, theta, rho, m, &mut memo)?.holds {
                    return Ok(Some(Witness::Step {
                        n: m,
                        now: rho.at(m).clone(),
                        next: rho.at(m + 1).clone(),
                    }));
                }
            }
            Ok(None)
        }
        TempFormula::ForallFlex(x, b) => {
            let mut found = None;
            ev.forall_flex(x, b, flex, theta, rho, 0, &mut |beh, p, c| {
                found = Some(Witness::FlexRefutation {
                    behavior: beh.clone(),
                    prefix_vals: p.to_vec(),
                    cycle_vals: c.to_vec(),
                });
            })?;
            Ok(found)
        }
        _ => Ok(Some(Witness::Here)),
    }
}

/// Tests stuttering invariance empirically: evaluates `p` on `trials`
/// random stutter-expansions of `rho` and reports whether every verdict's
/// truth value matches the original.
pub fn check_stutter_invariance_disc(
    p: &TempFormula,
    interp: &Interpretation,
    theta: &RigidEnv,
    rho: &DiscreteBehavior,
    bound: FlexBound,
    trials: usize,
    rng: &mut dyn RngCore,
) -> Result<bool, EvalError> {
    let original = eval_disc(p, interp, theta, rho, bound)?.holds();
    for _ in 0..trials {
        let preps: Vec<usize> =
            (0..rho.prefix().len()).map(|_| (rng.next_u32() % 3) as usize + 1).collect();
        let creps: Vec<usize> =
            (0..rho.cycle().len()).map(|_| (rng.next_u32() % 3) as usize + 1).collect();
        let expanded = rho.stutter_expand(&preps, &creps).expect("shape matches");
        if eval_disc(p, interp, theta, &expanded, bound)?.holds() != original {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{self, GenConfig};
    use crate::interp::Signature;
    use crate::syntax::{parse, Action, Term};
    use alloc::boxed::Box;
    use alloc::string::ToString;
    use alloc::vec;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn s(x: &str) -> String {
        x.to_string()
    }

    /// Mod-n counter model: one flexible variable `x`, `succ` mod n,
    /// constant `zero`, relation `IsZero`.
    fn counter(n: u32) -> Interpretation {
        let sig = Signature::new(
            vec![(s("succ"), 1), (s("zero"), 0)],
            vec![(s("IsZero"), 1)],
            vec![s("x")],
        )
        .unwrap();
        let mut func = BTreeMap::new();
        func.insert(s("succ"), (0..n).map(|v| Value((v + 1) % n)).collect());
        func.insert(s("zero"), vec![Value(0)]);
        let mut rel = BTreeMap::new();
        rel.insert(s("IsZero"), (0..n).map(|v| v == 0).collect());
        let domain = (0..n).map(|v| alloc::format!("{v}")).collect();
        Interpretation::new(sig, domain, func, rel).unwrap()
    }

    /// Two flexible variables over a 3-element domain, with enough symbols
    /// for the random generator.
    fn pair_model() -> Interpretation {
        let sig = Signature::new(
            vec![(s("succ"), 1), (s("zero"), 0)],
            vec![(s("IsZero"), 1), (s("Lt"), 2)],
            vec![s("x"), s("y")],
        )
        .unwrap();
        let mut func = BTreeMap::new();
        func.insert(s("succ"), (0..3).map(|v| Value((v + 1) % 3)).collect());
        func.insert(s("zero"), vec![Value(0)]);
        let mut rel = BTreeMap::new();
        rel.insert(s("IsZero"), (0..3).map(|v| v == 0).collect());
        let mut lt = Vec::new();
        for a in 0..3 {
            for b in 0..3 {
                lt.push(a < b);
            }
        }
        rel.insert(s("Lt"), lt);
        let domain = (0..3).map(|v| alloc::format!("{v}")).collect();
        Interpretation::new(sig, domain, func, rel).unwrap()
    }

    fn lasso(prefix: &[u32], cycle: &[u32]) -> DiscreteBehavior {
        DiscreteBehavior::new(
            prefix.iter().map(|&v| State::new(vec![Value(v)])).collect(),
            cycle.iter().map(|&v| State::new(vec![Value(v)])).collect(),
        )
        .unwrap()
    }

    #[test]
    fn spec_action_box_examples() {
        let m = counter(5);
        let theta = RigidEnv::new();
        let b = FlexBound::new(1);

        let stays = parse("[x' = x]_<x>", m.sig()).unwrap();
        assert_eq!(eval_disc(&stays, &m, &theta, &lasso(&[], &[3]), b), Ok(Verdict::True));

        let steps = parse("[x' = succ(x)]_<x>", m.sig()).unwrap();
        assert_eq!(
            eval_disc(&steps, &m, &theta, &lasso(&[], &[0, 1, 2, 3, 4]), b),
            Ok(Verdict::True)
        );
        // Also with the redundant explicit box.
        let boxed = parse("[][x' = succ(x)]_<x>", m.sig()).unwrap();
        assert_eq!(
            eval_disc(&boxed, &m, &theta, &lasso(&[], &[0, 1, 2, 3, 4]), b),
            Ok(Verdict::True)
        );

        match eval_disc(&boxed, &m, &theta, &lasso(&[], &[0, 2]), b) {
            Ok(Verdict::FalseWitnessed(Witness::Step { n, now, next })) => {
                assert_eq!(n, 0);
                assert_eq!(now, State::new(vec![Value(0)]));
                assert_eq!(next, State::new(vec![Value(2)]));
            }
            other => panic!("expected a step witness, got {other:?}"),
        }
    }

    #[test]
    fn atom_convention_uses_next_state() {
        let m = counter(3);
        let theta = RigidEnv::new();
        let b = FlexBound::new(0);
        // x' = succ(x) as a bare atom: checked at step 0 only.
        let atom = parse("x' = succ(x)", m.sig()).unwrap();
        assert_eq!(eval_disc(&atom, &m, &theta, &lasso(&[0], &[1]), b), Ok(Verdict::True));
        assert!(!eval_disc(&atom, &m, &theta, &lasso(&[0], &[2]), b).unwrap().holds());
        // Unprimed atom reads the current state.
        let now = parse("IsZero(x)", m.sig()).unwrap();
        assert_eq!(eval_disc(&now, &m, &theta, &lasso(&[0], &[1]), b), Ok(Verdict::True));
        assert!(!eval_disc(&now, &m, &theta, &lasso(&[1], &[0]), b).unwrap().holds());
    }

    /// Independent oracle: unrolled evaluation to a finite horizon with no
    /// lasso-awareness and no memoization.
    fn naive(
        interp: &Interpretation,
        p: &TempFormula,
        flex: &FlexCtx,
        theta: &RigidEnv,
        rho: &DiscreteBehavior,
        n: usize,
        horizon: usize,
    ) -> bool {
        match p {
            TempFormula::Atom(a) => {
                eval_action(interp, flex, a, theta, rho.at(n), rho.at(n + 1)).unwrap()
            }
            TempFormula::Not(b) => !naive(interp, b, flex, theta, rho, n, horizon),
            TempFormula::And(l, r) => {
                naive(interp, l, flex, theta, rho, n, horizon)
                    && naive(interp, r, flex, theta, rho, n, horizon)
            }
            TempFormula::Always(b) => {
                (n..=n + horizon).all(|m| naive(interp, b, flex, theta, rho, m, horizon))
            }
            TempFormula::ActionBox(a, subs) => (n..=n + horizon).all(|m| {
                let slots: Vec<usize> = subs.iter().map(|v| flex.slot(v).unwrap()).collect();
                rho.at(m).agrees_on(rho.at(m + 1), &slots)
                    || eval_action(interp, flex, a, theta, rho.at(m), rho.at(m + 1)).unwrap()
            }),
            TempFormula::ForallRigid(x, b) => (0..interp.domain_size()).all(|v| {
                let mut env = theta.clone();
                env.insert(x.clone(), Value(v as u32));
                naive(interp, b, flex, &env, rho, n, horizon)
            }),
            other => panic!("oracle only covers the flexible-quantifier-free core: {other:?}"),
        }
    }

    #[test]
    fn lasso_evaluation_matches_naive_unrolling() {
        let m = pair_model();
        let theta = RigidEnv::new();
        let flex = FlexCtx::base(m.sig());
        let cfg = GenConfig { max_depth: 4, allow_primes: true, allow_flex_quant: false, agreement_safe: false };
        let mut rng = StdRng::seed_from_u64(0xd15c);
        for i in 0..150 {
            let p = generate::formula(m.sig(), &mut rng, &cfg);
            let rho = generate::behavior(&mut rng, 2, 3, 4, 3);
            let horizon = 3 * rho.lasso_len();
            let fast = eval_disc(&p, &m, &theta, &rho, FlexBound::new(0)).unwrap().holds();
            let slow = naive(&m, &p, &flex, &theta, &rho, 0, horizon);
            assert_eq!(fast, slow, "case {i}: {p:?} on {rho:?}");
        }
    }

    #[test]
    fn stutter_invariance_is_exact_per_instance() {
        let m = pair_model();
        let theta = RigidEnv::new();
        // Primed atoms outside boxes are transition formulas, not covered by
        // the invariance proposition, so the generator keeps primes inside
        // action boxes here.
        let cfg = GenConfig { max_depth: 3, allow_primes: false, allow_flex_quant: false, agreement_safe: false };
        let mut rng = StdRng::seed_from_u64(0x1abe1);
        for i in 0..120 {
            let p = generate::formula(m.sig(), &mut rng, &cfg);
            let rho = generate::behavior(&mut rng, 2, 2, 3, 3);
            assert!(
                check_stutter_invariance_disc(&p, &m, &theta, &rho, FlexBound::new(0), 8, &mut rng)
                    .unwrap(),
                "case {i}: {p:?} on {rho:?}"
            );
        }
    }

    #[test]
    fn double_negation_is_transparent() {
        let m = pair_model();
        let theta = RigidEnv::new();
        let cfg = GenConfig { max_depth: 3, allow_primes: true, allow_flex_quant: false, agreement_safe: false };
        let mut rng = StdRng::seed_from_u64(0xdeb);
        for _ in 0..120 {
            let p = generate::formula(m.sig(), &mut rng, &cfg);
            let rho = generate::behavior(&mut rng, 2, 2, 3, 3);
            let not_not =
                TempFormula::Not(Box::new(TempFormula::Not(Box::new(p.clone()))));
            let b = FlexBound::new(0);
            assert_eq!(
                eval_disc(&p, &m, &theta, &rho, b).unwrap().holds(),
                eval_disc(&not_not, &m, &theta, &rho, b).unwrap().holds(),
            );
        }
    }

    #[test]
    fn flex_quantifier_verdicts_are_honest() {
        let m = counter(2);
        let theta = RigidEnv::new();
        let rho = lasso(&[], &[0, 1]);
        // ∀∀u. u = u is a tautology, but the search is bounded: never True.
        let taut = parse("\\AA u . u = u", m.sig()).unwrap();
        assert_eq!(
            eval_disc(&taut, &m, &theta, &rho, FlexBound::new(1)),
            Ok(Verdict::TrueWithinBound { max_stutter_expansion: 1 })
        );
        // ∀∀u. u = x is refuted by a constant stream differing from x.
        let tied = parse("\\AA u . u = x", m.sig()).unwrap();
        match eval_disc(&tied, &m, &theta, &rho, FlexBound::new(0)) {
            Ok(Verdict::FalseWitnessed(Witness::FlexRefutation {
                behavior,
                prefix_vals,
                cycle_vals,
            })) => {
                // Replaying the witness re-evaluates the body to false.
                let extended = behavior.zip_extend(&prefix_vals, &cycle_vals).unwrap();
                let ev = Evaluator { interp: &m, bound: FlexBound::new(0) };
                let flex = FlexCtx::base(m.sig()).pushed("u");
                let body = parse("u = x", m.sig()); // `u` is unbound here
                assert!(body.is_err());
                let body = Action::Eq(Term::FlexVar(s("u")), Term::FlexVar(s("x")));
                let mut memo = Memo::new();
                let out = ev
                    .eval(&TempFormula::Atom(body), &flex, &theta, &extended, 0, &mut memo)
                    .unwrap();
                assert!(!out.holds, "witness must replay to false");
            }
            other => panic!("expected a flex refutation, got {other:?}"),
        }
        // ∃∃ desugars and reports within-bound truth once a witness exists.
        let ex = parse("\\EE u . ~ (u = x)", m.sig()).unwrap();
        assert_eq!(
            eval_disc(&ex, &m, &theta, &rho, FlexBound::new(0)),
            Ok(Verdict::TrueWithinBound { max_stutter_expansion: 0 })
        );
    }

    #[test]
    fn flex_bound_is_monotone() {
        let m = counter(2);
        let theta = RigidEnv::new();
        let mut rng = StdRng::seed_from_u64(0xb0);
        let cfg = GenConfig { max_depth: 2, allow_primes: true, allow_flex_quant: true, agreement_safe: false };
        let mut saw_flex = 0;
        for i in 0..80 {
            let p = TempFormula::ForallFlex(
                s("u"),
                Box::new(generate::formula(m.sig(), &mut rng, &cfg)),
            );
            let rho = generate::behavior(&mut rng, 1, 1, 2, 2);
            let lo = eval_disc(&p, &m, &theta, &rho, FlexBound::new(0)).unwrap();
            let hi = eval_disc(&p, &m, &theta, &rho, FlexBound::new(1)).unwrap();
            saw_flex += 1;
            // Widening the search can only move toward refutation.
            if !lo.holds() {
                assert!(!hi.holds(), "case {i}: refutation vanished when widening: {p:?}");
            }
            // And a refutation is final: replay stays false at any bound.
            if let Verdict::FalseWitnessed(Witness::FlexRefutation { .. }) = &lo {
                let again = eval_disc(&p, &m, &theta, &rho, FlexBound::new(0)).unwrap();
                assert!(!again.holds());
            }
        }
        assert_eq!(saw_flex, 80);
    }

    #[test]
    fn invariance_checker_flags_non_invariant_inputs() {
        // Sanity for the checker itself: a formula whose truth depends on
        // the number of steps cannot be expressed; feed the checker a pair
        // of behaviours that are NOT expansions and confirm it still
        // reports agreement across genuine expansions.
        let m = counter(3);
        let theta = RigidEnv::new();
        let p = parse("[] [x' = succ(x)]_<x>", m.sig()).unwrap();
        let rho = lasso(&[0], &[1, 2, 0]);
        let mut rng = StdRng::seed_from_u64(7);
        assert!(check_stutter_invariance_disc(&p, &m, &theta, &rho, FlexBound::new(0), 20, &mut rng)
            .unwrap());
    }
}
