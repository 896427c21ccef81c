//! Seeded random generation of well-formed formulas, behaviours, traces,
//! reparametrizations, and time sets — shared by the property-test suites
//! and the CLI's corpus builders. Everything is deterministic in the
//! caller-supplied RNG.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand_core::RngCore;

use crate::interp::Signature;
use crate::rat::{rat, Rat};
use crate::reparam::Reparam;
use crate::syntax::{flex_vars_of_action, Action, TempFormula, Term};
use crate::timeset::{Interval, TimeSet};
use crate::traces::{ContTrace, DiscreteBehavior, Segment, State, Value};
use alloc::boxed::Box;

fn below(rng: &mut dyn RngCore, n: usize) -> usize {
    if n <= 1 {
        return 0;
    }
    (rng.next_u32() as usize) % n
}

fn chance(rng: &mut dyn RngCore, num: u32, den: u32) -> bool {
    rng.next_u32() % den < num
}

/// Shape of the formulas to generate.
#[derive(Clone, Debug)]
pub struct GenConfig {
    pub max_depth: u32,
    /// Permit primed atoms outside action boxes. Such transition atoms sit
    /// outside the stutter-invariant fragment (they read a fixed step of the
    /// trace), so turn this off when generating for invariance properties.
    /// Primes inside action boxes are always allowed.
    pub allow_primes: bool,
    /// Permit flexible quantifiers (∀∀ after parsing; bounded to evaluate).
    pub allow_flex_quant: bool,
    /// Restrict to the fragment on which the discrete and continuous
    /// semantics agree for validity: unprimed atoms, action boxes only
    /// directly under `[]` with subscripts covering every flexible
    /// variable of the action, and no flexible quantifiers.
    pub agreement_safe: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig { max_depth: 4, allow_primes: true, allow_flex_quant: true, agreement_safe: false }
    }
}

struct Gen<'a> {
    sig: &'a Signature,
    rng: &'a mut dyn RngCore,
    cfg: &'a GenConfig,
    funcs: Vec<(String, usize)>,
    rels: Vec<(String, usize)>,
    rigid: Vec<String>,
    flex_bound: Vec<String>,
    counter: u32,
}

impl<'a> Gen<'a> {
    fn fresh(&mut self, prefix: &str) -> String {
        loop {
            let name = format!("{prefix}{}", self.counter);
            self.counter += 1;
            if !self.sig.mentions(&name) {
                return name;
            }
        }
    }

    fn flexes(&self) -> Vec<String> {
        self.sig.flexible().iter().cloned().chain(self.flex_bound.iter().cloned()).collect()
    }

    fn term(&mut self, depth: u32, primes: bool) -> Term {
        let flexes = self.flexes();
        let zero_ary: Vec<&String> =
            self.funcs.iter().filter(|(_, a)| *a == 0).map(|(n, _)| n).collect();
        loop {
            match below(self.rng, 10) {
                0..=2 if depth > 0 && !self.funcs.is_empty() => {
                    let (f, arity) = self.funcs[below(self.rng, self.funcs.len())].clone();
                    let args = (0..arity).map(|_| self.term(depth - 1, primes)).collect();
                    return Term::App(f, args);
                }
                3..=4 if !self.rigid.is_empty() => {
                    let i = below(self.rng, self.rigid.len());
                    return Term::RigidVar(self.rigid[i].clone());
                }
                5..=8 if !flexes.is_empty() => {
                    let x = flexes[below(self.rng, flexes.len())].clone();
                    return if primes && chance(self.rng, 3, 10) {
                        Term::PrimedFlexVar(x)
                    } else {
                        Term::FlexVar(x)
                    };
                }
                _ if !zero_ary.is_empty() => {
                    return Term::App(zero_ary[below(self.rng, zero_ary.len())].clone(), Vec::new());
                }
                _ => {}
            }
        }
    }

    fn leaf(&mut self, primes: bool) -> Action {
        if !self.rels.is_empty() && chance(self.rng, 2, 3) {
            let (r, arity) = self.rels[below(self.rng, self.rels.len())].clone();
            let args = (0..arity).map(|_| self.term(1, primes)).collect();
            Action::Rel(r, args)
        } else {
            Action::Eq(self.term(1, primes), self.term(1, primes))
        }
    }

    fn action(&mut self, depth: u32) -> Action {
        if depth == 0 {
            return self.leaf(true);
        }
        match below(self.rng, 6) {
            0 => Action::And(Box::new(self.action(depth - 1)), Box::new(self.action(depth - 1))),
            1 => Action::Not(Box::new(self.action(depth - 1))),
            2 => {
                let name = self.fresh("r");
                self.rigid.push(name.clone());
                let body = self.action(depth - 1);
                self.rigid.pop();
                Action::ForallRigid(name, Box::new(body))
            }
            _ => self.leaf(true),
        }
    }

    /// An action box with a well-formed subscript. In agreement-safe mode
    /// the subscript covers every flexible variable of the action.
    fn action_box(&mut self, depth: u32) -> TempFormula {
        let action = self.action(depth);
        let mut subs: BTreeSet<String> = if self.cfg.agreement_safe || chance(self.rng, 2, 3) {
            flex_vars_of_action(&action)
        } else {
            BTreeSet::new()
        };
        let flexes = self.flexes();
        if !self.cfg.agreement_safe {
            for _ in 0..below(self.rng, 2) + usize::from(subs.is_empty()) {
                if flexes.is_empty() {
                    break;
                }
                subs.insert(flexes[below(self.rng, flexes.len())].clone());
            }
        }
        if subs.is_empty() {
            // No flexible variables in scope at all cannot happen for the
            // signatures we generate against, but stay total.
            subs.insert(self.sig.flexible().first().cloned().unwrap_or_else(|| String::from("x")));
        }
        TempFormula::ActionBox(action, subs.into_iter().collect())
    }

    fn formula(&mut self, depth: u32) -> TempFormula {
        if depth == 0 {
            return TempFormula::Atom(self.leaf(self.cfg.allow_primes && !self.cfg.agreement_safe));
        }
        match below(self.rng, 10) {
            0 => TempFormula::Always(Box::new(self.formula(depth - 1))),
            1 => TempFormula::Not(Box::new(self.formula(depth - 1))),
            2 | 3 => TempFormula::And(
                Box::new(self.formula(depth - 1)),
                Box::new(self.formula(depth - 1)),
            ),
            4 => {
                let boxed = self.action_box(depth.saturating_sub(2));
                if self.cfg.agreement_safe {
                    TempFormula::Always(Box::new(boxed))
                } else {
                    boxed
                }
            }
            5 => {
                let name = self.fresh("r");
                self.rigid.push(name.clone());
                let body = self.formula(depth - 1);
                self.rigid.pop();
                TempFormula::ForallRigid(name, Box::new(body))
            }
            6 if self.cfg.allow_flex_quant && !self.cfg.agreement_safe => {
                let name = self.fresh("u");
                self.flex_bound.push(name.clone());
                let body = self.formula(depth - 1);
                self.flex_bound.pop();
                TempFormula::ForallFlex(name, Box::new(body))
            }
            _ => TempFormula::Atom(self.leaf(self.cfg.allow_primes && !self.cfg.agreement_safe)),
        }
    }
}

/// Generates a closed, well-formed, shadowing-free core formula over the
/// signature.
pub fn formula(sig: &Signature, rng: &mut dyn RngCore, cfg: &GenConfig) -> TempFormula {
    let mut g = Gen {
        sig,
        rng,
        cfg,
        funcs: sig.functions().map(|(n, a)| (String::from(n), a)).collect(),
        rels: sig.relations().map(|(n, a)| (String::from(n), a)).collect(),
        rigid: Vec::new(),
        flex_bound: Vec::new(),
        counter: 0,
    };
    g.formula(cfg.max_depth)
}

/// A random lasso behaviour of the given width over `domain` values.
pub fn behavior(
    rng: &mut dyn RngCore,
    width: usize,
    max_prefix: usize,
    max_cycle: usize,
    domain: u32,
) -> DiscreteBehavior {
    let plen = below(rng, max_prefix + 1);
    let clen = below(rng, max_cycle) + 1;
    let state = |rng: &mut dyn RngCore| {
        State::new((0..width).map(|_| Value(rng.next_u32() % domain.max(1))).collect())
    };
    let prefix = (0..plen).map(|_| state(rng)).collect();
    let cycle = (0..clen).map(|_| state(rng)).collect();
    DiscreteBehavior::new(prefix, cycle).expect("generated lasso is well-formed")
}

/// A small positive rational with numerator and denominator at most
/// `bound` (denominators chosen from 1..=bound).
pub fn small_positive_rat(rng: &mut dyn RngCore, bound: u32) -> Rat {
    let den = below(rng, bound as usize) as i64 + 1;
    let num = below(rng, bound as usize) as i64 + 1;
    rat(num, den)
}

/// A random piecewise-constant lasso trace.
pub fn cont_trace(
    rng: &mut dyn RngCore,
    width: usize,
    max_prefix: usize,
    max_cycle: usize,
    domain: u32,
) -> ContTrace {
    let plen = below(rng, max_prefix + 1);
    let clen = below(rng, max_cycle) + 1;
    let seg = |rng: &mut dyn RngCore| {
        Segment::new(
            State::new((0..width).map(|_| Value(rng.next_u32() % domain.max(1))).collect()),
            small_positive_rat(rng, 4),
        )
    };
    let segments = (0..plen).map(|_| seg(rng)).collect();
    let cycle = (0..clen).map(|_| seg(rng)).collect();
    ContTrace::new(segments, cycle).expect("generated trace is well-formed")
}

/// A random reparametrization: a stutter when `allow_offset` is false,
/// otherwise possibly a falter with positive offset.
pub fn reparam(rng: &mut dyn RngCore, allow_offset: bool) -> Reparam {
    let offset = if allow_offset && chance(rng, 1, 3) {
        small_positive_rat(rng, 3)
    } else {
        crate::rat::zero()
    };
    let knot_count = below(rng, 3);
    let mut knots = Vec::with_capacity(knot_count + 1);
    knots.push((crate::rat::zero(), crate::rat::zero()));
    let (mut x, mut y) = (crate::rat::zero(), crate::rat::zero());
    for _ in 0..knot_count {
        x += small_positive_rat(rng, 3);
        y += small_positive_rat(rng, 3);
        knots.push((x.clone(), y.clone()));
    }
    let slope = small_positive_rat(rng, 3);
    Reparam::new(offset, knots, slope).expect("generated reparametrization is well-formed")
}

/// A random eventually-periodic time set with endpoints on a grid of
/// denominators dividing `max_den`.
pub fn timeset(rng: &mut dyn RngCore, max_den: u32) -> TimeSet {
    let grid = |rng: &mut dyn RngCore, span: i64| rat(below(rng, (span * max_den as i64) as usize) as i64, max_den as i64);
    let threshold = grid(rng, 3);
    let period = small_positive_rat(rng, max_den);
    let mut transient = Vec::new();
    for _ in 0..below(rng, 3) {
        let lo = grid(rng, 3);
        let hi = (&lo + small_positive_rat(rng, max_den)).min(threshold.clone());
        if lo < hi {
            transient.push(Interval::bounded(lo, hi));
        }
    }
    let mut pattern = Vec::new();
    for _ in 0..below(rng, 3) {
        let lo = &period * grid(rng, 1);
        let hi = (&lo + small_positive_rat(rng, max_den)).min(period.clone());
        if lo < hi {
            pattern.push(Interval::bounded(lo, hi));
        }
    }
    TimeSet::new(threshold, transient, period, pattern).expect("generated time set is well-formed")
}
