//! Continuous-time denotational semantics.
//!
//! A formula's meaning over a piecewise-constant trace is the [`TimeSet`] of
//! instants whose suffixes satisfy it; satisfaction of the trace itself is
//! membership of zero. The connectives act directly on the algebra: negation
//! is complement, conjunction is intersection, and `□` is the future-closure
//! `box` operator — the evaluator is compositional in the model rather than
//! recursing over satisfaction points.
//!
//! An action box `[A]_⟨x…⟩` holds at an instant when the subscript variables
//! never change again, or when `A` relates the current state to the state at
//! their next change. A bare action atom is read the same way with the next
//! change of the *full* state standing in for the primed state. Both are
//! constant on each represented segment of the trace, so their denotations
//! are assembled segment-by-segment into an eventually periodic set.

use alloc::vec::Vec;

use crate::discrete::{FlexBound, Verdict, Witness};
use crate::interp::{eval_action, EvalError, FlexCtx, Interpretation, RigidEnv};
use crate::rat::{zero, Rat};
use crate::syntax::{desugar, TempFormula};
use crate::timeset::TimeSet;
use crate::traces::{ContTrace, NextChange, Value};

/// The meaning of a formula on a trace: the set of times `t` whose suffix
/// `τ[t..]` satisfies it. `exact` is false iff a flexible quantifier was
/// approximated by a bounded search somewhere inside, in which case the set
/// is only an enclosure of the true denotation.
#[derive(Clone, Debug)]
pub struct Denotation {
    pub set: TimeSet,
    pub exact: bool,
}

/// Builds the eventually periodic set of instants at which `head` holds,
/// given that `head` is constant on every represented segment: one call per
/// prefix segment and one per cycle segment, at the segment's start suffix.
fn aligned_set<F>(tau: &ContTrace, mut head: F) -> Result<TimeSet, EvalError>
where
    F: FnMut(&ContTrace) -> Result<bool, EvalError>,
{
    let mut t = zero();
    let mut prefix = Vec::new();
    for seg in tau.segments() {
        prefix.push((head(&tau.suffix(&t))?, seg.duration.clone()));
        t = &t + &seg.duration;
    }
    let mut cycle = Vec::new();
    for seg in tau.cycle() {
        cycle.push((head(&tau.suffix(&t))?, seg.duration.clone()));
        t = &t + &seg.duration;
    }
    Ok(TimeSet::from_flagged_segments(&prefix, &cycle))
}

struct Ctx<'a> {
    interp: &'a Interpretation,
    bound: FlexBound,
}

impl<'a> Ctx<'a> {
    fn denote(
        &self,
        p: &TempFormula,
        flex: &FlexCtx,
        theta: &RigidEnv,
        tau: &ContTrace,
    ) -> Result<Denotation, EvalError> {
        match p {
            TempFormula::Atom(a) => {
                let slots: Vec<usize> = (0..tau.width()).collect();
                let set = aligned_set(tau, |suf| {
                    // σ′ is the state at the next change of the full state;
                    // a never-changing tail degenerates to σ′ = σ.
                    let r = suf.next_change(&slots).expect("slots in range").as_rat();
                    eval_action(self.interp, flex, a, theta, suf.value_at(&zero()), suf.value_at(&r))
                })?;
                Ok(Denotation { set, exact: true })
            }
            TempFormula::ActionBox(a, subs) => {
                let mut slots = Vec::new();
                for v in subs {
                    slots.push(
                        flex.slot(v).ok_or_else(|| EvalError::UnknownFlexible(v.clone()))?,
                    );
                }
                let set = aligned_set(tau, |suf| {
                    match suf.next_change(&slots).expect("slots in range") {
                        NextChange::Never => Ok(true),
                        NextChange::At(r) => eval_action(
                            self.interp,
                            flex,
                            a,
                            theta,
                            suf.value_at(&zero()),
                            suf.value_at(&r),
                        ),
                    }
                })?;
                Ok(Denotation { set, exact: true })
            }
            TempFormula::Not(b) => {
                let d = self.denote(b, flex, theta, tau)?;
                Ok(Denotation { set: d.set.complement(), exact: d.exact })
            }
            TempFormula::And(l, r) => {
                let dl = self.denote(l, flex, theta, tau)?;
                let dr = self.denote(r, flex, theta, tau)?;
                Ok(Denotation { set: dl.set.intersect(&dr.set), exact: dl.exact && dr.exact })
            }
            TempFormula::Always(b) => {
                let d = self.denote(b, flex, theta, tau)?;
                Ok(Denotation { set: d.set.box_(), exact: d.exact })
            }
            TempFormula::ForallRigid(x, b) => {
                let mut set = TimeSet::full();
                let mut exact = true;
                for v in 0..self.interp.domain_size() {
                    let mut env = theta.clone();
                    env.insert(x.clone(), Value(v as u32));
                    let d = self.denote(b, flex, &env, tau)?;
                    set = set.intersect(&d.set);
                    exact = exact && d.exact;
                }
                Ok(Denotation { set, exact })
            }
            TempFormula::ForallFlex(x, b) => self.forall_flex(x, b, flex, theta, tau),
            other => {
                let core = desugar(other);
                self.denote(&core, flex, theta, tau)
            }
        }
    }

    /// Bounded intersection over witness extensions of `tau`: for each
    /// subdivision fineness `m ≤ bound + 1`, every segment is cut into `m`
    /// equal parts and the quantified variable ranges over all per-segment
    /// value assignments, keeping the extension lasso-shaped on the same
    /// timeline. Any finite enumeration can only over-approximate the true
    /// intersection, hence `exact: false`.
    fn forall_flex(
        &self,
        x: &str,
        b: &TempFormula,
        flex: &FlexCtx,
        theta: &RigidEnv,
        tau: &ContTrace,
    ) -> Result<Denotation, EvalError> {
        let inner_flex = flex.pushed(x);
        let dsize = self.interp.domain_size() as u32;
        let mut set = TimeSet::full();
        for m in 1..=self.bound.max_stutter_expansion + 1 {
            let fine = tau.subdivided(m);
            let plen = fine.segments().len();
            let clen = fine.cycle().len();
            let mut stream = alloc::vec![0u32; plen + clen];
            loop {
                let pvals: Vec<Value> = stream[..plen].iter().map(|&v| Value(v)).collect();
                let cvals: Vec<Value> = stream[plen..].iter().map(|&v| Value(v)).collect();
                let extended = fine.zip_extend(&pvals, &cvals).expect("aligned stream");
                let d = self.denote(b, &inner_flex, theta, &extended)?;
                set = set.intersect(&d.set);
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
        }
        Ok(Denotation { set, exact: false })
    }
}

/// Denotes a closed formula on a trace whose width matches the signature.
pub fn denote(
    p: &TempFormula,
    interp: &Interpretation,
    theta: &RigidEnv,
    tau: &ContTrace,
    bound: FlexBound,
) -> Result<Denotation, EvalError> {
    if tau.width() != interp.sig().flexible().len() {
        return Err(EvalError::TraceWidth);
    }
    let p = desugar(p);
    let ctx = Ctx { interp, bound };
    ctx.denote(&p, &FlexCtx::base(interp.sig()), theta, tau)
}

/// Satisfaction with the exactness flag: membership of zero in the
/// denotation, with bounded-search honesty carried into the verdict.
pub fn sat_cont_full(
    p: &TempFormula,
    interp: &Interpretation,
    theta: &RigidEnv,
    tau: &ContTrace,
    bound: FlexBound,
) -> Result<(Verdict, bool), EvalError> {
    let d = denote(p, interp, theta, tau, bound)?;
    let holds = d.set.contains(&zero());
    let verdict = match (holds, d.exact) {
        (true, true) => Verdict::True,
        (true, false) => {
            Verdict::TrueWithinBound { max_stutter_expansion: bound.max_stutter_expansion }
        }
        (false, true) => {
            Verdict::FalseWitnessed(find_witness(p, interp, theta, tau, bound)?)
        }
        // The enclosure excludes zero but a bounded search contributed, so
        // report plain falsity without claiming a replayable witness.
        (false, false) => Verdict::False,
    };
    Ok((verdict, d.exact))
}

/// Satisfaction: does the trace itself (time zero) satisfy the formula?
pub fn sat_cont(
    p: &TempFormula,
    interp: &Interpretation,
    theta: &RigidEnv,
    tau: &ContTrace,
    bound: FlexBound,
) -> Result<Verdict, EvalError> {
    sat_cont_full(p, interp, theta, tau, bound).map(|(v, _)| v)
}

/// For a refuted `□`-rooted formula, the earliest instant whose suffix
/// violates the body; otherwise the violation is at the trace head itself.
fn find_witness(
    p: &TempFormula,
    interp: &Interpretation,
    theta: &RigidEnv,
    tau: &ContTrace,
    bound: FlexBound,
) -> Result<Witness, EvalError> {
    if let TempFormula::Always(inner) = p {
        let d = denote(inner, interp, theta, tau, bound)?;
        let gap = d.set.complement().min_element().expect("a refuted box has a gap");
        return Ok(Witness::Time { t: gap });
    }
    Ok(Witness::Time { t: zero() })
}

/// Checks, at each sample instant, that membership in the denotation agrees
/// with satisfaction of the corresponding suffix. Intended for formulas
/// without flexible quantifiers, where both sides are exact.
pub fn coherence_check(
    p: &TempFormula,
    interp: &Interpretation,
    theta: &RigidEnv,
    tau: &ContTrace,
    samples: &[Rat],
) -> Result<bool, EvalError> {
    let bound = FlexBound::new(0);
    let d = denote(p, interp, theta, tau, bound)?;
    for t in samples {
        let by_set = d.set.contains(t);
        let by_suffix = sat_cont(p, interp, theta, &tau.suffix(t), bound)?.holds();
        if by_set != by_suffix {
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
    use crate::rat::{rat, rat_int};
    use crate::syntax::parse;
    use crate::traces::{embed_discrete, DiscreteBehavior, Segment, State};
    use alloc::collections::BTreeMap;
    use alloc::string::{String, ToString};
    use alloc::vec;
    use rand::rngs::StdRng;
    use rand::{RngCore, SeedableRng};

    fn s(x: &str) -> String {
        x.to_string()
    }

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

    fn trace1(prefix: &[(u32, i64)], cycle: &[(u32, i64)]) -> ContTrace {
        let seg = |&(v, d): &(u32, i64)| Segment::new(State::new(vec![Value(v)]), rat_int(d));
        ContTrace::new(prefix.iter().map(seg).collect(), cycle.iter().map(seg).collect()).unwrap()
    }

    #[test]
    fn spec_denotation_examples() {
        let m = counter(5);
        let theta = RigidEnv::new();
        let b = FlexBound::new(0);

        let stays = parse("[] [x' = x]_<x>", m.sig()).unwrap();
        let d = denote(&stays, &m, &theta, &trace1(&[], &[(3, 1)]), b).unwrap();
        assert!(d.set.is_full() && d.exact);

        let steps = parse("[x' = succ(x)]_<x>", m.sig()).unwrap();
        let tau = trace1(&[], &[(0, 1), (1, 1), (2, 1), (3, 1), (4, 1)]);
        assert!(denote(&steps, &m, &theta, &tau, b).unwrap().set.is_full());

        // □(x = zero) on a trace that leaves zero is nowhere true; the bare
        // atom holds exactly on the first segment.
        let m2 = counter(2);
        let always_zero = parse("[] x = zero", m2.sig()).unwrap();
        let tau = trace1(&[(0, 1)], &[(1, 1)]);
        assert!(denote(&always_zero, &m2, &theta, &tau, b).unwrap().set.is_empty());
        let at_zero = parse("x = zero", m2.sig()).unwrap();
        let d = denote(&at_zero, &m2, &theta, &tau, b).unwrap();
        assert!(d.set.equals(&TimeSet::interval(zero(), Some(rat_int(1))).unwrap()));
    }

    #[test]
    fn action_box_filters_on_subscript_variables() {
        let m = pair_model();
        let theta = RigidEnv::new();
        let b = FlexBound::new(0);
        // x stays put; y toggles. The box over ⟨x⟩ ignores y's activity.
        let seg = |x: u32, y: u32, d: i64| Segment::new(State::new(vec![Value(x), Value(y)]), rat_int(d));
        let tau = ContTrace::new(vec![], vec![seg(1, 0, 1), seg(1, 2, 2)]).unwrap();
        let p = parse("[] [x' = succ(x)]_<x>", m.sig()).unwrap();
        assert!(denote(&p, &m, &theta, &tau, b).unwrap().set.is_full());
        // Over ⟨x,y⟩ the very first y-change must satisfy the action, and
        // x' = succ(x) fails there since x is unchanged.
        let q = parse("[] [x' = succ(x)]_<x,y>", m.sig()).unwrap();
        assert!(denote(&q, &m, &theta, &tau, b).unwrap().set.is_empty());
        match sat_cont(&q, &m, &theta, &tau, b).unwrap() {
            Verdict::FalseWitnessed(Witness::Time { t }) => assert_eq!(t, zero()),
            other => panic!("expected a time witness, got {other:?}"),
        }
    }

    #[test]
    fn verdicts_report_earliest_violation() {
        let m = counter(2);
        let theta = RigidEnv::new();
        let b = FlexBound::new(0);
        // x = zero holds on [0,3) then fails forever.
        let tau = trace1(&[(0, 3)], &[(1, 1)]);
        let p = parse("[] x = zero", m.sig()).unwrap();
        match sat_cont(&p, &m, &theta, &tau, b).unwrap() {
            Verdict::FalseWitnessed(Witness::Time { t }) => assert_eq!(t, rat_int(3)),
            other => panic!("expected a time witness, got {other:?}"),
        }
        let good = parse("[] (x = x /\\ ~ ~ (x = x))", m.sig()).unwrap();
        assert_eq!(sat_cont(&good, &m, &theta, &trace1(&[], &[(0, 1)]), b), Ok(Verdict::True));
    }

    #[test]
    fn segment_alignment_and_coherence() {
        let m = pair_model();
        let theta = RigidEnv::new();
        let cfg = GenConfig { max_depth: 3, allow_primes: true, allow_flex_quant: false, agreement_safe: false };
        let mut rng = StdRng::seed_from_u64(0xa119);
        for case in 0..60 {
            let p = generate::formula(m.sig(), &mut rng, &cfg);
            let tau = generate::cont_trace(&mut rng, 2, 2, 3, 3);
            let d = denote(&p, &m, &theta, &tau, FlexBound::new(0)).unwrap();
            // Membership is constant strictly inside every represented
            // segment across the prefix and three cycles: probe each span at
            // 1/3 and 2/3 of its width and compare with its start.
            let mut start = zero();
            let mut spans: Vec<(Rat, Rat)> = Vec::new();
            for seg in tau.segments() {
                spans.push((start.clone(), seg.duration.clone()));
                start = &start + &seg.duration;
            }
            for _ in 0..3 {
                for seg in tau.cycle() {
                    spans.push((start.clone(), seg.duration.clone()));
                    start = &start + &seg.duration;
                }
            }
            let mut samples = Vec::new();
            for (lo, width) in &spans {
                let at = d.set.contains(lo);
                for frac in [rat(1, 3), rat(2, 3)] {
                    let t = lo + &(width * &frac);
                    assert_eq!(d.set.contains(&t), at, "case {case}: boundary inside a segment");
                    samples.push(t);
                }
                samples.push(lo.clone());
            }
            assert!(coherence_check(&p, &m, &theta, &tau, &samples).unwrap(), "case {case}");
        }
    }

    #[test]
    fn stutters_act_by_preimage() {
        let m = pair_model();
        let theta = RigidEnv::new();
        let cfg = GenConfig { max_depth: 3, allow_primes: true, allow_flex_quant: false, agreement_safe: false };
        let mut rng = StdRng::seed_from_u64(0x5707);
        for case in 0..60 {
            let p = generate::formula(m.sig(), &mut rng, &cfg);
            let tau = generate::cont_trace(&mut rng, 2, 1, 2, 3);
            let s = generate::reparam(&mut rng, false);
            let lhs = denote(&p, &m, &theta, &tau.apply_reparam(&s), FlexBound::new(0)).unwrap();
            let rhs = denote(&p, &m, &theta, &tau, FlexBound::new(0)).unwrap().set.preimage(&s);
            assert!(lhs.set.equals(&rhs), "case {case}: {p:?}");
        }
    }

    #[test]
    fn box_is_future_closure_with_counit() {
        let m = pair_model();
        let theta = RigidEnv::new();
        let cfg = GenConfig { max_depth: 3, allow_primes: true, allow_flex_quant: false, agreement_safe: false };
        let mut rng = StdRng::seed_from_u64(0xb0c5);
        let mut held_somewhere = 0;
        for _ in 0..80 {
            let p = generate::formula(m.sig(), &mut rng, &cfg);
            let tau = generate::cont_trace(&mut rng, 2, 2, 3, 3);
            let inner = denote(&p, &m, &theta, &tau, FlexBound::new(0)).unwrap().set;
            let outer = denote(
                &TempFormula::Always(alloc::boxed::Box::new(p.clone())),
                &m,
                &theta,
                &tau,
                FlexBound::new(0),
            )
            .unwrap()
            .set;
            assert!(outer.equals(&inner.box_()));
            // Counit: □T ⊆ T.
            assert!(outer.intersect(&inner).equals(&outer));
            // Falter semimonotonicity: future-closure survives any falter.
            if outer.contains(&zero()) {
                held_somewhere += 1;
                let f = generate::reparam(&mut rng, true);
                assert!(outer.preimage(&f).contains(&zero()));
            }
        }
        assert!(held_somewhere > 0, "suite never exercised a held box");
    }

    #[test]
    fn validity_agreement_with_discrete_semantics() {
        let m = pair_model();
        let theta = RigidEnv::new();
        let cfg = GenConfig { max_depth: 4, allow_primes: false, allow_flex_quant: false, agreement_safe: true };
        let mut rng = StdRng::seed_from_u64(0xa96e);
        let mut disagreements = 0;
        for _ in 0..120 {
            let p = generate::formula(m.sig(), &mut rng, &cfg);
            let rho = generate::behavior(&mut rng, 2, 3, 4, 3);
            let tau = embed_discrete(&rho, &rat_int(1)).unwrap();
            let disc = crate::discrete::eval_disc(&p, &m, &theta, &rho, FlexBound::new(0)).unwrap();
            let cont = sat_cont(&p, &m, &theta, &tau, FlexBound::new(0)).unwrap();
            if disc.holds() != cont.holds() {
                disagreements += 1;
            }
        }
        assert_eq!(disagreements, 0);
    }

    #[test]
    fn flexible_quantifier_is_bounded_and_honest() {
        let m = counter(2);
        let theta = RigidEnv::new();
        let tau = trace1(&[], &[(0, 1), (1, 1)]);
        // ∀∀u. u = u exhausts its bounded search without refutation.
        let taut = parse("\\AA u . u = u", m.sig()).unwrap();
        assert_eq!(
            sat_cont(&taut, &m, &theta, &tau, FlexBound::new(1)),
            Ok(Verdict::TrueWithinBound { max_stutter_expansion: 1 })
        );
        // ∀∀u. u = x is cut down by a witness stream disagreeing with x.
        let tied = parse("\\AA u . u = x", m.sig()).unwrap();
        assert_eq!(sat_cont(&tied, &m, &theta, &tau, FlexBound::new(0)), Ok(Verdict::False));
        let (_, exact) = sat_cont_full(&tied, &m, &theta, &tau, FlexBound::new(0)).unwrap();
        assert!(!exact);
        // ∃∃u. u = x succeeds within the bound.
        let ex = parse("\\EE u . u = x", m.sig()).unwrap();
        assert_eq!(
            sat_cont(&ex, &m, &theta, &tau, FlexBound::new(0)),
            Ok(Verdict::TrueWithinBound { max_stutter_expansion: 0 })
        );
        // The witness grid refines with the bound: on a constant trace, a
        // per-segment stream can never change, so "some u changes" needs at
        // least one extra cut before a witness appears.
        let tau0 = trace1(&[], &[(0, 1)]);
        let changes = parse("\\EE u . ~ [] [u' = u]_<u>", m.sig()).unwrap();
        assert!(!sat_cont(&changes, &m, &theta, &tau0, FlexBound::new(0)).unwrap().holds());
        assert!(sat_cont(&changes, &m, &theta, &tau0, FlexBound::new(1)).unwrap().holds());
    }

    #[test]
    fn random_traces_roundtrip_through_subdivision() {
        // subdivided(m) must not change the trace as a function of time, so
        // denotations are unchanged under it.
        let m = pair_model();
        let theta = RigidEnv::new();
        let cfg = GenConfig { max_depth: 3, allow_primes: true, allow_flex_quant: false, agreement_safe: false };
        let mut rng = StdRng::seed_from_u64(0x5d1);
        for _ in 0..40 {
            let p = generate::formula(m.sig(), &mut rng, &cfg);
            let tau = generate::cont_trace(&mut rng, 2, 1, 2, 3);
            let m_parts = (rng.next_u32() % 3 + 1) as usize;
            let a = denote(&p, &m, &theta, &tau, FlexBound::new(0)).unwrap().set;
            let b = denote(&p, &m, &theta, &tau.subdivided(m_parts), FlexBound::new(0)).unwrap().set;
            assert!(a.equals(&b));
        }
    }

    #[test]
    fn width_mismatch_is_reported() {
        let m = pair_model();
        let theta = RigidEnv::new();
        let p = parse("x = y", m.sig()).unwrap();
        let tau = trace1(&[], &[(0, 1)]);
        assert_eq!(denote(&p, &m, &theta, &tau, FlexBound::new(0)).unwrap_err(), EvalError::TraceWidth);
    }

    #[test]
    fn embedded_behavior_matches_discrete_example() {
        // The mod-5 counter embeds to a continuous trace satisfying the same
        // specification, with a half-speed embedding too.
        let m = counter(5);
        let theta = RigidEnv::new();
        let p = parse("[] [x' = succ(x)]_<x>", m.sig()).unwrap();
        let rho = DiscreteBehavior::new(
            vec![],
            (0..5).map(|v| State::new(vec![Value(v)])).collect(),
        )
        .unwrap();
        for step in [rat_int(1), rat(1, 2), rat(7, 3)] {
            let tau = embed_discrete(&rho, &step).unwrap();
            assert_eq!(sat_cont(&p, &m, &theta, &tau, FlexBound::new(0)), Ok(Verdict::True));
        }
    }
}
