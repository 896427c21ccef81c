//! Finitely presented behaviours in both flavours of time.
//!
//! Discrete behaviours are lassos — a finite prefix of states followed by a
//! repeating, nonempty cycle. Continuous traces are their piecewise-constant
//! counterparts: each state is held for a positive rational duration, which
//! enforces the non-Zeno conditions structurally (no instantaneous states,
//! no accumulation points).
//!
//! States are tuples of [`Value`]s; the binding of tuple slots to variable
//! *names* is a concern of the interpretation layer (declared flexible
//! variables in sorted name order, with flexibly-quantified variables pushed
//! on the right during evaluation). All operations here work on slot
//! indices.
//!
//! Stuttering equivalence is decided by a canonical form
//! ([`DiscreteBehavior::destutter`]): collapse runs of equal consecutive
//! states, collapse the cycle circularly, take the primitive root of the
//! cycle, then absorb the prefix tail into the cycle for as long as the
//! sequence forces it. The canonical form depends only on the infinite
//! state sequence, not on how it was cut into prefix and cycle. Note that
//! a monotone-surjection alignment always matches position 0 with position
//! 0, so behaviours whose destuttered sequences start differently — e.g.
//! the pure cycles `[a,b]` and `[b,a]` — are *not* equivalent, and no
//! rotation is applied beyond what prefix absorption forces.

use alloc::vec::Vec;
use core::fmt;

use num_traits::{Signed, Zero};

use crate::rat::{ceil_div, rem_euclid, zero, Rat};
use crate::reparam::Reparam;

/// An element of the interpretation's finite domain, by index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Value(pub u32);

/// A tuple of domain values, one per active flexible variable.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct State(Vec<Value>);

impl State {
    pub fn new(values: Vec<Value>) -> Self {
        State(values)
    }

    pub fn width(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[Value] {
        &self.0
    }

    pub fn get(&self, slot: usize) -> Value {
        self.0[slot]
    }

    /// A copy with one more slot holding `v`.
    pub fn extended(&self, v: Value) -> State {
        let mut vals = self.0.clone();
        vals.push(v);
        State(vals)
    }

    /// Do the two states agree on the given slots?
    pub fn agrees_on(&self, other: &State, slots: &[usize]) -> bool {
        slots.iter().all(|&i| self.0[i] == other.0[i])
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", v.0)?;
        }
        f.write_str(")")
    }
}

/// Rejection reasons for ill-formed behaviours and trace operations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TraceError {
    /// The cycle of a lasso must be nonempty.
    EmptyCycle,
    /// Continuous segments must have strictly positive duration.
    NonPositiveDuration,
    /// All states of a behaviour must have the same width.
    WidthMismatch,
    /// A variable slot index is out of range for this behaviour.
    SlotOutOfRange,
    /// A stutter-expansion repetition vector has the wrong shape or a zero.
    BadExpansion,
}

impl fmt::Display for TraceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = match self {
            TraceError::EmptyCycle => "cycle must be nonempty",
            TraceError::NonPositiveDuration => "durations must be positive",
            TraceError::WidthMismatch => "states must all have the same width",
            TraceError::SlotOutOfRange => "variable slot out of range",
            TraceError::BadExpansion => "expansion repetitions must match the lasso shape and be ≥ 1",
        };
        f.write_str(msg)
    }
}

/// A discrete behaviour `ρ : ℕ → State`, presented as a lasso:
/// `ρ(n) = prefix[n]` for `n < |prefix|`, then the cycle repeats forever.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiscreteBehavior {
    prefix: Vec<State>,
    cycle: Vec<State>,
}

impl DiscreteBehavior {
    pub fn new(prefix: Vec<State>, cycle: Vec<State>) -> Result<Self, TraceError> {
        if cycle.is_empty() {
            return Err(TraceError::EmptyCycle);
        }
        let width = cycle[0].width();
        if prefix.iter().chain(&cycle).any(|s| s.width() != width) {
            return Err(TraceError::WidthMismatch);
        }
        Ok(DiscreteBehavior { prefix, cycle })
    }

    pub fn prefix(&self) -> &[State] {
        &self.prefix
    }

    pub fn cycle(&self) -> &[State] {
        &self.cycle
    }

    pub fn width(&self) -> usize {
        self.cycle[0].width()
    }

    /// Number of positions after which indices only revisit old states.
    pub fn lasso_len(&self) -> usize {
        self.prefix.len() + self.cycle.len()
    }

    /// Folds an arbitrary index into `0..lasso_len()`.
    pub fn canonical_index(&self, n: usize) -> usize {
        if n < self.prefix.len() {
            n
        } else {
            self.prefix.len() + (n - self.prefix.len()) % self.cycle.len()
        }
    }

    /// The state at position `n`.
    pub fn at(&self, n: usize) -> &State {
        let i = self.canonical_index(n);
        if i < self.prefix.len() {
            &self.prefix[i]
        } else {
            &self.cycle[i - self.prefix.len()]
        }
    }

    /// The behaviour `m ↦ ρ(n + m)`.
    pub fn suffix(&self, n: usize) -> DiscreteBehavior {
        if n <= self.prefix.len() {
            DiscreteBehavior { prefix: self.prefix[n..].to_vec(), cycle: self.cycle.clone() }
        } else {
            let r = (n - self.prefix.len()) % self.cycle.len();
            let mut cycle = self.cycle[r..].to_vec();
            cycle.extend_from_slice(&self.cycle[..r]);
            DiscreteBehavior { prefix: Vec::new(), cycle }
        }
    }

    /// Stutter expansion: repeats the state at each prefix/cycle position
    /// the given number of times (every count ≥ 1). The result is
    /// stutter-equivalent to `self` by construction.
    pub fn stutter_expand(
        &self,
        prefix_reps: &[usize],
        cycle_reps: &[usize],
    ) -> Result<DiscreteBehavior, TraceError> {
        if prefix_reps.len() != self.prefix.len()
            || cycle_reps.len() != self.cycle.len()
            || prefix_reps.iter().chain(cycle_reps).any(|&r| r == 0)
        {
            return Err(TraceError::BadExpansion);
        }
        let repeat = |states: &[State], reps: &[usize]| -> Vec<State> {
            states
                .iter()
                .zip(reps)
                .flat_map(|(s, &r)| core::iter::repeat_n(s.clone(), r))
                .collect()
        };
        Ok(DiscreteBehavior {
            prefix: repeat(&self.prefix, prefix_reps),
            cycle: repeat(&self.cycle, cycle_reps),
        })
    }

    /// Extends every state with one more slot, taking the new values from a
    /// stream with the same lasso shape.
    pub fn zip_extend(
        &self,
        prefix_vals: &[Value],
        cycle_vals: &[Value],
    ) -> Result<DiscreteBehavior, TraceError> {
        if prefix_vals.len() != self.prefix.len() || cycle_vals.len() != self.cycle.len() {
            return Err(TraceError::WidthMismatch);
        }
        Ok(DiscreteBehavior {
            prefix: self.prefix.iter().zip(prefix_vals).map(|(s, &v)| s.extended(v)).collect(),
            cycle: self.cycle.iter().zip(cycle_vals).map(|(s, &v)| s.extended(v)).collect(),
        })
    }

    /// Canonical representative of the stuttering-equivalence class. See
    /// the module docs for the algorithm; the result depends only on the
    /// infinite destuttered state sequence.
    pub fn destutter(&self) -> DiscreteBehavior {
        let collapse = |states: &[State]| -> Vec<State> {
            let mut out: Vec<State> = Vec::with_capacity(states.len());
            for s in states {
                if out.last() != Some(s) {
                    out.push(s.clone());
                }
            }
            out
        };

        let mut v = collapse(&self.prefix);
        let mut cc = collapse(&self.cycle);
        // Circular collapse: the cycle's last state may stutter into its first.
        while cc.len() > 1 && cc.last() == cc.first() {
            cc.pop();
        }

        if cc.len() == 1 {
            // Eventually-constant behaviour: drop the prefix tail that
            // already equals the constant.
            while v.last() == cc.last() {
                v.pop();
            }
            return DiscreteBehavior { prefix: v, cycle: cc };
        }

        // Primitive root of the cycle word.
        let n = cc.len();
        let mut root_len = n;
        for d in 1..n {
            if n % d == 0 && (d..n).all(|i| cc[i] == cc[i % d]) {
                root_len = d;
                break;
            }
        }
        cc.truncate(root_len);
        let l = cc.len();

        // Absorb the prefix tail into the cycle. `j` is the cycle position
        // the infinite word enters at; popping a prefix state that matches
        // the state "one step earlier in the cycle" moves the entry back.
        let mut j = 0usize;
        while let Some(last) = v.last() {
            if *last == cc[j] {
                // A stutter straddling the junction (possible right after
                // the independent collapses above).
                v.pop();
            } else if *last == cc[(j + l - 1) % l] {
                v.pop();
                j = (j + l - 1) % l;
            } else {
                break;
            }
        }
        let mut cycle = cc[j..].to_vec();
        cycle.extend_from_slice(&cc[..j]);
        DiscreteBehavior { prefix: v, cycle }
    }

    /// Stuttering equivalence: equality of canonical forms. Errors when the
    /// behaviours do not have the same variable slots.
    pub fn stutter_equiv(&self, other: &DiscreteBehavior) -> Result<bool, TraceError> {
        if self.width() != other.width() {
            return Err(TraceError::WidthMismatch);
        }
        Ok(self.destutter() == other.destutter())
    }
}

/// One piecewise-constant piece of a continuous trace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segment {
    pub state: State,
    pub duration: Rat,
}

impl Segment {
    pub fn new(state: State, duration: Rat) -> Self {
        Segment { state, duration }
    }
}

/// A continuous, piecewise-constant, non-Zeno trace `τ : [0,∞) → State`:
/// finitely many leading segments, then a nonempty cycle of segments
/// repeating forever. Positive durations everywhere.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContTrace {
    segments: Vec<Segment>,
    cycle: Vec<Segment>,
}

impl ContTrace {
    pub fn new(segments: Vec<Segment>, cycle: Vec<Segment>) -> Result<Self, TraceError> {
        if cycle.is_empty() {
            return Err(TraceError::EmptyCycle);
        }
        if segments.iter().chain(&cycle).any(|s| !s.duration.is_positive()) {
            return Err(TraceError::NonPositiveDuration);
        }
        let width = cycle[0].state.width();
        if segments.iter().chain(&cycle).any(|s| s.state.width() != width) {
            return Err(TraceError::WidthMismatch);
        }
        Ok(ContTrace { segments, cycle })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn cycle(&self) -> &[Segment] {
        &self.cycle
    }

    pub fn width(&self) -> usize {
        self.cycle[0].state.width()
    }

    /// Total duration of the leading segments (where the cycle starts).
    pub fn prefix_duration(&self) -> Rat {
        self.segments.iter().map(|s| s.duration.clone()).sum()
    }

    /// Total duration of one pass through the cycle.
    pub fn cycle_duration(&self) -> Rat {
        self.cycle.iter().map(|s| s.duration.clone()).sum()
    }

    /// The state at time `t ≥ 0`.
    pub fn value_at(&self, t: &Rat) -> &State {
        assert!(!t.is_negative(), "trace times are non-negative");
        let mut rest = t.clone();
        for seg in &self.segments {
            if rest < seg.duration {
                return &seg.state;
            }
            rest -= &seg.duration;
        }
        let rest = rem_euclid(&rest, &self.cycle_duration());
        let mut rest = rest;
        for seg in &self.cycle {
            if rest < seg.duration {
                return &seg.state;
            }
            rest -= &seg.duration;
        }
        unreachable!("residue is smaller than the cycle duration")
    }

    /// The first instant at which some variable in `slots` takes a value
    /// different from its value at time 0 — or `Never` if they all stay
    /// constant forever.
    pub fn next_change(&self, slots: &[usize]) -> Result<NextChange, TraceError> {
        if slots.iter().any(|&i| i >= self.width()) {
            return Err(TraceError::SlotOutOfRange);
        }
        let first = self
            .segments
            .first()
            .map(|s| &s.state)
            .unwrap_or(&self.cycle[0].state);
        let mut t = zero();
        // One pass over the prefix and one full pass over the cycle visits
        // every distinct state; afterwards everything repeats.
        for seg in self.segments.iter().chain(&self.cycle) {
            if !seg.state.agrees_on(first, slots) {
                return Ok(NextChange::At(t));
            }
            t += &seg.duration;
        }
        Ok(NextChange::Never)
    }

    /// The trace `r ↦ τ(t + r)`.
    pub fn suffix(&self, t: &Rat) -> ContTrace {
        assert!(!t.is_negative(), "trace times are non-negative");
        self.apply_reparam(&Reparam::shift(t.clone()).expect("t ≥ 0"))
    }

    /// Pre-composition `τ ∘ f`: the falter/stutter action on traces. Change
    /// points of the result are `f`-preimages of the original change points;
    /// the cycle duration scales by the reciprocal of the final slope.
    pub fn apply_reparam(&self, f: &Reparam) -> ContTrace {
        let pre_dur = self.prefix_duration();
        let cyc_dur = self.cycle_duration();
        // Pick Y beyond f's knots such that f(Y) lies exactly on a cycle
        // boundary; beyond Y the composition is affine, so the image cycle
        // can start there.
        let at_last_knot = f.eval(f.last_knot_x());
        let base = at_last_knot.max(pre_dur.clone());
        let k = ceil_div(&(&base - &pre_dur), &cyc_dur);
        let fy = &pre_dur + &cyc_dur * Rat::from_integer(k);
        let segments = self
            .segment_spans_within(f.offset(), &fy)
            .into_iter()
            .map(|(state, lo, hi)| {
                let a = f.eval_inv(&lo).expect("span starts in range");
                let b = f.eval_inv(&hi).expect("span ends in range");
                Segment::new(state, b - a)
            })
            .collect();
        let s = f.final_slope();
        let cycle = self
            .cycle
            .iter()
            .map(|seg| Segment::new(seg.state.clone(), &seg.duration / s))
            .collect();
        ContTrace { segments, cycle }
    }

    /// The segments (state, start, end) covering the window `[lo, hi)`,
    /// clipped to it, unrolling the cycle as needed.
    fn segment_spans_within(&self, lo: &Rat, hi: &Rat) -> Vec<(State, Rat, Rat)> {
        let mut out = Vec::new();
        let mut push = |state: &State, a: Rat, b: Rat| {
            let a = a.max(lo.clone());
            let b = b.min(hi.clone());
            if a < b {
                out.push((state.clone(), a, b));
            }
        };
        let mut t = zero();
        for seg in &self.segments {
            let next = &t + &seg.duration;
            push(&seg.state, t, next.clone());
            t = next;
        }
        if &t < hi {
            let cyc = self.cycle_duration();
            let skip = if &t >= lo {
                num_bigint::BigInt::zero()
            } else {
                ((lo - &t) / &cyc).floor().to_integer()
            };
            let mut t = &t + &cyc * Rat::from_integer(skip);
            'outer: while &t < hi {
                for seg in &self.cycle {
                    let next = &t + &seg.duration;
                    push(&seg.state, t.clone(), next.clone());
                    t = next;
                    if &t >= hi {
                        break 'outer;
                    }
                }
            }
        }
        out
    }

    /// Uniform refinement: every segment (prefix and cycle) split into `m`
    /// equal-duration parts with the same state. Semantically the identity.
    pub fn subdivided(&self, m: usize) -> ContTrace {
        assert!(m >= 1);
        let split = |segs: &[Segment]| -> Vec<Segment> {
            segs.iter()
                .flat_map(|seg| {
                    let d = &seg.duration / crate::rat::rat_int(m as i64);
                    (0..m).map(move |_| Segment::new(seg.state.clone(), d.clone()))
                })
                .collect()
        };
        ContTrace { segments: split(&self.segments), cycle: split(&self.cycle) }
    }

    /// Extends every segment's state with one more slot, values drawn from
    /// a stream with the same lasso shape.
    pub fn zip_extend(
        &self,
        prefix_vals: &[Value],
        cycle_vals: &[Value],
    ) -> Result<ContTrace, TraceError> {
        if prefix_vals.len() != self.segments.len() || cycle_vals.len() != self.cycle.len() {
            return Err(TraceError::WidthMismatch);
        }
        let ext = |segs: &[Segment], vals: &[Value]| -> Vec<Segment> {
            segs.iter()
                .zip(vals)
                .map(|(seg, &v)| Segment::new(seg.state.extended(v), seg.duration.clone()))
                .collect()
        };
        Ok(ContTrace {
            segments: ext(&self.segments, prefix_vals),
            cycle: ext(&self.cycle, cycle_vals),
        })
    }

    /// The lasso of segment states, durations discarded.
    pub fn state_lasso(&self) -> DiscreteBehavior {
        DiscreteBehavior {
            prefix: self.segments.iter().map(|s| s.state.clone()).collect(),
            cycle: self.cycle.iter().map(|s| s.state.clone()).collect(),
        }
    }

    /// Stuttering (orbit) equivalence: two traces are related by some
    /// stutter iff their destuttered state sequences agree — durations are
    /// immaterial because any two positive schedules over the same sequence
    /// are linked by a piecewise-linear homeomorphism.
    pub fn stutter_equiv(&self, other: &ContTrace) -> Result<bool, TraceError> {
        if self.width() != other.width() {
            return Err(TraceError::WidthMismatch);
        }
        Ok(self.state_lasso().destutter() == other.state_lasso().destutter())
    }
}

/// Result of [`ContTrace::next_change`]: either the variables never change
/// (which the action semantics reads as `next = 0`), or the first change
/// happens at a positive instant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NextChange {
    Never,
    At(Rat),
}

impl NextChange {
    /// Collapses `Never` to 0, the convention the action semantics uses.
    pub fn as_rat(&self) -> Rat {
        match self {
            NextChange::Never => zero(),
            NextChange::At(r) => r.clone(),
        }
    }
}

/// Holds each discrete state for `step` time units: the canonical bridge
/// from discrete behaviours to continuous traces.
pub fn embed_discrete(rho: &DiscreteBehavior, step: &Rat) -> Result<ContTrace, TraceError> {
    if !step.is_positive() {
        return Err(TraceError::NonPositiveDuration);
    }
    Ok(ContTrace {
        segments: rho.prefix().iter().map(|s| Segment::new(s.clone(), step.clone())).collect(),
        cycle: rho.cycle().iter().map(|s| Segment::new(s.clone(), step.clone())).collect(),
    })
}
