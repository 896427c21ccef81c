//! Exact eventually-periodic subsets of the non-negative rational line.
//!
//! A [`TimeSet`] denotes a set of time points as a finite union of
//! half-open rational intervals (the *transient* part, below a threshold)
//! plus a periodic *pattern* repeating forever from that threshold on. The
//! class is closed under complement, union, intersection, the future-closure
//! modalities `box`/`diamond`, and preimages along piecewise-linear
//! reparametrisations of the time line — everything the continuous
//! evaluator needs — and it has decidable equality.
//!
//! Values are normalised to a canonical form (minimal period, minimal
//! threshold, fixed phase, merged intervals), so two values denote the same
//! set **iff** they are structurally equal; [`TimeSet::equals`] re-derives
//! the same answer by aligning both operands to a common threshold and
//! period and is kept as an independent cross-check.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_traits::{Signed, ToPrimitive, Zero};

use crate::rat::{ceil_div, one, parse_rat, rat_int, rat_lcm, rem_euclid, zero, Rat};
use crate::reparam::Reparam;

/// Half-open interval of time points: `[lo, hi)`, or `[lo, ∞)` when `hi`
/// is `None`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interval {
    pub lo: Rat,
    pub hi: Option<Rat>,
}

impl Interval {
    pub fn bounded(lo: Rat, hi: Rat) -> Self {
        Interval { lo, hi: Some(hi) }
    }

    pub fn unbounded(lo: Rat) -> Self {
        Interval { lo, hi: None }
    }
}

/// Finite half-open span; the internal currency of this module.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Span {
    lo: Rat,
    hi: Rat,
}

fn span(lo: Rat, hi: Rat) -> Span {
    Span { lo, hi }
}

/// Sorts, drops empties, and merges overlapping or adjacent spans.
fn merge_spans(mut spans: Vec<Span>) -> Vec<Span> {
    spans.retain(|s| s.lo < s.hi);
    spans.sort_by(|a, b| a.lo.cmp(&b.lo));
    let mut out: Vec<Span> = Vec::with_capacity(spans.len());
    for s in spans {
        match out.last_mut() {
            Some(last) if s.lo <= last.hi => {
                if s.hi > last.hi {
                    last.hi = s.hi;
                }
            }
            _ => out.push(s),
        }
    }
    out
}

fn union_spans(mut a: Vec<Span>, b: Vec<Span>) -> Vec<Span> {
    a.extend(b);
    merge_spans(a)
}

/// Intersection of two merged span lists (two-pointer sweep).
fn intersect_spans(a: &[Span], b: &[Span]) -> Vec<Span> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        let lo = a[i].lo.clone().max(b[j].lo.clone());
        let hi = a[i].hi.clone().min(b[j].hi.clone());
        if lo < hi {
            out.push(span(lo, hi));
        }
        if a[i].hi <= b[j].hi {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

/// Complement of a merged span list within the window `[lo, hi)`.
fn complement_spans(v: &[Span], lo: &Rat, hi: &Rat) -> Vec<Span> {
    let clipped = clip_spans(v, lo, hi);
    let mut out = Vec::new();
    let mut cur = lo.clone();
    for s in &clipped {
        if cur < s.lo {
            out.push(span(cur, s.lo.clone()));
        }
        cur = s.hi.clone();
    }
    if &cur < hi {
        out.push(span(cur, hi.clone()));
    }
    out
}

fn clip_spans(v: &[Span], lo: &Rat, hi: &Rat) -> Vec<Span> {
    let mut out = Vec::new();
    for s in v {
        let a = s.lo.clone().max(lo.clone());
        let b = s.hi.clone().min(hi.clone());
        if a < b {
            out.push(span(a, b));
        }
    }
    out
}

fn shift_spans(v: &[Span], delta: &Rat) -> Vec<Span> {
    v.iter().map(|s| span(&s.lo + delta, &s.hi + delta)).collect()
}

/// Scales every endpoint by `k > 0`.
fn scale_spans(v: &[Span], k: &Rat) -> Vec<Span> {
    v.iter().map(|s| span(&s.lo * k, &s.hi * k)).collect()
}

/// The set `{ (x − phi) mod p : x ∈ v }` for `v ⊆ [0, p)` and `phi ∈ [0, p)`:
/// a cyclic rotation of the pattern.
fn wrap_shift_spans(v: &[Span], phi: &Rat, p: &Rat) -> Vec<Span> {
    if phi.is_zero() {
        return v.to_vec();
    }
    let mut out = Vec::new();
    for s in v {
        let lo = &s.lo - phi;
        let hi = &s.hi - phi;
        if !lo.is_negative() {
            out.push(span(lo, hi));
        } else if hi <= zero() {
            out.push(span(lo + p, hi + p));
        } else {
            out.push(span(lo + p, p.clone()));
            out.push(span(zero(), hi));
        }
    }
    merge_spans(out)
}

/// Symmetric difference of two merged span lists within `[0, hi)`.
fn sym_diff_spans(a: &[Span], b: &[Span], hi: &Rat) -> Vec<Span> {
    let u = union_spans(a.to_vec(), b.to_vec());
    let i = intersect_spans(a, b);
    intersect_spans(&u, &complement_spans(&i, &zero(), hi))
}

/// Rejection reasons for ill-formed [`TimeSet`] descriptions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TimeSetError {
    NonPositivePeriod,
    NegativeEndpoint,
    /// An interval with `hi < lo`.
    UnorderedInterval,
    /// A transient interval reaching past the threshold, or unbounded.
    TransientBeyondThreshold,
    /// A pattern interval reaching past the period, or unbounded.
    PatternBeyondPeriod,
}

impl fmt::Display for TimeSetError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = match self {
            TimeSetError::NonPositivePeriod => "period must be positive",
            TimeSetError::NegativeEndpoint => "interval endpoints must be non-negative",
            TimeSetError::UnorderedInterval => "interval endpoints must satisfy lo ≤ hi",
            TimeSetError::TransientBeyondThreshold => {
                "transient intervals must lie within [0, threshold)"
            }
            TimeSetError::PatternBeyondPeriod => "pattern intervals must lie within [0, period)",
        };
        f.write_str(msg)
    }
}

/// An eventually-periodic set of non-negative rational time points, in
/// canonical form. See the module docs for the representation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TimeSet {
    threshold: Rat,
    transient: Vec<Span>,
    period: Rat,
    pattern: Vec<Span>,
}

impl TimeSet {
    /// The empty set.
    pub fn empty() -> Self {
        TimeSet { threshold: zero(), transient: vec![], period: one(), pattern: vec![] }
    }

    /// All of `[0, ∞)`.
    pub fn full() -> Self {
        TimeSet {
            threshold: zero(),
            transient: vec![],
            period: one(),
            pattern: vec![span(zero(), one())],
        }
    }

    /// General constructor: membership below `threshold` is given by the
    /// `transient` intervals, and at `threshold + k·period + u` (for `k ≥ 0`,
    /// `u ∈ [0, period)`) by the `pattern` intervals. The result is
    /// normalised to canonical form.
    pub fn new(
        threshold: Rat,
        transient: Vec<Interval>,
        period: Rat,
        pattern: Vec<Interval>,
    ) -> Result<Self, TimeSetError> {
        if !period.is_positive() {
            return Err(TimeSetError::NonPositivePeriod);
        }
        if threshold.is_negative() {
            return Err(TimeSetError::NegativeEndpoint);
        }
        let check = |ivs: &[Interval], end: &Rat, err: TimeSetError| -> Result<Vec<Span>, TimeSetError> {
            let mut spans = Vec::new();
            for iv in ivs {
                if iv.lo.is_negative() {
                    return Err(TimeSetError::NegativeEndpoint);
                }
                let hi = match &iv.hi {
                    None => return Err(err.clone()),
                    Some(h) => h.clone(),
                };
                if hi < iv.lo {
                    return Err(TimeSetError::UnorderedInterval);
                }
                if &hi > end {
                    return Err(err.clone());
                }
                spans.push(span(iv.lo.clone(), hi));
            }
            Ok(spans)
        };
        let transient = check(&transient, &threshold, TimeSetError::TransientBeyondThreshold)?;
        let pattern = check(&pattern, &period, TimeSetError::PatternBeyondPeriod)?;
        Ok(Self::normalized(threshold, transient, period, pattern))
    }

    /// Builds the union of plain intervals (bounded or unbounded).
    pub fn from_intervals(intervals: &[Interval]) -> Result<Self, TimeSetError> {
        let mut finite = Vec::new();
        let mut tail_lo: Option<Rat> = None;
        for iv in intervals {
            if iv.lo.is_negative() {
                return Err(TimeSetError::NegativeEndpoint);
            }
            match &iv.hi {
                Some(h) => {
                    if h < &iv.lo {
                        return Err(TimeSetError::UnorderedInterval);
                    }
                    finite.push(span(iv.lo.clone(), h.clone()));
                }
                None => {
                    tail_lo = Some(match tail_lo {
                        Some(t) => t.min(iv.lo.clone()),
                        None => iv.lo.clone(),
                    });
                }
            }
        }
        let mut threshold = finite.iter().map(|s| s.hi.clone()).fold(zero(), Rat::max);
        let pattern = match &tail_lo {
            Some(lo) => {
                threshold = threshold.max(lo.clone());
                vec![span(zero(), one())]
            }
            None => vec![],
        };
        if let Some(lo) = tail_lo {
            finite.push(span(lo, threshold.clone()));
        }
        let transient = clip_spans(&merge_spans(finite), &zero(), &threshold);
        Ok(Self::normalized(threshold, transient, one(), pattern))
    }

    /// A single interval.
    pub fn interval(lo: Rat, hi: Option<Rat>) -> Result<Self, TimeSetError> {
        Self::from_intervals(&[Interval { lo, hi }])
    }

    /// Builds the set of instants covered by flagged lasso segments: the
    /// prefix segments tile `[0, Σ prefix)` once, the cycle segments tile
    /// everything beyond with period `Σ cycle`. Used by the continuous
    /// evaluator, whose verdicts are constant on segments.
    pub(crate) fn from_flagged_segments(prefix: &[(bool, Rat)], cycle: &[(bool, Rat)]) -> Self {
        let mut transient = Vec::new();
        let mut t = zero();
        for (flag, dur) in prefix {
            let next = &t + dur;
            if *flag {
                transient.push(span(t.clone(), next.clone()));
            }
            t = next;
        }
        let threshold = t;
        let mut pattern = Vec::new();
        let mut u = zero();
        for (flag, dur) in cycle {
            let next = &u + dur;
            if *flag {
                pattern.push(span(u.clone(), next.clone()));
            }
            u = next;
        }
        let period = u;
        assert!(period.is_positive(), "cycle must have positive total duration");
        Self::normalized(threshold, merge_spans(transient), period, merge_spans(pattern))
    }

    /// Canonicalisation pipeline. `transient` must lie within
    /// `[0, threshold)` and `pattern` within `[0, period)`; both may be
    /// unmerged.
    fn normalized(threshold: Rat, transient: Vec<Span>, period: Rat, pattern: Vec<Span>) -> Self {
        let mut transient = merge_spans(transient);
        let mut pattern = merge_spans(pattern);
        let mut period = period;

        // Bounded set: the pattern never fires, so the threshold is the
        // supremum of the transient part and the period is irrelevant.
        if pattern.is_empty() {
            let t = transient.last().map(|s| s.hi.clone()).unwrap_or_else(zero);
            return TimeSet { threshold: t, transient, period: one(), pattern: vec![] };
        }

        // Eventually-full set: absorb transient intervals that touch the
        // unbounded tail, then pin period = 1.
        if pattern.len() == 1 && pattern[0].lo.is_zero() && pattern[0].hi == period {
            let mut a = threshold;
            while let Some(last) = transient.last() {
                if last.hi == a {
                    a = last.lo.clone();
                    transient.pop();
                } else {
                    break;
                }
            }
            return TimeSet {
                threshold: a,
                transient,
                period: one(),
                pattern: vec![span(zero(), one())],
            };
        }

        // Minimal period: try cutting the pattern into m equal chunks. Any
        // sub-period of the eventual set is period/m for some m ≤ the number
        // of pattern intervals, so this bounded search finds the minimum.
        let n = pattern.len();
        for m in (2..=n).rev() {
            let q = &period / rat_int(m as i64);
            let first = clip_spans(&pattern, &zero(), &q);
            let mut all_equal = true;
            for i in 1..m {
                let lo = &q * rat_int(i as i64);
                let hi = &q * rat_int((i + 1) as i64);
                let chunk = shift_spans(&clip_spans(&pattern, &lo, &hi), &-lo);
                if chunk != first {
                    all_equal = false;
                    break;
                }
            }
            if all_equal {
                pattern = first;
                period = q;
                break;
            }
        }

        // Minimal threshold: extend the pattern backwards (anchored at the
        // current threshold) and find the last time the transient part
        // disagrees with that extension.
        let mut backfill: Vec<Span> = Vec::new();
        if threshold.is_positive() {
            let copies = ceil_div(&threshold, &period)
                .to_i64()
                .expect("threshold/period ratio fits in i64");
            for i in 1..=copies {
                let at = &threshold - &period * rat_int(i);
                backfill.extend(shift_spans(&pattern, &at));
            }
            backfill = clip_spans(&merge_spans(backfill), &zero(), &threshold);
        }
        let disagreement = sym_diff_spans(&transient, &backfill, &threshold);
        let t_min = disagreement.last().map(|s| s.hi.clone()).unwrap_or_else(zero);

        let phi = rem_euclid(&(&t_min - &threshold), &period);
        let pattern = wrap_shift_spans(&pattern, &phi, &period);
        let transient = clip_spans(&transient, &zero(), &t_min);
        TimeSet { threshold: t_min, transient, period, pattern }
    }

    pub fn threshold(&self) -> &Rat {
        &self.threshold
    }

    pub fn period(&self) -> &Rat {
        &self.period
    }

    pub fn transient_intervals(&self) -> Vec<Interval> {
        self.transient.iter().map(|s| Interval::bounded(s.lo.clone(), s.hi.clone())).collect()
    }

    pub fn pattern_intervals(&self) -> Vec<Interval> {
        self.pattern.iter().map(|s| Interval::bounded(s.lo.clone(), s.hi.clone())).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.transient.is_empty() && self.pattern.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self == &Self::full()
    }

    /// The least element of the set, if any.
    pub fn min_element(&self) -> Option<Rat> {
        if let Some(first) = self.transient.first() {
            return Some(first.lo.clone());
        }
        self.pattern.first().map(|s| &self.threshold + &s.lo)
    }

    /// Re-expresses the set over a higher threshold and a period that is an
    /// integer multiple of the canonical one. Returns the transient spans in
    /// `[0, t_new)` and the rotated pattern spans in `[0, p_new)`.
    fn aligned_to(&self, t_new: &Rat, p_new: &Rat) -> (Vec<Span>, Vec<Span>) {
        debug_assert!(t_new >= &self.threshold);
        let k = (p_new / &self.period)
            .to_integer()
            .to_i64()
            .expect("period ratio fits in i64");
        debug_assert!((p_new / &self.period).is_integer() && k >= 1);

        let mut pattern = Vec::with_capacity(self.pattern.len() * k as usize);
        for i in 0..k {
            pattern.extend(shift_spans(&self.pattern, &(&self.period * rat_int(i))));
        }

        let mut transient = self.transient.clone();
        if t_new > &self.threshold && !self.pattern.is_empty() {
            let copies = ceil_div(&(t_new - &self.threshold), &self.period)
                .to_i64()
                .expect("alignment span fits in i64");
            let mut fill = Vec::new();
            for i in 0..copies {
                let at = &self.threshold + &self.period * rat_int(i);
                fill.extend(shift_spans(&self.pattern, &at));
            }
            transient.extend(clip_spans(&merge_spans(fill), &self.threshold, t_new));
            transient = merge_spans(transient);
        }

        let phi = rem_euclid(&(t_new - &self.threshold), p_new);
        (transient, wrap_shift_spans(&merge_spans(pattern), &phi, p_new))
    }

    /// Pointwise union.
    pub fn union(&self, other: &TimeSet) -> TimeSet {
        let t = self.threshold.clone().max(other.threshold.clone());
        let p = rat_lcm(&self.period, &other.period);
        let (tr1, p1) = self.aligned_to(&t, &p);
        let (tr2, p2) = other.aligned_to(&t, &p);
        Self::normalized(t, union_spans(tr1, tr2), p, union_spans(p1, p2))
    }

    /// Pointwise intersection.
    pub fn intersect(&self, other: &TimeSet) -> TimeSet {
        let t = self.threshold.clone().max(other.threshold.clone());
        let p = rat_lcm(&self.period, &other.period);
        let (tr1, p1) = self.aligned_to(&t, &p);
        let (tr2, p2) = other.aligned_to(&t, &p);
        Self::normalized(t, intersect_spans(&tr1, &tr2), p, intersect_spans(&p1, &p2))
    }

    /// Pointwise complement within `[0, ∞)`.
    pub fn complement(&self) -> TimeSet {
        Self::normalized(
            self.threshold.clone(),
            complement_spans(&self.transient, &zero(), &self.threshold),
            self.period.clone(),
            complement_spans(&self.pattern, &zero(), &self.period),
        )
    }

    /// Future closure: `{ r | [r, ∞) ⊆ self }`. Always `∅` or one
    /// unbounded interval.
    pub fn box_(&self) -> TimeSet {
        // r is in the box iff no point of the complement lies at or above r,
        // i.e. iff r strictly exceeds the supremum of the complement.
        let c = self.complement();
        if c.is_empty() {
            return TimeSet::full();
        }
        if !c.pattern.is_empty() {
            // The complement recurs forever; no tail is fully contained.
            return TimeSet::empty();
        }
        // Bounded complement in canonical form: threshold = its supremum.
        Self::normalized(c.threshold.clone(), vec![], one(), vec![span(zero(), one())])
    }

    /// Eventuality: `¬ box ¬`, i.e. `{ r | some r' ≥ r lies in self }`.
    pub fn diamond(&self) -> TimeSet {
        self.complement().box_().complement()
    }

    /// Preimage of the set along a reparametrisation:
    /// `{ t ≥ 0 | f(t) ∈ self }`.
    pub fn preimage(&self, f: &Reparam) -> TimeSet {
        // Beyond some input Y, f is affine with slope s and f(Y) sits at or
        // above our threshold; there the preimage is periodic with period
        // period/s. Below Y, pull back the explicit spans of the window
        // [offset, f(Y)) through the inverse.
        let at_last_knot = f.eval(f.last_knot_x());
        let target = self.threshold.clone().max(at_last_knot);
        let y = f
            .eval_inv(&target)
            .expect("target ≥ f(last knot) ≥ offset, so it is in range");
        let s = f.final_slope();

        let pattern = if self.pattern.is_empty() {
            vec![]
        } else {
            let delta = rem_euclid(&(&target - &self.threshold), &self.period);
            scale_spans(&wrap_shift_spans(&self.pattern, &delta, &self.period), &(one() / s))
        };
        let period = &self.period / s;

        let window = self.spans_within(f.offset(), &target);
        let transient: Vec<Span> = window
            .iter()
            .map(|sp| {
                span(
                    f.eval_inv(&sp.lo).expect("window starts at the offset"),
                    f.eval_inv(&sp.hi).expect("window ends at f(Y)"),
                )
            })
            .collect();
        Self::normalized(y, merge_spans(transient), period, merge_spans(pattern))
    }

    /// Explicit membership spans within the finite window `[lo, hi)`.
    fn spans_within(&self, lo: &Rat, hi: &Rat) -> Vec<Span> {
        let mut out = clip_spans(&self.transient, lo, hi);
        if !self.pattern.is_empty() && hi > &self.threshold {
            let copies = ceil_div(&(hi - &self.threshold), &self.period)
                .to_i64()
                .expect("window length fits in i64");
            for i in 0..copies {
                let at = &self.threshold + &self.period * rat_int(i);
                out.extend(clip_spans(&shift_spans(&self.pattern, &at), lo, hi));
            }
        }
        merge_spans(out)
    }

    /// Membership test. `t` must be non-negative.
    pub fn contains(&self, t: &Rat) -> bool {
        assert!(!t.is_negative(), "time points are non-negative");
        if t < &self.threshold {
            return self.transient.iter().any(|s| &s.lo <= t && t < &s.hi);
        }
        if self.pattern.is_empty() {
            return false;
        }
        let u = rem_euclid(&(t - &self.threshold), &self.period);
        self.pattern.iter().any(|s| s.lo <= u && u < s.hi)
    }

    /// Set equality decided by re-aligning both operands to the common
    /// threshold `max(Ta, Tb)` and period `lcm(pa, pb)` and comparing
    /// interval lists. Canonicalisation makes this agree with `==`; both are
    /// kept so the agreement can be tested.
    pub fn equals(&self, other: &TimeSet) -> bool {
        let t = self.threshold.clone().max(other.threshold.clone());
        let p = rat_lcm(&self.period, &other.period);
        let (tr1, p1) = self.aligned_to(&t, &p);
        let (tr2, p2) = other.aligned_to(&t, &p);
        tr1 == tr2 && p1 == p2
    }

    /// Renders the set as `[lo,hi) ∪ … ⟨period=p from T: pattern⟩`, with `∅`
    /// standing for an empty pattern. [`TimeSet::parse`] reads this back.
    pub fn render(&self) -> String {
        let list = |spans: &[Span]| -> String {
            spans
                .iter()
                .map(|s| format!("[{},{})", s.lo, s.hi))
                .collect::<Vec<_>>()
                .join(" ∪ ")
        };
        let pattern = if self.pattern.is_empty() { "∅".to_string() } else { list(&self.pattern) };
        let head = if self.transient.is_empty() { String::new() } else { list(&self.transient) + " " };
        format!("{head}⟨period={} from {}: {pattern}⟩", self.period, self.threshold)
    }

    /// Parses the [`TimeSet::render`] format.
    pub fn parse(input: &str) -> Result<TimeSet, TimeSetParseError> {
        Parser { rest: input.trim(), offset: 0, input }.run()
    }
}

/// Error from [`TimeSet::parse`], with a byte offset into the input.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TimeSetParseError {
    pub offset: usize,
    pub message: String,
}

impl fmt::Display for TimeSetParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at byte {}: {}", self.offset, self.message)
    }
}

struct Parser<'a> {
    rest: &'a str,
    offset: usize,
    input: &'a str,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, message: &str) -> Result<T, TimeSetParseError> {
        Err(TimeSetParseError { offset: self.offset, message: message.to_string() })
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest.trim_start();
        self.offset += self.rest.len() - trimmed.len();
        self.rest = trimmed;
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.skip_ws();
        if let Some(r) = self.rest.strip_prefix(tok) {
            self.offset += tok.len();
            self.rest = r;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &str) -> Result<(), TimeSetParseError> {
        if self.eat(tok) {
            Ok(())
        } else {
            self.err(&format!("expected `{tok}`"))
        }
    }

    fn rat(&mut self) -> Result<Rat, TimeSetParseError> {
        self.skip_ws();
        let end = self
            .rest
            .find(|c: char| !(c.is_ascii_digit() || c == '/' || c == '-'))
            .unwrap_or(self.rest.len());
        let (tok, rest) = self.rest.split_at(end);
        match parse_rat(tok) {
            Ok(r) => {
                self.offset += tok.len();
                self.rest = rest;
                Ok(r)
            }
            Err(_) => self.err("expected a rational number"),
        }
    }

    fn interval_list(&mut self) -> Result<Vec<Interval>, TimeSetParseError> {
        let mut out = Vec::new();
        loop {
            self.expect("[")?;
            let lo = self.rat()?;
            self.expect(",")?;
            let hi = self.rat()?;
            self.expect(")")?;
            out.push(Interval::bounded(lo, hi));
            if !self.eat("∪") {
                return Ok(out);
            }
            self.skip_ws();
            if !self.rest.starts_with('[') {
                return self.err("expected an interval after `∪`");
            }
        }
    }

    fn run(mut self) -> Result<TimeSet, TimeSetParseError> {
        self.skip_ws();
        let transient = if self.rest.starts_with('[') { self.interval_list()? } else { Vec::new() };
        self.expect("⟨")?;
        self.expect("period=")?;
        let period = self.rat()?;
        self.expect("from")?;
        let threshold = self.rat()?;
        self.expect(":")?;
        self.skip_ws();
        let pattern = if self.eat("∅") { Vec::new() } else { self.interval_list()? };
        self.expect("⟩")?;
        self.skip_ws();
        if !self.rest.is_empty() {
            return self.err("trailing input after time set");
        }
        let _ = self.input;
        TimeSet::new(threshold, transient, period, pattern)
            .map_err(|e| TimeSetParseError { offset: 0, message: e.to_string() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;
    use proptest::prelude::*;

    fn ts(threshold: Rat, transient: &[(Rat, Rat)], period: Rat, pattern: &[(Rat, Rat)]) -> TimeSet {
        TimeSet::new(
            threshold,
            transient.iter().map(|(a, b)| Interval::bounded(a.clone(), b.clone())).collect(),
            period,
            pattern.iter().map(|(a, b)| Interval::bounded(a.clone(), b.clone())).collect(),
        )
        .unwrap()
    }

    fn iv(lo: i64, hi: i64) -> TimeSet {
        TimeSet::interval(rat_int(lo), Some(rat_int(hi))).unwrap()
    }

    /// Sample points for the membership oracle: rationals with denominator
    /// ≤ 8 up to t = 10.
    fn grid() -> Vec<Rat> {
        let mut out = Vec::new();
        for d in 1..=8i64 {
            for k in 0..=(10 * d) {
                out.push(rat(k, d));
            }
        }
        out.sort();
        out.dedup();
        out
    }

    fn assert_same_membership(result: &TimeSet, expected: impl Fn(&Rat) -> bool) {
        for t in grid() {
            assert_eq!(result.contains(&t), expected(&t), "membership differs at t = {t}");
        }
    }

    #[test]
    fn constructor_validation() {
        assert_eq!(
            TimeSet::new(zero(), vec![], zero(), vec![]),
            Err(TimeSetError::NonPositivePeriod)
        );
        assert_eq!(
            TimeSet::new(
                one(),
                vec![Interval::bounded(rat_int(2), rat_int(1))],
                one(),
                vec![]
            ),
            Err(TimeSetError::UnorderedInterval)
        );
        assert_eq!(
            TimeSet::new(one(), vec![Interval::bounded(zero(), rat_int(2))], one(), vec![]),
            Err(TimeSetError::TransientBeyondThreshold)
        );
        assert_eq!(
            TimeSet::new(zero(), vec![], one(), vec![Interval::bounded(zero(), rat_int(2))]),
            Err(TimeSetError::PatternBeyondPeriod)
        );
        assert_eq!(
            TimeSet::new(zero(), vec![], one(), vec![Interval::unbounded(zero())]),
            Err(TimeSetError::PatternBeyondPeriod)
        );
    }

    #[test]
    fn union_examples() {
        let s = ts(rat_int(1), &[(zero(), one())], rat_int(2), &[(zero(), one())]);
        assert_eq!(TimeSet::empty().union(&s), s);
        assert_eq!(
            iv(0, 1).union(&TimeSet::interval(rat_int(1), None).unwrap()),
            TimeSet::full()
        );
        // Two interleaved half-grids cover everything.
        let a = ts(rat_int(1), &[(zero(), one())], one(), &[(zero(), rat(1, 2))]);
        let b = ts(rat_int(1), &[(rat(1, 2), one())], one(), &[(rat(1, 2), one())]);
        assert_eq!(a.union(&b), TimeSet::full());
        assert_same_membership(&a.union(&b), |t| a.contains(t) || b.contains(t));
    }

    #[test]
    fn intersect_examples() {
        let s = ts(zero(), &[], rat_int(3), &[(zero(), one())]);
        assert_eq!(s.intersect(&TimeSet::full()), s);
        assert_eq!(iv(0, 2).intersect(&TimeSet::interval(rat_int(1), None).unwrap()), iv(1, 2));
        let a = ts(zero(), &[], rat_int(2), &[(zero(), one())]);
        let b = ts(zero(), &[], rat_int(3), &[(zero(), rat(3, 2))]);
        let both = a.intersect(&b);
        assert_eq!(both.period(), &rat_int(6));
        assert_same_membership(&both, |t| a.contains(t) && b.contains(t));
    }

    #[test]
    fn complement_examples() {
        assert_eq!(TimeSet::empty().complement(), TimeSet::full());
        assert_eq!(TimeSet::full().complement(), TimeSet::empty());
        let c = iv(1, 2).complement();
        assert!(c.contains(&rat(1, 2)) && !c.contains(&rat(3, 2)) && c.contains(&rat_int(2)));
        assert_eq!(
            c,
            TimeSet::from_intervals(&[
                Interval::bounded(zero(), one()),
                Interval::unbounded(rat_int(2)),
            ])
            .unwrap()
        );
    }

    #[test]
    fn box_and_diamond_examples() {
        assert_eq!(TimeSet::full().box_(), TimeSet::full());
        assert_eq!(iv(0, 1).box_(), TimeSet::empty());
        let s = TimeSet::from_intervals(&[
            Interval::bounded(zero(), one()),
            Interval::unbounded(rat_int(2)),
        ])
        .unwrap();
        assert_eq!(s.box_(), TimeSet::interval(rat_int(2), None).unwrap());

        assert_eq!(TimeSet::empty().diamond(), TimeSet::empty());
        assert_eq!(iv(1, 2).diamond(), iv(0, 2));
        let halves = ts(zero(), &[], one(), &[(zero(), rat(1, 2))]);
        assert_eq!(halves.diamond(), TimeSet::full());
    }

    #[test]
    fn preimage_examples() {
        let s = ts(rat_int(1), &[(rat(1, 2), one())], rat(3, 2), &[(zero(), one())]);
        assert_eq!(s.preimage(&Reparam::identity()), s);
        assert_eq!(
            TimeSet::interval(one(), None).unwrap().preimage(&Reparam::shift(one()).unwrap()),
            TimeSet::full()
        );
        let double = Reparam::new(zero(), vec![(zero(), zero())], rat_int(2)).unwrap();
        assert_eq!(iv(2, 4).preimage(&double), iv(1, 2));
    }

    #[test]
    fn contains_examples() {
        assert!(iv(0, 1).contains(&zero()));
        assert!(!iv(0, 1).contains(&one()));
        let halves = ts(zero(), &[], one(), &[(zero(), rat(1, 2))]);
        assert!(!halves.contains(&rat(7, 2)));
        assert!(halves.contains(&rat_int(3)));
    }

    #[test]
    #[should_panic(expected = "non-negative")]
    fn contains_rejects_negative_time() {
        let _ = TimeSet::full().contains(&rat_int(-1));
    }

    #[test]
    fn equals_examples() {
        let s = iv(0, 2);
        assert!(s.equals(&s));
        assert_eq!(
            TimeSet::from_intervals(&[
                Interval::bounded(zero(), one()),
                Interval::bounded(one(), rat_int(2)),
            ])
            .unwrap(),
            s
        );
        let p2 = ts(zero(), &[], rat_int(2), &[(zero(), one())]);
        let p4 = ts(zero(), &[], rat_int(4), &[(zero(), one()), (rat_int(2), rat_int(3))]);
        assert!(p2.equals(&p4));
        assert_eq!(p2, p4); // canonicalisation reduced the period
        assert_eq!(p4.period(), &rat_int(2));
    }

    #[test]
    fn canonical_forms() {
        // Bounded: threshold shrinks to the supremum.
        let b = ts(rat_int(5), &[(zero(), one())], rat_int(3), &[]);
        assert_eq!(b.threshold(), &one());
        assert_eq!(b.period(), &one());
        // Eventually full: transient absorbed into the tail.
        let f = ts(rat_int(2), &[(zero(), one()), (one(), rat_int(2))], one(), &[(zero(), one())]);
        assert_eq!(f, TimeSet::full());
        // Threshold minimisation: a transient that matches the pattern folds in.
        let s = ts(
            rat_int(2),
            &[(zero(), rat(1, 2)), (one(), rat(3, 2))],
            one(),
            &[(zero(), rat(1, 2))],
        );
        assert_eq!(s.threshold(), &zero());
        assert!(s.transient_intervals().is_empty());
        // ... and one that only partially matches folds down to the last gap.
        let partial = ts(rat_int(2), &[(zero(), rat(1, 2))], one(), &[(zero(), rat(1, 2))]);
        assert_eq!(partial.threshold(), &rat(3, 2));
        assert_eq!(partial.pattern_intervals(), vec![Interval::bounded(rat(1, 2), one())]);
        // Phase rotation keeps membership intact while the threshold drops
        // all the way to zero (the set is periodic from the start).
        let r = ts(rat_int(1), &[(rat(1, 2), one())], one(), &[(rat(1, 2), one())]);
        assert_eq!(r.threshold(), &zero());
        assert!(r.transient_intervals().is_empty());
        assert_eq!(r.pattern_intervals(), vec![Interval::bounded(rat(1, 2), one())]);
        assert_same_membership(&r, |t| {
            let u = rem_euclid(t, &one());
            u >= rat(1, 2)
        });
    }

    #[test]
    fn render_and_parse_round_trip() {
        let samples = [
            TimeSet::empty(),
            TimeSet::full(),
            iv(0, 1),
            ts(rat_int(2), &[(zero(), one()), (rat(3, 2), rat_int(2))], one(), &[(zero(), rat(1, 2))]),
            ts(zero(), &[], rat(3, 2), &[(rat(1, 3), one())]),
        ];
        for s in &samples {
            let text = s.render();
            let back = TimeSet::parse(&text).unwrap_or_else(|e| panic!("parse {text}: {e}"));
            assert_eq!(&back, s, "round trip through {text}");
        }
        assert_eq!(
            ts(rat_int(2), &[(zero(), one()), (rat(3, 2), rat_int(2))], one(), &[(zero(), rat(1, 2))])
                .render(),
            "[0,1) ∪ [3/2,2) ⟨period=1 from 2: [0,1/2)⟩"
        );
        assert_eq!(TimeSet::empty().render(), "⟨period=1 from 0: ∅⟩");
        assert!(TimeSet::parse("[0,1)").is_err());
        assert!(TimeSet::parse("⟨period=0 from 0: ∅⟩").is_err());
        assert!(TimeSet::parse("⟨period=1 from 0: ∅⟩ x").is_err());
    }

    // --- randomized properties ---

    fn arb_rat(max: i64) -> impl Strategy<Value = Rat> {
        (0..=max, prop::sample::select(vec![1i64, 2, 3, 4, 8])).prop_map(|(n, d)| rat(n, d))
    }

    fn arb_spans(end_num: i64) -> impl Strategy<Value = Vec<(Rat, Rat)>> {
        prop::collection::vec((arb_rat(end_num), arb_rat(end_num)), 0..3).prop_map(|pairs| {
            pairs
                .into_iter()
                .filter(|(a, b)| a < b)
                .collect()
        })
    }

    prop_compose! {
        fn arb_timeset()(
            threshold in arb_rat(6),
            period in (1..=4i64, prop::sample::select(vec![1i64, 2, 3])).prop_map(|(n, d)| rat(n, d)),
            raw_tr in arb_spans(6),
            raw_pat in arb_spans(4),
        ) -> TimeSet {
            let clip = |v: Vec<(Rat, Rat)>, end: &Rat| -> Vec<Interval> {
                v.into_iter()
                    .map(|(a, b)| (a.min(end.clone()), b.min(end.clone())))
                    .filter(|(a, b)| a < b)
                    .map(|(a, b)| Interval::bounded(a, b))
                    .collect()
            };
            let tr = clip(raw_tr, &threshold);
            let pat = clip(raw_pat, &period);
            TimeSet::new(threshold, tr, period, pat).unwrap()
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn boolean_ops_match_pointwise(a in arb_timeset(), b in arb_timeset()) {
            let u = a.union(&b);
            let i = a.intersect(&b);
            let c = a.complement();
            for t in grid() {
                prop_assert_eq!(u.contains(&t), a.contains(&t) || b.contains(&t));
                prop_assert_eq!(i.contains(&t), a.contains(&t) && b.contains(&t));
                prop_assert_eq!(c.contains(&t), !a.contains(&t));
            }
        }

        #[test]
        fn double_complement_and_de_morgan(a in arb_timeset(), b in arb_timeset()) {
            prop_assert_eq!(a.complement().complement(), a.clone());
            prop_assert_eq!(
                a.union(&b).complement(),
                a.complement().intersect(&b.complement())
            );
        }

        #[test]
        fn equality_is_canonical(a in arb_timeset(), b in arb_timeset()) {
            prop_assert!(a.equals(&a));
            prop_assert_eq!(a.equals(&b), a == b);
        }

        #[test]
        fn box_shape_and_s4(a in arb_timeset(), b in arb_timeset()) {
            let ba = a.box_();
            // box(S) ⊆ S, box idempotent, box distributes over ∩.
            prop_assert_eq!(ba.intersect(&a), ba.clone());
            prop_assert_eq!(ba.box_(), ba.clone());
            prop_assert_eq!(
                a.intersect(&b).box_(),
                a.box_().intersect(&b.box_())
            );
            // Shape: ∅ or one unbounded interval.
            let unbounded_tail = ba.transient_intervals().is_empty()
                && ba.pattern_intervals() == TimeSet::full().pattern_intervals();
            prop_assert!(ba.is_empty() || unbounded_tail, "box shape: {}", ba.render());
        }

        #[test]
        fn normalization_is_idempotent(a in arb_timeset()) {
            let again = TimeSet::new(
                a.threshold().clone(),
                a.transient_intervals(),
                a.period().clone(),
                a.pattern_intervals(),
            ).unwrap();
            prop_assert_eq!(again, a);
        }

        #[test]
        fn render_parse_round_trip_random(a in arb_timeset()) {
            prop_assert_eq!(TimeSet::parse(&a.render()).unwrap(), a);
        }
    }

    fn arb_reparam(allow_offset: bool) -> impl Strategy<Value = Reparam> {
        let coords = || {
            prop::collection::btree_set(
                arb_rat(5).prop_filter("positive", |r| r.is_positive()),
                0..3,
            )
        };
        let offsets = if allow_offset {
            prop::sample::select(vec![rat_int(0), rat(1, 2), rat_int(2)]).boxed()
        } else {
            Just(rat_int(0)).boxed()
        };
        (coords(), coords(), prop::sample::select(vec![rat(1, 3), rat(1, 2), rat_int(1), rat_int(2), rat_int(3)]), offsets)
            .prop_map(|(xs, ys, slope, offset)| {
                let mut knots = vec![(zero(), zero())];
                knots.extend(xs.into_iter().zip(ys));
                Reparam::new(offset, knots, slope).unwrap()
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn preimage_matches_pointwise(a in arb_timeset(), f in arb_reparam(true)) {
            let p = a.preimage(&f);
            for t in grid() {
                prop_assert_eq!(p.contains(&t), a.contains(&f.eval(&t)), "at t = {}", t);
            }
        }

        #[test]
        fn preimage_is_boolean_homomorphism(
            a in arb_timeset(),
            b in arb_timeset(),
            f in arb_reparam(true),
        ) {
            prop_assert_eq!(a.union(&b).preimage(&f), a.preimage(&f).union(&b.preimage(&f)));
            prop_assert_eq!(
                a.intersect(&b).preimage(&f),
                a.preimage(&f).intersect(&b.preimage(&f))
            );
            prop_assert_eq!(a.complement().preimage(&f), a.preimage(&f).complement());
        }

        #[test]
        fn preimage_is_contravariant(
            a in arb_timeset(),
            f in arb_reparam(true),
            g in arb_reparam(true),
        ) {
            prop_assert_eq!(a.preimage(&f.compose(&g)), a.preimage(&f).preimage(&g));
        }

        #[test]
        fn box_commutes_with_stutter_preimage(a in arb_timeset(), s in arb_reparam(false)) {
            prop_assert_eq!(a.box_().preimage(&s), a.preimage(&s).box_());
        }
    }
}
