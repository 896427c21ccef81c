//! Piecewise-linear reparametrisations of the non-negative time line.
//!
//! A [`Reparam`] is a strictly increasing, continuous, piecewise-linear map
//! `f : [0,∞) → [offset, ∞)` given by a non-negative starting offset, a
//! finite list of knots for the part that starts at the origin, and a final
//! slope that extends the last segment forever.
//!
//! Two families matter:
//!
//! * **stutters** — `offset = 0`, so `f` is a homeomorphism of `[0,∞)`
//!   fixing the origin; these form a group under composition;
//! * **falters** — arbitrary `offset ≥ 0`, i.e. a stutter followed by a
//!   forward shift; these only form a monoid (mass to the left of the
//!   offset is unreachable, so there is no inverse).
//!
//! Values are kept in a canonical form (no collinear interior knots, no
//! trailing knot collinear with the final slope), so structural equality
//! coincides with pointwise equality of the maps.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_traits::Signed;

use crate::rat::{zero, Rat};

/// A strictly increasing piecewise-linear map `t ↦ offset + pl(t)` where
/// `pl` interpolates `knots` (always starting at `(0,0)`) and continues
/// with slope `final_slope` after the last knot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reparam {
    offset: Rat,
    knots: Vec<(Rat, Rat)>,
    final_slope: Rat,
}

/// Rejection reasons for ill-formed reparametrisation descriptions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ReparamError {
    /// The offset must be ≥ 0.
    NegativeOffset,
    /// The knot list must start with `(0, 0)`.
    MissingOrigin,
    /// Knot coordinates must be strictly increasing in both components.
    NonMonotoneKnots,
    /// The final slope must be strictly positive.
    NonPositiveSlope,
}

impl fmt::Display for ReparamError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = match self {
            ReparamError::NegativeOffset => "offset must be non-negative",
            ReparamError::MissingOrigin => "knot list must start at (0,0)",
            ReparamError::NonMonotoneKnots => "knots must be strictly increasing",
            ReparamError::NonPositiveSlope => "final slope must be positive",
        };
        f.write_str(msg)
    }
}

impl Reparam {
    /// Builds and canonicalises a reparametrisation. `knots` must begin with
    /// `(0,0)` and be strictly increasing in both coordinates; `final_slope`
    /// must be positive; `offset` non-negative.
    pub fn new(offset: Rat, knots: Vec<(Rat, Rat)>, final_slope: Rat) -> Result<Self, ReparamError> {
        if offset.is_negative() {
            return Err(ReparamError::NegativeOffset);
        }
        if !final_slope.is_positive() {
            return Err(ReparamError::NonPositiveSlope);
        }
        match knots.first() {
            Some((x, y)) if x == &zero() && y == &zero() => {}
            _ => return Err(ReparamError::MissingOrigin),
        }
        for w in knots.windows(2) {
            if w[1].0 <= w[0].0 || w[1].1 <= w[0].1 {
                return Err(ReparamError::NonMonotoneKnots);
            }
        }
        Ok(Self { offset, knots, final_slope }.canonicalised())
    }

    /// The identity map.
    pub fn identity() -> Self {
        Self { offset: zero(), knots: vec![(zero(), zero())], final_slope: crate::rat::one() }
    }

    /// The falter `t ↦ t + delta` (a pure forward shift). `delta` must be ≥ 0.
    pub fn shift(delta: Rat) -> Result<Self, ReparamError> {
        Self::new(delta, vec![(zero(), zero())], crate::rat::one())
    }

    /// True when this map fixes the origin, i.e. is a stutter.
    pub fn is_stutter(&self) -> bool {
        self.offset == zero()
    }

    pub fn offset(&self) -> &Rat {
        &self.offset
    }

    pub fn knots(&self) -> &[(Rat, Rat)] {
        &self.knots
    }

    pub fn final_slope(&self) -> &Rat {
        &self.final_slope
    }

    /// The largest input at which the slope can still change.
    pub fn last_knot_x(&self) -> &Rat {
        &self.knots.last().expect("knots are never empty").0
    }

    fn canonicalised(mut self) -> Self {
        let mut kept: Vec<(Rat, Rat)> = Vec::with_capacity(self.knots.len());
        for k in self.knots.drain(..) {
            while kept.len() >= 2 {
                let a = &kept[kept.len() - 2];
                let b = &kept[kept.len() - 1];
                // b is redundant iff a→b and b→k have equal slopes.
                let lhs = (&b.1 - &a.1) * (&k.0 - &b.0);
                let rhs = (&k.1 - &b.1) * (&b.0 - &a.0);
                if lhs == rhs {
                    kept.pop();
                } else {
                    break;
                }
            }
            kept.push(k);
        }
        // Drop trailing knots whose incoming slope already equals the final
        // slope; the ray extends them.
        while kept.len() >= 2 {
            let a = &kept[kept.len() - 2];
            let b = &kept[kept.len() - 1];
            if (&b.1 - &a.1) == &self.final_slope * (&b.0 - &a.0) {
                kept.pop();
            } else {
                break;
            }
        }
        self.knots = kept;
        self
    }

    /// Evaluates the map at `t ≥ 0`.
    pub fn eval(&self, t: &Rat) -> Rat {
        assert!(!t.is_negative(), "reparametrisations are defined on [0,∞)");
        &self.offset + self.eval_pl(t)
    }

    fn eval_pl(&self, t: &Rat) -> Rat {
        let i = match self.knots.iter().rposition(|(x, _)| x <= t) {
            Some(i) => i,
            None => unreachable!("first knot is (0,0) and t ≥ 0"),
        };
        let (x0, y0) = &self.knots[i];
        let slope = if i + 1 < self.knots.len() {
            let (x1, y1) = &self.knots[i + 1];
            (y1 - y0) / (x1 - x0)
        } else {
            self.final_slope.clone()
        };
        y0 + slope * (t - x0)
    }

    /// Inverts the map: the unique `t ≥ 0` with `f(t) = y`, or `None` when
    /// `y` lies below the offset (outside the range).
    pub fn eval_inv(&self, y: &Rat) -> Option<Rat> {
        let v = y - &self.offset; // target value for the stutter part
        if v.is_negative() {
            return None;
        }
        let i = self.knots.iter().rposition(|(_, ky)| ky <= &v).expect("pl starts at 0");
        let (x0, y0) = &self.knots[i];
        let slope = if i + 1 < self.knots.len() {
            let (x1, y1) = &self.knots[i + 1];
            (y1 - y0) / (x1 - x0)
        } else {
            self.final_slope.clone()
        };
        Some(x0 + (&v - y0) / slope)
    }

    /// Composition `self ∘ other`: the map `t ↦ self(other(t))`.
    ///
    /// Stutters are closed under this, falters too; composing a falter after
    /// a stutter (or vice versa) is the general case.
    pub fn compose(&self, other: &Reparam) -> Reparam {
        let offset = self.eval(&other.offset);
        // Slope can change where `other` has a knot, or where `other` passes
        // through an input at which `self` has a knot.
        let mut xs: Vec<Rat> = other.knots.iter().map(|(x, _)| x.clone()).collect();
        for (fx, _) in &self.knots {
            if let Some(t) = other.eval_inv(fx) {
                xs.push(t);
            }
        }
        xs.sort();
        xs.dedup();
        let knots: Vec<(Rat, Rat)> =
            xs.into_iter().map(|x| (x.clone(), self.eval(&other.eval(&x)) - &offset)).collect();
        let final_slope = &self.final_slope * &other.final_slope;
        Reparam { offset, knots, final_slope }.canonicalised()
    }

    /// Inverse of a stutter. Returns `None` for genuine falters
    /// (`offset > 0`), which are not invertible on `[0,∞)`.
    pub fn inverse(&self) -> Option<Reparam> {
        if !self.is_stutter() {
            return None;
        }
        let knots = self.knots.iter().map(|(x, y)| (y.clone(), x.clone())).collect();
        let final_slope = crate::rat::one() / &self.final_slope;
        Some(Reparam { offset: zero(), knots, final_slope }.canonicalised())
    }

    /// Debug-friendly rendering `offset + pl[(x,y),...;slope]`.
    pub fn render(&self) -> String {
        use core::fmt::Write;
        let mut s = String::new();
        let _ = write!(s, "{} + pl[", self.offset);
        for (i, (x, y)) in self.knots.iter().enumerate() {
            if i > 0 {
                s.push(' ');
            }
            let _ = write!(s, "({x},{y})");
        }
        let _ = write!(s, "; slope {}]", self.final_slope);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat, rat_int};

    fn knots(v: &[(i64, i64, i64, i64)]) -> Vec<(Rat, Rat)> {
        v.iter().map(|(xn, xd, yn, yd)| (rat(*xn, *xd), rat(*yn, *yd))).collect()
    }

    #[test]
    fn validation() {
        assert_eq!(
            Reparam::new(rat_int(-1), knots(&[(0, 1, 0, 1)]), rat_int(1)),
            Err(ReparamError::NegativeOffset)
        );
        assert_eq!(
            Reparam::new(rat_int(0), knots(&[(1, 1, 1, 1)]), rat_int(1)),
            Err(ReparamError::MissingOrigin)
        );
        assert_eq!(
            Reparam::new(rat_int(0), knots(&[(0, 1, 0, 1), (2, 1, 1, 1), (1, 1, 2, 1)]), rat_int(1)),
            Err(ReparamError::NonMonotoneKnots)
        );
        assert_eq!(
            Reparam::new(rat_int(0), knots(&[(0, 1, 0, 1)]), rat_int(0)),
            Err(ReparamError::NonPositiveSlope)
        );
    }

    #[test]
    fn canonical_drops_collinear_knots() {
        // (1,1) and (2,2) are on the same line as the origin and the ray.
        let f = Reparam::new(
            rat_int(0),
            knots(&[(0, 1, 0, 1), (1, 1, 1, 1), (2, 1, 2, 1)]),
            rat_int(1),
        )
        .unwrap();
        assert_eq!(f, Reparam::identity());
    }

    #[test]
    fn eval_and_inverse_round_trip() {
        // Slow on [0,2] (slope 1/2), then fast (slope 3).
        let f = Reparam::new(rat_int(0), knots(&[(0, 1, 0, 1), (2, 1, 1, 1)]), rat_int(3)).unwrap();
        assert_eq!(f.eval(&rat_int(1)), rat(1, 2));
        assert_eq!(f.eval(&rat_int(2)), rat_int(1));
        assert_eq!(f.eval(&rat_int(4)), rat_int(7));
        for t in [rat_int(0), rat(1, 3), rat_int(2), rat(9, 2), rat_int(100)] {
            assert_eq!(f.eval_inv(&f.eval(&t)).unwrap(), t);
        }
        let g = f.inverse().unwrap();
        assert_eq!(g.eval(&rat_int(7)), rat_int(4));
        assert_eq!(g.compose(&f), Reparam::identity());
        assert_eq!(f.compose(&g), Reparam::identity());
    }

    #[test]
    fn falter_has_no_inverse_but_composes() {
        let f = Reparam::shift(rat(5, 2)).unwrap();
        assert!(f.inverse().is_none());
        assert!(!f.is_stutter());
        let g = Reparam::shift(rat(1, 2)).unwrap();
        assert_eq!(f.compose(&g).offset(), &rat_int(3));
        assert_eq!(f.eval_inv(&rat_int(2)), None);
        assert_eq!(f.eval_inv(&rat(5, 2)), Some(rat_int(0)));
    }

    #[test]
    fn compose_matches_pointwise() {
        let f = Reparam::new(rat(1, 2), knots(&[(0, 1, 0, 1), (1, 1, 3, 1)]), rat(1, 2)).unwrap();
        let g = Reparam::new(rat_int(0), knots(&[(0, 1, 0, 1), (2, 1, 1, 2)]), rat_int(2)).unwrap();
        let fg = f.compose(&g);
        for t in [rat_int(0), rat(1, 4), rat(3, 2), rat_int(2), rat(7, 3), rat_int(5), rat_int(50)] {
            assert_eq!(fg.eval(&t), f.eval(&g.eval(&t)), "at t = {t}");
        }
    }
}
