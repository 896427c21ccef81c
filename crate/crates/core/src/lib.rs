//! Core engine for reasoning about temporal formulas over lasso-shaped
//! behaviours, in two flavours of time.
//!
//! The crate provides:
//!
//! * [`timeset`] — an exact algebra of eventually-periodic subsets of the
//!   non-negative rational line, closed under Boolean operations, the S4
//!   future-closure modalities, and preimages of piecewise-linear time
//!   reparametrisations;
//! * [`traces`] — finitely presented behaviours: discrete lassos
//!   (prefix + repeating cycle of states) and their continuous,
//!   piecewise-constant counterparts, together with stuttering
//!   canonicalisation and the reparametrisation action;
//! * [`syntax`] / [`interp`] — a small temporal language with actions
//!   (primed/unprimed variables), rigid and flexible quantifiers, and its
//!   first-order models;
//! * [`discrete`] / [`continuous`] — the two evaluation semantics, one
//!   judging a formula on a discrete behaviour, one denoting a formula as a
//!   time set over a continuous trace;
//! * [`hol`] — an independent proof kernel for a simply typed higher-order
//!   logic with definitional equality, used to certify derivations shipped
//!   as S-expressions.
//!
//! Everything here is `no_std` (with `alloc`); IO, serialization and the
//! command-line surface live in the companion `faltertide` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod continuous;
pub mod discrete;
pub mod generate;
pub mod hol;
pub mod interp;
pub mod rat;
pub mod reparam;
pub mod syntax;
pub mod timeset;
pub mod traces;
