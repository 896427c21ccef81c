//! The subcommand implementations. Each returns an exit code plus a
//! [`Report`]; malformed inputs surface as [`InputError`] and exit 3.

use std::path::{Path, PathBuf};
use std::time::Instant;

use faltertide_core::continuous::{denote, sat_cont_full};
use faltertide_core::discrete::{eval_disc, eval_disc_full, FlexBound, Verdict};
use faltertide_core::generate;
use faltertide_core::interp::Signature;
use faltertide_core::rat::zero;
use faltertide_core::syntax::{desugar, parse, print, TempFormula};
use faltertide_core::traces::embed_discrete;
use faltertide_core::{hol, rat};
use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::formats::{
    load_continuous_trace, load_corpus, load_discrete_trace, load_model, load_trace_file,
    read_file, InputError, JointTraces, ReparamFile,
};
use crate::report::{exit_for, verdict_name, witness_json, Report};

pub struct CmdResult {
    pub exit: i32,
    pub report: Report,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Semantics {
    Disc,
    Cont,
}

impl Semantics {
    fn name(self) -> &'static str {
        match self {
            Semantics::Disc => "disc",
            Semantics::Cont => "cont",
        }
    }
}

/// Resolves the formula text from exactly one of the two sources.
pub fn formula_source(
    inline: &Option<String>,
    file: &Option<PathBuf>,
) -> Result<(String, String), InputError> {
    match (inline, file) {
        (Some(text), None) => Ok(("--formula".to_string(), text.clone())),
        (None, Some(path)) => Ok((path.display().to_string(), read_file(path)?)),
        _ => Err(InputError::new(
            "formula",
            "provide exactly one of --formula and --formula-file",
        )),
    }
}

fn parse_formula(sig: &Signature, context: &str, text: &str) -> Result<TempFormula, InputError> {
    parse(text, sig).map_err(|e| InputError::new(context, e))
}

fn has_flex_quant(p: &TempFormula) -> bool {
    match p {
        TempFormula::ForallFlex(..) | TempFormula::ExistsFlex(..) => true,
        TempFormula::Atom(_) | TempFormula::ActionBox(_, _) => false,
        TempFormula::Always(b) | TempFormula::Not(b) | TempFormula::ForallRigid(_, b)
        | TempFormula::ExistsRigid(_, b) => has_flex_quant(b),
        TempFormula::And(l, r) | TempFormula::Or(l, r) | TempFormula::Implies(l, r) => {
            has_flex_quant(l) || has_flex_quant(r)
        }
    }
}

fn ms(since: Instant) -> u128 {
    since.elapsed().as_millis()
}

// ---------------------------------------------------------------------------
// parse
// ---------------------------------------------------------------------------

pub fn cmd_parse(
    model: &Path,
    inline: &Option<String>,
    file: &Option<PathBuf>,
) -> Result<CmdResult, InputError> {
    let t0 = Instant::now();
    let (interp, _) = load_model(model)?;
    let (context, text) = formula_source(inline, file)?;
    let formula = parse_formula(interp.sig(), &context, &text)?;
    let mut report = Report::new("parse");
    report.details = json!({
        "printed": print(&formula),
        "has_flexible_quantifier": has_flex_quant(&formula),
    });
    report.timings_ms.insert("total".to_string(), ms(t0));
    Ok(CmdResult { exit: 0, report })
}

// ---------------------------------------------------------------------------
// eval-disc / eval-cont / denote
// ---------------------------------------------------------------------------

pub fn cmd_eval_disc(
    model: &Path,
    inline: &Option<String>,
    file: &Option<PathBuf>,
    trace: &Path,
    bound: usize,
) -> Result<CmdResult, InputError> {
    let t0 = Instant::now();
    let (interp, theta) = load_model(model)?;
    let (context, text) = formula_source(inline, file)?;
    let formula = parse_formula(interp.sig(), &context, &text)?;
    let rho = load_discrete_trace(trace, &interp)?;
    let read_ms = ms(t0);

    let t1 = Instant::now();
    let (verdict, exact) = eval_disc_full(&formula, &interp, &theta, &rho, FlexBound::new(bound))
        .map_err(|e| InputError::new(trace.display().to_string(), e))?;
    let mut report = Report::new("eval-disc");
    report.exact = Some(exact);
    report.flex_bound = Some(bound);
    if let Verdict::FalseWitnessed(w) = &verdict {
        report.witness = Some(witness_json(w, &interp));
    }
    report.verdict = Some(verdict_name(&verdict).to_string());
    report.timings_ms.insert("read".to_string(), read_ms);
    report.timings_ms.insert("eval".to_string(), ms(t1));
    Ok(CmdResult { exit: exit_for(&verdict), report })
}

pub fn cmd_eval_cont(
    model: &Path,
    inline: &Option<String>,
    file: &Option<PathBuf>,
    trace: &Path,
    bound: usize,
) -> Result<CmdResult, InputError> {
    let t0 = Instant::now();
    let (interp, theta) = load_model(model)?;
    let (context, text) = formula_source(inline, file)?;
    let formula = parse_formula(interp.sig(), &context, &text)?;
    let tau = load_continuous_trace(trace, &interp)?;
    let read_ms = ms(t0);

    let t1 = Instant::now();
    let (verdict, exact) = sat_cont_full(&formula, &interp, &theta, &tau, FlexBound::new(bound))
        .map_err(|e| InputError::new(trace.display().to_string(), e))?;
    let mut report = Report::new("eval-cont");
    report.exact = Some(exact);
    report.flex_bound = Some(bound);
    if let Verdict::FalseWitnessed(w) = &verdict {
        report.witness = Some(witness_json(w, &interp));
    }
    report.verdict = Some(verdict_name(&verdict).to_string());
    report.timings_ms.insert("read".to_string(), read_ms);
    report.timings_ms.insert("eval".to_string(), ms(t1));
    Ok(CmdResult { exit: exit_for(&verdict), report })
}

pub fn cmd_denote(
    model: &Path,
    inline: &Option<String>,
    file: &Option<PathBuf>,
    trace: &Path,
    bound: usize,
) -> Result<CmdResult, InputError> {
    let t0 = Instant::now();
    let (interp, theta) = load_model(model)?;
    let (context, text) = formula_source(inline, file)?;
    let formula = parse_formula(interp.sig(), &context, &text)?;
    let tau = load_continuous_trace(trace, &interp)?;
    let read_ms = ms(t0);

    let t1 = Instant::now();
    let d = denote(&formula, &interp, &theta, &tau, FlexBound::new(bound))
        .map_err(|e| InputError::new(trace.display().to_string(), e))?;
    let mut report = Report::new("denote");
    report.exact = Some(d.exact);
    report.flex_bound = Some(bound);
    report.details = json!({
        "set": d.set.render(),
        "holds_at_zero": d.set.contains(&zero()),
    });
    report.timings_ms.insert("read".to_string(), read_ms);
    report.timings_ms.insert("eval".to_string(), ms(t1));
    Ok(CmdResult { exit: 0, report })
}

// ---------------------------------------------------------------------------
// equiv
// ---------------------------------------------------------------------------

pub fn cmd_equiv(a: &Path, b: &Path, mode: Semantics) -> Result<CmdResult, InputError> {
    let t0 = Instant::now();
    let fa = load_trace_file(a)?;
    let fb = load_trace_file(b)?;
    let joint = JointTraces::new(&fa, &fb)
        .map_err(|e| InputError::new(format!("{} / {}", a.display(), b.display()), e))?;
    let equivalent = match mode {
        Semantics::Disc => {
            let ra = joint.discrete(&fa).map_err(|e| InputError::new(a.display().to_string(), e))?;
            let rb = joint.discrete(&fb).map_err(|e| InputError::new(b.display().to_string(), e))?;
            ra.stutter_equiv(&rb).map_err(|e| InputError::new("equiv", e))?
        }
        Semantics::Cont => {
            let ta =
                joint.continuous(&fa).map_err(|e| InputError::new(a.display().to_string(), e))?;
            let tb =
                joint.continuous(&fb).map_err(|e| InputError::new(b.display().to_string(), e))?;
            ta.stutter_equiv(&tb).map_err(|e| InputError::new("equiv", e))?
        }
    };
    let mut report = Report::new("equiv");
    report.verdict = Some(if equivalent { "True" } else { "False" }.to_string());
    report.exact = Some(true);
    report.details = json!({ "equivalent": equivalent, "mode": mode.name() });
    report.timings_ms.insert("total".to_string(), ms(t0));
    Ok(CmdResult { exit: if equivalent { 0 } else { 1 }, report })
}

// ---------------------------------------------------------------------------
// invariance
// ---------------------------------------------------------------------------

/// Randomized stutter trials. Discrete mode compares the verdict's truth
/// value across random stutter-expansions; continuous mode checks the
/// reparametrisation law `denote(τ∘s) = preimage(s, denote(τ))` for random
/// stutters (falling back to a satisfaction comparison when a flexible
/// quantifier makes the denotation an enclosure).
#[allow(clippy::too_many_arguments)]
pub fn cmd_invariance(
    model: &Path,
    inline: &Option<String>,
    file: &Option<PathBuf>,
    trace: &Path,
    semantics: Semantics,
    trials: usize,
    seed: u64,
    bound: usize,
) -> Result<CmdResult, InputError> {
    let t0 = Instant::now();
    let (interp, theta) = load_model(model)?;
    let (context, text) = formula_source(inline, file)?;
    let formula = parse_formula(interp.sig(), &context, &text)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let flex_bound = FlexBound::new(bound);

    let mut report = Report::new("invariance");
    report.seed = Some(seed);
    report.flex_bound = Some(bound);
    let mut violation: Option<serde_json::Value> = None;

    match semantics {
        Semantics::Disc => {
            let rho = load_discrete_trace(trace, &interp)?;
            let original = eval_disc(&formula, &interp, &theta, &rho, flex_bound)
                .map_err(|e| InputError::new(trace.display().to_string(), e))?
                .holds();
            for trial in 0..trials {
                let preps: Vec<usize> =
                    (0..rho.prefix().len()).map(|_| (rng.next_u32() % 3) as usize + 1).collect();
                let creps: Vec<usize> =
                    (0..rho.cycle().len()).map(|_| (rng.next_u32() % 3) as usize + 1).collect();
                let expanded = rho.stutter_expand(&preps, &creps).expect("shape matches");
                let now = eval_disc(&formula, &interp, &theta, &expanded, flex_bound)
                    .map_err(|e| InputError::new(trace.display().to_string(), e))?
                    .holds();
                if now != original {
                    violation = Some(json!({
                        "kind": "stutter-expansion",
                        "trial": trial,
                        "prefix_reps": preps,
                        "cycle_reps": creps,
                        "original_holds": original,
                        "expanded_holds": now,
                    }));
                    break;
                }
            }
        }
        Semantics::Cont => {
            let tau = load_continuous_trace(trace, &interp)?;
            let base = denote(&formula, &interp, &theta, &tau, flex_bound)
                .map_err(|e| InputError::new(trace.display().to_string(), e))?;
            for trial in 0..trials {
                let s = generate::reparam(&mut rng, false);
                let moved = denote(&formula, &interp, &theta, &tau.apply_reparam(&s), flex_bound)
                    .map_err(|e| InputError::new(trace.display().to_string(), e))?;
                let violated = if base.exact && moved.exact {
                    !moved.set.equals(&base.set.preimage(&s))
                } else {
                    moved.set.contains(&zero()) != base.set.contains(&zero())
                };
                if violated {
                    violation = Some(json!({
                        "kind": "stutter-reparam",
                        "trial": trial,
                        "reparam": serde_json::to_value(ReparamFile::from_reparam(&s))
                            .expect("reparam serializes"),
                        "expected_set": base.set.preimage(&s).render(),
                        "actual_set": moved.set.render(),
                    }));
                    break;
                }
            }
        }
    }

    let ok = violation.is_none();
    report.verdict = Some(if ok { "True" } else { "FalseWitnessed" }.to_string());
    report.exact = Some(false); // sampled trials, not a proof
    report.witness = violation;
    report.details = json!({ "semantics": semantics.name(), "trials": trials });
    report.timings_ms.insert("total".to_string(), ms(t0));
    Ok(CmdResult { exit: if ok { 0 } else { 1 }, report })
}

// ---------------------------------------------------------------------------
// agreement
// ---------------------------------------------------------------------------

pub fn cmd_agreement(model: &Path, corpus: &Path) -> Result<CmdResult, InputError> {
    let t0 = Instant::now();
    let (interp, theta) = load_model(model)?;
    let corpus_file = load_corpus(corpus)?;
    let context = corpus.display().to_string();
    if corpus_file.formulas.is_empty() || corpus_file.traces.is_empty() {
        return Err(InputError::new(context, "corpus needs at least one formula and one trace"));
    }
    let mut formulas = Vec::new();
    for (i, text) in corpus_file.formulas.iter().enumerate() {
        let f = parse_formula(interp.sig(), &format!("{context}: formula #{i}"), text)?;
        if has_flex_quant(&f) {
            return Err(InputError::new(
                format!("{context}: formula #{i}"),
                "agreement corpora must be free of flexible quantifiers",
            ));
        }
        formulas.push(desugar(&f));
    }
    let mut behaviors = Vec::new();
    for (i, t) in corpus_file.traces.iter().enumerate() {
        behaviors.push(
            t.to_discrete(&interp)
                .map_err(|e| InputError::new(format!("{context}: trace #{i}"), e))?,
        );
    }
    let read_ms = ms(t0);

    let t1 = Instant::now();
    let bound = FlexBound::new(0);
    let step = rat::one();
    let mut disagreements = Vec::new();
    for (fi, f) in formulas.iter().enumerate() {
        for (ti, rho) in behaviors.iter().enumerate() {
            let disc = eval_disc(f, &interp, &theta, rho, bound)
                .map_err(|e| InputError::new(format!("{context}: formula #{fi}"), e))?
                .holds();
            let tau = embed_discrete(rho, &step).expect("embedding a valid lasso");
            let (cont_verdict, _) = sat_cont_full(f, &interp, &theta, &tau, bound)
                .map_err(|e| InputError::new(format!("{context}: formula #{fi}"), e))?;
            let cont = cont_verdict.holds();
            if disc != cont {
                disagreements.push(json!({
                    "formula": fi,
                    "trace": ti,
                    "disc_holds": disc,
                    "cont_holds": cont,
                }));
            }
        }
    }
    let ok = disagreements.is_empty();
    let mut report = Report::new("agreement");
    report.verdict = Some(if ok { "True" } else { "False" }.to_string());
    report.exact = Some(true);
    report.details = json!({
        "formulas": formulas.len(),
        "traces": behaviors.len(),
        "pairs": formulas.len() * behaviors.len(),
        "disagreements": disagreements,
    });
    report.timings_ms.insert("read".to_string(), read_ms);
    report.timings_ms.insert("eval".to_string(), ms(t1));
    Ok(CmdResult { exit: if ok { 0 } else { 1 }, report })
}

// ---------------------------------------------------------------------------
// hol-check
// ---------------------------------------------------------------------------

pub fn cmd_hol_check(path: &Path) -> Result<CmdResult, InputError> {
    let t0 = Instant::now();
    let context = path.display().to_string();
    let text = read_file(path)?;
    let sexps = hol::parse_sexps(&text).map_err(|e| InputError::new(&context, e))?;
    if sexps.is_empty() {
        return Err(InputError::new(context, "no derivations in file"));
    }
    let mut derivations = Vec::new();
    for (i, s) in sexps.iter().enumerate() {
        derivations.push(
            hol::derivation_from_sexp(s)
                .map_err(|e| InputError::new(format!("{context}: derivation #{i}"), e))?,
        );
    }
    let read_ms = ms(t0);

    let t1 = Instant::now();
    let mut failures = Vec::new();
    for (i, d) in derivations.iter().enumerate() {
        if let Err(e) = hol::check(d) {
            failures.push(json!({
                "derivation": i,
                "rule": d.rule,
                "path": e.path,
                "reason": e.reason,
            }));
        }
    }
    let ok = failures.is_empty();
    let mut report = Report::new("hol-check");
    report.verdict = Some(if ok { "True" } else { "False" }.to_string());
    report.exact = Some(true);
    report.details = json!({
        "checked": derivations.len(),
        "rejected": failures.len(),
        "failures": failures,
    });
    report.timings_ms.insert("read".to_string(), read_ms);
    report.timings_ms.insert("check".to_string(), ms(t1));
    Ok(CmdResult { exit: if ok { 0 } else { 1 }, report })
}
