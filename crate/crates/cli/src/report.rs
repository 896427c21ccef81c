//! The JSON report every subcommand emits, plus witness serialization and
//! the text rendering. The schema is fixed across commands: absent fields
//! serialize as `null`, so consumers can rely on the key set.

use std::collections::BTreeMap;

use faltertide_core::discrete::{Verdict, Witness};
use faltertide_core::interp::Interpretation;
use faltertide_core::rat::render_rat;
use faltertide_core::traces::State;
use serde::Serialize;
use serde_json::{json, Value as Json};

use crate::formats::TraceFile;

#[derive(Serialize)]
pub struct Report {
    pub command: String,
    pub verdict: Option<String>,
    pub exact: Option<bool>,
    pub flex_bound: Option<usize>,
    pub seed: Option<u64>,
    pub witness: Option<Json>,
    pub error: Option<String>,
    pub details: Json,
    pub timings_ms: BTreeMap<String, u128>,
}

impl Report {
    pub fn new(command: &str) -> Report {
        Report {
            command: command.to_string(),
            verdict: None,
            exact: None,
            flex_bound: None,
            seed: None,
            witness: None,
            error: None,
            details: Json::Null,
            timings_ms: BTreeMap::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Human-readable rendering: one `key: value` line per populated field.
    pub fn to_text(&self) -> String {
        let mut out = format!("command: {}\n", self.command);
        if let Some(v) = &self.verdict {
            out.push_str(&format!("verdict: {v}\n"));
        }
        if let Some(e) = self.exact {
            out.push_str(&format!("exact: {e}\n"));
        }
        if let Some(b) = self.flex_bound {
            out.push_str(&format!("flex bound: {b}\n"));
        }
        if let Some(s) = self.seed {
            out.push_str(&format!("seed: {s}\n"));
        }
        if let Some(w) = &self.witness {
            out.push_str(&format!("witness: {w}\n"));
        }
        if let Some(e) = &self.error {
            out.push_str(&format!("error: {e}\n"));
        }
        if !self.details.is_null() {
            out.push_str(&format!("details: {}\n", self.details));
        }
        out
    }
}

/// The stable verdict names used in reports.
pub fn verdict_name(v: &Verdict) -> &'static str {
    match v {
        Verdict::True => "True",
        Verdict::False => "False",
        Verdict::TrueWithinBound { .. } => "TrueWithinBound",
        Verdict::FalseWitnessed(_) => "FalseWitnessed",
    }
}

/// The exit-code contract: 0 = established, 1 = refuted, 2 = established
/// only within the search bound. (3 is reserved for malformed inputs.)
pub fn exit_for(v: &Verdict) -> i32 {
    match v {
        Verdict::True => 0,
        Verdict::TrueWithinBound { .. } => 2,
        Verdict::False | Verdict::FalseWitnessed(_) => 1,
    }
}

fn state_json(s: &State, interp: &Interpretation) -> Json {
    let map: BTreeMap<String, String> = interp
        .sig()
        .flexible()
        .iter()
        .enumerate()
        .map(|(i, v)| (v.clone(), interp.element_name(s.get(i)).to_string()))
        .collect();
    json!(map)
}

/// Serializes a witness with enough data to replay it deterministically.
pub fn witness_json(w: &Witness, interp: &Interpretation) -> Json {
    match w {
        Witness::Step { n, now, next } => json!({
            "kind": "step",
            "index": n,
            "now": state_json(now, interp),
            "next": state_json(next, interp),
        }),
        Witness::Time { t } => json!({
            "kind": "time",
            "t": render_rat(t),
        }),
        Witness::FlexRefutation { behavior, prefix_vals, cycle_vals } => {
            let names = |vals: &[faltertide_core::traces::Value]| -> Vec<String> {
                vals.iter().map(|v| interp.element_name(*v).to_string()).collect()
            };
            json!({
                "kind": "flex-refutation",
                "behavior": serde_json::to_value(TraceFile::from_discrete(behavior, interp))
                    .expect("trace serializes"),
                "witness_prefix": names(prefix_vals),
                "witness_cycle": names(cycle_vals),
            })
        }
        Witness::Here => json!({ "kind": "here" }),
    }
}
