//! JSON file formats: models (finite interpretations), traces (discrete
//! lassos and piecewise-constant continuous traces), reparametrisations,
//! and agreement corpora. Exact rationals travel as `"p/q"` strings.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use faltertide_core::interp::{Interpretation, RigidEnv, Signature};
use faltertide_core::rat::{parse_rat, render_rat, Rat};
use faltertide_core::reparam::Reparam;
use faltertide_core::traces::{ContTrace, DiscreteBehavior, Segment, State, Value};
use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

/// A malformed input, tagged with the file (or flag) it came from. Always
/// maps to exit code 3.
#[derive(Debug, thiserror::Error)]
#[error("{context}: {detail}")]
pub struct InputError {
    pub context: String,
    pub detail: String,
}

impl InputError {
    pub fn new(context: impl Into<String>, detail: impl fmt::Display) -> Self {
        InputError { context: context.into(), detail: detail.to_string() }
    }
}

pub fn read_file(path: &Path) -> Result<String, InputError> {
    std::fs::read_to_string(path).map_err(|e| InputError::new(path.display().to_string(), e))
}

fn from_json_str<'a, T: Deserialize<'a>>(path: &Path, text: &'a str) -> Result<T, InputError> {
    serde_json::from_str(text).map_err(|e| InputError::new(path.display().to_string(), e))
}

// ---------------------------------------------------------------------------
// Models
// ---------------------------------------------------------------------------

/// On-disk model: domain elements by name, extensional symbol tables as
/// nested arrays (outermost index = first argument), declared flexible
/// variables, and an optional rigid environment.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub domain: Vec<String>,
    #[serde(default)]
    pub functions: BTreeMap<String, TableSpec>,
    #[serde(default)]
    pub relations: BTreeMap<String, TableSpec>,
    #[serde(default)]
    pub flexible: Vec<String>,
    #[serde(default)]
    pub rigid: BTreeMap<String, String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableSpec {
    pub arity: usize,
    pub table: Json,
}

/// Flattens an `arity`-deep nested array row-major, converting leaves.
fn flatten_table<T>(
    name: &str,
    spec: &Json,
    arity: usize,
    size: usize,
    leaf: &impl Fn(&Json) -> Result<T, String>,
    out: &mut Vec<T>,
) -> Result<(), String> {
    if arity == 0 {
        out.push(leaf(spec).map_err(|e| format!("table for `{name}`: {e}"))?);
        return Ok(());
    }
    match spec {
        Json::Array(rows) if rows.len() == size => {
            for row in rows {
                flatten_table(name, row, arity - 1, size, leaf, out)?;
            }
            Ok(())
        }
        Json::Array(rows) => Err(format!(
            "table for `{name}` has {} entries at a level where the domain has {size}",
            rows.len()
        )),
        _ => Err(format!("table for `{name}` must nest arrays to depth {arity}")),
    }
}

impl ModelFile {
    pub fn build(&self) -> Result<(Interpretation, RigidEnv), String> {
        let functions: Vec<(String, usize)> =
            self.functions.iter().map(|(n, s)| (n.clone(), s.arity)).collect();
        let relations: Vec<(String, usize)> =
            self.relations.iter().map(|(n, s)| (n.clone(), s.arity)).collect();
        let sig = Signature::new(functions, relations, self.flexible.clone())
            .map_err(|e| e.to_string())?;
        let elem = |v: &Json| -> Result<Value, String> {
            let name = v.as_str().ok_or_else(|| "expected a domain element string".to_string())?;
            self.domain
                .iter()
                .position(|d| d == name)
                .map(|i| Value(i as u32))
                .ok_or_else(|| format!("`{name}` is not a domain element"))
        };
        let size = self.domain.len();
        let mut func_tables = BTreeMap::new();
        for (name, spec) in &self.functions {
            let mut table = Vec::new();
            flatten_table(name, &spec.table, spec.arity, size, &elem, &mut table)?;
            func_tables.insert(name.clone(), table);
        }
        let mut rel_tables = BTreeMap::new();
        for (name, spec) in &self.relations {
            let as_bool = |v: &Json| v.as_bool().ok_or_else(|| "expected a boolean".to_string());
            let mut table = Vec::new();
            flatten_table(name, &spec.table, spec.arity, size, &as_bool, &mut table)?;
            rel_tables.insert(name.clone(), table);
        }
        let interp = Interpretation::new(sig, self.domain.clone(), func_tables, rel_tables)
            .map_err(|e| e.to_string())?;
        let mut rigid = RigidEnv::new();
        for (name, val) in &self.rigid {
            let v = interp
                .element(val)
                .ok_or_else(|| format!("rigid `{name}`: `{val}` is not a domain element"))?;
            rigid.insert(name.clone(), v);
        }
        Ok((interp, rigid))
    }
}

pub fn load_model(path: &Path) -> Result<(Interpretation, RigidEnv), InputError> {
    let text = read_file(path)?;
    let file: ModelFile = from_json_str(path, &text)?;
    file.build().map_err(|e| InputError::new(path.display().to_string(), e))
}

// ---------------------------------------------------------------------------
// Traces
// ---------------------------------------------------------------------------

/// On-disk trace: declared variables, then prefix and cycle steps. Steps
/// with durations describe a continuous trace; without, a discrete lasso.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct TraceFile {
    pub variables: Vec<String>,
    #[serde(default)]
    pub prefix: Vec<StepSpec>,
    pub cycle: Vec<StepSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct StepSpec {
    pub state: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<String>,
}

impl TraceFile {
    /// The declared variables, sorted — the slot order used everywhere.
    fn sorted_vars(&self) -> Result<Vec<String>, String> {
        let mut vars = self.variables.clone();
        vars.sort();
        vars.dedup();
        if vars.len() != self.variables.len() {
            return Err("duplicate variable declaration".to_string());
        }
        Ok(vars)
    }

    fn check_vars_match(&self, sig: &Signature) -> Result<Vec<String>, String> {
        let vars = self.sorted_vars()?;
        if vars != sig.flexible() {
            return Err(format!(
                "trace variables [{}] do not match the model's flexible variables [{}]",
                vars.join(", "),
                sig.flexible().join(", ")
            ));
        }
        Ok(vars)
    }

    fn step_state(
        step: &StepSpec,
        index: usize,
        vars: &[String],
        lookup: &impl Fn(&str) -> Option<Value>,
    ) -> Result<State, String> {
        if step.state.len() != vars.len() {
            return Err(format!(
                "step {index} assigns {} variables where {} are declared",
                step.state.len(),
                vars.len()
            ));
        }
        let mut values = Vec::with_capacity(vars.len());
        for var in vars {
            let raw = step
                .state
                .get(var)
                .ok_or_else(|| format!("step {index} is missing variable `{var}`"))?;
            let v = lookup(raw)
                .ok_or_else(|| format!("step {index}: `{raw}` is not a domain element"))?;
            values.push(v);
        }
        Ok(State::new(values))
    }

    /// As a discrete lasso over the model's domain. Durations are rejected:
    /// they only describe continuous traces.
    pub fn to_discrete(&self, interp: &Interpretation) -> Result<DiscreteBehavior, String> {
        let vars = self.check_vars_match(interp.sig())?;
        let lookup = |name: &str| interp.element(name);
        let build = |steps: &[StepSpec], base: usize| -> Result<Vec<State>, String> {
            steps
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    if s.duration.is_some() {
                        return Err(format!(
                            "step {}: durations belong to continuous traces; drop them for a discrete lasso",
                            base + i
                        ));
                    }
                    Self::step_state(s, base + i, &vars, &lookup)
                })
                .collect()
        };
        let prefix = build(&self.prefix, 0)?;
        let cycle = build(&self.cycle, self.prefix.len())?;
        DiscreteBehavior::new(prefix, cycle).map_err(|e| e.to_string())
    }

    /// As a continuous trace over the model's domain. Every step needs a
    /// positive rational duration.
    pub fn to_continuous(&self, interp: &Interpretation) -> Result<ContTrace, String> {
        let vars = self.check_vars_match(interp.sig())?;
        let lookup = |name: &str| interp.element(name);
        let build = |steps: &[StepSpec], base: usize| -> Result<Vec<Segment>, String> {
            steps
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let raw = s.duration.as_ref().ok_or_else(|| {
                        format!("step {}: a continuous trace needs a duration on every step", base + i)
                    })?;
                    let d = parse_rat(raw)
                        .map_err(|e| format!("step {}: duration: {e}", base + i))?;
                    Ok(Segment::new(Self::step_state(s, base + i, &vars, &lookup)?, d))
                })
                .collect()
        };
        let segments = build(&self.prefix, 0)?;
        let cycle = build(&self.cycle, self.prefix.len())?;
        ContTrace::new(segments, cycle).map_err(|e| e.to_string())
    }

    /// Serializes a lasso back to the file shape (for witness replay).
    pub fn from_discrete(rho: &DiscreteBehavior, interp: &Interpretation) -> TraceFile {
        let vars = interp.sig().flexible().to_vec();
        let step = |s: &State| StepSpec {
            state: vars
                .iter()
                .enumerate()
                .map(|(i, v)| (v.clone(), interp.element_name(s.get(i)).to_string()))
                .collect(),
            duration: None,
        };
        TraceFile {
            variables: vars.clone(),
            prefix: rho.prefix().iter().map(step).collect(),
            cycle: rho.cycle().iter().map(step).collect(),
        }
    }
}

pub fn load_trace_file(path: &Path) -> Result<TraceFile, InputError> {
    let text = read_file(path)?;
    from_json_str(path, &text)
}

pub fn load_discrete_trace(
    path: &Path,
    interp: &Interpretation,
) -> Result<DiscreteBehavior, InputError> {
    load_trace_file(path)?
        .to_discrete(interp)
        .map_err(|e| InputError::new(path.display().to_string(), e))
}

pub fn load_continuous_trace(
    path: &Path,
    interp: &Interpretation,
) -> Result<ContTrace, InputError> {
    load_trace_file(path)?
        .to_continuous(interp)
        .map_err(|e| InputError::new(path.display().to_string(), e))
}

// ---------------------------------------------------------------------------
// Model-free trace pairs (for `equiv`)
// ---------------------------------------------------------------------------

/// Interprets two trace files over a joint value index built from the value
/// names they mention, so equivalence needs no model file. Both must
/// declare the same variable set.
pub struct JointTraces {
    pub vars: Vec<String>,
    values: Vec<String>,
}

impl JointTraces {
    pub fn new(a: &TraceFile, b: &TraceFile) -> Result<JointTraces, String> {
        let va = a.sorted_vars()?;
        let vb = b.sorted_vars()?;
        if va != vb {
            return Err(format!(
                "traces declare different variables: [{}] vs [{}]",
                va.join(", "),
                vb.join(", ")
            ));
        }
        let mut values: Vec<String> = [a, b]
            .iter()
            .flat_map(|t| t.prefix.iter().chain(&t.cycle))
            .flat_map(|s| s.state.values().cloned())
            .collect();
        values.sort();
        values.dedup();
        Ok(JointTraces { vars: va, values })
    }

    fn lookup(&self, name: &str) -> Option<Value> {
        self.values.iter().position(|v| v == name).map(|i| Value(i as u32))
    }

    pub fn discrete(&self, t: &TraceFile) -> Result<DiscreteBehavior, String> {
        let lookup = |n: &str| self.lookup(n);
        let build = |steps: &[StepSpec], base: usize| -> Result<Vec<State>, String> {
            steps
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    if s.duration.is_some() {
                        return Err(format!("step {}: unexpected duration in discrete mode", base + i));
                    }
                    TraceFile::step_state(s, base + i, &self.vars, &lookup)
                })
                .collect()
        };
        DiscreteBehavior::new(build(&t.prefix, 0)?, build(&t.cycle, t.prefix.len())?)
            .map_err(|e| e.to_string())
    }

    pub fn continuous(&self, t: &TraceFile) -> Result<ContTrace, String> {
        let lookup = |n: &str| self.lookup(n);
        let build = |steps: &[StepSpec], base: usize| -> Result<Vec<Segment>, String> {
            steps
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let raw = s.duration.as_ref().ok_or_else(|| {
                        format!("step {}: continuous mode needs a duration on every step", base + i)
                    })?;
                    let d = parse_rat(raw)
                        .map_err(|e| format!("step {}: duration: {e}", base + i))?;
                    Ok(Segment::new(TraceFile::step_state(s, base + i, &self.vars, &lookup)?, d))
                })
                .collect()
        };
        ContTrace::new(build(&t.prefix, 0)?, build(&t.cycle, t.prefix.len())?)
            .map_err(|e| e.to_string())
    }
}

// ---------------------------------------------------------------------------
// Reparametrisations
// ---------------------------------------------------------------------------

/// On-disk reparametrisation: `{offset, knots, final_slope}` with rational
/// strings; knots are `[x, y]` pairs starting at `["0", "0"]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReparamFile {
    pub offset: String,
    pub knots: Vec<[String; 2]>,
    pub final_slope: String,
}

impl ReparamFile {
    pub fn to_reparam(&self) -> Result<Reparam, String> {
        let r = |s: &String| parse_rat(s).map_err(|e| e.to_string());
        let knots: Vec<(Rat, Rat)> = self
            .knots
            .iter()
            .map(|[x, y]| Ok::<_, String>((r(x)?, r(y)?)))
            .collect::<Result<_, _>>()?;
        Reparam::new(r(&self.offset)?, knots, r(&self.final_slope)?).map_err(|e| e.to_string())
    }

    pub fn from_reparam(s: &Reparam) -> ReparamFile {
        ReparamFile {
            offset: render_rat(s.offset()),
            knots: s
                .knots()
                .iter()
                .map(|(x, y)| [render_rat(x), render_rat(y)])
                .collect(),
            final_slope: render_rat(s.final_slope()),
        }
    }
}

// ---------------------------------------------------------------------------
// Agreement corpora
// ---------------------------------------------------------------------------

/// On-disk corpus for the agreement check: formulas in the concrete
/// grammar, against discrete lassos.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusFile {
    pub formulas: Vec<String>,
    pub traces: Vec<TraceFile>,
}

pub fn load_corpus(path: &Path) -> Result<CorpusFile, InputError> {
    let text = read_file(path)?;
    from_json_str(path, &text)
}
