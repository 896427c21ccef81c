//! Finite first-order interpretation structures and term/action evaluation.
//!
//! An [`Interpretation`] fixes a finite, explicitly enumerated domain,
//! extensional tables for every function and relation symbol, and the list
//! of declared flexible variables. Rigid quantification is evaluated by
//! exhausting the domain, so it is exact.
//!
//! Flexible variables are bound to state tuple slots positionally: the
//! declared flexible variables occupy slots `0..k` in sorted name order,
//! and flexibly quantified variables are pushed on the right as evaluation
//! descends through their binders ([`FlexCtx`]).

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::syntax::{Action, Term};
use crate::traces::{State, Value};

/// Declares the symbols formulas may mention: function symbols and
/// relation symbols with arities, plus the flexible variable names. All
/// names share one namespace and must be distinct.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Signature {
    functions: BTreeMap<String, usize>,
    relations: BTreeMap<String, usize>,
    flexible: Vec<String>,
}

/// Rejection reasons for ill-formed signatures and interpretations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InterpError {
    DuplicateSymbol(String),
    EmptyDomain,
    MissingTable(String),
    UnknownSymbol(String),
    TableSizeMismatch(String),
    ValueOutOfRange(String),
}

impl fmt::Display for InterpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InterpError::DuplicateSymbol(n) => write!(f, "duplicate symbol `{n}`"),
            InterpError::EmptyDomain => f.write_str("domain must be nonempty"),
            InterpError::MissingTable(n) => write!(f, "no table for symbol `{n}`"),
            InterpError::UnknownSymbol(n) => write!(f, "table for undeclared symbol `{n}`"),
            InterpError::TableSizeMismatch(n) => write!(f, "table for `{n}` has the wrong size"),
            InterpError::ValueOutOfRange(n) => write!(f, "table for `{n}` mentions a value outside the domain"),
        }
    }
}

impl Signature {
    pub fn new(
        functions: Vec<(String, usize)>,
        relations: Vec<(String, usize)>,
        mut flexible: Vec<String>,
    ) -> Result<Self, InterpError> {
        flexible.sort();
        let mut seen = alloc::collections::BTreeSet::new();
        for name in functions
            .iter()
            .map(|(n, _)| n)
            .chain(relations.iter().map(|(n, _)| n))
            .chain(flexible.iter())
        {
            if !seen.insert(name.clone()) {
                return Err(InterpError::DuplicateSymbol(name.clone()));
            }
        }
        Ok(Signature {
            functions: functions.into_iter().collect(),
            relations: relations.into_iter().collect(),
            flexible,
        })
    }

    pub fn function_arity(&self, name: &str) -> Option<usize> {
        self.functions.get(name).copied()
    }

    pub fn relation_arity(&self, name: &str) -> Option<usize> {
        self.relations.get(name).copied()
    }

    pub fn is_flexible(&self, name: &str) -> bool {
        self.flexible.iter().any(|f| f == name)
    }

    /// Declared flexible variables in slot order (sorted by name).
    pub fn flexible(&self) -> &[String] {
        &self.flexible
    }

    pub fn functions(&self) -> impl Iterator<Item = (&str, usize)> {
        self.functions.iter().map(|(n, &a)| (n.as_str(), a))
    }

    pub fn relations(&self) -> impl Iterator<Item = (&str, usize)> {
        self.relations.iter().map(|(n, &a)| (n.as_str(), a))
    }

    pub fn mentions(&self, name: &str) -> bool {
        self.functions.contains_key(name)
            || self.relations.contains_key(name)
            || self.is_flexible(name)
    }
}

/// Maps flexible variable names to state tuple slots: the signature's
/// declared variables first, then any flexibly quantified variables in
/// binder order.
#[derive(Clone, Debug)]
pub struct FlexCtx {
    names: Vec<String>,
}

impl FlexCtx {
    pub fn base(sig: &Signature) -> Self {
        FlexCtx { names: sig.flexible().to_vec() }
    }

    /// Context with one more variable bound to the next slot.
    pub fn pushed(&self, name: &str) -> Self {
        let mut names = self.names.clone();
        names.push(String::from(name));
        FlexCtx { names }
    }

    pub fn slot(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn width(&self) -> usize {
        self.names.len()
    }
}

/// A finite interpretation: ordered domain elements (referred to by their
/// index as [`Value`]s), a total table per function symbol, and a
/// characteristic table per relation symbol, both row-major over the
/// domain at the declared arity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interpretation {
    sig: Signature,
    domain: Vec<String>,
    func_tables: BTreeMap<String, Vec<Value>>,
    rel_tables: BTreeMap<String, Vec<bool>>,
}

impl Interpretation {
    pub fn new(
        sig: Signature,
        domain: Vec<String>,
        func_tables: BTreeMap<String, Vec<Value>>,
        rel_tables: BTreeMap<String, Vec<bool>>,
    ) -> Result<Self, InterpError> {
        if domain.is_empty() {
            return Err(InterpError::EmptyDomain);
        }
        let size = domain.len();
        for (name, table) in &func_tables {
            let arity = sig
                .function_arity(name)
                .ok_or_else(|| InterpError::UnknownSymbol(name.clone()))?;
            if table.len() != size.pow(arity as u32) {
                return Err(InterpError::TableSizeMismatch(name.clone()));
            }
            if table.iter().any(|v| v.0 as usize >= size) {
                return Err(InterpError::ValueOutOfRange(name.clone()));
            }
        }
        for (name, table) in &rel_tables {
            let arity = sig
                .relation_arity(name)
                .ok_or_else(|| InterpError::UnknownSymbol(name.clone()))?;
            if table.len() != size.pow(arity as u32) {
                return Err(InterpError::TableSizeMismatch(name.clone()));
            }
        }
        for name in sig.functions.keys() {
            if !func_tables.contains_key(name) {
                return Err(InterpError::MissingTable(name.clone()));
            }
        }
        for name in sig.relations.keys() {
            if !rel_tables.contains_key(name) {
                return Err(InterpError::MissingTable(name.clone()));
            }
        }
        Ok(Interpretation { sig, domain, func_tables, rel_tables })
    }

    pub fn sig(&self) -> &Signature {
        &self.sig
    }

    pub fn domain_size(&self) -> usize {
        self.domain.len()
    }

    pub fn domain_names(&self) -> &[String] {
        &self.domain
    }

    pub fn element(&self, name: &str) -> Option<Value> {
        self.domain.iter().position(|d| d == name).map(|i| Value(i as u32))
    }

    pub fn element_name(&self, v: Value) -> &str {
        &self.domain[v.0 as usize]
    }

    fn table_index(&self, args: &[Value]) -> usize {
        let size = self.domain.len();
        args.iter().fold(0usize, |acc, v| acc * size + v.0 as usize)
    }

    pub fn apply_func(&self, name: &str, args: &[Value]) -> Result<Value, EvalError> {
        let table = self
            .func_tables
            .get(name)
            .ok_or_else(|| EvalError::UnknownSymbol(String::from(name)))?;
        if self.sig.function_arity(name) != Some(args.len()) {
            return Err(EvalError::ArityMismatch(String::from(name)));
        }
        Ok(table[self.table_index(args)])
    }

    pub fn test_rel(&self, name: &str, args: &[Value]) -> Result<bool, EvalError> {
        let table = self
            .rel_tables
            .get(name)
            .ok_or_else(|| EvalError::UnknownSymbol(String::from(name)))?;
        if self.sig.relation_arity(name) != Some(args.len()) {
            return Err(EvalError::ArityMismatch(String::from(name)));
        }
        Ok(table[self.table_index(args)])
    }
}

/// A partial assignment of domain values to rigid variable names.
pub type RigidEnv = BTreeMap<String, Value>;

/// Evaluation-time failures on ASTs that slipped past the parser's checks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EvalError {
    UnboundRigid(String),
    UnknownFlexible(String),
    UnknownSymbol(String),
    ArityMismatch(String),
    /// The trace's state width does not match the declared flexible
    /// variables.
    TraceWidth,
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::UnboundRigid(n) => write!(f, "unbound rigid variable `{n}`"),
            EvalError::UnknownFlexible(n) => write!(f, "unknown flexible variable `{n}`"),
            EvalError::UnknownSymbol(n) => write!(f, "unknown symbol `{n}`"),
            EvalError::ArityMismatch(n) => write!(f, "arity mismatch for `{n}`"),
            EvalError::TraceWidth => {
                f.write_str("trace width does not match the declared flexible variables")
            }
        }
    }
}

/// Evaluates a term against a rigid environment and a state pair. Flexible
/// variables read from `sigma`, primed ones from `sigma_prime`.
pub fn eval_term(
    interp: &Interpretation,
    flex: &FlexCtx,
    term: &Term,
    theta: &RigidEnv,
    sigma: &State,
    sigma_prime: &State,
) -> Result<Value, EvalError> {
    match term {
        Term::RigidVar(x) => theta.get(x).copied().ok_or_else(|| EvalError::UnboundRigid(x.clone())),
        Term::FlexVar(x) => {
            let slot = flex.slot(x).ok_or_else(|| EvalError::UnknownFlexible(x.clone()))?;
            Ok(sigma.get(slot))
        }
        Term::PrimedFlexVar(x) => {
            let slot = flex.slot(x).ok_or_else(|| EvalError::UnknownFlexible(x.clone()))?;
            Ok(sigma_prime.get(slot))
        }
        Term::App(f, args) => {
            let mut vals = Vec::with_capacity(args.len());
            for a in args {
                vals.push(eval_term(interp, flex, a, theta, sigma, sigma_prime)?);
            }
            interp.apply_func(f, &vals)
        }
    }
}

/// Evaluates an action against a rigid environment and a state pair.
/// Rigid quantification enumerates the finite domain; the sugar
/// connectives evaluate by their defining equations.
pub fn eval_action(
    interp: &Interpretation,
    flex: &FlexCtx,
    action: &Action,
    theta: &RigidEnv,
    sigma: &State,
    sigma_prime: &State,
) -> Result<bool, EvalError> {
    match action {
        Action::Rel(r, args) => {
            let mut vals = Vec::with_capacity(args.len());
            for a in args {
                vals.push(eval_term(interp, flex, a, theta, sigma, sigma_prime)?);
            }
            interp.test_rel(r, &vals)
        }
        Action::Eq(a, b) => Ok(eval_term(interp, flex, a, theta, sigma, sigma_prime)?
            == eval_term(interp, flex, b, theta, sigma, sigma_prime)?),
        Action::ForallRigid(x, body) => {
            for v in 0..interp.domain_size() {
                let mut env = theta.clone();
                env.insert(x.clone(), Value(v as u32));
                if !eval_action(interp, flex, body, &env, sigma, sigma_prime)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        Action::And(a, b) => Ok(eval_action(interp, flex, a, theta, sigma, sigma_prime)?
            && eval_action(interp, flex, b, theta, sigma, sigma_prime)?),
        Action::Not(a) => Ok(!eval_action(interp, flex, a, theta, sigma, sigma_prime)?),
        Action::Or(a, b) => Ok(eval_action(interp, flex, a, theta, sigma, sigma_prime)?
            || eval_action(interp, flex, b, theta, sigma, sigma_prime)?),
        Action::Implies(a, b) => Ok(!eval_action(interp, flex, a, theta, sigma, sigma_prime)?
            || eval_action(interp, flex, b, theta, sigma, sigma_prime)?),
        Action::ExistsRigid(x, body) => {
            for v in 0..interp.domain_size() {
                let mut env = theta.clone();
                env.insert(x.clone(), Value(v as u32));
                if eval_action(interp, flex, body, &env, sigma, sigma_prime)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
    }
}
