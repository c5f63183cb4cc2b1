//! Pattern data model, the built-in catalog, and catalog file loading.
//!
//! A [`Catalog`] is an id-keyed set of [`Pattern`] records. Behavioral
//! patterns form a three-layer hierarchy (strategy, architectural,
//! structural) through their `parents` lists; state patterns stand apart and
//! scope the protection domain of a solution.

mod builtin;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canonical;
use crate::costmodel::CostVector;

pub use builtin::{builtin_catalog, INFERRED_PARENT_LINKS, TABLE_PARENT_LINKS};

/// Upper end of the ordinal design-complexity scale.
pub const MAX_COMPLEXITY: u8 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PatternClass {
    Strategy,
    Architectural,
    Structural,
    State,
}

impl PatternClass {
    pub const ALL: [PatternClass; 4] = [
        PatternClass::Strategy,
        PatternClass::Architectural,
        PatternClass::Structural,
        PatternClass::State,
    ];

    /// Position in the abstract-to-concrete behavioral order. `None` for state patterns.
    pub fn layer(self) -> Option<u8> {
        match self {
            PatternClass::Strategy => Some(0),
            PatternClass::Architectural => Some(1),
            PatternClass::Structural => Some(2),
            PatternClass::State => None,
        }
    }

    pub fn is_behavioral(self) -> bool {
        self != PatternClass::State
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PatternClass::Strategy => "Strategy",
            PatternClass::Architectural => "Architectural",
            PatternClass::Structural => "Structural",
            PatternClass::State => "State",
        }
    }
}

impl fmt::Display for PatternClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PatternClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PatternClass::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown pattern class `{s}`"))
    }
}

/// The event taxonomy: a fault activates into an error, an error that reaches
/// the service interface is a failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FaultModelClass {
    Fault,
    Error,
    Failure,
}

impl FaultModelClass {
    pub const ALL: [FaultModelClass; 3] =
        [FaultModelClass::Fault, FaultModelClass::Error, FaultModelClass::Failure];

    pub fn as_str(self) -> &'static str {
        match self {
            FaultModelClass::Fault => "Fault",
            FaultModelClass::Error => "Error",
            FaultModelClass::Failure => "Failure",
        }
    }
}

impl fmt::Display for FaultModelClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FaultModelClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FaultModelClass::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown fault model `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Capability {
    Detection,
    Containment,
    Recovery,
    Masking,
}

impl Capability {
    pub const ALL: [Capability; 4] = [
        Capability::Detection,
        Capability::Containment,
        Capability::Recovery,
        Capability::Masking,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Capability::Detection => "Detection",
            Capability::Containment => "Containment",
            Capability::Recovery => "Recovery",
            Capability::Masking => "Masking",
        }
    }
}

impl fmt::Display for Capability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Capability {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Capability::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown capability `{s}`"))
    }
}

/// Admissible values of a pattern parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ParameterDomain {
    /// Closed real interval `[min, max]`.
    Interval { min: f64, max: f64 },
    /// Integers `min, min + step, ...` up to `max` (unbounded when absent).
    Integers {
        min: i64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max: Option<i64>,
        step: i64,
    },
    /// An explicit enumerated set.
    Set { values: Vec<f64> },
}

impl ParameterDomain {
    pub fn contains(&self, value: f64) -> bool {
        if !value.is_finite() {
            return false;
        }
        match self {
            ParameterDomain::Interval { min, max } => *min <= value && value <= *max,
            ParameterDomain::Integers { min, max, step } => {
                if value.fract() != 0.0 || value < *min as f64 {
                    return false;
                }
                if let Some(max) = max {
                    if value > *max as f64 {
                        return false;
                    }
                }
                let offset = value as i64 - min;
                *step > 0 && offset % step == 0
            }
            ParameterDomain::Set { values } => values.contains(&value),
        }
    }

    /// Checks the domain itself is well formed.
    pub fn check(&self) -> Result<(), String> {
        match self {
            ParameterDomain::Interval { min, max } => {
                if !min.is_finite() || !max.is_finite() {
                    return Err("interval bounds must be finite".into());
                }
                if min > max {
                    return Err(format!("interval bounds out of order: {min} > {max}"));
                }
            }
            ParameterDomain::Integers { min, max, step } => {
                if *step <= 0 {
                    return Err("integer step must be positive".into());
                }
                if let Some(max) = max {
                    if max < min {
                        return Err(format!("integer bounds out of order: {min} > {max}"));
                    }
                }
            }
            ParameterDomain::Set { values } => {
                if values.is_empty() {
                    return Err("enumerated domain is empty".into());
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err("enumerated domain holds a non-finite value".into());
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for ParameterDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParameterDomain::Interval { min, max } => write!(f, "[{min}, {max}]"),
            ParameterDomain::Integers { min, max, step } => {
                let upper = max.map_or("inf".to_string(), |m| m.to_string());
                write!(f, "{{{min}..{upper} step {step}}}")
            }
            ParameterDomain::Set { values } => {
                let vs: Vec<String> = values.iter().map(|v| v.to_string()).collect();
                write!(f, "{{{}}}", vs.join(", "))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterSpec {
    pub name: String,
    pub unit: String,
    pub domain: ParameterDomain,
    pub default: f64,
}

impl ParameterSpec {
    pub fn new(name: &str, unit: &str, domain: ParameterDomain, default: f64) -> Self {
        Self {
            name: name.to_string(),
            unit: unit.to_string(),
            domain,
            default,
        }
    }
}

/// One catalog entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pattern {
    pub id: String,
    pub name: String,
    pub class: PatternClass,
    #[serde(default)]
    pub parents: Vec<String>,
    #[serde(default)]
    pub problem: String,
    #[serde(default)]
    pub solution: String,
    #[serde(default)]
    pub forces: String,
    #[serde(default)]
    pub consequences: String,
    #[serde(default)]
    pub handles: BTreeSet<FaultModelClass>,
    #[serde(default)]
    pub capabilities: BTreeSet<Capability>,
    #[serde(default)]
    pub parameters: Vec<ParameterSpec>,
    #[serde(default)]
    pub base_cost: CostVector,
    pub complexity: u8,
}

impl Pattern {
    pub fn parameter(&self, name: &str) -> Option<&ParameterSpec> {
        self.parameters.iter().find(|p| p.name == name)
    }

    /// Parameter name to default value.
    pub fn default_bindings(&self) -> BTreeMap<String, f64> {
        self.parameters
            .iter()
            .map(|p| (p.name.clone(), p.default))
            .collect()
    }
}

/// Serialized form of a catalog document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogFile {
    pub version: String,
    pub patterns: Vec<Pattern>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Catalog {
    pub version: String,
    pub patterns: BTreeMap<String, Pattern>,
}

impl Catalog {
    pub fn new(version: impl Into<String>, patterns: impl IntoIterator<Item = Pattern>) -> Self {
        Self {
            version: version.into(),
            patterns: patterns.into_iter().map(|p| (p.id.clone(), p)).collect(),
        }
    }

    pub fn get(&self, id: &str) -> Option<&Pattern> {
        self.patterns.get(id)
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Pattern> {
        self.patterns.values()
    }

    pub fn of_class(&self, class: PatternClass) -> impl Iterator<Item = &Pattern> {
        self.patterns.values().filter(move |p| p.class == class)
    }

    /// Pattern counts in `PatternClass::ALL` order.
    pub fn class_histogram(&self) -> [usize; 4] {
        let mut counts = [0; 4];
        for p in self.patterns.values() {
            let idx = PatternClass::ALL.iter().position(|c| *c == p.class).unwrap();
            counts[idx] += 1;
        }
        counts
    }

    pub fn to_file(&self) -> CatalogFile {
        CatalogFile {
            version: self.version.clone(),
            patterns: self.patterns.values().cloned().collect(),
        }
    }

    /// Canonical JSON: sorted keys, two-space indentation, trailing newline.
    pub fn to_json(&self) -> String {
        canonical::to_canonical_json(&self.to_file())
    }
}

impl Serialize for Catalog {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_file().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Catalog {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let file = CatalogFile::deserialize(deserializer)?;
        Ok(Catalog::new(file.version, file.patterns))
    }
}

/// A single broken rule found by a validator.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Violation {
    /// Stable machine-readable rule key.
    pub rule: String,
    /// Pattern id (or edge description) the violation is about.
    pub subject: String,
    pub message: String,
}

impl Violation {
    pub fn new(rule: &str, subject: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            rule: rule.to_string(),
            subject: subject.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}: {}", self.rule, self.subject, self.message)
    }
}

pub type ViolationList = Vec<Violation>;

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("catalog parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("catalog schema error: {0}")]
    Schema(String),
    #[error("catalog has {} violation(s): {}", .0.len(), join_violations(.0))]
    Invalid(ViolationList),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

fn is_valid_id(id: &str) -> bool {
    !id.is_empty()
        && !id.starts_with('-')
        && !id.ends_with('-')
        && !id.contains("--")
        && id
            .chars()
            .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '-')
}

/// Returns every invariant violation in `catalog`; an empty list means valid.
pub fn validate_catalog(catalog: &Catalog) -> ViolationList {
    let mut out = Vec::new();
    for (key, p) in &catalog.patterns {
        let id = p.id.as_str();
        if key != id {
            out.push(Violation::new("id-key-mismatch", id, format!("stored under key `{key}`")));
        }
        if !is_valid_id(id) {
            out.push(Violation::new(
                "id-format",
                id,
                "id must be lowercase, hyphenated ascii",
            ));
        }
        if !(1..=MAX_COMPLEXITY).contains(&p.complexity) {
            out.push(Violation::new(
                "complexity-range",
                id,
                format!("complexity {} outside 1..={MAX_COMPLEXITY}", p.complexity),
            ));
        }
        if let Err(e) = p.base_cost.check() {
            out.push(Violation::new("base-cost", id, e));
        }

        let mut seen_params = BTreeSet::new();
        for spec in &p.parameters {
            if !seen_params.insert(spec.name.as_str()) {
                out.push(Violation::new(
                    "parameter-duplicate",
                    id,
                    format!("parameter `{}` declared twice", spec.name),
                ));
            }
            if let Err(e) = spec.domain.check() {
                out.push(Violation::new(
                    "parameter-domain",
                    id,
                    format!("parameter `{}`: {e}", spec.name),
                ));
            } else if !spec.domain.contains(spec.default) {
                out.push(Violation::new(
                    "parameter-default",
                    id,
                    format!(
                        "parameter `{}` default {} outside domain {}",
                        spec.name, spec.default, spec.domain
                    ),
                ));
            }
        }

        let mut seen_parents = BTreeSet::new();
        for parent in &p.parents {
            if !seen_parents.insert(parent.as_str()) {
                out.push(Violation::new(
                    "parent-duplicate",
                    id,
                    format!("parent `{parent}` listed twice"),
                ));
            }
            if parent == id {
                out.push(Violation::new("parent-self", id, "pattern lists itself as parent"));
            } else if !catalog.patterns.contains_key(parent) {
                out.push(Violation::new(
                    "parent-dangling",
                    id,
                    format!("parent `{parent}` does not exist"),
                ));
            }
        }

        match p.class {
            PatternClass::Strategy => {
                if !p.parents.is_empty() {
                    out.push(Violation::new(
                        "strategy-root",
                        id,
                        "strategy pattern must be a root",
                    ));
                }
            }
            PatternClass::State => {
                if !p.parents.is_empty() {
                    out.push(Violation::new(
                        "state-root",
                        id,
                        "state pattern must not have parents",
                    ));
                }
                if !p.handles.is_empty() {
                    out.push(Violation::new(
                        "state-handles",
                        id,
                        "state pattern must not handle fault models",
                    ));
                }
                if p.capabilities.iter().any(|c| *c != Capability::Containment) {
                    out.push(Violation::new(
                        "state-capabilities",
                        id,
                        "state pattern capabilities must be within {Containment}",
                    ));
                }
            }
            PatternClass::Architectural | PatternClass::Structural => {
                if p.parents.is_empty() {
                    out.push(Violation::new(
                        "derivative-parent",
                        id,
                        format!("{} pattern must derive from a parent", p.class.as_str().to_lowercase()),
                    ));
                }
                let (want, rule, msg) = if p.class == PatternClass::Architectural {
                    (
                        PatternClass::Strategy,
                        "architectural-parent-class",
                        "architectural parent must be strategy",
                    )
                } else {
                    (
                        PatternClass::Architectural,
                        "structural-parent-class",
                        "structural parent must be architectural",
                    )
                };
                let mut inherited = BTreeSet::new();
                for parent in &p.parents {
                    if let Some(q) = catalog.patterns.get(parent) {
                        if q.class != want {
                            out.push(Violation::new(
                                rule,
                                id,
                                format!("{msg} (`{parent}` is {})", q.class),
                            ));
                        }
                        inherited.extend(q.handles.iter().copied());
                    }
                }
                let escaped: Vec<_> = p.handles.difference(&inherited).collect();
                if !p.parents.is_empty() && !escaped.is_empty() {
                    let names: Vec<_> = escaped.iter().map(|f| f.as_str()).collect();
                    out.push(Violation::new(
                        "handles-inheritance",
                        id,
                        format!("handles {} not handled by any parent", names.join(", ")),
                    ));
                }
            }
        }
    }
    out
}

/// Loads a catalog document and merges it over the built-in catalog
/// (last writer wins per id). An empty or whitespace-only document yields the
/// built-in catalog unchanged.
pub fn load_catalog(document: &str) -> Result<Catalog, CatalogError> {
    let mut catalog = builtin_catalog();
    if document.trim().is_empty() {
        return Ok(catalog);
    }
    let value: serde_json::Value =
        serde_json::from_str(document).map_err(|e| CatalogError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
    let file: CatalogFile =
        serde_json::from_value(value).map_err(|e| CatalogError::Schema(e.to_string()))?;
    if !file.version.is_empty() {
        catalog.version = file.version;
    }
    for p in file.patterns {
        catalog.patterns.insert(p.id.clone(), p);
    }
    let violations = validate_catalog(&catalog);
    if violations.is_empty() {
        Ok(catalog)
    } else {
        Err(CatalogError::Invalid(violations))
    }
}

/// Parses a complete catalog document without merging over the built-in set.
pub fn parse_catalog_exact(document: &str) -> Result<Catalog, CatalogError> {
    let value: serde_json::Value =
        serde_json::from_str(document).map_err(|e| CatalogError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
    let file: CatalogFile =
        serde_json::from_value(value).map_err(|e| CatalogError::Schema(e.to_string()))?;
    Ok(Catalog::new(file.version, file.patterns))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn interval(min: f64, max: f64) -> ParameterDomain {
        ParameterDomain::Interval { min, max }
    }

    #[test]
    fn integer_domain_membership() {
        let odd = ParameterDomain::Integers { min: 3, max: None, step: 2 };
        assert!(odd.contains(3.0));
        assert!(odd.contains(5.0));
        assert!(odd.contains(101.0));
        assert!(!odd.contains(4.0));
        assert!(!odd.contains(1.0));
        assert!(!odd.contains(3.5));
        assert!(!odd.contains(f64::NAN));
    }

    #[test]
    fn interval_domain_checks() {
        assert!(interval(0.0, 1.0).check().is_ok());
        assert!(interval(1.0, 0.0).check().is_err());
        assert!(interval(0.0, f64::INFINITY).check().is_err());
        assert!(interval(0.0, 1.0).contains(1.0));
        assert!(!interval(0.0, 1.0).contains(1.0001));
    }

    #[test]
    fn enum_parsing_is_case_insensitive() {
        assert_eq!("structural".parse::<PatternClass>().unwrap(), PatternClass::Structural);
        assert_eq!("FAILURE".parse::<FaultModelClass>().unwrap(), FaultModelClass::Failure);
        assert_eq!("masking".parse::<Capability>().unwrap(), Capability::Masking);
        assert!("behavioral".parse::<PatternClass>().is_err());
    }

    #[test]
    fn strategy_with_parent_is_flagged() {
        let mut c = builtin_catalog();
        c.patterns.get_mut("recovery").unwrap().parents = vec!["compensation".into()];
        let v = validate_catalog(&c);
        assert!(v.iter().any(|x| x.message == "strategy pattern must be a root"), "{v:?}");
    }

    #[test]
    fn class_pair_table_for_parents() {
        // Exhaustive (child class, parent class) table: only Architectural->Strategy and
        // Structural->Architectural are legal links.
        let child_of = |class: PatternClass| match class {
            PatternClass::Strategy => "recovery",
            PatternClass::Architectural => "checkpoint-recovery",
            PatternClass::Structural => "rollback",
            PatternClass::State => "dynamic-state",
        };
        for child in PatternClass::ALL {
            for parent in PatternClass::ALL {
                let mut c = builtin_catalog();
                let parent_id = child_of(parent).to_string();
                let child_id = match (child, parent) {
                    // use a distinct pattern of the same class so the link is not a self-loop
                    (a, b) if a == b => match a {
                        PatternClass::Strategy => "compensation",
                        PatternClass::Architectural => "redundancy",
                        PatternClass::Structural => "rollforward",
                        PatternClass::State => "persistent-state",
                    },
                    _ => child_of(child),
                };
                c.patterns.get_mut(child_id).unwrap().parents = vec![parent_id.clone()];
                let v = validate_catalog(&c);
                let legal = matches!(
                    (child, parent),
                    (PatternClass::Architectural, PatternClass::Strategy)
                        | (PatternClass::Structural, PatternClass::Architectural)
                );
                let class_rules = [
                    "strategy-root",
                    "state-root",
                    "architectural-parent-class",
                    "structural-parent-class",
                ];
                let flagged = v.iter().any(|x| class_rules.contains(&x.rule.as_str()));
                assert_eq!(!flagged, legal, "{child:?} <- {parent:?}: {v:?}");
                if child == PatternClass::Structural && parent == PatternClass::Strategy {
                    assert!(v
                        .iter()
                        .any(|x| x.message.starts_with("structural parent must be architectural")));
                }
            }
        }
    }

    #[test]
    fn state_pattern_rules() {
        let mut c = builtin_catalog();
        let p = c.patterns.get_mut("stateless").unwrap();
        p.handles.insert(FaultModelClass::Error);
        p.capabilities.insert(Capability::Recovery);
        let rules: Vec<_> = validate_catalog(&c).into_iter().map(|v| v.rule).collect();
        assert!(rules.contains(&"state-handles".to_string()));
        assert!(rules.contains(&"state-capabilities".to_string()));
    }

    #[test]
    fn inheritance_rule_catches_escaping_fault_models() {
        let mut c = builtin_catalog();
        c.patterns
            .get_mut("rollback")
            .unwrap()
            .handles
            .insert(FaultModelClass::Fault);
        let v = validate_catalog(&c);
        assert!(v.iter().any(|x| x.rule == "handles-inheritance" && x.subject == "rollback"));
    }

    #[test]
    fn default_outside_domain_is_flagged() {
        let mut c = builtin_catalog();
        c.patterns.get_mut("n-modular-redundancy").unwrap().parameters[0].default = 4.0;
        let v = validate_catalog(&c);
        assert!(v.iter().any(|x| x.rule == "parameter-default"), "{v:?}");
    }

    #[test]
    fn validation_does_not_mutate() {
        let c = builtin_catalog();
        let before = c.clone();
        let _ = validate_catalog(&c);
        assert_eq!(c, before);
    }

    #[test]
    fn load_empty_document_is_identity() {
        assert_eq!(load_catalog("").unwrap(), builtin_catalog());
        assert_eq!(load_catalog("  \n").unwrap(), builtin_catalog());
    }

    #[test]
    fn load_adds_user_pattern() {
        let doc = r#"{
          "version": "site-1",
          "patterns": [{
            "id": "proactive-migration", "name": "Proactive Migration",
            "class": "Structural", "parents": ["reconfiguration"],
            "handles": ["Fault"], "capabilities": ["Recovery"],
            "complexity": 3
          }]
        }"#;
        let c = load_catalog(doc).unwrap();
        assert_eq!(c.len(), 24);
        assert_eq!(c.version, "site-1");
        assert_eq!(c.get("proactive-migration").unwrap().class, PatternClass::Structural);
    }

    #[test]
    fn load_rejects_dangling_parent() {
        let doc = r#"{"version": "x", "patterns": [{
            "id": "orphan", "name": "Orphan", "class": "Structural",
            "parents": ["nonexistent"], "complexity": 1 }]}"#;
        match load_catalog(doc) {
            Err(CatalogError::Invalid(v)) => {
                assert!(v.iter().any(|x| x.message.contains("nonexistent")), "{v:?}")
            }
            other => panic!("expected schema violation, got {other:?}"),
        }
    }

    #[test]
    fn load_reports_parse_position() {
        let doc = "{\n  \"version\": \"x\",\n  \"patterns\": [\n}";
        match load_catalog(doc) {
            Err(CatalogError::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn load_rejects_unknown_class_and_fields() {
        let bad_class = r#"{"version": "x", "patterns": [{
            "id": "a", "name": "A", "class": "Behavioral", "complexity": 1 }]}"#;
        assert!(matches!(load_catalog(bad_class), Err(CatalogError::Schema(_))));
        let extra = r#"{"version": "x", "patterns": [{
            "id": "a", "name": "A", "class": "State", "complexity": 1, "colour": "red" }]}"#;
        assert!(matches!(load_catalog(extra), Err(CatalogError::Schema(_))));
    }

    #[test]
    fn override_is_last_writer_wins() {
        let doc = r#"{"version": "", "patterns": [
            {"id": "monitoring", "name": "First", "class": "Structural",
             "parents": ["fault-diagnosis"], "handles": ["Fault"], "complexity": 2},
            {"id": "monitoring", "name": "Second", "class": "Structural",
             "parents": ["fault-diagnosis"], "handles": ["Fault"], "complexity": 2}
        ]}"#;
        let c = load_catalog(doc).unwrap();
        assert_eq!(c.len(), 23);
        assert_eq!(c.get("monitoring").unwrap().name, "Second");
        assert_eq!(c.version, builtin_catalog().version);
    }
}
