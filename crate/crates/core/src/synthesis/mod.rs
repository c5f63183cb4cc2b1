//! Derives ranked resilience solutions from a design query.
//!
//! A candidate binds one state pattern and instantiates a small set of
//! structural patterns. It must deliver every requested capability for every
//! requested fault model, where an instance delivers capability `c` for fault
//! model `f` when it has `c` and one of its strategy roots handles `f`.
//! Containment is delivered by any state binding other than `stateless`.
//! Candidates are minimal and conflict free; the four entry modes differ only
//! in how the graph is traversed to find relevant patterns.

mod explain;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::catalog::{Capability, Catalog, FaultModelClass, PatternClass};
use crate::costmodel::{self, CostError, CostVector, CostWeights};
use crate::graph::{ancestry, GraphError, PatternGraph, RelationKind};
use crate::system::SystemModel;

pub use explain::{explain, SequenceNarrative};

/// Id of the null state pattern, which scopes no protection domain.
pub const STATELESS: &str = "stateless";

/// Default cap on structural instances per candidate.
pub const DEFAULT_MAX_INSTANCES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EntryMode {
    DomainFirst,
    FaultModelFirst,
    CapabilityFirst,
    ImplementationFirst,
}

impl EntryMode {
    pub const ALL: [EntryMode; 4] = [
        EntryMode::DomainFirst,
        EntryMode::FaultModelFirst,
        EntryMode::CapabilityFirst,
        EntryMode::ImplementationFirst,
    ];
}

impl FromStr for EntryMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match norm.as_str() {
            "domainfirst" | "domain" => Ok(EntryMode::DomainFirst),
            "faultmodelfirst" | "faultmodel" | "fault" => Ok(EntryMode::FaultModelFirst),
            "capabilityfirst" | "capability" => Ok(EntryMode::CapabilityFirst),
            "implementationfirst" | "implementation" => Ok(EntryMode::ImplementationFirst),
            _ => Err(format!("unknown entry mode `{s}`")),
        }
    }
}

/// Requested protection domain: a specific state pattern or any.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum Domain {
    #[default]
    Any,
    State(String),
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Any => f.write_str("Any"),
            Domain::State(id) => f.write_str(id),
        }
    }
}

impl FromStr for Domain {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            Err("empty domain".into())
        } else if s.eq_ignore_ascii_case("any") {
            Ok(Domain::Any)
        } else {
            Ok(Domain::State(s.to_string()))
        }
    }
}

impl Serialize for Domain {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Domain {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn default_max_candidates() -> usize {
    10
}

fn default_max_instances() -> usize {
    DEFAULT_MAX_INSTANCES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignQuery {
    pub fault_models: BTreeSet<FaultModelClass>,
    #[serde(default)]
    pub domain: Domain,
    pub capabilities: BTreeSet<Capability>,
    pub entry_mode: EntryMode,
    /// Structural patterns every candidate must contain.
    #[serde(default)]
    pub seed_patterns: BTreeSet<String>,
    #[serde(default)]
    pub exclude: BTreeSet<String>,
    #[serde(default)]
    pub weights: CostWeights,
    #[serde(default = "default_max_candidates")]
    pub max_candidates: usize,
    #[serde(default = "default_max_instances")]
    pub max_instances: usize,
    /// Machine used for cost scoring; [`SystemModel::reference`] when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemModel>,
}

impl DesignQuery {
    pub fn new(
        fault_models: impl IntoIterator<Item = FaultModelClass>,
        capabilities: impl IntoIterator<Item = Capability>,
    ) -> Self {
        Self {
            fault_models: fault_models.into_iter().collect(),
            domain: Domain::Any,
            capabilities: capabilities.into_iter().collect(),
            entry_mode: EntryMode::FaultModelFirst,
            seed_patterns: BTreeSet::new(),
            exclude: BTreeSet::new(),
            weights: CostWeights::uniform(),
            max_candidates: default_max_candidates(),
            max_instances: DEFAULT_MAX_INSTANCES,
            system: None,
        }
    }

    pub fn with_mode(mut self, mode: EntryMode) -> Self {
        self.entry_mode = mode;
        self
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    pub fn with_seeds<'a>(mut self, seeds: impl IntoIterator<Item = &'a str>) -> Self {
        self.seed_patterns = seeds.into_iter().map(str::to_string).collect();
        self
    }

    pub fn system_model(&self) -> SystemModel {
        self.system.clone().unwrap_or_else(SystemModel::reference)
    }

    /// The coverage units a candidate must satisfy: every requested fault
    /// model paired with every requested non-containment capability, or with
    /// "any capability" when containment is the only request.
    pub fn coverage_units(&self) -> Vec<(FaultModelClass, Option<Capability>)> {
        let behavioral: Vec<Capability> = self
            .capabilities
            .iter()
            .copied()
            .filter(|c| *c != Capability::Containment)
            .collect();
        let mut units = Vec::new();
        for f in &self.fault_models {
            if behavioral.is_empty() {
                units.push((*f, None));
            } else {
                units.extend(behavioral.iter().map(|c| (*f, Some(*c))));
            }
        }
        units
    }

    pub fn needs_containment(&self) -> bool {
        self.capabilities.contains(&Capability::Containment)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternInstance {
    pub pattern: String,
    #[serde(default)]
    pub bindings: BTreeMap<String, f64>,
}

impl PatternInstance {
    pub fn new(pattern: &str) -> Self {
        Self {
            pattern: pattern.to_string(),
            bindings: BTreeMap::new(),
        }
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.bindings.insert(name.to_string(), value);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionCandidate {
    pub state_binding: String,
    pub instances: Vec<PatternInstance>,
    /// Derivation chains per instance, concrete first.
    #[serde(default)]
    pub chains: BTreeMap<String, Vec<Vec<String>>>,
    #[serde(default)]
    pub covered_capabilities: BTreeSet<Capability>,
    #[serde(default)]
    pub covered_fault_models: BTreeSet<FaultModelClass>,
    #[serde(default)]
    pub cost: CostVector,
    #[serde(default)]
    pub score: f64,
    /// The pattern language sequence: state binding, then strategy,
    /// architectural and structural patterns.
    #[serde(default)]
    pub sequence: Vec<String>,
}

impl SolutionCandidate {
    /// A bare candidate with only a binding and instances, as used by
    /// simulation configs.
    pub fn bare(state_binding: &str, instances: Vec<PatternInstance>) -> Self {
        Self {
            state_binding: state_binding.to_string(),
            instances,
            chains: BTreeMap::new(),
            covered_capabilities: BTreeSet::new(),
            covered_fault_models: BTreeSet::new(),
            cost: CostVector::ZERO,
            score: 0.0,
            sequence: Vec::new(),
        }
    }

    pub fn pattern_ids(&self) -> impl Iterator<Item = &str> {
        self.instances.iter().map(|i| i.pattern.as_str())
    }

    /// The instance set as sorted ids.
    pub fn instance_set(&self) -> BTreeSet<String> {
        self.pattern_ids().map(str::to_string).collect()
    }
}

/// Which constraint made a query unsatisfiable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "constraint", rename_all = "snake_case")]
pub enum NearestMiss {
    /// No admissible structural pattern delivers this capability for this fault model.
    NoProvider {
        fault_model: FaultModelClass,
        capability: Option<Capability>,
    },
    /// Containment was requested but no state binding other than stateless is admissible.
    ContainmentUnavailable { domain: String },
    /// Every state pattern is excluded or ruled out by the domain.
    NoStateBinding { domain: String },
    /// Two required patterns (or a required pattern and every binding) conflict.
    SeedConflict { first: String, second: String },
    /// More seeds than the instance cap allows.
    TooManySeeds { seeds: usize, max_instances: usize },
    /// Providers exist but no minimal combination within the instance cap
    /// satisfies the composition rules.
    NoCompatibleCombination { max_instances: usize },
}

impl fmt::Display for NearestMiss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NearestMiss::NoProvider { fault_model, capability: Some(c) } => write!(
                f,
                "no admissible structural pattern provides {c} for {fault_model} events"
            ),
            NearestMiss::NoProvider { fault_model, capability: None } => write!(
                f,
                "no admissible structural pattern handles {fault_model} events"
            ),
            NearestMiss::ContainmentUnavailable { domain } => write!(
                f,
                "containment requires a state binding other than `{STATELESS}`, but domain `{domain}` admits none"
            ),
            NearestMiss::NoStateBinding { domain } => {
                write!(f, "no admissible state binding for domain `{domain}`")
            }
            NearestMiss::SeedConflict { first, second } => write!(
                f,
                "required patterns `{first}` and `{second}` are joined by a conflict edge"
            ),
            NearestMiss::TooManySeeds { seeds, max_instances } => write!(
                f,
                "{seeds} required patterns exceed the cap of {max_instances} instances"
            ),
            NearestMiss::NoCompatibleCombination { max_instances } => write!(
                f,
                "no conflict-free minimal combination of at most {max_instances} instances covers the query"
            ),
        }
    }
}

#[derive(Debug, Error)]
pub enum SynthesisError {
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("unsatisfiable query: {0}")]
    Unsatisfiable(NearestMiss),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Cost(#[from] CostError),
}

/// Per-pattern facts synthesis needs, derived once from catalog and graph.
struct Facts<'a> {
    catalog: &'a Catalog,
    graph: &'a PatternGraph,
    roots: BTreeMap<String, BTreeSet<String>>,
    reach: BTreeMap<String, BTreeSet<FaultModelClass>>,
}

impl<'a> Facts<'a> {
    fn new(graph: &'a PatternGraph, catalog: &'a Catalog) -> Self {
        let mut roots = BTreeMap::new();
        let mut reach = BTreeMap::new();
        for p in catalog.iter().filter(|p| p.class.is_behavioral()) {
            let r = graph.roots_of(&p.id);
            let handled: BTreeSet<FaultModelClass> = r
                .iter()
                .filter_map(|id| catalog.get(id))
                .flat_map(|root| root.handles.iter().copied())
                .collect();
            roots.insert(p.id.clone(), r);
            reach.insert(p.id.clone(), handled);
        }
        Self { catalog, graph, roots, reach }
    }

    fn capabilities(&self, id: &str) -> &BTreeSet<Capability> {
        &self.catalog.get(id).expect("pattern in catalog").capabilities
    }

    fn provides(&self, id: &str, unit: (FaultModelClass, Option<Capability>)) -> bool {
        let (f, c) = unit;
        self.reach.get(id).is_some_and(|r| r.contains(&f))
            && c.is_none_or(|c| self.capabilities(id).contains(&c))
    }

    fn covers(&self, ids: &[&str], units: &[(FaultModelClass, Option<Capability>)]) -> bool {
        units.iter().all(|u| ids.iter().any(|id| self.provides(id, *u)))
    }

    fn conflict(&self, a: &str, b: &str) -> bool {
        self.graph.has_edge(a, b, RelationKind::Conflict)
    }

    /// Two members may be combined when paired by a used-with edge, or when
    /// their capabilities are disjoint and no conflict joins them.
    fn composable(&self, a: &str, b: &str) -> bool {
        if self.graph.has_edge(a, b, RelationKind::UsedWith) {
            return true;
        }
        self.capabilities(a).is_disjoint(self.capabilities(b)) && !self.conflict(a, b)
    }

    fn domain_allows(&self, state: &str, id: &str) -> bool {
        self.roots[id]
            .iter()
            .any(|r| self.graph.has_edge(state, r, RelationKind::Domain))
    }
}

/// Traversal of the graph for one entry mode: the visit order (for
/// explanations) and the structural patterns relevant to the query.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Traversal {
    pub entry_mode: EntryMode,
    pub visited: Vec<String>,
    pub pool: BTreeSet<String>,
}

fn validate_query(q: &DesignQuery, catalog: &Catalog) -> Result<(), SynthesisError> {
    let invalid = |m: String| Err(SynthesisError::InvalidQuery(m));
    if q.fault_models.is_empty() {
        return invalid("fault_models must not be empty".into());
    }
    if q.capabilities.is_empty() {
        return invalid("capabilities must not be empty".into());
    }
    if q.max_candidates == 0 {
        return invalid("max_candidates must be positive".into());
    }
    if q.max_instances == 0 {
        return invalid("max_instances must be positive".into());
    }
    if q.entry_mode == EntryMode::ImplementationFirst && q.seed_patterns.is_empty() {
        return invalid("ImplementationFirst requires at least one seed pattern".into());
    }
    if let Domain::State(id) = &q.domain {
        match catalog.get(id) {
            Some(p) if p.class == PatternClass::State => {}
            Some(p) => return invalid(format!("domain `{id}` is a {} pattern, not a state pattern", p.class)),
            None => return invalid(format!("unknown domain `{id}`")),
        }
    }
    for seed in &q.seed_patterns {
        match catalog.get(seed) {
            Some(p) if p.class == PatternClass::Structural => {}
            Some(p) => return invalid(format!("seed `{seed}` is a {} pattern, not structural", p.class)),
            None => return invalid(format!("unknown seed pattern `{seed}`")),
        }
        if q.exclude.contains(seed) {
            return invalid(format!("seed `{seed}` is also excluded"));
        }
    }
    for id in &q.exclude {
        if catalog.get(id).is_none() {
            return invalid(format!("unknown excluded pattern `{id}`"));
        }
    }
    if let Some(sys) = &q.system {
        sys.check().map_err(SynthesisError::InvalidQuery)?;
    }
    Ok(())
}

fn admissible_bindings(q: &DesignQuery, catalog: &Catalog) -> Vec<String> {
    catalog
        .of_class(PatternClass::State)
        .map(|p| p.id.clone())
        .filter(|id| match &q.domain {
            Domain::Any => true,
            Domain::State(want) => want == id,
        })
        .filter(|id| !q.exclude.contains(id))
        .filter(|id| !(q.needs_containment() && id == STATELESS))
        .collect()
}

fn is_relevant(facts: &Facts, q: &DesignQuery, id: &str) -> bool {
    q.seed_patterns.contains(id)
        || (!q.exclude.contains(id) && q.coverage_units().iter().any(|u| facts.provides(id, *u)))
}

fn descend(g: &PatternGraph, starts: &[String], visited: &mut Vec<String>) -> Vec<String> {
    let mut out = Vec::new();
    let mut queue: std::collections::VecDeque<String> = starts.iter().cloned().collect();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    while let Some(v) = queue.pop_front() {
        if !seen.insert(v.clone()) {
            continue;
        }
        visited.push(v.clone());
        if g.class_of(&v) == Some(PatternClass::Structural) {
            out.push(v.clone());
        }
        let mut next: Vec<&str> = g
            .edges_of_kind(RelationKind::Abstraction)
            .filter(|e| e.from == v)
            .map(|e| e.to.as_str())
            .collect();
        next.sort();
        queue.extend(next.into_iter().map(str::to_string));
    }
    out
}

fn traverse_with(facts: &Facts, q: &DesignQuery) -> Traversal {
    let g = facts.graph;
    let catalog = facts.catalog;
    let mut visited = Vec::new();
    let handles_requested = |root: &str| {
        catalog
            .get(root)
            .is_some_and(|p| !p.handles.is_disjoint(&q.fault_models))
    };
    let strategy_roots: Vec<String> = catalog
        .of_class(PatternClass::Strategy)
        .map(|p| p.id.clone())
        .collect();

    let found: Vec<String> = match q.entry_mode {
        EntryMode::DomainFirst => {
            let bindings = admissible_bindings(q, catalog);
            visited.extend(bindings.iter().cloned());
            let mut roots = BTreeSet::new();
            for b in &bindings {
                for e in g.edges_of_kind(RelationKind::Domain).filter(|e| &e.from == b) {
                    if handles_requested(&e.to) {
                        roots.insert(e.to.clone());
                    }
                }
            }
            let roots: Vec<String> = roots.into_iter().collect();
            descend(g, &roots, &mut visited)
        }
        EntryMode::FaultModelFirst => {
            let roots: Vec<String> = strategy_roots
                .iter()
                .filter(|r| handles_requested(r))
                .cloned()
                .collect();
            descend(g, &roots, &mut visited)
        }
        EntryMode::CapabilityFirst => {
            let wanted: BTreeSet<Capability> = q
                .capabilities
                .iter()
                .copied()
                .filter(|c| *c != Capability::Containment)
                .collect();
            let cluster: Vec<String> = catalog
                .of_class(PatternClass::Structural)
                .filter(|p| wanted.is_empty() || !p.capabilities.is_disjoint(&wanted))
                .map(|p| p.id.clone())
                .collect();
            for id in &cluster {
                visited.push(id.clone());
                // climb towards the roots to confirm the fault models handled
                for chain in ancestry(g, id).unwrap_or_default() {
                    visited.extend(chain.into_iter().skip(1));
                }
            }
            cluster
        }
        EntryMode::ImplementationFirst => {
            let mut out: Vec<String> = Vec::new();
            for seed in &q.seed_patterns {
                visited.push(seed.clone());
                for chain in ancestry(g, seed).unwrap_or_default() {
                    visited.extend(chain.into_iter().skip(1));
                }
                out.push(seed.clone());
            }
            let roots: Vec<String> = strategy_roots
                .iter()
                .filter(|r| handles_requested(r))
                .cloned()
                .collect();
            out.extend(descend(g, &roots, &mut visited));
            out
        }
    };
    let pool = found
        .into_iter()
        .filter(|id| is_relevant(facts, q, id))
        .collect();
    Traversal {
        entry_mode: q.entry_mode,
        visited,
        pool,
    }
}

/// Walks the graph the way the query's entry mode prescribes.
pub fn traverse(
    g: &PatternGraph,
    catalog: &Catalog,
    q: &DesignQuery,
) -> Result<Traversal, SynthesisError> {
    validate_query(q, catalog)?;
    let facts = Facts::new(g, catalog);
    Ok(traverse_with(&facts, q))
}

fn for_each_combination<F: FnMut(&[&str])>(items: &[&str], k: usize, f: &mut F) {
    fn rec<'a, F: FnMut(&[&str])>(
        items: &[&'a str],
        k: usize,
        start: usize,
        acc: &mut Vec<&'a str>,
        f: &mut F,
    ) {
        if acc.len() == k {
            f(acc);
            return;
        }
        for i in start..items.len() {
            if items.len() - i < k - acc.len() {
                break;
            }
            acc.push(items[i]);
            rec(items, k, i + 1, acc, f);
            acc.pop();
        }
    }
    rec(items, k, 0, &mut Vec::with_capacity(k), f);
}

fn build_sequence(
    facts: &Facts,
    binding: &str,
    chains: &BTreeMap<String, Vec<Vec<String>>>,
) -> Vec<String> {
    let mut by_layer: [BTreeSet<String>; 3] = Default::default();
    for chain_set in chains.values() {
        for chain in chain_set {
            for id in chain {
                if let Some(layer) = facts.graph.class_of(id).and_then(|c| c.layer()) {
                    by_layer[layer as usize].insert(id.clone());
                }
            }
        }
    }
    std::iter::once(binding.to_string())
        .chain(by_layer.into_iter().flatten())
        .collect()
}

fn make_candidate(
    facts: &Facts,
    q: &DesignQuery,
    sys: &SystemModel,
    binding: &str,
    members: &[&str],
) -> Result<SolutionCandidate, SynthesisError> {
    let mut ids: Vec<&str> = members.to_vec();
    ids.sort();
    let instances: Vec<PatternInstance> = ids
        .iter()
        .map(|id| PatternInstance {
            pattern: id.to_string(),
            bindings: facts.catalog.get(id).expect("member exists").default_bindings(),
        })
        .collect();
    let mut chains = BTreeMap::new();
    let mut covered_capabilities = BTreeSet::new();
    let mut covered_fault_models = BTreeSet::new();
    for id in &ids {
        chains.insert(id.to_string(), ancestry(facts.graph, id)?);
        covered_capabilities.extend(facts.capabilities(id).iter().copied());
        covered_fault_models.extend(facts.reach[*id].iter().copied());
    }
    if binding != STATELESS {
        covered_capabilities.insert(Capability::Containment);
    }
    let cost = costmodel::aggregate_cost(&instances, facts.catalog, sys)?;
    let score = costmodel::score(&cost, &q.weights, sys);
    let sequence = build_sequence(facts, binding, &chains);
    Ok(SolutionCandidate {
        state_binding: binding.to_string(),
        instances,
        chains,
        covered_capabilities,
        covered_fault_models,
        cost,
        score,
        sequence,
    })
}

fn diagnose(facts: &Facts, q: &DesignQuery, bindings: &[String]) -> NearestMiss {
    let domain = q.domain.to_string();
    if bindings.is_empty() {
        let states_without_containment: Vec<_> = facts
            .catalog
            .of_class(PatternClass::State)
            .filter(|p| match &q.domain {
                Domain::Any => true,
                Domain::State(want) => *want == p.id,
            })
            .filter(|p| !q.exclude.contains(&p.id))
            .collect();
        return if q.needs_containment() && !states_without_containment.is_empty() {
            NearestMiss::ContainmentUnavailable { domain }
        } else {
            NearestMiss::NoStateBinding { domain }
        };
    }
    let structural: Vec<&str> = facts
        .catalog
        .of_class(PatternClass::Structural)
        .map(|p| p.id.as_str())
        .filter(|id| !q.exclude.contains(*id))
        .collect();
    for unit in q.coverage_units() {
        if !structural.iter().any(|id| facts.provides(id, unit)) {
            return NearestMiss::NoProvider {
                fault_model: unit.0,
                capability: unit.1,
            };
        }
    }
    if q.seed_patterns.len() > q.max_instances {
        return NearestMiss::TooManySeeds {
            seeds: q.seed_patterns.len(),
            max_instances: q.max_instances,
        };
    }
    let seeds: Vec<&str> = q.seed_patterns.iter().map(String::as_str).collect();
    for (i, a) in seeds.iter().enumerate() {
        for b in &seeds[i + 1..] {
            if facts.conflict(a, b) {
                return NearestMiss::SeedConflict {
                    first: a.to_string(),
                    second: b.to_string(),
                };
            }
        }
    }
    for a in &seeds {
        if let Some(b) = bindings.iter().find(|b| facts.conflict(a, b)) {
            if bindings.iter().all(|b| facts.conflict(a, b)) {
                return NearestMiss::SeedConflict {
                    first: a.to_string(),
                    second: b.clone(),
                };
            }
        }
    }
    NearestMiss::NoCompatibleCombination {
        max_instances: q.max_instances,
    }
}

/// Every valid minimal candidate for `q`, ranked, ignoring `max_candidates`.
pub fn synthesize_all(
    g: &PatternGraph,
    catalog: &Catalog,
    q: &DesignQuery,
) -> Result<Vec<SolutionCandidate>, SynthesisError> {
    validate_query(q, catalog)?;
    let facts = Facts::new(g, catalog);
    let sys = q.system_model();
    let units = q.coverage_units();
    let bindings = admissible_bindings(q, catalog);
    let traversal = traverse_with(&facts, q);

    let seeds: Vec<&str> = q.seed_patterns.iter().map(String::as_str).collect();
    let optional: Vec<&str> = traversal
        .pool
        .iter()
        .map(String::as_str)
        .filter(|id| !q.seed_patterns.contains(*id))
        .collect();

    let mut out = Vec::new();
    let mut failure: Option<SynthesisError> = None;
    if seeds.len() <= q.max_instances {
        for extra in 0..=(q.max_instances - seeds.len()).min(optional.len()) {
            for_each_combination(&optional, extra, &mut |chosen| {
                if failure.is_some() {
                    return;
                }
                let members: Vec<&str> = seeds.iter().chain(chosen.iter()).copied().collect();
                if members.is_empty() || !facts.covers(&members, &units) {
                    return;
                }
                // minimal: dropping any optional member loses coverage
                let minimal = chosen.iter().all(|drop| {
                    let rest: Vec<&str> = members.iter().copied().filter(|m| m != drop).collect();
                    !facts.covers(&rest, &units)
                });
                if !minimal {
                    return;
                }
                for (i, a) in members.iter().enumerate() {
                    for b in &members[i + 1..] {
                        if !facts.composable(a, b) {
                            return;
                        }
                    }
                }
                for binding in &bindings {
                    let fits = members
                        .iter()
                        .all(|m| !facts.conflict(m, binding) && facts.domain_allows(binding, m));
                    if fits {
                        match make_candidate(&facts, q, &sys, binding, &members) {
                            Ok(c) => out.push(c),
                            Err(e) => failure = Some(e),
                        }
                    }
                }
            });
        }
    }
    if let Some(e) = failure {
        return Err(e);
    }
    if out.is_empty() {
        return Err(SynthesisError::Unsatisfiable(diagnose(&facts, q, &bindings)));
    }
    out.sort_by(|a, b| {
        a.score
            .total_cmp(&b.score)
            .then_with(|| a.sequence.cmp(&b.sequence))
            .then_with(|| a.instance_set().cmp(&b.instance_set()))
    });
    Ok(out)
}

/// Ranked candidates for `q`, at most `q.max_candidates` of them.
pub fn synthesize(
    g: &PatternGraph,
    catalog: &Catalog,
    q: &DesignQuery,
) -> Result<Vec<SolutionCandidate>, SynthesisError> {
    let mut all = synthesize_all(g, catalog, q)?;
    all.truncate(q.max_candidates);
    Ok(all)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompatibilityReport {
    pub ok: bool,
    /// Conflicting pairs among members and the state binding.
    pub conflicts: Vec<(String, String)>,
    /// Requested capabilities not delivered for every requested fault model.
    pub capability_gaps: Vec<Capability>,
    /// Requested fault models no member reaches.
    pub fault_model_gaps: Vec<FaultModelClass>,
}

/// Checks a candidate for declared conflicts and, given a query, for coverage gaps.
pub fn check_compatibility(
    g: &PatternGraph,
    catalog: &Catalog,
    s: &SolutionCandidate,
    q: Option<&DesignQuery>,
) -> Result<CompatibilityReport, SynthesisError> {
    let mut ids: Vec<&str> = vec![s.state_binding.as_str()];
    ids.extend(s.pattern_ids());
    for id in &ids {
        if !g.contains(id) || catalog.get(id).is_none() {
            return Err(GraphError::UnknownPattern(id.to_string()).into());
        }
    }
    let facts = Facts::new(g, catalog);
    let mut conflicts = Vec::new();
    for (i, a) in ids.iter().enumerate() {
        for b in &ids[i + 1..] {
            if facts.conflict(a, b) {
                let (x, y) = if a <= b { (a, b) } else { (b, a) };
                conflicts.push((x.to_string(), y.to_string()));
            }
        }
    }
    conflicts.sort();

    let mut capability_gaps = Vec::new();
    let mut fault_model_gaps = Vec::new();
    if let Some(q) = q {
        let members: Vec<&str> = s.pattern_ids().collect();
        for f in &q.fault_models {
            if !members.iter().any(|m| facts.reach[*m].contains(f)) {
                fault_model_gaps.push(*f);
            }
        }
        for c in &q.capabilities {
            let delivered = if *c == Capability::Containment {
                s.state_binding != STATELESS
            } else {
                q.fault_models
                    .iter()
                    .all(|f| members.iter().any(|m| facts.provides(m, (*f, Some(*c)))))
            };
            if !delivered {
                capability_gaps.push(*c);
            }
        }
    }
    Ok(CompatibilityReport {
        ok: conflicts.is_empty() && capability_gaps.is_empty() && fault_model_gaps.is_empty(),
        conflicts,
        capability_gaps,
        fault_model_gaps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::builtin_catalog;
    use crate::graph::{build_language_graph, EdgeOverlay};
    use Capability::*;
    use FaultModelClass::*;

    fn setup() -> (PatternGraph, Catalog) {
        let c = builtin_catalog();
        (build_language_graph(&c, &EdgeOverlay::empty()).unwrap(), c)
    }

    #[test]
    fn failure_recovery_has_rollback_on_dynamic_state() {
        let (g, c) = setup();
        let all = synthesize_all(&g, &c, &DesignQuery::new([Failure], [Recovery])).unwrap();
        let rb = all
            .iter()
            .find(|s| s.state_binding == "dynamic-state" && s.instance_set() == BTreeSet::from(["rollback".to_string()]))
            .expect("rollback candidate");
        assert_eq!(rb.chains["rollback"], vec![vec!["rollback", "checkpoint-recovery", "recovery"]]);
        assert_eq!(rb.sequence, vec!["dynamic-state", "recovery", "checkpoint-recovery", "rollback"]);
    }

    #[test]
    fn fault_detection_uses_diagnosis_family() {
        let (g, c) = setup();
        let all = synthesize_all(&g, &c, &DesignQuery::new([Fault], [Detection])).unwrap();
        let used: BTreeSet<String> = all.iter().flat_map(|s| s.instance_set()).collect();
        assert!(used.is_subset(&BTreeSet::from(["monitoring".to_string(), "prediction".to_string()])));
        assert!(!used.is_empty());
    }

    #[test]
    fn fault_masking_is_unsatisfiable() {
        let (g, c) = setup();
        match synthesize(&g, &c, &DesignQuery::new([Fault], [Masking])) {
            Err(SynthesisError::Unsatisfiable(NearestMiss::NoProvider { fault_model, capability })) => {
                assert_eq!(fault_model, Fault);
                assert_eq!(capability, Some(Masking));
            }
            other => panic!("expected unsatisfiable, got {other:?}"),
        }
    }

    #[test]
    fn seeded_conflict_is_cited() {
        let c = builtin_catalog();
        let overlay = EdgeOverlay::empty().with("reinitialization", "rollforward", RelationKind::Conflict);
        let g = build_language_graph(&c, &overlay).unwrap();
        let q = DesignQuery::new([Failure], [Recovery]).with_seeds(["reinitialization", "rollforward"]);
        match synthesize(&g, &c, &q) {
            Err(SynthesisError::Unsatisfiable(NearestMiss::SeedConflict { first, second })) => {
                assert_eq!((first.as_str(), second.as_str()), ("reinitialization", "rollforward"));
            }
            other => panic!("expected seed conflict, got {other:?}"),
        }
    }

    #[test]
    fn implementation_first_keeps_seed() {
        let (g, c) = setup();
        let q = DesignQuery::new([Error], [Masking])
            .with_mode(EntryMode::ImplementationFirst)
            .with_seeds(["forward-error-correction-code"]);
        let all = synthesize_all(&g, &c, &q).unwrap();
        assert!(!all.is_empty());
        for s in &all {
            assert!(s.instance_set().contains("forward-error-correction-code"));
            assert!(s.covered_fault_models.contains(&Error));
            assert!(s.covered_fault_models.contains(&Failure));
        }
        let fec_chain = &all[0].chains["forward-error-correction-code"];
        assert_eq!(fec_chain, &vec![vec!["forward-error-correction-code", "redundancy", "compensation"]]);
    }

    #[test]
    fn implementation_first_without_seeds_is_invalid() {
        let (g, c) = setup();
        let q = DesignQuery::new([Error], [Masking]).with_mode(EntryMode::ImplementationFirst);
        assert!(matches!(synthesize(&g, &c, &q), Err(SynthesisError::InvalidQuery(_))));
    }

    #[test]
    fn containment_excludes_stateless() {
        let (g, c) = setup();
        let q = DesignQuery::new([Error], [Recovery, Containment]);
        let all = synthesize_all(&g, &c, &q).unwrap();
        assert!(all.iter().all(|s| s.state_binding != STATELESS));
        let q = q.with_domain(Domain::State(STATELESS.into()));
        assert!(matches!(
            synthesize(&g, &c, &q),
            Err(SynthesisError::Unsatisfiable(NearestMiss::ContainmentUnavailable { .. }))
        ));
    }

    #[test]
    fn ranking_is_sorted_and_truncated() {
        let (g, c) = setup();
        let mut q = DesignQuery::new([Failure, Error], [Recovery, Detection]);
        q.max_candidates = 5;
        let top = synthesize(&g, &c, &q).unwrap();
        assert!(top.len() <= 5);
        let all = synthesize_all(&g, &c, &q).unwrap();
        assert_eq!(&all[..top.len()], &top[..]);
        for w in all.windows(2) {
            assert!(w[0].score < w[1].score || (w[0].score == w[1].score && w[0].sequence <= w[1].sequence));
        }
    }

    #[test]
    fn compatibility_reports_gaps_and_conflicts() {
        let (g, c) = setup();
        let q = DesignQuery::new([Fault], [Detection]);
        let s = synthesize(&g, &c, &q).unwrap().remove(0);
        let report = check_compatibility(&g, &c, &s, Some(&q)).unwrap();
        assert!(report.ok, "{report:?}");

        let needs_more = DesignQuery::new([Fault], [Detection, Recovery]);
        let report = check_compatibility(&g, &c, &s, Some(&needs_more)).unwrap();
        assert!(!report.ok);
        assert_eq!(report.capability_gaps, vec![Recovery]);

        let overlay = EdgeOverlay::empty().with("reinitialization", "rollforward", RelationKind::Conflict);
        let g2 = build_language_graph(&c, &overlay).unwrap();
        let mut bad = s.clone();
        bad.instances = vec![PatternInstance::new("reinitialization"), PatternInstance::new("rollforward")];
        let report = check_compatibility(&g2, &c, &bad, None).unwrap();
        assert!(!report.ok);
        assert_eq!(report.conflicts, vec![("reinitialization".to_string(), "rollforward".to_string())]);

        bad.instances = vec![PatternInstance::new("ghost")];
        assert!(check_compatibility(&g, &c, &bad, None).is_err());
    }

    #[test]
    fn query_json_round_trip() {
        let q = DesignQuery::new([Failure], [Recovery]).with_domain(Domain::State("dynamic-state".into()));
        let json = serde_json::to_string(&q).unwrap();
        assert!(json.contains("\"domain\":\"dynamic-state\""));
        let back: DesignQuery = serde_json::from_str(&json).unwrap();
        assert_eq!(back, q);
        let any: DesignQuery = serde_json::from_str(
            r#"{"fault_models":["Fault"],"capabilities":["Detection"],"entry_mode":"CapabilityFirst","domain":"any"}"#,
        )
        .unwrap();
        assert_eq!(any.domain, Domain::Any);
        assert_eq!(any.max_candidates, 10);
    }

    #[test]
    fn entry_mode_parsing() {
        assert_eq!("domain-first".parse::<EntryMode>().unwrap(), EntryMode::DomainFirst);
        assert_eq!("ImplementationFirst".parse::<EntryMode>().unwrap(), EntryMode::ImplementationFirst);
        assert!("sideways".parse::<EntryMode>().is_err());
    }
}
