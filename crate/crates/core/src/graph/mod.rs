//! The pattern language as a typed graph.
//!
//! Every catalog pattern is a vertex tagged with its class. Edges carry one of
//! six relation kinds. Specialization/abstraction and domain edges are
//! directed; used-with, conflict and similarity edges are symmetric and kept
//! once per unordered pair (`from < to`).

mod dot;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canonical;
use crate::catalog::{
    validate_catalog, Catalog, PatternClass, Violation, ViolationList, INFERRED_PARENT_LINKS,
    TABLE_PARENT_LINKS,
};
use crate::costmodel::CostVector;

pub use dot::export_dot;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RelationKind {
    #[serde(alias = "abstraction")]
    Abstraction,
    #[serde(alias = "specialization")]
    Specialization,
    #[serde(alias = "used_with", alias = "used-with")]
    UsedWith,
    #[serde(alias = "conflict")]
    Conflict,
    #[serde(alias = "similarity")]
    Similarity,
    #[serde(alias = "domain")]
    Domain,
}

impl RelationKind {
    pub const ALL: [RelationKind; 6] = [
        RelationKind::Abstraction,
        RelationKind::Specialization,
        RelationKind::UsedWith,
        RelationKind::Conflict,
        RelationKind::Similarity,
        RelationKind::Domain,
    ];

    pub fn is_symmetric(self) -> bool {
        matches!(
            self,
            RelationKind::UsedWith | RelationKind::Conflict | RelationKind::Similarity
        )
    }

    /// Inverse relation kind, where one exists.
    pub fn inverse(self) -> Option<RelationKind> {
        match self {
            RelationKind::Abstraction => Some(RelationKind::Specialization),
            RelationKind::Specialization => Some(RelationKind::Abstraction),
            RelationKind::UsedWith => Some(RelationKind::Conflict),
            RelationKind::Conflict => Some(RelationKind::UsedWith),
            RelationKind::Similarity | RelationKind::Domain => None,
        }
    }

    /// Lowercase key used for styling and display.
    pub fn key(self) -> &'static str {
        match self {
            RelationKind::Abstraction => "abstraction",
            RelationKind::Specialization => "specialization",
            RelationKind::UsedWith => "used_with",
            RelationKind::Conflict => "conflict",
            RelationKind::Similarity => "similarity",
            RelationKind::Domain => "domain",
        }
    }
}

impl fmt::Display for RelationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EdgeOrigin {
    PaperDerived,
    Inferred,
    UserDeclared,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationEdge {
    pub from: String,
    pub to: String,
    pub kind: RelationKind,
    pub origin: EdgeOrigin,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotations: Option<CostVector>,
}

impl RelationEdge {
    pub fn new(from: &str, to: &str, kind: RelationKind, origin: EdgeOrigin) -> Self {
        let (from, to) = if kind.is_symmetric() && to < from {
            (to, from)
        } else {
            (from, to)
        };
        Self {
            from: from.to_string(),
            to: to.to_string(),
            kind,
            origin,
            annotations: None,
        }
    }

    fn key(&self) -> (RelationKind, &str, &str) {
        (self.kind, &self.from, &self.to)
    }

    pub fn touches(&self, id: &str) -> bool {
        self.from == id || self.to == id
    }

    pub fn other_end(&self, id: &str) -> Option<&str> {
        if self.from == id {
            Some(&self.to)
        } else if self.to == id {
            Some(&self.from)
        } else {
            None
        }
    }
}

/// User-supplied extra edges.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeOverlay {
    #[serde(default)]
    pub edges: Vec<OverlayEdge>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverlayEdge {
    pub from: String,
    pub to: String,
    pub kind: RelationKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<EdgeOrigin>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotations: Option<CostVector>,
}

impl EdgeOverlay {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_json(document: &str) -> Result<Self, GraphError> {
        if document.trim().is_empty() {
            return Ok(Self::empty());
        }
        serde_json::from_str(document).map_err(|e| GraphError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn with(mut self, from: &str, to: &str, kind: RelationKind) -> Self {
        self.edges.push(OverlayEdge {
            from: from.to_string(),
            to: to.to_string(),
            kind,
            origin: None,
            annotations: None,
        });
        self
    }
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("catalog is invalid: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidCatalog(ViolationList),
    #[error("graph invariants violated: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidGraph(ViolationList),
    #[error("unknown pattern `{0}`")]
    UnknownPattern(String),
    #[error("invalid edge {from} -{kind}-> {to}: {reason}")]
    InvalidEdge {
        from: String,
        to: String,
        kind: RelationKind,
        reason: String,
    },
    #[error("`{0}` is a state pattern and has no derivation chains")]
    StatePattern(String),
    #[error("graph document parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Vertex {
    pub id: String,
    pub class: PatternClass,
}

/// Interchange form of a [`PatternGraph`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphDocument {
    pub vertices: Vec<Vertex>,
    pub edges: Vec<RelationEdge>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternGraph {
    vertices: BTreeMap<String, PatternClass>,
    edges: Vec<RelationEdge>,
}

impl PatternGraph {
    /// Assembles a graph from raw parts without checking invariants; symmetric
    /// edges are normalized and the edge list sorted. Use [`validate_graph`]
    /// to check the result.
    pub fn from_parts(
        vertices: impl IntoIterator<Item = (String, PatternClass)>,
        edges: impl IntoIterator<Item = RelationEdge>,
    ) -> Self {
        let mut edges: Vec<RelationEdge> = edges
            .into_iter()
            .map(|mut e| {
                if e.kind.is_symmetric() && e.to < e.from {
                    std::mem::swap(&mut e.from, &mut e.to);
                }
                e
            })
            .collect();
        edges.sort_by(|a, b| a.key().cmp(&b.key()).then(a.origin.cmp(&b.origin)));
        Self {
            vertices: vertices.into_iter().collect(),
            edges,
        }
    }

    pub fn vertices(&self) -> &BTreeMap<String, PatternClass> {
        &self.vertices
    }

    pub fn edges(&self) -> &[RelationEdge] {
        &self.edges
    }

    pub fn class_of(&self, id: &str) -> Option<PatternClass> {
        self.vertices.get(id).copied()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.vertices.contains_key(id)
    }

    pub fn edges_of_kind(&self, kind: RelationKind) -> impl Iterator<Item = &RelationEdge> {
        self.edges.iter().filter(move |e| e.kind == kind)
    }

    /// The edge of `kind` between `a` and `b`, in either orientation for symmetric kinds.
    pub fn edge_between(&self, a: &str, b: &str, kind: RelationKind) -> Option<&RelationEdge> {
        self.edges.iter().find(|e| {
            e.kind == kind
                && ((e.from == a && e.to == b) || (kind.is_symmetric() && e.from == b && e.to == a))
        })
    }

    pub fn has_edge(&self, a: &str, b: &str, kind: RelationKind) -> bool {
        self.edge_between(a, b, kind).is_some()
    }

    /// Strategy roots reachable from `id` through specialization edges
    /// (`id` itself when it is a root).
    pub fn roots_of(&self, id: &str) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut seen = BTreeSet::new();
        let mut stack = vec![id.to_string()];
        while let Some(v) = stack.pop() {
            if !seen.insert(v.clone()) {
                continue;
            }
            if self.class_of(&v) == Some(PatternClass::Strategy) {
                out.insert(v.clone());
            }
            for e in self.edges_of_kind(RelationKind::Specialization) {
                if e.from == v {
                    stack.push(e.to.clone());
                }
            }
        }
        out
    }

    pub fn to_document(&self) -> GraphDocument {
        GraphDocument {
            vertices: self
                .vertices
                .iter()
                .map(|(id, class)| Vertex { id: id.clone(), class: *class })
                .collect(),
            edges: self.edges.clone(),
        }
    }

    /// Canonical JSON export mirroring the in-memory model.
    pub fn to_json(&self) -> String {
        canonical::to_canonical_json(&self.to_document())
    }

    pub fn from_document(doc: GraphDocument) -> Self {
        Self::from_parts(doc.vertices.into_iter().map(|v| (v.id, v.class)), doc.edges)
    }

    pub fn from_json(document: &str) -> Result<Self, GraphError> {
        let doc: GraphDocument = serde_json::from_str(document).map_err(|e| GraphError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        Ok(Self::from_document(doc))
    }
}

impl Serialize for PatternGraph {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_document().serialize(serializer)
    }
}

/// Composition pairs shipped with the language (detection paired with recovery).
const DEFAULT_USED_WITH: [(&str, &str); 4] = [
    ("monitoring", "rollback"),
    ("monitoring", "rollforward"),
    ("prediction", "restructure"),
    ("monitoring", "rejuvenation"),
];

const DEFAULT_SIMILARITY: [(&str, &str); 1] = [("rollforward", "rollback")];

fn parent_origin(child: &str, parent: &str) -> EdgeOrigin {
    if TABLE_PARENT_LINKS.contains(&(child, parent)) {
        EdgeOrigin::PaperDerived
    } else if INFERRED_PARENT_LINKS.contains(&(child, parent)) {
        EdgeOrigin::Inferred
    } else {
        EdgeOrigin::UserDeclared
    }
}

fn endpoint_rule(
    kind: RelationKind,
    from: (&str, PatternClass),
    to: (&str, PatternClass),
) -> Result<(), String> {
    if from.0 == to.0 {
        return Err("self-loop".into());
    }
    match kind {
        RelationKind::Domain => {
            if from.1 != PatternClass::State {
                return Err(format!("domain source must be a state pattern, `{}` is {}", from.0, from.1));
            }
            if !to.1.is_behavioral() {
                return Err(format!("domain target must be behavioral, `{}` is {}", to.0, to.1));
            }
        }
        RelationKind::Specialization | RelationKind::Abstraction => {
            let (concrete, abstract_) = if kind == RelationKind::Specialization {
                (from, to)
            } else {
                (to, from)
            };
            match (concrete.1.layer(), abstract_.1.layer()) {
                (Some(c), Some(a)) if a < c => {}
                _ => {
                    return Err(format!(
                        "`{}` ({}) must be a strictly more concrete behavioral pattern than `{}` ({})",
                        concrete.0, concrete.1, abstract_.0, abstract_.1
                    ))
                }
            }
        }
        RelationKind::UsedWith | RelationKind::Conflict | RelationKind::Similarity => {}
    }
    Ok(())
}

struct EdgeSet {
    edges: BTreeMap<(RelationKind, String, String), RelationEdge>,
}

impl EdgeSet {
    fn insert(&mut self, e: RelationEdge) {
        self.edges
            .insert((e.kind, e.from.clone(), e.to.clone()), e);
    }

    fn remove(&mut self, kind: RelationKind, a: &str, b: &str) {
        let (a, b) = if kind.is_symmetric() && b < a { (b, a) } else { (a, b) };
        self.edges.remove(&(kind, a.to_string(), b.to_string()));
    }

    fn get(&self, kind: RelationKind, a: &str, b: &str) -> Option<&RelationEdge> {
        let (a, b) = if kind.is_symmetric() && b < a { (b, a) } else { (a, b) };
        self.edges.get(&(kind, a.to_string(), b.to_string()))
    }
}

/// Builds the language graph from a valid catalog plus an edge overlay.
///
/// Specialization edges come from pattern parents, each paired with its
/// abstraction inverse. Shipped similarity and used-with defaults are added
/// when both endpoints exist. Each state pattern gets domain edges to every
/// strategy root unless the overlay declares domain edges for it.
pub fn build_language_graph(
    catalog: &Catalog,
    overlay: &EdgeOverlay,
) -> Result<PatternGraph, GraphError> {
    let violations = validate_catalog(catalog);
    if !violations.is_empty() {
        return Err(GraphError::InvalidCatalog(violations));
    }
    let vertices: BTreeMap<String, PatternClass> =
        catalog.iter().map(|p| (p.id.clone(), p.class)).collect();
    let mut set = EdgeSet { edges: BTreeMap::new() };

    for p in catalog.iter() {
        for parent in &p.parents {
            let origin = parent_origin(&p.id, parent);
            set.insert(RelationEdge::new(&p.id, parent, RelationKind::Specialization, origin));
            set.insert(RelationEdge::new(parent, &p.id, RelationKind::Abstraction, origin));
        }
    }
    let defaults = DEFAULT_SIMILARITY
        .iter()
        .map(|pair| (pair, RelationKind::Similarity, EdgeOrigin::PaperDerived))
        .chain(
            DEFAULT_USED_WITH
                .iter()
                .map(|pair| (pair, RelationKind::UsedWith, EdgeOrigin::Inferred)),
        );
    for ((a, b), kind, origin) in defaults {
        if vertices.contains_key(*a) && vertices.contains_key(*b) {
            set.insert(RelationEdge::new(a, b, kind, origin));
        }
    }

    let mut overlay_domain_sources = BTreeSet::new();
    for oe in &overlay.edges {
        let class = |id: &str| {
            vertices
                .get(id)
                .copied()
                .ok_or_else(|| GraphError::UnknownPattern(id.to_string()))
        };
        let (fc, tc) = (class(&oe.from)?, class(&oe.to)?);
        let invalid = |reason: String| GraphError::InvalidEdge {
            from: oe.from.clone(),
            to: oe.to.clone(),
            kind: oe.kind,
            reason,
        };
        endpoint_rule(oe.kind, (&oe.from, fc), (&oe.to, tc)).map_err(invalid)?;

        let origin = oe.origin.unwrap_or(EdgeOrigin::UserDeclared);
        if let Some(opposite) = match oe.kind {
            RelationKind::UsedWith => Some(RelationKind::Conflict),
            RelationKind::Conflict => Some(RelationKind::UsedWith),
            _ => None,
        } {
            if let Some(existing) = set.get(opposite, &oe.from, &oe.to) {
                if existing.origin == EdgeOrigin::Inferred {
                    set.remove(opposite, &oe.from, &oe.to);
                } else {
                    return Err(invalid(format!(
                        "pair already carries a {} edge (relation exclusivity)",
                        opposite
                    )));
                }
            }
        }
        let mut edge = RelationEdge::new(&oe.from, &oe.to, oe.kind, origin);
        edge.annotations = oe.annotations;
        match oe.kind {
            RelationKind::Specialization => {
                set.insert(RelationEdge::new(&oe.to, &oe.from, RelationKind::Abstraction, origin));
            }
            RelationKind::Abstraction => {
                set.insert(RelationEdge::new(&oe.to, &oe.from, RelationKind::Specialization, origin));
            }
            RelationKind::Domain => {
                overlay_domain_sources.insert(oe.from.clone());
            }
            _ => {}
        }
        set.insert(edge);
    }

    for state in catalog.of_class(PatternClass::State) {
        if overlay_domain_sources.contains(&state.id) {
            continue;
        }
        for root in catalog.of_class(PatternClass::Strategy) {
            set.insert(RelationEdge::new(
                &state.id,
                &root.id,
                RelationKind::Domain,
                EdgeOrigin::Inferred,
            ));
        }
    }

    let graph = PatternGraph::from_parts(vertices, set.edges.into_values());
    let violations = validate_graph(&graph);
    if violations.is_empty() {
        Ok(graph)
    } else {
        Err(GraphError::InvalidGraph(violations))
    }
}

fn find_specialization_cycle(g: &PatternGraph) -> Option<Vec<String>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        White,
        Grey,
        Black,
    }
    let mut adjacency: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for e in g.edges_of_kind(RelationKind::Specialization) {
        adjacency.entry(&e.from).or_default().push(&e.to);
    }
    let mut marks: BTreeMap<&str, Mark> = g.vertices.keys().map(|k| (k.as_str(), Mark::White)).collect();

    fn visit<'a>(
        v: &'a str,
        adjacency: &BTreeMap<&'a str, Vec<&'a str>>,
        marks: &mut BTreeMap<&'a str, Mark>,
        stack: &mut Vec<&'a str>,
    ) -> Option<Vec<String>> {
        marks.insert(v, Mark::Grey);
        stack.push(v);
        for &w in adjacency.get(v).map(Vec::as_slice).unwrap_or(&[]) {
            match marks.get(w).copied().unwrap_or(Mark::White) {
                Mark::Grey => {
                    let start = stack.iter().position(|x| *x == w).unwrap();
                    let mut cycle: Vec<String> = stack[start..].iter().map(|s| s.to_string()).collect();
                    cycle.push(w.to_string());
                    return Some(cycle);
                }
                Mark::White => {
                    if let Some(c) = visit(w, adjacency, marks, stack) {
                        return Some(c);
                    }
                }
                Mark::Black => {}
            }
        }
        stack.pop();
        marks.insert(v, Mark::Black);
        None
    }

    let starts: Vec<&str> = marks.keys().copied().collect();
    for v in starts {
        if marks[v] == Mark::White {
            let mut stack = Vec::new();
            if let Some(c) = visit(v, &adjacency, &mut marks, &mut stack) {
                return Some(c);
            }
        }
    }
    None
}

/// Returns every violated graph invariant; empty for graphs built from a valid catalog.
pub fn validate_graph(g: &PatternGraph) -> ViolationList {
    let mut out = Vec::new();
    let describe = |e: &RelationEdge| format!("{} -{}-> {}", e.from, e.kind, e.to);

    let mut seen = BTreeSet::new();
    for e in &g.edges {
        if !seen.insert(e.key()) {
            out.push(Violation::new("edge-duplicate", describe(e), "edge stored more than once"));
        }
        if e.kind.is_symmetric() && e.to < e.from {
            out.push(Violation::new(
                "symmetric-orientation",
                describe(e),
                "symmetric edge must be stored once with from < to",
            ));
        }
        match (g.class_of(&e.from), g.class_of(&e.to)) {
            (Some(fc), Some(tc)) => {
                if let Err(reason) = endpoint_rule(e.kind, (&e.from, fc), (&e.to, tc)) {
                    out.push(Violation::new("edge-endpoints", describe(e), reason));
                }
            }
            _ => out.push(Violation::new(
                "edge-dangling",
                describe(e),
                "edge endpoint is not a vertex",
            )),
        }
    }
    // symmetric pairs stored in both orientations
    for e in g.edges.iter().filter(|e| e.kind.is_symmetric()) {
        if e.from < e.to && g.edges.iter().any(|x| x.kind == e.kind && x.from == e.to && x.to == e.from) {
            out.push(Violation::new(
                "symmetric-duplicate",
                describe(e),
                "symmetric edge stored in both orientations",
            ));
        }
    }

    for e in g.edges_of_kind(RelationKind::Specialization) {
        if !g
            .edges_of_kind(RelationKind::Abstraction)
            .any(|a| a.from == e.to && a.to == e.from)
        {
            out.push(Violation::new(
                "inverse-closure",
                describe(e),
                "specialization edge lacks its abstraction inverse",
            ));
        }
    }
    for e in g.edges_of_kind(RelationKind::Abstraction) {
        if !g
            .edges_of_kind(RelationKind::Specialization)
            .any(|s| s.from == e.to && s.to == e.from)
        {
            out.push(Violation::new(
                "inverse-closure",
                describe(e),
                "abstraction edge lacks its specialization inverse",
            ));
        }
    }

    for e in g.edges_of_kind(RelationKind::UsedWith) {
        if g.has_edge(&e.from, &e.to, RelationKind::Conflict) {
            out.push(Violation::new(
                "relation-exclusivity",
                format!("{{{}, {}}}", e.from, e.to),
                "relation exclusivity: pair carries both used_with and conflict",
            ));
        }
    }

    if let Some(cycle) = find_specialization_cycle(g) {
        out.push(Violation::new(
            "specialization-cycle",
            cycle[0].clone(),
            format!("specialization cycle: {}", cycle.join(" -> ")),
        ));
    }

    for (id, class) in &g.vertices {
        let has_parent = g
            .edges_of_kind(RelationKind::Specialization)
            .any(|e| &e.from == id);
        match class {
            PatternClass::Strategy if has_parent => out.push(Violation::new(
                "specialization-sink",
                id.clone(),
                "strategy vertex must be a specialization sink",
            )),
            PatternClass::Architectural | PatternClass::Structural if !has_parent => {
                out.push(Violation::new(
                    "specialization-sink",
                    id.clone(),
                    "only strategy vertices may be specialization sinks",
                ))
            }
            _ => {}
        }
        if *class == PatternClass::Structural && g.roots_of(id).is_empty() {
            out.push(Violation::new(
                "structural-reachability",
                id.clone(),
                "no specialization path to a strategy vertex",
            ));
        }
    }
    out
}

/// Patterns one `kind`-edge away from `id` (both directions for symmetric kinds).
pub fn neighbors(
    g: &PatternGraph,
    id: &str,
    kind: RelationKind,
) -> Result<BTreeSet<String>, GraphError> {
    if !g.contains(id) {
        return Err(GraphError::UnknownPattern(id.to_string()));
    }
    Ok(g
        .edges_of_kind(kind)
        .filter_map(|e| {
            if e.from == id {
                Some(e.to.clone())
            } else if kind.is_symmetric() && e.to == id {
                Some(e.from.clone())
            } else {
                None
            }
        })
        .collect())
}

/// Every specialization path from `id` to a strategy root, concrete first,
/// sorted lexicographically.
pub fn ancestry(g: &PatternGraph, id: &str) -> Result<Vec<Vec<String>>, GraphError> {
    let class = g
        .class_of(id)
        .ok_or_else(|| GraphError::UnknownPattern(id.to_string()))?;
    if !class.is_behavioral() {
        return Err(GraphError::StatePattern(id.to_string()));
    }
    let mut chains = Vec::new();
    let mut path = vec![id.to_string()];
    extend_chains(g, &mut path, &mut chains);
    chains.sort();
    Ok(chains)
}

fn extend_chains(g: &PatternGraph, path: &mut Vec<String>, out: &mut Vec<Vec<String>>) {
    let last = path.last().unwrap().clone();
    let parents: Vec<String> = g
        .edges_of_kind(RelationKind::Specialization)
        .filter(|e| e.from == last)
        .map(|e| e.to.clone())
        .collect();
    if parents.is_empty() {
        if g.class_of(&last) == Some(PatternClass::Strategy) {
            out.push(path.clone());
        }
        return;
    }
    for p in parents {
        if path.contains(&p) {
            continue;
        }
        path.push(p);
        extend_chains(g, path, out);
        path.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::builtin_catalog;

    fn builtin() -> PatternGraph {
        build_language_graph(&builtin_catalog(), &EdgeOverlay::empty()).unwrap()
    }

    fn set(ids: &[&str]) -> BTreeSet<String> {
        ids.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn builtin_graph_is_valid() {
        let g = builtin();
        assert_eq!(g.vertices().len(), 23);
        assert!(validate_graph(&g).is_empty(), "{:?}", validate_graph(&g));
    }

    #[test]
    fn derivative_edges_and_inverses() {
        let g = builtin();
        assert!(g.has_edge("rollback", "checkpoint-recovery", RelationKind::Specialization));
        assert!(g.has_edge("checkpoint-recovery", "rollback", RelationKind::Abstraction));
        assert_eq!(
            neighbors(&g, "reconfiguration", RelationKind::Specialization).unwrap(),
            set(&["fault-treatment", "recovery"])
        );
        assert!(g.has_edge("rollforward", "rollback", RelationKind::Similarity));
        assert!(g.has_edge("rollback", "rollforward", RelationKind::Similarity));
    }

    #[test]
    fn neighbor_queries() {
        let g = builtin();
        assert_eq!(
            neighbors(&g, "compensation", RelationKind::Abstraction).unwrap(),
            set(&["redundancy", "design-diversity"])
        );
        assert_eq!(
            neighbors(&g, "rollback", RelationKind::Specialization).unwrap(),
            set(&["checkpoint-recovery"])
        );
        assert!(neighbors(&g, "monitoring", RelationKind::Conflict).unwrap().is_empty());
        assert!(matches!(
            neighbors(&g, "nope", RelationKind::Conflict),
            Err(GraphError::UnknownPattern(_))
        ));
    }

    #[test]
    fn ancestry_chains() {
        let g = builtin();
        assert_eq!(
            ancestry(&g, "rollback").unwrap(),
            vec![vec!["rollback", "checkpoint-recovery", "recovery"]]
        );
        let chains = ancestry(&g, "restructure").unwrap();
        assert_eq!(
            chains,
            vec![
                vec!["restructure", "reconfiguration", "fault-treatment"],
                vec!["restructure", "reconfiguration", "recovery"],
            ]
        );
        assert_eq!(ancestry(&g, "recovery").unwrap(), vec![vec!["recovery"]]);
        assert!(matches!(ancestry(&g, "stateless"), Err(GraphError::StatePattern(_))));
        assert!(matches!(ancestry(&g, "nope"), Err(GraphError::UnknownPattern(_))));
    }

    #[test]
    fn overlay_conflict_passthrough() {
        let overlay = EdgeOverlay::empty().with("reinitialization", "rollforward", RelationKind::Conflict);
        let g = build_language_graph(&builtin_catalog(), &overlay).unwrap();
        let e = g
            .edge_between("rollforward", "reinitialization", RelationKind::Conflict)
            .unwrap();
        assert_eq!(e.origin, EdgeOrigin::UserDeclared);
    }

    #[test]
    fn overlay_conflict_replaces_inferred_used_with() {
        let overlay = EdgeOverlay::empty().with("rollback", "monitoring", RelationKind::Conflict);
        let g = build_language_graph(&builtin_catalog(), &overlay).unwrap();
        assert!(g.has_edge("monitoring", "rollback", RelationKind::Conflict));
        assert!(!g.has_edge("monitoring", "rollback", RelationKind::UsedWith));

        let both = EdgeOverlay::empty()
            .with("rollback", "restructure", RelationKind::UsedWith)
            .with("rollback", "restructure", RelationKind::Conflict);
        assert!(matches!(
            build_language_graph(&builtin_catalog(), &both),
            Err(GraphError::InvalidEdge { .. })
        ));
    }

    #[test]
    fn overlay_errors() {
        let dangling = EdgeOverlay::empty().with("rollback", "ghost", RelationKind::UsedWith);
        assert!(matches!(
            build_language_graph(&builtin_catalog(), &dangling),
            Err(GraphError::UnknownPattern(id)) if id == "ghost"
        ));
        let bad_domain = EdgeOverlay::empty().with("rollback", "recovery", RelationKind::Domain);
        assert!(matches!(
            build_language_graph(&builtin_catalog(), &bad_domain),
            Err(GraphError::InvalidEdge { .. })
        ));
        let upside_down =
            EdgeOverlay::empty().with("recovery", "rollback", RelationKind::Specialization);
        assert!(build_language_graph(&builtin_catalog(), &upside_down).is_err());
    }

    #[test]
    fn domain_defaults_and_override() {
        let g = builtin();
        let domain: Vec<_> = g.edges_of_kind(RelationKind::Domain).collect();
        assert_eq!(domain.len(), 4 * 3);
        assert!(domain.iter().all(|e| e.origin == EdgeOrigin::Inferred));

        let overlay = EdgeOverlay::empty().with("stateless", "compensation", RelationKind::Domain);
        let g = build_language_graph(&builtin_catalog(), &overlay).unwrap();
        assert_eq!(
            neighbors(&g, "stateless", RelationKind::Domain).unwrap(),
            set(&["compensation"])
        );
        assert_eq!(neighbors(&g, "dynamic-state", RelationKind::Domain).unwrap().len(), 3);
    }

    #[test]
    fn cycle_and_exclusivity_are_reported() {
        let cyclic = PatternGraph::from_parts(
            [
                ("a".to_string(), PatternClass::Architectural),
                ("b".to_string(), PatternClass::Architectural),
            ],
            [
                RelationEdge::new("a", "b", RelationKind::Specialization, EdgeOrigin::UserDeclared),
                RelationEdge::new("b", "a", RelationKind::Specialization, EdgeOrigin::UserDeclared),
                RelationEdge::new("b", "a", RelationKind::Abstraction, EdgeOrigin::UserDeclared),
                RelationEdge::new("a", "b", RelationKind::Abstraction, EdgeOrigin::UserDeclared),
            ],
        );
        let v = validate_graph(&cyclic);
        let cycle = v.iter().find(|x| x.rule == "specialization-cycle").expect("cycle reported");
        assert!(cycle.message.contains("a -> b -> a"), "{}", cycle.message);

        let g = builtin();
        let mut edges = g.edges().to_vec();
        edges.push(RelationEdge::new("monitoring", "rollback", RelationKind::Conflict, EdgeOrigin::UserDeclared));
        let clash = PatternGraph::from_parts(g.vertices().clone(), edges);
        let v = validate_graph(&clash);
        assert!(v.iter().any(|x| x.message.starts_with("relation exclusivity")), "{v:?}");
    }

    #[test]
    fn missing_inverse_is_reported() {
        let g = builtin();
        let edges: Vec<_> = g
            .edges()
            .iter()
            .filter(|e| !(e.kind == RelationKind::Abstraction && e.to == "rollback"))
            .cloned()
            .collect();
        let broken = PatternGraph::from_parts(g.vertices().clone(), edges);
        assert!(validate_graph(&broken).iter().any(|v| v.rule == "inverse-closure"));
    }

    #[test]
    fn json_round_trip() {
        let g = builtin();
        let json = g.to_json();
        let back = PatternGraph::from_json(&json).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.to_json(), json);
    }
}
