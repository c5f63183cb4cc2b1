//! Core model of a resilience design-pattern language: the pattern catalog,
//! the relationship graph, solution synthesis, overhead accounting and a
//! stochastic execution simulator.

pub mod canonical;
pub mod catalog;
pub mod costmodel;
pub mod graph;
pub mod simulator;
pub mod synthesis;
pub mod system;

pub use canonical::to_canonical_json;
pub use catalog::{
    builtin_catalog, load_catalog, validate_catalog, Capability, Catalog, CatalogError,
    FaultModelClass, ParameterDomain, ParameterSpec, Pattern, PatternClass, Violation,
    ViolationList,
};
pub use costmodel::{aggregate_cost, instance_cost, score, CostError, CostVector, CostWeights};
pub use graph::{
    ancestry, build_language_graph, export_dot, neighbors, validate_graph, EdgeOrigin,
    EdgeOverlay, GraphError, PatternGraph, RelationEdge, RelationKind,
};
pub use synthesis::{
    check_compatibility, explain, synthesize, synthesize_all, traverse, CompatibilityReport,
    DesignQuery, Domain, EntryMode, NearestMiss, PatternInstance, SequenceNarrative,
    SolutionCandidate, SynthesisError,
};
pub use simulator::{
    analytic_checkpoint_model, run_simulation, run_simulation_in, sweep, AnalyticEstimate,
    EventCounts, EventTrace, SimConfig, SimError, SimReport, SweepGrid, SweepTable, Workload,
};
pub use system::{InterarrivalModel, SystemModel};
