use std::fmt::Write;

use super::{PatternGraph, RelationKind};
use crate::catalog::PatternClass;

fn cluster_color(class: PatternClass) -> &'static str {
    match class {
        PatternClass::Strategy => "#1f77b4",
        PatternClass::Architectural => "#2ca02c",
        PatternClass::Structural => "#ff7f0e",
        PatternClass::State => "#9467bd",
    }
}

fn fill_color(class: PatternClass) -> &'static str {
    match class {
        PatternClass::Strategy => "#c6dbef",
        PatternClass::Architectural => "#c7e9c0",
        PatternClass::Structural => "#fdd0a2",
        PatternClass::State => "#dadaeb",
    }
}

fn edge_style(kind: RelationKind) -> &'static str {
    match kind {
        RelationKind::Specialization => "style=solid, color=\"#333333\"",
        RelationKind::Abstraction => "style=dashed, color=\"#999999\"",
        RelationKind::UsedWith => "style=bold, color=\"#2ca02c\", dir=none",
        RelationKind::Conflict => "style=bold, color=\"#d62728\", dir=none",
        RelationKind::Similarity => "style=dotted, color=\"#7f7f7f\", dir=none",
        RelationKind::Domain => "style=solid, color=\"#9467bd\"",
    }
}

/// Renders the graph as a Graphviz digraph with one cluster per pattern class.
///
/// Vertices and edges are emitted in sorted order so equal graphs give equal
/// bytes. Each edge carries a `class` attribute naming its relation kind.
pub fn export_dot(g: &PatternGraph) -> String {
    let mut out = String::new();
    out.push_str("digraph pattern_language {\n");
    out.push_str("  rankdir=BT;\n");
    out.push_str("  node [shape=box, style=\"rounded,filled\", fontname=\"Helvetica\"];\n");
    for class in PatternClass::ALL {
        let key = class.as_str().to_lowercase();
        let _ = writeln!(out, "  subgraph cluster_{key} {{");
        let _ = writeln!(out, "    label=\"{}\";", class.as_str());
        let _ = writeln!(out, "    color=\"{}\";", cluster_color(class));
        for (id, c) in g.vertices() {
            if *c == class {
                let _ = writeln!(out, "    \"{id}\" [fillcolor=\"{}\"];", fill_color(class));
            }
        }
        out.push_str("  }\n");
    }
    for kind in RelationKind::ALL {
        for e in g.edges_of_kind(kind) {
            let _ = writeln!(
                out,
                "  \"{}\" -> \"{}\" [class=\"{}\", label=\"{}\", {}];",
                e.from,
                e.to,
                kind.key(),
                kind.key(),
                edge_style(kind)
            );
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::builtin_catalog;
    use crate::graph::{build_language_graph, EdgeOverlay};

    #[test]
    fn four_labeled_clusters() {
        let g = build_language_graph(&builtin_catalog(), &EdgeOverlay::empty()).unwrap();
        let dot = export_dot(&g);
        for label in ["Strategy", "Architectural", "Structural", "State"] {
            assert_eq!(dot.matches(&format!("label=\"{label}\";")).count(), 1, "{label}");
        }
        assert_eq!(dot.matches("subgraph cluster_").count(), 4);
        assert_eq!(export_dot(&g), dot);
    }

    #[test]
    fn conflict_edges_styled_once() {
        let g = build_language_graph(&builtin_catalog(), &EdgeOverlay::empty()).unwrap();
        assert_eq!(export_dot(&g).matches("class=\"conflict\"").count(), 0);
        let overlay =
            EdgeOverlay::empty().with("reinitialization", "rollforward", RelationKind::Conflict);
        let g = build_language_graph(&builtin_catalog(), &overlay).unwrap();
        let dot = export_dot(&g);
        assert_eq!(dot.matches("class=\"conflict\"").count(), 1);
        assert!(dot.contains("\"reinitialization\" -> \"rollforward\" [class=\"conflict\""));
    }
}
