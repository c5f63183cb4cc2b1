use serde::{Deserialize, Serialize};

use super::{SolutionCandidate, SynthesisError, STATELESS};
use crate::catalog::Catalog;
use crate::graph::{ancestry, GraphError, PatternGraph, RelationKind};

/// A step-by-step account of how a candidate is assembled from the graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceNarrative {
    pub sequence: Vec<String>,
    pub steps: Vec<String>,
}

impl SequenceNarrative {
    pub fn text(&self) -> String {
        let mut out = String::new();
        for (i, step) in self.steps.iter().enumerate() {
            out.push_str(&format!("{}. {}\n", i + 1, step));
        }
        out
    }
}

fn hop_chain(chain: &[String]) -> String {
    // chains are stored concrete first; narrate from the abstract end
    let mut ids: Vec<&str> = chain.iter().map(String::as_str).collect();
    ids.reverse();
    let mut out = ids[0].to_string();
    for id in &ids[1..] {
        out.push_str(" \u{2014}specialization\u{2192} ");
        out.push_str(id);
    }
    out
}

/// Deterministic narrative for a candidate. Every pattern it names is a
/// member, the binding, or a vertex on one of the members' chains.
pub fn explain(
    g: &PatternGraph,
    catalog: &Catalog,
    s: &SolutionCandidate,
) -> Result<SequenceNarrative, SynthesisError> {
    for id in std::iter::once(s.state_binding.as_str()).chain(s.pattern_ids()) {
        if !g.contains(id) || catalog.get(id).is_none() {
            return Err(GraphError::UnknownPattern(id.to_string()).into());
        }
    }
    let mut steps = Vec::new();
    if s.state_binding == STATELESS {
        steps.push(format!(
            "State binding `{STATELESS}`: no protection domain is scoped, so the solution offers no containment of corrupted state."
        ));
    } else {
        steps.push(format!(
            "State binding `{}` scopes the protection domain the mitigation acts on.",
            s.state_binding
        ));
    }

    let members: Vec<&str> = s.pattern_ids().collect();
    for id in &members {
        let pattern = catalog.get(id).expect("checked above");
        let chains = ancestry(g, id)?;
        let caps: Vec<&str> = pattern.capabilities.iter().map(|c| c.as_str()).collect();
        for chain in &chains {
            steps.push(format!("Derivation: {}", hop_chain(chain)));
        }
        let roots: Vec<String> = g.roots_of(id).into_iter().collect();
        let reach: Vec<&str> = roots
            .iter()
            .filter_map(|r| catalog.get(r))
            .flat_map(|r| r.handles.iter())
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .map(|f| f.as_str())
            .collect();
        steps.push(format!(
            "`{id}` provides {} and, through {}, treats {} events.",
            if caps.is_empty() { "no behavioral capability".to_string() } else { caps.join(" and ") },
            roots.iter().map(|r| format!("`{r}`")).collect::<Vec<_>>().join(", "),
            reach.join(", ")
        ));
        if s.state_binding != STATELESS {
            let domains: Vec<&String> = roots
                .iter()
                .filter(|r| g.has_edge(&s.state_binding, r, RelationKind::Domain))
                .collect();
            if let Some(r) = domains.first() {
                steps.push(format!(
                    "`{}` \u{2014}domain\u{2192} `{r}` admits `{id}` in this protection domain.",
                    s.state_binding
                ));
            }
        }
    }

    let mut paired = 0;
    for (i, a) in members.iter().enumerate() {
        for b in &members[i + 1..] {
            if g.has_edge(a, b, RelationKind::UsedWith) {
                steps.push(format!("`{a}` and `{b}` are composed along a used_with edge."));
                paired += 1;
            } else {
                steps.push(format!(
                    "`{a}` and `{b}` have disjoint capabilities and no conflict edge, so they compose independently."
                ));
            }
            if g.has_edge(a, b, RelationKind::Similarity) {
                steps.push(format!("`{a}` and `{b}` are similar alternatives (advisory)."));
            }
        }
    }
    let pairs = members.len() * members.len().saturating_sub(1) / 2;
    steps.push(format!(
        "Checked {} member pair(s) and the state binding for conflict edges: none found ({} used_with pairing(s)).",
        pairs, paired
    ));
    let c = &s.cost;
    steps.push(format!(
        "Aggregate cost: complexity {:.0}, fault-free time {:.4}, per-event time {:.2} s, space {:.4}, power {:.4}; score {:.6}.",
        c.design_complexity,
        c.time_overhead_fault_free,
        c.time_overhead_per_event,
        c.space_overhead,
        c.power_overhead,
        s.score
    ));
    Ok(SequenceNarrative {
        sequence: s.sequence.clone(),
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{builtin_catalog, Capability, FaultModelClass};
    use crate::graph::{build_language_graph, EdgeOverlay};
    use crate::synthesis::{synthesize_all, DesignQuery};

    #[test]
    fn rollback_narrative_names_hops() {
        let c = builtin_catalog();
        let g = build_language_graph(&c, &EdgeOverlay::empty()).unwrap();
        let q = DesignQuery::new([FaultModelClass::Failure], [Capability::Recovery]);
        let all = synthesize_all(&g, &c, &q).unwrap();
        let s = all
            .iter()
            .find(|s| s.state_binding == "dynamic-state" && s.instance_set().len() == 1 && s.instance_set().contains("rollback"))
            .unwrap();
        let n = explain(&g, &c, s).unwrap();
        let text = n.text();
        assert!(text.contains("checkpoint-recovery \u{2014}specialization\u{2192} rollback"), "{text}");
        assert_eq!(explain(&g, &c, s).unwrap(), n);
    }

    #[test]
    fn stateless_binding_is_called_out() {
        let c = builtin_catalog();
        let g = build_language_graph(&c, &EdgeOverlay::empty()).unwrap();
        let q = DesignQuery::new([FaultModelClass::Fault], [Capability::Detection]);
        let all = synthesize_all(&g, &c, &q).unwrap();
        let s = all.iter().find(|s| s.state_binding == STATELESS).unwrap();
        assert!(explain(&g, &c, s).unwrap().text().contains("no protection domain is scoped"));
    }

    #[test]
    fn used_with_pairs_are_named() {
        let c = builtin_catalog();
        let g = build_language_graph(&c, &EdgeOverlay::empty()).unwrap();
        let q = DesignQuery::new([FaultModelClass::Fault], [Capability::Detection])
            .with_mode(crate::synthesis::EntryMode::ImplementationFirst)
            .with_seeds(["monitoring", "rollback"]);
        let all = synthesize_all(&g, &c, &q).unwrap();
        let s = &all[0];
        let text = explain(&g, &c, s).unwrap().text();
        assert!(text.contains("`monitoring` and `rollback` are composed along a used_with edge"), "{text}");
    }
}
