//! Module dependency rules: one-way edges only, lower-level modules depend
//! on higher-level ones.
//!
//! The rank order (higher number = lower level) is: theory 1, experiment 2,
//! training and evolution 3, replication 4, aggregation 5. The introduction
//! module describes the package itself rather than the experiment, so it is
//! exempt from the rank check; edges touching it are only subject to the
//! acyclicity rule.

use std::collections::BTreeSet;
use std::fmt;

use crate::finding::{sort_findings, Finding, FindingCode, Locus, RuleSource, Severity};
use crate::model::{ModuleKind, Package};

/// A node in the dependency graph: a module kind, plus the study index for
/// study modules so distinct replications are distinct nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModuleId {
    pub kind: ModuleKind,
    pub study_index: Option<u32>,
}

impl ModuleId {
    pub fn core(kind: ModuleKind) -> ModuleId {
        ModuleId {
            kind,
            study_index: None,
        }
    }

    pub fn study(kind: ModuleKind, index: u32) -> ModuleId {
        ModuleId {
            kind,
            study_index: Some(index),
        }
    }
}

impl fmt::Display for ModuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.study_index {
            Some(n) => write!(f, "{} {}.{n}", self.kind.label(), self.kind.number()),
            None => f.write_str(self.kind.label()),
        }
    }
}

/// Abstraction rank of a kind; `None` for the rank-exempt introduction.
pub fn dependency_rank(kind: ModuleKind) -> Option<u8> {
    match kind {
        ModuleKind::Introduction => None,
        ModuleKind::Theory => Some(1),
        ModuleKind::Experiment => Some(2),
        ModuleKind::Training | ModuleKind::Evolution => Some(3),
        ModuleKind::Replication => Some(4),
        ModuleKind::Aggregation => Some(5),
    }
}

/// A directed dependency graph over package modules.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DependencyGraph {
    edges: BTreeSet<(ModuleId, ModuleId)>,
}

impl DependencyGraph {
    pub fn new() -> DependencyGraph {
        DependencyGraph::default()
    }

    /// Adds `from -> to` ("from depends on to"). Returns false if present.
    pub fn add_edge(&mut self, from: ModuleId, to: ModuleId) -> bool {
        self.edges.insert((from, to))
    }

    pub fn edges(&self) -> impl Iterator<Item = &(ModuleId, ModuleId)> {
        self.edges.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    fn nodes(&self) -> Vec<ModuleId> {
        let mut nodes = BTreeSet::new();
        for (from, to) in &self.edges {
            nodes.insert(*from);
            nodes.insert(*to);
        }
        nodes.into_iter().collect()
    }

    /// The implied dependency structure of a package: every module supports
    /// the experiment, the experiment rests on the theory.
    pub fn canonical_for(package: &Package) -> DependencyGraph {
        let mut graph = DependencyGraph::new();
        let experiment = ModuleId::core(ModuleKind::Experiment);
        let present = |kind: ModuleKind| package.core(kind).is_some();
        if present(ModuleKind::Experiment) && present(ModuleKind::Theory) {
            graph.add_edge(experiment, ModuleId::core(ModuleKind::Theory));
        }
        for kind in [ModuleKind::Training, ModuleKind::Evolution] {
            if present(kind) && present(ModuleKind::Experiment) {
                graph.add_edge(ModuleId::core(kind), experiment);
            }
        }
        for module in &package.study_modules {
            if let Some(n) = module.study_index {
                if present(ModuleKind::Experiment) {
                    graph.add_edge(ModuleId::study(module.kind, n), experiment);
                }
            }
        }
        graph
    }
}

/// Checks the dependency invariants: the graph must be acyclic and every
/// edge must point from a lower-level module to a higher-level one. Returns
/// one finding per rank-violating edge and one per cyclic module group;
/// an empty result means the graph is a rank-respecting DAG.
pub fn validate_dependencies(graph: &DependencyGraph) -> Vec<Finding> {
    let mut findings = Vec::new();

    for (from, to) in graph.edges() {
        if from == to {
            // Self-loops are reported as cycles below, not as rank issues.
            continue;
        }
        if let (Some(from_rank), Some(to_rank)) = (dependency_rank(from.kind), dependency_rank(to.kind)) {
            if from_rank <= to_rank {
                findings.push(Finding::new(
                    FindingCode::RankViolation,
                    Severity::Error,
                    Locus::module(from.to_string()),
                    format!(
                        "dependency `{from}` -> `{to}` points against the module rank order (dependencies must go from lower-level to higher-level modules)"
                    ),
                    RuleSource::Dependency,
                ));
            }
        }
    }

    for group in cyclic_groups(graph) {
        let names: Vec<String> = group.iter().map(ModuleId::to_string).collect();
        findings.push(Finding::new(
            FindingCode::CycleDetected,
            Severity::Error,
            Locus::module(names[0].clone()),
            format!("dependency cycle through: {}", names.join(", ")),
            RuleSource::Dependency,
        ));
    }

    sort_findings(&mut findings);
    findings
}

/// Strongly connected groups that contain a cycle (self-loops included),
/// computed over the reachability closure. Deterministic: groups and their
/// members come out in node order.
fn cyclic_groups(graph: &DependencyGraph) -> Vec<Vec<ModuleId>> {
    let nodes = graph.nodes();
    let n = nodes.len();
    if n == 0 {
        return Vec::new();
    }
    let index_of = |id: &ModuleId| nodes.binary_search(id).expect("node listed");

    // reach[i] is a bitmask of nodes reachable from i in one or more steps.
    let mut reach: Vec<u64> = vec![0; n];
    for (from, to) in graph.edges() {
        reach[index_of(from)] |= 1u64 << index_of(to);
    }
    for _ in 0..n {
        for i in 0..n {
            let mut acc = reach[i];
            let mut targets = reach[i];
            while targets != 0 {
                let j = targets.trailing_zeros() as usize;
                targets &= targets - 1;
                acc |= reach[j];
            }
            reach[i] = acc;
        }
    }

    let mut grouped = vec![false; n];
    let mut groups = Vec::new();
    for i in 0..n {
        if grouped[i] || reach[i] & (1 << i) == 0 {
            continue;
        }
        let mut group = Vec::new();
        for (j, node) in nodes.iter().enumerate().skip(i) {
            let mutual = reach[i] & (1 << j) != 0 && reach[j] & (1 << i) != 0;
            if j == i || mutual {
                grouped[j] = true;
                group.push(*node);
            }
        }
        groups.push(group);
    }
    groups
}

#[cfg(test)]
mod tests {
    use super::*;

    fn core(kind: ModuleKind) -> ModuleId {
        ModuleId::core(kind)
    }

    #[test]
    fn replication_experiment_theory_chain_is_clean() {
        let mut graph = DependencyGraph::new();
        graph.add_edge(ModuleId::study(ModuleKind::Replication, 1), core(ModuleKind::Experiment));
        graph.add_edge(core(ModuleKind::Experiment), core(ModuleKind::Theory));
        assert_eq!(validate_dependencies(&graph), vec![]);
    }

    #[test]
    fn upward_edge_is_a_rank_violation() {
        let mut graph = DependencyGraph::new();
        graph.add_edge(core(ModuleKind::Theory), ModuleId::study(ModuleKind::Replication, 1));
        let findings = validate_dependencies(&graph);
        assert_eq!(findings.len(), 1);
        assert_eq!(findings[0].code, FindingCode::RankViolation);
    }

    #[test]
    fn self_loop_reports_exactly_one_cycle_finding() {
        let mut graph = DependencyGraph::new();
        graph.add_edge(core(ModuleKind::Experiment), core(ModuleKind::Experiment));
        let findings = validate_dependencies(&graph);
        assert_eq!(findings.len(), 1);
        assert_eq!(findings[0].code, FindingCode::CycleDetected);
    }

    #[test]
    fn two_cycle_through_introduction_is_detected_without_rank_noise() {
        let mut graph = DependencyGraph::new();
        graph.add_edge(core(ModuleKind::Theory), core(ModuleKind::Introduction));
        graph.add_edge(core(ModuleKind::Introduction), core(ModuleKind::Theory));
        let findings = validate_dependencies(&graph);
        assert_eq!(findings.len(), 1);
        assert_eq!(findings[0].code, FindingCode::CycleDetected);
        assert!(findings[0].message.contains("introduction"));
        assert!(findings[0].message.contains("theory"));
    }

    #[test]
    fn equal_rank_edge_is_rejected() {
        let mut graph = DependencyGraph::new();
        graph.add_edge(core(ModuleKind::Training), core(ModuleKind::Evolution));
        let findings = validate_dependencies(&graph);
        assert_eq!(findings.len(), 1);
        assert_eq!(findings[0].code, FindingCode::RankViolation);
    }
}
