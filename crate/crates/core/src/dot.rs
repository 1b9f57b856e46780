//! Graphviz rendering of a gross trace.
//!
//! Process nodes go in an `observation` cluster and object nodes in a `use`
//! cluster; the user node stays outside both. Output depends only on the
//! trace, so equal traces render to equal text.

use std::fmt::Write;

use crate::clover::{EdgeKind, NodeKind};
use crate::trace::GrossTrace;

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn shape(kind: NodeKind) -> &'static str {
    match kind {
        NodeKind::User => "ellipse",
        NodeKind::Process => "box",
        NodeKind::Object => "note",
    }
}

fn edge_style(kind: EdgeKind) -> &'static str {
    match kind {
        EdgeKind::Contextualization => "style=dashed, label=\"ctx\"",
        EdgeKind::Composition => "style=bold, label=\"comp\"",
        EdgeKind::Instantiation => "style=dotted, label=\"inst\"",
        EdgeKind::Manipulation => "style=solid",
        EdgeKind::TemporalNext => "style=solid, color=gray40, label=\"next\"",
    }
}

pub fn to_dot(trace: &GrossTrace) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph \"{}\" {{", escape(trace.session()));
    out.push_str("  rankdir=LR;\n");
    let node_line = |out: &mut String, n: &crate::clover::ConcreteNode, indent: &str| {
        let _ = writeln!(
            out,
            "{indent}{} [shape={}, label=\"{}\\nt={}\"];",
            n.id,
            shape(n.abstract_node.kind),
            escape(&n.label),
            n.timestamp
        );
    };
    for n in trace.nodes().iter().filter(|n| n.abstract_node.kind == NodeKind::User) {
        node_line(&mut out, n, "  ");
    }
    for (cluster, kind) in [("observation", NodeKind::Process), ("use", NodeKind::Object)] {
        let _ = writeln!(out, "  subgraph cluster_{cluster} {{");
        let _ = writeln!(out, "    label=\"{cluster} model\";");
        for n in trace.nodes().iter().filter(|n| n.abstract_node.kind == kind) {
            node_line(&mut out, n, "    ");
        }
        out.push_str("  }\n");
    }
    for e in trace.edges() {
        let _ = writeln!(out, "  {} -> {} [{}];", e.from, e.to, edge_style(e.kind));
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samples;

    #[test]
    fn sale_trace_renders_all_nodes() {
        let dot = to_dot(&samples::sale_trace("X", "s"));
        let nodes = dot.lines().filter(|l| l.contains("[shape=")).count();
        assert_eq!(nodes, 31);
        assert!(dot.contains("cluster_observation") && dot.contains("cluster_use"));
        assert!(dot.contains("Sale[ID-Seller]->Seller"));
        assert_eq!(dot, to_dot(&samples::sale_trace("X", "s")));
    }
}
