//! Graphviz and plain-text renderings: learned machines as DOT graphs and
//! the sample tables as an annotated snapshot (one abstract edge, then the
//! concrete rows that witnessed it).

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::control::{DeltaMap, LambdaMap, StateId, StateTable};
use crate::efsm::{Efsm, OutputSpec};
use crate::reduce::ReducedMachine;

fn escape(label: &str) -> String {
    label.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Render a machine definition as a DOT digraph. The initial state gets an
/// unlabeled entry arrow; edge labels carry guard, output and updates in
/// the definition syntax.
pub fn efsm_dot(m: &Efsm) -> String {
    let mut out = String::from("digraph efsm {\n  rankdir=LR;\n  node [shape=circle];\n");
    out.push_str("  __start [shape=point];\n");
    let _ = writeln!(out, "  __start -> \"{}\";", escape(&m.initial_state));
    for s in &m.states {
        let _ = writeln!(out, "  \"{}\";", escape(s));
    }
    for t in &m.transitions {
        let own: Vec<String> = m
            .input_signature(&t.input)
            .map(|sig| sig.param_names().map(|s| s.to_string()).collect())
            .unwrap_or_default();
        let shadowed = |name: &str| own.iter().any(|p| p == name);
        let mut label = format!("{}({})", t.input, own.join(", "));
        if let Some(g) = &t.guard {
            let _ = write!(label, " [{}]", g.render(&shadowed));
        }
        match &t.output {
            OutputSpec::Silent => label.push_str(" / omega"),
            OutputSpec::Event { name, args } => {
                let rendered: Vec<String> =
                    args.iter().map(|e| e.render(&shadowed)).collect();
                let _ = write!(label, " / {}({})", name, rendered.join(", "));
            }
        }
        let mut label = escape(&label);
        if !t.updates.is_empty() {
            let ups: Vec<String> = t
                .updates
                .iter()
                .map(|(r, e)| format!("{r} := {}", e.render(&shadowed)))
                .collect();
            let _ = write!(label, "\\n{{{}}}", escape(&ups.join(", ")));
        }
        let _ = writeln!(
            out,
            "  \"{}\" -> \"{}\" [label=\"{}\"];",
            escape(&t.source),
            escape(&t.target),
            label,
        );
    }
    out.push_str("}\n");
    out
}

/// Render the merged sampled machine as a DOT digraph of abstract edges.
/// Refusal self-loops are drawn dashed so the behaviour proper stands out.
pub fn reduced_dot(r: &ReducedMachine) -> String {
    let mut out =
        String::from("digraph sampled {\n  rankdir=LR;\n  node [shape=circle];\n");
    for block in 0..r.blocks.len() {
        let _ = writeln!(out, "  q{block};");
    }
    for ((source, input, output), target) in &r.delta {
        let refused = matches!(output, crate::efsm::AbstractOut::Refused);
        let style = if refused { ", style=dashed" } else { "" };
        let _ = writeln!(
            out,
            "  q{} -> q{} [label=\"{} / {}\"{}];",
            source, target, input, output, style
        );
    }
    out.push_str("}\n");
    out
}

/// Plain-text snapshot of the sample tables: every identified state with
/// its characterization and tracked-register slice, every abstract edge,
/// and under each edge the concrete rows that witnessed it as
/// `(registers before, input, output, registers after)`.
pub fn sampled_fsm(
    table: &StateTable,
    delta: &DeltaMap,
    lambda: &LambdaMap,
    states: &BTreeSet<StateId>,
) -> String {
    let mut out = String::new();
    for &q in states {
        let node = table.node(q);
        let charac: Vec<String> = node
            .charac
            .values()
            .map(|resp| {
                resp.iter()
                    .map(|o| o.to_string())
                    .collect::<Vec<_>>()
                    .join(".")
            })
            .collect();
        let _ = writeln!(out, "state {q}: ({}) {}", charac.join(", "), node.rw);
        for ((source, input, output), target) in delta.entries() {
            if *source != q {
                continue;
            }
            let _ = writeln!(out, "  {input} / {output} -> {target}");
            for row in lambda.rows(q, input, output) {
                let _ = writeln!(
                    out,
                    "    ({}, {}, {}, {}) @{}",
                    row.r, row.x, row.y, row.r1, row.step
                );
            }
        }
    }
    out
}

/// Re-render a `sampled_fsm` snapshot as a DOT digraph, keeping only the
/// state headers and abstract edges. Returns `None` if the text does not
/// look like a snapshot.
pub fn snapshot_dot(text: &str) -> Option<String> {
    let mut out =
        String::from("digraph sampled {\n  rankdir=LR;\n  node [shape=circle];\n");
    let mut current: Option<String> = None;
    let mut edges = 0usize;
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("state ") {
            let id = rest.split(':').next()?.trim().to_string();
            let label = rest.split_once(':').map(|(_, l)| l.trim()).unwrap_or("");
            let _ = writeln!(out, "  s{} [label=\"{}\\n{}\"];", id, id, escape(label));
            current = Some(id);
        } else if line.starts_with("    ") {
            continue; // concrete witness row
        } else if let Some(edge) = line.strip_prefix("  ") {
            let source = current.clone()?;
            let (label, target) = edge.rsplit_once(" -> ")?;
            let _ = writeln!(
                out,
                "  s{} -> s{} [label=\"{}\"];",
                source,
                target.trim(),
                escape(label.trim())
            );
            edges += 1;
        }
    }
    if current.is_none() || edges == 0 {
        return None;
    }
    out.push_str("}\n");
    Some(out)
}
