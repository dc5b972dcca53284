//! Output formats: result JSON, solution-path and panel CSV, Graphviz DOT.
//!
//! All numbers are written as `f64` in shortest round-trip form, with `.`
//! as decimal separator and `\n` line endings.

use std::fmt::Write as _;

use serde_json::{json, Value};

use crate::copula::SamplePanel;
use crate::scalar::Real;
use crate::solver::SolutionPath;
use crate::tasks::{BipartiteCausalGraph, ScoredIndex, Segmentation};

fn scored(items: &[ScoredIndex<impl Real>]) -> Value {
    Value::Array(
        items
            .iter()
            .map(|s| json!({ "t": s.t, "score": s.score.as_f64() }))
            .collect(),
    )
}

pub fn segmentation_value<T: Real>(s: &Segmentation<T>) -> Value {
    let objectives = match &s.objective_totals {
        Some(o) => json!({ "out": o.out.as_f64(), "in": o.incoming.as_f64(), "eq": o.eq.as_f64() }),
        None => Value::Null,
    };
    json!({
        "n": s.n,
        "x_out": scored(&s.x_out),
        "x_in": scored(&s.x_in),
        "x_eq": scored(&s.x_eq),
        "threshold": s.threshold_used.as_f64(),
        "objectives": objectives,
    })
}

pub fn segmentation_json<T: Real>(s: &Segmentation<T>) -> String {
    let mut out = serde_json::to_string_pretty(&segmentation_value(s)).expect("json value");
    out.push('\n');
    out
}

pub fn bipartite_value<T: Real>(g: &BipartiteCausalGraph<T>) -> Value {
    let arrows = |a: &[crate::tasks::Arrow<T>]| -> Value {
        Value::Array(
            a.iter()
                .map(|a| json!([a.source, a.target, a.score.as_f64()]))
                .collect(),
        )
    };
    json!({
        "n": g.n(),
        "arrows_x_to_y": arrows(g.arrows_x_to_y()),
        "arrows_y_to_x": arrows(g.arrows_y_to_x()),
        "couplings": Value::Array(
            g.coupling_edges()
                .iter()
                .map(|c| json!([c.t, c.score_x.as_f64(), c.score_y.as_f64()]))
                .collect()
        ),
        "threshold": g.threshold_used().as_f64(),
    })
}

pub fn bipartite_json<T: Real>(g: &BipartiteCausalGraph<T>) -> String {
    let mut out = serde_json::to_string_pretty(&bipartite_value(g)).expect("json value");
    out.push('\n');
    out
}

/// `step,kappa,coordinate,objective` with 1-based steps and time indices.
pub fn path_csv<T: Real>(path: &SolutionPath<T>) -> String {
    let mut out = String::from("step,kappa,coordinate,objective\n");
    for s in &path.steps {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            s.step_index + 1,
            s.kappa.as_f64(),
            s.coordinate + 1,
            s.objective.as_f64()
        );
    }
    out
}

pub fn panel_header(n: usize) -> Vec<String> {
    (1..=n)
        .map(|t| format!("x{t}"))
        .chain((1..=n).map(|t| format!("y{t}")))
        .collect()
}

pub fn panel_csv<T: Real>(panel: &SamplePanel<T>) -> String {
    let mut out = panel_header(panel.n()).join(",");
    out.push('\n');
    for i in 0..panel.d_samples() {
        let row: Vec<String> = panel
            .values()
            .row(i)
            .iter()
            .map(|v| v.as_f64().to_string())
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Graphviz rendering: X and Y in two rows ordered by time, arrows as
/// directed edges, couplings as `dir=none`, `penwidth` growing with score.
pub fn bipartite_dot<T: Real>(g: &BipartiteCausalGraph<T>) -> String {
    let n = g.n();
    let max_score = g
        .arrows_x_to_y()
        .iter()
        .chain(g.arrows_y_to_x())
        .map(|a| a.score.as_f64())
        .chain(g.coupling_edges().iter().map(|c| c.score_x.max(c.score_y).as_f64()))
        .fold(0.0f64, f64::max);
    let width = |s: f64| {
        if max_score > 0.0 {
            1.0 + 4.0 * s / max_score
        } else {
            1.0
        }
    };

    let mut out = String::from("digraph causal_bipartite {\n  newrank=true;\n  node [shape=circle];\n");
    for (series, label) in [('x', 'X'), ('y', 'Y')] {
        let _ = write!(out, "  {{ rank=same;");
        for t in 1..=n {
            let _ = write!(out, " {series}{t} [label=\"{label}{t}\"];");
        }
        out.push_str(" }\n");
    }
    for a in g.arrows_x_to_y() {
        let _ = writeln!(out, "  x{} -> y{} [penwidth={:.3}];", a.source, a.target, width(a.score.as_f64()));
    }
    for a in g.arrows_y_to_x() {
        let _ = writeln!(out, "  y{} -> x{} [penwidth={:.3}];", a.source, a.target, width(a.score.as_f64()));
    }
    for c in g.coupling_edges() {
        let _ = writeln!(
            out,
            "  x{t} -> y{t} [dir=none, penwidth={:.3}];",
            width(c.score_x.max(c.score_y).as_f64()),
            t = c.t
        );
    }
    out.push_str("}\n");
    out
}
