//! Rendering helpers shared by every JSON document the tools emit.

use serde::Deserialize;
use serde_json::{json, Value};

use crate::error::Infeasibility;
use crate::model::{ModelError, NodeId};
use crate::placement::Solution;
use crate::Mode;

/// Pretty-printed, key-sorted, newline-terminated.
pub fn render(value: &Value) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("values always serialize");
    text.push('\n');
    text
}

/// Wide integers become JSON numbers when they fit in 64 bits.
pub fn wide(v: u128) -> Value {
    match u64::try_from(v) {
        Ok(v) => json!(v),
        Err(_) => json!(v.to_string()),
    }
}

/// Solution document of a solved instance. The trace lists every
/// placement call in execution order.
pub fn solution_to_value(sol: &Solution, mode: Mode, with_trace: bool) -> Value {
    let mut doc = json!({
        "mode": mode.as_str(),
        "count": sol.placement.cardinality,
        "replicas": sol.placement.replicas_original,
    });
    if with_trace {
        let trace: Vec<Value> = sol
            .placement
            .trace(&sol.tree, &sol.table)
            .into_iter()
            .map(|t| json!({ "node": t.node, "i": t.i, "placed": t.placed }))
            .collect();
        doc["trace"] = json!(trace);
    }
    doc
}

/// Solution document of an instance with no feasible placement.
pub fn infeasible_to_value(why: &Infeasibility, mode: Mode) -> Value {
    json!({
        "mode": mode.as_str(),
        "count": null,
        "replicas": null,
        "infeasible": { "reason": why.reason(), "detail": why.to_string() },
    })
}

/// The parts of a solution document the verifier needs.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct SolutionDoc {
    /// `None` for an infeasible verdict.
    pub replicas: Option<Vec<NodeId>>,
    #[serde(default)]
    pub mode: Option<String>,
    #[serde(default)]
    pub count: Option<usize>,
}

pub fn parse_solution(text: &str) -> Result<SolutionDoc, ModelError> {
    let doc: SolutionDoc = serde_json::from_str(text).map_err(|e| ModelError::MalformedDocument(e.to_string()))?;
    if let (Some(replicas), Some(count)) = (&doc.replicas, doc.count) {
        if replicas.len() != count {
            return Err(ModelError::MalformedDocument(format!(
                "count {count} disagrees with {} listed replicas",
                replicas.len()
            )));
        }
    }
    Ok(doc)
}
