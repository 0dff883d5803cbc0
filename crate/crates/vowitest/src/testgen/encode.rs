//! Property-to-testcase encoding: walk the flow graph to the property's
//! message and emit one send command per responder-side message on the way.

use serde::{Deserialize, Serialize};

use crate::testcase::{Command, Provenance, Receiver, TestCase, TestCaseKind};

use super::flow::FlowGraph;
use super::TestgenError;

/// One annotated property from the input corpus. The message name is part
/// of the annotation; properties whose text lacks one carry it here just
/// the same.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Property {
    pub prop_id: String,
    pub text: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub target_fields: Vec<TargetField>,
    pub source: String,
    /// Corpus metadata, e.g. properties whose multi-round shape the linear
    /// flow does not model.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetField {
    pub attribute: String,
    pub value: crate::testcase::CommandValue,
}

/// Encode one property into a primary testcase.
pub fn encode_property(p: &Property, g: &FlowGraph) -> Result<TestCase, TestgenError> {
    let path = g.path_to_message(&p.message)?;
    let final_edge = path.last().expect("path includes the target message");
    if final_edge.sender == Receiver::Ue {
        return Err(TestgenError::NotCommandable(p.message.clone()));
    }
    let mut commands = Vec::new();
    for edge in &path {
        if edge.sender == Receiver::Ue {
            continue;
        }
        let id = commands.len() as u32 + 1;
        commands.push(Command::send(id, edge.sender, &edge.message));
    }
    if let Some(field) = p.target_fields.first() {
        let last = commands.last_mut().expect("responder path is non-empty");
        last.attribute = Some(field.attribute.clone());
        last.value = Some(field.value.clone());
    }
    Ok(TestCase {
        tc_id: p.prop_id.clone(),
        kind: TestCaseKind::Ptc,
        provenance: Provenance { property: Some(p.prop_id.clone()), transform: None },
        commands,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EncodeIssue {
    pub prop_id: String,
    pub error: String,
}

/// Encode a whole corpus, deterministically ordered by prop_id. Per-property
/// failures are collected, not fatal.
pub fn encode_corpus(properties: &[Property], g: &FlowGraph) -> (Vec<TestCase>, Vec<EncodeIssue>) {
    let mut sorted: Vec<&Property> = properties.iter().collect();
    sorted.sort_by(|a, b| a.prop_id.cmp(&b.prop_id));
    let mut ptcs = Vec::new();
    let mut issues = Vec::new();
    for p in sorted {
        match encode_property(p, g) {
            Ok(tc) => ptcs.push(tc),
            Err(e) => issues.push(EncodeIssue { prop_id: p.prop_id.clone(), error: e.to_string() }),
        }
    }
    (ptcs, issues)
}

pub fn parse_properties(text: &str) -> Result<Vec<Property>, TestgenError> {
    serde_json::from_str(text).map_err(|e| TestgenError::SchemaViolation(e.to_string()))
}
