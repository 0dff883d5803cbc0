//! The protocol flow graph: registration states and the messages that move
//! between them, abstracted from the authentication and registration call
//! flows of the underlying standards.

use std::collections::{HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::testcase::{MessageVocab, Receiver};

use super::TestgenError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowEdge {
    pub from: String,
    pub to: String,
    pub message: String,
    pub sender: Receiver,
}

/// Definition-file form of the graph.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowDefinition {
    pub start: String,
    pub edges: Vec<FlowEdge>,
}

#[derive(Debug, Clone)]
pub struct FlowGraph {
    pub start: String,
    pub edges: Vec<FlowEdge>,
    by_state: HashMap<String, Vec<usize>>,
}

impl FlowGraph {
    /// Validate a definition: no duplicate (state, message) edges, and every
    /// message reachable from the start state.
    pub fn build(def: FlowDefinition) -> Result<Self, TestgenError> {
        let mut seen = HashSet::new();
        let mut by_state: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, e) in def.edges.iter().enumerate() {
            if !seen.insert((e.from.clone(), e.message.clone())) {
                return Err(TestgenError::DuplicateEdge(format!("{} -> {}", e.from, e.message)));
            }
            by_state.entry(e.from.clone()).or_default().push(i);
        }
        let graph = FlowGraph { start: def.start, edges: def.edges, by_state };

        let mut reachable = HashSet::new();
        let mut queue = VecDeque::from([graph.start.clone()]);
        reachable.insert(graph.start.clone());
        while let Some(state) = queue.pop_front() {
            for &i in graph.by_state.get(&state).into_iter().flatten() {
                let to = &graph.edges[i].to;
                if reachable.insert(to.clone()) {
                    queue.push_back(to.clone());
                }
            }
        }
        if let Some(e) = graph.edges.iter().find(|e| !reachable.contains(&e.from)) {
            return Err(TestgenError::UnreachableState(e.message.clone()));
        }
        Ok(graph)
    }

    pub fn parse(text: &str) -> Result<Self, TestgenError> {
        let def: FlowDefinition =
            serde_json::from_str(text).map_err(|e| TestgenError::SchemaViolation(e.to_string()))?;
        Self::build(def)
    }

    pub fn contains_message(&self, message: &str) -> bool {
        self.edges.iter().any(|e| e.message == message)
    }

    pub fn sender_of(&self, message: &str) -> Option<Receiver> {
        self.edges.iter().find(|e| e.message == message).map(|e| e.sender)
    }

    /// Shortest edge path from the start state up to and including the edge
    /// that carries `message`.
    pub fn path_to_message(&self, message: &str) -> Result<Vec<&FlowEdge>, TestgenError> {
        if !self.contains_message(message) {
            return Err(TestgenError::UnknownMessage(message.to_string()));
        }
        // BFS over states, remembering the edge that discovered each state
        let mut prev: HashMap<&str, usize> = HashMap::new();
        let mut queue = VecDeque::from([self.start.as_str()]);
        let mut visited: HashSet<&str> = HashSet::from([self.start.as_str()]);
        while let Some(state) = queue.pop_front() {
            for &i in self.by_state.get(state).into_iter().flatten() {
                let e = &self.edges[i];
                if e.message == message {
                    let mut path = vec![i];
                    let mut cur = state;
                    while cur != self.start {
                        let j = prev[cur];
                        path.push(j);
                        cur = &self.edges[j].from;
                    }
                    path.reverse();
                    return Ok(path.into_iter().map(|i| &self.edges[i]).collect());
                }
                if visited.insert(&e.to) {
                    prev.insert(&e.to, i);
                    queue.push_back(&e.to);
                }
            }
        }
        Err(TestgenError::UnknownMessage(message.to_string()))
    }

    /// The message the UE is expected to send next, after `message` has been
    /// delivered on the happy path. Used by the function oracle.
    pub fn expected_ue_follow_up(&self, message: &str) -> Option<String> {
        let edge = self.edges.iter().find(|e| e.message == message)?;
        let mut state = edge.to.as_str();
        // walk forward past non-UE edges (linear happy path)
        loop {
            let next = self.by_state.get(state)?.first().map(|&i| &self.edges[i])?;
            if next.sender == Receiver::Ue {
                return Some(next.message.clone());
            }
            state = next.to.as_str();
        }
    }

    /// Replay of the full message walk for PTC validation.
    pub fn is_valid_walk(&self, messages: &[&str]) -> bool {
        let mut state = self.start.as_str();
        for m in messages {
            let next = self
                .by_state
                .get(state)
                .into_iter()
                .flatten()
                .map(|&i| &self.edges[i])
                .find(|e| e.message == *m);
            match next {
                Some(e) => state = e.to.as_str(),
                None => return false,
            }
        }
        true
    }

    pub fn vocab(&self) -> MessageVocab {
        let mut v = MessageVocab::new();
        for e in &self.edges {
            v.add(&e.message, e.sender);
        }
        v
    }
}
