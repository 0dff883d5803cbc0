//! Proposal selection against an acceptance policy.

use std::collections::BTreeSet;

use crate::crypto::{TransformId, TransformKind};

use super::{IkeError, Proposal, Transform};

/// The set of transform ids a negotiator will accept, per kind.
#[derive(Debug, Clone, Default)]
pub struct AcceptancePolicy {
    accepted: BTreeSet<(u8, u16)>,
}

impl AcceptancePolicy {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn allow(&mut self, t: TransformId) -> &mut Self {
        self.accepted.insert((t.kind.wire_type(), t.id));
        self
    }

    pub fn allow_all_registered() -> Self {
        let mut p = Self::new();
        for kind in [TransformKind::Encr, TransformKind::Prf, TransformKind::Integ, TransformKind::Dh] {
            for t in crate::crypto::registered(kind) {
                p.allow(t);
            }
        }
        p
    }

    pub fn accepts(&self, kind: u8, id: u16) -> bool {
        self.accepted.contains(&(kind, id))
    }
}

/// One transform id per kind, picked from a single proposal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChosenTransforms {
    pub proposal_number: u8,
    pub encr: TransformId,
    pub prf: TransformId,
    pub integ: TransformId,
    pub dh: TransformId,
}

impl ChosenTransforms {
    /// Re-encode the choice as a one-proposal SA payload body.
    pub fn to_proposal(&self) -> Proposal {
        let mut encr = Transform::new(TransformKind::Encr.wire_type(), self.encr.id);
        if self.encr.name() == "ENCR_AES_CBC_128" {
            encr.attributes.push(super::TransformAttribute::key_length(128));
        }
        Proposal {
            number: self.proposal_number,
            protocol_id: 1,
            spi: Vec::new(),
            transforms: vec![
                encr,
                Transform::new(TransformKind::Prf.wire_type(), self.prf.id),
                Transform::new(TransformKind::Integ.wire_type(), self.integ.id),
                Transform::new(TransformKind::Dh.wire_type(), self.dh.id),
            ],
        }
    }
}

fn first_accepted(p: &Proposal, kind: TransformKind, policy: &AcceptancePolicy) -> Option<TransformId> {
    let wire = kind.wire_type();
    p.transforms
        .iter()
        .filter(|t| t.kind == wire)
        .find(|t| policy.accepts(wire, t.id))
        .and_then(|t| TransformId::new(kind, t.id))
}

/// Pick the first offered proposal in which every transform kind has an
/// acceptable id; within that proposal, the first acceptable id per kind
/// wins. Deterministic and order-respecting.
pub fn select_proposal(offered: &[Proposal], policy: &AcceptancePolicy) -> Result<ChosenTransforms, IkeError> {
    for p in offered {
        let encr = first_accepted(p, TransformKind::Encr, policy);
        let prf = first_accepted(p, TransformKind::Prf, policy);
        let integ = first_accepted(p, TransformKind::Integ, policy);
        let dh = first_accepted(p, TransformKind::Dh, policy);
        if let (Some(encr), Some(prf), Some(integ), Some(dh)) = (encr, prf, integ, dh) {
            return Ok(ChosenTransforms { proposal_number: p.number, encr, prf, integ, dh });
        }
    }
    Err(IkeError::NoProposalChosen)
}
