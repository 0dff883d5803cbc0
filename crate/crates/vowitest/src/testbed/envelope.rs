//! The command-report envelope and its length-prefixed JSON framing. The
//! envelope is the controller/agent contract; whether it crosses a stream
//! socket or an in-process boundary is up to the link.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::testcase::{Command, MessageRecord, Receiver};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeKind {
    Command,
    Report,
}

/// Traffic the controller hands to an agent outside of testcase commands:
/// the simulated network fabric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Delivery {
    /// Frames destined for this agent's entity. `tunnel` marks sealed SIP.
    Packets { frames: Vec<PacketFrame> },
    /// Plaintext SIP from the IMS that the tunnel endpoint must seal and
    /// forward to the UE.
    SipToSeal { hex: String },
    /// Plaintext SIP from the UE side for the IMS entity's inbox.
    SipRequest { hex: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacketFrame {
    /// "ike" or "tunnel".
    pub transport: String,
    pub hex: String,
}

impl PacketFrame {
    pub fn bytes(&self) -> Vec<u8> {
        hex::decode(&self.hex).unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeBody {
    Command(Command),
    Deliver(Delivery),
    Report(AgentReport),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AgentReport {
    /// "ready", "done", "timeout" and friends.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<String>,
    /// Messages the entity consumed during this step.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub received: Vec<MessageRecord>,
    /// Messages the entity emitted; the controller routes them onward.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sent: Vec<MessageRecord>,
    /// Plaintext SIP the tunnel endpoint unsealed for the IMS.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub forwarded_sip: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub annotations: Vec<String>,
    /// Last report for the envelope being answered.
    #[serde(default)]
    pub step_complete: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentEnvelope {
    pub kind: EnvelopeKind,
    pub seq: u32,
    pub entity: Receiver,
    pub body: EnvelopeBody,
}

impl AgentEnvelope {
    pub fn command(seq: u32, entity: Receiver, command: Command) -> Self {
        AgentEnvelope { kind: EnvelopeKind::Command, seq, entity, body: EnvelopeBody::Command(command) }
    }

    pub fn deliver(seq: u32, entity: Receiver, delivery: Delivery) -> Self {
        AgentEnvelope { kind: EnvelopeKind::Command, seq, entity, body: EnvelopeBody::Deliver(delivery) }
    }

    pub fn report(seq: u32, entity: Receiver, report: AgentReport) -> Self {
        AgentEnvelope { kind: EnvelopeKind::Report, seq, entity, body: EnvelopeBody::Report(report) }
    }

    pub fn as_report(&self) -> Option<&AgentReport> {
        match &self.body {
            EnvelopeBody::Report(r) => Some(r),
            _ => None,
        }
    }
}

/// 4-octet big-endian length prefix, then UTF-8 JSON.
pub fn write_frame<W: Write>(w: &mut W, env: &AgentEnvelope) -> std::io::Result<()> {
    let body = serde_json::to_vec(env)?;
    w.write_all(&(body.len() as u32).to_be_bytes())?;
    w.write_all(&body)?;
    w.flush()
}

pub fn read_frame<R: Read>(r: &mut R) -> std::io::Result<AgentEnvelope> {
    let mut len = [0u8; 4];
    r.read_exact(&mut len)?;
    let len = u32::from_be_bytes(len) as usize;
    let mut body = vec![0u8; len];
    r.read_exact(&mut body)?;
    serde_json::from_slice(&body).map_err(std::io::Error::other)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_round_trip() {
        let env = AgentEnvelope::command(7, Receiver::Epdg, Command::send(1, Receiver::Epdg, "x"));
        let mut buf = Vec::new();
        write_frame(&mut buf, &env).unwrap();
        assert_eq!(&buf[..4], &(buf.len() as u32 - 4).to_be_bytes());
        let back = read_frame(&mut buf.as_slice()).unwrap();
        assert_eq!(back, env);
    }

    #[test]
    fn short_frame_is_an_error() {
        let buf = vec![0, 0, 0, 10, b'{'];
        assert!(read_frame(&mut buf.as_slice()).is_err());
    }

    #[test]
    fn delivery_round_trip() {
        let env = AgentEnvelope::deliver(
            1,
            Receiver::Ue,
            Delivery::Packets {
                frames: vec![PacketFrame { transport: "ike".into(), hex: "AB".into() }],
            },
        );
        let mut buf = Vec::new();
        write_frame(&mut buf, &env).unwrap();
        let back = read_frame(&mut buf.as_slice()).unwrap();
        assert_eq!(back, env);
    }
}
