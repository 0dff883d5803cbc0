//! The UE agent: hosts the simulated device and maps control commands onto
//! its power and connectivity events.

use crate::testcase::{Command, MessageRecord, Op, Receiver};
use crate::ue::{ue_reset, NetPacket, UeEvent, UeOutput, UeProfile, UeState};

use super::envelope::{AgentEnvelope, AgentReport, Delivery, EnvelopeBody};
use super::link::Agent;

pub struct UeAgent {
    profile: UeProfile,
    seed: u64,
    state: UeState,
}

impl UeAgent {
    pub fn new(profile: UeProfile, seed: u64) -> Self {
        let state = ue_reset(&profile, seed);
        UeAgent { profile, seed, state }
    }

    fn record_output(&self, out: UeOutput, report: &mut AgentReport) {
        report.annotations.extend(out.annotations);
        for packet in out.packets {
            let (transport, protocol) = match &packet {
                NetPacket::Ike(_) => ("ike", "ike"),
                NetPacket::Tunnel(_) => ("tunnel", "sip"),
            };
            report.sent.push(MessageRecord {
                sender: Receiver::Ue,
                protocol: protocol.into(),
                transport: transport.into(),
                name: None,
                detail: Vec::new(),
                error_indication: false,
                hex: hex::encode_upper(packet.bytes()),
            });
        }
    }

    fn execute(&mut self, cmd: &Command) -> AgentReport {
        let mut report = AgentReport { step_complete: true, ..Default::default() };
        match cmd.op {
            Op::Reboot => {
                self.state = ue_reset(&self.profile, self.seed);
                report.status = Some("ready".into());
                report.annotations.push("ue_rebooted".into());
            }
            Op::WifiOn => {
                let out = self.state.step(&self.profile, UeEvent::WifiOn);
                report.status = Some("done".into());
                self.record_output(out, &mut report);
            }
            Op::WifiOff => {
                let out = self.state.step(&self.profile, UeEvent::WifiOff);
                report.status = Some("done".into());
                self.record_output(out, &mut report);
            }
            _ => {
                report.status = Some("error".into());
                report.annotations.push(format!("ue_agent_cannot_{}", cmd.op));
            }
        }
        report
    }
}

impl Agent for UeAgent {
    fn handle(&mut self, env: AgentEnvelope) -> Vec<AgentEnvelope> {
        let report = match &env.body {
            EnvelopeBody::Command(cmd) => self.execute(cmd),
            EnvelopeBody::Deliver(Delivery::Packets { frames }) => {
                let mut report = AgentReport { step_complete: true, ..Default::default() };
                for frame in frames {
                    let packet = match frame.transport.as_str() {
                        "tunnel" => NetPacket::Tunnel(frame.bytes()),
                        _ => NetPacket::Ike(frame.bytes()),
                    };
                    let out = self.state.step(&self.profile, UeEvent::Network(packet));
                    self.record_output(out, &mut report);
                }
                report
            }
            _ => AgentReport {
                status: Some("error".into()),
                annotations: vec!["unexpected_envelope".into()],
                step_complete: true,
                ..Default::default()
            },
        };
        vec![AgentEnvelope::report(env.seq, Receiver::Ue, report)]
    }
}
