//! The envelope contract over a real stream socket: an ePDG agent served on
//! TCP answers the same command-report protocol the in-process link speaks.

mod common;

use std::net::{TcpListener, TcpStream};
use std::thread;

use common::*;
use vowitest::ike::{parse_message, ExchangeType};
use vowitest::testbed::{
    serve_agent, AgentEnvelope, AgentLink, Delivery, EnvelopeKind, EpdgAgent, PacketFrame,
    Subscriber,
};
use vowitest::testcase::{Command, Receiver};
use vowitest::ue::{ue_reset, UeEvent, NetPacket};

fn subscriber() -> Subscriber {
    let p = shipped_profile("compliant");
    Subscriber { imsi: p.imsi.clone(), secret_k: p.secret_k().unwrap(), op_key: p.op_key().unwrap() }
}

#[test]
fn epdg_agent_over_tcp_answers_commands() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let server = thread::spawn(move || {
        let (stream, _) = listener.accept().unwrap();
        serve_agent(EpdgAgent::new(subscriber(), 42), stream).unwrap();
    });

    let stream = TcpStream::connect(addr).unwrap();
    let mut link = AgentLink::Tcp(stream);

    // feed the agent a real UE request, then command the response
    let profile = shipped_profile("compliant");
    let mut ue = ue_reset(&profile, 7);
    let out = ue.step(&profile, UeEvent::WifiOn);
    let sa_init = match &out.packets[0] {
        NetPacket::Ike(bytes) => bytes.clone(),
        other => panic!("unexpected packet {other:?}"),
    };

    let deliver = AgentEnvelope::deliver(
        1,
        Receiver::Epdg,
        Delivery::Packets {
            frames: vec![PacketFrame { transport: "ike".into(), hex: hex::encode_upper(&sa_init) }],
        },
    );
    let replies = link.exchange(&deliver).unwrap();
    assert_eq!(replies.len(), 1);
    assert_eq!(replies[0].kind, EnvelopeKind::Report);
    assert_eq!(replies[0].seq, 1);
    let report = replies[0].as_report().unwrap();
    assert_eq!(report.received.len(), 1);
    assert_eq!(report.received[0].name.as_deref(), Some("ike_sa_init_request"));
    assert!(report.step_complete);

    let cmd = AgentEnvelope::command(2, Receiver::Epdg, Command::send(1, Receiver::Epdg, "ike_sa_init_response"));
    let replies = link.exchange(&cmd).unwrap();
    let report = replies[0].as_report().unwrap();
    assert_eq!(report.sent.len(), 1);
    let response = parse_message(&report.sent[0].wire_bytes().unwrap()).unwrap();
    assert_eq!(response.header.exchange_type, ExchangeType::IKE_SA_INIT);
    assert!(response.header.is_response());

    // the UE accepts the socket-served response like any other
    let reaction = ue.step(&profile, UeEvent::Network(NetPacket::Ike(report.sent[0].wire_bytes().unwrap())));
    assert_eq!(reaction.packets.len(), 1, "UE continued with IKE_AUTH");

    drop(link);
    server.join().unwrap();
}

#[test]
fn tcp_reports_match_in_process_reports() {
    let run = |mut link: AgentLink| {
        let deliver = AgentEnvelope::deliver(
            9,
            Receiver::Epdg,
            Delivery::Packets {
                frames: vec![PacketFrame { transport: "ike".into(), hex: "00".into() }],
            },
        );
        link.exchange(&deliver).unwrap()
    };

    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let server = thread::spawn(move || {
        let (stream, _) = listener.accept().unwrap();
        serve_agent(EpdgAgent::new(subscriber(), 1), stream).unwrap();
    });
    let over_tcp = run(AgentLink::Tcp(TcpStream::connect(addr).unwrap()));
    server.join().unwrap();

    let in_proc = run(AgentLink::InProc(Box::new(EpdgAgent::new(subscriber(), 1))));
    assert_eq!(over_tcp, in_proc);
}
