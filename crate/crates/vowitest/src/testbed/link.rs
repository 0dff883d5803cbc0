//! Agent links: the same envelope contract over an in-process boundary or a
//! TCP stream. The in-process path still serializes through the frame codec
//! so both transports exercise identical bytes.

use std::io;
use std::net::TcpStream;

use super::envelope::{read_frame, write_frame, AgentEnvelope};

pub trait Agent: Send {
    fn handle(&mut self, env: AgentEnvelope) -> Vec<AgentEnvelope>;
}

pub enum AgentLink {
    InProc(Box<dyn Agent>),
    Tcp(TcpStream),
}

impl AgentLink {
    pub fn exchange(&mut self, env: &AgentEnvelope) -> io::Result<Vec<AgentEnvelope>> {
        match self {
            AgentLink::InProc(agent) => {
                let mut buf = Vec::new();
                write_frame(&mut buf, env)?;
                let decoded = read_frame(&mut buf.as_slice())?;
                let mut replies = Vec::new();
                for out in agent.handle(decoded) {
                    let mut frame = Vec::new();
                    write_frame(&mut frame, &out)?;
                    replies.push(read_frame(&mut frame.as_slice())?);
                }
                Ok(replies)
            }
            AgentLink::Tcp(stream) => {
                write_frame(stream, env)?;
                let mut replies = Vec::new();
                loop {
                    let reply = read_frame(stream)?;
                    let done = reply.as_report().map(|r| r.step_complete).unwrap_or(true);
                    replies.push(reply);
                    if done {
                        break;
                    }
                }
                Ok(replies)
            }
        }
    }
}

/// Serve one agent over an accepted TCP stream until the peer hangs up.
pub fn serve_agent<A: Agent>(mut agent: A, mut stream: TcpStream) -> io::Result<()> {
    loop {
        let env = match read_frame(&mut stream) {
            Ok(env) => env,
            Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(()),
            Err(e) => return Err(e),
        };
        for reply in agent.handle(env) {
            write_frame(&mut stream, &reply)?;
        }
    }
}
