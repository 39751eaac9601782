use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use tracemap_core::{Capability, Ip};

use crate::types::CoordinatorApi;
use crate::{Assignment, Coordinator, CoordinatorError};

/// One protocol message. On the wire every message is framed as the
/// decimal byte length of its JSON body, a newline, then the body:
///
/// ```text
/// <len>\n{"Poll":{"agent_id":"a1","token":"t","budget":2}}
/// ```
///
/// Field meanings:
/// - `Register`: agent identity, shared token, current source interface,
///   and capability set; answered by `Registered` with the join rank.
/// - `Poll`: asks for up to `budget` script assignments; answered by
///   `Assign`.
/// - `Report`: a batch of store lines (one serialized measurement per
///   line); answered by `Ack` carrying the accepted line count.
/// - `Error`: any failure, with a machine-readable code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Message {
    Register {
        agent_id: String,
        token: String,
        source_ip: Ip,
        capabilities: BTreeSet<Capability>,
    },
    Registered {
        rank: u32,
    },
    Poll {
        agent_id: String,
        token: String,
        budget: u32,
    },
    Assign {
        assignments: Vec<Assignment>,
    },
    Report {
        agent_id: String,
        token: String,
        lines: Vec<String>,
    },
    Ack {
        count: u64,
    },
    Error {
        code: String,
        message: String,
    },
}

pub fn write_message<W: Write>(w: &mut W, msg: &Message) -> Result<(), CoordinatorError> {
    let body = serde_json::to_vec(msg).map_err(|e| CoordinatorError::Protocol(e.to_string()))?;
    write!(w, "{}\n", body.len())?;
    w.write_all(&body)?;
    w.flush()?;
    Ok(())
}

pub fn read_message<R: BufRead>(r: &mut R) -> Result<Option<Message>, CoordinatorError> {
    let mut header = String::new();
    if r.read_line(&mut header)? == 0 {
        return Ok(None); // clean EOF
    }
    let len: usize = header
        .trim()
        .parse()
        .map_err(|_| CoordinatorError::Protocol(format!("bad frame header `{}`", header.trim())))?;
    if len > 64 << 20 {
        return Err(CoordinatorError::Protocol("oversized frame".into()));
    }
    let mut body = vec![0u8; len];
    r.read_exact(&mut body)?;
    let msg =
        serde_json::from_slice(&body).map_err(|e| CoordinatorError::Protocol(e.to_string()))?;
    Ok(Some(msg))
}

fn error_message(e: &CoordinatorError) -> Message {
    let code = match e {
        CoordinatorError::ScriptRejected(_) => "script-rejected",
        CoordinatorError::BadReplication => "bad-replication",
        CoordinatorError::RegistrationRequired(_) => "registration-required",
        CoordinatorError::AuthFailed(_) => "auth-failed",
        CoordinatorError::Io(_) => "io",
        CoordinatorError::Protocol(_) => "protocol",
        CoordinatorError::Remote { .. } => "remote",
    };
    Message::Error {
        code: code.into(),
        message: e.to_string(),
    }
}

fn handle(coordinator: &Arc<Mutex<Coordinator>>, msg: Message) -> Message {
    match msg {
        Message::Register {
            agent_id,
            token,
            source_ip,
            capabilities,
        } => {
            let res = coordinator
                .lock()
                .unwrap()
                .register(&agent_id, &token, source_ip, &capabilities);
            match res {
                Ok(rank) => Message::Registered { rank },
                Err(e) => error_message(&e),
            }
        }
        Message::Poll {
            agent_id,
            token,
            budget,
        } => match coordinator.lock().unwrap().poll(&agent_id, &token, budget) {
            Ok(assignments) => Message::Assign { assignments },
            Err(e) => error_message(&e),
        },
        Message::Report {
            agent_id,
            token,
            lines,
        } => {
            let res = coordinator.lock().unwrap().report(&agent_id, &token, lines);
            match res {
                Ok(count) => {
                    // opportunistic background parsing after the ack is
                    // decided; low priority relative to accepting data
                    coordinator.lock().unwrap().process_pending(256);
                    Message::Ack { count }
                }
                Err(e) => error_message(&e),
            }
        }
        other => Message::Error {
            code: "unexpected".into(),
            message: format!("client-only message {other:?}"),
        },
    }
}

/// Accept loop. Runs until `shutdown` flips; each connection is served on
/// its own thread, so concurrent agents interleave at message
/// granularity against the linearizable coordinator.
pub fn serve(
    coordinator: Arc<Mutex<Coordinator>>,
    listener: TcpListener,
    shutdown: Arc<AtomicBool>,
) -> std::io::Result<()> {
    listener.set_nonblocking(true)?;
    let mut workers = Vec::new();
    loop {
        if shutdown.load(Ordering::Relaxed) {
            break;
        }
        match listener.accept() {
            Ok((stream, _)) => {
                let coordinator = coordinator.clone();
                workers.push(std::thread::spawn(move || {
                    let _ = serve_connection(&coordinator, stream);
                }));
            }
            Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                std::thread::sleep(Duration::from_millis(2));
            }
            Err(e) => return Err(e),
        }
    }
    for w in workers {
        let _ = w.join();
    }
    Ok(())
}

fn serve_connection(
    coordinator: &Arc<Mutex<Coordinator>>,
    stream: TcpStream,
) -> Result<(), CoordinatorError> {
    stream.set_nodelay(true).ok();
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut writer = stream;
    while let Some(msg) = read_message(&mut reader)? {
        let reply = handle(coordinator, msg);
        write_message(&mut writer, &reply)?;
    }
    Ok(())
}

/// Socket client speaking the coordinator protocol; the agent-facing
/// counterpart of [`LocalHandle`](crate::LocalHandle).
#[derive(Debug)]
pub struct WireClient {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
}

impl WireClient {
    pub fn connect<A: ToSocketAddrs>(addr: A) -> Result<Self, CoordinatorError> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true).ok();
        Ok(WireClient {
            reader: BufReader::new(stream.try_clone()?),
            writer: stream,
        })
    }

    fn round_trip(&mut self, msg: &Message) -> Result<Message, CoordinatorError> {
        write_message(&mut self.writer, msg)?;
        match read_message(&mut self.reader)? {
            Some(Message::Error { code, message }) => {
                Err(CoordinatorError::Remote { code, message })
            }
            Some(reply) => Ok(reply),
            None => Err(CoordinatorError::Protocol("connection closed".into())),
        }
    }
}

impl CoordinatorApi for WireClient {
    fn register(
        &mut self,
        agent_id: &str,
        token: &str,
        source_ip: Ip,
        capabilities: &BTreeSet<Capability>,
    ) -> Result<u32, CoordinatorError> {
        match self.round_trip(&Message::Register {
            agent_id: agent_id.into(),
            token: token.into(),
            source_ip,
            capabilities: capabilities.clone(),
        })? {
            Message::Registered { rank } => Ok(rank),
            other => Err(CoordinatorError::Protocol(format!(
                "unexpected reply {other:?}"
            ))),
        }
    }

    fn poll(
        &mut self,
        agent_id: &str,
        token: &str,
        budget: u32,
    ) -> Result<Vec<Assignment>, CoordinatorError> {
        match self.round_trip(&Message::Poll {
            agent_id: agent_id.into(),
            token: token.into(),
            budget,
        })? {
            Message::Assign { assignments } => Ok(assignments),
            other => Err(CoordinatorError::Protocol(format!(
                "unexpected reply {other:?}"
            ))),
        }
    }

    fn report(
        &mut self,
        agent_id: &str,
        token: &str,
        lines: Vec<String>,
    ) -> Result<u64, CoordinatorError> {
        match self.round_trip(&Message::Report {
            agent_id: agent_id.into(),
            token: token.into(),
            lines,
        })? {
            Message::Ack { count } => Ok(count),
            other => Err(CoordinatorError::Protocol(format!(
                "unexpected reply {other:?}"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_roundtrip() {
        let msg = Message::Poll {
            agent_id: "a1".into(),
            token: "t".into(),
            budget: 3,
        };
        let mut buf = Vec::new();
        write_message(&mut buf, &msg).unwrap();
        let mut r = std::io::BufReader::new(buf.as_slice());
        assert_eq!(read_message(&mut r).unwrap(), Some(msg));
        assert_eq!(read_message(&mut r).unwrap(), None);
    }

    #[test]
    fn bad_frame_header_is_a_protocol_error() {
        let mut r = std::io::BufReader::new(&b"notanumber\n{}"[..]);
        assert!(matches!(
            read_message(&mut r),
            Err(CoordinatorError::Protocol(_))
        ));
    }
}
