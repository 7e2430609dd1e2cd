//! WebSocket channel to the projected interface.
//!
//! Core to UI: every non-pose envelope as one text frame, starting with the
//! latest display snapshot so a reconnecting page redraws immediately.
//! UI to core: envelopes on the `command` topic only.

use super::bus::{LatestEvents, SubscribeHandle, TopicFilter};
use super::envelope::{decode_event, encode_event, MalformedEvent, Topic};
use serde::{Deserialize, Serialize};
use std::io::ErrorKind;
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc::Sender;
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;
use tungstenite::{Message, WebSocket};

const POLL: Duration = Duration::from_millis(5);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum UiCommand {
    ReDetect,
    ResetSession,
    SetStep { step: usize },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum UiMessageError {
    #[error(transparent)]
    Malformed(#[from] MalformedEvent),
    #[error("the UI may only send on the command topic, got {0}")]
    WrongTopic(Topic),
    #[error("unknown command: {0}")]
    UnknownCommand(String),
}

impl UiCommand {
    pub fn to_payload(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("command serializes")
    }
}

pub fn parse_ui_message(text: &str) -> Result<UiCommand, UiMessageError> {
    let env = decode_event(text.as_bytes())?;
    if env.topic != Topic::Command {
        return Err(UiMessageError::WrongTopic(env.topic));
    }
    serde_json::from_value(env.payload).map_err(|e| UiMessageError::UnknownCommand(e.to_string()))
}

/// Accepts UI clients on its own thread; each client gets a thread too.
#[derive(Debug)]
pub struct UiServer {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    rejected: Arc<AtomicU64>,
    accept_thread: Option<JoinHandle<()>>,
}

impl UiServer {
    /// Commands are converted into the caller's input type before sending.
    pub fn start<T: From<UiCommand> + Send + 'static>(
        listener: TcpListener,
        subscribe: SubscribeHandle,
        latest: LatestEvents,
        commands: Sender<T>,
    ) -> std::io::Result<Self> {
        let addr = listener.local_addr()?;
        listener.set_nonblocking(true)?;
        let stop = Arc::new(AtomicBool::new(false));
        let rejected = Arc::new(AtomicU64::new(0));
        let (stop2, rejected2) = (stop.clone(), rejected.clone());
        let accept_thread = std::thread::spawn(move || {
            let mut clients = Vec::new();
            while !stop2.load(Ordering::Relaxed) {
                match listener.accept() {
                    Ok((stream, _)) => {
                        let ctx = ClientContext {
                            subscribe: subscribe.clone(),
                            latest: latest.clone(),
                            commands: commands.clone(),
                            stop: stop2.clone(),
                            rejected: rejected2.clone(),
                        };
                        clients.push(std::thread::spawn(move || serve_client(stream, ctx)));
                    }
                    Err(e) if e.kind() == ErrorKind::WouldBlock => std::thread::sleep(POLL),
                    Err(_) => std::thread::sleep(POLL),
                }
            }
            for c in clients {
                let _ = c.join();
            }
        });
        Ok(Self {
            addr,
            stop,
            rejected,
            accept_thread: Some(accept_thread),
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Inbound messages that were not valid commands.
    pub fn rejected(&self) -> u64 {
        self.rejected.load(Ordering::Relaxed)
    }

    pub fn shutdown(mut self) {
        self.stop_and_join();
    }

    fn stop_and_join(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        if let Some(t) = self.accept_thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for UiServer {
    fn drop(&mut self) {
        self.stop_and_join();
    }
}

struct ClientContext<T> {
    subscribe: SubscribeHandle,
    latest: LatestEvents,
    commands: Sender<T>,
    stop: Arc<AtomicBool>,
    rejected: Arc<AtomicU64>,
}

fn is_timeout(e: &tungstenite::Error) -> bool {
    matches!(e, tungstenite::Error::Io(io) if matches!(io.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut))
}

/// False once the client is gone.
fn send_text(ws: &mut WebSocket<TcpStream>, env: &super::EventEnvelope) -> bool {
    match encode_event(env) {
        Ok(bytes) => ws.send(Message::Text(String::from_utf8(bytes).expect("JSON is UTF-8").into())).is_ok(),
        Err(_) => true,
    }
}

fn serve_client<T: From<UiCommand>>(stream: TcpStream, ctx: ClientContext<T>) {
    if stream.set_nonblocking(false).is_err() {
        return;
    }
    let Ok(mut ws) = tungstenite::accept(stream) else {
        return;
    };
    if ws.get_ref().set_read_timeout(Some(POLL)).is_err() {
        return;
    }
    let sub = ctx.subscribe.subscribe(TopicFilter::except(&[Topic::Pose]));
    let mut last_sent = None;
    if let Some(snapshot) = ctx.latest.get(Topic::Display) {
        last_sent = Some(snapshot.seq);
        if !send_text(&mut ws, &snapshot) {
            return;
        }
    }
    while !ctx.stop.load(Ordering::Relaxed) {
        for env in sub.drain() {
            // the snapshot sent on connect may also be queued
            if last_sent.is_some_and(|s| env.seq <= s) {
                continue;
            }
            last_sent = Some(env.seq);
            if !send_text(&mut ws, &env) {
                return;
            }
        }
        match ws.read() {
            Ok(Message::Text(text)) => match parse_ui_message(text.as_str()) {
                Ok(cmd) => {
                    if ctx.commands.send(T::from(cmd)).is_err() {
                        return;
                    }
                }
                Err(_) => {
                    ctx.rejected.fetch_add(1, Ordering::Relaxed);
                }
            },
            Ok(Message::Close(_)) => {
                let _ = ws.flush();
                return;
            }
            Ok(_) => {}
            Err(e) if is_timeout(&e) => {}
            Err(_) => return,
        }
    }
    let _ = ws.close(None);
    let _ = ws.flush();
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bridge::envelope::EventEnvelope;
    use serde_json::json;

    #[test]
    fn command_payloads() {
        assert_eq!(UiCommand::SetStep { step: 3 }.to_payload(), json!({"kind": "set-step", "step": 3}));
        assert_eq!(UiCommand::ReDetect.to_payload(), json!({"kind": "re-detect"}));
        assert_eq!(UiCommand::ResetSession.to_payload(), json!({"kind": "reset-session"}));
    }

    #[test]
    fn parse_messages() {
        let msg = |topic, payload| {
            String::from_utf8(encode_event(&EventEnvelope::new(0, 0.0, topic, payload)).unwrap()).unwrap()
        };
        assert_eq!(
            parse_ui_message(&msg(Topic::Command, json!({"kind": "set-step", "step": 2}))),
            Ok(UiCommand::SetStep { step: 2 })
        );
        assert_eq!(
            parse_ui_message(&msg(Topic::Nav, json!({"kind": "re-detect"}))),
            Err(UiMessageError::WrongTopic(Topic::Nav))
        );
        assert!(matches!(
            parse_ui_message(&msg(Topic::Command, json!({"kind": "explode"}))),
            Err(UiMessageError::UnknownCommand(_))
        ));
        assert!(matches!(parse_ui_message("{"), Err(UiMessageError::Malformed(_))));
    }
}
