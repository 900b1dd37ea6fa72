//! Transports: newline-delimited JSON over TCP and JSON text frames over
//! WebSocket, both feeding one actor that owns the [`ServerCore`].

use std::io;
use std::net::SocketAddr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use futures_util::{SinkExt, StreamExt};
use jbw_core::Simulator;
use tokio::io::{AsyncBufReadExt, AsyncReadExt, AsyncWriteExt, BufReader};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::{mpsc, oneshot};
use tokio::task::JoinHandle;
use tokio_tungstenite::tungstenite::Message;

use crate::core::{Outbox, ServerCore, SessionId};
use crate::protocol::codes;

/// Longest accepted inbound frame in bytes.
pub const MAX_FRAME: usize = 1 << 20;

const COMMAND_QUEUE: usize = 1024;
const EXPIRY_TICK: Duration = Duration::from_millis(250);

enum Command {
    Connect(oneshot::Sender<(SessionId, Arc<Outbox>)>),
    Frame(SessionId, String),
    Malformed(SessionId, String),
    Disconnect(SessionId),
}

#[derive(Debug, Clone)]
pub struct Endpoints {
    pub tcp: SocketAddr,
    pub ws: Option<SocketAddr>,
}

pub struct ServerHandle {
    pub tcp_addr: SocketAddr,
    pub ws_addr: Option<SocketAddr>,
    shutdown: oneshot::Sender<()>,
    actor: JoinHandle<ServerCore>,
    listeners: Vec<JoinHandle<()>>,
}

impl ServerHandle {
    /// Stops accepting, closes all sessions and returns the simulator.
    pub async fn shutdown(self) -> Simulator {
        for l in &self.listeners {
            l.abort();
        }
        let _ = self.shutdown.send(());
        self.actor.await.expect("server actor panicked").into_simulator()
    }
}

/// Binds both endpoints and starts serving `core`.
pub async fn serve(core: ServerCore, endpoints: Endpoints) -> io::Result<ServerHandle> {
    let tcp = TcpListener::bind(endpoints.tcp).await?;
    let ws = match endpoints.ws {
        Some(addr) => Some(TcpListener::bind(addr).await?),
        None => None,
    };
    let (tx, rx) = mpsc::channel(COMMAND_QUEUE);
    let (stop_tx, stop_rx) = oneshot::channel();
    let tcp_addr = tcp.local_addr()?;
    let ws_addr = ws.as_ref().map(|l| l.local_addr()).transpose()?;
    let actor = tokio::spawn(run_actor(core, rx, stop_rx));
    let mut listeners = vec![tokio::spawn(accept_loop(tcp, tx.clone(), false))];
    if let Some(l) = ws {
        listeners.push(tokio::spawn(accept_loop(l, tx, true)));
    }
    Ok(ServerHandle { tcp_addr, ws_addr, shutdown: stop_tx, actor, listeners })
}

async fn run_actor(mut core: ServerCore, mut rx: mpsc::Receiver<Command>, mut stop: oneshot::Receiver<()>) -> ServerCore {
    let mut tick = tokio::time::interval(EXPIRY_TICK);
    loop {
        tokio::select! {
            cmd = rx.recv() => match cmd {
                Some(Command::Connect(reply)) => {
                    let _ = reply.send(core.connect());
                }
                Some(Command::Frame(session, text)) => {
                    if !core.handle_frame(session, &text) {
                        core.disconnect(session, Instant::now());
                    }
                }
                Some(Command::Malformed(session, message)) => {
                    core.reject(session, codes::MALFORMED, &message);
                    core.disconnect(session, Instant::now());
                }
                Some(Command::Disconnect(session)) => core.disconnect(session, Instant::now()),
                None => break,
            },
            _ = tick.tick() => core.expire(Instant::now()),
            _ = &mut stop => break,
        }
    }
    core.close_all();
    core
}

async fn accept_loop(listener: TcpListener, tx: mpsc::Sender<Command>, websocket: bool) {
    loop {
        let Ok((stream, _)) = listener.accept().await else { continue };
        let _ = stream.set_nodelay(true);
        let tx = tx.clone();
        tokio::spawn(async move {
            if websocket {
                serve_websocket(stream, tx).await;
            } else {
                serve_stream(stream, tx).await;
            }
        });
    }
}

async fn open_session(tx: &mpsc::Sender<Command>) -> Option<(SessionId, Arc<Outbox>)> {
    let (reply, wait) = oneshot::channel();
    tx.send(Command::Connect(reply)).await.ok()?;
    wait.await.ok()
}

async fn serve_stream(stream: TcpStream, tx: mpsc::Sender<Command>) {
    let Some((session, outbox)) = open_session(&tx).await else { return };
    let (rd, mut wr) = stream.into_split();
    let writer = async {
        loop {
            outbox.ready().await;
            let frames = outbox.drain();
            if frames.is_empty() && outbox.is_closed() {
                break;
            }
            for f in frames {
                if wr.write_all(f.as_bytes()).await.is_err() || wr.write_all(b"\n").await.is_err() {
                    return;
                }
            }
        }
        let _ = wr.shutdown().await;
    };
    let reader = async {
        let mut rd = BufReader::new(rd);
        let mut buf = Vec::new();
        loop {
            buf.clear();
            match (&mut rd).take(MAX_FRAME as u64 + 1).read_until(b'\n', &mut buf).await {
                Ok(0) | Err(_) => break,
                Ok(_) => {}
            }
            if buf.len() > MAX_FRAME {
                let _ = tx.send(Command::Malformed(session, format!("frame exceeds {MAX_FRAME} bytes"))).await;
                break;
            }
            let text = match std::str::from_utf8(&buf) {
                Ok(t) => t.trim(),
                Err(_) => {
                    let _ = tx.send(Command::Malformed(session, "frame is not UTF-8".into())).await;
                    break;
                }
            };
            if text.is_empty() {
                continue;
            }
            if tx.send(Command::Frame(session, text.to_string())).await.is_err() {
                break;
            }
        }
        // The writer flushes until the actor closes the outbox.
        let _ = tx.send(Command::Disconnect(session)).await;
        std::future::pending::<()>().await;
    };
    tokio::select! {
        _ = writer => {}
        _ = reader => {}
    }
    let _ = tx.send(Command::Disconnect(session)).await;
}

async fn serve_websocket(stream: TcpStream, tx: mpsc::Sender<Command>) {
    let config = tokio_tungstenite::tungstenite::protocol::WebSocketConfig {
        max_message_size: Some(MAX_FRAME),
        max_frame_size: Some(MAX_FRAME),
        ..Default::default()
    };
    let Ok(ws) = tokio_tungstenite::accept_async_with_config(stream, Some(config)).await else { return };
    let Some((session, outbox)) = open_session(&tx).await else { return };
    let (mut sink, mut source) = ws.split();
    let writer = async {
        loop {
            outbox.ready().await;
            let frames = outbox.drain();
            if frames.is_empty() && outbox.is_closed() {
                break;
            }
            for f in frames {
                if sink.send(Message::Text(f)).await.is_err() {
                    return;
                }
            }
        }
        let _ = sink.close().await;
    };
    let reader = async {
        while let Some(msg) = source.next().await {
            match msg {
                Ok(Message::Text(text)) => {
                    if tx.send(Command::Frame(session, text)).await.is_err() {
                        break;
                    }
                }
                Ok(Message::Binary(_)) => {
                    let _ = tx.send(Command::Malformed(session, "binary frames are not part of the protocol".into())).await;
                    break;
                }
                Ok(Message::Close(_)) | Err(_) => break,
                Ok(_) => {}
            }
        }
        let _ = tx.send(Command::Disconnect(session)).await;
        std::future::pending::<()>().await;
    };
    tokio::select! {
        _ = writer => {}
        _ = reader => {}
    }
    let _ = tx.send(Command::Disconnect(session)).await;
}
