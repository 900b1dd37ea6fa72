use std::net::SocketAddr;
use std::time::Duration;

use futures_util::{SinkExt, StreamExt};
use jbw_core::testing::empty_world;
use jbw_core::{Action, Simulator};
use jbw_server::protocol::{decode, encode, Envelope, Reply, Request};
use jbw_server::{serve, CoreOptions, Endpoints, ServerCore, ServerHandle};
use tokio::io::{AsyncBufReadExt, AsyncWriteExt, BufReader};
use tokio::net::TcpStream;
use tokio::time::timeout;
use tokio_tungstenite::tungstenite::Message;

const WAIT: Duration = Duration::from_secs(10);

async fn start() -> ServerHandle {
    let sim = Simulator::new(empty_world(16, r#"["MoveForward","TurnLeft","TurnRight"]"#, 360.0));
    let core = ServerCore::new(sim, CoreOptions::default()).unwrap();
    let local: SocketAddr = "127.0.0.1:0".parse().unwrap();
    serve(core, Endpoints { tcp: local, ws: Some(local) }).await.unwrap()
}

struct Line {
    reader: BufReader<tokio::net::tcp::OwnedReadHalf>,
    writer: tokio::net::tcp::OwnedWriteHalf,
}

impl Line {
    async fn connect(addr: SocketAddr) -> Self {
        let (r, w) = TcpStream::connect(addr).await.unwrap().into_split();
        Line { reader: BufReader::new(r), writer: w }
    }

    async fn send_raw(&mut self, text: &str) {
        self.writer.write_all(text.as_bytes()).await.unwrap();
        self.writer.write_all(b"\n").await.unwrap();
    }

    async fn send(&mut self, id: u64, r: Request) {
        self.send_raw(&encode(id, &r)).await;
    }

    async fn recv(&mut self) -> Option<Envelope<Reply>> {
        let mut line = String::new();
        let n = timeout(WAIT, self.reader.read_line(&mut line)).await.expect("reply in time").unwrap();
        (n > 0).then(|| decode(line.trim_end()).unwrap())
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn tcp_session_plays_a_turn() {
    let server = start().await;
    let mut c = Line::connect(server.tcp_addr).await;
    c.send(1, Request::Hello { client: None }).await;
    assert!(matches!(c.recv().await.unwrap().message, Reply::Hello { version: 1, time: 0, .. }));
    c.send(2, Request::AddAgent { claim: None }).await;
    let agent = match c.recv().await.unwrap().message {
        Reply::AddAgent { agent_id, .. } => agent_id,
        other => panic!("{other:?}"),
    };
    c.send(3, Request::Act { agent_id: agent, action: Action::MoveForward }).await;
    let ack = c.recv().await.unwrap();
    assert_eq!((ack.id, ack.message), (3, Reply::Act { agent_id: agent, time: 0 }));
    let obs = c.recv().await.unwrap();
    assert!(matches!(obs.message, Reply::Observation(ref o) if o.time == 1 && o.moved));
    assert!(matches!(c.recv().await.unwrap().message, Reply::StepDone { time: 1, .. }));
    drop(c);
    let sim = server.shutdown().await;
    assert_eq!(sim.time(), 1);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn malformed_tcp_frame_gets_an_error_then_eof() {
    let server = start().await;
    let mut c = Line::connect(server.tcp_addr).await;
    c.send_raw("this is not json").await;
    assert!(matches!(c.recv().await.unwrap().message, Reply::Error { ref code, .. } if code == "malformed"));
    assert!(c.recv().await.is_none());
    server.shutdown().await;
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn websocket_and_tcp_sessions_share_one_world() {
    let server = start().await;
    let url = format!("ws://{}", server.ws_addr.unwrap());
    let (mut ws, _) = tokio_tungstenite::connect_async(url).await.unwrap();
    let mut tcp = Line::connect(server.tcp_addr).await;

    ws.send(Message::Text(encode(1, &Request::AddAgent { claim: None }))).await.unwrap();
    let ws_recv = |m: Option<Result<Message, _>>| -> Envelope<Reply> {
        match m.unwrap().unwrap() {
            Message::Text(t) => decode(&t).unwrap(),
            other => panic!("{other:?}"),
        }
    };
    let wa = match ws_recv(timeout(WAIT, ws.next()).await.unwrap()).message {
        Reply::AddAgent { agent_id, .. } => agent_id,
        other => panic!("{other:?}"),
    };
    tcp.send(1, Request::AddAgent { claim: None }).await;
    let ta = match tcp.recv().await.unwrap().message {
        Reply::AddAgent { agent_id, .. } => agent_id,
        other => panic!("{other:?}"),
    };
    assert_ne!(wa, ta);

    ws.send(Message::Text(encode(2, &Request::Act { agent_id: wa, action: Action::TurnLeft }))).await.unwrap();
    assert!(matches!(ws_recv(timeout(WAIT, ws.next()).await.unwrap()).message, Reply::Act { time: 0, .. }));
    tcp.send(2, Request::Act { agent_id: ta, action: Action::TurnRight }).await;
    assert!(matches!(tcp.recv().await.unwrap().message, Reply::Act { time: 0, .. }));
    assert!(matches!(tcp.recv().await.unwrap().message, Reply::Observation(ref o) if o.agent_id == ta && o.time == 1));
    assert!(matches!(ws_recv(timeout(WAIT, ws.next()).await.unwrap()).message, Reply::Observation(ref o) if o.agent_id == wa && o.time == 1));

    ws.close(None).await.unwrap();
    drop(tcp);
    assert_eq!(server.shutdown().await.time(), 1);
}
