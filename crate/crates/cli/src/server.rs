//! HTTP and WebSocket front end of the session. All connections feed one
//! bounded queue; a single task owns the session, applies queued messages
//! between bus ticks and publishes decimated telemetry to every client.

use std::collections::HashMap;
use std::io::Write;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use anyhow::Context;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::http::header;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::{Json, Router};
use futures::{SinkExt, StreamExt};
use hand_twin::HandDescription;
use tokio::sync::{broadcast, mpsc, oneshot};
use tokio::task::JoinHandle;
use tokio::time::{Instant, MissedTickBehavior};

use crate::protocol::ServerMessage;
use crate::session::{ClientId, Session};

pub const QUEUE_CAPACITY: usize = 1024;
/// Most ticks simulated per wake-up when the loop falls behind wall time.
const MAX_CATCH_UP: u64 = 100;

#[derive(Debug, Clone)]
pub struct ServeOptions {
    pub host: String,
    pub port: u16,
    pub publish_hz: f64,
    /// Append every published telemetry message to this JSON Lines file.
    pub log: Option<PathBuf>,
}

impl Default for ServeOptions {
    fn default() -> Self {
        Self {
            host: "127.0.0.1".into(),
            port: 8080,
            publish_hz: 30.0,
            log: None,
        }
    }
}

enum Request {
    Connect(ClientId, mpsc::UnboundedSender<String>),
    Disconnect(ClientId),
    Text(ClientId, String),
    State(oneshot::Sender<String>),
}

#[derive(Clone)]
struct AppState {
    queue: mpsc::Sender<Request>,
    telemetry: broadcast::Sender<Arc<str>>,
    next_client: Arc<AtomicU64>,
}

pub struct Running {
    pub addr: SocketAddr,
    pub handle: JoinHandle<anyhow::Result<()>>,
}

/// Binds the listener and starts the simulator and HTTP tasks.
pub async fn start(desc: HandDescription, opts: ServeOptions) -> anyhow::Result<Running> {
    if !(opts.publish_hz > 0.0 && opts.publish_hz.is_finite()) {
        anyhow::bail!("publish rate must be positive, got {}", opts.publish_hz);
    }
    let session = Session::new(desc).context("building the simulator")?;
    let log = match &opts.log {
        Some(p) => Some(std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => None,
    };
    let listener = tokio::net::TcpListener::bind((opts.host.as_str(), opts.port))
        .await
        .with_context(|| format!("binding {}:{}", opts.host, opts.port))?;
    let addr = listener.local_addr()?;

    let (queue, rx) = mpsc::channel(QUEUE_CAPACITY);
    let (telemetry, _) = broadcast::channel(256);
    let state = AppState {
        queue,
        telemetry: telemetry.clone(),
        next_client: Arc::new(AtomicU64::new(1)),
    };
    let sim = tokio::spawn(run_session(session, rx, telemetry, opts.publish_hz, log));
    let app = Router::new()
        .route("/healthz", get(healthz))
        .route("/state", get(get_state))
        .route("/control", get(control))
        .with_state(state);
    let handle = tokio::spawn(async move {
        tokio::select! {
            r = axum::serve(listener, app) => r.context("http server"),
            r = sim => r.context("simulator task")?,
        }
    });
    Ok(Running { addr, handle })
}

async fn run_session(
    mut session: Session,
    mut rx: mpsc::Receiver<Request>,
    telemetry: broadcast::Sender<Arc<str>>,
    publish_hz: f64,
    mut log: Option<std::fs::File>,
) -> anyhow::Result<()> {
    let tick_hz = session.tick_hz();
    let publish_every = ((tick_hz / publish_hz).round() as u64).max(1);
    let mut clients: HashMap<ClientId, mpsc::UnboundedSender<String>> = HashMap::new();
    let start = Instant::now();
    let base_ticks = session.ticks();
    let mut interval = tokio::time::interval(Duration::from_secs_f64(1.0 / tick_hz).max(Duration::from_millis(1)));
    interval.set_missed_tick_behavior(MissedTickBehavior::Skip);
    loop {
        interval.tick().await;
        loop {
            match rx.try_recv() {
                Ok(Request::Connect(id, tx)) => {
                    clients.insert(id, tx);
                }
                Ok(Request::Disconnect(id)) => {
                    clients.remove(&id);
                }
                Ok(Request::Text(id, text)) => {
                    for out in session.handle_text(id, &text) {
                        if let Some(tx) = clients.get(&out.to) {
                            let _ = tx.send(encode(&out.message));
                        }
                    }
                }
                Ok(Request::State(reply)) => {
                    let _ = reply.send(serde_json::to_string(&session.snapshot()).expect("snapshot serializes"));
                }
                Err(mpsc::error::TryRecvError::Empty) => break,
                Err(mpsc::error::TryRecvError::Disconnected) => return Ok(()),
            }
        }
        let due = base_ticks + (start.elapsed().as_secs_f64() * tick_hz) as u64;
        let mut budget = MAX_CATCH_UP;
        while session.ticks() < due && budget > 0 {
            session.step();
            budget -= 1;
            if session.ticks().is_multiple_of(publish_every) {
                let text: Arc<str> = encode(&session.telemetry()).into();
                if let Some(f) = log.as_mut() {
                    writeln!(f, "{text}").context("writing telemetry log")?;
                }
                let _ = telemetry.send(text);
            }
        }
    }
}

fn encode(m: &ServerMessage) -> String {
    serde_json::to_string(m).expect("server messages serialize")
}

async fn healthz() -> impl IntoResponse {
    Json(serde_json::json!({ "status": "ok" }))
}

async fn get_state(State(state): State<AppState>) -> impl IntoResponse {
    let (tx, rx) = oneshot::channel();
    if state.queue.send(Request::State(tx)).await.is_err() {
        return (axum::http::StatusCode::SERVICE_UNAVAILABLE, "simulator stopped").into_response();
    }
    match rx.await {
        Ok(body) => ([(header::CONTENT_TYPE, "application/json")], body).into_response(),
        Err(_) => (axum::http::StatusCode::SERVICE_UNAVAILABLE, "simulator stopped").into_response(),
    }
}

async fn control(ws: WebSocketUpgrade, State(state): State<AppState>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| connection(socket, state))
}

async fn connection(socket: WebSocket, state: AppState) {
    let id = state.next_client.fetch_add(1, Ordering::Relaxed);
    let (reply_tx, mut replies) = mpsc::unbounded_channel();
    let mut telemetry = state.telemetry.subscribe();
    if state.queue.send(Request::Connect(id, reply_tx.clone())).await.is_err() {
        return;
    }
    let (mut sink, mut stream) = socket.split();
    loop {
        tokio::select! {
            incoming = stream.next() => match incoming {
                Some(Ok(Message::Text(text))) => {
                    if state.queue.send(Request::Text(id, text.to_string())).await.is_err() {
                        break;
                    }
                }
                Some(Ok(Message::Binary(_))) => {
                    let err = r#"{"type":"error","id":null,"code":"malformed","message":"binary messages are not supported; send JSON text"}"#;
                    let _ = reply_tx.send(err.to_string());
                }
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => {
                    // Flushes the close reply queued by the read half.
                    let _ = sink.close().await;
                    break;
                }
                Some(Ok(_)) => {}
            },
            Some(text) = replies.recv() => {
                if sink.send(Message::Text(text.into())).await.is_err() {
                    break;
                }
            }
            t = telemetry.recv() => match t {
                Ok(text) => {
                    if sink.send(Message::Text(text.as_ref().into())).await.is_err() {
                        break;
                    }
                }
                Err(broadcast::error::RecvError::Lagged(_)) => {}
                Err(broadcast::error::RecvError::Closed) => break,
            },
        }
    }
    let _ = state.queue.send(Request::Disconnect(id)).await;
}
