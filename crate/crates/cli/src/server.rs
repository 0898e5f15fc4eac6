//! HTTP and WebSocket front end for a [`Hub`].
//!
//! Routes: `GET /health`, `GET /mappings`, `GET /mappings/{id}`,
//! `POST /sessions`, `GET /ws` (the JSON protocol) and the UI assets at `/`.
//! Hub calls run on the blocking pool. Each socket tracks its own current
//! session. Responses to `frame` messages are live telemetry and are
//! throttled per connection to at most 60 per second, keeping only the
//! latest.

use std::future::Future;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use anyhow::Context;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use gesmap_core::session::{parse_command, Command, Event, Hub, MappingStore, PROTOCOL_VERSION};
use gesmap_core::{Error, ErrorKind, SessionConfig};
use serde::Deserialize;
use tokio::sync::watch;
use tokio::time::Instant;
use tower_http::services::ServeDir;

use crate::args::ServeArgs;

/// Minimum spacing of live telemetry messages on one socket.
pub const TELEMETRY_INTERVAL: Duration = Duration::from_micros(16_667);

const INDEX_HTML: &str = include_str!("../static/index.html");

#[derive(Clone)]
struct AppState {
    hub: Arc<Hub>,
    closing: watch::Receiver<bool>,
}

pub fn router(
    hub: Arc<Hub>,
    static_dir: Option<PathBuf>,
    closing: watch::Receiver<bool>,
) -> Router {
    let app = Router::new()
        .route("/health", get(health))
        .route("/mappings", get(list_mappings))
        .route("/mappings/{id}", get(get_mapping))
        .route("/sessions", post(create_session))
        .route("/ws", get(ws_upgrade))
        .with_state(AppState { hub, closing });
    match static_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app.route("/", get(|| async { Html(INDEX_HTML) })),
    }
}

fn status_of(err: &Error) -> StatusCode {
    match (err, err.kind()) {
        (Error::Registry(_), _) => StatusCode::NOT_FOUND,
        (_, ErrorKind::Environment) => StatusCode::INTERNAL_SERVER_ERROR,
        (_, ErrorKind::Config) => StatusCode::BAD_REQUEST,
        _ => StatusCode::UNPROCESSABLE_ENTITY,
    }
}

fn event_response(status: StatusCode, ev: &Event) -> Response {
    (status, [("content-type", "application/json")], ev.to_json()).into_response()
}

fn error_response(err: &Error, command: Option<&str>) -> Response {
    event_response(status_of(err), &Event::error(err, command))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> T {
    tokio::task::spawn_blocking(f)
        .await
        .expect("hub task panicked")
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({
        "status": "ok",
        "version": env!("CARGO_PKG_VERSION"),
        "protocol": PROTOCOL_VERSION,
    }))
}

async fn list_mappings(State(st): State<AppState>) -> Response {
    let hub = st.hub.clone();
    let listed = blocking(move || hub.store().map(|s| s.list()).transpose()).await;
    match listed {
        Ok(entries) => Json(entries.unwrap_or_default()).into_response(),
        Err(e) => error_response(&e, None),
    }
}

async fn get_mapping(State(st): State<AppState>, Path(id): Path<String>) -> Response {
    let hub = st.hub.clone();
    let found = blocking(move || match hub.store() {
        Some(s) => s.get(&id),
        None => Err(Error::Registry(format!("no mapping `{id}`"))),
    })
    .await;
    match found {
        Ok(record) => ([("content-type", "application/json")], record.to_json()).into_response(),
        Err(e) => error_response(&e, None),
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct CreateBody {
    id: Option<String>,
    config: SessionConfig,
}

async fn create_session(State(st): State<AppState>, body: String) -> Response {
    let parsed: Result<CreateBody, Error> = if body.trim().is_empty() {
        Ok(CreateBody::default())
    } else {
        serde_json::from_str(&body).map_err(Error::from)
    };
    let body = match parsed {
        Ok(b) => b,
        Err(e) => return error_response(&e, Some("create")),
    };
    let hub = st.hub.clone();
    match blocking(move || hub.create(body.id, body.config)).await {
        Ok(ev) => event_response(StatusCode::CREATED, &ev),
        Err(e) => error_response(&e, Some("create")),
    }
}

async fn ws_upgrade(ws: WebSocketUpgrade, State(st): State<AppState>) -> Response {
    ws.on_upgrade(move |socket| connection(socket, st))
}

/// Latest-wins holding slot for throttled telemetry.
struct Throttle {
    last: Option<Instant>,
    pending: Option<Vec<Event>>,
}

impl Throttle {
    fn due(&self) -> Option<Instant> {
        self.pending.as_ref().map(|_| {
            self.last
                .map_or_else(Instant::now, |t| t + TELEMETRY_INTERVAL)
        })
    }

    /// Returns the events to send now, if any; otherwise keeps them until
    /// the interval has passed, replacing anything already waiting.
    fn offer(&mut self, events: Vec<Event>) -> Option<Vec<Event>> {
        let now = Instant::now();
        if self.last.is_none_or(|t| now >= t + TELEMETRY_INTERVAL) {
            self.last = Some(now);
            self.pending = None;
            Some(events)
        } else {
            self.pending = Some(events);
            None
        }
    }

    fn take(&mut self) -> Option<Vec<Event>> {
        self.last = Some(Instant::now());
        self.pending.take()
    }
}

/// The newest features, params and unit of a frame batch.
fn latest_telemetry(events: Vec<Event>) -> Vec<Event> {
    let mut slots: [Option<Event>; 3] = [None, None, None];
    let mut errors = Vec::new();
    for ev in events {
        match ev {
            Event::Features { .. } => slots[0] = Some(ev),
            Event::Params { .. } => slots[1] = Some(ev),
            Event::Unit { .. } => slots[2] = Some(ev),
            other => errors.push(other),
        }
    }
    slots.into_iter().flatten().chain(errors).collect()
}

async fn send_all(socket: &mut WebSocket, events: Vec<Event>) -> bool {
    for ev in events {
        if socket
            .send(Message::Text(ev.to_json().into()))
            .await
            .is_err()
        {
            return false;
        }
    }
    true
}

async fn connection(mut socket: WebSocket, st: AppState) {
    let mut current: Option<String> = None;
    let mut throttle = Throttle {
        last: None,
        pending: None,
    };
    let mut closing = st.closing.clone();
    loop {
        let due = throttle.due();
        tokio::select! {
            msg = socket.recv() => {
                let text = match msg {
                    Some(Ok(Message::Text(t))) => t.to_string(),
                    Some(Ok(Message::Binary(_))) => {
                        let err = Error::UnsupportedFormat("binary messages are not part of the protocol".into());
                        if !send_all(&mut socket, vec![Event::error(&err, None)]).await { break; }
                        continue;
                    }
                    Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                    Some(Ok(_)) => continue,
                };
                let cmd = match parse_command(&text) {
                    Ok(cmd) => cmd,
                    Err(e) => {
                        if !send_all(&mut socket, vec![Event::error(&e, None)]).await { break; }
                        continue;
                    }
                };
                let live = matches!(cmd, Command::Frame { .. });
                let hub = st.hub.clone();
                let mut cur = current.clone();
                let (events, cur) = blocking(move || {
                    let events = hub.handle(cmd, &mut cur);
                    (events, cur)
                })
                .await;
                current = cur;
                let outgoing = if live && !events.iter().any(Event::is_error) {
                    throttle.offer(latest_telemetry(events))
                } else {
                    Some(events)
                };
                if let Some(evs) = outgoing {
                    if !send_all(&mut socket, evs).await { break; }
                }
            }
            _ = tokio::time::sleep_until(due.unwrap_or_else(Instant::now)), if due.is_some() => {
                if let Some(evs) = throttle.take() {
                    if !send_all(&mut socket, evs).await { break; }
                }
            }
            _ = closing.changed() => {
                let _ = socket.send(Message::Close(None)).await;
                break;
            }
        }
    }
}

/// Serves until `shutdown` resolves, then closes open sockets and writes
/// every session to the store.
pub async fn serve_with_shutdown(
    listener: tokio::net::TcpListener,
    hub: Arc<Hub>,
    static_dir: Option<PathBuf>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> anyhow::Result<usize> {
    let (tx, rx) = watch::channel(false);
    let app = router(hub.clone(), static_dir, rx);
    axum::serve(listener, app)
        .with_graceful_shutdown(async move {
            shutdown.await;
            let _ = tx.send(true);
        })
        .await?;
    let written = blocking(move || hub.persist()).await?;
    log::info!("persisted {written} sessions");
    Ok(written)
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
    log::info!("shutting down");
}

pub fn run_blocking(a: ServeArgs) -> anyhow::Result<()> {
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?;
    runtime.block_on(async {
        let store = MappingStore::open(&a.session_dir)?;
        let hub = Arc::new(Hub::new(Some(store)));
        let restored = hub.restore()?;
        let listener = tokio::net::TcpListener::bind((a.host.as_str(), a.port))
            .await
            .with_context(|| format!("binding {}:{}", a.host, a.port))?;
        eprintln!("listening on http://{}", listener.local_addr()?);
        if restored > 0 {
            log::info!("restored {restored} sessions");
        }
        serve_with_shutdown(listener, hub, a.static_dir, shutdown_signal()).await?;
        Ok(())
    })
}
