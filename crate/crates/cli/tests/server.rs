//! The HTTP/WebSocket front end against the in-process session API.

use std::io::{BufRead, BufReader};
use std::process::{Command as Process, Stdio};
use std::sync::Arc;
use std::time::Duration;

use futures::{SinkExt, StreamExt};
use gesmap_cli::server::{serve_with_shutdown, TELEMETRY_INTERVAL};
use gesmap_core::features::FeatureConfig;
use gesmap_core::ingest::{gen_synthetic_gesture, write_frames_jsonl, GestureShape, GestureSpec};
use gesmap_core::session::{
    create_session, record_example, run_predict, train_session, Command, Event, Hub, Input,
    MappingStore, SessionConfig,
};
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::oneshot;
use tokio_tungstenite::tungstenite::Message;

type Socket = tokio_tungstenite::WebSocketStream<tokio_tungstenite::MaybeTlsStream<TcpStream>>;

struct Server {
    addr: std::net::SocketAddr,
    stop: Option<oneshot::Sender<()>>,
    done: tokio::task::JoinHandle<anyhow::Result<usize>>,
}

impl Server {
    async fn start(hub: Hub) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
        let addr = listener.local_addr().unwrap();
        let (tx, rx) = oneshot::channel();
        let done = tokio::spawn(serve_with_shutdown(listener, Arc::new(hub), None, async {
            let _ = rx.await;
        }));
        Server {
            addr,
            stop: Some(tx),
            done,
        }
    }

    async fn stop(mut self) -> usize {
        self.stop.take().unwrap().send(()).unwrap();
        self.done.await.unwrap().unwrap()
    }

    async fn socket(&self) -> Socket {
        tokio_tungstenite::connect_async(format!("ws://{}/ws", self.addr))
            .await
            .unwrap()
            .0
    }
}

/// Minimal HTTP/1.1 exchange; returns the status code and body.
async fn http(addr: std::net::SocketAddr, method: &str, path: &str, body: &str) -> (u16, String) {
    let mut s = TcpStream::connect(addr).await.unwrap();
    let req = format!(
        "{method} {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\nContent-Length: {}\r\n\r\n{body}",
        body.len()
    );
    s.write_all(req.as_bytes()).await.unwrap();
    let mut raw = String::new();
    s.read_to_string(&mut raw).await.unwrap();
    let status = raw.split_whitespace().nth(1).unwrap().parse().unwrap();
    let body = raw
        .split_once("\r\n\r\n")
        .map(|(_, b)| b.to_string())
        .unwrap_or_default();
    (status, body)
}

async fn send(ws: &mut Socket, cmd: &Command) {
    ws.send(Message::text(cmd.to_json())).await.unwrap();
}

async fn recv(ws: &mut Socket) -> Event {
    let msg = tokio::time::timeout(Duration::from_secs(30), ws.next())
        .await
        .unwrap()
        .unwrap()
        .unwrap();
    Event::from_json(msg.to_text().unwrap()).unwrap()
}

fn config() -> SessionConfig {
    let mut features = FeatureConfig::with_features(&["qom"]);
    features.window = 10;
    SessionConfig {
        features,
        presets: vec![
            vec![0.1, 0.2, 1.0, 0.0, 800.0, 1.0],
            vec![1.0, 0.4, 2.0, 7.0, 6000.0, 3.0],
        ],
        ..Default::default()
    }
}

const EXAMPLES: [(f64, usize); 3] = [(0.1, 0), (0.9, 1), (0.5, 0)];
const QUERIES: [f64; 4] = [0.1, 0.9, 0.33, 0.71];

#[tokio::test(flavor = "multi_thread")]
async fn socket_session_matches_in_process_results() {
    let mut local = create_session("eq", config()).unwrap();
    for (x, slot) in EXAMPLES {
        record_example(
            &mut local,
            Input::Features(vec![x]),
            config().presets[slot].clone(),
        )
        .unwrap();
    }
    let curve = train_session(&mut local, None).unwrap();

    let server = Server::start(Hub::new(None)).await;
    let mut ws = server.socket().await;
    send(
        &mut ws,
        &Command::Create {
            id: Some("eq".into()),
            config: config(),
        },
    )
    .await;
    assert!(matches!(recv(&mut ws).await, Event::State { .. }));
    for (x, slot) in EXAMPLES {
        let cmd = Command::Record {
            session: None,
            features: Some(vec![x]),
            frames: None,
            target: None,
            preset: Some(slot),
        };
        send(&mut ws, &cmd).await;
        assert!(matches!(recv(&mut ws).await, Event::State { .. }));
    }
    send(
        &mut ws,
        &Command::Train {
            session: None,
            params: None,
        },
    )
    .await;
    match recv(&mut ws).await {
        Event::State { loss, .. } => {
            assert_eq!(loss.unwrap().to_bits(), curve.last().unwrap().to_bits())
        }
        other => panic!("{other:?}"),
    }
    for x in QUERIES {
        let want = run_predict(&mut local, Input::Features(vec![x]))
            .unwrap()
            .params;
        send(
            &mut ws,
            &Command::Predict {
                session: None,
                features: Some(vec![x]),
                frames: None,
            },
        )
        .await;
        match recv(&mut ws).await {
            Event::Params { values, .. } => {
                let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
                assert_eq!(bits(&values), bits(&want), "query {x}");
            }
            other => panic!("{other:?}"),
        }
    }
    server.stop().await;
}

#[tokio::test(flavor = "multi_thread")]
async fn protocol_errors_come_back_as_events() {
    let server = Server::start(Hub::new(None)).await;
    let mut ws = server.socket().await;
    ws.send(Message::text(r#"{"cmd":"train"}"#)).await.unwrap();
    assert!(matches!(recv(&mut ws).await, Event::Error { kind, .. } if kind == "data"));
    ws.send(Message::text(r#"{"v":2,"cmd":"train"}"#))
        .await
        .unwrap();
    assert!(matches!(recv(&mut ws).await, Event::Error { kind, .. } if kind == "config"));
    ws.send(Message::binary(vec![1u8, 2, 3])).await.unwrap();
    assert!(matches!(recv(&mut ws).await, Event::Error { .. }));
    send(
        &mut ws,
        &Command::Create {
            id: None,
            config: config(),
        },
    )
    .await;
    recv(&mut ws).await;
    send(
        &mut ws,
        &Command::Predict {
            session: None,
            features: Some(vec![0.5]),
            frames: None,
        },
    )
    .await;
    match recv(&mut ws).await {
        Event::Error { kind, expected, .. } => {
            assert_eq!(kind, "config");
            assert_eq!(expected.unwrap(), vec!["record", "presets"]);
        }
        other => panic!("{other:?}"),
    }
    server.stop().await;
}

#[tokio::test(flavor = "multi_thread")]
async fn http_routes() {
    let dir = tempfile::tempdir().unwrap();
    let server = Server::start(Hub::new(Some(MappingStore::open(dir.path()).unwrap()))).await;
    let (status, body) = http(server.addr, "GET", "/health", "").await;
    let health: serde_json::Value = serde_json::from_str(&body).unwrap();
    assert_eq!(
        (
            status,
            health["status"].as_str(),
            health["protocol"].as_u64()
        ),
        (200, Some("ok"), Some(1))
    );
    assert_eq!(
        http(server.addr, "GET", "/mappings", "").await,
        (200, "[]".to_string())
    );
    assert_eq!(
        http(server.addr, "GET", "/mappings/nothing", "").await.0,
        404
    );
    let (status, body) = http(server.addr, "POST", "/sessions", r#"{"id":"web"}"#).await;
    assert_eq!(status, 201);
    assert!(
        matches!(Event::from_json(&body).unwrap(), Event::State { session, .. } if session == "web")
    );
    assert_eq!(
        http(server.addr, "POST", "/sessions", r#"{"id":"web"}"#)
            .await
            .0,
        400
    );
    assert_eq!(http(server.addr, "POST", "/sessions", "{").await.0, 422);
    let (status, page) = http(server.addr, "GET", "/", "").await;
    assert!(status == 200 && page.contains("<html"));
    assert_eq!(server.stop().await, 1);
    assert!(dir.path().join("sessions").join("web.json").exists());
}

#[tokio::test(flavor = "multi_thread")]
async fn live_telemetry_is_rate_limited_and_keeps_the_latest() {
    let stream = gen_synthetic_gesture(&GestureSpec {
        shape: GestureShape::Circle,
        rate_hz: 100.0,
        duration_s: 3.0,
        freq_hz: 1.0,
        radius_m: 0.5,
    })
    .unwrap();
    let lines: Vec<String> = write_frames_jsonl(&stream)
        .lines()
        .map(String::from)
        .collect();

    let server = Server::start(Hub::new(None)).await;
    let mut ws = server.socket().await;
    let reference = Hub::new(None);
    let mut cur = None;
    let mut setup = vec![Command::Create {
        id: Some("live".into()),
        config: config(),
    }];
    for (x, slot) in EXAMPLES {
        setup.push(Command::Record {
            session: None,
            features: Some(vec![x]),
            frames: None,
            target: None,
            preset: Some(slot),
        });
    }
    setup.push(Command::Train {
        session: None,
        params: None,
    });
    for cmd in setup {
        reference.handle(cmd.clone(), &mut cur);
        send(&mut ws, &cmd).await;
        recv(&mut ws).await;
    }
    let mut want = None;
    for line in &lines {
        let cmd = Command::Frame {
            session: None,
            payload: line.clone(),
        };
        for ev in reference.handle(cmd.clone(), &mut cur) {
            if let Event::Params { values, .. } = ev {
                want = Some(values);
            }
        }
        send(&mut ws, &cmd).await;
    }

    let start = tokio::time::Instant::now();
    let mut params = Vec::new();
    let mut last_at = start;
    while let Ok(Some(msg)) = tokio::time::timeout(Duration::from_millis(500), ws.next()).await {
        if let Event::Params { values, .. } =
            Event::from_json(msg.unwrap().to_text().unwrap()).unwrap()
        {
            params.push(values);
            last_at = tokio::time::Instant::now();
        }
    }
    let produced = lines.len() - 9;
    assert!(
        params.len() < produced,
        "{} of {produced} telemetry messages passed",
        params.len()
    );
    let allowed = (last_at - start).as_secs_f64() / TELEMETRY_INTERVAL.as_secs_f64() + 2.0;
    assert!(
        (params.len() as f64) <= allowed,
        "{} messages in {:?}",
        params.len(),
        last_at - start
    );
    assert_eq!(params.last(), want.as_ref());
    server.stop().await;
}

fn spawn_server(dir: &std::path::Path, port: u16) -> (std::process::Child, String) {
    let mut child = Process::new(env!("CARGO_BIN_EXE_gesmap"))
        .args([
            "serve",
            "--port",
            &port.to_string(),
            "--session-dir",
            dir.to_str().unwrap(),
        ])
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stderr.as_mut().unwrap())
        .read_line(&mut line)
        .unwrap();
    let addr = line
        .trim()
        .strip_prefix("listening on http://")
        .unwrap_or_else(|| panic!("{line}"))
        .to_string();
    (child, addr)
}

fn terminate(child: &mut std::process::Child) -> std::process::ExitStatus {
    let pid = child.id().to_string();
    assert!(Process::new("kill")
        .args(["-TERM", &pid])
        .status()
        .unwrap()
        .success());
    child.wait().unwrap()
}

#[tokio::test(flavor = "multi_thread")]
async fn binary_persists_sessions_on_sigterm_and_restores_them() {
    let dir = tempfile::tempdir().unwrap();
    let (mut child, addr) = spawn_server(dir.path(), 0);
    let (status, _) = http(
        addr.parse().unwrap(),
        "POST",
        "/sessions",
        r#"{"id":"kept"}"#,
    )
    .await;
    assert_eq!(status, 201);
    assert!(terminate(&mut child).success());
    assert!(dir.path().join("sessions").join("kept.json").exists());

    let (mut child, addr) = spawn_server(dir.path(), 0);
    let (mut ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/ws"))
        .await
        .unwrap();
    send(
        &mut ws,
        &Command::Presets {
            session: Some("kept".into()),
            presets: config().presets,
        },
    )
    .await;
    assert!(matches!(recv(&mut ws).await, Event::State { session, .. } if session == "kept"));
    drop(ws);
    assert!(terminate(&mut child).success());
}

#[test]
fn busy_port_is_an_environment_failure() {
    let dir = tempfile::tempdir().unwrap();
    let taken = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let port = taken.local_addr().unwrap().port().to_string();
    let status = Process::new(env!("CARGO_BIN_EXE_gesmap"))
        .args([
            "serve",
            "--port",
            &port,
            "--session-dir",
            dir.path().to_str().unwrap(),
        ])
        .stderr(Stdio::null())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(5));
}
