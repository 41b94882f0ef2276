//! Transports: newline-delimited JSON over TCP, and `POST /v1` over HTTP.

use std::io::{self, BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

use super::protocol::{handle_message, http_status};
use super::Engine;

#[derive(Debug, Clone, Default)]
pub struct ServeConfig {
    /// NDJSON socket address; port 0 picks a free port.
    pub ndjson: Option<SocketAddr>,
    pub http: Option<SocketAddr>,
}

pub struct Service {
    engine: Arc<Engine>,
    ndjson_addr: Option<SocketAddr>,
    http_addr: Option<SocketAddr>,
    stop: Arc<AtomicBool>,
    http: Option<Arc<tiny_http::Server>>,
    threads: Vec<JoinHandle<()>>,
}

impl Service {
    pub fn engine(&self) -> &Arc<Engine> {
        &self.engine
    }

    pub fn ndjson_addr(&self) -> Option<SocketAddr> {
        self.ndjson_addr
    }

    pub fn http_addr(&self) -> Option<SocketAddr> {
        self.http_addr
    }

    /// Blocks until the listeners exit.
    pub fn wait(mut self) {
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
    }

    /// Stops accepting connections. Open NDJSON connections finish on
    /// their own when clients disconnect.
    pub fn shutdown(mut self) {
        self.stop.store(true, Ordering::SeqCst);
        if let Some(addr) = self.ndjson_addr {
            let _ = TcpStream::connect(addr);
        }
        if let Some(server) = &self.http {
            server.unblock();
        }
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
    }
}

pub fn serve(engine: Arc<Engine>, config: &ServeConfig) -> io::Result<Service> {
    let stop = Arc::new(AtomicBool::new(false));
    let mut threads = Vec::new();
    let mut ndjson_addr = None;
    if let Some(addr) = config.ndjson {
        let listener = TcpListener::bind(addr)?;
        ndjson_addr = Some(listener.local_addr()?);
        let (engine, stop) = (engine.clone(), stop.clone());
        threads.push(std::thread::spawn(move || accept_loop(listener, engine, stop)));
    }
    let mut http = None;
    let mut http_addr = None;
    if let Some(addr) = config.http {
        let server = Arc::new(tiny_http::Server::http(addr).map_err(io::Error::other)?);
        http_addr = server.server_addr().to_ip();
        http = Some(server.clone());
        let (engine, stop) = (engine.clone(), stop.clone());
        threads.push(std::thread::spawn(move || http_loop(server, engine, stop)));
    }
    Ok(Service { engine, ndjson_addr, http_addr, stop, http, threads })
}

fn accept_loop(listener: TcpListener, engine: Arc<Engine>, stop: Arc<AtomicBool>) {
    for conn in listener.incoming() {
        if stop.load(Ordering::SeqCst) {
            break;
        }
        let Ok(conn) = conn else { continue };
        let engine = engine.clone();
        std::thread::spawn(move || {
            let _ = serve_connection(conn, &engine);
        });
    }
}

fn serve_connection(conn: TcpStream, engine: &Engine) -> io::Result<()> {
    let mut out = conn.try_clone()?;
    for line in BufReader::new(conn).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let reply = handle_message(engine, &line);
        let mut bytes = serde_json::to_vec(&reply).expect("replies serialize");
        bytes.push(b'\n');
        out.write_all(&bytes)?;
        out.flush()?;
    }
    Ok(())
}

fn header(name: &str, value: &str) -> tiny_http::Header {
    tiny_http::Header::from_bytes(name.as_bytes(), value.as_bytes()).expect("static headers are valid")
}

fn cors(resp: tiny_http::Response<io::Cursor<Vec<u8>>>) -> tiny_http::Response<io::Cursor<Vec<u8>>> {
    resp.with_header(header("Access-Control-Allow-Origin", "*"))
        .with_header(header("Access-Control-Allow-Methods", "POST, OPTIONS"))
        .with_header(header("Access-Control-Allow-Headers", "Content-Type"))
}

fn http_loop(server: Arc<tiny_http::Server>, engine: Arc<Engine>, stop: Arc<AtomicBool>) {
    while !stop.load(Ordering::SeqCst) {
        let Ok(request) = server.recv() else { break };
        let engine = engine.clone();
        // training requests wait for completion, so each request gets a thread
        std::thread::spawn(move || respond(request, &engine));
    }
}

fn respond(mut request: tiny_http::Request, engine: &Engine) {
    use tiny_http::{Method, Response};
    let path = request.url().split('?').next().unwrap_or("").to_owned();
    let resp = match (request.method(), path.as_str()) {
        (Method::Options, "/v1") => Response::from_data(Vec::new()).with_status_code(204),
        (Method::Post, "/v1") => {
            let mut body = String::new();
            let reply = match io::Read::read_to_string(request.as_reader(), &mut body) {
                Ok(_) => handle_message(engine, &body),
                Err(e) => handle_message(engine, &format!("<unreadable body: {e}>")),
            };
            Response::from_data(serde_json::to_vec(&reply).expect("replies serialize"))
                .with_status_code(http_status(&reply))
                .with_header(header("Content-Type", "application/json"))
        }
        _ => Response::from_data(
            br#"{"v":1,"error":{"code":"not_found","message":"use POST /v1"}}"#.to_vec(),
        )
        .with_status_code(404)
        .with_header(header("Content-Type", "application/json")),
    };
    let _ = request.respond(cors(resp));
}
