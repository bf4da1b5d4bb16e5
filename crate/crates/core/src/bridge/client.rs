use std::io::{BufReader, BufWriter, Read, Write};
use std::net::TcpStream;
use std::process::{Child, Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Condvar, Mutex};

use serde::{Deserialize, Serialize};

use super::protocol::{read_message, write_message, Message, MessageType, PROTOCOL_VERSION};
use crate::error::{Error, Result};

/// What the backend declared in its HELLO response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeInfo {
    pub channels: usize,
    /// Pixels per latent cell.
    pub scale: usize,
    #[serde(default)]
    pub schedule: Option<Vec<f64>>,
    #[serde(default)]
    pub concurrent: bool,
    #[serde(default = "one")]
    pub max_batch: usize,
    /// Whether DEPTH_INIT / DEPTH_REFINE are served.
    #[serde(default)]
    pub depth: bool,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Endpoint {
    Tcp(String),
    Exec(String),
}

struct Pool {
    idle: Vec<Connection>,
    open: usize,
}

struct Connection {
    reader: Box<dyn Read + Send>,
    writer: Box<dyn Write + Send>,
    child: Option<Child>,
}

impl Drop for Connection {
    fn drop(&mut self) {
        if let Some(child) = &mut self.child {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

impl Endpoint {
    fn parse(addr: &str) -> Result<Self> {
        let addr = addr.trim();
        if let Some(cmd) = addr.strip_prefix("exec:") {
            if cmd.trim().is_empty() {
                return Err(Error::invalid("bridge exec: needs a command"));
            }
            return Ok(Endpoint::Exec(cmd.to_string()));
        }
        let addr = addr.strip_prefix("tcp:").unwrap_or(addr);
        if addr.rsplit_once(':').is_none_or(|(h, p)| h.is_empty() || p.parse::<u16>().is_err()) {
            return Err(Error::invalid(format!("bridge address `{addr}` is not host:port or exec:CMD")));
        }
        Ok(Endpoint::Tcp(addr.to_string()))
    }

    fn open(&self) -> Result<Connection> {
        let fail = |e: std::io::Error| Error::Bridge { request_id: 0, msg: format!("cannot connect to {self:?}: {e}") };
        match self {
            Endpoint::Tcp(addr) => {
                let stream = TcpStream::connect(addr).map_err(fail)?;
                stream.set_nodelay(true).map_err(fail)?;
                let reader = stream.try_clone().map_err(fail)?;
                Ok(Connection {
                    reader: Box::new(BufReader::new(reader)),
                    writer: Box::new(BufWriter::new(stream)),
                    child: None,
                })
            }
            Endpoint::Exec(cmd) => {
                let mut child = Command::new("sh")
                    .arg("-c")
                    .arg(cmd)
                    .stdin(Stdio::piped())
                    .stdout(Stdio::piped())
                    .stderr(Stdio::inherit())
                    .spawn()
                    .map_err(fail)?;
                let writer = child.stdin.take().expect("piped stdin");
                let reader = child.stdout.take().expect("piped stdout");
                Ok(Connection {
                    reader: Box::new(BufReader::new(reader)),
                    writer: Box::new(BufWriter::new(writer)),
                    child: Some(child),
                })
            }
        }
    }
}

/// Connection pool to one backend. Requests are strictly request/response
/// per connection; a backend that declares itself concurrent gets up to
/// `max_batch` parallel TCP connections.
pub struct BridgeClient {
    endpoint: Endpoint,
    info: BridgeInfo,
    next_id: AtomicU64,
    pool: Mutex<Pool>,
    freed: Condvar,
    max_connections: usize,
}

impl std::fmt::Debug for BridgeClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BridgeClient").field("endpoint", &self.endpoint).field("info", &self.info).finish()
    }
}

impl BridgeClient {
    /// Connects to `host:port`, `tcp:host:port` or `exec:CMD` (stdio of a
    /// child process) and performs the HELLO handshake.
    pub fn connect(addr: &str) -> Result<Self> {
        let endpoint = Endpoint::parse(addr)?;
        let mut conn = endpoint.open()?;
        let hello = Message::new(MessageType::Hello, 1).field("version", PROTOCOL_VERSION)?;
        let reply = exchange(&mut conn, &hello)?;
        let info: BridgeInfo = serde_json::from_value(serde_json::Value::Object(reply.header.fields.clone()))
            .map_err(|e| Error::Bridge { request_id: 1, msg: format!("bad HELLO response: {e}") })?;
        if info.channels == 0 || info.scale == 0 {
            return Err(Error::Bridge { request_id: 1, msg: "HELLO declares zero channels or scale".into() });
        }
        let max_connections = match endpoint {
            Endpoint::Tcp(_) if info.concurrent => info.max_batch.max(1),
            _ => 1,
        };
        Ok(Self {
            endpoint,
            info,
            next_id: AtomicU64::new(2),
            pool: Mutex::new(Pool { idle: vec![conn], open: 1 }),
            freed: Condvar::new(),
            max_connections,
        })
    }

    pub fn info(&self) -> &BridgeInfo {
        &self.info
    }

    pub fn next_id(&self) -> u64 {
        self.next_id.fetch_add(1, Ordering::Relaxed)
    }

    fn checkout(&self) -> Result<Connection> {
        let mut pool = self.pool.lock().unwrap();
        loop {
            if let Some(c) = pool.idle.pop() {
                return Ok(c);
            }
            if pool.open < self.max_connections {
                pool.open += 1;
                drop(pool);
                return self.endpoint.open().inspect_err(|_| self.pool.lock().unwrap().open -= 1);
            }
            pool = self.freed.wait(pool).unwrap();
        }
    }

    fn checkin(&self, conn: Option<Connection>) {
        let mut pool = self.pool.lock().unwrap();
        match conn {
            Some(c) => pool.idle.push(c),
            None => pool.open -= 1,
        }
        self.freed.notify_one();
    }

    /// Sends `request` and returns the matching response. An ERROR reply
    /// keeps the connection; transport failures and id mismatches drop it.
    pub fn call(&self, request: &Message) -> Result<Message> {
        let id = request.header.id;
        let mut conn = self.checkout()?;
        match exchange(&mut conn, request) {
            Ok(reply) => {
                self.checkin(Some(conn));
                Ok(reply)
            }
            Err(e) => {
                let keep = matches!(&e, Error::Bridge { msg, .. } if msg.starts_with("backend: "));
                self.checkin(keep.then_some(conn));
                Err(match e {
                    e @ Error::Bridge { .. } => e,
                    other => Error::Bridge { request_id: id, msg: other.to_string() },
                })
            }
        }
    }

    /// Asks the backend for a style token learned from `images`; the
    /// token is meant for the prompt template.
    pub fn invert_token<T: crate::Real>(&self, images: &[crate::grid::Image<T>]) -> Result<String> {
        let mut m = Message::new(MessageType::InvertToken, self.next_id());
        for (i, im) in images.iter().enumerate() {
            m = m.tensor(&format!("image{i}"), im);
        }
        self.call(&m)?.get("token")
    }
}

fn exchange(conn: &mut Connection, request: &Message) -> Result<Message> {
    let id = request.header.id;
    let wrap = |e: Error| Error::Bridge { request_id: id, msg: e.to_string() };
    write_message(&mut conn.writer, request).map_err(wrap)?;
    let reply = read_message(&mut conn.reader)
        .map_err(wrap)?
        .ok_or_else(|| Error::Bridge { request_id: id, msg: "connection closed".into() })?;
    if reply.header.id != id {
        return Err(Error::Bridge { request_id: id, msg: format!("response carries id {}", reply.header.id) });
    }
    if reply.header.kind == MessageType::Error {
        let text: String = reply.get("message").unwrap_or_else(|_| "unspecified".into());
        return Err(Error::Bridge { request_id: id, msg: format!("backend: {text}") });
    }
    if reply.header.kind != request.header.kind {
        return Err(Error::Bridge {
            request_id: id,
            msg: format!("expected {:?} response, got {:?}", request.header.kind, reply.header.kind),
        });
    }
    Ok(reply)
}
