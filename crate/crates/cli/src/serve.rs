//! TCP session server: one session per connection, NDJSON lines or WebSocket text frames.

use std::io::{self, BufRead, BufReader, ErrorKind, Write};
use std::net::{TcpListener, TcpStream};
use std::path::PathBuf;
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use anyhow::Result;
use gazeprompt_core::session::formats::write_text;
use gazeprompt_core::session::protocol::{encode, Envelope};
use gazeprompt_core::session::{Direction, LogEntry, Session, SessionLog};
use tungstenite::{Message, WebSocket};

use crate::config::FileConfig;

pub struct ServeOptions {
    pub config: FileConfig,
    /// Each finished session is written here as `<session id>.ndjson`.
    pub log_dir: Option<PathBuf>,
    /// Read timeout; idle time is accumulated in these steps.
    pub poll: Duration,
}

enum Recv {
    Line(Vec<u8>),
    Idle,
    Closed,
}

trait Transport {
    fn recv(&mut self) -> io::Result<Recv>;
    fn send(&mut self, text: String) -> io::Result<()>;
}

fn is_timeout(e: &io::Error) -> bool {
    matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut)
}

struct LineTransport {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
    buf: Vec<u8>,
}

impl Transport for LineTransport {
    fn recv(&mut self) -> io::Result<Recv> {
        match self.reader.read_until(b'\n', &mut self.buf) {
            // partial input stays in `buf` until the newline arrives
            Err(e) if is_timeout(&e) => Ok(Recv::Idle),
            Err(e) => Err(e),
            Ok(0) if self.buf.is_empty() => Ok(Recv::Closed),
            Ok(_) => {
                let mut line = std::mem::take(&mut self.buf);
                if line.last() == Some(&b'\n') {
                    line.pop();
                }
                if line.last() == Some(&b'\r') {
                    line.pop();
                }
                if line.is_empty() {
                    return self.recv();
                }
                Ok(Recv::Line(line))
            }
        }
    }

    fn send(&mut self, mut text: String) -> io::Result<()> {
        text.push('\n');
        self.writer.write_all(text.as_bytes())
    }
}

struct WsTransport(WebSocket<TcpStream>);

fn ws_io(e: tungstenite::Error) -> io::Error {
    match e {
        tungstenite::Error::Io(e) => e,
        other => io::Error::other(other),
    }
}

impl Transport for WsTransport {
    fn recv(&mut self) -> io::Result<Recv> {
        loop {
            match self.0.read() {
                Ok(Message::Text(t)) => return Ok(Recv::Line(t.as_bytes().to_vec())),
                Ok(Message::Binary(b)) => return Ok(Recv::Line(b.to_vec())),
                Ok(Message::Close(_)) => return Ok(Recv::Closed),
                Ok(_) => continue,
                Err(tungstenite::Error::Io(e)) if is_timeout(&e) => return Ok(Recv::Idle),
                Err(tungstenite::Error::ConnectionClosed | tungstenite::Error::AlreadyClosed) => {
                    return Ok(Recv::Closed)
                }
                Err(e) => return Err(ws_io(e)),
            }
        }
    }

    fn send(&mut self, text: String) -> io::Result<()> {
        self.0.send(Message::text(text)).map_err(ws_io)
    }
}

/// Accepts connections forever, one thread per connection.
pub fn serve(listener: TcpListener, opts: ServeOptions) -> Result<()> {
    let opts = Arc::new(opts);
    for (n, stream) in listener.incoming().enumerate() {
        let stream = match stream {
            Ok(s) => s,
            Err(e) => {
                tracing::warn!("accept failed: {e}");
                continue;
            }
        };
        let opts = Arc::clone(&opts);
        let id = format!("session-{}", n + 1);
        thread::spawn(move || {
            let peer = stream.peer_addr().map(|a| a.to_string()).unwrap_or_default();
            tracing::info!(%peer, session = %id, "connected");
            match connection(stream, &id, &opts) {
                Ok(()) => tracing::info!(session = %id, "closed"),
                Err(e) => tracing::warn!(session = %id, "connection error: {e}"),
            }
        });
    }
    Ok(())
}

/// Waits for the first bytes to tell a WebSocket upgrade from a raw NDJSON stream.
fn sniff(stream: &TcpStream) -> io::Result<Option<bool>> {
    let mut head = [0u8; 4];
    loop {
        match stream.peek(&mut head) {
            Ok(0) => return Ok(None),
            Ok(n) if n < head.len() && head[..n] == b"GET "[..n] => thread::sleep(Duration::from_millis(5)),
            Ok(n) => return Ok(Some(head[..n] == *b"GET ")),
            Err(e) if is_timeout(&e) => continue,
            Err(e) => return Err(e),
        }
    }
}

fn connection(stream: TcpStream, id: &str, opts: &ServeOptions) -> Result<()> {
    stream.set_nodelay(true)?;
    let Some(websocket) = sniff(&stream)? else { return Ok(()) };
    let mut transport: Box<dyn Transport> = if websocket {
        let ws = tungstenite::accept(stream).map_err(|e| anyhow::anyhow!("websocket handshake: {e}"))?;
        ws.get_ref().set_read_timeout(Some(opts.poll))?;
        Box::new(WsTransport(ws))
    } else {
        stream.set_read_timeout(Some(opts.poll))?;
        Box::new(LineTransport { writer: stream.try_clone()?, reader: BufReader::new(stream), buf: Vec::new() })
    };
    let log = run(transport.as_mut(), id, opts)?;
    if let Some(dir) = &opts.log_dir {
        write_text(&dir.join(format!("{id}.ndjson")), &log.to_ndjson())?;
    }
    Ok(())
}

fn run(t: &mut dyn Transport, id: &str, opts: &ServeOptions) -> Result<SessionLog> {
    let mut session = Session::new(opts.config.session_options(id))?;
    let mut log = SessionLog::default();
    let mut idle = Duration::ZERO;
    while !session.is_ended() {
        let replies = match t.recv()? {
            Recv::Closed => break,
            Recv::Idle => {
                idle += opts.poll;
                session.on_idle(idle)
            }
            Recv::Line(bytes) => {
                idle = Duration::ZERO;
                if let Ok(msg) = serde_json::from_slice::<Envelope>(&bytes) {
                    log.entries.push(LogEntry { dir: Direction::In, t: session.stream_time(), msg });
                }
                session.handle_bytes(&bytes)
            }
        };
        for msg in replies {
            t.send(encode(&msg))?;
            log.entries.push(LogEntry { dir: Direction::Out, t: session.stream_time(), msg });
        }
    }
    let lat = session.latency();
    if lat.count() > 0 {
        tracing::info!(session = %id, samples = lat.count(), p99_us = lat.percentile(99.0).as_micros() as u64, "latency");
    }
    Ok(log)
}
