//! Client-side transports and the socket server loop.
//!
//! An in-process transport calls the endpoint directly; the socket transport
//! exchanges the same frames over a local TCP stream with bounded timeouts.
//! Either way the frame sequence is identical, so scenario reports do not
//! depend on the transport.

use std::net::{TcpListener, TcpStream};
use std::thread::JoinHandle;
use std::time::Duration;

use castaudit_core::group::PrimeGroup;
use thiserror::Error;

use crate::endpoint::ServerEndpoint;
use crate::wire::{read_frame, write_frame, WireMessage, DEFAULT_TIMEOUT_SECS};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransportError {
    #[error("no pending frame")]
    Empty,
    #[error("transport failed: {0}")]
    Failed(String),
}

pub trait Transport {
    fn send(&mut self, msg: WireMessage) -> Result<(), TransportError>;
    fn recv(&mut self) -> Result<WireMessage, TransportError>;
}

/// Direct function-call bus to a server endpoint; single-threaded and
/// deterministic.
pub struct InProcessTransport<G: PrimeGroup> {
    pub endpoint: ServerEndpoint<G>,
    reply: Option<WireMessage>,
}

impl<G: PrimeGroup> InProcessTransport<G> {
    pub fn new(endpoint: ServerEndpoint<G>) -> Self {
        Self { endpoint, reply: None }
    }

    pub fn into_endpoint(self) -> ServerEndpoint<G> {
        self.endpoint
    }
}

impl<G: PrimeGroup> Transport for InProcessTransport<G> {
    fn send(&mut self, msg: WireMessage) -> Result<(), TransportError> {
        self.reply = Some(self.endpoint.handle(&msg));
        Ok(())
    }

    fn recv(&mut self) -> Result<WireMessage, TransportError> {
        self.reply.take().ok_or(TransportError::Empty)
    }
}

/// Stream transport over a local socket.
pub struct SocketTransport {
    stream: TcpStream,
}

impl SocketTransport {
    pub fn connect(addr: std::net::SocketAddr) -> Result<Self, TransportError> {
        let stream = TcpStream::connect(addr).map_err(|e| TransportError::Failed(e.to_string()))?;
        stream
            .set_read_timeout(Some(Duration::from_secs(DEFAULT_TIMEOUT_SECS)))
            .map_err(|e| TransportError::Failed(e.to_string()))?;
        stream
            .set_nodelay(true)
            .map_err(|e| TransportError::Failed(e.to_string()))?;
        Ok(Self { stream })
    }
}

impl Transport for SocketTransport {
    fn send(&mut self, msg: WireMessage) -> Result<(), TransportError> {
        write_frame(&mut self.stream, &msg).map_err(|e| TransportError::Failed(e.to_string()))
    }

    fn recv(&mut self) -> Result<WireMessage, TransportError> {
        match read_frame(&mut self.stream) {
            Ok(Some(msg)) => Ok(msg),
            Ok(None) => Err(TransportError::Failed("server closed the connection".into())),
            Err(e) => Err(TransportError::Failed(e.to_string())),
        }
    }
}

/// Runs a server endpoint over one socket connection in a background thread.
/// The thread ends when the client disconnects, handing the endpoint back.
pub struct SocketServer<G: PrimeGroup> {
    pub addr: std::net::SocketAddr,
    handle: JoinHandle<ServerEndpoint<G>>,
}

impl<G: PrimeGroup> SocketServer<G> {
    pub fn spawn(endpoint: ServerEndpoint<G>) -> Result<Self, TransportError> {
        let listener =
            TcpListener::bind("127.0.0.1:0").map_err(|e| TransportError::Failed(e.to_string()))?;
        let addr = listener.local_addr().map_err(|e| TransportError::Failed(e.to_string()))?;
        let handle = std::thread::spawn(move || serve_one(listener, endpoint));
        Ok(Self { addr, handle })
    }

    /// Waits for the client to disconnect and returns the final server state.
    pub fn join(self) -> Result<ServerEndpoint<G>, TransportError> {
        self.handle.join().map_err(|_| TransportError::Failed("server thread panicked".into()))
    }
}

fn serve_one<G: PrimeGroup>(
    listener: TcpListener,
    mut endpoint: ServerEndpoint<G>,
) -> ServerEndpoint<G> {
    let Ok((mut stream, _)) = listener.accept() else {
        return endpoint;
    };
    let _ = stream.set_read_timeout(Some(Duration::from_secs(DEFAULT_TIMEOUT_SECS)));
    let _ = stream.set_nodelay(true);
    loop {
        match read_frame(&mut stream) {
            Ok(Some(msg)) => {
                let reply = endpoint.handle(&msg);
                if write_frame(&mut stream, &reply).is_err() {
                    return endpoint;
                }
            }
            Ok(None) | Err(_) => return endpoint,
        }
    }
}
