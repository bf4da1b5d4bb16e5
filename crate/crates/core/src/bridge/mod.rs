//! Client side of the out-of-process backend protocol.
//!
//! Each message is a little-endian `u32` header length, a JSON header and
//! the header's tensors as raw little-endian `f32`. See
//! `docs/bridge-protocol.md` for the message catalogue with byte dumps.

mod backends;
mod client;
pub mod protocol;
mod server;

pub use backends::{BridgeCodec, BridgeDenoiser, BridgeDepth};
pub use client::{BridgeClient, BridgeInfo};
pub use protocol::{Message, MessageType, TensorSpec};
pub use server::{serve_stream, serve_tcp, BridgeHandler, LocalBackend};
