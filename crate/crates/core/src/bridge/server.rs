use std::io::{BufReader, BufWriter, Read, Write};
use std::net::TcpListener;
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::client::BridgeInfo;
use super::protocol::{read_message, write_message, Message, MessageType};
use crate::camera::ViewSpec;
use crate::depth::DepthPredictor;
use crate::diffusion::{Denoiser, DenoiserInput, Frame, LatentCodec};
use crate::error::{Error, Result};
use crate::grid::{Grid, Mask};
use crate::numeric::Real;

/// Answers one request. Errors become ERROR replies.
pub trait BridgeHandler: Send + Sync {
    fn handle(&self, request: &Message) -> Result<Message>;
}

/// Serves one byte stream until the peer closes it. A malformed header
/// gets an ERROR reply and the stream stays open.
pub fn serve_stream(reader: impl Read, writer: impl Write, handler: &dyn BridgeHandler) -> Result<()> {
    let mut reader = BufReader::new(reader);
    let mut writer = BufWriter::new(writer);
    loop {
        let reply = match read_message(&mut reader) {
            Ok(None) => return Ok(()),
            Ok(Some(req)) => handler.handle(&req).unwrap_or_else(|e| Message::error(req.header.id, &e.to_string())),
            Err(Error::Bridge { request_id, msg }) => Message::error(request_id, &msg),
            Err(e) => return Err(e),
        };
        write_message(&mut writer, &reply)?;
    }
}

/// Accepts connections forever, one thread each.
pub fn serve_tcp(listener: TcpListener, handler: Arc<dyn BridgeHandler>) -> Result<()> {
    for stream in listener.incoming() {
        let stream = stream?;
        stream.set_nodelay(true)?;
        let handler = handler.clone();
        std::thread::spawn(move || {
            if let Ok(read) = stream.try_clone() {
                let _ = serve_stream(read, stream, handler.as_ref());
            }
        });
    }
    Ok(())
}

/// Serves in-process components over the protocol. With an oracle
/// denoiser and the identity codec this is the conformance double: a run
/// through it must match the same run in-process bit for bit.
pub struct LocalBackend<T: Real> {
    pub denoiser: Arc<dyn Denoiser<T>>,
    pub codec: Arc<dyn LatentCodec<T>>,
    pub depth: Option<Arc<dyn DepthPredictor<T>>>,
    pub max_batch: usize,
    /// Returned for INVERT_TOKEN.
    pub token: String,
}

impl<T: Real> LocalBackend<T> {
    pub fn new(denoiser: Arc<dyn Denoiser<T>>, codec: Arc<dyn LatentCodec<T>>) -> Self {
        Self { denoiser, codec, depth: None, max_batch: 4, token: "<scene>".into() }
    }

    pub fn info(&self) -> BridgeInfo {
        let d = self.denoiser.info();
        BridgeInfo {
            channels: self.codec.channels(),
            scale: self.codec.scale(),
            schedule: d.schedule,
            concurrent: d.concurrent,
            max_batch: self.max_batch,
            depth: self.depth.is_some(),
        }
    }

    fn depth(&self) -> Result<&dyn DepthPredictor<T>> {
        self.depth.as_deref().ok_or_else(|| Error::invalid("depth not served"))
    }
}

fn mask_of<T: Real>(g: &Grid<T>) -> Result<Mask> {
    if g.channels() != 1 {
        return Err(Error::Shape(format!("mask tensor has {} channels", g.channels())));
    }
    Mask::from_vec(g.width(), g.height(), g.data().iter().map(|&v| v > T::half()).collect())
}

impl<T: Real + Serialize + DeserializeOwned> BridgeHandler for LocalBackend<T> {
    fn handle(&self, req: &Message) -> Result<Message> {
        let id = req.header.id;
        let reply = Message::new(req.header.kind, id);
        Ok(match req.header.kind {
            MessageType::Hello => {
                let v: u32 = req.get("version")?;
                if v != super::protocol::PROTOCOL_VERSION {
                    return Err(Error::invalid(format!("unsupported protocol version {v}")));
                }
                let mut reply = reply;
                if let serde_json::Value::Object(map) = serde_json::to_value(self.info())? {
                    reply.header.fields = map;
                }
                reply
            }
            MessageType::Encode => reply.tensor("latent", &self.codec.encode(&req.grid::<T>(0)?)?),
            MessageType::Decode => reply.tensor("image", &self.codec.decode(&req.grid::<T>(0)?)?),
            MessageType::Eps => {
                let latents = req.grid::<T>(0)?;
                let reference = req.grid::<T>(1)?;
                let mask = mask_of(&req.grid::<T>(2)?)?;
                let prompt: String = req.get("prompt")?;
                let frame: Frame<T> = req.get("frame")?;
                let alpha_bar: f64 = req.get("alpha_bar")?;
                let input = DenoiserInput {
                    latents: &latents,
                    t: req.get("t")?,
                    alpha_bar: T::lit(alpha_bar),
                    reference: &reference,
                    mask: &mask,
                    prompt: &prompt,
                    frame,
                };
                input.validate()?;
                reply.tensor("eps", &self.denoiser.predict_epsilon(&input)?)
            }
            MessageType::DepthInit => {
                let view: ViewSpec<T> = req.get("view")?;
                reply.tensor("depth", &self.depth()?.predict_initial(&req.grid(0)?, &view)?)
            }
            MessageType::DepthRefine => {
                let view: ViewSpec<T> = req.get("view")?;
                let mask = mask_of(&req.grid::<T>(3)?)?;
                let out = self.depth()?.refine(&req.grid(0)?, &req.grid(1)?, &req.grid(2)?, &mask, &view)?;
                reply.tensor("depth", &out)
            }
            MessageType::InvertToken => reply.field("token", &self.token)?,
            MessageType::Error => return Err(Error::invalid("ERROR is not a request")),
        })
    }
}
