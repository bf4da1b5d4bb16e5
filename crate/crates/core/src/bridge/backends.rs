use std::sync::Arc;

use serde::Serialize;

use super::client::BridgeClient;
use super::protocol::{Message, MessageType};
use crate::camera::ViewSpec;
use crate::depth::DepthPredictor;
use crate::diffusion::{Denoiser, DenoiserInfo, DenoiserInput, LatentCodec};
use crate::error::{Error, Result};
use crate::grid::{Grid, Image, Mask};
use crate::numeric::Real;

pub(crate) fn mask_grid<T: Real>(mask: &Mask) -> Grid<T> {
    let data = mask.data().iter().map(|&b| if b { T::one() } else { T::zero() }).collect();
    Grid::from_vec(mask.width(), mask.height(), 1, data).expect("mask dims")
}

fn expect_dims<T: Real>(reply: &Message, g: Grid<T>, dims: (usize, usize, usize)) -> Result<Grid<T>> {
    if g.dims() != dims {
        return Err(Error::Bridge {
            request_id: reply.header.id,
            msg: format!("response tensor is {:?}, expected {:?}", g.dims(), dims),
        });
    }
    if !g.is_finite() {
        return Err(Error::Bridge { request_id: reply.header.id, msg: "response tensor is not finite".into() });
    }
    Ok(g)
}

/// ε-prediction served by the backend.
#[derive(Debug, Clone)]
pub struct BridgeDenoiser {
    client: Arc<BridgeClient>,
}

impl BridgeDenoiser {
    pub fn new(client: Arc<BridgeClient>) -> Self {
        Self { client }
    }
}

impl<T: Real + Serialize> Denoiser<T> for BridgeDenoiser {
    fn info(&self) -> DenoiserInfo {
        let i = self.client.info();
        DenoiserInfo { channels: i.channels, concurrent: i.concurrent, schedule: i.schedule.clone() }
    }

    fn predict_epsilon(&self, input: &DenoiserInput<'_, T>) -> Result<Grid<T>> {
        input.validate()?;
        let req = Message::new(MessageType::Eps, self.client.next_id())
            .field("t", input.t)?
            .field("alpha_bar", input.alpha_bar.as_f64())?
            .field("prompt", input.prompt)?
            .field("frame", input.frame)?
            .tensor("latents", input.latents)
            .tensor("reference", input.reference)
            .tensor("mask", &mask_grid::<T>(input.mask));
        let reply = self.client.call(&req)?;
        expect_dims(&reply, reply.grid(0)?, input.latents.dims())
    }
}

/// Latent encoder/decoder served by the backend.
#[derive(Debug, Clone)]
pub struct BridgeCodec {
    client: Arc<BridgeClient>,
}

impl BridgeCodec {
    pub fn new(client: Arc<BridgeClient>) -> Self {
        Self { client }
    }
}

impl<T: Real> LatentCodec<T> for BridgeCodec {
    fn scale(&self) -> usize {
        self.client.info().scale
    }

    fn channels(&self) -> usize {
        self.client.info().channels
    }

    fn encode(&self, image: &Image<T>) -> Result<Grid<T>> {
        let (w, h, c) = image.dims();
        let k = self.client.info().scale;
        if c != 3 || w % k != 0 || h % k != 0 {
            return Err(Error::Codec(format!("{w}x{h}x{c} image is not RGB divisible by {k}")));
        }
        let reply = self.client.call(&Message::new(MessageType::Encode, self.client.next_id()).tensor("image", image))?;
        expect_dims(&reply, reply.grid(0)?, (w / k, h / k, self.client.info().channels))
    }

    fn decode(&self, latent: &Grid<T>) -> Result<Image<T>> {
        let (w, h, c) = latent.dims();
        let k = self.client.info().scale;
        if c != self.client.info().channels {
            return Err(Error::Codec(format!("latent has {c} channels, backend {}", self.client.info().channels)));
        }
        let reply = self.client.call(&Message::new(MessageType::Decode, self.client.next_id()).tensor("latent", latent))?;
        expect_dims(&reply, reply.grid(0)?, (w * k, h * k, 3))
    }
}

/// Monocular depth served by the backend. Depth is z along the optical
/// axis, as everywhere else in the engine.
#[derive(Debug, Clone)]
pub struct BridgeDepth {
    client: Arc<BridgeClient>,
}

impl BridgeDepth {
    pub fn new(client: Arc<BridgeClient>) -> Result<Self> {
        if !client.info().depth {
            return Err(Error::invalid("bridge backend does not serve depth"));
        }
        Ok(Self { client })
    }
}

impl<T: Real + Serialize> DepthPredictor<T> for BridgeDepth {
    fn predict_initial(&self, image: &Image<T>, view: &ViewSpec<T>) -> Result<Grid<T>> {
        let req = Message::new(MessageType::DepthInit, self.client.next_id()).field("view", view)?.tensor("image", image);
        let reply = self.client.call(&req)?;
        expect_dims(&reply, reply.grid(0)?, (image.width(), image.height(), 1))
    }

    fn refine(
        &self,
        image: &Image<T>,
        depth: &Grid<T>,
        anchor: &Grid<T>,
        anchor_mask: &Mask,
        view: &ViewSpec<T>,
    ) -> Result<Grid<T>> {
        let req = Message::new(MessageType::DepthRefine, self.client.next_id())
            .field("view", view)?
            .tensor("image", image)
            .tensor("depth", depth)
            .tensor("anchor", anchor)
            .tensor("anchor_mask", &mask_grid::<T>(anchor_mask));
        let reply = self.client.call(&req)?;
        expect_dims(&reply, reply.grid(0)?, depth.dims())
    }

    fn concurrent(&self) -> bool {
        self.client.info().concurrent
    }
}
