use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::numeric::Real;

pub const PROTOCOL_VERSION: u32 = 1;
/// Upper bound on the JSON header, guarding against garbage prefixes.
pub const MAX_HEADER_BYTES: usize = 1 << 20;
/// Upper bound on one message's tensor payload.
pub const MAX_PAYLOAD_BYTES: usize = 1 << 31;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MessageType {
    Hello,
    Encode,
    Decode,
    Eps,
    DepthInit,
    DepthRefine,
    InvertToken,
    Error,
}

/// Named tensor of `height × width × channels` f32 values, row-major with
/// channels fastest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorSpec {
    pub name: String,
    /// `[height, width, channels]`.
    pub shape: [usize; 3],
}

impl TensorSpec {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    #[serde(rename = "type")]
    pub kind: MessageType,
    pub id: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tensors: Vec<TensorSpec>,
    /// Message-specific fields.
    #[serde(flatten)]
    pub fields: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub header: Header,
    /// One buffer per entry of `header.tensors`.
    pub payload: Vec<Vec<f32>>,
}

impl Message {
    pub fn new(kind: MessageType, id: u64) -> Self {
        Self { header: Header { kind, id, tensors: Vec::new(), fields: Map::new() }, payload: Vec::new() }
    }

    pub fn field(mut self, key: &str, value: impl Serialize) -> Result<Self> {
        self.header.fields.insert(key.to_string(), serde_json::to_value(value)?);
        Ok(self)
    }

    pub fn tensor<T: Real>(mut self, name: &str, grid: &Grid<T>) -> Self {
        let (w, h, c) = grid.dims();
        self.header.tensors.push(TensorSpec { name: name.to_string(), shape: [h, w, c] });
        self.payload.push(grid.data().iter().map(|v| v.as_f64() as f32).collect());
        self
    }

    pub fn get<V: for<'de> Deserialize<'de>>(&self, key: &str) -> Result<V> {
        let v = self.header.fields.get(key).cloned().ok_or_else(|| self.bad(format!("missing field `{key}`")))?;
        serde_json::from_value(v).map_err(|e| self.bad(format!("field `{key}`: {e}")))
    }

    /// Tensor `i` as a grid.
    pub fn grid<T: Real>(&self, i: usize) -> Result<Grid<T>> {
        let spec = self.header.tensors.get(i).ok_or_else(|| self.bad(format!("missing tensor {i}")))?;
        let [h, w, c] = spec.shape;
        Grid::from_vec(w, h, c, self.payload[i].iter().map(|&v| T::lit(v as f64)).collect())
    }

    fn bad(&self, msg: String) -> Error {
        Error::Bridge { request_id: self.header.id, msg }
    }

    pub fn error(id: u64, message: &str) -> Self {
        let mut m = Self::new(MessageType::Error, id);
        m.header.fields.insert("message".into(), Value::String(message.to_string()));
        m
    }

    /// Wire form: `u32` LE header length, UTF-8 JSON header, then every
    /// tensor as little-endian f32 in header order.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        if self.payload.len() != self.header.tensors.len() {
            return Err(self.bad("tensor count does not match payload".into()));
        }
        for (spec, data) in self.header.tensors.iter().zip(&self.payload) {
            if spec.len() != data.len() {
                return Err(self.bad(format!("tensor `{}` has {} values, shape says {}", spec.name, data.len(), spec.len())));
            }
        }
        let header = serde_json::to_vec(&self.header)?;
        if header.len() > MAX_HEADER_BYTES {
            return Err(self.bad("header too large".into()));
        }
        let total: usize = self.payload.iter().map(Vec::len).sum();
        let mut out = Vec::with_capacity(4 + header.len() + total * 4);
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        for data in &self.payload {
            for v in data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }
}

/// Writes one message and flushes.
pub fn write_message(w: &mut impl Write, msg: &Message) -> Result<()> {
    w.write_all(&msg.to_bytes()?)?;
    w.flush()?;
    Ok(())
}

/// Reads one message. `Ok(None)` on a clean end of stream before any byte.
pub fn read_message(r: &mut impl Read) -> Result<Option<Message>> {
    let mut len = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        match r.read(&mut len[got..])? {
            0 if got == 0 => return Ok(None),
            0 => return Err(std::io::Error::from(std::io::ErrorKind::UnexpectedEof).into()),
            n => got += n,
        }
    }
    let n = u32::from_le_bytes(len) as usize;
    if n > MAX_HEADER_BYTES {
        return Err(Error::Bridge { request_id: 0, msg: format!("header length {n} exceeds limit") });
    }
    let mut hbuf = vec![0u8; n];
    r.read_exact(&mut hbuf)?;
    let header: Header = serde_json::from_slice(&hbuf)
        .map_err(|e| Error::Bridge { request_id: 0, msg: format!("malformed header: {e}") })?;
    let total: usize = header.tensors.iter().map(TensorSpec::len).sum();
    if total.saturating_mul(4) > MAX_PAYLOAD_BYTES {
        return Err(Error::Bridge { request_id: header.id, msg: "payload too large".into() });
    }
    let mut payload = Vec::with_capacity(header.tensors.len());
    for spec in &header.tensors {
        let mut bytes = vec![0u8; spec.len() * 4];
        r.read_exact(&mut bytes)?;
        payload.push(bytes.chunks_exact(4).map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]])).collect());
    }
    Ok(Some(Message { header, payload }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // The byte strings below are reproduced in docs/bridge-protocol.md.
    #[test]
    fn hello_request_bytes() {
        let m = Message::new(MessageType::Hello, 1).field("version", 1).unwrap();
        let bytes = m.to_bytes().unwrap();
        let json = br#"{"type":"HELLO","id":1,"version":1}"#;
        let mut want = (json.len() as u32).to_le_bytes().to_vec();
        want.extend_from_slice(json);
        assert_eq!(bytes, want);
        assert_eq!(&bytes[..4], &[0x23, 0, 0, 0]);
    }

    #[test]
    fn encode_request_bytes() {
        let g = Grid::from_vec(1, 1, 3, vec![0.5f32, 1.0, -2.0]).unwrap();
        let bytes = Message::new(MessageType::Encode, 7).tensor("image", &g).to_bytes().unwrap();
        let json = br#"{"type":"ENCODE","id":7,"tensors":[{"name":"image","shape":[1,1,3]}]}"#;
        let mut want = (json.len() as u32).to_le_bytes().to_vec();
        want.extend_from_slice(json);
        want.extend_from_slice(&[0x00, 0x00, 0x00, 0x3f, 0x00, 0x00, 0x80, 0x3f, 0x00, 0x00, 0x00, 0xc0]);
        assert_eq!(bytes, want);
        let back = read_message(&mut bytes.as_slice()).unwrap().unwrap();
        assert_eq!(back.grid::<f32>(0).unwrap(), g);
    }

    #[test]
    fn clean_eof_and_truncation() {
        assert!(read_message(&mut [].as_slice()).unwrap().is_none());
        let bytes = Message::new(MessageType::Hello, 2).to_bytes().unwrap();
        assert!(read_message(&mut &bytes[..bytes.len() - 1]).is_err());
        assert!(read_message(&mut &bytes[..2]).is_err());
        let mut garbage = 5u32.to_le_bytes().to_vec();
        garbage.extend_from_slice(b"{oops");
        assert!(matches!(read_message(&mut garbage.as_slice()), Err(Error::Bridge { .. })));
    }

    #[test]
    fn payload_length_is_checked() {
        let mut m = Message::new(MessageType::Decode, 3).tensor("latent", &Grid::<f32>::zeros(2, 2, 4));
        m.payload[0].pop();
        assert!(m.to_bytes().is_err());
    }

    proptest! {
        #[test]
        fn f32_payloads_round_trip_bit_exact(bits in prop::collection::vec(any::<u32>(), 1..64)) {
            let vals: Vec<f32> = bits.iter().map(|&b| f32::from_bits(b)).collect();
            let n = vals.len();
            let mut m = Message::new(MessageType::Eps, 9);
            m.header.tensors.push(TensorSpec { name: "x".into(), shape: [1, n, 1] });
            m.payload.push(vals);
            let back = read_message(&mut m.to_bytes().unwrap().as_slice()).unwrap().unwrap();
            let got: Vec<u32> = back.payload[0].iter().map(|v| v.to_bits()).collect();
            prop_assert_eq!(got, bits);
        }
    }
}
