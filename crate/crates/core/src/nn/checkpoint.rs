//! Little-endian binary encoding of networks.

use alloc::string::String;
use alloc::vec::Vec;

use super::{Activation, LayerParams, Network, NnError};
use crate::matrix::Matrix;

pub const NETWORK_MAGIC: &[u8; 4] = b"EPNN";
pub const NETWORK_VERSION: u32 = 1;

#[derive(Debug, Default)]
pub struct ByteWriter {
    pub buf: Vec<u8>,
}

impl ByteWriter {
    pub fn bytes(&mut self, b: &[u8]) {
        self.buf.extend_from_slice(b);
    }
    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    pub fn u32(&mut self, v: u32) {
        self.bytes(&v.to_le_bytes());
    }
    pub fn u64(&mut self, v: u64) {
        self.bytes(&v.to_le_bytes());
    }
    pub fn f64(&mut self, v: f64) {
        self.bytes(&v.to_bits().to_le_bytes());
    }
    pub fn f64s(&mut self, v: &[f64]) {
        self.u64(v.len() as u64);
        v.iter().for_each(|x| self.f64(*x));
    }
    pub fn str(&mut self, s: &str) {
        self.u64(s.len() as u64);
        self.bytes(s.as_bytes());
    }
}

#[derive(Debug)]
pub struct ByteReader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        ByteReader { data, pos: 0 }
    }
    pub fn position(&self) -> usize {
        self.pos
    }
    pub fn is_empty(&self) -> bool {
        self.pos == self.data.len()
    }
    pub fn take(&mut self, n: usize) -> Result<&'a [u8], NnError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.data.len()).ok_or(NnError::Corrupt("truncated"))?;
        let s = &self.data[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    pub fn u8(&mut self) -> Result<u8, NnError> {
        Ok(self.take(1)?[0])
    }
    pub fn u32(&mut self) -> Result<u32, NnError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    pub fn u64(&mut self) -> Result<u64, NnError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    pub fn f64(&mut self) -> Result<f64, NnError> {
        Ok(f64::from_bits(self.u64()?))
    }
    pub fn len(&mut self) -> Result<usize, NnError> {
        let n = self.u64()?;
        // each element is at least one byte
        if n > (self.data.len() - self.pos) as u64 {
            return Err(NnError::Corrupt("length exceeds input"));
        }
        Ok(n as usize)
    }
    pub fn f64s(&mut self) -> Result<Vec<f64>, NnError> {
        let n = self.len()?;
        (0..n).map(|_| self.f64()).collect()
    }
    pub fn str(&mut self) -> Result<String, NnError> {
        let n = self.len()?;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| NnError::Corrupt("invalid utf-8"))
    }
}

pub fn write_network(w: &mut ByteWriter, net: &Network) {
    w.bytes(NETWORK_MAGIC);
    w.u32(NETWORK_VERSION);
    w.u32(net.layers.len() as u32);
    for layer in &net.layers {
        w.u8(layer.activation.code());
        w.u64(layer.inputs() as u64);
        w.u64(layer.outputs() as u64);
        layer.weights.as_slice().iter().for_each(|v| w.f64(*v));
        layer.bias.iter().for_each(|v| w.f64(*v));
    }
}

pub fn read_network(r: &mut ByteReader<'_>) -> Result<Network, NnError> {
    if r.take(4)? != NETWORK_MAGIC {
        return Err(NnError::Corrupt("bad magic"));
    }
    let version = r.u32()?;
    if version != NETWORK_VERSION {
        return Err(NnError::UnsupportedVersion(version));
    }
    let n = r.u32()? as usize;
    let mut layers = Vec::with_capacity(n.min(64));
    for _ in 0..n {
        let act = Activation::from_code(r.u8()?).ok_or(NnError::Corrupt("unknown activation"))?;
        let inputs = r.u64()? as usize;
        let outputs = r.u64()? as usize;
        let count = inputs.checked_mul(outputs).ok_or(NnError::Corrupt("layer too large"))?;
        if count.saturating_add(outputs).saturating_mul(8) > r.data.len() - r.pos {
            return Err(NnError::Corrupt("truncated"));
        }
        let data = (0..count).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?;
        let bias = (0..outputs).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?;
        layers.push(LayerParams { weights: Matrix::from_vec(outputs, inputs, data), bias, activation: act });
    }
    Network::new(layers)
}

pub fn encode_network(net: &Network) -> Vec<u8> {
    let mut w = ByteWriter::default();
    write_network(&mut w, net);
    w.buf
}

pub fn decode_network(bytes: &[u8]) -> Result<Network, NnError> {
    let mut r = ByteReader::new(bytes);
    let net = read_network(&mut r)?;
    if !r.is_empty() {
        return Err(NnError::Corrupt("trailing bytes"));
    }
    Ok(net)
}
