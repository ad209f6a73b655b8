//! Versioned binary model container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic "RSTC" | version u16 | n_meta u32 | { key_len u16, key, val_len u32, val }*
//! | n_tensors u32 | { name_len u16, name, ndim u8, dims u32* }*
//! | payload: every tensor's f64 values, row-major, in table order
//! | crc32 u32 over everything before it
//! ```

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::nn::{Activation, DenseLayer, LstmLayer, Mlp, Seq2SeqAutoencoder, Seq2SeqConfig};
use crate::{Error, Result};

pub const MAGIC: [u8; 4] = *b"RSTC";
pub const VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Container {
    pub metadata: Vec<(String, String)>,
    pub tensors: Vec<Tensor>,
}

impl Container {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set_meta(&mut self, key: &str, value: impl Into<String>) {
        let value = value.into();
        match self.metadata.iter_mut().find(|(k, _)| k == key) {
            Some(slot) => slot.1 = value,
            None => self.metadata.push((key.to_string(), value)),
        }
    }

    pub fn meta(&self, key: &str) -> Result<&str> {
        self.metadata
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| Error::Container(format!("missing metadata key {key:?}")))
    }

    pub fn push(&mut self, name: impl Into<String>, shape: &[usize], data: Vec<f64>) {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        self.tensors.push(Tensor { name: name.into(), shape: shape.to_vec(), data });
    }

    pub fn tensor(&self, name: &str) -> Result<&Tensor> {
        self.tensors
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| Error::Container(format!("missing tensor {name:?}")))
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.metadata.len() as u32).to_le_bytes());
        for (k, v) in &self.metadata {
            out.extend_from_slice(&(k.len() as u16).to_le_bytes());
            out.extend_from_slice(k.as_bytes());
            out.extend_from_slice(&(v.len() as u32).to_le_bytes());
            out.extend_from_slice(v.as_bytes());
        }
        out.extend_from_slice(&(self.tensors.len() as u32).to_le_bytes());
        for t in &self.tensors {
            out.extend_from_slice(&(t.name.len() as u16).to_le_bytes());
            out.extend_from_slice(t.name.as_bytes());
            out.push(t.shape.len() as u8);
            for &d in &t.shape {
                out.extend_from_slice(&(d as u32).to_le_bytes());
            }
        }
        for t in &self.tensors {
            for v in &t.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 + 2 + 4 + 4 + 4 {
            return Err(Error::Container("truncated container".into()));
        }
        let (body, crc) = bytes.split_at(bytes.len() - 4);
        if crc32fast::hash(body) != u32::from_le_bytes(crc.try_into().expect("4 bytes")) {
            return Err(Error::Container("checksum mismatch".into()));
        }
        let mut r = Reader { buf: body, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Container("bad magic".into()));
        }
        let version = r.u16()?;
        if version != VERSION {
            return Err(Error::Container(format!("unsupported version {version}")));
        }
        let mut c = Container::new();
        for _ in 0..r.u32()? {
            let klen = r.u16()? as usize;
            let k = r.string(klen)?;
            let vlen = r.u32()? as usize;
            let v = r.string(vlen)?;
            c.metadata.push((k, v));
        }
        let n = r.u32()? as usize;
        let mut table = Vec::with_capacity(n.min(1 << 16));
        for _ in 0..n {
            let nlen = r.u16()? as usize;
            let name = r.string(nlen)?;
            let ndim = r.take(1)?[0] as usize;
            let mut shape = Vec::with_capacity(ndim);
            for _ in 0..ndim {
                shape.push(r.u32()? as usize);
            }
            table.push((name, shape));
        }
        for (name, shape) in table {
            let len: usize = shape.iter().product();
            let raw = r.take(len.checked_mul(8).ok_or_else(|| Error::Container("tensor too large".into()))?)?;
            let data = raw.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes"))).collect();
            c.tensors.push(Tensor { name, shape, data });
        }
        if r.pos != body.len() {
            return Err(Error::Container("trailing bytes before checksum".into()));
        }
        Ok(c)
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::Container("truncated container".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
    fn string(&mut self, n: usize) -> Result<String> {
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| Error::Container("invalid utf-8".into()))
    }
}

/// Models that can be stored under a name prefix inside a [`Container`].
pub trait ContainerCodec: Sized {
    fn write(&self, prefix: &str, c: &mut Container);
    fn read(prefix: &str, c: &Container) -> Result<Self>;

    fn to_container(&self) -> Container {
        let mut c = Container::new();
        self.write("model", &mut c);
        c
    }

    fn from_container(c: &Container) -> Result<Self> {
        Self::read("model", c)
    }
}

pub(crate) fn scalars(c: &Container, name: &str, n: usize) -> Result<Vec<f64>> {
    let t = c.tensor(name)?;
    if t.data.len() != n {
        return Err(Error::Container(format!("{name}: expected {n} values, found {}", t.data.len())));
    }
    Ok(t.data.clone())
}

impl ContainerCodec for DenseLayer {
    fn write(&self, prefix: &str, c: &mut Container) {
        c.push(format!("{prefix}.shape"), &[3], vec![self.inputs as f64, self.outputs as f64, f64::from(self.activation.code())]);
        c.push(format!("{prefix}.weights"), &[self.outputs, self.inputs], self.weights.clone());
        c.push(format!("{prefix}.bias"), &[self.outputs], self.bias.clone());
    }

    fn read(prefix: &str, c: &Container) -> Result<Self> {
        let s = scalars(c, &format!("{prefix}.shape"), 3)?;
        let (inputs, outputs) = (s[0] as usize, s[1] as usize);
        let activation = Activation::from_code(s[2] as u8).ok_or_else(|| Error::Container("bad activation".into()))?;
        Ok(Self {
            inputs,
            outputs,
            weights: scalars(c, &format!("{prefix}.weights"), inputs * outputs)?,
            bias: scalars(c, &format!("{prefix}.bias"), outputs)?,
            activation,
        })
    }
}

impl ContainerCodec for LstmLayer {
    fn write(&self, prefix: &str, c: &mut Container) {
        let cols = self.input_size + self.hidden_size;
        c.push(format!("{prefix}.shape"), &[2], vec![self.input_size as f64, self.hidden_size as f64]);
        c.push(format!("{prefix}.weights"), &[4 * self.hidden_size, cols], self.weights.clone());
        c.push(format!("{prefix}.bias"), &[4 * self.hidden_size], self.bias.clone());
    }

    fn read(prefix: &str, c: &Container) -> Result<Self> {
        let s = scalars(c, &format!("{prefix}.shape"), 2)?;
        let (input_size, hidden_size) = (s[0] as usize, s[1] as usize);
        Ok(Self {
            input_size,
            hidden_size,
            weights: scalars(c, &format!("{prefix}.weights"), 4 * hidden_size * (input_size + hidden_size))?,
            bias: scalars(c, &format!("{prefix}.bias"), 4 * hidden_size)?,
        })
    }
}

impl ContainerCodec for Seq2SeqAutoencoder {
    fn write(&self, prefix: &str, c: &mut Container) {
        let k = &self.config;
        c.push(
            format!("{prefix}.config"),
            &[6],
            [k.input_dim, k.input_steps, k.output_dim, k.window_len, k.latent_dim, k.hidden_size]
                .iter()
                .map(|&v| v as f64)
                .collect(),
        );
        self.encoder.write(&format!("{prefix}.encoder"), c);
        self.decoder.write(&format!("{prefix}.decoder"), c);
        self.head.write(&format!("{prefix}.head"), c);
    }

    fn read(prefix: &str, c: &Container) -> Result<Self> {
        let v = scalars(c, &format!("{prefix}.config"), 6)?;
        let config = Seq2SeqConfig {
            input_dim: v[0] as usize,
            input_steps: v[1] as usize,
            output_dim: v[2] as usize,
            window_len: v[3] as usize,
            latent_dim: v[4] as usize,
            hidden_size: v[5] as usize,
        };
        let m = Self {
            config,
            encoder: LstmLayer::read(&format!("{prefix}.encoder"), c)?,
            decoder: LstmLayer::read(&format!("{prefix}.decoder"), c)?,
            head: DenseLayer::read(&format!("{prefix}.head"), c)?,
        };
        if m.encoder.input_size != config.input_dim
            || m.encoder.hidden_size != config.latent_dim
            || m.decoder.input_size != config.latent_dim
            || m.decoder.hidden_size != config.hidden_size
            || m.head.inputs != config.hidden_size
            || m.head.outputs != config.output_dim
        {
            return Err(Error::Container(format!("{prefix}: layer shapes disagree with config")));
        }
        Ok(m)
    }
}

impl ContainerCodec for Mlp {
    fn write(&self, prefix: &str, c: &mut Container) {
        c.push(format!("{prefix}.depth"), &[1], vec![self.layers.len() as f64]);
        for (i, l) in self.layers.iter().enumerate() {
            l.write(&format!("{prefix}.layer{i}"), c);
        }
    }

    fn read(prefix: &str, c: &Container) -> Result<Self> {
        let depth = scalars(c, &format!("{prefix}.depth"), 1)?[0] as usize;
        let layers = (0..depth)
            .map(|i| DenseLayer::read(&format!("{prefix}.layer{i}"), c))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { layers })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{self, Stream};
    use proptest::prelude::*;

    fn ae() -> Seq2SeqAutoencoder {
        let cfg = Seq2SeqConfig { input_dim: 3, input_steps: 4, output_dim: 3, window_len: 4, latent_dim: 2, hidden_size: 5 };
        Seq2SeqAutoencoder::new(cfg, &mut rng::stream(1, Stream::Training))
    }

    #[test]
    fn seq2seq_survives_a_round_trip() {
        let m = ae();
        let bytes = m.to_container().encode();
        assert_eq!(&bytes[..4], b"RSTC");
        let back = Seq2SeqAutoencoder::from_container(&Container::decode(&bytes).unwrap()).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn corrupted_bytes_fail_the_checksum() {
        let mut bytes = ae().to_container().encode();
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0x40;
        assert!(matches!(Container::decode(&bytes), Err(Error::Container(_))));
    }

    #[test]
    fn unknown_version_is_rejected() {
        let mut c = Container::new();
        c.push("x", &[1], vec![1.0]);
        let mut bytes = c.encode();
        bytes[4] = 9;
        let n = bytes.len() - 4;
        let crc = crc32fast::hash(&bytes[..n]);
        bytes[n..].copy_from_slice(&crc.to_le_bytes());
        assert!(Container::decode(&bytes).unwrap_err().to_string().contains("version"));
    }

    proptest! {
        #[test]
        fn arbitrary_tensors_round_trip(
            data in proptest::collection::vec(proptest::num::f64::ANY, 0..64),
            key in "[a-z]{1,8}", val in ".{0,20}",
        ) {
            let mut c = Container::new();
            c.set_meta(&key, val.clone());
            c.push("t", &[data.len()], data.clone());
            let back = Container::decode(&c.encode()).unwrap();
            prop_assert_eq!(back.meta(&key).unwrap(), val.as_str());
            let t = back.tensor("t").unwrap();
            prop_assert_eq!(t.data.len(), data.len());
            for (a, b) in t.data.iter().zip(&data) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }

        #[test]
        fn garbage_never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..200)) {
            let _ = Container::decode(&bytes);
        }
    }
}
