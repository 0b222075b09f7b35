//! EMBX: a single-file container for layerwise embedding tensors.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! 0..4      b"EMBX"
//! 4         format version (0x01)
//! 5..13     u64 header length H
//! 13..13+H  UTF-8 JSON header
//! 13+H..    f32 data, row-major (num_layers, num_points, embed_dim)
//! ```
//!
//! The header carries every label scheme for the points, so one file fully
//! describes one experimental condition.

mod dataset;

pub use dataset::{load_labeled_dataset, LabeledTextDataset, Record, Split};

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"EMBX";
pub const FORMAT_VERSION: u8 = 1;
/// Bytes before the JSON header: magic, version, header length.
pub const PREAMBLE_LEN: usize = 4 + 1 + 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DType {
    F32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingKind {
    SentenceMean,
    LastToken,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Raw,
    Instruction,
    Demonstrations,
    SoftPrompt,
}

impl Condition {
    pub fn as_str(&self) -> &'static str {
        match self {
            Condition::Raw => "raw",
            Condition::Instruction => "instruction",
            Condition::Demonstrations => "demonstrations",
            Condition::SoftPrompt => "soft_prompt",
        }
    }

    /// Keys that must be present in `condition_params` for this condition.
    pub fn required_params(&self) -> &'static [&'static str] {
        match self {
            Condition::Raw | Condition::Instruction => &[],
            Condition::Demonstrations => &["num_demonstrations", "demo_seed"],
            Condition::SoftPrompt => &["soft_prompt_length", "checkpoint_index"],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shape {
    pub num_layers: usize,
    pub num_points: usize,
    pub embed_dim: usize,
}

impl Shape {
    pub fn new(num_layers: usize, num_points: usize, embed_dim: usize) -> Self {
        Shape {
            num_layers,
            num_points,
            embed_dim,
        }
    }

    pub fn num_values(&self) -> usize {
        self.num_layers * self.num_points * self.embed_dim
    }

    pub fn data_bytes(&self) -> u64 {
        self.num_values() as u64 * 4
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbxHeader {
    pub format_version: u32,
    pub dtype: DType,
    pub shape: Shape,
    pub embedding_kind: EmbeddingKind,
    pub condition: Condition,
    #[serde(default)]
    pub condition_params: BTreeMap<String, serde_json::Value>,
    pub label_schemes: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub model_name: String,
    #[serde(default)]
    pub layer_index_base: i64,
}

impl EmbxHeader {
    /// A version-1 f32 header with no parameters and no label schemes.
    pub fn new(shape: Shape, embedding_kind: EmbeddingKind, condition: Condition) -> Self {
        EmbxHeader {
            format_version: FORMAT_VERSION as u32,
            dtype: DType::F32,
            shape,
            embedding_kind,
            condition,
            condition_params: BTreeMap::new(),
            label_schemes: BTreeMap::new(),
            model_name: String::new(),
            layer_index_base: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION as u32 {
            return Err(Error::validation(
                "format_version",
                format!("unsupported version {}", self.format_version),
            ));
        }
        let Shape {
            num_layers,
            num_points,
            embed_dim,
        } = self.shape;
        for (name, v) in [
            ("shape.num_layers", num_layers),
            ("shape.num_points", num_points),
            ("shape.embed_dim", embed_dim),
        ] {
            if v == 0 {
                return Err(Error::validation(name, "must be >= 1"));
            }
        }
        for (scheme, labels) in &self.label_schemes {
            if labels.len() != num_points {
                return Err(Error::validation(
                    format!("label_schemes[{scheme}]"),
                    format!(
                        "length mismatch: expected {num_points} labels, got {}",
                        labels.len()
                    ),
                ));
            }
        }
        for key in self.condition.required_params() {
            if !self.condition_params.contains_key(*key) {
                return Err(Error::validation(
                    format!("condition_params.{key}"),
                    format!("required for condition {}", self.condition.as_str()),
                ));
            }
        }
        Ok(())
    }

    pub fn labels(&self, scheme: &str) -> Result<&[String]> {
        self.label_schemes
            .get(scheme)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::Key(format!("label scheme {scheme:?} not in header")))
    }

    /// Human-readable condition descriptor, e.g. `demonstrations(demo_seed=0,num_demonstrations=5)`.
    ///
    /// Parameters appear in key order; `task` is left out because it is
    /// reported separately as the coherence tag.
    pub fn condition_descriptor(&self) -> String {
        let params: Vec<String> = self
            .condition_params
            .iter()
            .filter(|(k, _)| k.as_str() != "task")
            .map(|(k, v)| match v {
                serde_json::Value::String(s) => format!("{k}={s}"),
                other => format!("{k}={other}"),
            })
            .collect();
        if params.is_empty() {
            self.condition.as_str().to_string()
        } else {
            format!("{}({})", self.condition.as_str(), params.join(","))
        }
    }
}

/// Header plus row-major `(num_layers, num_points, embed_dim)` data.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTensor {
    pub header: EmbxHeader,
    pub data: Vec<f32>,
}

impl EmbeddingTensor {
    pub fn new(header: EmbxHeader, data: Vec<f32>) -> Result<Self> {
        let tensor = EmbeddingTensor { header, data };
        tensor.validate()?;
        Ok(tensor)
    }

    pub fn validate(&self) -> Result<()> {
        self.header.validate()?;
        let expected = self.header.shape.num_values();
        if self.data.len() != expected {
            return Err(Error::validation(
                "data",
                format!("expected {expected} values, got {}", self.data.len()),
            ));
        }
        if let Some(index) = first_non_finite(&self.data) {
            return Err(Error::Data {
                index,
                message: format!("non-finite value {}", self.data[index]),
            });
        }
        Ok(())
    }

    pub fn shape(&self) -> Shape {
        self.header.shape
    }

    /// All points of one layer as a flat `N * D` slice.
    pub fn layer(&self, layer: usize) -> Result<&[f32]> {
        let shape = self.header.shape;
        if layer >= shape.num_layers {
            return Err(Error::Index {
                index: layer,
                len: shape.num_layers,
            });
        }
        let stride = shape.num_points * shape.embed_dim;
        Ok(&self.data[layer * stride..(layer + 1) * stride])
    }

    pub fn point(&self, layer: usize, index: usize) -> Result<&[f32]> {
        let d = self.header.shape.embed_dim;
        let n = self.header.shape.num_points;
        if index >= n {
            return Err(Error::Index { index, len: n });
        }
        Ok(&self.layer(layer)?[index * d..(index + 1) * d])
    }
}

fn first_non_finite(data: &[f32]) -> Option<usize> {
    data.iter().position(|v| !v.is_finite())
}

/// Serializes `tensor` and returns the number of bytes written.
pub fn write_embx<W: Write>(tensor: &EmbeddingTensor, mut sink: W) -> Result<u64> {
    tensor.validate()?;
    let header = serde_json::to_vec(&tensor.header)?;
    sink.write_all(MAGIC)?;
    sink.write_all(&[FORMAT_VERSION])?;
    sink.write_all(&(header.len() as u64).to_le_bytes())?;
    sink.write_all(&header)?;

    let mut buf = Vec::with_capacity(tensor.data.len().min(1 << 16) * 4);
    for chunk in tensor.data.chunks(1 << 16) {
        buf.clear();
        for v in chunk {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        sink.write_all(&buf)?;
    }
    sink.flush()?;
    Ok(PREAMBLE_LEN as u64 + header.len() as u64 + tensor.header.shape.data_bytes())
}

/// Parses the preamble and JSON header only, leaving `source` positioned at
/// the start of the data section.
pub fn read_header<R: Read>(source: &mut R) -> Result<EmbxHeader> {
    let mut preamble = [0u8; PREAMBLE_LEN];
    read_fully(source, &mut preamble).map_err(|got| {
        if got >= 4 && &preamble[..4] != MAGIC {
            bad_magic(&preamble[..4])
        } else {
            Error::Format(format!("truncated preamble: {got} of {PREAMBLE_LEN} bytes"))
        }
    })?;
    if &preamble[..4] != MAGIC {
        return Err(bad_magic(&preamble[..4]));
    }
    if preamble[4] != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported format version {}",
            preamble[4]
        )));
    }
    let header_len = u64::from_le_bytes(preamble[5..13].try_into().expect("8 bytes"));
    // Refuse absurd lengths before allocating.
    if header_len > (1 << 32) {
        return Err(Error::Format(format!(
            "header length {header_len} too large"
        )));
    }
    let mut header_bytes = vec![0u8; header_len as usize];
    read_fully(source, &mut header_bytes)
        .map_err(|got| Error::Format(format!("truncated header: {got} of {header_len} bytes")))?;
    let text = std::str::from_utf8(&header_bytes)
        .map_err(|e| Error::Format(format!("header is not UTF-8: {e}")))?;
    let header: EmbxHeader =
        serde_json::from_str(text).map_err(|e| Error::Format(format!("header JSON: {e}")))?;
    if header.format_version != preamble[4] as u32 {
        return Err(Error::Format(format!(
            "header format_version {} disagrees with preamble version {}",
            header.format_version, preamble[4]
        )));
    }
    header.validate()?;
    Ok(header)
}

pub fn read_embx<R: Read>(mut source: R) -> Result<EmbeddingTensor> {
    let header = read_header(&mut source)?;
    let expected = header.shape.data_bytes();
    let mut bytes = Vec::with_capacity(expected as usize);
    let actual = (&mut source).take(expected + 1).read_to_end(&mut bytes)? as u64;
    if actual != expected {
        // Over-long payloads are reported as at least expected + 1 bytes.
        return Err(Error::Length { expected, actual });
    }
    let data: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    if let Some(index) = first_non_finite(&data) {
        return Err(Error::Data {
            index,
            message: format!("non-finite value {}", data[index]),
        });
    }
    Ok(EmbeddingTensor { header, data })
}

pub fn write_embx_file(tensor: &EmbeddingTensor, path: impl AsRef<Path>) -> Result<u64> {
    let file = File::create(path)?;
    write_embx(tensor, BufWriter::new(file))
}

pub fn read_embx_file(path: impl AsRef<Path>) -> Result<EmbeddingTensor> {
    read_embx(BufReader::new(File::open(path)?))
}

fn bad_magic(found: &[u8]) -> Error {
    Error::Format(format!(
        "bad magic {:?}, expected \"EMBX\"",
        String::from_utf8_lossy(found)
    ))
}

/// Like `read_exact`, but reports how many bytes were available on failure.
fn read_fully<R: Read>(source: &mut R, buf: &mut [u8]) -> std::result::Result<(), usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match source.read(&mut buf[filled..]) {
            Ok(0) => return Err(filled),
            Ok(n) => filled += n,
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => continue,
            Err(_) => return Err(filled),
        }
    }
    Ok(())
}
