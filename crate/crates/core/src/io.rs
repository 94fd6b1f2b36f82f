//! Weight files and spec files.
//!
//! Weight file layout, all little-endian:
//!
//! ```text
//! offset 0   "CWCW"
//! offset 4   u16 version = 1
//! offset 6   u64 n
//! offset 14  n × f32
//! ```
//!
//! Spec files are UTF-8 `name = value` lines. `#` starts a comment line.
//! Thresholds are written with Rust's shortest round-trip float formatting,
//! so they parse back to the same binary64 values.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::codec::{CodeParams, CodecError};
use crate::stats::ThresholdPair;
use crate::watermark::{BlockLayout, EmbedSpec, WeightVector};

pub const WEIGHT_MAGIC: &[u8; 4] = b"CWCW";
pub const WEIGHT_VERSION: u16 = 1;
pub const WEIGHT_HEADER_LEN: usize = 14;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("bad magic {found:?}, expected \"CWCW\"")]
    BadMagic { found: [u8; 4] },
    #[error("unsupported weight file version {0}, expected 1")]
    Version(u16),
    #[error("truncated weight file: header declares {declared} values, payload holds {available}")]
    Truncated { declared: u64, available: u64 },
    #[error("weight file header is truncated ({0} bytes)")]
    TruncatedHeader(usize),
    #[error("weight file has {0} trailing bytes after the declared payload")]
    TrailingBytes(usize),
    #[error("weight file declares no values")]
    Empty,
    #[error("weight {index} is not finite")]
    NonFinite { index: usize },
    #[error("spec line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("spec is missing field '{0}'")]
    MissingField(String),
    #[error("spec field '{field}' appears twice (lines {first} and {second})")]
    DuplicateField {
        field: String,
        first: usize,
        second: usize,
    },
    #[error("unknown spec field '{0}'")]
    UnknownField(String),
    #[error("spec field '{field}': {message}")]
    InvalidValue { field: String, message: String },
    #[error("position {position} in block {block} is out of range for n = {n}")]
    PositionOutOfRange {
        block: usize,
        position: usize,
        n: usize,
    },
    #[error("spec is inconsistent: {0}")]
    Inconsistent(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Serializes a weight vector to the weight-file byte layout.
pub fn encode_weights(weights: &[f32]) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(WEIGHT_HEADER_LEN + 4 * weights.len());
    bytes.extend_from_slice(WEIGHT_MAGIC);
    bytes.extend_from_slice(&WEIGHT_VERSION.to_le_bytes());
    bytes.extend_from_slice(&(weights.len() as u64).to_le_bytes());
    for w in weights {
        bytes.extend_from_slice(&w.to_le_bytes());
    }
    bytes
}

/// Parses the weight-file byte layout.
pub fn decode_weights(bytes: &[u8]) -> Result<WeightVector, IoError> {
    if bytes.len() < 4 {
        return Err(IoError::TruncatedHeader(bytes.len()));
    }
    let magic: [u8; 4] = bytes[..4].try_into().expect("length checked");
    if &magic != WEIGHT_MAGIC {
        return Err(IoError::BadMagic { found: magic });
    }
    if bytes.len() < WEIGHT_HEADER_LEN {
        return Err(IoError::TruncatedHeader(bytes.len()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != WEIGHT_VERSION {
        return Err(IoError::Version(version));
    }
    let declared = u64::from_le_bytes(bytes[6..14].try_into().expect("length checked"));
    let payload = &bytes[WEIGHT_HEADER_LEN..];
    let available = (payload.len() / 4) as u64;
    if declared > available {
        return Err(IoError::Truncated {
            declared,
            available,
        });
    }
    let expected = declared as usize * 4;
    if payload.len() > expected {
        return Err(IoError::TrailingBytes(payload.len() - expected));
    }
    if declared == 0 {
        return Err(IoError::Empty);
    }
    let values: Vec<f32> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("chunk of 4")))
        .collect();
    if let Some(index) = values.iter().position(|w| !w.is_finite()) {
        return Err(IoError::NonFinite { index });
    }
    Ok(WeightVector::new(values).expect("checked non-empty and finite"))
}

pub fn read_weights(path: impl AsRef<Path>) -> Result<WeightVector, IoError> {
    let path = path.as_ref();
    decode_weights(&fs::read(path).map_err(io_err(path))?)
}

pub fn write_weights(path: impl AsRef<Path>, weights: &[f32]) -> Result<(), IoError> {
    write_atomic(path.as_ref(), &encode_weights(weights))
}

/// Writes to a sibling temp file, syncs it and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(io_err(path))
}

/// Everything extraction needs, plus the design context it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecFile {
    pub layout: BlockLayout,
    /// Number of weights in the model the spec was generated for.
    pub n: usize,
    pub sigma: Option<f64>,
    pub rate: Option<f64>,
}

impl SpecFile {
    pub fn single(spec: EmbedSpec, n: usize) -> Self {
        Self {
            layout: spec.into(),
            n,
            sigma: None,
            rate: None,
        }
    }

    /// The lone block's spec, if the layout has exactly one block.
    pub fn single_block(&self) -> Option<EmbedSpec> {
        match self.layout.blocks.len() {
            1 => self.layout.block_specs().pop(),
            _ => None,
        }
    }

    pub fn to_text(&self) -> String {
        let l = &self.layout;
        let opt = |v: Option<f64>| v.map_or_else(|| "none".to_string(), |x| x.to_string());
        let mut s = String::from("# cwcmark spec v1\n");
        s += &format!("key = {}\n", l.key);
        s += &format!("k = {}\n", l.params.k());
        s += &format!("alpha = {}\n", l.params.alpha());
        s += &format!("L = {}\n", l.params.len());
        s += &format!("t0 = {}\n", l.thresholds.t0());
        s += &format!("t1 = {}\n", l.thresholds.t1());
        s += &format!("sigma = {}\n", opt(self.sigma));
        s += &format!("rate = {}\n", opt(self.rate));
        s += &format!("n = {}\n", self.n);
        s += &format!("message_bits = {}\n", l.message_bits);
        s += &format!("blocks = {}\n", l.blocks.len());
        for (j, positions) in l.blocks.iter().enumerate() {
            let list: Vec<String> = positions.iter().map(|p| p.to_string()).collect();
            s += &format!("positions.{j} = {}\n", list.join(","));
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, IoError> {
        let mut fields: HashMap<String, (usize, String)> = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (name, value) = line.split_once('=').ok_or_else(|| IoError::Syntax {
                line: line_no,
                message: "expected 'name = value'".into(),
            })?;
            let name = name.trim().to_string();
            if !is_known_field(&name) {
                return Err(IoError::UnknownField(name));
            }
            if let Some((first, _)) = fields.get(&name) {
                return Err(IoError::DuplicateField {
                    field: name,
                    first: *first,
                    second: line_no,
                });
            }
            fields.insert(name, (line_no, value.trim().to_string()));
        }
        let mut take = |name: &str| -> Result<String, IoError> {
            fields
                .remove(name)
                .map(|(_, v)| v)
                .ok_or_else(|| IoError::MissingField(name.into()))
        };

        let key: u64 = parse_field("key", &take("key")?)?;
        let k: usize = parse_field("k", &take("k")?)?;
        let alpha: usize = parse_field("alpha", &take("alpha")?)?;
        let len: usize = parse_field("L", &take("L")?)?;
        let t0: f64 = parse_field("t0", &take("t0")?)?;
        let t1: f64 = parse_field("t1", &take("t1")?)?;
        let sigma = parse_optional("sigma", &take("sigma")?)?;
        let rate = parse_optional("rate", &take("rate")?)?;
        let n: usize = parse_field("n", &take("n")?)?;
        let message_bits: usize = parse_field("message_bits", &take("message_bits")?)?;
        let block_count: usize = parse_field("blocks", &take("blocks")?)?;

        let params =
            CodeParams::new(k, alpha, len).map_err(|e: CodecError| IoError::InvalidValue {
                field: "k/alpha/L".into(),
                message: e.to_string(),
            })?;
        let thresholds = ThresholdPair::new(t0, t1).map_err(|e| IoError::InvalidValue {
            field: "t0/t1".into(),
            message: e.to_string(),
        })?;
        if n == 0 {
            return Err(IoError::InvalidValue {
                field: "n".into(),
                message: "must be at least 1".into(),
            });
        }

        let mut blocks = Vec::with_capacity(block_count);
        for j in 0..block_count {
            let name = format!("positions.{j}");
            let raw = take(&name)?;
            let positions = raw
                .split(',')
                .map(|p| parse_field::<usize>(&name, p.trim()))
                .collect::<Result<Vec<_>, _>>()?;
            if let Some(&position) = positions.iter().find(|&&p| p >= n) {
                return Err(IoError::PositionOutOfRange {
                    block: j,
                    position,
                    n,
                });
            }
            blocks.push(positions);
        }
        if let Some(extra) = fields.keys().next() {
            return Err(IoError::Inconsistent(format!(
                "field '{extra}' does not match blocks = {block_count}"
            )));
        }
        let layout = BlockLayout {
            key,
            params,
            thresholds,
            message_bits,
            blocks,
        };
        layout
            .validate(n)
            .map_err(|e| IoError::Inconsistent(e.to_string()))?;
        Ok(Self {
            layout,
            n,
            sigma,
            rate,
        })
    }
}

fn is_known_field(name: &str) -> bool {
    const FIXED: [&str; 11] = [
        "key",
        "k",
        "alpha",
        "L",
        "t0",
        "t1",
        "sigma",
        "rate",
        "n",
        "message_bits",
        "blocks",
    ];
    FIXED.contains(&name)
        || name
            .strip_prefix("positions.")
            .is_some_and(|j| !j.is_empty() && j.bytes().all(|b| b.is_ascii_digit()))
}

fn parse_field<T: std::str::FromStr>(field: &str, value: &str) -> Result<T, IoError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| IoError::InvalidValue {
        field: field.into(),
        message: format!("'{value}': {e}"),
    })
}

fn parse_optional(field: &str, value: &str) -> Result<Option<f64>, IoError> {
    if value == "none" {
        return Ok(None);
    }
    let x: f64 = parse_field(field, value)?;
    if !x.is_finite() {
        return Err(IoError::InvalidValue {
            field: field.into(),
            message: "must be finite".into(),
        });
    }
    Ok(Some(x))
}

pub fn read_spec(path: impl AsRef<Path>) -> Result<SpecFile, IoError> {
    let path = path.as_ref();
    SpecFile::parse(&fs::read_to_string(path).map_err(io_err(path))?)
}

pub fn write_spec(path: impl AsRef<Path>, spec: &SpecFile) -> Result<(), IoError> {
    write_atomic(path.as_ref(), spec.to_text().as_bytes())
}
