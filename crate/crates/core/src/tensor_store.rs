//! Named-tensor container and the line-oriented calibration stats format.
//!
//! Container layout:
//!
//! ```text
//! [u64 LE: header length N][N bytes UTF-8 JSON header][payload]
//! ```
//!
//! The header maps each tensor name to `{"dtype", "shape", "data_offsets"}`,
//! with offsets relative to the start of the payload, plus an optional
//! `"__metadata__"` string map. Payload data is row-major little-endian. The
//! header is padded with spaces to a multiple of 8 bytes. Tensors are laid out
//! in name order so that identical contents always serialize to identical
//! bytes.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;

use serde::de::{MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};

use crate::calib_stats::ChannelStats;
use crate::error::{Error, Result};
use crate::matrix::{Matrix, PruneMask};

const METADATA_KEY: &str = "__metadata__";
/// Tolerance for `E[x²] ≥ mean²` when validating stats records.
const SECOND_MOMENT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DType {
    F32,
    U8,
}

impl DType {
    pub fn size(self) -> usize {
        match self {
            DType::F32 => 4,
            DType::U8 => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DType::F32 => "F32",
            DType::U8 => "U8",
        }
    }
}

/// One stored tensor: dtype, shape and raw little-endian bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tensor {
    dtype: DType,
    shape: Vec<usize>,
    data: Vec<u8>,
}

impl Tensor {
    pub fn new(dtype: DType, shape: Vec<usize>, data: Vec<u8>) -> Result<Self> {
        let expected = shape.iter().product::<usize>() * dtype.size();
        if data.len() != expected {
            return Err(Error::Format(format!(
                "shape {shape:?} of {} needs {expected} bytes, got {}",
                dtype.name(),
                data.len()
            )));
        }
        Ok(Self { dtype, shape, data })
    }

    /// Encodes a weight matrix as a rank-2 `F32` tensor. Values are rounded to
    /// the nearest `f32`; anything non-finite before or after rounding is
    /// rejected.
    pub fn from_matrix(m: &Matrix) -> Result<Self> {
        let mut data = Vec::with_capacity(m.as_slice().len() * 4);
        for (idx, &v) in m.as_slice().iter().enumerate() {
            let f = v as f32;
            if !v.is_finite() || !f.is_finite() {
                return Err(Error::NonFinite(idx));
            }
            data.extend_from_slice(&f.to_le_bytes());
        }
        Ok(Self {
            dtype: DType::F32,
            shape: vec![m.rows(), m.cols()],
            data,
        })
    }

    pub fn from_mask(mask: &PruneMask) -> Self {
        Self {
            dtype: DType::U8,
            shape: vec![mask.rows(), mask.cols()],
            data: mask.as_bytes().to_vec(),
        }
    }

    pub fn from_f32(shape: Vec<usize>, values: &[f32]) -> Result<Self> {
        let data = values.iter().flat_map(|v| v.to_le_bytes()).collect();
        Self::new(DType::F32, shape, data)
    }

    pub fn dtype(&self) -> DType {
        self.dtype
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn bytes(&self) -> &[u8] {
        &self.data
    }

    /// Decodes a rank-2 `F32` tensor. `name` is only used in error messages.
    pub fn to_matrix(&self, name: &str) -> Result<Matrix> {
        self.expect_rank2(name, DType::F32)?;
        let values = self
            .data
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        Matrix::from_vec(self.shape[0], self.shape[1], values)
    }

    pub fn to_mask(&self, name: &str) -> Result<PruneMask> {
        self.expect_rank2(name, DType::U8)?;
        PruneMask::from_bits(self.shape[0], self.shape[1], self.data.clone())
    }

    pub fn is_rank2_f32(&self) -> bool {
        self.dtype == DType::F32 && self.shape.len() == 2
    }

    fn expect_rank2(&self, name: &str, dtype: DType) -> Result<()> {
        if self.dtype != dtype {
            return Err(Error::DtypeMismatch {
                name: name.to_string(),
                expected: dtype.name(),
                found: self.dtype.name(),
            });
        }
        if self.shape.len() != 2 {
            return Err(Error::RankMismatch {
                name: name.to_string(),
                expected: 2,
                found: self.shape.len(),
            });
        }
        Ok(())
    }
}

/// An in-memory tensor container with unique, name-ordered entries.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TensorFile {
    tensors: BTreeMap<String, Tensor>,
    metadata: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
struct HeaderEntry {
    dtype: DType,
    shape: Vec<usize>,
    data_offsets: [usize; 2],
}

enum HeaderValue {
    Tensor(HeaderEntry),
    Metadata(BTreeMap<String, String>),
}

/// Header map that rejects duplicate names instead of keeping the last one.
struct Header(Vec<(String, HeaderValue)>);

impl<'de> Deserialize<'de> for Header {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        struct HeaderVisitor;

        impl<'de> Visitor<'de> for HeaderVisitor {
            type Value = Header;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a map of tensor names to entries")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> std::result::Result<Header, A::Error> {
                let mut seen = std::collections::HashSet::new();
                let mut out = Vec::new();
                while let Some(key) = map.next_key::<String>()? {
                    if !seen.insert(key.clone()) {
                        return Err(serde::de::Error::custom(format!("duplicate tensor name `{key}`")));
                    }
                    let value = if key == METADATA_KEY {
                        HeaderValue::Metadata(map.next_value()?)
                    } else {
                        HeaderValue::Tensor(map.next_value()?)
                    };
                    out.push((key, value));
                }
                Ok(Header(out))
            }
        }

        de.deserialize_map(HeaderVisitor)
    }
}

impl TensorFile {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, tensor: Tensor) -> Result<()> {
        let name = name.into();
        if name == METADATA_KEY {
            return Err(Error::Format(format!("`{METADATA_KEY}` is reserved")));
        }
        self.tensors.insert(name, tensor);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&Tensor> {
        self.tensors
            .get(name)
            .ok_or_else(|| Error::MissingTensor(name.to_string()))
    }

    pub fn matrix(&self, name: &str) -> Result<Matrix> {
        self.get(name)?.to_matrix(name)
    }

    pub fn mask(&self, name: &str) -> Result<PruneMask> {
        self.get(name)?.to_mask(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.tensors.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.tensors.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    pub fn set_metadata(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.metadata.insert(key.into(), value.into());
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut header = serde_json::Map::new();
        if !self.metadata.is_empty() {
            header.insert(
                METADATA_KEY.to_string(),
                serde_json::to_value(&self.metadata).expect("string map serializes"),
            );
        }
        let mut offset = 0;
        for (name, t) in &self.tensors {
            let entry = HeaderEntry {
                dtype: t.dtype,
                shape: t.shape.clone(),
                data_offsets: [offset, offset + t.data.len()],
            };
            offset += t.data.len();
            header.insert(
                name.clone(),
                serde_json::to_value(entry).expect("entry serializes"),
            );
        }
        let mut json = serde_json::to_vec(&header).expect("header serializes");
        while !json.len().is_multiple_of(8) {
            json.push(b' ');
        }
        let mut out = Vec::with_capacity(8 + json.len() + offset);
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        for t in self.tensors.values() {
            out.extend_from_slice(&t.data);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 8 {
            return Err(Error::Format("file shorter than the length prefix".into()));
        }
        let n = u64::from_le_bytes(bytes[..8].try_into().expect("8 bytes")) as usize;
        let header_end = 8usize
            .checked_add(n)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| Error::Format(format!("header length {n} exceeds file size")))?;
        let header_text = std::str::from_utf8(&bytes[8..header_end])
            .map_err(|e| Error::Format(format!("header is not UTF-8: {e}")))?;
        let header: Header = serde_json::from_str(header_text.trim_end())
            .map_err(|e| Error::Format(format!("bad header: {e}")))?;
        let payload = &bytes[header_end..];

        let mut file = TensorFile::new();
        for (name, value) in header.0 {
            match value {
                HeaderValue::Metadata(m) => file.metadata = m,
                HeaderValue::Tensor(e) => {
                    let [start, end] = e.data_offsets;
                    if start > end || end > payload.len() {
                        return Err(Error::Format(format!(
                            "tensor `{name}` range {start}..{end} outside payload of {} bytes",
                            payload.len()
                        )));
                    }
                    let tensor = Tensor::new(e.dtype, e.shape, payload[start..end].to_vec())
                        .map_err(|err| Error::Format(format!("tensor `{name}`: {err}")))?;
                    if tensor.dtype == DType::U8 && name.ends_with(".mask") {
                        if let Some(b) = tensor.data.iter().find(|&&b| b > 1) {
                            return Err(Error::Format(format!("mask `{name}` holds value {b}")));
                        }
                    }
                    file.tensors.insert(name, tensor);
                }
            }
        }
        Ok(file)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }
}

/// Reads a rank-2 float tensor by name.
pub fn read_tensor(path: impl AsRef<Path>, name: &str) -> Result<Matrix> {
    TensorFile::read(path)?.matrix(name)
}

/// Stores `matrix` under `name`, creating the file or replacing an existing
/// entry of the same name.
pub fn write_tensor(path: impl AsRef<Path>, name: &str, matrix: &Matrix) -> Result<()> {
    let path = path.as_ref();
    let tensor = Tensor::from_matrix(matrix)?;
    let mut file = if path.exists() {
        TensorFile::read(path)?
    } else {
        TensorFile::new()
    };
    file.insert(name, tensor)?;
    file.write(path)
}

/// Calibration statistics for a set of layers, keyed by layer name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StatsFile {
    layers: BTreeMap<String, ChannelStats>,
}

impl StatsFile {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, layer: impl Into<String>, stats: ChannelStats) {
        self.layers.insert(layer.into(), stats);
    }

    pub fn get(&self, layer: &str) -> Option<&ChannelStats> {
        self.layers.get(layer)
    }

    pub fn layers(&self) -> impl Iterator<Item = (&str, &ChannelStats)> {
        self.layers.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Renders one `layer` header per section followed by one
    /// `channel <idx> count <n> mean <f> m2 <f>` record per channel, where
    /// `m2` is the raw second moment `E[x²]`.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# calibration statistics: m2 is the second moment E[x^2]\n");
        for (name, s) in &self.layers {
            let _ = writeln!(out, "layer {name} d_in {}", s.d_in());
            let n = s.count().max(1) as f64;
            for (j, (&mean, &m2)) in s.mean().iter().zip(s.m2()).enumerate() {
                let second = m2 / n + mean * mean;
                let _ = writeln!(out, "channel {j} count {} mean {mean:e} m2 {second:e}", s.count());
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut file = StatsFile::new();
        let mut current: Option<Section> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line_no = lineno + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: String| Error::StatsFormat { line: line_no, msg };
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields.as_slice() {
                ["layer", name, "d_in", d] => {
                    if let Some(sec) = current.take() {
                        sec.finish(&mut file)?;
                    }
                    let d_in = d.parse().map_err(|_| bad(format!("bad d_in `{d}`")))?;
                    if file.layers.contains_key(*name) {
                        return Err(bad(format!("duplicate layer `{name}`")));
                    }
                    current = Some(Section::new(name, d_in, line_no));
                }
                ["channel", idx, "count", n, "mean", mean, "m2", m2] => {
                    let sec = current
                        .as_mut()
                        .ok_or_else(|| bad("channel record before any layer header".into()))?;
                    let idx: usize = idx.parse().map_err(|_| bad(format!("bad index `{idx}`")))?;
                    let n: u64 = n.parse().map_err(|_| bad(format!("bad count `{n}`")))?;
                    let mean: f64 = mean.parse().map_err(|_| bad(format!("bad mean `{mean}`")))?;
                    let m2: f64 = m2.parse().map_err(|_| bad(format!("bad m2 `{m2}`")))?;
                    sec.record(idx, n, mean, m2).map_err(bad)?;
                }
                _ => return Err(bad(format!("unrecognized record `{line}`"))),
            }
        }
        if let Some(sec) = current {
            sec.finish(&mut file)?;
        }
        Ok(file)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

struct Section {
    name: String,
    header_line: usize,
    count: Option<u64>,
    records: Vec<Option<(f64, f64)>>,
}

impl Section {
    fn new(name: &str, d_in: usize, header_line: usize) -> Self {
        Self {
            name: name.to_string(),
            header_line,
            count: None,
            records: vec![None; d_in],
        }
    }

    fn record(&mut self, idx: usize, n: u64, mean: f64, second: f64) -> std::result::Result<(), String> {
        if idx >= self.records.len() {
            return Err(format!(
                "channel {idx} out of range for d_in {}",
                self.records.len()
            ));
        }
        if self.records[idx].is_some() {
            return Err(format!("channel {idx} listed twice"));
        }
        if n == 0 {
            return Err(format!("channel {idx} has count 0"));
        }
        if *self.count.get_or_insert(n) != n {
            return Err(format!(
                "channel {idx} count {n} differs from the layer's other channels"
            ));
        }
        if !mean.is_finite() || !second.is_finite() {
            return Err(format!("channel {idx} has non-finite moments"));
        }
        if second < mean * mean - SECOND_MOMENT_TOL {
            return Err(format!("channel {idx}: m2 {second} below mean^2 {}", mean * mean));
        }
        self.records[idx] = Some((mean, second));
        Ok(())
    }

    fn finish(self, file: &mut StatsFile) -> Result<()> {
        let missing = self.records.iter().filter(|r| r.is_none()).count();
        if missing > 0 {
            return Err(Error::StatsFormat {
                line: self.header_line,
                msg: format!(
                    "layer `{}` has {} of {} channel records",
                    self.name,
                    self.records.len() - missing,
                    self.records.len()
                ),
            });
        }
        let count = self.count.unwrap_or(0);
        let n = count as f64;
        let (mean, m2): (Vec<f64>, Vec<f64>) = self
            .records
            .into_iter()
            .map(|r| {
                let (mean, second) = r.expect("checked above");
                (mean, (n * (second - mean * mean)).max(0.0))
            })
            .unzip();
        file.insert(self.name, ChannelStats::from_parts(count, mean, m2)?);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn round_trip_small_matrix() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("w.tensors");
        let m = Matrix::from_rows(&[[0.0, 1.0, 2.0], [3.0, 4.0, 5.0]]);
        write_tensor(&path, "w", &m).unwrap();
        assert_eq!(read_tensor(&path, "w").unwrap(), m);

        let one = Matrix::from_rows(&[[42.0]]);
        write_tensor(&path, "one", &one).unwrap();
        assert_eq!(read_tensor(&path, "one").unwrap().get(0, 0), 42.0);
        assert_eq!(read_tensor(&path, "w").unwrap(), m);
    }

    #[test]
    fn lookup_by_name() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("ckpt.tensors");
        let q = Matrix::from_rows(&[[1.0, 2.0]]);
        let k = Matrix::from_rows(&[[3.0], [4.0]]);
        write_tensor(&path, "q_proj", &q).unwrap();
        write_tensor(&path, "k_proj", &k).unwrap();
        assert_eq!(read_tensor(&path, "q_proj").unwrap(), q);
        assert!(matches!(read_tensor(&path, "absent"), Err(Error::MissingTensor(n)) if n == "absent"));
    }

    #[test]
    fn distinct_read_errors() {
        let dir = tempdir().unwrap();
        let missing = dir.path().join("nope.tensors");
        assert!(matches!(read_tensor(&missing, "w"), Err(Error::MissingFile(_))));

        let path = dir.path().join("mixed.tensors");
        let mut f = TensorFile::new();
        f.insert("mask", Tensor::from_mask(&PruneMask::ones(2, 2)))
            .unwrap();
        f.insert("bias", Tensor::from_f32(vec![3], &[1.0, 2.0, 3.0]).unwrap())
            .unwrap();
        f.write(&path).unwrap();
        assert!(matches!(
            read_tensor(&path, "mask"),
            Err(Error::DtypeMismatch { .. })
        ));
        assert!(matches!(
            read_tensor(&path, "bias"),
            Err(Error::RankMismatch { found: 1, .. })
        ));
    }

    #[test]
    fn rejects_non_finite() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.tensors");
        let m = Matrix::from_rows(&[[1.0, f64::NAN]]);
        assert!(matches!(write_tensor(&path, "w", &m), Err(Error::NonFinite(1))));
        let m = Matrix::from_rows(&[[1e300]]);
        assert!(matches!(write_tensor(&path, "w", &m), Err(Error::NonFinite(0))));
        assert!(!path.exists());
    }

    #[test]
    fn header_layout() {
        let mut f = TensorFile::new();
        f.insert("b", Tensor::from_f32(vec![1], &[1.5]).unwrap()).unwrap();
        f.insert("a", Tensor::from_mask(&PruneMask::ones(1, 3))).unwrap();
        let bytes = f.to_bytes();
        let n = u64::from_le_bytes(bytes[..8].try_into().unwrap()) as usize;
        assert_eq!(n % 8, 0);
        let header: serde_json::Value = serde_json::from_slice(&bytes[8..8 + n]).unwrap();
        assert_eq!(header["a"]["data_offsets"], serde_json::json!([0, 3]));
        assert_eq!(header["b"]["data_offsets"], serde_json::json!([3, 7]));
        assert_eq!(header["b"]["dtype"], "F32");
        assert_eq!(&bytes[8 + n + 3..], &1.5f32.to_le_bytes());
        assert_eq!(TensorFile::from_bytes(&bytes).unwrap(), f);
    }

    #[test]
    fn rejects_malformed_containers() {
        assert!(TensorFile::from_bytes(&[1, 2, 3]).is_err());
        let header = br#"{"w":{"dtype":"F32","shape":[2,2],"data_offsets":[0,16]}}"#;
        let mut bytes = (header.len() as u64).to_le_bytes().to_vec();
        bytes.extend_from_slice(header);
        bytes.extend_from_slice(&[0u8; 8]);
        assert!(matches!(TensorFile::from_bytes(&bytes), Err(Error::Format(_))));

        let header = br#"{"w":{"dtype":"U8","shape":[1],"data_offsets":[0,1]},"w":{"dtype":"U8","shape":[1],"data_offsets":[0,1]}}"#;
        let mut bytes = (header.len() as u64).to_le_bytes().to_vec();
        bytes.extend_from_slice(header);
        bytes.push(0);
        let err = TensorFile::from_bytes(&bytes).unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }

    #[test]
    fn mask_tensor_values_are_binary() {
        let header = br#"{"l.mask":{"dtype":"U8","shape":[1,2],"data_offsets":[0,2]}}"#;
        let mut bytes = (header.len() as u64).to_le_bytes().to_vec();
        bytes.extend_from_slice(header);
        bytes.extend_from_slice(&[1, 2]);
        assert!(TensorFile::from_bytes(&bytes).is_err());
    }

    #[test]
    fn stats_text_round_trip() {
        let batch = Matrix::from_rows(&[[1.0, -2.0], [3.0, 0.5], [2.0, 4.0]]);
        let s = ChannelStats::from_batch(&batch).unwrap();
        let mut f = StatsFile::new();
        f.insert("layers.0.q_proj", s.clone());
        let text = f.to_text();
        assert!(text.contains("layer layers.0.q_proj d_in 2"));
        assert!(text.contains("channel 1 count 3 mean "));
        let back = StatsFile::parse(&text).unwrap();
        let r = back.get("layers.0.q_proj").unwrap();
        assert_eq!(r.count(), 3);
        assert_eq!(r.mean(), s.mean());
        for (a, b) in r.variance().unwrap().iter().zip(s.variance().unwrap()) {
            assert!((a - b).abs() <= 1e-12 * b.max(1.0));
        }
    }

    #[test]
    fn stats_parse_accepts_comments_and_any_order() {
        let text = "# header\nlayer fc d_in 2\n\n# c\nchannel 1 count 4 mean 0 m2 1\nchannel 0 count 4 mean 1 m2 1\n";
        let f = StatsFile::parse(text).unwrap();
        let s = f.get("fc").unwrap();
        assert_eq!(s.mean(), &[1.0, 0.0]);
        assert_eq!(s.variance().unwrap(), vec![0.0, 1.0]);
    }

    #[test]
    fn stats_parse_errors() {
        let cases = [
            "channel 0 count 1 mean 0 m2 0\n",
            "layer fc d_in 2\nchannel 0 count 1 mean 0 m2 0\n",
            "layer fc d_in 1\nchannel 0 count 0 mean 0 m2 0\n",
            "layer fc d_in 1\nchannel 0 count 3 mean 2 m2 1\n",
            "layer fc d_in 1\nchannel 3 count 3 mean 0 m2 1\n",
            "layer fc d_in 2\nchannel 0 count 3 mean 0 m2 1\nchannel 1 count 4 mean 0 m2 1\n",
            "layer fc d_in 1\nchannel 0 count 3 mean 0 m2 1\nchannel 0 count 3 mean 0 m2 1\n",
            "layer fc d_in 1\nchan 0\n",
        ];
        for text in cases {
            assert!(
                matches!(StatsFile::parse(text), Err(Error::StatsFormat { .. })),
                "accepted: {text:?}"
            );
        }
    }
}
