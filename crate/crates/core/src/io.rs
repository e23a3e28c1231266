//! The TATB1 array container, atomic file writes, and PGM/CSV exports.
//!
//! Layout: the 8-byte magic `TATB1\n\0\0`, a little-endian `u32` header length,
//! a UTF-8 JSON header `{dtype, shape, kind, meta}`, then the row-major
//! little-endian payload.

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::geometry::{ImageGrid, Sinogram};
use crate::scalar::Real;

pub const MAGIC: &[u8; 8] = b"TATB1\n\0\0";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Image,
    Sinogram,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    F64,
    F32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub dtype: Dtype,
    pub shape: Vec<usize>,
    pub kind: Kind,
    #[serde(default)]
    pub meta: Value,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    F64(Vec<f64>),
    F32(Vec<f32>),
}

impl Payload {
    pub fn len(&self) -> usize {
        match self {
            Payload::F64(v) => v.len(),
            Payload::F32(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dtype(&self) -> Dtype {
        match self {
            Payload::F64(_) => Dtype::F64,
            Payload::F32(_) => Dtype::F32,
        }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        match self {
            Payload::F64(v) => v.clone(),
            Payload::F32(v) => v.iter().map(|&x| x as f64).collect(),
        }
    }
}

/// A decoded TATB1 file.
#[derive(Debug, Clone, PartialEq)]
pub struct Tatb {
    pub header: Header,
    pub payload: Payload,
}

impl Tatb {
    pub fn new(kind: Kind, shape: Vec<usize>, payload: Payload, meta: Value) -> Result<Self> {
        if shape.iter().product::<usize>() != payload.len() {
            return Err(Error::Format(format!(
                "shape {shape:?} does not match payload length {}",
                payload.len()
            )));
        }
        Ok(Self {
            header: Header {
                dtype: payload.dtype(),
                shape,
                kind,
                meta,
            },
            payload,
        })
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = serde_json::to_vec(&self.header)?;
        let len = u32::try_from(header.len()).map_err(|_| Error::Format("header too long".into()))?;
        let width = match self.payload {
            Payload::F64(_) => 8,
            Payload::F32(_) => 4,
        };
        let mut out = Vec::with_capacity(12 + header.len() + width * self.payload.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(&header);
        match &self.payload {
            Payload::F64(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            Payload::F32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 12 || &bytes[..8] != MAGIC {
            return Err(Error::Format("missing TATB1 magic".into()));
        }
        let len = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
        let body = bytes
            .get(12..12 + len)
            .ok_or_else(|| Error::Format("truncated header".into()))?;
        let header: Header = serde_json::from_slice(body)?;
        let count: usize = header.shape.iter().product();
        let data = &bytes[12 + len..];
        let width = match header.dtype {
            Dtype::F64 => 8,
            Dtype::F32 => 4,
        };
        if data.len() != count * width {
            return Err(Error::Format(format!(
                "payload has {} bytes, header shape {:?} needs {}",
                data.len(),
                header.shape,
                count * width
            )));
        }
        let payload = match header.dtype {
            Dtype::F64 => Payload::F64(
                data.chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                    .collect(),
            ),
            Dtype::F32 => Payload::F32(
                data.chunks_exact(4)
                    .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
                    .collect(),
            ),
        };
        Ok(Self { header, payload })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path, &self.to_bytes()?)
    }

    fn matrix<T: Real>(&self) -> Result<Array2<T>> {
        let [r, c] = self.header.shape[..] else {
            return Err(Error::Format(format!("expected a 2-D array, got shape {:?}", self.header.shape)));
        };
        let v: Vec<T> = match &self.payload {
            Payload::F64(v) => v.iter().map(|&x| T::lit(x)).collect(),
            Payload::F32(v) => v.iter().map(|&x| T::lit(x as f64)).collect(),
        };
        Ok(Array2::from_shape_vec((r, c), v).expect("length checked on read"))
    }

    fn expect_kind(&self, kind: Kind) -> Result<()> {
        if self.header.kind != kind {
            return Err(Error::Format(format!("expected a {kind:?} file, found {:?}", self.header.kind)));
        }
        Ok(())
    }

    pub fn from_image<T: Real>(f: &ImageGrid<T>, extra: Value) -> Result<Self> {
        let mut meta = json!({ "half_width": f.half_width });
        merge(&mut meta, extra);
        Self::new(Kind::Image, vec![f.n(), f.n()], payload_of(&f.values), meta)
    }

    pub fn to_image<T: Real>(&self) -> Result<ImageGrid<T>> {
        self.expect_kind(Kind::Image)?;
        let hw = self.header.meta["half_width"]
            .as_f64()
            .ok_or_else(|| Error::Format("image meta lacks half_width".into()))?;
        ImageGrid::from_values(self.matrix()?, hw)
    }

    pub fn from_sinogram<T: Real>(g: &Sinogram<T>, extra: Value) -> Result<Self> {
        let mut meta = json!({ "dt": g.dt, "arc_mask": g.arc_mask });
        merge(&mut meta, extra);
        Self::new(Kind::Sinogram, vec![g.n_time(), g.n_theta()], payload_of(&g.values), meta)
    }

    pub fn to_sinogram<T: Real>(&self) -> Result<Sinogram<T>> {
        self.expect_kind(Kind::Sinogram)?;
        let meta = &self.header.meta;
        let dt = meta["dt"].as_f64().ok_or_else(|| Error::Format("sinogram meta lacks dt".into()))?;
        let values = self.matrix::<T>()?;
        let arc_mask: Vec<bool> = match meta.get("arc_mask") {
            Some(v) => serde_json::from_value(v.clone())?,
            None => vec![true; values.ncols()],
        };
        if arc_mask.len() != values.ncols() {
            return Err(Error::Format("arc_mask length differs from the angle count".into()));
        }
        Ok(Sinogram { values, dt, arc_mask })
    }

    /// Any 2-D table (image, sinogram or generic) as f64 rows.
    pub fn to_matrix(&self) -> Result<Array2<f64>> {
        self.matrix()
    }
}

fn payload_of<T: Real>(a: &Array2<T>) -> Payload {
    match T::DTYPE {
        "f32" => Payload::F32(a.iter().map(|v| v.to_f64_lossless() as f32).collect()),
        _ => Payload::F64(a.iter().map(|v| v.to_f64_lossless()).collect()),
    }
}

fn merge(into: &mut Value, extra: Value) {
    if let (Some(a), Value::Object(b)) = (into.as_object_mut(), extra) {
        a.extend(b);
    }
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file().set_permissions(fs::Permissions::from_mode(0o644))?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Scaling recorded next to a PGM export.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PgmScale {
    pub min: f64,
    pub max: f64,
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
}

impl PgmScale {
    /// Value represented by gray level `v`.
    pub fn decode(&self, v: u16) -> f64 {
        self.min + (self.max - self.min) * v as f64 / self.maxval as f64
    }
}

/// 16-bit binary PGM (big-endian samples), mapping `[min, max]` onto `[0, 65535]`.
pub fn encode_pgm(a: &Array2<f64>) -> (Vec<u8>, PgmScale) {
    let (h, w) = a.dim();
    let min = a.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let scale = PgmScale {
        min,
        max,
        width: w,
        height: h,
        maxval: u16::MAX,
    };
    let span = if max > min { max - min } else { 1.0 };
    let mut out = format!("P5\n{w} {h}\n{}\n", u16::MAX).into_bytes();
    for v in a.iter() {
        let q = (((v - min) / span) * u16::MAX as f64).round().clamp(0.0, u16::MAX as f64) as u16;
        out.extend_from_slice(&q.to_be_bytes());
    }
    (out, scale)
}

/// Writes `path` and the sidecar `path.json` holding the scaling.
pub fn write_pgm(path: impl AsRef<Path>, a: &Array2<f64>) -> Result<PgmScale> {
    let path = path.as_ref();
    let (bytes, scale) = encode_pgm(a);
    let mut side = path.as_os_str().to_owned();
    side.push(".json");
    write_atomic(&side, serde_json::to_string_pretty(&scale)?.as_bytes())?;
    write_atomic(path, &bytes)?;
    Ok(scale)
}

/// One line per row, comma separated, shortest round-trip formatting.
pub fn encode_csv(a: &Array2<f64>) -> String {
    let mut s = String::new();
    for row in a.rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}

pub fn write_csv(path: impl AsRef<Path>, a: &Array2<f64>) -> Result<()> {
    write_atomic(path, encode_csv(a).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn image_round_trip_is_bit_exact() {
        let f = ImageGrid::<f64>::from_fn(17, 1.0, |x, y| (3.0 * x).sin() * y + 1e-300);
        let t = Tatb::from_image(&f, json!({"note": "x"})).unwrap();
        let back = Tatb::from_bytes(&t.to_bytes().unwrap()).unwrap();
        assert_eq!(back, t);
        let g: ImageGrid<f64> = back.to_image().unwrap();
        assert!(g.values.iter().zip(f.values.iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
        assert_eq!(back.header.meta["note"], "x");
    }

    #[test]
    fn sinogram_round_trip_keeps_mask() {
        let mut g = Sinogram::<f32>::zeros(5, 0.25, vec![true, false, true, true]);
        g.values[[2, 3]] = 1.5;
        let t = Tatb::from_sinogram(&g, Value::Null).unwrap();
        assert_eq!(t.header.dtype, Dtype::F32);
        let back: Sinogram<f32> = Tatb::from_bytes(&t.to_bytes().unwrap()).unwrap().to_sinogram().unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn layout_matches_description() {
        let t = Tatb::new(Kind::Table, vec![1, 2], Payload::F64(vec![1.0, -2.0]), Value::Null).unwrap();
        let b = t.to_bytes().unwrap();
        assert_eq!(&b[..8], b"TATB1\n\0\0");
        let len = u32::from_le_bytes(b[8..12].try_into().unwrap()) as usize;
        let header: Value = serde_json::from_slice(&b[12..12 + len]).unwrap();
        assert_eq!(header["dtype"], "f64");
        assert_eq!(header["kind"], "table");
        assert_eq!(header["shape"], json!([1, 2]));
        assert_eq!(&b[12 + len..12 + len + 8], &1.0f64.to_le_bytes());
        assert_eq!(b.len(), 12 + len + 16);
    }

    #[test]
    fn malformed_input_rejected() {
        assert!(Tatb::from_bytes(b"nope").is_err());
        let t = Tatb::new(Kind::Table, vec![2, 2], Payload::F64(vec![0.0; 4]), Value::Null).unwrap();
        let mut b = t.to_bytes().unwrap();
        b.pop();
        assert!(Tatb::from_bytes(&b).is_err());
        assert!(Tatb::new(Kind::Table, vec![3], Payload::F64(vec![0.0; 4]), Value::Null).is_err());
        assert!(t.to_image::<f64>().is_err());
    }

    #[test]
    fn pgm_descaling_within_one_level() {
        let a = Array2::from_shape_fn((4, 6), |(i, j)| (i as f64 - 1.3) * 0.7 + j as f64 * 0.01);
        let (bytes, s) = encode_pgm(&a);
        let header = b"P5\n6 4\n65535\n";
        assert_eq!(&bytes[..header.len()], header);
        let step = (s.max - s.min) / 65535.0;
        for (k, v) in a.iter().enumerate() {
            let p = header.len() + 2 * k;
            let q = u16::from_be_bytes([bytes[p], bytes[p + 1]]);
            assert!((s.decode(q) - v).abs() <= 0.5 * step + 1e-15);
        }
    }

    #[test]
    fn csv_round_trips_values() {
        let a = Array2::from_shape_fn((2, 3), |(i, j)| 0.1 * i as f64 - j as f64 / 3.0);
        let s = encode_csv(&a);
        let back: Vec<f64> = s.lines().flat_map(|l| l.split(',')).map(|v| v.parse().unwrap()).collect();
        assert_eq!(back, a.iter().cloned().collect::<Vec<_>>());
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.bin");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
