//! Binary tensor (`DTEN`) and Kruskal model (`KTEN`) files.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::kruskal::KruskalTensor;
use crate::linalg::Matrix;
use crate::tensor::DenseTensor;

pub const TENSOR_MAGIC: &[u8; 4] = b"DTEN";
pub const KRUSKAL_MAGIC: &[u8; 4] = b"KTEN";
pub const FORMAT_VERSION: u8 = 1;
const DTYPE_F64: u8 = 0;

/// Tolerance for the canonical-form check when reading a model.
const CANONICAL_TOL: f64 = 1e-8;

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end =
            end.ok_or_else(|| Error::Format(format!("truncated file while reading {what}")))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(
            self.take(8, what)?.try_into().expect("8 bytes"),
        ))
    }

    fn extent(&mut self, what: &str) -> Result<usize> {
        usize::try_from(self.u64(what)?)
            .map_err(|_| Error::Format(format!("{what} does not fit in memory")))
    }

    fn f64s(&mut self, count: usize, what: &str) -> Result<Vec<f64>> {
        let n = count
            .checked_mul(8)
            .ok_or_else(|| Error::Format(format!("{what} is too large")))?;
        Ok(self
            .take(n, what)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }

    fn magic(&mut self, expected: &[u8; 4]) -> Result<()> {
        let got = self.take(4, "magic")?;
        if got != expected {
            return Err(Error::Format(format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(got),
                String::from_utf8_lossy(expected)
            )));
        }
        let version = self.u8("version")?;
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        Ok(())
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::Format(format!(
                "{} trailing bytes",
                self.bytes.len() - self.pos
            )));
        }
        Ok(())
    }
}

fn checked_product(extents: &[usize]) -> Result<usize> {
    extents
        .iter()
        .try_fold(1usize, |acc, &n| acc.checked_mul(n))
        .ok_or_else(|| Error::Format("extents overflow".into()))
}

fn push_f64s(out: &mut Vec<u8>, values: &[f64]) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn tensor_to_bytes(t: &DenseTensor) -> Vec<u8> {
    let mut out = Vec::with_capacity(7 + 8 * t.order() + 8 * t.len());
    out.extend_from_slice(TENSOR_MAGIC);
    out.push(FORMAT_VERSION);
    out.push(DTYPE_F64);
    out.push(u8::try_from(t.order()).expect("tensor order fits in a byte"));
    for &n in t.shape() {
        out.extend_from_slice(&(n as u64).to_le_bytes());
    }
    push_f64s(&mut out, t.data());
    out
}

pub fn tensor_from_bytes(bytes: &[u8]) -> Result<DenseTensor> {
    let mut r = Reader { bytes, pos: 0 };
    r.magic(TENSOR_MAGIC)?;
    let dtype = r.u8("dtype")?;
    if dtype != DTYPE_F64 {
        return Err(Error::Format(format!("unsupported dtype {dtype}")));
    }
    let order = r.u8("order")? as usize;
    let shape = (0..order)
        .map(|_| r.extent("extent"))
        .collect::<Result<Vec<_>>>()?;
    let len = checked_product(&shape)?;
    let expected = bytes.len().saturating_sub(r.pos) / 8;
    if len != expected || !(bytes.len() - r.pos).is_multiple_of(8) {
        return Err(Error::Format(format!(
            "payload holds {} bytes, expected {} for shape {shape:?}",
            bytes.len() - r.pos,
            8 * len
        )));
    }
    let data = r.f64s(len, "payload")?;
    r.finish()?;
    DenseTensor::new(shape, data).map_err(|e| Error::Format(e.to_string()))
}

pub fn kruskal_to_bytes(k: &KruskalTensor) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(KRUSKAL_MAGIC);
    out.push(FORMAT_VERSION);
    out.extend_from_slice(&(k.rank() as u64).to_le_bytes());
    out.extend_from_slice(&(k.order() as u64).to_le_bytes());
    for n in k.shape() {
        out.extend_from_slice(&(n as u64).to_le_bytes());
    }
    push_f64s(&mut out, k.weights());
    for f in k.factors() {
        push_f64s(&mut out, f.data());
    }
    out
}

/// Whether `k` is within `tol` of its own normalized form.
pub fn is_canonical(k: &KruskalTensor, tol: f64) -> bool {
    let n = k.normalize();
    let close = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .all(|(x, y)| (x - y).abs() <= tol * (1.0 + x.abs()))
    };
    close(k.weights(), n.weights())
        && k.factors()
            .iter()
            .zip(n.factors())
            .all(|(a, b)| close(a.data(), b.data()))
}

pub fn kruskal_from_bytes(bytes: &[u8]) -> Result<KruskalTensor> {
    let mut r = Reader { bytes, pos: 0 };
    r.magic(KRUSKAL_MAGIC)?;
    let rank = r.extent("rank")?;
    let order = r.extent("order")?;
    if order == 0 || order > 255 {
        return Err(Error::Format(format!("invalid order {order}")));
    }
    let shape = (0..order)
        .map(|_| r.extent("extent"))
        .collect::<Result<Vec<_>>>()?;
    let weights = r.f64s(rank, "weights")?;
    let factors = shape
        .iter()
        .map(|&n| {
            let len = n
                .checked_mul(rank)
                .ok_or_else(|| Error::Format("factor size overflows".into()))?;
            Matrix::new(n, rank, r.f64s(len, "factor")?)
        })
        .collect::<Result<Vec<_>>>()?;
    r.finish()?;
    let k = KruskalTensor::new(weights, factors).map_err(|e| Error::Format(e.to_string()))?;
    if !k.is_finite() {
        return Err(Error::Format("model contains non-finite values".into()));
    }
    if !is_canonical(&k, CANONICAL_TOL) {
        return Err(Error::Format("model is not in normalized form".into()));
    }
    Ok(k)
}

pub fn write_tensor(path: impl AsRef<Path>, t: &DenseTensor) -> Result<()> {
    Ok(fs::write(path, tensor_to_bytes(t))?)
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<DenseTensor> {
    tensor_from_bytes(&fs::read(path)?)
}

pub fn write_kruskal(path: impl AsRef<Path>, k: &KruskalTensor) -> Result<()> {
    Ok(fs::write(path, kruskal_to_bytes(k))?)
}

pub fn read_kruskal(path: impl AsRef<Path>) -> Result<KruskalTensor> {
    kruskal_from_bytes(&fs::read(path)?)
}

/// One line per entry: the indices, then the value.
pub fn tensor_to_csv(t: &DenseTensor) -> String {
    let mut out = String::new();
    let header: Vec<String> = (0..t.order()).map(|n| format!("i{n}")).collect();
    out.push_str(&header.join(","));
    out.push_str(",value\n");
    let mut index = vec![0usize; t.order()];
    for v in t.data() {
        for i in &index {
            out.push_str(&i.to_string());
            out.push(',');
        }
        out.push_str(&format!("{v:e}\n"));
        for n in (0..index.len()).rev() {
            index[n] += 1;
            if index[n] < t.shape()[n] {
                break;
            }
            index[n] = 0;
        }
    }
    out
}
