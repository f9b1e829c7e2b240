//! Dense N-way tensors and the multilinear primitives built on them.
//!
//! Storage is row-major (last index fastest). Mode indices are zero-based.
//! Unfoldings use the Kolda-Bader column order: in `unfold(t, n)` the fiber
//! at multi-index `(i_0, .., i_{N-1})` (with `i_n` removed) lands in column
//! `Σ_{k≠n} i_k · Π_{m<k, m≠n} I_m`, i.e. lower modes vary fastest.

use crate::error::{Error, Result};
use crate::linalg::{gemm_raw, Matrix};

#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    /// Validates the shape, the payload length, and finiteness of every value.
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        validate_shape(&shape)?;
        let len: usize = shape.iter().product();
        if data.len() != len {
            return Err(Error::DimensionMismatch(format!(
                "{} values supplied for shape {:?}",
                data.len(),
                shape
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        Ok(Self { shape, data })
    }

    pub(crate) fn from_raw(shape: Vec<usize>, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), shape.iter().product::<usize>());
        Self { shape, data }
    }

    pub fn zeros(shape: &[usize]) -> Result<Self> {
        validate_shape(shape)?;
        Ok(Self::from_raw(
            shape.to_vec(),
            vec![0.0; shape.iter().product()],
        ))
    }

    /// Builds a tensor by evaluating `f` at every multi-index in storage order.
    pub fn from_fn(shape: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        validate_shape(shape)?;
        let len = shape.iter().product();
        let mut data = Vec::with_capacity(len);
        let mut idx = vec![0usize; shape.len()];
        for _ in 0..len {
            data.push(f(&idx));
            increment(&mut idx, shape);
        }
        Self::new(shape.to_vec(), data)
    }

    #[inline]
    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.shape.len()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        let off = index
            .iter()
            .zip(&self.shape)
            .fold(0, |acc, (&i, &n)| acc * n + i);
        self.data[off]
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn inner_product(&self, other: &DenseTensor) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    pub fn sub(&self, other: &DenseTensor) -> Result<DenseTensor> {
        self.check_same_shape(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self::from_raw(self.shape.clone(), data))
    }

    pub fn add(&self, other: &DenseTensor) -> Result<DenseTensor> {
        self.check_same_shape(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self::from_raw(self.shape.clone(), data))
    }

    pub fn scale(&self, c: f64) -> DenseTensor {
        Self::from_raw(
            self.shape.clone(),
            self.data.iter().map(|v| v * c).collect(),
        )
    }

    pub fn max_abs_diff(&self, other: &DenseTensor) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn unfold(&self, mode: usize) -> Result<Matrix> {
        unfold(self, mode)
    }

    pub fn mode_product(&self, m: &Matrix, mode: usize) -> Result<DenseTensor> {
        mode_n_product(self, m, mode)
    }

    fn check_same_shape(&self, other: &DenseTensor) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::DimensionMismatch(format!(
                "shapes {:?} and {:?} differ",
                self.shape, other.shape
            )));
        }
        Ok(())
    }

    pub(crate) fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.order() {
            return Err(Error::InvalidMode {
                mode,
                order: self.order(),
            });
        }
        Ok(())
    }

    /// Extents before and after `mode`: the tensor viewed as `(P, I_n, S)`.
    pub(crate) fn split_at_mode(&self, mode: usize) -> (usize, usize, usize) {
        let p = self.shape[..mode].iter().product();
        let s = self.shape[mode + 1..].iter().product();
        (p, self.shape[mode], s)
    }
}

pub(crate) fn validate_shape(shape: &[usize]) -> Result<()> {
    if shape.is_empty() {
        return Err(Error::InvalidShape(
            "tensor order must be at least 1".into(),
        ));
    }
    if shape.contains(&0) {
        return Err(Error::InvalidShape(format!("zero extent in {shape:?}")));
    }
    Ok(())
}

fn increment(idx: &mut [usize], shape: &[usize]) {
    for k in (0..shape.len()).rev() {
        idx[k] += 1;
        if idx[k] < shape[k] {
            return;
        }
        idx[k] = 0;
    }
}

/// For each row-major linear index over `dims`, the column-major linear index
/// of the same multi-index.
fn column_major_table(dims: &[usize]) -> Vec<usize> {
    let len: usize = dims.iter().product();
    let mut cstride = vec![1usize; dims.len()];
    for k in 1..dims.len() {
        cstride[k] = cstride[k - 1] * dims[k - 1];
    }
    let mut table = Vec::with_capacity(len);
    let mut idx = vec![0usize; dims.len()];
    let mut col = 0usize;
    for _ in 0..len {
        table.push(col);
        for k in (0..dims.len()).rev() {
            idx[k] += 1;
            col += cstride[k];
            if idx[k] < dims[k] {
                break;
            }
            col -= cstride[k] * dims[k];
            idx[k] = 0;
        }
    }
    table
}

/// Mode-`mode` matricization: an `I_mode x Π_{k≠mode} I_k` matrix whose
/// columns are the mode-`mode` fibers.
pub fn unfold(t: &DenseTensor, mode: usize) -> Result<Matrix> {
    t.check_mode(mode)?;
    let (p, n, s) = t.split_at_mode(mode);
    let cols = p * s;
    let rev_p = column_major_table(&t.shape[..mode]);
    let rev_s = column_major_table(&t.shape[mode + 1..]);
    let mut out = vec![0.0; n * cols];
    for (pi, &cp) in rev_p.iter().enumerate() {
        for i in 0..n {
            let src = &t.data[(pi * n + i) * s..(pi * n + i + 1) * s];
            let dst = &mut out[i * cols..(i + 1) * cols];
            for (v, &cs) in src.iter().zip(&rev_s) {
                dst[cp + p * cs] = *v;
            }
        }
    }
    Ok(Matrix::from_raw(n, cols, out))
}

/// Inverse of [`unfold`] for the same mode and shape.
pub fn fold(m: &Matrix, mode: usize, shape: &[usize]) -> Result<DenseTensor> {
    validate_shape(shape)?;
    if mode >= shape.len() {
        return Err(Error::InvalidMode {
            mode,
            order: shape.len(),
        });
    }
    let p: usize = shape[..mode].iter().product();
    let s: usize = shape[mode + 1..].iter().product();
    let n = shape[mode];
    if m.rows() != n || m.cols() != p * s {
        return Err(Error::DimensionMismatch(format!(
            "cannot fold a {}x{} matrix into shape {:?} along mode {mode}",
            m.rows(),
            m.cols(),
            shape
        )));
    }
    let cols = p * s;
    let rev_p = column_major_table(&shape[..mode]);
    let rev_s = column_major_table(&shape[mode + 1..]);
    let src = m.data();
    let mut out = vec![0.0; n * cols];
    for (pi, &cp) in rev_p.iter().enumerate() {
        for i in 0..n {
            let row = &src[i * cols..(i + 1) * cols];
            let dst = &mut out[(pi * n + i) * s..(pi * n + i + 1) * s];
            for (d, &cs) in dst.iter_mut().zip(&rev_s) {
                *d = row[cp + p * cs];
            }
        }
    }
    Ok(DenseTensor::from_raw(shape.to_vec(), out))
}

/// `t ×_mode m`: every mode-`mode` fiber is multiplied by `m`.
pub fn mode_n_product(t: &DenseTensor, m: &Matrix, mode: usize) -> Result<DenseTensor> {
    t.check_mode(mode)?;
    let (p, n, s) = t.split_at_mode(mode);
    if m.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "mode-{mode} product needs {n} matrix columns, got {}",
            m.cols()
        )));
    }
    let j = m.rows();
    let mut shape = t.shape.clone();
    shape[mode] = j;
    let mut out = vec![0.0; p * j * s];
    if s == 1 {
        // (P x I_n) * mᵀ in one call
        gemm_raw(
            p,
            n,
            j,
            &t.data,
            n as isize,
            1,
            m.data(),
            1,
            n as isize,
            &mut out,
            j as isize,
            1,
            0.0,
        );
    } else {
        for pi in 0..p {
            let x = &t.data[pi * n * s..(pi + 1) * n * s];
            let y = &mut out[pi * j * s..(pi + 1) * j * s];
            gemm_raw(
                j,
                n,
                s,
                m.data(),
                n as isize,
                1,
                x,
                s as isize,
                1,
                y,
                s as isize,
                1,
                0.0,
            );
        }
    }
    Ok(DenseTensor::from_raw(shape, out))
}

/// Column-wise Kronecker product `a ⊙ b`.
pub fn khatri_rao(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    a.khatri_rao(b)
}

pub fn hadamard(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    a.hadamard(b)
}

pub fn frobenius_norm(t: &DenseTensor) -> f64 {
    t.frobenius_norm()
}

pub fn inner_product(a: &DenseTensor, b: &DenseTensor) -> Result<f64> {
    a.inner_product(b)
}

/// Khatri-Rao chain `m_0 ⊙ m_1 ⊙ ... ⊙ m_k` (last matrix varies fastest).
/// An empty chain is the `1 x cols` matrix of ones.
pub(crate) fn khatri_rao_chain(mats: &[&Matrix], cols: usize) -> Matrix {
    let mut acc = Matrix::from_raw(1, cols, vec![1.0; cols]);
    for m in mats {
        acc = acc.khatri_rao(m).expect("factor column counts agree");
    }
    acc
}

/// Matricized tensor times Khatri-Rao product:
/// `unfold(t, mode) · (U_{N-1} ⊙ … ⊙ U_{mode+1} ⊙ U_{mode-1} ⊙ … ⊙ U_0)`,
/// computed without forming the unfolding.
pub fn mttkrp(t: &DenseTensor, factors: &[Matrix], mode: usize) -> Result<Matrix> {
    t.check_mode(mode)?;
    check_factors(t, factors)?;
    let r = factors[0].cols();
    let (p, n, s) = t.split_at_mode(mode);
    let before: Vec<&Matrix> = factors[..mode].iter().collect();
    let after: Vec<&Matrix> = factors[mode + 1..].iter().collect();
    let mut out = Matrix::zeros(n, r);
    if s == 1 {
        // out = X(P x I_n)ᵀ · KR_before
        let kp = khatri_rao_chain(&before, r);
        gemm_raw(
            n,
            p,
            r,
            &t.data,
            1,
            n as isize,
            kp.data(),
            r as isize,
            1,
            out.data_mut(),
            r as isize,
            1,
            0.0,
        );
        return Ok(out);
    }
    let ks = khatri_rao_chain(&after, r);
    if p == 1 {
        gemm_raw(
            n,
            s,
            r,
            &t.data,
            s as isize,
            1,
            ks.data(),
            r as isize,
            1,
            out.data_mut(),
            r as isize,
            1,
            0.0,
        );
        return Ok(out);
    }
    // Z = X(P·I_n x S) · KR_after, then contract the P block against KR_before
    let kp = khatri_rao_chain(&before, r);
    let mut z = vec![0.0; p * n * r];
    gemm_raw(
        p * n,
        s,
        r,
        &t.data,
        s as isize,
        1,
        ks.data(),
        r as isize,
        1,
        &mut z,
        r as isize,
        1,
        0.0,
    );
    let acc = out.data_mut();
    for pi in 0..p {
        let w = &kp.data()[pi * r..(pi + 1) * r];
        for i in 0..n {
            let zrow = &z[(pi * n + i) * r..(pi * n + i + 1) * r];
            let orow = &mut acc[i * r..(i + 1) * r];
            for ((o, zv), wv) in orow.iter_mut().zip(zrow).zip(w) {
                *o += zv * wv;
            }
        }
    }
    Ok(out)
}

/// `unfold(t, mode) · unfold(t, mode)ᵀ` without forming the unfolding.
pub fn mode_gram(t: &DenseTensor, mode: usize) -> Result<Matrix> {
    t.check_mode(mode)?;
    let (p, n, s) = t.split_at_mode(mode);
    let mut g = Matrix::zeros(n, n);
    if s == 1 {
        gemm_raw(
            n,
            p,
            n,
            &t.data,
            1,
            n as isize,
            &t.data,
            n as isize,
            1,
            g.data_mut(),
            n as isize,
            1,
            0.0,
        );
    } else {
        for pi in 0..p {
            let x = &t.data[pi * n * s..(pi + 1) * n * s];
            gemm_raw(
                n,
                s,
                n,
                x,
                s as isize,
                1,
                x,
                1,
                s as isize,
                g.data_mut(),
                n as isize,
                1,
                1.0,
            );
        }
    }
    Ok(g)
}

pub(crate) fn check_factors(t: &DenseTensor, factors: &[Matrix]) -> Result<()> {
    if factors.len() != t.order() {
        return Err(Error::DimensionMismatch(format!(
            "{} factors for a tensor of order {}",
            factors.len(),
            t.order()
        )));
    }
    let r = factors[0].cols();
    for (k, (f, &n)) in factors.iter().zip(t.shape()).enumerate() {
        if f.rows() != n || f.cols() != r {
            return Err(Error::DimensionMismatch(format!(
                "factor {k} is {}x{}, expected {n}x{r}",
                f.rows(),
                f.cols()
            )));
        }
    }
    Ok(())
}
