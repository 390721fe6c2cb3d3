use crate::error::{Error, Result};

use super::Matrix;

/// Additive guard in cosine denominators and the zero-vector threshold for normalization.
pub const EPS_DIV: f64 = 1e-12;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn l2_norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `a·b / (‖a‖‖b‖ + EPS_DIV)`, clamped to `[-1, 1]`. A zero vector scores 0 against anything.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::shape(format!(
            "cosine of vectors with lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::shape("cosine of empty vectors"));
    }
    Ok(cosine_unchecked(a, b))
}

#[inline]
pub(crate) fn cosine_unchecked(a: &[f64], b: &[f64]) -> f64 {
    (dot(a, b) / (l2_norm(a) * l2_norm(b) + EPS_DIV)).clamp(-1.0, 1.0)
}

/// Numerically stable softmax of a slice, in place.
pub fn softmax_in_place(xs: &mut [f64]) {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in xs.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in xs.iter_mut() {
        *x /= sum;
    }
}

pub fn softmax_rows(m: &Matrix) -> Result<Matrix> {
    if m.rows() == 0 || m.cols() == 0 {
        return Err(Error::shape("softmax over an empty matrix"));
    }
    let mut out = m.clone();
    for i in 0..out.rows() {
        softmax_in_place(out.row_mut(i));
    }
    Ok(out)
}

pub fn softmax_cols(m: &Matrix) -> Result<Matrix> {
    if m.rows() == 0 || m.cols() == 0 {
        return Err(Error::shape("softmax over an empty matrix"));
    }
    let mut out = m.clone();
    let mut col = vec![0.0; m.rows()];
    for j in 0..m.cols() {
        for (i, c) in col.iter_mut().enumerate() {
            *c = m[(i, j)];
        }
        softmax_in_place(&mut col);
        for (i, c) in col.iter().enumerate() {
            out[(i, j)] = *c;
        }
    }
    Ok(out)
}

/// Scales `v` to unit L2 norm. Vectors with norm at most `EPS_DIV` come back unchanged.
pub fn l2_normalize(v: &[f64]) -> Vec<f64> {
    let n = l2_norm(v);
    if n <= EPS_DIV {
        return v.to_vec();
    }
    v.iter().map(|x| x / n).collect()
}
