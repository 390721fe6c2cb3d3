use crate::error::{Error, Result};
use crate::numerics::{cosine_unchecked, Matrix};

use super::{check_inputs, nearest_in_pool, ItemLoss};

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Hinge against the second-nearest item.
///
/// Per query: the positive is the cosine-nearest item in `positive_pool`, the negative
/// the cosine-nearest of all other items, and the term is
/// `max(0, |q - i_+| - |q - i_-| + margin)`. The subgradient is zero when the hinge is
/// inactive and drops a distance term whose distance is exactly zero.
pub fn triplet_loss(queries: &Matrix, items: &Matrix, positive_pool: &[usize], margin: f64) -> Result<ItemLoss> {
    check_inputs(queries, items, positive_pool)?;
    if items.rows() < 2 {
        return Err(Error::Pool(format!(
            "triplet loss needs at least two items, got {}",
            items.rows()
        )));
    }
    let mut grad = Matrix::zeros(queries.rows(), queries.cols());
    let mut positives = Vec::with_capacity(queries.rows());
    let mut loss = 0.0;
    for p in 0..queries.rows() {
        let q = queries.row(p);
        let pos = nearest_in_pool(q, items, positive_pool);
        positives.push(pos);
        let mut neg = usize::MAX;
        let mut best = f64::NEG_INFINITY;
        for (n, item) in items.iter_rows().enumerate() {
            if n == pos {
                continue;
            }
            let s = cosine_unchecked(q, item);
            if s > best {
                best = s;
                neg = n;
            }
        }
        let d_pos = distance(q, items.row(pos));
        let d_neg = distance(q, items.row(neg));
        let term = d_pos - d_neg + margin;
        if term <= 0.0 {
            continue;
        }
        loss += term;
        let g = grad.row_mut(p);
        if d_pos > 0.0 {
            for ((gj, qj), ij) in g.iter_mut().zip(q).zip(items.row(pos)) {
                *gj += (qj - ij) / d_pos;
            }
        }
        if d_neg > 0.0 {
            for ((gj, qj), ij) in g.iter_mut().zip(q).zip(items.row(neg)) {
                *gj -= (qj - ij) / d_neg;
            }
        }
    }
    Ok(ItemLoss { loss, positives, grad })
}
