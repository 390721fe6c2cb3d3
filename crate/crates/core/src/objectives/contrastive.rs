use crate::error::Result;
use crate::numerics::{dot, Matrix};

use super::{check_inputs, nearest_in_pool, ItemLoss};

/// Item contrastive loss.
///
/// For each query `q_p` the positive is its cosine-nearest item inside `positive_pool`;
/// every item is in the denominator:
///
/// `L = sum_p -log( exp(q_p·i_+ / tau) / sum_n exp(q_p·i_n / tau) )`
///
/// The logits are raw dot products. The gradient with respect to `q_p` is
/// `(sum_n softmax_n i_n - i_+) / tau`.
pub fn contrastive_loss(queries: &Matrix, items: &Matrix, positive_pool: &[usize], temperature: f64) -> Result<ItemLoss> {
    check_inputs(queries, items, positive_pool)?;
    let n_items = items.rows();
    let mut grad = Matrix::zeros(queries.rows(), queries.cols());
    let mut positives = Vec::with_capacity(queries.rows());
    let mut logits = vec![0.0; n_items];
    let mut loss = 0.0;
    for p in 0..queries.rows() {
        let q = queries.row(p);
        let pos = nearest_in_pool(q, items, positive_pool);
        positives.push(pos);
        for (z, item) in logits.iter_mut().zip(items.iter_rows()) {
            *z = dot(q, item) / temperature;
        }
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for z in &logits {
            sum += (z - max).exp();
        }
        loss += max + sum.ln() - logits[pos];

        let g = grad.row_mut(p);
        for (z, item) in logits.iter().zip(items.iter_rows()) {
            let w = (z - max).exp() / sum / temperature;
            for (gj, ij) in g.iter_mut().zip(item) {
                *gj += w * ij;
            }
        }
        for (gj, ij) in g.iter_mut().zip(items.row(pos)) {
            *gj -= ij / temperature;
        }
    }
    Ok(ItemLoss { loss, positives, grad })
}
