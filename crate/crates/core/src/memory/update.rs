use std::ops::Range;

use crate::error::{Error, Result};
use crate::numerics::{l2_norm, softmax_in_place, Matrix, EPS_DIV};
use crate::numerics::cosine_unchecked;

use super::{ClassCluster, MemoryBank};

/// Update weights of one update call, restricted to the class partition
/// (`P_d x N_k` per domain; `None` for an empty cluster).
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateWeights {
    pub items: Range<usize>,
    pub beta_x: Option<Matrix>,
    pub beta_y: Option<Matrix>,
}

fn weights_for(bank: &MemoryBank, queries: &Matrix, items: &Range<usize>) -> Matrix {
    let p = queries.rows();
    let mut beta = Matrix::zeros(p, items.len());
    let mut col = vec![0.0; p];
    for (j, n) in items.clone().enumerate() {
        let key = bank.keys.row(n);
        for (c, q) in col.iter_mut().zip(queries.iter_rows()) {
            *c = cosine_unchecked(q, key);
        }
        // softmax over the query dimension
        softmax_in_place(&mut col);
        for (i, c) in col.iter().enumerate() {
            beta[(i, j)] = *c;
        }
    }
    beta
}

/// Update weights between `queries` and the partition of `class`: cosine similarity
/// normalized with a softmax over the queries, one column per item.
pub fn update_weights(bank: &MemoryBank, queries: &Matrix, class: super::ClassId) -> Result<Matrix> {
    let items = bank.layout.partition(class)?.range();
    queries.ensure_shape(queries.rows(), bank.channels(), "update queries")?;
    if queries.rows() == 0 {
        return Err(Error::EmptyCluster(class));
    }
    Ok(weights_for(bank, queries, &items))
}

fn accumulate(target: &mut [f64], beta: &Matrix, col: usize, feats: &Matrix) {
    for (p, f) in feats.iter_rows().enumerate() {
        let b = beta[(p, col)];
        for (t, v) in target.iter_mut().zip(f) {
            *t += b * v;
        }
    }
}

fn store_normalized(dst: &mut [f64], acc: &[f64]) {
    let n = l2_norm(acc);
    // A sum that cancels to zero keeps the previous unit item.
    if n > EPS_DIV && n.is_finite() {
        for (d, a) in dst.iter_mut().zip(acc) {
            *d = a / n;
        }
    }
}

/// Writes the paired class clusters into the memory.
///
/// Keys absorb the content of both domains, each value plane only its own domain's
/// style. All update weights are computed from the keys as they were before the call;
/// items outside the class partition are left untouched. An empty cluster contributes
/// nothing.
pub fn update(bank: &mut MemoryBank, cluster_x: &ClassCluster, cluster_y: &ClassCluster) -> Result<UpdateWeights> {
    if cluster_x.class != cluster_y.class {
        return Err(Error::Layout(format!(
            "update with clusters of classes {} and {}",
            cluster_x.class, cluster_y.class
        )));
    }
    let items = bank.layout.partition(cluster_x.class)?.range();
    let c = bank.channels();
    for cl in [cluster_x, cluster_y] {
        if !cl.is_empty() {
            cl.content.ensure_shape(cl.len(), c, "update content")?;
            cl.style.ensure_shape(cl.len(), c, "update style")?;
        }
    }

    let beta_x = (!cluster_x.is_empty()).then(|| weights_for(bank, &cluster_x.content, &items));
    let beta_y = (!cluster_y.is_empty()).then(|| weights_for(bank, &cluster_y.content, &items));

    let mut acc = vec![0.0; c];
    for (j, n) in items.clone().enumerate() {
        acc.copy_from_slice(bank.keys.row(n));
        if let Some(b) = &beta_x {
            accumulate(&mut acc, b, j, &cluster_x.content);
        }
        if let Some(b) = &beta_y {
            accumulate(&mut acc, b, j, &cluster_y.content);
        }
        store_normalized(bank.keys.row_mut(n), &acc);

        if let Some(b) = &beta_x {
            acc.copy_from_slice(bank.values_x.row(n));
            accumulate(&mut acc, b, j, &cluster_x.style);
            store_normalized(bank.values_x.row_mut(n), &acc);
        }
        if let Some(b) = &beta_y {
            acc.copy_from_slice(bank.values_y.row(n));
            accumulate(&mut acc, b, j, &cluster_y.style);
            store_normalized(bank.values_y.row_mut(n), &acc);
        }
    }
    Ok(UpdateWeights { items, beta_x, beta_y })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::memory::{ClassId, MemoryLayout};

    fn unit_bank(layout: &[(ClassId, usize)], keys: Vec<Vec<f64>>) -> MemoryBank {
        let k = Matrix::from_rows(&keys).unwrap();
        MemoryBank::from_parts(MemoryLayout::new(layout).unwrap(), k.clone(), k.clone(), k).unwrap()
    }

    fn cl(class: ClassId, content: Vec<Vec<f64>>, style: Vec<Vec<f64>>) -> ClassCluster {
        let content = Matrix::from_rows(&content).unwrap();
        let n = content.rows();
        ClassCluster {
            class,
            content,
            style: Matrix::from_rows(&style).unwrap(),
            positions: (0..n).collect(),
        }
    }

    #[test]
    fn single_query_single_item() {
        let mut bank = unit_bank(&[(ClassId(1), 1)], vec![vec![1.0, 0.0]]);
        let x = cl(ClassId(1), vec![vec![0.0, 1.0]], vec![vec![0.0, 1.0]]);
        let y = cl(ClassId(1), vec![vec![0.0, 0.0]], vec![vec![0.0, 0.0]]);
        let w = update(&mut bank, &x, &y).unwrap();
        assert_eq!(w.beta_x.unwrap().as_slice(), &[1.0]);
        let h = 0.5f64.sqrt();
        assert!((bank.keys()[(0, 0)] - h).abs() < 1e-15);
        assert!((bank.keys()[(0, 1)] - h).abs() < 1e-15);
    }

    #[test]
    fn empty_clusters_are_a_no_op() {
        let mut bank = unit_bank(&[(ClassId(1), 2)], vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let before = bank.clone();
        let e = ClassCluster::empty(ClassId(1), 2);
        let w = update(&mut bank, &e, &e).unwrap();
        assert!(w.beta_x.is_none() && w.beta_y.is_none());
        assert_eq!(bank, before);
    }

    #[test]
    fn only_partition_items_move() {
        let mut bank = unit_bank(
            &[(ClassId(1), 1), (ClassId(2), 1)],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        );
        let x = cl(ClassId(2), vec![vec![1.0, 1.0]], vec![vec![1.0, 0.0]]);
        update(&mut bank, &x, &ClassCluster::empty(ClassId(2), 2)).unwrap();
        assert_eq!(bank.keys().row(0), &[1.0, 0.0]);
        assert_eq!(bank.values(crate::memory::Domain::Y).row(1), &[0.0, 1.0]);
        assert_ne!(bank.values(crate::memory::Domain::X).row(1), &[0.0, 1.0]);
    }

    #[test]
    fn class_mismatch_is_layout_error() {
        let mut bank = unit_bank(&[(ClassId(1), 1), (ClassId(2), 1)], vec![vec![1.0], vec![1.0]]);
        let r = update(
            &mut bank,
            &ClassCluster::empty(ClassId(1), 1),
            &ClassCluster::empty(ClassId(2), 1),
        );
        assert!(matches!(r, Err(Error::Layout(_))));
    }
}
