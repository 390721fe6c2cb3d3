use std::ops::Range;

use crate::error::{Error, Result};
use crate::numerics::{dot, l2_norm, softmax_in_place, Matrix, EPS_DIV};
use crate::numerics::cosine_unchecked;

use super::{ClassCluster, Direction, MemoryBank};

/// Read weights over all `N` items and the aggregated cross-domain style.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadResult {
    /// `P x N`, zero outside the addressed items.
    pub weights: Matrix,
    /// `P x C`.
    pub aggregated_style: Matrix,
}

/// Softmax over the addressed items of the cosine between `query` and each key.
pub(crate) fn address_row(bank: &MemoryBank, query: &[f64], items: &Range<usize>, out: &mut [f64]) {
    for (o, n) in out.iter_mut().zip(items.clone()) {
        *o = cosine_unchecked(query, bank.keys.row(n));
    }
    softmax_in_place(out);
}

fn read_items(bank: &MemoryBank, queries: &Matrix, items: Range<usize>, direction: Direction) -> Result<ReadResult> {
    let c = bank.channels();
    if queries.cols() != c {
        return Err(Error::shape(format!(
            "queries have {} channels, memory has {c}",
            queries.cols()
        )));
    }
    let values = bank.values(direction.target());
    let n = bank.len();
    let mut weights = Matrix::zeros(queries.rows(), n);
    let mut style = Matrix::zeros(queries.rows(), c);
    let mut local = vec![0.0; items.len()];
    for p in 0..queries.rows() {
        address_row(bank, queries.row(p), &items, &mut local);
        let out = style.row_mut(p);
        for (&a, item) in local.iter().zip(items.clone()) {
            for (o, v) in out.iter_mut().zip(values.row(item)) {
                *o += a * v;
            }
        }
        weights.row_mut(p)[items.clone()].copy_from_slice(&local);
    }
    Ok(ReadResult {
        weights,
        aggregated_style: style,
    })
}

/// Train-time read: the cluster addresses only its class partition and aggregates
/// the values of the opposite domain.
pub fn read(bank: &MemoryBank, cluster: &ClassCluster, direction: Direction) -> Result<ReadResult> {
    let range = bank.layout.partition(cluster.class)?.range();
    if cluster.is_empty() {
        return Err(Error::EmptyCluster(cluster.class));
    }
    read_items(bank, &cluster.content, range, direction)
}

/// Test-time read over all items, without class information.
pub fn read_global(bank: &MemoryBank, queries: &Matrix, direction: Direction) -> Result<ReadResult> {
    if queries.rows() == 0 {
        return Err(Error::shape("read_global needs at least one query"));
    }
    read_items(bank, queries, 0..bank.len(), direction)
}

/// Gradient of a loss with respect to the cluster's content queries, given the
/// gradient `upstream` with respect to the aggregated style of [`read`].
/// Keys and values are constants.
pub fn read_backward(
    bank: &MemoryBank,
    cluster: &ClassCluster,
    direction: Direction,
    upstream: &Matrix,
) -> Result<Matrix> {
    let range = bank.layout.partition(cluster.class)?.range();
    upstream.ensure_shape(cluster.content.rows(), bank.channels(), "read_backward upstream")?;
    cluster
        .content
        .ensure_shape(cluster.len(), bank.channels(), "read_backward queries")?;
    Ok(backward_items(bank, &cluster.content, range, direction, upstream))
}

pub(crate) fn backward_items(
    bank: &MemoryBank,
    queries: &Matrix,
    items: Range<usize>,
    direction: Direction,
    upstream: &Matrix,
) -> Matrix {
    let values = bank.values(direction.target());
    let mut grad = Matrix::zeros(queries.rows(), queries.cols());
    let mut alpha = vec![0.0; items.len()];
    let mut g_alpha = vec![0.0; items.len()];
    for p in 0..queries.rows() {
        let up = upstream.row(p);
        if up.iter().all(|&u| u == 0.0) {
            continue;
        }
        let q = queries.row(p);
        address_row(bank, q, &items, &mut alpha);
        // dL/dalpha_n = up . v_n; through the softmax: alpha_n (g_n - sum_m alpha_m g_m).
        for (g, n) in g_alpha.iter_mut().zip(items.clone()) {
            *g = dot(up, values.row(n));
        }
        let mean: f64 = alpha.iter().zip(&g_alpha).map(|(a, g)| a * g).sum();
        let q_norm = l2_norm(q);
        let out = grad.row_mut(p);
        for ((&a, &g), n) in alpha.iter().zip(&g_alpha).zip(items.clone()) {
            let g_cos = a * (g - mean);
            if g_cos == 0.0 {
                continue;
            }
            let k = bank.keys.row(n);
            let k_norm = l2_norm(k);
            let denom = q_norm * k_norm + EPS_DIV;
            let s = dot(q, k);
            // d cos / dq = k / D - s * |k| * q / (|q| D^2)
            let radial = if q_norm > 0.0 {
                s * k_norm / (q_norm * denom * denom)
            } else {
                0.0
            };
            for ((o, &kj), &qj) in out.iter_mut().zip(k).zip(q) {
                *o += g_cos * (kj / denom - radial * qj);
            }
        }
    }
    grad
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::memory::{ClassId, Domain, MemoryLayout};

    fn bank_from(layout: &[(ClassId, usize)], keys: Vec<Vec<f64>>, vx: Vec<Vec<f64>>, vy: Vec<Vec<f64>>) -> MemoryBank {
        MemoryBank::from_parts(
            MemoryLayout::new(layout).unwrap(),
            Matrix::from_rows(&keys).unwrap(),
            Matrix::from_rows(&vx).unwrap(),
            Matrix::from_rows(&vy).unwrap(),
        )
        .unwrap()
    }

    fn cluster(class: ClassId, content: Vec<Vec<f64>>) -> ClassCluster {
        let content = Matrix::from_rows(&content).unwrap();
        let p = content.rows();
        ClassCluster {
            class,
            style: Matrix::zeros(p, content.cols()),
            content,
            positions: (0..p).collect(),
        }
    }

    #[test]
    fn single_item_partition_returns_its_value() {
        let bank = bank_from(
            &[(ClassId(1), 1), (ClassId(0), 1)],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![0.6, 0.8], vec![1.0, 0.0]],
            vec![vec![0.8, -0.6], vec![0.0, 1.0]],
        );
        let c = cluster(ClassId(1), vec![vec![0.3, 0.7], vec![-2.0, 1.0]]);
        let r = read(&bank, &c, Direction::XToY).unwrap();
        for p in 0..2 {
            assert_eq!(r.weights.row(p), &[1.0, 0.0]);
            assert_eq!(r.aggregated_style.row(p), &[0.8, -0.6]);
        }
        let back = read(&bank, &c, Direction::YToX).unwrap();
        assert_eq!(back.aggregated_style.row(0), &[0.6, 0.8]);
    }

    #[test]
    fn identical_keys_give_uniform_weights() {
        let s = 0.5f64.sqrt();
        let bank = bank_from(
            &[(ClassId(2), 3)],
            vec![vec![s, s]; 3],
            vec![vec![1.0, 0.0]; 3],
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0]],
        );
        let r = read(&bank, &cluster(ClassId(2), vec![vec![0.1, 0.9]]), Direction::XToY).unwrap();
        for n in 0..3 {
            assert!((r.weights[(0, n)] - 1.0 / 3.0).abs() < 1e-15);
        }
        assert!((r.aggregated_style[(0, 0)]).abs() < 1e-15);
        assert!((r.aggregated_style[(0, 1)] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn two_key_example_against_scalar_evaluation() {
        let bank = bank_from(
            &[(ClassId(1), 2), (ClassId(0), 1)],
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0]],
            vec![vec![1.0, 0.0]; 3],
            vec![vec![0.6, 0.8], vec![-0.8, 0.6], vec![1.0, 0.0]],
        );
        let r = read(&bank, &cluster(ClassId(1), vec![vec![1.0, 0.0]]), Direction::XToY).unwrap();
        let e = std::f64::consts::E;
        let a0 = e / (e + 1.0);
        let a1 = 1.0 / (e + 1.0);
        assert!((r.weights[(0, 0)] - 0.731059).abs() < 1e-6);
        assert!((r.weights[(0, 0)] - a0).abs() < 1e-12);
        assert!((r.weights[(0, 1)] - a1).abs() < 1e-12);
        assert_eq!(r.weights[(0, 2)], 0.0);
        let want = [a0 * 0.6 + a1 * -0.8, a0 * 0.8 + a1 * 0.6];
        for j in 0..2 {
            assert!((r.aggregated_style[(0, j)] - want[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn read_errors() {
        let bank = bank_from(&[(ClassId(1), 1)], vec![vec![1.0, 0.0]], vec![vec![1.0, 0.0]], vec![vec![1.0, 0.0]]);
        assert!(matches!(
            read(&bank, &cluster(ClassId(5), vec![vec![1.0, 0.0]]), Direction::XToY),
            Err(Error::Layout(_))
        ));
        assert!(matches!(
            read(&bank, &ClassCluster::empty(ClassId(1), 2), Direction::XToY),
            Err(Error::EmptyCluster(ClassId(1)))
        ));
        assert!(matches!(
            read(&bank, &cluster(ClassId(1), vec![vec![1.0, 0.0, 0.0]]), Direction::XToY),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn global_read_single_item_and_argmax() {
        let bank = bank_from(&[(ClassId(0), 1)], vec![vec![0.0, 1.0]], vec![vec![1.0, 0.0]], vec![vec![0.0, -1.0]]);
        let r = read_global(&bank, &Matrix::from_rows(&[vec![3.0, 1.0]]).unwrap(), Direction::XToY).unwrap();
        assert_eq!(r.weights.row(0), &[1.0]);
        assert_eq!(r.aggregated_style.row(0), &[0.0, -1.0]);

        let basis = |i: usize| -> Vec<f64> { (0..3).map(|j| f64::from(u8::from(i == j))).collect() };
        let bank = bank_from(
            &[(ClassId(1), 1), (ClassId(2), 1), (ClassId(0), 1)],
            (0..3).map(basis).collect(),
            (0..3).map(basis).collect(),
            (0..3).map(basis).collect(),
        );
        let r = read_global(&bank, &Matrix::from_rows(&[basis(0)]).unwrap(), Direction::YToX).unwrap();
        assert!(r.weights[(0, 0)] > r.weights[(0, 1)]);
        assert!(r.weights[(0, 0)] > r.weights[(0, 2)]);
        assert_eq!(r.weights[(0, 1)], r.weights[(0, 2)]);
    }

    #[test]
    fn backward_trivial_cases() {
        let bank = bank_from(
            &[(ClassId(1), 1), (ClassId(0), 2)],
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.6, 0.8]],
            vec![vec![1.0, 0.0]; 3],
            vec![vec![0.0, 1.0], vec![1.0, 0.0], vec![0.6, -0.8]],
        );
        let c0 = cluster(ClassId(0), vec![vec![0.2, 0.5]]);
        let zero = read_backward(&bank, &c0, Direction::XToY, &Matrix::zeros(1, 2)).unwrap();
        assert_eq!(zero.as_slice(), &[0.0, 0.0]);

        let c1 = cluster(ClassId(1), vec![vec![0.2, 0.5]]);
        let up = Matrix::from_rows(&[vec![1.0, -3.0]]).unwrap();
        let g = read_backward(&bank, &c1, Direction::XToY, &up).unwrap();
        assert_eq!(g.as_slice(), &[0.0, 0.0]);

        assert!(read_backward(&bank, &c0, Direction::XToY, &Matrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn values_domain_follows_direction() {
        let bank = bank_from(&[(ClassId(0), 1)], vec![vec![1.0]], vec![vec![1.0]], vec![vec![-1.0]]);
        assert_eq!(bank.values(Direction::XToY.target()), bank.values(Domain::Y));
        let q = Matrix::from_rows(&[vec![2.0]]).unwrap();
        assert_eq!(read_global(&bank, &q, Direction::XToY).unwrap().aggregated_style[(0, 0)], -1.0);
        assert_eq!(read_global(&bank, &q, Direction::YToX).unwrap().aggregated_style[(0, 0)], 1.0);
    }
}
