//! Scalar-loop reference implementations and random instance builders shared by the
//! integration tests. Nothing here calls into the library's kernels.
#![allow(dead_code)]

use std::ops::Range;

use classmem::memory::{ClassCluster, ClassId, MemoryBank, MemoryLayout};
use classmem::numerics::SeededRng;
use classmem::Matrix;

pub type Rows = Vec<Vec<f64>>;

pub fn rows(m: &Matrix) -> Rows {
    (0..m.rows()).map(|i| (0..m.cols()).map(|j| m[(i, j)]).collect()).collect()
}

pub fn cos(a: &[f64], b: &[f64]) -> f64 {
    let mut ab = 0.0;
    let mut aa = 0.0;
    let mut bb = 0.0;
    for i in 0..a.len() {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    let v = ab / (aa.sqrt() * bb.sqrt() + 1e-12);
    v.max(-1.0).min(1.0)
}

pub fn softmax(xs: &[f64]) -> Vec<f64> {
    let mut m = f64::NEG_INFINITY;
    for &x in xs {
        if x > m {
            m = x;
        }
    }
    let mut e = vec![0.0; xs.len()];
    let mut s = 0.0;
    for i in 0..xs.len() {
        e[i] = (xs[i] - m).exp();
        s += e[i];
    }
    for v in e.iter_mut() {
        *v /= s;
    }
    e
}

fn normalized(v: &[f64], fallback: &[f64]) -> Vec<f64> {
    let mut n = 0.0;
    for x in v {
        n += x * x;
    }
    let n = n.sqrt();
    if n <= 1e-12 {
        return fallback.to_vec();
    }
    v.iter().map(|x| x / n).collect()
}

/// Read weights (`P x N`, zero outside `items`) and aggregated style.
pub fn read(keys: &Rows, values: &Rows, queries: &Rows, items: Range<usize>) -> (Rows, Rows) {
    let n = keys.len();
    let c = keys[0].len();
    let mut weights = vec![vec![0.0; n]; queries.len()];
    let mut style = vec![vec![0.0; c]; queries.len()];
    for p in 0..queries.len() {
        let mut sims = Vec::new();
        for k in items.clone() {
            sims.push(cos(&queries[p], &keys[k]));
        }
        let a = softmax(&sims);
        for (j, k) in items.clone().enumerate() {
            weights[p][k] = a[j];
            for ch in 0..c {
                style[p][ch] += a[j] * values[k][ch];
            }
        }
    }
    (weights, style)
}

/// `beta[p][j]` for item `items.start + j`: softmax over queries of cosine similarity.
pub fn update_weights(keys: &Rows, queries: &Rows, items: Range<usize>) -> Rows {
    let mut beta = vec![vec![0.0; items.len()]; queries.len()];
    for (j, k) in items.enumerate() {
        let mut sims = Vec::new();
        for q in queries {
            sims.push(cos(q, &keys[k]));
        }
        let b = softmax(&sims);
        for p in 0..queries.len() {
            beta[p][j] = b[p];
        }
    }
    beta
}

pub struct Side<'a> {
    pub content: &'a Rows,
    pub style: &'a Rows,
}

/// Updated `(keys, values_x, values_y)`.
pub fn update(keys: &Rows, vx: &Rows, vy: &Rows, x: &Side, y: &Side, items: Range<usize>) -> (Rows, Rows, Rows) {
    let c = keys[0].len();
    let (mut k2, mut vx2, mut vy2) = (keys.clone(), vx.clone(), vy.clone());
    let bx = (!x.content.is_empty()).then(|| update_weights(keys, x.content, items.clone()));
    let by = (!y.content.is_empty()).then(|| update_weights(keys, y.content, items.clone()));
    for (j, n) in items.enumerate() {
        let mut key = keys[n].clone();
        let mut valx = vx[n].clone();
        let mut valy = vy[n].clone();
        if let Some(b) = &bx {
            for p in 0..x.content.len() {
                for ch in 0..c {
                    key[ch] += b[p][j] * x.content[p][ch];
                    valx[ch] += b[p][j] * x.style[p][ch];
                }
            }
        }
        if let Some(b) = &by {
            for p in 0..y.content.len() {
                for ch in 0..c {
                    key[ch] += b[p][j] * y.content[p][ch];
                    valy[ch] += b[p][j] * y.style[p][ch];
                }
            }
        }
        k2[n] = normalized(&key, &keys[n]);
        vx2[n] = normalized(&valx, &vx[n]);
        vy2[n] = normalized(&valy, &vy[n]);
    }
    (k2, vx2, vy2)
}

fn nearest(q: &[f64], items: &Rows, pool: &[usize]) -> usize {
    let mut best = pool[0];
    for &i in pool {
        if cos(q, &items[i]) > cos(q, &items[best]) {
            best = i;
        }
    }
    best
}

pub fn contrastive(queries: &Rows, items: &Rows, pool: &[usize], tau: f64) -> f64 {
    let mut total = 0.0;
    for q in queries {
        let pos = nearest(q, items, pool);
        let logits: Vec<f64> = items.iter().map(|it| q.iter().zip(it).map(|(a, b)| a * b).sum::<f64>() / tau).collect();
        let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + logits.iter().map(|l| (l - m).exp()).sum::<f64>().ln();
        total += lse - logits[pos];
    }
    total
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn triplet(queries: &Rows, items: &Rows, pool: &[usize], margin: f64) -> f64 {
    let all: Vec<usize> = (0..items.len()).collect();
    let mut total = 0.0;
    for q in queries {
        let pos = nearest(q, items, pool);
        let others: Vec<usize> = all.iter().copied().filter(|&i| i != pos).collect();
        let neg = nearest(q, items, &others);
        total += (dist(q, &items[pos]) - dist(q, &items[neg]) + margin).max(0.0);
    }
    total
}

pub fn max_diff(a: &Rows, b: &Rows) -> f64 {
    let mut m: f64 = 0.0;
    for (ra, rb) in a.iter().zip(b) {
        for (x, y) in ra.iter().zip(rb) {
            m = m.max((x - y).abs());
        }
    }
    m
}

pub fn random_matrix(rng: &mut SeededRng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.normal())
}

pub fn unit_rows(rng: &mut SeededRng, rows: usize, cols: usize) -> Matrix {
    let mut m = random_matrix(rng, rows, cols);
    for i in 0..rows {
        let n = m.row(i).iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in m.row_mut(i) {
            *v /= n;
        }
    }
    m
}

/// Random layout of `n` items over one to `n` classes with ids `0..k`.
pub fn random_layout(rng: &mut SeededRng, n: usize) -> MemoryLayout {
    let k = rng.int_inclusive(1, n);
    let mut counts = vec![1usize; k];
    for _ in k..n {
        counts[rng.int_inclusive(0, k - 1)] += 1;
    }
    let entries: Vec<(ClassId, usize)> = counts.iter().enumerate().map(|(i, &c)| (ClassId(i as u32), c)).collect();
    MemoryLayout::new(&entries).unwrap()
}

pub fn random_bank(rng: &mut SeededRng, n: usize, c: usize) -> MemoryBank {
    let layout = random_layout(rng, n);
    let keys = unit_rows(rng, n, c);
    let vx = unit_rows(rng, n, c);
    let vy = unit_rows(rng, n, c);
    MemoryBank::from_parts(layout, keys, vx, vy).unwrap()
}

/// Cluster of `p` random features (scaled by a random factor) for `class`.
pub fn random_cluster(rng: &mut SeededRng, class: ClassId, p: usize, c: usize) -> ClassCluster {
    let scale = 0.1 + 3.0 * rng.uniform();
    ClassCluster {
        class,
        content: random_matrix(rng, p, c).map(|v| v * scale),
        style: random_matrix(rng, p, c).map(|v| v * scale),
        positions: (0..p).collect(),
    }
}

pub fn random_class(rng: &mut SeededRng, bank: &MemoryBank) -> ClassId {
    let parts = bank.layout().partitions();
    parts[rng.int_inclusive(0, parts.len() - 1)].class
}

pub fn items_of(bank: &MemoryBank, class: ClassId) -> Range<usize> {
    bank.layout().partition(class).unwrap().range()
}
