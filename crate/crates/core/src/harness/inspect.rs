use std::fmt::Write;

use crate::memory::{Domain, MemoryBank};
use crate::numerics::{cosine_unchecked, l2_norm};

/// Human-readable summary of a bank: layout, per-item norms, the pairwise key cosine
/// matrix and mean intra/inter-partition key similarity.
pub fn inspect_bank(bank: &MemoryBank) -> String {
    let mut s = String::new();
    let n = bank.len();
    let _ = writeln!(s, "items: {n}  channels: {}", bank.channels());
    let _ = writeln!(s, "layout:");
    for p in bank.layout().partitions() {
        let _ = writeln!(s, "  class {:>6}  items {:>3}..{:<3} ({})", p.class.to_string(), p.offset, p.offset + p.count, p.count);
    }
    let _ = writeln!(s, "norms (key, value_x, value_y):");
    for i in 0..n {
        let _ = writeln!(
            s,
            "  {i:>3}  {:.3}  {:.3}  {:.3}",
            l2_norm(bank.keys().row(i)),
            l2_norm(bank.values(Domain::X).row(i)),
            l2_norm(bank.values(Domain::Y).row(i))
        );
    }
    let _ = writeln!(s, "key cosine:");
    if n > 1 {
        for i in 0..n {
            let _ = write!(s, "  {i:>3}");
            for j in 0..n {
                let _ = write!(s, " {:>6.3}", cosine_unchecked(bank.keys().row(i), bank.keys().row(j)));
            }
            let _ = writeln!(s);
        }
    }
    let _ = writeln!(s, "partition key similarity (intra, inter):");
    let layout = bank.layout();
    for p in layout.partitions() {
        let mean = |pairs: Vec<(usize, usize)>| -> Option<f64> {
            (!pairs.is_empty()).then(|| {
                pairs
                    .iter()
                    .map(|&(a, b)| cosine_unchecked(bank.keys().row(a), bank.keys().row(b)))
                    .sum::<f64>()
                    / pairs.len() as f64
            })
        };
        let r = p.range();
        let intra = mean(r.clone().flat_map(|a| r.clone().filter(move |&b| b > a).map(move |b| (a, b))).collect());
        let inter = mean(r.clone().flat_map(|a| (0..n).filter(|b| !r.contains(b)).map(move |b| (a, b)).collect::<Vec<_>>()).collect());
        let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.3}"));
        let _ = writeln!(s, "  class {:>6}  {}  {}", p.class.to_string(), fmt(intra), fmt(inter));
    }
    s
}
