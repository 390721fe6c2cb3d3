use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::encoder::{objective, EncoderSet, Encoded};
use crate::error::{Error, Result};
use crate::json::fmt_f64;
use crate::memory::{read_global, ClassId, Direction, Domain, MemoryBank};
use crate::numerics::{cosine_unchecked, derive_seed, SeededRng};
use crate::objectives::LossReport;
use crate::synthdata::{generate_scene_pair, DomainSpec, FeatureScene};

use super::run::seeds;
use super::ExperimentConfig;

pub const METRICS_HEADER: &str = "iter,key_loss,value_loss,rec_loss,util_entropy,purity,fidelity";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub iteration: usize,
    pub key_loss: f64,
    pub value_loss: f64,
    pub rec_loss: f64,
    /// Shannon entropy (nats) of the mean read-weight row.
    pub item_utilization_entropy: f64,
    /// Fraction of queries whose strongest read weight is an item of their class.
    pub cluster_purity: f64,
    /// Mean cosine between the aggregated style and the true opposite-domain style.
    pub style_fidelity: f64,
}

impl MetricsRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.iteration,
            fmt_f64(self.key_loss),
            fmt_f64(self.value_loss),
            fmt_f64(self.rec_loss),
            fmt_f64(self.item_utilization_entropy),
            fmt_f64(self.cluster_purity),
            fmt_f64(self.style_fidelity)
        )
    }
}

pub fn write_metrics_csv(path: &Path, rows: &[MetricsRow]) -> Result<()> {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(METRICS_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv_line());
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Strongest item of one test-time query.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub scene: usize,
    pub position: usize,
    pub domain: Domain,
    pub label: ClassId,
    pub item: usize,
    pub weight: f64,
    pub content: Vec<f64>,
}

/// Accumulates test-time read statistics over scenes.
///
/// Purity credits a query whose maximum read weight is shared by `t` items with
/// `1/t` per tied item of its own class. In class-aware memory an item's class is
/// its partition; in single memory it is the class that sends it the most credit
/// (ties to the lower class id).
pub struct Evaluator<'a> {
    bank: &'a MemoryBank,
    weight_sum: Vec<f64>,
    credit: Vec<BTreeMap<ClassId, f64>>,
    queries: usize,
    fidelity_sum: f64,
    losses: LossReport,
    scenes: usize,
    keep_assignments: usize,
    assignments: Vec<Assignment>,
}

impl<'a> Evaluator<'a> {
    pub fn new(bank: &'a MemoryBank) -> Self {
        Evaluator {
            bank,
            weight_sum: vec![0.0; bank.len()],
            credit: vec![BTreeMap::new(); bank.len()],
            queries: 0,
            fidelity_sum: 0.0,
            losses: LossReport::default(),
            scenes: 0,
            keep_assignments: 0,
            assignments: Vec::new(),
        }
    }

    /// Records per-query assignments for the first `scenes` scenes added.
    pub fn keep_assignments(mut self, scenes: usize) -> Self {
        self.keep_assignments = scenes;
        self
    }

    pub fn add_losses(&mut self, r: &LossReport) {
        self.losses.key_loss += r.key_loss;
        self.losses.value_loss += r.value_loss;
        self.losses.rec_loss += r.rec_loss;
    }

    pub fn add_scene(&mut self, encoded: &Encoded, labels: &[ClassId]) -> Result<()> {
        for d in [Domain::X, Domain::Y] {
            let queries = encoded.content(d);
            let read = read_global(self.bank, queries, Direction::from_source(d))?;
            let truth = encoded.style(d.opposite());
            for (p, &label) in labels.iter().enumerate() {
                let w = read.weights.row(p);
                for (s, &v) in self.weight_sum.iter_mut().zip(w) {
                    *s += v;
                }
                let max = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let tied: Vec<usize> = (0..w.len()).filter(|&n| w[n] == max).collect();
                let share = 1.0 / tied.len() as f64;
                for &n in &tied {
                    *self.credit[n].entry(label).or_insert(0.0) += share;
                }
                self.fidelity_sum += cosine_unchecked(read.aggregated_style.row(p), truth.row(p));
                if self.scenes < self.keep_assignments {
                    self.assignments.push(Assignment {
                        scene: self.scenes,
                        position: p,
                        domain: d,
                        label,
                        item: tied[0],
                        weight: max,
                        content: queries.row(p).to_vec(),
                    });
                }
            }
            self.queries += labels.len();
        }
        self.scenes += 1;
        Ok(())
    }

    fn item_class(&self, n: usize) -> Option<ClassId> {
        let layout = self.bank.layout();
        if !layout.is_single() {
            return layout.class_of_item(n);
        }
        let mut best: Option<(ClassId, f64)> = None;
        for (&c, &v) in &self.credit[n] {
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((c, v));
            }
        }
        best.map(|(c, _)| c)
    }

    pub fn purity(&self) -> f64 {
        if self.queries == 0 {
            return 0.0;
        }
        let hit: f64 = (0..self.bank.len())
            .filter_map(|n| self.item_class(n).and_then(|c| self.credit[n].get(&c)))
            .sum();
        (hit / self.queries as f64).clamp(0.0, 1.0)
    }

    pub fn entropy(&self) -> f64 {
        if self.queries == 0 {
            return 0.0;
        }
        let q = self.queries as f64;
        let h: f64 = self
            .weight_sum
            .iter()
            .map(|s| s / q)
            .filter(|&m| m > 0.0)
            .map(|m| -m * m.ln())
            .sum();
        h.clamp(0.0, (self.bank.len() as f64).ln())
    }

    pub fn fidelity(&self) -> f64 {
        if self.queries == 0 {
            return 0.0;
        }
        (self.fidelity_sum / self.queries as f64).clamp(-1.0, 1.0)
    }

    /// Metrics row; losses are averaged per scene.
    pub fn finish(&self, iteration: usize) -> MetricsRow {
        let s = self.scenes.max(1) as f64;
        MetricsRow {
            iteration,
            key_loss: self.losses.key_loss / s,
            value_loss: self.losses.value_loss / s,
            rec_loss: self.losses.rec_loss / s,
            item_utilization_entropy: self.entropy(),
            cluster_purity: self.purity(),
            style_fidelity: self.fidelity(),
        }
    }

    pub fn into_assignments(self) -> Vec<Assignment> {
        self.assignments
    }
}

/// Scenes for which [`evaluate`] records per-query assignments.
pub const ASSIGNMENT_SCENES: usize = 8;

/// Test-time metrics over `scenes` held-out scene pairs drawn from the config's
/// evaluation stream. Reads never consult labels; labels only score the result.
pub fn evaluate(
    bank: &MemoryBank,
    encoders: &EncoderSet,
    spec: &DomainSpec,
    cfg: &ExperimentConfig,
    scenes: usize,
) -> Result<(MetricsRow, Vec<Assignment>)> {
    let tc = cfg.train_config();
    let mut ev = Evaluator::new(bank).keep_assignments(ASSIGNMENT_SCENES);
    for i in 0..scenes {
        let mut rng = SeededRng::new(derive_seed(cfg.seed, seeds::EVAL, i as u64));
        let (sx, sy) = generate_scene_pair(spec, &mut rng)?;
        add_pair(&mut ev, encoders, &sx, &sy, &tc)?;
    }
    let row = ev.finish(cfg.iterations);
    Ok((row, ev.into_assignments()))
}

pub fn add_pair(
    ev: &mut Evaluator<'_>,
    encoders: &EncoderSet,
    sx: &FeatureScene,
    sy: &FeatureScene,
    tc: &crate::encoder::TrainConfig,
) -> Result<()> {
    let out = objective(encoders, ev.bank, sx, sy, tc)?;
    ev.add_losses(&out.report);
    ev.add_scene(&out.encoded, &sx.labels)
}

pub(crate) fn write_assignments_csv(path: &Path, rows: &[Assignment]) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    let c = rows.first().map_or(0, |r| r.content.len());
    let mut header = String::from("scene,position,domain,label,item,weight");
    for j in 0..c {
        header.push_str(&format!(",c{j}"));
    }
    writeln!(f, "{header}").map_err(io)?;
    for r in rows {
        let d = match r.domain {
            Domain::X => "x",
            Domain::Y => "y",
        };
        write!(f, "{},{},{d},{},{},{}", r.scene, r.position, r.label.0, r.item, fmt_f64(r.weight)).map_err(io)?;
        for v in &r.content {
            write!(f, ",{}", fmt_f64(*v)).map_err(io)?;
        }
        writeln!(f).map_err(io)?;
    }
    f.flush().map_err(io)
}
