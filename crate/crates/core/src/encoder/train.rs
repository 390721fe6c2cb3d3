use crate::error::{Error, Result};
use crate::memory::{self, ClassCluster, ClassId, Direction, Domain, MemoryBank};
use crate::numerics::Matrix;
use crate::objectives::{contrastive_loss, triplet_loss, ContrastiveConfig, ItemLoss, LossReport, LossVariant};
use crate::synthdata::{cluster_all, cluster_features, FeatureScene};

use super::{EncoderSet, EncoderSetGrads};

/// Loss weights and item-objective settings for one training step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub contrastive: ContrastiveConfig,
    pub lambda_rec: f64,
    pub loss: LossVariant,
    pub triplet_margin: f64,
}

impl TrainConfig {
    pub fn total(&self, r: &LossReport) -> f64 {
        self.contrastive.lambda_key * r.key_loss + self.contrastive.lambda_value * r.value_loss + self.lambda_rec * r.rec_loss
    }

    fn has_objective(&self) -> bool {
        self.contrastive.lambda_key != 0.0 || self.contrastive.lambda_value != 0.0 || self.lambda_rec != 0.0
    }

    fn item_loss(&self, queries: &Matrix, items: &Matrix, pool: &[usize]) -> Result<ItemLoss> {
        match self.loss {
            LossVariant::Contrastive => contrastive_loss(queries, items, pool, self.contrastive.temperature),
            LossVariant::Triplet => triplet_loss(queries, items, pool, self.triplet_margin),
        }
    }
}

/// Encoded features of a scene pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoded {
    pub content_x: Matrix,
    pub content_y: Matrix,
    pub style_x: Matrix,
    pub style_y: Matrix,
}

impl Encoded {
    pub fn new(enc: &EncoderSet, scene_x: &FeatureScene, scene_y: &FeatureScene) -> Result<Self> {
        Ok(Encoded {
            content_x: enc.content_x.forward(&scene_x.content)?,
            content_y: enc.content_y.forward(&scene_y.content)?,
            style_x: enc.style_x.forward(&scene_x.style)?,
            style_y: enc.style_y.forward(&scene_y.style)?,
        })
    }

    pub fn content(&self, d: Domain) -> &Matrix {
        match d {
            Domain::X => &self.content_x,
            Domain::Y => &self.content_y,
        }
    }

    pub fn style(&self, d: Domain) -> &Matrix {
        match d {
            Domain::X => &self.style_x,
            Domain::Y => &self.style_y,
        }
    }

    /// Per-class cluster pairs `(x, y)`, or a single shared pair when the memory
    /// ignores classes.
    pub fn cluster_pairs(&self, labels: &[ClassId], bank: &MemoryBank) -> Vec<(ClassCluster, ClassCluster)> {
        if bank.layout().is_single() {
            return vec![(
                cluster_all(&self.content_x, &self.style_x, ClassId::SHARED),
                cluster_all(&self.content_y, &self.style_y, ClassId::SHARED),
            )];
        }
        cluster_features(labels, &self.content_x, &self.style_x)
            .into_iter()
            .zip(cluster_features(labels, &self.content_y, &self.style_y))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveOutput {
    pub report: LossReport,
    pub grads: EncoderSetGrads,
    pub encoded: Encoded,
    pub clusters: Vec<(ClassCluster, ClassCluster)>,
}

fn check_pair(scene_x: &FeatureScene, scene_y: &FeatureScene) -> Result<()> {
    if scene_x.labels != scene_y.labels {
        return Err(Error::Validation("scene pair labels differ".into()));
    }
    if scene_x.is_empty() {
        return Err(Error::Validation("scene has no positions".into()));
    }
    Ok(())
}

/// Loss and encoder gradients for a scene pair against a fixed memory.
///
/// Per class cluster and domain `d`:
/// * key term: queries `c^d` against all keys, positives from the class partition;
/// * value term: `s^d` against the `d` values, positives from the class partition;
/// * reconstruction: the read from `c^d` aggregates opposite-domain values and is
///   compared with the opposite domain's encoded style, `|s_hat - s|^2 / P`.
pub fn objective(
    encoders: &EncoderSet,
    bank: &MemoryBank,
    scene_x: &FeatureScene,
    scene_y: &FeatureScene,
    cfg: &TrainConfig,
) -> Result<ObjectiveOutput> {
    check_pair(scene_x, scene_y)?;
    let encoded = Encoded::new(encoders, scene_x, scene_y)?;
    let clusters = encoded.cluster_pairs(&scene_x.labels, bank);
    let p_total = scene_x.len() as f64;
    let c = bank.channels();
    let shape = (scene_x.len(), c);
    let mut g_content = [Matrix::zeros(shape.0, shape.1), Matrix::zeros(shape.0, shape.1)];
    let mut g_style = [Matrix::zeros(shape.0, shape.1), Matrix::zeros(shape.0, shape.1)];
    let idx = |d: Domain| match d {
        Domain::X => 0,
        Domain::Y => 1,
    };
    let lk = cfg.contrastive.lambda_key;
    let lv = cfg.contrastive.lambda_value;
    let mut report = LossReport::default();

    for (cx, cy) in &clusters {
        let pool: Vec<usize> = bank.layout().partition(cx.class)?.range().collect();
        for (d, own, other) in [(Domain::X, cx, cy), (Domain::Y, cy, cx)] {
            let key = cfg.item_loss(&own.content, bank.keys(), &pool)?;
            report.key_loss += key.loss;
            g_content[idx(d)].scatter_add_rows(&own.positions, &key.grad, lk)?;

            let value = cfg.item_loss(&own.style, bank.values(d), &pool)?;
            report.value_loss += value.loss;
            g_style[idx(d)].scatter_add_rows(&own.positions, &value.grad, lv)?;

            let dir = Direction::from_source(d);
            let read = memory::read(bank, own, dir)?;
            let mut diff = read.aggregated_style;
            for (a, b) in diff.as_mut_slice().iter_mut().zip(other.style.as_slice()) {
                *a -= b;
            }
            report.rec_loss += diff.frobenius_sq() / p_total;
            let upstream = diff.map(|v| 2.0 * cfg.lambda_rec * v / p_total);
            let g_query = memory::read_backward(bank, own, dir, &upstream)?;
            g_content[idx(d)].scatter_add_rows(&own.positions, &g_query, 1.0)?;
            g_style[idx(d.opposite())].scatter_add_rows(&other.positions, &upstream, -1.0)?;
        }
    }

    let [gcx, gcy] = g_content;
    let [gsx, gsy] = g_style;
    let grads = EncoderSetGrads {
        content_x: encoders.content_x.backward(&scene_x.content, &gcx)?,
        content_y: encoders.content_y.backward(&scene_y.content, &gcy)?,
        style_x: encoders.style_x.backward(&scene_x.style, &gsx)?,
        style_y: encoders.style_y.backward(&scene_y.style, &gsy)?,
    };
    Ok(ObjectiveOutput {
        report,
        grads,
        encoded,
        clusters,
    })
}

/// One iteration: losses are evaluated against the memory as it stands, the
/// encoders take an Adam step, then (if `update_memory`) every class partition is
/// written with this iteration's encoded features.
///
/// With all loss weights zero the encoders are left untouched.
pub fn train_step(
    encoders: &mut EncoderSet,
    bank: &mut MemoryBank,
    scene_x: &FeatureScene,
    scene_y: &FeatureScene,
    cfg: &TrainConfig,
    update_memory: bool,
) -> Result<LossReport> {
    let out = objective(encoders, bank, scene_x, scene_y, cfg)?;
    if cfg.has_objective() {
        encoders.apply(&out.grads)?;
        if !encoders.is_finite() {
            return Err(Error::Validation("encoder parameters became non-finite".into()));
        }
    }
    if update_memory {
        for (cx, cy) in &out.clusters {
            memory::update(bank, cx, cy)?;
        }
    }
    Ok(out.report)
}
