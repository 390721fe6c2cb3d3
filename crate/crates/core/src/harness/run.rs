use std::path::Path;

use crate::encoder::{save_encoders, train_step, EncoderSet};
use crate::error::{Error, Result};
use crate::json;
use crate::memory::{save_bank, MemoryBank};
use crate::numerics::{derive_seed, SeededRng};
use crate::objectives::LossVariant;
use crate::synthdata::{generate_scene_pair, DomainSpec};

use super::metrics::{evaluate, write_assignments_csv, write_metrics_csv, Assignment, Evaluator, MetricsRow};
use super::{ExperimentConfig, MemoryMode};

/// Sub-stream identifiers passed to [`derive_seed`] together with the config seed.
pub mod seeds {
    pub const PROTOTYPES: u64 = 1;
    pub const BANK: u64 = 2;
    pub const ENCODERS: u64 = 3;
    /// Index = training iteration.
    pub const TRAIN: u64 = 4;
    /// Index = evaluation scene.
    pub const EVAL: u64 = 5;
}

fn rng(cfg: &ExperimentConfig, stream: u64, index: u64) -> SeededRng {
    SeededRng::new(derive_seed(cfg.seed, stream, index))
}

#[derive(Debug, Clone)]
pub struct TrainingOutcome {
    pub spec: DomainSpec,
    pub bank: MemoryBank,
    pub encoders: EncoderSet,
    /// One row per iteration, measured on that iteration's scene after the step.
    pub metrics: Vec<MetricsRow>,
    /// Test-time metrics over `eval_scenes` held-out scenes.
    pub eval: MetricsRow,
    pub assignments: Vec<Assignment>,
}

/// Regenerates the synthetic world of a config.
pub fn domain_spec(cfg: &ExperimentConfig) -> Result<DomainSpec> {
    DomainSpec::generate(cfg.data.clone(), &mut rng(cfg, seeds::PROTOTYPES, 0))
}

/// Runs `cfg.iterations` training steps on fresh scene pairs, evaluates, and writes
/// the artifacts to `out` when given:
///
/// * `resolved_config.json`, `bank.json`, `encoders.json`
/// * `metrics.csv` (header plus one row per iteration)
/// * `eval.json` (final evaluation row), `assignments.csv`
pub fn run_training(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<TrainingOutcome> {
    cfg.validate()?;
    let spec = domain_spec(cfg)?;
    let mut bank = MemoryBank::init(cfg.layout()?, cfg.channels, &mut rng(cfg, seeds::BANK, 0))?;
    let mut encoders = EncoderSet::new(
        cfg.data.input_channels,
        cfg.channels,
        cfg.init_std,
        cfg.content_adam(),
        cfg.style_adam(),
        &mut rng(cfg, seeds::ENCODERS, 0),
    );
    let tc = cfg.train_config();
    let mut metrics = Vec::with_capacity(cfg.iterations);
    for t in 0..cfg.iterations {
        let (sx, sy) = generate_scene_pair(&spec, &mut rng(cfg, seeds::TRAIN, t as u64))?;
        let report = train_step(&mut encoders, &mut bank, &sx, &sy, &tc, t % cfg.update_every == 0)?;
        let mut ev = Evaluator::new(&bank);
        ev.add_losses(&report);
        let encoded = crate::encoder::Encoded::new(&encoders, &sx, &sy)?;
        ev.add_scene(&encoded, &sx.labels)?;
        metrics.push(ev.finish(t));
        if t % 500 == 0 {
            log::debug!("iter {t}: {}", metrics[t].csv_line());
        }
    }
    let (eval, assignments) = evaluate(&bank, &encoders, &spec, cfg, cfg.eval_scenes)?;
    log::info!(
        "final: purity {:.4} fidelity {:.4} entropy {:.4}",
        eval.cluster_purity,
        eval.style_fidelity,
        eval.item_utilization_entropy
    );
    let outcome = TrainingOutcome {
        spec,
        bank,
        encoders,
        metrics,
        eval,
        assignments,
    };
    if let Some(dir) = out {
        write_artifacts(cfg, &outcome, dir)?;
    }
    Ok(outcome)
}

fn write_artifacts(cfg: &ExperimentConfig, o: &TrainingOutcome, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    json::write_file(&dir.join("resolved_config.json"), cfg)?;
    save_bank(&o.bank, &dir.join("bank.json"))?;
    save_encoders(&o.encoders, &dir.join("encoders.json"))?;
    write_metrics_csv(&dir.join("metrics.csv"), &o.metrics)?;
    json::write_file(&dir.join("eval.json"), &o.eval)?;
    write_assignments_csv(&dir.join("assignments.csv"), &o.assignments)
}

/// The four memory/loss ablation variants of `base`, named `sm+tl`, `sm+cl`, `cm+tl`,
/// `cm+cl`. They differ only in `memory_mode` and `loss`.
pub fn ablation_configs(base: &ExperimentConfig) -> Vec<(&'static str, ExperimentConfig)> {
    [
        ("sm+tl", MemoryMode::Single, LossVariant::Triplet),
        ("sm+cl", MemoryMode::Single, LossVariant::Contrastive),
        ("cm+tl", MemoryMode::ClassAware, LossVariant::Triplet),
        ("cm+cl", MemoryMode::ClassAware, LossVariant::Contrastive),
    ]
    .into_iter()
    .map(|(name, memory_mode, loss)| {
        (
            name,
            ExperimentConfig {
                memory_mode,
                loss,
                ..base.clone()
            },
        )
    })
    .collect()
}

/// Trains every ablation variant; artifacts go to `out/<variant>/` and a summary to
/// `out/ablation.csv`.
pub fn run_ablation(base: &ExperimentConfig, out: Option<&Path>) -> Result<Vec<(&'static str, MetricsRow)>> {
    let mut rows = Vec::new();
    for (name, cfg) in ablation_configs(base) {
        let sub = out.map(|d| d.join(name));
        let o = run_training(&cfg, sub.as_deref())?;
        log::info!("{name}: purity {:.4}", o.eval.cluster_purity);
        rows.push((name, o.eval));
    }
    if let Some(dir) = out {
        let mut text = format!("variant,{}\n", super::METRICS_HEADER);
        for (name, r) in &rows {
            text.push_str(&format!("{name},{}\n", r.csv_line()));
        }
        let path = dir.join("ablation.csv");
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    }
    Ok(rows)
}

/// Loads artifacts and evaluates them on `scenes` held-out scenes.
pub fn evaluate_artifacts(bank: &Path, encoders: &Path, cfg: &ExperimentConfig, scenes: usize) -> Result<MetricsRow> {
    let bank = crate::memory::load_bank(bank)?;
    let enc = crate::encoder::load_encoders(encoders, cfg.content_adam())?;
    if bank.channels() != cfg.channels || enc.content_x.inputs() != cfg.data.input_channels {
        return Err(Error::Validation("artifacts do not match the config's channel counts".into()));
    }
    if bank.layout() != &cfg.layout()? {
        return Err(Error::Validation("bank layout differs from the config's layout".into()));
    }
    let spec = domain_spec(cfg)?;
    Ok(evaluate(&bank, &enc, &spec, cfg, scenes)?.0)
}

