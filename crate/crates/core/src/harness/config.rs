use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::encoder::TrainConfig;
use crate::error::{Error, Result};
use crate::memory::{ClassId, MemoryLayout};
use crate::numerics::AdamParams;
use crate::objectives::{ContrastiveConfig, LossVariant};
use crate::synthdata::DataParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemoryMode {
    ClassAware,
    Single,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassItems {
    pub class: ClassId,
    pub count: usize,
}

/// Every knob of a run. Files must spell out every key unless they name a `preset`,
/// in which case the preset supplies the keys the file leaves out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub memory_mode: MemoryMode,
    /// Items per class in partition order. In single-memory mode only the total matters.
    pub class_items: Vec<ClassItems>,
    pub channels: usize,
    pub temperature: f64,
    pub lambda_key: f64,
    pub lambda_value: f64,
    pub lambda_rec: f64,
    pub loss: LossVariant,
    pub triplet_margin: f64,
    pub learning_rate_content: f64,
    pub learning_rate_style: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    /// Standard deviation of the Gaussian encoder weight initialization.
    pub init_std: f64,
    pub iterations: usize,
    /// Memory is written on iterations `t` with `t % update_every == 0`.
    pub update_every: usize,
    pub seed: u64,
    pub eval_scenes: usize,
    pub data: DataParams,
    pub output_dir: PathBuf,
}

pub const PRESETS: [&str; 2] = ["toy", "paper"];

/// Named defaults.
///
/// * `toy`: three foreground classes with 3/2/2 items plus 3 background items
///   (N = 10), C = 16, 16x16 scenes with 16 input channels, 2000 iterations.
/// * `paper`: 5/3/2 foreground items plus 10 background items (N = 20), C = 256;
///   everything else as `toy`.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let items = |v: &[(u32, usize)]| -> Vec<ClassItems> {
        v.iter()
            .map(|&(c, n)| ClassItems {
                class: ClassId(c),
                count: n,
            })
            .collect()
    };
    let toy = ExperimentConfig {
        memory_mode: MemoryMode::ClassAware,
        class_items: items(&[(1, 3), (2, 2), (3, 2), (0, 3)]),
        channels: 16,
        temperature: 0.1,
        lambda_key: 1.0,
        lambda_value: 0.5,
        lambda_rec: 1.0,
        loss: LossVariant::Contrastive,
        triplet_margin: 1.0,
        learning_rate_content: 1e-3,
        learning_rate_style: 1e-3,
        adam_beta1: 0.9,
        adam_beta2: 0.999,
        adam_epsilon: 1e-8,
        init_std: 0.001,
        iterations: 2000,
        update_every: 1,
        seed: 7,
        eval_scenes: 100,
        data: DataParams::default(),
        output_dir: PathBuf::from("runs/toy"),
    };
    match name {
        "toy" => Ok(toy),
        "paper" => Ok(ExperimentConfig {
            class_items: items(&[(1, 5), (2, 3), (3, 2), (0, 10)]),
            channels: 256,
            output_dir: PathBuf::from("runs/paper"),
            ..toy
        }),
        other => Err(Error::Config(format!(
            "unknown preset `{other}` (known: {})",
            PRESETS.join(", ")
        ))),
    }
}

fn merge(base: &mut Map<String, Value>, overlay: Map<String, Value>) {
    for (k, v) in overlay {
        match (base.get_mut(&k), v) {
            (Some(Value::Object(b)), Value::Object(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Resolves a parsed config document: expands `preset` (if any) and checks the result.
pub fn resolve_config(doc: Value, context: &str) -> Result<ExperimentConfig> {
    let Value::Object(mut map) = doc else {
        return Err(Error::Parse {
            context: context.into(),
            message: "config must be a JSON object".into(),
        });
    };
    let resolved = match map.remove("preset") {
        None => Value::Object(map),
        Some(Value::String(name)) => {
            let base = serde_json::to_value(preset(&name)?).expect("config serializes");
            let Value::Object(mut base) = base else { unreachable!() };
            let overridden: Vec<&String> = map.keys().collect();
            log::info!("config {context}: expanding preset `{name}`, file overrides {overridden:?}");
            merge(&mut base, map);
            Value::Object(base)
        }
        Some(other) => {
            return Err(Error::Parse {
                context: context.into(),
                message: format!("`preset` must be a string, got {other}"),
            })
        }
    };
    let cfg: ExperimentConfig = serde_json::from_value(resolved).map_err(|e| Error::Parse {
        context: context.into(),
        message: e.to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let ctx = path.display().to_string();
    let doc: Value = crate::json::from_str(&text, &ctx)?;
    resolve_config(doc, &ctx)
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.contrastive().validate()?;
        self.data.validate()?;
        let bad = |m: String| Err(Error::Config(m));
        if self.channels == 0 {
            return bad("channels must be positive".into());
        }
        if !(self.lambda_rec >= 0.0) {
            return bad("lambda_rec must be non-negative".into());
        }
        if !(self.triplet_margin >= 0.0) {
            return bad("triplet_margin must be non-negative".into());
        }
        for (name, lr) in [
            ("learning_rate_content", self.learning_rate_content),
            ("learning_rate_style", self.learning_rate_style),
        ] {
            if !(lr > 0.0 && lr.is_finite()) {
                return bad(format!("{name} must be positive"));
            }
        }
        for (name, b) in [("adam_beta1", self.adam_beta1), ("adam_beta2", self.adam_beta2)] {
            if !(0.0..1.0).contains(&b) {
                return bad(format!("{name} must lie in [0, 1)"));
            }
        }
        if !(self.adam_epsilon > 0.0) || !(self.init_std >= 0.0) {
            return bad("adam_epsilon must be positive and init_std non-negative".into());
        }
        if self.update_every == 0 || self.eval_scenes == 0 {
            return bad("update_every and eval_scenes must be at least 1".into());
        }
        let layout = self.class_layout()?;
        if self.memory_mode == MemoryMode::ClassAware {
            for k in 0..self.data.classes as u32 {
                layout.partition(ClassId(k)).map_err(|_| {
                    Error::Config(format!("class {k} occurs in scenes but has no memory items"))
                })?;
            }
        }
        if self.loss == LossVariant::Triplet && layout.len() < 2 {
            return bad("triplet loss needs at least two memory items".into());
        }
        Ok(())
    }

    fn class_layout(&self) -> Result<MemoryLayout> {
        let entries: Vec<_> = self.class_items.iter().map(|c| (c.class, c.count)).collect();
        MemoryLayout::new(&entries).map_err(|e| Error::Config(e.to_string()))
    }

    /// Per-class layout in class-aware mode, one shared partition otherwise.
    pub fn layout(&self) -> Result<MemoryLayout> {
        let classes = self.class_layout()?;
        match self.memory_mode {
            MemoryMode::ClassAware => Ok(classes),
            MemoryMode::Single => MemoryLayout::single(classes.len()),
        }
    }

    pub fn contrastive(&self) -> ContrastiveConfig {
        ContrastiveConfig {
            temperature: self.temperature,
            lambda_key: self.lambda_key,
            lambda_value: self.lambda_value,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            contrastive: self.contrastive(),
            lambda_rec: self.lambda_rec,
            loss: self.loss,
            triplet_margin: self.triplet_margin,
        }
    }

    fn adam(&self, lr: f64) -> AdamParams {
        AdamParams {
            learning_rate: lr,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            epsilon: self.adam_epsilon,
        }
    }

    pub fn content_adam(&self) -> AdamParams {
        self.adam(self.learning_rate_content)
    }

    pub fn style_adam(&self) -> AdamParams {
        self.adam(self.learning_rate_style)
    }
}
