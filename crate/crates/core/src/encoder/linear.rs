use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::json;
use crate::numerics::{adam_step, AdamParams, AdamState, Matrix, SeededRng};

/// `y = x W^T + b`, row by row, with its own Adam state.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearEncoder {
    weight: Matrix,
    bias: Matrix,
    adam_weight: AdamState,
    adam_bias: AdamState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderGrads {
    pub weight: Matrix,
    pub bias: Matrix,
    pub input: Matrix,
}

impl LinearEncoder {
    /// Weights drawn from `N(0, init_std^2)`, zero bias.
    pub fn new(inputs: usize, outputs: usize, init_std: f64, adam: AdamParams, rng: &mut SeededRng) -> Self {
        let weight = Matrix::from_fn(outputs, inputs, |_, _| init_std * rng.normal());
        LinearEncoder::from_parts(weight, Matrix::zeros(1, outputs), adam).expect("shapes agree")
    }

    pub fn from_parts(weight: Matrix, bias: Matrix, adam: AdamParams) -> Result<Self> {
        bias.ensure_shape(1, weight.rows(), "encoder bias")?;
        if !weight.is_finite() || !bias.is_finite() {
            return Err(Error::Validation("encoder parameters must be finite".into()));
        }
        Ok(LinearEncoder {
            adam_weight: AdamState::new(weight.rows(), weight.cols(), adam),
            adam_bias: AdamState::new(1, weight.rows(), adam),
            weight,
            bias,
        })
    }

    pub fn inputs(&self) -> usize {
        self.weight.cols()
    }

    pub fn outputs(&self) -> usize {
        self.weight.rows()
    }

    pub fn weight(&self) -> &Matrix {
        &self.weight
    }

    pub fn bias(&self) -> &[f64] {
        self.bias.row(0)
    }

    pub fn forward(&self, input: &Matrix) -> Result<Matrix> {
        if input.cols() != self.inputs() {
            return Err(Error::shape(format!(
                "encoder takes {} channels, input has {}",
                self.inputs(),
                input.cols()
            )));
        }
        let mut out = Matrix::zeros(input.rows(), self.outputs());
        for p in 0..input.rows() {
            let x = input.row(p);
            for (o, (w, b)) in out.row_mut(p).iter_mut().zip(self.weight.iter_rows().zip(self.bias.row(0))) {
                *o = b + crate::numerics::dot(w, x);
            }
        }
        Ok(out)
    }

    pub fn backward(&self, input: &Matrix, upstream: &Matrix) -> Result<EncoderGrads> {
        input.ensure_shape(input.rows(), self.inputs(), "encoder input")?;
        upstream.ensure_shape(input.rows(), self.outputs(), "encoder upstream")?;
        let mut weight = Matrix::zeros(self.outputs(), self.inputs());
        let mut bias = Matrix::zeros(1, self.outputs());
        let mut grad_in = Matrix::zeros(input.rows(), self.inputs());
        for p in 0..input.rows() {
            let x = input.row(p);
            let g = upstream.row(p);
            for (o, &go) in g.iter().enumerate() {
                if go == 0.0 {
                    continue;
                }
                bias[(0, o)] += go;
                for (wg, xi) in weight.row_mut(o).iter_mut().zip(x) {
                    *wg += go * xi;
                }
                for (gi, w) in grad_in.row_mut(p).iter_mut().zip(self.weight.row(o)) {
                    *gi += go * w;
                }
            }
        }
        Ok(EncoderGrads {
            weight,
            bias,
            input: grad_in,
        })
    }

    pub fn apply(&mut self, grads: &EncoderGrads) -> Result<()> {
        adam_step(&mut self.weight, &grads.weight, &mut self.adam_weight)?;
        adam_step(&mut self.bias, &grads.bias, &mut self.adam_bias)?;
        Ok(())
    }

    pub(crate) fn params_mut(&mut self) -> [&mut Matrix; 2] {
        [&mut self.weight, &mut self.bias]
    }

    pub(crate) fn params(&self) -> [&Matrix; 2] {
        [&self.weight, &self.bias]
    }
}

/// The four encoders: content and style for each domain.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderSet {
    pub content_x: LinearEncoder,
    pub content_y: LinearEncoder,
    pub style_x: LinearEncoder,
    pub style_y: LinearEncoder,
}

/// Parameter gradients for an [`EncoderSet`], same field order.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderSetGrads {
    pub content_x: EncoderGrads,
    pub content_y: EncoderGrads,
    pub style_x: EncoderGrads,
    pub style_y: EncoderGrads,
}

impl EncoderSetGrads {
    /// Weight then bias of each encoder, in field order.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for g in [&self.content_x, &self.content_y, &self.style_x, &self.style_y] {
            out.extend_from_slice(g.weight.as_slice());
            out.extend_from_slice(g.bias.as_slice());
        }
        out
    }
}

impl EncoderSet {
    /// Draws content_x, content_y, style_x, style_y in that order.
    pub fn new(
        inputs: usize,
        outputs: usize,
        init_std: f64,
        content_adam: AdamParams,
        style_adam: AdamParams,
        rng: &mut SeededRng,
    ) -> Self {
        EncoderSet {
            content_x: LinearEncoder::new(inputs, outputs, init_std, content_adam, rng),
            content_y: LinearEncoder::new(inputs, outputs, init_std, content_adam, rng),
            style_x: LinearEncoder::new(inputs, outputs, init_std, style_adam, rng),
            style_y: LinearEncoder::new(inputs, outputs, init_std, style_adam, rng),
        }
    }

    fn all(&self) -> [&LinearEncoder; 4] {
        [&self.content_x, &self.content_y, &self.style_x, &self.style_y]
    }

    fn all_mut(&mut self) -> [&mut LinearEncoder; 4] {
        [&mut self.content_x, &mut self.content_y, &mut self.style_x, &mut self.style_y]
    }

    pub fn apply(&mut self, grads: &EncoderSetGrads) -> Result<()> {
        let gs = [&grads.content_x, &grads.content_y, &grads.style_x, &grads.style_y];
        for (enc, g) in self.all_mut().into_iter().zip(gs) {
            enc.apply(g)?;
        }
        Ok(())
    }

    /// All parameters in [`EncoderSetGrads::flatten`] order.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for e in self.all() {
            for p in e.params() {
                out.extend_from_slice(p.as_slice());
            }
        }
        out
    }

    pub fn set_flat_params(&mut self, values: &[f64]) -> Result<()> {
        let total: usize = self.all().iter().map(|e| e.params().iter().map(|p| p.as_slice().len()).sum::<usize>()).sum();
        if values.len() != total {
            return Err(Error::shape(format!("{} values for {total} parameters", values.len())));
        }
        let mut at = 0;
        for e in self.all_mut() {
            for p in e.params_mut() {
                let n = p.as_slice().len();
                p.as_mut_slice().copy_from_slice(&values[at..at + n]);
                at += n;
            }
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.all().iter().all(|e| e.weight.is_finite() && e.bias.is_finite())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EncoderFile {
    inputs: usize,
    outputs: usize,
    weight: Matrix,
    bias: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EncoderSetFile {
    version: u32,
    content_x: EncoderFile,
    content_y: EncoderFile,
    style_x: EncoderFile,
    style_y: EncoderFile,
}

impl From<&LinearEncoder> for EncoderFile {
    fn from(e: &LinearEncoder) -> Self {
        EncoderFile {
            inputs: e.inputs(),
            outputs: e.outputs(),
            weight: e.weight.clone(),
            bias: e.bias().to_vec(),
        }
    }
}

fn encoder_from_file(name: &str, f: EncoderFile, adam: AdamParams) -> Result<LinearEncoder> {
    if f.weight.shape() != (f.outputs, f.inputs) && !(f.outputs == 0 || f.inputs == 0) {
        return Err(Error::Validation(format!(
            "{name}: weight is {}x{}, declared {}x{}",
            f.weight.rows(),
            f.weight.cols(),
            f.outputs,
            f.inputs
        )));
    }
    let bias = Matrix::from_vec(1, f.bias.len(), f.bias).map_err(|e| Error::Validation(format!("{name}: {e}")))?;
    LinearEncoder::from_parts(f.weight, bias, adam).map_err(|e| Error::Validation(format!("{name}: {e}")))
}

/// Writes weights and biases (not optimizer state) in the bank's JSON conventions.
pub fn save_encoders(set: &EncoderSet, path: &Path) -> Result<()> {
    json::write_file(
        path,
        &EncoderSetFile {
            version: 1,
            content_x: (&set.content_x).into(),
            content_y: (&set.content_y).into(),
            style_x: (&set.style_x).into(),
            style_y: (&set.style_y).into(),
        },
    )
}

/// Loads an encoder checkpoint; optimizer state starts fresh with `adam`.
pub fn load_encoders(path: &Path, adam: AdamParams) -> Result<EncoderSet> {
    let f: EncoderSetFile = json::read_file(path)?;
    if f.version != 1 {
        return Err(Error::Validation(format!("unsupported encoder version {}", f.version)));
    }
    let set = EncoderSet {
        content_x: encoder_from_file("content_x", f.content_x, adam)?,
        content_y: encoder_from_file("content_y", f.content_y, adam)?,
        style_x: encoder_from_file("style_x", f.style_x, adam)?,
        style_y: encoder_from_file("style_y", f.style_y, adam)?,
    };
    let c = set.content_x.outputs();
    if set.all().iter().any(|e| e.outputs() != c) {
        return Err(Error::Validation("encoders disagree on output width".into()));
    }
    Ok(set)
}
