use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::memory::ClassId;
use crate::numerics::{cosine_unchecked, l2_normalize, Matrix, SeededRng};

/// Parameters of the synthetic world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataParams {
    /// Number of classes including background (class 0).
    pub classes: usize,
    pub input_channels: usize,
    pub height: usize,
    pub width: usize,
    /// Per-coordinate standard deviation of feature noise.
    pub sigma: f64,
    /// Inclusive range of boxes per foreground class.
    pub boxes_per_class: [usize; 2],
    /// Inclusive range of box side lengths.
    pub box_side: [usize; 2],
    /// Weight of a direction shared by all content prototypes, in `[0, 1)`.
    /// 0 gives independent random prototypes.
    pub content_overlap: f64,
    /// Weight of a per-domain direction shared by that domain's style prototypes.
    pub style_overlap: f64,
}

impl Default for DataParams {
    fn default() -> Self {
        DataParams {
            classes: 4,
            input_channels: 16,
            height: 16,
            width: 16,
            sigma: 0.05,
            boxes_per_class: [1, 3],
            box_side: [2, 5],
            content_overlap: 0.0,
            style_overlap: 0.7,
        }
    }
}

impl DataParams {
    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(Error::Config("need at least one foreground class and background".into()));
        }
        if self.input_channels == 0 || self.height == 0 || self.width == 0 {
            return Err(Error::Config("channels and grid sides must be positive".into()));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::Config(format!("sigma must be non-negative, got {}", self.sigma)));
        }
        let [b0, b1] = self.boxes_per_class;
        let [s0, s1] = self.box_side;
        if b0 == 0 || b0 > b1 || s0 == 0 || s0 > s1 {
            return Err(Error::Config("box ranges must be non-empty and start at 1 or more".into()));
        }
        for o in [self.content_overlap, self.style_overlap] {
            if !(0.0..1.0).contains(&o) {
                return Err(Error::Config(format!("overlap must lie in [0, 1), got {o}")));
            }
        }
        Ok(())
    }

    pub fn positions(&self) -> usize {
        self.height * self.width
    }

    pub fn foreground_classes(&self) -> impl Iterator<Item = ClassId> {
        (1..self.classes as u32).map(ClassId)
    }
}

/// Parameters plus the drawn prototypes. Row `k` of each prototype matrix belongs to
/// class `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    pub params: DataParams,
    pub content: Matrix,
    pub style_x: Matrix,
    pub style_y: Matrix,
}

fn random_unit(rng: &mut SeededRng, n: usize) -> Vec<f64> {
    loop {
        let v = l2_normalize(&rng.normal_vec(n));
        if v.iter().any(|&x| x != 0.0) {
            return v;
        }
    }
}

/// `k` unit prototypes `normalize(sqrt(o) g + sqrt(1 - o) r_k)` around a shared direction `g`.
fn prototypes(rng: &mut SeededRng, k: usize, n: usize, overlap: f64) -> Matrix {
    let shared = random_unit(rng, n);
    let a = overlap.sqrt();
    let b = (1.0 - overlap).sqrt();
    let mut m = Matrix::zeros(k, n);
    for i in 0..k {
        let r = random_unit(rng, n);
        let mixed: Vec<f64> = shared.iter().zip(&r).map(|(g, r)| a * g + b * r).collect();
        m.row_mut(i).copy_from_slice(&l2_normalize(&mixed));
    }
    m
}

impl DomainSpec {
    /// Draws content prototypes, then `x` style prototypes, then `y` style prototypes.
    pub fn generate(params: DataParams, rng: &mut SeededRng) -> Result<Self> {
        params.validate()?;
        let (k, n) = (params.classes, params.input_channels);
        let content = prototypes(rng, k, n, params.content_overlap);
        let style_x = prototypes(rng, k, n, params.style_overlap);
        let style_y = prototypes(rng, k, n, params.style_overlap);
        DomainSpec::from_prototypes(params, content, style_x, style_y)
    }

    pub fn from_prototypes(params: DataParams, content: Matrix, style_x: Matrix, style_y: Matrix) -> Result<Self> {
        params.validate()?;
        let (k, n) = (params.classes, params.input_channels);
        for (name, m) in [("content", &content), ("style_x", &style_x), ("style_y", &style_y)] {
            m.ensure_shape(k, n, name)?;
            for i in 0..k {
                let norm = crate::numerics::l2_norm(m.row(i));
                if (norm - 1.0).abs() > 1e-9 {
                    return Err(Error::Config(format!("{name} prototype {i} has norm {norm}")));
                }
                for j in 0..i {
                    if cosine_unchecked(m.row(i), m.row(j)) > 1.0 - 1e-9 {
                        return Err(Error::Config(format!("{name} prototypes {i} and {j} coincide")));
                    }
                }
            }
        }
        Ok(DomainSpec {
            params,
            content,
            style_x,
            style_y,
        })
    }
}
