use std::collections::BTreeMap;
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::json;
use crate::memory::{ClassCluster, ClassId};
use crate::numerics::{Matrix, SeededRng};

use super::DomainSpec;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxAnnotation {
    pub class: ClassId,
    pub rows: Range<usize>,
    pub cols: Range<usize>,
}

/// One domain's features over an `H x W` grid, positions in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureScene {
    pub height: usize,
    pub width: usize,
    pub content: Matrix,
    pub style: Matrix,
    pub labels: Vec<ClassId>,
    /// In placement order; later boxes cover earlier ones.
    pub boxes: Vec<BoxAnnotation>,
}

impl FeatureScene {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

fn place_boxes(spec: &DomainSpec, rng: &mut SeededRng) -> Result<Vec<BoxAnnotation>> {
    let p = &spec.params;
    let [s0, s1] = p.box_side;
    if s0 > p.height || s0 > p.width {
        return Err(Error::Generation(format!(
            "a {s0}x{s0} box does not fit a {}x{} grid",
            p.height, p.width
        )));
    }
    let mut boxes = Vec::new();
    for class in p.foreground_classes() {
        let count = rng.int_inclusive(p.boxes_per_class[0], p.boxes_per_class[1]);
        for _ in 0..count {
            let h = rng.int_inclusive(s0, s1.min(p.height));
            let w = rng.int_inclusive(s0, s1.min(p.width));
            let top = rng.int_inclusive(0, p.height - h);
            let left = rng.int_inclusive(0, p.width - w);
            boxes.push(BoxAnnotation {
                class,
                rows: top..top + h,
                cols: left..left + w,
            });
        }
    }
    Ok(boxes)
}

fn rasterize(boxes: &[BoxAnnotation], height: usize, width: usize) -> Vec<ClassId> {
    let mut labels = vec![ClassId::BACKGROUND; height * width];
    for b in boxes {
        for r in b.rows.clone() {
            for c in b.cols.clone() {
                labels[r * width + c] = b.class;
            }
        }
    }
    labels
}

fn noisy(proto: &[f64], sigma: f64, rng: &mut SeededRng, out: &mut [f64]) {
    for (o, m) in out.iter_mut().zip(proto) {
        *o = m + sigma * rng.normal();
    }
}

/// Draws a paired scene: boxes first, then for every position its shared content
/// sample followed by the `x` and `y` style samples.
pub fn generate_scene_pair(spec: &DomainSpec, rng: &mut SeededRng) -> Result<(FeatureScene, FeatureScene)> {
    let p = &spec.params;
    let boxes = place_boxes(spec, rng)?;
    let labels = rasterize(&boxes, p.height, p.width);
    let n = p.input_channels;
    let total = labels.len();
    let mut content = Matrix::zeros(total, n);
    let mut style_x = Matrix::zeros(total, n);
    let mut style_y = Matrix::zeros(total, n);
    for (i, label) in labels.iter().enumerate() {
        let k = label.0 as usize;
        noisy(spec.content.row(k), p.sigma, rng, content.row_mut(i));
        noisy(spec.style_x.row(k), p.sigma, rng, style_x.row_mut(i));
        noisy(spec.style_y.row(k), p.sigma, rng, style_y.row_mut(i));
    }
    let x = FeatureScene {
        height: p.height,
        width: p.width,
        content: content.clone(),
        style: style_x,
        labels: labels.clone(),
        boxes: boxes.clone(),
    };
    let y = FeatureScene {
        height: p.height,
        width: p.width,
        content,
        style: style_y,
        labels,
        boxes,
    };
    Ok((x, y))
}

/// Groups rows of `content`/`style` by label, one cluster per class present, in
/// ascending class order. Positions keep their original order.
pub fn cluster_features(labels: &[ClassId], content: &Matrix, style: &Matrix) -> Vec<ClassCluster> {
    let mut groups: BTreeMap<ClassId, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        groups.entry(l).or_default().push(i);
    }
    groups
        .into_iter()
        .map(|(class, positions)| ClassCluster {
            class,
            content: content.select_rows(&positions),
            style: style.select_rows(&positions),
            positions,
        })
        .collect()
}

pub fn cluster_by_class(scene: &FeatureScene) -> Vec<ClassCluster> {
    cluster_features(&scene.labels, &scene.content, &scene.style)
}

/// The whole scene as one cluster tagged `class`.
pub fn cluster_all(content: &Matrix, style: &Matrix, class: ClassId) -> ClassCluster {
    ClassCluster {
        class,
        content: content.clone(),
        style: style.clone(),
        positions: (0..content.rows()).collect(),
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneFile {
    version: u32,
    height: usize,
    width: usize,
    labels: Vec<ClassId>,
    boxes: Vec<BoxAnnotation>,
    content: Matrix,
    style: Matrix,
}

pub fn save_scene(scene: &FeatureScene, path: &Path) -> Result<()> {
    json::write_file(
        path,
        &SceneFile {
            version: 1,
            height: scene.height,
            width: scene.width,
            labels: scene.labels.clone(),
            boxes: scene.boxes.clone(),
            content: scene.content.clone(),
            style: scene.style.clone(),
        },
    )
}

pub fn load_scene(path: &Path) -> Result<FeatureScene> {
    let f: SceneFile = json::read_file(path)?;
    let p = f.height * f.width;
    if f.version != 1 {
        return Err(Error::Validation(format!("unsupported scene version {}", f.version)));
    }
    if f.labels.len() != p || f.content.rows() != p || f.style.rows() != p {
        return Err(Error::Validation(format!(
            "scene of {}x{} needs {p} labels and feature rows",
            f.height, f.width
        )));
    }
    if rasterize(&f.boxes, f.height, f.width) != f.labels {
        return Err(Error::Validation("labels disagree with boxes".into()));
    }
    Ok(FeatureScene {
        height: f.height,
        width: f.width,
        content: f.content,
        style: f.style,
        labels: f.labels,
        boxes: f.boxes,
    })
}
