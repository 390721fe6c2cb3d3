//! Paired two-domain feature scenes with class boxes.
//!
//! A scene is an `H x W` grid of positions. Foreground classes occupy random
//! axis-aligned boxes, everything else is background. Content features are shared
//! by the two domains of a pair; style features are drawn per domain.

mod scene;
mod spec;

pub use scene::{cluster_all, cluster_by_class, cluster_features, generate_scene_pair, load_scene, save_scene, BoxAnnotation, FeatureScene};
pub use spec::{DataParams, DomainSpec};
