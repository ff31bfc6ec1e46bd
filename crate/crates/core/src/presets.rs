//! Hand-constructed generator models for synthetic data: a face-like
//! 26-point template with per-state deformations per component, identity
//! measurement maps with configurable noise, and three discrete-structure
//! variants.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::component::ComponentMixture;
use crate::error::Result;
use crate::gauss::{Gaussian, LinearGaussian};
use crate::model::{node_names, HierarchicalModel};
use crate::network::{Cpt, DiscreteNetwork, NodeSpec};
use crate::shape::{Component, ComponentPartition, NormalizationSpec};

/// Which discrete structure the generator uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorPreset {
    /// One state per component, empty graph. Nothing to learn.
    SingleState,
    /// Three states per component, empty graph, non-uniform marginals.
    Independent,
    /// Three states per component with `expression -> z_mouth`,
    /// `expression -> z_eyebrow` and `pose -> z_nose`, strong CPTs.
    ExpressionCoupled,
}

impl GeneratorPreset {
    pub fn name(self) -> &'static str {
        match self {
            GeneratorPreset::SingleState => "single-state",
            GeneratorPreset::Independent => "independent",
            GeneratorPreset::ExpressionCoupled => "expression-coupled",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "single-state" => Some(GeneratorPreset::SingleState),
            "independent" => Some(GeneratorPreset::Independent),
            "expression-coupled" => Some(GeneratorPreset::ExpressionCoupled),
            _ => None,
        }
    }

    pub fn all() -> [GeneratorPreset; 3] {
        [
            GeneratorPreset::SingleState,
            GeneratorPreset::Independent,
            GeneratorPreset::ExpressionCoupled,
        ]
    }
}

/// The neutral 26-point template in normalized units: eye centers at
/// (-0.5, 0) and (0.5, 0), interocular distance 1.
pub fn template_shape() -> Vec<(f64, f64)> {
    vec![
        // eyebrows: left 0-3, right 4-7
        (-0.72, 0.22),
        (-0.57, 0.28),
        (-0.43, 0.28),
        (-0.28, 0.22),
        (0.28, 0.22),
        (0.43, 0.28),
        (0.57, 0.28),
        (0.72, 0.22),
        // eyes: left 8-11, right 12-15 (centroids exactly (-0.5, 0), (0.5, 0))
        (-0.65, 0.0),
        (-0.35, 0.0),
        (-0.5, 0.05),
        (-0.5, -0.05),
        (0.35, 0.0),
        (0.65, 0.0),
        (0.5, 0.05),
        (0.5, -0.05),
        // nose 16-19: top, left nostril, tip, right nostril
        (0.0, -0.1),
        (-0.12, -0.42),
        (0.0, -0.5),
        (0.12, -0.42),
        // mouth 20-25: left corner, top-left, top-right, right corner,
        // bottom-right, bottom-left
        (-0.25, -0.85),
        (-0.1, -0.78),
        (0.1, -0.78),
        (0.25, -0.85),
        (0.1, -0.92),
        (-0.1, -0.92),
    ]
}

/// Per-state coordinate offsets (relative to the template section) for one
/// component; `offsets[z]` has one `(dx, dy)` per point of the component.
fn state_offsets(c: Component, num_states: usize) -> Vec<Vec<(f64, f64)>> {
    let neutral = |n: usize| vec![(0.0, 0.0); n];
    let mut out = Vec::with_capacity(num_states);
    match c {
        Component::Eyebrow => {
            out.push(neutral(8));
            if num_states > 1 {
                // raised
                out.push(vec![(0.0, 0.12); 8]);
            }
            if num_states > 2 {
                // furrowed: lowered, inner ends pulled together
                let mut v = vec![(0.0, -0.07); 8];
                v[3] = (0.05, -0.10);
                v[4] = (-0.05, -0.10);
                out.push(v);
            }
        }
        Component::Eye => {
            out.push(neutral(8));
            if num_states > 1 {
                // wide open: lids apart, corners slightly out
                out.push(vec![
                    (-0.03, 0.0),
                    (0.03, 0.0),
                    (0.0, 0.05),
                    (0.0, -0.05),
                    (-0.03, 0.0),
                    (0.03, 0.0),
                    (0.0, 0.05),
                    (0.0, -0.05),
                ]);
            }
            if num_states > 2 {
                // closed: lids collapse toward the eye axis
                out.push(vec![
                    (0.0, 0.0),
                    (0.0, 0.0),
                    (0.0, -0.045),
                    (0.0, 0.045),
                    (0.0, 0.0),
                    (0.0, 0.0),
                    (0.0, -0.045),
                    (0.0, 0.045),
                ]);
            }
        }
        Component::Nose => {
            out.push(neutral(4));
            if num_states > 1 {
                out.push(vec![(-0.11, 0.0); 4]); // turned left
            }
            if num_states > 2 {
                out.push(vec![(0.11, 0.0); 4]); // turned right
            }
        }
        Component::Mouth => {
            out.push(neutral(6));
            if num_states > 1 {
                // open
                out.push(vec![
                    (-0.05, 0.0),
                    (0.0, 0.08),
                    (0.0, 0.08),
                    (0.05, 0.0),
                    (0.0, -0.14),
                    (0.0, -0.14),
                ]);
            }
            if num_states > 2 {
                // smile
                out.push(vec![
                    (-0.09, 0.10),
                    (0.0, 0.03),
                    (0.0, 0.03),
                    (0.09, 0.10),
                    (0.0, 0.06),
                    (0.0, 0.06),
                ]);
            }
        }
    }
    assert_eq!(out.len(), num_states);
    out
}

/// SPD covariance `scale^2 (I + 0.3 u u')` with a fixed alternating-sign
/// unit vector `u`, giving every state a mildly correlated full matrix.
fn shape_cov(dim: usize, scale: f64) -> DMatrix<f64> {
    let u = DVector::from_fn(dim, |i, _| if i % 2 == 0 { 1.0 } else { -1.0 })
        / (dim as f64).sqrt();
    (DMatrix::identity(dim, dim) + &u * u.transpose() * 0.3) * scale * scale
}

fn build_component(c: Component, partition: &ComponentPartition, k: usize, noise: f64) -> Result<ComponentMixture> {
    let template = template_shape();
    let idx = partition.indices(c);
    let d = 2 * idx.len();
    let offsets = state_offsets(c, k);
    let scales = [0.03, 0.035, 0.032, 0.03, 0.034, 0.031];
    let mut shapes = Vec::with_capacity(k);
    let mut meas = Vec::with_capacity(k);
    for (z, offs) in offsets.iter().enumerate() {
        let mut mean = DVector::zeros(d);
        for (slot, &i) in idx.iter().enumerate() {
            mean[2 * slot] = template[i].0 + offs[slot].0;
            mean[2 * slot + 1] = template[i].1 + offs[slot].1;
        }
        shapes.push(Gaussian::new(mean, shape_cov(d, scales[z % scales.len()]))?);
        meas.push(LinearGaussian::additive_noise(
            DMatrix::identity(d, d) * noise * noise,
        )?);
    }
    ComponentMixture::new(vec![0.0; k], shapes, meas)
}

fn nodes_for(k: [usize; 4], e_card: usize, p_card: usize) -> Vec<NodeSpec> {
    node_names()
        .iter()
        .enumerate()
        .map(|(i, name)| NodeSpec {
            name: name.to_string(),
            cardinality: match i {
                0 => e_card,
                1 => p_card,
                _ => k[i - 2],
            },
        })
        .collect()
}

/// Builds a generator model. `noise` is the per-coordinate measurement noise
/// standard deviation (normalized units).
pub fn build(preset: GeneratorPreset, noise: f64) -> Result<HierarchicalModel> {
    let partition = ComponentPartition::default_26();
    let normalization = NormalizationSpec::default_26();
    let expressions = vec!["neutral".to_string(), "happy".to_string(), "surprised".to_string()];
    let poses = vec!["frontal".to_string(), "left".to_string(), "right".to_string()];

    let k = match preset {
        GeneratorPreset::SingleState => [1usize; 4],
        _ => [3usize; 4],
    };
    let nodes = nodes_for(k, expressions.len(), poses.len());

    let network = match preset {
        GeneratorPreset::SingleState => {
            let marginals = vec![
                vec![1.0 / 3.0; 3],
                vec![1.0 / 3.0; 3],
                vec![1.0],
                vec![1.0],
                vec![1.0],
                vec![1.0],
            ];
            DiscreteNetwork::fully_disconnected(nodes, marginals)?
        }
        GeneratorPreset::Independent => {
            let marginals = vec![
                vec![0.35, 0.35, 0.30],
                vec![0.4, 0.3, 0.3],
                vec![0.4, 0.3, 0.3],
                vec![0.5, 0.25, 0.25],
                vec![0.34, 0.33, 0.33],
                vec![0.45, 0.3, 0.25],
            ];
            DiscreteNetwork::fully_disconnected(nodes, marginals)?
        }
        GeneratorPreset::ExpressionCoupled => {
            let mut parents = vec![Vec::new(); 6];
            parents[2] = vec![0]; // expression -> z_eyebrow
            parents[4] = vec![1]; // pose -> z_nose
            parents[5] = vec![0]; // expression -> z_mouth
            let diag = |major: f64| {
                let minor = (1.0 - major) / 2.0;
                vec![
                    major, minor, minor, //
                    minor, major, minor, //
                    minor, minor, major,
                ]
            };
            let cpts = vec![
                Cpt::from_row(vec![0.35, 0.35, 0.30])?,
                Cpt::from_row(vec![0.4, 0.3, 0.3])?,
                Cpt::new(3, diag(0.85))?,
                Cpt::from_row(vec![0.5, 0.25, 0.25])?,
                Cpt::new(3, diag(0.9))?,
                Cpt::new(3, diag(0.9))?,
            ];
            DiscreteNetwork::new(nodes, parents, cpts)?
        }
    };

    let mut components = Vec::with_capacity(4);
    for &c in &Component::ALL {
        let mut cm = build_component(c, &partition, k[c.index()], noise)?;
        // Keep the detached prior consistent with the network marginal.
        let marginal = network.conditional(2 + c.index(), &[])?;
        cm = ComponentMixture::new(
            marginal.iter().map(|p| p.max(1e-12).ln()).collect(),
            (0..cm.num_states()).map(|z| cm.shape_state(z).clone()).collect(),
            (0..cm.num_states()).map(|z| cm.measurement_state(z).clone()).collect(),
        )?;
        components.push(cm);
    }

    let mut metadata = BTreeMap::new();
    metadata.insert("generator_preset".to_string(), preset.name().to_string());
    metadata.insert("measurement_noise".to_string(), format!("{noise}"));

    HierarchicalModel::new(
        network,
        components,
        partition,
        normalization,
        expressions,
        poses,
        metadata,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::z_node;

    #[test]
    fn presets_build_and_validate() {
        for preset in GeneratorPreset::all() {
            let m = build(preset, 0.08).unwrap();
            assert_eq!(m.num_points(), 26);
            assert_eq!(m.expression_labels().len(), 3);
        }
    }

    #[test]
    fn coupled_preset_has_expected_edges() {
        let m = build(GeneratorPreset::ExpressionCoupled, 0.08).unwrap();
        let edges = m.network().edges();
        assert_eq!(
            edges,
            vec![
                (0, z_node(Component::Eyebrow)),
                (0, z_node(Component::Mouth)),
                (1, z_node(Component::Nose)),
            ]
        );
    }

    #[test]
    fn template_eye_centers_are_normalized() {
        let shape = crate::shape::LandmarkSet::new(template_shape()).unwrap();
        let spec = NormalizationSpec::default_26();
        let d = spec.interocular(&shape);
        assert!((d - 1.0).abs() < 1e-12);
    }

    #[test]
    fn state_means_are_well_separated() {
        // Cluster recovery depends on distinct per-state means.
        let m = build(GeneratorPreset::ExpressionCoupled, 0.08).unwrap();
        for &c in &Component::ALL {
            let cm = m.component(c);
            for a in 0..cm.num_states() {
                for b in (a + 1)..cm.num_states() {
                    let dist = (cm.shape_state(a).mean() - cm.shape_state(b).mean()).norm();
                    assert!(dist > 0.08, "{c} states {a},{b} separated by {dist}");
                }
            }
        }
    }
}
