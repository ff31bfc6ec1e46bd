//! Model file serialization: a single self-describing JSON document with an
//! exact decimal round trip (`load(save(m)) == m`).
//!
//! Conventions, also documented in the repository README:
//! - matrices are stored row-major;
//! - CPT rows are indexed by the parent configuration with parents sorted
//!   ascending by node index and the last parent varying fastest;
//! - node order is `expression, pose, z_eyebrow, z_eye, z_nose, z_mouth`.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::component::ComponentMixture;
use crate::error::{Error, Result};
use crate::gauss::{Gaussian, LinearGaussian};
use crate::model::HierarchicalModel;
use crate::network::{Cpt, DiscreteNetwork, NodeSpec};
use crate::shape::{Component, ComponentPartition, NormalizationSpec};

pub const MODEL_FORMAT: &str = "landmark-hierarchical-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    expression_labels: Vec<String>,
    pose_labels: Vec<String>,
    partition: ComponentPartition,
    normalization: NormalizationSpec,
    network: NetworkFile,
    components: Vec<ComponentFile>,
    metadata: BTreeMap<String, String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct NetworkFile {
    nodes: Vec<NodeFile>,
    /// `(parent, child)` pairs, sorted.
    edges: Vec<(usize, usize)>,
    cpts: Vec<CptFile>,
}

#[derive(Debug, Serialize, Deserialize)]
struct NodeFile {
    name: String,
    cardinality: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct CptFile {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ComponentFile {
    name: String,
    log_prior: Vec<f64>,
    states: Vec<StateFile>,
}

#[derive(Debug, Serialize, Deserialize)]
struct StateFile {
    mean: Vec<f64>,
    cov: Vec<f64>,
    meas_offset: Vec<f64>,
    meas_gain: Vec<f64>,
    meas_noise: Vec<f64>,
}

fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

fn matrix_from_rows(rows: usize, cols: usize, values: &[f64], what: &'static str) -> Result<DMatrix<f64>> {
    if values.len() != rows * cols {
        return Err(Error::ParseError {
            location: what.to_string(),
            message: format!("expected {} values, got {}", rows * cols, values.len()),
        });
    }
    Ok(DMatrix::from_row_slice(rows, cols, values))
}

/// The exact serialized form of a model.
pub fn model_to_string(model: &HierarchicalModel) -> String {
    let net = model.network();
    let network = NetworkFile {
        nodes: net
            .nodes()
            .iter()
            .map(|s| NodeFile {
                name: s.name.clone(),
                cardinality: s.cardinality,
            })
            .collect(),
        edges: net.edges(),
        cpts: (0..net.num_nodes())
            .map(|v| CptFile {
                rows: net.cpt(v).rows(),
                cols: net.cpt(v).cols(),
                values: net.cpt(v).values().to_vec(),
            })
            .collect(),
    };
    let components = Component::ALL
        .iter()
        .map(|&c| {
            let cm = model.component(c);
            ComponentFile {
                name: c.name().to_string(),
                log_prior: cm.log_prior().to_vec(),
                states: (0..cm.num_states())
                    .map(|z| {
                        let g = cm.shape_state(z);
                        let m = cm.measurement_state(z);
                        StateFile {
                            mean: g.mean().iter().copied().collect(),
                            cov: matrix_to_rows(g.cov()),
                            meas_offset: m.offset().iter().copied().collect(),
                            meas_gain: matrix_to_rows(m.gain()),
                            meas_noise: matrix_to_rows(m.noise_cov()),
                        }
                    })
                    .collect(),
            }
        })
        .collect();
    let file = ModelFile {
        format: MODEL_FORMAT.to_string(),
        version: MODEL_VERSION,
        expression_labels: model.expression_labels().to_vec(),
        pose_labels: model.pose_labels().to_vec(),
        partition: model.partition().clone(),
        normalization: model.normalization().clone(),
        network,
        components,
        metadata: model.metadata().clone(),
    };
    let mut text = serde_json::to_string_pretty(&file).expect("model serialization");
    text.push('\n');
    text
}

pub fn save_model(model: &HierarchicalModel, path: &Path) -> Result<()> {
    let text = model_to_string(model);
    let mut f = fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    f.write_all(text.as_bytes())
        .map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn model_from_str(text: &str) -> Result<HierarchicalModel> {
    let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::ParseError {
        location: "model file".into(),
        message: e.to_string(),
    })?;
    if file.format != MODEL_FORMAT {
        return Err(Error::ParseError {
            location: "model file".into(),
            message: format!("unknown format tag `{}`", file.format),
        });
    }
    if file.version != MODEL_VERSION {
        return Err(Error::ParseError {
            location: "model file".into(),
            message: format!("unsupported version {}", file.version),
        });
    }
    if file.network.nodes.len() != file.network.cpts.len() {
        return Err(Error::ParseError {
            location: "network".into(),
            message: "node and CPT counts differ".into(),
        });
    }

    let n = file.network.nodes.len();
    let mut parents: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(u, v) in &file.network.edges {
        if u >= n || v >= n {
            return Err(Error::ParseError {
                location: "network edges".into(),
                message: format!("edge ({u}, {v}) out of range"),
            });
        }
        parents[v].push(u);
    }
    let nodes: Vec<NodeSpec> = file
        .network
        .nodes
        .iter()
        .map(|s| NodeSpec {
            name: s.name.clone(),
            cardinality: s.cardinality,
        })
        .collect();
    let cpts = file
        .network
        .cpts
        .iter()
        .enumerate()
        .map(|(v, c)| {
            if c.values.len() != c.rows * c.cols {
                return Err(Error::ParseError {
                    location: format!("cpt {v}"),
                    message: format!(
                        "expected {} values, got {}",
                        c.rows * c.cols,
                        c.values.len()
                    ),
                });
            }
            Cpt::new(c.cols, c.values.clone())
        })
        .collect::<Result<Vec<_>>>()?;
    let network = DiscreteNetwork::new(nodes, parents, cpts)?;

    if file.components.len() != 4 {
        return Err(Error::ParseError {
            location: "components".into(),
            message: format!("expected 4 components, got {}", file.components.len()),
        });
    }
    let mut mixtures: Vec<Option<ComponentMixture>> = vec![None, None, None, None];
    for cf in &file.components {
        let c = Component::from_name(&cf.name).ok_or_else(|| Error::ParseError {
            location: "components".into(),
            message: format!("unknown component `{}`", cf.name),
        })?;
        let mut shapes = Vec::with_capacity(cf.states.len());
        let mut meas = Vec::with_capacity(cf.states.len());
        for (z, st) in cf.states.iter().enumerate() {
            let d = st.mean.len();
            let cov = matrix_from_rows(d, d, &st.cov, "state cov")?;
            shapes.push(Gaussian::new(DVector::from_vec(st.mean.clone()), cov).map_err(
                |e| Error::ParseError {
                    location: format!("component {} state {z}", cf.name),
                    message: e.to_string(),
                },
            )?);
            let gain = matrix_from_rows(st.meas_offset.len(), d, &st.meas_gain, "meas gain")?;
            let noise = matrix_from_rows(
                st.meas_offset.len(),
                st.meas_offset.len(),
                &st.meas_noise,
                "meas noise",
            )?;
            meas.push(
                LinearGaussian::new(DVector::from_vec(st.meas_offset.clone()), gain, noise)
                    .map_err(|e| Error::ParseError {
                        location: format!("component {} state {z} measurement", cf.name),
                        message: e.to_string(),
                    })?,
            );
        }
        mixtures[c.index()] = Some(ComponentMixture::new(cf.log_prior.clone(), shapes, meas)?);
    }
    let components = mixtures
        .into_iter()
        .map(|m| {
            m.ok_or(Error::ParseError {
                location: "components".into(),
                message: "missing component".into(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    HierarchicalModel::new(
        network,
        components,
        file.partition,
        file.normalization,
        file.expression_labels,
        file.pose_labels,
        file.metadata,
    )
}

pub fn load_model(path: &Path) -> Result<HierarchicalModel> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    model_from_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::{self, GeneratorPreset};

    #[test]
    fn round_trip_is_byte_exact() {
        let model = presets::build(GeneratorPreset::ExpressionCoupled, 0.08).unwrap();
        let text = model_to_string(&model);
        let back = model_from_str(&text).unwrap();
        assert_eq!(text, model_to_string(&back));
    }

    #[test]
    fn file_round_trip() {
        let model = presets::build(GeneratorPreset::Independent, 0.05).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        save_model(&model, &path).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(model_to_string(&model), model_to_string(&back));
    }

    #[test]
    fn rejects_wrong_format_tag() {
        let model = presets::build(GeneratorPreset::SingleState, 0.05).unwrap();
        let text = model_to_string(&model).replace(MODEL_FORMAT, "something-else");
        assert!(matches!(
            model_from_str(&text).unwrap_err(),
            Error::ParseError { .. }
        ));
    }
}
