//! The full hierarchical model: a discrete network over expression, pose and
//! the four component states, joined with the four component mixtures, plus
//! exact inference of true landmark positions from noisy measurements.
//!
//! Inference enumerates the joint discrete configuration space exactly; with
//! six nodes of small cardinality the full table stays tiny.

use std::collections::BTreeMap;

use nalgebra::DVector;
use rand_chacha::ChaCha8Rng;

use crate::component::ComponentMixture;
use crate::error::{Error, Result};
use crate::gauss::{logsumexp, WeightedGaussianMixture};
use crate::network::{config_count, for_each_config, DiscreteNetwork, DiscretePosterior};
use crate::shape::{Component, ComponentPartition, LandmarkSet, NormalizationSpec};

/// Node index of the expression label in the discrete network.
pub const E_NODE: usize = 0;
/// Node index of the pose label in the discrete network.
pub const P_NODE: usize = 1;

/// Node index of a component's hidden state.
pub fn z_node(c: Component) -> usize {
    2 + c.index()
}

/// Canonical node names, in node-index order.
pub fn node_names() -> [&'static str; 6] {
    [
        "expression",
        "pose",
        "z_eyebrow",
        "z_eye",
        "z_nose",
        "z_mouth",
    ]
}

/// Optional evidence on the label nodes during inference.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ClampSpec {
    pub expression: Option<usize>,
    pub pose: Option<usize>,
}

impl ClampSpec {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        if let Some(e) = self.expression {
            out.push((E_NODE, e));
        }
        if let Some(p) = self.pose {
            out.push((P_NODE, p));
        }
        out
    }
}

/// How a point estimate is extracted from the posterior mixture.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatePolicy {
    /// Moment-matched posterior mean (minimum mean squared error).
    PosteriorMean,
    /// Mean of the highest-weight mixture component (approximate mode).
    ModalState,
}

impl EstimatePolicy {
    pub fn name(self) -> &'static str {
        match self {
            EstimatePolicy::PosteriorMean => "posterior-mean",
            EstimatePolicy::ModalState => "modal-state",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "posterior-mean" => Some(EstimatePolicy::PosteriorMean),
            "modal-state" => Some(EstimatePolicy::ModalState),
            _ => None,
        }
    }
}

/// The complete hierarchical model.
#[derive(Debug, Clone)]
pub struct HierarchicalModel {
    network: DiscreteNetwork,
    components: Vec<ComponentMixture>,
    partition: ComponentPartition,
    normalization: NormalizationSpec,
    expression_labels: Vec<String>,
    pose_labels: Vec<String>,
    metadata: BTreeMap<String, String>,
}

impl HierarchicalModel {
    pub fn new(
        network: DiscreteNetwork,
        components: Vec<ComponentMixture>,
        partition: ComponentPartition,
        normalization: NormalizationSpec,
        expression_labels: Vec<String>,
        pose_labels: Vec<String>,
        metadata: BTreeMap<String, String>,
    ) -> Result<Self> {
        if network.num_nodes() != 6 {
            return Err(Error::DimensionMismatch {
                context: "HierarchicalModel network nodes",
                expected: 6,
                actual: network.num_nodes(),
            });
        }
        if components.len() != 4 {
            return Err(Error::DimensionMismatch {
                context: "HierarchicalModel components",
                expected: 4,
                actual: components.len(),
            });
        }
        partition.validate()?;
        normalization.validate(partition.num_points())?;
        if network.node(E_NODE).cardinality != expression_labels.len() {
            return Err(Error::DimensionMismatch {
                context: "expression labels",
                expected: network.node(E_NODE).cardinality,
                actual: expression_labels.len(),
            });
        }
        if network.node(P_NODE).cardinality != pose_labels.len() {
            return Err(Error::DimensionMismatch {
                context: "pose labels",
                expected: network.node(P_NODE).cardinality,
                actual: pose_labels.len(),
            });
        }
        for &c in &Component::ALL {
            let cm = &components[c.index()];
            if network.node(z_node(c)).cardinality != cm.num_states() {
                return Err(Error::DimensionMismatch {
                    context: "state node cardinality",
                    expected: cm.num_states(),
                    actual: network.node(z_node(c)).cardinality,
                });
            }
            if cm.dim() != partition.dim(c) {
                return Err(Error::DimensionMismatch {
                    context: "component coordinate dimension",
                    expected: partition.dim(c),
                    actual: cm.dim(),
                });
            }
        }
        Ok(Self {
            network,
            components,
            partition,
            normalization,
            expression_labels,
            pose_labels,
            metadata,
        })
    }

    pub fn network(&self) -> &DiscreteNetwork {
        &self.network
    }

    pub fn component(&self, c: Component) -> &ComponentMixture {
        &self.components[c.index()]
    }

    pub fn components(&self) -> &[ComponentMixture] {
        &self.components
    }

    pub fn partition(&self) -> &ComponentPartition {
        &self.partition
    }

    pub fn normalization(&self) -> &NormalizationSpec {
        &self.normalization
    }

    pub fn expression_labels(&self) -> &[String] {
        &self.expression_labels
    }

    pub fn pose_labels(&self) -> &[String] {
        &self.pose_labels
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    pub fn metadata_mut(&mut self) -> &mut BTreeMap<String, String> {
        &mut self.metadata
    }

    pub fn num_points(&self) -> usize {
        self.partition.num_points()
    }

    /// State counts per component, in `Component::ALL` order.
    pub fn state_counts(&self) -> [usize; 4] {
        let mut out = [0; 4];
        for &c in &Component::ALL {
            out[c.index()] = self.components[c.index()].num_states();
        }
        out
    }

    fn check_flat(&self, flat: &DVector<f64>, context: &'static str) -> Result<()> {
        if flat.len() != 2 * self.num_points() {
            return Err(Error::DimensionMismatch {
                context,
                expected: 2 * self.num_points(),
                actual: flat.len(),
            });
        }
        Ok(())
    }

    fn gather_flat(&self, flat: &DVector<f64>, c: Component) -> DVector<f64> {
        let idx = self.partition.indices(c);
        let mut v = DVector::zeros(2 * idx.len());
        for (slot, &i) in idx.iter().enumerate() {
            v[2 * slot] = flat[2 * i];
            v[2 * slot + 1] = flat[2 * i + 1];
        }
        v
    }

    fn scatter(&self, parts: &[DVector<f64>; 4]) -> DVector<f64> {
        let mut flat = DVector::zeros(2 * self.num_points());
        for &c in &Component::ALL {
            let idx = self.partition.indices(c);
            let part = &parts[c.index()];
            for (slot, &i) in idx.iter().enumerate() {
                flat[2 * i] = part[2 * slot];
                flat[2 * i + 1] = part[2 * slot + 1];
            }
        }
        flat
    }

    /// Per-component, per-state log evidence for a flat measurement vector.
    pub fn component_evidence(&self, xm_flat: &DVector<f64>) -> Result<[Vec<f64>; 4]> {
        self.check_flat(xm_flat, "component_evidence")?;
        let mut out: [Vec<f64>; 4] = Default::default();
        for &c in &Component::ALL {
            let xm_c = self.gather_flat(xm_flat, c);
            out[c.index()] = self.components[c.index()].state_evidence(&xm_c)?;
        }
        Ok(out)
    }

    /// Unnormalized log table over all discrete configurations:
    /// `log P(config) + sum_i evidence_i[z_i]`, `-inf` outside the clamp.
    fn unnormalized_config_table(
        &self,
        evidence: &[Vec<f64>; 4],
        clamp: &ClampSpec,
    ) -> Result<Vec<f64>> {
        self.network.check_clamp(&clamp.pairs())?;
        let cards = self.network.cardinalities();
        let mut table = Vec::with_capacity(config_count(&cards));
        for_each_config(&cards, |cfg| {
            let allowed = clamp.expression.is_none_or(|e| cfg[E_NODE] == e)
                && clamp.pose.is_none_or(|p| cfg[P_NODE] == p);
            if allowed {
                let mut lp = self.network.log_joint(cfg).expect("in-range enumeration");
                for &c in &Component::ALL {
                    lp += evidence[c.index()][cfg[z_node(c)]];
                }
                table.push(lp);
            } else {
                table.push(f64::NEG_INFINITY);
            }
        });
        Ok(table)
    }

    /// Exact posterior over all discrete configurations given a measurement,
    /// optionally clamping the label nodes.
    pub fn posterior_over_configs(
        &self,
        xm: &LandmarkSet,
        clamp: &ClampSpec,
    ) -> Result<DiscretePosterior> {
        self.posterior_over_configs_flat(&xm.flatten(), clamp)
    }

    /// [`Self::posterior_over_configs`] on a flat coordinate vector.
    pub fn posterior_over_configs_flat(
        &self,
        xm_flat: &DVector<f64>,
        clamp: &ClampSpec,
    ) -> Result<DiscretePosterior> {
        let evidence = self.component_evidence(xm_flat)?;
        let table = self.unnormalized_config_table(&evidence, clamp)?;
        DiscretePosterior::from_unnormalized(self.network.cardinalities(), table)
    }

    /// `ln P(xm)` (or `ln P(xm, clamped labels)` under a clamp), exactly.
    pub fn log_evidence(&self, xm: &LandmarkSet) -> Result<f64> {
        self.log_evidence_flat(&xm.flatten(), &ClampSpec::none())
    }

    pub fn log_evidence_flat(&self, xm_flat: &DVector<f64>, clamp: &ClampSpec) -> Result<f64> {
        let evidence = self.component_evidence(xm_flat)?;
        let table = self.unnormalized_config_table(&evidence, clamp)?;
        logsumexp(&table)
    }

    /// `ln P(x, xm, e, p)` with the hidden states marginalized: the
    /// training-time likelihood of a fully labeled sample.
    pub fn complete_log_likelihood(
        &self,
        truth: &LandmarkSet,
        measurement: &LandmarkSet,
        expression: usize,
        pose: usize,
    ) -> Result<f64> {
        self.complete_log_likelihood_flat(
            &truth.flatten(),
            &measurement.flatten(),
            expression,
            pose,
        )
    }

    pub fn complete_log_likelihood_flat(
        &self,
        truth_flat: &DVector<f64>,
        meas_flat: &DVector<f64>,
        expression: usize,
        pose: usize,
    ) -> Result<f64> {
        self.check_flat(truth_flat, "complete_log_likelihood truth")?;
        self.check_flat(meas_flat, "complete_log_likelihood measurement")?;
        let clamp = ClampSpec {
            expression: Some(expression),
            pose: Some(pose),
        };
        self.network.check_clamp(&clamp.pairs())?;

        // Per-component, per-state complete-data log densities.
        let mut dens: [Vec<f64>; 4] = Default::default();
        for &c in &Component::ALL {
            let cm = &self.components[c.index()];
            let x = self.gather_flat(truth_flat, c);
            let xm = self.gather_flat(meas_flat, c);
            let mut per_state = Vec::with_capacity(cm.num_states());
            for (g, m) in cm.states() {
                per_state.push(g.log_density(&x)? + m.log_density_given(&x, &xm)?);
            }
            dens[c.index()] = per_state;
        }

        let z_cards: Vec<usize> = Component::ALL
            .iter()
            .map(|&c| self.components[c.index()].num_states())
            .collect();
        let mut terms = Vec::with_capacity(config_count(&z_cards));
        let mut full = vec![0usize; 6];
        full[E_NODE] = expression;
        full[P_NODE] = pose;
        let mut result = Ok(());
        for_each_config(&z_cards, |z_cfg| {
            if result.is_err() {
                return;
            }
            for (i, &z) in z_cfg.iter().enumerate() {
                full[2 + i] = z;
            }
            match self.network.log_joint(&full) {
                Ok(mut lp) => {
                    for (i, &z) in z_cfg.iter().enumerate() {
                        lp += dens[i][z];
                    }
                    terms.push(lp);
                }
                Err(e) => result = Err(e),
            }
        });
        result?;
        logsumexp(&terms)
    }

    /// Full posterior inference for one measurement: discrete posterior,
    /// per-component posterior mixtures over the true coordinates, both
    /// point estimates and the log evidence.
    pub fn infer(&self, xm: &LandmarkSet, clamp: &ClampSpec) -> Result<Inference> {
        self.infer_flat(&xm.flatten(), clamp)
    }

    /// The headline inference entry point: marginalizes expression, pose and
    /// all hidden states.
    pub fn infer_landmarks(&self, xm: &LandmarkSet) -> Result<Inference> {
        self.infer(xm, &ClampSpec::none())
    }

    pub fn infer_flat(&self, xm_flat: &DVector<f64>, clamp: &ClampSpec) -> Result<Inference> {
        let evidence = self.component_evidence(xm_flat)?;
        let table = self.unnormalized_config_table(&evidence, clamp)?;
        let log_evidence = logsumexp(&table)?;
        if !log_evidence.is_finite() {
            return Err(Error::InvalidConfig {
                message: "measurement has zero evidence under the model".into(),
            });
        }
        let discrete =
            DiscretePosterior::from_unnormalized(self.network.cardinalities(), table)?;

        let mut mixtures = Vec::with_capacity(4);
        let mut mean_parts: [DVector<f64>; 4] = std::array::from_fn(|_| DVector::zeros(0));
        let mut modal_parts: [DVector<f64>; 4] = std::array::from_fn(|_| DVector::zeros(0));
        for &c in &Component::ALL {
            let cm = &self.components[c.index()];
            let xm_c = self.gather_flat(xm_flat, c);
            let weights = discrete.marginal(z_node(c));
            let log_weights: Vec<f64> = weights
                .iter()
                .map(|&w| if w > 0.0 { w.ln() } else { f64::NEG_INFINITY })
                .collect();
            let comps = (0..cm.num_states())
                .map(|state| cm.posterior_given_state(&xm_c, state))
                .collect::<Result<Vec<_>>>()?;
            let mixture = WeightedGaussianMixture::new(comps, log_weights)?;
            mean_parts[c.index()] = mixture.mean();
            modal_parts[c.index()] = mixture.modal_component().mean().clone();
            mixtures.push(mixture);
        }

        Ok(Inference {
            estimate_mean: self.scatter(&mean_parts),
            estimate_modal: self.scatter(&modal_parts),
            per_component: mixtures,
            discrete,
            log_evidence,
        })
    }

    /// Exact `P(Z_c | clamped labels)` from the discrete network alone.
    pub fn query_state_given_label(&self, c: Component, clamp: &ClampSpec) -> Result<Vec<f64>> {
        self.network.conditional(z_node(c), &clamp.pairs())
    }

    /// Exact joint `P(Z_a, Z_b)` from the discrete network alone.
    pub fn query_joint_states(&self, a: Component, b: Component) -> Result<Vec<Vec<f64>>> {
        self.network.joint_pair(z_node(a), z_node(b))
    }

    /// One ancestral draw: discrete configuration, true shape, measurement.
    pub fn sample_one(&self, rng: &mut ChaCha8Rng) -> (Vec<usize>, DVector<f64>, DVector<f64>) {
        let config = self.network.sample_config(rng);
        let mut truth_parts: [DVector<f64>; 4] = std::array::from_fn(|_| DVector::zeros(0));
        let mut meas_parts: [DVector<f64>; 4] = std::array::from_fn(|_| DVector::zeros(0));
        for &c in &Component::ALL {
            let cm = &self.components[c.index()];
            let state = config[z_node(c)];
            let x = cm.shape_state(state).sample_one(rng);
            let xm = cm.measurement_state(state).sample_given(&x, rng);
            truth_parts[c.index()] = x;
            meas_parts[c.index()] = xm;
        }
        (config, self.scatter(&truth_parts), self.scatter(&meas_parts))
    }

    /// Replaces the discrete network (used by training); revalidates
    /// cardinalities.
    pub fn with_network(&self, network: DiscreteNetwork) -> Result<Self> {
        Self::new(
            network,
            self.components.clone(),
            self.partition.clone(),
            self.normalization.clone(),
            self.expression_labels.clone(),
            self.pose_labels.clone(),
            self.metadata.clone(),
        )
    }
}

/// Result of posterior inference for one measurement.
#[derive(Debug, Clone)]
pub struct Inference {
    estimate_mean: DVector<f64>,
    estimate_modal: DVector<f64>,
    per_component: Vec<WeightedGaussianMixture>,
    discrete: DiscretePosterior,
    log_evidence: f64,
}

impl Inference {
    pub fn estimate_flat(&self, policy: EstimatePolicy) -> &DVector<f64> {
        match policy {
            EstimatePolicy::PosteriorMean => &self.estimate_mean,
            EstimatePolicy::ModalState => &self.estimate_modal,
        }
    }

    pub fn estimate(&self, policy: EstimatePolicy) -> Result<LandmarkSet> {
        LandmarkSet::from_flat(self.estimate_flat(policy).as_slice())
    }

    /// Posterior mixture over one component's true coordinates.
    pub fn component_posterior(&self, c: Component) -> &WeightedGaussianMixture {
        &self.per_component[c.index()]
    }

    pub fn discrete(&self) -> &DiscretePosterior {
        &self.discrete
    }

    /// Marginal posterior over one component's hidden state.
    pub fn z_marginal(&self, c: Component) -> Vec<f64> {
        self.discrete.marginal(z_node(c))
    }

    pub fn log_evidence(&self) -> f64 {
        self.log_evidence
    }
}
