//! Per-component latent-state mixture: a discrete hidden state selects a
//! shape Gaussian over the component's true coordinates and a linear-Gaussian
//! measurement model mapping true to measured coordinates.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::gauss::{
    log_normalize, logsumexp, marginal_likelihood, posterior_update, Gaussian, LinearGaussian,
    WeightedGaussianMixture,
};

/// One facial component's mixture: per-state prior, shape Gaussian and
/// measurement model. The prior is used when the component is detached from
/// the global network; attached, the network supplies the state prior.
#[derive(Debug, Clone)]
pub struct ComponentMixture {
    log_prior: Vec<f64>,
    shape: Vec<Gaussian>,
    measurement: Vec<LinearGaussian>,
}

impl ComponentMixture {
    pub fn new(
        mut log_prior: Vec<f64>,
        shape: Vec<Gaussian>,
        measurement: Vec<LinearGaussian>,
    ) -> Result<Self> {
        let k = shape.len();
        if k == 0 {
            return Err(Error::EmptyInput {
                context: "ComponentMixture::new",
            });
        }
        if log_prior.len() != k || measurement.len() != k {
            return Err(Error::DimensionMismatch {
                context: "ComponentMixture state counts",
                expected: k,
                actual: log_prior.len().min(measurement.len()),
            });
        }
        let d = shape[0].dim();
        for g in &shape {
            if g.dim() != d {
                return Err(Error::DimensionMismatch {
                    context: "ComponentMixture shape dims",
                    expected: d,
                    actual: g.dim(),
                });
            }
        }
        for m in &measurement {
            if m.d_in() != d || m.d_out() != d {
                return Err(Error::DimensionMismatch {
                    context: "ComponentMixture measurement dims",
                    expected: d,
                    actual: m.d_in().max(m.d_out()),
                });
            }
        }
        log_normalize(&mut log_prior)?;
        Ok(Self {
            log_prior,
            shape,
            measurement,
        })
    }

    pub fn num_states(&self) -> usize {
        self.shape.len()
    }

    /// Dimension of the component's coordinate vector (2 * point count).
    pub fn dim(&self) -> usize {
        self.shape[0].dim()
    }

    pub fn log_prior(&self) -> &[f64] {
        &self.log_prior
    }

    pub fn shape_state(&self, z: usize) -> &Gaussian {
        &self.shape[z]
    }

    pub fn measurement_state(&self, z: usize) -> &LinearGaussian {
        &self.measurement[z]
    }

    pub fn states(&self) -> impl Iterator<Item = (&Gaussian, &LinearGaussian)> {
        self.shape.iter().zip(self.measurement.iter())
    }

    fn check_state(&self, z: usize) -> Result<()> {
        if z >= self.num_states() {
            return Err(Error::IndexOutOfRange {
                context: "ComponentMixture state",
                index: z,
                size: self.num_states(),
            });
        }
        Ok(())
    }

    /// Per-state log joints `log pi_z + ln P(x|z) + ln P(xm|x,z)`.
    pub fn state_log_joints(&self, x: &DVector<f64>, xm: &DVector<f64>) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.num_states());
        for (z, (g, m)) in self.states().enumerate() {
            out.push(self.log_prior[z] + g.log_density(x)? + m.log_density_given(x, xm)?);
        }
        Ok(out)
    }

    /// `ln sum_z exp(log pi_z + ln P(x|z) + ln P(xm|x,z))`.
    pub fn joint_log_density(&self, x: &DVector<f64>, xm: &DVector<f64>) -> Result<f64> {
        logsumexp(&self.state_log_joints(x, xm)?)
    }

    /// Normalized log posterior over the hidden state given `(x, xm)`, for
    /// the detached component.
    pub fn responsibilities(&self, x: &DVector<f64>, xm: &DVector<f64>) -> Result<Vec<f64>> {
        let mut log_joints = self.state_log_joints(x, xm)?;
        log_normalize(&mut log_joints)?;
        Ok(log_joints)
    }

    /// Per-state log evidence `ln ∫ P(xm|x,z) P(x|z) dx`, unweighted by the
    /// prior. This is the message the component sends to the global network.
    pub fn state_evidence(&self, xm: &DVector<f64>) -> Result<Vec<f64>> {
        if xm.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "state_evidence",
                expected: self.dim(),
                actual: xm.len(),
            });
        }
        let mut out = Vec::with_capacity(self.num_states());
        for (g, m) in self.states() {
            let marg = marginal_likelihood(g, m)?;
            out.push(marg.log_density(xm)?);
        }
        Ok(out)
    }

    /// Conjugate posterior over the component's true coordinates for a
    /// fixed state.
    pub fn posterior_given_state(&self, xm: &DVector<f64>, z: usize) -> Result<Gaussian> {
        self.check_state(z)?;
        posterior_update(&self.shape[z], &self.measurement[z], xm)
    }

    /// Posterior mixture over the true coordinates given `xm`, using the
    /// detached prior: weights ∝ pi_z * evidence_z.
    pub fn posterior_mixture(&self, xm: &DVector<f64>) -> Result<WeightedGaussianMixture> {
        let evidence = self.state_evidence(xm)?;
        let weights: Vec<f64> = evidence
            .iter()
            .zip(&self.log_prior)
            .map(|(e, p)| e + p)
            .collect();
        let comps = (0..self.num_states())
            .map(|z| self.posterior_given_state(xm, z))
            .collect::<Result<Vec<_>>>()?;
        WeightedGaussianMixture::new(comps, weights)
    }

    /// `n` draws from `P(x | z)`, deterministic per seed.
    pub fn sample_state_shapes(&self, z: usize, n: usize, seed: u64) -> Result<Vec<DVector<f64>>> {
        self.check_state(z)?;
        Ok(self.shape[z].sample(n, seed))
    }
}
