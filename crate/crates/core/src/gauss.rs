//! Multivariate-Gaussian and linear-Gaussian algebra.
//!
//! All densities are computed and combined in log space, and every solve goes
//! through a Cholesky factorization of the (symmetrized, possibly ridged)
//! covariance. No matrix is ever explicitly inverted.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

const LN_2PI: f64 = 1.8378770664093453;

/// Relative ridge applied when a covariance fails to factor as-is.
const RIDGE_SCALE: f64 = 1e-8;

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    0.5 * (m + m.transpose())
}

/// Cholesky of a symmetric positive-definite matrix.
///
/// The factorization is first attempted on the symmetrized matrix as given;
/// only if that fails is a ridge `1e-8 * trace/d * I` added and the
/// factorization retried. Well-conditioned inputs are therefore factored
/// exactly, while near-singular covariances (as produced by EM on small
/// clusters) get regularized instead of aborting.
pub(crate) fn spd_cholesky(
    cov: &DMatrix<f64>,
    context: &'static str,
) -> Result<Cholesky<f64, Dyn>> {
    let sym = symmetrize(cov);
    if let Some(chol) = Cholesky::new(sym.clone()) {
        return Ok(chol);
    }
    let d = cov.nrows();
    let eps = RIDGE_SCALE * sym.trace() / d as f64;
    if eps > 0.0 {
        let ridged = sym + DMatrix::identity(d, d) * eps;
        if let Some(chol) = Cholesky::new(ridged) {
            return Ok(chol);
        }
    }
    Err(Error::NotPositiveDefinite { context })
}

fn check_symmetry(cov: &DMatrix<f64>, context: &'static str) -> Result<()> {
    for i in 0..cov.nrows() {
        for j in (i + 1)..cov.ncols() {
            let a = cov[(i, j)];
            let b = cov[(j, i)];
            if (a - b).abs() > 1e-12 * f64::max(1.0, a.abs()) {
                return Err(Error::NotPositiveDefinite { context });
            }
        }
    }
    Ok(())
}

fn ln_det_from_chol(chol: &Cholesky<f64, Dyn>) -> f64 {
    // Twice the log of the factor's diagonal.
    let l = chol.l_dirty();
    let mut acc = 0.0;
    for i in 0..l.nrows() {
        acc += l[(i, i)].ln();
    }
    2.0 * acc
}

fn draw_standard_normal(rng: &mut ChaCha8Rng, d: usize) -> DVector<f64> {
    DVector::from_fn(d, |_, _| rng.sample(StandardNormal))
}

/// A multivariate Gaussian `N(mean, cov)` with a cached Cholesky factor.
///
/// `cov` is stored exactly as given (so serialization round-trips); the
/// cached factor is of the symmetrized, possibly ridged matrix.
#[derive(Debug, Clone)]
pub struct Gaussian {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
}

impl Gaussian {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if d == 0 {
            return Err(Error::EmptyInput {
                context: "Gaussian::new",
            });
        }
        if cov.nrows() != d || cov.ncols() != d {
            return Err(Error::DimensionMismatch {
                context: "Gaussian covariance",
                expected: d,
                actual: cov.nrows(),
            });
        }
        if mean.iter().any(|v| !v.is_finite()) || cov.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotPositiveDefinite {
                context: "Gaussian::new (non-finite entries)",
            });
        }
        check_symmetry(&cov, "Gaussian::new")?;
        let chol = spd_cholesky(&cov, "Gaussian::new")?;
        Ok(Self { mean, cov, chol })
    }

    /// Isotropic Gaussian `N(mean, var * I)`.
    pub fn isotropic(mean: DVector<f64>, var: f64) -> Result<Self> {
        let d = mean.len();
        let cov = DMatrix::identity(d, d) * var;
        Self::new(mean, cov)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// `ln N(x; mean, cov)` via the cached Cholesky factor.
    pub fn log_density(&self, x: &DVector<f64>) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "Gaussian::log_density",
                expected: self.dim(),
                actual: x.len(),
            });
        }
        let diff = x - &self.mean;
        let quad = diff.dot(&self.chol.solve(&diff));
        Ok(-0.5 * (self.dim() as f64 * LN_2PI + ln_det_from_chol(&self.chol) + quad))
    }

    /// `n` draws, deterministic in `seed`. Each draw is `mean + L z` with
    /// `z` standard normal and `L` the Cholesky factor.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<DVector<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(&mut rng, n)
    }

    pub(crate) fn sample_with(&self, rng: &mut ChaCha8Rng, n: usize) -> Vec<DVector<f64>> {
        let l = self.chol.l();
        (0..n)
            .map(|_| &self.mean + &l * draw_standard_normal(rng, self.dim()))
            .collect()
    }

    pub(crate) fn sample_one(&self, rng: &mut ChaCha8Rng) -> DVector<f64> {
        &self.mean + self.chol.l() * draw_standard_normal(rng, self.dim())
    }
}

/// A conditional linear-Gaussian map: `y | x ~ N(offset + gain * x, noise_cov)`.
#[derive(Debug, Clone)]
pub struct LinearGaussian {
    offset: DVector<f64>,
    gain: DMatrix<f64>,
    noise_cov: DMatrix<f64>,
    noise_chol: Cholesky<f64, Dyn>,
}

impl LinearGaussian {
    pub fn new(offset: DVector<f64>, gain: DMatrix<f64>, noise_cov: DMatrix<f64>) -> Result<Self> {
        let d_out = offset.len();
        if d_out == 0 {
            return Err(Error::EmptyInput {
                context: "LinearGaussian::new",
            });
        }
        if gain.nrows() != d_out {
            return Err(Error::DimensionMismatch {
                context: "LinearGaussian gain rows",
                expected: d_out,
                actual: gain.nrows(),
            });
        }
        if noise_cov.nrows() != d_out || noise_cov.ncols() != d_out {
            return Err(Error::DimensionMismatch {
                context: "LinearGaussian noise_cov",
                expected: d_out,
                actual: noise_cov.nrows(),
            });
        }
        check_symmetry(&noise_cov, "LinearGaussian::new")?;
        let noise_chol = spd_cholesky(&noise_cov, "LinearGaussian::new")?;
        Ok(Self {
            offset,
            gain,
            noise_cov,
            noise_chol,
        })
    }

    /// Identity-gain, zero-offset map with the given noise covariance.
    pub fn additive_noise(noise_cov: DMatrix<f64>) -> Result<Self> {
        let d = noise_cov.nrows();
        Self::new(DVector::zeros(d), DMatrix::identity(d, d), noise_cov)
    }

    pub fn d_in(&self) -> usize {
        self.gain.ncols()
    }

    pub fn d_out(&self) -> usize {
        self.offset.len()
    }

    pub fn offset(&self) -> &DVector<f64> {
        &self.offset
    }

    pub fn gain(&self) -> &DMatrix<f64> {
        &self.gain
    }

    pub fn noise_cov(&self) -> &DMatrix<f64> {
        &self.noise_cov
    }

    pub fn conditional_mean(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.offset + &self.gain * x
    }

    /// `ln N(y; offset + gain x, noise_cov)`.
    pub fn log_density_given(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
        if x.len() != self.d_in() {
            return Err(Error::DimensionMismatch {
                context: "LinearGaussian::log_density_given input",
                expected: self.d_in(),
                actual: x.len(),
            });
        }
        if y.len() != self.d_out() {
            return Err(Error::DimensionMismatch {
                context: "LinearGaussian::log_density_given output",
                expected: self.d_out(),
                actual: y.len(),
            });
        }
        let diff = y - self.conditional_mean(x);
        let quad = diff.dot(&self.noise_chol.solve(&diff));
        Ok(-0.5 * (self.d_out() as f64 * LN_2PI + ln_det_from_chol(&self.noise_chol) + quad))
    }

    pub(crate) fn sample_given(&self, x: &DVector<f64>, rng: &mut ChaCha8Rng) -> DVector<f64> {
        self.conditional_mean(x) + self.noise_chol.l() * draw_standard_normal(rng, self.d_out())
    }
}

/// Marginal of `y` under `x ~ prior`, `y | x ~ lik`:
/// `N(offset + gain * mean, gain * cov * gain' + noise_cov)`.
pub fn marginal_likelihood(prior: &Gaussian, lik: &LinearGaussian) -> Result<Gaussian> {
    if lik.d_in() != prior.dim() {
        return Err(Error::DimensionMismatch {
            context: "marginal_likelihood",
            expected: prior.dim(),
            actual: lik.d_in(),
        });
    }
    let mean = lik.conditional_mean(prior.mean());
    let cov = symmetrize(&(&lik.gain * prior.cov() * lik.gain.transpose() + &lik.noise_cov));
    Gaussian::new(mean, cov)
}

/// Conjugate posterior of `x` given an observation of `y = obs`.
///
/// Gain-form update with the Joseph-stabilized covariance, which keeps the
/// result symmetric positive definite.
pub fn posterior_update(prior: &Gaussian, lik: &LinearGaussian, obs: &DVector<f64>) -> Result<Gaussian> {
    if lik.d_in() != prior.dim() {
        return Err(Error::DimensionMismatch {
            context: "posterior_update prior",
            expected: prior.dim(),
            actual: lik.d_in(),
        });
    }
    if obs.len() != lik.d_out() {
        return Err(Error::DimensionMismatch {
            context: "posterior_update obs",
            expected: lik.d_out(),
            actual: obs.len(),
        });
    }
    let innovation_cov =
        symmetrize(&(&lik.gain * prior.cov() * lik.gain.transpose() + &lik.noise_cov));
    let s_chol = spd_cholesky(&innovation_cov, "posterior_update")?;
    // K = cov * gain' * S^{-1}, computed as (S^{-1} (gain * cov))'.
    let gain_cov = &lik.gain * prior.cov();
    let k = s_chol.solve(&gain_cov).transpose();
    let residual = obs - lik.conditional_mean(prior.mean());
    let mean = prior.mean() + &k * residual;
    let d = prior.dim();
    let i_kg = DMatrix::identity(d, d) - &k * &lik.gain;
    let cov = symmetrize(&(&i_kg * prior.cov() * i_kg.transpose() + &k * &lik.noise_cov * k.transpose()));
    Gaussian::new(mean, cov)
}

/// Overflow-safe `ln sum_i exp(v_i)`. Errors on empty input.
pub fn logsumexp(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput {
            context: "logsumexp",
        });
    }
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    Ok(max + sum.ln())
}

/// Normalize log weights in place so that `logsumexp(w) = 0`; returns the
/// original log normalizer.
pub fn log_normalize(values: &mut [f64]) -> Result<f64> {
    let z = logsumexp(values)?;
    if !z.is_finite() {
        return Err(Error::EmptyInput {
            context: "log_normalize (zero total mass)",
        });
    }
    for v in values.iter_mut() {
        *v -= z;
    }
    Ok(z)
}

/// A mixture of Gaussians with normalized log weights.
#[derive(Debug, Clone)]
pub struct WeightedGaussianMixture {
    components: Vec<Gaussian>,
    log_weights: Vec<f64>,
}

impl WeightedGaussianMixture {
    /// Builds a mixture, normalizing the given log weights.
    pub fn new(components: Vec<Gaussian>, mut log_weights: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::EmptyInput {
                context: "WeightedGaussianMixture::new",
            });
        }
        if components.len() != log_weights.len() {
            return Err(Error::DimensionMismatch {
                context: "mixture weights",
                expected: components.len(),
                actual: log_weights.len(),
            });
        }
        let d = components[0].dim();
        if components.iter().any(|c| c.dim() != d) {
            return Err(Error::DimensionMismatch {
                context: "mixture component dimensions",
                expected: d,
                actual: 0,
            });
        }
        log_normalize(&mut log_weights)?;
        Ok(Self {
            components,
            log_weights,
        })
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }

    pub fn components(&self) -> &[Gaussian] {
        &self.components
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn log_density(&self, x: &DVector<f64>) -> Result<f64> {
        let mut terms = Vec::with_capacity(self.len());
        for (w, c) in self.log_weights.iter().zip(&self.components) {
            terms.push(w + c.log_density(x)?);
        }
        logsumexp(&terms)
    }

    /// Mixture mean `sum_k w_k mu_k`.
    pub fn mean(&self) -> DVector<f64> {
        let mut mean = DVector::zeros(self.dim());
        for (w, c) in self.log_weights.iter().zip(&self.components) {
            mean += c.mean() * w.exp();
        }
        mean
    }

    /// Component with the largest weight (lowest index on ties).
    pub fn modal_component(&self) -> &Gaussian {
        let mut best = 0;
        for k in 1..self.len() {
            if self.log_weights[k] > self.log_weights[best] {
                best = k;
            }
        }
        &self.components[best]
    }

    /// Moment-matched single Gaussian:
    /// `mean = sum w_k mu_k`, `cov = sum w_k (cov_k + (mu_k - mean)(mu_k - mean)')`.
    pub fn collapse(&self) -> Result<Gaussian> {
        let d = self.dim();
        let mean = self.mean();
        let mut cov = DMatrix::zeros(d, d);
        for (w, c) in self.log_weights.iter().zip(&self.components) {
            let dm = c.mean() - &mean;
            cov += (c.cov() + &dm * dm.transpose()) * w.exp();
        }
        Gaussian::new(mean, symmetrize(&cov))
    }
}

/// Moment-matched collapse of a mixture to a single Gaussian.
pub fn mixture_collapse(m: &WeightedGaussianMixture) -> Result<Gaussian> {
    m.collapse()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn vec2(a: f64, b: f64) -> DVector<f64> {
        DVector::from_vec(vec![a, b])
    }

    #[test]
    fn log_density_standard_normal_at_mode() {
        let g = Gaussian::isotropic(DVector::from_vec(vec![0.0]), 1.0).unwrap();
        let v = g.log_density(&DVector::from_vec(vec![0.0])).unwrap();
        assert_relative_eq!(v, -0.9189385332046727, epsilon = 1e-12);
    }

    #[test]
    fn log_density_identity_2d() {
        let g = Gaussian::isotropic(vec2(0.0, 0.0), 1.0).unwrap();
        let v = g.log_density(&vec2(0.0, 0.0)).unwrap();
        assert_relative_eq!(v, -LN_2PI, epsilon = 1e-12);
    }

    #[test]
    fn log_density_matches_direct_2x2_formula() {
        // Oracle: direct density formula with the explicit 2x2 inverse and
        // determinant, no factorization involved.
        let mean = vec2(1.0, 2.0);
        let cov = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let x = vec2(0.0, 0.0);
        let det = 2.0 * 1.0 - 0.5 * 0.5;
        let inv = DMatrix::from_row_slice(2, 2, &[1.0 / det, -0.5 / det, -0.5 / det, 2.0 / det]);
        let diff = &x - &mean;
        let expected = -LN_2PI - 0.5 * det.ln() - 0.5 * diff.dot(&(&inv * &diff));

        let g = Gaussian::new(mean, cov).unwrap();
        assert_relative_eq!(g.log_density(&x).unwrap(), expected, epsilon = 1e-12);
    }

    #[test]
    fn log_density_rejects_dimension_mismatch() {
        let g = Gaussian::isotropic(vec2(0.0, 0.0), 1.0).unwrap();
        let err = g.log_density(&DVector::from_vec(vec![0.0])).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn new_rejects_asymmetric_cov() {
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.1, 1.0]);
        assert!(Gaussian::new(vec2(0.0, 0.0), cov).is_err());
    }

    #[test]
    fn new_rejects_indefinite_cov() {
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let err = Gaussian::new(vec2(0.0, 0.0), cov).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite { .. }));
    }

    #[test]
    fn marginal_likelihood_additive_noise() {
        let prior = Gaussian::new(
            vec2(1.0, -1.0),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 2.0]),
        )
        .unwrap();
        let q = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.5]);
        let lik = LinearGaussian::additive_noise(q.clone()).unwrap();
        let marg = marginal_likelihood(&prior, &lik).unwrap();
        assert_relative_eq!(marg.mean(), prior.mean(), epsilon = 1e-12);
        assert_relative_eq!(marg.cov(), &(prior.cov() + q), epsilon = 1e-12);
    }

    #[test]
    fn marginal_likelihood_constant_map_ignores_prior() {
        let prior = Gaussian::isotropic(vec2(5.0, -7.0), 3.0).unwrap();
        let lik = LinearGaussian::new(
            vec2(0.5, 0.25),
            DMatrix::zeros(2, 2),
            DMatrix::identity(2, 2) * 0.1,
        )
        .unwrap();
        let marg = marginal_likelihood(&prior, &lik).unwrap();
        assert_relative_eq!(marg.mean(), &vec2(0.5, 0.25), epsilon = 1e-12);
        assert_relative_eq!(marg.cov(), &(DMatrix::identity(2, 2) * 0.1), epsilon = 1e-12);
    }

    #[test]
    fn posterior_update_uninformative_measurement_keeps_prior() {
        let prior = Gaussian::new(
            vec2(1.0, 2.0),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 2.0]),
        )
        .unwrap();
        let lik = LinearGaussian::additive_noise(DMatrix::identity(2, 2) * 1e12).unwrap();
        let post = posterior_update(&prior, &lik, &vec2(100.0, -50.0)).unwrap();
        for i in 0..2 {
            assert_relative_eq!(post.mean()[i], prior.mean()[i], max_relative = 1e-4, epsilon = 1e-4);
        }
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(
                    post.cov()[(i, j)],
                    prior.cov()[(i, j)],
                    max_relative = 1e-4,
                    epsilon = 1e-4
                );
            }
        }
    }

    #[test]
    fn posterior_update_exact_measurement_returns_obs() {
        let prior = Gaussian::isotropic(vec2(0.0, 0.0), 1.0).unwrap();
        let lik = LinearGaussian::additive_noise(DMatrix::identity(2, 2) * 1e-12).unwrap();
        let obs = vec2(3.0, -4.0);
        let post = posterior_update(&prior, &lik, &obs).unwrap();
        for i in 0..2 {
            assert_relative_eq!(post.mean()[i], obs[i], epsilon = 1e-4);
        }
    }

    #[test]
    fn posterior_update_1d_matches_grid_quadrature() {
        // Oracle: quadrature of prior(x) * lik(obs | x) on a dense grid.
        let prior = Gaussian::isotropic(DVector::from_vec(vec![0.0]), 1.0).unwrap();
        let lik = LinearGaussian::additive_noise(DMatrix::identity(1, 1)).unwrap();
        let obs = DVector::from_vec(vec![2.0]);

        let n = 20_000;
        let (lo, hi) = (-10.0, 10.0);
        let h = (hi - lo) / n as f64;
        let (mut mass, mut m1, mut m2) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let x = lo + (i as f64 + 0.5) * h;
            let xv = DVector::from_vec(vec![x]);
            let p = (prior.log_density(&xv).unwrap() + lik.log_density_given(&xv, &obs).unwrap()).exp();
            mass += p;
            m1 += p * x;
            m2 += p * x * x;
        }
        let mean = m1 / mass;
        let var = m2 / mass - mean * mean;

        let post = posterior_update(&prior, &lik, &obs).unwrap();
        assert_relative_eq!(post.mean()[0], 1.0, epsilon = 1e-9);
        assert_relative_eq!(post.cov()[(0, 0)], 0.5, epsilon = 1e-9);
        assert_relative_eq!(post.mean()[0], mean, epsilon = 1e-6);
        assert_relative_eq!(post.cov()[(0, 0)], var, epsilon = 1e-6);
    }

    #[test]
    fn sample_is_deterministic_per_seed() {
        let g = Gaussian::new(
            vec2(1.0, 2.0),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.4, 0.4, 1.5]),
        )
        .unwrap();
        let a = g.sample(16, 99);
        let b = g.sample(16, 99);
        assert_eq!(a, b);
        let c = g.sample(16, 100);
        assert_ne!(a, c);
    }

    #[test]
    fn sample_mean_converges() {
        let g = Gaussian::isotropic(vec2(0.0, 0.0), 1.0).unwrap();
        let draws = g.sample(100_000, 7);
        let mut mean = vec2(0.0, 0.0);
        for x in &draws {
            mean += x;
        }
        mean /= draws.len() as f64;
        assert!(mean[0].abs() < 0.02, "mean[0] = {}", mean[0]);
        assert!(mean[1].abs() < 0.02, "mean[1] = {}", mean[1]);
    }

    #[test]
    fn collapse_single_component_is_identity() {
        let g = Gaussian::new(
            vec2(1.0, 2.0),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.4, 0.4, 1.5]),
        )
        .unwrap();
        let m = WeightedGaussianMixture::new(vec![g.clone()], vec![0.0]).unwrap();
        let c = m.collapse().unwrap();
        assert_relative_eq!(c.mean(), g.mean(), epsilon = 1e-12);
        assert_relative_eq!(c.cov(), g.cov(), epsilon = 1e-12);
    }

    #[test]
    fn collapse_symmetric_pair_matches_total_variance() {
        let a = Gaussian::isotropic(DVector::from_vec(vec![-1.0]), 1.0).unwrap();
        let b = Gaussian::isotropic(DVector::from_vec(vec![1.0]), 1.0).unwrap();
        let m = WeightedGaussianMixture::new(vec![a, b], vec![0.5f64.ln(), 0.5f64.ln()]).unwrap();
        let c = m.collapse().unwrap();
        assert_relative_eq!(c.mean()[0], 0.0, epsilon = 1e-12);
        assert_relative_eq!(c.cov()[(0, 0)], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn logsumexp_examples() {
        assert_eq!(logsumexp(&[0.0]).unwrap(), 0.0);
        assert_relative_eq!(
            logsumexp(&[1.0f64.ln(), 3.0f64.ln()]).unwrap(),
            4.0f64.ln(),
            epsilon = 1e-12
        );
        assert_relative_eq!(
            logsumexp(&[-1000.0, -1000.0]).unwrap(),
            -1000.0 + 2.0f64.ln(),
            epsilon = 1e-12
        );
        assert!(matches!(
            logsumexp(&[]).unwrap_err(),
            Error::EmptyInput { .. }
        ));
    }

    #[test]
    fn logsumexp_all_neg_inf() {
        assert_eq!(
            logsumexp(&[f64::NEG_INFINITY, f64::NEG_INFINITY]).unwrap(),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn mixture_weights_are_normalized() {
        let a = Gaussian::isotropic(DVector::from_vec(vec![0.0]), 1.0).unwrap();
        let b = Gaussian::isotropic(DVector::from_vec(vec![1.0]), 1.0).unwrap();
        let m = WeightedGaussianMixture::new(vec![a, b], vec![100.0, 100.0]).unwrap();
        assert_relative_eq!(logsumexp(m.log_weights()).unwrap(), 0.0, epsilon = 1e-10);
    }
}
