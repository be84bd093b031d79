//! Gaussian densities, additive-noise measurement models and the general
//! Gaussian filter update.
//!
//! The update consumes a [`MomentTriple`] (predicted measurement, state/measurement
//! cross-covariance and measurement covariance) produced by any moment engine and
//! returns the Gaussian posterior
//!
//! ```text
//! S  = Σ + R
//! K  = Φ S⁻¹
//! μ⁺ = μ⁻ + K (y − ŷ)
//! P⁺ = P⁻ − K S Kᵀ
//! ```

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{FilterError, Result};
use crate::linalg::{self, check_psd, expect_dim, symmetrize};
use crate::scalar::Scalar;

/// Condition number of the innovation covariance above which the update is refused.
pub const MAX_INNOVATION_CONDITION: f64 = 1e12;

/// Deterministic measurement function `h: Rⁿ → Rᵈ`.
pub type MeasurementFn<T> = Arc<dyn Fn(&DVector<T>) -> DVector<T> + Send + Sync>;

/// Multivariate normal density `N(mean, cov)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianDensity<T: Scalar> {
    mean: DVector<T>,
    cov: DMatrix<T>,
}

impl<T: Scalar> GaussianDensity<T> {
    /// Builds a density after checking that `cov` is symmetric PSD and matches `mean`.
    pub fn new(mean: DVector<T>, cov: DMatrix<T>) -> Result<Self> {
        expect_dim("covariance rows", mean.len(), cov.nrows())?;
        expect_dim("covariance columns", mean.len(), cov.ncols())?;
        check_psd(&cov, "state covariance")?;
        Ok(Self { mean, cov })
    }

    /// Builds a density without validation; `cov` is symmetrized.
    pub fn from_parts(mean: DVector<T>, cov: DMatrix<T>) -> Self {
        let cov = symmetrize(&cov);
        Self { mean, cov }
    }

    pub fn scalar(mean: T, var: T) -> Result<Self> {
        Self::new(DVector::from_element(1, mean), DMatrix::from_element(1, 1, var))
    }

    pub fn mean(&self) -> &DVector<T> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<T> {
        &self.cov
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn into_parts(self) -> (DVector<T>, DMatrix<T>) {
        (self.mean, self.cov)
    }
}

/// Additive Gaussian noise measurement model `y = h(x) + ε`, `ε ~ N(0, R)`.
#[derive(Clone)]
pub struct MeasurementModel<T: Scalar> {
    func: MeasurementFn<T>,
    noise_cov: DMatrix<T>,
    value: DVector<T>,
}

impl<T: Scalar> fmt::Debug for MeasurementModel<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MeasurementModel")
            .field("noise_cov", &self.noise_cov)
            .field("value", &self.value)
            .finish_non_exhaustive()
    }
}

impl<T: Scalar> MeasurementModel<T> {
    /// Builds a model; `noise_cov` must be SPD and match the length of `value`.
    pub fn new(func: MeasurementFn<T>, noise_cov: DMatrix<T>, value: DVector<T>) -> Result<Self> {
        expect_dim("noise covariance rows", value.len(), noise_cov.nrows())?;
        expect_dim("noise covariance columns", value.len(), noise_cov.ncols())?;
        linalg::cholesky(&noise_cov, "measurement noise covariance")?;
        Ok(Self {
            func,
            noise_cov,
            value,
        })
    }

    pub fn from_fn<F>(f: F, noise_cov: DMatrix<T>, value: DVector<T>) -> Result<Self>
    where
        F: Fn(&DVector<T>) -> DVector<T> + Send + Sync + 'static,
    {
        Self::new(Arc::new(f), noise_cov, value)
    }

    pub fn dim(&self) -> usize {
        self.value.len()
    }

    pub fn func(&self) -> &MeasurementFn<T> {
        &self.func
    }

    pub fn noise_cov(&self) -> &DMatrix<T> {
        &self.noise_cov
    }

    pub fn value(&self) -> &DVector<T> {
        &self.value
    }

    /// Evaluates `h(x)`, rejecting non-finite output or a wrong output length.
    pub fn evaluate(&self, x: &DVector<T>) -> Result<DVector<T>> {
        let y = (self.func)(x);
        expect_dim("measurement function output", self.dim(), y.len())?;
        if !linalg::all_finite(&y) {
            return Err(FilterError::NonFiniteEvaluation {
                point: linalg::to_f64_vec(x),
            });
        }
        Ok(y)
    }

    /// The linearly transformed model `(D h, D R Dᵀ, D y)`.
    pub fn transformed(&self, transform: &DMatrix<T>) -> Result<Self> {
        expect_dim("transform columns", self.dim(), transform.ncols())?;
        let base = Arc::clone(&self.func);
        let t = transform.clone();
        let noise = symmetrize(&(transform * &self.noise_cov * transform.transpose()));
        Self::new(
            Arc::new(move |x: &DVector<T>| &t * base(x)),
            noise,
            transform * &self.value,
        )
    }

    /// Scalar model consisting of element `index` only.
    pub fn element(&self, index: usize) -> Result<Self> {
        if index >= self.dim() {
            return Err(FilterError::InvalidParameter(format!(
                "element {index} out of range for a {}-dimensional measurement",
                self.dim()
            )));
        }
        let base = Arc::clone(&self.func);
        Self::new(
            Arc::new(move |x: &DVector<T>| DVector::from_element(1, base(x)[index])),
            DMatrix::from_element(1, 1, self.noise_cov[(index, index)]),
            DVector::from_element(1, self.value[index]),
        )
    }

    pub fn has_diagonal_noise(&self) -> bool {
        let r = &self.noise_cov;
        (0..r.nrows()).all(|i| (0..r.ncols()).all(|j| i == j || r[(i, j)] == T::zero()))
    }
}

/// Approximations of the Gaussian-weighted measurement moments.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTriple<T: Scalar> {
    /// Predicted measurement `ŷ = E[h(x)]`.
    pub y_hat: DVector<T>,
    /// Cross-covariance `Φ = E[(x − μ)(h(x) − ŷ)ᵀ]`, n×d.
    pub cross_cov: DMatrix<T>,
    /// Measurement covariance `Σ = E[(h(x) − ŷ)(h(x) − ŷ)ᵀ]`, d×d.
    pub meas_cov: DMatrix<T>,
}

impl<T: Scalar> MomentTriple<T> {
    pub fn dim(&self) -> usize {
        self.y_hat.len()
    }

    /// Exact moments of the affine map `x ↦ A x + b` under `prior`.
    pub fn affine(prior: &GaussianDensity<T>, a: &DMatrix<T>, b: &DVector<T>) -> Self {
        let p = prior.cov();
        Self {
            y_hat: a * prior.mean() + b,
            cross_cov: p * a.transpose(),
            meas_cov: symmetrize(&(a * p * a.transpose())),
        }
    }

    /// Moments of the transformed measurement `D h(x)`.
    pub fn transformed(&self, transform: &DMatrix<T>) -> Self {
        Self {
            y_hat: transform * &self.y_hat,
            cross_cov: &self.cross_cov * transform.transpose(),
            meas_cov: symmetrize(&(transform * &self.meas_cov * transform.transpose())),
        }
    }

    /// Whether the joint matrix `[P, Φ; Φᵀ, Σ]` is PSD. Diagnostic only.
    pub fn joint_is_psd(&self, prior: &GaussianDensity<T>) -> bool {
        let n = prior.dim();
        let d = self.dim();
        let mut joint = DMatrix::zeros(n + d, n + d);
        joint.view_mut((0, 0), (n, n)).copy_from(prior.cov());
        joint.view_mut((0, n), (n, d)).copy_from(&self.cross_cov);
        joint
            .view_mut((n, 0), (d, n))
            .copy_from(&self.cross_cov.transpose());
        joint.view_mut((n, n), (d, d)).copy_from(&self.meas_cov);
        check_psd(&joint, "joint covariance").is_ok()
    }
}

/// Linear Gaussian state transition `x' = F x + ε_Q`, `ε_Q ~ N(0, Q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearGaussianTransition<T: Scalar> {
    transition: DMatrix<T>,
    process_cov: DMatrix<T>,
}

impl<T: Scalar> LinearGaussianTransition<T> {
    pub fn new(transition: DMatrix<T>, process_cov: DMatrix<T>) -> Result<Self> {
        expect_dim("transition columns", transition.nrows(), transition.ncols())?;
        expect_dim("process covariance rows", transition.nrows(), process_cov.nrows())?;
        expect_dim("process covariance columns", transition.nrows(), process_cov.ncols())?;
        check_psd(&process_cov, "process covariance")?;
        Ok(Self {
            transition,
            process_cov,
        })
    }

    pub fn transition(&self) -> &DMatrix<T> {
        &self.transition
    }

    pub fn process_cov(&self) -> &DMatrix<T> {
        &self.process_cov
    }

    pub fn dim(&self) -> usize {
        self.transition.nrows()
    }
}

/// General Gaussian filter update from precomputed moments.
pub fn ggf_update<T: Scalar>(
    prior: &GaussianDensity<T>,
    moments: &MomentTriple<T>,
    noise_cov: &DMatrix<T>,
    y: &DVector<T>,
) -> Result<GaussianDensity<T>> {
    let n = prior.dim();
    let d = moments.dim();
    expect_dim("measurement value", d, y.len())?;
    expect_dim("noise covariance", d, noise_cov.nrows())?;
    expect_dim("noise covariance", d, noise_cov.ncols())?;
    expect_dim("cross-covariance rows", n, moments.cross_cov.nrows())?;
    expect_dim("cross-covariance columns", d, moments.cross_cov.ncols())?;
    expect_dim("measurement covariance", d, moments.meas_cov.nrows())?;
    if d == 0 {
        return Ok(prior.clone());
    }

    let s = symmetrize(&(&moments.meas_cov + noise_cov));
    let eig = linalg::sym_eigenvalues(&s);
    let (lo, hi) = (eig[0], eig[d - 1]);
    if !(lo > T::zero()) || hi > T::lit(MAX_INNOVATION_CONDITION) * lo {
        return Err(FilterError::DegenerateInnovation {
            eigenvalue: lo.to_f64_lossy(),
        });
    }
    let chol = s
        .clone()
        .cholesky()
        .ok_or(FilterError::DegenerateInnovation {
            eigenvalue: lo.to_f64_lossy(),
        })?;
    // K = Φ S⁻¹, computed as (S⁻¹ Φᵀ)ᵀ.
    let gain = chol.solve(&moments.cross_cov.transpose()).transpose();
    let mean = prior.mean() + &gain * (y - &moments.y_hat);
    let cov = prior.cov() - &gain * &s * gain.transpose();
    Ok(GaussianDensity::from_parts(mean, cov))
}

/// Linear prediction `μ ← F μ`, `P ← F P Fᵀ + Q`.
pub fn kf_predict<T: Scalar>(
    state: &GaussianDensity<T>,
    model: &LinearGaussianTransition<T>,
) -> Result<GaussianDensity<T>> {
    expect_dim("transition", model.dim(), state.dim())?;
    let f = model.transition();
    let mean = f * state.mean();
    let cov = f * state.cov() * f.transpose() + model.process_cov();
    Ok(GaussianDensity::from_parts(mean, cov))
}

/// Closed-form `KL(p ‖ q)` between two Gaussians with SPD covariances.
pub fn gaussian_kld<T: Scalar>(p: &GaussianDensity<T>, q: &GaussianDensity<T>) -> Result<T> {
    expect_dim("divergence operands", p.dim(), q.dim())?;
    let n = p.dim();
    let chol_p = linalg::cholesky(p.cov(), "first covariance")?;
    let chol_q = linalg::cholesky(q.cov(), "second covariance")?;
    let lq = chol_q.l();
    // tr(Q⁻¹ P) = ‖Lq⁻¹ Lp‖²_F
    let w = linalg::solve_lower(&lq, &chol_p.l(), "second covariance")?;
    let diff = q.mean() - p.mean();
    let u = linalg::solve_lower(&lq, &DMatrix::from_column_slice(n, 1, diff.as_slice()), "second covariance")?;
    let log_det = |l: &DMatrix<T>| {
        (0..n).fold(T::zero(), |acc, i| acc + l[(i, i)].ln()) * T::lit(2.0)
    };
    let kld = T::lit(0.5)
        * (w.norm_squared() + u.norm_squared() - T::from_count(n) + log_det(&lq)
            - log_det(&chol_p.l()));
    Ok(kld.max(T::zero()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn scalar_moments(y_hat: f64, phi: f64, sigma: f64) -> MomentTriple<f64> {
        MomentTriple {
            y_hat: DVector::from_element(1, y_hat),
            cross_cov: DMatrix::from_element(1, 1, phi),
            meas_cov: DMatrix::from_element(1, 1, sigma),
        }
    }

    #[test]
    fn conjugate_scalar_update() {
        let prior = GaussianDensity::scalar(0.0, 1.0).unwrap();
        let post = ggf_update(
            &prior,
            &scalar_moments(0.0, 1.0, 1.0),
            &DMatrix::from_element(1, 1, 1.0),
            &DVector::from_element(1, 2.0),
        )
        .unwrap();
        assert_relative_eq!(post.mean()[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(post.cov()[(0, 0)], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn transformed_linear_element_gives_half_third() {
        // h̃(x) = √2(−x − 5/4) at N(1, 1); a transformed value of 0 yields N(−1/2, 1/3).
        let prior = GaussianDensity::scalar(1.0, 1.0).unwrap();
        let a = DMatrix::from_element(1, 1, -2f64.sqrt());
        let b = DVector::from_element(1, -1.25 * 2f64.sqrt());
        let m = MomentTriple::affine(&prior, &a, &b);
        let post = ggf_update(
            &prior,
            &m,
            &DMatrix::identity(1, 1),
            &DVector::from_element(1, 0.0),
        )
        .unwrap();
        assert_relative_eq!(post.mean()[0], -0.5, epsilon = 1e-14);
        assert_relative_eq!(post.cov()[(0, 0)], 1.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn zero_gain_keeps_prior() {
        let prior = GaussianDensity::new(
            DVector::from_vec(vec![1.0, -2.0]),
            DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]),
        )
        .unwrap();
        let m = MomentTriple {
            y_hat: DVector::from_element(1, 4.0),
            cross_cov: DMatrix::zeros(2, 1),
            meas_cov: DMatrix::from_element(1, 1, 3.0),
        };
        let post = ggf_update(
            &prior,
            &m,
            &DMatrix::identity(1, 1),
            &DVector::from_element(1, 10.0),
        )
        .unwrap();
        assert_eq!(post, prior);
    }

    #[test]
    fn degenerate_innovation_is_an_error() {
        let prior = GaussianDensity::scalar(0.0, 1.0).unwrap();
        let err = ggf_update(
            &prior,
            &scalar_moments(0.0, 0.0, -1.0),
            &DMatrix::from_element(1, 1, 1.0),
            &DVector::from_element(1, 0.0),
        )
        .unwrap_err();
        assert!(matches!(err, FilterError::DegenerateInnovation { .. }));
        assert!(err.to_string().contains("degenerate innovation covariance"));
    }

    #[test]
    fn predict_examples() {
        let s = GaussianDensity::scalar(2.0, 1.0).unwrap();
        let m = LinearGaussianTransition::new(
            DMatrix::from_element(1, 1, 2.0),
            DMatrix::from_element(1, 1, 0.5),
        )
        .unwrap();
        let p = kf_predict(&s, &m).unwrap();
        assert_eq!(p.mean()[0], 4.0);
        assert_eq!(p.cov()[(0, 0)], 4.5);

        let s2 = GaussianDensity::new(
            DVector::from_vec(vec![1.0, 2.0]),
            DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]),
        )
        .unwrap();
        let id = LinearGaussianTransition::new(DMatrix::identity(2, 2), DMatrix::zeros(2, 2)).unwrap();
        assert_eq!(kf_predict(&s2, &id).unwrap(), s2);
    }

    #[test]
    fn constant_velocity_prediction() {
        let f = DMatrix::from_row_slice(
            4,
            4,
            &[
                1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0,
            ],
        );
        let q = DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 0.0, 0.04, 0.04]));
        let p0 = DMatrix::from_diagonal(&DVector::from_vec(vec![12.0, 12.0, 1.0, 1.0]));
        let s = GaussianDensity::new(DVector::from_vec(vec![0.0, 0.0, 1.0, 1.0]), p0).unwrap();
        let out = kf_predict(&s, &LinearGaussianTransition::new(f, q).unwrap()).unwrap();
        assert_eq!(out.mean().as_slice(), &[1.0, 1.0, 1.0, 1.0]);
        // F P Fᵀ + Q worked by hand: position variance 12 + 1, cross term 1, velocity 1 + 0.04.
        let expected = DMatrix::from_row_slice(
            4,
            4,
            &[
                13.0, 0.0, 1.0, 0.0, 0.0, 13.0, 0.0, 1.0, 1.0, 0.0, 1.04, 0.0, 0.0, 1.0, 0.0, 1.04,
            ],
        );
        assert_relative_eq!(out.cov(), &expected, epsilon = 1e-14);
    }

    #[test]
    fn kld_closed_forms() {
        let a = GaussianDensity::scalar(0.0, 1.0).unwrap();
        let b = GaussianDensity::scalar(1.0, 1.0).unwrap();
        let c = GaussianDensity::scalar(0.0, 2.0).unwrap();
        assert_eq!(gaussian_kld(&a, &a).unwrap(), 0.0);
        assert_relative_eq!(gaussian_kld(&a, &b).unwrap(), 0.5, epsilon = 1e-15);
        assert_relative_eq!(
            gaussian_kld(&c, &a).unwrap(),
            0.5 * (2.0 - 1.0 - 2f64.ln()),
            epsilon = 1e-15
        );
        assert_relative_eq!(gaussian_kld(&c, &a).unwrap(), 0.1534, epsilon = 1e-4);
        let singular = GaussianDensity::from_parts(DVector::zeros(1), DMatrix::zeros(1, 1));
        assert!(gaussian_kld(&a, &singular).is_err());
    }

    #[test]
    fn model_rejects_bad_noise_and_nonfinite_output() {
        let bad = MeasurementModel::<f64>::from_fn(
            |x| x.clone(),
            DMatrix::from_element(1, 1, -1.0),
            DVector::zeros(1),
        );
        assert!(bad.is_err());
        let m = MeasurementModel::<f64>::from_fn(
            |x| DVector::from_element(1, x[0].ln()),
            DMatrix::identity(1, 1),
            DVector::zeros(1),
        )
        .unwrap();
        let err = m.evaluate(&DVector::from_element(1, -1.0)).unwrap_err();
        assert_eq!(err, FilterError::NonFiniteEvaluation { point: vec![-1.0] });
    }

    #[test]
    fn works_in_single_precision() {
        let prior = GaussianDensity::<f32>::scalar(0.0, 1.0).unwrap();
        let m = MomentTriple {
            y_hat: DVector::from_element(1, 0.0f32),
            cross_cov: DMatrix::from_element(1, 1, 1.0f32),
            meas_cov: DMatrix::from_element(1, 1, 1.0f32),
        };
        let post = ggf_update(
            &prior,
            &m,
            &DMatrix::identity(1, 1),
            &DVector::from_element(1, 2.0f32),
        )
        .unwrap();
        assert!((post.mean()[0] - 1.0).abs() < 1e-6);
    }
}
