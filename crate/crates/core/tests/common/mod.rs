//! Seeded random problem generators shared by the property tests and the
//! acceptance runner.
#![allow(dead_code)]

use klpukf::{GaussianDensity, MeasurementModel, MomentEngine};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample::<f64, _>(StandardNormal))
}

pub fn normal_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Well-conditioned SPD matrix `M Mᵀ / n + floor·I`.
pub fn spd(rng: &mut ChaCha8Rng, n: usize, floor: f64) -> DMatrix<f64> {
    let m = normal_matrix(rng, n, n);
    &m * m.transpose() / n as f64 + DMatrix::identity(n, n) * floor
}

pub fn diagonal_spd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_fn(n, |_, _| rng.random_range(0.3..2.0)))
}

/// Random orthogonal matrix from the QR factorization of a Gaussian matrix.
pub fn orthogonal(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    normal_matrix(rng, n, n).qr().q()
}

/// Nonsingular transform `U diag(s) V` with singular values in `[0.5, 2]`.
pub fn nonsingular(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let s = DVector::from_fn(n, |_, _| rng.random_range(0.5..2.0));
    orthogonal(rng, n) * DMatrix::from_diagonal(&s) * orthogonal(rng, n)
}

pub fn prior(rng: &mut ChaCha8Rng, n: usize) -> GaussianDensity<f64> {
    let mean = normal_vector(rng, n);
    let cov = spd(rng, n, 0.3) * rng.random_range(0.2..1.5);
    GaussianDensity::new(mean, cov).unwrap()
}

/// Coefficients of `hᵢ(x) = aᵢᵀx + bᵢ + sᵢ sin(wᵢᵀx) + qᵢ (vᵢᵀx)²`.
#[derive(Debug, Clone)]
pub struct RandomFunction {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub s: DVector<f64>,
    pub w: DMatrix<f64>,
    pub q: DVector<f64>,
    pub v: DMatrix<f64>,
}

impl RandomFunction {
    pub fn draw(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Self {
        Self {
            a: normal_matrix(rng, d, n),
            b: normal_vector(rng, d),
            s: normal_vector(rng, d),
            w: normal_matrix(rng, d, n),
            q: normal_vector(rng, d) * 0.5,
            v: normal_matrix(rng, d, n) * 0.5,
        }
    }

    pub fn affine(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Self {
        let mut f = Self::draw(rng, n, d);
        f.s.fill(0.0);
        f.q.fill(0.0);
        f
    }

    pub fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        let lin = &self.a * x + &self.b;
        let wx = &self.w * x;
        let vx = &self.v * x;
        DVector::from_fn(self.b.len(), |i, _| {
            lin[i] + self.s[i] * wx[i].sin() + self.q[i] * vx[i] * vx[i]
        })
    }

    pub fn model(&self, noise: DMatrix<f64>, value: DVector<f64>) -> MeasurementModel<f64> {
        let f = self.clone();
        MeasurementModel::from_fn(move |x| f.eval(x), noise, value).unwrap()
    }
}

/// A random prior and measurement with `n ≤ max_n` and `d ≤ max_d`.
pub struct Problem {
    pub prior: GaussianDensity<f64>,
    pub func: RandomFunction,
    pub model: MeasurementModel<f64>,
}

pub fn problem(seed: u64, max_n: usize, max_d: usize, affine: bool, diagonal_noise: bool) -> Problem {
    let mut rng = rng(seed);
    let n = rng.random_range(1..=max_n);
    let d = rng.random_range(1..=max_d);
    let prior = prior(&mut rng, n);
    let func = if affine {
        RandomFunction::affine(&mut rng, n, d)
    } else {
        RandomFunction::draw(&mut rng, n, d)
    };
    let noise = if diagonal_noise {
        diagonal_spd(&mut rng, d)
    } else {
        spd(&mut rng, d, 0.3)
    };
    let value = func.eval(prior.mean()) + normal_vector(&mut rng, d);
    let model = func.model(noise, value);
    Problem { prior, func, model }
}

/// Engines that integrate the measurement function (not a linearization). The
/// grid is coarse so property loops stay fast; the invariants do not depend on
/// the resolution.
pub fn integrating_engines(n: usize) -> Vec<MomentEngine<f64>> {
    let mut v = vec![
        MomentEngine::Unscented {
            alpha: 1.0,
            beta: 0.0,
            kappa: None,
        },
        MomentEngine::Cubature,
        MomentEngine::GaussHermite { order: 3 },
    ];
    if n <= 3 {
        v.push(MomentEngine::Grid {
            half_width_sigmas: 6.0,
            points_per_axis: Some(9),
        });
    }
    v
}

pub fn all_engines(n: usize) -> Vec<MomentEngine<f64>> {
    let mut v = vec![
        MomentEngine::with_defaults(klpukf::EngineKind::Ekf),
        MomentEngine::with_defaults(klpukf::EngineKind::Nekf2),
    ];
    v.extend(integrating_engines(n));
    v
}

/// Textbook Kalman posterior computed with explicit inverses.
pub fn kalman_oracle(
    prior: &GaussianDensity<f64>,
    f: &RandomFunction,
    noise: &DMatrix<f64>,
    y: &DVector<f64>,
) -> (DVector<f64>, DMatrix<f64>) {
    let p = prior.cov();
    let s = &f.a * p * f.a.transpose() + noise;
    let k = p * f.a.transpose() * s.try_inverse().unwrap();
    let mean = prior.mean() + &k * (y - (&f.a * prior.mean() + &f.b));
    let cov = p - &k * &f.a * p;
    (mean, cov)
}

/// Largest absolute entry difference, scaled by `max(1, |b|)`.
pub fn rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let scale = b.amax().max(1.0);
    (a - b).amax() / scale
}

pub fn density_diff(a: &GaussianDensity<f64>, b: &GaussianDensity<f64>) -> f64 {
    let ma = DMatrix::from_column_slice(a.dim(), 1, a.mean().as_slice());
    let mb = DMatrix::from_column_slice(b.dim(), 1, b.mean().as_slice());
    rel_diff(&ma, &mb).max(rel_diff(a.cov(), b.cov()))
}
