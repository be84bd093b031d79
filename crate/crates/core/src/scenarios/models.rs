//! Fixed measurement models used by the worked examples.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::gauss::{GaussianDensity, MeasurementFn, MeasurementModel};

/// Beacon positions shared by the range-measurement scenarios.
pub const BEACONS: [[f64; 2]; 3] = [[2.0, 2.0], [-6.0, 6.0], [-2.0, 1.0]];
/// Measured ranges of the static two-dimensional example.
pub const EXAMPLE2_RANGES: [f64; 3] = [5.0, 11.5, 3.5];
pub const EXAMPLE2_PRIOR_VARIANCE: f64 = 12.0;

/// Trigonometric three-element measurement of a scalar state.
pub fn trig_measurement() -> MeasurementFn<f64> {
    Arc::new(|x: &DVector<f64>| {
        let v = x[0];
        DVector::from_vec(vec![
            v + 4.0 * v.sin() + 7.0,
            -v + 4.0 * v.sin() - 4.0,
            -2.0 * v.cos() - 8.0,
        ])
    })
}

/// Euclidean ranges from the first two state components to each beacon.
pub fn range_measurement(beacons: &[[f64; 2]]) -> MeasurementFn<f64> {
    let beacons = beacons.to_vec();
    Arc::new(move |x: &DVector<f64>| {
        DVector::from_iterator(
            beacons.len(),
            beacons
                .iter()
                .map(|b| ((x[0] - b[0]).powi(2) + (x[1] - b[1]).powi(2)).sqrt()),
        )
    })
}

/// Truth state and measurement value for the trigonometric example.
///
/// The state is drawn from the standard normal prior and unit-variance noise is
/// added to each element.
pub fn example1_draw(seed: u64) -> (f64, DVector<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth: f64 = StandardNormal.sample(&mut rng);
    let clean = trig_measurement()(&DVector::from_element(1, truth));
    let noisy = clean.map(|v| v + <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng));
    (truth, noisy)
}

/// Standard normal prior observed through three trigonometric elements, `R = I`.
pub fn example1_model(seed: u64) -> Result<(GaussianDensity<f64>, MeasurementModel<f64>)> {
    let prior = GaussianDensity::scalar(0.0, 1.0)?;
    let (_, value) = example1_draw(seed);
    let model = MeasurementModel::new(trig_measurement(), DMatrix::identity(3, 3), value)?;
    Ok((prior, model))
}

/// `N(0, 12 I)` prior updated with three unit-noise range measurements.
pub fn example2_model() -> Result<(GaussianDensity<f64>, MeasurementModel<f64>)> {
    let prior = GaussianDensity::new(
        DVector::zeros(2),
        DMatrix::identity(2, 2) * EXAMPLE2_PRIOR_VARIANCE,
    )?;
    let model = MeasurementModel::new(
        range_measurement(&BEACONS),
        DMatrix::identity(3, 3),
        DVector::from_row_slice(&EXAMPLE2_RANGES),
    )?;
    Ok((prior, model))
}

/// Two quadratic elements of a scalar state with prior `N(1, 1)`.
///
/// The value `(0, 0)` makes the transformed linear combination
/// `(y₁ + y₂)/√2` equal to zero.
pub fn quadratic_model() -> Result<(GaussianDensity<f64>, MeasurementModel<f64>)> {
    let prior = GaussianDensity::scalar(1.0, 1.0)?;
    let model = MeasurementModel::from_fn(
        |x: &DVector<f64>| {
            let v = x[0];
            DVector::from_vec(vec![v * v - 2.0 * v - 4.0, -v * v + 1.5])
        },
        DMatrix::identity(2, 2),
        DVector::zeros(2),
    )?;
    Ok((prior, model))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example2_constants() {
        let (prior, model) = example2_model().unwrap();
        assert_eq!(prior.cov().trace(), 24.0);
        assert_eq!(model.dim(), 3);
        let r = model.evaluate(&DVector::from_vec(vec![2.0, 5.0])).unwrap();
        assert_eq!(r[0], 3.0);
    }

    #[test]
    fn example1_draw_is_seeded() {
        assert_eq!(example1_draw(7), example1_draw(7));
        assert_ne!(example1_draw(7).0, example1_draw(8).0);
    }
}
