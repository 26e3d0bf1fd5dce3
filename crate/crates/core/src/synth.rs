//! Seeded generators for random test instances: strictly positive
//! densities, simplex points, and model families. Used by the verification
//! harness and the test suites.

use crate::model::{Density, ModelFamily};
use crate::rng::CounterRng;

/// Flat-Dirichlet point on the k-simplex, strictly positive.
pub fn random_simplex(rng: &mut CounterRng, k: usize) -> Vec<f64> {
    assert!(k > 0);
    let mut w: Vec<f64> = (0..k).map(|_| -rng.next_f64_open().ln()).collect();
    let sum: f64 = w.iter().sum();
    for v in &mut w {
        *v /= sum;
    }
    w
}

/// Strictly positive random density on m points.
pub fn random_density(rng: &mut CounterRng, m: usize) -> Density {
    Density::new(random_simplex(rng, m)).expect("normalized simplex point is a density")
}

/// Family of `n_models` strictly positive densities with a random
/// strictly positive prior.
pub fn random_family(rng: &mut CounterRng, m: usize, n_models: usize) -> ModelFamily {
    let space = crate::model::SampleSpace::new(m).expect("m >= 1");
    let models: Vec<Density> = (0..n_models).map(|_| random_density(rng, m)).collect();
    let prior = random_simplex(rng, n_models);
    ModelFamily::from_parts(space, models, prior).expect("generated family is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngSpec;

    #[test]
    fn generated_objects_validate() {
        let mut rng = CounterRng::new(RngSpec::new(33, 0));
        for _ in 0..20 {
            let d = random_density(&mut rng, 6);
            assert!(d.mass().iter().all(|&m| m > 0.0));
            let fam = random_family(&mut rng, 5, 7);
            assert_eq!(fam.len(), 7);
            assert!(fam.prior().iter().all(|&p| p > 0.0));
        }
    }
}
