//! Numerical laboratory for Bayesian observable- and latent-variable
//! estimation in singular mixture models.
//!
//! The crate provides:
//!
//! * exact mixture densities, divergences, entropies and Fisher matrices
//!   ([`model`]);
//! * deterministic complete-data simulation ([`data`]);
//! * log-evidence engines: conjugate closed form for complete data, exact
//!   brute-force and dynamic-programming summation over label assignments,
//!   and adaptive quadrature ([`evidence`]);
//! * normalized free-energy replication grids and learning-coefficient fits
//!   ([`energy`]);
//! * the latent-variable error D(n), its theory predictions, and peak-
//!   assignment analysis ([`latent`]);
//! * posterior region masses and phase detection ([`posterior`]);
//! * Gibbs and parameter-space samplers with occupancy diagnostics
//!   ([`sampler`]).

pub mod data;
pub mod energy;
pub mod error;
pub mod evidence;
pub mod latent;
pub mod model;
pub mod numeric;
pub mod posterior;
pub mod sampler;

pub use error::{Error, Result};

#[cfg(test)]
pub(crate) mod testutil {
    use rand::Rng;
    use rand_chacha::ChaCha8Rng;
    use rand_chacha::rand_core::SeedableRng;

    use crate::model::{Family, MixtureParams};

    pub fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    pub fn random_params(rng: &mut ChaCha8Rng, k: usize, family: &Family) -> MixtureParams {
        let mut raw: Vec<f64> = (0..k).map(|_| rng.gen::<f64>().max(1e-6)).collect();
        let total: f64 = raw.iter().sum();
        for w in &mut raw {
            *w /= total;
        }
        let comps = (0..k)
            .map(|_| match family {
                Family::Binomial { .. } => rng.gen::<f64>(),
                Family::Gaussian => 4.0 * (rng.gen::<f64>() - 0.5),
            })
            .collect();
        MixtureParams::new(raw, comps)
    }

    pub fn random_interior_params(
        rng: &mut ChaCha8Rng,
        k: usize,
        family: &Family,
    ) -> MixtureParams {
        let mut raw: Vec<f64> = (0..k).map(|_| 0.1 + 0.9 * rng.gen::<f64>()).collect();
        let total: f64 = raw.iter().sum();
        for w in &mut raw {
            *w /= total;
        }
        let comps = (0..k)
            .map(|_| match family {
                Family::Binomial { .. } => 0.05 + 0.9 * rng.gen::<f64>(),
                Family::Gaussian => 4.0 * (rng.gen::<f64>() - 0.5),
            })
            .collect();
        MixtureParams::new(raw, comps)
    }
}
