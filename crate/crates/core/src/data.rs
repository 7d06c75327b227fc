//! Deterministic generation of complete datasets from true models.
//!
//! All randomness flows from a master seed. A task index is mixed into the
//! master seed by the fixed integer hash in [`crate::numeric::derive_seed`],
//! so replication grids can be generated in any order (or in parallel) and
//! still reproduce byte-for-byte.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Family, MixtureSpec, TrueModel};

/// Master seed plus the derivation rule for per-task streams.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64) -> Self {
        SeedSpec { master_seed }
    }

    /// RNG stream for a task: ChaCha8 seeded with
    /// `splitmix64(master ^ splitmix64(task + 1))`.
    pub fn stream(&self, task: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(crate::numeric::derive_seed(self.master_seed, task))
    }
}

/// A simulated dataset: observations, true labels (1-based), and for
/// discrete families the value histogram.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub n: usize,
    pub family: Family,
    pub xs: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ys: Option<Vec<u32>>,
    pub seed: u64,
    pub task: u64,
    /// Count per support value; recomputed on load, never serialized.
    #[serde(skip)]
    pub hist: Option<Vec<usize>>,
}

impl Dataset {
    /// Rebuilds the histogram for discrete families and validates labels.
    pub fn finalize(mut self) -> Result<Self> {
        if let Some(ys) = &self.ys {
            if ys.len() != self.xs.len() {
                return Err(Error::Invalid(format!(
                    "{} labels for {} observations",
                    ys.len(),
                    self.xs.len()
                )));
            }
            if ys.iter().any(|&y| y == 0) {
                return Err(Error::Invalid("labels are 1-based".into()));
            }
        }
        if self.xs.len() != self.n {
            return Err(Error::Invalid(format!(
                "n = {} but {} observations",
                self.n,
                self.xs.len()
            )));
        }
        self.hist = match self.family {
            Family::Binomial { trials } => {
                let mut hist = vec![0usize; trials as usize + 1];
                for &x in &self.xs {
                    self.family.check_support(x)?;
                    hist[x as usize] += 1;
                }
                Some(hist)
            }
            Family::Gaussian => None,
        };
        Ok(self)
    }

    pub fn histogram(&self) -> Option<&[usize]> {
        self.hist.as_deref()
    }

    pub fn labels(&self) -> Result<&[u32]> {
        self.ys
            .as_deref()
            .ok_or_else(|| Error::MissingLabels("dataset carries no labels".into()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("dataset serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let ds: Dataset =
            serde_json::from_str(s).map_err(|e| Error::Invalid(format!("dataset JSON: {e}")))?;
        ds.finalize()
    }
}

/// Draws n complete observations (x_i, y_i) from the true model,
/// deterministically for a given (seed, task).
pub fn sample_dataset(
    tm: &TrueModel,
    spec: &MixtureSpec,
    n: usize,
    seed: SeedSpec,
    task: u64,
) -> Dataset {
    let mut rng = seed.stream(task);
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let y = sample_label(&mut rng, &tm.weights);
        let x = match spec.family {
            Family::Binomial { trials } => {
                let b = tm.comps[y];
                Binomial::new(trials as u64, b)
                    .expect("valid success probability")
                    .sample(&mut rng) as f64
            }
            Family::Gaussian => {
                let z: f64 = StandardNormal.sample(&mut rng);
                tm.comps[y] + z
            }
        };
        xs.push(x);
        ys.push(y as u32 + 1);
    }
    Dataset {
        n,
        family: spec.family,
        xs,
        ys: Some(ys),
        seed: seed.master_seed,
        task,
        hist: None,
    }
    .finalize()
    .expect("freshly sampled dataset is consistent")
}

fn sample_label<R: Rng>(rng: &mut R, weights: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (k, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return k;
        }
    }
    weights.len() - 1
}

/// Empirical true log-likelihoods: (Σ ln q(x_i), Σ ln q(x_i, y_i)).
/// Errors when the complete value is requested without labels.
pub fn empirical_log_q(ds: &Dataset, tm: &TrueModel, spec: &MixtureSpec) -> Result<(f64, f64)> {
    let incomplete = empirical_log_q_incomplete(ds, tm, spec);
    let ys = ds.labels()?;
    let mut complete = 0.0;
    for (x, &y) in ds.xs.iter().zip(ys) {
        if y as usize > tm.kstar() {
            return Err(Error::Domain(format!(
                "true label {y} exceeds K* = {}",
                tm.kstar()
            )));
        }
        complete += tm.ln_joint_density(&spec.family, *x, y as usize);
    }
    Ok((incomplete, complete))
}

/// Σ ln q(x_i) alone (labels not needed).
pub fn empirical_log_q_incomplete(ds: &Dataset, tm: &TrueModel, spec: &MixtureSpec) -> f64 {
    if let Some(hist) = ds.histogram() {
        hist.iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(m, &c)| c as f64 * tm.ln_density(&spec.family, m as f64))
            .sum()
    } else {
        ds.xs
            .iter()
            .map(|&x| tm.ln_density(&spec.family, x))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ComponentPrior, PriorHyper};
    use rayon::prelude::*;

    fn binom_spec(m: u32, k: usize) -> MixtureSpec {
        MixtureSpec::new(
            Family::Binomial { trials: m },
            k,
            PriorHyper {
                eta1: 1.0,
                component: ComponentPrior::Beta {
                    alpha: 1.0,
                    beta: 1.0,
                },
            },
        )
        .unwrap()
    }

    #[test]
    fn empty_dataset() {
        let spec = binom_spec(3, 2);
        let tm = TrueModel::new(&spec.family, vec![1.0], vec![0.5]).unwrap();
        let ds = sample_dataset(&tm, &spec, 0, SeedSpec::new(1), 0);
        assert_eq!(ds.n, 0);
        assert_eq!(ds.histogram().unwrap(), &[0, 0, 0, 0]);
        let (lx, lxy) = empirical_log_q(&ds, &tm, &spec).unwrap();
        assert_eq!(lx, 0.0);
        assert_eq!(lxy, 0.0);
    }

    #[test]
    fn single_true_component_labels() {
        let spec = binom_spec(3, 2);
        let tm = TrueModel::new(&spec.family, vec![1.0], vec![0.5]).unwrap();
        let ds = sample_dataset(&tm, &spec, 200, SeedSpec::new(2), 7);
        assert!(ds.labels().unwrap().iter().all(|&y| y == 1));
        // K* = 1 means q(x, 1) = q(x).
        let (lx, lxy) = empirical_log_q(&ds, &tm, &spec).unwrap();
        assert!((lx - lxy).abs() < 1e-12);
    }

    #[test]
    fn empirical_mean_within_clt_bound() {
        let spec = binom_spec(3, 2);
        let tm = TrueModel::new(&spec.family, vec![1.0], vec![0.5]).unwrap();
        let n = 100_000;
        let ds = sample_dataset(&tm, &spec, n, SeedSpec::new(3), 0);
        let mean: f64 = ds.xs.iter().sum::<f64>() / n as f64;
        // Var(x) = M b (1-b) = 0.75; 3 sigma of the mean.
        let bound = 3.0 * (0.75f64 / n as f64).sqrt();
        assert!((mean - 1.5).abs() < bound, "mean {mean}");
    }

    #[test]
    fn determinism_across_schedules() {
        let spec = binom_spec(3, 2);
        let tm = TrueModel::new(&spec.family, vec![0.4, 0.6], vec![0.3, 0.8]).unwrap();
        let seed = SeedSpec::new(99);
        let serial: Vec<Dataset> = (0..16)
            .map(|t| sample_dataset(&tm, &spec, 50, seed, t))
            .collect();
        let parallel: Vec<Dataset> = (0..16u64)
            .into_par_iter()
            .map(|t| sample_dataset(&tm, &spec, 50, seed, t))
            .collect();
        assert_eq!(serial, parallel);
        let again = sample_dataset(&tm, &spec, 50, seed, 3);
        assert_eq!(serial[3], again);
        assert_eq!(serial[3].to_json(), again.to_json());
    }

    #[test]
    fn histogram_consistency_and_roundtrip() {
        let spec = binom_spec(5, 2);
        let tm = TrueModel::new(&spec.family, vec![0.3, 0.7], vec![0.2, 0.9]).unwrap();
        let ds = sample_dataset(&tm, &spec, 333, SeedSpec::new(4), 11);
        let hist = ds.histogram().unwrap();
        assert_eq!(hist.iter().sum::<usize>(), 333);
        for (m, &c) in hist.iter().enumerate() {
            assert_eq!(c, ds.xs.iter().filter(|&&x| x == m as f64).count());
        }
        let back = Dataset::from_json(&ds.to_json()).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn missing_labels_error() {
        let spec = binom_spec(3, 2);
        let tm = TrueModel::new(&spec.family, vec![1.0], vec![0.5]).unwrap();
        let mut ds = sample_dataset(&tm, &spec, 5, SeedSpec::new(5), 0);
        ds.ys = None;
        assert!(matches!(
            empirical_log_q(&ds, &tm, &spec),
            Err(Error::MissingLabels(_))
        ));
    }

    #[test]
    fn single_observation_log_q() {
        let spec = binom_spec(2, 2);
        let tm = TrueModel::new(&spec.family, vec![1.0], vec![0.5]).unwrap();
        let ds = Dataset {
            n: 1,
            family: spec.family,
            xs: vec![1.0],
            ys: Some(vec![1]),
            seed: 0,
            task: 0,
            hist: None,
        }
        .finalize()
        .unwrap();
        let (lx, _) = empirical_log_q(&ds, &tm, &spec).unwrap();
        assert!((lx - 0.5f64.ln()).abs() < 1e-15);
    }
}
