//! Log marginal likelihoods (evidence).
//!
//! Four engines:
//!
//! * `complete` — exact conjugate closed form for Z(Xⁿ, Yⁿ): a
//!   Dirichlet-multinomial factor over label occupancies times one conjugate
//!   marginal per component (Beta-binomial, or Normal for the Gaussian
//!   family). Depends on the labels only through [`LabelCounts`].
//! * `brute` — Z(Xⁿ) = Σ_{Yⁿ} Z(Xⁿ, Yⁿ) by explicit enumeration, guarded at
//!   Kⁿ ≤ 2²⁰ assignments. The exactness oracle for everything else.
//! * `dp` — exact Z(Xⁿ) for binomial K=2 by dynamic programming over the
//!   value histogram ([`dp`]).
//! * `quad` — adaptive log-domain quadrature over the parameter box
//!   ([`quad`]).

pub mod dp;
pub mod quad;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{ComponentPrior, Family, MixtureSpec};
use crate::numeric::{ln_gamma, StreamingLse};

/// Guard for brute-force summation over label assignments.
pub const BRUTE_GUARD: f64 = (1u64 << 20) as f64;

/// Which engine produced a log-evidence value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvidenceEngine {
    Complete,
    Brute,
    Dp,
    Quad,
}

impl EvidenceEngine {
    pub fn name(&self) -> &'static str {
        match self {
            EvidenceEngine::Complete => "complete",
            EvidenceEngine::Brute => "brute",
            EvidenceEngine::Dp => "dp",
            EvidenceEngine::Quad => "quad",
        }
    }
}

/// A log-evidence value with provenance. Exact engines report err_est = 0.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EvidenceResult {
    pub log_z: f64,
    pub engine: EvidenceEngine,
    pub err_est: f64,
}

/// Per-component occupancies and sufficient statistics of a label assignment.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelCounts {
    /// N_k: number of observations assigned to component k.
    pub counts: Vec<usize>,
    /// s_k: Σ x over the members of component k.
    pub sums: Vec<f64>,
}

impl LabelCounts {
    pub fn empty(k: usize) -> Self {
        LabelCounts {
            counts: vec![0; k],
            sums: vec![0.0; k],
        }
    }

    /// Builds counts from 1-based labels; errors when a label is outside
    /// {1..K}.
    pub fn from_labels(xs: &[f64], ys: &[u32], k: usize) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::Invalid("labels/observations length mismatch".into()));
        }
        let mut lc = LabelCounts::empty(k);
        for (&x, &y) in xs.iter().zip(ys) {
            if y < 1 || y as usize > k {
                return Err(Error::Domain(format!("label {y} outside {{1..{k}}}")));
            }
            lc.counts[y as usize - 1] += 1;
            lc.sums[y as usize - 1] += x;
        }
        Ok(lc)
    }

    pub fn n(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// Label-independent parts of ln Z(Xⁿ, Yⁿ) for a dataset.
#[derive(Clone, Copy, Debug)]
pub struct CompleteConsts {
    /// Binomial: Σ_i ln C(M, x_i). Gaussian: -(n/2) ln 2π - (Σ x_i²)/2.
    pub ln_const: f64,
}

impl CompleteConsts {
    pub fn for_dataset(ds: &Dataset, spec: &MixtureSpec) -> Self {
        let ln_const = match spec.family {
            Family::Binomial { trials } => {
                let hist = ds
                    .histogram()
                    .expect("binomial datasets carry a histogram");
                hist.iter()
                    .enumerate()
                    .filter(|(_, &c)| c > 0)
                    .map(|(m, &c)| c as f64 * crate::numeric::ln_choose(trials as u64, m as u64))
                    .sum()
            }
            Family::Gaussian => {
                let q_tot: f64 = ds.xs.iter().map(|x| x * x).sum();
                -(ds.n as f64 / 2.0) * (2.0 * std::f64::consts::PI).ln() - q_tot / 2.0
            }
        };
        CompleteConsts { ln_const }
    }
}

/// ln of the Dirichlet-multinomial occupancy factor
/// ∫ Π_k a_k^{N_k} φ(a; η₁) da.
pub fn ln_dirichlet_multinomial(counts: &[usize], eta1: f64) -> f64 {
    let k = counts.len() as f64;
    let n: usize = counts.iter().sum();
    let mut v = ln_gamma(k * eta1) - k * ln_gamma(eta1) - ln_gamma(k * eta1 + n as f64);
    for &nk in counts {
        v += ln_gamma(eta1 + nk as f64);
    }
    v
}

/// ln of one component's conjugate marginal, excluding the label-independent
/// constants collected in [`CompleteConsts`].
fn ln_component_marginal(family: &Family, prior: &ComponentPrior, count: usize, sum: f64) -> f64 {
    match (family, prior) {
        (Family::Binomial { trials }, ComponentPrior::Beta { alpha, beta }) => {
            let m = *trials as f64;
            let nk = count as f64;
            ln_gamma(alpha + sum) + ln_gamma(beta + m * nk - sum) - ln_gamma(alpha + beta + m * nk)
                - (ln_gamma(*alpha) + ln_gamma(*beta) - ln_gamma(alpha + beta))
        }
        (Family::Gaussian, ComponentPrior::Normal { scale, .. }) => {
            let precision = 1.0 / (scale * scale);
            let a = count as f64 + precision;
            -0.5 * (scale * scale * a).ln() + sum * sum / (2.0 * a)
        }
        _ => unreachable!("spec construction enforces family/prior agreement"),
    }
}

/// Exact ln Z(Xⁿ, Yⁿ) from label counts.
pub fn log_evidence_from_counts(
    counts: &LabelCounts,
    consts: &CompleteConsts,
    spec: &MixtureSpec,
) -> f64 {
    let mut v = consts.ln_const + ln_dirichlet_multinomial(&counts.counts, spec.prior.eta1);
    for (&nk, &sk) in counts.counts.iter().zip(&counts.sums) {
        v += ln_component_marginal(&spec.family, &spec.prior.component, nk, sk);
    }
    v
}

/// Exact closed-form ln Z(Xⁿ, Yⁿ) for a labeled dataset.
pub fn log_evidence_complete(ds: &Dataset, spec: &MixtureSpec) -> Result<f64> {
    let ys = ds.labels()?;
    let counts = LabelCounts::from_labels(&ds.xs, ys, spec.k)?;
    let consts = CompleteConsts::for_dataset(ds, spec);
    Ok(log_evidence_from_counts(&counts, &consts, spec))
}

/// Truncation error estimate for the Gaussian complete evidence: posterior
/// and prior mass ignored outside [-B, B]. Zero for binomial.
pub fn complete_truncation_err(ds: &Dataset, spec: &MixtureSpec) -> f64 {
    match spec.prior.component {
        ComponentPrior::Beta { .. } => 0.0,
        ComponentPrior::Normal { scale, bound } => {
            let ys = match ds.labels() {
                Ok(ys) => ys,
                Err(_) => return f64::NAN,
            };
            let counts = match LabelCounts::from_labels(&ds.xs, ys, spec.k) {
                Ok(c) => c,
                Err(_) => return f64::NAN,
            };
            let mut err = 0.0;
            for (&nk, &sk) in counts.counts.iter().zip(&counts.sums) {
                let a = nk as f64 + 1.0 / (scale * scale);
                let mean = sk / a;
                let sd = a.sqrt().recip();
                let z = (bound - mean.abs()) / sd;
                err += 0.5 * statrs::function::erf::erfc(z / std::f64::consts::SQRT_2);
            }
            err
        }
    }
}

/// Visits every label assignment Yⁿ ∈ {1..K}ⁿ in odometer order (item 0 is
/// the fastest digit) and hands `f` the assignment with its ln Z(Xⁿ, Yⁿ).
/// Shares the brute-force guard.
pub fn for_each_assignment<F: FnMut(&[u32], f64)>(
    ds: &Dataset,
    spec: &MixtureSpec,
    mut f: F,
) -> Result<()> {
    let n = ds.n;
    let k = spec.k;
    let total = (k as f64).powi(n as i32);
    if total > BRUTE_GUARD {
        return Err(Error::Guard(format!(
            "brute enumeration needs K^n = {k}^{n} assignments; the limit is 2^20"
        )));
    }
    let consts = CompleteConsts::for_dataset(ds, spec);
    let mut labels = vec![1u32; n];
    loop {
        let counts = LabelCounts::from_labels(&ds.xs, &labels, k)?;
        f(&labels, log_evidence_from_counts(&counts, &consts, spec));
        // Advance the odometer.
        let mut pos = 0;
        loop {
            if pos == n {
                return Ok(());
            }
            if labels[pos] < k as u32 {
                labels[pos] += 1;
                break;
            }
            labels[pos] = 1;
            pos += 1;
        }
    }
}

/// Exact ln Z(Xⁿ) by summation over all Kⁿ assignments.
pub fn log_evidence_brute(ds: &Dataset, spec: &MixtureSpec) -> Result<f64> {
    let mut acc = StreamingLse::new();
    for_each_assignment(ds, spec, |_, lz| acc.add(lz))?;
    Ok(acc.value())
}

/// ln Z(Xⁿ, Yⁿ) for every assignment, in odometer order (item 0 fastest).
/// Shares the brute-force guard.
pub fn complete_evidence_over_assignments(ds: &Dataset, spec: &MixtureSpec) -> Result<Vec<f64>> {
    let k = spec.k;
    let mut out = Vec::with_capacity((k as u64).pow(ds.n as u32) as usize);
    for_each_assignment(ds, spec, |_, lz| out.push(lz))?;
    Ok(out)
}

/// Dispatches to an incomplete-evidence engine.
pub fn log_evidence(ds: &Dataset, spec: &MixtureSpec, engine: EvidenceEngine) -> Result<EvidenceResult> {
    match engine {
        EvidenceEngine::Complete => Ok(EvidenceResult {
            log_z: log_evidence_complete(ds, spec)?,
            engine,
            err_est: complete_truncation_err(ds, spec),
        }),
        EvidenceEngine::Brute => Ok(EvidenceResult {
            log_z: log_evidence_brute(ds, spec)?,
            engine,
            err_est: 0.0,
        }),
        EvidenceEngine::Dp => Ok(EvidenceResult {
            log_z: dp::log_evidence_dp(ds, spec)?,
            engine,
            err_est: 0.0,
        }),
        EvidenceEngine::Quad => quad::log_evidence_quad(ds, spec, &quad::QuadConfig::default()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{sample_dataset, SeedSpec};
    use crate::model::{PriorHyper, TrueModel};

    pub(crate) fn binom_spec(m: u32, k: usize, eta1: f64) -> MixtureSpec {
        MixtureSpec::new(
            Family::Binomial { trials: m },
            k,
            PriorHyper {
                eta1,
                component: ComponentPrior::Beta {
                    alpha: 1.0,
                    beta: 1.0,
                },
            },
        )
        .unwrap()
    }

    fn one_point_dataset() -> Dataset {
        Dataset {
            n: 1,
            family: Family::Binomial { trials: 2 },
            xs: vec![1.0],
            ys: Some(vec![1]),
            seed: 0,
            task: 0,
            hist: None,
        }
        .finalize()
        .unwrap()
    }

    #[test]
    fn complete_evidence_hand_integral() {
        // n=1, K=2, M=2, eta1=1, Beta(1,1), x=1, y=1:
        // ∫ a da · ∫ 2 b (1-b) db = (1/2)(1/3) = 1/6.
        let spec = binom_spec(2, 2, 1.0);
        let ds = one_point_dataset();
        let lz = log_evidence_complete(&ds, &spec).unwrap();
        assert!((lz - (1.0f64 / 6.0).ln()).abs() < 1e-12, "lz = {lz}");
    }

    #[test]
    fn brute_two_term_enumeration() {
        let spec = binom_spec(2, 2, 1.0);
        let ds = one_point_dataset();
        let lz = log_evidence_brute(&ds, &spec).unwrap();
        assert!((lz - (1.0f64 / 3.0).ln()).abs() < 1e-12, "lz = {lz}");
    }

    #[test]
    fn empty_dataset_evidence_is_zero() {
        let spec = binom_spec(3, 2, 0.7);
        let tm = TrueModel::new(&spec.family, vec![1.0], vec![0.5]).unwrap();
        let ds = sample_dataset(&tm, &spec, 0, SeedSpec::new(1), 0);
        assert!(log_evidence_complete(&ds, &spec).unwrap().abs() < 1e-12);
        assert!(log_evidence_brute(&ds, &spec).unwrap().abs() < 1e-12);
    }

    #[test]
    fn permutation_invariance() {
        let spec = binom_spec(3, 2, 0.5);
        let tm = TrueModel::new(&spec.family, vec![0.4, 0.6], vec![0.2, 0.8]).unwrap();
        let ds = sample_dataset(&tm, &spec, 8, SeedSpec::new(2), 0);
        let lz = log_evidence_complete(&ds, &spec).unwrap();
        let mut rev = ds.clone();
        rev.xs.reverse();
        rev.ys.as_mut().unwrap().reverse();
        let rev = rev.finalize().unwrap();
        let lz_rev = log_evidence_complete(&rev, &spec).unwrap();
        assert!((lz - lz_rev).abs() < 1e-12);
        let b1 = log_evidence_brute(&ds, &spec).unwrap();
        let b2 = log_evidence_brute(&rev, &spec).unwrap();
        assert!((b1 - b2).abs() < 1e-12);
    }

    #[test]
    fn posterior_over_assignments_normalizes() {
        let spec = binom_spec(3, 2, 1.5);
        let tm = TrueModel::new(&spec.family, vec![0.5, 0.5], vec![0.3, 0.7]).unwrap();
        for task in 0..4 {
            let ds = sample_dataset(&tm, &spec, 8, SeedSpec::new(3), task);
            let all = complete_evidence_over_assignments(&ds, &spec).unwrap();
            let lz = log_evidence_brute(&ds, &spec).unwrap();
            let total: f64 = all.iter().map(|v| (v - lz).exp()).sum();
            assert!((total - 1.0).abs() < 1e-12, "total = {total}");
            // The sum dominates every term.
            assert!(all.iter().all(|&v| v <= lz + 1e-12));
        }
    }

    #[test]
    fn brute_guard_names_the_limit() {
        let spec = binom_spec(2, 2, 1.0);
        let tm = TrueModel::new(&spec.family, vec![1.0], vec![0.5]).unwrap();
        let ds = sample_dataset(&tm, &spec, 21, SeedSpec::new(4), 0);
        match log_evidence_brute(&ds, &spec) {
            Err(Error::Guard(msg)) => assert!(msg.contains("2^20"), "{msg}"),
            other => panic!("expected guard error, got {other:?}"),
        }
    }

    #[test]
    fn label_out_of_range_is_domain_error() {
        let spec = binom_spec(2, 2, 1.0);
        let mut ds = one_point_dataset();
        ds.ys = Some(vec![3]);
        assert!(matches!(
            log_evidence_complete(&ds, &spec),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn gaussian_complete_matches_numeric_integral() {
        let spec = MixtureSpec::new(
            Family::Gaussian,
            2,
            PriorHyper {
                eta1: 1.0,
                component: ComponentPrior::Normal {
                    scale: 2.0,
                    bound: 12.0,
                },
            },
        )
        .unwrap();
        let ds = Dataset {
            n: 3,
            family: Family::Gaussian,
            xs: vec![0.4, -0.3, 1.1],
            ys: Some(vec![1, 1, 2]),
            seed: 0,
            task: 0,
            hist: None,
        }
        .finalize()
        .unwrap();
        let lz = log_evidence_complete(&ds, &spec).unwrap();

        // Independent route: 1-D quadrature per component times the exact
        // Dirichlet-multinomial weight factor ∫ a² (1-a) da · Γ(2)/Γ(1)² ... .
        let comp_marginal = |xs: &[f64]| {
            crate::model::gaussian_x_integral(-30.0, 30.0, |b| {
                let mut v = (-0.5 * (b / 2.0) * (b / 2.0)).exp()
                    / (2.0 * std::f64::consts::PI * 4.0).sqrt();
                for &x in xs {
                    v *= (-0.5 * (x - b) * (x - b)).exp()
                        / (2.0 * std::f64::consts::PI).sqrt();
                }
                v
            })
        };
        let dirmult = ln_dirichlet_multinomial(&[2, 1], 1.0).exp();
        let expected = (dirmult * comp_marginal(&[0.4, -0.3]) * comp_marginal(&[1.1])).ln();
        assert!((lz - expected).abs() < 1e-8, "{lz} vs {expected}");
        assert!(complete_truncation_err(&ds, &spec) < 1e-6);
    }
}
