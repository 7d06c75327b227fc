//! Latent-variable estimation error D(n): theory predictions for its
//! ln n / n slope, exact per-dataset contributions, replication curves, and
//! the peak-assignment analysis.
//!
//! The per-dataset contribution to nD(n) is the conditional divergence
//!
//! ```text
//! E_{Yⁿ ~ q(·|Xⁿ)} [ ln q(Yⁿ|Xⁿ) - ln p(Yⁿ|Xⁿ) ]  >= 0,
//! ```
//!
//! computed exactly given the dataset — no latent sampling noise enters, only
//! dataset replication noise. Three exact routes:
//!
//! * K* = 1: q(·|Xⁿ) is a point mass at the all-ones assignment, so the
//!   contribution is ln Z(Xⁿ) - ln Z(Xⁿ, 1ⁿ);
//! * binomial K = 2: the true conditional assignment law factorizes over
//!   value classes, so the distribution of (N₁, s₁) and hence
//!   E[ln Z(Xⁿ,Yⁿ)] follows from the class dynamic program;
//! * otherwise: enumeration over the K*ⁿ true-support assignments, guarded
//!   at 2²⁰.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::energy::{fit_log_slope, grouped_stats, CellStat, FitModel};
use crate::error::{Error, Result};
use crate::evidence::{
    dp, log_evidence_brute, log_evidence_from_counts, quad, CompleteConsts, EvidenceEngine,
    LabelCounts,
};
use crate::model::{Family, MixtureSpec, TrueModel};

/// Effective area of the posterior for the two-component binomial case.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectiveArea {
    /// W1 ∪ W3: the redundant component is eliminated.
    W1UnionW3,
    /// (W1 ∩ W2) ∪ (W3 ∩ W2): the transition point.
    Intersections,
    /// W2: all components are used.
    W2,
}

/// Posterior phase implied by the effective area.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Eliminate,
    UseAll,
}

/// Closed-form coefficients for a (K, K*, d_c, η₁) configuration.
///
/// `lambda_xy` and the bounds hold for any mixture satisfying the analysis
/// conditions; the exact fields are populated for the two-component binomial
/// case with a one-component truth, where the largest pole is known in closed
/// form, and for the regular case K = K*.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TheoryPrediction {
    pub k: usize,
    pub kstar: usize,
    pub d_c: usize,
    pub eta1: f64,
    /// λ_XY = (K*-1+K*·d_c)/2 + (K-K*)·η₁.
    pub lambda_xy: f64,
    /// m_XY = 1.
    pub m_xy: u32,
    /// λ_X ≤ (K*-1+K*·d_c)/2 + (K-K*)/2 · min(η₁, d_c).
    pub lambda_x_upper: f64,
    /// λ_X > (K*-1+K*·d_c)/2 strictly in the singular case; attained in the
    /// regular case.
    pub lambda_x_lower: f64,
    pub lambda_x_exact: Option<f64>,
    pub m_x: Option<u32>,
    /// λ_XY - λ_X where the exact value exists.
    pub dn_slope_exact: Option<f64>,
    /// D(n) ≥ (K-K*)·η₁/2 · ln n / n.
    pub dn_slope_lower: f64,
    pub effective_area: Option<EffectiveArea>,
    pub phase: Option<Phase>,
}

/// Evaluates the closed-form coefficients.
pub fn theory_predictions(
    k: usize,
    kstar: usize,
    d_c: usize,
    eta1: f64,
    family: Family,
) -> Result<TheoryPrediction> {
    if kstar < 1 || k < kstar {
        return Err(Error::Domain(format!(
            "need K >= K* >= 1, got K = {k}, K* = {kstar}"
        )));
    }
    if !(eta1 > 0.0) {
        return Err(Error::Domain(format!("eta1 = {eta1} must be positive")));
    }
    if d_c < 1 {
        return Err(Error::Domain("component dimension must be >= 1".into()));
    }
    if matches!(family, Family::Binomial { .. }) && d_c != 1 {
        return Err(Error::Domain(
            "the binomial component has d_c = 1 by construction".into(),
        ));
    }
    let base = (kstar as f64 - 1.0 + (kstar * d_c) as f64) / 2.0;
    let redundant = (k - kstar) as f64;
    let lambda_xy = base + redundant * eta1;
    let lambda_x_upper = base + redundant * eta1.min(d_c as f64) / 2.0;
    let dn_slope_lower = redundant * eta1 / 2.0;

    let (lambda_x_exact, m_x, effective_area, phase) = if k == kstar {
        // Regular case: λ_X = d/2 with m = 1; all components are used.
        (Some(base), Some(1), None, Some(Phase::UseAll))
    } else if matches!(family, Family::Binomial { .. }) && k == 2 && kstar == 1 {
        let lx = if eta1 <= 0.5 { (1.0 + eta1) / 2.0 } else { 0.75 };
        let m = if (eta1 - 0.5).abs() < 1e-12 { 2 } else { 1 };
        let area = if eta1 < 0.5 {
            EffectiveArea::W1UnionW3
        } else if eta1 > 0.5 {
            EffectiveArea::W2
        } else {
            EffectiveArea::Intersections
        };
        // Eliminate exactly when the effective area excludes the
        // interior-weight branch of W2.
        let phase = if eta1 <= 0.5 {
            Phase::Eliminate
        } else {
            Phase::UseAll
        };
        (Some(lx), Some(m), Some(area), Some(phase))
    } else {
        (None, None, None, None)
    };

    Ok(TheoryPrediction {
        k,
        kstar,
        d_c,
        eta1,
        lambda_xy,
        m_xy: 1,
        lambda_x_upper,
        lambda_x_lower: base,
        lambda_x_exact,
        m_x,
        dn_slope_exact: lambda_x_exact.map(|lx| lambda_xy - lx),
        dn_slope_lower,
        effective_area,
        phase,
    })
}

/// Spec-level wrapper enforcing the K < M condition the binomial closed-form
/// results assume.
pub fn theory_for_spec(spec: &MixtureSpec, kstar: usize) -> Result<TheoryPrediction> {
    if let Family::Binomial { trials } = spec.family {
        if spec.k as u32 >= trials {
            return Err(Error::Domain(format!(
                "binomial theory predictions need K < M, got K = {}, M = {trials}",
                spec.k
            )));
        }
    }
    theory_predictions(
        spec.k,
        kstar,
        spec.family.comp_dim(),
        spec.prior.eta1,
        spec.family,
    )
}

/// Conditional class table of the true assignment law, available for
/// binomial K = K* = 2 under the identity label injection.
pub(crate) fn conditional_table(
    ds: &Dataset,
    tm: &TrueModel,
    spec: &MixtureSpec,
) -> Result<Option<dp::CountTable>> {
    if tm.kstar() != 2 || spec.k != 2 || !spec.family.is_discrete() {
        return Ok(None);
    }
    let hist = ds
        .histogram()
        .ok_or_else(|| Error::Invalid("missing histogram".into()))?;
    let r: Vec<f64> = (0..hist.len())
        .map(|m| tm.label_posterior(&spec.family, m as f64)[0])
        .collect();
    Ok(Some(dp::CountTable::conditional(hist, &r)))
}

/// Exact conditional latent error given a precomputed ln Z(Xⁿ) (and, for the
/// binomial K=2 route, the conditional class table).
pub(crate) fn latent_error_with_logz(
    ds: &Dataset,
    spec: &MixtureSpec,
    tm: &TrueModel,
    log_z_x: f64,
    cond: Option<&dp::CountTable>,
) -> Result<f64> {
    let consts = CompleteConsts::for_dataset(ds, spec);
    if tm.kstar() == 1 {
        let counts = LabelCounts {
            counts: {
                let mut c = vec![0; spec.k];
                c[0] = ds.n;
                c
            },
            sums: {
                let mut s = vec![0.0; spec.k];
                s[0] = ds.xs.iter().sum();
                s
            },
        };
        let log_z_xy = log_evidence_from_counts(&counts, &consts, spec);
        return Ok(log_z_x - log_z_xy);
    }
    if let Some(table) = cond {
        let hist = ds.histogram().unwrap();
        let mut entropy_term = 0.0;
        for (m, &c) in hist.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let r = tm.label_posterior(&spec.family, m as f64)[0];
            let h = |p: f64| if p > 0.0 { p * p.ln() } else { 0.0 };
            entropy_term += c as f64 * (h(r) + h(1.0 - r));
        }
        let e_log_z_xy = dp::expected_log_evidence(table, spec, consts.ln_const)?;
        return Ok(entropy_term + log_z_x - e_log_z_xy);
    }
    // Enumeration over the true-support assignments.
    let kstar = tm.kstar();
    let total = (kstar as f64).powi(ds.n as i32);
    if total > crate::evidence::BRUTE_GUARD {
        return Err(Error::Guard(format!(
            "latent-error enumeration needs K*^n = {kstar}^{} assignments; the limit is 2^20",
            ds.n
        )));
    }
    let posts: Vec<Vec<f64>> = ds
        .xs
        .iter()
        .map(|&x| tm.label_posterior(&spec.family, x))
        .collect();
    let mut labels = vec![1u32; ds.n];
    let mut err = 0.0;
    loop {
        let mut ln_q = 0.0;
        for (i, &y) in labels.iter().enumerate() {
            ln_q += posts[i][y as usize - 1].ln();
        }
        let q = ln_q.exp();
        if q > 0.0 {
            let counts = LabelCounts::from_labels(&ds.xs, &labels, spec.k)?;
            let ln_p = log_evidence_from_counts(&counts, &consts, spec) - log_z_x;
            err += q * (ln_q - ln_p);
        }
        let mut pos = 0;
        loop {
            if pos == ds.n {
                return Ok(err);
            }
            if labels[pos] < kstar as u32 {
                labels[pos] += 1;
                break;
            }
            labels[pos] = 1;
            pos += 1;
        }
    }
}

/// Per-dataset contribution to nD(n), exact given the dataset.
pub fn dataset_latent_error(
    ds: &Dataset,
    spec: &MixtureSpec,
    tm: &TrueModel,
    engine: EvidenceEngine,
) -> Result<f64> {
    let log_z_x = match engine {
        EvidenceEngine::Brute => log_evidence_brute(ds, spec)?,
        EvidenceEngine::Dp => dp::log_evidence_dp(ds, spec)?,
        EvidenceEngine::Quad => {
            quad::log_evidence_quad(ds, spec, &quad::QuadConfig::default())?.log_z
        }
        EvidenceEngine::Complete => {
            return Err(Error::UnsupportedEngine(
                "latent error needs an incomplete-evidence engine".into(),
            ))
        }
    };
    let cond = conditional_table(ds, tm, spec)?;
    latent_error_with_logz(ds, spec, tm, log_z_x, cond.as_ref())
}

/// One replication cell of a D(n) curve.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DnCell {
    pub n: usize,
    pub replicate: usize,
    pub seed: u64,
    pub contribution: f64,
}

/// Replicated per-dataset contributions to nD(n).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DnCurve {
    pub eta1: f64,
    pub master_seed: u64,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    pub cells: Vec<DnCell>,
}

/// Slope fit of the mean nD(n) contribution against ln n.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DnFit {
    pub slope_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub theory_slope: Option<f64>,
    pub theory_source: String,
}

impl DnCurve {
    pub fn cell_stats(&self) -> Vec<CellStat> {
        grouped_stats(
            self.n_grid.iter().copied(),
            self.cells.iter().map(|c| (c.n, c.contribution)),
        )
    }

    /// CSV with the columns `eta1,n,replicate,seed,nD_contribution`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("eta1,n,replicate,seed,nD_contribution\n");
        for c in &self.cells {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                self.eta1, c.n, c.replicate, c.seed, c.contribution
            ));
        }
        s
    }

    pub fn fit(&self, theory: Option<(f64, &str)>) -> Result<DnFit> {
        let groups: Vec<(usize, Vec<f64>)> = self
            .n_grid
            .iter()
            .map(|&n| {
                (
                    n,
                    self.cells
                        .iter()
                        .filter(|c| c.n == n)
                        .map(|c| c.contribution)
                        .collect(),
                )
            })
            .collect();
        let fit = fit_log_slope(&groups, FitModel::LnOnly, self.master_seed)?;
        Ok(DnFit {
            slope_hat: fit.lambda_hat,
            ci_lo: fit.ci_lo,
            ci_hi: fit.ci_hi,
            theory_slope: theory.map(|(s, _)| s),
            theory_source: theory.map(|(_, s)| s.to_string()).unwrap_or_default(),
        })
    }
}

/// Replicated D(n) contributions over an n grid.
pub fn dn_curve(
    spec: &MixtureSpec,
    tm: &TrueModel,
    n_grid: &[usize],
    replicates: usize,
    seed: crate::data::SeedSpec,
    engine: EvidenceEngine,
) -> Result<DnCurve> {
    let mut curves = crate::energy::replication_grid(
        spec,
        &[spec.prior.eta1],
        tm,
        n_grid,
        replicates,
        seed,
        engine,
        true,
    )?;
    let (curve, dn) = curves.remove(0);
    if curve.incomplete() {
        return Err(Error::Guard(format!(
            "{} cells failed engine guards",
            curve.errors.len()
        )));
    }
    Ok(dn.expect("with_dn was requested"))
}

/// How to search for the peak assignment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PeakMethod {
    /// Global argmax by enumeration (guarded at 2²⁰ assignments).
    Exhaustive,
    /// Iterated conditional modes from `restarts` seeded random initial
    /// labelings (plus the all-ones start); returns the best local maximum.
    IcmRestarts { restarts: usize, seed: u64 },
}

/// The label assignment maximizing p(Yⁿ|Xⁿ) ∝ Z(Xⁿ, Yⁿ).
#[derive(Clone, Debug)]
pub struct PeakAssignment {
    pub labels: Vec<u32>,
    /// Number of distinct labels with nonzero occupancy.
    pub labels_used: usize,
    pub log_z_complete: f64,
}

fn labels_used(labels: &[u32], k: usize) -> usize {
    let mut seen = vec![false; k];
    for &y in labels {
        seen[y as usize - 1] = true;
    }
    seen.iter().filter(|&&s| s).count()
}

/// Finds the peak assignment by enumeration or ICM restarts.
pub fn peak_assignment(
    ds: &Dataset,
    spec: &MixtureSpec,
    method: PeakMethod,
) -> Result<PeakAssignment> {
    match method {
        PeakMethod::Exhaustive => {
            let mut best: Option<(Vec<u32>, f64)> = None;
            crate::evidence::for_each_assignment(ds, spec, |labels, lz| {
                let better = match &best {
                    Some((_, b)) => lz > *b + 1e-15,
                    None => true,
                };
                if better {
                    best = Some((labels.to_vec(), lz));
                }
            })?;
            let (labels, log_z) = best.ok_or_else(|| Error::Invalid("empty dataset".into()))?;
            Ok(PeakAssignment {
                labels_used: labels_used(&labels, spec.k),
                labels,
                log_z_complete: log_z,
            })
        }
        PeakMethod::IcmRestarts { restarts, seed } => {
            let restarts = restarts.max(10);
            let consts = CompleteConsts::for_dataset(ds, spec);
            let score = |labels: &[u32]| -> Result<f64> {
                let counts = LabelCounts::from_labels(&ds.xs, labels, spec.k)?;
                Ok(log_evidence_from_counts(&counts, &consts, spec))
            };
            let mut best: Option<(Vec<u32>, f64)> = None;
            for restart in 0..=restarts {
                let mut labels = if restart == 0 {
                    vec![1u32; ds.n]
                } else {
                    use rand::Rng;
                    let mut rng =
                        crate::data::SeedSpec::new(seed).stream(0x1C31 + restart as u64);
                    (0..ds.n)
                        .map(|_| rng.gen_range(1..=spec.k as u32))
                        .collect()
                };
                let mut current = score(&labels)?;
                // Deterministic lowest-label-first sweeps until a fixed point.
                for _ in 0..200 {
                    let mut changed = false;
                    for i in 0..ds.n {
                        let orig = labels[i];
                        let mut best_label = orig;
                        let mut best_score = current;
                        for cand in 1..=spec.k as u32 {
                            if cand == orig {
                                continue;
                            }
                            labels[i] = cand;
                            let s = score(&labels)?;
                            if s > best_score + 1e-12 {
                                best_score = s;
                                best_label = cand;
                            }
                        }
                        labels[i] = best_label;
                        if best_label != orig {
                            current = best_score;
                            changed = true;
                        }
                    }
                    if !changed {
                        break;
                    }
                }
                let better = match &best {
                    Some((_, b)) => current > *b + 1e-15,
                    None => true,
                };
                if better {
                    best = Some((labels, current));
                }
            }
            let (labels, log_z) = best.unwrap();
            Ok(PeakAssignment {
                labels_used: labels_used(&labels, spec.k),
                labels,
                log_z_complete: log_z,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{sample_dataset, SeedSpec};
    use crate::evidence::log_evidence_complete;
    use crate::model::{ComponentPrior, PriorHyper};

    fn binom_spec(m: u32, k: usize, eta1: f64) -> MixtureSpec {
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

    #[test]
    fn theory_below_transition() {
        let t = theory_predictions(2, 1, 1, 0.25, Family::Binomial { trials: 3 }).unwrap();
        assert!((t.lambda_xy - 0.75).abs() < 1e-12);
        assert!((t.lambda_x_exact.unwrap() - 0.625).abs() < 1e-12);
        assert!((t.dn_slope_exact.unwrap() - 0.125).abs() < 1e-12);
        assert!((t.dn_slope_lower - 0.125).abs() < 1e-12);
        assert_eq!(t.effective_area, Some(EffectiveArea::W1UnionW3));
        assert_eq!(t.phase, Some(Phase::Eliminate));
        assert_eq!(t.m_x, Some(1));
        assert_eq!(t.m_xy, 1);
    }

    #[test]
    fn theory_above_transition() {
        let t = theory_predictions(2, 1, 1, 2.0, Family::Binomial { trials: 3 }).unwrap();
        assert!((t.lambda_xy - 2.5).abs() < 1e-12);
        assert!((t.lambda_x_exact.unwrap() - 0.75).abs() < 1e-12);
        assert!((t.dn_slope_exact.unwrap() - 1.75).abs() < 1e-12);
        assert!((t.dn_slope_lower - 1.0).abs() < 1e-12);
        assert_eq!(t.effective_area, Some(EffectiveArea::W2));
        assert_eq!(t.phase, Some(Phase::UseAll));
    }

    #[test]
    fn theory_at_transition_and_regular() {
        let t = theory_predictions(2, 1, 1, 0.5, Family::Binomial { trials: 3 }).unwrap();
        assert_eq!(t.effective_area, Some(EffectiveArea::Intersections));
        assert_eq!(t.m_x, Some(2));
        let reg = theory_predictions(2, 2, 1, 7.0, Family::Binomial { trials: 8 }).unwrap();
        assert!((reg.dn_slope_lower - 0.0).abs() < 1e-15);
        assert!((reg.lambda_xy - 1.5).abs() < 1e-12);
        assert_eq!(reg.dn_slope_exact, Some(0.0));
        assert!(theory_predictions(1, 2, 1, 1.0, Family::Gaussian).is_err());
    }

    #[test]
    fn theory_bounds_are_consistent() {
        for k in 1..=4usize {
            for kstar in 1..=k {
                for eta in [0.1, 0.25, 0.5, 1.0, 2.0, 8.0] {
                    let t = theory_predictions(k, kstar, 1, eta, Family::Gaussian).unwrap();
                    assert!(t.lambda_x_lower <= t.lambda_x_upper + 1e-12);
                    if let Some(lx) = t.lambda_x_exact {
                        assert!(lx <= t.lambda_x_upper + 1e-12);
                        assert!(lx >= t.lambda_x_lower - 1e-12);
                        // D(n) >= 0.
                        assert!(t.lambda_xy - lx >= -1e-12);
                    }
                    assert!(t.dn_slope_lower >= 0.0);
                }
            }
        }
    }

    #[test]
    fn kstar_m_condition_enforced_for_spec() {
        let spec = binom_spec(2, 2, 1.0);
        assert!(theory_for_spec(&spec, 1).is_err());
        let spec = binom_spec(3, 2, 1.0);
        assert!(theory_for_spec(&spec, 1).is_ok());
    }

    #[test]
    fn single_point_latent_error_is_ln2() {
        // n=1, K=2, M=2, η₁=1, Beta(1,1), K*=1, x=1:
        // ln Z(X) = ln(1/3), ln Z(X, 1) = ln(1/6), error = ln 2.
        let spec = binom_spec(2, 2, 1.0);
        let tm = TrueModel::new(&spec.family, vec![1.0], vec![0.5]).unwrap();
        let ds = crate::data::Dataset {
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
        let err = dataset_latent_error(&ds, &spec, &tm, EvidenceEngine::Brute).unwrap();
        assert!((err - std::f64::consts::LN_2).abs() < 1e-12, "{err}");
    }

    #[test]
    fn latent_error_is_nonnegative() {
        let spec = binom_spec(3, 2, 0.7);
        let tm = TrueModel::new(&spec.family, vec![1.0], vec![0.5]).unwrap();
        for task in 0..1000 {
            let n = 1 + (task as usize % 8);
            let ds = sample_dataset(&tm, &spec, n, SeedSpec::new(17), task);
            let err = dataset_latent_error(&ds, &spec, &tm, EvidenceEngine::Dp).unwrap();
            assert!(err >= -1e-12, "task {task}: {err}");
        }
    }

    #[test]
    fn class_dp_matches_enumeration_for_kstar2() {
        let spec = binom_spec(3, 2, 1.4);
        let tm = TrueModel::new(&spec.family, vec![0.4, 0.6], vec![0.25, 0.75]).unwrap();
        for task in 0..8 {
            let n = 4 + (task as usize % 7);
            let ds = sample_dataset(&tm, &spec, n, SeedSpec::new(23), task);
            let log_z = log_evidence_brute(&ds, &spec).unwrap();
            let fast = {
                let cond = conditional_table(&ds, &tm, &spec).unwrap();
                assert!(cond.is_some());
                latent_error_with_logz(&ds, &spec, &tm, log_z, cond.as_ref()).unwrap()
            };
            let slow = latent_error_with_logz(&ds, &spec, &tm, log_z, None).unwrap();
            assert!((fast - slow).abs() < 1e-9, "n={n}: {fast} vs {slow}");
            assert!(fast >= -1e-10);
        }
    }

    #[test]
    fn enumeration_guard_refuses_large_kstar() {
        let spec = binom_spec(4, 3, 1.0);
        let tm =
            TrueModel::new(&spec.family, vec![0.3, 0.3, 0.4], vec![0.2, 0.5, 0.8]).unwrap();
        let ds = sample_dataset(&tm, &spec, 15, SeedSpec::new(29), 0);
        // log_z is irrelevant; the guard fires first (3^15 > 2^20).
        assert!(matches!(
            latent_error_with_logz(&ds, &spec, &tm, 0.0, None),
            Err(Error::Guard(_))
        ));
    }

    #[test]
    fn peak_assignment_eliminates_redundant_labels() {
        let spec = binom_spec(8, 2, 1.0);
        let tm = TrueModel::new(&spec.family, vec![1.0], vec![0.5]).unwrap();
        let ds = sample_dataset(&tm, &spec, 11, SeedSpec::new(31), 0);
        let peak = peak_assignment(&ds, &spec, PeakMethod::Exhaustive).unwrap();
        assert_eq!(peak.labels_used, 1, "labels {:?}", peak.labels);
        // Label symmetry: all-ones and all-twos score identically.
        let ones = vec![1u32; ds.n];
        let twos = vec![2u32; ds.n];
        let consts = CompleteConsts::for_dataset(&ds, &spec);
        let s1 = log_evidence_from_counts(
            &LabelCounts::from_labels(&ds.xs, &ones, 2).unwrap(),
            &consts,
            &spec,
        );
        let s2 = log_evidence_from_counts(
            &LabelCounts::from_labels(&ds.xs, &twos, 2).unwrap(),
            &consts,
            &spec,
        );
        assert!((s1 - s2).abs() < 1e-10);
        assert!((peak.log_z_complete - s1.max(s2)).abs() < 1e-10);
    }

    #[test]
    fn icm_dominates_true_assignment() {
        let spec = binom_spec(5, 2, 1.0);
        let tm = TrueModel::new(&spec.family, vec![0.5, 0.5], vec![0.2, 0.8]).unwrap();
        for task in 0..50 {
            let ds = sample_dataset(&tm, &spec, 20, SeedSpec::new(37), task);
            let icm = peak_assignment(
                &ds,
                &spec,
                PeakMethod::IcmRestarts {
                    restarts: 10,
                    seed: 7,
                },
            )
            .unwrap();
            let truth = log_evidence_complete(&ds, &spec).unwrap();
            assert!(
                icm.log_z_complete >= truth - 1e-10,
                "task {task}: icm {} < truth {truth}",
                icm.log_z_complete
            );
        }
    }

    #[test]
    fn icm_matches_exhaustive_on_small_instances() {
        let spec = binom_spec(4, 2, 0.7);
        let tm = TrueModel::new(&spec.family, vec![0.6, 0.4], vec![0.25, 0.85]).unwrap();
        for task in 0..5 {
            let ds = sample_dataset(&tm, &spec, 9, SeedSpec::new(41), task);
            let ex = peak_assignment(&ds, &spec, PeakMethod::Exhaustive).unwrap();
            let icm = peak_assignment(
                &ds,
                &spec,
                PeakMethod::IcmRestarts {
                    restarts: 10,
                    seed: 3,
                },
            )
            .unwrap();
            assert!((ex.log_z_complete - icm.log_z_complete).abs() < 1e-9);
        }
    }
}
