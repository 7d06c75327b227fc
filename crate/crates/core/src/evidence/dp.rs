//! Exact incomplete evidence for binomial K=2 by dynamic programming over the
//! value histogram.
//!
//! Every label assignment Yⁿ enters ln Z(Xⁿ, Yⁿ) only through the
//! component-1 occupancy N₁ and sufficient statistic s₁ = Σ_{i: y_i=1} x_i.
//! Grouping the data by support value m with counts c_m, an assignment is a
//! choice of j_m ∈ {0..c_m} items of each class sent to component 1, with
//! multiplicity C(c_m, j_m). The table
//!
//! ```text
//! W(N₁, s₁) = ln Σ_{Σ j_m = N₁, Σ m j_m = s₁} Π_m C(c_m, j_m)
//! ```
//!
//! is built class by class in the log domain, and
//! ln Z(Xⁿ) = lse_{N₁,s₁} [ W + DirMult(N₁, n-N₁; η₁) + BetaBin factors ].
//!
//! The same recursion with binomially weighted classes gives the exact
//! conditional distribution of (N₁, s₁) when each item goes to component 1
//! independently with a per-value probability r_m — the the true-posterior
//! assignment law used by the latent-error analysis.
//!
//! W is pure combinatorics of the histogram: it is independent of the prior,
//! so one table serves any number of hyperparameter evaluations.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{ComponentPrior, Family, MixtureSpec};
use crate::numeric::{LnFactorials, LnGammaLadder, StreamingLse};

/// Log-domain table over (N₁, s₁), row-major in N₁.
#[derive(Clone, Debug)]
pub struct CountTable {
    pub n: usize,
    pub trials: usize,
    /// Largest reachable s₁ (= Σ m c_m).
    pub s_max: usize,
    /// Histogram the table was built from.
    pub hist: Vec<usize>,
    vals: Vec<f64>,
}

impl CountTable {
    #[inline]
    pub fn at(&self, n1: usize, s1: usize) -> f64 {
        self.vals[n1 * (self.s_max + 1) + s1]
    }

    /// Unnormalized assignment-count table W.
    pub fn ways(hist: &[usize]) -> Self {
        let facts = LnFactorials::new(hist.iter().copied().max().unwrap_or(0));
        build_table(hist, |_m, c, j| facts.ln_choose(c, j))
    }

    /// Log-probability table of (N₁, s₁) when each item of value class m is
    /// assigned to component 1 independently with probability r[m].
    pub fn conditional(hist: &[usize], r: &[f64]) -> Self {
        assert_eq!(hist.len(), r.len());
        let facts = LnFactorials::new(hist.iter().copied().max().unwrap_or(0));
        build_table(hist, |m, c, j| {
            let rm = r[m];
            if rm <= 0.0 {
                return if j == 0 { 0.0 } else { f64::NEG_INFINITY };
            }
            if rm >= 1.0 {
                return if j == c { 0.0 } else { f64::NEG_INFINITY };
            }
            facts.ln_choose(c, j) + j as f64 * rm.ln() + (c - j) as f64 * (1.0 - rm).ln()
        })
    }

    /// lse over all cells; 0 for a probability table, n·ln2-ish for W.
    pub fn total(&self) -> f64 {
        let mut acc = StreamingLse::new();
        for &v in &self.vals {
            acc.add(v);
        }
        acc.value()
    }
}

/// Class-by-class accumulation. `weight(m, c_m, j)` is the log weight of
/// sending j of the c_m items with value m to component 1.
fn build_table<F: Fn(usize, usize, usize) -> f64>(hist: &[usize], weight: F) -> CountTable {
    let n: usize = hist.iter().sum();
    let trials = hist.len().saturating_sub(1);
    let s_max: usize = hist.iter().enumerate().map(|(m, &c)| m * c).sum();
    let stride = s_max + 1;
    let mut vals = vec![f64::NEG_INFINITY; (n + 1) * stride];
    vals[0] = 0.0;

    // Running bounds on reachable rows/columns.
    let mut n_reach = 0usize;
    let mut s_reach = 0usize;
    // Scratch holds one row as (running max, relative sum) pairs.
    let mut row_max = vec![f64::NEG_INFINITY; stride];
    let mut row_acc = vec![0.0; stride];

    for (m, &c) in hist.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let w: Vec<f64> = (0..=c).map(|j| weight(m, c, j)).collect();
        let new_n_reach = n_reach + c;
        let new_s_reach = s_reach + m * c;
        // Rows in decreasing N₁: sources (N₁-j, s₁-mj) with j ≥ 1 live in
        // rows not yet rewritten for this class, so the update is in place.
        for n1 in (0..=new_n_reach).rev() {
            let s_hi = new_s_reach.min(trials * n1);
            // j = 0 keeps the old row.
            for s in 0..=s_hi {
                let v = vals[n1 * stride + s] + w[0];
                if v == f64::NEG_INFINITY {
                    row_max[s] = f64::NEG_INFINITY;
                    row_acc[s] = 0.0;
                } else {
                    row_max[s] = v;
                    row_acc[s] = 1.0;
                }
            }
            let j_hi = c.min(n1);
            for j in 1..=j_hi {
                if w[j] == f64::NEG_INFINITY {
                    continue;
                }
                let src_row = (n1 - j) * stride;
                let shift = m * j;
                if shift > s_hi {
                    break;
                }
                for s in shift..=s_hi {
                    let sv = vals[src_row + s - shift];
                    if sv == f64::NEG_INFINITY {
                        continue;
                    }
                    let v = sv + w[j];
                    if v <= row_max[s] {
                        row_acc[s] += (v - row_max[s]).exp();
                    } else {
                        row_acc[s] = row_acc[s] * (row_max[s] - v).exp() + 1.0;
                        row_max[s] = v;
                    }
                }
            }
            let out = &mut vals[n1 * stride..n1 * stride + s_hi + 1];
            for (s, slot) in out.iter_mut().enumerate() {
                *slot = if row_max[s] == f64::NEG_INFINITY {
                    f64::NEG_INFINITY
                } else {
                    row_max[s] + row_acc[s].ln()
                };
            }
        }
        n_reach = new_n_reach;
        s_reach = new_s_reach;
    }

    CountTable {
        n,
        trials,
        s_max,
        hist: hist.to_vec(),
        vals,
    }
}

/// Per-prior log-gamma ladders for evaluating the K=2 cell weight
/// DirMult(N₁) + BetaBin₁(s₁, N₁) + BetaBin₂(s_tot - s₁, n - N₁).
pub struct CellWeights {
    n: usize,
    trials: usize,
    s_tot: usize,
    dir: LnGammaLadder,
    num_a: LnGammaLadder,
    num_b: LnGammaLadder,
    den: LnGammaLadder,
    /// Label-independent constant: Dirichlet and Beta normalizers plus the
    /// dataset's Σ ln C(M, x_i).
    base: f64,
}

impl CellWeights {
    pub fn new(table: &CountTable, spec: &MixtureSpec, ln_binom_const: f64) -> Result<Self> {
        let (alpha, beta) = match spec.prior.component {
            ComponentPrior::Beta { alpha, beta } => (alpha, beta),
            _ => {
                return Err(Error::UnsupportedEngine(
                    "histogram DP needs the binomial family".into(),
                ))
            }
        };
        let eta = spec.prior.eta1;
        let n = table.n;
        let trials = table.trials;
        let s_cap = trials * n;
        let base = crate::numeric::ln_gamma(2.0 * eta) - 2.0 * crate::numeric::ln_gamma(eta)
            - crate::numeric::ln_gamma(2.0 * eta + n as f64)
            - 2.0 * (crate::numeric::ln_gamma(alpha) + crate::numeric::ln_gamma(beta)
                - crate::numeric::ln_gamma(alpha + beta))
            + ln_binom_const;
        Ok(CellWeights {
            n,
            trials,
            s_tot: table.s_max,
            dir: LnGammaLadder::new(eta, n),
            num_a: LnGammaLadder::new(alpha, s_cap),
            num_b: LnGammaLadder::new(beta, s_cap),
            den: LnGammaLadder::new(alpha + beta, s_cap),
            base,
        })
    }

    /// ln of the assignment-class weight for occupancy (N₁, s₁).
    #[inline]
    pub fn cell(&self, n1: usize, s1: usize) -> f64 {
        let n2 = self.n - n1;
        let s2 = self.s_tot - s1;
        let cap1 = self.trials * n1;
        let cap2 = self.trials * n2;
        debug_assert!(s1 <= cap1 && s2 <= cap2);
        self.base
            + self.dir.at(n1)
            + self.dir.at(n2)
            + self.num_a.at(s1)
            + self.num_b.at(cap1 - s1)
            - self.den.at(cap1)
            + self.num_a.at(s2)
            + self.num_b.at(cap2 - s2)
            - self.den.at(cap2)
    }
}

/// Iterates the reachable cells of a table with their values.
fn for_each_finite(table: &CountTable, mut f: impl FnMut(usize, usize, f64)) {
    let stride = table.s_max + 1;
    for n1 in 0..=table.n {
        let s_hi = table.s_max.min(table.trials * n1);
        let row = &table.vals[n1 * stride..n1 * stride + s_hi + 1];
        for (s1, &v) in row.iter().enumerate() {
            if v != f64::NEG_INFINITY {
                let s2 = table.s_max - s1;
                if s2 <= table.trials * (table.n - n1) {
                    f(n1, s1, v);
                }
            }
        }
    }
}

/// ln Z(Xⁿ) from a prebuilt ways table.
pub fn log_evidence_from_table(
    table: &CountTable,
    spec: &MixtureSpec,
    ln_binom_const: f64,
) -> Result<f64> {
    let weights = CellWeights::new(table, spec, ln_binom_const)?;
    let mut acc = StreamingLse::new();
    for_each_finite(table, |n1, s1, v| acc.add(v + weights.cell(n1, s1)));
    Ok(acc.value())
}

/// E[g(N₁, s₁)] under a conditional (probability) table, where g is the
/// complete-data log evidence of the counts.
pub fn expected_log_evidence(
    cond: &CountTable,
    spec: &MixtureSpec,
    ln_binom_const: f64,
) -> Result<f64> {
    let weights = CellWeights::new(cond, spec, ln_binom_const)?;
    let total = cond.total();
    if total.abs() > 1e-6 {
        return Err(Error::Numerical(format!(
            "conditional table mass e^{total} != 1"
        )));
    }
    let mut acc = 0.0;
    for_each_finite(cond, |n1, s1, v| {
        acc += (v - total).exp() * weights.cell(n1, s1);
    });
    Ok(acc)
}

fn dp_guard(ds: &Dataset, spec: &MixtureSpec) -> Result<()> {
    if !matches!(spec.family, Family::Binomial { .. }) {
        return Err(Error::UnsupportedEngine(
            "dp engine supports the binomial family only".into(),
        ));
    }
    if spec.k != 2 {
        return Err(Error::UnsupportedEngine(format!(
            "dp engine supports K = 2, got K = {}",
            spec.k
        )));
    }
    if ds.histogram().is_none() {
        return Err(Error::Invalid("dataset lacks a histogram".into()));
    }
    Ok(())
}

/// Exact ln Z(Xⁿ) for binomial K=2 via the histogram DP.
pub fn log_evidence_dp(ds: &Dataset, spec: &MixtureSpec) -> Result<f64> {
    dp_guard(ds, spec)?;
    let hist = ds.histogram().unwrap();
    let table = CountTable::ways(hist);
    let consts = super::CompleteConsts::for_dataset(ds, spec);
    log_evidence_from_table(&table, spec, consts.ln_const)
}

/// Exact posterior masses of axis-aligned parameter boxes for binomial K=2,
/// via the same (N₁, s₁) decomposition with regularized incomplete beta
/// factors per dimension. Serves as an independent oracle for the quadrature
/// route.
pub fn region_mass_exact(
    ds: &Dataset,
    spec: &MixtureSpec,
    a_box: (f64, f64),
    b1_box: (f64, f64),
    b2_box: (f64, f64),
) -> Result<f64> {
    dp_guard(ds, spec)?;
    let (alpha, beta) = match spec.prior.component {
        ComponentPrior::Beta { alpha, beta } => (alpha, beta),
        _ => unreachable!(),
    };
    let eta = spec.prior.eta1;
    let hist = ds.histogram().unwrap();
    let table = CountTable::ways(hist);
    let consts = super::CompleteConsts::for_dataset(ds, spec);
    let log_z = log_evidence_from_table(&table, spec, consts.ln_const)?;
    let weights = CellWeights::new(&table, spec, consts.ln_const)?;

    let trials = table.trials;
    let n = table.n;
    let s_tot = table.s_max;
    let frac = |p: f64, q: f64, (lo, hi): (f64, f64)| -> f64 {
        let hi = crate::numeric::beta_reg(p, q, hi.clamp(0.0, 1.0));
        let lo = crate::numeric::beta_reg(p, q, lo.clamp(0.0, 1.0));
        (hi - lo).max(0.0)
    };
    let mut acc = StreamingLse::new();
    for_each_finite(&table, |n1, s1, v| {
        let n2 = n - n1;
        let s2 = s_tot - s1;
        let fa = frac(eta + n1 as f64, eta + n2 as f64, a_box);
        let f1 = frac(
            alpha + s1 as f64,
            beta + (trials * n1 - s1) as f64,
            b1_box,
        );
        let f2 = frac(
            alpha + s2 as f64,
            beta + (trials * n2 - s2) as f64,
            b2_box,
        );
        let factor = fa * f1 * f2;
        if factor > 0.0 {
            acc.add(v + weights.cell(n1, s1) + factor.ln());
        }
    });
    Ok((acc.value() - log_z).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{sample_dataset, SeedSpec};
    use crate::evidence::tests::binom_spec;
    use crate::evidence::{log_evidence_brute, log_evidence_from_counts, CompleteConsts, LabelCounts};
    use crate::model::TrueModel;
    use crate::numeric::{ln_choose, log_sum_exp};

    #[test]
    fn ways_table_counts_assignments() {
        // hist = [2, 1]: three items, values (0,0,1). W sums to 2^3.
        let t = CountTable::ways(&[2, 1]);
        assert!((t.total() - 8f64.ln()).abs() < 1e-12);
        // N1=1, s1=1: exactly the single value-1 item in component 1.
        assert!((t.at(1, 1) - 0.0).abs() < 1e-12);
        // N1=1, s1=0: either of the two value-0 items.
        assert!((t.at(1, 0) - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn dp_matches_brute_on_random_datasets() {
        let spec = binom_spec(3, 2, 0.6);
        let tm = TrueModel::new(&spec.family, vec![0.5, 0.5], vec![0.3, 0.8]).unwrap();
        for task in 0..10 {
            let n = 3 + (task as usize % 8);
            let ds = sample_dataset(&tm, &spec, n, SeedSpec::new(10), task);
            let brute = log_evidence_brute(&ds, &spec).unwrap();
            let dp = log_evidence_dp(&ds, &spec).unwrap();
            assert!((brute - dp).abs() < 1e-9, "n={n}: {brute} vs {dp}");
        }
    }

    #[test]
    fn dp_single_value_class_matches_direct_sum() {
        // n identical values x = m: Z = Σ_j C(n,j) DirMult(j) BB(m j, j) BB(m(n-j), n-j).
        let spec = binom_spec(3, 2, 1.3);
        let m = 2usize;
        let n = 9usize;
        let ds = crate::data::Dataset {
            n,
            family: spec.family,
            xs: vec![m as f64; n],
            ys: Some(vec![1; n]),
            seed: 0,
            task: 0,
            hist: None,
        }
        .finalize()
        .unwrap();
        let dp = log_evidence_dp(&ds, &spec).unwrap();
        let consts = CompleteConsts::for_dataset(&ds, &spec);
        let terms: Vec<f64> = (0..=n)
            .map(|j| {
                let counts = LabelCounts {
                    counts: vec![j, n - j],
                    sums: vec![(m * j) as f64, (m * (n - j)) as f64],
                };
                ln_choose(n as u64, j as u64)
                    + log_evidence_from_counts(&counts, &consts, &spec)
            })
            .collect();
        let direct = log_sum_exp(&terms);
        assert!((dp - direct).abs() < 1e-10, "{dp} vs {direct}");
    }

    #[test]
    fn dp_empty_dataset() {
        let spec = binom_spec(3, 2, 1.0);
        let tm = TrueModel::new(&spec.family, vec![1.0], vec![0.5]).unwrap();
        let ds = sample_dataset(&tm, &spec, 0, SeedSpec::new(1), 0);
        assert!(log_evidence_dp(&ds, &spec).unwrap().abs() < 1e-12);
    }

    #[test]
    fn dp_rejects_unsupported_configs() {
        let spec3 = binom_spec(3, 3, 1.0);
        let tm = TrueModel::new(&spec3.family, vec![1.0], vec![0.5]).unwrap();
        let ds = sample_dataset(&tm, &spec3, 5, SeedSpec::new(1), 0);
        assert!(matches!(
            log_evidence_dp(&ds, &spec3),
            Err(Error::UnsupportedEngine(_))
        ));
    }

    #[test]
    fn conditional_table_is_a_distribution() {
        let hist = [3usize, 4, 2, 1];
        let r = [0.2, 0.7, 0.5, 0.9];
        let t = CountTable::conditional(&hist, &r);
        assert!(t.total().abs() < 1e-10);
        // Mean of N1 must be Σ c_m r_m.
        let expected: f64 = hist
            .iter()
            .zip(&r)
            .map(|(&c, &rm)| c as f64 * rm)
            .sum();
        let mut mean = 0.0;
        for_each_finite(&t, |n1, _s1, v| mean += v.exp() * n1 as f64);
        assert!((mean - expected).abs() < 1e-9, "{mean} vs {expected}");
    }

    #[test]
    fn degenerate_conditional_probabilities() {
        let hist = [2usize, 3];
        let t = CountTable::conditional(&hist, &[1.0, 1.0]);
        // Everything goes to component 1.
        assert!((t.at(5, 3) - 0.0).abs() < 1e-12);
        assert!(t.total().abs() < 1e-12);
    }

    #[test]
    fn region_masses_partition_to_one() {
        let spec = binom_spec(3, 2, 0.8);
        let tm = TrueModel::new(&spec.family, vec![1.0], vec![0.5]).unwrap();
        let ds = sample_dataset(&tm, &spec, 40, SeedSpec::new(5), 0);
        let full = region_mass_exact(&ds, &spec, (0.0, 1.0), (0.0, 1.0), (0.0, 1.0)).unwrap();
        assert!((full - 1.0).abs() < 1e-9, "full mass {full}");
        let left = region_mass_exact(&ds, &spec, (0.0, 0.5), (0.0, 1.0), (0.0, 1.0)).unwrap();
        let right = region_mass_exact(&ds, &spec, (0.5, 1.0), (0.0, 1.0), (0.0, 1.0)).unwrap();
        assert!((left + right - 1.0).abs() < 1e-9);
    }
}
