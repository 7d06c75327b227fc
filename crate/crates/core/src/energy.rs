//! Normalized free energies, replication grids, and learning-coefficient
//! regression.
//!
//! The per-dataset normalized free energy is the control-variate form
//!
//! ```text
//! F̃_X   = -ln Z(Xⁿ)     + Σ_i ln q(x_i)
//! F̃_XY  = -ln Z(Xⁿ,Yⁿ)  + Σ_i ln q(x_i, y_i)
//! ```
//!
//! whose expectations over datasets are the average free energies F_X(n) and
//! F_XY(n). Subtracting the true log-likelihood removes the O(√n) dataset
//! noise, leaving O(1) fluctuation around λ ln n; without it the λ ln n
//! signal would be invisible at feasible replicate counts.
//!
//! Datasets depend only on (master seed, task), not on the prior, so one
//! replication grid can evaluate several Dirichlet hyperparameters on shared
//! evidence tables; the histogram DP table is prior-independent combinatorics
//! and is built once per dataset.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{empirical_log_q, sample_dataset, Dataset, SeedSpec};
use crate::error::{Error, Result};
use crate::evidence::{
    dp, log_evidence_brute, log_evidence_from_counts, quad, CompleteConsts, EvidenceEngine,
    LabelCounts,
};
use crate::model::{Family, MixtureSpec, TrueModel};
use crate::numeric::{derive_seed, log_mean};

/// Which normalized energy a fit refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyKind {
    X,
    Xy,
}

/// F̃_X for one dataset: -ln Z(Xⁿ) + Σ ln q(x_i).
pub fn normalized_free_energy_x(
    ds: &Dataset,
    spec: &MixtureSpec,
    tm: &TrueModel,
    engine: EvidenceEngine,
) -> Result<f64> {
    let log_z = match engine {
        EvidenceEngine::Brute => log_evidence_brute(ds, spec)?,
        EvidenceEngine::Dp => dp::log_evidence_dp(ds, spec)?,
        EvidenceEngine::Quad => {
            quad::log_evidence_quad(ds, spec, &quad::QuadConfig::default())?.log_z
        }
        EvidenceEngine::Complete => {
            return Err(Error::UnsupportedEngine(
                "the complete engine computes Z(X,Y), not Z(X)".into(),
            ))
        }
    };
    Ok(-log_z + crate::data::empirical_log_q_incomplete(ds, tm, spec))
}

/// F̃_XY for one labeled dataset: -ln Z(Xⁿ,Yⁿ) + Σ ln q(x_i,y_i).
pub fn normalized_free_energy_xy(
    ds: &Dataset,
    spec: &MixtureSpec,
    tm: &TrueModel,
) -> Result<f64> {
    let log_z = crate::evidence::log_evidence_complete(ds, spec)?;
    let (_, lq_xy) = empirical_log_q(ds, tm, spec)?;
    Ok(-log_z + lq_xy)
}

/// One replication cell.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EnergyCell {
    pub n: usize,
    pub replicate: usize,
    /// Derived stream seed of the dataset (for provenance).
    pub seed: u64,
    pub f_x: f64,
    pub f_xy: f64,
}

/// Replicated normalized free energies over a geometric n grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnergyCurve {
    pub family: Family,
    pub k: usize,
    pub kstar: usize,
    pub eta1: f64,
    pub engine: EvidenceEngine,
    pub master_seed: u64,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    pub cells: Vec<EnergyCell>,
    /// Cells that failed an engine guard, as (n, replicate, message).
    pub errors: Vec<(usize, usize, String)>,
}

/// Mean and standard error of one grid cell.
#[derive(Clone, Copy, Debug)]
pub struct CellStat {
    pub n: usize,
    pub mean: f64,
    pub se: f64,
    pub count: usize,
}

impl EnergyCurve {
    pub fn incomplete(&self) -> bool {
        !self.errors.is_empty()
    }

    pub fn values(&self, kind: EnergyKind) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.cells.iter().map(move |c| {
            (
                c.n,
                match kind {
                    EnergyKind::X => c.f_x,
                    EnergyKind::Xy => c.f_xy,
                },
            )
        })
    }

    pub fn cell_stats(&self, kind: EnergyKind) -> Vec<CellStat> {
        grouped_stats(self.n_grid.iter().copied(), self.values(kind))
    }

    /// CSV with the columns
    /// `family,K,Kstar,M,eta1,n,replicate,seed,engine,f_tilde_x,f_tilde_xy`.
    pub fn to_csv(&self) -> String {
        let (family, m) = match self.family {
            Family::Binomial { trials } => ("binomial", trials),
            Family::Gaussian => ("gaussian", 0),
        };
        let mut s =
            String::from("family,K,Kstar,M,eta1,n,replicate,seed,engine,f_tilde_x,f_tilde_xy\n");
        for c in &self.cells {
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                family,
                self.k,
                self.kstar,
                m,
                self.eta1,
                c.n,
                c.replicate,
                c.seed,
                self.engine.name(),
                c.f_x,
                c.f_xy
            ));
        }
        s
    }
}

pub(crate) fn grouped_stats(
    n_grid: impl Iterator<Item = usize>,
    values: impl Iterator<Item = (usize, f64)>,
) -> Vec<CellStat> {
    let grid: Vec<usize> = n_grid.collect();
    let vals: Vec<(usize, f64)> = values.collect();
    grid.iter()
        .map(|&n| {
            let group: Vec<f64> = vals
                .iter()
                .filter(|(gn, _)| *gn == n)
                .map(|(_, v)| *v)
                .collect();
            let count = group.len();
            let mean = group.iter().sum::<f64>() / count as f64;
            let var = if count > 1 {
                group.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (count - 1) as f64
            } else {
                0.0
            };
            CellStat {
                n,
                mean,
                se: (var / count as f64).sqrt(),
                count,
            }
        })
        .collect()
}

/// Regression model for the learning-coefficient fit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// mean F̃ = λ ln n + c.
    LnOnly,
    /// mean F̃ = λ ln n - (m-1) ln ln n + c. The two regressors are nearly
    /// collinear at desk scale; exposed as a diagnostic only.
    LnPlusLnln,
}

/// Weighted least-squares fit of a slope against ln n with a bootstrap CI.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LambdaFit {
    pub lambda_hat: f64,
    pub intercept: f64,
    /// 1 - (lnln n coefficient); present for [`FitModel::LnPlusLnln`].
    pub m_hat: Option<f64>,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub n_points: usize,
    pub model: FitModel,
    /// Per-grid-point residuals of the mean curve.
    pub residuals: Vec<f64>,
}

/// Solves the normal equations of a small weighted least-squares problem.
fn wls(design: &[Vec<f64>], y: &[f64], w: &[f64]) -> Option<Vec<f64>> {
    let p = design[0].len();
    let mut ata = vec![vec![0.0; p]; p];
    let mut aty = vec![0.0; p];
    for (row, (&yi, &wi)) in design.iter().zip(y.iter().zip(w)) {
        for i in 0..p {
            aty[i] += wi * row[i] * yi;
            for j in 0..p {
                ata[i][j] += wi * row[i] * row[j];
            }
        }
    }
    // Gaussian elimination with partial pivoting.
    let mut m = ata;
    let mut rhs = aty;
    for col in 0..p {
        let piv = (col..p).max_by(|&a, &b| m[a][col].abs().partial_cmp(&m[b][col].abs()).unwrap())?;
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        for r in (col + 1)..p {
            let f = m[r][col] / m[col][col];
            for c in col..p {
                m[r][c] -= f * m[col][c];
            }
            rhs[r] -= f * rhs[col];
        }
    }
    let mut beta = vec![0.0; p];
    for col in (0..p).rev() {
        let mut v = rhs[col];
        for c in (col + 1)..p {
            v -= m[col][c] * beta[c];
        }
        beta[col] = v / m[col][col];
    }
    Some(beta)
}

fn design_row(n: usize, model: FitModel) -> Vec<f64> {
    let ln_n = (n as f64).ln();
    match model {
        FitModel::LnOnly => vec![1.0, ln_n],
        FitModel::LnPlusLnln => vec![1.0, ln_n, ln_n.ln()],
    }
}

/// Core slope-vs-ln n fit shared by the λ and D(n) estimators. `groups` maps
/// each grid n to its replicate values.
pub(crate) fn fit_log_slope(
    groups: &[(usize, Vec<f64>)],
    model: FitModel,
    bootstrap_seed: u64,
) -> Result<LambdaFit> {
    let points: Vec<&(usize, Vec<f64>)> = groups.iter().filter(|(_, v)| !v.is_empty()).collect();
    if points.len() < 4 {
        return Err(Error::Invalid(format!(
            "slope fit needs at least 4 grid points, got {}",
            points.len()
        )));
    }
    let stats: Vec<CellStat> = points
        .iter()
        .map(|(n, v)| {
            let s = grouped_stats(std::iter::once(*n), v.iter().map(|x| (*n, *x)));
            s[0]
        })
        .collect();
    // Inverse-variance weights; exact replicate agreement (synthetic input)
    // falls back to equal weights.
    let all_zero = stats.iter().all(|s| s.se == 0.0);
    let weights: Vec<f64> = stats
        .iter()
        .map(|s| if all_zero { 1.0 } else { 1.0 / (s.se * s.se).max(1e-12) })
        .collect();
    let design: Vec<Vec<f64>> = stats.iter().map(|s| design_row(s.n, model)).collect();
    let means: Vec<f64> = stats.iter().map(|s| s.mean).collect();
    let beta =
        wls(&design, &means, &weights).ok_or_else(|| Error::Numerical("singular WLS".into()))?;
    let residuals: Vec<f64> = design
        .iter()
        .zip(&means)
        .map(|(row, y)| y - row.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>())
        .collect();

    // Nonparametric bootstrap over replicates within each cell.
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(bootstrap_seed, 0xB007));
    let b_rounds = 1000;
    let mut slopes = Vec::with_capacity(b_rounds);
    for _ in 0..b_rounds {
        let resampled: Vec<f64> = points
            .iter()
            .map(|(_, v)| {
                let r = v.len();
                (0..r).map(|_| v[rng.gen_range(0..r)]).sum::<f64>() / r as f64
            })
            .collect();
        if let Some(b) = wls(&design, &resampled, &weights) {
            slopes.push(b[1]);
        }
    }
    slopes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let lo = slopes[(0.025 * slopes.len() as f64).floor() as usize];
    let hi = slopes[((0.975 * slopes.len() as f64).ceil() as usize).min(slopes.len() - 1)];

    Ok(LambdaFit {
        lambda_hat: beta[1],
        intercept: beta[0],
        m_hat: if model == FitModel::LnPlusLnln {
            Some(1.0 - beta[2])
        } else {
            None
        },
        ci_lo: lo.min(beta[1]),
        ci_hi: hi.max(beta[1]),
        n_points: points.len(),
        model,
        residuals,
    })
}

/// Learning-coefficient fit on one energy kind of a curve.
pub fn fit_lambda(curve: &EnergyCurve, kind: EnergyKind, model: FitModel) -> Result<LambdaFit> {
    let groups: Vec<(usize, Vec<f64>)> = curve
        .n_grid
        .iter()
        .map(|&n| {
            (
                n,
                curve
                    .values(kind)
                    .filter(|(gn, _)| *gn == n)
                    .map(|(_, v)| v)
                    .collect(),
            )
        })
        .collect();
    fit_log_slope(&groups, model, curve.master_seed)
}

/// Finite-difference estimate of the generalization error between adjacent
/// grid points.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GenErrorPoint {
    /// Logarithmic-mean midpoint of the two sample sizes.
    pub n_mid: f64,
    pub g_hat: f64,
    pub se: f64,
}

/// G(n) estimates as difference quotients of the mean F̃_X curve. With the
/// logarithmic-mean midpoint, a pure λ ln n curve gives exactly λ / n_mid.
pub fn generalization_error_curve(curve: &EnergyCurve) -> Result<Vec<GenErrorPoint>> {
    let stats = curve.cell_stats(EnergyKind::X);
    if stats.len() < 3 {
        return Err(Error::Invalid(
            "generalization-error differencing needs at least 3 grid points".into(),
        ));
    }
    Ok(stats
        .windows(2)
        .map(|w| {
            let dn = (w[1].n - w[0].n) as f64;
            GenErrorPoint {
                n_mid: log_mean(w[0].n as f64, w[1].n as f64),
                g_hat: (w[1].mean - w[0].mean) / dn,
                se: (w[0].se * w[0].se + w[1].se * w[1].se).sqrt() / dn,
            }
        })
        .collect())
}

/// Per-cell values produced by the shared replication runner.
#[derive(Clone, Debug)]
struct CellOutcome {
    n_idx: usize,
    replicate: usize,
    seed: u64,
    /// (f_x, f_xy, dn) per requested η₁.
    per_eta: Result<Vec<(f64, f64, Option<f64>)>>,
}

/// Runs one replication grid and evaluates every η₁ on shared per-dataset
/// tables. Returns one curve per η₁ (and the matching D(n) contributions
/// when `with_dn` is set).
pub fn replication_grid(
    base: &MixtureSpec,
    eta1s: &[f64],
    tm: &TrueModel,
    n_grid: &[usize],
    replicates: usize,
    seed: SeedSpec,
    engine: EvidenceEngine,
    with_dn: bool,
) -> Result<Vec<(EnergyCurve, Option<crate::latent::DnCurve>)>> {
    if n_grid.len() < 4 {
        return Err(Error::Invalid("n grid needs at least 4 points".into()));
    }
    if replicates < 20 {
        return Err(Error::Invalid("need at least 20 replicates".into()));
    }
    if eta1s.is_empty() {
        return Err(Error::Invalid("need at least one eta1".into()));
    }
    let specs: Vec<MixtureSpec> = eta1s
        .iter()
        .map(|&eta1| {
            let mut prior = base.prior;
            prior.eta1 = eta1;
            MixtureSpec::new(base.family, base.k, prior)
        })
        .collect::<Result<Vec<_>>>()?;

    let cells: Vec<(usize, usize)> = (0..n_grid.len())
        .flat_map(|i| (0..replicates).map(move |r| (i, r)))
        .collect();
    let outcomes: Vec<CellOutcome> = cells
        .par_iter()
        .map(|&(i, r)| {
            let task = (i * replicates + r) as u64;
            let ds = sample_dataset(tm, base, n_grid[i], seed, task);
            let per_eta = evaluate_cell(&ds, &specs, tm, engine, with_dn);
            CellOutcome {
                n_idx: i,
                replicate: r,
                seed: derive_seed(seed.master_seed, task),
                per_eta,
            }
        })
        .collect();

    let mut out = Vec::new();
    for (e, spec) in specs.iter().enumerate() {
        let mut cells = Vec::new();
        let mut dn_cells = Vec::new();
        let mut errors = Vec::new();
        for o in &outcomes {
            match &o.per_eta {
                Ok(v) => {
                    let (f_x, f_xy, dn) = v[e];
                    cells.push(EnergyCell {
                        n: n_grid[o.n_idx],
                        replicate: o.replicate,
                        seed: o.seed,
                        f_x,
                        f_xy,
                    });
                    if let Some(d) = dn {
                        dn_cells.push(crate::latent::DnCell {
                            n: n_grid[o.n_idx],
                            replicate: o.replicate,
                            seed: o.seed,
                            contribution: d,
                        });
                    }
                }
                Err(err) => {
                    errors.push((n_grid[o.n_idx], o.replicate, err.to_string()));
                }
            }
        }
        let curve = EnergyCurve {
            family: base.family,
            k: base.k,
            kstar: tm.kstar(),
            eta1: spec.prior.eta1,
            engine,
            master_seed: seed.master_seed,
            n_grid: n_grid.to_vec(),
            replicates,
            cells,
            errors,
        };
        let dn_curve = if with_dn {
            Some(crate::latent::DnCurve {
                eta1: spec.prior.eta1,
                master_seed: seed.master_seed,
                n_grid: n_grid.to_vec(),
                replicates,
                cells: dn_cells,
            })
        } else {
            None
        };
        out.push((curve, dn_curve));
    }
    Ok(out)
}

fn evaluate_cell(
    ds: &Dataset,
    specs: &[MixtureSpec],
    tm: &TrueModel,
    engine: EvidenceEngine,
    with_dn: bool,
) -> Result<Vec<(f64, f64, Option<f64>)>> {
    let consts = CompleteConsts::for_dataset(ds, specs[0].k_spec());
    let counts = LabelCounts::from_labels(&ds.xs, ds.labels()?, specs[0].k)?;
    let (lq_x, lq_xy) = empirical_log_q(ds, tm, specs[0].k_spec())?;

    // Prior-independent tables, built once per dataset.
    let dp_table = match engine {
        EvidenceEngine::Dp => {
            let hist = ds
                .histogram()
                .ok_or_else(|| Error::Invalid("dp engine needs a histogram".into()))?;
            Some(dp::CountTable::ways(hist))
        }
        _ => None,
    };
    let cond_table = if with_dn && tm.kstar() >= 2 {
        crate::latent::conditional_table(ds, tm, specs[0].k_spec())?
    } else {
        None
    };

    let mut out = Vec::with_capacity(specs.len());
    for spec in specs {
        let log_z_x = match (&engine, &dp_table) {
            (EvidenceEngine::Dp, Some(table)) => {
                dp::log_evidence_from_table(table, spec, consts.ln_const)?
            }
            (EvidenceEngine::Brute, _) => log_evidence_brute(ds, spec)?,
            (EvidenceEngine::Quad, _) => {
                quad::log_evidence_quad(ds, spec, &quad::QuadConfig::default())?.log_z
            }
            _ => {
                return Err(Error::UnsupportedEngine(
                    "energy grids need an incomplete-evidence engine".into(),
                ))
            }
        };
        let log_z_xy = log_evidence_from_counts(&counts, &consts, spec);
        let f_x = -log_z_x + lq_x;
        let f_xy = -log_z_xy + lq_xy;
        let dn = if with_dn {
            Some(crate::latent::latent_error_with_logz(
                ds,
                spec,
                tm,
                log_z_x,
                cond_table.as_ref(),
            )?)
        } else {
            None
        };
        out.push((f_x, f_xy, dn));
    }
    Ok(out)
}

/// Deterministic single-η₁ replication grid (see [`replication_grid`]).
pub fn energy_curve(
    spec: &MixtureSpec,
    tm: &TrueModel,
    n_grid: &[usize],
    replicates: usize,
    seed: SeedSpec,
    engine: EvidenceEngine,
) -> Result<EnergyCurve> {
    let mut curves = replication_grid(
        spec,
        &[spec.prior.eta1],
        tm,
        n_grid,
        replicates,
        seed,
        engine,
        false,
    )?;
    Ok(curves.remove(0).0)
}

impl MixtureSpec {
    /// Borrow helper to keep the runner readable.
    fn k_spec(&self) -> &MixtureSpec {
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evidence::log_evidence_complete;
    use crate::model::{ComponentPrior, PriorHyper};

    fn binom_spec(m: u32, eta1: f64) -> MixtureSpec {
        MixtureSpec::new(
            Family::Binomial { trials: m },
            2,
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
    fn zero_data_energies_vanish() {
        let spec = binom_spec(3, 0.5);
        let tm = TrueModel::new(&spec.family, vec![1.0], vec![0.5]).unwrap();
        let ds = sample_dataset(&tm, &spec, 0, SeedSpec::new(1), 0);
        assert_eq!(
            normalized_free_energy_x(&ds, &spec, &tm, EvidenceEngine::Brute).unwrap(),
            0.0
        );
        assert_eq!(normalized_free_energy_xy(&ds, &spec, &tm).unwrap(), 0.0);
    }

    #[test]
    fn brute_and_dp_give_identical_energy() {
        let spec = binom_spec(3, 0.8);
        let tm = TrueModel::new(&spec.family, vec![1.0], vec![0.5]).unwrap();
        for task in 0..5 {
            let ds = sample_dataset(&tm, &spec, 9, SeedSpec::new(2), task);
            let a = normalized_free_energy_x(&ds, &spec, &tm, EvidenceEngine::Brute).unwrap();
            let b = normalized_free_energy_x(&ds, &spec, &tm, EvidenceEngine::Dp).unwrap();
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn complete_minus_incomplete_identity_kstar1() {
        // For K* = 1, F̃_XY - F̃_X = ln Z(Xⁿ) - ln Z(Xⁿ, 1ⁿ) exactly.
        let spec = binom_spec(3, 1.2);
        let tm = TrueModel::new(&spec.family, vec![1.0], vec![0.5]).unwrap();
        for task in 0..6 {
            let ds = sample_dataset(&tm, &spec, 8, SeedSpec::new(3), task);
            let fx = normalized_free_energy_x(&ds, &spec, &tm, EvidenceEngine::Brute).unwrap();
            let fxy = normalized_free_energy_xy(&ds, &spec, &tm).unwrap();
            let lhs = fxy - fx;
            let rhs = crate::evidence::log_evidence_brute(&ds, &spec).unwrap()
                - log_evidence_complete(&ds, &spec).unwrap();
            assert!((lhs - rhs).abs() < 1e-9, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn curve_is_deterministic_and_parallel_stable() {
        let spec = binom_spec(3, 1.0);
        let tm = TrueModel::new(&spec.family, vec![1.0], vec![0.5]).unwrap();
        let grid = [6, 8, 10, 12];
        let c1 = energy_curve(&spec, &tm, &grid, 20, SeedSpec::new(5), EvidenceEngine::Dp).unwrap();
        let c2 = energy_curve(&spec, &tm, &grid, 20, SeedSpec::new(5), EvidenceEngine::Dp).unwrap();
        assert_eq!(c1.to_csv(), c2.to_csv());
        assert!(!c1.incomplete());
    }

    #[test]
    fn guard_violations_are_recorded_per_cell() {
        let spec = binom_spec(3, 1.0);
        let tm = TrueModel::new(&spec.family, vec![1.0], vec![0.5]).unwrap();
        // n = 25 exceeds the brute guard of 2^20 assignments.
        let grid = [4, 6, 8, 25];
        let curve =
            energy_curve(&spec, &tm, &grid, 20, SeedSpec::new(6), EvidenceEngine::Brute).unwrap();
        assert!(curve.incomplete());
        assert_eq!(curve.errors.len(), 20);
        assert!(curve.errors.iter().all(|(n, _, _)| *n == 25));
        assert_eq!(curve.cells.len(), 60);
    }

    #[test]
    fn fit_recovers_synthetic_slopes() {
        let mk_curve = |f: &dyn Fn(f64) -> f64| {
            let grid = [100usize, 200, 400, 800, 1600];
            EnergyCurve {
                family: Family::Binomial { trials: 3 },
                k: 2,
                kstar: 1,
                eta1: 1.0,
                engine: EvidenceEngine::Dp,
                master_seed: 0,
                n_grid: grid.to_vec(),
                replicates: 2,
                cells: grid
                    .iter()
                    .flat_map(|&n| {
                        (0..2).map(move |r| EnergyCell {
                            n,
                            replicate: r,
                            seed: 0,
                            f_x: f(n as f64),
                            f_xy: f(n as f64),
                        })
                    })
                    .collect(),
                errors: Vec::new(),
            }
        };
        let exact = mk_curve(&|n| 0.75 * n.ln() + 2.0);
        let fit = fit_lambda(&exact, EnergyKind::X, FitModel::LnOnly).unwrap();
        assert!((fit.lambda_hat - 0.75).abs() < 1e-10, "{}", fit.lambda_hat);
        assert!((fit.intercept - 2.0).abs() < 1e-9);
        assert!(fit.ci_lo <= fit.lambda_hat && fit.lambda_hat <= fit.ci_hi);

        let with_lnln = mk_curve(&|n| 0.9 * n.ln() - n.ln().ln() + 1.3);
        let fit2 = fit_lambda(&with_lnln, EnergyKind::X, FitModel::LnPlusLnln).unwrap();
        assert!((fit2.lambda_hat - 0.9).abs() < 1e-8);
        assert!((fit2.m_hat.unwrap() - 2.0).abs() < 1e-8);
    }

    #[test]
    fn fit_needs_four_points() {
        let groups = vec![(10usize, vec![1.0]), (20, vec![2.0]), (40, vec![3.0])];
        assert!(fit_log_slope(&groups, FitModel::LnOnly, 0).is_err());
    }

    #[test]
    fn generalization_curve_of_log_curve() {
        let grid = [100usize, 200, 400, 800];
        let lambda = 0.6;
        let curve = EnergyCurve {
            family: Family::Binomial { trials: 3 },
            k: 2,
            kstar: 1,
            eta1: 1.0,
            engine: EvidenceEngine::Dp,
            master_seed: 0,
            n_grid: grid.to_vec(),
            replicates: 1,
            cells: grid
                .iter()
                .map(|&n| EnergyCell {
                    n,
                    replicate: 0,
                    seed: 0,
                    f_x: lambda * (n as f64).ln(),
                    f_xy: 0.0,
                })
                .collect(),
            errors: Vec::new(),
        };
        for p in generalization_error_curve(&curve).unwrap() {
            assert!(
                (p.g_hat - lambda / p.n_mid).abs() < 1e-12,
                "g {} vs {}",
                p.g_hat,
                lambda / p.n_mid
            );
            assert!(p.g_hat >= 0.0);
        }
    }
}
