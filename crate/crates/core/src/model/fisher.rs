//! Fisher information matrices I_XY and I_X for the mixture, and the
//! regular-case latent-error coefficient Tr[I_XY I_X^{-1}].
//!
//! The parameter vector is w = (a_2,...,a_K, b_1,...,b_K) with
//! a_1 = 1 - Σ_{k>=2} a_k, so d = K-1 + K·d_c.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{gaussian_x_integral, Family, MixtureParams, MixtureSpec};

/// Complete-data and incomplete-data Fisher matrices at a parameter point.
#[derive(Clone, Debug)]
pub struct FisherPair {
    pub i_xy: DMatrix<f64>,
    pub i_x: DMatrix<f64>,
}

impl FisherPair {
    pub fn dim(&self) -> usize {
        self.i_x.nrows()
    }

    /// Smallest eigenvalue of a symmetric matrix.
    pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
        m.clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |a, &b| a.min(b))
    }

    /// Smallest eigenvalue of I_XY - I_X (complete-data information
    /// dominates, so this should be >= -tolerance).
    pub fn min_eigenvalue_gap(&self) -> f64 {
        Self::min_eigenvalue(&(&self.i_xy - &self.i_x))
    }
}

/// ∂ ln f(x|b) / ∂b for one component.
fn comp_score(family: &Family, x: f64, b: f64) -> f64 {
    match family {
        Family::Binomial { trials } => {
            let m = *trials as f64;
            x / b - (m - x) / (1.0 - b)
        }
        Family::Gaussian => x - b,
    }
}

/// Per-component Fisher information of f(·|b).
fn comp_info(family: &Family, b: f64) -> f64 {
    match family {
        Family::Binomial { trials } => *trials as f64 / (b * (1.0 - b)),
        Family::Gaussian => 1.0,
    }
}

/// Score of ln p(x|w): the gradient with respect to (a_2..a_K, b_1..b_K).
fn incomplete_score(params: &MixtureParams, spec: &MixtureSpec, x: f64, out: &mut [f64]) {
    let k = params.k();
    let fam = &spec.family;
    let comps: Vec<f64> = params.comps.iter().map(|&b| fam.comp_density(x, b)).collect();
    let p: f64 = params
        .weights
        .iter()
        .zip(&comps)
        .map(|(&a, &f)| a * f)
        .sum();
    for j in 1..k {
        out[j - 1] = (comps[j] - comps[0]) / p;
    }
    for j in 0..k {
        out[k - 1 + j] = params.weights[j] * comps[j] * comp_score(fam, x, params.comps[j]) / p;
    }
}

fn ln_mixture(params: &MixtureParams, spec: &MixtureSpec, x: f64) -> f64 {
    params
        .weights
        .iter()
        .zip(&params.comps)
        .map(|(&a, &b)| a * spec.family.comp_density(x, b))
        .sum::<f64>()
        .ln()
}

/// Richardson-extrapolated central difference of ln p(x|w) along coordinate
/// `idx`, used to validate the analytic score.
fn fd_incomplete_score(params: &MixtureParams, spec: &MixtureSpec, x: f64, idx: usize) -> f64 {
    let eval = |p: &MixtureParams| ln_mixture(p, spec, x);
    let perturb = |h: f64| {
        let mut p = params.clone();
        let k = p.k();
        if idx < k - 1 {
            p.weights[idx + 1] += h;
            p.weights[0] -= h;
        } else {
            p.comps[idx - (k - 1)] += h;
        }
        p
    };
    let central = |h: f64| (eval(&perturb(h)) - eval(&perturb(-h))) / (2.0 * h);
    let d1 = central(1e-4);
    let d2 = central(5e-5);
    (4.0 * d2 - d1) / 3.0
}

/// Exact Fisher matrices (sums for binomial, quadrature for Gaussian).
///
/// The complete-data matrix is available in closed form for both families:
/// the weight block is diag(1/a_j) + (1/a_1)·11ᵀ on the reduced coordinates,
/// the component block is diag(a_j · I_f(b_j)), and the cross block vanishes
/// because each component's score has mean zero.
pub fn fisher_matrices(params: &MixtureParams, spec: &MixtureSpec) -> Result<FisherPair> {
    params.validate(&spec.family)?;
    if params.k() != spec.k {
        return Err(Error::Invalid(format!(
            "parameter K = {} does not match spec K = {}",
            params.k(),
            spec.k
        )));
    }
    if !params.is_interior(&spec.family) {
        return Err(Error::Singular(
            "Fisher matrices need an interior parameter point".into(),
        ));
    }
    let k = params.k();
    let d = spec.dim();

    let mut i_xy = DMatrix::<f64>::zeros(d, d);
    for i in 1..k {
        for j in 1..k {
            let mut v = 1.0 / params.weights[0];
            if i == j {
                v += 1.0 / params.weights[i];
            }
            i_xy[(i - 1, j - 1)] = v;
        }
    }
    for j in 0..k {
        i_xy[(k - 1 + j, k - 1 + j)] = params.weights[j] * comp_info(&spec.family, params.comps[j]);
    }

    let mut i_x = DMatrix::<f64>::zeros(d, d);
    let mut score = vec![0.0; d];
    match spec.family {
        Family::Binomial { trials } => {
            for m in 0..=trials {
                let x = m as f64;
                let p: f64 = params
                    .weights
                    .iter()
                    .zip(&params.comps)
                    .map(|(&a, &b)| a * spec.family.comp_density(x, b))
                    .sum();
                incomplete_score(params, spec, x, &mut score);
                for i in 0..d {
                    for j in i..d {
                        i_x[(i, j)] += p * score[i] * score[j];
                    }
                }
            }
        }
        Family::Gaussian => {
            let lo = params.comps.iter().fold(f64::INFINITY, |a, &b| a.min(b)) - 8.0;
            let hi = params.comps.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)) + 8.0;
            for i in 0..d {
                for j in i..d {
                    let v = gaussian_x_integral(lo, hi, |x| {
                        let mut s = vec![0.0; d];
                        incomplete_score(params, spec, x, &mut s);
                        let p: f64 = params
                            .weights
                            .iter()
                            .zip(&params.comps)
                            .map(|(&a, &b)| a * spec.family.comp_density(x, b))
                            .sum();
                        p * s[i] * s[j]
                    });
                    i_x[(i, j)] = v;
                }
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            i_x[(i, j)] = i_x[(j, i)];
        }
    }

    // Fail fast if the analytic score disagrees with a Richardson-extrapolated
    // central difference at an interior probe point.
    let probe_x = match spec.family {
        Family::Binomial { trials } => (trials / 2) as f64,
        Family::Gaussian => params.comps[0] + 0.37,
    };
    incomplete_score(params, spec, probe_x, &mut score);
    for idx in 0..d {
        let fd = fd_incomplete_score(params, spec, probe_x, idx);
        if (fd - score[idx]).abs() > 1e-4 * (1.0 + score[idx].abs()) {
            return Err(Error::Numerical(format!(
                "score coordinate {idx} analytic {} vs finite-difference {fd}",
                score[idx]
            )));
        }
    }

    Ok(FisherPair { i_xy, i_x })
}

/// Regular-case latent-error coefficient Tr[I_XY(w) I_X(w)^{-1}].
///
/// Errors with a regularity violation when I_X is numerically singular
/// (condition number above 1e12).
pub fn reg_lv_coefficient(params: &MixtureParams, spec: &MixtureSpec) -> Result<f64> {
    let pair = fisher_matrices(params, spec)?;
    let svd = pair.i_x.clone().svd(false, false);
    let smax = svd.singular_values.iter().fold(0.0f64, |a, &b| a.max(b));
    let smin = svd
        .singular_values
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b));
    if smin <= 0.0 || smax / smin > 1e12 {
        return Err(Error::Singular(format!(
            "I_X condition number {:.3e} exceeds 1e12",
            smax / smin
        )));
    }
    let solved = pair
        .i_x
        .clone()
        .lu()
        .solve(&pair.i_xy)
        .ok_or_else(|| Error::Singular("I_X is not invertible".into()))?;
    Ok(solved.trace())
}

/// Test-support: full matrices built from finite-difference scores only.
/// Kept separate from the analytic path so it can serve as an independent
/// oracle.
#[cfg(test)]
pub(crate) fn fisher_matrices_fd(params: &MixtureParams, spec: &MixtureSpec) -> FisherPair {
    let d = spec.dim();
    let k = params.k();
    let fam = &spec.family;

    let ln_joint = |p: &MixtureParams, x: f64, y: usize| -> f64 {
        p.weights[y].ln() + fam.ln_comp_density(x, p.comps[y])
    };
    let perturb = |p: &MixtureParams, idx: usize, h: f64| -> MixtureParams {
        let mut q = p.clone();
        if idx < k - 1 {
            q.weights[idx + 1] += h;
            q.weights[0] -= h;
        } else {
            q.comps[idx - (k - 1)] += h;
        }
        q
    };
    let richardson = |f: &dyn Fn(f64) -> f64| -> f64 {
        // Step sweep 1e-3 .. 1e-5 with one Richardson stage on the two
        // smallest steps.
        let c = |h: f64| (f(h) - f(-h)) / (2.0 * h);
        let _ = c(1e-3);
        let d1 = c(1e-4);
        let d2 = c(1e-5);
        (4.0 * d2 - d1) / 3.0
    };

    let score_x = |x: f64| -> Vec<f64> {
        (0..d)
            .map(|idx| richardson(&|h| ln_mixture(&perturb(params, idx, h), spec, x)))
            .collect()
    };
    let score_xy = |x: f64, y: usize| -> Vec<f64> {
        (0..d)
            .map(|idx| richardson(&|h| ln_joint(&perturb(params, idx, h), x, y)))
            .collect()
    };

    let mut i_x = DMatrix::<f64>::zeros(d, d);
    let mut i_xy = DMatrix::<f64>::zeros(d, d);
    match fam {
        Family::Binomial { trials } => {
            for m in 0..=*trials {
                let x = m as f64;
                let sx = score_x(x);
                let px: f64 = params
                    .weights
                    .iter()
                    .zip(&params.comps)
                    .map(|(&a, &b)| a * fam.comp_density(x, b))
                    .sum();
                for i in 0..d {
                    for j in 0..d {
                        i_x[(i, j)] += px * sx[i] * sx[j];
                    }
                }
                for y in 0..k {
                    let sxy = score_xy(x, y);
                    let pxy = params.weights[y] * fam.comp_density(x, params.comps[y]);
                    for i in 0..d {
                        for j in 0..d {
                            i_xy[(i, j)] += pxy * sxy[i] * sxy[j];
                        }
                    }
                }
            }
        }
        Family::Gaussian => {
            let lo = params.comps.iter().fold(f64::INFINITY, |a, &b| a.min(b)) - 8.0;
            let hi = params.comps.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)) + 8.0;
            for i in 0..d {
                for j in 0..d {
                    i_x[(i, j)] = gaussian_x_integral(lo, hi, |x| {
                        let sx = score_x(x);
                        let px: f64 = params
                            .weights
                            .iter()
                            .zip(&params.comps)
                            .map(|(&a, &b)| a * fam.comp_density(x, b))
                            .sum();
                        px * sx[i] * sx[j]
                    });
                    i_xy[(i, j)] = (0..k)
                        .map(|y| {
                            gaussian_x_integral(lo, hi, |x| {
                                let sxy = score_xy(x, y);
                                let pxy = params.weights[y] * fam.comp_density(x, params.comps[y]);
                                pxy * sxy[i] * sxy[j]
                            })
                        })
                        .sum();
                }
            }
        }
    }
    FisherPair { i_xy, i_x }
}
