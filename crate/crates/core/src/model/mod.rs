//! Mixture-model families, true models, priors, and the exact densities,
//! divergences and entropies they induce.
//!
//! Two component families are supported:
//!
//! * binomial with M trials: f(x=m|b) = C(M,m) b^m (1-b)^(M-m), support
//!   {0,...,M};
//! * unit-variance Gaussian on R with the mean as the only component
//!   parameter.
//!
//! A learning model is p(x|w) = Σ_k a_k f(x|b_k) with the weights on the
//! simplex; the weight prior is a symmetric Dirichlet(η₁) and the component
//! prior is conjugate (Beta for binomial, mean-zero normal with a truncation
//! bound for Gaussian).

mod fisher;

pub use fisher::{fisher_matrices, reg_lv_coefficient, FisherPair};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::gauss_legendre;

/// Tolerance for "weights sum to one".
pub const SIMPLEX_TOL: f64 = 1e-12;

/// Component family of a mixture.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Family {
    /// Binomial component with `trials` draws; observations in {0..trials}.
    Binomial { trials: u32 },
    /// Unit-variance Gaussian component on R^1.
    Gaussian,
}

impl Family {
    pub fn is_discrete(&self) -> bool {
        matches!(self, Family::Binomial { .. })
    }

    /// Number of support values for discrete families.
    pub fn support_size(&self) -> Option<usize> {
        match self {
            Family::Binomial { trials } => Some(*trials as usize + 1),
            Family::Gaussian => None,
        }
    }

    /// Dimension of one component's parameter (d_c = 1 for both families).
    pub fn comp_dim(&self) -> usize {
        1
    }

    /// Checks that `x` lies in the family support.
    pub fn check_support(&self, x: f64) -> Result<()> {
        match self {
            Family::Binomial { trials } => {
                if x.fract() != 0.0 || x < 0.0 || x > *trials as f64 {
                    Err(Error::Domain(format!(
                        "binomial observation {x} outside {{0..{trials}}}"
                    )))
                } else {
                    Ok(())
                }
            }
            Family::Gaussian => {
                if x.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Domain(format!("non-finite observation {x}")))
                }
            }
        }
    }

    /// Checks that `b` is a valid component parameter.
    pub fn check_comp_param(&self, b: f64) -> Result<()> {
        match self {
            Family::Binomial { .. } => {
                if (0.0..=1.0).contains(&b) {
                    Ok(())
                } else {
                    Err(Error::Domain(format!(
                        "binomial success probability {b} outside [0,1]"
                    )))
                }
            }
            Family::Gaussian => {
                if b.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Domain(format!("non-finite component mean {b}")))
                }
            }
        }
    }

    /// Component density/mass f(x|b).
    pub fn comp_density(&self, x: f64, b: f64) -> f64 {
        match self {
            Family::Binomial { trials } => {
                let m = x as u32;
                // Multiplicative binomial coefficient: exact in f64 for the
                // trial counts this laboratory uses.
                let mut c = 1.0;
                for i in 0..m.min(*trials - m) {
                    c = c * (*trials - i) as f64 / (i + 1) as f64;
                }
                c * b.powi(m as i32) * (1.0 - b).powi((*trials - m) as i32)
            }
            Family::Gaussian => {
                (-0.5 * (x - b) * (x - b)).exp() / (2.0 * std::f64::consts::PI).sqrt()
            }
        }
    }

    /// ln f(x|b); -inf where the mass is zero.
    pub fn ln_comp_density(&self, x: f64, b: f64) -> f64 {
        match self {
            // Defined through the linear-domain mass so the two routes agree
            // bit-for-bit; the binomial mass cannot underflow at lab-scale M.
            Family::Binomial { .. } => self.comp_density(x, b).ln(),
            Family::Gaussian => {
                -0.5 * (x - b) * (x - b) - 0.5 * (2.0 * std::f64::consts::PI).ln()
            }
        }
    }
}

/// Conjugate prior for one component's parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ComponentPrior {
    /// Beta(alpha, beta) on a binomial success probability.
    Beta { alpha: f64, beta: f64 },
    /// Mean-zero normal with standard deviation `scale`, truncated to
    /// [-bound, bound] wherever compact support is required.
    Normal { scale: f64, bound: f64 },
}

/// Prior hyperparameters: symmetric Dirichlet concentration for the weights
/// plus the per-component conjugate prior.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriorHyper {
    pub eta1: f64,
    pub component: ComponentPrior,
}

impl PriorHyper {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta1 > 0.0) {
            return Err(Error::Invalid(format!(
                "Dirichlet concentration eta1 = {} must be > 0",
                self.eta1
            )));
        }
        match self.component {
            ComponentPrior::Beta { alpha, beta } => {
                if !(alpha > 0.0 && beta > 0.0) {
                    return Err(Error::Invalid(format!(
                        "Beta prior parameters ({alpha}, {beta}) must be > 0"
                    )));
                }
            }
            ComponentPrior::Normal { scale, bound } => {
                if !(scale > 0.0 && bound > 0.0) {
                    return Err(Error::Invalid(format!(
                        "normal prior scale {scale} and bound {bound} must be > 0"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Learning-model specification: family, component count, prior.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub family: Family,
    pub k: usize,
    pub prior: PriorHyper,
}

impl MixtureSpec {
    pub fn new(family: Family, k: usize, prior: PriorHyper) -> Result<Self> {
        if k < 1 {
            return Err(Error::Invalid("component count K must be >= 1".into()));
        }
        if let Family::Binomial { trials } = family {
            if trials < 1 {
                return Err(Error::Invalid("binomial trial count M must be >= 1".into()));
            }
        }
        prior.validate()?;
        match (family, prior.component) {
            (Family::Binomial { .. }, ComponentPrior::Beta { .. })
            | (Family::Gaussian, ComponentPrior::Normal { .. }) => {}
            _ => {
                return Err(Error::Invalid(
                    "component prior does not match the family".into(),
                ))
            }
        }
        Ok(MixtureSpec { family, k, prior })
    }

    /// Parameter dimension d = K-1 + K·d_c.
    pub fn dim(&self) -> usize {
        self.k - 1 + self.k * self.family.comp_dim()
    }
}

/// A point in the learning model's parameter space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureParams {
    /// Mixing weights, length K, nonnegative, summing to 1.
    pub weights: Vec<f64>,
    /// Component parameters, length K.
    pub comps: Vec<f64>,
}

impl MixtureParams {
    pub fn new(weights: Vec<f64>, comps: Vec<f64>) -> Self {
        MixtureParams { weights, comps }
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn validate(&self, family: &Family) -> Result<()> {
        if self.weights.len() != self.comps.len() || self.weights.is_empty() {
            return Err(Error::Invalid(
                "weights and component parameters must have equal positive length".into(),
            ));
        }
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::Domain(format!(
                "weights sum to {sum}, off the simplex by more than {SIMPLEX_TOL}"
            )));
        }
        for &a in &self.weights {
            if !(0.0..=1.0 + SIMPLEX_TOL).contains(&a) {
                return Err(Error::Domain(format!("weight {a} outside [0,1]")));
            }
        }
        for &b in &self.comps {
            family.check_comp_param(b)?;
        }
        Ok(())
    }

    /// True whether all weights and component parameters are interior points.
    pub fn is_interior(&self, family: &Family) -> bool {
        let weights_ok = self.weights.iter().all(|&a| a > 0.0 && a < 1.0);
        let comps_ok = match family {
            Family::Binomial { .. } => self.comps.iter().all(|&b| b > 0.0 && b < 1.0),
            Family::Gaussian => true,
        };
        (weights_ok || self.weights.len() == 1) && comps_ok
    }
}

/// The data-generating model: K* components with positive weights and
/// pairwise-distinct parameters (the minimality condition).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrueModel {
    pub weights: Vec<f64>,
    pub comps: Vec<f64>,
}

impl TrueModel {
    pub fn new(family: &Family, weights: Vec<f64>, comps: Vec<f64>) -> Result<Self> {
        if weights.len() != comps.len() || weights.is_empty() {
            return Err(Error::Invalid(
                "true model needs equal-length nonempty weights and components".into(),
            ));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::Invalid(format!("true weights sum to {sum}, not 1")));
        }
        for &a in &weights {
            if a <= 0.0 {
                return Err(Error::Invalid(
                    "minimality requires all true weights > 0".into(),
                ));
            }
        }
        for (i, &b) in comps.iter().enumerate() {
            family.check_comp_param(b)?;
            for &b2 in &comps[..i] {
                if b == b2 {
                    return Err(Error::Invalid(
                        "minimality requires pairwise-distinct true components".into(),
                    ));
                }
            }
        }
        Ok(TrueModel { weights, comps })
    }

    pub fn kstar(&self) -> usize {
        self.weights.len()
    }

    /// q(x).
    pub fn density(&self, family: &Family, x: f64) -> f64 {
        self.weights
            .iter()
            .zip(&self.comps)
            .map(|(&a, &b)| a * family.comp_density(x, b))
            .sum()
    }

    /// ln q(x).
    pub fn ln_density(&self, family: &Family, x: f64) -> f64 {
        self.density(family, x).ln()
    }

    /// ln q(x, y) for a 1-based true label.
    pub fn ln_joint_density(&self, family: &Family, x: f64, y: usize) -> f64 {
        let a = self.weights[y - 1];
        a.ln() + family.ln_comp_density(x, self.comps[y - 1])
    }

    /// q(y|x) over the true labels, 0-based vector.
    pub fn label_posterior(&self, family: &Family, x: f64) -> Vec<f64> {
        let joint: Vec<f64> = self
            .weights
            .iter()
            .zip(&self.comps)
            .map(|(&a, &b)| a * family.comp_density(x, b))
            .collect();
        let total: f64 = joint.iter().sum();
        joint.iter().map(|j| j / total).collect()
    }

    /// View as a parameter point of a K = K* learner.
    pub fn as_params(&self) -> MixtureParams {
        MixtureParams::new(self.weights.clone(), self.comps.clone())
    }
}

/// Mixture density/mass p(x|w) = Σ_k a_k f(x|b_k).
pub fn mixture_density(x: f64, params: &MixtureParams, spec: &MixtureSpec) -> Result<f64> {
    spec.family.check_support(x)?;
    params.validate(&spec.family)?;
    Ok(params
        .weights
        .iter()
        .zip(&params.comps)
        .map(|(&a, &b)| a * spec.family.comp_density(x, b))
        .sum())
}

/// Complete-data density p(x, y|w) = a_y f(x|b_y); y is 1-based.
pub fn complete_density(
    x: f64,
    y: usize,
    params: &MixtureParams,
    spec: &MixtureSpec,
) -> Result<f64> {
    spec.family.check_support(x)?;
    params.validate(&spec.family)?;
    if y < 1 || y > params.k() {
        return Err(Error::Domain(format!(
            "label {y} outside {{1..{}}}",
            params.k()
        )));
    }
    Ok(params.weights[y - 1] * spec.family.comp_density(x, params.comps[y - 1]))
}

/// Integration grid for Gaussian-family x-integrals: composite Gauss-Legendre
/// over [lo, hi] with panel doubling until the integral of `f` changes by
/// less than 1e-9 in relative terms.
pub(crate) fn gaussian_x_integral<F: Fn(f64) -> f64>(lo: f64, hi: f64, f: F) -> f64 {
    let (nodes, weights) = gauss_legendre(16);
    let mut panels = 8;
    let mut prev = f64::NAN;
    loop {
        let h = (hi - lo) / panels as f64;
        let mut total = 0.0;
        for p in 0..panels {
            let a = lo + p as f64 * h;
            let c = a + 0.5 * h;
            for (x, w) in nodes.iter().zip(weights) {
                total += w * 0.5 * h * f(c + 0.5 * h * x);
            }
        }
        if prev.is_finite() && (total - prev).abs() <= 1e-9 * (1.0 + total.abs()) {
            return total;
        }
        if panels >= 1024 {
            return total;
        }
        prev = total;
        panels *= 2;
    }
}

/// Range covering essentially all mass of the true and model components.
fn gaussian_range(comps: &[f64], true_comps: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &b in comps.iter().chain(true_comps) {
        lo = lo.min(b);
        hi = hi.max(b);
    }
    (lo - 8.0, hi + 8.0)
}

/// H_X(w): Kullback-Leibler divergence from the true density to the mixture,
/// in nats. Exact sum for binomial; quadrature for Gaussian. Returns +inf
/// when the model assigns zero mass where the true model has some.
pub fn kl_incomplete(params: &MixtureParams, tm: &TrueModel, spec: &MixtureSpec) -> Result<f64> {
    params.validate(&spec.family)?;
    match spec.family {
        Family::Binomial { trials } => {
            let mut kl = 0.0;
            for m in 0..=trials {
                let x = m as f64;
                let q = tm.density(&spec.family, x);
                if q <= 0.0 {
                    continue;
                }
                let p = params
                    .weights
                    .iter()
                    .zip(&params.comps)
                    .map(|(&a, &b)| a * spec.family.comp_density(x, b))
                    .sum::<f64>();
                if p <= 0.0 {
                    return Ok(f64::INFINITY);
                }
                kl += q * (q / p).ln();
            }
            Ok(kl.max(0.0))
        }
        Family::Gaussian => {
            let (lo, hi) = gaussian_range(&params.comps, &tm.comps);
            let v = gaussian_x_integral(lo, hi, |x| {
                let q = tm.density(&spec.family, x);
                if q <= 0.0 {
                    return 0.0;
                }
                let p = params
                    .weights
                    .iter()
                    .zip(&params.comps)
                    .map(|(&a, &b)| a * spec.family.comp_density(x, b))
                    .sum::<f64>();
                q * (q / p).ln()
            });
            Ok(v.max(0.0))
        }
    }
}

/// H_XY(w): complete-data Kullback-Leibler divergence under the identity
/// injection of true labels into learner labels,
/// Σ_k a*_k [ ln(a*_k/a_k) + KL(f(·|b*_k) || f(·|b_k)) ].
pub fn kl_complete(params: &MixtureParams, tm: &TrueModel, spec: &MixtureSpec) -> Result<f64> {
    params.validate(&spec.family)?;
    if tm.kstar() > params.k() {
        return Err(Error::Domain(format!(
            "true component count {} exceeds learner K = {}",
            tm.kstar(),
            params.k()
        )));
    }
    let mut kl = 0.0;
    for k in 0..tm.kstar() {
        let astar = tm.weights[k];
        let a = params.weights[k];
        if a <= 0.0 {
            return Ok(f64::INFINITY);
        }
        kl += astar * (astar / a).ln();
        kl += astar * component_kl(&spec.family, tm.comps[k], params.comps[k])?;
        if !kl.is_finite() {
            return Ok(f64::INFINITY);
        }
    }
    Ok(kl.max(0.0))
}

/// KL(f(·|b_true) || f(·|b_model)) for one component.
fn component_kl(family: &Family, b_true: f64, b_model: f64) -> Result<f64> {
    match family {
        Family::Binomial { trials } => {
            let mm = *trials as f64;
            let p = b_true;
            let q = b_model;
            if (p > 0.0 && q == 0.0) || (p < 1.0 && q == 1.0) {
                return Ok(f64::INFINITY);
            }
            let t1 = if p == 0.0 { 0.0 } else { p * (p / q).ln() };
            let t2 = if p == 1.0 {
                0.0
            } else {
                (1.0 - p) * ((1.0 - p) / (1.0 - q)).ln()
            };
            Ok(mm * (t1 + t2))
        }
        Family::Gaussian => Ok(0.5 * (b_model - b_true) * (b_model - b_true)),
    }
}

/// Entropies of the true model: (S_X, S_XY) in nats.
///
/// S_X = -Σ q(x) ln q(x); S_XY = -Σ_y ∫ q(x,y) ln q(x,y) dx. For a single
/// true component the label is deterministic, so S_XY = S_X.
pub fn entropy_true(tm: &TrueModel, spec: &MixtureSpec) -> (f64, f64) {
    let family = &spec.family;
    let s_xy = {
        // S_XY = H(a*) + Σ_k a*_k H(f(·|b*_k)) exactly for both families.
        let h_weights: f64 = tm
            .weights
            .iter()
            .map(|&a| if a > 0.0 { -a * a.ln() } else { 0.0 })
            .sum();
        let h_comps: f64 = tm
            .weights
            .iter()
            .zip(&tm.comps)
            .map(|(&a, &b)| a * component_entropy(family, b))
            .sum();
        h_weights + h_comps
    };
    let s_x = match family {
        Family::Binomial { trials } => {
            let mut s = 0.0;
            for m in 0..=*trials {
                let q = tm.density(family, m as f64);
                if q > 0.0 {
                    s -= q * q.ln();
                }
            }
            s
        }
        Family::Gaussian => {
            if tm.kstar() == 1 {
                0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln()
            } else {
                let (lo, hi) = gaussian_range(&tm.comps, &tm.comps);
                gaussian_x_integral(lo, hi, |x| {
                    let q = tm.density(family, x);
                    if q > 0.0 {
                        -q * q.ln()
                    } else {
                        0.0
                    }
                })
            }
        }
    };
    (s_x, s_xy)
}

fn component_entropy(family: &Family, b: f64) -> f64 {
    match family {
        Family::Binomial { trials } => {
            let mut s = 0.0;
            for m in 0..=*trials {
                let f = family.comp_density(m as f64, b);
                if f > 0.0 {
                    s -= f * f.ln();
                }
            }
            s
        }
        Family::Gaussian => 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln(),
    }
}

/// ln of the prior density at a parameter point (weights via symmetric
/// Dirichlet, components via the conjugate prior; Gaussian prior optionally
/// renormalized to its truncation box).
pub fn ln_prior_density(params: &MixtureParams, spec: &MixtureSpec, truncated: bool) -> f64 {
    let k = spec.k as f64;
    let eta = spec.prior.eta1;
    let mut lp = crate::numeric::ln_gamma(k * eta) - k * crate::numeric::ln_gamma(eta);
    for &a in &params.weights {
        lp += (eta - 1.0) * a.ln();
    }
    match spec.prior.component {
        ComponentPrior::Beta { alpha, beta } => {
            for &b in &params.comps {
                lp += (alpha - 1.0) * b.ln() + (beta - 1.0) * (1.0 - b).ln()
                    - crate::numeric::ln_beta(alpha, beta);
            }
        }
        ComponentPrior::Normal { scale, bound } => {
            let z = if truncated {
                let p = statrs::function::erf::erf(bound / (scale * std::f64::consts::SQRT_2));
                p.ln()
            } else {
                0.0
            };
            for &b in &params.comps {
                lp += -0.5 * (b / scale) * (b / scale)
                    - 0.5 * (2.0 * std::f64::consts::PI * scale * scale).ln()
                    - z;
            }
        }
    }
    lp
}
