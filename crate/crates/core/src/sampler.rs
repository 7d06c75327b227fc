//! Samplers over the joint posterior p(w, Yⁿ | Xⁿ) and the parameter
//! posterior p(w | Xⁿ), with the occupancy diagnostics that expose where the
//! latent-variable-driven chain localizes.
//!
//! The Gibbs chain alternates
//!
//! 1. y_i ~ p(y_i | w, x_i) ∝ a_k f(x_i | b_k), independently per item;
//! 2. a ~ Dirichlet(η₁ + N₁, ..., η₁ + N_K) and b_k from its conjugate
//!    posterior given the members of component k. A component with no
//!    members draws b_k from its prior (the zero-statistics conjugate
//!    posterior), keeping the state space fixed.
//!
//! The parameter-space chain is a reflective random-walk Metropolis sampler
//! targeting p(w | Xⁿ) directly (no latent variables), used to compare the
//! two computations of p(Yⁿ|Xⁿ): the Monte-Carlo average of
//! Π p(x_i,y_i|w)/p(x_i|w) over posterior samples versus the exact evidence
//! ratio Z(Xⁿ,Yⁿ)/Z(Xⁿ).

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta as BetaDist, Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, SeedSpec};
use crate::error::{Error, Result};
use crate::evidence::{
    dp, log_evidence_brute, log_evidence_from_counts, CompleteConsts, LabelCounts,
};
use crate::model::{ComponentPrior, Family, MixtureParams, MixtureSpec};
use crate::numeric::StreamingLse;
use crate::posterior::{RegionLabel, RegionSet};

/// One thinned draw of the Gibbs chain.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GibbsSample {
    pub iter: usize,
    pub weights: Vec<f64>,
    pub comps: Vec<f64>,
    pub region: Option<RegionLabel>,
}

/// Thinned Gibbs output with provenance.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GibbsTrace {
    pub samples: Vec<GibbsSample>,
    /// Thinned label states (1-based), kept on request.
    pub kept_labels: Option<Vec<Vec<u8>>>,
    pub iters: usize,
    pub burnin: usize,
    pub thin: usize,
    pub seed: u64,
    pub eta1: f64,
    pub n: usize,
}

impl GibbsTrace {
    pub fn params_iter(&self) -> impl Iterator<Item = MixtureParams> + '_ {
        self.samples
            .iter()
            .map(|s| MixtureParams::new(s.weights.clone(), s.comps.clone()))
    }

    /// CSV with the columns `iter,a1,b1,b2,region` (K = 2 traces).
    pub fn to_csv(&self) -> Result<String> {
        let mut s = String::from("iter,a1,b1,b2,region\n");
        for smp in &self.samples {
            if smp.weights.len() != 2 {
                return Err(Error::Invalid("trace CSV is defined for K = 2".into()));
            }
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                smp.iter,
                smp.weights[0],
                smp.comps[0],
                smp.comps[1],
                smp.region.map(|r| r.name()).unwrap_or("rest")
            ));
        }
        Ok(s)
    }
}

/// Fractions of kept samples classified into each region.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct OccupancyStats {
    pub occ_w1: f64,
    pub occ_w2: f64,
    pub occ_w3: f64,
    pub occ_rest: f64,
}

impl OccupancyStats {
    pub fn w13(&self) -> f64 {
        self.occ_w1 + self.occ_w3
    }
}

/// Full conditional p(y = k | w, x) over 0-based components.
pub fn label_full_conditional(x: f64, params: &MixtureParams, spec: &MixtureSpec) -> Vec<f64> {
    let joint: Vec<f64> = params
        .weights
        .iter()
        .zip(&params.comps)
        .map(|(&a, &b)| a * spec.family.comp_density(x, b))
        .collect();
    let total: f64 = joint.iter().sum();
    if total > 0.0 {
        joint.iter().map(|v| v / total).collect()
    } else {
        vec![1.0 / params.k() as f64; params.k()]
    }
}

fn draw_dirichlet<R: Rng>(rng: &mut R, alphas: &[f64]) -> Vec<f64> {
    let draws: Vec<f64> = alphas
        .iter()
        .map(|&a| {
            Gamma::new(a, 1.0)
                .expect("positive shape")
                .sample(rng)
                .max(1e-300)
        })
        .collect();
    let total: f64 = draws.iter().sum();
    draws.iter().map(|d| d / total).collect()
}

fn draw_component_posterior<R: Rng>(
    rng: &mut R,
    spec: &MixtureSpec,
    count: usize,
    sum: f64,
) -> f64 {
    match (spec.family, spec.prior.component) {
        (Family::Binomial { trials }, ComponentPrior::Beta { alpha, beta }) => {
            let a = alpha + sum;
            let b = beta + (trials as f64) * count as f64 - sum;
            BetaDist::new(a, b).expect("positive parameters").sample(rng)
        }
        (Family::Gaussian, ComponentPrior::Normal { scale, .. }) => {
            let precision = count as f64 + 1.0 / (scale * scale);
            let mean = sum / precision;
            let z: f64 = StandardNormal.sample(rng);
            mean + z / precision.sqrt()
        }
        _ => unreachable!("spec construction enforces family/prior agreement"),
    }
}

/// Runs the Gibbs chain. When `regions` is given (K = 2), each kept sample is
/// classified by the exclusive nearest-branch rule. `keep_labels` retains the
/// thinned label states (for exact small-n checks).
#[allow(clippy::too_many_arguments)]
pub fn gibbs_run(
    ds: &Dataset,
    spec: &MixtureSpec,
    iters: usize,
    burnin: usize,
    thin: usize,
    seed: SeedSpec,
    regions: Option<&RegionSet>,
    keep_labels: bool,
) -> Result<GibbsTrace> {
    if iters <= burnin {
        return Err(Error::Invalid(format!(
            "iters = {iters} must exceed burnin = {burnin}"
        )));
    }
    if thin == 0 {
        return Err(Error::Invalid("thin must be >= 1".into()));
    }
    let k = spec.k;
    let mut rng: ChaCha8Rng = seed.stream(0x61BB5);

    // Step 1: initialize from the prior.
    let mut weights = draw_dirichlet(&mut rng, &vec![spec.prior.eta1; k]);
    let mut comps: Vec<f64> = (0..k)
        .map(|_| draw_component_posterior(&mut rng, spec, 0, 0.0))
        .collect();
    let mut labels = vec![1u8; ds.n];

    let support = spec.family.support_size();
    let mut kept = Vec::new();
    let mut kept_labels_acc = if keep_labels { Some(Vec::new()) } else { None };

    for it in 0..iters {
        // Step 2: labels given parameters.
        match support {
            Some(s) => {
                // Per-sweep table of a_k f(m|b_k) over the support.
                let mut table = vec![0.0; s * k];
                for kk in 0..k {
                    for m in 0..s {
                        table[m * k + kk] =
                            weights[kk] * spec.family.comp_density(m as f64, comps[kk]);
                    }
                }
                for (i, &x) in ds.xs.iter().enumerate() {
                    let row = &table[(x as usize) * k..(x as usize + 1) * k];
                    let total: f64 = row.iter().sum();
                    let mut u: f64 = rng.gen::<f64>() * total;
                    let mut y = k - 1;
                    for (kk, &v) in row.iter().enumerate() {
                        if u < v {
                            y = kk;
                            break;
                        }
                        u -= v;
                    }
                    labels[i] = y as u8 + 1;
                }
            }
            None => {
                for (i, &x) in ds.xs.iter().enumerate() {
                    let probs = label_full_conditional(
                        x,
                        &MixtureParams::new(weights.clone(), comps.clone()),
                        spec,
                    );
                    let mut u: f64 = rng.gen();
                    let mut y = k - 1;
                    for (kk, &p) in probs.iter().enumerate() {
                        if u < p {
                            y = kk;
                            break;
                        }
                        u -= p;
                    }
                    labels[i] = y as u8 + 1;
                }
            }
        }

        // Step 3: parameters given labels.
        let mut counts = vec![0usize; k];
        let mut sums = vec![0.0; k];
        for (&x, &y) in ds.xs.iter().zip(&labels) {
            counts[y as usize - 1] += 1;
            sums[y as usize - 1] += x;
        }
        let alphas: Vec<f64> = counts
            .iter()
            .map(|&c| spec.prior.eta1 + c as f64)
            .collect();
        weights = draw_dirichlet(&mut rng, &alphas);
        for kk in 0..k {
            comps[kk] = draw_component_posterior(&mut rng, spec, counts[kk], sums[kk]);
        }

        if it >= burnin && (it - burnin) % thin == 0 {
            let region = regions.and_then(|r| {
                if k == 2 {
                    Some(r.classify(weights[0], comps[0], comps[1]))
                } else {
                    None
                }
            });
            kept.push(GibbsSample {
                iter: it,
                weights: weights.clone(),
                comps: comps.clone(),
                region,
            });
            if let Some(acc) = kept_labels_acc.as_mut() {
                acc.push(labels.clone());
            }
        }
    }

    Ok(GibbsTrace {
        samples: kept,
        kept_labels: kept_labels_acc,
        iters,
        burnin,
        thin,
        seed: seed.master_seed,
        eta1: spec.prior.eta1,
        n: ds.n,
    })
}

/// Region occupancy fractions of a trace (K = 2).
pub fn occupancy_stats(trace: &GibbsTrace, regions: &RegionSet) -> Result<OccupancyStats> {
    if trace.samples.is_empty() {
        return Err(Error::Invalid("empty trace".into()));
    }
    let mut counts = [0usize; 4];
    for s in &trace.samples {
        if s.weights.len() != 2 {
            return Err(Error::Invalid("occupancy stats are defined for K = 2".into()));
        }
        let label = regions.classify(s.weights[0], s.comps[0], s.comps[1]);
        let idx = match label {
            RegionLabel::W1 => 0,
            RegionLabel::W2 => 1,
            RegionLabel::W3 => 2,
            RegionLabel::Rest => 3,
        };
        counts[idx] += 1;
    }
    let total = trace.samples.len() as f64;
    Ok(OccupancyStats {
        occ_w1: counts[0] as f64 / total,
        occ_w2: counts[1] as f64 / total,
        occ_w3: counts[2] as f64 / total,
        occ_rest: counts[3] as f64 / total,
    })
}

/// Reflective random-walk Metropolis chain targeting p(w | Xⁿ) for K = 2.
/// Step scales adapt toward a 30% acceptance rate during burn-in and are
/// frozen afterwards. Deterministic for a given seed.
pub fn posterior_param_chain(
    ds: &Dataset,
    spec: &MixtureSpec,
    samples: usize,
    burnin: usize,
    thin: usize,
    seed: SeedSpec,
) -> Result<Vec<MixtureParams>> {
    if spec.k != 2 {
        return Err(Error::UnsupportedEngine(
            "the parameter-space chain supports K = 2".into(),
        ));
    }
    let (b_lo, b_hi) = match spec.prior.component {
        ComponentPrior::Beta { .. } => (0.0, 1.0),
        ComponentPrior::Normal { bound, .. } => (-bound, bound),
    };
    let bounds = [(0.0, 1.0), (b_lo, b_hi), (b_lo, b_hi)];
    let truncated = matches!(spec.prior.component, ComponentPrior::Normal { .. });
    let hist = ds.histogram();
    let ln_target = |w: &[f64; 3]| -> f64 {
        let params = MixtureParams::new(vec![w[0], 1.0 - w[0]], vec![w[1], w[2]]);
        let mut ll = crate::model::ln_prior_density(&params, spec, truncated);
        match hist {
            Some(h) => {
                for (m, &c) in h.iter().enumerate() {
                    if c > 0 {
                        let f1 = spec.family.comp_density(m as f64, w[1]);
                        let f2 = spec.family.comp_density(m as f64, w[2]);
                        ll += c as f64 * (w[0] * f1 + (1.0 - w[0]) * f2).ln();
                    }
                }
            }
            None => {
                for &x in &ds.xs {
                    let f1 = spec.family.comp_density(x, w[1]);
                    let f2 = spec.family.comp_density(x, w[2]);
                    ll += (w[0] * f1 + (1.0 - w[0]) * f2).ln();
                }
            }
        }
        ll
    };
    let reflect = |x: f64, (lo, hi): (f64, f64)| -> f64 {
        let span = hi - lo;
        let mut r = (x - lo).rem_euclid(2.0 * span);
        if r > span {
            r = 2.0 * span - r;
        }
        lo + r
    };

    let mut rng: ChaCha8Rng = seed.stream(0x3E7A);
    let mut w = [
        0.2 + 0.6 * rng.gen::<f64>(),
        b_lo + (b_hi - b_lo) * rng.gen::<f64>(),
        b_lo + (b_hi - b_lo) * rng.gen::<f64>(),
    ];
    let mut lp = ln_target(&w);
    let mut scales = [0.1, 0.1 * (b_hi - b_lo), 0.1 * (b_hi - b_lo)];
    let mut accepted = 0usize;
    let mut window = 0usize;

    let total_iters = burnin + samples * thin;
    let mut out = Vec::with_capacity(samples);
    for it in 0..total_iters {
        let mut prop = w;
        for d in 0..3 {
            let z: f64 = StandardNormal.sample(&mut rng);
            prop[d] = reflect(prop[d] + scales[d] * z, bounds[d]);
        }
        let lp_prop = ln_target(&prop);
        let accept = lp_prop - lp >= 0.0 || rng.gen::<f64>().ln() < lp_prop - lp;
        if accept {
            w = prop;
            lp = lp_prop;
            accepted += 1;
        }
        window += 1;
        if it < burnin && window == 200 {
            let rate = accepted as f64 / window as f64;
            let factor = if rate > 0.3 { 1.15 } else { 0.87 };
            for s in &mut scales {
                *s = (*s * factor).clamp(1e-5, 1.0);
            }
            accepted = 0;
            window = 0;
        }
        if it >= burnin && (it - burnin) % thin == 0 {
            out.push(MixtureParams::new(vec![w[0], 1.0 - w[0]], vec![w[1], w[2]]));
        }
    }
    Ok(out)
}

/// The two computations of ln p(Yⁿ|Xⁿ) side by side.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PyComparison {
    /// ln of the Monte-Carlo average of Π p(x_i,y_i|w)/p(x_i|w) over the
    /// provided parameter samples (-inf when every term vanishes).
    pub log_mc: f64,
    /// ln Z(Xⁿ, Y_query) - ln Z(Xⁿ).
    pub log_exact: f64,
    /// Number of Monte-Carlo terms with nonzero value.
    pub nonzero_terms: usize,
    pub n_samples: usize,
}

/// Compares the posterior-sampling estimate of p(Yⁿ|Xⁿ) with the exact
/// evidence ratio. `samples` should follow the parameter posterior p(w|Xⁿ);
/// the exact side uses the histogram DP for binomial K=2 and brute-force
/// enumeration otherwise.
pub fn compare_py_estimates(
    ds: &Dataset,
    y_query: &[u32],
    samples: &[MixtureParams],
    spec: &MixtureSpec,
) -> Result<PyComparison> {
    if y_query.len() != ds.n {
        return Err(Error::Invalid("query assignment length mismatch".into()));
    }
    if samples.is_empty() {
        return Err(Error::Invalid("no posterior samples".into()));
    }
    let counts = LabelCounts::from_labels(&ds.xs, y_query, spec.k)?;
    let consts = CompleteConsts::for_dataset(ds, spec);
    let log_z_xy = log_evidence_from_counts(&counts, &consts, spec);
    let log_z_x = if matches!(spec.family, Family::Binomial { .. }) && spec.k == 2 {
        dp::log_evidence_dp(ds, spec)?
    } else {
        log_evidence_brute(ds, spec)?
    };
    let log_exact = log_z_xy - log_z_x;

    // Group items by (value, queried label) so each sample costs O(M·K).
    let grouped: Option<Vec<Vec<usize>>> = spec.family.support_size().map(|s| {
        let mut g = vec![vec![0usize; spec.k]; s];
        for (&x, &y) in ds.xs.iter().zip(y_query) {
            g[x as usize][y as usize - 1] += 1;
        }
        g
    });

    let mut acc = StreamingLse::new();
    let mut nonzero = 0usize;
    for p in samples {
        let term = match &grouped {
            Some(g) => {
                let mut t = 0.0;
                for (m, row) in g.iter().enumerate() {
                    let x = m as f64;
                    let mix: f64 = p
                        .weights
                        .iter()
                        .zip(&p.comps)
                        .map(|(&a, &b)| a * spec.family.comp_density(x, b))
                        .sum();
                    for (kk, &c) in row.iter().enumerate() {
                        if c > 0 {
                            let joint =
                                p.weights[kk] * spec.family.comp_density(x, p.comps[kk]);
                            t += c as f64 * (joint.ln() - mix.ln());
                        }
                    }
                }
                t
            }
            None => {
                let mut t = 0.0;
                for (&x, &y) in ds.xs.iter().zip(y_query) {
                    let mix: f64 = p
                        .weights
                        .iter()
                        .zip(&p.comps)
                        .map(|(&a, &b)| a * spec.family.comp_density(x, b))
                        .sum();
                    let joint = p.weights[y as usize - 1]
                        * spec.family.comp_density(x, p.comps[y as usize - 1]);
                    t += joint.ln() - mix.ln();
                }
                t
            }
        };
        if term > f64::NEG_INFINITY {
            nonzero += 1;
            acc.add(term);
        }
    }
    let log_mc = if nonzero == 0 {
        f64::NEG_INFINITY
    } else {
        acc.value() - (samples.len() as f64).ln()
    };
    Ok(PyComparison {
        log_mc,
        log_exact,
        nonzero_terms: nonzero,
        n_samples: samples.len(),
    })
}
