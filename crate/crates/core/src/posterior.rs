//! Parameter-posterior diagnostics for the K=2 learner: a grid
//! representation of p(w|Xⁿ), region masses as a function of n, and
//! effective-area/phase detection.
//!
//! The three regions are axis-aligned neighborhoods of the branches of the
//! true-parameter set for a one-component truth b*:
//!
//! ```text
//! W1 = { |a1 - 1| <= δ_a, |b1 - b*| <= δ_b }          (component 2 unused)
//! W2 = { |b1 - b*| <= δ_b, |b2 - b*| <= δ_b }          (both components used)
//! W3 = { a1 <= δ_a, |b2 - b*| <= δ_b }                 (component 1 unused)
//! ```
//!
//! W2 deliberately spans the full weight range, so it overlaps W1 and W3;
//! the overlaps are reported separately rather than disjointified.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{sample_dataset, Dataset, SeedSpec};
use crate::error::{Error, Result};
use crate::evidence::quad::{posterior_region_masses, QuadConfig, RegionMasses};
use crate::model::{ComponentPrior, Family, MixtureParams, MixtureSpec, TrueModel};
use crate::numeric::gauss_legendre;

/// One axis-aligned region box; infinite bounds mean "unconstrained".
#[derive(Clone, Copy, Debug)]
pub struct RegionBox {
    pub a_lo: f64,
    pub a_hi: f64,
    pub b1_lo: f64,
    pub b1_hi: f64,
    pub b2_lo: f64,
    pub b2_hi: f64,
}

impl RegionBox {
    pub fn contains(&self, a: f64, b1: f64, b2: f64) -> bool {
        a >= self.a_lo
            && a <= self.a_hi
            && b1 >= self.b1_lo
            && b1 <= self.b1_hi
            && b2 >= self.b2_lo
            && b2 <= self.b2_hi
    }
}

/// The three branch boxes.
#[derive(Clone, Copy, Debug)]
pub struct RegionBoxes {
    pub w1: RegionBox,
    pub w2: RegionBox,
    pub w3: RegionBox,
}

/// Neighborhood half-widths around the branches, anchored at b*.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RegionSet {
    pub delta_a: f64,
    pub delta_b: f64,
    pub b_star: f64,
}

/// Exclusive region label of a parameter point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionLabel {
    W1,
    W2,
    W3,
    Rest,
}

impl RegionLabel {
    pub fn name(&self) -> &'static str {
        match self {
            RegionLabel::W1 => "w1",
            RegionLabel::W2 => "w2",
            RegionLabel::W3 => "w3",
            RegionLabel::Rest => "rest",
        }
    }
}

impl RegionSet {
    pub fn new(delta_a: f64, delta_b: f64, b_star: f64) -> Result<Self> {
        if !(delta_a > 0.0 && delta_a < 0.5 && delta_b > 0.0 && delta_b < 0.5) {
            return Err(Error::Invalid(format!(
                "region half-widths ({delta_a}, {delta_b}) must lie in (0, 0.5)"
            )));
        }
        Ok(RegionSet {
            delta_a,
            delta_b,
            b_star,
        })
    }

    pub fn boxes(&self) -> RegionBoxes {
        let inf = f64::INFINITY;
        let b_lo = self.b_star - self.delta_b;
        let b_hi = self.b_star + self.delta_b;
        RegionBoxes {
            w1: RegionBox {
                a_lo: 1.0 - self.delta_a,
                a_hi: inf,
                b1_lo: b_lo,
                b1_hi: b_hi,
                b2_lo: -inf,
                b2_hi: inf,
            },
            w2: RegionBox {
                a_lo: -inf,
                a_hi: inf,
                b1_lo: b_lo,
                b1_hi: b_hi,
                b2_lo: b_lo,
                b2_hi: b_hi,
            },
            w3: RegionBox {
                a_lo: -inf,
                a_hi: self.delta_a,
                b1_lo: -inf,
                b1_hi: inf,
                b2_lo: b_lo,
                b2_hi: b_hi,
            },
        }
    }

    /// Per-axis partition edges induced by the boxes.
    pub fn axis_edges(&self) -> [Vec<f64>; 3] {
        [
            vec![self.delta_a, 1.0 - self.delta_a],
            vec![self.b_star - self.delta_b, self.b_star + self.delta_b],
            vec![self.b_star - self.delta_b, self.b_star + self.delta_b],
        ]
    }

    /// Exclusive classification by normalized distance to the nearest branch,
    /// so per-sample fractions plus the complement sum to one. Ties between a
    /// branch (W1/W3) and W2 resolve to the branch, which keeps the rule
    /// equivariant under the label swap (a, b1, b2) -> (1-a, b2, b1).
    pub fn classify(&self, a1: f64, b1: f64, b2: f64) -> RegionLabel {
        let d1 = ((1.0 - a1).abs() / self.delta_a).max((b1 - self.b_star).abs() / self.delta_b);
        let d2 = ((b1 - self.b_star).abs() / self.delta_b)
            .max((b2 - self.b_star).abs() / self.delta_b);
        let d3 = (a1.abs() / self.delta_a).max((b2 - self.b_star).abs() / self.delta_b);
        let candidates = [
            (d1, RegionLabel::W1),
            (d3, RegionLabel::W3),
            (d2, RegionLabel::W2),
        ];
        let mut best = RegionLabel::Rest;
        let mut best_d = f64::INFINITY;
        for (d, label) in candidates {
            if d < best_d {
                best_d = d;
                best = label;
            }
        }
        if best_d <= 1.0 {
            best
        } else {
            RegionLabel::Rest
        }
    }
}

/// One axis of a grid-posterior table: composite Gauss-Legendre nodes with
/// their quadrature weights (panel scaling included).
#[derive(Clone, Debug)]
pub struct AxisGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl AxisGrid {
    fn composite(panel_edges: &[f64], order: usize) -> Self {
        let (xs, ws) = gauss_legendre(order);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for w in panel_edges.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let half = 0.5 * (w[1] - w[0]);
            for (x, wt) in xs.iter().zip(ws) {
                nodes.push(mid + half * x);
                weights.push(wt * half);
            }
        }
        AxisGrid { nodes, weights }
    }

    fn typical_spacing_near(&self, x: f64) -> f64 {
        let i = self
            .nodes
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                (*a - x).abs().partial_cmp(&(*b - x).abs()).unwrap()
            })
            .map(|(i, _)| i)
            .unwrap_or(0);
        let lo = i.saturating_sub(1);
        let hi = (i + 1).min(self.nodes.len() - 1);
        if hi == lo {
            return f64::INFINITY;
        }
        (self.nodes[hi] - self.nodes[lo]) / (hi - lo) as f64
    }
}

/// Normalized density table over (a, b1, b2) on composite-GL nodes.
#[derive(Clone, Debug)]
pub struct PosteriorGrid {
    pub axes: [AxisGrid; 3],
    /// Density values at nodes, row-major (a, b1, b2); Σ ρ·w_a·w_b1·w_b2 = 1.
    pub values: Vec<f64>,
    /// Set when a marginal posterior standard deviation is smaller than two
    /// local grid steps.
    pub under_resolved: bool,
}

impl PosteriorGrid {
    /// Σ values under the quadrature measure (1 after normalization).
    pub fn total(&self) -> f64 {
        let (na, nb1, nb2) = (
            self.axes[0].nodes.len(),
            self.axes[1].nodes.len(),
            self.axes[2].nodes.len(),
        );
        let mut total = 0.0;
        let mut idx = 0;
        for ia in 0..na {
            for ib1 in 0..nb1 {
                let w01 = self.axes[0].weights[ia] * self.axes[1].weights[ib1];
                for ib2 in 0..nb2 {
                    total += w01 * self.axes[2].weights[ib2] * self.values[idx];
                    idx += 1;
                }
            }
        }
        total
    }

    /// Marginal density along one axis, integrated over the other two.
    pub fn marginal(&self, axis: usize) -> Vec<(f64, f64)> {
        let dims = [
            self.axes[0].nodes.len(),
            self.axes[1].nodes.len(),
            self.axes[2].nodes.len(),
        ];
        let mut out = vec![0.0; dims[axis]];
        let mut idx = 0;
        for ia in 0..dims[0] {
            for ib1 in 0..dims[1] {
                for ib2 in 0..dims[2] {
                    let v = self.values[idx];
                    idx += 1;
                    let i = [ia, ib1, ib2];
                    let mut w = 1.0;
                    for d in 0..3 {
                        if d != axis {
                            w *= self.axes[d].weights[i[d]];
                        }
                    }
                    out[i[axis]] += v * w;
                }
            }
        }
        self.axes[axis]
            .nodes
            .iter()
            .copied()
            .zip(out)
            .collect()
    }

    /// Node with the largest density.
    pub fn argmax(&self) -> (f64, f64, f64) {
        let (nb1, nb2) = (self.axes[1].nodes.len(), self.axes[2].nodes.len());
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        let ia = best / (nb1 * nb2);
        let ib1 = (best / nb2) % nb1;
        let ib2 = best % nb2;
        (
            self.axes[0].nodes[ia],
            self.axes[1].nodes[ib1],
            self.axes[2].nodes[ib2],
        )
    }
}

fn axis_panel_edges(
    lo: f64,
    hi: f64,
    panels: usize,
    refine: Option<(f64, f64)>,
) -> Vec<f64> {
    let mut edges: Vec<f64> = (0..=panels)
        .map(|i| lo + (hi - lo) * i as f64 / panels as f64)
        .collect();
    if let Some((rlo, rhi)) = refine {
        for x in [rlo, rhi] {
            if x > lo && x < hi {
                edges.push(x);
            }
        }
        edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
        edges.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        // Two dyadic levels inside the refinement interval.
        for _ in 0..2 {
            let mut extra = Vec::new();
            for w in edges.windows(2) {
                let mid = 0.5 * (w[0] + w[1]);
                if mid > rlo && mid < rhi {
                    extra.push(mid);
                }
            }
            edges.extend(extra);
            edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
        }
    }
    edges
}

/// Grid representation of the parameter posterior for K=2.
///
/// `resolution` is the approximate per-axis node count before refinement;
/// when `regions` is given, panels inside the region boxes get two extra
/// dyadic levels.
pub fn grid_posterior(
    ds: &Dataset,
    spec: &MixtureSpec,
    resolution: usize,
    regions: Option<&RegionSet>,
) -> Result<PosteriorGrid> {
    if spec.k != 2 {
        return Err(Error::UnsupportedEngine(format!(
            "grid posterior supports K = 2, got K = {}",
            spec.k
        )));
    }
    let order = 8;
    let panels = (resolution / order).max(2);
    let (b_lo, b_hi) = match spec.prior.component {
        ComponentPrior::Beta { .. } => (0.0, 1.0),
        ComponentPrior::Normal { bound, .. } => (-bound, bound),
    };
    let b_refine = regions.map(|r| (r.b_star - r.delta_b, r.b_star + r.delta_b));
    let a_refine = regions.map(|r| (1.0 - r.delta_a, 1.0)); // W1 side; W3 by symmetry below
    let mut a_edges = axis_panel_edges(0.0, 1.0, panels, a_refine);
    if let Some(r) = regions {
        for e in axis_panel_edges(0.0, 1.0, panels, Some((0.0, r.delta_a))) {
            a_edges.push(e);
        }
        a_edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
        a_edges.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    }
    let axes = [
        AxisGrid::composite(&a_edges, order),
        AxisGrid::composite(&axis_panel_edges(b_lo, b_hi, panels, b_refine), order),
        AxisGrid::composite(&axis_panel_edges(b_lo, b_hi, panels, b_refine), order),
    ];

    let like = match spec.family {
        Family::Binomial { .. } => None,
        Family::Gaussian => Some(()),
    };
    let _ = like;
    let (na, nb1, nb2) = (
        axes[0].nodes.len(),
        axes[1].nodes.len(),
        axes[2].nodes.len(),
    );
    let mut ln_vals = vec![0.0; na * nb1 * nb2];
    // ln posterior ∝ ln L + ln prior at each node.
    let support = spec.family.support_size();
    let hist = ds.histogram();
    let truncated = matches!(spec.prior.component, ComponentPrior::Normal { .. });
    let ftab = |bs: &[f64]| -> Vec<f64> {
        let s = support.unwrap();
        let mut t = vec![0.0; bs.len() * s];
        for (ib, &b) in bs.iter().enumerate() {
            for m in 0..s {
                t[ib * s + m] = spec.family.comp_density(m as f64, b);
            }
        }
        t
    };
    let (f1, f2): (Vec<f64>, Vec<f64>) = if support.is_some() {
        (ftab(&axes[1].nodes), ftab(&axes[2].nodes))
    } else {
        (Vec::new(), Vec::new())
    };
    let mut idx = 0;
    for ia in 0..na {
        let a = axes[0].nodes[ia];
        for ib1 in 0..nb1 {
            let b1 = axes[1].nodes[ib1];
            for ib2 in 0..nb2 {
                let b2 = axes[2].nodes[ib2];
                let params = MixtureParams::new(vec![a, 1.0 - a], vec![b1, b2]);
                let mut ll = crate::model::ln_prior_density(&params, spec, truncated);
                match (support, hist) {
                    (Some(s), Some(h)) => {
                        let t1 = &f1[ib1 * s..(ib1 + 1) * s];
                        let t2 = &f2[ib2 * s..(ib2 + 1) * s];
                        for m in 0..s {
                            if h[m] > 0 {
                                ll += h[m] as f64 * (a * t1[m] + (1.0 - a) * t2[m]).ln();
                            }
                        }
                    }
                    _ => {
                        for &x in &ds.xs {
                            let g1 = spec.family.comp_density(x, b1);
                            let g2 = spec.family.comp_density(x, b2);
                            ll += (a * g1 + (1.0 - a) * g2).ln();
                        }
                    }
                }
                ln_vals[idx] = ll;
                idx += 1;
            }
        }
    }

    let max = ln_vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut values: Vec<f64> = ln_vals.iter().map(|&v| (v - max).exp()).collect();
    let mut grid = PosteriorGrid {
        axes,
        values: values.clone(),
        under_resolved: false,
    };
    let norm = grid.total();
    for v in &mut values {
        *v /= norm;
    }
    grid.values = values;

    // Resolution warning: marginal sd below two local grid steps.
    let (am, b1m, b2m) = grid.argmax();
    let modes = [am, b1m, b2m];
    let mut under = false;
    for d in 0..3 {
        let marg = grid.marginal(d);
        let mass: f64 = marg
            .iter()
            .zip(&grid.axes[d].weights)
            .map(|((_, v), w)| v * w)
            .sum();
        let mean: f64 = marg
            .iter()
            .zip(&grid.axes[d].weights)
            .map(|((x, v), w)| x * v * w)
            .sum::<f64>()
            / mass;
        let var: f64 = marg
            .iter()
            .zip(&grid.axes[d].weights)
            .map(|((x, v), w)| (x - mean) * (x - mean) * v * w)
            .sum::<f64>()
            / mass;
        let step = grid.axes[d].typical_spacing_near(modes[d]);
        if var.sqrt() < 2.0 * step {
            under = true;
        }
    }
    grid.under_resolved = under;
    Ok(grid)
}

/// Region masses averaged over replicates, per sample size.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MassPoint {
    pub n: usize,
    pub masses: RegionMasses,
    pub replicates: usize,
}

/// Mass trajectories over the n grid for one hyperparameter setting.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MassCurve {
    pub eta1: f64,
    pub points: Vec<MassPoint>,
    pub master_seed: u64,
}

impl MassCurve {
    /// CSV with the columns
    /// `eta1,n,mass_w1,mass_w2,mass_w3,mass_w12,mass_w23,mass_w13,mass_rest,err_est`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "eta1,n,mass_w1,mass_w2,mass_w3,mass_w12,mass_w23,mass_w13,mass_rest,err_est\n",
        );
        for p in &self.points {
            let m = &p.masses;
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                self.eta1, p.n, m.w1, m.w2, m.w3, m.w12, m.w23, m.w13, m.rest, m.err_est
            ));
        }
        s
    }
}

/// Number of strict monotonicity inversions in a sequence.
pub fn trend_inversions(values: &[f64], increasing: bool) -> usize {
    values
        .windows(2)
        .filter(|w| if increasing { w[1] < w[0] } else { w[1] > w[0] })
        .count()
}

/// Mean region masses over R replicated datasets per grid point.
pub fn mass_curve(
    spec: &MixtureSpec,
    tm: &TrueModel,
    n_grid: &[usize],
    replicates: usize,
    regions: &RegionSet,
    seed: SeedSpec,
    cfg: &QuadConfig,
) -> Result<MassCurve> {
    if n_grid.len() < 4 {
        return Err(Error::Invalid("need at least 4 grid points".into()));
    }
    if replicates < 1 {
        return Err(Error::Invalid("need at least 1 replicate".into()));
    }
    let cells: Vec<(usize, usize)> = (0..n_grid.len())
        .flat_map(|i| (0..replicates).map(move |r| (i, r)))
        .collect();
    let results: Vec<(usize, usize, RegionMasses)> = cells
        .par_iter()
        .map(|&(i, r)| {
            let task = (i * replicates + r) as u64;
            let ds = sample_dataset(tm, spec, n_grid[i], seed, task);
            let masses = posterior_region_masses(&ds, spec, regions, cfg)?;
            Ok((i, r, masses))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut points = Vec::new();
    for (i, &n) in n_grid.iter().enumerate() {
        let group: Vec<&RegionMasses> = results
            .iter()
            .filter(|(gi, _, _)| *gi == i)
            .map(|(_, _, m)| m)
            .collect();
        let k = group.len() as f64;
        let avg = |f: fn(&RegionMasses) -> f64| group.iter().map(|m| f(m)).sum::<f64>() / k;
        points.push(MassPoint {
            n,
            masses: RegionMasses {
                w1: avg(|m| m.w1),
                w2: avg(|m| m.w2),
                w3: avg(|m| m.w3),
                w12: avg(|m| m.w12),
                w23: avg(|m| m.w23),
                w13: avg(|m| m.w13),
                rest: avg(|m| m.rest),
                err_est: avg(|m| m.err_est),
                log_z: avg(|m| m.log_z),
            },
            replicates: group.len(),
        });
    }
    Ok(MassCurve {
        eta1: spec.prior.eta1,
        points,
        master_seed: seed.master_seed,
    })
}

/// Detected posterior phase.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseDetection {
    /// Redundant components eliminated: mass concentrates on W1 ∪ W3.
    Eliminate,
    /// All components used: mass concentrates on W2.
    UseAll,
    /// Neither family dominates (expected near the transition).
    TransitionAmbiguous,
}

/// Classifies a mass curve by which family's mass exceeds 1/2 at the largest
/// n while trending upward. The family masses are taken exclusively (W2
/// without the overlaps vs. W1 ∪ W3 without W2) so the two candidates
/// partition the branch neighborhood.
pub fn detect_phase(curve: &MassCurve) -> PhaseDetection {
    let last = match curve.points.last() {
        Some(p) => p,
        None => return PhaseDetection::TransitionAmbiguous,
    };
    let first = curve.points.first().unwrap();
    let elim_last = last.masses.w13_exclusive();
    let use_last = last.masses.w2_exclusive();
    let elim_up = elim_last >= first.masses.w13_exclusive() - 0.02;
    let use_up = use_last >= first.masses.w2_exclusive() - 0.02;
    match (elim_last > 0.5 && elim_up, use_last > 0.5 && use_up) {
        (true, false) => PhaseDetection::Eliminate,
        (false, true) => PhaseDetection::UseAll,
        _ => PhaseDetection::TransitionAmbiguous,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PriorHyper;

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
    fn region_validation() {
        assert!(RegionSet::new(0.0, 0.1, 0.5).is_err());
        assert!(RegionSet::new(0.1, 0.5, 0.5).is_err());
        assert!(RegionSet::new(0.1, 0.1, 0.5).is_ok());
    }

    #[test]
    fn classification_is_exclusive_and_sane() {
        let r = RegionSet::new(0.1, 0.1, 0.5).unwrap();
        assert_eq!(r.classify(0.99, 0.5, 0.9), RegionLabel::W1);
        assert_eq!(r.classify(0.01, 0.9, 0.5), RegionLabel::W3);
        assert_eq!(r.classify(0.5, 0.5, 0.5), RegionLabel::W2);
        assert_eq!(r.classify(0.5, 0.9, 0.9), RegionLabel::Rest);
        // A point in W1 ∩ W2 goes to the nearest branch.
        assert_eq!(r.classify(0.999, 0.5, 0.55), RegionLabel::W1);
    }

    #[test]
    fn label_swap_maps_w1_to_w3() {
        let r = RegionSet::new(0.1, 0.1, 0.5).unwrap();
        let pts = [(0.97, 0.52, 0.1), (0.03, 0.8, 0.45), (0.5, 0.48, 0.52)];
        for (a, b1, b2) in pts {
            let l = r.classify(a, b1, b2);
            let swapped = r.classify(1.0 - a, b2, b1);
            let expect = match l {
                RegionLabel::W1 => RegionLabel::W3,
                RegionLabel::W3 => RegionLabel::W1,
                other => other,
            };
            assert_eq!(swapped, expect);
        }
    }

    #[test]
    fn prior_grid_restores_dirichlet_marginal() {
        // n = 0 with a polynomial prior (η₁ = 2): the a-marginal equals the
        // Dirichlet(2,2) density at every node to quadrature precision.
        let spec = binom_spec(3, 2.0);
        let tm = TrueModel::new(&spec.family, vec![1.0], vec![0.5]).unwrap();
        let ds = crate::data::sample_dataset(&tm, &spec, 0, SeedSpec::new(1), 0);
        let grid = grid_posterior(&ds, &spec, 64, None).unwrap();
        assert!((grid.total() - 1.0).abs() < 1e-10);
        for (a, dens) in grid.marginal(0) {
            let want = 6.0 * a * (1.0 - a);
            assert!((dens - want).abs() < 1e-8, "at a={a}: {dens} vs {want}");
        }
    }

    #[test]
    fn grid_mode_dominates_random_nodes() {
        let spec = binom_spec(3, 1.0);
        let tm = TrueModel::new(&spec.family, vec![1.0], vec![0.5]).unwrap();
        let ds = crate::data::sample_dataset(&tm, &spec, 60, SeedSpec::new(2), 0);
        let grid = grid_posterior(&ds, &spec, 48, None).unwrap();
        let best = grid.values.iter().cloned().fold(0.0f64, f64::max);
        let mut rng = crate::testutil::rng(5);
        use rand::Rng;
        for _ in 0..100 {
            let i = rng.gen_range(0..grid.values.len());
            assert!(grid.values[i] <= best);
        }
    }

    #[test]
    fn under_resolution_flag_fires() {
        let spec = binom_spec(3, 1.0);
        let tm = TrueModel::new(&spec.family, vec![1.0], vec![0.5]).unwrap();
        let ds = crate::data::sample_dataset(&tm, &spec, 3000, SeedSpec::new(3), 0);
        let coarse = grid_posterior(&ds, &spec, 16, None).unwrap();
        assert!(coarse.under_resolved);
    }

    #[test]
    fn detect_phase_on_synthetic_curves() {
        let mk = |w2_excl: &[f64], w13_excl: &[f64]| MassCurve {
            eta1: 1.0,
            master_seed: 0,
            points: w2_excl
                .iter()
                .zip(w13_excl)
                .enumerate()
                .map(|(i, (&w2, &w13))| MassPoint {
                    n: 100 << i,
                    replicates: 1,
                    masses: RegionMasses {
                        w1: w13 / 2.0,
                        w2,
                        w3: w13 / 2.0,
                        w12: 0.0,
                        w23: 0.0,
                        w13: 0.0,
                        rest: 1.0 - w2 - w13,
                        err_est: 1e-8,
                        log_z: 0.0,
                    },
                })
                .collect(),
        };
        let elim = mk(&[0.2, 0.1, 0.05], &[0.6, 0.8, 0.9]);
        assert_eq!(detect_phase(&elim), PhaseDetection::Eliminate);
        let use_all = mk(&[0.6, 0.8, 0.92], &[0.3, 0.15, 0.05]);
        assert_eq!(detect_phase(&use_all), PhaseDetection::UseAll);
        let ambiguous = mk(&[0.4, 0.45, 0.48], &[0.45, 0.42, 0.44]);
        assert_eq!(detect_phase(&ambiguous), PhaseDetection::TransitionAmbiguous);
    }

    #[test]
    fn trend_inversion_counter() {
        assert_eq!(trend_inversions(&[0.1, 0.2, 0.3], true), 0);
        assert_eq!(trend_inversions(&[0.1, 0.05, 0.3], true), 1);
        assert_eq!(trend_inversions(&[0.3, 0.2, 0.25], false), 1);
    }
}
