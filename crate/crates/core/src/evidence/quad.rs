//! Adaptive log-domain quadrature for the incomplete evidence
//! Z(Xⁿ) = ∫ Π p(x_i|w) φ(w; η) dw over the K=2 parameter box (a, b₁, b₂),
//! and posterior masses of axis-aligned parameter regions.
//!
//! Each axis is mapped through its prior CDF, u = F(x). In u-coordinates the
//! prior is the uniform measure on [0,1]³, so
//!
//! * the integrand reduces to the likelihood alone (no singular prior factor
//!   at the Dirichlet edges for η₁ < 1),
//! * the prior-only integral is exact (ln Z = 0 at n = 0), and
//! * a region's prior volume is just its u-box volume.
//!
//! Integration is composite tensor Gauss-Legendre over a box partition whose
//! per-axis edges include the region-box boundaries; refinement dyadically
//! splits the boxes that carry the posterior mass until two successive totals
//! differ by less than the tolerance. Region boundaries are initial edges and
//! splits bisect in u, so every box stays entirely inside or outside every
//! region; the reported masses therefore satisfy inclusion-exclusion exactly
//! at matched quadrature nodes.

use std::collections::HashMap;

use statrs::distribution::ContinuousCDF;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::evidence::{EvidenceEngine, EvidenceResult};
use crate::model::{ComponentPrior, Family, MixtureSpec};
use crate::numeric::{beta_reg, gauss_legendre, StreamingLse};
use crate::posterior::RegionSet;

/// Tuning for the adaptive integrator.
#[derive(Clone, Debug)]
pub struct QuadConfig {
    /// Convergence tolerance on the log-evidence refinement difference.
    pub tol: f64,
    /// Gauss-Legendre order per axis per box.
    pub gl_order: usize,
    /// Initial panels per axis (in prior-measure coordinates).
    pub base_panels: usize,
    /// Refinement rounds before giving up.
    pub max_rounds: usize,
    /// Hard cap on the number of boxes.
    pub max_boxes: usize,
    /// Extra per-axis edges (x-space) the initial partition must contain.
    pub extra_edges: [Vec<f64>; 3],
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            tol: 1e-6,
            gl_order: 8,
            base_panels: 8,
            max_rounds: 60,
            max_boxes: 400_000,
            extra_edges: [Vec::new(), Vec::new(), Vec::new()],
        }
    }
}

impl QuadConfig {
    /// Partition edges aligned with the region boxes of `regions`.
    pub fn with_region_edges(mut self, regions: &RegionSet) -> Self {
        let e = regions.axis_edges();
        self.extra_edges = e;
        self
    }
}

/// Per-axis prior CDF map.
enum AxisMap {
    Beta { p: f64, q: f64 },
    /// Truncated normal on [-bound, bound]; u ranges over the untruncated
    /// CDF values of the bounds, renormalized by the caller via `u_range`.
    Normal { normal: statrs::distribution::Normal, u_lo: f64, u_hi: f64 },
}

impl AxisMap {
    fn forward(&self, x: f64) -> f64 {
        match self {
            AxisMap::Beta { p, q } => beta_reg(*p, *q, x.clamp(0.0, 1.0)),
            AxisMap::Normal { normal, u_lo, u_hi } => {
                (normal.cdf(x) - u_lo) / (u_hi - u_lo)
            }
        }
    }

    fn inverse(&self, u: f64) -> f64 {
        match self {
            AxisMap::Beta { p, q } => statrs::function::beta::inv_beta_reg(*p, *q, u),
            AxisMap::Normal { normal, u_lo, u_hi } => {
                normal.inverse_cdf(u_lo + u * (u_hi - u_lo))
            }
        }
    }

    /// ln of the prior mass inside the truncation box (0 when untruncated).
    fn ln_truncation_mass(&self) -> f64 {
        match self {
            AxisMap::Beta { .. } => 0.0,
            AxisMap::Normal { u_lo, u_hi, .. } => (u_hi - u_lo).ln(),
        }
    }
}

fn axis_maps(spec: &MixtureSpec) -> Result<[AxisMap; 3]> {
    if spec.k != 2 {
        return Err(Error::UnsupportedEngine(format!(
            "quad engine supports K = 2, got K = {}",
            spec.k
        )));
    }
    let eta = spec.prior.eta1;
    match spec.prior.component {
        ComponentPrior::Beta { alpha, beta } => Ok([
            AxisMap::Beta { p: eta, q: eta },
            AxisMap::Beta { p: alpha, q: beta },
            AxisMap::Beta { p: alpha, q: beta },
        ]),
        ComponentPrior::Normal { scale, bound } => {
            let normal = statrs::distribution::Normal::new(0.0, scale)
                .map_err(|e| Error::Invalid(format!("normal prior: {e}")))?;
            let mk = || AxisMap::Normal {
                normal,
                u_lo: normal.cdf(-bound),
                u_hi: normal.cdf(bound),
            };
            Ok([AxisMap::Beta { p: eta, q: eta }, mk(), mk()])
        }
    }
}

/// Log likelihood ln Π p(x_i | a, b1, b2), evaluated from the histogram for
/// the binomial family and from raw observations for the Gaussian one.
enum LnLikelihood<'a> {
    Binomial { hist: &'a [usize], trials: u32 },
    Gaussian { xs: &'a [f64] },
}

impl<'a> LnLikelihood<'a> {
    fn for_dataset(ds: &'a Dataset, spec: &MixtureSpec) -> Result<Self> {
        match spec.family {
            Family::Binomial { trials } => Ok(LnLikelihood::Binomial {
                hist: ds
                    .histogram()
                    .ok_or_else(|| Error::Invalid("dataset lacks a histogram".into()))?,
                trials,
            }),
            Family::Gaussian => Ok(LnLikelihood::Gaussian { xs: &ds.xs }),
        }
    }

    /// Fills `out[(ia*nb1 + ib1)*nb2 + ib2]` with ln L at the tensor nodes.
    fn eval_grid(&self, a_nodes: &[f64], b1_nodes: &[f64], b2_nodes: &[f64], out: &mut [f64]) {
        match self {
            LnLikelihood::Binomial { hist, trials } => {
                let fam = Family::Binomial { trials: *trials };
                let support = *trials as usize + 1;
                let ftab = |bs: &[f64]| -> Vec<f64> {
                    let mut t = vec![0.0; bs.len() * support];
                    for (ib, &b) in bs.iter().enumerate() {
                        for m in 0..support {
                            t[ib * support + m] = fam.comp_density(m as f64, b);
                        }
                    }
                    t
                };
                let f1 = ftab(b1_nodes);
                let f2 = ftab(b2_nodes);
                let mut idx = 0;
                for &a in a_nodes {
                    for ib1 in 0..b1_nodes.len() {
                        let t1 = &f1[ib1 * support..(ib1 + 1) * support];
                        for ib2 in 0..b2_nodes.len() {
                            let t2 = &f2[ib2 * support..(ib2 + 1) * support];
                            let mut ll = 0.0;
                            for m in 0..support {
                                let c = hist[m];
                                if c > 0 {
                                    ll += c as f64 * (a * t1[m] + (1.0 - a) * t2[m]).ln();
                                }
                            }
                            out[idx] = ll;
                            idx += 1;
                        }
                    }
                }
            }
            LnLikelihood::Gaussian { xs } => {
                let mut idx = 0;
                for &a in a_nodes {
                    for &b1 in b1_nodes {
                        for &b2 in b2_nodes {
                            let mut ll = 0.0;
                            for &x in xs.iter() {
                                let g1 = (-0.5 * (x - b1) * (x - b1)).exp();
                                let g2 = (-0.5 * (x - b2) * (x - b2)).exp();
                                ll += (a * g1 + (1.0 - a) * g2).ln();
                            }
                            ll -= xs.len() as f64 * 0.5 * (2.0 * std::f64::consts::PI).ln();
                            out[idx] = ll;
                            idx += 1;
                        }
                    }
                }
            }
        }
    }
}

/// A u-interval of one axis with its precomputed Gauss-Legendre x-nodes.
struct Segment {
    u_lo: f64,
    u_hi: f64,
    xs: Vec<f64>,
}

struct Axis {
    segments: Vec<Segment>,
    index: HashMap<(u64, u64), usize>,
}

impl Axis {
    fn new() -> Self {
        Axis {
            segments: Vec::new(),
            index: HashMap::new(),
        }
    }

    fn get_or_create(&mut self, u_lo: f64, u_hi: f64, map: &AxisMap, order: usize) -> usize {
        let key = (u_lo.to_bits(), u_hi.to_bits());
        if let Some(&i) = self.index.get(&key) {
            return i;
        }
        let (nodes, _) = gauss_legendre(order);
        let mid = 0.5 * (u_lo + u_hi);
        let half = 0.5 * (u_hi - u_lo);
        let xs = nodes.iter().map(|&t| map.inverse(mid + half * t)).collect();
        self.segments.push(Segment { u_lo, u_hi, xs });
        self.index.insert(key, self.segments.len() - 1);
        self.segments.len() - 1
    }
}

#[derive(Clone, Copy)]
struct Cell {
    seg: [usize; 3],
    log_mass: f64,
    /// Axis along which ln L varies most over the node grid.
    split_axis: u8,
}

struct Integrator<'a> {
    axes: [Axis; 3],
    maps: [AxisMap; 3],
    like: LnLikelihood<'a>,
    order: usize,
    cells: Vec<Cell>,
    scratch: Vec<f64>,
}

impl<'a> Integrator<'a> {
    fn eval_cell(&mut self, seg: [usize; 3]) -> Cell {
        let o = self.order;
        let (_, glw) = gauss_legendre(o);
        let s0 = &self.axes[0].segments[seg[0]];
        let s1 = &self.axes[1].segments[seg[1]];
        let s2 = &self.axes[2].segments[seg[2]];
        self.scratch.resize(o * o * o, 0.0);
        self.like
            .eval_grid(&s0.xs, &s1.xs, &s2.xs, &mut self.scratch);
        let vals = &self.scratch;

        let mut max = f64::NEG_INFINITY;
        for &v in vals {
            if v > max {
                max = v;
            }
        }
        let jac = 0.125
            * (s0.u_hi - s0.u_lo)
            * (s1.u_hi - s1.u_lo)
            * (s2.u_hi - s2.u_lo);
        let log_mass = if max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            let mut sum = 0.0;
            let mut idx = 0;
            for ia in 0..o {
                for ib1 in 0..o {
                    let w01 = glw[ia] * glw[ib1];
                    for ib2 in 0..o {
                        sum += w01 * glw[ib2] * (vals[idx] - max).exp();
                        idx += 1;
                    }
                }
            }
            max + sum.ln() + jac.ln()
        };

        // Direction of largest ln L variation decides the split axis.
        let mut ranges = [0.0f64; 3];
        let at = |i: usize, j: usize, k: usize| vals[(i * o + j) * o + k];
        for j in 0..o {
            for k in 0..o {
                let (mut lo0, mut hi0) = (f64::INFINITY, f64::NEG_INFINITY);
                let (mut lo1, mut hi1) = (f64::INFINITY, f64::NEG_INFINITY);
                let (mut lo2, mut hi2) = (f64::INFINITY, f64::NEG_INFINITY);
                for i in 0..o {
                    let v0 = at(i, j, k);
                    lo0 = lo0.min(v0);
                    hi0 = hi0.max(v0);
                    let v1 = at(j, i, k);
                    lo1 = lo1.min(v1);
                    hi1 = hi1.max(v1);
                    let v2 = at(j, k, i);
                    lo2 = lo2.min(v2);
                    hi2 = hi2.max(v2);
                }
                ranges[0] = ranges[0].max(hi0 - lo0);
                ranges[1] = ranges[1].max(hi1 - lo1);
                ranges[2] = ranges[2].max(hi2 - lo2);
            }
        }
        let widths = [
            s0.u_hi - s0.u_lo,
            s1.u_hi - s1.u_lo,
            s2.u_hi - s2.u_lo,
        ];
        let mut split_axis = 0;
        let mut best = f64::NEG_INFINITY;
        for d in 0..3 {
            // Tie-break toward the wider axis.
            let score = ranges[d] + 1e-9 * widths[d];
            if score > best && widths[d] > 1e-12 {
                best = score;
                split_axis = d;
            }
        }
        Cell {
            seg,
            log_mass,
            split_axis: split_axis as u8,
        }
    }

    fn total(&self) -> f64 {
        let mut acc = StreamingLse::new();
        for c in &self.cells {
            acc.add(c.log_mass);
        }
        acc.value()
    }
}

/// Per-axis initial u-edges: 0, 1, forced x-edges, plus uniform fill-in.
fn initial_edges(map: &AxisMap, forced_x: &[f64], base_panels: usize) -> Vec<f64> {
    let mut edges = vec![0.0, 1.0];
    for &x in forced_x {
        let u = map.forward(x);
        if u > 1e-12 && u < 1.0 - 1e-12 {
            edges.push(u);
        }
    }
    edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
    edges.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    // Fill long gaps so every axis starts with about `base_panels` panels.
    let target = 1.0 / base_panels as f64;
    let mut filled = Vec::with_capacity(base_panels + edges.len());
    for w in edges.windows(2) {
        filled.push(w[0]);
        let gap = w[1] - w[0];
        let extra = (gap / target).floor() as usize;
        for e in 1..=extra.saturating_sub(1) {
            filled.push(w[0] + gap * e as f64 / extra as f64);
        }
    }
    filled.push(1.0);
    filled
}

struct QuadOutcome {
    log_z_unnorm: f64,
    err_est: f64,
    converged: bool,
    cells: Vec<Cell>,
    axes: [Axis; 3],
    maps: [AxisMap; 3],
    ln_trunc: f64,
}

fn integrate(ds: &Dataset, spec: &MixtureSpec, cfg: &QuadConfig) -> Result<QuadOutcome> {
    let maps = axis_maps(spec)?;
    let like = LnLikelihood::for_dataset(ds, spec)?;
    let ln_trunc: f64 = maps.iter().map(|m| m.ln_truncation_mass()).sum();
    let mut integ = Integrator {
        axes: [Axis::new(), Axis::new(), Axis::new()],
        maps,
        like,
        order: cfg.gl_order,
        cells: Vec::new(),
        scratch: Vec::new(),
    };

    let mut seg_ids: [Vec<usize>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for d in 0..3 {
        let edges = initial_edges(&integ.maps[d], &cfg.extra_edges[d], cfg.base_panels);
        for w in edges.windows(2) {
            let id = integ.axes[d].get_or_create(w[0], w[1], &integ.maps[d], cfg.gl_order);
            seg_ids[d].push(id);
        }
    }
    let mut initial = Vec::new();
    for &i in &seg_ids[0] {
        for &j in &seg_ids[1] {
            for &k in &seg_ids[2] {
                initial.push([i, j, k]);
            }
        }
    }
    for seg in initial {
        let c = integ.eval_cell(seg);
        integ.cells.push(c);
    }

    let mut prev_total = integ.total();
    let mut err_est = f64::INFINITY;
    for _round in 0..cfg.max_rounds {
        // Split the minimal mass-dominant prefix of cells.
        let total = prev_total;
        let mut order: Vec<usize> = (0..integ.cells.len()).collect();
        order.sort_by(|&a, &b| {
            integ.cells[b]
                .log_mass
                .partial_cmp(&integ.cells[a].log_mass)
                .unwrap()
        });
        let mut covered = StreamingLse::new();
        let mut chosen = Vec::new();
        for &i in &order {
            if integ.cells[i].log_mass < total - 46.0 {
                break;
            }
            chosen.push(i);
            covered.add(integ.cells[i].log_mass);
            if covered.value() > total + (-1e-7f64).ln_1p() || chosen.len() >= 8192 {
                break;
            }
        }
        if integ.cells.len() + chosen.len() > cfg.max_boxes {
            return Ok(QuadOutcome {
                log_z_unnorm: prev_total,
                err_est,
                converged: false,
                cells: integ.cells,
                axes: integ.axes,
                maps: integ.maps,
                ln_trunc,
            });
        }
        for &i in &chosen {
            let cell = integ.cells[i];
            let d = cell.split_axis as usize;
            let (u_lo, u_hi) = {
                let s = &integ.axes[d].segments[cell.seg[d]];
                (s.u_lo, s.u_hi)
            };
            let mid = 0.5 * (u_lo + u_hi);
            let left = integ.axes[d].get_or_create(u_lo, mid, &integ.maps[d], cfg.gl_order);
            let right = integ.axes[d].get_or_create(mid, u_hi, &integ.maps[d], cfg.gl_order);
            let mut seg_l = cell.seg;
            seg_l[d] = left;
            let mut seg_r = cell.seg;
            seg_r[d] = right;
            integ.cells[i] = integ.eval_cell(seg_l);
            let rc = integ.eval_cell(seg_r);
            integ.cells.push(rc);
        }
        let total = integ.total();
        err_est = (total - prev_total).abs();
        prev_total = total;
        if err_est < cfg.tol {
            return Ok(QuadOutcome {
                log_z_unnorm: total,
                err_est,
                converged: true,
                cells: integ.cells,
                axes: integ.axes,
                maps: integ.maps,
                ln_trunc,
            });
        }
    }
    Ok(QuadOutcome {
        log_z_unnorm: prev_total,
        err_est,
        converged: false,
        cells: integ.cells,
        axes: integ.axes,
        maps: integ.maps,
        ln_trunc,
    })
}

/// ln Z(Xⁿ) by adaptive quadrature. For the Gaussian family the prior is
/// renormalized to its truncation box, so this is the truncated-prior
/// evidence.
pub fn log_evidence_quad(ds: &Dataset, spec: &MixtureSpec, cfg: &QuadConfig) -> Result<EvidenceResult> {
    let out = integrate(ds, spec, cfg)?;
    let log_z = out.log_z_unnorm - out.ln_trunc;
    if !out.converged {
        return Err(Error::NonConvergence {
            best: log_z,
            err_est: out.err_est,
        });
    }
    Ok(EvidenceResult {
        log_z,
        engine: EvidenceEngine::Quad,
        err_est: out.err_est,
    })
}

/// Posterior masses of the three branch neighborhoods, their pairwise
/// intersections, and the complement.
#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct RegionMasses {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub w12: f64,
    pub w23: f64,
    pub w13: f64,
    /// Mass outside W1 ∪ W2 ∪ W3.
    pub rest: f64,
    pub err_est: f64,
    pub log_z: f64,
}

impl RegionMasses {
    /// Union mass by inclusion-exclusion (W1 ∩ W3 is empty for δ < 1/2, so
    /// the triple term vanishes).
    pub fn union(&self) -> f64 {
        self.w1 + self.w2 + self.w3 - self.w12 - self.w23 - self.w13
    }

    /// Mass of W2 outside the other two regions.
    pub fn w2_exclusive(&self) -> f64 {
        (self.w2 - self.w12 - self.w23).max(0.0)
    }

    /// Mass of W1 ∪ W3 outside W2.
    pub fn w13_exclusive(&self) -> f64 {
        (self.w1 + self.w3 - self.w13 - self.w12 - self.w23).max(0.0)
    }
}

/// Region masses under the parameter posterior, by the quad engine with the
/// partition edges aligned to the region boxes.
pub fn posterior_region_masses(
    ds: &Dataset,
    spec: &MixtureSpec,
    regions: &RegionSet,
    cfg: &QuadConfig,
) -> Result<RegionMasses> {
    let cfg = cfg.clone().with_region_edges(regions);
    let out = integrate(ds, spec, &cfg)?;
    if !out.converged {
        return Err(Error::NonConvergence {
            best: out.log_z_unnorm - out.ln_trunc,
            err_est: out.err_est,
        });
    }
    let total = out.log_z_unnorm;
    let boxes = regions.boxes();
    let mut acc = [StreamingLse::new(); 7];
    for cell in &out.cells {
        let s0 = &out.axes[0].segments[cell.seg[0]];
        let s1 = &out.axes[1].segments[cell.seg[1]];
        let s2 = &out.axes[2].segments[cell.seg[2]];
        // Region edges are partition edges, so the x-interval of a segment is
        // entirely inside or outside each region interval; the midpoint in u
        // maps to an interior x point, deciding membership exactly.
        let a = out.maps[0].inverse(0.5 * (s0.u_lo + s0.u_hi));
        let b1 = out.maps[1].inverse(0.5 * (s1.u_lo + s1.u_hi));
        let b2 = out.maps[2].inverse(0.5 * (s2.u_lo + s2.u_hi));
        let inside = [
            boxes.w1.contains(a, b1, b2),
            boxes.w2.contains(a, b1, b2),
            boxes.w3.contains(a, b1, b2),
        ];
        let targets = [
            inside[0],
            inside[1],
            inside[2],
            inside[0] && inside[1],
            inside[1] && inside[2],
            inside[0] && inside[2],
            !inside[0] && !inside[1] && !inside[2],
        ];
        for (t, on) in targets.iter().enumerate() {
            if *on {
                acc[t].add(cell.log_mass);
            }
        }
    }
    let mass = |i: usize| {
        let v = acc[i].value();
        if v == f64::NEG_INFINITY {
            0.0
        } else {
            (v - total).exp()
        }
    };
    Ok(RegionMasses {
        w1: mass(0),
        w2: mass(1),
        w3: mass(2),
        w12: mass(3),
        w23: mass(4),
        w13: mass(5),
        rest: mass(6),
        err_est: out.err_est,
        log_z: total - out.ln_trunc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{sample_dataset, SeedSpec};
    use crate::evidence::dp::{log_evidence_dp, region_mass_exact};
    use crate::evidence::tests::binom_spec;
    use crate::model::TrueModel;

    #[test]
    fn prior_only_integral_is_zero() {
        for eta in [0.25, 1.0, 2.0] {
            let spec = binom_spec(3, 2, eta);
            let tm = TrueModel::new(&spec.family, vec![1.0], vec![0.5]).unwrap();
            let ds = sample_dataset(&tm, &spec, 0, SeedSpec::new(1), 0);
            let r = log_evidence_quad(&ds, &spec, &QuadConfig::default()).unwrap();
            assert!(r.log_z.abs() < 1e-10, "eta={eta}: {}", r.log_z);
        }
    }

    #[test]
    fn quad_matches_dp_small_and_medium() {
        let spec = binom_spec(3, 2, 1.0);
        let tm = TrueModel::new(&spec.family, vec![1.0], vec![0.5]).unwrap();
        for (task, n) in [(0u64, 10usize), (1, 100), (2, 500)] {
            let ds = sample_dataset(&tm, &spec, n, SeedSpec::new(7), task);
            let dp = log_evidence_dp(&ds, &spec).unwrap();
            let q = log_evidence_quad(&ds, &spec, &QuadConfig::default()).unwrap();
            assert!(
                (dp - q.log_z).abs() < 1e-4,
                "n={n}: dp {dp} vs quad {} (err_est {})",
                q.log_z,
                q.err_est
            );
        }
    }

    #[test]
    fn quad_handles_fractional_dirichlet() {
        let spec = binom_spec(3, 2, 0.25);
        let tm = TrueModel::new(&spec.family, vec![1.0], vec![0.5]).unwrap();
        let ds = sample_dataset(&tm, &spec, 60, SeedSpec::new(8), 0);
        let dp = log_evidence_dp(&ds, &spec).unwrap();
        let q = log_evidence_quad(&ds, &spec, &QuadConfig::default()).unwrap();
        assert!((dp - q.log_z).abs() < 1e-4, "dp {dp} vs quad {}", q.log_z);
    }

    #[test]
    fn tolerance_refinement_study() {
        let spec = binom_spec(3, 2, 1.0);
        let tm = TrueModel::new(&spec.family, vec![1.0], vec![0.5]).unwrap();
        let ds = sample_dataset(&tm, &spec, 120, SeedSpec::new(9), 0);
        let dp = log_evidence_dp(&ds, &spec).unwrap();
        let mut errs = Vec::new();
        for tol in [1e-2, 1e-4, 1e-6] {
            let cfg = QuadConfig {
                tol,
                ..QuadConfig::default()
            };
            let q = log_evidence_quad(&ds, &spec, &cfg).unwrap();
            errs.push((dp - q.log_z).abs());
        }
        // Tighter tolerances do not make the error worse (trendwise).
        assert!(errs[2] <= errs[0] + 1e-9, "{errs:?}");
        assert!(errs[2] < 1e-4);
    }

    #[test]
    fn region_masses_match_exact_oracle() {
        let spec = binom_spec(3, 2, 0.5);
        let tm = TrueModel::new(&spec.family, vec![1.0], vec![0.5]).unwrap();
        let ds = sample_dataset(&tm, &spec, 80, SeedSpec::new(10), 3);
        let regions = RegionSet::new(0.1, 0.1, 0.5).unwrap();
        let masses =
            posterior_region_masses(&ds, &spec, &regions, &QuadConfig::default()).unwrap();
        let boxes = regions.boxes();
        for (got, bbox) in [
            (masses.w1, boxes.w1),
            (masses.w2, boxes.w2),
            (masses.w3, boxes.w3),
        ] {
            let want = region_mass_exact(
                &ds,
                &spec,
                (bbox.a_lo, bbox.a_hi),
                (bbox.b1_lo, bbox.b1_hi),
                (bbox.b2_lo, bbox.b2_hi),
            )
            .unwrap();
            assert!(
                (got - want).abs() < 1e-3,
                "quad {got} vs exact {want}"
            );
        }
        // Inclusion-exclusion partition.
        assert!(
            (masses.union() + masses.rest - 1.0).abs() < 2.0 * masses.err_est.max(1e-9),
            "union {} rest {}",
            masses.union(),
            masses.rest
        );
        assert!(masses.w13 < 1e-12);
    }

    #[test]
    fn prior_region_mass_is_prior_volume() {
        // n = 0: mass(W1) must equal the product of prior CDF differences.
        let spec = binom_spec(3, 2, 1.5);
        let tm = TrueModel::new(&spec.family, vec![1.0], vec![0.5]).unwrap();
        let ds = sample_dataset(&tm, &spec, 0, SeedSpec::new(11), 0);
        let regions = RegionSet::new(0.1, 0.1, 0.5).unwrap();
        let masses =
            posterior_region_masses(&ds, &spec, &regions, &QuadConfig::default()).unwrap();
        let vol_a = 1.0 - beta_reg(1.5, 1.5, 0.9);
        let vol_b1 = beta_reg(1.0, 1.0, 0.6) - beta_reg(1.0, 1.0, 0.4);
        let want = vol_a * vol_b1;
        assert!(
            (masses.w1 - want).abs() < 1e-9,
            "w1 {} vs prior volume {want}",
            masses.w1
        );
    }

    #[test]
    fn label_swap_symmetry_at_matched_nodes() {
        // The integrand and the partition are symmetric under
        // (a, b1, b2) -> (1-a, b2, b1), so W1 and W3 masses agree to
        // quadrature accuracy for every dataset.
        let spec = binom_spec(3, 2, 0.25);
        let tm = TrueModel::new(&spec.family, vec![1.0], vec![0.5]).unwrap();
        let regions = RegionSet::new(0.1, 0.1, 0.5).unwrap();
        for task in 0..3 {
            let ds = sample_dataset(&tm, &spec, 150, SeedSpec::new(12), task);
            let m = posterior_region_masses(&ds, &spec, &regions, &QuadConfig::default()).unwrap();
            assert!(
                (m.w1 - m.w3).abs() < 20.0 * m.err_est.max(1e-8),
                "w1 {} vs w3 {} (err {})",
                m.w1,
                m.w3,
                m.err_est
            );
        }
    }

    #[test]
    fn gaussian_quad_matches_brute() {
        let spec = crate::model::MixtureSpec::new(
            Family::Gaussian,
            2,
            crate::model::PriorHyper {
                eta1: 1.0,
                component: ComponentPrior::Normal {
                    scale: 2.0,
                    bound: 14.0,
                },
            },
        )
        .unwrap();
        let tm = TrueModel::new(&Family::Gaussian, vec![1.0], vec![0.0]).unwrap();
        let ds = sample_dataset(&tm, &spec, 6, SeedSpec::new(13), 0);
        let brute = crate::evidence::log_evidence_brute(&ds, &spec).unwrap();
        let q = log_evidence_quad(&ds, &spec, &QuadConfig::default()).unwrap();
        // Brute uses the untruncated conjugate form; the truncation effect at
        // B = 14, s = 2 is far below the comparison tolerance.
        assert!(
            (brute - q.log_z).abs() < 1e-3,
            "brute {brute} vs quad {}",
            q.log_z
        );
    }
}
