//! n-th order inner bounds for the two-terminal problems: both auxiliary
//! channels act on whole source blocks and are optimized jointly by
//! exponentiated-gradient descent with an exact reconstruction step, under
//! a sweep of rate weights and distortion slopes.

use crate::chain::{decode_block, product_extension};
use crate::distortion::DistortionCriterion;
use crate::error::{Error, Result};
use crate::prob::{ConditionalTable, ProbabilityTable};
use crate::region::wyner_ziv::{wz_point_at_slope, wyner_ziv_rd};
use crate::region::{AuxSpec, RateDistortionPoint, Region, Witness};
use crate::rng::stream_rng;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

const LOG2_E_INV: f64 = std::f64::consts::LN_2; // d(x log2 x)/dx = log2 x + 1/ln 2

#[derive(Debug, Clone, Copy)]
enum InnerKind {
    Joint,
    Partial,
}

/// Shared precomputation for one block order.
struct InnerProblem {
    kind: InnerKind,
    n: usize,
    b1: usize,
    b2: usize,
    nz1: usize,
    nz2: usize,
    s1: usize,
    s2: usize,
    /// block source P(a, b), row-major
    p: Vec<f64>,
    pa: Vec<f64>,
    pb: Vec<f64>,
    d: DistortionCriterion,
}

/// Current optimizer state.
#[derive(Clone)]
struct InnerState {
    q1: Vec<f64>, // (b1, nz1)
    q2: Vec<f64>, // (b2, nz2)
    /// flat psi: per (z1, z2, k) the estimated x1 symbol, and for the joint
    /// problem the x2 symbol as well
    psi1: Vec<u32>,
    psi2: Vec<u32>,
}

/// Exact per-block quantities at a state (bits / block distortion).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct InnerQuantities {
    pub i1_cond: f64,
    pub i2_cond: f64,
    pub i_sum: f64,
    pub i2_plain: f64,
    pub block_distortion: f64,
}

impl InnerProblem {
    fn new(
        kind: InnerKind,
        source: &ProbabilityTable,
        d: &DistortionCriterion,
        n: usize,
        nz1: usize,
        nz2: usize,
    ) -> Result<Self> {
        if source.num_axes() != 2 {
            return Err(Error::DimensionMismatch("inner regions expect a two-axis source".into()));
        }
        let ext = product_extension(source, n)?;
        let b1 = ext.axis_size(0);
        let b2 = ext.axis_size(1);
        let s1 = source.axis_size(0);
        let s2 = source.axis_size(1);
        match kind {
            InnerKind::Joint => {
                if d.target_size() != s1 * s2 || d.estimate_size() != s1 * s2 {
                    return Err(Error::DimensionMismatch(
                        "joint distortion must act on source pairs".into(),
                    ));
                }
            }
            InnerKind::Partial => {
                if d.target_size() != s1 {
                    return Err(Error::DimensionMismatch(
                        "partial distortion must target the first source".into(),
                    ));
                }
            }
        }
        let mut pa = vec![0.0f64; b1];
        let mut pb = vec![0.0f64; b2];
        for a in 0..b1 {
            for b in 0..b2 {
                pa[a] += ext.mass()[a * b2 + b];
                pb[b] += ext.mass()[a * b2 + b];
            }
        }
        Ok(Self {
            kind,
            n,
            b1,
            b2,
            nz1,
            nz2,
            s1,
            s2,
            p: ext.mass().to_vec(),
            pa,
            pb,
            d: d.clone(),
        })
    }

    /// Exact reconstruction step: per (z1, z2) and position, the estimate
    /// minimizing the posterior expected distortion.
    fn best_psi(&self, q1: &[f64], q2: &[f64]) -> (Vec<u32>, Vec<u32>) {
        let n = self.n;
        let mut psi1 = vec![0u32; self.nz1 * self.nz2 * n];
        let mut psi2 = vec![0u32; if matches!(self.kind, InnerKind::Joint) { self.nz1 * self.nz2 * n } else { 0 }];
        for z1 in 0..self.nz1 {
            for z2 in 0..self.nz2 {
                // posterior weights per position over (x1(k), x2(k))
                let mut wpos = vec![0.0f64; n * self.s1 * self.s2];
                for a in 0..self.b1 {
                    let qa = q1[a * self.nz1 + z1];
                    if qa == 0.0 {
                        continue;
                    }
                    let xa = decode_block(a as u32, self.s1, n);
                    for b in 0..self.b2 {
                        let w = self.p[a * self.b2 + b] * qa * q2[b * self.nz2 + z2];
                        if w == 0.0 {
                            continue;
                        }
                        let xb = decode_block(b as u32, self.s2, n);
                        for k in 0..n {
                            wpos[(k * self.s1 + xa[k] as usize) * self.s2 + xb[k] as usize] += w;
                        }
                    }
                }
                for k in 0..n {
                    let slot = (z1 * self.nz2 + z2) * n + k;
                    match self.kind {
                        InnerKind::Joint => {
                            let mut best = (0u32, 0u32, f64::INFINITY);
                            for e1 in 0..self.s1 as u32 {
                                for e2 in 0..self.s2 as u32 {
                                    let est = e1 * self.s2 as u32 + e2;
                                    let mut cost = 0.0;
                                    for x1 in 0..self.s1 {
                                        for x2 in 0..self.s2 {
                                            let t = (x1 * self.s2 + x2) as u32;
                                            cost += wpos[(k * self.s1 + x1) * self.s2 + x2]
                                                * self.d.get(t, est);
                                        }
                                    }
                                    if cost < best.2 - 1e-15 {
                                        best = (e1, e2, cost);
                                    }
                                }
                            }
                            psi1[slot] = best.0;
                            psi2[slot] = best.1;
                        }
                        InnerKind::Partial => {
                            let mut best = (0u32, f64::INFINITY);
                            for e in 0..self.d.estimate_size() as u32 {
                                let mut cost = 0.0;
                                for x1 in 0..self.s1 {
                                    let w: f64 = (0..self.s2)
                                        .map(|x2| wpos[(k * self.s1 + x1) * self.s2 + x2])
                                        .sum();
                                    cost += w * self.d.get(x1 as u32, e);
                                }
                                if cost < best.1 - 1e-15 {
                                    best = (e, cost);
                                }
                            }
                            psi1[slot] = best.0;
                        }
                    }
                }
            }
        }
        (psi1, psi2)
    }

    /// Block distortion of psi at a cell (a, b, z1, z2).
    fn block_distortion(&self, a: usize, b: usize, z1: usize, z2: usize, psi1: &[u32], psi2: &[u32]) -> f64 {
        let n = self.n;
        let xa = decode_block(a as u32, self.s1, n);
        let xb = decode_block(b as u32, self.s2, n);
        let base = (z1 * self.nz2 + z2) * n;
        let mut acc = 0.0;
        for k in 0..n {
            acc += match self.kind {
                InnerKind::Joint => {
                    let t = xa[k] * self.s2 as u32 + xb[k];
                    let e = psi1[base + k] * self.s2 as u32 + psi2[base + k];
                    self.d.get(t, e)
                }
                InnerKind::Partial => self.d.get(xa[k], psi1[base + k]),
            };
        }
        acc
    }

    /// Exact information quantities and distortion at a state.
    fn quantities(&self, st: &InnerState) -> InnerQuantities {
        let (w, w1, w2) = self.outputs(&st.q1, &st.q2);
        let h12 = neg_sum_xlog2(&w);
        let h1 = neg_sum_xlog2(&w1);
        let h2 = neg_sum_xlog2(&w2);
        let hc1 = self.cond_entropy(&st.q1, &self.pa, self.nz1);
        let hc2 = self.cond_entropy(&st.q2, &self.pb, self.nz2);
        let mut ed = 0.0f64;
        for a in 0..self.b1 {
            for b in 0..self.b2 {
                let pab = self.p[a * self.b2 + b];
                if pab == 0.0 {
                    continue;
                }
                for z1 in 0..self.nz1 {
                    let qa = st.q1[a * self.nz1 + z1];
                    if qa == 0.0 {
                        continue;
                    }
                    for z2 in 0..self.nz2 {
                        let w = pab * qa * st.q2[b * self.nz2 + z2];
                        if w > 0.0 {
                            ed += w * self.block_distortion(a, b, z1, z2, &st.psi1, &st.psi2);
                        }
                    }
                }
            }
        }
        InnerQuantities {
            i1_cond: (h12 - h2 - hc1).max(0.0),
            i2_cond: (h12 - h1 - hc2).max(0.0),
            i_sum: (h12 - hc1 - hc2).max(0.0),
            i2_plain: (h2 - hc2).max(0.0),
            block_distortion: ed,
        }
    }

    fn cond_entropy(&self, q: &[f64], marginal: &[f64], nz: usize) -> f64 {
        let mut h = 0.0;
        for (row, &p) in marginal.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for z in 0..nz {
                let v = q[row * nz + z];
                if v > 0.0 {
                    h -= p * v * v.log2();
                }
            }
        }
        h
    }

    fn outputs(&self, q1: &[f64], q2: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let mut w = vec![0.0f64; self.nz1 * self.nz2];
        let mut w1 = vec![0.0f64; self.nz1];
        let mut w2 = vec![0.0f64; self.nz2];
        for a in 0..self.b1 {
            for b in 0..self.b2 {
                let pab = self.p[a * self.b2 + b];
                if pab == 0.0 {
                    continue;
                }
                for z1 in 0..self.nz1 {
                    let qa = pab * q1[a * self.nz1 + z1];
                    if qa == 0.0 {
                        continue;
                    }
                    for z2 in 0..self.nz2 {
                        w[z1 * self.nz2 + z2] += qa * q2[b * self.nz2 + z2];
                    }
                }
            }
        }
        for z1 in 0..self.nz1 {
            for z2 in 0..self.nz2 {
                w1[z1] += w[z1 * self.nz2 + z2];
                w2[z2] += w[z1 * self.nz2 + z2];
            }
        }
        (w, w1, w2)
    }

    /// Scalarized objective for the sweep.
    fn objective(&self, st: &InnerState, weights: &[f64; 3], slope: f64) -> f64 {
        let q = self.quantities(st);
        let rate_part = match self.kind {
            InnerKind::Joint => {
                weights[0] * q.i1_cond + weights[1] * q.i2_cond + weights[2] * q.i_sum
            }
            InnerKind::Partial => weights[0] * q.i1_cond + weights[1] * q.i2_plain,
        };
        rate_part + slope * q.block_distortion
    }

    /// Gradient of the scalarized objective with respect to both channels.
    fn gradient(&self, st: &InnerState, weights: &[f64; 3], slope: f64) -> (Vec<f64>, Vec<f64>) {
        let (w, w1, w2) = self.outputs(&st.q1, &st.q2);
        let c = 1.0 / LOG2_E_INV;
        // V1(a, z2) and V2(b, z1)
        let mut v1 = vec![0.0f64; self.b1 * self.nz2];
        let mut v2 = vec![0.0f64; self.b2 * self.nz1];
        for a in 0..self.b1 {
            for b in 0..self.b2 {
                let pab = self.p[a * self.b2 + b];
                if pab == 0.0 {
                    continue;
                }
                for z2 in 0..self.nz2 {
                    v1[a * self.nz2 + z2] += pab * st.q2[b * self.nz2 + z2];
                }
                for z1 in 0..self.nz1 {
                    v2[b * self.nz1 + z1] += pab * st.q1[a * self.nz1 + z1];
                }
            }
        }
        let log_w = |z1: usize, z2: usize| w[z1 * self.nz2 + z2].max(1e-300).log2();
        let mut g1 = vec![0.0f64; self.b1 * self.nz1];
        let mut g2 = vec![0.0f64; self.b2 * self.nz2];
        // joint-problem rate weights on the shared pieces
        let (w_h12_1, w_hc1, w_h1_1) = match self.kind {
            InnerKind::Joint => (
                weights[0] + weights[1] + weights[2],
                weights[0] + weights[2],
                weights[1],
            ),
            InnerKind::Partial => (weights[0], weights[0], 0.0),
        };
        for a in 0..self.b1 {
            if self.pa[a] == 0.0 {
                continue;
            }
            for z1 in 0..self.nz1 {
                // dH12
                let mut dh12 = 0.0;
                for z2 in 0..self.nz2 {
                    dh12 -= v1[a * self.nz2 + z2] * (log_w(z1, z2) + c);
                }
                let dh1 = -self.pa[a] * (w1[z1].max(1e-300).log2() + c);
                let dhc1 = -self.pa[a] * (st.q1[a * self.nz1 + z1].max(1e-300).log2() + c);
                let mut ded = 0.0;
                for b in 0..self.b2 {
                    let pab = self.p[a * self.b2 + b];
                    if pab == 0.0 {
                        continue;
                    }
                    for z2 in 0..self.nz2 {
                        let q2v = st.q2[b * self.nz2 + z2];
                        if q2v > 0.0 {
                            ded += pab * q2v * self.block_distortion(a, b, z1, z2, &st.psi1, &st.psi2);
                        }
                    }
                }
                g1[a * self.nz1 + z1] =
                    w_h12_1 * dh12 - w_hc1 * dhc1 - w_h1_1 * dh1 + slope * ded;
            }
        }
        let (w_h12_2, w_hc2, w_h2_2) = match self.kind {
            InnerKind::Joint => (
                weights[0] + weights[1] + weights[2],
                weights[1] + weights[2],
                weights[0],
            ),
            // partial: I(A;Z1|Z2) = H12 - H2 - Hc1 depends on q2 via H12 and H2;
            // I(B;Z2) = H2 - Hc2
            InnerKind::Partial => (weights[0], weights[1], weights[0] - weights[1]),
        };
        for b in 0..self.b2 {
            if self.pb[b] == 0.0 {
                continue;
            }
            for z2 in 0..self.nz2 {
                let mut dh12 = 0.0;
                for z1 in 0..self.nz1 {
                    dh12 -= v2[b * self.nz1 + z1] * (log_w(z1, z2) + c);
                }
                let dh2 = -self.pb[b] * (w2[z2].max(1e-300).log2() + c);
                let dhc2 = -self.pb[b] * (st.q2[b * self.nz2 + z2].max(1e-300).log2() + c);
                let mut ded = 0.0;
                for a in 0..self.b1 {
                    let pab = self.p[a * self.b2 + b];
                    if pab == 0.0 {
                        continue;
                    }
                    for z1 in 0..self.nz1 {
                        let q1v = st.q1[a * self.nz1 + z1];
                        if q1v > 0.0 {
                            ded += pab * q1v * self.block_distortion(a, b, z1, z2, &st.psi1, &st.psi2);
                        }
                    }
                }
                g2[b * self.nz2 + z2] =
                    w_h12_2 * dh12 - w_hc2 * dhc2 - w_h2_2 * dh2 + slope * ded;
            }
        }
        (g1, g2)
    }
}

fn neg_sum_xlog2(v: &[f64]) -> f64 {
    v.iter().map(|&x| if x > 0.0 { -x * x.log2() } else { 0.0 }).sum()
}

fn exp_gradient_row_update(q: &mut [f64], g: &[f64], eta: f64, nz: usize) {
    for row in 0..q.len() / nz {
        let r = &mut q[row * nz..(row + 1) * nz];
        let gr = &g[row * nz..(row + 1) * nz];
        // shift by the row minimum so every exponent is <= 0
        let floor = gr.iter().cloned().fold(f64::INFINITY, f64::min);
        let mut norm = 0.0;
        for z in 0..nz {
            let v = (r[z].max(1e-300)) * (-(eta) * (gr[z] - floor)).exp();
            r[z] = v;
            norm += v;
        }
        for z in 0..nz {
            r[z] /= norm;
        }
    }
}

fn optimize(
    problem: &InnerProblem,
    mut st: InnerState,
    weights: &[f64; 3],
    slope: f64,
    max_iterations: usize,
    tolerance: f64,
) -> InnerState {
    let (p1, p2) = problem.best_psi(&st.q1, &st.q2);
    st.psi1 = p1;
    st.psi2 = p2;
    let mut f = problem.objective(&st, weights, slope);
    let mut eta = 0.5f64;
    for it in 0..max_iterations {
        let (g1, g2) = problem.gradient(&st, weights, slope);
        let mut improved = false;
        for _ in 0..30 {
            let mut cand = st.clone();
            exp_gradient_row_update(&mut cand.q1, &g1, eta, problem.nz1);
            exp_gradient_row_update(&mut cand.q2, &g2, eta, problem.nz2);
            let (p1, p2) = problem.best_psi(&cand.q1, &cand.q2);
            cand.psi1 = p1;
            cand.psi2 = p2;
            let fc = problem.objective(&cand, weights, slope);
            if fc <= f - 1e-15 {
                st = cand;
                let gain = f - fc;
                f = fc;
                improved = true;
                if gain < tolerance * (1.0 + f.abs()) && it > 4 {
                    return st;
                }
                eta = (eta * 1.6).min(8.0);
                break;
            }
            eta *= 0.5;
            if eta < 1e-7 {
                break;
            }
        }
        if !improved {
            break;
        }
    }
    st
}

fn random_rows(rows: usize, nz: usize, seed: u64, stream: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, stream);
    let mut q = vec![0.0f64; rows * nz];
    for r in 0..rows {
        let mut norm = 0.0;
        for z in 0..nz {
            let v = -(rng.gen::<f64>()).ln();
            q[r * nz + z] = v;
            norm += v;
        }
        for z in 0..nz {
            q[r * nz + z] /= norm;
        }
    }
    q
}

fn structured_rows(rows: usize, nz: usize, kind: usize) -> Vec<f64> {
    let mut q = vec![0.0f64; rows * nz];
    match kind {
        // identity-leaning
        0 => {
            for r in 0..rows {
                for z in 0..nz {
                    q[r * nz + z] = if z == r % nz { 0.85 } else { 0.15 / (nz - 1).max(1) as f64 };
                }
            }
        }
        // constant
        _ => {
            for r in 0..rows {
                q[r * nz] = 1.0;
            }
        }
    }
    q
}

fn emit_inner_point(
    region: &mut Region,
    problem: &InnerProblem,
    st: &InnerState,
) -> Result<()> {
    let q = problem.quantities(st);
    let n = problem.n as f64;
    let witness = Witness {
        q1: Some(ConditionalTable::from_rows(problem.b1, problem.nz1, st.q1.clone())?),
        q2: Some(ConditionalTable::from_rows(problem.b2, problem.nz2, st.q2.clone())?),
        psi: Some(match problem.kind {
            InnerKind::Joint => {
                let mut both = st.psi1.clone();
                both.extend_from_slice(&st.psi2);
                both
            }
            InnerKind::Partial => st.psi1.clone(),
        }),
    };
    let wid = region.witnesses.len();
    region.witnesses.push(witness);
    let d = q.block_distortion / n;
    match problem.kind {
        InnerKind::Joint => {
            // corners of the rate polyhedron plus the midpoint
            let c0 = (q.i_sum - q.i2_cond, q.i2_cond);
            let c1 = (q.i1_cond, q.i_sum - q.i1_cond);
            for t in [0.0, 0.5, 1.0] {
                let r1 = (c0.0 + t * (c1.0 - c0.0)) / n;
                let r2 = (c0.1 + t * (c1.1 - c0.1)) / n;
                region.push_shared(RateDistortionPoint::triple(r1, r2, d), wid);
            }
        }
        InnerKind::Partial => {
            region.push_shared(
                RateDistortionPoint::triple(q.i1_cond / n, q.i2_plain / n, d),
                wid,
            );
        }
    }
    Ok(())
}

fn sweep_region(
    kind: InnerKind,
    name: &str,
    source: &ProbabilityTable,
    d: &DistortionCriterion,
    n: usize,
    aux: &AuxSpec,
    seed: u64,
) -> Result<Region> {
    aux.validate()?;
    let ext = product_extension(source, n)?;
    let nz1 = aux.card_z1.max(2).min(ext.axis_size(0) + 2);
    let nz2 = aux.card_z2.max(2).min(ext.axis_size(1) + 2);
    let problem = InnerProblem::new(kind, source, d, n, nz1, nz2)?;
    let mut region = Region::new(name, n);

    let weight_sets: [[f64; 3]; 5] = [
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [1.0, 1.0, 0.0],
        [0.5, 0.5, 1.0],
    ];
    let slopes: Vec<f64> = (0..12).map(|i| 0.15 * 1.7f64.powi(i)).collect();

    // structured witnesses first: identity-leaning, constant, and their mix
    let mut jobs: Vec<(usize, [f64; 3], f64)> = Vec::new();
    for (wi, ws) in weight_sets.iter().enumerate() {
        for &s in &slopes {
            for r in 0..aux.restarts.max(1).min(6) {
                jobs.push((wi * 1000 + r, *ws, s));
            }
        }
    }
    let states: Vec<InnerState> = jobs
        .par_iter()
        .map(|(job, ws, s)| {
            let r = job % 1000;
            let (q1, q2) = match r {
                0 => (structured_rows(problem.b1, nz1, 0), structured_rows(problem.b2, nz2, 0)),
                1 => (structured_rows(problem.b1, nz1, 1), structured_rows(problem.b2, nz2, 1)),
                _ => (
                    random_rows(problem.b1, nz1, seed, (*job as u64) << 1),
                    random_rows(problem.b2, nz2, seed, ((*job as u64) << 1) | 1),
                ),
            };
            let st = InnerState { q1, q2, psi1: Vec::new(), psi2: Vec::new() };
            optimize(&problem, st, ws, *s, aux.max_iterations.min(600), aux.tolerance.max(1e-10))
        })
        .collect();
    for st in &states {
        emit_inner_point(&mut region, &problem, st)?;
    }
    // pure structured witnesses without optimization (exact degenerate ends)
    for kind_idx in 0..2 {
        let mut st = InnerState {
            q1: structured_rows(problem.b1, nz1, kind_idx),
            q2: structured_rows(problem.b2, nz2, kind_idx),
            psi1: Vec::new(),
            psi2: Vec::new(),
        };
        let (p1, p2) = problem.best_psi(&st.q1, &st.q2);
        st.psi1 = p1;
        st.psi2 = p2;
        emit_inner_point(&mut region, &problem, &st)?;
    }
    region.prune_dominated();
    Ok(region)
}

/// Inner bound of the joint-distortion problem at block order n: emits
/// per-symbol (r1, r2, d) triples with retained witnesses.
pub fn joint_inner_region(
    source: &ProbabilityTable,
    d: &DistortionCriterion,
    n: usize,
    aux: &AuxSpec,
    seed: u64,
) -> Result<Region> {
    sweep_region(InnerKind::Joint, "joint", source, d, n, aux, seed)
}

/// Inner bound of the partial-side-information problem at block order n.
pub fn partial_inner_region(
    source: &ProbabilityTable,
    d: &DistortionCriterion,
    n: usize,
    aux: &AuxSpec,
    seed: u64,
) -> Result<Region> {
    sweep_region(InnerKind::Partial, "partial", source, d, n, aux, seed)
}

/// Witness re-verification: recompute the defining quantities of an emitted
/// point from its stored witness. Returns per-symbol (r1-bound, r2-bound, d).
pub fn verify_inner_point(
    source: &ProbabilityTable,
    d: &DistortionCriterion,
    region: &Region,
    index: usize,
    joint_problem: bool,
) -> Result<(f64, f64, f64)> {
    let rp = &region.points[index];
    let w = &region.witnesses[rp.witness_id];
    let q1 = w.q1.as_ref().ok_or(Error::EmptyRegion)?;
    let q2 = w.q2.as_ref().ok_or(Error::EmptyRegion)?;
    let n = region.meta.order;
    let kind = if joint_problem { InnerKind::Joint } else { InnerKind::Partial };
    let problem = InnerProblem::new(kind, source, d, n, q1.out_cells(), q2.out_cells())?;
    let psi = w.psi.as_ref().ok_or(Error::EmptyRegion)?;
    let per = problem.nz1 * problem.nz2 * n;
    let st = InnerState {
        q1: q1.rows().to_vec(),
        q2: q2.rows().to_vec(),
        psi1: psi[..per].to_vec(),
        psi2: if joint_problem { psi[per..].to_vec() } else { Vec::new() },
    };
    let q = problem.quantities(&st);
    let nf = n as f64;
    Ok(match kind {
        InnerKind::Joint => (q.i1_cond / nf, q.i2_cond / nf, q.block_distortion / nf),
        InnerKind::Partial => (q.i1_cond / nf, q.i2_plain / nf, q.block_distortion / nf),
    })
}

/// Block-extended distortion criterion: additive over positions, acting on
/// block super-symbols of the first source.
pub fn block_distortion_criterion(d: &DistortionCriterion, s1: usize, n: usize) -> Result<DistortionCriterion> {
    let b1 = s1.pow(n as u32);
    let be = d.estimate_size().pow(n as u32);
    let mut matrix = vec![0.0f64; b1 * be];
    for a in 0..b1 {
        let xa = decode_block(a as u32, s1, n);
        for e in 0..be {
            let xe = decode_block(e as u32, d.estimate_size(), n);
            let mut acc = 0.0;
            for k in 0..n {
                acc += d.get(xa[k], xe[k]);
            }
            matrix[a * be + e] = acc;
        }
    }
    DistortionCriterion::new(b1, be, matrix, d.d_max() * n as f64)
}

/// Containment check between block orders for the complete-side-information
/// specialization: every order-2 operating point must be dominated by the
/// order-1 curve within the tolerance.
#[derive(Debug, Clone, Serialize)]
pub struct SingleLetterReport {
    pub targets: Vec<f64>,
    pub rate1_at_targets: Vec<f64>,
    pub rate2_at_targets: Vec<f64>,
    pub order2_points: Vec<(f64, f64)>,
    pub worst_gap: f64,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn single_letterization_check(
    joint: &ProbabilityTable,
    d: &DistortionCriterion,
    targets: &[f64],
    aux: &AuxSpec,
    tolerance: f64,
    seed: u64,
) -> Result<SingleLetterReport> {
    if joint.num_axes() != 2 {
        return Err(Error::DimensionMismatch("expected a two-axis joint".into()));
    }
    aux.validate()?;
    let s1 = joint.axis_size(0);
    let nz1_order1 = s1 + 1;
    // order-2 problem: block source pair, block distortion, complete side info
    let ext = product_extension(joint, 2)?;
    let d2 = block_distortion_criterion(d, s1, 2)?;
    let nz1_order2 = ext.axis_size(0) + 1;

    // order-1 curve for evaluation at arbitrary distortions
    let mut curve1: Vec<(f64, f64)> = Vec::new();
    let slopes: Vec<f64> = (0..26).map(|i| 0.08 * 1.45f64.powi(i)).collect();
    for (i, &s) in slopes.iter().enumerate() {
        let pt = wz_point_at_slope(joint, d, nz1_order1, s, aux.restarts.max(4), aux.max_iterations, aux.tolerance, seed.wrapping_add(i as u64))?;
        curve1.push((pt.distortion, pt.rate));
    }
    // zero-rate end
    {
        let pt = wz_point_at_slope(joint, d, nz1_order1, 0.0, 2, aux.max_iterations, aux.tolerance, seed)?;
        curve1.push((pt.distortion, 0.0f64.max(pt.rate.min(1e-12))));
    }

    // order-2 cloud (per-symbol coordinates)
    let mut points2: Vec<(f64, f64)> = Vec::new();
    for (i, &s) in slopes.iter().enumerate() {
        // slope on block distortion: d_total = 2 d_per_symbol, so the
        // per-symbol slope s corresponds to block slope s/1 on the block
        // criterion with rates also doubled; everything cancels at emission
        let pt = wz_point_at_slope(
            &ext,
            &d2,
            nz1_order2,
            s,
            aux.restarts.max(4),
            aux.max_iterations,
            aux.tolerance,
            seed.wrapping_add(1000 + i as u64),
        )?;
        points2.push((pt.distortion / 2.0, pt.rate / 2.0));
    }

    let mut worst_gap = 0.0f64;
    for &(d2p, r2p) in &points2 {
        let r1 = super::rate_at_target(&curve1, d2p)?;
        let gap = (r1 - r2p).max(0.0);
        if gap > worst_gap {
            worst_gap = gap;
        }
    }

    let mut rate1_at_targets = Vec::with_capacity(targets.len());
    let mut rate2_at_targets = Vec::with_capacity(targets.len());
    for &t in targets {
        rate1_at_targets.push(wyner_ziv_rd(
            joint,
            d,
            t,
            nz1_order1,
            aux.restarts.max(4),
            aux.max_iterations,
            aux.tolerance,
            seed,
        )?);
        let per_symbol_points: Vec<(f64, f64)> = points2.clone();
        rate2_at_targets.push(super::rate_at_target(&per_symbol_points, t)?);
    }
    for (i, &t) in targets.iter().enumerate() {
        let gap = (rate1_at_targets[i] - rate2_at_targets[i]).max(0.0);
        if gap > worst_gap {
            worst_gap = gap;
        }
        let _ = t;
    }
    Ok(SingleLetterReport {
        targets: targets.to_vec(),
        rate1_at_targets,
        rate2_at_targets,
        order2_points: points2,
        worst_gap,
        tolerance,
        pass: worst_gap <= tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_aux() -> AuxSpec {
        AuxSpec { restarts: 4, max_iterations: 400, ..AuxSpec::for_source(2, 2) }
    }

    #[test]
    fn joint_region_contains_origin_at_large_distortion() {
        let source = ProbabilityTable::dsbs(0.25).unwrap();
        let d = DistortionCriterion::hamming(4);
        let region = joint_inner_region(&source, &d, 1, &small_aux(), 3).unwrap();
        // constant auxiliaries give rates (0,0) at the best constant distortion
        let best_constant: f64 = {
            // min over a single pair estimate of E d((x1,x2), e)
            (0..4u32)
                .map(|e| {
                    source
                        .mass()
                        .iter()
                        .enumerate()
                        .map(|(t, &p)| p * d.get(t as u32, e))
                        .sum::<f64>()
                })
                .fold(f64::INFINITY, f64::min)
        };
        let q = RateDistortionPoint::triple(0.0, 0.0, best_constant);
        assert!(region.contains(&q, 1e-9), "missing zero-rate point at d = {best_constant}");
    }

    #[test]
    fn emitted_points_reverify() {
        let source = ProbabilityTable::dsbs(0.25).unwrap();
        let d = DistortionCriterion::hamming(4);
        let region = joint_inner_region(&source, &d, 1, &small_aux(), 5).unwrap();
        for i in 0..region.points.len().min(10) {
            let (r1b, r2b, dd) = verify_inner_point(&source, &d, &region, i, true).unwrap();
            let p = region.points[i].point;
            // emitted rates must dominate the witness bounds
            assert!(r1b <= p.r1 + 1e-9, "r1 bound {r1b} vs emitted {}", p.r1);
            let sum_bound = {
                let w = &region.witnesses[region.points[i].witness_id];
                let _ = w;
                r1b + r2b // loose but valid: both conditional bounds
            };
            let _ = sum_bound;
            assert!(dd <= p.d.unwrap() + 1e-9);
        }
    }

    #[test]
    fn partial_emitted_points_satisfy_inequalities() {
        let source = ProbabilityTable::dsbs(0.25).unwrap();
        let d = DistortionCriterion::hamming(2);
        let region = partial_inner_region(&source, &d, 1, &small_aux(), 7).unwrap();
        for (i, p) in region.points.iter().enumerate() {
            let (r1b, r2b, dd) = verify_inner_point(&source, &d, &region, i, false).unwrap();
            assert!((r1b - p.point.r1).abs() < 1e-9);
            assert!((r2b - p.point.r2.unwrap()).abs() < 1e-9);
            assert!((dd - p.point.d.unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn block_distortion_criterion_is_additive() {
        let d = DistortionCriterion::hamming(2);
        let d2 = block_distortion_criterion(&d, 2, 2).unwrap();
        // block (0,1) vs estimate (1,1): one mismatch
        let a = crate::chain::encode_block(&[0, 1], 2);
        let e = crate::chain::encode_block(&[1, 1], 2);
        assert_eq!(d2.get(a, e), 1.0);
        assert_eq!(d2.get(a, a), 0.0);
    }
}
