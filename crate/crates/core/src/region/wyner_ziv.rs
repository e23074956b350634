//! Rate-distortion function with decoder side information: alternating
//! minimization over the auxiliary channel with an exact pointwise
//! reconstruction step, multi-restart, traced along the distortion slope.
//!
//! The same machinery computes the conditional rate-distortion function
//! (side information at both ends), used by the ordering checks.

use crate::distortion::DistortionCriterion;
use crate::error::{Error, Result};
use crate::prob::ProbabilityTable;
use crate::rng::stream_rng;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

/// Converged operating point with its witness.
#[derive(Debug, Clone, Serialize)]
pub struct WzOperatingPoint {
    pub slope: f64,
    pub rate: f64,
    pub distortion: f64,
    /// q1(z|x1), row-major over (x1, z).
    pub channel: Vec<f64>,
    /// psi(z, x2) as a flat table over (z, x2).
    pub reconstruction: Vec<u32>,
}

struct WzProblem<'a> {
    /// p(x1, x2), row-major.
    joint: &'a [f64],
    nx1: usize,
    nx2: usize,
    nz: usize,
    d: &'a DistortionCriterion,
    /// p(x2|x1), row-major over (x1, x2).
    cond_x2: Vec<f64>,
    /// p(x1).
    px1: Vec<f64>,
}

impl<'a> WzProblem<'a> {
    fn new(joint: &'a ProbabilityTable, nz: usize, d: &'a DistortionCriterion) -> Result<Self> {
        let nx1 = joint.axis_size(0);
        let nx2 = joint.axis_size(1);
        let mass = joint.mass();
        let mut px1 = vec![0.0f64; nx1];
        for x1 in 0..nx1 {
            for x2 in 0..nx2 {
                px1[x1] += mass[x1 * nx2 + x2];
            }
        }
        let mut cond_x2 = vec![0.0f64; nx1 * nx2];
        for x1 in 0..nx1 {
            if px1[x1] > 0.0 {
                for x2 in 0..nx2 {
                    cond_x2[x1 * nx2 + x2] = mass[x1 * nx2 + x2] / px1[x1];
                }
            }
        }
        Ok(Self { joint: mass, nx1, nx2, nz, d, cond_x2, px1 })
    }

    /// Exact reconstruction step: per (z, x2) the estimate minimizing the
    /// weighted distortion, ties toward the smaller symbol.
    fn best_psi(&self, q1: &[f64]) -> Vec<u32> {
        let ne = self.d.estimate_size();
        let mut psi = vec![0u32; self.nz * self.nx2];
        for z in 0..self.nz {
            for x2 in 0..self.nx2 {
                let mut best = (0u32, f64::INFINITY);
                for e in 0..ne as u32 {
                    let cost: f64 = (0..self.nx1)
                        .map(|x1| self.joint[x1 * self.nx2 + x2] * q1[x1 * self.nz + z] * self.d.get(x1 as u32, e))
                        .sum();
                    if cost < best.1 - 1e-15 {
                        best = (e, cost);
                    }
                }
                psi[z * self.nx2 + x2] = best.0;
            }
        }
        psi
    }

    /// Exact objective pieces at a channel: (I(X1;Z|X2), E d with best psi
    /// frozen to `psi`).
    fn evaluate(&self, q1: &[f64], psi: &[u32]) -> (f64, f64) {
        // m(z|x2) = sum_x1 p(x1|x2) q1(z|x1)
        let mut px2 = vec![0.0f64; self.nx2];
        for x1 in 0..self.nx1 {
            for x2 in 0..self.nx2 {
                px2[x2] += self.joint[x1 * self.nx2 + x2];
            }
        }
        let mut m = vec![0.0f64; self.nx2 * self.nz];
        for x2 in 0..self.nx2 {
            if px2[x2] == 0.0 {
                continue;
            }
            for x1 in 0..self.nx1 {
                let w = self.joint[x1 * self.nx2 + x2] / px2[x2];
                for z in 0..self.nz {
                    m[x2 * self.nz + z] += w * q1[x1 * self.nz + z];
                }
            }
        }
        let mut rate = 0.0f64;
        let mut dist = 0.0f64;
        for x1 in 0..self.nx1 {
            for x2 in 0..self.nx2 {
                let p = self.joint[x1 * self.nx2 + x2];
                if p == 0.0 {
                    continue;
                }
                for z in 0..self.nz {
                    let q = q1[x1 * self.nz + z];
                    if q > 0.0 {
                        let mz = m[x2 * self.nz + z];
                        if mz > 0.0 {
                            rate += p * q * (q / mz).log2();
                        }
                        dist += p * q * self.d.get(x1 as u32, psi[z * self.nx2 + x2]);
                    }
                }
            }
        }
        (rate.max(0.0), dist)
    }

    /// One alternating pass at a slope: psi exact step then the closed-form
    /// channel update against the induced marginal and frozen psi.
    fn iterate(&self, q1: &mut Vec<f64>, slope: f64) -> Vec<u32> {
        let psi = self.best_psi(q1);
        // m(z|x2)
        let mut px2 = vec![0.0f64; self.nx2];
        for x1 in 0..self.nx1 {
            for x2 in 0..self.nx2 {
                px2[x2] += self.joint[x1 * self.nx2 + x2];
            }
        }
        let mut m = vec![0.0f64; self.nx2 * self.nz];
        for x2 in 0..self.nx2 {
            if px2[x2] == 0.0 {
                continue;
            }
            for x1 in 0..self.nx1 {
                let w = self.joint[x1 * self.nx2 + x2] / px2[x2];
                for z in 0..self.nz {
                    m[x2 * self.nz + z] += w * q1[x1 * self.nz + z];
                }
            }
        }
        // q1(z|x1) proportional to exp2( sum_x2 p(x2|x1)[log2 m(z|x2) - slope d(x1, psi(z,x2))] )
        let mut next = vec![0.0f64; self.nx1 * self.nz];
        for x1 in 0..self.nx1 {
            if self.px1[x1] == 0.0 {
                // unreachable source letter: keep the row uniform
                for z in 0..self.nz {
                    next[x1 * self.nz + z] = 1.0 / self.nz as f64;
                }
                continue;
            }
            let mut log_row = vec![0.0f64; self.nz];
            for z in 0..self.nz {
                let mut acc = 0.0f64;
                for x2 in 0..self.nx2 {
                    let w = self.cond_x2[x1 * self.nx2 + x2];
                    if w == 0.0 {
                        continue;
                    }
                    let mz = m[x2 * self.nz + z].max(1e-300);
                    acc += w * (mz.log2() - slope * self.d.get(x1 as u32, psi[z * self.nx2 + x2]));
                }
                log_row[z] = acc;
            }
            let peak = log_row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut norm = 0.0f64;
            for z in 0..self.nz {
                let v = (2.0f64).powf(log_row[z] - peak);
                next[x1 * self.nz + z] = v;
                norm += v;
            }
            for z in 0..self.nz {
                next[x1 * self.nz + z] /= norm;
            }
        }
        *q1 = next;
        psi
    }
}

fn converge_from(
    problem: &WzProblem,
    mut q1: Vec<f64>,
    slope: f64,
    max_iterations: usize,
    tolerance: f64,
) -> WzOperatingPoint {
    let mut last = f64::INFINITY;
    for _ in 0..max_iterations {
        let psi = problem.iterate(&mut q1, slope);
        let (rate, dist) = problem.evaluate(&q1, &psi);
        let objective = rate + slope * dist;
        if (last - objective).abs() < tolerance * (1.0 + objective.abs()) {
            break;
        }
        last = objective;
    }
    let psi = problem.best_psi(&q1);
    let (rate, distortion) = problem.evaluate(&q1, &psi);
    WzOperatingPoint { slope, rate, distortion, channel: q1, reconstruction: psi }
}

fn random_channel(nx: usize, nz: usize, seed: u64, stream: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, stream);
    let mut rows = vec![0.0f64; nx * nz];
    for x in 0..nx {
        let mut norm = 0.0;
        for z in 0..nz {
            let v = -(rng.gen::<f64>()).ln();
            rows[x * nz + z] = v;
            norm += v;
        }
        for z in 0..nz {
            rows[x * nz + z] /= norm;
        }
    }
    rows
}

/// Best-over-restarts operating point at one slope. Restart 0 starts from
/// an identity-leaning channel, the rest from seeded random rows.
pub(crate) fn wz_point_at_slope(
    joint: &ProbabilityTable,
    d: &DistortionCriterion,
    nz: usize,
    slope: f64,
    restarts: usize,
    max_iterations: usize,
    tolerance: f64,
    seed: u64,
) -> Result<WzOperatingPoint> {
    let problem = WzProblem::new(joint, nz, d)?;
    let nx1 = problem.nx1;
    let inits: Vec<Vec<f64>> = (0..restarts.max(1))
        .map(|r| {
            if r == 0 {
                // identity-leaning start: mass 0.9 on z = x1 (mod nz)
                let mut rows = vec![0.0f64; nx1 * nz];
                for x in 0..nx1 {
                    for z in 0..nz {
                        rows[x * nz + z] = if z == x % nz { 0.9 } else { 0.1 / (nz - 1).max(1) as f64 };
                    }
                    let norm: f64 = rows[x * nz..(x + 1) * nz].iter().sum();
                    for z in 0..nz {
                        rows[x * nz + z] /= norm;
                    }
                }
                rows
            } else {
                random_channel(nx1, nz, seed, r as u64)
            }
        })
        .collect();
    let candidates: Vec<WzOperatingPoint> = inits
        .into_par_iter()
        .map(|q1| converge_from(&problem, q1, slope, max_iterations, tolerance))
        .collect();
    // deterministic pick: smallest Lagrangian, ties toward the earlier restart
    let mut best = 0usize;
    let mut best_obj = f64::INFINITY;
    for (i, c) in candidates.iter().enumerate() {
        let obj = c.rate + slope * c.distortion;
        if obj < best_obj - 1e-15 {
            best = i;
            best_obj = obj;
        }
    }
    Ok(candidates.into_iter().nth(best).unwrap())
}

/// Wyner-Ziv rate at a distortion target: slope sweep plus bisection, lower
/// convex interpolation at the target.
pub fn wyner_ziv_rd(
    joint: &ProbabilityTable,
    d: &DistortionCriterion,
    target: f64,
    card_z1: usize,
    restarts: usize,
    max_iterations: usize,
    tolerance: f64,
    seed: u64,
) -> Result<f64> {
    if joint.num_axes() != 2 {
        return Err(Error::DimensionMismatch("wyner_ziv_rd expects a two-axis joint".into()));
    }
    if card_z1 < 1 {
        return Err(Error::InvalidParameter("auxiliary cardinality must be >= 1".into()));
    }
    if target < 0.0 {
        return Err(Error::InvalidParameter("distortion target must be nonnegative".into()));
    }
    let eval = |slope: f64| {
        wz_point_at_slope(joint, d, card_z1, slope, restarts, max_iterations, tolerance, seed)
    };
    // zero-rate distortion: best psi from side information alone
    let problem = WzProblem::new(joint, card_z1, d)?;
    let uniform = vec![1.0 / card_z1 as f64; problem.nx1 * card_z1];
    let constant_rows = {
        // constant channel: all mass on z = 0
        let mut rows = vec![0.0f64; problem.nx1 * card_z1];
        for x in 0..problem.nx1 {
            rows[x * card_z1] = 1.0;
        }
        rows
    };
    let psi0 = problem.best_psi(&constant_rows);
    let (_, d_zero) = problem.evaluate(&constant_rows, &psi0);
    let _ = uniform;
    if target >= d_zero - 1e-15 {
        return Ok(0.0);
    }
    let mut points: Vec<(f64, f64)> = vec![(d_zero, 0.0)];
    let mut lo = 0.0f64;
    let mut hi = 2.0f64;
    let mut hi_pt = eval(hi)?;
    let mut guard = 0;
    while hi_pt.distortion > target && guard < 40 {
        hi *= 2.0;
        hi_pt = eval(hi)?;
        guard += 1;
    }
    points.push((hi_pt.distortion, hi_pt.rate));
    for _ in 0..48 {
        let mid = 0.5 * (lo + hi);
        let pt = eval(mid)?;
        points.push((pt.distortion, pt.rate));
        if pt.distortion > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-9 {
            break;
        }
    }
    super::rate_at_target(&points, target)
}

/// Conditional rate-distortion function (side information at encoder and
/// decoder): per-conditioning-letter curves tied by a common slope.
pub fn conditional_rd(
    joint: &ProbabilityTable,
    d: &DistortionCriterion,
    target: f64,
) -> Result<f64> {
    if joint.num_axes() != 2 {
        return Err(Error::DimensionMismatch("conditional_rd expects a two-axis joint".into()));
    }
    if target < 0.0 {
        return Err(Error::InvalidParameter("distortion target must be nonnegative".into()));
    }
    let nx1 = joint.axis_size(0);
    let nx2 = joint.axis_size(1);
    let mass = joint.mass();
    let mut px2 = vec![0.0f64; nx2];
    for x1 in 0..nx1 {
        for x2 in 0..nx2 {
            px2[x2] += mass[x1 * nx2 + x2];
        }
    }
    let branches: Vec<Vec<f64>> = (0..nx2)
        .map(|x2| {
            (0..nx1)
                .map(|x1| if px2[x2] > 0.0 { mass[x1 * nx2 + x2] / px2[x2] } else { 0.0 })
                .collect()
        })
        .collect();
    let eval = |slope: f64| -> (f64, f64) {
        let mut rate = 0.0;
        let mut dist = 0.0;
        for (x2, branch) in branches.iter().enumerate() {
            if px2[x2] == 0.0 {
                continue;
            }
            let pt = super::shannon::ba_fixed_slope(branch, d, slope, None, 20_000, 1e-14);
            rate += px2[x2] * pt.rate;
            dist += px2[x2] * pt.distortion;
        }
        (rate, dist)
    };
    let (_, d_zero) = {
        let mut d_min = 0.0;
        let mut d_zero = 0.0;
        for (x2, branch) in branches.iter().enumerate() {
            if px2[x2] == 0.0 {
                continue;
            }
            let (dm, dz) = super::shannon::distortion_range(branch, d);
            d_min += px2[x2] * dm;
            d_zero += px2[x2] * dz;
        }
        (d_min, d_zero)
    };
    if target >= d_zero - 1e-15 {
        return Ok(0.0);
    }
    let mut lo = 0.0f64;
    let mut hi = 2.0f64;
    let mut pt = eval(hi);
    let mut guard = 0;
    while pt.1 > target && guard < 60 {
        hi *= 2.0;
        pt = eval(hi);
        guard += 1;
    }
    let mut points = vec![(d_zero, 0.0), (pt.1, pt.0)];
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let (r, dd) = eval(mid);
        points.push((dd, r));
        if dd > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-11 {
            break;
        }
    }
    super::rate_at_target(&points, target)
}

/// Brute-force grid oracle: every channel row on a step-`grid` simplex over
/// `card_z1` symbols, exhaustive (pointwise-exact) reconstruction. Returns
/// the least rate with distortion at or below the target.
pub fn wyner_ziv_grid_oracle(
    joint: &ProbabilityTable,
    d: &DistortionCriterion,
    target: f64,
    card_z1: usize,
    grid: f64,
) -> Result<f64> {
    if joint.num_axes() != 2 || joint.axis_size(0) != 2 {
        return Err(Error::DimensionMismatch("grid oracle implemented for binary X1".into()));
    }
    let problem = WzProblem::new(joint, card_z1, d)?;
    let steps = (1.0 / grid).round() as usize;
    // enumerate one simplex row: compositions of `steps` into card_z1 parts
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut stack = vec![0usize; card_z1];
    fn rec(k: usize, remaining: usize, stack: &mut Vec<usize>, steps: usize, out: &mut Vec<Vec<f64>>) {
        let parts = stack.len();
        if k == parts - 1 {
            stack[k] = remaining;
            out.push(stack.iter().map(|&c| c as f64 / steps as f64).collect());
            return;
        }
        for c in 0..=remaining {
            stack[k] = c;
            rec(k + 1, remaining - c, stack, steps, out);
        }
    }
    rec(0, steps, &mut stack, steps, &mut rows);

    let best = rows
        .par_iter()
        .enumerate()
        .map(|(i, row0)| {
            let mut local_best = f64::INFINITY;
            let mut q1 = vec![0.0f64; 2 * card_z1];
            q1[..card_z1].copy_from_slice(row0);
            for row1 in &rows {
                q1[card_z1..].copy_from_slice(row1);
                let psi = problem.best_psi(&q1);
                let (rate, dist) = problem.evaluate(&q1, &psi);
                if dist <= target + 1e-12 && rate < local_best {
                    local_best = rate;
                }
            }
            (i, local_best)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .map(|(_, v)| v)
        .fold(f64::INFINITY, f64::min);
    if best.is_infinite() {
        return Err(Error::InvalidParameter("grid oracle found no feasible channel".into()));
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::binary_entropy;
    use crate::region::shannon::shannon_rd;

    #[test]
    fn independent_side_information_is_useless() {
        let joint = ProbabilityTable::uniform(&[2, 2]).unwrap();
        let d = DistortionCriterion::hamming(2);
        let target = 0.1;
        let wz = wyner_ziv_rd(&joint, &d, target, 3, 8, 3000, 1e-11, 3).unwrap();
        let source = joint.marginal(&[0]).unwrap();
        let sh = shannon_rd(&source, &d, target).unwrap();
        assert!((wz - sh).abs() < 1e-3, "wz {wz} shannon {sh}");
    }

    #[test]
    fn lossless_endpoint_is_conditional_entropy() {
        let joint = ProbabilityTable::dsbs(0.25).unwrap();
        let d = DistortionCriterion::hamming(2);
        let wz = wyner_ziv_rd(&joint, &d, 0.0, 3, 8, 4000, 1e-12, 5).unwrap();
        let h_cond = binary_entropy(0.25);
        assert!((wz - h_cond).abs() < 1e-3, "wz {wz} H(X1|X2) {h_cond}");
    }

    #[test]
    fn ordering_chain_holds() {
        let joint = ProbabilityTable::dsbs(0.25).unwrap();
        let d = DistortionCriterion::hamming(2);
        let source = joint.marginal(&[0]).unwrap();
        for target in [0.05, 0.1] {
            let cond = conditional_rd(&joint, &d, target).unwrap();
            let wz = wyner_ziv_rd(&joint, &d, target, 3, 8, 3000, 1e-11, 7).unwrap();
            let sh = shannon_rd(&source, &d, target).unwrap();
            assert!(cond <= wz + 1e-3, "cond {cond} wz {wz}");
            assert!(wz <= sh + 1e-3, "wz {wz} shannon {sh}");
        }
    }

    #[test]
    fn conditional_rd_analytic_binary() {
        // p(x1|x2) is BSC(0.25): R(D) = h2(0.25) - h2(D)
        let joint = ProbabilityTable::dsbs(0.25).unwrap();
        let d = DistortionCriterion::hamming(2);
        for target in [0.05, 0.1, 0.2] {
            let cond = conditional_rd(&joint, &d, target).unwrap();
            let expect = binary_entropy(0.25) - binary_entropy(target);
            assert!((cond - expect).abs() < 1e-5, "cond {cond} expect {expect}");
        }
    }
}
