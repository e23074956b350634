//! Lossless coding of one source with rate-limited side information from
//! the other: sweeps the helper channel q2(z2|x2) to trace achievable
//! (R1, R2) = (H(X1|Z2), I(X2;Z2)) pairs.
//!
//! The whole nontrivial part of the frontier is exposed by a narrow window
//! of the tradeoff parameter, so the sweep refines adaptively wherever
//! neighbouring converged points leave a gap.

use crate::error::{Error, Result};
use crate::prob::{ConditionalTable, ProbabilityTable};
use crate::region::{AuxSpec, RateDistortionPoint, Region, Witness};
use crate::rng::stream_rng;
use rand::Rng;

/// Exact (H(X1|Z2), I(X2;Z2)) for a helper channel.
pub fn side_info_rates(joint: &ProbabilityTable, q2: &[f64], nz: usize) -> Result<(f64, f64)> {
    let nx1 = joint.axis_size(0);
    let nx2 = joint.axis_size(1);
    let mass = joint.mass();
    let mut pz = vec![0.0f64; nz];
    let mut px2 = vec![0.0f64; nx2];
    let mut px1z = vec![0.0f64; nx1 * nz];
    for x1 in 0..nx1 {
        for x2 in 0..nx2 {
            let p = mass[x1 * nx2 + x2];
            px2[x2] += p;
            for z in 0..nz {
                let w = p * q2[x2 * nz + z];
                pz[z] += w;
                px1z[x1 * nz + z] += w;
            }
        }
    }
    let mut h = 0.0f64;
    for z in 0..nz {
        if pz[z] == 0.0 {
            continue;
        }
        for x1 in 0..nx1 {
            let w = px1z[x1 * nz + z];
            if w > 0.0 {
                h -= w * (w / pz[z]).log2();
            }
        }
    }
    let mut hz = 0.0f64;
    for z in 0..nz {
        if pz[z] > 0.0 {
            hz -= pz[z] * pz[z].log2();
        }
    }
    let mut hz_cond = 0.0f64;
    for x2 in 0..nx2 {
        if px2[x2] == 0.0 {
            continue;
        }
        for z in 0..nz {
            let q = q2[x2 * nz + z];
            if q > 0.0 {
                hz_cond -= px2[x2] * q * q.log2();
            }
        }
    }
    Ok((h.max(0.0), (hz - hz_cond).max(0.0)))
}

fn ib_iterate(
    joint: &ProbabilityTable,
    q2: &mut Vec<f64>,
    nz: usize,
    beta: f64,
    max_iterations: usize,
    tolerance: f64,
) {
    let nx1 = joint.axis_size(0);
    let nx2 = joint.axis_size(1);
    let mass = joint.mass();
    let mut px2 = vec![0.0f64; nx2];
    for x1 in 0..nx1 {
        for x2 in 0..nx2 {
            px2[x2] += mass[x1 * nx2 + x2];
        }
    }
    let mut cond = vec![0.0f64; nx2 * nx1];
    for x2 in 0..nx2 {
        if px2[x2] == 0.0 {
            continue;
        }
        for x1 in 0..nx1 {
            cond[x2 * nx1 + x1] = mass[x1 * nx2 + x2] / px2[x2];
        }
    }
    for _ in 0..max_iterations {
        let mut w = vec![0.0f64; nz];
        let mut r = vec![0.0f64; nz * nx1];
        for x2 in 0..nx2 {
            for z in 0..nz {
                let v = px2[x2] * q2[x2 * nz + z];
                w[z] += v;
                for x1 in 0..nx1 {
                    r[z * nx1 + x1] += v * cond[x2 * nx1 + x1];
                }
            }
        }
        for z in 0..nz {
            if w[z] > 0.0 {
                for x1 in 0..nx1 {
                    r[z * nx1 + x1] /= w[z];
                }
            }
        }
        let mut next = vec![0.0f64; nx2 * nz];
        let mut delta = 0.0f64;
        for x2 in 0..nx2 {
            let mut log_row = vec![f64::NEG_INFINITY; nz];
            for z in 0..nz {
                if w[z] == 0.0 {
                    continue;
                }
                let mut kl = 0.0f64;
                for x1 in 0..nx1 {
                    let p = cond[x2 * nx1 + x1];
                    if p > 0.0 {
                        kl += p * (p / r[z * nx1 + x1].max(1e-300)).log2();
                    }
                }
                log_row[z] = w[z].log2() - beta * kl;
            }
            let peak = log_row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut norm = 0.0f64;
            for z in 0..nz {
                let v = if log_row[z].is_finite() { (2.0f64).powf(log_row[z] - peak) } else { 0.0 };
                next[x2 * nz + z] = v;
                norm += v;
            }
            for z in 0..nz {
                next[x2 * nz + z] /= norm;
                delta += (next[x2 * nz + z] - q2[x2 * nz + z]).abs();
            }
        }
        *q2 = next;
        if delta < tolerance {
            break;
        }
    }
}

struct Sweep<'a> {
    joint: &'a ProbabilityTable,
    nz: usize,
    aux: &'a AuxSpec,
    seed: u64,
    counter: u64,
}

impl<'a> Sweep<'a> {
    /// Best helper at one tradeoff parameter over a few deterministic and
    /// seeded starts; score is r2 + beta * r1 (a supporting line on the
    /// lower-left frontier).
    fn run(&mut self, beta: f64) -> Result<(f64, f64, Vec<f64>)> {
        let nx2 = self.joint.axis_size(1);
        let nz = self.nz;
        let mut starts: Vec<Vec<f64>> = Vec::new();
        // helper-noise ladder: BSC-like rows at several noise levels
        for a in [0.05, 0.2, 0.35] {
            let mut q = vec![0.0f64; nx2 * nz];
            for x2 in 0..nx2 {
                for z in 0..nz {
                    q[x2 * nz + z] = if z == x2 % nz {
                        1.0 - a
                    } else {
                        a / (nz - 1).max(1) as f64
                    };
                }
            }
            starts.push(q);
        }
        for _ in 0..self.aux.restarts.min(4) {
            self.counter += 1;
            let mut rng = stream_rng(self.seed, self.counter);
            let mut q = vec![0.0f64; nx2 * nz];
            for x2 in 0..nx2 {
                let mut norm = 0.0;
                for z in 0..nz {
                    let v = -(rng.gen::<f64>()).ln();
                    q[x2 * nz + z] = v;
                    norm += v;
                }
                for z in 0..nz {
                    q[x2 * nz + z] /= norm;
                }
            }
            starts.push(q);
        }
        let mut best: Option<(f64, f64, f64, Vec<f64>)> = None;
        for mut q in starts {
            ib_iterate(self.joint, &mut q, nz, beta, self.aux.max_iterations, self.aux.tolerance);
            let (r1, r2) = side_info_rates(self.joint, &q, nz)?;
            let score = r2 + beta * r1;
            if best.as_ref().map_or(true, |b| score < b.0 - 1e-15) {
                best = Some((score, r1, r2, q));
            }
        }
        let (_, r1, r2, q) = best.unwrap();
        Ok((r1, r2, q))
    }
}

/// Sweep the helper channel adaptively and return the dominance-pruned
/// (r1, r2) cloud. The exact endpoint witnesses (identity and constant
/// helpers) are always included.
pub fn side_info_region(joint: &ProbabilityTable, aux: &AuxSpec, seed: u64) -> Result<Region> {
    if joint.num_axes() != 2 {
        return Err(Error::DimensionMismatch("side_info_region expects a two-axis joint".into()));
    }
    aux.validate()?;
    let nx2 = joint.axis_size(1);
    let nz = aux.card_z2.max(nx2);
    let mut region = Region::new("sideInfo", 1);

    let add = |region: &mut Region, q2: Vec<f64>| -> Result<()> {
        let (r1, r2) = side_info_rates(joint, &q2, nz)?;
        let witness =
            Witness { q1: None, q2: Some(ConditionalTable::from_rows(nx2, nz, q2)?), psi: None };
        region.push(RateDistortionPoint::rate_pair(r1, r2), witness);
        Ok(())
    };

    // exact endpoints
    let mut identity = vec![0.0f64; nx2 * nz];
    for x2 in 0..nx2 {
        identity[x2 * nz + x2] = 1.0;
    }
    add(&mut region, identity)?;
    let mut constant = vec![0.0f64; nx2 * nz];
    for x2 in 0..nx2 {
        constant[x2 * nz] = 1.0;
    }
    add(&mut region, constant)?;

    let mut sweep = Sweep { joint, nz, aux, seed, counter: 0 };
    let mut entries: Vec<(f64, f64, f64, Vec<f64>)> = Vec::new();
    for i in 0..18 {
        let beta = 0.3 * 1.45f64.powi(i);
        let (r1, r2, q) = sweep.run(beta)?;
        entries.push((beta, r1, r2, q));
    }
    // refine wherever adjacent tradeoff points leave a visible gap
    let mut budget = 90usize;
    loop {
        entries.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut split_at: Option<f64> = None;
        for w in entries.windows(2) {
            let gap = (w[0].2 - w[1].2).abs().max((w[0].1 - w[1].1).abs());
            if gap > 0.02 && (w[1].0 - w[0].0) > 1e-6 {
                split_at = Some(0.5 * (w[0].0 + w[1].0));
                break;
            }
        }
        match (split_at, budget) {
            (Some(beta), b) if b > 0 => {
                let (r1, r2, q) = sweep.run(beta)?;
                entries.push((beta, r1, r2, q));
                budget -= 1;
            }
            _ => break,
        }
    }
    for (_, _, _, q) in entries {
        add(&mut region, q)?;
    }
    region.prune_dominated();
    Ok(region)
}

/// Smallest r1 subject to r2 at most the budget, by bisection on the
/// tradeoff parameter (the frontier is convex, so r2 is monotone in it).
pub fn side_info_min_r1(
    joint: &ProbabilityTable,
    aux: &AuxSpec,
    r2_budget: f64,
    seed: u64,
) -> Result<f64> {
    aux.validate()?;
    let nx2 = joint.axis_size(1);
    let nz = aux.card_z2.max(nx2);
    let h_x2 = joint.entropy(&[1])?;
    if r2_budget >= h_x2 {
        // full-rate helper: identity is optimal
        return Ok(joint.entropy(&[0, 1])? - joint.entropy(&[1])?);
    }
    if r2_budget <= 0.0 {
        return joint.entropy(&[0]);
    }
    let mut sweep = Sweep { joint, nz, aux, seed, counter: 1 << 32 };
    let mut lo = 1e-3f64;
    let mut hi = 1.0f64;
    let mut hi_pt = sweep.run(hi)?;
    let mut guard = 0;
    while hi_pt.1 < r2_budget && guard < 40 {
        hi *= 1.8;
        hi_pt = sweep.run(hi)?;
        guard += 1;
    }
    let mut bracket: Option<((f64, f64), (f64, f64))> = None;
    let mut lo_pt = sweep.run(lo)?;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let pt = sweep.run(mid)?;
        if (pt.1 - r2_budget).abs() < 1e-9 {
            return Ok(pt.0);
        }
        if pt.1 < r2_budget {
            lo = mid;
            lo_pt = pt;
        } else {
            hi = mid;
            hi_pt = pt;
        }
        bracket = Some(((lo_pt.0, lo_pt.1), (hi_pt.0, hi_pt.1)));
        if hi - lo < 1e-12 {
            break;
        }
    }
    // interpolate across the final bracket (exact on linear segments,
    // negligible error on a strictly convex frontier)
    if let Some(((r1a, r2a), (r1b, r2b))) = bracket {
        if (r2b - r2a).abs() > 1e-15 {
            let t = (r2_budget - r2a) / (r2b - r2a);
            return Ok(r1a + t * (r1b - r1a));
        }
        return Ok(r1a.min(r1b));
    }
    Ok(hi_pt.0)
}

/// Cloud query: least r1 among emitted points with r2 at most the budget.
pub fn min_r1_at_r2_budget(region: &Region, r2_budget: f64) -> Result<f64> {
    let mut best = f64::INFINITY;
    for p in &region.points {
        let r2 = p.point.r2.ok_or(Error::DimensionMismatch("rate-pair region required".into()))?;
        if r2 <= r2_budget + 1e-12 && p.point.r1 < best {
            best = p.point.r1;
        }
    }
    if best.is_infinite() {
        return Err(Error::EmptyRegion);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::binary_entropy;

    #[test]
    fn endpoints_present_exactly() {
        let joint = ProbabilityTable::dsbs(0.1).unwrap();
        let aux = AuxSpec { restarts: 2, ..AuxSpec::for_source(2, 2) };
        let region = side_info_region(&joint, &aux, 3).unwrap();
        let full = RateDistortionPoint::rate_pair(binary_entropy(0.1), 1.0);
        let none = RateDistortionPoint::rate_pair(1.0, 0.0);
        assert!(region.contains(&full, 1e-6), "missing full-side-information endpoint");
        assert!(region.contains(&none, 1e-6), "missing zero-rate endpoint");
    }

    #[test]
    fn midpoint_matches_bsc_grid_oracle() {
        // for a doubly symmetric binary source the optimal helper is a BSC,
        // so a fine scan over its crossover is an exact reference
        let joint = ProbabilityTable::dsbs(0.1).unwrap();
        let aux = AuxSpec { card_z2: 2, restarts: 2, ..AuxSpec::for_source(2, 2) };
        let budget = 0.5;
        let computed = side_info_min_r1(&joint, &aux, budget, 11).unwrap();

        let mut oracle = f64::INFINITY;
        let steps = 200_000;
        for i in 0..=steps {
            let a = i as f64 / steps as f64 * 0.5; // helper crossover
            let r2 = 1.0 - binary_entropy(a);
            if r2 > budget {
                continue;
            }
            let cascade = 0.1 * (1.0 - a) + 0.9 * a;
            let r1 = binary_entropy(cascade);
            if r1 < oracle {
                oracle = r1;
            }
        }
        assert!((computed - oracle).abs() < 1e-3, "computed {computed} oracle {oracle}");
    }

    #[test]
    fn frontier_has_no_large_gaps() {
        let joint = ProbabilityTable::dsbs(0.1).unwrap();
        let aux = AuxSpec { card_z2: 2, restarts: 2, ..AuxSpec::for_source(2, 2) };
        let region = side_info_region(&joint, &aux, 7).unwrap();
        let mut pts: Vec<f64> = region.points.iter().map(|p| p.point.r2.unwrap()).collect();
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let max_gap = pts.windows(2).map(|w| w[1] - w[0]).fold(0.0f64, f64::max);
        assert!(max_gap < 0.1, "largest r2 gap {max_gap}");
    }

    #[test]
    fn emitted_points_reverify_from_witnesses() {
        let joint = ProbabilityTable::dsbs(0.2).unwrap();
        let aux = AuxSpec { restarts: 2, ..AuxSpec::for_source(2, 2) };
        let region = side_info_region(&joint, &aux, 5).unwrap();
        for p in &region.points {
            let w = &region.witnesses[p.witness_id];
            let q2 = w.q2.as_ref().unwrap();
            let (r1, r2) = side_info_rates(&joint, q2.rows(), q2.out_cells()).unwrap();
            assert!((r1 - p.point.r1).abs() < 1e-12);
            assert!((r2 - p.point.r2.unwrap()).abs() < 1e-12);
        }
    }
}
