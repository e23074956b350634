//! One source decoded losslessly, the other under a distortion criterion:
//! sweeps the helper channel q2(z2|x2) and the reconstruction psi(x1, z2)
//! and emits (r1, r2, d) triples satisfying the three rate inequalities.

use crate::distortion::DistortionCriterion;
use crate::error::{Error, Result};
use crate::prob::{ConditionalTable, ProbabilityTable};
use crate::region::{AuxSpec, RateDistortionPoint, Region, Witness};
use crate::rng::stream_rng;
use rand::Rng;
use serde::Serialize;

/// Exact evaluation of one helper witness: rate quantities, best
/// reconstruction and its distortion.
#[derive(Debug, Clone, Serialize)]
pub struct ByEvaluation {
    pub h_x1_given_z2: f64,
    pub i_x2_z2_given_x1: f64,
    pub h_x1: f64,
    pub distortion: f64,
    pub psi: Vec<u32>,
}

pub fn evaluate_helper(
    joint: &ProbabilityTable,
    d: &DistortionCriterion,
    q2: &[f64],
    nz: usize,
) -> Result<ByEvaluation> {
    let nx1 = joint.axis_size(0);
    let nx2 = joint.axis_size(1);
    let mass = joint.mass();
    // three-way law (x1, x2, z2)
    let mut three = vec![0.0f64; nx1 * nx2 * nz];
    for x1 in 0..nx1 {
        for x2 in 0..nx2 {
            let p = mass[x1 * nx2 + x2];
            for z in 0..nz {
                three[(x1 * nx2 + x2) * nz + z] = p * q2[x2 * nz + z];
            }
        }
    }
    let table = ProbabilityTable::from_sizes(&[nx1, nx2, nz], three.clone())?;
    let h_x1_given_z2 = table.entropy(&[0, 2])? - table.entropy(&[2])?;
    let i_x2_z2_given_x1 = table.conditional_mutual_information(&[1], &[2], &[0])?;
    let h_x1 = table.entropy(&[0])?;
    // exact reconstruction psi(x1, z2) -> estimate of x2
    let ne = d.estimate_size();
    let mut psi = vec![0u32; nx1 * nz];
    let mut distortion = 0.0f64;
    for x1 in 0..nx1 {
        for z in 0..nz {
            let mut best = (0u32, f64::INFINITY);
            for e in 0..ne as u32 {
                let cost: f64 = (0..nx2)
                    .map(|x2| three[(x1 * nx2 + x2) * nz + z] * d.get(x2 as u32, e))
                    .sum();
                if cost < best.1 - 1e-15 {
                    best = (e, cost);
                }
            }
            psi[x1 * nz + z] = best.0;
            distortion += best.1;
        }
    }
    Ok(ByEvaluation { h_x1_given_z2, i_x2_z2_given_x1, h_x1, distortion, psi })
}

fn emit_witness(region: &mut Region, joint: &ProbabilityTable, nz: usize, q2: Vec<f64>, ev: ByEvaluation) -> Result<()> {
    let nx2 = joint.axis_size(1);
    let witness = Witness {
        q1: None,
        q2: Some(ConditionalTable::from_rows(nx2, nz, q2)?),
        psi: Some(ev.psi.clone()),
    };
    let wid = region.witnesses.len();
    region.witnesses.push(witness);
    // two corners of the rate polyhedron at this helper, plus midpoints
    let corner_a = (ev.h_x1_given_z2, ev.h_x1 + ev.i_x2_z2_given_x1 - ev.h_x1_given_z2);
    let corner_b = (ev.h_x1, ev.i_x2_z2_given_x1);
    for t in [0.0, 0.5, 1.0] {
        let r1 = corner_a.0 + t * (corner_b.0 - corner_a.0);
        let r2 = corner_a.1 + t * (corner_b.1 - corner_a.1);
        region.push_shared(RateDistortionPoint::triple(r1, r2, ev.distortion), wid);
    }
    Ok(())
}

fn by_iterate(
    joint: &ProbabilityTable,
    d: &DistortionCriterion,
    q2: &mut Vec<f64>,
    nz: usize,
    w: f64,
    slope: f64,
    max_iterations: usize,
    tolerance: f64,
) {
    let nx1 = joint.axis_size(0);
    let nx2 = joint.axis_size(1);
    let mass = joint.mass();
    let mut px1 = vec![0.0f64; nx1];
    let mut px2 = vec![0.0f64; nx2];
    for x1 in 0..nx1 {
        for x2 in 0..nx2 {
            px1[x1] += mass[x1 * nx2 + x2];
            px2[x2] += mass[x1 * nx2 + x2];
        }
    }
    let mut last = f64::INFINITY;
    for _ in 0..max_iterations {
        // m(z|x1), r(x1|z), psi(x1,z)
        let mut m = vec![0.0f64; nx1 * nz];
        let mut r = vec![0.0f64; nz * nx1];
        let mut pz = vec![0.0f64; nz];
        for x1 in 0..nx1 {
            for x2 in 0..nx2 {
                let p = mass[x1 * nx2 + x2];
                for z in 0..nz {
                    let v = p * q2[x2 * nz + z];
                    if px1[x1] > 0.0 {
                        m[x1 * nz + z] += v / px1[x1];
                    }
                    r[z * nx1 + x1] += v;
                    pz[z] += v;
                }
            }
        }
        for z in 0..nz {
            if pz[z] > 0.0 {
                for x1 in 0..nx1 {
                    r[z * nx1 + x1] /= pz[z];
                }
            }
        }
        let ne = d.estimate_size();
        let mut psi = vec![0u32; nx1 * nz];
        for x1 in 0..nx1 {
            for z in 0..nz {
                let mut best = (0u32, f64::INFINITY);
                for e in 0..ne as u32 {
                    let cost: f64 = (0..nx2)
                        .map(|x2| mass[x1 * nx2 + x2] * q2[x2 * nz + z] * d.get(x2 as u32, e))
                        .sum();
                    if cost < best.1 - 1e-15 {
                        best = (e, cost);
                    }
                }
                psi[x1 * nz + z] = best.0;
            }
        }
        // q2 update
        let mut next = vec![0.0f64; nx2 * nz];
        for x2 in 0..nx2 {
            if px2[x2] == 0.0 {
                for z in 0..nz {
                    next[x2 * nz + z] = 1.0 / nz as f64;
                }
                continue;
            }
            let mut a = vec![0.0f64; nz];
            for z in 0..nz {
                let mut acc = 0.0f64;
                for x1 in 0..nx1 {
                    let w_x1 = mass[x1 * nx2 + x2] / px2[x2];
                    if w_x1 == 0.0 {
                        continue;
                    }
                    let mz = m[x1 * nz + z].max(1e-300);
                    let rv = r[z * nx1 + x1].max(1e-300);
                    acc += w_x1
                        * ((1.0 - w) * mz.log2() + w * rv.log2()
                            - slope * d.get(x2 as u32, psi[x1 * nz + z]));
                }
                a[z] = acc;
            }
            if w >= 1.0 - 1e-9 {
                // pure conditional-entropy objective: the minimizer is a vertex
                let mut best = 0usize;
                for z in 1..nz {
                    if a[z] > a[best] + 1e-15 {
                        best = z;
                    }
                }
                next[x2 * nz + best] = 1.0;
            } else {
                let scale = 1.0 / (1.0 - w);
                let peak = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let mut norm = 0.0f64;
                for z in 0..nz {
                    let v = (2.0f64).powf((a[z] - peak) * scale);
                    next[x2 * nz + z] = v;
                    norm += v;
                }
                for z in 0..nz {
                    next[x2 * nz + z] /= norm;
                }
            }
        }
        let delta: f64 = next.iter().zip(q2.iter()).map(|(a, b)| (a - b).abs()).sum();
        *q2 = next;
        if delta < tolerance || (last - delta).abs() < tolerance * 1e-3 {
            break;
        }
        last = delta;
    }
}

/// Sweep helpers and reconstructions; returns the dominance-pruned
/// (r1, r2, d) cloud. Identity and constant helpers are always included.
pub fn berger_yeung_region(
    joint: &ProbabilityTable,
    d: &DistortionCriterion,
    aux: &AuxSpec,
    seed: u64,
) -> Result<Region> {
    if joint.num_axes() != 2 {
        return Err(Error::DimensionMismatch("berger_yeung_region expects a two-axis joint".into()));
    }
    if d.target_size() != joint.axis_size(1) {
        return Err(Error::DimensionMismatch("distortion must target the second source".into()));
    }
    aux.validate()?;
    let nx2 = joint.axis_size(1);
    let nz = aux.card_z2.max(nx2);
    let mut region = Region::new("bergerYeung", 1);

    // structured witnesses
    let mut identity = vec![0.0f64; nx2 * nz];
    for x2 in 0..nx2 {
        identity[x2 * nz + x2] = 1.0;
    }
    let ev = evaluate_helper(joint, d, &identity, nz)?;
    emit_witness(&mut region, joint, nz, identity, ev)?;
    let mut constant = vec![0.0f64; nx2 * nz];
    for x2 in 0..nx2 {
        constant[x2 * nz] = 1.0;
    }
    let ev = evaluate_helper(joint, d, &constant, nz)?;
    emit_witness(&mut region, joint, nz, constant, ev)?;

    let slopes: Vec<f64> = (0..14).map(|i| 0.2 * 1.5f64.powi(i)).collect();
    for (wi, w) in [0.0, 0.35, 0.7, 1.0].iter().enumerate() {
        for (si, &slope) in slopes.iter().enumerate() {
            for rstart in 0..aux.restarts.max(1).min(8) {
                let mut q2 = if rstart == 0 {
                    let mut q = vec![0.0f64; nx2 * nz];
                    for x2 in 0..nx2 {
                        for z in 0..nz {
                            q[x2 * nz + z] = if z == x2 { 0.8 } else { 0.2 / (nz - 1) as f64 };
                        }
                    }
                    q
                } else {
                    let mut rng =
                        stream_rng(seed, ((wi as u64) << 48) | ((si as u64) << 16) | rstart as u64);
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
                    q
                };
                by_iterate(joint, d, &mut q2, nz, *w, slope, aux.max_iterations, aux.tolerance);
                let ev = evaluate_helper(joint, d, &q2, nz)?;
                emit_witness(&mut region, joint, nz, q2, ev)?;
            }
        }
    }
    region.prune_dominated();
    Ok(region)
}

/// Least r1 + r2 among triples with distortion at or below the budget.
pub fn min_sum_rate_at_distortion(region: &Region, budget: f64) -> Result<f64> {
    let mut best = f64::INFINITY;
    for p in &region.points {
        let d = p.point.d.ok_or(Error::DimensionMismatch("triple region required".into()))?;
        let r2 = p.point.r2.ok_or(Error::DimensionMismatch("triple region required".into()))?;
        if d <= budget + 1e-12 {
            best = best.min(p.point.r1 + r2);
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
    fn lossless_sum_rate_is_joint_entropy() {
        let joint = ProbabilityTable::dsbs(0.2).unwrap();
        let d = DistortionCriterion::hamming(2);
        let aux = AuxSpec { restarts: 4, ..AuxSpec::for_source(2, 2) };
        let region = berger_yeung_region(&joint, &d, &aux, 3).unwrap();
        let sum = min_sum_rate_at_distortion(&region, 0.0).unwrap();
        let h_joint = 1.0 + binary_entropy(0.2);
        assert!((sum - h_joint).abs() < 1e-3, "sum {sum} vs H(X1,X2) {h_joint}");
    }

    #[test]
    fn identity_helper_corner_present() {
        let joint = ProbabilityTable::dsbs(0.2).unwrap();
        let d = DistortionCriterion::hamming(2);
        let aux = AuxSpec { restarts: 2, ..AuxSpec::for_source(2, 2) };
        let region = berger_yeung_region(&joint, &d, &aux, 3).unwrap();
        let h12 = binary_entropy(0.2);
        // corner (H(X1|X2), H(X1,X2) - H(X1|X2), 0) from the identity helper
        let q = RateDistortionPoint::triple(h12, 1.0 + h12 - h12, 0.0);
        assert!(region.contains(&q, 1e-9));
        // corner (H(X1), H(X2|X1), 0)
        let q = RateDistortionPoint::triple(1.0, h12, 0.0);
        assert!(region.contains(&q, 1e-9));
    }

    #[test]
    fn emitted_triples_satisfy_their_inequalities() {
        let mut rng = crate::rng::stream_rng(8, 0);
        let raw: Vec<f64> = (0..4).map(|_| rand::Rng::gen::<f64>(&mut rng) + 0.05).collect();
        let sum: f64 = raw.iter().sum();
        let joint =
            ProbabilityTable::from_sizes(&[2, 2], raw.iter().map(|v| v / sum).collect()).unwrap();
        let d = DistortionCriterion::hamming(2);
        let aux = AuxSpec { restarts: 3, ..AuxSpec::for_source(2, 2) };
        let region = berger_yeung_region(&joint, &d, &aux, 9).unwrap();
        for p in &region.points {
            let w = &region.witnesses[p.witness_id];
            let q2 = w.q2.as_ref().unwrap();
            let ev = evaluate_helper(&joint, &d, q2.rows(), q2.out_cells()).unwrap();
            let r1 = p.point.r1;
            let r2 = p.point.r2.unwrap();
            let dd = p.point.d.unwrap();
            assert!(ev.h_x1_given_z2 <= r1 + 1e-9);
            assert!(ev.i_x2_z2_given_x1 <= r2 + 1e-9);
            assert!(ev.h_x1 + ev.i_x2_z2_given_x1 <= r1 + r2 + 1e-9);
            assert!(ev.distortion <= dd + 1e-9);
        }
    }
}
