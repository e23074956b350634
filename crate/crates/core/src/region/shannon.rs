//! One-terminal rate-distortion function by alternating minimization over
//! the test channel, traced along the distortion slope and refined by
//! bisection at the requested distortion.

use crate::distortion::DistortionCriterion;
use crate::error::{Error, Result};
use crate::prob::ProbabilityTable;
use serde::Serialize;

/// One converged operating point of the parametric curve.
#[derive(Debug, Clone, Serialize)]
pub struct RdOperatingPoint {
    pub slope: f64,
    pub rate: f64,
    pub distortion: f64,
    /// q(z|x), row-major over (x, z).
    pub channel: Vec<f64>,
}

/// Alternating minimization of I(X;Z) + slope * E d at a fixed slope.
/// `support` masks forbidden (x,z) pairs; `None` allows everything.
pub(crate) fn ba_fixed_slope(
    source: &[f64],
    d: &DistortionCriterion,
    slope: f64,
    support: Option<&[bool]>,
    max_iterations: usize,
    tolerance: f64,
) -> RdOperatingPoint {
    let nx = d.target_size();
    let nz = d.estimate_size();
    let weight = |x: usize, z: usize| -> f64 {
        if let Some(mask) = support {
            if !mask[x * nz + z] {
                return 0.0;
            }
        }
        (2.0f64).powf(-slope * d.get(x as u32, z as u32))
    };
    let mut qz = vec![1.0 / nz as f64; nz];
    let mut channel = vec![0.0f64; nx * nz];
    for _ in 0..max_iterations {
        // channel update: q(z|x) proportional to q(z) w(x,z)
        for x in 0..nx {
            let mut norm = 0.0;
            for z in 0..nz {
                let v = qz[z] * weight(x, z);
                channel[x * nz + z] = v;
                norm += v;
            }
            if norm > 0.0 {
                for z in 0..nz {
                    channel[x * nz + z] /= norm;
                }
            }
        }
        // output update: q(z) = sum_x p(x) q(z|x)
        let mut new_qz = vec![0.0f64; nz];
        for x in 0..nx {
            for z in 0..nz {
                new_qz[z] += source[x] * channel[x * nz + z];
            }
        }
        let delta: f64 = new_qz.iter().zip(&qz).map(|(a, b)| (a - b).abs()).sum();
        qz = new_qz;
        if delta < tolerance {
            break;
        }
    }
    // exact evaluation at the converged channel
    let mut rate = 0.0;
    let mut dist = 0.0;
    for x in 0..nx {
        for z in 0..nz {
            let joint = source[x] * channel[x * nz + z];
            if joint > 0.0 {
                rate += joint * (channel[x * nz + z] / qz[z]).log2();
                dist += joint * d.get(x as u32, z as u32);
            }
        }
    }
    RdOperatingPoint { slope, rate: rate.max(0.0), distortion: dist, channel }
}

/// Minimum achievable distortion (every source letter mapped to its best
/// estimate) and the zero-rate distortion (best single estimate).
pub(crate) fn distortion_range(source: &[f64], d: &DistortionCriterion) -> (f64, f64) {
    let nx = d.target_size();
    let nz = d.estimate_size();
    let d_min: f64 = (0..nx)
        .map(|x| {
            source[x]
                * (0..nz)
                    .map(|z| d.get(x as u32, z as u32))
                    .fold(f64::INFINITY, f64::min)
        })
        .sum();
    let d_zero_rate: f64 = (0..nz)
        .map(|z| (0..nx).map(|x| source[x] * d.get(x as u32, z as u32)).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    (d_min, d_zero_rate)
}

/// R(D): min I(X;Z) over test channels with E d <= D.
///
/// Returns 0 once D reaches the best constant-estimate distortion. Targets
/// below the minimum achievable distortion clamp to the left end of the
/// curve (for matched alphabets under Hamming that end is H(X)).
pub fn shannon_rd(source: &ProbabilityTable, d: &DistortionCriterion, target: f64) -> Result<f64> {
    if source.num_axes() != 1 {
        return Err(Error::DimensionMismatch("shannon_rd expects a one-axis source".into()));
    }
    if source.axis_size(0) != d.target_size() {
        return Err(Error::DimensionMismatch("distortion rows must match the source alphabet".into()));
    }
    if target < 0.0 {
        return Err(Error::InvalidParameter("distortion target must be nonnegative".into()));
    }
    let p = source.mass();
    let (d_min, d_zero) = distortion_range(p, d);
    if target >= d_zero - 1e-15 {
        return Ok(0.0);
    }
    if target <= d_min + 1e-15 {
        // constrained-support channel: only minimum-distortion estimates
        let nx = d.target_size();
        let nz = d.estimate_size();
        let mut mask = vec![false; nx * nz];
        for x in 0..nx {
            let row_min = (0..nz)
                .map(|z| d.get(x as u32, z as u32))
                .fold(f64::INFINITY, f64::min);
            for z in 0..nz {
                mask[x * nz + z] = d.get(x as u32, z as u32) <= row_min + 1e-15;
            }
        }
        let point = ba_fixed_slope(p, d, 0.0, Some(&mask), 20_000, 1e-14);
        return Ok(point.rate);
    }
    // bracket the slope: distortion decreases as the slope grows
    let mut lo = 0.0f64; // gives d_zero
    let mut hi = 1.0f64;
    let eval = |s: f64| ba_fixed_slope(p, d, s, None, 20_000, 1e-14);
    let mut hi_pt = eval(hi);
    let mut guard = 0;
    while hi_pt.distortion > target && guard < 60 {
        hi *= 2.0;
        hi_pt = eval(hi);
        guard += 1;
    }
    let mut points: Vec<(f64, f64)> = vec![(d_zero, 0.0), (hi_pt.distortion, hi_pt.rate)];
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let pt = eval(mid);
        points.push((pt.distortion, pt.rate));
        if pt.distortion > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) < 1e-12 {
            break;
        }
    }
    super::rate_at_target(&points, target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::binary_entropy;

    fn uniform_binary() -> ProbabilityTable {
        ProbabilityTable::from_sizes(&[2], vec![0.5, 0.5]).unwrap()
    }

    #[test]
    fn binary_hamming_matches_analytic() {
        let p = uniform_binary();
        let d = DistortionCriterion::hamming(2);
        for target in [0.05, 0.1, 0.25] {
            let rate = shannon_rd(&p, &d, target).unwrap();
            let expect = 1.0 - binary_entropy(target);
            assert!((rate - expect).abs() < 1e-5, "target {target}: {rate} vs {expect}");
        }
    }

    #[test]
    fn lossless_endpoint_is_source_entropy() {
        let p = ProbabilityTable::from_sizes(&[2], vec![0.3, 0.7]).unwrap();
        let d = DistortionCriterion::hamming(2);
        let rate = shannon_rd(&p, &d, 0.0).unwrap();
        assert!((rate - binary_entropy(0.3)).abs() < 1e-6);
    }

    #[test]
    fn zero_rate_beyond_half_for_uniform_hamming() {
        let p = uniform_binary();
        let d = DistortionCriterion::hamming(2);
        assert_eq!(shannon_rd(&p, &d, 0.5).unwrap(), 0.0);
        assert_eq!(shannon_rd(&p, &d, 0.7).unwrap(), 0.0);
    }

    #[test]
    fn matches_grid_oracle_on_binary() {
        // independent oracle: brute force over q(z|x) parametrized by the
        // two crossover probabilities, fine grid
        let p = uniform_binary();
        let d = DistortionCriterion::hamming(2);
        let target = 0.1;
        let mut best = f64::INFINITY;
        let steps = 1000;
        for ia in 0..=steps {
            for ib in 0..=steps {
                let a = ia as f64 / steps as f64; // q(1|0)
                let b = ib as f64 / steps as f64; // q(0|1)
                let dist = 0.5 * a + 0.5 * b;
                if dist > target {
                    continue;
                }
                let q1 = 0.5 * a + 0.5 * (1.0 - b); // P(Z=1)
                // I = H(Z) - H(Z|X)
                let mi = binary_entropy(q1) - 0.5 * binary_entropy(a) - 0.5 * binary_entropy(b);
                if mi < best {
                    best = mi;
                }
            }
        }
        let rate = shannon_rd(&p, &d, target).unwrap();
        assert!((rate - best).abs() < 1e-4, "rate {rate} oracle {best}");
    }

    #[test]
    fn monotone_in_distortion() {
        let p = ProbabilityTable::from_sizes(&[2], vec![0.35, 0.65]).unwrap();
        let d = DistortionCriterion::hamming(2);
        let mut last = f64::INFINITY;
        for target in [0.0, 0.05, 0.1, 0.15, 0.2, 0.3, 0.4] {
            let rate = shannon_rd(&p, &d, target).unwrap();
            assert!(rate <= last + 1e-9, "rate rose at {target}");
            last = rate;
        }
    }
}
