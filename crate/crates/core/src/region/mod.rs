//! Numerical computation of achievable rate and rate-distortion regions:
//! the classical one-terminal function, side-information and
//! lossless/lossy two-terminal regions, and the n-th order inner bounds of
//! the joint-distortion and partial-side-information problems.
//!
//! Regions are dominance-closed point clouds: a query point belongs to the
//! region when some emitted point is componentwise below it. Every emitted
//! point keeps its optimizing witness so the defining inequalities can be
//! re-verified exactly.

pub mod berger_yeung;
pub mod inner;
pub mod shannon;
pub mod side_info;
pub mod wyner_ziv;

use crate::error::{Error, Result};
use crate::prob::ConditionalTable;
use serde::Serialize;

/// A point of a rate(-distortion) region. `r2` is absent for one-terminal
/// problems, `d` for lossless ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateDistortionPoint {
    pub r1: f64,
    pub r2: Option<f64>,
    pub d: Option<f64>,
}

impl RateDistortionPoint {
    pub fn rate_pair(r1: f64, r2: f64) -> Self {
        Self { r1, r2: Some(r2), d: None }
    }

    pub fn rate_distortion(r1: f64, d: f64) -> Self {
        Self { r1, r2: None, d: Some(d) }
    }

    pub fn triple(r1: f64, r2: f64, d: f64) -> Self {
        Self { r1, r2: Some(r2), d: Some(d) }
    }

    pub fn coords(&self) -> Vec<f64> {
        let mut v = vec![self.r1];
        if let Some(r2) = self.r2 {
            v.push(r2);
        }
        if let Some(d) = self.d {
            v.push(d);
        }
        v
    }

    pub fn dim(&self) -> usize {
        1 + self.r2.is_some() as usize + self.d.is_some() as usize
    }
}

/// The conditional tables (and reconstruction description) that realized a
/// region point.
#[derive(Debug, Clone, Serialize, Default)]
pub struct Witness {
    pub q1: Option<ConditionalTable>,
    pub q2: Option<ConditionalTable>,
    /// Flat reconstruction table, when the problem has one.
    pub psi: Option<Vec<u32>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegionPoint {
    pub point: RateDistortionPoint,
    pub witness_id: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegionMeta {
    pub problem: String,
    pub order: usize,
}

/// Dominance-closed point cloud with retained witnesses.
#[derive(Debug, Clone, Serialize)]
pub struct Region {
    pub points: Vec<RegionPoint>,
    pub witnesses: Vec<Witness>,
    pub meta: RegionMeta,
}

impl Region {
    pub fn new(problem: impl Into<String>, order: usize) -> Self {
        Self {
            points: Vec::new(),
            witnesses: Vec::new(),
            meta: RegionMeta { problem: problem.into(), order },
        }
    }

    pub fn push(&mut self, point: RateDistortionPoint, witness: Witness) {
        let witness_id = self.witnesses.len();
        self.witnesses.push(witness);
        self.points.push(RegionPoint { point, witness_id });
    }

    pub fn push_shared(&mut self, point: RateDistortionPoint, witness_id: usize) {
        self.points.push(RegionPoint { point, witness_id });
    }

    pub fn dim(&self) -> Result<usize> {
        let first = self.points.first().ok_or(Error::EmptyRegion)?;
        Ok(first.point.dim())
    }

    /// Membership under dominance closure: some emitted point lies
    /// componentwise at or below the query, within tol.
    pub fn contains(&self, query: &RateDistortionPoint, tol: f64) -> bool {
        let q = query.coords();
        self.points.iter().any(|p| {
            let c = p.point.coords();
            c.len() == q.len() && c.iter().zip(&q).all(|(a, b)| *a <= *b + tol)
        })
    }

    /// Drop points dominated by another emitted point (keeps the minimal
    /// frontier; membership semantics unchanged).
    pub fn prune_dominated(&mut self) {
        let pts = self.points.clone();
        self.points.retain(|p| {
            let c = p.point.coords();
            !pts.iter().any(|o| {
                if std::ptr::eq(o, p) {
                    return false;
                }
                let oc = o.point.coords();
                let le = oc.iter().zip(&c).all(|(a, b)| a <= b);
                let lt = oc.iter().zip(&c).any(|(a, b)| a < b);
                le && lt && oc != c
            })
        });
        // drop exact duplicates, keeping the first occurrence
        let mut seen: Vec<Vec<u64>> = Vec::new();
        self.points.retain(|p| {
            let key: Vec<u64> = p.point.coords().iter().map(|v| v.to_bits()).collect();
            if seen.contains(&key) {
                false
            } else {
                seen.push(key);
                true
            }
        });
    }
}

/// Result of a containment query between two regions.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ContainmentReport {
    pub contained: bool,
    pub worst_violation: f64,
}

/// Every inner point must be dominated by some outer point within tol.
/// The violation of a query point is the smallest over outer points of the
/// largest positive componentwise excess.
pub fn check_containment(inner: &Region, outer: &Region, tol: f64) -> Result<ContainmentReport> {
    let di = inner.dim()?;
    let do_ = outer.dim()?;
    if di != do_ {
        return Err(Error::DimensionMismatch(format!(
            "inner region has dimension {di}, outer {do_}"
        )));
    }
    let mut worst = 0.0f64;
    for p in &inner.points {
        let q = p.point.coords();
        let violation = outer
            .points
            .iter()
            .map(|o| {
                o.point
                    .coords()
                    .iter()
                    .zip(&q)
                    .map(|(a, b)| (a - b).max(0.0))
                    .fold(0.0f64, f64::max)
            })
            .fold(f64::INFINITY, f64::min);
        if violation > worst {
            worst = violation;
        }
    }
    Ok(ContainmentReport { contained: worst <= tol, worst_violation: worst })
}

/// A supporting hyperplane of the lower hull: {x : normal . x = offset}.
#[derive(Debug, Clone, Serialize)]
pub struct SupportingPlane {
    pub normal: Vec<f64>,
    pub offset: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HullReport {
    /// Indices into the region's point list that are hull corners.
    pub corner_indices: Vec<usize>,
    pub corners: Vec<RateDistortionPoint>,
    pub facets: Vec<SupportingPlane>,
}

fn hull_directions(dim: usize) -> Vec<Vec<f64>> {
    match dim {
        1 => vec![vec![1.0]],
        2 => {
            let n = 181;
            (0..n)
                .map(|i| {
                    let theta = (i as f64 + 0.5) / n as f64 * std::f64::consts::FRAC_PI_2;
                    vec![theta.cos(), theta.sin()]
                })
                .collect()
        }
        _ => {
            // deterministic grid over the positive octant of the sphere
            let steps = 24;
            let mut dirs = Vec::new();
            for i in 0..=steps {
                for j in 0..=steps {
                    let phi = (i as f64 + 0.5) / (steps + 1) as f64 * std::f64::consts::FRAC_PI_2;
                    let theta = (j as f64 + 0.5) / (steps + 1) as f64 * std::f64::consts::FRAC_PI_2;
                    dirs.push(vec![
                        phi.sin() * theta.cos(),
                        phi.sin() * theta.sin(),
                        phi.cos(),
                    ]);
                }
            }
            dirs
        }
    }
}

/// Lower-hull vertices and supporting hyperplanes of a dominance-closed
/// cloud, found by minimizing over a deterministic family of nonnegative
/// directions. For a dominance-closed set these are exactly the informative
/// facets; directions outside the nonnegative orthant are unbounded.
pub fn hull_and_corners(region: &Region) -> Result<HullReport> {
    let dim = region.dim()?;
    let dirs = hull_directions(dim);
    let mut corner_indices: Vec<usize> = Vec::new();
    let mut facets = Vec::new();
    for w in dirs {
        let mut best = 0usize;
        let mut best_val = f64::INFINITY;
        for (i, p) in region.points.iter().enumerate() {
            let val: f64 = p.point.coords().iter().zip(&w).map(|(a, b)| a * b).sum();
            // deterministic tie-break toward the earlier point
            if val < best_val - 1e-15 {
                best = i;
                best_val = val;
            }
        }
        facets.push(SupportingPlane { normal: w, offset: best_val });
        if !corner_indices.contains(&best) {
            corner_indices.push(best);
        }
    }
    corner_indices.sort_unstable();
    let corners = corner_indices.iter().map(|&i| region.points[i].point).collect();
    Ok(HullReport { corner_indices, corners, facets })
}

/// Optimizer settings shared by the region computations.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AuxSpec {
    pub card_z1: usize,
    pub card_z2: usize,
    pub grid_step: f64,
    pub restarts: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl AuxSpec {
    /// Default cardinalities: branch alphabet size + 2.
    pub fn for_source(x1_size: usize, x2_size: usize) -> Self {
        Self {
            card_z1: x1_size + 2,
            card_z2: x2_size + 2,
            grid_step: 0.05,
            restarts: 24,
            max_iterations: 4000,
            tolerance: 1e-10,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.card_z1 == 0 || self.card_z2 == 0 {
            return Err(Error::InvalidParameter("auxiliary cardinalities must be >= 1".into()));
        }
        if !(self.grid_step > 0.0 && self.grid_step <= 0.5) {
            return Err(Error::InvalidParameter("grid step must lie in (0, 0.5]".into()));
        }
        if self.tolerance <= 0.0 {
            return Err(Error::InvalidParameter("tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// Shared slope-sweep helper: a cloud of (distortion, rate) pairs traced by
/// a Lagrangian parameter, evaluated at a distortion target by lower convex
/// interpolation.
pub(crate) fn rate_at_target(points: &[(f64, f64)], target: f64) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let mut pts: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|(d, r)| d.is_finite() && r.is_finite())
        .collect();
    if pts.is_empty() {
        return Err(Error::EmptyRegion);
    }
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // lower staircase: keep the running-minimum rate as distortion grows
    let mut frontier: Vec<(f64, f64)> = Vec::new();
    let mut best = f64::INFINITY;
    for (d, r) in pts {
        if r < best {
            best = r;
            frontier.push((d, r));
        }
    }
    // beyond the largest traced distortion the rate is the smallest seen
    if target >= frontier.last().unwrap().0 {
        return Ok(frontier.last().unwrap().1);
    }
    if target <= frontier[0].0 {
        return Ok(frontier[0].1);
    }
    // convex lower hull of the frontier, then linear interpolation
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for p in frontier {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    for w in hull.windows(2) {
        let (d0, r0) = w[0];
        let (d1, r1) = w[1];
        if (d0..=d1).contains(&target) {
            let t = if d1 > d0 { (target - d0) / (d1 - d0) } else { 0.0 };
            return Ok(r0 + t * (r1 - r0));
        }
    }
    Ok(hull.last().unwrap().1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn region_of(points: &[(f64, f64)]) -> Region {
        let mut r = Region::new("test", 1);
        for &(a, b) in points {
            r.push(RateDistortionPoint::rate_pair(a, b), Witness::default());
        }
        r
    }

    #[test]
    fn containment_self_and_translates() {
        let base = region_of(&[(0.2, 0.8), (0.5, 0.4), (0.9, 0.1)]);
        let r = check_containment(&base, &base, 1e-12).unwrap();
        assert!(r.contained);
        assert_eq!(r.worst_violation, 0.0);

        // inner shifted up by 0.1 in r1: dominated, contained
        let up = region_of(&[(0.3, 0.8), (0.6, 0.4), (1.0, 0.1)]);
        assert!(check_containment(&up, &base, 1e-9).unwrap().contained);

        // inner shifted down by 0.1: violation 0.1
        let down = region_of(&[(0.1, 0.8), (0.4, 0.4), (0.8, 0.1)]);
        let r = check_containment(&down, &base, 1e-9).unwrap();
        assert!(!r.contained);
        assert!((r.worst_violation - 0.1).abs() < 1e-12);
    }

    #[test]
    fn containment_rejects_dimension_mismatch() {
        let a = region_of(&[(0.1, 0.2)]);
        let mut b = Region::new("test", 1);
        b.push(RateDistortionPoint::triple(0.1, 0.2, 0.3), Witness::default());
        assert!(check_containment(&a, &b, 1e-9).is_err());
    }

    #[test]
    fn hull_single_point_and_segment() {
        let single = region_of(&[(0.4, 0.6)]);
        let h = hull_and_corners(&single).unwrap();
        assert_eq!(h.corners.len(), 1);

        let seg = region_of(&[(0.2, 0.8), (0.8, 0.2), (0.5, 0.5001)]);
        let h = hull_and_corners(&seg).unwrap();
        // the interior point sits above the chord and is never a minimizer
        assert_eq!(h.corner_indices, vec![0, 1]);
    }

    #[test]
    fn prune_keeps_frontier() {
        let mut r = region_of(&[(0.2, 0.8), (0.25, 0.9), (0.8, 0.2), (0.2, 0.8)]);
        r.prune_dominated();
        assert_eq!(r.points.len(), 2);
    }

    #[test]
    fn rate_at_target_interpolates() {
        let pts = vec![(0.0, 1.0), (0.1, 0.6), (0.3, 0.2), (0.5, 0.0)];
        assert!((rate_at_target(&pts, 0.2).unwrap() - 0.4).abs() < 1e-12);
        assert_eq!(rate_at_target(&pts, 0.9).unwrap(), 0.0);
        assert_eq!(rate_at_target(&pts, -0.1).unwrap(), 1.0);
    }
}
