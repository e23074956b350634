//! Finite-alphabet probability tables and exact information measures.
//!
//! Everything here is exact arithmetic over dense tables: entropies and
//! mutual informations in bits, marginals, conditional views, i.i.d.
//! sampling, and empirical types. Tables are immutable after construction
//! and safe to share across threads.

use crate::error::{Error, Result};
use crate::rng::stream_rng;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Hard cap on dense table cells. Requests above this are rejected rather
/// than silently allocating an exponential-size block table.
pub const TABLE_CELL_CAP: u64 = 1 << 24;

/// Validation tolerance for total mass; smaller deviations renormalize.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// Binary entropy in bits, with the 0·log 0 = 0 convention.
pub fn binary_entropy(p: f64) -> f64 {
    let term = |x: f64| if x > 0.0 { -x * x.log2() } else { 0.0 };
    term(p) + term(1.0 - p)
}

/// A finite symbol alphabet, optionally labelled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    size: usize,
    labels: Option<Vec<String>>,
}

impl Alphabet {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidParameter("alphabet size must be >= 1".into()));
        }
        Ok(Self { size, labels: None })
    }

    pub fn with_labels(labels: Vec<String>) -> Result<Self> {
        let size = labels.len();
        if size == 0 {
            return Err(Error::InvalidParameter("alphabet size must be >= 1".into()));
        }
        let mut sorted = labels.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != size {
            return Err(Error::BadLabels { size });
        }
        Ok(Self { size, labels: Some(labels) })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }
}

/// A length-n word over a finite alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolSequence {
    symbols: Vec<u32>,
    alphabet_size: usize,
}

impl SymbolSequence {
    pub fn new(symbols: Vec<u32>, alphabet_size: usize) -> Result<Self> {
        for &s in &symbols {
            if s as usize >= alphabet_size {
                return Err(Error::SymbolOutOfRange { symbol: s, size: alphabet_size });
            }
        }
        Ok(Self { symbols, alphabet_size })
    }

    pub fn symbols(&self) -> &[u32] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }
}

fn strides_of(sizes: &[usize]) -> Vec<usize> {
    let mut strides = vec![1usize; sizes.len()];
    for i in (0..sizes.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * sizes[i + 1];
    }
    strides
}

/// Dense joint pmf over a product of finite alphabets, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityTable {
    axes: Vec<Alphabet>,
    mass: Vec<f64>,
    strides: Vec<usize>,
}

impl ProbabilityTable {
    /// Validates sign, size cap and normalization. A total-mass deviation
    /// below [`MASS_TOLERANCE`] is renormalized; anything larger is an error.
    pub fn new(axes: Vec<Alphabet>, mut mass: Vec<f64>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::EmptyAxes);
        }
        let cells: u128 = axes.iter().map(|a| a.size() as u128).product();
        if cells > TABLE_CELL_CAP as u128 {
            return Err(Error::TableTooLarge { cells, cap: TABLE_CELL_CAP });
        }
        let cells = cells as usize;
        if mass.len() != cells {
            return Err(Error::MassLength { got: mass.len(), expected: cells });
        }
        for (i, &v) in mass.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::BadMass { value: v, cell: i });
            }
        }
        let sum: f64 = mass.iter().sum();
        let deviation = (sum - 1.0).abs();
        if deviation >= MASS_TOLERANCE {
            return Err(Error::NotNormalized { sum, deviation });
        }
        if deviation > 0.0 {
            for v in &mut mass {
                *v /= sum;
            }
        }
        let strides = strides_of(&axes.iter().map(|a| a.size()).collect::<Vec<_>>());
        Ok(Self { axes, mass, strides })
    }

    pub fn from_sizes(sizes: &[usize], mass: Vec<f64>) -> Result<Self> {
        let axes = sizes.iter().map(|&s| Alphabet::new(s)).collect::<Result<Vec<_>>>()?;
        Self::new(axes, mass)
    }

    /// Uniform joint table.
    pub fn uniform(sizes: &[usize]) -> Result<Self> {
        let cells: usize = sizes.iter().product();
        Self::from_sizes(sizes, vec![1.0 / cells as f64; cells])
    }

    /// Doubly symmetric binary source: uniform X1, X2 = X1 flipped with the
    /// given crossover probability.
    pub fn dsbs(crossover: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&crossover) {
            return Err(Error::InvalidParameter("crossover must lie in [0,1]".into()));
        }
        let same = 0.5 * (1.0 - crossover);
        let diff = 0.5 * crossover;
        Self::from_sizes(&[2, 2], vec![same, diff, diff, same])
    }

    pub fn axes(&self) -> &[Alphabet] {
        &self.axes
    }

    pub fn num_axes(&self) -> usize {
        self.axes.len()
    }

    pub fn axis_size(&self, axis: usize) -> usize {
        self.axes[axis].size()
    }

    pub fn cells(&self) -> usize {
        self.mass.len()
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn flat_index(&self, idx: &[u32]) -> usize {
        debug_assert_eq!(idx.len(), self.axes.len());
        idx.iter().zip(&self.strides).map(|(&i, &s)| i as usize * s).sum()
    }

    pub fn unflatten(&self, mut flat: usize) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.axes.len());
        for &s in &self.strides {
            out.push((flat / s) as u32);
            flat %= s;
        }
        out
    }

    fn check_axes(&self, axes: &[usize]) -> Result<()> {
        if axes.is_empty() {
            return Err(Error::EmptyAxes);
        }
        let mut seen = vec![false; self.axes.len()];
        for &a in axes {
            if a >= self.axes.len() {
                return Err(Error::AxisOutOfRange { axis: a, dims: self.axes.len() });
            }
            if seen[a] {
                return Err(Error::OverlappingAxes);
            }
            seen[a] = true;
        }
        Ok(())
    }

    /// Marginal over the selected axes, in the order given.
    pub fn marginal(&self, axes: &[usize]) -> Result<ProbabilityTable> {
        self.check_axes(axes)?;
        let out_sizes: Vec<usize> = axes.iter().map(|&a| self.axes[a].size()).collect();
        let out_cells: usize = out_sizes.iter().product();
        let out_strides = strides_of(&out_sizes);
        let mut out = vec![0.0f64; out_cells];
        for (flat, &p) in self.mass.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let mut o = 0usize;
            for (k, &a) in axes.iter().enumerate() {
                let coord = (flat / self.strides[a]) % self.axes[a].size();
                o += coord * out_strides[k];
            }
            out[o] += p;
        }
        let out_axes: Vec<Alphabet> = axes.iter().map(|&a| self.axes[a].clone()).collect();
        let strides = out_strides;
        Ok(ProbabilityTable { axes: out_axes, mass: out, strides })
    }

    /// Entropy in bits of the marginal on the given axes.
    pub fn entropy(&self, axes: &[usize]) -> Result<f64> {
        let marg = self.marginal(axes)?;
        let mut h = 0.0;
        for &p in &marg.mass {
            if p > 0.0 {
                h -= p * p.log2();
            }
        }
        Ok(h.max(0.0))
    }

    /// Mutual information I(A;B) in bits between two disjoint axis groups.
    pub fn mutual_information(&self, axes_a: &[usize], axes_b: &[usize]) -> Result<f64> {
        self.check_disjoint(axes_a, axes_b)?;
        let mut ab = axes_a.to_vec();
        ab.extend_from_slice(axes_b);
        let mi = self.entropy(axes_a)? + self.entropy(axes_b)? - self.entropy(&ab)?;
        debug_assert!(mi > -1e-9, "mutual information far below zero: {mi}");
        Ok(mi.max(0.0))
    }

    /// Conditional mutual information I(A;B|C) in bits. An empty C reduces
    /// to plain mutual information.
    pub fn conditional_mutual_information(
        &self,
        axes_a: &[usize],
        axes_b: &[usize],
        axes_c: &[usize],
    ) -> Result<f64> {
        if axes_c.is_empty() {
            return self.mutual_information(axes_a, axes_b);
        }
        self.check_disjoint(axes_a, axes_b)?;
        self.check_disjoint(axes_a, axes_c)?;
        self.check_disjoint(axes_b, axes_c)?;
        let mut ac = axes_a.to_vec();
        ac.extend_from_slice(axes_c);
        let mut bc = axes_b.to_vec();
        bc.extend_from_slice(axes_c);
        let mut abc = axes_a.to_vec();
        abc.extend_from_slice(axes_b);
        abc.extend_from_slice(axes_c);
        let mi = self.entropy(&ac)? + self.entropy(&bc)? - self.entropy(&abc)? - self.entropy(axes_c)?;
        debug_assert!(mi > -1e-9, "conditional MI far below zero: {mi}");
        Ok(mi.max(0.0))
    }

    fn check_disjoint(&self, a: &[usize], b: &[usize]) -> Result<()> {
        let mut all = a.to_vec();
        all.extend_from_slice(b);
        self.check_axes(&all)
    }

    /// Conditional view q(out|given): per conditioning cell the row is
    /// renormalized; zero-mass conditioning cells are flagged unreachable
    /// and their rows left as zeros.
    pub fn conditional_view(&self, given: &[usize]) -> Result<ConditionalView> {
        self.check_axes(given)?;
        let out_axes: Vec<usize> =
            (0..self.axes.len()).filter(|a| !given.contains(a)).collect();
        if out_axes.is_empty() {
            return Err(Error::EmptyAxes);
        }
        let cond_sizes: Vec<usize> = given.iter().map(|&a| self.axes[a].size()).collect();
        let out_sizes: Vec<usize> = out_axes.iter().map(|&a| self.axes[a].size()).collect();
        let cond_cells: usize = cond_sizes.iter().product();
        let out_cells: usize = out_sizes.iter().product();
        let cond_strides = strides_of(&cond_sizes);
        let out_strides = strides_of(&out_sizes);
        let mut rows = vec![0.0f64; cond_cells * out_cells];
        let mut totals = vec![0.0f64; cond_cells];
        for (flat, &p) in self.mass.iter().enumerate() {
            let mut c = 0usize;
            for (k, &a) in given.iter().enumerate() {
                c += ((flat / self.strides[a]) % self.axes[a].size()) * cond_strides[k];
            }
            let mut o = 0usize;
            for (k, &a) in out_axes.iter().enumerate() {
                o += ((flat / self.strides[a]) % self.axes[a].size()) * out_strides[k];
            }
            rows[c * out_cells + o] += p;
            totals[c] += p;
        }
        let mut reachable = vec![true; cond_cells];
        for c in 0..cond_cells {
            if totals[c] > 0.0 {
                for o in 0..out_cells {
                    rows[c * out_cells + o] /= totals[c];
                }
            } else {
                reachable[c] = false;
            }
        }
        Ok(ConditionalView {
            table: ConditionalTable { cond_sizes, out_sizes, rows },
            reachable,
        })
    }

    /// i.i.d. sample of length n; returns one sequence per axis.
    /// A pure function of (pmf, n, seed).
    pub fn sample_iid(&self, n: usize, seed: u64) -> Result<Vec<SymbolSequence>> {
        self.sample_iid_stream(n, seed, 0)
    }

    /// i.i.d. sample on an explicit RNG stream (for counter-derived trial seeds).
    pub fn sample_iid_stream(&self, n: usize, seed: u64, stream: u64) -> Result<Vec<SymbolSequence>> {
        if n == 0 {
            return Err(Error::InvalidParameter("sample length must be >= 1".into()));
        }
        let cum = self.cumulative();
        let mut rng = stream_rng(seed, stream);
        let mut per_axis: Vec<Vec<u32>> = self.axes.iter().map(|_| Vec::with_capacity(n)).collect();
        for _ in 0..n {
            let flat = draw_from_cumulative(&cum, rng.gen::<f64>());
            let idx = self.unflatten(flat);
            for (k, &v) in idx.iter().enumerate() {
                per_axis[k].push(v);
            }
        }
        Ok(per_axis
            .into_iter()
            .zip(&self.axes)
            .map(|(symbols, a)| SymbolSequence { symbols, alphabet_size: a.size() })
            .collect())
    }

    pub(crate) fn cumulative(&self) -> Vec<f64> {
        let mut cum = Vec::with_capacity(self.mass.len());
        let mut acc = 0.0;
        for &p in &self.mass {
            acc += p;
            cum.push(acc);
        }
        cum
    }

    /// Reordered marginal: marginal over `axes` but with the output axis
    /// order exactly as listed.
    pub fn marginal_ordered(&self, axes: &[usize]) -> Result<ProbabilityTable> {
        self.marginal(axes)
    }
}

pub(crate) fn draw_from_cumulative(cum: &[f64], u: f64) -> usize {
    let total = *cum.last().unwrap();
    let target = u * total;
    match cum.binary_search_by(|c| c.partial_cmp(&target).unwrap()) {
        Ok(i) | Err(i) => i.min(cum.len() - 1),
    }
}

/// Serialized form: `{"axes": [sizes], "mass": [row-major floats]}`.
#[derive(Serialize, Deserialize)]
struct TableWire {
    axes: Vec<usize>,
    mass: Vec<f64>,
}

impl Serialize for ProbabilityTable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TableWire {
            axes: self.axes.iter().map(|a| a.size()).collect(),
            mass: self.mass.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ProbabilityTable {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let wire = TableWire::deserialize(d)?;
        ProbabilityTable::from_sizes(&wire.axes, wire.mass).map_err(serde::de::Error::custom)
    }
}

/// Conditional pmf q(out|cond) stored as one row per conditioning cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalTable {
    cond_sizes: Vec<usize>,
    out_sizes: Vec<usize>,
    rows: Vec<f64>,
}

impl ConditionalTable {
    /// Each row (fixed conditioning cell) must be a pmf.
    pub fn new(cond_sizes: Vec<usize>, out_sizes: Vec<usize>, mut rows: Vec<f64>) -> Result<Self> {
        if cond_sizes.is_empty() || out_sizes.is_empty() {
            return Err(Error::EmptyAxes);
        }
        let cond_cells: usize = cond_sizes.iter().product();
        let out_cells: usize = out_sizes.iter().product();
        if rows.len() != cond_cells * out_cells {
            return Err(Error::MassLength { got: rows.len(), expected: cond_cells * out_cells });
        }
        for c in 0..cond_cells {
            let row = &mut rows[c * out_cells..(c + 1) * out_cells];
            for (i, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::BadMass { value: v, cell: c * out_cells + i });
                }
            }
            let sum: f64 = row.iter().sum();
            let dev = (sum - 1.0).abs();
            if dev >= MASS_TOLERANCE {
                return Err(Error::NotNormalized { sum, deviation: dev });
            }
            if dev > 0.0 {
                for v in row.iter_mut() {
                    *v /= sum;
                }
            }
        }
        Ok(Self { cond_sizes, out_sizes, rows })
    }

    pub fn from_rows(cond_size: usize, out_size: usize, rows: Vec<f64>) -> Result<Self> {
        Self::new(vec![cond_size], vec![out_size], rows)
    }

    /// Identity channel on an alphabet of the given size.
    pub fn identity(size: usize) -> Self {
        let mut rows = vec![0.0; size * size];
        for i in 0..size {
            rows[i * size + i] = 1.0;
        }
        Self { cond_sizes: vec![size], out_sizes: vec![size], rows }
    }

    /// Binary symmetric channel.
    pub fn bsc(crossover: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&crossover) {
            return Err(Error::InvalidParameter("crossover must lie in [0,1]".into()));
        }
        Self::from_rows(2, 2, vec![1.0 - crossover, crossover, crossover, 1.0 - crossover])
    }

    /// Channel that outputs symbol 0 regardless of input.
    pub fn constant(cond_size: usize, out_size: usize) -> Self {
        let mut rows = vec![0.0; cond_size * out_size];
        for c in 0..cond_size {
            rows[c * out_size] = 1.0;
        }
        Self { cond_sizes: vec![cond_size], out_sizes: vec![out_size], rows }
    }

    pub fn cond_cells(&self) -> usize {
        self.cond_sizes.iter().product()
    }

    pub fn out_cells(&self) -> usize {
        self.out_sizes.iter().product()
    }

    pub fn row(&self, cond: usize) -> &[f64] {
        let w = self.out_cells();
        &self.rows[cond * w..(cond + 1) * w]
    }

    pub fn rows(&self) -> &[f64] {
        &self.rows
    }

    pub fn is_identity(&self) -> bool {
        let n = self.cond_cells();
        if n != self.out_cells() {
            return false;
        }
        for c in 0..n {
            for o in 0..n {
                let want = if c == o { 1.0 } else { 0.0 };
                if (self.row(c)[o] - want).abs() > 1e-12 {
                    return false;
                }
            }
        }
        true
    }

    /// Draw one output symbol given a conditioning cell.
    pub fn sample_one<R: Rng>(&self, cond: usize, rng: &mut R) -> u32 {
        let row = self.row(cond);
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (i, &p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                return i as u32;
            }
        }
        (row.len() - 1) as u32
    }
}

#[derive(Serialize, Deserialize)]
struct CondWire {
    cond: Vec<usize>,
    out: Vec<usize>,
    rows: Vec<f64>,
}

impl Serialize for ConditionalTable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CondWire { cond: self.cond_sizes.clone(), out: self.out_sizes.clone(), rows: self.rows.clone() }
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ConditionalTable {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let wire = CondWire::deserialize(d)?;
        ConditionalTable::new(wire.cond, wire.out, wire.rows).map_err(serde::de::Error::custom)
    }
}

/// Conditional view of a joint table plus per-cell reachability flags.
#[derive(Debug, Clone)]
pub struct ConditionalView {
    pub table: ConditionalTable,
    pub reachable: Vec<bool>,
}

/// Empirical joint type of a tuple of aligned sequences: counts / n.
pub fn empirical_distribution(seqs: &[SymbolSequence]) -> Result<ProbabilityTable> {
    if seqs.is_empty() || seqs[0].is_empty() {
        return Err(Error::EmptySequence);
    }
    let n = seqs[0].len();
    for s in seqs {
        if s.len() != n {
            return Err(Error::LengthMismatch { got: s.len(), expected: n });
        }
    }
    let sizes: Vec<usize> = seqs.iter().map(|s| s.alphabet_size()).collect();
    let strides = strides_of(&sizes);
    let cells: usize = sizes.iter().product();
    let mut counts = vec![0u64; cells];
    for k in 0..n {
        let mut flat = 0usize;
        for (j, s) in seqs.iter().enumerate() {
            flat += s.symbols()[k] as usize * strides[j];
        }
        counts[flat] += 1;
    }
    let mass: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
    ProbabilityTable::from_sizes(&sizes, mass)
}

/// The weakened Fano bound 1 + log2(|U|)·Pe on H(U|V).
pub fn fano_bound(alphabet_size: usize, error_prob: f64) -> Result<f64> {
    if alphabet_size == 0 {
        return Err(Error::InvalidParameter("alphabet size must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&error_prob) {
        return Err(Error::InvalidParameter("error probability must lie in [0,1]".into()));
    }
    Ok(1.0 + (alphabet_size as f64).log2() * error_prob)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_uniform_binary_is_one_bit() {
        let p = ProbabilityTable::from_sizes(&[2], vec![0.5, 0.5]).unwrap();
        assert!((p.entropy(&[0]).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn entropy_point_mass_is_zero() {
        let p = ProbabilityTable::from_sizes(&[3], vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(p.entropy(&[0]).unwrap(), 0.0);
    }

    #[test]
    fn entropy_quarter_three_quarters() {
        let p = ProbabilityTable::from_sizes(&[2], vec![0.25, 0.75]).unwrap();
        // -0.25 log2 0.25 - 0.75 log2 0.75
        assert!((p.entropy(&[0]).unwrap() - 0.8112781244591328).abs() < 1e-12);
    }

    #[test]
    fn mi_product_distribution_is_zero() {
        let p = ProbabilityTable::from_sizes(&[2, 2], vec![0.06, 0.14, 0.24, 0.56]).unwrap();
        assert!(p.mutual_information(&[0], &[1]).unwrap() < 1e-12);
    }

    #[test]
    fn mi_identical_uniform_binary_is_one() {
        let p = ProbabilityTable::from_sizes(&[2, 2], vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        assert!((p.mutual_information(&[0], &[1]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mi_dsbs_point_one() {
        let p = ProbabilityTable::dsbs(0.1).unwrap();
        let expect = 1.0 - binary_entropy(0.1);
        assert!((p.mutual_information(&[0], &[1]).unwrap() - expect).abs() < 1e-12);
        assert!((expect - 0.531004).abs() < 1e-6);
    }

    #[test]
    fn mi_rejects_overlapping_axes() {
        let p = ProbabilityTable::uniform(&[2, 2]).unwrap();
        assert!(matches!(p.mutual_information(&[0], &[0]), Err(Error::OverlappingAxes)));
    }

    #[test]
    fn cmi_matches_brute_force_triple_sum() {
        // direct evaluation of sum p(a,b,c) log2[ p(a,b,c) p(c) / (p(a,c) p(b,c)) ]
        let mut rng = stream_rng(11, 0);
        for _ in 0..20 {
            let raw: Vec<f64> = (0..8).map(|_| rng.gen::<f64>() + 1e-3).collect();
            let sum: f64 = raw.iter().sum();
            let mass: Vec<f64> = raw.iter().map(|v| v / sum).collect();
            let p = ProbabilityTable::from_sizes(&[2, 2, 2], mass.clone()).unwrap();
            let pc = p.marginal(&[2]).unwrap();
            let pac = p.marginal(&[0, 2]).unwrap();
            let pbc = p.marginal(&[1, 2]).unwrap();
            let mut direct = 0.0;
            for a in 0..2u32 {
                for b in 0..2u32 {
                    for c in 0..2u32 {
                        let pabc = p.mass()[p.flat_index(&[a, b, c])];
                        if pabc > 0.0 {
                            let num = pabc * pc.mass()[c as usize];
                            let den = pac.mass()[pac.flat_index(&[a, c])]
                                * pbc.mass()[pbc.flat_index(&[b, c])];
                            direct += pabc * (num / den).log2();
                        }
                    }
                }
            }
            let cmi = p.conditional_mutual_information(&[0], &[1], &[2]).unwrap();
            assert!((cmi - direct).abs() < 1e-12, "cmi {cmi} vs direct {direct}");
        }
    }

    #[test]
    fn cmi_independent_triple_is_zero() {
        let p = ProbabilityTable::uniform(&[2, 2, 2]).unwrap();
        assert!(p.conditional_mutual_information(&[0], &[1], &[2]).unwrap() < 1e-12);
    }

    #[test]
    fn chain_rule_on_random_tables() {
        let mut rng = stream_rng(12, 0);
        for _ in 0..50 {
            let raw: Vec<f64> = (0..12).map(|_| rng.gen::<f64>() + 1e-6).collect();
            let sum: f64 = raw.iter().sum();
            let p = ProbabilityTable::from_sizes(&[3, 4], raw.iter().map(|v| v / sum).collect())
                .unwrap();
            let h_ab = p.entropy(&[0, 1]).unwrap();
            let h_a = p.entropy(&[0]).unwrap();
            // H(B|A) = H(A,B) - H(A)
            let h_b_given_a = h_ab - h_a;
            let mi = p.mutual_information(&[0], &[1]).unwrap();
            let h_b = p.entropy(&[1]).unwrap();
            assert!((h_b - mi - h_b_given_a).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_mass_sum() {
        let err = ProbabilityTable::from_sizes(&[2], vec![0.5, 0.48]).unwrap_err();
        assert!(matches!(err, Error::NotNormalized { .. }));
    }

    #[test]
    fn renormalizes_tiny_deviation() {
        let p = ProbabilityTable::from_sizes(&[2], vec![0.5, 0.5 + 4e-10]).unwrap();
        let sum: f64 = p.mass().iter().sum();
        assert!((sum - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sample_iid_is_deterministic_and_point_mass_constant() {
        let p = ProbabilityTable::from_sizes(&[3], vec![0.0, 1.0, 0.0]).unwrap();
        let s = p.sample_iid(100, 5).unwrap();
        assert!(s[0].symbols().iter().all(|&x| x == 1));
        let q = ProbabilityTable::dsbs(0.3).unwrap();
        let a = q.sample_iid(1000, 7).unwrap();
        let b = q.sample_iid(1000, 7).unwrap();
        assert_eq!(a, b);
        let c = q.sample_iid(1000, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn sample_iid_frequency_close_to_half() {
        let p = ProbabilityTable::from_sizes(&[2], vec![0.5, 0.5]).unwrap();
        let n = 100_000;
        let s = p.sample_iid(n, 42).unwrap();
        let ones: usize = s[0].symbols().iter().filter(|&&x| x == 1).count();
        let freq = ones as f64 / n as f64;
        // 3 sigma of a fair binomial at n = 1e5 is ~0.0047
        assert!((freq - 0.5).abs() < 0.01, "freq {freq}");
    }

    #[test]
    fn empirical_distribution_examples() {
        let s = SymbolSequence::new(vec![0, 1, 1, 0], 2).unwrap();
        let p = empirical_distribution(&[s]).unwrap();
        assert_eq!(p.mass(), &[0.5, 0.5]);

        let a = SymbolSequence::new(vec![0, 0, 0, 0], 2).unwrap();
        let p = empirical_distribution(&[a]).unwrap();
        assert_eq!(p.mass(), &[1.0, 0.0]);

        let x = SymbolSequence::new(vec![0, 1], 2).unwrap();
        let y = SymbolSequence::new(vec![1, 1], 2).unwrap();
        let p = empirical_distribution(&[x, y]).unwrap();
        assert_eq!(p.mass(), &[0.0, 0.5, 0.0, 0.5]);
    }

    #[test]
    fn fano_examples() {
        assert_eq!(fano_bound(4, 0.0).unwrap(), 1.0);
        assert_eq!(fano_bound(2, 0.5).unwrap(), 1.5);
        assert!(fano_bound(2, 1.5).is_err());
    }

    #[test]
    fn fano_dominates_conditional_entropy_with_map_decoder() {
        let mut rng = stream_rng(21, 0);
        for _ in 0..30 {
            let raw: Vec<f64> = (0..16).map(|_| rng.gen::<f64>() + 1e-4).collect();
            let sum: f64 = raw.iter().sum();
            let p = ProbabilityTable::from_sizes(&[4, 4], raw.iter().map(|v| v / sum).collect())
                .unwrap();
            // MAP decoder g(v) = argmax_u p(u,v); Pe = 1 - sum_v max_u p(u,v)
            let mut correct = 0.0;
            for v in 0..4u32 {
                let best = (0..4u32)
                    .map(|u| p.mass()[p.flat_index(&[u, v])])
                    .fold(f64::MIN, f64::max);
                correct += best;
            }
            let pe = 1.0 - correct;
            let h_u_given_v = p.entropy(&[0, 1]).unwrap() - p.entropy(&[1]).unwrap();
            let bound = fano_bound(4, pe).unwrap();
            assert!(h_u_given_v <= bound + 1e-12, "H(U|V)={h_u_given_v} bound={bound}");
        }
    }

    #[test]
    fn table_json_round_trip_and_rejects_length_mismatch() {
        let p = ProbabilityTable::dsbs(0.2).unwrap();
        let text = serde_json::to_string(&p).unwrap();
        let q: ProbabilityTable = serde_json::from_str(&text).unwrap();
        assert_eq!(p.mass(), q.mass());
        let bad = r#"{"axes":[2,2],"mass":[0.5,0.5]}"#;
        assert!(serde_json::from_str::<ProbabilityTable>(bad).is_err());
    }

    #[test]
    fn conditional_view_marks_unreachable_cells() {
        let p = ProbabilityTable::from_sizes(&[2, 2], vec![0.5, 0.5, 0.0, 0.0]).unwrap();
        let v = p.conditional_view(&[0]).unwrap();
        assert!(v.reachable[0]);
        assert!(!v.reachable[1]);
        assert_eq!(v.table.row(0), &[0.5, 0.5]);
    }

    #[test]
    fn cell_cap_enforced() {
        let err = ProbabilityTable::uniform(&[1 << 13, 1 << 13]).unwrap_err();
        assert!(matches!(err, Error::TableTooLarge { .. }));
    }
}
