//! Strong typicality: membership tests, exact typicality probabilities by
//! summation over type classes, and numerical verification of the
//! conditional-probability sandwich and the Markov lemma.
//!
//! The membership test uses a strict inequality, so a count sitting exactly
//! on the boundary is atypical. One consequence worth knowing: a symbol of
//! probability zero appearing even once makes the sequence atypical for any
//! epsilon below |alphabet|/n. That falls straight out of the definition and
//! is not special-cased.

use crate::error::{Error, Result};
use crate::prob::{ProbabilityTable, SymbolSequence};
use serde::Serialize;

/// Epsilon and block length for a typicality test.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TypicalityParams {
    pub epsilon: f64,
    pub block_length: usize,
}

impl TypicalityParams {
    pub fn new(epsilon: f64, block_length: usize) -> Result<Self> {
        if epsilon <= 0.0 || !epsilon.is_finite() {
            return Err(Error::InvalidParameter("epsilon must be positive".into()));
        }
        if block_length == 0 {
            return Err(Error::InvalidParameter("block length must be >= 1".into()));
        }
        Ok(Self { epsilon, block_length })
    }
}

/// Outcome of a strong-typicality test. `max_deviation` is the largest
/// |count/n - p| over cells, scaled by the joint alphabet size, so that
/// `is_typical == (max_deviation < epsilon)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TypicalityVerdict {
    pub is_typical: bool,
    pub max_deviation: f64,
}

/// Exact number of occurrences of a joint symbol in a tuple of aligned
/// sequences.
pub fn count_occurrences(seqs: &[SymbolSequence], symbol: &[u32]) -> Result<usize> {
    if seqs.is_empty() || seqs[0].is_empty() {
        return Err(Error::EmptySequence);
    }
    if symbol.len() != seqs.len() {
        return Err(Error::DimensionMismatch(format!(
            "symbol has {} coordinates, sequences have {}",
            symbol.len(),
            seqs.len()
        )));
    }
    let n = seqs[0].len();
    for (s, &sym) in seqs.iter().zip(symbol) {
        if s.len() != n {
            return Err(Error::LengthMismatch { got: s.len(), expected: n });
        }
        if sym as usize >= s.alphabet_size() {
            return Err(Error::SymbolOutOfRange { symbol: sym, size: s.alphabet_size() });
        }
    }
    let count = (0..n)
        .filter(|&k| seqs.iter().zip(symbol).all(|(s, &sym)| s.symbols()[k] == sym))
        .count();
    Ok(count)
}

/// Strong typicality of a (tuple of) sequence(s) against a joint pmf.
pub fn is_strongly_typical(
    seqs: &[SymbolSequence],
    p: &ProbabilityTable,
    params: &TypicalityParams,
) -> Result<TypicalityVerdict> {
    if seqs.len() != p.num_axes() {
        return Err(Error::DimensionMismatch(format!(
            "{} sequences against a {}-axis table",
            seqs.len(),
            p.num_axes()
        )));
    }
    for (k, s) in seqs.iter().enumerate() {
        if s.len() != params.block_length {
            return Err(Error::LengthMismatch { got: s.len(), expected: params.block_length });
        }
        if s.alphabet_size() != p.axis_size(k) {
            return Err(Error::DimensionMismatch(format!(
                "sequence {k} alphabet {} vs table axis {}",
                s.alphabet_size(),
                p.axis_size(k)
            )));
        }
    }
    let counts = joint_counts(seqs, p);
    Ok(verdict_from_counts(&counts, p, params))
}

pub(crate) fn joint_counts(seqs: &[SymbolSequence], p: &ProbabilityTable) -> Vec<u32> {
    let n = seqs[0].len();
    let mut counts = vec![0u32; p.cells()];
    let mut idx = vec![0u32; seqs.len()];
    for k in 0..n {
        for (j, s) in seqs.iter().enumerate() {
            idx[j] = s.symbols()[k];
        }
        counts[p.flat_index(&idx)] += 1;
    }
    counts
}

pub(crate) fn verdict_from_counts(
    counts: &[u32],
    p: &ProbabilityTable,
    params: &TypicalityParams,
) -> TypicalityVerdict {
    let n = params.block_length as f64;
    let m = p.cells() as f64;
    let mut max_dev = 0.0f64;
    for (c, &prob) in counts.iter().zip(p.mass()) {
        let dev = (*c as f64 / n - prob).abs() * m;
        if dev > max_dev {
            max_dev = dev;
        }
    }
    TypicalityVerdict { is_typical: max_dev < params.epsilon, max_deviation: max_dev }
}

/// Reusable joint-typicality tester for one fixed word against many
/// candidate words, with an early abort once any cell count exceeds its
/// upper threshold. Semantics are identical to [`is_strongly_typical`] on
/// the pair.
#[derive(Debug, Clone)]
pub struct PairTester {
    y_size: usize,
    z_size: usize,
    np: Vec<f64>,
    margin_counts: f64,
    n: usize,
}

impl PairTester {
    /// `joint` must be a two-axis table (fixed-word axis first).
    pub fn new(joint: &ProbabilityTable, params: &TypicalityParams) -> Result<Self> {
        if joint.num_axes() != 2 {
            return Err(Error::DimensionMismatch("pair tester expects a two-axis table".into()));
        }
        let n = params.block_length;
        let m = joint.cells() as f64;
        let np: Vec<f64> = joint.mass().iter().map(|&p| p * n as f64).collect();
        Ok(Self {
            y_size: joint.axis_size(0),
            z_size: joint.axis_size(1),
            np,
            margin_counts: n as f64 * params.epsilon / m,
            n,
        })
    }

    pub fn y_size(&self) -> usize {
        self.y_size
    }

    pub fn z_size(&self) -> usize {
        self.z_size
    }

    /// Joint typicality of (fixed, candidate); aborts on the first upper
    /// threshold violation.
    pub fn typical(&self, fixed: &[u32], candidate: &[u32]) -> bool {
        let mut counts = vec![0u32; self.y_size * self.z_size];
        self.typical_scratch(fixed, candidate, &mut counts)
    }

    /// Allocation-free variant for tight scan loops; `counts` must hold
    /// y_size * z_size entries and may be dirty on entry.
    pub fn typical_scratch(&self, fixed: &[u32], candidate: &[u32], counts: &mut [u32]) -> bool {
        debug_assert_eq!(fixed.len(), self.n);
        debug_assert_eq!(candidate.len(), self.n);
        debug_assert_eq!(counts.len(), self.y_size * self.z_size);
        counts.fill(0);
        for (&y, &z) in fixed.iter().zip(candidate) {
            let cell = y as usize * self.z_size + z as usize;
            counts[cell] += 1;
            if counts[cell] as f64 - self.np[cell] >= self.margin_counts {
                return false;
            }
        }
        // lower thresholds can only be checked once all symbols are seen
        counts
            .iter()
            .zip(&self.np)
            .all(|(&c, &np)| np - (c as f64) < self.margin_counts)
    }
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut lf = vec![0.0f64; n + 1];
    for k in 1..=n {
        lf[k] = lf[k - 1] + (k as f64).ln();
    }
    lf
}

fn compositions_count(n: usize, parts: usize) -> u128 {
    // C(n + parts - 1, parts - 1), saturating
    let mut num: u128 = 1;
    for i in 0..(parts - 1) {
        num = num.saturating_mul((n + parts - 1 - i) as u128);
        num /= (i + 1) as u128;
    }
    num
}

/// Exact probability that an i.i.d. block drawn from `p` is strongly
/// typical, by summation over type classes.
///
/// With `condition = Some((axes, seqs))` the listed coordinate block is
/// fixed to the given sequences and the remaining coordinates are drawn
/// i.i.d. from their (unconditional) marginal; the returned value is then
/// the probability that the combined tuple is jointly typical.
pub fn exact_typicality_probability(
    p: &ProbabilityTable,
    params: &TypicalityParams,
    condition: Option<(&[usize], &[SymbolSequence])>,
) -> Result<f64> {
    match condition {
        None => exact_unconditional(p, params),
        Some((axes, seqs)) => exact_conditional(p, params, axes, seqs),
    }
}

fn exact_unconditional(p: &ProbabilityTable, params: &TypicalityParams) -> Result<f64> {
    let n = params.block_length;
    let m = p.cells();
    let needed = compositions_count(n, m);
    if needed > crate::prob::TABLE_CELL_CAP as u128 {
        return Err(Error::EnumerationBudget { needed, budget: crate::prob::TABLE_CELL_CAP });
    }
    let lf = ln_factorials(n);
    let ln_p: Vec<f64> = p.mass().iter().map(|&v| if v > 0.0 { v.ln() } else { f64::NEG_INFINITY }).collect();
    let mut counts = vec![0u32; m];
    let mut total = 0.0f64;
    // depth-first over compositions of n into m cells
    fn rec(
        cell: usize,
        remaining: usize,
        counts: &mut [u32],
        p: &ProbabilityTable,
        params: &TypicalityParams,
        lf: &[f64],
        ln_p: &[f64],
        total: &mut f64,
    ) {
        let m = counts.len();
        if cell == m - 1 {
            counts[cell] = remaining as u32;
            let v = verdict_from_counts(counts, p, params);
            if v.is_typical {
                let mut ln_prob = lf[params.block_length];
                let mut feasible = true;
                for (k, &c) in counts.iter().enumerate() {
                    if c > 0 {
                        if ln_p[k] == f64::NEG_INFINITY {
                            feasible = false;
                            break;
                        }
                        ln_prob += c as f64 * ln_p[k] - lf[c as usize];
                    }
                }
                if feasible {
                    *total += ln_prob.exp();
                }
            }
            counts[cell] = 0;
            return;
        }
        for c in 0..=remaining {
            counts[cell] = c as u32;
            rec(cell + 1, remaining - c, counts, p, params, lf, ln_p, total);
        }
        counts[cell] = 0;
    }
    rec(0, n, &mut counts, p, params, &lf, &ln_p, &mut total);
    Ok(total.min(1.0))
}

fn exact_conditional(
    p: &ProbabilityTable,
    params: &TypicalityParams,
    cond_axes: &[usize],
    cond_seqs: &[SymbolSequence],
) -> Result<f64> {
    if cond_axes.is_empty() {
        return exact_unconditional(p, params);
    }
    if cond_axes.len() != cond_seqs.len() {
        return Err(Error::DimensionMismatch("one conditioning sequence per conditioning axis".into()));
    }
    let n = params.block_length;
    for s in cond_seqs {
        if s.len() != n {
            return Err(Error::LengthMismatch { got: s.len(), expected: n });
        }
    }
    let free_axes: Vec<usize> = (0..p.num_axes()).filter(|a| !cond_axes.contains(a)).collect();
    if free_axes.is_empty() {
        return Err(Error::EmptyAxes);
    }
    // counts of the conditioning block per conditioning cell
    let cond_marg = p.marginal(cond_axes)?;
    let cond_counts = joint_counts(cond_seqs, &cond_marg);
    let a_cells = cond_marg.cells();
    // free coordinates drawn i.i.d. from their unconditional marginal
    let free_marg = p.marginal(&free_axes)?;
    let b_cells = free_marg.cells();
    let ln_q: Vec<f64> = free_marg
        .mass()
        .iter()
        .map(|&v| if v > 0.0 { v.ln() } else { f64::NEG_INFINITY })
        .collect();

    let mut needed: u128 = 1;
    for &na in &cond_counts {
        needed = needed.saturating_mul(compositions_count(na as usize, b_cells));
        if needed > crate::prob::TABLE_CELL_CAP as u128 {
            return Err(Error::EnumerationBudget { needed, budget: crate::prob::TABLE_CELL_CAP });
        }
    }

    let lf = ln_factorials(n);

    // map (a-cell, b-cell) to a flat cell of p, respecting axis positions
    let full_sizes: Vec<usize> = (0..p.num_axes()).map(|a| p.axis_size(a)).collect();
    let full_strides = {
        let mut strides = vec![1usize; full_sizes.len()];
        for i in (0..full_sizes.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * full_sizes[i + 1];
        }
        strides
    };
    let cell_of = |a_flat: usize, b_flat: usize| -> usize {
        let mut rem_a = a_flat;
        let mut rem_b = b_flat;
        let mut flat = 0usize;
        for (k, &axis) in cond_axes.iter().enumerate() {
            let size: usize = cond_axes[k + 1..].iter().map(|&x| p.axis_size(x)).product();
            let coord = rem_a / size.max(1);
            rem_a %= size.max(1);
            let _ = k;
            flat += coord * full_strides[axis];
        }
        for (k, &axis) in free_axes.iter().enumerate() {
            let size: usize = free_axes[k + 1..].iter().map(|&x| p.axis_size(x)).product();
            let coord = rem_b / size.max(1);
            rem_b %= size.max(1);
            flat += coord * full_strides[axis];
        }
        flat
    };

    // recursive product over conditioning cells of multinomial draws
    struct Ctx<'a> {
        p: &'a ProbabilityTable,
        params: &'a TypicalityParams,
        lf: &'a [f64],
        ln_q: &'a [f64],
        cond_counts: &'a [u32],
        b_cells: usize,
        joint_counts: Vec<u32>,
        cell_of: Box<dyn Fn(usize, usize) -> usize + 'a>,
        total: f64,
    }
    fn per_group(ctx: &mut Ctx, a: usize, ln_acc: f64) {
        let a_cells = ctx.cond_counts.len();
        if a == a_cells {
            let counts32: Vec<u32> = ctx.joint_counts.clone();
            let v = verdict_from_counts(&counts32, ctx.p, ctx.params);
            if v.is_typical {
                ctx.total += ln_acc.exp();
            }
            return;
        }
        let na = ctx.cond_counts[a] as usize;
        // compositions of na over b cells
        fn comp(ctx: &mut Ctx, a: usize, b: usize, remaining: usize, ln_acc: f64) {
            let last = ctx.b_cells - 1;
            if b == last {
                let c = remaining;
                if c > 0 && ctx.ln_q[b] == f64::NEG_INFINITY {
                    return;
                }
                let cell = (ctx.cell_of)(a, b);
                ctx.joint_counts[cell] += c as u32;
                let ln_term = if c > 0 { c as f64 * ctx.ln_q[b] - ctx.lf[c] } else { 0.0 };
                per_group(ctx, a + 1, ln_acc + ln_term);
                ctx.joint_counts[cell] -= c as u32;
                return;
            }
            for c in 0..=remaining {
                if c > 0 && ctx.ln_q[b] == f64::NEG_INFINITY {
                    break;
                }
                let cell = (ctx.cell_of)(a, b);
                ctx.joint_counts[cell] += c as u32;
                let ln_term = if c > 0 { c as f64 * ctx.ln_q[b] - ctx.lf[c] } else { 0.0 };
                comp(ctx, a, b + 1, remaining - c, ln_acc + ln_term);
                ctx.joint_counts[cell] -= c as u32;
            }
        }
        let ln_multi = ctx.lf[na];
        comp(ctx, a, 0, na, ln_acc + ln_multi);
    }

    let mut ctx = Ctx {
        p,
        params,
        lf: &lf,
        ln_q: &ln_q,
        cond_counts: &cond_counts,
        b_cells,
        joint_counts: vec![0u32; p.cells()],
        cell_of: Box::new(cell_of),
        total: 0.0,
    };
    let _ = a_cells;
    per_group(&mut ctx, 0, 0.0);
    Ok(ctx.total.min(1.0))
}

/// A sequence whose empirical type is as close as possible to the marginal
/// (largest-remainder rounding), emitted as sorted runs. Deterministic.
pub fn closest_type_sequence(marginal: &ProbabilityTable, n: usize) -> Result<SymbolSequence> {
    if marginal.num_axes() != 1 {
        return Err(Error::DimensionMismatch("closest type sequence needs a one-axis marginal".into()));
    }
    let m = marginal.cells();
    let ideal: Vec<f64> = marginal.mass().iter().map(|&p| p * n as f64).collect();
    let mut counts: Vec<usize> = ideal.iter().map(|&x| x.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        let ra = ideal[a] - ideal[a].floor();
        let rb = ideal[b] - ideal[b].floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for k in 0..(n - assigned) {
        counts[order[k % m]] += 1;
    }
    let mut symbols = Vec::with_capacity(n);
    for (sym, &c) in counts.iter().enumerate() {
        symbols.extend(std::iter::repeat(sym as u32).take(c));
    }
    SymbolSequence::new(symbols, m)
}

/// Sandwich check output: the exact conditional joint-typicality
/// probability together with the smallest epsilon1 making both exponential
/// bounds hold.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SandwichReport {
    pub probability: f64,
    pub bounds: SandwichBounds,
    pub epsilon1: f64,
    pub n: usize,
    pub mutual_information: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SandwichBounds {
    pub lower: f64,
    pub upper: f64,
}

/// Exact conditional joint-typicality probability for a fixed first block
/// and an i.i.d. draw of the second from its marginal, reported against
/// 2^{-n(I±eps1)} with the smallest valid eps1.
pub fn check_sandwich_bounds(
    joint: &ProbabilityTable,
    cond_axes: &[usize],
    cond_seqs: &[SymbolSequence],
    params: &TypicalityParams,
) -> Result<SandwichReport> {
    let cond_marg = joint.marginal(cond_axes)?;
    let verdict = is_strongly_typical(cond_seqs, &cond_marg, params)?;
    if !verdict.is_typical {
        return Err(Error::ConditionNotTypical { deviation: verdict.max_deviation });
    }
    let free_axes: Vec<usize> = (0..joint.num_axes()).filter(|a| !cond_axes.contains(a)).collect();
    let info = joint.mutual_information(cond_axes, &free_axes)?;
    let prob = exact_typicality_probability(joint, params, Some((cond_axes, cond_seqs)))?;
    let n = params.block_length as f64;
    let epsilon1 = if prob > 0.0 { (-prob.log2() / n - info).abs() } else { f64::INFINITY };
    let lower = (2.0f64).powf(-n * (info + epsilon1));
    let upper = (2.0f64).powf(-n * (info - epsilon1));
    Ok(SandwichReport {
        probability: prob,
        bounds: SandwichBounds { lower, upper },
        epsilon1,
        n: params.block_length,
        mutual_information: info,
    })
}

/// Monte-Carlo Markov-lemma check along a schedule of block lengths.
#[derive(Debug, Clone, Serialize)]
pub struct MarkovLemmaReport {
    pub lengths: Vec<usize>,
    /// Pr{triple atypical | both required pairs typical} per length.
    pub conditional_failure: Vec<f64>,
    /// Count of trials where the conditioning event held, per length.
    pub conditioned_trials: Vec<usize>,
    pub trials: usize,
    pub epsilon: f64,
    pub seed: u64,
}

/// Estimates Pr{(Y1,Y2,Z1) triple atypical | (Y1,Y2) typical and (Y1,Z1)
/// typical} for a chain Z1 <- Y1 -> Y2, for each length in the schedule.
pub fn check_markov_lemma(
    source_pair: &ProbabilityTable,
    aux: &crate::prob::ConditionalTable,
    epsilon: f64,
    lengths: &[usize],
    trials: usize,
    seed: u64,
) -> Result<MarkovLemmaReport> {
    if source_pair.num_axes() != 2 {
        return Err(Error::DimensionMismatch("markov lemma check expects a two-axis source".into()));
    }
    if aux.cond_cells() != source_pair.axis_size(0) {
        return Err(Error::DimensionMismatch("aux channel must condition on Y1".into()));
    }
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    // three-way law p(y1,y2) q(z|y1)
    let zc = aux.out_cells();
    let s1 = source_pair.axis_size(0);
    let s2 = source_pair.axis_size(1);
    let mut mass = vec![0.0f64; s1 * s2 * zc];
    for a in 0..s1 {
        for b in 0..s2 {
            let pab = source_pair.mass()[a * s2 + b];
            for (c, &q) in aux.row(a).iter().enumerate() {
                mass[(a * s2 + b) * zc + c] = pab * q;
            }
        }
    }
    let triple = ProbabilityTable::from_sizes(&[s1, s2, zc], mass)?;
    let pair12 = triple.marginal(&[0, 1])?;
    let pair13 = triple.marginal(&[0, 2])?;

    let mut conditional = Vec::with_capacity(lengths.len());
    let mut conditioned = Vec::with_capacity(lengths.len());
    for (li, &n) in lengths.iter().enumerate() {
        let params = TypicalityParams::new(epsilon, n)?;
        use rayon::prelude::*;
        let outcomes: Vec<(bool, bool)> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let stream = (li as u64) << 32 | t as u64;
                let seqs = triple.sample_iid_stream(n, seed, stream).unwrap();
                let v12 = is_strongly_typical(&seqs[0..2], &pair12, &params).unwrap();
                let v13 = is_strongly_typical(
                    &[seqs[0].clone(), seqs[2].clone()],
                    &pair13,
                    &params,
                )
                .unwrap();
                if v12.is_typical && v13.is_typical {
                    let v = is_strongly_typical(&seqs, &triple, &params).unwrap();
                    (true, !v.is_typical)
                } else {
                    (false, false)
                }
            })
            .collect();
        let cond = outcomes.iter().filter(|o| o.0).count();
        let fail = outcomes.iter().filter(|o| o.0 && o.1).count();
        conditioned.push(cond);
        conditional.push(if cond > 0 { fail as f64 / cond as f64 } else { 0.0 });
    }
    Ok(MarkovLemmaReport {
        lengths: lengths.to_vec(),
        conditional_failure: conditional,
        conditioned_trials: conditioned,
        trials,
        epsilon,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::ConditionalTable;

    fn seq(bits: &[u32]) -> SymbolSequence {
        SymbolSequence::new(bits.to_vec(), 2).unwrap()
    }

    #[test]
    fn count_occurrences_examples() {
        let s = seq(&[0, 1, 1, 0]);
        assert_eq!(count_occurrences(&[s.clone()], &[0]).unwrap(), 2);
        let a = SymbolSequence::new(vec![0, 0, 0, 0], 1).unwrap();
        assert_eq!(count_occurrences(&[a], &[0]).unwrap(), 4);
        let x = seq(&[0, 1, 0]);
        let y = seq(&[1, 0, 1]);
        assert_eq!(count_occurrences(&[x, y], &[0, 1]).unwrap(), 2);
    }

    #[test]
    fn counts_sum_to_n() {
        let s = seq(&[0, 1, 1, 0, 1]);
        let total: usize = (0..2u32)
            .map(|sym| count_occurrences(std::slice::from_ref(&s), &[sym]).unwrap())
            .sum();
        assert_eq!(total, 5);
    }

    #[test]
    fn exact_type_is_typical_for_every_epsilon() {
        let p = ProbabilityTable::from_sizes(&[2], vec![0.5, 0.5]).unwrap();
        let s = seq(&[0, 0, 1, 1]);
        for eps in [1e-6, 0.01, 0.3, 2.0] {
            let params = TypicalityParams::new(eps, 4).unwrap();
            let v = is_strongly_typical(std::slice::from_ref(&s), &p, &params).unwrap();
            assert!(v.is_typical);
            assert_eq!(v.max_deviation, 0.0);
        }
    }

    #[test]
    fn all_zeros_under_uniform_is_atypical() {
        let p = ProbabilityTable::from_sizes(&[2], vec![0.5, 0.5]).unwrap();
        let s = seq(&[0, 0, 0, 0]);
        let params = TypicalityParams::new(0.1, 4).unwrap();
        let v = is_strongly_typical(std::slice::from_ref(&s), &p, &params).unwrap();
        assert!(!v.is_typical);
        // deviation 0.5 scaled by |X| = 2
        assert!((v.max_deviation - 1.0).abs() < 1e-15);
    }

    #[test]
    fn six_zeros_of_ten_typical_at_half() {
        let p = ProbabilityTable::from_sizes(&[2], vec![0.5, 0.5]).unwrap();
        let s = seq(&[0, 0, 0, 0, 0, 0, 1, 1, 1, 1]);
        let params = TypicalityParams::new(0.5, 10).unwrap();
        let v = is_strongly_typical(std::slice::from_ref(&s), &p, &params).unwrap();
        // deviation 0.1 scaled by 2 = 0.2 < 0.5
        assert!(v.is_typical);
    }

    #[test]
    fn monotone_in_epsilon() {
        let p = ProbabilityTable::dsbs(0.2).unwrap();
        let seqs = p.sample_iid(24, 3).unwrap();
        let mut last = false;
        for eps in [0.05, 0.1, 0.2, 0.4, 0.8, 1.6, 3.2] {
            let params = TypicalityParams::new(eps, 24).unwrap();
            let v = is_strongly_typical(&seqs, &p, &params).unwrap();
            assert!(!last || v.is_typical, "typicality lost when epsilon grew");
            last = v.is_typical;
        }
        assert!(last, "every sequence is typical once epsilon/|X| >= 1");
    }

    #[test]
    fn pair_tester_agrees_with_full_test() {
        let joint = ProbabilityTable::dsbs(0.25).unwrap();
        let params = TypicalityParams::new(0.6, 16).unwrap();
        let tester = PairTester::new(&joint, &params).unwrap();
        for t in 0..200u64 {
            let seqs = joint.sample_iid_stream(16, 9, t).unwrap();
            let fast = tester.typical(seqs[0].symbols(), seqs[1].symbols());
            let slow = is_strongly_typical(&seqs, &joint, &params).unwrap().is_typical;
            assert_eq!(fast, slow);
        }
    }

    #[test]
    fn huge_epsilon_probability_is_one() {
        let p = ProbabilityTable::dsbs(0.1).unwrap();
        let params = TypicalityParams::new(4.1, 6).unwrap();
        let prob = exact_typicality_probability(&p, &params, None).unwrap();
        assert!((prob - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identical_pair_conditional_probability_is_two_to_minus_n() {
        // Y = Z uniform binary: only z = y is jointly typical at small eps
        let p = ProbabilityTable::from_sizes(&[2, 2], vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        for n in [4usize, 8] {
            let marg = p.marginal(&[0]).unwrap();
            let y = closest_type_sequence(&marg, n).unwrap();
            // eps/|joint| <= 1/n: only the exact copy is jointly typical
            let params = TypicalityParams::new(0.5, n).unwrap();
            let prob =
                exact_typicality_probability(&p, &params, Some((&[0], std::slice::from_ref(&y))))
                    .unwrap();
            assert!(
                (prob - (0.5f64).powi(n as i32)).abs() < 1e-12,
                "n={n} prob={prob}"
            );
        }
    }

    #[test]
    fn exact_matches_monte_carlo() {
        let p = ProbabilityTable::dsbs(0.1).unwrap();
        let n = 12;
        let params = TypicalityParams::new(0.4, n).unwrap();
        let exact = exact_typicality_probability(&p, &params, None).unwrap();
        let trials = 20_000;
        let mut hits = 0usize;
        for t in 0..trials {
            let seqs = p.sample_iid_stream(n, 77, t as u64).unwrap();
            if is_strongly_typical(&seqs, &p, &params).unwrap().is_typical {
                hits += 1;
            }
        }
        let est = hits as f64 / trials as f64;
        let sigma = (exact * (1.0 - exact) / trials as f64).sqrt();
        assert!((est - exact).abs() < 3.0 * sigma + 1e-9, "est {est} exact {exact} sigma {sigma}");
    }

    #[test]
    fn trivial_conditioning_equals_unconditional() {
        let p = ProbabilityTable::dsbs(0.2).unwrap();
        let n = 10;
        let params = TypicalityParams::new(0.6, n).unwrap();
        let unc = exact_typicality_probability(&p, &params, None).unwrap();
        let cond = exact_typicality_probability(&p, &params, Some((&[], &[]))).unwrap();
        assert!((unc - cond).abs() < 1e-15);
    }

    #[test]
    fn sandwich_dsbs_epsilon1_shrinks_with_n() {
        let p = ProbabilityTable::dsbs(0.1).unwrap();
        let params8 = TypicalityParams::new(0.4, 8).unwrap();
        let params12 = TypicalityParams::new(0.4, 12).unwrap();
        let marg = p.marginal(&[0]).unwrap();
        let y8 = closest_type_sequence(&marg, 8).unwrap();
        let y12 = closest_type_sequence(&marg, 12).unwrap();
        let r8 = check_sandwich_bounds(&p, &[0], std::slice::from_ref(&y8), &params8).unwrap();
        let r12 = check_sandwich_bounds(&p, &[0], std::slice::from_ref(&y12), &params12).unwrap();
        assert!(r8.probability > 0.0 && r12.probability > 0.0);
        // hand-countable values: 25/256 and 49/4096
        assert!((r8.probability - 25.0 / 256.0).abs() < 1e-12);
        assert!((r12.probability - 49.0 / 4096.0).abs() < 1e-12);
        assert!(r12.epsilon1 < r8.epsilon1, "e1(12)={} e1(8)={}", r12.epsilon1, r8.epsilon1);
        for r in [&r8, &r12] {
            assert!(r.bounds.lower <= r.probability + 1e-15);
            assert!(r.probability <= r.bounds.upper + 1e-15);
        }
    }

    #[test]
    fn sandwich_identity_pair_zero_epsilon1_at_exact_type() {
        // Y = Z uniform binary: probability 2^-n and I = 1 give eps1 = 0
        let p = ProbabilityTable::from_sizes(&[2, 2], vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        let n = 8;
        let params = TypicalityParams::new(0.5, n).unwrap();
        let marg = p.marginal(&[0]).unwrap();
        let y = closest_type_sequence(&marg, n).unwrap();
        let r = check_sandwich_bounds(&p, &[0], std::slice::from_ref(&y), &params).unwrap();
        assert!(r.epsilon1 < 1e-12);
    }

    #[test]
    fn sandwich_independent_pair_low_info() {
        let p = ProbabilityTable::uniform(&[2, 2]).unwrap();
        let n = 8;
        let params = TypicalityParams::new(1.2, n).unwrap();
        let marg = p.marginal(&[0]).unwrap();
        let y = closest_type_sequence(&marg, n).unwrap();
        let r = check_sandwich_bounds(&p, &[0], std::slice::from_ref(&y), &params).unwrap();
        // I = 0: the sandwich collapses to [2^{-n eps1}, 1]
        assert!(r.probability <= 1.0);
        assert!(r.probability >= (2.0f64).powf(-(n as f64) * r.epsilon1) - 1e-12);
    }

    #[test]
    fn sandwich_rejects_atypical_conditioning() {
        let p = ProbabilityTable::dsbs(0.1).unwrap();
        let params = TypicalityParams::new(0.2, 8).unwrap();
        let bad = seq(&[0, 0, 0, 0, 0, 0, 0, 0]);
        let err = check_sandwich_bounds(&p, &[0], &[bad], &params).unwrap_err();
        assert!(matches!(err, Error::ConditionNotTypical { .. }));
    }

    #[test]
    fn markov_identity_channel_no_conditional_failures() {
        // z = y1 exactly; at eps small enough that pair typicality forces the
        // exact type, the triple is exact too, so conditional failures are 0.
        let p = ProbabilityTable::dsbs(0.25).unwrap();
        let aux = ConditionalTable::identity(2);
        let r = check_markov_lemma(&p, &aux, 0.5, &[8], 4000, 13).unwrap();
        assert!(r.conditioned_trials[0] > 0);
        assert_eq!(r.conditional_failure[0], 0.0);
    }

    #[test]
    fn markov_failure_estimate_monotone() {
        let p = ProbabilityTable::dsbs(0.25).unwrap();
        let aux = ConditionalTable::bsc(0.1).unwrap();
        let r = check_markov_lemma(&p, &aux, 0.8, &[8, 16, 24], 10_000, 29).unwrap();
        // allow 2 sigma of MC noise per step
        for w in 0..2 {
            let n0 = r.conditioned_trials[w].max(1) as f64;
            let p0 = r.conditional_failure[w];
            let sigma = (p0 * (1.0 - p0) / n0).sqrt();
            assert!(
                r.conditional_failure[w + 1] <= p0 + 2.0 * sigma + 1e-9,
                "failures {:?}",
                r.conditional_failure
            );
        }
    }

    #[test]
    fn markov_independent_y2() {
        // y2 independent of (y1, z1): triple typicality factorizes through
        // the pair events, so the conditional failure estimate must agree
        // with 1 - P(triple)/P(both pairs) and stay below twice it.
        let p = ProbabilityTable::uniform(&[2, 2]).unwrap();
        let aux = ConditionalTable::bsc(0.1).unwrap();
        let n = 16;
        let eps = 0.8;
        let trials = 10_000;
        let r = check_markov_lemma(&p, &aux, eps, &[n], trials, 31).unwrap();

        // exact triple typicality probability; pair event by Monte Carlo
        let mut mass = vec![0.0f64; 8];
        for a in 0..2usize {
            for b in 0..2usize {
                for c in 0..2usize {
                    mass[(a * 2 + b) * 2 + c] = 0.25 * aux.row(a)[c];
                }
            }
        }
        let triple = ProbabilityTable::from_sizes(&[2, 2, 2], mass).unwrap();
        let params = TypicalityParams::new(eps, n).unwrap();
        let p_triple = exact_typicality_probability(&triple, &params, None).unwrap();
        let pair12 = triple.marginal(&[0, 1]).unwrap();
        let pair13 = triple.marginal(&[0, 2]).unwrap();
        let mut both = 0usize;
        for t in 0..trials {
            let seqs = triple.sample_iid_stream(n, 95, t as u64).unwrap();
            let v12 = is_strongly_typical(&seqs[0..2], &pair12, &params).unwrap().is_typical;
            let v13 = is_strongly_typical(&[seqs[0].clone(), seqs[2].clone()], &pair13, &params)
                .unwrap()
                .is_typical;
            if v12 && v13 {
                both += 1;
            }
        }
        let p_pairs = both as f64 / trials as f64;
        let predicted = 1.0 - p_triple / p_pairs;
        let sigma = (predicted * (1.0 - predicted) / trials as f64).sqrt();
        let measured = r.conditional_failure[0];
        assert!(
            (measured - predicted).abs() < 4.0 * sigma + 0.01,
            "measured {measured} predicted {predicted}"
        );
        assert!(measured < 2.0 * predicted + 4.0 * sigma + 0.01);
    }
}
