//! Random typicality codebook: codewords drawn i.i.d. from the auxiliary
//! marginal, encoding by smallest jointly typical index, and a Monte-Carlo
//! harness for the coverage failure probability.

use crate::error::{Error, Result};
use crate::prob::{ProbabilityTable, SymbolSequence};
use crate::rng::stream_rng;
use crate::typicality::{closest_type_sequence, exact_typicality_probability, PairTester, TypicalityParams};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

/// Default cap on codebook size.
pub const DEFAULT_CODEBOOK_BUDGET: u64 = 1 << 26;

/// Codebook size K together with the window it was sized in.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CodeSizing {
    pub codebook_size: u64,
    pub rate_per_symbol: f64,
    pub epsilon1: f64,
    pub block_length: usize,
    /// The mutual information the size was derived from.
    pub target_info: f64,
}

/// K = ceil(2^{n'(I + 2 eps1)}), kept inside [n'(I+2e1), n'(I+3e1)] in log2.
pub fn choose_codebook_size(
    info_bits: f64,
    epsilon1: f64,
    n_prime: usize,
    budget: u64,
) -> Result<CodeSizing> {
    if info_bits < 0.0 || !info_bits.is_finite() {
        return Err(Error::InvalidParameter("information must be nonnegative".into()));
    }
    if epsilon1 <= 0.0 {
        return Err(Error::InvalidParameter("epsilon1 must be positive".into()));
    }
    if n_prime == 0 {
        return Err(Error::InvalidParameter("block length must be >= 1".into()));
    }
    let lower = n_prime as f64 * (info_bits + 2.0 * epsilon1);
    let upper = n_prime as f64 * (info_bits + 3.0 * epsilon1);
    if lower >= 63.0 || lower > (budget as f64).log2() + 1e-12 {
        return Err(Error::BudgetExceeded { required_log2: lower, budget_log2: (budget as f64).log2() });
    }
    let k = (2.0f64).powf(lower).ceil() as u64;
    if k > budget {
        return Err(Error::BudgetExceeded { required_log2: lower, budget_log2: (budget as f64).log2() });
    }
    let log2k = (k as f64).log2();
    if log2k > upper + 1e-9 {
        // the ceil overshot a window narrower than one codeword; a longer
        // block makes the window wide enough
        let minimal = (1.0 / epsilon1).ceil() as usize;
        return Err(Error::InfeasibleSizing { n_prime, minimal: minimal.max(n_prime + 1) });
    }
    Ok(CodeSizing {
        codebook_size: k,
        rate_per_symbol: log2k / n_prime as f64,
        epsilon1,
        block_length: n_prime,
        target_info: info_bits,
    })
}

/// K codewords of length n' drawn i.i.d. from a one-axis marginal.
#[derive(Debug, Clone)]
pub struct Codebook {
    n_prime: usize,
    k: usize,
    alphabet_size: usize,
    seed: u64,
    words: Vec<u32>,
}

impl Codebook {
    pub fn n_prime(&self) -> usize {
        self.n_prime
    }

    pub fn len(&self) -> usize {
        self.k
    }

    pub fn is_empty(&self) -> bool {
        self.k == 0
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Codeword by 1-based index.
    pub fn codeword(&self, index: usize) -> &[u32] {
        debug_assert!(index >= 1 && index <= self.k);
        &self.words[(index - 1) * self.n_prime..index * self.n_prime]
    }

    /// Assemble a codebook from explicit words (audits and tests).
    pub fn from_words(n_prime: usize, alphabet_size: usize, seed: u64, words: Vec<u32>) -> Result<Self> {
        if n_prime == 0 || words.len() % n_prime != 0 {
            return Err(Error::LengthMismatch { got: words.len(), expected: n_prime.max(1) });
        }
        for &s in &words {
            if s as usize >= alphabet_size {
                return Err(Error::SymbolOutOfRange { symbol: s, size: alphabet_size });
            }
        }
        let k = words.len() / n_prime;
        Ok(Self { n_prime, k, alphabet_size, seed, words })
    }
}

/// Reproducibility export: `{nPrime, K, seed, codewords}`.
impl Serialize for Codebook {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Codebook", 4)?;
        st.serialize_field("nPrime", &self.n_prime)?;
        st.serialize_field("K", &self.k)?;
        st.serialize_field("seed", &self.seed)?;
        let words: Vec<&[u32]> = (1..=self.k).map(|i| self.codeword(i)).collect();
        st.serialize_field("codewords", &words)?;
        st.end()
    }
}

/// Draw the codebook for a sizing; deterministic in (sizing, marginal, seed).
pub fn generate_codebook(
    sizing: &CodeSizing,
    marginal: &ProbabilityTable,
    seed: u64,
) -> Result<Codebook> {
    if marginal.num_axes() != 1 {
        return Err(Error::DimensionMismatch("codebook marginal must be one-axis".into()));
    }
    let k = sizing.codebook_size as usize;
    let n = sizing.block_length;
    let cum = marginal.cumulative();
    let mut rng = stream_rng(seed, 0);
    let mut words = Vec::with_capacity(k * n);
    for _ in 0..k * n {
        words.push(crate::prob::draw_from_cumulative(&cum, rng.gen::<f64>()) as u32);
    }
    Ok(Codebook { n_prime: n, k, alphabet_size: marginal.axis_size(0), seed, words })
}

/// Encoding outcome: the smallest jointly typical index, or index 1 with
/// `covered = false` when no codeword qualifies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EncodeResult {
    /// 1-based codeword index.
    pub index: usize,
    pub covered: bool,
}

/// Scan codewords in index order and return the first jointly typical one.
pub fn encode(
    codebook: &Codebook,
    input: &SymbolSequence,
    joint: &ProbabilityTable,
    params: &TypicalityParams,
) -> Result<EncodeResult> {
    if input.len() != codebook.n_prime() {
        return Err(Error::LengthMismatch { got: input.len(), expected: codebook.n_prime() });
    }
    if joint.num_axes() != 2
        || joint.axis_size(0) != input.alphabet_size()
        || joint.axis_size(1) != codebook.alphabet_size()
    {
        return Err(Error::DimensionMismatch("joint law must cover (input, codeword) alphabets".into()));
    }
    let tester = PairTester::new(joint, params)?;
    let mut scratch = vec![0u32; tester.y_size() * tester.z_size()];
    for i in 1..=codebook.len() {
        if tester.typical_scratch(input.symbols(), codebook.codeword(i), &mut scratch) {
            return Ok(EncodeResult { index: i, covered: true });
        }
    }
    Ok(EncodeResult { index: 1, covered: false })
}

/// Monte-Carlo estimate of the joint-typicality failure probability of one
/// realized codebook.
#[derive(Debug, Clone, Serialize)]
pub struct PointCodeReport {
    pub n_prime: usize,
    pub trials: usize,
    pub failures: usize,
    pub failure_rate: f64,
    pub sigma: f64,
    pub rate_bits_per_symbol: f64,
    /// eps' + exp(-2^{n' eps1}), the proof-side ceiling for the failure rate.
    pub theoretical_bound: f64,
    /// Whether the per-codeword hit probability at a closest-type input
    /// reaches the 2^{-n'(I+eps1)} floor the ceiling assumes.
    pub bound_assumption_holds: bool,
    pub seed: u64,
}

/// Runs `trials` fresh inputs against one codebook drawn from the sizing.
pub fn simulate_point_code(
    joint: &ProbabilityTable,
    sizing: &CodeSizing,
    params: &TypicalityParams,
    trials: usize,
    seed: u64,
) -> Result<PointCodeReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    if joint.num_axes() != 2 {
        return Err(Error::DimensionMismatch("point-code model must be a two-axis joint".into()));
    }
    if params.block_length != sizing.block_length {
        return Err(Error::LengthMismatch { got: params.block_length, expected: sizing.block_length });
    }
    let marginal_y = joint.marginal(&[0])?;
    let marginal_z = joint.marginal(&[1])?;
    let codebook = generate_codebook(sizing, &marginal_z, seed)?;
    let tester = PairTester::new(joint, params)?;
    let n = sizing.block_length;

    let outcomes: Vec<bool> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let input = marginal_y.sample_iid_stream(n, seed, 1 + t as u64).unwrap();
            let y = &input[0];
            let mut scratch = vec![0u32; tester.y_size() * tester.z_size()];
            (1..=codebook.len())
                .any(|i| tester.typical_scratch(y.symbols(), codebook.codeword(i), &mut scratch))
        })
        .collect();
    let failures = outcomes.iter().filter(|&&covered| !covered).count();
    let failure_rate = failures as f64 / trials as f64;
    let sigma = (failure_rate * (1.0 - failure_rate) / trials as f64).sqrt();

    // exact per-codeword hit probability at a closest-type input
    let y_type = closest_type_sequence(&marginal_y, n)?;
    let hit = exact_typicality_probability(joint, params, Some((&[0], std::slice::from_ref(&y_type))))?;
    let floor = (2.0f64).powf(-(n as f64) * (sizing.target_info + sizing.epsilon1));
    let bound_assumption_holds = hit >= floor;
    let theoretical_bound =
        params.epsilon + (-((2.0f64).powf(n as f64 * sizing.epsilon1))).exp();

    Ok(PointCodeReport {
        n_prime: n,
        trials,
        failures,
        failure_rate,
        sigma,
        rate_bits_per_symbol: sizing.rate_per_symbol,
        theoretical_bound,
        bound_assumption_holds,
        seed,
    })
}

/// One report per block length, each with its own sized codebook.
pub fn run_point_schedule(
    joint: &ProbabilityTable,
    epsilon1: f64,
    epsilon_typicality: f64,
    schedule: &[usize],
    trials: usize,
    seed: u64,
    budget: u64,
) -> Result<Vec<PointCodeReport>> {
    let info = joint.mutual_information(&[0], &[1])?;
    schedule
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let sizing = choose_codebook_size(info, epsilon1, n, budget)?;
            let params = TypicalityParams::new(epsilon_typicality, n)?;
            simulate_point_code(joint, &sizing, &params, trials, seed.wrapping_add(i as u64))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::monotone_nonincreasing_within;

    #[test]
    fn sizing_arithmetic_examples() {
        let s = choose_codebook_size(0.5, 0.05, 20, DEFAULT_CODEBOOK_BUDGET).unwrap();
        assert_eq!(s.codebook_size, 4096);
        let log2k = (s.codebook_size as f64).log2();
        assert!((12.0..=13.0).contains(&log2k));

        let s = choose_codebook_size(0.0, 0.05, 20, DEFAULT_CODEBOOK_BUDGET).unwrap();
        assert_eq!(s.codebook_size, 4);

        let err = choose_codebook_size(1.0, 0.05, 40, DEFAULT_CODEBOOK_BUDGET).unwrap_err();
        match err {
            Error::BudgetExceeded { required_log2, .. } => assert!(required_log2 >= 44.0 - 1e-9),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn sizing_rate_within_window() {
        for info in [0.1, 0.53, 1.0] {
            for n in [8usize, 12, 16, 24] {
                let s = choose_codebook_size(info, 0.1, n, 1 << 40).unwrap();
                assert!(s.rate_per_symbol <= info + 3.0 * 0.1 + 1e-9);
                assert!(s.rate_per_symbol >= info + 2.0 * 0.1 - 1e-9);
            }
        }
    }

    #[test]
    fn point_mass_marginal_gives_constant_codewords() {
        let marginal = ProbabilityTable::from_sizes(&[3], vec![0.0, 0.0, 1.0]).unwrap();
        let sizing = choose_codebook_size(0.0, 0.1, 5, DEFAULT_CODEBOOK_BUDGET).unwrap();
        let cb = generate_codebook(&sizing, &marginal, 3).unwrap();
        for i in 1..=cb.len() {
            assert!(cb.codeword(i).iter().all(|&s| s == 2));
        }
    }

    #[test]
    fn same_seed_same_codebook() {
        let marginal = ProbabilityTable::from_sizes(&[2], vec![0.5, 0.5]).unwrap();
        let sizing = choose_codebook_size(0.5, 0.1, 10, DEFAULT_CODEBOOK_BUDGET).unwrap();
        let a = generate_codebook(&sizing, &marginal, 9).unwrap();
        let b = generate_codebook(&sizing, &marginal, 9).unwrap();
        assert_eq!(a.words, b.words);
        let c = generate_codebook(&sizing, &marginal, 10).unwrap();
        assert_ne!(a.words, c.words);
    }

    #[test]
    fn pooled_codeword_frequency_near_half() {
        let marginal = ProbabilityTable::from_sizes(&[2], vec![0.5, 0.5]).unwrap();
        // K * n' = 2^16 * 16 > 1e6 symbols
        let sizing = choose_codebook_size(0.8, 0.1, 16, DEFAULT_CODEBOOK_BUDGET).unwrap();
        let cb = generate_codebook(&sizing, &marginal, 17).unwrap();
        let total = cb.words.len() as f64;
        let ones = cb.words.iter().filter(|&&s| s == 1).count() as f64;
        assert!((ones / total - 0.5).abs() < 0.005);
    }

    #[test]
    fn encode_picks_smallest_typical_index() {
        // identity-style joint: typicality at tiny margin means equality
        let joint = ProbabilityTable::from_sizes(&[2, 2], vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        let n = 4;
        let params = TypicalityParams::new(0.9, n).unwrap();
        let input = SymbolSequence::new(vec![0, 1, 0, 1], 2).unwrap();
        // hand-built codebook: mismatch, match at 2 and at 4
        let words = vec![
            0, 0, 0, 0, //
            0, 1, 0, 1, //
            1, 1, 1, 1, //
            0, 1, 0, 1,
        ];
        let cb = Codebook { n_prime: n, k: 4, alphabet_size: 2, seed: 0, words };
        let r = encode(&cb, &input, &joint, &params).unwrap();
        assert_eq!(r, EncodeResult { index: 2, covered: true });
    }

    #[test]
    fn encode_fallback_when_uncovered() {
        let joint = ProbabilityTable::from_sizes(&[2, 2], vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        let n = 4;
        let params = TypicalityParams::new(0.9, n).unwrap();
        let input = SymbolSequence::new(vec![0, 1, 0, 1], 2).unwrap();
        let cb = Codebook { n_prime: n, k: 1, alphabet_size: 2, seed: 0, words: vec![1, 1, 1, 1] };
        let r = encode(&cb, &input, &joint, &params).unwrap();
        assert_eq!(r, EncodeResult { index: 1, covered: false });
    }

    #[test]
    fn atypical_input_is_never_covered() {
        let joint = ProbabilityTable::dsbs(0.1).unwrap();
        let n = 8;
        let params = TypicalityParams::new(0.3, n).unwrap();
        // all-zeros input is atypical for the uniform marginal at eps 0.3
        let input = SymbolSequence::new(vec![0; n], 2).unwrap();
        let marginal = joint.marginal(&[1]).unwrap();
        let sizing = choose_codebook_size(0.531, 0.1, n, DEFAULT_CODEBOOK_BUDGET).unwrap();
        let cb = generate_codebook(&sizing, &marginal, 5).unwrap();
        let r = encode(&cb, &input, &joint, &params).unwrap();
        assert!(!r.covered);
    }

    #[test]
    fn failure_rate_monotone_on_schedule() {
        // uniform binary source through a BSC(0.25) auxiliary
        let joint = ProbabilityTable::dsbs(0.25).unwrap();
        let reports =
            run_point_schedule(&joint, 0.05, 0.4, &[8, 12, 16], 4000, 1234, DEFAULT_CODEBOOK_BUDGET)
                .unwrap();
        let rates: Vec<f64> = reports.iter().map(|r| r.failure_rate).collect();
        assert!(monotone_nonincreasing_within(&rates, 4000, 2.0), "rates {rates:?}");
        for r in &reports {
            if r.bound_assumption_holds {
                assert!(r.failure_rate <= r.theoretical_bound + 3.0 * r.sigma, "{r:?}");
            }
        }
    }

    #[test]
    fn tiny_codebook_fails_badly_when_info_is_high() {
        // Y = Z uniform binary (I = 1) with K = 2
        let joint = ProbabilityTable::from_sizes(&[2, 2], vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        let n = 16;
        let params = TypicalityParams::new(0.3, n).unwrap();
        let sizing = CodeSizing {
            codebook_size: 2,
            rate_per_symbol: 1.0 / n as f64,
            epsilon1: 0.05,
            block_length: n,
            target_info: 1.0,
        };
        let r = simulate_point_code(&joint, &sizing, &params, 4000, 99).unwrap();
        assert!(r.failure_rate > 0.9, "failure rate {}", r.failure_rate);
    }

    #[test]
    fn identity_channel_covered_inputs_reproduce_themselves() {
        // Z = Y uniform binary at rate above H(Y); typicality at margin
        // eps/4 <= 1/n forces the chosen codeword to equal the input.
        let joint = ProbabilityTable::from_sizes(&[2, 2], vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        let n = 8;
        let params = TypicalityParams::new(0.5, n).unwrap();
        let sizing = choose_codebook_size(1.0, 0.25, n, DEFAULT_CODEBOOK_BUDGET).unwrap();
        let marginal = joint.marginal(&[1]).unwrap();
        let cb = generate_codebook(&sizing, &marginal, 11).unwrap();
        let y_marg = joint.marginal(&[0]).unwrap();
        let mut covered_seen = false;
        for t in 0..200 {
            let input = y_marg.sample_iid_stream(n, 4, t).unwrap();
            let r = encode(&cb, &input[0], &joint, &params).unwrap();
            if r.covered {
                covered_seen = true;
                assert_eq!(cb.codeword(r.index), input[0].symbols());
            }
        }
        assert!(covered_seen);
    }

    #[test]
    fn codebook_json_export_shape() {
        let marginal = ProbabilityTable::from_sizes(&[2], vec![0.5, 0.5]).unwrap();
        let sizing = choose_codebook_size(0.2, 0.1, 4, DEFAULT_CODEBOOK_BUDGET).unwrap();
        let cb = generate_codebook(&sizing, &marginal, 1).unwrap();
        let v: serde_json::Value = serde_json::to_value(&cb).unwrap();
        assert_eq!(v["nPrime"], 4);
        assert_eq!(v["K"], cb.len());
        assert_eq!(v["codewords"].as_array().unwrap().len(), cb.len());
    }
}
