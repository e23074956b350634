//! Random binning over a typicality codebook: the encoder sends only the
//! bin of its chosen codeword, the decoder resolves the bin by unique joint
//! typicality with side information, and every trial is classified into the
//! four error events plus the overall failure.

use crate::codes::point::{generate_codebook, Codebook};
use crate::error::{Error, Result};
use crate::prob::{ConditionalTable, ProbabilityTable, SymbolSequence};
use crate::rng::stream_rng;
use crate::typicality::{PairTester, TypicalityParams};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

/// Inner codebook size K1 and bin count K2, both powers of two, sized from
/// the two information quantities of the scheme.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BinSizing {
    pub k1: u64,
    pub k2: u64,
    pub epsilon1: f64,
    pub epsilon4: f64,
    pub block_length: usize,
    pub info_y1z1: f64,
    pub info_y2z1: f64,
    /// log2(K2)/n', the rate actually spent on the bin index.
    pub rate_bits_per_symbol: f64,
}

/// log2 K1 = ceil(n'(I(Y1;Z1)+2e1)); log2 K1 - log2 K2 = floor(n'(I(Y2;Z1)-2e4)),
/// clamped at zero when side information is too weak to pay for binning.
pub fn choose_bin_sizes(
    info_y1z1: f64,
    info_y2z1: f64,
    epsilon1: f64,
    epsilon4: f64,
    n_prime: usize,
    budget: u64,
) -> Result<BinSizing> {
    if info_y1z1 < 0.0 || info_y2z1 < 0.0 {
        return Err(Error::InvalidParameter("information quantities must be nonnegative".into()));
    }
    if epsilon1 <= 0.0 || epsilon4 <= 0.0 {
        return Err(Error::InvalidParameter("epsilons must be positive".into()));
    }
    if n_prime == 0 {
        return Err(Error::InvalidParameter("block length must be >= 1".into()));
    }
    let n = n_prime as f64;
    let lo1 = n * (info_y1z1 + 2.0 * epsilon1);
    let hi1 = n * (info_y1z1 + 3.0 * epsilon1);
    let log2_k1 = lo1.ceil();
    if log2_k1 > hi1 + 1e-9 {
        let minimal = (1.0 / epsilon1).ceil() as usize;
        return Err(Error::InfeasibleSizing { n_prime, minimal: minimal.max(n_prime + 1) });
    }
    if log2_k1 >= 63.0 || log2_k1 > (budget as f64).log2() + 1e-12 {
        return Err(Error::BudgetExceeded { required_log2: log2_k1, budget_log2: (budget as f64).log2() });
    }
    let k1: u64 = 1 << (log2_k1 as u32);

    let gap_hi = n * (info_y2z1 - 2.0 * epsilon4);
    let gap_lo = n * (info_y2z1 - 3.0 * epsilon4);
    let gap = gap_hi.floor().max(0.0);
    if gap_hi > 0.0 && gap + 1e-9 < gap_lo {
        let minimal = (1.0 / epsilon4).ceil() as usize;
        return Err(Error::InfeasibleSizing { n_prime, minimal: minimal.max(n_prime + 1) });
    }
    let gap = (gap as u32).min(log2_k1 as u32);
    let k2 = k1 >> gap;
    Ok(BinSizing {
        k1,
        k2,
        epsilon1,
        epsilon4,
        block_length: n_prime,
        info_y1z1,
        info_y2z1,
        rate_bits_per_symbol: (k2 as f64).log2() / n,
    })
}

/// Inner codebook plus a uniformly random map from codeword indices to
/// bins, indexed both ways for O(bin size) decoding.
#[derive(Debug, Clone)]
pub struct BinnedCodebook {
    inner: Codebook,
    bins: Vec<u32>, // 0-based bin per codeword
    /// 1-based codeword indices grouped by bin (CSR layout).
    members: Vec<u32>,
    offsets: Vec<u32>,
    k2: usize,
    seed: u64,
}

impl BinnedCodebook {
    fn build(inner: Codebook, bins: Vec<u32>, k2: usize, seed: u64) -> Self {
        let mut offsets = vec![0u32; k2 + 1];
        for &b in &bins {
            offsets[b as usize + 1] += 1;
        }
        for i in 0..k2 {
            offsets[i + 1] += offsets[i];
        }
        let mut cursor = offsets.clone();
        let mut members = vec![0u32; bins.len()];
        for (i, &b) in bins.iter().enumerate() {
            members[cursor[b as usize] as usize] = (i + 1) as u32;
            cursor[b as usize] += 1;
        }
        Self { inner, bins, members, offsets, k2, seed }
    }

    pub fn inner(&self) -> &Codebook {
        &self.inner
    }

    pub fn num_bins(&self) -> usize {
        self.k2
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Bin of a codeword, both 1-based.
    pub fn bin_of(&self, index: usize) -> usize {
        self.bins[index - 1] as usize + 1
    }

    /// 1-based codeword indices mapped to the given 1-based bin, ascending.
    pub fn bin_members(&self, bin: usize) -> impl Iterator<Item = usize> + '_ {
        let lo = self.offsets[bin - 1] as usize;
        let hi = self.offsets[bin] as usize;
        self.members[lo..hi].iter().map(|&i| i as usize)
    }
}

/// Codebook stream 0 of the seed, bin map stream 1.
pub fn generate_binned_codebook(
    sizing: &BinSizing,
    marginal_z1: &ProbabilityTable,
    seed: u64,
) -> Result<BinnedCodebook> {
    let point_sizing = crate::codes::point::CodeSizing {
        codebook_size: sizing.k1,
        rate_per_symbol: (sizing.k1 as f64).log2() / sizing.block_length as f64,
        epsilon1: sizing.epsilon1,
        block_length: sizing.block_length,
        target_info: sizing.info_y1z1,
    };
    let inner = generate_codebook(&point_sizing, marginal_z1, seed)?;
    let mut rng = stream_rng(seed, 1);
    let bins: Vec<u32> = (0..sizing.k1).map(|_| rng.gen_range(0..sizing.k2 as u32)).collect();
    Ok(BinnedCodebook::build(inner, bins, sizing.k2 as usize, seed))
}

/// Encoder output: the bin of the smallest jointly typical codeword.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BinnedEncodeResult {
    /// 1-based bin index.
    pub bin: usize,
    pub covered: bool,
    /// 1-based inner codeword index the encoder settled on (diagnostic).
    pub inner_index: usize,
}

pub fn binned_encode(
    codebook: &BinnedCodebook,
    input: &SymbolSequence,
    joint_y1z1: &ProbabilityTable,
    params: &TypicalityParams,
) -> Result<BinnedEncodeResult> {
    let r = crate::codes::point::encode(codebook.inner(), input, joint_y1z1, params)?;
    Ok(BinnedEncodeResult { bin: codebook.bin_of(r.index), covered: r.covered, inner_index: r.index })
}

/// Decoder outcome: the unique in-bin candidate, or the failure kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DecodeOutcome {
    /// 1-based codeword index.
    Decoded(usize),
    NoCandidate,
    MultipleCandidates,
}

/// Unique joint typicality with the side-information word inside one bin.
pub fn binned_decode(
    codebook: &BinnedCodebook,
    bin: usize,
    side_info: &SymbolSequence,
    joint_y2z1: &ProbabilityTable,
    params: &TypicalityParams,
) -> Result<DecodeOutcome> {
    if bin == 0 || bin > codebook.num_bins() {
        return Err(Error::InvalidParameter(format!(
            "bin index {bin} outside 1..={}",
            codebook.num_bins()
        )));
    }
    if side_info.len() != codebook.inner().n_prime() {
        return Err(Error::LengthMismatch {
            got: side_info.len(),
            expected: codebook.inner().n_prime(),
        });
    }
    let tester = PairTester::new(joint_y2z1, params)?;
    let mut scratch = vec![0u32; tester.y_size() * tester.z_size()];
    let mut found: Option<usize> = None;
    for i in codebook.bin_members(bin) {
        if tester.typical_scratch(side_info.symbols(), codebook.inner().codeword(i), &mut scratch) {
            if found.is_some() {
                return Ok(DecodeOutcome::MultipleCandidates);
            }
            found = Some(i);
        }
    }
    Ok(match found {
        Some(i) => DecodeOutcome::Decoded(i),
        None => DecodeOutcome::NoCandidate,
    })
}

/// Per-event counts over a simulation run. `overall` counts trials whose
/// decoded triple is atypical; `union_violations` counts trials where the
/// overall error escaped all four events (always 0 by construction).
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct ErrorEventTally {
    pub e0: usize,
    pub e1: usize,
    pub e2: usize,
    pub e3: usize,
    pub overall: usize,
    pub trials: usize,
    pub union_violations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct BinnedCodeReport {
    pub n_prime: usize,
    pub tally: ErrorEventTally,
    pub overall_rate: f64,
    pub sigma: f64,
    pub rate_bits_per_symbol: f64,
    pub seed: u64,
}

/// Full encode/decode loop on a source pair with one auxiliary channel on
/// the first terminal (chain Z1 <- Y1 -> Y2).
pub fn simulate_binned_code(
    source_pair: &ProbabilityTable,
    aux1: &ConditionalTable,
    sizing: &BinSizing,
    params: &TypicalityParams,
    trials: usize,
    seed: u64,
) -> Result<BinnedCodeReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    if source_pair.num_axes() != 2 {
        return Err(Error::DimensionMismatch("source pair must be a two-axis table".into()));
    }
    if aux1.cond_cells() != source_pair.axis_size(0) {
        return Err(Error::DimensionMismatch("aux channel must condition on Y1".into()));
    }
    if params.block_length != sizing.block_length {
        return Err(Error::LengthMismatch { got: params.block_length, expected: sizing.block_length });
    }
    let n = sizing.block_length;
    let s1 = source_pair.axis_size(0);
    let s2 = source_pair.axis_size(1);
    let zc = aux1.out_cells();

    // three-way law and its pair/triple views
    let mut mass = vec![0.0f64; s1 * s2 * zc];
    for a in 0..s1 {
        for b in 0..s2 {
            let pab = source_pair.mass()[a * s2 + b];
            for (c, &q) in aux1.row(a).iter().enumerate() {
                mass[(a * s2 + b) * zc + c] = pab * q;
            }
        }
    }
    let triple = ProbabilityTable::from_sizes(&[s1, s2, zc], mass)?;
    let joint_y1z1 = triple.marginal(&[0, 2])?;
    let joint_y2z1 = triple.marginal(&[1, 2])?;
    let marginal_z1 = triple.marginal(&[2])?;
    let codebook = generate_binned_codebook(sizing, &marginal_z1, seed)?;
    let pair_tester = PairTester::new(source_pair, params)?;

    #[derive(Clone, Copy, Default)]
    struct TrialEvents {
        e0: bool,
        e1: bool,
        e2: bool,
        e3: bool,
        overall: bool,
    }

    let events: Vec<TrialEvents> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let seqs = source_pair.sample_iid_stream(n, seed, 2 + t as u64).unwrap();
            let (y1, y2) = (&seqs[0], &seqs[1]);
            let mut ev = TrialEvents::default();
            ev.e0 = !pair_tester.typical(y1.symbols(), y2.symbols());
            let enc = binned_encode(&codebook, y1, &joint_y1z1, params).unwrap();
            ev.e1 = !enc.covered;
            let chosen = codebook.inner().codeword(enc.inner_index);
            let chosen_seq = SymbolSequence::new(chosen.to_vec(), zc).unwrap();
            let triple_ok = crate::typicality::is_strongly_typical(
                &[y1.clone(), y2.clone(), chosen_seq],
                &triple,
                params,
            )
            .unwrap()
            .is_typical;
            ev.e2 = !triple_ok;
            let decode = binned_decode(&codebook, enc.bin, y2, &joint_y2z1, params).unwrap();
            ev.e3 = matches!(decode, DecodeOutcome::MultipleCandidates);
            let resolved = match decode {
                DecodeOutcome::Decoded(i) => i,
                _ => 1, // arbitrary assignment resolved deterministically
            };
            let z_hat = SymbolSequence::new(codebook.inner().codeword(resolved).to_vec(), zc).unwrap();
            ev.overall = !crate::typicality::is_strongly_typical(
                &[y1.clone(), y2.clone(), z_hat],
                &triple,
                params,
            )
            .unwrap()
            .is_typical;
            ev
        })
        .collect();

    let mut tally = ErrorEventTally { trials, ..Default::default() };
    for ev in &events {
        tally.e0 += ev.e0 as usize;
        tally.e1 += ev.e1 as usize;
        tally.e2 += ev.e2 as usize;
        tally.e3 += ev.e3 as usize;
        tally.overall += ev.overall as usize;
        if ev.overall && !(ev.e0 || ev.e1 || ev.e2 || ev.e3) {
            tally.union_violations += 1;
        }
    }
    let overall_rate = tally.overall as f64 / trials as f64;
    Ok(BinnedCodeReport {
        n_prime: n,
        tally,
        overall_rate,
        sigma: (overall_rate * (1.0 - overall_rate) / trials as f64).sqrt(),
        rate_bits_per_symbol: sizing.rate_bits_per_symbol,
        seed,
    })
}

/// One report per block length with freshly sized codebooks.
pub fn run_binned_schedule(
    source_pair: &ProbabilityTable,
    aux1: &ConditionalTable,
    epsilon1: f64,
    epsilon4: f64,
    epsilon_typicality: f64,
    schedule: &[usize],
    trials: usize,
    seed: u64,
    budget: u64,
) -> Result<Vec<BinnedCodeReport>> {
    let s1 = source_pair.axis_size(0);
    let s2 = source_pair.axis_size(1);
    let zc = aux1.out_cells();
    let mut mass = vec![0.0f64; s1 * s2 * zc];
    for a in 0..s1 {
        for b in 0..s2 {
            let pab = source_pair.mass()[a * s2 + b];
            for (c, &q) in aux1.row(a).iter().enumerate() {
                mass[(a * s2 + b) * zc + c] = pab * q;
            }
        }
    }
    let triple = ProbabilityTable::from_sizes(&[s1, s2, zc], mass)?;
    let info_y1z1 = triple.mutual_information(&[0], &[2])?;
    let info_y2z1 = triple.mutual_information(&[1], &[2])?;
    schedule
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let sizing = choose_bin_sizes(info_y1z1, info_y2z1, epsilon1, epsilon4, n, budget)?;
            let params = TypicalityParams::new(epsilon_typicality, n)?;
            simulate_binned_code(source_pair, aux1, &sizing, &params, trials, seed.wrapping_add(i as u64))
        })
        .collect()
}
