//! Markov-chain source models: a joint source p(x1,x2), block order n, and
//! one auxiliary channel per terminal acting on the whole block, inducing
//! the four-way law p_n(x1^n, x2^n) q1(z1|x1^n) q2(z2|x2^n).

use crate::error::{Error, Result};
use crate::prob::{Alphabet, ConditionalTable, ProbabilityTable, SymbolSequence};
use crate::rng::stream_rng;
use serde::Serialize;

/// Pack a block of symbols into one super-symbol, big-endian.
pub fn encode_block(symbols: &[u32], base: usize) -> u32 {
    let mut v: u64 = 0;
    for &s in symbols {
        v = v * base as u64 + s as u64;
    }
    v as u32
}

/// Unpack a super-symbol into its block of symbols.
pub fn decode_block(code: u32, base: usize, n: usize) -> Vec<u32> {
    let mut out = vec![0u32; n];
    let mut v = code as u64;
    for k in (0..n).rev() {
        out[k] = (v % base as u64) as u32;
        v /= base as u64;
    }
    out
}

/// n-fold product extension of a two-axis source: blocks become single
/// super-symbols with mass prod_k p(x1(k), x2(k)).
pub fn product_extension(source: &ProbabilityTable, n: usize) -> Result<ProbabilityTable> {
    if source.num_axes() != 2 {
        return Err(Error::DimensionMismatch("product extension expects a two-axis source".into()));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("block order must be >= 1".into()));
    }
    let s1 = source.axis_size(0);
    let s2 = source.axis_size(1);
    let b1 = s1.checked_pow(n as u32).ok_or(Error::TableTooLarge { cells: u128::MAX, cap: crate::prob::TABLE_CELL_CAP })?;
    let b2 = s2.checked_pow(n as u32).ok_or(Error::TableTooLarge { cells: u128::MAX, cap: crate::prob::TABLE_CELL_CAP })?;
    let cells = (b1 as u128) * (b2 as u128);
    if cells > crate::prob::TABLE_CELL_CAP as u128 {
        return Err(Error::TableTooLarge { cells, cap: crate::prob::TABLE_CELL_CAP });
    }
    let mut mass = vec![0.0f64; b1 * b2];
    for a in 0..b1 {
        let x1 = decode_block(a as u32, s1, n);
        for b in 0..b2 {
            let x2 = decode_block(b as u32, s2, n);
            let mut p = 1.0;
            for k in 0..n {
                p *= source.mass()[source.flat_index(&[x1[k], x2[k]])];
            }
            mass[a * b2 + b] = p;
        }
    }
    ProbabilityTable::from_sizes(&[b1, b2], mass)
}

/// Convert a symbol word of length n·n' into a super-symbol word of length n'.
pub fn word_to_blocks(seq: &SymbolSequence, n: usize) -> Result<SymbolSequence> {
    if seq.len() % n != 0 {
        return Err(Error::LengthMismatch { got: seq.len(), expected: (seq.len() / n + 1) * n });
    }
    let base = seq.alphabet_size();
    let block_alpha = base.pow(n as u32);
    let blocks: Vec<u32> = seq
        .symbols()
        .chunks(n)
        .map(|chunk| encode_block(chunk, base))
        .collect();
    SymbolSequence::new(blocks, block_alpha)
}

/// Inverse of [`word_to_blocks`].
pub fn blocks_to_word(blocks: &SymbolSequence, base: usize, n: usize) -> Result<SymbolSequence> {
    let mut out = Vec::with_capacity(blocks.len() * n);
    for &b in blocks.symbols() {
        out.extend(decode_block(b, base, n));
    }
    SymbolSequence::new(out, base)
}

/// Named per-super-symbol information measures of a chain model, in bits.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct InfoSummary {
    pub h_y1: f64,
    pub h_y2: f64,
    pub i_y1_z1: f64,
    pub i_y2_z2: f64,
    pub i_y1_z1_given_z2: f64,
    pub i_y2_z2_given_z1: f64,
    pub i_pair_zpair: f64,
}

/// Source + block-level auxiliary channels + the induced four-way joint.
///
/// Axis order of the induced joint: (X1-block, X2-block, Z1, Z2).
#[derive(Debug, Clone)]
pub struct ChainModel {
    source: ProbabilityTable,
    aux1: ConditionalTable,
    aux2: ConditionalTable,
    block_order: usize,
    block_source: ProbabilityTable,
    joint: ProbabilityTable,
}

/// Build the chain model and its induced joint. The factorization holds by
/// construction; dimensions are checked against |X1|^n and |X2|^n.
pub fn compose_chain(
    source: &ProbabilityTable,
    aux1: &ConditionalTable,
    aux2: &ConditionalTable,
    block_order: usize,
) -> Result<ChainModel> {
    if source.num_axes() != 2 {
        return Err(Error::DimensionMismatch("chain source must be a two-axis table".into()));
    }
    let block_source = product_extension(source, block_order)?;
    let b1 = block_source.axis_size(0);
    let b2 = block_source.axis_size(1);
    if aux1.cond_cells() != b1 {
        return Err(Error::DimensionMismatch(format!(
            "aux1 conditions on {} cells, X1-block alphabet has {}",
            aux1.cond_cells(),
            b1
        )));
    }
    if aux2.cond_cells() != b2 {
        return Err(Error::DimensionMismatch(format!(
            "aux2 conditions on {} cells, X2-block alphabet has {}",
            aux2.cond_cells(),
            b2
        )));
    }
    let z1 = aux1.out_cells();
    let z2 = aux2.out_cells();
    let cells = (b1 as u128) * (b2 as u128) * (z1 as u128) * (z2 as u128);
    if cells > crate::prob::TABLE_CELL_CAP as u128 {
        return Err(Error::TableTooLarge { cells, cap: crate::prob::TABLE_CELL_CAP });
    }
    let mut mass = vec![0.0f64; cells as usize];
    let mut flat = 0usize;
    for a in 0..b1 {
        let r1 = aux1.row(a);
        for b in 0..b2 {
            let pab = block_source.mass()[a * b2 + b];
            let r2 = aux2.row(b);
            for &q1 in r1.iter() {
                for &q2 in r2.iter() {
                    mass[flat] = pab * q1 * q2;
                    flat += 1;
                }
            }
        }
    }
    let axes = vec![
        Alphabet::new(b1)?,
        Alphabet::new(b2)?,
        Alphabet::new(z1)?,
        Alphabet::new(z2)?,
    ];
    let joint = ProbabilityTable::new(axes, mass)?;
    Ok(ChainModel {
        source: source.clone(),
        aux1: aux1.clone(),
        aux2: aux2.clone(),
        block_order,
        block_source,
        joint,
    })
}

impl ChainModel {
    /// Convenience constructor with both auxiliaries the identity on their
    /// block alphabets (the lossless specialization).
    pub fn with_identity_aux(source: &ProbabilityTable, block_order: usize) -> Result<Self> {
        let ext = product_extension(source, block_order)?;
        let aux1 = ConditionalTable::identity(ext.axis_size(0));
        let aux2 = ConditionalTable::identity(ext.axis_size(1));
        compose_chain(source, &aux1, &aux2, block_order)
    }

    pub fn source(&self) -> &ProbabilityTable {
        &self.source
    }

    pub fn aux1(&self) -> &ConditionalTable {
        &self.aux1
    }

    pub fn aux2(&self) -> &ConditionalTable {
        &self.aux2
    }

    pub fn block_order(&self) -> usize {
        self.block_order
    }

    /// The n-fold product source over block super-symbols.
    pub fn block_source(&self) -> &ProbabilityTable {
        &self.block_source
    }

    /// Induced joint over (X1-block, X2-block, Z1, Z2).
    pub fn joint(&self) -> &ProbabilityTable {
        &self.joint
    }

    pub fn z1_size(&self) -> usize {
        self.aux1.out_cells()
    }

    pub fn z2_size(&self) -> usize {
        self.aux2.out_cells()
    }

    /// Per-super-symbol information measures of the induced joint.
    pub fn info_summary(&self) -> Result<InfoSummary> {
        let j = &self.joint;
        let s = InfoSummary {
            h_y1: j.entropy(&[0])?,
            h_y2: j.entropy(&[1])?,
            i_y1_z1: j.mutual_information(&[0], &[2])?,
            i_y2_z2: j.mutual_information(&[1], &[3])?,
            i_y1_z1_given_z2: j.conditional_mutual_information(&[0], &[2], &[3])?,
            i_y2_z2_given_z1: j.conditional_mutual_information(&[1], &[3], &[2])?,
            i_pair_zpair: j.mutual_information(&[0, 1], &[2, 3])?,
        };
        for v in [
            s.h_y1,
            s.h_y2,
            s.i_y1_z1,
            s.i_y2_z2,
            s.i_y1_z1_given_z2,
            s.i_y2_z2_given_z1,
            s.i_pair_zpair,
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParameter(format!("information summary entry {v} out of range")));
            }
        }
        Ok(s)
    }

    /// Draw an i.i.d. word of n·n' source symbol pairs on an RNG stream.
    pub fn sample_source_word(
        &self,
        n_prime: usize,
        seed: u64,
        stream: u64,
    ) -> Result<(SymbolSequence, SymbolSequence)> {
        let seqs = self.source.sample_iid_stream(self.block_order * n_prime, seed, stream)?;
        let mut it = seqs.into_iter();
        Ok((it.next().unwrap(), it.next().unwrap()))
    }
}

/// Result of checking a four-axis joint against the chain factorization
/// rebuilt from its own marginals.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FactorizationReport {
    pub factorizes: bool,
    pub max_deviation: f64,
}

/// True iff joint(x1,x2,z1,z2) = p(x1,x2)·q1(z1|x1)·q2(z2|x2) within 1e-9
/// per cell, with the factors reconstructed from the joint itself.
/// Zero-mass conditioning cells count as satisfying.
pub fn verify_factorization(joint: &ProbabilityTable) -> Result<FactorizationReport> {
    if joint.num_axes() != 4 {
        return Err(Error::DimensionMismatch("factorization check expects a four-axis table".into()));
    }
    let pair = joint.marginal(&[0, 1])?;
    // marginals renumber axes: in m1 axis 0 is x1 and axis 1 is z1
    let m1 = joint.marginal(&[0, 2])?;
    let m2 = joint.marginal(&[1, 3])?;
    let q1 = m1.conditional_view(&[0])?;
    let q2 = m2.conditional_view(&[0])?;
    let z1 = joint.axis_size(2);
    let z2 = joint.axis_size(3);
    let b2 = joint.axis_size(1);
    let mut max_dev = 0.0f64;
    for (flat, &p) in joint.mass().iter().enumerate() {
        let idx = joint.unflatten(flat);
        let (a, b, c, d) = (idx[0] as usize, idx[1] as usize, idx[2] as usize, idx[3] as usize);
        let pab = pair.mass()[a * b2 + b];
        let rebuilt = if pab == 0.0 {
            0.0
        } else {
            let f1 = if q1.reachable[a] { q1.table.row(a)[c] } else { 0.0 };
            let f2 = if q2.reachable[b] { q2.table.row(b)[d] } else { 0.0 };
            pab * f1 * f2
        };
        let dev = (p - rebuilt).abs();
        if dev > max_dev {
            max_dev = dev;
        }
    }
    let _ = (z1, z2);
    Ok(FactorizationReport { factorizes: max_dev < 1e-9, max_deviation: max_dev })
}

/// The two decompositions of the sum rate plus the conditioning inequality,
/// evaluated exactly on a chain model.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ChainIdentityReport {
    pub i_y1_z1: f64,
    pub i_y1_z1_given_z2: f64,
    pub i_y2_z2: f64,
    pub i_y2_z2_given_z1: f64,
    pub i_pair_zpair: f64,
    pub conditioning_ok: bool,
    pub decomposition_dev_0: f64,
    pub decomposition_dev_1: f64,
    pub pass: bool,
}

/// Asserts, on the induced joint: conditioning cannot raise the single
/// informations, and the sum information splits either way around.
pub fn chain_identity_check(model: &ChainModel) -> Result<ChainIdentityReport> {
    let report = verify_factorization(model.joint())?;
    if !report.factorizes {
        return Err(Error::NotFactorizing { deviation: report.max_deviation });
    }
    let s = model.info_summary()?;
    let conditioning_ok = s.i_y1_z1_given_z2 <= s.i_y1_z1 + 1e-12
        && s.i_y2_z2_given_z1 <= s.i_y2_z2 + 1e-12;
    let dev0 = (s.i_pair_zpair - s.i_y1_z1 - s.i_y2_z2_given_z1).abs();
    let dev1 = (s.i_pair_zpair - s.i_y2_z2 - s.i_y1_z1_given_z2).abs();
    Ok(ChainIdentityReport {
        i_y1_z1: s.i_y1_z1,
        i_y1_z1_given_z2: s.i_y1_z1_given_z2,
        i_y2_z2: s.i_y2_z2,
        i_y2_z2_given_z1: s.i_y2_z2_given_z1,
        i_pair_zpair: s.i_pair_zpair,
        conditioning_ok,
        decomposition_dev_0: dev0,
        decomposition_dev_1: dev1,
        pass: conditioning_ok && dev0 <= 1e-10 && dev1 <= 1e-10,
    })
}

/// Seeded random binary chain model (n = 1) for property suites.
pub fn random_binary_chain(seed: u64, stream: u64) -> Result<ChainModel> {
    let mut rng = stream_rng(seed, stream);
    let mut draw_simplex = |k: usize| -> Vec<f64> {
        let raw: Vec<f64> = (0..k).map(|_| -(rand::Rng::gen::<f64>(&mut rng)).ln()).collect();
        let sum: f64 = raw.iter().sum();
        raw.iter().map(|v| v / sum).collect()
    };
    let source = ProbabilityTable::from_sizes(&[2, 2], draw_simplex(4))?;
    let mut rows1 = draw_simplex(2);
    rows1.extend(draw_simplex(2));
    let aux1 = ConditionalTable::from_rows(2, 2, rows1)?;
    let mut rows2 = draw_simplex(2);
    rows2.extend(draw_simplex(2));
    let aux2 = ConditionalTable::from_rows(2, 2, rows2)?;
    compose_chain(&source, &aux1, &aux2, 1)
}
