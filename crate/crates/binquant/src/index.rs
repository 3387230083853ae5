//! Packed binary codes and exact Hamming search.
//!
//! Bit layout is fixed so serialized codes are byte-identical across
//! implementations: bit `j` of a code lives in bit `j mod 64` (least
//! significant first) of word `j / 64`, and the unused high bits of the last
//! word are always zero, which keeps XOR-popcount exact.

use crate::error::{Error, Result};

/// `n` codes of `r` bits each, packed into `ceil(r/64)` words per code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryCodeSet {
    r: usize,
    n: usize,
    words_per_code: usize,
    words: Vec<u64>,
}

/// Borrowed view of a single code; carries `r` so length mismatches are
/// detectable even when two codes happen to occupy the same word count.
#[derive(Debug, Clone, Copy)]
pub struct Code<'a> {
    pub r: usize,
    pub words: &'a [u64],
}

/// Full or truncated Hamming ranking of a database for one query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankedResult {
    pub query_id: usize,
    /// (database id, distance), sorted by distance then id, both ascending.
    pub entries: Vec<(usize, u32)>,
}

pub(crate) fn words_per_code(r: usize) -> usize {
    r.div_ceil(64)
}

impl BinaryCodeSet {
    /// Construct from a bit predicate; `bit(j, i)` is bit `j` of code `i`.
    pub fn from_bit_fn(r: usize, n: usize, mut bit: impl FnMut(usize, usize) -> bool) -> Self {
        let wpc = words_per_code(r);
        let mut words = vec![0u64; wpc * n];
        for i in 0..n {
            let base = i * wpc;
            for j in 0..r {
                if bit(j, i) {
                    words[base + j / 64] |= 1u64 << (j % 64);
                }
            }
        }
        BinaryCodeSet {
            r,
            n,
            words_per_code: wpc,
            words,
        }
    }

    /// Reassemble from raw packed words (e.g. a code file payload).
    pub fn from_words(r: usize, n: usize, words: Vec<u64>) -> Result<Self> {
        let wpc = words_per_code(r);
        if words.len() != wpc * n {
            return Err(Error::DimensionMismatch(format!(
                "code set of {n} codes x {r} bits needs {} words, got {}",
                wpc * n,
                words.len()
            )));
        }
        let set = BinaryCodeSet {
            r,
            n,
            words_per_code: wpc,
            words,
        };
        if r % 64 != 0 && wpc > 0 {
            let mask = !0u64 << (r % 64);
            for i in 0..n {
                let last = set.words[i * wpc + wpc - 1];
                if last & mask != 0 {
                    return Err(Error::InvalidInput(format!(
                        "code {i} has nonzero padding bits beyond r = {r}"
                    )));
                }
            }
        }
        Ok(set)
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn code(&self, i: usize) -> Code<'_> {
        assert!(i < self.n, "code index {i} out of range (n = {})", self.n);
        let base = i * self.words_per_code;
        Code {
            r: self.r,
            words: &self.words[base..base + self.words_per_code],
        }
    }

    pub fn get_bit(&self, i: usize, j: usize) -> bool {
        assert!(j < self.r, "bit index {j} out of range (r = {})", self.r);
        let word = self.code(i).words[j / 64];
        word >> (j % 64) & 1 == 1
    }
}

/// Pack an r×n 0/1 matrix into codes (column i becomes code i).
pub fn pack_bits(bits: &nalgebra::DMatrix<u8>) -> Result<BinaryCodeSet> {
    if let Some(bad) = bits.iter().find(|&&v| v > 1) {
        return Err(Error::InvalidInput(format!(
            "pack_bits expects entries in {{0, 1}}, found {bad}"
        )));
    }
    Ok(BinaryCodeSet::from_bit_fn(
        bits.nrows(),
        bits.ncols(),
        |j, i| bits[(j, i)] == 1,
    ))
}

/// Exact Hamming distance: popcount of the word-wise XOR.
pub fn hamming(a: Code<'_>, b: Code<'_>) -> Result<u32> {
    if a.r != b.r {
        return Err(Error::DimensionMismatch(format!(
            "cannot compare codes of {} and {} bits",
            a.r, b.r
        )));
    }
    Ok(a.words
        .iter()
        .zip(b.words.iter())
        .map(|(x, y)| (x ^ y).count_ones())
        .sum())
}

/// Rank the whole database against one query, distance then id ascending.
/// An empty database yields an empty ranking.
pub fn rank_all(db: &BinaryCodeSet, query: Code<'_>, query_id: usize) -> Result<RankedResult> {
    if db.r() != query.r && !db.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "database codes have r = {}, query has r = {}",
            db.r(),
            query.r
        )));
    }
    let mut entries = Vec::with_capacity(db.len());
    for i in 0..db.len() {
        entries.push((i, hamming(db.code(i), query)?));
    }
    entries.sort_by_key(|&(id, dist)| (dist, id));
    Ok(RankedResult { query_id, entries })
}

/// First `k` entries of the full ranking, same tie rule.
pub fn top_k(
    db: &BinaryCodeSet,
    query: Code<'_>,
    query_id: usize,
    k: usize,
) -> Result<RankedResult> {
    if k == 0 || k > db.len() {
        return Err(Error::InvalidInput(format!(
            "k must satisfy 1 <= k <= {} (database size), got {k}",
            db.len()
        )));
    }
    let mut ranked = rank_all(db, query, query_id)?;
    ranked.entries.truncate(k);
    Ok(ranked)
}
