//! Operational validation: block codes, exhaustive enumeration of
//! block-restricted jammer strategies, exact and Monte-Carlo error
//! probabilities, and comparison of achieved (rate, error) pairs against the
//! capacity bracket.

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{bracket, require_distinct_conditional_outputs, BoundReport};
use crate::channel::{composite_index, word_from_index, word_probability, Avc};
use crate::error::{Error, Result};

/// Explicit enumeration of output words is limited to this many.
pub const OUTPUT_ENUMERATION_GUARD: u128 = 1_000_000;
/// Exhaustive jammer enumeration is limited to this many state words.
pub const JAMMER_ENUMERATION_GUARD: u128 = 10_000_000;

const MONTE_CARLO_SHARD: u64 = 4096;

/// A decoding region for one message.
#[derive(Debug, Clone, Serialize)]
pub enum DecodingSet {
    /// Output words listed by composite index.
    Explicit(BTreeSet<usize>),
    /// A product set: one allowed-symbol list per position.
    Product(Vec<Vec<usize>>),
}

impl DecodingSet {
    fn contains(&self, word: &[usize], y_size: usize) -> bool {
        match self {
            DecodingSet::Explicit(set) => set.contains(&composite_index(word, y_size)),
            DecodingSet::Product(allowed) => word
                .iter()
                .zip(allowed)
                .all(|(letter, options)| options.contains(letter)),
        }
    }

    /// `P(D | x_word, s_word)`, factorized per position for product sets and
    /// summed word by word otherwise.
    fn probability(&self, avc: &Avc, x_word: &[usize], s_word: &[usize]) -> Result<f64> {
        match self {
            DecodingSet::Explicit(set) => {
                let mut total = 0.0;
                for &idx in set {
                    let word = word_from_index(idx, avc.y_size(), x_word.len());
                    total += word_probability(avc, &word, x_word, s_word)?;
                }
                Ok(total.min(1.0))
            }
            DecodingSet::Product(allowed) => {
                let mut p = 1.0;
                for ((options, &x), &s) in allowed.iter().zip(x_word).zip(s_word) {
                    let per_position: f64 = options.iter().map(|&y| avc.prob(y, x, s)).sum();
                    p *= per_position;
                }
                Ok(p)
            }
        }
    }

    fn validate(&self, n: usize, y_size: usize) -> Result<()> {
        match self {
            DecodingSet::Explicit(set) => {
                let space = (y_size as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
                for &idx in set {
                    if idx as u128 >= space {
                        return Err(Error::InvalidInput(format!(
                            "decoding word index {idx} outside Y^{n}"
                        )));
                    }
                }
                Ok(())
            }
            DecodingSet::Product(allowed) => {
                if allowed.len() != n {
                    return Err(Error::DimensionMismatch {
                        what: "product decoding set",
                        expected: n,
                        got: allowed.len(),
                    });
                }
                for options in allowed {
                    if options.is_empty() {
                        return Err(Error::InvalidInput(
                            "empty per-position option list".into(),
                        ));
                    }
                    if options.iter().any(|&y| y >= y_size) {
                        return Err(Error::InvalidInput(
                            "decoding symbol outside output alphabet".into(),
                        ));
                    }
                }
                Ok(())
            }
        }
    }

    fn disjoint_from(&self, other: &DecodingSet, n: usize, y_size: usize) -> bool {
        match (self, other) {
            (DecodingSet::Explicit(a), DecodingSet::Explicit(b)) => a.is_disjoint(b),
            (DecodingSet::Product(a), DecodingSet::Product(b)) => a
                .iter()
                .zip(b)
                .any(|(oa, ob)| oa.iter().all(|y| !ob.contains(y))),
            (DecodingSet::Explicit(set), DecodingSet::Product(_)) => set
                .iter()
                .all(|&idx| !other.contains(&word_from_index(idx, y_size, n), y_size)),
            (DecodingSet::Product(_), DecodingSet::Explicit(_)) => {
                other.disjoint_from(self, n, y_size)
            }
        }
    }
}

/// A deterministic block code: one codeword per message and pairwise-disjoint
/// decoding sets.
#[derive(Debug, Clone, Serialize)]
pub struct BlockCode {
    n: usize,
    x_size: usize,
    y_size: usize,
    encoder: Vec<Vec<usize>>,
    decoding_sets: Vec<DecodingSet>,
}

impl BlockCode {
    pub fn new(
        n: usize,
        x_size: usize,
        y_size: usize,
        encoder: Vec<Vec<usize>>,
        decoding_sets: Vec<DecodingSet>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("block length n = 0".into()));
        }
        if encoder.is_empty() || encoder.len() != decoding_sets.len() {
            return Err(Error::InvalidInput(format!(
                "{} codewords vs {} decoding sets",
                encoder.len(),
                decoding_sets.len()
            )));
        }
        for word in &encoder {
            if word.len() != n {
                return Err(Error::DimensionMismatch {
                    what: "codeword",
                    expected: n,
                    got: word.len(),
                });
            }
            if word.iter().any(|&x| x >= x_size) {
                return Err(Error::InvalidInput(
                    "codeword symbol outside input alphabet".into(),
                ));
            }
        }
        for set in &decoding_sets {
            set.validate(n, y_size)?;
        }
        for i in 0..decoding_sets.len() {
            for j in i + 1..decoding_sets.len() {
                if !decoding_sets[i].disjoint_from(&decoding_sets[j], n, y_size) {
                    return Err(Error::InvalidInput(format!(
                        "decoding sets {i} and {j} overlap"
                    )));
                }
            }
        }
        Ok(Self {
            n,
            x_size,
            y_size,
            encoder,
            decoding_sets,
        })
    }

    /// The one-use code `f(m) = m`, `D_m = {m}`.
    pub fn identity(size: usize) -> Self {
        Self::exact_repetition(size, size, 1, size).expect("identity code is valid")
    }

    /// Repetition encoder with the literal decoder `D_m = {(m, …, m)}`.
    /// Needs no channel assumptions, unlike the likelihood decoder of
    /// [`build_repetition_code`].
    pub fn exact_repetition(
        x_size: usize,
        y_size: usize,
        n: usize,
        messages: usize,
    ) -> Result<Self> {
        if messages == 0 || messages > x_size.min(y_size) {
            return Err(Error::InvalidInput(format!(
                "cannot place {messages} messages into alphabets of size {x_size}/{y_size}"
            )));
        }
        let encoder: Vec<Vec<usize>> = (0..messages).map(|m| vec![m; n]).collect();
        let decoding_sets = (0..messages)
            .map(|m| {
                DecodingSet::Explicit(BTreeSet::from([composite_index(&vec![m; n], y_size)]))
            })
            .collect();
        Self::new(n, x_size, y_size, encoder, decoding_sets)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn messages(&self) -> usize {
        self.encoder.len()
    }

    pub fn x_size(&self) -> usize {
        self.x_size
    }

    pub fn y_size(&self) -> usize {
        self.y_size
    }

    pub fn codeword(&self, m: usize) -> &[usize] {
        &self.encoder[m]
    }

    pub fn decoding_set(&self, m: usize) -> &DecodingSet {
        &self.decoding_sets[m]
    }

    /// `log2 |M| / n` in bits per channel use.
    pub fn rate(&self) -> f64 {
        (self.messages() as f64).log2() / self.n as f64
    }
}

/// A `J`-block-restricted jammer strategy: one state per consecutive block
/// of `J` letters, the final block possibly shorter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RestrictedJammer {
    j: usize,
    n: usize,
    assignment: Vec<usize>,
}

impl RestrictedJammer {
    pub fn new(j: usize, n: usize, assignment: Vec<usize>, s_size: usize) -> Result<Self> {
        if j == 0 || n < j {
            return Err(Error::InvalidInput(format!(
                "need n ≥ J ≥ 1, got n = {n}, J = {j}"
            )));
        }
        let blocks = n.div_ceil(j);
        if assignment.len() != blocks {
            return Err(Error::DimensionMismatch {
                what: "block assignment",
                expected: blocks,
                got: assignment.len(),
            });
        }
        if assignment.iter().any(|&s| s >= s_size) {
            return Err(Error::InvalidInput(
                "state symbol outside alphabet".into(),
            ));
        }
        Ok(Self { j, n, assignment })
    }

    /// Parses a full state word, validating that it is constant on blocks.
    pub fn from_word(word: &[usize], j: usize, s_size: usize) -> Result<Self> {
        let n = word.len();
        if j == 0 || n < j {
            return Err(Error::InvalidInput(format!(
                "need n ≥ J ≥ 1, got n = {n}, J = {j}"
            )));
        }
        for (i, &s) in word.iter().enumerate() {
            if s != word[(i / j) * j] {
                return Err(Error::InvalidInput(format!(
                    "state word is not constant on block {}: position {i}",
                    i / j
                )));
            }
        }
        let assignment = word.iter().step_by(j).copied().collect();
        Self::new(j, n, assignment, s_size)
    }

    pub fn j(&self) -> usize {
        self.j
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// The induced length-`n` state word.
    pub fn word(&self) -> Vec<usize> {
        (0..self.n).map(|i| self.assignment[i / self.j]).collect()
    }
}

/// Iterator over all `J`-block-restricted state words of length `n`: words
/// constant on consecutive length-`J` blocks, the final block possibly
/// shorter.
pub struct RestrictedWords {
    n: usize,
    j: usize,
    s_size: usize,
    blocks: usize,
    next: u128,
    count: u128,
}

impl RestrictedWords {
    pub fn count(&self) -> u128 {
        self.count
    }
}

impl Iterator for RestrictedWords {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.next >= self.count {
            return None;
        }
        let mut assignment = vec![0usize; self.blocks];
        let mut rest = self.next;
        for slot in assignment.iter_mut().rev() {
            *slot = (rest % self.s_size as u128) as usize;
            rest /= self.s_size as u128;
        }
        self.next += 1;
        Some((0..self.n).map(|i| assignment[i / self.j]).collect())
    }
}

/// Enumerates the restricted state word set; exactly `|S|^⌈n/J⌉` words.
pub fn enumerate_restricted(n: usize, j: usize, s_size: usize) -> Result<RestrictedWords> {
    if j == 0 || n < j {
        return Err(Error::InvalidInput(format!(
            "need n ≥ J ≥ 1, got n = {n}, J = {j}"
        )));
    }
    if s_size == 0 {
        return Err(Error::InvalidInput("empty state alphabet".into()));
    }
    let blocks = n.div_ceil(j);
    let count = (s_size as u128)
        .checked_pow(blocks as u32)
        .unwrap_or(u128::MAX);
    if count > JAMMER_ENUMERATION_GUARD {
        return Err(Error::GuardExceeded {
            what: format!("jammer enumeration |S|^{blocks}; use Monte-Carlo sampling instead"),
            size: count,
            limit: JAMMER_ENUMERATION_GUARD,
        });
    }
    Ok(RestrictedWords {
        n,
        j,
        s_size,
        blocks,
        next: 0,
        count,
    })
}

/// Exact per-message error probabilities under one fixed state word.
#[derive(Debug, Clone, Serialize)]
pub struct WordError {
    pub per_message: Vec<f64>,
    pub max_error: f64,
    pub avg_error: f64,
}

pub fn exact_word_error(code: &BlockCode, avc: &Avc, s_word: &[usize]) -> Result<WordError> {
    if s_word.len() != code.n() {
        return Err(Error::DimensionMismatch {
            what: "state word",
            expected: code.n(),
            got: s_word.len(),
        });
    }
    let mut per_message = Vec::with_capacity(code.messages());
    for m in 0..code.messages() {
        let correct = code
            .decoding_set(m)
            .probability(avc, code.codeword(m), s_word)?;
        per_message.push((1.0 - correct).clamp(0.0, 1.0));
    }
    let max_error = per_message.iter().cloned().fold(0.0f64, f64::max);
    let avg_error = per_message.iter().sum::<f64>() / per_message.len() as f64;
    Ok(WordError {
        per_message,
        max_error,
        avg_error,
    })
}

/// Worst-case error over jammer words and its witness.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorReport {
    pub error: f64,
    pub worst_word: Vec<usize>,
}

/// Maximum error over all `J`-block-restricted state words and all messages.
pub fn exact_max_error(code: &BlockCode, avc: &Avc, j: usize) -> Result<ErrorReport> {
    worst_case(code, avc, j, |word_error| word_error.max_error)
}

/// Message-averaged error, maximized over all `J`-block-restricted state
/// words. The unrestricted jammer is the `J = 1` case.
pub fn exact_avg_error(code: &BlockCode, avc: &Avc, j: usize) -> Result<ErrorReport> {
    worst_case(code, avc, j, |word_error| word_error.avg_error)
}

fn worst_case(
    code: &BlockCode,
    avc: &Avc,
    j: usize,
    score: impl Fn(&WordError) -> f64 + Sync,
) -> Result<ErrorReport> {
    // Chunked so exhausting the 10^7-word guard never materializes the whole
    // strategy set; ties break toward the earlier word in enumeration order.
    const CHUNK: usize = 8192;
    let mut words = enumerate_restricted(code.n(), j, avc.s_size())?;
    let mut best: Option<(f64, Vec<usize>)> = None;
    loop {
        let chunk: Vec<Vec<usize>> = words.by_ref().take(CHUNK).collect();
        if chunk.is_empty() {
            break;
        }
        let scored: Vec<(f64, &Vec<usize>)> = chunk
            .par_iter()
            .map(|word| exact_word_error(code, avc, word).map(|we| (score(&we), word)))
            .collect::<Result<_>>()?;
        for (value, word) in scored {
            if best.as_ref().is_none_or(|(bv, _)| value > *bv) {
                best = Some((value, word.clone()));
            }
        }
    }
    let (error, worst_word) = best.ok_or_else(|| Error::Internal("no jammer words".into()))?;
    Ok(ErrorReport { error, worst_word })
}

/// Builds the length-`J` repetition code with a joint maximum-likelihood
/// decoder over the nuisance state: message `m` is encoded as `(x_m, …, x_m)`
/// and `y^J` decodes to the message maximizing `max_s w^{⊗J}(y^J | x_m^J, s^J)`,
/// ties toward the smallest message index.
pub fn build_repetition_code(avc: &Avc, j: usize, messages: usize) -> Result<BlockCode> {
    require_distinct_conditional_outputs(avc)?;
    if messages == 0 || messages > avc.x_size() {
        return Err(Error::InvalidInput(format!(
            "cannot place {messages} messages into an input alphabet of size {}",
            avc.x_size()
        )));
    }
    if j == 0 {
        return Err(Error::InvalidInput("block length J = 0".into()));
    }
    let space = (avc.y_size() as u128).checked_pow(j as u32).unwrap_or(u128::MAX);
    if space > OUTPUT_ENUMERATION_GUARD {
        return Err(Error::GuardExceeded {
            what: format!("output enumeration |Y|^{j}"),
            size: space,
            limit: OUTPUT_ENUMERATION_GUARD,
        });
    }
    let mut sets: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); messages];
    for idx in 0..space as usize {
        let y_word = word_from_index(idx, avc.y_size(), j);
        let mut best = (0usize, f64::NEG_INFINITY);
        for m in 0..messages {
            let mut score = f64::NEG_INFINITY;
            for s in 0..avc.s_size() {
                let p: f64 = y_word.iter().map(|&y| avc.prob(y, m, s).log2()).sum();
                score = score.max(p);
            }
            if score > best.1 + 1e-12 {
                best = (m, score);
            }
        }
        sets[best.0].insert(idx);
    }
    BlockCode::new(
        j,
        avc.x_size(),
        avc.y_size(),
        (0..messages).map(|m| vec![m; j]).collect(),
        sets.into_iter().map(DecodingSet::Explicit).collect(),
    )
}

/// Monte-Carlo estimate of the max-over-messages error under one state word.
#[derive(Debug, Clone, Serialize)]
pub struct MonteCarloEstimate {
    pub estimate: f64,
    pub standard_error: f64,
    pub per_message: Vec<f64>,
    pub trials: u64,
}

/// Samples `trials` transmissions per message under the fixed state word.
/// Trials are sharded with per-shard derived seeds, so the result depends
/// only on `(seed, trials)`, not on worker count.
pub fn monte_carlo_error(
    code: &BlockCode,
    avc: &Avc,
    s_word: &[usize],
    trials: u64,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    if trials == 0 {
        return Err(Error::InvalidInput("need at least one trial".into()));
    }
    if s_word.len() != code.n() {
        return Err(Error::DimensionMismatch {
            what: "state word",
            expected: code.n(),
            got: s_word.len(),
        });
    }
    let shards_per_message = trials.div_ceil(MONTE_CARLO_SHARD);
    let tasks: Vec<(usize, u64)> = (0..code.messages())
        .flat_map(|m| (0..shards_per_message).map(move |shard| (m, shard)))
        .collect();
    let failures: Vec<(usize, u64)> = tasks
        .par_iter()
        .map(|&(m, shard)| {
            let lo = shard * MONTE_CARLO_SHARD;
            let hi = (lo + MONTE_CARLO_SHARD).min(trials);
            let mut rng = ChaCha12Rng::seed_from_u64(mix_seed(seed, m as u64, shard));
            let x_word = code.codeword(m);
            let set = code.decoding_set(m);
            let rows: Vec<&[f64]> = (0..code.n())
                .map(|i| avc.row(x_word[i], s_word[i]))
                .collect();
            let mut fails = 0u64;
            let mut y_word = vec![0usize; code.n()];
            for _ in lo..hi {
                for (slot, row) in y_word.iter_mut().zip(&rows) {
                    *slot = sample_weights(row, &mut rng);
                }
                if !set.contains(&y_word, code.y_size()) {
                    fails += 1;
                }
            }
            Ok((m, fails))
        })
        .collect::<Result<_>>()?;
    let mut per_message = vec![0.0f64; code.messages()];
    for (m, fails) in failures {
        per_message[m] += fails as f64;
    }
    for p in per_message.iter_mut() {
        *p /= trials as f64;
    }
    let estimate = per_message.iter().cloned().fold(0.0f64, f64::max);
    let standard_error = (estimate * (1.0 - estimate) / trials as f64).sqrt();
    Ok(MonteCarloEstimate {
        estimate,
        standard_error,
        per_message,
        trials,
    })
}

fn sample_weights<R: rand::Rng>(weights: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

fn mix_seed(seed: u64, message: u64, shard: u64) -> u64 {
    // splitmix64 over the packed identifiers.
    let mut z = seed ^ message.rotate_left(32) ^ shard.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Achieved rate and worst-case error next to the capacity bracket.
#[derive(Debug, Clone, Serialize)]
pub struct ConsistencyReport {
    pub rate: f64,
    pub error: f64,
    pub worst_word: Vec<usize>,
    pub bounds: BoundReport,
    /// False when the rate exceeds the upper bound while the worst-case
    /// error stays below one half.
    pub consistent: bool,
}

pub fn rate_vs_bracket(code: &BlockCode, avc: &Avc, j: usize) -> Result<ConsistencyReport> {
    let bounds = bracket(avc, j)?;
    let report = exact_max_error(code, avc, j)?;
    let rate = code.rate();
    let consistent = !(rate > bounds.upper_bound + 1e-9 && report.error < 0.5);
    Ok(ConsistencyReport {
        rate,
        error: report.error,
        worst_word: report.worst_word,
        bounds,
        consistent,
    })
}
