//! Channels (row-stochastic matrices), arbitrarily varying channels, their
//! composition, tensor powers and repetition embeddings.
//!
//! Composite alphabets use a big-endian index convention throughout: the pair
//! `(a, b)` over A × B is packed as `a * |B| + b`, and a word is packed with
//! its first letter most significant.

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::prob::Dist;

/// Guard on the size of any composite alphabet built by tensor powers.
pub const COMPOSITE_ALPHABET_GUARD: usize = 4096;

/// A channel: one conditional output distribution per input letter.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    entries: Vec<f64>,
    input_size: usize,
    output_size: usize,
}

impl Channel {
    /// Builds a channel from rows `w(·|x)`, validating each as a distribution.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidInput("channel with no inputs".into()));
        }
        let output_size = rows[0].len();
        let mut entries = Vec::with_capacity(rows.len() * output_size);
        for (x, row) in rows.iter().enumerate() {
            if row.len() != output_size {
                return Err(Error::DimensionMismatch {
                    what: "channel row",
                    expected: output_size,
                    got: row.len(),
                });
            }
            Dist::new(row.clone()).map_err(|e| Error::InvalidDist {
                reason: format!("channel row {x}: {e}"),
            })?;
            entries.extend_from_slice(row);
        }
        Ok(Self {
            entries,
            input_size: rows.len(),
            output_size,
        })
    }

    /// The identity channel on an alphabet of size `n`.
    pub fn identity(n: usize) -> Self {
        let mut entries = vec![0.0; n * n];
        for x in 0..n {
            entries[x * n + x] = 1.0;
        }
        Self {
            entries,
            input_size: n,
            output_size: n,
        }
    }

    /// Binary symmetric channel with the given crossover probability.
    pub fn bsc(crossover: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&crossover) {
            return Err(Error::InvalidInput(format!(
                "crossover probability {crossover} outside [0, 1]"
            )));
        }
        Channel::from_rows(vec![
            vec![1.0 - crossover, crossover],
            vec![crossover, 1.0 - crossover],
        ])
    }

    pub fn input_size(&self) -> usize {
        self.input_size
    }

    pub fn output_size(&self) -> usize {
        self.output_size
    }

    /// The row `w(·|x)`.
    pub fn row(&self, x: usize) -> &[f64] {
        &self.entries[x * self.output_size..(x + 1) * self.output_size]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.input_size).map(|x| self.row(x).to_vec()).collect()
    }

    /// `w(y|x)`.
    pub fn prob(&self, y: usize, x: usize) -> f64 {
        self.entries[x * self.output_size + y]
    }

    pub fn row_dist(&self, x: usize) -> Dist {
        Dist::new(self.row(x).to_vec()).expect("channel rows are valid distributions")
    }
}

impl Serialize for Channel {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("Channel", 3)?;
        s.serialize_field("input_size", &self.input_size)?;
        s.serialize_field("output_size", &self.output_size)?;
        s.serialize_field("rows", &self.rows())?;
        s.end()
    }
}

/// An arbitrarily varying channel: the family `{W_s}` stored as a tensor
/// `w[s][x][y]` of conditional probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct Avc {
    entries: Vec<f64>,
    x_size: usize,
    s_size: usize,
    y_size: usize,
}

impl Avc {
    /// Builds an AVC from the nested tensor `w[s][x][y]`.
    pub fn from_tensor(w: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        if w.is_empty() || w[0].is_empty() {
            return Err(Error::InvalidInput("empty state or input alphabet".into()));
        }
        let s_size = w.len();
        let x_size = w[0].len();
        let y_size = w[0][0].len();
        let mut entries = vec![0.0; s_size * x_size * y_size];
        for (s, per_state) in w.iter().enumerate() {
            if per_state.len() != x_size {
                return Err(Error::DimensionMismatch {
                    what: "AVC input dimension",
                    expected: x_size,
                    got: per_state.len(),
                });
            }
            for (x, row) in per_state.iter().enumerate() {
                if row.len() != y_size {
                    return Err(Error::DimensionMismatch {
                        what: "AVC output dimension",
                        expected: y_size,
                        got: row.len(),
                    });
                }
                Dist::new(row.clone()).map_err(|e| Error::InvalidDist {
                    reason: format!("w[{s}][{x}]: {e}"),
                })?;
                for (y, &p) in row.iter().enumerate() {
                    entries[(s * x_size + x) * y_size + y] = p;
                }
            }
        }
        Ok(Self {
            entries,
            x_size,
            s_size,
            y_size,
        })
    }

    /// Builds an AVC from the per-state channels `{W_s}`, which must share
    /// alphabets.
    pub fn from_channels(channels: &[Channel]) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::InvalidInput("empty channel family".into()));
        }
        let x_size = channels[0].input_size();
        let y_size = channels[0].output_size();
        for c in channels {
            if c.input_size() != x_size || c.output_size() != y_size {
                return Err(Error::DimensionMismatch {
                    what: "AVC channel family",
                    expected: x_size * y_size,
                    got: c.input_size() * c.output_size(),
                });
            }
        }
        Avc::from_tensor(channels.iter().map(Channel::rows).collect())
    }

    /// The binary XOR channel `w(y|x,s) = δ(y, x ⊕ s)`.
    pub fn xor() -> Self {
        Avc::from_tensor(vec![
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        ])
        .expect("static tensor is valid")
    }

    /// An AVC whose every state channel is the identity (the jammer has no
    /// influence).
    pub fn clean(x_size: usize, s_size: usize) -> Self {
        Avc::from_channels(&vec![Channel::identity(x_size); s_size])
            .expect("identity channels are valid")
    }

    pub fn x_size(&self) -> usize {
        self.x_size
    }

    pub fn s_size(&self) -> usize {
        self.s_size
    }

    pub fn y_size(&self) -> usize {
        self.y_size
    }

    /// `w(y|x,s)`.
    pub fn prob(&self, y: usize, x: usize, s: usize) -> f64 {
        self.entries[(s * self.x_size + x) * self.y_size + y]
    }

    /// The output distribution `w(·|x,s)` as a slice.
    pub fn row(&self, x: usize, s: usize) -> &[f64] {
        let base = (s * self.x_size + x) * self.y_size;
        &self.entries[base..base + self.y_size]
    }

    /// The channel `W_s`.
    pub fn channel_for_state(&self, s: usize) -> Channel {
        Channel::from_rows((0..self.x_size).map(|x| self.row(x, s).to_vec()).collect())
            .expect("AVC slices are valid channels")
    }

    pub fn tensor(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.s_size)
            .map(|s| (0..self.x_size).map(|x| self.row(x, s).to_vec()).collect())
            .collect()
    }
}

impl Serialize for Avc {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("Avc", 4)?;
        st.serialize_field("x_size", &self.x_size)?;
        st.serialize_field("s_size", &self.s_size)?;
        st.serialize_field("y_size", &self.y_size)?;
        st.serialize_field("w", &self.tensor())?;
        st.end()
    }
}

/// The AVC rearranged as a `|Y| × (|X|·|S|)` column-stochastic matrix, column
/// `(x, s)` (x most significant) holding `w(·|x,s)`. Left-invertibility of
/// this matrix is what the rank checks decide.
#[derive(Debug, Clone, Serialize)]
pub struct ChannelMatrixView {
    pub rows: Vec<Vec<f64>>,
    pub x_size: usize,
    pub s_size: usize,
}

impl ChannelMatrixView {
    pub fn column_count(&self) -> usize {
        self.x_size * self.s_size
    }

    /// The column for the input/state pair `(x, s)`.
    pub fn column(&self, x: usize, s: usize) -> Vec<f64> {
        let j = x * self.s_size + s;
        self.rows.iter().map(|r| r[j]).collect()
    }
}

/// Packs a word over an alphabet of size `base` into a single big-endian
/// composite index.
pub fn composite_index(word: &[usize], base: usize) -> usize {
    word.iter().fold(0, |acc, &letter| {
        debug_assert!(letter < base);
        acc * base + letter
    })
}

/// Inverse of [`composite_index`].
pub fn word_from_index(mut index: usize, base: usize, len: usize) -> Vec<usize> {
    let mut word = vec![0; len];
    for slot in word.iter_mut().rev() {
        *slot = index % base;
        index /= base;
    }
    word
}

fn checked_alphabet_power(base: usize, exp: usize, what: &str) -> Result<usize> {
    let size = (base as u128).checked_pow(exp as u32).unwrap_or(u128::MAX);
    if size > COMPOSITE_ALPHABET_GUARD as u128 {
        return Err(Error::GuardExceeded {
            what: what.to_string(),
            size,
            limit: COMPOSITE_ALPHABET_GUARD as u128,
        });
    }
    Ok(size as usize)
}

/// Pushes a distribution through a channel: `q(y) = Σ_x p(x) w(y|x)`.
pub fn apply_channel(w: &Channel, p: &Dist) -> Result<Dist> {
    if p.len() != w.input_size() {
        return Err(Error::DimensionMismatch {
            what: "channel input",
            expected: w.input_size(),
            got: p.len(),
        });
    }
    let mut out = vec![0.0; w.output_size()];
    for (x, &px) in p.weights().iter().enumerate() {
        if px == 0.0 {
            continue;
        }
        for (y, &wyx) in w.row(x).iter().enumerate() {
            out[y] += px * wyx;
        }
    }
    Dist::new(out)
}

/// Channel composition `q ∘ w` (first `w`, then `q`).
pub fn compose(q: &Channel, w: &Channel) -> Result<Channel> {
    if q.input_size() != w.output_size() {
        return Err(Error::DimensionMismatch {
            what: "channel composition",
            expected: w.output_size(),
            got: q.input_size(),
        });
    }
    let rows = (0..w.input_size())
        .map(|x| {
            let mut row = vec![0.0; q.output_size()];
            for (y, &wyx) in w.row(x).iter().enumerate() {
                if wyx == 0.0 {
                    continue;
                }
                for (z, &qzy) in q.row(y).iter().enumerate() {
                    row[z] += qzy * wyx;
                }
            }
            row
        })
        .collect();
    Channel::from_rows(rows)
}

/// Tensor product of two channels on the product alphabets.
pub fn tensor_channels(w1: &Channel, w2: &Channel) -> Channel {
    let in_size = w1.input_size() * w2.input_size();
    let out_size = w1.output_size() * w2.output_size();
    let mut rows = Vec::with_capacity(in_size);
    for x1 in 0..w1.input_size() {
        for x2 in 0..w2.input_size() {
            let mut row = Vec::with_capacity(out_size);
            for &a in w1.row(x1) {
                for &b in w2.row(x2) {
                    row.push(a * b);
                }
            }
            rows.push(row);
        }
    }
    Channel::from_rows(rows).expect("tensor of stochastic rows is stochastic")
}

/// Probability of receiving `y_word` when `x_word` is sent under the state
/// word `s_word`; the product of per-letter probabilities.
pub fn word_probability(avc: &Avc, y_word: &[usize], x_word: &[usize], s_word: &[usize]) -> Result<f64> {
    if y_word.len() != x_word.len() || x_word.len() != s_word.len() {
        return Err(Error::InvalidInput(format!(
            "word lengths differ: |y|={}, |x|={}, |s|={}",
            y_word.len(),
            x_word.len(),
            s_word.len()
        )));
    }
    let mut p = 1.0;
    for ((&y, &x), &s) in y_word.iter().zip(x_word).zip(s_word) {
        if y >= avc.y_size() || x >= avc.x_size() || s >= avc.s_size() {
            return Err(Error::InvalidInput(format!(
                "symbol out of alphabet: (y={y}, x={x}, s={s})"
            )));
        }
        p *= avc.prob(y, x, s);
        if p == 0.0 {
            return Ok(0.0);
        }
    }
    Ok(p)
}

/// The channel sending `x` to the `J`-fold product of `w(·|x)`; outputs live
/// on `Y^J` under the composite-index convention.
pub fn repetition_channel(w: &Channel, j: usize) -> Result<Channel> {
    if j == 0 {
        return Err(Error::InvalidInput("repetition with J = 0".into()));
    }
    checked_alphabet_power(w.output_size(), j, "|Y|^J")?;
    let mut result = w.clone();
    for _ in 1..j {
        // Diagonal restriction of the tensor power: row x of the result is
        // row (x, x) of result ⊗ w.
        let rows = (0..w.input_size())
            .map(|x| {
                let mut row = Vec::with_capacity(result.output_size() * w.output_size());
                for &a in result.row(x) {
                    for &b in w.row(x) {
                        row.push(a * b);
                    }
                }
                row
            })
            .collect();
        result = Channel::from_rows(rows)?;
    }
    Ok(result)
}

/// The deterministic embedding sending letter `a` to the constant word
/// `(a, …, a)` of length `J`.
pub fn repetition_embedding(size: usize, j: usize) -> Result<Channel> {
    if j == 0 {
        return Err(Error::InvalidInput("embedding with J = 0".into()));
    }
    let out_size = checked_alphabet_power(size, j, "|A|^J")?;
    let rows = (0..size)
        .map(|a| {
            let mut row = vec![0.0; out_size];
            row[composite_index(&vec![a; j], size)] = 1.0;
            row
        })
        .collect();
    Channel::from_rows(rows)
}

/// The block-extended AVC with inputs X, states S and outputs `Y^J`:
/// `v(y^J | x, s) = Π_j w(y_j | x, s)`. Both coder and jammer hold their
/// letter constant over the block.
pub fn extended_block_avc(avc: &Avc, j: usize) -> Result<Avc> {
    if j == 0 {
        return Err(Error::InvalidInput("block extension with J = 0".into()));
    }
    let out_size = checked_alphabet_power(avc.y_size(), j, "|Y|^J")?;
    let tensor = (0..avc.s_size())
        .map(|s| {
            (0..avc.x_size())
                .map(|x| {
                    let base = avc.row(x, s);
                    let mut row = vec![1.0; 1];
                    for _ in 0..j {
                        let mut next = Vec::with_capacity(row.len() * base.len());
                        for &a in &row {
                            for &b in base {
                                next.push(a * b);
                            }
                        }
                        row = next;
                    }
                    debug_assert_eq!(row.len(), out_size);
                    row
                })
                .collect()
        })
        .collect();
    Avc::from_tensor(tensor)
}

/// Averages the state out of an AVC: `w_q(y|x) = Σ_s q(s) w(y|x,s)`.
pub fn averaged_channel(avc: &Avc, q: &Dist) -> Result<Channel> {
    if q.len() != avc.s_size() {
        return Err(Error::DimensionMismatch {
            what: "state distribution",
            expected: avc.s_size(),
            got: q.len(),
        });
    }
    let rows = (0..avc.x_size())
        .map(|x| {
            let mut row = vec![0.0; avc.y_size()];
            for (s, &qs) in q.weights().iter().enumerate() {
                if qs == 0.0 {
                    continue;
                }
                for (y, &wy) in avc.row(x, s).iter().enumerate() {
                    row[y] += qs * wy;
                }
            }
            row
        })
        .collect();
    Channel::from_rows(rows)
}

/// The channel seen by the coder when the jammer correlates the state with
/// the input through `t ∈ C(X, S)`: row `x` is `Σ_s t(s|x) w(·|x,s)`.
pub fn effective_channel(avc: &Avc, t: &Channel) -> Result<Channel> {
    if t.input_size() != avc.x_size() || t.output_size() != avc.s_size() {
        return Err(Error::DimensionMismatch {
            what: "input-to-state map",
            expected: avc.x_size() * avc.s_size(),
            got: t.input_size() * t.output_size(),
        });
    }
    let rows = (0..avc.x_size())
        .map(|x| {
            let mut row = vec![0.0; avc.y_size()];
            for (s, &tsx) in t.row(x).iter().enumerate() {
                if tsx == 0.0 {
                    continue;
                }
                for (y, &wy) in avc.row(x, s).iter().enumerate() {
                    row[y] += tsx * wy;
                }
            }
            row
        })
        .collect();
    Channel::from_rows(rows)
}

/// Rearranges the AVC into its `|Y| × (|X|·|S|)` matrix view.
pub fn channel_matrix_view(avc: &Avc) -> ChannelMatrixView {
    let rows = (0..avc.y_size())
        .map(|y| {
            let mut row = Vec::with_capacity(avc.x_size() * avc.s_size());
            for x in 0..avc.x_size() {
                for s in 0..avc.s_size() {
                    row.push(avc.prob(y, x, s));
                }
            }
            row
        })
        .collect();
    ChannelMatrixView {
        rows,
        x_size: avc.x_size(),
        s_size: avc.s_size(),
    }
}

/// The AVC obtained by quantizing the output through `q ∈ C(Y, Z)`:
/// `v(z|x,s) = Σ_y q(z|y) w(y|x,s)`.
pub fn quantize_avc(avc: &Avc, q: &Channel) -> Result<Avc> {
    if q.input_size() != avc.y_size() {
        return Err(Error::DimensionMismatch {
            what: "quantizer input",
            expected: avc.y_size(),
            got: q.input_size(),
        });
    }
    let tensor = (0..avc.s_size())
        .map(|s| {
            (0..avc.x_size())
                .map(|x| {
                    let mut row = vec![0.0; q.output_size()];
                    for (y, &wy) in avc.row(x, s).iter().enumerate() {
                        if wy == 0.0 {
                            continue;
                        }
                        for (z, &qzy) in q.row(y).iter().enumerate() {
                            row[z] += qzy * wy;
                        }
                    }
                    row
                })
                .collect()
        })
        .collect();
    Avc::from_tensor(tensor)
}

/// The two-state test AVC with one binary symmetric channel per state.
pub fn two_state_bsc(eps0: f64, eps1: f64) -> Result<Avc> {
    Avc::from_channels(&[Channel::bsc(eps0)?, Channel::bsc(eps1)?])
}
