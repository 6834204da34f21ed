//! Coded-message representation and per-node subspace buffers.
//!
//! A [`SubspaceBuffer`] holds a node's received information as a row-reduced
//! basis of (coefficient vector, payload) pairs over GF(2^q). Insertion keeps
//! the basis in reduced row-echelon form, so the span dimension is just the
//! row count, innovation detection is a single reduction pass, and decoding a
//! full-rank buffer is immediate (the coefficient matrix is the identity).

use rand::RngCore;
use thiserror::Error;

use crate::galois::{FieldContext, FieldElement};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodingError {
    #[error("packet origin {origin} out of range for a network of {n} nodes")]
    OriginOutOfRange { origin: usize, n: usize },
    #[error("a packet must carry at least one symbol")]
    EmptyPayload,
    #[error("network must contain at least one node")]
    EmptyNetwork,
    #[error(
        "message shape ({coefficients} coefficients, {payload} payload symbols) \
         does not match buffer shape ({n}, {r})"
    )]
    DimensionMismatch {
        coefficients: usize,
        payload: usize,
        n: usize,
        r: usize,
    },
    #[error("cannot encode from an empty buffer")]
    EmptyBuffer,
    #[error("buffer spans only {dim} of {n} dimensions, not decodable")]
    NotDecodable { dim: usize, n: usize },
    #[error("serialized message must be {expected} bytes, got {got}")]
    WrongByteLength { expected: usize, got: usize },
}

/// One of the N original data units, initially held by exactly one node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InformationPacket {
    pub origin: usize,
    pub symbols: Vec<FieldElement>,
}

impl InformationPacket {
    pub fn new(origin: usize, symbols: Vec<FieldElement>) -> Result<Self, CodingError> {
        if symbols.is_empty() {
            return Err(CodingError::EmptyPayload);
        }
        Ok(InformationPacket { origin, symbols })
    }
}

/// A linear combination of information packets together with the coefficient
/// vector that produced it. This is the unit of transmission.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodedMessage {
    /// Length N; entry k is the weight of information packet k.
    pub coefficients: Vec<FieldElement>,
    /// Length r; the combined payload symbols.
    pub payload: Vec<FieldElement>,
}

impl CodedMessage {
    /// Byte length of the wire encoding: a header of `n` q-bit coefficients
    /// packed big-endian, then a body of `r` q-bit symbols. Header and body
    /// are each padded to a byte boundary with zero bits.
    pub fn packed_len(q: u8, n: usize, r: usize) -> usize {
        packed_section_len(q, n) + packed_section_len(q, r)
    }

    pub fn to_bytes(&self, q: u8) -> Vec<u8> {
        let mut out =
            Vec::with_capacity(CodedMessage::packed_len(q, self.coefficients.len(), self.payload.len()));
        pack_elements(&self.coefficients, q, &mut out);
        pack_elements(&self.payload, q, &mut out);
        out
    }

    pub fn from_bytes(bytes: &[u8], q: u8, n: usize, r: usize) -> Result<Self, CodingError> {
        let expected = CodedMessage::packed_len(q, n, r);
        if bytes.len() != expected {
            return Err(CodingError::WrongByteLength {
                expected,
                got: bytes.len(),
            });
        }
        let header_len = packed_section_len(q, n);
        Ok(CodedMessage {
            coefficients: unpack_elements(&bytes[..header_len], q, n),
            payload: unpack_elements(&bytes[header_len..], q, r),
        })
    }
}

fn packed_section_len(q: u8, count: usize) -> usize {
    (count * q as usize).div_ceil(8)
}

/// MSB-first bit packing of q-bit values.
fn pack_elements(elems: &[FieldElement], q: u8, out: &mut Vec<u8>) {
    let mut acc: u32 = 0;
    let mut bits: u8 = 0;
    for e in elems {
        debug_assert!(u32::from(e.value()) < 1 << q);
        acc = (acc << q) | u32::from(e.value());
        bits += q;
        while bits >= 8 {
            bits -= 8;
            out.push((acc >> bits) as u8);
        }
    }
    if bits > 0 {
        out.push((acc << (8 - bits)) as u8);
    }
}

fn unpack_elements(bytes: &[u8], q: u8, count: usize) -> Vec<FieldElement> {
    let mut elems = Vec::with_capacity(count);
    let mut acc: u32 = 0;
    let mut bits: u8 = 0;
    let mut iter = bytes.iter();
    for _ in 0..count {
        while bits < q {
            acc = (acc << 8) | u32::from(*iter.next().expect("length checked"));
            bits += 8;
        }
        bits -= q;
        let mask = (1u32 << q) - 1;
        elems.push(FieldElement::from_raw(((acc >> bits) & mask) as u16));
    }
    elems
}

/// dst[i] += c * src[i] over GF(2^q) (subtraction coincides with addition).
#[inline]
fn axpy(ctx: &FieldContext, dst: &mut [FieldElement], src: &[FieldElement], c: FieldElement) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d = ctx.add(*d, ctx.mul(c, *s));
    }
}

#[inline]
fn scale(ctx: &FieldContext, v: &mut [FieldElement], c: FieldElement) {
    for e in v.iter_mut() {
        *e = ctx.mul(*e, c);
    }
}

#[derive(Debug, Clone)]
struct BasisRow {
    pivot: usize,
    coefficients: Vec<FieldElement>,
    payload: Vec<FieldElement>,
}

/// A node's row-reduced basis of received coefficient vectors and payloads.
///
/// Invariants: rows are in reduced row-echelon form (each pivot is 1 and its
/// column is zero in every other row), sorted by pivot column; the dimension
/// of the span equals the row count, never exceeds N and never decreases.
#[derive(Debug, Clone)]
pub struct SubspaceBuffer {
    n: usize,
    r: usize,
    rows: Vec<BasisRow>,
}

impl SubspaceBuffer {
    /// An empty buffer (dimension 0). Supports starting states where a node
    /// initially holds no packet.
    pub fn empty(n: usize, r: usize) -> Result<Self, CodingError> {
        if n == 0 {
            return Err(CodingError::EmptyNetwork);
        }
        if r == 0 {
            return Err(CodingError::EmptyPayload);
        }
        Ok(SubspaceBuffer {
            n,
            r,
            rows: Vec::new(),
        })
    }

    /// The standard starting state: one row holding the node's own packet
    /// under the unit coefficient vector, so the initial dimension is 1.
    pub fn new(own_packet: &InformationPacket, n: usize) -> Result<Self, CodingError> {
        if own_packet.origin >= n {
            return Err(CodingError::OriginOutOfRange {
                origin: own_packet.origin,
                n,
            });
        }
        let mut buffer = SubspaceBuffer::empty(n, own_packet.symbols.len())?;
        let mut coefficients = vec![FieldElement::ZERO; n];
        coefficients[own_packet.origin] = FieldElement::ONE;
        buffer.rows.push(BasisRow {
            pivot: own_packet.origin,
            coefficients,
            payload: own_packet.symbols.clone(),
        });
        Ok(buffer)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    /// Current dimension of the stored span.
    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn is_complete(&self) -> bool {
        self.rows.len() == self.n
    }

    pub fn pivot_columns(&self) -> Vec<usize> {
        self.rows.iter().map(|row| row.pivot).collect()
    }

    /// A copy of the basis coefficient rows (useful for rank cross-checks).
    pub fn coefficient_matrix(&self) -> Vec<Vec<FieldElement>> {
        self.rows.iter().map(|row| row.coefficients.clone()).collect()
    }

    /// Draws one combination weight per basis row, uniformly over the field,
    /// resampling the whole vector while it is all-zero.
    pub fn draw_coefficients<R: RngCore + ?Sized>(
        &self,
        ctx: &FieldContext,
        rng: &mut R,
    ) -> Result<Vec<FieldElement>, CodingError> {
        if self.rows.is_empty() {
            return Err(CodingError::EmptyBuffer);
        }
        let mut weights = vec![FieldElement::ZERO; self.rows.len()];
        loop {
            for w in weights.iter_mut() {
                *w = ctx.sample(rng);
            }
            if weights.iter().any(|w| !w.is_zero()) {
                return Ok(weights);
            }
        }
    }

    /// Forms the linear combination of the basis under the given weights.
    /// Because basis rows are independent and the weights are not all zero,
    /// the resulting coefficient vector is nonzero and lies in the span.
    pub fn combine(&self, ctx: &FieldContext, weights: &[FieldElement]) -> CodedMessage {
        debug_assert_eq!(weights.len(), self.rows.len());
        let mut coefficients = vec![FieldElement::ZERO; self.n];
        let mut payload = vec![FieldElement::ZERO; self.r];
        for (row, &w) in self.rows.iter().zip(weights) {
            if !w.is_zero() {
                axpy(ctx, &mut coefficients, &row.coefficients, w);
                axpy(ctx, &mut payload, &row.payload, w);
            }
        }
        CodedMessage {
            coefficients,
            payload,
        }
    }

    /// Encodes a broadcast: a uniformly random nonzero combination of
    /// everything the buffer currently contains.
    pub fn encode<R: RngCore + ?Sized>(
        &self,
        ctx: &FieldContext,
        rng: &mut R,
    ) -> Result<CodedMessage, CodingError> {
        let weights = self.draw_coefficients(ctx, rng)?;
        Ok(self.combine(ctx, &weights))
    }

    /// Reduces `msg` against the basis. If a nonzero residual remains the
    /// message is innovative: the residual is normalized, back-substituted
    /// into the existing rows and inserted, and the call returns `true`.
    /// Otherwise the buffer is unchanged and the call returns `false`.
    /// Payloads undergo exactly the row operations applied to coefficients.
    pub fn insert(&mut self, ctx: &FieldContext, msg: &CodedMessage) -> Result<bool, CodingError> {
        if msg.coefficients.len() != self.n || msg.payload.len() != self.r {
            return Err(CodingError::DimensionMismatch {
                coefficients: msg.coefficients.len(),
                payload: msg.payload.len(),
                n: self.n,
                r: self.r,
            });
        }
        let mut coefficients = msg.coefficients.clone();
        let mut payload = msg.payload.clone();
        for row in &self.rows {
            let c = coefficients[row.pivot];
            if !c.is_zero() {
                axpy(ctx, &mut coefficients, &row.coefficients, c);
                axpy(ctx, &mut payload, &row.payload, c);
            }
        }
        let Some(pivot) = coefficients.iter().position(|c| !c.is_zero()) else {
            return Ok(false);
        };
        let inv = ctx
            .inv(coefficients[pivot])
            .expect("pivot entry is nonzero");
        scale(ctx, &mut coefficients, inv);
        scale(ctx, &mut payload, inv);
        for row in &mut self.rows {
            let c = row.coefficients[pivot];
            if !c.is_zero() {
                axpy(ctx, &mut row.coefficients, &coefficients, c);
                axpy(ctx, &mut row.payload, &payload, c);
            }
        }
        let at = self.rows.partition_point(|row| row.pivot < pivot);
        self.rows.insert(
            at,
            BasisRow {
                pivot,
                coefficients,
                payload,
            },
        );
        Ok(true)
    }

    /// Recovers the N original packets, in origin order. Requires full rank;
    /// the back-substitution has already happened incrementally, so the
    /// coefficient matrix of a full buffer is the identity.
    pub fn decode(&self) -> Result<Vec<InformationPacket>, CodingError> {
        if self.rows.len() < self.n {
            return Err(CodingError::NotDecodable {
                dim: self.rows.len(),
                n: self.n,
            });
        }
        Ok(self
            .rows
            .iter()
            .enumerate()
            .map(|(origin, row)| {
                debug_assert_eq!(row.pivot, origin);
                debug_assert!(row
                    .coefficients
                    .iter()
                    .enumerate()
                    .all(|(k, c)| (k == origin) == (*c == FieldElement::ONE)
                        && (k == origin || c.is_zero())));
                InformationPacket {
                    origin,
                    symbols: row.payload.clone(),
                }
            })
            .collect())
    }
}

/// Rank of a coefficient matrix by full, non-incremental Gaussian
/// elimination. Deliberately a separate code path from [`SubspaceBuffer`],
/// used to cross-check its incremental dimension tracking.
pub fn rank_oracle(ctx: &FieldContext, rows: &[Vec<FieldElement>]) -> usize {
    let Some(cols) = rows.first().map(Vec::len) else {
        return 0;
    };
    assert!(
        rows.iter().all(|row| row.len() == cols),
        "rank_oracle requires a rectangular matrix"
    );
    let mut m: Vec<Vec<FieldElement>> = rows.to_vec();
    let mut rank = 0;
    for col in 0..cols {
        let Some(src) = (rank..m.len()).find(|&i| !m[i][col].is_zero()) else {
            continue;
        };
        m.swap(rank, src);
        let inv = ctx.inv(m[rank][col]).expect("pivot is nonzero");
        for i in rank + 1..m.len() {
            let factor = ctx.mul(m[i][col], inv);
            if !factor.is_zero() {
                let (upper, lower) = m.split_at_mut(i);
                axpy(ctx, &mut lower[0], &upper[rank], factor);
            }
        }
        rank += 1;
        if rank == m.len() {
            break;
        }
    }
    rank
}
