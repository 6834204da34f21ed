//! Arithmetic over the binary extension fields GF(2^q) used for coding
//! coefficients and payload symbols.
//!
//! Elements are bit patterns of polynomials over GF(2); addition is XOR and
//! multiplication is carry-less polynomial multiplication modulo a fixed
//! irreducible polynomial. For q <= 8 a [`FieldContext`] precomputes log and
//! antilog tables over a multiplicative generator; for q = 16 it multiplies
//! directly with a shift-and-reduce loop to keep memory bounded.

use std::fmt;

use rand::RngCore;
use thiserror::Error;

/// Field bit-widths with a built-in reduction polynomial.
pub const SUPPORTED_WIDTHS: &[u8] = &[1, 4, 8, 16];

/// Known-irreducible reduction polynomials per width, including the x^q term.
/// Construction only accepts polynomials from this list.
const KNOWN_POLYNOMIALS: &[(u8, &[u32])] = &[
    (1, &[0b10, 0b11]),
    (4, &[0x13, 0x19, 0x1F]),
    (8, &[0x11B, 0x11D]),
    (16, &[0x1100B]),
];

/// Default polynomial per width; q = 8 uses x^8 + x^4 + x^3 + x + 1.
const DEFAULT_POLYNOMIALS: &[(u8, u32)] = &[(1, 0b11), (4, 0x13), (8, 0x11B), (16, 0x1100B)];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GaloisError {
    #[error("unsupported field width q={0} (supported: 1, 4, 8, 16)")]
    UnsupportedWidth(u8),
    #[error("polynomial {poly:#x} is not a known irreducible of degree {q}")]
    UnknownPolynomial { q: u8, poly: u32 },
    #[error("value {value:#x} out of range for GF(2^{q})")]
    ElementOutOfRange { q: u8, value: u32 },
    #[error("zero has no multiplicative inverse")]
    InversionOfZero,
}

/// An element of GF(2^q). The raw value is always < 2^q for the context the
/// element was created in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct FieldElement(u16);

impl FieldElement {
    pub const ZERO: FieldElement = FieldElement(0);
    pub const ONE: FieldElement = FieldElement(1);

    #[inline]
    pub fn value(self) -> u16 {
        self.0
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// Internal unchecked constructor; callers guarantee the value fits.
    #[inline]
    pub(crate) fn from_raw(value: u16) -> FieldElement {
        FieldElement(value)
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#x}", self.0)
    }
}

struct MulTables {
    /// Discrete log base the chosen generator; index 0 is unused.
    log: Box<[u16]>,
    /// Powers of the generator, mirrored so `exp[log a + log b]` needs no
    /// modular reduction. Length 2 * order.
    exp: Box<[u16]>,
}

/// The finite field GF(2^q): width, reduction polynomial and optional
/// multiplication tables. Immutable after construction and freely shareable
/// across threads; all operations are pure.
pub struct FieldContext {
    q: u8,
    poly: u32,
    mask: u16,
    /// 2^q - 1, the size of the multiplicative group.
    order: u32,
    tables: Option<MulTables>,
}

impl FieldContext {
    /// Builds the field with the default reduction polynomial for `q`.
    pub fn new(q: u8) -> Result<FieldContext, GaloisError> {
        let poly = DEFAULT_POLYNOMIALS
            .iter()
            .find(|(w, _)| *w == q)
            .map(|(_, p)| *p)
            .ok_or(GaloisError::UnsupportedWidth(q))?;
        FieldContext::with_polynomial(q, poly)
    }

    /// Builds the field with an explicit reduction polynomial, which must be
    /// one of the built-in known irreducibles for `q`.
    pub fn with_polynomial(q: u8, poly: u32) -> Result<FieldContext, GaloisError> {
        let known = KNOWN_POLYNOMIALS
            .iter()
            .find(|(w, _)| *w == q)
            .map(|(_, list)| *list)
            .ok_or(GaloisError::UnsupportedWidth(q))?;
        if !known.contains(&poly) {
            return Err(GaloisError::UnknownPolynomial { q, poly });
        }
        let order = (1u32 << q) - 1;
        let tables = (q <= 8).then(|| build_tables(q, poly, order));
        Ok(FieldContext {
            q,
            poly,
            mask: order as u16,
            order,
            tables,
        })
    }

    pub fn q(&self) -> u8 {
        self.q
    }

    pub fn reduction_polynomial(&self) -> u32 {
        self.poly
    }

    /// Number of field elements, 2^q.
    pub fn size(&self) -> u32 {
        self.order + 1
    }

    /// Validates a raw value and wraps it as an element of this field.
    pub fn element(&self, value: u16) -> Result<FieldElement, GaloisError> {
        if u32::from(value) > self.order {
            return Err(GaloisError::ElementOutOfRange {
                q: self.q,
                value: u32::from(value),
            });
        }
        Ok(FieldElement(value))
    }

    /// Field addition: bitwise XOR. Every element is its own additive inverse.
    #[inline]
    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        FieldElement(a.0 ^ b.0)
    }

    /// Field multiplication: polynomial product modulo the reduction polynomial.
    #[inline]
    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        match &self.tables {
            Some(t) => {
                if a.0 == 0 || b.0 == 0 {
                    FieldElement::ZERO
                } else {
                    let idx = usize::from(t.log[a.0 as usize]) + usize::from(t.log[b.0 as usize]);
                    FieldElement(t.exp[idx])
                }
            }
            None => FieldElement(clmul_reduce(
                u32::from(a.0),
                u32::from(b.0),
                self.poly,
                self.q,
            ) as u16),
        }
    }

    /// Multiplicative inverse; zero is rejected.
    pub fn inv(&self, a: FieldElement) -> Result<FieldElement, GaloisError> {
        if a.is_zero() {
            return Err(GaloisError::InversionOfZero);
        }
        match &self.tables {
            Some(t) => {
                let idx = self.order as usize - usize::from(t.log[a.0 as usize]);
                Ok(FieldElement(t.exp[idx]))
            }
            // a^(2^q - 2) by square and multiply.
            None => {
                let mut result = FieldElement::ONE;
                let mut base = a;
                let mut e = self.order - 1;
                while e > 0 {
                    if e & 1 == 1 {
                        result = self.mul(result, base);
                    }
                    base = self.mul(base, base);
                    e >>= 1;
                }
                Ok(result)
            }
        }
    }

    /// Uniform draw over all 2^q elements. Masking a raw output word is
    /// unbiased because the field size is a power of two.
    #[inline]
    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> FieldElement {
        FieldElement(rng.next_u32() as u16 & self.mask)
    }
}

impl fmt::Debug for FieldContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldContext")
            .field("q", &self.q)
            .field("poly", &format_args!("{:#x}", self.poly))
            .field("tables", &self.tables.is_some())
            .finish()
    }
}

/// Carry-less multiply with interleaved reduction; both operands and the
/// result stay below 2^q throughout.
fn clmul_reduce(mut a: u32, mut b: u32, poly: u32, q: u8) -> u32 {
    let mut acc = 0u32;
    let high_bit = 1u32 << q;
    while b != 0 {
        if b & 1 == 1 {
            acc ^= a;
        }
        b >>= 1;
        a <<= 1;
        if a & high_bit != 0 {
            a ^= poly;
        }
    }
    acc
}

fn build_tables(q: u8, poly: u32, order: u32) -> MulTables {
    let size = order as usize + 1;
    let mut log = vec![0u16; size].into_boxed_slice();
    let mut exp = vec![0u16; 2 * order as usize] .into_boxed_slice();
    if order == 1 {
        // GF(2): the multiplicative group is trivial.
        exp[0] = 1;
        exp[1] = 1;
        return MulTables { log, exp };
    }
    // The reduction polynomial is irreducible but not necessarily primitive
    // (e.g. x is not a generator under 0x11B), so search for a generator.
    'candidates: for g in 2..=order {
        let mut value = 1u32;
        for step in 0..order {
            exp[step as usize] = value as u16;
            exp[(step + order) as usize] = value as u16;
            log[value as usize] = step as u16;
            value = clmul_reduce(value, g, poly, q);
            if value == 1 && step + 1 < order {
                continue 'candidates; // g has small order, try the next one
            }
        }
        debug_assert_eq!(value, 1);
        return MulTables { log, exp };
    }
    unreachable!("an irreducible polynomial always admits a generator");
}
