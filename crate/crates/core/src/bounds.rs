//! Analytic upper bounds on the expected stopping time.
//!
//! The per-stage subspace-collision probability bound is an alternating sum
//! of binomial-coefficient ratios evaluated in exact big-rational arithmetic;
//! conversion to floating point happens only at the boundary. The stopping
//! time bound combines those stage values with the total reception mass of
//! the network.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::radio::ReceptionMatrix;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BoundsError {
    #[error("the bound requires at least 2 nodes, got {0}")]
    NodeCountTooSmall(usize),
    #[error("stage index {i} out of range 1..={max} for {n} nodes")]
    StageOutOfRange { i: usize, n: usize, max: usize },
    #[error("total reception probability is zero (disconnected radio environment)")]
    ZeroReceptionSum,
}

/// Binomial coefficient under the counting convention: zero whenever
/// `a < 0`, `b < 0` or `b > a`. This convention makes the alternating sums
/// below terminate.
pub fn binom(a: i64, b: i64) -> BigUint {
    if a < 0 || b < 0 || b > a {
        return BigUint::zero();
    }
    let b = b.min(a - b);
    let mut result = BigUint::one();
    for step in 0..b {
        // exact at every step: result already holds binom(a, step)
        result = result * BigUint::from((a - step) as u64) / BigUint::from((step + 1) as u64);
    }
    result
}

fn binom_signed(a: i64, b: i64) -> BigInt {
    BigInt::from(binom(a, b))
}

/// The exact per-stage collision-probability bound.
#[derive(Debug, Clone, PartialEq)]
pub struct CollisionBound {
    /// Exact rational value of the bound expression.
    pub exact: BigRational,
    /// Set when the expression is unusable as a probability: it reached 1 or
    /// a denominator sum vanished.
    pub degenerate: bool,
}

impl CollisionBound {
    /// Floating-point view of the exact value.
    pub fn value(&self) -> f64 {
        self.exact.to_f64().unwrap_or(f64::INFINITY)
    }
}

/// Upper bound on the probability that two nodes span the same subspace at
/// the stage where the total dimension increase first reaches i*(N-1).
///
/// Evaluates, over k = 1..N-1 with j running until every binomial vanishes:
///
/// ```text
/// sum_k min(i/k, (N-i)/(N-k-1))
///       * [sum_j (-1)^j C(N-1,j) C(N(i-j+1)-(i+2+k), N-2)]
///       / [sum_j (-1)^j C(N,j)   C(N(i-j+1)-(i+1),   N-1)]
/// ```
///
/// At k = N-1 the second min argument is +infinity, so the weight is i/k.
pub fn p_same_subspace_bound(n: usize, i: usize) -> Result<CollisionBound, BoundsError> {
    if n < 2 {
        return Err(BoundsError::NodeCountTooSmall(n));
    }
    if i < 1 || i > n - 1 {
        return Err(BoundsError::StageOutOfRange { i, n, max: n - 1 });
    }
    let n_i64 = n as i64;
    let i_i64 = i as i64;

    // the denominator sum does not depend on k
    let mut denominator = BigInt::zero();
    for j in 0..=n_i64 {
        let term = binom_signed(n_i64, j) * binom_signed(n_i64 * (i_i64 - j + 1) - (i_i64 + 1), n_i64 - 1);
        if j % 2 == 0 {
            denominator += term;
        } else {
            denominator -= term;
        }
    }
    if denominator.is_zero() {
        return Ok(CollisionBound {
            exact: BigRational::zero(),
            degenerate: true,
        });
    }

    let mut total = BigRational::zero();
    for k in 1..n_i64 {
        let stage_ratio = BigRational::new(BigInt::from(i_i64), BigInt::from(k));
        let weight = if n_i64 - k - 1 == 0 {
            // the second argument is +infinity, min resolves to i/k
            stage_ratio
        } else {
            let remainder_ratio =
                BigRational::new(BigInt::from(n_i64 - i_i64), BigInt::from(n_i64 - k - 1));
            stage_ratio.min(remainder_ratio)
        };
        let mut numerator = BigInt::zero();
        for j in 0..=n_i64 {
            let term = binom_signed(n_i64 - 1, j)
                * binom_signed(n_i64 * (i_i64 - j + 1) - (i_i64 + 2 + k), n_i64 - 2);
            if j % 2 == 0 {
                numerator += term;
            } else {
                numerator -= term;
            }
        }
        total += weight * BigRational::new(numerator, denominator.clone());
    }

    let degenerate = total >= BigRational::one();
    Ok(CollisionBound {
        exact: total,
        degenerate,
    })
}

/// Node count and total reception mass extracted from a radio environment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInput {
    pub n: usize,
    /// Sum of P_uv over ordered pairs u != v.
    pub sum_reception: f64,
}

impl BoundInput {
    pub fn from_matrix(matrix: &ReceptionMatrix) -> Result<Self, BoundsError> {
        let input = BoundInput {
            n: matrix.n(),
            sum_reception: matrix.sum_off_diagonal(),
        };
        input.validate()?;
        Ok(input)
    }

    fn validate(&self) -> Result<(), BoundsError> {
        if self.n < 2 {
            return Err(BoundsError::NodeCountTooSmall(self.n));
        }
        if self.sum_reception.is_nan() || self.sum_reception <= 0.0 {
            return Err(BoundsError::ZeroReceptionSum);
        }
        Ok(())
    }
}

/// The evaluated stopping-time bound.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundResult {
    /// Bound in slots; +infinity when degenerate.
    pub value: f64,
    /// True when some stage bound was unusable (>= 1 or undefined), making
    /// the bound vacuous. No clamping is applied.
    pub degenerate: bool,
    /// The N-1 per-stage collision probabilities, converted to floats.
    pub per_i_terms: Vec<f64>,
}

/// Expected-stopping-time upper bound for a radio environment:
/// `2N(N-1)/sum_P * (sum_i 1/(1 - p_i) + N)`.
pub fn expected_stopping_bound(matrix: &ReceptionMatrix) -> Result<BoundResult, BoundsError> {
    expected_stopping_bound_from(BoundInput::from_matrix(matrix)?)
}

pub fn expected_stopping_bound_from(input: BoundInput) -> Result<BoundResult, BoundsError> {
    input.validate()?;
    let n = input.n;
    let mut per_i_terms = Vec::with_capacity(n - 1);
    let mut series = 0.0f64;
    let mut degenerate = false;
    for i in 1..n {
        let stage = p_same_subspace_bound(n, i).expect("stage index in range");
        let p = stage.value();
        per_i_terms.push(p);
        if stage.degenerate {
            degenerate = true;
        } else {
            series += 1.0 / (1.0 - p);
        }
    }
    let value = if degenerate {
        f64::INFINITY
    } else {
        2.0 * (n * (n - 1)) as f64 / input.sum_reception * (series + n as f64)
    };
    Ok(BoundResult {
        value,
        degenerate,
        per_i_terms,
    })
}
