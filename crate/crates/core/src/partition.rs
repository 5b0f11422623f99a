//! Threshold splitting of a secret into the roots of a monic polynomial.
//!
//! A secret `d ∈ [1, p−1]` becomes an ordered tuple of nonzero roots
//! `(r_1, …, r_k)` with `r_1···r_k ≡ d (mod p)`. Evaluating the power basis
//! at n distinct nonzero points turns the tuple into n shares
//! `c_i = Σ_j r_j · x_i^{j−1}`; any k shares pin the tuple back down through
//! the inverse of the corresponding Vandermonde submatrix, and the product
//! of the recovered roots is the secret. Fewer than k shares leave a large
//! ambiguity set over possible secrets (see the candidate-set oracle in the
//! adversary module), which is weaker than perfect hiding.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_traits::One;
use thiserror::Error;

use crate::field::{FieldElement, FieldError, FieldMatrix, PrimeContext, rand_element};
use crate::rng::RandomSource;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PartitionError {
    #[error("secret must be nonzero: a zero secret has no root product")]
    ZeroSecret,
    #[error("roots must be nonzero field elements")]
    ZeroRoot,
    #[error("invalid threshold parameters: {0}")]
    InvalidParameters(String),
    #[error("evaluation points must be pairwise distinct (repeated {0})")]
    DuplicateEvaluationPoint(BigUint),
    #[error("evaluation points must be nonzero")]
    ZeroEvaluationPoint,
    #[error("expected exactly {expected} shares, got {got}")]
    WrongShareCount { expected: usize, got: usize },
    #[error("modulus {0} is too small for block encoding (need p >= 259)")]
    ModulusTooSmall(BigUint),
    #[error("malformed block: {0}")]
    MalformedBlock(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Ordered nonzero roots (r_1..r_k) whose product is the secret.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootTuple {
    roots: Vec<FieldElement>,
    ctx: PrimeContext,
}

impl RootTuple {
    /// Completes a tuple from fixed leading roots: the final root is
    /// `d · (r_1···r_{k−1})⁻¹`, so the product comes out to `d`.
    ///
    /// This is the deterministic tail of [`generate_roots`]; callers use it
    /// directly when the leading roots are dictated rather than drawn.
    pub fn complete(
        d: &FieldElement,
        leading: &[FieldElement],
    ) -> Result<RootTuple, PartitionError> {
        if d.is_zero() {
            return Err(PartitionError::ZeroSecret);
        }
        let ctx = d.context().clone();
        let mut product = ctx.one();
        for r in leading {
            if r.is_zero() {
                return Err(PartitionError::ZeroRoot);
            }
            product = product.mul(r);
        }
        let last = d.mul(&product.inv()?);
        let mut roots = leading.to_vec();
        roots.push(last);
        Ok(RootTuple { roots, ctx })
    }

    /// Wraps already-solved roots without the nonzero check; reconstruction
    /// of forged shares may legitimately produce zero roots.
    fn from_solution(roots: Vec<FieldElement>, ctx: PrimeContext) -> RootTuple {
        RootTuple { roots, ctx }
    }

    pub fn roots(&self) -> &[FieldElement] {
        &self.roots
    }

    pub fn k(&self) -> usize {
        self.roots.len()
    }

    pub fn context(&self) -> &PrimeContext {
        &self.ctx
    }
}

/// One share: evaluation point x and share value c, with a 1-based index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub index: usize,
    pub x: FieldElement,
    pub c: FieldElement,
}

/// A full (k, n) expansion: n partitions of which any k reconstruct.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShareSet {
    pub partitions: Vec<Partition>,
    pub k: usize,
    pub n: usize,
    pub ctx: PrimeContext,
}

/// Monic polynomial stored as its non-leading coefficients a_{k−1}..a_0
/// (highest degree first, leading 1 implicit).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonicPolynomial {
    coefficients: Vec<FieldElement>,
    ctx: PrimeContext,
}

impl MonicPolynomial {
    /// Degree of the polynomial (number of roots).
    pub fn degree(&self) -> usize {
        self.coefficients.len()
    }

    /// Coefficients a_{k−1}..a_0, highest degree first.
    pub fn coefficients(&self) -> &[FieldElement] {
        &self.coefficients
    }

    pub fn constant_term(&self) -> &FieldElement {
        self.coefficients.last().expect("degree >= 1")
    }
}

/// Draws r_1..r_{k−1} uniformly from [1, p−1] and solves the last root so
/// the product equals the secret.
pub fn generate_roots(
    d: &FieldElement,
    k: usize,
    rng: &mut dyn RandomSource,
) -> Result<RootTuple, PartitionError> {
    if d.is_zero() {
        return Err(PartitionError::ZeroSecret);
    }
    let ctx = d.context();
    let p_minus_1 = ctx.modulus() - BigUint::one();
    if k < 2 || BigUint::from(k) > p_minus_1 {
        return Err(PartitionError::InvalidParameters(format!(
            "k must satisfy 2 <= k <= p-1, got k={k} with p={}",
            ctx.modulus()
        )));
    }
    let one = BigUint::one();
    let leading: Vec<FieldElement> = (0..k - 1)
        .map(|_| rand_element(ctx, &one, rng))
        .collect();
    RootTuple::complete(d, &leading)
}

/// Expands ∏(x − r_i) mod p into a monic coefficient sequence.
pub fn poly_from_roots(roots: &RootTuple) -> MonicPolynomial {
    let ctx = roots.context();
    // ascending[j] = coefficient of x^j; start from the constant poly 1.
    let mut ascending = vec![ctx.one()];
    for r in roots.roots() {
        let mut next = vec![ctx.zero(); ascending.len() + 1];
        for (j, coeff) in ascending.iter().enumerate() {
            next[j + 1] = next[j + 1].add(coeff);
            next[j] = next[j].sub(&coeff.mul(r));
        }
        ascending = next;
    }
    let k = roots.k();
    let coefficients = (0..k).rev().map(|j| ascending[j].clone()).collect();
    MonicPolynomial {
        coefficients,
        ctx: ctx.clone(),
    }
}

fn check_points(xs: &[FieldElement]) -> Result<(), PartitionError> {
    let mut seen = BTreeSet::new();
    for x in xs {
        if x.is_zero() {
            return Err(PartitionError::ZeroEvaluationPoint);
        }
        if !seen.insert(x.value().clone()) {
            return Err(PartitionError::DuplicateEvaluationPoint(x.value().clone()));
        }
    }
    Ok(())
}

/// n×k matrix with row i = (1, x_i, x_i², …, x_i^{k−1}).
///
/// Distinct nonzero points make every k-row submatrix invertible, which is
/// what lets any k shares reconstruct the root tuple.
pub fn vandermonde(xs: &[FieldElement], k: usize) -> Result<FieldMatrix, PartitionError> {
    if k < 1 {
        return Err(PartitionError::InvalidParameters(
            "vandermonde needs k >= 1".to_string(),
        ));
    }
    check_points(xs)?;
    let ctx = xs
        .first()
        .map(|x| x.context().clone())
        .ok_or_else(|| PartitionError::InvalidParameters("no evaluation points".to_string()))?;
    let mut entries: Vec<BigUint> = Vec::with_capacity(xs.len() * k);
    for x in xs {
        let mut power = ctx.one();
        for _ in 0..k {
            entries.push(power.value().clone());
            power = power.mul(x);
        }
    }
    Ok(FieldMatrix::new(xs.len(), k, entries, &ctx)?)
}

/// The default evaluation points x_i = i for i = 1..n (requires n ≤ p−1).
pub fn default_points(ctx: &PrimeContext, n: usize) -> Result<Vec<FieldElement>, PartitionError> {
    if BigUint::from(n) > ctx.modulus() - BigUint::one() {
        return Err(PartitionError::InvalidParameters(format!(
            "n={n} exceeds the {} distinct nonzero points of Z_{}",
            ctx.modulus() - BigUint::one(),
            ctx.modulus()
        )));
    }
    Ok((1..=n).map(|i| ctx.element(BigUint::from(i))).collect())
}

/// Applies the Vandermonde map to the root tuple: c_i = Σ_j r_j · x_i^{j−1}.
pub fn expand_shares(
    roots: &RootTuple,
    xs: &[FieldElement],
) -> Result<ShareSet, PartitionError> {
    let k = roots.k();
    let n = xs.len();
    if n < k {
        return Err(PartitionError::InvalidParameters(format!(
            "need at least k={k} evaluation points, got {n}"
        )));
    }
    let matrix = vandermonde(xs, k)?;
    let root_values: Vec<BigUint> = roots.roots().iter().map(|r| r.value().clone()).collect();
    let cs = matrix.mul_vec(&root_values)?;
    let ctx = roots.context().clone();
    let partitions = xs
        .iter()
        .zip(cs)
        .enumerate()
        .map(|(i, (x, c))| Partition {
            index: i + 1,
            x: x.clone(),
            c: ctx.element(c),
        })
        .collect();
    Ok(ShareSet {
        partitions,
        k,
        n,
        ctx,
    })
}

/// Solves B·r = c for the root tuple, where B is the Vandermonde submatrix
/// of the k given shares. Share order does not matter; the solution is the
/// original ordered tuple either way.
pub fn reconstruct_roots(
    shares: &[Partition],
    k: usize,
    ctx: &PrimeContext,
) -> Result<RootTuple, PartitionError> {
    if shares.len() != k {
        return Err(PartitionError::WrongShareCount {
            expected: k,
            got: shares.len(),
        });
    }
    let xs: Vec<FieldElement> = shares.iter().map(|s| s.x.clone()).collect();
    let matrix = vandermonde(&xs, k)?;
    let inverse = matrix.inverse()?;
    let cs: Vec<BigUint> = shares.iter().map(|s| s.c.value().clone()).collect();
    let roots = inverse
        .mul_vec(&cs)?
        .into_iter()
        .map(|v| ctx.element(v))
        .collect();
    Ok(RootTuple::from_solution(roots, ctx.clone()))
}

/// The secret is the product of the roots.
pub fn recover_secret(roots: &RootTuple) -> FieldElement {
    let ctx = roots.context();
    roots
        .roots()
        .iter()
        .fold(ctx.one(), |acc, r| acc.mul(r))
}

/// All share values held by one recipient: a multi-block secret splits into
/// one ShareSet per block over shared evaluation points, and recipient i
/// keeps x_i together with its c value from every block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShareBundle {
    pub index: usize,
    pub x: FieldElement,
    pub c: Vec<FieldElement>,
}

/// Splits each secret block independently (fresh roots per block, shared
/// default points) and regroups the results per recipient.
pub fn split_blocks(
    blocks: &[FieldElement],
    k: usize,
    n: usize,
    rng: &mut dyn RandomSource,
) -> Result<Vec<ShareBundle>, PartitionError> {
    let ctx = blocks
        .first()
        .map(|b| b.context().clone())
        .ok_or_else(|| PartitionError::InvalidParameters("no secret blocks".to_string()))?;
    let xs = default_points(&ctx, n)?;
    let mut bundles: Vec<ShareBundle> = xs
        .iter()
        .enumerate()
        .map(|(i, x)| ShareBundle {
            index: i + 1,
            x: x.clone(),
            c: Vec::with_capacity(blocks.len()),
        })
        .collect();
    for d in blocks {
        let roots = generate_roots(d, k, rng)?;
        let set = expand_shares(&roots, &xs)?;
        for (bundle, part) in bundles.iter_mut().zip(set.partitions) {
            bundle.c.push(part.c);
        }
    }
    Ok(bundles)
}

/// Reconstructs every secret block from at least k bundles (the first k are
/// used; any quorum works).
pub fn join_blocks(
    bundles: &[ShareBundle],
    k: usize,
    ctx: &PrimeContext,
) -> Result<Vec<FieldElement>, PartitionError> {
    if bundles.len() < k {
        return Err(PartitionError::WrongShareCount {
            expected: k,
            got: bundles.len(),
        });
    }
    let quorum = &bundles[..k];
    let block_count = quorum[0].c.len();
    if quorum.iter().any(|b| b.c.len() != block_count) {
        return Err(PartitionError::InvalidParameters(
            "share bundles disagree on block count".to_string(),
        ));
    }
    (0..block_count)
        .map(|b| {
            let shares: Vec<Partition> = quorum
                .iter()
                .map(|bundle| Partition {
                    index: bundle.index,
                    x: bundle.x.clone(),
                    c: bundle.c[b].clone(),
                })
                .collect();
            Ok(recover_secret(&reconstruct_roots(&shares, k, ctx)?))
        })
        .collect()
}

/// Largest block size m ≥ 1 with 256^m < p − 1, or None when even single
/// bytes do not fit after the +1 offset.
fn block_size(ctx: &PrimeContext) -> Option<usize> {
    let limit = ctx.modulus() - BigUint::one();
    let mut m = 0usize;
    let mut power = BigUint::from(256u32);
    while power < limit {
        m += 1;
        power <<= 8;
    }
    (m > 0).then_some(m)
}

/// Maps raw bytes onto nonzero field elements, m bytes per element.
///
/// Blocks are big-endian with a +1 offset so the zero byte string never
/// produces the forbidden secret d = 0. For m = 1 every byte is a full
/// block and no padding is needed. For m ≥ 2 the final block is always
/// padded at its front with t bytes of value t (t = m − len mod m ∈ [1, m]),
/// so the decoder can strip padding unambiguously even when the data ends
/// exactly on a block boundary.
pub fn encode_blocks(data: &[u8], ctx: &PrimeContext) -> Result<Vec<FieldElement>, PartitionError> {
    let m = block_size(ctx).ok_or_else(|| PartitionError::ModulusTooSmall(ctx.modulus().clone()))?;
    if m == 1 {
        return Ok(data
            .iter()
            .map(|&b| ctx.element(BigUint::from(b) + BigUint::one()))
            .collect());
    }
    let t = m - data.len() % m;
    let mut padded = Vec::with_capacity(data.len() + t);
    let full = data.len() / m * m;
    padded.extend_from_slice(&data[..full]);
    padded.extend(std::iter::repeat_n(t as u8, t));
    padded.extend_from_slice(&data[full..]);
    Ok(padded
        .chunks_exact(m)
        .map(|chunk| ctx.element(BigUint::from_bytes_be(chunk) + BigUint::one()))
        .collect())
}

/// Inverse of [`encode_blocks`], including padding removal.
pub fn decode_blocks(
    elements: &[FieldElement],
    ctx: &PrimeContext,
) -> Result<Vec<u8>, PartitionError> {
    let m = block_size(ctx).ok_or_else(|| PartitionError::ModulusTooSmall(ctx.modulus().clone()))?;
    let max = BigUint::one() << (8 * m as u64);
    let mut bytes = Vec::with_capacity(elements.len() * m);
    for e in elements {
        if e.is_zero() {
            return Err(PartitionError::MalformedBlock(
                "element 0 is never produced by the encoder".to_string(),
            ));
        }
        let v = e.value() - BigUint::one();
        if v >= max {
            return Err(PartitionError::MalformedBlock(format!(
                "element {} exceeds the {m}-byte block range",
                e.value()
            )));
        }
        let raw = v.to_bytes_be();
        bytes.extend(std::iter::repeat_n(0u8, m - raw.len()));
        bytes.extend_from_slice(&raw);
    }
    if m == 1 {
        return Ok(bytes);
    }
    if bytes.is_empty() {
        return Err(PartitionError::MalformedBlock(
            "encodings with multi-byte blocks always carry a padded final block".to_string(),
        ));
    }
    let last = &bytes[bytes.len() - m..];
    let t = last[0] as usize;
    if t == 0 || t > m || last[..t].iter().any(|&b| b as usize != t) {
        return Err(PartitionError::MalformedBlock(format!(
            "inconsistent padding marker {t} in final block"
        )));
    }
    let mut out = bytes;
    let start = out.len() - m;
    out.drain(start..start + t);
    Ok(out)
}
