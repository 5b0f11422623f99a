//! Arbitrary-precision modular arithmetic and small dense linear algebra
//! over Z_p.
//!
//! All residues are kept in canonical form `[0, p-1]`; negative intermediate
//! results are reduced immediately so that transcripts are bit-exact across
//! implementations.

use std::fmt;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::rng::{RandomSource, SplitMix64};

/// Default Miller-Rabin round count; error probability below 2^-128.
pub const DEFAULT_PRIMALITY_ROUNDS: u32 = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("{value} is not invertible modulo {modulus}")]
    NotInvertible { value: BigUint, modulus: BigUint },
    #[error("matrix is singular modulo {modulus}")]
    SingularMatrix { modulus: BigUint },
    #[error("{0} is not prime")]
    NotPrime(BigUint),
    #[error("matrix dimensions do not match: {0}")]
    DimensionMismatch(String),
    #[error("operands belong to different prime fields ({0} vs {1})")]
    ContextMismatch(BigUint, BigUint),
}

/// The prime field Z_p all classical protocol math lives in.
///
/// Construction verifies `p >= 3` and probable primality. Cloning is cheap;
/// the modulus is shared behind an `Arc` so elements can flow between
/// threads.
#[derive(Clone)]
pub struct PrimeContext {
    inner: Arc<ContextInner>,
}

struct ContextInner {
    p: BigUint,
    bit_length: u64,
}

impl PrimeContext {
    pub fn new(p: BigUint) -> Result<Self, FieldError> {
        if p < BigUint::from(3u32) {
            return Err(FieldError::NotPrime(p));
        }
        // Fixed-seed bases keep context construction deterministic.
        let mut rng = SplitMix64::new(0);
        if !is_probable_prime(&p, DEFAULT_PRIMALITY_ROUNDS, &mut rng) {
            return Err(FieldError::NotPrime(p));
        }
        let bit_length = p.bits();
        Ok(PrimeContext {
            inner: Arc::new(ContextInner { p, bit_length }),
        })
    }

    pub fn from_u64(p: u64) -> Result<Self, FieldError> {
        Self::new(BigUint::from(p))
    }

    pub fn modulus(&self) -> &BigUint {
        &self.inner.p
    }

    pub fn bit_length(&self) -> u64 {
        self.inner.bit_length
    }

    /// Canonical element with the given value reduced into `[0, p-1]`.
    pub fn element<V: Into<BigUint>>(&self, value: V) -> FieldElement {
        let v: BigUint = value.into();
        FieldElement {
            value: v % self.modulus(),
            ctx: self.clone(),
        }
    }

    pub fn zero(&self) -> FieldElement {
        self.element(0u32)
    }

    pub fn one(&self) -> FieldElement {
        self.element(1u32)
    }

    fn check_same(&self, other: &PrimeContext) -> Result<(), FieldError> {
        if self.modulus() == other.modulus() {
            Ok(())
        } else {
            Err(FieldError::ContextMismatch(
                self.modulus().clone(),
                other.modulus().clone(),
            ))
        }
    }
}

impl PartialEq for PrimeContext {
    fn eq(&self, other: &Self) -> bool {
        self.modulus() == other.modulus()
    }
}

impl Eq for PrimeContext {}

impl fmt::Debug for PrimeContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PrimeContext(p={})", self.modulus())
    }
}

/// An integer mod p in canonical representative form.
#[derive(Clone, PartialEq, Eq)]
pub struct FieldElement {
    value: BigUint,
    ctx: PrimeContext,
}

impl FieldElement {
    pub fn value(&self) -> &BigUint {
        &self.value
    }

    pub fn context(&self) -> &PrimeContext {
        &self.ctx
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }

    pub fn add(&self, other: &FieldElement) -> FieldElement {
        self.ctx.check_same(&other.ctx).expect("mixed field contexts");
        self.ctx.element(&self.value + &other.value)
    }

    pub fn sub(&self, other: &FieldElement) -> FieldElement {
        self.ctx.check_same(&other.ctx).expect("mixed field contexts");
        let p = self.ctx.modulus();
        self.ctx.element(&self.value + p - &other.value)
    }

    pub fn mul(&self, other: &FieldElement) -> FieldElement {
        self.ctx.check_same(&other.ctx).expect("mixed field contexts");
        self.ctx.element(&self.value * &other.value)
    }

    pub fn neg(&self) -> FieldElement {
        let p = self.ctx.modulus();
        self.ctx.element(p - &self.value)
    }

    pub fn inv(&self) -> Result<FieldElement, FieldError> {
        let v = mod_inverse(&self.value, self.ctx.modulus())?;
        Ok(self.ctx.element(v))
    }

    pub fn pow(&self, exponent: &BigUint) -> FieldElement {
        self.ctx
            .element(mod_pow(&self.value, exponent, self.ctx.modulus()))
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {})", self.value, self.ctx.modulus())
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

/// `base^exponent mod modulus`, square-and-multiply.
///
/// `modulus` need not be prime; the piggy bank protocol uses composite n.
pub fn mod_pow(base: &BigUint, exponent: &BigUint, modulus: &BigUint) -> BigUint {
    assert!(*modulus >= BigUint::from(2u32), "modulus must be >= 2");
    base.modpow(exponent, modulus)
}

/// Multiplicative inverse of `a` mod `modulus` via the extended Euclidean
/// algorithm. Returns a value in `[1, modulus-1]`.
pub fn mod_inverse(a: &BigUint, modulus: &BigUint) -> Result<BigUint, FieldError> {
    assert!(*modulus >= BigUint::from(2u32), "modulus must be >= 2");
    let m = BigInt::from_biguint(Sign::Plus, modulus.clone());
    let mut r0 = m.clone();
    let mut r1 = BigInt::from_biguint(Sign::Plus, a % modulus);
    let mut t0 = BigInt::zero();
    let mut t1 = BigInt::one();
    while !r1.is_zero() {
        let q = &r0 / &r1;
        let r2 = &r0 - &q * &r1;
        r0 = std::mem::replace(&mut r1, r2);
        let t2 = &t0 - &q * &t1;
        t0 = std::mem::replace(&mut t1, t2);
    }
    if !r0.is_one() {
        return Err(FieldError::NotInvertible {
            value: a.clone(),
            modulus: modulus.clone(),
        });
    }
    let t = t0.mod_floor(&m);
    Ok(t.to_biguint().expect("mod_floor of positive modulus"))
}

const SMALL_PRIMES: [u32; 54] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
    97, 101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191,
    193, 197, 199, 211, 223, 227, 229, 233, 239, 241, 251,
];

/// Probabilistic primality: trial division by small primes, then
/// Miller-Rabin with `rounds` random bases. False-positive probability is
/// below `4^-rounds`.
pub fn is_probable_prime(n: &BigUint, rounds: u32, rng: &mut dyn RandomSource) -> bool {
    assert!(rounds >= 1, "rounds must be >= 1");
    if *n < BigUint::from(2u32) {
        return false;
    }
    for &q in SMALL_PRIMES.iter() {
        let q = BigUint::from(q);
        if *n == q {
            return true;
        }
        if (n % &q).is_zero() {
            return false;
        }
    }
    // n is odd and larger than every small prime here.
    let one = BigUint::one();
    let two = BigUint::from(2u32);
    let n_minus_1 = n - &one;
    let s = n_minus_1.trailing_zeros().expect("n-1 is nonzero");
    let d = &n_minus_1 >> s;
    let base_width = n - BigUint::from(3u32); // bases drawn from [2, n-2]
    'outer: for _ in 0..rounds {
        let a = rng.below(&base_width) + &two;
        let mut x = a.modpow(&d, n);
        if x == one || x == n_minus_1 {
            continue;
        }
        for _ in 0..s.saturating_sub(1) {
            x = x.modpow(&two, n);
            if x == n_minus_1 {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

/// Uniform element of `[lo, p-1]` drawn from the given source.
pub fn rand_element(
    ctx: &PrimeContext,
    lo: &BigUint,
    rng: &mut dyn RandomSource,
) -> FieldElement {
    let p = ctx.modulus();
    assert!(lo < p, "lower bound must be below the modulus");
    let width = p - lo;
    ctx.element(lo + rng.below(&width))
}

/// Random probable prime with exactly `bits` bits (top bit set, odd).
pub fn random_probable_prime(bits: u64, rounds: u32, rng: &mut dyn RandomSource) -> BigUint {
    assert!(bits >= 2, "need at least 2 bits");
    let top = BigUint::one() << (bits - 1);
    loop {
        let mut candidate = &top + rng.below(&top);
        candidate |= BigUint::one();
        if is_probable_prime(&candidate, rounds, rng) {
            return candidate;
        }
    }
}

/// Dense row-major matrix over one prime field.
#[derive(Clone, PartialEq, Eq)]
pub struct FieldMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigUint>,
    ctx: PrimeContext,
}

impl FieldMatrix {
    pub fn new<V: Into<BigUint>>(
        rows: usize,
        cols: usize,
        values: Vec<V>,
        ctx: &PrimeContext,
    ) -> Result<Self, FieldError> {
        if values.len() != rows * cols {
            return Err(FieldError::DimensionMismatch(format!(
                "{}x{} matrix needs {} entries, got {}",
                rows,
                cols,
                rows * cols,
                values.len()
            )));
        }
        let p = ctx.modulus();
        let data = values.into_iter().map(|v| v.into() % p).collect();
        Ok(FieldMatrix {
            rows,
            cols,
            data,
            ctx: ctx.clone(),
        })
    }

    pub fn identity(n: usize, ctx: &PrimeContext) -> Self {
        let mut data = vec![BigUint::zero(); n * n];
        for i in 0..n {
            data[i * n + i] = BigUint::one();
        }
        FieldMatrix {
            rows: n,
            cols: n,
            data,
            ctx: ctx.clone(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn context(&self) -> &PrimeContext {
        &self.ctx
    }

    pub fn get(&self, row: usize, col: usize) -> &BigUint {
        &self.data[row * self.cols + col]
    }

    fn set(&mut self, row: usize, col: usize, v: BigUint) {
        self.data[row * self.cols + col] = v;
    }

    pub fn mul(&self, rhs: &FieldMatrix) -> Result<FieldMatrix, FieldError> {
        self.ctx.check_same(&rhs.ctx)?;
        if self.cols != rhs.rows {
            return Err(FieldError::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let p = self.ctx.modulus();
        let mut out = vec![BigUint::zero(); self.rows * rhs.cols];
        for i in 0..self.rows {
            for j in 0..rhs.cols {
                let mut acc = BigUint::zero();
                for k in 0..self.cols {
                    acc += self.get(i, k) * rhs.get(k, j);
                }
                out[i * rhs.cols + j] = acc % p;
            }
        }
        FieldMatrix::new(self.rows, rhs.cols, out, &self.ctx)
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[BigUint]) -> Result<Vec<BigUint>, FieldError> {
        if v.len() != self.cols {
            return Err(FieldError::DimensionMismatch(format!(
                "{}x{} matrix times vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let p = self.ctx.modulus();
        Ok((0..self.rows)
            .map(|i| {
                let mut acc = BigUint::zero();
                for (k, value) in v.iter().enumerate() {
                    acc += self.get(i, k) * value;
                }
                acc % p
            })
            .collect())
    }

    /// Inverse by Gauss-Jordan elimination with modular pivot inverses.
    pub fn inverse(&self) -> Result<FieldMatrix, FieldError> {
        if self.rows != self.cols {
            return Err(FieldError::DimensionMismatch(format!(
                "cannot invert {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        let p = self.ctx.modulus().clone();
        let mut work = self.clone();
        let mut inv = FieldMatrix::identity(n, &self.ctx);
        for col in 0..n {
            let pivot_row = (col..n)
                .find(|&r| !work.get(r, col).is_zero())
                .ok_or(FieldError::SingularMatrix { modulus: p.clone() })?;
            if pivot_row != col {
                for j in 0..n {
                    work.data.swap(pivot_row * n + j, col * n + j);
                    inv.data.swap(pivot_row * n + j, col * n + j);
                }
            }
            let pivot_inv = mod_inverse(work.get(col, col), &p)
                .map_err(|_| FieldError::SingularMatrix { modulus: p.clone() })?;
            for j in 0..n {
                work.set(col, j, work.get(col, j) * &pivot_inv % &p);
                inv.set(col, j, inv.get(col, j) * &pivot_inv % &p);
            }
            for r in 0..n {
                if r == col || work.get(r, col).is_zero() {
                    continue;
                }
                let factor = work.get(r, col).clone();
                for j in 0..n {
                    // a - f*b computed as a + (p - f*b mod p) to stay unsigned
                    let fw = &factor * work.get(col, j) % &p;
                    let fi = &factor * inv.get(col, j) % &p;
                    work.set(r, j, (work.get(r, j) + &p - fw) % &p);
                    inv.set(r, j, (inv.get(r, j) + &p - fi) % &p);
                }
            }
        }
        Ok(inv)
    }
}

impl fmt::Debug for FieldMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "FieldMatrix {}x{} mod {} [", self.rows, self.cols, self.ctx.modulus())?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| self.get(i, j).to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}
