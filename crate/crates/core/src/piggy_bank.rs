//! Challenge–response deposit exchange through a one-way power map.
//!
//! A third party holding the factorization of a squarefree composite
//! n = p_f·q_f publishes n and an exponent e. To deposit a secret S with a
//! key K, the user receives a sealed challenge f_r = R^e mod n, then sends
//! back m1 = (S·f_r + K) mod n and m2 = S^e mod n. Only the third party can
//! open m2 (via the secret exponent d with e·d ≡ 1 mod φ(n)) and then peel
//! K out of m1. Because n is squarefree, recovery is exact for every
//! S ∈ [1, n−1], coprime to n or not.
//!
//! The payload transport runs one such round per element with K bound to
//! the payload as K = tag(S); any additive change to m1 in transit shifts
//! the recovered K off tag(S) with certainty, and a replaced m2 is caught
//! except for the few tag collisions, so tampering surfaces as
//! [`PiggyError::TamperDetected`].

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::field::{is_probable_prime, mod_inverse, mod_pow, DEFAULT_PRIMALITY_ROUNDS};
use crate::rng::{RandomSource, SplitMix64};
use crate::transcript::{MessageLog, MsgKind, Party};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PiggyError {
    #[error("{0} is not prime")]
    NotPrime(BigUint),
    #[error("factors must be distinct primes (both are {0})")]
    EqualFactors(BigUint),
    #[error("exponent {e} is invalid: need e >= 3 with gcd(e, {phi}) = 1")]
    BadExponent { e: BigUint, phi: BigUint },
    #[error("payload element {value} is outside [1, {modulus}-1]")]
    ElementOutOfRange { value: BigUint, modulus: BigUint },
    #[error("challenge {r} is outside [2, {modulus}-1]")]
    ChallengeOutOfRange { r: BigUint, modulus: BigUint },
    #[error("tampering detected in round {round}: recovered key fails the tag check")]
    TamperDetected { round: usize },
    #[error("refusing to factor {0}: too large for trial division")]
    FactoringTooLarge(BigUint),
    #[error("{0} is not a product of two distinct primes")]
    NotSemiprime(BigUint),
}

/// Keys of one third party: public (n, e) plus the secret exponent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PiggyKeypair {
    n: BigUint,
    e: BigUint,
    d_secret: BigUint,
    phi: BigUint,
}

/// The published half of a keypair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PiggyPublic {
    pub n: BigUint,
    pub e: BigUint,
}

impl PiggyKeypair {
    pub fn public(&self) -> PiggyPublic {
        PiggyPublic {
            n: self.n.clone(),
            e: self.e.clone(),
        }
    }

    pub fn modulus(&self) -> &BigUint {
        &self.n
    }

    pub fn exponent(&self) -> &BigUint {
        &self.e
    }

    pub fn secret_exponent(&self) -> &BigUint {
        &self.d_secret
    }

    pub fn phi(&self) -> &BigUint {
        &self.phi
    }
}

/// Builds a keypair from two distinct primes and a public exponent:
/// n = p_f·q_f, φ = (p_f−1)(q_f−1), d = e⁻¹ mod φ.
pub fn keygen(
    p_factor: &BigUint,
    q_factor: &BigUint,
    e: &BigUint,
) -> Result<PiggyKeypair, PiggyError> {
    let mut rng = SplitMix64::new(0);
    for factor in [p_factor, q_factor] {
        if !is_probable_prime(factor, DEFAULT_PRIMALITY_ROUNDS, &mut rng) {
            return Err(PiggyError::NotPrime(factor.clone()));
        }
    }
    if p_factor == q_factor {
        return Err(PiggyError::EqualFactors(p_factor.clone()));
    }
    let phi = (p_factor - BigUint::one()) * (q_factor - BigUint::one());
    if *e < BigUint::from(3u32) || e.gcd(&phi) != BigUint::one() {
        return Err(PiggyError::BadExponent {
            e: e.clone(),
            phi,
        });
    }
    let d_secret = mod_inverse(e, &phi).expect("gcd checked above");
    Ok(PiggyKeypair {
        n: p_factor * q_factor,
        e: e.clone(),
        d_secret,
        phi,
    })
}

/// Rebuilds a keypair from a published toy modulus by trial division.
/// Deliberately refuses moduli above 2^40; this exists so hand-checkable
/// configurations like n = 85 can name only (n, e).
pub fn from_modulus(n: &BigUint, e: &BigUint) -> Result<PiggyKeypair, PiggyError> {
    if n.bits() > 40 {
        return Err(PiggyError::FactoringTooLarge(n.clone()));
    }
    let n_u64: u64 = n.try_into().expect("fits by bit check");
    if n_u64 < 6 {
        return Err(PiggyError::NotSemiprime(n.clone()));
    }
    let mut factor = 0u64;
    if n_u64.is_multiple_of(2) {
        factor = 2;
    } else {
        let mut cand = 3u64;
        while cand * cand <= n_u64 {
            if n_u64.is_multiple_of(cand) {
                factor = cand;
                break;
            }
            cand += 2;
        }
    }
    if factor == 0 {
        return Err(PiggyError::NotSemiprime(n.clone()));
    }
    keygen(
        &BigUint::from(factor),
        &BigUint::from(n_u64 / factor),
        e,
    )
}

/// Draws a fresh keypair with `bits`-bit prime factors and the smallest
/// standard exponent coprime to φ. Intended for randomized simulations.
pub fn random_keypair(bits: u64, rng: &mut dyn RandomSource) -> PiggyKeypair {
    use crate::field::random_probable_prime;
    loop {
        let p_factor = random_probable_prime(bits, DEFAULT_PRIMALITY_ROUNDS, rng);
        let q_factor = random_probable_prime(bits, DEFAULT_PRIMALITY_ROUNDS, rng);
        if p_factor == q_factor {
            continue;
        }
        let phi = (&p_factor - BigUint::one()) * (&q_factor - BigUint::one());
        let e = [3u32, 5, 17, 257, 65537]
            .into_iter()
            .map(BigUint::from)
            .find(|e| e.gcd(&phi) == BigUint::one());
        if let Some(e) = e {
            return keygen(&p_factor, &q_factor, &e).expect("validated inputs");
        }
    }
}

/// A sealed challenge: the third party keeps r and publishes f_r = r^e.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Challenge {
    r: BigUint,
    f_r: BigUint,
}

impl Challenge {
    /// Builds the challenge from a fixed r ∈ [2, n−1].
    pub fn with_r(public: &PiggyPublic, r: BigUint) -> Result<Challenge, PiggyError> {
        if r < BigUint::from(2u32) || r >= public.n {
            return Err(PiggyError::ChallengeOutOfRange {
                r,
                modulus: public.n.clone(),
            });
        }
        let f_r = mod_pow(&r, &public.e, &public.n);
        Ok(Challenge { r, f_r })
    }

    pub fn f_r(&self) -> &BigUint {
        &self.f_r
    }

    /// The third party's secret preimage (exposed for inspection; the wire
    /// carries only f_r).
    pub fn r(&self) -> &BigUint {
        &self.r
    }
}

/// Third-party side of round start: draw r uniformly from [2, n−1].
pub fn ttp_challenge(key: &PiggyKeypair, rng: &mut dyn RandomSource) -> Challenge {
    let width = &key.n - BigUint::from(2u32);
    let r = BigUint::from(2u32) + rng.below(&width);
    Challenge::with_r(&key.public(), r).expect("r drawn in range")
}

/// The masked two-part response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Response {
    pub m1: BigUint,
    pub m2: BigUint,
}

/// User side: deposit secret s with key k against the challenge f_r.
pub fn user_respond(f_r: &BigUint, s: &BigUint, k: &BigUint, public: &PiggyPublic) -> Response {
    assert!(
        !s.is_zero() && s < &public.n,
        "secret must lie in [1, n-1]"
    );
    assert!(k < &public.n, "key must lie in [0, n-1]");
    Response {
        m1: (s * f_r + k) % &public.n,
        m2: mod_pow(s, &public.e, &public.n),
    }
}

/// Third-party side: open m2 with the secret exponent, then peel k from m1.
/// Correct for every s in [1, n−1] because n is squarefree.
pub fn ttp_recover(
    resp: &Response,
    chal: &Challenge,
    key: &PiggyKeypair,
) -> (BigUint, BigUint) {
    let s = mod_pow(&resp.m2, &key.d_secret, &key.n);
    let masked = &s * &chal.f_r % &key.n;
    let k = (&resp.m1 + &key.n - masked) % &key.n;
    (s, k)
}

/// Deterministic binding of a key to a payload value.
///
/// Implementations must be nonlinear in s so that additive m1 tampering can
/// never be compensated; the name identifies the map in reports.
pub trait TagFn {
    fn tag(&self, s: &BigUint, n: &BigUint) -> BigUint;
    fn name(&self) -> &'static str;
}

/// Reference tag h(S) = (S² + 1) mod n.
pub struct SquarePlusOne;

impl TagFn for SquarePlusOne {
    fn tag(&self, s: &BigUint, n: &BigUint) -> BigUint {
        (s * s + BigUint::one()) % n
    }

    fn name(&self) -> &'static str {
        "square_plus_one"
    }
}

/// Reference tag as a free function.
pub fn tag(s: &BigUint, n: &BigUint) -> BigUint {
    SquarePlusOne.tag(s, n)
}

/// In-transit interference and observation hooks for the transport rounds.
/// `mutate_*` returning `Some` replaces the value on the wire;
/// `observe_round` sees whatever actually crossed.
pub trait PiggyTap {
    fn mutate_m1(
        &mut self,
        round: usize,
        m1: &BigUint,
        public: &PiggyPublic,
    ) -> Option<BigUint> {
        let _ = (round, m1, public);
        None
    }

    fn mutate_m2(
        &mut self,
        round: usize,
        m2: &BigUint,
        public: &PiggyPublic,
    ) -> Option<BigUint> {
        let _ = (round, m2, public);
        None
    }

    fn observe_round(&mut self, round: usize, f_r: &BigUint, m1: &BigUint, m2: &BigUint) {
        let _ = (round, f_r, m1, m2);
    }
}

/// The honest channel.
pub struct NoTap;

impl PiggyTap for NoTap {}

/// Runs one challenge/response round per element with K = tag(S), recording
/// every message in `log` and letting `tap` interfere. Returns the values
/// the third party accepted; aborts on the first failed tag check.
#[allow(clippy::too_many_arguments)]
pub fn transfer_payload_into(
    elements: &[BigUint],
    key: &PiggyKeypair,
    tag_fn: &dyn TagFn,
    user: Party,
    ttp: Party,
    rng: &mut dyn RandomSource,
    tap: &mut dyn PiggyTap,
    log: &mut MessageLog,
) -> Result<Vec<BigUint>, PiggyError> {
    let public = key.public();
    let mut received = Vec::with_capacity(elements.len());
    for (round, s) in elements.iter().enumerate() {
        if s.is_zero() || s >= &key.n {
            return Err(PiggyError::ElementOutOfRange {
                value: s.clone(),
                modulus: key.n.clone(),
            });
        }
        let chal = ttp_challenge(key, rng);
        log.record(
            ttp,
            user,
            MsgKind::PbChallenge,
            vec![("f_r", chal.f_r().to_string())],
        );
        let k = tag_fn.tag(s, &key.n);
        let resp = user_respond(chal.f_r(), s, &k, &public);
        let m1 = tap.mutate_m1(round, &resp.m1, &public).unwrap_or(resp.m1);
        log.record(user, ttp, MsgKind::PbResp1, vec![("m1", m1.to_string())]);
        let m2 = tap.mutate_m2(round, &resp.m2, &public).unwrap_or(resp.m2);
        log.record(user, ttp, MsgKind::PbResp2, vec![("m2", m2.to_string())]);
        tap.observe_round(round, chal.f_r(), &m1, &m2);
        let wire = Response { m1, m2 };
        let (s_rec, k_rec) = ttp_recover(&wire, &chal, key);
        if k_rec != tag_fn.tag(&s_rec, &key.n) {
            return Err(PiggyError::TamperDetected { round });
        }
        received.push(s_rec);
    }
    Ok(received)
}

/// Honest-channel transport with the reference tag and generic party names.
pub fn transfer_payload(
    elements: &[BigUint],
    key: &PiggyKeypair,
    rng: &mut dyn RandomSource,
) -> Result<(Vec<BigUint>, MessageLog), PiggyError> {
    let mut log = MessageLog::new();
    let received = transfer_payload_into(
        elements,
        key,
        &SquarePlusOne,
        Party::User,
        Party::Ttp,
        rng,
        &mut NoTap,
        &mut log,
    )?;
    Ok((received, log))
}
