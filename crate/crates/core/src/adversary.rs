//! Adversary scenarios over the distribution protocol, with an exhaustive
//! candidate-secret oracle.
//!
//! A scenario runs the full dual-TTP distribution on an in-memory bus with
//! one configured adversary watching (and, for the in-transit mutator,
//! interfering with) its vantage point. Afterwards the harness brute-forces
//! what the adversary's recorded view actually pins down: it enumerates
//! root tuples and one-time-pad key assignments directly — deliberately not
//! through the protocol's own decryption code — and collects every secret
//! some assignment could explain. A lone compromised third party ends up
//! with the entire field as its candidate set; a quorum of plaintext shares
//! collapses the set to a singleton.
//!
//! The deposit-box transport layer is computationally hiding, not
//! information-theoretically: recorded challenge rounds contribute no
//! constraints to the oracle, and [`recover_with_factors`] documents that an
//! adversary holding the modulus factorization could open them.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;
use num_traits::One;
use thiserror::Error;

use crate::dual_ttp::{
    run_distribution, Delivery1, Delivery2, DualTtpError, Leg, Monitor, Package1, Package2,
    Transport,
};
use crate::field::{FieldElement, FieldError, PrimeContext};
use crate::partition::{join_blocks, reconstruct_roots, recover_secret, Partition, PartitionError, ShareBundle};
use crate::piggy_bank::{from_modulus, PiggyError, PiggyPublic, PiggyTap};
use crate::rng::{RandomSource, SplitMix64};
use crate::transcript::{MessageLog, MsgKind};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AdversaryError {
    #[error("enumeration too large: p={p}, k={k} exceeds the desk-scale budget")]
    EnumerationTooLarge { p: BigUint, k: usize },
    #[error("bad scenario config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Protocol(#[from] DualTtpError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Piggy(#[from] PiggyError),
}

/// One recorded message, as seen from the adversary's vantage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Observation {
    /// A plaintext share (x, c per block) — what a subverted recipient or a
    /// custody holder contributes.
    Partition {
        index: usize,
        x: BigUint,
        c: Vec<BigUint>,
    },
    /// TTP1's parcel: evaluation point, encrypted share, wrap key in clear.
    Package1View {
        index: usize,
        x: BigUint,
        enc: Vec<BigUint>,
        wrap: Vec<BigUint>,
    },
    /// TTP2's parcel: the encrypted share key.
    Package2View { index: usize, enckey: Vec<BigUint> },
    /// One deposit round on a tapped transport leg.
    PiggyRound {
        f_r: BigUint,
        m1: BigUint,
        m2: BigUint,
    },
}

/// In-transit mutation applied by the man-in-the-middle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MutationRule {
    /// Add δ to the masked response m1 (always caught: the recovered key
    /// shifts by δ while the tag does not).
    OffsetM1 { delta: BigUint },
    /// Replace the sealed secret m2 outright (caught except for the few
    /// quadratic tag collisions).
    ReplaceM2 { value: BigUint },
}

/// Who the adversary is and where it sits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AdversaryModel {
    None,
    /// Full view of everything TTP1 handles.
    CompromisedTtp1,
    /// Full view of everything TTP2 handles.
    CompromisedTtp2,
    /// Passive recording on one link.
    Eavesdrop(Leg),
    /// Active mutation of deposit rounds on one dealer→TTP link; direct
    /// handovers have no in-transit hook, so the rule fires only when the
    /// scenario uses the deposit transport.
    Mim(Leg, MutationRule),
}

/// The monitor the harness installs: records the model's vantage and
/// applies its mutation rule.
struct AdversaryAgent {
    model: AdversaryModel,
    /// Whether dealer→TTP legs travel sealed inside deposit rounds. A link
    /// eavesdropper on a sealed leg sees the rounds, never the parcel; a
    /// compromised TTP holds the parcel at rest either way.
    sealed_dealer_legs: bool,
    current_leg: Option<Leg>,
    view: Vec<Observation>,
}

impl AdversaryAgent {
    fn new(model: AdversaryModel, sealed_dealer_legs: bool) -> Self {
        AdversaryAgent {
            model,
            sealed_dealer_legs,
            current_leg: None,
            view: Vec::new(),
        }
    }

    fn taps_current_leg(&self) -> bool {
        match (&self.model, self.current_leg) {
            (AdversaryModel::Eavesdrop(link), Some(leg)) => *link == leg,
            (AdversaryModel::Mim(link, _), Some(leg)) => *link == leg,
            _ => false,
        }
    }
}

impl PiggyTap for AdversaryAgent {
    fn mutate_m1(
        &mut self,
        _round: usize,
        m1: &BigUint,
        public: &PiggyPublic,
    ) -> Option<BigUint> {
        if !self.taps_current_leg() {
            return None;
        }
        match &self.model {
            AdversaryModel::Mim(_, MutationRule::OffsetM1 { delta }) => {
                Some((m1 + delta) % &public.n)
            }
            _ => None,
        }
    }

    fn mutate_m2(
        &mut self,
        _round: usize,
        m2: &BigUint,
        public: &PiggyPublic,
    ) -> Option<BigUint> {
        if !self.taps_current_leg() {
            return None;
        }
        match &self.model {
            AdversaryModel::Mim(_, MutationRule::ReplaceM2 { value }) => {
                Some(value.clone() % &public.n)
            }
            _ => {
                let _ = m2;
                None
            }
        }
    }

    fn observe_round(&mut self, _round: usize, f_r: &BigUint, m1: &BigUint, m2: &BigUint) {
        if self.taps_current_leg() {
            self.view.push(Observation::PiggyRound {
                f_r: f_r.clone(),
                m1: m1.clone(),
                m2: m2.clone(),
            });
        }
    }
}

fn package1_view(pkg: &Package1) -> Observation {
    Observation::Package1View {
        index: pkg.recipient_index,
        x: pkg.x.value().clone(),
        enc: pkg.enc_share.iter().map(|e| e.value().clone()).collect(),
        wrap: pkg.wrap_key.0.iter().map(|e| e.value().clone()).collect(),
    }
}

fn package2_view(pkg: &Package2) -> Observation {
    Observation::Package2View {
        index: pkg.recipient_index,
        enckey: pkg
            .enc_share_key
            .iter()
            .map(|e| e.value().clone())
            .collect(),
    }
}

impl Monitor for AdversaryAgent {
    fn begin_leg(&mut self, leg: Leg) {
        self.current_leg = Some(leg);
    }

    fn on_package1(&mut self, pkg: &Package1) {
        let sees = matches!(self.model, AdversaryModel::CompromisedTtp1)
            || (!self.sealed_dealer_legs
                && matches!(self.model, AdversaryModel::Eavesdrop(Leg::DealerTtp1)));
        if sees {
            self.view.push(package1_view(pkg));
        }
    }

    fn on_package2(&mut self, pkg: &Package2) {
        let sees = matches!(self.model, AdversaryModel::CompromisedTtp2)
            || (!self.sealed_dealer_legs
                && matches!(self.model, AdversaryModel::Eavesdrop(Leg::DealerTtp2)));
        if sees {
            self.view.push(package2_view(pkg));
        }
    }

    fn on_delivery1(&mut self, d: &Delivery1) {
        // A compromised TTP1 already recorded the identical package; only a
        // link eavesdropper gains anything here.
        if let AdversaryModel::Eavesdrop(Leg::Ttp1Recipient(i)) = self.model {
            if i == d.recipient_index {
                self.view.push(Observation::Package1View {
                    index: d.recipient_index,
                    x: d.x.value().clone(),
                    enc: d.enc_share.iter().map(|e| e.value().clone()).collect(),
                    wrap: d.wrap_key.0.iter().map(|e| e.value().clone()).collect(),
                });
            }
        }
    }

    fn on_delivery2(&mut self, d: &Delivery2) {
        if let AdversaryModel::Eavesdrop(Leg::Ttp2Recipient(i)) = self.model {
            if i == d.recipient_index {
                self.view.push(Observation::Package2View {
                    index: d.recipient_index,
                    enckey: d
                        .enc_share_key
                        .iter()
                        .map(|e| e.value().clone())
                        .collect(),
                });
            }
        }
    }
}

const ENUMERATION_BUDGET: u64 = 1 << 27;

fn pow_mod_u64(mut base: u64, mut exp: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    base %= p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % p;
        }
        base = base * base % p;
        exp >>= 1;
    }
    acc
}

fn inv_mod_u64(a: u64, p: u64) -> Option<u64> {
    let (mut r0, mut r1) = (p as i64, (a % p) as i64);
    let (mut t0, mut t1) = (0i64, 1i64);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 != 1 {
        return None;
    }
    Some(t0.rem_euclid(p as i64) as u64)
}

/// Share value of a root tuple at x: Σ_j r_j · x^{j−1} (Horner form).
fn eval_tuple(tuple: &[u64], x: u64, p: u64) -> u64 {
    tuple.iter().rev().fold(0u64, |acc, &r| (acc * x + r) % p)
}

struct OracleView {
    /// (x, c) pairs from plaintext shares, first block.
    partitions: Vec<(u64, u64)>,
    /// (x, enc) pairs from TTP1-side parcels, first block.
    pkg1: Vec<(usize, u64, u64)>,
    /// (recipient, enckey) from TTP2-side parcels, first block.
    pkg2: Vec<(usize, u64)>,
}

fn to_u64(v: &BigUint) -> u64 {
    v.try_into().expect("value below the 2^20 guard")
}

fn lower_view(view: &[Observation]) -> OracleView {
    let mut out = OracleView {
        partitions: Vec::new(),
        pkg1: Vec::new(),
        pkg2: Vec::new(),
    };
    for obs in view {
        match obs {
            Observation::Partition { x, c, .. } => {
                if let Some(c0) = c.first() {
                    out.partitions.push((to_u64(x), to_u64(c0)));
                }
            }
            Observation::Package1View { index, x, enc, .. } => {
                if let Some(e0) = enc.first() {
                    out.pkg1.push((*index, to_u64(x), to_u64(e0)));
                }
            }
            Observation::Package2View { index, enckey } => {
                if let Some(e0) = enckey.first() {
                    out.pkg2.push((*index, to_u64(e0)));
                }
            }
            // Deposit rounds are computationally hidden; the oracle treats
            // them as unconstraining (see recover_with_factors).
            Observation::PiggyRound { .. } => {}
        }
    }
    out
}

/// Exhaustively enumerates every secret consistent with the adversary's
/// view (first secret block). Root tuples are enumerated directly in
/// [1, p−1]^k — with the last coordinate solved from the first observed
/// plaintext share when one exists — and each one-time-pad layer is checked
/// by scanning its key space for a consistent assignment.
pub fn brute_force_candidates(
    view: &[Observation],
    p: &BigUint,
    k: usize,
) -> Result<BTreeSet<BigUint>, AdversaryError> {
    if k < 1 || *p > (BigUint::one() << 20u32) {
        return Err(AdversaryError::EnumerationTooLarge { p: p.clone(), k });
    }
    let p64 = to_u64(p);
    let lowered = lower_view(view);
    let prefix_count = (p64 - 1).checked_pow((k - 1) as u32);
    let tail_count = if lowered.partitions.is_empty() {
        p64 - 1
    } else {
        1
    };
    let budget_ok = prefix_count
        .and_then(|c| c.checked_mul(tail_count))
        .map(|total| total <= ENUMERATION_BUDGET)
        .unwrap_or(false);
    if !budget_ok {
        return Err(AdversaryError::EnumerationTooLarge { p: p.clone(), k });
    }

    let mut candidates = BTreeSet::new();
    let mut prefix = vec![1u64; k - 1];
    loop {
        let tails: Vec<u64> = match lowered.partitions.first() {
            Some(&(x, c)) => {
                let partial = prefix
                    .iter()
                    .enumerate()
                    .fold(0u64, |acc, (j, &r)| (acc + r * pow_mod_u64(x, j as u64, p64)) % p64);
                let lead = pow_mod_u64(x, (k - 1) as u64, p64);
                match inv_mod_u64(lead, p64) {
                    Some(inv) => {
                        let rk = (c + p64 - partial) % p64 * inv % p64;
                        if rk == 0 {
                            Vec::new()
                        } else {
                            vec![rk]
                        }
                    }
                    None => Vec::new(),
                }
            }
            None => (1..p64).collect(),
        };
        'tails: for rk in tails {
            let mut tuple = prefix.clone();
            tuple.push(rk);
            for &(x, c) in &lowered.partitions {
                if eval_tuple(&tuple, x, p64) != c {
                    continue 'tails;
                }
            }
            // Share-ciphertext layer: some key must map this tuple's share
            // value onto the observed ciphertext.
            let mut k1_assignment: BTreeMap<usize, u64> = BTreeMap::new();
            for &(recipient, x, enc) in &lowered.pkg1 {
                let c_val = eval_tuple(&tuple, x, p64);
                let found = (0..p64).find(|key| (c_val + key) % p64 == enc);
                match found {
                    Some(key) => {
                        k1_assignment.insert(recipient, key);
                    }
                    None => continue 'tails,
                }
            }
            // Key-ciphertext layer: a wrap key must explain the encrypted
            // share key, for whichever share key is (or could be) in play.
            for &(recipient, enckey) in &lowered.pkg2 {
                let consistent = match k1_assignment.get(&recipient) {
                    Some(&k1) => (0..p64).any(|k2| (k1 + k2) % p64 == enckey),
                    None => {
                        (0..p64).any(|k1| (0..p64).any(|k2| (k1 + k2) % p64 == enckey))
                    }
                };
                if !consistent {
                    continue 'tails;
                }
            }
            let d = tuple.iter().fold(1u64, |acc, &r| acc * r % p64);
            candidates.insert(BigUint::from(d));
        }
        // Advance the odometer over [1, p−1]^{k−1}.
        let mut pos = prefix.len();
        loop {
            if pos == 0 {
                return Ok(candidates);
            }
            pos -= 1;
            if prefix[pos] < p64 - 1 {
                prefix[pos] += 1;
                for later in prefix.iter_mut().skip(pos + 1) {
                    *later = 1;
                }
                break;
            }
        }
    }
}

/// Sanity oracle for the deposit transport's computational layer: an
/// adversary who knows the factors of the modulus can open a recorded
/// round. Written against the raw arithmetic, not the protocol's recovery
/// path.
pub fn recover_with_factors(
    obs: &Observation,
    p_factor: &BigUint,
    q_factor: &BigUint,
    e: &BigUint,
) -> Option<(BigUint, BigUint)> {
    let Observation::PiggyRound { f_r, m1, m2 } = obs else {
        return None;
    };
    let n = p_factor * q_factor;
    let phi = (p_factor - BigUint::one()) * (q_factor - BigUint::one());
    let d = crate::field::mod_inverse(e, &phi).ok()?;
    let s = m2.modpow(&d, &n);
    let masked = &s * f_r % &n;
    let k = (m1 + &n - masked) % &n;
    Some((s, k))
}

/// Transport selection for a scenario, by configuration values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransportChoice {
    Direct,
    Piggy { pb_n: BigUint, pb_e: BigUint },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioConfig {
    pub p: BigUint,
    pub k: usize,
    pub n: usize,
    pub secret: BigUint,
    pub seed: u64,
    pub adversary: AdversaryModel,
    pub transport: TransportChoice,
}

/// Everything a finished scenario produced.
#[derive(Debug, Clone)]
pub struct ScenarioReport {
    pub delivered: Vec<bool>,
    pub reconstructed_secret: Option<Vec<BigUint>>,
    pub adversary_view: Vec<Observation>,
    pub candidate_secrets: BTreeSet<BigUint>,
    pub tamper_detected: bool,
    pub log: MessageLog,
    /// The secret the dealer actually split (for the contains-true check).
    pub true_secret: BigUint,
}

impl ScenarioReport {
    pub fn contains_true_secret(&self) -> bool {
        self.candidate_secrets.contains(&self.true_secret)
    }

    /// REPORT trailer line (no transcript).
    pub fn trailer(&self) -> String {
        format!(
            "REPORT candidates={} contains_true={} tamper={}\n",
            self.candidate_secrets.len(),
            u8::from(self.contains_true_secret()),
            u8::from(self.tamper_detected),
        )
    }

    /// Full output: transcript followed by the REPORT trailer.
    pub fn render(&self) -> String {
        format!("{}{}", self.log.render(), self.trailer())
    }
}

/// Errors the honest protocol never produces: they arise only when someone
/// altered a payload in flight. The transport tag is the primary catch; a
/// mutation that slips past it (possible at toy moduli) still lands on a
/// structural check further downstream.
fn is_interference_catch(err: &DualTtpError) -> bool {
    matches!(
        err,
        DualTtpError::UnknownRecipient { .. }
            | DualTtpError::IndexMismatch { .. }
            | DualTtpError::CorruptedPayload(_)
            | DualTtpError::Piggy(PiggyError::TamperDetected { .. })
    )
}

/// Runs one configured scenario end to end and assembles the report.
/// Adversary interference is a designed outcome, not an error: tamper
/// aborts surface as `tamper_detected` with the partial transcript.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioReport, AdversaryError> {
    let ctx = PrimeContext::new(config.p.clone())?;
    let secret = ctx.element(config.secret.clone());
    let transport = match &config.transport {
        TransportChoice::Direct => Transport::Direct,
        TransportChoice::Piggy { pb_n, pb_e } => Transport::Piggy {
            key: from_modulus(pb_n, pb_e)?,
        },
    };
    let sealed = matches!(config.transport, TransportChoice::Piggy { .. });
    let mut agent = AdversaryAgent::new(config.adversary.clone(), sealed);
    let mut log = MessageLog::new();
    let mut rng = SplitMix64::new(config.seed);
    let outcome = run_distribution(
        std::slice::from_ref(&secret),
        config.k,
        config.n,
        &ctx,
        &mut rng,
        &transport,
        &mut agent,
        &mut log,
    );
    let (tamper_detected, received) = match outcome {
        Ok(received) => (false, Some(received)),
        Err(e) if is_interference_catch(&e) => (true, None),
        Err(other) => return Err(other.into()),
    };
    // Full delivery means both parcels reached the recipient.
    let delivered: Vec<bool> = (1..=config.n)
        .map(|i| {
            let got = |kind: MsgKind| {
                log.entries().iter().any(|e| {
                    e.kind == kind
                        && e.fields
                            .iter()
                            .any(|(key, v)| *key == "i" && *v == i.to_string())
                })
            };
            got(MsgKind::Deliver1) && got(MsgKind::Deliver2)
        })
        .collect();
    let reconstructed_secret = match &received {
        Some(bundles) => Some(
            join_blocks(&bundles[..config.k], config.k, &ctx)?
                .iter()
                .map(|e| e.value().clone())
                .collect(),
        ),
        None => None,
    };
    let candidate_secrets = brute_force_candidates(&agent.view, &config.p, config.k)?;
    Ok(ScenarioReport {
        delivered,
        reconstructed_secret,
        adversary_view: agent.view,
        candidate_secrets,
        tamper_detected,
        log,
        true_secret: secret.value().clone(),
    })
}

/// Parses the line-oriented `key=value` scenario config format.
///
/// Required keys: p, k, n, secret, seed, adversary, transport. The piggy
/// transport additionally requires pb_n and pb_e. Adversary grammar:
/// `none`, `compromised_ttp1`, `compromised_ttp2`, `eavesdrop:<link>`,
/// `mim:<link>:offset_m1:<delta>`, `mim:<link>:replace_m2:<value>`, with
/// links `dealer_ttp1`, `dealer_ttp2`, `ttp1_r<i>`, `ttp2_r<i>`.
pub fn parse_scenario_config(text: &str) -> Result<ScenarioConfig, AdversaryError> {
    let bad = |msg: String| AdversaryError::BadConfig(msg);
    let mut map = BTreeMap::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| bad(format!("expected key=value, got {line:?}")))?;
        let known = [
            "p", "k", "n", "secret", "seed", "adversary", "transport", "pb_n", "pb_e",
        ];
        if !known.contains(&key) {
            return Err(bad(format!("unknown key {key:?}")));
        }
        if map.insert(key.to_string(), value.to_string()).is_some() {
            return Err(bad(format!("duplicate key {key:?}")));
        }
    }
    let get = |key: &str| {
        map.get(key)
            .cloned()
            .ok_or_else(|| bad(format!("missing key {key:?}")))
    };
    let biguint = |key: &str, value: &str| {
        value
            .parse::<BigUint>()
            .map_err(|_| bad(format!("bad {key} value {value:?}")))
    };
    let p = biguint("p", &get("p")?)?;
    let k: usize = get("k")?
        .parse()
        .map_err(|_| bad("bad k value".to_string()))?;
    let n: usize = get("n")?
        .parse()
        .map_err(|_| bad("bad n value".to_string()))?;
    let secret = biguint("secret", &get("secret")?)?;
    let seed: u64 = get("seed")?
        .parse()
        .map_err(|_| bad("bad seed value".to_string()))?;
    let adversary = parse_adversary(&get("adversary")?)?;
    let transport = match get("transport")?.as_str() {
        "direct" => TransportChoice::Direct,
        "piggy" => TransportChoice::Piggy {
            pb_n: biguint("pb_n", &get("pb_n")?)?,
            pb_e: biguint("pb_e", &get("pb_e")?)?,
        },
        other => return Err(bad(format!("unknown transport {other:?}"))),
    };
    Ok(ScenarioConfig {
        p,
        k,
        n,
        secret,
        seed,
        adversary,
        transport,
    })
}

fn parse_link(text: &str) -> Result<Leg, AdversaryError> {
    let bad = || AdversaryError::BadConfig(format!("unknown link {text:?}"));
    match text {
        "dealer_ttp1" => Ok(Leg::DealerTtp1),
        "dealer_ttp2" => Ok(Leg::DealerTtp2),
        _ => {
            if let Some(i) = text.strip_prefix("ttp1_r") {
                return i.parse().map(Leg::Ttp1Recipient).map_err(|_| bad());
            }
            if let Some(i) = text.strip_prefix("ttp2_r") {
                return i.parse().map(Leg::Ttp2Recipient).map_err(|_| bad());
            }
            Err(bad())
        }
    }
}

fn parse_adversary(text: &str) -> Result<AdversaryModel, AdversaryError> {
    let bad = |msg: String| AdversaryError::BadConfig(msg);
    match text {
        "none" => return Ok(AdversaryModel::None),
        "compromised_ttp1" => return Ok(AdversaryModel::CompromisedTtp1),
        "compromised_ttp2" => return Ok(AdversaryModel::CompromisedTtp2),
        _ => {}
    }
    if let Some(rest) = text.strip_prefix("eavesdrop:") {
        return Ok(AdversaryModel::Eavesdrop(parse_link(rest)?));
    }
    if let Some(rest) = text.strip_prefix("mim:") {
        let mut parts = rest.splitn(3, ':');
        let link = parse_link(parts.next().unwrap_or(""))?;
        let rule_name = parts.next().unwrap_or("");
        let arg = parts.next().unwrap_or("");
        let value = arg
            .parse::<BigUint>()
            .map_err(|_| bad(format!("bad mutation argument {arg:?}")))?;
        let rule = match rule_name {
            "offset_m1" => MutationRule::OffsetM1 { delta: value },
            "replace_m2" => MutationRule::ReplaceM2 { value },
            other => return Err(bad(format!("unknown mutation rule {other:?}"))),
        };
        return Ok(AdversaryModel::Mim(link, rule));
    }
    Err(bad(format!("unknown adversary {text:?}")))
}

/// The three fixed custodians of the device-access application.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoleName {
    LawEnforcement,
    Judiciary,
    Vendor,
}

impl RoleName {
    pub fn parse(text: &str) -> Option<RoleName> {
        match text {
            "law_enforcement" => Some(RoleName::LawEnforcement),
            "judiciary" => Some(RoleName::Judiciary),
            "vendor" => Some(RoleName::Vendor),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            RoleName::LawEnforcement => "law_enforcement",
            RoleName::Judiciary => "judiciary",
            RoleName::Vendor => "vendor",
        }
    }
}

/// One custodian and the share it holds (if enrolled).
#[derive(Debug, Clone)]
pub struct CustodyRole {
    pub name: RoleName,
    pub holds: Option<Partition>,
}

/// Splits a device secret 2-of-3 across the fixed custodian roster.
pub fn enroll_custodians(
    secret: &FieldElement,
    rng: &mut dyn RandomSource,
) -> Result<Vec<CustodyRole>, AdversaryError> {
    let bundles = crate::partition::split_blocks(std::slice::from_ref(secret), 2, 3, rng)?;
    let names = [RoleName::LawEnforcement, RoleName::Judiciary, RoleName::Vendor];
    Ok(names
        .iter()
        .zip(bundles)
        .map(|(&name, bundle)| CustodyRole {
            name,
            holds: Some(Partition {
                index: bundle.index,
                x: bundle.x,
                c: bundle.c.into_iter().next().expect("one block"),
            }),
        })
        .collect())
}

/// Result of a quorum attempt on the device secret.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AccessOutcome {
    Granted { secret: BigUint },
    Refused { need: usize, have: usize },
}

/// Grants the device secret when at least k custodians present shares,
/// refuses (as a value, not an error) otherwise.
pub fn device_access(
    holders: &[CustodyRole],
    k: usize,
    ctx: &PrimeContext,
) -> Result<AccessOutcome, AdversaryError> {
    let shares: Vec<Partition> = holders
        .iter()
        .filter_map(|role| role.holds.clone())
        .collect();
    if shares.len() < k {
        return Ok(AccessOutcome::Refused {
            need: k,
            have: shares.len(),
        });
    }
    let roots = reconstruct_roots(&shares[..k], k, ctx)?;
    Ok(AccessOutcome::Granted {
        secret: recover_secret(&roots).value().clone(),
    })
}

/// Observation from a recovered or delivered share bundle (first block and
/// all blocks travel together).
pub fn observe_bundle(bundle: &ShareBundle) -> Observation {
    Observation::Partition {
        index: bundle.index,
        x: bundle.x.value().clone(),
        c: bundle.c.iter().map(|e| e.value().clone()).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::{generate_roots, expand_shares, default_points};

    fn ctx19() -> PrimeContext {
        PrimeContext::from_u64(19).unwrap()
    }

    fn p19() -> BigUint {
        BigUint::from(19u32)
    }

    fn partition_obs(x: u64, c: u64) -> Observation {
        Observation::Partition {
            index: 1,
            x: BigUint::from(x),
            c: vec![BigUint::from(c)],
        }
    }

    #[test]
    fn single_share_leaves_large_ambiguity() {
        let candidates = brute_force_candidates(&[partition_obs(1, 11)], &p19(), 2).unwrap();
        assert!(candidates.contains(&BigUint::from(12u32)));
        assert!(candidates.len() >= 9, "only {} candidates", candidates.len());
        assert!(candidates.len() < 18);
    }

    #[test]
    fn quorum_of_shares_pins_the_secret() {
        let view = [partition_obs(1, 11), partition_obs(2, 9)];
        let candidates = brute_force_candidates(&view, &p19(), 2).unwrap();
        assert_eq!(candidates.len(), 1);
        assert!(candidates.contains(&BigUint::from(12u32)));
    }

    #[test]
    fn ttp1_parcels_leave_the_full_field() {
        let view = [
            Observation::Package1View {
                index: 1,
                x: BigUint::from(1u32),
                enc: vec![BigUint::from(16u32)],
                wrap: vec![BigUint::from(7u32)],
            },
            Observation::Package1View {
                index: 2,
                x: BigUint::from(2u32),
                enc: vec![BigUint::from(3u32)],
                wrap: vec![BigUint::from(11u32)],
            },
        ];
        let candidates = brute_force_candidates(&view, &p19(), 2).unwrap();
        assert_eq!(candidates.len(), 18);
    }

    #[test]
    fn ttp2_parcels_leave_the_full_field() {
        let view = [Observation::Package2View {
            index: 1,
            enckey: vec![BigUint::from(12u32)],
        }];
        let candidates = brute_force_candidates(&view, &p19(), 2).unwrap();
        assert_eq!(candidates.len(), 18);
    }

    #[test]
    fn empty_view_leaves_the_full_field() {
        let candidates = brute_force_candidates(&[], &p19(), 2).unwrap();
        let expected: BTreeSet<BigUint> = (1u32..19).map(BigUint::from).collect();
        assert_eq!(candidates, expected);
    }

    #[test]
    fn enumeration_guard_trips() {
        let big = BigUint::one() << 21u32;
        assert!(matches!(
            brute_force_candidates(&[], &big, 2),
            Err(AdversaryError::EnumerationTooLarge { .. })
        ));
        // Budget also trips on deep tuples even at p = 19.
        assert!(matches!(
            brute_force_candidates(&[], &p19(), 9),
            Err(AdversaryError::EnumerationTooLarge { .. })
        ));
    }

    #[test]
    fn ambiguity_bound_exhaustive_at_p19() {
        // Every d, every single share of a (2,3) split: candidate set
        // contains d and has at least (p+1)/2 − ε members; the bound the
        // oracle is expected to certify is ≥ 9.
        let ctx = ctx19();
        let mut rng = SplitMix64::new(4242);
        for d in 1u64..19 {
            let secret = ctx.element(d);
            let roots = generate_roots(&secret, 2, &mut rng).unwrap();
            let set = expand_shares(&roots, &default_points(&ctx, 3).unwrap()).unwrap();
            for share in &set.partitions {
                let obs = Observation::Partition {
                    index: share.index,
                    x: share.x.value().clone(),
                    c: vec![share.c.value().clone()],
                };
                let candidates = brute_force_candidates(&[obs], &p19(), 2).unwrap();
                assert!(candidates.contains(&BigUint::from(d)), "d={d} missing");
                assert!(
                    candidates.len() >= 9,
                    "d={d} x={} gave only {} candidates",
                    share.x.value(),
                    candidates.len()
                );
            }
        }
    }

    fn subsets(n: usize) -> Vec<Vec<usize>> {
        (0..1u32 << n)
            .map(|mask| (0..n).filter(|i| mask >> i & 1 == 1).collect())
            .collect()
    }

    #[test]
    fn quorum_law_exhaustive() {
        let ctx = ctx19();
        for (k, n) in [(2usize, 3usize), (3, 4)] {
            let mut rng = SplitMix64::new(7 + k as u64);
            let secret = ctx.element(12u32);
            let roots = generate_roots(&secret, k, &mut rng).unwrap();
            let set = expand_shares(&roots, &default_points(&ctx, n).unwrap()).unwrap();
            for subset in subsets(n) {
                let view: Vec<Observation> = subset
                    .iter()
                    .map(|&i| {
                        let s = &set.partitions[i];
                        Observation::Partition {
                            index: s.index,
                            x: s.x.value().clone(),
                            c: vec![s.c.value().clone()],
                        }
                    })
                    .collect();
                let candidates = brute_force_candidates(&view, &p19(), k).unwrap();
                assert!(
                    candidates.contains(&BigUint::from(12u32)),
                    "(k={k}, n={n}) subset {subset:?}"
                );
                if subset.len() >= k {
                    assert_eq!(candidates.len(), 1, "(k={k}, n={n}) subset {subset:?}");
                } else {
                    assert!(candidates.len() > 1, "(k={k}, n={n}) subset {subset:?}");
                }
            }
        }
    }

    fn base_config(adversary: AdversaryModel) -> ScenarioConfig {
        ScenarioConfig {
            p: p19(),
            k: 2,
            n: 3,
            secret: BigUint::from(12u32),
            seed: 42,
            adversary,
            transport: TransportChoice::Direct,
        }
    }

    #[test]
    fn honest_scenario_delivers_and_reconstructs() {
        let report = run_scenario(&base_config(AdversaryModel::None)).unwrap();
        assert_eq!(report.delivered, vec![true, true, true]);
        assert_eq!(
            report.reconstructed_secret,
            Some(vec![BigUint::from(12u32)])
        );
        assert!(!report.tamper_detected);
        assert!(report.adversary_view.is_empty());
        assert_eq!(report.candidate_secrets.len(), 18);
        assert!(report.contains_true_secret());
        assert_eq!(report.log.len(), 12);
        assert_eq!(
            report.trailer(),
            "REPORT candidates=18 contains_true=1 tamper=0\n"
        );
    }

    #[test]
    fn compromised_ttp_scenarios_learn_nothing() {
        for adversary in [AdversaryModel::CompromisedTtp1, AdversaryModel::CompromisedTtp2] {
            for seed in 0..10u64 {
                let mut config = base_config(adversary.clone());
                config.seed = seed;
                let report = run_scenario(&config).unwrap();
                assert!(!report.tamper_detected);
                assert_eq!(report.adversary_view.len(), 3, "one parcel per recipient");
                let expected: BTreeSet<BigUint> = (1u32..19).map(BigUint::from).collect();
                assert_eq!(
                    report.candidate_secrets, expected,
                    "{adversary:?} seed {seed}"
                );
            }
        }
    }

    #[test]
    fn mim_on_deposit_leg_trips_tamper() {
        let mut config = base_config(AdversaryModel::Mim(
            Leg::DealerTtp1,
            MutationRule::OffsetM1 {
                delta: BigUint::one(),
            },
        ));
        config.transport = TransportChoice::Piggy {
            pb_n: BigUint::from(85u32),
            pb_e: BigUint::from(5u32),
        };
        let report = run_scenario(&config).unwrap();
        assert!(report.tamper_detected);
        assert_eq!(report.delivered, vec![false, false, false]);
        assert_eq!(report.reconstructed_secret, None);
        assert!(report.trailer().ends_with("tamper=1\n"));
    }

    #[test]
    fn mim_replace_m2_usually_detected() {
        let mut detected = 0;
        for seed in 0..50u64 {
            let mut config = base_config(AdversaryModel::Mim(
                Leg::DealerTtp2,
                MutationRule::ReplaceM2 {
                    value: BigUint::from(seed * 7 + 3),
                },
            ));
            config.seed = seed;
            config.transport = TransportChoice::Piggy {
                pb_n: BigUint::from(85u32),
                pb_e: BigUint::from(5u32),
            };
            if run_scenario(&config).unwrap().tamper_detected {
                detected += 1;
            }
        }
        assert!(detected >= 45, "only {detected}/50 detected");
    }

    #[test]
    fn eavesdropper_on_deposit_rounds_learns_nothing_without_factors() {
        let mut config = base_config(AdversaryModel::Eavesdrop(Leg::DealerTtp1));
        config.transport = TransportChoice::Piggy {
            pb_n: BigUint::from(85u32),
            pb_e: BigUint::from(5u32),
        };
        let report = run_scenario(&config).unwrap();
        assert!(!report.tamper_detected);
        // The tapped leg is sealed: the view is exactly the deposit rounds
        // (3 recipients × 4 flattened integers each), never the parcel.
        assert_eq!(report.adversary_view.len(), 3 * 4);
        assert!(report
            .adversary_view
            .iter()
            .all(|obs| matches!(obs, Observation::PiggyRound { .. })));
        assert_eq!(report.candidate_secrets.len(), 18);
        // With the factors, every recorded round opens: the recovered key
        // always matches the transport tag of the recovered element.
        let five = BigUint::from(5u32);
        let seventeen = BigUint::from(17u32);
        for obs in &report.adversary_view {
            let (s, k) = recover_with_factors(obs, &five, &seventeen, &five).unwrap();
            assert_eq!(k, crate::piggy_bank::tag(&s, &BigUint::from(85u32)));
        }
    }

    #[test]
    fn factor_oracle_matches_worked_round() {
        let obs = Observation::PiggyRound {
            f_r: BigUint::from(49u32),
            m1: BigUint::from(76u32),
            m2: BigUint::from(41u32),
        };
        let (s, k) = recover_with_factors(
            &obs,
            &BigUint::from(5u32),
            &BigUint::from(17u32),
            &BigUint::from(5u32),
        )
        .unwrap();
        assert_eq!(s, BigUint::from(6u32));
        assert_eq!(k, BigUint::from(37u32));
    }

    #[test]
    fn config_parsing() {
        let config = parse_scenario_config(
            "p=19\nk=2\nn=3\nsecret=12\nseed=42\nadversary=none\ntransport=direct\n",
        )
        .unwrap();
        assert_eq!(config, base_config(AdversaryModel::None));

        let config = parse_scenario_config(
            "p=19\nk=2\nn=3\nsecret=12\nseed=7\nadversary=mim:dealer_ttp1:offset_m1:1\n\
             transport=piggy\npb_n=85\npb_e=5\n",
        )
        .unwrap();
        assert_eq!(
            config.adversary,
            AdversaryModel::Mim(
                Leg::DealerTtp1,
                MutationRule::OffsetM1 {
                    delta: BigUint::one()
                }
            )
        );
        assert_eq!(
            config.transport,
            TransportChoice::Piggy {
                pb_n: BigUint::from(85u32),
                pb_e: BigUint::from(5u32)
            }
        );

        for bad in [
            "p=19\n",
            "p=19\nk=2\nn=3\nsecret=12\nseed=42\nadversary=wat\ntransport=direct\n",
            "p=19\nk=2\nn=3\nsecret=12\nseed=42\nadversary=none\ntransport=piggy\n",
            "p=19\nk=2\nn=3\nsecret=12\nseed=42\nadversary=none\ntransport=direct\nbogus=1\n",
            "p=19\np=19\nk=2\nn=3\nsecret=12\nseed=42\nadversary=none\ntransport=direct\n",
        ] {
            assert!(
                matches!(
                    parse_scenario_config(bad),
                    Err(AdversaryError::BadConfig(_))
                ),
                "accepted {bad:?}"
            );
        }
    }

    #[test]
    fn custody_quorum_grants_and_refuses() {
        let ctx = ctx19();
        let mut rng = SplitMix64::new(7);
        let roles = enroll_custodians(&ctx.element(12u32), &mut rng).unwrap();
        assert_eq!(roles.len(), 3);

        // Any pair grants, and all pairs agree with the full roster.
        let pairs = [[0usize, 1], [1, 2], [2, 0]];
        for pair in pairs {
            let holders = vec![roles[pair[0]].clone(), roles[pair[1]].clone()];
            let outcome = device_access(&holders, 2, &ctx).unwrap();
            assert_eq!(
                outcome,
                AccessOutcome::Granted {
                    secret: BigUint::from(12u32)
                },
                "pair {pair:?}"
            );
        }
        let outcome = device_access(&roles, 2, &ctx).unwrap();
        assert_eq!(
            outcome,
            AccessOutcome::Granted {
                secret: BigUint::from(12u32)
            }
        );

        // One custodian alone is refused.
        let lone = vec![roles[0].clone()];
        assert_eq!(
            device_access(&lone, 2, &ctx).unwrap(),
            AccessOutcome::Refused { need: 2, have: 1 }
        );
        // Enrolled roster with an absent member still meets quorum.
        let mut partial = roles.clone();
        partial[2].holds = None;
        assert_eq!(
            device_access(&partial, 2, &ctx).unwrap(),
            AccessOutcome::Granted {
                secret: BigUint::from(12u32)
            }
        );
    }

    #[test]
    fn scenario_rejects_zero_secret() {
        let mut config = base_config(AdversaryModel::None);
        config.secret = BigUint::from(0u32);
        assert!(run_scenario(&config).is_err());
    }
}
