//! Share distribution through two non-colluding third parties.
//!
//! The dealer gives each share two independent one-time-pad layers: the
//! share values are encrypted under a fresh share key k1, and k1 itself is
//! encrypted under a fresh wrap key k2. TTP1 carries the encrypted share
//! together with k2 in the clear; TTP2 carries only the encrypted share
//! key. A recipient peels k1 out of TTP2's parcel using TTP1's k2, then
//! peels the share. Either third party alone sees one layer of every
//! ciphertext but never a ciphertext together with its own key, so a single
//! compromise leaves every share value equally likely — the enumeration in
//! the adversary module checks exactly that.
//!
//! The dealer→TTP legs can optionally ride the piggy bank transport, which
//! adds per-value tamper evidence at the cost of a challenge/response round
//! per integer.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_traits::One;
use thiserror::Error;

use crate::field::{rand_element, FieldElement, PrimeContext};
use crate::partition::{split_blocks, PartitionError, ShareBundle};
use crate::piggy_bank::{transfer_payload_into, PiggyError, PiggyKeypair, PiggyTap, SquarePlusOne};
use crate::rng::RandomSource;
use crate::transcript::{join_decimal, MessageLog, MsgKind, Party};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DualTtpError {
    #[error("sequence lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("recipient {index} is not on the roster of {roster}")]
    UnknownRecipient { index: usize, roster: usize },
    #[error("deliveries address different recipients: {d1} vs {d2}")]
    IndexMismatch { d1: usize, d2: usize },
    #[error("transport payload corrupted in transit: {0}")]
    CorruptedPayload(String),
    #[error("piggy modulus {pb_n} must exceed the field modulus {p}")]
    PiggyModulusTooSmall { pb_n: BigUint, p: BigUint },
    #[error("transcript violates key separation: {0}")]
    KeySeparation(String),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Piggy(#[from] PiggyError),
}

/// Fresh per-share key that masks the share value in transit (k1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShareKey(pub Vec<FieldElement>);

/// Fresh per-share key that masks k1 inside the first package (k2).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WrapKey(pub Vec<FieldElement>);

/// What TTP1 holds for one recipient: the encrypted share plus the wrap
/// key in the clear.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Package1 {
    pub recipient_index: usize,
    pub x: FieldElement,
    pub enc_share: Vec<FieldElement>,
    pub wrap_key: WrapKey,
}

/// What TTP2 holds for one recipient: the encrypted share key only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Package2 {
    pub recipient_index: usize,
    pub enc_share_key: Vec<FieldElement>,
}

/// TTP1's unmodified forward of Package1 to its recipient.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Delivery1 {
    pub recipient_index: usize,
    pub x: FieldElement,
    pub enc_share: Vec<FieldElement>,
    pub wrap_key: WrapKey,
}

/// TTP2's unmodified forward of Package2 to its recipient.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Delivery2 {
    pub recipient_index: usize,
    pub enc_share_key: Vec<FieldElement>,
}

/// Elementwise (m_i + key_i) mod p.
pub fn otp_encrypt(
    m: &[FieldElement],
    key: &[FieldElement],
) -> Result<Vec<FieldElement>, DualTtpError> {
    if m.len() != key.len() {
        return Err(DualTtpError::LengthMismatch {
            left: m.len(),
            right: key.len(),
        });
    }
    Ok(m.iter().zip(key).map(|(a, b)| a.add(b)).collect())
}

/// Elementwise (c_i − key_i) mod p.
pub fn otp_decrypt(
    c: &[FieldElement],
    key: &[FieldElement],
) -> Result<Vec<FieldElement>, DualTtpError> {
    if c.len() != key.len() {
        return Err(DualTtpError::LengthMismatch {
            left: c.len(),
            right: key.len(),
        });
    }
    Ok(c.iter().zip(key).map(|(a, b)| a.sub(b)).collect())
}

/// Applies both layers to one share with the given keys: Package1 carries
/// (x, c+k1, k2), Package2 carries (k1+k2).
pub fn wrap_share(
    bundle: &ShareBundle,
    k1: &ShareKey,
    k2: &WrapKey,
) -> Result<(Package1, Package2), DualTtpError> {
    let enc_share = otp_encrypt(&bundle.c, &k1.0)?;
    let enc_share_key = otp_encrypt(&k1.0, &k2.0)?;
    Ok((
        Package1 {
            recipient_index: bundle.index,
            x: bundle.x.clone(),
            enc_share,
            wrap_key: k2.clone(),
        },
        Package2 {
            recipient_index: bundle.index,
            enc_share_key,
        },
    ))
}

/// Draws a key vector of `len` uniform field elements that differs from
/// every vector already in `used` (single-use keys; the redraw loop keeps
/// freshness deterministic for a given source).
fn fresh_key_vector(
    ctx: &PrimeContext,
    len: usize,
    used: &mut BTreeSet<Vec<BigUint>>,
    rng: &mut dyn RandomSource,
) -> Vec<FieldElement> {
    let zero = BigUint::from(0u32);
    loop {
        let key: Vec<FieldElement> = (0..len).map(|_| rand_element(ctx, &zero, rng)).collect();
        let raw: Vec<BigUint> = key.iter().map(|e| e.value().clone()).collect();
        if used.insert(raw) {
            return key;
        }
    }
}

/// Steps 1–3 of the dealer: per share, draw fresh k1 then k2 (recipients in
/// index order) and wrap. Keys are dropped on return; only the packages
/// survive.
pub fn dealer_prepare(
    bundles: &[ShareBundle],
    rng: &mut dyn RandomSource,
) -> Result<Vec<(Package1, Package2)>, DualTtpError> {
    let mut used_k1 = BTreeSet::new();
    let mut used_k2 = BTreeSet::new();
    bundles
        .iter()
        .map(|bundle| {
            let ctx = bundle.x.context();
            let k1 = ShareKey(fresh_key_vector(ctx, bundle.c.len(), &mut used_k1, rng));
            let k2 = WrapKey(fresh_key_vector(ctx, bundle.c.len(), &mut used_k2, rng));
            wrap_share(bundle, &k1, &k2)
        })
        .collect()
}

fn check_roster(index: usize, roster: usize) -> Result<(), DualTtpError> {
    if index == 0 || index > roster {
        return Err(DualTtpError::UnknownRecipient { index, roster });
    }
    Ok(())
}

/// TTP1 forwards its package unmodified to the addressed recipient.
pub fn ttp1_forward(pkg: &Package1, roster: usize) -> Result<Delivery1, DualTtpError> {
    check_roster(pkg.recipient_index, roster)?;
    Ok(Delivery1 {
        recipient_index: pkg.recipient_index,
        x: pkg.x.clone(),
        enc_share: pkg.enc_share.clone(),
        wrap_key: pkg.wrap_key.clone(),
    })
}

/// TTP2 forwards its package unmodified to the addressed recipient.
pub fn ttp2_forward(pkg: &Package2, roster: usize) -> Result<Delivery2, DualTtpError> {
    check_roster(pkg.recipient_index, roster)?;
    Ok(Delivery2 {
        recipient_index: pkg.recipient_index,
        enc_share_key: pkg.enc_share_key.clone(),
    })
}

/// Step 7: peel the wrap layer to get k1, then peel the share layer.
pub fn recipient_decrypt(
    d1: &Delivery1,
    d2: &Delivery2,
    _ctx: &PrimeContext,
) -> Result<ShareBundle, DualTtpError> {
    if d1.recipient_index != d2.recipient_index {
        return Err(DualTtpError::IndexMismatch {
            d1: d1.recipient_index,
            d2: d2.recipient_index,
        });
    }
    let k1 = otp_decrypt(&d2.enc_share_key, &d1.wrap_key.0)?;
    let c = otp_decrypt(&d1.enc_share, &k1)?;
    Ok(ShareBundle {
        index: d1.recipient_index,
        x: d1.x.clone(),
        c,
    })
}

/// How dealer→TTP parcels travel: handed over directly, or deposited one
/// integer at a time through the tamper-evident piggy bank rounds of the
/// given third-party keypair (shared by both legs).
#[derive(Debug, Clone)]
pub enum Transport {
    Direct,
    Piggy { key: PiggyKeypair },
}

/// A network leg of the fixed topology.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Leg {
    DealerTtp1,
    DealerTtp2,
    Ttp1Recipient(usize),
    Ttp2Recipient(usize),
}

/// Full-bus observer: sees every parcel with its leg context and, for
/// piggy legs, doubles as the wire tap. Adversary models decide what their
/// vantage actually captures; honest runs use [`NoMonitor`].
pub trait Monitor: PiggyTap {
    /// Announces the leg the next messages travel on.
    fn begin_leg(&mut self, leg: Leg) {
        let _ = leg;
    }
    fn on_package1(&mut self, pkg: &Package1) {
        let _ = pkg;
    }
    fn on_package2(&mut self, pkg: &Package2) {
        let _ = pkg;
    }
    fn on_delivery1(&mut self, d: &Delivery1) {
        let _ = d;
    }
    fn on_delivery2(&mut self, d: &Delivery2) {
        let _ = d;
    }
}

/// The no-op observer for honest runs.
pub struct NoMonitor;

impl PiggyTap for NoMonitor {}
impl Monitor for NoMonitor {}

/// Piggy-leg serialization: every integer is shifted by +1 so that zero
/// field elements stay inside the transport's [1, n−1] payload range.
fn flatten_shifted(parts: &[BigUint]) -> Vec<BigUint> {
    parts.iter().map(|v| v + BigUint::one()).collect()
}

fn unshift(values: &[BigUint]) -> Result<Vec<BigUint>, DualTtpError> {
    values
        .iter()
        .map(|v| {
            if v.bits() == 0 {
                Err(DualTtpError::CorruptedPayload(
                    "shifted element cannot be zero".to_string(),
                ))
            } else {
                Ok(v - BigUint::one())
            }
        })
        .collect()
}

fn pkg1_to_integers(pkg: &Package1) -> Vec<BigUint> {
    let mut parts = vec![BigUint::from(pkg.recipient_index), pkg.x.value().clone()];
    parts.extend(pkg.enc_share.iter().map(|e| e.value().clone()));
    parts.extend(pkg.wrap_key.0.iter().map(|e| e.value().clone()));
    flatten_shifted(&parts)
}

fn pkg1_from_integers(
    values: &[BigUint],
    blocks: usize,
    ctx: &PrimeContext,
) -> Result<Package1, DualTtpError> {
    let expected = 2 + 2 * blocks;
    if values.len() != expected {
        return Err(DualTtpError::LengthMismatch {
            left: values.len(),
            right: expected,
        });
    }
    let parts = unshift(values)?;
    let recipient_index = usize::try_from(&parts[0]).map_err(|_| {
        DualTtpError::CorruptedPayload(format!("recipient index {} out of range", parts[0]))
    })?;
    let x = ctx.element(parts[1].clone());
    let enc_share = parts[2..2 + blocks]
        .iter()
        .map(|v| ctx.element(v.clone()))
        .collect();
    let wrap_key = WrapKey(
        parts[2 + blocks..]
            .iter()
            .map(|v| ctx.element(v.clone()))
            .collect(),
    );
    Ok(Package1 {
        recipient_index,
        x,
        enc_share,
        wrap_key,
    })
}

fn pkg2_to_integers(pkg: &Package2) -> Vec<BigUint> {
    let mut parts = vec![BigUint::from(pkg.recipient_index)];
    parts.extend(pkg.enc_share_key.iter().map(|e| e.value().clone()));
    flatten_shifted(&parts)
}

fn pkg2_from_integers(
    values: &[BigUint],
    blocks: usize,
    ctx: &PrimeContext,
) -> Result<Package2, DualTtpError> {
    let expected = 1 + blocks;
    if values.len() != expected {
        return Err(DualTtpError::LengthMismatch {
            left: values.len(),
            right: expected,
        });
    }
    let parts = unshift(values)?;
    let recipient_index = usize::try_from(&parts[0]).map_err(|_| {
        DualTtpError::CorruptedPayload(format!("recipient index {} out of range", parts[0]))
    })?;
    let enc_share_key = parts[1..]
        .iter()
        .map(|v| ctx.element(v.clone()))
        .collect();
    Ok(Package2 {
        recipient_index,
        enc_share_key,
    })
}

fn decimal_list(elements: &[FieldElement]) -> String {
    join_decimal(elements.iter().map(|e| e.value()))
}

/// Structural key-separation check over a finished transcript: TTP1 lines
/// may carry only {i, x, enc, wrap}, TTP2 lines only {i, enckey}. Neither
/// view pairs a ciphertext with its own key.
pub fn check_key_separation(log: &MessageLog) -> Result<(), DualTtpError> {
    for entry in log.entries() {
        let allowed: &[&str] = match entry.kind {
            MsgKind::SharePkg1 | MsgKind::Deliver1 => &["i", "x", "enc", "wrap"],
            MsgKind::SharePkg2 | MsgKind::Deliver2 => &["i", "enckey"],
            _ => continue,
        };
        for (key, _) in &entry.fields {
            if !allowed.contains(key) {
                return Err(DualTtpError::KeySeparation(format!(
                    "field {key} is not allowed on {} lines",
                    entry.kind
                )));
            }
        }
    }
    Ok(())
}

/// Runs the whole protocol: split every secret block, wrap each share,
/// route the layers through the two third parties (Steps 2–5 looped per
/// recipient in index order), and peel at each recipient. The transcript
/// accumulates in `log` and survives a tamper abort.
#[allow(clippy::too_many_arguments)]
pub fn run_distribution(
    secret_blocks: &[FieldElement],
    k: usize,
    n: usize,
    ctx: &PrimeContext,
    rng: &mut dyn RandomSource,
    transport: &Transport,
    monitor: &mut dyn Monitor,
    log: &mut MessageLog,
) -> Result<Vec<ShareBundle>, DualTtpError> {
    if let Transport::Piggy { key } = transport {
        if key.modulus() <= ctx.modulus() {
            return Err(DualTtpError::PiggyModulusTooSmall {
                pb_n: key.modulus().clone(),
                p: ctx.modulus().clone(),
            });
        }
    }
    let blocks = secret_blocks.len();
    let bundles = split_blocks(secret_blocks, k, n, rng)?;
    let packages = dealer_prepare(&bundles, rng)?;
    let mut received = Vec::with_capacity(n);
    for (pkg1, pkg2) in &packages {
        // Step 2: dealer → TTP1.
        monitor.begin_leg(Leg::DealerTtp1);
        let pkg1_arrived = match transport {
            Transport::Direct => pkg1.clone(),
            Transport::Piggy { key } => {
                let values = transfer_payload_into(
                    &pkg1_to_integers(pkg1),
                    key,
                    &SquarePlusOne,
                    Party::Dealer,
                    Party::Ttp1,
                    rng,
                    monitor,
                    log,
                )?;
                pkg1_from_integers(&values, blocks, ctx)?
            }
        };
        log.record(
            Party::Dealer,
            Party::Ttp1,
            MsgKind::SharePkg1,
            vec![
                ("i", pkg1_arrived.recipient_index.to_string()),
                ("x", pkg1_arrived.x.value().to_string()),
                ("enc", decimal_list(&pkg1_arrived.enc_share)),
                ("wrap", decimal_list(&pkg1_arrived.wrap_key.0)),
            ],
        );
        monitor.on_package1(&pkg1_arrived);

        // Step 3: dealer → TTP2.
        monitor.begin_leg(Leg::DealerTtp2);
        let pkg2_arrived = match transport {
            Transport::Direct => pkg2.clone(),
            Transport::Piggy { key } => {
                let values = transfer_payload_into(
                    &pkg2_to_integers(pkg2),
                    key,
                    &SquarePlusOne,
                    Party::Dealer,
                    Party::Ttp2,
                    rng,
                    monitor,
                    log,
                )?;
                pkg2_from_integers(&values, blocks, ctx)?
            }
        };
        log.record(
            Party::Dealer,
            Party::Ttp2,
            MsgKind::SharePkg2,
            vec![
                ("i", pkg2_arrived.recipient_index.to_string()),
                ("enckey", decimal_list(&pkg2_arrived.enc_share_key)),
            ],
        );
        monitor.on_package2(&pkg2_arrived);

        // Step 4: TTP1 → recipient.
        let d1 = ttp1_forward(&pkg1_arrived, n)?;
        monitor.begin_leg(Leg::Ttp1Recipient(d1.recipient_index));
        log.record(
            Party::Ttp1,
            Party::Recipient(d1.recipient_index),
            MsgKind::Deliver1,
            vec![
                ("i", d1.recipient_index.to_string()),
                ("x", d1.x.value().to_string()),
                ("enc", decimal_list(&d1.enc_share)),
                ("wrap", decimal_list(&d1.wrap_key.0)),
            ],
        );
        monitor.on_delivery1(&d1);

        // Step 5: TTP2 → recipient.
        let d2 = ttp2_forward(&pkg2_arrived, n)?;
        monitor.begin_leg(Leg::Ttp2Recipient(d2.recipient_index));
        log.record(
            Party::Ttp2,
            Party::Recipient(d2.recipient_index),
            MsgKind::Deliver2,
            vec![
                ("i", d2.recipient_index.to_string()),
                ("enckey", decimal_list(&d2.enc_share_key)),
            ],
        );
        monitor.on_delivery2(&d2);

        // Step 7: recipient peels both layers.
        received.push(recipient_decrypt(&d1, &d2, ctx)?);
    }
    check_key_separation(log)?;
    Ok(received)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::{join_blocks, Partition};
    use crate::partition::reconstruct_roots;
    use crate::partition::recover_secret;
    use crate::piggy_bank::keygen;
    use crate::rng::SplitMix64;

    fn ctx19() -> PrimeContext {
        PrimeContext::from_u64(19).unwrap()
    }

    fn elems(ctx: &PrimeContext, values: &[u64]) -> Vec<FieldElement> {
        values.iter().map(|&v| ctx.element(v)).collect()
    }

    #[test]
    fn otp_known_values() {
        let ctx = ctx19();
        assert_eq!(
            otp_encrypt(&elems(&ctx, &[11]), &elems(&ctx, &[5])).unwrap(),
            elems(&ctx, &[16])
        );
        let m = elems(&ctx, &[3, 7, 18]);
        assert_eq!(otp_encrypt(&m, &elems(&ctx, &[0, 0, 0])).unwrap(), m);
        assert_eq!(
            otp_encrypt(&elems(&ctx, &[18]), &elems(&ctx, &[1])).unwrap(),
            elems(&ctx, &[0])
        );
        assert_eq!(
            otp_decrypt(&elems(&ctx, &[16]), &elems(&ctx, &[5])).unwrap(),
            elems(&ctx, &[11])
        );
        assert_eq!(
            otp_decrypt(&elems(&ctx, &[0]), &elems(&ctx, &[1])).unwrap(),
            elems(&ctx, &[18])
        );
        assert!(matches!(
            otp_encrypt(&m, &elems(&ctx, &[1])),
            Err(DualTtpError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn otp_round_trip_random() {
        let ctx = ctx19();
        let mut rng = SplitMix64::new(19);
        let p = ctx.modulus().clone();
        for _ in 0..200 {
            let m: Vec<FieldElement> = (0..4).map(|_| ctx.element(rng.below(&p))).collect();
            let key: Vec<FieldElement> = (0..4).map(|_| ctx.element(rng.below(&p))).collect();
            let c = otp_encrypt(&m, &key).unwrap();
            assert_eq!(otp_decrypt(&c, &key).unwrap(), m);
        }
    }

    #[test]
    fn wrap_share_known_values() {
        let ctx = ctx19();
        let bundle = ShareBundle {
            index: 1,
            x: ctx.one(),
            c: elems(&ctx, &[11]),
        };
        let (pkg1, pkg2) = wrap_share(
            &bundle,
            &ShareKey(elems(&ctx, &[5])),
            &WrapKey(elems(&ctx, &[7])),
        )
        .unwrap();
        assert_eq!(pkg1.enc_share, elems(&ctx, &[16]));
        assert_eq!(pkg1.wrap_key.0, elems(&ctx, &[7]));
        assert_eq!(pkg2.enc_share_key, elems(&ctx, &[12]));

        // A zero wrap key ships k1 verbatim.
        let (_, pkg2) = wrap_share(
            &bundle,
            &ShareKey(elems(&ctx, &[5])),
            &WrapKey(elems(&ctx, &[0])),
        )
        .unwrap();
        assert_eq!(pkg2.enc_share_key, elems(&ctx, &[5]));
    }

    #[test]
    fn dealer_draws_fresh_key_pairs() {
        let ctx = ctx19();
        let mut rng = SplitMix64::new(23);
        let blocks = elems(&ctx, &[12]);
        let bundles = split_blocks(&blocks, 2, 3, &mut rng).unwrap();
        let packages = dealer_prepare(&bundles, &mut rng).unwrap();
        assert_eq!(packages.len(), 3);
        let wraps: BTreeSet<Vec<BigUint>> = packages
            .iter()
            .map(|(p1, _)| p1.wrap_key.0.iter().map(|e| e.value().clone()).collect())
            .collect();
        assert_eq!(wraps.len(), 3, "wrap keys must be pairwise distinct");
        // k1 = enckey − wrap must also be pairwise distinct.
        let share_keys: BTreeSet<Vec<BigUint>> = packages
            .iter()
            .map(|(p1, p2)| {
                otp_decrypt(&p2.enc_share_key, &p1.wrap_key.0)
                    .unwrap()
                    .iter()
                    .map(|e| e.value().clone())
                    .collect()
            })
            .collect();
        assert_eq!(share_keys.len(), 3, "share keys must be pairwise distinct");
    }

    #[test]
    fn forwards_are_pass_through_with_roster_check() {
        let ctx = ctx19();
        let pkg1 = Package1 {
            recipient_index: 2,
            x: ctx.element(2u32),
            enc_share: elems(&ctx, &[16]),
            wrap_key: WrapKey(elems(&ctx, &[7])),
        };
        let d1 = ttp1_forward(&pkg1, 3).unwrap();
        assert_eq!(d1.recipient_index, 2);
        assert_eq!(d1.enc_share, pkg1.enc_share);
        assert!(matches!(
            ttp1_forward(
                &Package1 {
                    recipient_index: 99,
                    ..pkg1.clone()
                },
                3
            ),
            Err(DualTtpError::UnknownRecipient { index: 99, roster: 3 })
        ));
        let pkg2 = Package2 {
            recipient_index: 0,
            enc_share_key: elems(&ctx, &[12]),
        };
        assert!(matches!(
            ttp2_forward(&pkg2, 3),
            Err(DualTtpError::UnknownRecipient { index: 0, .. })
        ));
    }

    #[test]
    fn recipient_peels_both_layers() {
        let ctx = ctx19();
        let d1 = Delivery1 {
            recipient_index: 1,
            x: ctx.one(),
            enc_share: elems(&ctx, &[16]),
            wrap_key: WrapKey(elems(&ctx, &[7])),
        };
        let d2 = Delivery2 {
            recipient_index: 1,
            enc_share_key: elems(&ctx, &[12]),
        };
        let bundle = recipient_decrypt(&d1, &d2, &ctx).unwrap();
        assert_eq!(bundle.x, ctx.one());
        assert_eq!(bundle.c, elems(&ctx, &[11]));

        let mismatched = Delivery2 {
            recipient_index: 2,
            enc_share_key: elems(&ctx, &[12]),
        };
        assert!(matches!(
            recipient_decrypt(&d1, &mismatched, &ctx),
            Err(DualTtpError::IndexMismatch { d1: 1, d2: 2 })
        ));
    }

    #[test]
    fn zero_keys_are_the_identity_path() {
        let ctx = ctx19();
        let d1 = Delivery1 {
            recipient_index: 1,
            x: ctx.one(),
            enc_share: elems(&ctx, &[11]),
            wrap_key: WrapKey(elems(&ctx, &[0])),
        };
        let d2 = Delivery2 {
            recipient_index: 1,
            enc_share_key: elems(&ctx, &[0]),
        };
        let bundle = recipient_decrypt(&d1, &d2, &ctx).unwrap();
        assert_eq!(bundle.c, elems(&ctx, &[11]));
    }

    #[test]
    fn layer_soundness_random_round_trips() {
        let ctx = ctx19();
        let mut rng = SplitMix64::new(29);
        let p = ctx.modulus().clone();
        for trial in 0..100 {
            let bundle = ShareBundle {
                index: 1 + (trial % 5),
                x: ctx.element(1u64 + (trial as u64 % 18)),
                c: (0..3).map(|_| ctx.element(rng.below(&p))).collect(),
            };
            let k1 = ShareKey((0..3).map(|_| ctx.element(rng.below(&p))).collect());
            let k2 = WrapKey((0..3).map(|_| ctx.element(rng.below(&p))).collect());
            let (pkg1, pkg2) = wrap_share(&bundle, &k1, &k2).unwrap();
            let d1 = ttp1_forward(&pkg1, 5).unwrap();
            let d2 = ttp2_forward(&pkg2, 5).unwrap();
            assert_eq!(recipient_decrypt(&d1, &d2, &ctx).unwrap(), bundle);
        }
    }

    #[test]
    fn single_view_is_consistent_with_every_share_value() {
        // TTP1 sees (x, c+k1, k2). For every candidate share value c' there
        // is exactly one k1 making the view consistent, so the view alone
        // pins nothing down. Same for TTP2's (k1+k2) view over k1.
        let ctx = ctx19();
        let p: u64 = 19;
        let c: u64 = 11;
        let k1: u64 = 5;
        let enc = (c + k1) % p;
        let candidates: Vec<u64> = (0..p)
            .filter(|cand| (0..p).any(|key| (cand + key) % p == enc))
            .collect();
        assert_eq!(candidates.len(), p as usize);
        let ctx_n = ctx.modulus();
        assert_eq!(ctx_n, &BigUint::from(19u32));
    }

    #[test]
    fn distribution_direct_end_to_end() {
        let ctx = ctx19();
        let mut rng = SplitMix64::new(42);
        let mut log = MessageLog::new();
        let received = run_distribution(
            &elems(&ctx, &[12]),
            2,
            3,
            &ctx,
            &mut rng,
            &Transport::Direct,
            &mut NoMonitor,
            &mut log,
        )
        .unwrap();
        assert_eq!(received.len(), 3);
        // Any two recipients reconstruct the secret.
        for pair in [[0usize, 1], [1, 2], [2, 0]] {
            let quorum = vec![received[pair[0]].clone(), received[pair[1]].clone()];
            let blocks = join_blocks(&quorum, 2, &ctx).unwrap();
            assert_eq!(blocks, elems(&ctx, &[12]));
        }
        // Transcript shape: per recipient SHARE_PKG1, SHARE_PKG2, DELIVER1,
        // DELIVER2 in order.
        assert_eq!(log.len(), 12);
        let kinds: Vec<MsgKind> = log.entries().iter().map(|e| e.kind).collect();
        assert_eq!(
            &kinds[..4],
            &[
                MsgKind::SharePkg1,
                MsgKind::SharePkg2,
                MsgKind::Deliver1,
                MsgKind::Deliver2
            ]
        );
        check_key_separation(&log).unwrap();
    }

    #[test]
    fn distribution_threshold_boundary() {
        let ctx = ctx19();
        let mut rng = SplitMix64::new(5);
        let mut log = MessageLog::new();
        let received = run_distribution(
            &elems(&ctx, &[7]),
            2,
            2,
            &ctx,
            &mut rng,
            &Transport::Direct,
            &mut NoMonitor,
            &mut log,
        )
        .unwrap();
        assert_eq!(received.len(), 2);
        let blocks = join_blocks(&received, 2, &ctx).unwrap();
        assert_eq!(blocks, elems(&ctx, &[7]));
        // One recipient alone is below quorum.
        let shares = vec![Partition {
            index: received[0].index,
            x: received[0].x.clone(),
            c: received[0].c[0].clone(),
        }];
        assert!(reconstruct_roots(&shares, 2, &ctx).is_err());
    }

    #[test]
    fn distribution_transcript_deterministic() {
        let ctx = ctx19();
        let run = || {
            let mut rng = SplitMix64::new(42);
            let mut log = MessageLog::new();
            run_distribution(
                &elems(&ctx, &[12]),
                2,
                3,
                &ctx,
                &mut rng,
                &Transport::Direct,
                &mut NoMonitor,
                &mut log,
            )
            .unwrap();
            log.render()
        };
        assert_eq!(run(), run());
    }

    fn textbook_piggy_key() -> PiggyKeypair {
        keygen(
            &BigUint::from(5u32),
            &BigUint::from(17u32),
            &BigUint::from(5u32),
        )
        .unwrap()
    }

    #[test]
    fn distribution_over_piggy_transport() {
        let ctx = ctx19();
        let mut rng = SplitMix64::new(42);
        let mut log = MessageLog::new();
        let received = run_distribution(
            &elems(&ctx, &[12]),
            2,
            3,
            &ctx,
            &mut rng,
            &Transport::Piggy {
                key: textbook_piggy_key(),
            },
            &mut NoMonitor,
            &mut log,
        )
        .unwrap();
        assert_eq!(received.len(), 3);
        let blocks = join_blocks(&received[1..], 2, &ctx).unwrap();
        assert_eq!(blocks, elems(&ctx, &[12]));
        // Piggy rounds appear: pkg1 flattens to 4 integers, pkg2 to 2, so
        // each recipient adds (4+2)·3 PB lines + the 4 protocol lines.
        assert_eq!(log.len(), 3 * (6 * 3 + 4));
        assert!(log
            .entries()
            .iter()
            .any(|e| e.kind == MsgKind::PbChallenge));
        // The secret must survive the +1 shift on zero elements: run many
        // seeds so zero ciphertext elements actually occur.
        for seed in 0..20 {
            let mut rng = SplitMix64::new(seed);
            let mut log = MessageLog::new();
            let received = run_distribution(
                &elems(&ctx, &[12]),
                2,
                3,
                &ctx,
                &mut rng,
                &Transport::Piggy {
                    key: textbook_piggy_key(),
                },
                &mut NoMonitor,
                &mut log,
            )
            .unwrap();
            let blocks = join_blocks(&received, 2, &ctx).unwrap();
            assert_eq!(blocks, elems(&ctx, &[12]), "seed {seed}");
        }
    }

    #[test]
    fn piggy_transport_requires_larger_modulus() {
        // φ(15)=8, e=3 works, but n=15 < p=19.
        let small = keygen(
            &BigUint::from(3u32),
            &BigUint::from(5u32),
            &BigUint::from(3u32),
        )
        .unwrap();
        let ctx = ctx19();
        let mut rng = SplitMix64::new(1);
        let mut log = MessageLog::new();
        let err = run_distribution(
            &elems(&ctx, &[12]),
            2,
            3,
            &ctx,
            &mut rng,
            &Transport::Piggy { key: small },
            &mut NoMonitor,
            &mut log,
        )
        .unwrap_err();
        assert!(matches!(err, DualTtpError::PiggyModulusTooSmall { .. }));
    }

    struct TamperFirstM1;

    impl PiggyTap for TamperFirstM1 {
        fn mutate_m1(
            &mut self,
            round: usize,
            m1: &BigUint,
            public: &crate::piggy_bank::PiggyPublic,
        ) -> Option<BigUint> {
            (round == 0).then(|| (m1 + BigUint::one()) % &public.n)
        }
    }

    impl Monitor for TamperFirstM1 {}

    #[test]
    fn piggy_tampering_aborts_distribution_and_keeps_log() {
        let ctx = ctx19();
        let mut rng = SplitMix64::new(42);
        let mut log = MessageLog::new();
        let err = run_distribution(
            &elems(&ctx, &[12]),
            2,
            3,
            &ctx,
            &mut rng,
            &Transport::Piggy {
                key: textbook_piggy_key(),
            },
            &mut TamperFirstM1,
            &mut log,
        )
        .unwrap_err();
        assert!(matches!(
            err,
            DualTtpError::Piggy(PiggyError::TamperDetected { round: 0 })
        ));
        // The challenge and both responses of the poisoned round were
        // still recorded before the abort.
        assert_eq!(log.len(), 3);
    }

    #[test]
    fn recovered_roots_match_original_secret_direct_and_piggy() {
        let ctx = ctx19();
        for seed in [1u64, 2, 3] {
            let mut rng = SplitMix64::new(seed);
            let mut log = MessageLog::new();
            let received = run_distribution(
                &elems(&ctx, &[12]),
                2,
                3,
                &ctx,
                &mut rng,
                &Transport::Direct,
                &mut NoMonitor,
                &mut log,
            )
            .unwrap();
            let shares: Vec<Partition> = received[..2]
                .iter()
                .map(|b| Partition {
                    index: b.index,
                    x: b.x.clone(),
                    c: b.c[0].clone(),
                })
                .collect();
            let roots = reconstruct_roots(&shares, 2, &ctx).unwrap();
            assert_eq!(recover_secret(&roots), ctx.element(12u32));
        }
    }
}
