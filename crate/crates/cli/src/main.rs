//! `custody` — command-line front end for threshold secret custody.
//!
//! Splits secrets into root-encoded shares, reconstructs them from a
//! quorum, runs the dual-TTP distribution with transcripts, executes
//! adversary scenarios with a brute-force candidate report, replays the
//! worked protocol examples as a regression gate, and drives the qutrit
//! threshold simulator.
//!
//! Exit codes: 0 success, 1 protocol refusal or detection (zero secret,
//! missing quorum, tamper), 2 usage error (bad flags, non-prime modulus,
//! malformed inputs).

use std::collections::BTreeSet;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::{One, Zero};

use custody_core::adversary::{
    device_access, enroll_custodians, parse_scenario_config, run_scenario, AccessOutcome,
    AdversaryError, AdversaryModel, CustodyRole, MutationRule, RoleName, ScenarioConfig,
    TransportChoice,
};
use custody_core::dual_ttp::{run_distribution, DualTtpError, Leg, NoMonitor, Transport};
use custody_core::field::{FieldError, PrimeContext};
use custody_core::partition::{
    decode_blocks, encode_blocks, join_blocks, reconstruct_roots, recover_secret, split_blocks,
    Partition, PartitionError, RootTuple,
};
use custody_core::piggy_bank::{
    from_modulus, keygen, ttp_recover, user_respond, Challenge, PiggyError,
};
use custody_core::qutrit::{encode, fidelity, reconstruct, QutritState, SharePair};
use custody_core::rng::SplitMix64;
use custody_core::share_file::{parse_share, render_share, ShareRecord};
use custody_core::transcript::MessageLog;

#[derive(Parser)]
#[command(
    name = "custody",
    about = "Threshold secret custody: root-encoded shares, dual-TTP distribution, adversary scenarios, qutrit simulator",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Split a secret into n share files, any k of which reconstruct it.
    Split(SplitArgs),
    /// Reconstruct a secret from share files.
    Reconstruct(ReconstructArgs),
    /// Run the dual-TTP distribution and write its message transcript.
    Distribute(DistributeArgs),
    /// Run an adversary scenario and print the candidate report.
    Scenario(ScenarioArgs),
    /// Replay the protocol's worked examples as a regression gate.
    Demo(DemoArgs),
    /// Share one qutrit across three and reconstruct from a cyclic pair.
    Qutrit(QutritArgs),
}

#[derive(Args)]
struct SplitArgs {
    /// Decimal secret, or @path to share a file's bytes.
    #[arg(long)]
    secret: String,
    /// Prime modulus (decimal).
    #[arg(long)]
    p: String,
    /// Quorum size.
    #[arg(long)]
    k: usize,
    /// Number of shares.
    #[arg(long)]
    n: usize,
    /// PRNG seed; fixed seeds give bit-identical share files.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory the share files are written into.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ReconstructArgs {
    /// Comma-separated share file paths (at least k of them).
    #[arg(long)]
    shares: String,
    /// Decode the reconstructed blocks back into raw bytes.
    #[arg(long, default_value_t = false)]
    raw: bool,
}

#[derive(Args)]
struct DistributeArgs {
    /// Decimal secret, or @path to share a file's bytes.
    #[arg(long)]
    secret: String,
    /// Prime modulus (decimal).
    #[arg(long)]
    p: String,
    /// Quorum size.
    #[arg(long)]
    k: usize,
    /// Number of recipients.
    #[arg(long)]
    n: usize,
    /// PRNG seed; fixed seeds give bit-identical transcripts.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Dealer→TTP transport: direct handover or deposit-box rounds.
    #[arg(long, default_value = "direct")]
    transport: String,
    /// Deposit-box modulus (required with --transport piggy).
    #[arg(long)]
    pb_n: Option<String>,
    /// Deposit-box public exponent (required with --transport piggy).
    #[arg(long)]
    pb_e: Option<String>,
    /// Write the transcript here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario config file (key=value lines).
    #[arg(long, conflicts_with = "name")]
    config: Option<PathBuf>,
    /// Builtin scenario: honest, compromised_ttp1, compromised_ttp2,
    /// mim_piggy, device_access.
    #[arg(long)]
    name: Option<String>,
    /// Seed for builtin scenarios.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Write the transcript (with REPORT trailer) here; the trailer still
    /// prints to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run the named scenario once per seed in a..b (half-open).
    #[arg(long, conflicts_with = "config", conflicts_with = "out")]
    sweep_seeds: Option<String>,
    /// Custodians presenting shares in the device_access scenario.
    #[arg(long, default_value = "law_enforcement,judiciary")]
    holders: String,
}

#[derive(Args)]
struct DemoArgs {
    /// Replay both worked examples with their fixed values.
    #[arg(long, default_value_t = false)]
    worked_examples: bool,
}

#[derive(Args)]
struct QutritArgs {
    /// Three comma-separated complex amplitudes (e.g. 1,0,0 or
    /// 0.7071,0,0.7071j); normalized before encoding.
    #[arg(long)]
    secret: String,
    /// Which cyclic share pair reconstructs: 1,2 or 2,3 or 3,1.
    #[arg(long)]
    pair: String,
}

/// Failures carry their exit class: protocol refusals and detections are
/// designed outcomes (1), usage errors are caller mistakes (2).
enum CliError {
    Protocol(String),
    Usage(String),
}

type CliResult = Result<(), CliError>;

fn protocol(msg: impl Into<String>) -> CliError {
    CliError::Protocol(msg.into())
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Partition-layer errors: a zero secret and an undersized modulus are
/// refusals, everything else is malformed input.
fn map_partition(err: PartitionError) -> CliError {
    match err {
        PartitionError::ZeroSecret | PartitionError::ModulusTooSmall(_) => {
            protocol(err.to_string())
        }
        other => usage(other.to_string()),
    }
}

fn map_field(err: FieldError) -> CliError {
    usage(err.to_string())
}

fn parse_biguint(label: &str, text: &str) -> Result<BigUint, CliError> {
    text.parse::<BigUint>()
        .map_err(|_| usage(format!("{label} must be a decimal integer, got {text:?}")))
}

fn prime_context(p_text: &str) -> Result<PrimeContext, CliError> {
    let p = parse_biguint("--p", p_text)?;
    PrimeContext::new(p).map_err(map_field)
}

/// Resolves --secret into field blocks: a decimal literal is one block,
/// @path reads the file's bytes through the block encoder.
fn secret_blocks(
    raw: &str,
    ctx: &PrimeContext,
) -> Result<Vec<custody_core::field::FieldElement>, CliError> {
    if let Some(path) = raw.strip_prefix('@') {
        let data = fs::read(path).map_err(|e| usage(format!("cannot read {path}: {e}")))?;
        return encode_blocks(&data, ctx).map_err(map_partition);
    }
    let value = parse_biguint("--secret", raw)?;
    if value >= *ctx.modulus() {
        return Err(usage(format!(
            "secret {value} is not below the modulus {}",
            ctx.modulus()
        )));
    }
    if value.is_zero() {
        // Let the split layer issue its canonical refusal.
        return Ok(vec![ctx.element(value)]);
    }
    Ok(vec![ctx.element(value)])
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))
}

fn cmd_split(args: &SplitArgs) -> CliResult {
    let ctx = prime_context(&args.p)?;
    let blocks = secret_blocks(&args.secret, &ctx)?;
    let mut rng = SplitMix64::new(args.seed);
    let bundles = split_blocks(&blocks, args.k, args.n, &mut rng).map_err(map_partition)?;
    fs::create_dir_all(&args.out_dir)
        .map_err(|e| usage(format!("cannot create {}: {e}", args.out_dir.display())))?;
    let mut listing = String::new();
    for bundle in &bundles {
        let record = ShareRecord::from_bundle(bundle, args.k, args.n);
        let path = args.out_dir.join(format!("share_{}.share", bundle.index));
        write_text(&path, &render_share(&record))?;
        listing.push_str(&format!("{}\n", path.display()));
    }
    print!("{listing}");
    Ok(())
}

fn cmd_reconstruct(args: &ReconstructArgs) -> CliResult {
    let paths: Vec<&str> = args
        .shares
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    if paths.is_empty() {
        return Err(usage("--shares needs at least one file"));
    }
    let mut records: Vec<ShareRecord> = Vec::new();
    for path in &paths {
        let text =
            fs::read_to_string(path).map_err(|e| usage(format!("cannot read {path}: {e}")))?;
        let record = parse_share(&text).map_err(|e| usage(format!("{path}: {e}")))?;
        records.push(record);
    }
    let head = &records[0];
    for (path, record) in paths.iter().zip(&records).skip(1) {
        if record.p != head.p || record.k != head.k || record.n != head.n {
            return Err(usage(format!(
                "{path}: header (p={}, k={}, n={}) does not match the first share's (p={}, k={}, n={})",
                record.p, record.k, record.n, head.p, head.k, head.n
            )));
        }
    }
    if records.len() < head.k {
        return Err(protocol(format!(
            "quorum not met: need {} of {} shares, got {}",
            head.k,
            head.n,
            records.len()
        )));
    }
    let ctx = PrimeContext::new(head.p.clone()).map_err(map_field)?;
    let k = head.k;
    let bundles: Vec<_> = records.iter().map(|r| r.to_bundle(&ctx)).collect();
    let blocks = join_blocks(&bundles, k, &ctx).map_err(map_partition)?;
    if args.raw {
        let bytes = decode_blocks(&blocks, &ctx).map_err(map_partition)?;
        std::io::stdout()
            .write_all(&bytes)
            .map_err(|e| usage(format!("stdout: {e}")))?;
    } else {
        let rendered: Vec<String> = blocks.iter().map(|b| b.value().to_string()).collect();
        println!("{}", rendered.join(","));
    }
    Ok(())
}

fn parse_transport(
    transport: &str,
    pb_n: &Option<String>,
    pb_e: &Option<String>,
) -> Result<Transport, CliError> {
    match transport {
        "direct" => Ok(Transport::Direct),
        "piggy" => {
            let n_text = pb_n
                .as_ref()
                .ok_or_else(|| usage("--transport piggy requires --pb-n"))?;
            let e_text = pb_e
                .as_ref()
                .ok_or_else(|| usage("--transport piggy requires --pb-e"))?;
            let n = parse_biguint("--pb-n", n_text)?;
            let e = parse_biguint("--pb-e", e_text)?;
            let key = from_modulus(&n, &e).map_err(|err| usage(err.to_string()))?;
            Ok(Transport::Piggy { key })
        }
        other => Err(usage(format!(
            "unknown transport {other:?}; expected direct or piggy"
        ))),
    }
}

fn map_dual(err: DualTtpError) -> CliError {
    match err {
        DualTtpError::Partition(inner) => map_partition(inner),
        DualTtpError::PiggyModulusTooSmall { .. } => usage(err.to_string()),
        DualTtpError::Piggy(PiggyError::TamperDetected { .. }) => protocol(err.to_string()),
        other => usage(other.to_string()),
    }
}

fn cmd_distribute(args: &DistributeArgs) -> CliResult {
    let ctx = prime_context(&args.p)?;
    let blocks = secret_blocks(&args.secret, &ctx)?;
    let transport = parse_transport(&args.transport, &args.pb_n, &args.pb_e)?;
    let mut rng = SplitMix64::new(args.seed);
    let mut monitor = NoMonitor;
    let mut log = MessageLog::new();
    run_distribution(
        &blocks,
        args.k,
        args.n,
        &ctx,
        &mut rng,
        &transport,
        &mut monitor,
        &mut log,
    )
    .map_err(map_dual)?;
    match &args.out {
        Some(path) => write_text(path, &log.render())?,
        None => print!("{}", log.render()),
    }
    Ok(())
}

fn map_adversary(err: AdversaryError) -> CliError {
    match err {
        AdversaryError::BadConfig(_) | AdversaryError::EnumerationTooLarge { .. } => {
            usage(err.to_string())
        }
        AdversaryError::Field(inner) => map_field(inner),
        AdversaryError::Partition(inner) => map_partition(inner),
        AdversaryError::Piggy(inner) => usage(inner.to_string()),
        AdversaryError::Protocol(inner) => map_dual(inner),
    }
}

fn builtin_scenario(name: &str, seed: u64) -> Option<ScenarioConfig> {
    // Builtins pin p=19, a (2,3) split of secret 12, deposit modulus 85,
    // so every number in the transcript is hand-checkable.
    let base = ScenarioConfig {
        p: BigUint::from(19u32),
        k: 2,
        n: 3,
        secret: BigUint::from(12u32),
        seed,
        adversary: AdversaryModel::None,
        transport: TransportChoice::Direct,
    };
    match name {
        "honest" => Some(base),
        "compromised_ttp1" => Some(ScenarioConfig {
            adversary: AdversaryModel::CompromisedTtp1,
            ..base
        }),
        "compromised_ttp2" => Some(ScenarioConfig {
            adversary: AdversaryModel::CompromisedTtp2,
            ..base
        }),
        "mim_piggy" => Some(ScenarioConfig {
            adversary: AdversaryModel::Mim(
                Leg::DealerTtp1,
                MutationRule::OffsetM1 {
                    delta: BigUint::one(),
                },
            ),
            transport: TransportChoice::Piggy {
                pb_n: BigUint::from(85u32),
                pb_e: BigUint::from(5u32),
            },
            ..base
        }),
        _ => None,
    }
}

fn cmd_device_access(seed: u64, holders: &str) -> CliResult {
    let ctx = PrimeContext::from_u64(19).map_err(map_field)?;
    let mut rng = SplitMix64::new(seed);
    let roster = enroll_custodians(&ctx.element(12u32), &mut rng).map_err(map_adversary)?;
    let mut selected: Vec<CustodyRole> = Vec::new();
    let mut seen = BTreeSet::new();
    for part in holders.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let name = RoleName::parse(part)
            .ok_or_else(|| usage(format!("unknown custodian role {part:?}")))?;
        if !seen.insert(part.to_string()) {
            return Err(usage(format!("duplicate custodian role {part:?}")));
        }
        let role = roster
            .iter()
            .find(|r| r.name == name)
            .expect("roster covers all roles");
        selected.push(role.clone());
    }
    match device_access(&selected, 2, &ctx).map_err(map_adversary)? {
        AccessOutcome::Granted { secret } => {
            println!("{secret}");
            Ok(())
        }
        AccessOutcome::Refused { need, have } => Err(protocol(format!(
            "quorum not met: need {need} of 3 custodians, got {have}"
        ))),
    }
}

fn parse_sweep(text: &str) -> Result<std::ops::Range<u64>, CliError> {
    let (a, b) = text
        .split_once("..")
        .ok_or_else(|| usage(format!("--sweep-seeds wants a..b, got {text:?}")))?;
    let start: u64 = a
        .parse()
        .map_err(|_| usage(format!("bad sweep start {a:?}")))?;
    let end: u64 = b
        .parse()
        .map_err(|_| usage(format!("bad sweep end {b:?}")))?;
    if start >= end {
        return Err(usage(format!("empty sweep range {text:?}")));
    }
    Ok(start..end)
}

fn cmd_scenario(args: &ScenarioArgs) -> CliResult {
    if let Some(range_text) = &args.sweep_seeds {
        let name = args
            .name
            .as_deref()
            .ok_or_else(|| usage("--sweep-seeds requires --name"))?;
        if name == "device_access" {
            return Err(usage("device_access does not sweep"));
        }
        let range = parse_sweep(range_text)?;
        let mut any_detection = false;
        for seed in range {
            let config = builtin_scenario(name, seed)
                .ok_or_else(|| usage(format!("unknown scenario {name:?}")))?;
            let report = run_scenario(&config).map_err(map_adversary)?;
            any_detection |= report.tamper_detected;
            print!("seed={seed} {}", report.trailer());
        }
        if any_detection {
            return Err(protocol("tampering detected during sweep"));
        }
        return Ok(());
    }

    let config = match (&args.config, &args.name) {
        (Some(path), None) => {
            let text = fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
            parse_scenario_config(&text).map_err(map_adversary)?
        }
        (None, Some(name)) => {
            if name == "device_access" {
                return cmd_device_access(args.seed, &args.holders);
            }
            builtin_scenario(name, args.seed)
                .ok_or_else(|| usage(format!("unknown scenario {name:?}")))?
        }
        _ => return Err(usage("provide exactly one of --config or --name")),
    };
    let report = run_scenario(&config).map_err(map_adversary)?;
    match &args.out {
        Some(path) => {
            write_text(path, &report.render())?;
            print!("{}", report.trailer());
        }
        None => print!("{}", report.render()),
    }
    if report.tamper_detected {
        return Err(protocol("tampering detected; distribution aborted"));
    }
    Ok(())
}

/// One checked assertion of the demo run: prints PASS/FAIL and reports
/// whether it held.
fn check(label: &str, got: &BigUint, want: u64) -> bool {
    if *got == BigUint::from(want) {
        println!("PASS {label}={want}");
        true
    } else {
        println!("FAIL {label}={got} expected={want}");
        false
    }
}

fn run_demo() -> Result<bool, CliError> {
    let mut ok = true;

    // Worked partition example: d=12 over Z_19 with the first root forced
    // to 13; the completing root must be 12·13⁻¹ = 17 and any two of the
    // three shares must reconstruct 12.
    let ctx = PrimeContext::from_u64(19).map_err(map_field)?;
    let d = ctx.element(12u32);
    let roots =
        RootTuple::complete(&d, std::slice::from_ref(&ctx.element(13u32))).map_err(map_partition)?;
    ok &= check("r2", roots.roots()[1].value(), 17);
    let xs: Vec<_> = (1u32..=3).map(|x| ctx.element(x)).collect();
    let set = custody_core::partition::expand_shares(&roots, &xs).map_err(map_partition)?;
    for (share, want) in set.partitions.iter().zip([11u64, 9, 7]) {
        ok &= check(&format!("c{}", share.index), share.c.value(), want);
    }
    for quorum in [[0usize, 1], [1, 2], [2, 0]] {
        let picked: Vec<Partition> = quorum.iter().map(|&i| set.partitions[i].clone()).collect();
        let recovered = recover_secret(&reconstruct_roots(&picked, 2, &ctx).map_err(map_partition)?);
        let label = format!(
            "d_from_shares_{}_{}",
            set.partitions[quorum[0]].index, set.partitions[quorum[1]].index
        );
        ok &= check(&label, recovered.value(), 12);
    }

    // Worked deposit-box example: n=85=5·17, e=5 (so d=13), challenge
    // R=19, payload S=6 with key K=11. Every intermediate is fixed.
    let key = keygen(
        &BigUint::from(5u32),
        &BigUint::from(17u32),
        &BigUint::from(5u32),
    )
    .map_err(|e| usage(e.to_string()))?;
    ok &= check("piggy_d", key.secret_exponent(), 13);
    let public = key.public();
    let chal = Challenge::with_r(&public, BigUint::from(19u32)).map_err(|e| usage(e.to_string()))?;
    ok &= check("f_r", chal.f_r(), 49);
    let resp = user_respond(
        chal.f_r(),
        &BigUint::from(6u32),
        &BigUint::from(11u32),
        &public,
    );
    ok &= check("m1", &resp.m1, 50);
    ok &= check("m2", &resp.m2, 41);
    let (s, k) = ttp_recover(&resp, &chal, &key);
    ok &= check("S", &s, 6);
    ok &= check("K", &k, 11);

    Ok(ok)
}

fn cmd_demo(args: &DemoArgs) -> CliResult {
    if !args.worked_examples {
        return Err(usage("nothing to run; pass --worked-examples"));
    }
    if run_demo()? {
        Ok(())
    } else {
        Err(protocol("worked-example regression failed"))
    }
}

/// Parses one complex amplitude: `1`, `-0.5`, `2j`, `1+2j`, `0.5-0.5j`, `j`.
fn parse_amplitude(text: &str) -> Result<Complex64, CliError> {
    let bad = || usage(format!("bad amplitude {text:?}"));
    let t = text.trim();
    if t.is_empty() {
        return Err(bad());
    }
    if !t.ends_with('j') {
        return t.parse::<f64>().map(|re| Complex64::new(re, 0.0)).map_err(|_| bad());
    }
    let body = &t[..t.len() - 1];
    // Split off the imaginary term at the last +/- that is not a leading
    // sign and not part of an exponent.
    let split = body
        .char_indices()
        .rev()
        .find(|&(i, ch)| {
            (ch == '+' || ch == '-')
                && i != 0
                && !matches!(body.as_bytes()[i - 1], b'e' | b'E')
        })
        .map(|(i, _)| i);
    let (re_text, im_text) = match split {
        Some(i) => (&body[..i], &body[i..]),
        None => ("0", body),
    };
    let re: f64 = if re_text.is_empty() {
        0.0
    } else {
        re_text.parse().map_err(|_| bad())?
    };
    let im: f64 = match im_text {
        "" | "+" => 1.0,
        "-" => -1.0,
        other => other.parse().map_err(|_| bad())?,
    };
    Ok(Complex64::new(re, im))
}

fn format_amplitude(c: Complex64) -> String {
    // Canonical zero avoids "-0.000000000000" flapping in output.
    let re = if c.re == 0.0 { 0.0 } else { c.re };
    let im = if c.im == 0.0 { 0.0 } else { c.im };
    format!("{re:.12}{im:+.12}j")
}

fn cmd_qutrit(args: &QutritArgs) -> CliResult {
    let parts: Vec<&str> = args.secret.split(',').collect();
    if parts.len() != 3 {
        return Err(usage(format!(
            "--secret wants exactly three amplitudes, got {}",
            parts.len()
        )));
    }
    let mut amps = [Complex64::new(0.0, 0.0); 3];
    for (slot, part) in amps.iter_mut().zip(&parts) {
        *slot = parse_amplitude(part)?;
    }
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if norm < 1e-9 {
        return Err(usage("amplitudes form the zero vector; nothing to share"));
    }
    for amp in &mut amps {
        *amp /= norm;
    }
    let pair = SharePair::parse(&args.pair)
        .ok_or_else(|| usage(format!("--pair must be 1,2 or 2,3 or 3,1; got {:?}", args.pair)))?;
    let secret = QutritState::new(amps).map_err(|e| usage(e.to_string()))?;
    let joint = encode(&secret);
    let (recovered, _) = reconstruct(&joint, pair).map_err(|e| protocol(e.to_string()))?;
    let rendered: Vec<String> = recovered
        .amplitudes()
        .iter()
        .map(|&a| format_amplitude(a))
        .collect();
    println!("recovered={}", rendered.join(","));
    println!("fidelity={:.12}", fidelity(&secret, &recovered));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Split(args) => cmd_split(args),
        Cmd::Reconstruct(args) => cmd_reconstruct(args),
        Cmd::Distribute(args) => cmd_distribute(args),
        Cmd::Scenario(args) => cmd_scenario(args),
        Cmd::Demo(args) => cmd_demo(args),
        Cmd::Qutrit(args) => cmd_qutrit(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Protocol(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
