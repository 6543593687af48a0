//! Subcommand implementations. Every command prints one JSON document on
//! stdout; protocol-level rejections exit 1 with a machine-readable reason,
//! usage and state errors exit 2.

use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use castaudit_core::board::naive_tally;
use castaudit_core::group::{OpMeter, PrimeGroup, RistrettoGroup, TinyGroup};
use castaudit_core::hashing::sha256_parts;
use castaudit_core::protocol::{
    ad_audit, vd_cast, vd_finalize, voter_id_from_index, Election, ElectionConfig, LocalZkChannel,
    QrPayload, Verdict, VoterIntent, VotingServer,
};
use castaudit_core::zk;
use castaudit_core::{board, elgamal};
use castaudit_harness::scenario::derive_seed;
use castaudit_harness::{run_scenario, GroupChoice, ScenarioSpec, TransportKind};
use rand_chacha::ChaCha20Rng;
use rand_core::SeedableRng;
use serde_json::{json, Value};

use crate::config::{FileConfig, GroupArg};
use crate::state::{self, ElectionDir};

/// A command's result: the JSON to print and the exit code.
pub struct Outcome {
    pub report: Value,
    pub exit: i32,
}

impl Outcome {
    fn ok(report: Value) -> Self {
        Self { report, exit: 0 }
    }

    fn reject(report: Value) -> Self {
        Self { report, exit: 1 }
    }
}

pub fn cmd_setup(config_path: &Path, out: &Path, seed: u64, group: Option<GroupArg>) -> Result<Outcome> {
    let text = fs::read_to_string(config_path)
        .with_context(|| format!("cannot read config {}", config_path.display()))?;
    let mut config = crate::config::parse_config(&text)?;
    if let Some(group) = group {
        config.group = group;
    }
    match config.group {
        GroupArg::Tiny => setup_typed(TinyGroup, config, out, seed),
        GroupArg::Production => setup_typed(RistrettoGroup, config, out, seed),
    }
}

fn setup_typed<G: PrimeGroup>(
    group: G,
    config: FileConfig,
    out: &Path,
    seed: u64,
) -> Result<Outcome> {
    let meter = OpMeter::new();
    let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(seed, "setup"));
    let keys = elgamal::keygen(&group, &mut rng, &meter);
    let signing = config
        .election
        .signed_confirmations
        .then(|| board::signing_keygen(&group, &mut rng, &meter));
    let election_id: [u8; 16] =
        sha256_parts(&[b"castaudit/election", &seed.to_be_bytes()])[..16].try_into().unwrap();
    let election = Election::new(
        group.clone(),
        election_id,
        keys.pk.clone(),
        signing.as_ref().map(|s| s.vk.clone()),
        config.election.clone(),
    )
    .map_err(|e| anyhow!("invalid election config: {e}"))?;

    let dir = ElectionDir::new(out);
    fs::create_dir_all(&dir.root)?;
    let file = state::election_file(config.group, &group, &election, &keys.sk, signing.as_ref());
    dir.write_json(&dir.election_path(), &file)?;
    dir.write_json(&dir.intents_path(), &std::collections::BTreeMap::<String, Vec<u32>>::new())?;
    let server = VotingServer::new(election.clone(), signing);
    state::persist_server(&dir, &group, &server)?;

    Ok(Outcome::ok(json!({
        "command": "setup",
        "dir": out.display().to_string(),
        "group": config.group.as_str(),
        "election_id": hex::encode(election_id),
        "alphabet_size": election.config.alphabet_size,
        "ballot_length": election.config.ballot_length,
        "public_key": hex::encode(group.encode_element(&election.pk)),
    })))
}

/// Parses "1" or "0,2,1" into a ballot of the configured length.
fn parse_vote(vote: &str, ballot_length: usize, alphabet_size: u32) -> Result<Vec<u32>> {
    let parts: Vec<u32> = vote
        .split(',')
        .map(|p| p.trim().parse::<u32>().with_context(|| format!("bad vote entry {p:?}")))
        .collect::<Result<_>>()?;
    if parts.len() != ballot_length {
        bail!("ballot needs {ballot_length} entries, got {}", parts.len());
    }
    if let Some(bad) = parts.iter().find(|&&v| v >= alphabet_size) {
        bail!("vote {bad} outside the alphabet (0..{})", alphabet_size - 1);
    }
    Ok(parts)
}

pub fn cmd_cast(dir: &Path, voter: u64, vote: &str, seed: u64) -> Result<Outcome> {
    let dir = ElectionDir::new(dir);
    let file = dir.read_election_file()?;
    match GroupArg::parse(&file.group)? {
        GroupArg::Tiny => cast_typed(TinyGroup, &dir, &file, voter, vote, seed),
        GroupArg::Production => cast_typed(RistrettoGroup, &dir, &file, voter, vote, seed),
    }
}

fn cast_typed<G: PrimeGroup>(
    group: G,
    dir: &ElectionDir,
    file: &state::ElectionFile,
    voter: u64,
    vote: &str,
    seed: u64,
) -> Result<Outcome> {
    let loaded = state::load_election(group.clone(), file)?;
    let server_file: state::ServerFile =
        serde_json::from_str(&fs::read_to_string(dir.server_path())?)?;
    let board_export = fs::read_to_string(dir.board_path()).unwrap_or_default();
    let mut server = state::load_server(&loaded, &server_file, &board_export)?;

    let vote = parse_vote(vote, loaded.election.config.ballot_length, loaded.election.config.alphabet_size)?;
    let intent = VoterIntent { voter_id: voter_id_from_index(voter), vote: vote.clone() };

    let device_meter = OpMeter::new();
    let server_meter = OpMeter::new();
    let mut device_rng = ChaCha20Rng::seed_from_u64(derive_seed(seed, &format!("cast/device/{voter}")));
    let mut server_rng = ChaCha20Rng::seed_from_u64(derive_seed(seed, &format!("cast/server/{voter}")));

    let (ballot, submit) = vd_cast(&loaded.election, &intent, &mut device_rng, &device_meter)
        .map_err(|e| anyhow!("cast failed: {e}"))?;
    let blind = match server.receive_ballot(&submit, &mut server_rng, &server_meter) {
        Ok(b) => b,
        Err(e) => {
            return Ok(Outcome::reject(json!({
                "command": "cast",
                "voter": voter,
                "reason": reason_of_submit(&e),
            })))
        }
    };
    let payload = vd_finalize(&loaded.election, &ballot, &blind, &device_meter)
        .map_err(|e| anyhow!("finalize failed: {e}"))?;

    let qr_path = dir.qr_path(voter);
    if let Some(parent) = qr_path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(&qr_path, payload.to_armored(&group))?;

    let mut intents = dir.read_intents()?;
    intents.insert(hex::encode(intent.voter_id), vote.clone());
    dir.write_json(&dir.intents_path(), &intents)?;
    state::persist_server(dir, &group, &server)?;

    Ok(Outcome::ok(json!({
        "command": "cast",
        "voter": voter,
        "vote": vote,
        "ballot_digest": hex::encode(payload.ballot_digest),
        "qr_file": qr_path.display().to_string(),
        "device_exps": device_meter.exps(),
        "board_records": server.board.len(),
    })))
}

fn reason_of_submit(e: &castaudit_core::protocol::SubmitError) -> &'static str {
    use castaudit_core::protocol::SubmitError::*;
    match e {
        DuplicateBallot => "DuplicateBallot",
        WrongBallotLength { .. } => "WrongBallotLength",
        Board(_) => "BoardRejected",
    }
}

pub fn cmd_audit(dir: &Path, voter: u64, seed: u64, payload_path: Option<&Path>) -> Result<Outcome> {
    let dir = ElectionDir::new(dir);
    let file = dir.read_election_file()?;
    match GroupArg::parse(&file.group)? {
        GroupArg::Tiny => audit_typed(TinyGroup, &dir, &file, voter, seed, payload_path),
        GroupArg::Production => audit_typed(RistrettoGroup, &dir, &file, voter, seed, payload_path),
    }
}

fn audit_typed<G: PrimeGroup>(
    group: G,
    dir: &ElectionDir,
    file: &state::ElectionFile,
    voter: u64,
    seed: u64,
    payload_path: Option<&Path>,
) -> Result<Outcome> {
    let loaded = state::load_election(group.clone(), file)?;
    let server_file: state::ServerFile =
        serde_json::from_str(&fs::read_to_string(dir.server_path())?)?;
    let board_export = fs::read_to_string(dir.board_path()).unwrap_or_default();
    let server = state::load_server(&loaded, &server_file, &board_export)?;

    let default_path = dir.qr_path(voter);
    let path = payload_path.unwrap_or(&default_path);
    let armor = fs::read_to_string(path)
        .with_context(|| format!("cannot read QR payload {}", path.display()))?;
    let payload =
        match QrPayload::from_armored(&group, loaded.election.config.ballot_length, &armor) {
            Ok(p) => p,
            Err(e) => {
                return Ok(Outcome::reject(json!({
                    "command": "audit",
                    "voter": voter,
                    "reason": "MalformedPayload",
                    "detail": e.to_string(),
                })))
            }
        };

    let voter_id = voter_id_from_index(voter);
    let server_meter = OpMeter::new();
    let audit_meter = OpMeter::new();
    let offer = match server.audit_offer(&voter_id, &server_meter) {
        Ok(o) => o,
        Err(_) => {
            return Ok(Outcome::reject(json!({
                "command": "audit",
                "voter": voter,
                "reason": "UnknownSession",
            })))
        }
    };
    let mut prover_rng = ChaCha20Rng::seed_from_u64(derive_seed(seed, &format!("audit/server/{voter}")));
    let mut provers = server.audit_provers(&voter_id, &offer, &mut prover_rng).unwrap();
    let mut channel = LocalZkChannel::new(&mut provers, &server_meter);
    let mut audit_rng = ChaCha20Rng::seed_from_u64(derive_seed(seed, &format!("audit/device/{voter}")));
    let outcome =
        ad_audit(&loaded.election, &payload, &offer, &mut channel, &mut audit_rng, &audit_meter);

    let intents = dir.read_intents()?;
    let intent = intents.get(&hex::encode(voter_id)).cloned();
    let matches_intent = match (&outcome.displayed, &intent) {
        (Some(displayed), Some(intent)) => Some(displayed == intent),
        _ => None,
    };

    let report = json!({
        "command": "audit",
        "voter": voter,
        "verdict": match outcome.verdict { Verdict::Accept => "accept", Verdict::Reject => "reject" },
        "reason": outcome.reason.map(|r| r.as_str()),
        "displayed": outcome.displayed,
        "intent": intent,
        "matches_intent": matches_intent,
        "server_exps": server_meter.exps(),
        "audit_device_exps": audit_meter.exps(),
    });
    if outcome.verdict == Verdict::Accept && matches_intent != Some(false) {
        Ok(Outcome::ok(report))
    } else {
        Ok(Outcome::reject(report))
    }
}

pub fn cmd_tally(dir: &Path) -> Result<Outcome> {
    let dir = ElectionDir::new(dir);
    let file = dir.read_election_file()?;
    match GroupArg::parse(&file.group)? {
        GroupArg::Tiny => tally_typed(TinyGroup, &dir, &file),
        GroupArg::Production => tally_typed(RistrettoGroup, &dir, &file),
    }
}

fn tally_typed<G: PrimeGroup>(group: G, dir: &ElectionDir, file: &state::ElectionFile) -> Result<Outcome> {
    let loaded = state::load_election(group.clone(), file)?;
    let board_export = fs::read_to_string(dir.board_path()).unwrap_or_default();
    let server_file: state::ServerFile =
        serde_json::from_str(&fs::read_to_string(dir.server_path())?)?;
    let server = state::load_server(&loaded, &server_file, &board_export)?;

    let meter = OpMeter::new();
    match naive_tally(&group, &loaded.sk, &loaded.election.encoding, &server.board, &meter) {
        Ok(counts) => {
            let table: std::collections::BTreeMap<String, u64> = counts
                .into_iter()
                .map(|(vote, n)| (vote.iter().map(u32::to_string).collect::<Vec<_>>().join(","), n))
                .collect();
            Ok(Outcome::ok(json!({
                "command": "tally",
                "ballots": server.board.len(),
                "counts": table,
            })))
        }
        Err(e) => Ok(Outcome::reject(json!({
            "command": "tally",
            "reason": "UnknownVote",
            "detail": e.to_string(),
        }))),
    }
}

pub fn cmd_verify_board(dir: &Path, board_path: Option<&Path>) -> Result<Outcome> {
    let dir = ElectionDir::new(dir);
    let file = dir.read_election_file()?;
    match GroupArg::parse(&file.group)? {
        GroupArg::Tiny => verify_board_typed(TinyGroup, &dir, &file, board_path),
        GroupArg::Production => verify_board_typed(RistrettoGroup, &dir, &file, board_path),
    }
}

fn verify_board_typed<G: PrimeGroup>(
    group: G,
    dir: &ElectionDir,
    file: &state::ElectionFile,
    board_path: Option<&Path>,
) -> Result<Outcome> {
    let loaded = state::load_election(group.clone(), file)?;
    let Some(vk) = &loaded.election.verification_key else {
        bail!("this election has no signed confirmations, nothing to verify");
    };
    let default_path = dir.board_path();
    let path = board_path.unwrap_or(&default_path);
    let export = fs::read_to_string(path)
        .with_context(|| format!("cannot read board export {}", path.display()))?;
    let meter = OpMeter::new();
    match castaudit_core::board::BulletinBoard::import(
        &group,
        vk,
        &export,
        loaded.election.config.allow_revote,
        &meter,
    ) {
        Ok(board) => Ok(Outcome::ok(json!({
            "command": "verify-board",
            "records": board.len(),
            "head_digest": hex::encode(board.head_digest()),
        }))),
        Err(e) => Ok(Outcome::reject(json!({
            "command": "verify-board",
            "reason": match e {
                castaudit_core::board::BoardError::InvalidSignature => "InvalidSignature",
                castaudit_core::board::BoardError::DuplicateVoter => "DuplicateVoter",
                castaudit_core::board::BoardError::MalformedRecord => "MalformedRecord",
            },
        }))),
    }
}

pub fn cmd_scenario(
    name: &str,
    group: GroupArg,
    seed: u64,
    socket: bool,
    out: Option<&Path>,
) -> Result<Outcome> {
    let group_choice = match group {
        GroupArg::Tiny => GroupChoice::Tiny,
        GroupArg::Production => GroupChoice::Production,
    };
    let Some(spec) = ScenarioSpec::catalog(name, group_choice) else {
        bail!(
            "unknown scenario {name:?}; known: {}",
            ScenarioSpec::catalog_names().join(", ")
        );
    };
    let transport = if socket { TransportKind::Socket } else { TransportKind::InProcess };
    let report = run_scenario(&spec, seed, transport).map_err(|e| anyhow!("scenario failed: {e}"))?;
    let clean = report.all_clean();
    let value = serde_json::to_value(&report)?;
    if let Some(out) = out {
        fs::write(out, report.to_json())?;
    }
    Ok(if clean { Outcome::ok(value) } else { Outcome::reject(value) })
}

pub fn cmd_bench(group: Option<GroupArg>, seed: u64) -> Result<Outcome> {
    // counts are asserted (they are platform-independent claims), timing is
    // informational
    let mut rows = Vec::new();
    for ballot_length in 1..=4usize {
        let (prover, verifier) = audit_exp_counts(TinyGroup, ballot_length, seed)?;
        expect(prover, 6 * ballot_length as u64, "tiny audit prover exps")?;
        expect(verifier, 8 * ballot_length as u64, "tiny audit verifier exps")?;
        rows.push(json!({
            "group": "tiny",
            "ballot_length": ballot_length,
            "audit_prover_exps": prover,
            "audit_verifier_exps": verifier,
        }));
    }

    let dleq = dleq_exp_counts(seed)?;
    expect(dleq.0, 5, "dleq prover exps (fresh key)")?;
    expect(dleq.1, 4, "dleq prover exps (reused key)")?;
    expect(dleq.2, 6, "dleq verifier exps")?;

    let timing_group = group.unwrap_or(GroupArg::Production);
    let mut timings = Vec::new();
    for ballot_length in 1..=4usize {
        let seconds = match timing_group {
            GroupArg::Tiny => timed_audit(TinyGroup, ballot_length, seed)?,
            GroupArg::Production => timed_audit(RistrettoGroup, ballot_length, seed)?,
        };
        timings.push(json!({
            "group": timing_group.as_str(),
            "ballot_length": ballot_length,
            "audit_seconds": seconds,
        }));
    }

    Ok(Outcome::ok(json!({
        "command": "bench",
        "counts": rows,
        "dleq_counts": {
            "prover_fresh_key": dleq.0,
            "prover_reused_key": dleq.1,
            "verifier": dleq.2,
        },
        "ballot_preparation_exps_per_entry": 3,
        "timings": timings,
    })))
}

fn expect(got: u64, want: u64, what: &str) -> Result<()> {
    if got != want {
        bail!("{what}: measured {got}, specified {want}");
    }
    Ok(())
}

fn bench_election<G: PrimeGroup>(
    group: G,
    ballot_length: usize,
    seed: u64,
) -> Result<(Election<G>, VotingServer<G>, VoterIntent, QrPayload<G>)> {
    let meter = OpMeter::new();
    let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(seed, "bench"));
    let keys = elgamal::keygen(&group, &mut rng, &meter);
    let election = Election::new(
        group,
        [9; 16],
        keys.pk,
        None,
        ElectionConfig {
            alphabet_size: 3,
            ballot_length,
            allow_revote: false,
            confirmation_codes: false,
            signed_confirmations: false,
        },
    )
    .map_err(|e| anyhow!("bench config: {e}"))?;
    let mut server = VotingServer::new(election.clone(), None);
    let intent = VoterIntent {
        voter_id: voter_id_from_index(1),
        vote: (0..ballot_length as u32).map(|j| j % 3).collect(),
    };
    let (ballot, submit) = vd_cast(&election, &intent, &mut rng, &meter).unwrap();
    let blind = server.receive_ballot(&submit, &mut rng, &meter).unwrap();
    let payload = vd_finalize(&election, &ballot, &blind, &meter).unwrap();
    Ok((election, server, intent, payload))
}

fn audit_exp_counts<G: PrimeGroup>(group: G, ballot_length: usize, seed: u64) -> Result<(u64, u64)> {
    let (election, server, intent, payload) = bench_election(group, ballot_length, seed)?;
    let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(seed, "bench-audit"));
    let prover_meter = OpMeter::new();
    let verifier_meter = OpMeter::new();
    let offer = server.audit_offer(&intent.voter_id, &prover_meter).unwrap();
    let mut provers = server.audit_provers(&intent.voter_id, &offer, &mut rng).unwrap();
    let mut channel = LocalZkChannel::new(&mut provers, &prover_meter);
    let outcome = ad_audit(&election, &payload, &offer, &mut channel, &mut rng, &verifier_meter);
    if !outcome.accepted() {
        bail!("bench audit rejected: {:?}", outcome.reason);
    }
    Ok((prover_meter.exps(), verifier_meter.exps()))
}

fn timed_audit<G: PrimeGroup>(group: G, ballot_length: usize, seed: u64) -> Result<f64> {
    let (election, server, intent, payload) = bench_election(group, ballot_length, seed)?;
    let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(seed, "bench-timing"));
    let meter = OpMeter::new();
    let reps = 10;
    let start = Instant::now();
    for _ in 0..reps {
        let offer = server.audit_offer(&intent.voter_id, &meter).unwrap();
        let mut provers = server.audit_provers(&intent.voter_id, &offer, &mut rng).unwrap();
        let mut channel = LocalZkChannel::new(&mut provers, &meter);
        let outcome = ad_audit(&election, &payload, &offer, &mut channel, &mut rng, &meter);
        if !outcome.accepted() {
            bail!("bench audit rejected: {:?}", outcome.reason);
        }
    }
    Ok(start.elapsed().as_secs_f64() / f64::from(reps))
}

fn dleq_exp_counts(seed: u64) -> Result<(u64, u64, u64)> {
    let group = TinyGroup;
    let meter = OpMeter::new();
    let x = TinyGroup::scalar(4);
    let h = group.hash_to_element(b"bench", b"h");
    let statement = zk::Statement::dleq(
        group.generator(),
        group.exp(&group.generator(), &x, &meter),
        h.clone(),
        group.exp(&h, &x, &meter),
    );
    let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(seed, "bench-dleq"));

    let fresh = OpMeter::new();
    let verifier_meter = OpMeter::new();
    let mut prover = zk::Prover::new(&group, statement.clone(), x, &mut rng, &fresh);
    let key = prover.commit_key().clone();
    let mut verifier = zk::Verifier::new(&group, statement.clone(), &mut rng);
    let (ok, _) = zk::run(&mut prover, &mut verifier, &fresh, &verifier_meter)
        .map_err(|e| anyhow!("dleq run: {e}"))?;
    if !ok {
        bail!("honest dleq run rejected");
    }

    let reused = OpMeter::new();
    let mut prover =
        zk::Prover::with_commit_key(&group, statement.clone(), TinyGroup::scalar(4), key, &mut rng);
    let mut verifier = zk::Verifier::new(&group, statement, &mut rng);
    let (ok, _) = zk::run(&mut prover, &mut verifier, &reused, &OpMeter::new())
        .map_err(|e| anyhow!("dleq run: {e}"))?;
    if !ok {
        bail!("honest dleq run rejected");
    }
    Ok((fresh.exps(), reused.exps(), verifier_meter.exps()))
}
