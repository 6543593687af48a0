//! Deterministic multi-party scenario runs.
//!
//! A scenario wires scripted voter/device/server/audit actors over a chosen
//! transport, runs every voter through submission, audit, and receipt check,
//! and produces a stable report. Reports depend only on the spec and the
//! seed, never on the transport.

use std::collections::BTreeMap;

use castaudit_core::board::{naive_tally, receipt_check, signing_keygen, ReceiptVerdict};
use castaudit_core::elgamal::keygen;
use castaudit_core::group::{OpMeter, PrimeGroup, RistrettoGroup, TinyGroup};
use castaudit_core::hashing::sha256_parts;
use castaudit_core::protocol::{
    voter_id_from_index, voter_verdict, Election, ElectionConfig, Verdict, VoterIntent,
};
use rand_chacha::ChaCha20Rng;
use rand_core::SeedableRng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::actors::{
    run_audit, run_cast, send_confirmation_code, ActorError, Behavior, ScriptError, Scripts,
};
use crate::endpoint::ServerEndpoint;
use crate::transport::{InProcessTransport, SocketServer, SocketTransport, Transport, TransportError};
use crate::wire::{decode_fault, PhaseTag};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupChoice {
    Tiny,
    Production,
}

impl GroupChoice {
    pub fn as_str(&self) -> &'static str {
        match self {
            GroupChoice::Tiny => "tiny",
            GroupChoice::Production => "production",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransportKind {
    InProcess,
    Socket,
}

#[derive(Clone, Debug)]
pub struct ScenarioSpec {
    pub name: String,
    pub group: GroupChoice,
    pub election: ElectionConfig,
    pub voters: u32,
    pub scripts: Scripts,
}

impl ScenarioSpec {
    pub fn new(name: &str, group: GroupChoice, scripts: Scripts) -> Self {
        Self {
            name: name.to_string(),
            group,
            election: ElectionConfig::default(),
            voters: 3,
            scripts,
        }
    }

    /// The named attack-replay catalog used by the command line.
    pub fn catalog(name: &str, group: GroupChoice) -> Option<Self> {
        let mut scripts = Scripts::honest();
        match name {
            "all_honest" => {}
            "all_honest_confirmation_codes" => {
                let mut spec = Self::new(name, group, scripts);
                spec.election.confirmation_codes = true;
                return Some(spec);
            }
            "vd_flip_vote" => scripts.voting_device = Behavior::FlipVote,
            "vd_substitute_ciphertext" => scripts.voting_device = Behavior::SubstituteCiphertext,
            "vs_substitute_ciphertext" => scripts.voting_server = Behavior::SubstituteCiphertext,
            "vs_bad_proof" => scripts.voting_server = Behavior::BadProof,
            "vs_withhold_record" => scripts.voting_server = Behavior::WithholdRecord,
            "ad_rubber_stamp" => scripts.audit_device = Behavior::BadProof,
            "ad_flip_display" => scripts.audit_device = Behavior::FlipVote,
            "replay_submission" => scripts.voting_device = Behavior::Replay,
            "replay_audit" => scripts.audit_device = Behavior::Replay,
            _ => return None,
        }
        Some(Self::new(name, group, scripts))
    }

    pub fn catalog_names() -> &'static [&'static str] {
        &[
            "all_honest",
            "all_honest_confirmation_codes",
            "vd_flip_vote",
            "vd_substitute_ciphertext",
            "vs_substitute_ciphertext",
            "vs_bad_proof",
            "vs_withhold_record",
            "ad_rubber_stamp",
            "ad_flip_display",
            "replay_submission",
            "replay_audit",
        ]
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid scripts: {0}")]
    Scripts(#[from] ScriptError),
    #[error("invalid election config: {0}")]
    Config(#[from] castaudit_core::protocol::ConfigError),
    #[error("transport failure: {0}")]
    Transport(#[from] TransportError),
    #[error("actor failure: {0}")]
    Actor(#[from] ActorError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoterReport {
    pub voter: u32,
    pub intent: Vec<u32>,
    pub audit_verdict: String,
    pub audit_reason: Option<String>,
    pub displayed: Option<Vec<u32>>,
    pub voter_accepts: bool,
    pub receipt: Option<String>,
    pub confirmations_match: Option<bool>,
    pub zk_conversation_hex: String,
    pub device_exps: u64,
    pub audit_device_exps: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoardReport {
    pub records: usize,
    pub head_digest_hex: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub group: String,
    pub seed: u64,
    pub alphabet_size: u32,
    pub ballot_length: usize,
    pub scripts: ScriptsReport,
    pub voters: Vec<VoterReport>,
    pub board: BoardReport,
    pub tally: Option<BTreeMap<String, u64>>,
    pub faults: Vec<String>,
    pub server_submission_exps: u64,
    pub server_audit_exps: u64,
    pub confirmation_codes: Option<Vec<bool>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptsReport {
    pub voting_device: String,
    pub voting_server: String,
    pub audit_device: String,
}

impl ScenarioReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// True when every voter accepted and nothing misbehaved.
    pub fn all_clean(&self) -> bool {
        self.faults.is_empty()
            && self.voters.iter().all(|v| {
                v.voter_accepts && v.receipt.as_deref().is_none_or(|r| r == "accept")
            })
    }
}

/// Stable sub-seed derivation.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    let digest = sha256_parts(&[b"castaudit/seed", &seed.to_be_bytes(), label.as_bytes()]);
    u64::from_be_bytes(digest[..8].try_into().unwrap())
}

pub fn run_scenario(
    spec: &ScenarioSpec,
    seed: u64,
    transport: TransportKind,
) -> Result<ScenarioReport, ScenarioError> {
    spec.scripts.validate()?;
    match spec.group {
        GroupChoice::Tiny => run_typed(TinyGroup, spec, seed, transport),
        GroupChoice::Production => run_typed(RistrettoGroup, spec, seed, transport),
    }
}

fn run_typed<G: PrimeGroup>(
    group: G,
    spec: &ScenarioSpec,
    seed: u64,
    transport: TransportKind,
) -> Result<ScenarioReport, ScenarioError> {
    let meter = OpMeter::new();
    let mut setup_rng = ChaCha20Rng::seed_from_u64(derive_seed(seed, "setup"));
    let keys = keygen(&group, &mut setup_rng, &meter);
    let signing = spec
        .election
        .signed_confirmations
        .then(|| signing_keygen(&group, &mut setup_rng, &meter));
    let election_id: [u8; 16] =
        sha256_parts(&[b"castaudit/election", &seed.to_be_bytes()])[..16].try_into().unwrap();
    let election = Election::new(
        group.clone(),
        election_id,
        keys.pk.clone(),
        signing.as_ref().map(|s| s.vk.clone()),
        spec.election.clone(),
    )?;
    let server = castaudit_core::protocol::VotingServer::new(election.clone(), signing);
    let endpoint =
        ServerEndpoint::new(server, spec.scripts.voting_server, derive_seed(seed, "server"));

    let (outcomes, endpoint) = match transport {
        TransportKind::InProcess => {
            let mut t = InProcessTransport::new(endpoint);
            let outcomes = drive_voters(&election, spec, seed, &mut t)?;
            (outcomes, t.into_endpoint())
        }
        TransportKind::Socket => {
            let server = SocketServer::spawn(endpoint)?;
            let mut t = SocketTransport::connect(server.addr)?;
            let outcomes = drive_voters(&election, spec, seed, &mut t)?;
            drop(t);
            (outcomes, server.join()?)
        }
    };

    finish_report(spec, seed, &keys.sk, &election, endpoint, outcomes)
}

struct VoterOutcome<G: PrimeGroup> {
    intent: VoterIntent,
    claimed: Vec<castaudit_core::elgamal::Ciphertext<G>>,
    confirmation: Option<castaudit_core::board::Confirmation<G>>,
    audit_confirmation: Option<castaudit_core::board::Confirmation<G>>,
    outcome: castaudit_core::protocol::AuditOutcome,
    accepts: bool,
    conversation: Vec<u8>,
    device_exps: u64,
    audit_device_exps: u64,
    faults: Vec<String>,
}

fn drive_voters<G: PrimeGroup, T: Transport>(
    election: &Election<G>,
    spec: &ScenarioSpec,
    seed: u64,
    transport: &mut T,
) -> Result<Vec<VoterOutcome<G>>, ScenarioError> {
    let mut outcomes = Vec::with_capacity(spec.voters as usize);
    for index in 0..spec.voters {
        let intent = VoterIntent {
            voter_id: voter_id_from_index(u64::from(index)),
            vote: (0..election.config.ballot_length)
                .map(|j| (index + j as u32) % election.config.alphabet_size)
                .collect(),
        };
        let mut device_rng =
            ChaCha20Rng::seed_from_u64(derive_seed(seed, &format!("device/{index}")));
        let mut audit_rng =
            ChaCha20Rng::seed_from_u64(derive_seed(seed, &format!("audit/{index}")));
        let device_meter = OpMeter::new();
        let audit_meter = OpMeter::new();
        let mut faults = Vec::new();

        let cast = run_cast(
            election,
            &intent,
            spec.scripts.voting_device,
            transport,
            &mut device_rng,
            &device_meter,
        )?;

        // replay of the recorded submission into the same server
        if spec.scripts.voting_device == Behavior::Replay {
            transport
                .send(cast.submit_frame.clone())
                .map_err(|e| ActorError::Transport(e.to_string()))?;
            let reply = transport.recv().map_err(|e| ActorError::Transport(e.to_string()))?;
            if reply.phase == PhaseTag::Fault {
                if let Ok(code) = decode_fault(&reply.payload) {
                    faults.push(code.as_str().to_string());
                }
            } else {
                faults.push("replayed submission accepted".to_string());
            }
        }

        let adversary_display = Some(intent.vote.clone());
        let audit = run_audit(
            election,
            &cast.payload,
            spec.scripts.audit_device,
            adversary_display,
            transport,
            &mut audit_rng,
            &audit_meter,
        )?;

        // replay of the recorded audit request into a fresh server
        if spec.scripts.audit_device == Behavior::Replay {
            faults.push(replay_audit_into_fresh_server(election, spec, seed, &audit.request_frame));
        }

        let accepts = voter_verdict(&intent, &audit.outcome);
        if election.config.confirmation_codes {
            if let Some(token) = audit.token {
                send_confirmation_code(transport, token, accepts)?;
            }
        }

        outcomes.push(VoterOutcome {
            intent,
            claimed: cast.claimed,
            confirmation: cast.confirmation,
            audit_confirmation: audit.offer.and_then(|o| o.confirmation),
            outcome: audit.outcome,
            accepts,
            conversation: audit.conversation,
            device_exps: device_meter.exps(),
            audit_device_exps: audit_meter.exps(),
            faults,
        });
    }
    Ok(outcomes)
}

/// Spins up a brand-new server for the same election and replays a recorded
/// audit request at it.
fn replay_audit_into_fresh_server<G: PrimeGroup>(
    election: &Election<G>,
    spec: &ScenarioSpec,
    seed: u64,
    frame: &crate::wire::WireMessage,
) -> String {
    let signing = election.verification_key.is_some().then(|| {
        let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(seed, "fresh-server-signing"));
        signing_keygen(&election.group, &mut rng, &OpMeter::new())
    });
    // the fresh server needs its own verification key to be self-consistent
    let mut fresh_election = election.clone();
    fresh_election.verification_key = signing.as_ref().map(|s| s.vk.clone());
    let server = castaudit_core::protocol::VotingServer::new(fresh_election, signing);
    let mut endpoint =
        ServerEndpoint::new(server, spec.scripts.voting_server, derive_seed(seed, "fresh-server"));
    let reply = endpoint.handle(frame);
    if reply.phase == PhaseTag::Fault {
        decode_fault(&reply.payload)
            .map(|c| c.as_str().to_string())
            .unwrap_or_else(|_| "bad fault".to_string())
    } else {
        "replayed audit accepted".to_string()
    }
}

fn finish_report<G: PrimeGroup>(
    spec: &ScenarioSpec,
    seed: u64,
    sk: &G::Scalar,
    election: &Election<G>,
    endpoint: ServerEndpoint<G>,
    outcomes: Vec<VoterOutcome<G>>,
) -> Result<ScenarioReport, ScenarioError> {
    let group = &election.group;
    let meter = OpMeter::new();
    let mut voters = Vec::with_capacity(outcomes.len());
    let mut faults = Vec::new();
    let mut confirmation_codes = Vec::new();

    for (index, v) in outcomes.into_iter().enumerate() {
        let receipt = match (&election.verification_key, &v.confirmation) {
            (Some(vk), Some(confirmation)) => Some(
                match receipt_check(group, vk, &endpoint.server.board, confirmation, &v.claimed, &meter)
                {
                    ReceiptVerdict::Accept => "accept",
                    ReceiptVerdict::Reject => "reject",
                    ReceiptVerdict::ServerMisbehaviorEvidence => "server-misbehavior-evidence",
                }
                .to_string(),
            ),
            _ => None,
        };
        let confirmations_match = match (&v.confirmation, &v.audit_confirmation) {
            (Some(a), Some(b)) => Some(a == b),
            _ => None,
        };
        if election.config.confirmation_codes {
            if let Some(session) = endpoint.server.session(&v.intent.voter_id) {
                if let Some(code) = session.confirmation_code {
                    confirmation_codes.push(code);
                }
            }
        }
        faults.extend(v.faults.clone());
        voters.push(VoterReport {
            voter: index as u32,
            intent: v.intent.vote.clone(),
            audit_verdict: match v.outcome.verdict {
                Verdict::Accept => "accept".to_string(),
                Verdict::Reject => "reject".to_string(),
            },
            audit_reason: v.outcome.reason.map(|r| r.as_str().to_string()),
            displayed: v.outcome.displayed.clone(),
            voter_accepts: v.accepts,
            receipt,
            confirmations_match,
            zk_conversation_hex: hex::encode(&v.conversation),
            device_exps: v.device_exps,
            audit_device_exps: v.audit_device_exps,
        });
    }

    let tally = if election.config.signed_confirmations {
        let counts = naive_tally(group, sk, &election.encoding, &endpoint.server.board, &meter)
            .map_err(|e| ActorError::Protocol(e.to_string()))?;
        Some(
            counts
                .into_iter()
                .map(|(vote, n)| {
                    (vote.iter().map(u32::to_string).collect::<Vec<_>>().join(","), n)
                })
                .collect(),
        )
    } else {
        None
    };

    Ok(ScenarioReport {
        scenario: spec.name.clone(),
        group: spec.group.as_str().to_string(),
        seed,
        alphabet_size: election.config.alphabet_size,
        ballot_length: election.config.ballot_length,
        scripts: ScriptsReport {
            voting_device: spec.scripts.voting_device.as_str().to_string(),
            voting_server: spec.scripts.voting_server.as_str().to_string(),
            audit_device: spec.scripts.audit_device.as_str().to_string(),
        },
        voters,
        board: BoardReport {
            records: endpoint.server.board.len(),
            head_digest_hex: hex::encode(endpoint.server.board.head_digest()),
        },
        tally,
        faults,
        server_submission_exps: endpoint.submission_meter.exps(),
        server_audit_exps: endpoint.audit_meter.exps(),
        confirmation_codes: election.config.confirmation_codes.then_some(confirmation_codes),
    })
}
