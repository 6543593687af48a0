//! Scripted protocol actors.
//!
//! Behaviors cover the corruption models the analysis cares about: a voting
//! device that encrypts a different vote (consistently, or while lying about
//! what it sent), a server that substitutes ciphertexts, corrupts proofs, or
//! withholds board records, an audit device that rubber-stamps or flips its
//! display, and replay of recorded frames.

use castaudit_core::board::Confirmation;
use castaudit_core::elgamal::Ciphertext;
use castaudit_core::encoding::VoteIdx;
use castaudit_core::group::{OpMeter, PrimeGroup};
use castaudit_core::protocol::{
    ad_audit, sim::server_view_audit, vd_cast, vd_finalize, AuditOffer, AuditOutcome, ChannelError,
    Election, QrPayload, SessionToken, Verdict, VoterIntent, ZkChannel,
};
use castaudit_core::zk;
use rand_core::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::transport::Transport;
use crate::wire::{
    decode_blind, decode_fault, decode_offer, encode_audit_request, encode_submit, FaultCode,
    PhaseTag, RoleTag, WireMessage,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Behavior {
    Honest,
    FlipVote,
    SubstituteCiphertext,
    BadProof,
    WithholdRecord,
    Replay,
}

impl Behavior {
    pub fn as_str(&self) -> &'static str {
        match self {
            Behavior::Honest => "honest",
            Behavior::FlipVote => "flip-vote",
            Behavior::SubstituteCiphertext => "substitute-ciphertext",
            Behavior::BadProof => "bad-proof",
            Behavior::WithholdRecord => "withhold-record",
            Behavior::Replay => "replay",
        }
    }
}

/// One behavior per role.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scripts {
    pub voting_device: Behavior,
    pub voting_server: Behavior,
    pub audit_device: Behavior,
}

impl Scripts {
    pub fn honest() -> Self {
        Self {
            voting_device: Behavior::Honest,
            voting_server: Behavior::Honest,
            audit_device: Behavior::Honest,
        }
    }

    /// Rejects combinations no adversary model gives meaning to.
    pub fn validate(&self) -> Result<(), ScriptError> {
        match self.voting_device {
            Behavior::Honest | Behavior::FlipVote | Behavior::SubstituteCiphertext | Behavior::Replay => {}
            other => return Err(ScriptError::InvalidForRole { role: "voting-device", behavior: other }),
        }
        match self.voting_server {
            Behavior::Honest
            | Behavior::SubstituteCiphertext
            | Behavior::BadProof
            | Behavior::WithholdRecord => {}
            other => return Err(ScriptError::InvalidForRole { role: "voting-server", behavior: other }),
        }
        match self.audit_device {
            Behavior::Honest | Behavior::FlipVote | Behavior::BadProof | Behavior::Replay => {}
            other => return Err(ScriptError::InvalidForRole { role: "audit-device", behavior: other }),
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScriptError {
    #[error("behavior {behavior:?} is not defined for role {role}")]
    InvalidForRole { role: &'static str, behavior: Behavior },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ActorError {
    #[error("server fault: {}", .0.as_str())]
    Fault(FaultCode),
    #[error("transport failed: {0}")]
    Transport(String),
    #[error("unexpected frame: {0}")]
    UnexpectedFrame(&'static str),
    #[error("protocol step failed: {0}")]
    Protocol(String),
}

fn flip(vote: &[VoteIdx], alphabet: u32) -> Vec<VoteIdx> {
    vote.iter().map(|v| (v + 1) % alphabet).collect()
}

/// Everything the voter walks away from submission with, plus recorded
/// frames for replay tests.
pub struct CastResult<G: PrimeGroup> {
    pub intent: VoterIntent,
    /// The ballot the device showed the voter (claims to have cast).
    pub claimed: Vec<Ciphertext<G>>,
    /// The ballot actually submitted.
    pub submitted: Vec<Ciphertext<G>>,
    pub payload: QrPayload<G>,
    pub confirmation: Option<Confirmation<G>>,
    pub token: SessionToken,
    pub submit_frame: WireMessage,
}

/// Drives voter + voting device through submission.
pub fn run_cast<G: PrimeGroup, T: Transport>(
    election: &Election<G>,
    intent: &VoterIntent,
    behavior: Behavior,
    transport: &mut T,
    rng: &mut dyn RngCore,
    meter: &OpMeter,
) -> Result<CastResult<G>, ActorError> {
    let group = &election.group;
    let cast_intent = match behavior {
        Behavior::FlipVote | Behavior::SubstituteCiphertext => VoterIntent {
            voter_id: intent.voter_id,
            vote: flip(&intent.vote, election.config.alphabet_size),
        },
        _ => intent.clone(),
    };

    // for the lying device, the ballot shown to the voter is an honest one
    // that never reaches the server
    let claimed_ballot = if behavior == Behavior::SubstituteCiphertext {
        Some(vd_cast(election, intent, rng, meter).map_err(|e| ActorError::Protocol(e.to_string()))?.0)
    } else {
        None
    };

    let (ballot, submit) =
        vd_cast(election, &cast_intent, rng, meter).map_err(|e| ActorError::Protocol(e.to_string()))?;
    let submit_frame = WireMessage::new(
        [0; 16],
        RoleTag::VotingDevice,
        PhaseTag::Submit,
        encode_submit(group, &submit),
    );
    transport.send(submit_frame.clone()).map_err(|e| ActorError::Transport(e.to_string()))?;
    let reply = transport.recv().map_err(|e| ActorError::Transport(e.to_string()))?;
    let blind = match reply.phase {
        PhaseTag::Blind => decode_blind(group, election.config.ballot_length, reply.token, &reply.payload)
            .map_err(|_| ActorError::UnexpectedFrame("undecodable blind message"))?,
        PhaseTag::Fault => {
            return Err(ActorError::Fault(
                decode_fault(&reply.payload).map_err(|_| ActorError::UnexpectedFrame("bad fault"))?,
            ))
        }
        _ => return Err(ActorError::UnexpectedFrame("expected blind message")),
    };

    let (shown, payload) = match claimed_ballot {
        Some(honest) => {
            // bypasses the confirmation check: the signature covers the
            // substituted ballot, and this device is not honest enough to care
            let blinded = honest
                .randomness
                .iter()
                .zip(&blind.blinding)
                .map(|(r, x)| group.scalar_add(x, r))
                .collect();
            let payload = QrPayload {
                election_id: election.election_id,
                voter_id: intent.voter_id,
                blinded_randomness: blinded,
                ballot_digest: castaudit_core::board::ballot_digest(group, &honest.ciphertexts),
            };
            (honest.ciphertexts, payload)
        }
        None => {
            let payload = vd_finalize(election, &ballot, &blind, meter)
                .map_err(|e| ActorError::Protocol(e.to_string()))?;
            (ballot.ciphertexts.clone(), payload)
        }
    };

    Ok(CastResult {
        intent: intent.clone(),
        claimed: shown,
        submitted: submit.ciphertexts,
        payload,
        confirmation: blind.confirmation,
        token: blind.token,
        submit_frame,
    })
}

/// Zk channel over a transport, recording the conversation bytes.
///
/// The exchange is strictly request/response: every send reads the reply
/// frame immediately, and when the device expects a prover message with no
/// reply pending it requests one with an empty zk frame.
pub struct TransportZkChannel<'a, G: PrimeGroup, T: Transport> {
    group: G,
    token: SessionToken,
    transport: &'a mut T,
    pending: Option<WireMessage>,
    pub conversation: Vec<u8>,
    pub fault: Option<FaultCode>,
}

impl<'a, G: PrimeGroup, T: Transport> TransportZkChannel<'a, G, T> {
    pub fn new(group: G, token: SessionToken, transport: &'a mut T) -> Self {
        Self { group, token, transport, pending: None, conversation: Vec::new(), fault: None }
    }

    fn interpret(&mut self, frame: WireMessage) -> Result<zk::Message<G>, ChannelError> {
        match frame.phase {
            PhaseTag::Zk => {
                let msg =
                    zk::Message::decode(&self.group, &frame.payload).map_err(|_| ChannelError::Closed)?;
                self.conversation.extend_from_slice(&frame.payload);
                Ok(msg)
            }
            PhaseTag::Fault => {
                self.fault = decode_fault(&frame.payload).ok();
                Err(ChannelError::Closed)
            }
            _ => Err(ChannelError::Closed),
        }
    }
}

impl<G: PrimeGroup, T: Transport> ZkChannel<G> for TransportZkChannel<'_, G, T> {
    fn recv(&mut self) -> Result<zk::Message<G>, ChannelError> {
        let frame = match self.pending.take() {
            Some(frame) => frame,
            None => {
                self.transport
                    .send(WireMessage::new(self.token, RoleTag::AuditDevice, PhaseTag::Zk, vec![]))
                    .map_err(|_| ChannelError::Closed)?;
                self.transport.recv().map_err(|_| ChannelError::Closed)?
            }
        };
        self.interpret(frame)
    }

    fn send(&mut self, msg: zk::Message<G>) -> Result<(), ChannelError> {
        let payload = msg.encode(&self.group);
        self.conversation.extend_from_slice(&payload);
        self.transport
            .send(WireMessage::new(self.token, RoleTag::AuditDevice, PhaseTag::Zk, payload))
            .map_err(|_| ChannelError::Closed)?;
        self.pending = Some(self.transport.recv().map_err(|_| ChannelError::Closed)?);
        Ok(())
    }
}

pub struct AuditRunResult<G: PrimeGroup> {
    pub outcome: AuditOutcome,
    pub offer: Option<AuditOffer<G>>,
    /// Concatenated proof messages, both directions, in order.
    pub conversation: Vec<u8>,
    pub fault: Option<FaultCode>,
    pub request_frame: WireMessage,
    /// Audit conversation token, for the confirmation code.
    pub token: Option<SessionToken>,
}

/// Drives the audit device through one audit.
///
/// `adversary_display` is what a corrupted device shows the voter: the
/// rubber-stamp device fabricates an accepting outcome with it, and the
/// flip-display device replaces an honest display with a shifted one.
pub fn run_audit<G: PrimeGroup, T: Transport>(
    election: &Election<G>,
    payload: &QrPayload<G>,
    behavior: Behavior,
    adversary_display: Option<Vec<VoteIdx>>,
    transport: &mut T,
    rng: &mut dyn RngCore,
    meter: &OpMeter,
) -> Result<AuditRunResult<G>, ActorError> {
    let group = election.group.clone();
    let request_frame = WireMessage::new(
        [0; 16],
        RoleTag::AuditDevice,
        PhaseTag::AuditRequest,
        encode_audit_request(election.election_id, payload.voter_id),
    );

    if behavior == Behavior::BadProof {
        // rubber stamp: no audit at all, just the display the adversary wants
        let displayed = adversary_display.expect("rubber-stamp device needs a display target");
        return Ok(AuditRunResult {
            outcome: AuditOutcome {
                verdict: Verdict::Accept,
                displayed: Some(displayed),
                reason: None,
                cost: Default::default(),
            },
            offer: None,
            conversation: Vec::new(),
            fault: None,
            request_frame,
            token: None,
        });
    }

    transport.send(request_frame.clone()).map_err(|e| ActorError::Transport(e.to_string()))?;
    let reply = transport.recv().map_err(|e| ActorError::Transport(e.to_string()))?;
    let (token, offer) = match reply.phase {
        PhaseTag::AuditOffer => (
            reply.token,
            decode_offer(&group, election.config.ballot_length, &reply.payload)
                .map_err(|_| ActorError::UnexpectedFrame("undecodable audit offer"))?,
        ),
        PhaseTag::Fault => {
            return Err(ActorError::Fault(
                decode_fault(&reply.payload).map_err(|_| ActorError::UnexpectedFrame("bad fault"))?,
            ))
        }
        _ => return Err(ActorError::UnexpectedFrame("expected audit offer")),
    };

    let mut channel = TransportZkChannel::new(group.clone(), token, transport);
    let mut outcome = ad_audit(election, payload, &offer, &mut channel, rng, meter);
    let conversation = std::mem::take(&mut channel.conversation);
    let fault = channel.fault;

    if behavior == Behavior::FlipVote {
        if let Some(displayed) = outcome.displayed.take() {
            outcome.displayed = Some(flip(&displayed, election.config.alphabet_size));
        }
    }

    Ok(AuditRunResult {
        outcome,
        offer: Some(offer),
        conversation,
        fault,
        request_frame,
        token: Some(token),
    })
}

/// Runs the public-values-only stand-in for the audit device over the wire.
/// Takes no vote, no randomness, no payload.
pub fn run_server_view<G: PrimeGroup, T: Transport>(
    election: &Election<G>,
    voter_id: [u8; 16],
    transport: &mut T,
    rng: &mut dyn RngCore,
    meter: &OpMeter,
) -> Result<Vec<bool>, ActorError> {
    let group = election.group.clone();
    let request = WireMessage::new(
        [0; 16],
        RoleTag::AuditDevice,
        PhaseTag::AuditRequest,
        encode_audit_request(election.election_id, voter_id),
    );
    transport.send(request).map_err(|e| ActorError::Transport(e.to_string()))?;
    let reply = transport.recv().map_err(|e| ActorError::Transport(e.to_string()))?;
    let (token, offer) = match reply.phase {
        PhaseTag::AuditOffer => (
            reply.token,
            decode_offer(&group, election.config.ballot_length, &reply.payload)
                .map_err(|_| ActorError::UnexpectedFrame("undecodable audit offer"))?,
        ),
        PhaseTag::Fault => {
            return Err(ActorError::Fault(
                decode_fault(&reply.payload).map_err(|_| ActorError::UnexpectedFrame("bad fault"))?,
            ))
        }
        _ => return Err(ActorError::UnexpectedFrame("expected audit offer")),
    };
    let mut channel = TransportZkChannel::new(group.clone(), token, transport);
    server_view_audit(&group, &election.pk, &offer, &mut channel, rng, meter)
        .map_err(|e| ActorError::Protocol(e.to_string()))
}

/// Reports the voter's verdict to the server (confirmation-code mode).
pub fn send_confirmation_code<T: Transport>(
    transport: &mut T,
    token: SessionToken,
    accepted: bool,
) -> Result<(), ActorError> {
    transport
        .send(WireMessage::new(token, RoleTag::AuditDevice, PhaseTag::Confirm, vec![u8::from(accepted)]))
        .map_err(|e| ActorError::Transport(e.to_string()))?;
    let reply = transport.recv().map_err(|e| ActorError::Transport(e.to_string()))?;
    match reply.phase {
        PhaseTag::Confirm => Ok(()),
        PhaseTag::Fault => Err(ActorError::Fault(
            decode_fault(&reply.payload).map_err(|_| ActorError::UnexpectedFrame("bad fault"))?,
        )),
        _ => Err(ActorError::UnexpectedFrame("expected confirm ack")),
    }
}
