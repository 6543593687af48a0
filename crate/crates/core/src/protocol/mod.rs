//! The four-role ballot audit protocol.
//!
//! Submission: the voter enters a vote into the voting device, which encrypts
//! it and sends the ciphertext to the server; the server replies with a
//! blinding factor (and, with the bulletin-board extension, a signed cast
//! confirmation); the device hands the voter the blinded randomness as a QR
//! payload.
//!
//! Audit: a second device scans the payload, fetches the ballot and its
//! re-randomization from the server, verifies the interactive proof that the
//! two encrypt the same plaintext, opens the re-randomized ciphertext with
//! the blinded randomness, and shows the voter the vote it contains. The
//! voter accepts iff the displayed vote is the intended one.
//!
//! The blinding factor keeps the voter's material worthless as a receipt:
//! everything the audit device sees can be simulated for any claimed vote
//! (see [`sim`]), and the server learns nothing beyond the ciphertext it
//! already had.

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::collections::VecDeque;

use rand_core::RngCore;
use thiserror::Error;

use crate::board::{
    ballot_digest, sign_confirmation, verify_confirmation, BallotRecord, BoardError, BulletinBoard,
    Confirmation, SigningKeyPair,
};
use crate::elgamal::{encrypt, rerandomize, special_decrypt, Ciphertext};
use crate::encoding::{VoteEncoding, VoteIdx};
use crate::group::{OpMeter, PrimeGroup};
use crate::zk;

mod payload;
pub mod sim;

pub use payload::{PayloadError, QrPayload, QR_VERSION};

pub type VoterId = [u8; 16];
pub type ElectionId = [u8; 16];
pub type SessionToken = [u8; 16];

pub fn voter_id_from_index(index: u64) -> VoterId {
    let mut id = [0u8; 16];
    id[8..].copy_from_slice(&index.to_be_bytes());
    id
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ElectionConfig {
    pub alphabet_size: u32,
    pub ballot_length: usize,
    /// Whether a voter may replace an already-submitted ballot.
    pub allow_revote: bool,
    /// Whether the voter reports the audit verdict back to the server.
    pub confirmation_codes: bool,
    /// Whether the server signs cast confirmations and publishes ballots on
    /// the bulletin board.
    pub signed_confirmations: bool,
}

impl Default for ElectionConfig {
    fn default() -> Self {
        Self {
            alphabet_size: 3,
            ballot_length: 1,
            allow_revote: false,
            confirmation_codes: false,
            signed_confirmations: true,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("alphabet must have at least 2 values")]
    AlphabetTooSmall,
    #[error("alphabet does not fit into the group's vote encoding")]
    AlphabetTooLarge,
    #[error("ballot length must be at least 1")]
    BallotTooShort,
}

impl ElectionConfig {
    pub fn validate<G: PrimeGroup>(&self, group: &G) -> Result<(), ConfigError> {
        if self.alphabet_size < 2 {
            return Err(ConfigError::AlphabetTooSmall);
        }
        if self.ballot_length < 1 {
            return Err(ConfigError::BallotTooShort);
        }
        // the encoding uses exponents 1..=alphabet_size, which must stay
        // below the group order
        let order = &group.params().order_be;
        if order.len() == 1 && u64::from(self.alphabet_size) >= u64::from(order[0]) {
            return Err(ConfigError::AlphabetTooLarge);
        }
        Ok(())
    }
}

/// Public election parameters shared by every role.
#[derive(Clone, Debug)]
pub struct Election<G: PrimeGroup> {
    pub group: G,
    pub election_id: ElectionId,
    pub pk: G::Element,
    pub encoding: VoteEncoding<G>,
    pub config: ElectionConfig,
    /// Server's signature verification key; present iff
    /// `config.signed_confirmations`.
    pub verification_key: Option<G::Element>,
}

impl<G: PrimeGroup> Election<G> {
    pub fn new(
        group: G,
        election_id: ElectionId,
        pk: G::Element,
        verification_key: Option<G::Element>,
        config: ElectionConfig,
    ) -> Result<Self, ConfigError> {
        config.validate(&group)?;
        let encoding = VoteEncoding::new(&group, config.alphabet_size);
        Ok(Self { group, election_id, pk, encoding, config, verification_key })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VoterIntent {
    pub voter_id: VoterId,
    pub vote: Vec<VoteIdx>,
}

/// Voting-device state for one ballot.
#[derive(Clone, Debug)]
pub struct DeviceBallot<G: PrimeGroup> {
    pub voter_id: VoterId,
    pub vote: Vec<VoteIdx>,
    pub randomness: Vec<G::Scalar>,
    pub ciphertexts: Vec<Ciphertext<G>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubmitMessage<G: PrimeGroup> {
    pub voter_id: VoterId,
    pub ciphertexts: Vec<Ciphertext<G>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlindMessage<G: PrimeGroup> {
    pub token: SessionToken,
    pub blinding: Vec<G::Scalar>,
    pub confirmation: Option<Confirmation<G>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuditOffer<G: PrimeGroup> {
    pub ciphertexts: Vec<Ciphertext<G>>,
    pub rerandomized: Vec<Ciphertext<G>>,
    pub confirmation: Option<Confirmation<G>>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CastError {
    #[error("ballot has {got} entries, election expects {expected}")]
    WrongBallotLength { expected: usize, got: usize },
    #[error("vote {0} outside the alphabet")]
    VoteOutOfRange(VoteIdx),
    #[error("server confirmation missing or invalid")]
    BadConfirmation,
    #[error("blinding factor count does not match the ballot")]
    MalformedBlinding,
}

/// Ballot preparation on the voting device: encrypt each ballot entry under
/// fresh randomness. Three exponentiations per entry, the usual cost of
/// ElGamal ballot preparation.
pub fn vd_cast<G: PrimeGroup, R: RngCore + ?Sized>(
    election: &Election<G>,
    intent: &VoterIntent,
    rng: &mut R,
    meter: &OpMeter,
) -> Result<(DeviceBallot<G>, SubmitMessage<G>), CastError> {
    let expected = election.config.ballot_length;
    if intent.vote.len() != expected {
        return Err(CastError::WrongBallotLength { expected, got: intent.vote.len() });
    }
    let group = &election.group;
    let mut randomness = Vec::with_capacity(expected);
    let mut ciphertexts = Vec::with_capacity(expected);
    for &v in &intent.vote {
        let r = group.random_scalar(rng);
        let m = election
            .encoding
            .encode(group, v, meter)
            .map_err(|_| CastError::VoteOutOfRange(v))?;
        ciphertexts.push(encrypt(group, &election.pk, &m, &r, meter));
        randomness.push(r);
    }
    let ballot = DeviceBallot {
        voter_id: intent.voter_id,
        vote: intent.vote.clone(),
        randomness,
        ciphertexts: ciphertexts.clone(),
    };
    Ok((ballot, SubmitMessage { voter_id: intent.voter_id, ciphertexts }))
}

/// Blinds the ballot randomness with the server-chosen factors and packages
/// the QR payload. With signed confirmations enabled, the device checks the
/// server's signature before handing anything to the voter.
pub fn vd_finalize<G: PrimeGroup>(
    election: &Election<G>,
    ballot: &DeviceBallot<G>,
    blind: &BlindMessage<G>,
    meter: &OpMeter,
) -> Result<QrPayload<G>, CastError> {
    if blind.blinding.len() != ballot.randomness.len() {
        return Err(CastError::MalformedBlinding);
    }
    if election.config.signed_confirmations {
        let vk = election.verification_key.as_ref().ok_or(CastError::BadConfirmation)?;
        let confirmation = blind.confirmation.as_ref().ok_or(CastError::BadConfirmation)?;
        if confirmation.voter_id != ballot.voter_id
            || !verify_confirmation(&election.group, vk, confirmation, &ballot.ciphertexts, meter)
        {
            return Err(CastError::BadConfirmation);
        }
    }
    let group = &election.group;
    let blinded_randomness = ballot
        .randomness
        .iter()
        .zip(&blind.blinding)
        .map(|(r, x)| group.scalar_add(x, r))
        .collect();
    Ok(QrPayload {
        election_id: election.election_id,
        voter_id: ballot.voter_id,
        blinded_randomness,
        ballot_digest: ballot_digest(group, &ballot.ciphertexts),
    })
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SubmitError {
    #[error("voter already has an active ballot")]
    DuplicateBallot,
    #[error("ballot has {got} entries, election expects {expected}")]
    WrongBallotLength { expected: usize, got: usize },
    #[error("board rejected the record: {0}")]
    Board(#[from] BoardError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AuditServeError {
    #[error("no active session for this voter")]
    UnknownSession,
}

/// Per-voter server state binding the ballot, the blinding factors, and the
/// proof commitment key across submission and audit.
#[derive(Clone, Debug)]
pub struct AuditSession<G: PrimeGroup> {
    pub voter_id: VoterId,
    pub token: SessionToken,
    pub ciphertexts: Vec<Ciphertext<G>>,
    /// Server-side blinding factors; never sent to the audit device.
    pub blinding: Vec<G::Scalar>,
    /// Commitment key for the session's proofs, generated at submission and
    /// reused across them.
    pub commit_key: G::Element,
    pub confirmation: Option<Confirmation<G>>,
    /// Voter-reported audit verdict, when confirmation codes are enabled.
    pub confirmation_code: Option<bool>,
}

#[derive(Debug)]
pub struct VotingServer<G: PrimeGroup> {
    pub election: Election<G>,
    signing: Option<SigningKeyPair<G>>,
    sessions: HashMap<VoterId, AuditSession<G>>,
    pub board: BulletinBoard<G>,
}

impl<G: PrimeGroup> VotingServer<G> {
    pub fn new(election: Election<G>, signing: Option<SigningKeyPair<G>>) -> Self {
        assert_eq!(
            election.config.signed_confirmations,
            signing.is_some(),
            "signing key must be present exactly when signed confirmations are enabled",
        );
        let allow_revote = election.config.allow_revote;
        Self { election, signing, sessions: HashMap::new(), board: BulletinBoard::new(allow_revote) }
    }

    pub fn signing_keys(&self) -> Option<&SigningKeyPair<G>> {
        self.signing.as_ref()
    }

    pub fn session(&self, voter_id: &VoterId) -> Option<&AuditSession<G>> {
        self.sessions.get(voter_id)
    }

    pub fn sessions(&self) -> impl Iterator<Item = &AuditSession<G>> {
        self.sessions.values()
    }

    /// Restores a previously persisted session (state reload, not protocol).
    pub fn restore_session(&mut self, session: AuditSession<G>) {
        self.sessions.insert(session.voter_id, session);
    }

    /// Ballot submission: store the ballot, draw the blinding factors and the
    /// session's proof commitment key, and (with the board extension) sign
    /// and publish the cast confirmation.
    ///
    /// Draw order: session token, one blinding factor per entry, commitment
    /// key exponent, then the signature nonce if signing.
    pub fn receive_ballot<R: RngCore + ?Sized>(
        &mut self,
        msg: &SubmitMessage<G>,
        rng: &mut R,
        meter: &OpMeter,
    ) -> Result<BlindMessage<G>, SubmitError> {
        let expected = self.election.config.ballot_length;
        if msg.ciphertexts.len() != expected {
            return Err(SubmitError::WrongBallotLength { expected, got: msg.ciphertexts.len() });
        }
        if !self.election.config.allow_revote && self.sessions.contains_key(&msg.voter_id) {
            return Err(SubmitError::DuplicateBallot);
        }
        let group = self.election.group.clone();
        let mut token = [0u8; 16];
        rng.fill_bytes(&mut token);
        let blinding: Vec<G::Scalar> =
            (0..expected).map(|_| group.random_scalar(rng)).collect();
        let key_exponent = group.random_scalar(rng);
        let commit_key = group.exp(&group.generator(), &key_exponent, meter);

        let confirmation = match &self.signing {
            Some(keys) => {
                let confirmation =
                    sign_confirmation(&group, keys, msg.voter_id, &msg.ciphertexts, rng, meter);
                self.board.publish(
                    &group,
                    &keys.vk,
                    BallotRecord {
                        voter_id: msg.voter_id,
                        ciphertexts: msg.ciphertexts.clone(),
                        confirmation: confirmation.clone(),
                    },
                    meter,
                )?;
                Some(confirmation)
            }
            None => None,
        };

        let session = AuditSession {
            voter_id: msg.voter_id,
            token,
            ciphertexts: msg.ciphertexts.clone(),
            blinding: blinding.clone(),
            commit_key,
            confirmation: confirmation.clone(),
            confirmation_code: None,
        };
        match self.sessions.entry(msg.voter_id) {
            Entry::Occupied(mut slot) => {
                slot.insert(session);
            }
            Entry::Vacant(slot) => {
                slot.insert(session);
            }
        }
        Ok(BlindMessage { token, blinding, confirmation })
    }

    /// Audit step: the original ballot next to its re-randomization. Two
    /// exponentiations per entry; the subsequent proof adds four more.
    pub fn audit_offer(
        &self,
        voter_id: &VoterId,
        meter: &OpMeter,
    ) -> Result<AuditOffer<G>, AuditServeError> {
        let session = self.sessions.get(voter_id).ok_or(AuditServeError::UnknownSession)?;
        let group = &self.election.group;
        let rerandomized = session
            .ciphertexts
            .iter()
            .zip(&session.blinding)
            .map(|(ct, x)| rerandomize(group, &self.election.pk, ct, x, meter))
            .collect();
        Ok(AuditOffer {
            ciphertexts: session.ciphertexts.clone(),
            rerandomized,
            confirmation: session.confirmation.clone(),
        })
    }

    /// Provers for the audit proofs, one per ballot entry, sharing the
    /// session's commitment key. Fresh sigma nonces are drawn per call, so
    /// repeated audits of the same ballot get fresh proofs.
    pub fn audit_provers<R: RngCore + ?Sized>(
        &self,
        voter_id: &VoterId,
        offer: &AuditOffer<G>,
        rng: &mut R,
    ) -> Result<ProverSequence<G>, AuditServeError> {
        let session = self.sessions.get(voter_id).ok_or(AuditServeError::UnknownSession)?;
        let group = &self.election.group;
        let provers = offer
            .ciphertexts
            .iter()
            .zip(&offer.rerandomized)
            .zip(&session.blinding)
            .map(|((original, fresh), x)| {
                let statement = zk::Statement::rerandomization(group, &self.election.pk, original, fresh);
                zk::Prover::with_commit_key(
                    group,
                    statement,
                    x.clone(),
                    session.commit_key.clone(),
                    rng,
                )
            })
            .collect();
        Ok(ProverSequence::new(provers))
    }

    /// Records the voter's reported verdict (confirmation-code mode).
    pub fn record_confirmation_code(
        &mut self,
        voter_id: &VoterId,
        accepted: bool,
    ) -> Result<(), AuditServeError> {
        let session =
            self.sessions.get_mut(voter_id).ok_or(AuditServeError::UnknownSession)?;
        session.confirmation_code = Some(accepted);
        Ok(())
    }
}

/// Server-side driver for the audit proofs of one ballot, executed strictly
/// in entry order.
#[derive(Debug)]
pub struct ProverSequence<G: PrimeGroup> {
    provers: Vec<zk::Prover<G>>,
    current: usize,
}

impl<G: PrimeGroup> ProverSequence<G> {
    pub fn new(provers: Vec<zk::Prover<G>>) -> Self {
        Self { provers, current: 0 }
    }

    pub fn finished(&self) -> bool {
        self.current >= self.provers.len()
    }

    /// The opening message of the next proof, if one is due.
    pub fn poll(&mut self) -> Option<zk::Message<G>> {
        let prover = self.provers.get_mut(self.current)?;
        (prover.phase() == zk::ProverPhase::Start).then(|| prover.start().expect("fresh prover"))
    }

    pub fn handle(
        &mut self,
        msg: &zk::Message<G>,
        meter: &OpMeter,
    ) -> Result<zk::Message<G>, zk::ZkError> {
        let prover = self.provers.get_mut(self.current).ok_or(zk::ZkError::PhaseError {
            expected: "nothing (all proofs finished)",
            got: msg.phase_name(),
        })?;
        let reply = prover.step(msg, meter)?;
        if prover.phase() == zk::ProverPhase::Done {
            self.current += 1;
        }
        Ok(reply)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ChannelError {
    #[error("proof channel closed")]
    Closed,
}

/// Message channel the audit device runs its verifier over.
pub trait ZkChannel<G: PrimeGroup> {
    fn recv(&mut self) -> Result<zk::Message<G>, ChannelError>;
    fn send(&mut self, msg: zk::Message<G>) -> Result<(), ChannelError>;
}

/// In-process channel wired straight to a server prover sequence.
pub struct LocalZkChannel<'a, G: PrimeGroup> {
    provers: &'a mut ProverSequence<G>,
    meter: &'a OpMeter,
    inbox: VecDeque<zk::Message<G>>,
}

impl<'a, G: PrimeGroup> LocalZkChannel<'a, G> {
    /// `meter` is the server's: the prover work happens inside `send`.
    pub fn new(provers: &'a mut ProverSequence<G>, meter: &'a OpMeter) -> Self {
        Self { provers, meter, inbox: VecDeque::new() }
    }
}

impl<G: PrimeGroup> ZkChannel<G> for LocalZkChannel<'_, G> {
    fn recv(&mut self) -> Result<zk::Message<G>, ChannelError> {
        if let Some(msg) = self.inbox.pop_front() {
            return Ok(msg);
        }
        self.provers.poll().ok_or(ChannelError::Closed)
    }

    fn send(&mut self, msg: zk::Message<G>) -> Result<(), ChannelError> {
        let reply = self.provers.handle(&msg, self.meter).map_err(|_| ChannelError::Closed)?;
        self.inbox.push_back(reply);
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    Reject,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AuditFailure {
    WrongElection,
    HashMismatch,
    BadConfirmation,
    ZkpRejected,
    RandomnessMismatch,
    UnknownVote,
    ChannelFailed,
    MalformedOffer,
}

impl AuditFailure {
    pub fn as_str(&self) -> &'static str {
        match self {
            AuditFailure::WrongElection => "WrongElection",
            AuditFailure::HashMismatch => "HashMismatch",
            AuditFailure::BadConfirmation => "BadConfirmation",
            AuditFailure::ZkpRejected => "ZkpRejected",
            AuditFailure::RandomnessMismatch => "RandomnessMismatch",
            AuditFailure::UnknownVote => "UnknownVote",
            AuditFailure::ChannelFailed => "ChannelFailed",
            AuditFailure::MalformedOffer => "MalformedOffer",
        }
    }
}

/// Exponentiations the audit device spent, split by phase.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AuditCost {
    pub zkp_exps: u64,
    pub decrypt_exps: u64,
    pub other_exps: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuditOutcome {
    pub verdict: Verdict,
    pub displayed: Option<Vec<VoteIdx>>,
    pub reason: Option<AuditFailure>,
    pub cost: AuditCost,
}

impl AuditOutcome {
    fn reject(reason: AuditFailure, cost: AuditCost) -> Self {
        Self { verdict: Verdict::Reject, displayed: None, reason: Some(reason), cost }
    }

    pub fn accepted(&self) -> bool {
        self.verdict == Verdict::Accept
    }
}

/// The audit device's program: check the offer against the scanned payload,
/// verify the re-randomization proof for every entry, then open the
/// re-randomized ballot with the blinded randomness and decode the vote.
///
/// Per entry: six exponentiations for the proof, two for the opening.
pub fn ad_audit<G: PrimeGroup, R: RngCore + ?Sized, C: ZkChannel<G>>(
    election: &Election<G>,
    payload: &QrPayload<G>,
    offer: &AuditOffer<G>,
    channel: &mut C,
    rng: &mut R,
    meter: &OpMeter,
) -> AuditOutcome {
    let group = &election.group;
    let mut cost = AuditCost::default();

    if payload.election_id != election.election_id {
        return AuditOutcome::reject(AuditFailure::WrongElection, cost);
    }
    let len = election.config.ballot_length;
    if offer.ciphertexts.len() != len
        || offer.rerandomized.len() != len
        || payload.blinded_randomness.len() != len
    {
        return AuditOutcome::reject(AuditFailure::MalformedOffer, cost);
    }
    if ballot_digest(group, &offer.ciphertexts) != payload.ballot_digest {
        return AuditOutcome::reject(AuditFailure::HashMismatch, cost);
    }
    if election.config.signed_confirmations {
        let before = meter.exps();
        let ok = match (&election.verification_key, &offer.confirmation) {
            (Some(vk), Some(confirmation)) => {
                confirmation.voter_id == payload.voter_id
                    && verify_confirmation(group, vk, confirmation, &offer.ciphertexts, meter)
            }
            _ => false,
        };
        cost.other_exps += meter.exps() - before;
        if !ok {
            return AuditOutcome::reject(AuditFailure::BadConfirmation, cost);
        }
    }

    // interactive proof per entry
    let zkp_before = meter.exps();
    for (original, fresh) in offer.ciphertexts.iter().zip(&offer.rerandomized) {
        let statement = zk::Statement::rerandomization(group, &election.pk, original, fresh);
        let mut verifier = zk::Verifier::new(group, statement, rng);
        loop {
            let incoming = match channel.recv() {
                Ok(msg) => msg,
                Err(_) => {
                    cost.zkp_exps += meter.exps() - zkp_before;
                    return AuditOutcome::reject(AuditFailure::ChannelFailed, cost);
                }
            };
            match verifier.step(&incoming, meter) {
                Ok(zk::VerifierStep::Reply(reply)) => {
                    if channel.send(reply).is_err() {
                        cost.zkp_exps += meter.exps() - zkp_before;
                        return AuditOutcome::reject(AuditFailure::ChannelFailed, cost);
                    }
                }
                Ok(zk::VerifierStep::Verdict(accept)) => {
                    if !accept {
                        cost.zkp_exps += meter.exps() - zkp_before;
                        return AuditOutcome::reject(AuditFailure::ZkpRejected, cost);
                    }
                    break;
                }
                Err(_) => {
                    cost.zkp_exps += meter.exps() - zkp_before;
                    return AuditOutcome::reject(AuditFailure::ZkpRejected, cost);
                }
            }
        }
    }
    cost.zkp_exps += meter.exps() - zkp_before;

    // special decryption and decode
    let dec_before = meter.exps();
    let mut displayed = Vec::with_capacity(len);
    for (fresh, blinded) in offer.rerandomized.iter().zip(&payload.blinded_randomness) {
        let m = match special_decrypt(group, &election.pk, fresh, blinded, meter) {
            Ok(m) => m,
            Err(_) => {
                cost.decrypt_exps += meter.exps() - dec_before;
                return AuditOutcome::reject(AuditFailure::RandomnessMismatch, cost);
            }
        };
        match election.encoding.decode(group, &m) {
            Ok(v) => displayed.push(v),
            Err(_) => {
                cost.decrypt_exps += meter.exps() - dec_before;
                return AuditOutcome::reject(AuditFailure::UnknownVote, cost);
            }
        }
    }
    cost.decrypt_exps += meter.exps() - dec_before;

    AuditOutcome { verdict: Verdict::Accept, displayed: Some(displayed), reason: None, cost }
}

/// The voter's final check: accept iff the audit device displayed exactly the
/// intended vote.
pub fn voter_verdict(intent: &VoterIntent, outcome: &AuditOutcome) -> bool {
    outcome.verdict == Verdict::Accept && outcome.displayed.as_deref() == Some(&intent.vote)
}
