//! Deniability simulators.
//!
//! [`simulate_audit`] fabricates a complete, accepting audit for any claimed
//! vote against any ciphertext, without the encryption randomness or the
//! blinding factor. Whatever the voter's material shows, anyone could have
//! produced it, so it is worthless to a vote buyer.
//!
//! [`server_view_audit`] replaces the audit device with a bare proof
//! verifier that knows only public values. The server cannot tell it from a
//! real audit device, which is exactly why running the audit leaks nothing
//! new about the vote to the server.

use rand_core::RngCore;
use thiserror::Error;

use crate::board::ballot_digest;
use crate::elgamal::{encrypt, special_decrypt, Ciphertext};
use crate::encoding::VoteIdx;
use crate::group::{OpMeter, PrimeGroup};
use crate::zk;

use super::{
    AuditCost, AuditFailure, AuditOffer, AuditOutcome, ChannelError, Election, QrPayload, Verdict,
    VoterId, ZkChannel,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("claimed vote outside the alphabet")]
    VoteOutOfRange,
    #[error("ciphertext count does not match the ballot length")]
    WrongBallotLength,
}

/// Everything the audit device would have seen in an accepting run: blinded
/// randomness, re-randomized ciphertexts, and proof conversations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimulatedAudit<G: PrimeGroup> {
    pub blinded_randomness: Vec<G::Scalar>,
    pub rerandomized: Vec<Ciphertext<G>>,
    pub transcripts: Vec<zk::Transcript<G>>,
}

/// Fabricates an accepting audit that displays `claimed` for `ciphertexts`,
/// regardless of what they actually encrypt.
///
/// Per entry, draw order: blinded randomness, then the transcript simulator's
/// draws (commitment key exponent, challenge, blinding, response).
pub fn simulate_audit<G: PrimeGroup, R: RngCore + ?Sized>(
    election: &Election<G>,
    claimed: &[VoteIdx],
    ciphertexts: &[Ciphertext<G>],
    rng: &mut R,
) -> Result<SimulatedAudit<G>, SimError> {
    if claimed.len() != ciphertexts.len() {
        return Err(SimError::WrongBallotLength);
    }
    let group = &election.group;
    let meter = OpMeter::new();
    let mut blinded_randomness = Vec::with_capacity(claimed.len());
    let mut rerandomized = Vec::with_capacity(claimed.len());
    let mut transcripts = Vec::with_capacity(claimed.len());
    for (&v, original) in claimed.iter().zip(ciphertexts) {
        let m = election.encoding.encode(group, v, &meter).map_err(|_| SimError::VoteOutOfRange)?;
        let blinded = group.random_scalar(rng);
        let fresh = encrypt(group, &election.pk, &m, &blinded, &meter);
        let statement = zk::Statement::rerandomization(group, &election.pk, original, &fresh);
        transcripts.push(zk::simulate(group, &statement, rng));
        blinded_randomness.push(blinded);
        rerandomized.push(fresh);
    }
    Ok(SimulatedAudit { blinded_randomness, rerandomized, transcripts })
}

impl<G: PrimeGroup> SimulatedAudit<G> {
    /// What an honest receiver of this material checks: every proof
    /// conversation verifies, and the blinded randomness opens each
    /// re-randomized ciphertext to an alphabet vote.
    pub fn verify(
        &self,
        election: &Election<G>,
        ciphertexts: &[Ciphertext<G>],
        meter: &OpMeter,
    ) -> AuditOutcome {
        let group = &election.group;
        let mut cost = AuditCost::default();
        let zkp_before = meter.exps();
        for ((original, fresh), transcript) in
            ciphertexts.iter().zip(&self.rerandomized).zip(&self.transcripts)
        {
            let statement = zk::Statement::rerandomization(group, &election.pk, original, fresh);
            if !transcript.verify(group, &statement, meter) {
                cost.zkp_exps = meter.exps() - zkp_before;
                return AuditOutcome {
                    verdict: Verdict::Reject,
                    displayed: None,
                    reason: Some(AuditFailure::ZkpRejected),
                    cost,
                };
            }
        }
        cost.zkp_exps = meter.exps() - zkp_before;

        let dec_before = meter.exps();
        let mut displayed = Vec::with_capacity(self.rerandomized.len());
        for (fresh, blinded) in self.rerandomized.iter().zip(&self.blinded_randomness) {
            let outcome = special_decrypt(group, &election.pk, fresh, blinded, meter)
                .map_err(|_| AuditFailure::RandomnessMismatch)
                .and_then(|m| {
                    election.encoding.decode(group, &m).map_err(|_| AuditFailure::UnknownVote)
                });
            match outcome {
                Ok(v) => displayed.push(v),
                Err(reason) => {
                    cost.decrypt_exps = meter.exps() - dec_before;
                    return AuditOutcome { verdict: Verdict::Reject, displayed: None, reason: Some(reason), cost };
                }
            }
        }
        cost.decrypt_exps = meter.exps() - dec_before;
        AuditOutcome { verdict: Verdict::Accept, displayed: Some(displayed), reason: None, cost }
    }

    /// The QR payload this fabricated audit corresponds to.
    pub fn payload(
        &self,
        election: &Election<G>,
        voter_id: VoterId,
        ciphertexts: &[Ciphertext<G>],
    ) -> QrPayload<G> {
        QrPayload {
            election_id: election.election_id,
            voter_id,
            blinded_randomness: self.blinded_randomness.clone(),
            ballot_digest: ballot_digest(&election.group, ciphertexts),
        }
    }

    /// The audit offer this fabricated audit corresponds to.
    pub fn offer(&self, ciphertexts: &[Ciphertext<G>]) -> AuditOffer<G> {
        AuditOffer {
            ciphertexts: ciphertexts.to_vec(),
            rerandomized: self.rerandomized.clone(),
            confirmation: None,
        }
    }

    /// Channel that replays the recorded prover messages, plus the entropy
    /// script that makes a fresh verifier draw the recorded challenges. Feed
    /// both to `ad_audit` to replay the fabricated audit through the real
    /// audit-device program.
    pub fn playback(&self, group: &G) -> (PlaybackChannel<G>, crate::entropy::ScriptedRng) {
        let mut queue = std::collections::VecDeque::new();
        let mut draws = Vec::new();
        for t in &self.transcripts {
            queue.push_back(zk::Message::CommitKey(t.commit_key.clone()));
            queue.push_back(zk::Message::SigmaCommitments(t.sigma.clone()));
            queue.push_back(zk::Message::Response(t.response.clone()));
            draws.push(t.challenge.clone());
            draws.push(t.blinding.clone());
        }
        (PlaybackChannel { queue }, crate::entropy::ScriptedRng::for_scalars(group, &draws))
    }
}

/// Replays recorded prover messages; discards whatever the verifier sends.
pub struct PlaybackChannel<G: PrimeGroup> {
    queue: std::collections::VecDeque<zk::Message<G>>,
}

impl<G: PrimeGroup> ZkChannel<G> for PlaybackChannel<G> {
    fn recv(&mut self) -> Result<zk::Message<G>, ChannelError> {
        self.queue.pop_front().ok_or(ChannelError::Closed)
    }

    fn send(&mut self, _msg: zk::Message<G>) -> Result<(), ChannelError> {
        Ok(())
    }
}

/// Stand-in for the audit device that knows only public values: it runs the
/// proof verifier on the offered ciphertext pair and nothing else.
///
/// Deliberately takes neither the vote, nor the encryption randomness, nor
/// the blinded randomness: the server-side view of an audit is computable
/// from (pk, c, c*) alone. Returns the per-entry proof verdicts, which is
/// also what the confirmation-code variant reports back.
pub fn server_view_audit<G: PrimeGroup, R: RngCore + ?Sized, C: ZkChannel<G>>(
    group: &G,
    pk: &G::Element,
    offer: &AuditOffer<G>,
    channel: &mut C,
    rng: &mut R,
    meter: &OpMeter,
) -> Result<Vec<bool>, ChannelError> {
    let mut verdicts = Vec::with_capacity(offer.ciphertexts.len());
    for (original, fresh) in offer.ciphertexts.iter().zip(&offer.rerandomized) {
        let statement = zk::Statement::rerandomization(group, pk, original, fresh);
        let mut verifier = zk::Verifier::new(group, statement, rng);
        loop {
            let incoming = channel.recv()?;
            match verifier.step(&incoming, meter) {
                Ok(zk::VerifierStep::Reply(reply)) => channel.send(reply)?,
                Ok(zk::VerifierStep::Verdict(accept)) => {
                    verdicts.push(accept);
                    break;
                }
                Err(_) => {
                    verdicts.push(false);
                    break;
                }
            }
        }
    }
    Ok(verdicts)
}
