//! Ballot audit for commitment-based voting schemes.
//!
//! Same shape as the ElGamal flow with the primitives swapped: the device
//! commits to the vote instead of encrypting it, the server re-randomizes
//! the commitment, proves it with a single-track discrete-log proof over the
//! Pedersen base h, and the audit device opens the re-randomized commitment
//! with the blinded randomness.

use rand_core::RngCore;
use thiserror::Error;

use crate::encoding::VoteIdx;
use crate::group::{OpMeter, PrimeGroup};
use crate::pedersen::{commit, open_with_randomness, rerandomize, PedersenParams};
use crate::protocol::{
    AuditCost, AuditFailure, AuditOutcome, ChannelError, Verdict, ZkChannel,
};
use crate::zk;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CommitCastError {
    #[error("vote {0} outside the alphabet")]
    VoteOutOfRange(VoteIdx),
}

/// Device-side state for one committed ballot.
#[derive(Clone, Debug)]
pub struct CommitBallot<G: PrimeGroup> {
    pub vote: VoteIdx,
    pub randomness: G::Scalar,
    pub commitment: G::Element,
}

/// Server-side state binding the commitment and its blinding factor.
#[derive(Clone, Debug)]
pub struct CommitSession<G: PrimeGroup> {
    pub commitment: G::Element,
    pub blinding: G::Scalar,
    pub commit_key: G::Element,
}

/// Device: commit to the vote under fresh randomness.
pub fn cv_cast<G: PrimeGroup, R: RngCore + ?Sized>(
    group: &G,
    params: &PedersenParams<G>,
    alphabet_size: u32,
    vote: VoteIdx,
    rng: &mut R,
    meter: &OpMeter,
) -> Result<CommitBallot<G>, CommitCastError> {
    if vote >= alphabet_size {
        return Err(CommitCastError::VoteOutOfRange(vote));
    }
    let randomness = group.random_scalar(rng);
    let commitment =
        commit(group, params, &group.scalar_from_u64(u64::from(vote)), &randomness, meter);
    Ok(CommitBallot { vote, randomness, commitment })
}

/// Server: draw the blinding factor and the proof commitment key.
///
/// Draw order: blinding factor, commitment key exponent.
pub fn cv_receive<G: PrimeGroup, R: RngCore + ?Sized>(
    group: &G,
    commitment: &G::Element,
    rng: &mut R,
    meter: &OpMeter,
) -> CommitSession<G> {
    let blinding = group.random_scalar(rng);
    let key_exponent = group.random_scalar(rng);
    CommitSession {
        commitment: commitment.clone(),
        blinding,
        commit_key: group.exp(&group.generator(), &key_exponent, meter),
    }
}

/// Device: blind the commitment randomness with the server's factor.
pub fn cv_finalize<G: PrimeGroup>(
    group: &G,
    ballot: &CommitBallot<G>,
    blinding: &G::Scalar,
) -> G::Scalar {
    group.scalar_add(blinding, &ballot.randomness)
}

/// Server: the original commitment next to its re-randomization.
pub fn cv_audit_offer<G: PrimeGroup>(
    group: &G,
    params: &PedersenParams<G>,
    session: &CommitSession<G>,
    meter: &OpMeter,
) -> (G::Element, G::Element) {
    let fresh = rerandomize(group, params, &session.commitment, &session.blinding, meter);
    (session.commitment.clone(), fresh)
}

/// Server-side prover for the re-randomization claim c'/c = h^x.
pub fn cv_audit_prover<G: PrimeGroup, R: RngCore + ?Sized>(
    group: &G,
    params: &PedersenParams<G>,
    session: &CommitSession<G>,
    rerandomized: &G::Element,
    rng: &mut R,
) -> zk::Prover<G> {
    let statement =
        zk::Statement::commitment_rerandomization(group, params, &session.commitment, rerandomized);
    zk::Prover::with_commit_key(
        group,
        statement,
        session.blinding.clone(),
        session.commit_key.clone(),
        rng,
    )
}

/// Audit device: verify the proof, open the re-randomized commitment with
/// the blinded randomness, and report the vote it contains.
#[allow(clippy::too_many_arguments)]
pub fn cv_audit<G: PrimeGroup, R: RngCore + ?Sized, C: ZkChannel<G>>(
    group: &G,
    params: &PedersenParams<G>,
    alphabet_size: u32,
    blinded_randomness: &G::Scalar,
    original: &G::Element,
    rerandomized: &G::Element,
    channel: &mut C,
    rng: &mut R,
    meter: &OpMeter,
) -> AuditOutcome {
    let mut cost = AuditCost::default();
    let statement = zk::Statement::commitment_rerandomization(group, params, original, rerandomized);
    let mut verifier = zk::Verifier::new(group, statement, rng);
    let zkp_before = meter.exps();
    loop {
        let incoming = match channel.recv() {
            Ok(msg) => msg,
            Err(ChannelError::Closed) => {
                cost.zkp_exps = meter.exps() - zkp_before;
                return reject(AuditFailure::ChannelFailed, cost);
            }
        };
        match verifier.step(&incoming, meter) {
            Ok(zk::VerifierStep::Reply(reply)) => {
                if channel.send(reply).is_err() {
                    cost.zkp_exps = meter.exps() - zkp_before;
                    return reject(AuditFailure::ChannelFailed, cost);
                }
            }
            Ok(zk::VerifierStep::Verdict(accept)) => {
                cost.zkp_exps = meter.exps() - zkp_before;
                if !accept {
                    return reject(AuditFailure::ZkpRejected, cost);
                }
                break;
            }
            Err(_) => {
                cost.zkp_exps = meter.exps() - zkp_before;
                return reject(AuditFailure::ZkpRejected, cost);
            }
        }
    }

    let dec_before = meter.exps();
    let opened = open_with_randomness(
        group,
        params,
        rerandomized,
        blinded_randomness,
        alphabet_size,
        meter,
    );
    cost.decrypt_exps = meter.exps() - dec_before;
    match opened {
        Ok(v) => AuditOutcome {
            verdict: Verdict::Accept,
            displayed: Some(vec![v]),
            reason: None,
            cost,
        },
        Err(_) => reject(AuditFailure::RandomnessMismatch, cost),
    }
}

fn reject(reason: AuditFailure, cost: AuditCost) -> AuditOutcome {
    AuditOutcome { verdict: Verdict::Reject, displayed: None, reason: Some(reason), cost }
}

/// One honest end-to-end run of the commitment variant, in process.
#[allow(clippy::too_many_arguments)]
pub fn run_commitment_variant<G: PrimeGroup>(
    group: &G,
    params: &PedersenParams<G>,
    alphabet_size: u32,
    vote: VoteIdx,
    device_rng: &mut dyn RngCore,
    server_rng: &mut dyn RngCore,
    audit_rng: &mut dyn RngCore,
    device_meter: &OpMeter,
    server_meter: &OpMeter,
    audit_meter: &OpMeter,
) -> Result<AuditOutcome, CommitCastError> {
    let ballot = cv_cast(group, params, alphabet_size, vote, device_rng, device_meter)?;
    let session = cv_receive(group, &ballot.commitment, server_rng, server_meter);
    let blinded = cv_finalize(group, &ballot, &session.blinding);
    let (original, fresh) = cv_audit_offer(group, params, &session, server_meter);
    let mut prover = cv_audit_prover(group, params, &session, &fresh, server_rng);
    let mut channel = SingleProverChannel { prover: &mut prover, meter: server_meter, inbox: None };
    Ok(cv_audit(
        group,
        params,
        alphabet_size,
        &blinded,
        &original,
        &fresh,
        &mut channel,
        audit_rng,
        audit_meter,
    ))
}

/// Minimal in-process channel around a single prover.
pub struct SingleProverChannel<'a, G: PrimeGroup> {
    pub prover: &'a mut zk::Prover<G>,
    pub meter: &'a OpMeter,
    pub inbox: Option<zk::Message<G>>,
}

impl<G: PrimeGroup> ZkChannel<G> for SingleProverChannel<'_, G> {
    fn recv(&mut self) -> Result<zk::Message<G>, ChannelError> {
        if let Some(msg) = self.inbox.take() {
            return Ok(msg);
        }
        if self.prover.phase() == zk::ProverPhase::Start {
            return self.prover.start().map_err(|_| ChannelError::Closed);
        }
        Err(ChannelError::Closed)
    }

    fn send(&mut self, msg: zk::Message<G>) -> Result<(), ChannelError> {
        let reply = self.prover.step(&msg, self.meter).map_err(|_| ChannelError::Closed)?;
        self.inbox = Some(reply);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::ScriptedRng;
    use crate::group::TinyGroup;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    type G = TinyGroup;

    fn tiny_params() -> (G, PedersenParams<G>) {
        let group = TinyGroup;
        let params = PedersenParams::with_h(&group, TinyGroup::element(3).unwrap());
        (group, params)
    }

    #[test]
    fn honest_run_accepts() {
        let (group, params) = tiny_params();
        let meter = OpMeter::new();
        let mut d = ChaCha20Rng::seed_from_u64(1);
        let mut s = ChaCha20Rng::seed_from_u64(2);
        let mut a = ChaCha20Rng::seed_from_u64(3);
        for vote in 0..3 {
            let outcome = run_commitment_variant(
                &group, &params, 3, vote, &mut d, &mut s, &mut a, &meter, &meter, &meter,
            )
            .unwrap();
            assert_eq!(outcome.verdict, Verdict::Accept);
            assert_eq!(outcome.displayed, Some(vec![vote]));
        }
    }

    #[test]
    fn zero_blinding_degenerate_run_accepts() {
        let (group, params) = tiny_params();
        let meter = OpMeter::new();
        let mut d = ChaCha20Rng::seed_from_u64(4);
        // blinding factor 0, key exponent 6
        let mut s = ScriptedRng::for_scalars(&group, &[TinyGroup::scalar(0), TinyGroup::scalar(6)]);
        s.extend(&group.scalar_script_bytes(&TinyGroup::scalar(2))); // sigma nonce
        let mut a = ChaCha20Rng::seed_from_u64(5);
        let outcome = run_commitment_variant(
            &group, &params, 3, 2, &mut d, &mut s, &mut a, &meter, &meter, &meter,
        )
        .unwrap();
        assert_eq!(outcome.displayed, Some(vec![2]));
    }

    #[test]
    fn cheating_server_rejected_except_on_guessed_challenge() {
        // the server substitutes a commitment to a different vote and blinds
        // the opening accordingly: the proof statement is false, so for each
        // fixed prover strategy exactly one challenge accepts
        let (group, params) = tiny_params();
        let meter = OpMeter::new();
        let ballot: CommitBallot<G> = CommitBallot {
            vote: 1,
            randomness: TinyGroup::scalar(5),
            commitment: commit(&group, &params, &TinyGroup::scalar(1), &TinyGroup::scalar(5), &meter),
        };
        // substituted: commits to vote 2 under known randomness 4
        let substituted =
            commit(&group, &params, &TinyGroup::scalar(2), &TinyGroup::scalar(4), &meter);
        let blinding = TinyGroup::scalar(3);
        let fresh = rerandomize(&group, &params, &substituted, &blinding, &meter);
        // the voter's blinded randomness still derives from the real ballot
        let blinded = group.scalar_add(&blinding, &ballot.randomness);
        let key = group.exp(&group.generator(), &TinyGroup::scalar(7), &meter);

        let mut accepts = 0;
        for e in 0..11u64 {
            let statement = zk::Statement::commitment_rerandomization(
                &group,
                &params,
                &ballot.commitment,
                &fresh,
            );
            // cheating prover guesses challenge 4 and back-computes its sigma
            // commitment; it answers with the prepared response regardless
            let guessed = TinyGroup::scalar(4);
            let z = TinyGroup::scalar(9);
            let sigma = group.mul(
                &group.exp(&statement.tracks[0].base, &z, &meter),
                &group.exp(&statement.tracks[0].image, &group.scalar_neg(&guessed), &meter),
            );
            let mut verifier_rng =
                ScriptedRng::for_scalars(&group, &[TinyGroup::scalar(e), TinyGroup::scalar(1)]);
            let mut verifier = zk::Verifier::new(&group, statement, &mut verifier_rng);
            let zk::VerifierStep::Reply(_) =
                verifier.step(&zk::Message::CommitKey(key), &meter).unwrap()
            else {
                panic!()
            };
            let zk::VerifierStep::Reply(_) = verifier
                .step(&zk::Message::SigmaCommitments(vec![sigma]), &meter)
                .unwrap()
            else {
                panic!()
            };
            let zk::VerifierStep::Verdict(accept) =
                verifier.step(&zk::Message::Response(z), &meter).unwrap()
            else {
                panic!()
            };
            if accept {
                accepts += 1;
                assert_eq!(e, 4);
            }
        }
        assert_eq!(accepts, 1);

        // and even on the lucky challenge, the opened value exposes the lie:
        // the blinded randomness does not open the substituted commitment to
        // the claimed vote
        let opened = open_with_randomness(&group, &params, &fresh, &blinded, 3, &meter);
        assert_ne!(opened, Ok(ballot.vote));
    }

    #[test]
    fn commitment_homomorphism_matches_blinded_opening() {
        let (group, params) = tiny_params();
        let meter = OpMeter::new();
        for v in 0..3u32 {
            for r in 0..11u64 {
                for x in 0..11u64 {
                    let c = commit(&group, &params, &TinyGroup::scalar(v.into()), &TinyGroup::scalar(r), &meter);
                    let fresh = rerandomize(&group, &params, &c, &TinyGroup::scalar(x), &meter);
                    let blinded = group.scalar_add(&TinyGroup::scalar(x), &TinyGroup::scalar(r));
                    assert_eq!(
                        open_with_randomness(&group, &params, &fresh, &blinded, 3, &meter),
                        Ok(v)
                    );
                }
            }
        }
    }
}
