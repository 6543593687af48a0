//! Message-level voting-server endpoint: decodes wire frames, drives the
//! protocol server, and encodes replies. One endpoint serves one election
//! over any transport; state and draws depend only on the seed and the
//! message sequence, so identical runs produce identical bytes.

use std::collections::HashMap;

use castaudit_core::board::sign_confirmation;
use castaudit_core::elgamal::encrypt;
use castaudit_core::group::{OpMeter, PrimeGroup};
use castaudit_core::protocol::{
    AuditOffer, AuditSession, BlindMessage, ProverSequence, SessionToken, SubmitError,
    SubmitMessage, VotingServer,
};
use castaudit_core::zk;
use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

use crate::actors::Behavior;
use crate::wire::{
    decode_audit_request, decode_submit, encode_blind, encode_fault, encode_offer, FaultCode,
    PhaseTag, RoleTag, WireMessage,
};

struct AuditRun<G: PrimeGroup> {
    voter_id: [u8; 16],
    provers: ProverSequence<G>,
    corrupt_response: bool,
}

pub struct ServerEndpoint<G: PrimeGroup> {
    pub server: VotingServer<G>,
    behavior: Behavior,
    audits: HashMap<SessionToken, AuditRun<G>>,
    rng: ChaCha20Rng,
    /// Exponentiations spent handling submissions.
    pub submission_meter: OpMeter,
    /// Exponentiations spent handling audits (re-randomization + proofs).
    pub audit_meter: OpMeter,
    /// Every frame the server received, in order, with its phase.
    pub received: Vec<(PhaseTag, Vec<u8>)>,
}

impl<G: PrimeGroup> ServerEndpoint<G> {
    pub fn new(server: VotingServer<G>, behavior: Behavior, seed: u64) -> Self {
        Self {
            server,
            behavior,
            audits: HashMap::new(),
            rng: ChaCha20Rng::seed_from_u64(seed),
            submission_meter: OpMeter::new(),
            audit_meter: OpMeter::new(),
            received: Vec::new(),
        }
    }

    /// Frames the server received during audits, i.e. everything beyond
    /// basic ballot submission.
    pub fn audit_phase_log(&self) -> Vec<Vec<u8>> {
        self.received
            .iter()
            .filter(|(phase, _)| *phase != PhaseTag::Submit)
            .map(|(_, bytes)| bytes.clone())
            .collect()
    }

    fn fault(&self, token: SessionToken, code: FaultCode) -> WireMessage {
        WireMessage::new(token, RoleTag::VotingServer, PhaseTag::Fault, encode_fault(code))
    }

    /// Handles one client frame and returns exactly one reply. Proof
    /// openings are fetched with an empty zk frame (a poll), keeping the
    /// exchange strictly request/response.
    pub fn handle(&mut self, msg: &WireMessage) -> WireMessage {
        self.received.push((msg.phase, crate::wire::frame(msg)));
        match msg.phase {
            PhaseTag::Submit => self.handle_submit(msg),
            PhaseTag::AuditRequest => self.handle_audit_request(msg),
            PhaseTag::Zk => self.handle_zk(msg),
            PhaseTag::Confirm => self.handle_confirm(msg),
            _ => self.fault(msg.token, FaultCode::Malformed),
        }
    }

    fn handle_submit(&mut self, msg: &WireMessage) -> WireMessage {
        let group = self.server.election.group.clone();
        let ballot_length = self.server.election.config.ballot_length;
        let submit = match decode_submit(&group, ballot_length, &msg.payload) {
            Ok(s) => s,
            Err(_) => return self.fault(msg.token, FaultCode::Malformed),
        };
        let blind = if self.behavior == Behavior::WithholdRecord {
            match self.receive_ballot_withholding(&submit) {
                Ok(b) => b,
                Err(code) => return self.fault(msg.token, code),
            }
        } else {
            match self.server.receive_ballot(&submit, &mut self.rng, &self.submission_meter) {
                Ok(b) => b,
                Err(SubmitError::DuplicateBallot) => {
                    return self.fault(msg.token, FaultCode::DuplicateBallot)
                }
                Err(SubmitError::WrongBallotLength { .. }) => {
                    return self.fault(msg.token, FaultCode::WrongBallotLength)
                }
                Err(SubmitError::Board(_)) => return self.fault(msg.token, FaultCode::BoardRejected),
            }
        };
        WireMessage::new(blind.token, RoleTag::VotingServer, PhaseTag::Blind, encode_blind(&group, &blind))
    }

    /// Same draws as the honest path, but the signed record never reaches
    /// the board.
    fn receive_ballot_withholding(
        &mut self,
        submit: &SubmitMessage<G>,
    ) -> Result<BlindMessage<G>, FaultCode> {
        let election = &self.server.election;
        let group = election.group.clone();
        if submit.ciphertexts.len() != election.config.ballot_length {
            return Err(FaultCode::WrongBallotLength);
        }
        if !election.config.allow_revote && self.server.session(&submit.voter_id).is_some() {
            return Err(FaultCode::DuplicateBallot);
        }
        let mut token = [0u8; 16];
        self.rng.fill_bytes(&mut token);
        let blinding: Vec<G::Scalar> = (0..election.config.ballot_length)
            .map(|_| group.random_scalar(&mut self.rng))
            .collect();
        let key_exponent = group.random_scalar(&mut self.rng);
        let commit_key = group.exp(&group.generator(), &key_exponent, &self.submission_meter);
        let confirmation = self.server.signing_keys().map(|keys| {
            sign_confirmation(
                &group,
                keys,
                submit.voter_id,
                &submit.ciphertexts,
                &mut self.rng,
                &self.submission_meter,
            )
        });
        self.server.restore_session(AuditSession {
            voter_id: submit.voter_id,
            token,
            ciphertexts: submit.ciphertexts.clone(),
            blinding: blinding.clone(),
            commit_key,
            confirmation: confirmation.clone(),
            confirmation_code: None,
        });
        Ok(BlindMessage { token, blinding, confirmation })
    }

    fn handle_audit_request(&mut self, msg: &WireMessage) -> WireMessage {
        let group = self.server.election.group.clone();
        let (election_id, voter_id) = match decode_audit_request(&msg.payload) {
            Ok(x) => x,
            Err(_) => return self.fault(msg.token, FaultCode::Malformed),
        };
        if election_id != self.server.election.election_id
            || self.server.session(&voter_id).is_none()
        {
            return self.fault(msg.token, FaultCode::UnknownSession);
        }

        let mut audit_token = [0u8; 16];
        self.rng.fill_bytes(&mut audit_token);

        let (offer, provers) = match self.behavior {
            Behavior::SubstituteCiphertext => self.substituted_offer(&voter_id),
            _ => {
                let offer = self
                    .server
                    .audit_offer(&voter_id, &self.audit_meter)
                    .expect("session checked above");
                let provers = self
                    .server
                    .audit_provers(&voter_id, &offer, &mut self.rng)
                    .expect("session checked above");
                (offer, provers)
            }
        };

        let run =
            AuditRun { voter_id, provers, corrupt_response: self.behavior == Behavior::BadProof };
        self.audits.insert(audit_token, run);
        WireMessage::new(
            audit_token,
            RoleTag::VotingServer,
            PhaseTag::AuditOffer,
            encode_offer(&group, &offer),
        )
    }

    /// Offers re-randomizations of fresh encryptions of alphabet vote 0
    /// instead of the submitted ballot, proving with the only scalar the
    /// cheater has.
    fn substituted_offer(&mut self, voter_id: &[u8; 16]) -> (AuditOffer<G>, ProverSequence<G>) {
        let election = &self.server.election;
        let group = election.group.clone();
        let session = self.server.session(voter_id).expect("session checked above");
        let target = election
            .encoding
            .element(0)
            .expect("alphabet is never empty")
            .clone();
        let mut fresh = Vec::with_capacity(session.ciphertexts.len());
        let mut provers = Vec::with_capacity(session.ciphertexts.len());
        for original in &session.ciphertexts {
            let r = group.random_scalar(&mut self.rng);
            let substituted = encrypt(&group, &election.pk, &target, &r, &self.audit_meter);
            let statement = zk::Statement::rerandomization(&group, &election.pk, original, &substituted);
            provers.push(zk::Prover::with_commit_key(
                &group,
                statement,
                r.clone(),
                session.commit_key.clone(),
                &mut self.rng,
            ));
            fresh.push(substituted);
        }
        (
            AuditOffer {
                ciphertexts: session.ciphertexts.clone(),
                rerandomized: fresh,
                confirmation: session.confirmation.clone(),
            },
            ProverSequence::new(provers),
        )
    }

    fn handle_zk(&mut self, msg: &WireMessage) -> WireMessage {
        let group = self.server.election.group.clone();
        let Some(run) = self.audits.get_mut(&msg.token) else {
            return self.fault(msg.token, FaultCode::UnknownSession);
        };
        // an empty zk frame polls for the next proof's opening message
        if msg.payload.is_empty() {
            return match run.provers.poll() {
                Some(opening) => WireMessage::new(
                    msg.token,
                    RoleTag::VotingServer,
                    PhaseTag::Zk,
                    opening.encode(&group),
                ),
                None => self.fault(msg.token, FaultCode::ProofAborted),
            };
        }
        let incoming = match zk::Message::decode(&group, &msg.payload) {
            Ok(m) => m,
            Err(_) => return self.fault(msg.token, FaultCode::Malformed),
        };
        let reply = match run.provers.handle(&incoming, &self.audit_meter) {
            Ok(r) => r,
            Err(_) => return self.fault(msg.token, FaultCode::ProofAborted),
        };
        let reply = match reply {
            zk::Message::Response(z) if run.corrupt_response => {
                zk::Message::Response(group.scalar_add(&z, &group.scalar_one()))
            }
            other => other,
        };
        WireMessage::new(msg.token, RoleTag::VotingServer, PhaseTag::Zk, reply.encode(&group))
    }

    fn handle_confirm(&mut self, msg: &WireMessage) -> WireMessage {
        if msg.payload.len() != 1 || msg.payload[0] > 1 {
            return self.fault(msg.token, FaultCode::Malformed);
        }
        // the confirm frame rides on the audit conversation token
        let Some(voter_id) = self.audits.get(&msg.token).map(|run| run.voter_id) else {
            return self.fault(msg.token, FaultCode::UnknownSession);
        };
        let accepted = msg.payload[0] == 1;
        if self.server.record_confirmation_code(&voter_id, accepted).is_err() {
            return self.fault(msg.token, FaultCode::UnknownSession);
        }
        WireMessage::new(msg.token, RoleTag::VotingServer, PhaseTag::Confirm, vec![])
    }
}
