//! Interactive zero-knowledge proofs of shared discrete logarithms.
//!
//! The underlying sigma protocol proves knowledge of x with image_i =
//! base_i^x across one or more (base, image) tracks: two tracks give the
//! classic equality-of-discrete-logs proof used for ciphertext
//! re-randomization, one track the plain Schnorr proof used for commitment
//! re-randomization.
//!
//! Sigma protocols are only honest-verifier zero-knowledge, so the verifier
//! first commits to its challenge under a commitment key supplied by the
//! prover, and only opens the commitment after seeing the prover's first
//! message. The six-message conversation:
//!
//!   1. P -> V  commit key  k = g^tau
//!   2. V -> P  challenge commitment  com = g^r_c * k^e
//!   3. P -> V  sigma commitments  A_i = base_i^a
//!   4. V -> P  opening  (e, r_c)
//!   5. P -> V  response  z = a + e*x   (abort if com != g^r_c * k^e)
//!   6. V       accept iff A_i = base_i^z * image_i^(-e) for every track
//!
//! Deniability comes from interactivity: [`simulate`] produces transcripts
//! with the same distribution as honest runs without any witness, even for
//! false statements.

use rand_core::RngCore;
use thiserror::Error;

use crate::elgamal::Ciphertext;
use crate::group::{GroupError, OpMeter, PrimeGroup};
use crate::pedersen::PedersenParams;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Track<G: PrimeGroup> {
    pub base: G::Element,
    pub image: G::Element,
}

/// Claim: one exponent x satisfies image = base^x on every track.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Statement<G: PrimeGroup> {
    pub tracks: Vec<Track<G>>,
}

impl<G: PrimeGroup> Statement<G> {
    pub fn dleq(
        base1: G::Element,
        image1: G::Element,
        base2: G::Element,
        image2: G::Element,
    ) -> Self {
        Self {
            tracks: vec![Track { base: base1, image: image1 }, Track { base: base2, image: image2 }],
        }
    }

    pub fn dlog(base: G::Element, image: G::Element) -> Self {
        Self { tracks: vec![Track { base, image }] }
    }

    /// Statement that `rerandomized` re-randomizes `original`: the quotients
    /// u'/u and w'/w share the blinding factor as discrete log under g and pk.
    pub fn rerandomization(
        group: &G,
        pk: &G::Element,
        original: &Ciphertext<G>,
        rerandomized: &Ciphertext<G>,
    ) -> Self {
        Self::dleq(
            group.generator(),
            group.mul(&rerandomized.u, &group.inv(&original.u)),
            pk.clone(),
            group.mul(&rerandomized.w, &group.inv(&original.w)),
        )
    }

    /// Statement that a Pedersen commitment was re-randomized: c'/c = h^x.
    pub fn commitment_rerandomization(
        group: &G,
        params: &PedersenParams<G>,
        original: &G::Element,
        rerandomized: &G::Element,
    ) -> Self {
        Self::dlog(params.h.clone(), group.mul(rerandomized, &group.inv(original)))
    }

    /// Whether `x` actually satisfies the claim.
    pub fn holds_for(&self, group: &G, x: &G::Scalar) -> bool {
        let meter = OpMeter::new();
        self.tracks.iter().all(|t| group.exp(&t.base, x, &meter) == t.image)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Message<G: PrimeGroup> {
    CommitKey(G::Element),
    ChallengeCommitment(G::Element),
    SigmaCommitments(Vec<G::Element>),
    ChallengeOpening { e: G::Scalar, blinding: G::Scalar },
    Response(G::Scalar),
}

impl<G: PrimeGroup> Message<G> {
    pub fn tag(&self) -> u8 {
        match self {
            Message::CommitKey(_) => 1,
            Message::ChallengeCommitment(_) => 2,
            Message::SigmaCommitments(_) => 3,
            Message::ChallengeOpening { .. } => 4,
            Message::Response(_) => 5,
        }
    }

    pub fn phase_name(&self) -> &'static str {
        match self {
            Message::CommitKey(_) => "commit-key",
            Message::ChallengeCommitment(_) => "challenge-commitment",
            Message::SigmaCommitments(_) => "sigma-commitments",
            Message::ChallengeOpening { .. } => "challenge-opening",
            Message::Response(_) => "response",
        }
    }

    /// Tag byte followed by fixed-length element/scalar fields.
    pub fn encode(&self, group: &G) -> Vec<u8> {
        let mut bytes = vec![self.tag()];
        match self {
            Message::CommitKey(k) => bytes.extend_from_slice(&group.encode_element(k)),
            Message::ChallengeCommitment(c) => bytes.extend_from_slice(&group.encode_element(c)),
            Message::SigmaCommitments(elems) => {
                for e in elems {
                    bytes.extend_from_slice(&group.encode_element(e));
                }
            }
            Message::ChallengeOpening { e, blinding } => {
                bytes.extend_from_slice(&group.encode_scalar(e));
                bytes.extend_from_slice(&group.encode_scalar(blinding));
            }
            Message::Response(z) => bytes.extend_from_slice(&group.encode_scalar(z)),
        }
        bytes
    }

    pub fn decode(group: &G, bytes: &[u8]) -> Result<Self, CodecError> {
        let (&tag, body) = bytes.split_first().ok_or(CodecError::Truncated)?;
        let elem_len = group.params().element_len;
        let scalar_len = group.params().scalar_len;
        match tag {
            1 | 2 => {
                if body.len() != elem_len {
                    return Err(CodecError::Truncated);
                }
                let e = group.decode_element(body)?;
                Ok(if tag == 1 { Message::CommitKey(e) } else { Message::ChallengeCommitment(e) })
            }
            3 => {
                if body.is_empty() || body.len() % elem_len != 0 {
                    return Err(CodecError::Truncated);
                }
                let elems = body
                    .chunks(elem_len)
                    .map(|c| group.decode_element(c))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Message::SigmaCommitments(elems))
            }
            4 => {
                if body.len() != 2 * scalar_len {
                    return Err(CodecError::Truncated);
                }
                Ok(Message::ChallengeOpening {
                    e: group.decode_scalar(&body[..scalar_len])?,
                    blinding: group.decode_scalar(&body[scalar_len..])?,
                })
            }
            5 => {
                if body.len() != scalar_len {
                    return Err(CodecError::Truncated);
                }
                Ok(Message::Response(group.decode_scalar(body)?))
            }
            other => Err(CodecError::UnknownTag(other)),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("message body does not match the expected fixed-length layout")]
    Truncated,
    #[error("unknown message tag {0}")]
    UnknownTag(u8),
    #[error(transparent)]
    Group(#[from] GroupError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ZkError {
    #[error("{got} message not valid while awaiting {expected}")]
    PhaseError { expected: &'static str, got: &'static str },
    #[error("challenge decommitment does not match the committed challenge")]
    DecommitMismatch,
    #[error("sigma commitment count does not match the statement")]
    ArityMismatch,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProverPhase {
    Start,
    AwaitChallengeCommitment,
    AwaitOpening,
    Done,
    Aborted,
}

/// Prover half of the six-message conversation. One instance runs one proof;
/// the commitment key may be carried over from an earlier instance, which
/// saves its exponentiation.
#[derive(Debug)]
pub struct Prover<G: PrimeGroup> {
    group: G,
    statement: Statement<G>,
    witness: G::Scalar,
    commit_key: G::Element,
    nonce: G::Scalar,
    challenge_commitment: Option<G::Element>,
    phase: ProverPhase,
}

impl<G: PrimeGroup> Prover<G> {
    /// Fresh commitment key; draws tau then the sigma nonce. Charges one
    /// exponentiation for the key.
    pub fn new<R: RngCore + ?Sized>(
        group: &G,
        statement: Statement<G>,
        witness: G::Scalar,
        rng: &mut R,
        meter: &OpMeter,
    ) -> Self {
        let tau = group.random_scalar(rng);
        let commit_key = group.exp(&group.generator(), &tau, meter);
        Self::with_commit_key(group, statement, witness, commit_key, rng)
    }

    /// Reuses an existing commitment key; draws only the sigma nonce.
    pub fn with_commit_key<R: RngCore + ?Sized>(
        group: &G,
        statement: Statement<G>,
        witness: G::Scalar,
        commit_key: G::Element,
        rng: &mut R,
    ) -> Self {
        let nonce = group.random_scalar(rng);
        Self {
            group: group.clone(),
            statement,
            witness,
            commit_key,
            nonce,
            challenge_commitment: None,
            phase: ProverPhase::Start,
        }
    }

    pub fn phase(&self) -> ProverPhase {
        self.phase
    }

    pub fn commit_key(&self) -> &G::Element {
        &self.commit_key
    }

    /// Emits the commitment key, opening the conversation.
    pub fn start(&mut self) -> Result<Message<G>, ZkError> {
        if self.phase != ProverPhase::Start {
            return Err(ZkError::PhaseError { expected: "nothing", got: "start" });
        }
        self.phase = ProverPhase::AwaitChallengeCommitment;
        Ok(Message::CommitKey(self.commit_key.clone()))
    }

    pub fn step(&mut self, incoming: &Message<G>, meter: &OpMeter) -> Result<Message<G>, ZkError> {
        match (self.phase, incoming) {
            (ProverPhase::AwaitChallengeCommitment, Message::ChallengeCommitment(com)) => {
                self.challenge_commitment = Some(com.clone());
                let sigma = self
                    .statement
                    .tracks
                    .iter()
                    .map(|t| self.group.exp(&t.base, &self.nonce, meter))
                    .collect();
                self.phase = ProverPhase::AwaitOpening;
                Ok(Message::SigmaCommitments(sigma))
            }
            (ProverPhase::AwaitOpening, Message::ChallengeOpening { e, blinding }) => {
                let recomputed = self.group.mul(
                    &self.group.exp(&self.group.generator(), blinding, meter),
                    &self.group.exp(&self.commit_key, e, meter),
                );
                if Some(&recomputed) != self.challenge_commitment.as_ref() {
                    self.phase = ProverPhase::Aborted;
                    return Err(ZkError::DecommitMismatch);
                }
                let z = self
                    .group
                    .scalar_add(&self.nonce, &self.group.scalar_mul(e, &self.witness));
                self.phase = ProverPhase::Done;
                Ok(Message::Response(z))
            }
            (phase, msg) => Err(ZkError::PhaseError {
                expected: match phase {
                    ProverPhase::Start => "start",
                    ProverPhase::AwaitChallengeCommitment => "challenge-commitment",
                    ProverPhase::AwaitOpening => "challenge-opening",
                    ProverPhase::Done => "nothing (done)",
                    ProverPhase::Aborted => "nothing (aborted)",
                },
                got: msg.phase_name(),
            }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VerifierPhase {
    AwaitCommitKey,
    AwaitSigmaCommitments,
    AwaitResponse,
    Done,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VerifierStep<G: PrimeGroup> {
    Reply(Message<G>),
    Verdict(bool),
}

/// Verifier half. Draws the challenge and its blinding up front, commits to
/// the challenge before the prover's sigma commitments, and opens it after.
#[derive(Debug)]
pub struct Verifier<G: PrimeGroup> {
    group: G,
    statement: Statement<G>,
    challenge: G::Scalar,
    blinding: G::Scalar,
    commit_key: Option<G::Element>,
    challenge_commitment: Option<G::Element>,
    sigma: Option<Vec<G::Element>>,
    response: Option<G::Scalar>,
    accept: Option<bool>,
    phase: VerifierPhase,
}

impl<G: PrimeGroup> Verifier<G> {
    /// Draws e then the commitment blinding.
    pub fn new<R: RngCore + ?Sized>(group: &G, statement: Statement<G>, rng: &mut R) -> Self {
        let challenge = group.random_scalar(rng);
        let blinding = group.random_scalar(rng);
        Self {
            group: group.clone(),
            statement,
            challenge,
            blinding,
            commit_key: None,
            challenge_commitment: None,
            sigma: None,
            response: None,
            accept: None,
            phase: VerifierPhase::AwaitCommitKey,
        }
    }

    pub fn phase(&self) -> VerifierPhase {
        self.phase
    }

    pub fn step(&mut self, incoming: &Message<G>, meter: &OpMeter) -> Result<VerifierStep<G>, ZkError> {
        match (self.phase, incoming) {
            (VerifierPhase::AwaitCommitKey, Message::CommitKey(k)) => {
                let com = self.group.mul(
                    &self.group.exp(&self.group.generator(), &self.blinding, meter),
                    &self.group.exp(k, &self.challenge, meter),
                );
                self.commit_key = Some(k.clone());
                self.challenge_commitment = Some(com.clone());
                self.phase = VerifierPhase::AwaitSigmaCommitments;
                Ok(VerifierStep::Reply(Message::ChallengeCommitment(com)))
            }
            (VerifierPhase::AwaitSigmaCommitments, Message::SigmaCommitments(sigma)) => {
                if sigma.len() != self.statement.tracks.len() {
                    return Err(ZkError::ArityMismatch);
                }
                self.sigma = Some(sigma.clone());
                self.phase = VerifierPhase::AwaitResponse;
                Ok(VerifierStep::Reply(Message::ChallengeOpening {
                    e: self.challenge.clone(),
                    blinding: self.blinding.clone(),
                }))
            }
            (VerifierPhase::AwaitResponse, Message::Response(z)) => {
                let neg_e = self.group.scalar_neg(&self.challenge);
                let sigma = self.sigma.as_ref().expect("sigma stored");
                let accept = self.statement.tracks.iter().zip(sigma).all(|(t, a)| {
                    let expected = self.group.mul(
                        &self.group.exp(&t.base, z, meter),
                        &self.group.exp(&t.image, &neg_e, meter),
                    );
                    expected == *a
                });
                self.response = Some(z.clone());
                self.accept = Some(accept);
                self.phase = VerifierPhase::Done;
                Ok(VerifierStep::Verdict(accept))
            }
            (phase, msg) => Err(ZkError::PhaseError {
                expected: match phase {
                    VerifierPhase::AwaitCommitKey => "commit-key",
                    VerifierPhase::AwaitSigmaCommitments => "sigma-commitments",
                    VerifierPhase::AwaitResponse => "response",
                    VerifierPhase::Done => "nothing (done)",
                },
                got: msg.phase_name(),
            }),
        }
    }

    /// The full conversation, once the verdict is in.
    pub fn transcript(&self) -> Option<Transcript<G>> {
        Some(Transcript {
            commit_key: self.commit_key.clone()?,
            challenge_commitment: self.challenge_commitment.clone()?,
            sigma: self.sigma.clone()?,
            challenge: self.challenge.clone(),
            blinding: self.blinding.clone(),
            response: self.response.clone()?,
            accept: self.accept?,
        })
    }
}

/// The complete six-message conversation plus the verdict.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transcript<G: PrimeGroup> {
    pub commit_key: G::Element,
    pub challenge_commitment: G::Element,
    pub sigma: Vec<G::Element>,
    pub challenge: G::Scalar,
    pub blinding: G::Scalar,
    pub response: G::Scalar,
    pub accept: bool,
}

impl<G: PrimeGroup> Transcript<G> {
    /// Re-checks the conversation: the challenge commitment opens correctly
    /// and every track equation holds.
    pub fn verify(&self, group: &G, statement: &Statement<G>, meter: &OpMeter) -> bool {
        if self.sigma.len() != statement.tracks.len() {
            return false;
        }
        let com = group.mul(
            &group.exp(&group.generator(), &self.blinding, meter),
            &group.exp(&self.commit_key, &self.challenge, meter),
        );
        if com != self.challenge_commitment {
            return false;
        }
        let neg_e = group.scalar_neg(&self.challenge);
        statement.tracks.iter().zip(&self.sigma).all(|(t, a)| {
            group.mul(&group.exp(&t.base, &self.response, meter), &group.exp(&t.image, &neg_e, meter))
                == *a
        })
    }

    /// Canonical byte string for logging and test vectors.
    pub fn to_bytes(&self, group: &G) -> Vec<u8> {
        let mut bytes = group.encode_element(&self.commit_key);
        bytes.extend_from_slice(&group.encode_element(&self.challenge_commitment));
        for a in &self.sigma {
            bytes.extend_from_slice(&group.encode_element(a));
        }
        bytes.extend_from_slice(&group.encode_scalar(&self.challenge));
        bytes.extend_from_slice(&group.encode_scalar(&self.blinding));
        bytes.extend_from_slice(&group.encode_scalar(&self.response));
        bytes.push(u8::from(self.accept));
        bytes
    }
}

/// Accepting transcript for any statement, true or false, without a witness:
/// choose (e, blinding, z) first and back-compute the sigma commitments. The
/// commitment phase is replayed consistently, so the output distribution
/// matches honest runs exactly.
///
/// Draw order: tau, e, blinding, z.
pub fn simulate<G: PrimeGroup, R: RngCore + ?Sized>(
    group: &G,
    statement: &Statement<G>,
    rng: &mut R,
) -> Transcript<G> {
    let meter = OpMeter::new();
    let tau = group.random_scalar(rng);
    let e = group.random_scalar(rng);
    let blinding = group.random_scalar(rng);
    let z = group.random_scalar(rng);

    let commit_key = group.exp(&group.generator(), &tau, &meter);
    let challenge_commitment = group.mul(
        &group.exp(&group.generator(), &blinding, &meter),
        &group.exp(&commit_key, &e, &meter),
    );
    let neg_e = group.scalar_neg(&e);
    let sigma = statement
        .tracks
        .iter()
        .map(|t| group.mul(&group.exp(&t.base, &z, &meter), &group.exp(&t.image, &neg_e, &meter)))
        .collect();
    Transcript {
        commit_key,
        challenge_commitment,
        sigma,
        challenge: e,
        blinding,
        response: z,
        accept: true,
    }
}

/// Special-soundness extractor: two accepting conversations with the same
/// sigma commitments and distinct challenges reveal the witness
/// x = (z - z') / (e - e').
pub fn extract_witness<G: PrimeGroup>(
    group: &G,
    a: &Transcript<G>,
    b: &Transcript<G>,
) -> Option<G::Scalar> {
    if a.sigma != b.sigma || a.challenge == b.challenge {
        return None;
    }
    let dz = group.scalar_sub(&a.response, &b.response);
    let de = group.scalar_sub(&a.challenge, &b.challenge);
    Some(group.scalar_mul(&dz, &group.scalar_inv(&de)?))
}

/// Drives a prover and verifier to completion in process.
pub fn run<G: PrimeGroup>(
    prover: &mut Prover<G>,
    verifier: &mut Verifier<G>,
    prover_meter: &OpMeter,
    verifier_meter: &OpMeter,
) -> Result<(bool, Transcript<G>), ZkError> {
    let key_msg = prover.start()?;
    let VerifierStep::Reply(commit_msg) = verifier.step(&key_msg, verifier_meter)? else {
        unreachable!("verifier replies to the commit key");
    };
    let sigma_msg = prover.step(&commit_msg, prover_meter)?;
    let VerifierStep::Reply(opening_msg) = verifier.step(&sigma_msg, verifier_meter)? else {
        unreachable!("verifier replies to sigma commitments");
    };
    let response_msg = prover.step(&opening_msg, prover_meter)?;
    let VerifierStep::Verdict(accept) = verifier.step(&response_msg, verifier_meter)? else {
        unreachable!("verifier ends on the response");
    };
    Ok((accept, verifier.transcript().expect("complete conversation")))
}
