//! Length-prefixed binary framing and payload codecs.
//!
//! Frame layout: u32 big-endian total length, then version byte, session
//! token (16), role tag, phase tag, payload. Everything inside payloads is
//! fixed-length canonical group encodings, so decoding needs only the group
//! and the ballot length.

use std::io::{Read, Write};

use castaudit_core::board::{Confirmation, Signature};
use castaudit_core::elgamal::Ciphertext;
use castaudit_core::group::PrimeGroup;
use castaudit_core::protocol::{AuditOffer, BlindMessage, SessionToken, SubmitMessage, VoterId};
use thiserror::Error;

pub const WIRE_VERSION: u8 = 1;
/// Per-message read timeout on socket transports.
pub const DEFAULT_TIMEOUT_SECS: u64 = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum RoleTag {
    VotingDevice = 1,
    VotingServer = 2,
    AuditDevice = 3,
}

impl RoleTag {
    fn from_byte(b: u8) -> Option<Self> {
        match b {
            1 => Some(Self::VotingDevice),
            2 => Some(Self::VotingServer),
            3 => Some(Self::AuditDevice),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum PhaseTag {
    Submit = 1,
    Blind = 2,
    AuditRequest = 3,
    AuditOffer = 4,
    Zk = 5,
    Confirm = 6,
    Fault = 7,
}

impl PhaseTag {
    fn from_byte(b: u8) -> Option<Self> {
        match b {
            1 => Some(Self::Submit),
            2 => Some(Self::Blind),
            3 => Some(Self::AuditRequest),
            4 => Some(Self::AuditOffer),
            5 => Some(Self::Zk),
            6 => Some(Self::Confirm),
            7 => Some(Self::Fault),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            PhaseTag::Submit => "submit",
            PhaseTag::Blind => "blind",
            PhaseTag::AuditRequest => "audit-request",
            PhaseTag::AuditOffer => "audit-offer",
            PhaseTag::Zk => "zk",
            PhaseTag::Confirm => "confirm",
            PhaseTag::Fault => "fault",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WireMessage {
    pub version: u8,
    pub token: SessionToken,
    pub role: RoleTag,
    pub phase: PhaseTag,
    pub payload: Vec<u8>,
}

impl WireMessage {
    pub fn new(token: SessionToken, role: RoleTag, phase: PhaseTag, payload: Vec<u8>) -> Self {
        Self { version: WIRE_VERSION, token, role, phase, payload }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WireError {
    #[error("frame length prefix does not match the input ({detail})")]
    BadLength { detail: &'static str },
    #[error("unknown wire version {0}")]
    UnknownVersion(u8),
    #[error("unknown role or phase tag")]
    UnknownTag,
    #[error("payload does not decode: {0}")]
    BadPayload(&'static str),
    #[error("i/o failure: {0}")]
    Io(String),
}

const HEADER_LEN: usize = 1 + 16 + 1 + 1;

pub fn frame(msg: &WireMessage) -> Vec<u8> {
    let total = HEADER_LEN + msg.payload.len();
    let mut bytes = Vec::with_capacity(4 + total);
    bytes.extend_from_slice(&(total as u32).to_be_bytes());
    bytes.push(msg.version);
    bytes.extend_from_slice(&msg.token);
    bytes.push(msg.role as u8);
    bytes.push(msg.phase as u8);
    bytes.extend_from_slice(&msg.payload);
    bytes
}

/// Decodes exactly one frame; trailing bytes are rejected.
pub fn unframe(bytes: &[u8]) -> Result<WireMessage, WireError> {
    if bytes.len() < 4 {
        return Err(WireError::BadLength { detail: "shorter than the length prefix" });
    }
    let total = u32::from_be_bytes(bytes[..4].try_into().unwrap()) as usize;
    if bytes.len() - 4 < total {
        return Err(WireError::BadLength { detail: "truncated frame" });
    }
    if bytes.len() - 4 > total {
        return Err(WireError::BadLength { detail: "trailing bytes after frame" });
    }
    decode_body(&bytes[4..])
}

fn decode_body(body: &[u8]) -> Result<WireMessage, WireError> {
    if body.len() < HEADER_LEN {
        return Err(WireError::BadLength { detail: "frame shorter than its header" });
    }
    if body[0] != WIRE_VERSION {
        return Err(WireError::UnknownVersion(body[0]));
    }
    let token: SessionToken = body[1..17].try_into().unwrap();
    let role = RoleTag::from_byte(body[17]).ok_or(WireError::UnknownTag)?;
    let phase = PhaseTag::from_byte(body[18]).ok_or(WireError::UnknownTag)?;
    Ok(WireMessage { version: body[0], token, role, phase, payload: body[HEADER_LEN..].to_vec() })
}

pub fn write_frame<W: Write>(writer: &mut W, msg: &WireMessage) -> Result<(), WireError> {
    writer.write_all(&frame(msg)).map_err(|e| WireError::Io(e.to_string()))
}

/// Reads one length-prefixed frame from a stream. `Ok(None)` on clean EOF
/// before a frame starts.
pub fn read_frame<R: Read>(reader: &mut R) -> Result<Option<WireMessage>, WireError> {
    let mut len_bytes = [0u8; 4];
    match reader.read_exact(&mut len_bytes) {
        Ok(()) => {}
        Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(WireError::Io(e.to_string())),
    }
    let total = u32::from_be_bytes(len_bytes) as usize;
    let mut body = vec![0u8; total];
    reader.read_exact(&mut body).map_err(|e| WireError::Io(e.to_string()))?;
    decode_body(&body).map(Some)
}

// payload codecs

fn take<'a>(bytes: &mut &'a [u8], n: usize) -> Result<&'a [u8], WireError> {
    if bytes.len() < n {
        return Err(WireError::BadPayload("payload too short"));
    }
    let (head, tail) = bytes.split_at(n);
    *bytes = tail;
    Ok(head)
}

fn decode_ciphertexts<G: PrimeGroup>(
    group: &G,
    ballot_length: usize,
    bytes: &mut &[u8],
) -> Result<Vec<Ciphertext<G>>, WireError> {
    let ct_len = 2 * group.params().element_len;
    let mut out = Vec::with_capacity(ballot_length);
    for _ in 0..ballot_length {
        let chunk = take(bytes, ct_len)?;
        out.push(
            Ciphertext::from_bytes(group, chunk)
                .map_err(|_| WireError::BadPayload("ciphertext does not decode"))?,
        );
    }
    Ok(out)
}

fn encode_confirmation<G: PrimeGroup>(group: &G, confirmation: &Confirmation<G>) -> Vec<u8> {
    let mut bytes = confirmation.voter_id.to_vec();
    bytes.extend_from_slice(&confirmation.ballot_digest);
    bytes.extend_from_slice(&group.encode_element(&confirmation.signature.commitment));
    bytes.extend_from_slice(&group.encode_scalar(&confirmation.signature.response));
    bytes
}

fn decode_confirmation<G: PrimeGroup>(
    group: &G,
    bytes: &mut &[u8],
) -> Result<Confirmation<G>, WireError> {
    let voter_id: VoterId = take(bytes, 16)?.try_into().unwrap();
    let ballot_digest: [u8; 32] = take(bytes, 32)?.try_into().unwrap();
    let commitment = group
        .decode_element(take(bytes, group.params().element_len)?)
        .map_err(|_| WireError::BadPayload("signature commitment does not decode"))?;
    let response = group
        .decode_scalar(take(bytes, group.params().scalar_len)?)
        .map_err(|_| WireError::BadPayload("signature response does not decode"))?;
    Ok(Confirmation { voter_id, ballot_digest, signature: Signature { commitment, response } })
}

fn encode_optional_confirmation<G: PrimeGroup>(
    group: &G,
    confirmation: &Option<Confirmation<G>>,
) -> Vec<u8> {
    match confirmation {
        Some(c) => {
            let mut bytes = vec![1u8];
            bytes.extend_from_slice(&encode_confirmation(group, c));
            bytes
        }
        None => vec![0u8],
    }
}

fn decode_optional_confirmation<G: PrimeGroup>(
    group: &G,
    bytes: &mut &[u8],
) -> Result<Option<Confirmation<G>>, WireError> {
    match take(bytes, 1)?[0] {
        0 => Ok(None),
        1 => Ok(Some(decode_confirmation(group, bytes)?)),
        _ => Err(WireError::BadPayload("bad confirmation flag")),
    }
}

fn ensure_consumed(bytes: &[u8]) -> Result<(), WireError> {
    if bytes.is_empty() {
        Ok(())
    } else {
        Err(WireError::BadPayload("trailing payload bytes"))
    }
}

pub fn encode_submit<G: PrimeGroup>(group: &G, msg: &SubmitMessage<G>) -> Vec<u8> {
    let mut bytes = msg.voter_id.to_vec();
    for ct in &msg.ciphertexts {
        bytes.extend_from_slice(&ct.to_bytes(group));
    }
    bytes
}

pub fn decode_submit<G: PrimeGroup>(
    group: &G,
    ballot_length: usize,
    mut bytes: &[u8],
) -> Result<SubmitMessage<G>, WireError> {
    let voter_id: VoterId = take(&mut bytes, 16)?.try_into().unwrap();
    let ciphertexts = decode_ciphertexts(group, ballot_length, &mut bytes)?;
    ensure_consumed(bytes)?;
    Ok(SubmitMessage { voter_id, ciphertexts })
}

pub fn encode_blind<G: PrimeGroup>(group: &G, msg: &BlindMessage<G>) -> Vec<u8> {
    let mut bytes = Vec::new();
    for x in &msg.blinding {
        bytes.extend_from_slice(&group.encode_scalar(x));
    }
    bytes.extend_from_slice(&encode_optional_confirmation(group, &msg.confirmation));
    bytes
}

pub fn decode_blind<G: PrimeGroup>(
    group: &G,
    ballot_length: usize,
    token: SessionToken,
    mut bytes: &[u8],
) -> Result<BlindMessage<G>, WireError> {
    let scalar_len = group.params().scalar_len;
    let mut blinding = Vec::with_capacity(ballot_length);
    for _ in 0..ballot_length {
        blinding.push(
            group
                .decode_scalar(take(&mut bytes, scalar_len)?)
                .map_err(|_| WireError::BadPayload("blinding factor does not decode"))?,
        );
    }
    let confirmation = decode_optional_confirmation(group, &mut bytes)?;
    ensure_consumed(bytes)?;
    Ok(BlindMessage { token, blinding, confirmation })
}

pub fn encode_audit_request(election_id: [u8; 16], voter_id: VoterId) -> Vec<u8> {
    let mut bytes = election_id.to_vec();
    bytes.extend_from_slice(&voter_id);
    bytes
}

pub fn decode_audit_request(mut bytes: &[u8]) -> Result<([u8; 16], VoterId), WireError> {
    let election_id: [u8; 16] = take(&mut bytes, 16)?.try_into().unwrap();
    let voter_id: VoterId = take(&mut bytes, 16)?.try_into().unwrap();
    ensure_consumed(bytes)?;
    Ok((election_id, voter_id))
}

pub fn encode_offer<G: PrimeGroup>(group: &G, offer: &AuditOffer<G>) -> Vec<u8> {
    let mut bytes = Vec::new();
    for ct in offer.ciphertexts.iter().chain(&offer.rerandomized) {
        bytes.extend_from_slice(&ct.to_bytes(group));
    }
    bytes.extend_from_slice(&encode_optional_confirmation(group, &offer.confirmation));
    bytes
}

pub fn decode_offer<G: PrimeGroup>(
    group: &G,
    ballot_length: usize,
    mut bytes: &[u8],
) -> Result<AuditOffer<G>, WireError> {
    let ciphertexts = decode_ciphertexts(group, ballot_length, &mut bytes)?;
    let rerandomized = decode_ciphertexts(group, ballot_length, &mut bytes)?;
    let confirmation = decode_optional_confirmation(group, &mut bytes)?;
    ensure_consumed(bytes)?;
    Ok(AuditOffer { ciphertexts, rerandomized, confirmation })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum FaultCode {
    DuplicateBallot = 1,
    UnknownSession = 2,
    WrongBallotLength = 3,
    Malformed = 4,
    BoardRejected = 5,
    ProofAborted = 6,
}

impl FaultCode {
    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            1 => Some(Self::DuplicateBallot),
            2 => Some(Self::UnknownSession),
            3 => Some(Self::WrongBallotLength),
            4 => Some(Self::Malformed),
            5 => Some(Self::BoardRejected),
            6 => Some(Self::ProofAborted),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            FaultCode::DuplicateBallot => "DuplicateBallot",
            FaultCode::UnknownSession => "UnknownSession",
            FaultCode::WrongBallotLength => "WrongBallotLength",
            FaultCode::Malformed => "Malformed",
            FaultCode::BoardRejected => "BoardRejected",
            FaultCode::ProofAborted => "ProofAborted",
        }
    }
}

pub fn encode_fault(code: FaultCode) -> Vec<u8> {
    vec![code as u8]
}

pub fn decode_fault(bytes: &[u8]) -> Result<FaultCode, WireError> {
    if bytes.len() != 1 {
        return Err(WireError::BadPayload("fault payload must be one byte"));
    }
    FaultCode::from_byte(bytes[0]).ok_or(WireError::BadPayload("unknown fault code"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use castaudit_core::group::TinyGroup;

    fn sample() -> WireMessage {
        WireMessage::new([3; 16], RoleTag::AuditDevice, PhaseTag::Zk, vec![1, 2, 3])
    }

    #[test]
    fn frame_roundtrip() {
        let msg = sample();
        assert_eq!(unframe(&frame(&msg)).unwrap(), msg);
    }

    #[test]
    fn random_messages_roundtrip() {
        // cheap linear congruential bytes; the codec must not care
        let mut state = 1u64;
        for i in 0..1000u16 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let len = (state % 64) as usize;
            let payload: Vec<u8> = (0..len).map(|j| (state as u8).wrapping_add(j as u8)).collect();
            let msg = WireMessage::new(
                [(i % 251) as u8; 16],
                RoleTag::VotingServer,
                PhaseTag::Fault,
                payload,
            );
            assert_eq!(unframe(&frame(&msg)).unwrap(), msg);
        }
    }

    #[test]
    fn rejects_bad_frames() {
        let bytes = frame(&sample());
        assert!(matches!(unframe(&bytes[..bytes.len() - 1]), Err(WireError::BadLength { .. })));
        let mut long = bytes.clone();
        long.push(0);
        assert!(matches!(unframe(&long), Err(WireError::BadLength { .. })));

        let mut bad_version = bytes.clone();
        bad_version[4] = 0xff;
        assert_eq!(unframe(&bad_version).unwrap_err(), WireError::UnknownVersion(0xff));

        let mut bad_role = bytes;
        bad_role[4 + 17] = 9;
        assert_eq!(unframe(&bad_role).unwrap_err(), WireError::UnknownTag);
    }

    #[test]
    fn stream_reader_roundtrip() {
        let a = sample();
        let b = WireMessage::new([0; 16], RoleTag::VotingDevice, PhaseTag::Submit, vec![]);
        let mut buf = frame(&a);
        buf.extend_from_slice(&frame(&b));
        let mut cursor = std::io::Cursor::new(buf);
        assert_eq!(read_frame(&mut cursor).unwrap().unwrap(), a);
        assert_eq!(read_frame(&mut cursor).unwrap().unwrap(), b);
        assert_eq!(read_frame(&mut cursor).unwrap(), None);
    }

    #[test]
    fn payload_codecs_roundtrip() {
        use castaudit_core::elgamal::encrypt;
        use castaudit_core::group::OpMeter;

        let group = TinyGroup;
        let meter = OpMeter::new();
        let pk = group.exp(&group.generator(), &TinyGroup::scalar(3), &meter);
        let ct = encrypt(&group, &pk, &TinyGroup::element(4).unwrap(), &TinyGroup::scalar(2), &meter);

        let submit = SubmitMessage { voter_id: [1; 16], ciphertexts: vec![ct.clone()] };
        let bytes = encode_submit(&group, &submit);
        assert_eq!(decode_submit(&group, 1, &bytes).unwrap(), submit);
        assert!(decode_submit::<TinyGroup>(&group, 2, &bytes).is_err());

        let blind = BlindMessage::<TinyGroup> {
            token: [9; 16],
            blinding: vec![TinyGroup::scalar(1)],
            confirmation: None,
        };
        let bytes = encode_blind(&group, &blind);
        assert_eq!(decode_blind(&group, 1, [9; 16], &bytes).unwrap(), blind);

        let offer = AuditOffer {
            ciphertexts: vec![ct.clone()],
            rerandomized: vec![ct],
            confirmation: None,
        };
        let bytes = encode_offer(&group, &offer);
        assert_eq!(decode_offer(&group, 1, &bytes).unwrap(), offer);

        let (eid, vid) = decode_audit_request(&encode_audit_request([5; 16], [6; 16])).unwrap();
        assert_eq!((eid, vid), ([5; 16], [6; 16]));

        assert_eq!(decode_fault(&encode_fault(FaultCode::UnknownSession)).unwrap(), FaultCode::UnknownSession);
    }
}
