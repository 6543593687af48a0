//! Election directory layout and (de)serialization of persistent state.
//!
//! Everything group-valued is stored as hex of its canonical encoding, so
//! state files are portable across runs and diffable in golden tests.
//!
//! ```text
//! <dir>/election.json   public parameters plus the demo tally keys
//! <dir>/server.json     server sessions (server-private)
//! <dir>/board.txt       bulletin-board export, one base64 record per line
//! <dir>/intents.json    what each voter meant to cast (demo bookkeeping)
//! <dir>/qr/voter-N.txt  armored QR payload per voter
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use castaudit_core::board::{BulletinBoard, Confirmation, Signature, SigningKeyPair};
use castaudit_core::elgamal::Ciphertext;
use castaudit_core::group::PrimeGroup;
use castaudit_core::protocol::{
    AuditSession, Election, ElectionConfig, ElectionId, VoterId, VotingServer,
};
use serde::{Deserialize, Serialize};

use crate::config::GroupArg;

#[derive(Serialize, Deserialize)]
pub struct ElectionFile {
    pub group: String,
    pub election_id: String,
    pub alphabet_size: u32,
    pub ballot_length: usize,
    pub allow_revote: bool,
    pub confirmation_codes: bool,
    pub signed_confirmations: bool,
    pub pk: String,
    pub sk: String,
    pub signing_sk: Option<String>,
    pub signing_vk: Option<String>,
}

#[derive(Serialize, Deserialize)]
pub struct ConfirmationFile {
    pub voter_id: String,
    pub ballot_digest: String,
    pub commitment: String,
    pub response: String,
}

#[derive(Serialize, Deserialize)]
pub struct SessionFile {
    pub voter_id: String,
    pub token: String,
    pub ciphertexts: Vec<String>,
    pub blinding: Vec<String>,
    pub commit_key: String,
    pub confirmation: Option<ConfirmationFile>,
    pub confirmation_code: Option<bool>,
}

#[derive(Serialize, Deserialize, Default)]
pub struct ServerFile {
    pub sessions: Vec<SessionFile>,
}

pub struct ElectionDir {
    pub root: PathBuf,
}

impl ElectionDir {
    pub fn new(root: &Path) -> Self {
        Self { root: root.to_path_buf() }
    }

    pub fn election_path(&self) -> PathBuf {
        self.root.join("election.json")
    }

    pub fn server_path(&self) -> PathBuf {
        self.root.join("server.json")
    }

    pub fn board_path(&self) -> PathBuf {
        self.root.join("board.txt")
    }

    pub fn intents_path(&self) -> PathBuf {
        self.root.join("intents.json")
    }

    pub fn qr_path(&self, voter: u64) -> PathBuf {
        self.root.join("qr").join(format!("voter-{voter}.txt"))
    }

    pub fn read_election_file(&self) -> Result<ElectionFile> {
        let path = self.election_path();
        let text = fs::read_to_string(&path)
            .with_context(|| format!("no election at {}", path.display()))?;
        serde_json::from_str(&text).context("election.json does not parse")
    }

    pub fn write_json<T: Serialize>(&self, path: &Path, value: &T) -> Result<()> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(path, serde_json::to_string_pretty(value)?)?;
        Ok(())
    }

    pub fn read_intents(&self) -> Result<BTreeMap<String, Vec<u32>>> {
        match fs::read_to_string(self.intents_path()) {
            Ok(text) => serde_json::from_str(&text).context("intents.json does not parse"),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(BTreeMap::new()),
            Err(e) => Err(e.into()),
        }
    }
}

fn decode_fixed<const N: usize>(hex_str: &str, what: &str) -> Result<[u8; N]> {
    let bytes = hex::decode(hex_str).with_context(|| format!("{what}: bad hex"))?;
    bytes.as_slice().try_into().map_err(|_| anyhow!("{what}: expected {N} bytes"))
}

fn decode_element<G: PrimeGroup>(group: &G, hex_str: &str, what: &str) -> Result<G::Element> {
    let bytes = hex::decode(hex_str).with_context(|| format!("{what}: bad hex"))?;
    group.decode_element(&bytes).map_err(|e| anyhow!("{what}: {e}"))
}

fn decode_scalar<G: PrimeGroup>(group: &G, hex_str: &str, what: &str) -> Result<G::Scalar> {
    let bytes = hex::decode(hex_str).with_context(|| format!("{what}: bad hex"))?;
    group.decode_scalar(&bytes).map_err(|e| anyhow!("{what}: {e}"))
}

pub struct LoadedElection<G: PrimeGroup> {
    pub election: Election<G>,
    pub sk: G::Scalar,
    pub signing: Option<SigningKeyPair<G>>,
}

pub fn election_file<G: PrimeGroup>(
    group_arg: GroupArg,
    group: &G,
    election: &Election<G>,
    sk: &G::Scalar,
    signing: Option<&SigningKeyPair<G>>,
) -> ElectionFile {
    ElectionFile {
        group: group_arg.as_str().to_string(),
        election_id: hex::encode(election.election_id),
        alphabet_size: election.config.alphabet_size,
        ballot_length: election.config.ballot_length,
        allow_revote: election.config.allow_revote,
        confirmation_codes: election.config.confirmation_codes,
        signed_confirmations: election.config.signed_confirmations,
        pk: hex::encode(group.encode_element(&election.pk)),
        sk: hex::encode(group.encode_scalar(sk)),
        signing_sk: signing.map(|s| hex::encode(group.encode_scalar(&s.sk))),
        signing_vk: signing.map(|s| hex::encode(group.encode_element(&s.vk))),
    }
}

pub fn load_election<G: PrimeGroup>(group: G, file: &ElectionFile) -> Result<LoadedElection<G>> {
    let election_id: ElectionId = decode_fixed(&file.election_id, "election_id")?;
    let pk = decode_element(&group, &file.pk, "pk")?;
    let sk = decode_scalar(&group, &file.sk, "sk")?;
    let signing = match (&file.signing_sk, &file.signing_vk) {
        (Some(sk_hex), Some(vk_hex)) => Some(SigningKeyPair {
            sk: decode_scalar(&group, sk_hex, "signing_sk")?,
            vk: decode_element(&group, vk_hex, "signing_vk")?,
        }),
        (None, None) => None,
        _ => bail!("signing key halves are inconsistent"),
    };
    if file.signed_confirmations && signing.is_none() {
        bail!("signed confirmations enabled but no signing key stored");
    }
    let config = ElectionConfig {
        alphabet_size: file.alphabet_size,
        ballot_length: file.ballot_length,
        allow_revote: file.allow_revote,
        confirmation_codes: file.confirmation_codes,
        signed_confirmations: file.signed_confirmations,
    };
    let verification_key = signing.as_ref().map(|s: &SigningKeyPair<G>| s.vk.clone());
    let election = Election::new(group, election_id, pk, verification_key, config)
        .map_err(|e| anyhow!("stored config invalid: {e}"))?;
    Ok(LoadedElection { election, sk, signing })
}

fn confirmation_file<G: PrimeGroup>(group: &G, c: &Confirmation<G>) -> ConfirmationFile {
    ConfirmationFile {
        voter_id: hex::encode(c.voter_id),
        ballot_digest: hex::encode(c.ballot_digest),
        commitment: hex::encode(group.encode_element(&c.signature.commitment)),
        response: hex::encode(group.encode_scalar(&c.signature.response)),
    }
}

fn load_confirmation<G: PrimeGroup>(group: &G, f: &ConfirmationFile) -> Result<Confirmation<G>> {
    Ok(Confirmation {
        voter_id: decode_fixed(&f.voter_id, "confirmation voter_id")?,
        ballot_digest: decode_fixed(&f.ballot_digest, "confirmation digest")?,
        signature: Signature {
            commitment: decode_element(group, &f.commitment, "confirmation commitment")?,
            response: decode_scalar(group, &f.response, "confirmation response")?,
        },
    })
}

pub fn server_file<G: PrimeGroup>(group: &G, server: &VotingServer<G>) -> ServerFile {
    let mut sessions: Vec<SessionFile> = server
        .sessions()
        .map(|s| SessionFile {
            voter_id: hex::encode(s.voter_id),
            token: hex::encode(s.token),
            ciphertexts: s.ciphertexts.iter().map(|c| hex::encode(c.to_bytes(group))).collect(),
            blinding: s.blinding.iter().map(|x| hex::encode(group.encode_scalar(x))).collect(),
            commit_key: hex::encode(group.encode_element(&s.commit_key)),
            confirmation: s.confirmation.as_ref().map(|c| confirmation_file(group, c)),
            confirmation_code: s.confirmation_code,
        })
        .collect();
    sessions.sort_by(|a, b| a.voter_id.cmp(&b.voter_id));
    ServerFile { sessions }
}

/// Rebuilds the voting server from persistent state: sessions from
/// server.json, board re-imported (and re-verified) from its export.
pub fn load_server<G: PrimeGroup>(
    loaded: &LoadedElection<G>,
    server_file: &ServerFile,
    board_export: &str,
) -> Result<VotingServer<G>> {
    let group = loaded.election.group.clone();
    let mut server = VotingServer::new(loaded.election.clone(), loaded.signing.clone());
    if let Some(vk) = &loaded.election.verification_key {
        server.board = BulletinBoard::import(
            &group,
            vk,
            board_export,
            loaded.election.config.allow_revote,
            &castaudit_core::group::OpMeter::new(),
        )
        .map_err(|e| anyhow!("board import failed: {e}"))?;
    }
    for s in &server_file.sessions {
        let voter_id: VoterId = decode_fixed(&s.voter_id, "session voter_id")?;
        let ciphertexts = s
            .ciphertexts
            .iter()
            .map(|c| {
                let bytes = hex::decode(c).context("ciphertext hex")?;
                Ciphertext::from_bytes(&group, &bytes).map_err(|e| anyhow!("ciphertext: {e}"))
            })
            .collect::<Result<Vec<_>>>()?;
        let blinding = s
            .blinding
            .iter()
            .map(|x| decode_scalar(&group, x, "blinding"))
            .collect::<Result<Vec<_>>>()?;
        server.restore_session(AuditSession {
            voter_id,
            token: decode_fixed(&s.token, "token")?,
            ciphertexts,
            blinding,
            commit_key: decode_element(&group, &s.commit_key, "commit_key")?,
            confirmation: s
                .confirmation
                .as_ref()
                .map(|c| load_confirmation(&group, c))
                .transpose()?,
            confirmation_code: s.confirmation_code,
        });
    }
    Ok(server)
}

pub fn persist_server<G: PrimeGroup>(
    dir: &ElectionDir,
    group: &G,
    server: &VotingServer<G>,
) -> Result<()> {
    dir.write_json(&dir.server_path(), &server_file(group, server))?;
    fs::write(dir.board_path(), server.board.export(group))?;
    Ok(())
}
