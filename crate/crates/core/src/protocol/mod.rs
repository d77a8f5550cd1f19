//! Two-party inference: the server holds the weights, the client holds the
//! input. Linear layers run on encrypted client data, activations in garbled
//! circuits (or, for squares, on additive shares via one more encrypted
//! round trip). Between layers the activations are additively shared,
//! `x = client + server mod p`.

mod fixed;
pub mod gadgets;
mod network;
pub mod plan;
mod session;
pub mod wire;

pub use fixed::FixedPoint;
pub use network::{random_image, Layer, Network, Shape, FORMAT_VERSION};
pub use plan::{Compiled, Step};
pub use session::{
    classify, expected_transcript, lint_transcript, run_local, serve, ClientReport, LocalRun,
    NoiseRecord, ServerReport, SessionConfig,
};
pub use wire::{Channel, Direction, Entry, MsgType, Phase, Transcript};

use crate::conv::ConvError;
use crate::gc::GcError;
use crate::linalg::LinalgError;
use crate::pahe::PaheError;

#[derive(Debug, thiserror::Error)]
pub enum ProtocolError {
    #[error("network: {0}")]
    Network(String),
    #[error("wire: {0}")]
    Wire(String),
    #[error("protocol version mismatch: ours {ours}, peer {theirs}")]
    Version { ours: u16, theirs: u16 },
    #[error("peer reported: {0}")]
    Remote(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Pahe(#[from] PaheError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Conv(#[from] ConvError),
    #[error(transparent)]
    Gc(#[from] GcError),
}

/// Which side of the computation a share belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Party {
    Server,
    Client,
}

/// One party's additive share of a vector over `Z_p`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShareVector {
    pub party: Party,
    pub p: u64,
    pub values: Vec<u64>,
}

impl ShareVector {
    pub fn new(party: Party, p: u64, values: Vec<u64>) -> Self {
        Self { party, p, values }
    }

    /// `self + other mod p`; the two shares must belong to different parties.
    pub fn reconstruct(&self, other: &ShareVector) -> Vec<u64> {
        assert_ne!(self.party, other.party, "two shares of the same party");
        assert_eq!(
            self.values.len(),
            other.values.len(),
            "share lengths differ"
        );
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a + b) % self.p)
            .collect()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}
