//! Cross-representation constructions: poset ↔ Π⁰₂, quasi-metric ↔ poset,
//! frame ↔ Π⁰₂, and dense sequences.

mod dense;
mod frame_pi02;
mod pi02_poset;
mod qm_poset;
mod uf_pi02;

pub use dense::{dense_sequence, DenseKind};
pub use frame_pi02::{frame_to_pi02, pi02_to_frame};
pub use pi02_poset::{pi02_to_npuf, pi02_to_uf, npuf_to_pi02, ExplicitPi02, Pi02ToPoset};
pub use qm_poset::{pi02_to_qm, qm_to_uf, QmUfIso};
pub use uf_pi02::{uf_to_pi02, UfToPi02};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConvertError {
    #[error("poset fails the handy check at {0:?}")]
    NotHandy(Vec<u64>),
    #[error("code does not carry explicit constituent enumerations")]
    MissingConstituents,
    #[error("metric is not exact rational")]
    InexactMetric,
    #[error("space has no limit operator")]
    NoLimitOperator,
    #[error("code kind does not match the requested construction")]
    KindMismatch,
    #[error("disjointness of the constituent pairs is not certified")]
    DisjointnessUnknown,
    #[error("no distance oracle for constituent {0}")]
    OracleMissing(usize),
    #[error(transparent)]
    Code(#[from] crate::codes::CodeError),
    #[error(transparent)]
    Qm(#[from] crate::qmetric::QmError),
    #[error(transparent)]
    Poset(#[from] crate::poset::PosetError),
}
