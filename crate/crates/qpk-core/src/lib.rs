//! Filter spaces over countable posets, the universal space `P(N)`, finite-rank
//! Borel codes, quasi-metric space codes, and countably presented frames, with
//! explicit conversions between all of them.
//!
//! Everything here is desk-scale and deterministic: infinite objects are
//! rule-based and only ever inspected below an explicit cutoff, stage, or
//! precision. Verdicts about infinite data are three-valued (`Yes`/`No`/
//! `Unknown`) and sound: a definite verdict never retracts as the cutoff
//! grows. Finite instances come with brute-force oracles (`enumerate_filters`,
//! `enumerate_points`, subset sweeps) that the conversion constructions are
//! tested against.

pub mod codes;
pub mod convert;
pub mod frames;
pub mod pairing;
pub mod pn;
pub mod poset;
pub mod qmetric;
pub mod rat;
pub mod sample;

/// Three-valued verdict used by all stage-bounded predicates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Verdict3 {
    Yes,
    No,
    Unknown,
}

impl Verdict3 {
    pub fn is_yes(self) -> bool {
        self == Verdict3::Yes
    }
    pub fn is_no(self) -> bool {
        self == Verdict3::No
    }
    pub fn decided(self) -> bool {
        self != Verdict3::Unknown
    }
    pub fn from_bool(b: bool) -> Self {
        if b {
            Verdict3::Yes
        } else {
            Verdict3::No
        }
    }
}

impl std::fmt::Display for Verdict3 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict3::Yes => write!(f, "yes"),
            Verdict3::No => write!(f, "no"),
            Verdict3::Unknown => write!(f, "unknown"),
        }
    }
}
