//! Saturating request amounts with an explicit infinity.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Add;

/// A workload (requests per time unit) or a bandwidth bound.
///
/// `Unbounded` compares greater than every finite value and absorbs
/// addition. The derived ordering relies on `Finite` being declared first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Contribution {
    Finite(u64),
    Unbounded,
}

/// Bandwidth bounds share the representation: an unbounded link never
/// constrains a flow.
pub type Bound = Contribution;

impl Contribution {
    pub const ZERO: Contribution = Contribution::Finite(0);

    pub fn is_finite(self) -> bool {
        matches!(self, Contribution::Finite(_))
    }

    pub fn finite(self) -> Option<u64> {
        match self {
            Contribution::Finite(v) => Some(v),
            Contribution::Unbounded => None,
        }
    }

    /// True when a flow of `amount` fits under this bound.
    pub fn admits(self, amount: u64) -> bool {
        match self {
            Contribution::Finite(limit) => amount <= limit,
            Contribution::Unbounded => true,
        }
    }
}

impl Add for Contribution {
    type Output = Contribution;

    fn add(self, rhs: Contribution) -> Contribution {
        match (self, rhs) {
            (Contribution::Finite(a), Contribution::Finite(b)) => {
                a.checked_add(b).map_or(Contribution::Unbounded, Contribution::Finite)
            }
            _ => Contribution::Unbounded,
        }
    }
}

impl From<u64> for Contribution {
    fn from(v: u64) -> Self {
        Contribution::Finite(v)
    }
}

impl fmt::Display for Contribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Contribution::Finite(v) => write!(f, "{v}"),
            Contribution::Unbounded => f.write_str("inf"),
        }
    }
}

/// Running sum over many contributions. The finite part is kept wide so
/// that summing a large fan-in of `u64` values cannot wrap.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub(crate) struct Load {
    finite: u128,
    unbounded: usize,
}

impl Load {
    pub(crate) fn push(&mut self, c: Contribution) {
        match c {
            Contribution::Finite(v) => self.finite += u128::from(v),
            Contribution::Unbounded => self.unbounded += 1,
        }
    }

    pub(crate) fn pop(&mut self, c: Contribution) {
        match c {
            Contribution::Finite(v) => self.finite -= u128::from(v),
            Contribution::Unbounded => self.unbounded -= 1,
        }
    }

    pub(crate) fn exceeds(&self, bound: Contribution) -> bool {
        if self.unbounded > 0 {
            return true;
        }
        match bound {
            Contribution::Finite(b) => self.finite > u128::from(b),
            Contribution::Unbounded => false,
        }
    }

    pub(crate) fn total(&self) -> Contribution {
        if self.unbounded > 0 {
            return Contribution::Unbounded;
        }
        u64::try_from(self.finite).map_or(Contribution::Unbounded, Contribution::Finite)
    }
}

impl PartialOrd<u64> for Contribution {
    fn partial_cmp(&self, other: &u64) -> Option<Ordering> {
        Some(self.cmp(&Contribution::Finite(*other)))
    }
}

impl PartialEq<u64> for Contribution {
    fn eq(&self, other: &u64) -> bool {
        *self == Contribution::Finite(*other)
    }
}
