//! The slot permutation group `C_{n/2} × C_2`.
//!
//! Slots are arranged as two rows of `n/2`. Row 0, column `j` holds the
//! evaluation at `zeta^(3^j)`, row 1 at `zeta^(-3^j)`. The automorphism
//! `X -> X^g` with `g = ±3^k` rotates both rows left by `k` and, for the
//! negative sign, swaps them. A cyclic rotation of the whole length-`n`
//! vector is not in the group except by `0` or `n/2`.

use super::PaheError;

/// Group element: rotate both rows left by `rot`, then optionally swap rows.
/// Slot `s = row·n/2 + col` of the result holds the source slot
/// `(row ^ swap)·n/2 + (col + rot) mod n/2`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupElem {
    pub rot: usize,
    pub swap: bool,
}

impl GroupElem {
    pub const IDENTITY: GroupElem = GroupElem {
        rot: 0,
        swap: false,
    };

    pub fn new(n: usize, rot: usize, swap: bool) -> Self {
        Self {
            rot: rot % (n / 2),
            swap,
        }
    }

    pub fn rotation(n: usize, rot: usize) -> Self {
        Self::new(n, rot, false)
    }

    /// Rotation by a possibly negative amount within each row.
    pub fn rotation_signed(n: usize, rot: i64) -> Self {
        Self::new(n, rot.rem_euclid((n / 2) as i64) as usize, false)
    }

    pub fn swap_rows() -> Self {
        Self { rot: 0, swap: true }
    }

    /// Cyclic left rotation of the full length-`n` vector. Only `0` and `n/2`
    /// (the row swap) are realisable.
    pub fn cyclic(n: usize, k: i64) -> Result<Self, PaheError> {
        match k.rem_euclid(n as i64) as usize {
            0 => Ok(Self::IDENTITY),
            h if h == n / 2 => Ok(Self::swap_rows()),
            other => Err(PaheError::UnsupportedPermutation(format!(
                "cyclic rotation by {other} crosses the half boundary of {n} slots"
            ))),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.rot == 0 && !self.swap
    }

    /// `self` followed by `other`; the group is abelian.
    pub fn then(self, other: GroupElem, n: usize) -> Self {
        Self::new(n, self.rot + other.rot, self.swap ^ other.swap)
    }

    pub fn inverse(self, n: usize) -> Self {
        Self::new(n, n / 2 - self.rot, self.swap)
    }

    /// Galois element `g` with `X -> X^g` realising this permutation.
    pub fn galois(&self, n: usize) -> usize {
        let two_n = 2 * n;
        let mut g = 1usize;
        for _ in 0..self.rot {
            g = g * 3 % two_n;
        }
        if self.swap {
            two_n - g
        } else {
            g
        }
    }

    /// Source slot feeding slot `s` after the permutation.
    #[inline]
    pub fn src_slot(&self, n: usize, s: usize) -> usize {
        let h = n / 2;
        let (row, col) = (s / h, s % h);
        let row = row ^ self.swap as usize;
        row * h + (col + self.rot) % h
    }

    /// Destination of source slot `s`.
    #[inline]
    pub fn dst_slot(&self, n: usize, s: usize) -> usize {
        self.inverse(n).src_slot(n, s)
    }

    /// Apply to a plaintext slot vector.
    pub fn apply<T: Copy>(&self, slots: &[T]) -> Vec<T> {
        let n = slots.len();
        (0..n).map(|s| slots[self.src_slot(n, s)]).collect()
    }

    /// Every element of the group, identity first.
    pub fn all(n: usize) -> Vec<GroupElem> {
        let mut v: Vec<GroupElem> = (0..n / 2).map(|k| Self::rotation(n, k)).collect();
        v.extend((0..n / 2).map(|k| Self::new(n, k, true)));
        v
    }
}

impl std::fmt::Display for GroupElem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "rot{}{}", self.rot, if self.swap { "+swap" } else { "" })
    }
}
