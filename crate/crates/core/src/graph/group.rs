//! Finitely generated groups with a fixed symmetric generating set.
//!
//! Group elements are canonical integer tuples:
//!
//! * `Z^d`: the coordinate vector.
//! * `F_k`: the reduced word, one entry per letter, `+(i+1)` for `a_i` and
//!   `-(i+1)` for its inverse.
//! * Heisenberg: the triple `(a, b, c)` with product
//!   `(a, b, c)(a', b', c') = (a + a', b + b', c + c' + a b')`.
//!
//! Generators are indexed so that `j ^ 1` is the inverse of generator `j`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The three group families supported by [`GroupSpec`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GroupKind {
    FreeAbelian { rank: usize },
    FreeGroup { rank: usize },
    /// Discrete Heisenberg group with generators `x^{±1}, y^{±1}`.
    Heisenberg,
}

/// A group presentation together with its symmetric generating set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupSpec {
    kind: GroupKind,
}

impl GroupSpec {
    pub fn new(kind: GroupKind) -> Result<Self> {
        match kind {
            GroupKind::FreeAbelian { rank: 0 } | GroupKind::FreeGroup { rank: 0 } => {
                Err(Error::domain("group rank must be positive"))
            }
            _ => Ok(GroupSpec { kind }),
        }
    }

    /// `Z^d` with generators `±e_i`.
    pub fn free_abelian(rank: usize) -> Result<Self> {
        Self::new(GroupKind::FreeAbelian { rank })
    }

    /// Free group on `rank` letters.
    pub fn free_group(rank: usize) -> Result<Self> {
        Self::new(GroupKind::FreeGroup { rank })
    }

    pub fn heisenberg() -> Self {
        GroupSpec {
            kind: GroupKind::Heisenberg,
        }
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    /// Number of generators, i.e. the valence of every Cayley-graph vertex.
    pub fn generator_count(&self) -> usize {
        match self.kind {
            GroupKind::FreeAbelian { rank } | GroupKind::FreeGroup { rank } => 2 * rank,
            GroupKind::Heisenberg => 4,
        }
    }

    /// True for the amenable families (`Z^d` and Heisenberg).
    pub fn is_amenable(&self) -> bool {
        !matches!(self.kind, GroupKind::FreeGroup { rank } if rank >= 2)
    }

    /// Polynomial growth degree when it is known in closed form.
    pub fn polynomial_growth(&self) -> Option<f64> {
        match self.kind {
            GroupKind::FreeAbelian { rank } => Some(rank as f64),
            GroupKind::FreeGroup { rank: 1 } => Some(1.0),
            GroupKind::FreeGroup { .. } => None,
            GroupKind::Heisenberg => Some(4.0),
        }
    }

    /// Canonical label of the identity.
    pub fn identity(&self) -> Vec<i32> {
        match self.kind {
            GroupKind::FreeAbelian { rank } => vec![0; rank],
            GroupKind::FreeGroup { .. } => Vec::new(),
            GroupKind::Heisenberg => vec![0; 3],
        }
    }

    /// Writes `g * s_j` into `out`.
    pub fn mul_generator(&self, g: &[i32], j: usize, out: &mut Vec<i32>) {
        let i = j / 2;
        let sign = if j.is_multiple_of(2) { 1 } else { -1 };
        out.clear();
        out.extend_from_slice(g);
        match self.kind {
            GroupKind::FreeAbelian { .. } => out[i] += sign,
            GroupKind::FreeGroup { .. } => {
                let letter = sign * (i as i32 + 1);
                if out.last() == Some(&-letter) {
                    out.pop();
                } else {
                    out.push(letter);
                }
            }
            GroupKind::Heisenberg => {
                if i == 0 {
                    out[0] += sign;
                } else {
                    out[1] += sign;
                    out[2] += sign * g[0];
                }
            }
        }
    }

    /// Labels of the generators themselves.
    pub fn generators(&self) -> Vec<Vec<i32>> {
        let e = self.identity();
        let mut out = Vec::new();
        (0..self.generator_count())
            .map(|j| {
                self.mul_generator(&e, j, &mut out);
                out.clone()
            })
            .collect()
    }

    /// Checks that the generating set is symmetric and excludes the identity.
    pub fn validate(&self) -> Result<()> {
        let e = self.identity();
        let mut buf = Vec::new();
        let mut back = Vec::new();
        for j in 0..self.generator_count() {
            self.mul_generator(&e, j, &mut buf);
            if buf == e {
                return Err(Error::domain("generator set contains the identity"));
            }
            self.mul_generator(&buf, j ^ 1, &mut back);
            if back != e {
                return Err(Error::domain("generator set is not closed under inverses"));
            }
        }
        Ok(())
    }

    pub fn describe(&self) -> String {
        match self.kind {
            GroupKind::FreeAbelian { rank } => format!("Z^{rank}"),
            GroupKind::FreeGroup { rank } => format!("F_{rank}"),
            GroupKind::Heisenberg => "H3(Z)".to_string(),
        }
    }
}
