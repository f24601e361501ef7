//! Integer modes and energy shells.
//!
//! Everything downstream indexes by points of `Z^N`: Fourier frequencies,
//! momenta, and eigenfunction labels of `H = −Δ/2` all live on the same
//! lattice.  Eigenvalues are `|n|²/2`, so shell membership and the resonance
//! condition `k·p + |k|²/2 = 0` are decided in exact integer arithmetic.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LatticeError {
    #[error("energy cutoff must be finite and nonnegative, got {0}")]
    InvalidEnergy(f64),
    #[error("lattice dimension must be at least 1")]
    ZeroDimension,
    #[error("box radius must be nonnegative, got {0}")]
    NegativeRadius(i64),
}

/// A point of `Z^N`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModeIndex(Vec<i64>);

impl ModeIndex {
    pub fn new(components: impl Into<Vec<i64>>) -> Self {
        let components = components.into();
        assert!(!components.is_empty(), "mode index needs at least one component");
        ModeIndex(components)
    }

    pub fn zero(dimension: usize) -> Self {
        assert!(dimension > 0);
        ModeIndex(vec![0; dimension])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn components(&self) -> &[i64] {
        &self.0
    }

    /// Squared Euclidean norm `Σ nᵢ²`.
    pub fn norm_sq(&self) -> i64 {
        self.0.iter().map(|c| c * c).sum()
    }

    /// Sup norm `max |nᵢ|`.
    pub fn sup_norm(&self) -> i64 {
        self.0.iter().map(|c| c.abs()).max().unwrap()
    }

    pub fn dot(&self, other: &ModeIndex) -> i64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch in dot product");
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn add(&self, other: &ModeIndex) -> ModeIndex {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch in mode sum");
        ModeIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &ModeIndex) -> ModeIndex {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch in mode difference");
        ModeIndex(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn neg(&self) -> ModeIndex {
        ModeIndex(self.0.iter().map(|c| -c).collect())
    }
}

impl fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// The sup-norm box `{n ∈ Z^N : |nᵢ| ≤ radius}` in lexicographic order.
///
/// The order fixes a basis of the truncated `ℓ²` space, so every matrix and
/// vector built over a box is reproducible bit for bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModeBox {
    dimension: usize,
    radius: i64,
}

impl ModeBox {
    pub fn new(dimension: usize, radius: i64) -> Result<Self, LatticeError> {
        if dimension == 0 {
            return Err(LatticeError::ZeroDimension);
        }
        if radius < 0 {
            return Err(LatticeError::NegativeRadius(radius));
        }
        Ok(ModeBox { dimension, radius })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn radius(&self) -> i64 {
        self.radius
    }

    /// Number of lattice points, `(2·radius + 1)^N`.
    pub fn len(&self) -> usize {
        let side = (2 * self.radius + 1) as usize;
        side.pow(self.dimension as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, n: &ModeIndex) -> bool {
        n.dim() == self.dimension && n.sup_norm() <= self.radius
    }

    /// Whether every point of `other` lies in `self`.
    pub fn contains_box(&self, other: &ModeBox) -> bool {
        self.dimension == other.dimension && self.radius >= other.radius
    }

    /// Position of `n` in lexicographic order, if it lies in the box.
    pub fn index_of(&self, n: &ModeIndex) -> Option<usize> {
        if !self.contains(n) {
            return None;
        }
        let side = (2 * self.radius + 1) as usize;
        let mut idx = 0usize;
        for c in n.components() {
            idx = idx * side + (c + self.radius) as usize;
        }
        Some(idx)
    }

    /// Inverse of [`index_of`](Self::index_of).  Panics if `idx >= len()`.
    pub fn mode_at(&self, idx: usize) -> ModeIndex {
        assert!(idx < self.len(), "index {idx} out of box of size {}", self.len());
        let side = (2 * self.radius + 1) as usize;
        let mut digits = vec![0i64; self.dimension];
        let mut rest = idx;
        for d in (0..self.dimension).rev() {
            digits[d] = (rest % side) as i64 - self.radius;
            rest /= side;
        }
        ModeIndex(digits)
    }

    pub fn iter(&self) -> impl Iterator<Item = ModeIndex> + '_ {
        (0..self.len()).map(move |i| self.mode_at(i))
    }

    /// Visits components of every box point in lexicographic order without
    /// allocating a `ModeIndex` per point.
    pub fn for_each(&self, mut f: impl FnMut(&[i64])) {
        let mut current = vec![-self.radius; self.dimension];
        loop {
            f(&current);
            let mut d = self.dimension;
            loop {
                if d == 0 {
                    return;
                }
                d -= 1;
                if current[d] < self.radius {
                    current[d] += 1;
                    for c in current.iter_mut().skip(d + 1) {
                        *c = -self.radius;
                    }
                    break;
                }
            }
        }
    }
}

/// Validated energy cutoff for `H = −Δ/2`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct EnergyCutoff(f64);

impl EnergyCutoff {
    pub fn new(value: f64) -> Result<Self, LatticeError> {
        if !value.is_finite() || value < 0.0 {
            return Err(LatticeError::InvalidEnergy(value));
        }
        Ok(EnergyCutoff(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Largest integer appearing as a component of a shell mode: `⌊√⌊2E⌋⌋`.
    ///
    /// `|n|²/2 ≤ E` is equivalent to `|n|² ≤ ⌊2E⌋`, so a box of this radius
    /// contains the whole shell and no smaller box does.
    pub fn shell_radius(self) -> i64 {
        let two_e = (2.0 * self.0).floor();
        if two_e >= i64::MAX as f64 {
            return i64::MAX.isqrt();
        }
        (two_e as i64).isqrt()
    }
}

/// Eigenvalue `|n|²/2` of the free Hamiltonian at mode `n`.
pub fn eigenvalue(n: &ModeIndex) -> f64 {
    n.norm_sq() as f64 / 2.0
}

/// Number of modes with `|n|²/2 ≤ E`, multiplicity counted.
pub fn count_states(cutoff: EnergyCutoff, dimension: usize) -> usize {
    enumerate_energy_shell(cutoff, dimension).len()
}

/// All modes with `|n|²/2 ≤ E`, in lexicographic order.
pub fn enumerate_energy_shell(cutoff: EnergyCutoff, dimension: usize) -> Vec<ModeIndex> {
    assert!(dimension > 0);
    let two_e = (2.0 * cutoff.value()).floor() as i64;
    let shell_box = ModeBox::new(dimension, cutoff.shell_radius()).expect("valid shell box");
    shell_box.iter().filter(|n| n.norm_sq() <= two_e).collect()
}

/// Whether `(k, p)` is resonant for the free flow: `k·p + |k|²/2 = 0`.
///
/// Decided as `2·k·p + |k|² == 0`, which is exact.
pub fn is_resonant(k: &ModeIndex, p: &ModeIndex) -> bool {
    2 * k.dot(p) + k.norm_sq() == 0
}

/// Momenta in `search_box` resonant with frequency `k`, in lexicographic order.
///
/// For `k = 0` this is every momentum; for `k ≠ 0` it is the lattice slice of
/// the affine hyperplane `k·p = −|k|²/2`, empty whenever `|k|²` is odd.
pub fn resonance_set(k: &ModeIndex, search_box: &ModeBox) -> Vec<ModeIndex> {
    assert_eq!(k.dim(), search_box.dimension(), "dimension mismatch in resonance search");
    search_box.iter().filter(|p| is_resonant(k, p)).collect()
}
