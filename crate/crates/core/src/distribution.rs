use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A probability vector `q = (q^a)_{a ∈ A}` over joint actions.
///
/// Masses are nonnegative and sum to one: exactly for rational scalars,
/// within a small tolerance for floating point.
#[derive(Clone, Debug, PartialEq)]
pub struct JointDistribution<T> {
    masses: Vec<T>,
}

impl<T: Scalar> JointDistribution<T> {
    pub fn new(masses: Vec<T>) -> Result<Self> {
        if masses.is_empty() {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        if let Some(pos) = masses.iter().position(|m| *m < T::zero() || !m.is_finite()) {
            return Err(Error::InvalidDistribution(format!("mass {} at index {pos} is invalid", masses[pos])));
        }
        let total = crate::scalar::sum(&masses);
        // Floating-point inputs may carry accumulated rounding.
        let slack = if T::is_exact() { T::zero() } else { T::from_f64(1e-9).unwrap_or_else(T::tolerance) };
        if (total.clone() - T::one()).abs() > slack {
            return Err(Error::InvalidDistribution(format!("masses sum to {total}, not 1")));
        }
        Ok(Self { masses })
    }

    pub fn point_mass(len: usize, index: usize) -> Self {
        let mut masses = vec![T::zero(); len];
        masses[index] = T::one();
        Self { masses }
    }

    pub fn uniform(len: usize) -> Self {
        let w = T::one() / T::from_usize(len).expect("length fits the scalar type");
        Self { masses: vec![w; len] }
    }

    /// Distribution with the listed `(index, mass)` pairs and zero elsewhere.
    pub fn from_sparse(len: usize, entries: &[(usize, T)]) -> Result<Self> {
        let mut masses = vec![T::zero(); len];
        for (index, mass) in entries {
            let slot = masses
                .get_mut(*index)
                .ok_or(Error::DimensionMismatch { expected: len, got: *index + 1 })?;
            *slot = slot.clone() + mass.clone();
        }
        Self::new(masses)
    }

    /// `q^a = count_a / denominator`, used for grid-counted signal strategies.
    pub fn from_counts(counts: &[u64], denominator: u64) -> Self {
        let d = denominator as i64;
        Self { masses: counts.iter().map(|&c| T::from_ratio(c as i64, d)).collect() }
    }

    /// Product distribution of independent per-player mixtures.
    pub fn product(space: &crate::game::ActionSpace, mixtures: &[Vec<T>]) -> Result<Self> {
        if mixtures.len() != space.num_players() {
            return Err(Error::DimensionMismatch { expected: space.num_players(), got: mixtures.len() });
        }
        let masses = (0..space.joint_count())
            .map(|joint| {
                space
                    .decode(joint)
                    .iter()
                    .zip(mixtures)
                    .fold(T::one(), |acc, (&a, p)| acc * p[a].clone())
            })
            .collect();
        Self::new(masses)
    }

    pub fn masses(&self) -> &[T] {
        &self.masses
    }

    pub fn mass(&self, index: usize) -> &T {
        &self.masses[index]
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    /// Indices with positive mass.
    pub fn support(&self) -> Vec<usize> {
        (0..self.masses.len()).filter(|&i| self.masses[i] > T::zero()).collect()
    }

    /// `α·self + (1-α)·other`.
    pub fn mix(&self, other: &Self, alpha: &T) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), got: other.len() });
        }
        let beta = T::one() - alpha.clone();
        Ok(Self {
            masses: self
                .masses
                .iter()
                .zip(&other.masses)
                .map(|(a, b)| alpha.clone() * a.clone() + beta.clone() * b.clone())
                .collect(),
        })
    }

    pub fn to_f64(&self) -> JointDistribution<f64> {
        JointDistribution { masses: self.masses.iter().map(Scalar::to_f64_lossy).collect() }
    }
}
