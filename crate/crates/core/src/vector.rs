//! Semantic vectors and the motion-neutral projection.
//!
//! Everything here is a pure function of its inputs. The projection removes
//! the component of a prompt displacement that lies along the local cache
//! tangent, so an injected update does not disturb first-order motion.

use std::fmt;
use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub mod oracle;

/// Orthogonality tolerance, scaled by `‖delta‖·‖m‖` at the call site.
pub const TOL_ORTH: f64 = 1e-9;

/// Default relative stabilizer for [`project_motion_neutral_stabilized`],
/// multiplied by the mean squared component of the tangent.
pub const DEFAULT_EPS_REL: f64 = 1e-6;

/// A finite real vector in a head's value-cache space.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SemanticVector(Vec<f64>);

impl SemanticVector {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Empty("semantic vector needs at least one component"));
        }
        if let Some(index) = components.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self(components))
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "zero-dimensional semantic vector");
        Self(vec![0.0; dim])
    }

    /// Wraps components produced by arithmetic on already-valid vectors.
    pub(crate) fn from_raw(components: Vec<f64>) -> Self {
        debug_assert!(!components.is_empty());
        Self(components)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0.0)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::from_raw(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_raw(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self::from_raw(self.0.iter().map(|a| a * k).collect())
    }

    /// `self - k·other`
    pub fn minus_scaled(&self, k: f64, other: &Self) -> Self {
        Self::from_raw(self.0.iter().zip(&other.0).map(|(a, b)| a - k * b).collect())
    }

    /// Convex-style blend `(1 − g)·self + g·other`.
    pub fn blend(&self, other: &Self, g: f64) -> Self {
        let keep = 1.0 - g;
        Self::from_raw(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| keep * a + g * b)
                .collect(),
        )
    }

    /// Mean of squared components.
    pub fn mean_sq(&self) -> f64 {
        self.norm_sq() / self.dim() as f64
    }

    /// Arithmetic mean of a non-empty set of equal-dimension vectors.
    pub fn mean<'a, I>(vectors: I) -> Option<Self>
    where
        I: IntoIterator<Item = &'a SemanticVector>,
    {
        let mut iter = vectors.into_iter();
        let first = iter.next()?;
        let mut acc = first.0.clone();
        let mut count = 1usize;
        for v in iter {
            debug_assert_eq!(v.dim(), acc.len());
            for (a, b) in acc.iter_mut().zip(&v.0) {
                *a += b;
            }
            count += 1;
        }
        let inv = 1.0 / count as f64;
        acc.iter_mut().for_each(|a| *a *= inv);
        Some(Self::from_raw(acc))
    }
}

impl fmt::Debug for SemanticVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.0).finish()
    }
}

impl Index<usize> for SemanticVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl TryFrom<Vec<f64>> for SemanticVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<SemanticVector> for Vec<f64> {
    fn from(v: SemanticVector) -> Self {
        v.0
    }
}

/// Transition quantities computed at one prompt switch for one head.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionSignal {
    pub delta: SemanticVector,
    pub delta_perp: SemanticVector,
    pub strength: f64,
    pub tangent: SemanticVector,
}

pub(crate) fn check_dims(a: &SemanticVector, b: &SemanticVector) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    Ok(())
}

/// Cosine similarity clamped to [-1, 1]; 0 when either side has zero norm.
pub fn cosine(a: &SemanticVector, b: &SemanticVector) -> f64 {
    let denom = a.norm() * b.norm();
    if denom == 0.0 {
        return 0.0;
    }
    (a.dot(b) / denom).clamp(-1.0, 1.0)
}

/// Prompt transition signal `curr − prev`.
pub fn prompt_delta(prev: &SemanticVector, curr: &SemanticVector) -> Result<SemanticVector> {
    check_dims(prev, curr)?;
    Ok(curr.sub(prev))
}

/// Cosine-based switch strength `1 − cos(prev, curr)`, in [0, 2].
///
/// A zero-norm signature carries no semantic information and yields 0.
pub fn switch_strength(prev: &SemanticVector, curr: &SemanticVector) -> Result<f64> {
    check_dims(prev, curr)?;
    if prev.is_zero() || curr.is_zero() {
        return Ok(0.0);
    }
    Ok((1.0 - cosine(prev, curr)).clamp(0.0, 2.0))
}

/// Finite-difference cache tangent `v_curr − v_prev`.
pub fn motion_tangent(v_prev: &SemanticVector, v_curr: &SemanticVector) -> Result<SemanticVector> {
    check_dims(v_prev, v_curr)?;
    Ok(v_curr.sub(v_prev))
}

/// Closed-form projection of `delta` onto the orthogonal complement of `m`.
pub fn project_motion_neutral_exact(
    delta: &SemanticVector,
    m: &SemanticVector,
) -> Result<SemanticVector> {
    check_dims(delta, m)?;
    let m_sq = m.norm_sq();
    if m_sq == 0.0 {
        return Err(Error::DegenerateTangent);
    }
    Ok(delta.minus_scaled(delta.dot(m) / m_sq, m))
}

/// Projection with `eps` added to `‖m‖²`.
///
/// Leaves a residual `⟨result, m⟩ = eps/(‖m‖² + eps)·⟨delta, m⟩` and never
/// increases the norm of `delta`, however small `m` is.
pub fn project_motion_neutral_stabilized(
    delta: &SemanticVector,
    m: &SemanticVector,
    eps: f64,
) -> Result<SemanticVector> {
    check_dims(delta, m)?;
    if eps.is_nan() || eps <= 0.0 || eps.is_infinite() {
        return Err(Error::config("eps_stabilized", format!("must be a positive finite number, got {eps}")));
    }
    let coeff = delta.dot(m) / (m.norm_sq() + eps);
    Ok(delta.minus_scaled(coeff, m))
}

/// Absolute stabilizer for a tangent: `eps_rel · mean(m_i²)`, floored at the
/// smallest positive normal so a zero tangent still gets a valid epsilon.
pub fn stabilizer_eps(m: &SemanticVector, eps_rel: f64) -> f64 {
    (eps_rel * m.mean_sq()).max(f64::MIN_POSITIVE)
}

/// Full transition computation for one head using the stabilized projection.
pub fn transition_signal(
    prev: &SemanticVector,
    curr: &SemanticVector,
    tangent: SemanticVector,
    eps_rel: f64,
) -> Result<TransitionSignal> {
    let delta = prompt_delta(prev, curr)?;
    let strength = switch_strength(prev, curr)?;
    let eps = stabilizer_eps(&tangent, eps_rel);
    let delta_perp = project_motion_neutral_stabilized(&delta, &tangent, eps)?;
    Ok(TransitionSignal {
        delta,
        delta_perp,
        strength,
        tangent,
    })
}
