//! Brute-force reference for the motion-neutral projection.
//!
//! Solves `min ‖x − delta‖² s.t. ⟨x, m⟩ = 0` by building an explicit
//! orthonormal basis of `m⊥` from a Householder reflection and expanding
//! `delta` in that basis. It never evaluates the closed-form projection, so
//! it can be used to check it.

use crate::error::{Error, Result};
use crate::vector::{check_dims, SemanticVector};

/// The oracle materializes a `dim × dim` matrix; keep it at test scale.
pub const MAX_ORACLE_DIM: usize = 64;

/// Orthonormal basis of the hyperplane orthogonal to `m` (`dim − 1` vectors).
///
/// `H = I − 2vvᵀ/(vᵀv)` with `v = m + sign(m_k)‖m‖e_k` maps `m` onto the
/// axis `k` (the largest-magnitude component, for stability). `H` is
/// symmetric and orthogonal, so its columns other than `k` span `m⊥`.
pub fn complement_basis(m: &SemanticVector) -> Result<Vec<SemanticVector>> {
    let dim = m.dim();
    if dim > MAX_ORACLE_DIM {
        return Err(Error::config(
            "dims",
            format!("oracle supports dim <= {MAX_ORACLE_DIM}, got {dim}"),
        ));
    }
    let norm = m.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::DegenerateTangent);
    }

    let comps = m.as_slice();
    let pivot = (0..dim)
        .max_by(|&a, &b| comps[a].abs().total_cmp(&comps[b].abs()))
        .unwrap_or(0);
    let sign = if comps[pivot] >= 0.0 { 1.0 } else { -1.0 };

    let mut v = comps.to_vec();
    v[pivot] += sign * norm;
    let vtv: f64 = v.iter().map(|x| x * x).sum();

    let mut basis = Vec::with_capacity(dim - 1);
    for j in (0..dim).filter(|&j| j != pivot) {
        // Column j of H: e_j − 2 v v_j / vᵀv
        let f = 2.0 * v[j] / vtv;
        let mut col: Vec<f64> = v.iter().map(|vi| -f * vi).collect();
        col[j] += 1.0;
        basis.push(SemanticVector::from_raw(col));
    }
    Ok(basis)
}

/// Closest vector to `delta` in `m⊥`, computed in the reflected frame.
pub fn qp_projection_oracle(delta: &SemanticVector, m: &SemanticVector) -> Result<SemanticVector> {
    check_dims(delta, m)?;
    let basis = complement_basis(m)?;
    let mut out = vec![0.0; delta.dim()];
    for h in &basis {
        let coeff = delta.dot(h);
        for (o, hi) in out.iter_mut().zip(h.as_slice()) {
            *o += coeff * hi;
        }
    }
    Ok(SemanticVector::from_raw(out))
}
