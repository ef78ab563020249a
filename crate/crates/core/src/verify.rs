//! Seeded property suite for the motion-neutral projection.
//!
//! Every case draws a Gaussian `(delta, m)` pair from its own seed, so a
//! failing case can be replayed with [`case_inputs`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::vector::oracle::{complement_basis, qp_projection_oracle, MAX_ORACLE_DIM};
use crate::vector::{project_motion_neutral_exact, project_motion_neutral_stabilized, SemanticVector, TOL_ORTH};

pub type Projector = fn(&SemanticVector, &SemanticVector) -> Result<SemanticVector>;

pub const ORACLE_REL_TOL: f64 = 1e-6;
pub const OPTIMALITY_TOL: f64 = 1e-9;
pub const RESIDUAL_TOL: f64 = 1e-9;
pub const RESIDUAL_EPS: [f64; 3] = [1.0, 1e-3, 1e-6];
pub const CONVERGENCE_EPS: [f64; 4] = [1.0, 1e-3, 1e-6, 1e-9];

/// Projection with the sign of the correction flipped; a negative control.
pub fn faulty_sign_flip(delta: &SemanticVector, m: &SemanticVector) -> Result<SemanticVector> {
    let m_sq = m.norm_sq();
    if m_sq == 0.0 {
        return Err(Error::DegenerateTangent);
    }
    Ok(delta.minus_scaled(-delta.dot(m) / m_sq, m))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Orthogonality,
    OracleEquivalence,
    MinimumDistortion,
    SemanticPreservation,
    StabilizedResidual,
    StabilizedConvergence,
}

impl Check {
    pub const ALL: [Check; 6] = [
        Check::Orthogonality,
        Check::OracleEquivalence,
        Check::MinimumDistortion,
        Check::SemanticPreservation,
        Check::StabilizedResidual,
        Check::StabilizedConvergence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::Orthogonality => "orthogonality",
            Check::OracleEquivalence => "oracle_equivalence",
            Check::MinimumDistortion => "minimum_distortion",
            Check::SemanticPreservation => "semantic_preservation",
            Check::StabilizedResidual => "stabilized_residual",
            Check::StabilizedConvergence => "stabilized_convergence",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub check: Check,
    pub dim: usize,
    pub cases: usize,
    pub failures: usize,
    /// Largest observed violation margin (≤ 0 means every case passed).
    pub worst_margin: f64,
    pub first_failing_seed: Option<u64>,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub results: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.results.iter().all(CheckResult::passed)
    }
}

pub struct VerifyOptions {
    pub cases: usize,
    pub seed: u64,
    pub dims: Vec<usize>,
    pub feasible_samples: usize,
    pub projector: Projector,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            cases: 1000,
            seed: 0,
            dims: vec![2, 3, 8, 32],
            feasible_samples: 100,
            projector: project_motion_neutral_exact,
        }
    }
}

/// Seed of case `index` in dimension `dim`.
pub fn case_seed(seed: u64, dim: usize, index: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add((dim as u64) << 32)
        .wrapping_add(index as u64)
}

fn gaussian_vec(rng: &mut ChaCha20Rng, dim: usize) -> SemanticVector {
    SemanticVector::from_raw((0..dim).map(|_| rng.sample(StandardNormal)).collect())
}

/// `(delta, m)` for a case seed; `m` is never zero.
pub fn case_inputs(case_seed: u64, dim: usize) -> (SemanticVector, SemanticVector) {
    let mut rng = ChaCha20Rng::seed_from_u64(case_seed);
    let delta = gaussian_vec(&mut rng, dim);
    loop {
        let m = gaussian_vec(&mut rng, dim);
        if m.norm() > 1e-8 {
            return (delta, m);
        }
    }
}

struct Tally {
    check: Check,
    dim: usize,
    cases: usize,
    failures: usize,
    worst_margin: f64,
    first_failing_seed: Option<u64>,
}

impl Tally {
    fn new(check: Check, dim: usize) -> Self {
        Self {
            check,
            dim,
            cases: 0,
            failures: 0,
            worst_margin: f64::NEG_INFINITY,
            first_failing_seed: None,
        }
    }

    /// `margin > 0` is a violation.
    fn record(&mut self, seed: u64, margin: f64) {
        self.cases += 1;
        let margin = if margin.is_nan() { f64::INFINITY } else { margin };
        self.worst_margin = self.worst_margin.max(margin);
        if margin > 0.0 {
            self.failures += 1;
            self.first_failing_seed.get_or_insert(seed);
        }
    }

    fn finish(self) -> CheckResult {
        CheckResult {
            check: self.check,
            dim: self.dim,
            cases: self.cases,
            failures: self.failures,
            worst_margin: self.worst_margin,
            first_failing_seed: self.first_failing_seed,
        }
    }
}

fn combine(basis: &[SemanticVector], coeffs: &[f64], dim: usize) -> SemanticVector {
    let mut out = vec![0.0; dim];
    for (h, c) in basis.iter().zip(coeffs) {
        for (o, x) in out.iter_mut().zip(h.as_slice()) {
            *o += c * x;
        }
    }
    SemanticVector::from_raw(out)
}

pub fn run_suite(opts: &VerifyOptions) -> Result<VerifyReport> {
    if opts.cases == 0 {
        return Err(Error::config("cases", "must be at least 1"));
    }
    let mut results = Vec::new();
    for &dim in &opts.dims {
        if dim == 0 || dim > MAX_ORACLE_DIM {
            return Err(Error::config("dims", format!("each dim must be in 1..={MAX_ORACLE_DIM}, got {dim}")));
        }
        let mut tallies: Vec<Tally> = Check::ALL.iter().map(|&c| Tally::new(c, dim)).collect();
        for index in 0..opts.cases {
            let seed = case_seed(opts.seed, dim, index);
            check_case(opts, seed, dim, &mut tallies)?;
        }
        results.extend(tallies.into_iter().map(Tally::finish));
    }
    Ok(VerifyReport { seed: opts.seed, results })
}

fn check_case(opts: &VerifyOptions, seed: u64, dim: usize, t: &mut [Tally]) -> Result<()> {
    let (delta, m) = case_inputs(seed, dim);
    let projected = (opts.projector)(&delta, &m)?;
    let oracle = qp_projection_oracle(&delta, &m)?;
    let (dn, mn) = (delta.norm(), m.norm());

    // orthogonality
    t[0].record(seed, projected.dot(&m).abs() - TOL_ORTH * dn * mn);

    // oracle agreement, relative to the oracle's norm
    let scale = oracle.norm().max(f64::MIN_POSITIVE);
    t[1].record(seed, projected.sub(&oracle).norm() / scale - ORACLE_REL_TOL);

    // optimality against random feasible points
    let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0xFEA5_1B1E);
    let basis = complement_basis(&m)?;
    let best_dist = projected.sub(&delta).norm();
    let best_resp = projected.dot(&delta);
    let pn = projected.norm();
    let mut worst_dist = f64::NEG_INFINITY;
    let mut worst_resp = f64::NEG_INFINITY;
    for k in 0..opts.feasible_samples {
        let coeffs: Vec<f64> = (0..basis.len()).map(|_| rng.sample(StandardNormal)).collect();
        let mut x = combine(&basis, &coeffs, dim);
        if k % 2 == 1 {
            // near the optimum
            let spread = 10f64.powi(-(k as i32 % 7));
            x = oracle.add(&x.scaled(spread));
        }
        worst_dist = worst_dist.max(best_dist - OPTIMALITY_TOL - x.sub(&delta).norm());

        let xn = x.norm();
        if xn > 0.0 {
            let r: f64 = rng.random_range(0.0..=1.0);
            let x = x.scaled(pn * r / xn);
            worst_resp = worst_resp.max(x.dot(&delta) - best_resp - OPTIMALITY_TOL);
        }
    }
    if opts.feasible_samples > 0 {
        t[2].record(seed, worst_dist);
        t[3].record(seed, worst_resp);
    }

    // stabilized residual identity
    let dm = delta.dot(&m);
    let m_sq = m.norm_sq();
    let mut worst_res = f64::NEG_INFINITY;
    for eps in RESIDUAL_EPS {
        let s = project_motion_neutral_stabilized(&delta, &m, eps)?;
        let expect = eps / (m_sq + eps) * dm;
        worst_res = worst_res.max((s.dot(&m) - expect).abs() - RESIDUAL_TOL);
    }
    t[4].record(seed, worst_res);

    // monotone convergence to the closed form as eps shrinks
    let exact = project_motion_neutral_exact(&delta, &m)?;
    let gaps: Vec<f64> = CONVERGENCE_EPS
        .iter()
        .map(|&eps| project_motion_neutral_stabilized(&delta, &m, eps).map(|s| s.sub(&exact).norm()))
        .collect::<Result<_>>()?;
    let worst_step = gaps.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    t[5].record(seed, worst_step);
    Ok(())
}
