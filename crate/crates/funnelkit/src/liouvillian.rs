//! Single-excitation Hamiltonian, Lindblad generator, and density-matrix
//! propagation.
//!
//! Basis order is (e, p, c) = (|e,0,0⟩, |g,1,0⟩, |g,0,1⟩). Density matrices
//! are vectorized row-major: component 3i+j holds ρ[i,j]. On this leaky
//! subspace the master equation
//!
//!   dρ/dt = −i[H,ρ] + L_qe[ρ] + L_deph[ρ] + L_p[ρ] + L_c[ρ]
//!
//! is a linear time-invariant map, so the primary propagation path is the
//! eigendecomposition of the 9×9 generator (exact exponentials, immune to
//! the κ₁/Γ₁ ~ 10⁵–10⁷ stiffness). An adaptive Dormand–Prince 5(4) stepper
//! is kept as fallback for parameter points where the eigenvector matrix is
//! ill-conditioned, and as an independent cross-check in tests.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eig, Eigh, Inverse, UPLO};
use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::params::RateParams;

/// Basis indices.
pub const E: usize = 0;
pub const P: usize = 1;
pub const C: usize = 2;

/// Trace threshold defining the auto horizon.
pub const TRACE_FLOOR: f64 = 1e-8;
/// Hard cap on the propagation horizon, in Γ₁⁻¹.
pub const HORIZON_CAP: f64 = 1e4;
/// Default number of logarithmic grid points per run.
pub const DEFAULT_GRID_POINTS: usize = 400;
/// Eigenvector condition number beyond which the generator is treated as
/// defective and the ODE fallback takes over.
pub const DEFECTIVE_COND: f64 = 1e10;

#[derive(Debug, Error)]
pub enum PropagationError {
    #[error("trace failed to decay below {floor:.1e} within t = {cap:.1e} (kappa-less configuration?)")]
    HorizonNotReached { floor: f64, cap: f64 },
    #[error("generator eigenvectors are numerically degenerate (cond = {cond:.3e})")]
    DefectiveGenerator { cond: f64 },
    #[error("adaptive stepper exceeded {0} steps")]
    StepLimit(usize),
}

fn vec_idx(i: usize, j: usize) -> usize {
    3 * i + j
}

/// The single-excitation Hamiltonian: real symmetric, zero diagonal
/// (emitter resonant with both resonators).
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian3(pub Array2<f64>);

/// Matrix realization [[0, g₁, g₀], [g₁, 0, g₂], [g₀, g₂, 0]].
pub fn build_hamiltonian(params: &RateParams) -> Hamiltonian3 {
    let mut h = Array2::zeros((3, 3));
    h[[E, P]] = params.g1;
    h[[P, E]] = params.g1;
    h[[P, C]] = params.g2;
    h[[C, P]] = params.g2;
    h[[E, C]] = params.g0;
    h[[C, E]] = params.g0;
    Hamiltonian3(h)
}

/// Width of the (i, j) density-matrix element: half-widths of both states
/// plus γ* when exactly one of the pair is the emitter.
fn element_width(params: &RateParams, i: usize, j: usize) -> f64 {
    let d = [
        params.gamma1 / 2.0,
        params.kappa1 / 2.0,
        params.kappa2 / 2.0,
    ];
    let mut w = d[i] + d[j];
    if (i == E) != (j == E) {
        w += params.gamma_star();
    }
    w
}

/// A 3×3 complex density matrix on the (e, p, c) basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix3(pub Array2<C64>);

impl DensityMatrix3 {
    pub fn excited() -> Self {
        let mut m = Array2::zeros((3, 3));
        m[[E, E]] = C64::new(1.0, 0.0);
        Self(m)
    }

    pub fn from_vec(v: &Array1<C64>) -> Self {
        let mut m = Array2::zeros((3, 3));
        for i in 0..3 {
            for j in 0..3 {
                m[[i, j]] = v[vec_idx(i, j)];
            }
        }
        Self(m)
    }

    pub fn rho_ee(&self) -> C64 {
        self.0[[E, E]]
    }
    pub fn rho_pp(&self) -> C64 {
        self.0[[P, P]]
    }
    pub fn rho_cc(&self) -> C64 {
        self.0[[C, C]]
    }
    pub fn rho_ep(&self) -> C64 {
        self.0[[E, P]]
    }
    pub fn rho_ec(&self) -> C64 {
        self.0[[E, C]]
    }
    pub fn rho_pc(&self) -> C64 {
        self.0[[P, C]]
    }

    pub fn trace(&self) -> f64 {
        (self.0[[0, 0]] + self.0[[1, 1]] + self.0[[2, 2]]).re
    }

    /// max |ρ − ρ†| over entries.
    pub fn hermiticity_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                worst = worst.max((self.0[[i, j]] - self.0[[j, i]].conj()).norm());
            }
        }
        worst
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let mut herm = Array2::zeros((3, 3));
        for i in 0..3 {
            for j in 0..3 {
                herm[[i, j]] = (self.0[[i, j]] + self.0[[j, i]].conj()) * 0.5;
            }
        }
        let (vals, _) = herm.eigh(UPLO::Lower).expect("3x3 hermitian eigensolve");
        vals.iter().fold(f64::INFINITY, |a, &b| a.min(b))
    }

    /// trace(ρ²) / trace(ρ)², the purity of the subspace-restricted state.
    pub fn purity(&self) -> f64 {
        let sq = self.0.dot(&self.0);
        let tr2 = (sq[[0, 0]] + sq[[1, 1]] + sq[[2, 2]]).re;
        let tr = self.trace();
        tr2 / (tr * tr)
    }
}

/// The vectorized master-equation generator with its eigendecomposition.
#[derive(Debug, Clone)]
pub struct LiouvillianMap {
    pub matrix: Array2<C64>,
    /// Eigenvalues λ_k.
    pub eigenvalues: Array1<C64>,
    /// Right eigenvectors as columns.
    pub eigenvectors: Array2<C64>,
    /// Inverse of the eigenvector matrix (rows are left eigenvectors).
    pub inv_eigenvectors: Array2<C64>,
    /// 1-norm condition estimate of the eigenvector matrix.
    pub condition: f64,
}

fn one_norm(m: &Array2<C64>) -> f64 {
    let (r, c) = m.dim();
    (0..c)
        .map(|j| (0..r).map(|i| m[[i, j]].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Assemble dρ/dt = −i[H,ρ] − (width)∘ρ as a 9×9 matrix over row-major
/// vectorized ρ.
pub fn build_liouvillian(params: &RateParams) -> LiouvillianMap {
    let h = build_hamiltonian(params).0;
    let mut l: Array2<C64> = Array2::zeros((9, 9));
    for i in 0..3 {
        for j in 0..3 {
            let row = vec_idx(i, j);
            for k in 0..3 {
                // −i (H ρ)[i,j] term
                l[[row, vec_idx(k, j)]] += C64::new(0.0, -h[[i, k]]);
                // +i (ρ H)[i,j] term
                l[[row, vec_idx(i, k)]] += C64::new(0.0, h[[k, j]]);
            }
            l[[row, row]] += C64::new(-element_width(params, i, j), 0.0);
        }
    }
    let (vals, vecs) = l.eig().expect("9x9 eigensolve");
    let inv = vecs.inv().expect("eigenvector inverse");
    let condition = one_norm(&vecs) * one_norm(&inv);
    LiouvillianMap {
        matrix: l,
        eigenvalues: vals,
        eigenvectors: vecs,
        inv_eigenvectors: inv,
        condition,
    }
}

impl LiouvillianMap {
    /// Apply the generator to a density matrix, returning dρ/dt.
    pub fn apply(&self, rho: &DensityMatrix3) -> Array2<C64> {
        let mut v: Array1<C64> = Array1::zeros(9);
        for i in 0..3 {
            for j in 0..3 {
                v[vec_idx(i, j)] = rho.0[[i, j]];
            }
        }
        let dv = self.matrix.dot(&v);
        let mut out = Array2::zeros((3, 3));
        for i in 0..3 {
            for j in 0..3 {
                out[[i, j]] = dv[vec_idx(i, j)];
            }
        }
        out
    }

    pub fn is_defective(&self) -> bool {
        !self.condition.is_finite() || self.condition > DEFECTIVE_COND
    }

    pub fn max_eigenvalue_real(&self) -> f64 {
        self.eigenvalues
            .iter()
            .fold(f64::NEG_INFINITY, |a, z| a.max(z.re))
    }
}

/// Eigenmode expansion of the evolved state from ρ(0) = |e,0,0⟩⟨e,0,0|:
/// vec ρ(t) = Σ_k c_k e^{λ_k t} V[:,k].
#[derive(Debug, Clone)]
pub struct EigenPropagator {
    pub eigenvalues: Array1<C64>,
    pub eigenvectors: Array2<C64>,
    /// Mode amplitudes c = V⁻¹ vec ρ(0).
    pub amplitudes: Array1<C64>,
}

impl EigenPropagator {
    pub fn from_map(map: &LiouvillianMap) -> Self {
        let mut rho0: Array1<C64> = Array1::zeros(9);
        rho0[vec_idx(E, E)] = C64::new(1.0, 0.0);
        let amplitudes = map.inv_eigenvectors.dot(&rho0);
        Self {
            eigenvalues: map.eigenvalues.clone(),
            eigenvectors: map.eigenvectors.clone(),
            amplitudes,
        }
    }

    /// Coefficients of a single vectorized component m: ρ_m(t) = Σ_k w_k e^{λ_k t}.
    pub fn component_coeffs(&self, i: usize, j: usize) -> Array1<C64> {
        let m = vec_idx(i, j);
        Array1::from_iter(
            (0..9).map(|k| self.amplitudes[k] * self.eigenvectors[[m, k]]),
        )
    }

    pub fn evaluate_vec(&self, t: f64) -> Array1<C64> {
        let mut v: Array1<C64> = Array1::zeros(9);
        for k in 0..9 {
            let w = self.amplitudes[k] * (self.eigenvalues[k] * t).exp();
            for m in 0..9 {
                v[m] += self.eigenvectors[[m, k]] * w;
            }
        }
        v
    }

    pub fn evaluate(&self, t: f64) -> DensityMatrix3 {
        DensityMatrix3::from_vec(&self.evaluate_vec(t))
    }

    pub fn trace_at(&self, t: f64) -> f64 {
        let v = self.evaluate_vec(t);
        (v[vec_idx(E, E)] + v[vec_idx(P, P)] + v[vec_idx(C, C)]).re
    }
}

/// Which path produced a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropagationMethod {
    Eigendecomposition,
    /// Dormand–Prince fallback; carries the informational defective-generator
    /// condition estimate that triggered it.
    AdaptiveOde,
}

/// Time-grid request for [`propagate_density`].
#[derive(Debug, Clone)]
pub enum GridSpec {
    /// Logarithmic grid with the given point count, horizon chosen so that
    /// trace(ρ(T_max)) ≤ 1e-8.
    Auto { points: usize },
    /// Explicit, strictly increasing times.
    Explicit(Vec<f64>),
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::Auto {
            points: DEFAULT_GRID_POINTS,
        }
    }
}

/// Density-matrix samples over a time grid, plus the evaluator that made
/// them (used downstream to extend correlator grids off the sample points).
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix3>,
    pub t_max: f64,
    /// trace(ρ(T_max)) — what the truncated tail still holds.
    pub truncation_error: f64,
    pub method: PropagationMethod,
    pub params: RateParams,
    evaluator: Option<EigenPropagator>,
}

impl Trajectory {
    /// Evaluate ρ(t) at an arbitrary time. Eigenmode-exact on the
    /// eigendecomposition path; log-linear interpolation of samples on the
    /// ODE path.
    pub fn evaluate(&self, t: f64) -> DensityMatrix3 {
        if let Some(ev) = &self.evaluator {
            return ev.evaluate(t);
        }
        if t <= self.times[0] {
            return self.states[0].clone();
        }
        if t >= *self.times.last().unwrap() {
            return self.states.last().unwrap().clone();
        }
        let k = match self
            .times
            .binary_search_by(|x| x.partial_cmp(&t).unwrap())
        {
            Ok(k) => return self.states[k].clone(),
            Err(k) => k,
        };
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let w = (t - t0) / (t1 - t0);
        let m = &self.states[k - 1].0 * C64::new(1.0 - w, 0.0)
            + &self.states[k].0 * C64::new(w, 0.0);
        DensityMatrix3(m)
    }

    pub fn eigen_propagator(&self) -> Option<&EigenPropagator> {
        self.evaluator.as_ref()
    }

    pub fn population(&self, mode: usize) -> Vec<f64> {
        self.states
            .iter()
            .map(|s| s.0[[mode, mode]].re)
            .collect()
    }
}

/// Smallest time scale worth resolving: 1e-3 over the largest rate present.
fn grid_t_min(params: &RateParams) -> f64 {
    let r_max = [
        params.gamma1 + params.pure_dephasing,
        params.kappa1,
        params.kappa2,
        params.g0,
        params.g1,
        params.g2,
        1.0,
    ]
    .into_iter()
    .fold(0.0f64, f64::max);
    1e-3 / r_max
}

/// {0} ∪ geometric grid from t_min to t_max.
pub fn log_grid(t_min: f64, t_max: f64, points: usize) -> Vec<f64> {
    let n = points.max(2);
    let mut ts = Vec::with_capacity(n + 1);
    ts.push(0.0);
    let ratio = (t_max / t_min).ln();
    for i in 0..n {
        let f = i as f64 / (n - 1) as f64;
        ts.push(t_min * (ratio * f).exp());
    }
    ts[n] = t_max;
    ts
}

/// Find the horizon where trace(ρ) first drops below [`TRACE_FLOOR`], using
/// the eigenmode expansion of the trace.
fn auto_horizon_eigen(prop: &EigenPropagator) -> Result<f64, PropagationError> {
    let tr_coeffs: Vec<C64> = (0..9)
        .map(|k| {
            prop.amplitudes[k]
                * (prop.eigenvectors[[vec_idx(E, E), k]]
                    + prop.eigenvectors[[vec_idx(P, P), k]]
                    + prop.eigenvectors[[vec_idx(C, C), k]])
        })
        .collect();
    // per-mode time to decay below floor/9; the max over modes bounds the sum
    let mut t_needed: f64 = 0.0;
    for (k, c) in tr_coeffs.iter().enumerate() {
        let amp = c.norm();
        if amp <= TRACE_FLOOR / 9.0 {
            continue;
        }
        let rate = -prop.eigenvalues[k].re;
        let t_mode = (amp * 9.0 / TRACE_FLOOR).ln() / rate;
        if !(rate > 0.0) || t_mode > HORIZON_CAP {
            return Err(PropagationError::HorizonNotReached {
                floor: TRACE_FLOOR,
                cap: HORIZON_CAP,
            });
        }
        t_needed = t_needed.max(t_mode);
    }
    let mut t = t_needed.max(1e-6);
    let mut guard = 0;
    while prop.trace_at(t).abs() > TRACE_FLOOR {
        t *= 1.5;
        guard += 1;
        if t > HORIZON_CAP || guard > 200 {
            return Err(PropagationError::HorizonNotReached {
                floor: TRACE_FLOOR,
                cap: HORIZON_CAP,
            });
        }
    }
    Ok(t)
}

/// Solve the master equation from ρ(0) = |e,0,0⟩⟨e,0,0| over the requested
/// grid. Primary path: eigendecomposition of the 9×9 generator; falls back
/// to the adaptive stepper when the eigenvector matrix condition exceeds
/// 1e10.
pub fn propagate_density(
    params: &RateParams,
    grid: &GridSpec,
) -> Result<Trajectory, PropagationError> {
    let map = build_liouvillian(params);
    if map.is_defective() {
        return propagate_adaptive(params, &map, grid);
    }
    let prop = EigenPropagator::from_map(&map);
    let times = match grid {
        GridSpec::Auto { points } => {
            let t_max = auto_horizon_eigen(&prop)?;
            log_grid(grid_t_min(params), t_max, *points)
        }
        GridSpec::Explicit(ts) => ts.clone(),
    };
    let states: Vec<DensityMatrix3> = times.iter().map(|&t| prop.evaluate(t)).collect();
    let t_max = *times.last().unwrap();
    let truncation_error = prop.trace_at(t_max);
    Ok(Trajectory {
        times,
        states,
        t_max,
        truncation_error,
        method: PropagationMethod::Eigendecomposition,
        params: *params,
        evaluator: Some(prop),
    })
}

// --- Dormand–Prince 5(4) adaptive stepper over the 9-component complex state ---

const DP_A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const DP_E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const ODE_RTOL: f64 = 1e-9;
const ODE_ATOL: f64 = 1e-13;
const ODE_MAX_STEPS: usize = 20_000_000;

struct DpState {
    y: Array1<C64>,
    t: f64,
    h: f64,
    k1: Array1<C64>,
}

fn dp_error_norm(err: &Array1<C64>, y0: &Array1<C64>, y1: &Array1<C64>) -> f64 {
    let mut acc = 0.0;
    for m in 0..9 {
        let sc = ODE_ATOL + ODE_RTOL * y0[m].norm().max(y1[m].norm());
        let r = err[m].norm() / sc;
        acc += r * r;
    }
    (acc / 9.0).sqrt()
}

/// One accepted DP5(4) step, shrinking h as needed; h may be capped to hit a
/// grid point exactly.
fn dp_step(l: &Array2<C64>, st: &mut DpState, h_cap: f64) -> Result<(), PropagationError> {
    let mut h = st.h.min(h_cap);
    for _ in 0..60 {
        let mut k = Vec::with_capacity(7);
        k.push(st.k1.clone());
        for s in 0..6 {
            let mut ys = st.y.clone();
            for (j, kj) in k.iter().enumerate() {
                let a = DP_A[s][j];
                if a != 0.0 {
                    ys = ys + kj * C64::new(a * h, 0.0);
                }
            }
            k.push(l.dot(&ys));
        }
        // 5th-order solution uses the same weights as the last tableau row
        let mut y1 = st.y.clone();
        for (j, kj) in k.iter().take(6).enumerate() {
            let b = DP_A[5][j];
            if b != 0.0 {
                y1 = y1 + kj * C64::new(b * h, 0.0);
            }
        }
        let mut err: Array1<C64> = Array1::zeros(9);
        for (j, kj) in k.iter().enumerate() {
            if DP_E[j] != 0.0 {
                err = err + kj * C64::new(DP_E[j] * h, 0.0);
            }
        }
        let en = dp_error_norm(&err, &st.y, &y1);
        if en <= 1.0 {
            st.t += h;
            st.y = y1;
            st.k1 = k.pop().unwrap(); // FSAL
            let grow = (0.9 * en.powf(-0.2)).clamp(0.2, 5.0);
            st.h = h * grow;
            return Ok(());
        }
        h *= (0.9 * en.powf(-0.2)).clamp(0.1, 0.9);
    }
    Err(PropagationError::StepLimit(ODE_MAX_STEPS))
}

fn propagate_adaptive(
    params: &RateParams,
    map: &LiouvillianMap,
    grid: &GridSpec,
) -> Result<Trajectory, PropagationError> {
    let l = &map.matrix;
    let mut y0: Array1<C64> = Array1::zeros(9);
    y0[vec_idx(E, E)] = C64::new(1.0, 0.0);
    let trace_of = |y: &Array1<C64>| -> f64 {
        (y[vec_idx(E, E)] + y[vec_idx(P, P)] + y[vec_idx(C, C)]).re
    };

    let times = match grid {
        GridSpec::Auto { points } => {
            // phase 1: march until the trace crosses the floor
            let mut st = DpState {
                k1: l.dot(&y0),
                y: y0.clone(),
                t: 0.0,
                h: grid_t_min(params),
            };
            let mut steps = 0usize;
            while trace_of(&st.y) > TRACE_FLOOR {
                if st.t > HORIZON_CAP {
                    return Err(PropagationError::HorizonNotReached {
                        floor: TRACE_FLOOR,
                        cap: HORIZON_CAP,
                    });
                }
                dp_step(l, &mut st, f64::INFINITY)?;
                steps += 1;
                if steps > ODE_MAX_STEPS {
                    return Err(PropagationError::StepLimit(ODE_MAX_STEPS));
                }
            }
            log_grid(grid_t_min(params), st.t, *points)
        }
        GridSpec::Explicit(ts) => ts.clone(),
    };

    // phase 2: re-integrate, landing on every grid point exactly
    let mut st = DpState {
        k1: l.dot(&y0),
        y: y0,
        t: 0.0,
        h: grid_t_min(params),
    };
    let mut states = Vec::with_capacity(times.len());
    let mut steps = 0usize;
    for &tg in &times {
        while st.t < tg {
            let cap = tg - st.t;
            // snap onto the grid point once the residual gap is pure roundoff
            if cap <= tg * 1e-14 {
                st.t = tg;
                break;
            }
            dp_step(l, &mut st, cap)?;
            steps += 1;
            if steps > ODE_MAX_STEPS {
                return Err(PropagationError::StepLimit(ODE_MAX_STEPS));
            }
        }
        states.push(DensityMatrix3::from_vec(&st.y));
    }
    let t_max = *times.last().unwrap();
    let truncation_error = trace_of(&st.y);
    Ok(Trajectory {
        times,
        states,
        t_max,
        truncation_error,
        method: PropagationMethod::AdaptiveOde,
        params: *params,
        evaluator: None,
    })
}

/// Force the adaptive path regardless of conditioning (cross-validation).
pub fn propagate_density_adaptive(
    params: &RateParams,
    grid: &GridSpec,
) -> Result<Trajectory, PropagationError> {
    let map = build_liouvillian(params);
    propagate_adaptive(params, &map, grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn baseline() -> RateParams {
        RateParams::baseline()
    }

    #[test]
    fn hamiltonian_matches_matrix_form() {
        let p = RateParams::new(1e4, 0.0, 1e4, 1300.0, 1e5, 600.0).unwrap();
        let h = build_hamiltonian(&p).0;
        assert_eq!(h[[E, P]], 1e4);
        assert_eq!(h[[P, C]], 1300.0);
        assert_eq!(h[[E, C]], 0.0);
        for i in 0..3 {
            assert_eq!(h[[i, i]], 0.0);
        }
    }

    #[test]
    fn hamiltonian_zero_and_symmetric() {
        let p = RateParams::new(0.0, 0.0, 0.0, 0.0, 0.0, 0.0).unwrap();
        assert!(build_hamiltonian(&p).0.iter().all(|&x| x == 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let p = RateParams::new(
                rng.gen_range(0.0..1e4),
                rng.gen_range(0.0..1e3),
                rng.gen_range(0.0..1e5),
                rng.gen_range(0.0..1e4),
                rng.gen_range(0.0..1e6),
                rng.gen_range(0.0..1e4),
            )
            .unwrap();
            let h = build_hamiltonian(&p).0;
            for i in 0..3 {
                for j in 0..3 {
                    assert_eq!(h[[i, j]], h[[j, i]]);
                }
            }
        }
    }

    #[test]
    fn decoupled_derivative_is_pure_emitter_decay() {
        let p = RateParams::new(0.0, 0.0, 0.0, 0.0, 0.0, 0.0).unwrap();
        let map = build_liouvillian(&p);
        let d = map.apply(&DensityMatrix3::excited());
        assert_relative_eq!(d[[E, E]].re, -1.0, max_relative = 1e-14);
        for i in 0..3 {
            for j in 0..3 {
                if (i, j) != (E, E) {
                    assert!(d[[i, j]].norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn ep_coherence_width_is_sum_of_halves_plus_gamma_star() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let p = RateParams::new(
                rng.gen_range(0.0..1e4),
                rng.gen_range(0.0..1e3),
                rng.gen_range(0.0..1e5),
                rng.gen_range(0.0..1e4),
                rng.gen_range(0.0..1e6),
                rng.gen_range(0.0..1e4),
            )
            .unwrap();
            let map = build_liouvillian(&p);
            let row = vec_idx(E, P);
            let diag = map.matrix[[row, row]];
            let expect = p.gamma1 / 2.0 + p.gamma_star() + p.kappa1 / 2.0;
            assert_relative_eq!(-diag.re, expect, max_relative = 1e-13);
            assert!(diag.im.abs() < 1e-13);
        }
    }

    #[test]
    fn trace_derivative_matches_channel_sum() {
        // d(trace)/dt = −(Γ₁ρ_ee + κ₁ρ_pp + κ₂ρ_cc), checked against the
        // direct 9×9 application on random Hermitian ρ
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = baseline();
        let map = build_liouvillian(&p);
        for _ in 0..50 {
            let mut m: Array2<C64> = Array2::zeros((3, 3));
            for i in 0..3 {
                m[[i, i]] = C64::new(rng.gen_range(0.0..1.0), 0.0);
                for j in (i + 1)..3 {
                    let z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    m[[i, j]] = z;
                    m[[j, i]] = z.conj();
                }
            }
            let rho = DensityMatrix3(m);
            let d = map.apply(&rho);
            let dtrace = (d[[0, 0]] + d[[1, 1]] + d[[2, 2]]).re;
            let expect = -(p.gamma1 * rho.rho_ee().re
                + p.kappa1 * rho.rho_pp().re
                + p.kappa2 * rho.rho_cc().re);
            assert_relative_eq!(dtrace, expect, max_relative = 1e-10);
        }
    }

    #[test]
    fn hermitian_input_gives_hermitian_derivative() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let map = build_liouvillian(&baseline());
        for _ in 0..20 {
            let mut m: Array2<C64> = Array2::zeros((3, 3));
            for i in 0..3 {
                m[[i, i]] = C64::new(rng.gen_range(0.0..1.0), 0.0);
                for j in (i + 1)..3 {
                    let z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    m[[i, j]] = z;
                    m[[j, i]] = z.conj();
                }
            }
            let d = map.apply(&DensityMatrix3(m));
            assert!(DensityMatrix3(d).hermiticity_error() < 1e-9);
        }
    }

    #[test]
    fn generator_spectrum_is_dissipative() {
        assert!(build_liouvillian(&baseline()).max_eigenvalue_real() <= 1e-10);
    }

    #[test]
    fn decoupled_trajectory_is_exponential_decay() {
        let p = RateParams::new(0.0, 0.0, 0.0, 0.0, 0.0, 0.0).unwrap();
        let traj = propagate_density(&p, &GridSpec::default()).unwrap();
        for (t, s) in traj.times.iter().zip(&traj.states) {
            assert_relative_eq!(s.rho_ee().re, (-t).exp(), max_relative = 1e-9);
            assert!(s.rho_pp().norm() < 1e-14 && s.rho_cc().norm() < 1e-14);
            assert!(s.rho_ep().norm() < 1e-14);
        }
    }

    #[test]
    fn initial_state_and_horizon() {
        let traj = propagate_density(&baseline(), &GridSpec::default()).unwrap();
        assert_eq!(traj.times[0], 0.0);
        assert_relative_eq!(traj.states[0].rho_ee().re, 1.0, max_relative = 1e-12);
        assert!(traj.truncation_error <= TRACE_FLOOR * 1.01);
        assert!(traj.t_max <= HORIZON_CAP);
    }

    #[test]
    fn quasi_steady_plasmon_population_identity() {
        // rho_pp ≈ (R1 rho_ee + R2 rho_cc)/(kappa1+R1+R2) after the fast
        // transient; the exact master equation carries a stable ~+9% offset
        // against the rate-model identity (oracle-measured 1.09), so the
        // assertion window is 12%.
        let p = baseline();
        let traj = propagate_density(&p, &GridSpec::default()).unwrap();
        let x = crate::analytic::exchange_rates(&p);
        let denom = p.kappa1 + x.r1 + x.r2;
        for &t in &[1e-4, 3e-4, 1e-3] {
            let s = traj.evaluate(t);
            let lhs = s.rho_pp().re;
            let rhs = (x.r1 * s.rho_ee().re + x.r2 * s.rho_cc().re) / denom;
            let ratio = lhs / rhs;
            assert!(
                (ratio - 1.0).abs() < 0.12,
                "t={t}: ratio {ratio} outside 12% window"
            );
        }
    }

    #[test]
    fn trace_non_increasing_on_random_params() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..100 {
            let p = RateParams::new(
                10f64.powf(rng.gen_range(0.0..5.0)),
                if rng.gen_bool(0.5) {
                    0.0
                } else {
                    10f64.powf(rng.gen_range(0.0..3.0))
                },
                10f64.powf(rng.gen_range(2.0..5.0)),
                10f64.powf(rng.gen_range(0.0..4.0)),
                10f64.powf(rng.gen_range(3.0..6.0)),
                10f64.powf(rng.gen_range(0.0..4.0)),
            )
            .unwrap();
            let traj = propagate_density(&p, &GridSpec::Auto { points: 200 }).unwrap();
            let mut prev = f64::INFINITY;
            for s in &traj.states {
                let tr = s.trace();
                assert!(tr <= prev + 1e-10, "trace increased: {prev} -> {tr}");
                prev = tr;
            }
        }
    }

    #[test]
    fn hermiticity_and_positivity_along_baseline_trajectory() {
        let traj = propagate_density(&baseline(), &GridSpec::default()).unwrap();
        for s in &traj.states {
            assert!(s.hermiticity_error() <= 1e-10);
            assert!(s.min_eigenvalue() >= -1e-10);
            assert!(s.trace() <= 1.0 + 1e-10 && s.trace() >= -1e-12);
        }
    }

    #[test]
    fn eigen_and_adaptive_paths_agree_on_baseline() {
        let p = baseline();
        let eig = propagate_density(&p, &GridSpec::Auto { points: 120 }).unwrap();
        assert_eq!(eig.method, PropagationMethod::Eigendecomposition);
        let ode =
            propagate_density_adaptive(&p, &GridSpec::Explicit(eig.times.clone())).unwrap();
        assert_eq!(ode.method, PropagationMethod::AdaptiveOde);
        let mut worst: f64 = 0.0;
        for (a, b) in eig.states.iter().zip(&ode.states) {
            for i in 0..3 {
                for j in 0..3 {
                    worst = worst.max((a.0[[i, j]] - b.0[[i, j]]).norm());
                }
            }
        }
        assert!(worst <= 1e-7, "max-norm deviation {worst}");
    }

    #[test]
    fn zero_dephasing_preserves_purity() {
        let mut p = baseline();
        p.pure_dephasing = 0.0;
        let traj = propagate_density(&p, &GridSpec::default()).unwrap();
        for (t, s) in traj.times.iter().zip(&traj.states) {
            if s.trace() < 1e-5 {
                break;
            }
            let pur = s.purity();
            assert!(
                (pur - 1.0).abs() <= 1e-8,
                "purity {pur} at t={t}"
            );
        }
    }

    #[test]
    fn kappa_less_configuration_reports_horizon_failure() {
        // kappa1 = kappa2 = 0 with g2 << g1: the cavity-like eigenstate only
        // leaks through its tiny emitter admixture, far slower than the cap
        let p = RateParams::new(0.0, 0.0, 1.0, 1e-3, 0.0, 0.0).unwrap();
        let err = propagate_density(&p, &GridSpec::default()).unwrap_err();
        assert!(matches!(err, PropagationError::HorizonNotReached { .. }));
    }
}
