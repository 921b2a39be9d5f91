//! Retarded Green's function and two-time output-mode correlators.
//!
//! The Dyson resolvent (ω − H − Σ^r)⁻¹ with the diagonal self-energy
//! Σ^r = −i·diag(Γ₁/2+γ*, κ₁/2, κ₂/2) is realized in the time domain as
//! G^r(τ) = exp(Mτ), M = −i(H + Σ^r), normalized so G^r(0) = 1. The
//! frequency-domain form is kept only as a consistency check:
//! ∫₀^∞ −i G^r(τ) e^{iωτ} dτ = (ω − H − Σ^r)⁻¹.
//!
//! Two-time correlators follow the Kadanoff–Baym product decomposition; for
//! the cavity mode
//!
//!   ⟨b†(t+τ) b(t)⟩ = G_ce(τ)ρ_ec(t) + G_cp(τ)ρ_pc(t) + G_cc(τ)ρ_cc(t),
//!
//! and the plasmon mode uses the analogous row-p expression.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eig, Inverse};
use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::liouvillian::{build_hamiltonian, log_grid, GridSpec, Trajectory, C, E, HORIZON_CAP, P};
use crate::params::RateParams;

/// Tail threshold for the τ grid: the horizon extends until max|G^r| drops
/// below this.
pub const GREENS_TAIL: f64 = 1e-9;
/// Population tail threshold for correlator t-grids, relative to the peak.
pub const POPULATION_TAIL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum GreensError {
    #[error("effective generator eigenvectors are numerically degenerate (cond = {cond:.3e})")]
    DefectiveGenerator { cond: f64 },
    #[error("trajectory and propagator were built from different parameters")]
    GridMismatch,
}

/// Which output mode the correlator monitors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputMode {
    Cavity,
    Plasmon,
}

impl OutputMode {
    pub fn index(&self) -> usize {
        match self {
            OutputMode::Cavity => C,
            OutputMode::Plasmon => P,
        }
    }

    /// The decay rate that converts this mode's population integral into an
    /// extraction efficiency.
    pub fn kappa(&self, params: &RateParams) -> f64 {
        match self {
            OutputMode::Cavity => params.kappa2,
            OutputMode::Plasmon => params.kappa1,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            OutputMode::Cavity => "cavity",
            OutputMode::Plasmon => "plasmon",
        }
    }
}

/// M = −iH − diag(Γ₁/2+γ*, κ₁/2, κ₂/2), with its eigendecomposition.
#[derive(Debug, Clone)]
pub struct EffectiveGenerator {
    pub matrix: Array2<C64>,
    pub eigenvalues: Array1<C64>,
    pub eigenvectors: Array2<C64>,
    pub inv_eigenvectors: Array2<C64>,
    pub condition: f64,
    pub params: RateParams,
}

fn one_norm(m: &Array2<C64>) -> f64 {
    let (r, c) = m.dim();
    (0..c)
        .map(|j| (0..r).map(|i| m[[i, j]].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn effective_generator(params: &RateParams) -> EffectiveGenerator {
    let h = build_hamiltonian(params).0;
    let widths = [
        params.gamma1 / 2.0 + params.gamma_star(),
        params.kappa1 / 2.0,
        params.kappa2 / 2.0,
    ];
    let mut m: Array2<C64> = Array2::zeros((3, 3));
    for i in 0..3 {
        for j in 0..3 {
            m[[i, j]] = C64::new(0.0, -h[[i, j]]);
        }
        m[[i, i]] += C64::new(-widths[i], 0.0);
    }
    let (vals, vecs) = m.eig().expect("3x3 eigensolve");
    let inv = vecs.inv().expect("eigenvector inverse");
    let condition = one_norm(&vecs) * one_norm(&inv);
    EffectiveGenerator {
        matrix: m,
        eigenvalues: vals,
        eigenvectors: vecs,
        inv_eigenvectors: inv,
        condition,
        params: *params,
    }
}

impl EffectiveGenerator {
    pub fn is_defective(&self) -> bool {
        !self.condition.is_finite() || self.condition > crate::liouvillian::DEFECTIVE_COND
    }

    pub fn max_eigenvalue_real(&self) -> f64 {
        self.eigenvalues
            .iter()
            .fold(f64::NEG_INFINITY, |a, z| a.max(z.re))
    }

    /// Magnitude of the slowest decay rate, min(−Re μ).
    pub fn min_decay_rate(&self) -> f64 {
        self.eigenvalues
            .iter()
            .fold(f64::INFINITY, |a, z| a.min(-z.re))
    }

    /// exp(Mτ) — eigenbasis when well-conditioned, scaling-and-squaring
    /// otherwise.
    pub fn evaluate(&self, tau: f64) -> Array2<C64> {
        if self.is_defective() {
            return expm3(&(&self.matrix * C64::new(tau, 0.0)));
        }
        let mut g: Array2<C64> = Array2::zeros((3, 3));
        for a in 0..3 {
            let w = (self.eigenvalues[a] * tau).exp();
            for i in 0..3 {
                let uw = self.eigenvectors[[i, a]] * w;
                for j in 0..3 {
                    g[[i, j]] += uw * self.inv_eigenvectors[[a, j]];
                }
            }
        }
        g
    }

    /// The Dyson resolvent (ω − H − Σ^r)⁻¹ = (ωI − iM)⁻¹.
    pub fn resolvent(&self, omega: f64) -> Array2<C64> {
        let mut a: Array2<C64> = &self.matrix * C64::new(0.0, -1.0);
        for i in 0..3 {
            a[[i, i]] += C64::new(omega, 0.0);
        }
        a.inv().expect("resolvent inverse")
    }
}

/// Padé(13) scaling-and-squaring matrix exponential for 3×3 complex input.
pub fn expm3(m: &Array2<C64>) -> Array2<C64> {
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    let norm = one_norm(m);
    let s = if norm > 5.4 {
        ((norm / 5.4).log2().ceil() as i32).max(0)
    } else {
        0
    };
    let a = m / C64::new(2f64.powi(s), 0.0);
    let a2 = a.dot(&a);
    let a4 = a2.dot(&a2);
    let a6 = a2.dot(&a4);
    let eye: Array2<C64> = Array2::eye(3);
    let u_inner = &a6 * C64::new(B[13], 0.0)
        + &a4 * C64::new(B[11], 0.0)
        + &a2 * C64::new(B[9], 0.0);
    let u = a.dot(
        &(a6.dot(&u_inner)
            + &a6 * C64::new(B[7], 0.0)
            + &a4 * C64::new(B[5], 0.0)
            + &a2 * C64::new(B[3], 0.0)
            + &eye * C64::new(B[1], 0.0)),
    );
    let v_inner = &a6 * C64::new(B[12], 0.0)
        + &a4 * C64::new(B[10], 0.0)
        + &a2 * C64::new(B[8], 0.0);
    let v = a6.dot(&v_inner)
        + &a6 * C64::new(B[6], 0.0)
        + &a4 * C64::new(B[4], 0.0)
        + &a2 * C64::new(B[2], 0.0)
        + &eye * C64::new(B[0], 0.0);
    let p = (&v - &u).inv().expect("pade denominator").dot(&(&v + &u));
    let mut r = p;
    for _ in 0..s {
        r = r.dot(&r);
    }
    r
}

/// G^r(τ) samples over a τ grid.
#[derive(Debug, Clone)]
pub struct PropagatorGrid {
    pub taus: Vec<f64>,
    pub samples: Vec<Array2<C64>>,
    /// Whether max|G| fell below [`GREENS_TAIL`] inside the horizon cap.
    pub tail_converged: bool,
    pub generator: EffectiveGenerator,
}

fn max_abs(m: &Array2<C64>) -> f64 {
    m.iter().fold(0.0f64, |a, z| a.max(z.norm()))
}

fn tau_t_min(params: &RateParams) -> f64 {
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

/// Sample G^r(τ) = exp(Mτ). With an auto grid the horizon is the first τ
/// where max|G^r| < 1e-9, capped at the global horizon limit.
pub fn retarded_green(generator: &EffectiveGenerator, tau_grid: &GridSpec) -> PropagatorGrid {
    let params = generator.params;
    let (taus, tail_converged) = match tau_grid {
        GridSpec::Explicit(ts) => (ts.clone(), true),
        GridSpec::Auto { points } => {
            let mut tau = {
                let lam = generator.min_decay_rate();
                if lam > 1e-12 {
                    (21.0 / lam).min(HORIZON_CAP)
                } else {
                    HORIZON_CAP
                }
            };
            let mut converged = max_abs(&generator.evaluate(tau)) < GREENS_TAIL;
            let mut guard = 0;
            while !converged && tau < HORIZON_CAP {
                tau = (tau * 1.5).min(HORIZON_CAP);
                converged = max_abs(&generator.evaluate(tau)) < GREENS_TAIL;
                guard += 1;
                if guard > 200 {
                    break;
                }
            }
            (log_grid(tau_t_min(&params), tau, *points), converged)
        }
    };
    let samples = taus.iter().map(|&t| generator.evaluate(t)).collect();
    PropagatorGrid {
        taus,
        samples,
        tail_converged,
        generator: generator.clone(),
    }
}

/// Two-time correlator samples C(t,τ) = ⟨m†(t+τ)m(t)⟩ for one output mode.
#[derive(Debug, Clone)]
pub struct CorrelatorGrid {
    pub mode: OutputMode,
    pub times: Vec<f64>,
    pub taus: Vec<f64>,
    /// C(t_i, τ_j), row-major over (i, j).
    pub samples: Array2<C64>,
    /// Mode population n(t_i) = C(t_i, 0).
    pub pop_t: Vec<f64>,
    /// Whether both grid tails satisfied their thresholds.
    pub tails_converged: bool,
    pub trajectory: Trajectory,
}

impl CorrelatorGrid {
    pub fn population_at(&self, t: f64) -> f64 {
        let m = self.mode.index();
        self.trajectory.evaluate(t).0[[m, m]].re
    }

    pub fn peak_population(&self) -> f64 {
        self.pop_t.iter().fold(0.0f64, |a, &b| a.max(b))
    }
}

/// Assemble C(t,τ) = Σ_x G_mx(τ) ρ_xm(t) on the trajectory × propagator
/// grids. The t grid is extended (same logarithmic spacing, same evaluator)
/// until the mode population falls below 1e-9 of its peak, so downstream
/// integrals see converged tails.
pub fn two_time_correlator(
    params: &RateParams,
    trajectory: &Trajectory,
    propagator: &PropagatorGrid,
    mode: OutputMode,
) -> Result<CorrelatorGrid, GreensError> {
    if trajectory.params != *params || propagator.generator.params != *params {
        return Err(GreensError::GridMismatch);
    }
    let m = mode.index();

    let mut times = trajectory.times.clone();
    let mut states: Vec<[C64; 3]> = trajectory
        .states
        .iter()
        .map(|s| [s.0[[E, m]], s.0[[P, m]], s.0[[C, m]]])
        .collect();
    let mut pop_t: Vec<f64> = trajectory
        .states
        .iter()
        .map(|s| s.0[[m, m]].re)
        .collect();

    let peak = pop_t.iter().fold(0.0f64, |a, &b| a.max(b));
    let mut t_tail_ok = true;
    if peak > 0.0 {
        // continue the geometric spacing of the trajectory grid
        let n = times.len();
        let ratio = if n >= 3 && times[n - 2] > 0.0 {
            (times[n - 1] / times[n - 2]).max(1.0 + 1e-6)
        } else {
            1.05
        };
        let mut guard = 0;
        while *pop_t.last().unwrap() > POPULATION_TAIL * peak {
            let t_next = times.last().unwrap() * ratio;
            if t_next > HORIZON_CAP || guard > 20_000 {
                t_tail_ok = false;
                break;
            }
            let s = trajectory.evaluate(t_next);
            times.push(t_next);
            states.push([s.0[[E, m]], s.0[[P, m]], s.0[[C, m]]]);
            pop_t.push(s.0[[m, m]].re);
            guard += 1;
        }
    }

    let nt = times.len();
    let ntau = propagator.taus.len();
    let mut samples: Array2<C64> = Array2::zeros((nt, ntau));
    for (j, g) in propagator.samples.iter().enumerate() {
        let row = [g[[m, E]], g[[m, P]], g[[m, C]]];
        for i in 0..nt {
            samples[[i, j]] =
                row[0] * states[i][0] + row[1] * states[i][1] + row[2] * states[i][2];
        }
    }

    Ok(CorrelatorGrid {
        mode,
        times,
        taus: propagator.taus.clone(),
        samples,
        pop_t,
        tails_converged: t_tail_ok && propagator.tail_converged,
        trajectory: trajectory.clone(),
    })
}
