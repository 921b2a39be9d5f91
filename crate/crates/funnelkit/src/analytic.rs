//! Semi-analytic machinery: exchange rates, 3-level rate equations,
//! adiabatic coherences, the effective-emitter reduction, closed-form I/β,
//! and Purcell factors.
//!
//! Exchange rates (Γ₁ kept explicit so the formulas also work on
//! non-normalized inputs):
//!
//!   R₁ = 4g₁²/(Γ₁+2γ*+κ₁)        emitter ↔ plasmon
//!   R₂ = 4g₂²/(κ₁+κ₂+φ)          plasmon ↔ cavity,  φ = 4g₁²/(Γ₁+2γ*+κ₂)
//!   R₃ = 4g₀²/(Γ₁+2γ*+κ₂)        emitter ↔ cavity (direct)
//!   r  = 4g₀²/(Γ₁+2γ*+R₁)        Green's-function correction, active only
//!                                 when g₀ ≠ 0
//!
//! Effective single-cavity reduction (κ₁ dominant):
//!
//!   Γ'₁ = Γ₁ + κ₁R₁/(κ₁+R₁+R₂)
//!   κ'  = κ₂ + κ₁R₂/(κ₁+R₁+R₂)
//!   R'  = R₁R₂/(κ₁+R₁+R₂) + R₃

use ndarray::Array2;
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64 as C64;

use crate::greens::OutputMode;
use crate::metrics::{funneling_ratio, Method, MetricsError, MetricsResult};
use crate::params::{ParamsError, RateParams, RegimeFlags};

/// The adiabatically eliminated photon exchange rates.
#[derive(Debug, Clone, Copy)]
pub struct ExchangeRates {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub phi: f64,
    pub r: f64,
}

pub fn exchange_rates(params: &RateParams) -> ExchangeRates {
    let w1 = params.gamma1 + params.pure_dephasing + params.kappa1;
    let w2 = params.gamma1 + params.pure_dephasing + params.kappa2;
    let r1 = 4.0 * params.g1 * params.g1 / w1;
    let phi = 4.0 * params.g1 * params.g1 / w2;
    // zero coupling wins over a zero width sum (fully decoupled corner)
    let r2 = if params.g2 == 0.0 {
        0.0
    } else {
        4.0 * params.g2 * params.g2 / (params.kappa1 + params.kappa2 + phi)
    };
    let r3 = 4.0 * params.g0 * params.g0 / w2;
    let r = 4.0 * params.g0 * params.g0 / (params.gamma1 + params.pure_dephasing + r1);
    ExchangeRates { r1, r2, r3, phi, r }
}

/// 3×3 population rate matrix over (ρ_ee, ρ_pp, ρ_cc).
#[derive(Debug, Clone)]
pub struct RateMatrix {
    pub a: Array2<f64>,
    pub regime: RegimeFlags,
}

pub fn rate_matrix(params: &RateParams) -> RateMatrix {
    let x = exchange_rates(params);
    let mut a = Array2::zeros((3, 3));
    a[[0, 0]] = -params.gamma1 - x.r1 - x.r3;
    a[[0, 1]] = x.r1;
    a[[0, 2]] = x.r3;
    a[[1, 0]] = x.r1;
    a[[1, 1]] = -params.kappa1 - x.r1 - x.r2;
    a[[1, 2]] = x.r2;
    a[[2, 0]] = x.r3;
    a[[2, 1]] = x.r2;
    a[[2, 2]] = -params.kappa2 - x.r2 - x.r3;
    RateMatrix {
        a,
        regime: params.regime_flags(),
    }
}

/// Population curves from a matrix-exponential rate-equation solve.
#[derive(Debug, Clone)]
pub struct PopulationCurves {
    pub times: Vec<f64>,
    pub rho_ee: Vec<f64>,
    pub rho_pp: Vec<f64>,
    pub rho_cc: Vec<f64>,
}

/// exp(A·t)·(1,0,0) sampled over the grid (A is symmetric, so the solve is
/// an orthogonal eigendecomposition).
pub fn solve_rate_equations(matrix: &RateMatrix, t_grid: &[f64]) -> PopulationCurves {
    let (vals, vecs) = matrix.a.eigh(UPLO::Lower).expect("symmetric 3x3 eigensolve");
    // amplitudes of the initial condition e1 in the eigenbasis
    let w: Vec<f64> = (0..3).map(|k| vecs[[0, k]]).collect();
    let mut curves = PopulationCurves {
        times: t_grid.to_vec(),
        rho_ee: Vec::with_capacity(t_grid.len()),
        rho_pp: Vec::with_capacity(t_grid.len()),
        rho_cc: Vec::with_capacity(t_grid.len()),
    };
    for &t in t_grid {
        let mut x = [0.0f64; 3];
        for k in 0..3 {
            let amp = w[k] * (vals[k] * t).exp();
            for (i, xi) in x.iter_mut().enumerate() {
                *xi += vecs[[i, k]] * amp;
            }
        }
        curves.rho_ee.push(x[0]);
        curves.rho_pp.push(x[1]);
        curves.rho_cc.push(x[2]);
    }
    curves
}

/// The six adiabatic off-diagonal elements, evaluated from instantaneous
/// populations. Ordered (ρ_ec, ρ_ce, ρ_ep, ρ_pe, ρ_pc, ρ_cp).
pub fn reconstruct_coherences(
    params: &RateParams,
    rho_ee: f64,
    rho_pp: f64,
    rho_cc: f64,
) -> [C64; 6] {
    let x = exchange_rates(params);
    let w1 = params.gamma1 + params.pure_dephasing + params.kappa1;
    let w2 = params.gamma1 + params.pure_dephasing + params.kappa2;
    let wpc = params.kappa1 + params.kappa2 + x.phi;
    let i = C64::new(0.0, 1.0);

    let rho_ec = i * 2.0 * params.g0 * (rho_ee - rho_cc) / w2
        - C64::new(4.0 * params.g1 * params.g2 * (rho_ee - rho_pp) / (w2 * w1), 0.0)
        + C64::new(4.0 * params.g1 * params.g2 * (rho_pp - rho_cc) / (w2 * wpc), 0.0);
    let rho_ce = i * 2.0 * params.g0 * (rho_cc - rho_ee) / w2
        + C64::new(4.0 * params.g2 * params.g1 * (rho_pp - rho_ee) / (w2 * w1), 0.0)
        - C64::new(4.0 * params.g2 * params.g1 * (rho_cc - rho_pp) / (w2 * wpc), 0.0);
    let rho_ep = i * 2.0 * params.g1 * (rho_ee - rho_pp) / w1;
    let rho_pe = i * 2.0 * params.g1 * (rho_pp - rho_ee) / w1;
    let rho_pc = i * 2.0 * params.g2 * (rho_pp - rho_cc) / wpc
        - C64::new(4.0 * params.g0 * params.g1 * (rho_pp - rho_ee) / (w1 * wpc), 0.0);
    let rho_cp = i * 2.0 * params.g2 * (rho_cc - rho_pp) / wpc
        + C64::new(4.0 * params.g0 * params.g1 * (rho_ee - rho_pp) / (w1 * wpc), 0.0);

    [rho_ec, rho_ce, rho_ep, rho_pe, rho_pc, rho_cp]
}

/// Effective single-cavity parameters (Γ'₁, κ', R').
#[derive(Debug, Clone, Copy)]
pub struct EffectiveParams {
    pub gamma1_eff: f64,
    pub kappa_eff: f64,
    pub r_eff: f64,
}

pub fn effective_params(params: &RateParams) -> EffectiveParams {
    let x = exchange_rates(params);
    let den = params.kappa1 + x.r1 + x.r2;
    if den == 0.0 {
        return EffectiveParams {
            gamma1_eff: params.gamma1,
            kappa_eff: params.kappa2,
            r_eff: x.r3,
        };
    }
    EffectiveParams {
        gamma1_eff: params.gamma1 + params.kappa1 * x.r1 / den,
        kappa_eff: params.kappa2 + params.kappa1 * x.r2 / den,
        r_eff: x.r1 * x.r2 / den + x.r3,
    }
}

/// Two-level effective solution (ρ_ee, ρ_cc) plus the reconstructed plasmon
/// population ρ_pp = (R₁ρ_ee + R₂ρ_cc)/(κ₁+R₁+R₂).
pub fn effective_two_level(params: &RateParams, t_grid: &[f64]) -> PopulationCurves {
    let eff = effective_params(params);
    let x = exchange_rates(params);
    let mut b = Array2::zeros((2, 2));
    b[[0, 0]] = -eff.gamma1_eff - eff.r_eff;
    b[[0, 1]] = eff.r_eff;
    b[[1, 0]] = eff.r_eff;
    b[[1, 1]] = -eff.kappa_eff - eff.r_eff;
    let (vals, vecs) = b.eigh(UPLO::Lower).expect("symmetric 2x2 eigensolve");
    let den = params.kappa1 + x.r1 + x.r2;
    let mut curves = PopulationCurves {
        times: t_grid.to_vec(),
        rho_ee: Vec::with_capacity(t_grid.len()),
        rho_pp: Vec::with_capacity(t_grid.len()),
        rho_cc: Vec::with_capacity(t_grid.len()),
    };
    for &t in t_grid {
        let mut x2 = [0.0f64; 2];
        for k in 0..2 {
            let amp = vecs[[0, k]] * (vals[k] * t).exp();
            for (i, xi) in x2.iter_mut().enumerate() {
                *xi += vecs[[i, k]] * amp;
            }
        }
        let pp = if den > 0.0 {
            (x.r1 * x2[0] + x.r2 * x2[1]) / den
        } else {
            0.0
        };
        curves.rho_ee.push(x2[0]);
        curves.rho_pp.push(pp);
        curves.rho_cc.push(x2[1]);
    }
    curves
}

/// Closed-form I and β from the effective-emitter model:
///
///   I = (Γ'₁ + κ'R'/(κ'+R')) / ((Γ'₁+κ'+2R')·(κ₂+R₂+r)/(κ'+R'))
///   β = κ'R'/(Γ'₁+κ'+2R')
pub fn analytic_metrics(params: &RateParams) -> Result<MetricsResult, MetricsError> {
    let x = exchange_rates(params);
    let eff = effective_params(params);
    if eff.r_eff == 0.0 {
        return Err(MetricsError::NoPhotonFlux);
    }
    let (g1e, ke, re) = (eff.gamma1_eff, eff.kappa_eff, eff.r_eff);
    let correction = (params.kappa2 + x.r2 + x.r) / (ke + re);
    let i_val = (g1e + ke * re / (ke + re)) / ((g1e + ke + 2.0 * re) * correction);
    let beta = ke * re / (g1e + ke + 2.0 * re);
    Ok(MetricsResult {
        indistinguishability: i_val,
        i_error: 0.0,
        beta,
        beta_error: 0.0,
        f_db: funneling_ratio(params, i_val, beta),
        method: Method::Analytic,
        mode: OutputMode::Cavity,
    })
}

/// The g₀-dominant limit forms: R' → R₃ and correction → 1.
pub fn analytic_metrics_g0_dominant(params: &RateParams) -> Result<MetricsResult, MetricsError> {
    let x = exchange_rates(params);
    let eff = effective_params(params);
    if x.r3 == 0.0 {
        return Err(MetricsError::NoPhotonFlux);
    }
    let (g1e, ke) = (eff.gamma1_eff, eff.kappa_eff);
    let i_val = (g1e + ke * x.r3 / (ke + x.r3)) / (g1e + ke + 2.0 * x.r3);
    let beta = ke * x.r3 / (g1e + ke + 2.0 * x.r3);
    Ok(MetricsResult {
        indistinguishability: i_val,
        i_error: 0.0,
        beta,
        beta_error: 0.0,
        f_db: funneling_ratio(params, i_val, beta),
        method: Method::Analytic,
        mode: OutputMode::Cavity,
    })
}

/// The three Purcell figures of merit.
#[derive(Debug, Clone, Copy)]
pub struct PurcellReport {
    /// 4g₁²/(κ₁Γ₁).
    pub plasmon: f64,
    /// 4g₁²/((Γ₁+2γ*+κ₁)Γ₁) — dephasing-broadened linewidth in the denominator.
    pub generalized: f64,
    /// 4g₀²/(κ₂Γ₁).
    pub cavity: f64,
}

pub fn purcell_report(params: &RateParams) -> Result<PurcellReport, ParamsError> {
    if !(params.kappa1 > 0.0) {
        return Err(ParamsError::ZeroDecayRate("kappa1".to_string()));
    }
    if !(params.kappa2 > 0.0) {
        return Err(ParamsError::ZeroDecayRate("kappa2".to_string()));
    }
    let g1sq = 4.0 * params.g1 * params.g1;
    Ok(PurcellReport {
        plasmon: g1sq / (params.kappa1 * params.gamma1),
        generalized: g1sq
            / ((params.gamma1 + params.pure_dephasing + params.kappa1) * params.gamma1),
        cavity: 4.0 * params.g0 * params.g0 / (params.kappa2 * params.gamma1),
    })
}

/// Invert the plasmon Purcell factor: g₁ = sqrt(F_p·κ₁·Γ₁/4).
pub fn g1_from_purcell(f_p: f64, kappa1: f64, gamma1: f64) -> f64 {
    (f_p * kappa1 * gamma1 / 4.0).sqrt()
}

/// ∫(Γ₁ρ_ee + κ₁ρ_pp + κ₂ρ_cc)dt over sampled population curves: the total
/// probability leaked through the three decay channels.
pub fn leaked_probability(params: &RateParams, curves: &PopulationCurves) -> f64 {
    let integrand: Vec<f64> = (0..curves.times.len())
        .map(|i| {
            params.gamma1 * curves.rho_ee[i]
                + params.kappa1 * curves.rho_pp[i]
                + params.kappa2 * curves.rho_cc[i]
        })
        .collect();
    crate::metrics::integrate(&curves.times, &integrand)
}
