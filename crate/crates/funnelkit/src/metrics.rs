//! Photon indistinguishability, extraction efficiency, and funneling ratio.
//!
//! Two independent routes evaluate the same definitions:
//!
//! * quadrature — composite Simpson over the sampled correlator grids, with
//!   grid-level refinement until I moves by less than 1e-4 relative;
//! * spectral — both generators are expanded in eigenmodes, so every double
//!   integral of exponential products collapses to sums of
//!   1/((μ_α+μ̄_α')(λ_k+λ̄_k')) terms evaluated in closed form.
//!
//! The denominator of the indistinguishability uses the population identity
//! C(t,0) = n(t) and ∬ n(t) n(t+τ) dτ dt = (∫n dt)²/2.

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::greens::{
    effective_generator, retarded_green, two_time_correlator, CorrelatorGrid, GreensError,
    OutputMode,
};
use crate::liouvillian::{
    propagate_density, EigenPropagator, GridSpec, PropagationError, Trajectory,
    DEFAULT_GRID_POINTS,
};
use crate::params::{RateParams, RegimeFlags};

/// Relative change between grid levels below which I is converged.
pub const REFINE_TOL: f64 = 1e-4;
/// Largest grid resolution tried by the refinement loop.
pub const MAX_GRID_POINTS: usize = 1600;
/// Denominator floor: anything below this means the mode never lit up.
pub const FLUX_FLOOR: f64 = 1e-30;
/// Cross-method discrepancy beyond which a point is marked suspect.
pub const SUSPECT_TOL: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("output mode carries no photon flux")]
    NoPhotonFlux,
    #[error("quadrature not converged: {0}")]
    NotConverged(String),
    #[error("generator eigendecomposition unusable (cond = {cond:.3e}); use the quadrature path")]
    DefectiveGenerator { cond: f64 },
    #[error(transparent)]
    Propagation(#[from] PropagationError),
    #[error(transparent)]
    Greens(#[from] GreensError),
}

/// Which computation produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Quadrature,
    Spectral,
    Both,
    Analytic,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::Quadrature => "quadrature",
            Method::Spectral => "spectral",
            Method::Both => "both",
            Method::Analytic => "analytic",
        }
    }
}

/// A value with a numerical-error estimate.
#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// I, β, F for one output mode, with error estimates and provenance.
#[derive(Debug, Clone)]
pub struct MetricsResult {
    pub indistinguishability: f64,
    pub i_error: f64,
    pub beta: f64,
    pub beta_error: f64,
    pub f_db: f64,
    pub method: Method,
    pub mode: OutputMode,
}

/// F = 10·log₁₀((2γ*/Γ₁)·β·I); −∞ when the product vanishes.
pub fn funneling_ratio(params: &RateParams, indistinguishability: f64, beta: f64) -> f64 {
    let product = (params.pure_dephasing / params.gamma1) * beta * indistinguishability;
    if product > 0.0 {
        10.0 * product.log10()
    } else {
        f64::NEG_INFINITY
    }
}

/// Composite Simpson on an arbitrary strictly-increasing grid (quadratic
/// through each point triple; trapezoid for a trailing odd interval).
pub fn integrate(xs: &[f64], fs: &[f64]) -> f64 {
    debug_assert_eq!(xs.len(), fs.len());
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let mut acc = 0.0;
    let mut i = 0;
    while i + 2 < n {
        let (x0, x1, x2) = (xs[i], xs[i + 1], xs[i + 2]);
        let (f0, f1, f2) = (fs[i], fs[i + 1], fs[i + 2]);
        let h0 = x1 - x0;
        let h1 = x2 - x1;
        let h = h0 + h1;
        acc += h / 6.0
            * ((2.0 - h1 / h0) * f0 + h * h / (h0 * h1) * f1 + (2.0 - h0 / h1) * f2);
        i += 2;
    }
    if i + 1 < n {
        acc += 0.5 * (xs[i + 1] - xs[i]) * (fs[i] + fs[i + 1]);
    }
    acc
}

fn subsample<T: Copy>(v: &[T]) -> Vec<T> {
    let mut out: Vec<T> = v.iter().copied().step_by(2).collect();
    if (v.len() - 1) % 2 != 0 {
        out.push(*v.last().unwrap());
    }
    out
}

/// Exponential tail of ∫ f dt beyond the last grid point, from the local
/// log-slope of the final samples.
fn tail_estimate(xs: &[f64], fs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let (f1, f0) = (fs[n - 1], fs[n - 2]);
    if f1 <= 0.0 || f0 <= f1 {
        return 0.0;
    }
    let rate = (f0 / f1).ln() / (xs[n - 1] - xs[n - 2]);
    if rate > 0.0 {
        f1 / rate
    } else {
        0.0
    }
}

/// β = κ_mode · ∫ n(t) dt over the trajectory grid.
pub fn extraction_efficiency(
    params: &RateParams,
    trajectory: &Trajectory,
    mode: OutputMode,
) -> Result<Estimate, MetricsError> {
    let kappa = mode.kappa(params);
    if kappa == 0.0 {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
        });
    }
    let m = mode.index();
    let pops: Vec<f64> = trajectory
        .states
        .iter()
        .map(|s| s.0[[m, m]].re)
        .collect();
    let full = integrate(&trajectory.times, &pops);
    let half = integrate(
        &subsample(&trajectory.times),
        &subsample(&pops),
    );
    let tail = tail_estimate(&trajectory.times, &pops);
    let value = kappa * (full + tail);
    let error = kappa * ((full - half).abs() + tail);
    if error > 1e-6 {
        return Err(MetricsError::NotConverged(format!(
            "beta quadrature error {error:.3e} exceeds 1e-6"
        )));
    }
    Ok(Estimate { value, error })
}

fn numerator_on(times: &[f64], taus: &[f64], rows: impl Fn(usize, usize) -> f64) -> f64 {
    let inner: Vec<f64> = (0..times.len())
        .map(|i| {
            let vals: Vec<f64> = (0..taus.len()).map(|j| rows(i, j)).collect();
            integrate(taus, &vals)
        })
        .collect();
    integrate(times, &inner)
}

/// I = ∬|C(t,τ)|² dτ dt / ∬ n(t) n(t+τ) dτ dt, both from grid samples.
///
/// The error estimate is the grid-level difference against the half-resolution
/// subgrid. Refinement across resolutions is driven by [`compute_point`].
pub fn indistinguishability(corr: &CorrelatorGrid) -> Result<Estimate, MetricsError> {
    let int_n = integrate(&corr.times, &corr.pop_t) + tail_estimate(&corr.times, &corr.pop_t);
    let denom = 0.5 * int_n * int_n;
    if denom < FLUX_FLOOR {
        return Err(MetricsError::NoPhotonFlux);
    }
    if !corr.tails_converged {
        return Err(MetricsError::NotConverged(
            "correlator grid tails never dropped below threshold".into(),
        ));
    }

    let num = numerator_on(&corr.times, &corr.taus, |i, j| corr.samples[[i, j]].norm_sqr());
    let value = num / denom;

    // half-resolution estimate on the same data
    let t_h = subsample(&corr.times);
    let tau_h = subsample(&corr.taus);
    let t_idx: Vec<usize> = {
        let mut v: Vec<usize> = (0..corr.times.len()).step_by(2).collect();
        if (corr.times.len() - 1) % 2 != 0 {
            v.push(corr.times.len() - 1);
        }
        v
    };
    let tau_idx: Vec<usize> = {
        let mut v: Vec<usize> = (0..corr.taus.len()).step_by(2).collect();
        if (corr.taus.len() - 1) % 2 != 0 {
            v.push(corr.taus.len() - 1);
        }
        v
    };
    let num_h = numerator_on(&t_h, &tau_h, |i, j| {
        corr.samples[[t_idx[i], tau_idx[j]]].norm_sqr()
    });
    let pop_h = subsample(&corr.pop_t);
    let int_n_h = integrate(&t_h, &pop_h) + tail_estimate(&t_h, &pop_h);
    let denom_h = 0.5 * int_n_h * int_n_h;
    let value_h = num_h / denom_h;

    Ok(Estimate {
        value,
        error: (value - value_h).abs(),
    })
}

// --- spectral closed form ---

struct ModeSums {
    /// ρ_{j,m}(t) expansion coefficients over the 9 Liouvillian modes, j = e,p,c.
    a: [[C64; 9]; 3],
    /// population expansion n(t) = Σ_k n_k e^{λ_k t}.
    n: [C64; 9],
    lambda: [C64; 9],
}

fn mode_sums(prop: &EigenPropagator, m: usize) -> ModeSums {
    let mut a = [[C64::new(0.0, 0.0); 9]; 3];
    for (j, row) in a.iter_mut().enumerate() {
        let coeffs = prop.component_coeffs(j, m);
        for k in 0..9 {
            row[k] = coeffs[k];
        }
    }
    let mut n = [C64::new(0.0, 0.0); 9];
    let pop = prop.component_coeffs(m, m);
    let mut lambda = [C64::new(0.0, 0.0); 9];
    for k in 0..9 {
        n[k] = pop[k];
        lambda[k] = prop.eigenvalues[k];
    }
    ModeSums { a, n, lambda }
}

/// Evaluate I and β in closed form from the two eigendecompositions.
pub fn metrics_spectral(
    params: &RateParams,
    mode: OutputMode,
) -> Result<MetricsResult, MetricsError> {
    let map = crate::liouvillian::build_liouvillian(params);
    if map.is_defective() {
        return Err(MetricsError::DefectiveGenerator {
            cond: map.condition,
        });
    }
    let gen = effective_generator(params);
    if gen.is_defective() {
        return Err(MetricsError::DefectiveGenerator {
            cond: gen.condition,
        });
    }
    let prop = EigenPropagator::from_map(&map);
    let m = mode.index();
    let sums = mode_sums(&prop, m);

    const COEFF_FLOOR: f64 = 1e-150;
    const RATE_FLOOR: f64 = 1e-12;

    // beta = −κ Σ_k n_k / λ_k
    let kappa = mode.kappa(params);
    let mut int_n = C64::new(0.0, 0.0);
    for k in 0..9 {
        if sums.n[k].norm() < COEFF_FLOOR {
            continue;
        }
        if -sums.lambda[k].re < RATE_FLOOR {
            return Err(MetricsError::NotConverged(
                "non-decaying populated mode; integrals diverge".into(),
            ));
        }
        int_n -= sums.n[k] / sums.lambda[k];
    }
    let beta = kappa * int_n.re;

    // denominator Σ_{k,k'} n_k n_k' / (λ_k (λ_k + λ_k'))
    let mut denom = C64::new(0.0, 0.0);
    for k in 0..9 {
        if sums.n[k].norm() < COEFF_FLOOR {
            continue;
        }
        for k2 in 0..9 {
            if sums.n[k2].norm() < COEFF_FLOOR {
                continue;
            }
            denom += sums.n[k] * sums.n[k2]
                / (sums.lambda[k] * (sums.lambda[k] + sums.lambda[k2]));
        }
    }
    let denom = denom.re;
    if denom < FLUX_FLOOR {
        return Err(MetricsError::NoPhotonFlux);
    }

    // d_{αk} = Σ_j U[m,α] U⁻¹[α,j] a_{jk}
    let mut d = [[C64::new(0.0, 0.0); 9]; 3];
    for alpha in 0..3 {
        let u_ma = gen.eigenvectors[[m, alpha]];
        for k in 0..9 {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..3 {
                acc += u_ma * gen.inv_eigenvectors[[alpha, j]] * sums.a[j][k];
            }
            d[alpha][k] = acc;
        }
    }
    let mu = &gen.eigenvalues;
    for alpha in 0..3 {
        if -mu[alpha].re < RATE_FLOOR
            && d[alpha].iter().any(|z| z.norm() > COEFF_FLOOR)
        {
            return Err(MetricsError::NotConverged(
                "non-decaying Green's-function mode; integrals diverge".into(),
            ));
        }
    }
    let mut num = C64::new(0.0, 0.0);
    for alpha in 0..3 {
        for ap in 0..3 {
            let mu_s = mu[alpha] + mu[ap].conj();
            for k in 0..9 {
                if d[alpha][k].norm() < COEFF_FLOOR {
                    continue;
                }
                for k2 in 0..9 {
                    if d[ap][k2].norm() < COEFF_FLOOR {
                        continue;
                    }
                    let lam_s = sums.lambda[k] + sums.lambda[k2].conj();
                    num += d[alpha][k] * d[ap][k2].conj() / (mu_s * lam_s);
                }
            }
        }
    }
    let i_val = num.re / denom;

    Ok(MetricsResult {
        indistinguishability: i_val,
        i_error: 1e-12 * i_val.abs().max(1.0),
        beta,
        beta_error: 1e-12 * beta.abs().max(1e-12),
        f_db: funneling_ratio(params, i_val, beta),
        method: Method::Spectral,
        mode,
    })
}

/// Quadrature and spectral results for one parameter point, with their
/// discrepancy.
#[derive(Debug, Clone)]
pub struct PointResult {
    pub quadrature: MetricsResult,
    pub spectral: Option<MetricsResult>,
    /// Relative I and β discrepancy between the two methods.
    pub discrepancy_i: Option<f64>,
    pub discrepancy_beta: Option<f64>,
    /// True when the methods disagree beyond 1e-3 relative.
    pub suspect: bool,
    pub regime: RegimeFlags,
    pub converged: bool,
}

impl PointResult {
    /// The headline numbers (quadrature path).
    pub fn metrics(&self) -> &MetricsResult {
        &self.quadrature
    }
}

/// Full numeric evaluation at one parameter point: quadrature with grid
/// refinement, spectral cross-check, discrepancy flagging.
pub fn compute_point(params: &RateParams, mode: OutputMode) -> Result<PointResult, MetricsError> {
    let mut points = DEFAULT_GRID_POINTS;
    let mut prev_i: Option<f64> = None;
    let (i_est, b_est) = loop {
        let grid = GridSpec::Auto { points };
        let traj = propagate_density(params, &grid)?;
        let gen = effective_generator(params);
        let prop = retarded_green(&gen, &grid);
        let corr = two_time_correlator(params, &traj, &prop, mode)?;
        let i_est = indistinguishability(&corr)?;
        let beta_try = extraction_efficiency(params, &traj, mode);
        let i_ok = match prev_i {
            Some(p) => (i_est.value - p).abs() <= REFINE_TOL * i_est.value.abs(),
            None => i_est.error <= REFINE_TOL * i_est.value.abs(),
        };
        match (beta_try, i_ok) {
            (Ok(b_est), true) => break (i_est, b_est),
            (beta_try, _) => {
                prev_i = Some(i_est.value);
                points *= 2;
                if points > MAX_GRID_POINTS {
                    beta_try?;
                    return Err(MetricsError::NotConverged(format!(
                        "I still moving more than {REFINE_TOL:.0e} relative at {MAX_GRID_POINTS} grid points"
                    )));
                }
            }
        }
    };

    let quadrature = MetricsResult {
        indistinguishability: i_est.value,
        i_error: i_est.error,
        beta: b_est.value,
        beta_error: b_est.error,
        f_db: funneling_ratio(params, i_est.value, b_est.value),
        method: Method::Quadrature,
        mode,
    };

    let spectral = match metrics_spectral(params, mode) {
        Ok(s) => Some(s),
        Err(MetricsError::DefectiveGenerator { .. }) => None,
        Err(MetricsError::NoPhotonFlux) => None,
        Err(e) => return Err(e),
    };
    let (discrepancy_i, discrepancy_beta) = match &spectral {
        Some(s) => (
            Some(
                (quadrature.indistinguishability - s.indistinguishability).abs()
                    / s.indistinguishability.abs().max(1e-300),
            ),
            Some((quadrature.beta - s.beta).abs() / s.beta.abs().max(1e-300)),
        ),
        None => (None, None),
    };
    let suspect = discrepancy_i.map(|d| d > SUSPECT_TOL).unwrap_or(false)
        || discrepancy_beta.map(|d| d > SUSPECT_TOL).unwrap_or(false);

    Ok(PointResult {
        quadrature,
        spectral,
        discrepancy_i,
        discrepancy_beta,
        suspect,
        regime: params.regime_flags(),
        converged: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn baseline() -> RateParams {
        RateParams::baseline()
    }

    fn baseline_correlator(mode: OutputMode) -> CorrelatorGrid {
        let p = baseline();
        let traj = propagate_density(&p, &GridSpec::default()).unwrap();
        let gen = effective_generator(&p);
        let prop = retarded_green(&gen, &GridSpec::default());
        two_time_correlator(&p, &traj, &prop, mode).unwrap()
    }

    #[test]
    fn simpson_handles_log_grids() {
        // ∫ e^{−a t} over the production grid shape
        let a = 3637.0;
        let ts = crate::liouvillian::log_grid(1e-8, 21.0 / a * 3.0, 400);
        let fs: Vec<f64> = ts.iter().map(|&t| (-a * t).exp()).collect();
        let got = integrate(&ts, &fs);
        assert_relative_eq!(got, 1.0 / a, max_relative = 1e-6);
    }

    #[test]
    fn funneling_ratio_paper_point() {
        let p = baseline();
        let f = funneling_ratio(&p, 0.9169, 4.65e-3);
        assert!((f - 16.3).abs() < 0.1, "F = {f}");
    }

    #[test]
    fn funneling_ratio_unity_product_is_zero_db() {
        let p = baseline();
        // beta·I = Γ₁/2γ* ⇒ log argument exactly 1
        let f = funneling_ratio(&p, 1.0, p.gamma1 / p.pure_dephasing);
        assert!(f.abs() < 1e-12);
    }

    #[test]
    fn funneling_ratio_zero_flux_is_neg_infinity() {
        let p = baseline();
        assert_eq!(funneling_ratio(&p, 0.5, 0.0), f64::NEG_INFINITY);
    }

    #[test]
    fn beta_zero_when_kappa2_zero() {
        let p = RateParams::new(1e4, 0.0, 1e4, 0.0, 1e5, 0.0).unwrap();
        let traj = propagate_density(&p, &GridSpec::default()).unwrap();
        let b = extraction_efficiency(&p, &traj, OutputMode::Cavity).unwrap();
        assert_eq!(b.value, 0.0);
    }

    #[test]
    fn decoupled_params_no_photon_flux() {
        let p = RateParams::new(0.0, 0.0, 0.0, 0.0, 0.0, 0.0).unwrap();
        assert!(matches!(
            metrics_spectral(&p, OutputMode::Cavity),
            Err(MetricsError::NoPhotonFlux)
        ));
        let traj = propagate_density(&p, &GridSpec::default()).unwrap();
        let b = extraction_efficiency(&p, &traj, OutputMode::Cavity).unwrap();
        assert_eq!(b.value, 0.0);
        assert!(matches!(
            compute_point(&p, OutputMode::Cavity),
            Err(MetricsError::NoPhotonFlux)
        ));
    }

    #[test]
    fn quadrature_matches_spectral_at_baseline() {
        let point = compute_point(&baseline(), OutputMode::Cavity).unwrap();
        let s = point.spectral.as_ref().unwrap();
        assert!(
            point.discrepancy_i.unwrap() <= 1e-4,
            "I discrepancy {:?}",
            point.discrepancy_i
        );
        assert!(
            point.discrepancy_beta.unwrap() <= 1e-4,
            "beta discrepancy {:?}",
            point.discrepancy_beta
        );
        assert!(!point.suspect);
        // frozen oracle values for the exact solution of the model
        assert_relative_eq!(s.indistinguishability, 0.908426, max_relative = 5e-4);
        assert_relative_eq!(s.beta, 4.710965e-3, max_relative = 5e-4);
        assert!((s.f_db - 16.314).abs() < 0.01);
    }

    #[test]
    fn plasmon_only_frozen_value() {
        let p = RateParams::new(1e4, 0.0, 1e4, 0.0, 1e5, 6e2).unwrap();
        let s = metrics_spectral(&p, OutputMode::Plasmon).unwrap();
        assert_relative_eq!(s.indistinguishability, 0.306770, max_relative = 5e-4);
        assert_relative_eq!(s.beta, 0.999715, max_relative = 5e-4);
    }

    #[test]
    fn zero_dephasing_gives_unit_indistinguishability() {
        let mut p = baseline();
        p.pure_dephasing = 0.0;
        let s = metrics_spectral(&p, OutputMode::Cavity).unwrap();
        assert!(
            (s.indistinguishability - 1.0).abs() <= 1e-6,
            "spectral I = {}",
            s.indistinguishability
        );
        let corr = {
            let traj = propagate_density(&p, &GridSpec::default()).unwrap();
            let gen = effective_generator(&p);
            let prop = retarded_green(&gen, &GridSpec::default());
            two_time_correlator(&p, &traj, &prop, OutputMode::Cavity).unwrap()
        };
        let i_est = indistinguishability(&corr).unwrap();
        assert!(
            (i_est.value - 1.0).abs() <= 1e-4,
            "quadrature I = {}",
            i_est.value
        );
    }

    #[test]
    fn indistinguishability_invariant_under_rescaling() {
        let corr = baseline_correlator(OutputMode::Cavity);
        let base = indistinguishability(&corr).unwrap();
        for scale in [1e-3, 7.0, 1e4] {
            let mut scaled = corr.clone();
            scaled.samples.mapv_inplace(|z| z * scale);
            for v in scaled.pop_t.iter_mut() {
                *v *= scale;
            }
            let got = indistinguishability(&scaled).unwrap();
            assert_relative_eq!(got.value, base.value, max_relative = 1e-12);
        }
    }

    #[test]
    fn refinement_error_bounds_grid_change() {
        // halving the grid step never moves I by more than the reported error
        let p = baseline();
        let run = |points: usize| {
            let grid = GridSpec::Auto { points };
            let traj = propagate_density(&p, &grid).unwrap();
            let gen = effective_generator(&p);
            let prop = retarded_green(&gen, &grid);
            let corr = two_time_correlator(&p, &traj, &prop, OutputMode::Cavity).unwrap();
            indistinguishability(&corr).unwrap()
        };
        let coarse = run(400);
        let fine = run(800);
        assert!(
            (fine.value - coarse.value).abs() <= coarse.error.max(1e-12),
            "ΔI = {} vs estimate {}",
            (fine.value - coarse.value).abs(),
            coarse.error
        );
    }

    #[test]
    fn point_runtime_is_desk_scale() {
        let start = std::time::Instant::now();
        let _ = compute_point(&baseline(), OutputMode::Cavity).unwrap();
        assert!(
            start.elapsed().as_secs_f64() < 5.0,
            "baseline point took {:?}",
            start.elapsed()
        );
    }
}
