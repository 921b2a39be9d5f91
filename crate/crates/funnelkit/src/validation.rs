//! The acceptance/validation suite: every headline claim as an executable
//! check with its tolerance pinned. Used by both the `acceptance`
//! integration tests and the CLI `validate` command.

use std::time::Instant;

use crate::analytic::{
    analytic_metrics, effective_params, g1_from_purcell, purcell_report,
};
use crate::greens::{effective_generator, retarded_green, two_time_correlator, OutputMode};
use crate::liouvillian::{propagate_density, GridSpec};
use crate::metrics::{compute_point, integrate, metrics_spectral};
use crate::params::{cavity_q_factor, PhysicalSpec, RateParams};
use crate::sweep::{figure_preset, run_sweep, Axis, FigurePreset};

/// Outcome of one acceptance criterion.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub id: &'static str,
    pub name: &'static str,
    pub passed: bool,
    /// One line per sub-assertion: measured vs expected with tolerance.
    pub lines: Vec<String>,
}

impl CheckResult {
    fn new(id: &'static str, name: &'static str) -> Self {
        Self {
            id,
            name,
            passed: true,
            lines: Vec::new(),
        }
    }

    fn assert_abs(&mut self, label: &str, measured: f64, expected: f64, tol: f64) {
        let ok = (measured - expected).abs() <= tol;
        self.passed &= ok;
        self.lines.push(format!(
            "{}: measured {measured:.6e}, expected {expected:.6e} ± {tol:.1e} [{}]",
            label,
            if ok { "pass" } else { "FAIL" }
        ));
    }

    fn assert_rel(&mut self, label: &str, measured: f64, expected: f64, rel_tol: f64) {
        let ok = (measured - expected).abs() <= rel_tol * expected.abs();
        self.passed &= ok;
        self.lines.push(format!(
            "{}: measured {measured:.6e}, expected {expected:.6e} ± {:.1}% [{}]",
            label,
            rel_tol * 100.0,
            if ok { "pass" } else { "FAIL" }
        ));
    }

    fn assert_true(&mut self, label: &str, ok: bool, detail: String) {
        self.passed &= ok;
        self.lines.push(format!(
            "{label}: {detail} [{}]",
            if ok { "pass" } else { "FAIL" }
        ));
    }
}

fn params(deph: f64, g0: f64, g1: f64, g2: f64, k1: f64, k2: f64) -> RateParams {
    RateParams::new(deph, g0, g1, g2, k1, k2).expect("valid check params")
}

/// Criterion 1: the baseline operating point.
pub fn criterion_baseline() -> CheckResult {
    let mut c = CheckResult::new("1", "baseline point (2γ*=1e4, g1=1e4, κ1=1e5, g2=1.3e3, κ2=6e2)");
    let start = Instant::now();
    match compute_point(&RateParams::baseline(), OutputMode::Cavity) {
        Ok(point) => {
            let m = point.metrics();
            c.assert_abs("I", m.indistinguishability, 0.9169, 0.005);
            c.assert_rel("beta", m.beta, 4.65e-3, 0.05);
            c.assert_abs("F_dB", m.f_db, 16.3, 0.2);
            let secs = start.elapsed().as_secs_f64();
            c.assert_true("runtime", secs < 5.0, format!("{secs:.2} s (< 5 s)"));
        }
        Err(e) => c.assert_true("compute", false, e.to_string()),
    }
    c
}

/// Criterion 2: the plasmon-only point.
pub fn criterion_plasmon_only() -> CheckResult {
    let mut c = CheckResult::new("2", "plasmon-only point (g2=g0=0, g1=1e4, κ1=1e5)");
    match compute_point(&params(1e4, 0.0, 1e4, 0.0, 1e5, 6e2), OutputMode::Plasmon) {
        Ok(point) => {
            c.assert_abs("I", point.metrics().indistinguishability, 0.2219, 0.005);
        }
        Err(e) => c.assert_true("compute", false, e.to_string()),
    }
    c
}

/// Criterion 3: the g0 enhancement ladder at g2=1e2, κ2=1e2.
pub fn criterion_g0_ladder() -> CheckResult {
    let mut c = CheckResult::new("3", "g0 enhancement ladder (g2=1e2, κ2=1e2)");
    let beta_at = |g0: f64| -> Result<f64, String> {
        compute_point(&params(1e4, g0, 1e4, 1e2, 1e5, 1e2), OutputMode::Cavity)
            .map(|p| p.metrics().beta)
            .map_err(|e| e.to_string())
    };
    match (beta_at(0.0), beta_at(1e2), beta_at(1e3)) {
        (Ok(b0), Ok(b100), Ok(b1000)) => {
            c.assert_rel("beta(g0=1e2)", b100, 7e-4, 0.10);
            c.assert_rel("beta(g0=1e3)", b1000, 1.97e-2, 0.10);
            c.assert_rel("beta ratio (g0=1e2)", b100 / b0, 25.0, 0.20);
            c.assert_rel("beta ratio (g0=1e3)", b1000 / b0, 582.0, 0.20);
        }
        (a, b, d) => {
            for r in [a, b, d] {
                if let Err(e) = r {
                    c.assert_true("compute", false, e);
                }
            }
        }
    }
    c
}

/// Criterion 4: the twelve-fold enhancement at g2=70, κ2=6e2, g0=50.
pub fn criterion_twelvefold() -> CheckResult {
    let mut c = CheckResult::new("4", "twelve-fold claim (g2=70, κ2=6e2, g0=50)");
    let p0 = compute_point(&params(1e4, 0.0, 1e4, 70.0, 1e5, 6e2), OutputMode::Cavity);
    let p50 = compute_point(&params(1e4, 50.0, 1e4, 70.0, 1e5, 6e2), OutputMode::Cavity);
    match (p0, p50) {
        (Ok(a), Ok(b)) => {
            let i50 = b.metrics().indistinguishability;
            c.assert_true("I(g0=50) > 0.80", i50 > 0.80, format!("measured {i50:.4}"));
            c.assert_rel(
                "beta(g0=50)/beta(g0=0)",
                b.metrics().beta / a.metrics().beta,
                12.0,
                0.20,
            );
        }
        (a, b) => {
            for r in [a.err(), b.err()].into_iter().flatten() {
                c.assert_true("compute", false, r.to_string());
            }
        }
    }
    c
}

/// Criterion 5: physical unit conversion to quality factors.
pub fn criterion_unit_conversion() -> CheckResult {
    let mut c = CheckResult::new("5", "unit conversion (λ=625 nm, κ2=600·Γ1)");
    let q1 = cavity_q_factor(&PhysicalSpec::new(625.0, 2.5).unwrap(), 600.0).unwrap();
    c.assert_abs("Q (T1=2.5 ns)", q1, 12558.0, 1.0);
    let q2 = cavity_q_factor(&PhysicalSpec::new(625.0, 2.0).unwrap(), 600.0).unwrap();
    c.assert_abs("Q (T1=2 ns)", q2, 10047.0, 1.0);
    c
}

/// Criterion 6: the effective-model regime point.
pub fn criterion_effective_regime() -> CheckResult {
    let mut c = CheckResult::new("6", "effective-model regime (g1=1e4, g2=1e2, κ2=300)");
    let eff = effective_params(&params(1e4, 0.0, 1e4, 1e2, 1e5, 3e2));
    let ratio = eff.kappa_eff / eff.gamma1_eff;
    c.assert_true(
        "κ'/Γ1' <= 0.1",
        ratio <= 0.1,
        format!("measured {ratio:.6}"),
    );
    c.assert_abs("κ'/Γ1'", ratio, 0.086, 0.002);
    c
}

/// Criterion 7: analytic-numeric overlap over the fig-3b line.
pub fn criterion_analytic_overlap() -> CheckResult {
    let mut c = CheckResult::new("7", "analytic vs numeric I over κ2 ∈ [1, 1e3] (20 points)");
    let mut worst = 0.0f64;
    let mut worst_k2 = 0.0f64;
    for i in 0..20 {
        let k2 = 10f64.powf(3.0 * i as f64 / 19.0);
        let p = params(1e4, 0.0, 1e4, 1e2, 1e5, k2);
        let numeric = match compute_point(&p, OutputMode::Cavity) {
            Ok(pt) => pt.metrics().indistinguishability,
            Err(e) => {
                c.assert_true("compute", false, format!("κ2={k2}: {e}"));
                return c;
            }
        };
        let ana = match analytic_metrics(&p) {
            Ok(m) => m.indistinguishability,
            Err(e) => {
                c.assert_true("analytic", false, format!("κ2={k2}: {e}"));
                return c;
            }
        };
        let dev = (ana - numeric).abs() / numeric;
        if dev > worst {
            worst = dev;
            worst_k2 = k2;
        }
    }
    c.assert_true(
        "max |I_analytic − I_numeric|/I_numeric <= 10%",
        worst <= 0.10,
        format!("measured {:.2}% at κ2={worst_k2:.1}", worst * 100.0),
    );
    c
}

/// Deterministic xorshift-based generator for the random-regime draws.
struct SplitMix64(u64);

impl SplitMix64 {
    fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    fn log_uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo * (hi / lo).powf(self.next_f64())
    }
}

/// Criterion 8: quadrature vs spectral oracle equivalence on random
/// in-regime parameter sets, plus the zero-dephasing unit-I limit.
pub fn criterion_oracle_equivalence() -> CheckResult {
    let mut c = CheckResult::new("8", "quadrature vs spectral on 50 random in-regime sets");
    let mut rng = SplitMix64(0x5eed);
    let mut worst_i = 0.0f64;
    let mut worst_b = 0.0f64;
    let mut evaluated = 0;
    while evaluated < 50 {
        let p = params(
            rng.log_uniform(1e2, 1e5),
            if rng.next_f64() < 0.5 {
                0.0
            } else {
                rng.log_uniform(1e0, 1e3)
            },
            rng.log_uniform(1e3, 1e5),
            rng.log_uniform(1e1, 1e4),
            rng.log_uniform(1e4, 1e7),
            rng.log_uniform(1e0, 1e4),
        );
        let point = match compute_point(&p, OutputMode::Cavity) {
            Ok(pt) => pt,
            Err(e) => {
                c.assert_true("compute", false, format!("{p:?}: {e}"));
                return c;
            }
        };
        let (Some(di), Some(db)) = (point.discrepancy_i, point.discrepancy_beta) else {
            c.assert_true("spectral", false, format!("{p:?}: spectral path unavailable"));
            return c;
        };
        worst_i = worst_i.max(di);
        worst_b = worst_b.max(db);
        evaluated += 1;
    }
    c.assert_true(
        "max I discrepancy <= 1e-3",
        worst_i <= 1e-3,
        format!("measured {worst_i:.2e}"),
    );
    c.assert_true(
        "max beta discrepancy <= 1e-3",
        worst_b <= 1e-3,
        format!("measured {worst_b:.2e}"),
    );
    // zero-dephasing draws force I = 1
    for seed in [1u64, 2, 3] {
        let mut r2 = SplitMix64(seed);
        let p = params(
            0.0,
            0.0,
            r2.log_uniform(1e3, 1e5),
            r2.log_uniform(1e1, 1e3),
            r2.log_uniform(1e4, 1e6),
            r2.log_uniform(1e1, 1e3),
        );
        match compute_point(&p, OutputMode::Cavity) {
            Ok(pt) => c.assert_abs(
                &format!("I at zero dephasing (seed {seed})"),
                pt.metrics().indistinguishability,
                1.0,
                1e-4,
            ),
            Err(e) => c.assert_true("compute", false, e.to_string()),
        }
    }
    c
}

/// Criterion 9: physics invariants along the trajectories of criteria 1–4.
pub fn criterion_physics_invariants() -> CheckResult {
    let mut c = CheckResult::new("9", "physics invariants on criteria 1–4 trajectories");
    let cases: [(&str, RateParams, OutputMode); 5] = [
        ("baseline", RateParams::baseline(), OutputMode::Cavity),
        (
            "plasmon-only",
            params(1e4, 0.0, 1e4, 0.0, 1e5, 6e2),
            OutputMode::Plasmon,
        ),
        (
            "ladder g0=1e2",
            params(1e4, 1e2, 1e4, 1e2, 1e5, 1e2),
            OutputMode::Cavity,
        ),
        (
            "ladder g0=1e3",
            params(1e4, 1e3, 1e4, 1e2, 1e5, 1e2),
            OutputMode::Cavity,
        ),
        (
            "twelvefold g0=50",
            params(1e4, 50.0, 1e4, 70.0, 1e5, 6e2),
            OutputMode::Cavity,
        ),
    ];
    for (label, p, mode) in cases {
        let traj = match propagate_density(&p, &GridSpec::default()) {
            Ok(t) => t,
            Err(e) => {
                c.assert_true(label, false, e.to_string());
                continue;
            }
        };
        let mut trace_ok = true;
        let mut herm_ok = true;
        let mut pos_ok = true;
        let mut prev = f64::INFINITY;
        for s in &traj.states {
            let tr = s.trace();
            trace_ok &= tr <= prev + 1e-10;
            prev = tr;
            herm_ok &= s.hermiticity_error() <= 1e-10;
            pos_ok &= s.min_eigenvalue() >= -1e-10;
        }
        c.assert_true(&format!("{label}: trace non-increasing"), trace_ok, "tol 1e-10".into());
        c.assert_true(&format!("{label}: hermiticity"), herm_ok, "tol 1e-10".into());
        c.assert_true(&format!("{label}: positivity"), pos_ok, "tol -1e-10".into());

        // Cauchy–Schwarz on the correlator grid
        let gen = effective_generator(&p);
        let prop = retarded_green(&gen, &GridSpec::default());
        match two_time_correlator(&p, &traj, &prop, mode) {
            Ok(corr) => {
                let mut cs_ok = true;
                let peak = corr.peak_population();
                let floor = 1e-15 * peak;
                for (i, &t) in corr.times.iter().enumerate().step_by(5) {
                    for (j, &tau) in corr.taus.iter().enumerate().step_by(5) {
                        let lhs = corr.samples[[i, j]].norm_sqr();
                        let bound = corr.pop_t[i].max(0.0)
                            * corr.population_at(t + tau).max(0.0)
                            * (1.0 + 1e-8)
                            + floor;
                        cs_ok &= lhs <= bound;
                    }
                }
                c.assert_true(&format!("{label}: Cauchy-Schwarz"), cs_ok, "tol 1e-8".into());
            }
            Err(e) => c.assert_true(label, false, e.to_string()),
        }

        // total leaked probability through the three decay channels
        let leak_integrand: Vec<f64> = traj
            .states
            .iter()
            .map(|s| {
                p.gamma1 * s.rho_ee().re + p.kappa1 * s.rho_pp().re + p.kappa2 * s.rho_cc().re
            })
            .collect();
        let leak = integrate(&traj.times, &leak_integrand);
        c.assert_abs(&format!("{label}: leaked probability"), leak, 1.0, 1e-6);
    }
    c
}

/// Criterion 10: Purcell cross-checks.
pub fn criterion_purcell() -> CheckResult {
    let mut c = CheckResult::new("10", "Purcell cross-checks");
    let g1 = g1_from_purcell(1029.0, 7.099e6, 1.0);
    c.assert_rel("g1 from F_p=1029, κ1=7.099e6", g1, 4.273e4, 1e-3);
    let rep = purcell_report(&params(1e4, 50.0, 1e4, 1.3e3, 1e5, 6e2)).unwrap();
    c.assert_abs("cavity Purcell (g0=50, κ2=600)", rep.cavity, 16.66, 0.01);
    c
}

/// Structural reproduction of the density figures (the acceptance note):
/// named operating points inside the I≥0.9 / F≥0 regions, region
/// containment between the g0=50 and g0=0 scans, fig3a/fig4 line checks.
pub fn structural_figures() -> CheckResult {
    let mut c = CheckResult::new("11", "figure structure (density-map regions, note)");

    // named point inside the I >= 0.9 region of the fig2 scan
    match compute_point(&RateParams::baseline(), OutputMode::Cavity) {
        Ok(pt) => {
            c.assert_true(
                "fig2: I at (κ2=600, g2=1300) >= 0.90",
                pt.metrics().indistinguishability >= 0.90,
                format!("measured {:.4}", pt.metrics().indistinguishability),
            );
        }
        Err(e) => c.assert_true("fig2 point", false, e.to_string()),
    }

    // region checks at reduced resolution (16x16) for suite runtime
    let shrink = |mut spec: crate::sweep::SweepSpec| {
        for ax in spec.axes.iter_mut() {
            if let Axis::Range { count, .. } = ax {
                *count = 16;
            }
        }
        spec
    };
    let fig2 = run_sweep(&shrink(figure_preset(FigurePreset::Fig2))).unwrap();
    let fig5 = run_sweep(&shrink(figure_preset(FigurePreset::Fig5))).unwrap();
    let high_i = fig2
        .rows
        .iter()
        .filter(|r| r.i.is_finite() && r.i >= 0.90)
        .count();
    c.assert_true(
        "fig2: I >= 0.9 region non-empty",
        high_i > 0,
        format!("{high_i} of {} cells", fig2.rows.len()),
    );
    // F >= 0 region of fig5 strictly contains fig2's for g2 <= 1e2
    let mut containment = true;
    let mut fig5_extra = 0usize;
    for (r2, r5) in fig2.rows.iter().zip(&fig5.rows) {
        let g2 = r2.axis_values[1];
        if g2 > 1e2 {
            continue;
        }
        let f2_pos = r2.f_db.is_finite() && r2.f_db >= 0.0;
        let f5_pos = r5.f_db.is_finite() && r5.f_db >= 0.0;
        if f2_pos && !f5_pos {
            containment = false;
        }
        if f5_pos && !f2_pos {
            fig5_extra += 1;
        }
    }
    c.assert_true(
        "fig5: F>=0 region contains fig2's (g2 <= 1e2) strictly",
        containment && fig5_extra > 0,
        format!("containment {containment}, {fig5_extra} extra cells"),
    );

    // fig4: beta non-decreasing in g0 for fixed κ2 in [1e1, 1e3]
    let fig4 = run_sweep(&figure_preset(FigurePreset::Fig4)).unwrap();
    let mut monotone = true;
    let k2_values = fig4.spec.axes[0].values();
    for (i, k2) in k2_values.iter().enumerate() {
        if *k2 < 1e1 || *k2 > 1e3 {
            continue;
        }
        let b: Vec<f64> = (0..3).map(|j| fig4.rows[3 * i + j].beta).collect();
        if !(b[0] <= b[1] * (1.0 + 1e-9) && b[1] <= b[2] * (1.0 + 1e-9)) {
            monotone = false;
        }
    }
    c.assert_true(
        "fig4: beta non-decreasing in g0",
        monotone,
        "checked κ2 ∈ [1e1, 1e3]".into(),
    );

    // fig3a: κ'/Γ1' <= 0.1 for κ2 <= 300 at g1 = 1e4
    let mut fig3a_ok = true;
    for k2 in [1.0, 3.0, 10.0, 30.0, 100.0, 300.0] {
        let eff = effective_params(&params(1e4, 0.0, 1e4, 1e2, 1e5, k2));
        fig3a_ok &= eff.kappa_eff / eff.gamma1_eff <= 0.1;
    }
    c.assert_true(
        "fig3a: κ'/Γ1' <= 0.1 for κ2 <= 300 at g1=1e4",
        fig3a_ok,
        "6 probe points".into(),
    );
    c
}

/// Spectral metrics must agree with the paper-facing quadrature metrics at
/// the baseline (cross-method sanity used by the report).
pub fn spectral_agreement_summary() -> String {
    match (
        compute_point(&RateParams::baseline(), OutputMode::Cavity),
        metrics_spectral(&RateParams::baseline(), OutputMode::Cavity),
    ) {
        (Ok(pt), Ok(_)) => format!(
            "baseline quadrature-vs-spectral discrepancy: I {:.2e}, beta {:.2e}",
            pt.discrepancy_i.unwrap_or(f64::NAN),
            pt.discrepancy_beta.unwrap_or(f64::NAN)
        ),
        _ => "baseline cross-method comparison unavailable".to_string(),
    }
}

/// Run the full suite in criterion order.
pub fn run_all() -> Vec<CheckResult> {
    vec![
        criterion_baseline(),
        criterion_plasmon_only(),
        criterion_g0_ladder(),
        criterion_twelvefold(),
        criterion_unit_conversion(),
        criterion_effective_regime(),
        criterion_analytic_overlap(),
        criterion_oracle_equivalence(),
        criterion_physics_invariants(),
        criterion_purcell(),
        structural_figures(),
    ]
}
