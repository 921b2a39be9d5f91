//! Rate parameters, validation, presets, and physical-unit conversions.
//!
//! Everything downstream works in Γ₁-normalized units: a rate of `x` means
//! `x·Γ₁`. The stored dephasing field is the full 2γ* (the paper-facing
//! number); formulas that need γ* divide by two internally.

use std::collections::BTreeMap;

use thiserror::Error;

/// Speed of light, m/s (exact).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Error, PartialEq)]
pub enum ParamsError {
    #[error("missing field `{0}`")]
    MissingField(String),
    #[error("rate `{field}` must be non-negative, got {value}")]
    NegativeRate { field: String, value: f64 },
    #[error("field `{field}` is not finite")]
    NonFiniteValue { field: String },
    #[error("decay rate `{0}` must be positive")]
    ZeroDecayRate(String),
}

/// Advisory weak-coupling indicators.
///
/// True means the corresponding coupling is well inside the regime where the
/// adiabatic (rate-equation) reduction is trustworthy. These are metadata,
/// never hard errors: the closed forms are evaluated everywhere and the
/// caller sees the flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegimeFlags {
    /// 2g₁ small against Γ₁ + 2γ* + κ₁.
    pub g1_weak: bool,
    /// 2g₂ small against κ₁ + κ₂.
    pub g2_weak: bool,
    /// 2g₀ small against Γ₁ + 2γ* + κ₂.
    pub g0_weak: bool,
}

impl RegimeFlags {
    pub fn all(&self) -> bool {
        self.g1_weak && self.g2_weak && self.g0_weak
    }
}

/// The six normalized system rates, in units of Γ₁.
///
/// Single source of truth for every other module. `gamma1` is 1 in
/// normalized form but is kept explicit so the analytic formulas also work
/// on non-normalized inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateParams {
    /// Full pure-dephasing rate 2γ*.
    pub pure_dephasing: f64,
    /// Direct emitter ↔ outer-cavity coupling.
    pub g0: f64,
    /// Emitter ↔ plasmon coupling.
    pub g1: f64,
    /// Plasmon ↔ outer-cavity coupling.
    pub g2: f64,
    /// Plasmon decay rate.
    pub kappa1: f64,
    /// Outer-cavity decay rate.
    pub kappa2: f64,
    /// Emitter decay rate (1 in normalized units).
    pub gamma1: f64,
}

impl RateParams {
    pub fn new(
        pure_dephasing: f64,
        g0: f64,
        g1: f64,
        g2: f64,
        kappa1: f64,
        kappa2: f64,
    ) -> Result<Self, ParamsError> {
        let p = Self {
            pure_dephasing,
            g0,
            g1,
            g2,
            kappa1,
            kappa2,
            gamma1: 1.0,
        };
        p.check()?;
        Ok(p)
    }

    fn check(&self) -> Result<(), ParamsError> {
        for (name, v) in self.fields() {
            if !v.is_finite() {
                return Err(ParamsError::NonFiniteValue {
                    field: name.to_string(),
                });
            }
            if v < 0.0 {
                return Err(ParamsError::NegativeRate {
                    field: name.to_string(),
                    value: v,
                });
            }
        }
        Ok(())
    }

    fn fields(&self) -> [(&'static str, f64); 7] {
        [
            ("dephasing", self.pure_dephasing),
            ("g0", self.g0),
            ("g1", self.g1),
            ("g2", self.g2),
            ("kappa1", self.kappa1),
            ("kappa2", self.kappa2),
            ("gamma1", self.gamma1),
        ]
    }

    /// γ* (half the stored 2γ* field).
    pub fn gamma_star(&self) -> f64 {
        self.pure_dephasing / 2.0
    }

    /// Weak-coupling advisory flags, with a factor-of-10 margin on each
    /// coupling amplitude against the relevant width sum.
    pub fn regime_flags(&self) -> RegimeFlags {
        let w1 = self.gamma1 + self.pure_dephasing + self.kappa1;
        let w2 = self.kappa1 + self.kappa2;
        let w0 = self.gamma1 + self.pure_dephasing + self.kappa2;
        RegimeFlags {
            g1_weak: 2.0 * self.g1 <= 0.2 * w1,
            g2_weak: 2.0 * self.g2 <= 0.2 * w2,
            g0_weak: 2.0 * self.g0 <= 0.2 * w0,
        }
    }

    /// The paper's main operating point: 2γ*=1e4, g₁=1e4, κ₁=1e5,
    /// g₂=1.3e3, κ₂=6e2, g₀=0.
    pub fn baseline() -> Self {
        Self {
            pure_dephasing: 1e4,
            g0: 0.0,
            g1: 1e4,
            g2: 1.3e3,
            kappa1: 1e5,
            kappa2: 6e2,
            gamma1: 1.0,
        }
    }
}

/// Validate a raw key → value map into [`RateParams`].
///
/// Required keys: `dephasing`, `g0`, `g1`, `g2`, `kappa1`, `kappa2`.
/// Unknown keys are ignored here (the config-file layer rejects them with
/// line diagnostics).
pub fn validate_params(raw: &BTreeMap<String, f64>) -> Result<RateParams, ParamsError> {
    let get = |key: &str| -> Result<f64, ParamsError> {
        raw.get(key)
            .copied()
            .ok_or_else(|| ParamsError::MissingField(key.to_string()))
    };
    RateParams::new(
        get("dephasing")?,
        get("g0")?,
        get("g1")?,
        get("g2")?,
        get("kappa1")?,
        get("kappa2")?,
    )
}

/// Physical description of the emitter and its operating wavelength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalSpec {
    pub wavelength_nm: f64,
    pub lifetime_ns: f64,
}

impl PhysicalSpec {
    pub fn new(wavelength_nm: f64, lifetime_ns: f64) -> Result<Self, ParamsError> {
        for (name, v) in [("wavelength_nm", wavelength_nm), ("lifetime_ns", lifetime_ns)] {
            if !v.is_finite() {
                return Err(ParamsError::NonFiniteValue {
                    field: name.to_string(),
                });
            }
            if v <= 0.0 {
                return Err(ParamsError::NegativeRate {
                    field: name.to_string(),
                    value: v,
                });
            }
        }
        Ok(Self {
            wavelength_nm,
            lifetime_ns,
        })
    }

    /// Γ₁ in rad/s: 1/T₁.
    pub fn gamma1_physical(&self) -> f64 {
        1.0 / (self.lifetime_ns * 1e-9)
    }

    /// Angular frequency ω = 2πc/λ in rad/s.
    pub fn omega(&self) -> f64 {
        2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / (self.wavelength_nm * 1e-9)
    }
}

/// Convert a physical rate (rad/s) to Γ₁ units: rate · T₁.
pub fn to_normalized(spec: &PhysicalSpec, physical_rate: f64) -> Result<f64, ParamsError> {
    if !physical_rate.is_finite() {
        return Err(ParamsError::NonFiniteValue {
            field: "physical_rate".to_string(),
        });
    }
    Ok(physical_rate * spec.lifetime_ns * 1e-9)
}

/// Convert a Γ₁-normalized rate back to rad/s.
pub fn to_physical(spec: &PhysicalSpec, normalized_rate: f64) -> Result<f64, ParamsError> {
    if !normalized_rate.is_finite() {
        return Err(ParamsError::NonFiniteValue {
            field: "normalized_rate".to_string(),
        });
    }
    Ok(normalized_rate / (spec.lifetime_ns * 1e-9))
}

/// Quality factor of the outer cavity: Q = ω/κ₂ with κ₂ in rad/s.
pub fn cavity_q_factor(spec: &PhysicalSpec, kappa2_normalized: f64) -> Result<f64, ParamsError> {
    if !(kappa2_normalized > 0.0) {
        return Err(ParamsError::ZeroDecayRate("kappa2".to_string()));
    }
    let kappa2_phys = kappa2_normalized / (spec.lifetime_ns * 1e-9);
    Ok(spec.omega() / kappa2_phys)
}

/// Inverse of [`cavity_q_factor`]: the normalized κ₂ for a given Q.
pub fn q_to_kappa2(spec: &PhysicalSpec, q: f64) -> Result<f64, ParamsError> {
    if !(q > 0.0) {
        return Err(ParamsError::ZeroDecayRate("Q".to_string()));
    }
    Ok(spec.omega() * spec.lifetime_ns * 1e-9 / q)
}

/// A named parameter set with a provenance note.
#[derive(Debug, Clone)]
pub struct Preset {
    pub name: &'static str,
    pub params: RateParams,
    pub note: &'static str,
}

/// The bowtie registry: the three FDTD-derived (g₁, κ₁) pairs, each paired
/// with the main-text operating point for the remaining rates.
pub fn preset_registry() -> Vec<Preset> {
    let with = |g1: f64| RateParams {
        pure_dephasing: 1e4,
        g0: 0.0,
        g1,
        g2: 1.3e3,
        kappa1: 7.099e6,
        kappa2: 6e2,
        gamma1: 1.0,
    };
    vec![
        Preset {
            name: "bowtie-optimal",
            params: with(4.273e4),
            note: "aluminum bowtie, emitter centered (F_p = 1029, kappa1 = 7.099e6); \
                   dephasing/g2/kappa2 from the main-text operating point",
        },
        Preset {
            name: "bowtie-conservative",
            params: with(3.417e4),
            note: "aluminum bowtie, intermediate coupling estimate; \
                   dephasing/g2/kappa2 from the main-text operating point",
        },
        Preset {
            name: "bowtie-displaced",
            params: with(2.56e4),
            note: "aluminum bowtie, emitter displaced 10 nm (F_p = 369.304); \
                   dephasing/g2/kappa2 from the main-text operating point",
        },
    ]
}

/// Look up a preset by name.
pub fn preset(name: &str) -> Option<Preset> {
    preset_registry().into_iter().find(|p| p.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn raw(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn baseline_valid_all_flags_true() {
        let p = validate_params(&raw(&[
            ("dephasing", 1e4),
            ("g0", 0.0),
            ("g1", 1e4),
            ("g2", 1.3e3),
            ("kappa1", 1e5),
            ("kappa2", 6e2),
        ]))
        .unwrap();
        assert_eq!(p, RateParams::baseline());
        assert!(p.regime_flags().all());
    }

    #[test]
    fn all_zeros_is_valid_decoupled_system() {
        let p = validate_params(&raw(&[
            ("dephasing", 0.0),
            ("g0", 0.0),
            ("g1", 0.0),
            ("g2", 0.0),
            ("kappa1", 0.0),
            ("kappa2", 0.0),
        ]))
        .unwrap();
        assert_eq!(p.gamma1, 1.0);
        assert!(p.regime_flags().all());
    }

    #[test]
    fn negative_rate_rejected() {
        let err = validate_params(&raw(&[
            ("dephasing", 1e4),
            ("g0", 0.0),
            ("g1", -1.0),
            ("g2", 0.0),
            ("kappa1", 1e5),
            ("kappa2", 6e2),
        ]))
        .unwrap_err();
        assert!(matches!(err, ParamsError::NegativeRate { .. }));
    }

    #[test]
    fn missing_field_rejected() {
        let err = validate_params(&raw(&[("dephasing", 1e4)])).unwrap_err();
        assert!(matches!(err, ParamsError::MissingField(_)));
    }

    #[test]
    fn nan_rejected() {
        let err = validate_params(&raw(&[
            ("dephasing", f64::NAN),
            ("g0", 0.0),
            ("g1", 0.0),
            ("g2", 0.0),
            ("kappa1", 0.0),
            ("kappa2", 0.0),
        ]))
        .unwrap_err();
        assert!(matches!(err, ParamsError::NonFiniteValue { .. }));
    }

    #[test]
    fn strong_coupling_flags_false() {
        // g1 = 1e5 against widths 1 + 1e4 + 1e5 is strong coupling
        let p = RateParams::new(1e4, 0.0, 1e5, 1e2, 1e5, 3e2).unwrap();
        assert!(!p.regime_flags().g1_weak);
    }

    #[test]
    fn kappa1_conversion_matches_bowtie() {
        // FWHM 2839.68e12 rad/s at T1 = 2.5 ns
        let spec = PhysicalSpec::new(625.0, 2.5).unwrap();
        let k1 = to_normalized(&spec, 2839.68e12).unwrap();
        assert_relative_eq!(k1, 7.099e6, max_relative = 1e-3);
    }

    #[test]
    fn to_normalized_zero_and_identity() {
        let spec = PhysicalSpec::new(625.0, 2.5).unwrap();
        assert_eq!(to_normalized(&spec, 0.0).unwrap(), 0.0);
        let one_ns = PhysicalSpec::new(625.0, 1.0).unwrap();
        assert_relative_eq!(to_normalized(&one_ns, 1e9).unwrap(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn to_normalized_is_linear() {
        let spec = PhysicalSpec::new(625.0, 2.5).unwrap();
        for r in [1.0, 1e3, 1e9, 2839.68e12] {
            let a = to_normalized(&spec, r).unwrap();
            let b = to_normalized(&spec, 3.0 * r).unwrap();
            assert_relative_eq!(b, 3.0 * a, max_relative = 1e-12);
        }
    }

    #[test]
    fn q_factor_paper_values() {
        let spec = PhysicalSpec::new(625.0, 2.5).unwrap();
        let q = cavity_q_factor(&spec, 600.0).unwrap();
        assert!((q - 12558.0).abs() <= 1.0, "Q = {q}");

        let spec2 = PhysicalSpec::new(625.0, 2.0).unwrap();
        let q2 = cavity_q_factor(&spec2, 600.0).unwrap();
        assert!((q2 - 10047.0).abs() <= 1.0, "Q = {q2}");
    }

    #[test]
    fn q_round_trip() {
        let spec = PhysicalSpec::new(625.0, 2.5).unwrap();
        for k2 in [1.0, 600.0, 1e4] {
            let q = cavity_q_factor(&spec, k2).unwrap();
            let back = q_to_kappa2(&spec, q).unwrap();
            assert_relative_eq!(back, k2, max_relative = 1e-12);
            // Q · kappa2(physical) = omega by construction
            let k2_phys = to_physical(&spec, k2).unwrap();
            assert_relative_eq!(q * k2_phys, spec.omega(), max_relative = 1e-12);
        }
    }

    #[test]
    fn q_factor_rejects_zero_kappa() {
        let spec = PhysicalSpec::new(625.0, 2.5).unwrap();
        assert!(matches!(
            cavity_q_factor(&spec, 0.0),
            Err(ParamsError::ZeroDecayRate(_))
        ));
    }

    #[test]
    fn registry_contains_exactly_the_bowtie_triples() {
        let reg = preset_registry();
        assert_eq!(reg.len(), 3);
        let expect = [
            ("bowtie-optimal", 4.273e4),
            ("bowtie-conservative", 3.417e4),
            ("bowtie-displaced", 2.56e4),
        ];
        for (name, g1) in expect {
            let p = preset(name).unwrap();
            assert_eq!(p.params.g1, g1);
            assert_eq!(p.params.kappa1, 7.099e6);
        }
        // names unique
        let mut names: Vec<_> = reg.iter().map(|p| p.name).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), 3);
    }
}
