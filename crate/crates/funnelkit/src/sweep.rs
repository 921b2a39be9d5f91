//! 1-D and 2-D parameter grids with per-point numeric and analytic metrics.
//!
//! Grid points are independent pure computations evaluated in parallel;
//! per-point failures are recorded as NaN sentinels with flags, never
//! aborting the grid; row order is row-major over the declared axes and
//! identical across runs and thread counts.

use rayon::prelude::*;
use thiserror::Error;

use crate::analytic::{analytic_metrics, effective_params};
use crate::greens::OutputMode;
use crate::metrics::{compute_point, MetricsError};
use crate::params::RateParams;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid sweep spec: {0}")]
    InvalidSpec(String),
    #[error("unknown figure preset `{0}`")]
    UnknownPreset(String),
}

/// Which RateParams field an axis sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweptParam {
    Dephasing,
    G0,
    G1,
    G2,
    Kappa1,
    Kappa2,
}

impl SweptParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweptParam::Dephasing => "dephasing",
            SweptParam::G0 => "g0",
            SweptParam::G1 => "g1",
            SweptParam::G2 => "g2",
            SweptParam::Kappa1 => "kappa1",
            SweptParam::Kappa2 => "kappa2",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "dephasing" => Some(SweptParam::Dephasing),
            "g0" => Some(SweptParam::G0),
            "g1" => Some(SweptParam::G1),
            "g2" => Some(SweptParam::G2),
            "kappa1" => Some(SweptParam::Kappa1),
            "kappa2" => Some(SweptParam::Kappa2),
            _ => None,
        }
    }

    fn apply(&self, params: &mut RateParams, value: f64) {
        match self {
            SweptParam::Dephasing => params.pure_dephasing = value,
            SweptParam::G0 => params.g0 = value,
            SweptParam::G1 => params.g1 = value,
            SweptParam::G2 => params.g2 = value,
            SweptParam::Kappa1 => params.kappa1 = value,
            SweptParam::Kappa2 => params.kappa2 = value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisScale {
    Linear,
    Log,
}

/// One swept axis: a scaled range or an explicit value list (the latter is
/// needed for sets like g₀ ∈ {0, 1e2, 1e3} that no scale can produce).
#[derive(Debug, Clone)]
pub enum Axis {
    Range {
        param: SweptParam,
        scale: AxisScale,
        min: f64,
        max: f64,
        count: usize,
    },
    Values {
        param: SweptParam,
        values: Vec<f64>,
    },
}

impl Axis {
    pub fn param(&self) -> SweptParam {
        match self {
            Axis::Range { param, .. } | Axis::Values { param, .. } => *param,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Axis::Range { count, .. } => *count,
            Axis::Values { values, .. } => values.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn values(&self) -> Vec<f64> {
        match self {
            Axis::Values { values, .. } => values.clone(),
            Axis::Range {
                scale,
                min,
                max,
                count,
                ..
            } => {
                if *count == 1 {
                    return vec![*min];
                }
                let n = *count;
                (0..n)
                    .map(|i| {
                        let f = i as f64 / (n - 1) as f64;
                        match scale {
                            AxisScale::Linear => min + (max - min) * f,
                            AxisScale::Log => min * (max / min).powf(f),
                        }
                    })
                    .collect()
            }
        }
    }

    fn validate(&self) -> Result<(), SweepError> {
        match self {
            Axis::Range {
                scale,
                min,
                max,
                count,
                ..
            } => {
                if *count < 1 {
                    return Err(SweepError::InvalidSpec("axis count must be >= 1".into()));
                }
                if !min.is_finite() || !max.is_finite() || *min < 0.0 || *max < *min {
                    return Err(SweepError::InvalidSpec(format!(
                        "bad axis range [{min}, {max}]"
                    )));
                }
                if *scale == AxisScale::Log && *min <= 0.0 {
                    return Err(SweepError::InvalidSpec(
                        "log axis requires positive bounds".into(),
                    ));
                }
                Ok(())
            }
            Axis::Values { values, .. } => {
                if values.is_empty() {
                    return Err(SweepError::InvalidSpec("empty value axis".into()));
                }
                if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(SweepError::InvalidSpec(
                        "axis values must be finite and non-negative".into(),
                    ));
                }
                Ok(())
            }
        }
    }
}

/// Which computations run per grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodSelection {
    Numeric,
    Analytic,
    Both,
}

impl MethodSelection {
    fn numeric(&self) -> bool {
        matches!(self, MethodSelection::Numeric | MethodSelection::Both)
    }
    fn analytic(&self) -> bool {
        matches!(self, MethodSelection::Analytic | MethodSelection::Both)
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub base: RateParams,
    pub axes: Vec<Axis>,
    pub mode: OutputMode,
    pub methods: MethodSelection,
    pub preset: Option<FigurePreset>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), SweepError> {
        if self.axes.is_empty() || self.axes.len() > 2 {
            return Err(SweepError::InvalidSpec(
                "sweep needs one or two axes".into(),
            ));
        }
        for ax in &self.axes {
            ax.validate()?;
        }
        Ok(())
    }

    pub fn row_count(&self) -> usize {
        self.axes.iter().map(Axis::len).product()
    }
}

/// One evaluated grid point. Failed computations leave NaN and an error note.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub axis_values: Vec<f64>,
    pub i: f64,
    pub beta: f64,
    pub f_db: f64,
    pub i_analytic: f64,
    pub beta_analytic: f64,
    pub f_analytic_db: f64,
    pub converged: bool,
    pub regime_ok: bool,
    /// κ'/Γ'₁ regime metadata (not part of the CSV column contract).
    pub kappa_eff_ratio: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub rows: Vec<SweepRow>,
    pub tool_version: &'static str,
}

fn evaluate_point(spec: &SweepSpec, axis_values: &[f64]) -> SweepRow {
    let mut params = spec.base;
    for (ax, &v) in spec.axes.iter().zip(axis_values) {
        ax.param().apply(&mut params, v);
    }
    let eff = effective_params(&params);
    let mut row = SweepRow {
        axis_values: axis_values.to_vec(),
        i: f64::NAN,
        beta: f64::NAN,
        f_db: f64::NAN,
        i_analytic: f64::NAN,
        beta_analytic: f64::NAN,
        f_analytic_db: f64::NAN,
        converged: false,
        regime_ok: params.regime_flags().all(),
        kappa_eff_ratio: eff.kappa_eff / eff.gamma1_eff,
        error: None,
    };
    if spec.methods.numeric() {
        match compute_point(&params, spec.mode) {
            Ok(point) => {
                let m = point.metrics();
                row.i = m.indistinguishability;
                row.beta = m.beta;
                row.f_db = m.f_db;
                row.converged = point.converged && !point.suspect;
            }
            Err(MetricsError::NoPhotonFlux) => {
                row.beta = 0.0;
                row.f_db = f64::NEG_INFINITY;
                row.error = Some("no-flux".into());
            }
            Err(e) => {
                row.error = Some(e.to_string());
            }
        }
    } else {
        row.converged = true;
    }
    if spec.methods.analytic() {
        match analytic_metrics(&params) {
            Ok(m) => {
                row.i_analytic = m.indistinguishability;
                row.beta_analytic = m.beta;
                row.f_analytic_db = m.f_db;
            }
            Err(MetricsError::NoPhotonFlux) => {
                row.beta_analytic = 0.0;
                row.f_analytic_db = f64::NEG_INFINITY;
            }
            Err(e) => {
                if row.error.is_none() {
                    row.error = Some(e.to_string());
                }
            }
        }
    }
    row
}

/// Evaluate every grid point (in parallel, deterministic row-major order).
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult, SweepError> {
    spec.validate()?;
    let grids: Vec<Vec<f64>> = spec.axes.iter().map(Axis::values).collect();
    let mut points: Vec<Vec<f64>> = Vec::with_capacity(spec.row_count());
    match grids.len() {
        1 => {
            for &a in &grids[0] {
                points.push(vec![a]);
            }
        }
        _ => {
            for &a in &grids[0] {
                for &b in &grids[1] {
                    points.push(vec![a, b]);
                }
            }
        }
    }
    let rows: Vec<SweepRow> = points
        .par_iter()
        .map(|vals| evaluate_point(spec, vals))
        .collect();
    Ok(SweepResult {
        spec: spec.clone(),
        rows,
        tool_version: TOOL_VERSION,
    })
}

/// The figure presets: parameter scans matching the headline plots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigurePreset {
    Fig2,
    Fig3a,
    Fig3b,
    Fig4,
    Fig5,
    FigS3,
}

impl FigurePreset {
    pub fn parse(name: &str) -> Result<Self, SweepError> {
        match name {
            "fig2" => Ok(FigurePreset::Fig2),
            "fig3a" => Ok(FigurePreset::Fig3a),
            "fig3b" => Ok(FigurePreset::Fig3b),
            "fig4" => Ok(FigurePreset::Fig4),
            "fig5" => Ok(FigurePreset::Fig5),
            "figS3" | "figs3" => Ok(FigurePreset::FigS3),
            other => Err(SweepError::UnknownPreset(other.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FigurePreset::Fig2 => "fig2",
            FigurePreset::Fig3a => "fig3a",
            FigurePreset::Fig3b => "fig3b",
            FigurePreset::Fig4 => "fig4",
            FigurePreset::Fig5 => "fig5",
            FigurePreset::FigS3 => "figS3",
        }
    }
}

fn density_axes() -> Vec<Axis> {
    vec![
        Axis::Range {
            param: SweptParam::Kappa2,
            scale: AxisScale::Log,
            min: 1e1,
            max: 1e4,
            count: 50,
        },
        Axis::Range {
            param: SweptParam::G2,
            scale: AxisScale::Log,
            min: 1e1,
            max: 1e4,
            count: 50,
        },
    ]
}

/// Build the documented scan for a named figure.
pub fn figure_preset(preset: FigurePreset) -> SweepSpec {
    let base = |g0: f64, g1: f64, kappa1: f64| RateParams {
        pure_dephasing: 1e4,
        g0,
        g1,
        g2: 1e2,
        kappa1,
        kappa2: 6e2,
        gamma1: 1.0,
    };
    match preset {
        FigurePreset::Fig2 => SweepSpec {
            base: base(0.0, 1e4, 1e5),
            axes: density_axes(),
            mode: OutputMode::Cavity,
            methods: MethodSelection::Numeric,
            preset: Some(preset),
        },
        FigurePreset::Fig3a => SweepSpec {
            base: base(0.0, 1e4, 1e5),
            axes: vec![
                Axis::Range {
                    param: SweptParam::Kappa2,
                    scale: AxisScale::Log,
                    min: 1e0,
                    max: 1e3,
                    count: 40,
                },
                Axis::Range {
                    param: SweptParam::G1,
                    scale: AxisScale::Log,
                    min: 1e3,
                    max: 1e5,
                    count: 3,
                },
            ],
            mode: OutputMode::Cavity,
            methods: MethodSelection::Analytic,
            preset: Some(preset),
        },
        FigurePreset::Fig3b => SweepSpec {
            base: base(0.0, 1e4, 1e5),
            axes: vec![Axis::Range {
                param: SweptParam::Kappa2,
                scale: AxisScale::Log,
                min: 1e0,
                max: 1e3,
                count: 20,
            }],
            mode: OutputMode::Cavity,
            methods: MethodSelection::Both,
            preset: Some(preset),
        },
        FigurePreset::Fig4 => SweepSpec {
            base: base(0.0, 1e4, 1e5),
            axes: vec![
                Axis::Range {
                    param: SweptParam::Kappa2,
                    scale: AxisScale::Log,
                    min: 1e0,
                    max: 1e3,
                    count: 30,
                },
                Axis::Values {
                    param: SweptParam::G0,
                    values: vec![0.0, 1e2, 1e3],
                },
            ],
            mode: OutputMode::Cavity,
            methods: MethodSelection::Both,
            preset: Some(preset),
        },
        FigurePreset::Fig5 => SweepSpec {
            base: base(50.0, 1e4, 1e5),
            axes: density_axes(),
            mode: OutputMode::Cavity,
            methods: MethodSelection::Numeric,
            preset: Some(preset),
        },
        FigurePreset::FigS3 => SweepSpec {
            base: base(0.0, 3.417e4, 7.099e6),
            axes: density_axes(),
            mode: OutputMode::Cavity,
            methods: MethodSelection::Numeric,
            preset: Some(preset),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn preset_metadata() {
        let fig2 = figure_preset(FigurePreset::Fig2);
        assert_eq!(fig2.row_count(), 2500);
        assert_eq!(fig2.base.g0, 0.0);

        let fig5 = figure_preset(FigurePreset::Fig5);
        assert_eq!(fig5.base.g0, 50.0);

        let s3 = figure_preset(FigurePreset::FigS3);
        assert_eq!(s3.base.g1, 3.417e4);
        assert_eq!(s3.base.kappa1, 7.099e6);

        let fig3a = figure_preset(FigurePreset::Fig3a);
        let g1_axis = fig3a.axes[1].values();
        assert_eq!(g1_axis.len(), 3);
        assert_relative_eq!(g1_axis[0], 1e3, max_relative = 1e-12);
        assert_relative_eq!(g1_axis[1], 1e4, max_relative = 1e-12);
        assert_relative_eq!(g1_axis[2], 1e5, max_relative = 1e-12);

        let fig4 = figure_preset(FigurePreset::Fig4);
        assert_eq!(fig4.axes[1].values(), vec![0.0, 1e2, 1e3]);

        assert!(matches!(
            FigurePreset::parse("fig9"),
            Err(SweepError::UnknownPreset(_))
        ));
    }

    #[test]
    fn degenerate_grid_matches_compute_point() {
        let base = RateParams::baseline();
        let spec = SweepSpec {
            base,
            axes: vec![Axis::Range {
                param: SweptParam::Kappa2,
                scale: AxisScale::Log,
                min: 6e2,
                max: 6e2,
                count: 1,
            }],
            mode: OutputMode::Cavity,
            methods: MethodSelection::Both,
            preset: None,
        };
        let result = run_sweep(&spec).unwrap();
        assert_eq!(result.rows.len(), 1);
        let row = &result.rows[0];
        let point = compute_point(&base, OutputMode::Cavity).unwrap();
        assert_eq!(row.i, point.metrics().indistinguishability);
        assert_eq!(row.beta, point.metrics().beta);
        assert_eq!(row.f_db, point.metrics().f_db);
        assert!(row.converged);
    }

    #[test]
    fn rows_are_row_major_and_deterministic() {
        let spec = SweepSpec {
            base: RateParams::baseline(),
            axes: vec![
                Axis::Values {
                    param: SweptParam::Kappa2,
                    values: vec![3e2, 6e2, 1e3],
                },
                Axis::Values {
                    param: SweptParam::G2,
                    values: vec![1e2, 1.3e3],
                },
            ],
            mode: OutputMode::Cavity,
            methods: MethodSelection::Analytic,
            preset: None,
        };
        let a = run_sweep(&spec).unwrap();
        assert_eq!(a.rows.len(), 6);
        let expect = [
            (3e2, 1e2),
            (3e2, 1.3e3),
            (6e2, 1e2),
            (6e2, 1.3e3),
            (1e3, 1e2),
            (1e3, 1.3e3),
        ];
        for (row, (k2, g2)) in a.rows.iter().zip(expect) {
            assert_eq!(row.axis_values, vec![k2, g2]);
        }
        let b = run_sweep(&spec).unwrap();
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            assert!(ra.i_analytic.to_bits() == rb.i_analytic.to_bits());
            assert!(ra.beta_analytic.to_bits() == rb.beta_analytic.to_bits());
        }
    }

    #[test]
    fn per_row_failure_isolation() {
        // g2 = g0 = 0 row has no flux; the rest of the grid still evaluates
        let mut base = RateParams::baseline();
        base.g0 = 0.0;
        let spec = SweepSpec {
            base,
            axes: vec![Axis::Values {
                param: SweptParam::G2,
                values: vec![0.0, 1.3e3],
            }],
            mode: OutputMode::Cavity,
            methods: MethodSelection::Numeric,
            preset: None,
        };
        let result = run_sweep(&spec).unwrap();
        assert_eq!(result.rows.len(), 2);
        assert!(result.rows[0].i.is_nan());
        assert_eq!(result.rows[0].beta, 0.0);
        assert_eq!(result.rows[0].error.as_deref(), Some("no-flux"));
        assert!(result.rows[1].i.is_finite());
        assert!(result.rows[1].converged);
    }

    #[test]
    fn invalid_specs_rejected() {
        let base = RateParams::baseline();
        let bad_log = SweepSpec {
            base,
            axes: vec![Axis::Range {
                param: SweptParam::G0,
                scale: AxisScale::Log,
                min: 0.0,
                max: 1e3,
                count: 5,
            }],
            mode: OutputMode::Cavity,
            methods: MethodSelection::Analytic,
            preset: None,
        };
        assert!(matches!(
            run_sweep(&bad_log),
            Err(SweepError::InvalidSpec(_))
        ));

        let no_axes = SweepSpec {
            base,
            axes: vec![],
            mode: OutputMode::Cavity,
            methods: MethodSelection::Analytic,
            preset: None,
        };
        assert!(matches!(
            run_sweep(&no_axes),
            Err(SweepError::InvalidSpec(_))
        ));
    }
}
