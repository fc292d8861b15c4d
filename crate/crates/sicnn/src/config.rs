//! Run configuration: JSON documents and the bundled demonstration preset.
//!
//! A [`RunConfig`] is a fully-validated description of one model instance —
//! network, argument schedule, activation, solver tunables, and optional
//! initial data. Configs come from JSON documents (unknown keys rejected) or
//! from [`RunConfig::example6`], the bundled 3×3 demonstration network whose
//! certification margins and solution envelope are exercised throughout the
//! test suite.

use serde::Deserialize;

use crate::activation::{ActivationKind, ActivationSpec, ScalarRule};
use crate::error::{Result, SicnnError};
use crate::exec::ExecMode;
use crate::grid::Grid;
use crate::network::{InputSignal, InputTerm, NetworkSpec, Waveform};
use crate::schedule::{ArgumentSchedule, DeclaredSpacing, ScheduleRule};
use crate::solver::{IvpSetup, Quadrature, SolverOptions};

/// Index half-width of generated schedules: intervals `p ∈ [−span, span]`.
fn default_index_span() -> i64 {
    5000
}

/// Top-level run configuration.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub network: NetworkConfig,
    pub schedule: ScheduleConfig,
    pub activation: ActivationConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub initial: Option<InitialConfig>,
}

/// Cell-grid description: per-cell decay, coupling, inputs.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub rows: usize,
    pub cols: usize,
    /// Chebyshev neighborhood radius.
    pub radius: usize,
    /// Retardation window τ ≥ 0.
    pub tau: f64,
    pub decay: Vec<Vec<f64>>,
    pub coupling: Vec<Vec<f64>>,
    /// One entry per cell, row-major: the trigonometric terms of `L_ij`.
    pub inputs: Vec<Vec<InputTerm>>,
}

/// Argument-schedule description.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleConfig {
    /// The bundled quasi-periodic schedule
    /// `θ_p = p + |sin p − cos(√2 p)|/4`, anchors at the breakpoints.
    Example6 {
        #[serde(default = "default_index_span")]
        index_span: i64,
    },
    /// Uniform schedule `θ_p = offset + gap·p`, `ζ_p = θ_p + anchor_shift`.
    Affine {
        gap: f64,
        #[serde(default)]
        offset: f64,
        #[serde(default)]
        anchor_shift: f64,
        #[serde(default = "default_index_span")]
        index_span: i64,
    },
    /// Explicit breakpoint/anchor tables over `p ∈ [p_min, p_min + len − 1]`.
    Table {
        p_min: i64,
        theta: Vec<f64>,
        zeta: Vec<f64>,
    },
}

impl ScheduleConfig {
    pub fn build(&self) -> Result<ArgumentSchedule> {
        match self {
            ScheduleConfig::Example6 { index_span } => {
                let span = positive_span(*index_span)?;
                ArgumentSchedule::new(
                    ScheduleRule::Example6,
                    -span,
                    span,
                    DeclaredSpacing {
                        gap_upper: 1.5,
                        gap_lower: 0.5,
                        anchor_gap_lower: 0.5,
                    },
                )
            }
            ScheduleConfig::Affine {
                gap,
                offset,
                anchor_shift,
                index_span,
            } => {
                let span = positive_span(*index_span)?;
                ArgumentSchedule::new(
                    ScheduleRule::Affine {
                        gap: *gap,
                        offset: *offset,
                        anchor_shift: *anchor_shift,
                    },
                    -span,
                    span,
                    DeclaredSpacing {
                        gap_upper: *gap,
                        gap_lower: *gap,
                        anchor_gap_lower: *gap,
                    },
                )
            }
            ScheduleConfig::Table { p_min, theta, zeta } => {
                if theta.len() < 3 {
                    return Err(SicnnError::Config(
                        "table schedule needs at least three breakpoints".into(),
                    ));
                }
                let gaps: Vec<f64> = theta.windows(2).map(|w| w[1] - w[0]).collect();
                let anchor_gaps: Vec<f64> = zeta.windows(2).map(|w| w[1] - w[0]).collect();
                let declared = DeclaredSpacing {
                    gap_upper: gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                    gap_lower: gaps.iter().copied().fold(f64::INFINITY, f64::min),
                    anchor_gap_lower: anchor_gaps.iter().copied().fold(f64::INFINITY, f64::min),
                };
                let p_max = p_min + zeta.len() as i64 - 1;
                ArgumentSchedule::new(
                    ScheduleRule::Table {
                        theta: theta.clone(),
                        zeta: zeta.clone(),
                    },
                    *p_min,
                    p_max,
                    declared,
                )
            }
        }
    }
}

fn positive_span(span: i64) -> Result<i64> {
    if span < 1 {
        return Err(SicnnError::Config(format!(
            "schedule index span must be at least 1, got {span}"
        )));
    }
    Ok(span)
}

/// Activation description: reduction form, scalar rule, declared constants.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActivationConfig {
    pub form: ActivationKind,
    pub rule: ScalarRule,
    /// Declared uniform bound `M`.
    pub bound: f64,
    /// Declared Lipschitz constant `L`.
    pub lipschitz: f64,
}

impl ActivationConfig {
    pub fn build(&self) -> Result<ActivationSpec> {
        ActivationSpec::new(self.form, self.rule, self.bound, self.lipschitz)
    }
}

/// Optional solver overrides; anything unset falls back to problem-scaled
/// defaults.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub step: Option<f64>,
    pub picard_tol: Option<f64>,
    pub picard_max_iters: Option<usize>,
    pub quadrature: Option<Quadrature>,
    pub exec: Option<ExecMode>,
}

impl SolverConfig {
    pub fn apply(&self, base: SolverOptions) -> SolverOptions {
        SolverOptions {
            step: self.step.unwrap_or(base.step),
            picard_tol: self.picard_tol.unwrap_or(base.picard_tol),
            picard_max_iters: self.picard_max_iters.unwrap_or(base.picard_max_iters),
            quadrature: self.quadrature.unwrap_or(base.quadrature),
            exec: self.exec.unwrap_or(base.exec),
        }
    }
}

/// Initial data: start time and a constant segment value per cell.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub sigma: f64,
    pub values: Vec<Vec<f64>>,
}

/// Everything a command needs, constructed and cross-validated.
#[derive(Debug, Clone)]
pub struct BuiltModel {
    pub net: NetworkSpec,
    pub schedule: ArgumentSchedule,
    pub act: ActivationSpec,
    pub opts: SolverOptions,
    pub setup: Option<IvpSetup>,
}

impl RunConfig {
    /// Parse a JSON document; unknown keys are rejected.
    pub fn from_json(text: &str) -> Result<RunConfig> {
        serde_json::from_str(text).map_err(|e| SicnnError::Config(format!("config: {e}")))
    }

    /// Build and cross-validate every component.
    pub fn build(&self) -> Result<BuiltModel> {
        let nc = &self.network;
        let decay = Grid::from_rows(&nc.decay)?;
        let coupling = Grid::from_rows(&nc.coupling)?;
        if decay.rows() != nc.rows || decay.cols() != nc.cols {
            return Err(SicnnError::Config(format!(
                "decay grid is {}×{} but the network declares {}×{}",
                decay.rows(),
                decay.cols(),
                nc.rows,
                nc.cols
            )));
        }
        let inputs: Vec<InputSignal> = nc
            .inputs
            .iter()
            .map(|terms| InputSignal::from_terms(terms.clone()))
            .collect();
        let net = NetworkSpec::new(nc.radius, decay, coupling, inputs, nc.tau)?;
        let schedule = self.schedule.build()?;
        let act = self.activation.build()?;
        let opts = self
            .solver
            .apply(SolverOptions::for_problem(&net, &schedule));
        opts.validate(&schedule)?;
        let setup = match &self.initial {
            Some(init) => {
                let values = Grid::from_rows(&init.values)?;
                if values.rows() != nc.rows || values.cols() != nc.cols {
                    return Err(SicnnError::Config(format!(
                        "initial values are {}×{} but the network is {}×{}",
                        values.rows(),
                        values.cols(),
                        nc.rows,
                        nc.cols
                    )));
                }
                Some(IvpSetup::constant(init.sigma, &values))
            }
            None => None,
        };
        Ok(BuiltModel {
            net,
            schedule,
            act,
            opts,
            setup,
        })
    }

    /// The bundled 3×3 demonstration network: nine quasi-periodic inputs, a
    /// square-and-halve activation plateauing at 0.005, retardation 0.3, and
    /// the quasi-periodic schedule with unit-mean spacing. All certification
    /// conditions hold with wide margins, making this the canonical instance
    /// for tests and walkthroughs.
    pub fn example6() -> RunConfig {
        use std::f64::consts::{PI, SQRT_2};
        let sqrt3 = 3.0f64.sqrt();
        let cos = |amplitude: f64, angular_frequency: f64| InputTerm {
            amplitude,
            angular_frequency,
            phase: 0.0,
            kind: Waveform::Cosine,
        };
        let sin = |amplitude: f64, angular_frequency: f64| InputTerm {
            amplitude,
            angular_frequency,
            phase: 0.0,
            kind: Waveform::Sine,
        };
        RunConfig {
            network: NetworkConfig {
                rows: 3,
                cols: 3,
                radius: 1,
                tau: 0.3,
                decay: vec![
                    vec![9.0, 3.0, 5.0],
                    vec![6.0, 5.0, 4.0],
                    vec![3.0, 12.0, 9.0],
                ],
                coupling: vec![
                    vec![0.08, 0.01, 0.02],
                    vec![0.05, 0.03, 0.06],
                    vec![0.04, 0.07, 0.02],
                ],
                inputs: vec![
                    vec![cos(0.1, 1.0), sin(0.2, SQRT_2)],
                    vec![cos(0.2, PI), sin(0.1, SQRT_2)],
                    vec![cos(0.15, 2.0), cos(-0.12, PI)],
                    vec![cos(0.15, 3.0), sin(-0.1, PI)],
                    vec![cos(0.2, 1.0), sin(-0.15, SQRT_2)],
                    vec![sin(0.1, 1.0), cos(0.2, sqrt3)],
                    vec![cos(0.2, SQRT_2), sin(0.14, PI)],
                    vec![cos(0.2, SQRT_2), sin(0.1, 1.0)],
                    vec![cos(0.15, SQRT_2), cos(-0.13, 4.0)],
                ],
            },
            schedule: ScheduleConfig::Example6 {
                index_span: default_index_span(),
            },
            activation: ActivationConfig {
                form: ActivationKind::ArgumentDelayed,
                rule: ScalarRule::QuadraticCap {
                    threshold: 0.1,
                    plateau: 0.005,
                },
                bound: 0.005,
                lipschitz: 0.1,
            },
            solver: SolverConfig::default(),
            initial: Some(InitialConfig {
                sigma: 0.25,
                values: vec![
                    vec![-0.025, 0.036, -0.014],
                    vec![0.012, -0.021, 0.042],
                    vec![0.023, -0.015, 0.012],
                ],
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_preset_builds_and_scales_the_step() {
        let model = RunConfig::example6().build().unwrap();
        assert_eq!(model.net.cell_count(), 9);
        assert_eq!(model.net.tau(), 0.3);
        assert_eq!(model.act.bound(), 0.005);
        // h = min(θ̲, τ, 1)/50 = 0.3/50.
        assert!((model.opts.step - 0.006).abs() < 1e-15);
        let setup = model.setup.unwrap();
        assert_eq!(setup.sigma, 0.25);
        // σ = θ₀ exactly, which equals the interval's anchor.
        assert_eq!(model.schedule.breakpoint(0).unwrap(), 0.25);
    }

    #[test]
    fn json_roundtrip_of_a_small_affine_config() {
        let text = r#"{
            "network": {
                "rows": 1, "cols": 1, "radius": 0, "tau": 0.2,
                "decay": [[2.0]],
                "coupling": [[0.1]],
                "inputs": [[{"kind": "cosine", "amplitude": 0.3, "angular_frequency": 1.0}]]
            },
            "schedule": {"kind": "affine", "gap": 1.0, "index_span": 50},
            "activation": {
                "form": {"kind": "argument"},
                "rule": {"rule": "linear_clip", "slope": 1.0, "cap": 1.0},
                "bound": 1.0, "lipschitz": 1.0
            },
            "solver": {"step": 0.01, "quadrature": "simpson"},
            "initial": {"sigma": 0.0, "values": [[0.5]]}
        }"#;
        let model = RunConfig::from_json(text).unwrap().build().unwrap();
        assert_eq!(model.opts.step, 0.01);
        assert_eq!(model.opts.quadrature, Quadrature::Simpson);
        assert_eq!(model.net.decay(1, 1), 2.0);
        assert_eq!(model.schedule.index_range(), (-50, 50));
    }

    #[test]
    fn unknown_top_level_key_is_rejected() {
        let text = r#"{
            "network": {"rows": 1, "cols": 1, "radius": 0, "tau": 0.1,
                        "decay": [[1.0]], "coupling": [[0.0]], "inputs": [[]]},
            "schedule": {"kind": "affine", "gap": 1.0},
            "activation": {"form": {"kind": "argument"},
                            "rule": {"rule": "constant", "value": 0.0},
                            "bound": 1.0, "lipschitz": 1.0},
            "surprise": true
        }"#;
        assert!(matches!(
            RunConfig::from_json(text),
            Err(SicnnError::Config(_))
        ));
    }

    #[test]
    fn dimension_mismatches_are_rejected() {
        let mut config = RunConfig::example6();
        config.network.inputs.pop();
        assert!(config.build().is_err());

        let mut config2 = RunConfig::example6();
        config2.initial.as_mut().unwrap().values.pop();
        assert!(config2.build().is_err());
    }

    #[test]
    fn table_schedule_derives_its_spacing() {
        let config = ScheduleConfig::Table {
            p_min: 0,
            theta: vec![0.0, 1.0, 2.5, 3.0],
            zeta: vec![0.5, 1.5, 2.6],
        };
        let schedule = config.build().unwrap();
        let declared = schedule.declared_spacing();
        assert_eq!(declared.gap_upper, 1.5);
        assert_eq!(declared.gap_lower, 0.5);
        assert!((declared.anchor_gap_lower - 1.0).abs() < 1e-12);
    }

    #[test]
    fn discontinuous_activation_rule_is_rejected_at_build() {
        let mut config = RunConfig::example6();
        config.activation.rule = ScalarRule::QuadraticCap {
            threshold: 0.1,
            plateau: 0.4,
        };
        assert!(config.build().is_err());
    }
}
