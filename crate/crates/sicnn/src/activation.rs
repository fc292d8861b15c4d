//! The activation functional `f` acting on pairs of history segments.
//!
//! The model feeds `f` two windows of a neighbor's past: the segment ending
//! at the current time `t` and the segment ending at the piecewise constant
//! argument value. All supported kinds reduce the pair to one or two scalar
//! reads (or a window mean) pushed through a globally bounded scalar rule,
//! which keeps the declared uniform bound `M` and Lipschitz constant `L`
//! certifiable. Declarations are trust-but-verify: no finite procedure can
//! prove them, so [`ActivationSpec::validate_bounds`] hunts for violations
//! with randomized segment pairs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SicnnError};

/// One cell's history window: values of `x(base + s)` for `s ∈ [−window, 0]`.
///
/// Implementations must be defined and continuous on the whole window.
pub trait Segment {
    /// Window length `τ ≥ 0`.
    fn window(&self) -> f64;
    /// Value at offset `s ∈ [−window, 0]`.
    fn value_at(&self, s: f64) -> f64;
}

/// A segment backed by a closure; handy for tests and validation sampling.
pub struct FnSegment<F: Fn(f64) -> f64> {
    window: f64,
    f: F,
}

impl<F: Fn(f64) -> f64> FnSegment<F> {
    pub fn new(window: f64, f: F) -> Self {
        FnSegment { window, f }
    }
}

impl<F: Fn(f64) -> f64> Segment for FnSegment<F> {
    fn window(&self) -> f64 {
        self.window
    }

    fn value_at(&self, s: f64) -> f64 {
        (self.f)(s)
    }
}

/// Globally bounded scalar rule applied to the reduced segment value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum ScalarRule {
    /// `s²/2` for `|s| ≤ threshold`, constant `plateau` outside. Continuity
    /// demands `plateau = threshold²/2`, enforced at construction.
    QuadraticCap { threshold: f64, plateau: f64 },
    /// `slope·s` clamped to `[−cap, cap]`.
    LinearClip { slope: f64, cap: f64 },
    /// Constant value regardless of input.
    Constant { value: f64 },
}

impl ScalarRule {
    /// Evaluate the rule.
    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            ScalarRule::QuadraticCap { threshold, plateau } => {
                if s.abs() <= threshold {
                    // min() keeps the declared plateau an exact bound even
                    // when rounding pushes s²/2 one ulp above it at the
                    // junction.
                    (s * s / 2.0).min(plateau)
                } else {
                    plateau
                }
            }
            ScalarRule::LinearClip { slope, cap } => (slope * s).clamp(-cap, cap),
            ScalarRule::Constant { value } => value,
        }
    }

    /// Exact global bound `sup |rule|`.
    pub fn sup_abs(&self) -> f64 {
        match *self {
            ScalarRule::QuadraticCap { plateau, .. } => plateau,
            ScalarRule::LinearClip { cap, .. } => cap,
            ScalarRule::Constant { value } => value.abs(),
        }
    }

    /// Exact global Lipschitz constant.
    pub fn lipschitz(&self) -> f64 {
        match *self {
            // |d/ds (s²/2)| = |s| ≤ threshold on the active branch.
            ScalarRule::QuadraticCap { threshold, .. } => threshold,
            ScalarRule::LinearClip { slope, .. } => slope.abs(),
            ScalarRule::Constant { .. } => 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            ScalarRule::QuadraticCap { threshold, plateau } => {
                if !(threshold > 0.0) {
                    return Err(SicnnError::InvalidSpec(
                        "quadratic cap threshold must be positive".into(),
                    ));
                }
                let junction = threshold * threshold / 2.0;
                if (plateau - junction).abs() > 1e-12 * junction.max(1.0) {
                    return Err(SicnnError::InvalidSpec(format!(
                        "quadratic cap is discontinuous: plateau {plateau} must equal \
                         threshold²/2 = {junction}"
                    )));
                }
                Ok(())
            }
            ScalarRule::LinearClip { slope, cap } => {
                if !(cap > 0.0) || !slope.is_finite() {
                    return Err(SicnnError::InvalidSpec(
                        "linear clip needs a positive cap and finite slope".into(),
                    ));
                }
                Ok(())
            }
            ScalarRule::Constant { value } => {
                if !value.is_finite() {
                    return Err(SicnnError::InvalidSpec(
                        "constant rule value must be finite".into(),
                    ));
                }
                Ok(())
            }
        }
    }
}

/// How the functional reduces the two history segments before the scalar
/// rule. `seg_t` is the window ending at the current time, `seg_arg` the
/// window ending at the piecewise constant argument value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ActivationKind {
    /// `rule(seg_arg(−τ))`: sample the argument segment at full delay — the
    /// bundled demonstration form.
    ArgumentDelayed,
    /// `rule(seg_arg(0))`: sample at the argument value itself.
    Argument,
    /// `rule(seg_t(−lag))`: sample the current-time segment a fixed lag back.
    Delayed { lag: f64 },
    /// `rule(w_cur·seg_t(−lag) + w_arg·seg_arg(−lag))`: weighted two-point
    /// read combining both segments.
    TwoPoint {
        current_weight: f64,
        argument_weight: f64,
        lag: f64,
    },
    /// `rule(w_cur·mean(seg_t) + w_arg·mean(seg_arg))`: weighted window
    /// means — a genuine functional of the whole segments.
    SegmentMean {
        current_weight: f64,
        argument_weight: f64,
    },
}

impl ActivationKind {
    /// Largest factor by which segment sup-norm perturbations reach the
    /// scalar rule's input (per segment).
    fn input_gain(&self) -> f64 {
        match *self {
            ActivationKind::ArgumentDelayed
            | ActivationKind::Argument
            | ActivationKind::Delayed { .. } => 1.0,
            ActivationKind::TwoPoint {
                current_weight,
                argument_weight,
                ..
            }
            | ActivationKind::SegmentMean {
                current_weight,
                argument_weight,
            } => current_weight.abs().max(argument_weight.abs()),
        }
    }

    /// Offsets at which the kind samples its segments (used to sharpen the
    /// empirical Lipschitz denominator).
    fn sample_offsets(&self, window: f64) -> Vec<f64> {
        match *self {
            ActivationKind::ArgumentDelayed => vec![-window],
            ActivationKind::Argument => vec![0.0],
            ActivationKind::Delayed { lag } | ActivationKind::TwoPoint { lag, .. } => vec![-lag],
            ActivationKind::SegmentMean { .. } => Vec::new(),
        }
    }
}

/// Mean of a segment by the composite trapezoid rule on a fixed 33-node
/// grid (exact for the constant segments of a degenerate window).
fn segment_mean<S: Segment + ?Sized>(seg: &S) -> f64 {
    let w = seg.window();
    if w == 0.0 {
        return seg.value_at(0.0);
    }
    const PANELS: usize = 32;
    let h = w / PANELS as f64;
    let mut acc = 0.5 * (seg.value_at(-w) + seg.value_at(0.0));
    for k in 1..PANELS {
        acc += seg.value_at(-w + k as f64 * h);
    }
    acc * h / w
}

/// Result of randomized declaration checking.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub samples: usize,
    pub amplitude: f64,
    /// Largest observed `|f|`.
    pub max_abs: f64,
    /// Largest observed `|Δf| / (‖Δφ‖ + ‖Δψ‖)`.
    pub max_lipschitz_quotient: f64,
    pub bound_pass: bool,
    pub lipschitz_pass: bool,
    pub pass: bool,
    /// Sample index of the worst violation, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<usize>,
}

/// The activation functional with its declared bound and Lipschitz constant.
#[derive(Debug, Clone, Serialize)]
pub struct ActivationSpec {
    kind: ActivationKind,
    rule: ScalarRule,
    /// Declared uniform bound M: `|f| ≤ M` on all segment pairs.
    bound: f64,
    /// Declared Lipschitz constant L with respect to the sum of the two
    /// segments' sup-norm distances.
    lipschitz: f64,
}

impl ActivationSpec {
    pub fn new(kind: ActivationKind, rule: ScalarRule, bound: f64, lipschitz: f64) -> Result<Self> {
        rule.validate()?;
        if !(bound > 0.0 && lipschitz > 0.0) {
            return Err(SicnnError::InvalidSpec(
                "declared activation bound and Lipschitz constant must be positive".into(),
            ));
        }
        match kind {
            ActivationKind::Delayed { lag } | ActivationKind::TwoPoint { lag, .. }
                if !(lag >= 0.0) =>
            {
                return Err(SicnnError::InvalidSpec(format!(
                    "activation lag must be non-negative, got {lag}"
                )));
            }
            _ => {}
        }
        // The declarations must dominate the analytically known global
        // bound/Lipschitz constant of the composed functional.
        if rule.sup_abs() > bound {
            return Err(SicnnError::InvalidSpec(format!(
                "declared bound {bound} is below the rule's global bound {}",
                rule.sup_abs()
            )));
        }
        let effective_lipschitz = rule.lipschitz() * kind.input_gain();
        if effective_lipschitz > lipschitz {
            return Err(SicnnError::InvalidSpec(format!(
                "declared Lipschitz constant {lipschitz} is below the composed rule's \
                 constant {effective_lipschitz}"
            )));
        }
        Ok(ActivationSpec {
            kind,
            rule,
            bound,
            lipschitz,
        })
    }

    /// The bundled demonstration activation: sample the argument segment at
    /// full delay, square-and-halve below 0.1, plateau at 0.005 above.
    pub fn bundled_quadratic_cap() -> Self {
        ActivationSpec::new(
            ActivationKind::ArgumentDelayed,
            ScalarRule::QuadraticCap {
                threshold: 0.1,
                plateau: 0.005,
            },
            0.005,
            0.1,
        )
        .expect("bundled activation is valid")
    }

    pub fn kind(&self) -> ActivationKind {
        self.kind
    }

    pub fn rule(&self) -> ScalarRule {
        self.rule
    }

    /// Declared uniform bound M.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// Declared Lipschitz constant L.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// Minimum segment window the kind needs to evaluate without error;
    /// solvers check this against the model's retardation window up front.
    pub fn required_window(&self) -> f64 {
        match self.kind {
            ActivationKind::ArgumentDelayed
            | ActivationKind::Argument
            | ActivationKind::SegmentMean { .. } => 0.0,
            ActivationKind::Delayed { lag } | ActivationKind::TwoPoint { lag, .. } => lag,
        }
    }

    /// Evaluate the functional on a pair of history segments.
    pub fn eval<S: Segment + ?Sized, T: Segment + ?Sized>(
        &self,
        seg_t: &S,
        seg_arg: &T,
    ) -> Result<f64> {
        let check_lag = |lag: f64, window: f64, which: &str| -> Result<()> {
            if lag > window {
                return Err(SicnnError::InvalidSpec(format!(
                    "activation lag {lag} exceeds the {which} segment window {window}"
                )));
            }
            Ok(())
        };
        let input = match self.kind {
            ActivationKind::ArgumentDelayed => seg_arg.value_at(-seg_arg.window()),
            ActivationKind::Argument => seg_arg.value_at(0.0),
            ActivationKind::Delayed { lag } => {
                check_lag(lag, seg_t.window(), "current-time")?;
                seg_t.value_at(-lag)
            }
            ActivationKind::TwoPoint {
                current_weight,
                argument_weight,
                lag,
            } => {
                check_lag(lag, seg_t.window(), "current-time")?;
                check_lag(lag, seg_arg.window(), "argument")?;
                current_weight * seg_t.value_at(-lag) + argument_weight * seg_arg.value_at(-lag)
            }
            ActivationKind::SegmentMean {
                current_weight,
                argument_weight,
            } => current_weight * segment_mean(seg_t) + argument_weight * segment_mean(seg_arg),
        };
        Ok(self.rule.eval(input))
    }

    /// Hunt for declaration violations on `samples` random segment pairs
    /// with sup-norm ≤ `amplitude`. Deterministic for a fixed seed.
    ///
    /// The sup-norm distances in the Lipschitz quotient are evaluated on a
    /// grid that includes the kind's sample offsets, so a reported quotient
    /// above L is a genuine counterexample, never a sampling artifact.
    pub fn validate_bounds(
        &self,
        samples: usize,
        amplitude: f64,
        window: f64,
        seed: u64,
    ) -> Result<ValidationReport> {
        if !(amplitude > 0.0) {
            return Err(SicnnError::InvalidSpec(
                "validation amplitude must be positive".into(),
            ));
        }
        if !(window >= 0.0) {
            return Err(SicnnError::InvalidSpec(
                "validation window must be non-negative".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut norm_grid: Vec<f64> = (0..=64)
            .map(|k| -window + window * k as f64 / 64.0)
            .collect();
        for s in self.kind.sample_offsets(window) {
            if (-window..=0.0).contains(&s) {
                norm_grid.push(s);
            }
        }

        let mut max_abs = 0.0f64;
        let mut max_quotient = 0.0f64;
        let mut witness = None;
        for sample in 0..samples {
            let [phi1, psi1, phi2, psi2] =
                [(); 4].map(|_| random_segment(&mut rng, window, amplitude));
            let f1 = self.eval(&phi1, &psi1)?;
            let f2 = self.eval(&phi2, &psi2)?;
            let abs = f1.abs().max(f2.abs());
            if abs > max_abs {
                max_abs = abs;
                if abs > self.bound {
                    witness = Some(sample);
                }
            }
            let dist: f64 =
                sup_distance(&phi1, &phi2, &norm_grid) + sup_distance(&psi1, &psi2, &norm_grid);
            if dist > 1e-12 {
                let quotient = (f1 - f2).abs() / dist;
                if quotient > max_quotient {
                    max_quotient = quotient;
                    if quotient > self.lipschitz {
                        witness = Some(sample);
                    }
                }
            }
        }
        let bound_pass = max_abs <= self.bound;
        let lipschitz_pass = max_quotient <= self.lipschitz;
        Ok(ValidationReport {
            samples,
            amplitude,
            max_abs,
            max_lipschitz_quotient: max_quotient,
            bound_pass,
            lipschitz_pass,
            pass: bound_pass && lipschitz_pass,
            witness: if bound_pass && lipschitz_pass {
                None
            } else {
                witness
            },
        })
    }
}

/// Random low-order trigonometric polynomial on `[−window, 0]`, rescaled to
/// a random sup-norm in `[0, amplitude]`.
fn random_segment(rng: &mut ChaCha8Rng, window: f64, amplitude: f64) -> TrigSegment {
    let coeffs: [f64; 7] = [(); 7].map(|_| rng.gen_range(-1.0..1.0));
    let target: f64 = rng.gen_range(0.0..amplitude);
    let mut seg = TrigSegment {
        window,
        coeffs,
        scale: 1.0,
    };
    let mut sup = 0.0f64;
    for k in 0..=64 {
        let s = -window + window * k as f64 / 64.0;
        sup = sup.max(seg.value_at(s).abs());
        if window == 0.0 {
            break;
        }
    }
    seg.scale = if sup > 0.0 { target / sup } else { 0.0 };
    seg
}

/// Concrete random segment used by validation sampling.
struct TrigSegment {
    window: f64,
    coeffs: [f64; 7],
    scale: f64,
}

impl Segment for TrigSegment {
    fn window(&self) -> f64 {
        self.window
    }

    fn value_at(&self, s: f64) -> f64 {
        let c = &self.coeffs;
        if self.window == 0.0 {
            return self.scale * c[0];
        }
        let u = std::f64::consts::PI * s / self.window;
        let mut acc = c[0];
        for k in 1..=3 {
            acc += c[2 * k - 1] * (k as f64 * u).cos() + c[2 * k] * (k as f64 * u).sin();
        }
        self.scale * acc
    }
}

fn sup_distance<A: Segment, B: Segment>(a: &A, b: &B, grid: &[f64]) -> f64 {
    grid.iter()
        .map(|&s| (a.value_at(s) - b.value_at(s)).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_segment(window: f64, v: f64) -> FnSegment<impl Fn(f64) -> f64> {
        FnSegment::new(window, move |_s| v)
    }

    #[test]
    fn quadratic_cap_is_continuous_at_the_junction() {
        let rule = ScalarRule::QuadraticCap {
            threshold: 0.1,
            plateau: 0.005,
        };
        assert_eq!(rule.eval(0.1), 0.005);
        assert_eq!(rule.eval(0.100_000_001), 0.005);
        assert_eq!(rule.eval(-0.2), 0.005);
        assert_eq!(rule.eval(0.0), 0.0);
        assert_eq!(rule.eval(0.06), 0.0018);
    }

    #[test]
    fn discontinuous_cap_rejected() {
        assert!(ScalarRule::QuadraticCap {
            threshold: 0.1,
            plateau: 0.04,
        }
        .validate()
        .is_err());
    }

    #[test]
    fn bundled_activation_evaluates_at_full_delay() {
        let act = ActivationSpec::bundled_quadratic_cap();
        // Only the argument segment's value at −τ matters.
        let seg_t = constant_segment(0.3, 123.0);
        let seg_arg = FnSegment::new(0.3, |s| if s <= -0.29 { 0.06 } else { 55.0 });
        assert_eq!(act.eval(&seg_t, &seg_arg).unwrap(), 0.0018);
    }

    #[test]
    fn pointwise_kinds_ignore_off_point_perturbations() {
        let act = ActivationSpec::new(
            ActivationKind::Delayed { lag: 0.1 },
            ScalarRule::LinearClip {
                slope: 1.0,
                cap: 1.0,
            },
            1.0,
            1.0,
        )
        .unwrap();
        let base = FnSegment::new(0.3, |s| s + 0.5);
        let spiked = FnSegment::new(0.3, |s| {
            if (s + 0.1).abs() < 1e-9 {
                s + 0.5
            } else {
                s + 0.5 + 17.0 * (s + 0.1).abs().sqrt()
            }
        });
        let arg = constant_segment(0.3, 0.0);
        assert_eq!(
            act.eval(&base, &arg).unwrap(),
            act.eval(&spiked, &arg).unwrap()
        );
    }

    #[test]
    fn lag_beyond_window_is_an_error() {
        let act = ActivationSpec::new(
            ActivationKind::Delayed { lag: 0.5 },
            ScalarRule::LinearClip {
                slope: 1.0,
                cap: 1.0,
            },
            1.0,
            1.0,
        )
        .unwrap();
        let short = constant_segment(0.3, 0.0);
        assert!(act.eval(&short, &short).is_err());
    }

    #[test]
    fn segment_mean_of_zero_kernel_weights_is_zero() {
        let act = ActivationSpec::new(
            ActivationKind::SegmentMean {
                current_weight: 0.0,
                argument_weight: 0.0,
            },
            ScalarRule::LinearClip {
                slope: 1.0,
                cap: 1.0,
            },
            1.0,
            1.0,
        )
        .unwrap();
        let wild = FnSegment::new(0.3, |s| 100.0 * (40.0 * s).sin());
        assert_eq!(act.eval(&wild, &wild).unwrap(), 0.0);
    }

    #[test]
    fn zero_segments_give_zero_for_the_bundled_rule() {
        let act = ActivationSpec::bundled_quadratic_cap();
        let zero = constant_segment(0.3, 0.0);
        assert_eq!(act.eval(&zero, &zero).unwrap(), 0.0);
    }

    #[test]
    fn bundled_declarations_survive_sampling() {
        let act = ActivationSpec::bundled_quadratic_cap();
        for (amplitude, seed) in [(0.2, 7), (0.05, 8), (2.0, 9)] {
            let report = act.validate_bounds(400, amplitude, 0.3, seed).unwrap();
            assert!(report.pass, "amplitude {amplitude}: {report:?}");
            assert!(report.max_abs <= 0.005);
            assert!(report.max_lipschitz_quotient <= 0.1);
        }
    }

    #[test]
    fn constant_functional_has_zero_quotient() {
        let act = ActivationSpec::new(
            ActivationKind::ArgumentDelayed,
            ScalarRule::Constant { value: 0.003 },
            0.005,
            0.1,
        )
        .unwrap();
        let report = act.validate_bounds(200, 1.0, 0.3, 3).unwrap();
        assert!(report.pass);
        assert_eq!(report.max_lipschitz_quotient, 0.0);
        assert_eq!(report.max_abs, 0.003);
    }

    #[test]
    fn clipped_linear_rule_attains_its_declared_constant() {
        let act = ActivationSpec::new(
            ActivationKind::Argument,
            ScalarRule::LinearClip {
                slope: 0.4,
                cap: 0.2,
            },
            0.2,
            0.4,
        )
        .unwrap();
        let report = act.validate_bounds(400, 0.3, 0.3, 11).unwrap();
        assert!(report.pass);
        // The quotient comes close to the slope but never exceeds it.
        assert!(report.max_lipschitz_quotient <= 0.4);
        assert!(report.max_lipschitz_quotient > 0.2);
    }

    #[test]
    fn undeclarable_bounds_rejected_at_construction() {
        // Rule bound above declared M.
        assert!(ActivationSpec::new(
            ActivationKind::Argument,
            ScalarRule::LinearClip {
                slope: 1.0,
                cap: 3.0,
            },
            1.0,
            1.0,
        )
        .is_err());
        // Composed Lipschitz constant above declared L.
        assert!(ActivationSpec::new(
            ActivationKind::TwoPoint {
                current_weight: 4.0,
                argument_weight: 1.0,
                lag: 0.0,
            },
            ScalarRule::LinearClip {
                slope: 1.0,
                cap: 1.0,
            },
            1.0,
            1.0,
        )
        .is_err());
    }
}
