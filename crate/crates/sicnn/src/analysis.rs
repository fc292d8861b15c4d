//! Solution-level analysis: the bounded (almost periodic) solution, its
//! whole-line fixed-point certificate, exponential-stability envelopes, and
//! ε-translation-number scans.
//!
//! The unique bounded solution is approximated by forward integration from a
//! zero segment started far enough in the past that the initial error has
//! decayed below the requested accuracy (the certified contraction makes the
//! transient forgetting exponential at rate γ₀/2). Its fixed-point property
//! is then certified a posteriori by the whole-line integral defect, whose
//! truncated tail is controlled by the same constants.

use serde::Serialize;

use crate::activation::ActivationSpec;
use crate::error::{Result, SicnnError};
use crate::exec::{self, ExecMode};
use crate::network::NetworkSpec;
use crate::schedule::ArgumentSchedule;
use crate::solver::{self, IvpSetup, ModelCtx, SolverOptions};
use crate::trajectory::{sample_grid, SegmentSource, Trajectory};

/// Name the failing certificates, for refusal messages.
fn failing_entries(report: &crate::network::ConditionReport) -> String {
    let names: Vec<&str> = report
        .entries
        .iter()
        .filter(|e| !e.pass)
        .map(|e| e.name)
        .collect();
    if names.is_empty() {
        "none (report internally inconsistent)".into()
    } else {
        names.join(", ")
    }
}

/// Approximate the unique bounded solution on `[t0, t1]` to the requested
/// sup-norm accuracy.
///
/// Requires the contraction certificates; refuses otherwise, because without
/// them neither existence beyond one interval nor transient forgetting is
/// guaranteed. Integration starts from a zero segment at the last breakpoint
/// before `t0 − T`, with `T` chosen so the worst-case initial error
/// `𝒦(H)·e^{−γ₀T/2}` is below `accuracy`; the warm-up span is then discarded
/// (a lookback margin stays readable for defect checks and history lookups).
pub fn bounded_solution(
    net: &NetworkSpec,
    schedule: &ArgumentSchedule,
    act: &ActivationSpec,
    t0: f64,
    t1: f64,
    accuracy: f64,
    opts: &SolverOptions,
) -> Result<Trajectory> {
    if !(accuracy > 0.0) {
        return Err(SicnnError::InvalidSpec(
            "requested accuracy must be positive".into(),
        ));
    }
    if !(t1 > t0) {
        return Err(SicnnError::InvalidSpec(format!(
            "window [{t0}, {t1}] is empty"
        )));
    }
    let report = net.check_conditions(schedule, act);
    if !report.contraction_certified() {
        return Err(SicnnError::ConditionsNotMet(format!(
            "bounded-solution approximation requires the contraction certificates; \
             failing: {}",
            failing_entries(&report)
        )));
    }
    let constants = report.constants;
    let h_bound = constants
        .solution_bound
        .expect("certified report carries the solution bound");
    let denom = report
        .envelope_denominator
        .expect("certified report carries the envelope denominator");
    let rate = constants.min_decay / 2.0;
    // Worst-case initial sup-error is the solution bound itself (zero seed);
    // it contracts to 𝒦(H)·e^{−rate·T}.
    let k_h = h_bound / denom;
    let t_back = if k_h <= accuracy {
        0.0
    } else {
        (k_h / accuracy).ln() / rate
    };
    let sigma = schedule
        .breakpoint(schedule.interval_index(t0 - t_back).map_err(|e| {
            SicnnError::Coverage(format!(
                "schedule does not reach {} = t0 − warm-up span: {e}",
                t0 - t_back
            ))
        })?)
        .expect("interval index is in range");

    let cells = net.cell_count();
    let setup = IvpSetup::new(sigma, SegmentSource::Constant(vec![0.0; cells]));
    let traj = solver::solve_ivp(net, schedule, act, &setup, t1, opts)?;
    let keepback = net.tau() + schedule.declared_spacing().gap_upper;
    Ok(traj.truncated(t0, keepback))
}

/// Defect of a trajectory against the whole-line integral identity
/// `x(t) = −∫_{−∞}^t e^{−a(t−s)} [S(s)x(s) − L(s)] ds`, with the tail before
/// `traj.start()` truncated.
///
/// The truncated tail is bounded by `(c̄·M·H + l̄)·e^{−γ₀(t−start)}` for any
/// trajectory inside the solution bound `H`; the check refuses when that
/// bound at `t = from` exceeds `tail_tol`, reporting the required warm-up.
/// The returned value is the max defect over all stored nodes in
/// `[from, end]` — the a-posteriori certificate that the trajectory is the
/// bounded solution and not merely *a* solution.
pub fn whole_line_residual(
    net: &NetworkSpec,
    schedule: &ArgumentSchedule,
    act: &ActivationSpec,
    traj: &Trajectory,
    from: f64,
    tail_tol: f64,
) -> Result<f64> {
    if !(tail_tol > 0.0) {
        return Err(SicnnError::InvalidSpec(
            "tail tolerance must be positive".into(),
        ));
    }
    let constants = net.derived_constants(schedule, act.bound());
    let h_bound = constants.solution_bound.ok_or_else(|| {
        SicnnError::ConditionsNotMet(
            "the tail estimate needs the solution bound, which is undefined because \
             M·c̄ ≥ 1"
                .into(),
        )
    })?;
    let start = traj.start();
    let tail_factor =
        constants.max_coupling_over_decay * act.bound() * h_bound + constants.max_input_over_decay;
    let tail_bound = tail_factor * (-constants.min_decay * (from - start)).exp();
    if !(from >= start) || tail_bound > tail_tol {
        let needed = if tail_factor > tail_tol {
            (tail_factor / tail_tol).ln() / constants.min_decay
        } else {
            0.0
        };
        return Err(SicnnError::Coverage(format!(
            "truncated-tail bound {tail_bound:.3e} at t = {from} exceeds {tail_tol:.3e}; \
             the trajectory must start at least {needed:.3} before the checked window \
             (it starts at {start})"
        )));
    }
    let ctx = ModelCtx::new(net, act)?;
    solver::defect_walk(&ctx, schedule, traj, start, from, |_c, _t, integral| {
        -integral
    })
}

/// One sample time where the stability envelope was exceeded.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EnvelopeViolation {
    pub t: f64,
    /// Largest per-cell deviation between the two runs at `t`.
    pub deviation: f64,
    /// Envelope value `𝒦(δ)·e^{−rate·(t−σ)}` at `t`.
    pub bound: f64,
}

/// Outcome of an exponential-stability probe.
#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    /// Initial sup-norm perturbation δ.
    pub delta: f64,
    /// Envelope amplitude 𝒦(δ) = δ / (1 − stability-contraction lhs).
    pub k_delta: f64,
    /// Guaranteed decay rate γ₀/2.
    pub rate: f64,
    pub sigma: f64,
    pub horizon: f64,
    pub sample_dt: f64,
    pub envelope_violations: Vec<EnvelopeViolation>,
    /// Least-squares decay rate of the measured deviation (informational;
    /// only the envelope is asserted).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fitted_rate: Option<f64>,
    pub pass: bool,
    /// Present when the envelope was exceeded: what that can mean.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnosis: Option<String>,
}

/// Integrate the base setup and a uniformly offset copy (sup-distance
/// exactly δ) side by side and check the difference against the certified
/// envelope `‖w(t)‖ ≤ 𝒦(δ)·e^{−γ₀(t−σ)/2}` on a uniform sample grid.
///
/// Requires the stability-contraction certificate, which makes 𝒦(δ) finite;
/// the envelope is applied relative to the run's own start time.
#[allow(clippy::too_many_arguments)] // the probe is parameterized by the full experiment
pub fn stability_envelope(
    net: &NetworkSpec,
    schedule: &ArgumentSchedule,
    act: &ActivationSpec,
    base: &IvpSetup,
    delta: f64,
    horizon: f64,
    sample_dt: f64,
    opts: &SolverOptions,
) -> Result<StabilityReport> {
    if !(delta >= 0.0) {
        return Err(SicnnError::InvalidSpec(
            "perturbation size must be non-negative".into(),
        ));
    }
    if !(horizon > 0.0 && sample_dt > 0.0) {
        return Err(SicnnError::InvalidSpec(
            "horizon and sample stride must be positive".into(),
        ));
    }
    let report = net.check_conditions(schedule, act);
    let stability = report
        .entry("stability_contraction")
        .ok_or_else(|| SicnnError::ConditionsNotMet("stability entry missing".into()))?;
    if !stability.pass {
        return Err(SicnnError::ConditionsNotMet(format!(
            "the stability-contraction certificate fails (lhs {:?}); the envelope \
             constant 𝒦(δ) is not defined",
            stability.lhs
        )));
    }
    let denom = report
        .envelope_denominator
        .expect("passing stability entry implies a positive denominator");
    let k_delta = delta / denom;
    let rate = report.constants.min_decay / 2.0;
    let sigma = base.sigma;
    let t_end = sigma + horizon;

    let perturbed = base.offset_by(delta);
    let (base_run, perturbed_run) = exec::join(
        opts.exec,
        || solver::solve_ivp(net, schedule, act, base, t_end, opts),
        || solver::solve_ivp(net, schedule, act, &perturbed, t_end, opts),
    );
    let (base_run, perturbed_run) = (base_run?, perturbed_run?);

    let mut violations = Vec::new();
    let mut fit_points: Vec<(f64, f64)> = Vec::new();
    let mut row_a = vec![0.0; net.cell_count()];
    let mut row_b = vec![0.0; net.cell_count()];
    for t in sample_grid(sigma, t_end, sample_dt) {
        base_run.row_into(t, &mut row_a)?;
        perturbed_run.row_into(t, &mut row_b)?;
        let deviation = row_a
            .iter()
            .zip(&row_b)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        let bound = k_delta * (-rate * (t - sigma)).exp();
        if deviation > bound + 1e-12 {
            violations.push(EnvelopeViolation {
                t,
                deviation,
                bound,
            });
        }
        if deviation > 1e-14 * delta.max(1e-300) {
            fit_points.push((t - sigma, deviation.ln()));
        }
    }

    let fitted_rate = regression_slope(&fit_points).map(|slope| -slope);
    let pass = violations.is_empty();
    Ok(StabilityReport {
        delta,
        k_delta,
        rate,
        sigma,
        horizon,
        sample_dt,
        envelope_violations: violations,
        fitted_rate,
        pass,
        diagnosis: (!pass).then(|| {
            "envelope exceeded: either a premise of the certificate does not hold for \
             this instance, or the solver resolution is too coarse — re-run with a \
             smaller step before drawing conclusions"
                .into()
        }),
    })
}

/// Least-squares slope of `y` on `x`; `None` below two distinct points.
fn regression_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let var: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    if var == 0.0 {
        return None;
    }
    let cov: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    Some(cov / var)
}

/// Outcome of an ε-translation-number grid scan.
#[derive(Debug, Clone, Serialize)]
pub struct TranslationReport {
    pub eps: f64,
    pub alpha_range: (f64, f64),
    pub alpha_step: f64,
    /// Comparison window in trajectory time.
    pub window: (f64, f64),
    /// Time-sample stride (equals the α step so shifts land on the grid).
    pub sample_dt: f64,
    /// Accepted translation numbers, ascending.
    pub accepted: Vec<f64>,
    /// Largest gap over the scanned range, counting the range ends as
    /// neighbors of the extreme accepted values; `None` when nothing was
    /// accepted.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_gap: Option<f64>,
}

/// Grid scan for ε-translation numbers of a computed trajectory: accept `α`
/// when `max_ij |x(t+α) − x(t)| < eps` at every sample of the window.
///
/// Sampling and the α grid share one stride, so every shifted comparison
/// reads exact sample indices — no interpolation enters the verdict. The
/// reported `max_gap` is the empirical relative-density proxy: an upper
/// bound on how far any point of the scanned range is from an accepted
/// translation number.
pub fn translation_scan(
    traj: &Trajectory,
    eps: f64,
    alpha_range: (f64, f64),
    alpha_step: f64,
    window: (f64, f64),
    mode: ExecMode,
) -> Result<TranslationReport> {
    if !(eps > 0.0) {
        return Err(SicnnError::InvalidSpec("eps must be positive".into()));
    }
    if !(alpha_step > 0.0) {
        return Err(SicnnError::InvalidSpec("α step must be positive".into()));
    }
    if !(alpha_range.1 >= alpha_range.0) || !(window.1 > window.0) {
        return Err(SicnnError::InvalidSpec(
            "α range and window must be ordered".into(),
        ));
    }
    let dt = alpha_step;
    let (w0, w1) = window;
    let samples = ((w1 - w0) / dt + 1e-9).floor() as usize;
    let shifts = ((alpha_range.1 - alpha_range.0) / dt + 1e-9).floor() as i64;
    // Shift indices: α_i = α₀ + i·dt lands `base_shift + i` samples after the
    // unshifted grid, plus a constant sub-sample offset `frac`.
    let base_shift = (alpha_range.0 / dt).floor() as i64;
    let frac = alpha_range.0 - base_shift as f64 * dt;

    let lo_needed = (w0 + alpha_range.0.min(0.0)).min(w0);
    let hi_needed = w0 + frac + (base_shift + samples as i64 + shifts) as f64 * dt;
    let hi_needed = hi_needed.max(w1);
    if lo_needed < traj.start() - 1e-9 || hi_needed > traj.end() + 1e-9 {
        return Err(SicnnError::Coverage(format!(
            "scan needs the trajectory to cover [{lo_needed}, {hi_needed}], got [{}, {}]",
            traj.start(),
            traj.end()
        )));
    }

    let cells = traj.cell_count();
    // Base rows x(t_k) and shifted rows x(w0 + frac + j·dt): one matrix each,
    // then every (α, t) comparison is pure indexing.
    let mut base_rows = vec![0.0; (samples + 1) * cells];
    for k in 0..=samples {
        let t = w0 + k as f64 * dt;
        traj.row_into(t, &mut base_rows[k * cells..(k + 1) * cells])?;
    }
    let shifted_count = samples as i64 + shifts;
    let mut shifted_rows = vec![0.0; (shifted_count + 1) as usize * cells];
    for j in 0..=shifted_count {
        let t = w0 + frac + (base_shift + j) as f64 * dt;
        let row = j as usize * cells;
        traj.row_into(t, &mut shifted_rows[row..row + cells])?;
    }

    let verdicts = exec::map_indexed(mode, (shifts + 1) as usize, |i| {
        for k in 0..=samples {
            let a = &base_rows[k * cells..(k + 1) * cells];
            let j = k + i;
            let b = &shifted_rows[j * cells..(j + 1) * cells];
            for (x, y) in a.iter().zip(b) {
                if (x - y).abs() >= eps {
                    return false;
                }
            }
        }
        true
    });

    let accepted: Vec<f64> = verdicts
        .iter()
        .enumerate()
        .filter(|(_, &ok)| ok)
        .map(|(i, _)| alpha_range.0 + i as f64 * dt)
        .collect();

    let effective_end = alpha_range.0 + shifts as f64 * dt;
    let max_gap = if accepted.is_empty() {
        None
    } else {
        let mut gap =
            (accepted[0] - alpha_range.0).max(effective_end - accepted[accepted.len() - 1]);
        for pair in accepted.windows(2) {
            gap = gap.max(pair[1] - pair[0]);
        }
        Some(gap)
    };

    Ok(TranslationReport {
        eps,
        alpha_range,
        alpha_step,
        window,
        sample_dt: dt,
        accepted,
        max_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::{ActivationKind, ScalarRule};
    use crate::config::RunConfig;
    use crate::grid::Grid;
    use crate::network::{InputSignal, InputTerm, Waveform};
    use crate::schedule::{DeclaredSpacing, ScheduleRule};

    fn unit_schedule(range: i64) -> ArgumentSchedule {
        ArgumentSchedule::new(
            ScheduleRule::Affine {
                gap: 1.0,
                offset: 0.0,
                anchor_shift: 0.0,
            },
            -range,
            range,
            DeclaredSpacing {
                gap_upper: 1.0,
                gap_lower: 1.0,
                anchor_gap_lower: 1.0,
            },
        )
        .unwrap()
    }

    fn small_activation() -> ActivationSpec {
        ActivationSpec::new(
            ActivationKind::Argument,
            ScalarRule::LinearClip {
                slope: 0.1,
                cap: 0.05,
            },
            0.05,
            0.1,
        )
        .unwrap()
    }

    fn certified_scalar_net(input: InputSignal) -> NetworkSpec {
        NetworkSpec::new(
            0,
            Grid::constant(1, 1, 2.0),
            Grid::constant(1, 1, 0.3),
            vec![input],
            0.25,
        )
        .unwrap()
    }

    #[test]
    fn zero_input_bounded_solution_is_zero() {
        let schedule = unit_schedule(100);
        let net = certified_scalar_net(InputSignal::zero());
        let act = small_activation();
        let opts = SolverOptions::for_problem(&net, &schedule);
        let traj = bounded_solution(&net, &schedule, &act, 0.0, 20.0, 1e-6, &opts).unwrap();
        assert_eq!(traj.start(), 0.0);
        assert_eq!(traj.end(), 20.0);
        assert!(traj.sup_norm(0.0, 20.0, 0.05).unwrap() <= 1e-6);
        let defect = whole_line_residual(&net, &schedule, &act, &traj, 5.0, 1e-6).unwrap();
        assert!(defect <= 1e-12, "defect {defect}");
    }

    #[test]
    fn bounded_solution_refuses_uncertified_instances() {
        let schedule = unit_schedule(100);
        // Coupling so large that M·c̄ ≥ 1: no certificates hold.
        let net = NetworkSpec::new(
            0,
            Grid::constant(1, 1, 0.5),
            Grid::constant(1, 1, 40.0),
            vec![InputSignal::zero()],
            0.25,
        )
        .unwrap();
        let act = ActivationSpec::new(
            ActivationKind::Argument,
            ScalarRule::LinearClip {
                slope: 1.0,
                cap: 1.0,
            },
            1.0,
            1.0,
        )
        .unwrap();
        let opts = SolverOptions::default();
        assert!(matches!(
            bounded_solution(&net, &schedule, &act, 0.0, 5.0, 1e-4, &opts),
            Err(SicnnError::ConditionsNotMet(_))
        ));
    }

    #[test]
    fn doubling_the_warmup_changes_nothing_beyond_accuracy() {
        let schedule = unit_schedule(200);
        let input = InputSignal::from_terms(vec![InputTerm {
            amplitude: 0.4,
            angular_frequency: 1.3,
            phase: 0.2,
            kind: Waveform::Cosine,
        }]);
        let net = certified_scalar_net(input);
        let act = small_activation();
        let opts = SolverOptions::for_problem(&net, &schedule);
        let accuracy = 1e-8;
        let a = bounded_solution(&net, &schedule, &act, 0.0, 10.0, accuracy, &opts).unwrap();
        // Emulate a doubled warm-up by asking for much more accuracy, which
        // pushes σ further back, then compare on the common window.
        let b = bounded_solution(&net, &schedule, &act, 0.0, 10.0, accuracy * 1e-4, &opts).unwrap();
        let mut worst = 0.0f64;
        for k in 0..=400 {
            let t = 10.0 * k as f64 / 400.0;
            worst = worst.max((a.value(1, 1, t).unwrap() - b.value(1, 1, t).unwrap()).abs());
        }
        assert!(worst <= accuracy, "sensitivity {worst}");
    }

    #[test]
    fn whole_line_defect_flags_a_shifted_cell() {
        let schedule = unit_schedule(200);
        let input = InputSignal::from_terms(vec![InputTerm {
            amplitude: 0.4,
            angular_frequency: 1.3,
            phase: 0.0,
            kind: Waveform::Cosine,
        }]);
        let net = certified_scalar_net(input);
        let act = small_activation();
        let opts = SolverOptions::for_problem(&net, &schedule);
        let traj = bounded_solution(&net, &schedule, &act, 0.0, 15.0, 1e-8, &opts).unwrap();
        // Tail bound H·e^{−γ₀·(from − start)} needs from ≥ ~6.1 to clear 1e−6.
        let honest = whole_line_residual(&net, &schedule, &act, &traj, 7.0, 1e-6).unwrap();
        assert!(honest < 1e-4, "honest defect {honest}");
        let doctored = traj.offset_cell(0, 0.01);
        let flagged = whole_line_residual(&net, &schedule, &act, &doctored, 7.0, 1e-6).unwrap();
        assert!(flagged >= 0.005, "doctored defect {flagged}");
    }

    #[test]
    fn windows_compose_like_a_semigroup() {
        let schedule = unit_schedule(200);
        let input = InputSignal::from_terms(vec![InputTerm {
            amplitude: 0.4,
            angular_frequency: 1.3,
            phase: 0.7,
            kind: Waveform::Cosine,
        }]);
        let net = certified_scalar_net(input);
        let act = small_activation();
        let opts = SolverOptions::for_problem(&net, &schedule);
        let accuracy = 1e-6;
        let long = bounded_solution(&net, &schedule, &act, 0.0, 20.0, accuracy, &opts).unwrap();
        let short = bounded_solution(&net, &schedule, &act, 10.0, 20.0, accuracy, &opts).unwrap();
        let mut worst = 0.0f64;
        for k in 0..=200 {
            let t = 10.0 + 10.0 * k as f64 / 200.0;
            worst = worst.max((long.value(1, 1, t).unwrap() - short.value(1, 1, t).unwrap()).abs());
        }
        // Each run is within `accuracy` of the same bounded solution.
        assert!(worst <= 2.0 * accuracy, "restriction mismatch {worst}");
    }

    #[test]
    fn whole_line_defect_shrinks_under_refinement() {
        let schedule = unit_schedule(200);
        let input = InputSignal::from_terms(vec![InputTerm {
            amplitude: 0.4,
            angular_frequency: 1.3,
            phase: 0.0,
            kind: Waveform::Cosine,
        }]);
        let net = certified_scalar_net(input);
        let act = small_activation();
        let mut coarse_opts = SolverOptions::for_problem(&net, &schedule);
        coarse_opts.step = 0.02;
        let mut fine_opts = coarse_opts;
        fine_opts.step = 0.01;
        let coarse = bounded_solution(&net, &schedule, &act, 0.0, 15.0, 1e-8, &coarse_opts)
            .and_then(|t| whole_line_residual(&net, &schedule, &act, &t, 7.0, 1e-6))
            .unwrap();
        let fine = bounded_solution(&net, &schedule, &act, 0.0, 15.0, 1e-8, &fine_opts)
            .and_then(|t| whole_line_residual(&net, &schedule, &act, &t, 7.0, 1e-6))
            .unwrap();
        assert!(
            coarse > 3.0 * fine,
            "halving the step should cut the second-order defect by ~4: {coarse} vs {fine}"
        );
    }

    #[test]
    fn whole_line_defect_requires_enough_warmup() {
        let schedule = unit_schedule(100);
        let input = InputSignal::from_terms(vec![InputTerm {
            amplitude: 0.4,
            angular_frequency: 1.0,
            phase: 0.0,
            kind: Waveform::Sine,
        }]);
        let net = certified_scalar_net(input);
        let act = small_activation();
        let opts = SolverOptions::for_problem(&net, &schedule);
        let traj = bounded_solution(&net, &schedule, &act, 0.0, 5.0, 1e-6, &opts).unwrap();
        // Tail bound at from = start is the full tail factor ≫ 1e−9.
        assert!(matches!(
            whole_line_residual(&net, &schedule, &act, &traj, 0.0, 1e-9),
            Err(SicnnError::Coverage(_))
        ));
    }

    #[test]
    fn zero_perturbation_passes_trivially() {
        let schedule = unit_schedule(50);
        let net = certified_scalar_net(InputSignal::zero());
        let act = small_activation();
        let opts = SolverOptions::for_problem(&net, &schedule);
        let base = IvpSetup::constant(0.0, &Grid::constant(1, 1, 0.2));
        let report =
            stability_envelope(&net, &schedule, &act, &base, 0.0, 5.0, 0.1, &opts).unwrap();
        assert!(report.pass);
        assert!(report.envelope_violations.is_empty());
        assert_eq!(report.k_delta, 0.0);
        assert!(report.fitted_rate.is_none());
    }

    #[test]
    fn decoupled_deviation_decays_inside_the_envelope() {
        let schedule = unit_schedule(50);
        // C = 0: the deviation is exactly δ·e^{−a(t−σ)}.
        let net = NetworkSpec::new(
            0,
            Grid::constant(1, 1, 2.0),
            Grid::constant(1, 1, 0.0),
            vec![InputSignal::from_terms(vec![InputTerm {
                amplitude: 0.3,
                angular_frequency: 1.0,
                phase: 0.0,
                kind: Waveform::Cosine,
            }])],
            0.25,
        )
        .unwrap();
        let act = small_activation();
        let opts = SolverOptions::for_problem(&net, &schedule);
        let base = IvpSetup::constant(0.0, &Grid::constant(1, 1, 0.1));
        let report =
            stability_envelope(&net, &schedule, &act, &base, 0.01, 6.0, 0.05, &opts).unwrap();
        assert!(report.pass, "violations: {:?}", report.envelope_violations);
        // γ₀/2 = 1 here; the raw decay rate is a = 2.
        let fitted = report.fitted_rate.unwrap();
        assert!(
            (fitted - 2.0).abs() < 0.05,
            "fitted rate {fitted} should be near the decay rate 2"
        );
        assert!(report.rate == 1.0);
    }

    #[test]
    fn uncertified_stability_is_refused() {
        let schedule = unit_schedule(50);
        let net = NetworkSpec::new(
            0,
            Grid::constant(1, 1, 0.5),
            Grid::constant(1, 1, 40.0),
            vec![InputSignal::zero()],
            0.25,
        )
        .unwrap();
        let act = ActivationSpec::new(
            ActivationKind::Argument,
            ScalarRule::LinearClip {
                slope: 1.0,
                cap: 1.0,
            },
            1.0,
            1.0,
        )
        .unwrap();
        let base = IvpSetup::constant(0.0, &Grid::constant(1, 1, 0.0));
        assert!(matches!(
            stability_envelope(
                &net,
                &schedule,
                &act,
                &base,
                0.01,
                5.0,
                0.1,
                &SolverOptions::default()
            ),
            Err(SicnnError::ConditionsNotMet(_))
        ));
    }

    #[test]
    fn constant_trajectory_accepts_every_translation() {
        let schedule = unit_schedule(100);
        let net = certified_scalar_net(InputSignal::zero());
        let act = small_activation();
        let opts = SolverOptions::for_problem(&net, &schedule);
        let setup = IvpSetup::constant(0.0, &Grid::constant(1, 1, 0.0));
        let traj = solver::solve_ivp(&net, &schedule, &act, &setup, 40.0, &opts).unwrap();
        let report = translation_scan(
            &traj,
            0.01,
            (0.0, 20.0),
            0.5,
            (0.0, 15.0),
            ExecMode::default(),
        )
        .unwrap();
        assert_eq!(report.accepted.len(), 41);
        assert_eq!(report.max_gap, Some(0.5));
    }

    #[test]
    fn scan_coverage_is_checked() {
        let schedule = unit_schedule(20);
        let net = certified_scalar_net(InputSignal::zero());
        let act = small_activation();
        let opts = SolverOptions::for_problem(&net, &schedule);
        let setup = IvpSetup::constant(0.0, &Grid::constant(1, 1, 0.0));
        let traj = solver::solve_ivp(&net, &schedule, &act, &setup, 10.0, &opts).unwrap();
        assert!(matches!(
            translation_scan(
                &traj,
                0.01,
                (0.0, 20.0),
                0.5,
                (0.0, 15.0),
                ExecMode::default()
            ),
            Err(SicnnError::Coverage(_))
        ));
    }

    #[test]
    fn periodic_trajectory_clusters_near_its_period() {
        // Decoupled cell driven at period 4: after the transient the
        // steady-state response has period 4 exactly.
        let schedule = unit_schedule(200);
        let omega = std::f64::consts::PI / 2.0; // period 4
        let net = NetworkSpec::new(
            0,
            Grid::constant(1, 1, 1.0),
            Grid::constant(1, 1, 0.0),
            vec![InputSignal::from_terms(vec![InputTerm {
                amplitude: 1.0,
                angular_frequency: omega,
                phase: 0.0,
                kind: Waveform::Sine,
            }])],
            0.25,
        )
        .unwrap();
        let act = small_activation();
        let opts = SolverOptions::for_problem(&net, &schedule);
        let traj = bounded_solution(&net, &schedule, &act, 0.0, 40.0, 1e-9, &opts).unwrap();
        let report = translation_scan(
            &traj,
            0.02,
            (0.0, 18.0),
            0.05,
            (0.0, 10.0),
            ExecMode::default(),
        )
        .unwrap();
        assert!(!report.accepted.is_empty());
        // Every accepted α sits within one grid step of a multiple of 4.
        for &alpha in &report.accepted {
            let nearest = (alpha / 4.0).round() * 4.0;
            assert!(
                (alpha - nearest).abs() <= 0.05 + 1e-9,
                "accepted α = {alpha} is not near a multiple of 4"
            );
        }
        // And the multiples of 4 in range are all found.
        for multiple in [0.0, 4.0, 8.0, 12.0, 16.0] {
            assert!(
                report
                    .accepted
                    .iter()
                    .any(|&a| (a - multiple).abs() <= 0.05 + 1e-9),
                "no accepted α near {multiple}"
            );
        }
    }

    #[test]
    fn bundled_preset_is_fully_certified() {
        let model = RunConfig::example6().build().unwrap();
        let report = model.net.check_conditions(&model.schedule, &model.act);
        assert!(report.all_pass, "entries: {:?}", report.entries);
        assert!(report.contraction_certified());
        assert!(report.almost_periodic_certified());
    }
}
