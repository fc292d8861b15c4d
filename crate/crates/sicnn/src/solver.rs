//! Interval-by-interval fixed-point solver with dense output.
//!
//! Between consecutive breakpoints the deviating argument is frozen at the
//! interval's anchor, so the model reduces to a retarded equation whose
//! solution satisfies the integral identity
//!
//! ```text
//! x_ij(t) = e^{−a_ij (t−left)} x_ij(left)
//!           − ∫_left^t e^{−a_ij (t−s)} [ S_ij(s) x_ij(s) − L_ij(s) ] ds,
//! ```
//!
//! where `S_ij(s)` is the neighborhood-weighted activation sum. Because the
//! anchor may lie *ahead* of the current time, the interval is solved as a
//! whole: the right-hand side is iterated to a fixed point (the certified
//! smallness conditions make it a contraction), each pass reading the
//! deviated values from the previous iterate and everything before the
//! interval from committed history. Node values and one-sided derivatives
//! are stored per substep, giving cubic-Hermite dense output; intervals are
//! chained until the requested horizon is covered.

use serde::{Deserialize, Serialize};

use crate::activation::{ActivationSpec, Segment};
use crate::error::{Result, SicnnError};
use crate::exec::{self, ExecMode};
use crate::grid::Grid;
use crate::network::{InputSignal, NetworkSpec};
use crate::schedule::ArgumentSchedule;
use crate::trajectory::{cubic_hermite, Block, InitialHistory, SegmentSource, Trajectory};

/// Quadrature rule for the exponential-kernel integral on the substep grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Quadrature {
    /// Second-order; samples the integrand at the substep nodes.
    #[default]
    Trapezoid,
    /// Fourth-order in the integrand; also samples substep midpoints.
    Simpson,
}

/// Tunables for the fixed-point interval solver.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Uniform substep `h` within intervals; must satisfy `h ≤ θ̲/4` so every
    /// interval gets several substeps.
    pub step: f64,
    /// Sup-norm change between successive iterates that counts as converged.
    pub picard_tol: f64,
    /// Pass budget before the interval is declared non-convergent.
    pub picard_max_iters: usize,
    pub quadrature: Quadrature,
    pub exec: ExecMode,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            step: 0.02,
            picard_tol: 1e-10,
            picard_max_iters: 100,
            quadrature: Quadrature::Trapezoid,
            exec: ExecMode::default(),
        }
    }
}

impl SolverOptions {
    /// Defaults scaled to the problem: `h = min(θ̲, τ, 1)/50`, skipping
    /// degenerate (non-positive) candidates.
    pub fn for_problem(net: &NetworkSpec, schedule: &ArgumentSchedule) -> Self {
        let mut scale = 1.0f64;
        for cand in [schedule.declared_spacing().gap_lower, net.tau()] {
            if cand > 0.0 {
                scale = scale.min(cand);
            }
        }
        SolverOptions {
            step: scale / 50.0,
            ..SolverOptions::default()
        }
    }

    /// Check the option invariants against a schedule.
    pub fn validate(&self, schedule: &ArgumentSchedule) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(SicnnError::InvalidSpec(format!(
                "solver step must be positive and finite, got {}",
                self.step
            )));
        }
        if !(self.picard_tol > 0.0) {
            return Err(SicnnError::InvalidSpec(
                "fixed-point tolerance must be positive".into(),
            ));
        }
        if self.picard_max_iters == 0 {
            return Err(SicnnError::InvalidSpec(
                "fixed-point pass budget must be at least 1".into(),
            ));
        }
        let quarter = schedule.declared_spacing().gap_lower / 4.0;
        if self.step > quarter {
            return Err(SicnnError::InvalidSpec(format!(
                "solver step {} exceeds a quarter of the shortest interval ({quarter}); \
                 several substeps per interval are required",
                self.step
            )));
        }
        Ok(())
    }
}

/// Where the start time sits relative to its interval's anchor. The split
/// decides how much initial data an IVP needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartRegime {
    /// `σ ≤ ζ_p`: the anchor value is produced by the solution itself, so a
    /// single segment ending at `σ` suffices.
    AnchorAhead,
    /// `ζ_p < σ`: the anchor lies in the past, so a second segment ending at
    /// the anchor must be supplied.
    AnchorBehind,
}

/// Initial data for a solution run: start time `σ`, the primary segment `φ`
/// on `[σ−τ, σ]`, and — only when the start lies past its interval's anchor —
/// a second segment `ψ` on `[γ(σ)−τ, γ(σ)]`.
#[derive(Debug, Clone)]
pub struct IvpSetup {
    pub sigma: f64,
    pub phi: SegmentSource,
    pub psi: Option<SegmentSource>,
}

impl IvpSetup {
    /// Single-segment setup.
    pub fn new(sigma: f64, phi: SegmentSource) -> Self {
        IvpSetup {
            sigma,
            phi,
            psi: None,
        }
    }

    /// Setup with an extra segment pinned at the interval's anchor.
    pub fn with_anchor_segment(sigma: f64, phi: SegmentSource, psi: SegmentSource) -> Self {
        IvpSetup {
            sigma,
            phi,
            psi: Some(psi),
        }
    }

    /// Constant-in-time initial data from a per-cell grid.
    pub fn constant(sigma: f64, values: &Grid) -> Self {
        IvpSetup::new(sigma, SegmentSource::from_grid(values))
    }

    /// Which initial-data regime applies at this start time.
    pub fn regime(&self, schedule: &ArgumentSchedule) -> Result<StartRegime> {
        let p = schedule.interval_index(self.sigma)?;
        let anchor = schedule.anchor(p)?;
        Ok(if self.sigma <= anchor {
            StartRegime::AnchorAhead
        } else {
            StartRegime::AnchorBehind
        })
    }

    /// The same initial data shifted by a constant on every cell — the
    /// worst-case sup-norm perturbation used by stability probes.
    pub fn offset_by(&self, delta: f64) -> IvpSetup {
        IvpSetup {
            sigma: self.sigma,
            phi: self.phi.offset_by(delta),
            psi: self.psi.as_ref().map(|p| p.offset_by(delta)),
        }
    }

    /// Validate the segment layout against the schedule and assemble the
    /// history record. Under the dual-segment regime with overlapping
    /// windows the two segments must describe the same function where both
    /// are defined.
    fn build_history(
        &self,
        schedule: &ArgumentSchedule,
        tau: f64,
        cells: usize,
    ) -> Result<InitialHistory> {
        let p = schedule.interval_index(self.sigma)?;
        let anchor = schedule.anchor(p)?;
        match self.regime(schedule)? {
            StartRegime::AnchorAhead => {
                if self.psi.is_some() {
                    return Err(SicnnError::InvalidSpec(format!(
                        "start time {} does not lie past its interval's anchor {anchor}; \
                         the anchor value is produced by the solution, so no anchor \
                         segment may be supplied",
                        self.sigma
                    )));
                }
                Ok(InitialHistory {
                    primary: self.phi.clone(),
                    anchor: None,
                })
            }
            StartRegime::AnchorBehind => {
                let psi = self.psi.as_ref().ok_or_else(|| {
                    SicnnError::InvalidSpec(format!(
                        "start time {} lies past its interval's anchor {anchor}; a second \
                         segment ending at the anchor is required",
                        self.sigma
                    ))
                })?;
                // Overlap check: the windows [anchor−τ, anchor] and [σ−τ, σ]
                // are connected iff anchor ≥ σ − τ; on the overlap the
                // primary segment must replay the anchor segment shifted by
                // σ − anchor.
                if anchor >= self.sigma - tau - 1e-12 {
                    let shift = self.sigma - anchor;
                    let lo = -tau;
                    let hi = (anchor - self.sigma).max(lo);
                    let mut worst = 0.0f64;
                    let mut scale = 1.0f64;
                    let mut at = (0, lo);
                    for k in 0..=64 {
                        let s = lo + (hi - lo) * k as f64 / 64.0;
                        for c in 0..cells {
                            let a = self.phi.eval(c, s);
                            let b = psi.eval(c, (s + shift).clamp(-tau, 0.0));
                            scale = scale.max(a.abs()).max(b.abs());
                            let diff = (a - b).abs();
                            if diff > worst {
                                worst = diff;
                                at = (c, s);
                            }
                        }
                    }
                    if worst > 1e-8 * scale {
                        return Err(SicnnError::InconsistentInitialData(format!(
                            "primary and anchor segments disagree by {worst} at cell {} \
                             offset {} where their windows overlap",
                            at.0, at.1
                        )));
                    }
                }
                Ok(InitialHistory {
                    primary: self.phi.clone(),
                    anchor: Some((anchor, psi.clone())),
                })
            }
        }
    }
}

/// Per-interval iteration record: sup-norm defects of successive passes.
#[derive(Debug, Clone, Serialize)]
pub struct StepMeta {
    /// Interval index `p` of the span.
    pub interval: i64,
    pub left: f64,
    /// Right edge actually integrated (extends to the anchor when the
    /// requested horizon stops short of it).
    pub right: f64,
    /// Passes taken to converge.
    pub passes: usize,
    /// Sup-norm change after each pass, in order.
    pub defects: Vec<f64>,
}

impl StepMeta {
    /// Successive defect quotients — the empirical contraction ratios.
    pub fn contraction_ratios(&self) -> Vec<f64> {
        self.defects
            .windows(2)
            .filter(|w| w[0] > 0.0)
            .map(|w| w[1] / w[0])
            .collect()
    }
}

/// A solved trajectory together with its per-interval iteration records.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub trajectory: Trajectory,
    pub steps: Vec<StepMeta>,
}

/// Flattened per-cell model data shared by the solver and defect checks.
pub(crate) struct ModelCtx<'a> {
    pub(crate) act: &'a ActivationSpec,
    pub(crate) cells: usize,
    pub(crate) tau: f64,
    /// Per-cell decay rates, row-major.
    pub(crate) decay: Vec<f64>,
    /// Per-cell neighbor list: `(flat neighbor index, coupling weight)`.
    pub(crate) neighbors: Vec<Vec<(usize, f64)>>,
    /// Per-cell external inputs, row-major.
    pub(crate) inputs: Vec<&'a InputSignal>,
}

impl<'a> ModelCtx<'a> {
    pub(crate) fn new(net: &'a NetworkSpec, act: &'a ActivationSpec) -> Result<Self> {
        if act.required_window() > net.tau() + 1e-12 {
            return Err(SicnnError::InvalidSpec(format!(
                "activation needs a history window of {} but the model retards only {}",
                act.required_window(),
                net.tau()
            )));
        }
        let (m, n) = (net.rows(), net.cols());
        let mut decay = Vec::with_capacity(m * n);
        let mut neighbors = Vec::with_capacity(m * n);
        let mut inputs = Vec::with_capacity(m * n);
        for i in 1..=m {
            for j in 1..=n {
                decay.push(net.decay(i, j));
                let list = net
                    .neighborhood(i, j)?
                    .into_iter()
                    .map(|(k, l)| ((k - 1) * n + (l - 1), net.coupling(k, l)))
                    .collect();
                neighbors.push(list);
                inputs.push(net.input(i, j));
            }
        }
        Ok(ModelCtx {
            act,
            cells: m * n,
            tau: net.tau(),
            decay,
            neighbors,
            inputs,
        })
    }

    /// One row of the integrand `g_ij(s) = S_ij(s) x_ij(s) − L_ij(s)` read
    /// entirely from committed trajectory data, with the deviated argument
    /// frozen at `anchor`. History coverage must be pre-checked.
    pub(crate) fn committed_g_row(
        &self,
        traj: &Trajectory,
        s: f64,
        anchor: f64,
        out: &mut [f64],
    ) -> Result<()> {
        debug_assert_eq!(out.len(), self.cells);
        let mut activations = Vec::with_capacity(self.cells);
        for c in 0..self.cells {
            let seg_t = traj.segment(c, s);
            let seg_arg = traj.segment(c, anchor);
            activations.push(self.act.eval(&seg_t, &seg_arg)?);
        }
        for (c, slot) in out.iter_mut().enumerate() {
            let mut sum = 0.0;
            for &(nb, w) in &self.neighbors[c] {
                sum += w * activations[nb];
            }
            *slot = sum * traj.value_flat(c, s)? - self.inputs[c].eval(s);
        }
        Ok(())
    }
}

/// Read-through state view for one fixed-point pass: the previous iterate's
/// Hermite interpolant on the working span, committed history before it.
struct IterateView<'a> {
    traj: &'a Trajectory,
    left: f64,
    dt: f64,
    nsub: usize,
    cells: usize,
    values: &'a [f64],
    derivs: &'a [f64],
}

impl IterateView<'_> {
    fn value(&self, c: usize, t: f64) -> f64 {
        if t < self.left {
            return self
                .traj
                .value_flat(c, t)
                .expect("history coverage is pre-checked before iteration starts");
        }
        let reach = self.left + self.dt * self.nsub as f64;
        let t = t.min(reach);
        let mut j = ((t - self.left) / self.dt) as usize;
        if j >= self.nsub {
            j = self.nsub - 1;
        }
        let t0 = self.left + j as f64 * self.dt;
        let u = ((t - t0) / self.dt).clamp(0.0, 1.0);
        cubic_hermite(
            u,
            self.values[j * self.cells + c],
            self.derivs[j * self.cells + c],
            self.values[(j + 1) * self.cells + c],
            self.derivs[(j + 1) * self.cells + c],
            self.dt,
        )
    }

    fn segment(&self, c: usize, base: f64, window: f64) -> IterateSegment<'_> {
        IterateSegment {
            view: self,
            c,
            base,
            window,
        }
    }
}

struct IterateSegment<'a> {
    view: &'a IterateView<'a>,
    c: usize,
    base: f64,
    window: f64,
}

impl Segment for IterateSegment<'_> {
    fn window(&self) -> f64 {
        self.window
    }

    fn value_at(&self, s: f64) -> f64 {
        self.view.value(self.c, self.base + s)
    }
}

/// Integrand rows `g_ij(s_q)` at the quadrature sample times, all read from
/// the previous iterate through `view`.
fn integrand_rows(
    ctx: &ModelCtx<'_>,
    view: &IterateView<'_>,
    times: &[f64],
    anchor: f64,
    mode: ExecMode,
) -> Vec<f64> {
    let cells = ctx.cells;
    // Activation values first: every cell's S sums its neighbors' f-values,
    // so computing f once per (time, cell) avoids neighborhood-fold blowup.
    let mut activations = vec![0.0; times.len() * cells];
    exec::fill_rows(mode, &mut activations, cells, |q, row| {
        let s = times[q];
        for (c, slot) in row.iter_mut().enumerate() {
            let seg_t = view.segment(c, s, ctx.tau);
            let seg_arg = view.segment(c, anchor, ctx.tau);
            *slot = ctx
                .act
                .eval(&seg_t, &seg_arg)
                .expect("activation window is pre-checked against the model's retardation");
        }
    });
    let mut g = vec![0.0; times.len() * cells];
    exec::fill_rows(mode, &mut g, cells, |q, row| {
        let s = times[q];
        let f_row = &activations[q * cells..(q + 1) * cells];
        for (c, slot) in row.iter_mut().enumerate() {
            let mut sum = 0.0;
            for &(nb, w) in &ctx.neighbors[c] {
                sum += w * f_row[nb];
            }
            *slot = sum * view.value(c, s) - ctx.inputs[c].eval(s);
        }
    });
    g
}

/// Solve one interval span `[left, right]` by fixed-point iteration and
/// commit the converged block (extended to the interval's anchor when
/// `right` stops short of it, so deviated lookups stay answerable).
fn solve_interval_into(
    ctx: &ModelCtx<'_>,
    schedule: &ArgumentSchedule,
    traj: &mut Trajectory,
    left: f64,
    right: f64,
    opts: &SolverOptions,
    steps: &mut Vec<StepMeta>,
) -> Result<()> {
    let p = schedule.interval_index(left)?;
    let anchor = schedule.anchor(p)?;
    debug_assert!(
        right <= schedule.breakpoint(p + 1)? + 1e-9,
        "span must stay within one interval"
    );
    let reach = right.max(anchor);
    let nsub = (((reach - left) / opts.step).ceil() as usize).max(1);
    let dt = (reach - left) / nsub as f64;
    let cells = ctx.cells;

    let mut x0 = vec![0.0; cells];
    for (c, slot) in x0.iter_mut().enumerate() {
        *slot = traj.value_flat(c, left)?;
    }

    // Initial iterate: constant extension of the value at `left`.
    let mut values: Vec<f64> = (0..=nsub).flat_map(|_| x0.iter().copied()).collect();
    let mut derivs = vec![0.0; (nsub + 1) * cells];
    let mut next_values = vec![0.0; (nsub + 1) * cells];
    let mut next_derivs = vec![0.0; (nsub + 1) * cells];

    // Quadrature sample times; Simpson also needs the substep midpoints.
    let (qtimes, full_stride): (Vec<f64>, usize) = match opts.quadrature {
        Quadrature::Trapezoid => ((0..=nsub).map(|j| left + j as f64 * dt).collect(), 1),
        Quadrature::Simpson => (
            (0..=2 * nsub).map(|q| left + q as f64 * dt / 2.0).collect(),
            2,
        ),
    };

    let mut defects = Vec::new();
    for pass in 1..=opts.picard_max_iters {
        let g = {
            let view = IterateView {
                traj,
                left,
                dt,
                nsub,
                cells,
                values: &values,
                derivs: &derivs,
            };
            integrand_rows(ctx, &view, &qtimes, anchor, opts.exec)
        };
        let g_at = |node: usize, c: usize| g[node * full_stride * cells + c];

        for c in 0..cells {
            let a = ctx.decay[c];
            let ed = (-a * dt).exp();
            let eh = (-a * dt / 2.0).exp();
            let mut v = x0[c];
            next_values[c] = v;
            next_derivs[c] = -a * v - g_at(0, c);
            for j in 0..nsub {
                // x(t_{j+1}) = e^{−a dt} x(t_j) − ∫_{t_j}^{t_{j+1}} e^{−a(t_{j+1}−s)} g(s) ds
                let increment = match opts.quadrature {
                    Quadrature::Trapezoid => 0.5 * dt * (ed * g_at(j, c) + g_at(j + 1, c)),
                    Quadrature::Simpson => {
                        dt / 6.0
                            * (ed * g_at(j, c)
                                + 4.0 * eh * g[(2 * j + 1) * cells + c]
                                + g_at(j + 1, c))
                    }
                };
                v = ed * v - increment;
                next_values[(j + 1) * cells + c] = v;
                next_derivs[(j + 1) * cells + c] = -a * v - g_at(j + 1, c);
            }
        }

        let defect = values
            .iter()
            .zip(&next_values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        defects.push(defect);
        std::mem::swap(&mut values, &mut next_values);
        std::mem::swap(&mut derivs, &mut next_derivs);

        if defect < opts.picard_tol {
            traj.push_block(Block {
                left,
                right: reach,
                dt,
                nsub,
                values,
                derivs,
            });
            steps.push(StepMeta {
                interval: p,
                left,
                right: reach,
                passes: pass,
                defects,
            });
            return Ok(());
        }
    }

    let last_ratio = match defects.as_slice() {
        [.., a, b] if *a > 0.0 => b / a,
        _ => f64::NAN,
    };
    Err(SicnnError::NonConvergence {
        left,
        right: reach,
        iters: opts.picard_max_iters,
        last_ratio,
    })
}

/// Solve the initial value problem up to `t_end`, returning the trajectory
/// together with per-interval iteration records.
pub fn solve_ivp_with_meta(
    net: &NetworkSpec,
    schedule: &ArgumentSchedule,
    act: &ActivationSpec,
    setup: &IvpSetup,
    t_end: f64,
    opts: &SolverOptions,
) -> Result<SolveOutcome> {
    opts.validate(schedule)?;
    if !(t_end > setup.sigma) {
        return Err(SicnnError::InvalidSpec(format!(
            "horizon {t_end} must lie past the start time {}",
            setup.sigma
        )));
    }
    let ctx = ModelCtx::new(net, act)?;
    let initial = setup.build_history(schedule, net.tau(), ctx.cells)?;
    let mut traj = Trajectory::new(net.rows(), net.cols(), net.tau(), setup.sigma, initial);
    let mut steps = Vec::new();

    let mut left = setup.sigma;
    let mut p = schedule.interval_index(left)?;
    while left < t_end - 1e-12 {
        let right = schedule.breakpoint(p + 1)?.min(t_end);
        solve_interval_into(&ctx, schedule, &mut traj, left, right, opts, &mut steps)?;
        left = right;
        p += 1;
    }
    traj.set_end(t_end);
    Ok(SolveOutcome {
        trajectory: traj,
        steps,
    })
}

/// Solve the initial value problem up to `t_end`.
pub fn solve_ivp(
    net: &NetworkSpec,
    schedule: &ArgumentSchedule,
    act: &ActivationSpec,
    setup: &IvpSetup,
    t_end: f64,
    opts: &SolverOptions,
) -> Result<Trajectory> {
    solve_ivp_with_meta(net, schedule, act, setup, t_end, opts).map(|o| o.trajectory)
}

/// Panels per stored substep used by the independent defect quadrature.
const DEFECT_PANELS: usize = 4;

/// Walk the committed blocks of `traj`, maintaining the running integral
/// `I_c(t) = ∫_integrate_from^t e^{−a_c (t−s)} g_c(s) ds` by composite
/// Simpson quadrature at [`DEFECT_PANELS`] panels per stored substep, and
/// return the worst `|x_c(t) − model(c, t, I_c(t))|` over all stored nodes
/// `t ≥ record_from` and all cells. The caller's `model` closure turns the
/// integral into the identity's predicted value, so both the
/// interval-anchored and the whole-line integral equations share this
/// machinery.
pub(crate) fn defect_walk<F>(
    ctx: &ModelCtx<'_>,
    schedule: &ArgumentSchedule,
    traj: &Trajectory,
    integrate_from: f64,
    record_from: f64,
    model: F,
) -> Result<f64>
where
    F: Fn(usize, f64, f64) -> f64,
{
    let end = traj.end();
    if !(integrate_from < end && record_from >= integrate_from) {
        return Err(SicnnError::Coverage(format!(
            "defect window [{record_from}, {end}] with integral from {integrate_from} \
             is empty or inverted"
        )));
    }
    // Probe the deepest lookback once so interior reads cannot fail.
    for c in 0..ctx.cells {
        traj.value_flat(c, integrate_from - ctx.tau).map_err(|e| {
            SicnnError::Coverage(format!("history too short for defect check: {e}"))
        })?;
    }

    let mut integral = vec![0.0; ctx.cells];
    let mut t_cur = integrate_from;
    let mut worst = 0.0f64;
    let mut g_row = vec![0.0; ctx.cells * (DEFECT_PANELS + 1)];
    let mut actual = vec![0.0; ctx.cells];

    for block in traj.blocks() {
        if block.right <= integrate_from + 1e-14 {
            continue;
        }
        if block.left >= end - 1e-14 {
            break;
        }
        let p = schedule.interval_index(block.left.max(integrate_from))?;
        let anchor = schedule.anchor(p)?;
        traj.value_flat(0, anchor - ctx.tau).map_err(|e| {
            SicnnError::Coverage(format!("history too short for defect check: {e}"))
        })?;
        let lo = integrate_from.max(block.left);
        let hi = end.min(block.right);
        if hi <= lo + 1e-14 {
            continue;
        }
        let mut targets: Vec<f64> = (0..=block.nsub)
            .map(|j| block.left + j as f64 * block.dt)
            .filter(|&t| t > lo + 1e-12 && t < hi - 1e-12)
            .collect();
        targets.push(hi);

        for t in targets {
            // Advance the running integral from t_cur to t: damp what is
            // already accumulated, add the new span by composite Simpson.
            let width = t - t_cur;
            let panel = width / DEFECT_PANELS as f64;
            for k in 0..=DEFECT_PANELS {
                let s = t_cur + k as f64 * panel;
                ctx.committed_g_row(
                    traj,
                    s,
                    anchor,
                    &mut g_row[ctx.cells * k..ctx.cells * (k + 1)],
                )?;
            }
            let record = t >= record_from - 1e-12;
            if record {
                traj.row_into(t, &mut actual)?;
            }
            for c in 0..ctx.cells {
                let a = ctx.decay[c];
                let mut acc = 0.0;
                for k in 0..=DEFECT_PANELS {
                    let s = t_cur + k as f64 * panel;
                    let weight = match k {
                        0 => 1.0,
                        k if k == DEFECT_PANELS => 1.0,
                        k if k % 2 == 1 => 4.0,
                        _ => 2.0,
                    };
                    acc += weight * (-a * (t - s)).exp() * g_row[ctx.cells * k + c];
                }
                integral[c] = (-a * width).exp() * integral[c] + acc * panel / 3.0;
                if record {
                    worst = worst.max((actual[c] - model(c, t, integral[c])).abs());
                }
            }
            t_cur = t;
        }
    }
    Ok(worst)
}

/// Defect of a trajectory against the interval-anchored integral identity.
///
/// Starting from `x(sigma)` the right-hand side is recomputed by composite
/// Simpson quadrature at four panels per stored substep — independent of the
/// solver's own rule — and the maximum deviation `|x(t) − rhs(t)|` over all
/// stored nodes in `[sigma, end]` and all cells is returned. This is the
/// solver's a-posteriori defect measure: for a converged run it reflects
/// pure quadrature error and shrinks as `O(h²)`.
pub fn residual(
    net: &NetworkSpec,
    schedule: &ArgumentSchedule,
    act: &ActivationSpec,
    traj: &Trajectory,
    sigma: f64,
) -> Result<f64> {
    let ctx = ModelCtx::new(net, act)?;
    if !(sigma >= traj.start() - 1e-12 && sigma < traj.end()) {
        return Err(SicnnError::Coverage(format!(
            "defect start {sigma} outside the trajectory span [{}, {}]",
            traj.start(),
            traj.end()
        )));
    }
    let mut x0 = vec![0.0; ctx.cells];
    for (c, slot) in x0.iter_mut().enumerate() {
        *slot = traj.value_flat(c, sigma)?;
    }
    let decay = ctx.decay.clone();
    defect_walk(&ctx, schedule, traj, sigma, sigma, move |c, t, integral| {
        (-decay[c] * (t - sigma)).exp() * x0[c] - integral
    })
}
