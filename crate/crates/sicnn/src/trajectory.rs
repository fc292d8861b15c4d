//! Dense-output solution records.
//!
//! A [`Trajectory`] stores the committed solution as contiguous blocks — one
//! per integrated span between breakpoints — each holding node values and
//! one-sided derivatives on a uniform substep grid. Evaluation anywhere
//! inside a block is cubic Hermite interpolation of the bracketing nodes, so
//! the record is continuous everywhere and differentiable except possibly at
//! block boundaries (where the equation itself may kink). History before the
//! integration start is served by the initial segments: the primary segment
//! ending at the start time and, for runs started past their interval's
//! anchor, a second segment ending at the anchor.

use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use crate::activation::Segment;
use crate::error::{Result, SicnnError};
use crate::grid::Grid;

/// Boundary tolerance for history-window membership; lookups this close to
/// a window edge are clamped onto it.
const EDGE_SLACK: f64 = 1e-9;

/// Per-cell initial data on a window `[base − τ, base]`, addressed by flat
/// cell index and offset `s ∈ [−τ, 0]`.
#[derive(Clone)]
pub enum SegmentSource {
    /// The same constant per cell across the whole window.
    Constant(Vec<f64>),
    /// Arbitrary per-cell profile `(flat_cell, s) → value`.
    Profile(Arc<dyn Fn(usize, f64) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for SegmentSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SegmentSource::Constant(v) => f.debug_tuple("Constant").field(v).finish(),
            SegmentSource::Profile(_) => f.write_str("Profile(..)"),
        }
    }
}

impl SegmentSource {
    /// Constant-per-cell source from a grid (row-major flattening).
    pub fn from_grid(grid: &Grid) -> Self {
        SegmentSource::Constant(grid.as_slice().to_vec())
    }

    /// Value for flat cell `c` at offset `s ∈ [−τ, 0]`.
    pub fn eval(&self, c: usize, s: f64) -> f64 {
        match self {
            SegmentSource::Constant(v) => v[c],
            SegmentSource::Profile(f) => f(c, s),
        }
    }

    /// The same source shifted by a constant on every cell — the worst-case
    /// sup-norm perturbation used by stability runs.
    pub fn offset_by(&self, delta: f64) -> Self {
        match self {
            SegmentSource::Constant(v) => {
                SegmentSource::Constant(v.iter().map(|x| x + delta).collect())
            }
            SegmentSource::Profile(f) => {
                let f = Arc::clone(f);
                SegmentSource::Profile(Arc::new(move |c, s| f(c, s) + delta))
            }
        }
    }
}

/// Initial data: the primary segment ending at the start time, plus an
/// optional segment ending at a (pre-start) anchor time. Where the two
/// windows overlap, the anchor segment takes precedence.
#[derive(Debug, Clone)]
pub struct InitialHistory {
    pub primary: SegmentSource,
    /// `(anchor_time, source)`; the source covers `[anchor_time − τ, anchor_time]`.
    pub anchor: Option<(f64, SegmentSource)>,
}

/// One committed integration span on a uniform substep grid.
#[derive(Debug, Clone)]
pub(crate) struct Block {
    pub left: f64,
    pub right: f64,
    pub dt: f64,
    pub nsub: usize,
    /// Node values, `values[j * cells + c]`, `j = 0..=nsub`.
    pub values: Vec<f64>,
    /// Node derivatives (right-hand-side values), same layout.
    pub derivs: Vec<f64>,
}

impl Block {
    fn value_at(&self, cells: usize, c: usize, t: f64) -> f64 {
        let mut j = ((t - self.left) / self.dt) as usize;
        if j >= self.nsub {
            j = self.nsub - 1;
        }
        let t0 = self.left + j as f64 * self.dt;
        let u = ((t - t0) / self.dt).clamp(0.0, 1.0);
        let (v0, v1) = (self.values[j * cells + c], self.values[(j + 1) * cells + c]);
        let (d0, d1) = (self.derivs[j * cells + c], self.derivs[(j + 1) * cells + c]);
        cubic_hermite(u, v0, d0, v1, d1, self.dt)
    }
}

/// Standard cubic Hermite basis on `u ∈ [0, 1]` with step scaling.
#[inline]
pub(crate) fn cubic_hermite(u: f64, v0: f64, d0: f64, v1: f64, d1: f64, dt: f64) -> f64 {
    let um1 = 1.0 - u;
    let h00 = (1.0 + 2.0 * u) * um1 * um1;
    let h10 = u * um1 * um1;
    let h01 = u * u * (3.0 - 2.0 * u);
    let h11 = u * u * (u - 1.0);
    h00 * v0 + h10 * dt * d0 + h01 * v1 + h11 * dt * d1
}

/// Dense-output record of one solution run.
#[derive(Debug)]
pub struct Trajectory {
    m: usize,
    n: usize,
    tau: f64,
    /// Time the integration originally started (first block's left edge).
    origin: f64,
    /// Exposed start (≥ origin after transient truncation).
    start: f64,
    /// Exposed end (≤ the last block's right edge).
    end: f64,
    initial: InitialHistory,
    blocks: Vec<Block>,
    hint: AtomicUsize,
}

impl Clone for Trajectory {
    fn clone(&self) -> Self {
        Trajectory {
            m: self.m,
            n: self.n,
            tau: self.tau,
            origin: self.origin,
            start: self.start,
            end: self.end,
            initial: self.initial.clone(),
            blocks: self.blocks.clone(),
            hint: AtomicUsize::new(self.hint.load(Ordering::Relaxed)),
        }
    }
}

impl Trajectory {
    /// Empty record starting at `origin` with the given initial history.
    pub(crate) fn new(m: usize, n: usize, tau: f64, origin: f64, initial: InitialHistory) -> Self {
        Trajectory {
            m,
            n,
            tau,
            origin,
            start: origin,
            end: origin,
            initial,
            blocks: Vec::new(),
            hint: AtomicUsize::new(0),
        }
    }

    pub fn rows(&self) -> usize {
        self.m
    }

    pub fn cols(&self) -> usize {
        self.n
    }

    pub fn cell_count(&self) -> usize {
        self.m * self.n
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Exposed start of the record.
    pub fn start(&self) -> f64 {
        self.start
    }

    /// Exposed end of the record.
    pub fn end(&self) -> f64 {
        self.end
    }

    /// Earliest time any lookup can reach (start of the primary or anchor
    /// window, whichever is earlier, relative to the *original* start).
    pub fn history_floor(&self) -> f64 {
        let primary_floor = self.origin - self.tau;
        match &self.initial.anchor {
            Some((anchor, _)) => primary_floor.min(anchor - self.tau),
            None => primary_floor,
        }
    }

    /// End of the committed data (may extend past `end()` when the last
    /// span was integrated beyond the requested horizon to cover its
    /// anchor).
    pub fn storage_end(&self) -> f64 {
        self.blocks.last().map(|b| b.right).unwrap_or(self.origin)
    }

    pub(crate) fn set_end(&mut self, end: f64) {
        self.end = end;
    }

    pub(crate) fn push_block(&mut self, block: Block) {
        debug_assert!(
            self.blocks.is_empty() || (block.left - self.storage_end()).abs() < 1e-12,
            "blocks must be contiguous"
        );
        debug_assert_eq!(block.values.len(), (block.nsub + 1) * self.cell_count());
        self.end = self.end.max(block.right);
        self.blocks.push(block);
    }

    pub(crate) fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Value of flat cell `c` at time `t`.
    ///
    /// `t` may lie anywhere in the committed span or the initial history
    /// windows; anything else is a [`SicnnError::History`] error.
    pub fn value_flat(&self, c: usize, t: f64) -> Result<f64> {
        let cells = self.cell_count();
        debug_assert!(c < cells);
        if t >= self.origin && !self.blocks.is_empty() {
            if t > self.storage_end() + EDGE_SLACK {
                return Err(SicnnError::History(format!(
                    "time {t} beyond committed data (≤ {})",
                    self.storage_end()
                )));
            }
            let t = t.min(self.storage_end());
            return Ok(self.block_at(t).value_at(cells, c, t));
        }
        // Anchor window takes precedence over the primary window on overlap.
        if let Some((anchor, source)) = &self.initial.anchor {
            if t >= anchor - self.tau - EDGE_SLACK && t <= anchor + EDGE_SLACK {
                return Ok(source.eval(c, (t - anchor).clamp(-self.tau, 0.0)));
            }
        }
        if t >= self.origin - self.tau - EDGE_SLACK && t <= self.origin + EDGE_SLACK {
            return Ok(self
                .initial
                .primary
                .eval(c, (t - self.origin).clamp(-self.tau, 0.0)));
        }
        Err(SicnnError::History(format!(
            "time {t} outside stored history (floor {})",
            self.history_floor()
        )))
    }

    /// Value of cell `(i, j)` (1-based) at time `t`.
    pub fn value(&self, i: usize, j: usize, t: f64) -> Result<f64> {
        self.value_flat((i - 1) * self.n + (j - 1), t)
    }

    /// One-sided derivative stored at the node nearest to `t` from the left
    /// within its block (exact at nodes). Test probe for the right-derivative
    /// convention at breakpoints.
    #[cfg(test)]
    pub(crate) fn node_derivative(&self, c: usize, t: f64) -> f64 {
        let cells = self.cell_count();
        let b = self.block_at(t.min(self.storage_end()));
        let j = (((t - b.left) / b.dt).round() as usize).min(b.nsub);
        b.derivs[j * cells + c]
    }

    fn block_at(&self, t: f64) -> &Block {
        let h = self.hint.load(Ordering::Relaxed).min(self.blocks.len() - 1);
        let hb = &self.blocks[h];
        if t >= hb.left && t <= hb.right {
            return hb;
        }
        let idx = self
            .blocks
            .partition_point(|b| b.left <= t)
            .saturating_sub(1);
        self.hint.store(idx, Ordering::Relaxed);
        &self.blocks[idx]
    }

    /// All cells at time `t`, row-major, into `buf`.
    pub fn row_into(&self, t: f64, buf: &mut [f64]) -> Result<()> {
        debug_assert_eq!(buf.len(), self.cell_count());
        for (c, slot) in buf.iter_mut().enumerate() {
            *slot = self.value_flat(c, t)?;
        }
        Ok(())
    }

    /// History segment of flat cell `c` ending at `base`, windowed `[−τ, 0]`.
    ///
    /// Evaluation panics if the window reaches before the history floor;
    /// callers are expected to respect [`Trajectory::history_floor`].
    pub fn segment(&self, c: usize, base: f64) -> TrajectorySegment<'_> {
        TrajectorySegment {
            traj: self,
            c,
            base,
        }
    }

    /// Max over the sample grid (`t0`, `t0 + dt`, …, `t1`, endpoint
    /// included) of the max-abs over cells.
    pub fn sup_norm(&self, t0: f64, t1: f64, dt: f64) -> Result<f64> {
        let mut sup = 0.0f64;
        let mut buf = vec![0.0; self.cell_count()];
        for t in sample_grid(t0, t1, dt) {
            self.row_into(t, &mut buf)?;
            for &v in &buf {
                sup = sup.max(v.abs());
            }
        }
        Ok(sup)
    }

    /// A copy with flat cell `c` shifted by a constant everywhere — committed
    /// data and initial history alike. The result is a deliberately wrong
    /// solution candidate; defect measures must flag it, which makes this
    /// the standard probe for their detection power.
    pub fn offset_cell(&self, c: usize, delta: f64) -> Trajectory {
        let cells = self.cell_count();
        debug_assert!(c < cells);
        let mut out = self.clone();
        for block in &mut out.blocks {
            for j in 0..=block.nsub {
                // Constant shifts leave derivatives untouched, and Hermite
                // interpolation reproduces them exactly.
                block.values[j * cells + c] += delta;
            }
        }
        let shift = move |source: &SegmentSource| {
            let inner = source.clone();
            SegmentSource::Profile(Arc::new(move |cc, s| {
                inner.eval(cc, s) + if cc == c { delta } else { 0.0 }
            }))
        };
        out.initial = InitialHistory {
            primary: shift(&out.initial.primary),
            anchor: out.initial.anchor.as_ref().map(|(t, src)| (*t, shift(src))),
        };
        out
    }

    /// Drop committed data ending before `new_start − keepback` and expose
    /// `[new_start, end]`. Lookbacks of up to `keepback` before the new
    /// start stay valid, which downstream defect checks and history
    /// segments rely on.
    pub fn truncated(mut self, new_start: f64, keepback: f64) -> Self {
        let cutoff = new_start - keepback;
        let keep_from = self
            .blocks
            .iter()
            .position(|b| b.right > cutoff)
            .unwrap_or(self.blocks.len().saturating_sub(1));
        self.blocks.drain(..keep_from);
        if let Some(first) = self.blocks.first() {
            // History before the retained blocks is gone; the origin moves
            // with them unless the initial windows are still inside.
            if first.left > self.origin {
                self.initial = InitialHistory {
                    primary: SegmentSource::Constant(vec![f64::NAN; self.cell_count()]),
                    anchor: None,
                };
                self.tau = 0.0;
                self.origin = first.left;
            }
        }
        self.start = new_start.max(self.origin);
        self.hint.store(0, Ordering::Relaxed);
        self
    }

    /// Write the exposed span as CSV: header `t,x11,…,xmn`, one row per
    /// sample time at the given stride (endpoint included).
    pub fn write_csv<W: Write>(&self, out: &mut W, stride: f64) -> Result<()> {
        if !(stride > 0.0) {
            return Err(SicnnError::InvalidSpec(
                "CSV stride must be positive".into(),
            ));
        }
        let mut header = String::from("t");
        for i in 1..=self.m {
            for j in 1..=self.n {
                header.push_str(&format!(",x{i}{j}"));
            }
        }
        writeln!(out, "{header}").map_err(io_err)?;
        let mut buf = vec![0.0; self.cell_count()];
        for t in sample_grid(self.start, self.end, stride) {
            self.row_into(t, &mut buf)?;
            let mut line = format!("{t}");
            for &v in &buf {
                line.push_str(&format!(",{v}"));
            }
            writeln!(out, "{line}").map_err(io_err)?;
        }
        Ok(())
    }
}

fn io_err(e: std::io::Error) -> SicnnError {
    SicnnError::Config(format!("write failed: {e}"))
}

/// Uniform sample grid over `[t0, t1]` with the endpoint always included.
pub fn sample_grid(t0: f64, t1: f64, dt: f64) -> impl Iterator<Item = f64> {
    let count = if t1 > t0 {
        ((t1 - t0) / dt).floor() as usize
    } else {
        0
    };
    (0..=count)
        .map(move |k| t0 + k as f64 * dt)
        .chain((t1 > t0 + count as f64 * dt + 1e-12).then_some(t1))
}

/// [`Segment`] view into a trajectory: cell `c`'s history ending at `base`.
pub struct TrajectorySegment<'a> {
    traj: &'a Trajectory,
    c: usize,
    base: f64,
}

impl Segment for TrajectorySegment<'_> {
    fn window(&self) -> f64 {
        self.traj.tau
    }

    fn value_at(&self, s: f64) -> f64 {
        self.traj
            .value_flat(self.c, self.base + s)
            .expect("segment window must lie inside stored history")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_block(left: f64, right: f64, nsub: usize, cells: usize) -> Block {
        // x(t) = e^{−t} per cell: values and derivatives at the nodes.
        let dt = (right - left) / nsub as f64;
        let mut values = Vec::with_capacity((nsub + 1) * cells);
        let mut derivs = Vec::with_capacity((nsub + 1) * cells);
        for j in 0..=nsub {
            let t = left + j as f64 * dt;
            for _ in 0..cells {
                values.push((-t).exp());
                derivs.push(-(-t).exp());
            }
        }
        Block {
            left,
            right,
            dt,
            nsub,
            values,
            derivs,
        }
    }

    fn exp_trajectory() -> Trajectory {
        let mut traj = Trajectory::new(
            1,
            2,
            0.5,
            0.0,
            InitialHistory {
                primary: SegmentSource::Profile(Arc::new(|_c, s| (-s).exp())),
                anchor: None,
            },
        );
        traj.push_block(exp_block(0.0, 1.0, 20, 2));
        traj.push_block(exp_block(1.0, 2.5, 30, 2));
        traj
    }

    #[test]
    fn hermite_interpolation_is_fourth_order_accurate() {
        let traj = exp_trajectory();
        let mut worst = 0.0f64;
        for k in 0..=500 {
            let t = 2.5 * k as f64 / 500.0;
            let err = (traj.value_flat(0, t).unwrap() - (-t).exp()).abs();
            worst = worst.max(err);
        }
        // dt = 0.05 → Hermite error ~ dt⁴/384 ≈ 1.6e−8.
        assert!(worst < 1e-7, "worst interpolation error {worst}");
    }

    #[test]
    fn history_windows_and_errors() {
        let traj = exp_trajectory();
        // Inside the primary window: φ(s) = e^{−s} anchored at origin 0.
        assert!((traj.value_flat(0, -0.25).unwrap() - 0.25f64.exp()).abs() < 1e-12);
        // Before the window floor.
        assert!(matches!(
            traj.value_flat(0, -0.51 - 1e-6),
            Err(SicnnError::History(_))
        ));
        // Beyond the committed end.
        assert!(matches!(
            traj.value_flat(0, 2.6),
            Err(SicnnError::History(_))
        ));
        // Exactly at the committed end.
        assert!(traj.value_flat(0, 2.5).is_ok());
    }

    #[test]
    fn anchor_window_takes_precedence() {
        let mut traj = Trajectory::new(
            1,
            1,
            0.5,
            2.0,
            InitialHistory {
                primary: SegmentSource::Constant(vec![10.0]),
                anchor: Some((1.2, SegmentSource::Constant(vec![20.0]))),
            },
        );
        traj.push_block(exp_block(2.0, 3.0, 10, 1));
        // t = 1.0 is only in the anchor window [0.7, 1.2].
        assert_eq!(traj.value_flat(0, 1.0).unwrap(), 20.0);
        // t = 1.6 is only in the primary window [1.5, 2.0].
        assert_eq!(traj.value_flat(0, 1.6).unwrap(), 10.0);
        // The gap between the windows is a hard error.
        assert!(traj.value_flat(0, 1.3).is_err());
    }

    #[test]
    fn truncation_keeps_a_lookback_margin() {
        // keepback 0.6 → cutoff 0.9: block [0, 1] ends after the cutoff and
        // must survive so that lookups down to 0.9 stay valid.
        let wide = exp_trajectory().truncated(1.5, 0.6);
        assert_eq!(wide.start(), 1.5);
        assert_eq!(wide.end(), 2.5);
        assert!(wide.value_flat(0, 0.9).is_ok());

        // keepback 0.3 → cutoff 1.2: block [0, 1] ends before the cutoff and
        // is dropped along with the initial history behind it.
        let tight = exp_trajectory().truncated(1.5, 0.3);
        assert_eq!(tight.start(), 1.5);
        assert_eq!(tight.end(), 2.5);
        assert!(tight.value_flat(0, 1.2).is_ok());
        assert!(tight.value_flat(0, 0.5).is_err());
    }

    #[test]
    fn csv_shape_and_determinism() {
        let traj = exp_trajectory();
        let mut a = Vec::new();
        let mut b = Vec::new();
        traj.write_csv(&mut a, 0.5).unwrap();
        traj.write_csv(&mut b, 0.5).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,x11,x12");
        // 0, 0.5, 1, 1.5, 2, 2.5 → six rows.
        assert_eq!(lines.len(), 7);
        assert!(lines[1].starts_with("0,1,1"));
    }

    #[test]
    fn sample_grid_includes_ragged_endpoint() {
        let g: Vec<f64> = sample_grid(0.0, 1.05, 0.5).collect();
        assert_eq!(g, vec![0.0, 0.5, 1.0, 1.05]);
        let g2: Vec<f64> = sample_grid(0.0, 1.0, 0.5).collect();
        assert_eq!(g2, vec![0.0, 0.5, 1.0]);
    }
}
