//! Piecewise constant argument schedules.
//!
//! A schedule is a strictly increasing sequence of *breakpoints* `θ_p`
//! together with *anchors* `ζ_p` satisfying `θ_p ≤ ζ_p ≤ θ_{p+1}`. The
//! induced step function sends every `t ∈ [θ_p, θ_{p+1})` to the constant
//! argument value `ζ_p`. Inside one interval the argument is *advanced*
//! (ahead of `t`) while `t < ζ_p` and *delayed* (behind `t`) once `t > ζ_p`,
//! which is what makes equations driven by it both retarded and advanced in
//! alternation.
//!
//! Schedules are defined by total closed-form rules (or an explicit table)
//! over a declared finite index range; queries outside that range are hard
//! errors rather than silent extrapolation.

use std::sync::atomic::{AtomicI64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Result, SicnnError};

/// User-declared spacing bounds for a schedule: an upper bound on breakpoint
/// gaps and lower bounds on breakpoint and anchor gaps. The certification
/// layer checks these declarations against empirical scans.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeclaredSpacing {
    /// Declared upper bound on `θ_{p+1} − θ_p`.
    pub gap_upper: f64,
    /// Declared lower bound on `θ_{p+1} − θ_p`.
    pub gap_lower: f64,
    /// Declared lower bound on `ζ_{p+1} − ζ_p` (needed only by the
    /// almost-periodic analysis).
    pub anchor_gap_lower: f64,
}

/// Closed-form or tabulated rule generating the breakpoint/anchor sequences.
#[derive(Debug, Clone)]
pub enum ScheduleRule {
    /// The bundled demonstration schedule: unit-mesh breakpoints with a
    /// bounded quasi-periodic perturbation, anchors coinciding with
    /// breakpoints. `θ_p = p + (1/4)|sin p − cos(p√2)|`, `ζ_p = θ_p`.
    Example6,
    /// Evenly spaced breakpoints `θ_p = gap·p + offset` with anchors shifted
    /// by a constant `ζ_p = θ_p + anchor_shift`, `0 ≤ anchor_shift ≤ gap`.
    Affine {
        gap: f64,
        offset: f64,
        anchor_shift: f64,
    },
    /// Explicit tables. `theta` covers indices `p_min ..= p_max + 1` and
    /// `zeta` covers `p_min ..= p_max`.
    Table { theta: Vec<f64>, zeta: Vec<f64> },
}

/// Which of the two sequences an almost-period scan inspects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SequenceTarget {
    /// Scan the breakpoint sequence `θ`.
    Breakpoints,
    /// Scan the anchor sequence `ζ`.
    Anchors,
}

/// Empirical spacing extrema over a scanned index range, plus consistency
/// flags against the declared bounds.
#[derive(Debug, Clone, Serialize)]
pub struct SpacingReport {
    /// Largest observed `θ_{p+1} − θ_p`.
    pub max_gap: f64,
    /// Smallest observed `θ_{p+1} − θ_p`.
    pub min_gap: f64,
    /// Smallest observed `ζ_{p+1} − ζ_p`.
    pub min_anchor_gap: f64,
    /// Scanned interval-index range (inclusive).
    pub p_range: (i64, i64),
    /// Declared bounds the scan was checked against.
    pub declared: DeclaredSpacing,
    /// `max_gap ≤ declared.gap_upper`.
    pub gap_upper_consistent: bool,
    /// `min_gap ≥ declared.gap_lower`.
    pub gap_lower_consistent: bool,
    /// `min_anchor_gap ≥ declared.anchor_gap_lower`.
    pub anchor_gap_lower_consistent: bool,
}

/// Result of an integer almost-period scan over a difference sequence.
///
/// An integer `k` is accepted when the `q`-th difference sequence shifted by
/// `k` stays uniformly within `eps` of the unshifted one, simultaneously for
/// every `q` in the scanned set and every `p` in the window. The reported
/// gap is an empirical relative-density proxy measured endpoint-inclusive
/// over the candidate window (`None` when nothing was accepted).
#[derive(Debug, Clone, Serialize)]
pub struct AlmostPeriodReport {
    pub eps: f64,
    pub p_window: (i64, i64),
    pub q_set: Vec<i64>,
    pub target: SequenceTarget,
    pub accepted: Vec<i64>,
    pub max_gap: Option<i64>,
}

/// A piecewise constant argument schedule over a declared index range.
///
/// Interval indices `p ∈ [p_min, p_max]` are valid; breakpoints are defined
/// for `p ∈ [p_min, p_max + 1]`, so the covered time range is
/// `[θ_{p_min}, θ_{p_max+1})`. Immutable after construction and safe to
/// share across threads; the interval-lookup hint is advisory only.
#[derive(Debug)]
pub struct ArgumentSchedule {
    rule: ScheduleRule,
    p_min: i64,
    p_max: i64,
    declared: DeclaredSpacing,
    hint: AtomicI64,
}

impl Clone for ArgumentSchedule {
    fn clone(&self) -> Self {
        ArgumentSchedule {
            rule: self.rule.clone(),
            p_min: self.p_min,
            p_max: self.p_max,
            declared: self.declared,
            hint: AtomicI64::new(self.hint.load(Ordering::Relaxed)),
        }
    }
}

impl ArgumentSchedule {
    /// Build and fully validate a schedule: strict breakpoint monotonicity
    /// and the interleaving `θ_p ≤ ζ_p ≤ θ_{p+1}` are checked over the whole
    /// declared range.
    pub fn new(
        rule: ScheduleRule,
        p_min: i64,
        p_max: i64,
        declared: DeclaredSpacing,
    ) -> Result<Self> {
        if p_min >= p_max {
            return Err(SicnnError::InvalidSpec(format!(
                "schedule index range [{p_min}, {p_max}] must contain at least two indices"
            )));
        }
        if !(declared.gap_upper > 0.0 && declared.gap_lower > 0.0) {
            return Err(SicnnError::InvalidSpec(
                "declared gap bounds must be positive".into(),
            ));
        }
        if declared.gap_lower > declared.gap_upper {
            return Err(SicnnError::InvalidSpec(
                "declared lower gap bound exceeds the declared upper bound".into(),
            ));
        }
        if let ScheduleRule::Affine {
            gap, anchor_shift, ..
        } = &rule
        {
            if !(*gap > 0.0) {
                return Err(SicnnError::InvalidSpec(
                    "affine schedule gap must be positive".into(),
                ));
            }
            if !(0.0..=*gap).contains(anchor_shift) {
                return Err(SicnnError::InvalidSpec(
                    "affine anchor shift must lie in [0, gap]".into(),
                ));
            }
        }
        if let ScheduleRule::Table { theta, zeta } = &rule {
            let count = (p_max - p_min + 1) as usize;
            if theta.len() != count + 1 || zeta.len() != count {
                return Err(SicnnError::InvalidSpec(format!(
                    "table schedule over [{p_min}, {p_max}] needs {} breakpoints and {} anchors, \
                     got {} and {}",
                    count + 1,
                    count,
                    theta.len(),
                    zeta.len()
                )));
            }
        }
        let schedule = ArgumentSchedule {
            rule,
            p_min,
            p_max,
            declared,
            hint: AtomicI64::new(p_min),
        };
        let mut prev = schedule.breakpoint(p_min)?;
        for p in p_min..=p_max {
            let next = schedule.breakpoint(p + 1)?;
            if !(prev < next) {
                return Err(SicnnError::InvalidSpec(format!(
                    "breakpoints not strictly increasing at p = {p}: θ_p = {prev}, θ_(p+1) = {next}"
                )));
            }
            let anchor = schedule.anchor(p)?;
            if !(prev <= anchor && anchor <= next) {
                return Err(SicnnError::InvalidSpec(format!(
                    "anchor ζ_p = {anchor} outside [θ_p, θ_(p+1)] = [{prev}, {next}] at p = {p}"
                )));
            }
            prev = next;
        }
        Ok(schedule)
    }

    /// Declared interval-index range (inclusive).
    pub fn index_range(&self) -> (i64, i64) {
        (self.p_min, self.p_max)
    }

    /// Declared spacing bounds.
    pub fn declared_spacing(&self) -> DeclaredSpacing {
        self.declared
    }

    /// Covered time range `[θ_{p_min}, θ_{p_max+1})`.
    pub fn time_range(&self) -> (f64, f64) {
        // Both evaluations are in range by construction.
        (
            self.eval_breakpoint(self.p_min),
            self.eval_breakpoint(self.p_max + 1),
        )
    }

    fn eval_breakpoint(&self, p: i64) -> f64 {
        match &self.rule {
            ScheduleRule::Example6 => {
                let pf = p as f64;
                pf + 0.25 * (pf.sin() - (pf * std::f64::consts::SQRT_2).cos()).abs()
            }
            ScheduleRule::Affine { gap, offset, .. } => gap * p as f64 + offset,
            ScheduleRule::Table { theta, .. } => theta[(p - self.p_min) as usize],
        }
    }

    fn eval_anchor(&self, p: i64) -> f64 {
        match &self.rule {
            ScheduleRule::Example6 => self.eval_breakpoint(p),
            ScheduleRule::Affine { anchor_shift, .. } => self.eval_breakpoint(p) + anchor_shift,
            ScheduleRule::Table { zeta, .. } => zeta[(p - self.p_min) as usize],
        }
    }

    /// Breakpoint `θ_p`, defined for `p ∈ [p_min, p_max + 1]`.
    pub fn breakpoint(&self, p: i64) -> Result<f64> {
        if p < self.p_min || p > self.p_max + 1 {
            return Err(SicnnError::ScheduleRange(format!(
                "breakpoint index {p} outside declared range [{}, {}]",
                self.p_min,
                self.p_max + 1
            )));
        }
        Ok(self.eval_breakpoint(p))
    }

    /// Anchor `ζ_p`, defined for `p ∈ [p_min, p_max]`.
    pub fn anchor(&self, p: i64) -> Result<f64> {
        if p < self.p_min || p > self.p_max {
            return Err(SicnnError::ScheduleRange(format!(
                "anchor index {p} outside declared range [{}, {}]",
                self.p_min, self.p_max
            )));
        }
        Ok(self.eval_anchor(p))
    }

    /// The unique interval index `p` with `θ_p ≤ t < θ_{p+1}`.
    ///
    /// Binary search seeded by the last successful lookup, so time-ordered
    /// query streams resolve in O(1) amortized.
    pub fn interval_index(&self, t: f64) -> Result<i64> {
        let (lo_t, hi_t) = self.time_range();
        if !(t >= lo_t && t < hi_t) {
            return Err(SicnnError::ScheduleRange(format!(
                "time {t} outside covered range [{lo_t}, {hi_t})"
            )));
        }
        // Fast path: the hinted interval or its right neighbor.
        let h = self
            .hint
            .load(Ordering::Relaxed)
            .clamp(self.p_min, self.p_max);
        if self.eval_breakpoint(h) <= t {
            if t < self.eval_breakpoint(h + 1) {
                return Ok(h);
            }
            if h < self.p_max && self.eval_breakpoint(h + 1) <= t && t < self.eval_breakpoint(h + 2)
            {
                self.hint.store(h + 1, Ordering::Relaxed);
                return Ok(h + 1);
            }
        }
        // Invariant: θ_lo ≤ t < θ_{hi+1}.
        let mut lo = self.p_min;
        let mut hi = self.p_max;
        while lo < hi {
            let mid = lo + (hi - lo + 1) / 2;
            if self.eval_breakpoint(mid) <= t {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        self.hint.store(lo, Ordering::Relaxed);
        Ok(lo)
    }

    /// The piecewise constant argument: `ζ_p` for the interval containing
    /// `t`. Advanced (`> t`) early in each interval, delayed (`< t`) late.
    pub fn argument(&self, t: f64) -> Result<f64> {
        Ok(self.eval_anchor(self.interval_index(t)?))
    }

    /// Empirical spacing extrema over interval indices `p ∈ [p_lo, p_hi]`:
    /// breakpoint gaps `θ_{p+1} − θ_p` for every `p` in the range and anchor
    /// gaps `ζ_{p+1} − ζ_p` for `p < p_hi`, checked against the declared
    /// bounds.
    pub fn spacing_report(&self, p_lo: i64, p_hi: i64) -> Result<SpacingReport> {
        if p_lo >= p_hi {
            return Err(SicnnError::InvalidSpec(format!(
                "spacing scan needs p_lo < p_hi, got [{p_lo}, {p_hi}]"
            )));
        }
        let mut max_gap = f64::NEG_INFINITY;
        let mut min_gap = f64::INFINITY;
        let mut min_anchor_gap = f64::INFINITY;
        let mut prev_theta = self.breakpoint(p_lo)?;
        let mut prev_anchor = self.anchor(p_lo)?;
        for p in p_lo..=p_hi {
            let next_theta = self.breakpoint(p + 1)?;
            let gap = next_theta - prev_theta;
            max_gap = max_gap.max(gap);
            min_gap = min_gap.min(gap);
            prev_theta = next_theta;
            if p < p_hi {
                let next_anchor = self.anchor(p + 1)?;
                min_anchor_gap = min_anchor_gap.min(next_anchor - prev_anchor);
                prev_anchor = next_anchor;
            }
        }
        let declared = self.declared;
        Ok(SpacingReport {
            max_gap,
            min_gap,
            min_anchor_gap,
            p_range: (p_lo, p_hi),
            declared,
            gap_upper_consistent: max_gap <= declared.gap_upper,
            gap_lower_consistent: min_gap >= declared.gap_lower,
            anchor_gap_lower_consistent: min_anchor_gap >= declared.anchor_gap_lower,
        })
    }

    /// Scan the window for integer almost-periods of the chosen difference
    /// sequence.
    ///
    /// `k` is accepted when `|s_{p+k+q} − s_{p+k} − (s_{p+q} − s_p)| < eps`
    /// for all `p` in the window and all `q` in `q_set`, where `s` is the
    /// breakpoint or anchor sequence. This is a finite empirical proxy for
    /// equipotential almost periodicity, never a formal certificate. All
    /// touched indices `p + k + q` must lie inside the schedule's declared
    /// range.
    pub fn almost_period_scan(
        &self,
        eps: f64,
        p_window: (i64, i64),
        q_set: &[i64],
        target: SequenceTarget,
    ) -> Result<AlmostPeriodReport> {
        if !(eps > 0.0) {
            return Err(SicnnError::InvalidSpec("scan eps must be positive".into()));
        }
        let (w_lo, w_hi) = p_window;
        if w_lo > w_hi {
            return Err(SicnnError::InvalidSpec(format!(
                "scan window [{w_lo}, {w_hi}] is empty"
            )));
        }
        let q_min = q_set.iter().copied().min().unwrap_or(0).min(0);
        let q_max = q_set.iter().copied().max().unwrap_or(0).max(0);
        // Every index p + k + q with p, k in the window and q in the set.
        let idx_lo = w_lo.min(2 * w_lo) + q_min;
        let idx_hi = w_hi.max(2 * w_hi) + q_max;
        let seq: Vec<f64> = (idx_lo..=idx_hi)
            .map(|p| match target {
                SequenceTarget::Breakpoints => self.breakpoint(p),
                SequenceTarget::Anchors => self.anchor(p),
            })
            .collect::<Result<_>>()?;
        let at = |p: i64| seq[(p - idx_lo) as usize];

        let mut accepted = Vec::new();
        'candidates: for k in w_lo..=w_hi {
            for &q in q_set {
                for p in w_lo..=w_hi {
                    let base = at(p + q) - at(p);
                    let shifted = at(p + k + q) - at(p + k);
                    if !((shifted - base).abs() < eps) {
                        continue 'candidates;
                    }
                }
            }
            accepted.push(k);
        }

        // Endpoint-inclusive gap over the candidate window; None when empty.
        let max_gap = if accepted.is_empty() {
            None
        } else {
            let mut gap = accepted[0] - w_lo;
            for pair in accepted.windows(2) {
                gap = gap.max(pair[1] - pair[0]);
            }
            gap = gap.max(w_hi - accepted[accepted.len() - 1]);
            Some(gap)
        };

        Ok(AlmostPeriodReport {
            eps,
            p_window,
            q_set: q_set.to_vec(),
            target,
            accepted,
            max_gap,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_declared() -> DeclaredSpacing {
        DeclaredSpacing {
            gap_upper: 2.5,
            gap_lower: 0.25,
            anchor_gap_lower: 0.25,
        }
    }

    /// θ_p = 2p − 1, ζ_p = 2p: the classic alternating advanced/delayed
    /// schedule.
    fn two_step() -> ArgumentSchedule {
        ArgumentSchedule::new(
            ScheduleRule::Affine {
                gap: 2.0,
                offset: -1.0,
                anchor_shift: 1.0,
            },
            -100,
            100,
            DeclaredSpacing {
                gap_upper: 2.0,
                gap_lower: 2.0,
                anchor_gap_lower: 2.0,
            },
        )
        .unwrap()
    }

    fn example6(p_min: i64, p_max: i64) -> ArgumentSchedule {
        ArgumentSchedule::new(
            ScheduleRule::Example6,
            p_min,
            p_max,
            DeclaredSpacing {
                gap_upper: 1.5,
                gap_lower: 0.5,
                anchor_gap_lower: 0.5,
            },
        )
        .unwrap()
    }

    #[test]
    fn two_step_interval_index_and_argument() {
        let s = two_step();
        // t = 0 sits in interval 0 = [θ_0, θ_1) = [−1, 1).
        assert_eq!(s.interval_index(0.0).unwrap(), 0);
        // Delayed late in the interval, advanced early.
        assert_eq!(s.argument(0.5).unwrap(), 0.0);
        assert_eq!(s.argument(-0.5).unwrap(), 0.0);
        assert!(s.argument(0.5).unwrap() < 0.5);
        assert!(s.argument(-0.5).unwrap() > -0.5);
    }

    #[test]
    fn left_endpoint_belongs_to_its_own_interval() {
        let s = two_step();
        let theta3 = s.breakpoint(3).unwrap();
        assert_eq!(s.interval_index(theta3).unwrap(), 3);
        // Just below the breakpoint still belongs to the previous interval.
        assert_eq!(s.interval_index(theta3 - 1e-12).unwrap(), 2);
    }

    #[test]
    fn bundled_schedule_first_breakpoints() {
        let s = example6(-10, 10);
        // θ_0 = 0 + (1/4)|sin 0 − cos 0| = 1/4 exactly.
        assert_eq!(s.breakpoint(0).unwrap(), 0.25);
        let theta1 = s.breakpoint(1).unwrap();
        assert!((theta1 - 1.171_381_822_510_630_5).abs() < 1e-14);
        // t = 0.5 falls in interval 0.
        assert_eq!(s.interval_index(0.5).unwrap(), 0);
        // Anchors coincide with breakpoints, so the argument is θ_0.
        assert_eq!(s.argument(0.5).unwrap(), 0.25);
    }

    #[test]
    // The expected values are recorded verbatim from an independent scan at
    // full printed precision, one digit beyond shortest-roundtrip.
    #[allow(clippy::excessive_precision)]
    fn bundled_schedule_gap_bounds_hold_analytically() {
        // The perturbation term lies in [0, 1/2], so gaps lie in [1/2, 3/2].
        let s = example6(-1000, 1000);
        let report = s.spacing_report(-1000, 1000).unwrap();
        assert!(report.min_gap >= 0.5);
        assert!(report.max_gap <= 1.5);
        assert!(report.gap_upper_consistent);
        assert!(report.gap_lower_consistent);
        assert!(report.anchor_gap_lower_consistent);
        // Frozen values from an independent scan of the same range.
        assert!((report.max_gap - 1.465_882_089_821_320_7).abs() < 1e-12);
        assert!((report.min_gap - 0.536_921_900_383_958_93).abs() < 1e-12);
    }

    #[test]
    fn out_of_range_queries_fail() {
        let s = example6(-5, 5);
        assert!(matches!(
            s.interval_index(100.0),
            Err(SicnnError::ScheduleRange(_))
        ));
        assert!(matches!(s.breakpoint(7), Err(SicnnError::ScheduleRange(_))));
        assert!(matches!(s.anchor(6), Err(SicnnError::ScheduleRange(_))));
        // θ_{p_max+1} is the exclusive end of the covered range.
        let end = s.breakpoint(6).unwrap();
        assert!(s.interval_index(end).is_err());
        assert!(s.interval_index(end - 1e-9).is_ok());
    }

    #[test]
    fn table_schedule_round_trip() {
        let s = ArgumentSchedule::new(
            ScheduleRule::Table {
                theta: vec![0.0, 1.0, 2.5, 3.0],
                zeta: vec![0.5, 1.5, 2.75],
            },
            0,
            2,
            DeclaredSpacing {
                gap_upper: 1.5,
                gap_lower: 0.5,
                anchor_gap_lower: 0.5,
            },
        )
        .unwrap();
        assert_eq!(s.interval_index(1.2).unwrap(), 1);
        assert_eq!(s.argument(1.2).unwrap(), 1.5);
        let report = s.spacing_report(0, 2).unwrap();
        assert_eq!(report.max_gap, 1.5);
        assert_eq!(report.min_gap, 0.5);
        assert_eq!(report.min_anchor_gap, 1.0);
    }

    #[test]
    fn invalid_interleaving_rejected() {
        let err = ArgumentSchedule::new(
            ScheduleRule::Table {
                theta: vec![0.0, 1.0, 2.0],
                zeta: vec![1.5, 1.9], // ζ_0 > θ_1
            },
            0,
            1,
            unit_declared(),
        )
        .unwrap_err();
        assert!(matches!(err, SicnnError::InvalidSpec(_)));
    }

    #[test]
    fn periodic_sequence_accepts_every_shift() {
        // θ_p = p is 1-periodic in differences: every k is an almost-period.
        let s = ArgumentSchedule::new(
            ScheduleRule::Affine {
                gap: 1.0,
                offset: 0.0,
                anchor_shift: 0.0,
            },
            -60,
            60,
            DeclaredSpacing {
                gap_upper: 1.0,
                gap_lower: 1.0,
                anchor_gap_lower: 1.0,
            },
        )
        .unwrap();
        let report = s
            .almost_period_scan(
                1e-9,
                (-20, 20),
                &[-2, -1, 0, 1, 2],
                SequenceTarget::Breakpoints,
            )
            .unwrap();
        assert_eq!(report.accepted.len(), 41);
        assert_eq!(report.max_gap, Some(1));
    }

    #[test]
    fn five_periodic_perturbation_accepts_multiples_of_five() {
        // θ_p = p + (1/4)sin(2πp/5): differences are 5-periodic, so exactly
        // the multiples of 5 pass at tiny eps.
        let count = 121usize;
        let p_min = -60i64;
        let theta: Vec<f64> = (0..=count)
            .map(|k| {
                let p = (p_min + k as i64) as f64;
                p + 0.25 * (2.0 * std::f64::consts::PI * p / 5.0).sin()
            })
            .collect();
        let zeta = theta[..count].to_vec();
        let s = ArgumentSchedule::new(
            ScheduleRule::Table { theta, zeta },
            p_min,
            p_min + count as i64 - 1,
            unit_declared(),
        )
        .unwrap();
        let report = s
            .almost_period_scan(
                1e-9,
                (-15, 15),
                &[-3, -2, -1, 0, 1, 2, 3],
                SequenceTarget::Breakpoints,
            )
            .unwrap();
        assert_eq!(report.accepted, vec![-15, -10, -5, 0, 5, 10, 15]);
        assert_eq!(report.max_gap, Some(5));
    }

    #[test]
    fn scan_propagates_range_errors() {
        let s = example6(-5, 5);
        // Window touches indices beyond the declared range.
        assert!(s
            .almost_period_scan(0.1, (-5, 5), &[-1, 0, 1], SequenceTarget::Breakpoints)
            .is_err());
    }

    #[test]
    fn hint_survives_unordered_queries() {
        let s = example6(-50, 50);
        let ts = [0.3, 40.0, -30.0, 0.9, 12.5, 12.9, 13.4, -49.0];
        for &t in &ts {
            let p = s.interval_index(t).unwrap();
            assert!(s.breakpoint(p).unwrap() <= t);
            assert!(t < s.breakpoint(p + 1).unwrap());
        }
    }
}
