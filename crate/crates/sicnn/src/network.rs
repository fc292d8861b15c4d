//! The cell grid: decay rates, neighborhood couplings, external inputs, and
//! the certification of the contraction/spacing conditions.
//!
//! Each cell `(i, j)` obeys
//!
//! ```text
//! x'_ij(t) = −a_ij x_ij(t)
//!            − Σ_{(k,l) ∈ N_r(i,j)} C_kl · f(x_kl segments) · x_ij(t)
//!            + L_ij(t)
//! ```
//!
//! where `N_r(i,j)` is the Chebyshev-radius-`r` neighborhood clipped to the
//! grid, `f` is the activation functional evaluated on the history segments
//! of the neighbor at the current time and at the piecewise constant
//! argument, and `L_ij` is a quasi-periodic external input.

use serde::Serialize;

use crate::activation::ActivationSpec;
use crate::error::{Result, SicnnError};
use crate::grid::Grid;
use crate::schedule::{ArgumentSchedule, SpacingReport};

/// Waveform of one input term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Waveform {
    Sine,
    Cosine,
}

/// One trigonometric term `amplitude · wave(angular_frequency · t + phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct InputTerm {
    pub amplitude: f64,
    pub angular_frequency: f64,
    #[serde(default)]
    pub phase: f64,
    pub kind: Waveform,
}

impl InputTerm {
    fn eval(&self, t: f64) -> f64 {
        let arg = self.angular_frequency * t + self.phase;
        match self.kind {
            Waveform::Sine => self.amplitude * arg.sin(),
            Waveform::Cosine => self.amplitude * arg.cos(),
        }
    }
}

/// A finite trigonometric sum with a certified amplitude bound.
///
/// Restricting inputs to trigonometric sums keeps them quasi-periodic by
/// construction (which the almost-periodic analysis needs) and makes the
/// declared bound certifiable by the triangle inequality.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputSignal {
    terms: Vec<InputTerm>,
    bound: f64,
}

impl InputSignal {
    /// Input with the conservative bound `Σ |amplitude|`.
    pub fn from_terms(terms: Vec<InputTerm>) -> Self {
        let bound = terms.iter().map(|t| t.amplitude.abs()).sum();
        InputSignal { terms, bound }
    }

    /// Input with an explicit declared bound, which must dominate the
    /// triangle-inequality sum (otherwise it could not be certified).
    pub fn with_bound(terms: Vec<InputTerm>, bound: f64) -> Result<Self> {
        let triangle: f64 = terms.iter().map(|t| t.amplitude.abs()).sum();
        if bound < triangle {
            return Err(SicnnError::InvalidSpec(format!(
                "declared input bound {bound} is below the amplitude sum {triangle}"
            )));
        }
        Ok(InputSignal { terms, bound })
    }

    /// The identically-zero input.
    pub fn zero() -> Self {
        InputSignal {
            terms: Vec::new(),
            bound: 0.0,
        }
    }

    /// Evaluate the signal at time `t`.
    pub fn eval(&self, t: f64) -> f64 {
        self.terms.iter().map(|term| term.eval(t)).sum()
    }

    /// Certified amplitude bound.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// The underlying terms.
    pub fn terms(&self) -> &[InputTerm] {
        &self.terms
    }
}

/// Scale-free constants derived from the network, the schedule's declared
/// spacing, and the activation bound. Maxima/minima run over all cells.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DerivedConstants {
    /// Smallest decay rate (the exponential rate scale of the whole theory).
    pub min_decay: f64,
    /// Largest neighborhood coupling sum `max Σ C`.
    pub max_neighborhood_coupling: f64,
    /// `max (Σ C) / a` — coupling relative to decay.
    pub max_coupling_over_decay: f64,
    /// `max (Σ C) / (2a − min_decay)` — coupling relative to the decay
    /// excess that drives the stability estimate.
    pub max_coupling_over_excess_decay: f64,
    /// Largest certified input bound.
    pub max_input_bound: f64,
    /// `max input_bound / a` — input relative to decay.
    pub max_input_over_decay: f64,
    /// Sup-norm bound for the bounded solution,
    /// `max_input_over_decay / (1 − M · max_coupling_over_decay)`;
    /// undefined when the load `M · max_coupling_over_decay` reaches 1.
    pub solution_bound: Option<f64>,
    /// Declared upper bound on breakpoint gaps.
    pub gap_upper: f64,
    /// Declared lower bound on breakpoint gaps.
    pub gap_lower: f64,
    /// Declared lower bound on anchor gaps.
    pub anchor_gap_lower: f64,
}

/// One certified inequality: `pass ⇔ lhs < threshold` (strict). `lhs` and
/// `margin` are absent when a prerequisite failure leaves the quantity
/// undefined.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionEntry {
    pub name: &'static str,
    pub lhs: Option<f64>,
    pub threshold: f64,
    /// `threshold − lhs`; positive iff the condition passes.
    pub margin: Option<f64>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl ConditionEntry {
    fn defined(name: &'static str, lhs: f64, threshold: f64, note: Option<String>) -> Self {
        ConditionEntry {
            name,
            lhs: Some(lhs),
            threshold,
            margin: Some(threshold - lhs),
            pass: lhs < threshold,
            note,
        }
    }

    fn undefined(name: &'static str, threshold: f64, note: String) -> Self {
        ConditionEntry {
            name,
            lhs: None,
            threshold,
            margin: None,
            pass: false,
            note: Some(note),
        }
    }
}

/// Full certification report: derived constants, the empirical spacing scan,
/// and every condition with its margin.
///
/// Entry names:
/// * `interval_load` — prerequisite `μ·θ̄·M < 1` (μ = max neighborhood
///   coupling, θ̄ = declared gap upper bound, M = activation bound).
/// * `response_load` — prerequisite `M·c̄ < 1` (c̄ = max coupling/decay).
/// * `breakpoint_gap_upper` — empirical max breakpoint gap < declared θ̄.
/// * `interval_contraction` — the per-interval fixed-point map is a
///   contraction: `μθ̄[M + 2L(H + θ̄L̄)/(1 − μθ̄M)] < 1`.
/// * `response_contraction` — the whole-line response map is a contraction:
///   `(M + 2LH)·c̄ < 1`.
/// * `stability_contraction` — the perturbation estimate closes:
///   `2d̄[M + L·H·e^{γ₀τ/2}(1 + e^{γ₀θ̄/2})] < 1`.
/// * `breakpoint_gap_lower` / `anchor_gap_lower` — declared lower bounds are
///   strictly below the empirical minima (needed only by the almost-periodic
///   analysis).
#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    pub constants: DerivedConstants,
    /// Declared activation bound M.
    pub activation_bound: f64,
    /// Declared activation Lipschitz constant L.
    pub activation_lipschitz: f64,
    /// Per-interval iterate bound `(H + θ̄L̄)/(1 − μθ̄M)` fed into the
    /// interval contraction estimate; absent if a prerequisite fails.
    pub interval_iterate_bound: Option<f64>,
    /// `1 − stability_contraction lhs`; the perturbation-envelope amplitude
    /// for initial size δ is `δ / envelope_denominator`. Absent if undefined
    /// or non-positive.
    pub envelope_denominator: Option<f64>,
    /// Empirical spacing scan over the schedule's full declared range.
    pub spacing: SpacingReport,
    pub entries: Vec<ConditionEntry>,
    pub all_pass: bool,
}

impl ConditionReport {
    /// Look up an entry by name.
    pub fn entry(&self, name: &str) -> Option<&ConditionEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    fn entry_passes(&self, name: &str) -> bool {
        self.entry(name).map(|e| e.pass).unwrap_or(false)
    }

    /// Both prerequisites and the three contraction conditions hold — the
    /// hypotheses for existence, uniqueness, boundedness, and exponential
    /// stability of the bounded solution.
    pub fn contraction_certified(&self) -> bool {
        [
            "interval_load",
            "response_load",
            "interval_contraction",
            "response_contraction",
            "stability_contraction",
        ]
        .iter()
        .all(|n| self.entry_passes(n))
    }

    /// Everything needed for the almost-periodic analysis: the contraction
    /// conditions plus all spacing conditions.
    pub fn almost_periodic_certified(&self) -> bool {
        self.contraction_certified()
            && self.entry_passes("breakpoint_gap_upper")
            && self.entry_passes("breakpoint_gap_lower")
            && self.entry_passes("anchor_gap_lower")
    }
}

/// The network: grid dimensions, neighborhood radius, decay rates, per-cell
/// coupling weights, external inputs, and the retardation window length.
///
/// The coupling weight attached to neighbor `(k, l)` is the same for every
/// cell it inhibits (`C_ij^kl = C[k, l]`), matching the standard cellular
/// network layout. Immutable after construction; all operations are pure.
#[derive(Debug, Clone, Serialize)]
pub struct NetworkSpec {
    m: usize,
    n: usize,
    r: usize,
    decay: Grid,
    coupling: Grid,
    inputs: Vec<InputSignal>,
    tau: f64,
}

impl NetworkSpec {
    pub fn new(
        r: usize,
        decay: Grid,
        coupling: Grid,
        inputs: Vec<InputSignal>,
        tau: f64,
    ) -> Result<Self> {
        let (m, n) = (decay.rows(), decay.cols());
        if coupling.rows() != m || coupling.cols() != n {
            return Err(SicnnError::InvalidSpec(format!(
                "coupling grid is {}×{}, decay grid is {m}×{n}",
                coupling.rows(),
                coupling.cols()
            )));
        }
        if inputs.len() != m * n {
            return Err(SicnnError::InvalidSpec(format!(
                "need {} input signals for a {m}×{n} grid, got {}",
                m * n,
                inputs.len()
            )));
        }
        for (i, j, a) in decay.iter_cells() {
            if !(a > 0.0) {
                return Err(SicnnError::InvalidSpec(format!(
                    "decay rate at ({i}, {j}) must be positive, got {a}"
                )));
            }
        }
        for (i, j, c) in coupling.iter_cells() {
            if !(c >= 0.0) {
                return Err(SicnnError::InvalidSpec(format!(
                    "coupling at ({i}, {j}) must be non-negative, got {c}"
                )));
            }
        }
        if !(tau >= 0.0) {
            return Err(SicnnError::InvalidSpec(format!(
                "retardation window must be non-negative, got {tau}"
            )));
        }
        Ok(NetworkSpec {
            m,
            n,
            r,
            decay,
            coupling,
            inputs,
            tau,
        })
    }

    pub fn rows(&self) -> usize {
        self.m
    }

    pub fn cols(&self) -> usize {
        self.n
    }

    /// Number of cells.
    pub fn cell_count(&self) -> usize {
        self.m * self.n
    }

    pub fn radius(&self) -> usize {
        self.r
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Decay rate `a_ij`.
    pub fn decay(&self, i: usize, j: usize) -> f64 {
        self.decay.get(i, j)
    }

    /// Coupling weight attributed to neighbor cell `(k, l)`.
    pub fn coupling(&self, k: usize, l: usize) -> f64 {
        self.coupling.get(k, l)
    }

    /// External input of cell `(i, j)`.
    pub fn input(&self, i: usize, j: usize) -> &InputSignal {
        &self.inputs[(i - 1) * self.n + (j - 1)]
    }

    /// Cells within Chebyshev distance `r` of `(i, j)`, clipped to the grid,
    /// in row-major order.
    pub fn neighborhood(&self, i: usize, j: usize) -> Result<Vec<(usize, usize)>> {
        if i < 1 || i > self.m || j < 1 || j > self.n {
            return Err(SicnnError::InvalidSpec(format!(
                "cell ({i}, {j}) outside the {}×{} grid",
                self.m, self.n
            )));
        }
        let k_lo = i.saturating_sub(self.r).max(1);
        let k_hi = (i + self.r).min(self.m);
        let l_lo = j.saturating_sub(self.r).max(1);
        let l_hi = (j + self.r).min(self.n);
        let mut cells = Vec::with_capacity((k_hi - k_lo + 1) * (l_hi - l_lo + 1));
        for k in k_lo..=k_hi {
            for l in l_lo..=l_hi {
                cells.push((k, l));
            }
        }
        Ok(cells)
    }

    /// Sum of the coupling weights over the neighborhood of `(i, j)`
    /// (row-major summation order, so the value is bit-reproducible).
    pub fn neighborhood_coupling_sum(&self, i: usize, j: usize) -> Result<f64> {
        Ok(self
            .neighborhood(i, j)?
            .into_iter()
            .map(|(k, l)| self.coupling.get(k, l))
            .sum())
    }

    /// All scale constants the certification formulas need. `activation_bound`
    /// is the declared uniform bound M of the activation functional.
    pub fn derived_constants(
        &self,
        schedule: &ArgumentSchedule,
        activation_bound: f64,
    ) -> DerivedConstants {
        let min_decay = self.decay.min();
        let mut max_sum = 0.0f64;
        let mut max_sum_over_decay = 0.0f64;
        let mut max_sum_over_excess = 0.0f64;
        let mut max_input = 0.0f64;
        let mut max_input_over_decay = 0.0f64;
        for i in 1..=self.m {
            for j in 1..=self.n {
                // In-range by construction.
                let sum = self.neighborhood_coupling_sum(i, j).expect("valid cell");
                let a = self.decay.get(i, j);
                let bound = self.input(i, j).bound();
                max_sum = max_sum.max(sum);
                max_sum_over_decay = max_sum_over_decay.max(sum / a);
                max_sum_over_excess = max_sum_over_excess.max(sum / (2.0 * a - min_decay));
                max_input = max_input.max(bound);
                max_input_over_decay = max_input_over_decay.max(bound / a);
            }
        }
        let response_load = activation_bound * max_sum_over_decay;
        let solution_bound = if response_load < 1.0 {
            Some(max_input_over_decay / (1.0 - response_load))
        } else {
            None
        };
        let declared = schedule.declared_spacing();
        DerivedConstants {
            min_decay,
            max_neighborhood_coupling: max_sum,
            max_coupling_over_decay: max_sum_over_decay,
            max_coupling_over_excess_decay: max_sum_over_excess,
            max_input_bound: max_input,
            max_input_over_decay,
            solution_bound,
            gap_upper: declared.gap_upper,
            gap_lower: declared.gap_lower,
            anchor_gap_lower: declared.anchor_gap_lower,
        }
    }

    /// Certify every checkable condition: the two smallness prerequisites,
    /// the three contraction conditions, and the spacing conditions (scanned
    /// empirically over the schedule's full declared range).
    pub fn check_conditions(
        &self,
        schedule: &ArgumentSchedule,
        act: &ActivationSpec,
    ) -> ConditionReport {
        let m_bound = act.bound();
        let lipschitz = act.lipschitz();
        let constants = self.derived_constants(schedule, m_bound);
        let (p_min, p_max) = schedule.index_range();
        let spacing = schedule
            .spacing_report(p_min, p_max)
            .expect("declared range is a valid scan range");

        let mu = constants.max_neighborhood_coupling;
        let gap_upper = constants.gap_upper;
        let interval_load = mu * gap_upper * m_bound;
        let response_load = m_bound * constants.max_coupling_over_decay;

        let mut entries = Vec::with_capacity(8);
        entries.push(ConditionEntry::defined(
            "interval_load",
            interval_load,
            1.0,
            None,
        ));
        entries.push(ConditionEntry::defined(
            "response_load",
            response_load,
            1.0,
            None,
        ));
        entries.push(ConditionEntry::defined(
            "breakpoint_gap_upper",
            spacing.max_gap,
            gap_upper,
            Some("lhs is the empirical max gap over the declared index range".into()),
        ));

        // The iterate bound (H + θ̄·L̄)/(1 − μθ̄M) needs both prerequisites.
        let interval_iterate_bound = match (constants.solution_bound, interval_load < 1.0) {
            (Some(h), true) => {
                Some((h + gap_upper * constants.max_input_bound) / (1.0 - interval_load))
            }
            _ => None,
        };

        match (constants.solution_bound, interval_iterate_bound) {
            (Some(_), Some(k0)) => {
                let lhs = mu * gap_upper * (m_bound + 2.0 * lipschitz * k0);
                entries.push(ConditionEntry::defined(
                    "interval_contraction",
                    lhs,
                    1.0,
                    None,
                ));
            }
            _ => entries.push(ConditionEntry::undefined(
                "interval_contraction",
                1.0,
                "undefined: requires interval_load < 1 and response_load < 1".into(),
            )),
        }

        match constants.solution_bound {
            Some(h) => {
                let lhs = (m_bound + 2.0 * lipschitz * h) * constants.max_coupling_over_decay;
                entries.push(ConditionEntry::defined(
                    "response_contraction",
                    lhs,
                    1.0,
                    None,
                ));
            }
            None => entries.push(ConditionEntry::undefined(
                "response_contraction",
                1.0,
                "undefined: requires response_load < 1".into(),
            )),
        }

        let mut envelope_denominator = None;
        match constants.solution_bound {
            Some(h) => {
                let rate = constants.min_decay;
                let lhs = 2.0
                    * constants.max_coupling_over_excess_decay
                    * (m_bound
                        + lipschitz
                            * h
                            * (rate * self.tau / 2.0).exp()
                            * (1.0 + (rate * gap_upper / 2.0).exp()));
                if lhs < 1.0 {
                    envelope_denominator = Some(1.0 - lhs);
                }
                entries.push(ConditionEntry::defined(
                    "stability_contraction",
                    lhs,
                    1.0,
                    None,
                ));
            }
            None => entries.push(ConditionEntry::undefined(
                "stability_contraction",
                1.0,
                "undefined: requires response_load < 1".into(),
            )),
        }

        let ap_note = Some(
            "required only by the almost-periodic analysis; anchors may be non-strictly \
             ordered in the basic theory"
                .to_string(),
        );
        entries.push(ConditionEntry::defined(
            "breakpoint_gap_lower",
            constants.gap_lower,
            spacing.min_gap,
            ap_note.clone(),
        ));
        entries.push(ConditionEntry::defined(
            "anchor_gap_lower",
            constants.anchor_gap_lower,
            spacing.min_anchor_gap,
            ap_note,
        ));

        let all_pass = entries.iter().all(|e| e.pass);
        ConditionReport {
            constants,
            activation_bound: m_bound,
            activation_lipschitz: lipschitz,
            interval_iterate_bound,
            envelope_denominator,
            spacing,
            entries,
            all_pass,
        }
    }
}
