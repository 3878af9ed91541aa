//! Mixed-integer upper-bound model for the suspending task's response time.
//!
//! Per window the model admits an integer count of jobs from each
//! higher-priority task together with a rational first-release offset, ties
//! the window response to the admitted work, and chains offsets across
//! suspensions. Constraints are checked with exact rational arithmetic; the
//! solver enumerates count matrices (the response is then determined), and
//! the model can be exported to LP text for external solvers.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gap;
use crate::model::{SporadicTask, TaskSystem};
use crate::rta::{self, InterferenceSpec};
use crate::time::Time;

#[derive(Debug, Error)]
pub enum MilpError {
    #[error("cannot derive default bounds: {0}")]
    MissingBounds(String),
    #[error("assignment does not fit the system: {0}")]
    DimensionMismatch(String),
    #[error("count space is unbounded: {0}")]
    Unbounded(String),
    #[error("supplied bounds are invalid: {0}")]
    InvalidBounds(String),
    #[error("anchored view is inconsistent: {0}")]
    BrokenAnchors(String),
    #[error("search ended without a certified feasible point: {0}")]
    Inconclusive(String),
}

/// Constraint subset selector.
///
/// `Full` keeps everything including the per-window and total response
/// bounds and the release guard; `NoBounds` keeps only the structural
/// window-work, offset, chain, and count constraints; `NoRel` keeps the
/// bounds but drops the release guard; `V1` is the same constraint set as
/// `NoBounds` expressed over anchored variables (window start/finish and
/// absolute release instants) and maps onto the offset view one-to-one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MilpVariant {
    Full,
    NoBounds,
    NoRel,
    V1,
}

/// A constraint system over one task system. `ub_seg` and `ub_total` are
/// only enforced when the corresponding `include_*` flag is set, but always
/// satisfy `ub_seg[j] >= C_n^j` and `ub_total >= total work + suspension`.
/// `gamma` relaxes strict inequalities in the LP export only; the in-process
/// checker is exact.
#[derive(Debug, Clone)]
pub struct MilpModel<'a> {
    pub ts: &'a TaskSystem,
    pub variant: MilpVariant,
    pub include_seg_ub: bool,
    pub include_total_ub: bool,
    pub include_rel: bool,
    pub ub_seg: Vec<Time>,
    pub ub_total: Time,
    pub gamma: Time,
}

fn default_gamma(ts: &TaskSystem) -> Time {
    ts.min_positive_parameter() / Time::int(1000)
}

/// Per-segment responses with every higher-priority task treated as
/// periodic from the window start; the sum plus the total suspension is the
/// suspension-oblivious total bound.
fn default_bounds(ts: &TaskSystem) -> Result<(Vec<Time>, Time), MilpError> {
    let spec = InterferenceSpec {
        one_shot: Vec::new(),
        periodic: ts.hp_tasks().iter().map(|t| t.id).collect(),
    };
    let mut ub_seg = Vec::with_capacity(ts.ss_task().num_segments());
    for j in 0..ts.ss_task().num_segments() {
        let r = rta::segment_response(ts, j, &spec)
            .map_err(|e| MilpError::MissingBounds(e.to_string()))?;
        ub_seg.push(r);
    }
    let ub_total = gap::split_bound(ts).map_err(|e| MilpError::MissingBounds(e.to_string()))?;
    Ok((ub_seg, ub_total))
}

/// Builds the constraint system for `variant`. Bound values are derived
/// from the per-segment responses and the split bound whenever the variant
/// enforces them; variants without bounds get placeholder values that are
/// never enforced.
pub fn build_model(ts: &TaskSystem, variant: MilpVariant) -> Result<MilpModel<'_>, MilpError> {
    let (include_seg_ub, include_total_ub, include_rel) = match variant {
        MilpVariant::Full => (true, true, true),
        MilpVariant::NoRel => (true, true, false),
        MilpVariant::NoBounds | MilpVariant::V1 => (false, false, false),
    };
    let (ub_seg, ub_total) = if include_seg_ub || include_total_ub {
        default_bounds(ts)?
    } else {
        (ts.ss_task().segments.clone(), ts.ss_task().total_exec() + ts.ss_task().total_suspension())
    };
    Ok(MilpModel {
        ts,
        variant,
        include_seg_ub,
        include_total_ub,
        include_rel,
        ub_seg,
        ub_total,
        gamma: default_gamma(ts),
    })
}

/// Same as [`build_model`] but with caller-supplied bounds, validated
/// against the model invariants.
pub fn build_model_with_bounds<'a>(
    ts: &'a TaskSystem,
    variant: MilpVariant,
    ub_seg: Vec<Time>,
    ub_total: Time,
) -> Result<MilpModel<'a>, MilpError> {
    let m = ts.ss_task().num_segments();
    if ub_seg.len() != m {
        return Err(MilpError::InvalidBounds(format!(
            "{} per-segment bounds for {} segments",
            ub_seg.len(),
            m
        )));
    }
    for (j, (ub, seg)) in ub_seg.iter().zip(&ts.ss_task().segments).enumerate() {
        if ub < seg {
            return Err(MilpError::InvalidBounds(format!(
                "segment {j} bound {ub} is below its execution time {seg}"
            )));
        }
    }
    let floor = ts.ss_task().total_exec() + ts.ss_task().total_suspension();
    if ub_total < floor {
        return Err(MilpError::InvalidBounds(format!(
            "total bound {ub_total} is below the suspension-inclusive work {floor}"
        )));
    }
    let mut model = build_model(ts, variant)?;
    model.ub_seg = ub_seg;
    model.ub_total = ub_total;
    Ok(model)
}

/// Admitted job counts of one higher-priority task, one entry per window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskCounts {
    pub id: u32,
    pub counts: Vec<i128>,
}

/// First-release offsets of one higher-priority task relative to each
/// window start, one entry per window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskOffsets {
    pub id: u32,
    pub offsets: Vec<Time>,
}

/// A candidate point: counts `N`, offsets `O`, window responses `R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MilpAssignment {
    #[serde(rename = "N")]
    pub counts: Vec<TaskCounts>,
    #[serde(rename = "O")]
    pub offsets: Vec<TaskOffsets>,
    #[serde(rename = "R")]
    pub responses: Vec<Time>,
}

impl MilpAssignment {
    /// No admitted jobs anywhere; responses collapse to the segment costs.
    pub fn zero(ts: &TaskSystem) -> Self {
        let m = ts.ss_task().num_segments();
        MilpAssignment {
            counts: ts
                .hp_tasks()
                .iter()
                .map(|t| TaskCounts { id: t.id, counts: vec![0; m] })
                .collect(),
            offsets: ts
                .hp_tasks()
                .iter()
                .map(|t| TaskOffsets { id: t.id, offsets: vec![Time::zero(); m] })
                .collect(),
            responses: ts.ss_task().segments.clone(),
        }
    }

    /// Total suspension plus the sum of window responses.
    pub fn objective(&self, ts: &TaskSystem) -> Time {
        ts.ss_task().total_suspension() + self.responses.iter().copied().sum::<Time>()
    }
}

/// Counts and offsets reordered into priority-position-indexed matrices.
struct Dense {
    n: Vec<Vec<i128>>,
    o: Vec<Vec<Time>>,
    r: Vec<Time>,
}

impl Dense {
    fn build(ts: &TaskSystem, a: &MilpAssignment) -> Result<Dense, MilpError> {
        let m = ts.ss_task().num_segments();
        let hp = ts.hp_tasks();
        if a.responses.len() != m {
            return Err(MilpError::DimensionMismatch(format!(
                "{} responses for {} windows",
                a.responses.len(),
                m
            )));
        }
        let mut n = vec![Vec::new(); hp.len()];
        let mut o = vec![Vec::new(); hp.len()];
        let position = |id: u32| -> Result<usize, MilpError> {
            hp.iter()
                .position(|t| t.id == id)
                .ok_or_else(|| MilpError::DimensionMismatch(format!("unknown task id {id}")))
        };
        for tc in &a.counts {
            let p = position(tc.id)?;
            if tc.counts.len() != m {
                return Err(MilpError::DimensionMismatch(format!(
                    "task {} has {} count entries for {} windows",
                    tc.id,
                    tc.counts.len(),
                    m
                )));
            }
            if !n[p].is_empty() {
                return Err(MilpError::DimensionMismatch(format!("task {} listed twice", tc.id)));
            }
            n[p] = tc.counts.clone();
        }
        for to in &a.offsets {
            let p = position(to.id)?;
            if to.offsets.len() != m {
                return Err(MilpError::DimensionMismatch(format!(
                    "task {} has {} offset entries for {} windows",
                    to.id,
                    to.offsets.len(),
                    m
                )));
            }
            if !o[p].is_empty() {
                return Err(MilpError::DimensionMismatch(format!("task {} listed twice", to.id)));
            }
            o[p] = to.offsets.clone();
        }
        for (p, t) in hp.iter().enumerate() {
            if n[p].is_empty() || o[p].is_empty() {
                return Err(MilpError::DimensionMismatch(format!(
                    "task {} missing counts or offsets",
                    t.id
                )));
            }
        }
        Ok(Dense { n, o, r: a.responses.clone() })
    }

    fn assignment(&self, ts: &TaskSystem) -> MilpAssignment {
        MilpAssignment {
            counts: ts
                .hp_tasks()
                .iter()
                .enumerate()
                .map(|(p, t)| TaskCounts { id: t.id, counts: self.n[p].clone() })
                .collect(),
            offsets: ts
                .hp_tasks()
                .iter()
                .enumerate()
                .map(|(p, t)| TaskOffsets { id: t.id, offsets: self.o[p].clone() })
                .collect(),
            responses: self.r.clone(),
        }
    }
}

/// Constraint families reported by the checker.
///
/// Residual semantics: `WindowWork` is an equality and reports the signed
/// difference (feasible iff zero); `ReleaseGuard` is strict and reports the
/// margin (feasible iff positive); every other family reports slack
/// (feasible iff non-negative). `CountBound` residuals are whole admitted
/// jobs, the rest are time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    /// Window response equals segment cost plus admitted work (equality).
    WindowWork,
    /// First-release offsets are non-negative.
    OffsetNonneg,
    /// Sporadic spacing carried from one window to the next.
    OffsetChain,
    /// Admitted count fits the window: `0 <= N <= ceil((R - O) / T)`.
    CountBound,
    /// Per-window response bound.
    SegmentBound,
    /// Total response bound including suspensions.
    TotalBound,
    /// The window must end strictly after the last admitted release plus
    /// the work that can pile up from it (strict).
    ReleaseGuard,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstraintCheck {
    pub kind: ConstraintKind,
    /// Task the row concerns; the release guard rows name the task whose
    /// last admitted release anchors the bound.
    pub task: Option<u32>,
    pub window: Option<usize>,
    pub ok: bool,
    pub residual: Time,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub checks: Vec<ConstraintCheck>,
    pub feasible: bool,
    pub objective: Time,
}

impl CheckReport {
    pub fn failures(&self) -> impl Iterator<Item = &ConstraintCheck> {
        self.checks.iter().filter(|c| !c.ok)
    }
}

/// Evaluates every constraint of `model` at `a` with exact arithmetic.
pub fn check_assignment(model: &MilpModel, a: &MilpAssignment) -> Result<CheckReport, MilpError> {
    let ts = model.ts;
    let d = Dense::build(ts, a)?;
    let hp = ts.hp_tasks();
    let seg = &ts.ss_task().segments;
    let susp = &ts.ss_task().suspensions;
    let m = seg.len();
    let mut checks = Vec::new();

    for (j, &s) in seg.iter().enumerate() {
        let work: Time = hp.iter().enumerate().map(|(p, t)| t.wcet * d.n[p][j]).sum();
        let residual = d.r[j] - (s + work);
        checks.push(ConstraintCheck {
            kind: ConstraintKind::WindowWork,
            task: None,
            window: Some(j),
            ok: residual.is_zero(),
            residual,
        });
    }

    for (p, t) in hp.iter().enumerate() {
        for j in 0..m {
            checks.push(ConstraintCheck {
                kind: ConstraintKind::OffsetNonneg,
                task: Some(t.id),
                window: Some(j),
                ok: !d.o[p][j].is_negative(),
                residual: d.o[p][j],
            });
            let admissible = (d.r[j] - d.o[p][j]).ceil_div_int(t.period);
            checks.push(ConstraintCheck {
                kind: ConstraintKind::CountBound,
                task: Some(t.id),
                window: Some(j),
                ok: d.n[p][j] >= 0 && d.n[p][j] <= admissible,
                residual: Time::int(admissible - d.n[p][j]),
            });
        }
        for (j, &s) in susp.iter().enumerate() {
            let carry_in = d.o[p][j] + t.period * d.n[p][j] - (d.r[j] + s);
            let residual = d.o[p][j + 1] - carry_in;
            checks.push(ConstraintCheck {
                kind: ConstraintKind::OffsetChain,
                task: Some(t.id),
                window: Some(j),
                ok: !residual.is_negative(),
                residual,
            });
        }
    }

    if model.include_seg_ub {
        for j in 0..m {
            let residual = model.ub_seg[j] - d.r[j];
            checks.push(ConstraintCheck {
                kind: ConstraintKind::SegmentBound,
                task: None,
                window: Some(j),
                ok: !residual.is_negative(),
                residual,
            });
        }
    }
    if model.include_total_ub {
        let total = ts.ss_task().total_suspension() + d.r.iter().copied().sum::<Time>();
        let residual = model.ub_total - total;
        checks.push(ConstraintCheck {
            kind: ConstraintKind::TotalBound,
            task: None,
            window: None,
            ok: !residual.is_negative(),
            residual,
        });
    }

    if model.include_rel {
        for (pi, ti) in hp.iter().enumerate() {
            for j in 0..m {
                let rel = d.o[pi][j] + ti.period * (d.n[pi][j] - 1);
                let mut pile = Time::zero();
                for (pl, tl) in hp.iter().enumerate() {
                    let jobs =
                        ((d.o[pl][j] + tl.period * d.n[pl][j] - rel) / tl.period).floor_int();
                    if jobs > 0 {
                        pile += tl.wcet * jobs;
                    }
                }
                let residual = d.r[j] - rel - pile;
                checks.push(ConstraintCheck {
                    kind: ConstraintKind::ReleaseGuard,
                    task: Some(ti.id),
                    window: Some(j),
                    ok: residual > Time::zero(),
                    residual,
                });
            }
        }
    }

    let feasible = checks.iter().all(|c| c.ok);
    let objective = a.objective(ts);
    Ok(CheckReport { checks, feasible, objective })
}

/// The same point over anchored variables: `g[j]`/`f[j]` are the absolute
/// start and finish of window `j` and `first_releases` are absolute first
/// admitted release instants, with `g[0] = 0` and each later start anchored
/// at the previous finish plus the suspension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct V1Assignment {
    pub g: Vec<Time>,
    pub f: Vec<Time>,
    #[serde(rename = "r")]
    pub first_releases: Vec<TaskOffsets>,
    #[serde(rename = "N")]
    pub counts: Vec<TaskCounts>,
}

impl V1Assignment {
    /// Anchors the offset view: `f[j] = g[j] + R[j]`, releases shifted by
    /// the window start.
    pub fn from_base(ts: &TaskSystem, a: &MilpAssignment) -> Result<V1Assignment, MilpError> {
        let d = Dense::build(ts, a)?;
        let susp = &ts.ss_task().suspensions;
        let m = d.r.len();
        let mut g = Vec::with_capacity(m);
        let mut f = Vec::with_capacity(m);
        let mut start = Time::zero();
        for j in 0..m {
            g.push(start);
            f.push(start + d.r[j]);
            if j + 1 < m {
                start = f[j] + susp[j];
            }
        }
        let first_releases = ts
            .hp_tasks()
            .iter()
            .enumerate()
            .map(|(p, t)| TaskOffsets {
                id: t.id,
                offsets: (0..m).map(|j| g[j] + d.o[p][j]).collect(),
            })
            .collect();
        Ok(V1Assignment { g, f, first_releases, counts: a.counts.clone() })
    }

    /// Recovers the offset view. Fails if the anchors do not form the
    /// defining chain (`g[0] = 0`, `g[j+1] = f[j] + S[j]`), since such a
    /// point has no counterpart in the offset view.
    pub fn to_base(&self, ts: &TaskSystem) -> Result<MilpAssignment, MilpError> {
        let m = ts.ss_task().num_segments();
        let susp = &ts.ss_task().suspensions;
        if self.g.len() != m || self.f.len() != m {
            return Err(MilpError::DimensionMismatch(format!(
                "{} starts / {} finishes for {} windows",
                self.g.len(),
                self.f.len(),
                m
            )));
        }
        if !self.g[0].is_zero() {
            return Err(MilpError::BrokenAnchors(format!(
                "first window starts at {} instead of 0",
                self.g[0]
            )));
        }
        for (j, &s) in susp.iter().enumerate() {
            let expected = self.f[j] + s;
            if self.g[j + 1] != expected {
                return Err(MilpError::BrokenAnchors(format!(
                    "window {} starts at {} but the previous finish plus suspension is {}",
                    j + 1,
                    self.g[j + 1],
                    expected
                )));
            }
        }
        let responses: Vec<Time> = (0..m).map(|j| self.f[j] - self.g[j]).collect();
        let mut offsets = Vec::with_capacity(self.first_releases.len());
        for to in &self.first_releases {
            if to.offsets.len() != m {
                return Err(MilpError::DimensionMismatch(format!(
                    "task {} has {} release entries for {} windows",
                    to.id,
                    to.offsets.len(),
                    m
                )));
            }
            offsets.push(TaskOffsets {
                id: to.id,
                offsets: to.offsets.iter().enumerate().map(|(j, rel)| *rel - self.g[j]).collect(),
            });
        }
        Ok(MilpAssignment { counts: self.counts.clone(), offsets, responses })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    /// Count space exhausted and every leaf decided exactly.
    Optimal,
    /// Best certified point so far; the search was cut short by the node
    /// budget or some leaf's offset feasibility could not be decided.
    LowerBound,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveResult {
    pub best: MilpAssignment,
    pub objective: Time,
    pub status: SolveStatus,
    pub nodes: u64,
}

/// Sound per-window count caps: every feasible count matrix fits them.
fn count_caps(model: &MilpModel) -> Result<Vec<Vec<i128>>, MilpError> {
    let ts = model.ts;
    let hp = ts.hp_tasks();
    let seg = &ts.ss_task().segments;
    let mut caps = Vec::with_capacity(seg.len());
    if model.include_seg_ub {
        for (j, s) in seg.iter().enumerate() {
            let room = model.ub_seg[j] - *s;
            // N <= ceil(R/T) <= ceil(ub/T) and N*C <= R - C_seg <= ub - C_seg
            let row = hp
                .iter()
                .map(|t| {
                    model.ub_seg[j].ceil_div_int(t.period).min(room.floor_div_int(t.wcet)).max(0)
                })
                .collect();
            caps.push(row);
        }
    } else {
        let util = ts.hp_utilization();
        if util >= Time::one() {
            return Err(MilpError::Unbounded(format!(
                "higher-priority utilization {util} admits arbitrarily large windows \
                 and the model enforces no response bounds"
            )));
        }
        let hp_work: Time = hp.iter().map(|t| t.wcet).sum();
        for s in seg {
            // R = C_seg + sum N C with N <= ceil(R/T) forces R < (C_seg + sum C)/(1 - U)
            let r_cap = (*s + hp_work) / (Time::one() - util);
            caps.push(hp.iter().map(|t| r_cap.ceil_div_int(t.period).max(0)).collect());
        }
    }
    Ok(caps)
}

/// First-release offsets exist for count `n` at minimal offset `o` iff
/// `o < R - (n - 1) T`; the count bound rewrites to this single strict
/// inequality for every non-negative integer `n`.
fn column_feasible(hp: &[SporadicTask], offsets: &[Time], counts: &[i128], r: Time) -> bool {
    hp.iter().zip(offsets).zip(counts).all(|((t, o), &n)| *o < r - t.period * (n - 1))
}

struct Exhausted;

struct Searcher<'m, 'a> {
    model: &'m MilpModel<'a>,
    caps: Vec<Vec<i128>>,
    budget: u64,
    nodes: u64,
    best: Option<(Time, Dense)>,
    undecided_max: Option<Time>,
    cut_short: bool,
}

impl Searcher<'_, '_> {
    fn run(&mut self) {
        let m = self.model.ts.ss_task().num_segments();
        let hp_len = self.model.ts.hp_tasks().len();
        let mut counts_hist: Vec<Vec<i128>> = Vec::with_capacity(m);
        let mut offsets_hist: Vec<Vec<Time>> = vec![vec![Time::zero(); hp_len]];
        let mut responses: Vec<Time> = Vec::with_capacity(m);
        if self.window(0, &mut counts_hist, &mut offsets_hist, &mut responses).is_err() {
            self.cut_short = true;
        }
    }

    fn window(
        &mut self,
        j: usize,
        counts_hist: &mut Vec<Vec<i128>>,
        offsets_hist: &mut Vec<Vec<Time>>,
        responses: &mut Vec<Time>,
    ) -> Result<(), Exhausted> {
        let ts = self.model.ts;
        let hp = ts.hp_tasks();
        let seg = &ts.ss_task().segments;
        let susp = &ts.ss_task().suspensions;
        let m = seg.len();
        if j == m {
            self.leaf(counts_hist, offsets_hist, responses);
            return Ok(());
        }
        let tail_floor: Time = seg[j + 1..].iter().copied().sum();
        let spent: Time = responses.iter().copied().sum();
        let mut counts = vec![0i128; hp.len()];
        loop {
            self.nodes += 1;
            if self.nodes > self.budget {
                return Err(Exhausted);
            }
            let r: Time = seg[j] + hp.iter().zip(&counts).map(|(t, &n)| t.wcet * n).sum::<Time>();
            let seg_ok = !self.model.include_seg_ub || r <= self.model.ub_seg[j];
            let total_ok = !self.model.include_total_ub
                || ts.ss_task().total_suspension() + spent + r + tail_floor <= self.model.ub_total;
            // the release guard's self term alone demands R > (N-1)T + C at
            // any offset, so columns breaking that are infeasible outright
            let rel_ok = !self.model.include_rel
                || hp.iter().zip(&counts).all(|(t, &n)| n == 0 || r > t.period * (n - 1) + t.wcet);
            let offsets = offsets_hist.last().expect("offset state present").clone();
            if seg_ok && total_ok && rel_ok && column_feasible(hp, &offsets, &counts, r) {
                counts_hist.push(counts.clone());
                responses.push(r);
                if j + 1 < m {
                    let next: Vec<Time> = hp
                        .iter()
                        .zip(&offsets)
                        .zip(&counts)
                        .map(|((t, o), &n)| (*o + t.period * n - (r + susp[j])).max(Time::zero()))
                        .collect();
                    offsets_hist.push(next);
                    self.window(j + 1, counts_hist, offsets_hist, responses)?;
                    offsets_hist.pop();
                } else {
                    self.window(j + 1, counts_hist, offsets_hist, responses)?;
                }
                responses.pop();
                counts_hist.pop();
            }
            // odometer, rightmost fastest: ascending lexicographic order
            let mut pos = hp.len();
            loop {
                if pos == 0 {
                    return Ok(());
                }
                pos -= 1;
                if counts[pos] < self.caps[j][pos] {
                    counts[pos] += 1;
                    break;
                }
                counts[pos] = 0;
            }
        }
    }

    fn leaf(&mut self, counts_hist: &[Vec<i128>], offsets_hist: &[Vec<Time>], responses: &[Time]) {
        let ts = self.model.ts;
        let hp_len = ts.hp_tasks().len();
        let m = responses.len();
        let transpose_counts: Vec<Vec<i128>> =
            (0..hp_len).map(|p| (0..m).map(|j| counts_hist[j][p]).collect()).collect();
        let minimal: Vec<Vec<Time>> =
            (0..hp_len).map(|p| (0..m).map(|j| offsets_hist[j][p]).collect()).collect();
        let objective = ts.ss_task().total_suspension() + responses.iter().copied().sum::<Time>();
        // a leaf that cannot beat the incumbent never changes the outcome,
        // decided or not, so skip it either way; ties keep the first point
        if let Some((best_obj, _)) = &self.best {
            if objective <= *best_obj {
                return;
            }
        }
        let make =
            |o: Vec<Vec<Time>>| Dense { n: transpose_counts.clone(), o, r: responses.to_vec() };
        if self.model.include_rel {
            for cand in offset_candidates(ts, &transpose_counts, responses, &minimal) {
                let d = make(cand);
                let a = d.assignment(ts);
                let report = check_assignment(self.model, &a).expect("solver-built dims fit");
                if report.feasible {
                    self.best = Some((objective, d));
                    return;
                }
            }
            self.undecided_max = Some(match self.undecided_max {
                Some(u) => u.max(objective),
                None => objective,
            });
        } else {
            let d = make(minimal);
            debug_assert!(
                check_assignment(self.model, &d.assignment(ts))
                    .map(|rep| rep.feasible)
                    .unwrap_or(false),
                "constructed leaf must satisfy its own constraints"
            );
            self.best = Some((objective, d));
        }
    }
}

/// Offset matrices tried at a leaf when the release guard is active: the
/// minimal chain plus rank-staggered variants that keep every other
/// constraint satisfied (a uniform per-task shift preserves the chain, and
/// the shifts stay below the smallest count-bound slack).
fn offset_candidates(
    ts: &TaskSystem,
    counts: &[Vec<i128>],
    responses: &[Time],
    minimal: &[Vec<Time>],
) -> Vec<Vec<Vec<Time>>> {
    let hp = ts.hp_tasks();
    let mut slack: Option<Time> = None;
    for (p, t) in hp.iter().enumerate() {
        for (j, r) in responses.iter().enumerate() {
            let s = *r - t.period * (counts[p][j] - 1) - minimal[p][j];
            slack = Some(match slack {
                Some(cur) => cur.min(s),
                None => s,
            });
        }
    }
    let mut cands = vec![minimal.to_vec()];
    let Some(slack) = slack else {
        return cands;
    };
    debug_assert!(slack > Time::zero(), "leaves are count-feasible");
    let ranks = hp.len() as i128;
    for denom in [1, 2, 4] {
        let step = slack / Time::int((ranks + 1) * denom);
        let shifted: Vec<Vec<Time>> = minimal
            .iter()
            .enumerate()
            .map(|(p, row)| row.iter().map(|o| *o + step * (p as i128)).collect())
            .collect();
        cands.push(shifted);
    }
    cands
}

/// Maximizes the objective over the model by enumerating count matrices in
/// ascending lexicographic order (windows outermost). `budget` caps the
/// number of count columns evaluated. Ties keep the first, i.e.
/// lexicographically smallest, matrix.
pub fn solve(model: &MilpModel, budget: u64) -> Result<SolveResult, MilpError> {
    let caps = count_caps(model)?;
    let mut searcher = Searcher {
        model,
        caps,
        budget,
        nodes: 0,
        best: None,
        undecided_max: None,
        cut_short: false,
    };
    searcher.run();
    let nodes = searcher.nodes;
    match searcher.best {
        Some((objective, dense)) => {
            let undecided_beats = searcher.undecided_max.is_some_and(|u| u > objective);
            let status = if searcher.cut_short || undecided_beats {
                SolveStatus::LowerBound
            } else {
                SolveStatus::Optimal
            };
            Ok(SolveResult { best: dense.assignment(model.ts), objective, status, nodes })
        }
        None => Err(MilpError::Inconclusive(format!(
            "no feasible point certified within {nodes} nodes"
        ))),
    }
}

fn lp_name_time(t: Time, alpha: i128) -> i128 {
    let scaled = t * alpha;
    debug_assert!(scaled.is_integer(), "scale covers every denominator");
    scaled.numer()
}

struct LpRow {
    name: String,
    terms: Vec<(i128, String)>,
    op: &'static str,
    rhs: i128,
}

impl LpRow {
    fn render(&self, out: &mut String) {
        write!(out, " {}:", self.name).unwrap();
        for (coef, var) in &self.terms {
            if *coef >= 0 {
                write!(out, " +{coef} {var}").unwrap();
            } else {
                write!(out, " {coef} {var}").unwrap();
            }
        }
        writeln!(out, " {} {}", self.op, self.rhs).unwrap();
    }
}

/// Emits the model in LP text form with integer-scaled coefficients.
///
/// Strict inequalities are relaxed by `gamma` (points within `gamma` of a
/// strict boundary are excluded; the in-process checker stays exact).
/// Floors in the release guard use one auxiliary integer per term, pinned
/// from both sides, and a non-negative tail variable per term that
/// maximization pressure keeps at `max(0, C * floor)`; no big-M constants
/// are needed. The constant objective term rides on the fixed variable
/// `unit`.
pub fn export_lp(model: &MilpModel) -> Result<String, MilpError> {
    let caps = count_caps(model)?;
    let ts = model.ts;
    let hp = ts.hp_tasks();
    let seg = &ts.ss_task().segments;
    let susp = &ts.ss_task().suspensions;
    let m = seg.len();

    let mut alpha: i128 = model.gamma.denom();
    let mut cover = |t: Time| alpha = num_integer::lcm(alpha, t.denom());
    for s in seg {
        cover(*s);
    }
    for s in susp {
        cover(*s);
    }
    for t in hp {
        cover(t.wcet);
        cover(t.period);
    }
    if model.include_seg_ub {
        for ub in &model.ub_seg {
            cover(*ub);
        }
    }
    if model.include_total_ub {
        cover(model.ub_total);
        cover(ts.ss_task().total_suspension());
    }
    let sc = |t: Time| lp_name_time(t, alpha);
    let gamma = sc(model.gamma);

    let r_var = |j: usize| format!("R_{}", j + 1);
    let o_var = |p: usize, j: usize| format!("O_{}_{}", p + 1, j + 1);
    let n_var = |p: usize, j: usize| format!("N_{}_{}", p + 1, j + 1);
    let f_var = |l: usize, i: usize, j: usize| format!("F_{}_{}_{}", l + 1, i + 1, j + 1);
    let w_var = |l: usize, i: usize, j: usize| format!("W_{}_{}_{}", l + 1, i + 1, j + 1);

    let mut rows: Vec<LpRow> = Vec::new();
    for (j, &s) in seg.iter().enumerate() {
        let mut terms = vec![(1, r_var(j))];
        for (p, t) in hp.iter().enumerate() {
            terms.push((-sc(t.wcet), n_var(p, j)));
        }
        rows.push(LpRow { name: format!("work_{}", j + 1), terms, op: "=", rhs: sc(s) });
    }
    for (p, t) in hp.iter().enumerate() {
        for j in 0..m {
            // count bound: T N + O - R <= T - gamma, equivalent to
            // N <= ceil((R - O)/T) over the integers
            rows.push(LpRow {
                name: format!("count_{}_{}", p + 1, j + 1),
                terms: vec![(sc(t.period), n_var(p, j)), (1, o_var(p, j)), (-1, r_var(j))],
                op: "<=",
                rhs: sc(t.period) - gamma,
            });
        }
        for (j, &s) in susp.iter().enumerate() {
            rows.push(LpRow {
                name: format!("chain_{}_{}", p + 1, j + 1),
                terms: vec![
                    (1, o_var(p, j + 1)),
                    (-1, o_var(p, j)),
                    (-sc(t.period), n_var(p, j)),
                    (1, r_var(j)),
                ],
                op: ">=",
                rhs: -sc(s),
            });
        }
    }
    if model.include_seg_ub {
        for j in 0..m {
            rows.push(LpRow {
                name: format!("seg_ub_{}", j + 1),
                terms: vec![(1, r_var(j))],
                op: "<=",
                rhs: sc(model.ub_seg[j]),
            });
        }
    }
    if model.include_total_ub {
        rows.push(LpRow {
            name: "total_ub".to_string(),
            terms: (0..m).map(|j| (1, r_var(j))).collect(),
            op: "<=",
            rhs: sc(model.ub_total - ts.ss_task().total_suspension()),
        });
    }
    if model.include_rel {
        for (pi, ti) in hp.iter().enumerate() {
            for j in 0..m {
                // rel_{i,j} = O_i + T_i N_i - T_i as a linear expression
                let mut guard =
                    vec![(1, r_var(j)), (-1, o_var(pi, j)), (-sc(ti.period), n_var(pi, j))];
                for (pl, tl) in hp.iter().enumerate() {
                    // floor aux: F <= x and F >= x - 1 + gamma/T_l where
                    // x = (O_l + T_l N_l - rel) / T_l
                    let base = vec![
                        (sc(tl.period), f_var(pl, pi, j)),
                        (-1, o_var(pl, j)),
                        (-sc(tl.period), n_var(pl, j)),
                        (1, o_var(pi, j)),
                        (sc(ti.period), n_var(pi, j)),
                    ];
                    rows.push(LpRow {
                        name: format!("floor_le_{}_{}_{}", pl + 1, pi + 1, j + 1),
                        terms: base.clone(),
                        op: "<=",
                        rhs: sc(ti.period),
                    });
                    rows.push(LpRow {
                        name: format!("floor_ge_{}_{}_{}", pl + 1, pi + 1, j + 1),
                        terms: base,
                        op: ">=",
                        rhs: sc(ti.period) - sc(tl.period) + gamma,
                    });
                    rows.push(LpRow {
                        name: format!("tail_{}_{}_{}", pl + 1, pi + 1, j + 1),
                        terms: vec![(1, w_var(pl, pi, j)), (-sc(tl.wcet), f_var(pl, pi, j))],
                        op: ">=",
                        rhs: 0,
                    });
                    guard.push((-1, w_var(pl, pi, j)));
                }
                rows.push(LpRow {
                    name: format!("guard_{}_{}", pi + 1, j + 1),
                    terms: guard,
                    op: ">=",
                    rhs: gamma - sc(ti.period),
                });
            }
        }
    }

    let mut out = String::new();
    writeln!(out, "\\ response-time upper-bound model, integer-scaled").unwrap();
    writeln!(out, "\\ time scale: every time constant multiplied by {alpha}").unwrap();
    writeln!(
        out,
        "\\ gamma: strict inequalities relaxed by {} original units ({} scaled)",
        model.gamma, gamma
    )
    .unwrap();
    writeln!(out, "\\ points within gamma of a strict boundary are excluded; the exact").unwrap();
    writeln!(out, "\\ in-process checker remains authoritative").unwrap();
    for (p, t) in hp.iter().enumerate() {
        writeln!(out, "\\ position {}: task id {} (C = {}, T = {})", p + 1, t.id, t.wcet, t.period)
            .unwrap();
    }
    writeln!(
        out,
        "\\ unit is fixed at 1 and carries the constant objective term {}",
        ts.ss_task().total_suspension()
    )
    .unwrap();
    if model.include_rel {
        writeln!(out, "\\ release-guard floors use pinned auxiliary integers F_* and").unwrap();
        writeln!(out, "\\ tail variables W_* >= max(0, C*F); maximization pressure keeps").unwrap();
        writeln!(out, "\\ them tight, so no big-M constants appear").unwrap();
    }
    writeln!(out, "Maximize").unwrap();
    let mut obj = String::from(" obj:");
    for j in 0..m {
        write!(obj, " +1 {}", r_var(j)).unwrap();
    }
    let s_n = sc(ts.ss_task().total_suspension());
    if s_n != 0 {
        write!(obj, " +{s_n} unit").unwrap();
    }
    writeln!(out, "{obj}").unwrap();
    writeln!(out, "Subject To").unwrap();
    for row in &rows {
        row.render(&mut out);
    }
    writeln!(out, "Bounds").unwrap();
    writeln!(out, " unit = 1").unwrap();
    for (j, cap_row) in caps.iter().enumerate() {
        for (p, cap) in cap_row.iter().enumerate() {
            writeln!(out, " 0 <= {} <= {}", n_var(p, j), cap).unwrap();
        }
    }
    if model.include_rel {
        for pi in 0..hp.len() {
            for j in 0..m {
                for pl in 0..hp.len() {
                    writeln!(out, " {} free", f_var(pl, pi, j)).unwrap();
                }
            }
        }
    }
    if !hp.is_empty() {
        writeln!(out, "Generals").unwrap();
        for j in 0..m {
            for (p, _) in hp.iter().enumerate() {
                writeln!(out, " {}", n_var(p, j)).unwrap();
            }
        }
        if model.include_rel {
            for pi in 0..hp.len() {
                for j in 0..m {
                    for pl in 0..hp.len() {
                        writeln!(out, " {}", f_var(pl, pi, j)).unwrap();
                    }
                }
            }
        }
    }
    writeln!(out, "End").unwrap();
    Ok(out)
}
