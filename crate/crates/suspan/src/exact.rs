//! Exact worst-case response time of the suspending task by structured search.
//!
//! The search space is the family of release patterns in which every
//! higher-priority release falls inside one of the m busy windows (one per
//! computation segment), suspensions take their maximum lengths, and every job
//! runs for its WCET. When the resulting maximum is at most the deadline it is
//! the exact worst-case response time; when it exceeds the deadline the verdict
//! "unschedulable" is exact as well, and the maximum is still the exact worst
//! case while it does not exceed the period.
//!
//! Instead of discretizing offsets, the engine enumerates per-window *job
//! counts* per task. For a fixed count vector the window response is the same
//! for every realization that keeps all jobs inside the window, the
//! earliest-release realization is unique (offset `max(carry, R - k T)`), and
//! that realization simultaneously maximizes the current window and minimizes
//! the carry into later windows, so enumerating counts is exhaustive over all
//! rational offsets. A busy-interval sweep rejects count vectors no schedule
//! realizes. Windows are explored left to right with memoization on (window,
//! carries, remaining one-shot tasks, offset bookkeeping).

use std::collections::HashMap;

use crate::model::TaskSystem;
use crate::rta::{least_fixed_point, PeriodicTerm};
use crate::sim::{self, ReleasePattern, SsOutcome, TaskReleases};
use crate::time::Time;

#[derive(Debug, thiserror::Error)]
pub enum ExactError {
    #[error("segment index {0} out of range")]
    SegmentOutOfRange(usize),
    #[error("search self-check failed: {0}")]
    SelfCheckFailed(String),
}

/// Which search-space reductions to apply. All of them preserve the maximum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PruneFlags {
    /// Drop patterns in which some released task never uses offset 0.
    pub min_offset_zero: bool,
    /// Pin offset 0 for tasks whose period fits within the adjacent suspensions.
    pub forced_zero_period: bool,
    /// Release tasks with period >= the suspending task's period exactly once,
    /// together with one segment.
    pub single_job: bool,
    /// Pin offset 0 for tasks whose period minus WCET fits within the adjacent
    /// suspensions.
    pub forced_zero_slack: bool,
}

impl Default for PruneFlags {
    fn default() -> Self {
        PruneFlags {
            min_offset_zero: true,
            forced_zero_period: true,
            single_job: true,
            forced_zero_slack: true,
        }
    }
}

impl PruneFlags {
    pub fn none() -> Self {
        PruneFlags {
            min_offset_zero: false,
            forced_zero_period: false,
            single_job: false,
            forced_zero_slack: false,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SearchConfig {
    pub prune: PruneFlags,
    /// Budget on window evaluations; `None` = unlimited.
    pub max_evals: Option<u64>,
    /// Echoed into the result for reference. The count-based search is exact for
    /// arbitrary rational offsets, so no discretization is applied.
    pub grid: Option<Time>,
}

/// How a task's release offset may be chosen in one window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OffsetRule {
    /// Offset pinned to 0 (released with the segment, then periodically).
    ForcedZero,
    /// At most one job overall, released together with one of the segments.
    SingleJob,
    /// Offset free (subject to sporadic spacing across windows).
    Free,
}

fn adjacency_bound(ts: &TaskSystem, window: usize) -> Option<Time> {
    let s = &ts.ss_task().suspensions;
    let m = ts.ss_task().num_segments();
    if m == 1 {
        return None;
    }
    Some(if window == 0 {
        s[0]
    } else if window == m - 1 {
        s[m - 2]
    } else {
        s[window - 1].min(s[window])
    })
}

/// Offset rule of every higher-priority task for one window (0-based), under
/// `flags`. Returned in priority order as `(task id, rule)`.
pub fn apply_pruning(
    ts: &TaskSystem,
    window: usize,
    flags: &PruneFlags,
) -> Result<Vec<(u32, OffsetRule)>, ExactError> {
    if window >= ts.ss_task().num_segments() {
        return Err(ExactError::SegmentOutOfRange(window));
    }
    let bound = adjacency_bound(ts, window);
    Ok(ts
        .hp_tasks()
        .iter()
        .map(|t| {
            let rule = if flags.single_job && t.period >= ts.ss_task().period {
                OffsetRule::SingleJob
            } else if let Some(b) = bound {
                let by_period = flags.forced_zero_period && t.period <= b;
                let by_slack = flags.forced_zero_slack && t.period - t.wcet <= b;
                if by_period || by_slack {
                    OffsetRule::ForcedZero
                } else {
                    OffsetRule::Free
                }
            } else {
                OffsetRule::Free
            };
            (t.id, rule)
        })
        .collect())
}

/// Verdict of the exact search.
#[derive(Debug, Clone)]
pub enum ExactStatus {
    /// Worst-case response time (over all sporadic release behaviours,
    /// suspension lengths and execution times) with a witness attaining it.
    Schedulable { wcrt: Time, witness: ReleasePattern },
    /// Some valid pattern exceeds the deadline; `response` is a response the
    /// witness attains (or exceeds, if a diverging busy window was truncated).
    /// `exact` marks `response` as the exact worst case: no window evaluation
    /// was cut short and the maximum stayed within the period.
    DeadlineMiss { response: Time, exact: bool, witness: ReleasePattern },
    /// Evaluation budget exhausted; `best` is a valid lower bound if any
    /// complete pattern was seen before the abort.
    Aborted { best: Option<Time> },
}

#[derive(Debug, Clone)]
pub struct ExactResult {
    pub status: ExactStatus,
    /// Window evaluations performed.
    pub evals: u64,
    /// Echo of `SearchConfig::grid` (informational: the search is exact without
    /// discretization).
    pub grid: Option<Time>,
}

impl ExactResult {
    /// The response value the search settled on, regardless of verdict.
    pub fn value(&self) -> Option<Time> {
        match &self.status {
            ExactStatus::Schedulable { wcrt, .. } => Some(*wcrt),
            ExactStatus::DeadlineMiss { response, .. } => Some(*response),
            ExactStatus::Aborted { best } => *best,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct State {
    window: usize,
    /// Earliest next release offset per windowed task, relative to window start.
    carries: Vec<Time>,
    /// One-shot tasks not yet released.
    unused: u64,
    /// Windowed tasks released in some earlier window.
    released: u64,
    /// Windowed tasks that have used offset 0 in some earlier window.
    zeroed: u64,
}

#[derive(Clone)]
struct Choice {
    singles: u64,
    /// Job count per windowed task (parallel to `Engine::windowed`); forced
    /// tasks' counts are implied by the fixed point and recomputed on replay.
    counts: Vec<i128>,
}

#[derive(Clone)]
struct Branch {
    /// Max sum of window responses from this window on.
    future: Time,
    /// Some window on the path exceeded its miss budget (search below it was
    /// cut short, so `future` is attainable or exceeded but maybe not maximal).
    capped: bool,
    /// Some window on the path had diverging pinned interference; its recorded
    /// response is a truncation, the real one is larger.
    truncated: bool,
    choice: Choice,
}

struct WindowEval {
    response: Time,
    capped: bool,
    truncated: bool,
    /// Realized earliest offsets per windowed task (`None` = no release here).
    offsets: Vec<Option<Time>>,
    counts: Vec<i128>,
    next_carries: Vec<Time>,
}

struct AbortSearch;

struct Engine<'a> {
    ts: &'a TaskSystem,
    m: usize,
    flags: PruneFlags,
    /// hp indices treated as one-shot interferers.
    singles: Vec<usize>,
    /// hp indices with per-window release choices.
    windowed: Vec<usize>,
    /// forced[window][windowed position]: offset pinned to 0 there.
    forced: Vec<Vec<bool>>,
    /// Per-window response budget: exceeding it certifies a deadline miss.
    budgets: Vec<Time>,
    memo: HashMap<State, Option<Branch>>,
    evals: u64,
    max_evals: u64,
    /// A realizable over-budget window response was found somewhere. The miss
    /// verdict is then certain, but values beyond the budget were not explored,
    /// so the reported maximum is only a lower bound.
    any_capped: bool,
    /// Largest complete-pattern response sum seen, for abort reporting.
    best_total: Option<Time>,
}

impl<'a> Engine<'a> {
    fn new(ts: &'a TaskSystem, cfg: &SearchConfig) -> Self {
        let ss = ts.ss_task();
        let m = ss.num_segments();
        let mut singles = Vec::new();
        let mut windowed = Vec::new();
        for (i, t) in ts.hp_tasks().iter().enumerate() {
            if cfg.prune.single_job && t.period >= ss.period {
                singles.push(i);
            } else {
                windowed.push(i);
            }
        }
        assert!(singles.len() <= 63 && windowed.len() <= 63, "too many interfering tasks");
        let mut forced = vec![vec![false; windowed.len()]; m];
        for (j, row) in forced.iter_mut().enumerate() {
            if let Some(b) = adjacency_bound(ts, j) {
                for (pos, &i) in windowed.iter().enumerate() {
                    let t = &ts.hp_tasks()[i];
                    let by_period = cfg.prune.forced_zero_period && t.period <= b;
                    let by_slack = cfg.prune.forced_zero_slack && t.period - t.wcet <= b;
                    row[pos] = by_period || by_slack;
                }
            }
        }
        // Window j may spend the deadline minus every other segment's minimum
        // and all suspensions; anything beyond that certifies a miss.
        let total_min: Time = ss.total_exec() + ss.total_suspension();
        let budgets = (0..m).map(|j| ss.deadline - (total_min - ss.segments[j])).collect();
        Engine {
            ts,
            m,
            flags: cfg.prune,
            singles,
            windowed,
            forced,
            budgets,
            memo: HashMap::new(),
            evals: 0,
            max_evals: cfg.max_evals.unwrap_or(u64::MAX),
            any_capped: false,
            best_total: None,
        }
    }

    fn hp(&self, i: usize) -> &crate::model::SporadicTask {
        &self.ts.hp_tasks()[i]
    }

    fn eval_window(
        &mut self,
        state: &State,
        singles_mask: u64,
        counts: &[i128],
    ) -> Option<WindowEval> {
        self.evals += 1;
        let j = state.window;
        let ss = self.ts.ss_task();
        let budget = self.budgets[j];
        let susp_after = if j + 1 < self.m { ss.suspensions[j] } else { Time::zero() };

        let mut start = ss.segments[j];
        for (bit, &i) in self.singles.iter().enumerate() {
            if singles_mask & (1 << bit) != 0 {
                start += self.hp(i).wcet;
            }
        }
        for (pos, &i) in self.windowed.iter().enumerate() {
            if !self.forced[j][pos] {
                start += self.hp(i).wcet * counts[pos];
            }
        }

        let mut forced_terms: Vec<PeriodicTerm> = Vec::new();
        let mut forced_util = Time::zero();
        let mut forced_wcet_sum = Time::zero();
        for (pos, &i) in self.windowed.iter().enumerate() {
            if self.forced[j][pos] {
                debug_assert!(state.carries[pos].is_zero(), "forced task arrives with zero carry");
                let t = self.hp(i);
                forced_terms.push(PeriodicTerm::new(t.wcet, t.period));
                forced_util += t.wcet / t.period;
                forced_wcet_sum += t.wcet;
            }
        }

        if forced_util >= Time::one() {
            // The pinned interference alone keeps the window busy forever: the
            // window certifies a miss on its own. Keep only the plain
            // realization and truncate its trains just past the budget.
            let free_release =
                (0..self.windowed.len()).any(|pos| !self.forced[j][pos] && counts[pos] != 0);
            if singles_mask != 0 || free_release {
                return None;
            }
            let response = budget.max(Time::zero()) + Time::one();
            let mut offsets: Vec<Option<Time>> = vec![None; self.windowed.len()];
            let mut out_counts = vec![0i128; self.windowed.len()];
            for (pos, &i) in self.windowed.iter().enumerate() {
                if self.forced[j][pos] {
                    offsets[pos] = Some(Time::zero());
                    out_counts[pos] = response.ceil_div_int(self.hp(i).period).max(1);
                }
            }
            let next_carries = vec![Time::zero(); self.windowed.len()];
            return Some(WindowEval {
                response,
                capped: true,
                truncated: true,
                offsets,
                counts: out_counts,
                next_carries,
            });
        }

        // The fixed point is finite; bound it so the iteration always lands.
        let bound = (start + forced_wcet_sum) / (Time::one() - forced_util) + Time::one();
        let response = least_fixed_point(start, &forced_terms, start, bound)
            .converged()
            .expect("fixed point below its utilization bound");
        let capped = response > budget;

        // Realize each count with its earliest legal offset and check that the
        // busy interval actually reaches every release.
        let mut offsets: Vec<Option<Time>> = vec![None; self.windowed.len()];
        let mut out_counts = counts.to_vec();
        let mut releases: Vec<(Time, Time)> = Vec::new(); // (time, cost)
        for (bit, &i) in self.singles.iter().enumerate() {
            if singles_mask & (1 << bit) != 0 {
                releases.push((Time::zero(), self.hp(i).wcet));
            }
        }
        for (pos, &i) in self.windowed.iter().enumerate() {
            let t = self.hp(i);
            let k = if self.forced[j][pos] {
                offsets[pos] = Some(Time::zero());
                let k = response.ceil_div_int(t.period).max(0);
                out_counts[pos] = k;
                k
            } else {
                let k = counts[pos];
                if k > 0 {
                    let carry = state.carries[pos];
                    // Need carry + (k-1) T < response for k releases to fit.
                    if carry + t.period * (k - 1) >= response {
                        return None;
                    }
                    offsets[pos] = Some(carry.max(response - t.period * k));
                }
                k
            };
            if let Some(o) = offsets[pos] {
                for r in 0..k {
                    releases.push((o + t.period * r, t.wcet));
                }
            }
        }
        releases.sort();
        let mut busy = ss.segments[j];
        for &(r, c) in &releases {
            if r >= busy {
                return None; // the busy interval ends before this release
            }
            busy += c;
        }
        debug_assert_eq!(busy, response, "sweep total must equal the fixed point");

        let mut next_carries = Vec::with_capacity(self.windowed.len());
        for (pos, &i) in self.windowed.iter().enumerate() {
            let t = self.hp(i);
            let k = out_counts[pos];
            let carry = state.carries[pos];
            next_carries.push((carry + t.period * k - response - susp_after).max(Time::zero()));
        }
        Some(WindowEval {
            response,
            capped,
            truncated: false,
            offsets,
            counts: out_counts,
            next_carries,
        })
    }

    /// Ascending submasks of `mask` (including 0 and `mask` itself).
    fn submasks(mask: u64) -> Vec<u64> {
        let mut out = Vec::new();
        let mut s = mask;
        loop {
            out.push(s);
            if s == 0 {
                break;
            }
            s = (s - 1) & mask;
        }
        out.reverse();
        out
    }

    /// Largest job count worth trying per windowed task. One count beyond the
    /// budget is included so every over-budget window still produces a miss
    /// certificate, and a floor of one job keeps tasks whose earliest release
    /// only fits into an already over-budget window detectable.
    fn count_limits(&self, state: &State) -> Vec<i128> {
        let j = state.window;
        self.windowed
            .iter()
            .enumerate()
            .map(|(pos, &i)| {
                if self.forced[j][pos] {
                    return 0; // implied by the fixed point, not enumerated
                }
                let room = self.budgets[j] - state.carries[pos];
                if room <= Time::zero() {
                    1
                } else {
                    room.ceil_div_int(self.hp(i).period) + 1
                }
            })
            .collect()
    }

    fn search(&mut self, state: State, prefix: Time) -> Result<Option<Branch>, AbortSearch> {
        if let Some(hit) = self.memo.get(&state) {
            let hit = hit.clone();
            if let Some(b) = &hit {
                self.note_total(prefix + b.future);
            }
            return Ok(hit);
        }
        let j = state.window;
        let last = j == self.m - 1;
        let limits = self.count_limits(&state);
        let mut best: Option<Branch> = None;

        let singles_options = if last {
            vec![state.unused] // releasing every remaining one-shot dominates
        } else {
            Self::submasks(state.unused)
        };

        for &singles_mask in &singles_options {
            let mut counts = vec![0i128; self.windowed.len()];
            'odometer: loop {
                if self.evals >= self.max_evals {
                    return Err(AbortSearch);
                }
                if let Some(eval) = self.eval_window(&state, singles_mask, &counts) {
                    if let Some(cand) = self.candidate(&state, singles_mask, eval, prefix, last)? {
                        let better = match &best {
                            None => true,
                            Some(b) => {
                                cand.future > b.future
                                    || (cand.future == b.future && b.capped && !cand.capped)
                            }
                        };
                        if better {
                            best = Some(cand);
                        }
                    }
                }
                // Advance the count odometer (rightmost position fastest).
                let mut pos = counts.len();
                loop {
                    if pos == 0 {
                        break 'odometer;
                    }
                    pos -= 1;
                    if counts[pos] < limits[pos] {
                        counts[pos] += 1;
                        for c in counts[pos + 1..].iter_mut() {
                            *c = 0;
                        }
                        break;
                    }
                }
            }
        }

        self.memo.insert(state, best.clone());
        Ok(best)
    }

    fn note_total(&mut self, total: Time) {
        self.best_total = Some(match self.best_total {
            None => total,
            Some(b) => b.max(total),
        });
    }

    fn candidate(
        &mut self,
        state: &State,
        singles_mask: u64,
        eval: WindowEval,
        prefix: Time,
        last: bool,
    ) -> Result<Option<Branch>, AbortSearch> {
        let j = state.window;
        let choice = Choice { singles: singles_mask, counts: eval.counts.clone() };

        if eval.capped {
            // Certified miss: close the pattern with empty remaining windows.
            self.any_capped = true;
            let tail: Time = self.ts.ss_task().segments[j + 1..].iter().copied().sum();
            let future = eval.response + tail;
            self.note_total(prefix + future);
            return Ok(Some(Branch { future, capped: true, truncated: eval.truncated, choice }));
        }

        let mut released = state.released;
        let mut zeroed = state.zeroed;
        for (pos, off) in eval.offsets.iter().enumerate() {
            if let Some(o) = off {
                released |= 1 << pos;
                if o.is_zero() {
                    zeroed |= 1 << pos;
                }
            }
        }
        if self.flags.min_offset_zero && last && released & !zeroed != 0 {
            return Ok(None); // some released task never used offset 0
        }

        if last {
            self.note_total(prefix + eval.response);
            return Ok(Some(Branch {
                future: eval.response,
                capped: false,
                truncated: false,
                choice,
            }));
        }

        let next = State {
            window: j + 1,
            carries: eval.next_carries,
            unused: state.unused & !singles_mask,
            released,
            zeroed,
        };
        match self.search(next, prefix + eval.response)? {
            None => Ok(None),
            Some(child) => Ok(Some(Branch {
                future: eval.response + child.future,
                capped: child.capped,
                truncated: child.truncated,
                choice,
            })),
        }
    }

    /// Rebuilds the witness pattern along the memoized best path.
    fn replay(&mut self, root: &State) -> (ReleasePattern, Time, bool) {
        let ss = self.ts.ss_task();
        let mut per_task: HashMap<u32, Vec<Time>> = HashMap::new();
        let mut g = Time::zero();
        let mut sum_r = Time::zero();
        let mut capped = false;
        let mut state = root.clone();
        for j in 0..self.m {
            let branch = self.memo.get(&state).cloned().flatten().expect("best path is memoized");
            let eval = self
                .eval_window(&state, branch.choice.singles, &branch.choice.counts)
                .expect("memoized choice re-evaluates");
            for (bit, &i) in self.singles.iter().enumerate() {
                if branch.choice.singles & (1 << bit) != 0 {
                    per_task.entry(self.hp(i).id).or_default().push(g);
                }
            }
            for (pos, &i) in self.windowed.iter().enumerate() {
                if let Some(o) = eval.offsets[pos] {
                    let t = self.hp(i);
                    let entry = per_task.entry(t.id).or_default();
                    for r in 0..eval.counts[pos] {
                        entry.push(g + o + t.period * r);
                    }
                }
            }
            sum_r += eval.response;
            if eval.capped {
                capped = true;
                break;
            }
            let mut released = state.released;
            let mut zeroed = state.zeroed;
            for (pos, off) in eval.offsets.iter().enumerate() {
                if let Some(o) = off {
                    released |= 1 << pos;
                    if o.is_zero() {
                        zeroed |= 1 << pos;
                    }
                }
            }
            g = g + eval.response + if j + 1 < self.m { ss.suspensions[j] } else { Time::zero() };
            state = State {
                window: j + 1,
                carries: eval.next_carries,
                unused: state.unused & !branch.choice.singles,
                released,
                zeroed,
            };
        }
        let mut hp_releases: Vec<TaskReleases> =
            per_task.into_iter().map(|(id, releases)| TaskReleases { id, releases }).collect();
        hp_releases.sort_by_key(|tr| tr.id);
        for tr in hp_releases.iter_mut() {
            tr.releases.sort();
        }
        let pattern = ReleasePattern {
            hp_releases,
            ss_release: Time::zero(),
            suspensions: ss.suspensions.clone(),
            exec_times: None,
            seg_exec: None,
        };
        (pattern, sum_r, capped)
    }
}

/// Exact search over the structured pattern family. See the module docs for the
/// completeness argument; disabling prune flags only enlarges the explored
/// space and cannot change the result.
pub fn exact_wcrt(ts: &TaskSystem, cfg: &SearchConfig) -> Result<ExactResult, ExactError> {
    let ss = ts.ss_task();
    let total_susp = ss.total_suspension();

    let mut engine = Engine::new(ts, cfg);
    let root = State {
        window: 0,
        carries: vec![Time::zero(); engine.windowed.len()],
        unused: if engine.singles.is_empty() { 0 } else { (1u64 << engine.singles.len()) - 1 },
        released: 0,
        zeroed: 0,
    };

    let searched = engine.search(root.clone(), Time::zero());
    let grid = cfg.grid;

    let branch = match searched {
        Err(AbortSearch) => {
            let best = engine.best_total.map(|r| r + total_susp);
            return Ok(ExactResult {
                status: ExactStatus::Aborted { best },
                evals: engine.evals,
                grid,
            });
        }
        Ok(b) => b.expect("the all-empty completion is always valid"),
    };

    let (witness, sum_r, replay_capped) = engine.replay(&root);
    debug_assert_eq!(replay_capped, branch.capped);
    debug_assert!(branch.capped || sum_r == branch.future);
    let response = branch.future + total_susp;
    let evals = engine.evals;

    // Self-check every verdict against the simulator before reporting it.
    let horizon = Some(response.max(ss.deadline) + Time::one());
    let trace = sim::simulate(ts, &witness, horizon)
        .map_err(|e| ExactError::SelfCheckFailed(format!("witness rejected: {e}")))?;

    if response <= ss.deadline {
        debug_assert!(!branch.capped && !engine.any_capped);
        match trace.outcome {
            SsOutcome::Finished { response: simulated } if simulated == response => {
                Ok(ExactResult {
                    status: ExactStatus::Schedulable { wcrt: response, witness },
                    evals,
                    grid,
                })
            }
            other => Err(ExactError::SelfCheckFailed(format!(
                "claimed response {response}, simulation produced {other:?}"
            ))),
        }
    } else {
        let exact = !engine.any_capped && response <= ss.period;
        match trace.outcome {
            SsOutcome::Finished { response: simulated }
                if simulated == response || (branch.truncated && simulated >= response) => {}
            SsOutcome::Unfinished { .. } if branch.truncated => {}
            other => {
                return Err(ExactError::SelfCheckFailed(format!(
                    "claimed miss response {response}, simulation produced {other:?}"
                )))
            }
        }
        Ok(ExactResult {
            status: ExactStatus::DeadlineMiss { response, exact, witness },
            evals,
            grid,
        })
    }
}
