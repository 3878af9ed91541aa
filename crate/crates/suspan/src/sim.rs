//! Discrete-event schedule simulation for explicit release patterns.
//!
//! A [`ReleasePattern`] fixes every higher-priority release instant, the actual
//! suspension lengths of the suspending task, and optionally per-job execution
//! times (defaulting to the WCETs). The simulator replays fixed-priority
//! preemptive scheduling exactly (rational arithmetic, no rounding) and reports
//! the resulting schedule as a trace.

use serde::{Deserialize, Serialize};

use crate::model::TaskSystem;
use crate::time::Time;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("unknown task id {0} in release pattern")]
    UnknownTask(u32),
    #[error("task id {0} listed more than once in release pattern")]
    DuplicateTask(u32),
    #[error("task {id}: release times must be >= 0 and non-decreasing")]
    UnsortedReleases { id: u32 },
    #[error("task {id}: releases {first} and {second} violate the minimum inter-arrival {period}")]
    MinSpacing { id: u32, first: Time, second: Time, period: Time },
    #[error("suspension list has {got} entries, task has {expected}")]
    SuspensionArity { expected: usize, got: usize },
    #[error("suspension {index} is {value}, outside [0, {bound}]")]
    SuspensionBound { index: usize, value: Time, bound: Time },
    #[error("task {id}: execution-time list does not match its release list")]
    ExecArity { id: u32 },
    #[error("task {id}: execution time {value} outside [0, {bound}]")]
    ExecBound { id: u32, value: Time, bound: Time },
    #[error("segment execution list has {got} entries, task has {expected} segments")]
    SegExecArity { expected: usize, got: usize },
    #[error("segment {index}: execution time {value} outside (0, {bound}]")]
    SegExecBound { index: usize, value: Time, bound: Time },
    #[error("release time of the suspending job must be >= 0")]
    NegativeRelease,
    #[error(
        "suspending job unfinished at the horizon ({completed_segments} segment(s) completed)"
    )]
    Unfinished { completed_segments: usize },
}

/// Release instants for one higher-priority task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskReleases {
    pub id: u32,
    pub releases: Vec<Time>,
}

/// Per-job execution times for one higher-priority task, parallel to its
/// release list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskExecTimes {
    pub id: u32,
    pub times: Vec<Time>,
}

/// A fully explicit scenario: who releases when, how long the suspending task
/// actually suspends, and (optionally) how long each job actually runs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReleasePattern {
    pub hp_releases: Vec<TaskReleases>,
    /// Release instant of the suspending task's job under analysis.
    #[serde(default = "Time::zero")]
    pub ss_release: Time,
    /// Actual suspension lengths, one per gap between consecutive segments.
    pub suspensions: Vec<Time>,
    /// Actual execution times of higher-priority jobs; WCETs when absent.
    #[serde(default)]
    pub exec_times: Option<Vec<TaskExecTimes>>,
    /// Actual execution times of the computation segments; WCETs when absent.
    #[serde(default)]
    pub seg_exec: Option<Vec<Time>>,
}

impl ReleasePattern {
    /// A pattern with no higher-priority releases and maximal suspensions.
    pub fn empty(ts: &TaskSystem) -> Self {
        ReleasePattern {
            hp_releases: Vec::new(),
            ss_release: Time::zero(),
            suspensions: ts.ss_task().suspensions.clone(),
            exec_times: None,
            seg_exec: None,
        }
    }

    /// Checks the pattern against the sporadic model: known ids, sorted releases
    /// with gaps of at least each period, suspensions within bounds, execution
    /// times within WCETs.
    pub fn validate(&self, ts: &TaskSystem) -> Result<(), SimError> {
        if self.ss_release.is_negative() {
            return Err(SimError::NegativeRelease);
        }
        let mut seen = std::collections::HashSet::new();
        for tr in &self.hp_releases {
            let task = ts.hp_task(tr.id).ok_or(SimError::UnknownTask(tr.id))?;
            if !seen.insert(tr.id) {
                return Err(SimError::DuplicateTask(tr.id));
            }
            for r in &tr.releases {
                if r.is_negative() {
                    return Err(SimError::UnsortedReleases { id: tr.id });
                }
            }
            for w in tr.releases.windows(2) {
                if w[1] < w[0] {
                    return Err(SimError::UnsortedReleases { id: tr.id });
                }
                if w[1] - w[0] < task.period {
                    return Err(SimError::MinSpacing {
                        id: tr.id,
                        first: w[0],
                        second: w[1],
                        period: task.period,
                    });
                }
            }
        }
        let ss = ts.ss_task();
        if self.suspensions.len() != ss.suspensions.len() {
            return Err(SimError::SuspensionArity {
                expected: ss.suspensions.len(),
                got: self.suspensions.len(),
            });
        }
        for (i, (&s, &bound)) in self.suspensions.iter().zip(&ss.suspensions).enumerate() {
            if s.is_negative() || s > bound {
                return Err(SimError::SuspensionBound { index: i, value: s, bound });
            }
        }
        if let Some(exec) = &self.exec_times {
            let mut seen = std::collections::HashSet::new();
            for te in exec {
                let task = ts.hp_task(te.id).ok_or(SimError::UnknownTask(te.id))?;
                if !seen.insert(te.id) {
                    return Err(SimError::DuplicateTask(te.id));
                }
                let releases = self
                    .hp_releases
                    .iter()
                    .find(|tr| tr.id == te.id)
                    .map(|tr| tr.releases.len())
                    .unwrap_or(0);
                if te.times.len() != releases {
                    return Err(SimError::ExecArity { id: te.id });
                }
                for &e in &te.times {
                    if e.is_negative() || e > task.wcet {
                        return Err(SimError::ExecBound { id: te.id, value: e, bound: task.wcet });
                    }
                }
            }
        }
        if let Some(seg_exec) = &self.seg_exec {
            if seg_exec.len() != ss.segments.len() {
                return Err(SimError::SegExecArity {
                    expected: ss.segments.len(),
                    got: seg_exec.len(),
                });
            }
            for (i, (&e, &bound)) in seg_exec.iter().zip(&ss.segments).enumerate() {
                if e <= Time::zero() || e > bound {
                    return Err(SimError::SegExecBound { index: i, value: e, bound });
                }
            }
        }
        Ok(())
    }
}

/// Who occupies the processor during a run interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Who {
    Hp { id: u32, job: usize },
    Ss { segment: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Event {
    Release { time: Time, id: u32, job: usize },
    SegmentArrival { time: Time, segment: usize },
    Run { from: Time, to: Time, who: Who },
    Idle { from: Time, to: Time },
    Finish { time: Time, id: u32, job: usize },
    SegmentFinish { time: Time, segment: usize },
}

impl Event {
    fn sort_key(&self) -> (Time, u8) {
        match *self {
            Event::Finish { time, .. } => (time, 0),
            Event::SegmentFinish { time, .. } => (time, 1),
            Event::Release { time, .. } => (time, 2),
            Event::SegmentArrival { time, .. } => (time, 3),
            Event::Run { from, .. } => (from, 4),
            Event::Idle { from, .. } => (from, 4),
        }
    }
}

/// Fate of the suspending job within the simulated horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SsOutcome {
    Finished { response: Time },
    Unfinished { completed_segments: usize },
}

/// One higher-priority job as scheduled.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct JobRecord {
    pub id: u32,
    pub job: usize,
    pub release: Time,
    pub exec: Time,
    pub finish: Option<Time>,
}

/// Full account of one simulated schedule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SimTrace {
    /// Arrival instant of each segment that became ready within the horizon.
    pub seg_arrivals: Vec<Time>,
    /// Finish instant of each segment that completed within the horizon.
    pub seg_finishes: Vec<Time>,
    pub outcome: SsOutcome,
    pub hp_jobs: Vec<JobRecord>,
    pub events: Vec<Event>,
    pub horizon: Time,
}

impl SimTrace {
    pub fn response(&self) -> Option<Time> {
        match self.outcome {
            SsOutcome::Finished { response } => Some(response),
            SsOutcome::Unfinished { .. } => None,
        }
    }

    /// Tab-separated event log: time, event, task, segment, info.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("time\tevent\ttask\tsegment\tinfo\n");
        for e in &self.events {
            let row = match *e {
                Event::Release { time, id, job } => {
                    format!("{time}\trelease\t{id}\t-\tjob={job}")
                }
                Event::SegmentArrival { time, segment } => {
                    format!("{time}\tsegment-arrival\t-\t{segment}\t")
                }
                Event::Run { from, to, who } => match who {
                    Who::Hp { id, job } => format!("{from}\trun\t{id}\t-\tjob={job} until={to}"),
                    Who::Ss { segment } => format!("{from}\trun\t-\t{segment}\tuntil={to}"),
                },
                Event::Idle { from, to } => format!("{from}\tidle\t-\t-\tuntil={to}"),
                Event::Finish { time, id, job } => format!("{time}\tfinish\t{id}\t-\tjob={job}"),
                Event::SegmentFinish { time, segment } => {
                    format!("{time}\tsegment-finish\t-\t{segment}\t")
                }
            };
            out.push_str(&row);
            out.push('\n');
        }
        out
    }
}

/// Horizon that provably covers the whole pattern: after the last arrival no
/// more work appears, so everything outstanding completes within the total
/// work plus total suspension.
pub fn default_horizon(ts: &TaskSystem, rp: &ReleasePattern) -> Time {
    let mut last = rp.ss_release;
    let mut work = Time::zero();
    for tr in &rp.hp_releases {
        let wcet = ts.hp_task(tr.id).map(|t| t.wcet).unwrap_or_else(Time::zero);
        for &r in &tr.releases {
            last = last.max(r);
            work += wcet;
        }
    }
    work += ts.ss_task().total_exec();
    let susp: Time = rp.suspensions.iter().copied().sum();
    last + work + susp + Time::one()
}

struct HpJob {
    task_pos: usize,
    id: u32,
    job: usize,
    release: Time,
    exec: Time,
    remaining: Time,
    finish: Option<Time>,
}

/// Replays the fixed-priority preemptive schedule of `rp` up to `horizon`
/// (default: [`default_horizon`]). The pattern is validated first.
pub fn simulate(
    ts: &TaskSystem,
    rp: &ReleasePattern,
    horizon: Option<Time>,
) -> Result<SimTrace, SimError> {
    rp.validate(ts)?;
    let horizon = horizon.unwrap_or_else(|| default_horizon(ts, rp));
    let ss = ts.ss_task();
    let m = ss.num_segments();

    let mut jobs: Vec<HpJob> = Vec::new();
    for tr in &rp.hp_releases {
        let task_pos = ts.hp_tasks().iter().position(|t| t.id == tr.id).expect("validated id");
        let task = &ts.hp_tasks()[task_pos];
        let exec_list = rp.exec_times.as_ref().and_then(|ex| ex.iter().find(|te| te.id == tr.id));
        for (j, &r) in tr.releases.iter().enumerate() {
            let exec = exec_list.map(|te| te.times[j]).unwrap_or(task.wcet);
            jobs.push(HpJob {
                task_pos,
                id: tr.id,
                job: j,
                release: r,
                exec,
                remaining: exec,
                finish: None,
            });
        }
    }
    // Priority order then release order: the scheduler picks the first ready job
    // in this ordering (jobs of one task run in release order).
    jobs.sort_by_key(|a| (a.task_pos, a.release, a.job));

    let seg_exec: Vec<Time> = rp.seg_exec.clone().unwrap_or_else(|| ss.segments.clone());

    let mut events: Vec<Event> = Vec::new();
    for j in &jobs {
        if j.release < horizon {
            events.push(Event::Release { time: j.release, id: j.id, job: j.job });
        }
    }

    let mut seg_arrivals: Vec<Time> = Vec::new();
    let mut seg_finishes: Vec<Time> = Vec::new();
    // (segment index, arrival time) of the next segment to become ready.
    let mut pending_seg: Option<(usize, Time)> = Some((0, rp.ss_release));
    let mut active_seg: Option<(usize, Time)> = None;
    let mut outcome: Option<SsOutcome> = None;

    let mut t = Time::zero();
    while t < horizon {
        if let Some((seg, at)) = pending_seg {
            if at <= t {
                if at < horizon {
                    events.push(Event::SegmentArrival { time: at, segment: seg });
                }
                seg_arrivals.push(at);
                active_seg = Some((seg, seg_exec[seg]));
                pending_seg = None;
            }
        }

        // Zero-execution jobs finish at release without a run interval.
        for j in jobs.iter_mut() {
            if j.release <= t && j.remaining.is_zero() && j.finish.is_none() {
                j.finish = Some(j.release);
                events.push(Event::Finish { time: j.release, id: j.id, job: j.job });
            }
        }

        // Next instant at which the ready set can change.
        let mut next_change = horizon;
        for j in &jobs {
            if j.release > t && j.release < next_change {
                next_change = j.release;
            }
        }
        if let Some((_, at)) = pending_seg {
            if at > t && at < next_change {
                next_change = at;
            }
        }

        let runnable = jobs.iter().position(|j| j.release <= t && !j.remaining.is_zero());
        if let Some(pos) = runnable {
            let end = (t + jobs[pos].remaining).min(next_change).min(horizon);
            push_run(&mut events, t, end, Who::Hp { id: jobs[pos].id, job: jobs[pos].job });
            jobs[pos].remaining -= end - t;
            if jobs[pos].remaining.is_zero() {
                jobs[pos].finish = Some(end);
                events.push(Event::Finish { time: end, id: jobs[pos].id, job: jobs[pos].job });
            }
            t = end;
            continue;
        }

        if let Some((seg, rem)) = active_seg {
            let end = (t + rem).min(next_change).min(horizon);
            push_run(&mut events, t, end, Who::Ss { segment: seg });
            let left = rem - (end - t);
            if left.is_zero() {
                events.push(Event::SegmentFinish { time: end, segment: seg });
                seg_finishes.push(end);
                active_seg = None;
                if seg + 1 < m {
                    pending_seg = Some((seg + 1, end + rp.suspensions[seg]));
                } else {
                    outcome = Some(SsOutcome::Finished { response: end - rp.ss_release });
                }
            } else {
                active_seg = Some((seg, left));
            }
            t = end;
            continue;
        }

        if next_change <= t {
            break; // nothing ready, nothing pending: done
        }
        events.push(Event::Idle { from: t, to: next_change });
        t = next_change;
    }

    // Finalize zero-execution jobs the loop never revisited.
    for j in jobs.iter_mut() {
        if j.release <= horizon && j.remaining.is_zero() && j.finish.is_none() {
            j.finish = Some(j.release);
            events.push(Event::Finish { time: j.release, id: j.id, job: j.job });
        }
    }

    let outcome =
        outcome.unwrap_or(SsOutcome::Unfinished { completed_segments: seg_finishes.len() });
    let hp_jobs = jobs
        .iter()
        .map(|j| JobRecord {
            id: j.id,
            job: j.job,
            release: j.release,
            exec: j.exec,
            finish: j.finish,
        })
        .collect();
    events.sort_by_key(|e| e.sort_key());
    Ok(SimTrace { seg_arrivals, seg_finishes, outcome, hp_jobs, events, horizon })
}

fn push_run(events: &mut Vec<Event>, from: Time, to: Time, who: Who) {
    if from == to {
        return;
    }
    if let Some(Event::Run { to: prev_to, who: prev_who, .. }) = events.last_mut() {
        if *prev_to == from && *prev_who == who {
            *prev_to = to;
            return;
        }
    }
    events.push(Event::Run { from, to, who });
}

/// Response time of the suspending job under `rp`; error if it does not finish
/// within the default horizon.
pub fn response_time_of_pattern(ts: &TaskSystem, rp: &ReleasePattern) -> Result<Time, SimError> {
    let trace = simulate(ts, rp, None)?;
    match trace.outcome {
        SsOutcome::Finished { response } => Ok(response),
        SsOutcome::Unfinished { completed_segments } => {
            Err(SimError::Unfinished { completed_segments })
        }
    }
}

/// Structural invariants of a finished trace, as an independent oracle:
/// priority compliance (nobody runs while someone strictly higher-priority is
/// pending), work conservation (no idle while anything is ready), per-job
/// execution budgets, and segment precedence with exact suspension gaps.
pub fn verify_schedule_invariants(
    ts: &TaskSystem,
    rp: &ReleasePattern,
    trace: &SimTrace,
) -> Result<(), String> {
    let prio_of = |id: u32| ts.hp_task(id).and_then(|t| t.priority).unwrap_or(u32::MAX);
    // A job is pending throughout (from, to) if released before `to` and
    // unfinished after `from`.
    let pending_overlap = |j: &JobRecord, from: Time, to: Time| {
        j.release < to && j.finish.map(|f| f > from).unwrap_or(true)
    };

    let mut run_total: std::collections::HashMap<(u32, usize), Time> = Default::default();
    for e in &trace.events {
        match *e {
            Event::Run { from, to, who } => {
                if to <= from {
                    return Err(format!("empty run interval at {from}"));
                }
                let cutoff = match who {
                    Who::Hp { id, job } => {
                        *run_total.entry((id, job)).or_insert_with(Time::zero) += to - from;
                        prio_of(id)
                    }
                    Who::Ss { .. } => u32::MAX, // every hp task beats the suspending one
                };
                if let Some(other) = trace
                    .hp_jobs
                    .iter()
                    .find(|j| prio_of(j.id) < cutoff && pending_overlap(j, from, to))
                {
                    return Err(format!(
                        "run in [{from}, {to}) while higher-priority task {} was pending",
                        other.id
                    ));
                }
            }
            Event::Idle { from, to } => {
                if let Some(j) = trace.hp_jobs.iter().find(|j| pending_overlap(j, from, to)) {
                    return Err(format!("idle in [{from}, {to}) while task {} pending", j.id));
                }
                for (i, &a) in trace.seg_arrivals.iter().enumerate() {
                    let unfinished = trace.seg_finishes.get(i).map(|&f| f > from).unwrap_or(true);
                    if a <= from && unfinished {
                        return Err(format!("idle in [{from}, {to}) while segment {i} ready"));
                    }
                }
            }
            _ => {}
        }
    }

    for j in &trace.hp_jobs {
        let ran = run_total.get(&(j.id, j.job)).copied().unwrap_or_else(Time::zero);
        if j.finish.is_some() && ran != j.exec {
            return Err(format!("job {}#{} ran {ran}, declared {}", j.id, j.job, j.exec));
        }
        if let Some(f) = j.finish {
            if f - j.release < j.exec {
                return Err(format!("job {}#{} finished before its execution fits", j.id, j.job));
            }
        }
    }

    for (i, w) in trace.seg_arrivals.windows(2).enumerate() {
        let f = trace
            .seg_finishes
            .get(i)
            .ok_or_else(|| format!("segment {} arrived before {} finished", i + 1, i))?;
        if w[1] != *f + rp.suspensions[i] {
            return Err(format!(
                "segment {} arrival {} != finish {} + suspension {}",
                i + 1,
                w[1],
                f,
                rp.suspensions[i]
            ));
        }
    }
    if let SsOutcome::Finished { response } = trace.outcome {
        let last = trace.seg_finishes.last().copied().unwrap_or_else(Time::zero);
        if response != last - rp.ss_release {
            return Err("reported response does not match last segment finish".into());
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{SegmentedTask, SporadicTask};

    fn two_task_system() -> TaskSystem {
        TaskSystem::new(
            vec![SporadicTask {
                id: 1,
                wcet: Time::int(2),
                period: Time::int(4),
                deadline: Time::int(4),
                priority: None,
            }],
            SegmentedTask {
                segments: vec![Time::int(2), Time::int(1)],
                suspensions: vec![Time::int(8)],
                deadline: Time::int(40),
                period: Time::int(40),
            },
        )
        .unwrap()
    }

    fn pattern(releases: &[i128], susp: i128) -> ReleasePattern {
        ReleasePattern {
            hp_releases: vec![TaskReleases {
                id: 1,
                releases: releases.iter().map(|&r| Time::int(r)).collect(),
            }],
            ss_release: Time::zero(),
            suspensions: vec![Time::int(susp)],
            exec_times: None,
            seg_exec: None,
        }
    }

    #[test]
    fn preemption_and_response() {
        // hp at 0 and 4: segment 1 runs [2,4) and [6,7)? No: segment is ready at 0,
        // hp runs [0,2), segment [2,4), second hp release preempts nothing (segment
        // finished at 4). f_1 = 4.
        let ts = two_task_system();
        let rp = pattern(&[0, 4], 8);
        let trace = simulate(&ts, &rp, None).unwrap();
        assert_eq!(trace.seg_finishes[0], Time::int(4));
        // suspension 8: segment 2 arrives at 12; hp job at 4 done by 6; nothing
        // pending at 12, so f_2 = 13, response 13.
        assert_eq!(trace.outcome, SsOutcome::Finished { response: Time::int(13) });
        verify_schedule_invariants(&ts, &rp, &trace).unwrap();
    }

    #[test]
    fn mid_segment_preemption() {
        let ts = two_task_system();
        let rp = pattern(&[1], 0);
        let trace = simulate(&ts, &rp, None).unwrap();
        // Segment runs [0,1), hp [1,3), segment [3,4). f_1 = 4.
        assert_eq!(trace.seg_finishes[0], Time::int(4));
        assert!(matches!(trace.outcome, SsOutcome::Finished { .. }));
        verify_schedule_invariants(&ts, &rp, &trace).unwrap();
    }

    #[test]
    fn suspension_consumes_wall_clock_without_cpu() {
        let ts = two_task_system();
        // hp released during the suspension runs there without delaying anyone.
        let rp = pattern(&[5], 8);
        let trace = simulate(&ts, &rp, None).unwrap();
        assert_eq!(trace.seg_finishes[0], Time::int(2));
        assert_eq!(trace.seg_arrivals[1], Time::int(10));
        assert_eq!(trace.outcome, SsOutcome::Finished { response: Time::int(11) });
        let has_idle = trace.events.iter().any(|e| matches!(e, Event::Idle { .. }));
        assert!(has_idle, "suspension with no hp work must show idle time");
        verify_schedule_invariants(&ts, &rp, &trace).unwrap();
    }

    #[test]
    fn actual_suspension_shorter_than_bound() {
        let ts = two_task_system();
        let rp = pattern(&[], 3);
        let trace = simulate(&ts, &rp, None).unwrap();
        assert_eq!(trace.outcome, SsOutcome::Finished { response: Time::int(6) });
    }

    #[test]
    fn exec_times_override_wcet() {
        let ts = two_task_system();
        let mut rp = pattern(&[0], 0);
        rp.exec_times = Some(vec![TaskExecTimes { id: 1, times: vec![Time::int(1)] }]);
        let trace = simulate(&ts, &rp, None).unwrap();
        assert_eq!(trace.seg_finishes[0], Time::int(3));
        verify_schedule_invariants(&ts, &rp, &trace).unwrap();
    }

    #[test]
    fn validation_rejects_bad_patterns() {
        let ts = two_task_system();
        let rp = pattern(&[0, 3], 8); // gap 3 < period 4
        assert!(matches!(rp.validate(&ts), Err(SimError::MinSpacing { .. })));
        let rp = pattern(&[0], 9); // suspension above bound
        assert!(matches!(rp.validate(&ts), Err(SimError::SuspensionBound { .. })));
        let mut rp = pattern(&[0], 8);
        rp.hp_releases[0].id = 7;
        assert!(matches!(rp.validate(&ts), Err(SimError::UnknownTask(7))));
    }

    #[test]
    fn unfinished_at_horizon() {
        let ts = two_task_system();
        let rp = pattern(&[], 8);
        let trace = simulate(&ts, &rp, Some(Time::int(5))).unwrap();
        assert_eq!(trace.outcome, SsOutcome::Unfinished { completed_segments: 1 });
        assert!(matches!(
            simulate(&ts, &rp, Some(Time::int(1))).unwrap().outcome,
            SsOutcome::Unfinished { completed_segments: 0 }
        ));
    }

    #[test]
    fn tsv_log_has_header_and_rows() {
        let ts = two_task_system();
        let rp = pattern(&[0], 8);
        let trace = simulate(&ts, &rp, None).unwrap();
        let tsv = trace.to_tsv();
        assert!(tsv.starts_with("time\tevent\ttask\tsegment\tinfo\n"));
        assert!(tsv.lines().count() > 3);
    }

    #[test]
    fn response_wrapper() {
        let ts = two_task_system();
        assert_eq!(response_time_of_pattern(&ts, &pattern(&[0, 4], 8)).unwrap(), Time::int(13));
    }
}
