//! Fixed-point response-time analysis.
//!
//! Provides the classical worst-case response time of the ordinary higher-priority
//! tasks (single-window for constrained deadlines, busy-window for arbitrary ones),
//! a per-segment response bound under a caller-chosen mix of one-shot and periodic
//! interferers, and the closed-form window response used by the hardness reduction.

use crate::model::TaskSystem;
use crate::time::Time;

#[derive(Debug, thiserror::Error)]
pub enum RtaError {
    #[error("unknown task id {0}")]
    UnknownTask(u32),
    #[error("task id {0} listed more than once in the interference spec")]
    DuplicateInterferer(u32),
    #[error("segment index {segment} out of range (task has {count} segments)")]
    SegmentOutOfRange { segment: usize, count: usize },
    #[error("interference demand diverges (utilization {utilization})")]
    Divergence { utilization: Time },
}

/// A periodic interference source: jobs of cost `wcet` released at
/// `offset, offset + period, ...` relative to the window start.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PeriodicTerm {
    pub wcet: Time,
    pub period: Time,
    pub offset: Time,
}

impl PeriodicTerm {
    pub fn new(wcet: Time, period: Time) -> Self {
        PeriodicTerm { wcet, period, offset: Time::zero() }
    }

    /// Demand released strictly before `t` (releases in `[offset, t)`).
    pub fn demand_before(&self, t: Time) -> Time {
        let k = (t - self.offset).ceil_div_int(self.period).max(0);
        self.wcet * k
    }
}

/// Result of a capped least-fixed-point iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixedPoint {
    Converged(Time),
    /// The least fixed point, if any, exceeds the cap.
    ExceededCap,
}

impl FixedPoint {
    pub fn converged(self) -> Option<Time> {
        match self {
            FixedPoint::Converged(t) => Some(t),
            FixedPoint::ExceededCap => None,
        }
    }
}

/// Least `t >= start` with `t = base + sum_i demand_i(t)`, or `ExceededCap` if the
/// iteration passes `cap` first. Demand is monotone, so Kleene iteration from
/// `start` finds the least fixed point above `start`.
pub fn least_fixed_point(base: Time, terms: &[PeriodicTerm], start: Time, cap: Time) -> FixedPoint {
    let mut t = start.max(base);
    loop {
        let next: Time = base + terms.iter().map(|p| p.demand_before(t)).sum::<Time>();
        if next == t {
            return FixedPoint::Converged(t);
        }
        if next > cap {
            return FixedPoint::ExceededCap;
        }
        debug_assert!(next > t, "demand is monotone; iteration must ascend");
        t = next;
    }
}

/// Outcome of [`wcrt_ordinary`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrdinaryRta {
    Schedulable {
        wcrt: Time,
    },
    /// First job of the task (0-based index within the critical-instant busy
    /// window) whose response exceeds the deadline, with that response.
    DeadlineMiss {
        job_index: u64,
        response: Time,
    },
}

/// Worst-case response time of ordinary higher-priority task `id` against the
/// tasks of higher priority than it. Uses the single-window fixed point when
/// `D <= T` and the busy-window analysis otherwise. The suspending task never
/// interferes (it has the lowest priority).
pub fn wcrt_ordinary(ts: &TaskSystem, id: u32) -> Result<OrdinaryRta, RtaError> {
    let task = ts.hp_task(id).ok_or(RtaError::UnknownTask(id))?;
    let hp: Vec<PeriodicTerm> = ts
        .hp_tasks()
        .iter()
        .filter(|t| t.priority < task.priority)
        .map(|t| PeriodicTerm::new(t.wcet, t.period))
        .collect();

    let own = PeriodicTerm::new(task.wcet, task.period);
    let util: Time = hp.iter().chain(std::iter::once(&own)).map(|p| p.wcet / p.period).sum();
    if util > Time::one() {
        return Err(RtaError::Divergence { utilization: util });
    }
    // With utilization exactly 1, level busy period closes by the hyperperiod;
    // below 1 it is bounded by sum(C) / (1 - U).
    let cap = if util == Time::one() {
        hp.iter().chain(std::iter::once(&own)).map(|p| p.period).fold(Time::one(), Time::lcm)
    } else {
        let total_c: Time = hp.iter().chain(std::iter::once(&own)).map(|p| p.wcet).sum();
        total_c / (Time::one() - util)
    };

    if task.deadline <= task.period {
        let f = match least_fixed_point(task.wcet, &hp, task.wcet, cap) {
            FixedPoint::Converged(t) => t,
            FixedPoint::ExceededCap => return Err(RtaError::Divergence { utilization: util }),
        };
        return Ok(if f <= task.deadline {
            OrdinaryRta::Schedulable { wcrt: f }
        } else {
            OrdinaryRta::DeadlineMiss { job_index: 0, response: f }
        });
    }

    // Arbitrary deadline: examine every job in the level busy period.
    let mut all: Vec<PeriodicTerm> = hp.clone();
    all.push(own);
    let busy = match least_fixed_point(Time::zero(), &all, task.wcet, cap) {
        FixedPoint::Converged(t) => t,
        FixedPoint::ExceededCap => return Err(RtaError::Divergence { utilization: util }),
    };
    let jobs = busy.ceil_div_int(task.period).max(1) as u64;
    let mut wcrt = Time::zero();
    for k in 0..jobs {
        let demand = task.wcet * (k as i128 + 1);
        let f = match least_fixed_point(demand, &hp, demand, cap) {
            FixedPoint::Converged(t) => t,
            FixedPoint::ExceededCap => return Err(RtaError::Divergence { utilization: util }),
        };
        let response = f - task.period * (k as i128);
        if response > task.deadline {
            return Ok(OrdinaryRta::DeadlineMiss { job_index: k, response });
        }
        wcrt = wcrt.max(response);
    }
    Ok(OrdinaryRta::Schedulable { wcrt })
}

/// Interference mix for one computation segment: tasks contributing exactly one
/// job at the window start, and tasks released at the window start and then
/// strictly periodically.
#[derive(Debug, Clone, Default)]
pub struct InterferenceSpec {
    pub one_shot: Vec<u32>,
    pub periodic: Vec<u32>,
}

/// Response of computation segment `segment` (0-based) of the suspending task
/// under `spec`: least `t` with
/// `t = C_seg + sum_oneshot(C_i) + sum_periodic(ceil(t / T_i) C_i)`.
pub fn segment_response(
    ts: &TaskSystem,
    segment: usize,
    spec: &InterferenceSpec,
) -> Result<Time, RtaError> {
    let seg_count = ts.ss_task().num_segments();
    if segment >= seg_count {
        return Err(RtaError::SegmentOutOfRange { segment, count: seg_count });
    }
    let mut seen = std::collections::HashSet::new();
    for &id in spec.one_shot.iter().chain(&spec.periodic) {
        if ts.hp_task(id).is_none() {
            return Err(RtaError::UnknownTask(id));
        }
        if !seen.insert(id) {
            return Err(RtaError::DuplicateInterferer(id));
        }
    }

    let mut base = ts.ss_task().segments[segment];
    for &id in &spec.one_shot {
        base += ts.hp_task(id).unwrap().wcet;
    }
    let terms: Vec<PeriodicTerm> = spec
        .periodic
        .iter()
        .map(|&id| {
            let t = ts.hp_task(id).unwrap();
            PeriodicTerm::new(t.wcet, t.period)
        })
        .collect();

    let util: Time = terms.iter().map(|p| p.wcet / p.period).sum();
    if util >= Time::one() {
        return Err(RtaError::Divergence { utilization: util });
    }
    let cap = (base + terms.iter().map(|p| p.wcet).sum::<Time>()) / (Time::one() - util);
    match least_fixed_point(base, &terms, base, cap) {
        FixedPoint::Converged(t) => Ok(t),
        FixedPoint::ExceededCap => Err(RtaError::Divergence { utilization: util }),
    }
}

/// Closed form for the response of one reduction window: a segment of length
/// `v + 1` plus one-shot load `w`, preempted by the pacer task (WCET `v`,
/// period `3v`) released with the window:
/// `r(w) = v + 1 + w + ceil((v + 1 + w) / 2v) * v`.
///
/// Defined for `v >= 3` and `w >= 0`; equals the least fixed point of
/// `t = v + 1 + w + ceil(t / 3v) * v`.
pub fn r_of_w(v: i128, w: Time) -> Time {
    assert!(v >= 3, "pacer block size must be >= 3");
    assert!(!w.is_negative(), "window load must be >= 0");
    let vt = Time::int(v);
    let base = vt + Time::one() + w;
    base + vt * base.ceil_div_int(vt * 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{SegmentedTask, SporadicTask};

    fn system(
        hp: &[(u32, i128, i128, i128)],
        seg: &[i128],
        susp: &[i128],
        d: i128,
        t: i128,
    ) -> TaskSystem {
        let hp = hp
            .iter()
            .map(|&(id, c, t, d)| SporadicTask {
                id,
                wcet: Time::int(c),
                period: Time::int(t),
                deadline: Time::int(d),
                priority: None,
            })
            .collect();
        TaskSystem::new(
            hp,
            SegmentedTask {
                segments: seg.iter().map(|&c| Time::int(c)).collect(),
                suspensions: susp.iter().map(|&s| Time::int(s)).collect(),
                deadline: Time::int(d),
                period: Time::int(t),
            },
        )
        .unwrap()
    }

    #[test]
    fn constrained_wcrt_classic() {
        // R = 3 + ceil(R/4)*1 + ceil(R/6)*2 converges to 10.
        let ts = system(&[(1, 1, 4, 4), (2, 2, 6, 6), (3, 3, 20, 20)], &[1], &[], 100, 100);
        assert_eq!(
            wcrt_ordinary(&ts, 3).unwrap(),
            OrdinaryRta::Schedulable { wcrt: Time::int(10) }
        );
        assert_eq!(wcrt_ordinary(&ts, 1).unwrap(), OrdinaryRta::Schedulable { wcrt: Time::int(1) });
    }

    #[test]
    fn busy_window_wcrt_not_first_job() {
        // Second job of the busy window has the maximal response (86 > 78).
        let ts = system(&[(1, 52, 100, 100), (2, 26, 70, 118)], &[1], &[], 1000, 1000);
        assert_eq!(
            wcrt_ordinary(&ts, 2).unwrap(),
            OrdinaryRta::Schedulable { wcrt: Time::int(86) }
        );
    }

    #[test]
    fn first_miss_reported() {
        let ts = system(&[(1, 3, 6, 6), (2, 3, 7, 5)], &[1], &[], 100, 100);
        // f = 3 + ceil(f/6)*3: 6 -> 3+3, converged 6 > 5.
        assert_eq!(
            wcrt_ordinary(&ts, 2).unwrap(),
            OrdinaryRta::DeadlineMiss { job_index: 0, response: Time::int(6) }
        );
    }

    #[test]
    fn divergence_reported() {
        let ts = system(&[(1, 3, 4, 4), (2, 2, 4, 4)], &[1], &[], 100, 100);
        assert!(matches!(wcrt_ordinary(&ts, 2), Err(RtaError::Divergence { .. })));
    }

    #[test]
    fn utilization_one_converges_via_hyperperiod_cap() {
        let ts = system(&[(1, 1, 3, 3), (2, 2, 3, 3)], &[1], &[], 100, 100);
        assert_eq!(wcrt_ordinary(&ts, 2).unwrap(), OrdinaryRta::Schedulable { wcrt: Time::int(3) });
    }

    #[test]
    fn segment_response_mixes_one_shot_and_periodic() {
        let ts = system(&[(1, 2, 4, 4), (2, 5, 100, 100)], &[2, 1], &[3], 90, 100);
        // Segment 0 with task 2 one-shot, task 1 periodic:
        // t = 2 + 5 + ceil(t/4)*2 -> 7, 11, 13, 15, 15.
        let spec = InterferenceSpec { one_shot: vec![2], periodic: vec![1] };
        assert_eq!(segment_response(&ts, 0, &spec).unwrap(), Time::int(15));
        // No interference: just the segment WCET.
        assert_eq!(segment_response(&ts, 1, &InterferenceSpec::default()).unwrap(), Time::int(1));
    }

    #[test]
    fn segment_response_rejects_bad_specs() {
        let ts = system(&[(1, 2, 4, 4)], &[1], &[], 90, 100);
        assert!(matches!(
            segment_response(&ts, 3, &InterferenceSpec::default()),
            Err(RtaError::SegmentOutOfRange { .. })
        ));
        let spec = InterferenceSpec { one_shot: vec![1], periodic: vec![1] };
        assert!(matches!(segment_response(&ts, 0, &spec), Err(RtaError::DuplicateInterferer(1))));
        let spec = InterferenceSpec { one_shot: vec![9], periodic: vec![] };
        assert!(matches!(segment_response(&ts, 0, &spec), Err(RtaError::UnknownTask(9))));
    }

    #[test]
    fn r_of_w_matches_fixed_point_oracle() {
        for v in [3i128, 4, 10, 13] {
            for wn in 0..=(5 * v) {
                let w = Time::int(wn);
                let base = Time::int(v + 1) + w;
                let terms = [PeriodicTerm::new(Time::int(v), Time::int(3 * v))];
                let oracle =
                    least_fixed_point(base, &terms, base, Time::int(1000 * v)).converged().unwrap();
                assert_eq!(r_of_w(v, w), oracle, "v={v} w={wn}");
            }
        }
    }

    #[test]
    fn r_of_w_rational_loads() {
        let v = 10i128;
        for (num, den, expect) in [
            (35i128, 1i128, Time::int(76)), // w > v: 10+1+35 + ceil(46/20)*10
            (7, 2, Time::ratio(49, 2)),     // w = 7/2 < v-1: 2v+1+w
            (10, 1, Time::int(41)),         // w = v: 4v+1
            (19, 2, Time::ratio(81, 2)),    // w in (v-1, v): 3v+1+w
        ] {
            let w = Time::ratio(num, den);
            let base = Time::int(v + 1) + w;
            let terms = [PeriodicTerm::new(Time::int(v), Time::int(3 * v))];
            let oracle =
                least_fixed_point(base, &terms, base, Time::int(1000 * v)).converged().unwrap();
            assert_eq!(r_of_w(v, w), oracle);
            assert_eq!(r_of_w(v, w), expect);
        }
    }
}
