//! A scalable family on which the count-based model is provably loose.
//!
//! The family has three dense interferers, `m` light interferers, and a
//! suspending task with `m` equal segments. Its true worst-case response
//! grows linearly in the scale parameter `q`, but the model certifies a
//! feasible point whose objective grows with `q * m`, so the ratio between
//! the model bound and the truth grows without limit as the segment count
//! rises. This module builds the family, its hand-derived values, the
//! certified point, and suspension-oblivious baseline bounds.

use serde::Serialize;
use thiserror::Error;

use crate::milp::{
    build_model, check_assignment, MilpAssignment, MilpError, MilpVariant, TaskCounts, TaskOffsets,
};
use crate::model::{SegmentedTask, SporadicTask, TaskSystem};
use crate::rta::{self, FixedPoint, InterferenceSpec, PeriodicTerm, RtaError};
use crate::time::Time;

#[derive(Debug, Error)]
pub enum GapError {
    #[error("invalid family parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Rta(#[from] RtaError),
    #[error(transparent)]
    Milp(#[from] MilpError),
    /// A value this module is supposed to reproduce came out different; the
    /// message names the first mismatch.
    #[error("family claim failed: {0}")]
    Falsification(String),
}

/// Scale `q >= 1`, segment count `m >= 2`, and a positive fraction
/// `eps < 1/q` that keeps the light work strictly below one unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GapFamilyParams {
    pub q: i128,
    pub m: usize,
    pub eps: Time,
}

impl GapFamilyParams {
    pub fn new(q: i128, m: usize) -> Result<Self, GapError> {
        Self::with_eps(q, m, Time::ratio(1, 2 * q.max(1)))
    }

    pub fn with_eps(q: i128, m: usize, eps: Time) -> Result<Self, GapError> {
        if q < 1 {
            return Err(GapError::InvalidParams(format!("scale q = {q} must be at least 1")));
        }
        if m < 1 {
            return Err(GapError::InvalidParams(format!(
                "segment count m = {m} must be at least 1"
            )));
        }
        if eps <= Time::zero() || eps >= Time::ratio(1, q) {
            return Err(GapError::InvalidParams(format!(
                "eps = {eps} must lie strictly between 0 and 1/{q}"
            )));
        }
        Ok(GapFamilyParams { q, m, eps })
    }

    fn m_i128(&self) -> i128 {
        self.m as i128
    }

    /// Common period and deadline of the light tasks and the suspending
    /// task; long enough that light tasks never release twice in any
    /// window of interest.
    fn light_period(&self) -> Time {
        Time::int(
            16 * self.q * self.m_i128() * self.m_i128() + (self.m_i128() - 1) * (2 * self.q - 1),
        )
    }
}

/// The full family: dense tasks (1, 2), (q, 4q), (2q-1+eps, 8q), `m` light
/// tasks (1-eps) with a long shared period, and a suspending task with `m`
/// segments of `1-eps` separated by suspensions of `2q-1`.
pub fn build_gap_family(p: &GapFamilyParams) -> TaskSystem {
    let q = p.q;
    let horizon = p.light_period();
    let mut hp = vec![
        SporadicTask {
            id: 1,
            wcet: Time::one(),
            period: Time::int(2),
            deadline: Time::int(2),
            priority: None,
        },
        SporadicTask {
            id: 2,
            wcet: Time::int(q),
            period: Time::int(4 * q),
            deadline: Time::int(4 * q),
            priority: None,
        },
        SporadicTask {
            id: 3,
            wcet: Time::int(2 * q - 1) + p.eps,
            period: Time::int(8 * q),
            deadline: Time::int(8 * q),
            priority: None,
        },
    ];
    for k in 0..p.m {
        hp.push(SporadicTask {
            id: 4 + k as u32,
            wcet: Time::one() - p.eps,
            period: horizon,
            deadline: Time::int(8 * q * p.m_i128()),
            priority: None,
        });
    }
    let ss = SegmentedTask {
        segments: vec![Time::one() - p.eps; p.m],
        suspensions: vec![Time::int(2 * q - 1); p.m - 1],
        deadline: horizon,
        period: horizon,
    };
    TaskSystem::new(hp, ss).expect("validated parameters always yield a well-formed system")
}

/// The dense tasks alone with a single-segment suspending task; its
/// worst-case segment response is `8q` exactly.
pub fn single_window_subsystem(p: &GapFamilyParams) -> TaskSystem {
    let family = build_gap_family(p);
    let hp = family.hp_tasks()[..3].to_vec();
    let ss = SegmentedTask {
        segments: vec![Time::one() - p.eps],
        suspensions: vec![],
        deadline: Time::int(64 * p.q * p.q),
        period: Time::int(64 * p.q * p.q),
    };
    TaskSystem::new(hp, ss).expect("subsystem keeps the validated dense tasks")
}

/// True worst-case response of the family's suspending task:
/// `16 q m + (m - 1)(2q - 1)`.
pub fn exact_wcrt_formula(p: &GapFamilyParams) -> Time {
    Time::int(16 * p.q * p.m_i128() + (p.m_i128() - 1) * (2 * p.q - 1))
}

/// Sum over segments of the segment response with every interferer
/// periodic from the window start, plus the total suspension. Oblivious to
/// sporadic spacing across windows, hence an upper bound that charges every
/// window the same worst storm.
pub fn split_bound(ts: &TaskSystem) -> Result<Time, RtaError> {
    let spec = InterferenceSpec {
        one_shot: Vec::new(),
        periodic: ts.hp_tasks().iter().map(|t| t.id).collect(),
    };
    let mut total = ts.ss_task().total_suspension();
    for j in 0..ts.ss_task().num_segments() {
        total += rta::segment_response(ts, j, &spec)?;
    }
    Ok(total)
}

/// Single fixed point that treats suspensions as if they were execution:
/// least `t` with `t = total_work + total_suspension + interference(t)`.
pub fn joint_bound(ts: &TaskSystem) -> Result<Time, RtaError> {
    let util = ts.hp_utilization();
    if util >= Time::one() {
        return Err(RtaError::Divergence { utilization: util });
    }
    let base = ts.ss_task().total_exec() + ts.ss_task().total_suspension();
    let hp_work: Time = ts.hp_tasks().iter().map(|t| t.wcet).sum();
    let cap = (base + hp_work) / (Time::one() - util);
    let terms: Vec<PeriodicTerm> =
        ts.hp_tasks().iter().map(|t| PeriodicTerm::new(t.wcet, t.period)).collect();
    match rta::least_fixed_point(base, &terms, base, cap) {
        FixedPoint::Converged(t) => Ok(t),
        FixedPoint::ExceededCap => Err(RtaError::Divergence { utilization: util }),
    }
}

/// Response each window of the certified point attains:
/// `8q^2 + 6q + 1 + q eps`.
fn witness_response(p: &GapFamilyParams) -> Time {
    Time::int(8 * p.q * p.q + 6 * p.q + 1) + p.eps * p.q
}

/// The certified point: in every window the dense tasks contribute
/// `4q^2 + 3q + 1`, `2q + 2`, and `q + 1` jobs at offsets `0`, `eps/4`,
/// `eps/2`, the light tasks contribute nothing, and each response is
/// [`witness_response`]. Works on the full family and on the single-window
/// subsystem alike.
pub fn staggered_witness(p: &GapFamilyParams, ts: &TaskSystem) -> MilpAssignment {
    let m = ts.ss_task().num_segments();
    let q = p.q;
    let dense_counts = [4 * q * q + 3 * q + 1, 2 * q + 2, q + 1];
    let dense_offsets = [Time::zero(), p.eps / Time::int(4), p.eps / Time::int(2)];
    let mut counts = Vec::new();
    let mut offsets = Vec::new();
    for t in ts.hp_tasks() {
        let (n, o) = match t.id {
            1..=3 => (dense_counts[(t.id - 1) as usize], dense_offsets[(t.id - 1) as usize]),
            _ => (0, Time::zero()),
        };
        counts.push(TaskCounts { id: t.id, counts: vec![n; m] });
        offsets.push(TaskOffsets { id: t.id, offsets: vec![o; m] });
    }
    MilpAssignment { counts, offsets, responses: vec![witness_response(p); m] }
}

/// Everything the family demonstrates, in one record.
#[derive(Debug, Clone, Serialize)]
pub struct BoundsReport {
    pub q: i128,
    pub m: usize,
    pub eps: Time,
    /// Per-window response bound (all interferers periodic).
    pub ub_seg: Vec<Time>,
    pub ub_split: Time,
    pub ub_joint: Time,
    /// True worst-case response of the suspending task.
    pub exact: Time,
    /// Objective of the certified point: a lower bound on what the model
    /// can reach.
    pub milp_lb: Time,
    /// `milp_lb / exact`.
    pub ratio: Time,
    /// `(4m + 4) / 9`; only claimed when `q == m`.
    pub threshold: Option<Time>,
    /// Whether the certified point also satisfies the bounded constraint
    /// set with the release guard; only checked when `q == m`.
    pub full_model_feasible: Option<bool>,
}

/// Builds the family, re-derives every closed-form value from first
/// principles, certifies the witness, and reports the bound ratio. Any
/// mismatch between a computed value and its closed form is an error, not a
/// silently adjusted report.
pub fn ratio_report(p: &GapFamilyParams) -> Result<BoundsReport, GapError> {
    let ts = build_gap_family(p);
    let q = p.q;
    let m = p.m_i128();

    let spec = InterferenceSpec {
        one_shot: Vec::new(),
        periodic: ts.hp_tasks().iter().map(|t| t.id).collect(),
    };
    let expected_seg = Time::int(8 * q * (m + 1));
    let mut ub_seg = Vec::with_capacity(p.m);
    for j in 0..p.m {
        let r = rta::segment_response(&ts, j, &spec)?;
        if r != expected_seg {
            return Err(GapError::Falsification(format!(
                "segment {j} bound is {r}, expected {expected_seg}"
            )));
        }
        ub_seg.push(r);
    }

    let ub_split = split_bound(&ts)?;
    let expected_split = Time::int(8 * q * m * (m + 1) + (m - 1) * (2 * q - 1));
    if ub_split != expected_split {
        return Err(GapError::Falsification(format!(
            "split bound is {ub_split}, expected {expected_split}"
        )));
    }
    let ub_joint = joint_bound(&ts)?;

    let witness = staggered_witness(p, &ts);
    let structural = build_model(&ts, MilpVariant::NoBounds)?;
    let report = check_assignment(&structural, &witness)?;
    if !report.feasible {
        let first = report.failures().next().map(|c| format!("{c:?}"));
        return Err(GapError::Falsification(format!(
            "witness violates the structural constraints: {first:?}"
        )));
    }
    let milp_lb = report.objective;
    let expected_lb = Time::int((m - 1) * (2 * q - 1)) + witness_response(p) * m;
    if milp_lb != expected_lb {
        return Err(GapError::Falsification(format!(
            "witness objective is {milp_lb}, expected {expected_lb}"
        )));
    }

    let exact = exact_wcrt_formula(p);
    let ratio = milp_lb / exact;

    let (threshold, full_model_feasible) = if q == m {
        let full = build_model(&ts, MilpVariant::Full)?;
        let full_report = check_assignment(&full, &witness)?;
        if !full_report.feasible {
            let first = full_report.failures().next().map(|c| format!("{c:?}"));
            return Err(GapError::Falsification(format!(
                "witness violates the bounded constraint set at q = m: {first:?}"
            )));
        }
        let threshold = Time::int(4 * m + 4) / Time::int(9);
        if ratio < threshold {
            return Err(GapError::Falsification(format!(
                "ratio {ratio} fell below the claimed threshold {threshold}"
            )));
        }
        (Some(threshold), Some(true))
    } else {
        (None, None)
    };

    Ok(BoundsReport {
        q,
        m: p.m,
        eps: p.eps,
        ub_seg,
        ub_split,
        ub_joint,
        exact,
        milp_lb,
        ratio,
        threshold,
        full_model_feasible,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{exact_wcrt, ExactStatus, SearchConfig};
    use proptest::prelude::*;

    fn params(q: i128, m: usize) -> GapFamilyParams {
        GapFamilyParams::new(q, m).unwrap()
    }

    #[test]
    fn family_catalog_matches_hand_values() {
        let p = GapFamilyParams::with_eps(2, 2, Time::ratio(1, 4)).unwrap();
        let ts = build_gap_family(&p);
        let hp = ts.hp_tasks();
        assert_eq!(hp.len(), 5);
        assert_eq!((hp[0].wcet, hp[0].period), (Time::int(1), Time::int(2)));
        assert_eq!((hp[1].wcet, hp[1].period), (Time::int(2), Time::int(8)));
        assert_eq!((hp[2].wcet, hp[2].period), (Time::ratio(13, 4), Time::int(16)));
        for light in &hp[3..] {
            assert_eq!(light.wcet, Time::ratio(3, 4));
            assert_eq!(light.deadline, Time::int(32));
            assert_eq!(light.period, Time::int(131));
        }
        let ss = ts.ss_task();
        assert_eq!(ss.segments, vec![Time::ratio(3, 4); 2]);
        assert_eq!(ss.suspensions, vec![Time::int(3)]);
        assert_eq!(ss.deadline, Time::int(131));
        assert!(ts.hp_utilization() < Time::one());
    }

    #[test]
    fn parameter_validation_rejects_degenerate_families() {
        assert!(GapFamilyParams::new(0, 2).is_err());
        assert!(GapFamilyParams::new(1, 0).is_err());
        assert!(GapFamilyParams::with_eps(2, 2, Time::ratio(1, 2)).is_err());
        assert!(GapFamilyParams::with_eps(2, 2, Time::zero()).is_err());
        // a one-segment family is degenerate but well-formed
        let p = GapFamilyParams::new(1, 1).unwrap();
        let ts = build_gap_family(&p);
        assert_eq!(ts.hp_tasks().len(), 4);
        assert!(ts.ss_task().suspensions.is_empty());
        assert_eq!(exact_wcrt_formula(&p), Time::int(16));
    }

    #[test]
    fn true_response_formula_spot_values() {
        assert_eq!(exact_wcrt_formula(&params(1, 2)), Time::int(33));
        assert_eq!(exact_wcrt_formula(&params(2, 2)), Time::int(67));
        assert_eq!(exact_wcrt_formula(&params(1, 3)), Time::int(50));
    }

    #[test]
    fn search_engine_confirms_the_formula_at_small_scale() {
        let p = params(1, 2);
        let ts = build_gap_family(&p);
        let res = exact_wcrt(&ts, &SearchConfig::default()).unwrap();
        match res.status {
            ExactStatus::Schedulable { wcrt, .. } => {
                assert_eq!(wcrt, exact_wcrt_formula(&p));
            }
            other => panic!("family must be schedulable, got {other:?}"),
        }
    }

    #[test]
    fn single_window_truth_is_eight_q() {
        let p = params(1, 2);
        let sub = single_window_subsystem(&p);
        let res = exact_wcrt(&sub, &SearchConfig::default()).unwrap();
        match res.status {
            ExactStatus::Schedulable { wcrt, .. } => assert_eq!(wcrt, Time::int(8)),
            other => panic!("subsystem must be schedulable, got {other:?}"),
        }
    }

    #[test]
    fn storm_fixed_point_scales_with_one_shot_work() {
        // adding one-shot light jobs moves the fixed point by 8q per unit
        for q in [1i128, 2, 3] {
            let p = params(q, 3);
            let ts = build_gap_family(&p);
            for x in 1..=3usize {
                let spec = InterferenceSpec {
                    one_shot: (4..4 + (x as u32 - 1)).collect(),
                    periodic: vec![1, 2, 3],
                };
                let r = rta::segment_response(&ts, 0, &spec).unwrap();
                assert_eq!(r, Time::int(8 * q * x as i128), "q = {q}, x = {x}");
            }
        }
    }

    #[test]
    fn report_reproduces_the_headline_numbers() {
        let p = GapFamilyParams::with_eps(2, 2, Time::ratio(1, 4)).unwrap();
        let rep = ratio_report(&p).unwrap();
        assert_eq!(rep.ub_seg, vec![Time::int(48); 2]);
        assert_eq!(rep.ub_split, Time::int(99));
        assert!(rep.ub_joint >= rep.ub_split);
        assert_eq!(rep.exact, Time::int(67));
        assert_eq!(rep.milp_lb, Time::int(94));
        assert_eq!(rep.ratio, Time::ratio(94, 67));
        assert_eq!(rep.threshold, Some(Time::ratio(4, 3)));
        assert_eq!(rep.full_model_feasible, Some(true));
        assert!(rep.ratio >= Time::ratio(4, 3));
    }

    #[test]
    fn mismatched_scale_skips_full_model_claims() {
        let rep = ratio_report(&params(1, 3)).unwrap();
        assert_eq!(rep.threshold, None);
        assert_eq!(rep.full_model_feasible, None);
        assert_eq!(rep.exact, Time::int(50));
        assert_eq!(rep.milp_lb, Time::ratio(97, 2));
    }

    proptest! {
        // The witness stays structurally feasible across the whole legal
        // eps range, not just the showcased value.
        #[test]
        fn witness_feasible_for_any_legal_eps(k in 1i128..32) {
            let p = GapFamilyParams::with_eps(2, 2, Time::ratio(k, 64)).unwrap();
            let ts = build_gap_family(&p);
            let witness = staggered_witness(&p, &ts);
            let model = build_model(&ts, MilpVariant::NoBounds).unwrap();
            let report = check_assignment(&model, &witness).unwrap();
            prop_assert!(report.feasible);
            prop_assert_eq!(
                report.objective,
                Time::int(3) + witness_response(&p) * 2
            );
        }
    }
}
