//! 3-PARTITION machinery: instance validation, planted generators, a
//! brute-force oracle, the reduction that turns an instance into a task
//! system whose suspending task misses its deadline exactly when the
//! instance is satisfiable, direct evaluation of partitions through the
//! per-window response function, and the load-rebalancing procedure that
//! pins the miss threshold.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{exact_wcrt, ExactError, ExactStatus, SearchConfig};
use crate::model::{SegmentedTask, SporadicTask, TaskSystem};
use crate::rta::r_of_w;
use crate::time::Time;

#[derive(Debug, Error)]
pub enum HardnessError {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("invalid assignment: {0}")]
    InvalidAssignment(String),
    #[error("{what} supports at most {max} sets, got {got}")]
    TooLarge { what: &'static str, max: usize, got: usize },
    #[error(transparent)]
    Exact(#[from] ExactError),
    /// A claim this module is supposed to reproduce came out different.
    #[error("reduction claim failed: {0}")]
    Falsification(String),
}

/// Items to be partitioned into triples, each triple summing to `v`.
///
/// Construction enforces `1 <= value` and the strict window
/// `v/4 < value < v/2`, which forces every set of a solution to hold
/// exactly three items. A well-posed instance also has the values summing
/// to `m * v` (see [`sum_matches`](Self::sum_matches)); the planted NO
/// generator deliberately emits sums one short of that, which keeps the
/// instance unsatisfiable for provable reasons, so the sum is reported
/// rather than enforced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionInstance {
    pub m: usize,
    pub v: i128,
    pub values: Vec<i128>,
}

impl PartitionInstance {
    pub fn new(m: usize, v: i128, values: Vec<i128>) -> Result<Self, HardnessError> {
        if m < 3 {
            return Err(HardnessError::InvalidInstance(format!(
                "set count m = {m} must be at least 3"
            )));
        }
        if v < 3 {
            return Err(HardnessError::InvalidInstance(format!(
                "target v = {v} must be at least 3"
            )));
        }
        if values.len() != 3 * m {
            return Err(HardnessError::InvalidInstance(format!(
                "{} values for m = {m} (need {})",
                values.len(),
                3 * m
            )));
        }
        for (i, &val) in values.iter().enumerate() {
            if val < 1 || 4 * val <= v || 2 * val >= v {
                return Err(HardnessError::InvalidInstance(format!(
                    "value {val} at position {i} is outside ({v}/4, {v}/2)"
                )));
            }
        }
        Ok(PartitionInstance { m, v, values })
    }

    /// Whether the values carry the satisfiability promise `sum = m * v`.
    pub fn sum_matches(&self) -> bool {
        self.values.iter().sum::<i128>() == self.m as i128 * self.v
    }

    /// The response-sum threshold `m(4v+1) - v`: a partition misses the
    /// reduced task's deadline exactly when its response sum is strictly
    /// above this.
    pub fn miss_threshold(&self) -> Time {
        Time::int(self.m as i128 * (4 * self.v + 1) - self.v)
    }
}

/// A partition of the item indices into `m` triples, with the triple sums.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PartitionAssignment {
    pub sets: Vec<Vec<usize>>,
    pub loads: Vec<i128>,
}

impl PartitionAssignment {
    /// Validates that `sets` are `m` disjoint triples covering every item
    /// index and computes their loads.
    pub fn new(inst: &PartitionInstance, sets: Vec<Vec<usize>>) -> Result<Self, HardnessError> {
        if sets.len() != inst.m {
            return Err(HardnessError::InvalidAssignment(format!(
                "{} sets for m = {}",
                sets.len(),
                inst.m
            )));
        }
        let mut seen = vec![false; inst.values.len()];
        for (j, set) in sets.iter().enumerate() {
            if set.len() != 3 {
                return Err(HardnessError::InvalidAssignment(format!(
                    "set {j} has {} items instead of 3",
                    set.len()
                )));
            }
            for &i in set {
                if i >= inst.values.len() {
                    return Err(HardnessError::InvalidAssignment(format!(
                        "index {i} out of range in set {j}"
                    )));
                }
                if seen[i] {
                    return Err(HardnessError::InvalidAssignment(format!(
                        "index {i} assigned twice"
                    )));
                }
                seen[i] = true;
            }
        }
        // sets.len() * 3 == values.len() and no duplicates, so all covered
        let loads = sets.iter().map(|set| set.iter().map(|&i| inst.values[i]).sum()).collect();
        Ok(PartitionAssignment { sets, loads })
    }
}

/// Response sum of a partition and whether it crosses the miss threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PartitionOutcome {
    pub sum_r: Time,
    pub misses: bool,
}

/// Evaluates a partition: each window's response is `r_of_w` of its load,
/// and the reduced task misses exactly when the responses sum strictly
/// above `m(4v+1) - v`.
pub fn evaluate_partition(
    inst: &PartitionInstance,
    a: &PartitionAssignment,
) -> Result<PartitionOutcome, HardnessError> {
    // revalidate against this instance; the assignment may have been built
    // for another one
    let a = PartitionAssignment::new(inst, a.sets.clone())?;
    let sum_r: Time = a.loads.iter().map(|&w| r_of_w(inst.v, Time::int(w))).sum();
    Ok(PartitionOutcome { sum_r, misses: sum_r > inst.miss_threshold() })
}

/// Exhaustive maximum of the response sum over every partition into
/// triples, with a partition attaining it (first in canonical order).
pub fn max_partition_response(
    inst: &PartitionInstance,
) -> Result<(Time, PartitionAssignment), HardnessError> {
    if inst.m > 5 {
        return Err(HardnessError::TooLarge {
            what: "exhaustive partition sweep",
            max: 5,
            got: inst.m,
        });
    }
    let n = inst.values.len();
    let mut used = vec![false; n];
    let mut sets: Vec<Vec<usize>> = Vec::with_capacity(inst.m);
    let mut best: Option<(Time, Vec<Vec<usize>>)> = None;
    // canonical order: each set starts at the lowest unused index, so every
    // unordered partition appears exactly once
    fn recurse(
        inst: &PartitionInstance,
        used: &mut [bool],
        sets: &mut Vec<Vec<usize>>,
        best: &mut Option<(Time, Vec<Vec<usize>>)>,
    ) {
        let Some(first) = used.iter().position(|&u| !u) else {
            let sum: Time = sets
                .iter()
                .map(|s| {
                    let w: i128 = s.iter().map(|&i| inst.values[i]).sum();
                    r_of_w(inst.v, Time::int(w))
                })
                .sum();
            if best.as_ref().is_none_or(|(b, _)| sum > *b) {
                *best = Some((sum, sets.clone()));
            }
            return;
        };
        used[first] = true;
        let n = used.len();
        for j in first + 1..n {
            if used[j] {
                continue;
            }
            used[j] = true;
            for k in j + 1..n {
                if used[k] {
                    continue;
                }
                used[k] = true;
                sets.push(vec![first, j, k]);
                recurse(inst, used, sets, best);
                sets.pop();
                used[k] = false;
            }
            used[j] = false;
        }
        used[first] = false;
    }
    recurse(inst, &mut used, &mut sets, &mut best);
    let (sum, sets) = best.expect("at least one partition of 3m items exists");
    Ok((sum, PartitionAssignment::new(inst, sets)?))
}

/// Brute-force oracle: a partition into triples each summing to `v`, or
/// `None`. Capped at `m <= 5`.
pub fn solve_3partition(
    inst: &PartitionInstance,
) -> Result<Option<PartitionAssignment>, HardnessError> {
    if inst.m > 5 {
        return Err(HardnessError::TooLarge { what: "3-partition oracle", max: 5, got: inst.m });
    }
    if !inst.sum_matches() {
        // triples each summing to v need the total to be exactly m * v
        return Ok(None);
    }
    let n = inst.values.len();
    let mut used = vec![false; n];
    let mut sets: Vec<Vec<usize>> = Vec::with_capacity(inst.m);
    fn recurse(
        inst: &PartitionInstance,
        used: &mut [bool],
        sets: &mut Vec<Vec<usize>>,
    ) -> Option<Vec<Vec<usize>>> {
        let Some(first) = used.iter().position(|&u| !u) else {
            return Some(sets.clone());
        };
        used[first] = true;
        let n = used.len();
        for j in first + 1..n {
            if used[j] || inst.values[first] + inst.values[j] >= inst.v {
                continue;
            }
            used[j] = true;
            for k in j + 1..n {
                if used[k] || inst.values[first] + inst.values[j] + inst.values[k] != inst.v {
                    continue;
                }
                used[k] = true;
                sets.push(vec![first, j, k]);
                if let Some(found) = recurse(inst, used, sets) {
                    return Some(found);
                }
                sets.pop();
                used[k] = false;
            }
            used[j] = false;
        }
        used[first] = false;
        None
    }
    match recurse(inst, &mut used, &mut sets) {
        Some(sets) => Ok(Some(PartitionAssignment::new(inst, sets)?)),
        None => Ok(None),
    }
}

fn valid_triples(v: i128) -> Vec<[i128; 3]> {
    let lo = v / 4 + 1; // smallest integer strictly above v/4
    let hi = (v - 1) / 2; // largest integer strictly below v/2
    let mut triples = Vec::new();
    for a in lo..=hi {
        for b in a..=hi {
            let c = v - a - b;
            if c >= b && c <= hi {
                triples.push([a, b, c]);
            }
        }
    }
    triples
}

/// A satisfiable instance: `m` random valid triples, shuffled together.
pub fn plant_yes<R: Rng>(
    m: usize,
    v: i128,
    rng: &mut R,
) -> Result<PartitionInstance, HardnessError> {
    let triples = valid_triples(v);
    if triples.is_empty() {
        return Err(HardnessError::InvalidInstance(format!(
            "no integer triple fits the ({v}/4, {v}/2) window with sum {v}"
        )));
    }
    let mut values = Vec::with_capacity(3 * m);
    for _ in 0..m {
        let t = triples.choose(rng).expect("non-empty");
        values.extend_from_slice(t);
    }
    values.shuffle(rng);
    PartitionInstance::new(m, v, values)
}

/// An unsatisfiable instance: a satisfiable one with a single value lowered
/// by 1 (bounds permitting). The sum lands one short of `m * v`, so no
/// partition into exact-`v` triples exists; and with the sum one short,
/// every load vector stays strictly below the miss threshold, so the
/// reduced system is schedulable. Raising a value instead would not be
/// safe: a sum one above `m * v` can cross the threshold without any
/// triple summing to `v`.
pub fn plant_no<R: Rng>(
    m: usize,
    v: i128,
    rng: &mut R,
) -> Result<PartitionInstance, HardnessError> {
    let mut inst = plant_yes(m, v, rng)?;
    let shiftable: Vec<usize> = (0..inst.values.len())
        .filter(|&i| {
            let down = inst.values[i] - 1;
            down >= 1 && 4 * down > v
        })
        .collect();
    let Some(&pick) = shiftable.choose(rng) else {
        return Err(HardnessError::InvalidInstance(format!(
            "no value at v = {v} can drop by 1 and stay above {v}/4; every \
             well-formed instance at this scale is satisfiable"
        )));
    };
    inst.values[pick] -= 1;
    PartitionInstance::new(m, v, inst.values)
}

/// Which deadline/period profile the reduction emits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReductionVariant {
    /// Constrained deadlines: the suspending task's deadline is strictly
    /// below its period.
    Constrained,
    /// Implicit deadlines: every task except the pacer gets deadline equal
    /// to period equal to the constrained variant's suspending deadline.
    Implicit,
    /// Constrained shape with suspensions shortened to `2v`; the pacer's
    /// idle gap exactly fills them.
    Footnote2V,
}

/// The parameter-only part of the reduction: every time value except the
/// item execution times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ReductionShape {
    /// Pacer task: execution `v`, one release every `3v`.
    pub pacer_deadline: Time,
    pub pacer_period: Time,
    /// Item tasks carrying the instance values.
    pub item_deadline: Time,
    pub item_period: Time,
    /// Suspending task: `m` segments of `v + 1`.
    pub segment: Time,
    pub suspension: Time,
    pub ss_deadline: Time,
    pub ss_period: Time,
}

pub fn reduction_shape(m: usize, v: i128, variant: ReductionVariant) -> ReductionShape {
    let m_i = m as i128;
    let long_period = Time::int(21 * m_i * v);
    // m(4v+1) - v plus one full suspension gap per interior window
    let miss_deadline = |gap: i128| Time::int(m_i * (4 * v + 1) - v + gap * (m_i - 1));
    let item_deadline = if m.is_multiple_of(2) {
        Time::ratio(3 * m_i * v, 2)
    } else {
        Time::ratio(3 * m_i * v + v, 2)
    };
    match variant {
        ReductionVariant::Constrained => ReductionShape {
            pacer_deadline: Time::int(v),
            pacer_period: Time::int(3 * v),
            item_deadline,
            item_period: long_period,
            segment: Time::int(v + 1),
            suspension: Time::int(6 * v),
            ss_deadline: miss_deadline(6 * v),
            ss_period: long_period,
        },
        ReductionVariant::Footnote2V => ReductionShape {
            pacer_deadline: Time::int(v),
            pacer_period: Time::int(3 * v),
            item_deadline,
            item_period: long_period,
            segment: Time::int(v + 1),
            suspension: Time::int(2 * v),
            ss_deadline: miss_deadline(2 * v),
            ss_period: long_period,
        },
        ReductionVariant::Implicit => {
            let shared = miss_deadline(6 * v);
            ReductionShape {
                pacer_deadline: Time::int(3 * v),
                pacer_period: Time::int(3 * v),
                item_deadline: shared,
                item_period: shared,
                segment: Time::int(v + 1),
                suspension: Time::int(6 * v),
                ss_deadline: shared,
                ss_period: shared,
            }
        }
    }
}

/// Builds the reduced task system: pacer (id 1), one item task per value
/// (ids 2..), and the suspending task with one segment per set. Priorities
/// follow listing order, pacer highest.
pub fn build_reduction(inst: &PartitionInstance, variant: ReductionVariant) -> TaskSystem {
    let shape = reduction_shape(inst.m, inst.v, variant);
    let mut hp = Vec::with_capacity(1 + inst.values.len());
    hp.push(SporadicTask {
        id: 1,
        wcet: Time::int(inst.v),
        period: shape.pacer_period,
        deadline: shape.pacer_deadline,
        priority: None,
    });
    for (i, &val) in inst.values.iter().enumerate() {
        hp.push(SporadicTask {
            id: 2 + i as u32,
            wcet: Time::int(val),
            period: shape.item_period,
            deadline: shape.item_deadline,
            priority: None,
        });
    }
    let ss = SegmentedTask {
        segments: vec![shape.segment; inst.m],
        suspensions: vec![shape.suspension; inst.m - 1],
        deadline: shape.ss_deadline,
        period: shape.ss_period,
    };
    TaskSystem::new(hp, ss).expect("validated instances yield well-formed systems")
}

/// One state of the rebalancing procedure: current loads, their response
/// sum, and the index sets below (`x`) and above (`y`) the target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RebalanceStep {
    pub w: Vec<Time>,
    pub sum_r: Time,
    pub x: Vec<usize>,
    pub y: Vec<usize>,
}

fn rebalance_step(v: i128, w: &[Time]) -> RebalanceStep {
    let target = Time::int(v);
    RebalanceStep {
        w: w.to_vec(),
        sum_r: w.iter().map(|&load| r_of_w(v, load)).sum(),
        x: (0..w.len()).filter(|&j| w[j] < target).collect(),
        y: (0..w.len()).filter(|&j| w[j] > target).collect(),
    }
}

/// Replays the rebalancing argument on a load vector summing to `m * v`:
/// first any load above `2v` donates to the most deficient load until none
/// remains that high, then each most-deficient load is filled to `v` from
/// the lowest-indexed surplus loads. Ends with every load at `v`, so the
/// all-`v` vector maximizes the response sum.
///
/// For integer loads every donation step keeps the sum or raises it by
/// exactly `v`, and every fill step raises it by exactly `v`; both facts
/// are checked and a violation is an error. Fractional loads rebalance the
/// same way but carry no per-step guarantee.
pub fn rebalance_trace(w: &[Time], v: i128) -> Result<Vec<RebalanceStep>, HardnessError> {
    if v < 3 {
        return Err(HardnessError::InvalidInstance(format!("target v = {v} must be at least 3")));
    }
    if w.is_empty() {
        return Err(HardnessError::InvalidInstance("empty load vector".to_string()));
    }
    if w.iter().any(|load| load.is_negative()) {
        return Err(HardnessError::InvalidInstance("negative load".to_string()));
    }
    let total: Time = w.iter().copied().sum();
    let expected = Time::int(w.len() as i128 * v);
    if total != expected {
        return Err(HardnessError::InvalidInstance(format!(
            "loads sum to {total}, need {expected}"
        )));
    }

    let integral = w.iter().all(|load| load.is_integer());
    let target = Time::int(v);
    let double = Time::int(2 * v);
    let mut w = w.to_vec();
    let mut steps = vec![rebalance_step(v, &w)];

    let most_deficient = |w: &[Time]| -> Option<usize> {
        let mut arg: Option<usize> = None;
        for (j, load) in w.iter().enumerate() {
            if *load < target && arg.is_none_or(|a| *load < w[a]) {
                arg = Some(j);
            }
        }
        arg
    };
    let push_checked = |w: &[Time], steps: &mut Vec<RebalanceStep>, bump: Option<Time>| {
        let step = rebalance_step(v, w);
        let prev = steps.last().expect("initial step present").sum_r;
        if integral {
            let ok = match bump {
                Some(exact) => step.sum_r == prev + exact,
                None => step.sum_r == prev || step.sum_r == prev + target,
            };
            if !ok {
                return Err(HardnessError::Falsification(format!(
                    "integer rebalance step moved the sum from {prev} to {}",
                    step.sum_r
                )));
            }
        }
        steps.push(step);
        Ok(())
    };

    // donation phase: some load above 2v exists, so some load is below v
    while let Some(donor) = w.iter().position(|load| *load > double) {
        let receiver =
            most_deficient(&w).expect("a load above 2v forces another below v when the sum is m*v");
        let t = target - w[receiver];
        w[receiver] = target;
        w[donor] -= t;
        push_checked(&w, &mut steps, None)?;
    }

    // fill phase: match each most-deficient load against surplus loads in
    // index order
    while let Some(receiver) = most_deficient(&w) {
        let mut need = target - w[receiver];
        w[receiver] = target;
        for load in w.iter_mut() {
            if *load <= target {
                continue;
            }
            let surplus = *load - target;
            if surplus >= need {
                *load -= need;
                need = Time::zero();
                break;
            }
            *load = target;
            need -= surplus;
        }
        if !need.is_zero() {
            return Err(HardnessError::Falsification(
                "fill phase ran out of surplus with the sum pinned to m*v".to_string(),
            ));
        }
        push_checked(&w, &mut steps, Some(target))?;
    }

    let last = steps.last().expect("at least the initial step");
    if last.w.iter().any(|load| *load != target) {
        return Err(HardnessError::Falsification(
            "rebalance terminated away from the all-v vector".to_string(),
        ));
    }
    Ok(steps)
}

/// Everything the three verdict routes computed for one instance.
#[derive(Debug, Clone, Serialize)]
pub struct CrossCheckReport {
    pub has_partition: bool,
    pub witness: Option<PartitionAssignment>,
    pub threshold: Time,
    pub max_sum: Time,
    pub max_assignment: PartitionAssignment,
    pub exhaustive_miss: bool,
    pub constrained_miss: bool,
    pub implicit_miss: bool,
}

fn engine_misses(ts: &TaskSystem) -> Result<bool, HardnessError> {
    let res = exact_wcrt(ts, &SearchConfig::default())?;
    match res.status {
        ExactStatus::Schedulable { .. } => Ok(false),
        ExactStatus::DeadlineMiss { .. } => Ok(true),
        ExactStatus::Aborted { .. } => {
            Err(HardnessError::Falsification("search aborted with an unlimited budget".to_string()))
        }
    }
}

/// Runs the three verdict routes on one instance: the brute-force oracle,
/// the exhaustive partition sweep against the miss threshold, and the
/// exact search engine on the constrained and implicit reductions. Any
/// disagreement is an error, never reconciled silently. Capped at
/// `m <= 4`.
pub fn cross_check_reduction(inst: &PartitionInstance) -> Result<CrossCheckReport, HardnessError> {
    if inst.m > 4 {
        return Err(HardnessError::TooLarge { what: "reduction cross-check", max: 4, got: inst.m });
    }
    let witness = solve_3partition(inst)?;
    let has_partition = witness.is_some();
    let threshold = inst.miss_threshold();
    let (max_sum, max_assignment) = max_partition_response(inst)?;
    let exhaustive_miss = max_sum > threshold;
    let constrained_miss = engine_misses(&build_reduction(inst, ReductionVariant::Constrained))?;
    let implicit_miss = engine_misses(&build_reduction(inst, ReductionVariant::Implicit))?;
    if exhaustive_miss != has_partition
        || constrained_miss != has_partition
        || implicit_miss != has_partition
    {
        return Err(HardnessError::Falsification(format!(
            "verdicts disagree: oracle {has_partition}, sweep {exhaustive_miss}, \
             constrained engine {constrained_miss}, implicit engine {implicit_miss}"
        )));
    }
    Ok(CrossCheckReport {
        has_partition,
        witness,
        threshold,
        max_sum,
        max_assignment,
        exhaustive_miss,
        constrained_miss,
        implicit_miss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rta::{wcrt_ordinary, OrdinaryRta};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn uniform_instance(m: usize, v: i128, val: i128) -> PartitionInstance {
        PartitionInstance::new(m, v, vec![val; 3 * m]).unwrap()
    }

    #[test]
    fn instance_validation_enforces_the_window() {
        assert!(PartitionInstance::new(3, 6, vec![2; 9]).is_ok());
        // 2*3 = 6 touches the upper bound
        assert!(PartitionInstance::new(3, 6, vec![3; 9]).is_err());
        // 4*1 = 4 touches the lower bound at v = 4
        assert!(PartitionInstance::new(3, 4, vec![1; 9]).is_err());
        assert!(PartitionInstance::new(2, 6, vec![2; 6]).is_err());
        assert!(PartitionInstance::new(3, 6, vec![2; 8]).is_err());
        let off = PartitionInstance::new(3, 7, vec![2, 2, 2, 2, 2, 2, 2, 2, 2]).unwrap();
        assert!(!off.sum_matches());
        let on = PartitionInstance::new(3, 7, vec![3, 2, 2, 2, 3, 2, 2, 2, 3]).unwrap();
        assert!(on.sum_matches());
    }

    #[test]
    fn reduction_dimensions_match_hand_values() {
        let c = reduction_shape(3, 4, ReductionVariant::Constrained);
        assert_eq!(c.ss_deadline, Time::int(95));
        assert_eq!(c.segment, Time::int(5));
        assert_eq!(c.suspension, Time::int(24));
        assert_eq!(c.ss_period, Time::int(252));
        assert_eq!(c.pacer_deadline, Time::int(4));
        assert_eq!(c.pacer_period, Time::int(12));
        // parity of m decides the item deadline
        assert_eq!(
            reduction_shape(4, 4, ReductionVariant::Constrained).item_deadline,
            Time::int(24)
        );
        assert_eq!(c.item_deadline, Time::int(20));

        let f = reduction_shape(3, 4, ReductionVariant::Footnote2V);
        assert_eq!(f.suspension, Time::int(8));
        assert_eq!(f.ss_deadline, Time::int(63));
        assert_eq!(f.item_deadline, c.item_deadline);

        let i = reduction_shape(3, 4, ReductionVariant::Implicit);
        assert_eq!(i.pacer_deadline, Time::int(12));
        assert_eq!(i.item_deadline, Time::int(95));
        assert_eq!(i.item_period, Time::int(95));
        assert_eq!(i.ss_deadline, Time::int(95));
        assert_eq!(i.ss_period, Time::int(95));
    }

    #[test]
    fn reduction_assembles_the_task_system() {
        let inst = uniform_instance(3, 6, 2);
        let ts = build_reduction(&inst, ReductionVariant::Constrained);
        assert_eq!(ts.hp_tasks().len(), 10);
        let pacer = &ts.hp_tasks()[0];
        assert_eq!((pacer.id, pacer.wcet, pacer.period), (1, Time::int(6), Time::int(18)));
        for item in &ts.hp_tasks()[1..] {
            assert_eq!(item.wcet, Time::int(2));
            assert_eq!(item.period, Time::int(378));
            assert_eq!(item.deadline, Time::int(30));
        }
        assert_eq!(ts.ss_task().segments, vec![Time::int(7); 3]);
        assert_eq!(ts.ss_task().suspensions, vec![Time::int(36); 2]);
        assert_eq!(ts.ss_task().deadline, Time::int(141));
        assert!(ts.hp_utilization() < Time::one());
    }

    #[test]
    fn all_reduction_interferers_meet_their_deadlines() {
        let inst = PartitionInstance::new(3, 7, vec![3, 2, 2, 2, 3, 2, 2, 2, 3]).unwrap();
        for variant in [
            ReductionVariant::Constrained,
            ReductionVariant::Implicit,
            ReductionVariant::Footnote2V,
        ] {
            let ts = build_reduction(&inst, variant);
            for t in ts.hp_tasks() {
                match wcrt_ordinary(&ts, t.id).unwrap() {
                    OrdinaryRta::Schedulable { .. } => {}
                    OrdinaryRta::DeadlineMiss { response, .. } => {
                        panic!("{variant:?}: task {} responds in {response}", t.id)
                    }
                }
            }
        }
    }

    #[test]
    fn evaluation_reproduces_the_dichotomy() {
        // balanced loads: every window at v, sum m(4v+1), miss
        let inst = uniform_instance(3, 6, 2);
        let balanced =
            PartitionAssignment::new(&inst, vec![vec![0, 1, 2], vec![3, 4, 5], vec![6, 7, 8]])
                .unwrap();
        let out = evaluate_partition(&inst, &balanced).unwrap();
        assert_eq!(out.sum_r, Time::int(75));
        assert!(out.misses);

        // skewed loads 6, 7, 8 at v = 7 land exactly on the threshold: no miss
        let inst = PartitionInstance::new(3, 7, vec![2, 2, 2, 2, 2, 3, 2, 3, 3]).unwrap();
        let skewed =
            PartitionAssignment::new(&inst, vec![vec![0, 1, 2], vec![3, 4, 5], vec![6, 7, 8]])
                .unwrap();
        assert_eq!(skewed.loads, vec![6, 7, 8]);
        let out = evaluate_partition(&inst, &skewed).unwrap();
        assert_eq!(out.sum_r, Time::int(80));
        assert_eq!(inst.miss_threshold(), Time::int(80));
        assert!(!out.misses);

        // the same items balanced to 7, 7, 7 do miss
        let balanced =
            PartitionAssignment::new(&inst, vec![vec![0, 1, 5], vec![2, 3, 7], vec![4, 6, 8]])
                .unwrap();
        assert_eq!(balanced.loads, vec![7, 7, 7]);
        assert!(evaluate_partition(&inst, &balanced).unwrap().misses);
    }

    #[test]
    fn rebalance_replays_the_documented_trace() {
        let v = 10;
        let w: Vec<Time> = [0, 35, 4, 6, 15, 0].iter().map(|&x| Time::int(x)).collect();
        let steps = rebalance_trace(&w, v).unwrap();
        let sums: Vec<Time> = steps.iter().map(|s| s.sum_r).collect();
        assert_eq!(
            sums,
            vec![Time::int(216), Time::int(216), Time::int(226), Time::int(236), Time::int(246)]
        );
        assert_eq!(steps[0].x, vec![0, 2, 3, 5]);
        assert_eq!(steps[0].y, vec![1, 4]);
        // first donation fills index 0, second fills index 5 (most deficient)
        assert_eq!(steps[1].w[0], Time::int(10));
        assert_eq!(steps[2].w[5], Time::int(10));
        // the long donor drains to 15, then the fill phase trims both donors
        assert_eq!(steps[2].w[1], Time::int(15));
        assert_eq!(steps[3].w, [10, 10, 10, 6, 14, 10].map(Time::int).to_vec());
        let last = steps.last().unwrap();
        assert!(last.w.iter().all(|load| *load == Time::int(10)));
        assert!(last.x.is_empty() && last.y.is_empty());
    }

    #[test]
    fn rebalance_accepts_balanced_input() {
        let w = vec![Time::int(8); 4];
        let steps = rebalance_trace(&w, 8).unwrap();
        assert_eq!(steps.len(), 1);
        assert_eq!(steps[0].sum_r, Time::int(4 * 33));
    }

    #[test]
    fn rebalance_rejects_malformed_loads() {
        assert!(rebalance_trace(&[Time::int(5)], 3).is_err());
        assert!(rebalance_trace(&[], 5).is_err());
        assert!(rebalance_trace(&[Time::int(-1), Time::int(11)], 5).is_err());
    }

    #[test]
    fn planted_instances_agree_with_the_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for v in [3i128, 6, 7, 9, 10, 11, 12] {
            let yes = plant_yes(3, v, &mut rng).unwrap();
            assert!(yes.sum_matches(), "v = {v}");
            assert!(solve_3partition(&yes).unwrap().is_some(), "v = {v}");
        }
        for v in [7i128, 10, 11] {
            let no = plant_no(3, v, &mut rng).unwrap();
            assert!(!no.sum_matches(), "v = {v}");
            assert!(solve_3partition(&no).unwrap().is_none(), "v = {v}");
        }
        // at these scales every well-formed sum-true instance is satisfiable
        for v in [3i128, 6, 9, 12] {
            assert!(plant_no(3, v, &mut rng).is_err(), "v = {v}");
        }
        assert!(plant_yes(3, 4, &mut rng).is_err());
        assert!(plant_yes(3, 5, &mut rng).is_err());
    }

    #[test]
    fn oracle_witness_loads_are_all_v() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let inst = plant_yes(4, 10, &mut rng).unwrap();
        let witness = solve_3partition(&inst).unwrap().unwrap();
        assert!(witness.loads.iter().all(|&w| w == 10));
    }

    #[test]
    fn sweep_and_oracle_agree_without_the_engine() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for v in [7i128, 10, 11] {
            let yes = plant_yes(3, v, &mut rng).unwrap();
            let (max_yes, _) = max_partition_response(&yes).unwrap();
            assert!(max_yes > yes.miss_threshold());

            let no = plant_no(3, v, &mut rng).unwrap();
            let (max_no, _) = max_partition_response(&no).unwrap();
            assert!(max_no <= no.miss_threshold());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        // Random integer loads: the trace must end balanced at m(4v+1)
        // with the per-step bump rules holding (asserted internally).
        #[test]
        fn rebalance_integer_loads_end_balanced(cuts in proptest::collection::vec(0i128..=32, 3)) {
            let total: i128 = cuts.iter().sum();
            prop_assume!(total <= 32);
            let mut w: Vec<Time> = cuts.iter().map(|&c| Time::int(c)).collect();
            w.push(Time::int(32 - total));
            let steps = rebalance_trace(&w, 8).unwrap();
            prop_assert_eq!(steps.last().unwrap().sum_r, Time::int(4 * 33));
            for pair in steps.windows(2) {
                prop_assert!(pair[1].sum_r >= pair[0].sum_r);
            }
        }
    }
}
