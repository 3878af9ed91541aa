//! Task model: ordinary sporadic tasks plus one segmented self-suspending task that
//! runs at the lowest priority.
//!
//! A system holds `n-1` higher-priority sporadic tasks (WCET `C_i`, minimum
//! inter-arrival `T_i`, relative deadline `D_i`, unique priority; smaller number =
//! higher priority) and one lowest-priority task that alternates `m` computation
//! segments with `m-1` suspension intervals. Segment WCETs are strictly positive,
//! suspension bounds are non-negative, and the suspending task has a constrained
//! deadline (`D_n <= T_n`).

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::time::Time;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid task system: {0}")]
    Invalid(String),
    #[error("unsupported file extension {0:?} (expected .json or .toml)")]
    Extension(String),
}

/// An ordinary sporadic task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SporadicTask {
    pub id: u32,
    #[serde(rename = "C")]
    pub wcet: Time,
    #[serde(rename = "T")]
    pub period: Time,
    #[serde(rename = "D")]
    pub deadline: Time,
    /// Unique priority, smaller = higher. Defaults to the listing position (1-based)
    /// when absent from a file.
    #[serde(default)]
    pub priority: Option<u32>,
}

/// The lowest-priority segmented self-suspending task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentedTask {
    /// Computation segment WCETs, in execution order. Non-empty, each > 0.
    #[serde(rename = "C")]
    pub segments: Vec<Time>,
    /// Maximum suspension lengths between consecutive segments. Length is
    /// `segments.len() - 1`, each >= 0.
    #[serde(rename = "S")]
    pub suspensions: Vec<Time>,
    #[serde(rename = "D")]
    pub deadline: Time,
    #[serde(rename = "T")]
    pub period: Time,
}

impl SegmentedTask {
    pub fn num_segments(&self) -> usize {
        self.segments.len()
    }

    pub fn total_exec(&self) -> Time {
        self.segments.iter().copied().sum()
    }

    pub fn total_suspension(&self) -> Time {
        self.suspensions.iter().copied().sum()
    }
}

/// A validated task system. Higher-priority tasks are stored sorted by priority,
/// highest (smallest number) first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TaskSystem {
    hp_tasks: Vec<SporadicTask>,
    ss_task: SegmentedTask,
}

impl TaskSystem {
    /// Validates and normalizes: fills missing priorities from listing order,
    /// rejects duplicates, sorts by priority.
    pub fn new(
        mut hp_tasks: Vec<SporadicTask>,
        ss_task: SegmentedTask,
    ) -> Result<Self, ModelError> {
        let invalid = |m: String| Err(ModelError::Invalid(m));

        for (pos, t) in hp_tasks.iter_mut().enumerate() {
            if t.priority.is_none() {
                t.priority = Some((pos + 1) as u32);
            }
        }
        let mut ids: Vec<u32> = hp_tasks.iter().map(|t| t.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return invalid("duplicate task id".into());
        }
        let mut prios: Vec<u32> = hp_tasks.iter().map(|t| t.priority.unwrap()).collect();
        prios.sort_unstable();
        if prios.windows(2).any(|w| w[0] == w[1]) {
            return invalid("duplicate priority (ties are not allowed)".into());
        }
        for t in &hp_tasks {
            if t.wcet <= Time::zero() {
                return invalid(format!("task {}: C must be > 0", t.id));
            }
            if t.period <= Time::zero() {
                return invalid(format!("task {}: T must be > 0", t.id));
            }
            if t.deadline <= Time::zero() {
                return invalid(format!("task {}: D must be > 0", t.id));
            }
        }

        let ss = &ss_task;
        if ss.segments.is_empty() {
            return invalid("suspending task needs at least one segment".into());
        }
        if ss.suspensions.len() + 1 != ss.segments.len() {
            return invalid(format!(
                "suspending task: {} segments need {} suspension bounds, got {}",
                ss.segments.len(),
                ss.segments.len() - 1,
                ss.suspensions.len()
            ));
        }
        if ss.segments.iter().any(|&c| c <= Time::zero()) {
            return invalid("suspending task: every segment WCET must be > 0".into());
        }
        if ss.suspensions.iter().any(|&s| s.is_negative()) {
            return invalid("suspending task: suspension bounds must be >= 0".into());
        }
        if ss.period <= Time::zero() || ss.deadline <= Time::zero() {
            return invalid("suspending task: T and D must be > 0".into());
        }
        if ss.deadline > ss.period {
            return invalid("suspending task: D must be <= T (constrained deadline)".into());
        }

        hp_tasks.sort_by_key(|t| t.priority.unwrap());
        Ok(TaskSystem { hp_tasks, ss_task })
    }

    /// Higher-priority tasks, sorted by priority (highest first).
    pub fn hp_tasks(&self) -> &[SporadicTask] {
        &self.hp_tasks
    }

    pub fn ss_task(&self) -> &SegmentedTask {
        &self.ss_task
    }

    pub fn hp_task(&self, id: u32) -> Option<&SporadicTask> {
        self.hp_tasks.iter().find(|t| t.id == id)
    }

    /// Total utilization: sum of C/T over all tasks including the suspending one.
    pub fn utilization(&self) -> Time {
        let hp: Time = self.hp_tasks.iter().map(|t| t.wcet / t.period).sum();
        hp + self.ss_task.total_exec() / self.ss_task.period
    }

    /// Utilization of the higher-priority tasks only.
    pub fn hp_utilization(&self) -> Time {
        self.hp_tasks.iter().map(|t| t.wcet / t.period).sum()
    }

    /// Positive gcd of every task parameter (C, T, D, segments, suspensions
    /// excluding zero-length ones). Events in any schedule of an integer-parameter
    /// system fall on multiples of this step.
    pub fn parameter_grid(&self) -> Time {
        let mut g = Time::zero();
        let mut fold = |t: Time| {
            if !t.is_zero() {
                g = Time::gcd(g, t);
            }
        };
        for t in &self.hp_tasks {
            fold(t.wcet);
            fold(t.period);
            fold(t.deadline);
        }
        for &c in &self.ss_task.segments {
            fold(c);
        }
        for &s in &self.ss_task.suspensions {
            fold(s);
        }
        fold(self.ss_task.deadline);
        fold(self.ss_task.period);
        g
    }

    /// Smallest strictly positive parameter in the system.
    pub fn min_positive_parameter(&self) -> Time {
        let mut m: Option<Time> = None;
        let mut fold = |t: Time| {
            if t > Time::zero() {
                m = Some(match m {
                    None => t,
                    Some(x) => x.min(t),
                });
            }
        };
        for t in &self.hp_tasks {
            fold(t.wcet);
            fold(t.period);
            fold(t.deadline);
        }
        for &c in &self.ss_task.segments {
            fold(c);
        }
        for &s in &self.ss_task.suspensions {
            fold(s);
        }
        fold(self.ss_task.deadline);
        fold(self.ss_task.period);
        m.expect("validated system has positive parameters")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("task system serializes")
    }
}

impl fmt::Display for TaskSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} higher-priority task(s):", self.hp_tasks.len())?;
        for t in &self.hp_tasks {
            writeln!(
                f,
                "  #{} prio={} C={} T={} D={}",
                t.id,
                t.priority.unwrap_or(0),
                t.wcet,
                t.period,
                t.deadline
            )?;
        }
        let ss = &self.ss_task;
        write!(f, "suspending task: C=[")?;
        for (i, c) in ss.segments.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "] S=[")?;
        for (i, s) in ss.suspensions.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, "] D={} T={}", ss.deadline, ss.period)
    }
}

#[derive(Deserialize)]
struct RawSystem {
    hp_tasks: Vec<SporadicTask>,
    ss_task: SegmentedTask,
}

impl<'de> Deserialize<'de> for TaskSystem {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = RawSystem::deserialize(deserializer)?;
        TaskSystem::new(raw.hp_tasks, raw.ss_task).map_err(serde::de::Error::custom)
    }
}

/// Parses a task system from JSON text.
pub fn from_json_str(text: &str) -> Result<TaskSystem, ModelError> {
    serde_json::from_str(text)
        .map_err(|e| ModelError::Parse { path: "<json>".into(), message: e.to_string() })
}

/// Parses a task system from TOML text (identical field names).
pub fn from_toml_str(text: &str) -> Result<TaskSystem, ModelError> {
    toml::from_str(text)
        .map_err(|e| ModelError::Parse { path: "<toml>".into(), message: e.to_string() })
}

/// Loads a task system from a `.json` or `.toml` file.
pub fn load_task_system(path: impl AsRef<Path>) -> Result<TaskSystem, ModelError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| ModelError::Io { path: path.display().to_string(), source: e })?;
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    let res = match ext {
        "json" => from_json_str(&text),
        "toml" => from_toml_str(&text),
        other => return Err(ModelError::Extension(other.to_string())),
    };
    res.map_err(|e| match e {
        ModelError::Parse { message, .. } => {
            ModelError::Parse { path: path.display().to_string(), message }
        }
        other => other,
    })
}

/// Saves a task system to a `.json` or `.toml` file.
pub fn save_task_system(ts: &TaskSystem, path: impl AsRef<Path>) -> Result<(), ModelError> {
    let path = path.as_ref();
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    let text = match ext {
        "json" => ts.to_json(),
        "toml" => toml::to_string_pretty(ts).map_err(|e| ModelError::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })?,
        other => return Err(ModelError::Extension(other.to_string())),
    };
    std::fs::write(path, text)
        .map_err(|e| ModelError::Io { path: path.display().to_string(), source: e })
}
