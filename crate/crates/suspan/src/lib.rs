//! Response-time analysis for a segmented self-suspending task scheduled at the
//! lowest priority on a uniprocessor under fixed-priority preemptive scheduling.
//!
//! The crate provides:
//!
//! - exact rational time arithmetic ([`time::Time`]) and the task model
//!   ([`model::TaskSystem`]) with JSON/TOML loading,
//! - a discrete-event schedule simulator for explicit release patterns ([`sim`]),
//! - classical response-time analysis for the ordinary higher-priority tasks and
//!   per-segment fixed-point bounds ([`rta`]),
//! - an exact worst-case response-time search over structured release patterns
//!   ([`exact`]),
//! - a mixed-integer model of the per-segment interference, with an exact rational
//!   checker, enumerative solver, and LP-file export ([`milp`]),
//! - a generator reducing 3-PARTITION to schedulability of such a task system
//!   ([`hardness`]), and
//! - a family of systems exhibiting a provable gap between the MILP bound and the
//!   exact worst-case response time ([`gap`]).

pub mod exact;
pub mod gap;
pub mod hardness;
pub mod milp;
pub mod model;
pub mod rta;
pub mod sim;
pub mod time;

pub use model::{load_task_system, save_task_system, SegmentedTask, SporadicTask, TaskSystem};
pub use time::Time;
