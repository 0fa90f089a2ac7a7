//! Momentum SGD and learning-rate halving with early stopping.

mod schedule;
mod sgd;

pub use schedule::{LrSchedule, ScheduleDecision, HALVING_FACTOR};
pub use sgd::{gradient_descent_step, sgd_step, SgdState};
