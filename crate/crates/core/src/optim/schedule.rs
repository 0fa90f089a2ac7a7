use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScheduleDecision {
    Continue,
    Halved(f64),
    Stop,
}

/// Learning-rate halving with early stopping, driven only by CV loss.
///
/// A CV loss strictly above the best seen so far is a regression: the rate is
/// halved and the regression counter grows. Any other loss resets the counter
/// and becomes the new best. Once the counter reaches `patience` the schedule
/// answers `Stop` (the rate is still halved for that regression).
#[derive(Debug, Clone, PartialEq)]
pub struct LrSchedule {
    initial_lr: f64,
    current_lr: f64,
    halvings: u32,
    best: Option<f64>,
    cv_history: Vec<(usize, f64)>,
    regress_count: usize,
    patience: usize,
}

pub const HALVING_FACTOR: f64 = 0.5;

impl LrSchedule {
    pub fn new(initial_lr: f64, patience: usize) -> Result<Self> {
        if !(initial_lr > 0.0 && initial_lr.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "initial learning rate must be positive, got {initial_lr}"
            )));
        }
        if patience == 0 {
            return Err(Error::InvalidArgument("patience must be at least 1".into()));
        }
        Ok(LrSchedule {
            initial_lr,
            current_lr: initial_lr,
            halvings: 0,
            best: None,
            cv_history: Vec::new(),
            regress_count: 0,
            patience,
        })
    }

    pub fn initial_lr(&self) -> f64 {
        self.initial_lr
    }

    pub fn current_lr(&self) -> f64 {
        self.current_lr
    }

    /// Number of halvings applied so far.
    pub fn halvings(&self) -> u32 {
        self.halvings
    }

    pub fn best(&self) -> Option<f64> {
        self.best
    }

    pub fn regress_count(&self) -> usize {
        self.regress_count
    }

    pub fn patience(&self) -> usize {
        self.patience
    }

    /// `(observation index, cv loss)` for every observation so far.
    pub fn cv_history(&self) -> &[(usize, f64)] {
        &self.cv_history
    }

    pub fn observe_cv(&mut self, cv_loss: f64) -> Result<ScheduleDecision> {
        if !cv_loss.is_finite() {
            return Err(Error::NonFinite("cv loss".into()));
        }
        self.cv_history.push((self.cv_history.len(), cv_loss));
        match self.best {
            Some(best) if cv_loss > best => {
                self.current_lr *= HALVING_FACTOR;
                self.halvings += 1;
                self.regress_count += 1;
                if self.regress_count >= self.patience {
                    Ok(ScheduleDecision::Stop)
                } else {
                    Ok(ScheduleDecision::Halved(self.current_lr))
                }
            }
            _ => {
                self.best = Some(cv_loss);
                self.regress_count = 0;
                Ok(ScheduleDecision::Continue)
            }
        }
    }
}
