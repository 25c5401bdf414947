//! Fluid-model token bucket filter.
//!
//! Volumes, not packets: the bucket accumulates tokens (megabits) at a fixed
//! rate up to its capacity, and offered volume is split greedily into a
//! conformant part (covered by tokens) and an excess part. Tokens generated
//! during the elapsed interval are available to that interval's traffic even
//! when the stored level saturates, which makes the model exact for
//! piecewise-constant load and independent of the step size used to drive it.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::units::{DataVolume, Rate, TimeSpan};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TbfError {
    /// `now` ran behind the bucket's last update; the caller's schedule is broken.
    #[error("time regression: update at t={now_s} s after state at t={last_update_s} s")]
    TimeRegression { now_s: f64, last_update_s: f64 },
}

/// Runtime state of one shaper.
///
/// Invariants: `0 <= tokens <= capacity`, and `last_update` never decreases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TokenBucket {
    rate: Rate,
    capacity: DataVolume,
    tokens: DataVolume,
    last_update: TimeSpan,
}

/// Outcome of offering a volume to a bucket: the two parts always add back
/// up to the offered volume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConformSplit {
    pub conformant: DataVolume,
    pub excess: DataVolume,
}

impl TokenBucket {
    /// A bucket starting full, as at the beginning of a billing month.
    pub fn full(rate: Rate, capacity: DataVolume, start: TimeSpan) -> Self {
        Self {
            rate,
            capacity,
            tokens: capacity,
            last_update: start,
        }
    }

    /// A bucket with an explicit initial token level (clamped to capacity).
    pub fn with_tokens(rate: Rate, capacity: DataVolume, tokens: DataVolume, start: TimeSpan) -> Self {
        Self {
            rate,
            capacity,
            tokens: DataVolume::new(tokens.value().min(capacity.value())),
            last_update: start,
        }
    }

    pub fn rate(&self) -> Rate {
        self.rate
    }

    pub fn capacity(&self) -> DataVolume {
        self.capacity
    }

    pub fn tokens(&self) -> DataVolume {
        self.tokens
    }

    pub fn last_update(&self) -> TimeSpan {
        self.last_update
    }

    fn elapsed(&self, now: TimeSpan) -> Result<TimeSpan, TbfError> {
        if now.value() < self.last_update.value() {
            return Err(TbfError::TimeRegression {
                now_s: now.value(),
                last_update_s: self.last_update.value(),
            });
        }
        Ok(TimeSpan::new(now.value() - self.last_update.value()))
    }

    /// Advances the bucket to `now`, accumulating tokens up to capacity.
    pub fn refill(&mut self, now: TimeSpan) -> Result<(), TbfError> {
        let dt = self.elapsed(now)?;
        let stored = (self.tokens.value() + self.rate.value() * dt.value()).min(self.capacity.value());
        self.tokens = DataVolume::new(stored);
        self.last_update = now;
        Ok(())
    }

    /// Offers `offered` megabits accumulated since the last update and splits
    /// it into conformant and excess volume.
    ///
    /// The supply for the interval is `tokens + rate * dt`; the capacity cap
    /// applies to what is left over and stored, not to what the interval's
    /// own traffic may consume.
    pub fn conform(&mut self, offered: DataVolume, now: TimeSpan) -> Result<ConformSplit, TbfError> {
        let dt = self.elapsed(now)?;
        let supply = self.tokens.value() + self.rate.value() * dt.value();
        let conformant = offered.value().min(supply);
        let excess = offered.value() - conformant;
        self.tokens = DataVolume::new((supply - conformant).min(self.capacity.value()));
        self.last_update = now;
        Ok(ConformSplit {
            conformant: DataVolume::new(conformant),
            excess: DataVolume::new(excess),
        })
    }
}

/// Upper bound on conformant volume over `horizon` for a bucket that starts
/// full: `rate * horizon + capacity`. No offered-traffic pattern can beat it.
pub fn max_conformant_volume(rate: Rate, capacity: DataVolume, horizon: TimeSpan) -> DataVolume {
    rate * horizon + capacity
}
