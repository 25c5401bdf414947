//! Unit-safe scalar types shared across the toolkit.
//!
//! Rates, data volumes and time spans are double-precision quantities;
//! money is fixed-point micro-pounds so billing totals stay exact no
//! matter how line items are ordered or summed.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Errors from constructing unit values out of raw input.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum UnitError {
    /// A physical quantity was negative, NaN or infinite.
    #[error("{quantity} must be a finite, non-negative number, got {value}")]
    NotNonNegative { quantity: &'static str, value: f64 },
    /// A money string did not parse as a plain decimal number of pounds.
    #[error("{input:?} is not a decimal amount of pounds")]
    MalformedMoney { input: String },
    /// A money amount carried sub-micro-pound precision that would be lost.
    #[error("{input:?} needs more than 6 decimal places; micro-pound money cannot represent it")]
    LossyMoney { input: String },
}

macro_rules! nonneg_quantity {
    ($(#[$meta:meta])* $name:ident, $label:expr, $unit:expr) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize)]
        #[serde(transparent)]
        pub struct $name(f64);

        impl $name {
            pub const ZERO: $name = $name(0.0);

            /// Wraps a raw value, panicking on negative or non-finite input.
            /// Use [`Self::try_new`] for untrusted input.
            pub fn new(value: f64) -> Self {
                Self::try_new(value).expect(concat!($label, " out of range"))
            }

            pub fn try_new(value: f64) -> Result<Self, UnitError> {
                if value.is_finite() && value >= 0.0 {
                    Ok(Self(value))
                } else {
                    Err(UnitError::NotNonNegative {
                        quantity: $label,
                        value,
                    })
                }
            }

            pub fn value(self) -> f64 {
                self.0
            }

            pub fn is_zero(self) -> bool {
                self.0 == 0.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{} {}", self.0, $unit)
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                let value = f64::deserialize(deserializer)?;
                Self::try_new(value).map_err(serde::de::Error::custom)
            }
        }
    };
}

nonneg_quantity!(
    /// Bandwidth in megabits per second. Houses token generation rates and
    /// offered/granted load levels.
    Rate,
    "rate",
    "Mbit/s"
);

nonneg_quantity!(
    /// Traffic volume in megabits. Houses token bucket sizes and accumulated
    /// conformant/excess usage.
    DataVolume,
    "data volume",
    "Mbit"
);

nonneg_quantity!(
    /// Duration in seconds.
    TimeSpan,
    "time span",
    "s"
);

nonneg_quantity!(
    /// Usage-price slope in pounds per megabit.
    PriceSlope,
    "price slope",
    "GBP/Mbit"
);

impl Mul<TimeSpan> for Rate {
    type Output = DataVolume;

    /// Volume carried at this rate over `t`.
    fn mul(self, t: TimeSpan) -> DataVolume {
        DataVolume(self.0 * t.0)
    }
}

impl Mul<Rate> for TimeSpan {
    type Output = DataVolume;

    fn mul(self, r: Rate) -> DataVolume {
        r * self
    }
}

impl Div<TimeSpan> for DataVolume {
    type Output = Rate;

    /// Mean rate of this volume spread over `t`. `t` must be positive.
    fn div(self, t: TimeSpan) -> Rate {
        assert!(t.0 > 0.0, "cannot divide a volume by a zero time span");
        Rate(self.0 / t.0)
    }
}

impl Add for DataVolume {
    type Output = DataVolume;

    fn add(self, rhs: DataVolume) -> DataVolume {
        DataVolume(self.0 + rhs.0)
    }
}

impl AddAssign for DataVolume {
    fn add_assign(&mut self, rhs: DataVolume) {
        self.0 += rhs.0;
    }
}

impl Sub for DataVolume {
    type Output = DataVolume;

    /// Volume difference; the result must be non-negative.
    fn sub(self, rhs: DataVolume) -> DataVolume {
        let diff = self.0 - rhs.0;
        debug_assert!(diff >= 0.0, "volume difference went negative: {diff}");
        DataVolume(diff.max(0.0))
    }
}

impl Add for Rate {
    type Output = Rate;

    fn add(self, rhs: Rate) -> Rate {
        Rate(self.0 + rhs.0)
    }
}

impl Sum for Rate {
    fn sum<I: Iterator<Item = Rate>>(iter: I) -> Rate {
        Rate(iter.map(|r| r.0).sum())
    }
}

impl Sum for DataVolume {
    fn sum<I: Iterator<Item = DataVolume>>(iter: I) -> DataVolume {
        DataVolume(iter.map(|v| v.0).sum())
    }
}

const MICRO_PER_POUND: i64 = 1_000_000;

/// Monetary amount held as an exact integer count of micro-pounds.
///
/// Addition and summation are exact; conversion from a usage-price product
/// rounds to the nearest micro-pound, half away from zero, at the moment a
/// bill line item is created and never earlier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Money(i64);

impl Money {
    pub const ZERO: Money = Money(0);

    pub const fn from_micro_pounds(micro: i64) -> Money {
        Money(micro)
    }

    pub const fn micro_pounds(self) -> i64 {
        self.0
    }

    /// Parses a plain decimal amount of pounds, e.g. `"26.50"` or `"-3"`.
    ///
    /// Rejects anything needing more than 6 decimal places (the input would
    /// be lossy in micro-pounds). Trailing zeros beyond 6 places are fine.
    pub fn from_pounds_str(input: &str) -> Result<Money, UnitError> {
        let malformed = || UnitError::MalformedMoney {
            input: input.to_string(),
        };
        let s = input.trim();
        let (negative, s) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s.strip_prefix('+').unwrap_or(s)),
        };
        let (whole, frac) = match s.split_once('.') {
            Some((w, f)) => (w, f),
            None => (s, ""),
        };
        if whole.is_empty() && frac.is_empty() {
            return Err(malformed());
        }
        if !whole.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(malformed());
        }
        if frac.len() > 6 && frac[6..].bytes().any(|b| b != b'0') {
            return Err(UnitError::LossyMoney {
                input: input.to_string(),
            });
        }
        let whole_value: i64 = if whole.is_empty() {
            0
        } else {
            whole.parse().map_err(|_| malformed())?
        };
        let mut frac_micro: i64 = 0;
        for (i, b) in frac.bytes().take(6).enumerate() {
            frac_micro += (b - b'0') as i64 * 10_i64.pow(5 - i as u32);
        }
        let magnitude = whole_value
            .checked_mul(MICRO_PER_POUND)
            .and_then(|w| w.checked_add(frac_micro))
            .ok_or_else(malformed)?;
        Ok(Money(if negative { -magnitude } else { magnitude }))
    }

    /// Converts a float amount of pounds that is expected to be exact at
    /// micro-pound granularity; rejects anything further than 10⁻³ micro-pounds
    /// from an integer count (the caller handed us a lossy value).
    pub fn from_pounds_f64(pounds: f64) -> Result<Money, UnitError> {
        let lossy = || UnitError::LossyMoney {
            input: pounds.to_string(),
        };
        if !pounds.is_finite() {
            return Err(lossy());
        }
        let micro = pounds * MICRO_PER_POUND as f64;
        let rounded = micro.round();
        if (micro - rounded).abs() > 1e-3 {
            return Err(lossy());
        }
        Ok(Money(rounded as i64))
    }

    /// Rounds an arbitrary amount of pounds to the nearest micro-pound, half
    /// away from zero. This is the single rounding point for usage charges.
    pub fn round_pounds(pounds: f64) -> Money {
        assert!(pounds.is_finite(), "cannot round a non-finite money amount");
        Money((pounds * MICRO_PER_POUND as f64).round() as i64)
    }

    /// Approximate value in pounds, for display and ratio computations only.
    pub fn to_pounds(self) -> f64 {
        self.0 as f64 / MICRO_PER_POUND as f64
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }
}

impl fmt::Display for Money {
    /// Formats as a decimal string with exactly six fractional digits,
    /// e.g. `26.500000`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        write!(
            f,
            "{sign}{}.{:06}",
            abs / MICRO_PER_POUND as u64,
            abs % MICRO_PER_POUND as u64
        )
    }
}

impl Add for Money {
    type Output = Money;

    fn add(self, rhs: Money) -> Money {
        Money(self.0 + rhs.0)
    }
}

impl AddAssign for Money {
    fn add_assign(&mut self, rhs: Money) {
        self.0 += rhs.0;
    }
}

impl Sub for Money {
    type Output = Money;

    fn sub(self, rhs: Money) -> Money {
        Money(self.0 - rhs.0)
    }
}

impl Neg for Money {
    type Output = Money;

    fn neg(self) -> Money {
        Money(-self.0)
    }
}

impl Mul<u32> for Money {
    type Output = Money;

    fn mul(self, n: u32) -> Money {
        Money(self.0 * n as i64)
    }
}

impl Sum for Money {
    fn sum<I: Iterator<Item = Money>>(iter: I) -> Money {
        Money(iter.map(|m| m.0).sum())
    }
}

impl Serialize for Money {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Money {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Money::from_pounds_str(&s).map_err(serde::de::Error::custom)
    }
}
