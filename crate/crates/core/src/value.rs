//! Resource values.
//!
//! A field holds values of a single [`Resource`] type: [`Exact`] wide
//! integers or [`Real`] binary floats. Both carry a distinguished infinite
//! value that absorbs addition, compares strictly above every finite value
//! and ties only with itself.

use std::fmt;

/// Arithmetic mode of a field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ValueMode {
    Exact,
    Real,
}

impl ValueMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ValueMode::Exact => "exact",
            ValueMode::Real => "real",
        }
    }
}

impl fmt::Display for ValueMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Mode-erased view of a value or statistic, used for reporting.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Magnitude {
    Int(u128),
    Float(f64),
    Infinite,
}

impl Magnitude {
    pub fn is_zero(self) -> bool {
        match self {
            Magnitude::Int(v) => v == 0,
            Magnitude::Float(v) => v == 0.0,
            Magnitude::Infinite => false,
        }
    }

    pub fn to_f64(self) -> f64 {
        match self {
            Magnitude::Int(v) => v as f64,
            Magnitude::Float(v) => v,
            Magnitude::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for Magnitude {
    /// Integers print as decimal integers, floats in shortest round-trip
    /// form, infinity as `inf`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Magnitude::Int(v) => write!(f, "{v}"),
            Magnitude::Float(v) => write!(f, "{v}"),
            Magnitude::Infinite => f.write_str("inf"),
        }
    }
}

/// Nonnegative resource amount with an infinite element.
pub trait Resource:
    Copy + PartialEq + PartialOrd + fmt::Debug + fmt::Display + Send + Sync + 'static
{
    const MODE: ValueMode;
    const ZERO: Self;
    const INFINITE: Self;

    fn is_positive(self) -> bool;

    fn is_infinite(self) -> bool;

    /// Sum of two amounts; `None` when two finite amounts overflow the
    /// finite range.
    fn checked_add(self, rhs: Self) -> Option<Self>;

    /// `self - lower` for `self >= lower`. Infinite minus infinite is zero.
    fn excess_over(self, lower: Self) -> Self;

    /// Total of a slice, `None` on overflow. Real mode uses compensated
    /// summation in slice order.
    fn total(values: &[Self]) -> Option<Self>;

    fn magnitude(self) -> Magnitude;

    fn to_f64(self) -> f64 {
        self.magnitude().to_f64()
    }

    /// Converts a decimal level (`f64::INFINITY` meaning infinite). Exact
    /// mode rejects non-integral levels.
    fn from_level(level: f64) -> Option<Self>;

    fn from_count(count: u64) -> Self;
}

/// Exact nonnegative integer. `u128::MAX` is reserved for infinity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Exact(u128);

impl Exact {
    pub const fn new(value: u128) -> Option<Exact> {
        if value == u128::MAX {
            None
        } else {
            Some(Exact(value))
        }
    }

    pub const fn from_u64(value: u64) -> Exact {
        Exact(value as u128)
    }

    /// The finite value, or `None` for infinity.
    pub const fn get(self) -> Option<u128> {
        if self.0 == u128::MAX {
            None
        } else {
            Some(self.0)
        }
    }
}

impl fmt::Display for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.magnitude().fmt(f)
    }
}

impl Resource for Exact {
    const MODE: ValueMode = ValueMode::Exact;
    const ZERO: Self = Exact(0);
    const INFINITE: Self = Exact(u128::MAX);

    #[inline]
    fn is_positive(self) -> bool {
        self.0 > 0
    }

    #[inline]
    fn is_infinite(self) -> bool {
        self.0 == u128::MAX
    }

    #[inline]
    fn checked_add(self, rhs: Self) -> Option<Self> {
        if self.is_infinite() || rhs.is_infinite() {
            return Some(Self::INFINITE);
        }
        match self.0.checked_add(rhs.0) {
            Some(sum) if sum != u128::MAX => Some(Exact(sum)),
            _ => None,
        }
    }

    fn excess_over(self, lower: Self) -> Self {
        match (self.is_infinite(), lower.is_infinite()) {
            (true, true) => Self::ZERO,
            (true, false) => Self::INFINITE,
            _ => Exact(self.0 - lower.0),
        }
    }

    fn total(values: &[Self]) -> Option<Self> {
        values
            .iter()
            .try_fold(Self::ZERO, |acc, &v| acc.checked_add(v))
    }

    fn magnitude(self) -> Magnitude {
        match self.get() {
            Some(v) => Magnitude::Int(v),
            None => Magnitude::Infinite,
        }
    }

    fn from_level(level: f64) -> Option<Self> {
        if level == f64::INFINITY {
            return Some(Self::INFINITE);
        }
        // 2^64 bound keeps the cast exact.
        if level.is_finite() && level >= 0.0 && level.fract() == 0.0 && level < 18446744073709551616.0
        {
            Some(Exact(level as u128))
        } else {
            None
        }
    }

    fn from_count(count: u64) -> Self {
        Exact(count as u128)
    }
}

/// Nonnegative binary64 value; `+inf` is the infinite element. Equality is
/// exact, so ties are detected only on identical values.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Real(f64);

impl Real {
    /// Rejects NaN and negative values. Negative zero normalizes to zero.
    pub fn new(value: f64) -> Option<Real> {
        if value.is_nan() || value < 0.0 {
            None
        } else {
            Some(Real(value + 0.0))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.magnitude().fmt(f)
    }
}

impl Resource for Real {
    const MODE: ValueMode = ValueMode::Real;
    const ZERO: Self = Real(0.0);
    const INFINITE: Self = Real(f64::INFINITY);

    #[inline]
    fn is_positive(self) -> bool {
        self.0 > 0.0
    }

    #[inline]
    fn is_infinite(self) -> bool {
        self.0 == f64::INFINITY
    }

    #[inline]
    fn checked_add(self, rhs: Self) -> Option<Self> {
        if self.is_infinite() || rhs.is_infinite() {
            return Some(Self::INFINITE);
        }
        let sum = self.0 + rhs.0;
        if sum.is_finite() {
            Some(Real(sum))
        } else {
            None
        }
    }

    fn excess_over(self, lower: Self) -> Self {
        if self.is_infinite() && lower.is_infinite() {
            Self::ZERO
        } else {
            Real(self.0 - lower.0)
        }
    }

    fn total(values: &[Self]) -> Option<Self> {
        // Neumaier summation.
        let mut sum = 0.0f64;
        let mut compensation = 0.0f64;
        for v in values {
            if v.is_infinite() {
                return Some(Self::INFINITE);
            }
            let x = v.0;
            let t = sum + x;
            if sum.abs() >= x.abs() {
                compensation += (sum - t) + x;
            } else {
                compensation += (x - t) + sum;
            }
            sum = t;
        }
        let total = sum + compensation;
        if total.is_finite() {
            Some(Real(total))
        } else {
            None
        }
    }

    fn magnitude(self) -> Magnitude {
        if self.is_infinite() {
            Magnitude::Infinite
        } else {
            Magnitude::Float(self.0)
        }
    }

    fn from_level(level: f64) -> Option<Self> {
        Real::new(level)
    }

    fn from_count(count: u64) -> Self {
        Real(count as f64)
    }
}
