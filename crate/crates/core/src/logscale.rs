//! Nonnegative reals stored by their natural logarithm.
//!
//! Certified ergodicity constants routinely leave the f64 range (δ below
//! 1e-300, M_c above 1e+300), so they are carried as logarithms and only
//! exponentiated for display.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::cmp::Ordering;
use std::fmt;

#[derive(Clone, Copy, PartialEq)]
pub struct LogPos {
    ln: f64,
}

impl LogPos {
    pub const ZERO: LogPos = LogPos {
        ln: f64::NEG_INFINITY,
    };
    pub const ONE: LogPos = LogPos { ln: 0.0 };

    pub fn from_ln(ln: f64) -> Self {
        debug_assert!(!ln.is_nan());
        Self { ln }
    }

    /// Panics on negative or NaN input.
    pub fn new(v: f64) -> Self {
        assert!(v >= 0.0, "LogPos::new on negative or NaN value {v}");
        Self { ln: v.ln() }
    }

    pub fn ln(self) -> f64 {
        self.ln
    }

    /// Value as f64; may underflow to 0 or overflow to infinity.
    pub fn value(self) -> f64 {
        self.ln.exp()
    }

    pub fn is_zero(self) -> bool {
        self.ln == f64::NEG_INFINITY
    }

    pub fn is_positive(self) -> bool {
        self.ln > f64::NEG_INFINITY
    }

    pub fn mul(self, o: LogPos) -> LogPos {
        if self.is_zero() || o.is_zero() {
            return LogPos::ZERO;
        }
        LogPos::from_ln(self.ln + o.ln)
    }

    pub fn div(self, o: LogPos) -> LogPos {
        LogPos::from_ln(self.ln - o.ln)
    }

    pub fn powf(self, p: f64) -> LogPos {
        if self.is_zero() {
            return if p == 0.0 { LogPos::ONE } else { LogPos::ZERO };
        }
        LogPos::from_ln(self.ln * p)
    }

    pub fn scale(self, c: f64) -> LogPos {
        self.mul(LogPos::new(c))
    }

    pub fn add(self, o: LogPos) -> LogPos {
        LogPos::from_ln(log_add_exp(self.ln, o.ln))
    }

    /// `self − o`, clamped at zero.
    pub fn sub(self, o: LogPos) -> LogPos {
        if o.ln >= self.ln {
            return LogPos::ZERO;
        }
        if o.is_zero() {
            return self;
        }
        LogPos::from_ln(self.ln + (-(o.ln - self.ln).exp()).ln_1p())
    }

    pub fn sum<I: IntoIterator<Item = LogPos>>(it: I) -> LogPos {
        it.into_iter().fold(LogPos::ZERO, LogPos::add)
    }
}

pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(−ln(1 − u))` for `u ∈ (0, 1)` given as `ln u`, accurate when `u` is
/// far below machine epsilon.
pub fn ln_neg_ln_one_minus(ln_u: f64) -> f64 {
    if ln_u < -20.0 {
        // −ln(1−u) = u (1 + u/2 + u²/3 + …)
        let u = ln_u.exp();
        ln_u + (0.5 * u).ln_1p()
    } else {
        let u = ln_u.exp();
        (-(-u).ln_1p()).ln()
    }
}

impl PartialOrd for LogPos {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.ln.partial_cmp(&other.ln)
    }
}

impl fmt::Debug for LogPos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for LogPos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let v = self.value();
        if v.is_finite() && v > 1e-300 {
            write!(f, "{v:.6e}")
        } else if self.ln.abs() > 1e15 {
            // The decimal mantissa carries no information at this magnitude.
            write!(f, "exp({:.6e})", self.ln)
        } else {
            let dec = self.ln / std::f64::consts::LN_10;
            let e = dec.floor();
            write!(f, "{:.6}e{}", 10f64.powf(dec - e), e as i64)
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LogPosRepr {
    /// `null` encodes an exact zero.
    ln: Option<f64>,
    /// Display value; `null` when outside the f64 range.
    value: Option<f64>,
}

impl Serialize for LogPos {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v = self.value();
        LogPosRepr {
            ln: if self.is_zero() { None } else { Some(self.ln) },
            value: if v.is_finite() { Some(v) } else { None },
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for LogPos {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = LogPosRepr::deserialize(d)?;
        Ok(match r.ln {
            Some(ln) => LogPos::from_ln(ln),
            None => LogPos::ZERO,
        })
    }
}
