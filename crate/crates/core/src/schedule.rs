//! Step-size sequences `α(k)` consumed at round `k = 0, 1, 2, ...`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error("power-law schedule needs c > 0 and p in (0.5, 1], got c = {c}, p = {p}")]
    InvalidPowerLaw { c: f64, p: f64 },
    #[error("unknown schedule {0:?} (expected recipsqrt, recip or powerlaw:<c>:<p>)")]
    Unknown(String),
}

#[derive(Clone)]
pub enum StepSchedule {
    /// `α(0) = 1`, `α(k) = 1/√k`.
    RecipSqrt,
    /// `α(0) = 1`, `α(k) = 1/k`.
    Recip,
    /// `α(0) = c`, `α(k) = c/k^p`.
    PowerLaw { c: f64, p: f64 },
    /// User sequence. The caller asserts whether `Σα = ∞` and `Σα² < ∞`.
    Custom {
        alpha: Arc<dyn Fn(usize) -> f64 + Send + Sync>,
        square_summable: bool,
    },
}

impl fmt::Debug for StepSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for StepSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepSchedule::RecipSqrt => f.write_str("recipsqrt"),
            StepSchedule::Recip => f.write_str("recip"),
            StepSchedule::PowerLaw { c, p } => write!(f, "powerlaw:{c}:{p}"),
            StepSchedule::Custom { .. } => f.write_str("custom"),
        }
    }
}

impl StepSchedule {
    pub fn power_law(c: f64, p: f64) -> Result<Self, ScheduleError> {
        if !(c.is_finite() && c > 0.0 && p > 0.5 && p <= 1.0) {
            return Err(ScheduleError::InvalidPowerLaw { c, p });
        }
        Ok(StepSchedule::PowerLaw { c, p })
    }

    pub fn alpha(&self, k: usize) -> f64 {
        match self {
            StepSchedule::RecipSqrt => {
                if k == 0 {
                    1.0
                } else {
                    1.0 / (k as f64).sqrt()
                }
            }
            StepSchedule::Recip => {
                if k == 0 {
                    1.0
                } else {
                    1.0 / k as f64
                }
            }
            StepSchedule::PowerLaw { c, p } => {
                if k == 0 {
                    *c
                } else {
                    c / (k as f64).powf(*p)
                }
            }
            StepSchedule::Custom { alpha, .. } => alpha(k),
        }
    }

    /// `Σα = ∞` and `Σα² < ∞`. The `1/√k` sequence is not square summable.
    pub fn lemma1_admissible(&self) -> bool {
        match self {
            StepSchedule::RecipSqrt => false,
            StepSchedule::Recip | StepSchedule::PowerLaw { .. } => true,
            StepSchedule::Custom {
                square_summable, ..
            } => *square_summable,
        }
    }

    /// `α(0) = 1`, the normalization the consensus-error bounds assume.
    pub fn lemma2_normalized(&self) -> bool {
        self.alpha(0) == 1.0
    }

    pub fn is_recip_sqrt(&self) -> bool {
        matches!(self, StepSchedule::RecipSqrt)
    }

    /// Checks positivity and monotonicity over the first `horizon` steps.
    pub fn is_positive_nonincreasing(&self, horizon: usize) -> bool {
        let mut prev = f64::INFINITY;
        for k in 0..horizon {
            let a = self.alpha(k);
            if !(a > 0.0 && a <= prev) {
                return false;
            }
            prev = a;
        }
        true
    }
}

impl FromStr for StepSchedule {
    type Err = ScheduleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "recipsqrt" | "recip-sqrt" | "recip_sqrt" => return Ok(StepSchedule::RecipSqrt),
            "recip" => return Ok(StepSchedule::Recip),
            _ => {}
        }
        let parts: Vec<&str> = lower.split(':').collect();
        if parts.len() == 3 && parts[0] == "powerlaw" {
            let c = parts[1].parse::<f64>();
            let p = parts[2].parse::<f64>();
            if let (Ok(c), Ok(p)) = (c, p) {
                return StepSchedule::power_law(c, p);
            }
        }
        Err(ScheduleError::Unknown(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values() {
        assert_eq!(StepSchedule::RecipSqrt.alpha(0), 1.0);
        assert_eq!(StepSchedule::RecipSqrt.alpha(4), 0.5);
        assert_eq!(StepSchedule::Recip.alpha(0), 1.0);
        assert_eq!(StepSchedule::Recip.alpha(8), 0.125);
        let pl = StepSchedule::power_law(0.08, 0.85).unwrap();
        assert_eq!(pl.alpha(0), 0.08);
        assert_eq!(pl.alpha(1), 0.08);
        assert!((pl.alpha(10) - 0.08 / 10f64.powf(0.85)).abs() < 1e-18);
    }

    #[test]
    fn flags() {
        assert!(!StepSchedule::RecipSqrt.lemma1_admissible());
        assert!(StepSchedule::RecipSqrt.lemma2_normalized());
        assert!(StepSchedule::Recip.lemma1_admissible());
        assert!(StepSchedule::Recip.lemma2_normalized());
        let pl = StepSchedule::power_law(0.08, 0.85).unwrap();
        assert!(pl.lemma1_admissible());
        assert!(!pl.lemma2_normalized());
        assert!(StepSchedule::power_law(1.0, 0.85).unwrap().lemma2_normalized());
    }

    #[test]
    fn nonincreasing() {
        for s in [
            StepSchedule::RecipSqrt,
            StepSchedule::Recip,
            StepSchedule::power_law(0.08, 0.85).unwrap(),
        ] {
            assert!(s.is_positive_nonincreasing(10_000), "{s}");
        }
        let bumpy = StepSchedule::Custom {
            alpha: Arc::new(|k| if k == 3 { 2.0 } else { 1.0 }),
            square_summable: false,
        };
        assert!(!bumpy.is_positive_nonincreasing(10));
    }

    #[test]
    fn parses() {
        assert!("recipsqrt".parse::<StepSchedule>().unwrap().is_recip_sqrt());
        assert!(matches!("recip".parse(), Ok(StepSchedule::Recip)));
        match "powerlaw:0.08:0.85".parse::<StepSchedule>().unwrap() {
            StepSchedule::PowerLaw { c, p } => assert_eq!((c, p), (0.08, 0.85)),
            other => panic!("unexpected {other}"),
        }
        assert!(matches!(
            "powerlaw:1:0.4".parse::<StepSchedule>(),
            Err(ScheduleError::InvalidPowerLaw { .. })
        ));
        assert!(matches!("fast".parse::<StepSchedule>(), Err(ScheduleError::Unknown(_))));
    }
}
