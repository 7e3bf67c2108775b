use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Risk-free discount factors `B(0, t)`, log-linear between pillars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscountCurve {
    /// `(t, B(0, t))` with `t > 0` strictly increasing; `B(0, 0) = 1` is implied.
    pillars: Vec<(f64, f64)>,
}

impl DiscountCurve {
    pub fn new(mut pillars: Vec<(f64, f64)>) -> Result<Self> {
        pillars.retain(|(t, _)| *t != 0.0);
        let mut previous = (0.0, 1.0);
        for &(t, b) in &pillars {
            if !(t > previous.0) || !t.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "discount pillars must have strictly increasing positive times, got {t} after {}",
                    previous.0
                )));
            }
            if !(b > 0.0) || b > previous.1 {
                return Err(Error::InvalidInput(format!(
                    "discount factors must be positive and non-increasing, got B({t}) = {b}"
                )));
            }
            previous = (t, b);
        }
        Ok(Self { pillars })
    }

    /// Continuously compounded flat curve.
    pub fn flat(rate: f64) -> Self {
        Self {
            pillars: vec![(1.0, (-rate).exp())],
        }
    }

    pub fn pillars(&self) -> &[(f64, f64)] {
        &self.pillars
    }

    /// `B(0, t)`; beyond the last pillar the last segment's forward rate is extended.
    pub fn discount(&self, t: f64) -> f64 {
        if t <= 0.0 || self.pillars.is_empty() {
            return 1.0;
        }
        let mut left = (0.0, 0.0f64);
        for (i, &(ti, bi)) in self.pillars.iter().enumerate() {
            let lb = bi.ln();
            if t <= ti || i + 1 == self.pillars.len() {
                let slope = (lb - left.1) / (ti - left.0);
                return (left.1 + slope * (t - left.0)).exp();
            }
            left = (ti, lb);
        }
        unreachable!("loop returns at the last pillar")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn log_linear_interpolation() {
        let c = DiscountCurve::new(vec![(1.0, 0.98), (3.0, 0.92)]).unwrap();
        assert_eq!(c.discount(0.0), 1.0);
        assert_abs_diff_eq!(c.discount(1.0), 0.98, epsilon = 1e-15);
        let mid = (0.5 * (0.98f64.ln() + 0.92f64.ln())).exp();
        assert_abs_diff_eq!(c.discount(2.0), mid, epsilon = 1e-15);
        assert_abs_diff_eq!(c.discount(0.5), 0.98f64.sqrt(), epsilon = 1e-15);
        // flat forward beyond the last pillar
        let r = (0.98f64.ln() - 0.92f64.ln()) / 2.0;
        assert_abs_diff_eq!(c.discount(4.0), 0.92 * (-r).exp(), epsilon = 1e-15);
    }

    #[test]
    fn flat_curve() {
        let c = DiscountCurve::flat(0.02);
        assert_abs_diff_eq!(c.discount(5.0), (-0.1f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn rejects_bad_pillars() {
        assert!(DiscountCurve::new(vec![(1.0, 0.9), (0.5, 0.95)]).is_err());
        assert!(DiscountCurve::new(vec![(1.0, 0.9), (2.0, 0.95)]).is_err());
        assert!(DiscountCurve::new(vec![(1.0, -0.9)]).is_err());
    }
}
