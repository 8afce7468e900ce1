use crate::error::{Error, Result};

/// Linear risk-level curriculum: `alpha_start` at batch 0 down to `alpha_target`
/// at `anneal_batches`, constant afterwards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaSchedule {
    pub alpha_start: f64,
    pub alpha_target: f64,
    pub anneal_batches: usize,
}

pub const DEFAULT_ALPHA_START: f64 = 0.8;

impl AlphaSchedule {
    pub fn new(alpha_start: f64, alpha_target: f64, anneal_batches: usize) -> Result<Self> {
        let valid = |a: f64| a > 0.0 && a <= 1.0;
        if !valid(alpha_start) || !valid(alpha_target) || alpha_start < alpha_target {
            return Err(Error::contract(format!(
                "alpha schedule needs 0 < target <= start <= 1, got start {alpha_start}, target {alpha_target}"
            )));
        }
        Ok(Self {
            alpha_start,
            alpha_target,
            anneal_batches,
        })
    }

    pub fn constant(alpha: f64) -> Self {
        Self {
            alpha_start: alpha,
            alpha_target: alpha,
            anneal_batches: 0,
        }
    }

    pub fn alpha_at(&self, batch_index: usize) -> f64 {
        if batch_index >= self.anneal_batches {
            return self.alpha_target;
        }
        let frac = batch_index as f64 / self.anneal_batches as f64;
        let a = self.alpha_start + (self.alpha_target - self.alpha_start) * frac;
        a.clamp(self.alpha_target, self.alpha_start)
    }
}

/// Linear decay from `start` to `end` over `steps`, constant afterwards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearDecay {
    pub start: f64,
    pub end: f64,
    pub steps: usize,
}

impl LinearDecay {
    pub fn value_at(&self, step: usize) -> f64 {
        if step >= self.steps {
            return self.end;
        }
        self.start + (self.end - self.start) * step as f64 / self.steps as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn schedule_examples() {
        let s = AlphaSchedule::new(0.8, 0.1, 100).unwrap();
        assert_eq!(s.alpha_at(0), 0.8);
        assert!((s.alpha_at(50) - 0.45).abs() < 1e-12);
        assert_eq!(s.alpha_at(100), 0.1);
        assert_eq!(s.alpha_at(1000), 0.1);
        assert_eq!(AlphaSchedule::constant(0.3).alpha_at(0), 0.3);
        assert!(AlphaSchedule::new(0.1, 0.8, 10).is_err());
    }

    #[test]
    fn decay_endpoints() {
        let d = LinearDecay { start: 1.0, end: 0.05, steps: 10 };
        assert_eq!(d.value_at(0), 1.0);
        assert_eq!(d.value_at(10), 0.05);
        assert!((d.value_at(5) - 0.525).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn stays_in_range(
            start in 0.01f64..1.0,
            frac in 0.0f64..1.0,
            anneal in 0usize..500,
            batch in 0usize..1000,
        ) {
            let target = start * frac.max(0.01);
            let s = AlphaSchedule::new(start, target, anneal).unwrap();
            let a = s.alpha_at(batch);
            prop_assert!(a >= target && a <= start);
            prop_assert!(s.alpha_at(batch + 1) <= a);
        }
    }
}
