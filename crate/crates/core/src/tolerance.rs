use crate::error::{Error, Result};

/// Numerical tolerances shared by every solver in the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    /// Absolute feasibility slack.
    pub feas: f64,
    /// Singular-value cutoff relative to the largest singular value.
    pub rank: f64,
    /// Optimality gap for iterative solvers.
    pub opt: f64,
    /// Iteration cap.
    pub iter_max: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            feas: 1e-8,
            rank: 1e-10,
            opt: 1e-9,
            iter_max: 10_000,
        }
    }
}

impl Tolerance {
    pub fn new(feas: f64, rank: f64, opt: f64, iter_max: usize) -> Result<Self> {
        let tol = Tolerance {
            feas,
            rank,
            opt,
            iter_max,
        };
        tol.validate()?;
        Ok(tol)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !(positive(self.feas) && positive(self.rank) && positive(self.opt)) {
            return Err(Error::InvalidInput(
                "tolerances must be finite and strictly positive".into(),
            ));
        }
        if self.iter_max == 0 {
            return Err(Error::InvalidInput("iter_max must be at least 1".into()));
        }
        Ok(())
    }

    pub fn with_feas(mut self, feas: f64) -> Self {
        self.feas = feas;
        self
    }

    pub fn with_iter_max(mut self, iter_max: usize) -> Self {
        self.iter_max = iter_max;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        Tolerance::default().validate().unwrap();
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(Tolerance::new(0.0, 1e-10, 1e-9, 10).is_err());
        assert!(Tolerance::new(1e-8, 1e-10, 1e-9, 0).is_err());
        assert!(Tolerance::new(1e-8, f64::NAN, 1e-9, 5).is_err());
    }
}
