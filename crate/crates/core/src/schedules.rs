//! Stepsize policies: constants, accuracy-tuned constants and the epoch-wise
//! decreasing schedule.

use crate::error::{Error, Result};
use crate::scalar::{cast, cast_usize, Scalar};

/// Inputs for the stepsize rules.
#[derive(Debug, Clone, Copy)]
pub struct ScheduleParams<S> {
    pub l_max: S,
    pub mu: S,
    pub n: usize,
    /// Epoch budget `T`.
    pub epochs: usize,
    /// Target accuracy for the tuned rules.
    pub epsilon: Option<S>,
    /// Shuffling radius (not squared) for the tuned rules.
    pub sigma_rad: Option<S>,
    pub sigma_star: Option<S>,
}

impl<S: Scalar> ScheduleParams<S> {
    pub fn new(l_max: S, mu: S, n: usize, epochs: usize) -> Self {
        ScheduleParams { l_max, mu, n, epochs, epsilon: None, sigma_rad: None, sigma_star: None }
    }

    fn validate(&self) -> Result<()> {
        if !(self.l_max > S::zero()) {
            return Err(Error::invalid("L_max must be positive"));
        }
        if self.n == 0 || self.epochs == 0 {
            return Err(Error::invalid("n and the epoch budget must be at least 1"));
        }
        Ok(())
    }
}

/// Which method a constant stepsize is meant for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepFamily {
    /// Reshuffling methods: `gamma = 1 / L_max`.
    Reshuffle,
    /// With-replacement SGD: `gamma = 1 / (2 L_max)`.
    Sgd,
}

/// Where the strong convexity lives, selecting the tuned-stepsize form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrongConvexitySite {
    /// Each component is strongly convex: `min(1/L_max, sqrt(eps mu) / (sqrt(2) sigma_rad))`.
    Components,
    /// The regularizer is strongly convex: `min(1/L_max, sqrt(eps mu) / sigma_rad)`.
    Regularizer,
}

/// Theoretical constant stepsize for the chosen method family.
pub fn constant_stepsize<S: Scalar>(params: &ScheduleParams<S>, family: StepFamily) -> Result<S> {
    if !(params.l_max > S::zero()) {
        return Err(Error::invalid("L_max must be positive"));
    }
    Ok(match family {
        StepFamily::Reshuffle => S::one() / params.l_max,
        StepFamily::Sgd => S::one() / (cast::<S>(2.0) * params.l_max),
    })
}

/// Accuracy-tuned constant stepsize for the reshuffling methods.
///
/// With a zero radius the noise branch is vacuous and the rule falls back to
/// `1 / L_max`.
pub fn tuned_stepsize_rr<S: Scalar>(
    params: &ScheduleParams<S>,
    site: StrongConvexitySite,
) -> Result<S> {
    params.validate()?;
    let epsilon = params.epsilon.ok_or(Error::MissingParameter("epsilon"))?;
    let sigma_rad = params.sigma_rad.ok_or(Error::MissingParameter("sigma_rad"))?;
    if !(epsilon > S::zero()) {
        return Err(Error::invalid("epsilon must be positive"));
    }
    if sigma_rad < S::zero() {
        return Err(Error::invalid("sigma_rad must be nonnegative"));
    }
    let base = S::one() / params.l_max;
    if sigma_rad == S::zero() {
        return Ok(base);
    }
    let tuned = match site {
        StrongConvexitySite::Components => {
            (epsilon * params.mu).sqrt() / (cast::<S>(2.0).sqrt() * sigma_rad)
        }
        StrongConvexitySite::Regularizer => (epsilon * params.mu).sqrt() / sigma_rad,
    };
    Ok(base.min(tuned))
}

/// Epoch-wise decreasing stepsize.
///
/// Constant at `1/L_max` through epoch `t0 = ceil(T/2)` (and everywhere when
/// `T <= L_max / (2 mu n)`), then `7 / (mu n (s + t - t0))` with
/// `s = 7 L_max / (4 mu n)`. The decreasing branch is additionally capped at
/// `1/L_max`: just after `t0` the raw formula exceeds the smoothness limit
/// that the convergence guarantee requires, and the cap is inactive once
/// `t - t0 >= s`.
pub fn decreasing_stepsize<S: Scalar>(params: &ScheduleParams<S>, t: usize) -> Result<S> {
    params.validate()?;
    if !(params.mu > S::zero()) {
        return Err(Error::invalid("decreasing schedule needs mu > 0"));
    }
    if t >= params.epochs {
        return Err(Error::invalid(format!(
            "epoch {t} out of range (budget {})",
            params.epochs
        )));
    }
    let base = S::one() / params.l_max;
    let n = cast_usize::<S>(params.n);
    let t_threshold = params.l_max / (cast::<S>(2.0) * params.mu * n);
    let t0 = params.epochs.div_ceil(2);
    if cast_usize::<S>(params.epochs) <= t_threshold || t <= t0 {
        return Ok(base);
    }
    let s = cast::<S>(7.0) * params.l_max / (cast::<S>(4.0) * params.mu * n);
    let raw = cast::<S>(7.0) / (params.mu * n * (s + cast_usize::<S>(t - t0)));
    Ok(base.min(raw))
}

/// A per-epoch stepsize policy consumable by the optimizers.
#[derive(Debug, Clone)]
pub enum Schedule<S> {
    Constant(S),
    Decreasing(ScheduleParams<S>),
}

impl<S: Scalar> Schedule<S> {
    pub fn epoch_stepsize(&self, t: usize) -> Result<S> {
        match self {
            Schedule::Constant(gamma) => {
                if !(*gamma > S::zero()) {
                    return Err(Error::invalid("stepsize must be positive"));
                }
                Ok(*gamma)
            }
            Schedule::Decreasing(params) => decreasing_stepsize(params, t),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(l_max: f64, mu: f64, n: usize, epochs: usize) -> ScheduleParams<f64> {
        ScheduleParams::new(l_max, mu, n, epochs)
    }

    #[test]
    fn constant_rules() {
        let p = params(10.0, 1.0, 4, 10);
        assert_eq!(constant_stepsize(&p, StepFamily::Reshuffle).unwrap(), 0.1);
        assert_eq!(constant_stepsize(&p, StepFamily::Sgd).unwrap(), 0.05);
        let bad = params(0.0, 1.0, 4, 10);
        assert!(constant_stepsize(&bad, StepFamily::Reshuffle).is_err());
    }

    #[test]
    fn tuned_zero_radius_falls_back() {
        let mut p = params(2.0, 1.0, 4, 10);
        p.epsilon = Some(1e-4);
        p.sigma_rad = Some(0.0);
        assert_eq!(tuned_stepsize_rr(&p, StrongConvexitySite::Regularizer).unwrap(), 0.5);
    }

    #[test]
    fn tuned_forms() {
        let mut p = params(1.0, 1.0, 4, 10);
        p.epsilon = Some(1e-4);
        p.sigma_rad = Some(1.0);
        let reg = tuned_stepsize_rr(&p, StrongConvexitySite::Regularizer).unwrap();
        assert!((reg - 0.01).abs() < 1e-15);
        let comp = tuned_stepsize_rr(&p, StrongConvexitySite::Components).unwrap();
        assert!((comp - 0.01 / 2.0_f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn tuned_requires_epsilon() {
        let mut p = params(1.0, 1.0, 4, 10);
        p.sigma_rad = Some(1.0);
        assert!(matches!(
            tuned_stepsize_rr(&p, StrongConvexitySite::Regularizer),
            Err(Error::MissingParameter("epsilon"))
        ));
    }

    #[test]
    fn decreasing_schedule_values() {
        // t0 = 50, s = 7*10/(4*5) = 3.5
        let p = params(10.0, 1.0, 5, 100);
        assert_eq!(decreasing_stepsize(&p, 25).unwrap(), 0.1);
        let late = decreasing_stepsize(&p, 80).unwrap();
        assert!((late - 7.0 / 167.5).abs() < 1e-15);
        // raw value just after t0 is 7/(5*4.5) = 0.311..., capped at 1/L_max
        assert_eq!(decreasing_stepsize(&p, 51).unwrap(), 0.1);
    }

    #[test]
    fn decreasing_schedule_is_capped_and_monotone() {
        let p = params(10.0, 1.0, 5, 100);
        let mut prev = f64::INFINITY;
        for t in 0..100 {
            let g = decreasing_stepsize(&p, t).unwrap();
            assert!(g <= 0.1 + 1e-15);
            assert!(g <= prev + 1e-15);
            prev = g;
        }
        assert!(decreasing_stepsize(&p, 100).is_err());
    }

    #[test]
    fn short_horizon_stays_constant() {
        // T <= L_max / (2 mu n) = 1000: every epoch uses 1/L_max
        let p = params(100.0, 0.01, 5, 500);
        for t in 0..500 {
            assert_eq!(decreasing_stepsize(&p, t).unwrap(), 0.01);
        }
    }
}
