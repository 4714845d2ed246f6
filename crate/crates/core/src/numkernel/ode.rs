use nalgebra::DVector;

use crate::scalar::{lit, Real};

/// Samples of a fixed-step integration.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T: Real> {
    pub times: Vec<T>,
    pub states: Vec<DVector<T>>,
    /// A non-finite value appeared; sampling stopped at the last finite state.
    pub diverged: bool,
}

impl<T: Real> Trajectory<T> {
    pub fn last(&self) -> &DVector<T> {
        self.states
            .last()
            .expect("trajectory holds the initial state")
    }
}

/// Classical fourth-order Runge-Kutta with step `h` on `[0, horizon]`.
///
/// Every `downsample`-th step is recorded together with the initial and the
/// final state. The last step is shortened so the run ends exactly at
/// `horizon`.
pub fn integrate_rk4<T, F>(
    mut f: F,
    x0: DVector<T>,
    h: T,
    horizon: T,
    downsample: usize,
) -> Trajectory<T>
where
    T: Real,
    F: FnMut(T, &DVector<T>) -> DVector<T>,
{
    assert!(h > T::zero(), "step must be positive");
    assert!(horizon >= T::zero(), "horizon must be nonnegative");
    let every = downsample.max(1);
    let ratio = horizon / h;
    let nearest = ratio.round();
    let steps = if (ratio - nearest).abs() <= lit::<T>(1e-9) * nearest.max(T::one()) {
        nearest
    } else {
        ratio.ceil()
    }
    .to_usize()
    .unwrap_or(0);
    let half: T = lit(0.5);
    let sixth: T = lit(1.0 / 6.0);
    let two: T = lit(2.0);

    let mut times = vec![T::zero()];
    let mut states = vec![x0.clone()];
    let mut x = x0;
    let mut t = T::zero();
    let mut diverged = false;
    for step in 1..=steps {
        let remaining = horizon - t;
        let dt = if remaining < h { remaining } else { h };
        if dt <= T::zero() {
            break;
        }
        let k1 = f(t, &x);
        let k2 = f(t + dt * half, &(&x + &k1 * (dt * half)));
        let k3 = f(t + dt * half, &(&x + &k2 * (dt * half)));
        let k4 = f(t + dt, &(&x + &k3 * dt));
        let next = &x + (k1 + (k2 + k3) * two + k4) * (dt * sixth);
        if next.iter().any(|v| !v.is_finite()) {
            diverged = true;
            break;
        }
        x = next;
        t = if step == steps { horizon } else { t + dt };
        if step % every == 0 || step == steps {
            times.push(t);
            states.push(x.clone());
        }
    }
    if diverged && times.last() != Some(&t) {
        times.push(t);
        states.push(x);
    }
    Trajectory {
        times,
        states,
        diverged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    #[test]
    fn constant_field() {
        let tr = integrate_rk4(|_, x| x * 0.0, dvector![5.0f64], 0.1, 1.0, 1);
        assert!(tr.states.iter().all(|s| s[0] == 5.0));
        assert_eq!(tr.times.len(), 11);
        assert_eq!(*tr.times.last().unwrap(), 1.0);
    }

    #[test]
    fn exponential_decay() {
        let tr = integrate_rk4(|_, x| -x, dvector![1.0f64], 0.01, 1.0, 1);
        assert!((tr.last()[0] - (-1.0f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn step_halving_gains_sixteen() {
        let err = |h: f64| {
            let tr = integrate_rk4(|_, x| -x, dvector![1.0f64], h, 1.0, 1);
            (tr.last()[0] - (-1.0f64).exp()).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!((ratio - 16.0).abs() < 1.0, "ratio {ratio}");
    }

    #[test]
    fn divergence_is_flagged() {
        let tr = integrate_rk4(|_, x| x.map(|v| v * v * 1e3), dvector![1e3], 0.5, 10.0, 1);
        assert!(tr.diverged);
        assert!(tr.last().iter().all(|v: &f64| v.is_finite()));
    }

    #[test]
    fn downsampling_keeps_endpoints() {
        let tr = integrate_rk4(|_, x| -x, dvector![1.0f64], 0.01, 1.005, 10);
        assert_eq!(tr.times[0], 0.0);
        assert_eq!(*tr.times.last().unwrap(), 1.005);
        assert_eq!(tr.times.len(), 12);
    }
}
