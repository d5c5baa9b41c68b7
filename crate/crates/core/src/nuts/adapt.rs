//! Step-size and mass-matrix adaptation during warmup.

use rand::Rng;

use super::hamiltonian::{leapfrog_step, PhasePoint};
use super::tree::sample_momentum;
use crate::error::{FrodoError, Result};
use crate::gradient::GradientTarget;

/// Nesterov dual averaging of `log ε` towards a target acceptance rate.
#[derive(Debug, Clone, PartialEq)]
pub struct DualAveraging {
    target: f64,
    mu: f64,
    gamma: f64,
    t0: f64,
    kappa: f64,
    counter: f64,
    s_bar: f64,
    x_bar: f64,
}

impl DualAveraging {
    /// Shrinks towards `10 ε` as usual for NUTS.
    pub fn new(step: f64, target: f64) -> Self {
        Self::with_bias(step, target, 10.0)
    }

    /// Shrinks towards `bias · ε`.
    pub fn with_bias(step: f64, target: f64, bias: f64) -> Self {
        DualAveraging {
            target,
            mu: (bias * step).ln(),
            gamma: 0.05,
            t0: 10.0,
            kappa: 0.75,
            counter: 0.0,
            s_bar: 0.0,
            x_bar: 0.0,
        }
    }

    /// Restarts around a new step size.
    pub fn restart(&mut self, step: f64) {
        self.mu = (10.0 * step).ln();
        self.counter = 0.0;
        self.s_bar = 0.0;
        self.x_bar = 0.0;
    }

    /// Feeds one acceptance statistic and returns the next step size.
    pub fn update(&mut self, accept_stat: f64) -> f64 {
        self.counter += 1.0;
        let stat = accept_stat.min(1.0);
        let eta = 1.0 / (self.counter + self.t0);
        self.s_bar = (1.0 - eta) * self.s_bar + eta * (self.target - stat);
        let x = self.mu - self.s_bar * self.counter.sqrt() / self.gamma;
        let x_eta = self.counter.powf(-self.kappa);
        self.x_bar = (1.0 - x_eta) * self.x_bar + x_eta * x;
        x.exp()
    }

    /// The averaged step size used after warmup.
    pub fn final_step(&self) -> f64 {
        self.x_bar.exp()
    }
}

/// Running mean and variance per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct Welford {
    n: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Welford {
    pub fn new(dim: usize) -> Self {
        Welford { n: 0, mean: vec![0.0; dim], m2: vec![0.0; dim] }
    }

    pub fn add(&mut self, x: &[f64]) {
        self.n += 1;
        let n = self.n as f64;
        for ((m, s), &v) in self.mean.iter_mut().zip(&mut self.m2).zip(x) {
            let d = v - *m;
            *m += d / n;
            *s += d * (v - *m);
        }
    }

    pub fn count(&self) -> usize {
        self.n
    }

    /// Sample variance shrunk towards `1e-3`:
    /// `(n/(n+5)) var + 1e-3 · 5/(n+5)`.
    pub fn regularized_variance(&self) -> Vec<f64> {
        let n = self.n as f64;
        self.m2
            .iter()
            .map(|s| {
                let var = if self.n > 1 { s / (n - 1.0) } else { 0.0 };
                (n / (n + 5.0)) * var + 1e-3 * (5.0 / (n + 5.0))
            })
            .collect()
    }

    pub fn reset(&mut self) {
        self.n = 0;
        self.mean.iter_mut().for_each(|m| *m = 0.0);
        self.m2.iter_mut().for_each(|m| *m = 0.0);
    }
}

/// Warmup schedule: a fast initial buffer, doubling slow windows for the
/// mass matrix, and a fast terminal buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSchedule {
    warmup: usize,
    init_buffer: usize,
    term_buffer: usize,
    /// Iterations (0-based) at which a slow window ends.
    ends: Vec<usize>,
}

/// Shortest warmup that still fits all three phases.
pub const MIN_WARMUP: usize = 150;

impl WindowSchedule {
    /// Buffers 75/50 and base window 25 at a warmup of 750, scaled
    /// proportionally for other lengths.
    pub fn new(warmup: usize) -> Result<Self> {
        if warmup < MIN_WARMUP {
            return Err(FrodoError::Config(format!(
                "warmup must be at least {MIN_WARMUP} iterations, got {warmup}"
            )));
        }
        let scale = |x: f64| ((x * warmup as f64 / 750.0).round() as usize).max(1);
        let init_buffer = scale(75.0);
        let term_buffer = scale(50.0);
        let base = scale(25.0);
        let last = warmup - term_buffer - 1;
        let mut size = base;
        let mut end = (init_buffer + size - 1).min(last);
        let mut ends = vec![end];
        while end < last {
            size *= 2;
            end += size;
            // a window whose successor would overrun absorbs the remainder
            if end + 2 * size > last {
                end = last;
            }
            ends.push(end);
        }
        Ok(WindowSchedule { warmup, init_buffer, term_buffer, ends })
    }

    /// Whether iteration `i` feeds the variance estimator.
    pub fn in_slow_window(&self, i: usize) -> bool {
        i >= self.init_buffer && i < self.warmup - self.term_buffer
    }

    /// Whether a slow window closes after iteration `i`.
    pub fn window_ends_at(&self, i: usize) -> bool {
        self.ends.contains(&i)
    }

    pub fn window_ends(&self) -> &[usize] {
        &self.ends
    }

    pub fn buffers(&self) -> (usize, usize) {
        (self.init_buffer, self.term_buffer)
    }
}

/// Heuristic initial step size: doubles or halves `eps` until the one-step
/// acceptance probability crosses 0.8.
pub fn find_initial_step<T: GradientTarget + ?Sized, G: Rng>(
    target: &T,
    start: &PhasePoint,
    mut eps: f64,
    inv_mass: &[f64],
    rng: &mut G,
) -> Result<f64> {
    let threshold = 0.8f64.ln();
    let mut direction = 0.0;
    loop {
        let mut z = start.clone();
        z.p = sample_momentum(rng, inv_mass);
        let h0 = z.hamiltonian(inv_mass);
        leapfrog_step(target, &mut z, eps, inv_mass);
        let delta = h0 - z.hamiltonian(inv_mass);
        let up = delta > threshold;
        if direction == 0.0 {
            direction = if up { 1.0 } else { -1.0 };
        } else if (direction > 0.0) != up {
            return Ok(eps);
        }
        eps = if direction > 0.0 { 2.0 * eps } else { 0.5 * eps };
        if eps > 1e7 {
            return Err(FrodoError::SamplerFailure(
                "step size diverged upwards; the posterior may be improper".into(),
            ));
        }
        if eps == 0.0 {
            return Err(FrodoError::SamplerFailure(
                "step size underflowed; the log-density or its gradient is not finite near the start".into(),
            ));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn dual_averaging_fixed_point() {
        let mut da = DualAveraging::with_bias(0.37, 0.8, 1.0);
        let mut eps = 0.0;
        for _ in 0..500 {
            eps = da.update(0.8);
        }
        assert!((eps - 0.37).abs() < 1e-12);
        assert!((da.final_step() - 0.37).abs() < 1e-12);
    }

    #[test]
    fn zero_acceptance_shrinks_step_monotonically() {
        let mut da = DualAveraging::new(1.0, 0.8);
        let mut prev = f64::INFINITY;
        for _ in 0..200 {
            let eps = da.update(0.0);
            assert!(eps < prev);
            prev = eps;
        }
    }

    #[test]
    fn perfect_acceptance_grows_step() {
        let mut da = DualAveraging::new(0.1, 0.8);
        let first = da.update(1.0);
        let mut last = first;
        for _ in 0..50 {
            last = da.update(1.0);
        }
        assert!(last > first);
    }

    #[test]
    fn standard_schedule() {
        let s = WindowSchedule::new(750).unwrap();
        assert_eq!(s.buffers(), (75, 50));
        // windows of 25, 50 and 100, then a stretched final window of 450
        assert_eq!(s.window_ends(), &[99, 149, 249, 699]);
        assert!(!s.in_slow_window(74));
        assert!(s.in_slow_window(75));
        assert!(s.in_slow_window(699));
        assert!(!s.in_slow_window(700));
    }

    #[test]
    fn short_warmup_is_rejected() {
        assert!(matches!(WindowSchedule::new(149), Err(FrodoError::Config(_))));
        assert!(WindowSchedule::new(150).is_ok());
    }

    proptest! {
        #[test]
        fn windows_tile_the_slow_phase(warmup in 150usize..5000) {
            let s = WindowSchedule::new(warmup).unwrap();
            let (init, term) = s.buffers();
            let ends = s.window_ends();
            prop_assert_eq!(*ends.last().unwrap(), warmup - term - 1);
            prop_assert!(ends[0] >= init);
            prop_assert!(ends.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn welford_matches_two_pass() {
        let xs = [[1.0, 10.0], [2.0, 30.0], [4.0, 20.0], [7.0, 0.0]];
        let mut w = Welford::new(2);
        for x in &xs {
            w.add(x);
        }
        let n = xs.len() as f64;
        for d in 0..2 {
            let mean = xs.iter().map(|x| x[d]).sum::<f64>() / n;
            let var = xs.iter().map(|x| (x[d] - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let expected = n / (n + 5.0) * var + 1e-3 * 5.0 / (n + 5.0);
            assert!((w.regularized_variance()[d] - expected).abs() < 1e-12);
        }
    }
}
