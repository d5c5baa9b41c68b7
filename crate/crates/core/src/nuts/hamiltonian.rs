use crate::gradient::GradientTarget;

/// A point in phase space with its cached log-density and gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub grad: Vec<f64>,
    pub log_density: f64,
}

impl PhasePoint {
    /// Evaluates the target at `q`; the momentum starts at zero.
    pub fn new<T: GradientTarget + ?Sized>(target: &T, q: Vec<f64>) -> Self {
        let mut grad = vec![0.0; q.len()];
        let log_density = target.value_and_grad(&q, &mut grad);
        let p = vec![0.0; q.len()];
        PhasePoint { q, p, grad, log_density }
    }

    pub fn kinetic(&self, inv_mass: &[f64]) -> f64 {
        0.5 * self.p.iter().zip(inv_mass).map(|(p, m)| p * p * m).sum::<f64>()
    }

    /// `H = −log π(q) + ½ pᵀ M⁻¹ p`; infinite when the density is not finite.
    pub fn hamiltonian(&self, inv_mass: &[f64]) -> f64 {
        let h = -self.log_density + self.kinetic(inv_mass);
        if h.is_nan() {
            f64::INFINITY
        } else {
            h
        }
    }

    /// Velocity `M⁻¹ p`, the "sharp" momentum of the U-turn criterion.
    pub fn velocity(&self, inv_mass: &[f64]) -> Vec<f64> {
        self.p.iter().zip(inv_mass).map(|(p, m)| p * m).collect()
    }
}

/// One leapfrog step: half kick, drift, half kick. Updates `z` in place.
pub fn leapfrog_step<T: GradientTarget + ?Sized>(target: &T, z: &mut PhasePoint, eps: f64, inv_mass: &[f64]) {
    for (p, g) in z.p.iter_mut().zip(&z.grad) {
        *p += 0.5 * eps * g;
    }
    for ((q, p), m) in z.q.iter_mut().zip(&z.p).zip(inv_mass) {
        *q += eps * m * p;
    }
    z.log_density = target.value_and_grad(&z.q, &mut z.grad);
    for (p, g) in z.p.iter_mut().zip(&z.grad) {
        *p += 0.5 * eps * g;
    }
}

/// Leapfrog step from `(q, p)`; returns `(q′, p′, H′)`.
pub fn leapfrog<T: GradientTarget + ?Sized>(
    q: &[f64],
    p: &[f64],
    eps: f64,
    inv_mass: &[f64],
    target: &T,
) -> (Vec<f64>, Vec<f64>, f64) {
    let mut z = PhasePoint::new(target, q.to_vec());
    z.p = p.to_vec();
    leapfrog_step(target, &mut z, eps, inv_mass);
    let h = z.hamiltonian(inv_mass);
    (z.q, z.p, h)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) struct Quadratic;

    impl GradientTarget for Quadratic {
        fn dim(&self) -> usize {
            1
        }
        fn value_and_grad(&self, q: &[f64], grad: &mut [f64]) -> f64 {
            grad[0] = -q[0];
            -0.5 * q[0] * q[0]
        }
    }

    struct Flat(usize);

    impl GradientTarget for Flat {
        fn dim(&self) -> usize {
            self.0
        }
        fn value_and_grad(&self, _q: &[f64], grad: &mut [f64]) -> f64 {
            grad.iter_mut().for_each(|g| *g = 0.0);
            0.0
        }
    }

    #[test]
    fn free_particle_drifts() {
        let (q, p, _) = leapfrog(&[1.0, 2.0], &[0.5, -1.0], 0.2, &[2.0, 0.5], &Flat(2));
        assert_eq!(q, vec![1.0 + 0.2 * 2.0 * 0.5, 2.0 - 0.2 * 0.5]);
        assert_eq!(p, vec![0.5, -1.0]);
    }

    #[test]
    fn harmonic_step_by_hand() {
        // p½ = 0 − 0.05·1 = −0.05; q′ = 1 − 0.005 = 0.995; p′ = −0.05 − 0.05·0.995
        let (q, p, _) = leapfrog(&[1.0], &[0.0], 0.1, &[1.0], &Quadratic);
        assert!((q[0] - 0.995).abs() < 1e-15);
        assert!((p[0] + 0.09975).abs() < 1e-15);
    }

    #[test]
    fn reversible() {
        let (q1, p1, _) = leapfrog(&[0.7], &[-0.3], 0.25, &[1.3], &Quadratic);
        let neg: Vec<f64> = p1.iter().map(|p| -p).collect();
        let (q2, p2, _) = leapfrog(&q1, &neg, 0.25, &[1.3], &Quadratic);
        assert!((q2[0] - 0.7).abs() < 1e-10);
        assert!((p2[0] - 0.3).abs() < 1e-10);
    }

    #[test]
    fn energy_error_is_second_order() {
        let max_error = |eps: f64| {
            let mut z = PhasePoint::new(&Quadratic, vec![1.0]);
            z.p = vec![0.5];
            let h0 = z.hamiltonian(&[1.0]);
            let steps = (4.0 / eps).round() as usize;
            (0..steps)
                .map(|_| {
                    leapfrog_step(&Quadratic, &mut z, eps, &[1.0]);
                    (z.hamiltonian(&[1.0]) - h0).abs()
                })
                .fold(0.0, f64::max)
        };
        let ratio = max_error(0.1) / max_error(0.05);
        assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
    }
}
