//! Multinomial NUTS with the generalized no-U-turn criterion.

use rand::Rng;
use rand_distr::StandardNormal;

use super::hamiltonian::{leapfrog_step, PhasePoint};
use crate::gradient::GradientTarget;

/// Energy error beyond which a trajectory is declared divergent.
pub const MAX_DELTA_H: f64 = 1000.0;

/// Result of one NUTS transition.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub point: PhasePoint,
    pub accept_stat: f64,
    pub depth: usize,
    pub n_leapfrog: usize,
    pub diverged: bool,
    /// Hamiltonian of the selected state under its own momentum.
    pub energy: f64,
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn no_u_turn(v_minus: &[f64], v_plus: &[f64], rho: &[f64]) -> bool {
    dot(v_plus, rho) > 0.0 && dot(v_minus, rho) > 0.0
}

/// Momentum and velocity at one end of a (sub)trajectory.
#[derive(Clone)]
struct Edge {
    p: Vec<f64>,
    v: Vec<f64>,
}

struct Builder<'a, T: ?Sized, G> {
    target: &'a T,
    inv_mass: &'a [f64],
    eps: f64,
    h0: f64,
    rng: &'a mut G,
    n_leapfrog: usize,
    sum_metro_prob: f64,
    diverged: bool,
}

/// Output of a subtree: its proposal, total weight, momentum sum and ends.
struct Subtree {
    proposal: PhasePoint,
    log_weight: f64,
    rho: Vec<f64>,
    begin: Edge,
    end: Edge,
    valid: bool,
}

impl<T: GradientTarget + ?Sized, G: Rng> Builder<'_, T, G> {
    /// Extends the trajectory from `z` by `2^depth` steps in direction `sign`.
    fn build(&mut self, z: &mut PhasePoint, depth: usize, sign: f64) -> Subtree {
        if depth == 0 {
            leapfrog_step(self.target, z, sign * self.eps, self.inv_mass);
            self.n_leapfrog += 1;
            let h = z.hamiltonian(self.inv_mass);
            if h - self.h0 > MAX_DELTA_H {
                self.diverged = true;
            }
            let log_w = self.h0 - h;
            self.sum_metro_prob += if log_w > 0.0 { 1.0 } else { log_w.exp() };
            let edge = Edge { p: z.p.clone(), v: z.velocity(self.inv_mass) };
            return Subtree {
                proposal: z.clone(),
                log_weight: log_w,
                rho: z.p.clone(),
                begin: edge.clone(),
                end: edge,
                valid: !self.diverged,
            };
        }
        let init = self.build(z, depth - 1, sign);
        if !init.valid {
            return init;
        }
        let fin = self.build(z, depth - 1, sign);
        if !fin.valid {
            return Subtree { valid: false, ..fin };
        }
        let log_weight = log_add(init.log_weight, fin.log_weight);
        let take_final = fin.log_weight > log_weight
            || self.rng.random::<f64>() < (fin.log_weight - log_weight).exp();
        let proposal = if take_final { fin.proposal } else { init.proposal };
        let rho = add(&init.rho, &fin.rho);
        let mut valid = no_u_turn(&init.begin.v, &fin.end.v, &rho);
        valid &= no_u_turn(&init.begin.v, &fin.begin.v, &add(&init.rho, &fin.begin.p));
        valid &= no_u_turn(&init.end.v, &fin.end.v, &add(&fin.rho, &init.end.p));
        Subtree { proposal, log_weight, rho, begin: init.begin, end: fin.end, valid }
    }
}

/// Draws a fresh momentum `p ~ N(0, M)` for a diagonal `M = diag(1/inv_mass)`.
pub fn sample_momentum<G: Rng>(rng: &mut G, inv_mass: &[f64]) -> Vec<f64> {
    inv_mass.iter().map(|m| rng.sample::<f64, _>(StandardNormal) / m.sqrt()).collect()
}

/// One NUTS transition from `current`, resampling the momentum.
///
/// `max_depth = 0` is treated as depth 1 so that the trajectory always
/// contains one leapfrog step.
pub fn nuts_transition<T: GradientTarget + ?Sized, G: Rng>(
    target: &T,
    current: &PhasePoint,
    eps: f64,
    inv_mass: &[f64],
    max_depth: usize,
    rng: &mut G,
) -> Transition {
    let mut z0 = current.clone();
    z0.p = sample_momentum(rng, inv_mass);
    let h0 = z0.hamiltonian(inv_mass);
    let edge0 = Edge { p: z0.p.clone(), v: z0.velocity(inv_mass) };

    let mut fwd = z0.clone();
    let mut bck = z0.clone();
    let mut sample = z0.clone();
    // Outer ends of the trajectory and inner ends of its two halves, named
    // half_end: `bck_fwd` is the forward end of the backward half.
    let (mut fwd_fwd, mut bck_bck) = (edge0.clone(), edge0);
    let (mut fwd_bck, mut bck_fwd): (Edge, Edge);
    let mut rho = z0.p.clone();
    let mut log_sum_weight = 0.0;

    let mut b = Builder {
        target,
        inv_mass,
        eps,
        h0,
        rng,
        n_leapfrog: 0,
        sum_metro_prob: 0.0,
        diverged: false,
    };
    let mut depth = 0;
    while depth < max_depth.max(1) {
        let forward = b.rng.random::<f64>() > 0.5;
        let (sub, rho_fwd, rho_bck);
        if forward {
            // the old trajectory becomes the backward half
            bck_fwd = fwd_fwd.clone();
            sub = b.build(&mut fwd, depth, 1.0);
            fwd_bck = sub.begin.clone();
            fwd_fwd = sub.end.clone();
            rho_bck = rho.clone();
            rho_fwd = sub.rho.clone();
        } else {
            fwd_bck = bck_bck.clone();
            sub = b.build(&mut bck, depth, -1.0);
            bck_fwd = sub.begin.clone();
            bck_bck = sub.end.clone();
            rho_fwd = rho.clone();
            rho_bck = sub.rho.clone();
        }
        if !sub.valid {
            break;
        }
        depth += 1;
        if sub.log_weight > log_sum_weight || b.rng.random::<f64>() < (sub.log_weight - log_sum_weight).exp() {
            sample = sub.proposal;
        }
        log_sum_weight = log_add(log_sum_weight, sub.log_weight);
        rho = add(&rho_bck, &rho_fwd);
        let mut persist = no_u_turn(&bck_bck.v, &fwd_fwd.v, &rho);
        persist &= no_u_turn(&bck_bck.v, &fwd_bck.v, &add(&rho_bck, &fwd_bck.p));
        persist &= no_u_turn(&bck_fwd.v, &fwd_fwd.v, &add(&rho_fwd, &bck_fwd.p));
        if !persist {
            break;
        }
    }
    let accept_stat = if b.n_leapfrog > 0 { b.sum_metro_prob / b.n_leapfrog as f64 } else { 0.0 };
    let energy = sample.hamiltonian(inv_mass);
    Transition {
        point: sample,
        accept_stat,
        depth,
        n_leapfrog: b.n_leapfrog,
        diverged: b.diverged,
        energy,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    struct StdNormal(usize);

    impl GradientTarget for StdNormal {
        fn dim(&self) -> usize {
            self.0
        }
        fn value_and_grad(&self, q: &[f64], grad: &mut [f64]) -> f64 {
            for (g, x) in grad.iter_mut().zip(q) {
                *g = -x;
            }
            -0.5 * dot(q, q)
        }
    }

    #[test]
    fn depth_zero_takes_one_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let z = PhasePoint::new(&StdNormal(3), vec![0.1, 0.2, 0.3]);
        let t = nuts_transition(&StdNormal(3), &z, 0.3, &[1.0; 3], 0, &mut rng);
        assert_eq!(t.n_leapfrog, 1);
        assert!(t.accept_stat > 0.0 && t.accept_stat <= 1.0);
    }

    #[test]
    fn depth_zero_is_a_two_state_choice() {
        // The chosen state is either the start or the single leapfrog image.
        let target = StdNormal(2);
        let z = PhasePoint::new(&target, vec![0.4, -1.0]);
        let mut moved = 0;
        for seed in 0..200 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = nuts_transition(&target, &z, 2.5, &[1.0; 2], 0, &mut rng);
            if t.point.q != z.q {
                moved += 1;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut w = z.clone();
                w.p = sample_momentum(&mut rng, &[1.0; 2]);
                let forward = rng.random::<f64>() > 0.5;
                leapfrog_step(&target, &mut w, if forward { 2.5 } else { -2.5 }, &[1.0; 2]);
                assert_eq!(t.point.q, w.q);
            }
        }
        assert!(moved > 0 && moved < 200);
    }

    #[test]
    fn huge_step_diverges() {
        struct Steep;
        impl GradientTarget for Steep {
            fn dim(&self) -> usize {
                1
            }
            fn value_and_grad(&self, q: &[f64], grad: &mut [f64]) -> f64 {
                grad[0] = -4.0 * q[0].powi(3);
                -q[0].powi(4)
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let z = PhasePoint::new(&Steep, vec![2.0]);
        let t = nuts_transition(&Steep, &z, 5.0, &[1.0], 10, &mut rng);
        assert!(t.diverged);
        assert_eq!(t.point.q, z.q);
    }

    #[test]
    fn standard_normal_calibration() {
        let target = StdNormal(10);
        let mut means = Vec::new();
        for chain in 0..4u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            rng.set_stream(chain);
            let mut z = PhasePoint::new(&target, vec![0.0; 10]);
            let mut sum = vec![0.0; 10];
            let draws = 2000;
            for _ in 0..draws {
                z = nuts_transition(&target, &z, 0.6, &[1.0; 10], 10, &mut rng).point;
                for (s, x) in sum.iter_mut().zip(&z.q) {
                    *s += x;
                }
            }
            means.push(sum.into_iter().map(|s| s / draws as f64).collect::<Vec<_>>());
        }
        // NUTS on a Gaussian is nearly independent; allow 4 naive SEs with
        // a factor 1.5 for residual autocorrelation.
        let se = 1.5 / (2000f64).sqrt();
        for m in means.iter().flatten() {
            assert!(m.abs() < 4.0 * se, "mean {m}");
        }
    }
}
