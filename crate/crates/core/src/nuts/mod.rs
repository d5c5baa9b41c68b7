//! No-U-Turn Hamiltonian Monte Carlo with windowed warmup adaptation.

mod adapt;
mod hamiltonian;
mod tree;

pub use adapt::{find_initial_step, DualAveraging, Welford, WindowSchedule, MIN_WARMUP};
pub use hamiltonian::{leapfrog, leapfrog_step, PhasePoint};
pub use tree::{nuts_transition, sample_momentum, Transition, MAX_DELTA_H};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{FrodoError, Result};
use crate::gradient::GradientTarget;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerSettings {
    pub chains: usize,
    pub warmup: usize,
    pub sampling: usize,
    pub max_tree_depth: usize,
    pub target_accept: f64,
    pub seed: u64,
}

impl Default for SamplerSettings {
    fn default() -> Self {
        SamplerSettings {
            chains: 4,
            warmup: 750,
            sampling: 1250,
            max_tree_depth: 12,
            target_accept: 0.99,
            seed: 1,
        }
    }
}

impl SamplerSettings {
    pub fn validate(&self) -> Result<()> {
        if self.chains == 0 {
            return Err(FrodoError::Config("need at least one chain".into()));
        }
        if self.sampling == 0 {
            return Err(FrodoError::Config("need at least one sampling iteration".into()));
        }
        if self.warmup < MIN_WARMUP {
            return Err(FrodoError::Config(format!(
                "warmup must be at least {MIN_WARMUP} iterations, got {}",
                self.warmup
            )));
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(FrodoError::Config(format!(
                "target acceptance must lie in (0, 1), got {}",
                self.target_accept
            )));
        }
        if self.max_tree_depth > 30 {
            return Err(FrodoError::Config("maximum tree depth above 30 is not supported".into()));
        }
        Ok(())
    }

    /// RNG of one chain: the seed picks the key, the chain the stream.
    pub fn chain_rng(&self, chain: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(chain as u64);
        rng
    }
}

/// Post-warmup output of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainOutput {
    /// `sampling` rows of unconstrained draws.
    pub draws: Vec<Vec<f64>>,
    pub log_density: Vec<f64>,
    pub accept_stat: Vec<f64>,
    pub divergent: Vec<bool>,
    pub tree_depth: Vec<usize>,
    pub n_leapfrog: Vec<usize>,
    pub energy: Vec<f64>,
    /// Step size frozen at the end of warmup.
    pub step_size: f64,
    /// Diagonal of the inverse mass matrix at the end of warmup.
    pub inv_mass: Vec<f64>,
    pub warmup_divergences: usize,
}

impl ChainOutput {
    pub fn divergences(&self) -> usize {
        self.divergent.iter().filter(|&&d| d).count()
    }

    /// Draws of coordinate `j`.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.draws.iter().map(|d| d[j]).collect()
    }
}

/// Runs one chain: warmup with adaptation, then sampling.
pub fn run_chain<T: GradientTarget + ?Sized>(
    target: &T,
    init: &[f64],
    settings: &SamplerSettings,
    chain: usize,
) -> Result<ChainOutput> {
    settings.validate()?;
    let dim = target.dim();
    if init.len() != dim {
        return Err(FrodoError::Dimension(format!("init has {} values, target {}", init.len(), dim)));
    }
    let mut rng = settings.chain_rng(chain);
    let mut z = PhasePoint::new(target, init.to_vec());
    if !z.log_density.is_finite() {
        return Err(FrodoError::SamplerFailure(format!(
            "chain {chain}: log-density at the initial point is not finite"
        )));
    }
    let schedule = WindowSchedule::new(settings.warmup)?;
    let mut inv_mass = vec![1.0; dim];
    let mut eps = find_initial_step(target, &z, 1.0, &inv_mass, &mut rng)?;
    let mut da = DualAveraging::new(eps, settings.target_accept);
    let mut welford = Welford::new(dim);
    let mut warmup_divergences = 0;

    for i in 0..settings.warmup {
        let t = nuts_transition(target, &z, eps, &inv_mass, settings.max_tree_depth, &mut rng);
        warmup_divergences += usize::from(t.diverged);
        z = t.point;
        eps = da.update(t.accept_stat);
        if schedule.in_slow_window(i) {
            welford.add(&z.q);
        }
        if schedule.window_ends_at(i) {
            inv_mass = welford.regularized_variance();
            welford.reset();
            eps = find_initial_step(target, &z, eps, &inv_mass, &mut rng)?;
            da.restart(eps);
        }
        if (i + 1) % 100 == 0 {
            log::debug!("chain {chain}: warmup {}/{} step {eps:.4}", i + 1, settings.warmup);
        }
    }
    if warmup_divergences == settings.warmup {
        return Err(FrodoError::SamplerFailure(format!(
            "chain {chain}: every warmup transition diverged (final step size {eps:.3e})"
        )));
    }
    let step_size = da.final_step();

    let n = settings.sampling;
    let mut out = ChainOutput {
        draws: Vec::with_capacity(n),
        log_density: Vec::with_capacity(n),
        accept_stat: Vec::with_capacity(n),
        divergent: Vec::with_capacity(n),
        tree_depth: Vec::with_capacity(n),
        n_leapfrog: Vec::with_capacity(n),
        energy: Vec::with_capacity(n),
        step_size,
        inv_mass: inv_mass.clone(),
        warmup_divergences,
    };
    for i in 0..n {
        let t = nuts_transition(target, &z, step_size, &inv_mass, settings.max_tree_depth, &mut rng);
        z = t.point;
        out.draws.push(z.q.clone());
        out.log_density.push(z.log_density);
        out.accept_stat.push(t.accept_stat);
        out.divergent.push(t.diverged);
        out.tree_depth.push(t.depth);
        out.n_leapfrog.push(t.n_leapfrog);
        out.energy.push(t.energy);
        if (i + 1) % 250 == 0 {
            log::debug!("chain {chain}: sampling {}/{n}", i + 1);
        }
    }
    Ok(out)
}

/// Runs `settings.chains` chains concurrently, one init per chain. Results
/// depend only on the seed and chain index.
pub fn run_chains<T: GradientTarget + ?Sized>(
    target: &T,
    inits: &[Vec<f64>],
    settings: &SamplerSettings,
) -> Result<Vec<ChainOutput>> {
    settings.validate()?;
    if inits.len() != settings.chains {
        return Err(FrodoError::Config(format!(
            "{} initial values for {} chains",
            inits.len(),
            settings.chains
        )));
    }
    std::thread::scope(|s| {
        let handles: Vec<_> = inits
            .iter()
            .enumerate()
            .map(|(c, init)| s.spawn(move || run_chain(target, init, settings, c)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(FrodoError::SamplerFailure("chain thread panicked".into()))))
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct ScaledNormal(Vec<f64>);

    impl GradientTarget for ScaledNormal {
        fn dim(&self) -> usize {
            self.0.len()
        }
        fn value_and_grad(&self, q: &[f64], grad: &mut [f64]) -> f64 {
            let mut lp = 0.0;
            for ((g, x), s) in grad.iter_mut().zip(q).zip(&self.0) {
                *g = -x / (s * s);
                lp -= 0.5 * (x / s).powi(2);
            }
            lp
        }
    }

    fn settings(chains: usize) -> SamplerSettings {
        SamplerSettings { chains, warmup: 300, sampling: 300, max_tree_depth: 10, target_accept: 0.8, seed: 7 }
    }

    #[test]
    fn settings_validation() {
        assert!(SamplerSettings::default().validate().is_ok());
        let bad = [
            SamplerSettings { chains: 0, ..Default::default() },
            SamplerSettings { warmup: 100, ..Default::default() },
            SamplerSettings { sampling: 0, ..Default::default() },
            SamplerSettings { target_accept: 1.0, ..Default::default() },
        ];
        for s in bad {
            assert!(matches!(s.validate(), Err(FrodoError::Config(_))));
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let target = ScaledNormal(vec![1.0, 2.0]);
        let inits = vec![vec![0.5, 0.5]; 2];
        let a = run_chains(&target, &inits, &settings(2)).unwrap();
        let b = run_chains(&target, &inits, &settings(2)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a[0].draws, a[1].draws);
    }

    #[test]
    fn adapts_mass_to_known_scales() {
        let target = ScaledNormal(vec![10.0, 1.0, 0.1]);
        let s = SamplerSettings { warmup: 1000, sampling: 100, ..settings(1) };
        let out = run_chain(&target, &[1.0, 1.0, 0.1], &s, 0).unwrap();
        for (m, sd) in out.inv_mass.iter().zip([10.0f64, 1.0, 0.1]) {
            let ratio = m / (sd * sd);
            assert!(ratio > 0.5 && ratio < 2.0, "inv mass {m} vs variance {}", sd * sd);
        }
    }

    #[test]
    fn init_count_must_match_chains() {
        let target = ScaledNormal(vec![1.0]);
        assert!(run_chains(&target, &[vec![0.0]], &settings(2)).is_err());
    }

    #[test]
    fn non_finite_start_fails() {
        struct Nowhere;
        impl GradientTarget for Nowhere {
            fn dim(&self) -> usize {
                1
            }
            fn value_and_grad(&self, _q: &[f64], grad: &mut [f64]) -> f64 {
                grad[0] = 0.0;
                f64::NEG_INFINITY
            }
        }
        assert!(matches!(run_chain(&Nowhere, &[0.0], &settings(1), 0), Err(FrodoError::SamplerFailure(_))));
    }
}
