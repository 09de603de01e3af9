//! Cross-entropy search for a deterministic linear threshold policy.

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use oee_core::rng::{from_seed, label, stream};
use oee_core::{rollout, DiscountSpec, Environment, Error, Policy, Result};

use crate::experiments::cell_seed;

#[derive(Debug, Clone, PartialEq)]
pub struct CemConfig {
    pub population: usize,
    pub elite: usize,
    pub generations: usize,
    /// Episodes averaged per candidate.
    pub episodes: usize,
    pub horizon: usize,
    pub init_std: f64,
    /// Added to the refitted standard deviation each generation.
    pub extra_std: f64,
    /// Required mean episode length over `check_episodes` final episodes.
    pub target: f64,
    pub check_episodes: usize,
}

impl Default for CemConfig {
    fn default() -> Self {
        CemConfig {
            population: 50,
            elite: 10,
            generations: 50,
            episodes: 5,
            horizon: 100,
            init_std: 1.0,
            extra_std: 0.05,
            target: 95.0,
            check_episodes: 100,
        }
    }
}

fn policy_of(theta: &[f64]) -> Policy {
    Policy::ExpertLinear {
        weights: theta[..theta.len() - 1].to_vec(),
        bias: theta[theta.len() - 1],
    }
}

/// Mean undiscounted episode return over `episodes` episodes drawn from
/// `stream(seed, i)`.
pub fn mean_return<E: Environment + ?Sized>(
    env: &E,
    policy: &Policy,
    horizon: usize,
    episodes: usize,
    seed: u64,
) -> Result<f64> {
    let spec = DiscountSpec::new(1.0, horizon, episodes)?;
    let total = (0..episodes as u64)
        .into_par_iter()
        .map(|i| rollout(env, policy, &spec, &mut stream(seed, i)).map(|t| t.discounted_return(1.0)))
        .collect::<Result<Vec<f64>>>()?;
    Ok(total.iter().sum::<f64>() / episodes as f64)
}

/// Trains `a = 1[w.s + b > 0]` on a two-action environment. Fails with the
/// best-so-far score when the final check stays below `config.target`.
pub fn cem_train_expert<E: Environment + ?Sized>(env: &E, config: &CemConfig, seed: u64) -> Result<Policy> {
    if env.action_spec() != oee_core::ActionSpec::Discrete(2) {
        return Err(Error::Argument("CEM expects two discrete actions".into()));
    }
    if config.elite == 0 || config.elite > config.population || config.episodes == 0 {
        return Err(Error::Argument("bad CEM population settings".into()));
    }
    let dim = env.state_dim() + 1;
    let mut mean = vec![0.0; dim];
    let mut std = vec![config.init_std; dim];
    let mut rng = from_seed(cell_seed(seed, &[label::CEM]));
    let mut best = (f64::NEG_INFINITY, mean.clone());
    for gen in 0..config.generations {
        let candidates: Vec<Vec<f64>> = (0..config.population)
            .map(|_| {
                (0..dim)
                    .map(|k| Normal::new(mean[k], std[k]).expect("positive std").sample(&mut rng))
                    .collect()
            })
            .collect();
        let eval_seed = cell_seed(seed, &[label::EVAL, gen as u64]);
        let mut scored = candidates
            .into_iter()
            .map(|c: Vec<f64>| {
                Ok((
                    mean_return(env, &policy_of(&c), config.horizon, config.episodes, eval_seed)?,
                    c,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        scored.sort_by(|a, b| b.0.total_cmp(&a.0));
        if scored[0].0 > best.0 {
            best = scored[0].clone();
        }
        let elite = &scored[..config.elite];
        for k in 0..dim {
            let m = elite.iter().map(|e| e.1[k]).sum::<f64>() / config.elite as f64;
            let v = elite.iter().map(|e| (e.1[k] - m).powi(2)).sum::<f64>() / config.elite as f64;
            mean[k] = m;
            std[k] = v.sqrt() + config.extra_std;
        }
        let elite_mean = elite.iter().map(|e| e.0).sum::<f64>() / config.elite as f64;
        log::debug!(
            "CEM generation {gen}: best {:.1}, elite mean {elite_mean:.1}",
            scored[0].0
        );
        if elite_mean >= config.horizon as f64 {
            break;
        }
    }
    let check_seed = cell_seed(seed, &[label::EVAL, u64::MAX]);
    let mut chosen = (f64::NEG_INFINITY, mean.clone());
    for theta in [mean, best.1] {
        let score = mean_return(
            env,
            &policy_of(&theta),
            config.horizon,
            config.check_episodes,
            check_seed,
        )?;
        if score > chosen.0 {
            chosen = (score, theta);
        }
    }
    if chosen.0 < config.target {
        return Err(Error::TrainingDiverged {
            iteration: config.generations,
            reason: format!(
                "CEM best policy averages {:.2} steps, below the required {}",
                chosen.0, config.target
            ),
        });
    }
    log::info!(
        "CEM expert averages {:.2} steps over {} episodes",
        chosen.0,
        config.check_episodes
    );
    Ok(policy_of(&chosen.1))
}
