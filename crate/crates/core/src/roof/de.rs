//! Differential evolution, `rand/1/bin` strategy.
//!
//! Per generation every member `x_i` gets a trial vector built from three
//! distinct other members, `v = x_a + F·(x_b − x_c)`, with `F` drawn once per
//! generation from the mutation interval. Binomial crossover at rate `CR`
//! (one coordinate always taken from `v`) produces the trial; coordinates
//! outside the box are reflected back in. Selection is greedy and
//! synchronous: all trials are scored before any replacement.
//!
//! With `polish` set, the final best member is refined by a Nelder–Mead
//! search on the clamped box and kept only if it scores lower.
//!
//! Trial generation consumes the caller's [`Rng`] sequentially; scoring runs
//! in parallel. The objective is a pure function, so results depend only on
//! the seed.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Rng;
use super::nelder_mead::{nelder_mead, NelderMeadOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub max_iterations: usize,
    pub population_size: usize,
    /// Mutation factor interval `[lo, hi)`, sampled once per generation.
    pub mutation: (f64, f64),
    pub crossover_rate: f64,
    /// Stop once the standard deviation of population scores drops below this.
    pub tolerance: f64,
    pub seed: u64,
    /// Refine the final best member with a bounded simplex search.
    pub polish: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            population_size: 40,
            mutation: (0.5, 1.0),
            crossover_rate: 0.7,
            tolerance: 1e-8,
            seed: 0,
            polish: true,
        }
    }
}

impl OptimizerConfig {
    /// Settings for the fidelity lower bound's simplex search.
    pub fn lower_bound() -> Self {
        Self { max_iterations: 200, population_size: 20, ..Self::default() }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.population_size < 4 {
            return Err(Error::InvalidArgument(format!(
                "population size {} is below the minimum of 4",
                self.population_size
            )));
        }
        if !(self.crossover_rate > 0.0 && self.crossover_rate <= 1.0) {
            return Err(Error::InvalidArgument(format!("crossover rate {} not in (0, 1]", self.crossover_rate)));
        }
        let (lo, hi) = self.mutation;
        if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo <= hi) {
            return Err(Error::InvalidArgument(format!("mutation interval ({lo}, {hi}) is invalid")));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeOutcome {
    pub best_x: Vec<f64>,
    pub best_value: f64,
    /// Generations run after initialization.
    pub iterations: usize,
    pub converged: bool,
    /// Best score after initialization and after each generation.
    pub history: Vec<f64>,
}

pub fn differential_evolution<F>(
    objective: F,
    bounds: &[(f64, f64)],
    config: &OptimizerConfig,
    rng: &mut Rng,
) -> Result<DeOutcome>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    differential_evolution_seeded(objective, bounds, &[], config, rng)
}

/// Like [`differential_evolution`], with the first members of the initial
/// population replaced by `initial` (clamped into the box).
pub fn differential_evolution_seeded<F>(
    objective: F,
    bounds: &[(f64, f64)],
    initial: &[Vec<f64>],
    config: &OptimizerConfig,
    rng: &mut Rng,
) -> Result<DeOutcome>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    config.validate()?;
    validate_bounds(bounds)?;
    let dim = bounds.len();
    let np = config.population_size;

    let mut pop: Vec<Vec<f64>> = (0..np)
        .map(|_| bounds.iter().map(|&(lo, hi)| rng.uniform_in(lo, hi)).collect())
        .collect();
    for (slot, x) in pop.iter_mut().zip(initial) {
        if x.len() != dim {
            return Err(Error::InvalidArgument(format!("initial point has length {}, expected {dim}", x.len())));
        }
        *slot = x.iter().zip(bounds).map(|(&v, &(lo, hi))| v.clamp(lo, hi)).collect();
    }
    let mut scores = evaluate(&objective, &pop);

    let mut best = argmin(&scores);
    let mut history = vec![scores[best]];
    let mut iterations = 0;
    let mut converged = spread(&scores) < config.tolerance;

    while iterations < config.max_iterations && !converged {
        let f = rng.uniform_in(config.mutation.0, config.mutation.1);
        let trials: Vec<Vec<f64>> = (0..np)
            .map(|i| {
                let [a, b, c] = pick_three(np, i, rng);
                let forced = rng.index(dim);
                (0..dim)
                    .map(|j| {
                        if j == forced || rng.uniform() < config.crossover_rate {
                            let v = pop[a][j] + f * (pop[b][j] - pop[c][j]);
                            reflect(v, bounds[j].0, bounds[j].1)
                        } else {
                            pop[i][j]
                        }
                    })
                    .collect()
            })
            .collect();
        let trial_scores = evaluate(&objective, &trials);
        for (i, (trial, score)) in trials.into_iter().zip(trial_scores).enumerate() {
            if score <= scores[i] {
                pop[i] = trial;
                scores[i] = score;
            }
        }
        best = argmin(&scores);
        history.push(scores[best]);
        iterations += 1;
        converged = spread(&scores) < config.tolerance;
    }

    let mut best_x = pop[best].clone();
    let mut best_value = scores[best];
    if config.polish && best_value.is_finite() {
        let clamp = |x: &[f64]| -> Vec<f64> { x.iter().zip(bounds).map(|(&v, &(lo, hi))| v.clamp(lo, hi)).collect() };
        let opts = NelderMeadOptions { step: 0.05, max_iterations: 200 * dim.min(50), f_tol: 1e-12, x_tol: 1e-10 };
        let (x, _) = nelder_mead(|x| objective(&clamp(x)), &best_x, &opts);
        let x = clamp(&x);
        let v = objective(&x);
        if v < best_value {
            best_x = x;
            best_value = v;
            history.push(v);
        }
    }

    Ok(DeOutcome { best_x, best_value, iterations, converged, history })
}

fn validate_bounds(bounds: &[(f64, f64)]) -> Result<()> {
    if bounds.is_empty() {
        return Err(Error::InvalidArgument("empty search box".into()));
    }
    for (j, &(lo, hi)) in bounds.iter().enumerate() {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::InvalidArgument(format!("bound {j} = ({lo}, {hi}) is invalid")));
        }
    }
    Ok(())
}

fn evaluate<F>(objective: &F, points: &[Vec<f64>]) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let score = |x: &Vec<f64>| {
        let v = objective(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    if points.len() * points[0].len() >= 256 {
        points.par_iter().map(score).collect()
    } else {
        points.iter().map(score).collect()
    }
}

fn argmin(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s < scores[best] {
            best = i;
        }
    }
    best
}

fn spread(scores: &[f64]) -> f64 {
    if scores.iter().any(|s| !s.is_finite()) {
        return f64::INFINITY;
    }
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    (scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n).sqrt()
}

fn pick_three(np: usize, exclude: usize, rng: &mut Rng) -> [usize; 3] {
    let mut out = [0; 3];
    let mut k = 0;
    while k < 3 {
        let cand = rng.index(np);
        if cand != exclude && !out[..k].contains(&cand) {
            out[k] = cand;
            k += 1;
        }
    }
    out
}

fn reflect(v: f64, lo: f64, hi: f64) -> f64 {
    let mut v = v;
    if v < lo {
        v = 2.0 * lo - v;
    }
    if v > hi {
        v = 2.0 * hi - v;
    }
    v.clamp(lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }

    fn rastrigin(x: &[f64]) -> f64 {
        10.0 * x.len() as f64
            + x.iter().map(|v| v * v - 10.0 * (2.0 * std::f64::consts::PI * v).cos()).sum::<f64>()
    }

    #[test]
    fn sphere_ten_dims() {
        let bounds = vec![(-5.0, 5.0); 10];
        let mut rng = Rng::new(42);
        let out = differential_evolution(sphere, &bounds, &OptimizerConfig::default(), &mut rng).unwrap();
        assert!(out.best_value < 1e-6, "{}", out.best_value);
        assert!(out.iterations <= 500);
    }

    #[test]
    fn rastrigin_five_dims() {
        let bounds = vec![(-5.12, 5.12); 5];
        let mut rng = Rng::new(7);
        let out = differential_evolution(rastrigin, &bounds, &OptimizerConfig::default(), &mut rng).unwrap();
        assert!(out.best_value < 1.0, "{}", out.best_value);
    }

    #[test]
    fn equal_seeds_give_identical_results() {
        let bounds = vec![(-5.0, 5.0); 6];
        let cfg = OptimizerConfig { max_iterations: 50, ..Default::default() };
        let a = differential_evolution(rastrigin, &bounds, &cfg, &mut Rng::new(3)).unwrap();
        let b = differential_evolution(rastrigin, &bounds, &cfg, &mut Rng::new(3)).unwrap();
        assert_eq!(a.best_x, b.best_x);
        assert_eq!(a.history, b.history);
    }

    #[test]
    fn history_is_non_increasing() {
        let bounds = vec![(-5.12, 5.12); 4];
        let out = differential_evolution(rastrigin, &bounds, &OptimizerConfig::default(), &mut Rng::new(1)).unwrap();
        assert!(out.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn stays_in_bounds() {
        let bounds = vec![(1.0, 2.0), (-3.0, -2.5)];
        // Unconstrained minimum at the origin, outside the box.
        let out = differential_evolution(sphere, &bounds, &OptimizerConfig::default(), &mut Rng::new(8)).unwrap();
        assert!((out.best_x[0] - 1.0).abs() < 1e-6 && (out.best_x[1] + 2.5).abs() < 1e-6);
        for (x, (lo, hi)) in out.best_x.iter().zip(&bounds) {
            assert!(x >= lo && x <= hi);
        }
    }

    #[test]
    fn seeded_start_is_kept_when_optimal() {
        let bounds = vec![(-1.0, 1.0); 3];
        let cfg = OptimizerConfig { max_iterations: 1, ..Default::default() };
        let out =
            differential_evolution_seeded(sphere, &bounds, &[vec![0.0; 3]], &cfg, &mut Rng::new(0)).unwrap();
        assert_eq!(out.best_value, 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut rng = Rng::new(0);
        let bad_pop = OptimizerConfig { population_size: 3, ..Default::default() };
        assert!(differential_evolution(sphere, &[(0.0, 1.0)], &bad_pop, &mut rng).is_err());
        let bad_cr = OptimizerConfig { crossover_rate: 0.0, ..Default::default() };
        assert!(differential_evolution(sphere, &[(0.0, 1.0)], &bad_cr, &mut rng).is_err());
        let cfg = OptimizerConfig::default();
        assert!(differential_evolution(sphere, &[(1.0, 0.0)], &cfg, &mut rng).is_err());
        assert!(differential_evolution(sphere, &[(0.0, f64::INFINITY)], &cfg, &mut rng).is_err());
    }
}
