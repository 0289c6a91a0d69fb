//! Particle swarm search over feature masks and classifier hyperparameters.
//!
//! Each particle lives in `[0,1]^d`. The first `features` coordinates switch
//! a feature on when `≥ 0.5`; the rest map affinely onto hyperparameter
//! ranges, optionally snapped to a grid.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bnn::{fit_budgeted, BnnData, BnnModel, MlpArchitecture, ObjectiveSpec, TrainerConfig, WeightGroups};
use crate::error::{Error, Result};
use crate::eval::baselines::KnnModel;
use crate::scalar::Scalar;
use crate::signal::ClassLabel;
use crate::standardize::Standardizer;

/// Upper bound on `particles × iterations`.
pub const MAX_EVALUATION_BUDGET: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperRange {
    pub name: String,
    pub low: f64,
    pub high: f64,
    /// Number of grid points (≥ 2), or 0 for a continuous range.
    pub levels: usize,
}

impl HyperRange {
    fn decode(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let u = if self.levels >= 2 {
            let steps = (self.levels - 1) as f64;
            (u * steps).round() / steps
        } else {
            u
        };
        self.low + u * (self.high - self.low)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub features: usize,
    pub hyper: Vec<HyperRange>,
}

impl SearchSpace {
    pub fn dim(&self) -> usize {
        self.features + self.hyper.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim() == 0 {
            return Err(Error::param("search space has no coordinates"));
        }
        for h in &self.hyper {
            if !(h.low.is_finite() && h.high.is_finite() && h.low <= h.high) || h.levels == 1 {
                return Err(Error::param(format!("invalid range for hyperparameter '{}'", h.name)));
            }
        }
        Ok(())
    }

    pub fn decode<T: Scalar>(&self, position: &[T]) -> Candidate {
        Candidate {
            mask: position[..self.features].iter().map(|&u| u >= T::lit(0.5)).collect(),
            hyper: self
                .hyper
                .iter()
                .zip(&position[self.features..])
                .map(|(h, &u)| h.decode(u.as_f64()))
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub mask: Vec<bool>,
    pub hyper: Vec<f64>,
}

impl Candidate {
    pub fn active(&self) -> Vec<usize> {
        self.mask.iter().enumerate().filter(|(_, &on)| on).map(|(i, _)| i).collect()
    }

    pub fn is_valid(&self) -> bool {
        self.mask.iter().any(|&b| b)
    }

    fn key(&self) -> (Vec<bool>, Vec<u64>) {
        (self.mask.clone(), self.hyper.iter().map(|h| h.to_bits()).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwarmConfig {
    pub particles: usize,
    pub iterations: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    pub seed: u64,
}

impl Default for SwarmConfig {
    fn default() -> Self {
        SwarmConfig {
            particles: 10,
            iterations: 20,
            inertia: 0.72,
            cognitive: 1.49,
            social: 1.49,
            seed: 0,
        }
    }
}

impl SwarmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.particles == 0 || self.iterations == 0 {
            return Err(Error::param("swarm needs at least one particle and one iteration"));
        }
        if self.particles.saturating_mul(self.iterations) > MAX_EVALUATION_BUDGET {
            return Err(Error::param(format!(
                "particles × iterations exceeds the budget of {MAX_EVALUATION_BUDGET}"
            )));
        }
        if ![self.inertia, self.cognitive, self.social].iter().all(|v| v.is_finite()) {
            return Err(Error::param("swarm coefficients must be finite"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Particle<T: Scalar> {
    pub position: Vec<T>,
    pub velocity: Vec<T>,
    pub best_position: Vec<T>,
    /// `−∞` until first evaluated.
    pub best_fitness: T,
}

#[derive(Clone, Debug)]
pub struct Swarm<T: Scalar> {
    pub particles: Vec<Particle<T>>,
    pub best_position: Vec<T>,
    pub best_fitness: T,
    pub any_valid: bool,
    rng: ChaCha8Rng,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwarmResult {
    pub best: Candidate,
    pub fitness: f64,
    pub trace: Vec<TraceRow>,
    pub evaluations: usize,
}

impl<T: Scalar> Swarm<T> {
    /// Positions uniform in `[0,1]^d`, velocities zero.
    pub fn init(space: &SearchSpace, cfg: &SwarmConfig) -> Result<Self> {
        space.validate()?;
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let d = space.dim();
        let particles = (0..cfg.particles)
            .map(|_| {
                let position: Vec<T> = (0..d).map(|_| T::lit(rng.random::<f64>())).collect();
                Particle {
                    velocity: vec![T::zero(); d],
                    best_position: position.clone(),
                    position,
                    best_fitness: T::neg_infinity(),
                }
            })
            .collect();
        Ok(Swarm {
            particles,
            best_position: vec![T::zero(); d],
            best_fitness: T::neg_infinity(),
            any_valid: false,
            rng,
        })
    }

    /// `v ← w·v + c1·r1·(pbest − x) + c2·r2·(gbest − x)`, `x ← clamp(x + v)`.
    pub fn update_motion(&mut self, cfg: &SwarmConfig) {
        let (w, c1, c2) = (T::lit(cfg.inertia), T::lit(cfg.cognitive), T::lit(cfg.social));
        let gbest = &self.best_position;
        for p in &mut self.particles {
            for i in 0..p.position.len() {
                let r1 = T::lit(self.rng.random::<f64>());
                let r2 = T::lit(self.rng.random::<f64>());
                let x = p.position[i];
                p.velocity[i] = w * p.velocity[i] + c1 * r1 * (p.best_position[i] - x) + c2 * r2 * (gbest[i] - x);
                p.position[i] = (x + p.velocity[i]).max(T::zero()).min(T::one());
            }
        }
    }

    /// Scores every particle and updates personal and global bests.
    /// Returns the fitness of each particle.
    pub fn evaluate<F>(&mut self, space: &SearchSpace, score: &mut F) -> Result<Vec<T>>
    where
        F: FnMut(&[Candidate]) -> Result<Vec<T>>,
    {
        let candidates: Vec<Candidate> = self.particles.iter().map(|p| space.decode(&p.position)).collect();
        let values = score(&candidates)?;
        for ((p, c), &f) in self.particles.iter_mut().zip(&candidates).zip(&values) {
            self.any_valid |= c.is_valid();
            if f > p.best_fitness {
                p.best_fitness = f;
                p.best_position = p.position.clone();
            }
            if f > self.best_fitness {
                self.best_fitness = f;
                self.best_position = p.position.clone();
            }
        }
        Ok(values)
    }

    /// One motion update followed by re-evaluation.
    pub fn step<F>(&mut self, space: &SearchSpace, cfg: &SwarmConfig, score: &mut F) -> Result<Vec<T>>
    where
        F: FnMut(&[Candidate]) -> Result<Vec<T>>,
    {
        self.update_motion(cfg);
        self.evaluate(space, score)
    }
}

/// Runs `iterations` rounds (the first scores the initial swarm). Fitness
/// values are cached per decoded candidate; an invalid candidate scores 0
/// without calling `fitness`.
pub fn run<T, F>(space: &SearchSpace, cfg: &SwarmConfig, fitness: F) -> Result<SwarmResult>
where
    T: Scalar,
    F: Fn(&Candidate) -> Result<T> + Sync,
{
    let mut swarm = Swarm::<T>::init(space, cfg)?;
    let mut cache: HashMap<(Vec<bool>, Vec<u64>), T> = HashMap::new();
    let mut evaluations = 0usize;
    let mut score = |cands: &[Candidate]| -> Result<Vec<T>> {
        let mut fresh: Vec<&Candidate> = Vec::new();
        for c in cands {
            if c.is_valid() && !cache.contains_key(&c.key()) && !fresh.iter().any(|f| f.key() == c.key()) {
                fresh.push(c);
            }
        }
        let scored: Vec<Result<T>> = fresh.par_iter().map(|c| fitness(c)).collect();
        for (c, s) in fresh.iter().zip(scored) {
            cache.insert(c.key(), s?);
        }
        evaluations += fresh.len();
        Ok(cands
            .iter()
            .map(|c| if c.is_valid() { cache[&c.key()] } else { T::zero() })
            .collect())
    };
    let mut trace = Vec::with_capacity(cfg.iterations);
    for it in 0..cfg.iterations {
        let values = if it == 0 {
            swarm.evaluate(space, &mut score)?
        } else {
            swarm.step(space, cfg, &mut score)?
        };
        let mean = values.iter().map(|v| v.as_f64()).sum::<f64>() / values.len() as f64;
        trace.push(TraceRow {
            iteration: it + 1,
            best_fitness: swarm.best_fitness.as_f64(),
            mean_fitness: mean,
        });
    }
    if !swarm.any_valid {
        return Err(Error::Search(format!(
            "no candidate with an active feature after {} iterations",
            cfg.iterations
        )));
    }
    Ok(SwarmResult {
        best: space.decode(&swarm.best_position),
        fitness: swarm.best_fitness.as_f64(),
        trace,
        evaluations,
    })
}

/// Classifier trained inside the fitness function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum FitnessModel {
    /// Budgeted one-hidden-layer network on ±1 targets; the first
    /// hyperparameter, when present, is `log10` of the shared decay.
    Bnn {
        hidden: usize,
        max_iterations: usize,
        default_decay: f64,
    },
    Knn {
        k: usize,
    },
}

impl Default for FitnessModel {
    fn default() -> Self {
        FitnessModel::Bnn {
            hidden: 2,
            max_iterations: 100,
            default_decay: 0.1,
        }
    }
}

/// An inner split as row indices into [`FitnessProblem::rows`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexFold {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

pub struct FitnessProblem<'a, T: Scalar> {
    pub rows: &'a [Vec<T>],
    pub labels: &'a [ClassLabel],
    pub folds: &'a [IndexFold],
}

/// Mean validation accuracy (fraction in `[0,1]`) over the inner folds of the
/// masked classifier. An empty mask scores 0.
pub fn fitness<T: Scalar>(candidate: &Candidate, problem: &FitnessProblem<'_, T>, model: FitnessModel, seed: u64) -> Result<T> {
    let cols = candidate.active();
    if cols.is_empty() {
        return Ok(T::zero());
    }
    if problem.folds.is_empty() {
        return Err(Error::param("fitness needs at least one inner fold"));
    }
    if let Some(&c) = cols.iter().find(|&&c| problem.rows.first().is_some_and(|r| c >= r.len())) {
        return Err(Error::param(format!("mask selects column {c} beyond the feature count")));
    }
    let pick = |idx: &[usize]| -> Vec<Vec<T>> { idx.iter().map(|&i| cols.iter().map(|&c| problem.rows[i][c]).collect()).collect() };
    let mut total = T::zero();
    for (f, fold) in problem.folds.iter().enumerate() {
        let train = pick(&fold.train);
        let labels: Vec<ClassLabel> = fold.train.iter().map(|&i| problem.labels[i]).collect();
        let valid = pick(&fold.validation);
        let truth: Vec<ClassLabel> = fold.validation.iter().map(|&i| problem.labels[i]).collect();
        let predicted: Vec<ClassLabel> = match model {
            FitnessModel::Knn { k } => {
                let m = KnnModel::fit(&train, &labels, k.min(train.len()))?;
                valid.iter().map(|x| m.predict(x)).collect::<Result<_>>()?
            }
            FitnessModel::Bnn {
                hidden,
                max_iterations,
                default_decay,
            } => {
                let decay = candidate.hyper.first().map_or(default_decay, |h| 10f64.powf(*h));
                let st = Standardizer::fit(&train)?;
                let data = BnnData::new(st.transform_all(&train)?, labels.iter().map(|l| l.signed()).collect())?;
                let arch = MlpArchitecture::new(cols.len(), vec![hidden])?;
                let groups = WeightGroups::per_layer(&arch, T::lit(decay));
                let spec = ObjectiveSpec::default();
                let trainer = TrainerConfig {
                    max_iterations,
                    seed: seed ^ f as u64,
                    ..TrainerConfig::default()
                };
                let m = fit_budgeted(&data, &arch, &groups, &spec, &trainer)?;
                let net = BnnModel::from_weights(m.params, &BnnData::empty(), &arch, &groups, &spec)?;
                valid
                    .iter()
                    .map(|x| net.predict_class(&st.transform(x)?))
                    .collect::<Result<_>>()?
            }
        };
        let correct = predicted.iter().zip(&truth).filter(|(p, t)| p == t).count();
        total += T::from_usize_lossy(correct) / T::from_usize_lossy(truth.len().max(1));
    }
    Ok(total / T::from_usize_lossy(problem.folds.len()))
}
