//! Data-free ZeroMat training.
//!
//! The trainer never sees a rating. It maximizes
//!
//! ```text
//! L = sum_i sum_j ln(U_i . V_j) - 1/(2 sigma^2) sum_i |U_i|^2 - 1/(2 sigma^2) sum_j |V_j|^2
//! ```
//!
//! by stochastic ascent over uniformly sampled `(i, j)` pairs, using
//!
//! ```text
//! U_i <- U_i + eta * (V_j / (U_i . V_j) - 2 U_i)
//! V_j <- V_j + eta * (U_i / (U_i . V_j) - 2 V_j)
//! ```
//!
//! Both rules read the pre-step rows. Entries are then floored at `epsilon`
//! so that every dot product stays positive and `ln` stays defined.

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FactorModel, TrainConfig};
use crate::scalar::{dot, Scalar};

/// A finished training run.
#[derive(Clone, Debug, PartialEq)]
pub struct ZeroMatRun<T> {
    pub config: TrainConfig<T>,
    pub model: FactorModel<T>,
    pub likelihood_trace: Vec<TracePoint<T>>,
    /// Sampled pairs skipped because their dot product fell below `epsilon`.
    pub skipped_pairs: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint<T> {
    pub iteration: u64,
    pub log_likelihood: T,
}

fn check_dims(num_users: usize, num_items: usize) -> Result<()> {
    if num_users == 0 || num_items == 0 {
        return Err(Error::InvalidParameter(format!(
            "need at least one user and one item, got {num_users}x{num_items}"
        )));
    }
    Ok(())
}

fn entry_distribution<T: Scalar>(config: &TrainConfig<T>) -> Result<Uniform<T>> {
    config.validate()?;
    if config.epsilon > T::one() {
        return Err(Error::InvalidParameter(format!(
            "epsilon {} exceeds the initialization upper bound 1",
            config.epsilon
        )));
    }
    Ok(Uniform::new_inclusive(config.epsilon, T::one()))
}

fn init_with<T: Scalar>(
    num_users: usize,
    num_items: usize,
    config: &TrainConfig<T>,
    rng: &mut ChaCha8Rng,
) -> Result<FactorModel<T>> {
    check_dims(num_users, num_items)?;
    let dist = entry_distribution(config)?;
    let k = config.k;
    let users = (0..num_users * k).map(|_| dist.sample(rng)).collect();
    let items = (0..num_items * k).map(|_| dist.sample(rng)).collect();
    FactorModel::from_flat(num_users, num_items, k, users, items)
}

/// Draws every entry i.i.d. from `U[epsilon, 1]` with the config's seed.
pub fn init_factors<T: Scalar>(
    num_users: usize,
    num_items: usize,
    config: &TrainConfig<T>,
) -> Result<FactorModel<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    init_with(num_users, num_items, config, &mut rng)
}

fn row_log_sum<T: Scalar>(model: &FactorModel<T>, i: usize) -> Result<T> {
    let u = model.user(i);
    let mut acc = T::zero();
    for j in 0..model.num_items() {
        let d = dot(u, model.item(j));
        if !(d > T::zero()) {
            return Err(Error::NonPositiveDot {
                user: i,
                item: j,
                dot: d.as_f64(),
            });
        }
        acc += d.ln();
    }
    Ok(acc)
}

/// Evaluates the log-likelihood objective.
///
/// Fails with [`Error::NonPositiveDot`] naming the first offending pair in
/// user-major order.
pub fn log_likelihood<T: Scalar>(model: &FactorModel<T>, sigma_sq: T) -> Result<T> {
    if !(sigma_sq > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "sigma_sq must be positive, got {sigma_sq}"
        )));
    }
    // Per-row partial sums are collected in row order, so the total does not
    // depend on thread scheduling.
    let rows: Vec<T> = (0..model.num_users())
        .into_par_iter()
        .map(|i| row_log_sum(model, i))
        .collect::<Result<_>>()?;
    let log_term: T = rows.into_iter().sum();
    let sq = |xs: &[T]| xs.iter().fold(T::zero(), |a, &x| a + x * x);
    let penalty = (sq(model.user_factors()) + sq(model.item_factors())) / (T::of(2.0) * sigma_sq);
    Ok(log_term - penalty)
}

/// Full gradient of [`log_likelihood`] as flat `(dL/dU, dL/dV)` buffers.
pub fn log_likelihood_gradient<T: Scalar>(
    model: &FactorModel<T>,
    sigma_sq: T,
) -> Result<(Vec<T>, Vec<T>)> {
    let k = model.k();
    let inv = sigma_sq.recip();
    let mut gu: Vec<T> = model.user_factors().iter().map(|&x| -x * inv).collect();
    let mut gv: Vec<T> = model.item_factors().iter().map(|&x| -x * inv).collect();
    for i in 0..model.num_users() {
        let u = model.user(i);
        for j in 0..model.num_items() {
            let v = model.item(j);
            let d = dot(u, v);
            if !(d > T::zero()) {
                return Err(Error::NonPositiveDot {
                    user: i,
                    item: j,
                    dot: d.as_f64(),
                });
            }
            for c in 0..k {
                gu[i * k + c] += v[c] / d;
                gv[j * k + c] += u[c] / d;
            }
        }
    }
    Ok((gu, gv))
}

/// Applies one simultaneous update to `U_user` and `V_item`, then floors both
/// rows at `epsilon`.
pub fn sgd_step<T: Scalar>(
    model: &mut FactorModel<T>,
    user: usize,
    item: usize,
    eta: T,
    epsilon: T,
) -> Result<()> {
    model.check_indices(user, item)?;
    let d = dot(model.user(user), model.item(item));
    if !(d >= epsilon) {
        return Err(Error::DegeneratePair {
            user,
            item,
            dot: d.as_f64(),
            epsilon: epsilon.as_f64(),
        });
    }
    let two = T::of(2.0);
    let (u, v) = model.rows_mut(user, item);
    // Coordinate c of each new row depends only on coordinate c of the old
    // rows (plus the shared dot), so updating in place keeps pre-step reads.
    for (uc, vc) in u.iter_mut().zip(v.iter_mut()) {
        let (u0, v0) = (*uc, *vc);
        *uc = (u0 + eta * (v0 / d - two * u0)).max(epsilon);
        *vc = (v0 + eta * (u0 / d - two * v0)).max(epsilon);
    }
    Ok(())
}

/// Trains a ZeroMat model from the universe size and config alone.
///
/// The log-likelihood is recorded at iteration 0 and then every
/// `max(1, T / 100)` iterations.
pub fn train_zeromat<T: Scalar>(
    num_users: usize,
    num_items: usize,
    config: &TrainConfig<T>,
) -> Result<ZeroMatRun<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = init_with(num_users, num_items, config, &mut rng)?;

    let stride = (config.iterations / 100).max(1);
    let mut trace = vec![TracePoint {
        iteration: 0,
        log_likelihood: log_likelihood(&model, config.sigma_sq)?,
    }];
    let users = Uniform::new(0, num_users);
    let items = Uniform::new(0, num_items);
    let mut skipped = 0u64;

    for t in 1..=config.iterations {
        let i = users.sample(&mut rng);
        let j = items.sample(&mut rng);
        match sgd_step(&mut model, i, j, config.eta, config.epsilon) {
            Ok(()) => {}
            Err(Error::DegeneratePair { .. }) => skipped += 1,
            Err(e) => return Err(e),
        }
        if t % stride == 0 {
            trace.push(TracePoint {
                iteration: t,
                log_likelihood: log_likelihood(&model, config.sigma_sq)?,
            });
        }
    }
    if !model.is_finite() {
        return Err(Error::DegenerateModel(
            "training produced non-finite factors".into(),
        ));
    }
    Ok(ZeroMatRun {
        config: config.clone(),
        model,
        likelihood_trace: trace,
        skipped_pairs: skipped,
    })
}
