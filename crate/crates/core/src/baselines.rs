//! History-based baselines: PMF trained by SGD, and uniform random guessing.

use rand::distributions::{Distribution, Uniform};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FactorModel, RatingsDataset};
use crate::scalar::{dot, Scalar};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PmfConfig<T> {
    pub k: usize,
    pub eta: T,
    pub lambda_reg: T,
    pub epochs: usize,
    pub seed: u64,
}

impl<T: Scalar> Default for PmfConfig<T> {
    fn default() -> Self {
        PmfConfig {
            k: 10,
            eta: T::of(0.005),
            lambda_reg: T::of(0.05),
            epochs: 30,
            seed: 0,
        }
    }
}

impl<T: Scalar> PmfConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be >= 1".into()));
        }
        if !(self.eta.is_finite() && self.eta > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "eta must be positive, got {}",
                self.eta
            )));
        }
        if !(self.lambda_reg.is_finite() && self.lambda_reg >= T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "lambda_reg must be non-negative, got {}",
                self.lambda_reg
            )));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidParameter("epochs must be >= 1".into()));
        }
        Ok(())
    }
}

/// A trained PMF model with the loss after each epoch.
#[derive(Clone, Debug, PartialEq)]
pub struct PmfRun<T> {
    pub model: FactorModel<T>,
    pub initial_loss: T,
    pub epoch_losses: Vec<T>,
}

/// `sum_observed (r - U_i . V_j)^2 + lambda (sum_i |U_i|^2 + sum_j |V_j|^2)`.
pub fn pmf_loss<T: Scalar>(model: &FactorModel<T>, data: &RatingsDataset<T>, lambda_reg: T) -> T {
    let sq_err: T = data
        .triples()
        .iter()
        .map(|t| {
            let e = t.rating - dot(model.user(t.user), model.item(t.item));
            e * e
        })
        .sum();
    let sq = |xs: &[T]| xs.iter().fold(T::zero(), |a, &x| a + x * x);
    sq_err + lambda_reg * (sq(model.user_factors()) + sq(model.item_factors()))
}

/// Gradient of [`pmf_loss`] as flat `(dLoss/dU, dLoss/dV)` buffers.
pub fn pmf_loss_gradient<T: Scalar>(
    model: &FactorModel<T>,
    data: &RatingsDataset<T>,
    lambda_reg: T,
) -> (Vec<T>, Vec<T>) {
    let k = model.k();
    let two = T::of(2.0);
    let mut gu: Vec<T> = model
        .user_factors()
        .iter()
        .map(|&x| two * lambda_reg * x)
        .collect();
    let mut gv: Vec<T> = model
        .item_factors()
        .iter()
        .map(|&x| two * lambda_reg * x)
        .collect();
    for t in data.triples() {
        let (u, v) = (model.user(t.user), model.item(t.item));
        let e = t.rating - dot(u, v);
        for c in 0..k {
            gu[t.user * k + c] -= two * e * v[c];
            gv[t.item * k + c] -= two * e * u[c];
        }
    }
    (gu, gv)
}

/// Trains PMF and records the loss after every epoch.
///
/// Factors start i.i.d. `U[0, 1]`. Each epoch visits every training triple
/// once in a freshly shuffled order and applies
/// `U_i += eta (e V_j - lambda U_i)`, `V_j += eta (e U_i - lambda V_j)` with
/// `e = r - U_i . V_j`, both computed from pre-step values.
pub fn train_pmf_traced<T: Scalar>(
    train: &RatingsDataset<T>,
    config: &PmfConfig<T>,
) -> Result<PmfRun<T>> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyInput);
    }
    let k = config.k;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let unit = Uniform::new_inclusive(T::zero(), T::one());
    let users = (0..train.num_users() * k)
        .map(|_| unit.sample(&mut rng))
        .collect();
    let items = (0..train.num_items() * k)
        .map(|_| unit.sample(&mut rng))
        .collect();
    let mut model = FactorModel::from_flat(train.num_users(), train.num_items(), k, users, items)?;

    let initial_loss = pmf_loss(&model, train, config.lambda_reg);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let (eta, reg) = (config.eta, config.lambda_reg);

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        for &idx in &order {
            let t = train.triples()[idx];
            let (u, v) = model.rows_mut(t.user, t.item);
            let e = t.rating - dot(u, v);
            for (uc, vc) in u.iter_mut().zip(v.iter_mut()) {
                let (u0, v0) = (*uc, *vc);
                *uc = u0 + eta * (e * v0 - reg * u0);
                *vc = v0 + eta * (e * u0 - reg * v0);
            }
        }
        let loss = pmf_loss(&model, train, reg);
        if !loss.is_finite() || !model.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        epoch_losses.push(loss);
    }
    Ok(PmfRun {
        model,
        initial_loss,
        epoch_losses,
    })
}

pub fn train_pmf<T: Scalar>(
    train: &RatingsDataset<T>,
    config: &PmfConfig<T>,
) -> Result<FactorModel<T>> {
    train_pmf_traced(train, config).map(|run| run.model)
}

/// `U_user . V_item` clipped to `[0, r_max]`.
pub fn predict_pmf<T: Scalar>(
    model: &FactorModel<T>,
    user: usize,
    item: usize,
    r_max: T,
) -> Result<T> {
    Ok(model.dot(user, item)?.max(T::zero()).min(r_max))
}

/// One uniform draw from `[0, r_max]` per test pair.
pub fn random_predictor<T: Scalar>(
    test_pairs: &[(usize, usize)],
    r_max: T,
    seed: u64,
) -> Result<Vec<T>> {
    if !(r_max.is_finite() && r_max > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "r_max must be positive, got {r_max}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = Uniform::new_inclusive(T::zero(), r_max);
    Ok(test_pairs.iter().map(|_| dist.sample(&mut rng)).collect())
}
