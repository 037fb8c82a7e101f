//! Rating data, factor models and rating reconstruction.
//!
//! A [`FactorModel`] stores user vectors `U` (N x k) and item vectors `V`
//! (M x k) row-major. The cold-start reconstruction maps a pair's affinity
//! onto the rating scale by
//!
//! ```text
//! R_ij = r_max * (U_i . V_j) / max_{a,b} (U_a . V_b)
//! ```
//!
//! where the maximum runs over every user-item pair of the model.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{dot, Scalar};

/// One observed rating with dense, 0-based indices.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatingTriple<T> {
    pub user: usize,
    pub item: usize,
    pub rating: T,
}

impl<T> RatingTriple<T> {
    pub fn new(user: usize, item: usize, rating: T) -> Self {
        RatingTriple { user, item, rating }
    }
}

/// Sparse ratings over a fixed `num_users x num_items` universe.
///
/// Immutable once constructed; every triple has in-range indices, a finite
/// rating in `[0, r_max]`, and no `(user, item)` pair occurs twice.
#[derive(Clone, Debug, PartialEq)]
pub struct RatingsDataset<T> {
    num_users: usize,
    num_items: usize,
    r_max: T,
    triples: Vec<RatingTriple<T>>,
}

impl<T: Scalar> RatingsDataset<T> {
    pub fn new(
        num_users: usize,
        num_items: usize,
        r_max: T,
        triples: Vec<RatingTriple<T>>,
    ) -> Result<Self> {
        if num_users == 0 || num_items == 0 {
            return Err(Error::InvalidParameter(format!(
                "dataset dimensions must be positive, got {num_users}x{num_items}"
            )));
        }
        if !(r_max.is_finite() && r_max > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "r_max must be positive and finite, got {r_max}"
            )));
        }
        let mut seen = HashSet::with_capacity(triples.len());
        for (pos, t) in triples.iter().enumerate() {
            if t.user >= num_users {
                return Err(Error::Index {
                    what: "user",
                    index: t.user,
                    bound: num_users,
                });
            }
            if t.item >= num_items {
                return Err(Error::Index {
                    what: "item",
                    index: t.item,
                    bound: num_items,
                });
            }
            if !t.rating.is_finite() || t.rating < T::zero() || t.rating > r_max {
                return Err(Error::InvalidTriple(format!(
                    "triple #{pos} has rating {} outside [0, {r_max}]",
                    t.rating
                )));
            }
            if !seen.insert((t.user, t.item)) {
                return Err(Error::DuplicateRating {
                    user: t.user.to_string(),
                    item: t.item.to_string(),
                    line: pos + 1,
                });
            }
        }
        Ok(RatingsDataset {
            num_users,
            num_items,
            r_max,
            triples,
        })
    }

    /// A dataset sharing this one's universe but holding `triples`.
    ///
    /// The triples are re-validated against the parent's dimensions.
    pub fn with_triples(&self, triples: Vec<RatingTriple<T>>) -> Result<Self> {
        Self::new(self.num_users, self.num_items, self.r_max, triples)
    }

    /// Same universe, no ratings.
    pub fn dimensions_only(&self) -> Self {
        RatingsDataset {
            num_users: self.num_users,
            num_items: self.num_items,
            r_max: self.r_max,
            triples: Vec::new(),
        }
    }

    /// Replaces `r_max`, checking that every stored rating still fits.
    pub fn with_r_max(mut self, r_max: T) -> Result<Self> {
        let triples = std::mem::take(&mut self.triples);
        Self::new(self.num_users, self.num_items, r_max, triples)
    }
}

impl<T: Copy> RatingsDataset<T> {
    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    pub fn r_max(&self) -> T {
        self.r_max
    }

    pub fn triples(&self) -> &[RatingTriple<T>] {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    /// `(user, item)` pairs in storage order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.triples.iter().map(|t| (t.user, t.item)).collect()
    }

    pub fn ratings(&self) -> Vec<T> {
        self.triples.iter().map(|t| t.rating).collect()
    }
}

/// User and item latent vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct FactorModel<T> {
    k: usize,
    num_users: usize,
    num_items: usize,
    users: Vec<T>,
    items: Vec<T>,
}

impl<T: Scalar> FactorModel<T> {
    /// Builds a model from flat row-major buffers.
    pub fn from_flat(
        num_users: usize,
        num_items: usize,
        k: usize,
        users: Vec<T>,
        items: Vec<T>,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter(
                "latent dimension k must be >= 1".into(),
            ));
        }
        if users.len() != num_users * k || items.len() != num_items * k {
            return Err(Error::Shape(format!(
                "expected {}x{k} users and {}x{k} items, got {} and {} values",
                num_users,
                num_items,
                users.len(),
                items.len()
            )));
        }
        if let Some(bad) = users.iter().chain(&items).find(|x| !x.is_finite()) {
            return Err(Error::DegenerateModel(format!("non-finite entry {bad}")));
        }
        Ok(FactorModel {
            k,
            num_users,
            num_items,
            users,
            items,
        })
    }

    /// Builds a model from per-row vectors; all rows must share one length.
    pub fn from_rows(users: &[Vec<T>], items: &[Vec<T>]) -> Result<Self> {
        let k = users
            .first()
            .or_else(|| items.first())
            .map(Vec::len)
            .unwrap_or(0);
        if users.iter().chain(items).any(|r| r.len() != k) {
            return Err(Error::Shape("factor rows have unequal lengths".into()));
        }
        Self::from_flat(users.len(), items.len(), k, users.concat(), items.concat())
    }

    pub fn dot(&self, user: usize, item: usize) -> Result<T> {
        self.check_indices(user, item)?;
        Ok(dot(self.user(user), self.item(item)))
    }

    pub(crate) fn check_indices(&self, user: usize, item: usize) -> Result<()> {
        if user >= self.num_users {
            return Err(Error::Index {
                what: "user",
                index: user,
                bound: self.num_users,
            });
        }
        if item >= self.num_items {
            return Err(Error::Index {
                what: "item",
                index: item,
                bound: self.num_items,
            });
        }
        Ok(())
    }

    /// Smallest entry over both factor matrices.
    pub fn min_entry(&self) -> T {
        self.users
            .iter()
            .chain(&self.items)
            .fold(T::infinity(), |m, &x| m.min(x))
    }

    pub fn is_finite(&self) -> bool {
        self.users.iter().chain(&self.items).all(|x| x.is_finite())
    }

    /// Multiplies every user entry by `user_scale` and every item entry by
    /// `item_scale`.
    pub fn scaled(&self, user_scale: T, item_scale: T) -> Self {
        let mut out = self.clone();
        out.users.iter_mut().for_each(|x| *x *= user_scale);
        out.items.iter_mut().for_each(|x| *x *= item_scale);
        out
    }
}

impl<T> FactorModel<T> {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    pub fn user(&self, i: usize) -> &[T] {
        &self.users[i * self.k..(i + 1) * self.k]
    }

    pub fn item(&self, j: usize) -> &[T] {
        &self.items[j * self.k..(j + 1) * self.k]
    }

    pub fn user_factors(&self) -> &[T] {
        &self.users
    }

    pub fn item_factors(&self) -> &[T] {
        &self.items
    }

    pub(crate) fn rows_mut(&mut self, user: usize, item: usize) -> (&mut [T], &mut [T]) {
        let k = self.k;
        (
            &mut self.users[user * k..(user + 1) * k],
            &mut self.items[item * k..(item + 1) * k],
        )
    }
}

/// Hyperparameters of the data-free trainer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig<T> {
    pub k: usize,
    pub eta: T,
    pub iterations: u64,
    pub seed: u64,
    /// Lower bound enforced on every factor entry after each update.
    pub epsilon: T,
    /// Shared prior variance of user and item vectors.
    pub sigma_sq: T,
}

impl<T: Scalar> Default for TrainConfig<T> {
    fn default() -> Self {
        TrainConfig {
            k: 10,
            eta: T::of(0.01),
            iterations: 0,
            seed: 0,
            epsilon: T::of(1e-6),
            sigma_sq: T::of(0.5),
        }
    }
}

impl<T: Scalar> TrainConfig<T> {
    /// Cap applied by [`TrainConfig::default_iterations`].
    pub const MAX_DEFAULT_ITERATIONS: u64 = 5_000_000;

    /// `20 * N * ceil(M / N)`, capped at five million steps.
    pub fn default_iterations(num_users: usize, num_items: usize) -> u64 {
        let n = num_users.max(1) as u64;
        let m = num_items as u64;
        let per_user = m.div_ceil(n);
        (20 * n)
            .saturating_mul(per_user)
            .min(Self::MAX_DEFAULT_ITERATIONS)
    }

    /// Default configuration for an `N x M` universe with the given seed.
    pub fn for_dimensions(num_users: usize, num_items: usize, seed: u64) -> Self {
        TrainConfig {
            iterations: Self::default_iterations(num_users, num_items),
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be >= 1".into()));
        }
        for (name, v) in [
            ("eta", self.eta),
            ("epsilon", self.epsilon),
            ("sigma_sq", self.sigma_sq),
        ] {
            if !(v.is_finite() && v > T::zero()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Reconstructs a rating as `r_max * (U_user . V_item) / max_dot`.
pub fn predict_rating<T: Scalar>(
    model: &FactorModel<T>,
    user: usize,
    item: usize,
    r_max: T,
    max_dot: T,
) -> Result<T> {
    let d = model.dot(user, item)?;
    if !(max_dot > T::zero() && max_dot.is_finite()) {
        return Err(Error::DegenerateModel(format!(
            "max dot product must be positive, got {max_dot}"
        )));
    }
    // Ratio first: d / max_dot is exactly 1 at the top pair and never above it.
    Ok(r_max * (d / max_dot))
}

/// Exact maximum of `U_i . V_j` over all `N x M` pairs.
pub fn global_max_dot<T: Scalar>(model: &FactorModel<T>) -> Result<T> {
    if model.num_users() == 0 || model.num_items() == 0 {
        return Err(Error::DegenerateModel(
            "model has no users or no items".into(),
        ));
    }
    let max = (0..model.num_users())
        .into_par_iter()
        .map(|i| {
            let u = model.user(i);
            (0..model.num_items())
                .map(|j| dot(u, model.item(j)))
                .fold(T::neg_infinity(), T::max)
        })
        .reduce(T::neg_infinity, T::max);
    Ok(max)
}
