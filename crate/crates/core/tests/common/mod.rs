#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zeromat_lab::baselines::pmf_loss;
use zeromat_lab::zeromat::log_likelihood;
use zeromat_lab::{Dataset, Model, RatingTriple};

pub const FD_STEP: f64 = 1e-6;

/// `|a - b| / max(1, |a|, |b|)`.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1f64.max(a.abs()).max(b.abs())
}

/// Central differences of `f` with respect to every entry of `U` then `V`.
pub fn central_differences(model: &Model, f: impl Fn(&Model) -> f64) -> (Vec<f64>, Vec<f64>) {
    let (n, m, k) = (model.num_users(), model.num_items(), model.k());
    let base_u = model.user_factors().to_vec();
    let base_v = model.item_factors().to_vec();
    let eval = |u: Vec<f64>, v: Vec<f64>| f(&Model::from_flat(n, m, k, u, v).unwrap());
    let gu = (0..base_u.len())
        .map(|idx| {
            let (mut plus, mut minus) = (base_u.clone(), base_u.clone());
            plus[idx] += FD_STEP;
            minus[idx] -= FD_STEP;
            (eval(plus, base_v.clone()) - eval(minus, base_v.clone())) / (2.0 * FD_STEP)
        })
        .collect();
    let gv = (0..base_v.len())
        .map(|idx| {
            let (mut plus, mut minus) = (base_v.clone(), base_v.clone());
            plus[idx] += FD_STEP;
            minus[idx] -= FD_STEP;
            (eval(base_u.clone(), plus) - eval(base_u.clone(), minus)) / (2.0 * FD_STEP)
        })
        .collect();
    (gu, gv)
}

pub fn fd_log_likelihood(model: &Model, sigma_sq: f64) -> (Vec<f64>, Vec<f64>) {
    central_differences(model, |m| log_likelihood(m, sigma_sq).unwrap())
}

pub fn fd_pmf_loss(model: &Model, data: &Dataset, lambda: f64) -> (Vec<f64>, Vec<f64>) {
    central_differences(model, |m| pmf_loss(m, data, lambda))
}

pub fn max_rel_err(analytic: &(Vec<f64>, Vec<f64>), numeric: &(Vec<f64>, Vec<f64>)) -> f64 {
    analytic
        .0
        .iter()
        .chain(&analytic.1)
        .zip(numeric.0.iter().chain(&numeric.1))
        .map(|(&a, &b)| rel_err(a, b))
        .fold(0.0, f64::max)
}

pub fn random_model(n: usize, m: usize, k: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Model {
    let u = (0..n * k).map(|_| rng.gen_range(lo..hi)).collect();
    let v = (0..m * k).map(|_| rng.gen_range(lo..hi)).collect();
    Model::from_flat(n, m, k, u, v).unwrap()
}

/// Random ratings on roughly half the grid (at least one).
pub fn random_ratings(n: usize, m: usize, rng: &mut ChaCha8Rng) -> Dataset {
    let mut triples = Vec::new();
    for i in 0..n {
        for j in 0..m {
            if rng.gen_bool(0.5) {
                triples.push(RatingTriple::new(i, j, rng.gen_range(0.0..5.0)));
            }
        }
    }
    if triples.is_empty() {
        triples.push(RatingTriple::new(0, 0, 3.0));
    }
    Dataset::new(n, m, 5.0, triples).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
