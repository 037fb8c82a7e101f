//! Loading, splitting and synthesizing rating datasets.
//!
//! Two on-disk formats are understood:
//!
//! * MovieLens `ratings.dat`: `UserID::MovieID::Rating::Timestamp` per line.
//! * CSV with the header `user,item,rating`.
//!
//! Raw IDs are remapped to dense indices in order of first appearance.

use std::collections::hash_map::Entry;
use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::distributions::{Distribution, Uniform, WeightedIndex};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{RatingTriple, RatingsDataset};
use crate::scalar::Scalar;

/// Power-law item popularity mixed with a uniform component.
///
/// Item `i` (1-based rank) has weight
/// `(1 - uniform_mix) * z_i + uniform_mix / n` with `z_i = i^-s / sum_j j^-s`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZipfSpec<T> {
    pub exponent: T,
    pub num_items: usize,
    pub num_users: usize,
    pub ratings_per_user: usize,
    pub r_max: T,
    pub uniform_mix: T,
}

impl<T: Scalar> ZipfSpec<T> {
    pub fn new(
        exponent: T,
        num_users: usize,
        num_items: usize,
        ratings_per_user: usize,
        r_max: T,
    ) -> Self {
        ZipfSpec {
            exponent,
            num_items,
            num_users,
            ratings_per_user,
            r_max,
            uniform_mix: T::zero(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.exponent.is_finite() && self.exponent > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "zipf exponent must be positive, got {}",
                self.exponent
            )));
        }
        if self.num_items == 0 || self.num_users == 0 || self.ratings_per_user == 0 {
            return Err(Error::InvalidParameter(
                "num_items, num_users and ratings_per_user must be positive".into(),
            ));
        }
        if !(self.r_max.is_finite() && self.r_max > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "r_max must be positive, got {}",
                self.r_max
            )));
        }
        check_mix(self.uniform_mix)?;
        if self.ratings_per_user > self.num_items {
            return Err(Error::InfeasibleSpec(format!(
                "{} distinct ratings per user requested from only {} items",
                self.ratings_per_user, self.num_items
            )));
        }
        Ok(())
    }

    /// Item sampling weights; they sum to one.
    pub fn weights(&self) -> Vec<T> {
        let n = T::of_usize(self.num_items);
        let mix = self.uniform_mix;
        zipf_weights(self.exponent, self.num_items)
            .into_iter()
            .map(|z| (T::one() - mix) * z + mix / n)
            .collect()
    }

    /// Item quality `w_j / max_i w_i`, in `(0, 1]`.
    pub fn qualities(&self) -> Vec<T> {
        let w = self.weights();
        let max = w.iter().copied().fold(T::zero(), T::max);
        w.into_iter().map(|x| x / max).collect()
    }
}

fn check_mix<T: Scalar>(lambda: T) -> Result<()> {
    if !(lambda >= T::zero() && lambda <= T::one()) {
        return Err(Error::Domain(format!(
            "uniform mix must lie in [0, 1], got {lambda}"
        )));
    }
    Ok(())
}

/// Normalized Zipf weights `i^-s / sum_j j^-s` for ranks `1..=n`.
pub fn zipf_weights<T: Scalar>(exponent: T, n: usize) -> Vec<T> {
    let raw: Vec<T> = (1..=n)
        .map(|i| T::of_usize(i).powf(exponent).recip())
        .collect();
    let total: T = raw.iter().copied().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// Returns `spec` with its uniform mix replaced by `lambda`.
pub fn perturb_distribution<T: Scalar>(spec: &ZipfSpec<T>, lambda: T) -> Result<ZipfSpec<T>> {
    check_mix(lambda)?;
    Ok(ZipfSpec {
        uniform_mix: lambda,
        ..spec.clone()
    })
}

/// Synthesizes a dataset whose item popularity and rating level both follow
/// the spec's weights.
///
/// Each user rates `ratings_per_user` distinct items drawn with probability
/// proportional to the weights. Item `j` receives
/// `clamp(r_max * q_j + U(-0.5, 0.5), 0.5, r_max)`.
pub fn generate_zipf_dataset<T: Scalar>(
    spec: &ZipfSpec<T>,
    seed: u64,
) -> Result<RatingsDataset<T>> {
    spec.validate()?;
    let weights: Vec<f64> = spec.weights().into_iter().map(T::as_f64).collect();
    let quality = spec.qualities();
    let half = T::of(0.5);
    let floor = half.min(spec.r_max);
    let noise = Uniform::new_inclusive(-half, half);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut triples = Vec::with_capacity(spec.num_users * spec.ratings_per_user);
    for user in 0..spec.num_users {
        let items = rand::seq::index::sample_weighted(
            &mut rng,
            spec.num_items,
            |i| weights[i],
            spec.ratings_per_user,
        )
        .map_err(|e| Error::InfeasibleSpec(e.to_string()))?;
        for item in items.iter() {
            let raw = spec.r_max * quality[item] + noise.sample(&mut rng);
            let rating = raw.max(floor).min(spec.r_max);
            triples.push(RatingTriple::new(user, item, rating));
        }
    }
    RatingsDataset::new(spec.num_users, spec.num_items, spec.r_max, triples)
}

/// Counts how often each item is drawn in `draws` independent draws (with
/// replacement) from the spec's weights.
pub fn item_draw_counts<T: Scalar>(
    spec: &ZipfSpec<T>,
    draws: usize,
    seed: u64,
) -> Result<Vec<u64>> {
    let weights: Vec<f64> = spec.weights().into_iter().map(T::as_f64).collect();
    let dist = WeightedIndex::new(&weights).map_err(|e| Error::InfeasibleSpec(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; spec.num_items];
    for _ in 0..draws {
        counts[dist.sample(&mut rng)] += 1;
    }
    Ok(counts)
}

/// Seeded train/test partition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train_fraction: f64, seed: u64) -> Result<Self> {
        let s = SplitSpec {
            train_fraction,
            seed,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "train fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        Ok(())
    }

    /// `ceil(train_fraction * total)`, ignoring float noise in the product.
    pub fn train_len(&self, total: usize) -> usize {
        let exact = self.train_fraction * total as f64;
        let rounded = exact.round();
        let n = if (exact - rounded).abs() <= 1e-9 * exact.max(1.0) {
            rounded
        } else {
            exact.ceil()
        };
        (n as usize).min(total)
    }
}

/// Shuffles the triples with the split seed; the first
/// `ceil(train_fraction * len)` become the training set.
pub fn split<T: Scalar>(
    dataset: &RatingsDataset<T>,
    spec: &SplitSpec,
) -> Result<(RatingsDataset<T>, RatingsDataset<T>)> {
    spec.validate()?;
    if dataset.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut triples = dataset.triples().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    triples.shuffle(&mut rng);
    let test = triples.split_off(spec.train_len(triples.len()));
    Ok((dataset.with_triples(triples)?, dataset.with_triples(test)?))
}

/// A parsed ratings file with the tables mapping dense indices back to raw IDs.
#[derive(Clone, Debug)]
pub struct ParsedRatings<T> {
    pub dataset: RatingsDataset<T>,
    pub user_ids: Vec<u64>,
    pub item_ids: Vec<u64>,
}

#[derive(Default)]
struct IdMap {
    index: HashMap<u64, usize>,
    ids: Vec<u64>,
}

impl IdMap {
    fn intern(&mut self, id: u64) -> usize {
        match self.index.entry(id) {
            Entry::Occupied(e) => *e.get(),
            Entry::Vacant(e) => {
                self.ids.push(id);
                *e.insert(self.ids.len() - 1)
            }
        }
    }
}

struct Collector<T> {
    users: IdMap,
    items: IdMap,
    seen: HashSet<(usize, usize)>,
    triples: Vec<RatingTriple<T>>,
}

impl<T: Scalar> Collector<T> {
    fn new() -> Self {
        Collector {
            users: IdMap::default(),
            items: IdMap::default(),
            seen: HashSet::new(),
            triples: Vec::new(),
        }
    }

    fn push(&mut self, line: usize, user: &str, item: &str, rating: &str) -> Result<()> {
        let parse_id = |field: &str, what: &str| -> Result<u64> {
            field.trim().parse().map_err(|_| Error::Parse {
                line,
                message: format!("{what} id {field:?} is not a non-negative integer"),
            })
        };
        let raw_user = parse_id(user, "user")?;
        let raw_item = parse_id(item, "item")?;
        let value: T = rating.trim().parse().map_err(|_| Error::Parse {
            line,
            message: format!("rating {rating:?} is not numeric"),
        })?;
        if !value.is_finite() || value < T::zero() {
            return Err(Error::Parse {
                line,
                message: format!("rating {rating:?} must be finite and non-negative"),
            });
        }
        let u = self.users.intern(raw_user);
        let i = self.items.intern(raw_item);
        if !self.seen.insert((u, i)) {
            return Err(Error::DuplicateRating {
                user: raw_user.to_string(),
                item: raw_item.to_string(),
                line,
            });
        }
        self.triples.push(RatingTriple::new(u, i, value));
        Ok(())
    }

    fn finish(self, r_max_override: Option<T>) -> Result<ParsedRatings<T>> {
        if self.triples.is_empty() {
            return Err(Error::EmptyInput);
        }
        let observed = self
            .triples
            .iter()
            .map(|t| t.rating)
            .fold(T::zero(), T::max);
        let r_max = r_max_override.unwrap_or(observed);
        let dataset = RatingsDataset::new(
            self.users.ids.len(),
            self.items.ids.len(),
            r_max,
            self.triples,
        )?;
        Ok(ParsedRatings {
            dataset,
            user_ids: self.users.ids,
            item_ids: self.items.ids,
        })
    }
}

/// Parses MovieLens `UserID::MovieID::Rating::Timestamp` lines.
///
/// Blank lines are skipped. `r_max` defaults to the largest observed rating.
pub fn parse_movielens<T: Scalar, R: BufRead>(
    reader: R,
    r_max_override: Option<T>,
) -> Result<ParsedRatings<T>> {
    let mut out = Collector::new();
    for (n, line) in reader.lines().enumerate() {
        let line_no = n + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split("::").collect();
        if fields.len() != 4 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 4 '::'-separated fields, found {}", fields.len()),
            });
        }
        fields[3].trim().parse::<u64>().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("timestamp {:?} is not an integer", fields[3]),
        })?;
        out.push(line_no, fields[0], fields[1], fields[2])?;
    }
    out.finish(r_max_override)
}

/// Parses `user,item,rating` CSV (header required).
pub fn parse_csv<T: Scalar, R: BufRead>(
    reader: R,
    r_max_override: Option<T>,
) -> Result<ParsedRatings<T>> {
    let mut out = Collector::new();
    let mut header_seen = false;
    for (n, line) in reader.lines().enumerate() {
        let line_no = n + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if !header_seen {
            let names: Vec<String> = fields
                .iter()
                .map(|f| f.trim().to_ascii_lowercase())
                .collect();
            if names != ["user", "item", "rating"] {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected header \"user,item,rating\", found {line:?}"),
                });
            }
            header_seen = true;
            continue;
        }
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 3 comma-separated fields, found {}", fields.len()),
            });
        }
        out.push(line_no, fields[0], fields[1], fields[2])?;
    }
    out.finish(r_max_override)
}

/// Loads a ratings file, choosing the parser from its first non-empty line:
/// `::` means MovieLens, anything else is treated as CSV.
pub fn load_ratings<T: Scalar>(path: &Path, r_max_override: Option<T>) -> Result<ParsedRatings<T>> {
    let open = || {
        File::open(path)
            .map(BufReader::new)
            .map_err(|e| Error::io_at(path, e))
    };
    let mut first = String::new();
    {
        let mut reader = open()?;
        loop {
            first.clear();
            if reader
                .read_line(&mut first)
                .map_err(|e| Error::io_at(path, e))?
                == 0
                || !first.trim().is_empty()
            {
                break;
            }
        }
    }
    if first.contains("::") {
        parse_movielens(open()?, r_max_override)
    } else {
        parse_csv(open()?, r_max_override)
    }
}

/// Writes `user,item,rating` CSV using dense indices.
pub fn write_csv<T: Scalar, W: Write>(dataset: &RatingsDataset<T>, mut out: W) -> Result<()> {
    writeln!(out, "user,item,rating")?;
    for t in dataset.triples() {
        writeln!(out, "{},{},{}", t.user, t.item, t.rating)?;
    }
    out.flush()?;
    Ok(())
}
