//! Plain-text model files.
//!
//! ```text
//! zeromat-model v1
//! <N> <M> <k> <epsilon> <seed>
//! <N lines of k user values>
//! <M lines of k item values>
//! ```
//!
//! Values are written with the shortest representation that parses back to
//! the identical float. An `epsilon` of 0 marks a model without a positivity
//! floor (PMF); otherwise the loader rejects any entry below `epsilon`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::FactorModel;
use crate::scalar::Scalar;

pub const MAGIC: &str = "zeromat-model v1";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelHeader<T> {
    pub num_users: usize,
    pub num_items: usize,
    pub k: usize,
    pub epsilon: T,
    pub seed: u64,
}

pub fn write_model<T: Scalar, W: Write>(
    model: &FactorModel<T>,
    epsilon: T,
    seed: u64,
    out: W,
) -> Result<()> {
    let mut out = BufWriter::new(out);
    writeln!(out, "{MAGIC}")?;
    writeln!(
        out,
        "{} {} {} {} {}",
        model.num_users(),
        model.num_items(),
        model.k(),
        epsilon,
        seed
    )?;
    for block in [model.user_factors(), model.item_factors()] {
        for row in block.chunks(model.k()) {
            let line: Vec<String> = row.iter().map(|x| x.to_string()).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_model<T: Scalar, R: BufRead>(reader: R) -> Result<(ModelHeader<T>, FactorModel<T>)> {
    let bad = |msg: String| Error::ModelFormat(msg);
    let mut lines = reader.lines();
    let mut next = |what: &str| -> Result<String> {
        lines
            .next()
            .transpose()?
            .ok_or_else(|| bad(format!("unexpected end of file reading {what}")))
    };

    if next("magic")?.trim() != MAGIC {
        return Err(bad(format!("missing '{MAGIC}' header")));
    }
    let head = next("header")?;
    let fields: Vec<&str> = head.split_whitespace().collect();
    if fields.len() != 5 {
        return Err(bad(format!(
            "header needs 5 fields, found {}",
            fields.len()
        )));
    }
    let int = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| bad(format!("bad integer {s:?}")))
    };
    let header = ModelHeader {
        num_users: int(fields[0])?,
        num_items: int(fields[1])?,
        k: int(fields[2])?,
        epsilon: fields[3]
            .parse::<T>()
            .map_err(|_| bad(format!("bad epsilon {:?}", fields[3])))?,
        seed: fields[4]
            .parse::<u64>()
            .map_err(|_| bad(format!("bad seed {:?}", fields[4])))?,
    };
    if header.k == 0 {
        return Err(bad("k must be positive".into()));
    }
    if !(header.epsilon >= T::zero()) {
        return Err(bad(format!("epsilon {} is negative", header.epsilon)));
    }

    let mut read_block = |rows: usize, what: &str| -> Result<Vec<T>> {
        let mut values = Vec::with_capacity(rows * header.k);
        for r in 0..rows {
            let line = next(what)?;
            let before = values.len();
            for tok in line.split_whitespace() {
                let v: T = tok
                    .parse()
                    .map_err(|_| bad(format!("{what} row {r}: bad value {tok:?}")))?;
                if !v.is_finite() {
                    return Err(bad(format!("{what} row {r}: non-finite value")));
                }
                if header.epsilon > T::zero() && v < header.epsilon {
                    return Err(bad(format!(
                        "{what} row {r}: value {v} below floor {}",
                        header.epsilon
                    )));
                }
                values.push(v);
            }
            if values.len() - before != header.k {
                return Err(bad(format!(
                    "{what} row {r}: expected {} values, found {}",
                    header.k,
                    values.len() - before
                )));
            }
        }
        Ok(values)
    };
    let users = read_block(header.num_users, "user")?;
    let items = read_block(header.num_items, "item")?;
    if let Some(extra) = lines.find_map(|l| l.ok().filter(|l| !l.trim().is_empty())) {
        return Err(bad(format!("trailing content {extra:?}")));
    }
    let model = FactorModel::from_flat(header.num_users, header.num_items, header.k, users, items)?;
    Ok((header, model))
}

pub fn save_model<T: Scalar>(
    model: &FactorModel<T>,
    epsilon: T,
    seed: u64,
    path: &Path,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io_at(path, e))?;
    write_model(model, epsilon, seed, file)
}

pub fn load_model<T: Scalar>(path: &Path) -> Result<(ModelHeader<T>, FactorModel<T>)> {
    let file = File::open(path).map_err(|e| Error::io_at(path, e))?;
    read_model(BufReader::new(file))
}
