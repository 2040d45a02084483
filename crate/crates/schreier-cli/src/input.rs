//! Parsing of command-line values: ordinals, sets, vectors, matrices and cap files.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Deserialize;

use schreier::operators::FiniteOperator;
use schreier::set::parse_set;
use schreier::vector::parse_q;
use schreier::{parse_ordinal, Caps, Error, FiniteSet, IndexStream, Ordinal, RationalVector, Result};

pub fn usage(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub fn ordinal(text: Option<&str>, flag: &str, caps: &Caps) -> Result<Ordinal> {
    let text = text.ok_or_else(|| usage(format!("--{flag} is required")))?;
    let o = parse_ordinal(text)?;
    if o.cnf_depth() > caps.cnf_depth {
        return Err(Error::Resource(format!("CNF depth {} exceeds cap {}", o.cnf_depth(), caps.cnf_depth)));
    }
    Ok(o)
}

pub fn set(text: Option<&str>) -> Result<FiniteSet> {
    parse_set(text.ok_or_else(|| usage("--set is required"))?)
}

/// Inline JSON, or a path to a file holding it.
fn json_or_file<T: DeserializeOwned>(text: &str) -> Result<T> {
    let body = if Path::new(text).is_file() {
        fs::read_to_string(text).map_err(|e| usage(format!("cannot read {text}: {e}")))?
    } else {
        text.to_string()
    };
    serde_json::from_str(&body).map_err(|e| Error::Parse { pos: e.column().saturating_sub(1), msg: e.to_string() })
}

/// Either `{"entries": [[i, "q"], ...]}` or the bare list `[[i, "q"], ...]`.
pub fn vector(text: Option<&str>) -> Result<RationalVector> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Shape {
        Full(RationalVector),
        Bare(Vec<(u64, String)>),
    }
    match json_or_file::<Shape>(text.ok_or_else(|| usage("--vector is required"))?)? {
        Shape::Full(v) => Ok(v),
        Shape::Bare(entries) => {
            RationalVector::from_entries(entries.into_iter().map(|(i, c)| Ok((i, parse_q(&c)?))).collect::<Result<_>>()?)
        }
    }
}

/// Triplets `[[row, col, "q"], ...]`.
pub fn matrix(text: Option<&str>, domain: Ordinal, codomain: Ordinal) -> Result<FiniteOperator> {
    let raw: Vec<(u64, u64, String)> = json_or_file(text.ok_or_else(|| usage("--matrix is required"))?)?;
    let triplets = raw.into_iter().map(|(r, c, v)| Ok((r, c, parse_q(&v)?))).collect::<Result<_>>()?;
    FiniteOperator::from_triplets(domain, codomain, triplets)
}

pub fn caps(path: Option<&Path>) -> Result<Caps> {
    match path {
        None => Ok(Caps::default()),
        Some(p) => {
            let body = fs::read_to_string(p).map_err(|e| usage(format!("cannot read {}: {e}", p.display())))?;
            serde_json::from_str(&body).map_err(|e| Error::Parse { pos: e.column().saturating_sub(1), msg: e.to_string() })
        }
    }
}

/// `naturals`, `evens`, `from:m` or `random:seed`.
pub fn stream(text: &str, seed: u64) -> Result<IndexStream> {
    match text.split_once(':') {
        None if text == "naturals" => Ok(IndexStream::naturals()),
        None if text == "evens" => Ok(IndexStream::evens()),
        None if text == "random" => Ok(IndexStream::seeded_random(seed, 16, 4)),
        Some(("from", m)) => Ok(IndexStream::from(m.parse().map_err(|_| usage(format!("bad stream start {m:?}")))?)),
        Some(("random", s)) => {
            Ok(IndexStream::seeded_random(s.parse().map_err(|_| usage(format!("bad stream seed {s:?}")))?, 16, 4))
        }
        _ => Err(usage(format!("unknown stream {text:?}; use naturals, evens, from:m or random[:seed]"))),
    }
}

pub fn rational(text: &str) -> Result<schreier::Q> {
    parse_q(text)
}
