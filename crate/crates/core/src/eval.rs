//! Hamming ranking and mean average precision.
//!
//! A query's gallery ranking sorts by ascending Hamming distance, ties broken
//! by ascending gallery index. Average precision at cutoff `k` is
//!
//! ```text
//! AP@k = (1 / R_k) Σ_{r ≤ k, item r relevant} precision@r
//! ```
//!
//! where `R_k` counts the relevant items within the top `k`; a query with no
//! relevant item in its top `k` scores 0. Relevance is label equality.

use std::fmt;
use std::str::FromStr;

use crate::codes::BinaryCodeMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cutoff {
    At(usize),
    All,
}

impl Cutoff {
    fn limit(self, gallery: usize) -> usize {
        match self {
            Cutoff::At(k) => k.min(gallery),
            Cutoff::All => gallery,
        }
    }
}

impl fmt::Display for Cutoff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cutoff::At(k) => write!(f, "{k}"),
            Cutoff::All => f.write_str("all"),
        }
    }
}

impl FromStr for Cutoff {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("all") {
            return Ok(Cutoff::All);
        }
        match s.parse::<usize>() {
            Ok(k) if k > 0 => Ok(Cutoff::At(k)),
            _ => Err(Error::InvalidArgument(format!("cutoff must be a positive integer or `all`, got {s:?}"))),
        }
    }
}

/// Number of differing positions between two `±1` codes.
pub fn hamming(u: &[i8], v: &[i8]) -> Result<u32> {
    if u.len() != v.len() {
        return Err(Error::shape("code lengths", u.len(), v.len()));
    }
    Ok(u.iter().zip(v).filter(|(a, b)| a != b).count() as u32)
}

fn packed_hamming(u: &[u64], v: &[u64]) -> u32 {
    u.iter().zip(v).map(|(a, b)| (a ^ b).count_ones()).sum()
}

/// Gallery indices ordered by distance to `query_row` of `queries`.
///
/// With `skip` set, that gallery index is left out of the ranking.
pub fn rank_gallery(
    queries: &BinaryCodeMatrix,
    query_row: usize,
    gallery: &BinaryCodeMatrix,
    skip: Option<usize>,
) -> Vec<usize> {
    // counting sort keeps ascending index order within each distance
    let q = queries.row_words(query_row);
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); gallery.bits() + 1];
    for g in 0..gallery.rows() {
        if Some(g) != skip {
            buckets[packed_hamming(q, gallery.row_words(g)) as usize].push(g);
        }
    }
    buckets.concat()
}

pub fn average_precision(ranked: &[usize], query_label: usize, gallery_labels: &[usize], cutoff: Cutoff) -> f64 {
    let k = cutoff.limit(ranked.len());
    let (mut hits, mut sum) = (0usize, 0.0);
    for (r, &g) in ranked[..k].iter().enumerate() {
        if gallery_labels[g] == query_label {
            hits += 1;
            sum += hits as f64 / (r + 1) as f64;
        }
    }
    if hits == 0 {
        0.0
    } else {
        sum / hits as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MapOptions {
    pub cutoff: Cutoff,
    /// Drop gallery item `i` from query `i`'s ranking (for a gallery that is
    /// the query set itself).
    pub exclude_self: bool,
}

impl MapOptions {
    pub fn at(cutoff: Cutoff) -> Self {
        Self {
            cutoff,
            exclude_self: false,
        }
    }
}

/// Mean AP over all queries.
pub fn map_score(
    queries: &BinaryCodeMatrix,
    query_labels: &[usize],
    gallery: &BinaryCodeMatrix,
    gallery_labels: &[usize],
    opts: MapOptions,
) -> Result<f64> {
    if queries.bits() != gallery.bits() {
        return Err(Error::shape("query vs gallery code width", queries.bits(), gallery.bits()));
    }
    if queries.rows() != query_labels.len() || gallery.rows() != gallery_labels.len() {
        return Err(Error::shape(
            "codes vs labels",
            format!("{}/{}", queries.rows(), gallery.rows()),
            format!("{}/{}", query_labels.len(), gallery_labels.len()),
        ));
    }
    if opts.exclude_self && queries.rows() != gallery.rows() {
        return Err(Error::InvalidArgument("self-exclusion needs equally sized query and gallery sets".into()));
    }
    if queries.rows() == 0 {
        return Err(Error::InvalidArgument("no queries".into()));
    }
    let total: f64 = (0..queries.rows())
        .map(|i| {
            let skip = opts.exclude_self.then_some(i);
            let ranked = rank_gallery(queries, i, gallery, skip);
            average_precision(&ranked, query_labels[i], gallery_labels, opts.cutoff)
        })
        .sum();
    Ok(total / queries.rows() as f64)
}

/// MAP in both retrieval directions and their mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossModalMap {
    pub x_to_y: f64,
    pub y_to_x: f64,
    pub average: f64,
}

/// X queries against the Y gallery and Y queries against the X gallery.
pub fn cross_modal_map(
    query_x: &BinaryCodeMatrix,
    query_y: &BinaryCodeMatrix,
    query_labels: &[usize],
    gallery_x: &BinaryCodeMatrix,
    gallery_y: &BinaryCodeMatrix,
    gallery_labels: &[usize],
    opts: MapOptions,
) -> Result<CrossModalMap> {
    let x_to_y = map_score(query_x, query_labels, gallery_y, gallery_labels, opts)?;
    let y_to_x = map_score(query_y, query_labels, gallery_x, gallery_labels, opts)?;
    Ok(CrossModalMap {
        x_to_y,
        y_to_x,
        average: 0.5 * (x_to_y + y_to_x),
    })
}
