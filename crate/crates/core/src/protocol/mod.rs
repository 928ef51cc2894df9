//! Class-incremental experiments.
//!
//! Classes arrive in phases. Three protocols are supported:
//!
//! * **P-I** retrains codes and hash functions from scratch on every sample of
//!   every class revealed so far (upper bound).
//! * **P-II** trains on the first phase only and never adapts (lower bound).
//! * **P-III** trains the first phase from scratch, then for each new phase
//!   learns codes for the new samples with the exemplar codes held fixed,
//!   adapts the previous hash functions on `[exemplars; new samples]`, and
//!   retains exemplars for the new classes.
//!
//! After every phase the test samples of all classes seen so far are encoded
//! and scored twice: cross-modal retrieval against the test set of the other
//! modality (MAP@50, codes regenerated by the hash functions) and hashing
//! against the training set (MAP@all, stored training codes).
//!
//! Within a shuffle, classes are relabelled by their position in the shuffled
//! order, so phase `k` covers a contiguous range of class ids.

mod exemplar;
mod model;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;

use crate::codegen::{self, CodeLearnerConfig};
use crate::codes::{quantize, BinaryCodeMatrix};
use crate::data::seed::{self, derive_seed, stream};
use crate::data::{FeatureMatrix, LabelVector, PairedDataset, SimilarityMatrix};
use crate::error::{Error, Result};
use crate::eval::{cross_modal_map, CrossModalMap, Cutoff, MapOptions};
use crate::linfn::CvConfig;

pub use exemplar::{select_exemplars, CodeBank, ExemplarStore};
pub use model::{HashModel, Method, MlpConfig};

use model::FitData;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Protocol {
    /// P-I: retrain on everything seen so far.
    Retrain,
    /// P-II: phase-one model, never updated.
    Frozen,
    /// P-III: exemplar-based incremental adaptation.
    Incremental,
}

impl Protocol {
    pub const ALL: [Protocol; 3] = [Protocol::Retrain, Protocol::Frozen, Protocol::Incremental];

    pub fn tag(self) -> &'static str {
        match self {
            Protocol::Retrain => "P-I",
            Protocol::Frozen => "P-II",
            Protocol::Incremental => "P-III",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().replace('-', "").as_str() {
            "P1" | "PI" => Ok(Protocol::Retrain),
            "P2" | "PII" => Ok(Protocol::Frozen),
            "P3" | "PIII" => Ok(Protocol::Incremental),
            _ => Err(Error::InvalidArgument(format!(
                "unknown protocol {s:?}; valid: P1, P2, P3"
            ))),
        }
    }
}

/// Phase sizes plus one class order per shuffle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhasePlan {
    pub phase_sizes: Vec<usize>,
    pub shuffle_seeds: Vec<u64>,
    pub class_orders: Vec<Vec<usize>>,
}

impl PhasePlan {
    /// One random class order per seed.
    pub fn shuffled(class_count: usize, phase_sizes: Vec<usize>, shuffle_seeds: Vec<u64>) -> Result<Self> {
        let class_orders = shuffle_seeds
            .iter()
            .map(|&s| {
                let mut order: Vec<usize> = (0..class_count).collect();
                order.shuffle(&mut seed::rng(derive_seed(s, &[stream::SHUFFLE])));
                order
            })
            .collect();
        Self::new(phase_sizes, shuffle_seeds, class_orders)
    }

    pub fn new(phase_sizes: Vec<usize>, shuffle_seeds: Vec<u64>, class_orders: Vec<Vec<usize>>) -> Result<Self> {
        if phase_sizes.is_empty() || phase_sizes.contains(&0) {
            return Err(Error::InvalidArgument(format!("every phase needs >= 1 class: {phase_sizes:?}")));
        }
        if shuffle_seeds.is_empty() || shuffle_seeds.len() != class_orders.len() {
            return Err(Error::InvalidArgument("need one class order per shuffle seed".into()));
        }
        let total: usize = phase_sizes.iter().sum();
        for order in &class_orders {
            let mut sorted = order.clone();
            sorted.sort_unstable();
            if sorted != (0..total).collect::<Vec<_>>() {
                return Err(Error::InvalidArgument(format!(
                    "class order {order:?} is not a permutation of 0..{total}"
                )));
            }
        }
        Ok(Self {
            phase_sizes,
            shuffle_seeds,
            class_orders,
        })
    }

    pub fn class_count(&self) -> usize {
        self.phase_sizes.iter().sum()
    }

    /// `(first, end)` relabelled class range of every phase.
    pub fn phase_ranges(&self) -> Vec<(usize, usize)> {
        let mut start = 0;
        self.phase_sizes
            .iter()
            .map(|&s| {
                let r = (start, start + s);
                start += s;
                r
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub codes: CodeLearnerConfig,
    pub samples_per_class: usize,
    pub cv: CvConfig,
    pub mlp: MlpConfig,
    pub retrieval_cutoff: Cutoff,
    pub hashing_cutoff: Cutoff,
    /// Drop a query's own training row from its hashing gallery.
    pub exclude_self: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            codes: CodeLearnerConfig::default(),
            samples_per_class: 10,
            cv: CvConfig::default(),
            mlp: MlpConfig::default(),
            retrieval_cutoff: Cutoff::At(50),
            hashing_cutoff: Cutoff::All,
            exclude_self: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseResult {
    pub phase: usize,
    pub protocol: Protocol,
    pub method: Method,
    pub seen_classes: usize,
    /// Test-vs-test cross-modal retrieval.
    pub retrieval: CrossModalMap,
    /// Test queries against the training gallery.
    pub hashing: CrossModalMap,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolRun {
    pub protocol: Protocol,
    pub method: Method,
    pub per_shuffle: Vec<Vec<PhaseResult>>,
    /// Phase-wise means over shuffles.
    pub mean: Vec<PhaseResult>,
}

impl ProtocolRun {
    pub fn final_phase(&self) -> &PhaseResult {
        self.mean.last().expect("at least one phase")
    }
}

/// Which gallery a set of codes is needed for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GalleryMode {
    /// Gallery revealed at test time: always encoded by the hash functions.
    Retrieval,
    /// Gallery is the training set: stored codes where the protocol keeps them.
    Hashing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GalleryContext {
    pub mode: GalleryMode,
    pub protocol: Protocol,
    pub phase: usize,
}

/// Binary codes of a gallery.
///
/// Hashing galleries use the signs of stored relaxed codes, except under P-II
/// after the first phase, where the frozen hash functions regenerate them.
/// Retrieval galleries are always regenerated.
pub fn gallery_codes(
    ctx: GalleryContext,
    model: &HashModel,
    bank: &CodeBank,
    indices: &[usize],
    x: &FeatureMatrix,
    y: &FeatureMatrix,
) -> Result<(BinaryCodeMatrix, BinaryCodeMatrix)> {
    let regenerate = match ctx.mode {
        GalleryMode::Retrieval => true,
        GalleryMode::Hashing => ctx.protocol == Protocol::Frozen && ctx.phase > 0,
    };
    if regenerate {
        model.encode(x, y)
    } else {
        let (a, b) = bank.lookup(indices)?;
        Ok((quantize(&a), quantize(&b)))
    }
}

fn relabel(data: &PairedDataset, order: &[usize]) -> Result<PairedDataset> {
    let mut rank = vec![0; order.len()];
    for (pos, &c) in order.iter().enumerate() {
        rank[c] = pos;
    }
    let labels = data.labels.as_slice().iter().map(|&l| rank[l]).collect();
    PairedDataset::new(data.x.clone(), data.y.clone(), LabelVector::new(labels, order.len())?)
}

fn indices_below(labels: &LabelVector, lo: usize, hi: usize) -> Vec<usize> {
    (0..labels.len()).filter(|&i| (lo..hi).contains(&labels.get(i))).collect()
}

struct PhaseState {
    model: HashModel,
    bank: CodeBank,
    exemplars: ExemplarStore,
}

struct ShuffleRunner<'a> {
    train: PairedDataset,
    test: PairedDataset,
    protocol: Protocol,
    method: Method,
    cfg: &'a ExperimentConfig,
    seed: u64,
}

impl ShuffleRunner<'_> {
    fn train_from_scratch(&self, classes: usize, seed: u64) -> Result<PhaseState> {
        let idx = indices_below(&self.train.labels, 0, classes);
        let labels = self.train.labels.select(&idx);
        let s = SimilarityMatrix::from_labels(labels.as_slice());
        let codes = codegen::learn_base(&s, &self.cfg.codes.with_seed(derive_seed(seed, &[stream::CODES])))?;
        let (x, y) = (self.train.x.select_rows(&idx), self.train.y.select_rows(&idx));
        let fit = FitData {
            x: &x,
            y: &y,
            a: &codes.a,
            b: &codes.b,
            labels: &labels,
        };
        let model = model::fit_from_scratch(self.method, &fit, classes, &self.cfg.cv, &self.cfg.mlp, seed)?;
        let mut bank = CodeBank::default();
        bank.insert(&idx, &codes.a, &codes.b);
        let mut exemplars = ExemplarStore::new(self.cfg.samples_per_class);
        let classes: Vec<usize> = (0..classes).collect();
        let selection = select_exemplars(&self.train, &classes, self.cfg.samples_per_class, derive_seed(seed, &[stream::EXEMPLARS]))?;
        exemplars.retain(selection, &bank)?;
        Ok(PhaseState { model, bank, exemplars })
    }

    fn adapt(&self, mut state: PhaseState, lo: usize, hi: usize, seed: u64) -> Result<PhaseState> {
        let ex_idx = state.exemplars.indices();
        let (ex_a, ex_b) = state.exemplars.codes()?;
        let new_idx = indices_below(&self.train.labels, lo, hi);
        let all_idx: Vec<usize> = ex_idx.iter().chain(&new_idx).copied().collect();
        let labels = self.train.labels.select(&all_idx);
        let s_bar = SimilarityMatrix::from_labels(labels.as_slice());
        let cfg = self.cfg.codes.with_seed(derive_seed(seed, &[stream::CODES]));
        let new_codes = codegen::learn_incremental(&s_bar, &ex_a, &ex_b, new_idx.len(), &cfg)?;
        state.bank.insert(&new_idx, &new_codes.a, &new_codes.b);

        let a = ex_a.vstack(&new_codes.a)?;
        let b = ex_b.vstack(&new_codes.b)?;
        let (x, y) = (self.train.x.select_rows(&all_idx), self.train.y.select_rows(&all_idx));
        let fit = FitData {
            x: &x,
            y: &y,
            a: &a,
            b: &b,
            labels: &labels,
        };
        let previous = std::mem::replace(&mut state.model, HashModel::Linear {
            x: placeholder(),
            y: placeholder(),
        });
        state.model = model::fit_incremental(self.method, &previous, &fit, hi, &self.cfg.cv, &self.cfg.mlp, seed)?;
        state.exemplars.previous = Some(previous);

        let classes: Vec<usize> = (lo..hi).collect();
        let selection = select_exemplars(&self.train, &classes, self.cfg.samples_per_class, derive_seed(seed, &[stream::EXEMPLARS]))?;
        state.exemplars.retain(selection, &state.bank)?;
        Ok(state)
    }

    fn evaluate(&self, state: &PhaseState, phase: usize, seen: usize) -> Result<(CrossModalMap, CrossModalMap)> {
        let test_idx = indices_below(&self.test.labels, 0, seen);
        let (tx, ty) = (self.test.x.select_rows(&test_idx), self.test.y.select_rows(&test_idx));
        let test_labels = self.test.labels.select(&test_idx);
        let (qx, qy) = state.model.encode(&tx, &ty)?;
        let ctx = |mode| GalleryContext {
            mode,
            protocol: self.protocol,
            phase,
        };
        let (rx, ry) = gallery_codes(ctx(GalleryMode::Retrieval), &state.model, &state.bank, &test_idx, &tx, &ty)?;
        let retrieval = cross_modal_map(
            &qx,
            &qy,
            test_labels.as_slice(),
            &rx,
            &ry,
            test_labels.as_slice(),
            MapOptions::at(self.cfg.retrieval_cutoff),
        )?;

        let gal_idx = indices_below(&self.train.labels, 0, seen);
        let (gx, gy) = (self.train.x.select_rows(&gal_idx), self.train.y.select_rows(&gal_idx));
        let (hx, hy) = gallery_codes(ctx(GalleryMode::Hashing), &state.model, &state.bank, &gal_idx, &gx, &gy)?;
        let hashing = cross_modal_map(
            &qx,
            &qy,
            test_labels.as_slice(),
            &hx,
            &hy,
            self.train.labels.select(&gal_idx).as_slice(),
            MapOptions {
                cutoff: self.cfg.hashing_cutoff,
                exclude_self: false,
            },
        )?;
        Ok((retrieval, hashing))
    }

    fn run(&self, ranges: &[(usize, usize)], shuffle: usize) -> Result<Vec<PhaseResult>> {
        let mut state: Option<PhaseState> = None;
        let mut results = Vec::with_capacity(ranges.len());
        for (phase, &(lo, hi)) in ranges.iter().enumerate() {
            let started = Instant::now();
            let wrap = |e: Error| Error::Phase {
                shuffle,
                phase: phase + 1,
                source: Box::new(e),
            };
            // phase one is shared by all protocols, seeds included
            let phase_seed = derive_seed(self.seed, &[phase as u64]);
            state = Some(match (self.protocol, state.take()) {
                (_, None) => self.train_from_scratch(hi, phase_seed).map_err(wrap)?,
                (Protocol::Retrain, Some(_)) => self
                    .train_from_scratch(hi, derive_seed(phase_seed, &[stream::RETRAIN]))
                    .map_err(wrap)?,
                (Protocol::Frozen, Some(s)) => s,
                (Protocol::Incremental, Some(s)) => self
                    .adapt(s, lo, hi, derive_seed(phase_seed, &[stream::INCREMENTAL]))
                    .map_err(wrap)?,
            });
            let current = state.as_ref().expect("state set above");
            let (retrieval, hashing) = self.evaluate(current, phase, hi).map_err(wrap)?;
            results.push(PhaseResult {
                phase: phase + 1,
                protocol: self.protocol,
                method: self.method,
                seen_classes: hi,
                retrieval,
                hashing,
                seconds: started.elapsed().as_secs_f64(),
            });
        }
        Ok(results)
    }
}

fn placeholder() -> crate::linfn::LinearHashFunction {
    crate::linfn::LinearHashFunction {
        weights: nalgebra::DMatrix::zeros(0, 0),
        reg_lambda: 0.0,
        gamma: 0.0,
        variant: None,
    }
}

fn mean_map(maps: impl Iterator<Item = CrossModalMap> + Clone) -> CrossModalMap {
    let n = maps.clone().count() as f64;
    let (mut xy, mut yx) = (0.0, 0.0);
    for m in maps {
        xy += m.x_to_y;
        yx += m.y_to_x;
    }
    let (xy, yx) = (xy / n, yx / n);
    CrossModalMap {
        x_to_y: xy,
        y_to_x: yx,
        average: 0.5 * (xy + yx),
    }
}

/// Runs one protocol with one method over every shuffle of `plan`; shuffles
/// execute in parallel.
pub fn run_protocol(
    train: &PairedDataset,
    test: &PairedDataset,
    plan: &PhasePlan,
    protocol: Protocol,
    method: Method,
    cfg: &ExperimentConfig,
) -> Result<ProtocolRun> {
    if train.class_count() != plan.class_count() || test.class_count() != plan.class_count() {
        return Err(Error::shape("class count vs phase plan", plan.class_count(), train.class_count()));
    }
    if train.x.cols() != test.x.cols() || train.y.cols() != test.y.cols() {
        return Err(Error::shape("train vs test feature dimensions", train.x.cols(), test.x.cols()));
    }
    cfg.codes.validate()?;
    cfg.cv.validate()?;
    let ranges = plan.phase_ranges();
    let per_shuffle: Vec<Vec<PhaseResult>> = std::thread::scope(|scope| {
        let handles: Vec<_> = plan
            .class_orders
            .iter()
            .zip(&plan.shuffle_seeds)
            .enumerate()
            .map(|(shuffle, (order, &seed))| {
                let ranges = &ranges;
                scope.spawn(move || -> Result<Vec<PhaseResult>> {
                    let runner = ShuffleRunner {
                        train: relabel(train, order)?,
                        test: relabel(test, order)?,
                        protocol,
                        method,
                        cfg,
                        seed,
                    };
                    runner.run(ranges, shuffle + 1)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("shuffle worker panicked"))
            .collect::<Result<_>>()
    })?;

    let mean = (0..ranges.len())
        .map(|p| {
            let rows = per_shuffle.iter().map(|r| &r[p]);
            PhaseResult {
                phase: p + 1,
                protocol,
                method,
                seen_classes: ranges[p].1,
                retrieval: mean_map(rows.clone().map(|r| r.retrieval)),
                hashing: mean_map(rows.clone().map(|r| r.hashing)),
                seconds: rows.map(|r| r.seconds).sum::<f64>() / per_shuffle.len() as f64,
            }
        })
        .collect();
    Ok(ProtocolRun {
        protocol,
        method,
        per_shuffle,
        mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn protocol_tags() {
        assert_eq!("p1".parse::<Protocol>().unwrap(), Protocol::Retrain);
        assert_eq!("P-II".parse::<Protocol>().unwrap(), Protocol::Frozen);
        assert_eq!("P3".parse::<Protocol>().unwrap().tag(), "P-III");
        assert!("P4".parse::<Protocol>().is_err());
    }

    #[test]
    fn plan_validation() {
        let plan = PhasePlan::shuffled(8, vec![3, 2, 3], vec![1, 2, 3]).unwrap();
        assert_eq!(plan.phase_ranges(), vec![(0, 3), (3, 5), (5, 8)]);
        assert_ne!(plan.class_orders[0], plan.class_orders[1]);
        assert!(PhasePlan::shuffled(8, vec![3, 0, 5], vec![1]).is_err());
        assert!(PhasePlan::new(vec![2], vec![1], vec![vec![0, 0]]).is_err());
        assert!(PhasePlan::new(vec![2], vec![1, 2], vec![vec![0, 1]]).is_err());
    }
}
