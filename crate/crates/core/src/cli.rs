//! Command implementations behind the `icmh` binary.
//!
//! Configuration is a flat set of `key=value` pairs (file first, command-line
//! overrides on top). [`RunConfig::from_pairs`] resolves them; unknown keys
//! are rejected so typos do not silently fall back to defaults.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::codegen::CodeLearnerConfig;
use crate::data::seed::{derive_seed, stream};
use crate::data::{self, PairedDataset, Standardizer, SynthConfig};
use crate::error::{Error, Result};
use crate::eval::{cross_modal_map, CrossModalMap, Cutoff, MapOptions};
use crate::linfn::CvConfig;
use crate::protocol::{run_protocol, ExperimentConfig, Method, MlpConfig, PhasePlan, Protocol, ProtocolRun};
use crate::BinaryCodeMatrix;

/// Code lengths used without a notice.
pub const STANDARD_BITS: [usize; 4] = [16, 32, 64, 128];

const KNOWN_KEYS: &[&str] = &[
    "manifest",
    "test_manifest",
    "train_fraction",
    "standardize",
    "synth.classes",
    "synth.per_class",
    "synth.dx",
    "synth.dy",
    "synth.spread",
    "bits",
    "lambda_h",
    "max_iters",
    "rel_tol",
    "eta",
    "samples_per_class",
    "phase_sizes",
    "shuffles",
    "shuffle_seeds",
    "protocols",
    "methods",
    "retrieval_k",
    "hashing_k",
    "exclude_self",
    "cv.folds",
    "cv.per_class",
    "mlp.hidden",
    "mlp.dropout",
    "mlp.epochs",
    "mlp.batch_size",
    "mlp.lr",
    "mlp.incremental_epochs",
    "mlp.incremental_lr",
    "mlp.class_weights",
    "mlp.sampler",
    "out",
    "seed",
];

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Files {
        manifest: PathBuf,
        test_manifest: Option<PathBuf>,
    },
    Synthetic(SynthConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data: DataSource,
    /// Fraction of each class kept for training when no test manifest is given.
    pub train_fraction: f64,
    pub standardize: bool,
    pub experiment: ExperimentConfig,
    pub phase_sizes: Option<Vec<usize>>,
    pub shuffle_seeds: Vec<u64>,
    pub protocols: Vec<Protocol>,
    pub methods: Vec<Method>,
    pub out: PathBuf,
    pub seed: u64,
    /// Non-fatal remarks about the configuration.
    pub notices: Vec<String>,
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| Error::InvalidArgument(format!("invalid value for `{key}` ({value:?}): {e}")))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    value.split(',').filter(|s| !s.trim().is_empty()).map(|s| parse(key, s)).collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(Error::InvalidArgument(format!("invalid value for `{key}`: {value:?}"))),
    }
}

impl RunConfig {
    /// Reads a `key=value` file and applies `overrides` on top.
    pub fn load(path: Option<&Path>, overrides: &BTreeMap<String, String>) -> Result<Self> {
        let mut pairs = match path {
            Some(p) => data::read_key_values(p)?,
            None => BTreeMap::new(),
        };
        pairs.extend(overrides.iter().map(|(k, v)| (k.clone(), v.clone())));
        let base = path.and_then(Path::parent).unwrap_or(Path::new(""));
        Self::from_pairs(&pairs, base)
    }

    /// Relative manifest paths resolve against `base`.
    pub fn from_pairs(pairs: &BTreeMap<String, String>, base: &Path) -> Result<Self> {
        if let Some(k) = pairs.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
            return Err(Error::InvalidArgument(format!("unknown configuration key `{k}`")));
        }
        let get = |k: &str| pairs.get(k).map(String::as_str);
        let resolve = |p: &str| {
            let p = PathBuf::from(p);
            if p.is_absolute() { p } else { base.join(p) }
        };
        let seed: u64 = get("seed").map_or(Ok(0), |v| parse("seed", v))?;

        let data = match get("manifest") {
            Some(m) => {
                let manifest = resolve(m);
                if !manifest.is_file() {
                    return Err(Error::InvalidArgument(format!("manifest {} does not exist", manifest.display())));
                }
                let test_manifest = get("test_manifest").map(resolve);
                if let Some(t) = test_manifest.as_ref().filter(|t| !t.is_file()) {
                    return Err(Error::InvalidArgument(format!("test manifest {} does not exist", t.display())));
                }
                DataSource::Files { manifest, test_manifest }
            }
            None => {
                let d = SynthConfig::default();
                DataSource::Synthetic(SynthConfig {
                    class_count: get("synth.classes").map_or(Ok(d.class_count), |v| parse("synth.classes", v))?,
                    per_class: get("synth.per_class").map_or(Ok(d.per_class), |v| parse("synth.per_class", v))?,
                    dx: get("synth.dx").map_or(Ok(d.dx), |v| parse("synth.dx", v))?,
                    dy: get("synth.dy").map_or(Ok(d.dy), |v| parse("synth.dy", v))?,
                    spread: get("synth.spread").map_or(Ok(d.spread), |v| parse("synth.spread", v))?,
                    seed: derive_seed(seed, &[stream::SYNTH]),
                })
            }
        };

        let cd = CodeLearnerConfig::default();
        let codes = CodeLearnerConfig {
            bits: get("bits").map_or(Ok(cd.bits), |v| parse("bits", v))?,
            lambda_h: get("lambda_h").map_or(Ok(cd.lambda_h), |v| parse("lambda_h", v))?,
            max_iters: get("max_iters").map_or(Ok(cd.max_iters), |v| parse("max_iters", v))?,
            rel_tol: get("rel_tol").map_or(Ok(cd.rel_tol), |v| parse("rel_tol", v))?,
            eta_init: get("eta").map_or(Ok(cd.eta_init), |v| parse("eta", v))?,
            seed: 0,
        };
        codes.validate()?;
        let mut notices = Vec::new();
        if !STANDARD_BITS.contains(&codes.bits) {
            notices.push(format!(
                "notice: code length {} is outside the usual {:?}",
                codes.bits, STANDARD_BITS
            ));
        }

        let cvd = CvConfig::default();
        let cv = CvConfig {
            folds: get("cv.folds").map_or(Ok(cvd.folds), |v| parse("cv.folds", v))?,
            per_class_validation_count: get("cv.per_class")
                .map_or(Ok(cvd.per_class_validation_count), |v| parse("cv.per_class", v))?,
            ..cvd
        };
        cv.validate()?;

        let md = MlpConfig::default();
        let hidden = match get("mlp.hidden") {
            Some(v) => match parse_list::<usize>("mlp.hidden", v)?.as_slice() {
                &[h1, h2] if h1 > 0 && h2 > 0 => (h1, h2),
                _ => return Err(Error::InvalidArgument(format!("mlp.hidden needs two positive sizes, got {v:?}"))),
            },
            None => md.hidden,
        };
        let mut mlp = MlpConfig {
            hidden,
            dropout: get("mlp.dropout").map_or(Ok(md.dropout), |v| parse("mlp.dropout", v))?,
            ..md
        };
        if !(0.0..1.0).contains(&mlp.dropout) {
            return Err(Error::InvalidArgument(format!("mlp.dropout must be in [0, 1), got {}", mlp.dropout)));
        }
        if let Some(v) = get("mlp.epochs") {
            mlp.base.epochs = parse("mlp.epochs", v)?;
            mlp.incremental.epochs = mlp.base.epochs;
        }
        if let Some(v) = get("mlp.batch_size") {
            mlp.base.batch_size = parse("mlp.batch_size", v)?;
            mlp.incremental.batch_size = mlp.base.batch_size;
        }
        if let Some(v) = get("mlp.lr") {
            mlp.base.learning_rate = parse("mlp.lr", v)?;
            mlp.incremental.learning_rate = mlp.base.learning_rate;
        }
        if let Some(v) = get("mlp.incremental_epochs") {
            mlp.incremental.epochs = parse("mlp.incremental_epochs", v)?;
        }
        if let Some(v) = get("mlp.incremental_lr") {
            mlp.incremental.learning_rate = parse("mlp.incremental_lr", v)?;
        }
        if let Some(v) = get("mlp.class_weights") {
            mlp.incremental.use_class_weights = parse_bool("mlp.class_weights", v)?;
        }
        if let Some(v) = get("mlp.sampler") {
            mlp.incremental.use_imbalanced_sampler = parse_bool("mlp.sampler", v)?;
        }
        mlp.base.validate()?;
        mlp.incremental.validate()?;

        let ed = ExperimentConfig::default();
        let experiment = ExperimentConfig {
            codes,
            samples_per_class: get("samples_per_class").map_or(Ok(ed.samples_per_class), |v| parse("samples_per_class", v))?,
            cv,
            mlp,
            retrieval_cutoff: get("retrieval_k").map_or(Ok(ed.retrieval_cutoff), |v| parse("retrieval_k", v))?,
            hashing_cutoff: get("hashing_k").map_or(Ok(ed.hashing_cutoff), |v| parse("hashing_k", v))?,
            exclude_self: get("exclude_self").map_or(Ok(false), |v| parse_bool("exclude_self", v))?,
        };
        if experiment.samples_per_class == 0 {
            return Err(Error::InvalidArgument("samples_per_class must be >= 1".into()));
        }

        let shuffle_seeds = match (get("shuffle_seeds"), get("shuffles")) {
            (Some(v), _) => parse_list("shuffle_seeds", v)?,
            (None, n) => {
                let n: u64 = n.map_or(Ok(3), |v| parse("shuffles", v))?;
                (0..n).map(|i| derive_seed(seed, &[stream::SHUFFLE, i])).collect()
            }
        };
        if shuffle_seeds.is_empty() {
            return Err(Error::InvalidArgument("need at least one shuffle".into()));
        }
        let protocols = parse_list("protocols", get("protocols").unwrap_or("P1,P2,P3"))?;
        let methods = parse_list("methods", get("methods").unwrap_or("lr1"))?;
        if protocols.is_empty() || methods.is_empty() {
            return Err(Error::InvalidArgument("need at least one protocol and one method".into()));
        }
        let train_fraction = get("train_fraction").map_or(Ok(0.7), |v| parse("train_fraction", v))?;
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!("train_fraction must be in (0, 1), got {train_fraction}")));
        }

        Ok(Self {
            data,
            train_fraction,
            standardize: get("standardize").map_or(Ok(true), |v| parse_bool("standardize", v))?,
            experiment,
            phase_sizes: get("phase_sizes").map(|v| parse_list("phase_sizes", v)).transpose()?,
            shuffle_seeds,
            protocols,
            methods,
            out: PathBuf::from(get("out").unwrap_or("icmh-out")),
            seed,
            notices,
        })
    }

    /// Every setting as `key=value` lines, including derived seeds.
    pub fn resolved(&self) -> Vec<(String, String)> {
        let join = |v: &[String]| v.join(",");
        let mut kv: Vec<(String, String)> = Vec::new();
        let mut put = |k: &str, v: String| kv.push((k.to_string(), v));
        match &self.data {
            DataSource::Files { manifest, test_manifest } => {
                put("manifest", manifest.display().to_string());
                if let Some(t) = test_manifest {
                    put("test_manifest", t.display().to_string());
                }
            }
            DataSource::Synthetic(s) => {
                put("synth.classes", s.class_count.to_string());
                put("synth.per_class", s.per_class.to_string());
                put("synth.dx", s.dx.to_string());
                put("synth.dy", s.dy.to_string());
                put("synth.spread", s.spread.to_string());
                put("synth.seed", s.seed.to_string());
            }
        }
        let e = &self.experiment;
        put("train_fraction", self.train_fraction.to_string());
        put("standardize", self.standardize.to_string());
        put("bits", e.codes.bits.to_string());
        put("lambda_h", e.codes.lambda_h.to_string());
        put("max_iters", e.codes.max_iters.to_string());
        put("rel_tol", e.codes.rel_tol.to_string());
        put("eta", e.codes.eta_init.to_string());
        put("samples_per_class", e.samples_per_class.to_string());
        put(
            "phase_sizes",
            self.phase_sizes.as_ref().map_or("auto".into(), |p| join(&p.iter().map(ToString::to_string).collect::<Vec<_>>())),
        );
        put("shuffle_seeds", join(&self.shuffle_seeds.iter().map(ToString::to_string).collect::<Vec<_>>()));
        put("protocols", join(&self.protocols.iter().map(ToString::to_string).collect::<Vec<_>>()));
        put("methods", join(&self.methods.iter().map(ToString::to_string).collect::<Vec<_>>()));
        put("retrieval_k", e.retrieval_cutoff.to_string());
        put("hashing_k", e.hashing_cutoff.to_string());
        put("exclude_self", e.exclude_self.to_string());
        put("cv.folds", e.cv.folds.to_string());
        put("cv.per_class", e.cv.per_class_validation_count.to_string());
        put("mlp.hidden", format!("{},{}", e.mlp.hidden.0, e.mlp.hidden.1));
        put("mlp.dropout", e.mlp.dropout.to_string());
        put("mlp.epochs", e.mlp.base.epochs.to_string());
        put("mlp.batch_size", e.mlp.base.batch_size.to_string());
        put("mlp.lr", e.mlp.base.learning_rate.to_string());
        put("mlp.incremental_epochs", e.mlp.incremental.epochs.to_string());
        put("mlp.incremental_lr", e.mlp.incremental.learning_rate.to_string());
        put("mlp.class_weights", e.mlp.incremental.use_class_weights.to_string());
        put("mlp.sampler", e.mlp.incremental.use_imbalanced_sampler.to_string());
        put("out", self.out.display().to_string());
        put("seed", self.seed.to_string());
        kv
    }
}

/// Default phase split: roughly three equal phases, larger ones last.
pub fn default_phase_sizes(class_count: usize) -> Vec<usize> {
    let phases = class_count.clamp(1, 3);
    (0..phases)
        .map(|p| class_count / phases + usize::from(p >= phases - class_count % phases))
        .collect()
}

/// Writes the synthetic dataset described by `cfg` into `cfg.out`.
pub fn cmd_gen_synth(cfg: &RunConfig) -> Result<PathBuf> {
    let DataSource::Synthetic(synth) = &cfg.data else {
        return Err(Error::InvalidArgument("gen-synth needs synthetic parameters, not a manifest".into()));
    };
    let data = data::generate_synthetic(synth)?;
    fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    data::save_dataset(&cfg.out, "synthetic", &data)
}

/// Train/test data ready for the protocols.
pub fn prepare_data(cfg: &RunConfig) -> Result<(PairedDataset, PairedDataset)> {
    let (train, test) = match &cfg.data {
        DataSource::Files {
            manifest,
            test_manifest: Some(t),
        } => (data::load_dataset(manifest)?, data::load_dataset(t)?),
        DataSource::Files { manifest, test_manifest: None } => {
            let all = data::load_dataset(manifest)?;
            data::train_test_split(&all, cfg.train_fraction, derive_seed(cfg.seed, &[stream::SPLIT]))?
        }
        DataSource::Synthetic(s) => {
            let all = data::generate_synthetic(s)?;
            data::train_test_split(&all, cfg.train_fraction, derive_seed(cfg.seed, &[stream::SPLIT]))?
        }
    };
    if !cfg.standardize {
        return Ok((train, test));
    }
    let (sx, sy) = (Standardizer::fit(&train.x), Standardizer::fit(&train.y));
    let scale = |d: PairedDataset| -> Result<PairedDataset> {
        PairedDataset::new(sx.apply(&d.x)?, sy.apply(&d.y)?, d.labels)
    };
    Ok((scale(train)?, scale(test)?))
}

/// Files written by [`cmd_run`].
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub runs: Vec<ProtocolRun>,
    pub files: Vec<PathBuf>,
}

const CSV_HEADER: &str = "shuffle,phase,protocol,method,seen_classes,task,direction,map\n";

fn csv_rows(out: &mut String, shuffle: &str, r: &crate::protocol::PhaseResult) {
    for (task, m) in [("retrieval", r.retrieval), ("hashing", r.hashing)] {
        for (dir, v) in [("x2y", m.x_to_y), ("y2x", m.y_to_x), ("avg", m.average)] {
            let _ = writeln!(
                out,
                "{shuffle},{},{},{},{},{task},{dir},{v:.6}",
                r.phase, r.protocol, r.method, r.seen_classes
            );
        }
    }
}

fn write_file(path: &Path, text: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))?;
    files.push(path.to_path_buf());
    Ok(())
}

/// Runs every requested protocol for every method and writes, per method,
/// `results_<method>.csv`, `summary_<method>.txt` and one two-column
/// `curve_<protocol>_<method>_<task>.dat` per protocol and task; plus
/// `timings.csv` and `run_manifest.txt`.
///
/// The CSV files carry no timing data and are byte-reproducible.
pub fn cmd_run(cfg: &RunConfig) -> Result<RunOutput> {
    fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    let (train, test) = prepare_data(cfg)?;
    let classes = train.class_count();
    let sizes = cfg.phase_sizes.clone().unwrap_or_else(|| default_phase_sizes(classes));
    let plan = PhasePlan::shuffled(classes, sizes, cfg.shuffle_seeds.clone())?;

    let mut files = Vec::new();
    let mut runs = Vec::new();
    let mut timings = String::from("method,protocol,phase,mean_seconds\n");
    for &method in &cfg.methods {
        let mut csv = String::from(CSV_HEADER);
        let mut summary = String::new();
        for &protocol in &cfg.protocols {
            let run = run_protocol(&train, &test, &plan, protocol, method, &cfg.experiment)?;
            for (s, phases) in run.per_shuffle.iter().enumerate() {
                for r in phases {
                    csv_rows(&mut csv, &(s + 1).to_string(), r);
                }
            }
            for r in &run.mean {
                csv_rows(&mut csv, "mean", r);
                let _ = writeln!(timings, "{method},{protocol},{},{:.3}", r.phase, r.seconds);
            }
            let _ = writeln!(summary, "[{protocol} {method}]");
            let _ = writeln!(summary, "phase  classes  retrieval@{}  hashing@{}", cfg.experiment.retrieval_cutoff, cfg.experiment.hashing_cutoff);
            for r in &run.mean {
                let _ = writeln!(
                    summary,
                    "{:>5}  {:>7}  {:>12.4}  {:>10.4}",
                    r.phase, r.seen_classes, r.retrieval.average, r.hashing.average
                );
            }
            summary.push('\n');
            for (task, pick) in [
                ("retrieval", (|r: &crate::protocol::PhaseResult| r.retrieval.average) as fn(&_) -> f64),
                ("hashing", |r| r.hashing.average),
            ] {
                let mut dat = format!("# phase {task}_map\n");
                for r in &run.mean {
                    let _ = writeln!(dat, "{} {:.6}", r.phase, pick(r));
                }
                let name = format!("curve_{}_{method}_{task}.dat", protocol.tag());
                write_file(&cfg.out.join(name), &dat, &mut files)?;
            }
            runs.push(run);
        }
        write_file(&cfg.out.join(format!("results_{method}.csv")), &csv, &mut files)?;
        write_file(&cfg.out.join(format!("summary_{method}.txt")), &summary, &mut files)?;
    }
    write_file(&cfg.out.join("timings.csv"), &timings, &mut files)?;

    let mut manifest: Vec<(String, String)> = vec![("version".into(), env!("CARGO_PKG_VERSION").into())];
    manifest.extend(cfg.resolved());
    manifest.push(("train_rows".into(), train.len().to_string()));
    manifest.push(("test_rows".into(), test.len().to_string()));
    let sizes: Vec<String> = plan.phase_sizes.iter().map(ToString::to_string).collect();
    manifest.push(("resolved_phase_sizes".into(), sizes.join(",")));
    for (i, order) in plan.class_orders.iter().enumerate() {
        let o: Vec<String> = order.iter().map(ToString::to_string).collect();
        manifest.push((format!("class_order.{}", i + 1), o.join(",")));
    }
    let path = cfg.out.join("run_manifest.txt");
    data::write_key_values(&path, &manifest)?;
    files.push(path);
    Ok(RunOutput { runs, files })
}

/// Inputs to [`cmd_eval`]: dataset manifests whose `x`/`y` matrices hold codes
/// (signs are taken) and whose labels give relevance.
#[derive(Debug, Clone)]
pub struct EvalArgs {
    pub query: PathBuf,
    pub gallery: PathBuf,
    pub cutoff: Cutoff,
    pub exclude_self: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalReport {
    pub cutoff: Cutoff,
    pub queries: usize,
    pub gallery: usize,
    pub map: CrossModalMap,
}

impl EvalReport {
    pub fn porcelain(&self) -> String {
        format!(
            "cutoff={}\nqueries={}\ngallery={}\nmap_x2y={:.6}\nmap_y2x={:.6}\nmap_avg={:.6}\n",
            self.cutoff, self.queries, self.gallery, self.map.x_to_y, self.map.y_to_x, self.map.average
        )
    }

    pub fn human(&self) -> String {
        format!(
            "MAP@{} over {} queries, gallery of {}\n  x -> y  {:.4}\n  y -> x  {:.4}\n  average {:.4}\n",
            self.cutoff, self.queries, self.gallery, self.map.x_to_y, self.map.y_to_x, self.map.average
        )
    }
}

pub fn cmd_eval(args: &EvalArgs) -> Result<EvalReport> {
    let q = data::load_dataset(&args.query)?;
    let g = data::load_dataset(&args.gallery)?;
    let codes = |m: &crate::FeatureMatrix| BinaryCodeMatrix::from_signs(m.as_matrix());
    let map = cross_modal_map(
        &codes(&q.x),
        &codes(&q.y),
        q.labels.as_slice(),
        &codes(&g.x),
        &codes(&g.y),
        g.labels.as_slice(),
        MapOptions {
            cutoff: args.cutoff,
            exclude_self: args.exclude_self,
        },
    )?;
    Ok(EvalReport {
        cutoff: args.cutoff,
        queries: q.len(),
        gallery: g.len(),
        map,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(kv: &[(&str, &str)]) -> BTreeMap<String, String> {
        kv.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn defaults_resolve() {
        let cfg = RunConfig::from_pairs(&BTreeMap::new(), Path::new("")).unwrap();
        assert_eq!(cfg.experiment.codes.bits, 128);
        assert_eq!(cfg.experiment.samples_per_class, 10);
        assert_eq!(cfg.shuffle_seeds.len(), 3);
        assert_eq!(cfg.protocols, Protocol::ALL);
        assert!(cfg.notices.is_empty());
    }

    #[test]
    fn unknown_key_and_bad_method() {
        let err = RunConfig::from_pairs(&pairs(&[("bitz", "3")]), Path::new("")).unwrap_err();
        assert!(err.to_string().contains("bitz"));
        let err = RunConfig::from_pairs(&pairs(&[("methods", "lr1,svm")]), Path::new("")).unwrap_err();
        assert!(err.to_string().contains("lr1, lr2, lr3, mlp"), "{err}");
    }

    #[test]
    fn odd_bits_give_notice() {
        let cfg = RunConfig::from_pairs(&pairs(&[("bits", "24")]), Path::new("")).unwrap();
        assert_eq!(cfg.notices.len(), 1);
    }

    #[test]
    fn phase_split() {
        assert_eq!(default_phase_sizes(8), vec![2, 3, 3]);
        assert_eq!(default_phase_sizes(9), vec![3, 3, 3]);
        assert_eq!(default_phase_sizes(2), vec![1, 1]);
        assert_eq!(default_phase_sizes(10).iter().sum::<usize>(), 10);
    }
}
