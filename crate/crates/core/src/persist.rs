//! On-disk formats for learned artifacts.
//!
//! Every artifact is a set of matrix text files next to a `key=value`
//! manifest; manifests name their matrix files relative to themselves.
//!
//! | artifact | manifest keys |
//! |---|---|
//! | relaxed codes | `a_path`, `b_path`, `bits`, `lambda_h`, `seed`, `iterations`, `final_objective` |
//! | ridge hash function | `weights_path`, `lambda`, `gamma`, `variant` |
//! | MLP checkpoint | `<param>_path` and `<param>_shape` per tensor, `dropout_rate`, `class_count`, `seed` |

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use crate::codegen::{CodeLearnerConfig, CodePair};
use crate::codes::RelaxedCodeMatrix;
use crate::data::{read_key_values, write_key_values};
use crate::data::io::{read_matrix, save_matrix};
use crate::error::{Error, Result};
use crate::linfn::{IncrementalVariant, LinearHashFunction};
use crate::mlp::{Dense, MlpHashFunction};

const MLP_PARAMS: [&str; 8] = ["w1", "b1", "w2", "b2", "wh", "bh", "wc", "bc"];

struct Manifest {
    path: PathBuf,
    kv: BTreeMap<String, String>,
}

impl Manifest {
    fn read(path: &Path) -> Result<Self> {
        Ok(Self {
            path: path.to_path_buf(),
            kv: read_key_values(path)?,
        })
    }

    fn raw(&self, key: &str) -> Result<&str> {
        self.kv
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::InvalidArgument(format!("{}: missing key `{key}`", self.path.display())))
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let v = self.raw(key)?;
        v.parse()
            .map_err(|_| Error::InvalidArgument(format!("{}: invalid `{key}`: {v:?}", self.path.display())))
    }

    fn matrix(&self, key: &str) -> Result<DMatrix<f64>> {
        let p = PathBuf::from(self.raw(key)?);
        let p = if p.is_absolute() {
            p
        } else {
            self.path.parent().unwrap_or(Path::new("")).join(p)
        };
        read_matrix(p)
    }
}

fn check_dir(dir: &Path) -> Result<()> {
    if dir.is_dir() {
        Ok(())
    } else {
        Err(Error::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "output directory does not exist"),
        ))
    }
}

/// Writes `<name>_a.txt`, `<name>_b.txt` and `<name>.codes`; returns the
/// manifest path.
pub fn save_codes(dir: impl AsRef<Path>, name: &str, codes: &CodePair, cfg: &CodeLearnerConfig) -> Result<PathBuf> {
    let dir = dir.as_ref();
    check_dir(dir)?;
    let (a, b) = (format!("{name}_a.txt"), format!("{name}_b.txt"));
    save_matrix(dir.join(&a), codes.a.as_matrix())?;
    save_matrix(dir.join(&b), codes.b.as_matrix())?;
    let manifest = dir.join(format!("{name}.codes"));
    write_key_values(
        &manifest,
        &[
            ("a_path", a),
            ("b_path", b),
            ("bits", codes.a.bits().to_string()),
            ("lambda_h", cfg.lambda_h.to_string()),
            ("seed", cfg.seed.to_string()),
            ("iterations", codes.iterations().to_string()),
            ("final_objective", codes.final_objective().to_string()),
        ],
    )?;
    Ok(manifest)
}

pub fn load_codes(manifest: impl AsRef<Path>) -> Result<(RelaxedCodeMatrix, RelaxedCodeMatrix)> {
    let m = Manifest::read(manifest.as_ref())?;
    let a = RelaxedCodeMatrix::new(m.matrix("a_path")?)?;
    let b = RelaxedCodeMatrix::new(m.matrix("b_path")?)?;
    let bits: usize = m.get("bits")?;
    if a.bits() != bits || b.bits() != bits || a.rows() != b.rows() {
        return Err(Error::shape("stored codes", format!("{} x {bits}", a.rows()), format!("{} x {}", b.rows(), b.bits())));
    }
    Ok((a, b))
}

/// Writes `<name>_weights.txt` and `<name>.linear`.
pub fn save_linear(dir: impl AsRef<Path>, name: &str, f: &LinearHashFunction) -> Result<PathBuf> {
    let dir = dir.as_ref();
    check_dir(dir)?;
    let w = format!("{name}_weights.txt");
    save_matrix(dir.join(&w), &f.weights)?;
    let manifest = dir.join(format!("{name}.linear"));
    write_key_values(
        &manifest,
        &[
            ("weights_path", w),
            ("lambda", f.reg_lambda.to_string()),
            ("gamma", f.gamma.to_string()),
            ("variant", f.variant.map_or("base".to_string(), |v| v.index().to_string())),
        ],
    )?;
    Ok(manifest)
}

pub fn load_linear(manifest: impl AsRef<Path>) -> Result<LinearHashFunction> {
    let m = Manifest::read(manifest.as_ref())?;
    let variant = match m.raw("variant")? {
        "base" => None,
        v => Some(IncrementalVariant::from_index(m.get("variant").map_err(|_| {
            Error::InvalidArgument(format!("invalid variant {v:?}"))
        })?)?),
    };
    Ok(LinearHashFunction {
        weights: m.matrix("weights_path")?,
        reg_lambda: m.get("lambda")?,
        gamma: m.get("gamma")?,
        variant,
    })
}

/// Writes one `<name>_<param>.txt` per tensor and `<name>.mlp`.
pub fn save_mlp(dir: impl AsRef<Path>, name: &str, net: &MlpHashFunction, seed: u64) -> Result<PathBuf> {
    let dir = dir.as_ref();
    check_dir(dir)?;
    let mut kv = Vec::new();
    for (key, p) in MLP_PARAMS.iter().zip(net.parameters()) {
        let file = format!("{name}_{key}.txt");
        save_matrix(dir.join(&file), p)?;
        kv.push((format!("{key}_path"), file));
        kv.push((format!("{key}_shape"), format!("{}x{}", p.nrows(), p.ncols())));
    }
    kv.push(("dropout_rate".into(), net.dropout_rate.to_string()));
    kv.push(("class_count".into(), net.class_count().to_string()));
    kv.push(("seed".into(), seed.to_string()));
    let manifest = dir.join(format!("{name}.mlp"));
    write_key_values(&manifest, &kv)?;
    Ok(manifest)
}

pub fn load_mlp(manifest: impl AsRef<Path>) -> Result<MlpHashFunction> {
    let m = Manifest::read(manifest.as_ref())?;
    let mut params = Vec::with_capacity(8);
    for key in MLP_PARAMS {
        let p = m.matrix(&format!("{key}_path"))?;
        let shape = format!("{}x{}", p.nrows(), p.ncols());
        let expected = m.raw(&format!("{key}_shape"))?;
        if shape != expected {
            return Err(Error::shape("checkpoint tensor", expected, shape));
        }
        params.push(p);
    }
    let mut it = params.into_iter();
    let mut dense = || Dense {
        weight: it.next().expect("eight tensors"),
        bias: it.next().expect("eight tensors"),
    };
    let net = MlpHashFunction {
        layer1: dense(),
        layer2: dense(),
        hash_head: dense(),
        ce_head: dense(),
        dropout_rate: m.get("dropout_rate")?,
    };
    let chain = [
        (net.layer1.out_dim(), net.layer2.in_dim()),
        (net.layer2.out_dim(), net.hash_head.in_dim()),
        (net.layer2.out_dim(), net.ce_head.in_dim()),
    ];
    if let Some((o, i)) = chain.into_iter().find(|(o, i)| o != i) {
        return Err(Error::shape("checkpoint layer chain", o, i));
    }
    let classes: usize = m.get("class_count")?;
    if classes != net.class_count() {
        return Err(Error::shape("checkpoint class count", classes, net.class_count()));
    }
    if net.parameters().iter().any(|p| p.iter().any(|v| !v.is_finite())) {
        return Err(Error::NonFinite(format!("{}: checkpoint parameters", m.path.display())));
    }
    Ok(net)
}
