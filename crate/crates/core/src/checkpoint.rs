//! Checkpoint files.
//!
//! Layout (version 1):
//!
//! ```text
//! CIBLE-CHECKPOINT 1\n
//! model <transe|transr|rotate|r-rotate>\n
//! n_entity <usize>\n
//! n_relation <usize>\n        (includes inverse relations)
//! dim <usize>\n
//! norm <1|2>\n
//! gamma <f64>\n
//! alpha <f64>\n               (optional)
//! end\n
//! <entity block>     n_entity × dim                  f64 little-endian, row-major
//! <relation block>   n_relation × w                  w = dim (Trans*) or dim/2 (phases)
//! <projection block> n_relation × k × k (optional)   k = w
//! ```
//!
//! Header keys may appear in any order; unknown keys are rejected.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use ndarray::{Array2, Array3};

use crate::error::{Error, Result};
use crate::geometry::{ModelKind, ModelParams, ModelShape, Norm};

const MAGIC: &str = "CIBLE-CHECKPOINT 1";

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    /// CIBLE mixing weight the parameters were trained with, if any.
    pub alpha: Option<f64>,
}

impl Checkpoint {
    pub fn new(params: ModelParams, alpha: Option<f64>) -> Self {
        Checkpoint { params, alpha }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let p = &self.params;
        let mut out = Vec::with_capacity(256 + 8 * p.param_count());
        let mut header = format!(
            "{MAGIC}\nmodel {}\nn_entity {}\nn_relation {}\ndim {}\nnorm {}\ngamma {}\n",
            p.kind,
            p.n_entity(),
            p.n_relation(),
            p.dim(),
            p.norm.order(),
            p.gamma
        );
        if let Some(a) = self.alpha {
            header.push_str(&format!("alpha {a}\n"));
        }
        header.push_str("end\n");
        out.extend_from_slice(header.as_bytes());
        for x in p.param_iter() {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut reader = BufReader::new(reader);
        let bad = |msg: String| Error::Data(format!("checkpoint: {msg}"));
        let mut line = String::new();
        let mut read_line = |line: &mut String| -> Result<()> {
            line.clear();
            reader
                .read_line(line)
                .map_err(|e| Error::io("reading checkpoint header", e))?;
            Ok(())
        };

        read_line(&mut line)?;
        if line.trim_end() != MAGIC {
            return Err(bad(format!("bad magic line {:?}", line.trim_end())));
        }
        let (mut kind, mut ne, mut nr, mut dim, mut norm, mut gamma, mut alpha) =
            (None, None, None, None, None, None, None);
        loop {
            read_line(&mut line)?;
            let l = line.trim_end();
            if l.is_empty() {
                return Err(bad("truncated header".into()));
            }
            if l == "end" {
                break;
            }
            let (key, value) = l
                .split_once(' ')
                .ok_or_else(|| bad(format!("malformed header line {l:?}")))?;
            let num = |v: &str| -> Result<usize> {
                v.parse().map_err(|_| bad(format!("bad value for {key}: {v:?}")))
            };
            let real = |v: &str| -> Result<f64> {
                v.parse().map_err(|_| bad(format!("bad value for {key}: {v:?}")))
            };
            match key {
                "model" => kind = Some(value.parse::<ModelKind>()?),
                "n_entity" => ne = Some(num(value)?),
                "n_relation" => nr = Some(num(value)?),
                "dim" => dim = Some(num(value)?),
                "norm" => norm = Some(Norm::from_order(num(value)? as u8)?),
                "gamma" => gamma = Some(real(value)?),
                "alpha" => alpha = Some(real(value)?),
                _ => return Err(bad(format!("unknown header key {key:?}"))),
            }
        }
        let missing = |k: &str| bad(format!("missing header key {k}"));
        let shape = ModelShape {
            kind: kind.ok_or_else(|| missing("model"))?,
            n_entity: ne.ok_or_else(|| missing("n_entity"))?,
            n_relation: nr.ok_or_else(|| missing("n_relation"))?,
            dim: dim.ok_or_else(|| missing("dim"))?,
            norm: norm.ok_or_else(|| missing("norm"))?,
            gamma: gamma.ok_or_else(|| missing("gamma"))?,
        };
        let mut params = ModelParams::zeros(shape)?;

        let mut buf = Vec::new();
        reader
            .read_to_end(&mut buf)
            .map_err(|e| Error::io("reading checkpoint body", e))?;
        let expected = 8 * params.param_count();
        if buf.len() != expected {
            return Err(bad(format!(
                "body has {} bytes, expected {expected}",
                buf.len()
            )));
        }
        let mut values = buf
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
        fill2(&mut params.entity, &mut values);
        fill2(&mut params.relation, &mut values);
        if let Some(w) = params.projection.as_mut() {
            fill3(w, &mut values);
        }
        params.validate()?;
        Ok(Checkpoint { params, alpha })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        f.write_all(&self.to_bytes())
            .map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_reader(f)
    }
}

fn fill2(a: &mut Array2<f64>, values: &mut impl Iterator<Item = f64>) {
    for x in a.iter_mut() {
        *x = values.next().expect("length checked");
    }
}

fn fill3(a: &mut Array3<f64>, values: &mut impl Iterator<Item = f64>) {
    for x in a.iter_mut() {
        *x = values.next().expect("length checked");
    }
}
