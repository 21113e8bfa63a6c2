//! Instance files.
//!
//! A flat `key = value` format, one key per line, `#` starting a comment:
//!
//! ```text
//! name = rs111
//! d = 1
//! m = 2
//! coeffs = 1 0  0 1  1 1
//! e = 1 1 1
//! labels = f g h
//! seed = 7
//! ```
//!
//! `coeffs` is the coefficient matrix in row-major order, one row per map.
//! Optional keys: `labels`, `seed`, `samples`, `engine`, `jprime` and `n`
//! (1-based map indices). Numbers are written back with the shortest decimal
//! that parses to the same `f64`, so `parse(to_text(x)) == x`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{LabError, Result};
use crate::family::{LinearFamily, MeasureSpec};
use crate::functional::EngineKind;

const KEYS: [&str; 11] = ["name", "d", "m", "coeffs", "e", "labels", "seed", "samples", "engine", "jprime", "n"];

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub name: String,
    pub d: usize,
    pub m: usize,
    pub coeffs: Vec<Vec<f64>>,
    pub e: Vec<f64>,
    pub labels: Option<Vec<String>>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub engine: Option<EngineKind>,
    /// 0-based once parsed.
    pub jprime: Option<Vec<usize>>,
    pub n: Option<usize>,
}

fn numbers(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(|c: char| c.is_whitespace() || c == ',' || c == ';')
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| LabError::argument(format!("{key}: bad number {t:?}"))))
        .collect()
}

fn integer<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| LabError::argument(format!("{key}: bad integer {v:?}")))
}

fn indices(key: &str, v: &str, len: usize) -> Result<Vec<usize>> {
    v.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| {
            let k: usize = integer(key, t)?;
            if k == 0 || k > len {
                return Err(LabError::argument(format!("{key}: index {k} outside 1..={len}")));
            }
            Ok(k - 1)
        })
        .collect()
}

impl Instance {
    pub fn parse(text: &str) -> Result<Self> {
        let mut kv: BTreeMap<&str, &str> = BTreeMap::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| LabError::argument(format!("line {}: expected key = value", ln + 1)))?;
            let k = k.trim();
            if !KEYS.contains(&k) {
                return Err(LabError::argument(format!("line {}: unknown key {k:?}", ln + 1)));
            }
            if kv.insert(k, v.trim()).is_some() {
                return Err(LabError::argument(format!("line {}: duplicate key {k:?}", ln + 1)));
            }
        }
        let need = |k: &str| kv.get(k).copied().ok_or_else(|| LabError::argument(format!("missing key {k:?}")));

        let d: usize = integer("d", need("d")?)?;
        let m: usize = integer("m", need("m")?)?;
        if m == 0 {
            return Err(LabError::argument("m must be positive"));
        }
        let flat = numbers("coeffs", need("coeffs")?)?;
        if flat.is_empty() || flat.len() % m != 0 {
            return Err(LabError::argument(format!("coeffs: {} entries is not a multiple of m = {m}", flat.len())));
        }
        let coeffs: Vec<Vec<f64>> = flat.chunks(m).map(|c| c.to_vec()).collect();
        let len = coeffs.len();
        let e = numbers("e", need("e")?)?;
        if e.len() != len {
            return Err(LabError::argument(format!("e has {} entries for {len} maps", e.len())));
        }
        let labels = kv.get("labels").map(|v| v.split_whitespace().map(String::from).collect::<Vec<_>>());
        if let Some(l) = &labels {
            if l.len() != len {
                return Err(LabError::argument("one label per map is required"));
            }
        }
        let inst = Instance {
            name: kv.get("name").map(|s| s.to_string()).unwrap_or_else(|| "instance".into()),
            d,
            m,
            coeffs,
            e,
            labels,
            seed: kv.get("seed").map(|v| integer("seed", v)).transpose()?,
            samples: kv.get("samples").map(|v| integer("samples", v)).transpose()?,
            engine: kv.get("engine").map(|v| v.parse()).transpose()?,
            jprime: kv.get("jprime").map(|v| indices("jprime", v, len)).transpose()?,
            n: kv
                .get("n")
                .map(|v| indices("n", v, len).and_then(|k| match k[..] {
                    [k] => Ok(k),
                    _ => Err(LabError::argument("n takes exactly one index")),
                }))
                .transpose()?,
        };
        inst.family()?;
        inst.spec()?;
        Ok(inst)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|err| LabError::argument(format!("cannot read {}: {err}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ");
        let mut out = String::new();
        let _ = writeln!(out, "name = {}", self.name);
        let _ = writeln!(out, "d = {}", self.d);
        let _ = writeln!(out, "m = {}", self.m);
        let rows: Vec<String> = self.coeffs.iter().map(|r| join(r)).collect();
        let _ = writeln!(out, "coeffs = {}", rows.join("  "));
        let _ = writeln!(out, "e = {}", join(&self.e));
        if let Some(l) = &self.labels {
            let _ = writeln!(out, "labels = {}", l.join(" "));
        }
        if let Some(s) = self.seed {
            let _ = writeln!(out, "seed = {s}");
        }
        if let Some(s) = self.samples {
            let _ = writeln!(out, "samples = {s}");
        }
        if let Some(e) = self.engine {
            let _ = writeln!(out, "engine = {e}");
        }
        if let Some(jp) = &self.jprime {
            let v: Vec<String> = jp.iter().map(|k| (k + 1).to_string()).collect();
            let _ = writeln!(out, "jprime = {}", v.join(" "));
        }
        if let Some(n) = self.n {
            let _ = writeln!(out, "n = {}", n + 1);
        }
        out
    }

    pub fn family(&self) -> Result<LinearFamily> {
        let fam = LinearFamily::new(self.coeffs.clone(), self.d)?;
        match &self.labels {
            Some(l) => fam.with_labels(l.clone()),
            None => Ok(fam),
        }
    }

    pub fn spec(&self) -> Result<MeasureSpec> {
        MeasureSpec::new(self.e.clone(), self.d)
    }

    /// `(J′, n)`: the configured choice, or the family's default.
    pub fn balancing(&self, fam: &LinearFamily) -> Result<(Vec<usize>, usize)> {
        match (&self.jprime, self.n) {
            (Some(jp), Some(n)) => {
                if jp.len() != self.m || !jp.contains(&n) {
                    return Err(LabError::argument("jprime needs m indices and must contain n"));
                }
                Ok((jp.clone(), n))
            }
            (None, None) => fam.select_independent_subset(),
            _ => Err(LabError::argument("jprime and n must be given together")),
        }
    }

    pub fn riesz_sobolev(d: usize, e: Vec<f64>) -> Self {
        Instance {
            name: format!("rs{d}d"),
            d,
            m: 2,
            coeffs: vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]],
            e,
            labels: None,
            seed: None,
            samples: None,
            engine: None,
            jprime: None,
            n: None,
        }
    }
}
