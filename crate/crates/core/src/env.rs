//! Conductance environments: i.i.d. edge weights mu_e in [1, inf), generated
//! deterministically from (lattice, law, seed) with one RNG substream per
//! edge, so generation parallelises without changing the result.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{RcmError, Result};
use crate::lattice::{Adjacency, Boundary, LatticeSpec};
use crate::rng::Stream;
use crate::scalar::Scalar;

/// Law of a single edge conductance. Every variant has support in [1, inf).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConductanceLaw {
    Constant { c: f64 },
    Uniform { a: f64, b: f64 },
    /// P(mu > t) = t^{-alpha} for t >= 1.
    Pareto { alpha: f64 },
    /// mu = K with probability p, else 1.
    TwoPoint { k: f64, p: f64 },
    Explicit { values: Vec<f64> },
}

impl ConductanceLaw {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(RcmError::Parameter(msg.into()));
        match self {
            ConductanceLaw::Constant { c } if *c < 1.0 => bad("constant law needs c >= 1"),
            ConductanceLaw::Uniform { a, b } if *a < 1.0 || *b < *a => {
                bad("uniform law needs 1 <= a <= b")
            }
            ConductanceLaw::Pareto { alpha } if *alpha <= 0.0 => bad("pareto law needs alpha > 0"),
            ConductanceLaw::TwoPoint { k, p } if *k < 1.0 || !(0.0..=1.0).contains(p) => {
                bad("two_point law needs K >= 1 and p in [0,1]")
            }
            ConductanceLaw::Explicit { values } if values.iter().any(|&v| !(v >= 1.0)) => {
                bad("explicit values must all be >= 1")
            }
            _ => Ok(()),
        }
    }

    /// Analytic mean, when finite.
    pub fn mean(&self) -> Option<f64> {
        match self {
            ConductanceLaw::Constant { c } => Some(*c),
            ConductanceLaw::Uniform { a, b } => Some(0.5 * (a + b)),
            ConductanceLaw::Pareto { alpha } if *alpha > 1.0 => Some(alpha / (alpha - 1.0)),
            ConductanceLaw::Pareto { .. } => None,
            ConductanceLaw::TwoPoint { k, p } => Some(k * p + (1.0 - p)),
            ConductanceLaw::Explicit { values } => {
                Some(values.iter().sum::<f64>() / values.len() as f64)
            }
        }
    }

    fn sample(&self, stream: &mut Stream, edge: usize) -> f64 {
        match self {
            ConductanceLaw::Constant { c } => *c,
            ConductanceLaw::Uniform { a, b } => a + (b - a) * stream.u01(),
            ConductanceLaw::Pareto { alpha } => stream.u01_open().powf(-1.0 / alpha),
            ConductanceLaw::TwoPoint { k, p } => {
                if stream.u01() < *p {
                    *k
                } else {
                    1.0
                }
            }
            ConductanceLaw::Explicit { values } => values[edge % values.len()],
        }
    }
}

/// Text form used by the CLI: `constant:1`, `uniform:1,4`, `pareto:2`,
/// `two_point:100,0.1`, `explicit:1,3,1,3`.
impl FromStr for ConductanceLaw {
    type Err = RcmError;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = s.split_once(':').unwrap_or((s, ""));
        let nums: Vec<f64> = if args.is_empty() {
            vec![]
        } else {
            args.split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|_| RcmError::Parameter(format!("bad law argument {t:?}")))
                })
                .collect::<Result<_>>()?
        };
        let law = match (name, nums.as_slice()) {
            ("constant", [c]) => ConductanceLaw::Constant { c: *c },
            ("uniform", [a, b]) => ConductanceLaw::Uniform { a: *a, b: *b },
            ("pareto", [alpha]) => ConductanceLaw::Pareto { alpha: *alpha },
            ("two_point", [k, p]) => ConductanceLaw::TwoPoint { k: *k, p: *p },
            ("explicit", vals) if !vals.is_empty() => ConductanceLaw::Explicit {
                values: vals.to_vec(),
            },
            _ => {
                return Err(RcmError::Parameter(format!(
                    "unrecognised law {s:?} (want constant:c, uniform:a,b, pareto:alpha, two_point:K,p, explicit:v1,v2,...)"
                )))
            }
        };
        law.validate()?;
        Ok(law)
    }
}

/// One realisation of the environment omega: a conductance per undirected
/// edge. Immutable after generation.
#[derive(Clone, Debug)]
pub struct ConductanceField<F: Scalar> {
    pub lattice: LatticeSpec,
    pub law: ConductanceLaw,
    pub seed: u64,
    mu: Vec<F>,
    adjacency: Adjacency,
}

impl<F: Scalar> ConductanceField<F> {
    /// Deterministic generation: edge e is sampled from substream (seed, e).
    pub fn generate(lattice: LatticeSpec, law: ConductanceLaw, seed: u64) -> Result<Self> {
        law.validate()?;
        let n_edges = lattice.n_edges();
        if let ConductanceLaw::Explicit { values } = &law {
            if values.len() != n_edges {
                return Err(RcmError::Parameter(format!(
                    "explicit law has {} values but the lattice has {} edges",
                    values.len(),
                    n_edges
                )));
            }
        }
        let mu = (0..n_edges)
            .map(|e| F::of(law.sample(&mut Stream::substream(seed, e as u64), e)))
            .collect();
        let adjacency = Adjacency::build(&lattice);
        Ok(ConductanceField {
            lattice,
            law,
            seed,
            mu,
            adjacency,
        })
    }

    /// Field with every edge equal to one.
    pub fn homogeneous(lattice: LatticeSpec) -> Self {
        Self::generate(lattice, ConductanceLaw::Constant { c: 1.0 }, 0).expect("valid")
    }

    pub fn from_values(lattice: LatticeSpec, values: Vec<f64>) -> Result<Self> {
        Self::generate(lattice, ConductanceLaw::Explicit { values }, 0)
    }

    pub fn n_sites(&self) -> usize {
        self.lattice.n_sites()
    }

    pub fn n_edges(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &[F] {
        &self.mu
    }

    pub fn mu_edge(&self, edge: usize) -> F {
        self.mu[edge]
    }

    pub fn adjacency(&self) -> &Adjacency {
        &self.adjacency
    }

    /// Overwrite one edge (used to plant traps in otherwise generated fields).
    pub fn set_edge(&mut self, edge: usize, value: F) {
        assert!(value >= F::one(), "conductances stay in [1, inf)");
        self.mu[edge] = value;
    }

    /// mu_x = sum of conductances of edges incident to x.
    pub fn mu_site(&self, x: usize) -> F {
        self.adjacency.slots(x).map(|s| self.mu[self.adjacency.edge[s] as usize]).sum()
    }

    /// Largest mu_x over the box: the uniformisation rate.
    pub fn max_mu_site(&self) -> F {
        (0..self.n_sites())
            .map(|x| self.mu_site(x))
            .fold(F::zero(), F::max)
    }

    /// Neighbours of x with their edge index and conductance, in the fixed
    /// axis-major (-, +) order; free boundary omits out-of-box slots.
    pub fn neighbors(&self, x: usize) -> Result<Vec<(usize, usize, F)>> {
        self.lattice.check_site(x)?;
        Ok(self
            .adjacency
            .slots(x)
            .map(|s| {
                let e = self.adjacency.edge[s] as usize;
                (self.adjacency.nbr[s] as usize, e, self.mu[e])
            })
            .collect())
    }

    /// Arithmetic mean of the stored edge values.
    pub fn empirical_mean_mu(&self) -> f64 {
        self.mu.iter().map(|&m| m.to_f64_lossy()).sum::<f64>() / self.mu.len() as f64
    }

    /// The translated environment T_x omega; exact only on a torus.
    pub fn shift(&self, by: &[i64]) -> Result<Self> {
        if self.lattice.boundary != Boundary::Torus {
            return Err(RcmError::Unsupported(
                "shift is only defined on a torus".into(),
            ));
        }
        if by.len() != self.lattice.dim() {
            return Err(RcmError::Parameter("shift vector has wrong dim".into()));
        }
        let d = self.lattice.dim();
        let mut mu = vec![F::zero(); self.mu.len()];
        for site in 0..self.n_sites() {
            let coords = self.lattice.coords(site);
            let shifted: Vec<usize> = coords
                .iter()
                .zip(by)
                .zip(&self.lattice.sides)
                .map(|((&c, &s), &l)| {
                    let l = l as i64;
                    ((c as i64 + s).rem_euclid(l)) as usize
                })
                .collect();
            let src = self.lattice.site_index(&shifted);
            for axis in 0..d {
                mu[site * d + axis] = self.mu[src * d + axis];
            }
        }
        Ok(ConductanceField {
            lattice: self.lattice.clone(),
            law: self.law.clone(),
            seed: self.seed,
            mu,
            adjacency: self.adjacency.clone(),
        })
    }
}

#[derive(Serialize, Deserialize)]
struct EnvHeader {
    format_version: u32,
    dim: usize,
    sides: Vec<usize>,
    boundary: Boundary,
    law: ConductanceLaw,
    seed: u64,
}

const ENV_FORMAT_VERSION: u32 = 1;

impl<F: Scalar> ConductanceField<F> {
    /// `.rcmenv` = one-line JSON header, newline, little-endian f64 array in
    /// edge order. Bit-exact round trip for F = f64.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        let header = EnvHeader {
            format_version: ENV_FORMAT_VERSION,
            dim: self.lattice.dim(),
            sides: self.lattice.sides.clone(),
            boundary: self.lattice.boundary,
            law: self.law.clone(),
            seed: self.seed,
        };
        serde_json::to_writer(&mut w, &header).map_err(|e| RcmError::Format(e.to_string()))?;
        w.write_all(b"\n")?;
        for &m in &self.mu {
            w.write_all(&m.to_f64_lossy().to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let mut header_bytes = Vec::new();
        let mut byte = [0u8; 1];
        loop {
            r.read_exact(&mut byte)
                .map_err(|_| RcmError::Format("missing header newline".into()))?;
            if byte[0] == b'\n' {
                break;
            }
            header_bytes.push(byte[0]);
        }
        let header: EnvHeader = serde_json::from_slice(&header_bytes)
            .map_err(|e| RcmError::Format(format!("bad header: {e}")))?;
        if header.format_version != ENV_FORMAT_VERSION {
            return Err(RcmError::Format(format!(
                "unsupported format_version {}",
                header.format_version
            )));
        }
        let lattice = LatticeSpec::new(header.sides, header.boundary)?;
        if lattice.dim() != header.dim {
            return Err(RcmError::Format("dim does not match sides".into()));
        }
        let n_edges = lattice.n_edges();
        let mut raw = vec![0u8; 8 * n_edges];
        r.read_exact(&mut raw)
            .map_err(|_| RcmError::Format("truncated edge array".into()))?;
        let mut trailing = [0u8; 1];
        if r.read(&mut trailing)? != 0 {
            return Err(RcmError::Format("trailing bytes after edge array".into()));
        }
        let mu: Vec<F> = raw
            .chunks_exact(8)
            .map(|c| F::of(f64::from_le_bytes(c.try_into().unwrap())))
            .collect();
        if mu.iter().any(|&m| !(m >= F::one())) {
            return Err(RcmError::Format("edge value below 1".into()));
        }
        let adjacency = Adjacency::build(&lattice);
        Ok(ConductanceField {
            lattice,
            law: header.law,
            seed: header.seed,
            mu,
            adjacency,
        })
    }
}
