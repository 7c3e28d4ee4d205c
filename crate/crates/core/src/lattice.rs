//! Finite boxes of the d-dimensional lattice: site and edge indexing,
//! neighbour enumeration, and the graph metric.
//!
//! Sites are indexed row-major over coordinates (last axis fastest). Edges
//! are indexed lexicographically by (site, axis): each site owns its +axis
//! edge when that neighbour exists. On a torus every site owns d edges; on
//! a free box the last site along an axis owns none for that axis.

use serde::{Deserialize, Serialize};

use crate::error::{RcmError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Torus,
    Free,
}

/// Geometry of a finite box.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub sides: Vec<usize>,
    pub boundary: Boundary,
}

impl LatticeSpec {
    pub fn new(sides: Vec<usize>, boundary: Boundary) -> Result<Self> {
        if sides.is_empty() {
            return Err(RcmError::Parameter("dim must be >= 1".into()));
        }
        if sides.iter().any(|&l| l < 2) {
            return Err(RcmError::Parameter("every side must be >= 2".into()));
        }
        let mut n: usize = 1;
        for &l in &sides {
            n = n
                .checked_mul(l)
                .ok_or_else(|| RcmError::Parameter("site count overflows".into()))?;
        }
        n.checked_mul(sides.len())
            .ok_or_else(|| RcmError::Parameter("edge count overflows".into()))?;
        Ok(LatticeSpec { sides, boundary })
    }

    pub fn torus(sides: Vec<usize>) -> Result<Self> {
        Self::new(sides, Boundary::Torus)
    }

    pub fn free(sides: Vec<usize>) -> Result<Self> {
        Self::new(sides, Boundary::Free)
    }

    /// Square box with side `l` in dimension `d`.
    pub fn cube(d: usize, l: usize, boundary: Boundary) -> Result<Self> {
        Self::new(vec![l; d], boundary)
    }

    pub fn dim(&self) -> usize {
        self.sides.len()
    }

    pub fn n_sites(&self) -> usize {
        self.sides.iter().product()
    }

    pub fn n_edges(&self) -> usize {
        match self.boundary {
            Boundary::Torus => self.dim() * self.n_sites(),
            Boundary::Free => {
                let n = self.n_sites();
                self.sides.iter().map(|&l| n / l * (l - 1)).sum()
            }
        }
    }

    pub fn site_index(&self, coords: &[usize]) -> usize {
        debug_assert_eq!(coords.len(), self.dim());
        let mut idx = 0;
        for (k, &c) in coords.iter().enumerate() {
            debug_assert!(c < self.sides[k]);
            idx = idx * self.sides[k] + c;
        }
        idx
    }

    pub fn coords(&self, mut site: usize) -> Vec<usize> {
        let mut c = vec![0; self.dim()];
        for k in (0..self.dim()).rev() {
            c[k] = site % self.sides[k];
            site /= self.sides[k];
        }
        c
    }

    pub fn check_site(&self, site: usize) -> Result<()> {
        if site < self.n_sites() {
            Ok(())
        } else {
            Err(RcmError::SiteIndex(site, self.n_sites()))
        }
    }

    /// Neighbour of `site` one step along `axis` in direction `dir`
    /// (-1 or +1), or None off a free box.
    pub fn step(&self, site: usize, axis: usize, dir: i8) -> Option<usize> {
        let stride: usize = self.sides[axis + 1..].iter().product();
        let l = self.sides[axis];
        let c = site / stride % l;
        match (self.boundary, dir) {
            (Boundary::Torus, 1) => {
                Some(if c + 1 == l { site - c * stride } else { site + stride })
            }
            (Boundary::Torus, _) => {
                Some(if c == 0 { site + (l - 1) * stride } else { site - stride })
            }
            (Boundary::Free, 1) => (c + 1 < l).then(|| site + stride),
            (Boundary::Free, _) => (c > 0).then(|| site - stride),
        }
    }

    /// Neighbours in fixed order: axis-major, the -direction before the +.
    pub fn neighbors(&self, site: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(2 * self.dim());
        for axis in 0..self.dim() {
            if let Some(y) = self.step(site, axis, -1) {
                out.push((y, self.plus_edge(y, axis).expect("edge exists")));
            }
            if let Some(y) = self.step(site, axis, 1) {
                out.push((y, self.plus_edge(site, axis).expect("edge exists")));
            }
        }
        out
    }

    fn owns_plus_edge(&self, site: usize, axis: usize) -> bool {
        match self.boundary {
            Boundary::Torus => true,
            Boundary::Free => {
                let stride: usize = self.sides[axis + 1..].iter().product();
                site / stride % self.sides[axis] + 1 < self.sides[axis]
            }
        }
    }

    /// Index of the +axis edge owned by `site`, when that edge exists.
    pub fn plus_edge(&self, site: usize, axis: usize) -> Option<usize> {
        match self.boundary {
            Boundary::Torus => Some(site * self.dim() + axis),
            Boundary::Free => {
                if !self.owns_plus_edge(site, axis) {
                    return None;
                }
                let within = (0..axis).filter(|&k| self.owns_plus_edge(site, k)).count();
                Some(self.edges_before_site(site) + within)
            }
        }
    }

    /// Number of +axis-`k` edges owned by sites with index < `site`.
    fn owned_before(&self, site: usize, axis: usize) -> usize {
        let stride: usize = self.sides[axis + 1..].iter().product();
        let l = self.sides[axis];
        let block = stride * l; // sites per full cycle of this axis
        let full = site / block;
        let rem = site % block;
        let c = rem / stride;
        // within a block, sites with coordinate < l-1 own an edge
        full * stride * (l - 1) + if c >= l - 1 { stride * (l - 1) } else { c * stride + rem % stride }
    }

    /// Endpoints (owner, +axis neighbour) of an edge index.
    pub fn edge_endpoints(&self, edge: usize) -> (usize, usize, usize) {
        match self.boundary {
            Boundary::Torus => {
                let site = edge / self.dim();
                let axis = edge % self.dim();
                (site, self.step(site, axis, 1).unwrap(), axis)
            }
            Boundary::Free => {
                // edges sort by owner site, so binary search the owner
                let (mut lo, mut hi) = (0usize, self.n_sites());
                while lo + 1 < hi {
                    let mid = (lo + hi) / 2;
                    if self.edges_before_site(mid) <= edge {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let within = edge - self.edges_before_site(lo);
                let axis = (0..self.dim())
                    .filter(|&k| self.owns_plus_edge(lo, k))
                    .nth(within)
                    .expect("edge index in range");
                (lo, self.step(lo, axis, 1).unwrap(), axis)
            }
        }
    }

    /// Total edges owned by sites with index < `site` (free boundary).
    fn edges_before_site(&self, site: usize) -> usize {
        (0..self.dim()).map(|k| self.owned_before(site, k)).sum()
    }

    /// Graph distance between two sites; L1 with per-axis wraparound on a torus.
    pub fn graph_distance(&self, a: usize, b: usize) -> usize {
        let (ca, cb) = (self.coords(a), self.coords(b));
        ca.iter()
            .zip(&cb)
            .zip(&self.sides)
            .map(|((&x, &y), &l)| {
                let d = x.abs_diff(y);
                match self.boundary {
                    Boundary::Torus => d.min(l - d),
                    Boundary::Free => d,
                }
            })
            .sum()
    }

    /// Chebyshev (L-infinity) distance, with wraparound on a torus.
    pub fn linf_distance(&self, a: usize, b: usize) -> usize {
        let (ca, cb) = (self.coords(a), self.coords(b));
        ca.iter()
            .zip(&cb)
            .zip(&self.sides)
            .map(|((&x, &y), &l)| {
                let d = x.abs_diff(y);
                match self.boundary {
                    Boundary::Torus => d.min(l - d),
                    Boundary::Free => d,
                }
            })
            .max()
            .unwrap_or(0)
    }

    /// Euclidean distance; torus sides use the shorter arc per axis.
    pub fn euclid_distance(&self, a: usize, b: usize) -> f64 {
        let (ca, cb) = (self.coords(a), self.coords(b));
        ca.iter()
            .zip(&cb)
            .zip(&self.sides)
            .map(|((&x, &y), &l)| {
                let d = x.abs_diff(y);
                let d = match self.boundary {
                    Boundary::Torus => d.min(l - d),
                    Boundary::Free => d,
                };
                (d * d) as f64
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Site at the centre of the box.
    pub fn center(&self) -> usize {
        let c: Vec<usize> = self.sides.iter().map(|&l| l / 2).collect();
        self.site_index(&c)
    }

    /// Signed per-axis increment of the jump from site `a` to adjacent `b`,
    /// unwrapping torus edges to +-1. Requires sides >= 3 on a torus for the
    /// unwrap to be unambiguous.
    pub fn jump_increment(&self, a: usize, b: usize) -> Vec<i64> {
        let (ca, cb) = (self.coords(a), self.coords(b));
        ca.iter()
            .zip(&cb)
            .zip(&self.sides)
            .map(|((&x, &y), &l)| {
                if x == y {
                    0
                } else if (x + 1) % l == y {
                    1
                } else {
                    debug_assert_eq!((y + 1) % l, x);
                    -1
                }
            })
            .collect()
    }
}

/// Flattened adjacency table for hot loops: neighbour and incident edge per
/// slot, in the fixed axis-major (-, +) order.
#[derive(Clone, Debug)]
pub struct Adjacency {
    pub offsets: Vec<u32>,
    pub nbr: Vec<u32>,
    pub edge: Vec<u32>,
}

impl Adjacency {
    pub fn build(lattice: &LatticeSpec) -> Self {
        let n = lattice.n_sites();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut nbr = Vec::new();
        let mut edge = Vec::new();
        offsets.push(0u32);
        for x in 0..n {
            for (y, e) in lattice.neighbors(x) {
                nbr.push(y as u32);
                edge.push(e as u32);
            }
            offsets.push(nbr.len() as u32);
        }
        Adjacency { offsets, nbr, edge }
    }

    #[inline]
    pub fn degree(&self, site: usize) -> usize {
        (self.offsets[site + 1] - self.offsets[site]) as usize
    }

    #[inline]
    pub fn slots(&self, site: usize) -> std::ops::Range<usize> {
        self.offsets[site] as usize..self.offsets[site + 1] as usize
    }
}
