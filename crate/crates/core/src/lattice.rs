//! The k-dimensional lattice base graph and node placements on it.
//!
//! The base graph is a finite square lattice of a given side length in each
//! of `k` dimensions, metered by the L1 (Manhattan) distance. A
//! [`Configuration`] is an injective assignment of overlay nodes to lattice
//! positions; the swap chain in [`crate::embedding`] permutes one, and the
//! router in [`crate::routing`] steers by the distances it induces.

use std::collections::HashSet;
use std::fmt;
use std::io::{self, BufRead, Write};

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::overlay::NodeId;

#[derive(Debug, Error, PartialEq)]
pub enum LatticeError {
    #[error("lattice dimension must be at least 1")]
    ZeroDimension,
    #[error("lattice side must be at least 2, got {0}")]
    SideTooSmall(u32),
    #[error("lattice with side {side} and dimension {dimension} exceeds the supported site count")]
    TooManySites { side: u32, dimension: u32 },
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("position {0} lies outside the lattice")]
    OutOfBounds(LatticePosition),
    #[error("positions are not injective: {0} is used twice")]
    DuplicatePosition(LatticePosition),
    #[error("placement has {got} positions but {expected} were expected")]
    PositionCount { expected: usize, got: usize },
    #[error("node {0} is out of range")]
    NodeOutOfRange(NodeId),
}

/// A point of the base lattice, one coordinate per dimension.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LatticePosition {
    coords: Vec<u32>,
}

impl LatticePosition {
    pub fn new(coords: Vec<u32>) -> Self {
        Self { coords }
    }

    pub fn coords(&self) -> &[u32] {
        &self.coords
    }

    pub fn dimension(&self) -> usize {
        self.coords.len()
    }
}

impl fmt::Display for LatticePosition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// L1 distance between two positions of equal dimension.
pub fn l1_distance(a: &LatticePosition, b: &LatticePosition) -> Result<u64, LatticeError> {
    if a.dimension() != b.dimension() {
        return Err(LatticeError::DimensionMismatch(
            a.dimension(),
            b.dimension(),
        ));
    }
    Ok(a.coords
        .iter()
        .zip(&b.coords)
        .map(|(&x, &y)| u64::from(x.abs_diff(y)))
        .sum())
}

/// The finite square lattice `side^dimension` with the L1 metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BaseGraph {
    dimension: u32,
    side: u32,
    site_count: u64,
}

impl BaseGraph {
    pub fn new(dimension: u32, side: u32) -> Result<Self, LatticeError> {
        if dimension == 0 {
            return Err(LatticeError::ZeroDimension);
        }
        if side < 2 {
            return Err(LatticeError::SideTooSmall(side));
        }
        let mut site_count: u64 = 1;
        for _ in 0..dimension {
            site_count = site_count
                .checked_mul(u64::from(side))
                .filter(|&n| n <= 1 << 40)
                .ok_or(LatticeError::TooManySites { side, dimension })?;
        }
        Ok(Self {
            dimension,
            side,
            site_count,
        })
    }

    pub fn dimension(&self) -> u32 {
        self.dimension
    }

    pub fn side(&self) -> u32 {
        self.side
    }

    pub fn site_count(&self) -> u64 {
        self.site_count
    }

    pub fn contains(&self, pos: &LatticePosition) -> bool {
        pos.dimension() == self.dimension as usize && pos.coords.iter().all(|&c| c < self.side)
    }

    /// Row-major site index: the first coordinate varies slowest.
    pub fn site_index(&self, pos: &LatticePosition) -> Result<u64, LatticeError> {
        if !self.contains(pos) {
            return Err(LatticeError::OutOfBounds(pos.clone()));
        }
        let mut idx = 0u64;
        for &c in &pos.coords {
            idx = idx * u64::from(self.side) + u64::from(c);
        }
        Ok(idx)
    }

    pub fn site_position(&self, mut site: u64) -> Result<LatticePosition, LatticeError> {
        if site >= self.site_count {
            return Err(LatticeError::OutOfBounds(LatticePosition::new(vec![])));
        }
        let mut coords = vec![0u32; self.dimension as usize];
        for slot in coords.iter_mut().rev() {
            *slot = (site % u64::from(self.side)) as u32;
            site /= u64::from(self.side);
        }
        Ok(LatticePosition::new(coords))
    }

    /// The first `count` sites in row-major order, the planted layout used by
    /// the overlay generator.
    pub fn prefix_sites(&self, count: u64) -> Result<Vec<LatticePosition>, LatticeError> {
        if count > self.site_count {
            return Err(LatticeError::PositionCount {
                expected: self.site_count as usize,
                got: count as usize,
            });
        }
        (0..count).map(|s| self.site_position(s)).collect()
    }
}

/// All signed offsets at exact L1 distance `distance` in `dimension` axes.
///
/// Deterministic order; callers rely on it for reproducible generation.
pub(crate) fn ring_offsets(dimension: u32, distance: u64) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let mut prefix = Vec::with_capacity(dimension as usize);
    fill_ring(dimension as usize, distance as i64, &mut prefix, &mut out);
    out
}

fn fill_ring(dims_left: usize, remaining: i64, prefix: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
    if dims_left == 1 {
        if remaining == 0 {
            prefix.push(0);
            out.push(prefix.clone());
            prefix.pop();
        } else {
            for v in [-remaining, remaining] {
                prefix.push(v);
                out.push(prefix.clone());
                prefix.pop();
            }
        }
        return;
    }
    for mag in 0..=remaining {
        let choices: &[i64] = if mag == 0 { &[0] } else { &[-mag, mag] };
        for &v in choices {
            prefix.push(v);
            fill_ring(dims_left - 1, remaining - mag, prefix, out);
            prefix.pop();
        }
    }
}

/// An injective, total assignment of overlay nodes to lattice positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    graph: BaseGraph,
    positions: Vec<LatticePosition>,
}

impl Configuration {
    pub fn new(graph: BaseGraph, positions: Vec<LatticePosition>) -> Result<Self, LatticeError> {
        let mut seen = HashSet::with_capacity(positions.len());
        for pos in &positions {
            if !graph.contains(pos) {
                return Err(LatticeError::OutOfBounds(pos.clone()));
            }
            if !seen.insert(graph.site_index(pos)?) {
                return Err(LatticeError::DuplicatePosition(pos.clone()));
            }
        }
        Ok(Self { graph, positions })
    }

    /// The planted layout: node `i` at row-major site `i`.
    pub fn planted(graph: BaseGraph, node_count: u32) -> Result<Self, LatticeError> {
        let positions = graph.prefix_sites(u64::from(node_count))?;
        Ok(Self { graph, positions })
    }

    /// A uniformly random bijection of the nodes onto `occupied`.
    pub fn random<R: Rng>(
        graph: BaseGraph,
        occupied: &[LatticePosition],
        rng: &mut R,
    ) -> Result<Self, LatticeError> {
        let mut positions = occupied.to_vec();
        positions.shuffle(rng);
        Self::new(graph, positions)
    }

    pub fn graph(&self) -> &BaseGraph {
        &self.graph
    }

    pub fn node_count(&self) -> u32 {
        self.positions.len() as u32
    }

    pub fn position(&self, node: NodeId) -> Result<&LatticePosition, LatticeError> {
        self.positions
            .get(node.index())
            .ok_or(LatticeError::NodeOutOfRange(node))
    }

    pub fn positions(&self) -> &[LatticePosition] {
        &self.positions
    }

    /// Exchanges the positions of two nodes. Injectivity is preserved by
    /// construction: a swap permutes the occupied sites.
    pub fn swap(&mut self, x: NodeId, y: NodeId) -> Result<(), LatticeError> {
        let n = self.positions.len();
        if x.index() >= n {
            return Err(LatticeError::NodeOutOfRange(x));
        }
        if y.index() >= n {
            return Err(LatticeError::NodeOutOfRange(y));
        }
        self.positions.swap(x.index(), y.index());
        Ok(())
    }

    pub fn distance_between(&self, a: NodeId, b: NodeId) -> Result<u64, LatticeError> {
        l1_distance(self.position(a)?, self.position(b)?)
    }
}

#[derive(Debug, Error)]
pub enum PlacementReadError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Invalid(#[from] LatticeError),
}

/// Writes `place <node> <c_0> ... <c_{k-1}>` lines ordered by node id.
pub fn write_placement<W: Write>(config: &Configuration, mut w: W) -> io::Result<()> {
    for (i, pos) in config.positions().iter().enumerate() {
        write!(w, "place {i}")?;
        for c in pos.coords() {
            write!(w, " {c}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Reads a placement for `graph`, requiring node ids 0..n in ascending order.
pub fn read_placement<R: BufRead>(
    graph: BaseGraph,
    reader: R,
) -> Result<Configuration, PlacementReadError> {
    let mut positions = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut parts = trimmed.split_whitespace();
        let tag = parts.next().unwrap();
        if tag != "place" {
            return Err(PlacementReadError::Parse {
                line: lineno,
                message: format!("expected `place`, got `{tag}`"),
            });
        }
        let node: usize = parts
            .next()
            .ok_or_else(|| PlacementReadError::Parse {
                line: lineno,
                message: "missing node id".into(),
            })?
            .parse()
            .map_err(|e| PlacementReadError::Parse {
                line: lineno,
                message: format!("bad node id: {e}"),
            })?;
        if node != positions.len() {
            return Err(PlacementReadError::Parse {
                line: lineno,
                message: format!("expected node {} next, got {node}", positions.len()),
            });
        }
        let coords: Vec<u32> = parts
            .map(|p| {
                p.parse().map_err(|e| PlacementReadError::Parse {
                    line: lineno,
                    message: format!("bad coordinate: {e}"),
                })
            })
            .collect::<Result<_, _>>()?;
        if coords.len() != graph.dimension() as usize {
            return Err(PlacementReadError::Parse {
                line: lineno,
                message: format!(
                    "expected {} coordinates, got {}",
                    graph.dimension(),
                    coords.len()
                ),
            });
        }
        positions.push(LatticePosition::new(coords));
    }
    Ok(Configuration::new(graph, positions)?)
}
