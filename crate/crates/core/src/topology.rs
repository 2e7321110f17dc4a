//! Undirected communication graphs and their Laplacian spectra.
//!
//! A [`Topology`] is always connected: every constructor checks connectivity
//! and computes the full symmetric eigendecomposition of `L = Deg - A` once.
//! Spectral data is kept in `f64` regardless of the scalar type the optimizer
//! runs on; Laplacian entries are small integers and convert exactly.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use petgraph::algo::connected_components;
use petgraph::graph::UnGraph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, ZodiacError};
use crate::scalar::Scalar;

/// Default number of whole-graph redraws before `erdos_renyi` gives up.
pub const DEFAULT_RETRY_CAP: usize = 1000;

/// Relative eigenvalue tolerance separating the zero eigenvalue from `λ₂`.
pub const EIG_REL_TOL: f64 = 1e-9;

/// Deterministic graph families used as fixtures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixtureKind {
    Path,
    Complete,
    Cycle,
    Star,
}

impl std::str::FromStr for FixtureKind {
    type Err = ZodiacError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "path" => Ok(FixtureKind::Path),
            "complete" => Ok(FixtureKind::Complete),
            "cycle" => Ok(FixtureKind::Cycle),
            "star" => Ok(FixtureKind::Star),
            other => Err(ZodiacError::InvalidArgument(format!(
                "unknown graph fixture '{other}'"
            ))),
        }
    }
}

/// Eigendecomposition of a graph Laplacian, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct Spectrum {
    /// Largest eigenvalue `ρ(L)`.
    pub rho: f64,
    /// Smallest eigenvalue above the tolerance, `ρ₂(L)`.
    pub rho2: f64,
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors, column `k` paired with `eigenvalues[k]`.
    pub eigenvectors: DMatrix<f64>,
}

/// Symmetric eigendecomposition of a Laplacian.
///
/// Fails with [`ZodiacError::Disconnected`] when more than one eigenvalue lies
/// below `1e-9 * ρ(L)`.
pub fn spectral(laplacian: &DMatrix<f64>) -> Result<Spectrum> {
    let n = laplacian.nrows();
    if n != laplacian.ncols() || n < 2 {
        return Err(ZodiacError::InvalidArgument(format!(
            "laplacian must be square with n >= 2, got {}x{}",
            laplacian.nrows(),
            laplacian.ncols()
        )));
    }
    let eig = SymmetricEigen::new(laplacian.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut eigenvectors = DMatrix::<f64>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
    }

    let rho = eigenvalues[n - 1];
    let tol = EIG_REL_TOL * rho.max(f64::MIN_POSITIVE);
    let small = eigenvalues.iter().filter(|&&l| l <= tol).count();
    if rho <= 0.0 || small > 1 {
        return Err(ZodiacError::Disconnected(format!(
            "{small} eigenvalues below tolerance {tol:e}"
        )));
    }
    let rho2 = eigenvalues[1];
    Ok(Spectrum {
        rho,
        rho2,
        eigenvalues,
        eigenvectors,
    })
}

/// A connected, undirected, unit-weight communication graph.
#[derive(Debug, Clone)]
pub struct Topology {
    n: usize,
    edges: Vec<(usize, usize)>,
    adjacency: DMatrix<f64>,
    laplacian: DMatrix<f64>,
    spectrum: Spectrum,
}

impl Topology {
    /// Builds a topology from an undirected edge list. Duplicate edges are
    /// collapsed; self-loops and out-of-range endpoints are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n < 2 {
            return Err(ZodiacError::InvalidArgument(format!(
                "topology needs n >= 2 agents, got {n}"
            )));
        }
        let mut adjacency = DMatrix::<f64>::zeros(n, n);
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(ZodiacError::InvalidArgument(format!(
                    "edge ({i}, {j}) out of range for n = {n}"
                )));
            }
            if i == j {
                return Err(ZodiacError::InvalidArgument(format!(
                    "self-loop at vertex {i}"
                )));
            }
            adjacency[(i, j)] = 1.0;
            adjacency[(j, i)] = 1.0;
        }
        let mut canonical = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if adjacency[(i, j)] != 0.0 {
                    canonical.push((i, j));
                }
            }
        }
        if !is_connected(n, &canonical) {
            return Err(ZodiacError::Disconnected(format!(
                "edge set on {n} vertices has more than one component"
            )));
        }
        let laplacian = laplacian_of(&adjacency);
        let spectrum = spectral(&laplacian)?;
        Ok(Self {
            n,
            edges: canonical,
            adjacency,
            laplacian,
            spectrum,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Canonical edge list, `i < j`, lexicographic.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn adjacency(&self) -> &DMatrix<f64> {
        &self.adjacency
    }

    pub fn laplacian(&self) -> &DMatrix<f64> {
        &self.laplacian
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn rho(&self) -> f64 {
        self.spectrum.rho
    }

    pub fn rho2(&self) -> f64 {
        self.spectrum.rho2
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.spectrum.eigenvalues
    }

    pub fn degree(&self, i: usize) -> f64 {
        self.laplacian[(i, i)]
    }

    /// Nonzero Laplacian entries of each row, in ascending column order
    /// (diagonal included), converted to the run's scalar type.
    pub fn laplacian_rows<T: Scalar>(&self) -> Vec<Vec<(usize, T)>> {
        (0..self.n)
            .map(|i| {
                (0..self.n)
                    .filter_map(|j| {
                        let l = self.laplacian[(i, j)];
                        (l != 0.0).then(|| (j, T::of(l)))
                    })
                    .collect()
            })
            .collect()
    }

    /// Edge list as text: one `i j weight` line per edge, 0-indexed.
    pub fn edge_list_text(&self) -> String {
        let mut out = String::new();
        for &(i, j) in &self.edges {
            let _ = writeln!(out, "{i} {j} {}", self.adjacency[(i, j)]);
        }
        out
    }

    pub fn write_edge_list(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.edge_list_text())?;
        Ok(())
    }
}

fn laplacian_of(adjacency: &DMatrix<f64>) -> DMatrix<f64> {
    let n = adjacency.nrows();
    let mut lap = -adjacency.clone();
    for i in 0..n {
        let deg: f64 = adjacency.row(i).iter().sum();
        lap[(i, i)] = deg;
    }
    lap
}

fn is_connected(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut g = UnGraph::<(), ()>::with_capacity(n, edges.len());
    for _ in 0..n {
        g.add_node(());
    }
    g.extend_with_edges(edges.iter().map(|&(i, j)| (i as u32, j as u32)));
    connected_components(&g) == 1
}

/// Deterministic unit-weight graph of the named family.
pub fn fixture_graph(kind: FixtureKind, n: usize) -> Result<Topology> {
    if n < 2 {
        return Err(ZodiacError::InvalidArgument(format!(
            "fixture graph needs n >= 2, got {n}"
        )));
    }
    let edges: Vec<(usize, usize)> = match kind {
        FixtureKind::Path => (0..n - 1).map(|i| (i, i + 1)).collect(),
        FixtureKind::Cycle => {
            let mut e: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
            if n > 2 {
                e.push((n - 1, 0));
            }
            e
        }
        FixtureKind::Complete => (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .collect(),
        FixtureKind::Star => (1..n).map(|j| (0, j)).collect(),
    };
    Topology::from_edges(n, &edges)
}

/// Erdős–Rényi `G(n, prob)` conditioned on connectivity, with the default
/// retry cap.
pub fn erdos_renyi(n: usize, prob: f64, seed: u64) -> Result<Topology> {
    erdos_renyi_with_cap(n, prob, seed, DEFAULT_RETRY_CAP)
}

/// Erdős–Rényi sampler. Disconnected draws are discarded and a fresh graph is
/// drawn from the same seeded stream, up to `retry_cap` draws in total.
pub fn erdos_renyi_with_cap(
    n: usize,
    prob: f64,
    seed: u64,
    retry_cap: usize,
) -> Result<Topology> {
    if n < 2 {
        return Err(ZodiacError::InvalidArgument(format!(
            "erdos_renyi needs n >= 2, got {n}"
        )));
    }
    if !(prob > 0.0 && prob <= 1.0) {
        return Err(ZodiacError::InvalidArgument(format!(
            "edge probability must lie in (0, 1], got {prob}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..retry_cap.max(1) {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.random_bool(prob) {
                    edges.push((i, j));
                }
            }
        }
        if is_connected(n, &edges) {
            return Topology::from_edges(n, &edges);
        }
    }
    Err(ZodiacError::Disconnected(format!(
        "no connected G({n}, {prob}) draw within {retry_cap} attempts"
    )))
}

/// Edge probability just above the connectivity threshold, `1.01 ln(n) / n`.
pub fn er_threshold_prob(n: usize) -> f64 {
    1.01 * (n as f64).ln() / n as f64
}

/// `Σᵢ ‖xᵢ − x̄‖²` over the rows of `x`.
pub fn consensus_projection_norm_sq<T: Scalar>(x: &[Vec<T>]) -> T {
    if x.is_empty() {
        return T::zero();
    }
    let mean = row_mean(x);
    x.iter()
        .map(|row| {
            row.iter()
                .zip(&mean)
                .map(|(&a, &m)| (a - m) * (a - m))
                .sum::<T>()
        })
        .sum()
}

/// Arithmetic mean of the rows of `x`.
pub fn row_mean<T: Scalar>(x: &[Vec<T>]) -> Vec<T> {
    let p = x.first().map_or(0, Vec::len);
    let inv_n = T::one() / T::of_usize(x.len());
    let mut mean = vec![T::zero(); p];
    for row in x {
        for (m, &v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m *= inv_n);
    mean
}
