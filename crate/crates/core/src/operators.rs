//! Pauli operators, interaction graphs and symmetry-constrained two-body
//! Hamiltonians.
//!
//! Sites are 0-based. The computational basis index of a product state
//! `|s_0 s_1 ... s_{N-1}>` has site 0 as its most significant bit.

use std::collections::BTreeSet;
use std::fmt;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QslError, Result};
use crate::{CMatrix, MAX_SITES};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Pauli direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn from_index(index: usize) -> Option<Axis> {
        Self::ALL.get(index).copied()
    }

    /// Action of the Pauli matrix on a single basis bit: `sigma |bit> = coeff |new_bit>`.
    #[inline]
    fn act(self, bit: usize) -> (usize, Complex64) {
        match self {
            Axis::X => (bit ^ 1, ONE),
            Axis::Y => (bit ^ 1, if bit == 0 { I } else { -I }),
            Axis::Z => (bit, if bit == 0 { ONE } else { -ONE }),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        };
        f.write_str(s)
    }
}

pub(crate) fn check_sites(n_sites: usize) -> Result<()> {
    if n_sites == 0 || n_sites > MAX_SITES {
        return Err(QslError::InvalidSiteCount {
            n_sites,
            max: MAX_SITES,
        });
    }
    Ok(())
}

#[inline]
pub(crate) fn bit_of(index: usize, site: usize, n_sites: usize) -> usize {
    (index >> (n_sites - 1 - site)) & 1
}

/// Dense Hermitian operator on `n_sites` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianMatrix {
    n_sites: usize,
    entries: CMatrix,
}

impl HamiltonianMatrix {
    /// Wraps a matrix after checking its dimension and Hermiticity.
    pub fn new(n_sites: usize, entries: CMatrix) -> Result<Self> {
        check_sites(n_sites)?;
        let dim = 1usize << n_sites;
        if entries.nrows() != dim || entries.ncols() != dim {
            return Err(QslError::DimensionMismatch {
                expected: dim,
                found: entries.nrows().max(entries.ncols()),
            });
        }
        let residual = hermiticity_residual(&entries);
        let scale = max_abs(&entries).max(1.0);
        if residual > 1e-12 * scale {
            return Err(QslError::NonHermitian { residual });
        }
        Ok(Self { n_sites, entries })
    }

    pub(crate) fn from_parts(n_sites: usize, entries: CMatrix) -> Self {
        debug_assert_eq!(entries.nrows(), 1 << n_sites);
        Self { n_sites, entries }
    }

    pub fn zeros(n_sites: usize) -> Result<Self> {
        check_sites(n_sites)?;
        let dim = 1 << n_sites;
        Ok(Self::from_parts(n_sites, CMatrix::zeros(dim, dim)))
    }

    pub fn identity(n_sites: usize) -> Result<Self> {
        check_sites(n_sites)?;
        let dim = 1 << n_sites;
        Ok(Self::from_parts(n_sites, CMatrix::identity(dim, dim)))
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_matrix(self) -> CMatrix {
        self.entries
    }

    /// `self * factor + shift * identity`.
    pub fn affine(&self, factor: f64, shift: f64) -> HamiltonianMatrix {
        let mut entries = self.entries.map(|z| z * factor);
        for k in 0..entries.nrows() {
            entries[(k, k)] += shift;
        }
        Self::from_parts(self.n_sites, entries)
    }

    /// Largest entrywise magnitude of `[self, other]`.
    pub fn commutator_norm(&self, other: &CMatrix) -> f64 {
        let c = &self.entries * other - other * &self.entries;
        max_abs(&c)
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.entries)
    }

    pub fn add(&self, other: &HamiltonianMatrix) -> Result<HamiltonianMatrix> {
        if self.n_sites != other.n_sites {
            return Err(QslError::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(Self::from_parts(self.n_sites, &self.entries + &other.entries))
    }
}

pub(crate) fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub(crate) fn hermiticity_residual(m: &CMatrix) -> f64 {
    let n = m.nrows();
    if m.ncols() != n {
        return f64::INFINITY;
    }
    let mut worst = 0.0_f64;
    for r in 0..n {
        for c in r..n {
            worst = worst.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    worst
}

/// Sparse form of a Pauli string: one nonzero `(row, coeff)` per column.
fn pauli_string_columns(n_sites: usize, factors: &[(usize, Axis)]) -> Vec<(usize, Complex64)> {
    let dim = 1usize << n_sites;
    (0..dim)
        .map(|col| {
            let mut row = col;
            let mut coeff = ONE;
            for &(site, axis) in factors {
                let shift = n_sites - 1 - site;
                let (bit, c) = axis.act((row >> shift) & 1);
                row = (row & !(1 << shift)) | (bit << shift);
                coeff *= c;
            }
            (row, coeff)
        })
        .collect()
}

fn validate_factors(n_sites: usize, factors: &[(usize, Axis)]) -> Result<()> {
    check_sites(n_sites)?;
    let mut seen = BTreeSet::new();
    for &(site, _) in factors {
        if site >= n_sites {
            return Err(QslError::SiteOutOfRange { site, n_sites });
        }
        if !seen.insert(site) {
            return Err(QslError::InvalidArgument(format!(
                "Pauli string acts twice on site {site}"
            )));
        }
    }
    Ok(())
}

/// Tensor product of Pauli matrices on distinct sites, identity elsewhere.
pub fn pauli_product(n_sites: usize, factors: &[(usize, Axis)]) -> Result<HamiltonianMatrix> {
    validate_factors(n_sites, factors)?;
    let dim = 1usize << n_sites;
    let mut m = CMatrix::zeros(dim, dim);
    for (col, (row, coeff)) in pauli_string_columns(n_sites, factors).into_iter().enumerate() {
        m[(row, col)] = coeff;
    }
    Ok(HamiltonianMatrix::from_parts(n_sites, m))
}

/// `I ⊗ ... ⊗ sigma_axis ⊗ ... ⊗ I` with the Pauli matrix at `site`.
pub fn pauli_embed(n_sites: usize, site: usize, axis: Axis) -> Result<HamiltonianMatrix> {
    pauli_product(n_sites, &[(site, axis)])
}

/// Permutation matrix exchanging the tensor factors of sites `i` and `j`.
pub fn swap_operator(n_sites: usize, i: usize, j: usize) -> Result<HamiltonianMatrix> {
    check_sites(n_sites)?;
    for site in [i, j] {
        if site >= n_sites {
            return Err(QslError::SiteOutOfRange { site, n_sites });
        }
    }
    if i == j {
        return Err(QslError::InvalidArgument("swap needs two distinct sites".into()));
    }
    let mut perm: Vec<usize> = (0..n_sites).collect();
    perm.swap(i, j);
    Ok(HamiltonianMatrix::from_parts(
        n_sites,
        site_permutation_matrix(n_sites, &perm)?,
    ))
}

pub(crate) fn validate_permutation(n_sites: usize, perm: &[usize]) -> Result<()> {
    if perm.len() != n_sites {
        return Err(QslError::InvalidPermutation(format!(
            "expected {n_sites} entries, got {}",
            perm.len()
        )));
    }
    let mut seen = vec![false; n_sites];
    for &p in perm {
        if p >= n_sites || seen[p] {
            return Err(QslError::InvalidPermutation(format!("{perm:?}")));
        }
        seen[p] = true;
    }
    Ok(())
}

/// Maps a basis index under the site permutation: the content of site `i`
/// moves to site `perm[i]`.
#[inline]
pub(crate) fn permute_index(index: usize, perm: &[usize]) -> usize {
    let n = perm.len();
    let mut out = 0;
    for (i, &p) in perm.iter().enumerate() {
        out |= bit_of(index, i, n) << (n - 1 - p);
    }
    out
}

/// Unitary representation of a site permutation (site `i` goes to `perm[i]`).
pub fn site_permutation_matrix(n_sites: usize, perm: &[usize]) -> Result<CMatrix> {
    check_sites(n_sites)?;
    validate_permutation(n_sites, perm)?;
    let dim = 1usize << n_sites;
    let mut m = CMatrix::zeros(dim, dim);
    for col in 0..dim {
        m[(permute_index(col, perm), col)] = ONE;
    }
    Ok(m)
}

/// `sum_i h_i sigma_i ⊗ sigma_i ⊗ sigma_i` on three qubits.
pub fn three_body_hamiltonian(h: [f64; 3]) -> HamiltonianMatrix {
    let mut m = CMatrix::zeros(8, 8);
    for axis in Axis::ALL {
        let coeff = h[axis.index()];
        if coeff == 0.0 {
            continue;
        }
        let factors = [(0, axis), (1, axis), (2, axis)];
        for (col, (row, c)) in pauli_string_columns(3, &factors).into_iter().enumerate() {
            m[(row, col)] += c * coeff;
        }
    }
    HamiltonianMatrix::from_parts(3, m)
}

/// Which qubit pairs interact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionGraph {
    n_sites: usize,
    edges: Vec<(usize, usize)>,
}

impl InteractionGraph {
    /// Builds a graph from unordered pairs; pairs are stored as `(lo, hi)` and sorted.
    pub fn new(n_sites: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        check_sites(n_sites)?;
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a == b || a >= n_sites || b >= n_sites {
                return Err(QslError::InvalidEdge(a, b));
            }
            let e = (a.min(b), a.max(b));
            if !set.insert(e) {
                return Err(QslError::DuplicateEdge(e.0, e.1));
            }
        }
        Ok(Self {
            n_sites,
            edges: set.into_iter().collect(),
        })
    }

    pub fn complete(n_sites: usize) -> Result<Self> {
        let edges = (0..n_sites).flat_map(|i| (i + 1..n_sites).map(move |j| (i, j)));
        Self::new(n_sites, edges)
    }

    /// Open nearest-neighbour chain `0-1-...-(N-1)`.
    pub fn chain(n_sites: usize) -> Result<Self> {
        Self::new(n_sites, (1..n_sites).map(|i| (i - 1, i)))
    }

    /// Sites on a ring coupled when their ring distance is at most `range`.
    pub fn ring(n_sites: usize, range: usize) -> Result<Self> {
        check_sites(n_sites)?;
        if range == 0 {
            return Err(QslError::InvalidArgument("interaction range must be >= 1".into()));
        }
        let mut edges = Vec::new();
        for i in 0..n_sites {
            for j in i + 1..n_sites {
                let d = (j - i).min(n_sites - (j - i));
                if d <= range {
                    edges.push((i, j));
                }
            }
        }
        Self::new(n_sites, edges)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.edges.binary_search(&(a.min(b), a.max(b))).is_ok()
    }

    pub fn is_complete(&self) -> bool {
        self.edges.len() == self.n_sites * (self.n_sites - 1) / 2
    }
}

/// Symmetry imposed on the couplings and fields.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SymmetryClass {
    /// Invariance under every site permutation; requires the complete graph.
    FullPermutation,
    /// One symmetric coupling matrix on every edge and one field on every
    /// site, on any graph.
    Isotropic,
    /// Invariance under the product of the listed disjoint transpositions.
    PairSwapProduct(Vec<(usize, usize)>),
    Unconstrained,
    /// `sum_i h_i sigma_i^{⊗3}` on three qubits; not a two-body model.
    ThreeBodyDiagonal,
}

impl fmt::Display for SymmetryClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymmetryClass::FullPermutation => f.write_str("full-permutation"),
            SymmetryClass::Isotropic => f.write_str("isotropic"),
            SymmetryClass::PairSwapProduct(swaps) => {
                f.write_str("pair-swap-product")?;
                for (a, b) in swaps {
                    write!(f, "({},{})", a + 1, b + 1)?;
                }
                Ok(())
            }
            SymmetryClass::Unconstrained => f.write_str("unconstrained"),
            SymmetryClass::ThreeBodyDiagonal => f.write_str("three-body-diagonal"),
        }
    }
}

impl SymmetryClass {
    /// Site permutations generating the symmetry group.
    pub fn generators(&self, n_sites: usize) -> Result<Vec<Vec<usize>>> {
        match self {
            SymmetryClass::FullPermutation => {
                let mut gens = Vec::new();
                for i in 0..n_sites {
                    for j in i + 1..n_sites {
                        let mut p: Vec<usize> = (0..n_sites).collect();
                        p.swap(i, j);
                        gens.push(p);
                    }
                }
                Ok(gens)
            }
            SymmetryClass::PairSwapProduct(swaps) => {
                Ok(vec![pair_swap_permutation(n_sites, swaps)?])
            }
            SymmetryClass::Isotropic
            | SymmetryClass::Unconstrained
            | SymmetryClass::ThreeBodyDiagonal => Ok(Vec::new()),
        }
    }
}

/// Permutation realizing a product of disjoint transpositions.
pub fn pair_swap_permutation(n_sites: usize, swaps: &[(usize, usize)]) -> Result<Vec<usize>> {
    let mut perm: Vec<usize> = (0..n_sites).collect();
    let mut used = vec![false; n_sites];
    for &(a, b) in swaps {
        if a >= n_sites || b >= n_sites || a == b || used[a] || used[b] {
            return Err(QslError::InvalidPermutation(format!(
                "transpositions {swaps:?} must be disjoint and within 0..{n_sites}"
            )));
        }
        used[a] = true;
        used[b] = true;
        perm.swap(a, b);
    }
    Ok(perm)
}

/// Optional tightening of the coupling parametrization.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrbitOptions {
    /// Force every coupling matrix to be symmetric, not only those whose
    /// orbit contains an edge reversal.
    pub symmetric_couplings: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeOrbit {
    /// Member edges as `(lo, hi)`; the first one is the representative.
    pub edges: Vec<(usize, usize)>,
    /// Per edge: whether the transported coupling matrix is the transpose
    /// of the representative's.
    pub transposed: Vec<bool>,
    /// Coupling matrix of this orbit must be symmetric.
    pub symmetric: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrbitDecomposition {
    pub edge_orbits: Vec<EdgeOrbit>,
    pub site_orbits: Vec<Vec<usize>>,
}

impl OrbitDecomposition {
    pub fn parameter_count(&self) -> usize {
        self.edge_orbits
            .iter()
            .map(|o| if o.symmetric { 6 } else { 9 })
            .sum::<usize>()
            + 3 * self.site_orbits.len()
    }
}

/// Orbits of edges and sites under the symmetry group.
pub fn orbit_decomposition(
    graph: &InteractionGraph,
    sym: &SymmetryClass,
) -> Result<OrbitDecomposition> {
    orbit_decomposition_with(graph, sym, OrbitOptions::default())
}

pub fn orbit_decomposition_with(
    graph: &InteractionGraph,
    sym: &SymmetryClass,
    options: OrbitOptions,
) -> Result<OrbitDecomposition> {
    let n = graph.n_sites();
    let mut decomposition = match sym {
        SymmetryClass::FullPermutation if !graph.is_complete() => {
            let missing = (0..n)
                .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                .find(|&(i, j)| !graph.contains(i, j))
                .unwrap_or((0, 0));
            return Err(QslError::SymmetryBreaksGraph(missing.0, missing.1));
        }
        SymmetryClass::FullPermutation | SymmetryClass::Isotropic => single_orbit(graph),
        SymmetryClass::ThreeBodyDiagonal => {
            if n != 3 {
                return Err(QslError::SymmetryNotApplicable(format!(
                    "three-body-diagonal needs 3 sites, got {n}"
                )));
            }
            OrbitDecomposition {
                edge_orbits: Vec::new(),
                site_orbits: Vec::new(),
            }
        }
        SymmetryClass::PairSwapProduct(swaps) => {
            let g = pair_swap_permutation(n, swaps)?;
            let identity: Vec<usize> = (0..n).collect();
            group_orbits(graph, &[identity, g])?
        }
        SymmetryClass::Unconstrained => {
            let identity: Vec<usize> = (0..n).collect();
            group_orbits(graph, &[identity])?
        }
    };
    if options.symmetric_couplings {
        for orbit in &mut decomposition.edge_orbits {
            orbit.symmetric = true;
        }
    }
    Ok(decomposition)
}

fn single_orbit(graph: &InteractionGraph) -> OrbitDecomposition {
    let edge_orbits = if graph.edges().is_empty() {
        Vec::new()
    } else {
        vec![EdgeOrbit {
            edges: graph.edges().to_vec(),
            transposed: vec![false; graph.edges().len()],
            symmetric: true,
        }]
    };
    OrbitDecomposition {
        edge_orbits,
        site_orbits: vec![(0..graph.n_sites()).collect()],
    }
}

/// Brute-force orbits for a group given by its full element list.
fn group_orbits(graph: &InteractionGraph, group: &[Vec<usize>]) -> Result<OrbitDecomposition> {
    let n = graph.n_sites();
    for g in group {
        for &(a, b) in graph.edges() {
            if !graph.contains(g[a], g[b]) {
                return Err(QslError::SymmetryBreaksGraph(a, b));
            }
        }
    }

    let mut assigned = vec![false; graph.edges().len()];
    let mut edge_orbits = Vec::new();
    for (k, &rep) in graph.edges().iter().enumerate() {
        if assigned[k] {
            continue;
        }
        let mut edges = Vec::new();
        let mut transposed = Vec::new();
        let mut symmetric = false;
        for g in group {
            let (a, b) = (g[rep.0], g[rep.1]);
            let image = (a.min(b), a.max(b));
            if image == rep && a == rep.1 {
                symmetric = true;
            }
            if let Some(pos) = edges.iter().position(|&e| e == image) {
                if transposed[pos] != (a > b) {
                    symmetric = true;
                }
            } else {
                edges.push(image);
                transposed.push(a > b);
            }
        }
        for e in &edges {
            let idx = graph.edges().binary_search(e).expect("edge preserved");
            assigned[idx] = true;
        }
        edge_orbits.push(EdgeOrbit {
            edges,
            transposed,
            symmetric,
        });
    }

    let mut site_assigned = vec![false; n];
    let mut site_orbits = Vec::new();
    for s in 0..n {
        if site_assigned[s] {
            continue;
        }
        let mut orbit: Vec<usize> = group.iter().map(|g| g[s]).collect();
        orbit.sort_unstable();
        orbit.dedup();
        for &t in &orbit {
            site_assigned[t] = true;
        }
        site_orbits.push(orbit);
    }
    Ok(OrbitDecomposition {
        edge_orbits,
        site_orbits,
    })
}

/// Number of free real parameters of the model.
pub fn parameter_count(graph: &InteractionGraph, sym: &SymmetryClass) -> Result<usize> {
    parameter_count_with(graph, sym, OrbitOptions::default())
}

pub fn parameter_count_with(
    graph: &InteractionGraph,
    sym: &SymmetryClass,
    options: OrbitOptions,
) -> Result<usize> {
    if *sym == SymmetryClass::ThreeBodyDiagonal {
        return Ok(3);
    }
    Ok(orbit_decomposition_with(graph, sym, options)?.parameter_count())
}

/// Structured Hamiltonian parameters, one entry per orbit.
#[derive(Debug, Clone, PartialEq)]
pub enum ParameterVector {
    TwoBody {
        /// `h_{mu nu}` per edge orbit, in the representative edge's orientation.
        couplings: Vec<Matrix3<f64>>,
        /// `b_mu` per site orbit.
        fields: Vec<Vector3<f64>>,
    },
    ThreeBody(Vector3<f64>),
}

impl ParameterVector {
    pub fn scaled(&self, factor: f64) -> ParameterVector {
        match self {
            ParameterVector::TwoBody { couplings, fields } => ParameterVector::TwoBody {
                couplings: couplings.iter().map(|m| m * factor).collect(),
                fields: fields.iter().map(|v| v * factor).collect(),
            },
            ParameterVector::ThreeBody(v) => ParameterVector::ThreeBody(v * factor),
        }
    }
}

const SYMMETRIC_SLOTS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

/// A compiled parametrization: maps flat parameter vectors to Hamiltonians.
///
/// Each free parameter multiplies a fixed sum of Pauli strings; these are
/// precomputed as sparse `(flat index, coefficient)` lists so assembly is a
/// single scatter pass.
#[derive(Debug, Clone)]
pub struct HamiltonianModel {
    graph: InteractionGraph,
    symmetry: SymmetryClass,
    orbits: OrbitDecomposition,
    terms: Vec<Vec<(usize, Complex64)>>,
    labels: Vec<String>,
}

impl HamiltonianModel {
    pub fn new(graph: InteractionGraph, symmetry: SymmetryClass) -> Result<Self> {
        Self::with_options(graph, symmetry, OrbitOptions::default())
    }

    pub fn with_options(
        graph: InteractionGraph,
        symmetry: SymmetryClass,
        options: OrbitOptions,
    ) -> Result<Self> {
        let orbits = orbit_decomposition_with(&graph, &symmetry, options)?;
        let n = graph.n_sites();
        let dim = 1usize << n;
        let mut terms = Vec::new();
        let mut labels = Vec::new();

        let push_strings = |strings: &[(f64, Vec<(usize, Axis)>)]| {
            let mut acc = vec![ZERO; dim * dim];
            for (weight, factors) in strings {
                for (col, (row, c)) in pauli_string_columns(n, factors).into_iter().enumerate() {
                    // column-major flat index, matching nalgebra storage
                    acc[col * dim + row] += c * *weight;
                }
            }
            acc.into_iter()
                .enumerate()
                .filter(|(_, z)| z.norm() > 0.0)
                .collect::<Vec<_>>()
        };

        if symmetry == SymmetryClass::ThreeBodyDiagonal {
            for axis in Axis::ALL {
                terms.push(push_strings(&[(1.0, vec![(0, axis), (1, axis), (2, axis)])]));
                labels.push(format!("t_{axis}{axis}{axis}"));
            }
        } else {
            for (o, orbit) in orbits.edge_orbits.iter().enumerate() {
                let slots: Vec<(usize, usize)> = if orbit.symmetric {
                    SYMMETRIC_SLOTS.to_vec()
                } else {
                    (0..3).flat_map(|m| (0..3).map(move |k| (m, k))).collect()
                };
                for (mu, nu) in slots {
                    let mut strings = Vec::new();
                    for (&(lo, hi), &tr) in orbit.edges.iter().zip(&orbit.transposed) {
                        // entry (mu, nu) of the orbit matrix lands at (nu, mu) on transposed edges
                        let (a, b) = if tr { (nu, mu) } else { (mu, nu) };
                        let (ax, bx) = (Axis::ALL[a], Axis::ALL[b]);
                        strings.push((1.0, vec![(lo, ax), (hi, bx)]));
                        if orbit.symmetric && mu != nu {
                            strings.push((1.0, vec![(lo, bx), (hi, ax)]));
                        }
                    }
                    terms.push(push_strings(&strings));
                    labels.push(format!("h{o}_{}{}", Axis::ALL[mu], Axis::ALL[nu]));
                }
            }
            for (o, orbit) in orbits.site_orbits.iter().enumerate() {
                for axis in Axis::ALL {
                    let strings: Vec<_> = orbit.iter().map(|&s| (1.0, vec![(s, axis)])).collect();
                    terms.push(push_strings(&strings));
                    labels.push(format!("b{o}_{axis}"));
                }
            }
        }
        Ok(Self {
            graph,
            symmetry,
            orbits,
            terms,
            labels,
        })
    }

    pub fn graph(&self) -> &InteractionGraph {
        &self.graph
    }

    pub fn symmetry(&self) -> &SymmetryClass {
        &self.symmetry
    }

    pub fn orbits(&self) -> &OrbitDecomposition {
        &self.orbits
    }

    pub fn n_sites(&self) -> usize {
        self.graph.n_sites()
    }

    pub fn parameter_count(&self) -> usize {
        self.terms.len()
    }

    /// Column names for flat parameter vectors, e.g. `h0_xz`, `b0_y`.
    pub fn parameter_labels(&self) -> &[String] {
        &self.labels
    }

    fn check_len(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.terms.len() {
            return Err(QslError::DimensionMismatch {
                expected: self.terms.len(),
                found: params.len(),
            });
        }
        Ok(())
    }

    /// Writes `H(params)` into `out`, which must be `2^N x 2^N`.
    pub fn assemble_into(&self, params: &[f64], out: &mut CMatrix) -> Result<()> {
        self.check_len(params)?;
        out.fill(ZERO);
        let data = out.as_mut_slice();
        for (p, term) in params.iter().zip(&self.terms) {
            if *p == 0.0 {
                continue;
            }
            for &(idx, c) in term {
                data[idx] += c * *p;
            }
        }
        Ok(())
    }

    pub fn assemble_flat(&self, params: &[f64]) -> Result<HamiltonianMatrix> {
        let dim = 1usize << self.n_sites();
        let mut m = CMatrix::zeros(dim, dim);
        self.assemble_into(params, &mut m)?;
        Ok(HamiltonianMatrix::from_parts(self.n_sites(), m))
    }

    pub fn assemble(&self, params: &ParameterVector) -> Result<HamiltonianMatrix> {
        self.assemble_flat(&self.flatten(params)?)
    }

    /// Flat layout: per edge orbit 6 (symmetric: xx xy xz yy yz zz) or 9
    /// (row-major) entries, then `x y z` per site orbit.
    pub fn flatten(&self, params: &ParameterVector) -> Result<Vec<f64>> {
        match (params, &self.symmetry) {
            (ParameterVector::ThreeBody(v), SymmetryClass::ThreeBodyDiagonal) => {
                Ok(v.iter().copied().collect())
            }
            (ParameterVector::ThreeBody(_), _) | (_, SymmetryClass::ThreeBodyDiagonal) => Err(
                QslError::SymmetryNotApplicable(format!("parameters do not fit {}", self.symmetry)),
            ),
            (ParameterVector::TwoBody { couplings, fields }, _) => {
                if couplings.len() != self.orbits.edge_orbits.len() {
                    return Err(QslError::DimensionMismatch {
                        expected: self.orbits.edge_orbits.len(),
                        found: couplings.len(),
                    });
                }
                if fields.len() != self.orbits.site_orbits.len() {
                    return Err(QslError::DimensionMismatch {
                        expected: self.orbits.site_orbits.len(),
                        found: fields.len(),
                    });
                }
                let mut flat = Vec::with_capacity(self.terms.len());
                for (o, (orbit, h)) in self.orbits.edge_orbits.iter().zip(couplings).enumerate() {
                    if orbit.symmetric {
                        let scale = h.camax().max(1.0);
                        if (h - h.transpose()).camax() > 1e-12 * scale {
                            return Err(QslError::NonSymmetricCoupling { orbit: o });
                        }
                        flat.extend(SYMMETRIC_SLOTS.iter().map(|&(m, k)| h[(m, k)]));
                    } else {
                        for m in 0..3 {
                            for k in 0..3 {
                                flat.push(h[(m, k)]);
                            }
                        }
                    }
                }
                for b in fields {
                    flat.extend(b.iter().copied());
                }
                Ok(flat)
            }
        }
    }

    pub fn unflatten(&self, flat: &[f64]) -> Result<ParameterVector> {
        self.check_len(flat)?;
        if self.symmetry == SymmetryClass::ThreeBodyDiagonal {
            return Ok(ParameterVector::ThreeBody(Vector3::new(flat[0], flat[1], flat[2])));
        }
        let mut it = flat.iter().copied();
        let mut couplings = Vec::new();
        for orbit in &self.orbits.edge_orbits {
            let mut h = Matrix3::zeros();
            if orbit.symmetric {
                for &(m, k) in &SYMMETRIC_SLOTS {
                    let v = it.next().unwrap_or_default();
                    h[(m, k)] = v;
                    h[(k, m)] = v;
                }
            } else {
                for m in 0..3 {
                    for k in 0..3 {
                        h[(m, k)] = it.next().unwrap_or_default();
                    }
                }
            }
            couplings.push(h);
        }
        let fields = self
            .orbits
            .site_orbits
            .iter()
            .map(|_| {
                let x = it.next().unwrap_or_default();
                let y = it.next().unwrap_or_default();
                let z = it.next().unwrap_or_default();
                Vector3::new(x, y, z)
            })
            .collect();
        Ok(ParameterVector::TwoBody { couplings, fields })
    }

    /// Orbit-uniform parameters from a single coupling matrix and field.
    pub fn uniform(&self, coupling: Matrix3<f64>, field: Vector3<f64>) -> ParameterVector {
        ParameterVector::TwoBody {
            couplings: vec![coupling; self.orbits.edge_orbits.len()],
            fields: vec![field; self.orbits.site_orbits.len()],
        }
    }
}

/// One-shot assembly: compiles the model and evaluates it.
pub fn assemble(
    params: &ParameterVector,
    graph: &InteractionGraph,
    sym: &SymmetryClass,
) -> Result<HamiltonianMatrix> {
    HamiltonianModel::new(graph.clone(), sym.clone())?.assemble(params)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn single_site_pauli_z() {
        let z = pauli_embed(1, 0, Axis::Z).unwrap();
        assert_eq!(z.matrix()[(0, 0)], c(1.0));
        assert_eq!(z.matrix()[(1, 1)], c(-1.0));
        assert_eq!(z.matrix()[(0, 1)], c(0.0));
    }

    #[test]
    fn embedded_x_on_second_site() {
        let x = pauli_embed(2, 1, Axis::X).unwrap();
        // <00| X_1 |01> = 1
        assert_eq!(x.matrix()[(0, 1)], c(1.0));
        assert_eq!(x.matrix()[(2, 3)], c(1.0));
        assert_eq!(x.matrix()[(0, 2)], c(0.0));
    }

    #[test]
    fn y_is_an_involution() {
        let y = pauli_embed(3, 0, Axis::Y).unwrap();
        let sq = y.matrix() * y.matrix();
        assert!((sq - CMatrix::identity(8, 8)).camax() < 1e-15);
        assert_eq!(y.matrix().trace(), c(0.0));
    }

    #[test]
    fn pauli_site_out_of_range() {
        assert!(matches!(
            pauli_embed(2, 2, Axis::X),
            Err(QslError::SiteOutOfRange { site: 2, n_sites: 2 })
        ));
    }

    #[test]
    fn pauli_algebra() {
        let n = 3;
        for s in 0..n {
            for t in 0..n {
                for a in Axis::ALL {
                    for b in Axis::ALL {
                        let p = pauli_embed(n, s, a).unwrap().into_matrix();
                        let q = pauli_embed(n, t, b).unwrap().into_matrix();
                        let comm = &p * &q - &q * &p;
                        let anti = &p * &q + &q * &p;
                        if s != t || a == b {
                            assert_eq!(comm.camax(), 0.0);
                        } else {
                            assert_eq!(anti.camax(), 0.0);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn swaps_act_on_basis_states() {
        let p = swap_operator(2, 0, 1).unwrap();
        // |01> is index 1, |10> index 2
        assert_eq!(p.matrix()[(2, 1)], c(1.0));
        let p = swap_operator(3, 0, 2).unwrap();
        assert_eq!(p.matrix()[(4, 1)], c(1.0));
        let sq = p.matrix() * p.matrix();
        assert_eq!((sq - CMatrix::identity(8, 8)).camax(), 0.0);
        assert!(swap_operator(3, 0, 3).is_err());
        assert!(swap_operator(3, 1, 1).is_err());
    }

    #[test]
    fn graphs() {
        let k4 = InteractionGraph::complete(4).unwrap();
        assert_eq!(k4.edges().len(), 6);
        assert!(k4.is_complete());
        let chain = InteractionGraph::chain(3).unwrap();
        assert_eq!(chain.edges(), &[(0, 1), (1, 2)]);
        let ring = InteractionGraph::ring(5, 1).unwrap();
        assert_eq!(ring.edges(), &[(0, 1), (0, 4), (1, 2), (2, 3), (3, 4)]);
        assert!(InteractionGraph::ring(5, 2).unwrap().is_complete());
        assert!(matches!(
            InteractionGraph::new(3, [(0, 1), (1, 0)]),
            Err(QslError::DuplicateEdge(0, 1))
        ));
        assert!(InteractionGraph::new(3, [(1, 1)]).is_err());
        assert!(InteractionGraph::new(3, [(0, 3)]).is_err());
    }

    #[test]
    fn full_permutation_orbits() {
        let k3 = InteractionGraph::complete(3).unwrap();
        let d = orbit_decomposition(&k3, &SymmetryClass::FullPermutation).unwrap();
        assert_eq!(d.edge_orbits.len(), 1);
        assert_eq!(d.site_orbits.len(), 1);
        assert_eq!(d.parameter_count(), 9);
        for n in 2..=7 {
            let g = InteractionGraph::complete(n).unwrap();
            assert_eq!(parameter_count(&g, &SymmetryClass::FullPermutation).unwrap(), 9);
        }
        let chain = InteractionGraph::chain(3).unwrap();
        assert!(matches!(
            orbit_decomposition(&chain, &SymmetryClass::FullPermutation),
            Err(QslError::SymmetryBreaksGraph(0, 2))
        ));
    }

    #[test]
    fn unconstrained_orbits() {
        let k3 = InteractionGraph::complete(3).unwrap();
        let d = orbit_decomposition(&k3, &SymmetryClass::Unconstrained).unwrap();
        assert_eq!(d.edge_orbits.len(), 3);
        assert_eq!(d.site_orbits.len(), 3);
        assert_eq!(d.parameter_count(), 3 * 9 + 9);
    }

    #[test]
    fn three_body_count() {
        let k3 = InteractionGraph::complete(3).unwrap();
        assert_eq!(parameter_count(&k3, &SymmetryClass::ThreeBodyDiagonal).unwrap(), 3);
    }

    #[test]
    fn pair_swap_rejects_overlapping_transpositions() {
        let k5 = InteractionGraph::complete(5).unwrap();
        let sym = SymmetryClass::PairSwapProduct(vec![(1, 3), (3, 4)]);
        assert!(orbit_decomposition(&k5, &sym).is_err());
        let chain = InteractionGraph::chain(4).unwrap();
        let sym = SymmetryClass::PairSwapProduct(vec![(0, 2)]);
        assert!(matches!(
            orbit_decomposition(&chain, &sym),
            Err(QslError::SymmetryBreaksGraph(..))
        ));
    }

    #[test]
    fn zero_parameters_give_zero_matrix() {
        let model =
            HamiltonianModel::new(InteractionGraph::complete(3).unwrap(), SymmetryClass::FullPermutation)
                .unwrap();
        let h = model.assemble_flat(&vec![0.0; 9]).unwrap();
        assert_eq!(h.max_abs(), 0.0);
    }

    #[test]
    fn xz_cross_coupling_expands_directly() {
        let k3 = InteractionGraph::complete(3).unwrap();
        let model = HamiltonianModel::new(k3.clone(), SymmetryClass::FullPermutation).unwrap();
        let mut h = Matrix3::zeros();
        h[(0, 2)] = 1.0;
        h[(2, 0)] = 1.0;
        let params = model.uniform(h, Vector3::zeros());
        let got = assemble(&params, &k3, &SymmetryClass::FullPermutation).unwrap();

        let mut expected = CMatrix::zeros(8, 8);
        for i in 0..3 {
            for j in i + 1..3 {
                expected += pauli_product(3, &[(i, Axis::X), (j, Axis::Z)]).unwrap().into_matrix();
                expected += pauli_product(3, &[(i, Axis::Z), (j, Axis::X)]).unwrap().into_matrix();
            }
        }
        assert!((got.matrix() - expected).camax() < 1e-15);
    }

    #[test]
    fn symmetric_flag_is_enforced() {
        let k3 = InteractionGraph::complete(3).unwrap();
        let model = HamiltonianModel::new(k3, SymmetryClass::FullPermutation).unwrap();
        let mut h = Matrix3::zeros();
        h[(0, 1)] = 1.0;
        let params = model.uniform(h, Vector3::zeros());
        assert!(matches!(
            model.assemble(&params),
            Err(QslError::NonSymmetricCoupling { orbit: 0 })
        ));
        let wrong = ParameterVector::TwoBody {
            couplings: vec![],
            fields: vec![Vector3::zeros()],
        };
        assert!(matches!(model.assemble(&wrong), Err(QslError::DimensionMismatch { .. })));
        assert!(model.assemble_flat(&[0.0; 4]).is_err());
    }

    #[test]
    fn flatten_round_trip() {
        let k5 = InteractionGraph::complete(5).unwrap();
        let model = HamiltonianModel::new(
            k5,
            SymmetryClass::PairSwapProduct(vec![(1, 3), (2, 4)]),
        )
        .unwrap();
        let flat: Vec<f64> = (0..model.parameter_count()).map(|k| k as f64 * 0.1 - 2.0).collect();
        let structured = model.unflatten(&flat).unwrap();
        assert_eq!(model.flatten(&structured).unwrap(), flat);
        assert_eq!(model.parameter_labels().len(), flat.len());
    }

    #[test]
    fn three_body_sxxx() {
        let h = three_body_hamiltonian([1.0, 0.0, 0.0]);
        let direct = pauli_product(3, &[(0, Axis::X), (1, Axis::X), (2, Axis::X)]).unwrap();
        assert_eq!(h, direct);
    }

    #[test]
    fn hermitian_check_rejects_asymmetric_input() {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 1)] = c(1.0);
        assert!(matches!(
            HamiltonianMatrix::new(1, m),
            Err(QslError::NonHermitian { .. })
        ));
        assert!(HamiltonianMatrix::new(2, CMatrix::zeros(2, 2)).is_err());
    }
}
