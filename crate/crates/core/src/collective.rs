//! Collective-spin form of permutation-symmetric two-body Hamiltonians.
//!
//! On the complete graph with identical symmetric couplings `h` and fields
//! `b`, the Hamiltonian only depends on `S_mu = sum_i sigma_mu^(i)`:
//!
//! `H = 1/2 sum_{mu nu} h_{mu nu} S_mu S_nu - (N/2) tr(h) + sum_mu b_mu S_mu`.
//!
//! It is therefore block diagonal over total spin `j = N/2, N/2 - 1, ...`
//! with blocks of size `2j + 1`. The `j = N/2` block is spanned by the Dicke
//! states and holds all dynamics starting from `|0...0>`; the other blocks
//! only matter through their extreme eigenvalues during normalization.

use num_complex::Complex64;

use crate::dynamics::{bandwidth_of, hermitian_eigen, hermitian_eigenvalues, Transition};
use crate::error::{QslError, Result};
use crate::operators::check_sites;
use crate::states::{dicke, StateVector};
use crate::CMatrix;

/// Flat parameter count shared with the dense full-permutation model.
pub const PARAMETER_COUNT: usize = 9;

#[derive(Debug, Clone)]
struct SpinBlock {
    dim: usize,
    /// One matrix per flat parameter (xx xy xz yy yz zz bx by bz).
    terms: Vec<CMatrix>,
}

/// `S_x, S_y, S_z` (twice the spin matrices) for spin `twice_j / 2`,
/// basis ordered `m = j, j-1, ..., -j`.
fn collective_spin_matrices(twice_j: usize) -> [CMatrix; 3] {
    let dim = twice_j + 1;
    let j = twice_j as f64 / 2.0;
    let mut plus = CMatrix::zeros(dim, dim);
    for k in 1..dim {
        // J+ |m> with m = j - k raises to index k - 1
        let m = j - k as f64;
        plus[(k - 1, k)] = Complex64::new((j * (j + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
    }
    let minus = plus.adjoint();
    let sx = &plus + &minus;
    let sy = (&plus - &minus) * Complex64::new(0.0, -1.0);
    let sz = CMatrix::from_fn(dim, dim, |r, c| {
        if r == c {
            Complex64::new(2.0 * (j - r as f64), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    [sx, sy, sz]
}

impl SpinBlock {
    fn new(twice_j: usize, n_sites: usize) -> Self {
        let s = collective_spin_matrices(twice_j);
        let dim = twice_j + 1;
        let shift = CMatrix::identity(dim, dim) * Complex64::new(n_sites as f64 / 2.0, 0.0);
        let mut terms = Vec::with_capacity(PARAMETER_COUNT);
        for (mu, nu) in [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)] {
            let t = if mu == nu {
                &s[mu] * &s[mu] * Complex64::new(0.5, 0.0) - &shift
            } else {
                (&s[mu] * &s[nu] + &s[nu] * &s[mu]) * Complex64::new(0.5, 0.0)
            };
            terms.push(t);
        }
        terms.extend(s);
        Self { dim, terms }
    }

    fn assemble(&self, params: &[f64]) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for (p, t) in params.iter().zip(&self.terms) {
            if *p != 0.0 {
                m += t * Complex64::new(*p, 0.0);
            }
        }
        m
    }
}

/// Block form of the permutation-symmetric model on `n_sites` qubits.
#[derive(Debug, Clone)]
pub struct CollectiveModel {
    n_sites: usize,
    /// Ordered by decreasing total spin; `blocks[0]` is the symmetric block.
    blocks: Vec<SpinBlock>,
}

impl CollectiveModel {
    pub fn new(n_sites: usize) -> Result<Self> {
        check_sites(n_sites)?;
        let blocks = (0..=n_sites / 2)
            .map(|k| SpinBlock::new(n_sites - 2 * k, n_sites))
            .collect();
        Ok(Self { n_sites, blocks })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    fn check_len(params: &[f64]) -> Result<()> {
        if params.len() != PARAMETER_COUNT {
            return Err(QslError::DimensionMismatch {
                expected: PARAMETER_COUNT,
                found: params.len(),
            });
        }
        Ok(())
    }

    /// Hamiltonian blocks, largest total spin first.
    pub fn blocks(&self, params: &[f64]) -> Result<Vec<CMatrix>> {
        Self::check_len(params)?;
        Ok(self.blocks.iter().map(|b| b.assemble(params)).collect())
    }

    /// Distinct levels of the full Hamiltonian (without multiplicities), ascending.
    pub fn levels(&self, params: &[f64]) -> Result<Vec<f64>> {
        let mut all = Vec::new();
        for block in self.blocks(params)? {
            all.extend(hermitian_eigenvalues(&block)?);
        }
        all.sort_by(f64::total_cmp);
        Ok(all)
    }

    /// Projection of a state onto the Dicke basis, `<D_N^k|psi>` for `k = 0..=N`.
    pub fn dicke_coefficients(&self, psi: &StateVector) -> Result<Vec<Complex64>> {
        (0..=self.n_sites)
            .map(|k| dicke(self.n_sites, k)?.inner(psi))
            .collect()
    }

    /// Transition amplitude from `|0...0>` to the state with Dicke
    /// coefficients `target`, under the bandwidth-normalized Hamiltonian.
    pub fn normalized_transition(&self, params: &[f64], target: &[Complex64]) -> Result<Transition> {
        let blocks = self.blocks(params)?;
        if target.len() != blocks[0].nrows() {
            return Err(QslError::DimensionMismatch {
                expected: blocks[0].nrows(),
                found: target.len(),
            });
        }
        let (values, vectors) = hermitian_eigen(&blocks[0])?;
        let mut min = values[0];
        let mut max = values[values.len() - 1];
        for block in &blocks[1..] {
            let v = hermitian_eigenvalues(block)?;
            min = min.min(v[0]);
            max = max.max(v[v.len() - 1]);
        }
        let bandwidth = bandwidth_of(min, max)?;
        let energies = values.iter().map(|e| (e - min) / bandwidth).collect();
        let weights = (0..values.len())
            .map(|k| {
                let col = vectors.column(k);
                let overlap_target: Complex64 =
                    col.iter().zip(target).map(|(v, c)| v.conj() * c).sum();
                // initial state is the m = N/2 basis vector
                overlap_target.conj() * col[0].conj()
            })
            .collect();
        Ok(Transition::new(energies, weights))
    }
}
