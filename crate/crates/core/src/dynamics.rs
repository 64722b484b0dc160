//! Spectral decomposition, bandwidth normalization and unitary propagation.
//!
//! All times are in natural units with hbar = 1. Propagation diagonalizes a
//! Hamiltonian once and then applies `exp(-i E_k t)` in its eigenbasis, so a
//! single [`Spectrum`] can be reused across a whole time grid.

use faer::complex_native::c64;
use faer::{Mat, Side};
use num_complex::Complex64;

use crate::error::{QslError, Result};
use crate::operators::{hermiticity_residual, max_abs, HamiltonianMatrix};
use crate::states::StateVector;
use crate::{CMatrix, CVector};

/// Eigenvalues in ascending order with the matching orthonormal eigenvectors
/// as columns.
#[derive(Debug, Clone)]
pub struct Spectrum {
    n_sites: usize,
    eigenvalues: Vec<f64>,
    eigenvectors: CMatrix,
}

/// Diagonalizes a Hermitian matrix, sorting eigenpairs ascending.
pub fn eigendecompose(h: &HamiltonianMatrix) -> Result<Spectrum> {
    let (eigenvalues, eigenvectors) = hermitian_eigen(h.matrix())?;
    Ok(Spectrum {
        n_sites: h.n_sites(),
        eigenvalues,
        eigenvectors,
    })
}

fn to_faer(m: &CMatrix) -> Result<Mat<c64>> {
    let residual = hermiticity_residual(m);
    if residual > 1e-12 * max_abs(m).max(1.0) {
        return Err(QslError::NonHermitian { residual });
    }
    Ok(Mat::from_fn(m.nrows(), m.ncols(), |r, c| {
        let z = m[(r, c)];
        c64::new(z.re, z.im)
    }))
}

/// Sorted eigenpairs of any Hermitian matrix (not tied to a qubit count).
pub fn hermitian_eigen(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let eig = to_faer(m)?.selfadjoint_eigendecomposition(Side::Lower);
    let (s, u) = (eig.s().column_vector(), eig.u());
    let values = (0..s.nrows()).map(|k| s.read(k).re).collect();
    let vectors = CMatrix::from_fn(m.nrows(), m.ncols(), |r, c| {
        let z = u.read(r, c);
        Complex64::new(z.re, z.im)
    });
    Ok((values, vectors))
}

/// Ascending eigenvalues only.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Result<Vec<f64>> {
    let mut values = to_faer(m)?.selfadjoint_eigenvalues(Side::Lower);
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Whether `max - min` is too small to rescale.
pub(crate) fn bandwidth_of(min: f64, max: f64) -> Result<f64> {
    let bandwidth = max - min;
    if bandwidth <= 1e-12 * max.abs().max(1.0) {
        return Err(QslError::ZeroBandwidth { bandwidth });
    }
    Ok(bandwidth)
}

impl Spectrum {
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigenvectors
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> f64 {
        *self.eigenvalues.last().expect("nonempty spectrum")
    }

    /// Same eigenvectors, eigenvalues mapped affinely onto `[0, 1]`.
    pub fn normalized(&self) -> Result<Spectrum> {
        let (min, max) = (self.min(), self.max());
        let bandwidth = bandwidth_of(min, max)?;
        Ok(Spectrum {
            n_sites: self.n_sites,
            eigenvalues: self.eigenvalues.iter().map(|e| (e - min) / bandwidth).collect(),
            eigenvectors: self.eigenvectors.clone(),
        })
    }

    /// `V diag(E) V^dagger`.
    pub fn reconstruct(&self) -> CMatrix {
        let scaled = CMatrix::from_fn(self.eigenvectors.nrows(), self.eigenvectors.ncols(), |r, c| {
            self.eigenvectors[(r, c)] * self.eigenvalues[c]
        });
        scaled * self.eigenvectors.adjoint()
    }

    /// Number of distinct levels, merging gaps up to `rel_tol * bandwidth`.
    pub fn distinct_levels(&self, rel_tol: f64) -> usize {
        count_distinct(&self.eigenvalues, rel_tol)
    }

    fn check_state(&self, psi: &StateVector) -> Result<()> {
        if psi.dim() != self.eigenvalues.len() {
            return Err(QslError::DimensionMismatch {
                expected: self.eigenvalues.len(),
                found: psi.dim(),
            });
        }
        Ok(())
    }

    /// `exp(-i H t) |psi>`.
    pub fn evolve(&self, t: f64, psi: &StateVector) -> Result<StateVector> {
        self.check_state(psi)?;
        let mut coeffs = self.eigenvectors.ad_mul(psi.amplitudes());
        for (c, e) in coeffs.iter_mut().zip(&self.eigenvalues) {
            *c *= Complex64::from_polar(1.0, -e * t);
        }
        Ok(StateVector::from_parts(self.n_sites, &self.eigenvectors * coeffs))
    }

    /// Precomputes the transition amplitude `<target| exp(-iHt) |initial>`.
    pub fn transition(&self, initial: &StateVector, target: &StateVector) -> Result<Transition> {
        self.check_state(initial)?;
        self.check_state(target)?;
        let a = self.eigenvectors.ad_mul(initial.amplitudes());
        let b = self.eigenvectors.ad_mul(target.amplitudes());
        Ok(Transition::new(
            self.eigenvalues.clone(),
            b.iter().zip(a.iter()).map(|(b, a)| b.conj() * a).collect(),
        ))
    }
}

/// `<target| exp(-iHt) |initial> = sum_k w_k exp(-i E_k t)` for fixed
/// eigen-weights `w_k`.
#[derive(Debug, Clone)]
pub struct Transition {
    energies: Vec<f64>,
    weights: Vec<Complex64>,
}

impl Transition {
    pub fn new(energies: Vec<f64>, weights: Vec<Complex64>) -> Self {
        debug_assert_eq!(energies.len(), weights.len());
        Self { energies, weights }
    }

    pub fn amplitude(&self, t: f64) -> Complex64 {
        self.energies
            .iter()
            .zip(&self.weights)
            .map(|(e, w)| w * Complex64::from_polar(1.0, -e * t))
            .sum()
    }

    pub fn fidelity(&self, t: f64) -> f64 {
        self.amplitude(t).norm_sqr()
    }
}

/// Number of distinct values in an ascending list, merging neighbours closer
/// than `rel_tol * (max - min)`.
pub fn count_distinct(sorted: &[f64], rel_tol: f64) -> usize {
    if sorted.is_empty() {
        return 0;
    }
    let bandwidth = sorted[sorted.len() - 1] - sorted[0];
    let gap = rel_tol * bandwidth.max(f64::MIN_POSITIVE);
    1 + sorted.windows(2).filter(|w| w[1] - w[0] > gap).count()
}

/// `(H - E_min) / (E_max - E_min)`; spectrum mapped onto `[0, 1]`.
pub fn normalize_bandwidth(h: &HamiltonianMatrix) -> Result<HamiltonianMatrix> {
    let values = hermitian_eigenvalues(h.matrix())?;
    let (min, max) = (values[0], values[values.len() - 1]);
    let bandwidth = bandwidth_of(min, max)?;
    Ok(h.affine(1.0 / bandwidth, -min / bandwidth))
}

/// `exp(-i H t) |psi0>` through the eigendecomposition of `h`.
pub fn evolve(h: &HamiltonianMatrix, t: f64, psi0: &StateVector) -> Result<StateVector> {
    if psi0.dim() != h.dim() {
        return Err(QslError::DimensionMismatch {
            expected: h.dim(),
            found: psi0.dim(),
        });
    }
    eigendecompose(h)?.evolve(t, psi0)
}

/// `|<psi|phi>|^2`.
pub fn fidelity(psi: &StateVector, phi: &StateVector) -> Result<f64> {
    Ok(psi.inner(phi)?.norm_sqr())
}

/// Energy standard deviation `sqrt(<H^2> - <H>^2)` in `psi`.
pub fn energy_stddev(h: &HamiltonianMatrix, psi: &StateVector) -> Result<f64> {
    if psi.dim() != h.dim() {
        return Err(QslError::DimensionMismatch {
            expected: h.dim(),
            found: psi.dim(),
        });
    }
    let h_psi: CVector = h.matrix() * psi.amplitudes();
    let mean = psi.amplitudes().dotc(&h_psi).re;
    let second = h_psi.norm_squared();
    Ok((second - mean * mean).max(0.0).sqrt())
}

/// `|<b_k|psi>|^2` for each basis state.
pub fn component_fidelities(psi: &StateVector, basis: &[StateVector]) -> Result<Vec<f64>> {
    basis.iter().map(|b| fidelity(b, psi)).collect()
}

/// Fidelity of the evolved state to a target along a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FidelitySeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

/// Evaluates `|<target| exp(-iHt) |initial>|^2` on `times`.
pub fn fidelity_series(
    spectrum: &Spectrum,
    initial: &StateVector,
    target: &StateVector,
    times: &[f64],
) -> Result<FidelitySeries> {
    let tr = spectrum.transition(initial, target)?;
    Ok(FidelitySeries {
        times: times.to_vec(),
        values: times.iter().map(|&t| tr.fidelity(t)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{pauli_embed, Axis};
    use crate::states::{ghz, w_state, zero_state};
    use std::f64::consts::PI;

    fn real_diag(values: &[f64]) -> HamiltonianMatrix {
        let n = values.len();
        let m = CMatrix::from_fn(n, n, |r, c| {
            if r == c {
                Complex64::new(values[r], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        HamiltonianMatrix::new(n.trailing_zeros() as usize, m).unwrap()
    }

    #[test]
    fn sorted_eigenvalues() {
        let s = eigendecompose(&real_diag(&[3.0, 1.0])).unwrap();
        assert_eq!(s.eigenvalues(), &[1.0, 3.0]);
        let s = eigendecompose(&pauli_embed(1, 0, Axis::X).unwrap()).unwrap();
        assert!((s.eigenvalues()[0] + 1.0).abs() < 1e-14);
        assert!((s.eigenvalues()[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn normalization_of_diagonal() {
        let n = normalize_bandwidth(&real_diag(&[-2.0, 6.0])).unwrap();
        assert!((n.matrix()[(0, 0)].re).abs() < 1e-15);
        assert!((n.matrix()[(1, 1)].re - 1.0).abs() < 1e-15);
        assert!(matches!(
            normalize_bandwidth(&HamiltonianMatrix::identity(2).unwrap()),
            Err(QslError::ZeroBandwidth { .. })
        ));
    }

    #[test]
    fn evolution_basics() {
        let h = real_diag(&[0.0, 1.0]);
        let a = std::f64::consts::FRAC_1_SQRT_2;
        let plus = StateVector::normalized(1, CVector::from_element(2, Complex64::new(1.0, 0.0))).unwrap();
        assert_eq!(evolve(&h, 0.0, &plus).unwrap(), plus);
        let out = evolve(&h, PI, &plus).unwrap();
        let minus = StateVector::new(
            1,
            CVector::from_vec(vec![Complex64::new(a, 0.0), Complex64::new(-a, 0.0)]),
        )
        .unwrap();
        assert!((fidelity(&out, &minus).unwrap() - 1.0).abs() < 1e-14);
        assert!(evolve(&h, 1.0, &zero_state(2).unwrap()).is_err());
    }

    #[test]
    fn static_fidelities() {
        let z3 = zero_state(3).unwrap();
        assert!((fidelity(&ghz(3).unwrap(), &z3).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(fidelity(&w_state(3).unwrap(), &z3).unwrap(), 0.0);
        let z5 = zero_state(5).unwrap();
        assert!((fidelity(&crate::states::ame52(), &z5).unwrap() - 0.125).abs() < 1e-15);
        assert!(fidelity(&z3, &z5).is_err());
    }

    #[test]
    fn two_level_energy_spread() {
        let h = real_diag(&[0.0, 1.0]);
        for p1 in [0.1_f64, 0.25, 0.5, 0.9] {
            let psi = StateVector::new(
                1,
                CVector::from_vec(vec![
                    Complex64::new((1.0 - p1).sqrt(), 0.0),
                    Complex64::new(0.0, p1.sqrt()),
                ]),
            )
            .unwrap();
            let dh = energy_stddev(&h, &psi).unwrap();
            assert!((dh - (p1 * (1.0 - p1)).sqrt()).abs() < 1e-14);
        }
        let eig = zero_state(1).unwrap();
        assert_eq!(energy_stddev(&h, &eig).unwrap(), 0.0);
    }

    #[test]
    fn components() {
        let g = ghz(3).unwrap();
        let basis = [ghz(3).unwrap(), w_state(3).unwrap()];
        let f = component_fidelities(&g, &basis).unwrap();
        assert!((f[0] - 1.0).abs() < 1e-15 && f[1] == 0.0);
        let f = component_fidelities(&zero_state(3).unwrap(), &basis[..1]).unwrap();
        assert!((f[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn distinct_level_counting() {
        assert_eq!(count_distinct(&[0.0, 0.0, 1e-12, 0.5, 1.0], 1e-8), 3);
        assert_eq!(count_distinct(&[], 1e-8), 0);
        assert_eq!(count_distinct(&[2.0, 2.0], 1e-8), 1);
    }

    #[test]
    fn transition_matches_direct_evolution() {
        let h = crate::operators::pauli_product(2, &[(0, Axis::X), (1, Axis::Y)])
            .unwrap()
            .add(&pauli_embed(2, 1, Axis::Z).unwrap())
            .unwrap();
        let s = eigendecompose(&h).unwrap();
        let z = zero_state(2).unwrap();
        let g = ghz(2).unwrap();
        let tr = s.transition(&z, &g).unwrap();
        for t in [0.0, 0.3, 1.7, 4.0] {
            let direct = fidelity(&g, &s.evolve(t, &z).unwrap()).unwrap();
            assert!((tr.fidelity(t) - direct).abs() < 1e-13);
        }
    }
}
