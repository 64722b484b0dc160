//! Analytic speed limits and closed-form three-qubit spectra.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{energy_stddev, hermitian_eigenvalues};
use crate::error::{QslError, Result};
use crate::operators::{HamiltonianMatrix, HamiltonianModel, InteractionGraph, SymmetryClass};
use crate::states::StateVector;
use crate::CMatrix;

/// Mandelstam-Tamm estimate for one initial/target pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QslReport {
    /// `|<psi(0)|psi_target>|`
    pub overlap: f64,
    pub delta_h: f64,
    pub t_min: f64,
}

impl QslReport {
    pub fn new(overlap: f64, delta_h: f64) -> Result<Self> {
        Ok(Self {
            overlap,
            delta_h,
            t_min: mt_bound(overlap, delta_h)?,
        })
    }

    /// Overlap of `initial` with `target` and the energy spread of `h` in `initial`.
    pub fn for_states(
        h: &HamiltonianMatrix,
        initial: &StateVector,
        target: &StateVector,
    ) -> Result<Self> {
        let overlap = initial.inner(target)?.norm().min(1.0);
        Self::new(overlap, energy_stddev(h, initial)?)
    }
}

/// `arccos(overlap) / delta_h`.
pub fn mt_bound(overlap: f64, delta_h: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&overlap) {
        return Err(QslError::InvalidArgument(format!(
            "overlap must lie in [0, 1], got {overlap}"
        )));
    }
    if !(delta_h > 0.0) {
        return Err(QslError::InvalidArgument(format!(
            "energy spread must be positive, got {delta_h}"
        )));
    }
    Ok(overlap.acos() / delta_h)
}

/// Speed limit for a normalized two-level Hamiltonian with upper-level
/// population `p1`, where the spread is `sqrt(p1 (1 - p1))`.
pub fn two_level_time(p1: f64, overlap: f64) -> Result<f64> {
    if !(p1 > 0.0 && p1 < 1.0) {
        return Err(QslError::InvalidArgument(format!(
            "upper-level population must lie in (0, 1), got {p1}"
        )));
    }
    mt_bound(overlap, (p1 * (1.0 - p1)).sqrt())
}

/// Closed-form spectrum of the zero-field, permutation-symmetric K3
/// Hamiltonian with symmetric coupling `h`, ascending.
pub fn symmetric3_spectrum(h: &Matrix3<f64>) -> [f64; 8] {
    let (xx, yy, zz) = (h[(0, 0)], h[(1, 1)], h[(2, 2)]);
    let (xy, xz, yz) = (h[(0, 1)], h[(0, 2)], h[(1, 2)]);
    let tr = xx + yy + zz;
    let f2 = xx * xx + yy * yy + zz * zz + 3.0 * (xy * xy + xz * xz + yz * yz)
        - xx * yy
        - xx * zz
        - yy * zz;
    let f = f2.max(0.0).sqrt();
    let mut out = [-tr, -tr, -tr, -tr, tr - 2.0 * f, tr - 2.0 * f, tr + 2.0 * f, tr + 2.0 * f];
    out.sort_by(f64::total_cmp);
    out
}

/// The `h_xx` that collapses the K3 spectrum onto two levels `-eta` (x6)
/// and `3 eta` (x2), together with `eta`.
pub fn two_eigenvalue_hxx(h_yy: f64, h_zz: f64, h_xy: f64, h_yz: f64, h_xz: f64) -> Result<(f64, f64)> {
    let denom = h_yy + h_zz;
    let scale = h_yy.abs().max(h_zz.abs());
    if denom == 0.0 || denom.abs() <= 1e-14 * scale {
        return Err(QslError::InvalidArgument(
            "two-level condition is singular for h_yy + h_zz = 0".into(),
        ));
    }
    let off = h_xy * h_xy + h_yz * h_yz + h_xz * h_xz;
    let h_xx = (-h_yy * h_zz + off) / denom;
    let eta = (h_yy * h_yy + h_zz * h_zz + off + h_yy * h_zz) / denom;
    Ok((h_xx, eta))
}

/// Numeric spectrum of the permutation-symmetric K3 Hamiltonian.
pub fn k3_spectrum(h: &Matrix3<f64>, field: &Vector3<f64>) -> Result<Vec<f64>> {
    let model = HamiltonianModel::new(InteractionGraph::complete(3)?, SymmetryClass::FullPermutation)?;
    let sym = (h + h.transpose()) * 0.5;
    let m = model.assemble(&model.uniform(sym, *field))?;
    hermitian_eigenvalues(m.matrix())
}

/// Spectrum of the K3 Hamiltonian with a field along y, split into the
/// four closed-form levels `-tr(h) +- b_y` and the four remaining levels,
/// which have no printed closed form and are taken from the eigensolver.
#[derive(Debug, Clone, PartialEq)]
pub struct Ghz5LevelSpectrum {
    pub closed_form: [f64; 4],
    pub remaining: [f64; 4],
    /// All eight levels, ascending.
    pub eigenvalues: [f64; 8],
    /// Largest distance between a closed-form level and its numeric partner.
    pub match_residual: f64,
}

pub fn ghz5level_spectrum(h: &Matrix3<f64>, b_y: f64) -> Result<Ghz5LevelSpectrum> {
    let numeric = k3_spectrum(h, &Vector3::new(0.0, b_y, 0.0))?;
    let tr = h.trace();
    let mut closed_form = [-tr - b_y, -tr - b_y, -tr + b_y, -tr + b_y];
    closed_form.sort_by(f64::total_cmp);

    let mut pool = numeric.clone();
    let mut residual = 0.0_f64;
    for value in closed_form {
        let (idx, dist) = pool
            .iter()
            .enumerate()
            .map(|(i, v)| (i, (v - value).abs()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("eight levels");
        residual = residual.max(dist);
        pool.remove(idx);
    }
    let mut eigenvalues = [0.0; 8];
    eigenvalues.copy_from_slice(&numeric);
    let mut remaining = [0.0; 4];
    remaining.copy_from_slice(&pool);
    Ok(Ghz5LevelSpectrum {
        closed_form,
        remaining,
        eigenvalues,
        match_residual: residual,
    })
}

/// Empirical two-body GHZ speed limit `pi * ceil(N/2)^2 / 2`.
pub fn ghz_two_body_time(n_sites: usize) -> Result<f64> {
    if n_sites < 3 {
        return Err(QslError::InvalidArgument(format!(
            "two-body GHZ time is defined for N >= 3, got {n_sites}"
        )));
    }
    let half = n_sites.div_ceil(2) as f64;
    Ok(PI * half * half / 2.0)
}

/// Hadamard plus `N - 1` CNOTs with the whole sequence at unit bandwidth: `N^2 pi`.
pub fn sequential_ghz_time(n_sites: usize) -> Result<f64> {
    if n_sites < 2 {
        return Err(QslError::InvalidArgument(format!(
            "sequential GHZ time is defined for N >= 2, got {n_sites}"
        )));
    }
    Ok((n_sites * n_sites) as f64 * PI)
}

/// Energy range needed to finish by `t` when the unit-bandwidth speed limit is `t_min`.
pub fn energy_for_deadline(t_min_at_unit_bandwidth: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(QslError::InvalidArgument(format!("deadline must be positive, got {t}")));
    }
    Ok(t_min_at_unit_bandwidth / t)
}

/// Generator of the Hadamard gate at unit time (eigenvalues `-pi` and `0`).
pub fn hadamard_hamiltonian() -> HamiltonianMatrix {
    let s2 = 2f64.sqrt();
    let off = Complex64::new(PI / (2.0 * s2), 0.0);
    let m = CMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(PI * (s2 - 2.0) / 4.0, 0.0),
            off,
            off,
            Complex64::new(-PI * (2.0 + s2) / 4.0, 0.0),
        ],
    );
    HamiltonianMatrix::new(1, m).expect("Hermitian by construction")
}
