//! Target states and the common initial state.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QslError, Result};
use crate::operators::{check_sites, permute_index, validate_permutation};
use crate::CVector;

/// Normalized pure state on `n_sites` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_sites: usize,
    amplitudes: CVector,
}

impl StateVector {
    /// Wraps amplitudes that must already have unit norm (to 1e-12).
    pub fn new(n_sites: usize, amplitudes: CVector) -> Result<Self> {
        check_sites(n_sites)?;
        let dim = 1usize << n_sites;
        if amplitudes.len() != dim {
            return Err(QslError::DimensionMismatch {
                expected: dim,
                found: amplitudes.len(),
            });
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(QslError::NotNormalized { norm });
        }
        Ok(Self {
            n_sites,
            amplitudes,
        })
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(n_sites: usize, amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(QslError::NotNormalized { norm });
        }
        Self::new(n_sites, amplitudes / Complex64::new(norm, 0.0))
    }

    pub(crate) fn from_parts(n_sites: usize, amplitudes: CVector) -> Self {
        Self {
            n_sites,
            amplitudes,
        }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(QslError::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// Applies a site permutation (content of site `i` moves to `perm[i]`).
    pub fn permuted(&self, perm: &[usize]) -> Result<StateVector> {
        validate_permutation(self.n_sites, perm)?;
        let mut out = CVector::zeros(self.dim());
        for (b, amp) in self.amplitudes.iter().enumerate() {
            out[permute_index(b, perm)] = *amp;
        }
        Ok(Self::from_parts(self.n_sites, out))
    }
}

fn basis_state(n_sites: usize, index: usize) -> CVector {
    let mut v = CVector::zeros(1 << n_sites);
    v[index] = Complex64::new(1.0, 0.0);
    v
}

/// `|0...0>`.
pub fn zero_state(n_sites: usize) -> Result<StateVector> {
    check_sites(n_sites)?;
    Ok(StateVector::from_parts(n_sites, basis_state(n_sites, 0)))
}

fn require_at_least_two(n_sites: usize) -> Result<()> {
    check_sites(n_sites)?;
    if n_sites < 2 {
        return Err(QslError::InvalidArgument(format!(
            "entangled target needs at least 2 sites, got {n_sites}"
        )));
    }
    Ok(())
}

/// `(|0...0> + |1...1>)/sqrt(2)`.
pub fn ghz(n_sites: usize) -> Result<StateVector> {
    require_at_least_two(n_sites)?;
    let mut v = CVector::zeros(1 << n_sites);
    let a = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    v[0] = a;
    v[(1 << n_sites) - 1] = a;
    Ok(StateVector::from_parts(n_sites, v))
}

/// Uniform superposition of the single-excitation basis states.
pub fn w_state(n_sites: usize) -> Result<StateVector> {
    require_at_least_two(n_sites)?;
    dicke(n_sites, 1)
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Dicke state: uniform superposition of all weight-`k` basis states.
pub fn dicke(n_sites: usize, k: usize) -> Result<StateVector> {
    check_sites(n_sites)?;
    if k > n_sites {
        return Err(QslError::InvalidArgument(format!(
            "Dicke excitation number {k} exceeds {n_sites} sites"
        )));
    }
    let amp = Complex64::new(1.0 / (binomial(n_sites, k) as f64).sqrt(), 0.0);
    let v = CVector::from_iterator(
        1 << n_sites,
        (0..1usize << n_sites).map(|b| {
            if b.count_ones() as usize == k {
                amp
            } else {
                Complex64::new(0.0, 0.0)
            }
        }),
    );
    Ok(StateVector::from_parts(n_sites, v))
}

/// The five-qubit absolutely maximally entangled state AME(5,2).
pub fn ame52() -> StateVector {
    const PLUS: [&str; 4] = ["01111", "10011", "10101", "11100"];
    const MINUS: [&str; 4] = ["00000", "00110", "01001", "11010"];
    let a = 1.0 / 8f64.sqrt();
    let mut v = CVector::zeros(32);
    for (kets, sign) in [(PLUS, 1.0), (MINUS, -1.0)] {
        for ket in kets {
            let idx = usize::from_str_radix(ket, 2).expect("binary literal");
            v[idx] = Complex64::new(sign * a, 0.0);
        }
    }
    StateVector::from_parts(5, v)
}

/// Checks `P|psi> = |psi>`; returns the verdict and `||P psi - psi||`.
pub fn is_invariant(state: &StateVector, perm: &[usize]) -> Result<(bool, f64)> {
    let moved = state.permuted(perm)?;
    let residual = (moved.amplitudes() - state.amplitudes()).norm();
    Ok((residual <= 1e-10, residual))
}

/// Named target state family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TargetState {
    Ghz,
    W,
    Dicke(usize),
    Ame52,
}

impl TargetState {
    pub fn build(self, n_sites: usize) -> Result<StateVector> {
        match self {
            TargetState::Ghz => ghz(n_sites),
            TargetState::W => w_state(n_sites),
            TargetState::Dicke(k) => dicke(n_sites, k),
            TargetState::Ame52 if n_sites == 5 => Ok(ame52()),
            TargetState::Ame52 => Err(QslError::InvalidArgument(format!(
                "AME(5,2) lives on 5 sites, not {n_sites}"
            ))),
        }
    }
}

impl fmt::Display for TargetState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetState::Ghz => f.write_str("ghz"),
            TargetState::W => f.write_str("w"),
            TargetState::Dicke(k) => write!(f, "dicke{k}"),
            TargetState::Ame52 => f.write_str("ame52"),
        }
    }
}

impl FromStr for TargetState {
    type Err = QslError;

    /// Accepts `ghz`, `w`, `ame`/`ame52`, `dicke<k>` or `dicke:<k>` (case-insensitive).
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "ghz" => return Ok(TargetState::Ghz),
            "w" => return Ok(TargetState::W),
            "ame" | "ame52" | "ame(5,2)" => return Ok(TargetState::Ame52),
            _ => {}
        }
        if let Some(rest) = lower.strip_prefix("dicke") {
            let digits = rest.trim_start_matches(':');
            if let Ok(k) = digits.parse() {
                return Ok(TargetState::Dicke(k));
            }
        }
        Err(QslError::InvalidArgument(format!("unknown target state '{s}'")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EPS: f64 = 1e-12;

    #[test]
    fn zero_state_is_first_basis_vector() {
        let z = zero_state(1).unwrap();
        assert_eq!(z.amplitudes()[0], Complex64::new(1.0, 0.0));
        assert_eq!(z.amplitudes()[1], Complex64::new(0.0, 0.0));
        assert_eq!(zero_state(3).unwrap().dim(), 8);
        for n in 2..=7 {
            let ov = zero_state(n).unwrap().inner(&ghz(n).unwrap()).unwrap();
            assert!((ov.re - std::f64::consts::FRAC_1_SQRT_2).abs() < EPS);
        }
    }

    #[test]
    fn ghz_two_qubits() {
        let g = ghz(2).unwrap();
        let a = std::f64::consts::FRAC_1_SQRT_2;
        let expected = [a, 0.0, 0.0, a];
        for (z, e) in g.amplitudes().iter().zip(expected) {
            assert!((z.re - e).abs() < EPS && z.im == 0.0);
        }
        assert!(ghz(1).is_err());
    }

    #[test]
    fn w_three_qubits() {
        let w = w_state(3).unwrap();
        for (b, z) in w.amplitudes().iter().enumerate() {
            let expected = if [1, 2, 4].contains(&b) { 1.0 / 3f64.sqrt() } else { 0.0 };
            assert!((z.re - expected).abs() < EPS);
        }
        assert_eq!(w, dicke(3, 1).unwrap());
    }

    #[test]
    fn dicke_states() {
        let d = dicke(4, 2).unwrap();
        let nonzero: Vec<_> = d.amplitudes().iter().filter(|z| z.norm() > 0.0).collect();
        assert_eq!(nonzero.len(), 6);
        for z in nonzero {
            assert!((z.re - 1.0 / 6f64.sqrt()).abs() < EPS);
        }
        assert_eq!(dicke(4, 0).unwrap(), zero_state(4).unwrap());
        assert_eq!(d.inner(&zero_state(4).unwrap()).unwrap().norm(), 0.0);
        assert!(dicke(3, 4).is_err());
    }

    #[test]
    fn all_constructors_are_normalized() {
        for n in 2..=7 {
            assert!((ghz(n).unwrap().amplitudes().norm() - 1.0).abs() < EPS);
            for k in 0..=n {
                let d = dicke(n, k).unwrap();
                assert!((d.amplitudes().norm() - 1.0).abs() < EPS);
                for (b, z) in d.amplitudes().iter().enumerate() {
                    if b.count_ones() as usize != k {
                        assert_eq!(*z, Complex64::new(0.0, 0.0));
                    }
                }
            }
        }
        assert!((ame52().amplitudes().norm() - 1.0).abs() < EPS);
    }

    #[test]
    fn ame_overlap_with_zero_state() {
        let ov = ame52().inner(&zero_state(5).unwrap()).unwrap();
        assert!((ov.norm_sqr() - 0.125).abs() < EPS);
        assert!(ov.re < 0.0);
    }

    #[test]
    fn permutation_invariance() {
        let g = ghz(4).unwrap();
        for i in 0..4 {
            for j in i + 1..4 {
                let mut p: Vec<usize> = (0..4).collect();
                p.swap(i, j);
                assert!(is_invariant(&g, &p).unwrap().0);
            }
        }
        // 1-based (2,4)(3,5)
        let (ok, res) = is_invariant(&ame52(), &[0, 3, 4, 1, 2]).unwrap();
        assert!(ok, "residual {res}");
        let (ok, res) = is_invariant(&ame52(), &[1, 0, 2, 3, 4]).unwrap();
        assert!(!ok);
        assert!(res > 0.1);
        assert!(is_invariant(&g, &[0, 1, 2]).is_err());
    }

    #[test]
    fn state_validation() {
        assert!(StateVector::new(1, CVector::from_element(2, Complex64::new(1.0, 0.0))).is_err());
        assert!(StateVector::new(2, CVector::from_element(2, Complex64::new(1.0, 0.0))).is_err());
        let s = StateVector::normalized(1, CVector::from_element(2, Complex64::new(3.0, 0.0)));
        assert!(s.is_ok());
    }

    #[test]
    fn target_parsing() {
        assert_eq!("GHZ".parse::<TargetState>().unwrap(), TargetState::Ghz);
        assert_eq!("dicke:2".parse::<TargetState>().unwrap(), TargetState::Dicke(2));
        assert_eq!("dicke2".parse::<TargetState>().unwrap(), TargetState::Dicke(2));
        assert_eq!("AME".parse::<TargetState>().unwrap(), TargetState::Ame52);
        assert!("bell".parse::<TargetState>().is_err());
        assert!(TargetState::Ame52.build(4).is_err());
    }
}
