//! Fock representation of the q-oscillator on truncated coefficient vectors.
//!
//! The ladder operators act through a|n⟩ = {n}_q^{1/2}|n-1⟩ and
//! a⁺|n⟩ = {n+1}_q^{1/2}|n+1⟩ with N|n⟩ = n|n⟩, so on a vector truncated at
//! level N a creation step can push amplitude past the boundary; that loss is
//! reported through a flag rather than an error, and commutation-type
//! identities are only meaningful on interior indices.

use num_complex::Complex64;

use crate::error::Result;
use crate::qcore::{q_number, QParameters};

/// A vector in the truncated Fock space, stored as coefficients c_0..c_N of
/// the orthonormal basis |0⟩..|N⟩.
#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    coeffs: Vec<Complex64>,
}

impl FockVector {
    /// Build from raw coefficients; `coeffs[n]` multiplies |n⟩.
    pub fn from_coefficients(coeffs: Vec<Complex64>) -> Self {
        assert!(!coeffs.is_empty(), "a Fock vector needs at least |0>");
        Self { coeffs }
    }

    /// The basis vector |n⟩ in a space truncated at level `dim - 1`.
    pub fn basis(n: usize, dim: usize) -> Self {
        assert!(n < dim, "basis index {n} outside truncated dimension {dim}");
        let mut coeffs = vec![Complex64::new(0.0, 0.0); dim];
        coeffs[n] = Complex64::new(1.0, 0.0);
        Self { coeffs }
    }

    /// The zero vector with `dim` components.
    pub fn zero(dim: usize) -> Self {
        assert!(dim > 0);
        Self {
            coeffs: vec![Complex64::new(0.0, 0.0); dim],
        }
    }

    /// Truncation level N (coefficients run over 0..=N).
    pub fn truncation(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Coefficient slice.
    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// ℓ² norm of the coefficient vector.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Whether |norm - 1| < rel_tol.
    pub fn is_normalized(&self, rel_tol: f64) -> bool {
        (self.norm() - 1.0).abs() < rel_tol
    }

    /// Rescale to unit norm (no-op direction for the zero vector).
    pub fn normalized(&self) -> Self {
        let n = self.norm();
        if n == 0.0 {
            return self.clone();
        }
        Self {
            coeffs: self.coeffs.iter().map(|c| c / n).collect(),
        }
    }
}

/// Annihilation operator: c'_n = {n+1}_q^{1/2} c_{n+1}, with c'_N = 0.
///
/// Exact on vectors supported below the truncation level.
pub fn apply_annihilation(v: &FockVector, params: QParameters) -> FockVector {
    let dim = v.coeffs.len();
    let mut out = vec![Complex64::new(0.0, 0.0); dim];
    for (n, slot) in out.iter_mut().take(dim - 1).enumerate() {
        let w = q_number(n as u32 + 1, params)
            .expect("ladder coefficient within probed range")
            .sqrt();
        *slot = v.coeffs[n + 1] * w;
    }
    FockVector { coeffs: out }
}

/// Creation operator: c'_{n+1} = {n+1}_q^{1/2} c_n.
///
/// The component that would land beyond the truncation level is dropped; the
/// returned flag is true when the dropped amplitude was nonzero.
pub fn apply_creation(v: &FockVector, params: QParameters) -> (FockVector, bool) {
    let dim = v.coeffs.len();
    let mut out = vec![Complex64::new(0.0, 0.0); dim];
    for (n, slot) in out.iter_mut().enumerate().skip(1) {
        let w = q_number(n as u32, params)
            .expect("ladder coefficient within probed range")
            .sqrt();
        *slot = v.coeffs[n - 1] * w;
    }
    let lost = v.coeffs[dim - 1] != Complex64::new(0.0, 0.0);
    (FockVector { coeffs: out }, lost)
}

/// Number operator: c'_n = n · c_n.
pub fn apply_number(v: &FockVector) -> FockVector {
    let coeffs = v
        .coeffs
        .iter()
        .enumerate()
        .map(|(n, c)| c * n as f64)
        .collect();
    FockVector { coeffs }
}

/// Position operator Q = a⁺ + a. Propagates the creation truncation flag.
pub fn apply_position(v: &FockVector, params: QParameters) -> (FockVector, bool) {
    let lowered = apply_annihilation(v, params);
    let (raised, lost) = apply_creation(v, params);
    let coeffs = lowered
        .coeffs
        .iter()
        .zip(raised.coeffs.iter())
        .map(|(a, b)| a + b)
        .collect();
    (FockVector { coeffs }, lost)
}

/// Momentum operator P = i(a⁺ - a). Propagates the creation truncation flag.
pub fn apply_momentum(v: &FockVector, params: QParameters) -> (FockVector, bool) {
    let lowered = apply_annihilation(v, params);
    let (raised, lost) = apply_creation(v, params);
    let i = Complex64::new(0.0, 1.0);
    let coeffs = raised
        .coeffs
        .iter()
        .zip(lowered.coeffs.iter())
        .map(|(up, down)| i * (up - down))
        .collect();
    (FockVector { coeffs }, lost)
}

/// Eigenvalue of the Hamiltonian H = ½(aa⁺ + a⁺a) on |n⟩:
/// ½({n+1}_q + {n}_q) = ½ (qⁿ(q+1) - 2)/(q - 1).
pub fn hamiltonian_eigenvalue(n: u32, params: QParameters) -> Result<f64> {
    Ok(0.5 * (q_number(n + 1, params)? + q_number(n, params)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p2() -> QParameters {
        QParameters::new(2.0).unwrap()
    }

    #[test]
    fn annihilation_examples() {
        let dim = 8;
        // a annihilates the vacuum
        let vac = FockVector::basis(0, dim);
        assert_eq!(apply_annihilation(&vac, p2()), FockVector::zero(dim));
        // a|1> = |0>  ({1}_q = 1)
        let one = FockVector::basis(1, dim);
        let r = apply_annihilation(&one, p2());
        assert_eq!(r.coefficients()[0], Complex64::new(1.0, 0.0));
        assert!((r.norm() - 1.0).abs() < 1e-15);
        // a|3> = sqrt(7)|2> with {3}_2 = 7 from the q-number oracle
        let oracle = q_number(3, p2()).unwrap();
        assert_eq!(oracle, 7.0);
        let three = FockVector::basis(3, dim);
        let r = apply_annihilation(&three, p2());
        assert!((r.coefficients()[2].re - oracle.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn creation_examples() {
        let dim = 8;
        let (z, lost) = apply_creation(&FockVector::zero(dim), p2());
        assert_eq!(z, FockVector::zero(dim));
        assert!(!lost);
        let (r, lost) = apply_creation(&FockVector::basis(0, dim), p2());
        assert_eq!(r.coefficients()[1], Complex64::new(1.0, 0.0));
        assert!(!lost);
        // a+|1> = sqrt(3)|2> with {2}_2 = 3
        let (r, _) = apply_creation(&FockVector::basis(1, dim), p2());
        assert!((r.coefficients()[2].re - 3.0_f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn creation_truncation_flag() {
        let dim = 4;
        let top = FockVector::basis(3, dim);
        let (r, lost) = apply_creation(&top, p2());
        assert!(lost);
        assert_eq!(r, FockVector::zero(dim));
    }

    #[test]
    fn number_operator_examples() {
        let dim = 8;
        assert_eq!(
            apply_number(&FockVector::basis(0, dim)),
            FockVector::zero(dim)
        );
        let r = apply_number(&FockVector::basis(5, dim));
        assert_eq!(r.coefficients()[5], Complex64::new(5.0, 0.0));
        // linearity on (|0> + |2>)/sqrt(2)
        let s = 1.0 / 2.0_f64.sqrt();
        let mut c = vec![Complex64::new(0.0, 0.0); dim];
        c[0] = Complex64::new(s, 0.0);
        c[2] = Complex64::new(s, 0.0);
        let r = apply_number(&FockVector::from_coefficients(c));
        assert_eq!(r.coefficients()[0], Complex64::new(0.0, 0.0));
        assert!((r.coefficients()[2].re - 2.0 * s).abs() < 1e-15);
    }

    #[test]
    fn hamiltonian_examples() {
        // n = 0 gives 1/2 identically in q
        for q in [1.5, 2.0, 7.0] {
            let p = QParameters::new(q).unwrap();
            assert!((hamiltonian_eigenvalue(0, p).unwrap() - 0.5).abs() < 1e-15);
        }
        // oracle (q^n (q+1) - 2)/(2(q-1)) at q = 2
        assert_eq!(hamiltonian_eigenvalue(1, p2()).unwrap(), 2.0);
        assert_eq!(hamiltonian_eigenvalue(2, p2()).unwrap(), 5.0);
        // strictly increasing
        let mut prev = -1.0;
        for n in 0..25 {
            let e = hamiltonian_eigenvalue(n, p2()).unwrap();
            assert!(e > prev);
            prev = e;
        }
    }

    #[test]
    fn commutation_relation_on_interior_states() {
        // (a a+ - q a+ a)|n> = |n> for interior n
        let dim = 12;
        let q = 2.0;
        let p = QParameters::new(q).unwrap();
        for n in 0..dim - 2 {
            let v = FockVector::basis(n, dim);
            let (up, _) = apply_creation(&v, p);
            let a_up = apply_annihilation(&up, p);
            let down = apply_annihilation(&v, p);
            let (up_down, _) = apply_creation(&down, p);
            for m in 0..dim {
                let lhs = a_up.coefficients()[m] - up_down.coefficients()[m] * q;
                let rhs = v.coefficients()[m];
                assert!((lhs - rhs).norm() < 1e-10, "n = {n}, m = {m}");
            }
        }
    }

    #[test]
    fn number_commutators_on_interior_states() {
        // [N, a+] = a+ and [N, a] = -a on interior states
        let dim = 10;
        let p = p2();
        for n in 0..dim - 2 {
            let v = FockVector::basis(n, dim);
            let (up, _) = apply_creation(&v, p);
            let n_up = apply_number(&up);
            let (up_n, _) = apply_creation(&apply_number(&v), p);
            let down = apply_annihilation(&v, p);
            let n_down = apply_number(&down);
            let down_n = apply_annihilation(&apply_number(&v), p);
            for m in 0..dim {
                let c1 = n_up.coefficients()[m] - up_n.coefficients()[m];
                assert!((c1 - up.coefficients()[m]).norm() < 1e-10);
                let c2 = n_down.coefficients()[m] - down_n.coefficients()[m];
                assert!((c2 + down.coefficients()[m]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn hamiltonian_diagonal_via_ladder_ops() {
        // H = (a a+ + a+ a)/2 applied through the ladder operators matches
        // hamiltonian_eigenvalue on interior basis states
        let dim = 12;
        let p = p2();
        for n in 0..dim - 2 {
            let v = FockVector::basis(n, dim);
            let (up, _) = apply_creation(&v, p);
            let a_up = apply_annihilation(&up, p);
            let down = apply_annihilation(&v, p);
            let (up_down, _) = apply_creation(&down, p);
            let e = hamiltonian_eigenvalue(n as u32, p).unwrap();
            for m in 0..dim {
                let h = (a_up.coefficients()[m] + up_down.coefficients()[m]) * 0.5;
                assert!((h - v.coefficients()[m] * e).norm() < 1e-10);
            }
        }
    }
}
