//! Fixed-particle-number Fock space of the four-well star and the
//! particle-conserving operator algebra acting on it.
//!
//! Wells are numbered 1..=4 throughout the public API, with 4 the central
//! well. Basis states are ordered lexicographically descending in
//! `(n1, n2, n3)`; `n4 = N - n1 - n2 - n3` is implied. For `N = 2` the first
//! states are `(2,0,0,0), (1,1,0,0), (1,0,1,0), (1,0,0,1), (0,2,0,0), ...`.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Number of wells (bosonic modes).
pub const MODES: usize = 4;

/// Index of the central well in 1-based numbering.
pub const CENTER: usize = 4;

/// Tolerance on `|A - A^T|` below which an operator counts as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Tolerance on `| ||psi|| - 1 |` for a state vector.
pub const NORM_TOL: f64 = 1e-12;

pub(crate) fn check_site(site: usize) -> Result<usize> {
    if (1..=MODES).contains(&site) {
        Ok(site - 1)
    } else {
        invalid(format!("site {site} outside 1..={MODES}"))
    }
}

/// Occupation numbers `(n1, n2, n3, n4)` of the four wells.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FockState(pub [u32; MODES]);

impl FockState {
    pub const fn new(occupations: [u32; MODES]) -> Self {
        Self(occupations)
    }

    pub fn occupations(&self) -> [u32; MODES] {
        self.0
    }

    /// Occupation of a well, 1-based.
    pub fn get(&self, site: usize) -> Result<u32> {
        Ok(self.0[check_site(site)?])
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }
}

impl fmt::Display for FockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.0;
        write!(f, "|{a},{b},{c},{d}>")
    }
}

impl From<[u32; MODES]> for FockState {
    fn from(occ: [u32; MODES]) -> Self {
        Self(occ)
    }
}

fn binom2(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

fn binom3(n: usize) -> usize {
    if n < 3 {
        0
    } else {
        n * (n - 1) * (n - 2) / 6
    }
}

/// All Fock states of `N` bosons in the four wells, with an O(1) ranking.
#[derive(Clone, Debug)]
pub struct FockBasis {
    particles: u32,
    states: Vec<FockState>,
}

impl FockBasis {
    pub fn new(particles: u32) -> Self {
        let n = particles;
        let mut states = Vec::with_capacity(binom3(n as usize + 3));
        for n1 in (0..=n).rev() {
            for n2 in (0..=n - n1).rev() {
                for n3 in (0..=n - n1 - n2).rev() {
                    states.push(FockState([n1, n2, n3, n - n1 - n2 - n3]));
                }
            }
        }
        Self { particles, states }
    }

    pub fn particles(&self) -> u32 {
        self.particles
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[FockState] {
        &self.states
    }

    pub fn state(&self, index: usize) -> Option<FockState> {
        self.states.get(index).copied()
    }

    /// Position of `state` in the basis ordering, or `None` when its particle
    /// number differs from the basis.
    pub fn index(&self, state: &FockState) -> Option<usize> {
        if state.total() != self.particles {
            return None;
        }
        let [n1, n2, n3, _] = state.0.map(|x| x as usize);
        let rest = self.particles as usize - n1;
        // states with a larger n1, then a larger n2, then a larger n3
        Some(binom3(rest + 2) + binom2(rest - n2 + 1) + (rest - n2 - n3))
    }

    pub(crate) fn check_same(&self, particles: u32) -> Result<()> {
        if self.particles == particles {
            Ok(())
        } else {
            invalid(format!("basis mismatch: N = {} vs N = {}", self.particles, particles))
        }
    }
}

/// Checked basis construction; only four modes are supported.
pub fn build_basis(particles: i64, modes: usize) -> Result<FockBasis> {
    if modes != MODES {
        return invalid(format!("only {MODES} modes are supported, got {modes}"));
    }
    if particles < 0 {
        return invalid(format!("particle number must be non-negative, got {particles}"));
    }
    let n = u32::try_from(particles)
        .map_err(|_| Error::InvalidArgument(format!("particle number {particles} too large")))?;
    Ok(FockBasis::new(n))
}

/// Normalised complex amplitude vector over a [`FockBasis`].
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    particles: u32,
    amplitudes: Array1<C64>,
}

impl StateVector {
    pub fn fock(basis: &FockBasis, state: &FockState) -> Result<Self> {
        let idx = basis
            .index(state)
            .ok_or_else(|| Error::InvalidArgument(format!("{state} is not in the N = {} basis", basis.particles())))?;
        let mut amplitudes = Array1::zeros(basis.len());
        amplitudes[idx] = C64::new(1.0, 0.0);
        Ok(Self { particles: basis.particles(), amplitudes })
    }

    /// Wraps amplitudes that must already have unit norm.
    pub fn from_amplitudes(basis: &FockBasis, amplitudes: Array1<C64>) -> Result<Self> {
        if amplitudes.len() != basis.len() {
            return invalid(format!("amplitude vector has length {}, basis has {}", amplitudes.len(), basis.len()));
        }
        let s = Self { particles: basis.particles(), amplitudes };
        let norm = s.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return invalid(format!("state norm {norm} is not 1"));
        }
        Ok(s)
    }

    /// Rescales arbitrary non-zero amplitudes to unit norm.
    pub fn normalized(basis: &FockBasis, amplitudes: Array1<C64>) -> Result<Self> {
        if amplitudes.len() != basis.len() {
            return invalid("amplitude vector length does not match basis");
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return invalid("cannot normalise a zero or non-finite vector");
        }
        Ok(Self { particles: basis.particles(), amplitudes: amplitudes / C64::from(norm) })
    }

    pub(crate) fn from_raw(particles: u32, amplitudes: Array1<C64>) -> Self {
        Self { particles, amplitudes }
    }

    pub fn particles(&self) -> u32 {
        self.particles
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn amplitudes(&self) -> &Array1<C64> {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.particles != other.particles || self.len() != other.len() {
            return invalid("inner product between states of different bases");
        }
        Ok(self.amplitudes.iter().zip(other.amplitudes.iter()).map(|(a, b)| a.conj() * b).sum())
    }

    /// `<N_1> .. <N_4>` without building operators.
    pub fn populations(&self, basis: &FockBasis) -> Result<[f64; MODES]> {
        basis.check_same(self.particles)?;
        let mut out = [0.0; MODES];
        for (amp, st) in self.amplitudes.iter().zip(basis.states()) {
            let p = amp.norm_sqr();
            for (o, &n) in out.iter_mut().zip(st.0.iter()) {
                *o += p * n as f64;
            }
        }
        Ok(out)
    }
}

/// Real symmetric operator in the Fock basis.
///
/// Every operator in this model (Hamiltonians, charges, number and hopping
/// operators) has real matrix elements in the Fock basis, so the matrix is
/// stored as `f64`; states stay complex.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearOperator {
    particles: u32,
    matrix: Array2<f64>,
    hermitian: bool,
}

impl LinearOperator {
    pub fn new(basis: &FockBasis, matrix: Array2<f64>) -> Result<Self> {
        let d = basis.len();
        if matrix.dim() != (d, d) {
            return invalid(format!("matrix is {:?}, basis dimension is {d}", matrix.dim()));
        }
        Ok(Self::from_raw(basis.particles(), matrix))
    }

    pub(crate) fn from_raw(particles: u32, matrix: Array2<f64>) -> Self {
        let hermitian = max_asymmetry(&matrix) < HERMITIAN_TOL;
        Self { particles, matrix, hermitian }
    }

    pub fn zeros(basis: &FockBasis) -> Self {
        let d = basis.len();
        Self { particles: basis.particles(), matrix: Array2::zeros((d, d)), hermitian: true }
    }

    pub fn identity(basis: &FockBasis) -> Self {
        Self { particles: basis.particles(), matrix: Array2::eye(basis.len()), hermitian: true }
    }

    pub fn particles(&self) -> u32 {
        self.particles
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Array2<f64> {
        self.matrix
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn max_asymmetry(&self) -> f64 {
        max_asymmetry(&self.matrix)
    }

    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diag().sum()
    }

    pub fn apply(&self, psi: &StateVector) -> Result<Array1<C64>> {
        self.check_compatible(psi.particles, psi.len())?;
        let re = psi.amplitudes.mapv(|a| a.re);
        let im = psi.amplitudes.mapv(|a| a.im);
        let ar = self.matrix.dot(&re);
        let ai = self.matrix.dot(&im);
        Ok(ar.iter().zip(ai.iter()).map(|(&r, &i)| C64::new(r, i)).collect())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { particles: self.particles, matrix: &self.matrix * factor, hermitian: self.hermitian }
    }

    pub(crate) fn check_compatible(&self, particles: u32, dim: usize) -> Result<()> {
        if self.particles != particles || self.dim() != dim {
            return invalid(format!(
                "dimension mismatch: operator on N = {} (dim {}), other on N = {} (dim {})",
                self.particles,
                self.dim(),
                particles,
                dim
            ));
        }
        Ok(())
    }

    fn combine(&self, rhs: &Self, sign: f64) -> Self {
        assert_eq!((self.particles, self.dim()), (rhs.particles, rhs.dim()), "operators act on different bases");
        let matrix = &self.matrix + &(&rhs.matrix * sign);
        Self::from_raw(self.particles, matrix)
    }
}

impl Add for &LinearOperator {
    type Output = LinearOperator;
    fn add(self, rhs: &LinearOperator) -> LinearOperator {
        self.combine(rhs, 1.0)
    }
}

impl Sub for &LinearOperator {
    type Output = LinearOperator;
    fn sub(self, rhs: &LinearOperator) -> LinearOperator {
        self.combine(rhs, -1.0)
    }
}

impl Mul<f64> for &LinearOperator {
    type Output = LinearOperator;
    fn mul(self, rhs: f64) -> LinearOperator {
        self.scaled(rhs)
    }
}

fn max_asymmetry(m: &Array2<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[[i, j]] - m[[j, i]]).abs());
        }
    }
    worst
}

/// `sum_ij c[i][j] a_i^dag a_j` for a real coefficient matrix over the wells.
///
/// A symmetric `c` gives an exactly symmetric matrix: each off-diagonal
/// element is written by the same floating-point expression from both sides.
pub fn bilinear_operator(basis: &FockBasis, coeffs: &[[f64; MODES]; MODES]) -> LinearOperator {
    let d = basis.len();
    let mut m = Array2::<f64>::zeros((d, d));
    for (col, st) in basis.states().iter().enumerate() {
        let occ = st.0;
        for i in 0..MODES {
            if coeffs[i][i] != 0.0 {
                m[[col, col]] += coeffs[i][i] * occ[i] as f64;
            }
            for j in 0..MODES {
                let c = coeffs[i][j];
                if i == j || c == 0.0 || occ[j] == 0 {
                    continue;
                }
                let mut target = occ;
                target[j] -= 1;
                target[i] += 1;
                let row = basis.index(&FockState(target)).expect("hop stays in the sector");
                let amp = (((occ[i] + 1) * occ[j]) as f64).sqrt();
                m[[row, col]] += c * amp;
            }
        }
    }
    LinearOperator::from_raw(basis.particles(), m)
}

/// `N_site`, diagonal with the occupation of the well.
pub fn number_operator(basis: &FockBasis, site: usize) -> Result<LinearOperator> {
    let s = check_site(site)?;
    let diag: Array1<f64> = basis.states().iter().map(|st| st.0[s] as f64).collect();
    Ok(LinearOperator::from_raw(basis.particles(), Array2::from_diag(&diag)))
}

/// `tau_ij = a_i^dag a_j + a_j^dag a_i`.
pub fn hopping_operator(basis: &FockBasis, i: usize, j: usize) -> Result<LinearOperator> {
    let a = check_site(i)?;
    let b = check_site(j)?;
    if a == b {
        return invalid(format!("hopping needs two distinct wells, got {i} and {j}"));
    }
    let mut c = [[0.0; MODES]; MODES];
    c[a][b] = 1.0;
    c[b][a] = 1.0;
    Ok(bilinear_operator(basis, &c))
}

/// `<psi|A|psi>` for a Hermitian operator.
pub fn expectation(op: &LinearOperator, psi: &StateVector) -> Result<f64> {
    op.check_compatible(psi.particles, psi.len())?;
    if !op.is_hermitian() {
        return invalid("expectation value requires a Hermitian operator");
    }
    let a_psi = op.apply(psi)?;
    let z: C64 = psi.amplitudes.iter().zip(a_psi.iter()).map(|(a, b)| a.conj() * b).sum();
    if z.im.abs() > 1e-10 * op.max_abs().max(1.0) {
        return Err(Error::Consistency(format!("expectation of a Hermitian operator has imaginary part {}", z.im)));
    }
    Ok(z.re)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_basis(n: u32) -> Vec<FockState> {
        let mut v = Vec::new();
        for a in 0..=n {
            for b in 0..=n {
                for c in 0..=n {
                    if a + b + c <= n {
                        v.push(FockState([a, b, c, n - a - b - c]));
                    }
                }
            }
        }
        v
    }

    #[test]
    fn basis_sizes() {
        assert_eq!(FockBasis::new(2).len(), 10);
        assert_eq!(FockBasis::new(16).len(), 969);
        let vac = FockBasis::new(0);
        assert_eq!(vac.len(), 1);
        assert_eq!(vac.state(0), Some(FockState([0, 0, 0, 0])));
    }

    #[test]
    fn ordering_is_descending_lexicographic() {
        let b = FockBasis::new(2);
        let first: Vec<_> = b.states().iter().take(5).map(|s| s.0).collect();
        assert_eq!(first, vec![[2, 0, 0, 0], [1, 1, 0, 0], [1, 0, 1, 0], [1, 0, 0, 1], [0, 2, 0, 0]]);
        for w in b.states().windows(2) {
            assert!(w[0].0[..3] > w[1].0[..3]);
        }
    }

    #[test]
    fn ranking_is_bijective() {
        for n in 0..=9 {
            let b = FockBasis::new(n);
            for (i, s) in b.states().iter().enumerate() {
                assert_eq!(b.index(s), Some(i));
            }
            let all = brute_basis(n);
            assert_eq!(all.len(), b.len());
            let mut seen = vec![false; b.len()];
            for s in &all {
                let i = b.index(s).unwrap();
                assert!(!seen[i]);
                seen[i] = true;
            }
        }
        assert_eq!(FockBasis::new(3).index(&FockState([1, 1, 0, 0])), None);
    }

    #[test]
    fn build_basis_rejects_bad_input() {
        assert!(matches!(build_basis(-1, 4), Err(Error::InvalidArgument(_))));
        assert!(matches!(build_basis(3, 5), Err(Error::InvalidArgument(_))));
        assert_eq!(build_basis(3, 4).unwrap().len(), 20);
    }

    #[test]
    fn number_operators() {
        let b = FockBasis::new(1);
        let n1 = number_operator(&b, 1).unwrap();
        let i = b.index(&FockState([1, 0, 0, 0])).unwrap();
        assert_eq!(n1.matrix()[[i, i]], 1.0);

        let b = FockBasis::new(2);
        // sum of n1 over the ten states: 2 + 1*3 = 5
        assert_eq!(number_operator(&b, 1).unwrap().trace(), 5.0);

        let b = FockBasis::new(5);
        let mut total = LinearOperator::zeros(&b);
        for s in 1..=4 {
            total = &total + &number_operator(&b, s).unwrap();
        }
        assert_eq!(total, LinearOperator::identity(&b).scaled(5.0));
        assert!(number_operator(&b, 0).is_err());
        assert!(number_operator(&b, 5).is_err());
    }

    #[test]
    fn hopping_elements() {
        let b = FockBasis::new(1);
        let t14 = hopping_operator(&b, 1, 4).unwrap();
        let x = b.index(&FockState([0, 0, 0, 1])).unwrap();
        let y = b.index(&FockState([1, 0, 0, 0])).unwrap();
        assert_eq!(t14.matrix()[[x, y]], 1.0);
        assert_eq!(t14.matrix()[[y, x]], 1.0);

        let b = FockBasis::new(2);
        let t12 = hopping_operator(&b, 1, 2).unwrap();
        let x = b.index(&FockState([1, 1, 0, 0])).unwrap();
        let y = b.index(&FockState([2, 0, 0, 0])).unwrap();
        assert_eq!(t12.matrix()[[y, x]], 2f64.sqrt());
        assert_eq!(t12.max_asymmetry(), 0.0);
        assert!(hopping_operator(&b, 2, 2).is_err());
    }

    #[test]
    fn expectation_values() {
        let b = FockBasis::new(16);
        let psi = StateVector::fock(&b, &FockState([14, 2, 0, 0])).unwrap();
        let n1 = number_operator(&b, 1).unwrap();
        assert_eq!(expectation(&n1, &psi).unwrap(), 14.0);

        let b1 = FockBasis::new(1);
        let mut amps = Array1::zeros(4);
        amps[b1.index(&FockState([1, 0, 0, 0])).unwrap()] = C64::new(1.0, 0.0);
        amps[b1.index(&FockState([0, 1, 0, 0])).unwrap()] = C64::new(0.0, 1.0);
        let psi = StateVector::normalized(&b1, amps).unwrap();
        let n1 = number_operator(&b1, 1).unwrap();
        assert!((expectation(&n1, &psi).unwrap() - 0.5).abs() < 1e-15);

        let other = StateVector::fock(&b, &FockState([16, 0, 0, 0])).unwrap();
        assert!(matches!(expectation(&n1, &other), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn from_amplitudes_checks_norm() {
        let b = FockBasis::new(1);
        let amps = Array1::from_elem(4, C64::new(1.0, 0.0));
        assert!(StateVector::from_amplitudes(&b, amps.clone()).is_err());
        assert!(StateVector::normalized(&b, amps).is_ok());
    }
}
