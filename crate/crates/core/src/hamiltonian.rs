//! Hamiltonians of the star and its conserved charges.
//!
//! Energies are in units of the hopping rate unless a caller passes a
//! different `j`; every builder takes `j` explicitly.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::analytic;
use crate::error::{invalid, Result};
use crate::fock::{bilinear_operator, check_site, hopping_operator, number_operator, FockBasis, LinearOperator, MODES};

/// Parameters of the extended Bose-Hubbard model on the star.
///
/// The star geometry fixes `U12 = U23 = U13` (`u_edge`) and
/// `U14 = U24 = U34` (`u_center`), so only those two inter-site values exist.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FullParams {
    pub u0: f64,
    pub u_edge: f64,
    pub u_center: f64,
    pub j: f64,
    /// Local field `sigma_i` of wells 1..=4.
    pub sigma: [f64; MODES],
}

impl FullParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.u0, self.u_edge, self.u_center, self.j].into_iter().chain(self.sigma);
        if all.into_iter().any(|x| !x.is_finite()) {
            return invalid("full-model parameters must be finite");
        }
        if self.j <= 0.0 {
            return invalid(format!("hopping rate must be positive, got {}", self.j));
        }
        Ok(())
    }

    /// Full-model parameters whose Hamiltonian equals the reduced one up to
    /// [`FullParams::reduction_constant`]: `U12 = U0`, `U14 = U0 - 4U`,
    /// `sigma_1 = sigma_2 = sigma_3 = 2 sigma + sigma_4`.
    pub fn integrable(p: &ReducedParams, u0: f64, sigma4: f64) -> Self {
        let edge = 2.0 * p.sigma + sigma4;
        Self { u0, u_edge: u0, u_center: u0 - 4.0 * p.u, j: p.j, sigma: [edge, edge, edge, sigma4] }
    }

    /// Effective interaction `U = (U0 - U14) / 4`.
    pub fn effective_u(&self) -> f64 {
        (self.u0 - self.u_center) / 4.0
    }

    /// Constant dropped when the full model is reduced on the integrable
    /// manifold: `U0 N(N-1)/2 - U N^2 + (sigma + sigma_4) N`, with
    /// `sigma = (sigma_edge - sigma_4) / 2`.
    pub fn reduction_constant(&self, particles: u32) -> f64 {
        let n = particles as f64;
        let sigma = (self.sigma[0] - self.sigma[3]) / 2.0;
        self.u0 * n * (n - 1.0) / 2.0 - self.effective_u() * n * n + (sigma + self.sigma[3]) * n
    }
}

/// Knobs of the reduced integrable Hamiltonian.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducedParams {
    /// Effective interaction `(U0 - U14) / 4`.
    pub u: f64,
    /// Energy gradient between the central well and the edge wells.
    pub sigma: f64,
    pub j: f64,
    pub particles: u32,
}

impl ReducedParams {
    pub fn new(u: f64, sigma: f64, j: f64, particles: u32) -> Result<Self> {
        let p = Self { u, sigma, j, particles };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.u.is_finite() && self.sigma.is_finite() && self.j.is_finite()) {
            return invalid("reduced parameters must be finite");
        }
        if self.j <= 0.0 {
            return invalid(format!("hopping rate must be positive, got {}", self.j));
        }
        Ok(())
    }

    pub fn with_sigma(self, sigma: f64) -> Self {
        Self { sigma, ..self }
    }

    pub fn with_u(self, u: f64) -> Self {
        Self { u, ..self }
    }
}

/// Displaced external field `F_k`: strength `nu` and target edge well `k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldConfig {
    pub nu: f64,
    pub target: usize,
}

impl FieldConfig {
    pub fn new(nu: f64, target: usize) -> Result<Self> {
        let f = Self { nu, target };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.target) {
            return invalid(format!("field target must be an edge well 1..=3, got {}", self.target));
        }
        if !self.nu.is_finite() {
            return invalid("field strength must be finite");
        }
        Ok(())
    }

    /// The two edge wells other than the target, ascending.
    pub fn channel(&self) -> (usize, usize) {
        channel_of(self.target)
    }

    pub fn retarget(self, target: usize) -> Result<Self> {
        Self::new(self.nu, target)
    }
}

pub(crate) fn channel_of(k: usize) -> (usize, usize) {
    match k {
        1 => (2, 3),
        2 => (1, 3),
        _ => (1, 2),
    }
}

fn edge_imbalance(basis: &FockBasis) -> Array2<f64> {
    // D = N1 + N2 + N3 - N4 as a diagonal
    let diag: ndarray::Array1<f64> = basis
        .states()
        .iter()
        .map(|s| {
            let [a, b, c, d] = s.0;
            (a + b + c) as f64 - d as f64
        })
        .collect();
    Array2::from_diag(&diag)
}

fn star_hopping(basis: &FockBasis) -> LinearOperator {
    let mut c = [[0.0; MODES]; MODES];
    for edge in 0..3 {
        c[3][edge] = 1.0;
        c[edge][3] = 1.0;
    }
    bilinear_operator(basis, &c)
}

/// Extended Bose-Hubbard Hamiltonian of the star.
pub fn build_full_ebhm(basis: &FockBasis, p: &FullParams) -> Result<LinearOperator> {
    p.validate()?;
    let mut m = star_hopping(basis).into_matrix() * (-p.j);
    for (i, st) in basis.states().iter().enumerate() {
        let n = st.0.map(|x| x as f64);
        let mut e = 0.0;
        for s in 0..MODES {
            e += p.u0 / 2.0 * n[s] * (n[s] - 1.0) + p.sigma[s] * n[s];
        }
        e += p.u_edge * (n[0] * n[1] + n[0] * n[2] + n[1] * n[2]);
        e += p.u_center * n[3] * (n[0] + n[1] + n[2]);
        m[[i, i]] += e;
    }
    LinearOperator::new(basis, m)
}

/// `U D^2 + sigma D - J [a4^dag (a1 + a2 + a3) + h.c.]` with `D = N1+N2+N3-N4`.
pub fn build_reduced(basis: &FockBasis, p: &ReducedParams) -> Result<LinearOperator> {
    p.validate()?;
    basis.check_same(p.particles)?;
    let mut m = star_hopping(basis).into_matrix() * (-p.j);
    let d = edge_imbalance(basis);
    for i in 0..basis.len() {
        let x = d[[i, i]];
        m[[i, i]] += p.u * x * x + p.sigma * x;
    }
    LinearOperator::new(basis, m)
}

/// `N_i + N_j - 2 N_k` for the field target `k`.
pub fn field_operator(basis: &FockBasis, target: usize) -> Result<LinearOperator> {
    if !(1..=3).contains(&target) {
        return invalid(format!("field target must be 1..=3, got {target}"));
    }
    let (i, j) = channel_of(target);
    let ni = number_operator(basis, i)?;
    let nj = number_operator(basis, j)?;
    let nk = number_operator(basis, target)?;
    Ok(&(&ni + &nj) - &nk.scaled(2.0))
}

/// Symmetry-broken Hamiltonian `H + nu (N_i + N_j - 2 N_k)`.
pub fn build_broken(basis: &FockBasis, p: &ReducedParams, f: &FieldConfig) -> Result<LinearOperator> {
    f.validate()?;
    let h = build_reduced(basis, p)?;
    Ok(&h + &field_operator(basis, f.target)?.scaled(f.nu))
}

/// `w^dag w` for the single-particle mode `w = sum_i x_i a_i`.
pub fn mode_number(basis: &FockBasis, x: &[f64; MODES]) -> LinearOperator {
    let mut c = [[0.0; MODES]; MODES];
    for i in 0..MODES {
        for j in 0..MODES {
            c[i][j] = x[i] * x[j];
        }
    }
    bilinear_operator(basis, &c)
}

const S2: f64 = std::f64::consts::SQRT_2;

/// `Q = u^dag u` with `u = (a1 - a2)/sqrt 2`.
pub fn build_charge_q(basis: &FockBasis) -> LinearOperator {
    mode_number(basis, &[1.0 / S2, -1.0 / S2, 0.0, 0.0])
}

/// `Q~ = v^dag v` with `v = (a1 + a2 - 2 a3)/sqrt 6`.
pub fn build_charge_qtilde(basis: &FockBasis) -> LinearOperator {
    let s6 = 6f64.sqrt();
    mode_number(basis, &[1.0 / s6, 1.0 / s6, -2.0 / s6, 0.0])
}

/// `Q_k = (N_i + N_j - a_i^dag a_j - a_j^dag a_i) / 2`, the number operator
/// of the antisymmetric channel mode `(a_i - a_j)/sqrt 2`.
pub fn build_charge_qk(basis: &FockBasis, k: usize) -> Result<LinearOperator> {
    if !(1..=3).contains(&k) {
        return invalid(format!("charge index must be 1..=3, got {k}"));
    }
    let (i, j) = channel_of(k);
    let mut x = [0.0; MODES];
    x[check_site(i)?] = 1.0 / S2;
    x[check_site(j)?] = -1.0 / S2;
    Ok(mode_number(basis, &x))
}

/// `J_eff (tau_12 + tau_23 + tau_13)`.
pub fn build_effective(basis: &FockBasis, jeff: f64) -> Result<LinearOperator> {
    if !jeff.is_finite() {
        return invalid("effective hopping must be finite");
    }
    let t12 = hopping_operator(basis, 1, 2)?;
    let t23 = hopping_operator(basis, 2, 3)?;
    let t13 = hopping_operator(basis, 1, 3)?;
    Ok((&(&t12 + &t23) + &t13).scaled(jeff))
}

/// The same operator written through the charges:
/// `J_eff [2 (N1 + N2 + N3) - 3 (Q + Q~)]`.
pub fn build_effective_from_charges(basis: &FockBasis, jeff: f64) -> Result<LinearOperator> {
    let mut edge = LinearOperator::zeros(basis);
    for s in 1..=3 {
        edge = &edge + &number_operator(basis, s)?;
    }
    let charges = &build_charge_q(basis) + &build_charge_qtilde(basis);
    Ok((&edge.scaled(2.0) - &charges.scaled(3.0)).scaled(jeff))
}

/// `zeta tau_ij + nu (N_i + N_j - 2 N_k)` valid for `nu >> J(nu)`.
///
/// `zeta` is evaluated for a central-well occupation `n4`.
pub fn build_effective_broken(
    basis: &FockBasis,
    p: &ReducedParams,
    f: &FieldConfig,
    n4: u32,
) -> Result<LinearOperator> {
    let zeta = analytic::zeta(p, f, n4)?;
    let (i, j) = f.channel();
    let tij = hopping_operator(basis, i, j)?;
    Ok(&tij.scaled(zeta) + &field_operator(basis, f.target)?.scaled(f.nu))
}

/// `max |(AB - BA)_ij|`.
///
/// Hamiltonians and charges here have at most a handful of non-zeros per
/// row, so the products run over the non-zero pattern of each factor.
pub fn commutator_norm(a: &LinearOperator, b: &LinearOperator) -> Result<f64> {
    a.check_compatible(b.particles(), b.dim())?;
    let n = a.dim();
    let rows_a = sparse_rows(a.matrix());
    let rows_b = sparse_rows(b.matrix());
    let mut c = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for &(k, aik) in &rows_a[i] {
            for &(j, bkj) in &rows_b[k] {
                c[[i, j]] += aik * bkj;
            }
        }
        for &(k, bik) in &rows_b[i] {
            for &(j, akj) in &rows_a[k] {
                c[[i, j]] -= bik * akj;
            }
        }
    }
    Ok(c.iter().fold(0.0_f64, |m, x| m.max(x.abs())))
}

fn sparse_rows(m: &Array2<f64>) -> Vec<Vec<(usize, f64)>> {
    m.outer_iter()
        .map(|row| row.iter().enumerate().filter(|(_, &x)| x != 0.0).map(|(j, &x)| (j, x)).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::FockState;

    fn p(u: f64, sigma: f64, n: u32) -> ReducedParams {
        ReducedParams::new(u, sigma, 1.0, n).unwrap()
    }

    #[test]
    fn reduced_diagonal_entries() {
        let b = FockBasis::new(1);
        let h = build_reduced(&b, &p(0.3, 0.7, 1)).unwrap();
        let c = b.index(&FockState([0, 0, 0, 1])).unwrap();
        let e = b.index(&FockState([1, 0, 0, 0])).unwrap();
        assert!((h.matrix()[[c, c]] - (0.3 - 0.7)).abs() < 1e-15);
        assert!((h.matrix()[[e, e]] - (0.3 + 0.7)).abs() < 1e-15);
        assert_eq!(h.matrix()[[c, e]], -1.0);
    }

    #[test]
    fn zero_particles_give_zero_matrix() {
        let b = FockBasis::new(0);
        let fp = FullParams { u0: 1.0, u_edge: 1.0, u_center: 0.2, j: 1.0, sigma: [0.5; 4] };
        let h = build_full_ebhm(&b, &fp).unwrap();
        assert_eq!(h.dim(), 1);
        assert_eq!(h.matrix()[[0, 0]], 0.0);
    }

    #[test]
    fn broken_field_k3() {
        let b = FockBasis::new(4);
        let rp = p(0.5, 1.2, 4);
        let f = FieldConfig::new(0.8, 3).unwrap();
        let hk = build_broken(&b, &rp, &f).unwrap();
        let h = build_reduced(&b, &rp).unwrap();
        let n1 = number_operator(&b, 1).unwrap();
        let n2 = number_operator(&b, 2).unwrap();
        let n3 = number_operator(&b, 3).unwrap();
        let manual = &h + &(&(&n1 + &n2) - &n3.scaled(2.0)).scaled(0.8);
        assert_eq!(hk, manual);

        let zero = FieldConfig::new(0.0, 2).unwrap();
        assert_eq!(build_broken(&b, &rp, &zero).unwrap(), h);
        // site symmetry of the basis makes the field traceless
        assert!((hk.trace() - h.trace()).abs() < 1e-10);
        assert!(FieldConfig::new(1.0, 4).is_err());
    }

    #[test]
    fn charges_match_written_out_forms() {
        let b = FockBasis::new(5);
        let n = |s| number_operator(&b, s).unwrap();
        let t = |i, j| hopping_operator(&b, i, j).unwrap();
        let q = (&(&n(1) + &n(2)) - &t(1, 2)).scaled(0.5);
        let qt_first = (&(&(&n(1) + &n(2)) + &n(3).scaled(4.0)) + &t(1, 2)).scaled(1.0 / 6.0);
        let qt = &qt_first - &(&t(1, 3) + &t(2, 3)).scaled(1.0 / 3.0);
        let diff = |a: &LinearOperator, b: &LinearOperator| (a - b).max_abs();
        assert!(diff(&q, &build_charge_q(&b)) < 1e-14);
        assert!(diff(&qt, &build_charge_qtilde(&b)) < 1e-14);
        assert_eq!(build_charge_qk(&b, 3).unwrap(), build_charge_q(&b));
        assert!(build_charge_qk(&b, 4).is_err());
    }

    #[test]
    fn symmetric_single_particle_state_has_zero_q() {
        use crate::fock::{expectation, StateVector};
        use num_complex::Complex64 as C64;
        let b = FockBasis::new(1);
        let mut amps = ndarray::Array1::zeros(b.len());
        amps[b.index(&FockState([1, 0, 0, 0])).unwrap()] = C64::new(1.0, 0.0);
        amps[b.index(&FockState([0, 1, 0, 0])).unwrap()] = C64::new(1.0, 0.0);
        let psi = StateVector::normalized(&b, amps).unwrap();
        let q = build_charge_q(&b);
        assert!(expectation(&q, &psi).unwrap().abs() < 1e-15);
        let qpsi = q.apply(&psi).unwrap();
        assert!(qpsi.iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn commutator_norm_basics() {
        let b = FockBasis::new(6);
        let h = build_reduced(&b, &p(0.4, -0.9, 6)).unwrap();
        assert!(commutator_norm(&h, &h).unwrap() < 1e-12);
        let n1 = number_operator(&b, 1).unwrap();
        let n2 = number_operator(&b, 2).unwrap();
        assert_eq!(commutator_norm(&n1, &n2).unwrap(), 0.0);
        assert!(commutator_norm(&h, &build_charge_qtilde(&b)).unwrap() < 1e-10);
        assert!(commutator_norm(&h, &n1).unwrap() > 0.1);
        let other = FockBasis::new(5);
        assert!(commutator_norm(&h, &number_operator(&other, 1).unwrap()).is_err());
    }

    #[test]
    fn commutator_matches_dense_product() {
        let b = FockBasis::new(3);
        let a = build_reduced(&b, &p(0.4, 0.2, 3)).unwrap();
        let c = number_operator(&b, 2).unwrap();
        let dense = a.matrix().dot(c.matrix()) - c.matrix().dot(a.matrix());
        let expect = dense.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        assert!((commutator_norm(&a, &c).unwrap() - expect).abs() < 1e-14);
    }

    #[test]
    fn effective_single_particle_spectrum() {
        use ndarray_linalg::{Eigh, UPLO};
        let b = FockBasis::new(1);
        let h = build_effective(&b, 0.5).unwrap();
        let (mut e, _) = h.matrix().eigh(UPLO::Lower).unwrap();
        e.as_slice_mut().unwrap().sort_by(f64::total_cmp);
        let expect = [-0.5, -0.5, 0.0, 1.0];
        for (x, y) in e.iter().zip(expect) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
