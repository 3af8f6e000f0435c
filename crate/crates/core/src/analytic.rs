//! Closed-form predictions of the resonant and field-broken regimes.
//!
//! Every population formula returns a [`Prediction`] carrying the resonance
//! ratio `|U(N - 2 n4) + sigma/2| / J` alongside; it is informational only.

use std::f64::consts::{FRAC_PI_2, PI};

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fock::{check_site, FockBasis, FockState, StateVector, MODES};
use crate::hamiltonian::{channel_of, FieldConfig, ReducedParams};

/// Predicted `<N_1..N_4>` together with the resonance ratio.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub populations: [f64; MODES],
    pub resonance: f64,
}

/// `|U(N - 2 n4) + sigma/2| / J`.
pub fn resonance_ratio(p: &ReducedParams, n4: u32) -> f64 {
    let n = p.particles as f64;
    (p.u * (n - 2.0 * n4 as f64) + p.sigma / 2.0).abs() / p.j
}

/// Second-order hopping rate
/// `J(x) = J^2 [4U(N+1) + 2 sigma + x] / ([4U(N - 2 n4) + 2 sigma + x]^2 - 16 U^2)`.
pub fn hopping_fn(p: &ReducedParams, n4: u32, x: f64) -> Result<f64> {
    let n = p.particles as f64;
    let base = 4.0 * p.u * (n - 2.0 * n4 as f64) + 2.0 * p.sigma + x;
    let den = base * base - 16.0 * p.u * p.u;
    if den.abs() < 1e-9 || !den.is_finite() {
        return Err(Error::SingularParameter(format!(
            "J(x) denominator vanishes (U={}, sigma={}, N={}, n4={n4}, x={x})",
            p.u, p.sigma, p.particles
        )));
    }
    Ok(p.j * p.j * (4.0 * p.u * (n + 1.0) + 2.0 * p.sigma + x) / den)
}

/// `J_eff = J(0)`.
pub fn jeff(p: &ReducedParams, n4: u32) -> Result<f64> {
    hopping_fn(p, n4, 0.0)
}

/// Period `2 pi / (3 |J_eff|)` of the resonant oscillation.
pub fn resonant_period(p: &ReducedParams, n4: u32) -> Result<f64> {
    Ok(2.0 * PI / (3.0 * jeff(p, n4)?.abs()))
}

/// `sigma_crit = 2U(1 - N)`, where `J_eff` diverges.
pub fn sigma_crit(p: &ReducedParams) -> f64 {
    2.0 * p.u * (1.0 - p.particles as f64)
}

/// `<N_j> = n_j + (4/9)(N - 3 n_j - n4) sin^2(3 J_eff t / 2)` on the edge wells,
/// `<N_4> = n4`.
pub fn populations_resonant(ini: &FockState, p: &ReducedParams, t: f64) -> Result<Prediction> {
    check_total(ini, p)?;
    let n4 = ini.0[3];
    let je = jeff(p, n4)?;
    let s2 = (1.5 * je * t).sin().powi(2);
    let n = p.particles as f64;
    let mut pops = [0.0; MODES];
    for j in 0..3 {
        let nj = ini.0[j] as f64;
        pops[j] = nj + 4.0 / 9.0 * (n - 3.0 * nj - n4 as f64) * s2;
    }
    pops[3] = n4 as f64;
    Ok(Prediction { populations: pops, resonance: resonance_ratio(p, n4) })
}

/// `zeta = J(nu) [1 + J(nu) / (3 nu)]`.
pub fn zeta(p: &ReducedParams, f: &FieldConfig, n4: u32) -> Result<f64> {
    f.validate()?;
    if f.nu == 0.0 {
        return invalid("field strength nu must be non-zero for the broken-regime frequency");
    }
    let jn = hopping_fn(p, n4, f.nu)?;
    Ok(jn * (1.0 + jn / (3.0 * f.nu)))
}

/// Full-transfer time `pi / (2 |zeta|)`.
pub fn tau(zeta: f64) -> Result<f64> {
    if zeta == 0.0 || !zeta.is_finite() {
        return Err(Error::SingularParameter(format!("transfer time undefined for zeta={zeta}")));
    }
    Ok(PI / (2.0 * zeta.abs()))
}

/// `nu / J(nu)`; large values mark the validity of the broken-regime formulas.
pub fn broken_validity_ratio(p: &ReducedParams, f: &FieldConfig, n4: u32) -> Result<f64> {
    Ok(f.nu / hopping_fn(p, n4, f.nu)?)
}

/// `<N_j>_k = n_j + (n_partner - n_j) sin^2(zeta t)` for the two channel
/// wells; the target well and the center keep their occupations.
pub fn populations_broken(ini: &FockState, p: &ReducedParams, f: &FieldConfig, t: f64) -> Result<Prediction> {
    check_total(ini, p)?;
    let n4 = ini.0[3];
    let z = zeta(p, f, n4)?;
    let s2 = (z * t).sin().powi(2);
    let (i, j) = f.channel();
    let n = ini.0.map(|x| x as f64);
    let mut pops = n;
    pops[i - 1] = n[i - 1] + (n[j - 1] - n[i - 1]) * s2;
    pops[j - 1] = n[j - 1] + (n[i - 1] - n[j - 1]) * s2;
    Ok(Prediction { populations: pops, resonance: resonance_ratio(p, n4) })
}

/// Occupations after a full transfer time under the field aimed at `k`:
/// the two channel wells swap, the target and the center stay.
pub fn routing_table(ini: &FockState, k: usize) -> Result<FockState> {
    if !(1..=3).contains(&k) {
        return invalid(format!("routing target must be 1..=3, got {k}"));
    }
    let (i, j) = channel_of(k);
    let mut out = ini.0;
    out.swap(i - 1, j - 1);
    Ok(FockState(out))
}

/// Normalized imbalance `<N2 - N3>/n1 = (-1)^(k+1) cos(q pi)` after the
/// two-stage splitter.
pub fn imbalance_prediction(q: f64, k: usize) -> Result<f64> {
    check_q(q)?;
    let sign = match k {
        2 => -1.0,
        3 => 1.0,
        _ => return invalid(format!("imbalance law is defined for k = 2 or 3, got {k}")),
    };
    Ok(sign * (q * PI).cos())
}

/// `(A1, A2) = (n1 cos^2(q pi/2), n1 sin^2(q pi/2))`.
pub fn two_stage_amplitudes(q: f64, n1: u32) -> Result<(f64, f64)> {
    check_q(q)?;
    let c = (q * FRAC_PI_2).cos().powi(2);
    let n = n1 as f64;
    Ok((n * c, n * (1.0 - c)))
}

/// Populations during the readout stage of the two-source multiplexer.
///
/// `t` is measured from the switch to the field aimed at `k`; the prepared
/// pair carries `A1` in well 1 and `A2` in well 2.
pub fn populations_two_stage(
    q: f64,
    n1: u32,
    n4: u32,
    p: &ReducedParams,
    f: &FieldConfig,
    t: f64,
) -> Result<Prediction> {
    let k = f.target;
    if !(1..=2).contains(&k) {
        return invalid(format!("two-stage readout needs k = 1 or 2, got {k}"));
    }
    let (a1, a2) = two_stage_amplitudes(q, n1)?;
    let z = zeta(p, f, n4)?;
    let (c2, s2) = ((z * t).cos().powi(2), (z * t).sin().powi(2));
    let amps = [a1, a2];
    let mut pops = [0.0; MODES];
    for j in 0..2 {
        pops[j] = if j + 1 == k { amps[j] } else { amps[j] * c2 };
    }
    pops[2] = amps[2 - k] * s2;
    pops[3] = n4 as f64;
    Ok(Prediction { populations: pops, resonance: resonance_ratio(p, n4) })
}

/// Relative phase `3 nu tau + pi/2` carried by the transferred pair.
pub fn transferred_phase(nu: f64, tau: f64) -> f64 {
    3.0 * nu * tau + FRAC_PI_2
}

/// Orthogonal change of basis from the three edge modes to normal modes,
/// rows indexed by normal mode, with their frequencies.
#[derive(Clone, Debug, PartialEq)]
pub struct EffectiveModeDecomposition {
    transform: Array2<f64>,
    frequencies: [f64; 3],
}

impl EffectiveModeDecomposition {
    pub fn new(transform: Array2<f64>, frequencies: [f64; 3]) -> Result<Self> {
        if transform.dim() != (3, 3) {
            return invalid("mode transform must be 3x3");
        }
        let dev = (transform.dot(&transform.t()) - Array2::<f64>::eye(3)).iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        if dev > 1e-12 {
            return invalid(format!("mode transform is not orthogonal (deviation {dev:.3e})"));
        }
        Ok(Self { transform, frequencies })
    }

    /// Normal modes of `J_eff (tau_12 + tau_23 + tau_13)`:
    /// `u`, the symmetric mode `s`, and `v`.
    pub fn symmetric(jeff: f64) -> Self {
        let s2 = 2f64.sqrt();
        let s3 = 3f64.sqrt();
        let s6 = 6f64.sqrt();
        let m = ndarray::arr2(&[
            [1.0 / s2, -1.0 / s2, 0.0],
            [1.0 / s3, 1.0 / s3, 1.0 / s3],
            [1.0 / s6, 1.0 / s6, -2.0 / s6],
        ]);
        Self { transform: m, frequencies: [-jeff, 2.0 * jeff, -jeff] }
    }

    /// Normal modes of `zeta tau_ij + nu (N_i + N_j - 2 N_k)`.
    pub fn broken(k: usize, nu: f64, zeta: f64) -> Result<Self> {
        if !(1..=3).contains(&k) {
            return invalid(format!("field target must be 1..=3, got {k}"));
        }
        let (i, j) = channel_of(k);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let mut m = Array2::zeros((3, 3));
        m[[0, i - 1]] = r;
        m[[0, j - 1]] = r;
        m[[1, i - 1]] = r;
        m[[1, j - 1]] = -r;
        m[[2, k - 1]] = 1.0;
        Ok(Self { transform: m, frequencies: [nu + zeta, nu - zeta, -2.0 * nu] })
    }

    pub fn transform(&self) -> &Array2<f64> {
        &self.transform
    }

    pub fn frequencies(&self) -> [f64; 3] {
        self.frequencies
    }
}

/// `<N_j>(t) = sum_{k,l,q} M_kj M_kq M_lj M_lq exp(i t (W_l - W_k)) n_q`
/// for a Fock initial state. The central well is inert.
pub fn mode_sum_expectation(ini: &FockState, decomp: &EffectiveModeDecomposition, t: f64, site: usize) -> Result<f64> {
    let j = check_site(site)?;
    if j == 3 {
        return Ok(ini.0[3] as f64);
    }
    let m = &decomp.transform;
    let w = decomp.frequencies;
    let mut acc = C64::new(0.0, 0.0);
    for q in 0..3 {
        let nq = ini.0[q] as f64;
        if nq == 0.0 {
            continue;
        }
        for k in 0..3 {
            for l in 0..3 {
                let c = m[[k, j]] * m[[k, q]] * m[[l, j]] * m[[l, q]] * nq;
                acc += C64::from_polar(c, t * (w[l] - w[k]));
            }
        }
    }
    let scale = ini.total().max(1) as f64;
    if acc.im.abs() > 1e-10 * scale {
        return Err(Error::Consistency(format!("mode-sum expectation has imaginary part {:.3e}", acc.im)));
    }
    Ok(acc.re)
}

/// `n` bosons in the single-particle mode `alpha a_i^dag + beta a_j^dag`,
/// with fixed occupations on the remaining wells.
#[derive(Clone, Debug, PartialEq)]
pub struct CoherentPairState {
    pub alpha: C64,
    pub beta: C64,
    pub sites: (usize, usize),
    pub particle_count: u32,
    pub spectator: Vec<(usize, u32)>,
}

/// `alpha = cos(q pi/2)`, `beta = -i sin(q pi/2)` on `sites`.
pub fn coherent_pair(q: f64, n1: u32, sites: (usize, usize)) -> Result<CoherentPairState> {
    check_q(q)?;
    let (a, b) = sites;
    check_site(a)?;
    check_site(b)?;
    if a == b {
        return invalid("coherent pair needs two distinct sites");
    }
    let th = q * FRAC_PI_2;
    Ok(CoherentPairState {
        alpha: C64::new(th.cos(), 0.0),
        beta: C64::new(0.0, -th.sin()),
        sites,
        particle_count: n1,
        spectator: Vec::new(),
    })
}

impl CoherentPairState {
    pub fn with_spectator(mut self, site: usize, occupation: u32) -> Result<Self> {
        check_site(site)?;
        if site == self.sites.0 || site == self.sites.1 {
            return invalid(format!("spectator site {site} belongs to the pair"));
        }
        self.spectator.retain(|(s, _)| *s != site);
        self.spectator.push((site, occupation));
        Ok(self)
    }

    pub fn total(&self) -> u32 {
        self.particle_count + self.spectator.iter().map(|(_, n)| n).sum::<u32>()
    }

    /// Binomial expansion: `(m, n - m)` on the pair has amplitude
    /// `sqrt(C(n, m)) alpha^m beta^(n - m)`.
    pub fn expand_to_fock(&self, basis: &FockBasis) -> Result<StateVector> {
        let norm = self.alpha.norm_sqr() + self.beta.norm_sqr();
        if (norm - 1.0).abs() > 1e-12 {
            return invalid(format!("|alpha|^2 + |beta|^2 = {norm}, expected 1"));
        }
        if self.total() != basis.particles() {
            return invalid(format!("coherent pair holds {} particles, basis has {}", self.total(), basis.particles()));
        }
        let n = self.particle_count;
        let (i, j) = (self.sites.0 - 1, self.sites.1 - 1);
        let mut occ = [0u32; MODES];
        for &(s, k) in &self.spectator {
            occ[s - 1] = k;
        }
        let mut amps = Array1::<C64>::zeros(basis.len());
        let mut binom = 1.0_f64;
        for m in 0..=n {
            // binom = C(n, m)
            if m > 0 {
                binom *= (n - m + 1) as f64 / m as f64;
            }
            occ[i] = m;
            occ[j] = n - m;
            let idx = basis.index(&FockState(occ)).expect("occupations sum to the basis particle number");
            amps[idx] = binom.sqrt() * self.alpha.powu(m) * self.beta.powu(n - m);
        }
        StateVector::normalized(basis, amps)
    }
}

fn check_q(q: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&q) {
        return invalid(format!("splitting parameter q must lie in [0, 1], got {q}"));
    }
    Ok(())
}

fn check_total(ini: &FockState, p: &ReducedParams) -> Result<()> {
    if ini.total() != p.particles {
        return invalid(format!("initial state holds {} particles, parameters say {}", ini.total(), p.particles));
    }
    Ok(())
}
