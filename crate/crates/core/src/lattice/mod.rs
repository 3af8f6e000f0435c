//! From laboratory lattice settings to Hubbard parameters.
//!
//! Wannier functions are the harmonic-oscillator ground states of each
//! site, `phi(r) = prod_s (2 eta_s / pi)^(1/4) exp(-eta_s s^2)`. All energies
//! are in joules unless a field name says otherwise.

pub mod constants;
pub mod quadrature;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::hamiltonian::{FullParams, ReducedParams};
use constants::{BOHR_RADIUS, DY164_MASS, HBAR, PLANCK, VACUUM_PERMEABILITY};
use quadrature::{composite, gauss_hermite, gauss_legendre};

/// Optical-lattice settings. Depths are in recoil energies
/// `E_r = h^2 / (2 m lambda^2)`, lengths in metres.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub wavelength: f64,
    pub v0: f64,
    pub v1: f64,
    pub v2: f64,
    pub v3: f64,
    pub waist: f64,
    /// Beam displacement from the center towards `direction`.
    pub displacement: f64,
    /// Edge well the beam is moved towards, 1..=3.
    pub direction: usize,
    /// Atomic mass in kg.
    pub mass: f64,
    /// s-wave scattering length in Bohr radii. When absent, the value that
    /// makes the on-site and edge-edge energies equal is used.
    #[serde(default)]
    pub scattering_length: Option<f64>,
    /// Dipolar length `mu0 mu_d^2 m / (12 pi hbar^2)` in Bohr radii.
    pub dipolar_length: f64,
}

impl LatticeConfig {
    /// The settings of the reference experiment (dysprosium-164, 1064 nm).
    pub fn reference() -> Self {
        let v0 = 70.96;
        let wavelength = 1064e-9;
        Self {
            wavelength,
            v0,
            v1: 0.75 * v0,
            v2: 0.0004 * v0,
            v3: 0.005 * v0,
            waist: 2e-6,
            displacement: -wavelength / 6.0,
            direction: 3,
            mass: DY164_MASS,
            scattering_length: None,
            dipolar_length: 131.97,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.wavelength,
            self.v0,
            self.v1,
            self.v2,
            self.v3,
            self.waist,
            self.displacement,
            self.mass,
            self.dipolar_length,
        ];
        if finite.iter().any(|x| !x.is_finite()) {
            return invalid("lattice settings must be finite");
        }
        if self.wavelength <= 0.0 || self.waist <= 0.0 || self.mass <= 0.0 {
            return invalid("wavelength, waist and mass must be positive");
        }
        if self.v0 <= 0.0 || self.v1 <= 0.0 {
            return invalid("in-plane and vertical depths must be positive");
        }
        if self.v2 < 0.0 || self.v3 < 0.0 {
            return invalid("field depths must be non-negative");
        }
        if !(1..=3).contains(&self.direction) {
            return invalid(format!("displacement direction must be 1..=3, got {}", self.direction));
        }
        if self.dipolar_length < 0.0 {
            return invalid("dipolar length must be non-negative");
        }
        if let Some(a) = self.scattering_length {
            if !a.is_finite() {
                return invalid("scattering length must be finite");
            }
        }
        Ok(())
    }

    pub fn recoil_energy(&self) -> f64 {
        PLANCK * PLANCK / (2.0 * self.mass * self.wavelength * self.wavelength)
    }

    /// Nearest-neighbour distance `l = lambda / 3`.
    pub fn spacing(&self) -> f64 {
        self.wavelength / 3.0
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    /// `mu0 mu_d^2` from the dipolar length.
    pub fn dipolar_strength(&self) -> f64 {
        12.0 * PI * HBAR * HBAR * self.dipolar_length * BOHR_RADIUS / self.mass
    }

    /// Permanent moment in Bohr magnetons.
    pub fn magnetic_moment(&self) -> f64 {
        (self.dipolar_strength() / VACUUM_PERMEABILITY).sqrt() / constants::BOHR_MAGNETON
    }
}

/// Site centres: wells 1..=3 on the rim, well 4 at the origin.
pub fn site_positions(l: f64) -> [[f64; 2]; 4] {
    let h = 3f64.sqrt() / 2.0;
    [[0.0, l], [-h * l, -0.5 * l], [h * l, -0.5 * l], [0.0, 0.0]]
}

const BEAMS: [[f64; 2]; 3] = [[0.866_025_403_784_438_6, 0.5], [-0.866_025_403_784_438_6, 0.5], [0.0, 1.0]];

/// Harmonic data of one site.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrapFrequencies {
    /// In-plane angular frequency (rad/s).
    pub omega: f64,
    pub omega_z: f64,
    /// `sqrt(omega_z / omega)`.
    pub kappa: f64,
    /// Inverse Gaussian widths `m omega_s / (2 hbar)` for x, y, z.
    pub eta: [f64; 3],
}

pub fn trap_frequencies(cfg: &LatticeConfig) -> Result<TrapFrequencies> {
    cfg.validate()?;
    let er = cfg.recoil_energy();
    let l = cfg.spacing();
    let k = cfg.wavenumber();
    let omega = PI / l * (2.0 * cfg.v0 * er / (3.0 * cfg.mass)).sqrt();
    let omega_z = (2.0 * cfg.v1 * er * k * k / cfg.mass).sqrt();
    let eta = |w: f64| cfg.mass * w / (2.0 * HBAR);
    Ok(TrapFrequencies { omega, omega_z, kappa: (omega_z / omega).sqrt(), eta: [eta(omega), eta(omega), eta(omega_z)] })
}

/// Gradient, target offset and uniform shift of the external field.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldTerms {
    pub sigma: f64,
    pub nu: f64,
    pub lambda: f64,
}

fn displacement_vector(cfg: &LatticeConfig) -> [f64; 2] {
    let r = site_positions(1.0)[cfg.direction - 1];
    [cfg.displacement * r[0], cfg.displacement * r[1]]
}

/// Closed forms for `sigma`, `nu` and `Lambda`.
pub fn field_terms(cfg: &LatticeConfig) -> Result<FieldTerms> {
    let tf = trap_frequencies(cfg)?;
    let er = cfg.recoil_energy();
    let (v2, v3) = (cfg.v2 * er, cfg.v3 * er);
    let l = cfg.spacing();
    let eta = tf.eta[0];
    let w2 = cfg.waist * cfg.waist;
    let dl = cfg.displacement;
    let damp = (-2.0 * PI * PI / (9.0 * l * l * eta)).exp();
    Ok(FieldTerms {
        sigma: -9.0 / 8.0 * damp * v2 + l * l / w2 * v3,
        nu: 2.0 * l * dl / w2 * v3,
        lambda: 3.0 / 8.0 * (4.0 + damp) * v2 + v3 / w2 * (l * l + 2.0 * dl * dl + 1.0 / eta),
    })
}

fn external_potential(cfg: &LatticeConfig, d: [f64; 2], x: f64, y: f64) -> f64 {
    let er = cfg.recoil_energy();
    let k = cfg.wavenumber();
    let lattice: f64 = BEAMS.iter().map(|u| (k * (x * u[0] + y * u[1])).cos().powi(2)).sum();
    let r2 = (x - d[0]).powi(2) + (y - d[1]).powi(2);
    cfg.v2 * er * lattice + 2.0 * cfg.v3 * er / (cfg.waist * cfg.waist) * r2
}

/// `sigma_i = int |phi_i|^2 V_ext` for wells 1..=4 by tensor Gauss-Hermite.
pub fn site_fields_quadrature(cfg: &LatticeConfig, nodes: usize) -> Result<[f64; 4]> {
    let tf = trap_frequencies(cfg)?;
    let rule = gauss_hermite(nodes)?;
    let scale = 1.0 / (2.0 * tf.eta[0]).sqrt();
    let d = displacement_vector(cfg);
    let mut out = [0.0; 4];
    for (site, r) in site_positions(cfg.spacing()).iter().enumerate() {
        let mut acc = 0.0;
        for (xa, wa) in rule.nodes.iter().zip(&rule.weights) {
            for (xb, wb) in rule.nodes.iter().zip(&rule.weights) {
                acc += wa * wb * external_potential(cfg, d, r[0] + scale * xa, r[1] + scale * xb);
            }
        }
        out[site] = acc / PI;
    }
    Ok(out)
}

/// `sigma`, `nu`, `Lambda` recovered from quadrature of the four site fields.
pub fn field_terms_quadrature(cfg: &LatticeConfig) -> Result<FieldTerms> {
    let s = site_fields_quadrature(cfg, 96)?;
    let k = cfg.direction - 1;
    let (i, j) = match k {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    let edge_mean = (s[0] + s[1] + s[2]) / 3.0;
    Ok(FieldTerms {
        sigma: (edge_mean - s[3]) / 2.0,
        nu: ((s[i] + s[j]) / 2.0 - s[k]) / 3.0,
        lambda: (edge_mean + s[3]) / 2.0,
    })
}

/// Beyond this many relative-coordinate widths `1/sqrt(2 eta)` the pair
/// energy is taken from the point-dipole law.
pub const POINT_DIPOLE_WIDTHS: f64 = 5.0;

fn erfcx(x: f64) -> f64 {
    if x < 20.0 {
        (x * x).exp() * libm::erfc(x)
    } else {
        // asymptotic series, relative error below 1e-11 here
        let y = 1.0 / (2.0 * x * x);
        let s = 1.0 - y * (1.0 - 3.0 * y * (1.0 - 5.0 * y * (1.0 - 7.0 * y)));
        s / (x * PI.sqrt())
    }
}

/// Dipolar energy between two Gaussian densities with in-plane separation
/// `d`, from the momentum-space kernel reduced to one radial integral.
///
/// Dipoles point along z. Returns an error when the composite rule fails
/// to settle.
pub fn pair_energy_quadrature(cdd: f64, eta: [f64; 3], d: f64) -> Result<f64> {
    if (eta[0] - eta[1]).abs() > 1e-12 * eta[0] {
        return invalid("pair energy assumes isotropic in-plane widths");
    }
    let (e, b) = (eta[0], 1.0 / (4.0 * eta[2]));
    let kmax = (200.0 * e).sqrt();
    let root_b = b.sqrt();
    let f = |k: f64| {
        let bracket = 2.0 * (PI / b).sqrt() - 3.0 * PI * k * erfcx(k * root_b);
        k * libm::j0(k * d) * (-k * k / (4.0 * e)).exp() * bracket
    };
    let rule = gauss_legendre(20)?;
    let scale = composite(&rule, 0.0, kmax, 64, |k| f(k).abs());
    let mut panels = 16;
    let mut prev = composite(&rule, 0.0, kmax, panels, f);
    loop {
        panels *= 2;
        let cur = composite(&rule, 0.0, kmax, panels, f);
        if (cur - prev).abs() <= 1e-12 * scale {
            return Ok(cdd / 3.0 / (4.0 * PI * PI) * cur);
        }
        if panels >= 8192 {
            return Err(Error::Numerical(format!(
                "dipolar integral did not settle: d={d:.4e} m, last change {:.3e} against scale {scale:.3e}",
                (cur - prev).abs()
            )));
        }
        prev = cur;
    }
}

/// `mu0 mu_d^2 / (4 pi d^3)` for side-by-side dipoles.
pub fn point_dipole_energy(cdd: f64, d: f64) -> f64 {
    cdd / (4.0 * PI * d.powi(3))
}

/// Dipolar pair energy, switching to the point-dipole law for wide separations.
pub fn pair_energy(cdd: f64, eta: [f64; 3], d: f64) -> Result<f64> {
    if d * (2.0 * eta[0]).sqrt() > POINT_DIPOLE_WIDTHS {
        Ok(point_dipole_energy(cdd, d))
    } else {
        pair_energy_quadrature(cdd, eta, d)
    }
}

/// Contact and dipolar interaction energies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interactions {
    /// `int |phi|^4` times `g / a`, so that the contact energy is `a` times this.
    pub contact_per_length: f64,
    pub uc: f64,
    pub udip: f64,
    pub u_edge: f64,
    pub u_center: f64,
    /// Scattering length actually used, in Bohr radii.
    pub scattering_length: f64,
}

impl Interactions {
    pub fn u0(&self) -> f64 {
        self.uc + self.udip
    }
}

pub fn interaction_energies(cfg: &LatticeConfig) -> Result<Interactions> {
    let tf = trap_frequencies(cfg)?;
    let cdd = cfg.dipolar_strength();
    let l = cfg.spacing();
    let (udip, u_edge, u_center) = if cdd == 0.0 {
        (0.0, 0.0, 0.0)
    } else {
        (pair_energy(cdd, tf.eta, 0.0)?, pair_energy(cdd, tf.eta, 3f64.sqrt() * l)?, pair_energy(cdd, tf.eta, l)?)
    };
    let overlap: f64 = tf.eta.iter().map(|e| (e / PI).sqrt()).product();
    let per_length = 4.0 * PI * HBAR * HBAR / cfg.mass * BOHR_RADIUS * overlap;
    let a = cfg.scattering_length.unwrap_or((u_edge - udip) / per_length);
    Ok(Interactions {
        contact_per_length: per_length,
        uc: a * per_length,
        udip,
        u_edge,
        u_center,
        scattering_length: a,
    })
}

/// `J = -int phi_1 [-hbar^2 nabla^2 / 2m + V_trap] phi_4`, with the full
/// trigonometric lattice in the plane.
pub fn hopping_integral(cfg: &LatticeConfig) -> Result<f64> {
    let tf = trap_frequencies(cfg)?;
    let eta = tf.eta[0];
    let er = cfg.recoil_energy();
    let k = cfg.wavenumber();
    let [r1, _, _, r4] = site_positions(cfg.spacing());
    let mid = [0.5 * (r1[0] + r4[0]), 0.5 * (r1[1] + r4[1])];
    let d2 = (r1[0] - r4[0]).powi(2) + (r1[1] - r4[1]).powi(2);
    let phases = [PI / 3.0, PI / 3.0, 2.0 * PI / 3.0];
    let rule = gauss_hermite(96)?;
    let scale = 1.0 / (2.0 * eta).sqrt();
    let kin = HBAR * HBAR / (2.0 * cfg.mass);
    let mut acc = 0.0;
    for (xa, wa) in rule.nodes.iter().zip(&rule.weights) {
        for (xb, wb) in rule.nodes.iter().zip(&rule.weights) {
            let x = mid[0] + scale * xa;
            let y = mid[1] + scale * xb;
            let rho2 = (x - r4[0]).powi(2) + (y - r4[1]).powi(2);
            let lattice: f64 =
                BEAMS.iter().zip(phases).map(|(u, ph)| (k * (x * u[0] + y * u[1]) + ph).cos().powi(2)).sum();
            let local = -kin * (4.0 * eta * eta * rho2 - 4.0 * eta) + cfg.v0 * er * lattice;
            acc += wa * wb * local;
        }
    }
    let overlap = (-eta * d2 / 2.0).exp();
    let in_plane = overlap / PI * acc;
    Ok(-(in_plane + overlap * HBAR * tf.omega_z / 2.0))
}

/// Every Hubbard parameter of the star, in joules and as ratios to `J`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HubbardParams {
    pub u0: f64,
    pub u_edge: f64,
    pub u_center: f64,
    pub j: f64,
    pub sigma: f64,
    pub nu: f64,
    pub lambda: f64,
    /// `(U0 - U_center) / 4`.
    pub u: f64,
    pub uc: f64,
    pub udip: f64,
    pub scattering_length: f64,
    pub magnetic_moment: f64,
    pub trap: TrapFrequencies,
    pub u_over_j: f64,
    pub sigma_over_j: f64,
    pub nu_over_j: f64,
}

pub fn hubbard_params(cfg: &LatticeConfig) -> Result<HubbardParams> {
    let trap = trap_frequencies(cfg)?;
    let ft = field_terms(cfg)?;
    let it = interaction_energies(cfg)?;
    let j = hopping_integral(cfg)?;
    let u0 = it.u0();
    let u = (u0 - it.u_center) / 4.0;
    Ok(HubbardParams {
        u0,
        u_edge: it.u_edge,
        u_center: it.u_center,
        j,
        sigma: ft.sigma,
        nu: ft.nu,
        lambda: ft.lambda,
        u,
        uc: it.uc,
        udip: it.udip,
        scattering_length: it.scattering_length,
        magnetic_moment: cfg.magnetic_moment(),
        trap,
        u_over_j: u / j,
        sigma_over_j: ft.sigma / j,
        nu_over_j: ft.nu / j,
    })
}

/// Reduced parameters in units of `J`, and `|U_edge - U0| / |U0|`.
pub fn derive_reduced(hp: &HubbardParams, particles: u32) -> Result<(ReducedParams, f64)> {
    if hp.j == 0.0 || !hp.j.is_finite() {
        return Err(Error::SingularParameter(format!("hopping integral {} cannot set the unit", hp.j)));
    }
    let p = ReducedParams::new(hp.u / hp.j, hp.sigma / hp.j, 1.0, particles)?;
    let residual = if hp.u0 == 0.0 { hp.u_edge.abs() } else { ((hp.u_edge - hp.u0) / hp.u0).abs() };
    Ok((p, residual))
}

/// Full-model parameters in units of `J` with a symmetric field:
/// edge wells at `sigma + Lambda`, the center at `Lambda - sigma`.
pub fn full_params(hp: &HubbardParams) -> Result<FullParams> {
    if hp.j == 0.0 || !hp.j.is_finite() {
        return Err(Error::SingularParameter(format!("hopping integral {} cannot set the unit", hp.j)));
    }
    let edge = (hp.sigma + hp.lambda) / hp.j;
    let center = (hp.lambda - hp.sigma) / hp.j;
    Ok(FullParams {
        u0: hp.u0 / hp.j,
        u_edge: hp.u_edge / hp.j,
        u_center: hp.u_center / hp.j,
        j: 1.0,
        sigma: [edge, edge, edge, center],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry() {
        let l = 0.7;
        let r = site_positions(l);
        for i in 0..3 {
            assert!(((r[i][0].powi(2) + r[i][1].powi(2)).sqrt() - l).abs() < 1e-15);
            let j = (i + 1) % 3;
            let d = ((r[i][0] - r[j][0]).powi(2) + (r[i][1] - r[j][1]).powi(2)).sqrt();
            assert!((d - 3f64.sqrt() * l).abs() < 1e-14);
        }
    }

    #[test]
    fn sites_sit_at_equal_lattice_depth() {
        let k = 2.0 * PI / 3.0;
        let phases = [PI / 3.0, PI / 3.0, 2.0 * PI / 3.0];
        for r in site_positions(1.0) {
            let v: f64 =
                BEAMS.iter().zip(phases).map(|(u, ph)| (k * (r[0] * u[0] + r[1] * u[1]) + ph).cos().powi(2)).sum();
            assert!((v - 0.75).abs() < 1e-12);
        }
    }

    #[test]
    fn erfcx_is_continuous() {
        let lo = erfcx(20.0 - 1e-9);
        let hi = erfcx(20.0);
        assert!((lo - hi).abs() / hi < 1e-9);
    }

    #[test]
    fn reference_dipole_moment() {
        let mu = LatticeConfig::reference().magnetic_moment();
        assert!((mu - 9.93).abs() < 0.05, "{mu}");
    }
}
