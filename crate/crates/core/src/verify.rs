//! The acceptance suite. Each criterion yields one or more checks with the
//! measured value and the gate it was held to.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analytic::{self, EffectiveModeDecomposition};
use crate::dynamics::{self, BandOptions};
use crate::error::Result;
use crate::fock::{FockBasis, FockState, StateVector};
use crate::hamiltonian::{
    build_charge_q, build_charge_qtilde, build_full_ebhm, build_reduced, commutator_norm, FieldConfig, FullParams,
    ReducedParams,
};
use crate::lattice::{self, LatticeConfig};
use crate::protocols;

/// Outcome of one gated measurement.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub criterion: u8,
    pub label: String,
    pub passed: bool,
    pub measured: f64,
    pub gate: String,
}

impl Check {
    fn new(criterion: u8, label: impl Into<String>, measured: f64, passed: bool, gate: impl Into<String>) -> Self {
        Self { criterion, label: label.into(), passed, measured, gate: gate.into() }
    }

    fn below(criterion: u8, label: impl Into<String>, measured: f64, limit: f64) -> Self {
        Self::new(criterion, label, measured, measured < limit, format!("< {limit:e}"))
    }

    fn above(criterion: u8, label: impl Into<String>, measured: f64, limit: f64) -> Self {
        Self::new(criterion, label, measured, measured > limit, format!("> {limit}"))
    }

    /// `PASS [3] label: measured (gate)`.
    pub fn line(&self) -> String {
        format!(
            "{} [{}] {}: {:.6e} ({})",
            if self.passed { "PASS" } else { "FAIL" },
            self.criterion,
            self.label,
            self.measured,
            self.gate
        )
    }
}

const SEED: u64 = 0x5eed_2024;

fn table_params(particles: u32) -> ReducedParams {
    ReducedParams { u: 0.51, sigma: 1.56, j: 1.0, particles }
}

fn table_field() -> FieldConfig {
    FieldConfig { nu: 1.05, target: 3 }
}

/// Conserved charges of the reduced model and their breaking in the full one.
pub fn criterion_1() -> Result<Vec<Check>> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    let mut weakest_break = f64::INFINITY;
    for n in 2..=10u32 {
        let basis = FockBasis::new(n);
        let q = build_charge_q(&basis);
        let qt = build_charge_qtilde(&basis);
        worst = worst.max(commutator_norm(&q, &qt)?);
        for _ in 0..20 {
            let p = ReducedParams::new(rng.gen_range(-2.0..2.0), rng.gen_range(-5.0..5.0), 1.0, n)?;
            let h = build_reduced(&basis, &p)?;
            worst = worst.max(commutator_norm(&h, &q)?).max(commutator_norm(&h, &qt)?);
        }
        let u0 = rng.gen_range(0.5..2.0);
        let full = FullParams { u0, u_edge: u0 + 0.3, u_center: u0 - 1.0, j: 1.0, sigma: [0.4, 0.4, 0.4, -0.2] };
        let hf = build_full_ebhm(&basis, &full)?;
        weakest_break = weakest_break.min(commutator_norm(&hf, &q)?);
    }
    let secs = start.elapsed().as_secs_f64();
    Ok(vec![
        Check::below(1, "max commutator [H,Q], [H,Q~], [Q,Q~], N=2..10", worst, 1e-10),
        Check::above(1, "min ||[H_full,Q]|| with U_edge != U0", weakest_break, 1e-3),
        Check::below(1, "runtime (s)", secs, 30.0),
    ])
}

/// Full model on the integrable manifold against the reduced one.
pub fn criterion_2() -> Result<Vec<Check>> {
    use ndarray_linalg::{EigValsh, UPLO};
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let mut worst: f64 = 0.0;
    for n in 0..=8u32 {
        let basis = FockBasis::new(n);
        for _ in 0..3 {
            let p = ReducedParams::new(rng.gen_range(-1.0..1.0), rng.gen_range(-3.0..3.0), 1.0, n)?;
            let full = FullParams::integrable(&p, rng.gen_range(0.0..3.0), rng.gen_range(-2.0..2.0));
            let ef = build_full_ebhm(&basis, &full)?.matrix().eigvalsh(UPLO::Lower).map_err(num)?;
            let er = build_reduced(&basis, &p)?.matrix().eigvalsh(UPLO::Lower).map_err(num)?;
            let c = full.reduction_constant(n);
            for (a, b) in ef.iter().zip(er.iter()) {
                worst = worst.max((a - (b + c)).abs());
            }
        }
    }
    Ok(vec![Check::below(2, "max |E_full - (E_reduced + const)|, N<=8", worst, 1e-9)])
}

fn num(e: ndarray_linalg::error::LinalgError) -> crate::Error {
    crate::Error::Numerical(e.to_string())
}

/// Resonant oscillation from (14,2,0,0) against the closed form.
pub fn criterion_3() -> Result<Vec<Check>> {
    let start = Instant::now();
    let p = table_params(16);
    let ini = FockState([14, 2, 0, 0]);
    let basis = FockBasis::new(16);
    let spec = dynamics::diagonalize_reduced(&basis, &p, None)?;
    let period = analytic::resonant_period(&p, 0)?;
    let grid = protocols::linspace(0.0, period, 401);
    let psi = StateVector::fock(&basis, &ini)?;
    let ts = dynamics::population_series(&psi, &spec, &grid, false)?;
    let mut dev: f64 = 0.0;
    let mut drift: f64 = 0.0;
    for (i, &t) in grid.iter().enumerate() {
        let a = analytic::populations_resonant(&ini, &p, t)?.populations;
        let s = ts.sample(i);
        for j in 0..3 {
            dev = dev.max((a[j] - s[j]).abs());
        }
        drift = drift.max((s[3] - ini.0[3] as f64).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    let n = 16.0;
    Ok(vec![
        Check::below(3, "max |<N_j> - closed form| over one period", dev, 0.05 * n),
        Check::below(3, "max |<N_4>(t) - n_4|", drift, 1e-3 * n),
        Check::below(3, "runtime (s)", secs, 10.0),
    ])
}

/// Return fidelity across the gradient scan.
pub fn criterion_4() -> Result<Vec<Check>> {
    let p = table_params(16);
    let ini = FockState([14, 2, 0, 0]);
    let basis = FockBasis::new(16);
    let f_low = protocols::fidelity_at(&p.with_sigma(1.57), &basis, &ini)?;
    let f_high = protocols::fidelity_at(&p.with_sigma(15.3), &basis, &ini)?;
    let f_off = protocols::fidelity_at(&p.with_sigma(-10.0), &basis, &ini)?;
    let start = Instant::now();
    let scan = protocols::sigma_scan_fidelity(&p, &protocols::linspace(-20.0, 20.0, 200), &ini)?;
    let secs = start.elapsed().as_secs_f64();
    let plateau = scan.minimum_over(1.57, 15.3).unwrap_or(f64::INFINITY).min(f_low).min(f_high);
    Ok(vec![
        Check::above(4, "F at sigma/J = 1.57", f_low, 0.99),
        Check::above(4, "F at sigma/J = 15.3", f_high, 0.99),
        Check::new(
            4,
            format!("plateau min {plateau:.4} - F at sigma/J = -10"),
            plateau - f_off,
            plateau - f_off >= 0.05,
            ">= 0.05",
        ),
        Check::below(4, "200-point scan runtime (s)", secs, 60.0),
    ])
}

/// Single-source routing.
pub fn criterion_5() -> Result<Vec<Check>> {
    let p = table_params(16);
    let f = table_field();
    let mut out = Vec::new();
    for (k, what) in
        [(2, "efficiency into well 3, k=2"), (3, "efficiency into well 2, k=3"), (1, "source retention, k=1")]
    {
        let rep = protocols::demux_1to2(16, 0, k, &p, &f, 3)?;
        out.push(Check::above(5, what, rep.metric("efficiency").unwrap(), 0.95));
    }
    Ok(out)
}

/// Two-source multiplexer.
pub fn criterion_6() -> Result<Vec<Check>> {
    let p = table_params(16);
    let f = table_field();
    let mut out = Vec::new();
    for (k, want) in [(2, 12.0), (1, 4.0)] {
        let rep = protocols::mux_2to1(12, 4, 0, k, &p, &f, 3)?;
        let got = rep.metric("drain_final").unwrap();
        out.push(Check::new(
            6,
            format!("<N_3>(tau) for k={k}"),
            got,
            (got - want).abs() <= 0.6,
            format!("{want} +- 0.6"),
        ));
    }
    Ok(out)
}

/// Imbalance law of the splitter.
pub fn criterion_7() -> Result<Vec<Check>> {
    let p = table_params(16);
    let f = table_field();
    let qs: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    let mut out = Vec::new();
    for k in [2, 3] {
        let sweep = protocols::amplitude_demux_sweep(16, 0, k, &qs, &p, &f)?;
        let dev = sweep.iter().map(|r| (r.imbalance_num - r.imbalance_ana).abs()).fold(0.0, f64::max);
        out.push(Check::below(7, format!("max imbalance deviation, k={k}"), dev, 0.05));
    }
    Ok(out)
}

/// Two-stage multiplexer readout.
pub fn criterion_8() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let f = FieldConfig { nu: crate::config::MUX_FIELD_NU, target: 3 };
    for sigma in [1.56, 15.3] {
        let p = table_params(16).with_sigma(sigma);
        for (q, k) in [(0.25, 1), (0.25, 2), (2.0 / 3.0, 1), (2.0 / 3.0, 2)] {
            let fk = f.retarget(k)?;
            let tau = analytic::tau(analytic::zeta(&p, &fk, 0)?)?;
            let grid = protocols::linspace(0.0, 2.0 * tau, 201);
            let rep = protocols::amplitude_mux(16, 0, q, k, &p, &f, &grid)?;
            let tag = format!("sigma/J={sigma}, q={q:.3}, k={k}");
            out.push(Check::below(
                8,
                format!("readout deviation, {tag}"),
                rep.metric("readout_deviation").unwrap(),
                0.05 * 16.0,
            ));
            let got = rep.metric("channel_amplitude").unwrap();
            let want = rep.metric("channel_amplitude_predicted").unwrap();
            let rel = (got - want).abs() / want;
            out.push(Check::below(8, format!("channel amplitude rel. error, {tag}"), rel, 0.10));
        }
    }
    Ok(out)
}

/// Mode sums against the closed forms.
pub fn criterion_9() -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 9);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let occ = [0; 4].map(|_| rng.gen_range(0..8u32));
        let ini = FockState(occ);
        let n = ini.total();
        let p = ReducedParams::new(rng.gen_range(0.1..1.0), rng.gen_range(0.5..20.0), 1.0, n)?;
        let t = rng.gen_range(0.0..200.0);
        let je = analytic::jeff(&p, occ[3])?;
        let sym = EffectiveModeDecomposition::symmetric(je);
        let res = analytic::populations_resonant(&ini, &p, t)?.populations;
        let k = rng.gen_range(1..=3usize);
        let f = FieldConfig::new(rng.gen_range(0.5..4.0) * if rng.gen() { 1.0 } else { -1.0 }, k)?;
        let z = analytic::zeta(&p, &f, occ[3])?;
        let brk = EffectiveModeDecomposition::broken(k, f.nu, z)?;
        let bro = analytic::populations_broken(&ini, &p, &f, t)?.populations;
        for j in 1..=4 {
            worst = worst.max((analytic::mode_sum_expectation(&ini, &sym, t, j)? - res[j - 1]).abs());
            worst = worst.max((analytic::mode_sum_expectation(&ini, &brk, t, j)? - bro[j - 1]).abs());
        }
    }
    Ok(vec![Check::below(9, "max |mode sum - closed form|, 100 inputs", worst, 1e-10)])
}

/// Level statistics of the band holding <H> for (14,2,0,0).
pub fn criterion_10() -> Result<Vec<Check>> {
    let p = table_params(16);
    let basis = FockBasis::new(16);
    let spec = dynamics::diagonalize_reduced(&basis, &p, None)?;
    let h = build_reduced(&basis, &p)?;
    let psi = StateVector::fock(&basis, &FockState([14, 2, 0, 0]))?;
    let e = crate::fock::expectation(&h, &psi)?;
    let band = dynamics::detect_band(spec.eigenvalues().as_slice().unwrap(), e, &BandOptions::default())?;
    let (mean, std) = dynamics::band_stats(&band)?;
    let three_jeff = 3.0 * analytic::jeff(&p, 0)?.abs();
    Ok(vec![
        Check::below(10, format!("gap std/mean over {} levels", band.levels.len()), std / mean, 0.15),
        Check::below(10, "|mean gap - 3 J_eff| / 3 J_eff", (mean - three_jeff).abs() / three_jeff, 0.25),
    ])
}

fn random_lattice(rng: &mut ChaCha8Rng) -> LatticeConfig {
    let mut c = LatticeConfig::reference();
    c.wavelength = rng.gen_range(500e-9..1600e-9);
    c.v0 = rng.gen_range(20.0..150.0);
    c.v1 = c.v0 * rng.gen_range(0.3..1.5);
    c.v2 = c.v0 * rng.gen_range(0.0..0.002);
    c.v3 = c.v0 * rng.gen_range(0.001..0.02);
    c.waist = rng.gen_range(1e-6..5e-6);
    let sign = if rng.gen() { 1.0 } else { -1.0 };
    c.displacement = sign * rng.gen_range(0.1..0.6) * c.spacing();
    c.direction = rng.gen_range(1..=3);
    c
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

/// Lattice closed forms, trap frequency and the field ratio.
pub fn criterion_11() -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 11);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let c = random_lattice(&mut rng);
        let a = lattice::field_terms(&c)?;
        let b = lattice::field_terms_quadrature(&c)?;
        worst = worst.max(rel(a.sigma, b.sigma)).max(rel(a.nu, b.nu)).max(rel(a.lambda, b.lambda));
    }
    let reference = LatticeConfig::reference();
    let tf = lattice::trap_frequencies(&reference)?;
    let khz = tf.omega / (2.0 * PI) / 1e3;
    let ft = lattice::field_terms(&reference)?;
    let ratio = ft.sigma / ft.nu;
    let want = 1.56 / 1.05;
    Ok(vec![
        Check::below(11, "max relative closed form vs quadrature, 20 configs", worst, 1e-6),
        Check::below(11, format!("omega/2pi = {khz:.3} kHz, relative offset from 15.62"), rel(khz, 15.62), 0.02),
        Check::below(11, format!("sigma/nu = {ratio:.4}, relative offset from 1.56/1.05"), rel(ratio, want), 0.15),
    ])
}

/// Table values that the Gaussian-orbital approximation is only expected
/// to reach within a factor of two. Reported, never gating.
pub fn lattice_diagnostics() -> Result<Vec<Check>> {
    let hp = lattice::hubbard_params(&LatticeConfig::reference())?;
    let within2 = |x: f64, want: f64| x / want > 0.5 && x / want < 2.0;
    Ok([("U/J", hp.u_over_j, 0.51), ("sigma/J", hp.sigma_over_j, 1.56), ("nu/J", hp.nu_over_j, 1.05)]
        .into_iter()
        .map(|(name, x, want)| Check::new(11, format!("diagnostic {name} vs {want}"), x, within2(x, want), "factor 2"))
        .collect())
}

pub type CriterionFn = fn() -> Result<Vec<Check>>;

pub const CRITERIA: [(u8, CriterionFn); 11] = [
    (1, criterion_1),
    (2, criterion_2),
    (3, criterion_3),
    (4, criterion_4),
    (5, criterion_5),
    (6, criterion_6),
    (7, criterion_7),
    (8, criterion_8),
    (9, criterion_9),
    (10, criterion_10),
    (11, criterion_11),
];

/// Run the selected criteria (all when `only` is empty).
pub fn run(only: &[u8]) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for (id, f) in CRITERIA {
        if only.is_empty() || only.contains(&id) {
            out.extend(f()?);
        }
    }
    Ok(out)
}
