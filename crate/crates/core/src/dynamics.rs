//! Exact propagation through a full eigendecomposition, population series,
//! return fidelity and level statistics.

use ndarray::{s, Array1, Array2};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fock::{FockBasis, FockState, LinearOperator, StateVector, MODES};
use crate::hamiltonian::{FieldConfig, ReducedParams};
use crate::modes::{ln_factorials, pair_expansion};

/// Eigenvalues (ascending) and orthonormal eigenvectors (columns).
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    basis: FockBasis,
    eigenvalues: Array1<f64>,
    eigenvectors: Array2<f64>,
}

impl SpectralDecomposition {
    pub fn basis(&self) -> &FockBasis {
        &self.basis
    }

    pub fn eigenvalues(&self) -> &Array1<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &Array2<f64> {
        &self.eigenvectors
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `V diag(E) V^T`.
    pub fn reconstruct(&self) -> Array2<f64> {
        let v = &self.eigenvectors;
        let scaled = v * &self.eigenvalues.view().insert_axis(ndarray::Axis(0));
        scaled.dot(&v.t())
    }

    /// Expansion coefficients `V^T psi`.
    pub fn coefficients(&self, psi: &StateVector) -> Result<Array1<C64>> {
        if psi.particles() != self.basis.particles() || psi.len() != self.dim() {
            return invalid(format!(
                "state with N={} (d={}) does not live in the N={} spectrum",
                psi.particles(),
                psi.len(),
                self.basis.particles()
            ));
        }
        let (re, im) = split(psi.amplitudes());
        let vt = self.eigenvectors.t();
        Ok(join(&vt.dot(&re), &vt.dot(&im)))
    }

    fn synthesize(&self, c: &Array1<C64>, t: f64) -> Array1<C64> {
        let phased: Array1<C64> =
            c.iter().zip(self.eigenvalues.iter()).map(|(ci, &e)| ci * C64::from_polar(1.0, -e * t)).collect();
        let (re, im) = split(&phased);
        join(&self.eigenvectors.dot(&re), &self.eigenvectors.dot(&im))
    }
}

fn split(z: &Array1<C64>) -> (Array1<f64>, Array1<f64>) {
    (z.mapv(|x| x.re), z.mapv(|x| x.im))
}

fn join(re: &Array1<f64>, im: &Array1<f64>) -> Array1<C64> {
    re.iter().zip(im).map(|(&a, &b)| C64::new(a, b)).collect()
}

/// Dense symmetric eigendecomposition.
pub fn diagonalize(h: &LinearOperator) -> Result<SpectralDecomposition> {
    if !h.is_hermitian() {
        return invalid(format!("operator is not Hermitian (asymmetry {:.3e})", h.max_asymmetry()));
    }
    let basis = FockBasis::new(h.particles());
    let (e, v) = h.matrix().eigh(UPLO::Lower).map_err(|err| Error::Numerical(format!("eigensolver failed: {err}")))?;
    Ok(SpectralDecomposition { basis, eigenvalues: e, eigenvectors: v })
}

/// Eigendecomposition of the reduced Hamiltonian, optionally with the
/// displaced field, through its conserved odd channel mode.
///
/// The odd combination of the two wells not targeted by the field (wells
/// 1 and 2 without a field) never couples to the center, so its occupation
/// labels independent blocks of at most `C(N+2, 2)` states. The result
/// agrees with [`diagonalize`] on the same operator up to the usual freedom
/// within degenerate eigenspaces.
pub fn diagonalize_reduced(
    basis: &FockBasis,
    p: &ReducedParams,
    field: Option<&FieldConfig>,
) -> Result<SpectralDecomposition> {
    p.validate()?;
    basis.check_same(p.particles)?;
    let (nu, k) = match field {
        Some(f) => {
            f.validate()?;
            (f.nu, f.target)
        }
        None => (0.0, 3),
    };
    let (i, j) = crate::hamiltonian::channel_of(k);
    let (i, j, k) = (i - 1, j - 1, k - 1);
    let n = p.particles;
    let lnf = ln_factorials(n);
    let d = basis.len();

    let blocks: Vec<(Array1<f64>, Array2<f64>)> = (0..=n)
        .into_par_iter()
        .map(|nu_odd| -> Result<_> {
            let rest = n - nu_odd;
            // rotated states (n_even, n_k, n_4) with sum `rest`
            let mut states = Vec::new();
            for ne in (0..=rest).rev() {
                for nk in (0..=rest - ne).rev() {
                    states.push([ne, nk, rest - ne - nk]);
                }
            }
            let b = states.len();
            let pos = |ne: u32, nk: u32| -> usize {
                // position inside `states` for fixed `rest`
                let r = rest - ne;
                (r * (r + 1) / 2 + (r - nk)) as usize
            };
            let mut h = Array2::<f64>::zeros((b, b));
            let s2 = std::f64::consts::SQRT_2;
            for (a, &[ne, nk, nc]) in states.iter().enumerate() {
                let dd = (nu_odd + ne + nk) as f64 - nc as f64;
                h[[a, a]] = p.u * dd * dd + p.sigma * dd + nu * ((nu_odd + ne) as f64 - 2.0 * nk as f64);
                if ne > 0 {
                    let t = pos(ne - 1, nk);
                    let v = -p.j * s2 * ((ne as f64) * (nc + 1) as f64).sqrt();
                    h[[t, a]] = v;
                    h[[a, t]] = v;
                }
                if nk > 0 {
                    let t = pos(ne, nk - 1);
                    let v = -p.j * ((nk as f64) * (nc + 1) as f64).sqrt();
                    h[[t, a]] = v;
                    h[[a, t]] = v;
                }
            }
            let (e, vb) =
                h.eigh(UPLO::Lower).map_err(|err| Error::Numerical(format!("block eigensolver failed: {err}")))?;
            // map the block eigenvectors back onto Fock states
            let mut out = Array2::<f64>::zeros((d, b));
            for (a, &[ne, nk, nc]) in states.iter().enumerate() {
                let amps = pair_expansion(ne, nu_odd, &lnf);
                let row = vb.row(a);
                for (ni, &amp) in amps.iter().enumerate() {
                    if amp == 0.0 {
                        continue;
                    }
                    let mut occ = [0u32; MODES];
                    occ[i] = ni as u32;
                    occ[j] = ne + nu_odd - ni as u32;
                    occ[k] = nk;
                    occ[3] = nc;
                    let idx = basis.index(&FockState(occ)).expect("rotated state stays in the basis");
                    out.row_mut(idx).scaled_add(amp, &row);
                }
            }
            Ok((e, out))
        })
        .collect::<Result<_>>()?;

    let mut order: Vec<(f64, usize, usize)> = blocks
        .iter()
        .enumerate()
        .flat_map(|(bi, (e, _))| e.iter().enumerate().map(move |(c, &x)| (x, bi, c)))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut eigenvalues = Array1::zeros(d);
    let mut eigenvectors = Array2::zeros((d, d));
    for (col, &(e, bi, c)) in order.iter().enumerate() {
        eigenvalues[col] = e;
        eigenvectors.slice_mut(s![.., col]).assign(&blocks[bi].1.slice(s![.., c]));
    }
    Ok(SpectralDecomposition { basis: basis.clone(), eigenvalues, eigenvectors })
}

/// `exp(-i H t) psi0`.
pub fn evolve(psi0: &StateVector, spec: &SpectralDecomposition, t: f64) -> Result<StateVector> {
    if !t.is_finite() {
        return invalid(format!("evolution time must be finite, got {t}"));
    }
    let c = spec.coefficients(psi0)?;
    Ok(StateVector::from_raw(psi0.particles(), spec.synthesize(&c, t)))
}

/// Populations `<N_1..N_4>` sampled on a time grid.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub populations: [Vec<f64>; MODES],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fidelity_to_initial: Option<Vec<f64>>,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn push(&mut self, t: f64, pops: [f64; MODES]) {
        self.times.push(t);
        for (col, x) in self.populations.iter_mut().zip(pops) {
            col.push(x);
        }
    }

    pub fn sample(&self, i: usize) -> [f64; MODES] {
        std::array::from_fn(|s| self.populations[s][i])
    }

    pub fn last(&self) -> Option<[f64; MODES]> {
        (!self.is_empty()).then(|| self.sample(self.len() - 1))
    }

    /// Append `other`, dropping its first sample when it repeats our last time.
    pub fn extend(&mut self, other: &TimeSeries) {
        let skip = match (self.times.last(), other.times.first()) {
            (Some(a), Some(b)) if a == b => 1,
            _ => 0,
        };
        for i in skip..other.len() {
            self.push(other.times[i], other.sample(i));
        }
        if let (Some(f), Some(g)) = (&mut self.fidelity_to_initial, &other.fidelity_to_initial) {
            f.extend_from_slice(&g[skip..]);
        }
    }

    /// `max_{t, j} |a_j(t) - b_j(t)|` over matching samples.
    pub fn max_abs_deviation(&self, other: &TimeSeries) -> Result<f64> {
        if self.times != other.times {
            return invalid("time grids differ");
        }
        Ok(self
            .populations
            .iter()
            .zip(&other.populations)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max))
    }
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.iter().any(|t| !t.is_finite()) {
        return invalid("time grid must be finite");
    }
    if t_grid.windows(2).any(|w| w[1] < w[0]) {
        return invalid("time grid must be sorted");
    }
    Ok(())
}

/// Populations along `t_grid`, optionally with `|<psi0|psi(t)>|`.
pub fn population_series(
    psi0: &StateVector,
    spec: &SpectralDecomposition,
    t_grid: &[f64],
    with_fidelity: bool,
) -> Result<TimeSeries> {
    check_grid(t_grid)?;
    let c = spec.coefficients(psi0)?;
    let weights: Array1<f64> = c.mapv(|z| z.norm_sqr());
    let occ: Vec<[f64; MODES]> = spec.basis.states().iter().map(|s| s.0.map(|x| x as f64)).collect();
    let rows: Vec<([f64; MODES], f64)> = t_grid
        .par_iter()
        .map(|&t| {
            let psi = spec.synthesize(&c, t);
            let mut pops = [0.0; MODES];
            for (z, o) in psi.iter().zip(&occ) {
                let w = z.norm_sqr();
                for s in 0..MODES {
                    pops[s] += w * o[s];
                }
            }
            let f = if with_fidelity { return_amplitude(&weights, spec, t) } else { 0.0 };
            (pops, f)
        })
        .collect();
    let mut out = TimeSeries::default();
    for (&t, (pops, _)) in t_grid.iter().zip(&rows) {
        out.push(t, *pops);
    }
    if with_fidelity {
        out.fidelity_to_initial = Some(rows.iter().map(|r| r.1).collect());
    }
    Ok(out)
}

fn return_amplitude(weights: &Array1<f64>, spec: &SpectralDecomposition, t: f64) -> f64 {
    let z: C64 = weights.iter().zip(spec.eigenvalues.iter()).map(|(&w, &e)| C64::from_polar(w, -e * t)).sum();
    z.norm()
}

/// `|<psi0| exp(-i H t) |psi0>|`.
pub fn fidelity(psi0: &StateVector, spec: &SpectralDecomposition, t: f64) -> Result<f64> {
    let c = spec.coefficients(psi0)?;
    Ok(return_amplitude(&c.mapv(|z| z.norm_sqr()), spec, t))
}

/// One point of a spectrum scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    pub u: f64,
    /// `U N / J`.
    pub un_over_j: f64,
    pub eigenvalues: Vec<f64>,
}

/// Spectrum of the reduced Hamiltonian over a grid of interaction strengths.
pub fn spectrum_scan(p_template: &ReducedParams, u_grid: &[f64]) -> Result<Vec<SpectrumPoint>> {
    if u_grid.iter().any(|u| !u.is_finite()) {
        return invalid("interaction grid must be finite");
    }
    let basis = FockBasis::new(p_template.particles);
    u_grid
        .par_iter()
        .map(|&u| {
            let p = p_template.with_u(u);
            let spec = diagonalize_reduced(&basis, &p, None)?;
            Ok(SpectrumPoint { u, un_over_j: u * p.particles as f64 / p.j, eigenvalues: spec.eigenvalues.to_vec() })
        })
        .collect()
}

/// Collapse levels closer than `tol` (relative to `max(1, |E|)`) into one.
pub fn distinct_levels(eigenvalues: &[f64], tol: f64) -> Vec<f64> {
    let mut sorted = eigenvalues.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::new();
    for e in sorted {
        match out.last() {
            Some(&prev) if (e - prev).abs() <= tol * prev.abs().max(1.0) => {}
            _ => out.push(e),
        }
    }
    out
}

/// Knobs of the band heuristic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandOptions {
    /// A neighbor joins the band while its gap stays below this multiple of
    /// the median in-band gap.
    pub gap_factor: f64,
    /// Relative tolerance for treating levels as degenerate.
    pub merge_tol: f64,
}

impl Default for BandOptions {
    fn default() -> Self {
        Self { gap_factor: 10.0, merge_tol: 1e-8 }
    }
}

/// A run of adjacent distinct levels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub levels: Vec<f64>,
}

impl Band {
    pub fn lower(&self) -> f64 {
        self.levels[0]
    }

    pub fn upper(&self) -> f64 {
        *self.levels.last().unwrap()
    }
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    }
}

/// The band around the level closest to `e_center`.
pub fn detect_band(eigenvalues: &[f64], e_center: f64, opts: &BandOptions) -> Result<Band> {
    let lv = distinct_levels(eigenvalues, opts.merge_tol);
    if lv.len() < 3 {
        return Err(Error::InsufficientData(format!("{} distinct levels", lv.len())));
    }
    let seed = lv
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - e_center).abs().total_cmp(&(b.1 - e_center).abs()))
        .map(|(i, _)| i)
        .unwrap();
    let (mut lo, mut hi) = (seed, seed);
    // seed the band with the closer neighbour
    let left = (seed > 0).then(|| lv[seed] - lv[seed - 1]);
    let right = (seed + 1 < lv.len()).then(|| lv[seed + 1] - lv[seed]);
    match (left, right) {
        (Some(l), Some(r)) if l < r => lo -= 1,
        (Some(_), None) => lo -= 1,
        _ => hi += 1,
    }
    loop {
        let gaps: Vec<f64> = lv[lo..=hi].windows(2).map(|w| w[1] - w[0]).collect();
        let limit = opts.gap_factor * median(&gaps);
        let gl = (lo > 0).then(|| lv[lo] - lv[lo - 1]);
        let gr = (hi + 1 < lv.len()).then(|| lv[hi + 1] - lv[hi]);
        match (gl.filter(|&g| g < limit), gr.filter(|&g| g < limit)) {
            (Some(a), Some(b)) => {
                if a <= b {
                    lo -= 1
                } else {
                    hi += 1
                }
            }
            (Some(_), None) => lo -= 1,
            (None, Some(_)) => hi += 1,
            (None, None) => break,
        }
    }
    Ok(Band { levels: lv[lo..=hi].to_vec() })
}

/// Mean and standard deviation of adjacent gaps between the distinct
/// levels in `[e_center - window, e_center + window]`.
pub fn band_spacing_stats(eigenvalues: &[f64], e_center: f64, window: f64, merge_tol: f64) -> Result<(f64, f64)> {
    if !(window > 0.0) {
        return invalid(format!("window must be positive, got {window}"));
    }
    let lv: Vec<f64> =
        distinct_levels(eigenvalues, merge_tol).into_iter().filter(|e| (e - e_center).abs() <= window).collect();
    if lv.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} distinct levels in [{}, {}]",
            lv.len(),
            e_center - window,
            e_center + window
        )));
    }
    let gaps: Vec<f64> = lv.windows(2).map(|w| w[1] - w[0]).collect();
    let n = gaps.len() as f64;
    let mean = gaps.iter().sum::<f64>() / n;
    let var = gaps.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / n;
    Ok((mean, var.sqrt()))
}

/// Gap statistics of a detected band: `(mean_gap, gap_std)`.
pub fn band_stats(band: &Band) -> Result<(f64, f64)> {
    let mid = 0.5 * (band.lower() + band.upper());
    let half = 0.5 * (band.upper() - band.lower());
    band_spacing_stats(&band.levels, mid, half * (1.0 + 1e-12) + 1e-300, 0.0)
}
