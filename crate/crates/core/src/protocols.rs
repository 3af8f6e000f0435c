//! Piecewise-constant field schedules: routing, multiplexing, amplitude
//! control and the fidelity scan over the gradient.
//!
//! Switching the field keeps the state vector and swaps the Hamiltonian.
//! Populations are reported as absolute occupations.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{self, CoherentPairState};
use crate::dynamics::{self, diagonalize_reduced, SpectralDecomposition, TimeSeries};
use crate::error::{invalid, Error, Result};
use crate::fock::{FockBasis, FockState, StateVector, MODES};
use crate::hamiltonian::{FieldConfig, ReducedParams};

/// One constant-Hamiltonian segment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub params: ReducedParams,
    pub field: Option<FieldConfig>,
    pub duration: f64,
    /// Sample times relative to the stage start; an even grid when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_times: Option<Vec<f64>>,
}

impl Stage {
    pub fn new(params: ReducedParams, field: Option<FieldConfig>, duration: f64) -> Result<Self> {
        let s = Self { params, field, duration, sample_times: None };
        s.validate()?;
        Ok(s)
    }

    /// A stage under `field` lasting `multiple` transfer times, with the
    /// transfer time taken from this stage's own parameters.
    pub fn transfer(params: ReducedParams, field: FieldConfig, n4: u32, multiple: f64) -> Result<Self> {
        let t = analytic::tau(analytic::zeta(&params, &field, n4)?)?;
        Self::new(params, Some(field), multiple * t)
    }

    /// A field-free stage lasting `multiple` resonant periods.
    pub fn resonant(params: ReducedParams, n4: u32, multiple: f64) -> Result<Self> {
        Self::new(params, None, multiple * analytic::resonant_period(&params, n4)?)
    }

    pub fn with_sample_times(mut self, times: Vec<f64>) -> Result<Self> {
        self.sample_times = Some(times);
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if let Some(f) = &self.field {
            f.validate()?;
        }
        if !(self.duration >= 0.0) || !self.duration.is_finite() {
            return invalid(format!("stage duration must be finite and >= 0, got {}", self.duration));
        }
        if let Some(ts) = &self.sample_times {
            if ts.iter().any(|&t| !(0.0..=self.duration).contains(&t)) {
                return invalid("stage sample times must lie within the stage");
            }
            if ts.windows(2).any(|w| w[1] < w[0]) {
                return invalid("stage sample times must be sorted");
            }
        }
        Ok(())
    }

    fn times(&self, samples: usize) -> Vec<f64> {
        if let Some(ts) = &self.sample_times {
            return ts.clone();
        }
        if self.duration == 0.0 || samples < 2 {
            return vec![0.0];
        }
        let n = samples - 1;
        (0..=n).map(|i| self.duration * i as f64 / n as f64).collect()
    }
}

/// Initial condition of a schedule.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialState {
    Fock(FockState),
    CoherentPair(CoherentPairState),
}

impl InitialState {
    pub fn total(&self) -> u32 {
        match self {
            Self::Fock(s) => s.total(),
            Self::CoherentPair(c) => c.total(),
        }
    }

    fn prepare(&self, basis: &FockBasis) -> Result<StateVector> {
        match self {
            Self::Fock(s) => StateVector::fock(basis, s),
            Self::CoherentPair(c) => c.expand_to_fock(basis),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    pub initial_state: InitialState,
    pub stages: Vec<Stage>,
    /// Even-grid samples per stage, endpoints included.
    pub samples_per_stage: usize,
    /// Absolute time of the first stage's start.
    pub start_time: f64,
}

impl Schedule {
    pub fn new(initial_state: InitialState, stages: Vec<Stage>, samples_per_stage: usize) -> Result<Self> {
        let s = Self { initial_state, stages, samples_per_stage, start_time: 0.0 };
        s.validate()?;
        Ok(s)
    }

    pub fn starting_at(mut self, t0: f64) -> Self {
        self.start_time = t0;
        self
    }

    pub fn total_duration(&self) -> f64 {
        self.stages.iter().map(|s| s.duration).sum()
    }

    fn validate(&self) -> Result<()> {
        if self.stages.is_empty() {
            return invalid("schedule needs at least one stage");
        }
        let n = self.initial_state.total();
        for s in &self.stages {
            s.validate()?;
            if s.params.particles != n {
                return invalid(format!("stage parameters assume N={}, initial state holds {n}", s.params.particles));
            }
        }
        if !self.start_time.is_finite() {
            return invalid("schedule start time must be finite");
        }
        Ok(())
    }
}

/// Outcome of a protocol run.
#[derive(Clone, Debug, Serialize)]
pub struct ProtocolReport {
    pub protocol: String,
    pub series: TimeSeries,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub analytic_series: Option<TimeSeries>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_abs_deviation: Option<f64>,
    /// Absolute times at which the field switches, including both ends.
    pub stage_boundaries: Vec<f64>,
    /// Protocol-specific figures of merit.
    pub metrics: BTreeMap<String, f64>,
    #[serde(skip)]
    pub final_state: StateVector,
}

impl ProtocolReport {
    pub fn metric(&self, key: &str) -> Option<f64> {
        self.metrics.get(key).copied()
    }

    fn attach_analytic(&mut self, analytic: TimeSeries) -> Result<()> {
        self.max_abs_deviation = Some(self.series.max_abs_deviation(&analytic)?);
        self.analytic_series = Some(analytic);
        Ok(())
    }
}

type CacheKey = [u64; 5];

fn cache_key(p: &ReducedParams, f: Option<&FieldConfig>) -> CacheKey {
    let (nu, k) = f.map_or((0.0, 0), |f| (f.nu, f.target as u64));
    [p.u.to_bits(), p.sigma.to_bits(), p.j.to_bits(), nu.to_bits(), k]
}

/// Exact stage-by-stage evolution; each distinct stage Hamiltonian is
/// diagonalized once.
pub fn run_schedule(s: &Schedule, basis: &FockBasis) -> Result<ProtocolReport> {
    s.validate()?;
    basis.check_same(s.initial_state.total())?;
    let mut cache: HashMap<CacheKey, SpectralDecomposition> = HashMap::new();
    let mut psi = s.initial_state.prepare(basis)?;
    let mut series = TimeSeries::default();
    let mut t0 = s.start_time;
    let mut boundaries = vec![t0];
    for stage in &s.stages {
        let key = cache_key(&stage.params, stage.field.as_ref());
        if !cache.contains_key(&key) {
            let spec = diagonalize_reduced(basis, &stage.params, stage.field.as_ref())?;
            cache.insert(key, spec);
        }
        let spec = &cache[&key];
        let rel = stage.times(s.samples_per_stage);
        let mut part = dynamics::population_series(&psi, spec, &rel, false)?;
        part.times.iter_mut().for_each(|t| *t += t0);
        series.extend(&part);
        psi = dynamics::evolve(&psi, spec, stage.duration)?;
        t0 += stage.duration;
        boundaries.push(t0);
    }
    Ok(ProtocolReport {
        protocol: "schedule".into(),
        series,
        analytic_series: None,
        max_abs_deviation: None,
        stage_boundaries: boundaries,
        metrics: BTreeMap::new(),
        final_state: psi,
    })
}

fn sized(p: &ReducedParams, n: u32) -> ReducedParams {
    ReducedParams { particles: n, ..*p }
}

fn analytic_series<F>(times: &[f64], mut f: F) -> Result<TimeSeries>
where
    F: FnMut(f64) -> Result<[f64; MODES]>,
{
    let mut out = TimeSeries::default();
    for &t in times {
        out.push(t, f(t)?);
    }
    Ok(out)
}

/// One source, two drains: `(n1, 0, 0, n4)` under the field aimed at `k`
/// for one transfer time. `k = 1` runs the control where the source holds.
///
/// `p.particles` is replaced by `n1 + n4`; `f.target` by `k`.
pub fn demux_1to2(
    n1: u32,
    n4: u32,
    k: usize,
    p: &ReducedParams,
    f: &FieldConfig,
    samples: usize,
) -> Result<ProtocolReport> {
    if !(1..=3).contains(&k) {
        return invalid(format!("demultiplexer target must be 1..=3, got {k}"));
    }
    let p = sized(p, n1 + n4);
    let f = f.retarget(k)?;
    let ini = FockState([n1, 0, 0, n4]);
    let basis = FockBasis::new(p.particles);
    let stage = Stage::transfer(p, f, n4, 1.0)?;
    let tau = stage.duration;
    let sched = Schedule::new(InitialState::Fock(ini), vec![stage], samples)?;
    let mut rep = run_schedule(&sched, &basis)?;
    rep.protocol = "demux".into();
    let ana = analytic_series(&rep.series.times, |t| Ok(analytic::populations_broken(&ini, &p, &f, t)?.populations))?;
    rep.attach_analytic(ana)?;
    let end = rep.series.last().unwrap();
    let n1f = n1.max(1) as f64;
    let (good, other) = match k {
        1 => (end[0], end[1] + end[2]),
        2 => (end[2], end[1]),
        _ => (end[1], end[2]),
    };
    rep.metrics.insert("tau".into(), tau);
    rep.metrics.insert("efficiency".into(), good / n1f);
    rep.metrics.insert("leakage".into(), other / n1f);
    rep.metrics.insert("center_final".into(), end[3]);
    rep.metrics.insert("resonance".into(), analytic::resonance_ratio(&p, n4));
    rep.metrics.insert("validity_ratio".into(), analytic::broken_validity_ratio(&p, &f, n4)?);
    Ok(rep)
}

/// Two sources, one drain: `(n1, n2, 0, n4)` under the field aimed at
/// `k in {1, 2}` for one transfer time; well 3 should receive `n_{3-k}`.
pub fn mux_2to1(
    n1: u32,
    n2: u32,
    n4: u32,
    k: usize,
    p: &ReducedParams,
    f: &FieldConfig,
    samples: usize,
) -> Result<ProtocolReport> {
    if !(1..=2).contains(&k) {
        return invalid(format!("multiplexer selects source 1 or 2, got {k}"));
    }
    let p = sized(p, n1 + n2 + n4);
    let f = f.retarget(k)?;
    let ini = FockState([n1, n2, 0, n4]);
    let basis = FockBasis::new(p.particles);
    let stage = Stage::transfer(p, f, n4, 1.0)?;
    let tau = stage.duration;
    let sched = Schedule::new(InitialState::Fock(ini), vec![stage], samples)?;
    let mut rep = run_schedule(&sched, &basis)?;
    rep.protocol = "mux".into();
    let ana = analytic_series(&rep.series.times, |t| Ok(analytic::populations_broken(&ini, &p, &f, t)?.populations))?;
    rep.attach_analytic(ana)?;
    let end = rep.series.last().unwrap();
    let want = analytic::routing_table(&ini, k)?.0[2] as f64;
    rep.metrics.insert("tau".into(), tau);
    rep.metrics.insert("drain_final".into(), end[2]);
    rep.metrics.insert("drain_predicted".into(), want);
    rep.metrics.insert("resonance".into(), analytic::resonance_ratio(&p, n4));
    Ok(rep)
}

/// Splitter: field at `k in {2, 3}` for one transfer time, then field at
/// well 1 for `q` transfer times. Reports the end imbalance `(N2 - N3)/n1`.
pub fn amplitude_demux(
    n1: u32,
    n4: u32,
    k: usize,
    q: f64,
    p: &ReducedParams,
    f: &FieldConfig,
    samples: usize,
) -> Result<ProtocolReport> {
    if !(2..=3).contains(&k) {
        return invalid(format!("splitter first stage targets well 2 or 3, got {k}"));
    }
    let predicted = analytic::imbalance_prediction(q, k)?;
    let p = sized(p, n1 + n4);
    let fk = f.retarget(k)?;
    let f1 = f.retarget(1)?;
    let ini = FockState([n1, 0, 0, n4]);
    let basis = FockBasis::new(p.particles);
    let s1 = Stage::transfer(p, fk, n4, 1.0)?;
    let s2 = Stage::transfer(p, f1, n4, q)?;
    let t1 = s1.duration;
    let sched = Schedule::new(InitialState::Fock(ini), vec![s1, s2], samples)?;
    let mut rep = run_schedule(&sched, &basis)?;
    rep.protocol = "amp-demux".into();
    let routed = analytic::routing_table(&ini, k)?;
    let ana = analytic_series(&rep.series.times, |t| {
        Ok(if t <= t1 {
            analytic::populations_broken(&ini, &p, &fk, t)?.populations
        } else {
            analytic::populations_broken(&routed, &p, &f1, t - t1)?.populations
        })
    })?;
    rep.attach_analytic(ana)?;
    let end = rep.series.last().unwrap();
    let n1f = n1.max(1) as f64;
    let imb = (end[1] - end[2]) / n1f;
    rep.metrics.insert("q".into(), q);
    rep.metrics.insert("tau".into(), t1);
    rep.metrics.insert("imbalance".into(), imb);
    rep.metrics.insert("imbalance_predicted".into(), predicted);
    rep.metrics.insert("imbalance_deviation".into(), (imb - predicted).abs());
    rep.metrics.insert("well2_fraction".into(), end[1] / n1f);
    Ok(rep)
}

/// One row of an amplitude sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImbalancePoint {
    pub q: f64,
    pub imbalance_num: f64,
    pub imbalance_ana: f64,
}

/// [`amplitude_demux`] over a grid of `q`, endpoints only.
pub fn amplitude_demux_sweep(
    n1: u32,
    n4: u32,
    k: usize,
    q_grid: &[f64],
    p: &ReducedParams,
    f: &FieldConfig,
) -> Result<Vec<ImbalancePoint>> {
    q_grid
        .par_iter()
        .map(|&q| {
            let rep = amplitude_demux(n1, n4, k, q, p, f, 2)?;
            Ok(ImbalancePoint {
                q,
                imbalance_num: rep.metric("imbalance").unwrap(),
                imbalance_ana: rep.metric("imbalance_predicted").unwrap(),
            })
        })
        .collect()
}

/// Two-stage multiplexer: the field at well 3 for `q` transfer times,
/// starting at `t = -q tau`, prepares a coherent pair on wells 1 and 2;
/// the field at `k in {1, 2}` then reads one of its components into well 3.
///
/// `readout_times` are measured from the switch (t = 0).
pub fn amplitude_mux(
    n1: u32,
    n4: u32,
    q: f64,
    k: usize,
    p: &ReducedParams,
    f: &FieldConfig,
    readout_times: &[f64],
) -> Result<ProtocolReport> {
    if !(1..=2).contains(&k) {
        return invalid(format!("readout selects source 1 or 2, got {k}"));
    }
    if readout_times.is_empty() {
        return invalid("readout grid is empty");
    }
    let (a1, a2) = analytic::two_stage_amplitudes(q, n1)?;
    let p = sized(p, n1 + n4);
    let f3 = f.retarget(3)?;
    let fk = f.retarget(k)?;
    let ini = FockState([n1, 0, 0, n4]);
    let basis = FockBasis::new(p.particles);
    let prep = Stage::transfer(p, f3, n4, q)?;
    let t_prep = prep.duration;
    let span = readout_times.last().copied().unwrap().max(0.0);
    let readout = Stage::new(p, Some(fk), span)?.with_sample_times(readout_times.to_vec())?;
    let samples = (readout_times.len() / 4).max(8);

    // the prepared state, for comparison with the ideal pair
    let prep_only = Schedule::new(InitialState::Fock(ini), vec![prep.clone()], 2)?;
    let prepared = run_schedule(&prep_only, &basis)?.final_state;
    let ideal = analytic::coherent_pair(q, n1, (1, 2))?.with_spectator(4, n4)?.expand_to_fock(&basis)?;
    let prep_fidelity = prepared.inner(&ideal)?.norm();

    let sched = Schedule::new(InitialState::Fock(ini), vec![prep, readout], samples)?.starting_at(-t_prep);
    let mut rep = run_schedule(&sched, &basis)?;
    rep.protocol = "amp-mux".into();
    let ana = analytic_series(&rep.series.times, |t| {
        Ok(if t <= 0.0 {
            analytic::populations_broken(&ini, &p, &f3, t + t_prep)?.populations
        } else {
            analytic::populations_two_stage(q, n1, n4, &p, &fk, t)?.populations
        })
    })?;
    // readout deviation on its own
    let mut readout_dev: f64 = 0.0;
    let mut channel_max: f64 = 0.0;
    for (i, &t) in rep.series.times.iter().enumerate() {
        if t < 0.0 {
            continue;
        }
        let a = ana.sample(i);
        let s = rep.series.sample(i);
        for j in 0..MODES {
            readout_dev = readout_dev.max((a[j] - s[j]).abs());
        }
        channel_max = channel_max.max(s[2]);
    }
    rep.attach_analytic(ana)?;
    let amp = if k == 1 { a2 } else { a1 };
    let tau_k = analytic::tau(analytic::zeta(&p, &fk, n4)?)?;
    let cps = analytic::coherent_pair(q, n1, (1, 2))?;
    rep.metrics.insert("q".into(), q);
    rep.metrics.insert("tau".into(), tau_k);
    rep.metrics.insert("preparation_time".into(), t_prep);
    rep.metrics.insert("preparation_fidelity".into(), prep_fidelity);
    rep.metrics.insert("amplitude_well1".into(), a1);
    rep.metrics.insert("amplitude_well2".into(), a2);
    rep.metrics.insert("channel_amplitude".into(), channel_max);
    rep.metrics.insert("channel_amplitude_predicted".into(), amp);
    rep.metrics.insert("readout_deviation".into(), readout_dev);
    rep.metrics.insert("alpha_re".into(), cps.alpha.re);
    rep.metrics.insert("beta_im".into(), cps.beta.im);
    rep.metrics.insert("phase".into(), analytic::transferred_phase(fk.nu, tau_k));
    Ok(rep)
}

/// A skipped grid point of a fidelity scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanWarning {
    pub sigma: f64,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FidelityScan {
    /// `(sigma / J, F)`.
    pub points: Vec<(f64, f64)>,
    pub warnings: Vec<ScanWarning>,
}

impl FidelityScan {
    /// Smallest fidelity with `sigma` in `[lo, hi]`.
    pub fn minimum_over(&self, lo: f64, hi: f64) -> Option<f64> {
        self.points.iter().filter(|(s, _)| (lo..=hi).contains(s)).map(|p| p.1).reduce(f64::min)
    }
}

/// Return fidelity after one predicted period `2 pi / (3 |J_eff(sigma)|)`.
pub fn fidelity_at(p: &ReducedParams, basis: &FockBasis, ini: &FockState) -> Result<f64> {
    let period = analytic::resonant_period(p, ini.0[3])?;
    let spec = diagonalize_reduced(basis, p, None)?;
    let psi = StateVector::fock(basis, ini)?;
    dynamics::fidelity(&psi, &spec, period)
}

/// Fidelity over a grid of gradients. Points within `1e-6` of the critical
/// gradient, or where the period is otherwise undefined, are skipped.
pub fn sigma_scan_fidelity(p_template: &ReducedParams, sigma_grid: &[f64], ini: &FockState) -> Result<FidelityScan> {
    let p0 = sized(p_template, ini.total());
    let crit = analytic::sigma_crit(&p0);
    let basis = FockBasis::new(p0.particles);
    let rows: Vec<std::result::Result<(f64, f64), ScanWarning>> = sigma_grid
        .par_iter()
        .map(|&sigma| {
            if (sigma - crit).abs() < 1e-6 {
                return Ok(Err(ScanWarning { sigma, reason: format!("within 1e-6 of the critical gradient {crit}") }));
            }
            match fidelity_at(&p0.with_sigma(sigma), &basis, ini) {
                Ok(fid) => Ok(Ok((sigma, fid))),
                Err(Error::SingularParameter(msg)) => Ok(Err(ScanWarning { sigma, reason: msg })),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let mut out = FidelityScan::default();
    for r in rows {
        match r {
            Ok(pt) => out.points.push(pt),
            Err(w) => out.warnings.push(w),
        }
    }
    Ok(out)
}

/// Evenly spaced grid with `n` points over `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}
