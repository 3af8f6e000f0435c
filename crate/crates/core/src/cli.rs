//! Runs an [`ExperimentConfig`] and writes its data files and sidecar.

use serde::Serialize;
use serde_json::{json, Value};

use crate::analytic;
use crate::config::{ExperimentConfig, InitialInput, Mode};
use crate::dynamics::{self, TimeSeries};
use crate::error::{Error, Result};
use crate::fock::{FockBasis, FockState, StateVector, MODES};
use crate::lattice::{self, LatticeConfig};
use crate::output::{self, report_table, series_table, Table, Written};
use crate::protocols::{self, ProtocolReport};

/// Files written by a run and the figures of merit stored in its sidecar.
#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub written: Written,
    pub results: Value,
}

const DEFAULT_PARTICLES: u32 = 16;

/// Run `cfg`; the sidecar is `cfg` with `results` filled in, so it can be
/// fed back to reproduce the same files.
pub fn execute(cfg: &ExperimentConfig) -> Result<Outcome> {
    cfg.validate().map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let (csv, dat, results) = match cfg.mode {
        Mode::Spectrum => spectrum(cfg)?,
        Mode::Evolve => evolve(cfg)?,
        Mode::FidelityScan => fidelity_scan(cfg)?,
        Mode::Demux | Mode::Mux | Mode::AmpDemux | Mode::AmpMux => routing(cfg)?,
        Mode::Lattice => lattice_mode(cfg)?,
    };
    let mut sidecar = cfg.clone();
    sidecar.results = Some(results.clone());
    let written = output::emit_figure_data(&cfg.output, &csv, &dat, &sidecar)?;
    Ok(Outcome { written, results })
}

type Tables = (Table, Table, Value);

fn particles(cfg: &ExperimentConfig) -> u32 {
    cfg.particles.unwrap_or(DEFAULT_PARTICLES)
}

fn scale(cfg: &ExperimentConfig, n: u32) -> f64 {
    if cfg.fractional && n > 0 {
        n as f64
    } else {
        1.0
    }
}

fn header(cfg: &ExperimentConfig, t: &mut Table) {
    let p = &cfg.params;
    t.comment(format!("mode {}", cfg.mode.name()));
    t.comment(format!("U/J = {} sigma/J = {} J = {}", p.u, p.sigma, p.j));
    let mut bare = cfg.clone();
    bare.results = None;
    t.comment(format!("config {}", serde_json::to_string(&bare).expect("config serializes")));
}

fn spectrum(cfg: &ExperimentConfig) -> Result<Tables> {
    let n = particles(cfg);
    let grid = cfg.u_grid.map(|g| g.points()).unwrap_or_else(|| protocols::linspace(0.0, 1.0, 101));
    let p = cfg.reduced(n)?;
    let points = dynamics::spectrum_scan(&p, &grid)?;
    let mut t = Table::new(["UN_over_J", "E_over_J", "level"]);
    header(cfg, &mut t);
    for sp in &points {
        for (i, e) in sp.eigenvalues.iter().enumerate() {
            t.push(vec![sp.un_over_j, e / p.j, i as f64]);
        }
    }
    let results =
        json!({ "particles": n, "points": points.len(), "levels": points.first().map_or(0, |s| s.eigenvalues.len()) });
    Ok((t.clone(), t, results))
}

fn initial_vector(cfg: &ExperimentConfig) -> Result<(StateVector, Option<FockState>, u32)> {
    match cfg.initial_state.as_ref() {
        Some(InitialInput::Occupations(o)) => {
            let s = FockState(*o);
            let basis = FockBasis::new(s.total());
            Ok((StateVector::fock(&basis, &s)?, Some(s), s.total()))
        }
        Some(InitialInput::CoherentPair(c)) => {
            let mut pair = analytic::coherent_pair(c.q, c.n1, c.sites)?;
            for &(site, occ) in &c.spectator {
                pair = pair.with_spectator(site, occ)?;
            }
            let basis = FockBasis::new(pair.total());
            Ok((pair.expand_to_fock(&basis)?, None, pair.total()))
        }
        None => Err(Error::InvalidArgument("initial_state is required".into())),
    }
}

fn evolve(cfg: &ExperimentConfig) -> Result<Tables> {
    let (psi, fock, n) = initial_vector(cfg)?;
    let p = cfg.reduced(n)?;
    let field = match cfg.field {
        Some(_) => Some(cfg.field_config()?),
        None => None,
    };
    let n4 = fock.map_or(0, |s| s.0[3]);
    let t_max = match (cfg.t_max, field) {
        (Some(t), _) => t,
        (None, Some(f)) => analytic::tau(analytic::zeta(&p, &f, n4)?)?,
        (None, None) => analytic::resonant_period(&p, n4)?,
    };
    let grid = protocols::linspace(0.0, t_max, cfg.samples);
    let basis = FockBasis::new(n);
    let spec = dynamics::diagonalize_reduced(&basis, &p, field.as_ref())?;
    let ts = dynamics::population_series(&psi, &spec, &grid, true)?;
    let s = scale(cfg, n);

    let mut csv = series_table(&ts, s);
    header(cfg, &mut csv);
    let mut ana = None;
    if let Some(ini) = fock {
        let mut a = TimeSeries::default();
        for &t in &grid {
            let pred = match &field {
                Some(f) => analytic::populations_broken(&ini, &p, f, t)?,
                None => analytic::populations_resonant(&ini, &p, t)?,
            };
            a.push(t, pred.populations);
        }
        ana = Some(a);
    }
    let mut cols = vec!["t".to_string()];
    cols.extend((1..=MODES).map(|j| format!("num_N{j}")));
    if ana.is_some() {
        cols.extend((1..=MODES).map(|j| format!("ana_N{j}")));
    }
    cols.push("fidelity".into());
    let mut dat = Table::new(cols);
    header(cfg, &mut dat);
    let fid = ts.fidelity_to_initial.clone().unwrap_or_default();
    for i in 0..ts.len() {
        let mut row = vec![ts.times[i]];
        row.extend(ts.sample(i).iter().map(|x| x / s));
        if let Some(a) = &ana {
            row.extend(a.sample(i).iter().map(|x| x / s));
        }
        row.push(fid[i]);
        dat.push(row);
    }
    let deviation = match &ana {
        Some(a) => Some(ts.max_abs_deviation(a)?),
        None => None,
    };
    let results = json!({
        "particles": n,
        "t_max": t_max,
        "final_populations": ts.last(),
        "final_fidelity": fid.last(),
        "max_abs_deviation": deviation,
    });
    Ok((csv, dat, results))
}

fn fidelity_scan(cfg: &ExperimentConfig) -> Result<Tables> {
    let ini = cfg.occupations().unwrap_or(FockState([14, 2, 0, 0]));
    if matches!(cfg.initial_state, Some(InitialInput::CoherentPair(_))) {
        return Err(Error::InvalidArgument("fidelity scan starts from occupations".into()));
    }
    let grid = cfg.sigma_grid.map(|g| g.points()).unwrap_or_else(|| protocols::linspace(-20.0, 20.0, 200));
    let p = cfg.reduced(ini.total())?;
    let scan = protocols::sigma_scan_fidelity(&p, &grid, &ini)?;
    let mut t = Table::new(["sigma", "fidelity"]);
    header(cfg, &mut t);
    for w in &scan.warnings {
        t.comment(format!("skipped sigma = {:e}: {}", w.sigma, w.reason));
    }
    for &(s, f) in &scan.points {
        t.push(vec![s, f]);
    }
    let results = json!({
        "points": scan.points.len(),
        "skipped": scan.warnings.len(),
        "sigma_crit": analytic::sigma_crit(&p),
        "plateau_minimum": scan.minimum_over(1.57, 15.3),
    });
    Ok((t.clone(), t, results))
}

fn report_tables(cfg: &ExperimentConfig, rep: &ProtocolReport, n: u32) -> Tables {
    let s = scale(cfg, n);
    let mut csv = series_table(&rep.series, s);
    header(cfg, &mut csv);
    let mut dat = report_table(rep, s);
    header(cfg, &mut dat);
    let results = json!({
        "protocol": rep.protocol,
        "metrics": rep.metrics,
        "max_abs_deviation": rep.max_abs_deviation,
        "stage_boundaries": rep.stage_boundaries,
    });
    (csv, dat, results)
}

fn routing(cfg: &ExperimentConfig) -> Result<Tables> {
    let k = cfg.k.expect("validated");
    let f = cfg.field_config()?;
    let occ = cfg.occupations().map(|s| s.0);
    let n = particles(cfg);
    match cfg.mode {
        Mode::Demux => {
            let [n1, _, _, n4] = occ.unwrap_or([n, 0, 0, 0]);
            let p = cfg.reduced(n1 + n4)?;
            let rep = protocols::demux_1to2(n1, n4, k, &p, &f, cfg.samples)?;
            Ok(report_tables(cfg, &rep, n1 + n4))
        }
        Mode::Mux => {
            let [n1, n2, _, n4] = occ.unwrap_or([12, 4, 0, 0]);
            let p = cfg.reduced(n1 + n2 + n4)?;
            let rep = protocols::mux_2to1(n1, n2, n4, k, &p, &f, cfg.samples)?;
            Ok(report_tables(cfg, &rep, n1 + n2 + n4))
        }
        Mode::AmpDemux => {
            let [n1, _, _, n4] = occ.unwrap_or([n, 0, 0, 0]);
            let p = cfg.reduced(n1 + n4)?;
            match &cfg.q_grid {
                Some(qs) => {
                    let sweep = protocols::amplitude_demux_sweep(n1, n4, k, qs, &p, &f)?;
                    let mut t = Table::new(["q", "imbalance_num", "imbalance_ana"]);
                    header(cfg, &mut t);
                    for r in &sweep {
                        t.push(vec![r.q, r.imbalance_num, r.imbalance_ana]);
                    }
                    let dev = sweep.iter().map(|r| (r.imbalance_num - r.imbalance_ana).abs()).fold(0.0, f64::max);
                    Ok((t.clone(), t, json!({ "points": sweep.len(), "max_imbalance_deviation": dev })))
                }
                None => {
                    let q = cfg.q.unwrap_or(0.5);
                    let rep = protocols::amplitude_demux(n1, n4, k, q, &p, &f, cfg.samples)?;
                    Ok(report_tables(cfg, &rep, n1 + n4))
                }
            }
        }
        Mode::AmpMux => {
            let [n1, _, _, n4] = occ.unwrap_or([n, 0, 0, 0]);
            let q = cfg.q.expect("validated");
            let p = cfg.reduced(n1 + n4)?;
            let t_max = match cfg.t_max {
                Some(t) => t,
                None => 2.0 * analytic::tau(analytic::zeta(&p, &f.retarget(k)?, n4)?)?,
            };
            let grid = protocols::linspace(0.0, t_max, cfg.samples);
            let rep = protocols::amplitude_mux(n1, n4, q, k, &p, &f, &grid)?;
            Ok(report_tables(cfg, &rep, n1 + n4))
        }
        _ => unreachable!("not a routing mode"),
    }
}

fn lattice_mode(cfg: &ExperimentConfig) -> Result<Tables> {
    let lat = cfg.lattice.clone().unwrap_or_else(LatticeConfig::reference);
    let hp = lattice::hubbard_params(&lat)?;
    let (reduced, residual) = lattice::derive_reduced(&hp, particles(cfg))?;
    let cols = [
        "u_over_j",
        "sigma_over_j",
        "nu_over_j",
        "j",
        "u",
        "sigma",
        "nu",
        "lambda",
        "u0",
        "u_edge",
        "u_center",
        "omega",
        "omega_z",
        "residual",
    ];
    let mut t = Table::new(cols);
    t.comment("mode lattice; energies in joules, frequencies in rad/s");
    t.push(vec![
        hp.u_over_j,
        hp.sigma_over_j,
        hp.nu_over_j,
        hp.j,
        hp.u,
        hp.sigma,
        hp.nu,
        hp.lambda,
        hp.u0,
        hp.u_edge,
        hp.u_center,
        hp.trap.omega,
        hp.trap.omega_z,
        residual,
    ]);
    let results = json!({ "hubbard": hp, "reduced": reduced, "integrability_residual": residual });
    Ok((t.clone(), t, results))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evolve_writes_three_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::template(Mode::Evolve, dir.path().join("run"));
        cfg.initial_state = Some(InitialInput::Occupations([3, 1, 0, 0]));
        cfg.samples = 11;
        let out = execute(&cfg).unwrap();
        let csv = std::fs::read_to_string(&out.written.csv).unwrap();
        assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 12);
        assert!(out.written.dat.exists() && out.written.sidecar.exists());
        let back = ExperimentConfig::load(&out.written.sidecar).unwrap();
        assert_eq!(back.results, Some(out.results));
    }
}
