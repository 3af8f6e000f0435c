use approx::assert_abs_diff_eq;
use ndarray::{arr2, Array1};
use num_complex::Complex64 as C64;

use atomroute::analytic::{self, EffectiveModeDecomposition};
use atomroute::config::MUX_FIELD_NU;
use atomroute::dynamics::*;
use atomroute::fock::*;
use atomroute::hamiltonian::*;
use atomroute::Error;

fn table(n: u32) -> ReducedParams {
    ReducedParams::new(0.51, 1.56, 1.0, n).unwrap()
}

#[test]
fn diagonalize_examples() {
    let b0 = FockBasis::new(0);
    let one = LinearOperator::new(&b0, arr2(&[[2.5]])).unwrap();
    assert_eq!(diagonalize(&one).unwrap().eigenvalues()[0], 2.5);

    let free = build_reduced(&FockBasis::new(1), &ReducedParams::new(0.0, 0.0, 1.0, 1).unwrap()).unwrap();
    let e = diagonalize(&free).unwrap();
    let want = [-3f64.sqrt(), 0.0, 0.0, 3f64.sqrt()];
    for (a, b) in e.eigenvalues().iter().zip(want) {
        assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
    }

    let h = build_reduced(&FockBasis::new(6), &table(6)).unwrap();
    let s = diagonalize(&h).unwrap();
    assert_abs_diff_eq!(s.eigenvalues().sum(), h.trace(), epsilon = 1e-9);
    assert!((s.reconstruct() - h.matrix()).iter().all(|x| x.abs() < 1e-10));
}

#[test]
fn block_and_dense_routes_agree() {
    for n in [0u32, 1, 3, 7, 10] {
        let b = FockBasis::new(n);
        let p = ReducedParams::new(0.33, -2.1, 0.9, n).unwrap();
        for field in [None, Some(FieldConfig::new(1.05, 1).unwrap()), Some(FieldConfig::new(MUX_FIELD_NU, 3).unwrap())]
        {
            let h = match &field {
                Some(f) => build_broken(&b, &p, f).unwrap(),
                None => build_reduced(&b, &p).unwrap(),
            };
            let dense = diagonalize(&h).unwrap();
            let block = diagonalize_reduced(&b, &p, field.as_ref()).unwrap();
            for (x, y) in dense.eigenvalues().iter().zip(block.eigenvalues()) {
                assert_abs_diff_eq!(*x, *y, epsilon = 1e-9);
            }
            assert!((block.reconstruct() - h.matrix()).iter().all(|x| x.abs() < 1e-10));
            let v = block.eigenvectors();
            let gram = v.t().dot(v);
            for r in 0..gram.nrows() {
                for c in 0..gram.ncols() {
                    assert_abs_diff_eq!(gram[[r, c]], if r == c { 1.0 } else { 0.0 }, epsilon = 1e-10);
                }
            }
        }
    }
}

#[test]
fn evolve_examples() {
    let b = FockBasis::new(8);
    let p = table(8);
    let spec = diagonalize_reduced(&b, &p, None).unwrap();
    let amps = Array1::from_shape_fn(b.len(), |i| C64::new(((i * 7) % 5) as f64, (i % 3) as f64 - 1.0));
    let psi = StateVector::normalized(&b, amps).unwrap();

    let same = evolve(&psi, &spec, 0.0).unwrap();
    assert!((same.inner(&psi).unwrap().norm() - 1.0).abs() < 1e-12);
    for t in [0.7, 13.0, -40.0, 500.0] {
        let fwd = evolve(&psi, &spec, t).unwrap();
        assert_abs_diff_eq!(fwd.norm(), 1.0, epsilon = 1e-10);
        let back = evolve(&fwd, &spec, -t).unwrap();
        let diff = back.amplitudes() - psi.amplitudes();
        assert!(diff.iter().all(|z| z.norm() < 1e-9));
    }

    // an eigenstate only picks up a phase
    let v = spec.eigenvectors().column(17).mapv(|x| C64::new(x, 0.0));
    let eig = StateVector::from_amplitudes(&b, v).unwrap();
    let start = eig.populations(&b).unwrap();
    let later = evolve(&eig, &spec, 91.0).unwrap().populations(&b).unwrap();
    for j in 0..4 {
        assert_abs_diff_eq!(start[j], later[j], epsilon = 1e-9);
    }
    assert!(evolve(&psi, &diagonalize_reduced(&FockBasis::new(3), &table(3), None).unwrap(), 1.0).is_err());
}

#[test]
fn charges_are_constant_along_trajectories() {
    let n = 7;
    let b = FockBasis::new(n);
    let spec = diagonalize_reduced(&b, &table(n), None).unwrap();
    let psi = StateVector::fock(&b, &FockState([4, 2, 1, 0])).unwrap();
    let (q, qt) = (build_charge_q(&b), build_charge_qtilde(&b));
    let (q0, qt0) = (expectation(&q, &psi).unwrap(), expectation(&qt, &psi).unwrap());
    for t in [1.0, 30.0, 211.0] {
        let s = evolve(&psi, &spec, t).unwrap();
        assert_abs_diff_eq!(expectation(&q, &s).unwrap(), q0, epsilon = 1e-8);
        assert_abs_diff_eq!(expectation(&qt, &s).unwrap(), qt0, epsilon = 1e-8);
        assert_abs_diff_eq!(s.populations(&b).unwrap().iter().sum::<f64>(), n as f64, epsilon = 1e-8);
    }
}

#[test]
fn broken_regime_keeps_its_charge() {
    let n = 6;
    let b = FockBasis::new(n);
    let f = FieldConfig::new(1.05, 3).unwrap();
    let spec = diagonalize_reduced(&b, &table(n), Some(&f)).unwrap();
    let psi = StateVector::fock(&b, &FockState([6, 0, 0, 0])).unwrap();
    let q3 = build_charge_qk(&b, 3).unwrap();
    let start = expectation(&q3, &psi).unwrap();
    let tau = analytic::tau(analytic::zeta(&table(n), &f, 0).unwrap()).unwrap();
    // Q_3 is exact only for the effective model; the full H_3 keeps it up
    // to the virtual occupation of the centre
    for t in [tau / 3.0, tau] {
        let s = evolve(&psi, &spec, t).unwrap();
        assert!((expectation(&q3, &s).unwrap() - start).abs() < 0.05 * n as f64);
    }
}

#[test]
fn time_reversal_of_real_initial_states() {
    let n = 6;
    let b = FockBasis::new(n);
    let spec = diagonalize_reduced(&b, &table(n), None).unwrap();
    let psi = StateVector::fock(&b, &FockState([3, 2, 1, 0])).unwrap();
    let grid: Vec<f64> = (0..20).map(|i| i as f64 * 3.7).collect();
    let neg: Vec<f64> = grid.iter().map(|t| -t).rev().collect();
    let fwd = population_series(&psi, &spec, &grid, false).unwrap();
    let bwd = population_series(&psi, &spec, &neg, false).unwrap();
    for i in 0..grid.len() {
        let (a, c) = (fwd.sample(i), bwd.sample(grid.len() - 1 - i));
        for j in 0..4 {
            assert_abs_diff_eq!(a[j], c[j], epsilon = 1e-10);
        }
    }
}

fn resonant_run(sigma: f64) -> (TimeSeries, TimeSeries) {
    let p = table(16).with_sigma(sigma);
    let b = FockBasis::new(16);
    let ini = FockState([14, 2, 0, 0]);
    let spec = diagonalize_reduced(&b, &p, None).unwrap();
    let period = analytic::resonant_period(&p, 0).unwrap();
    let grid: Vec<f64> = (0..=300).map(|i| period * i as f64 / 300.0).collect();
    let num = population_series(&StateVector::fock(&b, &ini).unwrap(), &spec, &grid, true).unwrap();
    let mut ana = TimeSeries::default();
    for &t in &grid {
        ana.push(t, analytic::populations_resonant(&ini, &p, t).unwrap().populations);
    }
    (num, ana)
}

#[test]
fn resonant_oscillation_follows_closed_form() {
    let (num, ana) = resonant_run(1.56);
    let dev3 = (0..num.len()).map(|i| (num.sample(i)[2] - ana.sample(i)[2]).abs()).fold(0.0, f64::max);
    assert!(dev3 < 0.05 * 16.0, "{dev3}");
    let fid = num.fidelity_to_initial.as_ref().unwrap();
    assert_abs_diff_eq!(fid[0], 1.0, epsilon = 1e-12);
    assert!(fid.iter().all(|f| *f <= 1.0 + 1e-12 && *f >= 0.0));
}

#[test]
fn off_resonance_departs_from_closed_form() {
    let dev = |s: f64| {
        let (num, ana) = resonant_run(s);
        num.max_abs_deviation(&ana).unwrap()
    };
    assert!(dev(-10.0) > dev(1.56));
}

#[test]
fn oscillation_frequency_is_three_jeff() {
    // first minimum of <N_1> sits at half the predicted period
    let (num, _) = resonant_run(1.56);
    let n1 = &num.populations[0];
    let half = n1.len() / 2;
    let window = half / 5;
    let (imin, _) = n1[half - window..=half + window].iter().enumerate().fold((0, f64::INFINITY), |acc, (i, &x)| {
        if x < acc.1 {
            (i, x)
        } else {
            acc
        }
    });
    let t_min = num.times[half - window + imin];
    let period = analytic::resonant_period(&table(16), 0).unwrap();
    assert!((2.0 * t_min / period - 1.0).abs() < 0.05, "{t_min} vs {period}");
}

#[test]
fn fidelity_examples() {
    let b = FockBasis::new(16);
    let ini = StateVector::fock(&b, &FockState([14, 2, 0, 0])).unwrap();
    let p = table(16).with_sigma(15.3);
    let spec = diagonalize_reduced(&b, &p, None).unwrap();
    assert_abs_diff_eq!(fidelity(&ini, &spec, 0.0).unwrap(), 1.0, epsilon = 1e-12);
    let period = analytic::resonant_period(&p, 0).unwrap();
    assert!(fidelity(&ini, &spec, period).unwrap() > 0.99);

    let near = table(16).with_sigma(-15.0);
    let spec = diagonalize_reduced(&b, &near, None).unwrap();
    let f = fidelity(&ini, &spec, analytic::resonant_period(&near, 0).unwrap()).unwrap();
    assert!(f < 0.9, "{f}");
}

#[test]
fn free_star_spectrum_is_symmetric() {
    let grid = [0.0];
    for n in 1..=6 {
        let pts = spectrum_scan(&ReducedParams::new(0.0, 0.0, 1.0, n).unwrap(), &grid).unwrap();
        let e = &pts[0].eigenvalues;
        for (a, b) in e.iter().zip(e.iter().rev()) {
            assert_abs_diff_eq!(*a, -*b, epsilon = 1e-10);
        }
    }
    let pts = spectrum_scan(&table(4), &[0.0, 0.25, 0.5]).unwrap();
    assert_eq!(pts[2].un_over_j, 2.0);
    assert!(pts.iter().all(|p| p.eigenvalues.windows(2).all(|w| w[0] <= w[1])));
}

#[test]
fn band_examples() {
    let ladder: Vec<f64> = (0..12).map(|i| 0.5 * i as f64).collect();
    let (mean, std) = band_spacing_stats(&ladder, 2.0, 1.6, 1e-8).unwrap();
    assert_abs_diff_eq!(mean, 0.5, epsilon = 1e-12);
    assert!(std < 1e-12);
    assert!(matches!(band_spacing_stats(&ladder, 100.0, 1.0, 1e-8), Err(Error::InsufficientData(_))));

    let p = table(16);
    let b = FockBasis::new(16);
    let spec = diagonalize_reduced(&b, &p, None).unwrap();
    let h = build_reduced(&b, &p).unwrap();
    let e = expectation(&h, &StateVector::fock(&b, &FockState([14, 2, 0, 0])).unwrap()).unwrap();
    let band = detect_band(spec.eigenvalues().as_slice().unwrap(), e, &BandOptions::default()).unwrap();
    assert!(band.lower() <= e && e <= band.upper());
    let (mean, std) = band_stats(&band).unwrap();
    let three_jeff = 3.0 * analytic::jeff(&p, 0).unwrap();
    assert!(std / mean < 0.15);
    assert!((mean / three_jeff - 1.0).abs() < 0.25);
    // the band spans the (n4 = 0) effective ladder, Q + Q~ from 0 to N
    assert_eq!(band.levels.len(), 17);
}

#[test]
fn mode_sums_reproduce_closed_forms() {
    let p = table(9);
    let ini = FockState([5, 3, 1, 0]);
    let je = analytic::jeff(&p, 0).unwrap();
    let sym = EffectiveModeDecomposition::symmetric(je);
    for k in 1..=3 {
        let f = FieldConfig::new(1.05, k).unwrap();
        let brk = EffectiveModeDecomposition::broken(k, f.nu, analytic::zeta(&p, &f, 0).unwrap()).unwrap();
        for t in [0.0, 3.3, 77.0] {
            let a = analytic::populations_resonant(&ini, &p, t).unwrap().populations;
            let c = analytic::populations_broken(&ini, &p, &f, t).unwrap().populations;
            for j in 1..=4 {
                assert_abs_diff_eq!(
                    analytic::mode_sum_expectation(&ini, &sym, t, j).unwrap(),
                    a[j - 1],
                    epsilon = 1e-10
                );
                assert_abs_diff_eq!(
                    analytic::mode_sum_expectation(&ini, &brk, t, j).unwrap(),
                    c[j - 1],
                    epsilon = 1e-10
                );
            }
        }
    }
    let skew = arr2(&[[1.0, 0.1, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
    assert!(EffectiveModeDecomposition::new(skew, [0.0; 3]).is_err());
}

#[test]
fn closed_form_examples() {
    let p = table(16);
    assert_abs_diff_eq!(analytic::jeff(&p, 0).unwrap(), 0.02966, epsilon = 5e-5);
    let free_u = ReducedParams::new(0.0, 2.0, 1.0, 16).unwrap();
    assert_abs_diff_eq!(analytic::jeff(&free_u, 0).unwrap(), 1.0 / 4.0, epsilon = 1e-15);
    let pole = -4.0 * p.u * 16.0 - 2.0 * p.sigma + 4.0 * p.u;
    assert!(matches!(analytic::hopping_fn(&p, 0, pole), Err(Error::SingularParameter(_))));

    assert_abs_diff_eq!(analytic::sigma_crit(&p), -15.3, epsilon = 1e-12);
    assert_eq!(analytic::sigma_crit(&ReducedParams::new(0.0, 1.0, 1.0, 16).unwrap()), 0.0);
    let crit = p.with_sigma(analytic::sigma_crit(&p));
    assert!(matches!(analytic::jeff(&crit, 0), Err(Error::SingularParameter(_))));

    let at_peak = analytic::resonant_period(&p, 0).unwrap() / 2.0;
    let pk = analytic::populations_resonant(&FockState([14, 2, 0, 0]), &p, at_peak).unwrap().populations;
    assert_abs_diff_eq!(pk[0], 14.0 - 104.0 / 9.0, epsilon = 1e-9);
    assert_abs_diff_eq!(pk[1], 2.0 + 40.0 / 9.0, epsilon = 1e-9);
    assert_abs_diff_eq!(pk[2], 64.0 / 9.0, epsilon = 1e-9);

    let p12 = table(12);
    for t in [0.0, 11.0, 40.0] {
        let s = analytic::populations_resonant(&FockState([3, 4, 2, 3]), &p12, t).unwrap().populations;
        assert_abs_diff_eq!(s[0] + s[1] + s[2], 9.0, epsilon = 1e-12);
        assert!(s.iter().all(|x| *x >= 0.0));
        let flat = analytic::populations_resonant(&FockState([3, 3, 3, 3]), &p12, t).unwrap().populations;
        assert_eq!(flat, [3.0; 4]);
    }
}

#[test]
fn transfer_frequency_examples() {
    let p = table(16);
    let f = FieldConfig::new(1.05, 3).unwrap();
    let z = analytic::zeta(&p, &f, 0).unwrap();
    assert_abs_diff_eq!(z, 0.0290, epsilon = 1e-4);
    assert_abs_diff_eq!(analytic::tau(z).unwrap(), 54.1, epsilon = 0.1);
    let big = analytic::zeta(&p, &FieldConfig::new(1e6, 3).unwrap(), 0).unwrap();
    assert!(big.abs() < 1e-5);
    assert!(analytic::zeta(&p, &FieldConfig::new(0.0, 3).unwrap(), 0).is_err());
    let jn = analytic::hopping_fn(&p, 0, 1.05).unwrap();
    assert_eq!(z.signum(), jn.signum());
}

#[test]
fn broken_closed_form_examples() {
    let p = table(16);
    let f = FieldConfig::new(1.05, 3).unwrap();
    let tau = analytic::tau(analytic::zeta(&p, &f, 0).unwrap()).unwrap();
    let end = analytic::populations_broken(&FockState([16, 0, 0, 0]), &p, &f, tau).unwrap().populations;
    assert_abs_diff_eq!(end[0], 0.0, epsilon = 1e-12);
    assert_abs_diff_eq!(end[1], 16.0, epsilon = 1e-12);
    assert_eq!(end[2], 0.0);
    let held = analytic::populations_broken(&FockState([10, 0, 0, 6]), &p, &f.retarget(1).unwrap(), 31.0).unwrap();
    assert_eq!(held.populations[0], 10.0);
    assert_eq!(held.populations[3], 6.0);
}

#[test]
fn routing_table_examples() {
    assert_eq!(analytic::routing_table(&FockState([16, 0, 0, 0]), 2).unwrap(), FockState([0, 0, 16, 0]));
    assert_eq!(analytic::routing_table(&FockState([12, 4, 0, 0]), 1).unwrap(), FockState([12, 0, 4, 0]));
    assert_eq!(analytic::routing_table(&FockState([12, 4, 0, 0]), 2).unwrap(), FockState([0, 4, 12, 0]));
    assert!(analytic::routing_table(&FockState([1, 0, 0, 0]), 4).is_err());
}

#[test]
fn coherent_pair_examples() {
    let b = FockBasis::new(3);
    let zero = analytic::coherent_pair(0.0, 3, (1, 2)).unwrap().expand_to_fock(&b).unwrap();
    let fock = StateVector::fock(&b, &FockState([3, 0, 0, 0])).unwrap();
    assert_abs_diff_eq!(zero.inner(&fock).unwrap().norm(), 1.0, epsilon = 1e-12);
    let one = analytic::coherent_pair(1.0, 3, (1, 2)).unwrap().expand_to_fock(&b).unwrap();
    let other = StateVector::fock(&b, &FockState([0, 3, 0, 0])).unwrap();
    let ov = other.inner(&one).unwrap();
    // global phase (-i)^3 = i
    assert_abs_diff_eq!(ov.re, 0.0, epsilon = 1e-12);
    assert_abs_diff_eq!(ov.im, 1.0, epsilon = 1e-12);

    let b2 = FockBasis::new(2);
    let half = analytic::coherent_pair(0.5, 2, (1, 2)).unwrap().expand_to_fock(&b2).unwrap();
    let prob = |s: [u32; 4]| half.amplitudes()[b2.index(&FockState(s)).unwrap()].norm_sqr();
    assert_abs_diff_eq!(prob([2, 0, 0, 0]), 0.25, epsilon = 1e-12);
    assert_abs_diff_eq!(prob([1, 1, 0, 0]), 0.5, epsilon = 1e-12);
    assert_abs_diff_eq!(prob([0, 2, 0, 0]), 0.25, epsilon = 1e-12);
    assert!(analytic::coherent_pair(1.2, 2, (1, 2)).is_err());
}

#[test]
fn amplitude_law_examples() {
    assert_eq!(analytic::imbalance_prediction(0.0, 2).unwrap(), -1.0);
    assert_abs_diff_eq!(analytic::imbalance_prediction(0.5, 2).unwrap(), 0.0, epsilon = 1e-15);
    assert_abs_diff_eq!(analytic::imbalance_prediction(0.5, 3).unwrap(), 0.0, epsilon = 1e-15);
    assert_abs_diff_eq!(analytic::imbalance_prediction(0.25, 3).unwrap(), 0.5f64.sqrt(), epsilon = 1e-15);
    assert!(analytic::imbalance_prediction(0.25, 1).is_err());

    for q in [0.0, 0.2, 0.5, 0.9, 1.0] {
        let (a1, a2) = analytic::two_stage_amplitudes(q, 16).unwrap();
        assert_abs_diff_eq!(a1 + a2, 16.0, epsilon = 1e-12);
    }
    let (a1, a2) = analytic::two_stage_amplitudes(2.0 / 3.0, 16).unwrap();
    assert_abs_diff_eq!(a1, 4.0, epsilon = 1e-12);
    assert_abs_diff_eq!(a2, 12.0, epsilon = 1e-12);

    let p = table(16);
    let f = FieldConfig::new(MUX_FIELD_NU, 2).unwrap();
    for t in [0.0, 10.0, 50.0] {
        let s = analytic::populations_two_stage(2.0 / 3.0, 16, 0, &p, &f, t).unwrap().populations;
        assert_abs_diff_eq!(s[1], 12.0, epsilon = 1e-12);
        assert!(s[2] <= 4.0 + 1e-12);
    }
}
