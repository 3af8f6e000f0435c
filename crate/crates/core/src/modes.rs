//! Rotation of a pair of wells onto their even and odd modes.
//!
//! With `w = (a_i + a_j)/sqrt 2` and `u = (a_i - a_j)/sqrt 2`,
//! `|p, q> = (w^dag)^p (u^dag)^q / sqrt(p! q!) |0>` expands over the Fock
//! states `|n_i, n_j>` with `n_i + n_j = p + q`.

/// `ln n!` for `n = 0..=max`.
pub(crate) fn ln_factorials(max: u32) -> Vec<f64> {
    let mut out = Vec::with_capacity(max as usize + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for n in 1..=max {
        acc += (n as f64).ln();
        out.push(acc);
    }
    out
}

/// Amplitudes `<n_i, n_j | p, q>` indexed by `n_i` (`n_j = p + q - n_i`).
///
/// The integer part is the coefficient of `x^{n_i} y^{n_j}` in
/// `(x + y)^p (x - y)^q`, which stays exact in `f64` for moderate `p + q`.
pub(crate) fn pair_expansion(p: u32, q: u32, lnf: &[f64]) -> Vec<f64> {
    let n = p + q;
    let binom_p = binomial_row(p);
    let binom_q = binomial_row(q);
    let mut out = Vec::with_capacity(n as usize + 1);
    for ni in 0..=n {
        let mut coef = 0.0;
        // a powers of x from (x+y)^p, b from (x-y)^q
        let lo = ni.saturating_sub(q);
        let hi = ni.min(p);
        for a in lo..=hi {
            let b = ni - a;
            let sign = if (q - b) % 2 == 0 { 1.0 } else { -1.0 };
            coef += sign * binom_p[a as usize] * binom_q[b as usize];
        }
        let nj = n - ni;
        let ln_scale = 0.5 * (lnf[ni as usize] + lnf[nj as usize] - lnf[p as usize] - lnf[q as usize])
            - 0.5 * n as f64 * std::f64::consts::LN_2;
        out.push(coef * ln_scale.exp());
    }
    out
}

fn binomial_row(n: u32) -> Vec<f64> {
    let mut row = vec![1.0; n as usize + 1];
    for k in 1..n as usize {
        row[k] = row[k - 1] * (n as usize + 1 - k) as f64 / k as f64;
    }
    row.iter().map(|x| x.round()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_particle_modes() {
        let lnf = ln_factorials(4);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        // w^dag|0> = (|1,0> + |0,1>)/sqrt 2, indexed by n_i = 0, 1
        let w = pair_expansion(1, 0, &lnf);
        assert!((w[0] - r).abs() < 1e-15 && (w[1] - r).abs() < 1e-15);
        let u = pair_expansion(0, 1, &lnf);
        assert!((u[0] + r).abs() < 1e-15 && (u[1] - r).abs() < 1e-15);
    }

    #[test]
    fn expansions_are_orthonormal() {
        let n = 9;
        let lnf = ln_factorials(n);
        let rows: Vec<Vec<f64>> = (0..=n).map(|q| pair_expansion(n - q, q, &lnf)).collect();
        for (a, ra) in rows.iter().enumerate() {
            for (b, rb) in rows.iter().enumerate() {
                let dot: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-12, "{a} {b} {dot}");
            }
        }
    }
}
