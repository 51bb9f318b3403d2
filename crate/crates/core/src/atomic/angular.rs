//! Clebsch-Gordan coefficients (Condon-Shortley phase) via the Racah sum with
//! log-factorials. Angular momenta are passed as f64 and must be half-integer;
//! quantum numbers are doubled internally so all arithmetic is exact.

use crate::error::{Error, Result};

/// ⟨j1 m1; j2 m2 | J M⟩ with the Condon-Shortley phase convention.
///
/// Returns 0 when the projection or triangle rules are violated; rejects
/// inputs that are not half-integers or have m out of range / wrong parity.
pub fn clebsch_gordan(j1: f64, m1: f64, j2: f64, m2: f64, j: f64, m: f64) -> Result<f64> {
    let tj1 = doubled(j1, "j1")?;
    let tm1 = doubled(m1, "m1")?;
    let tj2 = doubled(j2, "j2")?;
    let tm2 = doubled(m2, "m2")?;
    let tj = doubled(j, "J")?;
    let tm = doubled(m, "M")?;
    if tj1 < 0 || tj2 < 0 || tj < 0 {
        return Err(Error::config("angular momenta must be non-negative"));
    }
    for (tjx, tmx, name) in [(tj1, tm1, "m1"), (tj2, tm2, "m2"), (tj, tm, "M")] {
        if (tjx - tmx).rem_euclid(2) != 0 {
            return Err(Error::config(format!("{name} does not have the parity of its j")));
        }
        if tmx.abs() > tjx {
            return Err(Error::config(format!("|{name}| exceeds its j")));
        }
    }
    // projection rule
    if tm1 + tm2 != tm {
        return Ok(0.0);
    }
    // triangle rule (and integer-sum parity)
    if tj > tj1 + tj2 || tj < (tj1 - tj2).abs() || (tj1 + tj2 + tj) % 2 != 0 {
        return Ok(0.0);
    }

    // Racah's formula, all arguments in doubled units (even, so /2 is exact).
    let half = |t: i64| -> i64 {
        debug_assert!(t % 2 == 0);
        t / 2
    };
    let lnf = |t: i64| ln_factorial(half(t) as u64);

    let prefactor = 0.5
        * ((tj as f64 + 1.0).ln()
            + lnf(tj1 + tj2 - tj)
            + lnf(tj1 - tj2 + tj)
            + lnf(-tj1 + tj2 + tj)
            - lnf(tj1 + tj2 + tj + 2)
            + lnf(tj1 + tm1)
            + lnf(tj1 - tm1)
            + lnf(tj2 + tm2)
            + lnf(tj2 - tm2)
            + lnf(tj + tm)
            + lnf(tj - tm));

    let k_min = 0.max(half(tj2 - tj - tm1)).max(half(tj1 + tm2 - tj));
    let k_max = half(tj1 + tj2 - tj).min(half(tj1 - tm1)).min(half(tj2 + tm2));
    let mut sum = 0.0;
    for k in k_min..=k_max {
        let ln_den = ln_factorial(k as u64)
            + lnf(tj1 + tj2 - tj - 2 * k)
            + lnf(tj1 - tm1 - 2 * k)
            + lnf(tj2 + tm2 - 2 * k)
            + lnf(tj - tj2 + tm1 + 2 * k)
            + lnf(tj - tj1 - tm2 + 2 * k);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * (prefactor - ln_den).exp();
    }
    Ok(sum)
}

fn doubled(x: f64, name: &str) -> Result<i64> {
    let t = 2.0 * x;
    let r = t.round();
    if !x.is_finite() || (t - r).abs() > 1e-9 {
        return Err(Error::config(format!("{name} = {x} is not a half-integer")));
    }
    Ok(r as i64)
}

fn ln_factorial(n: u64) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stretched_state_is_unity() {
        let c = clebsch_gordan(0.5, 0.5, 3.5, 3.5, 4.0, 4.0).unwrap();
        assert!((c - 1.0).abs() < 1e-14, "got {c}");
    }

    #[test]
    fn projection_rule_gives_zero() {
        let c = clebsch_gordan(0.5, 0.5, 3.5, 0.5, 4.0, 2.0).unwrap();
        assert_eq!(c, 0.0);
    }

    #[test]
    fn known_values_for_spin_half_coupling() {
        // |I±1/2, m> coefficients for J=1/2 ⊗ I: <1/2 ±1/2; I m∓1/2 | I±1/2 m>
        // = sqrt((I + 1/2 ± m)/(2I + 1)), here I = 7/2.
        for m in -3..=3i32 {
            let mf = m as f64;
            let up = clebsch_gordan(0.5, 0.5, 3.5, mf - 0.5, 4.0, mf).unwrap();
            assert!((up - ((4.0 + mf) / 8.0).sqrt()).abs() < 1e-13);
            let dn = clebsch_gordan(0.5, -0.5, 3.5, mf + 0.5, 4.0, mf).unwrap();
            assert!((dn - ((4.0 - mf) / 8.0).sqrt()).abs() < 1e-13);
            // With spin-1/2 as the FIRST argument, the Condon-Shortley sign
            // of the F = I − 1/2 branch sits on the mJ = −1/2 component.
            let up3 = clebsch_gordan(0.5, 0.5, 3.5, mf - 0.5, 3.0, mf).unwrap();
            assert!((up3 - ((4.0 - mf) / 8.0).sqrt()).abs() < 1e-13, "m={m} got {up3}");
            let dn3 = clebsch_gordan(0.5, -0.5, 3.5, mf + 0.5, 3.0, mf).unwrap();
            assert!((dn3 + ((4.0 + mf) / 8.0).sqrt()).abs() < 1e-13, "m={m} got {dn3}");
        }
    }

    #[test]
    fn completeness_over_coupled_space() {
        // Sum over (J, M) of |<j1 m1; j2 m2|J M>|^2 = 1 for every (m1, m2).
        for tm1 in [-1i64, 1] {
            for tm2 in (-7..=7i64).step_by(2) {
                let mut total = 0.0;
                for j in [3.0, 4.0] {
                    for tm in (-2 * j as i64)..=(2 * j as i64) {
                        if tm % 2 != 0 {
                            continue;
                        }
                        let c = clebsch_gordan(
                            0.5,
                            tm1 as f64 / 2.0,
                            3.5,
                            tm2 as f64 / 2.0,
                            j,
                            tm as f64 / 2.0,
                        )
                        .unwrap();
                        total += c * c;
                    }
                }
                assert!((total - 1.0).abs() < 1e-12, "m1={tm1}/2 m2={tm2}/2: {total}");
            }
        }
    }

    #[test]
    fn rejects_non_half_integers() {
        assert!(clebsch_gordan(0.3, 0.3, 3.5, 0.5, 4.0, 0.8).is_err());
        assert!(clebsch_gordan(0.5, 0.0, 3.5, 0.5, 4.0, 0.5).is_err()); // m1 parity
    }
}
