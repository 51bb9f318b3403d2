//! Brute-force oracles, independent of the library's closed-form paths: the
//! full 16×16 hyperfine+Zeeman Hamiltonian in the uncoupled |m_J, m_I⟩ basis,
//! diagonalized numerically.

use mwaddr::atomic::AtomicConstants;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

pub const DIM: usize = 16;

/// Uncoupled-basis index identical to the library convention: m_J = +1/2
/// block first, m_I ascending (doubled quantum numbers).
pub fn idx(mj2: i64, mi2: i64) -> usize {
    let block = if mj2 == 1 { 0 } else { 8 };
    block + ((mi2 + 7) / 2) as usize
}

fn ladder_i(mi: f64, up: bool) -> f64 {
    let i = 3.5;
    if up {
        (i * (i + 1.0) - mi * (mi + 1.0)).max(0.0).sqrt()
    } else {
        (i * (i + 1.0) - mi * (mi - 1.0)).max(0.0).sqrt()
    }
}

/// H/h = A·(I·J) + muB·B·(gJ·Jz + gI·Iz) over the uncoupled basis.
pub fn hamiltonian(c: &AtomicConstants, b_gauss: f64) -> DMatrix<f64> {
    let mut h = DMatrix::zeros(DIM, DIM);
    let zeeman = c.mu_b_hz_per_g * b_gauss;
    for mj2 in [-1i64, 1] {
        for mi2 in (-7..=7i64).step_by(2) {
            let col = idx(mj2, mi2);
            let mj = mj2 as f64 / 2.0;
            let mi = mi2 as f64 / 2.0;
            // Iz·Jz + Zeeman
            h[(col, col)] += c.a_hz * mi * mj + zeeman * (c.g_j * mj + c.g_i * mi);
            // (I+ J- + I- J+)/2
            if mj2 == 1 && mi2 + 2 <= 7 {
                let row = idx(-1, mi2 + 2);
                h[(row, col)] += 0.5 * c.a_hz * ladder_i(mi, true);
            }
            if mj2 == -1 && mi2 - 2 >= -7 {
                let row = idx(1, mi2 - 2);
                h[(row, col)] += 0.5 * c.a_hz * ladder_i(mi, false);
            }
        }
    }
    h
}

/// Numerically diagonalized spectrum, labelled adiabatically: within each
/// total-m block the F=4 state is the lower one (A < 0). Returns energies in
/// the library's canonical (F, m) order together with the eigenvectors.
pub fn diagonalize(c: &AtomicConstants, b_gauss: f64) -> (Vec<f64>, Vec<DVector<f64>>) {
    let h = hamiltonian(c, b_gauss);
    let se = nalgebra::SymmetricEigen::new(h);
    // group eigenpairs by total m (eigenvectors live in a single m-sector)
    let mut by_m: Vec<Vec<(f64, DVector<f64>)>> = vec![Vec::new(); 9];
    for k in 0..DIM {
        let v = se.eigenvectors.column(k).into_owned();
        // total (doubled) m of the dominant component
        let mut best = (0.0, 0i64);
        for mj2 in [-1i64, 1] {
            for mi2 in (-7..=7i64).step_by(2) {
                let w = v[idx(mj2, mi2)].abs();
                if w > best.0 {
                    best = (w, mj2 + mi2);
                }
            }
        }
        let m2 = best.1;
        by_m[((m2 + 8) / 2) as usize].push((se.eigenvalues[k], v));
    }
    let mut energies = vec![0.0; DIM];
    let mut vectors: Vec<DVector<f64>> = vec![DVector::zeros(DIM); DIM];
    for (slot, mut group) in by_m.into_iter().enumerate() {
        let m = slot as i64 - 4;
        group.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        match group.len() {
            1 => {
                // stretched: F=4 only
                let i = index_of(4, m as i32);
                energies[i] = group[0].0;
                vectors[i] = group.remove(0).1;
            }
            2 => {
                // F=4 below F=3 for A < 0
                let i4 = index_of(4, m as i32);
                let i3 = index_of(3, m as i32);
                energies[i4] = group[0].0;
                energies[i3] = group[1].0;
                vectors[i3] = group.pop().unwrap().1;
                vectors[i4] = group.pop().unwrap().1;
            }
            n => panic!("m = {m} sector has {n} states"),
        }
    }
    (energies, vectors)
}

pub fn index_of(f: i32, m: i32) -> usize {
    if f == 3 {
        (m + 3) as usize
    } else {
        7 + (m + 4) as usize
    }
}

/// Spherical moment operator g_J·J_q + g_I·I_q in the uncoupled basis,
/// rebuilt independently of the library.
pub fn moment_operator(c: &AtomicConstants, q: i32) -> DMatrix<f64> {
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut m = DMatrix::zeros(DIM, DIM);
    for mj2 in [-1i64, 1] {
        for mi2 in (-7..=7i64).step_by(2) {
            let col = idx(mj2, mi2);
            let mj = mj2 as f64 / 2.0;
            let mi = mi2 as f64 / 2.0;
            match q {
                0 => m[(col, col)] += c.g_j * mj + c.g_i * mi,
                1 => {
                    if mj2 == -1 {
                        m[(idx(1, mi2), col)] += -c.g_j * inv_sqrt2;
                    }
                    if mi2 + 2 <= 7 {
                        m[(idx(mj2, mi2 + 2), col)] += -c.g_i * ladder_i(mi, true) * inv_sqrt2;
                    }
                }
                -1 => {
                    if mj2 == 1 {
                        m[(idx(-1, mi2), col)] += c.g_j * inv_sqrt2;
                    }
                    if mi2 - 2 >= -7 {
                        m[(idx(mj2, mi2 - 2), col)] += c.g_i * ladder_i(mi, false) * inv_sqrt2;
                    }
                }
                _ => panic!("|q| <= 1"),
            }
        }
    }
    m
}

#[allow(dead_code)]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}
