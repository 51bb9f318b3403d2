//! Small dependency-free Nelder-Mead simplex minimizer used for the
//! nonlinear Rabi fit and the final polish of the nulling procedures.

pub struct NelderMead {
    pub x_tol: f64,
    pub f_tol: f64,
    pub max_iter: usize,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self { x_tol: 1e-10, f_tol: 1e-12, max_iter: 400 }
    }
}

pub struct NmResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl NelderMead {
    pub fn minimize<F>(&self, mut f: F, x0: &[f64], step: &[f64]) -> NmResult
    where
        F: FnMut(&[f64]) -> f64,
    {
        let n = x0.len();
        let mut simplex: Vec<(f64, Vec<f64>)> = Vec::with_capacity(n + 1);
        simplex.push((f(x0), x0.to_vec()));
        for k in 0..n {
            let mut x = x0.to_vec();
            x[k] += step[k];
            simplex.push((f(&x), x));
        }
        let (alpha, beta, gamma, delta) = (1.0, 2.0, 0.5, 0.5);
        let mut iterations = 0;
        let mut converged = false;
        while iterations < self.max_iter {
            iterations += 1;
            simplex.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
            let f_spread = simplex[n].0 - simplex[0].0;
            let x_spread: f64 = (0..n)
                .map(|k| (simplex[n].1[k] - simplex[0].1[k]).abs() / step[k].abs().max(1e-300))
                .fold(0.0, f64::max);
            if f_spread.abs() <= self.f_tol * (1.0 + simplex[0].0.abs()) && x_spread <= self.x_tol
            {
                converged = true;
                break;
            }
            let centroid: Vec<f64> = (0..n)
                .map(|k| simplex[..n].iter().map(|(_, x)| x[k]).sum::<f64>() / n as f64)
                .collect();
            let worst = simplex[n].clone();
            let reflect: Vec<f64> =
                (0..n).map(|k| centroid[k] + alpha * (centroid[k] - worst.1[k])).collect();
            let f_r = f(&reflect);
            if f_r < simplex[0].0 {
                let expand: Vec<f64> =
                    (0..n).map(|k| centroid[k] + beta * (reflect[k] - centroid[k])).collect();
                let f_e = f(&expand);
                simplex[n] = if f_e < f_r { (f_e, expand) } else { (f_r, reflect) };
            } else if f_r < simplex[n - 1].0 {
                simplex[n] = (f_r, reflect);
            } else {
                let contract: Vec<f64> = if f_r < worst.0 {
                    (0..n).map(|k| centroid[k] + gamma * (reflect[k] - centroid[k])).collect()
                } else {
                    (0..n).map(|k| centroid[k] - gamma * (centroid[k] - worst.1[k])).collect()
                };
                let f_c = f(&contract);
                if f_c < worst.0.min(f_r) {
                    simplex[n] = (f_c, contract);
                } else {
                    let best = simplex[0].1.clone();
                    for entry in simplex.iter_mut().skip(1) {
                        let x: Vec<f64> = (0..n)
                            .map(|k| best[k] + delta * (entry.1[k] - best[k]))
                            .collect();
                        *entry = (f(&x), x);
                    }
                }
            }
        }
        simplex.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        NmResult { x: simplex[0].1.clone(), fx: simplex[0].0, iterations, converged }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_rosenbrock() {
        let nm = NelderMead { max_iter: 2000, ..Default::default() };
        let res = nm.minimize(
            |x| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2),
            &[-1.2, 1.0],
            &[0.5, 0.5],
        );
        assert!((res.x[0] - 1.0).abs() < 1e-4, "{:?}", res.x);
        assert!((res.x[1] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn minimizes_quadratic_exactly() {
        let nm = NelderMead::default();
        let res = nm.minimize(
            |x| (x[0] - 3.0).powi(2) + 2.0 * (x[1] + 1.0).powi(2) + 5.0,
            &[0.0, 0.0],
            &[1.0, 1.0],
        );
        assert!(res.converged);
        assert!((res.fx - 5.0).abs() < 1e-9);
    }
}
