//! Deterministic Nelder-Mead simplex minimizer for the low-dimensional
//! angle landscape.

/// Standard reflect/expand/contract/shrink simplex search with a fixed
/// initial simplex, so runs are reproducible.
#[derive(Debug, Clone, Copy)]
pub struct NelderMead {
    pub max_evals: usize,
    pub ftol: f64,
    pub initial_step: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        NelderMead {
            max_evals: 100,
            ftol: 1e-7,
            initial_step: 0.25,
        }
    }
}

impl NelderMead {
    /// Minimize `f` from `x0`; returns the best point seen, its value, and
    /// the number of evaluations spent.
    pub fn minimize<F: FnMut(&[f64]) -> f64>(&self, mut f: F, x0: &[f64]) -> (Vec<f64>, f64, usize) {
        let dim = x0.len();
        let mut evals = 0usize;
        let mut best = (x0.to_vec(), f64::INFINITY);

        let mut eval = |x: &[f64], evals: &mut usize, best: &mut (Vec<f64>, f64)| -> f64 {
            let v = f(x);
            *evals += 1;
            if v < best.1 {
                *best = (x.to_vec(), v);
            }
            v
        };

        // Initial simplex: x0 plus a step along each axis.
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
        let v0 = eval(x0, &mut evals, &mut best);
        simplex.push((x0.to_vec(), v0));
        for k in 0..dim {
            if evals >= self.max_evals {
                return (best.0, best.1, evals);
            }
            let mut x = x0.to_vec();
            x[k] += self.initial_step;
            let v = eval(&x, &mut evals, &mut best);
            simplex.push((x, v));
        }

        while evals < self.max_evals {
            simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
            let spread = simplex[dim].1 - simplex[0].1;
            if spread.abs() <= self.ftol * (1.0 + simplex[0].1.abs()) {
                break;
            }

            let centroid: Vec<f64> = (0..dim)
                .map(|k| simplex[..dim].iter().map(|(x, _)| x[k]).sum::<f64>() / dim as f64)
                .collect();
            let worst = simplex[dim].clone();

            let reflect: Vec<f64> = (0..dim)
                .map(|k| centroid[k] + (centroid[k] - worst.0[k]))
                .collect();
            let v_reflect = eval(&reflect, &mut evals, &mut best);

            if v_reflect < simplex[0].1 {
                if evals >= self.max_evals {
                    break;
                }
                let expand: Vec<f64> = (0..dim)
                    .map(|k| centroid[k] + 2.0 * (centroid[k] - worst.0[k]))
                    .collect();
                let v_expand = eval(&expand, &mut evals, &mut best);
                simplex[dim] = if v_expand < v_reflect {
                    (expand, v_expand)
                } else {
                    (reflect, v_reflect)
                };
            } else if v_reflect < simplex[dim - 1].1 {
                simplex[dim] = (reflect, v_reflect);
            } else {
                if evals >= self.max_evals {
                    break;
                }
                let contract: Vec<f64> = (0..dim)
                    .map(|k| centroid[k] + 0.5 * (worst.0[k] - centroid[k]))
                    .collect();
                let v_contract = eval(&contract, &mut evals, &mut best);
                if v_contract < worst.1 {
                    simplex[dim] = (contract, v_contract);
                } else {
                    // Shrink toward the best vertex.
                    let anchor = simplex[0].0.clone();
                    for vertex in simplex.iter_mut().skip(1) {
                        if evals >= self.max_evals {
                            return (best.0, best.1, evals);
                        }
                        for (x, a) in vertex.0.iter_mut().zip(&anchor) {
                            *x = a + 0.5 * (*x - a);
                        }
                        vertex.1 = eval(&vertex.0, &mut evals, &mut best);
                    }
                }
            }
        }

        (best.0, best.1, evals)
    }
}
