//! Derivative-free minimisation and finite-difference curvature.

use nalgebra::{SMatrix, SVector};

/// Objective values at or above this are treated as infeasible.
pub const INFEASIBLE: f64 = 1e30;

#[derive(Debug, Clone)]
pub struct Minimum<const N: usize> {
    pub x: [f64; N],
    pub value: f64,
    pub iterations: usize,
    /// Simplex collapsed to the relative tolerance before the iteration cap.
    pub converged: bool,
}

/// Nelder-Mead simplex search started from `x0` with per-coordinate `steps`.
///
/// Stops when `f_worst - f_best <= tol * (|f_best| + tol)` or after `max_iter`
/// iterations.
pub fn nelder_mead<const N: usize, F>(
    f: &mut F,
    x0: [f64; N],
    steps: [f64; N],
    tol: f64,
    max_iter: usize,
) -> Minimum<N>
where
    F: FnMut(&[f64; N]) -> f64,
{
    let mut simplex: Vec<([f64; N], f64)> = Vec::with_capacity(N + 1);
    simplex.push((x0, f(&x0)));
    for i in 0..N {
        let mut x = x0;
        x[i] += steps[i];
        simplex.push((x, f(&x)));
    }

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[N].1;
        if worst - best <= tol * (best.abs() + tol) {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = [0.0; N];
        for (x, _) in &simplex[..N] {
            for j in 0..N {
                centroid[j] += x[j] / N as f64;
            }
        }
        let along = |t: f64, from: &[f64; N]| {
            let mut p = [0.0; N];
            for j in 0..N {
                p[j] = centroid[j] + t * (from[j] - centroid[j]);
            }
            p
        };

        let worst_x = simplex[N].0;
        let xr = along(-1.0, &worst_x);
        let fr = f(&xr);
        if fr < simplex[0].1 {
            let xe = along(-2.0, &worst_x);
            let fe = f(&xe);
            simplex[N] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[N - 1].1 {
            simplex[N] = (xr, fr);
            continue;
        }
        // contraction: outside if the reflection beat the worst point
        let (xc, fc) = if fr < worst {
            let xc = along(-0.5, &worst_x);
            (xc, f(&xc))
        } else {
            let xc = along(0.5, &worst_x);
            (xc, f(&xc))
        };
        if fc < fr.min(worst) {
            simplex[N] = (xc, fc);
            continue;
        }
        // shrink towards the best vertex
        let best_x = simplex[0].0;
        for vertex in simplex.iter_mut().skip(1) {
            let mut x = vertex.0;
            for j in 0..N {
                x[j] = best_x[j] + 0.5 * (x[j] - best_x[j]);
            }
            *vertex = (x, f(&x));
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    Minimum {
        x: simplex[0].0,
        value: simplex[0].1,
        iterations,
        converged,
    }
}

/// Finite-difference step for coordinate value `v`.
#[inline]
pub fn fd_step(v: f64) -> f64 {
    (1e-4 * v.abs()).max(1e-6)
}

/// Central-difference Hessian; `None` if any probe is infeasible.
pub fn hessian<const N: usize, F>(f: &mut F, x: &[f64; N]) -> Option<SMatrix<f64, N, N>>
where
    F: FnMut(&[f64; N]) -> f64,
{
    let f0 = f(x);
    if !f0.is_finite() || f0 >= INFEASIBLE {
        return None;
    }
    let h: [f64; N] = std::array::from_fn(|i| fd_step(x[i]));
    let mut eval = |di: usize, si: f64, dj: usize, sj: f64| -> Option<f64> {
        let mut p = *x;
        p[di] += si * h[di];
        p[dj] += sj * h[dj];
        let v = f(&p);
        (v.is_finite() && v < INFEASIBLE).then_some(v)
    };
    let mut m = SMatrix::<f64, N, N>::zeros();
    for i in 0..N {
        let plus = eval(i, 1.0, i, 0.0)?;
        let minus = eval(i, -1.0, i, 0.0)?;
        m[(i, i)] = (plus - 2.0 * f0 + minus) / (h[i] * h[i]);
        for j in 0..i {
            let pp = eval(i, 1.0, j, 1.0)?;
            let pm = eval(i, 1.0, j, -1.0)?;
            let mp = eval(i, -1.0, j, 1.0)?;
            let mm = eval(i, -1.0, j, -1.0)?;
            let v = (pp - pm - mp + mm) / (4.0 * h[i] * h[j]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Some(m)
}

/// Central-difference gradient; `None` if any probe is infeasible.
pub fn gradient<const N: usize, F>(f: &mut F, x: &[f64; N]) -> Option<SVector<f64, N>>
where
    F: FnMut(&[f64; N]) -> f64,
{
    let mut g = SVector::<f64, N>::zeros();
    for i in 0..N {
        let h = fd_step(x[i]);
        let mut p = *x;
        p[i] = x[i] + h;
        let fp = f(&p);
        p[i] = x[i] - h;
        let fm = f(&p);
        if !(fp < INFEASIBLE && fm < INFEASIBLE) {
            return None;
        }
        g[i] = (fp - fm) / (2.0 * h);
    }
    Some(g)
}

/// Newton steps on finite-difference derivatives, accepted only while they
/// lower the objective. Tightens a simplex optimum to near machine precision.
pub fn newton_polish<const N: usize, F>(f: &mut F, start: Minimum<N>, max_steps: usize) -> Minimum<N>
where
    F: FnMut(&[f64; N]) -> f64,
{
    let mut best = start;
    for _ in 0..max_steps {
        let Some(h) = hessian(f, &best.x) else { break };
        let Some(g) = gradient(f, &best.x) else { break };
        let Some(chol) = h.cholesky() else { break };
        let step = chol.solve(&g);
        let mut accepted = false;
        let mut scale = 1.0;
        for _ in 0..4 {
            let cand: [f64; N] = std::array::from_fn(|i| best.x[i] - scale * step[i]);
            let v = f(&cand);
            if v < best.value {
                best.x = cand;
                best.value = v;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    best
}
