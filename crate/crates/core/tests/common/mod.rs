//! Reference implementations used as test oracles. Nothing here calls into
//! the library's distribution code; formulas are written out directly.
#![allow(dead_code)]

use eva_core::rng::CounterRng;
use rand_distr::{Distribution, Poisson};

/// GEV distribution function from the textbook formula.
pub fn gev_cdf(x: f64, mu: f64, sigma: f64, xi: f64) -> f64 {
    let z = (x - mu) / sigma;
    if xi == 0.0 {
        return (-(-z).exp()).exp();
    }
    let t = 1.0 + xi * z;
    if t <= 0.0 {
        return if xi > 0.0 { 0.0 } else { 1.0 };
    }
    (-t.powf(-1.0 / xi)).exp()
}

pub fn gev_pdf(x: f64, mu: f64, sigma: f64, xi: f64) -> f64 {
    let z = (x - mu) / sigma;
    if xi == 0.0 {
        return (-z - (-z).exp()).exp() / sigma;
    }
    let t = 1.0 + xi * z;
    if t <= 0.0 {
        return 0.0;
    }
    t.powf(-1.0 / xi - 1.0) * (-t.powf(-1.0 / xi)).exp() / sigma
}

pub fn gev_quantile(p: f64, mu: f64, sigma: f64, xi: f64) -> f64 {
    let y = -p.ln();
    if xi == 0.0 {
        mu - sigma * y.ln()
    } else {
        mu + sigma * (y.powf(-xi) - 1.0) / xi
    }
}

pub fn gpd_pdf(x: f64, u: f64, sigma: f64, xi: f64) -> f64 {
    let z = (x - u) / sigma;
    if z < 0.0 {
        return 0.0;
    }
    if xi == 0.0 {
        return (-z).exp() / sigma;
    }
    let t = 1.0 + xi * z;
    if t <= 0.0 {
        return 0.0;
    }
    t.powf(-1.0 / xi - 1.0) / sigma
}

pub fn gpd_quantile(p: f64, u: f64, sigma: f64, xi: f64) -> f64 {
    if xi == 0.0 {
        u - sigma * (1.0 - p).ln()
    } else {
        u + sigma * ((1.0 - p).powf(-xi) - 1.0) / xi
    }
}

/// Adaptive Simpson quadrature with Richardson correction.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
            + rec(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    rec(f, a, fa, b, fb, m, fm, whole, tol, 50)
}

/// Richardson-extrapolated central difference.
pub fn derivative(f: &dyn Fn(f64) -> f64, x: f64) -> f64 {
    let h = 1e-3 * x.abs().max(1e-2);
    let d = |h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
    let (d1, d2) = (d(h), d(h / 2.0));
    (4.0 * d2 - d1) / 3.0
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn std_dev(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

/// Least-squares slope of `y` on `x`.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Independent stream of uniforms on (0, 1) for replicate `rep`.
pub struct Uniforms(CounterRng);

impl Uniforms {
    pub fn new(seed: u64, rep: u64) -> Self {
        Uniforms(CounterRng::new(seed, rep, 0))
    }

    pub fn next(&mut self) -> f64 {
        self.0.uniform()
    }

    pub fn poisson(&mut self, mean: f64) -> u64 {
        Poisson::new(mean).unwrap().sample(&mut self.0) as u64
    }
}

/// `n` GEV draws by inversion.
pub fn gev_draws(n: usize, mu: f64, sigma: f64, xi: f64, seed: u64, rep: u64) -> Vec<f64> {
    let mut u = Uniforms::new(seed, rep);
    (0..n).map(|_| gev_quantile(u.next(), mu, sigma, xi)).collect()
}

/// Exceedances of `u = mu` by a point process with GEV parameters
/// `(mu, sigma, xi)` over `n_years`: a Poisson(n_years) count of
/// GPD(sigma, xi) excesses.
pub fn pp_draws(n_years: f64, mu: f64, sigma: f64, xi: f64, seed: u64, rep: u64) -> Vec<f64> {
    let mut u = Uniforms::new(seed, rep);
    let n = u.poisson(n_years);
    (0..n).map(|_| gpd_quantile(u.next(), mu, sigma, xi)).collect()
}
