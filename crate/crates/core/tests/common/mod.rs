//! Reference implementations used only by the tests. Nothing here calls into
//! the crate's numerics, so agreement is an independent check.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn simpson(a: f64, b: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = (b - a) / panels as f64;
    let mut sum = f(a) + f(b);
    for k in 1..panels {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + k as f64 * h);
    }
    sum * h / 3.0
}

/// Standard normal CDF by composite Simpson integration of the density:
/// over `[0, |x|]` near the centre and over the tail `[|x|, |x| + 20]`
/// beyond one standard deviation, which avoids cancellation.
pub fn normal_cdf(x: f64) -> f64 {
    let phi = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let a = x.abs();
    let upper_tail = if a <= 1.0 {
        0.5 - simpson(0.0, a, 20_000, phi)
    } else {
        simpson(a, a + 20.0, 200_000, phi)
    };
    if x >= 0.0 {
        1.0 - upper_tail
    } else {
        upper_tail
    }
}

/// `ln Gamma(a)` for positive integer or half-integer `a`, by the exact
/// recurrence from `Gamma(1) = 1` and `Gamma(1/2) = sqrt(pi)`.
pub fn ln_gamma_half_integer(a: f64) -> f64 {
    let twice = (2.0 * a).round() as i64;
    assert!(twice >= 1 && (2.0 * a - twice as f64).abs() < 1e-12);
    let (mut z, mut acc) = if twice % 2 == 0 {
        (1.0, 0.0)
    } else {
        (0.5, 0.5 * std::f64::consts::PI.ln())
    };
    while z < a - 1e-9 {
        acc += z.ln();
        z += 1.0;
    }
    acc
}

/// Chi-square CDF with `df` degrees of freedom from the power series of the
/// regularized lower incomplete gamma function.
pub fn chi_square_cdf(df: u32, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let a = df as f64 / 2.0;
    let z = x / 2.0;
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut n = 1.0;
    while term > sum * 1e-17 {
        term *= z / (a + n);
        sum += term;
        n += 1.0;
        assert!(n < 1e6);
    }
    (a * z.ln() - z - ln_gamma_half_integer(a) + sum.ln()).exp()
}

/// Root of a nondecreasing `f(x) = p` on `[lo, hi]` by bisection.
pub fn invert(mut lo: f64, mut hi: f64, p: f64, f: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn oracle_normal_quantile(p: f64) -> f64 {
    invert(-12.0, 12.0, p, normal_cdf)
}

pub fn oracle_chi_square_quantile(df: u32, p: f64) -> f64 {
    invert(0.0, 10.0 * df as f64 + 100.0, p, |x| chi_square_cdf(df, x))
}

/// Random covariance `A A' / k + diag(d)` with entries of order `scale`.
pub fn random_covariance(r: &mut impl Rng, n: usize, scale: f64) -> DMatrix<f64> {
    let k = n + 2;
    let a = DMatrix::from_fn(n, k, |_, _| r.random_range(-1.0..1.0));
    let d = DVector::from_fn(n, |_, _| r.random_range(0.05..0.5));
    (a.clone() * a.transpose() / k as f64 + DMatrix::from_diagonal(&d)) * scale
}

pub fn random_vector(r: &mut impl Rng, n: usize, lo: f64, hi: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| r.random_range(lo..hi))
}

/// One-factor daily-return ground truth for `n` assets: betas in
/// `[0.5, 1.5]`, market volatility 1%, idiosyncratic volatility 1-2.5%,
/// mean returns in `[-0.05%, 0.2%]` per day.
pub fn ground_truth(seed: u64, n: usize) -> (DVector<f64>, DMatrix<f64>) {
    let mut r = rng(seed);
    let beta = random_vector(&mut r, n, 0.5, 1.5);
    let idio = random_vector(&mut r, n, 0.01, 0.025);
    let mean = random_vector(&mut r, n, -0.0005, 0.002);
    let market = 0.01_f64;
    let mut cov = &beta * beta.transpose() * (market * market);
    for i in 0..n {
        cov[(i, i)] += idio[i] * idio[i];
    }
    (mean, cov)
}

/// Objective evaluated straight from the model definitions.
#[derive(Debug, Clone)]
pub enum OracleObjective {
    Mark {
        mu: DVector<f64>,
        sigma: DMatrix<f64>,
        lambda: f64,
    },
    Box {
        mu: DVector<f64>,
        sigma: DMatrix<f64>,
        lambda: f64,
        delta: DVector<f64>,
    },
    Ellip {
        mu: DVector<f64>,
        sigma: DMatrix<f64>,
        lambda: f64,
        delta_sq: f64,
        sigma_mu: DMatrix<f64>,
    },
    Sep {
        mu_lo: DVector<f64>,
        sigma_hi: DMatrix<f64>,
        lambda: f64,
    },
}

fn quad(m: &DMatrix<f64>, x: &[f64]) -> f64 {
    let n = x.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += x[i] * m[(i, j)] * x[j];
        }
    }
    s
}

fn dot(v: &DVector<f64>, x: &[f64]) -> f64 {
    v.iter().zip(x).map(|(a, b)| a * b).sum()
}

impl OracleObjective {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Self::Mark { mu, sigma, lambda } => dot(mu, x) - lambda * quad(sigma, x),
            Self::Box {
                mu,
                sigma,
                lambda,
                delta,
            } => {
                let worst: f64 = x.iter().zip(delta.iter()).map(|(xi, d)| d * xi.abs()).sum();
                dot(mu, x) - worst - lambda * quad(sigma, x)
            }
            Self::Ellip {
                mu,
                sigma,
                lambda,
                delta_sq,
                sigma_mu,
            } => dot(mu, x) - (delta_sq * quad(sigma_mu, x).max(0.0)).sqrt() - lambda * quad(sigma, x),
            Self::Sep {
                mu_lo,
                sigma_hi,
                lambda,
            } => dot(mu_lo, x) - lambda * quad(sigma_hi, x),
        }
    }

    /// Best value over the simplex grid with spacing `1 / steps` (N = 2 or 3).
    pub fn grid_best(&self, n: usize, steps: usize) -> f64 {
        let h = 1.0 / steps as f64;
        let mut best = f64::NEG_INFINITY;
        match n {
            2 => {
                for i in 0..=steps {
                    let a = i as f64 * h;
                    best = best.max(self.eval(&[a, 1.0 - a]));
                }
            }
            3 => {
                for i in 0..=steps {
                    for j in 0..=(steps - i) {
                        let a = i as f64 * h;
                        let b = j as f64 * h;
                        best = best.max(self.eval(&[a, b, (1.0 - a - b).max(0.0)]));
                    }
                }
            }
            _ => panic!("grid oracle supports N = 2 or 3"),
        }
        best
    }
}
