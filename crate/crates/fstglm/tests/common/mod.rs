//! Test-only oracles, written independently of the library's numerics:
//! Stirling log-gamma, adaptive Simpson quadrature, latent-moment
//! integrals, Monte Carlo pools, and a probit IRLS fitter.
#![allow(dead_code)]

use fstglm::dist::{rng_for, sample_latent, streams};
use fstglm::SkewTDensityParams;

// ---------------------------------------------------------------- quadrature

/// Adaptive Simpson on [a, b]. `forced` initial bisections guard against
/// features hiding between the first nodes.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
        h / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        forced: u32,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, m - a);
        let right = simpson(fm, frm, fb, b - m);
        let delta = left + right - whole;
        if depth == 0 {
            return left + right + delta / 15.0;
        }
        // Floor the acceptance test at the rounding noise of the panel sums;
        // below that, further bisection only chases floating-point dust.
        let tol = tol.max(f64::EPSILON * (left.abs() + right.abs()));
        if forced == 0 && delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        let half_tol = 0.5 * tol;
        let forced = forced.saturating_sub(1);
        rec(f, a, m, fa, flm, fm, left, half_tol, forced, depth - 1)
            + rec(f, m, b, fm, frm, fb, right, half_tol, forced, depth - 1)
    }
    let fa = f(a);
    let fm = f(0.5 * (a + b));
    let fb = f(b);
    let whole = simpson(fa, fm, fb, b - a);
    rec(f, a, b, fa, fm, fb, whole, tol.max(1e-300), 8, 60)
}

/// Integral of f over (0, inf) via z = tan(u). FRAC_PI_2 rounds below the
/// exact half-pi, so tan stays finite (~1.6e16) and the truncated tail is
/// negligible even for Cauchy-rate decay.
pub fn integrate_half_line(f: &dyn Fn(f64) -> f64, tol: f64) -> f64 {
    let g = |u: f64| {
        let t = u.tan();
        let sec2 = 1.0 + t * t;
        f(t) * sec2
    };
    adaptive_simpson(&g, 0.0, std::f64::consts::FRAC_PI_2, tol)
}

// ---------------------------------------------------- special-function refs

/// Stirling series with recurrence lift; ~1e-14 relative for x > 0.
pub fn ln_gamma_ref(x: f64) -> f64 {
    assert!(x > 0.0);
    let mut shift = 0.0;
    let mut z = x;
    while z < 12.0 {
        shift -= z.ln();
        z += 1.0;
    }
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    // Bernoulli-number tail B_2/(2*1*z) - B_4/(4*3*z^3) + ...
    let series = inv
        * (1.0 / 12.0
            + inv2
                * (-1.0 / 360.0
                    + inv2
                        * (1.0 / 1260.0
                            + inv2 * (-1.0 / 1680.0 + inv2 * (1.0 / 1188.0)))));
    shift + 0.5 * ((2.0 * std::f64::consts::PI).ln() - z.ln()) + z * (z.ln() - 1.0) + series
}

/// Student-t density from its textbook formula.
pub fn t_pdf_ref(x: f64, nu: f64) -> f64 {
    let lnc = ln_gamma_ref(0.5 * (nu + 1.0))
        - ln_gamma_ref(0.5 * nu)
        - 0.5 * (nu * std::f64::consts::PI).ln();
    let arg = x * x / nu;
    (lnc - 0.5 * (nu + 1.0) * arg.ln_1p()).exp()
}

pub fn normal_pdf_ref(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Taylor-series normal CDF (Marsaglia); clamped beyond |x| = 8, where the
/// probit IRLS below never needs relative tail accuracy.
pub fn normal_cdf_ref(x: f64) -> f64 {
    if x < -8.0 {
        return 6.22e-16;
    }
    if x > 8.0 {
        return 1.0 - 6.22e-16;
    }
    let mut term = x;
    let mut sum = x;
    let x2 = x * x;
    let mut k = 0.0;
    while term.abs() > 1e-18 * sum.abs().max(1.0) {
        k += 1.0;
        term *= x2 / (2.0 * k + 1.0);
        sum += term;
    }
    0.5 + sum * normal_pdf_ref(x)
}

// ------------------------------------------------------- two-piece t oracle

/// Map a two-piece deviation back to its symmetric coordinate.
pub fn unskew(v: f64, delta: f64) -> f64 {
    if v >= 0.0 {
        v / delta
    } else {
        v * delta
    }
}

/// Two-piece t density with mode 0, from first principles.
pub fn two_piece_pdf_ref(v: f64, nu: f64, delta: f64) -> f64 {
    2.0 / (delta + 1.0 / delta) * t_pdf_ref(unskew(v, delta), nu)
}

/// E[lambda | z] for the gamma-mixture latent: (nu+1)/(nu + r0^2), with r0
/// the symmetric coordinate of the residual.
fn lambda_given_z(v: f64, nu: f64, delta: f64) -> f64 {
    let r0 = unskew(v, delta);
    (nu + 1.0) / (nu + r0 * r0)
}

/// Conditional latent moment E[w(z) | sign(z) matches y] by quadrature:
/// `w` receives (z, E[lambda|z], r) where r is the symmetric coordinate of
/// z around eta.
fn conditional_moment(
    y: bool,
    eta: f64,
    nu: f64,
    delta: f64,
    w: &dyn Fn(f64, f64, f64) -> f64,
) -> f64 {
    let sign = if y { 1.0 } else { -1.0 };
    let num = integrate_half_line(
        &|u: f64| {
            let z = sign * u;
            let v = z - eta;
            w(z, lambda_given_z(v, nu, delta), eta + unskew(v, delta))
                * two_piece_pdf_ref(v, nu, delta)
        },
        1e-15,
    );
    let den = integrate_half_line(
        &|u: f64| two_piece_pdf_ref(sign * u - eta, nu, delta),
        1e-15,
    );
    num / den
}

pub fn oracle_e_lambda(y: bool, eta: f64, nu: f64, delta: f64) -> f64 {
    conditional_moment(y, eta, nu, delta, &|_, el, _| el)
}

pub fn oracle_e_lambda_r(y: bool, eta: f64, nu: f64, delta: f64) -> f64 {
    conditional_moment(y, eta, nu, delta, &|_, el, r| el * r)
}

/// E[1/tau | beta] under the normal-scale representation of the Laplace
/// prior: density of tau proportional to tau^-1/2 exp(-b^2/2tau - g tau/2).
pub fn oracle_e_tau_inv(beta: f64, gamma: f64) -> f64 {
    let kernel = move |t: f64| {
        if t <= 0.0 {
            return 0.0;
        }
        (-beta * beta / (2.0 * t) - gamma * t / 2.0).exp() / t.sqrt()
    };
    let num = integrate_half_line(
        &|t| if t <= 0.0 { 0.0 } else { kernel(t) / t },
        1e-15,
    );
    let den = integrate_half_line(&kernel, 1e-15);
    num / den
}

// ------------------------------------------------------------------ MC pool

/// One reusable pool of latent draws at mode 0 for a given (nu, delta).
/// Shifting by eta moves the mode without re-drawing.
pub struct McPool {
    pub lambda: Vec<f64>,
    pub z0: Vec<f64>,
    pub r0: Vec<f64>,
}

impl McPool {
    pub fn build(nu: f64, delta: f64, n: usize, seed: u64) -> Self {
        let params = SkewTDensityParams::new(0.0, nu, delta).unwrap();
        let mut rng = rng_for(seed, streams::MC_ORACLE);
        let mut lambda = Vec::with_capacity(n);
        let mut z0 = Vec::with_capacity(n);
        let mut r0 = Vec::with_capacity(n);
        for _ in 0..n {
            let (l, z) = sample_latent(params, &mut rng);
            lambda.push(l);
            z0.push(z);
            r0.push(unskew(z, delta));
        }
        McPool { lambda, z0, r0 }
    }

    /// Mean, standard error, and count of g(lambda, eta + r0) over draws
    /// whose shifted z matches the label's sign.
    pub fn conditional_moment(
        &self,
        eta: f64,
        y: bool,
        g: &dyn Fn(f64, f64) -> f64,
    ) -> (f64, f64, usize) {
        let mut vals = Vec::new();
        for i in 0..self.lambda.len() {
            let z = eta + self.z0[i];
            if (z > 0.0) == y {
                vals.push(g(self.lambda[i], eta + self.r0[i]));
            }
        }
        let n = vals.len();
        assert!(n > 1, "conditioning left too few draws");
        let mean = vals.iter().sum::<f64>() / n as f64;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0);
        (mean, (var / n as f64).sqrt(), n)
    }
}

// ------------------------------------------------------------- linear algebra

/// Gaussian elimination with partial pivoting; independent of the library's
/// Cholesky path.
pub fn gauss_solve(a: &mut [Vec<f64>], b: &mut [f64]) -> Vec<f64> {
    let n = b.len();
    for k in 0..n {
        let piv = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
        a.swap(k, piv);
        b.swap(k, piv);
        assert!(a[k][k].abs() > 1e-300, "singular system");
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let mut s = b[k];
        for j in k + 1..n {
            s -= a[k][j] * x[j];
        }
        x[k] = s / a[k][k];
    }
    x
}

/// Unpenalized probit MLE by iteratively reweighted least squares.
pub fn fit_probit_irls(rows: &[Vec<f64>], y: &[bool], max_iter: usize) -> Vec<f64> {
    let n = rows.len();
    let m = rows[0].len();
    let mut beta = vec![0.0; m];
    for _ in 0..max_iter {
        let mut xtwx = vec![vec![0.0; m]; m];
        let mut xtwz = vec![0.0; m];
        for i in 0..n {
            let eta: f64 = rows[i].iter().zip(&beta).map(|(a, b)| a * b).sum();
            let mu = normal_cdf_ref(eta).clamp(1e-10, 1.0 - 1e-10);
            let phi = normal_pdf_ref(eta).max(1e-300);
            let w = phi * phi / (mu * (1.0 - mu));
            let z = eta + (if y[i] { 1.0 } else { 0.0 } - mu) / phi;
            for a in 0..m {
                for b in 0..m {
                    xtwx[a][b] += w * rows[i][a] * rows[i][b];
                }
                xtwz[a] += w * rows[i][a] * z;
            }
        }
        for a in 0..m {
            xtwx[a][a] += 1e-10;
        }
        let new = gauss_solve(&mut xtwx, &mut xtwz);
        let change: f64 = new
            .iter()
            .zip(&beta)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        beta = new;
        if change < 1e-12 {
            break;
        }
    }
    beta
}

/// Mean probit log-likelihood per observation for given coefficients.
pub fn probit_mean_loglik(rows: &[Vec<f64>], y: &[bool], beta: &[f64]) -> f64 {
    let mut total = 0.0;
    for (row, &yi) in rows.iter().zip(y) {
        let eta: f64 = row.iter().zip(beta).map(|(a, b)| a * b).sum();
        let mu = normal_cdf_ref(eta).clamp(1e-300, 1.0 - 1e-16);
        total += if yi { mu.ln() } else { (1.0 - mu).ln() };
    }
    total / rows.len() as f64
}

// ------------------------------------------------------------------- helpers

pub fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1e-300)
}

/// R^2 of the least-squares line through (x, y) pairs.
pub fn r_squared(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    sxy * sxy / (sxx * syy)
}
