//! Normal and Student-t distribution functions, Gauss-Legendre rules and the
//! Debye function. Thin wrappers over `statrs` special functions where one exists.

use std::f64::consts::{PI, SQRT_2};

use statrs::function::beta::{beta_reg, inv_beta_reg};
use libm::erfc;
use statrs::function::erf::erfc_inv;
use statrs::function::gamma::ln_gamma;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

/// Inverse of [`norm_cdf`]. Returns ±inf at 0 and 1.
#[inline]
pub fn norm_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let x = -SQRT_2 * erfc_inv(2.0 * p);
    // one Newton polish on the tail-accurate side
    if p < 0.5 {
        x - (norm_cdf(x) - p) / norm_pdf(x)
    } else {
        x + (norm_cdf(-x) - (1.0 - p)) / norm_pdf(x)
    }
}

pub fn t_ln_pdf(x: f64, nu: f64) -> f64 {
    ln_gamma(0.5 * (nu + 1.0))
        - ln_gamma(0.5 * nu)
        - 0.5 * (nu * PI).ln()
        - 0.5 * (nu + 1.0) * (x * x / nu).ln_1p()
}

pub fn t_cdf(x: f64, nu: f64) -> f64 {
    if x.is_infinite() {
        return if x > 0.0 { 1.0 } else { 0.0 };
    }
    let x2 = x * x;
    if x2 < nu {
        // near the centre the tail form loses digits to 1 - I
        let half = 0.5 * beta_reg(0.5, 0.5 * nu, x2 / (nu + x2));
        return if x < 0.0 { 0.5 - half } else { 0.5 + half };
    }
    let tail = 0.5 * beta_reg(0.5 * nu, 0.5, nu / (nu + x2));
    if x < 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

/// Student-t quantile: incomplete-beta inversion followed by two Newton polishes.
pub fn t_quantile(p: f64, nu: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    if p == 0.5 {
        return 0.0;
    }
    let lower = p.min(1.0 - p);
    let z = inv_beta_reg(0.5 * nu, 0.5, 2.0 * lower);
    let mut x = -(nu * (1.0 - z) / z).sqrt();
    for _ in 0..2 {
        let dens = t_ln_pdf(x, nu).exp();
        if !(dens > 0.0) || !x.is_finite() {
            break;
        }
        let step = (t_cdf(x, nu) - lower) / dens;
        if !step.is_finite() {
            break;
        }
        x -= step;
    }
    if p > 0.5 {
        -x
    } else {
        x
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1] (Newton iteration on P_n).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { x } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite Gauss-Legendre quadrature of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize, order: usize) -> f64 {
    let (x, w) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let mid = lo + 0.5 * h;
        for (xi, wi) in x.iter().zip(&w) {
            total += wi * f(mid + 0.5 * h * xi);
        }
    }
    total * 0.5 * h
}

/// First Debye function `D1(x) = (1/x) ∫_0^x t / (e^t - 1) dt`.
pub fn debye1(x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    if x < 0.0 {
        return debye1(-x) - x / 2.0;
    }
    let integrand = |t: f64| if t == 0.0 { 1.0 } else { t / t.exp_m1() };
    let panels = (x.ceil() as usize).clamp(4, 64);
    integrate(integrand, 0.0, x, panels, 16) / x
}

/// Standard bivariate normal CDF `P(X ≤ h, Y ≤ k)` with correlation `r`
/// (Drezner-Wesolowsky / Genz quadrature).
pub fn bvn_cdf(h: f64, k: f64, r: f64) -> f64 {
    bvn_upper(-h, -k, r)
}

/// `P(X > h, Y > k)`.
fn bvn_upper(h: f64, k: f64, r: f64) -> f64 {
    let order = if r.abs() < 0.3 {
        6
    } else if r.abs() < 0.75 {
        12
    } else {
        20
    };
    let (nodes, weights) = gauss_legendre(order);
    // Genz uses the non-positive half of the symmetric rule.
    let half: Vec<(f64, f64)> = nodes
        .iter()
        .zip(&weights)
        .filter(|(x, _)| **x < 0.0)
        .map(|(x, w)| (*x, *w))
        .collect();
    let mut k = k;
    let mut hk = h * k;
    let mut bvn = 0.0;
    if r.abs() < 0.925 {
        let hs = (h * h + k * k) / 2.0;
        let asr = r.asin();
        for &(x, w) in &half {
            for sgn in [-1.0, 1.0] {
                let sn = (asr * (1.0 + sgn * x) / 2.0).sin();
                bvn += w * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
            }
        }
        bvn = bvn * asr / (4.0 * PI) + norm_cdf(-h) * norm_cdf(-k);
    } else {
        if r < 0.0 {
            k = -k;
            hk = -hk;
        }
        if r.abs() < 1.0 {
            let as_ = (1.0 - r) * (1.0 + r);
            let mut a = as_.sqrt();
            let bs = (h - k).powi(2);
            let c = (4.0 - hk) / 8.0;
            let d = (12.0 - hk) / 16.0;
            bvn = a
                * (-(bs / as_ + hk) / 2.0).exp()
                * (1.0 - c * (bs - as_) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as_ * as_ / 5.0);
            if hk > -160.0 {
                let b = bs.sqrt();
                bvn -= (-hk / 2.0).exp()
                    * (2.0 * PI).sqrt()
                    * norm_cdf(-b / a)
                    * b
                    * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
            }
            a /= 2.0;
            for &(x, w) in &half {
                for sgn in [-1.0, 1.0] {
                    let xs = (a * (sgn * x + 1.0)).powi(2);
                    let rs = (1.0 - xs).sqrt();
                    let asr = -(bs / xs + hk) / 2.0;
                    if asr > -100.0 {
                        bvn += a
                            * w
                            * asr.exp()
                            * ((-hk * (1.0 - rs) / (2.0 * (1.0 + rs))).exp() / rs
                                - (1.0 + c * xs * (1.0 + d * xs)));
                    }
                }
            }
            bvn = -bvn / (2.0 * PI);
        }
        if r > 0.0 {
            bvn += norm_cdf(-h.max(k));
        } else {
            bvn = -bvn;
            if k > h {
                bvn += norm_cdf(k) - norm_cdf(h);
            }
        }
    }
    bvn.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn normal_quantile_inverts_cdf() {
        for &p in &[1e-12, 1e-6, 0.01, 0.3, 0.5, 0.9, 0.999_999] {
            assert_abs_diff_eq!(norm_cdf(norm_quantile(p)), p, epsilon = 1e-14 + 1e-12 * p);
        }
        assert_abs_diff_eq!(norm_quantile(0.9), 1.281_551_565_544_600_4, epsilon = 1e-12);
    }

    #[test]
    fn t_matches_reference_values() {
        // scipy.stats.t for the CDF, 40-digit mpmath root finding for quantiles
        assert_abs_diff_eq!(t_cdf(0.3, 4.0), 0.610_439_285_861_270_2, epsilon = 1e-14);
        assert_abs_diff_eq!(t_cdf(-2.5, 3.0), 0.043_853_323_504_032_77, epsilon = 1e-14);
        assert_abs_diff_eq!(t_cdf(1e-7, 6.0), 0.500_000_038_273_277_2, epsilon = 1e-15);
        assert_abs_diff_eq!(t_quantile(0.6, 5.0), 0.267_180_865_704_145_1, epsilon = 1e-14);
        assert_abs_diff_eq!(t_quantile(0.999, 10.0), 4.143_700_494_046_590, epsilon = 1e-12);
    }

    #[test]
    fn t_quantile_round_trip() {
        for &nu in &[2.0, 3.0, 4.5, 10.0, 31.0] {
            for &p in &[1e-8, 0.001, 0.2, 0.5, 0.77, 0.999] {
                let x = t_quantile(p, nu);
                assert_abs_diff_eq!(t_cdf(x, nu), p, epsilon = 1e-12);
            }
        }
        // t_2 has the closed-form quantile x = (2p-1)/sqrt(2p(1-p)).
        let p: f64 = 0.8;
        let exact = (2.0 * p - 1.0) / (2.0 * p * (1.0 - p)).sqrt();
        assert_abs_diff_eq!(t_quantile(p, 2.0), exact, epsilon = 1e-12);
    }

    #[test]
    fn t_density_integrates_to_cdf_difference() {
        let nu = 4.0;
        let mass = integrate(|x| t_ln_pdf(x, nu).exp(), -1.0, 2.0, 20, 16);
        assert_abs_diff_eq!(mass, t_cdf(2.0, nu) - t_cdf(-1.0, nu), epsilon = 1e-12);
    }

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        let (x, w) = gauss_legendre(6);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert_abs_diff_eq!(s, 2.0 / 11.0, epsilon = 1e-14);
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn debye_limits() {
        assert_abs_diff_eq!(debye1(1e-9), 1.0, epsilon = 1e-8);
        // D1(x) -> pi^2 / (6x) for large x.
        assert_abs_diff_eq!(debye1(60.0), PI * PI / 360.0, epsilon = 1e-12);
        assert_abs_diff_eq!(debye1(-2.0), debye1(2.0) + 1.0, epsilon = 1e-14);
    }

    #[test]
    fn bvn_at_origin_matches_sheppard() {
        for &r in &[-0.99f64, -0.8, -0.5, 0.0, 0.2, 0.5, 0.8, 0.95, 0.999] {
            let exact = 0.25 + r.asin() / (2.0 * PI);
            assert_abs_diff_eq!(bvn_cdf(0.0, 0.0, r), exact, epsilon = 1e-13);
        }
    }

    #[test]
    fn bvn_independent_factorizes() {
        assert_abs_diff_eq!(
            bvn_cdf(0.3, -1.2, 0.0),
            norm_cdf(0.3) * norm_cdf(-1.2),
            epsilon = 1e-14
        );
    }

    #[test]
    fn bvn_matches_reference_values() {
        // adaptive quadrature in scipy
        let cases = [
            (0.4, -0.3, 0.6, 0.335_037_043_938_903_66),
            (1.1, 0.7, 0.93, 0.750_760_968_830_523_8),
            (-0.5, 0.2, -0.95, 0.010_966_280_019_948_375),
            (0.3, 0.9, -0.4, 0.465_825_942_814_071_9),
        ];
        for (h, k, r, want) in cases {
            assert_abs_diff_eq!(bvn_cdf(h, k, r), want, epsilon = 1e-14);
        }
    }

    #[test]
    fn bvn_matches_quadrature() {
        // P(X<=h, Y<=k) = ∫_{-inf}^{k} φ(y) Φ((h - r y)/sqrt(1-r^2)) dy
        for &(h, k, r) in &[(0.4, -0.3, 0.6), (1.1, 0.7, 0.93), (-0.5, 0.2, -0.95), (0.3, 0.9, -0.4)] {
            let s = (1.0f64 - r * r).sqrt();
            let q = integrate(|y| norm_pdf(y) * norm_cdf((h - r * y) / s), -12.0, k, 200, 16);
            assert_abs_diff_eq!(bvn_cdf(h, k, r), q, epsilon = 1e-13);
        }
    }
}
