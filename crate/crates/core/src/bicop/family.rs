//! Unrotated family formulas. Every family here is exchangeable, so the
//! h-function conditioning on the first argument is `h2(v, u)`.

use crate::error::Result;
use crate::numeric::brent;
use crate::special::{bvn_cdf, integrate, norm_cdf, norm_quantile, t_cdf, t_ln_pdf, t_quantile};

use super::{Family, EPS};

/// `ln(e^a + e^b - 1)` for `a, b >= 0`.
fn ln_sum_exp_minus_one(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp() - (-m).exp()).ln()
}

fn softplus(s: f64) -> f64 {
    if s > 30.0 {
        s + (-s).exp()
    } else {
        s.exp().ln_1p()
    }
}

/// Log-density of the unrotated copula.
pub(super) fn ln_pdf(family: Family, theta: f64, nu: f64, u: f64, v: f64) -> f64 {
    match family {
        Family::Independence => 0.0,
        Family::Gaussian => {
            let (x, y) = (norm_quantile(u), norm_quantile(v));
            let r2 = theta * theta;
            -0.5 * (1.0 - r2).ln() - (r2 * (x * x + y * y) - 2.0 * theta * x * y) / (2.0 * (1.0 - r2))
        }
        Family::StudentT => {
            let (x, y) = (t_quantile(u, nu), t_quantile(v, nu));
            student_ln_pdf_scores(theta, nu, x, y)
        }
        Family::Clayton => {
            let (lu, lv) = (u.ln(), v.ln());
            let l = ln_sum_exp_minus_one(-theta * lu, -theta * lv);
            theta.ln_1p() - (1.0 + theta) * (lu + lv) - (2.0 + 1.0 / theta) * l
        }
        Family::Gumbel => {
            let (x, y) = (-u.ln(), -v.ln());
            let (lx, ly) = (x.ln(), y.ln());
            let (a, b) = (theta * lx, theta * ly);
            let m = a.max(b);
            let ln_s = m + ((a - m).exp() + (b - m).exp()).ln();
            let big_a = (ln_s / theta).exp();
            -big_a + (theta - 1.0) * (lx + ly) + x + y + (1.0 / theta - 2.0) * ln_s + (big_a + theta - 1.0).ln()
        }
        Family::Frank => {
            if theta.abs() < 1e-10 {
                return 0.0;
            }
            // both denominator terms share the sign of theta, so no cancellation
            let k = -(-theta).exp_m1();
            let a = -theta * u + (-theta * v).exp_m1().abs().ln();
            let b = -theta * v + (-theta * (1.0 - v)).exp_m1().abs().ln();
            let m = a.max(b);
            let ln_denom = m + ((a - m).exp() + (b - m).exp()).ln();
            (theta * k).ln() - theta * (u + v) - 2.0 * ln_denom
        }
        Family::Joe => {
            let (ub, vb) = (1.0 - u, 1.0 - v);
            let (a, b) = (ub.powf(theta), vb.powf(theta));
            let s = a + b - a * b;
            (1.0 / theta - 2.0) * s.ln() + (theta - 1.0) * (ub.ln() + vb.ln()) + (theta - 1.0 + s).ln()
        }
    }
}

/// Student-t copula log-density from t scores `x = t_nu^-1(u)`, `y = t_nu^-1(v)`.
pub(super) fn student_ln_pdf_scores(rho: f64, nu: f64, x: f64, y: f64) -> f64 {
    let r2 = 1.0 - rho * rho;
    let q = (x * x + y * y - 2.0 * rho * x * y) / (nu * r2);
    // bivariate t density over the product of the univariate ones
    let ln_joint = statrs::function::gamma::ln_gamma(0.5 * (nu + 2.0))
        - statrs::function::gamma::ln_gamma(0.5 * nu)
        - (nu * std::f64::consts::PI).ln()
        - 0.5 * r2.ln()
        - 0.5 * (nu + 2.0) * q.ln_1p();
    ln_joint - t_ln_pdf(x, nu) - t_ln_pdf(y, nu)
}

/// `∂C(u, v) / ∂v`, the conditional CDF of `U` given `V = v`.
pub(super) fn h2(family: Family, theta: f64, nu: f64, u: f64, v: f64) -> f64 {
    let h = match family {
        Family::Independence => u,
        Family::Gaussian => {
            let (x, y) = (norm_quantile(u), norm_quantile(v));
            norm_cdf((x - theta * y) / (1.0 - theta * theta).sqrt())
        }
        Family::StudentT => {
            let (x, y) = (t_quantile(u, nu), t_quantile(v, nu));
            let scale = ((nu + y * y) * (1.0 - theta * theta) / (nu + 1.0)).sqrt();
            t_cdf((x - theta * y) / scale, nu + 1.0)
        }
        Family::Clayton => {
            let (lu, lv) = (u.ln(), v.ln());
            let l = ln_sum_exp_minus_one(-theta * lu, -theta * lv);
            (-(theta + 1.0) * lv - (1.0 + 1.0 / theta) * l).exp()
        }
        Family::Gumbel => {
            let (x, y) = (-u.ln(), -v.ln());
            let (a, b) = (theta * x.ln(), theta * y.ln());
            let m = a.max(b);
            let ln_s = m + ((a - m).exp() + (b - m).exp()).ln();
            let big_a = (ln_s / theta).exp();
            (-big_a + (1.0 / theta - 1.0) * ln_s + (theta - 1.0) * y.ln() + y).exp()
        }
        Family::Frank => {
            if theta.abs() < 1e-10 {
                return u;
            }
            let num = (-theta * u).exp_m1();
            num / ((-theta * (u - v)).exp() * (-theta * v).exp_m1() + (-theta * (1.0 - v)).exp_m1())
        }
        Family::Joe => {
            let (ub, vb) = (1.0 - u, 1.0 - v);
            let (a, b) = (ub.powf(theta), vb.powf(theta));
            let s = a + b - a * b;
            ((1.0 / theta - 1.0) * s.ln() + (theta - 1.0) * vb.ln()).exp() * (1.0 - a)
        }
    };
    h.clamp(0.0, 1.0)
}

/// Solves `h2(u, v) = w` for `u`.
pub(super) fn h2_inv(family: Family, theta: f64, nu: f64, w: f64, v: f64) -> Result<f64> {
    let u = match family {
        Family::Independence => w,
        Family::Gaussian => norm_cdf(norm_quantile(w) * (1.0 - theta * theta).sqrt() + theta * norm_quantile(v)),
        Family::StudentT => {
            let y = t_quantile(v, nu);
            let scale = ((nu + y * y) * (1.0 - theta * theta) / (nu + 1.0)).sqrt();
            t_cdf(t_quantile(w, nu + 1.0) * scale + theta * y, nu)
        }
        Family::Clayton => {
            let a = (-theta / (1.0 + theta) * w.ln()).exp_m1();
            if a <= 0.0 {
                1.0
            } else {
                (-softplus(-theta * v.ln() + a.ln()) / theta).exp()
            }
        }
        Family::Frank => {
            if theta.abs() < 1e-10 {
                w
            } else {
                let top = (w * (-theta * (1.0 - v)).exp_m1()).ln_1p();
                let bottom = ((1.0 - w) * (-theta * v).exp_m1()).ln_1p();
                v - (top - bottom) / theta
            }
        }
        Family::Gumbel | Family::Joe => return numeric_h2_inv(family, theta, nu, w, v),
    };
    Ok(u.clamp(EPS, 1.0 - EPS))
}

fn numeric_h2_inv(family: Family, theta: f64, nu: f64, w: f64, v: f64) -> Result<f64> {
    let f = |u: f64| h2(family, theta, nu, u, v) - w;
    if f(EPS) >= 0.0 {
        return Ok(EPS);
    }
    if f(1.0 - EPS) <= 0.0 {
        return Ok(1.0 - EPS);
    }
    brent(f, EPS, 1.0 - EPS, 1e-16, 300)
}

/// Copula CDF. Student-t has no closed form and integrates its h-function.
pub(super) fn cdf(family: Family, theta: f64, nu: f64, u: f64, v: f64) -> f64 {
    let c = match family {
        Family::Independence => u * v,
        Family::Gaussian => bvn_cdf(norm_quantile(u), norm_quantile(v), theta),
        Family::StudentT => integrate(|s| h2(family, theta, nu, u, s), 0.0, v, 64, 16),
        Family::Clayton => {
            let l = ln_sum_exp_minus_one(-theta * u.ln(), -theta * v.ln());
            (-l / theta).exp()
        }
        Family::Gumbel => {
            let (x, y) = (-u.ln(), -v.ln());
            -(x.powf(theta) + y.powf(theta)).powf(1.0 / theta)
        }
        .exp(),
        Family::Frank => {
            if theta.abs() < 1e-10 {
                u * v
            } else {
                -((-theta * u).exp_m1() * (-theta * v).exp_m1() / (-theta).exp_m1()).ln_1p() / theta
            }
        }
        Family::Joe => {
            let (a, b) = ((1.0 - u).powf(theta), (1.0 - v).powf(theta));
            1.0 - (a + b - a * b).powf(1.0 / theta)
        }
    };
    c.clamp(0.0, 1.0)
}
