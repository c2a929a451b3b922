use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numeric::brent;
use crate::special::debye1;

use super::Family;

/// Tie-corrected Kendall's tau (tau-b) by Knight's O(n log n) merge count.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::shape(format!("{n} values"), y.len()));
    }
    if n < 2 {
        return Err(Error::invalid("kendall tau needs at least two pairs"));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));

    let pairs = |t: u64| t * (t - 1) / 2;
    let n0 = pairs(n as u64);
    // ties in x (n1) and joint ties (n3)
    let (mut n1, mut n3) = (0u64, 0u64);
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && x[idx[j]] == x[idx[i]] {
            j += 1;
        }
        n1 += pairs((j - i) as u64);
        let mut k = i;
        while k < j {
            let mut m = k + 1;
            while m < j && y[idx[m]] == y[idx[k]] {
                m += 1;
            }
            n3 += pairs((m - k) as u64);
            k = m;
        }
        i = j;
    }

    let mut ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    let mut buf = vec![0.0; n];
    let swaps = merge_count(&mut ys, &mut buf);

    let mut n2 = 0u64;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && ys[j] == ys[i] {
            j += 1;
        }
        n2 += pairs((j - i) as u64);
        i = j;
    }

    let denom = ((n0 - n1) as f64 * (n0 - n2) as f64).sqrt();
    if denom == 0.0 {
        return Err(Error::Degenerate("kendall tau of a constant column".into()));
    }
    let num = n0 as f64 - n1 as f64 - n2 as f64 + n3 as f64 - 2.0 * swaps as f64;
    Ok((num / denom).clamp(-1.0, 1.0))
}

/// Sorts `v` ascending and returns the number of strict inversions.
fn merge_count(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = {
        let (l, r) = v.split_at_mut(mid);
        let (bl, br) = buf.split_at_mut(mid);
        merge_count(l, bl) + merge_count(r, br)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[j] < v[i] {
            buf[k] = v[j];
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = v[i];
            i += 1;
        }
        k += 1;
    }
    while i < mid {
        buf[k] = v[i];
        i += 1;
        k += 1;
    }
    while j < n {
        buf[k] = v[j];
        j += 1;
        k += 1;
    }
    v.copy_from_slice(&buf[..n]);
    swaps
}

/// Two-sided 5 % critical value of |tau| under independence:
/// `1.96 * sqrt(2 (2n + 5) / (9 n (n - 1)))`.
pub fn independence_threshold(n: usize) -> f64 {
    let n = n as f64;
    1.96 * (2.0 * (2.0 * n + 5.0) / (9.0 * n * (n - 1.0))).sqrt()
}

fn joe_tau(theta: f64) -> f64 {
    // tau = 1 - 4 sum_k 1 / (k (theta k + 2) (theta (k - 1) + 2)), terms ~ 1/(theta^2 k^3)
    const TERMS: usize = 4000;
    let mut s = 0.0;
    for k in (1..=TERMS).rev() {
        let k = k as f64;
        s += 1.0 / (k * (theta * k + 2.0) * (theta * (k - 1.0) + 2.0));
    }
    // midpoint-rule tail beyond TERMS
    let kk = TERMS as f64 + 0.5;
    s += 1.0 / (2.0 * theta * theta * kk * kk);
    1.0 - 4.0 * s
}

fn frank_tau(theta: f64) -> f64 {
    if theta.abs() < 1e-8 {
        return theta / 9.0;
    }
    1.0 - 4.0 / theta * (1.0 - debye1(theta))
}

/// Kendall's tau of the unrotated family at parameter `theta`.
pub fn param_to_tau(family: Family, theta: f64) -> f64 {
    match family {
        Family::Independence => 0.0,
        Family::Gaussian | Family::StudentT => 2.0 / PI * theta.asin(),
        Family::Clayton => theta / (theta + 2.0),
        Family::Gumbel => 1.0 - 1.0 / theta,
        Family::Frank => frank_tau(theta),
        Family::Joe => joe_tau(theta),
    }
}

/// Parameter of the unrotated family with Kendall's tau `tau`.
pub fn tau_to_param(family: Family, tau: f64) -> Result<f64> {
    if !(tau.abs() < 1.0) {
        return Err(Error::invalid(format!("tau {tau} outside (-1, 1)")));
    }
    let incompatible = || Error::invalid(format!("tau {tau} incompatible with the {family} family"));
    match family {
        Family::Independence => {
            if tau == 0.0 {
                Ok(0.0)
            } else {
                Err(incompatible())
            }
        }
        Family::Gaussian | Family::StudentT => Ok((PI * tau / 2.0).sin()),
        Family::Clayton => {
            if tau <= 0.0 {
                return Err(incompatible());
            }
            Ok(2.0 * tau / (1.0 - tau))
        }
        Family::Gumbel => {
            if tau < 0.0 {
                return Err(incompatible());
            }
            Ok(1.0 / (1.0 - tau))
        }
        Family::Frank => {
            if tau == 0.0 {
                return Err(incompatible());
            }
            // tau(theta) is odd and increasing; bracket on the matching side.
            let hi = 1.0;
            let mut b = hi;
            while frank_tau(b) < tau.abs() {
                b *= 2.0;
                if b > 1e4 {
                    return Err(incompatible());
                }
            }
            let t = brent(|th| frank_tau(th) - tau.abs(), 0.0, b, 1e-13, 200)?;
            Ok(t.copysign(tau))
        }
        Family::Joe => {
            if tau < 0.0 {
                return Err(incompatible());
            }
            if tau == 0.0 {
                return Ok(1.0);
            }
            let mut b = 2.0;
            while joe_tau(b) < tau {
                b *= 2.0;
                if b > 1e4 {
                    return Err(incompatible());
                }
            }
            brent(|th| joe_tau(th) - tau, 1.0, b, 1e-13, 200)
        }
    }
}
