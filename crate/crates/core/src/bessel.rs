//! Bessel functions of half-integer order.
//!
//! Every half-integer order reduces to trigonometric or exponential kernels
//! times a rational function of `x`; values are produced from the two
//! orders `±1/2` by three-term recurrence in whichever direction is stable.
//! The modified function `I` overflows for `x` beyond roughly 700.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::halfint::HalfInt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    J,
    Y,
    I,
    K,
}

/// `Γ(t/2)` for an integer `t` that is odd or positive.
pub fn gamma_half(t: i64) -> f64 {
    if t % 2 == 0 {
        assert!(t > 0, "gamma pole at {}", t / 2);
        return (1..t / 2).fold(1.0, |acc, k| acc * k as f64);
    }
    // start from Γ(1/2) and walk by unit steps
    let mut g = PI.sqrt();
    let mut x = 0.5;
    let target = t as f64 / 2.0;
    while x < target - 0.25 {
        g *= x;
        x += 1.0;
    }
    while x > target + 0.25 {
        x -= 1.0;
        g /= x;
    }
    g
}

/// Power series `Σ_k (r/2)^ν (-w r²/4)^k / (k! Γ(k+ν+1))`.
fn entire_series(nu_twice: i64, w: f64, r: f64) -> f64 {
    let nu = nu_twice as f64 / 2.0;
    let q = -w * r * r / 4.0;
    let mut term = (r / 2.0).powf(nu) / gamma_half(nu_twice + 2);
    let mut sum = term;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= q / (k * (k + nu));
        sum += term;
        if term.abs() <= 1e-18 * sum.abs() && k > 2.0 {
            break;
        }
        if k > 500.0 {
            break;
        }
    }
    sum
}

/// Bessel function of half-integer order (either sign) at `x > 0`.
pub fn spherical_bessel(kind: Kind, order: HalfInt, x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::DomainError(format!("Bessel argument must be positive, got {x}")));
    }
    let t = order.twice();
    Ok(match kind {
        Kind::J => bessel_j(t, x),
        Kind::Y => {
            // Y_{n+1/2} = (-1)^{n+1} J_{-(n+1/2)},  Y_{-(n+1/2)} = (-1)^n J_{n+1/2}
            if t > 0 {
                let n = (t - 1) / 2;
                sign(n + 1) * bessel_j(-t, x)
            } else {
                let n = (-t - 1) / 2;
                sign(n) * bessel_j(-t, x)
            }
        }
        Kind::I => bessel_i(t, x),
        Kind::K => bessel_k(t.abs(), x),
    })
}

fn sign(n: i64) -> f64 {
    if n % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn j_half_pair(x: f64) -> (f64, f64) {
    let s = (2.0 / (PI * x)).sqrt();
    (s * x.sin(), s * x.cos())
}

fn bessel_j(t: i64, x: f64) -> f64 {
    let nu = t as f64 / 2.0;
    if t > 0 && x <= 2.0 * (nu + 1.0).sqrt() {
        return entire_series(t, 1.0, x);
    }
    let (jp, jm) = j_half_pair(x);
    if t == 1 {
        return jp;
    }
    if t == -1 {
        return jm;
    }
    if t < 0 {
        // towards negative orders: J_{ν-1} = (2ν/x) J_ν - J_{ν+1}
        let (mut hi, mut lo) = (jp, jm);
        let mut nu = -0.5;
        let mut tt = -1;
        while tt > t {
            let next = 2.0 * nu / x * lo - hi;
            hi = lo;
            lo = next;
            nu -= 1.0;
            tt -= 2;
        }
        return lo;
    }
    if x >= nu {
        // J_{ν+1} = (2ν/x) J_ν - J_{ν-1}
        let (mut lo, mut hi) = (jm, jp);
        let mut nu = 0.5;
        let mut tt = 1;
        while tt < t {
            let next = 2.0 * nu / x * hi - lo;
            lo = hi;
            hi = next;
            nu += 1.0;
            tt += 2;
        }
        return hi;
    }
    miller(t, x, |nu, a, b| 2.0 * nu / x * a - b, jp, jm)
}

/// Downward recurrence normalised against the exact orders ±1/2.
fn miller(t: i64, x: f64, step: impl Fn(f64, f64, f64) -> f64, exact_p: f64, exact_m: f64) -> f64 {
    let n_target = (t - 1) / 2;
    let start = n_target + 40 + x.ceil() as i64 + (40.0 * (t as f64 / 2.0)).sqrt() as i64;
    let mut above = 0.0;
    let mut cur = 1e-30;
    let mut n = start;
    let mut kept = 0.0;
    let mut y_p = 0.0;
    let y_m;
    // cur holds order n + 1/2, above holds n + 3/2
    loop {
        if n == n_target {
            kept = cur;
        }
        if n == 0 {
            y_p = cur;
        }
        if n == -1 {
            y_m = cur;
            break;
        }
        let nu = n as f64 + 0.5;
        let next = step(nu, cur, above);
        above = cur;
        cur = next;
        n -= 1;
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            above *= 1e-250;
            kept *= 1e-250;
            y_p *= 1e-250;
        }
    }
    let m = y_p.abs().max(y_m.abs());
    let (a, b) = (y_p / m, y_m / m);
    let scale = (exact_p * a + exact_m * b) / (a * a + b * b);
    kept / m * scale
}

fn bessel_i(t: i64, x: f64) -> f64 {
    let nu = t as f64 / 2.0;
    if t > 0 && x <= 2.0 * (nu + 1.0).sqrt() {
        return entire_series(t, -1.0, x);
    }
    let s = (2.0 / (PI * x)).sqrt();
    let (ip, im) = (s * x.sinh(), s * x.cosh());
    if t == 1 {
        return ip;
    }
    if t == -1 {
        return im;
    }
    if t < 0 {
        // I_{ν-1} = (2ν/x) I_ν + I_{ν+1}
        let (mut hi, mut lo) = (ip, im);
        let mut nu = -0.5;
        let mut tt = -1;
        while tt > t {
            let next = 2.0 * nu / x * lo + hi;
            hi = lo;
            lo = next;
            nu -= 1.0;
            tt -= 2;
        }
        return lo;
    }
    miller(t, x, |nu, a, b| 2.0 * nu / x * a + b, ip, im)
}

fn bessel_k(t: i64, x: f64) -> f64 {
    let k0 = (PI / (2.0 * x)).sqrt() * (-x).exp();
    if t == 1 {
        return k0;
    }
    // K_{ν+1} = K_{ν-1} + (2ν/x) K_ν, with K_{-1/2} = K_{1/2}
    let (mut lo, mut hi) = (k0, k0);
    let mut nu = 0.5;
    let mut tt = 1;
    while tt < t {
        let next = lo + 2.0 * nu / x * hi;
        lo = hi;
        hi = next;
        nu += 1.0;
        tt += 2;
    }
    hi
}

/// Entire normalised Bessel function `E_ν(w, r)`:
/// `ω^{-ν} J_ν(ω r)` for `w = ω² > 0`, `η^{-ν} I_ν(η r)` for `w = -η² < 0`,
/// `(r/2)^ν / Γ(ν+1)` at `w = 0`. Any half-integer `ν`; `E_{-ν}` is the singular
/// companion of `E_ν`.
pub fn entire(nu: HalfInt, w: f64, r: f64) -> f64 {
    let t = nu.twice();
    if w.abs() * r * r <= 4.0 {
        return entire_series(t, w, r);
    }
    let nuf = nu.value();
    if w > 0.0 {
        let om = w.sqrt();
        om.powf(-nuf) * bessel_j(t, om * r)
    } else {
        let eta = (-w).sqrt();
        eta.powf(-nuf) * bessel_i(t, eta * r)
    }
}

/// `(E_ν, E_ν', E_ν'')` at `r` from the ladder identities
/// `(∂ + ν/r) E_ν = E_{ν-1}` and the Bessel equation.
pub fn entire_jet(nu: HalfInt, w: f64, r: f64) -> (f64, f64, f64) {
    let nuf = nu.value();
    let e = entire(nu, w, r);
    let em = entire(nu.shift(-1), w, r);
    let d1 = em - nuf / r * e;
    let d2 = -d1 / r + (nuf * nuf / (r * r) - w) * e;
    (e, d1, d2)
}
