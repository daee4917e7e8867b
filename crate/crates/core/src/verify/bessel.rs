//! Bessel functions of the first kind for the orders needed by ball
//! eigenfunctions: `ν ∈ {0, 1}` and half-integers `ν = k + 1/2`.
//!
//! Small arguments use the ascending series. Beyond [`SERIES_LIMIT`] the
//! series loses digits to cancellation, so integer orders switch to
//! Miller's backward recurrence normalized by `J₀ + 2ΣJ₂ₖ = 1`, and
//! half-integer orders to upward recurrence from the closed forms of
//! `J_{±1/2}`.

use std::f64::consts::PI;

use crate::error::{invalid, Result};

const SERIES_LIMIT: f64 = 8.0;
const MAX_HALF_ORDER: f64 = 7.5;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Order {
    Integer(u32),
    Half(u32),
}

fn classify(order: f64) -> Result<Order> {
    if order == 0.0 || order == 1.0 {
        return Ok(Order::Integer(order as u32));
    }
    let twice = 2.0 * order;
    if order > 0.0 && order <= MAX_HALF_ORDER && twice.fract() == 0.0 && (twice as u32) % 2 == 1 {
        return Ok(Order::Half(twice as u32 / 2));
    }
    Err(invalid(format!(
        "unsupported Bessel order {order}; expected 0, 1 or a half-integer up to {MAX_HALF_ORDER}"
    )))
}

/// `Γ(ν + 1)` for integer or half-integer `ν >= 0`.
pub(crate) fn gamma_plus_one(nu: f64) -> f64 {
    let (mut g, mut z) = if nu.fract() == 0.0 {
        (1.0, 1.0)
    } else {
        (PI.sqrt(), 0.5)
    };
    while z < nu + 1.0 - 1e-12 {
        g *= z;
        z += 1.0;
    }
    g
}

fn series(nu: f64, x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = (0.5 * x).powf(nu) / gamma_plus_one(nu);
    let mut sum = term;
    for k in 1..200 {
        let kf = k as f64;
        term *= q / (kf * (kf + nu));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs().max(1e-300) && kf > 0.5 * x {
            break;
        }
    }
    sum
}

fn miller(order: u32, x: f64) -> f64 {
    // start well above the order and the argument
    let start = 2 * ((x as u32 + 15 + (40.0 * x).sqrt() as u32) / 2) + 2;
    let (mut next, mut cur) = (0.0f64, 1e-30f64);
    let mut norm = 0.0;
    let mut wanted = 0.0;
    for k in (1..=start).rev() {
        let prev = 2.0 * k as f64 / x * cur - next;
        next = cur;
        cur = prev;
        // cur now holds J_{k-1}
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            norm *= 1e-250;
            wanted *= 1e-250;
        }
        let idx = k - 1;
        if idx == order {
            wanted = cur;
        }
        if idx > 0 && idx % 2 == 0 {
            norm += 2.0 * cur;
        }
    }
    norm += cur;
    wanted / norm
}

fn half_upward(k: u32, x: f64) -> f64 {
    let c = (2.0 / (PI * x)).sqrt();
    let mut prev = c * x.cos(); // J_{-1/2}
    let mut cur = c * x.sin(); // J_{1/2}
    for m in 0..k {
        let nu = m as f64 + 0.5;
        let next = 2.0 * nu / x * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `J_ν(x)` for `x >= 0`.
pub fn bessel_j(order: f64, x: f64) -> Result<f64> {
    let kind = classify(order)?;
    if !(x >= 0.0) || !x.is_finite() {
        return Err(invalid(format!(
            "Bessel argument must be finite and >= 0, got {x}"
        )));
    }
    if x == 0.0 {
        return Ok(if order == 0.0 { 1.0 } else { 0.0 });
    }
    Ok(match kind {
        _ if x <= SERIES_LIMIT => series(order, x),
        Order::Integer(m) => miller(m, x),
        Order::Half(k) => half_upward(k, x),
    })
}

/// First positive zero of `J_ν`, bracketed on a uniform scan and refined by
/// bisection.
pub fn first_positive_zero(order: f64) -> Result<f64> {
    classify(order)?;
    let step = 0.05;
    let mut a = step;
    let mut fa = bessel_j(order, a)?;
    while a < 40.0 {
        let b = a + step;
        let fb = bessel_j(order, b)?;
        if fa == 0.0 {
            return Ok(a);
        }
        if fa * fb <= 0.0 {
            let (mut lo, mut hi, mut flo) = (a, b, fa);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let fm = bessel_j(order, mid)?;
                if fm == 0.0 {
                    return Ok(mid);
                }
                if (fm > 0.0) == (flo > 0.0) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
                if hi - lo <= 1e-15 * hi {
                    break;
                }
            }
            return Ok(0.5 * (lo + hi));
        }
        a = b;
        fa = fb;
    }
    Err(invalid(format!("no zero of J_{order} found below 40")))
}
