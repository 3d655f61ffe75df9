//! Integer-order Bessel and Hankel functions by recurrence.
//!
//! `J_n` comes from Miller's downward recurrence normalised with
//! `J_0 + 2 Σ J_2k = 1`, which is stable for every order/argument pair and
//! works for complex arguments. `Y_0` and `Y_1` are built from the same `J`
//! sequence through Neumann series, and higher `Y_n` follow by upward
//! recurrence, the stable direction for the second kind.

use num_complex::Complex64;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const RESCALE_AT: f64 = 1e250;

fn miller_start(nmax: usize, zabs: f64) -> usize {
    let top = (nmax as f64).max(zabs).max(1.0);
    let m = (top + 20.0 + (160.0 * top).sqrt()).ceil() as usize;
    m + (m & 1)
}

/// Shared body of the downward recurrence over any field with the needed ops.
macro_rules! miller {
    ($z:expr, $m:expr, $zero:expr, $seed:expr, $abs:expr, $two_over:expr) => {{
        let m = $m;
        let mut j = vec![$zero; m + 2];
        j[m] = $seed;
        for k in (1..=m).rev() {
            let next = $two_over(k) * j[k] - j[k + 1];
            j[k - 1] = next;
            if $abs(next) > RESCALE_AT {
                for v in &mut j[k - 1..=m] {
                    *v *= (1.0 / RESCALE_AT);
                }
            }
        }
        let mut norm = j[0];
        let mut k = 2;
        while k <= m {
            norm += j[k] * 2.0;
            k += 2;
        }
        let inv = 1.0 / norm;
        for v in &mut j {
            *v *= inv;
        }
        j.truncate(m + 1);
        j
    }};
}

/// `J_0 ..= J_m` for real `x` with `m` at least `nmax` and well past `|x|`.
fn miller_real(nmax: usize, x: f64) -> Vec<f64> {
    let m = miller_start(nmax, x.abs());
    if x == 0.0 {
        let mut j = vec![0.0; m + 1];
        j[0] = 1.0;
        return j;
    }
    miller!(x, m, 0.0f64, 1e-30f64, |v: f64| v.abs(), |k: usize| 2.0 * k as f64 / x)
}

fn miller_complex(nmax: usize, z: Complex64) -> Vec<Complex64> {
    let m = miller_start(nmax, z.norm());
    if z.norm() == 0.0 {
        let mut j = vec![Complex64::new(0.0, 0.0); m + 1];
        j[0] = Complex64::new(1.0, 0.0);
        return j;
    }
    miller!(
        z,
        m,
        Complex64::new(0.0, 0.0),
        Complex64::new(1e-30, 0.0),
        |v: Complex64| v.norm(),
        |k: usize| Complex64::new(2.0 * k as f64, 0.0) / z
    )
}

/// `J_0(x) ..= J_nmax(x)`.
pub fn bessel_j(nmax: usize, x: f64) -> Vec<f64> {
    let mut j = miller_real(nmax, x);
    j.truncate(nmax + 1);
    j
}

/// `J_0(z) ..= J_nmax(z)` for complex `z` (lossy media).
pub fn bessel_j_complex(nmax: usize, z: Complex64) -> Vec<Complex64> {
    let mut j = miller_complex(nmax, z);
    j.truncate(nmax + 1);
    j
}

/// `J_n(x)` and `Y_n(x)` for `n = 0 ..= nmax`, `x > 0`.
pub fn bessel_jy(nmax: usize, x: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(x > 0.0, "Y_n needs a positive argument, got {x}");
    let j = miller_real(nmax.max(1), x);
    let m = j.len() - 1;
    let log_term = (0.5 * x).ln() + EULER_GAMMA;

    let mut s0 = 0.0;
    let mut s1 = 0.0;
    let mut k = 1;
    let mut sign = -1.0;
    while 2 * k < m {
        s0 += sign * j[2 * k] / k as f64;
        s1 += sign * (j[2 * k - 1] - j[2 * k + 1]) / k as f64;
        sign = -sign;
        k += 1;
    }
    let two_pi = 2.0 / std::f64::consts::PI;
    let y0 = two_pi * (log_term * j[0] - 2.0 * s0);
    let y1 = two_pi * (log_term * j[1] - j[0] / x + s1);

    let mut y = Vec::with_capacity(nmax + 1);
    y.push(y0);
    if nmax >= 1 {
        y.push(y1);
    }
    for n in 1..nmax {
        let next = 2.0 * n as f64 / x * y[n] - y[n - 1];
        y.push(next);
    }
    let mut j = j;
    j.truncate(nmax + 1);
    (j, y)
}

/// Hankel function of the second kind, `H_n^(2) = J_n − i Y_n`, the outgoing
/// wave for the `e^{jωt}` time convention used throughout the crate.
pub fn hankel2(nmax: usize, x: f64) -> Vec<Complex64> {
    let (j, y) = bessel_jy(nmax, x);
    j.iter().zip(&y).map(|(&a, &b)| Complex64::new(a, -b)).collect()
}

pub fn hankel2_0(x: f64) -> Complex64 {
    hankel2(1, x)[0]
}

/// Derivatives `C_n'(z) = C_{n-1}(z) − (n/z) C_n(z)` from a sequence holding
/// orders `0 ..= nmax + 1`. Returns `nmax + 1` values.
pub fn derivatives<T>(seq: &[T], z: T) -> Vec<T>
where
    T: Copy + std::ops::Sub<Output = T> + std::ops::Mul<Output = T> + std::ops::Div<Output = T> + std::ops::Neg<Output = T> + From<f64>,
{
    assert!(seq.len() >= 2);
    let nmax = seq.len() - 2;
    let mut d = Vec::with_capacity(nmax + 1);
    d.push(-seq[1]);
    for n in 1..=nmax {
        d.push(seq[n - 1] - T::from(n as f64) / z * seq[n]);
    }
    d
}
