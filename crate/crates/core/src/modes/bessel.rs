//! Bessel functions of the first kind and their zeros.

use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 200;
pub const MAX_ARG: f64 = 2000.0;

/// `J_0(x) ..= J_nmax(x)` by Miller's backward recurrence, normalized with
/// `J_0 + 2 sum J_2k = 1`.
pub fn bessel_j_seq(nmax: usize, x: f64) -> Result<Vec<f64>> {
    if !(x.is_finite() && (0.0..=MAX_ARG).contains(&x)) || nmax > MAX_ORDER + 1 {
        return Err(Error::OutOfRange(format!("J_n(x) needs 0 <= x <= {MAX_ARG} and n <= {MAX_ORDER}, got n={nmax}, x={x}")));
    }
    Ok(bessel_j_seq_unchecked(nmax, x))
}

pub(crate) fn bessel_j_seq_unchecked(nmax: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; nmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    if x < 1e-6 {
        // Two-term power series.
        let h = 0.5 * x;
        let mut term = 1.0;
        for (n, o) in out.iter_mut().enumerate() {
            if n > 0 {
                term *= h / n as f64;
            }
            *o = term * (1.0 - h * h / (n as f64 + 1.0));
        }
        return out;
    }
    let top = nmax.max(x as usize);
    let mut start = top + 20 + (40.0 * top as f64).sqrt() as usize;
    start += start % 2;
    let mut jp1 = 0.0;
    let mut j = 1e-300;
    let mut norm = 0.0;
    let two_over_x = 2.0 / x;
    for k in (1..=start).rev() {
        let jm1 = k as f64 * two_over_x * j - jp1;
        jp1 = j;
        j = jm1;
        // j now holds the unnormalized J_{k-1}
        let idx = k - 1;
        if idx <= nmax {
            out[idx] = j;
        }
        if idx > 0 && idx % 2 == 0 {
            norm += 2.0 * j;
        }
        if j.abs() > 1e250 {
            j *= 1e-250;
            jp1 *= 1e-250;
            norm *= 1e-250;
            for o in out.iter_mut().skip(idx) {
                *o *= 1e-250;
            }
        }
    }
    norm += j;
    for o in out.iter_mut() {
        *o /= norm;
    }
    out
}

/// `(J_m(x), J_m'(x))`.
pub fn bessel_j(m: usize, x: f64) -> Result<(f64, f64)> {
    if m > MAX_ORDER {
        return Err(Error::OutOfRange(format!("order {m} exceeds {MAX_ORDER}")));
    }
    let seq = bessel_j_seq(m + 1, x)?;
    Ok((seq[m], derivative_from_seq(&seq, m)))
}

/// `J_m'` from a sequence holding orders up to `m + 1`.
pub(crate) fn derivative_from_seq(seq: &[f64], m: usize) -> f64 {
    if m == 0 {
        -seq[1]
    } else {
        0.5 * (seq[m - 1] - seq[m + 1])
    }
}

/// Which function's zeros to find.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ZeroKind {
    /// Roots of `J_m(x)`.
    Dirichlet,
    /// Positive roots of `J_m'(x)`.
    Neumann,
    /// Roots `k` of `k J_m'(k R) + gamma J_m(k R)`, for a disk of radius `R`.
    Robin { gamma: f64, radius: f64 },
}

/// First `count` positive roots in increasing order.
///
/// Dirichlet and Neumann roots are in the scaled variable `x = kR`; Robin
/// roots are wavenumbers `k` for the given radius.
pub fn bessel_zeros(m: usize, kind: ZeroKind, count: usize) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::OutOfRange("zero count must be at least 1".into()));
    }
    if m > MAX_ORDER {
        return Err(Error::OutOfRange(format!("order {m} exceeds {MAX_ORDER}")));
    }
    match kind {
        ZeroKind::Dirichlet | ZeroKind::Neumann => scan_zeros(m, kind == ZeroKind::Neumann, |z| z.len() >= count, f64::INFINITY),
        ZeroKind::Robin { gamma, radius } => robin_zeros(m, gamma, radius, count, f64::INFINITY),
    }
}

/// All positive roots not exceeding `limit` (same units as [`bessel_zeros`]).
pub fn bessel_zeros_below(m: usize, kind: ZeroKind, limit: f64) -> Result<Vec<f64>> {
    match kind {
        ZeroKind::Dirichlet | ZeroKind::Neumann => scan_zeros(m, kind == ZeroKind::Neumann, |_| false, limit),
        ZeroKind::Robin { gamma, radius } => robin_zeros(m, gamma, radius, usize::MAX, limit),
    }
}

fn jm_and_deriv(m: usize, x: f64) -> (f64, f64) {
    let seq = bessel_j_seq_unchecked(m + 1, x);
    (seq[m], derivative_from_seq(&seq, m))
}

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b || (b - a) <= 1e-15 * mid.abs() {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

const SCAN_STEP: f64 = 0.1;

fn scan_zeros(m: usize, derivative: bool, done: impl Fn(&[f64]) -> bool, limit: f64) -> Result<Vec<f64>> {
    let f = |x: f64| {
        let (j, dj) = jm_and_deriv(m, x);
        if derivative {
            dj
        } else {
            j
        }
    };
    let mut zeros = Vec::new();
    let mut a = if m == 0 { 1e-3 } else { 0.9 * m as f64 };
    let mut fa = f(a);
    while !done(&zeros) {
        if a > limit || a > MAX_ARG {
            break;
        }
        let b = a + SCAN_STEP;
        let fb = f(b);
        if fa == 0.0 {
            zeros.push(a);
        } else if (fa < 0.0) != (fb < 0.0) {
            let z = bisect(f, a, b);
            if z <= limit {
                zeros.push(z);
            }
        }
        a = b;
        fa = fb;
    }
    if zeros.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Bracketing(format!("non-increasing zeros for order {m}")));
    }
    Ok(zeros)
}

fn robin_zeros(m: usize, gamma: f64, radius: f64, count: usize, limit: f64) -> Result<Vec<f64>> {
    if gamma == 0.0 {
        let x = if count == usize::MAX {
            scan_zeros(m, true, |_| false, limit * radius)?
        } else {
            scan_zeros(m, true, |z| z.len() >= count, f64::INFINITY)?
        };
        return Ok(x.into_iter().map(|x| x / radius).collect());
    }
    if !(gamma > 0.0 && gamma.is_finite() && radius > 0.0) {
        return Err(Error::Unsupported(format!(
            "Robin roots are bracketed by interlacing only for gamma > 0 and radius > 0 (gamma={gamma}, radius={radius})"
        )));
    }
    let g = gamma * radius;
    let f = |x: f64| {
        let (j, dj) = jm_and_deriv(m, x);
        x * dj + g * j
    };
    // The s-th root lies between the s-th extremum of J_m (with 0 counted as
    // the first extremum of J_0) and the s-th zero of J_m.
    let xlimit = limit * radius;
    let (dir, neu) = if count == usize::MAX {
        let reach = xlimit + 2.0 * std::f64::consts::PI;
        (scan_zeros(m, false, |_| false, reach)?, scan_zeros(m, true, |_| false, reach)?)
    } else {
        (
            scan_zeros(m, false, |z| z.len() >= count, f64::INFINITY)?,
            scan_zeros(m, true, |z| z.len() >= count, f64::INFINITY)?,
        )
    };
    let lower: Vec<f64> = if m == 0 { std::iter::once(0.0).chain(neu).collect() } else { neu };
    let mut out = Vec::new();
    for (s, (&lo, &hi)) in lower.iter().zip(&dir).enumerate() {
        if out.len() >= count || lo > xlimit {
            break;
        }
        let (flo, fhi) = (if lo == 0.0 { g } else { f(lo) }, f(hi));
        if (flo < 0.0) == (fhi < 0.0) {
            return Err(Error::Bracketing(format!("Robin root {} of order {m} not bracketed on [{lo}, {hi}]", s + 1)));
        }
        let x = bisect(f, lo.max(1e-12), hi);
        if x > xlimit {
            break;
        }
        out.push(x / radius);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent oracle: direct power series, adequate for x <= 10.
    fn series_j(m: usize, x: f64) -> f64 {
        let h = 0.5 * x;
        let mut term = h.powi(m as i32) / (1..=m).map(|i| i as f64).product::<f64>();
        let mut sum = term;
        for s in 1..80 {
            term *= -h * h / (s as f64 * (s + m) as f64);
            sum += term;
        }
        sum
    }

    fn bisection_oracle(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if (f(mid) < 0.0) == (f(a) < 0.0) {
                a = mid;
            } else {
                b = mid;
            }
        }
        0.5 * (a + b)
    }

    /// Hankel asymptotic expansion, accurate for x >> m^2.
    fn hankel_j(m: usize, x: f64) -> f64 {
        let mu = 4.0 * (m * m) as f64;
        let mut p = 0.0;
        let mut q = 0.0;
        let mut term = 1.0;
        for k in 0..12 {
            if k > 0 {
                let a = (2 * k - 1) as f64;
                term *= (mu - a * a) / (k as f64 * 8.0 * x);
            }
            match k % 4 {
                0 => p += term,
                1 => q += term,
                2 => p -= term,
                _ => q -= term,
            }
        }
        let chi = x - (0.5 * m as f64 + 0.25) * std::f64::consts::PI;
        (2.0 / (std::f64::consts::PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
    }

    #[test]
    fn values_at_zero() {
        assert_eq!(bessel_j(0, 0.0).unwrap().0, 1.0);
        for m in 1..10 {
            assert_eq!(bessel_j(m, 0.0).unwrap().0, 0.0);
        }
        assert_eq!(bessel_j(1, 0.0).unwrap().1, 0.5);
    }

    #[test]
    fn matches_power_series() {
        for m in 0..8 {
            for &x in &[0.1, 0.7, 1.5, 3.3, 6.0, 9.5] {
                let got = bessel_j(m, x).unwrap().0;
                let want = series_j(m, x);
                assert!((got - want).abs() < 1e-12 * want.abs().max(1e-2), "m={m} x={x}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn matches_hankel_asymptotics() {
        for m in 0..6 {
            for &x in &[800.0, 1500.0, 1999.0] {
                let got = bessel_j(m, x).unwrap().0;
                let want = hankel_j(m, x);
                let env = (2.0 / (std::f64::consts::PI * x)).sqrt();
                assert!((got - want).abs() < 1e-12 * env, "m={m} x={x}");
            }
        }
    }

    #[test]
    fn recurrence_residual() {
        let seq = bessel_j_seq(22, 10.0).unwrap();
        for m in 1..=20 {
            let r = seq[m - 1] + seq[m + 1] - 2.0 * m as f64 / 10.0 * seq[m];
            assert!(r.abs() < 1e-12, "m={m} residual {r:e}");
        }
    }

    #[test]
    fn first_dirichlet_zero_of_j0() {
        let oracle = bisection_oracle(|x| series_j(0, x), 2.0, 3.0);
        assert!((oracle - 2.404825557695773).abs() < 1e-14);
        let z = bessel_zeros(0, ZeroKind::Dirichlet, 3).unwrap();
        assert!((z[0] - oracle).abs() < 1e-13 * oracle);
        assert!(bessel_j(0, z[0]).unwrap().0.abs() < 1e-12);
    }

    #[test]
    fn first_neumann_zero_of_j1() {
        let d = |x: f64| 0.5 * (series_j(0, x) - series_j(2, x));
        let oracle = bisection_oracle(d, 1.5, 2.2);
        assert!((oracle - 1.841183781340659).abs() < 1e-13);
        let z = bessel_zeros(1, ZeroKind::Neumann, 1).unwrap();
        assert!((z[0] - oracle).abs() < 1e-13 * oracle);
    }

    #[test]
    fn zeros_interlace() {
        let z0 = bessel_zeros(0, ZeroKind::Dirichlet, 30).unwrap();
        let z1 = bessel_zeros(1, ZeroKind::Dirichlet, 30).unwrap();
        for s in 0..29 {
            assert!(z0[s] < z1[s] && z1[s] < z0[s + 1]);
        }
    }

    #[test]
    fn robin_zeros_interlace_and_solve() {
        for m in [0usize, 1, 5] {
            let r = bessel_zeros(m, ZeroKind::Robin { gamma: 1.0, radius: 1.0 }, 10).unwrap();
            let d = bessel_zeros(m, ZeroKind::Dirichlet, 10).unwrap();
            for (s, k) in r.iter().enumerate() {
                assert!(*k < d[s]);
                let (j, dj) = bessel_j(m, *k).unwrap();
                assert!((k * dj + j).abs() < 1e-12 * k.max(1.0));
            }
            assert!(r.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn many_orders_bracket() {
        for m in (0..=100).step_by(7) {
            let z = bessel_zeros(m, ZeroKind::Dirichlet, 100).unwrap();
            assert_eq!(z.len(), 100);
            let zn = bessel_zeros(m, ZeroKind::Neumann, 100).unwrap();
            assert_eq!(zn.len(), 100);
        }
    }

    #[test]
    fn out_of_range_is_error() {
        assert!(bessel_j(201, 1.0).is_err());
        assert!(bessel_j(0, 2500.0).is_err());
        assert!(bessel_j(0, -1.0).is_err());
    }
}
