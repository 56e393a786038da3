//! Scalar helpers over `libm`, the quintic ramp and the nonic spatial profile.

#[inline]
pub fn sqrt(x: f64) -> f64 {
    #[cfg(any(feature = "std", test))]
    return x.sqrt();
    #[cfg(not(any(feature = "std", test)))]
    return libm::sqrt(x);
}
#[inline]
pub fn abs(x: f64) -> f64 {
    #[cfg(any(feature = "std", test))]
    return x.abs();
    #[cfg(not(any(feature = "std", test)))]
    return libm::fabs(x);
}
#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}
#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}
#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}
#[inline]
pub fn powi(x: f64, n: u32) -> f64 {
    let mut acc = 1.0;
    for _ in 0..n {
        acc *= x;
    }
    acc
}
#[inline]
pub fn floor(x: f64) -> f64 {
    #[cfg(any(feature = "std", test))]
    return x.floor();
    #[cfg(not(any(feature = "std", test)))]
    return libm::floor(x);
}
#[inline]
pub fn ceil(x: f64) -> f64 {
    #[cfg(any(feature = "std", test))]
    return x.ceil();
    #[cfg(not(any(feature = "std", test)))]
    return libm::ceil(x);
}
#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}
#[inline]
pub fn round(x: f64) -> f64 {
    libm::round(x)
}
#[inline]
pub fn cbrt(x: f64) -> f64 {
    libm::cbrt(x)
}

pub const PI: f64 = core::f64::consts::PI;
pub const TWO_PI: f64 = 2.0 * PI;

#[inline]
pub fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm(a: &[f64; 3]) -> f64 {
    sqrt(dot(a, a))
}

#[inline]
pub fn sub(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn scale(a: &[f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// Quintic smoothstep `6s^5 - 15s^4 + 10s^3`, clamped to `[0, 1]` outside the unit interval.
#[inline]
pub fn smoothstep(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        // rounding can push the polynomial a hair above 1 near s = 1
        (s * s * s * (s * (6.0 * s - 15.0) + 10.0)).min(1.0)
    }
}

#[inline]
pub fn smoothstep_d1(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        0.0
    } else {
        let t = s * (s - 1.0);
        30.0 * t * t
    }
}

#[inline]
pub fn smoothstep_d2(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        0.0
    } else {
        60.0 * s * (s - 1.0) * (2.0 * s - 1.0)
    }
}

/// C⁴ nonic smoothstep `s^5 (126 - 420s + 540s^2 - 315s^3 + 70s^4)`; spatial cutoff profile.
#[inline]
pub fn profile(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        let p = 126.0 + s * (-420.0 + s * (540.0 + s * (-315.0 + 70.0 * s)));
        (s * s * s * s * s * p).clamp(0.0, 1.0)
    }
}

#[inline]
pub fn profile_d1(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        0.0
    } else {
        let t = s * (1.0 - s);
        630.0 * t * t * t * t
    }
}

#[inline]
pub fn profile_d2(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        0.0
    } else {
        let t = s * (1.0 - s);
        2520.0 * t * t * t * (1.0 - 2.0 * s)
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (alloc::vec::Vec<f64>, alloc::vec::Vec<f64>) {
    let mut nodes = alloc::vec![0.0; n];
    let mut weights = alloc::vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = cos(PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if abs(dx) < 1e-16 {
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

/// Composite Gauss-Legendre quadrature of `f` on `[a, b]`.
pub fn integrate_gl<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize, order: usize) -> f64 {
    let (x, w) = gauss_legendre(order);
    let width = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * width;
        let mid = lo + 0.5 * width;
        let mut acc = 0.0;
        for (xi, wi) in x.iter().zip(&w) {
            acc += wi * f(mid + 0.5 * width * xi);
        }
        total += 0.5 * width * acc;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_endpoints_and_derivatives() {
        assert_eq!((profile(0.0), profile(1.0)), (0.0, 1.0));
        assert!((profile(0.5) - 0.5).abs() < 1e-15);
        let h = 1e-6;
        for &s in &[0.05, 0.37, 0.5, 0.93] {
            let fd = (profile(s + h) - profile(s - h)) / (2.0 * h);
            assert!((fd - profile_d1(s)).abs() < 1e-7);
            let fd2 = (profile_d1(s + h) - profile_d1(s - h)) / (2.0 * h);
            assert!((fd2 - profile_d2(s)).abs() < 1e-6);
        }
    }

    #[test]
    fn smoothstep_endpoints_and_derivatives() {
        assert_eq!(smoothstep(0.0), 0.0);
        assert_eq!(smoothstep(1.0), 1.0);
        assert!((smoothstep(0.5) - 0.5).abs() < 1e-15);
        let h = 1e-6;
        for &s in &[0.1, 0.37, 0.5, 0.9] {
            let fd = (smoothstep(s + h) - smoothstep(s - h)) / (2.0 * h);
            assert!((fd - smoothstep_d1(s)).abs() < 1e-8);
            let fd2 = (smoothstep_d1(s + h) - smoothstep_d1(s - h)) / (2.0 * h);
            assert!((fd2 - smoothstep_d2(s)).abs() < 1e-7);
        }
    }

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let (x, w) = gauss_legendre(5);
        let sum: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(8)).sum();
        assert!((sum - 2.0 / 9.0).abs() < 1e-14);
        let wsum: f64 = w.iter().sum();
        assert!((wsum - 2.0).abs() < 1e-14);
        let v = integrate_gl(|t| t.cos(), 0.0, 1.0, 4, 10);
        assert!((v - 1f64.sin()).abs() < 1e-15);
    }
}

/// `exp(-x)`.
#[inline]
pub fn exp_neg(x: f64) -> f64 {
    libm::exp(-x)
}
