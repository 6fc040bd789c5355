//! Independent oracles shared by unit tests. Deliberately naive: plain
//! bisection and textbook statistics, kept free of the production code paths
//! they are used to check.

/// Root of `(1 - e^{-l tau}) / l = 1` by 200 plain bisection steps on the
/// directly evaluated integrand (no reformulation, no Newton).
pub(crate) fn bisect_span_rate(tau: f64) -> f64 {
    let f = |l: f64| {
        if l == 0.0 {
            tau - 1.0
        } else {
            (1.0 - (-l * tau).exp()) / l - 1.0
        }
    };
    let (mut lo, mut hi) = (-200.0, 1.0);
    assert!(
        f(lo) > 0.0 && f(hi) < 0.0,
        "oracle bracket invalid for tau={tau}"
    );
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Central finite difference with step `h`.
pub(crate) fn central_diff<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// One-sample Kolmogorov-Smirnov statistic against a CDF.
pub(crate) fn ks_statistic_cdf<F: Fn(f64) -> f64>(samples: &mut [f64], cdf: F) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = samples.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        let c = cdf(x);
        d = d
            .max((c - i as f64 / n).abs())
            .max(((i + 1) as f64 / n - c).abs());
    }
    d
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub(crate) fn ks_statistic_two(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    d
}

/// Asymptotic Kolmogorov critical value at level `alpha` for one sample of
/// size `n`: `c(alpha) / sqrt(n)` with `c = sqrt(-ln(alpha / 2) / 2)`.
pub(crate) fn ks_critical_one(alpha: f64, n: usize) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

/// Asymptotic two-sample Kolmogorov critical value at level `alpha`.
pub(crate) fn ks_critical_two(alpha: f64, n: usize, m: usize) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    c * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}
