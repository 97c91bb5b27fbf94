//! Small numerical toolbox: adaptive quadrature, an embedded Runge–Kutta
//! stepper, bracketing root finding, bounded scalar minimization and a few
//! statistical helpers shared by the simulator and the test suites.

/// Two-sided standard normal quantile for 95% coverage.
pub const Z95: f64 = 1.959_963_984_540_054;
/// Two-sided standard normal quantile for 99% coverage.
pub const Z99: f64 = 2.575_829_303_548_900_4;

// Gauss–Kronrod 7/15 nodes and weights.
const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const K15_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const G7_WEIGHTS: [f64; 4] = [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * K15_WEIGHTS[7];
    let mut gauss = fc * G7_WEIGHTS[3];
    for i in 0..7 {
        let dx = h * GK_NODES[i];
        let pair = f(c - dx) + f(c + dx);
        kronrod += K15_WEIGHTS[i] * pair;
        if i % 2 == 1 {
            gauss += G7_WEIGHTS[i / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod quadrature of `f` over `[a, b]`.
///
/// Subdivides until the summed error estimate is below
/// `max(abs_tol, rel_tol * |integral|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    if b < a {
        return -integrate(f, b, a, abs_tol, rel_tol);
    }
    let mut intervals = vec![(a, b, gk15(&f, a, b))];
    for _ in 0..5000 {
        let total: f64 = intervals.iter().map(|x| x.2 .0).sum();
        let err: f64 = intervals.iter().map(|x| x.2 .1).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) {
            break;
        }
        let (idx, _) = intervals.iter().enumerate().max_by(|x, y| x.1 .2 .1.total_cmp(&y.1 .2 .1)).expect("nonempty");
        let (lo, hi, _) = intervals.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        intervals.push((lo, mid, gk15(&f, lo, mid)));
        intervals.push((mid, hi, gk15(&f, mid, hi)));
    }
    intervals.iter().map(|x| x.2 .0).sum()
}

/// Error tolerances for [`Dopri5`].
#[derive(Debug, Clone, Copy)]
pub struct StepTolerance {
    pub atol: f64,
    pub rtol: f64,
}

/// Dormand–Prince 5(4) adaptive integrator for autonomous-or-not systems of
/// fixed dimension `N`.
#[derive(Debug, Clone)]
pub struct Dopri5 {
    pub tol: StepTolerance,
    pub max_steps: usize,
    /// Step size carried over between calls to [`Dopri5::advance`].
    h: Option<f64>,
    pub steps_taken: usize,
}

impl Dopri5 {
    pub fn new(tol: StepTolerance) -> Self {
        Dopri5 { tol, max_steps: 1_000_000, h: None, steps_taken: 0 }
    }

    /// Advance `y` from `t0` to exactly `t1`.
    pub fn advance<const N: usize, F>(&mut self, f: &F, t0: f64, y: &mut [f64; N], t1: f64)
    where
        F: Fn(f64, &[f64; N]) -> [f64; N],
    {
        const A21: f64 = 1.0 / 5.0;
        const A31: f64 = 3.0 / 40.0;
        const A32: f64 = 9.0 / 40.0;
        const A41: f64 = 44.0 / 45.0;
        const A42: f64 = -56.0 / 15.0;
        const A43: f64 = 32.0 / 9.0;
        const A51: f64 = 19372.0 / 6561.0;
        const A52: f64 = -25360.0 / 2187.0;
        const A53: f64 = 64448.0 / 6561.0;
        const A54: f64 = -212.0 / 729.0;
        const A61: f64 = 9017.0 / 3168.0;
        const A62: f64 = -355.0 / 33.0;
        const A63: f64 = 46732.0 / 5247.0;
        const A64: f64 = 49.0 / 176.0;
        const A65: f64 = -5103.0 / 18656.0;
        const B1: f64 = 35.0 / 384.0;
        const B3: f64 = 500.0 / 1113.0;
        const B4: f64 = 125.0 / 192.0;
        const B5: f64 = -2187.0 / 6784.0;
        const B6: f64 = 11.0 / 84.0;
        const E1: f64 = 71.0 / 57600.0;
        const E3: f64 = -71.0 / 16695.0;
        const E4: f64 = 71.0 / 1920.0;
        const E5: f64 = -17253.0 / 339200.0;
        const E6: f64 = 22.0 / 525.0;
        const E7: f64 = -1.0 / 40.0;

        let span = t1 - t0;
        if span <= 0.0 {
            return;
        }
        let mut t = t0;
        let mut h = self.h.unwrap_or(span * 1e-3).min(span);
        let mut k1 = f(t, y);
        let comb = |y: &[f64; N], parts: &[(f64, &[f64; N])], h: f64| {
            let mut out = *y;
            for i in 0..N {
                let mut acc = 0.0;
                for (c, k) in parts {
                    acc += c * k[i];
                }
                out[i] += h * acc;
            }
            out
        };
        for _ in 0..self.max_steps {
            if t >= t1 {
                break;
            }
            let last = t + h >= t1 - 1e-14 * t1.abs().max(1.0);
            if last {
                h = t1 - t;
            }
            let k2 = f(t + 0.2 * h, &comb(y, &[(A21, &k1)], h));
            let k3 = f(t + 0.3 * h, &comb(y, &[(A31, &k1), (A32, &k2)], h));
            let k4 = f(t + 0.8 * h, &comb(y, &[(A41, &k1), (A42, &k2), (A43, &k3)], h));
            let k5 = f(t + 8.0 / 9.0 * h, &comb(y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], h));
            let k6 = f(t + h, &comb(y, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], h));
            let y5 = comb(y, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)], h);
            let k7 = f(t + h, &y5);
            let mut err = 0.0f64;
            for i in 0..N {
                let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = self.tol.atol + self.tol.rtol * y[i].abs().max(y5[i].abs());
                err = err.max((e / sc).abs());
            }
            self.steps_taken += 1;
            if err <= 1.0 {
                t = if last { t1 } else { t + h };
                *y = y5;
                k1 = k7;
                let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                let proposed = h * grow;
                self.h = Some(proposed);
                if last {
                    break;
                }
                h = proposed;
            } else {
                let shrink = if err.is_finite() { (0.9 * err.powf(-0.25)).clamp(0.1, 0.9) } else { 0.1 };
                h *= shrink;
            }
        }
    }
}

/// Bisection on a bracket where `f(lo)` and `f(hi)` have opposite signs (or
/// one of them is zero). Returns the bracket `(lo, hi)` shrunk to width `tol`,
/// keeping the orientation of the original endpoints.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let flo = f(lo);
    let lo_positive = flo > 0.0;
    for _ in 0..400 {
        if (hi - lo).abs() <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if (f(mid) > 0.0) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

/// Minimize `f` on `[a, b]`: a coarse scan of `scan` points followed by
/// golden-section refinement around the best scan point. Returns
/// `(argmin, min)`; the result is never worse than any scanned point.
pub fn minimize_bounded<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, scan: usize, tol: f64) -> (f64, f64) {
    if b <= a {
        return (a, f(a));
    }
    let n = scan.max(2);
    let step = (b - a) / (n - 1) as f64;
    let mut best = (a, f(a));
    let mut best_i = 0usize;
    for i in 1..n {
        let x = if i == n - 1 { b } else { a + step * i as f64 };
        let v = f(x);
        if v < best.1 {
            best = (x, v);
            best_i = i;
        }
    }
    let mut lo = if best_i == 0 { a } else { a + step * (best_i - 1) as f64 };
    let mut hi = if best_i == n - 1 { b } else { a + step * (best_i + 1) as f64 };
    let inv_phi = 0.618_033_988_749_894_9;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    for (x, v) in [(x1, f1), (x2, f2)] {
        if v < best.1 {
            best = (x, v);
        }
    }
    best
}

/// Sample mean with a normal-approximation confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MeanCi {
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
}

impl MeanCi {
    pub fn half_width(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Mean and `z`-level interval of `xs` using the unbiased sample variance.
pub fn mean_ci(xs: &[f64], z: f64) -> MeanCi {
    let n = xs.len();
    if n == 0 {
        return MeanCi { mean: f64::NAN, lo: f64::NAN, hi: f64::NAN };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return MeanCi { mean, lo: mean, hi: mean };
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let hw = z * (var / n as f64).sqrt();
    MeanCi { mean, lo: mean - hw, hi: mean + hw }
}

/// Mean and coefficient of variation (population standard deviation over mean).
pub fn mean_cv(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if mean == 0.0 {
        return (0.0, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt() / mean)
}

/// Asymptotic Kolmogorov survival function with the Stephens small-sample
/// correction, evaluated at `d` for effective sample size `n_eff`.
pub fn kolmogorov_pvalue(d: f64, n_eff: f64) -> f64 {
    let sq = n_eff.sqrt();
    let lambda = (sq + 0.12 + 0.11 / sq) * d;
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let k = k as f64;
        let term = sign * (-2.0 * k * k * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample Kolmogorov–Smirnov test; returns `(D, p-value)`.
pub fn ks_one_sample<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> (f64, f64) {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let c = cdf(x);
        d = d.max((i as f64 + 1.0) / n - c).max(c - i as f64 / n);
    }
    (d, kolmogorov_pvalue(d, n))
}

/// Two-sample Kolmogorov–Smirnov test; returns `(D, p-value)`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(f64::total_cmp);
    xb.sort_by(f64::total_cmp);
    let (na, nb) = (xa.len(), xb.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < na && j < nb {
        let x = xa[i].min(xb[j]);
        while i < na && xa[i] <= x {
            i += 1;
        }
        while j < nb && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    let n_eff = (na * nb) as f64 / (na + nb) as f64;
    (d, kolmogorov_pvalue(d, n_eff))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_of_known_integrals() {
        let v = integrate(|x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-13, 1e-13);
        assert!((v - 2.0).abs() < 1e-12);
        let v = integrate(|x: f64| (-x * x).exp(), -8.0, 8.0, 1e-13, 1e-13);
        assert!((v - std::f64::consts::PI.sqrt()).abs() < 1e-11);
        assert_eq!(integrate(|x| x, 1.0, 1.0, 1e-9, 1e-9), 0.0);
    }

    #[test]
    fn dopri_matches_exponential_decay() {
        let mut s = Dopri5::new(StepTolerance { atol: 1e-12, rtol: 1e-10 });
        let mut y = [1.0, 1.0];
        let f = |_t: f64, y: &[f64; 2]| [-y[0], 2.0 * y[1]];
        s.advance(&f, 0.0, &mut y, 1.0);
        s.advance(&f, 1.0, &mut y, 3.0);
        assert!((y[0] - (-3.0f64).exp()).abs() < 1e-10);
        assert!((y[1] / 6.0f64.exp() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn bisect_finds_sqrt2() {
        let (lo, hi) = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14);
        assert!((0.5 * (lo + hi) - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn minimize_parabola_and_boundary() {
        let (x, v) = minimize_bounded(|x| (x - 0.3).powi(2), 0.0, 1.0, 16, 1e-12);
        assert!((x - 0.3).abs() < 1e-6 && v < 1e-11);
        let (x, _) = minimize_bounded(|x| x, 2.0, 5.0, 16, 1e-12);
        assert_eq!(x, 2.0);
    }

    #[test]
    fn ks_detects_mismatch() {
        let u: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let (_, p) = ks_one_sample(&u, |x| x.clamp(0.0, 1.0));
        assert!(p > 0.99);
        let (_, p) = ks_one_sample(&u, |x| (x * x).clamp(0.0, 1.0));
        assert!(p < 1e-6);
        let (_, p) = ks_two_sample(&u, &u);
        assert!(p > 0.99);
    }

    #[test]
    fn mean_ci_zero_width_for_constant() {
        let ci = mean_ci(&[3.0, 3.0, 3.0], Z95);
        assert_eq!((ci.lo, ci.mean, ci.hi), (3.0, 3.0, 3.0));
    }
}
