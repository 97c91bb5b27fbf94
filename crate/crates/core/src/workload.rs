//! Content popularity and diurnal multi-content scenarios.

use std::path::Path;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::model::ContentClass;
use crate::rng::rng_from_seed;
use crate::{Error, Result};

/// Seconds in the 24 h cycle of an [`IntensityProfile`].
pub const DAY_S: f64 = 86_400.0;

/// Bounded Pareto distribution on `[lo, hi]` with shape `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopularityModel {
    pub lo: u64,
    pub hi: u64,
    pub alpha: f64,
}

impl PopularityModel {
    pub fn new(lo: u64, hi: u64, alpha: f64) -> Result<Self> {
        if lo == 0 || lo > hi {
            return Err(Error::invalid(format!("popularity support [{lo}, {hi}] must satisfy 1 <= lo <= hi")));
        }
        if !(alpha > 0.0) {
            return Err(Error::invalid("popularity shape alpha must be positive"));
        }
        Ok(PopularityModel { lo, hi, alpha })
    }

    fn bounds(&self) -> (f64, f64) {
        (self.lo as f64, self.hi as f64)
    }

    /// Continuous density.
    pub fn pdf(&self, x: f64) -> f64 {
        let (l, h) = self.bounds();
        if x < l || x > h {
            return 0.0;
        }
        if l == h {
            return f64::INFINITY;
        }
        let a = self.alpha;
        a * l.powf(a) * x.powf(-a - 1.0) / (1.0 - (l / h).powf(a))
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let (l, h) = self.bounds();
        if x < l {
            return 0.0;
        }
        if x >= h {
            return 1.0;
        }
        let a = self.alpha;
        (1.0 - (l / x).powf(a)) / (1.0 - (l / h).powf(a))
    }

    /// Quantile function.
    pub fn inverse_cdf(&self, u: f64) -> f64 {
        let (l, h) = self.bounds();
        if l == h {
            return l;
        }
        let a = self.alpha;
        let tail = 1.0 - u * (1.0 - (l / h).powf(a));
        (l * tail.powf(-1.0 / a)).clamp(l, h)
    }

    /// Mean of the continuous distribution.
    pub fn mean(&self) -> f64 {
        let (l, h) = self.bounds();
        if l == h {
            return l;
        }
        let a = self.alpha;
        let norm = 1.0 - (l / h).powf(a);
        if (a - 1.0).abs() < 1e-12 {
            l * (h / l).ln() / norm
        } else {
            a * l.powf(a) * (l.powf(1.0 - a) - h.powf(1.0 - a)) / ((a - 1.0) * norm)
        }
    }
}

/// Draw `n` integer popularities by inverse-CDF sampling, rounded to nearest.
pub fn sample_popularity(model: &PopularityModel, n: usize, seed: u64) -> Vec<u64> {
    let mut rng = rng_from_seed(seed);
    (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            (model.inverse_cdf(u).round() as u64).clamp(model.lo, model.hi)
        })
        .collect()
}

/// Piecewise-linear relative intensity over a 24 h cycle, peak normalised to 1.
///
/// Between the last breakpoint and `DAY_S` the profile wraps back to the
/// first breakpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensityProfile {
    pub breakpoints: Vec<(f64, f64)>,
}

impl IntensityProfile {
    pub fn new(mut breakpoints: Vec<(f64, f64)>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::invalid("intensity profile needs at least 2 breakpoints"));
        }
        if breakpoints.windows(2).any(|w| !(w[0].0 < w[1].0)) {
            return Err(Error::invalid("intensity profile times must be strictly ascending"));
        }
        if breakpoints.iter().any(|&(t, v)| !(0.0..DAY_S).contains(&t) || !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::invalid("intensity profile needs times in [0, 86400) and finite intensities >= 0"));
        }
        let peak = breakpoints.iter().map(|b| b.1).fold(0.0, f64::max);
        if peak == 0.0 {
            return Err(Error::invalid("intensity profile is identically zero"));
        }
        for b in &mut breakpoints {
            b.1 /= peak;
        }
        Ok(IntensityProfile { breakpoints })
    }

    pub fn constant(level: f64) -> Result<Self> {
        IntensityProfile::new(vec![(0.0, level), (DAY_S / 2.0, level)])
    }

    /// Parse a `time_s,intensity` CSV.
    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers().map_err(|e| Error::Csv { context: "intensity profile header".into(), source: e })?.clone();
        if headers.iter().map(str::trim).collect::<Vec<_>>() != ["time_s", "intensity"] {
            return Err(Error::invalid("intensity profile header must be `time_s,intensity`"));
        }
        let mut points = Vec::new();
        for row in rdr.deserialize::<(f64, f64)>() {
            points.push(row.map_err(|e| Error::Csv { context: "intensity profile row".into(), source: e })?);
        }
        IntensityProfile::new(points)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        IntensityProfile::from_csv_reader(f)
    }

    /// Intensity at time `t` (taken modulo 24 h).
    pub fn at(&self, t: f64) -> f64 {
        let t = t.rem_euclid(DAY_S);
        let bp = &self.breakpoints;
        let first = bp[0];
        let last = *bp.last().unwrap();
        let wrap = |t: f64| {
            // Segment from `last` to `first + DAY_S`.
            let span = first.0 + DAY_S - last.0;
            let t = if t < first.0 { t + DAY_S } else { t };
            last.1 + (first.1 - last.1) * (t - last.0) / span
        };
        if t < first.0 || t >= last.0 {
            return wrap(t);
        }
        let i = bp.partition_point(|b| b.0 <= t) - 1;
        let (t0, v0) = bp[i];
        let (t1, v1) = bp[i + 1];
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }
}

/// Contents created over one 24 h cycle.
///
/// Creations follow an inhomogeneous Poisson process with rate
/// `intensity(t)·m_max/ttl`, drawn by thinning, so that by Little's law the
/// expected number of live contents at peak intensity is `m_max`.
pub fn build_diurnal_scenario(
    profile: &IntensityProfile,
    m_max: u64,
    ttl: f64,
    model: &PopularityModel,
    seed: u64,
) -> Result<Vec<ContentClass>> {
    if m_max == 0 {
        return Err(Error::invalid("m_max must be at least 1"));
    }
    if !(ttl > 0.0) {
        return Err(Error::invalid("ttl must be positive"));
    }
    let mut rng = rng_from_seed(seed);
    let peak_rate = m_max as f64 / ttl;
    let mut t = 0.0;
    let mut contents = Vec::new();
    loop {
        let u: f64 = rng.random();
        t += -(1.0 - u).ln() / peak_rate;
        if t >= DAY_S {
            break;
        }
        let accept: f64 = rng.random();
        if accept < profile.at(t) {
            let r0 = (model.inverse_cdf(rng.random()).round() as u64).clamp(model.lo, model.hi);
            let mut c = ContentClass::new(format!("c{}", contents.len()), r0, ttl);
            c.creation_time = t;
            contents.push(c);
        }
    }
    Ok(contents)
}

/// Number of contents alive at time `t`.
pub fn concurrency_at(contents: &[ContentClass], t: f64) -> usize {
    contents.iter().filter(|c| c.creation_time <= t && t < c.creation_time + c.ttl).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{ks_two_sample, mean_ci, Z95};

    #[test]
    fn degenerate_support() {
        let m = PopularityModel::new(50, 50, 0.5).unwrap();
        assert!(sample_popularity(&m, 100, 1).iter().all(|&x| x == 50));
    }

    #[test]
    fn rejects_bad_models() {
        assert!(PopularityModel::new(0, 10, 1.0).is_err());
        assert!(PopularityModel::new(20, 10, 1.0).is_err());
        assert!(PopularityModel::new(1, 10, 0.0).is_err());
    }

    #[test]
    fn continuous_mean_matches_quadrature() {
        for a in [0.5, 1.0, 2.0] {
            let m = PopularityModel::new(10, 1000, a).unwrap();
            let q = crate::numeric::integrate(|x| x * m.pdf(x), 10.0, 1000.0, 1e-10, 1e-12);
            assert!((m.mean() / q - 1.0).abs() < 1e-9, "alpha {a}");
        }
    }

    #[test]
    fn sample_mean_matches_rounded_distribution() {
        let m = PopularityModel::new(10, 1000, 0.5).unwrap();
        // Exact mean of the rounded variable: P(k) = F(k+0.5) − F(k−0.5),
        // with the end masses folded onto lo and hi.
        let exact: f64 = (m.lo..=m.hi)
            .map(|k| {
                let k = k as f64;
                k * (m.cdf(k + 0.5) - m.cdf(k - 0.5))
            })
            .sum();
        let xs: Vec<f64> = sample_popularity(&m, 100_000, 3).into_iter().map(|x| x as f64).collect();
        let ci = mean_ci(&xs, 3.0);
        assert!(ci.contains(exact), "{ci:?} vs {exact}");
        assert!(xs.iter().all(|&x| (10.0..=1000.0).contains(&x)));
    }

    #[test]
    fn heavier_alpha_has_fewer_popular_contents() {
        let frac = |a: f64| {
            let m = PopularityModel::new(10, 1000, a).unwrap();
            let xs = sample_popularity(&m, 20_000, 9);
            xs.iter().filter(|&&x| x > 100).count() as f64 / xs.len() as f64
        };
        assert!(frac(1.0) < frac(0.5));
    }

    #[test]
    fn sampling_is_deterministic_and_stable() {
        let m = PopularityModel::new(10, 1000, 0.5).unwrap();
        assert_eq!(sample_popularity(&m, 1000, 5), sample_popularity(&m, 1000, 5));
        let a: Vec<f64> = sample_popularity(&m, 20_000, 1).into_iter().map(|x| x as f64).collect();
        let b: Vec<f64> = sample_popularity(&m, 20_000, 2).into_iter().map(|x| x as f64).collect();
        // Continuous-looking KS on integer data is conservative (ties).
        assert!(ks_two_sample(&a, &b).1 > 0.01);
    }

    #[test]
    fn profile_interpolates_and_wraps() {
        let p = IntensityProfile::new(vec![(0.0, 2.0), (43_200.0, 4.0)]).unwrap();
        assert_eq!(p.at(0.0), 0.5);
        assert_eq!(p.at(21_600.0), 0.75);
        assert_eq!(p.at(43_200.0), 1.0);
        assert_eq!(p.at(64_800.0), 0.75);
        assert_eq!(p.at(DAY_S), 0.5);
        let csv = "time_s,intensity\n0,1\n3600,0\n7200,0\n10800,1\n";
        let p = IntensityProfile::from_csv_reader(csv.as_bytes()).unwrap();
        assert_eq!(p.at(5000.0), 0.0);
        assert!(IntensityProfile::from_csv_reader("a,b\n0,1\n5,1\n".as_bytes()).is_err());
        assert!(IntensityProfile::new(vec![(0.0, 1.0)]).is_err());
    }

    #[test]
    fn constant_profile_concurrency_matches_little() {
        let model = PopularityModel::new(10, 1000, 0.5).unwrap();
        let cs = build_diurnal_scenario(&IntensityProfile::constant(1.0).unwrap(), 200, 300.0, &model, 11).unwrap();
        let samples: Vec<f64> = (0..2000).map(|i| concurrency_at(&cs, 600.0 + i as f64 * 42.0) as f64).collect();
        let m = mean_ci(&samples, Z95).mean;
        assert!((m / 200.0 - 1.0).abs() < 0.05, "mean concurrency {m}");
        assert!(cs.windows(2).all(|w| w[0].creation_time < w[1].creation_time));
    }

    #[test]
    fn zero_span_has_no_creations() {
        let p = IntensityProfile::new(vec![(0.0, 1.0), (10_000.0, 0.0), (40_000.0, 0.0), (50_000.0, 1.0)]).unwrap();
        let model = PopularityModel::new(10, 100, 1.0).unwrap();
        let cs = build_diurnal_scenario(&p, 200, 300.0, &model, 4).unwrap();
        assert!(!cs.is_empty());
        assert!(cs.iter().all(|c| !(10_000.0..=40_000.0).contains(&c.creation_time)));
    }
}
