//! Synthetic contact traces between edge nodes.
//!
//! Node indices follow one convention everywhere: MNs are `0..n_mn` and SCs
//! are `n_mn..n_mn + n_sc`. Events always store the smaller index in `a`, so
//! an MN–SC event has the MN in `a`. SCs are static and never meet each
//! other.

use std::io::{BufRead, Write};
use std::path::Path;

use rand::Rng as _;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::numeric::mean_cv;
use crate::rng::{derive_seed, rng_from_seed, Rng};
use crate::{Error, Result};

/// Default ceiling on the expected number of events of a Poisson trace.
pub const DEFAULT_EVENT_CAP: usize = 50_000_000;

/// An instantaneous meeting between nodes `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactEvent {
    pub t: f64,
    pub a: u32,
    pub b: u32,
}

/// Time-ordered contact events over `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactTrace {
    pub events: Vec<ContactEvent>,
    pub horizon: f64,
    pub n_mn: usize,
    pub n_sc: usize,
}

fn event_order(x: &ContactEvent, y: &ContactEvent) -> std::cmp::Ordering {
    x.t.total_cmp(&y.t).then(x.a.cmp(&y.a)).then(x.b.cmp(&y.b))
}

impl ContactTrace {
    pub fn new(mut events: Vec<ContactEvent>, horizon: f64, n_mn: usize, n_sc: usize) -> Result<Self> {
        let n = (n_mn + n_sc) as u32;
        for e in &events {
            if e.a >= e.b || e.b >= n || e.a as usize >= n_mn {
                return Err(Error::invalid(format!(
                    "contact ({}, {}) at t={} violates the node convention (a < b, a an MN, b < {n})",
                    e.a, e.b, e.t
                )));
            }
            if !(e.t >= 0.0 && e.t <= horizon) {
                return Err(Error::invalid(format!("contact time {} outside [0, {horizon}]", e.t)));
            }
        }
        events.sort_by(event_order);
        Ok(ContactTrace { events, horizon, n_mn, n_sc })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_mn + self.n_sc
    }

    pub fn is_sc(&self, node: u32) -> bool {
        node as usize >= self.n_mn
    }

    /// Superpose two traces over the same node set.
    pub fn merge(&self, other: &ContactTrace) -> Result<ContactTrace> {
        if self.n_mn != other.n_mn || self.n_sc != other.n_sc {
            return Err(Error::invalid("cannot merge traces over different node sets"));
        }
        let mut events = self.events.clone();
        events.extend_from_slice(&other.events);
        ContactTrace::new(events, self.horizon.min(other.horizon), self.n_mn, self.n_sc)
    }

    /// CSV with header `t,a,b`, times printed with 9 fractional digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,a,b")?;
        for e in &self.events {
            writeln!(w, "{:.9},{},{}", e.t, e.a, e.b)?;
        }
        w.flush()
    }

    pub fn read_csv<R: BufRead>(reader: R, sidecar: &TraceSidecar) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers().map_err(|e| Error::Csv { context: "trace header".into(), source: e })?.clone();
        if headers.iter().collect::<Vec<_>>() != ["t", "a", "b"] {
            return Err(Error::invalid("trace CSV header must be `t,a,b`"));
        }
        let mut events = Vec::new();
        for row in rdr.deserialize::<(f64, u32, u32)>() {
            let (t, a, b) = row.map_err(|e| Error::Csv { context: "trace row".into(), source: e })?;
            events.push(ContactEvent { t, a, b });
        }
        ContactTrace::new(events, sidecar.horizon, sidecar.n_mn, sidecar.n_sc)
    }

    /// Write `trace.csv` and `trace.json` into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>, sidecar: &TraceSidecar) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let csv_path = dir.join("trace.csv");
        let f = std::fs::File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
        self.write_csv(std::io::BufWriter::new(f)).map_err(|e| Error::io(&csv_path, e))?;
        let json_path = dir.join("trace.json");
        let text = serde_json::to_string_pretty(sidecar).expect("sidecar serializes");
        std::fs::write(&json_path, text + "\n").map_err(|e| Error::io(&json_path, e))
    }

    /// Load a trace from a CSV path; the sidecar is the same path with a
    /// `.json` extension, or `trace.json` when given a directory.
    pub fn load(path: impl AsRef<Path>) -> Result<(Self, TraceSidecar)> {
        let path = path.as_ref();
        let (csv_path, json_path) = if path.is_dir() {
            (path.join("trace.csv"), path.join("trace.json"))
        } else {
            (path.to_path_buf(), path.with_extension("json"))
        };
        let text = std::fs::read_to_string(&json_path).map_err(|e| Error::io(&json_path, e))?;
        let sidecar: TraceSidecar =
            serde_json::from_str(&text).map_err(|e| Error::Json { context: json_path.display().to_string(), source: e })?;
        let f = std::fs::File::open(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
        let trace = ContactTrace::read_csv(std::io::BufReader::new(f), &sidecar)?;
        Ok((trace, sidecar))
    }
}

/// Metadata stored next to a trace CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSidecar {
    pub n_mn: usize,
    pub n_sc: usize,
    pub horizon: f64,
    pub seed: u64,
    pub generator: GeneratorSpec,
}

/// Parameters of a Poisson trace with gamma-distributed pair rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoissonSpec {
    pub n_mn: usize,
    pub n_sc: usize,
    pub mu_lambda: f64,
    pub cv_lambda: f64,
    pub horizon: f64,
}

impl PoissonSpec {
    /// Draw a rate matrix and a trace from one seed.
    pub fn generate(&self, seed: u64) -> Result<ContactTrace> {
        let rates = sample_rate_matrix(self.n_mn, self.n_sc, self.mu_lambda, self.cv_lambda, derive_seed(seed, 0))?;
        generate_poisson_trace(&rates, self.horizon, derive_seed(seed, 1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorSpec {
    Poisson(PoissonSpec),
    Community(CommunityParams),
    External,
}

/// Symmetric per-pair meeting rates for all MN–MN and MN–SC pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrix {
    pub n_mn: usize,
    pub n_sc: usize,
    /// Rates in canonical pair order, see [`pair_index`].
    pub rates: Vec<f64>,
    pub mu_lambda: f64,
    pub cv_lambda: f64,
}

/// Number of pairs that can meet.
pub fn eligible_pairs(n_mn: usize, n_sc: usize) -> usize {
    n_mn * (n_mn.saturating_sub(1)) / 2 + n_mn * n_sc
}

/// Canonical position of pair `a < b`: MN–MN pairs first (row-major upper
/// triangle), then MN–SC pairs (MN-major).
pub fn pair_index(n_mn: usize, n_sc: usize, a: usize, b: usize) -> usize {
    debug_assert!(a < b && a < n_mn && b < n_mn + n_sc);
    if b < n_mn {
        a * (n_mn - 1) - a * a.saturating_sub(1) / 2 + (b - a - 1)
    } else {
        n_mn * (n_mn - 1) / 2 + a * n_sc + (b - n_mn)
    }
}

/// Inverse of [`pair_index`].
pub fn pair_nodes(n_mn: usize, n_sc: usize, idx: usize) -> (usize, usize) {
    let mm = n_mn * n_mn.saturating_sub(1) / 2;
    if idx >= mm {
        let k = idx - mm;
        return (k / n_sc, n_mn + k % n_sc);
    }
    let mut a = 0;
    let mut start = 0;
    loop {
        let row = n_mn - 1 - a;
        if idx < start + row {
            return (a, a + 1 + idx - start);
        }
        start += row;
        a += 1;
    }
}

impl RateMatrix {
    pub fn homogeneous(n_mn: usize, n_sc: usize, lambda: f64) -> Self {
        RateMatrix { n_mn, n_sc, rates: vec![lambda; eligible_pairs(n_mn, n_sc)], mu_lambda: lambda, cv_lambda: 0.0 }
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        if a == b || a >= self.n_mn {
            return 0.0;
        }
        self.rates[pair_index(self.n_mn, self.n_sc, a, b)]
    }

    /// Iterate `(a, b, λ_ab)` in canonical order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n_mn = self.n_mn;
        let n_sc = self.n_sc;
        let mm = (0..n_mn).flat_map(move |a| (a + 1..n_mn).map(move |b| (a, b)));
        let ms = (0..n_mn).flat_map(move |a| (0..n_sc).map(move |j| (a, n_mn + j)));
        mm.chain(ms).zip(self.rates.iter()).map(|((a, b), &r)| (a, b, r))
    }
}

/// Draw an independent gamma rate (mean `mu_lambda`, coefficient of
/// variation `cv_lambda`) for every eligible pair.
pub fn sample_rate_matrix(n_mn: usize, n_sc: usize, mu_lambda: f64, cv_lambda: f64, seed: u64) -> Result<RateMatrix> {
    if n_mn == 0 {
        return Err(Error::invalid("n_mn must be at least 1"));
    }
    if !(mu_lambda > 0.0) || !(cv_lambda >= 0.0) {
        return Err(Error::invalid("mu_lambda must be positive and cv_lambda nonnegative"));
    }
    let n = eligible_pairs(n_mn, n_sc);
    let rates = if cv_lambda == 0.0 {
        vec![mu_lambda; n]
    } else {
        let shape = 1.0 / (cv_lambda * cv_lambda);
        let scale = mu_lambda * cv_lambda * cv_lambda;
        let gamma = Gamma::new(shape, scale).map_err(|e| Error::invalid(format!("gamma parameters: {e}")))?;
        let mut rng = rng_from_seed(seed);
        (0..n).map(|_| gamma.sample(&mut rng)).collect()
    };
    Ok(RateMatrix { n_mn, n_sc, rates, mu_lambda, cv_lambda })
}

pub fn generate_poisson_trace(rates: &RateMatrix, horizon: f64, seed: u64) -> Result<ContactTrace> {
    generate_poisson_trace_capped(rates, horizon, seed, DEFAULT_EVENT_CAP)
}

/// Independent Poisson meeting processes for every pair with positive rate.
pub fn generate_poisson_trace_capped(rates: &RateMatrix, horizon: f64, seed: u64, cap: usize) -> Result<ContactTrace> {
    if !(horizon > 0.0) {
        return Err(Error::invalid("trace horizon must be positive"));
    }
    let expected: f64 = rates.rates.iter().sum::<f64>() * horizon;
    if expected > cap as f64 {
        return Err(Error::EventCap { expected, cap });
    }
    let mut rng = rng_from_seed(seed);
    let mut events = Vec::with_capacity((expected * 1.1) as usize + 16);
    for (a, b, lambda) in rates.pairs() {
        if lambda <= 0.0 {
            continue;
        }
        let mut t = 0.0;
        loop {
            t += exp_sample(&mut rng, lambda);
            if t > horizon {
                break;
            }
            events.push(ContactEvent { t, a: a as u32, b: b as u32 });
        }
    }
    events.sort_by(event_order);
    Ok(ContactTrace { events, horizon, n_mn: rates.n_mn, n_sc: rates.n_sc })
}

fn exp_sample(rng: &mut Rng, rate: f64) -> f64 {
    let u: f64 = rng.random();
    -(1.0 - u).ln() / rate
}

/// Community random-waypoint mobility over a square area.
///
/// Each MN has a home community (a square sub-area). At every waypoint
/// epoch it picks its next destination inside the home community with
/// probability `local_fraction` and anywhere in the area otherwise, travels
/// there in a straight line at a speed drawn from `[speed_min, speed_max]`
/// and pauses for up to `pause_max_s`. SCs sit at the centres of a
/// `√sc_grid × √sc_grid` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommunityParams {
    pub area_m: f64,
    pub communities: usize,
    /// Side of each community square, as a fraction of `area_m`.
    #[serde(default = "default_community_side")]
    pub community_side_fraction: f64,
    pub local_fraction: f64,
    pub n_mn: usize,
    pub sc_grid: usize,
    pub sc_range_m: f64,
    pub d2d_range_m: f64,
    pub speed_min: f64,
    pub speed_max: f64,
    #[serde(default)]
    pub pause_max_s: f64,
    pub horizon: f64,
    #[serde(default = "default_time_step")]
    pub time_step: f64,
}

fn default_community_side() -> f64 {
    0.25
}

fn default_time_step() -> f64 {
    1.0
}

impl CommunityParams {
    /// The 1000 m × 1000 m, 3-community, 25-SC geometry with 100 m SC range
    /// and 30 m D2D range.
    pub fn reference(n_mn: usize, horizon: f64) -> Self {
        CommunityParams {
            area_m: 1000.0,
            communities: 3,
            community_side_fraction: default_community_side(),
            local_fraction: 0.6,
            n_mn,
            sc_grid: 25,
            sc_range_m: 100.0,
            d2d_range_m: 30.0,
            speed_min: 0.5,
            speed_max: 1.5,
            pause_max_s: 60.0,
            horizon,
            time_step: 1.0,
        }
    }

    fn validate(&self) -> Result<usize> {
        let side = (self.sc_grid as f64).sqrt().round() as usize;
        if side * side != self.sc_grid {
            return Err(Error::invalid(format!("sc_grid={} is not a perfect square", self.sc_grid)));
        }
        if !(self.sc_range_m > 0.0) || !(self.d2d_range_m >= 0.0) {
            return Err(Error::invalid("sc_range_m must be positive and d2d_range_m nonnegative"));
        }
        if !(self.time_step > 0.0) || !(self.horizon > 0.0) || !(self.area_m > 0.0) {
            return Err(Error::invalid("time_step, horizon and area_m must be positive"));
        }
        if self.communities == 0 || self.n_mn == 0 {
            return Err(Error::invalid("communities and n_mn must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.local_fraction) || !(self.community_side_fraction > 0.0 && self.community_side_fraction <= 1.0) {
            return Err(Error::invalid("local_fraction and community_side_fraction must lie in [0, 1]"));
        }
        if !(self.speed_min > 0.0 && self.speed_min <= self.speed_max) || !(self.pause_max_s >= 0.0) {
            return Err(Error::invalid("speeds must satisfy 0 < speed_min <= speed_max and pause_max_s >= 0"));
        }
        Ok(side)
    }
}

#[derive(Clone, Copy)]
struct Walker {
    x: f64,
    y: f64,
    tx: f64,
    ty: f64,
    speed: f64,
    pause_left: f64,
    home: usize,
}

pub fn generate_community_trace(params: &CommunityParams, seed: u64) -> Result<ContactTrace> {
    let grid_side = params.validate()?;
    let mut rng = rng_from_seed(seed);
    let area = params.area_m;
    let cside = area * params.community_side_fraction;
    let homes: Vec<(f64, f64)> =
        (0..params.communities).map(|_| (rng.random::<f64>() * (area - cside), rng.random::<f64>() * (area - cside))).collect();

    let pick = |rng: &mut Rng, home: usize| -> (f64, f64) {
        if rng.random::<f64>() < params.local_fraction {
            let (x0, y0) = homes[home];
            (x0 + rng.random::<f64>() * cside, y0 + rng.random::<f64>() * cside)
        } else {
            (rng.random::<f64>() * area, rng.random::<f64>() * area)
        }
    };
    let speed = |rng: &mut Rng| params.speed_min + rng.random::<f64>() * (params.speed_max - params.speed_min);

    let n = params.n_mn;
    let mut walkers: Vec<Walker> = (0..n)
        .map(|i| {
            let home = i % params.communities;
            let (x, y) = pick(&mut rng, home);
            let (tx, ty) = pick(&mut rng, home);
            let s = speed(&mut rng);
            Walker { x, y, tx, ty, speed: s, pause_left: 0.0, home }
        })
        .collect();

    let cell = area / grid_side as f64;
    let sc_at = |x: f64, y: f64| -> Option<usize> {
        let gx = ((x / cell).floor() as isize).clamp(0, grid_side as isize - 1) as usize;
        let gy = ((y / cell).floor() as isize).clamp(0, grid_side as isize - 1) as usize;
        let cx = (gx as f64 + 0.5) * cell;
        let cy = (gy as f64 + 0.5) * cell;
        let d2 = (x - cx).powi(2) + (y - cy).powi(2);
        (d2 <= params.sc_range_m * params.sc_range_m).then_some(gy * grid_side + gx)
    };
    // Only the SC of the cell containing the node is checked, which is exact
    // while SC ranges do not overlap (range ≤ half the cell side).

    let d2d2 = params.d2d_range_m * params.d2d_range_m;
    let mut mm_in = vec![false; n * n.saturating_sub(1) / 2];
    let mut sc_in: Vec<Option<usize>> = walkers.iter().map(|w| sc_at(w.x, w.y)).collect();
    for a in 0..n {
        for b in a + 1..n {
            let (wa, wb) = (walkers[a], walkers[b]);
            mm_in[pair_index(n, 0, a, b)] = params.d2d_range_m > 0.0 && (wa.x - wb.x).powi(2) + (wa.y - wb.y).powi(2) <= d2d2;
        }
    }

    let mut events = Vec::new();
    let steps = (params.horizon / params.time_step).floor() as usize;
    for step in 1..=steps {
        let t = step as f64 * params.time_step;
        for w in walkers.iter_mut() {
            let mut budget = params.time_step;
            while budget > 0.0 {
                if w.pause_left > 0.0 {
                    let p = w.pause_left.min(budget);
                    w.pause_left -= p;
                    budget -= p;
                    continue;
                }
                let dx = w.tx - w.x;
                let dy = w.ty - w.y;
                let dist = (dx * dx + dy * dy).sqrt();
                let reach = w.speed * budget;
                if reach < dist {
                    w.x += dx / dist * reach;
                    w.y += dy / dist * reach;
                    budget = 0.0;
                } else {
                    w.x = w.tx;
                    w.y = w.ty;
                    budget -= dist / w.speed;
                    w.pause_left = rng.random::<f64>() * params.pause_max_s;
                    let (tx, ty) = pick(&mut rng, w.home);
                    w.tx = tx;
                    w.ty = ty;
                    w.speed = speed(&mut rng);
                }
            }
        }
        for (a, w) in walkers.iter().enumerate() {
            let now = sc_at(w.x, w.y);
            if let Some(c) = now.filter(|_| now != sc_in[a]) {
                events.push(ContactEvent { t, a: a as u32, b: (n + c) as u32 });
            }
            sc_in[a] = now;
        }
        if params.d2d_range_m > 0.0 {
            let mut idx = 0;
            for a in 0..n {
                let wa = walkers[a];
                for (b, wb) in walkers.iter().enumerate().skip(a + 1) {
                    let inside = (wa.x - wb.x).powi(2) + (wa.y - wb.y).powi(2) <= d2d2;
                    if inside && !mm_in[idx] {
                        events.push(ContactEvent { t, a: a as u32, b: b as u32 });
                    }
                    mm_in[idx] = inside;
                    idx += 1;
                }
            }
        }
    }
    events.sort_by(event_order);
    Ok(ContactTrace { events, horizon: params.horizon, n_mn: n, n_sc: params.sc_grid })
}

/// Empirical meeting-rate summary of a trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStats {
    pub mu_hat: f64,
    pub cv_hat: f64,
    /// Event count divided by horizon for every eligible pair, canonical order.
    pub pair_rates: Vec<f64>,
    pub mm_mu_hat: f64,
    pub ms_mu_hat: f64,
}

pub fn trace_stats(trace: &ContactTrace) -> TraceStats {
    let n_pairs = eligible_pairs(trace.n_mn, trace.n_sc);
    let mut counts = vec![0u64; n_pairs];
    for e in &trace.events {
        counts[pair_index(trace.n_mn, trace.n_sc, e.a as usize, e.b as usize)] += 1;
    }
    let pair_rates: Vec<f64> = counts.iter().map(|&c| c as f64 / trace.horizon).collect();
    let (mu_hat, cv_hat) = mean_cv(&pair_rates);
    let mm = trace.n_mn * trace.n_mn.saturating_sub(1) / 2;
    let avg = |xs: &[f64]| if xs.is_empty() { 0.0 } else { xs.iter().sum::<f64>() / xs.len() as f64 };
    TraceStats { mu_hat, cv_hat, mm_mu_hat: avg(&pair_rates[..mm]), ms_mu_hat: avg(&pair_rates[mm..]), pair_rates }
}
