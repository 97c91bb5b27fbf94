//! Monte Carlo dissemination over contact traces, and an exact CTMC oracle
//! for small homogeneous instances.

use std::io::Write;
use std::path::Path;

use rand::seq::index::sample;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::CostBreakdown;
use crate::mctrace::ContactTrace;
use crate::model::{ContentClass, ContentPlacement, CostParams, ScenarioConfig};
use crate::numeric::{mean_ci, MeanCi, Z95};
use crate::rng::{derive_seed, rng_from_seed, Rng};
use crate::{Error, Result};

/// How a requester was eventually served.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeliverySource {
    Sc,
    D2d,
    /// By the macro BS at the deadline.
    Ttl,
}

/// Outcome of one dissemination of one content.
///
/// Times are relative to the content's creation. Seeded MNs are served at
/// `t = 0` and are not part of the requester arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisseminationResult {
    pub ttl: f64,
    /// MN ids of the `R₀` requesters left after seeding.
    pub requesters: Vec<u32>,
    /// Opportunistic delivery time, `None` when censored at TTL.
    pub delivery_time: Vec<Option<f64>>,
    pub delivery_source: Vec<DeliverySource>,
    pub became_holder: Vec<bool>,
    pub served_by_sc: u64,
    pub served_by_d2d: u64,
    pub served_at_ttl: u64,
    pub h_sc0: u64,
    pub h_mn0: u64,
    /// `[since, drop_at)` for every MN that held the content.
    pub mn_holder_intervals: Vec<(f64, f64)>,
    pub costs: CostBreakdown,
}

impl DisseminationResult {
    pub fn r0(&self) -> usize {
        self.requesters.len()
    }

    /// Phase costs implied by the counts.
    pub fn recompute_costs(&self, costs: &CostParams) -> CostBreakdown {
        CostBreakdown {
            placement: costs.c_bh * self.h_sc0 as f64 + costs.c_bs * self.h_mn0 as f64,
            opportunistic: costs.c_sc * self.served_by_sc as f64 + costs.c_d2d * self.served_by_d2d as f64,
            delayed: costs.c_bs_ttl * self.served_at_ttl as f64,
        }
    }

    /// Holders (SC and MN) at time `t`.
    pub fn holders_at(&self, t: f64) -> usize {
        self.h_sc0 as usize + self.mn_holder_intervals.iter().filter(|&&(since, drop)| since <= t && t < drop).count()
    }

    /// Requesters not yet served at time `t`.
    pub fn requesters_at(&self, t: f64) -> usize {
        if t >= self.ttl {
            return self.delivery_time.iter().filter(|d| d.is_none()).count();
        }
        self.delivery_time.iter().filter(|d| d.is_none_or(|x| x > t)).count()
    }

    /// Fraction of requesters served opportunistically by `t`.
    pub fn delivered_fraction(&self, t: f64) -> f64 {
        if self.requesters.is_empty() {
            return 1.0;
        }
        1.0 - self.requesters_at(t) as f64 / self.r0() as f64
    }

    /// Delay averaged over requesters, censored at TTL.
    pub fn mean_delay(&self) -> f64 {
        if self.requesters.is_empty() {
            return 0.0;
        }
        self.delivery_time.iter().map(|d| d.unwrap_or(self.ttl)).sum::<f64>() / self.r0() as f64
    }
}

fn as_count(x: f64, what: &str) -> Result<u64> {
    let r = x.round();
    if !(x >= 0.0) || (x - r).abs() > 1e-9 {
        return Err(Error::invalid(format!("{what}={x} must be a nonnegative integer for simulation")));
    }
    Ok(r as u64)
}

fn exp_sample(rng: &mut Rng, rate: f64) -> f64 {
    let u: f64 = rng.random();
    -(1.0 - u).ln() / rate
}

/// Simulate one dissemination of `content` over `trace`.
pub fn run_dissemination(
    trace: &ContactTrace,
    cfg: &ScenarioConfig,
    content: &ContentClass,
    placement: ContentPlacement,
    costs: &CostParams,
    seed: u64,
) -> Result<DisseminationResult> {
    let h_sc0 = as_count(placement.h_sc0, "h_sc0")?;
    let h_mn0 = as_count(placement.h_mn0, "h_mn0")?;
    let n_mn = trace.n_mn;
    if content.r0_total as usize > n_mn {
        return Err(Error::PopulationExceeded { requested: content.r0_total, available: n_mn });
    }
    if h_sc0 as usize > trace.n_sc {
        return Err(Error::invalid(format!("h_sc0={h_sc0} exceeds the {} SCs of the trace", trace.n_sc)));
    }
    if h_mn0 > content.r0_total {
        return Err(Error::invalid(format!("h_mn0={h_mn0} exceeds r0_total={}", content.r0_total)));
    }
    let start = content.creation_time;
    let end = start + content.ttl;
    if end > trace.horizon * (1.0 + 1e-12) {
        return Err(Error::invalid(format!("trace horizon {} is shorter than creation_time + ttl = {end}", trace.horizon)));
    }

    let mut rng = rng_from_seed(seed);
    let p_c = cfg.p_c;
    let lambda_d = cfg.lambda_d;
    let n_nodes = trace.n_nodes();
    const NONE: u32 = u32::MAX;

    // Per-node state: `since < t < drop_at` means holding at time t.
    let mut since = vec![f64::INFINITY; n_nodes];
    let mut drop_at = vec![f64::INFINITY; n_nodes];
    let mut req_slot = vec![NONE; n_nodes];

    let chosen = sample(&mut rng, n_mn, content.r0_total as usize).into_vec();
    let mut mn_holder_intervals = Vec::new();
    let lifetime = |rng: &mut Rng, t: f64| {
        if lambda_d > 0.0 {
            t + exp_sample(rng, lambda_d)
        } else {
            f64::INFINITY
        }
    };
    for &node in &chosen[..h_mn0 as usize] {
        if rng.random::<f64>() < p_c {
            since[node] = start;
            drop_at[node] = lifetime(&mut rng, start);
        }
    }
    let requesters: Vec<u32> = chosen[h_mn0 as usize..].iter().map(|&x| x as u32).collect();
    for (slot, &node) in requesters.iter().enumerate() {
        req_slot[node as usize] = slot as u32;
    }
    for j in sample(&mut rng, trace.n_sc, h_sc0 as usize).into_iter() {
        since[n_mn + j] = f64::NEG_INFINITY;
    }

    let r0 = requesters.len();
    let mut delivery_time = vec![None; r0];
    let mut delivery_source = vec![DeliverySource::Ttl; r0];
    let mut became_holder = vec![false; r0];
    let (mut by_sc, mut by_d2d) = (0u64, 0u64);
    let mut pending = r0;

    let first = trace.events.partition_point(|e| e.t <= start);
    for e in &trace.events[first..] {
        if e.t > end || pending == 0 {
            break;
        }
        let t = e.t;
        let (a, b) = (e.a as usize, e.b as usize);
        let holds = |n: usize| since[n] < t && t < drop_at[n];
        let (holder, target) = if holds(a) && req_slot[b] != NONE {
            (a, b)
        } else if holds(b) && req_slot[a] != NONE {
            (b, a)
        } else {
            continue;
        };
        let slot = req_slot[target] as usize;
        req_slot[target] = NONE;
        pending -= 1;
        delivery_time[slot] = Some(t - start);
        if holder >= n_mn {
            delivery_source[slot] = DeliverySource::Sc;
            by_sc += 1;
        } else {
            delivery_source[slot] = DeliverySource::D2d;
            by_d2d += 1;
        }
        if rng.random::<f64>() < p_c {
            became_holder[slot] = true;
            since[target] = t;
            drop_at[target] = lifetime(&mut rng, t);
        }
    }

    for node in 0..n_mn {
        if since[node].is_finite() {
            mn_holder_intervals.push((since[node] - start, drop_at[node] - start));
        }
    }

    let mut result = DisseminationResult {
        ttl: content.ttl,
        requesters,
        delivery_time,
        delivery_source,
        became_holder,
        served_by_sc: by_sc,
        served_by_d2d: by_d2d,
        served_at_ttl: pending as u64,
        h_sc0,
        h_mn0,
        mn_holder_intervals,
        costs: CostBreakdown::default(),
    };
    result.costs = result.recompute_costs(costs);
    Ok(result)
}

/// Where each replication's contact trace comes from.
pub enum TraceSource<'a> {
    /// Every replication reuses one trace; only requester/holder draws vary.
    Fixed(&'a ContactTrace),
    /// Replication `i` uses `pool[i % pool.len()]`.
    Pool(&'a [ContactTrace]),
    /// A fresh trace per replication from the given seed.
    Generator(&'a (dyn Fn(u64) -> Result<ContactTrace> + Sync)),
}

/// Per-replication scalars kept for aggregation and paired comparisons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationSummary {
    pub seed: u64,
    pub h: Vec<f64>,
    pub r: Vec<f64>,
    pub p: Vec<f64>,
    pub mean_delay: f64,
    pub costs: CostBreakdown,
    pub served_by_sc: u64,
    pub served_by_d2d: u64,
    pub served_at_ttl: u64,
}

impl ReplicationSummary {
    fn from_result(res: &DisseminationResult, seed: u64, grid: &[f64]) -> Self {
        ReplicationSummary {
            seed,
            h: grid.iter().map(|&t| res.holders_at(t) as f64).collect(),
            r: grid.iter().map(|&t| res.requesters_at(t) as f64).collect(),
            p: grid.iter().map(|&t| res.delivered_fraction(t)).collect(),
            mean_delay: res.mean_delay(),
            costs: res.costs,
            served_by_sc: res.served_by_sc,
            served_by_d2d: res.served_by_d2d,
            served_at_ttl: res.served_at_ttl,
        }
    }
}

/// Replication averages with normal-approximation 95% intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCurves {
    pub times: Vec<f64>,
    pub h: Vec<MeanCi>,
    pub r: Vec<MeanCi>,
    pub p: Vec<MeanCi>,
    pub mean_delay: MeanCi,
    pub cost: MeanCi,
    pub cost_breakdown: CostBreakdown,
    pub served_by_sc: MeanCi,
    pub served_by_d2d: MeanCi,
    pub served_at_ttl: MeanCi,
    /// `Σ served_by_sc / Σ (served_by_sc + served_by_d2d)`; `None` without
    /// opportunistic deliveries.
    pub sc_fraction: Option<f64>,
    pub n_reps: usize,
    pub base_seed: u64,
    pub seeds: Vec<u64>,
    #[serde(skip)]
    pub replications: Vec<ReplicationSummary>,
}

impl EmpiricalCurves {
    fn aggregate(times: &[f64], reps: Vec<ReplicationSummary>, base_seed: u64) -> Self {
        let col = |f: &dyn Fn(&ReplicationSummary) -> f64| -> MeanCi {
            let xs: Vec<f64> = reps.iter().map(f).collect();
            mean_ci(&xs, Z95)
        };
        let per_t =
            |f: &dyn Fn(&ReplicationSummary, usize) -> f64| -> Vec<MeanCi> { (0..times.len()).map(|i| col(&|r| f(r, i))).collect() };
        let n = reps.len() as f64;
        let breakdown = CostBreakdown {
            placement: reps.iter().map(|r| r.costs.placement).sum::<f64>() / n,
            opportunistic: reps.iter().map(|r| r.costs.opportunistic).sum::<f64>() / n,
            delayed: reps.iter().map(|r| r.costs.delayed).sum::<f64>() / n,
        };
        let sc: u64 = reps.iter().map(|r| r.served_by_sc).sum();
        let d2d: u64 = reps.iter().map(|r| r.served_by_d2d).sum();
        EmpiricalCurves {
            times: times.to_vec(),
            h: per_t(&|r, i| r.h[i]),
            r: per_t(&|r, i| r.r[i]),
            p: per_t(&|r, i| r.p[i]),
            mean_delay: col(&|r| r.mean_delay),
            cost: col(&|r| r.costs.total()),
            cost_breakdown: breakdown,
            served_by_sc: col(&|r| r.served_by_sc as f64),
            served_by_d2d: col(&|r| r.served_by_d2d as f64),
            served_at_ttl: col(&|r| r.served_at_ttl as f64),
            sc_fraction: (sc + d2d > 0).then(|| sc as f64 / (sc + d2d) as f64),
            n_reps: reps.len(),
            base_seed,
            seeds: reps.iter().map(|r| r.seed).collect(),
            replications: reps,
        }
    }

    /// `t,h_mean,h_lo,h_hi,r_mean,r_lo,r_hi,p_mean,p_lo,p_hi`, plus a
    /// trailing `p_theory` column when `theory` is given.
    pub fn write_csv<W: Write>(&self, mut w: W, theory: Option<&[f64]>) -> std::io::Result<()> {
        write!(w, "t,h_mean,h_lo,h_hi,r_mean,r_lo,r_hi,p_mean,p_lo,p_hi")?;
        if theory.is_some() {
            write!(w, ",p_theory")?;
        }
        writeln!(w)?;
        for i in 0..self.times.len() {
            let (h, r, p) = (self.h[i], self.r[i], self.p[i]);
            write!(w, "{},{},{},{},{},{},{},{},{},{}", self.times[i], h.mean, h.lo, h.hi, r.mean, r.lo, r.hi, p.mean, p.lo, p.hi)?;
            if let Some(th) = theory {
                write!(w, ",{}", th[i])?;
            }
            writeln!(w)?;
        }
        w.flush()
    }

    pub fn save_csv(&self, path: impl AsRef<Path>, theory: Option<&[f64]>) -> Result<()> {
        let path = path.as_ref();
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f), theory).map_err(|e| Error::io(path, e))
    }

    /// Largest `|theory − empirical|` of the delivery probability.
    pub fn max_p_deviation(&self, theory: &[f64]) -> f64 {
        self.p.iter().zip(theory).map(|(e, t)| (e.mean - t).abs()).fold(0.0, f64::max)
    }
}

/// Run `n_reps` independent disseminations and aggregate them.
///
/// Replication `i` has seed `derive_seed(base_seed, i)`; with a generator,
/// the trace is drawn from `derive_seed(seed_i, 0)` and the dissemination
/// from `derive_seed(seed_i, 1)`. Replications run in parallel and are
/// merged in index order.
#[allow(clippy::too_many_arguments)]
pub fn run_replications(
    source: &TraceSource<'_>,
    cfg: &ScenarioConfig,
    content: &ContentClass,
    placement: ContentPlacement,
    costs: &CostParams,
    n_reps: usize,
    base_seed: u64,
    t_grid: &[f64],
) -> Result<EmpiricalCurves> {
    if n_reps < 2 {
        return Err(Error::invalid("run_replications needs n_reps >= 2"));
    }
    if let TraceSource::Pool(p) = source {
        if p.is_empty() {
            return Err(Error::invalid("trace pool is empty"));
        }
    }
    let reps: Vec<ReplicationSummary> = (0..n_reps)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(base_seed, i as u64);
            let sim_seed = derive_seed(seed, 1);
            let res = match source {
                TraceSource::Fixed(tr) => run_dissemination(tr, cfg, content, placement, costs, sim_seed)?,
                TraceSource::Pool(pool) => run_dissemination(&pool[i % pool.len()], cfg, content, placement, costs, sim_seed)?,
                TraceSource::Generator(g) => {
                    let tr = g(derive_seed(seed, 0))?;
                    run_dissemination(&tr, cfg, content, placement, costs, sim_seed)?
                }
            };
            Ok(ReplicationSummary::from_result(&res, seed, t_grid))
        })
        .collect::<Result<_>>()?;
    Ok(EmpiricalCurves::aggregate(t_grid, reps, base_seed))
}

/// Exact transient solution of the aggregated holder/requester chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CtmcDelivery {
    /// Probability that a tagged requester is served by `t`.
    pub p_delivered: f64,
    pub e_h: f64,
    pub e_r: f64,
}

pub const CTMC_MAX_R0: usize = 30;
pub const CTMC_MAX_H0: usize = 10;

/// Transient analysis by uniformization of the chain on `(m, n)` with
/// transitions `(m, n) → (m+1, n−1)` at rate `p_c·λ·m·n` and
/// `(m, n) → (m, n−1)` at rate `(1−p_c)·λ·m·n`.
pub fn exact_ctmc_delivery(r0: usize, h0: usize, p_c: f64, lambda: f64, t: f64) -> Result<CtmcDelivery> {
    if r0 > CTMC_MAX_R0 || h0 > CTMC_MAX_H0 {
        return Err(Error::OracleScaleExceeded { r0, h0 });
    }
    if !(0.0..=1.0).contains(&p_c) || !(lambda >= 0.0) || !(t >= 0.0) {
        return Err(Error::invalid("ctmc oracle needs p_c in [0,1], lambda >= 0, t >= 0"));
    }
    if r0 == 0 {
        return Ok(CtmcDelivery { p_delivered: 1.0, e_h: h0 as f64, e_r: 0.0 });
    }
    // State (n, k): n requesters left, k recruited holders (k ≤ r0 − n).
    let idx = |n: usize, k: usize| n * (r0 + 1) + k;
    let size = (r0 + 1) * (r0 + 1);
    let rate = |n: usize, k: usize| lambda * ((h0 + k) * n) as f64;
    let big = (0..=r0).flat_map(|n| (0..=r0 - n).map(move |k| (n, k))).map(|(n, k)| rate(n, k)).fold(0.0, f64::max);

    let mut dist = vec![0.0; size];
    dist[idx(r0, 0)] = 1.0;
    if big > 0.0 && t > 0.0 {
        let chunks = ((big * t) / 50.0).ceil().max(1.0) as usize;
        let dt = t / chunks as f64;
        let lt = big * dt;
        let step = |v: &[f64]| -> Vec<f64> {
            let mut out = vec![0.0; size];
            for n in 0..=r0 {
                for k in 0..=r0 - n {
                    let mass = v[idx(n, k)];
                    if mass == 0.0 {
                        continue;
                    }
                    let q = rate(n, k) / big;
                    out[idx(n, k)] += mass * (1.0 - q);
                    if q > 0.0 {
                        out[idx(n - 1, k + 1)] += mass * q * p_c;
                        out[idx(n - 1, k)] += mass * q * (1.0 - p_c);
                    }
                }
            }
            out
        };
        for _ in 0..chunks {
            let mut term = dist.clone();
            let mut weight = (-lt).exp();
            let mut acc: Vec<f64> = term.iter().map(|x| x * weight).collect();
            let mut covered = weight;
            let mut j = 0usize;
            while 1.0 - covered > 1e-14 && j < 10_000 {
                j += 1;
                term = step(&term);
                weight *= lt / j as f64;
                covered += weight;
                for (a, x) in acc.iter_mut().zip(&term) {
                    *a += x * weight;
                }
            }
            let total: f64 = acc.iter().sum();
            dist = acc.into_iter().map(|x| x / total).collect();
        }
    }
    let (mut e_h, mut e_r) = (0.0, 0.0);
    for n in 0..=r0 {
        for k in 0..=r0 - n {
            let m = dist[idx(n, k)];
            e_h += m * (h0 + k) as f64;
            e_r += m * n as f64;
        }
    }
    Ok(CtmcDelivery { p_delivered: 1.0 - e_r / r0 as f64, e_h, e_r })
}
