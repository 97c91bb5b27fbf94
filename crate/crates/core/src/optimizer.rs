//! Cost-minimizing initial placement.
//!
//! Two special cases have closed forms:
//!
//! - SC-only seeding without cooperation ([`optimal_sc_allocation`]): each
//!   content gets `H = ln(γΦR/(1 + λ₀/C_BH))/γ` clamped to `[0, N_SC]`, where
//!   `λ₀ ≥ 0` is the multiplier of the shared cache budget.
//! - MN-only seeding ([`optimal_mn_allocation`]).
//!
//! [`solve_problem1_numeric`] handles the general (joint) problem, and
//! [`grid_search_oracle`] enumerates small integer instances exhaustively.

use std::io::Write;
use std::path::Path;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::analytics::content_cost;
use crate::model::{ContentClass, ContentPlacement, CostParams, Placement, ScenarioConfig};
use crate::numeric::{bisect, integrate, minimize_bounded};
use crate::rng::{derive_seed, rng_from_seed};
use crate::workload::PopularityModel;
use crate::{Error, Result};

/// Constants of the SC-only allocation for one TTL class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SCAllocationParams {
    /// `μ·TTL`
    pub gamma: f64,
    /// `(C_BS^(TTL) − C_SC)/C_BH`
    pub phi: f64,
    pub n_sc: f64,
    pub total_cache: f64,
    pub lambda0: f64,
    pub c_bh: f64,
}

impl SCAllocationParams {
    pub fn new(gamma: f64, costs: &CostParams, cfg: &ScenarioConfig, lambda0: f64) -> Result<Self> {
        check_sc_costs(costs)?;
        Ok(SCAllocationParams {
            gamma,
            phi: (costs.c_bs_ttl - costs.c_sc) / costs.c_bh,
            n_sc: cfg.n_sc as f64,
            total_cache: cfg.total_cache() as f64,
            lambda0,
            c_bh: costs.c_bh,
        })
    }

    /// Popularity below which a content gets no SC copy.
    pub fn lower(&self) -> f64 {
        (1.0 + self.lambda0 / self.c_bh) / (self.gamma * self.phi)
    }

    /// Popularity above which a content is cached in every SC.
    pub fn upper(&self) -> f64 {
        self.lower() * (self.gamma * self.n_sc).exp()
    }

    /// SC copies for a content of popularity `r0`.
    pub fn allocation(&self, r0: f64) -> f64 {
        if !(self.gamma > 0.0) {
            return 0.0;
        }
        let ratio = self.gamma * self.phi * r0 / (1.0 + self.lambda0 / self.c_bh);
        if ratio <= 1.0 {
            return 0.0;
        }
        (ratio.ln() / self.gamma).min(self.n_sc)
    }
}

fn check_sc_costs(costs: &CostParams) -> Result<()> {
    if costs.c_sc >= costs.c_bs_ttl {
        return Err(Error::NotCostMeaningful { c_sc: costs.c_sc, c_bs_ttl: costs.c_bs_ttl });
    }
    if !(costs.c_bh > 0.0) {
        return Err(Error::invalid("SC allocation needs c_bh > 0"));
    }
    Ok(())
}

/// SC copies per content for a fixed multiplier `lambda0`.
pub fn sc_allocation_for_lambda(contents: &[ContentClass], costs: &CostParams, cfg: &ScenarioConfig, lambda0: f64) -> Result<Vec<f64>> {
    contents
        .iter()
        .map(|c| Ok(SCAllocationParams::new(cfg.mu_lambda * c.ttl, costs, cfg, lambda0)?.allocation(c.r0_total as f64)))
        .collect()
}

/// SC-only allocation minimizing total cost with `p_c` taken as 0.
///
/// Returns the real-valued placement and the multiplier `λ₀`: zero when the
/// budget is slack, otherwise the smallest value (to `1e−9·C_BH`) whose
/// allocation fits the budget. The allocated total decreases in `λ₀`, so the
/// search is a bisection.
pub fn optimal_sc_allocation(contents: &[ContentClass], costs: &CostParams, cfg: &ScenarioConfig) -> Result<(Placement, f64)> {
    check_sc_costs(costs)?;
    let budget = cfg.total_cache() as f64;
    let total = |l: f64| -> f64 { sc_allocation_for_lambda(contents, costs, cfg, l).map(|h| h.iter().sum()).unwrap_or(f64::NAN) };
    let mut lambda0 = 0.0;
    if total(0.0) > budget {
        let phi = (costs.c_bs_ttl - costs.c_sc) / costs.c_bh;
        let top = contents.iter().map(|c| cfg.mu_lambda * c.ttl * phi * c.r0_total as f64).fold(0.0, f64::max);
        let hi = costs.c_bh * (top - 1.0).max(0.0);
        let (_, upper) = bisect(|l| total(l) - budget, 0.0, hi, 1e-9 * costs.c_bh);
        lambda0 = upper;
    }
    let h = sc_allocation_for_lambda(contents, costs, cfg, lambda0)?;
    Ok((Placement { h_mn0: vec![0.0; h.len()], h_sc0: h }, lambda0))
}

/// How [`lambda0_from_density`] ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lambda0Status {
    Solved,
    /// The budget is not binding; `λ₀ = 0`.
    ConstraintSlack,
}

/// Multiplier for `m` equal-TTL contents whose popularity follows `density`.
///
/// Solves
///
/// ```text
/// ∫_L^U ln(γΦx)ρ(x)dx − ln(1 + λ₀/C_BH)∫_L^U ρ(x)dx + γN_SC∫_U^∞ ρ(x)dx = γ·Q_total/m
/// ```
///
/// for `λ₀` by bisection. The left side decreases in `λ₀`.
pub fn lambda0_from_density(density: &PopularityModel, m: usize, params: &SCAllocationParams) -> Result<(f64, Lambda0Status)> {
    if m == 0 {
        return Err(Error::invalid("lambda0_from_density needs m >= 1"));
    }
    if !(params.gamma > 0.0 && params.phi > 0.0 && params.c_bh > 0.0) {
        return Err(Error::invalid("lambda0_from_density needs gamma, phi and c_bh positive"));
    }
    let (lo, hi) = (density.lo as f64, density.hi as f64);
    if lo >= hi {
        return Err(Error::invalid("lambda0_from_density needs lo < hi"));
    }
    let rhs = params.gamma * params.total_cache / m as f64;
    let lhs = |lambda0: f64| -> f64 {
        let p = SCAllocationParams { lambda0, ..*params };
        let (l, u) = (p.lower(), p.upper());
        let a = l.clamp(lo, hi);
        let b = u.clamp(lo, hi);
        let shift = (1.0 + lambda0 / p.c_bh).ln();
        let mid = if b > a { integrate(|x| ((p.gamma * p.phi * x).ln() - shift) * density.pdf(x), a, b, 1e-13, 1e-11) } else { 0.0 };
        mid + p.gamma * p.n_sc * (1.0 - density.cdf(u))
    };
    let f = |l: f64| lhs(l) - rhs;
    if f(0.0) <= 0.0 {
        return Ok((0.0, Lambda0Status::ConstraintSlack));
    }
    let top = params.c_bh * (params.gamma * params.phi * hi - 1.0).max(0.0);
    let (_, upper) = bisect(f, 0.0, top, 1e-9 * params.c_bh);
    Ok((upper, Lambda0Status::Solved))
}

/// Constants of the MN-only seeding rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MNAllocationParams {
    pub gamma: f64,
    /// `(C_BS^(TTL) − C_D2D)/(C_BS − C_D2D)`
    pub phi_prime: f64,
    pub p_c: f64,
}

impl MNAllocationParams {
    pub fn new(gamma: f64, costs: &CostParams, p_c: f64) -> Result<Self> {
        if costs.c_bs == costs.c_d2d {
            return Err(Error::invalid("MN allocation needs c_bs != c_d2d"));
        }
        if !(p_c > 0.0) {
            return Err(Error::invalid("MN allocation needs p_c > 0"));
        }
        Ok(MNAllocationParams { gamma, phi_prime: (costs.c_bs_ttl - costs.c_d2d) / (costs.c_bs - costs.c_d2d), p_c })
    }

    /// Stationary point `R(√Φ′·e^{x/2} − 1)/(e^x − 1)`, `x = γ·p_c·R`,
    /// clamped to `[0, R]`. `None` when `Φ′ ≤ 0` (no stationary point).
    pub fn stationary_point(&self, r0: f64) -> Option<f64> {
        if !(self.phi_prime > 0.0) {
            return None;
        }
        let s = self.phi_prime.sqrt();
        let x = self.gamma * self.p_c * r0;
        if x <= 0.0 {
            return Some(if s > 1.0 { r0 } else { 0.0 });
        }
        let frac = if x > 1.0 {
            let e = (-x).exp();
            (s * (-0.5 * x).exp() - e) / (1.0 - e)
        } else {
            ((s - 1.0) + s * (0.5 * x).exp_m1()) / x.exp_m1()
        };
        Some((r0 * frac).clamp(0.0, r0))
    }
}

/// MN seeds per content (`h_sc0 ≡ 0`).
///
/// The stationary point is compared against both box endpoints by predicted
/// cost, which also covers cost settings where it is a maximum.
pub fn optimal_mn_allocation(contents: &[ContentClass], costs: &CostParams, cfg: &ScenarioConfig) -> Result<Placement> {
    let mut h_mn0 = Vec::with_capacity(contents.len());
    for c in contents {
        let p = MNAllocationParams::new(cfg.mu_lambda * c.ttl, costs, cfg.p_c)?;
        let r = c.r0_total as f64;
        let cost = |x: f64| content_cost(c, ContentPlacement::mn(x), cfg, costs);
        let mut best = (0.0, cost(0.0));
        let mut candidates = vec![r];
        candidates.extend(p.stationary_point(r));
        for x in candidates {
            let v = cost(x);
            if v < best.1 {
                best = (x, v);
            }
        }
        h_mn0.push(best.0);
    }
    Ok(Placement { h_sc0: vec![0.0; contents.len()], h_mn0 })
}

/// Which placement variables the numeric solver may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SolveMode {
    ScOnly,
    MnOnly,
    Joint,
}

impl SolveMode {
    fn uses_sc(self) -> bool {
        self != SolveMode::MnOnly
    }
    fn uses_mn(self) -> bool {
        self != SolveMode::ScOnly
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// At least 8 starts are always used.
    pub starts: usize,
    pub max_sweeps: usize,
    /// Relative improvement per sweep below which a start has converged.
    pub tol: f64,
    pub seed: u64,
    /// Extra starting points (e.g. the solution of a neighbouring instance).
    #[serde(skip)]
    pub warm_starts: Vec<Placement>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { starts: 8, max_sweeps: 1000, tol: 1e-12, seed: 0, warm_starts: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericSolution {
    pub placement: Placement,
    pub total_cost: f64,
    pub sweeps: usize,
    pub starts: usize,
    pub converged: bool,
}

struct Problem<'a> {
    contents: &'a [ContentClass],
    costs: &'a CostParams,
    cfg: &'a ScenarioConfig,
    mode: SolveMode,
    n_sc: f64,
    budget: f64,
}

impl Problem<'_> {
    fn f(&self, i: usize, x: f64, y: f64) -> f64 {
        content_cost(&self.contents[i], ContentPlacement { h_sc0: x, h_mn0: y }, self.cfg, self.costs)
    }

    fn total(&self, p: &Placement) -> f64 {
        (0..p.len()).map(|i| self.f(i, p.h_sc0[i], p.h_mn0[i])).sum()
    }

    fn r(&self, i: usize) -> f64 {
        self.contents[i].r0_total as f64
    }

    /// Clip into the box and scale SC copies down to the budget.
    fn project(&self, mut p: Placement) -> Placement {
        for i in 0..p.len() {
            p.h_sc0[i] = if self.mode.uses_sc() { p.h_sc0[i].clamp(0.0, self.n_sc) } else { 0.0 };
            p.h_mn0[i] = if self.mode.uses_mn() { p.h_mn0[i].clamp(0.0, self.r(i)) } else { 0.0 };
        }
        let s = p.total_sc();
        if s > self.budget {
            let k = self.budget / s;
            p.h_sc0.iter_mut().for_each(|x| *x *= k);
        }
        p
    }

    /// One-dimensional improvement of `g` on `[lo, hi]` around `cur`;
    /// returns the new point only if strictly better.
    fn improve<G: Fn(f64) -> f64>(g: G, cur: f64, lo: f64, hi: f64) -> f64 {
        if !(hi > lo) {
            return cur;
        }
        let base = g(cur);
        let (x, v) = minimize_bounded(&g, lo, hi, 16, 1e-10 * (1.0 + hi - lo));
        if v < base {
            x
        } else {
            cur
        }
    }

    fn sweep(&self, p: &mut Placement) {
        let m = p.len();
        for i in 0..m {
            if self.mode.uses_sc() {
                let slack = (self.budget - p.total_sc()).max(0.0);
                let hi = self.n_sc.min(p.h_sc0[i] + slack);
                let y = p.h_mn0[i];
                p.h_sc0[i] = Self::improve(|x| self.f(i, x, y), p.h_sc0[i], 0.0, hi);
            }
            if self.mode.uses_mn() {
                let x = p.h_sc0[i];
                p.h_mn0[i] = Self::improve(|y| self.f(i, x, y), p.h_mn0[i], 0.0, self.r(i));
            }
        }
        if self.mode.uses_sc() && self.budget - p.total_sc() < 1e-9 * (1.0 + self.budget) {
            self.transfer(p);
        }
    }

    /// Move SC copies between contents along the budget face, repeatedly
    /// pairing the content with the steepest marginal gain with the one
    /// with the smallest marginal loss.
    fn transfer(&self, p: &mut Placement) {
        let m = p.len();
        let eps = 1e-6;
        for _ in 0..4 * m.max(1) {
            let grad = |i: usize| {
                let x = p.h_sc0[i];
                let (a, b) = ((x - eps).max(0.0), (x + eps).min(self.n_sc));
                (self.f(i, b, p.h_mn0[i]) - self.f(i, a, p.h_mn0[i])) / (b - a)
            };
            let mut gain = None::<(usize, f64)>;
            let mut loss = None::<(usize, f64)>;
            for i in 0..m {
                let g = grad(i);
                if p.h_sc0[i] < self.n_sc && gain.is_none_or(|(_, v)| g < v) {
                    gain = Some((i, g));
                }
                if p.h_sc0[i] > 0.0 && loss.is_none_or(|(_, v)| g > v) {
                    loss = Some((i, g));
                }
            }
            let (Some((i, gi)), Some((j, gj))) = (gain, loss) else { return };
            if i == j || gj - gi <= 1e-12 * (1.0 + gi.abs()) {
                return;
            }
            let (xi, xj) = (p.h_sc0[i], p.h_sc0[j]);
            let (yi, yj) = (p.h_mn0[i], p.h_mn0[j]);
            let room = (self.n_sc - xi).min(xj);
            let pair = |d: f64| self.f(i, xi + d, yi) + self.f(j, xj - d, yj);
            let d = Self::improve(pair, 0.0, 0.0, room);
            if d == 0.0 {
                return;
            }
            p.h_sc0[i] = (xi + d).min(self.n_sc);
            p.h_sc0[j] = (xj - d).max(0.0);
        }
    }

    fn descend(&self, start: Placement, opts: &SolverOptions) -> (Placement, f64, usize, bool) {
        let mut p = self.project(start);
        let mut cost = self.total(&p);
        for sweep in 1..=opts.max_sweeps {
            let mut next = p.clone();
            self.sweep(&mut next);
            let c = self.total(&next);
            if c <= cost {
                let gain = cost - c;
                p = next;
                cost = c;
                if gain <= opts.tol * (1.0 + cost.abs()) {
                    return (p, cost, sweep, true);
                }
            } else {
                return (p, cost, sweep, true);
            }
        }
        (p, cost, opts.max_sweeps, false)
    }
}

/// Minimize total predicted cost over the placement box and the shared
/// cache budget by projected coordinate descent from several starts.
pub fn solve_problem1_numeric(
    contents: &[ContentClass],
    costs: &CostParams,
    cfg: &ScenarioConfig,
    mode: SolveMode,
    opts: &SolverOptions,
) -> Result<NumericSolution> {
    let m = contents.len();
    let prob = Problem { contents, costs, cfg, mode, n_sc: cfg.n_sc as f64, budget: cfg.total_cache() as f64 };
    let mut starts = vec![Placement::zeros(m)];
    if mode.uses_sc() && check_sc_costs(costs).is_ok() {
        starts.push(optimal_sc_allocation(contents, costs, cfg)?.0);
    }
    if mode.uses_mn() && cfg.p_c > 0.0 && costs.c_bs != costs.c_d2d {
        let mn = optimal_mn_allocation(contents, costs, cfg)?;
        if mode == SolveMode::Joint {
            if let Some(last) = starts.last() {
                starts.push(Placement { h_sc0: last.h_sc0.clone(), h_mn0: mn.h_mn0.clone() });
            }
        }
        starts.push(mn);
    }
    starts.extend(opts.warm_starts.iter().filter(|w| w.len() == m).cloned());
    let mut rng = rng_from_seed(derive_seed(opts.seed, 0x5eed));
    let wanted = opts.starts.max(8);
    while starts.len() < wanted {
        starts.push(Placement {
            h_sc0: (0..m).map(|_| rng.random::<f64>() * prob.n_sc).collect(),
            h_mn0: contents.iter().map(|c| rng.random::<f64>() * c.r0_total as f64).collect(),
        });
    }

    let mut best: Option<NumericSolution> = None;
    let mut sweeps = 0;
    let n_starts = starts.len();
    for s in starts {
        let (p, c, k, ok) = prob.descend(s, opts);
        sweeps += k;
        if best.as_ref().is_none_or(|b| c < b.total_cost) {
            best = Some(NumericSolution { placement: p, total_cost: c, sweeps: 0, starts: n_starts, converged: ok });
        }
    }
    let mut best = best.expect("at least one start");
    best.sweeps = sweeps;
    Ok(best)
}

/// Exhaustive search result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSolution {
    pub placement: Placement,
    pub total_cost: f64,
    /// Number of complete SC assignments visited by the enumeration.
    pub evaluated: u64,
}

pub const GRID_SEARCH_LIMIT: f64 = 1e8;

/// Exhaustive minimum over integer placements on a grid of spacing `step`.
///
/// SC copies range over `{0, step, …} ∪ {N_SC}` and MN seeds over `{0, step, …} ∪ {R(0)}`.
/// The objective is a sum of per-content costs coupled only through the SC
/// budget, so for each content and SC level the best MN level is tabulated
/// first, then every budget-feasible SC assignment is enumerated depth first.
pub fn grid_search_oracle(
    contents: &[ContentClass],
    costs: &CostParams,
    cfg: &ScenarioConfig,
    mode: SolveMode,
    step: u64,
) -> Result<GridSolution> {
    if contents.len() > 12 {
        return Err(Error::invalid("grid_search_oracle supports at most 12 contents"));
    }
    if step == 0 {
        return Err(Error::invalid("grid step must be positive"));
    }
    let levels = |top: u64, used: bool| -> Vec<u64> {
        if !used {
            return vec![0];
        }
        let mut v: Vec<u64> = (0..=top).step_by(step as usize).collect();
        if *v.last().unwrap() != top {
            v.push(top);
        }
        v
    };
    let xs: Vec<Vec<u64>> = contents.iter().map(|_| levels(cfg.n_sc, mode.uses_sc())).collect();
    let ys: Vec<Vec<u64>> = contents.iter().map(|c| levels(c.r0_total, mode.uses_mn())).collect();
    let points: f64 =
        xs.iter().map(|x| x.len() as f64).product::<f64>() + xs.iter().zip(&ys).map(|(x, y)| (x.len() * y.len()) as f64).sum::<f64>();
    if points > GRID_SEARCH_LIMIT {
        return Err(Error::SearchSpaceTooLarge { points });
    }

    // table[i][k] = (cost, best y) at SC level xs[i][k].
    let table: Vec<Vec<(f64, u64)>> = contents
        .iter()
        .enumerate()
        .map(|(i, c)| {
            xs[i]
                .iter()
                .map(|&x| {
                    ys[i]
                        .iter()
                        .map(|&y| (content_cost(c, ContentPlacement { h_sc0: x as f64, h_mn0: y as f64 }, cfg, costs), y))
                        .fold((f64::INFINITY, 0), |a, b| if b.0 < a.0 { b } else { a })
                })
                .collect()
        })
        .collect();

    struct Search<'t> {
        xs: &'t [Vec<u64>],
        table: &'t [Vec<(f64, u64)>],
        choice: Vec<usize>,
        best: (f64, Vec<usize>),
        evaluated: u64,
    }
    impl Search<'_> {
        fn dfs(&mut self, i: usize, left: u64, acc: f64) {
            if i == self.xs.len() {
                self.evaluated += 1;
                if acc < self.best.0 {
                    self.best = (acc, self.choice.clone());
                }
                return;
            }
            for k in 0..self.xs[i].len() {
                let x = self.xs[i][k];
                if x > left {
                    break;
                }
                self.choice[i] = k;
                self.dfs(i + 1, left - x, acc + self.table[i][k].0);
            }
        }
    }
    let mut search =
        Search { xs: &xs, table: &table, choice: vec![0; contents.len()], best: (f64::INFINITY, vec![0; contents.len()]), evaluated: 0 };
    search.dfs(0, cfg.total_cache(), 0.0);
    let (total_cost, ks) = search.best;
    let placement = Placement {
        h_sc0: ks.iter().enumerate().map(|(i, &k)| xs[i][k] as f64).collect(),
        h_mn0: ks.iter().enumerate().map(|(i, &k)| table[i][k].1 as f64).collect(),
    };
    Ok(GridSolution { placement, total_cost, evaluated: search.evaluated })
}

/// Total predicted cost of a placement.
pub fn total_cost(contents: &[ContentClass], placement: &Placement, cfg: &ScenarioConfig, costs: &CostParams) -> f64 {
    contents.iter().enumerate().fold(0.0, |acc, (i, c)| acc + content_cost(c, placement.get(i), cfg, costs))
}

/// Solver metadata written next to an allocation CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub mode: String,
    pub lambda0: Option<f64>,
    pub sweeps: usize,
    pub starts: usize,
    pub converged: bool,
    pub total_cost_real: f64,
    pub total_cost_int: f64,
    pub no_offload_cost: f64,
    pub rcd_real: f64,
    pub rcd_int: f64,
    pub warnings: Vec<String>,
}

/// Integer placement for reporting and simulation. SC holders follow
/// [`Placement::integerized`]; each MN seed count takes whichever of its floor
/// and ceiling gives the lower predicted content cost, so a small positive
/// seed never collapses to zero when that would forfeit all deliveries.
pub fn round_placement(contents: &[ContentClass], real: &Placement, cfg: &ScenarioConfig, costs: &CostParams) -> Placement {
    let mut out = real.integerized(contents, cfg);
    for (i, c) in contents.iter().enumerate() {
        let x = real.h_mn0[i].clamp(0.0, c.r0_total as f64);
        let h_sc0 = out.h_sc0[i];
        let cost = |m: f64| content_cost(c, ContentPlacement { h_sc0, h_mn0: m }, cfg, costs);
        let (lo, hi) = (x.floor(), x.ceil());
        out.h_mn0[i] = if cost(hi) < cost(lo) { hi } else { lo };
    }
    out
}

/// `content_id,r0,ttl,h_sc0_real,h_sc0_int,h_mn0_real,h_mn0_int,predicted_cost`,
/// with `predicted_cost` evaluated at the real-valued allocation.
pub fn write_allocation_csv<W: Write>(
    mut w: W,
    contents: &[ContentClass],
    real: &Placement,
    int: &Placement,
    cfg: &ScenarioConfig,
    costs: &CostParams,
) -> std::io::Result<()> {
    writeln!(w, "content_id,r0,ttl,h_sc0_real,h_sc0_int,h_mn0_real,h_mn0_int,predicted_cost")?;
    for (i, c) in contents.iter().enumerate() {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            c.id,
            c.r0_total,
            c.ttl,
            real.h_sc0[i],
            int.h_sc0[i],
            real.h_mn0[i],
            int.h_mn0[i],
            content_cost(c, real.get(i), cfg, costs)
        )?;
    }
    w.flush()
}

pub fn save_allocation_csv(
    path: impl AsRef<Path>,
    contents: &[ContentClass],
    real: &Placement,
    int: &Placement,
    cfg: &ScenarioConfig,
    costs: &CostParams,
) -> Result<()> {
    let path = path.as_ref();
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_allocation_csv(std::io::BufWriter::new(f), contents, real, int, cfg, costs).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workload::sample_popularity;

    pub(super) fn scenario(n_sc: u64, cache: u64, p_c: f64, mu: f64) -> ScenarioConfig {
        ScenarioConfig { n_bs: 1, n_sc, n_mn: 2000, cache_per_sc: cache, p_c, lambda_d: 0.0, mu_lambda: mu, cv_lambda: 1.0 }
    }

    fn reference_costs() -> CostParams {
        CostParams::new(0.8, 1.0, 0.2, 0.1, 2.0)
    }

    fn contents(rs: &[u64], ttl: f64) -> Vec<ContentClass> {
        rs.iter().enumerate().map(|(i, &r)| ContentClass::new(format!("c{i}"), r, ttl)).collect()
    }

    #[test]
    fn below_threshold_gets_nothing() {
        let cfg = scenario(4, 100, 0.0, 0.01);
        let cs = contents(&[1, 500], 10.0);
        // γΦR = 0.1·2.25·1 < 1.
        let (p, l0) = optimal_sc_allocation(&cs, &reference_costs(), &cfg).unwrap();
        assert_eq!(p.h_sc0[0], 0.0);
        assert!(p.h_sc0[1] > 0.0);
        assert_eq!(l0, 0.0);
    }

    #[test]
    fn uncapacitated_uses_log_formula() {
        let cfg = scenario(50, 1000, 0.0, 0.01);
        let cs = contents(&[30, 120, 900], 20.0);
        let (p, l0) = optimal_sc_allocation(&cs, &reference_costs(), &cfg).unwrap();
        assert_eq!(l0, 0.0);
        let phi: f64 = (2.0 - 0.2) / 0.8;
        for (c, h) in cs.iter().zip(&p.h_sc0) {
            let g = 0.01 * 20.0;
            let want = ((g * phi * c.r0_total as f64).ln() / g).clamp(0.0, 50.0);
            assert!((h - want).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_meaningless_costs() {
        let cfg = scenario(4, 100, 0.0, 0.01);
        let bad = CostParams::new(0.8, 1.0, 2.0, 0.1, 2.0);
        assert!(matches!(optimal_sc_allocation(&contents(&[10], 1.0), &bad, &cfg), Err(Error::NotCostMeaningful { .. })));
    }

    #[test]
    fn tight_budget_beats_grid_search() {
        let cfg = scenario(5, 1, 0.0, 0.02);
        let cs = contents(&[15, 40, 80, 120, 200, 260, 300, 35, 90, 500], 30.0);
        let (p, l0) = optimal_sc_allocation(&cs, &reference_costs(), &cfg).unwrap();
        assert!(l0 > 0.0);
        assert!(p.total_sc() <= 5.0 + 1e-6);
        let closed = total_cost(&cs, &p, &cfg, &reference_costs());
        let grid = grid_search_oracle(&cs, &reference_costs(), &cfg, SolveMode::ScOnly, 1).unwrap();
        assert!(closed <= grid.total_cost * 1.01, "{closed} vs {}", grid.total_cost);
    }

    #[test]
    fn sc_allocation_monotone_in_popularity() {
        let cfg = scenario(10, 100, 0.0, 0.01);
        let p = SCAllocationParams::new(0.3, &reference_costs(), &cfg, 0.7).unwrap();
        let mut prev = 0.0;
        for r in 1..2000 {
            let h = p.allocation(r as f64);
            assert!(h >= prev && h <= 10.0);
            prev = h;
        }
        assert!(p.lower() > 0.0 && p.lower() <= p.upper());
    }

    #[test]
    fn vanishing_margin_kills_sc_allocation() {
        let cfg = scenario(4, 100, 0.0, 3.3e-5);
        let cs = contents(&[10, 100, 1000], 300.0);
        let mut prev = f64::INFINITY;
        for eps in [1e-1, 1e-2, 1e-3, 1e-5] {
            let costs = CostParams::new(0.8, 1.0, 0.2, 0.1, 0.2 + eps);
            let (p, _) = optimal_sc_allocation(&cs, &costs, &cfg).unwrap();
            let s = p.total_sc();
            assert!(s <= prev);
            prev = s;
        }
        assert_eq!(prev, 0.0);
    }

    #[test]
    fn lemma2_cost_nondecreasing_in_lambda0() {
        let cfg = scenario(5, 2, 0.0, 0.02);
        let cs = contents(&[15, 40, 80, 120, 200, 260], 30.0);
        let mut prev = f64::NEG_INFINITY;
        for k in 0..200 {
            let l0 = k as f64 * 0.01;
            let h = sc_allocation_for_lambda(&cs, &reference_costs(), &cfg, l0).unwrap();
            let p = Placement { h_mn0: vec![0.0; h.len()], h_sc0: h };
            let c = total_cost(&cs, &p, &cfg, &reference_costs());
            assert!(c >= prev - 1e-9);
            prev = c;
        }
    }

    #[test]
    fn density_lambda0_slack_and_monotone() {
        let model = PopularityModel::new(10, 1000, 0.5).unwrap();
        let costs = reference_costs();
        let mut cfg = scenario(4, 100_000, 0.0, 3.3e-5);
        let params = SCAllocationParams::new(3.3e-5 * 3600.0, &costs, &cfg, 0.0).unwrap();
        assert_eq!(lambda0_from_density(&model, 100, &params).unwrap(), (0.0, Lambda0Status::ConstraintSlack));
        let mut prev = f64::INFINITY;
        for q in [1u64, 5, 10, 20, 40, 80] {
            cfg.cache_per_sc = q;
            let params = SCAllocationParams::new(3.3e-5 * 3600.0, &costs, &cfg, 0.0).unwrap();
            let (l, _) = lambda0_from_density(&model, 100, &params).unwrap();
            assert!(l <= prev + 1e-9);
            prev = l;
        }
    }

    #[test]
    fn density_lambda0_matches_sampled_contents() {
        let model = PopularityModel::new(10, 1000, 0.5).unwrap();
        let costs = reference_costs();
        let m = 10_000;
        let ttl = 3600.0;
        let cfg = scenario(4, 1500, 0.0, 3.3e-5);
        let rs = sample_popularity(&model, m, 21);
        let cs = contents(&rs, ttl);
        let (_, sampled) = optimal_sc_allocation(&cs, &costs, &cfg).unwrap();
        let params = SCAllocationParams::new(3.3e-5 * ttl, &costs, &cfg, 0.0).unwrap();
        let (dens, status) = lambda0_from_density(&model, m, &params).unwrap();
        assert_eq!(status, Lambda0Status::Solved);
        assert!((dens / sampled - 1.0).abs() < 0.05, "{dens} vs {sampled}");
    }

    #[test]
    fn mn_clamps_and_matches_grid() {
        let costs = CostParams::new(0.8, 1.0, 0.2, 0.1, 0.1 + 1e-6);
        let cfg = scenario(4, 100, 0.5, 0.01);
        let cs = contents(&[100], 10.0);
        assert_eq!(optimal_mn_allocation(&cs, &costs, &cfg).unwrap().h_mn0[0], 0.0);

        // Φ′ = 10 with tiny γ pushes the stationary point above R(0).
        let costs = CostParams::new(0.8, 1.0, 0.2, 0.1, 9.1);
        let cfg = scenario(4, 100, 0.1, 0.001);
        let p = optimal_mn_allocation(&cs, &costs, &cfg).unwrap();
        assert_eq!(p.h_mn0[0], 100.0);
        let grid = grid_search_oracle(&cs, &costs, &cfg, SolveMode::MnOnly, 1).unwrap();
        assert!((grid.placement.h_mn0[0] - p.h_mn0[0]).abs() <= 1.0);
        let c = total_cost(&cs, &p, &cfg, &costs);
        assert!(c <= grid.total_cost * 1.005);
    }

    #[test]
    fn mn_interior_optimum() {
        let costs = CostParams::new(0.8, 1.0, 0.2, 0.1, 2.0);
        let cfg = scenario(4, 100, 0.5, 0.005);
        let cs = contents(&[100], 10.0);
        let p = optimal_mn_allocation(&cs, &costs, &cfg).unwrap();
        let x = p.h_mn0[0];
        assert!((x - 36.408).abs() < 0.01, "{x}");
        let grid = grid_search_oracle(&cs, &costs, &cfg, SolveMode::MnOnly, 1).unwrap();
        assert!((grid.placement.h_mn0[0] - x).abs() <= 1.0);
    }

    #[test]
    fn stationary_point_is_stable_for_small_x() {
        let costs = CostParams::new(0.8, 1.0, 0.2, 0.1, 2.0);
        let p = MNAllocationParams::new(1e-12, &costs, 0.5).unwrap();
        assert_eq!(p.stationary_point(100.0), Some(100.0));
        let p = MNAllocationParams::new(100.0, &costs, 0.5).unwrap();
        let x = p.stationary_point(50.0).unwrap();
        assert!(x.is_finite() && (0.0..=50.0).contains(&x));
        assert!(MNAllocationParams::new(1.0, &CostParams::new(0.8, 0.1, 0.2, 0.1, 2.0), 0.5).is_err());
        assert!(MNAllocationParams::new(1.0, &costs, 0.0).is_err());
    }

    #[test]
    fn single_content_grid_enumerates_four() {
        let cfg = scenario(3, 1, 0.0, 0.05);
        let cs = contents(&[100], 10.0);
        let g = grid_search_oracle(&cs, &reference_costs(), &cfg, SolveMode::ScOnly, 1).unwrap();
        assert_eq!(g.evaluated, 4);
        let best = (0..=3)
            .map(|h| (h, content_cost(&cs[0], ContentPlacement::sc(h as f64), &cfg, &reference_costs())))
            .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
        assert_eq!(g.placement.h_sc0[0], best.0 as f64);
        let too_big = contents(&[100; 12], 10.0);
        assert!(matches!(
            grid_search_oracle(&too_big, &reference_costs(), &scenario(10, 100, 0.0, 0.05), SolveMode::ScOnly, 1),
            Err(Error::SearchSpaceTooLarge { .. })
        ));
    }

    #[test]
    fn numeric_sc_only_matches_closed_form() {
        let cfg = scenario(5, 2, 0.0, 0.02);
        let cs = contents(&[15, 40, 80, 120, 200, 260, 300, 35], 30.0);
        let (p, _) = optimal_sc_allocation(&cs, &reference_costs(), &cfg).unwrap();
        let closed = total_cost(&cs, &p, &cfg, &reference_costs());
        let num = solve_problem1_numeric(&cs, &reference_costs(), &cfg, SolveMode::ScOnly, &SolverOptions::default()).unwrap();
        assert!(num.total_cost <= closed * 1.001);
        assert!(num.placement.total_sc() <= 10.0 + 1e-6);
        assert!(num.starts >= 8);
    }

    #[test]
    fn numeric_mn_only_matches_closed_form() {
        let cfg = scenario(5, 2, 0.5, 0.005);
        let cs = contents(&[15, 40, 80, 120, 200], 10.0);
        let p = optimal_mn_allocation(&cs, &reference_costs(), &cfg).unwrap();
        let closed = total_cost(&cs, &p, &cfg, &reference_costs());
        let num = solve_problem1_numeric(&cs, &reference_costs(), &cfg, SolveMode::MnOnly, &SolverOptions::default()).unwrap();
        assert!((num.total_cost - closed).abs() <= 0.005 * closed);
        assert!(num.placement.h_sc0.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn joint_is_no_worse_than_special_cases() {
        let cfg = scenario(3, 2, 0.3, 0.01);
        let cs = contents(&[20, 60, 150, 400, 90], 20.0);
        let opts = SolverOptions::default();
        let sc = solve_problem1_numeric(&cs, &reference_costs(), &cfg, SolveMode::ScOnly, &opts).unwrap();
        let mn = solve_problem1_numeric(&cs, &reference_costs(), &cfg, SolveMode::MnOnly, &opts).unwrap();
        let joint = solve_problem1_numeric(&cs, &reference_costs(), &cfg, SolveMode::Joint, &opts).unwrap();
        assert!(joint.total_cost <= sc.total_cost.min(mn.total_cost) + 1e-9);
    }

    #[test]
    fn allocation_csv_header() {
        let cfg = scenario(3, 2, 0.0, 0.01);
        let cs = contents(&[20, 60], 20.0);
        let (p, _) = optimal_sc_allocation(&cs, &reference_costs(), &cfg).unwrap();
        let int = p.integerized(&cs, &cfg);
        let mut buf = Vec::new();
        write_allocation_csv(&mut buf, &cs, &p, &int, &cfg, &reference_costs()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("content_id,r0,ttl,h_sc0_real,h_sc0_int,h_mn0_real,h_mn0_int,predicted_cost\nc0,20,20,"));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            #[test]
            fn budget_is_respected(rs in proptest::collection::vec(1u64..2000, 1..30), q in 0u64..5, ttl in 1.0f64..500.0) {
                let cfg = scenario(4, q, 0.0, 0.01);
                let cs = contents(&rs, ttl);
                let (p, l0) = optimal_sc_allocation(&cs, &reference_costs(), &cfg).unwrap();
                prop_assert!(p.total_sc() <= (4 * q) as f64 + 1e-6);
                prop_assert!(l0 >= 0.0);
                prop_assert!(p.h_sc0.iter().all(|&h| (0.0..=4.0).contains(&h)));
            }

            #[test]
            fn mn_seed_in_box(r in 1u64..5000, gamma in 1e-6f64..10.0, p_c in 0.01f64..1.0, c_ttl in 0.0f64..20.0) {
                let costs = CostParams::new(0.8, 1.0, 0.2, 0.1, c_ttl);
                let cfg = scenario(4, 1, p_c, gamma);
                let cs = contents(&[r], 1.0);
                let p = optimal_mn_allocation(&cs, &costs, &cfg).unwrap();
                prop_assert!((0.0..=r as f64).contains(&p.h_mn0[0]));
            }
        }
    }
}
