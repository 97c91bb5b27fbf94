//! Scenario vocabulary shared by every other module.
//!
//! Holder counts are carried as `f64` throughout: the analytics and the
//! optimizer work on the real-valued fluid relaxation, while the simulator
//! insists on integral values (see [`Placement::integerized`]).

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Per-transmission costs of the three delivery phases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostParams {
    /// Backhaul placement of one copy on a small cell.
    pub c_bh: f64,
    /// Macro-BS placement of one copy on a mobile node.
    pub c_bs: f64,
    /// One SC → MN delivery.
    pub c_sc: f64,
    /// One MN → MN delivery.
    pub c_d2d: f64,
    /// One delayed macro-BS delivery at the deadline.
    pub c_bs_ttl: f64,
}

impl CostParams {
    pub fn new(c_bh: f64, c_bs: f64, c_sc: f64, c_d2d: f64, c_bs_ttl: f64) -> Self {
        CostParams { c_bh, c_bs, c_sc, c_d2d, c_bs_ttl }
    }

    /// Offloading through small cells can only pay off if an SC delivery is
    /// cheaper than the delayed macro delivery.
    pub fn offloading_meaningful(&self) -> bool {
        self.c_sc < self.c_bs_ttl
    }

    /// Non-fatal remarks about the cost vector.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if !self.offloading_meaningful() {
            w.push(format!("costs.c_sc ({}) >= costs.c_bs_ttl ({}): offloading through SCs cannot reduce cost", self.c_sc, self.c_bs_ttl));
        }
        w
    }
}

/// One content: its popularity, deadline and creation time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContentClass {
    pub id: String,
    /// Mobile nodes interested in the content at creation time.
    pub r0_total: u64,
    /// Deadline after creation, seconds.
    pub ttl: f64,
    #[serde(default)]
    pub creation_time: f64,
}

impl ContentClass {
    pub fn new(id: impl Into<String>, r0_total: u64, ttl: f64) -> Self {
        ContentClass { id: id.into(), r0_total, ttl, creation_time: 0.0 }
    }
}

/// Initial holders of a single content.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ContentPlacement {
    pub h_sc0: f64,
    pub h_mn0: f64,
}

impl ContentPlacement {
    pub fn sc(h_sc0: f64) -> Self {
        ContentPlacement { h_sc0, h_mn0: 0.0 }
    }

    pub fn mn(h_mn0: f64) -> Self {
        ContentPlacement { h_sc0: 0.0, h_mn0 }
    }
}

/// Initial holders for every content of a scenario, as parallel arrays.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Placement {
    pub h_sc0: Vec<f64>,
    pub h_mn0: Vec<f64>,
}

impl Placement {
    pub fn zeros(m: usize) -> Self {
        Placement { h_sc0: vec![0.0; m], h_mn0: vec![0.0; m] }
    }

    pub fn len(&self) -> usize {
        self.h_sc0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h_sc0.is_empty()
    }

    pub fn get(&self, i: usize) -> ContentPlacement {
        ContentPlacement { h_sc0: self.h_sc0[i], h_mn0: self.h_mn0[i] }
    }

    pub fn total_sc(&self) -> f64 {
        self.h_sc0.iter().sum()
    }

    /// Integer placement: SC holders by largest-remainder rounding that keeps
    /// the fleet total at `round(Σ h_sc0)` (capped by the cache budget and by
    /// `n_sc` per content); MN seeds rounded to nearest and capped at `r0_total`.
    pub fn integerized(&self, contents: &[ContentClass], cfg: &ScenarioConfig) -> Placement {
        let n_sc = cfg.n_sc as f64;
        let upper: Vec<f64> = vec![n_sc; self.len()];
        let real_total = self.total_sc();
        let target = real_total.round().min(cfg.total_cache() as f64);
        let h_sc0 = largest_remainder(&self.h_sc0, target, &upper);
        let h_mn0 = self.h_mn0.iter().zip(contents).map(|(&x, c)| x.round().clamp(0.0, c.r0_total as f64)).collect();
        Placement { h_sc0, h_mn0 }
    }

    pub fn is_integral(&self) -> bool {
        self.h_sc0.iter().chain(&self.h_mn0).all(|x| x.fract() == 0.0)
    }
}

/// Round `values` to integers whose sum is `target` (when reachable), each in
/// `[0, upper_i]`. Floors first, then hands out the remaining units to the
/// largest fractional parts; surplus from rounding up is removed from the
/// smallest fractional parts.
pub fn largest_remainder(values: &[f64], target: f64, upper: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = values.iter().zip(upper).map(|(&v, &u)| v.max(0.0).floor().min(u.floor())).collect();
    let mut order: Vec<usize> = (0..values.len()).collect();
    let frac = |i: usize| values[i].max(0.0) - values[i].max(0.0).floor();
    order.sort_by(|&a, &b| frac(b).total_cmp(&frac(a)).then(a.cmp(&b)));
    let mut sum: f64 = out.iter().sum();
    for &i in &order {
        if sum >= target {
            break;
        }
        if out[i] + 1.0 <= upper[i] && frac(i) > 0.0 {
            out[i] += 1.0;
            sum += 1.0;
        }
    }
    for &i in order.iter().rev() {
        if sum <= target {
            break;
        }
        if out[i] >= 1.0 {
            out[i] -= 1.0;
            sum -= 1.0;
        }
    }
    out
}

/// Network cardinalities, cooperation and mobility summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Macro base stations; bookkeeping only.
    pub n_bs: u64,
    pub n_sc: u64,
    pub n_mn: u64,
    /// Contents each SC can cache.
    pub cache_per_sc: u64,
    /// Probability that a served requester becomes a holder.
    pub p_c: f64,
    /// Rate at which an MN holder drops a cached content.
    #[serde(default)]
    pub lambda_d: f64,
    /// Mean pairwise meeting rate, per second.
    pub mu_lambda: f64,
    /// Coefficient of variation of the pairwise meeting rates.
    pub cv_lambda: f64,
}

impl ScenarioConfig {
    pub fn total_cache(&self) -> u64 {
        self.n_sc * self.cache_per_sc
    }
}

/// Holders and requesters right after the initial placement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveState {
    pub r0: f64,
    pub h0: f64,
}

impl EffectiveState {
    pub fn new(h0: f64, r0: f64) -> Self {
        EffectiveState { r0, h0 }
    }

    /// Seeded MNs are served at t=0 and leave the requester pool; each of
    /// them keeps forwarding with probability `p_c`, so in expectation
    /// `h0 = h_sc0 + p_c·h_mn0` and `r0 = r0_total − h_mn0`.
    pub fn derive(p_c: f64, content: &ContentClass, placement: ContentPlacement) -> Self {
        EffectiveState { h0: placement.h_sc0 + p_c * placement.h_mn0, r0: (content.r0_total as f64 - placement.h_mn0).max(0.0) }
    }
}

/// One broken constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub constraint: String,
}

impl Violation {
    fn new(field: impl Into<String>, constraint: impl Into<String>) -> Self {
        Violation { field: field.into(), constraint: constraint.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.constraint)
    }
}

/// Check type invariants and the placement box and capacity constraints.
/// Returns every violation found; an empty list means the scenario is valid.
pub fn validate_scenario(cfg: &ScenarioConfig, contents: &[ContentClass], placement: &Placement) -> Vec<Violation> {
    let mut v = Vec::new();
    if cfg.n_bs == 0 {
        v.push(Violation::new("scenario.n_bs", "n_bs >= 1"));
    }
    if cfg.n_mn == 0 {
        v.push(Violation::new("scenario.n_mn", "n_mn >= 1"));
    }
    if !(0.0..=1.0).contains(&cfg.p_c) {
        v.push(Violation::new("scenario.p_c", "0 <= p_c <= 1"));
    }
    if !(cfg.lambda_d >= 0.0) {
        v.push(Violation::new("scenario.lambda_d", "lambda_d >= 0"));
    }
    if !(cfg.mu_lambda > 0.0) || !cfg.mu_lambda.is_finite() {
        v.push(Violation::new("scenario.mu_lambda", "mu_lambda > 0"));
    }
    if !(cfg.cv_lambda >= 0.0) || !cfg.cv_lambda.is_finite() {
        v.push(Violation::new("scenario.cv_lambda", "cv_lambda >= 0"));
    }
    for (i, c) in contents.iter().enumerate() {
        if c.r0_total < 1 {
            v.push(Violation::new(format!("contents[{i}].r0_total"), "r0_total >= 1"));
        }
        if !(c.ttl >= 0.0) || !c.ttl.is_finite() {
            v.push(Violation::new(format!("contents[{i}].ttl"), "ttl >= 0"));
        }
        if !(c.creation_time >= 0.0) {
            v.push(Violation::new(format!("contents[{i}].creation_time"), "creation_time >= 0"));
        }
    }
    if placement.h_sc0.len() != contents.len() || placement.h_mn0.len() != contents.len() {
        v.push(Violation::new(
            "placement",
            format!(
                "h_sc0 and h_mn0 must have one entry per content ({} contents, got {} and {})",
                contents.len(),
                placement.h_sc0.len(),
                placement.h_mn0.len()
            ),
        ));
        return v;
    }
    for (i, c) in contents.iter().enumerate() {
        let p = placement.get(i);
        if !(p.h_sc0 >= 0.0) || p.h_sc0 > cfg.n_sc as f64 {
            v.push(Violation::new(format!("placement.h_sc0[{i}]"), format!("box constraint 0 <= H_SC(0) <= N_SC = {}", cfg.n_sc)));
        }
        if !(p.h_mn0 >= 0.0) || p.h_mn0 > c.r0_total as f64 {
            v.push(Violation::new(format!("placement.h_mn0[{i}]"), format!("box constraint 0 <= H_MN(0) <= R(0) = {}", c.r0_total)));
        }
    }
    let used = placement.total_sc();
    if used > cfg.total_cache() as f64 + 1e-6 {
        v.push(Violation::new("placement.h_sc0", format!("capacity constraint sum H_SC(0) = {used} <= N_SC * Q = {}", cfg.total_cache())));
    }
    v
}

/// The on-disk scenario document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub scenario: ScenarioConfig,
    pub costs: CostParams,
    pub contents: Vec<ContentClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub placement: Option<Placement>,
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|source| Error::Json { context: "scenario file".into(), source })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json { context: path.display().to_string(), source })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn placement_or_zero(&self) -> Placement {
        self.placement.clone().unwrap_or_else(|| Placement::zeros(self.contents.len()))
    }

    pub fn violations(&self) -> Vec<Violation> {
        validate_scenario(&self.scenario, &self.contents, &self.placement_or_zero())
    }
}
