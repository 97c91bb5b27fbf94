//! Mean-field predictions for a single content.
//!
//! With `a = p_c·R₀`, `b = H₀` and `k = μ·(a + b)` the fluid limit of the
//! holder/requester dynamics
//!
//! ```text
//! dh/dt =  p_c · h · r · μ
//! dr/dt = −h · r · μ
//! ```
//!
//! has the closed form `h(t) = b(a+b)/(a·e + b)`, `r(t) = R₀(a+b)·e/(a·e + b)`
//! where `e = exp(−k t)`. Every expression below is written in terms of the
//! decaying exponential `e`, so nothing overflows for large `k t`.
//!
//! [`integrate_generalized`] handles the extended model with content drops
//! by MN holders and bulk requester arrivals/departures, which has no closed
//! form.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::model::{ContentClass, ContentPlacement, CostParams, EffectiveState, ScenarioConfig};
use crate::numeric::{Dopri5, StepTolerance};
use crate::{Error, Result};

/// Below this cooperation probability the `p_c → 0` limits are used.
pub const PC_LIMIT_THRESHOLD: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
struct Shape {
    a: f64,
    b: f64,
    /// exp(−k t)
    e: f64,
    /// 1 − exp(−k t)
    one_minus_e: f64,
}

fn shape(t: f64, es: EffectiveState, p_c: f64, mu: f64) -> Shape {
    let a = p_c * es.r0;
    let b = es.h0;
    let kt = mu * (a + b) * t;
    Shape { a, b, e: (-kt).exp(), one_minus_e: -(-kt).exp_m1() }
}

/// Expected holders and requesters at time `t`.
pub fn holders_requesters_at(t: f64, es: EffectiveState, p_c: f64, mu: f64) -> (f64, f64) {
    debug_assert!(t >= 0.0 && es.h0 >= 0.0 && es.r0 >= 0.0 && mu > 0.0);
    if es.h0 == 0.0 {
        return (0.0, es.r0);
    }
    let s = shape(t, es, p_c, mu);
    let denom = s.a * s.e + s.b;
    let h = s.b * (s.a + s.b) / denom;
    let r = es.r0 * (s.a + s.b) * s.e / denom;
    (h, r)
}

/// Probability that a requester present at `0⁺` is served by time `t`,
/// `1 − r(t)/R₀`.
pub fn delivery_probability(t: f64, es: EffectiveState, p_c: f64, mu: f64) -> f64 {
    if es.r0 == 0.0 {
        return 1.0;
    }
    if es.h0 == 0.0 {
        return 0.0;
    }
    let s = shape(t, es, p_c, mu);
    (s.b * s.one_minus_e / (s.a * s.e + s.b)).clamp(0.0, 1.0)
}

/// Expected delivery delay when unserved requesters are delivered at `ttl`,
/// i.e. `∫₀^ttl (1 − P{T_d ≤ t}) dt`.
pub fn expected_delay(ttl: f64, es: EffectiveState, p_c: f64, mu: f64) -> f64 {
    debug_assert!(ttl >= 0.0);
    if ttl == 0.0 {
        return 0.0;
    }
    if es.h0 == 0.0 && es.r0 > 0.0 {
        return ttl;
    }
    let s = shape(ttl, es, p_c, mu);
    let d = if p_c < PC_LIMIT_THRESHOLD || s.a == 0.0 {
        if s.b == 0.0 {
            ttl
        } else {
            -(-mu * s.b * ttl).exp_m1() / (mu * s.b)
        }
    } else {
        log_holder_growth(s) / (mu * s.a)
    };
    d.clamp(0.0, ttl)
}

/// `ln(h(t)/H₀) = ln(1 + a(1 − e)/(b + a e))`.
fn log_holder_growth(s: Shape) -> f64 {
    (s.a * s.one_minus_e / (s.b + s.a * s.e)).ln_1p()
}

/// Fraction of the requesters served before the deadline whose copy came
/// from a small cell.
///
/// SC holders never change, and at any instant a delivery comes from one of
/// the `h(t)` holders uniformly, so the SC-served count is
/// `μ H_SC(0) ∫ r dt = (H_SC(0)/p_c)·ln(h(TTL)/H₀)`.
pub fn sc_delivery_fraction(ttl: f64, h_sc0: f64, es: EffectiveState, p_c: f64, mu: f64) -> f64 {
    debug_assert!(h_sc0 <= es.h0 + 1e-9);
    if h_sc0 == 0.0 {
        return 0.0;
    }
    let limit = (h_sc0 / es.h0).clamp(0.0, 1.0);
    if p_c < PC_LIMIT_THRESHOLD || es.r0 == 0.0 || ttl <= 0.0 {
        return limit;
    }
    let s = shape(ttl, es, p_c, mu);
    let served = es.r0 * delivery_probability(ttl, es, p_c, mu);
    if served <= 0.0 {
        return limit;
    }
    let from_sc = h_sc0 / p_c * log_holder_growth(s);
    (from_sc / served).clamp(0.0, 1.0)
}

/// Expected cost of one content, split into phases.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub placement: f64,
    pub opportunistic: f64,
    pub delayed: f64,
}

impl CostBreakdown {
    pub fn total(&self) -> f64 {
        self.placement + self.opportunistic + self.delayed
    }
}

/// Phase costs of delivering `content` with initial placement `placement`.
pub fn content_cost_breakdown(
    content: &ContentClass,
    placement: ContentPlacement,
    cfg: &ScenarioConfig,
    costs: &CostParams,
) -> CostBreakdown {
    let es = EffectiveState::derive(cfg.p_c, content, placement);
    let mu = cfg.mu_lambda;
    let p = if content.ttl > 0.0 { delivery_probability(content.ttl, es, cfg.p_c, mu) } else { 0.0 };
    let served = es.r0 * p;
    let q = if served > 0.0 { sc_delivery_fraction(content.ttl, placement.h_sc0, es, cfg.p_c, mu) } else { 0.0 };
    CostBreakdown {
        placement: costs.c_bh * placement.h_sc0 + costs.c_bs * placement.h_mn0,
        opportunistic: (costs.c_sc * q + costs.c_d2d * (1.0 - q)) * served,
        delayed: costs.c_bs_ttl * es.r0 * (1.0 - p),
    }
}

pub fn content_cost(content: &ContentClass, placement: ContentPlacement, cfg: &ScenarioConfig, costs: &CostParams) -> f64 {
    content_cost_breakdown(content, placement, cfg, costs).total()
}

/// Cost of serving every requester from the macro BS at the deadline.
pub fn no_offload_cost(contents: &[ContentClass], costs: &CostParams) -> f64 {
    contents.iter().fold(0.0, |acc, c| acc + costs.c_bs_ttl * c.r0_total as f64)
}

/// `(C − C_off) / C`.
pub fn relative_cost_decrease(cost_without: f64, cost_with: f64) -> Result<f64> {
    if !(cost_without > 0.0) {
        return Err(Error::UndefinedBaseline);
    }
    Ok((cost_without - cost_with) / cost_without)
}

/// How the weight function enters the effective meeting rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectiveRateVariant {
    /// `E[λ·p(λ)]`, with `p` the rate-dependent cooperation probability.
    Selfishness,
    /// `E[λ·π(λ)] / E[π(λ)]`, with `π` a rate-aware placement preference.
    Placement,
}

/// Effective mean meeting rate over an empirical rate sample.
pub fn effective_meeting_rate<W: Fn(f64) -> f64>(rate_samples: &[f64], weight: W, variant: EffectiveRateVariant) -> Result<f64> {
    if rate_samples.is_empty() {
        return Err(Error::invalid("effective_meeting_rate needs at least one rate sample"));
    }
    let n = rate_samples.len() as f64;
    let weighted = rate_samples.iter().map(|&l| l * weight(l)).sum::<f64>() / n;
    match variant {
        EffectiveRateVariant::Selfishness => Ok(weighted),
        EffectiveRateVariant::Placement => {
            let mean_w = rate_samples.iter().map(|&l| weight(l)).sum::<f64>() / n;
            if mean_w == 0.0 {
                return Err(Error::DegeneratePlacementWeighting);
            }
            Ok(weighted / mean_w)
        }
    }
}

/// Holder and requester counts on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub h_values: Vec<f64>,
    pub r_values: Vec<f64>,
}

impl Trajectory {
    /// Closed-form trajectory of the base model.
    pub fn closed_form(es: EffectiveState, p_c: f64, mu: f64, t_grid: &[f64]) -> Self {
        let (h_values, r_values) = t_grid.iter().map(|&t| holders_requesters_at(t, es, p_c, mu)).unzip();
        Trajectory { times: t_grid.to_vec(), h_values, r_values }
    }

    /// CSV with header `t,h,r`, 17 significant digits per value.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,h,r")?;
        for i in 0..self.times.len() {
            writeln!(w, "{:.16e},{:.16e},{:.16e}", self.times[i], self.h_values[i], self.r_values[i])?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f)).map_err(|e| Error::io(path, e))
    }
}

/// Bulk requester arrivals (`delta_r > 0`) and departures (`delta_r < 0`).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ArrivalSchedule {
    pub events: Vec<(f64, i64)>,
}

impl ArrivalSchedule {
    pub fn new(events: Vec<(f64, i64)>) -> Result<Self> {
        if events.windows(2).any(|w| !(w[0].0 < w[1].0)) {
            return Err(Error::invalid("arrival times must be strictly ascending"));
        }
        if events.iter().any(|e| !(e.0 >= 0.0)) {
            return Err(Error::invalid("arrival times must be nonnegative"));
        }
        Ok(ArrivalSchedule { events })
    }

    /// Parse `tau:delta,tau:delta,...`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut events = Vec::new();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (t, d) = item.split_once(':').ok_or_else(|| Error::invalid(format!("arrival `{item}` is not tau:delta")))?;
            let t: f64 = t.trim().parse().map_err(|_| Error::invalid(format!("bad arrival time `{t}`")))?;
            let d: i64 = d.trim().parse().map_err(|_| Error::invalid(format!("bad arrival count `{d}`")))?;
            events.push((t, d));
        }
        ArrivalSchedule::new(events)
    }
}

/// Integrator tolerances, applied to the integrated state (see
/// [`integrate_generalized`]).
pub const GENERALIZED_TOLERANCE: StepTolerance = StepTolerance { atol: 1e-9, rtol: 1e-8 };

/// Numerically integrate the extended dynamics
///
/// ```text
/// dh/dt = p_c·h·r·μ − (h − H_SC(0))·λ_d
/// dr/dt = −h·r·μ + Σ_τ R_τ·δ(t − τ)
/// ```
///
/// on `t_grid`. Jumps are applied exactly at each `τ` and the integrator is
/// restarted there; grid values at `t = τ` are taken after the jump.
///
/// The state is integrated as `(h − H_SC(0), ln r)`: the MN-holder excess
/// stays exactly zero when nothing recruits, and the log keeps `r` relatively
/// accurate while it decays by many orders of magnitude. `r = 0` stays zero
/// until an arrival revives it.
pub fn integrate_generalized(
    es: EffectiveState,
    p_c: f64,
    mu: f64,
    lambda_d: f64,
    h_sc0: f64,
    arrivals: &ArrivalSchedule,
    t_grid: &[f64],
) -> Result<Trajectory> {
    integrate_generalized_with(es, p_c, mu, lambda_d, h_sc0, arrivals, t_grid, GENERALIZED_TOLERANCE)
}

#[allow(clippy::too_many_arguments)]
pub fn integrate_generalized_with(
    es: EffectiveState,
    p_c: f64,
    mu: f64,
    lambda_d: f64,
    h_sc0: f64,
    arrivals: &ArrivalSchedule,
    t_grid: &[f64],
    tol: StepTolerance,
) -> Result<Trajectory> {
    if t_grid.first() != Some(&0.0) || t_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::BadGrid);
    }
    if !(lambda_d >= 0.0) {
        return Err(Error::invalid("lambda_d must be nonnegative"));
    }
    if !(h_sc0 >= 0.0) || h_sc0 > es.h0 + 1e-12 {
        return Err(Error::invalid("h_sc0 must lie in [0, h0]"));
    }

    let mut h = es.h0;
    let mut r = es.r0;
    let mut stepper = Dopri5::new(tol);
    let mut pending = arrivals.events.iter().peekable();
    let mut out = Trajectory {
        times: Vec::with_capacity(t_grid.len()),
        h_values: Vec::with_capacity(t_grid.len()),
        r_values: Vec::with_capacity(t_grid.len()),
    };
    let mut t = 0.0;

    let apply_jumps_at = |now: f64, r: &mut f64, pending: &mut std::iter::Peekable<std::slice::Iter<'_, (f64, i64)>>| -> Result<bool> {
        let mut jumped = false;
        while let Some(&&(tau, delta)) = pending.peek() {
            if tau > now {
                break;
            }
            let next = *r + delta as f64;
            if next < 0.0 {
                return Err(Error::NegativeRequesters { tau });
            }
            *r = next;
            jumped = true;
            pending.next();
        }
        Ok(jumped)
    };

    for &target in t_grid {
        // Integrate up to `target`, stopping at every arrival on the way.
        loop {
            apply_jumps_at(t, &mut r, &mut pending)?;
            let stop = match pending.peek() {
                Some(&&(tau, _)) if tau < target => tau,
                _ => target,
            };
            if stop > t {
                let (nh, nr) = advance_log_state(&mut stepper, h, r, t, stop, p_c, mu, lambda_d, h_sc0);
                h = nh;
                r = nr;
                t = stop;
            }
            if stop >= target {
                break;
            }
        }
        apply_jumps_at(t, &mut r, &mut pending)?;
        out.times.push(target);
        out.h_values.push(h);
        out.r_values.push(r);
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn advance_log_state(stepper: &mut Dopri5, h: f64, r: f64, t0: f64, t1: f64, p_c: f64, mu: f64, lambda_d: f64, h_sc0: f64) -> (f64, f64) {
    match (h > 0.0, r > 0.0) {
        (false, _) => (h, r),
        (true, false) => {
            // dh/dt = −(h − H_SC)λ_d has an exact solution.
            let h1 = h_sc0 + (h - h_sc0) * (-lambda_d * (t1 - t0)).exp();
            (h1, r)
        }
        (true, true) => {
            let f = |_t: f64, y: &[f64; 2]| {
                let m = y[0].max(0.0);
                let h = h_sc0 + m;
                let r = y[1].exp();
                [p_c * h * r * mu - m * lambda_d, -h * mu]
            };
            let mut y = [h - h_sc0, r.ln()];
            stepper.advance(&f, t0, &mut y, t1);
            (h_sc0 + y[0].max(0.0), y[1].exp())
        }
    }
}

/// Evenly spaced grid `0, dt, …, t_max` with `n` points.
pub fn uniform_grid(t_max: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![0.0];
    }
    (0..n).map(|i| t_max * i as f64 / (n - 1) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn es(h0: f64, r0: f64) -> EffectiveState {
        EffectiveState::new(h0, r0)
    }

    /// Independent reference: fixed-step RK4 on the plain (h, r) system.
    fn rk4_reference(es: EffectiveState, p_c: f64, mu: f64, t: f64, steps: usize) -> (f64, f64) {
        let f = |h: f64, r: f64| (p_c * h * r * mu, -h * r * mu);
        let dt = t / steps as f64;
        let (mut h, mut r) = (es.h0, es.r0);
        for _ in 0..steps {
            let k1 = f(h, r);
            let k2 = f(h + 0.5 * dt * k1.0, r + 0.5 * dt * k1.1);
            let k3 = f(h + 0.5 * dt * k2.0, r + 0.5 * dt * k2.1);
            let k4 = f(h + dt * k3.0, r + dt * k3.1);
            h += dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
            r += dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        }
        (h, r)
    }

    #[test]
    fn initial_condition() {
        let s = es(3.0, 70.0);
        assert_eq!(holders_requesters_at(0.0, s, 0.4, 2.0), (3.0, 70.0));
        assert_eq!(delivery_probability(0.0, s, 0.4, 2.0), 0.0);
        assert_eq!(expected_delay(0.0, s, 0.4, 2.0), 0.0);
    }

    #[test]
    fn no_cooperation_decay() {
        let (h, r) = holders_requesters_at(1.0, es(2.0, 100.0), 0.0, 1.0);
        assert!((h - 2.0).abs() < 1e-15);
        assert!((r - 100.0 * (-2.0f64).exp()).abs() < 1e-12);
        assert!((r - 13.5335).abs() < 1e-4);
        let p = delivery_probability(1.0, es(2.0, 100.0), 0.0, 1.0);
        assert!((p - 0.864_664_716_763_387_3).abs() < 1e-15);
    }

    #[test]
    fn closed_form_matches_ode_reference() {
        let s = es(1.0, 100.0);
        let (h, r) = holders_requesters_at(0.1, s, 0.5, 1.0);
        let (hr, rr) = rk4_reference(s, 0.5, 1.0, 0.1, 200_000);
        assert!((h / hr - 1.0).abs() < 1e-8, "{h} vs {hr}");
        assert!((r / rr - 1.0).abs() < 1e-8, "{r} vs {rr}");
        let p = delivery_probability(0.05, s, 0.5, 1.0);
        let (_, r05) = rk4_reference(s, 0.5, 1.0, 0.05, 200_000);
        let pr = 1.0 - r05 / 100.0;
        assert!((p / pr - 1.0).abs() < 1e-8, "{p} vs {pr}");
    }

    #[test]
    fn zero_holders_never_deliver() {
        for t in [0.0, 1.0, 1e6] {
            assert_eq!(delivery_probability(t, es(0.0, 10.0), 0.5, 1.0), 0.0);
        }
        assert_eq!(expected_delay(4.0, es(0.0, 10.0), 0.5, 1.0), 4.0);
        assert_eq!(delivery_probability(3.0, es(5.0, 0.0), 0.5, 1.0), 1.0);
        assert_eq!(holders_requesters_at(2.0, es(0.0, 0.0), 0.5, 1.0), (0.0, 0.0));
    }

    #[test]
    fn overflow_safety() {
        let p = delivery_probability(1e9, es(10.0, 1000.0), 0.5, 1.0);
        assert!(p.is_finite());
        assert!((p - 1.0).abs() < 1e-12);
        let d = expected_delay(1e9, es(10.0, 1000.0), 0.5, 1.0);
        assert!(d.is_finite() && d > 0.0);
    }

    #[test]
    fn delay_limits() {
        let d = expected_delay(1e6, es(2.0, 100.0), 0.0, 1.0);
        assert!((d - 0.5).abs() < 1e-12);
        let below = expected_delay(0.3, es(2.0, 100.0), 1e-10, 1.0);
        let above = expected_delay(0.3, es(2.0, 100.0), 1e-8, 1.0);
        assert!((below - above).abs() < 1e-4);
    }

    #[test]
    fn delay_matches_survival_quadrature() {
        let s = es(1.0, 100.0);
        let d = expected_delay(0.1, s, 0.5, 1.0);
        let q = crate::numeric::integrate(|t| 1.0 - delivery_probability(t, s, 0.5, 1.0), 0.0, 0.1, 1e-14, 1e-12);
        assert!((d / q - 1.0).abs() < 1e-6, "{d} vs {q}");
    }

    #[test]
    fn sc_fraction_limits_and_continuity() {
        assert_eq!(sc_delivery_fraction(1.0, 0.0, es(2.0, 50.0), 0.5, 1.0), 0.0);
        assert_eq!(sc_delivery_fraction(1.0, 1.0, es(2.0, 50.0), 0.0, 1.0), 0.5);
        let near = sc_delivery_fraction(0.1, 1.0, es(2.0, 50.0), 1e-6, 1.0);
        assert!((near - 0.5).abs() <= 1e-4, "{near}");
        // Only SC holders and no recruits: every delivery is from an SC.
        let all = sc_delivery_fraction(5.0, 2.0, es(2.0, 50.0), 1e-8, 1.0);
        assert!((all - 1.0).abs() < 1e-6, "{all}");
        let q = sc_delivery_fraction(0.1, 1.0, es(2.0, 50.0), 0.5, 1.0);
        assert!(q > 0.0 && q < 0.5);
    }

    #[test]
    fn cost_reduces_without_cooperation() {
        let costs = CostParams::new(0.8, 1.0, 0.2, 0.1, 2.0);
        let cfg =
            ScenarioConfig { n_bs: 1, n_sc: 10, n_mn: 1000, cache_per_sc: 10, p_c: 0.0, lambda_d: 0.0, mu_lambda: 0.01, cv_lambda: 1.0 };
        for (r0, h, ttl) in [(100u64, 3.0, 20.0), (17, 0.5, 300.0), (900, 9.9, 1.5)] {
            let c = ContentClass::new("x", r0, ttl);
            let got = content_cost(&c, ContentPlacement::sc(h), &cfg, &costs);
            let r0 = r0 as f64;
            let want = costs.c_bh * h + costs.c_sc * r0 + (costs.c_bs_ttl - costs.c_sc) * r0 * (-cfg.mu_lambda * h * ttl).exp();
            assert!((got - want).abs() <= 1e-10 * want, "{got} vs {want}");
        }
        let c = ContentClass::new("x", 40, 0.0);
        let got = content_cost(&c, ContentPlacement::sc(3.0), &cfg, &costs);
        assert!((got - (0.8 * 3.0 + 2.0 * 40.0)).abs() < 1e-12);
    }

    #[test]
    fn rcd_values() {
        assert_eq!(relative_cost_decrease(100.0, 100.0).unwrap(), 0.0);
        assert!((relative_cost_decrease(100.0, 20.0).unwrap() - 0.8).abs() < 1e-15);
        assert!(relative_cost_decrease(100.0, 150.0).unwrap() < 0.0);
        assert!(matches!(relative_cost_decrease(0.0, 1.0), Err(Error::UndefinedBaseline)));
    }

    #[test]
    fn effective_rates() {
        let s = [0.5, 1.0, 1.5, 3.0];
        let mean = s.iter().sum::<f64>() / 4.0;
        for v in [EffectiveRateVariant::Selfishness, EffectiveRateVariant::Placement] {
            assert!((effective_meeting_rate(&s, |_| 1.0, v).unwrap() - mean).abs() < 1e-15);
        }
        let sym = [0.5, 1.5];
        let got = effective_meeting_rate(&sym, |_| 0.5, EffectiveRateVariant::Selfishness).unwrap();
        assert!((got - 0.5).abs() < 1e-15);
        assert!(matches!(effective_meeting_rate(&s, |_| 0.0, EffectiveRateVariant::Placement), Err(Error::DegeneratePlacementWeighting)));
    }

    #[test]
    fn generalized_reduces_to_base_model() {
        let s = es(2.0, 80.0);
        let grid = uniform_grid(0.2, 41);
        let tr = integrate_generalized(s, 0.5, 1.0, 0.0, 0.0, &ArrivalSchedule::default(), &grid).unwrap();
        for i in 0..grid.len() {
            let (h, r) = holders_requesters_at(grid[i], s, 0.5, 1.0);
            assert!((tr.h_values[i] / h - 1.0).abs() < 1e-6);
            assert!((tr.r_values[i] / r - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn sc_holders_never_drop() {
        let s = es(3.0, 50.0);
        let grid = uniform_grid(10.0, 11);
        let tr = integrate_generalized(s, 0.0, 1.0, 5.0, 3.0, &ArrivalSchedule::default(), &grid).unwrap();
        assert!(tr.h_values.iter().all(|&h| (h - 3.0).abs() < 1e-9), "{:?}", tr.h_values);
    }

    #[test]
    fn departures_below_zero_are_rejected() {
        let sched = ArrivalSchedule::new(vec![(0.5, -1000)]).unwrap();
        let err = integrate_generalized(es(1.0, 10.0), 0.5, 1.0, 0.0, 0.0, &sched, &uniform_grid(1.0, 5)).unwrap_err();
        assert!(matches!(err, Error::NegativeRequesters { tau } if tau == 0.5));
        let err = integrate_generalized(es(1.0, 10.0), 0.5, 1.0, 0.0, 0.0, &ArrivalSchedule::default(), &[0.0, 2.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::BadGrid));
    }

    #[test]
    fn arrival_jump_is_right_continuous() {
        let sched = ArrivalSchedule::new(vec![(1.0, 50)]).unwrap();
        let tr = integrate_generalized(es(0.0, 10.0), 0.5, 1.0, 0.0, 0.0, &sched, &[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(tr.r_values, vec![10.0, 60.0, 60.0]);
        assert!(ArrivalSchedule::parse("1:5, 0.5:3").is_err());
        assert_eq!(ArrivalSchedule::parse("0.5:3,1:-2").unwrap().events, vec![(0.5, 3), (1.0, -2)]);
    }

    #[test]
    fn trajectory_csv_format() {
        let tr = Trajectory::closed_form(es(1.0, 2.0), 0.5, 1.0, &[0.0, 0.25]);
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,h,r"));
        let row: Vec<f64> = lines.next().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(row, vec![0.0, 1.0, 2.0]);
        let row: Vec<f64> = lines.next().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(row[1], tr.h_values[1]);
        assert_eq!(row[2], tr.r_values[1]);
    }

    #[test]
    fn drops_with_arrival_self_converge() {
        let s = es(4.0, 60.0);
        let sched = ArrivalSchedule::new(vec![(1.0, 50)]).unwrap();
        let grid = uniform_grid(3.0, 31);
        let coarse = integrate_generalized(s, 0.5, 0.05, 0.1, 1.0, &sched, &grid).unwrap();
        let fine_tol = StepTolerance { atol: 1e-13, rtol: 1e-12 };
        let fine = integrate_generalized_with(s, 0.5, 0.05, 0.1, 1.0, &sched, &grid, fine_tol).unwrap();
        for i in 0..grid.len() {
            assert!((coarse.h_values[i] / fine.h_values[i] - 1.0).abs() < 1e-6);
            assert!((coarse.r_values[i] / fine.r_values[i] - 1.0).abs() < 1e-6);
        }
        // The arrival lifts r at t = 1 on the grid.
        assert!(coarse.r_values[10] > coarse.r_values[9]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn state() -> impl Strategy<Value = (f64, f64, f64, f64)> {
            (0.1f64..20.0, 0.0f64..500.0, 0.0f64..=1.0, 0.001f64..3.0)
        }

        proptest! {
            #[test]
            fn conservation((h0, r0, p_c, mu) in state(), t in 0.0f64..5.0) {
                let (h, r) = holders_requesters_at(t, es(h0, r0), p_c, mu);
                let scale = 1.0f64.max(h0 + r0);
                prop_assert!((h - h0 - p_c * (r0 - r)).abs() <= 1e-12 * scale);
            }

            #[test]
            fn delivery_monotone((h0, r0, p_c, mu) in state(), t in 0.0f64..5.0, bump in 1.0f64..2.0) {
                let s = es(h0, r0);
                let p = delivery_probability(t, s, p_c, mu);
                prop_assert!((0.0..=1.0).contains(&p));
                prop_assert!(delivery_probability(t * bump, s, p_c, mu) >= p - 1e-14);
                prop_assert!(delivery_probability(t, es(h0 * bump, r0), p_c, mu) >= p - 1e-14);
                prop_assert!(delivery_probability(t, s, (p_c * bump).min(1.0), mu) >= p - 1e-14);
                prop_assert!(delivery_probability(t, s, p_c, mu * bump) >= p - 1e-14);
            }

            #[test]
            fn delay_is_integrated_survival((h0, r0, p_c, mu) in state(), ttl in 0.01f64..5.0) {
                let s = es(h0, r0);
                let d = expected_delay(ttl, s, p_c, mu);
                prop_assert!(d >= 0.0 && d <= ttl);
                let q = crate::numeric::integrate(|t| 1.0 - delivery_probability(t, s, p_c, mu), 0.0, ttl, 1e-15, 1e-12);
                prop_assert!((d - q).abs() <= 1e-6 * q.max(1e-12), "{} vs {}", d, q);
            }
        }
    }
}
