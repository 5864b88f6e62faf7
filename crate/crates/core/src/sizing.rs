//! Spare-pool sizing rules and the analytic models behind them.
//!
//! Four rules are supported: one spare per active vehicle, one recovery
//! pipeline per position, inverse Erlang-B at a per-request blocking target,
//! and the buffered rule `m * (ceil(r) + 1)`. The two occupancy oracles replay
//! perfectly aligned and perfectly staggered replacement demand
//! deterministically, so the worst-case claims can be checked as code.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

pub const DEFAULT_EPSILON: f64 = 0.01;

/// Upper bound on the Erlang-B search. Offered loads in practice are far
/// below this.
const ERLANG_SEARCH_LIMIT: u32 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SizingRule {
    Naive,
    DutyCycle,
    ErlangB,
    Proposed,
}

impl SizingRule {
    pub const ALL: [SizingRule; 4] = [
        SizingRule::Naive,
        SizingRule::DutyCycle,
        SizingRule::ErlangB,
        SizingRule::Proposed,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SizingRule::Naive => "naive",
            SizingRule::DutyCycle => "duty-cycle",
            SizingRule::ErlangB => "erlang-b",
            SizingRule::Proposed => "proposed",
        }
    }
}

impl fmt::Display for SizingRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SizingRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        match norm.as_str() {
            "naive" => Ok(SizingRule::Naive),
            "duty-cycle" | "dutycycle" => Ok(SizingRule::DutyCycle),
            "erlang-b" | "erlangb" | "erlang" => Ok(SizingRule::ErlangB),
            "proposed" | "buffered" => Ok(SizingRule::Proposed),
            _ => Err(domain(format!(
                "unknown sizing rule `{s}` (expected naive, duty-cycle, erlang-b, proposed)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FleetPlan {
    pub rule: SizingRule,
    pub m: u32,
    pub r: f64,
    /// Spare count.
    pub k: u32,
}

/// Erlang-B blocking probability for `k` servers at offered load `a`, via
/// the recursion `B(j) = a B(j-1) / (j + a B(j-1))`.
pub fn erlang_b_blocking(k: u32, a: f64) -> Result<f64> {
    if !(a >= 0.0) || !a.is_finite() {
        return Err(domain(format!(
            "offered load must be a finite non-negative number, got {a}"
        )));
    }
    let mut b = 1.0;
    for j in 1..=k {
        let ab = a * b;
        b = ab / (f64::from(j) + ab);
    }
    Ok(b)
}

/// Smallest `k` with `B(k, a) <= epsilon`, searched upward from zero.
pub fn erlang_b_servers(a: f64, epsilon: f64) -> Result<u32> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(domain(format!(
            "blocking target must lie in (0, 1), got {epsilon}"
        )));
    }
    erlang_b_blocking(0, a)?;
    let mut b = 1.0;
    let mut k = 0u32;
    while b > epsilon {
        k += 1;
        if k > ERLANG_SEARCH_LIMIT {
            return Err(domain(format!(
                "offered load {a} needs more than {ERLANG_SEARCH_LIMIT} servers"
            )));
        }
        let ab = a * b;
        b = ab / (f64::from(k) + ab);
    }
    Ok(k)
}

pub fn ceil_ratio(r: f64) -> u32 {
    r.ceil() as u32
}

pub fn size_fleet(rule: SizingRule, m: u32, r: f64, epsilon: f64) -> Result<FleetPlan> {
    if m == 0 {
        return Err(domain("active count m must be at least 1"));
    }
    if !(r > 0.0) || !r.is_finite() {
        return Err(domain(format!("recovery ratio must be positive, got {r}")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(domain(format!(
            "blocking target must lie in (0, 1), got {epsilon}"
        )));
    }
    let c = ceil_ratio(r);
    let k = match rule {
        SizingRule::Naive => m,
        SizingRule::DutyCycle => m * c,
        SizingRule::ErlangB => erlang_b_servers(f64::from(m) * r, epsilon)?,
        SizingRule::Proposed => m * (c + 1),
    };
    Ok(FleetPlan { rule, m, r, k })
}

/// Mission success under independent per-request blocking, `(1 - eps)^h`.
pub fn compounding_reference(epsilon: f64, h: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(domain(format!("epsilon must lie in [0, 1), got {epsilon}")));
    }
    if !(h >= 0.0) {
        return Err(domain(format!(
            "handover count must be non-negative, got {h}"
        )));
    }
    Ok((1.0 - epsilon).powf(h))
}

/// Occupancy of the recovery pipeline at each replacement instant. Times are
/// in units of the active sortie length.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OccupancyTrace {
    pub times: Vec<f64>,
    /// Vehicles in recovery, including the requesters arriving at this instant.
    pub in_recovery: Vec<u32>,
    /// `k - in_recovery`; negative when the pool is over-committed.
    pub flight_ready: Vec<i64>,
    /// Requests arriving at each instant.
    pub requests: Vec<u32>,
    pub exhausted_at: Option<f64>,
    /// Index (into `times`) of the first exhaustion.
    pub exhausted_index: Option<usize>,
}

impl OccupancyTrace {
    fn new() -> Self {
        Self {
            times: Vec::new(),
            in_recovery: Vec::new(),
            flight_ready: Vec::new(),
            requests: Vec::new(),
            exhausted_at: None,
            exhausted_index: None,
        }
    }

    pub fn max_in_recovery(&self) -> u32 {
        self.in_recovery.iter().copied().max().unwrap_or(0)
    }

    /// 1-based wave number of the first exhaustion.
    pub fn exhausted_wave(&self) -> Option<usize> {
        self.exhausted_index.map(|i| i + 1)
    }

    /// Applies one request instant: completions first, then the arriving
    /// requesters join recovery and must be covered by the remaining pool.
    fn record(&mut self, t: f64, arriving: u32, k: u32, recovering: &mut Vec<(f64, u32)>, r: f64) {
        const TIE: f64 = 1e-9;
        recovering.retain(|&(t0, _)| t0 + r > t + TIE);
        recovering.push((t, arriving));
        let c: u32 = recovering.iter().map(|&(_, n)| n).sum();
        let f = i64::from(k) - i64::from(c);
        if f < i64::from(arriving) && self.exhausted_at.is_none() {
            self.exhausted_at = Some(t);
            self.exhausted_index = Some(self.times.len());
        }
        self.times.push(t);
        self.in_recovery.push(c);
        self.flight_ready.push(f);
        self.requests.push(arriving);
    }
}

fn check_oracle_args(m: u32, r: f64, waves: u32) -> Result<()> {
    if m == 0 {
        return Err(domain("m must be at least 1"));
    }
    if !(r > 0.0) || !r.is_finite() {
        return Err(domain(format!("recovery ratio must be positive, got {r}")));
    }
    if waves < ceil_ratio(r) + 2 {
        return Err(domain(format!(
            "need at least ceil(r) + 2 = {} waves, got {waves}",
            ceil_ratio(r) + 2
        )));
    }
    Ok(())
}

/// Fully phase-aligned demand: every wave `j = 1..=waves` brings `m`
/// simultaneous requests; each cohort recovers for `r` sortie lengths.
pub fn worst_case_oracle(m: u32, r: f64, k: u32, waves: u32) -> Result<OccupancyTrace> {
    check_oracle_args(m, r, waves)?;
    let mut trace = OccupancyTrace::new();
    let mut recovering = Vec::new();
    for j in 1..=waves {
        trace.record(f64::from(j), m, k, &mut recovering, r);
    }
    Ok(trace)
}

/// Perfectly staggered demand: position `p` requests at `j + (p mod c) / c`
/// with `c = ceil(r)`.
pub fn staggered_oracle(m: u32, r: f64, k: u32, waves: u32) -> Result<OccupancyTrace> {
    check_oracle_args(m, r, waves)?;
    let c = ceil_ratio(r);
    let mut per_phase = vec![0u32; c as usize];
    for p in 0..m {
        per_phase[(p % c) as usize] += 1;
    }
    let mut trace = OccupancyTrace::new();
    let mut recovering = Vec::new();
    for j in 1..=waves {
        for (phase, &count) in per_phase.iter().enumerate() {
            if count == 0 {
                continue;
            }
            let t = f64::from(j) + phase as f64 / f64::from(c);
            trace.record(t, count, k, &mut recovering, r);
        }
    }
    Ok(trace)
}
