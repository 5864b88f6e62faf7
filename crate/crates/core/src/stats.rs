//! Reliability, certification, and synchronization metrics over trials.

use serde::Serialize;

use crate::error::{domain, Result};
use crate::simengine::TrialResult;

/// Two-sided 95% normal quantile.
pub const WILSON_Z: f64 = 1.96;
pub const CERTIFICATION_THRESHOLD: f64 = 0.95;
pub const BURST_WINDOW: f64 = 5.0;
pub const DEFAULT_QUANTILE: f64 = 0.9;

/// Lower endpoint of the two-sided 95% Wilson score interval.
pub fn wilson_lower_bound(successes: u64, n: u64) -> Result<f64> {
    if n == 0 {
        return Err(domain("Wilson bound needs at least one trial"));
    }
    if successes > n {
        return Err(domain(format!("{successes} successes out of {n} trials")));
    }
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    let centre = p + z2 / (2.0 * n);
    let spread = WILSON_Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    Ok(((centre - spread) / (1.0 + z2 / n)).clamp(0.0, 1.0))
}

/// Number of non-overlapping windows covering `[0, duration]`.
fn window_count(duration: f64) -> usize {
    ((duration / BURST_WINDOW).ceil() as usize).max(1)
}

fn window_of(t: f64, count: usize) -> usize {
    ((t / BURST_WINDOW).floor().max(0.0) as usize).min(count - 1)
}

/// Flags the top-decile windows by request count. Ties rank the earlier
/// window first.
pub fn top_decile_windows(requests: &[f64], duration: f64) -> Vec<bool> {
    let count = window_count(duration);
    let mut per_window = vec![0usize; count];
    for &t in requests {
        per_window[window_of(t, count)] += 1;
    }
    let mut order: Vec<usize> = (0..count).collect();
    order.sort_by(|&a, &b| per_window[b].cmp(&per_window[a]).then(a.cmp(&b)));
    let top = ((0.1 * count as f64).ceil() as usize).max(1);
    let mut flags = vec![false; count];
    for &w in &order[..top] {
        flags[w] = true;
    }
    flags
}

/// `(exhaustions inside top-decile windows, total exhaustions)` for one trial.
pub fn burst_counts(exhaustions: &[f64], requests: &[f64], duration: f64) -> (usize, usize) {
    if exhaustions.is_empty() {
        return (0, 0);
    }
    let flags = top_decile_windows(requests, duration);
    let inside = exhaustions
        .iter()
        .filter(|&&t| flags[window_of(t, flags.len())])
        .count();
    (inside, exhaustions.len())
}

/// Fraction of exhaustion instants that fall in top-decile demand windows;
/// `None` when there were no exhaustions.
pub fn burst_concentration(
    exhaustions: &[f64],
    requests: &[f64],
    mission_duration: f64,
) -> Option<f64> {
    let (inside, total) = burst_counts(exhaustions, requests, mission_duration);
    (total > 0).then(|| inside as f64 / total as f64)
}

/// Nearest-rank quantile: the `ceil(q n)`-th smallest value.
pub fn nearest_rank<T: Copy + Ord>(values: &mut [T], q: f64) -> Option<T> {
    if values.is_empty() {
        return None;
    }
    values.sort_unstable();
    let rank = ((q * values.len() as f64).ceil() as usize).clamp(1, values.len());
    Some(values[rank - 1])
}

/// Most requests inside any `BURST_WINDOW`-long window, with window starts
/// stepped by one timestep across `[0, duration]`.
pub fn max_window_demand(requests: &[f64], duration: f64, timestep: f64) -> usize {
    let mut sorted = requests.to_vec();
    sorted.sort_by(f64::total_cmp);
    let steps = (duration / timestep).round() as usize;
    let (mut lo, mut hi, mut best) = (0usize, 0usize, 0usize);
    for s in 0..=steps {
        let start = s as f64 * timestep;
        let end = start + BURST_WINDOW;
        while lo < sorted.len() && sorted[lo] < start - 1e-9 {
            lo += 1;
        }
        hi = hi.max(lo);
        while hi < sorted.len() && sorted[hi] < end - 1e-9 {
            hi += 1;
        }
        best = best.max(hi - lo);
    }
    best
}

/// `(q-quantile of pooled per-step recovery occupancy, q-quantile over
/// trials of max 5-minute request count)`.
pub fn percentile_metrics(trials: &[TrialResult], q: f64) -> Result<(f64, f64)> {
    if trials.is_empty() {
        return Err(domain("percentile metrics need at least one trial"));
    }
    let mut pooled: Vec<u32> = trials
        .iter()
        .flat_map(|t| t.concurrency_trace.iter().copied())
        .collect();
    let mut demand: Vec<usize> = trials
        .iter()
        .map(|t| max_window_demand(&t.request_times, t.duration, t.timestep))
        .collect();
    let conc = nearest_rank(&mut pooled, q).unwrap_or(0);
    let dem = nearest_rank(&mut demand, q).expect("non-empty");
    Ok((f64::from(conc), dem as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateStats {
    pub n_trials: u64,
    pub n_success: u64,
    pub success_rate: f64,
    pub wilson_lb: f64,
    /// Mean served replacements over successful trials; `None` without any.
    pub mean_handovers: Option<f64>,
    /// Same mean over failed trials.
    pub mean_handovers_failed: Option<f64>,
    pub exhaustion_events: u64,
    pub burst_concentration: Option<f64>,
    pub p90_concurrent_recovery: f64,
    pub p90_window_demand: f64,
}

/// Per-trial quantities from which [`AggregateStats`] can be rebuilt
/// exactly. This is also the content of a per-trial CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSummary {
    pub success: bool,
    pub handovers: u32,
    pub exhaustions: usize,
    pub exhaustions_in_top_decile: usize,
    pub max_window_demand: usize,
    /// `(occupancy, steps)` pairs, ascending by occupancy.
    pub concurrency_histogram: Vec<(u32, u64)>,
}

impl TrialSummary {
    pub fn from_result(r: &TrialResult) -> Self {
        let times: Vec<f64> = r.exhaustion_events.iter().map(|e| e.time).collect();
        let (inside, total) = burst_counts(&times, &r.request_times, r.duration);
        let mut hist = std::collections::BTreeMap::new();
        for &c in &r.concurrency_trace {
            *hist.entry(c).or_insert(0u64) += 1;
        }
        Self {
            success: r.success,
            handovers: r.handover_count,
            exhaustions: total,
            exhaustions_in_top_decile: inside,
            max_window_demand: max_window_demand(&r.request_times, r.duration, r.timestep),
            concurrency_histogram: hist.into_iter().collect(),
        }
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Pools per-trial summaries into one row. Burst concentration sums
/// numerator and denominator over all trials.
pub fn aggregate_summaries(rows: &[TrialSummary], q: f64) -> Result<AggregateStats> {
    if rows.is_empty() {
        return Err(domain("cannot aggregate zero trials"));
    }
    let n = rows.len() as u64;
    let n_success = rows.iter().filter(|r| r.success).count() as u64;
    let exhaustions: usize = rows.iter().map(|r| r.exhaustions).sum();
    let inside: usize = rows.iter().map(|r| r.exhaustions_in_top_decile).sum();

    let mut hist = std::collections::BTreeMap::new();
    for r in rows {
        for &(c, steps) in &r.concurrency_histogram {
            *hist.entry(c).or_insert(0u64) += steps;
        }
    }
    let total_steps: u64 = hist.values().sum();
    let p90_conc = if total_steps == 0 {
        0
    } else {
        let rank = ((q * total_steps as f64).ceil() as u64).clamp(1, total_steps);
        let mut seen = 0;
        let mut value = 0;
        for (&c, &steps) in &hist {
            seen += steps;
            if seen >= rank {
                value = c;
                break;
            }
        }
        value
    };
    let mut demand: Vec<usize> = rows.iter().map(|r| r.max_window_demand).collect();

    Ok(AggregateStats {
        n_trials: n,
        n_success,
        success_rate: n_success as f64 / n as f64,
        wilson_lb: wilson_lower_bound(n_success, n)?,
        mean_handovers: mean(
            rows.iter()
                .filter(|r| r.success)
                .map(|r| f64::from(r.handovers)),
        ),
        mean_handovers_failed: mean(
            rows.iter()
                .filter(|r| !r.success)
                .map(|r| f64::from(r.handovers)),
        ),
        exhaustion_events: exhaustions as u64,
        burst_concentration: (exhaustions > 0).then(|| inside as f64 / exhaustions as f64),
        p90_concurrent_recovery: f64::from(p90_conc),
        p90_window_demand: nearest_rank(&mut demand, q).expect("non-empty") as f64,
    })
}

pub fn aggregate(trials: &[TrialResult]) -> Result<AggregateStats> {
    let rows: Vec<TrialSummary> = trials.iter().map(TrialSummary::from_result).collect();
    aggregate_summaries(&rows, DEFAULT_QUANTILE)
}

/// Certified when the Wilson lower bound reaches the threshold (inclusive).
pub fn certify(stats: &AggregateStats, threshold: f64) -> bool {
    stats.wilson_lb >= threshold
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn trial(
        requests: Vec<f64>,
        exhaustions: Vec<f64>,
        duration: f64,
        trace: Vec<u32>,
    ) -> TrialResult {
        TrialResult {
            success: exhaustions.is_empty(),
            exhaustion_events: exhaustions
                .into_iter()
                .map(|time| crate::simengine::ExhaustionEvent { time, uav_id: 0 })
                .collect(),
            handover_count: requests.len() as u32,
            handover_times: requests.clone(),
            sites_scanned: 1,
            concurrency_trace: trace,
            request_times: requests,
            duration,
            timestep: 0.5,
            min_battery: 1.0,
            max_scans_per_site: 1,
            events: None,
        }
    }

    fn stats_with_lb(wilson_lb: f64) -> AggregateStats {
        AggregateStats {
            n_trials: 1000,
            n_success: 1000,
            success_rate: 1.0,
            wilson_lb,
            mean_handovers: None,
            mean_handovers_failed: None,
            exhaustion_events: 0,
            burst_concentration: None,
            p90_concurrent_recovery: 0.0,
            p90_window_demand: 0.0,
        }
    }

    #[test]
    fn wilson_reference_values() {
        let cases = [(1000, 0.996), (699, 0.670), (136, 0.116), (2, 0.001)];
        for (s, expected) in cases {
            let lb = wilson_lower_bound(s, 1000).unwrap();
            assert!((lb - expected).abs() <= 0.0005, "{s}: {lb}");
        }
        assert_eq!(wilson_lower_bound(0, 1000).unwrap(), 0.0);
        assert!(wilson_lower_bound(5, 4).is_err());
        assert!(wilson_lower_bound(0, 0).is_err());
    }

    #[test]
    fn certification_threshold_is_inclusive() {
        assert!(certify(&stats_with_lb(0.996), CERTIFICATION_THRESHOLD));
        assert!(!certify(&stats_with_lb(0.670), CERTIFICATION_THRESHOLD));
        assert!(certify(&stats_with_lb(0.95), CERTIFICATION_THRESHOLD));
    }

    #[test]
    fn burst_absent_without_exhaustions() {
        assert_eq!(burst_concentration(&[], &[1.0, 2.0], 100.0), None);
    }

    #[test]
    fn burst_all_in_busiest_window() {
        let requests = [1.0, 2.0, 3.0, 12.0, 51.0, 52.0, 52.5, 53.0];
        assert_eq!(
            burst_concentration(&[52.0, 53.0], &requests, 60.0),
            Some(1.0)
        );
    }

    #[test]
    fn burst_hand_counted() {
        // 20 windows over 100 minutes; top decile is the two busiest.
        // Window 7 holds 6 requests, window 15 holds 5, window 3 holds 4 and
        // loses the cut; windows 0 and 19 hold 1 each.
        let mut requests = vec![0.5, 97.0];
        requests.extend([35.0, 35.5, 36.0, 37.0, 38.0, 39.5]);
        requests.extend([75.0, 76.0, 77.0, 78.0, 79.0]);
        requests.extend([15.0, 16.0, 17.0, 18.0]);
        let flags = top_decile_windows(&requests, 100.0);
        assert_eq!(flags.len(), 20);
        assert_eq!(flags.iter().filter(|&&f| f).count(), 2);
        assert!(flags[7] && flags[15]);
        // Hand count: 35.5, 38.0, 77.0, 79.0 inside; 0.5, 15.0, 16.0, 18.0,
        // 97.0, 60.0 outside.
        let exhaustions = [35.5, 38.0, 77.0, 79.0, 0.5, 15.0, 16.0, 18.0, 97.0, 60.0];
        assert_eq!(
            burst_concentration(&exhaustions, &requests, 100.0),
            Some(0.4)
        );
    }

    #[test]
    fn burst_ties_favour_earlier_window() {
        // Ten windows, one slot in the top decile, two windows tied at 2.
        let requests = [6.0, 7.0, 31.0, 32.0];
        let flags = top_decile_windows(&requests, 50.0);
        assert!(flags[1] && !flags[6]);
    }

    #[test]
    fn window_demand_examples() {
        assert_eq!(max_window_demand(&[0.0, 1.0, 2.0, 3.0, 4.0], 10.0, 0.5), 5);
        assert_eq!(max_window_demand(&[0.0, 1.0, 2.0, 3.0, 5.0], 10.0, 0.5), 4);
        let m = 7;
        let mut waves = vec![60.0; m];
        waves.extend(vec![120.0; m]);
        // Exhaustive check over every window start on the 0.5 grid.
        let brute = (0..=360)
            .map(|s| {
                let start = s as f64 * 0.5;
                waves
                    .iter()
                    .filter(|&&t| t >= start && t < start + 5.0)
                    .count()
            })
            .max()
            .unwrap();
        assert_eq!(brute, m);
        assert_eq!(max_window_demand(&waves, 180.0, 0.5), m);
    }

    #[test]
    fn percentile_examples() {
        let c = 4;
        let trials: Vec<TrialResult> = (0..5)
            .map(|_| trial(vec![10.0], vec![], 20.0, vec![c; 40]))
            .collect();
        let (conc, demand) = percentile_metrics(&trials, 0.9).unwrap();
        assert_eq!(conc, f64::from(c));
        assert_eq!(demand, 1.0);
        let single = [trial(
            vec![0.0, 1.0, 2.0, 3.0, 4.0],
            vec![],
            10.0,
            vec![0; 20],
        )];
        assert_eq!(percentile_metrics(&single, 0.9).unwrap().1, 5.0);
        assert!(percentile_metrics(&[], 0.9).is_err());
    }

    #[test]
    fn aggregate_rebuilds_from_summaries() {
        let trials = vec![
            trial(vec![5.0, 6.0, 7.0], vec![], 30.0, vec![0, 1, 2, 3, 3, 2]),
            trial(vec![5.0, 6.0, 25.0], vec![25.0], 30.0, vec![1, 1, 4]),
            trial(vec![1.0], vec![], 10.0, vec![5, 0]),
        ];
        let direct = aggregate(&trials).unwrap();
        assert_eq!(direct.n_success, 2);
        assert_eq!(direct.mean_handovers, Some(2.0));
        assert_eq!(direct.mean_handovers_failed, Some(3.0));
        assert_eq!(direct.exhaustion_events, 1);
        let (conc, demand) = percentile_metrics(&trials, 0.9).unwrap();
        assert_eq!(direct.p90_concurrent_recovery, conc);
        assert_eq!(direct.p90_window_demand, demand);
    }

    proptest! {
        #[test]
        fn wilson_below_point_estimate(n in 1u64..5000, frac in 0.0f64..=1.0) {
            let s = ((n as f64 * frac).round() as u64).clamp(1, n);
            let lb = wilson_lower_bound(s, n).unwrap();
            prop_assert!(lb >= 0.0);
            prop_assert!(lb < s as f64 / n as f64);
        }

        #[test]
        fn wilson_monotone_in_successes(n in 1u64..3000, s in 0u64..3000) {
            let s = s.min(n - 1);
            prop_assert!(wilson_lower_bound(s, n).unwrap() <= wilson_lower_bound(s + 1, n).unwrap());
        }

        #[test]
        fn wilson_converges(frac in 0.05f64..0.95) {
            let n = 100_000_000u64;
            let s = (n as f64 * frac) as u64;
            prop_assert!((wilson_lower_bound(s, n).unwrap() - s as f64 / n as f64).abs() < 1e-3);
        }

        #[test]
        fn burst_in_unit_interval_and_shift_invariant(
            req in proptest::collection::vec(0u32..400, 1..60),
            pick in proptest::collection::vec(any::<proptest::sample::Index>(), 1..10),
            shift in 1u32..6,
        ) {
            let requests: Vec<f64> = req.iter().map(|&r| f64::from(r) * 0.5).collect();
            let exhaustions: Vec<f64> = pick.iter().map(|i| requests[i.index(requests.len())]).collect();
            let duration = 200.0;
            let c = burst_concentration(&exhaustions, &requests, duration).unwrap();
            prop_assert!((0.0..=1.0).contains(&c));

            let dt = 5.0 * f64::from(shift);
            let moved = |v: &[f64]| v.iter().map(|t| t + dt).collect::<Vec<_>>();
            let shifted_duration = duration + dt;
            let same_top = (0.1 * (duration / 5.0)).ceil() == (0.1 * (shifted_duration / 5.0)).ceil();
            if same_top {
                let c2 = burst_concentration(&moved(&exhaustions), &moved(&requests), shifted_duration).unwrap();
                prop_assert_eq!(c, c2);
            }
        }

        #[test]
        fn nearest_rank_matches_sort_oracle(values in proptest::collection::vec(0u32..1000, 1..200), q in 0.01f64..=1.0) {
            let mut sorted = values.clone();
            sorted.sort();
            let mut rank = 0;
            // Smallest rank r with r / n >= q.
            while (rank as f64) < q * sorted.len() as f64 {
                rank += 1;
            }
            let expected = sorted[rank.max(1) - 1];
            let mut v = values.clone();
            prop_assert_eq!(nearest_rank(&mut v, q), Some(expected));
        }

        #[test]
        fn pooled_histogram_quantile_matches_flat(traces in proptest::collection::vec(proptest::collection::vec(0u32..30, 1..50), 1..10)) {
            let trials: Vec<TrialResult> = traces.iter().map(|t| trial(vec![1.0], vec![], 10.0, t.clone())).collect();
            let agg = aggregate(&trials).unwrap();
            let (conc, _) = percentile_metrics(&trials, 0.9).unwrap();
            prop_assert_eq!(agg.p90_concurrent_recovery, conc);
        }
    }
}
