//! Fixed-timestep mission simulator.
//!
//! One trial tracks `m` work positions ("slots") and `m + k` vehicles. A slot
//! owns a route; whichever vehicle currently holds the slot's [`Task`] flies
//! it. When the holder's battery reaches the return-to-base estimate plus the
//! reserve it requests a replacement: the lowest-id ready spare takes over the
//! task (flying out from base first) while the requester flies home and
//! recharges. With no ready spare the request is an exhaustion event, the
//! requester is retired after landing, and the slot's remaining sites are
//! abandoned.

use std::fmt;

use serde::Serialize;

use crate::error::{config, Error, Result};
use crate::geometry::{leg_id, leg_time, LegKind, Point, Route, SiteLayout, TravelNoise};
use crate::scenario::{check_feasibility, DerivedMission, Feasibility, ScenarioConfig};
use crate::sizing::FleetPlan;

const EPS: f64 = 1e-9;

/// Hard stop for runaway trials, in timesteps.
const MAX_STEPS: u64 = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Active,
    Returning,
    Charging,
    Ready,
    TransitToHandover,
    Removed,
}

impl Role {
    pub fn in_recovery(self) -> bool {
        matches!(self, Role::Returning | Role::Charging)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Flight {
    pub from: Point,
    pub to: Point,
    pub total: f64,
    pub remaining: f64,
}

impl Flight {
    fn new(from: Point, to: Point, total: f64) -> Self {
        Self {
            from,
            to,
            total,
            remaining: total,
        }
    }

    fn position(&self) -> Point {
        if self.total <= 0.0 {
            self.to
        } else {
            self.from.lerp(self.to, 1.0 - self.remaining / self.total)
        }
    }

    /// Flies up to `dt`; returns the time actually used.
    fn advance(&mut self, dt: f64) -> f64 {
        let used = self.remaining.min(dt);
        self.remaining -= used;
        if self.remaining <= EPS {
            self.remaining = 0.0;
        }
        used
    }

    fn arrived(&self) -> bool {
        self.remaining <= 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TaskPhase {
    Flying(Flight),
    Scanning,
}

/// The inheritable part of a work position: remaining route, partial scan,
/// and where the work currently stands.
#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub slot: usize,
    pub cursor: usize,
    pub scan_progress: f64,
    pub phase: TaskPhase,
    pub position: Point,
    legs_started: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UavState {
    pub id: usize,
    pub role: Role,
    pub battery_remaining: f64,
    pub position: Point,
    /// Present while active or flying out to take over a task.
    pub task: Option<Task>,
    /// Return or transit flight in progress.
    pub flight: Option<Flight>,
    /// Charging completes at this time.
    pub ready_at: f64,
    retire_on_landing: bool,
}

impl UavState {
    pub fn route_cursor(&self) -> Option<usize> {
        self.task.as_ref().map(|t| t.cursor)
    }

    pub fn scan_progress(&self) -> Option<f64> {
        self.task.as_ref().map(|t| t.scan_progress)
    }

    fn airborne(&self) -> bool {
        matches!(
            self.role,
            Role::Active | Role::Returning | Role::TransitToHandover
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SlotStatus {
    Working,
    Finished,
    Abandoned,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExhaustionEvent {
    pub time: f64,
    pub uav_id: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Request,
    Dispatch,
    Exhaustion,
    Handover,
    SiteScanned,
    SlotFinished,
    Landed,
    Ready,
    Removed,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EventKind::Request => "request",
            EventKind::Dispatch => "dispatch",
            EventKind::Exhaustion => "exhaustion",
            EventKind::Handover => "handover",
            EventKind::SiteScanned => "site_scanned",
            EventKind::SlotFinished => "slot_finished",
            EventKind::Landed => "landed",
            EventKind::Ready => "ready",
            EventKind::Removed => "removed",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventRecord {
    pub time: f64,
    pub event_type: EventKind,
    pub uav_id: usize,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub success: bool,
    pub exhaustion_events: Vec<ExhaustionEvent>,
    /// Served replacements.
    pub handover_count: u32,
    pub handover_times: Vec<f64>,
    pub sites_scanned: usize,
    /// Vehicles returning or charging, one entry per timestep.
    pub concurrency_trace: Vec<u32>,
    /// Every replacement request, served or not.
    pub request_times: Vec<f64>,
    pub duration: f64,
    pub timestep: f64,
    /// Lowest battery level seen on any vehicle.
    pub min_battery: f64,
    /// Highest number of scans any single site received.
    pub max_scans_per_site: u32,
    #[serde(skip)]
    pub events: Option<Vec<EventRecord>>,
}

/// Everything that is shared by all sizing rules for one trial.
#[derive(Debug, Clone)]
pub struct TrialInput<'a> {
    pub cfg: &'a ScenarioConfig,
    pub mission: DerivedMission,
    pub layout: &'a SiteLayout,
    pub routes: &'a [Route],
    pub noise: TravelNoise,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub event_log: bool,
    /// Run `accounting_check` after every step.
    pub audit: bool,
}

/// Mutable state of one trial.
#[derive(Debug, Clone)]
pub struct MissionState<'a> {
    cfg: &'a ScenarioConfig,
    routes: &'a [Route],
    sites: &'a [Point],
    noise: TravelNoise,
    m: usize,
    k: usize,
    step_index: u64,
    pub time: f64,
    pub uavs: Vec<UavState>,
    pub slots: Vec<SlotStatus>,
    slot_returns: Vec<u64>,
    slot_transits: Vec<u64>,
    scan_counts: Vec<u32>,
    exhaustion_events: Vec<ExhaustionEvent>,
    handover_times: Vec<f64>,
    request_times: Vec<f64>,
    concurrency_trace: Vec<u32>,
    min_battery: f64,
    events: Option<Vec<EventRecord>>,
}

impl<'a> MissionState<'a> {
    /// `m` vehicles launched on their routes at t = 0 and `k` ready spares.
    pub fn new(
        cfg: &'a ScenarioConfig,
        sites: &'a [Point],
        routes: &'a [Route],
        noise: TravelNoise,
        k: usize,
        event_log: bool,
    ) -> Result<Self> {
        let m = routes.len();
        if m == 0 {
            return Err(config("mission needs at least one route"));
        }
        for r in routes {
            if r.ordered_sites.is_empty() {
                return Err(config(format!("route {} is empty", r.uav_index)));
            }
            if let Some(&bad) = r.ordered_sites.iter().find(|&&s| s >= sites.len()) {
                return Err(config(format!(
                    "route {} references unknown site {bad}",
                    r.uav_index
                )));
            }
        }
        let base = cfg.base_position;
        let mut uavs = Vec::with_capacity(m + k);
        for (slot, route) in routes.iter().enumerate() {
            let first = sites[route.ordered_sites[0]];
            let total = leg_time(base, first, cfg, &noise, slot, leg_id(LegKind::Route, 0));
            uavs.push(UavState {
                id: slot,
                role: Role::Active,
                battery_remaining: cfg.t_active,
                position: base,
                task: Some(Task {
                    slot,
                    cursor: 0,
                    scan_progress: 0.0,
                    phase: TaskPhase::Flying(Flight::new(base, first, total)),
                    position: base,
                    legs_started: 1,
                }),
                flight: None,
                ready_at: 0.0,
                retire_on_landing: false,
            });
        }
        for id in m..m + k {
            uavs.push(UavState {
                id,
                role: Role::Ready,
                battery_remaining: cfg.t_active,
                position: base,
                task: None,
                flight: None,
                ready_at: 0.0,
                retire_on_landing: false,
            });
        }
        Ok(Self {
            cfg,
            routes,
            sites,
            noise,
            m,
            k,
            step_index: 0,
            time: 0.0,
            uavs,
            slots: vec![SlotStatus::Working; m],
            slot_returns: vec![0; m],
            slot_transits: vec![0; m],
            scan_counts: vec![0; sites.len()],
            exhaustion_events: Vec::new(),
            handover_times: Vec::new(),
            request_times: Vec::new(),
            concurrency_trace: Vec::new(),
            min_battery: cfg.t_active,
            events: event_log.then(Vec::new),
        })
    }

    pub fn fleet_size(&self) -> usize {
        self.m + self.k
    }

    pub fn is_done(&self) -> bool {
        self.slots.iter().all(|s| *s != SlotStatus::Working)
    }

    pub fn sites_scanned(&self) -> usize {
        self.scan_counts.iter().filter(|&&c| c > 0).count()
    }

    pub fn role_count(&self, role: Role) -> usize {
        self.uavs.iter().filter(|u| u.role == role).count()
    }

    fn log(&mut self, event_type: EventKind, uav_id: usize, detail: impl FnOnce() -> String) {
        if let Some(events) = self.events.as_mut() {
            events.push(EventRecord {
                time: self.time,
                event_type,
                uav_id,
                detail: detail(),
            });
        }
    }

    /// Advances the clock by one timestep. Within a step: recovery
    /// completions, then flight/scan progress, then replacement triggers and
    /// dispatch, then handover arrivals, then the trace sample.
    pub fn step(&mut self) {
        let dt = self.cfg.timestep;
        let t_prev = self.time;
        self.step_index += 1;
        self.time = self.step_index as f64 * dt;

        self.complete_recoveries();
        self.advance_airborne(t_prev, dt);
        self.evaluate_triggers();
        self.complete_handovers();

        let in_recovery = self.uavs.iter().filter(|u| u.role.in_recovery()).count() as u32;
        self.concurrency_trace.push(in_recovery);
    }

    fn complete_recoveries(&mut self) {
        let now = self.time;
        for i in 0..self.uavs.len() {
            let u = &mut self.uavs[i];
            if u.role == Role::Charging && u.ready_at <= now + EPS {
                u.role = Role::Ready;
                u.battery_remaining = self.cfg.t_active;
                let id = u.id;
                self.log(EventKind::Ready, id, String::new);
            }
        }
    }

    fn advance_airborne(&mut self, t_prev: f64, dt: f64) {
        for i in 0..self.uavs.len() {
            if !self.uavs[i].airborne() {
                continue;
            }
            match self.uavs[i].role {
                Role::Active => {
                    self.uavs[i].battery_remaining -= dt;
                    self.work(i, dt);
                }
                Role::Returning => {
                    let u = &mut self.uavs[i];
                    let flight = u.flight.as_mut().expect("returning vehicle has a flight");
                    let used = flight.advance(dt);
                    u.battery_remaining -= used;
                    u.position = flight.position();
                    if flight.arrived() {
                        u.flight = None;
                        u.position = self.cfg.base_position;
                        let id = u.id;
                        if u.retire_on_landing {
                            u.role = Role::Removed;
                            self.log(EventKind::Removed, id, String::new);
                        } else {
                            u.role = Role::Charging;
                            u.ready_at = t_prev + used + self.cfg.t_charge;
                            self.log(EventKind::Landed, id, String::new);
                        }
                    }
                }
                Role::TransitToHandover => {
                    let u = &mut self.uavs[i];
                    let flight = u.flight.as_mut().expect("transiting vehicle has a flight");
                    let used = flight.advance(dt);
                    u.battery_remaining -= used;
                    u.position = flight.position();
                }
                _ => unreachable!(),
            }
            self.min_battery = self.min_battery.min(self.uavs[i].battery_remaining);
        }
    }

    /// Spends `dt` of work on vehicle `i`'s task.
    fn work(&mut self, i: usize, dt: f64) {
        let cfg = self.cfg;
        let mut budget = dt;
        let mut task = self.uavs[i]
            .task
            .take()
            .expect("active vehicle holds a task");
        let route = &self.routes[task.slot].ordered_sites;
        let mut finished = false;
        while budget > EPS {
            match &mut task.phase {
                TaskPhase::Flying(leg) => {
                    budget -= leg.advance(budget);
                    task.position = leg.position();
                    if leg.arrived() {
                        task.position = leg.to;
                        task.phase = TaskPhase::Scanning;
                        task.scan_progress = 0.0;
                    }
                }
                TaskPhase::Scanning => {
                    let need = (cfg.t_scan - task.scan_progress).max(0.0);
                    if budget + EPS >= need {
                        budget -= need;
                        let site = route[task.cursor];
                        self.scan_counts[site] += 1;
                        let id = self.uavs[i].id;
                        self.log(EventKind::SiteScanned, id, || format!("site={site}"));
                        task.cursor += 1;
                        task.scan_progress = 0.0;
                        if task.cursor == route.len() {
                            finished = true;
                            break;
                        }
                        let next = self.sites[route[task.cursor]];
                        let total = leg_time(
                            task.position,
                            next,
                            cfg,
                            &self.noise,
                            task.slot,
                            leg_id(LegKind::Route, task.legs_started),
                        );
                        task.legs_started += 1;
                        task.phase = TaskPhase::Flying(Flight::new(task.position, next, total));
                    } else {
                        task.scan_progress += budget;
                        budget = 0.0;
                    }
                }
            }
        }
        self.uavs[i].position = task.position;
        if finished {
            let slot = task.slot;
            self.slots[slot] = SlotStatus::Finished;
            let id = self.uavs[i].id;
            self.log(EventKind::SlotFinished, id, || format!("slot={slot}"));
            self.send_home(i, slot, false);
        } else {
            self.uavs[i].task = Some(task);
        }
    }

    fn send_home(&mut self, i: usize, slot: usize, retire: bool) {
        let idx = self.slot_returns[slot];
        self.slot_returns[slot] += 1;
        let from = self.uavs[i].position;
        let base = self.cfg.base_position;
        let total = leg_time(
            from,
            base,
            self.cfg,
            &self.noise,
            slot,
            leg_id(LegKind::Return, idx),
        );
        let u = &mut self.uavs[i];
        u.role = Role::Returning;
        u.task = None;
        u.flight = Some(Flight::new(from, base, total));
        u.retire_on_landing = retire;
    }

    fn return_estimate(&self, p: Point) -> f64 {
        p.dist(self.cfg.base_position) / self.cfg.flight_speed
    }

    fn evaluate_triggers(&mut self) {
        let reserve = self.cfg.reserve_time();
        for i in 0..self.uavs.len() {
            let u = &self.uavs[i];
            if u.role != Role::Active {
                continue;
            }
            let threshold = self.return_estimate(u.position) + reserve;
            if u.battery_remaining > threshold + EPS {
                continue;
            }
            self.request_replacement(i);
        }
    }

    fn request_replacement(&mut self, i: usize) {
        let now = self.time;
        let requester = self.uavs[i].id;
        let task = self.uavs[i]
            .task
            .take()
            .expect("active vehicle holds a task");
        let slot = task.slot;
        self.request_times.push(now);
        self.log(EventKind::Request, requester, || format!("slot={slot}"));

        let spare = self.uavs.iter().position(|u| u.role == Role::Ready);
        match spare {
            Some(j) => {
                let idx = self.slot_transits[slot];
                self.slot_transits[slot] += 1;
                let base = self.cfg.base_position;
                let total = leg_time(
                    base,
                    task.position,
                    self.cfg,
                    &self.noise,
                    slot,
                    leg_id(LegKind::Transit, idx),
                );
                let s = &mut self.uavs[j];
                s.role = Role::TransitToHandover;
                s.flight = Some(Flight::new(base, task.position, total));
                s.task = Some(task);
                let spare_id = s.id;
                self.handover_times.push(now);
                self.log(EventKind::Dispatch, spare_id, || {
                    format!("slot={slot} replaces={requester}")
                });
                self.send_home(i, slot, false);
            }
            None => {
                self.exhaustion_events.push(ExhaustionEvent {
                    time: now,
                    uav_id: requester,
                });
                self.slots[slot] = SlotStatus::Abandoned;
                self.log(EventKind::Exhaustion, requester, || format!("slot={slot}"));
                self.send_home(i, slot, true);
            }
        }
    }

    fn complete_handovers(&mut self) {
        for i in 0..self.uavs.len() {
            let u = &mut self.uavs[i];
            if u.role != Role::TransitToHandover || !u.flight.as_ref().is_some_and(Flight::arrived)
            {
                continue;
            }
            u.flight = None;
            u.role = Role::Active;
            let task = u.task.as_ref().expect("transiting vehicle carries a task");
            u.position = task.position;
            let (id, slot) = (u.id, task.slot);
            self.log(EventKind::Handover, id, || format!("slot={slot}"));
        }
    }

    pub fn into_result(self) -> TrialResult {
        let sites_scanned = self.sites_scanned();
        let max_scans_per_site = self.scan_counts.iter().copied().max().unwrap_or(0);
        let success = sites_scanned == self.sites.len() && self.exhaustion_events.is_empty();
        TrialResult {
            success,
            handover_count: self.handover_times.len() as u32,
            exhaustion_events: self.exhaustion_events,
            handover_times: self.handover_times,
            sites_scanned,
            concurrency_trace: self.concurrency_trace,
            request_times: self.request_times,
            duration: self.time,
            timestep: self.cfg.timestep,
            min_battery: self.min_battery,
            max_scans_per_site,
            events: self.events,
        }
    }
}

/// Conservation audit: every vehicle has exactly one role, and every slot
/// still working is held by exactly one active or inbound vehicle.
pub fn accounting_check(state: &MissionState<'_>) -> bool {
    let mut by_role = [0usize; 6];
    for u in &state.uavs {
        by_role[u.role as usize] += 1;
    }
    if by_role.iter().sum::<usize>() != state.fleet_size() || state.uavs.len() != state.fleet_size()
    {
        return false;
    }
    let mut holders = vec![0usize; state.slots.len()];
    for u in &state.uavs {
        match (u.role, &u.task) {
            (Role::Active | Role::TransitToHandover, Some(t)) => holders[t.slot] += 1,
            (Role::Active | Role::TransitToHandover, None) => return false,
            (_, Some(_)) => return false,
            _ => {}
        }
        if u.battery_remaining > state.cfg.t_active + EPS {
            return false;
        }
    }
    state.slots.iter().zip(&holders).all(|(s, &h)| {
        if *s == SlotStatus::Working {
            h == 1
        } else {
            h == 0
        }
    })
}

/// Runs one complete mission for one fleet plan.
pub fn run_trial(
    input: &TrialInput<'_>,
    plan: &FleetPlan,
    opts: &RunOptions,
) -> Result<TrialResult> {
    let cfg = input.cfg;
    if plan.m != input.mission.m {
        return Err(config(format!(
            "fleet plan sized for m = {} but the mission has m = {}",
            plan.m, input.mission.m
        )));
    }
    if input.routes.len() != plan.m as usize {
        return Err(config(format!(
            "{} routes supplied for m = {}",
            input.routes.len(),
            plan.m
        )));
    }
    if let Feasibility::Infeasible { offending } = check_feasibility(cfg, &input.layout.sites)? {
        return Err(Error::Infeasible {
            offending: offending.iter().map(|i| format!("site {i}")).collect(),
        });
    }
    let mut state = MissionState::new(
        cfg,
        &input.layout.sites,
        input.routes,
        input.noise,
        plan.k as usize,
        opts.event_log,
    )?;
    while !state.is_done() {
        if state.step_index >= MAX_STEPS {
            return Err(Error::Invariant(format!(
                "trial seed {} did not terminate within {MAX_STEPS} steps",
                input.seed
            )));
        }
        state.step();
        if opts.audit && !accounting_check(&state) {
            return Err(Error::Invariant(format!(
                "role accounting failed at t = {} (trial seed {})",
                state.time, input.seed
            )));
        }
    }
    Ok(state.into_result())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sizing::{worst_case_oracle, SizingRule};

    fn plan(m: u32, k: u32) -> FleetPlan {
        FleetPlan {
            rule: SizingRule::Proposed,
            m,
            r: 1.0,
            k,
        }
    }

    /// All sites at the base, no noise: every sortie is pure scanning and all
    /// slots deplete in lockstep.
    fn aligned_cfg(t_active: f64, t_charge: f64) -> ScenarioConfig {
        ScenarioConfig {
            reserve_fraction: 0.0,
            wind_cv: 0.0,
            per_leg_noise_halfwidth: 0.0,
            ..ScenarioConfig::new(
                1,
                (0.0, 0.0),
                Point::new(0.0, 0.0),
                t_active,
                t_charge,
                1.0,
                0.5,
            )
        }
    }

    fn aligned_routes(m: usize, sites_per_slot: usize) -> (SiteLayout, Vec<Route>) {
        let n = m * sites_per_slot;
        let layout = SiteLayout {
            cluster_assignment: (0..n).map(|i| i / sites_per_slot).collect(),
            ..SiteLayout::from_points(vec![Point::new(0.0, 0.0); n])
        };
        let routes = (0..m)
            .map(|u| Route {
                uav_index: u,
                ordered_sites: (u * sites_per_slot..(u + 1) * sites_per_slot).collect(),
            })
            .collect();
        (layout, routes)
    }

    fn run(
        cfg: &ScenarioConfig,
        layout: &SiteLayout,
        routes: &[Route],
        m: u32,
        k: u32,
    ) -> TrialResult {
        let input = TrialInput {
            cfg,
            mission: DerivedMission {
                m,
                r: 1.0,
                nominal_return_time: 0.0,
            },
            layout,
            routes,
            noise: TravelNoise::none(),
            seed: 0,
        };
        run_trial(
            &input,
            &plan(m, k),
            &RunOptions {
                event_log: true,
                audit: true,
            },
        )
        .unwrap()
    }

    #[test]
    fn single_sortie_mission() {
        let cfg = ScenarioConfig {
            site_count: 1,
            ..aligned_cfg(10_000.0, 10.0)
        };
        let layout = SiteLayout::from_points(vec![Point::new(0.0, 0.0)]);
        let routes = vec![Route {
            uav_index: 0,
            ordered_sites: vec![0],
        }];
        let r = run(&cfg, &layout, &routes, 1, 0);
        assert!(r.success);
        assert_eq!(r.handover_count, 0);
        assert!(r.exhaustion_events.is_empty());
        assert_eq!(r.sites_scanned, 1);
        assert_eq!(r.duration, 1.0);
    }

    #[test]
    fn aligned_waves_match_fleet_total_oracle() {
        // Sortie length 10 min, recovery 15 min: ratio 1.5.
        let (m, ratio) = (3u32, 1.5);
        let cfg = aligned_cfg(10.0, 15.0);
        let (layout, routes) = aligned_routes(m as usize, 60);

        // One cohort short of the pipeline: exhaustion on the second wave.
        let short = run(&cfg, &layout, &routes, m, m);
        assert!(!short.success);
        let oracle = worst_case_oracle(m, ratio, m + m, 8).unwrap();
        assert_eq!(oracle.exhausted_wave(), Some(2));
        let first = short.exhaustion_events[0].time;
        assert_eq!(first, 2.0 * 10.0);
        assert_eq!(short.exhaustion_events.len(), m as usize);

        // ceil(ratio) spares per slot: the oracle with the whole fleet
        // (m + k) counted as its pool says no exhaustion, and so does the engine.
        let full = run(&cfg, &layout, &routes, m, 2 * m);
        assert!(worst_case_oracle(m, ratio, m + 2 * m, 8)
            .unwrap()
            .exhausted_at
            .is_none());
        assert!(full.success, "{:?}", full.exhaustion_events);
        let buffered = run(&cfg, &layout, &routes, m, 3 * m);
        assert!(buffered.success);
    }

    #[test]
    fn aligned_requests_form_waves() {
        let cfg = aligned_cfg(10.0, 15.0);
        let (layout, routes) = aligned_routes(4, 40);
        let r = run(&cfg, &layout, &routes, 4, 12);
        assert!(r.success);
        assert!(!r.request_times.is_empty());
        for chunk in r.request_times.chunks(4) {
            assert!(chunk.iter().all(|&t| t == chunk[0]));
            assert_eq!(chunk[0] % 10.0, 0.0);
        }
    }

    #[test]
    fn coincident_recovery_serves_request() {
        // Recovery equals the sortie, so vehicle 0 finishes charging in the
        // very step its replacement asks to be relieved.
        let cfg = aligned_cfg(10.0, 10.0);
        let (layout, routes) = aligned_routes(1, 30);
        let r = run(&cfg, &layout, &routes, 1, 1);
        assert!(r.success, "{:?}", r.exhaustion_events);
        assert_eq!(r.handover_times[..2], [10.0, 20.0]);
        let events = r.events.unwrap();
        let at_20: Vec<_> = events.iter().filter(|e| e.time == 20.0).collect();
        let ready = at_20
            .iter()
            .position(|e| e.event_type == EventKind::Ready && e.uav_id == 0)
            .unwrap();
        let dispatch = at_20
            .iter()
            .position(|e| e.event_type == EventKind::Dispatch && e.uav_id == 0)
            .unwrap();
        assert!(ready < dispatch);
    }

    #[test]
    fn ready_spare_without_request_stays_put() {
        let cfg = aligned_cfg(100.0, 10.0);
        let (layout, routes) = aligned_routes(1, 3);
        let mut state =
            MissionState::new(&cfg, &layout.sites, &routes, TravelNoise::none(), 1, false).unwrap();
        let before = state.uavs[1].clone();
        state.step();
        assert_eq!(state.uavs[1], before);
    }

    #[test]
    fn scan_completion_advances_cursor() {
        let cfg = aligned_cfg(100.0, 10.0);
        let (layout, routes) = aligned_routes(1, 3);
        let mut state =
            MissionState::new(&cfg, &layout.sites, &routes, TravelNoise::none(), 0, false).unwrap();
        state.step();
        assert_eq!(state.uavs[0].route_cursor(), Some(0));
        assert_eq!(state.uavs[0].scan_progress(), Some(0.5));
        state.step();
        assert_eq!(state.uavs[0].route_cursor(), Some(1));
        assert_eq!(state.uavs[0].scan_progress(), Some(0.0));
        assert_eq!(state.sites_scanned(), 1);
    }

    #[test]
    fn accounting_holds_initially_and_after_transitions() {
        let cfg = aligned_cfg(10.0, 15.0);
        let (layout, routes) = aligned_routes(2, 20);
        let mut state =
            MissionState::new(&cfg, &layout.sites, &routes, TravelNoise::none(), 3, false).unwrap();
        assert!(accounting_check(&state));
        assert_eq!(state.role_count(Role::Active), 2);
        assert_eq!(state.role_count(Role::Ready), 3);
        while !state.is_done() {
            state.step();
            assert!(accounting_check(&state));
        }
        // Tampering is detected.
        state.uavs[0].role = Role::Active;
        assert!(!accounting_check(&state));
    }

    #[test]
    fn exhausted_slot_is_abandoned_and_requester_removed() {
        let cfg = aligned_cfg(10.0, 15.0);
        let (layout, routes) = aligned_routes(1, 30);
        let r = run(&cfg, &layout, &routes, 1, 0);
        assert!(!r.success);
        assert_eq!(
            r.exhaustion_events,
            vec![ExhaustionEvent {
                time: 10.0,
                uav_id: 0
            }]
        );
        assert_eq!(r.sites_scanned, 10);
        assert_eq!(r.handover_count, 0);
        assert_eq!(r.request_times, vec![10.0]);
    }

    #[test]
    fn handover_inherits_partial_progress() {
        // Scans of 0.75 min straddle the 10 minute sortie boundary.
        let cfg = ScenarioConfig {
            t_scan: 0.75,
            ..aligned_cfg(10.0, 5.0)
        };
        let (layout, routes) = aligned_routes(1, 20);
        let mut state =
            MissionState::new(&cfg, &layout.sites, &routes, TravelNoise::none(), 1, false).unwrap();
        for _ in 0..20 {
            state.step();
        }
        let spare = &state.uavs[1];
        assert_eq!(spare.role, Role::Active);
        assert_eq!(spare.route_cursor(), Some(13));
        assert_eq!(spare.scan_progress(), Some(0.25));
        assert_eq!(state.uavs[0].role, Role::Returning);
    }

    #[test]
    fn plan_must_match_mission() {
        let cfg = aligned_cfg(10.0, 15.0);
        let (layout, routes) = aligned_routes(2, 5);
        let input = TrialInput {
            cfg: &cfg,
            mission: DerivedMission {
                m: 2,
                r: 1.5,
                nominal_return_time: 0.0,
            },
            layout: &layout,
            routes: &routes,
            noise: TravelNoise::none(),
            seed: 0,
        };
        assert!(run_trial(&input, &plan(3, 2), &RunOptions::default()).is_err());
    }

    #[test]
    fn infeasible_layout_rejected() {
        let cfg = ScenarioConfig::new(1, (100.0, 1.0), Point::new(0.0, 0.0), 60.0, 50.0, 2.0, 0.5);
        let layout = SiteLayout::from_points(vec![Point::new(90.0, 0.0)]);
        let routes = vec![Route {
            uav_index: 0,
            ordered_sites: vec![0],
        }];
        let input = TrialInput {
            cfg: &cfg,
            mission: DerivedMission {
                m: 1,
                r: 1.0,
                nominal_return_time: 0.0,
            },
            layout: &layout,
            routes: &routes,
            noise: TravelNoise::none(),
            seed: 0,
        };
        assert!(matches!(
            run_trial(&input, &plan(1, 1), &RunOptions::default()),
            Err(Error::Infeasible { .. })
        ));
    }
}
