//! Site layouts, partitioning among active vehicles, routes, and travel times.

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Result};
use crate::rng::{
    keyed_unit, stream_rng, Fnv64, STREAM_KMEANS, STREAM_LEG, STREAM_SITES, STREAM_WIND,
};
use crate::scenario::ScenarioConfig;

const KMEANS_MAX_ITER: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    fn dist2(self, other: Point) -> f64 {
        let (dx, dy) = (self.x - other.x, self.y - other.y);
        dx * dx + dy * dy
    }

    /// Point a fraction `f` of the way from `self` to `to`.
    pub fn lerp(self, to: Point, f: f64) -> Point {
        Point::new(self.x + (to.x - self.x) * f, self.y + (to.y - self.y) * f)
    }
}

impl From<[f64; 2]> for Point {
    fn from(v: [f64; 2]) -> Self {
        Point::new(v[0], v[1])
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SiteLayout {
    pub sites: Vec<Point>,
    /// Site index -> active vehicle index. Empty until partitioned.
    pub cluster_assignment: Vec<usize>,
    /// Generation centres and the centre each site was drawn around.
    pub centers: Vec<Point>,
    pub center_of: Vec<usize>,
}

impl SiteLayout {
    /// Layout from explicit points, all assigned to vehicle 0.
    pub fn from_points(sites: Vec<Point>) -> Self {
        let n = sites.len();
        Self {
            sites,
            cluster_assignment: vec![0; n],
            centers: Vec::new(),
            center_of: vec![0; n],
        }
    }

    pub fn assigned_to(&self, uav: usize) -> impl Iterator<Item = usize> + '_ {
        self.cluster_assignment
            .iter()
            .enumerate()
            .filter(move |(_, &a)| a == uav)
            .map(|(i, _)| i)
    }

    pub fn fingerprint(&self, h: &mut Fnv64) {
        for p in &self.sites {
            h.write_f64(p.x);
            h.write_f64(p.y);
        }
        for &a in &self.cluster_assignment {
            h.write_u64(a as u64);
        }
    }
}

/// Clustered layout: centres uniform in the area, then each site drawn as
/// isotropic Gaussian scatter around centre `i % centers`, clipped to bounds.
pub fn generate_sites(cfg: &ScenarioConfig, centers: usize, seed: u64) -> Result<SiteLayout> {
    cfg.validate()?;
    if cfg.site_count == 0 {
        return Err(config("site_count must be positive"));
    }
    if centers == 0 {
        return Err(config("need at least one generation centre"));
    }
    let mut rng = stream_rng(seed, STREAM_SITES);
    let (w, h) = (cfg.area_width, cfg.area_height);
    let centre_pts: Vec<Point> = (0..centers)
        .map(|_| Point::new(rng.random::<f64>() * w, rng.random::<f64>() * h))
        .collect();
    let scatter = Normal::new(0.0, cfg.cluster_scatter).map_err(|e| config(e.to_string()))?;
    let mut sites = Vec::with_capacity(cfg.site_count);
    let mut center_of = Vec::with_capacity(cfg.site_count);
    for i in 0..cfg.site_count {
        let c = i % centers;
        let dx = scatter.sample(&mut rng);
        let dy = scatter.sample(&mut rng);
        let p = Point::new(
            (centre_pts[c].x + dx).clamp(0.0, w),
            (centre_pts[c].y + dy).clamp(0.0, h),
        );
        sites.push(p);
        center_of.push(c);
    }
    Ok(SiteLayout {
        cluster_assignment: vec![0; sites.len()],
        sites,
        centers: centre_pts,
        center_of,
    })
}

fn nearest(point: Point, centroids: &[Point]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, &q) in centroids.iter().enumerate() {
        let d = point.dist2(q);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

fn kmeans_pp_init(sites: &[Point], m: usize, rng: &mut impl Rng) -> Vec<Point> {
    let first = *sites.choose(rng).expect("non-empty");
    let mut centroids = vec![first];
    let mut d2: Vec<f64> = sites.iter().map(|p| p.dist2(first)).collect();
    while centroids.len() < m {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = sites.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..sites.len())
        };
        let c = sites[pick];
        centroids.push(c);
        for (d, p) in d2.iter_mut().zip(sites) {
            *d = d.min(p.dist2(c));
        }
    }
    centroids
}

/// Moves the point farthest from its centroid in the largest cluster into
/// each empty cluster until none is empty.
fn repair_empty(sites: &[Point], assign: &mut [usize], centroids: &[Point], m: usize) {
    loop {
        let mut sizes = vec![0usize; m];
        for &a in assign.iter() {
            sizes[a] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let largest = (0..m)
            .max_by_key(|&c| (sizes[c], std::cmp::Reverse(c)))
            .unwrap();
        let victim = (0..sites.len())
            .filter(|&i| assign[i] == largest)
            .max_by(|&a, &b| {
                let da = sites[a].dist2(centroids[largest]);
                let db = sites[b].dist2(centroids[largest]);
                da.total_cmp(&db).then(b.cmp(&a))
            })
            .unwrap();
        assign[victim] = empty;
    }
}

/// Lloyd's k-means with k-means++ seeding, a fixed iteration cap, and
/// empty-cluster repair. Every vehicle ends up with at least one site.
pub fn partition_sites(layout: &SiteLayout, m: usize, seed: u64) -> Result<SiteLayout> {
    let n = layout.sites.len();
    if m == 0 {
        return Err(config("m must be at least 1"));
    }
    if n < m {
        return Err(config(format!(
            "{n} sites cannot be split among {m} active vehicles"
        )));
    }
    let sites = &layout.sites;
    let mut rng = stream_rng(seed, STREAM_KMEANS);
    let mut centroids = kmeans_pp_init(sites, m, &mut rng);
    let mut assign: Vec<usize> = sites.iter().map(|&p| nearest(p, &centroids)).collect();
    repair_empty(sites, &mut assign, &centroids, m);

    for _ in 0..KMEANS_MAX_ITER {
        let mut sum = vec![(0.0, 0.0, 0usize); m];
        for (p, &a) in sites.iter().zip(&assign) {
            sum[a].0 += p.x;
            sum[a].1 += p.y;
            sum[a].2 += 1;
        }
        for (c, (sx, sy, cnt)) in sum.into_iter().enumerate() {
            if cnt > 0 {
                centroids[c] = Point::new(sx / cnt as f64, sy / cnt as f64);
            }
        }
        let mut next: Vec<usize> = sites.iter().map(|&p| nearest(p, &centroids)).collect();
        repair_empty(sites, &mut next, &centroids, m);
        if next == assign {
            break;
        }
        assign = next;
    }

    Ok(SiteLayout {
        cluster_assignment: assign,
        ..layout.clone()
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Route {
    pub uav_index: usize,
    pub ordered_sites: Vec<usize>,
}

/// Greedy nearest-neighbour tour over the vehicle's sites, starting at the
/// base. Ties go to the lower site index.
pub fn build_route(layout: &SiteLayout, uav_index: usize, base: Point) -> Result<Route> {
    let mut remaining: Vec<usize> = layout.assigned_to(uav_index).collect();
    if remaining.is_empty() {
        return Err(domain(format!("vehicle {uav_index} has no assigned sites")));
    }
    let mut ordered = Vec::with_capacity(remaining.len());
    let mut here = base;
    while !remaining.is_empty() {
        let (pos, _) = remaining
            .iter()
            .enumerate()
            .min_by(|(_, &a), (_, &b)| {
                here.dist2(layout.sites[a])
                    .total_cmp(&here.dist2(layout.sites[b]))
                    .then(a.cmp(&b))
            })
            .unwrap();
        let next = remaining.remove(pos);
        here = layout.sites[next];
        ordered.push(next);
    }
    Ok(Route {
        uav_index,
        ordered_sites: ordered,
    })
}

pub fn build_routes(layout: &SiteLayout, m: usize, base: Point) -> Result<Vec<Route>> {
    (0..m).map(|u| build_route(layout, u, base)).collect()
}

/// Which kind of flight a leg belongs to. Each kind has its own counter per
/// vehicle slot so draws never shift when another kind of event is added.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LegKind {
    Route = 0,
    Transit = 1,
    Return = 2,
}

pub fn leg_id(kind: LegKind, index: u64) -> u64 {
    ((kind as u64) << 48) | (index & 0xFFFF_FFFF_FFFF)
}

/// Travel-time noise for one trial: a shared log-normal wind factor and an
/// independent uniform factor per (vehicle slot, leg).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TravelNoise {
    pub common_mode_factor: f64,
    pub per_leg_halfwidth: f64,
    seed: u64,
}

/// `(mu, sigma)` of the log-normal with unit mean and the given CV.
pub fn lognormal_params(cv: f64) -> (f64, f64) {
    let var = (1.0 + cv * cv).ln();
    (-0.5 * var, var.sqrt())
}

impl TravelNoise {
    pub fn draw(cfg: &ScenarioConfig, trial_seed: u64) -> Self {
        let common = if cfg.wind_cv > 0.0 {
            let (mu, sigma) = lognormal_params(cfg.wind_cv);
            let dist = LogNormal::new(mu, sigma).expect("finite log-normal parameters");
            dist.sample(&mut stream_rng(trial_seed, STREAM_WIND))
        } else {
            1.0
        };
        Self {
            common_mode_factor: common,
            per_leg_halfwidth: cfg.per_leg_noise_halfwidth,
            seed: trial_seed,
        }
    }

    pub fn none() -> Self {
        Self {
            common_mode_factor: 1.0,
            per_leg_halfwidth: 0.0,
            seed: 0,
        }
    }

    /// Uniform on `[1 - h, 1 + h)`.
    pub fn per_leg_factor(&self, uav: usize, leg: u64) -> f64 {
        if self.per_leg_halfwidth == 0.0 {
            return 1.0;
        }
        let u = keyed_unit(self.seed, &[STREAM_LEG, uav as u64, leg]);
        1.0 + self.per_leg_halfwidth * (2.0 * u - 1.0)
    }

    pub fn fingerprint(&self, h: &mut Fnv64) {
        h.write_f64(self.common_mode_factor);
        h.write_f64(self.per_leg_halfwidth);
        h.write_u64(self.seed);
    }
}

pub fn leg_time(
    from: Point,
    to: Point,
    cfg: &ScenarioConfig,
    noise: &TravelNoise,
    uav: usize,
    leg: u64,
) -> f64 {
    from.dist(to) / cfg.flight_speed * noise.common_mode_factor * noise.per_leg_factor(uav, leg)
}
