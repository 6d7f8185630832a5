//! Brute-force Monte Carlo simulation of the downlink.
//!
//! Each trial drops every AP class in a square window centred on the typical
//! user, picks the serving AP by biased received power, draws Rayleigh gains,
//! counts the users sharing the tagged AP, and records SINR and rate. Every
//! random quantity of a trial comes from a stream keyed by
//! `(seed, trial_index, purpose, class)`, so results do not depend on the
//! number of workers or on how trials are scheduled.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coverage::{CcdfAxis, CcdfCurve};
use crate::error::{Error, Result};
use crate::model::{ApClass, ClassId, NetworkConfig};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Deployment {
    #[default]
    Ppp,
    Grid,
}

impl std::str::FromStr for Deployment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ppp" => Ok(Self::Ppp),
            "grid" => Ok(Self::Grid),
            other => Err(Error::InvalidArgument(format!("unknown deployment '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimSettings {
    pub window_km: f64,
    pub trials: usize,
    pub seed: u64,
    /// Per-class deployment; classes not listed use PPP.
    pub deployment: BTreeMap<ClassId, Deployment>,
    /// Worker threads; 0 uses the global pool.
    pub parallel_workers: usize,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self { window_km: 20.0, trials: 100_000, seed: 0, deployment: BTreeMap::new(), parallel_workers: 0 }
    }
}

impl SimSettings {
    pub fn new(trials: usize, seed: u64) -> Self {
        Self { trials, seed, ..Self::default() }
    }

    pub fn deployment_of(&self, id: ClassId) -> Deployment {
        self.deployment.get(&id).copied().unwrap_or_default()
    }

    /// Uses `deployment` for every class of `config`.
    pub fn with_deployment(mut self, config: &NetworkConfig<f64>, deployment: Deployment) -> Self {
        for c in &config.classes {
            self.deployment.insert(c.id, deployment);
        }
        self
    }
}

/// What the typical user sees in one trial.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub serving: ClassId,
    pub distance_km: f64,
    pub sinr_linear: f64,
    /// Users sharing the tagged AP, the typical user included.
    pub load: u64,
    pub rate_bps: f64,
}

/// One trial's outcome plus the number of APs dropped per class, in the
/// configuration's class order. `outcome` is `None` when no open AP landed in
/// the window.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub outcome: Option<TrialOutcome>,
    pub ap_counts: Vec<usize>,
}

#[derive(Clone, Copy, Debug)]
enum Purpose {
    Deploy = 1,
    Gain = 2,
    Users = 3,
    Offset = 4,
    Palm = 5,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn class_key(id: ClassId) -> u64 {
    (u64::from(id.rat) << 33) | (u64::from(id.tier) << 1) | u64::from(!id.is_open())
}

/// Independent generator for one `(seed, trial, purpose, class)` tuple.
fn stream(seed: u64, trial: u64, purpose: Purpose, key: u64) -> ChaCha8Rng {
    let tag = splitmix64(splitmix64(purpose as u64) ^ key);
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ tag));
    rng.set_stream(trial);
    rng
}

/// Drops one class in the window `[−w/2, w/2]²`. For a grid, `offset` is the
/// lattice origin as a fraction of the spacing.
pub fn sample_deployment<R: Rng>(
    class: &ApClass<f64>,
    window_km: f64,
    deployment: Deployment,
    offset: [f64; 2],
    rng: &mut R,
) -> Vec<[f64; 2]> {
    if class.density <= 0.0 {
        return Vec::new();
    }
    let half = 0.5 * window_km;
    match deployment {
        Deployment::Ppp => {
            let mean = class.density * window_km * window_km;
            let n = Poisson::new(mean).map(|p| p.sample(rng) as usize).unwrap_or(0);
            (0..n).map(|_| [rng.gen::<f64>() * window_km - half, rng.gen::<f64>() * window_km - half]).collect()
        }
        Deployment::Grid => {
            let s = 1.0 / class.density.sqrt();
            let axis: Vec<f64> = (0..).map(|i| -half + (offset[0] + i as f64) * s).take_while(|x| *x < half).collect();
            let axis_y: Vec<f64> =
                (0..).map(|i| -half + (offset[1] + i as f64) * s).take_while(|y| *y < half).collect();
            axis_y.iter().flat_map(|y| axis.iter().map(move |x| [*x, *y])).collect()
        }
    }
}

fn d2(a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (a[0] - b[0], a[1] - b[1]);
    dx * dx + dy * dy
}

/// Uniform bucket grid over the window for nearest-neighbour and
/// disc-emptiness queries.
struct SpatialIndex {
    origin: f64,
    cell: f64,
    n: usize,
    start: Vec<u32>,
    /// Points sorted by bucket, with their original indices.
    sorted: Vec<([f64; 2], u32)>,
}

impl SpatialIndex {
    fn new(points: &[[f64; 2]], window_km: f64) -> Self {
        let n = ((points.len() as f64).sqrt().ceil() as usize).clamp(1, 512);
        let origin = -0.5 * window_km;
        let cell = window_km / n as f64;
        let mut idx = Self { origin, cell, n, start: vec![0; n * n + 1], sorted: Vec::with_capacity(points.len()) };
        let buckets: Vec<usize> = points.iter().map(|p| idx.bucket(idx.cell_of(p[0]), idx.cell_of(p[1]))).collect();
        for b in &buckets {
            idx.start[b + 1] += 1;
        }
        for i in 0..n * n {
            idx.start[i + 1] += idx.start[i];
        }
        let mut fill: Vec<u32> = idx.start[..n * n].to_vec();
        idx.sorted.resize(points.len(), ([0.0, 0.0], 0));
        for (i, (p, b)) in points.iter().zip(&buckets).enumerate() {
            idx.sorted[fill[*b] as usize] = (*p, i as u32);
            fill[*b] += 1;
        }
        idx
    }

    fn cell_of(&self, x: f64) -> usize {
        let c = ((x - self.origin) / self.cell).floor();
        if c < 0.0 {
            0
        } else {
            (c as usize).min(self.n - 1)
        }
    }

    fn bucket(&self, cx: usize, cy: usize) -> usize {
        cy * self.n + cx
    }

    fn points_in(&self, cx: usize, cy: usize) -> &[([f64; 2], u32)] {
        let b = self.bucket(cx, cy);
        &self.sorted[self.start[b] as usize..self.start[b + 1] as usize]
    }

    /// Nearest point to `p` other than `exclude`, as `(index, squared distance)`.
    fn nearest(&self, p: [f64; 2], exclude: Option<u32>) -> Option<(u32, f64)> {
        let (cx, cy) = (self.cell_of(p[0]) as isize, self.cell_of(p[1]) as isize);
        let n = self.n as isize;
        let mut best: Option<(u32, f64)> = None;
        for r in 0..=n {
            for dy in -r..=r {
                let y = cy + dy;
                if y < 0 || y >= n {
                    continue;
                }
                let step = if dy.abs() == r { 1 } else { (2 * r).max(1) };
                let mut dx = -r;
                while dx <= r {
                    let x = cx + dx;
                    if x >= 0 && x < n {
                        for (q, id) in self.points_in(x as usize, y as usize) {
                            if Some(*id) == exclude {
                                continue;
                            }
                            let d = d2(p, *q);
                            if best.is_none_or(|(_, b)| d < b) {
                                best = Some((*id, d));
                            }
                        }
                    }
                    dx += step;
                }
            }
            if let Some((_, b)) = best {
                // Distance from p to the outside of the rings searched so far.
                let lo_x = self.origin + (cx - r) as f64 * self.cell;
                let hi_x = self.origin + (cx + r + 1) as f64 * self.cell;
                let lo_y = self.origin + (cy - r) as f64 * self.cell;
                let hi_y = self.origin + (cy + r + 1) as f64 * self.cell;
                let margin = (p[0] - lo_x).min(hi_x - p[0]).min(p[1] - lo_y).min(hi_y - p[1]);
                if margin > 0.0 && b <= margin * margin {
                    break;
                }
            }
        }
        best
    }

    /// True if some point other than `exclude` lies strictly within `sqrt(r2)` of `p`.
    fn any_within(&self, p: [f64; 2], r2: f64, exclude: Option<u32>) -> bool {
        let r = r2.sqrt();
        let (x0, x1) = (self.cell_of(p[0] - r), self.cell_of(p[0] + r));
        let (y0, y1) = (self.cell_of(p[1] - r), self.cell_of(p[1] + r));
        for y in y0..=y1 {
            for x in x0..=x1 {
                for (q, id) in self.points_in(x, y) {
                    if Some(*id) != exclude && d2(p, *q) < r2 {
                        return true;
                    }
                }
            }
        }
        false
    }
}

/// Per-class constants shared by all trials of a batch.
#[derive(Clone, Copy)]
struct ClassInfo {
    id: ClassId,
    slot: usize,
    power: f64,
    weight: f64,
    exponent: f64,
    bandwidth: f64,
    deployment: Deployment,
}

struct Simulator<'a> {
    config: &'a NetworkConfig<f64>,
    settings: &'a SimSettings,
    open: Vec<ClassInfo>,
    closed: Vec<ClassInfo>,
}

/// Directions probed when bounding a tagged cell by a disc.
const BOUNDING_DIRECTIONS: usize = 64;

struct Drop {
    points: Vec<Vec<[f64; 2]>>,
    index: Vec<SpatialIndex>,
}

impl<'a> Simulator<'a> {
    fn new(config: &'a NetworkConfig<f64>, settings: &'a SimSettings) -> Result<Self> {
        let report = config.validate();
        if !report.is_ok() {
            return Err(Error::InvalidConfig(report));
        }
        if !(settings.window_km > 0.0) {
            return Err(Error::InvalidArgument("window must be positive".into()));
        }
        let info = |slot: usize, c: &ApClass<f64>| ClassInfo {
            id: c.id,
            slot,
            power: c.power,
            weight: c.weight(),
            exponent: c.exponent,
            bandwidth: c.bandwidth,
            deployment: settings.deployment_of(c.id),
        };
        let mut open: Vec<ClassInfo> = Vec::new();
        let mut closed: Vec<ClassInfo> = Vec::new();
        for (slot, c) in config.classes.iter().enumerate() {
            if c.density <= 0.0 {
                continue;
            }
            if c.id.is_open() {
                open.push(info(slot, c));
            } else {
                closed.push(info(slot, c));
            }
        }
        open.sort_by_key(|c| c.id);
        Ok(Self { config, settings, open, closed })
    }

    /// Drops `classes`; only open classes get a spatial index.
    fn drop_classes(&self, classes: &[ClassInfo], trial: u64, offset: [f64; 2], palm: Option<usize>) -> Drop {
        let w = self.settings.window_km;
        let mut points = Vec::with_capacity(classes.len());
        let mut index = Vec::with_capacity(classes.len());
        for (k, c) in classes.iter().enumerate() {
            let mut rng = stream(self.settings.seed, trial, Purpose::Deploy, class_key(c.id));
            let class = &self.config.classes[c.slot];
            let mut pts = sample_deployment(class, w, c.deployment, offset, &mut rng);
            if palm == Some(k) {
                pts.push([0.0, 0.0]);
            }
            if c.id.is_open() {
                index.push(SpatialIndex::new(&pts, w));
            }
            points.push(pts);
        }
        Drop { points, index }
    }

    fn grid_offset(&self, trial: u64) -> [f64; 2] {
        let mut rng = stream(self.settings.seed, trial, Purpose::Offset, 0);
        [rng.gen(), rng.gen()]
    }

    fn run_trial(&self, trial: u64) -> TrialRecord {
        let offset = self.grid_offset(trial);
        let open = self.drop_classes(&self.open, trial, offset, None);
        let mut ap_counts = vec![0usize; self.config.classes.len()];
        for (c, pts) in self.open.iter().zip(&open.points) {
            ap_counts[c.slot] = pts.len();
        }

        // Per-class nearest AP, then the best biased received power; classes
        // are visited in id order, so ties go to the smaller id.
        let mut server: Option<(usize, u32, f64, f64)> = None;
        for (k, c) in self.open.iter().enumerate() {
            if let Some((id, dist2)) = open.index[k].nearest([0.0, 0.0], None) {
                let metric = c.weight * dist2.powf(-0.5 * c.exponent);
                if server.is_none_or(|(_, _, m, _)| metric > m) {
                    server = Some((k, id, metric, dist2));
                }
            }
        }
        let Some((sk, sid, _, sdist2)) = server else {
            return TrialRecord { outcome: None, ap_counts };
        };
        let serving = &self.open[sk];
        let rat = serving.id.rat;

        let closed_rat: Vec<ClassInfo> = self.closed.iter().filter(|c| c.id.rat == rat).copied().collect();
        let closed = self.drop_classes(&closed_rat, trial, offset, None);
        for (c, pts) in closed_rat.iter().zip(&closed.points) {
            ap_counts[c.slot] = pts.len();
        }

        let mut signal = 0.0;
        let mut interference = 0.0;
        let same_rat = self
            .open
            .iter()
            .enumerate()
            .filter(|(_, c)| c.id.rat == rat)
            .map(|(k, c)| (c, &open.points[k], k == sk))
            .chain(closed_rat.iter().zip(&closed.points).map(|(c, p)| (c, p, false)));
        for (c, pts, is_serving_class) in same_rat {
            let mut rng = stream(self.settings.seed, trial, Purpose::Gain, class_key(c.id));
            let half_alpha = -0.5 * c.exponent;
            for (i, p) in pts.iter().enumerate() {
                let g: f64 = Exp1.sample(&mut rng);
                let r2 = d2(*p, [0.0, 0.0]);
                let path = if c.exponent == 4.0 { 1.0 / (r2 * r2) } else { r2.powf(half_alpha) };
                let rx = c.power * g * path;
                if is_serving_class && i as u32 == sid {
                    signal = rx;
                } else {
                    interference += rx;
                }
            }
        }
        let sinr = signal / (interference + self.config.noise(rat));

        let users = if self.config.user_density > 0.0 {
            let mut rng = stream(self.settings.seed, trial, Purpose::Users, 0);
            self.cell_users(&open, sk, sid, &mut rng)
        } else {
            0
        };
        let load = 1 + users;
        TrialRecord {
            outcome: Some(TrialOutcome {
                serving: serving.id,
                distance_km: sdist2.sqrt(),
                sinr_linear: sinr,
                load,
                rate_bps: serving.bandwidth / load as f64 * (1.0 + sinr).log2(),
            }),
            ap_counts,
        }
    }

    /// Radius of a disc around the tagged AP that contains its cell.
    fn bounding_radius(&self, drop: &Drop, k: usize, tagged: u32) -> f64 {
        let t = drop.points[k][tagged as usize];
        let w = self.settings.window_km;
        let limit = 2.0 * w;
        let Some((_, nn2)) = drop.index[k].nearest(t, Some(tagged)) else {
            return limit;
        };
        let mut r = nn2.sqrt();
        let slack = std::f64::consts::PI / BOUNDING_DIRECTIONS as f64;
        while r < limit {
            // Every point of the circle lies within r·π/K of a probe; a probe
            // strictly closer to some other same-class AP than that margin
            // puts that whole arc outside the tagged cell.
            let ok = (0..BOUNDING_DIRECTIONS).all(|j| {
                let th = 2.0 * std::f64::consts::PI * j as f64 / BOUNDING_DIRECTIONS as f64;
                let q = [t[0] + r * th.cos(), t[1] + r * th.sin()];
                drop.index[k].nearest(q, Some(tagged)).is_some_and(|(_, d)| d.sqrt() + r * slack < r)
            });
            if ok {
                return r;
            }
            r *= 2.0;
        }
        limit
    }

    /// Users other than the typical one whose serving AP is AP `tagged` of open class `k`.
    fn cell_users(&self, drop: &Drop, k: usize, tagged: u32, rng: &mut ChaCha8Rng) -> u64 {
        let t = drop.points[k][tagged as usize];
        let half = 0.5 * self.settings.window_km;
        let r = self.bounding_radius(drop, k, tagged);
        let (x0, x1) = ((t[0] - r).max(-half), (t[0] + r).min(half));
        let (y0, y1) = ((t[1] - r).max(-half), (t[1] + r).min(half));
        let area = (x1 - x0).max(0.0) * (y1 - y0).max(0.0);
        let mean = self.config.user_density * area;
        if mean <= 0.0 {
            return 0;
        }
        let n = Poisson::new(mean).map(|p| p.sample(rng) as u64).unwrap_or(0);
        let tc = &self.open[k];
        // Class m beats the tagged AP at a user at distance d from it if one of
        // its APs is closer than (T_m/T_t)^{1/α_m} · d^{α_t/α_m}.
        let rivals: Vec<(usize, f64, f64)> = self
            .open
            .iter()
            .enumerate()
            .filter(|(m, _)| *m != k)
            .map(|(m, c)| (m, (c.weight / tc.weight).powf(1.0 / c.exponent), tc.exponent / c.exponent))
            .collect();
        let mut count = 0;
        for _ in 0..n {
            let u = [x0 + rng.gen::<f64>() * (x1 - x0), y0 + rng.gen::<f64>() * (y1 - y0)];
            let dt2 = d2(u, t);
            if dt2 > r * r {
                continue;
            }
            if drop.index[k].any_within(u, dt2, Some(tagged)) {
                continue;
            }
            let beaten = rivals.iter().any(|(m, scale, ratio)| {
                let rm = scale * dt2.powf(0.5 * ratio);
                drop.index[*m].any_within(u, rm * rm, None)
            });
            if !beaten {
                count += 1;
            }
        }
        count
    }

    /// Users in the cell of an extra class-`class` AP placed at the origin.
    fn typical_cell_users(&self, class: ClassId, trial: u64) -> Result<u64> {
        let k = self.open.iter().position(|c| c.id == class).ok_or(Error::NotServing(class))?;
        let offset = self.grid_offset(trial);
        let drop = self.drop_classes(&self.open, trial, offset, Some(k));
        let tagged = (drop.points[k].len() - 1) as u32;
        let mut rng = stream(self.settings.seed, trial, Purpose::Palm, 0);
        Ok(self.cell_users(&drop, k, tagged, &mut rng))
    }

    fn pool(&self) -> Result<Option<rayon::ThreadPool>> {
        if self.settings.parallel_workers == 0 {
            return Ok(None);
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.settings.parallel_workers)
            .build()
            .map(Some)
            .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))
    }

    fn map_trials<R: Send, F: Fn(u64) -> R + Sync>(&self, f: F) -> Result<Vec<R>> {
        let n = self.settings.trials as u64;
        let work = || (0..n).into_par_iter().map(&f).collect::<Vec<R>>();
        Ok(match self.pool()? {
            Some(pool) => pool.install(work),
            None => work(),
        })
    }
}

/// Runs trial `trial_index` of the batch described by `settings`.
pub fn run_trial(config: &NetworkConfig<f64>, settings: &SimSettings, trial_index: u64) -> Result<TrialRecord> {
    Ok(Simulator::new(config, settings)?.run_trial(trial_index))
}

/// Runs all trials and returns their records in trial order.
pub fn run_trials(config: &NetworkConfig<f64>, settings: &SimSettings) -> Result<Vec<TrialRecord>> {
    let sim = Simulator::new(config, settings)?;
    sim.map_trials(|i| sim.run_trial(i))
}

pub fn run_batch(config: &NetworkConfig<f64>, settings: &SimSettings) -> Result<EmpiricalSummary> {
    if settings.trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    let records = run_trials(config, settings)?;
    Ok(EmpiricalSummary::from_records(config, settings, &records))
}

/// Number of users, beyond a probe user, in the cell of a class-`class` AP
/// placed at the origin, one value per trial. The load seen by a typical
/// (not area-biased) AP.
pub fn sample_typical_cell_load(
    config: &NetworkConfig<f64>,
    settings: &SimSettings,
    class: ClassId,
) -> Result<Vec<u64>> {
    let sim = Simulator::new(config, settings)?;
    sim.map_trials(|i| sim.typical_cell_users(class, i)).and_then(|v| v.into_iter().collect())
}

/// Sorted samples of one serving class.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ClassSamples {
    pub sinr: Vec<f64>,
    pub rate: Vec<f64>,
}

fn count_above(sorted: &[f64], x: f64) -> usize {
    sorted.len() - sorted.partition_point(|v| *v <= x)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmpiricalSummary {
    pub sinr_ccdf: CcdfCurve<f64>,
    pub rate_ccdf: CcdfCurve<f64>,
    pub association_freq: BTreeMap<ClassId, f64>,
    /// Histogram of other users at the tagged AP (`load − 1`), per serving class.
    pub load_histogram: BTreeMap<ClassId, Vec<u64>>,
    pub mean_cell_area: BTreeMap<ClassId, f64>,
    pub trial_count: usize,
    /// Trials without any open AP in the window; counted as not covered.
    pub empty_trials: usize,
    /// Trials whose serving distance exceeded a quarter of the window.
    pub far_serving_trials: usize,
    #[serde(skip)]
    pub samples: BTreeMap<ClassId, ClassSamples>,
}

/// SINR grid of the summary CCDF: −20 dB to 40 dB in 1 dB steps, linear.
pub fn default_sinr_grid() -> Vec<f64> {
    (-20..=40).map(|db| 10f64.powf(db as f64 / 10.0)).collect()
}

/// Rate grid of the summary CCDF: 1 kbps to 1 Gbps, ten points per decade.
pub fn default_rate_grid() -> Vec<f64> {
    (30..=90).map(|i| 10f64.powf(i as f64 / 10.0)).collect()
}

impl EmpiricalSummary {
    pub fn from_records(config: &NetworkConfig<f64>, settings: &SimSettings, records: &[TrialRecord]) -> Self {
        let trial_count = records.len();
        let mut samples: BTreeMap<ClassId, ClassSamples> = BTreeMap::new();
        let mut load_histogram: BTreeMap<ClassId, Vec<u64>> = BTreeMap::new();
        let mut empty_trials = 0;
        let mut far = 0;
        let mut totals = vec![0usize; config.classes.len()];
        for r in records {
            for (t, c) in totals.iter_mut().zip(&r.ap_counts) {
                *t += c;
            }
            let Some(o) = r.outcome else {
                empty_trials += 1;
                continue;
            };
            if o.distance_km > 0.25 * settings.window_km {
                far += 1;
            }
            let s = samples.entry(o.serving).or_default();
            s.sinr.push(o.sinr_linear);
            s.rate.push(o.rate_bps);
            let h = load_histogram.entry(o.serving).or_default();
            let other = (o.load - 1) as usize;
            if h.len() <= other {
                h.resize(other + 1, 0);
            }
            h[other] += 1;
        }
        if far > 0 {
            log::warn!("{far} trials served from beyond a quarter of the window; enlarge the window");
        }
        for s in samples.values_mut() {
            s.sinr.sort_by(f64::total_cmp);
            s.rate.sort_by(f64::total_cmp);
        }
        let n = trial_count.max(1) as f64;
        let association_freq: BTreeMap<ClassId, f64> =
            samples.iter().map(|(id, s)| (*id, s.sinr.len() as f64 / n)).collect();
        let w2 = settings.window_km * settings.window_km;
        let mean_cell_area = association_freq
            .iter()
            .filter_map(|(id, f)| {
                let slot = config.classes.iter().position(|c| c.id == *id)?;
                let mean_count = totals[slot] as f64 / n;
                (mean_count > 0.0).then(|| (*id, f * w2 / mean_count))
            })
            .collect();
        let mut summary = Self {
            sinr_ccdf: CcdfCurve {
                axis: CcdfAxis::SinrLinear,
                grid: vec![],
                values: vec![],
                per_class: BTreeMap::new(),
            },
            rate_ccdf: CcdfCurve { axis: CcdfAxis::RateBps, grid: vec![], values: vec![], per_class: BTreeMap::new() },
            association_freq,
            load_histogram,
            mean_cell_area,
            trial_count,
            empty_trials,
            far_serving_trials: far,
            samples,
        };
        summary.sinr_ccdf = summary.sinr_ccdf_at(&default_sinr_grid());
        summary.rate_ccdf = summary.rate_ccdf_at(&default_rate_grid());
        summary
    }

    fn ccdf_at(&self, axis: CcdfAxis, grid: &[f64]) -> CcdfCurve<f64> {
        let n = self.trial_count.max(1) as f64;
        let pick = |s: &ClassSamples| -> Vec<f64> {
            match axis {
                CcdfAxis::SinrLinear => s.sinr.clone(),
                CcdfAxis::RateBps => s.rate.clone(),
            }
        };
        let mut values = vec![0.0; grid.len()];
        let mut per_class = BTreeMap::new();
        for (id, s) in &self.samples {
            let v = pick(s);
            let col: Vec<f64> = grid
                .iter()
                .enumerate()
                .map(|(g, x)| {
                    let above = count_above(&v, *x);
                    values[g] += above as f64 / n;
                    above as f64 / v.len() as f64
                })
                .collect();
            per_class.insert(*id, col);
        }
        CcdfCurve { axis, grid: grid.to_vec(), values, per_class }
    }

    /// Empirical `P(SINR > τ)` at each grid point.
    pub fn sinr_ccdf_at(&self, grid: &[f64]) -> CcdfCurve<f64> {
        self.ccdf_at(CcdfAxis::SinrLinear, grid)
    }

    /// Empirical `P(R > ρ)` at each grid point.
    pub fn rate_ccdf_at(&self, grid: &[f64]) -> CcdfCurve<f64> {
        self.ccdf_at(CcdfAxis::RateBps, grid)
    }

    /// Histogram of other users at the tagged AP over all serving classes.
    pub fn pooled_load_pmf(&self) -> Vec<f64> {
        let len = self.load_histogram.values().map(Vec::len).max().unwrap_or(0);
        let total: u64 = self.load_histogram.values().flatten().sum();
        let mut pmf = vec![0.0; len];
        for h in self.load_histogram.values() {
            for (n, c) in h.iter().enumerate() {
                pmf[n] += *c as f64 / total.max(1) as f64;
            }
        }
        pmf
    }
}

/// Total variation distance between two PMFs on `{0, 1, ...}`; missing
/// entries count as zero mass.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    let n = p.len().max(q.len());
    let at = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    let tail_p: f64 = 1.0 - p.iter().sum::<f64>();
    let tail_q: f64 = 1.0 - q.iter().sum::<f64>();
    0.5 * ((0..n).map(|i| (at(p, i) - at(q, i)).abs()).sum::<f64>() + (tail_p - tail_q).abs().max(0.0))
}
