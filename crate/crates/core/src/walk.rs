//! Granular venue migration: a four-dimensional lattice random walk with
//! per-axis measure, an indeterminacy gate, optional space/time pairing, and
//! a hexagonal sequence-time phase.

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::units::{planck_units, PlanckUnits};
use crate::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Random values consumed by every call to [`step`], migrating or not.
pub const DRAWS_PER_STEP: u64 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    /// Probability of a +1 migration on x, y, z, t.
    pub measures: [f64; 4],
    /// Probability that a venue migrates at all on a given step.
    pub indeterminacy: f64,
    /// Length quantum in meters.
    pub step_length: f64,
    /// Time quantum in seconds.
    pub step_time: f64,
    /// Pair every spatial migration with a ±1 time migration.
    pub ds2_conservation: bool,
    pub steps: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        let u = planck_units();
        Self {
            measures: [0.5; 4],
            indeterminacy: 1.0,
            step_length: u.l_p,
            step_time: u.t_p,
            ds2_conservation: false,
            steps: 100,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if let Some(m) = self.measures.iter().find(|m| !unit(**m)) {
            return Err(Error::Domain(format!("measure {m} not in [0, 1]")));
        }
        if !unit(self.indeterminacy) {
            return Err(Error::Domain(format!(
                "indeterminacy {} not in [0, 1]",
                self.indeterminacy
            )));
        }
        if self.steps == 0 {
            return Err(Error::Domain("steps must be at least 1".into()));
        }
        if !(self.step_length > 0.0 && self.step_time > 0.0) {
            return Err(Error::Domain("step quanta must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct VenueState {
    /// Position in units of the length quantum.
    pub spatial: [i64; 3],
    /// Coordinate time in units of the time quantum.
    pub t_coord: i64,
    /// Hexagonal sequence phase, 0..=5.
    pub tau_phase: u8,
    pub helix_rung: i64,
    /// Set after a step whose last time migration went backward; spatial
    /// measures are complemented while it is set.
    pub sequence_reversed: bool,
    pub space_migrations: u64,
    pub time_migrations: u64,
}

impl VenueState {
    pub fn at(spatial: [i64; 3], t_coord: i64) -> Self {
        Self {
            spatial,
            t_coord,
            ..Default::default()
        }
    }

    fn migrate_time(&mut self, dt: i64) {
        self.t_coord += dt;
        self.helix_rung += dt;
        self.tau_phase = (self.tau_phase + 1) % 6;
        self.time_migrations += 1;
        self.sequence_reversed = dt < 0;
    }
}

/// One migration opportunity. The indeterminacy coin gates space and time
/// together; exactly [`DRAWS_PER_STEP`] values are consumed from `rng`.
pub fn step(state: &VenueState, config: &WalkConfig, rng: &mut RngStream) -> VenueState {
    let base = rng.counter;
    rng.counter = rng.counter.wrapping_add(DRAWS_PER_STEP);
    let u = |k: u64| (rng.draw(base.wrapping_add(k)) >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    let mut s = *state;
    if u(0) >= config.indeterminacy {
        return s;
    }
    let sign = |x: f64, p: f64| if x < p { 1 } else { -1 };
    let reversed = s.sequence_reversed;
    for axis in 0..3 {
        let m = config.measures[axis];
        let m = if reversed { 1.0 - m } else { m };
        s.spatial[axis] += sign(u(1 + axis as u64), m);
        s.space_migrations += 1;
    }
    let mt = config.measures[3];
    if config.ds2_conservation {
        for k in 0..3 {
            s.migrate_time(sign(u(4 + k), mt));
        }
    } else {
        s.migrate_time(sign(u(7), mt));
    }
    s
}

/// Helix time `t̄ = t_c·e^{iτ}` of a venue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HelixTime {
    /// Coordinate time in seconds.
    pub t_c: f64,
    /// Sequence angle in radians.
    pub tau_angle: f64,
    pub complex_repr: Complex,
}

/// Each of the six phases spans 2π_p/6 of the hexagon, mapped onto the circle
/// by π/π_p.
pub fn helix_time(state: &VenueState, units: &PlanckUnits) -> HelixTime {
    let t_c = state.t_coord as f64 * units.t_p;
    let tau_angle = f64::from(state.tau_phase) * (2.0 * units.pi_p / 6.0) * (std::f64::consts::PI / units.pi_p);
    HelixTime {
        t_c,
        tau_angle,
        complex_repr: Complex::from_polar(1.0, tau_angle) * t_c,
    }
}

/// Sequence-phase cycle frequency at one transition per Planck time, 2π_p/t_p.
pub fn cycle_frequency(units: &PlanckUnits) -> f64 {
    2.0 * units.pi_p / units.t_p
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkSummary {
    pub walkers: u64,
    pub steps: u64,
    /// Terminal x, y, z, t of every walker, in quanta.
    pub terminal_positions: [Vec<i64>; 4],
    pub mean_displacement: [f64; 4],
    pub displacement_variance: [f64; 4],
    /// Fraction of single steps with |Δspatial| > |Δt_coord|.
    pub superluminal_fraction: f64,
    /// Same, over non-overlapping segments of `segment_length` steps.
    pub superluminal_fraction_segment: f64,
    pub segment_length: u64,
    pub space_migrations: u64,
    pub time_migrations: u64,
    /// True when every walker had equal space and time migration counts.
    pub migrations_paired: bool,
    pub merge_events: u64,
}

fn superluminal(a: &VenueState, b: &VenueState) -> bool {
    let d2: i64 = (0..3).map(|i| (b.spatial[i] - a.spatial[i]).pow(2)).sum();
    let dt = b.t_coord - a.t_coord;
    d2 > dt * dt
}

struct WalkerOutcome {
    terminal: VenueState,
    superluminal_steps: u64,
    superluminal_segments: u64,
    segments: u64,
}

fn run_one(config: &WalkConfig, mut rng: RngStream, segment: u64) -> WalkerOutcome {
    let mut s = VenueState::default();
    let mut seg_start = s;
    let (mut sl_steps, mut sl_segs, mut segs) = (0, 0, 0);
    for n in 1..=config.steps {
        let next = step(&s, config, &mut rng);
        sl_steps += u64::from(superluminal(&s, &next));
        s = next;
        if n % segment == 0 {
            sl_segs += u64::from(superluminal(&seg_start, &s));
            segs += 1;
            seg_start = s;
        }
    }
    WalkerOutcome {
        terminal: s,
        superluminal_steps: sl_steps,
        superluminal_segments: sl_segs,
        segments: segs,
    }
}

pub(crate) fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Domain(format!("thread pool: {e}")))
}

/// Independent walkers from the origin, walker `i` using `rng.child(i)`.
pub fn run_walk(config: &WalkConfig, walkers: u64, rng: RngStream, workers: usize) -> Result<WalkSummary> {
    run_walk_segmented(config, walkers, rng, workers, 10)
}

pub fn run_walk_segmented(
    config: &WalkConfig,
    walkers: u64,
    rng: RngStream,
    workers: usize,
    segment_length: u64,
) -> Result<WalkSummary> {
    config.validate()?;
    if walkers == 0 {
        return Err(Error::Domain("walkers must be at least 1".into()));
    }
    if segment_length == 0 {
        return Err(Error::Domain("segment length must be at least 1".into()));
    }
    let outcomes: Vec<WalkerOutcome> = pool(workers)?.install(|| {
        (0..walkers)
            .into_par_iter()
            .map(|i| run_one(config, rng.child(i), segment_length))
            .collect()
    });
    let n = walkers as f64;
    let mut terminal: [Vec<i64>; 4] = Default::default();
    for o in &outcomes {
        let t = &o.terminal;
        for axis in 0..3 {
            terminal[axis].push(t.spatial[axis]);
        }
        terminal[3].push(t.t_coord);
    }
    let mut mean = [0.0; 4];
    let mut var = [0.0; 4];
    for axis in 0..4 {
        let m = terminal[axis].iter().map(|&x| x as f64).sum::<f64>() / n;
        mean[axis] = m;
        var[axis] = terminal[axis].iter().map(|&x| (x as f64 - m).powi(2)).sum::<f64>() / n;
    }
    let segs: u64 = outcomes.iter().map(|o| o.segments).sum();
    Ok(WalkSummary {
        walkers,
        steps: config.steps,
        terminal_positions: terminal,
        mean_displacement: mean,
        displacement_variance: var,
        superluminal_fraction: outcomes.iter().map(|o| o.superluminal_steps).sum::<u64>() as f64
            / (n * config.steps as f64),
        superluminal_fraction_segment: if segs == 0 {
            0.0
        } else {
            outcomes.iter().map(|o| o.superluminal_segments).sum::<u64>() as f64 / segs as f64
        },
        segment_length,
        space_migrations: outcomes.iter().map(|o| o.terminal.space_migrations).sum(),
        time_migrations: outcomes.iter().map(|o| o.terminal.time_migrations).sum(),
        migrations_paired: outcomes
            .iter()
            .all(|o| o.terminal.space_migrations == o.terminal.time_migrations),
        merge_events: 0,
    })
}

/// CSV `walker_id,step,x,y,z,t,tau_phase` for the given walkers, step 0 included.
pub fn path_csv(config: &WalkConfig, walker_ids: &[u64], rng: RngStream) -> Result<Vec<u8>> {
    config.validate()?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["walker_id", "step", "x", "y", "z", "t", "tau_phase"])?;
    for &id in walker_ids {
        let mut r = rng.child(id);
        let mut s = VenueState::default();
        for n in 0..=config.steps {
            if n > 0 {
                s = step(&s, config, &mut r);
            }
            w.serialize((id, n, s.spatial[0], s.spatial[1], s.spatial[2], s.t_coord, s.tau_phase))?;
        }
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeSetup {
    /// Periodic box extent in x, y, z, t (sites).
    pub extent: [i64; 4],
    /// Start every walker at the origin instead of uniformly in the box.
    pub same_site_start: bool,
    /// Which walkers carry no energy; `None` means all. Only empty walkers merge.
    pub empty: Option<Vec<bool>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeReport {
    /// Sum over steps of coincident empty-walker pairs.
    pub merge_events: u64,
    pub steps: u64,
    pub walkers: u64,
    pub sites: u64,
}

fn wrap(x: i64, n: i64) -> i64 {
    x.rem_euclid(n)
}

/// Counts, after every step, the pairs of empty walkers sharing a site of the
/// periodic box (position and coordinate time).
pub fn merge_statistics(config: &WalkConfig, walkers: u64, setup: &MergeSetup, rng: RngStream) -> Result<MergeReport> {
    config.validate()?;
    if setup.extent.iter().any(|&e| e < 1) {
        return Err(Error::Domain("box extent must be positive on every axis".into()));
    }
    if let Some(e) = &setup.empty {
        if e.len() as u64 != walkers {
            return Err(Error::Domain("empty flags must cover every walker".into()));
        }
    }
    let ext = setup.extent;
    let place = rng.substream(rng.stream_id ^ 0x9E37_79B9_7F4A_7C15);
    let mut states: Vec<VenueState> = (0..walkers)
        .map(|i| {
            if setup.same_site_start {
                VenueState::default()
            } else {
                let mut p = place.child(i);
                let mut pick = |n: i64| (p.next_raw() % n as u64) as i64;
                VenueState::at([pick(ext[0]), pick(ext[1]), pick(ext[2])], pick(ext[3]))
            }
        })
        .collect();
    let mut streams: Vec<RngStream> = (0..walkers).map(|i| rng.child(i)).collect();
    let is_empty = |i: usize| setup.empty.as_ref().map_or(true, |e| e[i]);
    let mut total = 0u64;
    let mut occupancy: HashMap<[i64; 4], u64> = HashMap::new();
    for _ in 0..config.steps {
        occupancy.clear();
        for (i, (s, r)) in states.iter_mut().zip(streams.iter_mut()).enumerate() {
            *s = step(s, config, r);
            if is_empty(i) {
                let key = [
                    wrap(s.spatial[0], ext[0]),
                    wrap(s.spatial[1], ext[1]),
                    wrap(s.spatial[2], ext[2]),
                    wrap(s.t_coord, ext[3]),
                ];
                *occupancy.entry(key).or_default() += 1;
            }
        }
        total += occupancy.values().map(|&k| k * (k.saturating_sub(1)) / 2).sum::<u64>();
    }
    Ok(MergeReport {
        merge_events: total,
        steps: config.steps,
        walkers,
        sites: ext.iter().product::<i64>() as u64,
    })
}

/// How ±1 steps are scaled in a classical Wiener walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WienerScaling {
    /// X/√N on every step: the terminal value tends to the unit normal.
    Uniform,
    /// X/√i on step i, as printed; terminal variance is the harmonic number H_N.
    PerStep,
}

/// Terminal values of `walkers` classical (non-granular) Wiener walks of `n` steps.
pub fn wiener_terminals(
    n: u64,
    walkers: u64,
    scaling: WienerScaling,
    rng: RngStream,
    workers: usize,
) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    let inv_sqrt_n = 1.0 / (n as f64).sqrt();
    pool(workers)?.install(|| {
        Ok((0..walkers)
            .into_par_iter()
            .map(|i| {
                let mut r = rng.child(i);
                (1..=n)
                    .map(|k| {
                        let x = r.sign(0.5) as f64;
                        match scaling {
                            WienerScaling::Uniform => x * inv_sqrt_n,
                            WienerScaling::PerStep => x / (k as f64).sqrt(),
                        }
                    })
                    .sum()
            })
            .collect())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg(measures: [f64; 4], indeterminacy: f64, ds2: bool, steps: u64) -> WalkConfig {
        WalkConfig {
            measures,
            indeterminacy,
            ds2_conservation: ds2,
            steps,
            ..WalkConfig::default()
        }
    }

    #[test]
    fn frozen_when_determinate() {
        let c = cfg([0.5; 4], 0.0, true, 1000);
        let mut r = RngStream::new(1, 0);
        let mut s = VenueState::default();
        for _ in 0..1000 {
            s = step(&s, &c, &mut r);
        }
        assert_eq!(s, VenueState::default());
        assert_eq!(r.counter, 1000 * DRAWS_PER_STEP);
    }

    #[test]
    fn degenerate_measures_march() {
        let c = cfg([1.0; 4], 1.0, false, 50);
        let mut r = RngStream::new(2, 0);
        let mut s = VenueState::default();
        for n in 1..=50 {
            s = step(&s, &c, &mut r);
            assert_eq!(s.spatial, [n, n, n]);
            assert_eq!(s.t_coord, n);
        }
    }

    #[test]
    fn reversal_complements_space_measures() {
        // Time always backward: from the second step on, x measure 1 acts as 0.
        let c = cfg([1.0, 1.0, 1.0, 0.0], 1.0, false, 3);
        let mut r = RngStream::new(3, 0);
        let s1 = step(&VenueState::default(), &c, &mut r);
        assert_eq!(s1.spatial, [1, 1, 1]);
        assert!(s1.sequence_reversed);
        let s2 = step(&s1, &c, &mut r);
        assert_eq!(s2.spatial, [0, 0, 0]);
        assert_eq!(s2.t_coord, -2);
    }

    #[test]
    fn unbiased_variance_is_step_count() {
        let c = cfg([0.5; 4], 1.0, false, 100);
        let s = run_walk(&c, 1_000_000, RngStream::new(11, 0), 1).unwrap();
        for axis in 0..3 {
            let v = s.displacement_variance[axis];
            assert!((v - 100.0).abs() < 1.0, "axis {axis}: {v}");
        }
    }

    #[test]
    fn terminal_distribution_is_normal() {
        let c = cfg([0.5; 4], 1.0, false, 100);
        let s = run_walk(&c, 100_000, RngStream::new(12, 0), 1).unwrap();
        let xs: Vec<f64> = s.terminal_positions[0].iter().map(|&x| x as f64).collect();
        let (skew, kurt) = crate::spread::sample_skew_kurtosis(&xs);
        assert!(skew.abs() < 0.05, "skew {skew}");
        assert!(kurt.abs() < 0.1, "excess kurtosis {kurt}");
    }

    #[test]
    fn biased_mean() {
        // Forward-only time, so the x measure is never complemented.
        let c = cfg([0.6, 0.5, 0.5, 1.0], 1.0, false, 100);
        let walkers = 10_000;
        let s = run_walk(&c, walkers, RngStream::new(13, 0), 1).unwrap();
        // per-walker variance 4·p·(1−p)·steps = 96
        let sigma_mean = (96.0 / walkers as f64).sqrt();
        assert!((s.mean_displacement[0] - 20.0).abs() < 3.0 * sigma_mean);
    }

    #[test]
    fn paired_time_migrations_and_superluminal() {
        let c = cfg([0.5; 4], 1.0, true, 100);
        let s = run_walk(&c, 10_000, RngStream::new(14, 0), 1).unwrap();
        assert!(s.migrations_paired);
        assert_eq!(s.space_migrations, s.time_migrations);
        assert!(s.superluminal_fraction > 0.0);
        assert!(s.superluminal_fraction_segment > 0.0);
        assert!(s.superluminal_fraction <= 1.0);
    }

    #[test]
    fn variance_additivity() {
        let one = run_walk(&cfg([0.5; 4], 1.0, false, 1), 200_000, RngStream::new(15, 0), 1).unwrap();
        let many = run_walk(&cfg([0.5; 4], 1.0, false, 40), 200_000, RngStream::new(16, 0), 1).unwrap();
        let ratio = many.displacement_variance[1] / (40.0 * one.displacement_variance[1]);
        assert!((ratio - 1.0).abs() < 0.02, "{ratio}");
    }

    #[test]
    fn worker_count_is_invisible() {
        let c = cfg([0.55, 0.5, 0.45, 0.5], 0.8, true, 30);
        let a = run_walk(&c, 5_000, RngStream::new(17, 0), 1).unwrap();
        let b = run_walk(&c, 5_000, RngStream::new(17, 0), 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn helix() {
        let u = planck_units();
        let mut s = VenueState::at([0; 3], 5);
        let h = helix_time(&s, &u);
        assert_eq!(h.complex_repr, Complex::new(5.0 * u.t_p, 0.0));
        s.tau_phase = 2;
        let h = helix_time(&s, &u);
        assert!((h.complex_repr.norm() - h.t_c.abs()).abs() <= 1e-15 * h.t_c.abs());
        assert!((h.tau_angle - 2.0 * std::f64::consts::PI / 3.0).abs() < 1e-15);
        // six transitions return the phase to its start
        let c = cfg([0.5; 4], 1.0, false, 6);
        let mut r = RngStream::new(4, 0);
        let mut v = VenueState::default();
        for _ in 0..6 {
            v = step(&v, &c, &mut r);
        }
        assert_eq!(v.tau_phase, 0);
        let f = cycle_frequency(&u);
        assert!((f / 1.113e44 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn merges_trivial_cases() {
        let setup = MergeSetup {
            extent: [10, 10, 10, 1],
            same_site_start: true,
            empty: None,
        };
        let r = merge_statistics(&cfg([0.5; 4], 0.5, false, 100), 1, &setup, RngStream::new(1, 0)).unwrap();
        assert_eq!(r.merge_events, 0);
        let r = merge_statistics(&cfg([0.5; 4], 0.0, false, 250), 2, &setup, RngStream::new(1, 0)).unwrap();
        assert_eq!(r.merge_events, 250);
        let flagged = MergeSetup {
            empty: Some(vec![true, false]),
            ..setup
        };
        let r = merge_statistics(&cfg([0.5; 4], 0.0, false, 250), 2, &flagged, RngStream::new(1, 0)).unwrap();
        assert_eq!(r.merge_events, 0);
    }

    #[test]
    fn wiener_scalings() {
        let w = wiener_terminals(10_000, 4_000, WienerScaling::Uniform, RngStream::new(6, 0), 1).unwrap();
        let var = w.iter().map(|x| x * x).sum::<f64>() / w.len() as f64;
        // sampling sd of a variance estimate from 4000 normals is sqrt(2/4000) ≈ 0.022
        assert!((var - 1.0).abs() < 0.08, "{var}");
        let w = wiener_terminals(10_000, 4_000, WienerScaling::PerStep, RngStream::new(7, 0), 1).unwrap();
        let var = w.iter().map(|x| x * x).sum::<f64>() / w.len() as f64;
        let h: f64 = (1..=10_000).map(|k| 1.0 / k as f64).sum();
        assert!((var / h - 1.0).abs() < 0.08, "{var} vs H_N {h}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn phase_and_pairing_invariants(
            seed in any::<u64>(),
            m in proptest::array::uniform4(0.0..=1.0f64),
            ind in 0.0..=1.0f64,
            ds2 in any::<bool>(),
        ) {
            let c = cfg(m, ind, ds2, 200);
            let mut r = RngStream::new(seed, 0);
            let mut s = VenueState::default();
            for _ in 0..200 {
                s = step(&s, &c, &mut r);
                prop_assert!(s.tau_phase < 6);
                prop_assert_eq!(s.helix_rung, s.t_coord);
                if ds2 {
                    prop_assert_eq!(s.space_migrations, s.time_migrations);
                } else {
                    prop_assert_eq!(s.space_migrations, 3 * s.time_migrations);
                }
                prop_assert_eq!(u64::from(s.tau_phase), s.time_migrations % 6);
            }
        }
    }
}
