//! The `sgst` command line: one subcommand per experiment, each writing CSV or
//! JSON data plus a single `manifest.json` into the output directory.
//!
//! Parameters can also come from `--config FILE`, either a flat `key = value`
//! file using the long flag names or a previous run's `manifest.json`. Flags
//! given on the command line override the file.

use crate::compton::{self, OscillationConfig, Schedule, SweepSettings};
use crate::error::{Error, Result};
use crate::geometry::{self, GeodesicState, MetricField, StochasticKick, VolumeProbe};
use crate::gravity::{self, DwellSettings, IndeterminacyField};
use crate::manifest::RunManifest;
use crate::metric::{self, InterferenceVariant};
use crate::rng::RngStream;
use crate::search::{self, Constraints, ReferenceMetric, SearchSpec, Subspace};
use crate::spread::{self, ComponentLaw, GridDistribution, MetricFluctuationSpec};
use crate::units::planck_units;
use crate::walk::{self, MergeSetup, WalkConfig, WienerScaling};
use clap::{ArgAction, Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use serde_json::json;
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(name = "sgst", version, about = "Stochastic granular space-time experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Master RNG seed (integer)
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Worker threads (count); never changes outputs
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Output directory (path)
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Flat key=value file or a previous manifest.json (path)
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Density of two superposed metrics across a phase grid
    Interference(InterferenceArgs),
    /// Enumerate coefficient matrices that make the reference metric real
    Search(SearchArgs),
    /// Check the eight printed coordinate tables against their F metrics
    VerifyF(VerifyFArgs),
    /// Numerical plane-wave Ricci tensor against its closed forms
    Ricci(RicciArgs),
    /// Integrate a geodesic, optionally with venue-migration noise
    Geodesic(GeodesicArgs),
    /// Iterated self-convolution of a single-step distribution
    Spread(SpreadArgs),
    /// Granular venue random walks
    Walk(WalkArgs),
    /// Variance of averaged metric fluctuations and the uncertainty product
    Uncertainty(UncertaintyArgs),
    /// One Compton oscillation run with periodogram detection
    Compton(ComptonArgs),
    /// Detection probability across a Ţ grid and the fitted threshold
    Sweep(SweepArgs),
    /// Schwarzschild radius and line element checks
    Gravity(GravityArgs),
    /// Radial migration Monte Carlo and the 1/u dwell profile
    Dwell(DwellArgs),
    /// Covariant coordinate divergence as r approaches r_s
    DemoCovariant(DemoCovariantArgs),
}

#[derive(Debug, Args)]
pub struct InterferenceArgs {
    #[command(flatten)]
    pub common: Common,
    /// two_slit_1976 or plane_wave_2016
    #[arg(long, default_value = "plane_wave_2016")]
    pub variant: String,
    /// Phase of the second component (radians)
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub beta: f64,
    /// start:end:count phase grid, endpoints included (radians)
    #[arg(long, default_value = "0:6.283185307179586:256")]
    pub alpha_grid: String,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[command(flatten)]
    pub common: Common,
    /// full, zt-rows (alias zt-block, 5^8) or zt-core (5^4)
    #[arg(long, default_value = "zt-block")]
    pub subspace: String,
    /// Reference metric: two_slit_1976 or plane_wave_2016
    #[arg(long, default_value = "two_slit_1976")]
    pub reference: String,
    /// Visit every n-th index (count)
    #[arg(long, default_value_t = 1)]
    pub stride: u64,
    /// First index, inclusive (index)
    #[arg(long)]
    pub start: Option<u64>,
    /// Last index, exclusive (index)
    #[arg(long)]
    pub end: Option<u64>,
    /// Also require det W ≠ 0 (flag)
    #[arg(long)]
    pub require_invertible: bool,
    /// Require real x,y,z / imaginary t coefficients in x',y',z' and the reverse in t' (flag)
    #[arg(long)]
    pub real_space_rows: bool,
    /// Keep at most this many hit matrices in the report (count)
    #[arg(long, default_value_t = 32)]
    pub exemplars: usize,
    /// Resume/save progress in this file (path)
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Samples between checkpoint saves (count)
    #[arg(long, default_value_t = 1 << 24)]
    pub checkpoint_every: u64,
}

#[derive(Debug, Args)]
pub struct VerifyFArgs {
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct RicciArgs {
    #[command(flatten)]
    pub common: Common,
    /// Random (k, ω, z, t) samples; k, ω in [0.5, 2] (1/length), z, t in [−π, π] (length)
    #[arg(long, default_value_t = 10)]
    pub samples: usize,
    /// Perturbation amplitude for the first-order R_zt check (dimensionless)
    #[arg(long, default_value_t = 1e-3)]
    pub b: f64,
}

#[derive(Debug, Args)]
pub struct GeodesicArgs {
    #[command(flatten)]
    pub common: Common,
    /// minkowski, plane_wave, perturbed, schwarzschild or f1..f8
    #[arg(long, default_value = "schwarzschild")]
    pub metric: String,
    /// Wavenumber (1/length)
    #[arg(long, default_value_t = 1.0)]
    pub k: f64,
    /// Angular frequency (1/time)
    #[arg(long, default_value_t = 0.5)]
    pub omega: f64,
    /// Perturbation amplitude (dimensionless)
    #[arg(long, default_value_t = 1e-3)]
    pub b: f64,
    /// Schwarzschild radius (length)
    #[arg(long, default_value_t = 1.0)]
    pub r_s: f64,
    /// Start position x,y,z,t or θ,φ,r,t; default: circular orbit at r = 100 r_s (coordinates)
    #[arg(long, allow_hyphen_values = true)]
    pub position: Option<String>,
    /// Start velocity dx/ds components; default: the circular orbit velocity (coordinates per proper time)
    #[arg(long, allow_hyphen_values = true)]
    pub velocity: Option<String>,
    /// Integration steps (count)
    #[arg(long, default_value_t = 10_000)]
    pub steps: usize,
    /// Proper-time step (time)
    #[arg(long, default_value_t = 1.0)]
    pub ds: f64,
    /// Add a venue-migration displacement after every step (flag)
    #[arg(long)]
    pub stochastic: bool,
    /// Migration probability per step for --stochastic (probability)
    #[arg(long, default_value_t = 1.0)]
    pub indeterminacy: f64,
    /// Displacement per migration for --stochastic (coordinates)
    #[arg(long, default_value_t = 1e-6)]
    pub quantum: f64,
    /// Also evaluate the bundle volume residual at the start point (flag)
    #[arg(long)]
    pub probe: bool,
    /// Bundle offset ε for --probe (coordinates)
    #[arg(long, default_value_t = 1e-3)]
    pub epsilon: f64,
    /// Half window Δ for --probe (proper time)
    #[arg(long, default_value_t = 2e-2)]
    pub window: f64,
}

#[derive(Debug, Args)]
pub struct SpreadArgs {
    #[command(flatten)]
    pub common: Common,
    /// Single-step law: uniform:LO:HI (steps), gaussian:SIGMA (bins) or weights:W0,W1,... (relative)
    #[arg(long, default_value = "uniform:-1:1", allow_hyphen_values = true)]
    pub d1: String,
    /// Number of convolutions (count)
    #[arg(long, default_value_t = 200)]
    pub n: u64,
}

#[derive(Debug, Args)]
pub struct WalkArgs {
    #[command(flatten)]
    pub common: Common,
    /// Walkers (count)
    #[arg(long, default_value_t = 1000)]
    pub walkers: u64,
    /// Steps per walker (count)
    #[arg(long, default_value_t = 1000)]
    pub steps: u64,
    /// +1 probabilities on x,y,z,t (probabilities)
    #[arg(long, default_value = "0.5,0.5,0.5,0.5")]
    pub measures: String,
    /// Migration probability per step (probability)
    #[arg(long, default_value_t = 1.0)]
    pub indeterminacy: f64,
    /// Pair every spatial migration with a time migration (flag)
    #[arg(long)]
    pub ds2: bool,
    /// Segment length for the superluminal fraction (steps)
    #[arg(long, default_value_t = 10)]
    pub segment: u64,
    /// Write full paths of the first N walkers (count)
    #[arg(long, default_value_t = 0)]
    pub paths: u64,
    /// Periodic box x,y,z,t for merge statistics (sites)
    #[arg(long)]
    pub merge_extent: Option<String>,
    /// Also run classical Wiener walks of this many steps (count)
    #[arg(long)]
    pub wiener_steps: Option<u64>,
    /// uniform (X/√N) or per_step (X/√i)
    #[arg(long, default_value = "uniform")]
    pub wiener_scaling: String,
}

#[derive(Debug, Args)]
pub struct UncertaintyArgs {
    #[command(flatten)]
    pub common: Common,
    /// normal, uniform or bimodal
    #[arg(long, default_value = "normal")]
    pub law: String,
    /// Component standard deviation (metric units)
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Cell counts for the variance-vs-m fit (counts)
    #[arg(long, default_value = "1,10,100,1000")]
    pub m_points: String,
    /// Volumes for the uncertainty product (cells)
    #[arg(long, default_value = "1,2,4,8,16")]
    pub volumes: String,
    /// Cells per unit volume (1/volume)
    #[arg(long, default_value_t = 16.0)]
    pub cells_per_volume: f64,
    /// Covariant momentum scale p (momentum units)
    #[arg(long, default_value_t = 1.0)]
    pub p_cov: f64,
    /// Monte Carlo samples per point (count)
    #[arg(long, default_value_t = 20_000)]
    pub samples: u64,
}

#[derive(Debug, Args)]
pub struct ComptonArgs {
    #[command(flatten)]
    pub common: Common,
    /// Half period Ţ (Planck times); ignored when --mass is given
    #[arg(long, default_value_t = 32.0)]
    pub t_bar: f64,
    /// Derive Ţ from this mass (kg)
    #[arg(long)]
    pub mass: Option<f64>,
    /// Probability a step follows the drive (probability)
    #[arg(long, default_value_t = 1.0)]
    pub measure: f64,
    /// Rotation axes, 1 or 3 (count)
    #[arg(long, default_value_t = 1)]
    pub axes: u32,
    /// Series length (Planck times)
    #[arg(long, default_value_t = 4096)]
    pub steps: usize,
    /// Detection threshold on peak/median power (ratio)
    #[arg(long, default_value_t = 5.0)]
    pub snr: f64,
    /// round-robin or simultaneous
    #[arg(long, default_value = "round-robin")]
    pub schedule: String,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    /// Smallest Ţ (Planck times)
    #[arg(long, default_value_t = 0.1)]
    pub t_min: f64,
    /// Largest Ţ (Planck times)
    #[arg(long, default_value_t = 1000.0)]
    pub t_max: f64,
    /// Log-spaced grid points (count)
    #[arg(long, default_value_t = 17)]
    pub points: usize,
    /// Trials per grid point (count)
    #[arg(long, default_value_t = 20)]
    pub trials: u64,
    /// Probability a step follows the drive (probability)
    #[arg(long, default_value_t = 0.7)]
    pub measure: f64,
    /// Rotation axes, 1 or 3 (count)
    #[arg(long, default_value_t = 3)]
    pub axes: u32,
    /// Detection threshold on peak/median power (ratio)
    #[arg(long, default_value_t = 5.0)]
    pub snr: f64,
    /// Minimum series length, raised to 64·Ţ and a power of two (Planck times)
    #[arg(long, default_value_t = 1 << 14)]
    pub min_steps: usize,
    /// round-robin or simultaneous
    #[arg(long, default_value = "round-robin")]
    pub schedule: String,
}

#[derive(Debug, Args)]
pub struct GravityArgs {
    #[command(flatten)]
    pub common: Common,
    /// Mass for the Schwarzschild radius (kg); default: the Planck mass
    #[arg(long)]
    pub mass: Option<f64>,
    /// Constant k in R_s = kGm/c² (dimensionless)
    #[arg(long, default_value_t = 2.0)]
    pub k: f64,
    /// r_s used for the line-element table (length)
    #[arg(long, default_value_t = 1.0)]
    pub r_s: f64,
    /// Radii in the line-element table, from 1.001 r_s to 1000 r_s (count)
    #[arg(long, default_value_t = 10_000)]
    pub radii: usize,
}

#[derive(Debug, Args)]
pub struct DwellArgs {
    #[command(flatten)]
    pub common: Common,
    /// Indeterminacy radius (lattice steps)
    #[arg(long, default_value_t = 100.0)]
    pub r_s: f64,
    /// Start radius (lattice steps)
    #[arg(long, default_value_t = 300)]
    pub start_r: i64,
    /// Walkers (count)
    #[arg(long, default_value_t = 100_000)]
    pub walkers: u64,
    /// Steps per walker (count)
    #[arg(long, default_value_t = 10_000)]
    pub steps: u64,
    /// Bin width (lattice steps)
    #[arg(long, default_value_t = 10)]
    pub bin_width: i64,
    /// Lower edge of the u band used in the fit (dimensionless)
    #[arg(long, default_value_t = 0.1)]
    pub u_min: f64,
    /// Upper edge of the u band used in the fit (dimensionless)
    #[arg(long, default_value_t = 0.9)]
    pub u_max: f64,
}

#[derive(Debug, Args)]
pub struct DemoCovariantArgs {
    #[command(flatten)]
    pub common: Common,
    /// Outer radius r̄ (length)
    #[arg(long, default_value_t = 2.0)]
    pub r_bar: f64,
    /// Schwarzschild radius (length)
    #[arg(long, default_value_t = 1.0)]
    pub r_s: f64,
    /// Rows (count)
    #[arg(long, default_value_t = 25)]
    pub samples: usize,
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Interference(a) => &a.common,
            Command::Search(a) => &a.common,
            Command::VerifyF(a) => &a.common,
            Command::Ricci(a) => &a.common,
            Command::Geodesic(a) => &a.common,
            Command::Spread(a) => &a.common,
            Command::Walk(a) => &a.common,
            Command::Uncertainty(a) => &a.common,
            Command::Compton(a) => &a.common,
            Command::Sweep(a) => &a.common,
            Command::Gravity(a) => &a.common,
            Command::Dwell(a) => &a.common,
            Command::DemoCovariant(a) => &a.common,
        }
    }
}

/// Output directory plus the manifest being assembled for it.
struct Run {
    dir: PathBuf,
    manifest: RunManifest,
    summary: serde_json::Map<String, serde_json::Value>,
}

impl Run {
    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        std::fs::write(self.dir.join(name), bytes)?;
        self.manifest.record_output(name, bytes);
        Ok(())
    }

    fn json(&mut self, name: &str, value: &impl serde::Serialize) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    fn note(&mut self, key: &str, value: serde_json::Value) {
        self.summary.insert(key.to_string(), value);
    }
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| Error::Domain(format!("{what}: cannot parse '{p}' in '{s}'")))
        })
        .collect()
}

fn parse_array<const N: usize, T: std::str::FromStr + Copy>(s: &str, what: &str) -> Result<[T; N]> {
    let v = parse_list::<T>(s, what)?;
    v.try_into()
        .map_err(|_| Error::Domain(format!("{what}: expected {N} comma-separated values, got '{s}'")))
}

fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || Error::Domain(format!("alpha grid '{s}' is not start:end:count"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].parse().map_err(|_| bad())?;
    let b: f64 = parts[1].parse().map_err(|_| bad())?;
    let n: usize = parts[2].parse().map_err(|_| bad())?;
    match n {
        0 => Err(bad()),
        1 => Ok(vec![a]),
        _ => Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()),
    }
}

fn parse_d1(s: &str) -> Result<GridDistribution> {
    let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
    match kind {
        "uniform" => {
            let [lo, hi] = parse_array::<2, i64>(&rest.replace(':', ","), "uniform bounds")?;
            GridDistribution::uniform_steps(lo, hi, 1.0)
        }
        "gaussian" => {
            let sigma: f64 = rest
                .parse()
                .map_err(|_| Error::Domain(format!("gaussian sigma '{rest}'")))?;
            GridDistribution::gaussian(sigma, 1.0, 6.0 * sigma)
        }
        "weights" => GridDistribution::from_weights(0.0, 1.0, &parse_list::<f64>(rest, "weights")?),
        _ => Err(Error::Domain(format!("unknown single-step law '{s}'"))),
    }
}

fn interference(a: &InterferenceArgs, run: &mut Run) -> Result<()> {
    let variant = InterferenceVariant::parse(&a.variant)?;
    let grid = parse_grid(&a.alpha_grid)?;
    let pts = metric::interference_pattern(&grid, a.beta, variant)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["alpha", "beta", "density", "variant"])?;
    let mut max_err: f64 = 0.0;
    for p in &pts {
        w.serialize((p.alpha, p.beta, p.density, variant.name()))?;
        max_err = max_err.max((p.density - variant.closed_form(p.alpha - p.beta)).abs());
    }
    run.write(
        "interference.csv",
        &w.into_inner().map_err(|e| Error::Io(e.into_error()))?,
    )?;
    run.note("rows", json!(pts.len()));
    run.note("max_closed_form_error", json!(max_err));
    Ok(())
}

fn search_cmd(a: &SearchArgs, run: &mut Run) -> Result<()> {
    let subspace = Subspace::parse(&a.subspace)?;
    let mut spec = SearchSpec::new(subspace);
    spec.reference = ReferenceMetric::parse(&a.reference)?;
    spec.sample_stride = a.stride;
    spec.index_range = (a.start.unwrap_or(0), a.end.unwrap_or(subspace.size()));
    spec.constraints = Constraints {
        require_invertible: a.require_invertible,
        require_real_space_rows: a.real_space_rows,
        ..Constraints::default()
    };
    spec.exemplar_cap = a.exemplars;
    let report = match &a.checkpoint {
        Some(path) => search::run_search_checkpointed(&spec, a.common.workers, path, a.checkpoint_every)?,
        None => search::run_search(&spec, a.common.workers)?,
    };
    run.json("search_report.json", &report)?;
    run.write("hits.csv", &search::hits_csv(&report)?)?;
    run.note("candidates_examined", json!(report.candidates_examined));
    run.note("real_metric_hits", json!(report.real_metric_hits));
    run.note("hit_rate", json!(report.hit_rate()));
    run.note("wall_time_s", json!(report.wall_time));
    if report.wall_time > 0.0 {
        run.note(
            "candidates_per_s",
            json!(report.candidates_examined as f64 / report.wall_time),
        );
    }
    Ok(())
}

fn verify_f(run: &mut Run) -> Result<()> {
    let v = search::verify_f_transforms();
    run.json("f_verification.json", &v)?;
    let matched = v.iter().filter(|r| r.matched.is_some()).count();
    run.note("tables_matched", json!(matched));
    run.note("tables", json!(v.len()));
    Ok(())
}

fn ricci_cmd(a: &RicciArgs, run: &mut Run) -> Result<()> {
    let mut rng = RngStream::new(a.common.seed, 0);
    let samples: Vec<(f64, f64, f64, f64)> = (0..a.samples)
        .map(|_| {
            let k = 0.5 + 1.5 * rng.uniform();
            let w = 0.5 + 1.5 * rng.uniform();
            let z = std::f64::consts::PI * (2.0 * rng.uniform() - 1.0);
            let t = std::f64::consts::PI * (2.0 * rng.uniform() - 1.0);
            (k, w, z, t)
        })
        .collect();
    let rows = geometry::ricci_plane_wave_comparison(&samples)?;
    run.write("ricci.csv", &geometry::ricci_comparison_csv(&rows)?)?;
    let worst = rows.iter().map(|r| r.rel_err).fold(0.0, f64::max);
    run.note("convention", json!(geometry::ricci_convention()?));
    run.note("max_rel_err", json!(worst));
    if let Some(&(k, w, z, t)) = samples.first() {
        let c1 = geometry::perturbed_first_order(k, w, [0.0, 0.0, z, t], a.b, (2, 3))?;
        let e = crate::Complex::from_polar(1.0, -(k * z - w * t));
        let target = e * (2.0 * k * w);
        let alt = e * (-k * w);
        run.note(
            "perturbed_rzt_first_order",
            json!({
                "computed": [c1.re, c1.im],
                "rel_err_vs_2kw_exp": (c1 - target).norm() / target.norm(),
                "rel_err_vs_minus_kw_exp": (c1 - alt).norm() / alt.norm(),
            }),
        );
    }
    Ok(())
}

fn field_for(a: &GeodesicArgs) -> Result<MetricField> {
    match a.metric.as_str() {
        "minkowski" => Ok(geometry::minkowski_field()),
        "plane_wave" => Ok(geometry::plane_wave_field(a.k, a.omega)),
        "perturbed" => geometry::perturbed_field(a.k, a.omega, a.b),
        "schwarzschild" => Ok(gravity::assemble_line_element(a.r_s)?.metric_field()),
        f if f.starts_with('f') && f.len() == 2 => {
            let idx: usize = f[1..]
                .parse()
                .map_err(|_| Error::Domain(format!("unknown metric '{f}'")))?;
            geometry::f_metric_field(idx.wrapping_sub(1), a.k, a.omega)
        }
        other => Err(Error::Domain(format!("unknown metric '{other}'"))),
    }
}

fn geodesic_cmd(a: &GeodesicArgs, run: &mut Run) -> Result<()> {
    let field = field_for(a)?;
    let (position, velocity) = if a.metric == "schwarzschild" && a.position.is_none() && a.velocity.is_none() {
        let le = gravity::assemble_line_element(a.r_s)?;
        let r = 100.0 * a.r_s;
        run.note(
            "kepler_period",
            json!(2.0 * std::f64::consts::PI / le.orbital_frequency(r)),
        );
        (
            [std::f64::consts::FRAC_PI_2, 0.0, r, 0.0],
            le.circular_orbit_velocity(r)?,
        )
    } else {
        let p = parse_array::<4, f64>(a.position.as_deref().unwrap_or("0,0,0,0"), "position")?;
        let v = parse_array::<4, f64>(a.velocity.as_deref().unwrap_or("0,0,0,1"), "velocity")?;
        (p, v)
    };
    if !(a.ds > 0.0) {
        return Err(Error::Domain(format!("ds must be positive, got {}", a.ds)));
    }
    let start = GeodesicState::real(position, velocity);
    let kick = a.stochastic.then(|| StochasticKick {
        walk: WalkConfig {
            indeterminacy: a.indeterminacy,
            steps: a.steps as u64,
            ..WalkConfig::default()
        },
        rng: RngStream::new(a.common.seed, 0),
        quantum: [a.quantum; 4],
    });
    let traj = geometry::geodesic_integrate(&field, start, a.steps, a.ds, kick)?;
    run.write("geodesic.csv", &geometry::trajectory_csv(&traj)?)?;
    let first = geometry::norm_sq(&field, &start.position, &start.velocity);
    let last = traj.states.last().expect("start state");
    let end = geometry::norm_sq(&field, &last.position, &last.velocity);
    run.note("norm_drift", json!((end - first).norm()));
    run.note("truncated", json!(traj.diagnostic));
    if a.probe {
        let probe = VolumeProbe::static_observer(&field, position, a.epsilon, a.window);
        let v = geometry::volume_evolution_residual(&field, &probe)?;
        run.note(
            "volume_probe",
            json!({
                "lhs": [v.lhs.re, v.lhs.im],
                "rhs": [v.rhs.re, v.rhs.im],
                "flat_term": [v.flat_term.re, v.flat_term.im],
                "tidal_scale": v.tidal_scale,
                "residual": v.residual,
            }),
        );
    }
    Ok(())
}

fn spread_cmd(a: &SpreadArgs, run: &mut Run) -> Result<()> {
    let d1 = parse_d1(&a.d1)?;
    let r = spread::iterated_spread(&d1, a.n)?;
    run.write("spread.csv", &spread::spread_csv(&r.series)?)?;
    let last = r.series.last().copied();
    run.note("normalized_slope", json!(r.normalized_slope));
    run.note("final", json!(last));
    Ok(())
}

fn walk_cmd(a: &WalkArgs, run: &mut Run) -> Result<()> {
    let cfg = WalkConfig {
        measures: parse_array::<4, f64>(&a.measures, "measures")?,
        indeterminacy: a.indeterminacy,
        ds2_conservation: a.ds2,
        steps: a.steps,
        ..WalkConfig::default()
    };
    let rng = RngStream::new(a.common.seed, 0);
    let summary = walk::run_walk_segmented(&cfg, a.walkers, rng, a.common.workers, a.segment)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["walker_id", "x", "y", "z", "t"])?;
    let tp = &summary.terminal_positions;
    for i in 0..summary.walkers as usize {
        w.serialize((i, tp[0][i], tp[1][i], tp[2][i], tp[3][i]))?;
    }
    run.write("terminals.csv", &w.into_inner().map_err(|e| Error::Io(e.into_error()))?)?;
    if a.paths > 0 {
        let ids: Vec<u64> = (0..a.paths.min(a.walkers)).collect();
        run.write("paths.csv", &walk::path_csv(&cfg, &ids, rng)?)?;
    }
    run.note(
        "walk",
        json!({
            "mean_displacement": summary.mean_displacement,
            "displacement_variance": summary.displacement_variance,
            "superluminal_fraction": summary.superluminal_fraction,
            "superluminal_fraction_segment": summary.superluminal_fraction_segment,
            "space_migrations": summary.space_migrations,
            "time_migrations": summary.time_migrations,
            "migrations_paired": summary.migrations_paired,
        }),
    );
    if let Some(ext) = &a.merge_extent {
        let setup = MergeSetup {
            extent: parse_array::<4, i64>(ext, "merge extent")?,
            same_site_start: false,
            empty: None,
        };
        let m = walk::merge_statistics(&cfg, a.walkers, &setup, rng.substream(1))?;
        run.json("merge.json", &m)?;
    }
    if let Some(n) = a.wiener_steps {
        let scaling = match a.wiener_scaling.as_str() {
            "uniform" => WienerScaling::Uniform,
            "per_step" => WienerScaling::PerStep,
            other => return Err(Error::Domain(format!("unknown Wiener scaling '{other}'"))),
        };
        let xs = walk::wiener_terminals(n, a.walkers, scaling, rng.substream(2), a.common.workers)?;
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0);
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["walker_id", "terminal"])?;
        for (i, x) in xs.iter().enumerate() {
            w.serialize((i, x))?;
        }
        run.write("wiener.csv", &w.into_inner().map_err(|e| Error::Io(e.into_error()))?)?;
        run.note("wiener", json!({"mean": mean, "variance": var}));
    }
    Ok(())
}

fn uncertainty_cmd(a: &UncertaintyArgs, run: &mut Run) -> Result<()> {
    let spec = MetricFluctuationSpec {
        sigma: a.sigma,
        distribution: ComponentLaw::parse(&a.law)?,
    };
    let rng = RngStream::new(a.common.seed, 0);
    let m_points = parse_list::<u64>(&a.m_points, "m points")?;
    let av = spread::metric_average_variance(&spec, &m_points, a.samples, rng.substream(1), a.common.workers)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["m", "variance"])?;
    for (m, v) in &av.points {
        w.serialize((m, v))?;
    }
    run.write("variance.csv", &w.into_inner().map_err(|e| Error::Io(e.into_error()))?)?;
    let volumes = parse_list::<f64>(&a.volumes, "volumes")?;
    let recs = spread::uncertainty_product(
        &spec,
        a.p_cov,
        &volumes,
        a.cells_per_volume,
        a.samples,
        rng.substream(2),
        a.common.workers,
    )?;
    run.write("uncertainty.csv", &spread::uncertainty_csv(&recs)?)?;
    let products: Vec<f64> = recs.iter().map(|r| r.product).collect();
    let (lo, hi) = products
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(l, h), &p| (l.min(p), h.max(p)));
    run.note("log_log_slope", json!(av.log_log_slope));
    run.note("product_spread", json!(hi / lo - 1.0));
    Ok(())
}

fn compton_cmd(a: &ComptonArgs, run: &mut Run) -> Result<()> {
    let units = planck_units();
    let t_bar = match a.mass {
        Some(m) => compton::t_bar_of_mass(m, a.axes, &units)?,
        None => a.t_bar,
    };
    let mut cfg = OscillationConfig::new(t_bar, a.measure, a.axes, a.steps, RngStream::new(a.common.seed, 0));
    cfg.schedule = Schedule::parse(&a.schedule)?;
    let series = compton::simulate_oscillation(&cfg)?;
    let rep = compton::spectral_detect(&series[0], cfg.drive_frequency(), a.snr)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["step".to_string()];
    header.extend((0..series.len()).map(|i| format!("angle_{i}")));
    w.write_record(&header)?;
    for n in 0..series[0].len() {
        let mut row = vec![n.to_string()];
        row.extend(series.iter().map(|s| s[n].to_string()));
        w.write_record(&row)?;
    }
    run.write(
        "oscillation.csv",
        &w.into_inner().map_err(|e| Error::Io(e.into_error()))?,
    )?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["frequency", "power"])?;
    for (f, p) in rep.frequencies.iter().zip(&rep.power) {
        w.serialize((f, p))?;
    }
    run.write("spectrum.csv", &w.into_inner().map_err(|e| Error::Io(e.into_error()))?)?;
    run.note(
        "detection",
        json!({
            "t_bar": t_bar,
            "expected_freq": rep.expected_freq,
            "dominant_freq": rep.dominant_freq,
            "snr": rep.snr,
            "detected": rep.detected,
            "compton_frequency_hz": compton::compton_frequency(t_bar, a.axes, &units),
        }),
    );
    run.note(
        "planck_mass_t_bar",
        json!({
            "pi": compton::planck_t_bar(a.axes, false, &units)?,
            "planck_pi": compton::planck_t_bar(a.axes, true, &units)?,
        }),
    );
    Ok(())
}

fn sweep_cmd(a: &SweepArgs, run: &mut Run) -> Result<()> {
    let settings = SweepSettings {
        angle_measure: a.measure,
        axes: a.axes,
        trials_per_point: a.trials,
        detection_snr: a.snr,
        min_steps: a.min_steps,
        schedule: Schedule::parse(&a.schedule)?,
    };
    let grid = compton::log_grid(a.t_min, a.t_max, a.points);
    let r = compton::threshold_sweep(&grid, &settings, RngStream::new(a.common.seed, 0), a.common.workers)?;
    run.write("sweep_trials.csv", &compton::trials_csv(&r.trials)?)?;
    run.json("sweep.json", &r)?;
    run.note("threshold", json!(r.threshold));
    run.note("monotone_2sigma", json!(compton::monotone_within(&r.points, 2.0)));
    Ok(())
}

fn gravity_cmd(a: &GravityArgs, run: &mut Run) -> Result<()> {
    let units = planck_units();
    let m = a.mass.unwrap_or(units.m_p);
    let r_k = gravity::schwarzschild_radius(m, a.k, &units)?;
    let r1 = gravity::schwarzschild_radius(m, 1.0, &units)?;
    let r2 = gravity::schwarzschild_radius(m, 2.0, &units)?;
    run.note(
        "schwarzschild_radius_m",
        json!({"k": a.k, "r_s": r_k, "k1": r1, "k2": r2, "in_planck_lengths_k1": r1 / units.l_p, "in_planck_lengths_k2": r2 / units.l_p}),
    );
    let le = gravity::assemble_line_element(a.r_s)?;
    if a.radii == 0 {
        return Err(Error::Domain("radii must be at least 1".into()));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["r", "g_tt", "g_rr", "product"])?;
    let mut worst: f64 = 0.0;
    for i in 0..a.radii {
        let frac = if a.radii == 1 {
            0.0
        } else {
            i as f64 / (a.radii - 1) as f64
        };
        let r = a.r_s * 1.001 * (1000.0f64 / 1.001).powf(frac);
        let (gtt, grr) = (le.g_tt(r)?, le.g_rr(r)?);
        worst = worst.max((gtt * grr + 1.0).abs());
        w.serialize((r, gtt, grr, gtt * grr))?;
    }
    run.write(
        "line_element.csv",
        &w.into_inner().map_err(|e| Error::Io(e.into_error()))?,
    )?;
    run.note("max_product_error", json!(worst));
    let x = geometry::real_point([std::f64::consts::FRAC_PI_2, 0.0, 10.0 * a.r_s, 0.0]);
    let ric = geometry::ricci(&le.metric_field(), &x)?;
    run.note("ricci_max_abs_at_10rs", json!(crate::linalg::max_abs(&ric)));
    Ok(())
}

fn dwell_cmd(a: &DwellArgs, run: &mut Run) -> Result<()> {
    let field = IndeterminacyField::schwarzschild(a.r_s)?;
    let settings = DwellSettings {
        start_r: a.start_r,
        walkers: a.walkers,
        steps: a.steps,
        bin_width: a.bin_width,
    };
    let p = gravity::radial_migration_mc(&field, &settings, RngStream::new(a.common.seed, 0), a.common.workers)?;
    run.write("dwell.csv", &gravity::dwell_csv(&p)?)?;
    let fit = gravity::dwell_fit(&p, &field, (a.u_min, a.u_max), 100)?;
    run.note("fit", json!(fit));
    run.note("absorbed", json!(p.absorbed));
    Ok(())
}

fn demo_covariant(a: &DemoCovariantArgs, run: &mut Run) -> Result<()> {
    let rows = gravity::covariant_distance_demo(a.r_bar, a.r_s, a.samples)?;
    run.write("covariant.csv", &gravity::covariant_csv(&rows)?)?;
    run.note("last", json!(rows.last()));
    Ok(())
}

fn execute(cmd: &Command, run: &mut Run) -> Result<()> {
    match cmd {
        Command::Interference(a) => interference(a, run),
        Command::Search(a) => search_cmd(a, run),
        Command::VerifyF(_) => verify_f(run),
        Command::Ricci(a) => ricci_cmd(a, run),
        Command::Geodesic(a) => geodesic_cmd(a, run),
        Command::Spread(a) => spread_cmd(a, run),
        Command::Walk(a) => walk_cmd(a, run),
        Command::Uncertainty(a) => uncertainty_cmd(a, run),
        Command::Compton(a) => compton_cmd(a, run),
        Command::Sweep(a) => sweep_cmd(a, run),
        Command::Gravity(a) => gravity_cmd(a, run),
        Command::Dwell(a) => dwell_cmd(a, run),
        Command::DemoCovariant(a) => demo_covariant(a, run),
    }
}

fn build_command() -> clap::Command {
    let mut cmd = Cli::command();
    let names: Vec<String> = cmd.get_subcommands().map(|s| s.get_name().to_string()).collect();
    for n in names {
        cmd = cmd.mut_subcommand(n, |s| s.args_override_self(true));
    }
    cmd
}

/// Key/value pairs from a flat config file or a manifest's parameters.
fn read_config(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path)?;
    if text.trim_start().starts_with('{') {
        let m = RunManifest::from_json(&text)?;
        return Ok(m
            .parameters
            .into_iter()
            .filter(|(k, _)| k != "out" && k != "config")
            .collect());
    }
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Domain(format!("{}:{}: expected key = value", path.display(), i + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn find_config(args: &[String]) -> Option<String> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(v.to_string());
        }
    }
    None
}

/// Inserts config-file parameters as flags directly after the subcommand so
/// that command-line flags, which come later, take precedence.
fn expand_config(cmd: &clap::Command, args: Vec<String>) -> Result<Vec<String>> {
    let Some(path) = find_config(&args) else {
        return Ok(args);
    };
    let Some(pos) = args.iter().skip(1).position(|a| !a.starts_with('-')).map(|p| p + 1) else {
        return Ok(args);
    };
    let sub = cmd
        .find_subcommand(&args[pos])
        .ok_or_else(|| Error::Domain(format!("unknown subcommand '{}'", args[pos])))?;
    let mut injected = Vec::new();
    for (key, value) in read_config(Path::new(&path))? {
        let arg = sub
            .get_arguments()
            .find(|a| a.get_long() == Some(key.as_str()) && key != "config")
            .ok_or_else(|| Error::Domain(format!("unknown config key '{key}' for {}", args[pos])))?;
        if matches!(arg.get_action(), ArgAction::SetTrue) {
            match value.as_str() {
                "true" => injected.push(format!("--{key}")),
                "false" => {}
                _ => return Err(Error::Domain(format!("config key '{key}' expects true or false"))),
            }
        } else {
            injected.push(format!("--{key}={value}"));
        }
    }
    let mut out = args[..=pos].to_vec();
    out.extend(injected);
    out.extend_from_slice(&args[pos + 1..]);
    Ok(out)
}

fn manifest_parameters(cmd: &clap::Command, matches: &clap::ArgMatches) -> Vec<(String, String)> {
    let Some((name, sub)) = matches.subcommand() else {
        return Vec::new();
    };
    let Some(spec) = cmd.find_subcommand(name) else {
        return Vec::new();
    };
    spec.get_arguments()
        .filter(|a| a.get_long().is_some())
        .filter_map(|a| {
            let id = a.get_id();
            let vals = sub.get_raw(id.as_str())?;
            let joined: Vec<String> = vals.map(|v| v.to_string_lossy().into_owned()).collect();
            Some((a.get_long()?.to_string(), joined.join(",")))
        })
        .collect()
}

/// Parses `argv`, runs the experiment and returns the process exit code:
/// 0 on success, 1 for parameter errors, 2 for numerical failures.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let args: Vec<String> = argv.into_iter().map(Into::into).collect();
    let cmd = build_command();
    let args = match expand_config(&cmd, args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let matches = match cmd.clone().try_get_matches_from(&args) {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return 1;
        }
    };
    let common = cli.command.common().clone();
    let name = matches.subcommand_name().unwrap_or_default().to_string();
    let mut manifest = RunManifest::new(name, common.seed);
    for (k, v) in manifest_parameters(&cmd, &matches) {
        if k != "out" && k != "config" {
            manifest.param(k, v);
        }
    }
    let mut run = Run {
        dir: common.out.clone(),
        manifest,
        summary: serde_json::Map::new(),
    };
    let result = std::fs::create_dir_all(&run.dir)
        .map_err(Error::from)
        .and_then(|_| execute(&cli.command, &mut run))
        .and_then(|_| {
            run.manifest.summary = serde_json::Value::Object(std::mem::take(&mut run.summary));
            run.manifest.write(&run.dir.join("manifest.json"))
        });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                2
            } else {
                1
            }
        }
    }
}
