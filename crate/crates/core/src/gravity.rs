//! The indeterminacy field u(r) = 1 − r_s/r, the Schwarzschild line element
//! built from it, a radial venue-migration Monte Carlo and the covariant
//! distance divergence near r_s.

use crate::error::{Error, Result};
use crate::geometry::MetricField;
use crate::metric::{CoordinateFrame, Metric4};
use crate::rng::RngStream;
use crate::units::PlanckUnits;
use crate::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// R_s = k·G·m/c².
pub fn schwarzschild_radius(m: f64, k: f64, units: &PlanckUnits) -> Result<f64> {
    if !(m > 0.0 && k > 0.0) {
        return Err(Error::Domain(format!("need m > 0 and k > 0, got m = {m}, k = {k}")));
    }
    Ok(k * units.g * m / (units.c * units.c))
}

/// Probability that a venue migrates at the next coin flip, as a function of r.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndeterminacyField {
    /// u = 1 − r_s/r
    Schwarzschild { r_s: f64 },
    /// u constant in [0, 1]
    Constant { u: f64 },
}

impl IndeterminacyField {
    pub fn schwarzschild(r_s: f64) -> Result<Self> {
        if !(r_s >= 0.0 && r_s.is_finite()) {
            return Err(Error::Domain(format!("r_s must be nonnegative, got {r_s}")));
        }
        Ok(Self::Schwarzschild { r_s })
    }

    pub fn r_s(&self) -> f64 {
        match *self {
            Self::Schwarzschild { r_s } => r_s,
            Self::Constant { .. } => 0.0,
        }
    }

    /// u(r) without range checks.
    pub fn u(&self, r: f64) -> f64 {
        match *self {
            Self::Schwarzschild { r_s: 0.0 } => 1.0,
            Self::Schwarzschild { r_s } => 1.0 - r_s / r,
            Self::Constant { u } => u,
        }
    }

    /// u(r), rejecting r ≤ r_s.
    pub fn u_physical(&self, r: f64) -> Result<f64> {
        if r <= self.r_s() {
            return Err(Error::Domain(format!("r = {r} is inside r_s = {}", self.r_s())));
        }
        Ok(self.u(r))
    }

    /// Whether a walker at r has stopped migrating.
    pub fn absorbs(&self, r: f64) -> bool {
        matches!(self, Self::Schwarzschild { r_s } if *r_s > 0.0 && r <= *r_s)
    }
}

/// ds² = −u dt² + u⁻¹ dr² + r² dΩ².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineElement {
    pub r_s: f64,
}

pub fn assemble_line_element(r_s: f64) -> Result<LineElement> {
    if !(r_s > 0.0 && r_s.is_finite()) {
        return Err(Error::Domain(format!("r_s must be positive, got {r_s}")));
    }
    Ok(LineElement { r_s })
}

impl LineElement {
    fn check(&self, r: f64) -> Result<f64> {
        if r <= self.r_s {
            return Err(Error::Domain(format!("r = {r} is inside r_s = {}", self.r_s)));
        }
        Ok(1.0 - self.r_s / r)
    }

    pub fn g_tt(&self, r: f64) -> Result<f64> {
        Ok(-self.check(r)?)
    }

    pub fn g_rr(&self, r: f64) -> Result<f64> {
        Ok(1.0 / self.check(r)?)
    }

    /// The metric in coordinates (θ, φ, r, t). The finite-difference scale is
    /// 10·r_s, the curvature radius at the radii this is probed at.
    pub fn metric_field(&self) -> MetricField {
        let r_s = self.r_s;
        MetricField::new("schwarzschild", 10.0 * r_s, move |x| {
            let (theta, r) = (x[0], x[2]);
            let u = Complex::new(1.0, 0.0) - r.inv() * r_s;
            let s = theta.sin();
            Metric4::diag([r * r, r * r * s * s, u.inv(), -u], CoordinateFrame::Spherical)
        })
    }

    /// Velocity (dθ, dφ, dr, dt)/ds of the equatorial circular geodesic at r.
    pub fn circular_orbit_velocity(&self, r: f64) -> Result<[f64; 4]> {
        let u = self.check(r)?;
        let omega = self.orbital_frequency(r);
        let denom = u - r * r * omega * omega;
        if !(denom > 0.0) {
            return Err(Error::Domain(format!("no timelike circular orbit at r = {r}")));
        }
        let dt = 1.0 / denom.sqrt();
        Ok([0.0, omega * dt, 0.0, dt])
    }

    /// Coordinate angular frequency dφ/dt = √(r_s / 2r³).
    pub fn orbital_frequency(&self, r: f64) -> f64 {
        (self.r_s / (2.0 * r * r * r)).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialDwellProfile {
    pub bin_edges: Vec<f64>,
    /// Steps spent in each bin, summed over walkers.
    pub dwell_counts: Vec<u64>,
    /// Arrivals at a site in each bin (including the start).
    pub visit_counts: Vec<u64>,
    /// Expected dwell per visit: 1/u averaged over the bin's integer radii,
    /// weighted by visits (unweighted for unvisited bins).
    pub predicted: Vec<f64>,
    pub absorbed: u64,
    pub walkers: u64,
    pub steps: u64,
}

impl RadialDwellProfile {
    pub fn r_mid(&self, i: usize) -> f64 {
        0.5 * (self.bin_edges[i] + self.bin_edges[i + 1])
    }

    pub fn dwell_per_visit(&self, i: usize) -> f64 {
        if self.visit_counts[i] == 0 {
            0.0
        } else {
            self.dwell_counts[i] as f64 / self.visit_counts[i] as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DwellSettings {
    pub start_r: i64,
    pub walkers: u64,
    pub steps: u64,
    pub bin_width: i64,
}

/// One walker's radius after each step. One draw per step: x < u migrates,
/// and x < u/2 moves inward.
pub fn radial_trajectory(field: &IndeterminacyField, start_r: i64, steps: u64, mut rng: RngStream) -> Vec<i64> {
    let mut r = start_r;
    let mut out = Vec::with_capacity(steps as usize + 1);
    out.push(r);
    for _ in 0..steps {
        let x = rng.uniform();
        if !field.absorbs(r as f64) {
            let u = field.u(r as f64).clamp(0.0, 1.0);
            if x < u {
                r += if x < 0.5 * u { -1 } else { 1 };
            }
        }
        out.push(r);
    }
    out
}

struct Tally {
    dwell: Vec<u64>,
    visits: Vec<u64>,
    absorbed: u64,
}

impl Tally {
    fn new(sites: usize) -> Self {
        Self {
            dwell: vec![0; sites],
            visits: vec![0; sites],
            absorbed: 0,
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        for (a, b) in self.dwell.iter_mut().zip(other.dwell) {
            *a += b;
        }
        for (a, b) in self.visits.iter_mut().zip(other.visits) {
            *a += b;
        }
        self.absorbed += other.absorbed;
        self
    }
}

/// Radial ±1 walks gated by u(r); walker `i` uses `rng.child(i)`. Absorbed
/// walkers stop contributing dwell.
pub fn radial_migration_mc(
    field: &IndeterminacyField,
    settings: &DwellSettings,
    rng: RngStream,
    workers: usize,
) -> Result<RadialDwellProfile> {
    let r_s = field.r_s();
    if !(settings.start_r as f64 > r_s) || settings.start_r < 1 {
        return Err(Error::Domain(format!(
            "start radius {} must exceed r_s = {r_s}",
            settings.start_r
        )));
    }
    if settings.bin_width < 1 {
        return Err(Error::Domain("bin width must be at least 1".into()));
    }
    let lo = settings.start_r - settings.steps as i64 - 1;
    let hi = settings.start_r + settings.steps as i64 + 1;
    let sites = (hi - lo + 1) as usize;
    let tally = crate::walk::pool(workers)?.install(|| {
        (0..settings.walkers)
            .into_par_iter()
            .fold(
                || Tally::new(sites),
                |mut t, i| {
                    let path = radial_trajectory(field, settings.start_r, settings.steps, rng.child(i));
                    let mut prev = None;
                    for &r in &path[..path.len() - 1] {
                        if field.absorbs(r as f64) {
                            t.absorbed += 1;
                            break;
                        }
                        let idx = (r - lo) as usize;
                        t.dwell[idx] += 1;
                        if prev != Some(r) {
                            t.visits[idx] += 1;
                        }
                        prev = Some(r);
                    }
                    t
                },
            )
            .reduce(|| Tally::new(sites), Tally::merge)
    });
    // Bins cover the visited radii outside r_s.
    let lowest = (0..sites)
        .find(|&i| tally.visits[i] > 0)
        .map_or(settings.start_r, |i| lo + i as i64);
    let first = if r_s > 0.0 {
        lowest.max(r_s.floor() as i64 + 1)
    } else {
        lowest
    };
    let last = (0..sites)
        .rev()
        .find(|&i| tally.visits[i] > 0)
        .map_or(first, |i| lo + i as i64);
    let nbins = ((last - first) / settings.bin_width + 1) as usize;
    let mut profile = RadialDwellProfile {
        bin_edges: (0..=nbins)
            .map(|b| (first + b as i64 * settings.bin_width) as f64 - 0.5)
            .collect(),
        dwell_counts: vec![0; nbins],
        visit_counts: vec![0; nbins],
        predicted: vec![0.0; nbins],
        absorbed: tally.absorbed,
        walkers: settings.walkers,
        steps: settings.steps,
    };
    for b in 0..nbins {
        let (mut weighted, mut plain) = (0.0, 0.0);
        for j in 0..settings.bin_width {
            let r = first + b as i64 * settings.bin_width + j;
            let idx = (r - lo) as usize;
            let u = field.u(r as f64);
            let inv_u = if u > 0.0 { 1.0 / u } else { f64::INFINITY };
            plain += inv_u;
            if idx < sites {
                profile.dwell_counts[b] += tally.dwell[idx];
                profile.visit_counts[b] += tally.visits[idx];
                if tally.visits[idx] > 0 {
                    weighted += tally.visits[idx] as f64 * inv_u;
                }
            }
        }
        profile.predicted[b] = if profile.visit_counts[b] > 0 {
            weighted / profile.visit_counts[b] as f64
        } else {
            plain / settings.bin_width as f64
        };
    }
    Ok(profile)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DwellFit {
    pub slope: f64,
    pub intercept: f64,
    pub correlation: f64,
    pub bins_used: usize,
}

/// Log-log fit of dwell per visit against the predicted 1/u over bins whose
/// mid-radius u lies in `u_band` and that have at least `min_visits` visits.
pub fn dwell_fit(
    profile: &RadialDwellProfile,
    field: &IndeterminacyField,
    u_band: (f64, f64),
    min_visits: u64,
) -> Result<DwellFit> {
    let pts: Vec<(f64, f64)> = (0..profile.dwell_counts.len())
        .filter(|&i| {
            let u = field.u(profile.r_mid(i));
            u >= u_band.0 && u <= u_band.1 && profile.visit_counts[i] >= min_visits
        })
        .map(|i| (profile.predicted[i].ln(), profile.dwell_per_visit(i).ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::Domain(format!(
            "only {} bins in the u band; run more steps",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Ok(DwellFit {
        slope,
        intercept: my - slope * mx,
        correlation: sxy / (sxx * syy).sqrt(),
        bins_used: pts.len(),
    })
}

/// CSV `r_mid,dwell_count,visit_count,dwell_per_visit,predicted_density`.
pub fn dwell_csv(profile: &RadialDwellProfile) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "r_mid",
        "dwell_count",
        "visit_count",
        "dwell_per_visit",
        "predicted_density",
    ])?;
    for i in 0..profile.dwell_counts.len() {
        w.serialize((
            profile.r_mid(i),
            profile.dwell_counts[i],
            profile.visit_counts[i],
            profile.dwell_per_visit(i),
            profile.predicted[i],
        ))?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Covariant radial coordinate ξ₁ = r/(1 − r_s/r).
pub fn covariant_coordinate(r: f64, r_s: f64) -> Result<f64> {
    if r <= r_s {
        return Err(Error::Domain(format!("r = {r} is inside r_s = {r_s}")));
    }
    Ok(r / (1.0 - r_s / r))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovariantRow {
    pub r: f64,
    pub contravariant: f64,
    pub covariant: f64,
}

/// ξ₁ has its minimum at r = 2r_s and grows without bound below it.
///
/// Rows from r̄ towards r_s with r − r_s shrinking geometrically to 1e−6 of
/// r̄ − r_s.
pub fn covariant_distance_demo(r_bar: f64, r_s: f64, samples: usize) -> Result<Vec<CovariantRow>> {
    if !(r_bar > r_s && r_s > 0.0) {
        return Err(Error::Domain(format!("need r_bar > r_s > 0, got {r_bar}, {r_s}")));
    }
    if samples < 2 {
        return Err(Error::Domain("need at least two samples".into()));
    }
    (0..samples)
        .map(|i| {
            let gap = (r_bar - r_s) * 10f64.powf(-6.0 * i as f64 / (samples - 1) as f64);
            let r = r_s + gap;
            Ok(CovariantRow {
                r,
                contravariant: r,
                covariant: covariant_coordinate(r, r_s)?,
            })
        })
        .collect()
}

pub fn covariant_csv(rows: &[CovariantRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}
