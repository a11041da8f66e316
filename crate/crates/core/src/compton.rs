//! Compton-frequency torsional oscillation: a triangle-wave sequence-time
//! drive of half-period Ţ with coin-flip noise, periodogram detection and the
//! Ţ sweep that locates the detection threshold.

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::units::PlanckUnits;
use rayon::prelude::*;
use rustfft::{num_complex::Complex as FftComplex, FftPlanner};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Ţ = h / (2·axes·c²·t_p·m), in Planck-time steps.
pub fn t_bar_of_mass(m: f64, axes: u32, units: &PlanckUnits) -> Result<f64> {
    check_axes(axes)?;
    if !(m > 0.0) {
        return Err(Error::Domain(format!("mass must be positive, got {m}")));
    }
    Ok(units.h / (2.0 * f64::from(axes) * units.c * units.c * units.t_p * m))
}

/// Inverse of [`t_bar_of_mass`].
pub fn mass_of_t_bar(t_bar: f64, axes: u32, units: &PlanckUnits) -> Result<f64> {
    check_axes(axes)?;
    if !(t_bar > 0.0) {
        return Err(Error::Domain(format!("t_bar must be positive, got {t_bar}")));
    }
    Ok(units.h / (2.0 * f64::from(axes) * units.c * units.c * units.t_p * t_bar))
}

/// Ţ of the Planck mass: π/axes, or π_p/axes with the hexagonal pi.
pub fn planck_t_bar(axes: u32, planck_pi: bool, units: &PlanckUnits) -> Result<f64> {
    check_axes(axes)?;
    let pi = if planck_pi { units.pi_p } else { PI };
    Ok(pi / f64::from(axes))
}

/// Oscillation frequency 1/(2·axes·Ţ·t_p) in Hz.
pub fn compton_frequency(t_bar: f64, axes: u32, units: &PlanckUnits) -> f64 {
    1.0 / (2.0 * f64::from(axes) * t_bar * units.t_p)
}

fn check_axes(axes: u32) -> Result<()> {
    if axes == 1 || axes == 3 {
        Ok(())
    } else {
        Err(Error::Domain(format!("axes must be 1 or 3, got {axes}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Schedule {
    /// One axis at a time, Ţ steps each.
    #[default]
    RoundRobin,
    /// Every axis driven on every step.
    Simultaneous,
}

impl Schedule {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "round-robin" => Ok(Self::RoundRobin),
            "simultaneous" => Ok(Self::Simultaneous),
            other => Err(Error::Domain(format!("unknown schedule {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillationConfig {
    pub t_bar: f64,
    /// Probability that a step follows the drive; otherwise a ±1 coin.
    pub angle_measure: f64,
    pub axes: u32,
    pub steps: usize,
    pub schedule: Schedule,
    pub rng: RngStream,
}

impl OscillationConfig {
    pub fn new(t_bar: f64, angle_measure: f64, axes: u32, steps: usize, rng: RngStream) -> Self {
        Self {
            t_bar,
            angle_measure,
            axes,
            steps,
            schedule: Schedule::RoundRobin,
            rng,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_axes(self.axes)?;
        if !(self.t_bar > 0.0 && self.t_bar.is_finite()) {
            return Err(Error::Domain(format!("t_bar must be positive, got {}", self.t_bar)));
        }
        if !(0.0..=1.0).contains(&self.angle_measure) {
            return Err(Error::Domain(format!(
                "angle measure {} outside [0, 1]",
                self.angle_measure
            )));
        }
        if (self.steps as f64) < 64.0 * self.t_bar {
            return Err(Error::Domain(format!(
                "steps = {} is below 64·Ţ = {}",
                self.steps,
                64.0 * self.t_bar
            )));
        }
        Ok(())
    }

    /// Drive frequency in cycles per step.
    pub fn drive_frequency(&self) -> f64 {
        match self.schedule {
            Schedule::RoundRobin => 1.0 / (2.0 * f64::from(self.axes) * self.t_bar),
            Schedule::Simultaneous => 1.0 / (2.0 * self.t_bar),
        }
    }
}

/// Integer angle per axis at steps 0..=steps, `series[axis][n]`.
pub fn simulate_oscillation(config: &OscillationConfig) -> Result<Vec<Vec<i64>>> {
    config.validate()?;
    let axes = config.axes as usize;
    let mut rng = config.rng;
    let mut angle = vec![0i64; axes];
    let mut series: Vec<Vec<i64>> = (0..axes).map(|_| Vec::with_capacity(config.steps + 1)).collect();
    for (s, a) in series.iter_mut().zip(&angle) {
        s.push(*a);
    }
    for n in 0..config.steps {
        let block = (n as f64 / config.t_bar).floor() as u64;
        let driven: Vec<(usize, i64)> = match config.schedule {
            Schedule::RoundRobin => {
                let axis = (block % axes as u64) as usize;
                let dir = if (block / axes as u64) % 2 == 0 { 1 } else { -1 };
                vec![(axis, dir)]
            }
            Schedule::Simultaneous => {
                let dir = if block % 2 == 0 { 1 } else { -1 };
                (0..axes).map(|a| (a, dir)).collect()
            }
        };
        for (axis, dir) in driven {
            // Two draws per driven axis regardless of outcome.
            let follow = rng.bernoulli(config.angle_measure);
            let noise = rng.sign(0.5);
            angle[axis] += if follow { dir } else { noise };
        }
        for (s, a) in series.iter_mut().zip(&angle) {
            s.push(*a);
        }
    }
    Ok(series)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    /// Cycles per step, bins 0..=M/2 of the padded length M.
    pub frequencies: Vec<f64>,
    /// One-sided power; sums to the variance of the analysed series.
    pub power: Vec<f64>,
    pub dominant_freq: f64,
    /// Power at the expected drive bin over the median of bins 1..=M/2.
    pub snr: f64,
    pub detected: bool,
    pub expected_freq: f64,
}

/// One-sided periodogram of the mean-removed input, zero-padded to a power of
/// two and normalised so the powers sum to the population variance.
pub fn periodogram(x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let m = n.next_power_of_two();
    let mean = x.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<FftComplex<f64>> = x.iter().map(|v| FftComplex::new(v - mean, 0.0)).collect();
    buf.resize(m, FftComplex::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let norm = 1.0 / (n as f64 * m as f64);
    let half = m / 2;
    let power = (0..=half)
        .map(|k| {
            let p = buf[k].norm_sqr() * norm;
            if k == 0 || k == half {
                p
            } else {
                2.0 * p
            }
        })
        .collect();
    let freqs = (0..=half).map(|k| k as f64 / m as f64).collect();
    (freqs, power)
}

/// Periodogram of the differenced series with detection at `expected_freq`.
/// A drive above the Nyquist frequency is never detected.
pub fn spectral_detect(series: &[i64], expected_freq: f64, detection_snr: f64) -> Result<SpectralReport> {
    if series.len() < 4 {
        return Err(Error::SeriesTooShort(series.len()));
    }
    if !(detection_snr > 0.0) {
        return Err(Error::Domain(format!(
            "detection SNR must be positive, got {detection_snr}"
        )));
    }
    let diff: Vec<f64> = series.windows(2).map(|w| (w[1] - w[0]) as f64).collect();
    let (frequencies, power) = periodogram(&diff);
    let half = power.len() - 1;
    let mut background: Vec<f64> = power[1..].to_vec();
    background.sort_by(f64::total_cmp);
    let median = background[background.len() / 2];
    let (peak, _) =
        power.iter().enumerate().skip(1).fold(
            (1, f64::NEG_INFINITY),
            |(bi, bp), (i, &p)| if p > bp { (i, p) } else { (bi, bp) },
        );
    let m = 2 * half;
    let (snr, detected) = if expected_freq > 0.0 && expected_freq <= 0.5 {
        let bin = ((expected_freq * m as f64).round() as usize).clamp(1, half);
        let snr = if median > 0.0 {
            power[bin] / median
        } else if power[bin] > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        (snr, snr >= detection_snr)
    } else {
        (0.0, false)
    };
    Ok(SpectralReport {
        dominant_freq: frequencies[peak],
        frequencies,
        power,
        snr,
        detected,
        expected_freq,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub t_bar: f64,
    pub trial: u64,
    pub detected: bool,
    pub snr: f64,
    pub dominant_freq: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub t_bar: f64,
    pub steps: usize,
    pub trials: u64,
    pub detections: u64,
    pub probability: f64,
    /// Binomial standard error with p clamped to [1/2n, 1 − 1/2n].
    pub std_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    /// Ţ at 50% detection from the logistic fit in ln Ţ.
    pub threshold: f64,
    /// (b0, b1) in p = σ(b0 + b1 ln Ţ).
    pub logistic: (f64, f64),
    #[serde(skip)]
    pub trials: Vec<TrialRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSettings {
    pub angle_measure: f64,
    pub axes: u32,
    pub trials_per_point: u64,
    pub detection_snr: f64,
    /// Minimum steps per trial; raised to 64·Ţ where needed, then to a power of two.
    pub min_steps: usize,
    pub schedule: Schedule,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            angle_measure: 0.7,
            axes: 3,
            trials_per_point: 20,
            detection_snr: 5.0,
            min_steps: 1 << 14,
            schedule: Schedule::RoundRobin,
        }
    }
}

/// `count` log-spaced values from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

/// Detection probability over a Ţ grid; trial `j` at grid point `i` uses
/// `rng.child(i).child(j)`.
pub fn threshold_sweep(grid: &[f64], settings: &SweepSettings, rng: RngStream, workers: usize) -> Result<SweepResult> {
    if grid.len() < 2 || grid.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::Domain("Ţ grid needs at least two positive points".into()));
    }
    let (lo, hi) = grid
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(l, h), &t| (l.min(t), h.max(t)));
    if !(lo < 1.0 && hi > 1.0 && hi / lo >= 100.0) {
        return Err(Error::Domain(format!(
            "Ţ grid [{lo}, {hi}] must straddle 1 and span at least two decades"
        )));
    }
    if settings.trials_per_point == 0 {
        return Err(Error::Domain("trials per point must be positive".into()));
    }
    let jobs: Vec<(usize, u64)> = (0..grid.len())
        .flat_map(|i| (0..settings.trials_per_point).map(move |j| (i, j)))
        .collect();
    let steps_for = |t: f64| settings.min_steps.max((64.0 * t).ceil() as usize).next_power_of_two();
    let trials: Vec<TrialRecord> = crate::walk::pool(workers)?.install(|| {
        jobs.par_iter()
            .map(|&(i, j)| {
                let t = grid[i];
                let mut cfg = OscillationConfig::new(
                    t,
                    settings.angle_measure,
                    settings.axes,
                    steps_for(t),
                    rng.child(i as u64).child(j),
                );
                cfg.schedule = settings.schedule;
                let series = simulate_oscillation(&cfg)?;
                let rep = spectral_detect(&series[0], cfg.drive_frequency(), settings.detection_snr)?;
                Ok(TrialRecord {
                    t_bar: t,
                    trial: j,
                    detected: rep.detected,
                    snr: rep.snr,
                    dominant_freq: rep.dominant_freq,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let n = settings.trials_per_point;
    let points: Vec<SweepPoint> = grid
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let chunk = &trials[i * n as usize..(i + 1) * n as usize];
            let detections = chunk.iter().filter(|r| r.detected).count() as u64;
            let p = detections as f64 / n as f64;
            let pc = p.clamp(0.5 / n as f64, 1.0 - 0.5 / n as f64);
            SweepPoint {
                t_bar: t,
                steps: steps_for(t),
                trials: n,
                detections,
                probability: p,
                std_err: (pc * (1.0 - pc) / n as f64).sqrt(),
            }
        })
        .collect();
    let (b0, b1) = fit_logistic(&points)?;
    Ok(SweepResult {
        points,
        threshold: (-b0 / b1).exp(),
        logistic: (b0, b1),
        trials,
    })
}

/// Ridge-penalised (on the slope) binomial logistic fit in ln Ţ by Newton's method.
pub fn fit_logistic(points: &[SweepPoint]) -> Result<(f64, f64)> {
    let total: u64 = points.iter().map(|p| p.trials).sum();
    let hits: u64 = points.iter().map(|p| p.detections).sum();
    if hits == 0 || hits == total {
        return Err(Error::Bracket(format!("{hits} of {total} trials detected")));
    }
    const RIDGE: f64 = 1e-3;
    let xm = points.iter().map(|p| p.t_bar.ln()).sum::<f64>() / points.len() as f64;
    let objective = |b0: f64, b1: f64| -> f64 {
        let mut ll = -0.5 * RIDGE * b1 * b1;
        for p in points {
            let eta = b0 + b1 * (p.t_bar.ln() - xm);
            let (lp, lq) = (log_sigmoid(eta), log_sigmoid(-eta));
            ll += p.detections as f64 * lp + (p.trials - p.detections) as f64 * lq;
        }
        ll
    };
    let (mut b0, mut b1) = (0.0, 0.0);
    for _ in 0..500 {
        let (mut g0, mut g1) = (0.0, -RIDGE * b1);
        let (mut h00, mut h01, mut h11) = (0.0, 0.0, RIDGE);
        for p in points {
            let x = p.t_bar.ln() - xm;
            let s = 1.0 / (1.0 + (-(b0 + b1 * x)).exp());
            let r = p.detections as f64 - p.trials as f64 * s;
            let w = p.trials as f64 * s * (1.0 - s);
            g0 += r;
            g1 += r * x;
            h00 += w;
            h01 += w * x;
            h11 += w * x * x;
        }
        let det = h00 * h11 - h01 * h01;
        if !(det > 0.0) {
            break;
        }
        let d0 = (h11 * g0 - h01 * g1) / det;
        let d1 = (h00 * g1 - h01 * g0) / det;
        let base = objective(b0, b1);
        let mut step = 1.0;
        while step > 1e-6 && objective(b0 + step * d0, b1 + step * d1) < base {
            step *= 0.5;
        }
        b0 += step * d0;
        b1 += step * d1;
        if (step * d0).abs() < 1e-12 && (step * d1).abs() < 1e-12 {
            break;
        }
    }
    if !(b1 > 0.0) {
        return Err(Error::Bracket(format!("fitted slope {b1} is not increasing in Ţ")));
    }
    Ok((b0 - b1 * xm, b1))
}

fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// True when no later point falls below an earlier one by more than
/// `k_sigma` combined standard errors.
pub fn monotone_within(points: &[SweepPoint], k_sigma: f64) -> bool {
    points.iter().enumerate().all(|(i, a)| {
        points[i + 1..]
            .iter()
            .all(|b| a.probability - b.probability <= k_sigma * (a.std_err.hypot(b.std_err)))
    })
}

/// CSV `t_bar,trial,detected,snr,dominant_freq`.
pub fn trials_csv(trials: &[TrialRecord]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for t in trials {
        w.serialize(t)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}
