//! Spreading of step distributions under self-convolution, variance of
//! volume-averaged metric fluctuations, and the uncertainty product.

use crate::error::{Error, Result};
use crate::rng::RngStream;
use rand_distr::{Distribution, Normal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Point masses on a uniform grid `support_min + i·bin_width`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDistribution {
    pub support_min: f64,
    pub bin_width: f64,
    pub masses: Vec<f64>,
}

impl GridDistribution {
    /// Masses must be nonnegative and sum to 1 within 1e−9.
    pub fn new(support_min: f64, bin_width: f64, masses: Vec<f64>) -> Result<Self> {
        if !(bin_width > 0.0) {
            return Err(Error::Domain(format!("bin width {bin_width} must be positive")));
        }
        if masses.is_empty() || masses.iter().any(|&m| !(m >= 0.0)) {
            return Err(Error::Domain("masses must be nonempty and nonnegative".into()));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("masses sum to {total}, not 1")));
        }
        Ok(Self {
            support_min,
            bin_width,
            masses,
        })
    }

    /// Normalizes arbitrary nonnegative weights.
    pub fn from_weights(support_min: f64, bin_width: f64, weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Domain("weights must have positive sum".into()));
        }
        Self::new(support_min, bin_width, weights.iter().map(|w| w / total).collect())
    }

    pub fn delta(at: f64, bin_width: f64) -> Self {
        Self {
            support_min: at,
            bin_width,
            masses: vec![1.0],
        }
    }

    /// Equal mass on the integers lo..=hi (times `bin_width`).
    pub fn uniform_steps(lo: i64, hi: i64, bin_width: f64) -> Result<Self> {
        let n = (hi - lo + 1).max(0) as usize;
        Self::from_weights(lo as f64 * bin_width, bin_width, &vec![1.0; n])
    }

    /// Discretized normal density on ±`half_width` standard deviations.
    pub fn gaussian(sigma: f64, bin_width: f64, half_width: f64) -> Result<Self> {
        let k = (half_width * sigma / bin_width).ceil() as i64;
        let w: Vec<f64> = (-k..=k)
            .map(|i| (-0.5 * (i as f64 * bin_width / sigma).powi(2)).exp())
            .collect();
        Self::from_weights(-(k as f64) * bin_width, bin_width, &w)
    }

    pub fn bin_count(&self) -> usize {
        self.masses.len()
    }

    pub fn support_max(&self) -> f64 {
        self.support_min + (self.masses.len() - 1) as f64 * self.bin_width
    }

    pub fn x(&self, i: usize) -> f64 {
        self.support_min + i as f64 * self.bin_width
    }

    fn central_moment(&self, k: i32) -> f64 {
        let mu = self.mean();
        self.masses
            .iter()
            .enumerate()
            .map(|(i, m)| m * (self.x(i) - mu).powi(k))
            .sum()
    }

    pub fn mean(&self) -> f64 {
        self.masses.iter().enumerate().map(|(i, m)| m * self.x(i)).sum()
    }

    pub fn variance(&self) -> f64 {
        self.central_moment(2)
    }

    pub fn skew(&self) -> f64 {
        let v = self.variance();
        if v == 0.0 {
            0.0
        } else {
            self.central_moment(3) / v.powf(1.5)
        }
    }

    pub fn excess_kurtosis(&self) -> f64 {
        let v = self.variance();
        if v == 0.0 {
            0.0
        } else {
            self.central_moment(4) / (v * v) - 3.0
        }
    }
}

/// Discrete convolution; the output support grows to hold every mass.
pub fn convolve(d1: &GridDistribution, d2: &GridDistribution) -> Result<GridDistribution> {
    let (w1, w2) = (d1.bin_width, d2.bin_width);
    if (w1 - w2).abs() > 1e-12 * w1.max(w2) {
        return Err(Error::BinMismatch(w1, w2));
    }
    let (a, b) = (&d1.masses, &d2.masses);
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|m| *m /= total);
    Ok(GridDistribution {
        support_min: d1.support_min + d2.support_min,
        bin_width: w1,
        masses: out,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpreadPoint {
    pub n: u64,
    pub variance: f64,
    pub skew: f64,
    pub kurtosis: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpreadResult {
    pub series: Vec<SpreadPoint>,
    /// Least-squares slope of Var(N)/Var(D₁) against N.
    pub normalized_slope: f64,
    pub final_distribution: GridDistribution,
}

/// n-fold self-convolution with the variance and shape after every step.
pub fn iterated_spread(d1: &GridDistribution, n: u64) -> Result<SpreadResult> {
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    let a = d1.variance();
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::Domain("step distribution needs positive finite variance".into()));
    }
    let mut cur = d1.clone();
    let point = |k: u64, d: &GridDistribution| SpreadPoint {
        n: k,
        variance: d.variance(),
        skew: d.skew(),
        kurtosis: d.excess_kurtosis(),
    };
    let mut series = vec![point(1, &cur)];
    for k in 2..=n {
        cur = convolve(&cur, d1)?;
        series.push(point(k, &cur));
    }
    let xs: Vec<f64> = series.iter().map(|p| p.n as f64).collect();
    let ys: Vec<f64> = series.iter().map(|p| p.variance / a).collect();
    let normalized_slope = if n >= 2 { linear_fit(&xs, &ys).0 } else { 1.0 };
    Ok(SpreadResult {
        series,
        normalized_slope,
        final_distribution: cur,
    })
}

/// (slope, intercept) of the least-squares line.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Sample skewness and excess kurtosis (population moments).
pub fn sample_skew_kurtosis(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mu = xs.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in xs {
        let d = x - mu;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
}

pub fn spread_csv(series: &[SpreadPoint]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for p in series {
        w.serialize(p)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Law of a single fluctuating metric component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentLaw {
    Normal,
    Uniform,
    /// Equal mixture of N(±0.8σ, (0.6σ)²).
    Bimodal,
}

impl ComponentLaw {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "normal" => Ok(Self::Normal),
            "uniform" => Ok(Self::Uniform),
            "bimodal" => Ok(Self::Bimodal),
            other => Err(Error::Domain(format!("unknown component law '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricFluctuationSpec {
    /// Standard deviation of each component.
    pub sigma: f64,
    pub distribution: ComponentLaw,
}

impl MetricFluctuationSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::Domain(format!("sigma {} must be positive", self.sigma)));
        }
        Ok(())
    }

    /// Zero-mean draw with standard deviation `sigma`.
    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        let s = self.sigma;
        match self.distribution {
            ComponentLaw::Normal => Normal::new(0.0, s).expect("sigma > 0").sample(rng),
            ComponentLaw::Uniform => {
                let h = s * 3f64.sqrt();
                Uniform::new(-h, h).sample(rng)
            }
            ComponentLaw::Bimodal => {
                let centre = if rng.bernoulli(0.5) { 0.8 * s } else { -0.8 * s };
                Normal::new(centre, 0.6 * s).expect("sigma > 0").sample(rng)
            }
        }
    }
}

/// Averages of `m` iid components, `samples` times; sample `j` uses `rng.child(j)`.
pub fn averaged_samples(
    spec: &MetricFluctuationSpec,
    m: u64,
    samples: u64,
    rng: RngStream,
    workers: usize,
) -> Result<Vec<f64>> {
    spec.validate()?;
    if m == 0 {
        return Err(Error::Domain("m must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Domain(format!("thread pool: {e}")))?;
    Ok(pool.install(|| {
        (0..samples)
            .into_par_iter()
            .map(|j| {
                let mut r = rng.child(j);
                (0..m).map(|_| spec.sample(&mut r)).sum::<f64>() / m as f64
            })
            .collect()
    }))
}

fn variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mu = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (n - 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AverageVariance {
    pub points: Vec<(u64, f64)>,
    /// Slope of log Var against log m.
    pub log_log_slope: f64,
}

/// Variance of the m-cell average for each m.
pub fn metric_average_variance(
    spec: &MetricFluctuationSpec,
    m_points: &[u64],
    samples: u64,
    rng: RngStream,
    workers: usize,
) -> Result<AverageVariance> {
    if m_points.is_empty() {
        return Err(Error::Domain("m_points is empty".into()));
    }
    if samples < 1000 {
        return Err(Error::Domain(format!("samples {samples} below 1000")));
    }
    let mut points = Vec::with_capacity(m_points.len());
    for (k, &m) in m_points.iter().enumerate() {
        let xs = averaged_samples(
            spec,
            m,
            samples,
            rng.substream(rng.stream_id.wrapping_add(k as u64 + 1)),
            workers,
        )?;
        points.push((m, variance(&xs)));
    }
    let lx: Vec<f64> = points.iter().map(|(m, _)| (*m as f64).ln()).collect();
    let ly: Vec<f64> = points.iter().map(|(_, v)| v.ln()).collect();
    let log_log_slope = if points.len() >= 2 {
        linear_fit(&lx, &ly).0
    } else {
        f64::NAN
    };
    Ok(AverageVariance { points, log_log_slope })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyRecord {
    pub volume: f64,
    pub delta_q: f64,
    /// Var of the volume-averaged component divided by σ.
    pub delta_g: f64,
    pub p_cov: f64,
    pub product: f64,
    /// Standard deviation of the volume-averaged component, for comparison.
    pub delta_g_std: f64,
}

/// Δq = V, Δg = Var(average over `cells_per_volume·V` cells)/σ, and the
/// product p·Δq·Δg, for each volume.
pub fn uncertainty_product(
    spec: &MetricFluctuationSpec,
    p_cov: f64,
    volumes: &[f64],
    cells_per_volume: f64,
    samples: u64,
    rng: RngStream,
    workers: usize,
) -> Result<Vec<UncertaintyRecord>> {
    spec.validate()?;
    if volumes.is_empty() || volumes.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Domain("volumes must be positive".into()));
    }
    if samples < 2 {
        return Err(Error::Domain("need at least 2 samples".into()));
    }
    volumes
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let m = (cells_per_volume * v).round().max(1.0) as u64;
            let xs = averaged_samples(
                spec,
                m,
                samples,
                rng.substream(rng.stream_id.wrapping_add(k as u64 + 1)),
                workers,
            )?;
            let var = variance(&xs);
            let delta_g = var / spec.sigma;
            Ok(UncertaintyRecord {
                volume: v,
                delta_q: v,
                delta_g,
                p_cov,
                product: p_cov * v * delta_g,
                delta_g_std: var.sqrt(),
            })
        })
        .collect()
}

/// CSV `volume,delta_q,delta_g,product`.
pub fn uncertainty_csv(records: &[UncertaintyRecord]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["volume", "delta_q", "delta_g", "product"])?;
    for r in records {
        w.serialize((r.volume, r.delta_q, r.delta_g, r.product))?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}
