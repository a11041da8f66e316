//! Complex 4×4 metrics: determinant densities, superposition, congruence
//! transforms, interference, and the catalog of plane-wave derived metrics.

use crate::error::{Error, Result};
use crate::linalg::{self, Mat4, ONE, ZERO};
use crate::Complex;
use serde::de::Deserializer;
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;

/// Asymmetry above this is reported when a metric is symmetrized.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// `probability_density` rejects determinants with |Im| at or above this.
pub const DENSITY_IMAG_TOL: f64 = 1e-9;
/// Positive real parts below this are treated as rounding noise around zero.
const DENSITY_REAL_TOL: f64 = 1e-12;

/// Which coordinates the four metric indices refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CoordinateFrame {
    /// (x, y, z, t)
    #[default]
    Cartesian,
    /// (theta, phi, r, t)
    Spherical,
}

impl CoordinateFrame {
    pub fn labels(self) -> [&'static str; 4] {
        match self {
            CoordinateFrame::Cartesian => ["x", "y", "z", "t"],
            CoordinateFrame::Spherical => ["theta", "phi", "r", "t"],
        }
    }
}

/// A symmetric 4×4 complex metric `g_{μν}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metric4 {
    entries: Mat4,
    frame: CoordinateFrame,
}

impl Metric4 {
    /// Builds a metric, symmetrizing `(M + Mᵀ)/2`. Asymmetry above
    /// [`SYMMETRY_TOL`] is logged.
    pub fn new(entries: Mat4, frame: CoordinateFrame) -> Self {
        let mut asym: f64 = 0.0;
        let mut m = entries;
        for i in 0..4 {
            for j in i + 1..4 {
                asym = asym.max((entries[i][j] - entries[j][i]).norm());
                let avg = (entries[i][j] + entries[j][i]) * 0.5;
                m[i][j] = avg;
                m[j][i] = avg;
            }
        }
        if asym > SYMMETRY_TOL {
            log::warn!("metric symmetrized; max asymmetry {asym:e}");
        }
        Self { entries: m, frame }
    }

    pub fn cartesian(entries: Mat4) -> Self {
        Self::new(entries, CoordinateFrame::Cartesian)
    }

    pub fn diag(d: [Complex; 4], frame: CoordinateFrame) -> Self {
        let mut m = linalg::zeros();
        for (i, v) in d.into_iter().enumerate() {
            m[i][i] = v;
        }
        Self { entries: m, frame }
    }

    pub fn diag_real(d: [f64; 4]) -> Self {
        Self::diag(d.map(|x| Complex::new(x, 0.0)), CoordinateFrame::Cartesian)
    }

    /// diag(1, 1, 1, -1)
    pub fn minkowski() -> Self {
        Self::diag_real([1.0, 1.0, 1.0, -1.0])
    }

    pub fn entries(&self) -> &Mat4 {
        &self.entries
    }

    pub fn get(&self, mu: usize, nu: usize) -> Complex {
        self.entries[mu][nu]
    }

    pub fn frame(&self) -> CoordinateFrame {
        self.frame
    }

    pub fn coordinate_labels(&self) -> [&'static str; 4] {
        self.frame.labels()
    }

    pub fn max_imag(&self) -> f64 {
        self.entries.iter().flatten().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.max_imag() < tol
    }

    pub fn det(&self) -> Complex {
        det4(self)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            entries: linalg::scale(&self.entries, Complex::new(s, 0.0)),
            frame: self.frame,
        }
    }

    pub fn max_abs_diff(&self, other: &Metric4) -> f64 {
        linalg::max_abs_diff(&self.entries, &other.entries)
    }
}

// Serialized as {"frame": ..., "entries": [[[re, im], ...], ...]}.
#[derive(Serialize, Deserialize)]
struct Metric4Repr {
    frame: CoordinateFrame,
    labels: [String; 4],
    entries: [[[f64; 2]; 4]; 4],
}

impl Serialize for Metric4 {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        Metric4Repr {
            frame: self.frame,
            labels: self.frame.labels().map(String::from),
            entries: self.entries.map(|r| r.map(|z| [z.re, z.im])),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Metric4 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = Metric4Repr::deserialize(d)?;
        Ok(Metric4::new(
            repr.entries.map(|r| r.map(|[re, im]| Complex::new(re, im))),
            repr.frame,
        ))
    }
}

/// Plane-wave phase `α = k·z − ω·t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneWavePhase {
    pub k: f64,
    pub omega: f64,
    pub z: f64,
    pub t: f64,
}

impl PlaneWavePhase {
    pub fn new(k: f64, omega: f64, z: f64, t: f64) -> Self {
        Self { k, omega, z, t }
    }

    /// A phase with the given value of α (k = 1, ω = 0, z = α, t = 0).
    pub fn from_alpha(alpha: f64) -> Self {
        Self::new(1.0, 0.0, alpha, 0.0)
    }

    pub fn alpha(&self) -> f64 {
        self.k * self.z - self.omega * self.t
    }
}

/// Probability-weighted list of metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricMixture {
    components: Vec<(f64, Metric4)>,
}

impl MetricMixture {
    pub fn new(components: Vec<(f64, Metric4)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Domain("mixture needs at least one component".into()));
        }
        if let Some((w, _)) = components.iter().find(|(w, _)| !(0.0..=1.0).contains(w)) {
            return Err(Error::Domain(format!("mixture weight {w} not in [0, 1]")));
        }
        let total: f64 = components.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("mixture weights sum to {total}, not 1")));
        }
        Ok(Self { components })
    }

    /// Equal-weight mixture.
    pub fn uniform(metrics: &[Metric4]) -> Result<Self> {
        let w = 1.0 / metrics.len().max(1) as f64;
        Self::new(metrics.iter().map(|m| (w, *m)).collect())
    }

    pub fn components(&self) -> &[(f64, Metric4)] {
        &self.components
    }
}

pub fn det4(m: &Metric4) -> Complex {
    linalg::det(&m.entries)
}

/// `sqrt(-det g)`, defined when the determinant is (numerically) real and
/// nonpositive.
pub fn probability_density(m: &Metric4) -> Result<f64> {
    let d = det4(m);
    if d.im.abs() >= DENSITY_IMAG_TOL || d.re > DENSITY_REAL_TOL || !d.re.is_finite() {
        return Err(Error::NonphysicalDeterminant(d));
    }
    Ok((-d.re).max(0.0).sqrt())
}

/// Entrywise weighted sum of the mixture's metrics.
pub fn superpose(mix: &MetricMixture) -> Result<Metric4> {
    let frame = mix.components[0].1.frame;
    if let Some((_, bad)) = mix.components.iter().find(|(_, m)| m.frame != frame) {
        return Err(Error::CoordinateFrame(format!(
            "{:?} mixed with {:?}",
            frame, bad.frame
        )));
    }
    let mut acc = linalg::zeros();
    for (w, m) in &mix.components {
        acc = linalg::add(&acc, &linalg::scale(&m.entries, Complex::new(*w, 0.0)));
    }
    Ok(Metric4 { entries: acc, frame })
}

/// Which pair of single-slit metrics is superposed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterferenceVariant {
    /// diag(1, 1, e^{iα}, −e^{−iα})
    TwoSlit1976,
    /// diag(e^{−iα}, e^{−iα}, e^{iα}, −e^{iα})
    PlaneWave2016,
}

impl InterferenceVariant {
    pub fn name(self) -> &'static str {
        match self {
            InterferenceVariant::TwoSlit1976 => "two_slit_1976",
            InterferenceVariant::PlaneWave2016 => "plane_wave_2016",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "two_slit_1976" => Ok(Self::TwoSlit1976),
            "plane_wave_2016" => Ok(Self::PlaneWave2016),
            other => Err(Error::Domain(format!("unknown interference variant '{other}'"))),
        }
    }

    pub fn metric(self, alpha: f64) -> Metric4 {
        match self {
            InterferenceVariant::TwoSlit1976 => two_slit_metric(alpha),
            InterferenceVariant::PlaneWave2016 => plane_wave_metric(PlaneWavePhase::from_alpha(alpha)),
        }
    }

    /// Closed form of the superposed density in terms of Δ = α − β.
    pub fn closed_form(self, delta: f64) -> f64 {
        let c = (0.5 * delta).cos();
        match self {
            InterferenceVariant::TwoSlit1976 => c.abs(),
            InterferenceVariant::PlaneWave2016 => c * c,
        }
    }
}

/// diag(1, 1, e^{iα}, −e^{−iα})
pub fn two_slit_metric(alpha: f64) -> Metric4 {
    let e = Complex::from_polar(1.0, alpha);
    Metric4::diag([ONE, ONE, e, -e.conj()], CoordinateFrame::Cartesian)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterferencePoint {
    pub alpha: f64,
    pub beta: f64,
    pub density: f64,
    /// The half-amplitude value `½|cos(Δ/2)|` printed for the two-slit case,
    /// kept alongside for comparison.
    pub printed_two_slit: f64,
}

/// Density of the equal-weight superposition of the variant's metrics at
/// phases α and β, for each α in the grid.
pub fn interference_pattern(
    alpha_grid: &[f64],
    beta: f64,
    variant: InterferenceVariant,
) -> Result<Vec<InterferencePoint>> {
    if alpha_grid.is_empty() {
        return Err(Error::Domain("alpha grid is empty".into()));
    }
    let g_beta = variant.metric(beta);
    alpha_grid
        .iter()
        .map(|&alpha| {
            let mix = MetricMixture::new(vec![(0.5, variant.metric(alpha)), (0.5, g_beta)])?;
            let density = probability_density(&superpose(&mix)?)?;
            Ok(InterferencePoint {
                alpha,
                beta,
                density,
                printed_two_slit: 0.5 * (0.5 * (alpha - beta)).cos().abs(),
            })
        })
        .collect()
}

/// `Wᵀ G W`; `w` must be invertible.
pub fn congruence_transform(g: &Metric4, w: &Mat4) -> Result<Metric4> {
    let d = linalg::det(w).norm();
    if d <= 1e-12 {
        return Err(Error::SingularTransform(d));
    }
    Ok(congruence_any(g, w))
}

/// `Wᵀ G W` without the invertibility check (singular transforms allowed).
pub fn congruence_any(g: &Metric4, w: &Mat4) -> Metric4 {
    Metric4 {
        entries: linalg::congruence(&g.entries, w),
        frame: g.frame,
    }
}

/// The complex transformation that makes the two-slit metric real: identity on
/// x, y and (1/√2)[[−i, 1], [1, −i]] on the z, t block.
pub fn real_making_transform() -> Mat4 {
    let s = FRAC_1_SQRT_2;
    let mut w = linalg::identity();
    w[2][2] = Complex::new(0.0, -s);
    w[2][3] = Complex::new(s, 0.0);
    w[3][2] = Complex::new(s, 0.0);
    w[3][3] = Complex::new(0.0, -s);
    w
}

/// diag(e^{−iα}, e^{−iα}, e^{iα}, −e^{iα}) with α = kz − ωt.
pub fn plane_wave_metric(phase: PlaneWavePhase) -> Metric4 {
    plane_wave_from_exp(Complex::from_polar(1.0, phase.alpha()))
}

/// The plane-wave metric for a given `e^{iα}` (which may be off the unit
/// circle when coordinates are complex).
pub fn plane_wave_from_exp(e: Complex) -> Metric4 {
    let em = e.inv();
    Metric4::diag([em, em, e, -e], CoordinateFrame::Cartesian)
}

/// diag(1+be^{−iα}, 1+be^{−iα}, 1+be^{iα}, −1−be^{iα}).
pub fn perturbed_metric(phase: PlaneWavePhase, b: f64) -> Result<Metric4> {
    if !(b.abs() < 1.0) {
        return Err(Error::PerturbationRegime(b.abs()));
    }
    Ok(perturbed_from_exp(Complex::from_polar(1.0, phase.alpha()), b))
}

pub fn perturbed_from_exp(e: Complex, b: f64) -> Metric4 {
    let em = e.inv();
    let p = ONE + em * b;
    let q = ONE + e * b;
    Metric4::diag([p, p, q, -q], CoordinateFrame::Cartesian)
}

/// One of the eight real metrics obtained from the plane-wave metric by
/// coefficient-restricted coordinate transformations.
#[derive(Debug, Clone, PartialEq)]
pub struct FMetric {
    pub name: &'static str,
    /// Printed coordinate table, rows x', y', z', t'.
    pub table: [&'static str; 4],
    /// Coefficients of cos α in each entry.
    cos_part: [[i8; 4]; 4],
    /// Coefficients of sin α in each entry.
    sin_part: [[i8; 4]; 4],
}

impl FMetric {
    /// The printed matrix evaluated at phase α.
    pub fn at(&self, alpha: f64) -> Metric4 {
        let (s, c) = alpha.sin_cos();
        let mut m = linalg::zeros();
        for i in 0..4 {
            for j in 0..4 {
                m[i][j] = Complex::new(
                    f64::from(self.cos_part[i][j]) * c + f64::from(self.sin_part[i][j]) * s,
                    0.0,
                );
            }
        }
        Metric4::cartesian(m)
    }

    /// The coordinate table as a matrix A with X' = A X.
    pub fn transform(&self) -> Mat4 {
        let mut a = linalg::zeros();
        for (row, text) in a.iter_mut().zip(self.table) {
            *row = parse_linear_form(text).expect("catalog tables are well formed");
        }
        a
    }
}

/// Parses a printed primed-coordinate row such as `x'=-x+z-it` into its
/// coefficients on (x, y, z, t).
pub fn parse_linear_form(text: &str) -> Result<[Complex; 4]> {
    let bad = || Error::Domain(format!("cannot parse coordinate row '{text}'"));
    let rhs = text.split('=').nth(1).ok_or_else(bad)?;
    let mut coeffs = [ZERO; 4];
    let mut chars = rhs.chars().filter(|c| !c.is_whitespace()).peekable();
    while chars.peek().is_some() {
        let mut sign = 1.0;
        while let Some(&c) = chars.peek() {
            match c {
                '+' => {}
                '-' => sign = -sign,
                _ => break,
            }
            chars.next();
        }
        let mut factor = Complex::new(sign, 0.0);
        if chars.peek() == Some(&'i') {
            chars.next();
            factor *= linalg::I;
        }
        let idx = match chars.next() {
            Some('x') => 0,
            Some('y') => 1,
            Some('z') => 2,
            Some('t') => 3,
            _ => return Err(bad()),
        };
        coeffs[idx] += factor;
    }
    Ok(coeffs)
}

macro_rules! fpat {
    ($($r:expr),*) => { [$($r),*] };
}

/// The eight F metrics with their coordinate tables, as printed
/// (C = cos α, S = sin α).
pub fn f_metric_catalog() -> Vec<FMetric> {
    // Each matrix shares the diagonal (2C, 2C, 4C, −4C); off-diagonal C and S
    // entries differ in sign only.
    struct Raw {
        name: &'static str,
        table: [&'static str; 4],
        xz: i8,
        xt: i8,
        yz: i8,
        yt: i8,
    }
    let raws = [
        Raw {
            name: "F1",
            table: ["x'=-x+z-it", "y'=-y-z-it", "z'=x-z-it", "t'=iy+iz+t"],
            xz: -2,
            xt: 2,
            yz: 2,
            yt: 2,
        },
        Raw {
            name: "F2",
            table: ["x'=-x+z-it", "y'=-y+z+it", "z'=x-z-it", "t'=-iy+iz+t"],
            xz: -2,
            xt: 2,
            yz: -2,
            yt: -2,
        },
        Raw {
            name: "F3",
            table: ["x'=-x-z+it", "y'=-y-z-it", "z'=-x-z-it", "t'=iy+iz+t"],
            xz: 2,
            xt: -2,
            yz: 2,
            yt: 2,
        },
        Raw {
            name: "F4",
            table: ["x'=-x-z+it", "y'=-y+z+it", "z'=-x-z-it", "t'=-iy+iz+t"],
            xz: 2,
            xt: -2,
            yz: -2,
            yt: -2,
        },
        Raw {
            name: "F5",
            table: ["x'=-x-z-it", "y'=-y+z-it", "z'=y-z-it", "t'=ix+iz+t"],
            xz: 2,
            xt: 2,
            yz: -2,
            yt: 2,
        },
        Raw {
            name: "F6",
            table: ["x'=-x+z+it", "y'=-y+z-it", "z'=y-z-it", "t'=-ix+iz+t"],
            xz: -2,
            xt: -2,
            yz: -2,
            yt: 2,
        },
        Raw {
            name: "F7",
            table: ["x'=-x-z-it", "y'=-y-z+it", "z'=-y-z-it", "t'=ix+iz+t"],
            xz: 2,
            xt: 2,
            yz: 2,
            yt: -2,
        },
        Raw {
            name: "F8",
            table: ["x'=-x+z+it", "y'=-y-z+it", "z'=-y-z-it", "t'=-ix+iz+t"],
            xz: -2,
            xt: -2,
            yz: 2,
            yt: -2,
        },
    ];
    raws.into_iter()
        .map(|r| {
            let cos_part = fpat!([2, 0, r.xz, 0], [0, 2, r.yz, 0], [r.xz, r.yz, 4, 0], [0, 0, 0, -4]);
            let sin_part = fpat!([0, 0, 0, r.xt], [0, 0, 0, r.yt], [0, 0, 0, 0], [r.xt, r.yt, 0, 0]);
            FMetric {
                name: r.name,
                table: r.table,
                cos_part,
                sin_part,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn cplx(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    #[test]
    fn minkowski_det_and_density() {
        let m = Metric4::minkowski();
        assert_eq!(det4(&m), cplx(-1.0, 0.0));
        assert_eq!(probability_density(&m).unwrap(), 1.0);
    }

    #[test]
    fn two_slit_det_is_minus_one() {
        for alpha in [0.0, 0.3, 1.7, -2.2, 5.0] {
            let d = det4(&two_slit_metric(alpha));
            assert!((d - cplx(-1.0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn plane_wave_values() {
        let m = plane_wave_metric(PlaneWavePhase::from_alpha(0.0));
        assert_eq!(m, Metric4::minkowski());
        let m = plane_wave_metric(PlaneWavePhase::from_alpha(PI));
        let want = Metric4::diag_real([-1.0, -1.0, -1.0, 1.0]);
        assert!(m.max_abs_diff(&want) < 1e-15);
        let d = det4(&plane_wave_metric(PlaneWavePhase::from_alpha(0.7)));
        assert!((d - cplx(-1.0, 0.0)).norm() < 1e-15);
        // α = kz − ωt
        let p = PlaneWavePhase::new(2.0, 3.0, 0.5, 0.25);
        assert!((p.alpha() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn perturbed_values() {
        let m = perturbed_metric(PlaneWavePhase::from_alpha(0.3), 0.0).unwrap();
        assert!(m.max_abs_diff(&Metric4::minkowski()) < 1e-15);
        let m = perturbed_metric(PlaneWavePhase::from_alpha(0.0), 0.01).unwrap();
        assert!(m.max_abs_diff(&Metric4::diag_real([1.01, 1.01, 1.01, -1.01])) < 1e-15);
        let (b, alpha) = (0.01, PI / 3.0);
        let e = Complex::from_polar(1.0, alpha);
        let want = -(ONE + e.conj() * b).powi(2) * (ONE + e * b).powi(2);
        let d = det4(&perturbed_metric(PlaneWavePhase::from_alpha(alpha), b).unwrap());
        assert!((d - want).norm() < 1e-14);
        assert!(matches!(
            perturbed_metric(PlaneWavePhase::from_alpha(0.0), 1.0),
            Err(Error::PerturbationRegime(_))
        ));
    }

    #[test]
    fn density_rejects_nonphysical() {
        assert!(matches!(
            probability_density(&Metric4::diag_real([1.0, 1.0, 1.0, 1.0])),
            Err(Error::NonphysicalDeterminant(_))
        ));
        let m = Metric4::diag([ONE, ONE, ONE, cplx(-1.0, 0.1)], CoordinateFrame::Cartesian);
        assert!(probability_density(&m).is_err());
    }

    #[test]
    fn superpose_cases() {
        let m = two_slit_metric(0.4);
        let one = superpose(&MetricMixture::new(vec![(1.0, m)]).unwrap()).unwrap();
        assert_eq!(one, m);
        let mk = Metric4::minkowski();
        let two = superpose(&MetricMixture::uniform(&[mk, mk]).unwrap()).unwrap();
        assert_eq!(two, mk);

        let (a, b) = (0.9, -0.4);
        let s = superpose(&MetricMixture::uniform(&[two_slit_metric(a), two_slit_metric(b)]).unwrap()).unwrap();
        let ea = Complex::from_polar(1.0, a);
        let eb = Complex::from_polar(1.0, b);
        let want = Metric4::diag(
            [ONE, ONE, (ea + eb) * 0.5, -(ea.conj() + eb.conj()) * 0.5],
            CoordinateFrame::Cartesian,
        );
        assert!(s.max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn superpose_rejects_mixed_frames() {
        let a = Metric4::minkowski();
        let b = Metric4::diag_real([1.0, 1.0, 1.0, -1.0]);
        let b = Metric4::new(*b.entries(), CoordinateFrame::Spherical);
        let mix = MetricMixture::uniform(&[a, b]).unwrap();
        assert!(matches!(superpose(&mix), Err(Error::CoordinateFrame(_))));
    }

    #[test]
    fn mixture_validation() {
        let m = Metric4::minkowski();
        assert!(MetricMixture::new(vec![]).is_err());
        assert!(MetricMixture::new(vec![(0.5, m), (0.4, m)]).is_err());
        assert!(MetricMixture::new(vec![(1.5, m), (-0.5, m)]).is_err());
    }

    #[test]
    fn interference_examples() {
        let v76 = InterferenceVariant::TwoSlit1976;
        let v16 = InterferenceVariant::PlaneWave2016;
        let p = interference_pattern(&[0.8], 0.8, v76).unwrap();
        assert!((p[0].density - 1.0).abs() < 1e-12);
        assert!((p[0].printed_two_slit - 0.5).abs() < 1e-12);
        for v in [v76, v16] {
            let p = interference_pattern(&[PI + 0.2], 0.2, v).unwrap();
            assert!(p[0].density < 1e-8, "{v:?}: {}", p[0].density);
        }
        let p = interference_pattern(&[PI / 2.0], 0.0, v16).unwrap();
        assert!((p[0].density - 0.5).abs() < 1e-12);
        assert!(interference_pattern(&[], 0.0, v16).is_err());
    }

    #[test]
    fn real_making_transform_block() {
        let w = real_making_transform();
        assert!((linalg::det(&w).norm() - 1.0).abs() < 1e-14);
        for alpha in [0.0, 0.4, 2.0, -1.3] {
            let g = congruence_transform(&two_slit_metric(alpha), &w).unwrap();
            let (s, c) = alpha.sin_cos();
            let want = Metric4::diag_real([1.0, 1.0, -c, c]);
            let mut want = *want.entries();
            want[2][3] = cplx(s, 0.0);
            want[3][2] = cplx(s, 0.0);
            assert!(linalg::max_abs_diff(g.entries(), &want) < 1e-12);
            assert!(g.is_real(1e-12));
        }
    }

    #[test]
    fn congruence_identity_and_singular() {
        let g = two_slit_metric(0.3);
        assert_eq!(congruence_transform(&g, &linalg::identity()).unwrap(), g);
        assert!(matches!(
            congruence_transform(&g, &linalg::zeros()),
            Err(Error::SingularTransform(_))
        ));
    }

    #[test]
    fn f1_at_zero_phase() {
        let cat = f_metric_catalog();
        assert_eq!(cat.len(), 8);
        let f1 = cat[0].at(0.0);
        let want = linalg::from_real([
            [2.0, 0.0, -2.0, 0.0],
            [0.0, 2.0, 2.0, 0.0],
            [-2.0, 2.0, 4.0, 0.0],
            [0.0, 0.0, 0.0, -4.0],
        ]);
        assert_eq!(*f1.entries(), want);
    }

    #[test]
    fn parse_rows() {
        let r = parse_linear_form("t'=-iy+iz+t").unwrap();
        assert_eq!(r, [ZERO, cplx(0.0, -1.0), cplx(0.0, 1.0), ONE]);
        assert!(parse_linear_form("x'=-q").is_err());
    }

    #[test]
    fn json_shape() {
        let m = two_slit_metric(0.5);
        let v: serde_json::Value = serde_json::to_value(m).unwrap();
        assert_eq!(v["entries"][2][2][0].as_f64().unwrap(), 0.5f64.cos());
        assert_eq!(v["labels"][3], "t");
        let back: Metric4 = serde_json::from_value(v).unwrap();
        assert_eq!(back, m);
    }

    fn arb_mat() -> impl Strategy<Value = Mat4> {
        proptest::array::uniform4(proptest::array::uniform4((-2.0..2.0f64, -2.0..2.0f64)))
            .prop_map(|m| m.map(|r| r.map(|(a, b)| cplx(a, b))))
    }

    proptest! {
        #[test]
        fn half_sum_det_is_sixteenth(a in arb_mat(), b in arb_mat()) {
            let (ga, gb) = (Metric4::cartesian(a), Metric4::cartesian(b));
            let sum = linalg::add(ga.entries(), gb.entries());
            let half = superpose(&MetricMixture::uniform(&[ga, gb]).unwrap()).unwrap();
            let lhs = det4(&half);
            let rhs = linalg::det(&sum) / 16.0;
            prop_assert!((lhs - rhs).norm() <= 1e-10 * (1.0 + rhs.norm()));
        }

        #[test]
        fn congruence_det_multiplicative(g in arb_mat(), w in arb_mat()) {
            let gm = Metric4::cartesian(g);
            let out = congruence_any(&gm, &w);
            let dw = linalg::det(&w);
            let want = dw * dw * det4(&gm);
            prop_assert!((det4(&out) - want).norm() <= 1e-10 * (1.0 + want.norm()));
        }

        #[test]
        fn plane_wave_density_is_one(alpha in -50.0..50.0f64) {
            let d = probability_density(&plane_wave_metric(PlaneWavePhase::from_alpha(alpha))).unwrap();
            prop_assert!((d - 1.0).abs() < 1e-12);
        }

        #[test]
        fn w_congruence_real(alpha in -20.0..20.0f64) {
            let g = congruence_any(&two_slit_metric(alpha), &real_making_transform());
            prop_assert!(g.max_imag() < 1e-12);
        }

        #[test]
        fn f_metrics_symmetric_and_singular(alpha in -20.0..20.0f64) {
            for f in f_metric_catalog() {
                let m = f.at(alpha);
                for i in 0..4 {
                    for j in 0..4 {
                        prop_assert_eq!(m.get(i, j), m.get(j, i));
                    }
                }
                prop_assert!(det4(&m).norm() < 1e-9);
            }
        }

        #[test]
        fn interference_symmetric_in_alpha_beta(a in -10.0..10.0f64, b in -10.0..10.0f64) {
            for v in [InterferenceVariant::TwoSlit1976, InterferenceVariant::PlaneWave2016] {
                let ab = interference_pattern(&[a], b, v).unwrap()[0].density;
                let ba = interference_pattern(&[b], a, v).unwrap()[0].density;
                prop_assert!((ab - ba).abs() < 1e-12);
                let shifted = interference_pattern(&[a + 4.0 * PI], b, v).unwrap()[0].density;
                prop_assert!((ab - shifted).abs() < 1e-10);
            }
            let v = InterferenceVariant::PlaneWave2016;
            let p = interference_pattern(&[a], b, v).unwrap()[0].density;
            let q = interference_pattern(&[a + 2.0 * PI], b, v).unwrap()[0].density;
            prop_assert!((p - q).abs() < 1e-10);
        }
    }
}
