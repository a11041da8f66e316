//! Finite-difference differential geometry of complex metric fields:
//! Christoffel symbols, Ricci tensor, geodesics and the volume-evolution
//! residual of a small geodesic bundle.

use crate::error::{Error, Result};
use crate::linalg::{self, Mat4, ZERO};
use crate::metric::{self, f_metric_catalog, Metric4};
use crate::rng::RngStream;
use crate::walk::{self, VenueState, WalkConfig};
use crate::Complex;
use serde::{Deserialize, Serialize};
use std::sync::{Arc, OnceLock};

/// A point in coordinate space. Coordinates may be complex; fields are
/// evaluated by analytic continuation and differentiated along real directions.
pub type Point = [Complex; 4];

pub fn real_point(x: [f64; 4]) -> Point {
    x.map(|v| Complex::new(v, 0.0))
}

type Evaluator = dyn Fn(&Point) -> Metric4 + Send + Sync;

/// A metric-valued function of the coordinates.
#[derive(Clone)]
pub struct MetricField {
    pub name: String,
    evaluator: Arc<Evaluator>,
    /// Characteristic length; finite-difference steps scale with it.
    pub smoothness_scale: f64,
}

impl std::fmt::Debug for MetricField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MetricField")
            .field("name", &self.name)
            .field("smoothness_scale", &self.smoothness_scale)
            .finish()
    }
}

impl MetricField {
    pub fn new(
        name: impl Into<String>,
        smoothness_scale: f64,
        evaluator: impl Fn(&Point) -> Metric4 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            evaluator: Arc::new(evaluator),
            smoothness_scale,
        }
    }

    pub fn eval(&self, x: &Point) -> Metric4 {
        (self.evaluator)(x)
    }

    /// Default finite-difference step, 1e−4 of the smoothness scale.
    pub fn step(&self) -> f64 {
        self.smoothness_scale * 1e-4
    }
}

pub fn minkowski_field() -> MetricField {
    MetricField::new("minkowski", 1.0, |_| Metric4::minkowski())
}

fn phase_exp(k: f64, omega: f64, x: &Point) -> Complex {
    let alpha = x[2] * k - x[3] * omega;
    (alpha * Complex::new(0.0, 1.0)).exp()
}

fn wave_scale(k: f64, omega: f64) -> f64 {
    1.0 / k.abs().max(omega.abs()).max(1e-300)
}

/// diag(e^{−iα}, e^{−iα}, e^{iα}, −e^{iα}) with α = kz − ωt.
pub fn plane_wave_field(k: f64, omega: f64) -> MetricField {
    MetricField::new("plane_wave", wave_scale(k, omega), move |x| {
        metric::plane_wave_from_exp(phase_exp(k, omega, x))
    })
}

/// The plane-wave perturbation of Minkowski with amplitude b.
pub fn perturbed_field(k: f64, omega: f64, b: f64) -> Result<MetricField> {
    if !(b.abs() < 1.0) {
        return Err(Error::PerturbationRegime(b.abs()));
    }
    Ok(MetricField::new("perturbed", wave_scale(k, omega), move |x| {
        metric::perturbed_from_exp(phase_exp(k, omega, x), b)
    }))
}

/// The printed F metric `index` (0-based) with α = kz − ωt.
pub fn f_metric_field(index: usize, k: f64, omega: f64) -> Result<MetricField> {
    let f = f_metric_catalog()
        .into_iter()
        .nth(index)
        .ok_or_else(|| Error::Domain(format!("F metric index {index} out of 0..8")))?;
    Ok(MetricField::new(f.name, wave_scale(k, omega), move |x| {
        f.at((x[2] * k - x[3] * omega).re)
    }))
}

/// Γ^λ_{μν}, indexed `gamma[λ][μ][ν]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChristoffelSet {
    pub gamma: [[[Complex; 4]; 4]; 4],
}

impl ChristoffelSet {
    /// Γ^λ_{μν} a^μ b^ν
    pub fn contract(&self, a: &Point, b: &Point) -> Point {
        let mut out = [ZERO; 4];
        for (l, o) in out.iter_mut().enumerate() {
            for m in 0..4 {
                if a[m] == ZERO {
                    continue;
                }
                for n in 0..4 {
                    *o += self.gamma[l][m][n] * a[m] * b[n];
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.gamma
            .iter()
            .flatten()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &ChristoffelSet) -> f64 {
        let mut m: f64 = 0.0;
        for l in 0..4 {
            for a in 0..4 {
                for b in 0..4 {
                    m = m.max((self.gamma[l][a][b] - other.gamma[l][a][b]).norm());
                }
            }
        }
        m
    }
}

struct Derivs {
    ginv: Mat4,
    /// dg[σ] = ∂_σ g
    dg: [Mat4; 4],
    /// d2g[a][b] = ∂_a ∂_b g
    d2g: Option<[[Mat4; 4]; 4]>,
}

fn shifted(x: &Point, moves: &[(usize, f64)]) -> Point {
    let mut y = *x;
    for &(axis, h) in moves {
        y[axis] += h;
    }
    y
}

fn sub_scaled(a: &Mat4, b: &Mat4, s: f64) -> Mat4 {
    let mut out = linalg::zeros();
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = (a[i][j] - b[i][j]) * s;
        }
    }
    out
}

fn derivs(field: &MetricField, x: &Point, h: f64, second: bool) -> Result<Derivs> {
    let ev = |p: Point| *field.eval(&p).entries();
    let g = ev(*x);
    let det = linalg::det(&g).norm();
    let at = x.map(|z| z.re);
    if !(det > 1e-9) {
        return Err(Error::SingularMetric { at, det });
    }
    let ginv = linalg::inverse(&g, 1e-14).ok_or(Error::SingularMetric { at, det })?;
    let plus: [Mat4; 4] = std::array::from_fn(|a| ev(shifted(x, &[(a, h)])));
    let minus: [Mat4; 4] = std::array::from_fn(|a| ev(shifted(x, &[(a, -h)])));
    let dg: [Mat4; 4] = std::array::from_fn(|a| sub_scaled(&plus[a], &minus[a], 0.5 / h));
    let d2g = second.then(|| {
        let mut d2 = [[linalg::zeros(); 4]; 4];
        for a in 0..4 {
            let s = linalg::add(&plus[a], &minus[a]);
            d2[a][a] = sub_scaled(&s, &linalg::scale(&g, Complex::new(2.0, 0.0)), 1.0 / (h * h));
            for b in a + 1..4 {
                let pp = ev(shifted(x, &[(a, h), (b, h)]));
                let pm = ev(shifted(x, &[(a, h), (b, -h)]));
                let mp = ev(shifted(x, &[(a, -h), (b, h)]));
                let mm = ev(shifted(x, &[(a, -h), (b, -h)]));
                let num = linalg::add(&sub_scaled(&pp, &pm, 1.0), &sub_scaled(&mm, &mp, 1.0));
                let m = linalg::scale(&num, Complex::new(0.25 / (h * h), 0.0));
                d2[a][b] = m;
                d2[b][a] = m;
            }
        }
        d2
    });
    Ok(Derivs { ginv, dg, d2g })
}

type Rank3 = [[[Complex; 4]; 4]; 4];

/// Γ_{σμν} = ½(∂_μ g_{σν} + ∂_ν g_{σμ} − ∂_σ g_{μν})
fn lowered(dg: &[Mat4; 4]) -> Rank3 {
    let mut out = [[[ZERO; 4]; 4]; 4];
    for s in 0..4 {
        for m in 0..4 {
            for n in 0..4 {
                out[s][m][n] = (dg[m][s][n] + dg[n][s][m] - dg[s][m][n]) * 0.5;
            }
        }
    }
    out
}

fn raise(ginv: &Mat4, low: &Rank3) -> Rank3 {
    let mut out = [[[ZERO; 4]; 4]; 4];
    for l in 0..4 {
        for s in 0..4 {
            let gi = ginv[l][s];
            if gi == ZERO {
                continue;
            }
            for m in 0..4 {
                for n in 0..4 {
                    out[l][m][n] += gi * low[s][m][n];
                }
            }
        }
    }
    out
}

/// Christoffel symbols by central differences with step `h`.
pub fn christoffel_with_step(field: &MetricField, x: &Point, h: f64) -> Result<ChristoffelSet> {
    let d = derivs(field, x, h, false)?;
    Ok(ChristoffelSet {
        gamma: raise(&d.ginv, &lowered(&d.dg)),
    })
}

/// Christoffel symbols at the field's default step.
pub fn christoffel(field: &MetricField, x: &Point) -> Result<ChristoffelSet> {
    christoffel_with_step(field, x, field.step())
}

/// Sign applied to the standard contraction
/// R_{μν} = ∂_λΓ^λ_{μν} − ∂_νΓ^λ_{μλ} + Γ^λ_{λσ}Γ^σ_{μν} − Γ^λ_{νσ}Γ^σ_{μλ}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RicciConvention {
    Standard,
    Negated,
}

impl RicciConvention {
    fn sign(self) -> f64 {
        match self {
            Self::Standard => 1.0,
            Self::Negated => -1.0,
        }
    }
}

fn ricci_standard(field: &MetricField, x: &Point, h: f64) -> Result<Mat4> {
    let d = derivs(field, x, h, true)?;
    let d2g = d.d2g.expect("second derivatives requested");
    let low = lowered(&d.dg);
    let gamma = raise(&d.ginv, &low);
    // dΓ[ρ] = ∂_ρ Γ^λ_{μν} = (∂_ρ g^{λσ}) Γ_{σμν} + g^{λσ} ∂_ρ Γ_{σμν}
    let mut dgamma = [[[[ZERO; 4]; 4]; 4]; 4];
    for (r, dgr) in dgamma.iter_mut().enumerate() {
        let dginv = linalg::scale(
            &linalg::matmul(&d.ginv, &linalg::matmul(&d.dg[r], &d.ginv)),
            Complex::new(-1.0, 0.0),
        );
        let mut dlow = [[[ZERO; 4]; 4]; 4];
        for s in 0..4 {
            for m in 0..4 {
                for n in 0..4 {
                    dlow[s][m][n] = (d2g[r][m][s][n] + d2g[r][n][s][m] - d2g[r][s][m][n]) * 0.5;
                }
            }
        }
        let a = raise(&dginv, &low);
        let b = raise(&d.ginv, &dlow);
        for l in 0..4 {
            for m in 0..4 {
                for n in 0..4 {
                    dgr[l][m][n] = a[l][m][n] + b[l][m][n];
                }
            }
        }
    }
    let mut ric = linalg::zeros();
    for m in 0..4 {
        for n in 0..4 {
            let mut acc = ZERO;
            for l in 0..4 {
                acc += dgamma[l][l][m][n] - dgamma[n][l][m][l];
                for s in 0..4 {
                    acc += gamma[l][l][s] * gamma[s][m][n] - gamma[l][n][s] * gamma[s][m][l];
                }
            }
            ric[m][n] = acc;
        }
    }
    Ok(ric)
}

/// Calibration point for the sign convention.
const CAL_K: f64 = 1.3;
const CAL_OMEGA: f64 = 0.7;

fn calibrate() -> Result<RicciConvention> {
    let field = plane_wave_field(CAL_K, CAL_OMEGA);
    let r = ricci_standard(&field, &real_point([0.0, 0.0, 0.4, 0.2]), field.step())?;
    let target = -1.5 * CAL_K * CAL_OMEGA;
    let close = |v: Complex| (v - Complex::new(target, 0.0)).norm() < 1e-4 * target.abs();
    if close(r[2][3]) {
        Ok(RicciConvention::Standard)
    } else if close(-r[2][3]) {
        Ok(RicciConvention::Negated)
    } else {
        Err(Error::Calibration(format!(
            "plane-wave R_zt = {} matches neither sign of {target}",
            r[2][3]
        )))
    }
}

static CONVENTION: OnceLock<std::result::Result<RicciConvention, String>> = OnceLock::new();

/// The sign convention locked by calibrating on the plane-wave metric so that
/// R_zt = −3kω/2.
pub fn ricci_convention() -> Result<RicciConvention> {
    CONVENTION
        .get_or_init(|| calibrate().map_err(|e| e.to_string()))
        .clone()
        .map_err(Error::Calibration)
}

pub fn ricci_with_step(field: &MetricField, x: &Point, h: f64) -> Result<Mat4> {
    let sign = ricci_convention()?.sign();
    Ok(linalg::scale(&ricci_standard(field, x, h)?, Complex::new(sign, 0.0)))
}

/// R_{μν} in the calibrated convention. Second differences at 1e−4 of the
/// smoothness scale lose about 1e−8 absolute to rounding, so this uses
/// h = 1e−3·scale and one Richardson step, (4R(h) − R(2h))/3.
pub fn ricci(field: &MetricField, x: &Point) -> Result<Mat4> {
    let h = field.smoothness_scale * 1e-3;
    let fine = ricci_with_step(field, x, h)?;
    let coarse = ricci_with_step(field, x, 2.0 * h)?;
    let mut out = linalg::zeros();
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = (fine[i][j] * 4.0 - coarse[i][j]) / 3.0;
        }
    }
    Ok(out)
}

/// |F(h) − F(h/2)| / |F(h/2) − F(h/4)|; about 4 for a second-order scheme.
pub fn richardson_ratio(f: impl Fn(f64) -> Result<Vec<Complex>>, h: f64) -> Result<f64> {
    let (a, b, c) = (f(h)?, f(h / 2.0)?, f(h / 4.0)?);
    let dist = |u: &[Complex], v: &[Complex]| u.iter().zip(v).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
    Ok(dist(&a, &b) / dist(&b, &c))
}

pub fn christoffel_richardson(field: &MetricField, x: &Point, h: f64) -> Result<f64> {
    richardson_ratio(
        |s| {
            Ok(christoffel_with_step(field, x, s)?
                .gamma
                .iter()
                .flatten()
                .flatten()
                .copied()
                .collect())
        },
        h,
    )
}

pub fn ricci_richardson(field: &MetricField, x: &Point, h: f64) -> Result<f64> {
    richardson_ratio(
        |s| Ok(ricci_with_step(field, x, s)?.iter().flatten().copied().collect()),
        h,
    )
}

/// Labels and closed forms of the plane-wave Ricci components.
pub const PLANE_WAVE_COMPONENTS: [(&str, usize, usize); 5] =
    [("xx", 0, 0), ("yy", 1, 1), ("zz", 2, 2), ("tt", 3, 3), ("zt", 2, 3)];

pub fn plane_wave_ricci_reference(k: f64, omega: f64, z: f64, t: f64) -> Mat4 {
    let alpha = k * z - omega * t;
    let transverse = Complex::from_polar(1.0, -2.0 * alpha) * ((k * k - omega * omega) / 2.0);
    let mut r = linalg::zeros();
    r[0][0] = transverse;
    r[1][1] = transverse;
    r[2][2] = Complex::new(k * k + omega * omega / 2.0, 0.0);
    r[3][3] = Complex::new(omega * omega + k * k / 2.0, 0.0);
    r[2][3] = Complex::new(-1.5 * k * omega, 0.0);
    r[3][2] = r[2][3];
    r
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RicciComparison {
    pub component: String,
    pub z: f64,
    pub t: f64,
    pub k: f64,
    pub omega: f64,
    pub computed_re: f64,
    pub computed_im: f64,
    pub reference_re: f64,
    pub reference_im: f64,
    pub rel_err: f64,
}

/// Numerical plane-wave Ricci against the closed forms at each (k, ω, z, t).
pub fn ricci_plane_wave_comparison(samples: &[(f64, f64, f64, f64)]) -> Result<Vec<RicciComparison>> {
    let mut rows = Vec::new();
    for &(k, omega, z, t) in samples {
        let field = plane_wave_field(k, omega);
        let r = ricci(&field, &real_point([0.0, 0.0, z, t]))?;
        let reference = plane_wave_ricci_reference(k, omega, z, t);
        for (name, i, j) in PLANE_WAVE_COMPONENTS {
            let (c, e) = (r[i][j], reference[i][j]);
            rows.push(RicciComparison {
                component: name.to_string(),
                z,
                t,
                k,
                omega,
                computed_re: c.re,
                computed_im: c.im,
                reference_re: e.re,
                reference_im: e.im,
                rel_err: (c - e).norm() / e.norm(),
            });
        }
    }
    Ok(rows)
}

pub fn ricci_comparison_csv(rows: &[RicciComparison]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// First-order coefficient c₁ in R(b) = c₁b + c₂b² + …, from runs at b and b/2.
pub fn perturbed_first_order(
    k: f64,
    omega: f64,
    point: [f64; 4],
    b: f64,
    component: (usize, usize),
) -> Result<Complex> {
    let x = real_point(point);
    let at = |bb: f64| -> Result<Complex> {
        let r = ricci(&perturbed_field(k, omega, bb)?, &x)?;
        Ok(r[component.0][component.1])
    };
    Ok((at(b / 2.0)? * 4.0 - at(b)?) / b)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicState {
    pub position: Point,
    /// dx/ds
    pub velocity: Point,
    pub s: f64,
}

impl GeodesicState {
    pub fn real(position: [f64; 4], velocity: [f64; 4]) -> Self {
        Self {
            position: real_point(position),
            velocity: real_point(velocity),
            s: 0.0,
        }
    }
}

/// Venue-migration displacement applied to the position after every step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StochasticKick {
    pub walk: WalkConfig,
    pub rng: RngStream,
    /// Coordinate displacement per migration (x, y, z, t).
    pub quantum: [f64; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<GeodesicState>,
    /// Why integration stopped early, if it did.
    pub diagnostic: Option<String>,
}

fn accel(field: &MetricField, x: &Point, v: &Point) -> Result<Point> {
    let c = christoffel(field, x)?;
    Ok(c.contract(v, v).map(|a| -a))
}

fn axpy(x: &Point, a: f64, y: &Point) -> Point {
    std::array::from_fn(|i| x[i] + y[i] * a)
}

fn rk4(field: &MetricField, x: &Point, v: &Point, ds: f64) -> Result<(Point, Point)> {
    let a1 = accel(field, x, v)?;
    let (x2, v2) = (axpy(x, ds / 2.0, v), axpy(v, ds / 2.0, &a1));
    let a2 = accel(field, &x2, &v2)?;
    let (x3, v3) = (axpy(x, ds / 2.0, &v2), axpy(v, ds / 2.0, &a2));
    let a3 = accel(field, &x3, &v3)?;
    let (x4, v4) = (axpy(x, ds, &v3), axpy(v, ds, &a3));
    let a4 = accel(field, &x4, &v4)?;
    let xn = std::array::from_fn(|i| x[i] + (v[i] + (v2[i] + v3[i]) * 2.0 + v4[i]) * (ds / 6.0));
    let vn = std::array::from_fn(|i| v[i] + (a1[i] + (a2[i] + a3[i]) * 2.0 + a4[i]) * (ds / 6.0));
    Ok((xn, vn))
}

/// Fixed-step RK4 integration of ẍ = −Γ(ẋ, ẋ).
pub fn geodesic_integrate(
    field: &MetricField,
    start: GeodesicState,
    steps: usize,
    ds: f64,
    stochastic: Option<StochasticKick>,
) -> Result<Trajectory> {
    christoffel(field, &start.position)?;
    let mut kick = stochastic;
    if let Some(k) = &kick {
        k.walk.validate()?;
    }
    let mut venue = VenueState::default();
    let mut states = Vec::with_capacity(steps + 1);
    states.push(start);
    let mut cur = start;
    for _ in 0..steps {
        let (mut x, v) = match rk4(field, &cur.position, &cur.velocity, ds) {
            Ok(next) => next,
            Err(e) => {
                return Ok(Trajectory {
                    states,
                    diagnostic: Some(format!("stopped at s = {}: {e}", cur.s)),
                })
            }
        };
        if let Some(k) = kick.as_mut() {
            let next = walk::step(&venue, &k.walk, &mut k.rng);
            let moved = [
                next.spatial[0] - venue.spatial[0],
                next.spatial[1] - venue.spatial[1],
                next.spatial[2] - venue.spatial[2],
                next.t_coord - venue.t_coord,
            ];
            for i in 0..4 {
                x[i] += moved[i] as f64 * k.quantum[i];
            }
            venue = next;
        }
        cur = GeodesicState {
            position: x,
            velocity: v,
            s: cur.s + ds,
        };
        states.push(cur);
    }
    Ok(Trajectory {
        states,
        diagnostic: None,
    })
}

/// g_{μν} v^μ v^ν
pub fn norm_sq(field: &MetricField, x: &Point, v: &Point) -> Complex {
    let g = field.eval(x);
    let mut acc = ZERO;
    for i in 0..4 {
        for j in 0..4 {
            acc += g.get(i, j) * v[i] * v[j];
        }
    }
    acc
}

/// CSV `s,x,y,z,t,vx,vy,vz,vt` (real parts).
pub fn trajectory_csv(traj: &Trajectory) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["s", "x", "y", "z", "t", "vx", "vy", "vz", "vt"])?;
    for st in &traj.states {
        let p = st.position.map(|z| z.re);
        let v = st.velocity.map(|z| z.re);
        w.serialize((st.s, p[0], p[1], p[2], p[3], v[0], v[1], v[2], v[3]))?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// A small geodesic bundle around `center` moving along `tangent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeProbe {
    pub center: Point,
    /// Unit tangent T (g(T, T) = −1).
    pub tangent: Point,
    /// Neighbor offset along each direction, in coordinate units.
    pub epsilon: f64,
    /// Proper-time half window for the second difference.
    pub window: f64,
    /// RK4 substeps over each half window.
    pub substeps: usize,
}

impl VolumeProbe {
    /// Probe with T = e_t/√(−g_tt) at `center`.
    pub fn static_observer(field: &MetricField, center: [f64; 4], epsilon: f64, window: f64) -> Self {
        let c = real_point(center);
        let gtt = field.eval(&c).get(3, 3);
        let mut t = [ZERO; 4];
        t[3] = (-gtt).sqrt().inv();
        Self {
            center: c,
            tangent: t,
            epsilon,
            window,
            substeps: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeEvolution {
    /// Bundle four-volume at τ = 0 (separations scaled by 1/ε).
    pub o: Complex,
    /// d²o/dτ² in the field.
    pub second_derivative: Complex,
    /// Same pipeline on flat space.
    pub flat_term: Complex,
    pub lhs: Complex,
    /// −o R_{μν} T^μ T^ν
    pub rhs: Complex,
    /// Largest single-direction stretching rate |ℓ''/ℓ| of the bundle edges.
    pub tidal_scale: f64,
    pub residual: f64,
}

struct Bundle {
    o: [Complex; 3],
    edge: [[Complex; 3]; 3],
}

// State of the centre geodesic and one neighbor offset.
#[derive(Clone, Copy)]
struct Pair {
    xc: Point,
    vc: Point,
    y: Point,
    w: Point,
}

fn pair_rate(field: &MetricField, p: &Pair) -> Result<Pair> {
    let ac = accel(field, &p.xc, &p.vc)?;
    let xn: Point = std::array::from_fn(|i| p.xc[i] + p.y[i]);
    let vn: Point = std::array::from_fn(|i| p.vc[i] + p.w[i]);
    let an = accel(field, &xn, &vn)?;
    Ok(Pair {
        xc: p.vc,
        vc: ac,
        y: p.w,
        w: std::array::from_fn(|i| an[i] - ac[i]),
    })
}

fn pair_axpy(p: &Pair, a: f64, d: &Pair) -> Pair {
    Pair {
        xc: axpy(&p.xc, a, &d.xc),
        vc: axpy(&p.vc, a, &d.vc),
        y: axpy(&p.y, a, &d.y),
        w: axpy(&p.w, a, &d.w),
    }
}

fn pair_rk4(field: &MetricField, p: &Pair, h: f64) -> Result<Pair> {
    let k1 = pair_rate(field, p)?;
    let k2 = pair_rate(field, &pair_axpy(p, h / 2.0, &k1))?;
    let k3 = pair_rate(field, &pair_axpy(p, h / 2.0, &k2))?;
    let k4 = pair_rate(field, &pair_axpy(p, h, &k3))?;
    let mut out = pair_axpy(p, h / 6.0, &k1);
    out = pair_axpy(&out, h / 3.0, &k2);
    out = pair_axpy(&out, h / 3.0, &k3);
    Ok(pair_axpy(&out, h / 6.0, &k4))
}

fn bundle(field: &MetricField, probe: &VolumeProbe, tangent: Point) -> Result<Bundle> {
    let c = probe.center;
    let eps = probe.epsilon;
    let gamma = christoffel(field, &c)?;
    let mut dirs: [Point; 4] = [[ZERO; 4]; 4];
    for (a, d) in dirs.iter_mut().enumerate().take(3) {
        d[a] = Complex::new(1.0, 0.0);
    }
    dirs[3] = tangent;
    // sep[τ index][a] = ξ_a / ε; centre[τ index]
    let mut sep = [[[ZERO; 4]; 4]; 3];
    let mut centre = [c; 3];
    let h = probe.window / probe.substeps as f64;
    for (a, d) in dirs.iter().enumerate() {
        // Parallel initial velocities: T − εΓ(ξ, T) for the +ε neighbor.
        let gt = gamma.contract(d, &tangent);
        let mut ends = [[[ZERO; 4]; 3]; 2];
        for (side, sgn) in [1.0, -1.0].into_iter().enumerate() {
            let start = Pair {
                xc: c,
                vc: tangent,
                y: d.map(|z| z * (sgn * eps)),
                w: gt.map(|z| z * (-sgn * eps)),
            };
            ends[side][1] = start.y;
            for (slot, dir) in [(2usize, 1.0), (0usize, -1.0)] {
                let mut p = start;
                for _ in 0..probe.substeps {
                    p = pair_rk4(field, &p, dir * h)?;
                }
                ends[side][slot] = p.y;
                centre[slot] = p.xc;
            }
        }
        for tau in 0..3 {
            sep[tau][a] = std::array::from_fn(|i| (ends[0][tau][i] - ends[1][tau][i]) / (2.0 * eps));
        }
    }
    let mut o = [ZERO; 3];
    let mut edge = [[ZERO; 3]; 3];
    for tau in 0..3 {
        let g = field.eval(&centre[tau]);
        let mut gram = linalg::zeros();
        for a in 0..4 {
            for b in 0..4 {
                let mut acc = ZERO;
                for i in 0..4 {
                    for j in 0..4 {
                        acc += sep[tau][a][i] * g.get(i, j) * sep[tau][b][j];
                    }
                }
                gram[a][b] = acc;
            }
        }
        o[tau] = (-linalg::det(&gram)).sqrt();
        for a in 0..3 {
            edge[a][tau] = gram[a][a].sqrt();
        }
    }
    Ok(Bundle { o, edge })
}

fn second_difference(v: &[Complex; 3], h: f64) -> Complex {
    (v[2] - v[1] * 2.0 + v[0]) / (h * h)
}

/// Compares d²o/dτ² − d²o_flat/dτ² with −o R_{μν}T^μT^ν for a bundle of eight
/// neighbors at ±ε along x, y, z and T. The residual is
/// |LHS − RHS| / max(|LHS|, |RHS|, o·tidal_scale), and 0 when LHS = RHS.
pub fn volume_evolution_residual(field: &MetricField, probe: &VolumeProbe) -> Result<VolumeEvolution> {
    if !(probe.epsilon > 0.0 && probe.window > 0.0 && probe.substeps > 0) {
        return Err(Error::Domain(
            "probe epsilon, window and substeps must be positive".into(),
        ));
    }
    let b = bundle(field, probe, probe.tangent)?;
    let o = b.o[1];
    if o.norm() == 0.0 || b.o.iter().any(|v| v.norm() < 1e-18 * o.norm()) {
        return Err(Error::IllConditionedProbe(format!(
            "bundle volume collapsed: {:?}",
            b.o
        )));
    }
    let mut flat_t = [ZERO; 4];
    flat_t[3] = Complex::new(1.0, 0.0);
    let flat = bundle(&minkowski_field(), probe, flat_t)?;
    let second_derivative = second_difference(&b.o, probe.window);
    let flat_term = second_difference(&flat.o, probe.window);
    let lhs = second_derivative - flat_term;
    let ric = ricci(field, &probe.center)?;
    let t = probe.tangent;
    let mut rtt = ZERO;
    for i in 0..4 {
        for j in 0..4 {
            rtt += ric[i][j] * t[i] * t[j];
        }
    }
    let rhs = -o * rtt;
    let tidal_scale = b
        .edge
        .iter()
        .map(|e| (second_difference(e, probe.window) / e[1]).norm())
        .fold(0.0, f64::max);
    let num = (lhs - rhs).norm();
    let den = lhs.norm().max(rhs.norm()).max(o.norm() * tidal_scale);
    let residual = if num == 0.0 { 0.0 } else { num / den };
    Ok(VolumeEvolution {
        o,
        second_derivative,
        flat_term,
        lhs,
        rhs,
        tidal_scale,
        residual,
    })
}
