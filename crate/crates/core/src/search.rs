//! Enumeration of 4×4 transforms with entries in {0, +1, −1, +i, −i} whose
//! congruence action turns a complex reference metric into a real one.
//!
//! Matrices are ranked in base 5, row-major, entry (0, 0) most significant,
//! with digit `d` standing for `COEFFICIENTS[d]`.

use crate::error::{Error, Result};
use crate::linalg::{self, Mat4};
use crate::metric::{self, f_metric_catalog, plane_wave_metric, Metric4, PlaneWavePhase};
use crate::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

/// Digit order of the coefficient set.
pub const COEFFICIENTS: [Complex; 5] = [
    Complex::new(0.0, 0.0),
    Complex::new(1.0, 0.0),
    Complex::new(-1.0, 0.0),
    Complex::new(0.0, 1.0),
    Complex::new(0.0, -1.0),
];

/// 5¹⁶
pub const SPACE_SIZE: u64 = 152_587_890_625;
const ROWS: usize = 625;
const REAL_TOL: f64 = 1e-9;
const NEG_DIGIT: [u8; 5] = [0, 2, 1, 4, 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TransformMatrix {
    pub digits: [[u8; 4]; 4],
    pub index: u64,
}

impl TransformMatrix {
    pub fn entries(&self) -> Mat4 {
        self.digits.map(|r| r.map(|d| COEFFICIENTS[d as usize]))
    }

    pub fn row_index(&self, row: usize) -> usize {
        row_rank(&self.digits[row])
    }

    /// Entries as `re:im` pairs, row-major, space separated.
    pub fn entries_string(&self) -> String {
        self.entries()
            .iter()
            .flatten()
            .map(|z| format!("{}:{}", z.re, z.im))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

fn row_rank(row: &[u8; 4]) -> usize {
    row.iter().fold(0, |acc, &d| acc * 5 + d as usize)
}

fn row_unrank(mut r: usize) -> [u8; 4] {
    let mut row = [0u8; 4];
    for slot in row.iter_mut().rev() {
        *slot = (r % 5) as u8;
        r /= 5;
    }
    row
}

pub fn unrank(index: u64) -> Result<TransformMatrix> {
    if index >= SPACE_SIZE {
        return Err(Error::IndexOutOfRange(index));
    }
    let mut digits = [[0u8; 4]; 4];
    let mut rest = index;
    for k in (0..16).rev() {
        digits[k / 4][k % 4] = (rest % 5) as u8;
        rest /= 5;
    }
    Ok(TransformMatrix { digits, index })
}

pub fn rank(digits: &[[u8; 4]; 4]) -> u64 {
    digits.iter().flatten().fold(0u64, |acc, &d| acc * 5 + u64::from(d))
}

fn rank_rows(rows: [usize; 4]) -> u64 {
    rows.iter().fold(0u64, |acc, &r| acc * ROWS as u64 + r as u64)
}

/// The complex diagonal metric the transforms act on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceMetric {
    /// diag(1, 1, e^{iα}, −e^{−iα})
    #[default]
    TwoSlit1976,
    /// diag(e^{−iα}, e^{−iα}, e^{iα}, −e^{iα})
    PlaneWave2016,
}

impl ReferenceMetric {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "two_slit_1976" => Ok(Self::TwoSlit1976),
            "plane_wave_2016" => Ok(Self::PlaneWave2016),
            other => Err(Error::Domain(format!("unknown reference metric '{other}'"))),
        }
    }

    pub fn diagonal(self, alpha: f64) -> [Complex; 4] {
        let e = Complex::from_polar(1.0, alpha);
        let one = Complex::new(1.0, 0.0);
        match self {
            Self::TwoSlit1976 => [one, one, e, -e.conj()],
            Self::PlaneWave2016 => [e.conj(), e.conj(), e, -e],
        }
    }

    pub fn metric(self, alpha: f64) -> Metric4 {
        Metric4::diag(self.diagonal(alpha), metric::CoordinateFrame::Cartesian)
    }
}

/// Which part of the 5¹⁶ space a search ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Subspace {
    /// All 5¹⁶ matrices.
    #[default]
    Full,
    /// x', y' rows fixed to the identity rows, z', t' rows free (5⁸).
    ZtRows,
    /// Identity outside the z,t 2×2 block (5⁴).
    ZtCore,
}

impl Subspace {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Self::Full),
            "zt-rows" | "zt-block" => Ok(Self::ZtRows),
            "zt-core" => Ok(Self::ZtCore),
            other => Err(Error::Domain(format!("unknown subspace '{other}'"))),
        }
    }

    pub fn size(self) -> u64 {
        match self {
            Self::Full => SPACE_SIZE,
            Self::ZtRows => 390_625,
            Self::ZtCore => 625,
        }
    }

    /// Global rows for a local index.
    #[inline]
    fn rows(self, local: u64) -> [usize; 4] {
        const X: usize = 125; // digits [1,0,0,0]
        const Y: usize = 25; // digits [0,1,0,0]
        match self {
            Self::Full => {
                let l = local as usize;
                [
                    l / (ROWS * ROWS * ROWS),
                    l / (ROWS * ROWS) % ROWS,
                    l / ROWS % ROWS,
                    l % ROWS,
                ]
            }
            Self::ZtRows => {
                let l = local as usize;
                [X, Y, l / ROWS, l % ROWS]
            }
            Self::ZtCore => {
                let l = local as usize;
                let (a, b, c, d) = (l / 125, l / 25 % 5, l / 5 % 5, l % 5);
                // z' = (0, 0, a, b), t' = (0, 0, c, d)
                [X, Y, a * 5 + b, c * 5 + d]
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Constraints {
    pub require_invertible: bool,
    pub require_real_metric: bool,
    /// x', y', z' real in x, y, z and imaginary in t; t' the reverse.
    pub require_real_space_rows: bool,
    pub dedupe_trivial: bool,
}

impl Default for Constraints {
    fn default() -> Self {
        Self {
            require_invertible: false,
            require_real_metric: true,
            require_real_space_rows: false,
            dedupe_trivial: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpec {
    /// Half-open range of local indices within the subspace.
    pub index_range: (u64, u64),
    pub constraints: Constraints,
    pub sample_stride: u64,
    pub subspace: Subspace,
    pub reference: ReferenceMetric,
    pub phases: Vec<f64>,
    pub exemplar_cap: usize,
}

/// Irrational multiples of π.
pub fn default_phases() -> Vec<f64> {
    vec![
        PI / std::f64::consts::SQRT_2,
        PI / 3f64.sqrt(),
        PI * (5f64.sqrt() - 1.0) / 2.0,
    ]
}

impl SearchSpec {
    pub fn new(subspace: Subspace) -> Self {
        Self {
            index_range: (0, subspace.size()),
            constraints: Constraints::default(),
            sample_stride: 1,
            subspace,
            reference: ReferenceMetric::default(),
            phases: default_phases(),
            exemplar_cap: 32,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b) = self.index_range;
        if a > b || b > self.subspace.size() {
            return Err(Error::Domain(format!(
                "index range [{a}, {b}) outside [0, {})",
                self.subspace.size()
            )));
        }
        if self.sample_stride == 0 {
            return Err(Error::Domain("sample stride must be at least 1".into()));
        }
        if self.phases.len() < 3 {
            return Err(Error::Domain("need at least 3 phase samples".into()));
        }
        Ok(())
    }

    /// Number of candidates the spec visits.
    pub fn sample_count(&self) -> u64 {
        let (a, b) = self.index_range;
        (b - a).div_ceil(self.sample_stride)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct SearchReport {
    pub candidates_examined: u64,
    pub real_metric_hits: u64,
    pub invertible_hits: u64,
    pub distinct_classes: u64,
    /// Canonical indices of the equivalence classes seen.
    pub classes: BTreeSet<u64>,
    /// Accepted matrices with the smallest indices.
    pub hit_exemplars: Vec<TransformMatrix>,
    pub exemplar_cap: usize,
    /// Seconds; excluded from equality-relevant serialization.
    #[serde(skip)]
    pub wall_time: f64,
}

impl SearchReport {
    pub fn empty(exemplar_cap: usize) -> Self {
        Self {
            exemplar_cap,
            ..Default::default()
        }
    }

    pub fn hit_rate(&self) -> f64 {
        if self.candidates_examined == 0 {
            0.0
        } else {
            self.real_metric_hits as f64 / self.candidates_examined as f64
        }
    }

    /// Associative, commutative combination of two partial reports.
    pub fn merge(mut self, other: SearchReport) -> SearchReport {
        self.candidates_examined += other.candidates_examined;
        self.real_metric_hits += other.real_metric_hits;
        self.invertible_hits += other.invertible_hits;
        self.classes.extend(other.classes);
        self.distinct_classes = self.classes.len() as u64;
        self.exemplar_cap = self.exemplar_cap.max(other.exemplar_cap);
        self.hit_exemplars.extend(other.hit_exemplars);
        self.hit_exemplars.sort_by_key(|m| m.index);
        self.hit_exemplars.dedup();
        self.hit_exemplars.truncate(self.exemplar_cap);
        self.wall_time += other.wall_time;
        self
    }

    /// Same counts and classes; wall time ignored.
    pub fn same_result(&self, other: &SearchReport) -> bool {
        let mut a = self.clone();
        let mut b = other.clone();
        a.wall_time = 0.0;
        b.wall_time = 0.0;
        a == b
    }
}

/// Per-row lookup tables for fast realness checks.
struct RowTables {
    nonzero: Vec<bool>,
    space_ok: Vec<bool>,
    time_ok: Vec<bool>,
    /// imag[(p * 4 + k) * 625 + r] = Im(g_k(α_p) · r rᵀ), upper triangle.
    imag: Vec<[f64; 10]>,
    phases: usize,
}

const UPPER: [(usize, usize); 10] = [
    (0, 0),
    (0, 1),
    (0, 2),
    (0, 3),
    (1, 1),
    (1, 2),
    (1, 3),
    (2, 2),
    (2, 3),
    (3, 3),
];

impl RowTables {
    fn new(reference: ReferenceMetric, phases: &[f64]) -> Self {
        let rows: Vec<[Complex; 4]> = (0..ROWS)
            .map(|r| row_unrank(r).map(|d| COEFFICIENTS[d as usize]))
            .collect();
        let is_real = |z: Complex| z.im == 0.0;
        let is_imag = |z: Complex| z.re == 0.0;
        let mut imag = Vec::with_capacity(phases.len() * 4 * ROWS);
        for &alpha in phases {
            let g = reference.diagonal(alpha);
            for gk in g {
                for row in &rows {
                    imag.push(UPPER.map(|(i, j)| (gk * row[i] * row[j]).im));
                }
            }
        }
        Self {
            nonzero: rows.iter().map(|r| r.iter().any(|z| z.norm() > 0.0)).collect(),
            space_ok: rows
                .iter()
                .map(|r| r[..3].iter().all(|&z| is_real(z)) && is_imag(r[3]))
                .collect(),
            time_ok: rows
                .iter()
                .map(|r| r[..3].iter().all(|&z| is_imag(z)) && is_real(r[3]))
                .collect(),
            imag,
            phases: phases.len(),
        }
    }

    #[inline]
    fn is_real(&self, rows: [usize; 4]) -> bool {
        for p in 0..self.phases {
            let base = p * 4 * ROWS;
            let t0 = &self.imag[base + rows[0]];
            let t1 = &self.imag[base + ROWS + rows[1]];
            let t2 = &self.imag[base + 2 * ROWS + rows[2]];
            let t3 = &self.imag[base + 3 * ROWS + rows[3]];
            for e in 0..10 {
                if (t0[e] + t1[e] + t2[e] + t3[e]).abs() >= REAL_TOL {
                    return false;
                }
            }
        }
        true
    }

    #[inline]
    fn structured(&self, rows: [usize; 4]) -> bool {
        self.space_ok[rows[0]] && self.space_ok[rows[1]] && self.space_ok[rows[2]] && self.time_ok[rows[3]]
    }
}

/// True iff WᵀG(α)W is real (max |Im| < 1e−9) at every sampled α, with G the
/// two-slit metric diag(1, 1, e^{iα}, −e^{−iα}). Matrices with an all-zero row
/// are rejected.
pub fn produces_real_metric(w: &TransformMatrix, phase_samples: &[f64]) -> bool {
    produces_real_metric_with(w, phase_samples, ReferenceMetric::TwoSlit1976)
}

pub fn produces_real_metric_with(w: &TransformMatrix, phase_samples: &[f64], reference: ReferenceMetric) -> bool {
    if w.digits.iter().any(|r| r.iter().all(|&d| d == 0)) {
        return false;
    }
    let a = w.entries();
    phase_samples
        .iter()
        .all(|&alpha| metric::congruence_any(&reference.metric(alpha), &a).max_imag() < REAL_TOL)
}

/// Whether the transform is invertible (entries are Gaussian integers, so the
/// floating-point determinant is exact).
pub fn is_invertible(w: &TransformMatrix) -> bool {
    linalg::det(&w.entries()).norm() > 0.5
}

/// Smallest index in the equivalence class of `w`.
///
/// The class is generated by sign flips of any row, sign flips of any column,
/// swapping the x' and y' rows, and swapping the x and y columns. Each of these
/// maps real metrics to real metrics and keeps the z/t structure.
pub fn canonical_index(w: &TransformMatrix) -> u64 {
    let mut best = u64::MAX;
    for row_swap in [false, true] {
        for col_swap in [false, true] {
            for col_mask in 0u8..16 {
                let mut rows = [0usize; 4];
                for (i, slot) in rows.iter_mut().enumerate() {
                    let src = if row_swap && i < 2 { 1 - i } else { i };
                    let mut r = [0u8; 4];
                    for (j, d) in r.iter_mut().enumerate() {
                        let sc = if col_swap && j < 2 { 1 - j } else { j };
                        let v = w.digits[src][sc];
                        *d = if col_mask >> j & 1 == 1 {
                            NEG_DIGIT[v as usize]
                        } else {
                            v
                        };
                    }
                    let neg = r.map(|d| NEG_DIGIT[d as usize]);
                    *slot = row_rank(&r).min(row_rank(&neg));
                }
                best = best.min(rank_rows(rows));
            }
        }
    }
    best
}

fn matrix_from_rows(rows: [usize; 4]) -> TransformMatrix {
    let digits = rows.map(row_unrank);
    TransformMatrix {
        digits,
        index: rank_rows(rows),
    }
}

fn scan_chunk(spec: &SearchSpec, tables: &RowTables, first: u64, last: u64) -> SearchReport {
    let c = spec.constraints;
    let mut rep = SearchReport::empty(spec.exemplar_cap);
    let (start, _) = spec.index_range;
    for j in first..last {
        let local = start + j * spec.sample_stride;
        let rows = spec.subspace.rows(local);
        rep.candidates_examined += 1;
        if c.require_real_space_rows && !tables.structured(rows) {
            continue;
        }
        if !rows.iter().all(|&r| tables.nonzero[r]) {
            continue;
        }
        let real = tables.is_real(rows);
        if real {
            rep.real_metric_hits += 1;
        } else if c.require_real_metric {
            continue;
        }
        let m = matrix_from_rows(rows);
        let invertible = is_invertible(&m);
        if real && invertible {
            rep.invertible_hits += 1;
        }
        if c.require_invertible && !invertible {
            continue;
        }
        if c.dedupe_trivial && invertible {
            rep.classes.insert(canonical_index(&m));
        }
        if rep.hit_exemplars.len() < spec.exemplar_cap {
            rep.hit_exemplars.push(m);
        }
    }
    rep.distinct_classes = if c.dedupe_trivial {
        rep.classes.len() as u64
    } else {
        rep.invertible_hits
    };
    rep
}

/// Candidates per work unit; fixed so results do not depend on scheduling.
const CHUNK: u64 = 1 << 20;

fn scan_positions(spec: &SearchSpec, tables: &RowTables, from: u64, to: u64, workers: usize) -> Result<SearchReport> {
    let chunks: Vec<(u64, u64)> = (from..to)
        .step_by(CHUNK as usize)
        .map(|a| (a, (a + CHUNK).min(to)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Domain(format!("thread pool: {e}")))?;
    let parts: Vec<SearchReport> = pool.install(|| {
        chunks
            .par_iter()
            .map(|&(a, b)| scan_chunk(spec, tables, a, b))
            .collect()
    });
    let mut rep = parts
        .into_iter()
        .fold(SearchReport::empty(spec.exemplar_cap), SearchReport::merge);
    if !spec.constraints.dedupe_trivial {
        rep.classes.clear();
        rep.distinct_classes = rep.invertible_hits;
    }
    Ok(rep)
}

/// Scans the spec's range on `workers` threads. The report does not depend on
/// the worker count.
pub fn run_search(spec: &SearchSpec, workers: usize) -> Result<SearchReport> {
    spec.validate()?;
    let t0 = Instant::now();
    let tables = RowTables::new(spec.reference, &spec.phases);
    let mut rep = scan_positions(spec, &tables, 0, spec.sample_count(), workers)?;
    rep.wall_time = t0.elapsed().as_secs_f64();
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub range: (u64, u64),
    /// Number of sample positions completed (the next position to scan).
    pub last_completed_index: u64,
    pub partial_report: SearchReport,
}

/// Like [`run_search`], but persists progress to `checkpoint` after every
/// `positions_per_save` samples and resumes from it when present.
pub fn run_search_checkpointed(
    spec: &SearchSpec,
    workers: usize,
    checkpoint: &Path,
    positions_per_save: u64,
) -> Result<SearchReport> {
    spec.validate()?;
    let t0 = Instant::now();
    let tables = RowTables::new(spec.reference, &spec.phases);
    let total = spec.sample_count();
    let mut state = if checkpoint.exists() {
        let cp: Checkpoint = serde_json::from_str(&std::fs::read_to_string(checkpoint)?)?;
        if cp.range != spec.index_range {
            return Err(Error::Domain(format!(
                "checkpoint range {:?} does not match {:?}",
                cp.range, spec.index_range
            )));
        }
        cp
    } else {
        Checkpoint {
            range: spec.index_range,
            last_completed_index: 0,
            partial_report: SearchReport::empty(spec.exemplar_cap),
        }
    };
    let step = positions_per_save.max(1);
    while state.last_completed_index < total {
        let to = (state.last_completed_index + step).min(total);
        let part = scan_positions(spec, &tables, state.last_completed_index, to, workers)?;
        state.partial_report = std::mem::take(&mut state.partial_report).merge(part);
        state.last_completed_index = to;
        std::fs::write(checkpoint, serde_json::to_string(&state)?)?;
    }
    let mut rep = state.partial_report;
    if !spec.constraints.dedupe_trivial {
        rep.distinct_classes = rep.invertible_hits;
    }
    rep.wall_time = t0.elapsed().as_secs_f64();
    Ok(rep)
}

/// CSV `index,matrix_entries`.
pub fn hits_csv(report: &SearchReport) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["index", "matrix_entries"])?;
    for m in &report.hit_exemplars {
        w.write_record([m.index.to_string(), m.entries_string()])?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    /// G' = Aᵀ G A
    Direct,
    /// G' = (A⁻¹)ᵀ G A⁻¹
    Inverse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConventionResult {
    /// False when the convention cannot be evaluated (A singular).
    pub applicable: bool,
    pub matched: bool,
    /// Least-squares s in F ≈ s·G'.
    pub scale: f64,
    pub max_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FVerification {
    pub name: String,
    pub det_transform: f64,
    pub direct: ConventionResult,
    pub inverse: ConventionResult,
    /// `None` means UNMATCHED.
    pub matched: Option<Convention>,
}

/// Phases at which the F tables are compared.
pub fn verification_phases() -> Vec<f64> {
    (0..20).map(|i| 0.173 + 0.611 * i as f64).collect()
}

fn compare(target: impl Fn(f64) -> Metric4, candidate: impl Fn(f64) -> Metric4, phases: &[f64]) -> ConventionResult {
    let pairs: Vec<(Metric4, Metric4)> = phases.iter().map(|&a| (target(a), candidate(a))).collect();
    let (mut num, mut den) = (Complex::new(0.0, 0.0), 0.0);
    for (f, g) in &pairs {
        for i in 0..4 {
            for j in 0..4 {
                num += g.get(i, j).conj() * f.get(i, j);
                den += g.get(i, j).norm_sqr();
            }
        }
    }
    let scale = if den > 0.0 { num.re / den } else { 0.0 };
    let max_error = pairs
        .iter()
        .map(|(f, g)| f.max_abs_diff(&g.scaled(scale)))
        .fold(0.0, f64::max);
    ConventionResult {
        applicable: true,
        matched: max_error < 1e-9 && scale != 0.0,
        scale,
        max_error,
    }
}

/// Checks one coordinate table against its printed matrix under both transform
/// directions, acting on the plane-wave metric.
pub fn verify_table(name: &str, a: &Mat4, target: impl Fn(f64) -> Metric4 + Copy, phases: &[f64]) -> FVerification {
    let g = |alpha: f64| plane_wave_metric(PlaneWavePhase::from_alpha(alpha));
    let direct = compare(target, |alpha| metric::congruence_any(&g(alpha), a), phases);
    let inverse = match linalg::inverse(a, 1e-12) {
        Some(inv) => compare(target, |alpha| metric::congruence_any(&g(alpha), &inv), phases),
        None => ConventionResult {
            applicable: false,
            matched: false,
            scale: f64::NAN,
            max_error: f64::NAN,
        },
    };
    let matched = if direct.matched {
        Some(Convention::Direct)
    } else if inverse.matched {
        Some(Convention::Inverse)
    } else {
        None
    };
    FVerification {
        name: name.to_string(),
        det_transform: linalg::det(a).norm(),
        direct,
        inverse,
        matched,
    }
}

pub fn verify_f_transforms() -> Vec<FVerification> {
    let phases = verification_phases();
    f_metric_catalog()
        .iter()
        .map(|f| verify_table(f.name, &f.transform(), |alpha| f.at(alpha), &phases))
        .collect()
}
