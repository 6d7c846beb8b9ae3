//! Experiment plumbing: sweep configuration, grid execution, CSV output,
//! summary reports, the consolidated check suite and SVG plots.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bodies::{make_body, Body, BodyKind};
use crate::error::{Error, Result};
use crate::estimate::Estimate;
use crate::gaussian::{
    expected_max_chi, gaussian_mean_outer_radius, tail_bound_check, tail_bound_grid, ChiMaxQuery,
};
use crate::linalg::Matrix;
use crate::moments::{
    grassmann_moment_avg, moment, negative_moment_check, positive_moment_check, centroid_width_check,
    MomentRatio,
};
use crate::radii::{outer_radius_points, radius_profile, radius_profile_to_depth, PointCloud, Source};
use crate::stream::StreamKey;

pub const DEFAULT_SEED: u64 = 24_301;
pub const DEFAULT_FLAGS: usize = 64;
pub const DEFAULT_REPLICAS: usize = 100;
pub const DEFAULT_MOMENT_SAMPLES: usize = 20_000;
pub const DEFAULT_S: f64 = 1.0;

/// Column order of every sweep CSV.
pub const CSV_HEADER: [&str; 12] = [
    "body",
    "n",
    "N",
    "k",
    "replica",
    "seed",
    "estimate",
    "stderr",
    "L_K",
    "normalizer",
    "ratio",
    "regime_flag",
];

fn default_flags() -> usize {
    DEFAULT_FLAGS
}
fn default_replicas() -> usize {
    DEFAULT_REPLICAS
}
fn default_moment_samples() -> usize {
    DEFAULT_MOMENT_SAMPLES
}
fn default_s() -> f64 {
    DEFAULT_S
}
fn default_seed() -> u64 {
    DEFAULT_SEED
}

/// One sweep: a body, a dimension and the `(N, k)` grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub body: String,
    pub n: usize,
    #[serde(rename = "N_list")]
    pub n_list: Vec<usize>,
    pub k_list: Vec<usize>,
    /// Flags (or subspaces) per estimate.
    #[serde(rename = "M", default = "default_flags")]
    pub flags: usize,
    #[serde(rename = "R", default = "default_replicas")]
    pub replicas: usize,
    /// Points per moment estimate.
    #[serde(default = "default_moment_samples")]
    pub m: usize,
    /// Probability exponent in the `1 - N^{-s}` target.
    #[serde(default = "default_s")]
    pub s: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl SweepConfig {
    pub fn new(kind: BodyKind, n: usize, n_list: Vec<usize>, k_list: Vec<usize>) -> Self {
        Self {
            body: kind.name().to_string(),
            n,
            n_list,
            k_list,
            flags: DEFAULT_FLAGS,
            replicas: DEFAULT_REPLICAS,
            m: DEFAULT_MOMENT_SAMPLES,
            s: DEFAULT_S,
            seed: DEFAULT_SEED,
            output: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn body_kind(&self) -> Result<BodyKind> {
        self.body.parse()
    }

    /// Checks the grid invariants and returns the parsed body kind.
    pub fn validate(&self) -> Result<BodyKind> {
        let kind = self.body_kind()?;
        let fail = |msg: String| Err(Error::Config(msg));
        if self.n < 1 {
            return fail("n must be at least 1".into());
        }
        if self.n_list.is_empty() || self.k_list.is_empty() {
            return fail("N_list and k_list must be nonempty".into());
        }
        if let Some(&k) = self.k_list.iter().find(|&&k| k < 1 || k > self.n) {
            return fail(format!("k = {k} outside 1..={}", self.n));
        }
        if let Some(&count) = self.n_list.iter().find(|&&c| c < self.n) {
            return fail(format!("N = {count} is below n = {}", self.n));
        }
        if self.flags < 2 {
            return fail("M must be at least 2".into());
        }
        if self.replicas < 1 || self.m < 1 {
            return fail("R and m must be at least 1".into());
        }
        if !(self.s.is_finite() && self.s > 0.0) {
            return fail("s must be positive".into());
        }
        Ok(kind)
    }
}

/// The standard grid: every body at `n ∈ {16, 64, 100}`, `N ∈ {n, 4n, n²}`
/// (`n²` only up to `10^4`), `k ∈ {1, ⌈√n⌉, ⌈n/2⌉, n}`.
pub fn default_grid() -> Vec<SweepConfig> {
    let mut configs = Vec::new();
    for kind in BodyKind::ALL {
        for n in [16usize, 64, 100] {
            let mut n_list = vec![n, 4 * n];
            if n * n <= 10_000 {
                n_list.push(n * n);
            }
            let root = (n as f64).sqrt().ceil() as usize;
            let mut k_list = vec![1, root, n.div_ceil(2), n];
            k_list.dedup();
            configs.push(SweepConfig::new(kind, n, n_list, k_list));
        }
    }
    configs
}

/// Position of `(n, N)` relative to the range where both bounds are proved.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Regime {
    TwoSided,
    UpperOnly,
    OutOfRegime,
}

impl Regime {
    pub fn classify(n: usize, count: usize) -> Self {
        let nf = n as f64;
        if count < n || (count as f64) > nf.sqrt().exp() {
            Regime::OutOfRegime
        } else if count >= n * n {
            Regime::TwoSided
        } else {
            Regime::UpperOnly
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Regime::TwoSided => "two-sided",
            Regime::UpperOnly => "upper-only",
            Regime::OutOfRegime => "out-of-regime",
        }
    }
}

/// `max{√k, √log N} L_K`.
pub fn normalizer(k: usize, count: usize, l_k: f64) -> f64 {
    (k as f64).sqrt().max((count as f64).ln().sqrt()) * l_k
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub body: BodyKind,
    pub n: usize,
    #[serde(rename = "N")]
    pub count: usize,
    pub k: usize,
    pub replica: usize,
    pub seed: u64,
    pub estimate: f64,
    pub stderr: f64,
    #[serde(rename = "L_K")]
    pub l_k: f64,
    pub normalizer: f64,
    pub ratio: f64,
    pub regime: Regime,
}

impl SweepRow {
    fn record(&self) -> [String; 12] {
        [
            self.body.name().to_string(),
            self.n.to_string(),
            self.count.to_string(),
            self.k.to_string(),
            self.replica.to_string(),
            self.seed.to_string(),
            format!("{:.16e}", self.estimate),
            format!("{:.16e}", self.stderr),
            format!("{:.16e}", self.l_k),
            format!("{:.16e}", self.normalizer),
            format!("{:.16e}", self.ratio),
            self.regime.as_str().to_string(),
        ]
    }
}

/// Runs the grid of `config` on its body.
pub fn sweep_rows(config: &SweepConfig) -> Result<Vec<SweepRow>> {
    let kind = config.validate()?;
    sweep_rows_with_body(config, &make_body(kind, config.n)?)
}

/// Runs the grid on an explicit body of dimension `config.n`.
///
/// Replica `r` at size `N` samples its cloud from
/// `seed/N/r/0` and its flags from `seed/N/r/1`; every `k < n` is read off
/// the same flags and `k = n` is the exact outer radius. Rows are ordered
/// by `N`, then `k`, then replica.
pub fn sweep_rows_with_body(config: &SweepConfig, body: &Body<f64>) -> Result<Vec<SweepRow>> {
    config.validate()?;
    if body.dim() != config.n {
        return Err(Error::DimensionMismatch {
            expected: config.n,
            found: body.dim(),
        });
    }
    let n = config.n;
    let depth = config.k_list.iter().copied().filter(|&k| k < n).max();
    let needs_exact = config.k_list.contains(&n);
    let root = StreamKey::new(config.seed);
    let tasks: Vec<(usize, usize)> = config
        .n_list
        .iter()
        .flat_map(|&count| (0..config.replicas).map(move |r| (count, r)))
        .collect();

    let per_task: Vec<Vec<Estimate<f64>>> = tasks
        .par_iter()
        .map(|&(count, r)| {
            let key = root.derive(count as u64).derive(r as u64);
            let cloud = body.sample(count, &key.derive(0))?;
            let profile = depth
                .map(|d| radius_profile_to_depth(&cloud, d, config.flags, &key.derive(1)))
                .transpose()?;
            let exact = if needs_exact {
                Some(Estimate::exact(outer_radius_points(&cloud)?, key.clone()))
            } else {
                None
            };
            Ok(config
                .k_list
                .iter()
                .map(|&k| match (&profile, k == n) {
                    (_, true) => exact.clone().expect("exact radius computed"),
                    (Some(p), false) => p.estimates[k - 1].clone(),
                    (None, false) => unreachable!("depth covers every k < n"),
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    let l_k = body.isotropic_constant();
    let mut rows = Vec::with_capacity(per_task.len() * config.k_list.len());
    for (ni, &count) in config.n_list.iter().enumerate() {
        for (ki, &k) in config.k_list.iter().enumerate() {
            for r in 0..config.replicas {
                let estimate = &per_task[ni * config.replicas + r][ki];
                let norm = normalizer(k, count, l_k);
                rows.push(SweepRow {
                    body: body.kind(),
                    n,
                    count,
                    k,
                    replica: r,
                    seed: config.seed,
                    estimate: estimate.value,
                    stderr: estimate.stderr,
                    l_k,
                    normalizer: norm,
                    ratio: estimate.value / norm,
                    regime: Regime::classify(n, count),
                });
            }
        }
    }
    Ok(rows)
}

/// Serializes rows (with header) to CSV bytes.
pub fn csv_bytes(rows: &[SweepRow]) -> Result<Vec<u8>> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(CSV_HEADER)?;
    for row in rows {
        writer.write_record(row.record())?;
    }
    writer
        .into_inner()
        .map_err(|e| Error::Io(e.into_error()))
}

/// Writes `bytes` to `path`, attributing failures to the path.
pub fn write_output(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|source| Error::Output {
        path: path.to_path_buf(),
        source,
    })
}

/// Runs the sweep and writes the CSV to `config.output`.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRow>> {
    let path = config
        .output
        .clone()
        .ok_or_else(|| Error::Config("no output path given".into()))?;
    let rows = sweep_rows(config)?;
    write_output(&path, &csv_bytes(&rows)?)?;
    Ok(rows)
}

/// Closed interval of admissible ratios.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RatioBand {
    pub lo: f64,
    pub hi: f64,
}

impl RatioBand {
    pub fn contains(&self, x: f64) -> bool {
        (self.lo..=self.hi).contains(&x)
    }

    /// `[lo / factor, hi * factor]`.
    pub fn widened(&self, factor: f64) -> Self {
        Self {
            lo: self.lo / factor,
            hi: self.hi * factor,
        }
    }
}

/// Calibrated per-body ratio range over the default grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Calibration {
    /// Range of single-replica ratios.
    pub replicas: RatioBand,
    /// Range of per-cell mean ratios.
    pub cell_means: RatioBand,
}

/// Relative tolerance applied to pinned calibration endpoints.
pub const CALIBRATION_TOLERANCE: f64 = 0.10;

/// Seed of the calibration run behind [`pinned_calibration`].
pub const CALIBRATION_SEED: u64 = 1;

/// Ratio ranges of the default grid (M = 64, R = 100) at
/// [`CALIBRATION_SEED`].
pub fn pinned_calibration(kind: BodyKind) -> Calibration {
    let (r_lo, r_hi, m_lo, m_hi) = match kind {
        BodyKind::Cube => (1.0663, 1.8759, 1.1106, 1.8530),
        BodyKind::Ball => (1.0093, 1.8260, 1.0098, 1.8053),
        BodyKind::CrossPolytope => (1.0593, 1.9271, 1.1623, 1.8869),
        BodyKind::Simplex => (1.0487, 2.3253, 1.2566, 2.1134),
    };
    Calibration {
        replicas: RatioBand { lo: r_lo, hi: r_hi },
        cell_means: RatioBand { lo: m_lo, hi: m_hi },
    }
}

/// Ratio statistics of one `(body, n, N, k)` cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellSummary {
    pub body: BodyKind,
    pub n: usize,
    #[serde(rename = "N")]
    pub count: usize,
    pub k: usize,
    pub replicas: usize,
    pub mean_ratio: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub regime: Regime,
}

/// Groups rows by cell, in order of first appearance.
pub fn cell_summaries(rows: &[SweepRow]) -> Vec<CellSummary> {
    let mut order: Vec<(BodyKind, usize, usize, usize)> = Vec::new();
    let mut groups: BTreeMap<usize, Vec<&SweepRow>> = BTreeMap::new();
    for row in rows {
        let id = (row.body, row.n, row.count, row.k);
        let idx = order.iter().position(|c| *c == id).unwrap_or_else(|| {
            order.push(id);
            order.len() - 1
        });
        groups.entry(idx).or_default().push(row);
    }
    groups
        .into_values()
        .map(|cell| {
            let ratios: Vec<f64> = cell.iter().map(|r| r.ratio).collect();
            let first = cell[0];
            CellSummary {
                body: first.body,
                n: first.n,
                count: first.count,
                k: first.k,
                replicas: ratios.len(),
                mean_ratio: crate::estimate::pairwise_sum(&ratios) / ratios.len() as f64,
                min_ratio: ratios.iter().cloned().fold(f64::INFINITY, f64::min),
                max_ratio: ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                regime: first.regime,
            }
        })
        .collect()
}

/// `max / min` of the cell mean ratios.
pub fn dynamic_range(cells: &[CellSummary]) -> f64 {
    let max = cells.iter().map(|c| c.mean_ratio).fold(f64::NEG_INFINITY, f64::max);
    let min = cells.iter().map(|c| c.mean_ratio).fold(f64::INFINITY, f64::min);
    max / min
}

/// Empirical probability of a ratio band in one `(N, k)` cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BandCell {
    pub n: usize,
    #[serde(rename = "N")]
    pub count: usize,
    pub k: usize,
    pub replicas: usize,
    pub fraction: f64,
    /// `1 - N^{-s}`.
    pub target: f64,
}

/// Per-cell fraction of replicas whose ratio lies in `band`.
pub fn band_fractions(rows: &[SweepRow], band: RatioBand, s: f64) -> Vec<BandCell> {
    let mut cells: Vec<BandCell> = Vec::new();
    for row in rows {
        let inside = band.contains(row.ratio) as usize as f64;
        match cells
            .iter_mut()
            .find(|c| c.n == row.n && c.count == row.count && c.k == row.k)
        {
            Some(cell) => {
                cell.fraction += inside;
                cell.replicas += 1;
            }
            None => cells.push(BandCell {
                n: row.n,
                count: row.count,
                k: row.k,
                replicas: 1,
                fraction: inside,
                target: 1.0 - (row.count as f64).powf(-s),
            }),
        }
    }
    for cell in &mut cells {
        cell.fraction /= cell.replicas as f64;
    }
    cells
}

/// Runs the sweep of `config` and reports, per `(N, k)`, the fraction of
/// replicas with ratio in `band` next to `1 - N^{-s}`. Needs `R >= 50`.
pub fn band_probability_report(config: &SweepConfig, band: RatioBand) -> Result<Vec<BandCell>> {
    if config.replicas < 50 {
        return Err(Error::Config(format!(
            "probability reports need R >= 50, got {}",
            config.replicas
        )));
    }
    Ok(band_fractions(&sweep_rows(config)?, band, config.s))
}

/// Gaussian polytope estimate next to its exact value.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GaussianPolytopeRow {
    pub n: usize,
    pub k: usize,
    #[serde(rename = "N")]
    pub count: usize,
    pub estimate: Estimate<f64>,
    pub oracle: f64,
    /// `max{√k, √log N}`.
    pub normalizer: f64,
    pub agrees: bool,
}

/// For each `(k, N)`: Monte Carlo `E R̃_k` of `N` Gaussian points in `R^n`
/// from `replicas` fresh clouds (`key/k/N`), the quadrature value of
/// `E max_j |G_j|` for `G_j ~ N(0, I_k)`, and `max{√k, √log N}`.
pub fn gaussian_polytope_report(
    n: usize,
    k_list: &[usize],
    n_list: &[usize],
    replicas: usize,
    key: &StreamKey,
) -> Result<Vec<GaussianPolytopeRow>> {
    if k_list.is_empty() || n_list.is_empty() {
        return Err(Error::Config("k and N grids must be nonempty".into()));
    }
    if replicas < 2 {
        return Err(Error::InvalidParameter("need at least two replicas".into()));
    }
    let mut rows = Vec::new();
    for &k in k_list {
        for &count in n_list {
            let oracle = expected_max_chi(&ChiMaxQuery::<f64>::new(k, count))?;
            let estimate = gaussian_mean_outer_radius::<f64>(
                n,
                count,
                k,
                replicas,
                &key.derive(k as u64).derive(count as u64),
            )?;
            rows.push(GaussianPolytopeRow {
                n,
                k,
                count,
                agrees: estimate.within(oracle, 3.0, 0.0),
                oracle,
                normalizer: normalizer(k, count, 1.0),
                estimate,
            });
        }
    }
    Ok(rows)
}

/// Outcome of one named check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckLine {
    pub name: String,
    pub observed: String,
    pub band: String,
    pub passed: bool,
    /// Pathwise checks hold exactly rather than statistically.
    pub exact: bool,
}

impl fmt::Display for CheckLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = match (self.passed, self.exact) {
            (true, true) => "exact",
            (true, false) => "pass",
            (false, _) => "FAIL",
        };
        write!(f, "{:<40} {:<44} {:<26} {verdict}", self.name, self.observed, self.band)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CheckReport {
    pub lines: Vec<CheckLine>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.lines.iter().all(|l| l.passed)
    }

    pub fn line(&self, name: &str) -> Option<&CheckLine> {
        self.lines.iter().find(|l| l.name == name)
    }

    fn push(&mut self, name: &str, observed: String, band: String, passed: bool) {
        self.lines.push(CheckLine {
            name: name.to_string(),
            observed,
            band,
            passed,
            exact: false,
        });
    }

    fn push_exact(&mut self, name: &str, observed: String, passed: bool) {
        self.lines.push(CheckLine {
            name: name.to_string(),
            observed,
            band: "zero tolerance".into(),
            passed,
            exact: true,
        });
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for line in &self.lines {
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

pub const MOMENT_BAND: RatioBand = RatioBand { lo: 0.5, hi: 2.0 };
pub const SUBSPACE_BAND: RatioBand = RatioBand { lo: 1.0 / 3.0, hi: 3.0 };

/// Check-suite names, in report order.
pub mod check_names {
    pub const PROFILE: &str = "profile monotonicity";
    pub const PROFILE_COLLINEAR: &str = "profile monotonicity (collinear)";
    pub const PROFILE_SINGLE: &str = "profile monotonicity (single point)";
    pub const SECOND_MOMENT: &str = "I_2 = sqrt(n) L_K";
    pub const POSITIVE_MOMENTS: &str = "positive moment band";
    pub const NEGATIVE_MOMENTS: &str = "negative moment band";
    pub const GRASSMANN_IDENTITY: &str = "Grassmannian moment identity";
    pub const GRASSMANN_BAND: &str = "Grassmannian moment band";
    pub const CENTROID_BAND: &str = "negative moment vs centroid width";
    pub const SUBSPACE_NEGATIVE: &str = "averaged negative moment band";
    pub const TAIL_BOUNDS: &str = "Gaussian tail bounds";
}

fn range_of(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
    values
        .into_iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

fn band_text(band: RatioBand) -> String {
    format!("[{:.4}, {:.4}]", band.lo, band.hi)
}

fn profile_line(report: &mut CheckReport, name: &str, cloud: &PointCloud<f64>, flags: usize, key: &StreamKey) -> Result<()> {
    let profile = radius_profile(cloud, flags, key)?;
    let values = profile.values();
    let drop = values
        .windows(2)
        .position(|w| w[1] < w[0])
        .map(|i| format!("drop at k = {}", i + 2))
        .unwrap_or_else(|| format!("nondecreasing over k = 1..{}", values.len()));
    report.push_exact(name, drop, profile.is_monotone());
    Ok(())
}

fn moment_table_line(report: &mut CheckReport, name: &str, table: &[MomentRatio<f64>]) {
    if table.is_empty() {
        report.push(name, "no admissible exponents".into(), band_text(MOMENT_BAND), true);
        return;
    }
    let (lo, hi) = range_of(table.iter().map(|r| r.ratio.value));
    let exact_ok = table
        .iter()
        .all(|r| r.exact_ratio.is_none_or(|e| r.ratio.within(e, 3.0, 0.0)));
    let passed = MOMENT_BAND.contains(lo) && MOMENT_BAND.contains(hi) && exact_ok;
    let mut observed = format!("ratios in [{lo:.4}, {hi:.4}]");
    if table[0].exact_ratio.is_some() {
        observed.push_str(if exact_ok { ", closed forms ok" } else { ", closed form off" });
    }
    report.push(name, observed, band_text(MOMENT_BAND), passed);
}

/// The check suite on the body named by `config` at dimension `config.n`.
pub fn lemma_checks(config: &SweepConfig) -> Result<CheckReport> {
    let kind = config.validate()?;
    lemma_checks_with_body(config, &make_body(kind, config.n)?)
}

/// The check suite on an explicit body (its `L_K` is taken as given).
///
/// Sample sizes come from `config`: the profile checks use the largest `N`
/// and `M` flags; the moment checks use `m` points and `max(M, 2)`
/// subspaces; `log N` for the largest `N` is one of the exponents.
pub fn lemma_checks_with_body(config: &SweepConfig, body: &Body<f64>) -> Result<CheckReport> {
    use check_names::*;
    config.validate()?;
    let n = body.dim();
    let root = StreamKey::with_path(config.seed, vec![u64::MAX]);
    let max_count = *config.n_list.iter().max().expect("validated nonempty");
    let mut report = CheckReport::default();

    let cloud = body.sample(max_count, &root.derive(0))?;
    profile_line(&mut report, PROFILE, &cloud, config.flags, &root.derive(1))?;
    let direction: Vec<f64> = (0..n).map(|i| 1.0 / (1.0 + i as f64)).collect();
    let collinear = Matrix::from_fn(max_count.min(256), n, |j, i| {
        (j as f64 - 100.0) * direction[i]
    });
    let collinear = PointCloud::new(collinear, Source::Explicit, root.derive(2));
    profile_line(&mut report, PROFILE_COLLINEAR, &collinear, config.flags, &root.derive(3))?;
    let single = PointCloud::from_rows(std::slice::from_ref(&direction))?;
    profile_line(&mut report, PROFILE_SINGLE, &single, config.flags, &root.derive(4))?;

    let target = (n as f64).sqrt() * body.isotropic_constant();
    let second = moment(body, 2.0, config.m, &root.derive(5))?;
    report.push(
        SECOND_MOMENT,
        format!("{:.6} ± {:.2e}", second.value, second.stderr),
        format!("{target:.6} ± 3 stderr"),
        second.within(target, 3.0, 0.0),
    );

    if n >= 4 {
        let positive = positive_moment_check(body, config.m, &root.derive(6))?;
        moment_table_line(&mut report, POSITIVE_MOMENTS, &positive);
        let negative = negative_moment_check(body, config.m, &root.derive(7))?;
        moment_table_line(&mut report, NEGATIVE_MOMENTS, &negative);
    }

    let mut ks = vec![1, n.div_ceil(2), n];
    ks.dedup();
    let log_n = (max_count as f64).ln();
    let mut qs = vec![1.0, 2.0];
    if log_n >= 1.0 {
        qs.push(log_n);
    }
    let mut worst_z: f64 = 0.0;
    let mut order = Vec::new();
    let mut index = 0u64;
    for &k in &ks {
        for &q in &qs {
            let r = grassmann_moment_avg(body, k, q, config.flags, config.m, &root.derive(8).derive(index))?;
            index += 1;
            let ratio = &r.identity_ratio;
            if ratio.stderr > 0.0 {
                worst_z = worst_z.max((ratio.value - 1.0).abs() / ratio.stderr);
            } else if (ratio.value - 1.0).abs() > 1e-12 {
                worst_z = f64::INFINITY;
            }
            order.push(r.order_ratio);
        }
    }
    report.push(
        GRASSMANN_IDENTITY,
        format!("max |z| = {worst_z:.3}"),
        "|z| <= 3".into(),
        worst_z <= 3.0,
    );
    let (lo, hi) = range_of(order);
    report.push(
        GRASSMANN_BAND,
        format!("ratios in [{lo:.4}, {hi:.4}]"),
        band_text(SUBSPACE_BAND),
        SUBSPACE_BAND.contains(lo) && SUBSPACE_BAND.contains(hi),
    );

    let k = n.min(8);
    if k >= 3 {
        let q = ((k - 1) / 2).min(2);
        let width = centroid_width_check(body, k, q, config.flags, config.m, &root.derive(9))?;
        report.push(
            CENTROID_BAND,
            format!("k = {k}, q = {q}: ratios in [{:.4}, {:.4}]", width.min, width.max),
            band_text(SUBSPACE_BAND),
            SUBSPACE_BAND.contains(width.min) && SUBSPACE_BAND.contains(width.max),
        );
        report.push(
            SUBSPACE_NEGATIVE,
            format!("k = {k}, q = {q}: ratio {:.4}", width.subspace_average_ratio),
            band_text(SUBSPACE_BAND),
            SUBSPACE_BAND.contains(width.subspace_average_ratio),
        );
    }

    let grid = tail_bound_grid(50, 100);
    let rows = tail_bound_check(50, &grid)?;
    let holds = rows.iter().all(|r| r.holds);
    let tight = rows
        .iter()
        .filter(|r| r.k == 1)
        .map(|r| r.lower_gap.abs())
        .fold(0.0f64, f64::max);
    report.push(
        TAIL_BOUNDS,
        format!("{} points, k = 1 gap {tight:.1e}", rows.len()),
        "bounds hold, gap <= 1e-12".into(),
        holds && tight <= 1e-12,
    );
    Ok(report)
}

/// One plotted curve.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Series {
    pub label: String,
    /// `(x, mean y)` sorted by `x`.
    pub points: Vec<(f64, f64)>,
}

/// Reads `csv_path`, averages `y` per distinct `x` within each
/// `(body, N)` group, and writes a single-panel SVG to `out`.
pub fn emit_plot(csv_path: &Path, x: &str, y: &str, out: &Path) -> Result<Vec<Series>> {
    let mut reader = csv::Reader::from_path(csv_path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn {
                missing: name.to_string(),
                available: headers.clone(),
            })
    };
    let (xi, yi) = (column(x)?, column(y)?);
    let group_cols: Vec<usize> = ["body", "N"].iter().filter_map(|c| column(c).ok()).collect();

    // label -> x bits -> (x, sum y, count)
    type Groups = Vec<(String, BTreeMap<u64, (f64, f64, usize)>)>;
    let mut groups: Groups = Vec::new();
    for record in reader.records() {
        let record = record?;
        let parse = |i: usize| -> Result<f64> {
            record[i].parse::<f64>().map_err(|_| {
                Error::InvalidParameter(format!("non-numeric value {:?} in column {}", &record[i], headers[i]))
            })
        };
        let (xv, yv) = (parse(xi)?, parse(yi)?);
        let label = group_cols
            .iter()
            .map(|&i| format!("{}={}", headers[i], &record[i]))
            .collect::<Vec<_>>()
            .join(" ");
        let slot = match groups.iter().position(|(l, _)| *l == label) {
            Some(i) => i,
            None => {
                groups.push((label, BTreeMap::new()));
                groups.len() - 1
            }
        };
        // Keyed by an order-preserving bit pattern of x.
        let bits = xv.to_bits();
        let ordered = if xv.is_sign_negative() { !bits } else { bits | (1 << 63) };
        let entry = groups[slot].1.entry(ordered).or_insert((xv, 0.0, 0));
        entry.1 += yv;
        entry.2 += 1;
    }
    let series: Vec<Series> = groups
        .into_iter()
        .map(|(label, points)| Series {
            label,
            points: points.into_values().map(|(xv, sum, c)| (xv, sum / c as f64)).collect(),
        })
        .collect();
    write_output(out, render_svg(&series, x, y).as_bytes())?;
    Ok(series)
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

/// Line/scatter SVG of the given series.
pub fn render_svg(series: &[Series], x_label: &str, y_label: &str) -> String {
    const W: f64 = 720.0;
    const H: f64 = 460.0;
    const LEFT: f64 = 70.0;
    const RIGHT: f64 = 200.0;
    const TOP: f64 = 20.0;
    const BOTTOM: f64 = 50.0;
    let all = series.iter().flat_map(|s| s.points.iter());
    let (x_lo, x_hi) = range_of(all.clone().map(|p| p.0));
    let (y_lo, y_hi) = range_of(all.map(|p| p.1));
    let pad = |lo: f64, hi: f64| {
        if !lo.is_finite() {
            (0.0, 1.0)
        } else if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
            (lo - 0.5, hi + 0.5)
        } else {
            (lo, hi)
        }
    };
    let (x_lo, x_hi) = pad(x_lo, x_hi);
    let (y_lo, y_hi) = pad(y_lo, y_hi);
    let px = |v: f64| LEFT + (v - x_lo) / (x_hi - x_lo) * (W - LEFT - RIGHT);
    let py = |v: f64| H - BOTTOM - (v - y_lo) / (y_hi - y_lo) * (H - TOP - BOTTOM);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let (x0, x1, y0, y1) = (px(x_lo), px(x_hi), py(y_lo), py(y_hi));
    let _ = writeln!(
        svg,
        r#"<path d="M{x0:.2} {y1:.2} L{x0:.2} {y0:.2} L{x1:.2} {y0:.2}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let xv = x_lo + t * (x_hi - x_lo);
        let yv = y_lo + t * (y_hi - y_lo);
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            px(xv),
            y0 + 16.0,
            tick(xv)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            x0 - 6.0,
            py(yv) + 4.0,
            tick(yv)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        H - 10.0,
        escape(x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = s
            .points
            .iter()
            .map(|&(xv, yv)| format!("{:.2},{:.2}", px(xv), py(yv)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            path.join(" ")
        );
        for &(xv, yv) in &s.points {
            let _ = writeln!(
                svg,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                px(xv),
                py(yv)
            );
        }
        let ly = TOP + 16.0 * (i as f64 + 1.0);
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{ly:.2}" fill="{color}">{}</text>"#,
            W - RIGHT + 16.0,
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> SweepConfig {
        SweepConfig {
            flags: 4,
            replicas: 5,
            ..SweepConfig::new(BodyKind::Cube, 6, vec![6, 20], vec![1, 3, 6])
        }
    }

    #[test]
    fn config_parsing() {
        let text = r#"{"body":"cross","n":8,"N_list":[8,32],"k_list":[1,8],"M":16,"R":3,"seed":9}"#;
        let config = SweepConfig::from_json(text).unwrap();
        assert_eq!(config.body_kind().unwrap(), BodyKind::CrossPolytope);
        assert_eq!((config.flags, config.replicas, config.seed), (16, 3, 9));
        assert_eq!(config.m, DEFAULT_MOMENT_SAMPLES);

        let typo = r#"{"body":"cube","n":8,"N_list":[8],"k_list":[1],"MM":16}"#;
        assert!(matches!(SweepConfig::from_json(typo), Err(Error::Config(_))));
        let bad_body = r#"{"body":"sphere","n":8,"N_list":[8],"k_list":[1]}"#;
        let err = SweepConfig::from_json(bad_body).unwrap_err().to_string();
        assert!(err.contains("cube, ball, cross, simplex"), "{err}");
        let bad_k = r#"{"body":"cube","n":8,"N_list":[8],"k_list":[9]}"#;
        assert!(SweepConfig::from_json(bad_k).is_err());
        let small_n = r#"{"body":"cube","n":8,"N_list":[4],"k_list":[1]}"#;
        assert!(SweepConfig::from_json(small_n).is_err());
    }

    #[test]
    fn regimes() {
        assert_eq!(Regime::classify(100, 10_000), Regime::TwoSided);
        assert_eq!(Regime::classify(100, 400), Regime::UpperOnly);
        assert_eq!(Regime::classify(16, 256), Regime::OutOfRegime);
        assert_eq!(Regime::classify(16, 16), Regime::UpperOnly);
        assert_eq!(Regime::classify(64, 4096), Regime::OutOfRegime);
        assert_eq!(Regime::classify(64, 2048), Regime::UpperOnly);
    }

    #[test]
    fn grid_shape() {
        let grid = default_grid();
        assert_eq!(grid.len(), 12);
        let cube100 = grid
            .iter()
            .find(|c| c.body == "cube" && c.n == 100)
            .unwrap();
        assert_eq!(cube100.n_list, vec![100, 400, 10_000]);
        assert_eq!(cube100.k_list, vec![1, 10, 50, 100]);
        let g16 = grid.iter().find(|c| c.n == 16).unwrap();
        assert_eq!(g16.k_list, vec![1, 4, 8, 16]);
        for c in &grid {
            c.validate().unwrap();
        }
    }

    #[test]
    fn sweep_rows_are_complete_and_ordered() {
        let config = small_config();
        let rows = sweep_rows(&config).unwrap();
        assert_eq!(rows.len(), 2 * 3 * 5);
        assert_eq!((rows[0].count, rows[0].k, rows[0].replica), (6, 1, 0));
        assert_eq!((rows[4].count, rows[4].k, rows[4].replica), (6, 1, 4));
        assert_eq!((rows[5].count, rows[5].k), (6, 3));
        for row in &rows {
            assert!((row.ratio - row.estimate / row.normalizer).abs() <= 1e-15 * row.ratio);
            assert!(row.estimate.is_finite() && row.stderr.is_finite());
        }
        let bytes = csv_bytes(&rows).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        assert_eq!(text.lines().count(), 31);
        assert_eq!(
            text.lines().next().unwrap(),
            "body,n,N,k,replica,seed,estimate,stderr,L_K,normalizer,ratio,regime_flag"
        );
    }

    #[test]
    fn exact_rows_have_zero_error() {
        let rows = sweep_rows(&small_config()).unwrap();
        assert!(rows.iter().filter(|r| r.k == 6).all(|r| r.stderr == 0.0));
    }

    #[test]
    fn band_fraction_extremes() {
        let mut config = small_config();
        config.replicas = 50;
        let absurd = band_probability_report(&config, RatioBand { lo: 10.0, hi: 11.0 }).unwrap();
        assert!(absurd.iter().all(|c| c.fraction == 0.0));
        let all = band_probability_report(&config, RatioBand { lo: 0.0, hi: 100.0 }).unwrap();
        assert!(all.iter().all(|c| c.fraction == 1.0));
        config.replicas = 10;
        assert!(band_probability_report(&config, RatioBand { lo: 0.0, hi: 1.0 }).is_err());
    }

    #[test]
    fn missing_output_is_an_error() {
        let config = small_config();
        assert!(matches!(run_sweep(&config), Err(Error::Config(_))));
        let mut bad = small_config();
        bad.output = Some(PathBuf::from("/nonexistent-dir/out.csv"));
        assert!(matches!(run_sweep(&bad), Err(Error::Output { .. })));
    }

    #[test]
    fn svg_is_deterministic() {
        let series = vec![Series {
            label: "body=ball N=8".into(),
            points: vec![(1.0, 2.0), (2.0, 2.5)],
        }];
        let a = render_svg(&series, "k", "ratio");
        assert_eq!(a, render_svg(&series, "k", "ratio"));
        assert!(a.starts_with("<svg"));
    }
}
