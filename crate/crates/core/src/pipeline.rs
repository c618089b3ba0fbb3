//! End-to-end pruning of a checkpoint: score, mask, compensate, write.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use glob::Pattern;
use serde::{Deserialize, Serialize};

use crate::calib_stats::ChannelStats;
use crate::energy_comp::{compensate_into, CorrectionReport, EcMode, EnergyConfig};
use crate::error::{Error, Result};
use crate::masking::{build_mask, MaskGroup, SparsitySpec};
use crate::matrix::{Matrix, PruneMask, WeightMatrix};
use crate::scoring::{
    score_cvr, score_magnitude, score_wanda, ActivationMode, Criterion, ScoreMatrix, DEFAULT_ALPHA,
    DEFAULT_EPS,
};
use crate::tensor_store::{StatsFile, Tensor, TensorFile};

pub const DEFAULT_HOLDOUT: f64 = 0.2;

/// Per-layer pruning knobs shared by every prunable tensor of a job.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PruneSettings {
    pub criterion: Criterion,
    pub alpha: f64,
    pub eps: f64,
    pub act_factor: ActivationMode,
    pub sparsity: SparsitySpec,
    pub group: MaskGroup,
    pub ec: EcMode,
    pub ec_cfg: EnergyConfig,
}

impl Default for PruneSettings {
    fn default() -> Self {
        Self {
            criterion: Criterion::Cvr,
            alpha: DEFAULT_ALPHA,
            eps: DEFAULT_EPS,
            act_factor: ActivationMode::Variance,
            sparsity: SparsitySpec::Unstructured { ratio: 0.5 },
            group: MaskGroup::Row,
            ec: EcMode::On,
            ec_cfg: EnergyConfig::default(),
        }
    }
}

impl PruneSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::Config(format!("eps must be > 0, got {}", self.eps)));
        }
        self.sparsity.validate()?;
        self.ec_cfg.validate()
    }

    /// Scores `weights` under the configured criterion.
    pub fn score(&self, weights: &WeightMatrix, stats: Option<&ChannelStats>) -> Result<ScoreMatrix> {
        let need = || {
            Error::Config(format!(
                "criterion {} requires calibration statistics",
                self.criterion
            ))
        };
        match self.criterion {
            Criterion::Magnitude => Ok(score_magnitude(weights)),
            Criterion::Wanda => score_wanda(weights, stats.ok_or_else(need)?),
            Criterion::Cvr => score_cvr(
                weights,
                stats.ok_or_else(need)?,
                self.alpha,
                self.eps,
                self.act_factor,
            ),
        }
    }
}

/// A full `prune` job: paths plus [`PruneSettings`].
#[derive(Debug, Clone, PartialEq)]
pub struct PruneJobConfig {
    pub input: PathBuf,
    pub output: PathBuf,
    /// Defaults to `<output stem>.masks.tensors`.
    pub masks: Option<PathBuf>,
    /// Defaults to `<output stem>.report.json`.
    pub report: Option<PathBuf>,
    pub stats: Option<PathBuf>,
    /// Activation dump with one `(samples, d_in)` tensor per layer name.
    pub activations: Option<PathBuf>,
    /// Trailing fraction of activation rows reserved for reconstruction error.
    pub holdout: f64,
    /// Comma-separated globs; a tensor is pruned when it matches any of them.
    pub filter: String,
    /// Comma-separated globs removed from the filtered set.
    pub exclude: String,
    pub settings: PruneSettings,
}

/// Keys accepted in config files and as CLI overrides.
pub const CONFIG_KEYS: &[&str] = &[
    "input",
    "output",
    "masks",
    "report",
    "stats",
    "activations",
    "holdout",
    "filter",
    "exclude",
    "criterion",
    "alpha",
    "eps",
    "act_factor",
    "sparsity",
    "group",
    "ec",
    "ec_eps",
    "clamp_lo",
    "clamp_hi",
];

/// Parses a flat `key = value` file. Blank lines and `#` comments are skipped.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key=value, got `{line}`", n + 1)))?;
        let k = k.trim();
        if !CONFIG_KEYS.contains(&k) {
            return Err(Error::Config(format!("line {}: unknown key `{k}`", n + 1)));
        }
        out.insert(k.to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn parse_num(key: &str, v: &str) -> Result<f64> {
    v.parse()
        .map_err(|_| Error::Config(format!("`{key}` expects a number, got `{v}`")))
}

impl PruneJobConfig {
    /// Builds a config from key/value pairs, applying defaults for absent keys.
    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self> {
        if let Some(k) = map.keys().find(|k| !CONFIG_KEYS.contains(&k.as_str())) {
            return Err(Error::Config(format!("unknown key `{k}`")));
        }
        let get = |k: &str| map.get(k).map(String::as_str).filter(|v| !v.is_empty());
        let path = |k: &str| get(k).map(PathBuf::from);
        let required = |k: &str| path(k).ok_or_else(|| Error::Config(format!("`{k}` is required")));

        let mut s = PruneSettings::default();
        if let Some(v) = get("criterion") {
            s.criterion = v.parse()?;
        }
        if let Some(v) = get("alpha") {
            s.alpha = parse_num("alpha", v)?;
        }
        if let Some(v) = get("eps") {
            s.eps = parse_num("eps", v)?;
        }
        if let Some(v) = get("act_factor") {
            s.act_factor = v.parse()?;
        }
        if let Some(v) = get("sparsity") {
            s.sparsity = v.parse()?;
        }
        if let Some(v) = get("group") {
            s.group = v.parse()?;
        }
        if let Some(v) = get("ec") {
            s.ec = v.parse()?;
        }
        if let Some(v) = get("ec_eps") {
            s.ec_cfg.eps = parse_num("ec_eps", v)?;
        }
        if let Some(v) = get("clamp_lo") {
            s.ec_cfg.clamp_lo = parse_num("clamp_lo", v)?;
        }
        if let Some(v) = get("clamp_hi") {
            s.ec_cfg.clamp_hi = parse_num("clamp_hi", v)?;
        }

        let cfg = PruneJobConfig {
            input: required("input")?,
            output: required("output")?,
            masks: path("masks"),
            report: path("report"),
            stats: path("stats"),
            activations: path("activations"),
            holdout: get("holdout")
                .map(|v| parse_num("holdout", v))
                .transpose()?
                .unwrap_or(DEFAULT_HOLDOUT),
            filter: get("filter").unwrap_or("*").to_string(),
            exclude: get("exclude").unwrap_or("").to_string(),
            settings: s,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.settings.validate()?;
        if !(0.0..1.0).contains(&self.holdout) {
            return Err(Error::Config(format!(
                "holdout must lie in [0, 1), got {}",
                self.holdout
            )));
        }
        if self.settings.criterion.needs_stats() && self.stats.is_none() && self.activations.is_none() {
            return Err(Error::Config(format!(
                "criterion {} requires `stats` (or `activations` to derive them from)",
                self.settings.criterion
            )));
        }
        LayerFilter::new(&self.filter, &self.exclude)?;
        Ok(())
    }

    pub fn masks_path(&self) -> PathBuf {
        self.masks
            .clone()
            .unwrap_or_else(|| sibling(&self.output, "masks.tensors"))
    }

    pub fn report_path(&self) -> PathBuf {
        self.report
            .clone()
            .unwrap_or_else(|| sibling(&self.output, "report.json"))
    }
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "output".into());
    path.with_file_name(format!("{stem}.{suffix}"))
}

/// Include/exclude glob lists over tensor names.
#[derive(Debug, Clone)]
pub struct LayerFilter {
    include: Vec<Pattern>,
    exclude: Vec<Pattern>,
}

impl LayerFilter {
    pub fn new(include: &str, exclude: &str) -> Result<Self> {
        let compile = |list: &str| -> Result<Vec<Pattern>> {
            list.split(',')
                .map(str::trim)
                .filter(|p| !p.is_empty())
                .map(|p| Pattern::new(p).map_err(|e| Error::Config(format!("bad glob `{p}`: {e}"))))
                .collect()
        };
        Ok(Self {
            include: compile(include)?,
            exclude: compile(exclude)?,
        })
    }

    pub fn matches(&self, name: &str) -> bool {
        self.include.iter().any(|p| p.matches(name)) && !self.exclude.iter().any(|p| p.matches(name))
    }
}

/// Median wall-clock per stage.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTimings {
    pub scoring: Duration,
    pub masking: Duration,
    pub ec: Duration,
}

impl StageTimings {
    pub fn total(&self) -> Duration {
        self.scoring + self.masking + self.ec
    }

    /// EC time relative to scoring plus masking.
    pub fn ec_overhead(&self) -> f64 {
        let base = (self.scoring + self.masking).as_secs_f64();
        if base == 0.0 {
            0.0
        } else {
            self.ec.as_secs_f64() / base
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerReport {
    pub name: String,
    pub shape: [usize; 2],
    pub criterion: Criterion,
    pub sparsity: String,
    pub ec: EcMode,
    pub achieved_sparsity: f64,
    /// `‖X W̃ᵀ − X Wᵀ‖_F / ‖X Wᵀ‖_F` on held-out activations.
    pub reconstruction_error: Option<f64>,
    pub correction: Option<CorrectionReport>,
    /// Wall-clock is kept out of persisted reports so reruns stay byte-identical.
    #[serde(skip)]
    pub timings: StageTimings,
}

#[derive(Debug, Clone)]
pub struct LayerOutcome {
    pub weights: WeightMatrix,
    pub mask: PruneMask,
    pub report: LayerReport,
}

/// Relative Frobenius error of the layer output on `activations`.
pub fn reconstruction_error(
    activations: &Matrix,
    original: &WeightMatrix,
    pruned: &WeightMatrix,
) -> Result<f64> {
    original.ensure_same_shape(pruned.shape(), "pruned weights")?;
    let reference = activations.matmul_transposed(original)?;
    let delta = Matrix::from_vec(
        original.rows(),
        original.cols(),
        pruned
            .as_slice()
            .iter()
            .zip(original.as_slice())
            .map(|(p, o)| p - o)
            .collect(),
    )?;
    let err = activations.matmul_transposed(&delta)?;
    let denom = reference.frobenius_norm();
    if denom == 0.0 {
        return Ok(if err.frobenius_norm() == 0.0 {
            0.0
        } else {
            f64::INFINITY
        });
    }
    Ok(err.frobenius_norm() / denom)
}

/// Scores, masks and optionally compensates one weight matrix.
pub fn prune_layer(
    name: &str,
    weights: &WeightMatrix,
    stats: Option<&ChannelStats>,
    settings: &PruneSettings,
    holdout: Option<&Matrix>,
) -> Result<LayerOutcome> {
    settings.validate()?;
    if settings.criterion.needs_stats() && stats.is_none() {
        return Err(Error::MissingStats(name.to_string()));
    }
    if let Some(p) = weights.first_non_finite() {
        return Err(Error::NonFinite(p));
    }

    let t = Instant::now();
    let scores = settings.score(weights, stats)?;
    let scoring = t.elapsed();

    let t = Instant::now();
    let mask = build_mask(&scores, settings.sparsity, settings.group)?;
    let masking = t.elapsed();

    let t = Instant::now();
    let (out, correction) = compensate_into(weights, &mask, &settings.ec_cfg, settings.ec, scores.values)?;
    let ec = t.elapsed();

    let reconstruction_error = holdout
        .filter(|x| x.rows() > 0)
        .map(|x| reconstruction_error(x, weights, &out))
        .transpose()?;

    let report = LayerReport {
        name: name.to_string(),
        shape: [weights.rows(), weights.cols()],
        criterion: settings.criterion,
        sparsity: settings.sparsity.to_string(),
        ec: settings.ec,
        achieved_sparsity: mask.sparsity(),
        reconstruction_error,
        correction: (settings.ec != EcMode::Off).then_some(correction),
        timings: StageTimings { scoring, masking, ec },
    };
    Ok(LayerOutcome {
        weights: out,
        mask,
        report,
    })
}

/// Splits activation rows into a leading calibration part and a trailing
/// held-out part of `round(rows · holdout)` rows.
pub fn split_holdout(activations: &Matrix, holdout: f64) -> (Matrix, Matrix) {
    let rows = activations.rows();
    let mut held = (rows as f64 * holdout).round() as usize;
    if held >= rows && rows > 0 {
        held = rows - 1;
    }
    let calib_rows = rows - held;
    (
        activations.slice_rows(0, calib_rows),
        activations.slice_rows(calib_rows, rows),
    )
}

/// Streams an activation dump into per-layer statistics, using only the
/// calibration (non-held-out) rows of each tensor.
pub fn collect_stats(activations: &TensorFile, holdout: f64, chunk_rows: usize) -> Result<StatsFile> {
    let mut file = StatsFile::new();
    for (name, tensor) in activations.iter() {
        if !tensor.is_rank2_f32() {
            continue;
        }
        let acts = tensor.to_matrix(name)?;
        let (calib, _) = split_holdout(&acts, holdout);
        let mut stats = ChannelStats::new(calib.cols());
        let step = chunk_rows.max(1);
        for start in (0..calib.rows()).step_by(step) {
            stats
                .update(&calib.slice_rows(start, start + step))
                .map_err(|e| layer_err(name, e))?;
        }
        if stats.count() == 0 {
            return Err(layer_err(name, Error::EmptyStats));
        }
        file.insert(name, stats);
    }
    Ok(file)
}

fn layer_err(name: &str, e: Error) -> Error {
    Error::Layer {
        name: name.to_string(),
        source: Box::new(e),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobReport {
    pub settings: PruneSettings,
    pub layers: Vec<LayerReport>,
    /// Tensors copied verbatim.
    pub passthrough: Vec<String>,
}

impl JobReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("bad report {}: {e}", path.display())))
    }
}

impl fmt::Display for JobReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = &self.settings;
        writeln!(
            f,
            "criterion={} alpha={} sparsity={} group={} ec={} clamp=[{}, {}]",
            s.criterion, s.alpha, s.sparsity, s.group, s.ec, s.ec_cfg.clamp_lo, s.ec_cfg.clamp_hi
        )?;
        writeln!(
            f,
            "{:<40} {:>11} {:>9} {:>10} {:>8} {:>11} {:>11}",
            "layer", "shape", "sparsity", "recon_err", "clamped", "col_dev", "row_dev"
        )?;
        for l in &self.layers {
            let shape = format!("{}x{}", l.shape[0], l.shape[1]);
            let recon = l
                .reconstruction_error
                .map_or("-".to_string(), |e| format!("{e:.6}"));
            let (clamped, col, row) = match &l.correction {
                Some(c) => (
                    c.clamped().to_string(),
                    format!("{:.4}>{:.4}", c.col_energy_dev_before, c.col_energy_dev_after),
                    format!("{:.4}>{:.4}", c.row_energy_dev_before, c.row_energy_dev_after),
                ),
                None => ("-".into(), "-".into(), "-".into()),
            };
            writeln!(
                f,
                "{:<40} {:>11} {:>9.4} {:>10} {:>8} {:>11} {:>11}",
                l.name, shape, l.achieved_sparsity, recon, clamped, col, row
            )?;
        }
        if !self.passthrough.is_empty() {
            writeln!(f, "passthrough: {}", self.passthrough.join(", "))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct JobSummary {
    pub report: JobReport,
    pub output: PathBuf,
    pub masks: PathBuf,
    pub report_path: PathBuf,
}

struct LayerInputs {
    stats: Option<StatsFile>,
    activations: Option<TensorFile>,
}

impl LayerInputs {
    fn load(config: &PruneJobConfig) -> Result<Self> {
        let stats = config.stats.as_ref().map(StatsFile::read).transpose()?;
        let activations = config.activations.as_ref().map(TensorFile::read).transpose()?;
        Ok(Self { stats, activations })
    }

    /// Statistics and held-out rows for `name`.
    fn for_layer(&self, name: &str, holdout: f64) -> Result<(Option<ChannelStats>, Option<Matrix>)> {
        let acts = match &self.activations {
            Some(file) if file.names().any(|n| n == name) => Some(file.matrix(name)?),
            _ => None,
        };
        let (calib, held) = match acts {
            Some(a) => {
                let (c, h) = split_holdout(&a, holdout);
                (Some(c), Some(h))
            }
            None => (None, None),
        };
        let stats = match (&self.stats, calib) {
            (Some(file), _) => file.get(name).cloned(),
            (None, Some(c)) if c.rows() > 0 => Some(ChannelStats::from_batch(&c)?),
            _ => None,
        };
        Ok((stats, held))
    }
}

/// Prunes every matching rank-2 float tensor of the input checkpoint and
/// writes the pruned checkpoint, the masks and a JSON report.
pub fn run_job(config: &PruneJobConfig) -> Result<JobSummary> {
    config.validate()?;
    let filter = LayerFilter::new(&config.filter, &config.exclude)?;
    let input = TensorFile::read(&config.input)?;
    let inputs = LayerInputs::load(config)?;

    let mut output = TensorFile::new();
    for (k, v) in input.metadata() {
        output.set_metadata(k.clone(), v.clone());
    }
    let mut masks = TensorFile::new();
    let mut layers = Vec::new();
    let mut passthrough = Vec::new();

    for (name, tensor) in input.iter() {
        if !(tensor.is_rank2_f32() && filter.matches(name)) {
            output.insert(name, tensor.clone())?;
            passthrough.push(name.to_string());
            continue;
        }
        let outcome = (|| {
            let weights = tensor.to_matrix(name)?;
            let (stats, held) = inputs.for_layer(name, config.holdout)?;
            let outcome = prune_layer(name, &weights, stats.as_ref(), &config.settings, held.as_ref())?;
            let stored = Tensor::from_matrix(&outcome.weights)?;
            Ok::<_, Error>((outcome, stored))
        })()
        .map_err(|e| layer_err(name, e))?;
        let (outcome, stored) = outcome;
        output.insert(name, stored)?;
        masks.insert(format!("{name}.mask"), Tensor::from_mask(&outcome.mask))?;
        layers.push(outcome.report);
    }

    let report = JobReport {
        settings: config.settings,
        layers,
        passthrough,
    };
    let masks_path = config.masks_path();
    let report_path = config.report_path();
    output.write(&config.output)?;
    masks.write(&masks_path)?;
    fs::write(&report_path, report.to_json()).map_err(|e| Error::io(&report_path, e))?;
    Ok(JobSummary {
        report,
        output: config.output.clone(),
        masks: masks_path,
        report_path,
    })
}

fn median(mut xs: Vec<Duration>) -> Duration {
    xs.sort_unstable();
    let n = xs.len();
    if n == 0 {
        Duration::ZERO
    } else if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2
    }
}

/// Times scoring, masking and compensation `repeats` times and returns the
/// per-stage medians.
pub fn time_layer(
    weights: &WeightMatrix,
    stats: Option<&ChannelStats>,
    settings: &PruneSettings,
    repeats: usize,
) -> Result<StageTimings> {
    if repeats < 3 {
        return Err(Error::Config(format!(
            "benchmark needs at least 3 repeats, got {repeats}"
        )));
    }
    settings.validate()?;
    let mut scoring = Vec::with_capacity(repeats);
    let mut masking = Vec::with_capacity(repeats);
    let mut ec = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let t = Instant::now();
        let scores = settings.score(weights, stats)?;
        scoring.push(t.elapsed());

        let t = Instant::now();
        let mask = build_mask(&scores, settings.sparsity, settings.group)?;
        masking.push(t.elapsed());

        if settings.ec != EcMode::Off {
            let t = Instant::now();
            let out = compensate_into(weights, &mask, &settings.ec_cfg, settings.ec, scores.values)?;
            ec.push(t.elapsed());
            std::hint::black_box(out);
        }
    }
    Ok(StageTimings {
        scoring: median(scoring),
        masking: median(masking),
        ec: median(ec),
    })
}

#[derive(Debug, Clone)]
pub struct TimingRow {
    pub layer: String,
    pub shape: [usize; 2],
    pub criterion: Criterion,
    pub ec: EcMode,
    pub timings: StageTimings,
}

#[derive(Debug, Clone, Default)]
pub struct TimingTable {
    pub repeats: usize,
    pub rows: Vec<TimingRow>,
}

impl fmt::Display for TimingTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "median of {} repeats (ms)", self.repeats)?;
        writeln!(
            f,
            "{:<40} {:>11} {:>10} {:>4} {:>10} {:>10} {:>10} {:>10} {:>9}",
            "layer", "shape", "criterion", "ec", "scoring", "masking", "ec_time", "total", "ec_ratio"
        )?;
        let ms = |d: Duration| d.as_secs_f64() * 1e3;
        for r in &self.rows {
            let t = &r.timings;
            writeln!(
                f,
                "{:<40} {:>11} {:>10} {:>4} {:>10.3} {:>10.3} {:>10.3} {:>10.3} {:>9.3}",
                r.layer,
                format!("{}x{}", r.shape[0], r.shape[1]),
                r.criterion.to_string(),
                r.ec.to_string(),
                ms(t.scoring),
                ms(t.masking),
                ms(t.ec),
                ms(t.total()),
                t.ec_overhead()
            )?;
        }
        Ok(())
    }
}

/// Times every prunable layer of the job's checkpoint without writing output.
pub fn benchmark(config: &PruneJobConfig, repeats: usize) -> Result<TimingTable> {
    if repeats < 3 {
        return Err(Error::Config(format!(
            "benchmark needs at least 3 repeats, got {repeats}"
        )));
    }
    config.validate()?;
    let filter = LayerFilter::new(&config.filter, &config.exclude)?;
    let input = TensorFile::read(&config.input)?;
    let inputs = LayerInputs::load(config)?;
    let mut table = TimingTable {
        repeats,
        rows: Vec::new(),
    };
    for (name, tensor) in input.iter() {
        if !(tensor.is_rank2_f32() && filter.matches(name)) {
            continue;
        }
        let weights = tensor.to_matrix(name)?;
        let (stats, _) = inputs
            .for_layer(name, config.holdout)
            .map_err(|e| layer_err(name, e))?;
        let timings = time_layer(&weights, stats.as_ref(), &config.settings, repeats)
            .map_err(|e| layer_err(name, e))?;
        table.rows.push(TimingRow {
            layer: name.to_string(),
            shape: [weights.rows(), weights.cols()],
            criterion: config.settings.criterion,
            ec: config.settings.ec,
            timings,
        });
    }
    Ok(table)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub label: String,
    pub criterion: Criterion,
    pub ec: EcMode,
    pub achieved_sparsity: f64,
    pub reconstruction_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub layer: String,
    pub rows: Vec<AblationRow>,
}

impl AblationReport {
    pub fn row(&self, label: &str) -> Option<&AblationRow> {
        self.rows.iter().find(|r| r.label == label)
    }
}

impl fmt::Display for AblationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "layer: {}", self.layer)?;
        writeln!(
            f,
            "{:<14} {:>10} {:>4} {:>9} {:>12}",
            "selection", "criterion", "ec", "sparsity", "recon_err"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<14} {:>10} {:>4} {:>9.4} {:>12.6}",
                r.label,
                r.criterion.to_string(),
                r.ec.to_string(),
                r.achieved_sparsity,
                r.reconstruction_error
            )?;
        }
        Ok(())
    }
}

/// Labels of the ablation ladder, in order.
pub const ABLATION_LADDER: [(&str, Criterion, EcMode); 4] = [
    ("baseline", Criterion::Wanda, EcMode::Off),
    ("+CVR", Criterion::Cvr, EcMode::Off),
    ("+EC_col", Criterion::Cvr, EcMode::Col),
    ("+EC_col+row", Criterion::Cvr, EcMode::On),
];

/// Runs the ladder baseline (Wanda), +CVR, +EC_col, +EC_col+row on one layer.
/// Statistics come from the leading calibration rows of `activations`; the
/// reconstruction error is measured on the trailing `holdout` fraction.
pub fn ablate_layer(
    name: &str,
    weights: &WeightMatrix,
    activations: &Matrix,
    holdout: f64,
    settings: &PruneSettings,
) -> Result<AblationReport> {
    if !(holdout > 0.0 && holdout < 1.0) {
        return Err(Error::Config(format!(
            "ablation needs a holdout in (0, 1), got {holdout}"
        )));
    }
    let (calib, held) = split_holdout(activations, holdout);
    if calib.rows() == 0 || held.rows() == 0 {
        return Err(Error::Config("too few activation rows to split".into()));
    }
    let stats = ChannelStats::from_batch(&calib)?;
    let mut rows = Vec::with_capacity(ABLATION_LADDER.len());
    for (label, criterion, ec) in ABLATION_LADDER {
        let s = PruneSettings {
            criterion,
            ec,
            ..*settings
        };
        let outcome = prune_layer(name, weights, Some(&stats), &s, Some(&held))?;
        rows.push(AblationRow {
            label: label.to_string(),
            criterion,
            ec,
            achieved_sparsity: outcome.report.achieved_sparsity,
            reconstruction_error: outcome
                .report
                .reconstruction_error
                .expect("held-out rows present"),
        });
    }
    Ok(AblationReport {
        layer: name.to_string(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::{gaussian, rng};

    #[test]
    fn key_value_parsing() {
        let text = "# job\ninput = a.tensors\noutput=b.tensors\n\nsparsity = 2:4\ncriterion = magnitude\n";
        let map = parse_key_values(text).unwrap();
        let cfg = PruneJobConfig::from_map(&map).unwrap();
        assert_eq!(cfg.input, PathBuf::from("a.tensors"));
        assert_eq!(cfg.settings.sparsity, SparsitySpec::Structured { n: 2, m: 4 });
        assert_eq!(cfg.masks_path(), PathBuf::from("b.masks.tensors"));
        assert_eq!(cfg.report_path(), PathBuf::from("b.report.json"));
        assert!(parse_key_values("nonsense").is_err());
        assert!(parse_key_values("colour = red").is_err());
    }

    #[test]
    fn config_requires_stats_for_activation_criteria() {
        let mut map = BTreeMap::new();
        map.insert("input".to_string(), "a".to_string());
        map.insert("output".to_string(), "b".to_string());
        map.insert("criterion".to_string(), "wanda".to_string());
        assert!(matches!(PruneJobConfig::from_map(&map), Err(Error::Config(_))));
        map.insert("stats".to_string(), "s.txt".to_string());
        assert!(PruneJobConfig::from_map(&map).is_ok());
        map.insert("alpha".to_string(), "-1".to_string());
        assert!(PruneJobConfig::from_map(&map).is_err());
    }

    #[test]
    fn filter_globs() {
        let f = LayerFilter::new("layers.*.q_proj, layers.*.k_proj", "layers.3.*").unwrap();
        assert!(f.matches("layers.0.q_proj"));
        assert!(f.matches("layers.12.k_proj"));
        assert!(!f.matches("layers.3.q_proj"));
        assert!(!f.matches("embed_tokens"));
        assert!(LayerFilter::new("[", "").is_err());
    }

    #[test]
    fn magnitude_ratio_zero_is_identity() {
        let w = gaussian(&mut rng(1), 6, 8);
        let s = PruneSettings {
            criterion: Criterion::Magnitude,
            sparsity: SparsitySpec::Unstructured { ratio: 0.0 },
            ec: EcMode::Off,
            ..Default::default()
        };
        let out = prune_layer("w", &w, None, &s, None).unwrap();
        assert_eq!(out.weights, w);
        assert_eq!(out.report.achieved_sparsity, 0.0);
        assert!(out.report.correction.is_none());
    }

    #[test]
    fn missing_stats_is_reported() {
        let w = gaussian(&mut rng(1), 4, 4);
        let s = PruneSettings::default();
        assert!(matches!(prune_layer("fc", &w, None, &s, None), Err(Error::MissingStats(n)) if n == "fc"));
    }

    #[test]
    fn structured_layer_with_ec() {
        let w = Matrix::from_fn(4, 8, |i, j| ((i * 8 + j) as f64 * 0.37).sin() + 0.1);
        let s = PruneSettings {
            criterion: Criterion::Magnitude,
            sparsity: SparsitySpec::Structured { n: 2, m: 4 },
            ec: EcMode::On,
            ..Default::default()
        };
        let out = prune_layer("w", &w, None, &s, None).unwrap();
        assert_eq!(out.report.achieved_sparsity, 0.5);
        for i in 0..4 {
            for g in 0..2 {
                let nz = out.weights.row(i)[g * 4..g * 4 + 4]
                    .iter()
                    .filter(|&&v| v != 0.0)
                    .count();
                assert_eq!(nz, 2);
            }
        }
    }

    #[test]
    fn holdout_split() {
        let a = gaussian(&mut rng(0), 10, 3);
        let (c, h) = split_holdout(&a, 0.2);
        assert_eq!((c.rows(), h.rows()), (8, 2));
        assert_eq!(h.row(1), a.row(9));
        let (c, h) = split_holdout(&a, 0.0);
        assert_eq!((c.rows(), h.rows()), (10, 0));
    }

    #[test]
    fn reconstruction_error_basics() {
        let x = gaussian(&mut rng(3), 20, 5);
        let w = gaussian(&mut rng(4), 3, 5);
        assert_eq!(reconstruction_error(&x, &w, &w).unwrap(), 0.0);
        let zero = Matrix::zeros(3, 5);
        assert!((reconstruction_error(&x, &w, &zero).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn timing_needs_three_repeats() {
        let w = gaussian(&mut rng(0), 4, 4);
        let s = PruneSettings {
            criterion: Criterion::Magnitude,
            ..Default::default()
        };
        assert!(time_layer(&w, None, &s, 1).is_err());
        assert!(time_layer(&w, None, &s, 3).is_ok());
    }
}
