//! Experiment orchestration.
//!
//! Loads vitals (from CSV or the synthetic generator), optionally plants
//! anomalies, pushes every reading through its sensor filter, rebuilds the
//! stream at the gateway, scores it with the streaming forest, prices the
//! traffic, and writes every artifact into the output directory.
//!
//! All randomness is derived from the config seed, so the same config always
//! produces byte-identical files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Read};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::{EnergyLedger, EnergyModel, OperationTable, SavingsReport};
use crate::evaluation::{
    self, confusion, default_epsilon_grid, epsilon_sweep, precision_recall_f1, roc_auc,
    ConfusionCounts, InjectionSpec, RocCurve, SweepRow,
};
use crate::filter::{DecisionCounts, FilterParams, FilterState, STEPS_PER_HOUR};
use crate::iforest::{alarm_intervals, process_stream, ForestError, ScoredPoint, StreamSummary, Tier2Params};
use crate::lpu::ReconstructionState;
use crate::model::{Decision, ModelError, SensorTopology, TimeStepVector, READING_CSV_HEADER};
use crate::synth::VitalsProfile;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("line {line}, column {column}: {reason}")]
    Parse { line: u64, column: String, reason: String },
    #[error("input has no data rows")]
    EmptyInput,
    #[error("cannot read input {path}: {source}")]
    Unreadable { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Forest(#[from] ForestError),
}

impl SimError {
    pub fn exit_code(&self) -> i32 {
        match self {
            SimError::Config(_) => 2,
            SimError::Parse { .. } | SimError::EmptyInput | SimError::Unreadable { .. } => 3,
            SimError::Io { .. } | SimError::Forest(_) => 1,
        }
    }

    fn io(path: &Path) -> impl FnOnce(io::Error) -> SimError + '_ {
        move |source| SimError::Io { path: path.to_path_buf(), source }
    }
}

impl From<ModelError> for SimError {
    fn from(e: ModelError) -> Self {
        SimError::Config(e.to_string())
    }
}

/// Column-major vitals: `columns[d][step]`, `None` where a reading is absent.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub topology: SensorTopology,
    pub times: Vec<u64>,
    pub columns: Vec<Vec<Option<f64>>>,
}

impl Dataset {
    /// Dense single-attribute channels sampled at `t = 0, 1, ...`.
    pub fn from_dense<S: AsRef<str>>(names: &[S], columns: Vec<Vec<f64>>) -> Result<Self, SimError> {
        let steps = columns.first().map_or(0, Vec::len);
        Ok(Self {
            topology: SensorTopology::single_attribute(names)?,
            times: (0..steps as u64).collect(),
            columns: columns.into_iter().map(|c| c.into_iter().map(Some).collect()).collect(),
        })
    }

    pub fn steps(&self) -> usize {
        self.times.len()
    }

    pub fn readings(&self) -> u64 {
        self.columns.iter().map(|c| c.iter().flatten().count() as u64).sum()
    }

    /// Wide CSV: `t,<attribute names...>`, empty cells for absent readings.
    pub fn to_wide_csv(&self) -> String {
        let mut out = String::from("t");
        for name in self.topology.names() {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (step, t) in self.times.iter().enumerate() {
            write!(out, "{t}").expect("write to string");
            for column in &self.columns {
                out.push(',');
                if let Some(v) = column[step] {
                    write!(out, "{v}").expect("write to string");
                }
            }
            out.push('\n');
        }
        out
    }
}

pub fn ingest(path: &Path) -> Result<Dataset, SimError> {
    let file = fs::File::open(path)
        .map_err(|source| SimError::Unreadable { path: path.to_path_buf(), source })?;
    ingest_reader(file)
}

/// Parse either the wide `t,<names...>` layout or the narrow
/// `t,sensor_id,attribute_id,value` layout, chosen by the header.
pub fn ingest_reader<R: Read>(reader: R) -> Result<Dataset, SimError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| SimError::Parse { line: 1, column: "header".into(), reason: e.to_string() })?
        .clone();
    let names: Vec<String> = headers.iter().map(str::to_string).collect();
    if names.join(",") == READING_CSV_HEADER {
        ingest_narrow(rdr)
    } else {
        if names.first().map(String::as_str) != Some("t") || names.len() < 2 {
            return Err(SimError::Parse {
                line: 1,
                column: "header".into(),
                reason: "expected `t,<attribute...>` or the per-reading header".into(),
            });
        }
        ingest_wide(rdr, &names[1..])
    }
}

fn parse_error(line: u64, column: &str, reason: impl Into<String>) -> SimError {
    SimError::Parse { line, column: column.to_string(), reason: reason.into() }
}

fn parse_value(cell: &str, line: u64, column: &str) -> Result<f64, SimError> {
    let v: f64 = cell
        .parse()
        .map_err(|_| parse_error(line, column, format!("{cell:?} is not a number")))?;
    if !v.is_finite() {
        return Err(parse_error(line, column, format!("{cell:?} is not finite")));
    }
    Ok(v)
}

fn parse_int<T: std::str::FromStr>(cell: &str, line: u64, column: &str) -> Result<T, SimError> {
    cell.parse().map_err(|_| parse_error(line, column, format!("{cell:?} is not a valid index")))
}

fn record_line(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, csv::Position::line)
}

fn read_record<R: Read>(
    rdr: &mut csv::Reader<R>,
    record: &mut csv::StringRecord,
) -> Result<bool, SimError> {
    rdr.read_record(record).map_err(|e| {
        let line = e.position().map_or(0, csv::Position::line);
        parse_error(line, "-", e.to_string())
    })
}

fn ingest_wide<R: Read>(mut rdr: csv::Reader<R>, names: &[String]) -> Result<Dataset, SimError> {
    let k = names.len();
    let mut times = Vec::new();
    let mut columns: Vec<Vec<Option<f64>>> = vec![Vec::new(); k];
    let mut record = csv::StringRecord::new();
    while read_record(&mut rdr, &mut record)? {
        let line = record_line(&record);
        if record.len() != k + 1 {
            return Err(parse_error(line, "-", format!("expected {} fields, found {}", k + 1, record.len())));
        }
        let t: u64 = parse_int(&record[0], line, "t")?;
        if times.last().is_some_and(|&prev| t <= prev) {
            return Err(parse_error(line, "t", "time steps must be strictly increasing"));
        }
        times.push(t);
        for (d, name) in names.iter().enumerate() {
            let cell = &record[d + 1];
            columns[d].push(if cell.is_empty() { None } else { Some(parse_value(cell, line, name)?) });
        }
    }
    if times.is_empty() {
        return Err(SimError::EmptyInput);
    }
    Ok(Dataset { topology: SensorTopology::single_attribute(names)?, times, columns })
}

fn ingest_narrow<R: Read>(mut rdr: csv::Reader<R>) -> Result<Dataset, SimError> {
    let mut by_step: BTreeMap<u64, Vec<(u16, u16, f64, u64)>> = BTreeMap::new();
    let mut attrs_per_sensor: BTreeMap<u16, u16> = BTreeMap::new();
    let mut last_t: BTreeMap<(u16, u16), u64> = BTreeMap::new();
    let mut record = csv::StringRecord::new();
    while read_record(&mut rdr, &mut record)? {
        let line = record_line(&record);
        if record.len() != 4 {
            return Err(parse_error(line, "-", format!("expected 4 fields, found {}", record.len())));
        }
        let t: u64 = parse_int(&record[0], line, "t")?;
        let s: u16 = parse_int(&record[1], line, "sensor_id")?;
        let a: u16 = parse_int(&record[2], line, "attribute_id")?;
        if s == 0 || a == 0 {
            return Err(parse_error(line, "sensor_id", "ids are 1-based"));
        }
        let v = parse_value(&record[3], line, "value")?;
        if let Some(&prev) = last_t.get(&(s, a)) {
            if t <= prev {
                return Err(parse_error(line, "t", "readings of one attribute must have increasing t"));
            }
        }
        last_t.insert((s, a), t);
        let k = attrs_per_sensor.entry(s).or_insert(0);
        *k = (*k).max(a);
        by_step.entry(t).or_default().push((s, a, v, line));
    }
    if by_step.is_empty() {
        return Err(SimError::EmptyInput);
    }
    let max_sensor = *attrs_per_sensor.keys().last().expect("non-empty");
    let topology = SensorTopology::new(
        (1..=max_sensor)
            .map(|s| {
                let k = attrs_per_sensor.get(&s).copied().unwrap_or(1);
                (1..=k).map(|a| format!("s{s}a{a}")).collect()
            })
            .collect(),
    )?;
    let mut columns = vec![Vec::with_capacity(by_step.len()); topology.dimension_count()];
    let mut times = Vec::with_capacity(by_step.len());
    for (t, readings) in by_step {
        times.push(t);
        for c in &mut columns {
            c.push(None);
        }
        for (s, a, v, _) in readings {
            let d = topology.dimension_of(s, a).expect("topology covers every id seen");
            *columns[d].last_mut().expect("just pushed") = Some(v);
        }
    }
    Ok(Dataset { topology, times, columns })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub steps: usize,
    pub profile: String,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self { steps: 25_000, profile: "low-variance".into() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterOverride {
    pub epsilon: Option<f64>,
    pub lower_z: Option<f64>,
    pub upper_z: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub epsilon: f64,
    pub lower_z: f64,
    pub upper_z: f64,
    pub reset_hours: f64,
    pub warmup_count: u64,
    pub variance_floor: f64,
    pub ack_interval_steps: u64,
    /// Per-attribute overrides keyed by attribute name.
    pub overrides: BTreeMap<String, FilterOverride>,
}

impl Default for FilterConfig {
    fn default() -> Self {
        let p = FilterParams::<f64>::default();
        Self {
            epsilon: p.epsilon,
            lower_z: p.lower_z,
            upper_z: p.upper_z,
            reset_hours: p.reset_period_steps as f64 / STEPS_PER_HOUR as f64,
            warmup_count: p.warmup_count,
            variance_floor: p.variance_floor,
            ack_interval_steps: p.ack_interval_steps,
            overrides: BTreeMap::new(),
        }
    }
}

impl FilterConfig {
    pub fn base_params(&self) -> FilterParams<f64> {
        FilterParams {
            epsilon: self.epsilon,
            lower_z: self.lower_z,
            upper_z: self.upper_z,
            reset_period_steps: (self.reset_hours * STEPS_PER_HOUR as f64).round().max(0.0) as u64,
            warmup_count: self.warmup_count,
            variance_floor: self.variance_floor,
            ack_interval_steps: self.ack_interval_steps,
        }
    }

    pub fn params_for(&self, attribute: &str) -> FilterParams<f64> {
        let mut p = self.base_params();
        if let Some(o) = self.overrides.get(attribute) {
            p.epsilon = o.epsilon.unwrap_or(p.epsilon);
            p.lower_z = o.lower_z.unwrap_or(p.lower_z);
            p.upper_z = o.upper_z.unwrap_or(p.upper_z);
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tier2Config {
    pub omega: usize,
    pub n_tree: usize,
    pub k_tree: usize,
    pub score_threshold: f64,
}

impl Default for Tier2Config {
    fn default() -> Self {
        let p = Tier2Params::<f64>::default();
        Self { omega: p.omega, n_tree: p.n_tree, k_tree: p.k_tree, score_threshold: p.score_threshold }
    }
}

/// Where planted anomalies enter the pipeline.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InjectStage {
    /// Into the raw readings, before the sensor filter sees them.
    #[default]
    Sensor,
    /// Into the gateway's reconstructed stream, after filtering.
    Lpu,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InjectConfig {
    pub rate: f64,
    pub magnitude_sigma: f64,
    pub dims_per_event: usize,
    /// Defaults to a stream derived from the experiment seed.
    pub seed: Option<u64>,
    pub stage: InjectStage,
}

impl Default for InjectConfig {
    fn default() -> Self {
        let s = InjectionSpec::default();
        Self {
            rate: s.rate,
            magnitude_sigma: s.magnitude_sigma,
            dims_per_event: s.dims_per_event,
            seed: None,
            stage: InjectStage::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyConfig {
    pub voltage_v: f64,
    pub bytes_per_datapoint: u64,
    pub instruction_energy_j: f64,
    pub instructions_per_assessment: u64,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        let m = EnergyModel::<f64>::default();
        Self {
            voltage_v: m.voltage_v,
            bytes_per_datapoint: m.bytes_per_datapoint,
            instruction_energy_j: m.instruction_energy_j,
            instructions_per_assessment: m.instructions_per_assessment,
        }
    }
}

impl EnergyConfig {
    pub fn model(&self) -> EnergyModel<f64> {
        EnergyModel {
            table: OperationTable::mica2(),
            voltage_v: self.voltage_v,
            bytes_per_datapoint: self.bytes_per_datapoint,
            instruction_energy_j: self.instruction_energy_j,
            instructions_per_assessment: self.instructions_per_assessment,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub decisions: bool,
    pub reconstructed: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { decisions: true, reconstructed: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Vitals CSV; the synthetic generator is used when absent.
    pub input: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
    pub synthetic: SyntheticConfig,
    pub filter: FilterConfig,
    pub tier2: Tier2Config,
    pub inject: Option<InjectConfig>,
    pub energy: EnergyConfig,
    pub outputs: OutputConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            input: None,
            out: PathBuf::from("out"),
            seed: 0,
            synthetic: SyntheticConfig::default(),
            filter: FilterConfig::default(),
            tier2: Tier2Config::default(),
            inject: None,
            energy: EnergyConfig::default(),
            outputs: OutputConfig::default(),
        }
    }
}

/// Independent sub-seed for one randomized stage.
fn derive_seed(seed: u64, stream: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const SYNTH_STREAM: u64 = 1;
const INJECT_STREAM: u64 = 2;

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, SimError> {
        toml::from_str(text).map_err(|e| SimError::Config(e.to_string()))
    }

    /// Parse a config file. A relative `input` is resolved against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = fs::read_to_string(path).map_err(|e| SimError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)?;
        if let (Some(input), Some(dir)) = (cfg.input.as_mut(), path.parent()) {
            if input.is_relative() {
                *input = dir.join(&*input);
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn tier2_params(&self) -> Tier2Params<f64> {
        Tier2Params {
            omega: self.tier2.omega,
            n_tree: self.tier2.n_tree,
            k_tree: self.tier2.k_tree,
            score_threshold: self.tier2.score_threshold,
            rng_seed: self.seed,
        }
    }

    pub fn injection_spec(&self) -> Option<InjectionSpec> {
        self.inject.as_ref().map(|i| InjectionSpec {
            rate: i.rate,
            magnitude_sigma: i.magnitude_sigma,
            dims_per_event: i.dims_per_event,
            rng_seed: i.seed.unwrap_or_else(|| derive_seed(self.seed, INJECT_STREAM)),
        })
    }

    /// Checks that do not need the data.
    pub fn validate(&self) -> Result<(), SimError> {
        let cfg_err = |e: &dyn std::fmt::Display| SimError::Config(e.to_string());
        self.filter.base_params().validate().map_err(|e| cfg_err(&e))?;
        for name in self.filter.overrides.keys() {
            self.filter.params_for(name).validate().map_err(|e| cfg_err(&format!("{name}: {e}")))?;
        }
        self.tier2_params().validate().map_err(|e| cfg_err(&e))?;
        if !(self.energy.voltage_v > 0.0) {
            return Err(SimError::Config("energy.voltage_v must be positive".into()));
        }
        if self.input.is_none() {
            if VitalsProfile::by_name(&self.synthetic.profile).is_none() {
                return Err(SimError::Config(format!("unknown synthetic profile {:?}", self.synthetic.profile)));
            }
            if self.synthetic.steps == 0 {
                return Err(SimError::Config("synthetic.steps must be positive".into()));
            }
        }
        Ok(())
    }

    /// Checks against the loaded topology.
    pub fn validate_for(&self, topology: &SensorTopology) -> Result<(), SimError> {
        if let Some(name) = self.filter.overrides.keys().find(|n| topology.dimension_by_name(n).is_none()) {
            return Err(SimError::Config(format!("override for unknown attribute {name:?}")));
        }
        if let Some(spec) = self.injection_spec() {
            spec.validate(topology.dimension_count()).map_err(|e| SimError::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn load_dataset(&self) -> Result<Dataset, SimError> {
        match &self.input {
            Some(path) => ingest(path),
            None => {
                let profile = VitalsProfile::by_name(&self.synthetic.profile)
                    .ok_or_else(|| SimError::Config(format!("unknown profile {:?}", self.synthetic.profile)))?;
                let columns = profile.generate(self.synthetic.steps, derive_seed(self.seed, SYNTH_STREAM));
                Dataset::from_dense(&profile.names(), columns)
            }
        }
    }
}

/// Whether the sensor filter runs or every reading is sent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterMode {
    Filtered,
    Baseline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeReport {
    pub name: String,
    pub sensor_id: u16,
    pub attribute_id: u16,
    #[serde(flatten)]
    pub counts: DecisionCounts,
    pub discard_pct: f64,
    pub uninteresting_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorEnergy {
    pub sensor_id: u16,
    pub ledger: EnergyLedger,
    #[serde(flatten)]
    pub report: SavingsReport<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    #[serde(flatten)]
    pub total: SavingsReport<f64>,
    pub ledger: EnergyLedger,
    pub per_sensor: Vec<SensorEnergy>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tier2Report {
    pub vectors: usize,
    pub full_windows: usize,
    pub refreshes: usize,
    pub partial_window: usize,
    pub flagged: usize,
    /// Set when the detector could not run.
    pub diagnostic: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub labelled_steps: usize,
    pub positives: usize,
    pub confusion: ConfusionCounts,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub mode: FilterMode,
    pub seed: u64,
    pub steps: usize,
    pub dimensions: usize,
    pub attributes: Vec<AttributeReport>,
    pub energy: EnergyReport,
    pub tier2: Tier2Report,
    pub detection: Option<DetectionReport>,
    pub alarms: Vec<(u64, u64)>,
    /// Not serialized so that artifacts stay byte-identical across runs.
    #[serde(skip)]
    pub wall_clock_s: f64,
}

impl RunReport {
    pub fn is_partitioned(&self) -> bool {
        self.attributes.iter().all(|a| a.counts.is_partitioned())
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "mode {:?}, seed {}, {} steps x {} dimensions", self.mode, self.seed, self.steps, self.dimensions);
        let _ = writeln!(s, "{:<10} {:>8} {:>8} {:>8} {:>8} {:>9}", "attribute", "total", "sent", "unint", "faulty", "discard%");
        for a in &self.attributes {
            let _ = writeln!(
                s,
                "{:<10} {:>8} {:>8} {:>8} {:>8} {:>9.2}",
                a.name, a.counts.total, a.counts.transmitted, a.counts.discarded_uninteresting,
                a.counts.discarded_faulty, a.discard_pct
            );
        }
        let e = &self.energy.total;
        let _ = writeln!(
            s,
            "energy: baseline {:.6} J, filtered {:.6} J (tx {:.6}, cpu {:.6}, ack {:.6}), saving {:.2}%",
            e.baseline_j, e.total_j, e.transmission_j, e.computation_j, e.ack_j, 100.0 * e.saving_fraction
        );
        let t = &self.tier2;
        let _ = writeln!(
            s,
            "tier-2: {} vectors, {} windows, {} refreshes, {} flagged, {} alarms",
            t.vectors, t.full_windows, t.refreshes, t.flagged, self.alarms.len()
        );
        if let Some(d) = &t.diagnostic {
            let _ = writeln!(s, "tier-2 diagnostic: {d}");
        }
        if let Some(d) = &self.detection {
            let auc = d.auc.map_or("n/a".to_string(), |a| format!("{a:.4}"));
            let _ = writeln!(
                s,
                "detection: precision {:.4}, recall {:.4}, f1 {:.4}, auc {}",
                d.precision, d.recall, d.f1, auc
            );
        }
        s
    }
}

/// Everything a run produced, before it is written to disk.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: RunReport,
    pub scores: Vec<ScoredPoint<f64>>,
    pub decisions: Vec<DecisionRecord>,
    pub reconstructed: Vec<TimeStepVector<f64>>,
    pub labels: Option<Vec<bool>>,
    pub roc: Option<RocCurve>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionRecord {
    pub t: u64,
    pub sensor_id: u16,
    pub attribute_id: u16,
    pub value: f64,
    pub decision: Decision,
}

/// Execute the full pipeline in memory.
pub fn simulate(config: &ExperimentConfig, mode: FilterMode) -> Result<RunOutcome, SimError> {
    config.validate()?;
    let started = Instant::now();
    let mut dataset = config.load_dataset()?;
    config.validate_for(&dataset.topology)?;
    let topology = dataset.topology.clone();
    let k = topology.dimension_count();
    let steps = dataset.steps();

    let injection = config.injection_spec();
    let stage = config.inject.as_ref().map(|i| i.stage).unwrap_or_default();
    let mut labels = None;
    if let (Some(spec), InjectStage::Sensor) = (&injection, stage) {
        let inj = evaluation::inject_anomalies(&dataset.columns, spec)
            .map_err(|e| SimError::Config(e.to_string()))?;
        dataset.columns = inj.columns;
        labels = Some(inj.labels);
    }

    // sensor side
    let mut counts = vec![DecisionCounts::default(); k];
    let mut transmitted: Vec<Vec<(usize, f64)>> = vec![Vec::new(); steps];
    let mut decisions = Vec::new();
    for (d, column) in dataset.columns.iter().enumerate() {
        let name = topology.name(d).expect("dimension in range");
        let params = config.filter.params_for(name);
        let (sensor_id, attribute_id) = topology.ids_of(d).expect("dimension in range");
        let mut state = FilterState::new();
        for (step, value) in column.iter().enumerate() {
            let Some(x) = *value else { continue };
            let decision = match mode {
                FilterMode::Filtered => state.step(&params, x),
                FilterMode::Baseline => Decision::Transmit,
            };
            counts[d].record(decision);
            if decision.is_transmit() {
                transmitted[step].push((d, x));
            }
            if config.outputs.decisions {
                decisions.push(DecisionRecord { t: dataset.times[step], sensor_id, attribute_id, value: x, decision });
            }
        }
    }
    decisions.sort_by_key(|r| (r.t, r.sensor_id, r.attribute_id));

    // gateway reconstruction
    let mut lpu = ReconstructionState::new(k);
    let mut reconstructed = Vec::with_capacity(steps);
    for (step, received) in transmitted.iter().enumerate() {
        let v = lpu
            .reconstruct_step(received, dataset.times[step])
            .expect("filter only emits valid dimensions and finite values");
        reconstructed.extend(v);
    }
    if let (Some(spec), InjectStage::Lpu) = (&injection, stage) {
        let columns: Vec<Vec<Option<f64>>> =
            (0..k).map(|d| reconstructed.iter().map(|v| Some(v.values[d])).collect()).collect();
        let inj = evaluation::inject_anomalies(&columns, spec).map_err(|e| SimError::Config(e.to_string()))?;
        for (i, v) in reconstructed.iter_mut().enumerate() {
            for d in 0..k {
                v.values[d] = inj.columns[d][i].expect("dense");
            }
        }
        // align to the dataset timeline; steps before reconstruction starts are unlabelled
        let mut full = vec![false; steps];
        let offset = steps - reconstructed.len();
        for (i, l) in inj.labels.into_iter().enumerate() {
            full[offset + i] = l;
        }
        labels = Some(full);
    }

    // anomaly detection
    let (scores, summary, diagnostic) = match process_stream(reconstructed.iter().cloned(), config.tier2_params()) {
        Ok((scores, summary)) => (scores, summary, None),
        Err(e @ ForestError::StreamTooShort { received, .. }) => (
            Vec::new(),
            StreamSummary { vectors: received, full_windows: 0, refreshes: 0, partial_window: received },
            Some(e.to_string()),
        ),
        Err(e) => return Err(e.into()),
    };
    let alarms = alarm_intervals(&scores);

    let (detection, roc) = match &labels {
        Some(labels) if !scores.is_empty() => {
            let (d, roc) = detection_metrics(&scores, &dataset.times, labels);
            (Some(d), roc)
        }
        _ => (None, None),
    };

    // energy
    let model = config.energy.model();
    let ack_interval = config.filter.ack_interval_steps.max(1);
    let mut per_sensor = Vec::new();
    let mut total = EnergyLedger::default();
    for s in 1..=topology.sensor_count() as u16 {
        let dims: Vec<usize> = (1..=topology.attribute_count(s).unwrap_or(0) as u16)
            .filter_map(|a| topology.dimension_of(s, a))
            .collect();
        let baseline: u64 = dims.iter().map(|&d| counts[d].total).sum();
        let sent: u64 = dims.iter().map(|&d| counts[d].transmitted).sum();
        let ledger = match mode {
            FilterMode::Filtered => EnergyLedger {
                baseline_points: baseline,
                transmitted_points: sent,
                instructions_executed: model.instructions_for(baseline),
                ack_bytes: steps as u64 / ack_interval,
            },
            FilterMode::Baseline => EnergyLedger {
                baseline_points: baseline,
                transmitted_points: sent,
                instructions_executed: 0,
                ack_bytes: 0,
            },
        };
        total = total.merge(&ledger);
        per_sensor.push(SensorEnergy { sensor_id: s, ledger, report: model.report_for(&ledger) });
    }
    let energy = EnergyReport { total: model.report_for(&total), ledger: total, per_sensor };

    let attributes = counts
        .iter()
        .enumerate()
        .map(|(d, c)| {
            let (sensor_id, attribute_id) = topology.ids_of(d).expect("dimension in range");
            AttributeReport {
                name: topology.name(d).expect("dimension in range").to_string(),
                sensor_id,
                attribute_id,
                counts: *c,
                discard_pct: c.discard_pct(),
                uninteresting_pct: c.uninteresting_pct(),
            }
        })
        .collect();

    let report = RunReport {
        mode,
        seed: config.seed,
        steps,
        dimensions: k,
        attributes,
        energy,
        tier2: Tier2Report {
            vectors: summary.vectors,
            full_windows: summary.full_windows,
            refreshes: summary.refreshes,
            partial_window: summary.partial_window,
            flagged: scores.iter().filter(|p| p.is_anomaly).count(),
            diagnostic,
        },
        detection,
        alarms,
        wall_clock_s: started.elapsed().as_secs_f64(),
    };
    Ok(RunOutcome { report, scores, decisions, reconstructed, labels, roc })
}

/// Point-wise metrics of scored steps against step labels.
pub fn detection_metrics(
    scores: &[ScoredPoint<f64>],
    times: &[u64],
    labels: &[bool],
) -> (DetectionReport, Option<RocCurve>) {
    let label_of = |t: u64| times.binary_search(&t).map(|i| labels[i]).unwrap_or(false);
    let truth: Vec<bool> = scores.iter().map(|p| label_of(p.t)).collect();
    let flags: Vec<bool> = scores.iter().map(|p| p.is_anomaly).collect();
    let values: Vec<f64> = scores.iter().map(|p| p.score).collect();
    let c = confusion(&flags, &truth).expect("equal lengths by construction");
    let prf = precision_recall_f1(&c);
    let roc = roc_auc(&values, &truth).ok();
    let report = DetectionReport {
        labelled_steps: truth.len(),
        positives: truth.iter().filter(|&&l| l).count(),
        confusion: c,
        precision: prf.precision,
        recall: prf.recall,
        f1: prf.f1,
        auc: roc.as_ref().map(|r| r.auc),
    };
    (report, roc)
}

fn write_file(path: &Path, contents: &str) -> Result<(), SimError> {
    fs::write(path, contents).map_err(SimError::io(path))
}

pub fn scores_csv(scores: &[ScoredPoint<f64>]) -> String {
    let mut s = String::from("t,score,is_anomaly\n");
    for p in scores {
        let _ = writeln!(s, "{},{},{}", p.t, p.score, u8::from(p.is_anomaly));
    }
    s
}

pub fn alarms_csv(alarms: &[(u64, u64)]) -> String {
    let mut s = String::from("t_start,t_end\n");
    for (a, b) in alarms {
        let _ = writeln!(s, "{a},{b}");
    }
    s
}

pub fn decisions_csv(records: &[DecisionRecord]) -> String {
    let mut s = String::from("t,sensor_id,attribute_id,value,decision\n");
    for r in records {
        let _ = writeln!(s, "{},{},{},{},{}", r.t, r.sensor_id, r.attribute_id, r.value, r.decision);
    }
    s
}

pub fn reconstructed_csv(vectors: &[TimeStepVector<f64>], k: usize) -> String {
    let mut s = String::from("t");
    for d in 0..k {
        let _ = write!(s, ",dim_{d}");
    }
    s.push_str(",mask_bits\n");
    for v in vectors {
        let _ = write!(s, "{}", v.t);
        for x in &v.values {
            let _ = write!(s, ",{x}");
        }
        let _ = writeln!(s, ",{}", v.received_bits());
    }
    s
}

pub fn roc_csv(roc: &RocCurve) -> String {
    let mut s = String::from("fpr,tpr\n");
    for (x, y) in &roc.points {
        let _ = writeln!(s, "{x},{y}");
    }
    s
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("epsilon,discard_pct,nmse\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{}", r.epsilon, r.discard_pct, r.nmse);
    }
    s
}

fn labels_csv(times: &[u64], labels: &[bool]) -> String {
    let mut s = String::from("t,label\n");
    for (t, l) in times.iter().zip(labels) {
        let _ = writeln!(s, "{t},{}", u8::from(*l));
    }
    s
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

fn ensure_dir(dir: &Path) -> Result<(), SimError> {
    fs::create_dir_all(dir).map_err(SimError::io(dir))
}

/// Write every artifact of `outcome` into `dir`.
pub fn write_outcome(outcome: &RunOutcome, dir: &Path) -> Result<Vec<PathBuf>, SimError> {
    ensure_dir(dir)?;
    let mut files: Vec<(&str, String)> = vec![
        ("report.json", to_json(&outcome.report)),
        ("energy.json", to_json(&outcome.report.energy)),
        ("scores.csv", scores_csv(&outcome.scores)),
        ("scores.json", to_json(&outcome.scores)),
        ("alarms.csv", alarms_csv(&outcome.report.alarms)),
    ];
    if !outcome.decisions.is_empty() {
        files.push(("decisions.csv", decisions_csv(&outcome.decisions)));
    }
    if !outcome.reconstructed.is_empty() {
        files.push(("reconstructed.csv", reconstructed_csv(&outcome.reconstructed, outcome.report.dimensions)));
    }
    if let Some(roc) = &outcome.roc {
        files.push(("roc.csv", roc_csv(roc)));
    }
    let mut written = Vec::new();
    for (name, contents) in files {
        let path = dir.join(name);
        write_file(&path, &contents)?;
        written.push(path);
    }
    Ok(written)
}

fn run_mode(config: &ExperimentConfig, mode: FilterMode) -> Result<RunReport, SimError> {
    let mut outcome = simulate(config, mode)?;
    if !config.outputs.reconstructed {
        outcome.reconstructed.clear();
    }
    write_outcome(&outcome, &config.out)?;
    Ok(outcome.report)
}

/// Filtered pipeline; writes artifacts to `config.out`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunReport, SimError> {
    run_mode(config, FilterMode::Filtered)
}

/// Same pipeline with every reading transmitted.
pub fn baseline_run(config: &ExperimentConfig) -> Result<RunReport, SimError> {
    run_mode(config, FilterMode::Baseline)
}

/// Epsilon trade-off over `grid` (default grid when empty); writes `sweep.csv`.
pub fn sweep_epsilon(config: &ExperimentConfig, grid: &[f64]) -> Result<Vec<SweepRow>, SimError> {
    config.validate()?;
    let dataset = config.load_dataset()?;
    config.validate_for(&dataset.topology)?;
    let grid = if grid.is_empty() { default_epsilon_grid() } else { grid.to_vec() };
    if let Some(e) = grid.iter().find(|e| !(**e >= 0.0)) {
        return Err(SimError::Config(format!("epsilon {e} must be non-negative")));
    }
    let rows = epsilon_sweep(&dataset.columns, &config.filter.base_params(), &grid);
    ensure_dir(&config.out)?;
    write_file(&config.out.join("sweep.csv"), &sweep_csv(&rows))?;
    write_file(&config.out.join("sweep.json"), &to_json(&rows))?;
    Ok(rows)
}

/// Plant anomalies in the input and write `injected.csv` and `labels.csv`.
pub fn inject_only(config: &ExperimentConfig) -> Result<(Dataset, Vec<bool>), SimError> {
    config.validate()?;
    let mut dataset = config.load_dataset()?;
    config.validate_for(&dataset.topology)?;
    let spec = config.injection_spec().unwrap_or(InjectionSpec {
        rng_seed: derive_seed(config.seed, INJECT_STREAM),
        ..InjectionSpec::default()
    });
    let inj = evaluation::inject_anomalies(&dataset.columns, &spec).map_err(|e| SimError::Config(e.to_string()))?;
    dataset.columns = inj.columns;
    ensure_dir(&config.out)?;
    write_file(&config.out.join("injected.csv"), &dataset.to_wide_csv())?;
    write_file(&config.out.join("labels.csv"), &labels_csv(&dataset.times, &inj.labels))?;
    Ok((dataset, inj.labels))
}

/// Load a `report.json` written by an earlier run.
pub fn read_report(path: &Path) -> Result<RunReport, SimError> {
    let text = fs::read_to_string(path).map_err(SimError::io(path))?;
    serde_json::from_str(&text).map_err(|e| SimError::Parse { line: e.line() as u64, column: "json".into(), reason: e.to_string() })
}
