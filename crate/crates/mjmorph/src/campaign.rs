//! End-to-end campaign orchestration: ingest a corpus, plan transformations,
//! verify equivalence, query the model with original and variant, judge
//! consistency, and aggregate a report.
//!
//! With a fixed seed and a builtin endpoint the whole campaign is
//! deterministic down to the report bytes. Per-case failures (parse errors,
//! model errors) are recorded rows, never crashes; only an empty corpus or
//! an unreachable endpoint is fatal.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interp::{self, EquivalenceVerdict, Trial};
use crate::models::{Endpoint, ModelEndpoint, ModelUnavailable, Prediction};
use crate::oracle::{self, MetamorphicVerdict, OraclePolicy, VerdictStatus};
use crate::scope;
use crate::syntax::{parse_source, print_method, CompilationUnit};
use crate::transforms::{plan, PlanConfig, PlannedVariant, TransformKind};

fn default_kinds() -> Vec<TransformKind> {
    TransformKind::ALL.to_vec()
}
fn default_max_per_kind() -> usize {
    2
}
fn default_trials() -> usize {
    64
}
fn default_fuel() -> u64 {
    100_000
}
fn default_parallelism() -> usize {
    1
}
fn default_require_equivalence() -> bool {
    true
}

/// Everything a campaign run needs; also the config-file schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CampaignConfig {
    pub corpus: PathBuf,
    pub endpoint: ModelEndpoint,
    #[serde(default = "default_kinds")]
    pub kinds: Vec<TransformKind>,
    #[serde(default = "default_max_per_kind")]
    pub max_per_kind: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_fuel")]
    pub fuel: u64,
    #[serde(default)]
    pub policy: OraclePolicy,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default = "default_require_equivalence")]
    pub require_equivalence: bool,
}

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error("corpus at {0} contains no parseable `.java` files")]
    EmptyCorpus(PathBuf),
    #[error("cannot reach endpoint: {0}")]
    Endpoint(#[from] ModelUnavailable),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// One parsed corpus file.
#[derive(Debug, Clone)]
pub struct CorpusFile {
    pub path: PathBuf,
    pub unit: CompilationUnit,
}

/// A file the corpus skipped, with the reason.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusFailure {
    pub path: String,
    pub error: String,
}

/// Ingested corpus: parsed units in sorted path order plus skipped files.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub files: Vec<CorpusFile>,
    pub failures: Vec<CorpusFailure>,
}

impl Corpus {
    pub fn method_count(&self) -> usize {
        self.files.iter().map(|f| f.unit.methods.len()).sum()
    }
}

/// Recursively discovers `.java` files under `dir` (sorted by path), parsing
/// each one. Parse failures are collected, not fatal; a corpus with zero
/// parseable units is.
pub fn ingest(dir: &Path) -> Result<Corpus, CampaignError> {
    let mut paths: Vec<PathBuf> = walkdir::WalkDir::new(dir)
        .sort_by_file_name()
        .into_iter()
        .filter_map(Result::ok)
        .filter(|e| e.file_type().is_file())
        .map(|e| e.into_path())
        .filter(|p| p.extension().is_some_and(|ext| ext == "java"))
        .collect();
    paths.sort();

    let mut files = Vec::new();
    let mut failures = Vec::new();
    for path in paths {
        let source = match fs::read_to_string(&path) {
            Ok(s) => s,
            Err(e) => {
                failures.push(CorpusFailure {
                    path: path.display().to_string(),
                    error: e.to_string(),
                });
                continue;
            }
        };
        match parse_source(&source) {
            Ok(unit) => files.push(CorpusFile { path, unit }),
            Err(e) => failures.push(CorpusFailure {
                path: path.display().to_string(),
                error: e.to_string(),
            }),
        }
    }
    if files.is_empty() {
        return Err(CampaignError::EmptyCorpus(dir.to_path_buf()));
    }
    Ok(Corpus { files, failures })
}

/// Equivalence verdict in report form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum EquivalenceSummary {
    Equivalent,
    Divergent { witness: Trial },
    Inconclusive { fuel_exhausted_trials: usize },
}

impl From<EquivalenceVerdict> for EquivalenceSummary {
    fn from(v: EquivalenceVerdict) -> Self {
        match v {
            EquivalenceVerdict::Equivalent => EquivalenceSummary::Equivalent,
            EquivalenceVerdict::Divergent(witness) => EquivalenceSummary::Divergent { witness },
            EquivalenceVerdict::Inconclusive(n) => EquivalenceSummary::Inconclusive {
                fuel_exhausted_trials: n,
            },
        }
    }
}

/// Counter block, per kind and in total. `generated` always equals
/// `consistent + inconsistent + model_errors + skipped_inequivalent`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct KindStats {
    pub sites_found: usize,
    pub generated: usize,
    pub equivalent: usize,
    pub divergent: usize,
    pub inconclusive: usize,
    pub skipped_inequivalent: usize,
    pub consistent: usize,
    pub inconsistent: usize,
    pub model_errors: usize,
    /// `inconsistent / (consistent + inconsistent)`, 0 when nothing was
    /// judged.
    pub inconsistency_rate: f64,
}

impl KindStats {
    fn finish(&mut self) {
        let judged = self.consistent + self.inconsistent;
        self.inconsistency_rate = if judged == 0 {
            0.0
        } else {
            self.inconsistent as f64 / judged as f64
        };
    }

    fn absorb(&mut self, other: &KindStats) {
        self.sites_found += other.sites_found;
        self.generated += other.generated;
        self.equivalent += other.equivalent;
        self.divergent += other.divergent;
        self.inconclusive += other.inconclusive;
        self.skipped_inequivalent += other.skipped_inequivalent;
        self.consistent += other.consistent;
        self.inconsistent += other.inconsistent;
        self.model_errors += other.model_errors;
    }
}

/// Full evidence for one inconsistent case: both sources, both predictions,
/// the transformation record, and the equivalence verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InconsistentCase {
    pub file: String,
    pub method: String,
    pub equivalence: EquivalenceSummary,
    pub original_source: String,
    pub variant_source: String,
    pub verdict: MetamorphicVerdict,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

/// Corpus-level counters for the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CorpusSummary {
    pub files: usize,
    pub methods: usize,
    pub skipped_files: Vec<CorpusFailure>,
}

/// Aggregate robustness statistics and failure evidence for one campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CampaignReport {
    pub tool: ToolInfo,
    pub config: CampaignConfig,
    pub corpus: CorpusSummary,
    pub per_kind: BTreeMap<TransformKind, KindStats>,
    pub totals: KindStats,
    pub inconsistent_cases: Vec<InconsistentCase>,
}

impl CampaignReport {
    pub fn has_inconsistencies(&self) -> bool {
        !self.inconsistent_cases.is_empty()
    }
}

struct WorkItem {
    file: String,
    variant: PlannedVariant,
    original_unit: CompilationUnit,
}

struct CaseResult {
    file: String,
    kind: TransformKind,
    equivalence: EquivalenceSummary,
    skipped: bool,
    verdict: Option<MetamorphicVerdict>,
    original_source: String,
    variant_source: String,
    method: String,
}

/// Runs the whole pipeline and assembles the report.
pub fn run(config: &CampaignConfig) -> Result<CampaignReport, CampaignError> {
    let corpus = ingest(&config.corpus)?;
    let endpoint = Endpoint::connect(&config.endpoint)?;

    let mut failures = corpus.failures.clone();
    let mut sites_found: BTreeMap<TransformKind, usize> = BTreeMap::new();
    let mut items: Vec<WorkItem> = Vec::new();

    for file in &corpus.files {
        let table = match scope::resolve(&file.unit) {
            Ok(t) => t,
            Err(e) => {
                failures.push(CorpusFailure {
                    path: file.path.display().to_string(),
                    error: e.to_string(),
                });
                continue;
            }
        };
        for kind in &config.kinds {
            let count = crate::transforms::enumerate_sites(&file.unit, &table, *kind).len();
            *sites_found.entry(*kind).or_insert(0) += count;
        }
        let plan_config = PlanConfig {
            kinds: config.kinds.clone(),
            max_per_kind: config.max_per_kind,
            seed: config.seed,
        };
        for variant in plan(&file.unit, &table, &plan_config) {
            items.push(WorkItem {
                file: file.path.display().to_string(),
                variant,
                original_unit: file.unit.clone(),
            });
        }
    }

    // Original predictions are queried once per method and shared across
    // that method's variants (deterministic, endpoint-friendly).
    let mut original_predictions: BTreeMap<(String, String), Result<Prediction, ModelUnavailable>> =
        BTreeMap::new();
    for item in &items {
        let method_name = item.variant.record.method.clone();
        let key = (item.file.clone(), method_name.clone());
        original_predictions.entry(key).or_insert_with(|| {
            let method = item
                .original_unit
                .method(&method_name)
                .expect("planned site names a method of its unit");
            endpoint.predict(&print_method(method))
        });
    }

    let process = |item: &WorkItem| -> CaseResult {
        let record = &item.variant.record;
        let method_name = record.method.clone();
        let original_method = item
            .original_unit
            .method(&method_name)
            .expect("planned site names a method of its unit");
        let variant_method = item
            .variant
            .unit
            .method(&method_name)
            .expect("transformations preserve method names");
        let original_source = print_method(original_method);
        let variant_source = print_method(variant_method);

        let equivalence: EquivalenceSummary = interp::check_equivalence(
            &item.original_unit,
            &item.variant.unit,
            &method_name,
            config.trials,
            config.seed,
            config.fuel,
        )
        .expect("variant signatures match the original by construction")
        .into();

        if config.require_equivalence && equivalence != EquivalenceSummary::Equivalent {
            return CaseResult {
                file: item.file.clone(),
                kind: record.kind,
                equivalence,
                skipped: true,
                verdict: None,
                original_source,
                variant_source,
                method: method_name,
            };
        }

        let original_prediction = original_predictions
            .get(&(item.file.clone(), method_name.clone()))
            .expect("original predictions are precomputed")
            .clone();
        let variant_prediction = endpoint.predict(&variant_source);
        let verdict = oracle::judge(
            &original_prediction,
            &variant_prediction,
            &config.policy,
            record.clone(),
        );
        CaseResult {
            file: item.file.clone(),
            kind: record.kind,
            equivalence,
            skipped: false,
            verdict: Some(verdict),
            original_source,
            variant_source,
            method: method_name,
        }
    };

    let results: Vec<CaseResult> = if config.parallelism > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.parallelism)
            .stack_size(8 * 1024 * 1024)
            .build()
            .expect("worker pool construction");
        pool.install(|| items.par_iter().map(process).collect())
    } else {
        items.iter().map(process).collect()
    };

    let mut per_kind: BTreeMap<TransformKind, KindStats> = config
        .kinds
        .iter()
        .map(|k| {
            let mut stats = KindStats::default();
            stats.sites_found = sites_found.get(k).copied().unwrap_or(0);
            (*k, stats)
        })
        .collect();
    let mut inconsistent_cases = Vec::new();

    for result in results {
        let stats = per_kind.entry(result.kind).or_default();
        stats.generated += 1;
        match &result.equivalence {
            EquivalenceSummary::Equivalent => stats.equivalent += 1,
            EquivalenceSummary::Divergent { .. } => stats.divergent += 1,
            EquivalenceSummary::Inconclusive { .. } => stats.inconclusive += 1,
        }
        if result.skipped {
            stats.skipped_inequivalent += 1;
            continue;
        }
        match result.verdict.as_ref().map(|v| v.status) {
            Some(VerdictStatus::Consistent) => stats.consistent += 1,
            Some(VerdictStatus::Inconsistent) => {
                stats.inconsistent += 1;
                inconsistent_cases.push(InconsistentCase {
                    file: result.file,
                    method: result.method,
                    equivalence: result.equivalence,
                    original_source: result.original_source,
                    variant_source: result.variant_source,
                    verdict: result.verdict.expect("judged case carries a verdict"),
                });
            }
            Some(VerdictStatus::ModelError) => stats.model_errors += 1,
            None => {}
        }
    }

    let mut totals = KindStats::default();
    for stats in per_kind.values_mut() {
        stats.finish();
        totals.absorb(stats);
    }
    totals.finish();

    inconsistent_cases.sort_by(|a, b| {
        (&a.file, &a.method, a.verdict.record.kind, &a.verdict.record.node_path).cmp(&(
            &b.file,
            &b.method,
            b.verdict.record.kind,
            &b.verdict.record.node_path,
        ))
    });

    Ok(CampaignReport {
        tool: ToolInfo {
            name: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        },
        config: config.clone(),
        corpus: CorpusSummary {
            files: corpus.files.len(),
            methods: corpus.method_count(),
            skipped_files: failures,
        },
        per_kind,
        totals,
        inconsistent_cases,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Text,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "text" => Ok(ReportFormat::Text),
            other => Err(format!("unknown format `{other}` (json|csv|text)")),
        }
    }
}

/// Renders the report. JSON is the complete lossless form; CSV is the
/// per-kind summary table; text is a short human summary.
pub fn emit_report(report: &CampaignReport, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Json => {
            let mut bytes =
                serde_json::to_vec_pretty(report).expect("report serialization is total");
            bytes.push(b'\n');
            bytes
        }
        ReportFormat::Csv => {
            let mut out = String::from(
                "kind,sitesFound,generated,equivalent,divergent,inconclusive,\
                 skippedInequivalent,consistent,inconsistent,modelErrors,inconsistencyRate\n",
            );
            for (kind, s) in &report.per_kind {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{}\n",
                    kind,
                    s.sites_found,
                    s.generated,
                    s.equivalent,
                    s.divergent,
                    s.inconclusive,
                    s.skipped_inequivalent,
                    s.consistent,
                    s.inconsistent,
                    s.model_errors,
                    s.inconsistency_rate
                ));
            }
            out.into_bytes()
        }
        ReportFormat::Text => {
            let mut out = String::new();
            out.push_str(&format!(
                "{} {} campaign over {} ({} files, {} methods)\n",
                report.tool.name,
                report.tool.version,
                report.config.corpus.display(),
                report.corpus.files,
                report.corpus.methods,
            ));
            out.push_str(&format!(
                "endpoint {} | relation {} | seed {}\n\n",
                report.config.endpoint, report.config.policy.relation, report.config.seed,
            ));
            for (kind, s) in &report.per_kind {
                out.push_str(&format!(
                    "{kind}: {} sites, {} variants, {} consistent, {} inconsistent, \
                     {} model errors, {} skipped (rate {:.4})\n",
                    s.sites_found,
                    s.generated,
                    s.consistent,
                    s.inconsistent,
                    s.model_errors,
                    s.skipped_inequivalent,
                    s.inconsistency_rate,
                ));
            }
            out.push_str(&format!(
                "\ntotal: {} variants, {} inconsistent (rate {:.4})\n",
                report.totals.generated,
                report.totals.inconsistent,
                report.totals.inconsistency_rate,
            ));
            for case in &report.inconsistent_cases {
                out.push_str(&format!(
                    "inconsistent: {} {} [{}] {} -> {}\n",
                    case.file,
                    case.method,
                    case.verdict.record.kind,
                    case.verdict
                        .original
                        .as_ref()
                        .map_or("?", |p| p.top1()),
                    case.verdict.variant.as_ref().map_or("?", |p| p.top1()),
                ));
            }
            out.into_bytes()
        }
    }
}
