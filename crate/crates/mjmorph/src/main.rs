//! Command-line interface: parse/transform single files, check equivalence,
//! build baseline indexes, query endpoints, and run full campaigns.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mjmorph::campaign::{self, CampaignConfig, ReportFormat};
use mjmorph::interp::{self, EquivalenceVerdict};
use mjmorph::models::{self, FeatureMode, ModelEndpoint, DEFAULT_TIMEOUT_MS, DEFAULT_TOPK};
use mjmorph::oracle::{OraclePolicy, Relation};
use mjmorph::scope;
use mjmorph::syntax::{parse_source, print};
use mjmorph::transforms::{self, TransformKind};

#[derive(Parser)]
#[command(name = "mjmorph", version, about = "Metamorphic testing for method-name predictors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a file and print its canonical form.
    Parse { file: PathBuf },
    /// Apply one transformation and print the transformed source.
    Transform {
        file: PathBuf,
        /// rename-variable | exchange-loop | swap-boolean | convert-switch |
        /// permute-statements
        #[arg(long)]
        kind: TransformKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Which enumerated site to apply (in enumeration order).
        #[arg(long, default_value_t = 0)]
        site: usize,
    },
    /// Differentially check that two files agree on a method.
    ///
    /// Exits 0 on equivalent, 2 on divergent (witness printed as JSON),
    /// 3 on inconclusive.
    CheckEquiv {
        #[arg(long)]
        original: PathBuf,
        #[arg(long)]
        variant: PathBuf,
        #[arg(long)]
        method: String,
        #[arg(long, default_value_t = 64)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100_000)]
        fuel: u64,
    },
    /// Build a baseline index over a corpus directory.
    Index {
        dir: PathBuf,
        #[arg(long)]
        mode: FeatureMode,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Query an endpoint with one method and print the prediction as JSON.
    Predict {
        file: PathBuf,
        /// builtin-token:PATH | builtin-structure:PATH | cmd:"..." | http://...
        #[arg(long)]
        endpoint: String,
        #[arg(long, default_value_t = DEFAULT_TOPK)]
        topk: usize,
        #[arg(long, default_value_t = DEFAULT_TIMEOUT_MS)]
        timeout_ms: u64,
    },
    /// Run the full pipeline over a corpus and emit a report.
    ///
    /// Exits 0 when every judged case is consistent, 1 when at least one is
    /// inconsistent, 4 on a fatal configuration error.
    Campaign {
        /// Load the whole configuration from a JSON file instead of flags.
        #[arg(long, conflicts_with_all = ["corpus", "endpoint"])]
        config: Option<PathBuf>,
        #[arg(long, required_unless_present = "config")]
        corpus: Option<PathBuf>,
        #[arg(long, required_unless_present = "config")]
        endpoint: Option<String>,
        /// Transformation kinds to run (default: all five).
        #[arg(long, value_delimiter = ',')]
        kinds: Vec<TransformKind>,
        #[arg(long, default_value_t = 2)]
        max_per_kind: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 64)]
        trials: usize,
        #[arg(long, default_value_t = 100_000)]
        fuel: u64,
        /// top1 | jaccard | score-drop
        #[arg(long, default_value = "top1")]
        relation: Relation,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long, default_value_t = 0.5)]
        tau: f64,
        #[arg(long, default_value_t = 0.3)]
        delta: f64,
        #[arg(long, default_value_t = DEFAULT_TOPK)]
        topk: usize,
        #[arg(long, default_value_t = DEFAULT_TIMEOUT_MS)]
        timeout_ms: u64,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Judge variants even when equivalence was not proven.
        #[arg(long)]
        no_require_equivalence: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "json")]
        format: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<ExitCode, Box<dyn std::error::Error>> {
    match command {
        Command::Parse { file } => {
            let source = fs::read_to_string(&file)?;
            let unit = parse_source(&source)?;
            print!("{}", print(&unit));
            Ok(ExitCode::SUCCESS)
        }
        Command::Transform {
            file,
            kind,
            seed,
            site,
        } => {
            let source = fs::read_to_string(&file)?;
            let unit = parse_source(&source)?;
            let table = scope::resolve(&unit)?;
            let sites = transforms::enumerate_sites(&unit, &table, kind);
            if sites.is_empty() {
                return Err(format!("no {kind} sites in {}", file.display()).into());
            }
            let Some(chosen) = sites.get(site) else {
                return Err(format!(
                    "site index {site} out of range: {kind} has {} site(s) in {}",
                    sites.len(),
                    file.display()
                )
                .into());
            };
            let transformed = transforms::apply(&unit, chosen, seed)?;
            print!("{}", print(&transformed));
            Ok(ExitCode::SUCCESS)
        }
        Command::CheckEquiv {
            original,
            variant,
            method,
            trials,
            seed,
            fuel,
        } => {
            let original_unit = parse_source(&fs::read_to_string(&original)?)?;
            let variant_unit = parse_source(&fs::read_to_string(&variant)?)?;
            let verdict =
                interp::check_equivalence(&original_unit, &variant_unit, &method, trials, seed, fuel)?;
            match verdict {
                EquivalenceVerdict::Equivalent => {
                    println!("equivalent ({trials} trials)");
                    Ok(ExitCode::SUCCESS)
                }
                EquivalenceVerdict::Divergent(witness) => {
                    println!("{}", serde_json::to_string_pretty(&witness)?);
                    eprintln!("divergent: `{method}` differs on the printed witness input");
                    Ok(ExitCode::from(2))
                }
                EquivalenceVerdict::Inconclusive(count) => {
                    eprintln!(
                        "inconclusive: {count} of {trials} trials exhausted the fuel budget"
                    );
                    Ok(ExitCode::from(3))
                }
            }
        }
        Command::Index { dir, mode, out } => {
            let mut files: Vec<PathBuf> = walkdir::WalkDir::new(&dir)
                .into_iter()
                .filter_map(Result::ok)
                .filter(|e| e.file_type().is_file())
                .map(|e| e.into_path())
                .filter(|p| p.extension().is_some_and(|ext| ext == "java"))
                .collect();
            files.sort();
            if files.is_empty() {
                return Err(format!("no .java files under {}", dir.display()).into());
            }
            let index = models::build_index(&files, mode)?;
            index.save(&out)?;
            eprintln!(
                "indexed {} methods from {} files into {}",
                index.len(),
                files.len(),
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Predict {
            file,
            endpoint,
            topk,
            timeout_ms,
        } => {
            let config = ModelEndpoint::parse_spec(&endpoint, topk, timeout_ms)?;
            let source = fs::read_to_string(&file)?;
            let prediction = models::predict(&config, &source)?;
            println!("{}", serde_json::to_string_pretty(&prediction)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Campaign {
            config,
            corpus,
            endpoint,
            kinds,
            max_per_kind,
            seed,
            trials,
            fuel,
            relation,
            k,
            tau,
            delta,
            topk,
            timeout_ms,
            jobs,
            no_require_equivalence,
            out,
            format,
        } => {
            let format: ReportFormat = match format.parse() {
                Ok(f) => f,
                Err(e) => return fatal_config(e),
            };
            let campaign_config = if let Some(path) = config {
                let text = match fs::read_to_string(&path) {
                    Ok(t) => t,
                    Err(e) => return fatal_config(format!("{}: {e}", path.display())),
                };
                match serde_json::from_str::<CampaignConfig>(&text) {
                    Ok(c) => c,
                    Err(e) => return fatal_config(format!("{}: {e}", path.display())),
                }
            } else {
                let spec = endpoint.expect("clap enforces endpoint without --config");
                let endpoint = match ModelEndpoint::parse_spec(&spec, topk, timeout_ms) {
                    Ok(e) => e,
                    Err(e) => return fatal_config(e),
                };
                CampaignConfig {
                    corpus: corpus.expect("clap enforces corpus without --config"),
                    endpoint,
                    kinds: if kinds.is_empty() {
                        TransformKind::ALL.to_vec()
                    } else {
                        kinds
                    },
                    max_per_kind,
                    seed,
                    trials,
                    fuel,
                    policy: OraclePolicy {
                        relation,
                        k,
                        tau,
                        delta,
                    },
                    parallelism: jobs,
                    output: out.clone(),
                    require_equivalence: !no_require_equivalence,
                }
            };
            let report = match campaign::run(&campaign_config) {
                Ok(r) => r,
                Err(e) => return fatal_config(e.to_string()),
            };
            let bytes = campaign::emit_report(&report, format);
            match campaign_config.output.as_ref().or(out.as_ref()) {
                Some(path) => fs::write(path, &bytes)?,
                None => {
                    use std::io::Write;
                    std::io::stdout().write_all(&bytes)?;
                }
            }
            if report.has_inconsistencies() {
                Ok(ExitCode::from(1))
            } else {
                Ok(ExitCode::SUCCESS)
            }
        }
    }
}

fn fatal_config(message: impl std::fmt::Display) -> Result<ExitCode, Box<dyn std::error::Error>> {
    eprintln!("error: {message}");
    Ok(ExitCode::from(4))
}
