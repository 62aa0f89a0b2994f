//! Two deterministic nearest-neighbor baselines over tf-idf method features.
//!
//! Token mode features a method by its identifier subtokens plus keyword and
//! operator tokens, so renaming variables changes the vector. Structure mode
//! features node-kind trigrams of the AST with every identifier collapsed to
//! one placeholder, so it is exactly invariant under variable renaming.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Prediction;
use crate::syntax::ast::*;
use crate::syntax::lexer::{tokenize, TokenCategory};
use crate::syntax::{parse_source, print_method};

/// How a method becomes a feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureMode {
    Token,
    Structure,
}

impl std::fmt::Display for FeatureMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FeatureMode::Token => f.write_str("token"),
            FeatureMode::Structure => f.write_str("structure"),
        }
    }
}

impl std::str::FromStr for FeatureMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "token" => Ok(FeatureMode::Token),
            "structure" => Ok(FeatureMode::Structure),
            other => Err(format!("unknown feature mode `{other}` (token|structure)")),
        }
    }
}

/// Raw term counts of one method.
pub type FeatureCounts = BTreeMap<String, u32>;

/// Splits an identifier on underscores and camel-case boundaries,
/// lowercasing each piece: `maxValue` and `max_value` both yield
/// `[max, value]`, `HTTPServer` yields `[http, server]`.
pub fn split_subtokens(ident: &str) -> Vec<String> {
    let mut parts = Vec::new();
    for word in ident.split('_').filter(|w| !w.is_empty()) {
        let chars: Vec<char> = word.chars().collect();
        let mut start = 0;
        for i in 1..chars.len() {
            let prev = chars[i - 1];
            let cur = chars[i];
            let next_lower = chars.get(i + 1).is_some_and(|c| c.is_lowercase());
            let boundary = (prev.is_lowercase() || prev.is_ascii_digit()) && cur.is_uppercase()
                || prev.is_uppercase() && cur.is_uppercase() && next_lower;
            if boundary {
                parts.push(chars[start..i].iter().collect::<String>().to_lowercase());
                start = i;
            }
        }
        parts.push(chars[start..].iter().collect::<String>().to_lowercase());
    }
    parts
}

/// The label a method contributes: its name as `|`-joined subtokens.
pub fn label_of(method_name: &str) -> String {
    split_subtokens(method_name).join("|")
}

/// Token-mode features: identifier subtokens (declaration name excluded)
/// plus keyword and operator token texts.
fn token_features(method: &MethodDecl) -> FeatureCounts {
    let source = print_method(method);
    let tokens = tokenize(&source).expect("printed source always lexes");
    let mut counts = FeatureCounts::new();
    let mut name_skipped = false;
    for tok in &tokens {
        match tok.kind.category() {
            TokenCategory::Identifier => {
                // The first identifier is the method's own name (the label);
                // it contributes nothing.
                if !name_skipped && tok.text == method.name {
                    name_skipped = true;
                    continue;
                }
                for sub in split_subtokens(&tok.text) {
                    *counts.entry(sub).or_insert(0) += 1;
                }
            }
            TokenCategory::Keyword | TokenCategory::Operator => {
                *counts.entry(tok.text.clone()).or_insert(0) += 1;
            }
            _ => {}
        }
    }
    counts
}

/// Structure-mode features: trigrams over the pre-order node-kind sequence,
/// identifiers replaced by a single placeholder kind.
fn structure_features(method: &MethodDecl) -> FeatureCounts {
    let mut seq = vec![format!("method:{}", method.return_type.keyword())];
    for p in &method.params {
        seq.push(format!("param:{}", p.ty.keyword()));
    }
    block_kinds(&method.body, &mut seq);

    let mut padded = Vec::with_capacity(seq.len() + 2);
    padded.push("^".to_string());
    padded.extend(seq);
    padded.push("$".to_string());

    let mut counts = FeatureCounts::new();
    for window in padded.windows(3) {
        let gram = format!("{}>{}>{}", window[0], window[1], window[2]);
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

fn block_kinds(block: &Block, out: &mut Vec<String>) {
    out.push("block".to_string());
    for s in &block.stmts {
        stmt_kinds(s, out);
    }
}

fn stmt_kinds(stmt: &Stmt, out: &mut Vec<String>) {
    match stmt {
        Stmt::VarDecl { ty, init, .. } => {
            out.push(format!("var-decl:{}", ty.keyword()));
            if let Some(e) = init {
                expr_kinds(e, out);
            }
        }
        Stmt::Expr { expr, .. } => {
            out.push("expr-stmt".to_string());
            expr_kinds(expr, out);
        }
        Stmt::If {
            cond,
            then_block,
            else_block,
            ..
        } => {
            out.push("if".to_string());
            expr_kinds(cond, out);
            block_kinds(then_block, out);
            if let Some(b) = else_block {
                out.push("else".to_string());
                block_kinds(b, out);
            }
        }
        Stmt::While { cond, body, .. } => {
            out.push("while".to_string());
            expr_kinds(cond, out);
            block_kinds(body, out);
        }
        Stmt::For {
            init,
            cond,
            update,
            body,
            ..
        } => {
            out.push("for".to_string());
            match init {
                Some(ForInit::Decl { ty, init, .. }) => {
                    out.push(format!("var-decl:{}", ty.keyword()));
                    if let Some(e) = init {
                        expr_kinds(e, out);
                    }
                }
                Some(ForInit::Expr { expr, .. }) => expr_kinds(expr, out),
                None => {}
            }
            if let Some(e) = cond {
                expr_kinds(e, out);
            }
            if let Some(e) = update {
                expr_kinds(e, out);
            }
            block_kinds(body, out);
        }
        Stmt::Switch {
            scrutinee,
            cases,
            default,
            ..
        } => {
            out.push("switch".to_string());
            expr_kinds(scrutinee, out);
            for c in cases {
                out.push("case".to_string());
                for s in &c.body {
                    stmt_kinds(s, out);
                }
            }
            if let Some(d) = default {
                out.push("default".to_string());
                for s in d {
                    stmt_kinds(s, out);
                }
            }
        }
        Stmt::Return { value, .. } => {
            out.push("return".to_string());
            if let Some(e) = value {
                expr_kinds(e, out);
            }
        }
        Stmt::Break { .. } => out.push("break".to_string()),
        Stmt::Continue { .. } => out.push("continue".to_string()),
        Stmt::Block(b) => block_kinds(b, out),
    }
}

fn expr_kinds(expr: &Expr, out: &mut Vec<String>) {
    match expr {
        Expr::IntLit { .. } => out.push("int-lit".to_string()),
        Expr::BoolLit { .. } => out.push("bool-lit".to_string()),
        // Every identifier collapses to the same placeholder.
        Expr::Var { .. } => out.push("var".to_string()),
        Expr::Unary { op, operand, .. } => {
            out.push(format!("unary:{}", op.symbol()));
            expr_kinds(operand, out);
        }
        Expr::Binary { op, lhs, rhs, .. } => {
            out.push(format!("binary:{}", op.symbol()));
            expr_kinds(lhs, out);
            expr_kinds(rhs, out);
        }
        Expr::Assign {
            op, target, value, ..
        } => {
            out.push(format!("assign:{}", op.symbol()));
            expr_kinds(target, out);
            expr_kinds(value, out);
        }
        Expr::IncDec {
            op, target, prefix, ..
        } => {
            out.push(format!(
                "incdec:{}:{}",
                op.symbol(),
                if *prefix { "pre" } else { "post" }
            ));
            expr_kinds(target, out);
        }
        Expr::Call { args, .. } => {
            out.push(format!("call:{}", args.len()));
            for a in args {
                expr_kinds(a, out);
            }
        }
    }
}

/// Feature counts of one method under `mode`.
pub fn method_features(method: &MethodDecl, mode: FeatureMode) -> FeatureCounts {
    match mode {
        FeatureMode::Token => token_features(method),
        FeatureMode::Structure => structure_features(method),
    }
}

/// One indexed method.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub label: String,
    pub features: FeatureCounts,
}

/// Serialized index layout (version-checked on load).
#[derive(Debug, Clone, Serialize, Deserialize)]
struct IndexFile {
    version: u32,
    mode: FeatureMode,
    entries: Vec<IndexEntry>,
}

const INDEX_VERSION: u32 = 1;

/// A nearest-neighbor index over a training corpus: entries plus the
/// inverse-document-frequency weights derived from them.
#[derive(Debug, Clone)]
pub struct BaselineIndex {
    mode: FeatureMode,
    entries: Vec<IndexEntry>,
    idf: BTreeMap<String, f64>,
}

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("{path}: {message}")]
    Unparsable { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: not a valid index file: {message}")]
    Format { path: PathBuf, message: String },
    #[error("{path}: index version {found} is not supported (expected {expected})")]
    Version {
        path: PathBuf,
        found: u32,
        expected: u32,
    },
}

impl BaselineIndex {
    pub fn mode(&self) -> FeatureMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[IndexEntry] {
        &self.entries
    }

    fn from_entries(mode: FeatureMode, entries: Vec<IndexEntry>) -> BaselineIndex {
        let n = entries.len() as f64;
        let mut df: BTreeMap<String, u32> = BTreeMap::new();
        for entry in &entries {
            for feature in entry.features.keys() {
                *df.entry(feature.clone()).or_insert(0) += 1;
            }
        }
        // Smoothed idf; unseen query features get df = 0 through `idf_of`.
        let idf = df
            .into_iter()
            .map(|(f, d)| (f, ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0))
            .collect();
        BaselineIndex { mode, entries, idf }
    }

    fn idf_of(&self, feature: &str) -> f64 {
        let n = self.entries.len() as f64;
        self.idf
            .get(feature)
            .copied()
            .unwrap_or_else(|| ((1.0 + n) / 1.0).ln() + 1.0)
    }

    fn weighted<'a>(&self, counts: &'a FeatureCounts) -> BTreeMap<&'a str, f64> {
        counts
            .iter()
            .map(|(f, c)| (f.as_str(), *c as f64 * self.idf_of(f)))
            .collect()
    }

    fn cosine(&self, a: &FeatureCounts, b: &FeatureCounts) -> f64 {
        let wa = self.weighted(a);
        let wb = self.weighted(b);
        let dot: f64 = wa
            .iter()
            .filter_map(|(f, x)| wb.get(f).map(|y| x * y))
            .sum();
        let na: f64 = wa.values().map(|x| x * x).sum::<f64>().sqrt();
        let nb: f64 = wb.values().map(|x| x * x).sum::<f64>().sqrt();
        if na == 0.0 || nb == 0.0 {
            0.0
        } else {
            dot / (na * nb)
        }
    }

    /// The serialized form carries only raw counts, so bytes are identical
    /// across runs for the same corpus.
    pub fn save(&self, path: &Path) -> Result<(), IndexError> {
        let file = IndexFile {
            version: INDEX_VERSION,
            mode: self.mode,
            entries: self.entries.clone(),
        };
        let mut bytes = serde_json::to_vec_pretty(&file).expect("index serialization is total");
        bytes.push(b'\n');
        fs::write(path, bytes).map_err(|source| IndexError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<BaselineIndex, IndexError> {
        let bytes = fs::read(path).map_err(|source| IndexError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let file: IndexFile =
            serde_json::from_slice(&bytes).map_err(|e| IndexError::Format {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
        if file.version != INDEX_VERSION {
            return Err(IndexError::Version {
                path: path.to_path_buf(),
                found: file.version,
                expected: INDEX_VERSION,
            });
        }
        Ok(BaselineIndex::from_entries(file.mode, file.entries))
    }
}

/// Builds an index from corpus files: every method becomes one entry labeled
/// by its own name (the name itself contributes no features). Files are
/// processed in sorted order; any unparsable file is an error.
pub fn build_index(corpus: &[PathBuf], mode: FeatureMode) -> Result<BaselineIndex, IndexError> {
    let mut files: Vec<&PathBuf> = corpus.iter().collect();
    files.sort();
    let mut entries = Vec::new();
    for path in files {
        let source = fs::read_to_string(path).map_err(|source| IndexError::Io {
            path: path.clone(),
            source,
        })?;
        let unit = parse_source(&source).map_err(|e| IndexError::Unparsable {
            path: path.clone(),
            message: e.to_string(),
        })?;
        for method in &unit.methods {
            entries.push(IndexEntry {
                label: label_of(&method.name),
                features: method_features(method, mode),
            });
        }
    }
    Ok(BaselineIndex::from_entries(mode, entries))
}

#[derive(Debug, Error)]
pub enum BaselinePredictError {
    #[error("index is empty")]
    EmptyIndex,
    #[error("every index entry is the query's own entry")]
    NoCandidates,
    #[error("query does not parse as a method: {0}")]
    Parse(String),
}

/// Ranks index labels by cosine similarity to the query method's feature
/// vector. The query's own training entry (same label, identical features)
/// is excluded; the reported scores are the top-k similarities normalized to
/// sum to one.
pub fn baseline_predict(
    index: &BaselineIndex,
    method_source: &str,
    k: usize,
) -> Result<Prediction, BaselinePredictError> {
    if index.is_empty() {
        return Err(BaselinePredictError::EmptyIndex);
    }
    let unit =
        parse_source(method_source).map_err(|e| BaselinePredictError::Parse(e.to_string()))?;
    let method = &unit.methods[0];
    let query_label = label_of(&method.name);
    let query = method_features(method, index.mode());

    // Best similarity per label across all non-self entries.
    let mut best: BTreeMap<&str, f64> = BTreeMap::new();
    let mut candidates = 0usize;
    for entry in index.entries() {
        if entry.label == query_label && entry.features == query {
            continue; // the query's own training entry
        }
        candidates += 1;
        let score = index.cosine(&query, &entry.features);
        let slot = best.entry(entry.label.as_str()).or_insert(f64::MIN);
        if score > *slot {
            *slot = score;
        }
    }
    if candidates == 0 {
        return Err(BaselinePredictError::NoCandidates);
    }

    let mut ranked: Vec<(String, f64)> = best
        .into_iter()
        .map(|(label, score)| (label.to_string(), score))
        .collect();
    ranked.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.0.cmp(&b.0))
    });
    ranked.truncate(k.max(1));
    let total: f64 = ranked.iter().map(|(_, s)| s).sum();
    if total > 0.0 {
        for (_, s) in &mut ranked {
            *s /= total;
        }
    }
    Prediction::normalize(ranked, k).map_err(|_| BaselinePredictError::NoCandidates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scope;
    use crate::transforms::{self, TransformKind};

    #[test]
    fn subtoken_splitting() {
        assert_eq!(split_subtokens("maxValue"), vec!["max", "value"]);
        assert_eq!(split_subtokens("max_value"), vec!["max", "value"]);
        assert_eq!(split_subtokens("HTTPServer"), vec!["http", "server"]);
        assert_eq!(split_subtokens("isPrime"), vec!["is", "prime"]);
        assert_eq!(split_subtokens("x"), vec!["x"]);
        assert_eq!(split_subtokens("max2"), vec!["max2"]);
        assert_eq!(label_of("isPrime"), "is|prime");
        assert_eq!(label_of("skip"), "skip");
    }

    fn method_of(src: &str) -> MethodDecl {
        let mut unit = parse_source(src).unwrap();
        unit.methods.remove(0)
    }

    #[test]
    fn token_features_include_subtokens_and_exclude_the_name() {
        let m = method_of("void f(){ int maxValue = 0; }");
        let feats = token_features(&m);
        assert!(feats.contains_key("max"));
        assert!(feats.contains_key("value"));
        assert!(feats.contains_key("int"));
        assert!(feats.contains_key("="));
        assert!(!feats.contains_key("f"));
        // Literals contribute nothing.
        assert!(!feats.contains_key("0"));
    }

    #[test]
    fn structure_features_ignore_identifiers() {
        let a = method_of("int sumAll(int first, int second){ int total = first + second; return total; }");
        let b = method_of("int sumAll(int x, int y){ int z = x + y; return z; }");
        assert_eq!(structure_features(&a), structure_features(&b));
        // Token features do differ.
        assert_ne!(token_features(&a), token_features(&b));
    }

    #[test]
    fn structure_features_invariant_under_rename_transform() {
        let src = "int addBoth(int left, int right){ int sum = left + right; return sum; }";
        let unit = parse_source(src).unwrap();
        let table = scope::resolve(&unit).unwrap();
        for site in transforms::enumerate_sites(&unit, &table, TransformKind::RenameVariable) {
            let renamed = transforms::apply(&unit, &site, 13).unwrap();
            assert_eq!(
                structure_features(&unit.methods[0]),
                structure_features(&renamed.methods[0])
            );
        }
    }

    #[test]
    fn index_of_one_method_has_one_entry() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.java");
        std::fs::write(&path, "int one(){ return 1; }").unwrap();
        let index = build_index(&[path], FeatureMode::Token).unwrap();
        assert_eq!(index.len(), 1);
        assert_eq!(index.entries()[0].label, "one");
    }

    #[test]
    fn index_build_is_deterministic_bytes() {
        let dir = tempfile::tempdir().unwrap();
        for (name, src) in [
            ("a.java", "int one(){ return 1; }"),
            ("b.java", "int two(){ return 2; } int three(){ return 3; }"),
        ] {
            std::fs::write(dir.path().join(name), src).unwrap();
        }
        let files: Vec<PathBuf> = vec![dir.path().join("b.java"), dir.path().join("a.java")];
        let p1 = dir.path().join("i1.json");
        let p2 = dir.path().join("i2.json");
        build_index(&files, FeatureMode::Structure).unwrap().save(&p1).unwrap();
        build_index(&files, FeatureMode::Structure).unwrap().save(&p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
        // Round-trips through the file format.
        let loaded = BaselineIndex::load(&p1).unwrap();
        assert_eq!(loaded.len(), 3);
        assert_eq!(loaded.mode(), FeatureMode::Structure);
    }

    #[test]
    fn unparsable_file_is_reported_with_its_path() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.java");
        std::fs::write(&path, "class Broken {").unwrap();
        let err = build_index(&[path.clone()], FeatureMode::Token).unwrap_err();
        assert!(err.to_string().contains("bad.java"));
    }

    #[test]
    fn identical_query_with_different_name_ranks_first_at_full_similarity() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.java");
        std::fs::write(
            &path,
            "int addOne(int x){ return x + 1; }\nint mulSelf(int y){ return y * y * y; }",
        )
        .unwrap();
        let index = build_index(&[path], FeatureMode::Token).unwrap();
        // Same body as addOne, different name: addOne's entry is not a
        // self-entry and scores cosine 1.0 before normalization.
        let p = baseline_predict(&index, "int bump(int x){ return x + 1; }", 5).unwrap();
        assert_eq!(p.top1(), "add|one");
        assert_eq!(p.entries.len(), 2);
        assert!(p.entries[0].score > p.entries[1].score);
        let sum: f64 = p.entries.iter().map(|e| e.score).sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn self_entry_is_excluded() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.java");
        let add = "int addOne(int x){ return x + 1; }";
        std::fs::write(&path, format!("{add}\nint twice(int y){{ return y + y; }}")).unwrap();
        let index = build_index(&[path], FeatureMode::Token).unwrap();
        // Querying with addOne itself must not see its own entry.
        let p = baseline_predict(&index, add, 5).unwrap();
        assert_eq!(p.top1(), "twice");

        // With only the self entry in the index there is nothing to rank.
        let dir2 = tempfile::tempdir().unwrap();
        let solo = dir2.path().join("solo.java");
        std::fs::write(&solo, add).unwrap();
        let index = build_index(&[solo], FeatureMode::Token).unwrap();
        assert!(matches!(
            baseline_predict(&index, add, 5),
            Err(BaselinePredictError::NoCandidates)
        ));
    }

    #[test]
    fn structure_mode_prediction_identical_for_renamed_query() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.java");
        std::fs::write(
            &path,
            "int addBoth(int a, int b){ int s = a + b; return s; }\n\
             int subBoth(int a, int b){ int d = a - b; return d; }\n\
             boolean anyTrue(boolean p, boolean q){ return p || q; }",
        )
        .unwrap();
        let index = build_index(&[path], FeatureMode::Structure).unwrap();
        let original = "int addBoth(int a, int b){ int s = a + b; return s; }";
        let unit = parse_source(original).unwrap();
        let table = scope::resolve(&unit).unwrap();
        let sites = transforms::enumerate_sites(&unit, &table, TransformKind::RenameVariable);
        let p_orig = baseline_predict(&index, original, 5).unwrap();
        for site in sites {
            let renamed = transforms::apply(&unit, &site, 7).unwrap();
            let renamed_src = crate::syntax::print_method(&renamed.methods[0]);
            let p_renamed = baseline_predict(&index, &renamed_src, 5).unwrap();
            assert_eq!(p_orig, p_renamed);
        }
    }

    #[test]
    fn empty_index_is_an_error() {
        let index = BaselineIndex::from_entries(FeatureMode::Token, Vec::new());
        assert!(matches!(
            baseline_predict(&index, "int f(){ return 1; }", 5),
            Err(BaselinePredictError::EmptyIndex)
        ));
    }

    #[test]
    fn load_rejects_unknown_versions() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("i.json");
        std::fs::write(&path, r#"{"version":99,"mode":"token","entries":[]}"#).unwrap();
        assert!(matches!(
            BaselineIndex::load(&path),
            Err(IndexError::Version { found: 99, .. })
        ));
    }
}
