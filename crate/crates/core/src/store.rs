//! On-disk snippet index.
//!
//! An index directory holds:
//!
//! * `manifest.json`: human-readable summary ([`IndexManifest`]),
//! * `records.bin`: length-prefixed CBOR [`SnippetRecord`]s sorted by id,
//! * `graphs.bin`: length-prefixed CBOR [`CodeContextGraph`]s sorted by file,
//! * `symbols.bin`: the CBOR-encoded [`SymbolTable`] of the repository.
//!
//! Each frame is a little-endian `u32` byte length followed by the payload.
//! An index is never modified in place: a rebuild is written to a sibling
//! temporary directory and swapped in by rename.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::ccg::{self, CodeContextGraph, Language, SnippetRecord};
use crate::eaid::{build_symbol_table, SymbolTable};

pub const FORMAT_VERSION: u32 = 1;

const MANIFEST_FILE: &str = "manifest.json";
const RECORDS_FILE: &str = "records.bin";
const GRAPHS_FILE: &str = "graphs.bin";
const SYMBOLS_FILE: &str = "symbols.bin";

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("invalid manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("index format version {found} is not supported (expected {expected})")]
    Incompatible { found: u32, expected: u32 },
    #[error("corrupt index file {path}: {message}")]
    Corrupt { path: PathBuf, message: String },
    #[error("repository root {0} does not exist or is not a directory")]
    MissingRoot(PathBuf),
    #[error(transparent)]
    Slice(#[from] ccg::SliceError),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedFile {
    pub path: String,
    pub reason: String,
}

/// Summary written next to the index data. Keys serialize in sorted order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexManifest {
    pub file_count: usize,
    pub format_version: u32,
    pub h: usize,
    pub language: Language,
    pub repo_root: String,
    pub skipped_files: Vec<SkippedFile>,
    pub snippet_count: usize,
    pub w: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexConfig {
    pub language: Language,
    pub hops: usize,
    pub window: usize,
}

impl Default for IndexConfig {
    fn default() -> Self {
        Self { language: Language::Python, hops: ccg::DEFAULT_HOPS, window: ccg::DEFAULT_WINDOW }
    }
}

/// Source files of `language` under `root`, as sorted root-relative paths
/// with `/` separators. Hidden entries and `exclude` are skipped.
pub fn source_files(root: &Path, language: Language, exclude: Option<&Path>) -> Vec<String> {
    let exclude = exclude.and_then(|p| p.canonicalize().ok());
    let mut files: Vec<String> = WalkDir::new(root)
        .sort_by_file_name()
        .into_iter()
        .filter_entry(|e| {
            let hidden = e.depth() > 0 && e.file_name().to_string_lossy().starts_with('.');
            let excluded = exclude
                .as_ref()
                .is_some_and(|x| e.path().canonicalize().map(|p| &p == x).unwrap_or(false));
            !hidden && !excluded
        })
        .filter_map(Result::ok)
        .filter(|e| e.file_type().is_file())
        .filter(|e| e.path().extension().is_some_and(|x| x == language.extension()))
        .filter_map(|e| {
            let rel = e.path().strip_prefix(root).ok()?;
            Some(rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/"))
        })
        .collect();
    files.sort();
    files
}

enum FileOutcome {
    Indexed(CodeContextGraph, Vec<SnippetRecord>),
    Skipped(SkippedFile),
}

/// Parses every source file under `root`, slices each graph at every
/// statement and writes the index to `out`, replacing any previous index.
pub fn index_repository(root: &Path, out: &Path, config: &IndexConfig) -> Result<IndexManifest, StoreError> {
    if !root.is_dir() {
        return Err(StoreError::MissingRoot(root.to_path_buf()));
    }
    let files = source_files(root, config.language, Some(out));
    let sources: Vec<(String, Result<String, String>)> = files
        .par_iter()
        .map(|rel| {
            let text = fs::read(root.join(rel))
                .map_err(|e| e.to_string())
                .and_then(|bytes| String::from_utf8(bytes).map_err(|_| "not valid UTF-8".to_string()))
                .map(|s| ccg::normalize_newlines(&s));
            (rel.clone(), text)
        })
        .collect();

    let outcomes: Vec<FileOutcome> = sources
        .par_iter()
        .map(|(rel, text)| {
            let text = match text {
                Ok(t) => t,
                Err(reason) => return Ok(FileOutcome::Skipped(SkippedFile { path: rel.clone(), reason: reason.clone() })),
            };
            match ccg::build_ccg(text, config.language, rel) {
                Ok(graph) => {
                    let records = ccg::enumerate_slices(&graph, config.hops, config.window)?;
                    Ok(FileOutcome::Indexed(graph, records))
                }
                Err(e) => Ok(FileOutcome::Skipped(SkippedFile { path: rel.clone(), reason: e.to_string() })),
            }
        })
        .collect::<Result<_, StoreError>>()?;

    let mut graphs = Vec::new();
    let mut records = Vec::new();
    let mut skipped_files = Vec::new();
    for outcome in outcomes {
        match outcome {
            FileOutcome::Indexed(g, r) => {
                graphs.push(g);
                records.extend(r);
            }
            FileOutcome::Skipped(s) => {
                log::warn!("skipping {}: {}", s.path, s.reason);
                skipped_files.push(s);
            }
        }
    }
    records.sort_by(|a, b| a.id.cmp(&b.id));

    let parsed: Vec<(String, String)> = sources
        .iter()
        .filter(|(rel, _)| graphs.iter().any(|g| &g.file == rel))
        .filter_map(|(rel, text)| text.as_ref().ok().map(|t| (rel.clone(), t.clone())))
        .collect();
    let mut symbols = build_symbol_table(&parsed);
    symbols.files.extend(files.iter().cloned());

    let manifest = IndexManifest {
        file_count: graphs.len(),
        format_version: FORMAT_VERSION,
        h: config.hops,
        language: config.language,
        repo_root: root.display().to_string(),
        skipped_files,
        snippet_count: records.len(),
        w: config.window,
    };
    write_index(out, &manifest, &records, &graphs, &symbols)?;
    Ok(manifest)
}

fn write_index(
    out: &Path,
    manifest: &IndexManifest,
    records: &[SnippetRecord],
    graphs: &[CodeContextGraph],
    symbols: &SymbolTable,
) -> Result<(), StoreError> {
    let parent = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&parent).map_err(io_err(&parent))?;
    let staging = tempfile::Builder::new()
        .prefix(".saracoder-index-")
        .tempdir_in(&parent)
        .map_err(io_err(&parent))?;

    let manifest_path = staging.path().join(MANIFEST_FILE);
    let mut json = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    json.push('\n');
    fs::write(&manifest_path, json).map_err(io_err(&manifest_path))?;
    write_frames(&staging.path().join(RECORDS_FILE), records)?;
    write_frames(&staging.path().join(GRAPHS_FILE), graphs)?;
    write_frames(&staging.path().join(SYMBOLS_FILE), std::slice::from_ref(symbols))?;

    let staged = staging.keep();
    if out.exists() {
        let retired = parent.join(format!(
            ".saracoder-retired-{}-{}",
            std::process::id(),
            out.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
        ));
        fs::rename(out, &retired).map_err(io_err(out))?;
        fs::rename(&staged, out).map_err(io_err(out))?;
        fs::remove_dir_all(&retired).map_err(io_err(&retired))?;
    } else {
        fs::rename(&staged, out).map_err(io_err(out))?;
    }
    Ok(())
}

fn write_frames<T: Serialize>(path: &Path, items: &[T]) -> Result<(), StoreError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut writer = BufWriter::new(file);
    let mut buf = Vec::new();
    for item in items {
        buf.clear();
        ciborium::into_writer(item, &mut buf).expect("in-memory CBOR encoding cannot fail");
        let len = u32::try_from(buf.len()).map_err(|_| StoreError::Corrupt {
            path: path.to_path_buf(),
            message: "record larger than 4 GiB".into(),
        })?;
        writer.write_all(&len.to_le_bytes()).map_err(io_err(path))?;
        writer.write_all(&buf).map_err(io_err(path))?;
    }
    writer.flush().map_err(io_err(path))
}

fn read_frames<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, StoreError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut reader = BufReader::new(file);
    let corrupt = |message: String| StoreError::Corrupt { path: path.to_path_buf(), message };
    let mut items = Vec::new();
    let mut len_bytes = [0u8; 4];
    loop {
        match reader.read_exact(&mut len_bytes) {
            Ok(()) => {}
            Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => break,
            Err(e) => return Err(io_err(path)(e)),
        }
        let len = u32::from_le_bytes(len_bytes) as usize;
        let mut payload = vec![0u8; len];
        reader
            .read_exact(&mut payload)
            .map_err(|_| corrupt(format!("truncated frame {}", items.len())))?;
        let item = ciborium::from_reader(payload.as_slice())
            .map_err(|e| corrupt(format!("frame {}: {e}", items.len())))?;
        items.push(item);
    }
    Ok(items)
}

/// Read-only view of an index. Records iterate in ascending id order.
#[derive(Debug, Clone, Default)]
pub struct SnippetStore {
    manifest: Option<IndexManifest>,
    records: Vec<SnippetRecord>,
    by_id: HashMap<String, usize>,
    graphs: BTreeMap<String, CodeContextGraph>,
    symbols: SymbolTable,
}

impl SnippetStore {
    /// In-memory store over `records` (sorted here by id).
    pub fn from_records(mut records: Vec<SnippetRecord>) -> Self {
        records.sort_by(|a, b| a.id.cmp(&b.id));
        let by_id = records.iter().enumerate().map(|(i, r)| (r.id.clone(), i)).collect();
        Self { records, by_id, ..Default::default() }
    }

    pub fn with_graphs(mut self, graphs: impl IntoIterator<Item = CodeContextGraph>) -> Self {
        self.graphs = graphs.into_iter().map(|g| (g.file.clone(), g)).collect();
        self
    }

    pub fn with_symbols(mut self, symbols: SymbolTable) -> Self {
        self.symbols = symbols;
        self
    }

    pub fn manifest(&self) -> Option<&IndexManifest> {
        self.manifest.as_ref()
    }

    pub fn get(&self, id: &str) -> Option<&SnippetRecord> {
        self.by_id.get(id).map(|&i| &self.records[i])
    }

    pub fn records(&self) -> &[SnippetRecord] {
        &self.records
    }

    pub fn iter(&self) -> impl Iterator<Item = &SnippetRecord> {
        self.records.iter()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn graph(&self, file: &str) -> Option<&CodeContextGraph> {
        self.graphs.get(file)
    }

    pub fn symbols(&self) -> &SymbolTable {
        &self.symbols
    }
}

pub fn load_index(path: &Path) -> Result<SnippetStore, StoreError> {
    let manifest_path = path.join(MANIFEST_FILE);
    let raw = fs::read_to_string(&manifest_path).map_err(io_err(&manifest_path))?;
    let value: serde_json::Value = serde_json::from_str(&raw)
        .map_err(|e| StoreError::Manifest { path: manifest_path.clone(), message: e.to_string() })?;
    // Check the version before the full schema so old layouts get a clear error.
    let found = value.get("format_version").and_then(|v| v.as_u64()).ok_or_else(|| StoreError::Manifest {
        path: manifest_path.clone(),
        message: "missing format_version".into(),
    })?;
    if found != FORMAT_VERSION as u64 {
        return Err(StoreError::Incompatible { found: found as u32, expected: FORMAT_VERSION });
    }
    let manifest: IndexManifest = serde_json::from_value(value)
        .map_err(|e| StoreError::Manifest { path: manifest_path.clone(), message: e.to_string() })?;

    let records_path = path.join(RECORDS_FILE);
    let records: Vec<SnippetRecord> = read_frames(&records_path)?;
    if records.len() != manifest.snippet_count {
        return Err(StoreError::Corrupt {
            path: records_path,
            message: format!("{} records, manifest says {}", records.len(), manifest.snippet_count),
        });
    }
    let graphs: Vec<CodeContextGraph> = read_frames(&path.join(GRAPHS_FILE))?;
    let symbols_path = path.join(SYMBOLS_FILE);
    let symbols = read_frames::<SymbolTable>(&symbols_path)?.pop().ok_or_else(|| StoreError::Corrupt {
        path: symbols_path,
        message: "empty symbol table file".into(),
    })?;

    let mut store = SnippetStore::from_records(records).with_graphs(graphs).with_symbols(symbols);
    store.manifest = Some(manifest);
    Ok(store)
}
