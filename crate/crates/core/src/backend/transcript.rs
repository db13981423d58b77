//! Record/replay transcript store.
//!
//! File format: UTF-8, one record per line,
//! `<digest>\t<byte length>:<escaped completion>`, where the length is that
//! of the unescaped completion and `\\`, `\n`, `\r`, `\t` are backslash
//! escaped. The file is append-only; when a digest repeats, the first record
//! wins.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use super::{check_request, digest, BackendError, CompletionBackend, CompletionParams};

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(s: &str) -> Result<String, String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some('t') => out.push('\t'),
            other => return Err(format!("bad escape \\{}", other.map(String::from).unwrap_or_default())),
        }
    }
    Ok(out)
}

pub(crate) fn encode_record(digest: &str, completion: &str) -> String {
    format!("{digest}\t{}:{}\n", completion.len(), escape(completion))
}

pub(crate) fn decode_record(line: &str) -> Result<(String, String), String> {
    let (digest, rest) = line.split_once('\t').ok_or("missing tab")?;
    if digest.len() != 64 || !digest.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err(format!("bad digest {digest:?}"));
    }
    let (len, escaped) = rest.split_once(':').ok_or("missing length prefix")?;
    let len: usize = len.parse().map_err(|_| format!("bad length {len:?}"))?;
    let text = unescape(escaped)?;
    if text.len() != len {
        return Err(format!("length {len} does not match payload ({} bytes)", text.len()));
    }
    Ok((digest.to_string(), text))
}

#[derive(Debug)]
pub struct TranscriptStore {
    path: Option<PathBuf>,
    entries: Mutex<HashMap<String, String>>,
    writer: Mutex<Option<File>>,
}

impl TranscriptStore {
    pub fn in_memory() -> Self {
        TranscriptStore { path: None, entries: Mutex::new(HashMap::new()), writer: Mutex::new(None) }
    }

    fn err(path: &Path, message: impl Into<String>) -> BackendError {
        BackendError::Transcript { path: path.display().to_string(), message: message.into() }
    }

    fn read_entries(path: &Path) -> Result<HashMap<String, String>, BackendError> {
        let text = std::fs::read_to_string(path).map_err(|e| Self::err(path, e.to_string()))?;
        let mut entries = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let (d, c) = decode_record(line).map_err(|m| Self::err(path, format!("line {}: {m}", i + 1)))?;
            entries.entry(d).or_insert(c);
        }
        Ok(entries)
    }

    /// Read-only store over an existing transcript.
    pub fn open_replay(path: &Path) -> Result<Self, BackendError> {
        Ok(TranscriptStore {
            path: Some(path.to_path_buf()),
            entries: Mutex::new(Self::read_entries(path)?),
            writer: Mutex::new(None),
        })
    }

    /// Appending store; existing records are loaded first.
    pub fn open_record(path: &Path) -> Result<Self, BackendError> {
        let entries = if path.exists() { Self::read_entries(path)? } else { HashMap::new() };
        let file =
            OpenOptions::new().create(true).append(true).open(path).map_err(|e| Self::err(path, e.to_string()))?;
        Ok(TranscriptStore {
            path: Some(path.to_path_buf()),
            entries: Mutex::new(entries),
            writer: Mutex::new(Some(file)),
        })
    }

    pub fn get(&self, digest: &str) -> Option<String> {
        self.entries.lock().expect("poisoned").get(digest).cloned()
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Stores a new record; an existing digest is left untouched.
    pub fn insert(&self, digest: &str, completion: &str) -> Result<(), BackendError> {
        let mut entries = self.entries.lock().expect("poisoned");
        if entries.contains_key(digest) {
            return Ok(());
        }
        if let Some(file) = self.writer.lock().expect("poisoned").as_mut() {
            let path = self.path.as_deref().unwrap_or(Path::new("<memory>"));
            file.write_all(encode_record(digest, completion).as_bytes())
                .and_then(|_| file.flush())
                .map_err(|e| Self::err(path, e.to_string()))?;
        }
        entries.insert(digest.to_string(), completion.to_string());
        Ok(())
    }
}

/// Delegates misses to `inner` and records the answers.
pub struct RecordingBackend {
    inner: Arc<dyn CompletionBackend>,
    store: Arc<TranscriptStore>,
}

impl RecordingBackend {
    pub fn new(inner: Arc<dyn CompletionBackend>, store: Arc<TranscriptStore>) -> Self {
        RecordingBackend { inner, store }
    }
}

impl CompletionBackend for RecordingBackend {
    fn complete(&self, prompt: &str, params: &CompletionParams) -> Result<String, BackendError> {
        check_request(prompt, params)?;
        let d = digest(prompt, params);
        if let Some(text) = self.store.get(&d) {
            return Ok(text);
        }
        let text = self.inner.complete(prompt, params)?;
        self.store.insert(&d, &text)?;
        Ok(text)
    }
}

pub struct ReplayBackend {
    store: Arc<TranscriptStore>,
}

impl ReplayBackend {
    pub fn new(store: Arc<TranscriptStore>) -> Self {
        ReplayBackend { store }
    }

    pub fn open(path: &Path) -> Result<Self, BackendError> {
        Ok(ReplayBackend::new(Arc::new(TranscriptStore::open_replay(path)?)))
    }
}

impl CompletionBackend for ReplayBackend {
    fn complete(&self, prompt: &str, params: &CompletionParams) -> Result<String, BackendError> {
        check_request(prompt, params)?;
        let d = digest(prompt, params);
        self.store.get(&d).ok_or_else(|| {
            let start = prompt.char_indices().rev().nth(159).map_or(0, |(i, _)| i);
            BackendError::ReplayMiss { digest: d, excerpt: prompt[start..].to_string() }
        })
    }
}
