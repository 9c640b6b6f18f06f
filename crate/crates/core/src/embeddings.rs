//! Embedding interchange (JEMB files), word vectors and the Fast+Pos
//! baseline representation.
//!
//! JEMB layout, all integers little-endian:
//!
//! ```text
//! "JEMB"  u32 version (=1)  u32 metadata length  metadata JSON
//! u32 sentence count
//! per sentence: u16 id length, id (UTF-8), u32 n_tokens,
//!               n_tokens * dim f32 values, row-major
//! ```
//!
//! The metadata object is `{"model": .., "layer": .., "dim": .., "split": ..}`.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use indexmap::IndexMap;
use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::treebank::{AlignStatus, AlignmentRecord, Sentence};

pub const JEMB_MAGIC: &[u8; 4] = b"JEMB";
pub const JEMB_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("bad magic {found:?} at byte 0")]
    BadMagic { found: [u8; 4] },
    #[error("unsupported version {found} at byte {offset}")]
    Version { found: u32, offset: u64 },
    #[error("truncated file: expected {what} at byte {offset}")]
    Truncated { what: &'static str, offset: u64 },
    #[error("bad metadata at byte {offset}: {message}")]
    Metadata { offset: u64, message: String },
    #[error("sentence {sent_id}: non-finite value at byte {offset}")]
    NonFinite { sent_id: String, offset: u64 },
    #[error("sentence {sent_id}: id is not UTF-8 (byte {offset})")]
    BadId { sent_id: String, offset: u64 },
    #[error("{extra} trailing bytes after the last sentence (byte {offset})")]
    Trailing { extra: u64, offset: u64 },
    #[error("sentence {sent_id}: {found} columns where the set has dim {dim}")]
    DimMismatch { sent_id: String, dim: usize, found: usize },
    #[error("sentence {sent_id}: {message}")]
    Alignment { sent_id: String, message: String },
    #[error("word vectors line {line}: {message}")]
    WordVectors { line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Per-sentence embedding matrices for one (model, layer, split).
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    pub model_id: String,
    pub layer: u32,
    pub dim: usize,
    pub split: String,
    /// Rows are tokens (or subwords), columns are dimensions.
    pub sentences: IndexMap<String, Array2<f32>>,
}

#[derive(Serialize, Deserialize)]
struct Metadata {
    model: String,
    layer: u32,
    dim: usize,
    #[serde(default)]
    split: String,
}

impl EmbeddingSet {
    pub fn new(model_id: impl Into<String>, layer: u32, dim: usize, split: impl Into<String>) -> Self {
        EmbeddingSet {
            model_id: model_id.into(),
            layer,
            dim,
            split: split.into(),
            sentences: IndexMap::new(),
        }
    }

    /// Adds a matrix, checking its width and values.
    pub fn insert(&mut self, sent_id: impl Into<String>, matrix: Array2<f32>) -> Result<(), EmbeddingError> {
        let sent_id = sent_id.into();
        self.check(&sent_id, &matrix)?;
        self.sentences.insert(sent_id, matrix);
        Ok(())
    }

    fn check(&self, sent_id: &str, matrix: &Array2<f32>) -> Result<(), EmbeddingError> {
        if matrix.ncols() != self.dim {
            return Err(EmbeddingError::DimMismatch {
                sent_id: sent_id.to_string(),
                dim: self.dim,
                found: matrix.ncols(),
            });
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(EmbeddingError::Invalid(format!("sentence {sent_id}: non-finite value")));
        }
        Ok(())
    }

    pub fn get(&self, sent_id: &str) -> Option<&Array2<f32>> {
        self.sentences.get(sent_id)
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<(), EmbeddingError> {
        if self.dim == 0 {
            return Err(EmbeddingError::Invalid("dim must be at least 1".into()));
        }
        let metadata = serde_json::to_vec(&Metadata {
            model: self.model_id.clone(),
            layer: self.layer,
            dim: self.dim,
            split: self.split.clone(),
        })
        .expect("metadata serializes");
        out.write_all(JEMB_MAGIC)?;
        out.write_all(&JEMB_VERSION.to_le_bytes())?;
        out.write_all(&(metadata.len() as u32).to_le_bytes())?;
        out.write_all(&metadata)?;
        out.write_all(&(self.sentences.len() as u32).to_le_bytes())?;
        for (sent_id, matrix) in &self.sentences {
            self.check(sent_id, matrix)?;
            let id = sent_id.as_bytes();
            let id_len = u16::try_from(id.len())
                .map_err(|_| EmbeddingError::Invalid(format!("sentence id `{sent_id}` exceeds 65535 bytes")))?;
            out.write_all(&id_len.to_le_bytes())?;
            out.write_all(id)?;
            out.write_all(&(matrix.nrows() as u32).to_le_bytes())?;
            let mut payload = Vec::with_capacity(matrix.len() * 4);
            for row in matrix.rows() {
                for v in row {
                    payload.extend_from_slice(&v.to_le_bytes());
                }
            }
            out.write_all(&payload)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(input: R) -> Result<Self, EmbeddingError> {
        let mut r = CountingReader {
            inner: input,
            offset: 0,
        };
        let mut magic = [0u8; 4];
        r.exact(&mut magic, "magic")?;
        if &magic != JEMB_MAGIC {
            return Err(EmbeddingError::BadMagic { found: magic });
        }
        let version_offset = r.offset;
        let version = r.u32("version")?;
        if version != JEMB_VERSION {
            return Err(EmbeddingError::Version {
                found: version,
                offset: version_offset,
            });
        }
        let meta_len = r.u32("metadata length")? as usize;
        let meta_offset = r.offset;
        let mut meta = vec![0u8; meta_len];
        r.exact(&mut meta, "metadata")?;
        let meta: Metadata = serde_json::from_slice(&meta).map_err(|e| EmbeddingError::Metadata {
            offset: meta_offset,
            message: e.to_string(),
        })?;
        if meta.dim == 0 {
            return Err(EmbeddingError::Metadata {
                offset: meta_offset,
                message: "dim must be at least 1".into(),
            });
        }
        let mut set = EmbeddingSet::new(meta.model, meta.layer, meta.dim, meta.split);
        let count = r.u32("sentence count")?;
        for ordinal in 0..count {
            let id_len = r.u16("sentence id length")? as usize;
            let id_offset = r.offset;
            let mut id = vec![0u8; id_len];
            r.exact(&mut id, "sentence id")?;
            let sent_id = String::from_utf8(id).map_err(|_| EmbeddingError::BadId {
                sent_id: format!("#{ordinal}"),
                offset: id_offset,
            })?;
            let n_tokens = r.u32("token count")? as usize;
            let payload_offset = r.offset;
            let mut payload = vec![0u8; n_tokens * set.dim * 4];
            r.exact(&mut payload, "matrix payload")?;
            let values: Vec<f32> = payload
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
                return Err(EmbeddingError::NonFinite {
                    sent_id,
                    offset: payload_offset + 4 * bad as u64,
                });
            }
            let matrix = Array2::from_shape_vec((n_tokens, set.dim), values).expect("payload length matches shape");
            set.sentences.insert(sent_id, matrix);
        }
        let end = r.offset;
        let mut rest = Vec::new();
        r.inner.read_to_end(&mut rest)?;
        if !rest.is_empty() {
            return Err(EmbeddingError::Trailing {
                extra: rest.len() as u64,
                offset: end,
            });
        }
        Ok(set)
    }
}

struct CountingReader<R> {
    inner: R,
    offset: u64,
}

impl<R: Read> CountingReader<R> {
    fn exact(&mut self, buf: &mut [u8], what: &'static str) -> Result<(), EmbeddingError> {
        match self.inner.read_exact(buf) {
            Ok(()) => {
                self.offset += buf.len() as u64;
                Ok(())
            }
            Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => Err(EmbeddingError::Truncated {
                what,
                offset: self.offset,
            }),
            Err(e) => Err(e.into()),
        }
    }

    fn u32(&mut self, what: &'static str) -> Result<u32, EmbeddingError> {
        let mut b = [0u8; 4];
        self.exact(&mut b, what)?;
        Ok(u32::from_le_bytes(b))
    }

    fn u16(&mut self, what: &'static str) -> Result<u16, EmbeddingError> {
        let mut b = [0u8; 2];
        self.exact(&mut b, what)?;
        Ok(u16::from_le_bytes(b))
    }
}

pub fn write_embedding_file(set: &EmbeddingSet, path: impl AsRef<Path>) -> Result<(), EmbeddingError> {
    set.write_to(BufWriter::new(File::create(path)?))
}

pub fn read_embedding_file(path: impl AsRef<Path>) -> Result<EmbeddingSet, EmbeddingError> {
    EmbeddingSet::read_from(BufReader::new(File::open(path)?))
}

/// Absolute position embeddings; row `i` belongs to the `i`-th word of a
/// sentence (0-based).
#[derive(Debug, Clone, PartialEq)]
pub struct PositionTable {
    rows: Array2<f32>,
}

impl PositionTable {
    pub fn new(rows: Array2<f32>) -> Result<Self, EmbeddingError> {
        if rows.iter().any(|v| !v.is_finite()) {
            return Err(EmbeddingError::Invalid("position table has non-finite rows".into()));
        }
        Ok(PositionTable { rows })
    }

    /// Reads the table from a JEMB set holding exactly one pseudo-sentence.
    pub fn from_embedding_set(set: &EmbeddingSet) -> Result<Self, EmbeddingError> {
        match set.sentences.values().collect::<Vec<_>>().as_slice() {
            [rows] => PositionTable::new((*rows).clone()),
            other => Err(EmbeddingError::Invalid(format!(
                "position table file must hold one pseudo-sentence, found {}",
                other.len()
            ))),
        }
    }

    pub fn to_embedding_set(&self, model_id: &str) -> EmbeddingSet {
        let mut set = EmbeddingSet::new(model_id, 0, self.dim_pos(), "positions");
        set.sentences.insert("positions".into(), self.rows.clone());
        set
    }

    pub fn max_positions(&self) -> usize {
        self.rows.nrows()
    }

    pub fn dim_pos(&self) -> usize {
        self.rows.ncols()
    }

    pub fn row(&self, i: usize) -> ndarray::ArrayView1<'_, f32> {
        self.rows.row(i)
    }
}

/// Static word vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct WordVectors {
    dim: usize,
    vectors: HashMap<String, Vec<f32>>,
}

impl WordVectors {
    pub fn new(dim: usize) -> Self {
        WordVectors {
            dim,
            vectors: HashMap::new(),
        }
    }

    pub fn insert(&mut self, word: impl Into<String>, vector: Vec<f32>) {
        assert_eq!(vector.len(), self.dim, "word vector width");
        self.vectors.insert(word.into(), vector);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Exact form first, then lowercase.
    pub fn lookup(&self, form: &str) -> Option<&[f32]> {
        self.vectors
            .get(form)
            .or_else(|| self.vectors.get(&form.to_lowercase()))
            .map(Vec::as_slice)
    }

    /// Parses the text format: a `count dim` header, then `word v1 .. vdim`.
    pub fn read_from<R: BufRead>(input: R) -> Result<Self, EmbeddingError> {
        let mut lines = input.lines().enumerate();
        let header = match lines.next() {
            Some((_, line)) => line?,
            None => {
                return Err(EmbeddingError::WordVectors {
                    line: 1,
                    message: "missing `count dim` header".into(),
                })
            }
        };
        let fields: Vec<&str> = header.split_whitespace().collect();
        let (count, dim) = match fields.as_slice() {
            [c, d] => match (c.parse::<usize>(), d.parse::<usize>()) {
                (Ok(c), Ok(d)) if d > 0 => (c, d),
                _ => {
                    return Err(EmbeddingError::WordVectors {
                        line: 1,
                        message: format!("bad header `{header}`"),
                    })
                }
            },
            _ => {
                return Err(EmbeddingError::WordVectors {
                    line: 1,
                    message: format!("bad header `{header}`"),
                })
            }
        };
        let mut vectors = WordVectors::new(dim);
        for (i, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let err = |message: String| EmbeddingError::WordVectors { line: i + 1, message };
            let mut parts = line.trim_end().split(' ');
            let word = parts.next().unwrap_or_default().to_string();
            let values = parts
                .map(|v| v.parse::<f32>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| err(e.to_string()))?;
            if values.len() != dim {
                return Err(err(format!("expected {dim} values, found {}", values.len())));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(err("non-finite value".into()));
            }
            vectors.vectors.insert(word, values);
        }
        if vectors.len() != count {
            log::warn!("word vector header announces {count} entries, read {}", vectors.len());
        }
        Ok(vectors)
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self, EmbeddingError> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

/// What [`compose_fast_pos`] had to improvise.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FastPosLog {
    pub oov_tokens: usize,
    pub skipped: Vec<String>,
}

/// Fast+Pos: each token's word vector followed by the position embedding of
/// its index. Unknown words get a zero word vector; sentences longer than
/// the position table are skipped.
pub fn compose_fast_pos(
    corpus: &[Sentence],
    words: &WordVectors,
    positions: &PositionTable,
    model_id: &str,
    split: &str,
) -> (EmbeddingSet, FastPosLog) {
    let dim = words.dim() + positions.dim_pos();
    let mut set = EmbeddingSet::new(model_id, 0, dim, split);
    let mut log = FastPosLog::default();
    for sentence in corpus {
        if sentence.len() > positions.max_positions() {
            log::warn!(
                "sentence {} has {} tokens, position table only {}",
                sentence.sent_id(),
                sentence.len(),
                positions.max_positions()
            );
            log.skipped.push(sentence.sent_id().to_string());
            continue;
        }
        let mut matrix = Array2::zeros((sentence.len(), dim));
        for (i, token) in sentence.tokens().iter().enumerate() {
            match words.lookup(&token.form) {
                Some(v) => matrix
                    .slice_mut(s![i, ..words.dim()])
                    .assign(&ndarray::ArrayView1::from(v)),
                None => log.oov_tokens += 1,
            }
            matrix.slice_mut(s![i, words.dim()..]).assign(&positions.row(i));
        }
        set.sentences.insert(sentence.sent_id().to_string(), matrix);
    }
    if log.oov_tokens > 0 {
        log::info!("{} out-of-vocabulary tokens got zero word vectors", log.oov_tokens);
    }
    (set, log)
}

/// Picks the first subword row of each token's span.
pub fn token_vectors_from_subwords(raw: &Array2<f32>, record: &AlignmentRecord) -> Result<Array2<f32>, EmbeddingError> {
    let fail = |message: String| EmbeddingError::Alignment {
        sent_id: record.sent_id.clone(),
        message,
    };
    if record.status != AlignStatus::Ok {
        return Err(fail("alignment status is `removed`".into()));
    }
    let mut out = Array2::zeros((record.token_map.len(), raw.ncols()));
    for (t, &[start, end]) in record.token_map.iter().enumerate() {
        if start >= end || end > raw.nrows() {
            return Err(fail(format!(
                "span [{start}, {end}) of token {} is outside {} subword rows",
                t + 1,
                raw.nrows()
            )));
        }
        out.row_mut(t).assign(&raw.row(start));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use ndarray::array;

    use super::*;
    use crate::treebank::tests::enjoyed_sentence;

    fn small_set() -> EmbeddingSet {
        let mut set = EmbeddingSet::new("toy", 4, 3, "test");
        set.insert("s1", array![[1.0, 2.0, 3.0], [4.0, 5.0, -6.5]]).unwrap();
        set
    }

    fn bytes(set: &EmbeddingSet) -> Vec<u8> {
        let mut buf = Vec::new();
        set.write_to(&mut buf).unwrap();
        buf
    }

    #[test]
    fn round_trip_and_size() {
        let set = small_set();
        let buf = bytes(&set);
        let meta = br#"{"model":"toy","layer":4,"dim":3,"split":"test"}"#;
        let header = 4 + 4 + 4 + meta.len() + 4;
        assert_eq!(buf.len(), header + 2 + 2 + 4 + 24);
        assert_eq!(EmbeddingSet::read_from(buf.as_slice()).unwrap(), set);
    }

    #[test]
    fn empty_set() {
        let set = EmbeddingSet::new("toy", 0, 5, "dev");
        let back = EmbeddingSet::read_from(bytes(&set).as_slice()).unwrap();
        assert!(back.sentences.is_empty());
        assert_eq!(back.dim, 5);
    }

    #[test]
    fn format_errors() {
        let mut buf = bytes(&small_set());
        buf[0] = b'X';
        assert!(matches!(
            EmbeddingSet::read_from(buf.as_slice()),
            Err(EmbeddingError::BadMagic { found }) if &found == b"XEMB"
        ));

        let mut buf = bytes(&small_set());
        buf[4] = 2;
        assert!(matches!(
            EmbeddingSet::read_from(buf.as_slice()),
            Err(EmbeddingError::Version { found: 2, offset: 4 })
        ));

        let buf = bytes(&small_set());
        let short = &buf[..buf.len() - 3];
        assert!(matches!(
            EmbeddingSet::read_from(short),
            Err(EmbeddingError::Truncated {
                what: "matrix payload",
                ..
            })
        ));

        let mut buf = bytes(&small_set());
        let n = buf.len();
        buf[n - 4..].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(
            EmbeddingSet::read_from(buf.as_slice()),
            Err(EmbeddingError::NonFinite { offset, .. }) if offset == (n - 4) as u64
        ));

        let mut buf = bytes(&small_set());
        buf.push(0);
        assert!(matches!(
            EmbeddingSet::read_from(buf.as_slice()),
            Err(EmbeddingError::Trailing { extra: 1, .. })
        ));

        let mut set = small_set();
        assert!(matches!(
            set.insert("bad", array![[1.0, 2.0]]),
            Err(EmbeddingError::DimMismatch { found: 2, .. })
        ));
    }

    #[test]
    fn first_subword_selection() {
        let raw = array![[1.0f32, 1.0], [2.0, 2.0], [3.0, 3.0], [4.0, 4.0]];
        let record = AlignmentRecord {
            sent_id: "s".into(),
            status: AlignStatus::Ok,
            token_map: vec![[0, 3], [3, 4]],
            merges: vec![],
            reason: None,
        };
        let tokens = token_vectors_from_subwords(&raw, &record).unwrap();
        assert_eq!(tokens, array![[1.0f32, 1.0], [4.0, 4.0]]);

        let identity = AlignmentRecord {
            token_map: vec![[0, 1], [1, 2], [2, 3], [3, 4]],
            ..record.clone()
        };
        assert_eq!(token_vectors_from_subwords(&raw, &identity).unwrap(), raw);

        let out_of_bounds = AlignmentRecord {
            token_map: vec![[5, 7]],
            ..record
        };
        assert!(matches!(
            token_vectors_from_subwords(&raw, &out_of_bounds),
            Err(EmbeddingError::Alignment { sent_id, .. }) if sent_id == "s"
        ));
    }

    #[test]
    fn word_vector_text_format() {
        let text = "2 3\nthe 0.1 0.2 0.3\nCat 1 2 3\n";
        let wv = WordVectors::read_from(text.as_bytes()).unwrap();
        assert_eq!(wv.dim(), 3);
        assert_eq!(wv.lookup("The"), Some(&[0.1f32, 0.2, 0.3][..]));
        assert_eq!(wv.lookup("Cat"), Some(&[1.0f32, 2.0, 3.0][..]));
        assert_eq!(wv.lookup("cat"), None);
        assert!(WordVectors::read_from("1 3\nthe 0.1 0.2\n".as_bytes()).is_err());
        assert!(WordVectors::read_from("".as_bytes()).is_err());
    }

    #[test]
    fn fast_pos_layout() {
        let mut words = WordVectors::new(300);
        words.insert("I", vec![1.0; 300]);
        let positions = PositionTable::new(Array2::from_shape_fn((16, 768), |(i, j)| (i * 1000 + j) as f32)).unwrap();
        let s = enjoyed_sentence();
        let (set, log) = compose_fast_pos(std::slice::from_ref(&s), &words, &positions, "fastpos", "test");
        let m = set.get("enjoyed").unwrap();
        assert_eq!(set.dim, 1068);
        assert_eq!(m.ncols(), 1068);
        assert!(m.slice(s![0, ..300]).iter().all(|&v| v == 1.0));
        assert!(m.slice(s![1, ..300]).iter().all(|&v| v == 0.0));
        assert_eq!(log.oov_tokens, 5);
        assert_eq!(m[(2, 300)], 2000.0);
    }

    #[test]
    fn fast_pos_skips_long_sentences() {
        let words = WordVectors::new(2);
        let positions = PositionTable::new(Array2::zeros((3, 2))).unwrap();
        let (set, log) = compose_fast_pos(&[enjoyed_sentence()], &words, &positions, "fp", "test");
        assert!(set.sentences.is_empty());
        assert_eq!(log.skipped, vec!["enjoyed".to_string()]);
    }

    #[test]
    fn position_table_round_trip() {
        let table = PositionTable::new(Array2::from_elem((4, 768), 0.5)).unwrap();
        let set = table.to_embedding_set("bert-base");
        let back = EmbeddingSet::read_from(bytes(&set).as_slice()).unwrap();
        let table2 = PositionTable::from_embedding_set(&back).unwrap();
        assert_eq!(table2.dim_pos(), 768);
        assert_eq!(table2.max_positions(), 4);
    }
}
