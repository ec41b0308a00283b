//! Versioned binary model persistence.
//!
//! Layout (all integers little-endian): magic `PVEC`, format version u16,
//! config block (mode u8, dbow_words u8, dim u32, window u32, negative u32,
//! epochs u32, min_count u32, workers u32, initial_lr f32, final_lr f32,
//! seed u64), vocabulary block (word count u64, noise exponent f64, then
//! per word a u32 length-prefixed UTF-8 string and u64 count), document block
//! (doc count u64, then length-prefixed subjects in row order), three
//! matrices in order doc/word-in/word-out (rows u64, cols u64, f32 data;
//! an absent word-in matrix is stored as 0x0), and a trailing CRC32 of every
//! preceding byte.

use std::fs;
use std::path::{Path, PathBuf};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use thiserror::Error;

use super::matrix::Matrix;
use super::vocab::{VocabWord, Vocabulary};
use super::{EmbeddingModel, TrainConfig, TrainMode};

pub const FORMAT_VERSION: u16 = 1;
const MAGIC: [u8; 4] = *b"PVEC";

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("not a model file: bad magic bytes")]
    BadMagic,
    #[error("unsupported model format version {found} (expected {FORMAT_VERSION})")]
    UnsupportedVersion { found: u16 },
    #[error("model file truncated: expected at least {expected} bytes, found {actual}")]
    Truncated { expected: u64, actual: u64 },
    #[error("model file checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    ChecksumMismatch { stored: u32, computed: u32 },
    #[error("invalid model field: {0}")]
    InvalidField(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ModelIoError + '_ {
    move |source| ModelIoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn mode_byte(mode: TrainMode) -> u8 {
    match mode {
        TrainMode::Dbow => 0,
        TrainMode::DmConcat => 1,
        TrainMode::DmAvg => 2,
    }
}

fn mode_from_byte(b: u8) -> Result<TrainMode, ModelIoError> {
    match b {
        0 => Ok(TrainMode::Dbow),
        1 => Ok(TrainMode::DmConcat),
        2 => Ok(TrainMode::DmAvg),
        other => Err(ModelIoError::InvalidField(format!(
            "unknown mode byte {other}"
        ))),
    }
}

fn write_matrix(out: &mut Vec<u8>, m: &Matrix) {
    out.write_u64::<LittleEndian>(m.rows() as u64).unwrap();
    out.write_u64::<LittleEndian>(m.cols() as u64).unwrap();
    for &v in m.data() {
        out.write_f32::<LittleEndian>(v).unwrap();
    }
}

fn encode(model: &EmbeddingModel) -> Vec<u8> {
    let config = model.config();
    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);
    out.write_u16::<LittleEndian>(FORMAT_VERSION).unwrap();

    out.push(mode_byte(config.mode));
    out.push(u8::from(config.dbow_words));
    out.write_u32::<LittleEndian>(config.dim as u32).unwrap();
    out.write_u32::<LittleEndian>(config.window as u32).unwrap();
    out.write_u32::<LittleEndian>(config.negative as u32).unwrap();
    out.write_u32::<LittleEndian>(config.epochs as u32).unwrap();
    out.write_u32::<LittleEndian>(config.min_count).unwrap();
    out.write_u32::<LittleEndian>(config.workers as u32).unwrap();
    out.write_f32::<LittleEndian>(config.initial_lr).unwrap();
    out.write_f32::<LittleEndian>(config.final_lr).unwrap();
    out.write_u64::<LittleEndian>(config.seed).unwrap();

    let vocab = model.vocab();
    out.write_u64::<LittleEndian>(vocab.len() as u64).unwrap();
    out.write_f64::<LittleEndian>(vocab.noise_exponent()).unwrap();
    for w in vocab.words() {
        out.write_u32::<LittleEndian>(w.word.len() as u32).unwrap();
        out.extend_from_slice(w.word.as_bytes());
        out.write_u64::<LittleEndian>(w.count).unwrap();
    }

    out.write_u64::<LittleEndian>(model.subjects().len() as u64)
        .unwrap();
    for subject in model.subjects() {
        out.write_u32::<LittleEndian>(subject.len() as u32).unwrap();
        out.extend_from_slice(subject.as_bytes());
    }

    write_matrix(&mut out, model.doc_vectors());
    match model.word_in_vectors() {
        Some(m) => write_matrix(&mut out, m),
        None => write_matrix(&mut out, &Matrix::zeros(0, 0)),
    }
    write_matrix(&mut out, model.word_out_vectors());

    let crc = crc32fast::hash(&out);
    out.write_u32::<LittleEndian>(crc).unwrap();
    out
}

/// Writes the model via a sibling temp file and rename, so an interrupted or
/// failed save never leaves a partial file at `path`.
pub fn save_model(model: &EmbeddingModel, path: impl AsRef<Path>) -> Result<(), ModelIoError> {
    let path = path.as_ref();
    let bytes = encode(model);
    let tmp = {
        let mut os = path.as_os_str().to_os_string();
        os.push(".tmp");
        PathBuf::from(os)
    };
    fs::write(&tmp, &bytes).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io_err(path)(e)
    })
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ModelIoError> {
        let end = self
            .pos
            .checked_add(n)
            .ok_or_else(|| ModelIoError::InvalidField("length overflow".to_string()))?;
        if end > self.buf.len() {
            return Err(ModelIoError::Truncated {
                expected: end as u64,
                actual: self.buf.len() as u64,
            });
        }
        let slice = &self.buf[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8, ModelIoError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, ModelIoError> {
        Ok(self.take(2)?.read_u16::<LittleEndian>().unwrap())
    }

    fn u32(&mut self) -> Result<u32, ModelIoError> {
        Ok(self.take(4)?.read_u32::<LittleEndian>().unwrap())
    }

    fn u64(&mut self) -> Result<u64, ModelIoError> {
        Ok(self.take(8)?.read_u64::<LittleEndian>().unwrap())
    }

    fn f32(&mut self) -> Result<f32, ModelIoError> {
        Ok(self.take(4)?.read_f32::<LittleEndian>().unwrap())
    }

    fn f64(&mut self) -> Result<f64, ModelIoError> {
        Ok(self.take(8)?.read_f64::<LittleEndian>().unwrap())
    }

    fn string(&mut self) -> Result<String, ModelIoError> {
        let len = self.u32()? as usize;
        let bytes = self.take(len)?;
        String::from_utf8(bytes.to_vec())
            .map_err(|_| ModelIoError::InvalidField("non-UTF-8 string".to_string()))
    }

    fn matrix(&mut self) -> Result<Matrix, ModelIoError> {
        let rows = self.u64()? as usize;
        let cols = self.u64()? as usize;
        let n = rows
            .checked_mul(cols)
            .ok_or_else(|| ModelIoError::InvalidField("matrix size overflow".to_string()))?;
        let mut data = Vec::with_capacity(n);
        let bytes = self.take(
            n.checked_mul(4)
                .ok_or_else(|| ModelIoError::InvalidField("matrix size overflow".to_string()))?,
        )?;
        for chunk in bytes.chunks_exact(4) {
            data.push(f32::from_le_bytes(chunk.try_into().unwrap()));
        }
        Ok(Matrix::from_vec(rows, cols, data))
    }
}

fn decode(buf: &[u8]) -> Result<EmbeddingModel, ModelIoError> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(ModelIoError::BadMagic);
    }
    let version = r.u16()?;
    if version != FORMAT_VERSION {
        return Err(ModelIoError::UnsupportedVersion { found: version });
    }

    let mode = mode_from_byte(r.u8()?)?;
    let dbow_words = match r.u8()? {
        0 => false,
        1 => true,
        other => {
            return Err(ModelIoError::InvalidField(format!(
                "bad dbow_words byte {other}"
            )))
        }
    };
    let config = TrainConfig {
        mode,
        dbow_words,
        dim: r.u32()? as usize,
        window: r.u32()? as usize,
        negative: r.u32()? as usize,
        epochs: r.u32()? as usize,
        min_count: r.u32()?,
        workers: r.u32()? as usize,
        initial_lr: r.f32()?,
        final_lr: r.f32()?,
        seed: r.u64()?,
    };
    config
        .validate()
        .map_err(|e| ModelIoError::InvalidField(e.to_string()))?;

    let n_words = r.u64()? as usize;
    let noise_exponent = r.f64()?;
    if !noise_exponent.is_finite() {
        return Err(ModelIoError::InvalidField(
            "non-finite noise exponent".to_string(),
        ));
    }
    let mut words = Vec::with_capacity(n_words.min(1 << 20));
    for _ in 0..n_words {
        let word = r.string()?;
        let count = r.u64()?;
        words.push(VocabWord { word, count });
    }
    let vocab = Vocabulary::from_parts(words, config.min_count, noise_exponent)
        .map_err(|e| ModelIoError::InvalidField(e.to_string()))?;

    let n_docs = r.u64()? as usize;
    let mut subjects = Vec::with_capacity(n_docs.min(1 << 20));
    for _ in 0..n_docs {
        subjects.push(r.string()?);
    }

    let doc_vectors = r.matrix()?;
    let word_in = r.matrix()?;
    let word_out = r.matrix()?;

    // exactly the 4 checksum bytes may remain
    let crc_at = r.pos;
    let stored = r.u32()?;
    if r.pos != buf.len() {
        return Err(ModelIoError::InvalidField(format!(
            "{} trailing bytes after checksum",
            buf.len() - r.pos
        )));
    }
    let computed = crc32fast::hash(&buf[..crc_at]);
    if stored != computed {
        return Err(ModelIoError::ChecksumMismatch { stored, computed });
    }

    let v = vocab.len();
    if doc_vectors.rows() != n_docs || doc_vectors.cols() != config.dim {
        return Err(ModelIoError::InvalidField(format!(
            "doc matrix is {}x{}, expected {}x{}",
            doc_vectors.rows(),
            doc_vectors.cols(),
            n_docs,
            config.dim
        )));
    }
    if word_out.rows() != v || word_out.cols() != config.output_width() {
        return Err(ModelIoError::InvalidField(format!(
            "output matrix is {}x{}, expected {}x{}",
            word_out.rows(),
            word_out.cols(),
            v,
            config.output_width()
        )));
    }
    let word_in = if word_in.rows() == 0 && word_in.cols() == 0 {
        None
    } else {
        if word_in.rows() != v || word_in.cols() != config.dim {
            return Err(ModelIoError::InvalidField(format!(
                "word matrix is {}x{}, expected {}x{}",
                word_in.rows(),
                word_in.cols(),
                v,
                config.dim
            )));
        }
        Some(word_in)
    };
    if word_in.is_some() != config.uses_word_in() {
        return Err(ModelIoError::InvalidField(
            "word matrix presence disagrees with config".to_string(),
        ));
    }

    EmbeddingModel::from_parts(vocab, config, doc_vectors, word_in, word_out, subjects)
        .map_err(|e| ModelIoError::InvalidField(e.to_string()))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<EmbeddingModel, ModelIoError> {
    let path = path.as_ref();
    let buf = fs::read(path).map_err(io_err(path))?;
    decode(&buf)
}
