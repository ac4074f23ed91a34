//! On-disk sample container (`.htds`): a fixed-layout header, row-major
//! little-endian f64 payload, and a trailing content hash so corrupt or
//! truncated files are rejected instead of silently loaded.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

const MAGIC: [u8; 4] = *b"HTDS";
const VERSION: u16 = 1;
/// magic + version + tag + reserved + n + width
const HEADER_LEN: usize = 4 + 2 + 1 + 1 + 8 + 8;

/// Sample layout discriminator stored in the file header.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyTag {
    LogisticPair = 1,
    RobustRegression = 2,
    QuadPlusSine = 3,
}

impl FamilyTag {
    fn from_byte(b: u8) -> Option<FamilyTag> {
        match b {
            1 => Some(FamilyTag::LogisticPair),
            2 => Some(FamilyTag::RobustRegression),
            3 => Some(FamilyTag::QuadPlusSine),
            _ => None,
        }
    }
}

/// An ordered list of n fixed-width sample rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    tag: FamilyTag,
    width: usize,
    values: Vec<f64>,
}

impl Dataset {
    /// `values` holds n rows of `width` entries each, row-major.
    pub fn new(tag: FamilyTag, width: usize, values: Vec<f64>) -> Result<Self> {
        if width < 1 {
            return Err(Error::invalid("dataset width must be >= 1"));
        }
        if values.is_empty() || !values.len().is_multiple_of(width) {
            return Err(Error::invalid(format!(
                "dataset values length {} is not a positive multiple of width {width}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("dataset entries must be finite"));
        }
        Ok(Dataset { tag, width, values })
    }

    pub fn tag(&self) -> FamilyTag {
        self.tag
    }

    pub fn n(&self) -> usize {
        self.values.len() / self.width
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.width..(i + 1) * self.width]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.width)
    }

    /// Copy of this dataset with row `i` swapped for `row`.
    pub fn with_row_replaced(&self, i: usize, row: &[f64]) -> Result<Dataset> {
        if i >= self.n() {
            return Err(Error::IndexOutOfRange { index: i, len: self.n() });
        }
        if row.len() != self.width {
            return Err(Error::DimensionMismatch { expected: self.width, got: row.len() });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("replacement row must be finite"));
        }
        let mut values = self.values.clone();
        values[i * self.width..(i + 1) * self.width].copy_from_slice(row);
        Ok(Dataset { tag: self.tag, width: self.width, values })
    }

    fn header_bytes(&self) -> Vec<u8> {
        let mut h = Vec::with_capacity(HEADER_LEN);
        h.extend_from_slice(&MAGIC);
        h.extend_from_slice(&VERSION.to_le_bytes());
        h.push(self.tag as u8);
        h.push(0);
        h.extend_from_slice(&(self.n() as u64).to_le_bytes());
        h.extend_from_slice(&(self.width as u64).to_le_bytes());
        h
    }

    /// 64-bit digest of header and payload; changes whenever any sample,
    /// the layout, or the family tag changes.
    pub fn content_hash(&self) -> u64 {
        let mut hasher = Sha256::new();
        hasher.update(self.header_bytes());
        for v in &self.values {
            hasher.update(v.to_le_bytes());
        }
        let digest = hasher.finalize();
        u64::from_le_bytes(digest[..8].try_into().expect("sha256 yields >= 8 bytes"))
    }

    /// Writes the container; a round trip through [`Dataset::load`] is
    /// bit-exact.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        file.write_all(&self.header_bytes())?;
        let mut payload = Vec::with_capacity(self.values.len() * 8);
        for v in &self.values {
            payload.extend_from_slice(&v.to_le_bytes());
        }
        file.write_all(&payload)?;
        file.write_all(&self.content_hash().to_le_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Dataset> {
        let path = path.as_ref();
        let malformed = |reason: &str| Error::MalformedDataset {
            path: Some(path.to_path_buf()),
            reason: reason.to_string(),
        };
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        if bytes.len() < HEADER_LEN + 8 {
            return Err(malformed("file shorter than header"));
        }
        if bytes[..4] != MAGIC {
            return Err(malformed("bad magic"));
        }
        let version = u16::from_le_bytes(bytes[4..6].try_into().unwrap());
        if version != VERSION {
            return Err(malformed(&format!("unsupported version {version}")));
        }
        let tag = FamilyTag::from_byte(bytes[6]).ok_or_else(|| malformed("unknown family tag"))?;
        let n = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
        let width = u64::from_le_bytes(bytes[16..24].try_into().unwrap()) as usize;
        let expected_len = HEADER_LEN
            .checked_add(n.checked_mul(width).and_then(|c| c.checked_mul(8)).ok_or_else(
                || malformed("size overflow"),
            )?)
            .and_then(|l| l.checked_add(8))
            .ok_or_else(|| malformed("size overflow"))?;
        if bytes.len() != expected_len {
            return Err(malformed(&format!(
                "expected {expected_len} bytes for n={n} width={width}, found {}",
                bytes.len()
            )));
        }
        let mut values = Vec::with_capacity(n * width);
        for chunk in bytes[HEADER_LEN..HEADER_LEN + n * width * 8].chunks_exact(8) {
            values.push(f64::from_le_bytes(chunk.try_into().unwrap()));
        }
        let dataset = Dataset::new(tag, width, values).map_err(|e| match e {
            Error::InvalidArgument(msg) => malformed(&msg),
            other => other,
        })?;
        let stored = u64::from_le_bytes(bytes[expected_len - 8..].try_into().unwrap());
        let computed = dataset.content_hash();
        if stored != computed {
            return Err(Error::HashMismatch { stored, computed });
        }
        Ok(dataset)
    }
}
