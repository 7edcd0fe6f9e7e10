//! Packed code files, version 1.
//!
//! Binary, little-endian:
//!
//! | offset | size | field                                  |
//! |--------|------|----------------------------------------|
//! | 0      | 8    | magic `DCMHCODE`                       |
//! | 8      | 4    | version (`u32`, = 1)                   |
//! | 12     | 4    | code length `c` (`u32`)                |
//! | 16     | 8    | point count `m` (`u64`)                |
//! | 24     | ...  | `m` codes of `ceil(c / 8)` bytes each  |
//!
//! Bit `k` of a code lives in byte `k / 8` at bit position `k % 8`
//! (least significant bit first). A set bit is `+1`, a clear bit `-1`;
//! unused high bits of the last byte are zero.
//!
//! Point ids go to a sidecar text file (`<path>.ids`), one decimal id per
//! line in code order.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::math::CodeMatrix;
use crate::retrieval::CodeDatabase;

pub const CODE_MAGIC: &[u8; 8] = b"DCMHCODE";
pub const CODE_VERSION: u32 = 1;
const HEADER_LEN: usize = 24;

/// Sidecar id list path for a code file.
pub fn ids_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".ids");
    PathBuf::from(s)
}

/// Serializes the packed codes (without ids).
pub fn write_codes(codes: &CodeMatrix) -> Vec<u8> {
    let c = codes.bits();
    let stride = c.div_ceil(8);
    let mut out = Vec::with_capacity(HEADER_LEN + stride * codes.points());
    out.extend_from_slice(CODE_MAGIC);
    out.extend_from_slice(&CODE_VERSION.to_le_bytes());
    out.extend_from_slice(&(c as u32).to_le_bytes());
    out.extend_from_slice(&(codes.points() as u64).to_le_bytes());
    for code in codes.columns() {
        let mut packed = vec![0u8; stride];
        for (k, &s) in code.iter().enumerate() {
            if s > 0 {
                packed[k / 8] |= 1 << (k % 8);
            }
        }
        out.extend_from_slice(&packed);
    }
    out
}

/// Parses packed codes; `path` is only used in diagnostics.
pub fn read_codes(bytes: &[u8], path: &Path) -> Result<CodeMatrix> {
    let err = |offset: usize, message: String| Error::Format {
        path: path.to_owned(),
        offset: offset as u64,
        message,
    };
    if bytes.len() < HEADER_LEN {
        return Err(err(bytes.len(), format!("truncated header ({} of {HEADER_LEN} bytes)", bytes.len())));
    }
    if &bytes[..8] != CODE_MAGIC {
        return Err(err(0, "bad magic, not a code file".into()));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != CODE_VERSION {
        return Err(err(8, format!("unsupported version {version}")));
    }
    let c = u32::from_le_bytes(bytes[12..16].try_into().expect("4 bytes")) as usize;
    if c == 0 {
        return Err(err(12, "code length is zero".into()));
    }
    let m = u64::from_le_bytes(bytes[16..24].try_into().expect("8 bytes"));
    let stride = c.div_ceil(8);
    let body = &bytes[HEADER_LEN..];
    let expected = (stride as u64).checked_mul(m);
    if expected != Some(body.len() as u64) {
        return Err(err(
            HEADER_LEN + body.len(),
            format!("body has {} bytes, header implies {m} codes of {stride} bytes", body.len()),
        ));
    }
    let mut signs = Vec::with_capacity(c * m as usize);
    for (j, chunk) in body.chunks_exact(stride).enumerate() {
        for k in 0..stride * 8 {
            let set = chunk[k / 8] >> (k % 8) & 1 == 1;
            if k < c {
                signs.push(if set { 1 } else { -1 });
            } else if set {
                return Err(err(HEADER_LEN + j * stride + k / 8, "padding bit set".into()));
            }
        }
    }
    CodeMatrix::from_columns_flat(c, m as usize, signs)
}

pub fn save_codes(db: &CodeDatabase, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, write_codes(&db.codes)).map_err(|e| Error::io(path, e))?;
    let ids: String = db.ids.iter().map(|id| format!("{id}\n")).collect();
    let sidecar = ids_path(path);
    fs::write(&sidecar, ids).map_err(|e| Error::io(sidecar, e))
}

pub fn load_codes(path: impl AsRef<Path>) -> Result<CodeDatabase> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let codes = read_codes(&bytes, path)?;
    let sidecar = ids_path(path);
    let text = fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
    let ids = text
        .lines()
        .enumerate()
        .map(|(i, l)| {
            l.trim().parse::<u64>().map_err(|_| Error::Parse {
                path: sidecar.clone(),
                line: i + 1,
                message: format!("bad id {l:?}"),
            })
        })
        .collect::<Result<Vec<u64>>>()?;
    CodeDatabase::new(codes, ids)
}
