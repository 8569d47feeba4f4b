//! File formats: measurement, history, reflectivity and results CSVs, a
//! flat binary complex matrix, and 8-bit PGM magnitude images.
//!
//! Every writer takes a [`ContentHash`] and embeds it, as a `# config_sha256=`
//! comment line in text formats and as a raw 32-byte field in the binary
//! matrix header.

use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::forward::{CorrelationMode, Measurement, SamplingGrid};
use crate::linalg::{CMatrix, C64};
use crate::metrics::ResultsRow;
use crate::solver::IterationRecord;

/// SHA-256 digest used to tie output files to the configuration that made them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ContentHash(pub [u8; 32]);

impl ContentHash {
    pub fn of(bytes: &[u8]) -> Self {
        Self(Sha256::digest(bytes).into())
    }

    pub fn hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        let mut out = [0u8; 32];
        hex::decode_to_slice(s.trim(), &mut out)
            .map_err(|e| Error::Parse(format!("bad hash `{s}`: {e}")))?;
        Ok(Self(out))
    }
}

impl std::fmt::Display for ContentHash {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.hex())
    }
}

const HASH_PREFIX: &str = "# config_sha256=";

fn write_hash_line<W: Write>(w: &mut W, hash: &ContentHash) -> Result<()> {
    writeln!(w, "{HASH_PREFIX}{hash}")?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

fn csv_reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(r)
}

/// Reads the hash comment from the first line of a text artifact, if present.
pub fn read_hash_line<R: BufRead>(r: &mut R) -> Result<Option<ContentHash>> {
    let mut line = String::new();
    r.read_line(&mut line)?;
    match line.trim_end().strip_prefix(HASH_PREFIX) {
        Some(h) => Ok(Some(ContentHash::from_hex(h)?)),
        None => Ok(None),
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct MeasurementRow {
    m: usize,
    p: usize,
    omega_rad_s: f64,
    s_param: f64,
    re: f64,
    im: f64,
}

/// Columns `m,p,omega_rad_s,s_param,re,im`, slow-time major.
pub fn write_measurement_csv<W: Write>(
    mut w: W,
    meas: &Measurement,
    hash: &ContentHash,
) -> Result<()> {
    write_hash_line(&mut w, hash)?;
    let omegas = meas.sampling.frequencies();
    let slow = meas.sampling.slow_times();
    let mut out = csv_writer(w);
    for (r, v) in meas.values.iter().enumerate() {
        let (m, p) = meas.sampling.row_indices(r);
        out.serialize(MeasurementRow {
            m,
            p,
            omega_rad_s: omegas[m],
            s_param: slow[p],
            re: v.re,
            im: v.im,
        })
        .map_err(csv_error)?;
    }
    out.flush()?;
    Ok(())
}

/// Inverse of [`write_measurement_csv`]. Rows may come in any order; every
/// `(m, p)` must appear once and its `omega_rad_s`/`s_param` must match
/// `sampling` to 1e-9 relative.
pub fn read_measurement_csv<R: Read>(
    r: R,
    sampling: &SamplingGrid,
    mode: CorrelationMode,
) -> Result<Measurement> {
    let omegas = sampling.frequencies();
    let slow = sampling.slow_times();
    let n = sampling.num_samples();
    let mut values = vec![None; n];
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0);
    for (line, row) in csv_reader(r).deserialize::<MeasurementRow>().enumerate() {
        let row = row.map_err(csv_error)?;
        if row.m >= omegas.len() || row.p >= slow.len() {
            return Err(Error::Parse(format!(
                "measurement row {line}: index ({}, {}) outside the {}x{} grid",
                row.m,
                row.p,
                omegas.len(),
                slow.len()
            )));
        }
        if !close(row.omega_rad_s, omegas[row.m]) || !close(row.s_param, slow[row.p]) {
            return Err(Error::Parse(format!(
                "measurement row {line}: sample ({}, {}) does not match the sampling grid",
                row.omega_rad_s, row.s_param
            )));
        }
        let slot = &mut values[sampling.row(row.m, row.p)];
        if slot.is_some() {
            return Err(Error::Parse(format!(
                "duplicate sample ({}, {})",
                row.m, row.p
            )));
        }
        *slot = Some(C64::new(row.re, row.im));
    }
    let missing = values.iter().filter(|v| v.is_none()).count();
    if missing > 0 {
        return Err(Error::Parse(format!(
            "{missing} measurement samples missing"
        )));
    }
    Measurement::new(
        values.into_iter().flatten().collect(),
        sampling.clone(),
        mode,
    )
}

#[derive(Debug, Serialize)]
struct HistoryRow {
    iteration: usize,
    trace: f64,
    rank: usize,
    #[serde(rename = "E_d")]
    data_error: Option<f64>,
}

/// Columns `iteration,trace,rank,E_d`; `E_d` is empty for zero data.
pub fn write_history_csv<W: Write>(
    mut w: W,
    history: &[IterationRecord],
    hash: &ContentHash,
) -> Result<()> {
    write_hash_line(&mut w, hash)?;
    let mut out = csv_writer(w);
    for h in history {
        out.serialize(HistoryRow {
            iteration: h.iteration,
            trace: h.trace,
            rank: h.rank,
            data_error: h.data_error,
        })
        .map_err(csv_error)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct ComplexRow {
    re: f64,
    im: f64,
}

/// Columns `re,im`, one row per pixel in row-major order.
pub fn write_complex_csv<W: Write>(mut w: W, values: &[C64], hash: &ContentHash) -> Result<()> {
    write_hash_line(&mut w, hash)?;
    let mut out = csv_writer(w);
    for v in values {
        out.serialize(ComplexRow { re: v.re, im: v.im })
            .map_err(csv_error)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads `re,im` rows; the header line is required, comments are skipped.
pub fn read_complex_csv<R: Read>(r: R) -> Result<Vec<C64>> {
    csv_reader(r)
        .deserialize::<ComplexRow>()
        .map(|row| row.map(|c| C64::new(c.re, c.im)).map_err(csv_error))
        .collect()
}

/// Results table mirroring the reconstruction table columns.
pub fn write_results_csv<W: Write>(
    mut w: W,
    rows: &[ResultsRow],
    hash: &ContentHash,
) -> Result<()> {
    write_hash_line(&mut w, hash)?;
    let mut out = csv_writer(w);
    for r in rows {
        out.serialize(r).map_err(csv_error)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_results_csv<R: Read>(r: R) -> Result<Vec<ResultsRow>> {
    csv_reader(r)
        .deserialize::<ResultsRow>()
        .map(|row| row.map_err(csv_error))
        .collect()
}

/// Binary matrix magic.
pub const MATRIX_MAGIC: &[u8; 8] = b"LRMRCPLX";
pub const MATRIX_VERSION: u32 = 1;

/// Flat little-endian complex matrix:
///
/// | bytes | field |
/// |-------|-------|
/// | 8     | magic `LRMRCPLX` |
/// | 4     | version (u32, 1) |
/// | 4     | bytes per real component (u32, 8 = f64, 4 = f32) |
/// | 8     | rows (u64) |
/// | 8     | cols (u64) |
/// | 32    | config SHA-256 |
/// | ...   | row-major `(re, im)` pairs |
///
/// This writer always emits f64 components.
pub fn write_matrix_binary<W: Write>(mut w: W, m: &CMatrix, hash: &ContentHash) -> Result<()> {
    w.write_all(MATRIX_MAGIC)?;
    w.write_all(&MATRIX_VERSION.to_le_bytes())?;
    w.write_all(&8u32.to_le_bytes())?;
    w.write_all(&(m.nrows() as u64).to_le_bytes())?;
    w.write_all(&(m.ncols() as u64).to_le_bytes())?;
    w.write_all(&hash.0)?;
    let mut buf = Vec::with_capacity(m.len() * 16);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

/// Reads either component width written in the [`write_matrix_binary`] layout.
pub fn read_matrix_binary<R: Read>(mut r: R) -> Result<(CMatrix, ContentHash)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MATRIX_MAGIC {
        return Err(Error::Parse("not an LRMRCPLX matrix file".into()));
    }
    let mut u32b = [0u8; 4];
    let mut u64b = [0u8; 8];
    r.read_exact(&mut u32b)?;
    let version = u32::from_le_bytes(u32b);
    if version != MATRIX_VERSION {
        return Err(Error::Parse(format!(
            "unsupported matrix file version {version}"
        )));
    }
    r.read_exact(&mut u32b)?;
    let width = u32::from_le_bytes(u32b);
    if width != 4 && width != 8 {
        return Err(Error::Parse(format!("unsupported component width {width}")));
    }
    r.read_exact(&mut u64b)?;
    let rows = u64::from_le_bytes(u64b) as usize;
    r.read_exact(&mut u64b)?;
    let cols = u64::from_le_bytes(u64b) as usize;
    let mut hash = [0u8; 32];
    r.read_exact(&mut hash)?;
    let count = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(2 * width as usize))
        .ok_or_else(|| Error::Parse("matrix dimensions overflow".into()))?;
    let mut data = vec![0u8; count];
    r.read_exact(&mut data)?;
    let comps: Vec<f64> = match width {
        8 => data
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect(),
        _ => data
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("chunk of 4")) as f64)
            .collect(),
    };
    let m = CMatrix::from_fn(rows, cols, |i, j| {
        let at = 2 * (i * cols + j);
        C64::new(comps[at], comps[at + 1])
    });
    Ok((m, ContentHash(hash)))
}

/// Binary `P5` PGM of `|values|`, `width` columns, first row on top.
/// Magnitudes are scaled linearly so the largest maps to 255 (an all-zero
/// image stays black); levels are rounded to nearest.
pub fn write_magnitude_pgm<W: Write>(
    mut w: W,
    values: &[C64],
    width: usize,
    hash: &ContentHash,
) -> Result<()> {
    if width == 0 || !values.len().is_multiple_of(width) {
        return Err(Error::Dimension {
            context: "PGM width",
            expected: values.len(),
            found: width,
        });
    }
    let height = values.len() / width;
    let peak = values.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    let pixels: Vec<u8> = values
        .iter()
        .map(|v| {
            if peak > 0.0 {
                (255.0 * v.norm() / peak).round().clamp(0.0, 255.0) as u8
            } else {
                0
            }
        })
        .collect();
    write!(w, "P5\n{HASH_PREFIX}{hash}\n{width} {height}\n255\n")?;
    w.write_all(&pixels)?;
    Ok(())
}

/// `(width, height, pixels)` from a `P5` PGM written by [`write_magnitude_pgm`].
pub fn read_pgm<R: BufRead>(mut r: R) -> Result<(usize, usize, Vec<u8>)> {
    let mut fields = Vec::new();
    while fields.len() < 4 {
        let mut line = String::new();
        if r.read_line(&mut line)? == 0 {
            return Err(Error::Parse("truncated PGM header".into()));
        }
        if line.starts_with('#') {
            continue;
        }
        fields.extend(line.split_whitespace().map(str::to_string));
    }
    if fields[0] != "P5" || fields[3] != "255" {
        return Err(Error::Parse("only 8-bit P5 PGM is supported".into()));
    }
    let parse = |s: &str| {
        s.parse::<usize>()
            .map_err(|e| Error::Parse(format!("PGM size: {e}")))
    };
    let (width, height) = (parse(&fields[1])?, parse(&fields[2])?);
    let mut pixels = vec![0u8; width * height];
    r.read_exact(&mut pixels)?;
    Ok((width, height, pixels))
}
