//! File formats.
//!
//! Tap tensors are little-endian binary:
//!
//! ```text
//! magic      4 bytes  "MMWC"
//! version    u32      1 = single channel, 2 = snapshot sequence
//! n_r        u32
//! n_t        u32
//! taps       u32      P
//! t_s        f64      sample period, s
//! tap_offset i64      grid index of the first tap relative to the direct-path delay
//! -- version 2 only --
//! snapshots  u32
//! period     f64      snapshot spacing, s
//! -- payload --
//! (re f64, im f64) x P x N_R x N_T per channel, tap-major then row-major;
//! version 2 repeats the payload once per snapshot.
//! ```
//!
//! Channel metadata goes to a JSON sidecar and Monte Carlo output to a
//! two-column CSV plus a per-trial JSON log.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelRealization, SampledChannel};
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::link::{CdfResult, LinkResult};

pub const MAGIC: &[u8; 4] = b"MMWC";
pub const VERSION_STATIC: u32 = 1;
pub const VERSION_SEQUENCE: u32 = 2;

/// Header fields shared by both tensor versions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TensorHeader {
    pub n_r: u32,
    pub n_t: u32,
    pub taps: u32,
    pub sample_period: f64,
    pub tap_offset: i64,
}

impl TensorHeader {
    fn of(ch: &SampledChannel) -> Result<Self> {
        let cast = |v: usize, what: &str| {
            u32::try_from(v).map_err(|_| Error::Format(format!("{what} {v} does not fit in u32")))
        };
        Ok(Self {
            n_r: cast(ch.n_r(), "N_R")?,
            n_t: cast(ch.n_t(), "N_T")?,
            taps: cast(ch.len(), "tap count")?,
            sample_period: ch.sample_period,
            tap_offset: ch.tap_offset,
        })
    }

    fn compatible(&self, ch: &SampledChannel) -> bool {
        ch.n_r() == self.n_r as usize
            && ch.n_t() == self.n_t as usize
            && ch.len() == self.taps as usize
            && ch.tap_offset == self.tap_offset
            && ch.sample_period.to_bits() == self.sample_period.to_bits()
    }
}

/// Contents of a tap-tensor file.
#[derive(Debug, Clone, PartialEq)]
pub enum TensorFile {
    Static(SampledChannel),
    Sequence {
        snapshots: Vec<SampledChannel>,
        snapshot_period: f64,
    },
}

fn write_header<W: Write>(w: &mut W, version: u32, h: &TensorHeader) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&version.to_le_bytes())?;
    w.write_all(&h.n_r.to_le_bytes())?;
    w.write_all(&h.n_t.to_le_bytes())?;
    w.write_all(&h.taps.to_le_bytes())?;
    w.write_all(&h.sample_period.to_le_bytes())?;
    w.write_all(&h.tap_offset.to_le_bytes())
}

fn write_payload<W: Write>(w: &mut W, ch: &SampledChannel) -> std::io::Result<()> {
    for tap in &ch.taps {
        for r in 0..tap.nrows() {
            for c in 0..tap.ncols() {
                let z = tap[(r, c)];
                w.write_all(&z.re.to_le_bytes())?;
                w.write_all(&z.im.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

pub fn write_tap_tensor<W: Write>(w: &mut W, ch: &SampledChannel) -> Result<()> {
    let h = TensorHeader::of(ch)?;
    let mut inner = || -> std::io::Result<()> {
        write_header(w, VERSION_STATIC, &h)?;
        write_payload(w, ch)
    };
    inner().map_err(|e| Error::io("<stream>", e))
}

pub fn write_snapshot_sequence<W: Write>(
    w: &mut W,
    snapshots: &[SampledChannel],
    snapshot_period: f64,
) -> Result<()> {
    let first = snapshots
        .first()
        .ok_or_else(|| Error::Format("snapshot sequence is empty".into()))?;
    let h = TensorHeader::of(first)?;
    if let Some(bad) = snapshots.iter().position(|s| !h.compatible(s)) {
        return Err(Error::Format(format!(
            "snapshot {bad} does not share the first snapshot's shape"
        )));
    }
    let count = u32::try_from(snapshots.len())
        .map_err(|_| Error::Format("too many snapshots".into()))?;
    let mut inner = || -> std::io::Result<()> {
        write_header(w, VERSION_SEQUENCE, &h)?;
        w.write_all(&count.to_le_bytes())?;
        w.write_all(&snapshot_period.to_le_bytes())?;
        for s in snapshots {
            write_payload(w, s)?;
        }
        Ok(())
    };
    inner().map_err(|e| Error::io("<stream>", e))
}

struct Cursor<R> {
    inner: R,
}

impl<R: Read> Cursor<R> {
    fn bytes<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner
            .read_exact(&mut buf)
            .map_err(|_| Error::Format(format!("truncated while reading {what}")))?;
        Ok(buf)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes(what)?))
    }

    fn i64(&mut self, what: &str) -> Result<i64> {
        Ok(i64::from_le_bytes(self.bytes(what)?))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes(what)?))
    }

    fn channel(&mut self, h: &TensorHeader) -> Result<SampledChannel> {
        let (n_r, n_t) = (h.n_r as usize, h.n_t as usize);
        let mut taps = Vec::with_capacity(h.taps as usize);
        for _ in 0..h.taps {
            let mut tap = DMatrix::<Complex64>::zeros(n_r, n_t);
            for r in 0..n_r {
                for c in 0..n_t {
                    let re = self.f64("payload")?;
                    let im = self.f64("payload")?;
                    tap[(r, c)] = Complex64::new(re, im);
                }
            }
            taps.push(tap);
        }
        Ok(SampledChannel {
            taps,
            sample_period: h.sample_period,
            tap_offset: h.tap_offset,
        })
    }
}

/// Reads either tensor version; trailing bytes are an error.
pub fn read_tap_tensor<R: Read>(r: R) -> Result<TensorFile> {
    let mut cur = Cursor { inner: r };
    if &cur.bytes::<4>("magic")? != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = cur.u32("version")?;
    let h = TensorHeader {
        n_r: cur.u32("N_R")?,
        n_t: cur.u32("N_T")?,
        taps: cur.u32("tap count")?,
        sample_period: cur.f64("sample period")?,
        tap_offset: cur.i64("tap offset")?,
    };
    let out = match version {
        VERSION_STATIC => TensorFile::Static(cur.channel(&h)?),
        VERSION_SEQUENCE => {
            let count = cur.u32("snapshot count")?;
            let snapshot_period = cur.f64("snapshot period")?;
            let snapshots = (0..count)
                .map(|_| cur.channel(&h))
                .collect::<Result<Vec<_>>>()?;
            TensorFile::Sequence {
                snapshots,
                snapshot_period,
            }
        }
        v => return Err(Error::Format(format!("unsupported version {v}"))),
    };
    let mut rest = [0u8; 1];
    match cur.inner.read(&mut rest) {
        Ok(0) => Ok(out),
        Ok(_) => Err(Error::Format("trailing bytes after payload".into())),
        Err(e) => Err(Error::io("<stream>", e)),
    }
}

pub fn read_tap_tensor_file(path: impl AsRef<Path>) -> Result<TensorFile> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_tap_tensor(BufReader::new(f))
}

/// Byte offset of the first payload value.
pub fn payload_offset(version: u32) -> usize {
    let base = 4 + 4 + 4 * 3 + 8 + 8;
    if version == VERSION_SEQUENCE {
        base + 4 + 8
    } else {
        base
    }
}

/// JSON sidecar written next to a tap tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelMetadata {
    pub seed: u64,
    pub stream_id: u64,
    pub n_r: usize,
    pub n_t: usize,
    pub gamma: f64,
    pub sample_period: f64,
    pub tap_offset: i64,
    pub taps: usize,
    /// Doppler per cluster ray, Hz (time-variant output only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dopplers: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub los_doppler: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    pub config: ScenarioConfig,
    pub realization: ChannelRealization,
}

/// Per-trial log of a Monte Carlo run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialLog {
    pub config: ScenarioConfig,
    pub trials: Vec<LinkResult>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn finish(path: &Path, mut w: BufWriter<File>) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn save_tap_tensor(path: impl AsRef<Path>, ch: &SampledChannel) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    write_tap_tensor(&mut w, ch).map_err(|e| relabel(e, path))?;
    finish(path, w)
}

pub fn save_snapshot_sequence(
    path: impl AsRef<Path>,
    snapshots: &[SampledChannel],
    snapshot_period: f64,
) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    write_snapshot_sequence(&mut w, snapshots, snapshot_period).map_err(|e| relabel(e, path))?;
    finish(path, w)
}

fn relabel(e: Error, path: &Path) -> Error {
    match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    }
}

pub fn save_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    finish(path, w)
}

/// CDF as CSV: header `spectral_efficiency_bits_s_hz,cdf`, one row per sample.
pub fn write_cdf_csv<W: Write>(w: &mut W, cdf: &CdfResult) -> std::io::Result<()> {
    writeln!(w, "spectral_efficiency_bits_s_hz,cdf")?;
    for (x, f) in cdf.samples.iter().zip(&cdf.cdf) {
        writeln!(w, "{x},{f}")?;
    }
    Ok(())
}

pub fn save_cdf_csv(path: impl AsRef<Path>, cdf: &CdfResult) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    write_cdf_csv(&mut w, cdf).map_err(|e| Error::io(path, e))?;
    finish(path, w)
}
