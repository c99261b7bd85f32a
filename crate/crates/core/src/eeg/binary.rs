//! Little-endian binary trial-set format.
//!
//! ```text
//! magic "MIEEG1" | u16 version | u32 n_channels | u32 fs_hz | u32 n_trials
//! per trial: u8 label | u8 session_id | u16 len + UTF-8 subject_id
//!            | u32 n_samples | n_channels × n_samples f32, channel-major
//! ```

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::Array2;

use super::{ChannelSet, ClassLabel, DataError, Trial, TrialSet};

pub const MAGIC: &[u8; 6] = b"MIEEG1";
pub const VERSION: u16 = 1;

/// Upper bound on values per trial accepted from a header, so a corrupt
/// length field fails cleanly instead of attempting a huge allocation.
const MAX_TRIAL_VALUES: u64 = 1 << 31;

pub fn write_binary<W: Write>(set: &TrialSet, mut w: W) -> Result<(), DataError> {
    w.write_all(MAGIC)?;
    w.write_u16::<LittleEndian>(VERSION)?;
    w.write_u32::<LittleEndian>(set.channels().count() as u32)?;
    w.write_u32::<LittleEndian>(set.fs())?;
    w.write_u32::<LittleEndian>(set.len() as u32)?;
    for (i, t) in set.trials().iter().enumerate() {
        let subject = t.subject_id.as_bytes();
        let subject_len = u16::try_from(subject.len()).map_err(|_| DataError::MalformedTrial {
            trial: i,
            reason: "subject id longer than 65535 bytes".into(),
        })?;
        w.write_u8(t.label.id())?;
        w.write_u8(t.session_id)?;
        w.write_u16::<LittleEndian>(subject_len)?;
        w.write_all(subject)?;
        w.write_u32::<LittleEndian>(t.n_samples() as u32)?;
        for row in t.data.rows() {
            for &v in row {
                w.write_f32::<LittleEndian>(v as f32)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_binary<R: Read>(mut r: R) -> Result<TrialSet, DataError> {
    let mut magic = [0u8; 6];
    r.read_exact(&mut magic)
        .map_err(|_| DataError::MalformedHeader("file shorter than header".into()))?;
    if &magic != MAGIC {
        return Err(DataError::MalformedHeader(format!("bad magic {magic:?}")));
    }
    let header = |e: std::io::Error| DataError::MalformedHeader(format!("truncated header: {e}"));
    let version = r.read_u16::<LittleEndian>().map_err(header)?;
    if version != VERSION {
        return Err(DataError::UnsupportedVersion(version));
    }
    let n_channels = r.read_u32::<LittleEndian>().map_err(header)? as usize;
    let fs = r.read_u32::<LittleEndian>().map_err(header)?;
    let n_trials = r.read_u32::<LittleEndian>().map_err(header)? as usize;
    if n_channels == 0 {
        return Err(DataError::MalformedHeader("zero channels".into()));
    }
    if fs == 0 {
        return Err(DataError::MalformedHeader("zero sampling rate".into()));
    }
    if n_trials == 0 {
        return Err(DataError::NoTrials);
    }

    let mut trials = Vec::with_capacity(n_trials.min(4096));
    for i in 0..n_trials {
        let truncated = |e: std::io::Error| DataError::MalformedTrial {
            trial: i,
            reason: format!("truncated record: {e}"),
        };
        let label_id = r.read_u8().map_err(truncated)?;
        let label = ClassLabel::from_id(label_id)
            .ok_or(DataError::UnknownLabel { trial: i, label: label_id.to_string() })?;
        let session_id = r.read_u8().map_err(truncated)?;
        let subject_len = r.read_u16::<LittleEndian>().map_err(truncated)? as usize;
        let mut subject = vec![0u8; subject_len];
        r.read_exact(&mut subject).map_err(truncated)?;
        let subject_id = String::from_utf8(subject).map_err(|_| DataError::MalformedTrial {
            trial: i,
            reason: "subject id is not UTF-8".into(),
        })?;
        let n_samples = r.read_u32::<LittleEndian>().map_err(truncated)? as usize;
        if n_samples == 0 || (n_samples as u64) * (n_channels as u64) > MAX_TRIAL_VALUES {
            return Err(DataError::MalformedTrial {
                trial: i,
                reason: format!("implausible sample count {n_samples}"),
            });
        }
        let mut raw = vec![0f32; n_channels * n_samples];
        r.read_f32_into::<LittleEndian>(&mut raw).map_err(truncated)?;
        let data = Array2::from_shape_vec(
            (n_channels, n_samples),
            raw.into_iter().map(f64::from).collect(),
        )
        .expect("buffer sized from header");
        trials.push(Trial { data, fs, label, subject_id, session_id });
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(DataError::MalformedHeader(format!(
            "trailing bytes after {n_trials} declared trials"
        )));
    }
    TrialSet::new(ChannelSet::numbered(n_channels)?, fs, trials)
}
