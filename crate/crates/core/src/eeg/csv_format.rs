//! CSV trial-set format: one row per (trial, channel).
//!
//! Header `subject,session,label,channel,s0,s1,...`. Consecutive rows form a
//! trial; the channel list is fixed by the first trial (it ends where the
//! first channel name repeats) and every later trial must list the same
//! channels in the same order. `label` is an id (0..=2) or a class name.

use std::io::{Read, Write};

use ndarray::Array2;

use super::{ChannelSet, ClassLabel, DataError, Trial, TrialSet};

const FIXED_COLUMNS: [&str; 4] = ["subject", "session", "label", "channel"];

struct Row {
    subject: String,
    session: u8,
    label: String,
    channel: String,
    values: Vec<f64>,
}

pub fn read_csv<R: Read>(r: R, fs: u32) -> Result<TrialSet, DataError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let headers = reader.headers()?.clone();
    if headers.len() <= FIXED_COLUMNS.len()
        || headers.iter().zip(FIXED_COLUMNS).any(|(h, want)| h.trim() != want)
    {
        return Err(DataError::MalformedHeader(
            "expected subject,session,label,channel,s0,...".into(),
        ));
    }
    for (k, h) in headers.iter().skip(FIXED_COLUMNS.len()).enumerate() {
        if h.trim() != format!("s{k}") {
            return Err(DataError::MalformedHeader(format!("column {} should be s{k}", k + 4)));
        }
    }
    let n_samples = headers.len() - FIXED_COLUMNS.len();

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        rows.push(record);
    }
    if rows.is_empty() {
        return Err(DataError::NoTrials);
    }

    // Channel list from the leading block.
    let first_channel = rows[0].get(3).unwrap_or_default().trim().to_string();
    let n_channels = rows
        .iter()
        .skip(1)
        .position(|r| r.get(3).map(str::trim) == Some(first_channel.as_str()))
        .map_or(rows.len(), |p| p + 1);
    let channel_names: Vec<String> =
        rows[..n_channels].iter().map(|r| r.get(3).unwrap_or_default().trim().to_string()).collect();
    let channels = ChannelSet::new(channel_names)?;

    let mut trials = Vec::new();
    for (trial, block) in rows.chunks(n_channels).enumerate() {
        if block.len() != n_channels {
            return Err(DataError::ChannelCountMismatch {
                trial,
                expected: n_channels,
                found: block.len(),
            });
        }
        let parsed = block
            .iter()
            .map(|rec| parse_row(rec, trial, n_samples))
            .collect::<Result<Vec<_>, _>>()?;
        let head = &parsed[0];
        for (c, row) in parsed.iter().enumerate() {
            if row.channel != channels.labels()[c] {
                return Err(DataError::MalformedTrial {
                    trial,
                    reason: format!("channel {:?} where {:?} expected", row.channel, channels.labels()[c]),
                });
            }
            if row.subject != head.subject || row.session != head.session || row.label != head.label {
                return Err(DataError::MalformedTrial {
                    trial,
                    reason: "subject/session/label differ between channel rows".into(),
                });
            }
        }
        let label = head
            .label
            .parse::<ClassLabel>()
            .map_err(|label| DataError::UnknownLabel { trial, label })?;
        let mut data = Array2::zeros((n_channels, n_samples));
        for (c, row) in parsed.iter().enumerate() {
            for (s, &v) in row.values.iter().enumerate() {
                data[[c, s]] = v;
            }
        }
        trials.push(Trial {
            data,
            fs,
            label,
            subject_id: head.subject.clone(),
            session_id: head.session,
        });
    }
    TrialSet::new(channels, fs, trials)
}

fn parse_row(rec: &csv::StringRecord, trial: usize, n_samples: usize) -> Result<Row, DataError> {
    let malformed = |reason: String| DataError::MalformedTrial { trial, reason };
    if rec.len() != n_samples + FIXED_COLUMNS.len() {
        return Err(malformed(format!("row has {} fields", rec.len())));
    }
    let session = rec[1]
        .trim()
        .parse::<u8>()
        .map_err(|_| malformed(format!("bad session id {:?}", &rec[1])))?;
    let values = rec
        .iter()
        .skip(FIXED_COLUMNS.len())
        .enumerate()
        .map(|(s, field)| {
            field.trim().parse::<f32>().map(f64::from).map_err(|_| {
                malformed(format!("sample s{s} is not a number: {field:?}"))
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Row {
        subject: rec[0].trim().to_string(),
        session,
        label: rec[2].trim().to_string(),
        channel: rec[3].trim().to_string(),
        values,
    })
}

pub fn write_csv<W: Write>(set: &TrialSet, w: W) -> Result<(), DataError> {
    let mut writer = csv::Writer::from_writer(w);
    let n_samples = set.trials().iter().map(Trial::n_samples).max().unwrap_or(0);
    if set.trials().iter().any(|t| t.n_samples() != n_samples) {
        return Err(DataError::MalformedTrial {
            trial: set.trials().iter().position(|t| t.n_samples() != n_samples).unwrap_or(0),
            reason: "CSV requires equal trial lengths".into(),
        });
    }
    let mut header: Vec<String> = FIXED_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend((0..n_samples).map(|k| format!("s{k}")));
    writer.write_record(&header)?;
    for t in set.trials() {
        for (c, row) in t.data.rows().into_iter().enumerate() {
            let mut record = vec![
                t.subject_id.clone(),
                t.session_id.to_string(),
                t.label.id().to_string(),
                set.channels().labels()[c].clone(),
            ];
            record.extend(row.iter().map(|&v| (v as f32).to_string()));
            writer.write_record(&record)?;
        }
    }
    writer.flush()?;
    Ok(())
}
