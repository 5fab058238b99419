use std::fs::File;
use std::path::Path;

use crate::{Error, Result, NUM_FEATURES, WINDOW_LEN};

/// Feature rows in storage order.
pub const FEATURE_NAMES: [&str; NUM_FEATURES] = ["sigma0", "mss", "swh", "sla", "month", "wind"];
pub const CSV_HEADER: &str = "sigma0,mss,swh,sla,month,wind,label";

/// Six feature rows over `N` along-track locations plus a binary label per
/// location (1 where a wave is present).
#[derive(Clone, Debug, PartialEq)]
pub struct AltimetryTrack {
    /// Row-major `[6, N]`.
    features: Vec<f64>,
    labels: Vec<u8>,
}

impl AltimetryTrack {
    pub fn new(features: Vec<f64>, labels: Vec<u8>) -> Result<Self> {
        let n = labels.len();
        if features.len() != NUM_FEATURES * n {
            return Err(Error::Shape(format!(
                "{} feature values for {n} locations",
                features.len()
            )));
        }
        if n < WINDOW_LEN {
            return Err(Error::Data(format!("track has {n} locations, need at least {WINDOW_LEN}")));
        }
        if let Some(i) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "non-finite {} at location {}",
                FEATURE_NAMES[i / n],
                i % n
            )));
        }
        if let Some(i) = labels.iter().position(|&l| l > 1) {
            return Err(Error::Data(format!("label {} at location {i} is not 0 or 1", labels[i])));
        }
        Ok(Self { features, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, feature: usize) -> &[f64] {
        let n = self.len();
        &self.features[feature * n..(feature + 1) * n]
    }

    pub(crate) fn row_mut(&mut self, feature: usize) -> &mut [f64] {
        let n = self.len();
        &mut self.features[feature * n..(feature + 1) * n]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }
}

fn data_err(path: &Path, msg: impl std::fmt::Display) -> Error {
    Error::Data(format!("{}: {msg}", path.display()))
}

/// Reads a track from a CSV file with header [`CSV_HEADER`].
pub fn load_csv(path: impl AsRef<Path>) -> Result<AltimetryTrack> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| data_err(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let expected: Vec<&str> = CSV_HEADER.split(',').collect();
    if header != expected {
        let missing: Vec<&str> = expected.iter().copied().filter(|c| !header.iter().any(|h| h == c)).collect();
        let extra: Vec<&str> = header.iter().map(String::as_str).filter(|h| !expected.contains(h)).collect();
        return Err(data_err(
            path,
            format!(
                "header must be \"{CSV_HEADER}\" (missing: [{}], unexpected: [{}])",
                missing.join(", "),
                extra.join(", ")
            ),
        ));
    }

    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); NUM_FEATURES];
    let mut labels = Vec::new();
    for (i, record) in reader.records().enumerate() {
        // header is line 1
        let line = i + 2;
        let record = record.map_err(|e| data_err(path, format!("line {line}: {e}")))?;
        if record.len() != expected.len() {
            return Err(data_err(path, format!("line {line}: expected 7 fields, found {}", record.len())));
        }
        for (f, column) in columns.iter_mut().enumerate() {
            let cell = &record[f];
            let value = if f == 4 {
                let month: u8 = cell
                    .parse()
                    .map_err(|_| data_err(path, format!("line {line}: month {cell:?} is not an integer")))?;
                if !(1..=12).contains(&month) {
                    return Err(data_err(path, format!("line {line}: month {month} outside 1-12")));
                }
                month as f64
            } else {
                cell.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| data_err(path, format!("line {line}: {} {cell:?} is not a finite number", FEATURE_NAMES[f])))?
            };
            column.push(value);
        }
        let label = match &record[6] {
            "0" => 0,
            "1" => 1,
            other => return Err(data_err(path, format!("line {line}: label {other:?} must be 0 or 1"))),
        };
        labels.push(label);
    }
    AltimetryTrack::new(columns.concat(), labels).map_err(|e| data_err(path, e))
}

/// Writes a track in the CSV schema read by [`load_csv`]. Values are written
/// in shortest round-trip form, so loading restores them bit for bit.
pub fn save_csv(track: &AltimetryTrack, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = csv::Writer::from_writer(file);
    let io = |e: csv::Error| data_err(path, e);
    writer.write_record(CSV_HEADER.split(',')).map_err(io)?;
    for i in 0..track.len() {
        let mut fields: Vec<String> = (0..NUM_FEATURES)
            .map(|f| {
                let v = track.row(f)[i];
                if f == 4 { format!("{}", v as u8) } else { format!("{v:?}") }
            })
            .collect();
        fields.push(track.labels()[i].to_string());
        writer.write_record(&fields).map_err(io)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}
