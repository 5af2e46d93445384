//! `safe-csv-1` recordings.
//!
//! ```text
//! # safe-csv-1
//! # seed=42
//! # source=sine preset=safe ...
//! # start_time=1970-01-01T00:00:00Z
//! # packet_anchor=end
//! # adc_bits=16
//! # ...remaining DeviceSpec fields...
//! # trigger=0.5,packet:12
//! frame_index,ch1,ch2,ch3,ch4,ch5,ch6,trigger,gap
//! 0,-0.125000,1.375000,0.250000,0.000000,-2.500000,0.625000,0,0
//! 41,,,,,,,0,1
//! ```
//!
//! Channel values are µV with six decimals. Frames of lost packets have
//! empty channel cells and `gap=1`; `trigger=1` marks epoch anchor frames.
//! Values are snapped back onto the ADC grid when read, so a write/read
//! round trip is exact.

use std::fmt::Write as _;
use std::ops::Range;
use std::path::{Path, PathBuf};

use eegchain_core::recording::RecordingError;
use eegchain_core::{ContiguousRecord, DeviceSpec, PacketAnchor, Recording, SessionMeta};
use thiserror::Error;

use crate::triggers::{format_event, parse_event};

pub const VERSION: &str = "safe-csv-1";
const VERSION_PREFIX: &str = "safe-csv-";

#[derive(Debug, Error)]
#[error("{}: {kind}", path.display())]
pub struct CsvError {
    pub path: PathBuf,
    pub kind: CsvErrorKind,
}

#[derive(Debug, Error)]
pub enum CsvErrorKind {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("first line is not a `# {VERSION}` tag")]
    MissingVersion,
    #[error("unknown format version `{0}`")]
    UnknownVersion(String),
    #[error("line {line}: malformed metadata: {reason}")]
    MalformedMetadata { line: usize, reason: String },
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("row {row}: expected {expected} fields, found {found}")]
    RaggedRow { row: usize, expected: usize, found: usize },
    #[error("row {row}: bad value `{text}` in column {column}")]
    BadValue { row: usize, column: String, text: String },
    #[error("row {row}: frame index {found}, expected {expected}")]
    FrameIndex { row: usize, expected: usize, found: usize },
    #[error("row {row}: gap flag disagrees with the channel cells")]
    GapMismatch { row: usize },
    #[error("row {row}: trigger flag disagrees with the trigger list")]
    TriggerMismatch { row: usize },
    #[error("cannot be written: {0}")]
    Unwritable(String),
    #[error(transparent)]
    Invalid(#[from] RecordingError),
}

impl CsvErrorKind {
    fn at(self, path: &Path) -> CsvError {
        CsvError { path: path.to_owned(), kind: self }
    }
}

/// DeviceSpec field names, in the order they are written.
const SPEC_KEYS: [&str; 8] = [
    "sample_rate_hz",
    "adc_step_uv",
    "adc_bits",
    "interchannel_skew_us",
    "channel_count",
    "frames_per_packet",
    "noise_sigma_uv",
    "loss_probability",
];

fn spec_values(spec: &DeviceSpec) -> [String; 8] {
    [
        format!("{:?}", spec.sample_rate_hz),
        format!("{:?}", spec.adc_step_uv),
        spec.adc_bits.to_string(),
        format!("{:?}", spec.interchannel_skew_us),
        spec.channel_count.to_string(),
        spec.frames_per_packet.to_string(),
        format!("{:?}", spec.noise_sigma_uv),
        format!("{:?}", spec.loss_probability),
    ]
}

fn single_line(what: &str, s: &str) -> Result<(), CsvErrorKind> {
    if s.contains(['\n', '\r']) {
        Err(CsvErrorKind::Unwritable(format!("{what} spans several lines")))
    } else {
        Ok(())
    }
}

/// Whole file as a string.
pub fn to_csv_string(rec: &Recording) -> Result<String, CsvErrorKind> {
    single_line("source", &rec.meta.source)?;
    single_line("start_time", &rec.meta.start_time)?;
    if !rec.record.unusable().is_empty() {
        return Err(CsvErrorKind::Unwritable("record carries filter-unusable segments".into()));
    }
    rec.validate()?;
    let n_ch = rec.spec.channel_count;
    let total = rec.record.total_frames();
    let mut out = String::with_capacity(64 * (total + 16));
    let _ = writeln!(out, "# {VERSION}");
    let _ = writeln!(out, "# seed={}", rec.meta.seed);
    let _ = writeln!(out, "# source={}", rec.meta.source);
    let _ = writeln!(out, "# start_time={}", rec.meta.start_time);
    let _ = writeln!(out, "# packet_anchor={}", rec.meta.packet_anchor.as_str());
    for (k, v) in SPEC_KEYS.iter().zip(spec_values(&rec.spec)) {
        let _ = writeln!(out, "# {k}={v}");
    }
    for t in &rec.triggers {
        let _ = writeln!(out, "# trigger={}", format_event(t));
    }
    out.push_str("frame_index");
    for c in 1..=n_ch {
        let _ = write!(out, ",ch{c}");
    }
    out.push_str(",trigger,gap\n");

    let mut anchors = vec![false; total];
    for a in rec.anchor_frames() {
        if a < total {
            anchors[a] = true;
        }
    }
    for (i, &anchor) in anchors.iter().enumerate() {
        let _ = write!(out, "{i}");
        let gap = rec.record.in_gap(i);
        for c in 0..n_ch {
            out.push(',');
            if !gap {
                let v = rec.record.channel(c)[i];
                if !v.is_finite() {
                    return Err(CsvErrorKind::Unwritable(format!("frame {i} channel {} is not finite", c + 1)));
                }
                let _ = write!(out, "{v:.6}");
            }
        }
        let _ = writeln!(out, ",{},{}", u8::from(anchor), u8::from(gap));
    }
    Ok(out)
}

pub fn write_csv(rec: &Recording, path: &Path) -> Result<(), CsvError> {
    let text = to_csv_string(rec).map_err(|k| k.at(path))?;
    std::fs::write(path, text).map_err(|e| CsvErrorKind::Io(e).at(path))
}

pub fn read_csv(path: &Path) -> Result<Recording, CsvError> {
    let text = std::fs::read_to_string(path).map_err(|e| CsvErrorKind::Io(e).at(path))?;
    from_csv_str(&text).map_err(|k| k.at(path))
}

/// The version tag of a file, if its first line carries one.
pub fn version_of(text: &str) -> Option<&str> {
    text.lines().next()?.strip_prefix("# ").filter(|v| v.starts_with(VERSION_PREFIX)).map(str::trim)
}

struct Meta {
    seed: Option<u64>,
    source: Option<String>,
    start_time: Option<String>,
    packet_anchor: Option<PacketAnchor>,
    spec: Vec<(String, String)>,
    triggers: Vec<eegchain_core::TriggerEvent>,
}

fn parse_meta(line: usize, body: &str, meta: &mut Meta) -> Result<(), CsvErrorKind> {
    let bad = |reason: String| CsvErrorKind::MalformedMetadata { line, reason };
    let (key, value) = body.split_once('=').ok_or_else(|| bad(format!("`{body}` is not key=value")))?;
    match key {
        "seed" => meta.seed = Some(value.parse().map_err(|_| bad(format!("bad seed `{value}`")))?),
        "source" => meta.source = Some(value.to_owned()),
        "start_time" => meta.start_time = Some(value.to_owned()),
        "packet_anchor" => {
            meta.packet_anchor =
                Some(PacketAnchor::parse(value).ok_or_else(|| bad(format!("bad packet anchor `{value}`")))?)
        }
        "trigger" => meta.triggers.push(parse_event(value).ok_or_else(|| bad(format!("bad trigger `{value}`")))?),
        k if SPEC_KEYS.contains(&k) => {
            if meta.spec.iter().any(|(seen, _)| seen == k) {
                return Err(bad(format!("duplicate key `{k}`")));
            }
            meta.spec.push((k.to_owned(), value.to_owned()))
        }
        k => return Err(bad(format!("unknown key `{k}`"))),
    }
    Ok(())
}

fn build_spec(fields: &[(String, String)]) -> Result<DeviceSpec, CsvErrorKind> {
    let missing: Vec<&str> = SPEC_KEYS.iter().copied().filter(|k| !fields.iter().any(|(f, _)| f == k)).collect();
    if !missing.is_empty() {
        return Err(CsvErrorKind::MalformedHeader(format!("missing device fields: {}", missing.join(", "))));
    }
    let doc: String = fields.iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
    toml::from_str(&doc).map_err(|e| CsvErrorKind::MalformedHeader(format!("device fields: {}", e.message())))
}

/// Gap frames split at packet boundaries: one interval per lost packet.
fn gap_intervals(flags: &[bool], fpp: usize) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < flags.len() {
        if flags[i] {
            let end = ((i / fpp + 1) * fpp).min(flags.len());
            let mut j = i;
            while j < end && flags[j] {
                j += 1;
            }
            out.push(i..j);
            i = j;
        } else {
            i += 1;
        }
    }
    out
}

pub fn from_csv_str(text: &str) -> Result<Recording, CsvErrorKind> {
    let mut lines = text.split('\n').enumerate().map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)));
    match lines.next() {
        Some((_, first)) => match first.strip_prefix("# ").map(str::trim) {
            Some(VERSION) => {}
            Some(v) if v.starts_with(VERSION_PREFIX) => return Err(CsvErrorKind::UnknownVersion(v.to_owned())),
            _ => return Err(CsvErrorKind::MissingVersion),
        },
        None => return Err(CsvErrorKind::MissingVersion),
    }

    let mut meta =
        Meta { seed: None, source: None, start_time: None, packet_anchor: None, spec: vec![], triggers: vec![] };
    let header = loop {
        match lines.next() {
            Some((n, l)) if l.starts_with('#') => parse_meta(n, l.trim_start_matches('#').trim_start(), &mut meta)?,
            Some((_, l)) => break l,
            None => return Err(CsvErrorKind::MalformedHeader("no column header".into())),
        }
    };
    let spec = build_spec(&meta.spec)?;
    let n_ch = spec.channel_count;
    let mut expected_header = String::from("frame_index");
    for c in 1..=n_ch {
        let _ = write!(expected_header, ",ch{c}");
    }
    expected_header.push_str(",trigger,gap");
    if header != expected_header {
        return Err(CsvErrorKind::MalformedHeader(format!("expected `{expected_header}`, found `{header}`")));
    }
    let session = SessionMeta {
        seed: meta.seed.ok_or_else(|| CsvErrorKind::MalformedHeader("missing seed".into()))?,
        source: meta.source.unwrap_or_default(),
        start_time: meta.start_time.unwrap_or_default(),
        packet_anchor: meta.packet_anchor.unwrap_or_default(),
    };

    let fields = n_ch + 3;
    let mut channels: Vec<Vec<f64>> = vec![Vec::new(); n_ch];
    let mut gap_flags = Vec::new();
    let mut trigger_flags = Vec::new();
    let mut flag_rows = Vec::new();
    let flag = |row: usize, column: &str, s: &str| match s {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => Err(CsvErrorKind::BadValue { row, column: column.into(), text: s.into() }),
    };
    for (row, line) in lines {
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != fields {
            return Err(CsvErrorKind::RaggedRow { row, expected: fields, found: cells.len() });
        }
        let index: usize = cells[0].parse().map_err(|_| CsvErrorKind::BadValue {
            row,
            column: "frame_index".into(),
            text: cells[0].into(),
        })?;
        if index != gap_flags.len() {
            return Err(CsvErrorKind::FrameIndex { row, expected: gap_flags.len(), found: index });
        }
        let trigger = flag(row, "trigger", cells[n_ch + 1])?;
        let gap = flag(row, "gap", cells[n_ch + 2])?;
        for (c, cell) in cells[1..=n_ch].iter().enumerate() {
            let v = match (gap, cell.is_empty()) {
                (true, true) => f64::NAN,
                (false, false) => {
                    let parsed: f64 = cell.parse().map_err(|_| CsvErrorKind::BadValue {
                        row,
                        column: format!("ch{}", c + 1),
                        text: (*cell).into(),
                    })?;
                    snap(parsed, &spec)
                }
                _ => return Err(CsvErrorKind::GapMismatch { row }),
            };
            channels[c].push(v);
        }
        gap_flags.push(gap);
        trigger_flags.push(trigger);
        flag_rows.push(row);
    }
    let total = gap_flags.len();
    let gaps = gap_intervals(&gap_flags, spec.frames_per_packet);
    let record = ContiguousRecord::new(channels, total, gaps);
    let rec = Recording::new(spec, record, meta.triggers, session)?;

    let mut anchors = vec![false; total];
    for a in rec.anchor_frames() {
        if a < total {
            anchors[a] = true;
        }
    }
    if let Some(i) = (0..total).find(|&i| anchors[i] != trigger_flags[i]) {
        return Err(CsvErrorKind::TriggerMismatch { row: flag_rows[i] });
    }
    Ok(rec)
}

/// Back onto the ADC grid when the text is a rounded grid value.
fn snap(v: f64, spec: &DeviceSpec) -> f64 {
    let code = (v / spec.adc_step_uv).round();
    let snapped = spec.code_to_uv(code as i64);
    if (snapped - v).abs() <= 0.5e-6 {
        snapped
    } else {
        v
    }
}
