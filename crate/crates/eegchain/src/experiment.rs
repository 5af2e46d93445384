//! End-to-end runs of the sine-sweep and VEP experiments, and re-analysis of
//! their recordings from disk.
//!
//! Everything a report needs is recorded in the `source` description of each
//! recording (`key=value` tokens), so [`analyze`] needs no configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use eegchain_core::analysis::stats::{mean, std_dev, Metric};
use eegchain_core::analysis::{analyze_sine, analyze_vep, compare_arms, SineOptions, VepAnalysis, VepOptions};
use eegchain_core::rng::derive_seed;
use eegchain_core::siggen::{gen_sinusoid, gen_vep_session, Delayed, Sinusoid, VepTemplate};
use eegchain_core::transport::{packet_count, packetize, reassemble, transmit};
use eegchain_core::trigger::{flag_trigger_packets, jitter_triggers, label_packet_granular, label_sample_accurate};
use eegchain_core::{
    run_acquisition, DeviceSpec, Packet, PacketAnchor, PacketLossReport, Recording, SessionMeta, SignalSource,
    TriggerEvent, TriggerLabel,
};
use rayon::prelude::*;

use crate::capture::write_capture;
use crate::config::{ExperimentConfig, Preset};
use crate::csv::{read_csv, write_csv};
use crate::error::{Error, FileProblem, Result};
use crate::report::{
    ArmSummary, MetricRow, SineReport, SineRow, Sweep, VepReport, SINE_REPORT, SINE_SUMMARY, VEP_REPORT, VEP_SUMMARY,
};
use crate::triggers::write_triggers;

const SINE_STREAM: u64 = 1;
const VEP_BACKGROUND_STREAM: u64 = 2;
const VEP_ARM_STREAM: u64 = 3;

/// One simulated session and where it goes on disk.
#[derive(Debug, Clone)]
pub struct Session {
    /// Path relative to the output directory, without extension.
    pub name: String,
    pub recording: Recording,
    /// Received packets, kept only when capture files are requested.
    pub packets: Option<Vec<Packet>>,
}

#[derive(Debug, Clone)]
pub struct SineRun {
    pub sessions: Vec<Session>,
    pub report: SineReport,
}

#[derive(Debug, Clone)]
pub struct VepRun {
    pub sessions: Vec<Session>,
    pub report: VepReport,
}

/// `key=value` tokens after a leading kind word.
#[derive(Debug, Clone, PartialEq)]
struct Description {
    kind: String,
    fields: BTreeMap<String, String>,
}

impl Description {
    fn parse(s: &str) -> Option<Self> {
        let mut words = s.split_whitespace();
        let kind = words.next()?.to_owned();
        let fields = words
            .map(|w| w.split_once('=').map(|(k, v)| (k.to_owned(), v.to_owned())))
            .collect::<Option<BTreeMap<_, _>>>()?;
        Some(Self { kind, fields })
    }

    fn get(&self, key: &str) -> std::result::Result<&str, String> {
        self.fields.get(key).map(String::as_str).ok_or_else(|| format!("source description lacks `{key}`"))
    }

    fn num<T: std::str::FromStr>(&self, key: &str) -> std::result::Result<T, String> {
        let v = self.get(key)?;
        v.parse().map_err(|_| format!("source description has a bad `{key}`: `{v}`"))
    }
}

fn join_f64(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

fn split_f64(s: &str) -> std::result::Result<Vec<f64>, String> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(|v| v.parse().map_err(|_| format!("bad number `{v}`"))).collect()
}

struct SineCondition {
    sweep: Sweep,
    index: usize,
    amplitude_uv: f64,
    freq_hz: f64,
}

fn sine_conditions(config: &ExperimentConfig) -> Vec<SineCondition> {
    let s = &config.sine;
    let freq = s.frequencies_hz.iter().map(|&f| (Sweep::Frequency, s.frequency_sweep_amplitude_uv, f));
    let amp = s.amplitudes_uv.iter().map(|&a| (Sweep::Amplitude, a, s.amplitude_sweep_frequency_hz));
    freq.chain(amp)
        .enumerate()
        .map(|(index, (sweep, amplitude_uv, freq_hz))| SineCondition { sweep, index, amplitude_uv, freq_hz })
        .collect()
}

fn preset_index(p: Preset) -> u64 {
    match p {
        Preset::Safe => 0,
        Preset::Reference => 1,
    }
}

/// Acquire, packetize, drop and reassemble.
fn transmit_session<S: SignalSource + ?Sized>(
    src: &S,
    spec: &DeviceSpec,
    duration_s: f64,
    seed: u64,
    flash_times: Option<&[f64]>,
) -> Result<(eegchain_core::ContiguousRecord, Vec<Packet>)> {
    let frames = run_acquisition(src, spec, duration_s, derive_seed(seed, 0)).map_err(Error::simulation)?;
    let mut packets = packetize(&frames, spec).map_err(Error::simulation)?;
    if let Some(times) = flash_times {
        flag_trigger_packets(&mut packets, times, spec);
    }
    let received = transmit(&packets, spec.loss_probability, derive_seed(seed, 1));
    let record = reassemble(&received, spec, frames.len()).map_err(Error::simulation)?;
    Ok((record, received))
}

fn sine_session(config: &ExperimentConfig, seed: u64, preset: Preset, c: &SineCondition) -> Result<Session> {
    let s = &config.sine;
    let spec = config.spec(preset);
    let src = if s.quantize_dac {
        gen_sinusoid(c.amplitude_uv, c.freq_hz, s.dac, s.duration_s).map_err(Error::simulation)?
    } else {
        Sinusoid {
            amplitude_uv: c.amplitude_uv,
            freq_hz: c.freq_hz,
            phase_rad: 0.0,
            dac: None,
            duration_s: s.duration_s,
        }
    };
    let session_seed = derive_seed(derive_seed(seed, SINE_STREAM), 2 * c.index as u64 + preset_index(preset));
    let (record, received) = transmit_session(&src, spec, s.duration_s, session_seed, None)?;
    let source = format!(
        "sine preset={preset} sweep={} condition={} amplitude_uv={} freq_hz={} dac={} cutoff_hz={} max_epochs={} k_mad={}",
        c.sweep.as_str(),
        c.index,
        c.amplitude_uv,
        c.freq_hz,
        if s.quantize_dac { "on" } else { "off" },
        s.cutoff_hz,
        s.max_epochs,
        s.k_mad
    );
    let meta =
        SessionMeta { seed, source, start_time: config.start_time.clone(), packet_anchor: PacketAnchor::default() };
    let recording = Recording::new(spec.clone(), record, Vec::new(), meta).map_err(Error::simulation)?;
    Ok(Session {
        name: format!("sine/{preset}_{:02}", c.index),
        recording,
        packets: config.write_capture.then_some(received),
    })
}

/// Analysis of one sine recording, driven by its source description.
pub fn sine_row(rec: &Recording) -> std::result::Result<SineRow, String> {
    let d = Description::parse(&rec.meta.source).filter(|d| d.kind == "sine").ok_or("not a sine recording")?;
    let preset = Preset::parse(d.get("preset")?).ok_or("bad preset")?;
    let sweep = Sweep::parse(d.get("sweep")?).ok_or("bad sweep")?;
    let amplitude_uv: f64 = d.num("amplitude_uv")?;
    let freq_hz: f64 = d.num("freq_hz")?;
    let opts = SineOptions { cutoff_hz: d.num("cutoff_hz")?, max_epochs: d.num("max_epochs")?, k_mad: d.num("k_mad")? };
    let analysis =
        analyze_sine(&rec.record, rec.spec.sample_rate_hz, amplitude_uv, freq_hz, &opts).map_err(|e| e.to_string())?;
    let rmse = analysis.rmse_values();
    let loss = PacketLossReport::from_record(&rec.record, &rec.spec).map_err(|e| e.to_string())?;
    Ok(SineRow {
        preset,
        sweep,
        condition: d.num("condition")?,
        amplitude_uv,
        freq_hz,
        epochs: rmse.len(),
        rejected: analysis.channels.iter().map(|c| c.rejected).sum(),
        rmse_mean_uv: if rmse.is_empty() { f64::NAN } else { mean(&rmse) },
        rmse_std_uv: std_dev(&rmse),
        packets_expected: loss.expected,
        packets_received: loss.received,
    })
}

fn sine_report(mut rows: Vec<SineRow>) -> SineReport {
    rows.sort_by_key(|r| (r.preset, r.condition));
    SineReport { rows }
}

/// Every condition of both sweeps on every configured preset.
pub fn run_sine_experiment(config: &ExperimentConfig) -> Result<SineRun> {
    config.validate()?;
    let seed = config.require_seed()?;
    let conditions = sine_conditions(config);
    let jobs: Vec<(Preset, &SineCondition)> =
        config.active_presets().into_iter().flat_map(|p| conditions.iter().map(move |c| (p, c))).collect();
    let done = jobs
        .par_iter()
        .map(|&(preset, c)| {
            let session = sine_session(config, seed, preset, c)?;
            let row = sine_row(&session.recording)
                .map_err(|message| Error::Inconsistent { context: session.name.clone(), message })?;
            Ok((session, row))
        })
        .collect::<Result<Vec<_>>>()?;
    let (sessions, rows): (Vec<_>, Vec<_>) = done.into_iter().unzip();
    Ok(SineRun { sessions, report: sine_report(rows) })
}

fn vep_source(config: &ExperimentConfig, preset: Preset, flash_count: usize) -> String {
    let v = &config.vep;
    format!(
        "vep arm={preset} flash_rate_hz={} flash_count={flash_count} lead_in_s={} jitter_ms={} peak_time_ms={} \
         peak_to_peak_uv={} background_sigma_uv={} pre_ms={} post_ms={} peak_overrides_ms={}",
        v.flash_rate_hz,
        v.lead_in_s,
        if preset == Preset::Reference { v.jitter_ms } else { 0.0 },
        v.template.peak_time_ms,
        v.template.peak_to_peak_uv,
        v.background_sigma_uv,
        v.pre_ms,
        v.post_ms,
        join_f64(&v.peak_overrides_ms)
    )
}

fn vep_session(config: &ExperimentConfig, seed: u64, preset: Preset) -> Result<(Session, Vec<TriggerEvent>)> {
    let v = &config.vep;
    let spec = config.spec(preset);
    let template = VepTemplate::new(v.template.peak_time_ms, v.template.peak_to_peak_uv).map_err(Error::simulation)?;
    let (session, flashes) = gen_vep_session(
        template,
        v.flash_rate_hz,
        v.duration_s,
        v.background_sigma_uv,
        derive_seed(seed, VEP_BACKGROUND_STREAM),
    )
    .map_err(Error::simulation)?;
    let src = Delayed { inner: session.with_gains(v.channel_gains.clone()), lead_s: v.lead_in_s };
    let total_s = src.duration_s();
    let times: Vec<f64> = flashes.iter().map(|t| t + v.lead_in_s).collect();
    let arm_seed = derive_seed(derive_seed(seed, VEP_ARM_STREAM), preset_index(preset));
    let (record, received) = transmit_session(&src, spec, total_s, arm_seed, Some(&times))?;
    let triggers = match preset {
        Preset::Safe => label_packet_granular(&times, spec),
        Preset::Reference => {
            let jittered = jitter_triggers(&times, v.jitter_ms, derive_seed(arm_seed, 2)).map_err(Error::simulation)?;
            label_sample_accurate(&jittered, spec)
        }
    }
    .map_err(Error::simulation)?;
    let meta = SessionMeta {
        seed,
        source: vep_source(config, preset, flashes.len()),
        start_time: config.start_time.clone(),
        packet_anchor: v.packet_anchor,
    };
    // a jittered trigger can fall past the last recorded sample
    let frames = record.total_frames();
    let packets = packet_count(frames, spec);
    let in_session: Vec<TriggerEvent> = triggers
        .into_iter()
        .filter(|t| match t.label {
            TriggerLabel::Sample(i) => i < frames,
            TriggerLabel::Packet(seq) => (seq as usize) < packets,
        })
        .collect();
    let recording = Recording { spec: spec.clone(), record, triggers: in_session.clone(), meta };
    recording.validate().map_err(Error::simulation)?;
    Ok((
        Session { name: format!("vep/{preset}"), recording, packets: config.write_capture.then_some(received) },
        in_session,
    ))
}

/// Trial averages and metrics of one VEP recording.
pub fn vep_arm(rec: &Recording) -> std::result::Result<(Preset, ArmSummary, VepAnalysis, f64), String> {
    let d = Description::parse(&rec.meta.source).filter(|d| d.kind == "vep").ok_or("not a VEP recording")?;
    let preset = Preset::parse(d.get("arm")?).ok_or("bad arm")?;
    let opts = VepOptions {
        pre_ms: d.num("pre_ms")?,
        post_ms: d.num("post_ms")?,
        peak_overrides_ms: split_f64(d.get("peak_overrides_ms")?)?
            .into_iter()
            .map(|v| (!v.is_nan()).then_some(v))
            .collect(),
    };
    let analysis = analyze_vep(rec, &opts).map_err(|e| e.to_string())?;
    let loss = PacketLossReport::from_record(&rec.record, &rec.spec).map_err(|e| e.to_string())?;
    let arm = ArmSummary {
        preset,
        trials: analysis.trials.trials.len() + analysis.trials.skipped,
        clean: analysis.trials.clean_count(),
        skipped: analysis.trials.skipped,
        packets_expected: loss.expected,
        packets_received: loss.received,
    };
    Ok((preset, arm, analysis, d.num("jitter_ms")?))
}

fn pick(m: &eegchain_core::analysis::vep::VepMetrics, metric: Metric) -> f64 {
    match metric {
        Metric::Amplitude => m.amplitude_uv,
        Metric::Snr => m.snr_db,
        Metric::PeakTime => m.peak_time_ms,
    }
}

fn vep_report(
    arms: &[(ArmSummary, VepAnalysis)],
    packet_anchor: PacketAnchor,
    jitter_ms: f64,
) -> std::result::Result<VepReport, String> {
    let arm = |p: Preset| arms.iter().find(|(a, _)| a.preset == p).map(|(_, v)| v);
    let (safe, reference) = (arm(Preset::Safe), arm(Preset::Reference));
    let comparisons = match (safe, reference) {
        (Some(s), Some(r)) => Some(compare_arms(&s.metrics, &r.metrics).map_err(|e| e.to_string())?),
        _ => None,
    };
    let channels = safe.or(reference).map_or(0, |a| a.metrics.len());
    let mut rows = Vec::new();
    for (mi, metric) in Metric::ALL.into_iter().enumerate() {
        let values = |a: Option<&VepAnalysis>| a.map(|a| a.metrics.iter().map(|m| pick(m, metric)).collect::<Vec<_>>());
        let (sv, rv) = (values(safe), values(reference));
        let cmp = comparisons.as_ref().map(|c| &c[mi]);
        for ch in 0..channels {
            rows.push(MetricRow {
                metric,
                channel: (ch + 1).to_string(),
                safe: sv.as_ref().map(|v| v[ch]),
                reference: rv.as_ref().map(|v| v[ch]),
                d_percent: cmp.map(|c| c.d[ch]),
                t: None,
                p: None,
            });
        }
        let ttest = cmp.and_then(|c| c.ttest);
        rows.push(MetricRow {
            metric,
            channel: "mean".into(),
            safe: sv.as_deref().map(mean),
            reference: rv.as_deref().map(mean),
            d_percent: cmp.map(|c| c.mean_d),
            t: ttest.map(|t| t.t_statistic),
            p: ttest.map(|t| t.p_value),
        });
        rows.push(MetricRow {
            metric,
            channel: "std".into(),
            safe: sv.as_deref().map(std_dev),
            reference: rv.as_deref().map(std_dev),
            d_percent: cmp.map(|c| c.std_d),
            t: None,
            p: None,
        });
    }
    Ok(VepReport { packet_anchor, jitter_ms, arms: arms.iter().map(|(a, _)| a.clone()).collect(), rows })
}

/// Builds the VEP report from analysed arms sorted by preset.
fn vep_report_from(recordings: &[(String, &Recording)]) -> Result<VepReport> {
    let mut arms = Vec::new();
    let mut anchor = PacketAnchor::default();
    let mut jitter = 0.0;
    for (name, rec) in recordings {
        let (preset, summary, analysis, jitter_ms) =
            vep_arm(rec).map_err(|message| Error::Inconsistent { context: name.clone(), message })?;
        if arms.iter().any(|(a, _): &(ArmSummary, VepAnalysis)| a.preset == preset) {
            return Err(Error::Inconsistent { context: name.clone(), message: format!("second {preset} arm") });
        }
        match preset {
            Preset::Safe => anchor = rec.meta.packet_anchor,
            Preset::Reference => jitter = jitter_ms,
        }
        arms.push((summary, analysis));
    }
    arms.sort_by_key(|(a, _)| a.preset);
    vep_report(&arms, anchor, jitter).map_err(|message| Error::Inconsistent { context: "vep".into(), message })
}

/// The reference arm with jittered sample-accurate triggers and the SAFE
/// arm with packet-granular triggers, over the same flash sequence.
pub fn run_vep_experiment(config: &ExperimentConfig) -> Result<VepRun> {
    config.validate()?;
    let seed = config.require_seed()?;
    let sessions = config
        .active_presets()
        .par_iter()
        .map(|&p| vep_session(config, seed, p).map(|(s, _)| s))
        .collect::<Result<Vec<_>>>()?;
    let named: Vec<(String, &Recording)> = sessions.iter().map(|s| (s.name.clone(), &s.recording)).collect();
    let report = vep_report_from(&named)?;
    Ok(VepRun { sessions, report })
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_sessions(sessions: &[Session], out: &Path) -> Result<()> {
    sessions.par_iter().try_for_each(|s| {
        let base = out.join(&s.name);
        if let Some(parent) = base.parent() {
            create_dir(parent)?;
        }
        write_csv(&s.recording, &base.with_extension("csv"))?;
        if s.recording.meta.source.starts_with("vep") {
            let mut name = base.file_name().unwrap_or_default().to_os_string();
            name.push("_triggers.txt");
            write_triggers(&s.recording.triggers, &base.with_file_name(name))?;
        }
        if let Some(p) = &s.packets {
            write_capture(p, &s.recording.spec, &base.with_extension("cap"))?;
        }
        Ok(())
    })
}

/// Report CSV and the summary rendered from it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rendered {
    pub csv: String,
    pub summary: String,
}

pub fn render_sine(report: &SineReport) -> Rendered {
    let csv = report.to_csv();
    let summary = SineReport::from_csv(&csv).map(|r| r.summary()).unwrap_or_default();
    Rendered { csv, summary }
}

pub fn render_vep(report: &VepReport) -> Rendered {
    let csv = report.to_csv();
    let summary = VepReport::from_csv(&csv).map(|r| r.summary()).unwrap_or_default();
    Rendered { csv, summary }
}

impl SineRun {
    pub fn rendered(&self) -> Rendered {
        render_sine(&self.report)
    }

    /// Recordings under `out/sine/`, report and summary in `out/`.
    pub fn write(&self, out: &Path) -> Result<Rendered> {
        create_dir(out)?;
        write_sessions(&self.sessions, out)?;
        let r = self.rendered();
        write_text(&out.join(SINE_REPORT), &r.csv)?;
        write_text(&out.join(SINE_SUMMARY), &r.summary)?;
        Ok(r)
    }
}

impl VepRun {
    pub fn rendered(&self) -> Rendered {
        render_vep(&self.report)
    }

    /// Recordings and trigger lists under `out/vep/`, report and summary in
    /// `out/`.
    pub fn write(&self, out: &Path) -> Result<Rendered> {
        create_dir(out)?;
        write_sessions(&self.sessions, out)?;
        let r = self.rendered();
        write_text(&out.join(VEP_REPORT), &r.csv)?;
        write_text(&out.join(VEP_SUMMARY), &r.summary)?;
        Ok(r)
    }
}

/// Reports regenerated from stored recordings.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Reports {
    pub sine: Option<Rendered>,
    pub vep: Option<Rendered>,
}

impl Reports {
    /// Writes whichever reports exist into `out`.
    pub fn write(&self, out: &Path) -> Result<()> {
        create_dir(out)?;
        if let Some(r) = &self.sine {
            write_text(&out.join(SINE_REPORT), &r.csv)?;
            write_text(&out.join(SINE_SUMMARY), &r.summary)?;
        }
        if let Some(r) = &self.vep {
            write_text(&out.join(VEP_REPORT), &r.csv)?;
            write_text(&out.join(VEP_SUMMARY), &r.summary)?;
        }
        Ok(())
    }
}

fn is_report(path: &Path) -> bool {
    path.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with("_report.csv"))
}

/// Recording files at or under `path`, sorted.
pub fn recording_files(path: &Path) -> Result<Vec<PathBuf>> {
    if !path.exists() {
        return Err(Error::io(path, std::io::Error::new(std::io::ErrorKind::NotFound, "no such file or directory")));
    }
    let mut files = Vec::new();
    for entry in walkdir::WalkDir::new(path).sort_by_file_name() {
        let entry = entry.map_err(|e| {
            let p = e.path().unwrap_or(path).to_owned();
            Error::io(p, e.into_io_error().unwrap_or_else(|| std::io::Error::other("directory loop")))
        })?;
        let p = entry.path();
        if entry.file_type().is_file() && p.extension().is_some_and(|e| e == "csv") && !is_report(p) {
            files.push(p.to_owned());
        }
    }
    Ok(files)
}

/// Re-runs the analysis on every recording at or under `path`.
///
/// Unreadable files (wrong version, malformed rows, ...) are all reported
/// together before any analysis starts.
pub fn analyze(path: &Path) -> Result<Reports> {
    let files = recording_files(path)?;
    if files.is_empty() {
        return Err(Error::NoInput(path.to_owned()));
    }
    let loaded: Vec<std::result::Result<Recording, crate::csv::CsvError>> =
        files.par_iter().map(|f| read_csv(f)).collect();
    let mut problems = Vec::new();
    let mut sine = Vec::new();
    let mut vep = Vec::new();
    for (file, result) in files.iter().zip(loaded) {
        match result {
            Err(e) => problems.push(FileProblem { path: file.clone(), message: e.kind.to_string() }),
            Ok(rec) => match rec.meta.source.split_whitespace().next() {
                Some("sine") => sine.push((file.clone(), rec)),
                Some("vep") => vep.push((file.clone(), rec)),
                _ => problems.push(FileProblem {
                    path: file.clone(),
                    message: format!("unrecognised source `{}`", rec.meta.source),
                }),
            },
        }
    }
    if !problems.is_empty() {
        return Err(Error::Files(problems));
    }
    let mut reports = Reports::default();
    if !sine.is_empty() {
        let rows = sine
            .par_iter()
            .map(|(file, rec)| {
                sine_row(rec).map_err(|message| Error::Inconsistent { context: file.display().to_string(), message })
            })
            .collect::<Result<Vec<_>>>()?;
        reports.sine = Some(render_sine(&sine_report(rows)));
    }
    if !vep.is_empty() {
        let named: Vec<(String, &Recording)> = vep.iter().map(|(f, r)| (f.display().to_string(), r)).collect();
        reports.vep = Some(render_vep(&vep_report_from(&named)?));
    }
    Ok(reports)
}

/// Summaries re-rendered from report files in `dir`.
pub fn report(dir: &Path) -> Result<Reports> {
    let read = |name: &str| -> Result<Option<String>> {
        let p = dir.join(name);
        match std::fs::read_to_string(&p) {
            Ok(s) => Ok(Some(s)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(Error::io(p, e)),
        }
    };
    let format_error = |name: &str, message: String| Error::Format { path: dir.join(name), message };
    let mut out = Reports::default();
    if let Some(csv) = read(SINE_REPORT)? {
        let summary = SineReport::from_csv(&csv).map_err(|m| format_error(SINE_REPORT, m))?.summary();
        out.sine = Some(Rendered { csv, summary });
    }
    if let Some(csv) = read(VEP_REPORT)? {
        let summary = VepReport::from_csv(&csv).map_err(|m| format_error(VEP_REPORT, m))?.summary();
        out.vep = Some(Rendered { csv, summary });
    }
    if out.sine.is_none() && out.vep.is_none() {
        return Err(Error::NoInput(dir.to_owned()));
    }
    Ok(out)
}
