//! Packetized, lossy wireless link.
//!
//! Frames are batched into fixed-size packets numbered from zero. The link
//! only ever drops packets: no reordering, duplication or retransmission.
//! The receiver rebuilds a frame-indexed record in which every lost packet
//! leaves its own gap interval.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use rand::Rng;
use thiserror::Error;

use crate::device::{DeviceSpec, SampleFrame};
use crate::rng::{self, SimRng};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransportError {
    #[error("frame {found} found where frame {expected} was expected")]
    NonContiguous { expected: usize, found: usize },
    #[error("frame has {found} channels, spec has {expected}")]
    ChannelMismatch { expected: usize, found: usize },
    #[error("duplicate packet sequence number {0}")]
    DuplicateSeq(u32),
    #[error("packet {seq} arrived after packet {previous}")]
    OutOfOrder { seq: u32, previous: u32 },
    #[error("packet {seq} carries frame {frame} beyond the session ({total_frames} frames)")]
    BeyondSession { seq: u32, frame: usize, total_frames: usize },
    #[error("packet {seq} starts at frame {found}, expected {expected}")]
    Misaligned { seq: u32, expected: usize, found: usize },
    #[error("expected packet count must be positive")]
    NoPacketsExpected,
    #[error("{received} packets received but only {expected} expected")]
    MoreThanExpected { received: usize, expected: usize },
}

/// One radio packet: up to `frames_per_packet` contiguous frames.
#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    pub seq: u32,
    pub first_frame_index: usize,
    pub frames: Vec<SampleFrame>,
    pub trigger_flag: bool,
}

impl Packet {
    /// Frame indices covered by this packet.
    pub fn span(&self) -> Range<usize> {
        self.first_frame_index..self.first_frame_index + self.frames.len()
    }
}

/// Number of packets needed for `n_frames`.
pub fn packet_count(n_frames: usize, spec: &DeviceSpec) -> usize {
    n_frames.div_ceil(spec.frames_per_packet)
}

/// Splits a contiguous frame stream into packets. Only the last packet may be
/// short.
pub fn packetize(frames: &[SampleFrame], spec: &DeviceSpec) -> Result<Vec<Packet>, TransportError> {
    for (i, f) in frames.iter().enumerate() {
        if f.frame_index != i {
            return Err(TransportError::NonContiguous { expected: i, found: f.frame_index });
        }
        if f.channel_values_uv.len() != spec.channel_count {
            return Err(TransportError::ChannelMismatch {
                expected: spec.channel_count,
                found: f.channel_values_uv.len(),
            });
        }
    }
    Ok(frames
        .chunks(spec.frames_per_packet)
        .enumerate()
        .map(|(seq, chunk)| Packet {
            seq: seq as u32,
            first_frame_index: seq * spec.frames_per_packet,
            frames: chunk.to_vec(),
            trigger_flag: false,
        })
        .collect())
}

/// Decides, packet by packet, whether the link loses it.
///
/// Implement this to model bursty links; the crate ships only the
/// independent-loss model.
pub trait LossModel {
    fn drops(&mut self, packet: &Packet) -> bool;
}

/// Each packet is lost independently with probability `p`.
#[derive(Debug, Clone)]
pub struct BernoulliLoss {
    p: f64,
    rng: SimRng,
}

impl BernoulliLoss {
    /// `p` is clamped to `[0, 1]`.
    pub fn new(p: f64, seed: u64) -> Self {
        let p = if p.is_nan() { 0.0 } else { p.clamp(0.0, 1.0) };
        Self { p, rng: rng::seeded(seed) }
    }
}

impl LossModel for BernoulliLoss {
    fn drops(&mut self, _packet: &Packet) -> bool {
        // one draw per packet regardless of p keeps streams aligned across p
        let u: f64 = self.rng.random();
        u < self.p
    }
}

/// Runs `packets` through `model`, preserving order.
pub fn transmit_with<M: LossModel + ?Sized>(packets: &[Packet], model: &mut M) -> Vec<Packet> {
    packets.iter().filter(|p| !model.drops(p)).cloned().collect()
}

/// i.i.d. Bernoulli packet loss, deterministic per seed.
pub fn transmit(packets: &[Packet], loss_probability: f64, seed: u64) -> Vec<Packet> {
    transmit_with(packets, &mut BernoulliLoss::new(loss_probability, seed))
}

/// Receiver-side record: per-channel values on the global frame index.
///
/// Frames inside `gaps` (lost packets) or `unusable` (segments a filter could
/// not process) hold NaN and are reported as absent by [`Self::value`].
#[derive(Debug, Clone, PartialEq)]
pub struct ContiguousRecord {
    channels: Vec<Vec<f64>>,
    total_frames: usize,
    gaps: Vec<Range<usize>>,
    unusable: Vec<Range<usize>>,
}

impl ContiguousRecord {
    /// Builds a record from per-channel data. Values inside `gaps` are
    /// replaced by NaN; `gaps` must be sorted and disjoint.
    pub fn new(mut channels: Vec<Vec<f64>>, total_frames: usize, gaps: Vec<Range<usize>>) -> Self {
        debug_assert!(channels.iter().all(|c| c.len() == total_frames));
        debug_assert!(gaps.windows(2).all(|w| w[0].end <= w[1].start));
        for ch in &mut channels {
            for g in &gaps {
                ch[g.clone()].fill(f64::NAN);
            }
        }
        Self { channels, total_frames, gaps, unusable: vec![] }
    }

    /// Lossless record of a frame stream.
    pub fn from_frames(frames: &[SampleFrame], channel_count: usize) -> Self {
        let channels = (0..channel_count).map(|c| frames.iter().map(|f| f.channel_values_uv[c]).collect()).collect();
        Self::new(channels, frames.len(), vec![])
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn total_frames(&self) -> usize {
        self.total_frames
    }

    /// Raw channel data; absent frames are NaN.
    pub fn channel(&self, channel: usize) -> &[f64] {
        &self.channels[channel]
    }

    pub fn value(&self, channel: usize, frame: usize) -> Option<f64> {
        if self.is_absent(frame) {
            None
        } else {
            self.channels[channel].get(frame).copied()
        }
    }

    pub fn gaps(&self) -> &[Range<usize>] {
        &self.gaps
    }

    pub fn unusable(&self) -> &[Range<usize>] {
        &self.unusable
    }

    pub fn in_gap(&self, frame: usize) -> bool {
        contains(&self.gaps, frame)
    }

    pub fn is_absent(&self, frame: usize) -> bool {
        contains(&self.gaps, frame) || contains(&self.unusable, frame)
    }

    /// Whether `range` touches any absent frame.
    pub fn overlaps_absent(&self, range: Range<usize>) -> bool {
        overlaps(&self.gaps, &range) || overlaps(&self.unusable, &range)
    }

    /// Gaps and unusable ranges merged into one sorted list.
    pub fn absent_ranges(&self) -> Vec<Range<usize>> {
        let mut all: Vec<Range<usize>> = self.gaps.iter().chain(&self.unusable).cloned().collect();
        all.sort_by_key(|r| r.start);
        all
    }

    /// Maximal runs of present frames.
    pub fn segments(&self) -> Vec<Range<usize>> {
        let mut out = Vec::new();
        let mut start = 0;
        for g in &self.absent_ranges() {
            if g.start > start {
                out.push(start..g.start);
            }
            start = start.max(g.end);
        }
        if start < self.total_frames {
            out.push(start..self.total_frames);
        }
        out
    }

    /// Same record with new channel data; `unusable` ranges are blanked.
    pub(crate) fn with_channels(&self, channels: Vec<Vec<f64>>, unusable: Vec<Range<usize>>) -> Self {
        let mut rec = Self::new(channels, self.total_frames, self.gaps.clone());
        for ch in &mut rec.channels {
            for u in &unusable {
                ch[u.clone()].fill(f64::NAN);
            }
        }
        rec.unusable = unusable;
        rec
    }
}

fn contains(ranges: &[Range<usize>], frame: usize) -> bool {
    let i = ranges.partition_point(|r| r.end <= frame);
    ranges.get(i).is_some_and(|r| r.start <= frame)
}

fn overlaps(ranges: &[Range<usize>], range: &Range<usize>) -> bool {
    if range.is_empty() {
        return false;
    }
    let i = ranges.partition_point(|r| r.end <= range.start);
    ranges.get(i).is_some_and(|r| r.start < range.end)
}

/// Rebuilds the record from the packets that arrived.
///
/// Every missing sequence number becomes one gap covering that packet's
/// frames; adjacent losses are not merged.
pub fn reassemble(
    received: &[Packet],
    spec: &DeviceSpec,
    total_frames: usize,
) -> Result<ContiguousRecord, TransportError> {
    let fpp = spec.frames_per_packet;
    let mut channels = vec![vec![f64::NAN; total_frames]; spec.channel_count];
    let mut present = vec![false; packet_count(total_frames, spec)];
    let mut previous: Option<u32> = None;
    for p in received {
        if let Some(prev) = previous {
            if p.seq == prev {
                return Err(TransportError::DuplicateSeq(p.seq));
            }
            if p.seq < prev {
                return Err(TransportError::OutOfOrder { seq: p.seq, previous: prev });
            }
        }
        previous = Some(p.seq);
        let expected_start = p.seq as usize * fpp;
        if p.first_frame_index != expected_start {
            return Err(TransportError::Misaligned {
                seq: p.seq,
                expected: expected_start,
                found: p.first_frame_index,
            });
        }
        let span = p.span();
        if span.end > total_frames || span.start >= total_frames {
            return Err(TransportError::BeyondSession {
                seq: p.seq,
                frame: span.end.saturating_sub(1).max(span.start),
                total_frames,
            });
        }
        for f in &p.frames {
            if f.channel_values_uv.len() != spec.channel_count {
                return Err(TransportError::ChannelMismatch {
                    expected: spec.channel_count,
                    found: f.channel_values_uv.len(),
                });
            }
            for (c, &v) in f.channel_values_uv.iter().enumerate() {
                channels[c][f.frame_index] = v;
            }
        }
        present[p.seq as usize] = true;
    }
    let gaps = present
        .iter()
        .enumerate()
        .filter(|(_, &ok)| !ok)
        .map(|(seq, _)| seq * fpp..((seq + 1) * fpp).min(total_frames))
        .collect();
    Ok(ContiguousRecord::new(channels, total_frames, gaps))
}

/// Received-versus-expected packet accounting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketLossReport {
    pub expected: usize,
    pub received: usize,
    pub fraction_received: f64,
}

impl PacketLossReport {
    pub fn new(received: usize, expected: usize) -> Result<Self, TransportError> {
        if expected == 0 {
            return Err(TransportError::NoPacketsExpected);
        }
        if received > expected {
            return Err(TransportError::MoreThanExpected { received, expected });
        }
        Ok(Self { expected, received, fraction_received: received as f64 / expected as f64 })
    }

    /// Accounting recovered from a reassembled record: each gap is one lost
    /// packet.
    pub fn from_record(record: &ContiguousRecord, spec: &DeviceSpec) -> Result<Self, TransportError> {
        let expected = packet_count(record.total_frames(), spec);
        Self::new(expected - record.gaps().len(), expected)
    }
}

pub fn loss_stats(received: &[Packet], expected: usize) -> Result<PacketLossReport, TransportError> {
    PacketLossReport::new(received.len(), expected)
}

#[cfg(test)]
#[allow(clippy::single_range_in_vec_init, clippy::needless_range_loop)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn frames(n: usize, channels: usize) -> Vec<SampleFrame> {
        (0..n)
            .map(|i| SampleFrame {
                frame_index: i,
                channel_values_uv: (0..channels).map(|c| (i * 8 + c) as f64 * 0.125).collect(),
            })
            .collect()
    }

    #[test]
    fn packet_counts() {
        let spec = DeviceSpec::safe();
        let p = packetize(&frames(30720, 1), &DeviceSpec { channel_count: 1, ..spec.clone() }).unwrap();
        assert_eq!(p.len(), 750);
        assert_eq!(p.last().unwrap().frames.len(), 11);
        assert_eq!(p.last().unwrap().first_frame_index, 749 * 41);
        assert_eq!(packetize(&frames(41, 6), &spec).unwrap().len(), 1);
        assert_eq!(packet_count(307_200, &spec), 7493);
    }

    #[test]
    fn packetize_rejects_gaps_in_input() {
        let mut f = frames(10, 6);
        f.remove(3);
        assert_eq!(packetize(&f, &DeviceSpec::safe()), Err(TransportError::NonContiguous { expected: 3, found: 4 }));
    }

    #[test]
    fn transmit_extremes() {
        let spec = DeviceSpec::safe();
        let p = packetize(&frames(500, 6), &spec).unwrap();
        assert_eq!(transmit(&p, 0.0, 3), p);
        assert!(transmit(&p, 1.0, 3).is_empty());
        assert_eq!(transmit(&p, 0.3, 9), transmit(&p, 0.3, 9));
    }

    #[test]
    fn received_fraction_over_seeds() {
        let spec = DeviceSpec::safe();
        let p = packetize(&frames(30720, 6), &spec).unwrap();
        let mean =
            (0..100u64).map(|s| loss_stats(&transmit(&p, 0.05, s), p.len()).unwrap().fraction_received).sum::<f64>()
                / 100.0;
        assert!((0.94..=0.96).contains(&mean), "{mean}");
    }

    #[test]
    fn reassemble_gap_examples() {
        let spec = DeviceSpec::safe();
        let f = frames(205, 6);
        let p = packetize(&f, &spec).unwrap();
        assert_eq!(p.len(), 5);

        let full = reassemble(&p, &spec, 205).unwrap();
        assert!(full.gaps().is_empty());
        assert_eq!(full, ContiguousRecord::from_frames(&f, 6));

        let mut one = p.clone();
        one.remove(2);
        let r = reassemble(&one, &spec, 205).unwrap();
        assert_eq!(r.gaps(), &[82..123]);
        assert_eq!(r.value(0, 81), Some(f[81].channel_values_uv[0]));
        assert_eq!(r.value(0, 82), None);
        assert_eq!(r.value(5, 122), None);
        assert_eq!(r.segments(), vec![0..82, 123..205]);

        let two: Vec<Packet> = p.iter().filter(|x| x.seq != 2 && x.seq != 3).cloned().collect();
        let r = reassemble(&two, &spec, 205).unwrap();
        assert_eq!(r.gaps(), &[82..123, 123..164]);
        assert_eq!(r.segments(), vec![0..82, 164..205]);
    }

    #[test]
    fn reassemble_errors() {
        let spec = DeviceSpec::safe();
        let p = packetize(&frames(205, 6), &spec).unwrap();
        let dup = vec![p[0].clone(), p[1].clone(), p[1].clone()];
        assert_eq!(reassemble(&dup, &spec, 205), Err(TransportError::DuplicateSeq(1)));
        let swapped = vec![p[1].clone(), p[0].clone()];
        assert!(matches!(reassemble(&swapped, &spec, 205), Err(TransportError::OutOfOrder { .. })));
        assert!(matches!(reassemble(&p, &spec, 150), Err(TransportError::BeyondSession { .. })));
    }

    #[test]
    fn loss_stats_examples() {
        let r = PacketLossReport::new(712, 750).unwrap();
        approx::assert_abs_diff_eq!(r.fraction_received, 0.9493, epsilon = 5e-5);
        assert_eq!(PacketLossReport::new(750, 750).unwrap().fraction_received, 1.0);
        assert_eq!(PacketLossReport::new(0, 750).unwrap().fraction_received, 0.0);
        assert_eq!(loss_stats(&[], 0), Err(TransportError::NoPacketsExpected));
    }

    proptest! {
        #[test]
        fn gaps_plus_received_cover_everything(n in 1usize..600, p in 0.0f64..1.0, seed in 0u64..1000) {
            let spec = DeviceSpec::safe();
            let f = frames(n, 6);
            let packets = packetize(&f, &spec).unwrap();
            let rx = transmit(&packets, p, seed);
            let rec = reassemble(&rx, &spec, n).unwrap();
            let in_gaps: usize = rec.gaps().iter().map(|g| g.len()).sum();
            let received: usize = rx.iter().map(|p| p.frames.len()).sum();
            prop_assert_eq!(in_gaps + received, n);
            prop_assert_eq!(rec.gaps().len(), packets.len() - rx.len());
            prop_assert!(rec.gaps().windows(2).all(|w| w[0].end <= w[1].start));
            for i in 0..n {
                match rec.value(2, i) {
                    Some(v) => prop_assert_eq!(v, f[i].channel_values_uv[2]),
                    None => prop_assert!(rec.in_gap(i)),
                }
            }
            let report = PacketLossReport::from_record(&rec, &spec).unwrap();
            prop_assert_eq!(report.received, rx.len());
        }
    }
}
