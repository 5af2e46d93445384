//! Simulation and validation core for a wireless, six-channel sub-scalp EEG
//! amplifier.
//!
//! The crate models the whole acquisition chain as pure functions over value
//! types: a continuous [`SignalSource`] is sampled by a [`DeviceSpec`]-driven
//! front end (inter-channel skew, additive noise, 16-bit ADC), framed into
//! sequence-numbered [`transport::Packet`]s, pushed through a lossy link and
//! reassembled into a [`transport::ContiguousRecord`] with explicit gaps.
//! Stimulus triggers are labelled either to the sample or to the packet, and
//! the [`analysis`] module implements the offline pipeline used to validate the
//! device against a wired reference amplifier: zero-phase high-pass filtering,
//! one-period epoching, phase-only sine fitting, evoked-potential averaging and
//! the percent-difference / Student's t statistics.
//!
//! Everything here is `no_std` (with `alloc`). File formats, configuration and
//! the command-line front end live in the `eegchain` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod device;
pub mod recording;
pub mod rng;
pub mod siggen;
pub mod transport;
pub mod trigger;

pub use device::{adc_quantize, run_acquisition, sample_frame, DeviceSpec, SampleFrame, SignalSource};
pub use recording::{Recording, SessionMeta};
pub use siggen::{DacModel, Delayed, Sinusoid, VepSession, VepTemplate};
pub use transport::{ContiguousRecord, Packet, PacketLossReport};
pub use trigger::{PacketAnchor, TriggerEvent, TriggerLabel};

/// `floor(x)` for counts derived from products such as `duration * rate`,
/// tolerant of the representation error in e.g. `300.0 * 0.99`.
pub(crate) fn floor_count(x: f64) -> usize {
    if x <= 0.0 {
        return 0;
    }
    libm::floor(x + 1e-9 * x.max(1.0)) as usize
}
