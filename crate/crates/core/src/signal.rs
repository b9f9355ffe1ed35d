//! Complex-baseband synthesis of backscattered tag replies.
//!
//! A reply is built from "chips", the shortest constant-state interval of the
//! uplink encoding, which for every Gen2 encoding lasts `1 / (2 BLF)`. Chips
//! are merged into [`StateSegment`]s with exact rational boundaries, sampled
//! onto a uniform grid, rotated by the Doppler phasor `exp(-j 2π f_D t)` and
//! finally corrupted by white Gaussian noise calibrated in `P_S/N0`.
//!
//! Signal power is normalised to `P_S = 1`; the ASK reflect amplitude is
//! therefore `√2` and the PSK amplitudes are `±1`.

use std::f64::consts::{PI, SQRT_2};
use std::io::{Read, Write};
use std::str::FromStr;

use num_complex::Complex64;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::protocol::{
    self, to_f64, EncodingScheme, ExactSeconds, ReaderMode, ReplyParts, ReplyTiming, SignalKind,
};
use crate::units::db_to_linear;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Modulation {
    Ask,
    Psk,
}

impl FromStr for Modulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ask" => Ok(Modulation::Ask),
            "psk" => Ok(Modulation::Psk),
            _ => Err(Error::config(
                "modulation",
                format!("expected ask or psk, got `{s}`"),
            )),
        }
    }
}

impl std::fmt::Display for Modulation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Modulation::Ask => "ask",
            Modulation::Psk => "psk",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WaveformModel {
    /// FM0 / Miller encoded preamble, payload and end-of-signaling symbol.
    Gen2,
    /// Every symbol reflects for its first half and absorbs for the second.
    RectAppendix,
}

impl FromStr for WaveformModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "gen2" => Ok(WaveformModel::Gen2),
            "rect" | "rect_appendix" => Ok(WaveformModel::RectAppendix),
            _ => Err(Error::config(
                "waveform_model",
                format!("expected gen2 or rect_appendix, got `{s}`"),
            )),
        }
    }
}

impl std::fmt::Display for WaveformModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            WaveformModel::Gen2 => "gen2",
            WaveformModel::RectAppendix => "rect_appendix",
        })
    }
}

/// The two reflectivity states of the tag antenna.
///
/// ASK: `Zero` absorbs, `One` reflects. PSK: `Zero` is `+√P_S`, `One` is `-√P_S`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BackscatterState {
    Zero,
    One,
}

impl BackscatterState {
    #[inline]
    pub fn flip(self) -> Self {
        match self {
            BackscatterState::Zero => BackscatterState::One,
            BackscatterState::One => BackscatterState::Zero,
        }
    }

    /// Baseband amplitude for unit average power.
    #[inline]
    pub fn amplitude(self, modulation: Modulation) -> f64 {
        match (modulation, self) {
            (Modulation::Ask, BackscatterState::Zero) => 0.0,
            (Modulation::Ask, BackscatterState::One) => SQRT_2,
            (Modulation::Psk, BackscatterState::Zero) => 1.0,
            (Modulation::Psk, BackscatterState::One) => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateSegment {
    pub start: ExactSeconds,
    pub duration: ExactSeconds,
    pub state: BackscatterState,
}

impl StateSegment {
    pub fn end(&self) -> ExactSeconds {
        self.start + self.duration
    }
}

/// Collapses runs of equal chips into segments starting at `offset`.
pub fn chips_to_segments(
    chips: &[BackscatterState],
    chip: ExactSeconds,
    offset: ExactSeconds,
) -> Vec<StateSegment> {
    let mut out: Vec<StateSegment> = Vec::new();
    for (i, &state) in chips.iter().enumerate() {
        match out.last_mut() {
            Some(last) if last.state == state => last.duration += chip,
            _ => out.push(StateSegment {
                start: offset + chip * i as u64,
                duration: chip,
                state,
            }),
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Fm0Symbol {
    Data(bool),
    Violation,
}

/// FM0 chips (two per bit): the state inverts at every bit boundary and a
/// data-0 adds a mid-bit inversion. `first` is the state of the first chip.
pub fn encode_fm0_bits(bits: &[bool], first: BackscatterState) -> Vec<BackscatterState> {
    let symbols: Vec<Fm0Symbol> = bits.iter().map(|&b| Fm0Symbol::Data(b)).collect();
    fm0_chips(&symbols, first)
}

fn fm0_chips(symbols: &[Fm0Symbol], first: BackscatterState) -> Vec<BackscatterState> {
    let mut chips = Vec::with_capacity(symbols.len() * 2);
    let mut cur: Option<BackscatterState> = None;
    for &sym in symbols {
        let s = match (cur, sym) {
            (None, _) => first,
            // a violation skips the boundary inversion
            (Some(c), Fm0Symbol::Violation) => c,
            (Some(c), Fm0Symbol::Data(_)) => c.flip(),
        };
        let second = match sym {
            Fm0Symbol::Data(true) => s,
            Fm0Symbol::Data(false) | Fm0Symbol::Violation => s.flip(),
        };
        chips.push(s);
        chips.push(second);
        cur = Some(second);
    }
    chips
}

/// Full FM0 reply: preamble (pilot of 12 zeros when `trext`, then
/// `1 0 1 0 v 1`), payload and a trailing dummy 1.
pub fn encode_fm0(bits: &[bool], trext: bool) -> Result<Vec<BackscatterState>> {
    if bits.is_empty() {
        return Err(Error::Contract("FM0 payload must not be empty".into()));
    }
    let pilot = if trext { 12 } else { 0 };
    let mut symbols = vec![Fm0Symbol::Data(false); pilot];
    symbols.extend([
        Fm0Symbol::Data(true),
        Fm0Symbol::Data(false),
        Fm0Symbol::Data(true),
        Fm0Symbol::Data(false),
        Fm0Symbol::Violation,
        Fm0Symbol::Data(true),
    ]);
    symbols.extend(bits.iter().map(|&b| Fm0Symbol::Data(b)));
    symbols.push(Fm0Symbol::Data(true));
    Ok(fm0_chips(&symbols, BackscatterState::One))
}

fn check_miller_m(m: u32) -> Result<()> {
    if ![2, 4, 8].contains(&m) {
        return Err(Error::Domain(format!(
            "Miller spread factor must be 2, 4 or 8, got {m}"
        )));
    }
    Ok(())
}

/// Miller chips (`2M` per bit): Miller baseband (inversion between
/// consecutive data-0s and in the middle of every data-1) times a square
/// subcarrier with `M` cycles per bit.
pub fn encode_miller_bits(bits: &[bool], m: u32) -> Result<Vec<BackscatterState>> {
    check_miller_m(m)?;
    let m = m as usize;
    let mut chips = Vec::with_capacity(bits.len() * 2 * m);
    let mut base = BackscatterState::Zero;
    let mut prev: Option<bool> = None;
    for &bit in bits {
        if !bit && prev == Some(false) {
            base = base.flip();
        }
        let halves = if bit {
            [base, base.flip()]
        } else {
            [base, base]
        };
        for half in halves {
            for _ in 0..m {
                let sub = if chips.len() % 2 == 0 {
                    BackscatterState::Zero
                } else {
                    BackscatterState::One
                };
                chips.push(if sub == BackscatterState::Zero {
                    half
                } else {
                    half.flip()
                });
            }
        }
        if bit {
            base = base.flip();
        }
        prev = Some(bit);
    }
    Ok(chips)
}

/// Full Miller reply: pilot of 16 zeros when `trext` (4 otherwise), the
/// `010111` sync word, payload and a trailing dummy 1.
pub fn encode_miller(bits: &[bool], m: u32, trext: bool) -> Result<Vec<BackscatterState>> {
    if bits.is_empty() {
        return Err(Error::Contract("Miller payload must not be empty".into()));
    }
    let pilot = if trext { 16 } else { 4 };
    let mut all = vec![false; pilot];
    all.extend([false, true, false, true, true, true]);
    all.extend_from_slice(bits);
    all.push(true);
    encode_miller_bits(&all, m)
}

/// Chips of a Gen2 reply for `scheme`.
pub fn encode_gen2(
    scheme: EncodingScheme,
    bits: &[bool],
    trext: bool,
) -> Result<Vec<BackscatterState>> {
    match scheme {
        EncodingScheme::Fm0 => encode_fm0(bits, trext),
        other => encode_miller(bits, other.spread_factor(), trext),
    }
}

/// `L` symbols of `chips_per_symbol` chips, reflecting for the first half of
/// each symbol.
pub fn encode_rect(l_symbols: usize, chips_per_symbol: usize) -> Vec<BackscatterState> {
    let half = chips_per_symbol / 2;
    let mut chips = Vec::with_capacity(l_symbols * chips_per_symbol);
    for _ in 0..l_symbols {
        chips.extend(std::iter::repeat_n(BackscatterState::One, half));
        chips.extend(std::iter::repeat_n(
            BackscatterState::Zero,
            chips_per_symbol - half,
        ));
    }
    chips
}

/// Time in state `One` minus time in state `Zero`.
pub fn state_imbalance(segments: &[StateSegment]) -> (ExactSeconds, ExactSeconds) {
    let zero = Ratio::from_integer(0);
    segments
        .iter()
        .fold((zero, zero), |(one, z), s| match s.state {
            BackscatterState::One => (one + s.duration, z),
            BackscatterState::Zero => (one, z + s.duration),
        })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    /// Doppler shift in Hz.
    pub f_d: f64,
    pub ps_n0_dbhz: f64,
    pub sample_rate: f64,
    pub seed: u64,
}

impl ChannelParams {
    pub fn from_speed(v: f64, f_c: f64, ps_n0_dbhz: f64, sample_rate: f64, seed: u64) -> Self {
        ChannelParams {
            f_d: crate::bounds::doppler_shift(v, f_c),
            ps_n0_dbhz,
            sample_rate,
            seed,
        }
    }
}

/// 16 samples per chip.
pub fn default_sample_rate(blf_hz: u32) -> f64 {
    16.0 * 2.0 * f64::from(blf_hz)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameTruth {
    pub f_d_true: f64,
    pub ps_n0_dbhz: f64,
    pub modulation: Modulation,
    pub model: WaveformModel,
    /// Payload bits per part (empty for the rect model).
    pub bits: Vec<Vec<bool>>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasebandFrame {
    /// Segments of each signal part.
    pub segments: Vec<Vec<StateSegment>>,
    pub part_spans: Vec<(ExactSeconds, ExactSeconds)>,
    pub sample_rate: f64,
    pub samples: Vec<Complex64>,
    pub truth: FrameTruth,
}

#[inline]
fn snap(t: ExactSeconds, fs: f64) -> usize {
    (to_f64(t) * fs).round().max(0.0) as usize
}

impl BasebandFrame {
    /// Backscatter state of every sample, `None` outside the signal parts.
    pub fn sample_states(&self) -> Vec<Option<BackscatterState>> {
        let n = self.samples.len();
        let mut out = vec![None; n];
        for seg in self.segments.iter().flatten() {
            let a = snap(seg.start, self.sample_rate).min(n);
            let b = snap(seg.end(), self.sample_rate).min(n);
            for s in &mut out[a..b] {
                *s = Some(seg.state);
            }
        }
        out
    }

    /// Sample index ranges of the signal parts.
    pub fn part_ranges(&self) -> Vec<std::ops::Range<usize>> {
        let n = self.samples.len();
        self.part_spans
            .iter()
            .map(|&(a, b)| snap(a, self.sample_rate).min(n)..snap(b, self.sample_rate).min(n))
            .collect()
    }

    /// Total on-air duration of the signal parts, in seconds.
    pub fn signal_time(&self) -> f64 {
        self.part_spans.iter().map(|&(a, b)| to_f64(b - a)).sum()
    }
}

/// One contiguous signal part.
#[derive(Debug, Clone, PartialEq)]
pub struct PartPlan {
    pub start: ExactSeconds,
    pub chip: ExactSeconds,
    pub chips: Vec<BackscatterState>,
    pub bits: Vec<bool>,
}

/// Samples a set of parts, applies the Doppler rotation and adds noise.
pub fn synthesize_parts(
    parts: Vec<PartPlan>,
    modulation: Modulation,
    model: WaveformModel,
    params: &ChannelParams,
) -> Result<BasebandFrame> {
    if parts.is_empty() {
        return Err(Error::Contract(
            "a frame needs at least one signal part".into(),
        ));
    }
    if !(params.sample_rate > 0.0) || !params.sample_rate.is_finite() {
        return Err(Error::Domain(format!(
            "sample rate must be positive, got {}",
            params.sample_rate
        )));
    }
    let mut segments = Vec::with_capacity(parts.len());
    let mut spans = Vec::with_capacity(parts.len());
    let mut bits = Vec::with_capacity(parts.len());
    let mut end = Ratio::from_integer(0);
    for p in parts {
        if p.start < end {
            return Err(Error::Contract("signal parts overlap".into()));
        }
        let segs = chips_to_segments(&p.chips, p.chip, p.start);
        let part_end = p.start + p.chip * p.chips.len() as u64;
        spans.push((p.start, part_end));
        end = part_end;
        segments.push(segs);
        bits.push(p.bits);
    }
    let fs = params.sample_rate;
    let n = (to_f64(end) * fs).ceil() as usize;
    let mut frame = BasebandFrame {
        segments,
        part_spans: spans,
        sample_rate: fs,
        samples: vec![Complex64::new(0.0, 0.0); n],
        truth: FrameTruth {
            f_d_true: params.f_d,
            ps_n0_dbhz: params.ps_n0_dbhz,
            modulation,
            model,
            bits,
            seed: params.seed,
        },
    };
    for seg in frame.segments.iter().flatten() {
        let a = snap(seg.start, fs).min(n);
        let b = snap(seg.end(), fs).min(n);
        let amp = seg.state.amplitude(modulation);
        for s in &mut frame.samples[a..b] {
            *s = Complex64::new(amp, 0.0);
        }
    }
    apply_doppler(&mut frame.samples, params.f_d, fs);
    add_awgn(&mut frame.samples, params.ps_n0_dbhz, fs, params.seed);
    Ok(frame)
}

/// Inputs for [`synthesize_reply`].
#[derive(Debug, Clone)]
pub struct ReplySpec<'a> {
    pub mode: &'a ReaderMode,
    pub timing: ReplyTiming,
    pub parts: ReplyParts,
    pub modulation: Modulation,
    pub model: WaveformModel,
    pub bits_rn16: &'a [bool],
    pub bits_epc: &'a [bool],
}

fn part_chips(
    spec: &ReplySpec<'_>,
    kind: SignalKind,
    bits: &[bool],
    expected_bits: u32,
) -> Result<Vec<BackscatterState>> {
    if bits.len() != expected_bits as usize {
        return Err(Error::Contract(format!(
            "{kind:?} needs {expected_bits} bits, got {}",
            bits.len()
        )));
    }
    let m = spec.mode.encoding.spread_factor() as usize;
    let chips = match spec.model {
        WaveformModel::Gen2 => encode_gen2(spec.mode.encoding, bits, spec.mode.trext)?,
        WaveformModel::RectAppendix => {
            let l = protocol::symbols_for(spec.mode, kind)? as usize;
            encode_rect(l, 2 * m)
        }
    };
    let want = match kind {
        SignalKind::Rn16 => spec.timing.t_rn16,
        SignalKind::Epc => spec.timing.t_epc,
    };
    let chip = chip_duration(spec.mode.blf_hz);
    if chip * chips.len() as u64 != want {
        return Err(Error::Contract(format!(
            "{kind:?} duration {} s does not match the encoded length",
            to_f64(want)
        )));
    }
    Ok(chips)
}

/// Shortest constant-state interval, `1 / (2 BLF)`.
pub fn chip_duration(blf_hz: u32) -> ExactSeconds {
    Ratio::new(1, 2 * u64::from(blf_hz))
}

/// Builds a noisy reply frame. Part 1 (RN16) starts at `t = 0`; part 2 (EPC)
/// follows after the pause. With a single part selected, it starts at `t = 0`.
pub fn synthesize_reply(spec: &ReplySpec<'_>, params: &ChannelParams) -> Result<BasebandFrame> {
    let chip = chip_duration(spec.mode.blf_hz);
    let zero = Ratio::from_integer(0);
    let epc_bits = spec.mode.epc_bits + protocol::CRC_BITS;
    let mut plans = Vec::new();
    if matches!(spec.parts, ReplyParts::Rn16 | ReplyParts::Both) {
        plans.push(PartPlan {
            start: zero,
            chip,
            chips: part_chips(spec, SignalKind::Rn16, spec.bits_rn16, protocol::RN16_BITS)?,
            bits: spec.bits_rn16.to_vec(),
        });
    }
    if matches!(spec.parts, ReplyParts::Epc | ReplyParts::Both) {
        let start = if spec.parts == ReplyParts::Both {
            spec.timing.t_rn16 + spec.timing.t_pause
        } else {
            zero
        };
        plans.push(PartPlan {
            start,
            chip,
            chips: part_chips(spec, SignalKind::Epc, spec.bits_epc, epc_bits)?,
            bits: spec.bits_epc.to_vec(),
        });
    }
    if spec.model == WaveformModel::RectAppendix {
        for p in &mut plans {
            p.bits.clear();
        }
    }
    synthesize_parts(plans, spec.modulation, spec.model, params)
}

/// Single rect-model part of length `t0` made of `l_symbols` symbols.
pub fn synthesize_rect_single(
    t0: ExactSeconds,
    l_symbols: usize,
    modulation: Modulation,
    params: &ChannelParams,
) -> Result<BasebandFrame> {
    if l_symbols == 0 || t0 <= Ratio::from_integer(0) {
        return Err(Error::Domain(
            "rect part needs a positive length and at least one symbol".into(),
        ));
    }
    let chip = t0 / (2 * l_symbols as u64);
    synthesize_parts(
        vec![PartPlan {
            start: Ratio::from_integer(0),
            chip,
            chips: encode_rect(l_symbols, 2),
            bits: Vec::new(),
        }],
        modulation,
        WaveformModel::RectAppendix,
        params,
    )
}

/// Multiplies sample `n` by `exp(-j 2π f_d n / fs)`.
pub fn apply_doppler(samples: &mut [Complex64], f_d: f64, fs: f64) {
    if f_d == 0.0 {
        return;
    }
    const ANCHOR: usize = 1024;
    let w = -2.0 * PI * f_d / fs;
    let step = Complex64::from_polar(1.0, w);
    for (block, chunk) in samples.chunks_mut(ANCHOR).enumerate() {
        let mut rot = Complex64::from_polar(1.0, w * (block * ANCHOR) as f64);
        for s in chunk {
            *s *= rot;
            rot *= step;
        }
    }
}

/// Seed of the noise stream derived from a frame seed.
fn noise_seed(seed: u64) -> u64 {
    crate::experiments::seeding::mix(seed ^ 0x6e6f_6973_6500_0000)
}

/// Adds complex white Gaussian noise of per-sample variance `N0 · fs`, with
/// `N0 = 1 / (P_S/N0)` for unit signal power.
pub fn add_awgn(samples: &mut [Complex64], ps_n0_dbhz: f64, fs: f64, seed: u64) {
    let n0 = 1.0 / db_to_linear(ps_n0_dbhz);
    let sigma = (n0 * fs / 2.0).sqrt();
    if sigma == 0.0 {
        return;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(noise_seed(seed));
    for s in samples {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *s += Complex64::new(sigma * re, sigma * im);
    }
}

/// Uniform random bits for the RN16 and the EPC (+CRC16) of `mode`.
pub fn random_reply_bits(mode: &ReaderMode, seed: u64) -> (Vec<bool>, Vec<bool>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rn16 = (0..protocol::RN16_BITS).map(|_| rng.random()).collect();
    let epc = (0..mode.epc_bits + protocol::CRC_BITS)
        .map(|_| rng.random())
        .collect();
    (rn16, epc)
}

pub const DUMP_MAGIC: &[u8; 8] = b"RFIDBB01";
pub const DUMP_HEADER_LEN: usize = 64;

/// Writes samples as a 64-byte header (magic, sample rate f64, count u64,
/// zero padding) followed by little-endian interleaved f64 I/Q.
pub fn write_frame_dump<W: Write>(mut w: W, sample_rate: f64, samples: &[Complex64]) -> Result<()> {
    let mut header = [0u8; DUMP_HEADER_LEN];
    header[..8].copy_from_slice(DUMP_MAGIC);
    header[8..16].copy_from_slice(&sample_rate.to_le_bytes());
    header[16..24].copy_from_slice(&(samples.len() as u64).to_le_bytes());
    w.write_all(&header)?;
    let mut buf = Vec::with_capacity(samples.len() * 16);
    for s in samples {
        buf.extend_from_slice(&s.re.to_le_bytes());
        buf.extend_from_slice(&s.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_frame_dump<R: Read>(mut r: R) -> Result<(f64, Vec<Complex64>)> {
    let mut header = [0u8; DUMP_HEADER_LEN];
    r.read_exact(&mut header)?;
    if &header[..8] != DUMP_MAGIC {
        return Err(Error::Contract("not a baseband dump (bad magic)".into()));
    }
    let fs = f64::from_le_bytes(header[8..16].try_into().expect("8 bytes"));
    let n = u64::from_le_bytes(header[16..24].try_into().expect("8 bytes")) as usize;
    let mut body = vec![0u8; n * 16];
    r.read_exact(&mut body)?;
    let samples = body
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().expect("8 bytes")),
                f64::from_le_bytes(c[8..].try_into().expect("8 bytes")),
            )
        })
        .collect();
    Ok((fs, samples))
}
