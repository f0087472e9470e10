//! FIR band-pass design, zero-phase filtering, decimation, and band-power
//! estimation.
//!
//! Designs use the window method with a Hamming window. A band-pass is the
//! difference of two windowed-sinc low-passes at the band edges, each
//! normalized to unit DC gain before subtraction; the difference therefore
//! has exactly zero gain at DC even when the lower edge is far below the
//! transition width the order can realize.

use ndarray::Array2;
use rayon::prelude::*;

use crate::data::Recording;
use crate::error::{Error, Result};

/// Frequency band in Hz. Validity (`0 <= low < high < fs/2`) is checked at
/// the use site, where the sampling rate is known.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Band {
    pub low_hz: f64,
    pub high_hz: f64,
}

impl Band {
    pub fn new(low_hz: f64, high_hz: f64) -> Self {
        Band { low_hz, high_hz }
    }

    /// Check the band against a sampling rate.
    pub fn validate(&self, fs_hz: f64) -> Result<()> {
        if !(self.low_hz >= 0.0 && self.low_hz < self.high_hz) {
            return Err(Error::invalid(format!(
                "band edges must satisfy 0 <= low < high, got {} and {}",
                self.low_hz, self.high_hz
            )));
        }
        if self.high_hz >= fs_hz / 2.0 {
            return Err(Error::invalid(format!(
                "band edge {} Hz at or above Nyquist ({} Hz)",
                self.high_hz,
                fs_hz / 2.0
            )));
        }
        Ok(())
    }
}

/// Designed linear-phase FIR band-pass: `order + 1` symmetric taps plus the
/// design metadata.
#[derive(Clone, Debug)]
pub struct FirFilter {
    pub taps: Vec<f64>,
    pub order: usize,
    pub low_hz: f64,
    pub high_hz: f64,
    pub fs_hz: f64,
}

impl FirFilter {
    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Windowed-sinc low-pass taps, normalized to unit DC gain.
///
/// Only the left half is computed; the right half is mirrored so symmetry
/// is exact to the bit.
fn windowed_sinc_lowpass(cutoff_hz: f64, fs_hz: f64, order: usize) -> Vec<f64> {
    let n_taps = order + 1;
    let mid = order / 2;
    let fc = cutoff_hz / fs_hz; // cycles per sample
    let mut taps = vec![0.0; n_taps];
    for n in 0..=mid {
        let x = n as f64 - mid as f64;
        let w = 0.54 - 0.46 * (2.0 * std::f64::consts::PI * n as f64 / order as f64).cos();
        let t = 2.0 * fc * sinc(2.0 * fc * x) * w;
        taps[n] = t;
        taps[order - n] = t;
    }
    let dc: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= dc;
    }
    taps
}

/// Design a Hamming-windowed band-pass FIR of even `order` (`order + 1`
/// taps) as the difference of two unit-DC-gain windowed-sinc low-passes at
/// the band edges.
pub fn design_bandpass_fir(band: Band, fs_hz: f64, order: usize) -> Result<FirFilter> {
    if order < 2 || !order.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "filter order must be even and >= 2, got {order}"
        )));
    }
    band.validate(fs_hz)?;
    if band.low_hz <= 0.0 {
        return Err(Error::invalid("band-pass low edge must be positive"));
    }
    let high = windowed_sinc_lowpass(band.high_hz, fs_hz, order);
    let low = windowed_sinc_lowpass(band.low_hz, fs_hz, order);
    let taps: Vec<f64> = high.iter().zip(&low).map(|(h, l)| h - l).collect();
    Ok(FirFilter {
        taps,
        order,
        low_hz: band.low_hz,
        high_hz: band.high_hz,
        fs_hz,
    })
}

/// Full linear convolution, output length `x.len() + h.len() - 1`.
fn convolve_full(x: &[f64], h: &[f64]) -> Vec<f64> {
    let n = x.len();
    let l = h.len();
    let mut y = vec![0.0; n + l - 1];
    for (i, &xi) in x.iter().enumerate() {
        if xi == 0.0 {
            continue;
        }
        for (j, &hj) in h.iter().enumerate() {
            y[i + j] += xi * hj;
        }
    }
    y
}

/// Reflect-pad `x` by `pad` samples on each side (mirror about the end
/// samples, which are not repeated).
fn reflect_pad(x: &[f64], pad: usize) -> Vec<f64> {
    let n = x.len();
    debug_assert!(n > pad);
    let mut out = Vec::with_capacity(n + 2 * pad);
    for i in (1..=pad).rev() {
        out.push(x[i]);
    }
    out.extend_from_slice(x);
    for i in 1..=pad {
        out.push(x[n - 1 - i]);
    }
    out
}

/// Forward-backward (zero net phase) FIR filtering.
///
/// The signal is reflect-padded by `order + 1` samples on each end, run
/// through the filter forward, reversed, run through again, and reversed
/// back; the padding is trimmed afterwards so the output length equals the
/// input length. The effective magnitude response is `|H(f)|^2`.
pub fn zero_phase_filter(signal: &[f64], fir: &FirFilter) -> Result<Vec<f64>> {
    let l = fir.taps.len();
    let pad = l;
    if signal.len() <= 3 * l {
        return Err(Error::invalid(format!(
            "signal of {} samples is too short for order {} zero-phase filtering (need > {})",
            signal.len(),
            fir.order,
            3 * l
        )));
    }
    let padded = reflect_pad(signal, pad);
    let np = padded.len();
    let mut y = convolve_full(&padded, &fir.taps);
    y.reverse();
    let mut z = convolve_full(&y, &fir.taps);
    z.reverse();
    // Two full convolutions add l - 1 samples at each end.
    let aligned = &z[(l - 1)..(l - 1) + np];
    Ok(aligned[pad..pad + signal.len()].to_vec())
}

/// Zero-phase band-pass every channel of a recording.
pub fn filter_recording(recording: &Recording, fir: &FirFilter) -> Result<Recording> {
    let rows: Vec<Vec<f64>> = (0..recording.n_channels())
        .map(|c| recording.samples.row(c).iter().map(|&v| v as f64).collect())
        .collect();
    let filtered: Vec<Vec<f64>> = rows
        .par_iter()
        .map(|row| zero_phase_filter(row, fir))
        .collect::<Result<_>>()?;
    let mut samples = Array2::zeros((recording.n_channels(), recording.n_samples()));
    for (c, row) in filtered.iter().enumerate() {
        for (t, &v) in row.iter().enumerate() {
            samples[[c, t]] = v as f32;
        }
    }
    Recording::new(
        recording.montage.clone(),
        recording.fs_hz,
        samples,
        recording.markers.clone(),
    )
}

/// Anti-aliased integer-factor decimation.
///
/// For factors above 1 a zero-phase low-pass (symmetric windowed sinc with
/// its integer group delay compensated exactly) is applied at a cutoff of
/// 0.4x the new Nyquist before subsampling, and is evaluated only at the
/// kept sample positions. Marker onsets are divided by the factor (floor);
/// markers that would land past the shortened end are dropped.
pub fn decimate(recording: &Recording, factor: usize) -> Result<Recording> {
    if factor == 0 {
        return Err(Error::invalid("decimation factor must be >= 1"));
    }
    if factor == 1 {
        return Ok(recording.clone());
    }
    let n = recording.n_samples();
    let n_out = n / factor;
    if n_out == 0 {
        return Err(Error::invalid("recording shorter than one decimated sample"));
    }
    let new_fs = recording.fs_hz / factor as f64;
    let cutoff = 0.4 * (new_fs / 2.0);
    let order = (10 * factor).clamp(10, 400) & !1; // even
    let taps = windowed_sinc_lowpass(cutoff, recording.fs_hz, order);
    let mid = order / 2;

    let rows: Vec<Vec<f64>> = (0..recording.n_channels())
        .map(|c| recording.samples.row(c).iter().map(|&v| v as f64).collect())
        .collect();
    let decimated: Vec<Vec<f64>> = rows
        .par_iter()
        .map(|row| {
            // y[t] = sum_j h[j] * x[t + j - mid], reflecting at the ends.
            let reflect = |idx: isize| -> f64 {
                let n = row.len() as isize;
                let mut i = idx;
                if i < 0 {
                    i = -i;
                }
                if i >= n {
                    i = 2 * (n - 1) - i;
                }
                row[i.clamp(0, n - 1) as usize]
            };
            (0..n_out)
                .map(|k| {
                    let t = (k * factor) as isize;
                    taps.iter()
                        .enumerate()
                        .map(|(j, &h)| h * reflect(t + j as isize - mid as isize))
                        .sum()
                })
                .collect()
        })
        .collect();

    let mut samples = Array2::zeros((recording.n_channels(), n_out));
    for (c, row) in decimated.iter().enumerate() {
        for (t, &v) in row.iter().enumerate() {
            samples[[c, t]] = v as f32;
        }
    }
    let markers = recording
        .markers
        .iter()
        .filter_map(|m| {
            let onset = m.onset / factor;
            (onset < n_out).then_some(crate::data::Marker { onset, label: m.label })
        })
        .collect();
    Recording::new(recording.montage.clone(), new_fs, samples, markers)
}

/// Mean-square signal power inside a frequency band.
///
/// Computed from the one-sided periodogram: squared-magnitude DFT bins with
/// center frequency inside `[low_hz, high_hz]`, normalized by the DFT bin
/// count and the signal length (`sum |X[k]|^2 / N^2`), so powers over
/// disjoint bands add exactly.
pub fn band_power(signal: &[f64], fs_hz: f64, band: Band) -> Result<f64> {
    band.validate(fs_hz)
        .or_else(|_| {
            // Allow high edge equal to Nyquist for power summaries.
            if band.low_hz >= 0.0 && band.low_hz < band.high_hz && band.high_hz <= fs_hz / 2.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!(
                    "band {}..{} Hz invalid at {} Hz",
                    band.low_hz, band.high_hz, fs_hz
                )))
            }
        })?;
    let n = signal.len();
    if (n as f64) < 2.0 * fs_hz {
        return Err(Error::invalid(format!(
            "band_power needs at least 2 s of signal ({} samples at {} Hz), got {}",
            (2.0 * fs_hz) as usize,
            fs_hz,
            n
        )));
    }
    let df = fs_hz / n as f64;
    let k_lo = (band.low_hz / df).ceil() as usize;
    let k_hi = ((band.high_hz / df).floor() as usize).min(n / 2);
    let mut total = 0.0;
    for k in k_lo..=k_hi {
        let w = -2.0 * std::f64::consts::PI * k as f64 / n as f64;
        let mut re = 0.0;
        let mut im = 0.0;
        // Recurrence-free direct DFT bin; signals here are short.
        for (t, &x) in signal.iter().enumerate() {
            let phase = w * t as f64;
            re += x * phase.cos();
            im += x * phase.sin();
        }
        total += re * re + im * im;
    }
    Ok(total / (n as f64 * n as f64))
}
