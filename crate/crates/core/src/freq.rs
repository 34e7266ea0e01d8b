//! Log-magnitude frequency profiles of trajectories.
//!
//! For a trajectory with `M` elements and `N` frames the profile is
//!
//! ```text
//! X[k] = 1/M * sum_m ln(1 + |sum_n x[m][n] * exp(-2 pi i k n / N)|),  k = 0..=N/2
//! ```
//!
//! computed with an FFT over each element's time series. No windowing or
//! detrending is applied.

use std::collections::BTreeMap;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::par::{self, Execution};
use crate::state_spaces::{SpaceId, Trajectory};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FreqError {
    #[error("frequency analysis needs at least 2 frames, got {0}")]
    TooShort(usize),
    #[error("no trajectories supplied")]
    EmptyDataset,
    #[error("space {space} has trajectories of width {first} and {other}")]
    MixedWidths { space: SpaceId, first: usize, other: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyProfile {
    pub space: SpaceId,
    /// Frame count `N`.
    pub frames: usize,
    /// Element count `M`.
    pub elements: usize,
    /// One-sided profile, `N / 2 + 1` bins.
    pub values: Vec<f64>,
}

/// One-sided magnitude spectrum `|DFT_k|` for `k = 0..=N/2`.
pub fn magnitude_spectrum(signal: &[f64]) -> Vec<f64> {
    let n = signal.len();
    let mut buf: Vec<Complex<f64>> = signal.iter().map(|&x| Complex::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf.truncate(n / 2 + 1);
    buf.iter().map(|c| c.norm()).collect()
}

pub fn frequency_profile(traj: &Trajectory) -> Result<FrequencyProfile, FreqError> {
    frequency_profile_with(traj, Execution::default())
}

/// [`frequency_profile`] with the per-element spectra computed under `exec`.
pub fn frequency_profile_with(traj: &Trajectory, exec: Execution) -> Result<FrequencyProfile, FreqError> {
    let rows: Vec<&[f64]> = traj.frames().iter().map(|f| f.values()).collect();
    profile_of_rows(traj.space(), &rows, exec)
}

fn profile_of_rows(space: SpaceId, rows: &[&[f64]], exec: Execution) -> Result<FrequencyProfile, FreqError> {
    let n = rows.len();
    if n < 2 {
        return Err(FreqError::TooShort(n));
    }
    let m = rows[0].len();
    let spectra = par::map_range(exec, m, |e| {
        let series: Vec<f64> = rows.iter().map(|r| r[e]).collect();
        magnitude_spectrum(&series)
    });
    let bins = n / 2 + 1;
    let mut values = vec![0.0; bins];
    for spectrum in &spectra {
        for (x, mag) in values.iter_mut().zip(spectrum) {
            *x += mag.ln_1p();
        }
    }
    for x in &mut values {
        *x /= m as f64;
    }
    Ok(FrequencyProfile {
        space,
        frames: n,
        elements: m,
        values,
    })
}

/// Share of the non-DC profile mass at or above `cutoff_fraction * k_max`.
/// Returns 0 when there is no non-DC mass.
///
/// # Panics
///
/// If `cutoff_fraction` is not in `(0, 1)`.
pub fn hfc_energy_ratio(profile: &FrequencyProfile, cutoff_fraction: f64) -> f64 {
    assert!(
        cutoff_fraction > 0.0 && cutoff_fraction < 1.0,
        "cutoff fraction must lie in (0, 1)"
    );
    let k_max = profile.values.len() - 1;
    let start = ((cutoff_fraction * k_max as f64).ceil() as usize).max(1);
    let denominator: f64 = profile.values.iter().skip(1).sum();
    if denominator == 0.0 {
        return 0.0;
    }
    profile.values.iter().skip(start).sum::<f64>() / denominator
}

/// One heatmap row per space, ordered by [`SpaceId`].
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    /// Common column count of every row.
    pub columns: usize,
    pub rows: Vec<FrequencyProfile>,
}

/// Averages `values` into `columns` contiguous bins.
pub fn bin_average(values: &[f64], columns: usize) -> Vec<f64> {
    let len = values.len();
    if columns == len {
        return values.to_vec();
    }
    (0..columns)
        .map(|j| {
            let lo = j * len / columns;
            let hi = ((j + 1) * len / columns).max(lo + 1);
            values[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

/// Concatenates each space's trajectories along time and profiles them. When
/// the resulting profiles differ in length every row is bin-averaged down to
/// the shortest one.
pub fn dataset_heatmap(datasets: &BTreeMap<SpaceId, Vec<Trajectory>>, exec: Execution) -> Result<Heatmap, FreqError> {
    let entries: Vec<(&SpaceId, &Vec<Trajectory>)> = datasets.iter().filter(|(_, t)| !t.is_empty()).collect();
    if entries.is_empty() {
        return Err(FreqError::EmptyDataset);
    }
    let rows = par::map(exec, &entries, |(space, trajs)| {
        let first = trajs[0].width();
        if let Some(t) = trajs.iter().find(|t| t.width() != first) {
            return Err(FreqError::MixedWidths {
                space: **space,
                first,
                other: t.width(),
            });
        }
        let rows: Vec<&[f64]> = trajs
            .iter()
            .flat_map(|t| t.frames().iter().map(|f| f.values()))
            .collect();
        profile_of_rows(**space, &rows, Execution::Sequential)
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;

    let columns = rows.iter().map(|r| r.values.len()).min().unwrap_or(0);
    let rows = rows
        .into_iter()
        .map(|mut r| {
            r.values = bin_average(&r.values, columns);
            r
        })
        .collect();
    Ok(Heatmap { columns, rows })
}
