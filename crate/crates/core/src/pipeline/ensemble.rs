//! Ensemble statistics over repeated runs on a common 1 nm grid.

use std::collections::BTreeMap;

use super::{ForceSeries, PipelineError, Result};

/// Runs binned to integer-nm separations; every run covers every bin.
#[derive(Debug, Clone, PartialEq)]
pub struct RunEnsemble {
    /// nm
    distances: Vec<i64>,
    /// Mean separation of the samples in each bin over all runs, nm.
    separations: Vec<f64>,
    /// `runs[r][k]` is run r's mean force (pN) in bin `distances[k]`.
    runs: Vec<Vec<f64>>,
}

impl RunEnsemble {
    /// Rounds each run's separations to the nearest nm, averages within each
    /// bin, and keeps the bins present in every run.
    pub fn from_runs(series: &[ForceSeries]) -> Result<Self> {
        if series.is_empty() {
            return Err(PipelineError::Ensemble("no runs".into()));
        }
        // per bin: (Σd, ΣF, count)
        let binned: Vec<BTreeMap<i64, (f64, f64, usize)>> = series
            .iter()
            .map(|s| {
                let mut acc: BTreeMap<i64, (f64, f64, usize)> = BTreeMap::new();
                for &(d, f) in &s.points {
                    let e = acc.entry(d.round() as i64).or_insert((0.0, 0.0, 0));
                    e.0 += d;
                    e.1 += f;
                    e.2 += 1;
                }
                acc
            })
            .collect();
        let distances: Vec<i64> = binned[0]
            .keys()
            .copied()
            .filter(|k| binned.iter().all(|b| b.contains_key(k)))
            .collect();
        if distances.is_empty() {
            return Err(PipelineError::Ensemble(
                "runs share no common 1 nm bins".into(),
            ));
        }
        let runs = binned
            .iter()
            .map(|b| distances.iter().map(|k| b[k].1 / b[k].2 as f64).collect())
            .collect();
        let separations = distances
            .iter()
            .map(|k| {
                let (sd, n) = binned
                    .iter()
                    .fold((0.0, 0), |(sd, n), b| (sd + b[k].0, n + b[k].2));
                sd / n as f64
            })
            .collect();
        Ok(Self {
            distances,
            separations,
            runs,
        })
    }

    pub fn distances(&self) -> &[i64] {
        &self.distances
    }

    /// nm
    pub fn separations(&self) -> &[f64] {
        &self.separations
    }

    pub fn runs(&self) -> &[Vec<f64>] {
        &self.runs
    }

    pub fn n_runs(&self) -> usize {
        self.runs.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramRequest {
    /// nm
    pub separation: f64,
    /// Bins within ±half_window nm contribute, nm.
    pub half_window: f64,
    /// Subtract each bin's ensemble mean before pooling.
    pub centered: bool,
    pub n_bins: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub separation: f64,
    /// Left edge of the first bin, pN.
    pub start: f64,
    /// pN
    pub width: f64,
    pub counts: Vec<usize>,
    pub moments: Moments,
}

impl Histogram {
    pub fn from_samples(separation: f64, samples: &[f64], n_bins: usize) -> Result<Self> {
        if samples.len() < 2 || n_bins == 0 {
            return Err(PipelineError::Ensemble(
                "histogram needs at least 2 samples and 1 bin".into(),
            ));
        }
        let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let width = if hi > lo {
            (hi - lo) / n_bins as f64
        } else {
            1.0
        };
        let mut counts = vec![0; n_bins];
        for &s in samples {
            let i = (((s - lo) / width) as usize).min(n_bins - 1);
            counts[i] += 1;
        }
        Ok(Self {
            separation,
            start: lo,
            width,
            counts,
            moments: moments(samples)?,
        })
    }

    pub fn bin_centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.counts.len()).map(|i| self.start + (i as f64 + 0.5) * self.width)
    }
}

/// Sample moments; `excess_kurtosis` is 0 for a Gaussian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

pub fn moments(samples: &[f64]) -> Result<Moments> {
    let n = samples.len();
    if n < 2 {
        return Err(PipelineError::Ensemble(
            "moments need at least 2 samples".into(),
        ));
    }
    let nf = n as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let (m2, m3, m4) = samples.iter().fold((0.0, 0.0, 0.0), |(a, b, c), &x| {
        let d = x - mean;
        (a + d * d, b + d * d * d, c + d * d * d * d)
    });
    let (m2, m3, m4) = (m2 / nf, m3 / nf, m4 / nf);
    let (skewness, excess_kurtosis) = if m2 > 0.0 {
        (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
    } else {
        (0.0, 0.0)
    };
    Ok(Moments {
        n,
        mean,
        std: (m2 * nf / (nf - 1.0)).sqrt(),
        skewness,
        excess_kurtosis,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleAverage {
    /// Rounded bin separations, nm.
    pub distances: Vec<f64>,
    /// Mean separation of the samples within each bin, nm.
    pub separations: Vec<f64>,
    /// pN
    pub mean: Vec<f64>,
    /// Sample standard deviation across runs, pN.
    pub std: Vec<f64>,
    pub n_runs: usize,
    pub histograms: Vec<Histogram>,
}

/// Pointwise mean and sample standard deviation across runs, plus pooled
/// histograms at the requested separations.
pub fn average_ensemble(
    ens: &RunEnsemble,
    requests: &[HistogramRequest],
) -> Result<EnsembleAverage> {
    let n = ens.n_runs();
    if n < 2 {
        return Err(PipelineError::Ensemble(format!(
            "need at least 2 runs, got {n}"
        )));
    }
    let nf = n as f64;
    let k = ens.distances.len();
    let mut mean = vec![0.0; k];
    for run in &ens.runs {
        for (m, v) in mean.iter_mut().zip(run) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= nf);
    let mut var = vec![0.0; k];
    for run in &ens.runs {
        for ((s, v), m) in var.iter_mut().zip(run).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let std = var.iter().map(|s| (s / (nf - 1.0)).sqrt()).collect();

    let mut histograms = Vec::with_capacity(requests.len());
    for req in requests {
        let mut samples = Vec::new();
        for (j, &dist) in ens.distances.iter().enumerate() {
            if (dist as f64 - req.separation).abs() <= req.half_window {
                let center = if req.centered { mean[j] } else { 0.0 };
                samples.extend(ens.runs.iter().map(|r| r[j] - center));
            }
        }
        if samples.is_empty() {
            return Err(PipelineError::Ensemble(format!(
                "no data within {} nm of {} nm",
                req.half_window, req.separation
            )));
        }
        histograms.push(Histogram::from_samples(
            req.separation,
            &samples,
            req.n_bins,
        )?);
    }
    Ok(EnsembleAverage {
        distances: ens.distances.iter().map(|&d| d as f64).collect(),
        separations: ens.separations.clone(),
        mean,
        std,
        n_runs: n,
        histograms,
    })
}
