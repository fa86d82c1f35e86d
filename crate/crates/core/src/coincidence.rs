//! Coincidence estimators on time-tag streams: delay histograms, CAR, pair
//! coincidence rate and the heralded second-order correlation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tags::{TagStream, IDLER_A, IDLER_B, SIGNAL};

/// Counts of t_b − t_a over [−span/2, span/2); bin k covers
/// [k·bin − span/2, (k+1)·bin − span/2), so zero delay opens a bin.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_ps: u64,
    pub span_ps: u64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn bin_start_ps(&self, k: usize) -> i64 {
        k as i64 * self.bin_ps as i64 - (self.span_ps / 2) as i64
    }

    pub fn bin_centers_ps(&self) -> Vec<f64> {
        (0..self.counts.len())
            .map(|k| self.bin_start_ps(k) as f64 + 0.5 * self.bin_ps as f64)
            .collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

fn check_binning(bin_ps: u64, span_ps: u64) -> Result<()> {
    if bin_ps == 0 || span_ps == 0 || !span_ps.is_multiple_of(2 * bin_ps) {
        return Err(Error::InvalidInput(format!(
            "span {span_ps} ps must be a positive even multiple of bin {bin_ps} ps"
        )));
    }
    Ok(())
}

/// Exact pairwise delay histogram by a sorted two-pointer sweep.
pub fn coincidence_histogram(stream: &TagStream, ch_a: u16, ch_b: u16, bin_ps: u64, span_ps: u64) -> Result<Histogram> {
    check_binning(bin_ps, span_ps)?;
    stream.ensure_sorted()?;
    let a = stream.channel_times(ch_a);
    let b = stream.channel_times(ch_b);
    let half = (span_ps / 2) as i64;
    let mut counts = vec![0u64; (span_ps / bin_ps) as usize];
    let mut start = 0usize;
    for &ta in &a {
        let ta = ta as i64;
        while start < b.len() && (b[start] as i64) < ta - half {
            start += 1;
        }
        let mut j = start;
        while j < b.len() {
            let d = b[j] as i64 - ta;
            if d >= half {
                break;
            }
            counts[((d + half) / bin_ps as i64) as usize] += 1;
            j += 1;
        }
    }
    Ok(Histogram {
        bin_ps,
        span_ps,
        counts,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CarOptions {
    /// Full width of the peak window centred on zero delay.
    pub window_ps: u64,
    /// Bins entirely beyond ±floor_min_ps estimate the accidental floor.
    pub floor_min_ps: u64,
}

impl Default for CarOptions {
    fn default() -> Self {
        Self {
            window_ps: 1000,
            floor_min_ps: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarEstimate {
    pub car: f64,
    pub sigma: f64,
    /// Raw counts in the peak window.
    pub peak_counts: u64,
    /// Accidental counts expected in the peak window.
    pub floor_counts: f64,
    /// Set when the floor holds no counts: `car` is then a lower bound
    /// computed as if one floor count had been seen.
    pub lower_bound: bool,
}

/// Coincidence-to-accidental ratio, peak/floor − 1, with Poisson errors.
pub fn car(hist: &Histogram, opts: &CarOptions) -> Result<CarEstimate> {
    let bin = hist.bin_ps as i64;
    let half_w = (opts.window_ps / 2) as i64;
    if opts.window_ps == 0 || !opts.window_ps.is_multiple_of(2 * hist.bin_ps) {
        return Err(Error::InvalidInput(format!(
            "peak window {} ps must be an even multiple of the {} ps bin",
            opts.window_ps, hist.bin_ps
        )));
    }
    if opts.floor_min_ps < opts.window_ps / 2 {
        return Err(Error::InvalidInput("floor region overlaps the peak window".into()));
    }
    let floor_min = opts.floor_min_ps as i64;
    let (mut peak, mut peak_bins) = (0u64, 0u64);
    let (mut floor, mut floor_bins) = (0u64, 0u64);
    for (k, &c) in hist.counts.iter().enumerate() {
        let lo = hist.bin_start_ps(k);
        let hi = lo + bin;
        if lo >= -half_w && hi <= half_w {
            peak += c;
            peak_bins += 1;
        } else if lo >= floor_min || hi <= -floor_min {
            floor += c;
            floor_bins += 1;
        }
    }
    if peak_bins == 0 || floor_bins == 0 {
        return Err(Error::InvalidInput(
            "histogram span leaves no peak or floor bins; widen the span".into(),
        ));
    }
    let scale = peak_bins as f64 / floor_bins as f64;
    let lower_bound = floor == 0;
    let floor_counts = floor.max(1) as f64 * scale;
    let ratio = peak as f64 / floor_counts;
    let sigma = if peak == 0 {
        0.0
    } else {
        ratio * (1.0 / peak as f64 + 1.0 / floor.max(1) as f64).sqrt()
    };
    Ok(CarEstimate {
        car: ratio - 1.0,
        sigma,
        peak_counts: peak,
        floor_counts: if lower_bound { 0.0 } else { floor_counts },
        lower_bound,
    })
}

/// Source pair rate C_s·C_i / (f·C_si).
pub fn pcr(c_s: f64, c_i: f64, c_si: f64, splitter_factor: f64) -> Result<f64> {
    if !(c_si > 0.0) {
        return Err(Error::NoCoincidences("the peak window"));
    }
    if !(splitter_factor > 0.0 && c_s >= 0.0 && c_i >= 0.0) {
        return Err(Error::InvalidInput("rates and splitter factor must be positive".into()));
    }
    Ok(c_s * c_i / (splitter_factor * c_si))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum G2Convention {
    /// C_si1i2·C_s / (2·C_si1·C_si2); uncorrelated light gives 0.5.
    #[default]
    Halved,
    /// C_si1i2·C_s / (C_si1·C_si2); uncorrelated light gives 1.
    Standard,
}

impl G2Convention {
    fn divisor(self) -> f64 {
        match self {
            G2Convention::Halved => 2.0,
            G2Convention::Standard => 1.0,
        }
    }

    pub fn evaluate(self, c_s: f64, c_si1: f64, c_si2: f64, c_si1i2: f64) -> f64 {
        c_si1i2 * c_s / (self.divisor() * c_si1 * c_si2)
    }
}

/// Per-herald window counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeraldCounts {
    pub heralds: u64,
    pub with_a: u64,
    pub with_b: u64,
    pub with_both: u64,
}

/// For each signal tag, whether some tag of each idler channel lies within
/// ±window_ps.
pub fn herald_counts(stream: &TagStream, s: u16, i1: u16, i2: u16, window_ps: u64) -> Result<HeraldCounts> {
    stream.ensure_sorted()?;
    let sig = stream.channel_times(s);
    let a = stream.channel_times(i1);
    let b = stream.channel_times(i2);
    let w = window_ps;
    let hit = |times: &[u64], start: &mut usize, t: u64| -> bool {
        let lo = t.saturating_sub(w);
        while *start < times.len() && times[*start] < lo {
            *start += 1;
        }
        *start < times.len() && times[*start] <= t + w
    };
    let (mut pa, mut pb) = (0usize, 0usize);
    let mut c = HeraldCounts {
        heralds: sig.len() as u64,
        with_a: 0,
        with_b: 0,
        with_both: 0,
    };
    for &t in &sig {
        let ha = hit(&a, &mut pa, t);
        let hb = hit(&b, &mut pb, t);
        c.with_a += ha as u64;
        c.with_b += hb as u64;
        c.with_both += (ha && hb) as u64;
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct G2Options {
    pub window_ps: u64,
    #[serde(default)]
    pub convention: G2Convention,
    pub resamples: usize,
    pub seed: u64,
}

impl Default for G2Options {
    fn default() -> Self {
        Self {
            window_ps: 500,
            convention: G2Convention::Halved,
            resamples: 1000,
            seed: 0x6_2e55,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct G2Estimate {
    pub g2: f64,
    /// Standard deviation over Poisson resamples of the four counts.
    pub sigma: f64,
    pub counts: HeraldCounts,
    pub convention: G2Convention,
}

/// Heralded g⁽²⁾(0) from signal, idler-A and idler-B channels.
pub fn heralded_g2(stream: &TagStream, s: u16, i1: u16, i2: u16, opts: &G2Options) -> Result<G2Estimate> {
    let counts = herald_counts(stream, s, i1, i2, opts.window_ps)?;
    if counts.with_a == 0 || counts.with_b == 0 {
        return Err(Error::NoCoincidences("a signal–idler arm"));
    }
    let conv = opts.convention;
    let g2 = conv.evaluate(
        counts.heralds as f64,
        counts.with_a as f64,
        counts.with_b as f64,
        counts.with_both as f64,
    );
    let sigma = poisson_resample_sigma(&counts, conv, opts.resamples, opts.seed)?;
    Ok(G2Estimate {
        g2,
        sigma,
        counts,
        convention: conv,
    })
}

fn poisson_resample_sigma(c: &HeraldCounts, conv: G2Convention, resamples: usize, seed: u64) -> Result<f64> {
    if resamples < 2 {
        return Ok(0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |mean: u64, rng: &mut ChaCha8Rng| -> Result<f64> {
        if mean == 0 {
            return Ok(0.0);
        }
        let p = Poisson::new(mean as f64).map_err(|e| Error::Numerical(e.to_string()))?;
        Ok(p.sample(rng))
    };
    let mut values = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let s = draw(c.heralds, &mut rng)?;
        let a = draw(c.with_a, &mut rng)?;
        let b = draw(c.with_b, &mut rng)?;
        let ab = draw(c.with_both, &mut rng)?;
        if a > 0.0 && b > 0.0 {
            values.push(conv.evaluate(s, a, b, ab));
        }
    }
    if values.len() < 2 {
        return Err(Error::NoCoincidences("the Poisson resamples"));
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64;
    Ok(var.sqrt())
}

/// Closed-form CAR for a Poisson pair source: true pairs over accidentals
/// in one window, η_s η_i R / (S_s S_i w).
pub fn analytic_car(pair_rate_hz: f64, eta_s: f64, eta_i: f64, singles_s_hz: f64, singles_i_hz: f64, window_ps: f64) -> f64 {
    eta_s * eta_i * pair_rate_hz / (singles_s_hz * singles_i_hz * window_ps * 1e-12)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisOptions {
    /// Stream duration; inferred from the last timestamp when absent.
    #[serde(default)]
    pub duration_s: Option<f64>,
    pub bin_ps: u64,
    pub span_ps: u64,
    pub car: CarOptions,
    pub g2: G2Options,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            duration_s: None,
            bin_ps: 50,
            span_ps: 40_000,
            car: CarOptions::default(),
            g2: G2Options::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceReport {
    pub duration_s: f64,
    pub singles_hz: Vec<f64>,
    /// Signal singles rate.
    pub c_s: f64,
    /// Idler singles rate, summed over both arms with a splitter.
    pub c_i: f64,
    /// Raw signal–idler(A) coincidence rate in the peak window.
    pub c_si: f64,
    /// Accidental rate in the peak window, C_si(∞).
    pub accidental_hz: f64,
    pub splitter_factor: f64,
    pub pcr_hz: f64,
    /// Poisson error of PCR from the three counts, treated as independent.
    pub pcr_sigma_hz: f64,
    pub car: CarEstimate,
    pub window_ps: u64,
    pub histogram: Histogram,
    pub g2: Option<G2Estimate>,
}

/// Singles, CAR, PCR and heralded g2 of a signal/idler stream; a third channel is
/// taken as the second idler arm behind a 50:50 splitter.
pub fn analyze(stream: &TagStream, opts: &AnalysisOptions) -> Result<CoincidenceReport> {
    stream.ensure_sorted()?;
    let split = stream.channel_count() >= 3;
    let duration_s = match opts.duration_s {
        Some(d) if d > 0.0 => d,
        Some(d) => return Err(Error::InvalidInput(format!("duration must be positive, got {d}"))),
        None => match stream.records().last() {
            Some(r) => (r.timestamp_ps + 1) as f64 * 1e-12,
            None => return Err(Error::InvalidInput("empty tag stream".into())),
        },
    };
    let counts = stream.counts_per_channel();
    let singles_hz: Vec<f64> = counts.iter().map(|&c| c as f64 / duration_s).collect();
    let n_s = counts[SIGNAL as usize];
    let n_i = counts[IDLER_A as usize] + if split { counts[IDLER_B as usize] } else { 0 };
    let histogram = coincidence_histogram(stream, SIGNAL, IDLER_A, opts.bin_ps, opts.span_ps)?;
    let car_est = car(&histogram, &opts.car)?;
    let n_si = car_est.peak_counts;
    let factor = if split { 2.0 } else { 1.0 };
    let (c_s, c_i, c_si) = (n_s as f64 / duration_s, n_i as f64 / duration_s, n_si as f64 / duration_s);
    let pcr_hz = pcr(c_s, c_i, c_si, factor)?;
    let rel = (1.0 / n_s.max(1) as f64 + 1.0 / n_i.max(1) as f64 + 1.0 / n_si as f64).sqrt();
    let g2 = if split {
        Some(heralded_g2(stream, SIGNAL, IDLER_A, IDLER_B, &opts.g2)?)
    } else {
        None
    };
    Ok(CoincidenceReport {
        duration_s,
        singles_hz,
        c_s,
        c_i,
        c_si,
        accidental_hz: car_est.floor_counts / duration_s,
        splitter_factor: factor,
        pcr_hz,
        pcr_sigma_hz: pcr_hz * rel,
        car: car_est,
        window_ps: opts.car.window_ps,
        histogram,
        g2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tags::TagRecord;

    fn stream(recs: &[(u64, u16)]) -> TagStream {
        let mut r: Vec<TagRecord> = recs
            .iter()
            .map(|&(t, c)| TagRecord {
                timestamp_ps: t,
                channel: c,
            })
            .collect();
        r.sort();
        TagStream::new(3, r).unwrap()
    }

    #[test]
    fn zero_delay_lands_in_one_bin() {
        let s = stream(&[(1000, 0), (1000, 1), (5000, 0), (5000, 1)]);
        let h = coincidence_histogram(&s, 0, 1, 10, 200).unwrap();
        assert_eq!(h.total(), 2);
        assert_eq!(h.counts[10], 2);
        assert_eq!(h.bin_start_ps(10), 0);
    }

    #[test]
    fn unsorted_rejected() {
        let s = TagStream::new(
            2,
            vec![
                TagRecord { timestamp_ps: 5, channel: 0 },
                TagRecord { timestamp_ps: 1, channel: 1 },
            ],
        )
        .unwrap();
        assert!(matches!(coincidence_histogram(&s, 0, 1, 1, 10), Err(Error::UnsortedStream { index: 1 })));
    }

    #[test]
    fn flat_histogram_has_zero_car() {
        let h = Histogram { bin_ps: 100, span_ps: 40_000, counts: vec![7; 400] };
        let c = car(&h, &CarOptions::default()).unwrap();
        assert!(c.car.abs() < 1e-12);
        assert!(!c.lower_bound);
    }

    #[test]
    fn empty_floor_gives_flagged_bound() {
        let mut counts = vec![0; 400];
        counts[200] = 50;
        let h = Histogram { bin_ps: 100, span_ps: 40_000, counts };
        let c = car(&h, &CarOptions::default()).unwrap();
        assert!(c.lower_bound && c.car.is_finite() && c.car > 0.0);
    }

    #[test]
    fn pcr_arithmetic() {
        assert!((pcr(1e6, 1e6, 1e5, 2.0).unwrap() - 5e6).abs() < 1e-6);
        assert!(pcr(1.0, 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn herald_windows_are_inclusive() {
        let s = stream(&[(1000, 0), (1500, 1), (500, 2), (3000, 0), (3501, 1)]);
        let c = herald_counts(&s, 0, 1, 2, 500).unwrap();
        assert_eq!(c, HeraldCounts { heralds: 2, with_a: 1, with_b: 1, with_both: 1 });
    }

    #[test]
    fn g2_requires_twofolds() {
        let s = stream(&[(1000, 0), (1200, 1)]);
        assert!(heralded_g2(&s, 0, 1, 2, &G2Options::default()).is_err());
    }
}
