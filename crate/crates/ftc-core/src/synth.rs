//! Synthetic benchmark scenes: seasonal air/soil temperatures, frozen-state
//! truth, and dual-polarization TBs whose seasonal structure follows the
//! landscape freeze-thaw signal.
//!
//! Each pixel gets a smooth seasonal air-temperature cycle (with per-pixel
//! phase jitter and AR(1) weather noise); soil temperature is a lagged
//! exponential smoothing of air. Truth is frozen where soil sits below
//! 273.15 K. TBs are warm in winter and depressed after thaw; the land part
//! of the emission regime follows the soil temperature through a narrow
//! sigmoid, while the open-water part switches with lake ice, which lags the
//! land transition at both ends of the season. Short winter warm spells
//! ("melt transients") depress the TBs and widen the polarization gap
//! without flipping the truth.

use chrono::{Datelike, Duration, NaiveDate};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{FtcError, Result};
use crate::series::{
    AncillaryRecord, BinarySeries, LandCover, PixelSeries, StratumKey, TempSeries, WaterBin,
};

/// Soil temperature below which a synthetic day is truly frozen (kelvin).
pub const TRUTH_FREEZE_K: f64 = 273.15;

/// Winter warm-spell behavior.
#[derive(Debug, Clone, PartialEq)]
pub struct MeltParams {
    /// Expected events per winter (Poisson).
    pub events_per_winter: f64,
    /// TB depression at the event core (kelvin).
    pub depth_k: f64,
    /// How far the polarization gap moves toward its summer value during an
    /// event core (0 = unchanged, 1 = fully summer-like).
    pub gap_boost: f64,
    /// Event duration range in days (inclusive).
    pub duration_days: (usize, usize),
    /// Draw event timing once per stratum (all pixels share warm spells)
    /// instead of independently per pixel.
    pub synchronized: bool,
}

impl MeltParams {
    pub fn none() -> Self {
        MeltParams {
            events_per_winter: 0.0,
            depth_k: 0.0,
            gap_boost: 0.0,
            duration_days: (3, 6),
            synchronized: false,
        }
    }
}

/// Generator parameters of one stratum.
#[derive(Debug, Clone, PartialEq)]
pub struct StratumGenParams {
    pub key: StratumKey,
    /// Peak-winter V-pol TB mean (kelvin).
    pub winter_tb_v_k: f64,
    /// Winter-minus-summer TB depression (kelvin); must be positive.
    pub thaw_depression_k: f64,
    pub winter_pol_gap_k: f64,
    pub summer_pol_gap_k: f64,
    /// Day-to-day common-mode TB noise (kelvin, AR(1)).
    pub tb_noise_k: f64,
    /// Independent per-polarization noise (kelvin, white).
    pub pol_noise_k: f64,
    /// Slow common-mode TB drift (kelvin, long-memory AR(1)); smears the
    /// annual histogram of low-water pixels.
    pub tb_wander_k: f64,
    pub air_mean_k: f64,
    pub air_amplitude_k: f64,
    pub air_noise_k: f64,
    /// Exponential smoothing factor of soil toward air (smaller = longer
    /// lag; the zero-curtain analogue).
    pub soil_smoothing: f64,
    /// Width (kelvin) of the land emission-regime transition around the
    /// truth threshold.
    pub transition_width_k: f64,
    pub melt: MeltParams,
    /// Days the lake-ice state lags the land state at both transitions.
    pub lake_ice_lag_days: usize,
    /// Std-dev (days) of the per-pixel shift of the seasonal cycle.
    pub phase_jitter_days: f64,
}

impl StratumGenParams {
    fn validate(&self) -> Result<()> {
        if !(self.thaw_depression_k > 0.0) {
            return Err(FtcError::contract(format!(
                "stratum {}: summer TB mean would be >= winter mean (depression {})",
                self.key, self.thaw_depression_k
            )));
        }
        if self.winter_pol_gap_k < 0.0 || self.summer_pol_gap_k < 0.0 {
            return Err(FtcError::contract("polarization gaps must be >= 0"));
        }
        if !(0.0 < self.soil_smoothing && self.soil_smoothing <= 1.0) {
            return Err(FtcError::contract("soil_smoothing must be in (0, 1]"));
        }
        if !(self.transition_width_k > 0.0) {
            return Err(FtcError::contract("transition_width_k must be > 0"));
        }
        if self.melt.duration_days.0 > self.melt.duration_days.1
            || self.melt.duration_days.0 == 0
        {
            return Err(FtcError::contract("melt duration range is invalid"));
        }
        Ok(())
    }
}

/// Full generator configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub rng_seed: u64,
    pub n_pixels: usize,
    pub years: usize,
    pub start_year: i32,
    /// Observation cadence in days (1 = daily; 2 = every other day).
    pub revisit_days: usize,
    pub strata: Vec<StratumGenParams>,
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_pixels < 1 {
            return Err(FtcError::contract("n_pixels must be >= 1"));
        }
        if self.years < 1 {
            return Err(FtcError::contract("years must be >= 1"));
        }
        if self.revisit_days < 1 {
            return Err(FtcError::contract("revisit_days must be >= 1"));
        }
        if self.strata.is_empty() {
            return Err(FtcError::contract("at least one stratum is required"));
        }
        for s in &self.strata {
            s.validate()?;
        }
        Ok(())
    }

    /// The default benchmark domain: four strata spanning the water-fraction
    /// bins, moderate winter warm spells, five years, 200 pixels.
    pub fn default_scene() -> Self {
        GenConfig {
            rng_seed: 42,
            n_pixels: 200,
            years: 5,
            start_year: 2015,
            revisit_days: 1,
            strata: vec![
                StratumGenParams {
                    key: StratumKey::new(LandCover::WS, WaterBin::W00_05),
                    winter_tb_v_k: 262.0,
                    thaw_depression_k: 22.0,
                    winter_pol_gap_k: 4.0,
                    summer_pol_gap_k: 12.0,
                    tb_noise_k: 2.2,
                    pol_noise_k: 0.35,
                    tb_wander_k: 7.5,
                    air_mean_k: 272.0,
                    air_amplitude_k: 18.0,
                    air_noise_k: 1.0,
                    soil_smoothing: 0.10,
                    transition_width_k: 1.0,
                    melt: MeltParams {
                        events_per_winter: 2.0,
                        depth_k: 14.0,
                        gap_boost: 0.85,
                        duration_days: (3, 6),
                        synchronized: false,
                    },
                    lake_ice_lag_days: 0,
                    phase_jitter_days: 4.0,
                },
                StratumGenParams {
                    key: StratumKey::new(LandCover::OS, WaterBin::W05_15),
                    winter_tb_v_k: 258.0,
                    thaw_depression_k: 34.0,
                    winter_pol_gap_k: 4.5,
                    summer_pol_gap_k: 13.0,
                    tb_noise_k: 2.5,
                    pol_noise_k: 0.35,
                    tb_wander_k: 5.5,
                    air_mean_k: 272.0,
                    air_amplitude_k: 18.0,
                    air_noise_k: 1.0,
                    soil_smoothing: 0.10,
                    transition_width_k: 1.0,
                    melt: MeltParams {
                        events_per_winter: 2.0,
                        depth_k: 18.0,
                        gap_boost: 0.85,
                        duration_days: (3, 6),
                        synchronized: false,
                    },
                    lake_ice_lag_days: 3,
                    phase_jitter_days: 4.0,
                },
                StratumGenParams {
                    key: StratumKey::new(LandCover::S, WaterBin::W15_35),
                    winter_tb_v_k: 255.0,
                    thaw_depression_k: 50.0,
                    winter_pol_gap_k: 5.0,
                    summer_pol_gap_k: 14.0,
                    tb_noise_k: 2.8,
                    pol_noise_k: 0.4,
                    tb_wander_k: 4.5,
                    air_mean_k: 272.0,
                    air_amplitude_k: 18.0,
                    air_noise_k: 1.0,
                    soil_smoothing: 0.10,
                    transition_width_k: 0.9,
                    melt: MeltParams {
                        events_per_winter: 2.0,
                        depth_k: 24.0,
                        gap_boost: 0.85,
                        duration_days: (3, 6),
                        synchronized: false,
                    },
                    lake_ice_lag_days: 5,
                    phase_jitter_days: 4.0,
                },
                StratumGenParams {
                    key: StratumKey::new(LandCover::G, WaterBin::W35_50),
                    winter_tb_v_k: 252.0,
                    thaw_depression_k: 58.0,
                    winter_pol_gap_k: 5.0,
                    summer_pol_gap_k: 15.0,
                    tb_noise_k: 3.0,
                    pol_noise_k: 0.4,
                    tb_wander_k: 3.0,
                    air_mean_k: 272.0,
                    air_amplitude_k: 18.0,
                    air_noise_k: 1.0,
                    soil_smoothing: 0.10,
                    transition_width_k: 0.8,
                    melt: MeltParams {
                        events_per_winter: 1.5,
                        depth_k: 20.0,
                        gap_boost: 0.8,
                        duration_days: (3, 6),
                        synchronized: false,
                    },
                    lake_ice_lag_days: 8,
                    phase_jitter_days: 4.0,
                },
            ],
        }
    }

    /// Winter scenario with frequent, stratum-wide warm spells: the stress
    /// case where instantaneous polarization thresholding false-alarms while
    /// windowed reconstruction should not.
    pub fn melt_heavy() -> Self {
        let base = Self::default_scene();
        let mut s1 = base.strata[1].clone();
        s1.key = StratumKey::new(LandCover::S, WaterBin::W05_15);
        s1.thaw_depression_k = 44.0;
        s1.melt = MeltParams {
            events_per_winter: 6.0,
            depth_k: 20.0,
            gap_boost: 1.0,
            duration_days: (3, 7),
            synchronized: true,
        };
        s1.tb_wander_k = 4.0;
        let mut s2 = base.strata[2].clone();
        s2.key = StratumKey::new(LandCover::WS, WaterBin::W15_35);
        s2.thaw_depression_k = 52.0;
        s2.melt = MeltParams {
            events_per_winter: 6.0,
            depth_k: 24.0,
            gap_boost: 1.0,
            duration_days: (3, 7),
            synchronized: true,
        };
        s2.tb_wander_k = 4.0;
        GenConfig {
            rng_seed: 7,
            n_pixels: 60,
            years: 3,
            start_year: 2015,
            revisit_days: 1,
            strata: vec![s1, s2],
        }
    }

    /// A stratum whose winter and summer polarization ratios nearly
    /// coincide, so the seasonal-threshold reference difference collapses
    /// while the TB depression remains strong.
    pub fn degenerate_npr() -> Self {
        GenConfig {
            rng_seed: 11,
            n_pixels: 40,
            years: 3,
            start_year: 2015,
            revisit_days: 1,
            strata: vec![StratumGenParams {
                key: StratumKey::new(LandCover::OS, WaterBin::W00_05),
                winter_tb_v_k: 260.0,
                thaw_depression_k: 30.0,
                winter_pol_gap_k: 6.0,
                // Chosen so (gap / (tb_v + tb_h)) is nearly season-invariant.
                summer_pol_gap_k: 5.4,
                tb_noise_k: 2.2,
                pol_noise_k: 0.4,
                tb_wander_k: 6.0,
                air_mean_k: 272.0,
                air_amplitude_k: 18.0,
                air_noise_k: 1.0,
                soil_smoothing: 0.10,
                transition_width_k: 1.0,
                melt: MeltParams {
                    events_per_winter: 0.5,
                    depth_k: 10.0,
                    gap_boost: 0.5,
                    duration_days: (3, 5),
                    synchronized: false,
                },
                lake_ice_lag_days: 0,
                phase_jitter_days: 4.0,
            }],
        }
    }
}

/// Everything one generator run produces.
#[derive(Debug, Clone)]
pub struct SyntheticScene {
    pub pixels: Vec<PixelSeries>,
    pub temps: Vec<TempSeries>,
    pub truth: Vec<BinarySeries>,
    pub ancillary: Vec<AncillaryRecord>,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(stream)))
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller.
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn poisson(rng: &mut ChaCha8Rng, lambda: f64) -> usize {
    if lambda <= 0.0 {
        return 0;
    }
    let l = (-lambda).exp();
    let mut k = 0usize;
    let mut p = 1.0f64;
    loop {
        p *= rng.gen::<f64>();
        if p <= l {
            return k;
        }
        k += 1;
    }
}

fn quantize_mk(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[derive(Debug, Clone, Copy)]
struct MeltEvent {
    start: usize,
    duration: usize,
    peak_air_k: f64,
}

/// Seasonal air baseline for day index `d` with a phase shift in days.
fn air_base(params: &StratumGenParams, d: f64, phase: f64) -> f64 {
    // Coldest around mid-January, warmest mid-July.
    params.air_mean_k
        - params.air_amplitude_k
            * (std::f64::consts::TAU * (d - phase - 15.0) / 365.25).cos()
}

/// Maximal runs of deep-winter days (baseline air below freezing margin).
fn winter_runs(params: &StratumGenParams, n_days: usize, phase: f64) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut start = None;
    for d in 0..n_days {
        let cold = air_base(params, d as f64, phase) < 268.0;
        match (cold, start) {
            (true, None) => start = Some(d),
            (false, Some(s)) => {
                if d - s >= 30 {
                    runs.push((s, d));
                }
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        if n_days - s >= 30 {
            runs.push((s, n_days));
        }
    }
    runs
}

fn draw_melt_events(
    params: &StratumGenParams,
    rng: &mut ChaCha8Rng,
    n_days: usize,
    phase: f64,
) -> Vec<MeltEvent> {
    let melt = &params.melt;
    let mut events = Vec::new();
    if melt.events_per_winter <= 0.0 {
        return events;
    }
    for (start, end) in winter_runs(params, n_days, phase) {
        let n = poisson(rng, melt.events_per_winter);
        let len = end - start;
        for _ in 0..n {
            let duration =
                rng.gen_range(melt.duration_days.0..=melt.duration_days.1);
            // Skip the earliest fifth of the winter; spells cluster later.
            let lo = start + len / 5;
            let hi = end.saturating_sub(duration + 1);
            if hi <= lo {
                continue;
            }
            events.push(MeltEvent {
                start: rng.gen_range(lo..hi),
                duration,
                peak_air_k: 276.5 + rng.gen::<f64>() * 2.0,
            });
        }
    }
    events
}

/// Trapezoid envelope of all events: 0.5 on the first/last day, 1 inside.
fn melt_envelope(events: &[MeltEvent], n_days: usize) -> (Vec<f64>, Vec<f64>) {
    let mut env = vec![0.0f64; n_days];
    let mut peak = vec![0.0f64; n_days];
    for e in events {
        for d in e.start..(e.start + e.duration).min(n_days) {
            let edge = d == e.start || d + 1 == (e.start + e.duration).min(n_days);
            let v = if edge { 0.5 } else { 1.0 };
            if v > env[d] {
                env[d] = v;
                peak[d] = e.peak_air_k;
            }
        }
    }
    (env, peak)
}

fn days_in_span(start_year: i32, years: usize) -> (NaiveDate, usize) {
    let start = NaiveDate::from_ymd_opt(start_year, 1, 1).expect("valid start year");
    let end = NaiveDate::from_ymd_opt(start_year + years as i32 - 1, 12, 31)
        .expect("valid end year");
    (start, (end - start).num_days() as usize + 1)
}

/// Generates a full synthetic scene. Deterministic for a given config;
/// pixel streams are independent of pixel count and ordering.
pub fn generate_synthetic(cfg: &GenConfig) -> Result<SyntheticScene> {
    cfg.validate()?;
    let (start, n_days) = days_in_span(cfg.start_year, cfg.years);

    // Synchronized warm spells are drawn once per stratum from the
    // unjittered seasonal baseline.
    let stratum_events: Vec<Option<Vec<MeltEvent>>> = cfg
        .strata
        .iter()
        .enumerate()
        .map(|(si, params)| {
            params.melt.synchronized.then(|| {
                let mut rng = stream_rng(cfg.rng_seed, 0x5752_0000 + si as u64);
                draw_melt_events(params, &mut rng, n_days, 0.0)
            })
        })
        .collect();

    let mut pixels = Vec::with_capacity(cfg.n_pixels);
    let mut temps = Vec::with_capacity(cfg.n_pixels);
    let mut truth = Vec::with_capacity(cfg.n_pixels);
    let mut ancillary = Vec::with_capacity(cfg.n_pixels);

    for i in 0..cfg.n_pixels {
        let si = i % cfg.strata.len();
        let params = &cfg.strata[si];
        let pixel_id = format!("p{:04}", i);
        let mut rng = stream_rng(cfg.rng_seed, i as u64);

        let (wf_lo, wf_hi) = match params.key.water_bin {
            WaterBin::W00_05 => (0.0, 0.05),
            WaterBin::W05_15 => (0.05, 0.15),
            WaterBin::W15_35 => (0.15, 0.35),
            WaterBin::W35_50 => (0.35, 0.50),
        };
        let water_fraction = rng.gen_range(wf_lo..wf_hi);
        let phase = normal(&mut rng) * params.phase_jitter_days;

        let events = match &stratum_events[si] {
            Some(shared) => shared.clone(),
            None => draw_melt_events(params, &mut rng, n_days, phase),
        };
        let (env, peak) = melt_envelope(&events, n_days);

        let mut air = vec![0.0f64; n_days];
        let mut soil = vec![0.0f64; n_days];
        let mut frozen = vec![false; n_days];
        let mut tb_v = vec![0.0f64; n_days];
        let mut tb_h = vec![0.0f64; n_days];

        let mut air_ar = 0.0f64;
        let rho_air = 0.6;
        let mut wander = 0.0f64;
        let rho_wander = 0.97;
        let mut common = 0.0f64;
        let rho_common = 0.5;

        for d in 0..n_days {
            let base = air_base(params, d as f64, phase);
            air_ar = rho_air * air_ar
                + params.air_noise_k * (1.0 - rho_air * rho_air).sqrt() * normal(&mut rng);
            let bump = if env[d] > 0.0 {
                (peak[d] - base).max(0.0) * env[d]
            } else {
                0.0
            };
            let a = base + air_ar + bump;
            air[d] = a;
            soil[d] = if d == 0 {
                base
            } else {
                soil[d - 1] + params.soil_smoothing * (a - soil[d - 1])
            };
            frozen[d] = soil[d] < TRUTH_FREEZE_K;
        }

        let w_norm = (water_fraction / 0.5).clamp(0.0, 1.0);
        for d in 0..n_days {
            let s_land = sigmoid((TRUTH_FREEZE_K - soil[d]) / params.transition_width_k);
            let lag_d = d.saturating_sub(params.lake_ice_lag_days);
            let ice = if soil[lag_d] < TRUTH_FREEZE_K { 1.0 } else { 0.0 };
            let regime = (1.0 - w_norm) * s_land + w_norm * ice;

            wander = rho_wander * wander
                + params.tb_wander_k * (1.0 - rho_wander * rho_wander).sqrt() * normal(&mut rng);
            common = rho_common * common
                + params.tb_noise_k * (1.0 - rho_common * rho_common).sqrt() * normal(&mut rng);

            let melt_dip = params.melt.depth_k * env[d] * s_land;
            let base_v =
                params.winter_tb_v_k - params.thaw_depression_k * (1.0 - regime) - melt_dip;
            let gap_regime = regime * (1.0 - params.melt.gap_boost * env[d] * s_land);
            let gap = params.summer_pol_gap_k
                + (params.winter_pol_gap_k - params.summer_pol_gap_k) * gap_regime;

            let v = base_v + wander + common + params.pol_noise_k * normal(&mut rng);
            let h = base_v - gap + wander + common + params.pol_noise_k * normal(&mut rng);
            tb_v[d] = quantize_mk(v.clamp(105.0, 325.0));
            tb_h[d] = quantize_mk(h.clamp(105.0, 325.0));
        }

        let observed: Vec<bool> = (0..n_days)
            .map(|d| (d + i) % cfg.revisit_days == 0)
            .collect();

        let mut series = PixelSeries::new(
            pixel_id.clone(),
            start,
            tb_v,
            tb_h,
            observed,
        )?;
        series.stratum = Some(params.key);
        pixels.push(series);
        temps.push(TempSeries::new(
            pixel_id.clone(),
            start,
            soil.iter().map(|&v| quantize_mk(v)).collect(),
            air.iter().map(|&v| quantize_mk(v)).collect(),
        )?);
        truth.push(BinarySeries::new(pixel_id.clone(), start, frozen)?);
        ancillary.push(AncillaryRecord {
            pixel_id,
            land_cover: params.key.land_cover,
            water_fraction: (water_fraction * 1e4).round() / 1e4,
        });
    }

    Ok(SyntheticScene {
        pixels,
        temps,
        truth,
        ancillary,
    })
}

/// First and last calendar years covered by a scene config.
pub fn year_range(cfg: &GenConfig) -> (i32, i32) {
    (cfg.start_year, cfg.start_year + cfg.years as i32 - 1)
}

/// Convenience: calendar-year slice boundaries of a scene.
pub fn year_of(date: NaiveDate) -> i32 {
    date.year()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(cfg: &GenConfig) -> GenConfig {
        GenConfig {
            n_pixels: 8,
            years: 2,
            ..cfg.clone()
        }
    }

    #[test]
    fn rejects_inconsistent_config() {
        let mut cfg = small(&GenConfig::default_scene());
        cfg.strata[0].thaw_depression_k = -5.0;
        assert!(generate_synthetic(&cfg).is_err());
        let mut cfg = small(&GenConfig::default_scene());
        cfg.n_pixels = 0;
        assert!(generate_synthetic(&cfg).is_err());
    }

    #[test]
    fn same_seed_is_identical() {
        let cfg = small(&GenConfig::default_scene());
        let a = generate_synthetic(&cfg).unwrap();
        let b = generate_synthetic(&cfg).unwrap();
        assert_eq!(a.pixels, b.pixels);
        assert_eq!(a.temps, b.temps);
        assert_eq!(a.truth, b.truth);
        assert_eq!(a.ancillary, b.ancillary);
    }

    #[test]
    fn truth_is_consistent_with_soil_threshold() {
        let cfg = small(&GenConfig::default_scene());
        let scene = generate_synthetic(&cfg).unwrap();
        for (temps, truth) in scene.temps.iter().zip(&scene.truth) {
            for d in 0..temps.len() {
                assert_eq!(truth.frozen[d], temps.soil_k[d] < TRUTH_FREEZE_K);
            }
        }
    }

    #[test]
    fn winter_summer_depression_matches_config() {
        // The [0.15, 0.35) stratum is configured for a ~50 K depression.
        let mut cfg = GenConfig::default_scene();
        cfg.n_pixels = 16;
        cfg.years = 3;
        let scene = generate_synthetic(&cfg).unwrap();
        let mut winter = (0.0, 0usize);
        let mut summer = (0.0, 0usize);
        for s in &scene.pixels {
            if s.stratum.unwrap().water_bin != WaterBin::W15_35 {
                continue;
            }
            for (d, &v) in s.tb_v.iter().enumerate() {
                match s.date(d).month() {
                    12 | 1 | 2 => {
                        winter.0 += v;
                        winter.1 += 1;
                    }
                    6 | 7 | 8 => {
                        summer.0 += v;
                        summer.1 += 1;
                    }
                    _ => {}
                }
            }
        }
        let diff = winter.0 / winter.1 as f64 - summer.0 / summer.1 as f64;
        assert!(
            (40.0..=60.0).contains(&diff),
            "winter-summer TB_V difference {} outside 50 +/- 10 K",
            diff
        );
    }

    #[test]
    fn melt_transients_depress_tb_without_flipping_truth() {
        let mut cfg = GenConfig::melt_heavy();
        cfg.n_pixels = 4;
        cfg.years = 2;
        let scene = generate_synthetic(&cfg).unwrap();
        // January means within pixels: days with warm-spell air above 275 K
        // must show depressed TBs while remaining truly frozen.
        let mut spell_days = 0usize;
        for (p, (t, tr)) in scene
            .pixels
            .iter()
            .zip(scene.temps.iter().zip(&scene.truth))
        {
            let mut cold = (0.0, 0usize);
            for d in 0..p.len() {
                let m = p.date(d).month();
                if (m == 1 || m == 2) && t.air_k[d] < 268.0 {
                    cold.0 += p.tb_v[d];
                    cold.1 += 1;
                }
            }
            let cold_mean = cold.0 / cold.1 as f64;
            for d in 0..p.len() {
                let m = p.date(d).month();
                if (m == 1 || m == 2) && t.air_k[d] > 275.0 {
                    spell_days += 1;
                    assert!(tr.frozen[d], "warm spell flipped truth on day {}", d);
                    assert!(
                        p.tb_v[d] < cold_mean - 5.0,
                        "warm spell day {} not depressed: {} vs {}",
                        d,
                        p.tb_v[d],
                        cold_mean
                    );
                }
            }
        }
        assert!(spell_days > 10, "melt-heavy scene produced {} spell days", spell_days);
    }

    #[test]
    fn revisit_thins_observations() {
        let mut cfg = small(&GenConfig::default_scene());
        cfg.revisit_days = 2;
        let scene = generate_synthetic(&cfg).unwrap();
        for p in &scene.pixels {
            let n_obs = p.observed.iter().filter(|&&o| o).count();
            assert!((n_obs as f64 / p.len() as f64 - 0.5).abs() < 0.01);
        }
    }
}
