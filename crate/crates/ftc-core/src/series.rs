//! Pixel-level time-series data model: TB series, temperature series,
//! binary freeze/thaw series, land-cover classes and strata.

use std::fmt;

use chrono::{Duration, NaiveDate};

use crate::error::{FtcError, Result};

/// Physical plausibility window for L-band brightness temperatures (kelvin).
pub const TB_MIN_K: f64 = 100.0;
pub const TB_MAX_K: f64 = 330.0;

/// Plausibility window for soil/air temperatures (kelvin).
pub const TEMP_MIN_K: f64 = 180.0;
pub const TEMP_MAX_K: f64 = 330.0;

/// IGBP-style land-cover classes used for stratification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LandCover {
    /// Open shrublands.
    OS,
    /// Woody savannas.
    WS,
    /// Savannas.
    S,
    /// Grasslands.
    G,
    /// Permanent snow/ice; excluded from training strata.
    SI,
    /// Barren; excluded from training strata.
    B,
}

impl LandCover {
    pub const ALL: [LandCover; 6] = [
        LandCover::OS,
        LandCover::WS,
        LandCover::S,
        LandCover::G,
        LandCover::SI,
        LandCover::B,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            LandCover::OS => "OS",
            LandCover::WS => "WS",
            LandCover::S => "S",
            LandCover::G => "G",
            LandCover::SI => "SI",
            LandCover::B => "B",
        }
    }

    pub fn from_code(code: &str) -> Result<Self> {
        match code {
            "OS" => Ok(LandCover::OS),
            "WS" => Ok(LandCover::WS),
            "S" => Ok(LandCover::S),
            "G" => Ok(LandCover::G),
            "SI" => Ok(LandCover::SI),
            "B" => Ok(LandCover::B),
            other => Err(FtcError::contract(format!(
                "unknown land-cover code {:?} (expected OS|WS|S|G|SI|B)",
                other
            ))),
        }
    }

    /// Permanent ice and barren pixels never receive a trained model.
    pub fn trainable(&self) -> bool {
        !matches!(self, LandCover::SI | LandCover::B)
    }
}

impl fmt::Display for LandCover {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Sub-grid open-water fraction bins. Left-closed; the last bin includes its
/// upper edge. Fractions above 0.50 are excluded from the partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum WaterBin {
    /// [0.00, 0.05)
    W00_05,
    /// [0.05, 0.15)
    W05_15,
    /// [0.15, 0.35)
    W15_35,
    /// [0.35, 0.50]
    W35_50,
}

impl WaterBin {
    pub const ALL: [WaterBin; 4] = [
        WaterBin::W00_05,
        WaterBin::W05_15,
        WaterBin::W15_35,
        WaterBin::W35_50,
    ];

    /// Bin for a water fraction, or `None` when the fraction exceeds 0.50.
    pub fn from_fraction(wf: f64) -> Result<Option<Self>> {
        if !(0.0..=1.0).contains(&wf) {
            return Err(FtcError::contract(format!(
                "water fraction {} outside [0, 1]",
                wf
            )));
        }
        Ok(if wf < 0.05 {
            Some(WaterBin::W00_05)
        } else if wf < 0.15 {
            Some(WaterBin::W05_15)
        } else if wf < 0.35 {
            Some(WaterBin::W15_35)
        } else if wf <= 0.50 {
            Some(WaterBin::W35_50)
        } else {
            None
        })
    }

    pub fn label(&self) -> &'static str {
        match self {
            WaterBin::W00_05 => "0.00-0.05",
            WaterBin::W05_15 => "0.05-0.15",
            WaterBin::W15_35 => "0.15-0.35",
            WaterBin::W35_50 => "0.35-0.50",
        }
    }

    /// File-name-safe identifier.
    pub fn id(&self) -> &'static str {
        match self {
            WaterBin::W00_05 => "w00-05",
            WaterBin::W05_15 => "w05-15",
            WaterBin::W15_35 => "w15-35",
            WaterBin::W35_50 => "w35-50",
        }
    }

    pub fn from_id(id: &str) -> Result<Self> {
        WaterBin::ALL
            .iter()
            .copied()
            .find(|b| b.id() == id)
            .ok_or_else(|| FtcError::contract(format!("unknown water bin id {:?}", id)))
    }

    /// Representative fraction at the bin center.
    pub fn midpoint(&self) -> f64 {
        match self {
            WaterBin::W00_05 => 0.025,
            WaterBin::W05_15 => 0.10,
            WaterBin::W15_35 => 0.25,
            WaterBin::W35_50 => 0.425,
        }
    }
}

impl fmt::Display for WaterBin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A training/retrieval stratum: one land-cover class crossed with one
/// water-fraction bin. Each stratum gets its own model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StratumKey {
    pub land_cover: LandCover,
    pub water_bin: WaterBin,
}

impl StratumKey {
    pub fn new(land_cover: LandCover, water_bin: WaterBin) -> Self {
        StratumKey {
            land_cover,
            water_bin,
        }
    }

    /// File-name-safe identifier, e.g. `WS_w00-05`.
    pub fn id(&self) -> String {
        format!("{}_{}", self.land_cover.as_str(), self.water_bin.id())
    }

    pub fn from_id(id: &str) -> Result<Self> {
        let (lc, wb) = id
            .split_once('_')
            .ok_or_else(|| FtcError::contract(format!("malformed stratum id {:?}", id)))?;
        Ok(StratumKey::new(
            LandCover::from_code(lc)?,
            WaterBin::from_id(wb)?,
        ))
    }
}

impl fmt::Display for StratumKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.land_cover, self.water_bin)
    }
}

fn check_daily_block(what: &str, pixel_id: &str, len: usize) -> Result<()> {
    if len == 0 {
        return Err(FtcError::contract(format!(
            "{} for pixel {} is empty",
            what, pixel_id
        )));
    }
    Ok(())
}

/// One grid cell's daily, contiguous dual-polarization TB record.
/// Contiguity is structural: the series stores a start date and one value
/// per subsequent day.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelSeries {
    pub pixel_id: String,
    pub start: NaiveDate,
    pub tb_v: Vec<f64>,
    pub tb_h: Vec<f64>,
    /// True where the day was actually observed (false = interpolated).
    pub observed: Vec<bool>,
    pub stratum: Option<StratumKey>,
}

impl PixelSeries {
    pub fn new(
        pixel_id: impl Into<String>,
        start: NaiveDate,
        tb_v: Vec<f64>,
        tb_h: Vec<f64>,
        observed: Vec<bool>,
    ) -> Result<Self> {
        let pixel_id = pixel_id.into();
        check_daily_block("TB series", &pixel_id, tb_v.len())?;
        if tb_v.len() != tb_h.len() || tb_v.len() != observed.len() {
            return Err(FtcError::contract(format!(
                "TB series for pixel {} has inconsistent lengths (v {}, h {}, observed {})",
                pixel_id,
                tb_v.len(),
                tb_h.len(),
                observed.len()
            )));
        }
        for (i, (&v, &h)) in tb_v.iter().zip(&tb_h).enumerate() {
            if observed[i] && !(TB_MIN_K < v && v < TB_MAX_K && TB_MIN_K < h && h < TB_MAX_K) {
                return Err(FtcError::contract(format!(
                    "TB out of range ({}, {}) K for pixel {} on day {}",
                    v, h, pixel_id, i
                )));
            }
            if !v.is_finite() || !h.is_finite() {
                return Err(FtcError::contract(format!(
                    "non-finite TB for pixel {} on day {}",
                    pixel_id, i
                )));
            }
        }
        Ok(PixelSeries {
            pixel_id,
            start,
            tb_v,
            tb_h,
            observed,
            stratum: None,
        })
    }

    pub fn len(&self) -> usize {
        self.tb_v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tb_v.is_empty()
    }

    pub fn date(&self, i: usize) -> NaiveDate {
        self.start + Duration::days(i as i64)
    }

    pub fn end(&self) -> NaiveDate {
        self.date(self.len() - 1)
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        (0..self.len()).map(|i| self.date(i))
    }

    /// Index of a date inside this series, if covered.
    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        let off = (date - self.start).num_days();
        if off >= 0 && (off as usize) < self.len() {
            Some(off as usize)
        } else {
            None
        }
    }
}

/// Daily near-surface soil and 2-m air temperature analogue for one pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct TempSeries {
    pub pixel_id: String,
    pub start: NaiveDate,
    pub soil_k: Vec<f64>,
    pub air_k: Vec<f64>,
}

impl TempSeries {
    pub fn new(
        pixel_id: impl Into<String>,
        start: NaiveDate,
        soil_k: Vec<f64>,
        air_k: Vec<f64>,
    ) -> Result<Self> {
        let pixel_id = pixel_id.into();
        check_daily_block("temperature series", &pixel_id, soil_k.len())?;
        if soil_k.len() != air_k.len() {
            return Err(FtcError::contract(format!(
                "temperature series for pixel {} has inconsistent lengths",
                pixel_id
            )));
        }
        for (i, (&s, &a)) in soil_k.iter().zip(&air_k).enumerate() {
            if !(TEMP_MIN_K < s && s < TEMP_MAX_K && TEMP_MIN_K < a && a < TEMP_MAX_K) {
                return Err(FtcError::contract(format!(
                    "temperature out of range ({}, {}) K for pixel {} on day {}",
                    s, a, pixel_id, i
                )));
            }
        }
        Ok(TempSeries {
            pixel_id,
            start,
            soil_k,
            air_k,
        })
    }

    pub fn len(&self) -> usize {
        self.soil_k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.soil_k.is_empty()
    }

    pub fn date(&self, i: usize) -> NaiveDate {
        self.start + Duration::days(i as i64)
    }
}

/// Daily binary freeze/thaw states for one pixel (`true` = frozen).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinarySeries {
    pub pixel_id: String,
    pub start: NaiveDate,
    pub frozen: Vec<bool>,
}

impl BinarySeries {
    pub fn new(pixel_id: impl Into<String>, start: NaiveDate, frozen: Vec<bool>) -> Result<Self> {
        let pixel_id = pixel_id.into();
        check_daily_block("binary series", &pixel_id, frozen.len())?;
        Ok(BinarySeries {
            pixel_id,
            start,
            frozen,
        })
    }

    pub fn len(&self) -> usize {
        self.frozen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frozen.is_empty()
    }

    pub fn date(&self, i: usize) -> NaiveDate {
        self.start + Duration::days(i as i64)
    }

    pub fn end(&self) -> NaiveDate {
        self.date(self.len() - 1)
    }

    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        let off = (date - self.start).num_days();
        if off >= 0 && (off as usize) < self.len() {
            Some(off as usize)
        } else {
            None
        }
    }
}

/// Ancillary record joining a pixel to its land cover and water fraction.
#[derive(Debug, Clone, PartialEq)]
pub struct AncillaryRecord {
    pub pixel_id: String,
    pub land_cover: LandCover,
    pub water_fraction: f64,
}
