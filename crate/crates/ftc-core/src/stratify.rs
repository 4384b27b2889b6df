//! Partitioning pixels into land-cover × water-fraction strata.

use std::collections::BTreeMap;

use crate::error::Result;
use crate::series::{AncillaryRecord, StratumKey, WaterBin};

/// A pixel left out of the partition, with the reason.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcludedPixel {
    pub pixel_id: String,
    pub water_fraction: f64,
    pub reason: String,
}

/// Result of [`stratify`]: a total partition of the retained pixels plus the
/// exclusion report.
#[derive(Debug, Clone, Default)]
pub struct Stratification {
    pub strata: BTreeMap<StratumKey, Vec<String>>,
    pub excluded: Vec<ExcludedPixel>,
}

impl Stratification {
    pub fn stratum_of(&self, pixel_id: &str) -> Option<StratumKey> {
        self.strata
            .iter()
            .find(|(_, pixels)| pixels.iter().any(|p| p == pixel_id))
            .map(|(k, _)| *k)
    }

    /// Pixel → stratum lookup table.
    pub fn lookup(&self) -> BTreeMap<String, StratumKey> {
        let mut map = BTreeMap::new();
        for (key, pixels) in &self.strata {
            for p in pixels {
                map.insert(p.clone(), *key);
            }
        }
        map
    }
}

/// Assigns every pixel to exactly one stratum. Pixels with water fraction
/// above 0.50 fall outside the bin scheme and are reported, not rejected.
pub fn stratify(records: &[AncillaryRecord]) -> Result<Stratification> {
    let mut out = Stratification::default();
    for rec in records {
        match WaterBin::from_fraction(rec.water_fraction)? {
            Some(bin) => {
                let key = StratumKey::new(rec.land_cover, bin);
                out.strata.entry(key).or_default().push(rec.pixel_id.clone());
            }
            None => out.excluded.push(ExcludedPixel {
                pixel_id: rec.pixel_id.clone(),
                water_fraction: rec.water_fraction,
                reason: format!(
                    "water fraction {} above 0.50, outside the bin scheme",
                    rec.water_fraction
                ),
            }),
        }
    }
    for pixels in out.strata.values_mut() {
        pixels.sort();
    }
    Ok(out)
}
