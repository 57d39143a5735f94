//! Residual energy carried in the send instant of a HELLO beacon.
//!
//! The residual fraction is quantized to one of `L` slots and the beacon
//! is delayed by a proportional amount within `[d_min, d_max]`. The map
//! direction is configurable: [`DelayMapping::Direct`] sends full batteries
//! last, [`DelayMapping::Inverse`] sends them first.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DelayMapping {
    /// High residual energy, long delay.
    #[default]
    Direct,
    /// High residual energy, short delay.
    Inverse,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HelloCodec {
    d_min: f64,
    d_max: f64,
    slots: usize,
    e_full: f64,
    mapping: DelayMapping,
}

impl HelloCodec {
    /// Direct-mapping codec with full scale 1.
    pub fn new(d_min: f64, d_max: f64, slots: usize) -> Result<Self> {
        if !(d_min.is_finite() && d_max.is_finite() && 0.0 <= d_min && d_min < d_max) {
            return Err(invalid(
                "delay bounds",
                format!("need 0 <= d_min < d_max, got [{d_min}, {d_max}]"),
            ));
        }
        if slots < 2 {
            return Err(invalid("slots", format!("need at least 2, got {slots}")));
        }
        Ok(Self {
            d_min,
            d_max,
            slots,
            e_full: 1.0,
            mapping: DelayMapping::Direct,
        })
    }

    pub fn with_full_scale(mut self, e_full: f64) -> Result<Self> {
        if !(e_full.is_finite() && e_full > 0.0) {
            return Err(invalid("e_full", format!("must be > 0, got {e_full}")));
        }
        self.e_full = e_full;
        Ok(self)
    }

    pub fn with_mapping(mut self, mapping: DelayMapping) -> Self {
        self.mapping = mapping;
        self
    }

    pub fn d_min(&self) -> f64 {
        self.d_min
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn e_full(&self) -> f64 {
        self.e_full
    }

    pub fn mapping(&self) -> DelayMapping {
        self.mapping
    }

    /// Delay between adjacent slots.
    pub fn delay_step(&self) -> f64 {
        (self.d_max - self.d_min) / (self.slots - 1) as f64
    }

    /// Energy between adjacent slots.
    pub fn energy_step(&self) -> f64 {
        self.e_full / (self.slots - 1) as f64
    }

    fn top(&self) -> usize {
        self.slots - 1
    }

    fn flip(&self, slot: usize) -> usize {
        match self.mapping {
            DelayMapping::Direct => slot,
            DelayMapping::Inverse => self.top() - slot,
        }
    }

    /// Energy slot of `residual`.
    pub fn energy_slot(&self, residual: f64) -> Result<usize> {
        if !(0.0..=self.e_full).contains(&residual) {
            return Err(invalid(
                "residual",
                format!("must lie in [0, {}], got {residual}", self.e_full),
            ));
        }
        Ok(((residual / self.e_full) * self.top() as f64).round() as usize)
    }

    /// Delay slot (position within the send window) of `delay`.
    pub fn delay_slot(&self, delay: f64) -> Result<usize> {
        if !(self.d_min..=self.d_max).contains(&delay) {
            return Err(invalid(
                "delay",
                format!("must lie in [{}, {}], got {delay}", self.d_min, self.d_max),
            ));
        }
        let frac = (delay - self.d_min) / (self.d_max - self.d_min);
        Ok(((frac * self.top() as f64).round() as usize).min(self.top()))
    }

    fn delay_of_slot(&self, slot: usize) -> f64 {
        if slot == self.top() {
            self.d_max
        } else {
            self.d_min + (self.d_max - self.d_min) * slot as f64 / self.top() as f64
        }
    }

    fn energy_of_slot(&self, slot: usize) -> f64 {
        if slot == self.top() {
            self.e_full
        } else {
            self.e_full * slot as f64 / self.top() as f64
        }
    }
}

/// Send delay advertising `residual`.
pub fn encode_delay(codec: &HelloCodec, residual: f64) -> Result<f64> {
    let slot = codec.energy_slot(residual)?;
    Ok(codec.delay_of_slot(codec.flip(slot)))
}

/// Residual energy advertised by a beacon received `delay` after the
/// period start, rounded to the nearest slot.
pub fn decode_energy(codec: &HelloCodec, delay: f64) -> Result<f64> {
    let slot = codec.delay_slot(delay)?;
    Ok(codec.energy_of_slot(codec.flip(slot)))
}

/// Probability that at least two of `n_nodes` independent uniformly
/// distributed senders share a slot.
pub fn collision_probability(codec: &HelloCodec, n_nodes: usize) -> Result<f64> {
    collision_probability_slots(codec.slots(), n_nodes)
}

/// [`collision_probability`] for a bare slot count: `1 - L!/((L-n)! L^n)`,
/// or 1 when `n > L`.
pub fn collision_probability_slots(slots: usize, n_nodes: usize) -> Result<f64> {
    if n_nodes < 2 {
        return Err(invalid("n_nodes", format!("need at least 2, got {n_nodes}")));
    }
    if slots < 1 {
        return Err(invalid("slots", "need at least 1"));
    }
    if n_nodes > slots {
        return Ok(1.0);
    }
    // Exact integer counts while L^n fits in u128.
    if let Some(all) = (slots as u128).checked_pow(n_nodes as u32) {
        let distinct: u128 = (0..n_nodes).map(|i| (slots - i) as u128).product();
        return Ok((all - distinct) as f64 / all as f64);
    }
    let distinct: f64 = (0..n_nodes)
        .map(|i| (slots - i) as f64 / slots as f64)
        .product();
    Ok(1.0 - distinct)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_codec(slots: usize) -> HelloCodec {
        HelloCodec::new(0.0, 1.0, slots).unwrap()
    }

    #[test]
    fn rejects_bad_codecs() {
        assert!(HelloCodec::new(0.5, 0.5, 4).is_err());
        assert!(HelloCodec::new(-0.1, 0.5, 4).is_err());
        assert!(HelloCodec::new(0.0, 0.5, 1).is_err());
        assert!(unit_codec(4).with_full_scale(0.0).is_err());
    }

    #[test]
    fn endpoints() {
        let c = HelloCodec::new(0.1, 0.3, 5).unwrap();
        assert_eq!(encode_delay(&c, 0.0).unwrap(), 0.1);
        assert_eq!(encode_delay(&c, 1.0).unwrap(), 0.3);
        assert_eq!(decode_energy(&c, 0.1).unwrap(), 0.0);
        assert_eq!(decode_energy(&c, 0.3).unwrap(), 1.0);
    }

    #[test]
    fn quantization_example() {
        let c = unit_codec(11);
        assert_eq!(c.energy_slot(0.73).unwrap(), 7);
        assert_eq!(encode_delay(&c, 0.73).unwrap(), 0.7);
        assert_eq!(decode_energy(&c, 0.7).unwrap(), 0.7);
        assert_eq!(decode_energy(&c, 0.74).unwrap(), 0.7);
    }

    #[test]
    fn every_slot_round_trips() {
        for slots in 2..=16 {
            let c = HelloCodec::new(0.05, 0.45, slots).unwrap();
            for s in 0..slots {
                let e = s as f64 / (slots - 1) as f64;
                let d = encode_delay(&c, e).unwrap();
                assert_eq!(c.delay_slot(d).unwrap(), s);
                assert!((decode_energy(&c, d).unwrap() - e).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn inverse_mapping_reverses_order() {
        let c = unit_codec(11).with_mapping(DelayMapping::Inverse);
        assert_eq!(encode_delay(&c, 1.0).unwrap(), 0.0);
        assert_eq!(encode_delay(&c, 0.0).unwrap(), 1.0);
        let d = encode_delay(&c, 0.73).unwrap();
        assert!((d - 0.3).abs() < 1e-15);
        assert_eq!(decode_energy(&c, d).unwrap(), 0.7);
    }

    #[test]
    fn full_scale_other_than_one() {
        let c = unit_codec(5).with_full_scale(2.0).unwrap();
        assert_eq!(encode_delay(&c, 2.0).unwrap(), 1.0);
        assert_eq!(decode_energy(&c, 0.5).unwrap(), 1.0);
        assert!(encode_delay(&c, 2.1).is_err());
    }

    #[test]
    fn out_of_range_inputs() {
        let c = unit_codec(5);
        assert!(encode_delay(&c, -0.01).is_err());
        assert!(encode_delay(&c, 1.01).is_err());
        assert!(decode_energy(&c, 1.2).is_err());
        assert!(decode_energy(&c, f64::NAN).is_err());
    }

    #[test]
    fn collision_examples() {
        for l in 2..20 {
            let p = collision_probability(&unit_codec(l), 2).unwrap();
            assert!((p - 1.0 / l as f64).abs() < 1e-15);
        }
        let p = collision_probability(&unit_codec(10), 4).unwrap();
        assert!((p - 0.496).abs() < 1e-15);
        assert_eq!(collision_probability(&unit_codec(3), 4).unwrap(), 1.0);
        assert!(collision_probability(&unit_codec(3), 1).is_err());
    }

    #[test]
    fn collision_large_counts_fall_back() {
        let p = collision_probability_slots(1_000_000, 40).unwrap();
        let approx = 1.0 - (-(40.0 * 39.0) / 2e6f64).exp();
        assert!((p - approx).abs() < 1e-6);
    }
}
