//! Path loss, power control and transmit energy.

/// Indoor-office line-of-sight path loss in dB, `d` in metres, carrier in GHz.
pub fn path_loss_db(d: f64, fc_ghz: f64) -> f64 {
    assert!(
        d > 0.0 && fc_ghz > 0.0,
        "distance and carrier must be positive"
    );
    32.4 + 17.3 * d.log10() + 20.0 * fc_ghz.log10()
}

/// Transmit power that yields `snr_db` at the receiver.
pub fn power_for_snr(snr_db: f64, noise_w: f64, path_loss_db: f64) -> f64 {
    10f64.powf(snr_db / 10.0) * noise_w * 10f64.powf(path_loss_db / 10.0)
}

/// Average receive SNR in dB for transmit power `p`.
pub fn snr_of(p: f64, noise_w: f64, path_loss_db: f64) -> f64 {
    10.0 * (p / noise_w).log10() - path_loss_db
}

/// Energy of the data subcarriers: one symbol of power `p` per spike.
pub fn tx_energy(spikes_per_slot: &[u64], p: f64, symbol_duration: f64) -> f64 {
    spikes_per_slot.iter().sum::<u64>() as f64 * p * symbol_duration
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_loss_values() {
        assert!((path_loss_db(1.0, 1.0) - 32.4).abs() < 1e-12);
        assert!((path_loss_db(100.0, 6.0) - 82.563).abs() < 1e-3);
        let step = path_loss_db(200.0, 6.0) - path_loss_db(100.0, 6.0);
        assert!((step - 17.3 * 2f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn power_control() {
        assert!((power_for_snr(0.0, 1e-12, 0.0) - 1e-12).abs() < 1e-24);
        let p = power_for_snr(20.0, 1e-12, 82.563);
        assert!((p - 1.8044e-2).abs() / 1.8044e-2 < 1e-4);
        for snr in [-3.0, 0.0, 17.5, 40.0] {
            assert!((snr_of(power_for_snr(snr, 1e-12, 70.0), 1e-12, 70.0) - snr).abs() < 1e-12);
        }
    }

    #[test]
    fn energy_values() {
        assert_eq!(tx_energy(&[0, 0], 1.0, 1.0), 0.0);
        assert!((tx_energy(&[3], 1e-3, 35.68e-6) - 107.04e-9).abs() < 1e-18);
        let a = tx_energy(&[4, 6], 0.3, 1e-5);
        let b = tx_energy(&[2, 3], 0.3, 1e-5);
        assert_eq!(a, 2.0 * b);
    }
}
