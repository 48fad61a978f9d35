use triplebin_core::simulation::channel::ChannelModel;
use triplebin_core::simulation::fec::{FecCode, FecConfig};
use triplebin_core::simulation::{run, SimConfig};

fn secret_errors(fec: FecConfig, sigma2: f64, seed: u64) -> (u64, u64) {
    let cfg = SimConfig {
        channel: ChannelModel {
            sigma2,
            ..ChannelModel::default()
        },
        fec,
        seed: Some(seed),
        ..SimConfig::default()
    };
    let s = run(&cfg).unwrap();
    (s.ber.a_to_b.secret.errors, s.ber.b_to_a.secret.errors)
}

#[test]
fn coded_secret_stream_beats_uncoded_at_moderate_noise() {
    let coded = FecConfig {
        secret: FecCode::Hamming74,
        ..FecConfig::default()
    };
    for sigma2 in [0.3, 0.5] {
        let (mut plain, mut protected) = ((0, 0), (0, 0));
        for seed in 0..8 {
            let u = secret_errors(FecConfig::default(), sigma2, seed);
            let c = secret_errors(coded, sigma2, seed);
            plain = (plain.0 + u.0, plain.1 + u.1);
            protected = (protected.0 + c.0, protected.1 + c.1);
        }
        assert!(
            protected.0 < plain.0 && protected.1 < plain.1,
            "{sigma2}: {protected:?} vs {plain:?}"
        );
    }
}

#[test]
fn single_frame_carries_secret_bits() {
    let s = run(&SimConfig::default()).unwrap();
    assert!(s.ber.a_to_b.secret.bits > 0 && s.ber.b_to_a.secret.bits > 0);
    assert!((s.guest_secret_fraction - 0.5).abs() < 0.05);
}
