use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use triplebin_core::simulation::channel::{cycle2_with, sample_fading, Fading};
use triplebin_core::PamConstellation;

/// Two-sample Kolmogorov-Smirnov statistic.
fn ks(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

#[test]
fn nakagami_one_is_rayleigh() {
    let n = 20_000;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let naka: Vec<f64> = (0..n)
        .map(|_| {
            sample_fading(&Fading::Nakagami { m: 1.0 }, &mut rng)
                .unwrap()
                .norm()
        })
        .collect();
    // inverse-CDF Rayleigh sampler with unit mean-square
    let mut other = ChaCha8Rng::seed_from_u64(4);
    let rayleigh: Vec<f64> = (0..n)
        .map(|_| {
            let u: f64 = other.gen_range(f64::EPSILON..1.0);
            (-u.ln()).sqrt()
        })
        .collect();
    // 0.1% critical value for equal sample sizes
    let crit = 1.95 * (2.0 / n as f64).sqrt();
    assert!(ks(naka.clone(), rayleigh.clone()) < crit);
    // and the test has power: m = 3 is rejected
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let m3: Vec<f64> = (0..n)
        .map(|_| {
            sample_fading(&Fading::Nakagami { m: 3.0 }, &mut rng)
                .unwrap()
                .norm()
        })
        .collect();
    assert!(ks(m3, rayleigh) > crit);
}

#[test]
fn broadcast_symbol_errors_fall_with_snr() {
    let host = PamConstellation::gray(8).unwrap();
    let mut prev = f64::INFINITY;
    for sigma2 in [2.0, 1.0, 0.5, 0.25, 0.1] {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let trials = 20_000;
        let mut errors = 0;
        for i in 0..trials {
            let s = host.unit_point(i % 8);
            let h = sample_fading(&Fading::Rayleigh, &mut rng).unwrap();
            let c = cycle2_with(Complex64::new(f64::from(s), 0.0), h, h, sigma2, &mut rng);
            let z = c.equalized().0;
            errors += (host.unit_point(host.nearest_index(z.re)) != s) as usize;
        }
        let ser = errors as f64 / trials as f64;
        assert!(ser < prev, "{sigma2}: {ser} !< {prev}");
        prev = ser;
    }
}
