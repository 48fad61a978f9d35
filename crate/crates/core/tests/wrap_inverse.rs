use triplebin_core::pnc::relay_symbol_posterior;
use triplebin_core::{Node, WrapCodebook};

#[test]
fn unwrap_inverts_wrap_for_every_pair() {
    let orders = [2u32, 4, 8, 16, 32, 64];
    for &ma in orders.iter().filter(|&&m| m <= 16) {
        for &mb in &orders {
            for (a, b) in [(ma, mb), (mb, ma)] {
                let cb = WrapCodebook::gray(a, b).unwrap();
                let pa: Vec<i32> = (0..a as i32).map(|j| 2 * j - (a as i32 - 1)).collect();
                let pb: Vec<i32> = (0..b as i32).map(|j| 2 * j - (b as i32 - 1)).collect();
                for &xa in &pa {
                    for &xb in &pb {
                        let s = cb.wrap(xa + xb).unwrap().value;
                        assert_eq!(cb.unwrap(s, xa, Node::A).unwrap(), xb, "{a} {b} {xa} {xb}");
                        assert_eq!(cb.unwrap(s, xb, Node::B).unwrap(), xa, "{a} {b} {xa} {xb}");
                    }
                }
            }
        }
    }
}

#[test]
fn interior_sums_hide_the_bpsk_symbol() {
    for mb in [4u32, 8, 16, 64] {
        let e = mb as i32;
        for y in (-e..=e).step_by(2) {
            let guests: Vec<i32> = relay_symbol_posterior(y, 2, mb)
                .iter()
                .map(|p| p.0)
                .collect();
            if y.abs() == e {
                assert_eq!(guests.len(), 1);
            } else {
                assert_eq!(guests, vec![-1, 1], "{mb} {y}");
            }
        }
    }
}
