use qngc_core::fock::{gaussian_oracle, OracleOptions};
use qngc_core::montecarlo::{draw_stream, sample_params, DEFAULT_DISPLACEMENT_MAX, DEFAULT_XI1_GRID};
use qngc_core::pnrd::pnrd_stats_from_params;
use qngc_core::spad::spad_stats_from_params;

#[test]
fn sampled_states_match_fock_oracle() {
    let mut worst: f64 = 0.0;
    for i in 0..100u64 {
        let v = (i % 9) as usize;
        let p = sample_params(&mut draw_stream(2024, v, i), DEFAULT_XI1_GRID[v], DEFAULT_DISPLACEMENT_MAX);
        let fock = gaussian_oracle(&p, OracleOptions::default()).unwrap();
        assert!(fock.tail_bound < 1e-12, "{p:?}: tail {}", fock.tail_bound);
        let s = spad_stats_from_params(&p).unwrap();
        let n = pnrd_stats_from_params(&p).unwrap();
        let diffs = [
            s.p_s - fock.spad.p_s,
            s.p_e1 - fock.spad.p_e1,
            s.p_e2 - fock.spad.p_e2,
            n.p11 - fock.pnrd.p11,
            n.pe1 - fock.pnrd.pe1,
            n.pe2 - fock.pnrd.pe2,
        ];
        let d = diffs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        worst = worst.max(d);
        assert!(d < 1e-8, "draw {i} {p:?}: {diffs:?}");
    }
    eprintln!("largest deviation {worst:.3e}");
}
