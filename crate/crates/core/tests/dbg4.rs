use ubs_core::generating::*;
use ubs_core::symplectic::*;
#[test]
fn det_sign_scan() {
    for modes in 1..=4usize {
        let spec = CircuitSpec {
            modes,
            squeezing_db: (0..modes).map(|i| 2.0 + i as f64).collect(),
            interferometer: InterferometerSpec::Haar { seed: 13 },
            scenario: "t".into(),
        };
        let t = build_circuit_transform(&spec).unwrap();
        let x: Vec<f64> = (0..modes).map(|i| 0.2 + 0.15 * i as f64).collect();
        let k = kernel_at(&t, &x).unwrap();
        let det = k.full_matrix().lu().determinant();
        let trace_expect: f64 = x.iter().map(|&v| 1.0 / (1.0 - v)).product();
        // required s so that pref/sqrt(s) = trace_expect
        let s_req = (k.prefactor / num_complex::Complex64::new(trace_expect, 0.0)).powi(2);
        println!("M={modes}: det G = {det:.6e}  s_req = {s_req:.6e} ratio = {:.3}", det / s_req);
    }
}
