use proptest::prelude::*;

use super::*;
use crate::basis::{solve_h0, BasisSettings};

fn small_h0() -> H0Spectrum {
    solve_h0(&SystemParams::default(), &BasisSettings { computational_size: 200, retained: 20, oscillator_frequency: 1.0 })
        .unwrap()
}

#[test]
fn undriven_matrix_is_diagonal() {
    let h0 = small_h0();
    let p = SystemParams::default();
    let (m, idx) = assemble_floquet_matrix(&h0, &p, 3, Sector::Plus).unwrap();
    for i in 0..idx.len() {
        let (n, k) = idx[i];
        assert_eq!(m[(i, i)], h0.energies()[k] - n as f64 * p.frequency());
        for j in 0..idx.len() {
            if i != j {
                assert_eq!(m[(i, j)], 0.0);
            }
        }
    }
}

#[test]
fn sector_sizes_split_evenly() {
    assert_eq!(sector_indices(60, 16, Sector::Plus).len(), 990);
    assert_eq!(sector_indices(60, 16, Sector::Minus).len(), 990);
}

#[test]
fn sectors_reproduce_full_spectrum() {
    let h0 = small_h0();
    let p = SystemParams::from_rescaled(4.0, 0.982, 0.015).unwrap();
    let nf = 4;
    let full = assemble_full_matrix(&h0, &p, nf);
    let (mut all, _) = symmetric_eigen(&full, "test").unwrap();
    let mut parts = Vec::new();
    for s in [Sector::Plus, Sector::Minus] {
        let (m, _) = assemble_floquet_matrix(&h0, &p, nf, s).unwrap();
        parts.extend(symmetric_eigen(&m, "test").unwrap().0);
    }
    parts.sort_by(f64::total_cmp);
    all.sort_by(f64::total_cmp);
    assert_eq!(parts.len(), all.len());
    for (a, b) in parts.iter().zip(&all) {
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }
}

#[test]
fn sector_eigenvectors_orthonormal() {
    let h0 = small_h0();
    let p = SystemParams::from_rescaled(4.0, 0.982, 0.015).unwrap();
    let (m, idx) = assemble_floquet_matrix(&h0, &p, 6, Sector::Minus).unwrap();
    let pairs = solve_sector(&m, &idx, h0.len(), 6, Sector::Minus).unwrap();
    for i in 0..pairs.len() {
        for j in i..pairs.len() {
            let g = pairs[i].components.overlap(&pairs[j].components);
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((g - want).abs() < 1e-8);
        }
    }
}

#[test]
fn undriven_states_are_single_blocks() {
    let h0 = small_h0();
    let p = SystemParams::default();
    let spec = solve_floquet(&h0, &p, &FloquetSettings { sidebands: 4, ..Default::default() }).unwrap();
    assert_eq!(spec.len(), h0.len());
    for (k, s) in spec.states.iter().enumerate() {
        let blocks: Vec<_> = s.components.sideband_weights().filter(|(_, w)| *w > 0.0).collect();
        assert_eq!(blocks.len(), 1);
        assert!((s.mean_energy - h0.energies()[k]).abs() < 1e-12);
        let (eps, _) = reduce_quasienergy(h0.energies()[k], p.frequency());
        assert!((s.quasienergy - eps).abs() < 1e-12);
    }
}

#[test]
fn mean_energy_examples() {
    let mut c = FourierComponents::zeros(0, 2, 2);
    c.set(0, 0, 0.6f64.sqrt());
    c.set(1, 1, 0.4f64.sqrt());
    let e = mean_energy(0.1, &c, 0.982).unwrap();
    assert!((e - (0.1 + 0.4 * 0.982)).abs() < 1e-14);
    let mut single = FourierComponents::zeros(0, 1, 1);
    single.set(0, 0, 1.0);
    assert_eq!(mean_energy(0.3, &single, 1.0).unwrap(), 0.3);
    let mut bad = FourierComponents::zeros(0, 1, 1);
    bad.set(0, 0, 0.5);
    assert!(mean_energy(0.3, &bad, 1.0).is_err());
}

#[test]
fn mean_energy_invariant_under_class_shift() {
    let h0 = small_h0();
    let p = SystemParams::from_rescaled(4.0, 0.982, 0.0145).unwrap();
    let spec = solve_floquet(&h0, &p, &FloquetSettings { sidebands: 8, ..Default::default() }).unwrap();
    for s in spec.states.iter().take(6) {
        let e = mean_energy(s.quasienergy, &s.components, p.frequency()).unwrap();
        // c'_n = c_{n+1} belongs to ε + ω.
        let shifted = s.components.shifted(-1);
        let e2 = mean_energy(s.quasienergy + p.frequency(), &shifted, p.frequency()).unwrap();
        assert!((e - e2).abs() < 1e-10);
        assert!((e - s.mean_energy).abs() < 1e-10);
    }
}

#[test]
fn shifted_eigenvector_solves_shifted_problem() {
    let h0 = small_h0();
    let p = SystemParams::from_rescaled(4.0, 0.982, 0.0145).unwrap();
    let nf = 8;
    let (m, idx) = assemble_floquet_matrix(&h0, &p, nf, Sector::Plus).unwrap();
    let pairs = solve_sector(&m, &idx, h0.len(), nf, Sector::Plus).unwrap();
    let best = pairs.iter().max_by(|a, b| a.components.central_weight().total_cmp(&b.components.central_weight())).unwrap();
    // Shift by one sideband: lands in the other sector with eigenvalue λ + ω.
    let shifted = best.components.shifted(-1);
    let (m2, idx2) = assemble_floquet_matrix(&h0, &p, nf, Sector::Minus).unwrap();
    let v: Vec<f64> = idx2.iter().map(|&(n, k)| shifted.get(n, k)).collect();
    let mut resid = 0.0f64;
    for i in 0..v.len() {
        let hv: f64 = (0..v.len()).map(|j| m2[(i, j)] * v[j]).sum();
        resid = resid.max((hv - (best.eigenvalue + p.frequency()) * v[i]).abs());
    }
    assert!(resid < 1e-6, "residual {resid}");
}

#[test]
fn localized_doublet_undriven() {
    let h0 = small_h0();
    let p = SystemParams::default();
    let spec = solve_floquet(&h0, &p, &FloquetSettings { sidebands: 2, ..Default::default() }).unwrap();
    let x = position_matrix(&h0);
    let (e, o) = (&spec.states[0], &spec.states[1]);
    let loc = localized_superpositions(e, &[o], x).unwrap();
    assert!((loc.x_right / p.well_position() - 1.0).abs() < 0.05, "{}", loc.x_right);
    let nr: f64 = loc.right.iter().map(|v| v * v).sum();
    assert!((nr - 1.0).abs() < 1e-12);
    let right = FourierComponents::combine(&[(loc.right[0], &e.components), (loc.right[1], &o.components)]);
    let left = FourierComponents::combine(&[(loc.left[0], &e.components), (loc.left[1], &o.components)]);
    let mirrored = right.apply_generalized_parity();
    assert!((mirrored.overlap(&left).abs() - 1.0).abs() < 1e-12);
    assert!(localized_superpositions(e, &[e], x).is_err());
}

proptest! {
    #[test]
    fn brillouin_reduction_idempotent(lambda in -50.0f64..50.0, omega in 0.1f64..3.0) {
        let (e, m) = reduce_quasienergy(lambda, omega);
        prop_assert!(e >= -0.5 * omega && e < 0.5 * omega);
        prop_assert!((e + m as f64 * omega - lambda).abs() < 1e-12 * lambda.abs().max(1.0));
        let (e2, m2) = reduce_quasienergy(e, omega);
        prop_assert_eq!(m2, 0);
        prop_assert_eq!(e2, e);
    }
}
