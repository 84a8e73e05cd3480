mod common;

use proptest::prelude::*;
use spinrpa::analytic::{
    fully_connected_closed_form, pair_closed_form, uniform_contraction_spectra,
};
use spinrpa::exact::{
    collective_ground_state, dense_ground_states, entropy_of, reduced_density, ExactOptions, Parity,
};
use spinrpa::gaussian::SubsystemSpec;
use spinrpa::meanfield::solve_uniform;
use spinrpa::model::XyzModel;
use spinrpa::parity::{corrected_entropy, ParityContext};
use spinrpa::rpa::{momentum_modes, ContractionData};

use common::{close, dense_pipeline, largest, report};

/// Field ratios away from the critical point, on both sides.
fn field_ratio() -> impl Strategy<Value = f64> {
    prop_oneof![0.05..0.95f64, 1.08..4.0f64]
}

fn nonnegative_couplings() -> impl Strategy<Value = [f64; 3]> {
    (0.5..1.5f64, 0.0..0.9f64, 0.0..0.4f64).prop_map(|(jx, ry, rz)| [jx, ry * jx, rz * jx])
}

fn couplings() -> impl Strategy<Value = [f64; 3]> {
    (0.5..1.5f64, -0.9..0.9f64, -0.4..0.4f64).prop_map(|(jx, ry, rz)| [jx, ry * jx, rz * jx])
}

fn chain(n: usize, s: f64, j: [f64; 3], ratio: f64) -> XyzModel {
    let m = XyzModel::nearest_neighbor_chain(n, s, j, 1.0).unwrap();
    let bc = m.critical_field();
    m.with_field(ratio * bc)
}

fn max_diff(a: &spinrpa::linalg::CMatrix, b: &spinrpa::linalg::CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bogoliubov_transformation_is_symplectic(
        n in 3usize..8, twice in 1u32..3, j in couplings(), ratio in field_ratio()
    ) {
        let model = chain(n, twice as f64 / 2.0, j, ratio);
        let pipe = dense_pipeline(&model).unwrap();
        let w = pipe.modes.bogoliubov_matrix();
        let metric = spinrpa::linalg::CMatrix::from_fn(2 * n, 2 * n, |r, c| {
            let v = if r != c { 0.0 } else if r < n { 1.0 } else { -1.0 };
            num_complex::Complex64::new(v, 0.0)
        });
        prop_assert!(max_diff(&(&w * &metric * w.adjoint()), &metric) < 1e-10);
    }

    #[test]
    fn vacuum_is_pure_and_complements_agree(
        n in 3usize..8, j in couplings(), ratio in field_ratio(), mask in 1u32..127
    ) {
        let model = chain(n, 0.5, j, ratio);
        let data = dense_pipeline(&model).unwrap().data;
        let all = report(&data, &SubsystemSpec::block(n).unwrap());
        prop_assert!(all.spectrum.values.iter().all(|f| f.abs() < 1e-8));
        let a: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let b: Vec<usize> = (0..n).filter(|i| mask & (1 << i) == 0).collect();
        prop_assume!(!a.is_empty() && !b.is_empty());
        let sa = report(&data, &SubsystemSpec::new(a).unwrap()).entropy;
        let sb = report(&data, &SubsystemSpec::new(b).unwrap()).entropy;
        prop_assert!((sa - sb).abs() < 1e-8);
    }

    #[test]
    fn fourier_path_matches_dense(
        n in 3usize..9, j in couplings(), ratio in field_ratio()
    ) {
        let model = chain(n, 1.0, j, ratio);
        let dense = dense_pipeline(&model).unwrap().data;
        let mm = momentum_modes(&model, &solve_uniform(&model).unwrap()).unwrap();
        let mom = ContractionData::from_momentum(&mm);
        prop_assert!(max_diff(&dense.f, &mom.f) < 1e-10);
        prop_assert!(max_diff(&dense.g, &mom.g) < 1e-10);
    }

    #[test]
    fn complete_graph_matches_closed_form(
        n in 2usize..24, ratio in field_ratio(), j in couplings(), pick in 0.0..1.0f64
    ) {
        let model = XyzModel::fully_connected(n, 0.5, j, 1.0).unwrap();
        let field = ratio * model.critical_field();
        let data = dense_pipeline(&model.with_field(field)).unwrap().data;
        let len = 2 + ((n - 2) as f64 * pick) as usize;
        let m = 1 + (len - 2) / 2;
        let c = fully_connected_closed_form(n, j, field, len, m).unwrap();
        let rep = report(&data, &SubsystemSpec::split_block(len, m).unwrap());
        prop_assert!(close(largest(&rep.spectrum.values), c.f, 1e-10));
        prop_assert!(close(rep.entropy, c.entropy, 1e-10));
        prop_assert!(close(rep.negativity.unwrap(), c.negativity, 1e-10));
    }

    #[test]
    fn closed_form_invariants(
        n in 2usize..300, ratio in 0.0..5.0f64, j in couplings(), a in 0.0..1.0f64, b in 0.0..1.0f64
    ) {
        let bc = j[0] - j[2];
        let len = 2 + ((n - 2) as f64 * a) as usize;
        let m = 1 + ((len - 2) as f64 * b) as usize;
        let c = fully_connected_closed_form(n, j, ratio * bc, len, m).unwrap();
        prop_assert!(c.f_tilde > -0.5 || (len == n && c.divergent));
        prop_assert!(c.f >= 0.0 && c.negativity >= 0.0);
        prop_assert!((c.gamma - c.alpha - 4.0 * c.beta).abs() < 1e-15);
        if len < n && len >= 2 && n - len >= 2 {
            let mirror = fully_connected_closed_form(n, j, ratio * bc, n - len, 1).unwrap();
            prop_assert_eq!(c.f, mirror.f);
        }
        if !c.divergent {
            let sp = uniform_contraction_spectra(c.contractions, len, Some(m)).unwrap();
            prop_assert!(sp.f_rest.abs() < 1e-7);
            prop_assert!(close(sp.f_block, c.f, 1e-8));
            prop_assert!(close(sp.transposed.unwrap().minus, c.f_tilde, 1e-8));
        }
    }

    #[test]
    fn pair_negativity_follows_occupation(ratio in 0.0..6.0f64, j in couplings()) {
        let bc = j[0] - j[2];
        let p = pair_closed_form(j[0], j[1], j[2], ratio * bc).unwrap();
        prop_assume!(!p.divergent);
        let root = (p.f * (p.f + 1.0)).sqrt();
        prop_assert!(p.f >= 0.0);
        prop_assert!((p.f_tilde - (p.f - root)).abs() < 1e-12);
        prop_assert!((p.negativity - (p.f + root)).abs() < 1e-12 * p.negativity.max(1.0));
    }

    #[test]
    fn parity_correction_adds_at_most_one_bit(
        ratio in 0.0..1.0f64, twice in 1u32..21, sites in 1usize..20, s in 0.0..3.0f64
    ) {
        let ctx = ParityContext::new(spinrpa::meanfield::Phase::Broken, ratio, twice as f64 / 2.0).unwrap();
        let overlap = ctx.overlap(sites);
        prop_assert!((0.0..=1.0).contains(&overlap));
        let corrected = corrected_entropy(s, &ctx, sites);
        prop_assert!(corrected >= s && corrected <= s + 1.0 + 1e-15);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn exact_complements_agree(n in 3usize..7, j in couplings(), ratio in field_ratio(), mask in 1u32..63) {
        let model = chain(n, 0.5, j, ratio).to_spin_model();
        let spec = dense_ground_states(&model, &ExactOptions::default()).unwrap();
        let a: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let b: Vec<usize> = (0..n).filter(|i| mask & (1 << i) == 0).collect();
        prop_assume!(!a.is_empty() && !b.is_empty());
        let psi = &spec.ground().amplitudes;
        let sa = entropy_of(&reduced_density(&spec.basis, psi, &a).unwrap());
        let sb = entropy_of(&reduced_density(&spec.basis, psi, &b).unwrap());
        prop_assert!((sa - sb).abs() < 1e-10);
        prop_assert!(spec.ground().residual < 1e-9);
    }

    #[test]
    fn dense_and_collective_oracles_agree(n in 2usize..9, j in nonnegative_couplings(), ratio in field_ratio()) {
        let model = XyzModel::fully_connected(n, 0.5, j, 1.0).unwrap();
        let model = model.with_field(ratio * model.critical_field());
        let opts = ExactOptions::default();
        let col = collective_ground_state(&model, &opts).unwrap();
        let dense = dense_ground_states(&model.to_spin_model(), &opts).unwrap();
        for parity in [Parity::Even, Parity::Odd] {
            let c = col.states.iter().find(|s| s.parity == parity).unwrap();
            let d = dense.sector(parity).unwrap();
            prop_assert!((c.energy - d.energy).abs() < 1e-10);
        }
    }
}
