use coupled_susy::linalg::{asymmetry, max_abs, max_abs_c, RMatrix};
use coupled_susy::models::{rank_one_kappa2, FigurePreset, PresetName, PRESET_U0};
use coupled_susy::scattering::{
    channel_wavenumbers, eigenphases_2ch, jost_symmetry_check, track_eigenphases, wronskian, SolutionSample,
    DEFAULT_S_TOLERANCE,
};
use coupled_susy::susy::{
    canonical_from_u0_2x2, superpotential_canonical, superpotential_closed_form, u0_from_canonical,
    CanonicalParametrization, ClosedForm, U0Parametrization,
};
use coupled_susy::{ChannelSet, Eigenphases, FactorizationSpec, Parametrization, SMatrixPoint, Transform};
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::FRAC_PI_2;

fn two_channel_spec(kappa2: f64) -> FactorizationSpec {
    let kappa1 = (10.0 + kappa2 * kappa2).sqrt();
    FactorizationSpec::from_kappa(ChannelSet::new(vec![10.0, 0.0]).unwrap(), vec![kappa1, kappa2]).unwrap()
}

fn three_channel_spec() -> FactorizationSpec {
    FactorizationSpec::from_energy(ChannelSet::new(vec![10.0, 0.0, 4.0]).unwrap(), -3.0).unwrap()
}

fn u0_transform(spec: &FactorizationSpec, a1: f64, a2: f64, b: f64) -> Option<Transform> {
    let u0 = U0Parametrization::new(RMatrix::from_row_slice(2, 2, &[a1, b, b, a2]), spec).ok()?;
    Transform::new(spec.clone(), Parametrization::U0(u0)).ok()
}

fn half_open_angle() -> impl Strategy<Value = f64> {
    (-FRAC_PI_2 + 1e-3)..FRAC_PI_2
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigenphases_recompose_round_trip(d1 in half_open_angle(), d2 in half_open_angle(), eps in half_open_angle()) {
        prop_assume!((d1 - d2).abs() > 1e-2);
        let original = Eigenphases { delta1: d1, delta2: d2, epsilon: eps };
        let point = SMatrixPoint { energy: 15.0, s: original.recompose(), open_mask: vec![true, true] };
        let back = eigenphases_2ch(&point, 1e-8).unwrap();
        prop_assert!(max_abs_c(&(back.recompose() - point.s)) < 1e-12);
        let matches = |e: &Eigenphases| (e.delta1 - d1).abs() < 1e-9 && (e.delta2 - d2).abs() < 1e-9;
        prop_assert!(matches(&back) || matches(&back.swapped()));
    }

    #[test]
    fn s_matrix_unitary_and_symmetric(
        a1 in -6.0..6.0f64, a2 in -6.0..6.0f64, b in -3.0..3.0f64, energy in 0.05..30.0f64,
    ) {
        let spec = two_channel_spec(3.0);
        let Some(t) = u0_transform(&spec, a1, a2, b) else { return Ok(()) };
        let s = t.s_matrix(energy).unwrap();
        prop_assert!(s.unitarity_defect() < 1e-10);
        prop_assert!(s.symmetry_defect() < 1e-10);
    }

    #[test]
    fn u0_canonical_round_trip(a1 in -6.0..6.0f64, a2 in -6.0..6.0f64, b in -3.0..3.0f64) {
        let spec = two_channel_spec(3.0);
        let u0 = RMatrix::from_row_slice(2, 2, &[a1, b, b, a2]);
        let param = U0Parametrization::new(u0.clone(), &spec).unwrap();
        let Ok(canonical) = canonical_from_u0_2x2(&param, &spec) else { return Ok(()) };
        let Ok(back) = u0_from_canonical(&canonical, &spec) else { return Ok(()) };
        prop_assert!(max_abs(&(back.u0() - &u0)) < 1e-9 * (1.0 + max_abs(&u0)));
    }

    #[test]
    fn closed_forms_agree_with_canonical(q1 in -3.0..3.0f64, q2 in -3.0..3.0f64) {
        let spec = three_channel_spec();
        // kappa = (sqrt 13, sqrt 3, sqrt 7); reorder puts the rank block first
        let column = CanonicalParametrization::new(
            1, vec![0, 2, 1], RMatrix::from_row_slice(2, 1, &[q1, q2]), RMatrix::zeros(1, 1), &spec,
        ).unwrap();
        let row = CanonicalParametrization::new(
            2, vec![0, 2, 1], RMatrix::from_row_slice(1, 2, &[q1, q2]), RMatrix::zeros(2, 2), &spec,
        ).unwrap();
        for i in 0..20 {
            let r = 0.3 * i as f64;
            for (param, form) in [(&column, ClosedForm::Column), (&row, ClosedForm::Row)] {
                let closed = superpotential_closed_form(param, &spec, r, form).unwrap();
                let generic = superpotential_canonical(param, &spec, r).unwrap();
                prop_assert!(max_abs(&(closed - generic)) < 1e-12);
            }
        }
    }

    #[test]
    fn jost_matrix_reflection_symmetry(
        a1 in -6.0..6.0f64, a2 in -6.0..6.0f64, b in -3.0..3.0f64, energy in -8.0..30.0f64,
    ) {
        let spec = two_channel_spec(3.0);
        let Some(t) = u0_transform(&spec, a1, a2, b) else { return Ok(()) };
        let defect = jost_symmetry_check(|k| t.jost(k), energy, spec.channels());
        prop_assert!(defect < 1e-12 * (1.0 + max_abs_c(&t.jost_at_energy(energy))));
    }

    #[test]
    fn positive_limits_count_the_rank(a1 in -6.0..6.0f64, a2 in -6.0..6.0f64, b in -3.0..3.0f64) {
        let spec = two_channel_spec(3.0);
        let Some(t) = u0_transform(&spec, a1, a2, b) else { return Ok(()) };
        let u_inf = t.u_at_infinity();
        prop_assert!(asymmetry(u_inf) == 0.0);
        let positive = (0..2).filter(|&i| u_inf[(i, i)] > 0.0).count();
        prop_assert_eq!(positive, t.rank());
    }

    #[test]
    fn jost_solution_wronskian_is_constant(
        a1 in -6.0..6.0f64, a2 in -6.0..6.0f64, b in -3.0..3.0f64, energy in 10.5..30.0f64,
    ) {
        let spec = two_channel_spec(3.0);
        let Some(t) = u0_transform(&spec, a1, a2, b) else { return Ok(()) };
        let k = channel_wavenumbers(energy, spec.channels());
        let minus: Vec<Complex64> = k.negated();
        let at = |r: f64| {
            let plus = SolutionSample::new(t.jost_solution(k.values(), r).unwrap(), t.jost_solution_derivative(k.values(), r).unwrap());
            let back = SolutionSample::new(t.jost_solution(&minus, r).unwrap(), t.jost_solution_derivative(&minus, r).unwrap());
            wronskian(&back, &plus).unwrap()
        };
        let reference = at(0.5);
        for r in [1.5, 3.0, 6.0] {
            prop_assert!(max_abs_c(&(at(r) - &reference)) < 1e-9 * (1.0 + max_abs_c(&reference)));
        }
    }
}

#[test]
fn well_moves_outwards_towards_rank_one_limit() {
    let root = rank_one_kappa2();
    let argmin = |kappa2: f64| {
        let spec = two_channel_spec(kappa2);
        let t = u0_transform(&spec, PRESET_U0[0], PRESET_U0[3], PRESET_U0[1]).unwrap();
        (0..=4000)
            .map(|i| 8.0 * i as f64 / 4000.0)
            .map(|r| (r, t.potential(r).unwrap()[(1, 1)]))
            .fold((0.0, f64::INFINITY), |best, p| if p.1 < best.1 { p } else { best })
            .0
    };
    let positions: Vec<f64> = [3.0, 2.5, 2.3, 2.22, 2.2, 2.197, 2.195, root + 1e-4].iter().map(|&k| argmin(k)).collect();
    assert!(positions.windows(2).all(|w| w[1] > w[0]), "{positions:?}");
}

#[test]
fn eigenphase_labels_do_not_depend_on_grid_spacing() {
    for name in PresetName::ALL {
        let t = FigurePreset::new(name).transform().unwrap();
        let table = |h: f64| {
            let energies: Vec<f64> = (0..=(20.0 / h).round() as usize).map(|j| h * j as f64).collect();
            track_eigenphases(|e| t.s_matrix(e), &energies, DEFAULT_S_TOLERANCE).unwrap()
        };
        let (coarse, fine) = (table(0.5), table(0.01));
        for row in &coarse {
            let twin = fine.iter().find(|f| (f.energy - row.energy).abs() < 1e-9).unwrap();
            for (a, b) in [(row.delta1, twin.delta1), (row.delta2, twin.delta2), (row.epsilon, twin.epsilon)] {
                assert_eq!(a.is_some(), b.is_some());
                if let (Some(a), Some(b)) = (a, b) {
                    assert!((a - b).abs() < 1e-12, "{name} at {}: {a} vs {b}", row.energy);
                }
            }
        }
    }
}
