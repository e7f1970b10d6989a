use coupled_susy::linalg::{max_abs, max_abs_c, CMatrix, RMatrix};
use coupled_susy::models::{FigurePreset, PresetName};
use coupled_susy::oracle::{
    integrate_jost_solution, integrate_regular_to, integrate_regular_traced, oracle_jost,
    IntegrationConfig, PotentialTable,
};
use coupled_susy::scattering::{channel_wavenumbers, wronskian, SolutionSample};
use coupled_susy::{ChannelSet, Transform};
use num_complex::Complex64;

const R_MAX: f64 = 25.0;
const STEP: f64 = 0.025;

fn setup(name: PresetName) -> (FigurePreset, Transform, PotentialTable) {
    let preset = FigurePreset::new(name);
    let t = preset.transform().unwrap();
    let cfg = IntegrationConfig::new(R_MAX, STEP).unwrap();
    let table = PotentialTable::new(|r| t.potential(r), &cfg).unwrap();
    (preset, t, table)
}

#[test]
fn jost_solution_matches_closed_form_inside_range() {
    let (preset, t, table) = setup(PresetName::Fig1);
    let channels = preset.spec.channels();
    let k = channel_wavenumbers(12.0, channels);
    let (f, df) = integrate_jost_solution(&table, channels, 12.0, 8.0).unwrap();
    let exact = t.jost_solution(k.values(), 8.0).unwrap();
    let exact_d = t.jost_solution_derivative(k.values(), 8.0).unwrap();
    assert!(max_abs_c(&(f - exact)) < 1e-6);
    assert!(max_abs_c(&(df - exact_d)) < 1e-6);
}

#[test]
fn regular_and_jost_wronskian_is_constant() {
    let (preset, _, table) = setup(PresetName::Fig1);
    let channels = preset.spec.channels();
    let values: Vec<CMatrix> = [2.0, 5.0, 8.0]
        .iter()
        .map(|&r| {
            let phi = integrate_regular_to(&table, channels, 12.0, r).unwrap();
            let (f, df) = integrate_jost_solution(&table, channels, 12.0, r).unwrap();
            wronskian(&SolutionSample::new(phi.phi, phi.phi_prime), &SolutionSample::new(f, df)).unwrap()
        })
        .collect();
    for w in &values[1..] {
        assert!(max_abs_c(&(w - &values[0])) < 1e-7);
    }
}

#[test]
fn regular_solution_self_wronskian_vanishes() {
    let preset = FigurePreset::new(PresetName::Fig1);
    let t = preset.transform().unwrap();
    let cfg = IntegrationConfig::new(R_MAX, STEP / 2.0).unwrap();
    let table = PotentialTable::new(|r| t.potential(r), &cfg).unwrap();
    let mut worst: f64 = 0.0;
    integrate_regular_traced(&table, preset.spec.channels(), 12.0, |_, y, p| {
        let w = y.transpose() * p - p.transpose() * y;
        let scale = max_abs(y).max(max_abs(p)).max(1.0).powi(2);
        worst = worst.max(max_abs(&w) / scale);
    })
    .unwrap();
    assert!(worst < 1e-9, "worst {worst:e}");
}

#[test]
fn oracle_s_matrix_matches_at_twelve() {
    let (preset, t, table) = setup(PresetName::Fig1);
    let channels = preset.spec.channels();
    let s = oracle_jost(&table, channels, 12.0).unwrap().s_matrix(channels).unwrap();
    assert!(max_abs_c(&(s.s - t.s_matrix(12.0).unwrap().s)) < 1e-6);
}

#[test]
fn oracle_jost_matches_for_fig1_and_fig3() {
    for name in [PresetName::Fig1, PresetName::Fig3] {
        let (preset, t, table) = setup(name);
        for e in [11.0, 12.0, 15.0, 20.0] {
            let f = oracle_jost(&table, preset.spec.channels(), e).unwrap().plus;
            assert!(max_abs_c(&(f - t.jost_at_energy(e))) < 1e-6, "{name} at {e}");
        }
    }
}

#[test]
fn free_two_channel_jost_is_identity() {
    let channels = ChannelSet::new(vec![10.0, 0.0]).unwrap();
    let cfg = IntegrationConfig::new(10.0, 0.0125).unwrap();
    let table = PotentialTable::new(|_| Ok(RMatrix::zeros(2, 2)), &cfg).unwrap();
    let f = oracle_jost(&table, &channels, 14.0).unwrap().plus;
    assert!(max_abs_c(&(f - CMatrix::identity(2, 2))) < 1e-8);
}

#[test]
fn factorization_solution_satisfies_transformed_equation() {
    let preset = FigurePreset::new(PresetName::Fig1);
    let t = preset.transform().unwrap();
    let kappa2 = RMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        2,
        preset.spec.kappa().iter().map(|k| k * k),
    ));
    let h = 2e-4;
    for r in [0.5, 1.5, 3.0] {
        let phi = |s: f64| t.factorization_solutions(s, 0.0).unwrap().phi;
        let second = (phi(r + h) - 2.0 * phi(r) + phi(r - h)) / (h * h);
        let rhs = (t.potential(r).unwrap() + &kappa2) * phi(r);
        assert!(max_abs(&(second - rhs)) < 1e-6 * max_abs(&phi(r)).max(1.0));
    }
}

#[test]
fn complex_wavenumber_helper_is_upper_half_plane() {
    let channels = ChannelSet::new(vec![10.0, 0.0]).unwrap();
    let k = channel_wavenumbers(4.0, &channels);
    assert_eq!(k.values()[0], Complex64::new(0.0, 6f64.sqrt()));
}
