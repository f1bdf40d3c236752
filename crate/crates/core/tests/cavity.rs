use ndarray_linalg::{Eig, SVD};
use proptest::prelude::*;
use ringqed::cavity::{
    bus_transmission, build_cavity_matrix, cavity_field, coupling_at, cooperativity, CavityParams, CouplingMode,
};
use ringqed::dynamics::{build_coupling, steady_state_direct};
use ringqed::free_space::FreeSpaceMatrix;
use ringqed::geometry::{sample_cloud, AtomConfig, CloudParams};
use ringqed::C64;

fn params() -> CavityParams {
    CavityParams {
        z_ref: 0.4,
        ..CavityParams::default()
    }
}

fn cloud(n: usize, seed: u64) -> AtomConfig {
    let p = CloudParams {
        n_atoms: n,
        sigma_x: 0.12,
        sigma_y: 2.3,
        sigma_z: 0.5,
        z_mean: 0.47,
        poisson_n: false,
    };
    sample_cloud(&p, seed).unwrap()
}

#[test]
fn coupling_law_examples() {
    let p = params();
    assert!((coupling_at(p.z_ref, &p) - 2.5f64.sqrt()).abs() < 1e-14);
    let g = coupling_at(p.z_ref + p.z_ev, &p);
    assert!((g - 2.5f64.sqrt() / std::f64::consts::E).abs() < 1e-14);
    let c = cooperativity(coupling_at(p.z_ref + p.z_ev * 2f64.ln(), &p), &p);
    assert!((c - p.c_ref / 4.0).abs() < 1e-15);
    assert_eq!(cooperativity(0.0, &p), 0.0);
    assert!((cooperativity(2.0 * 1.3, &p) / cooperativity(1.3, &p) - 4.0).abs() < 1e-14);
}

#[test]
fn single_atom_matrix_value() {
    let cfg = AtomConfig::new("one", vec![[0.0, 0.7, 0.4]]).unwrap();
    let cav = build_cavity_matrix(&cfg, &params(), CouplingMode::HeightDependent).unwrap();
    assert!((cav.matrix[[0, 0]] - C64::new(0.0, -0.025)).norm() < 1e-15);
}

#[test]
fn empty_cavity_field_and_passthrough() {
    let cfg = AtomConfig::new("one", vec![[0.0, 0.0, 0.4]]).unwrap();
    let p = params();
    let cav = build_cavity_matrix(&cfg, &p, CouplingMode::Uniform).unwrap();
    let zero = ndarray::Array1::from_elem(1, C64::from(0.0));
    let a = cavity_field(&zero, &cav, 1.0).unwrap();
    assert!((a - C64::new(0.0, -0.01)).norm() < 1e-16);
    assert!(bus_transmission(&zero, &cav, &p).unwrap().norm() < 1e-15);

    let far = CavityParams { delta_c: 1e9, ..p.clone() };
    let cav = build_cavity_matrix(&cfg, &far, CouplingMode::Uniform).unwrap();
    assert!((bus_transmission(&zero, &cav, &far).unwrap() - 1.0).norm() < 1e-6);
}

#[test]
fn atom_reduces_intracavity_field_and_restores_transmission() {
    let cfg = AtomConfig::new("one", vec![[0.0, 0.0, 0.4]]).unwrap();
    let p = params();
    let cav = build_cavity_matrix(&cfg, &p, CouplingMode::Uniform).unwrap();
    let m = build_coupling(0.0, &cav, &FreeSpaceMatrix::diagonal_only(1)).unwrap();
    let sigma = steady_state_direct(&m, &cav.drive(p.eta)).unwrap();
    let a = cavity_field(&sigma, &cav, p.eta).unwrap();
    assert!(a.norm() < 0.01);
    let t = bus_transmission(&sigma, &cav, &p).unwrap();
    assert!(t.norm_sqr() > 0.0);
    // Closed form: t = κ_e/(κ/2) · C/(1 + C) for critical coupling on resonance.
    let c = p.c_ref;
    assert!((t.norm() - c / (1.0 + c)).abs() < 1e-12);
}

#[test]
fn global_phase_leaves_matrix_unchanged() {
    let cfg = cloud(8, 3);
    let shifted = AtomConfig::new(
        "shifted",
        cfg.positions.iter().map(|p| [p[0], p[1] + 0.37, p[2]]).collect(),
    )
    .unwrap();
    let a = build_cavity_matrix(&cfg, &params(), CouplingMode::HeightDependent).unwrap();
    let b = build_cavity_matrix(&shifted, &params(), CouplingMode::HeightDependent).unwrap();
    let diff = (&a.matrix - &b.matrix).iter().map(|z| z.norm()).fold(0.0, f64::max);
    assert!(diff < 1e-12, "{diff}");
}

#[test]
fn drive_amplitudes_follow_height() {
    let cfg = AtomConfig::new("two", vec![[0.0, 0.0, 0.3], [0.0, 0.0, 0.5]]).unwrap();
    let p = params();
    let cav = build_cavity_matrix(&cfg, &p, CouplingMode::HeightDependent).unwrap();
    let om = cav.drive(1.0);
    assert!((om[0].norm() / om[1].norm() - (0.2 / p.z_ev).exp()).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn rank_one_reconstruction(n in 1usize..20, seed in any::<u64>(), delta in -50.0f64..50.0) {
        let p = CavityParams { delta_c: delta, ..params() };
        let cav = build_cavity_matrix(&cloud(n, seed), &p, CouplingMode::HeightDependent).unwrap();
        let kt = C64::new(delta, 100.0);
        for i in 0..n {
            for j in 0..n {
                let expected = cav.mode[i] * cav.mode[j].conj() / kt;
                prop_assert!((cav.matrix[[i, j]] - expected).norm() < 1e-12 * (1.0 + expected.norm()));
            }
        }
        let (_, s, _) = cav.matrix.svd(false, false).unwrap();
        if n > 1 {
            prop_assert!(s[1] <= 1e-12 * s[0]);
        }
    }

    #[test]
    fn skew_hermitian_and_dissipative_at_resonance(n in 1usize..20, seed in any::<u64>()) {
        let cav = build_cavity_matrix(&cloud(n, seed), &params(), CouplingMode::HeightDependent).unwrap();
        let g = &cav.matrix;
        let scale = g.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for i in 0..n {
            for j in 0..n {
                prop_assert!((g[[i, j]] + g[[j, i]].conj()).norm() <= 1e-14 * scale.max(1.0));
            }
        }
        let (evals, _) = g.eig().unwrap();
        for l in evals.iter() {
            prop_assert!(l.re.abs() < 1e-12);
        }
        let total: f64 = cav.cooperativities.iter().sum();
        let top = evals.iter().map(|l| 2.0 * l.im.abs()).fold(0.0, f64::max);
        prop_assert!((top - total).abs() < 1e-10 * total.max(1.0));
    }
}
