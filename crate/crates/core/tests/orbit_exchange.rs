use projdyn::dynamics::{IntegratorOptions, PhaseState};
use projdyn::geometry::{SymForm, Vector};
use projdyn::instances::{random_ellipsoid, random_tangent_state, rng};
use projdyn::problems::*;

fn params(seed: u64, nu: f64) -> JacobiParams {
    JacobiParams {
        data: random_ellipsoid(seed, 3).unwrap(),
        nu,
    }
}

fn start(p: &JacobiParams, seed: u64) -> PhaseState {
    random_tangent_state(&mut rng(seed), &p.data.a_screen(), 0.8).unwrap()
}

#[test]
fn jacobi_energy_and_joachimsthal_are_conserved() {
    for nu in [0.0, 0.5] {
        let p = params(31, nu);
        let s0 = start(&p, 32);
        let run = jacobi_run(&p, &s0, 10.0, &IntegratorOptions::default()).unwrap();
        assert!(run.channel_drift(projdyn::dynamics::Channel::Energy).unwrap() <= 1e-9);
        let j0 = joachimsthal(&p, &s0).unwrap();
        for s in run.samples() {
            assert!((joachimsthal(&p, s).unwrap() - j0).abs() <= 1e-8 * j0.abs().max(1.0));
        }
    }
}

#[test]
fn step_one_image_lies_on_the_b_sphere() {
    let p = params(41, 0.3);
    let run = jacobi_run(&p, &start(&p, 42), 5.0, &IntegratorOptions::default()).unwrap();
    let image = knorrer_step1(&p.data, &run).unwrap();
    for (s, j) in image.samples().iter().zip(run.samples()) {
        let lhs = p.data.g.quad(&s.q);
        let rhs = p.data.a.bilinear(&j.q, &p.data.m.apply(&j.q));
        assert!((lhs - rhs).abs() <= 1e-12);
    }
    assert!(b_sphere_residual(&p.data, &image) <= 1e-10);
}

#[test]
fn chain_composition_is_the_gauss_map() {
    let p = params(51, 0.0);
    let run = jacobi_run(&p, &start(&p, 52), 3.0, &IntegratorOptions::default()).unwrap();
    let projected = knorrer_step2(&p.data, &knorrer_step1(&p.data, &run).unwrap()).unwrap();
    for (s, j) in projected.path.samples().iter().zip(run.samples()) {
        assert!(s.q.distance(&gauss_map(&p.data, &j.q).unwrap()) <= 1e-12);
    }
}

#[test]
fn exchange_chain_matches_neumann() {
    for nu in [0.0, 0.5] {
        let p = params(61, nu);
        let r = orbit_exchange_report(&p, &start(&p, 62), 5.0, &IntegratorOptions::default()).unwrap();
        assert!(r.eta_drift <= 1e-8, "{nu}: {r:?}");
        assert!(r.step1_residual <= 1e-6);
        assert!(r.multiplier_gap <= 1e-7);
        assert!(r.chain_deviation.position <= 1e-6);
        assert!(r.gauss_gap <= 1e-10);
    }
}

#[test]
fn equal_forms_give_neumann_on_the_sphere() {
    // with A = G the map Q -> MQ is the identity
    let g = random_ellipsoid(71, 3).unwrap().g;
    let data = EllipsoidData::new(g.clone(), g.clone()).unwrap();
    let p = JacobiParams { data, nu: 0.0 };
    let s0 = start(&p, 72);
    let r = orbit_exchange_report(&p, &s0, 5.0, &IntegratorOptions::default()).unwrap();
    for (i, j) in r.intermediate.samples().iter().zip(r.jacobi.samples()) {
        assert!(i.q.distance(&j.q) <= 1e-8);
    }
    assert!(r.chain_deviation.position <= 1e-8);
}

#[test]
fn sphere_data_has_identity_gauss_map() {
    let id = SymForm::identity(3);
    let data = EllipsoidData::new(id.clone(), id).unwrap();
    let q = Vector::from([0.6, 0.0, 0.8]);
    assert!(gauss_map(&data, &q).unwrap().distance(&q) <= 1e-15);
}
