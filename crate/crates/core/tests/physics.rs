//! Deterministic checks of the steppers against closed forms and each other.

mod common;

use common::slab_medium;
use maxsplit::diagnostics::{convergence_probe, dissipation_rate, total_energy};
use maxsplit::propagator::{
    optics_bilinear, GeometricStepper, OpticsState, Representation, Scheme, SplitFieldStepper, SplitInductionStepper,
};
use maxsplit::pulse::{build_pulse, PulseSpec};
use maxsplit::spectral::Spectral;
use maxsplit::state::FieldState;
use maxsplit::{Grid, MediumMap};

const TAU: f64 = std::f64::consts::TAU;

fn line(n: usize, dr: f64) -> (Grid<f64>, Spectral<f64>) {
    let g = Grid::new(&[n], &[dr]).unwrap();
    let sp = Spectral::new(&g);
    (g, sp)
}

fn pulse(g: &Grid<f64>, m: &MediumMap<f64>, k0: f64, kappa: f64, x0: f64) -> FieldState<f64> {
    let (e, h) = build_pulse(&PulseSpec::new([k0, 0.0, 0.0], kappa, 1.0, [x0, 0.0, 0.0]), g).unwrap();
    FieldState::new(g, m, e, h).unwrap()
}

fn max_diff(a: &[&[f64]], b: &[&[f64]]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.iter().zip(y.iter()).map(|(p, q)| (p - q).abs()))
        .fold(0.0, f64::max)
}

#[test]
fn vacuum_steps_equal_one_free_propagation() {
    let (g, sp) = line(512, 0.1);
    let vac = MediumMap::vacuum(&g);
    let init = pulse(&g, &vac, TAU, 0.5, 25.6);
    let (dt, steps) = (0.037, 500);
    let (mut e, mut h) = (init.e.clone(), init.h.clone());
    sp.free_propagator_apply(&mut e, &mut h, dt * steps as f64);
    let exact: Vec<&[f64]> = e.comp.iter().chain(h.comp.iter()).map(Vec::as_slice).collect();

    let mut f = init.clone();
    let st = SplitFieldStepper::new(&sp, &vac, dt);
    for _ in 0..steps {
        st.step(&mut f);
    }
    assert!(max_diff(&f.components()[..6], &exact) < 1e-11);
    let mut s = init.to_induction(&vac);
    SplitInductionStepper::new(&sp, &vac, dt).advance(&mut s, steps);
    assert!(max_diff(&s.components()[..6], &exact) < 1e-11);
}

#[test]
fn representations_agree_to_second_order() {
    let (g, sp) = line(256, 0.1);
    let m = slab_medium(&g, 12.0, 16.0, &[(5.0, 0.2, 3.0), (9.0, 0.0, 2.0)], None);
    let init = pulse(&g, &m, TAU, 1.0, 9.0);
    let t_end = 4.0;
    let gap = |dt: f64| {
        let steps = (t_end / dt).round() as usize;
        let mut f = init.clone();
        SplitFieldStepper::new(&sp, &m, dt).advance(&mut f, steps);
        let mut s = init.to_induction(&m);
        SplitInductionStepper::new(&sp, &m, dt).advance(&mut s, steps);
        s.to_field(&m).max_abs_diff(&f)
    };
    let (a, b) = (gap(0.02), gap(0.01));
    let ratio = a / b;
    assert!(a > 0.0 && (3.2..4.8).contains(&ratio), "gap {a:e} -> {b:e}, ratio {ratio}");
}

#[test]
fn dissipation_rate_is_the_energy_derivative() {
    let (g, sp) = line(256, 0.1);
    let m = slab_medium(&g, 12.0, 16.0, &[(5.0, 0.8, 3.0)], None);
    let mut s = pulse(&g, &m, TAU, 1.0, 9.0);
    SplitFieldStepper::new(&sp, &m, 0.01).advance(&mut s, 300);
    let rate = dissipation_rate(&s, &g, &m);
    assert!(rate < 0.0);
    let err = |h: f64| {
        let mut fwd = s.clone();
        SplitFieldStepper::new(&sp, &m, h).step(&mut fwd);
        let mut back = s.clone();
        SplitFieldStepper::new(&sp, &m, -h).step(&mut back);
        let fd = (total_energy(&fwd, &g, &m) - total_energy(&back, &g, &m)) / (2.0 * h);
        (fd - rate).abs() / rate.abs()
    };
    let (a, b) = (err(1e-2), err(5e-3));
    assert!(a < 1e-3, "relative error {a:e}");
    assert!(a / b > 3.0, "error {a:e} -> {b:e} is not second order");
}

#[test]
fn modified_leapfrog_converges_at_second_order() {
    let (g, sp) = line(256, 0.1);
    let m = slab_medium(&g, 12.0, 16.0, &[(6.0, 0.3, 4.0)], None);
    let init = pulse(&g, &m, TAU, 1.0, 9.0);
    let t = convergence_probe(
        &init,
        &sp,
        &m,
        Scheme::LeapfrogModified,
        Representation::Field,
        2.0,
        &[0.02, 0.01, 0.005],
        4,
    )
    .unwrap();
    let slope = t.slope.unwrap();
    assert!(slope >= 1.9, "slope {slope}");
}

#[test]
fn vacuum_convergence_is_flagged_exact() {
    let (g, sp) = line(256, 0.1);
    let vac = MediumMap::vacuum(&g);
    let init = pulse(&g, &vac, TAU, 1.0, 12.8);
    let t = convergence_probe(&init, &sp, &vac, Scheme::SplitInduction, Representation::Induction, 1.0, &[0.1, 0.05], 4)
        .unwrap();
    assert!(t.exact && t.slope.is_none(), "{t:?}");
}

fn optics_energy(g: &Grid<f64>, eps_inv: &[f64], s: &OpticsState<f64>, keep: impl Fn(f64) -> bool) -> f64 {
    let mut sum = 0.0;
    for i in 0..g.len() {
        if keep(g.position(i)[0]) {
            for a in 0..3 {
                sum += eps_inv[i] * s.d.comp[a][i].powi(2) + s.b.comp[a][i].powi(2);
            }
        }
    }
    0.5 * g.cell_volume() * sum
}

#[test]
fn geometric_leapfrog_in_vacuum_is_second_order() {
    let (g, sp) = line(512, 0.1);
    let vac = MediumMap::vacuum(&g);
    let init = pulse(&g, &vac, TAU, 0.5, 25.6);
    let (mut e, mut h) = (init.e.clone(), init.h.clone());
    let t_end = 4.0;
    sp.free_propagator_apply(&mut e, &mut h, t_end);
    let exact: Vec<&[f64]> = e.comp.iter().chain(h.comp.iter()).map(Vec::as_slice).collect();
    let eps = vec![1.0; g.len()];
    let err = |dt: f64| {
        let st = GeometricStepper::new(&sp, &eps, dt).unwrap();
        let mut prev = OpticsState::new(init.e.clone(), init.h.clone());
        let mut cur = st.seed(&prev);
        for _ in 1..(t_end / dt).round() as usize {
            st.step(&mut prev, &mut cur);
        }
        max_diff(&cur.components(), &exact)
    };
    let (a, b) = (err(0.02), err(0.01));
    assert!((3.5..4.5).contains(&(a / b)), "error {a:e} -> {b:e}");
}

#[test]
fn geometric_leapfrog_reflects_the_fresnel_fraction() {
    // A sharp step needs many points per wavelength inside the dielectric:
    // at 5 points the step reflects about 0.146 instead of 1/9.
    let (g, sp) = line(2048, 0.05);
    let n_in: f64 = 2.0;
    let eps: Vec<f64> = (0..g.len())
        .map(|i| if g.position(i)[0] >= 40.0 { n_in * n_in } else { 1.0 })
        .collect();
    let eps_inv: Vec<f64> = eps.iter().map(|e| 1.0 / e).collect();
    let (e, h) = build_pulse(&PulseSpec::new([TAU / 2.0, 0.0, 0.0], 0.5, 1.0, [20.0, 0.0, 0.0]), &g).unwrap();
    let mut d = e;
    for comp in &mut d.comp {
        for (x, w) in comp.iter_mut().zip(&eps) {
            *x *= w;
        }
    }
    let dt = 0.01;
    let st = GeometricStepper::new(&sp, &eps, dt).unwrap();
    let mut prev = OpticsState::new(d, h);
    let total = optics_energy(&g, &eps_inv, &prev, |_| true);
    let mut cur = st.seed(&prev);
    for _ in 1..3000 {
        st.step(&mut prev, &mut cur);
    }
    let reflected = optics_energy(&g, &eps_inv, &cur, |x| x < 36.0) / total;
    let fresnel = ((1.0 - n_in) / (1.0 + n_in)).powi(2);
    assert!((reflected - fresnel).abs() < 0.02, "reflected {reflected}, Fresnel {fresnel}");
    assert!(optics_bilinear(&g, &eps_inv, &prev, &cur) > 0.0);
}

#[test]
fn pulse_energy_centroid_moves_at_c() {
    let (g, sp) = line(512, 0.1);
    let vac = MediumMap::vacuum(&g);
    let k0 = TAU;
    let mut s = pulse(&g, &vac, k0, 0.5, 15.0);
    let centroid = |f: &FieldState<f64>| {
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..g.len() {
            let w: f64 = (0..3).map(|a| f.e.comp[a][i].powi(2) + f.h.comp[a][i].powi(2)).sum();
            num += w * g.position(i)[0];
            den += w;
        }
        num / den
    };
    let x0 = centroid(&s);
    let t = 10.0 / k0;
    let steps = 100;
    SplitFieldStepper::new(&sp, &vac, t / steps as f64).advance(&mut s, steps);
    let moved = centroid(&s) - x0;
    assert!((moved - t).abs() < 0.1, "moved {moved}, expected {t}");
}

