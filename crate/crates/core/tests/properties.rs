//! Property tests over randomly drawn parameters.

use std::f64::consts::{FRAC_2_PI, PI};

use num_complex::Complex64 as C64;
use proptest::prelude::*;
use thermalcat::bell::{
    closed_form_probabilities, distinguishability, homodyne_distribution, outcome_probabilities, Detector,
    QubitOutcome,
};
use thermalcat::chsh::{chsh_value, optimize_chsh, ChshConfig, ChshFamily, TSIRELSON_BOUND};
use thermalcat::factory::{
    bs_entangled_kerr, displaced_thermal, measure_qubit, micro_macro_entangle, thermal_bell, thermal_qubit,
    thermal_superposition, thermal_superposition_conditional, two_mode_kerr_entangled, BellLabel, KerrConfig, Sign,
};
use thermalcat::fock::{fock_wigner, FockDensityMatrix};
use thermalcat::kernel::{
    apply_beam_splitter, apply_phase_shift, marginal_distribution, moments, purity, PhaseSpaceState,
};
use thermalcat::marginal::QuadratureConvention;
use thermalcat::teleport::{teleport, CorrectionMode, ThermalQubit};

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn sign(plus: bool) -> Sign {
    if plus {
        Sign::Plus
    } else {
        Sign::Minus
    }
}

/// Any constructor, or `None` when the drawn branch has zero probability.
fn build(kind: u8, v: f64, d: f64, phi: f64, plus: bool) -> Option<PhaseSpaceState> {
    let s = sign(plus);
    let r = match kind % 6 {
        0 => displaced_thermal(v, c(d)),
        1 => thermal_superposition(v, c(d), phi, s),
        2 => two_mode_kerr_entangled(v, c(d), phi, s),
        3 => bs_entangled_kerr(v, c(d), phi, s),
        4 => thermal_bell(BellLabel::ALL[(phi * 7.0) as usize % 4], v, c(d.max(0.1))),
        _ => {
            let (a, b) = (phi.cos(), C64::from_polar(phi.sin(), 3.0 * phi));
            thermal_qubit(c(a), b, v, c(d))
        }
    };
    r.ok()
}

fn config() -> ProptestConfig {
    ProptestConfig { cases: 48, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn wigner_is_physical_and_real(
        kind in 0u8..6, v in 1.0f64..50.0, d in 0.0f64..4.0, phi in 0.0f64..(2.0 * PI), plus: bool,
        pts in prop::collection::vec((-6.0f64..6.0, -6.0f64..6.0), 8),
    ) {
        let Some(state) = build(kind, v, d, phi, plus) else { return Ok(()) };
        let w = state.compile_wigner().unwrap();
        for chunk in pts.chunks(state.modes()) {
            if chunk.len() < state.modes() { continue; }
            let x: Vec<f64> = chunk.iter().flat_map(|&(a, b)| [a, b]).collect();
            let (z, scale) = w.eval_complex(&x);
            prop_assert!(z.re >= -FRAC_2_PI - 1e-9, "W = {}", z.re);
            prop_assert!(z.im.abs() < 1e-10 * scale.max(1.0), "Im W = {}", z.im);
        }
        prop_assert!((state.trace().unwrap() - c(1.0)).norm() < 1e-12);
    }

    #[test]
    fn marginals_are_densities(
        kind in 0u8..6, v in 1.0f64..30.0, d in 0.0f64..4.0, phi in 0.0f64..(2.0 * PI), plus: bool,
        theta in 0.0f64..PI, second_mode: bool,
    ) {
        let Some(state) = build(kind, v, d, phi, plus) else { return Ok(()) };
        let mode = if second_mode { state.modes() - 1 } else { 0 };
        for conv in [QuadratureConvention::Quadrature, QuadratureConvention::Amplitude] {
            let m = marginal_distribution(&state, mode, theta, conv).unwrap();
            prop_assert!((m.total() - 1.0).abs() < 1e-12, "total {}", m.total());
            let (lo, hi) = m.support();
            for i in 0..=400 {
                let x = lo + (hi - lo) * i as f64 / 400.0;
                prop_assert!(m.eval(x) >= -1e-12);
            }
        }
    }

    #[test]
    fn unitaries_preserve_trace_purity_and_photons(
        v in 1.0f64..10.0, d in 0.0f64..3.0, phi in 0.0f64..(2.0 * PI), plus: bool,
        bs_theta in 0.0f64..PI, bs_phi in 0.0f64..(2.0 * PI), shift in 0.0f64..(2.0 * PI),
    ) {
        let Ok(state) = two_mode_kerr_entangled(v, c(d), phi, sign(plus)) else { return Ok(()) };
        let photons = |s: &PhaseSpaceState| moments(s, 0, 0.0).unwrap().mean_photon + moments(s, 1, 0.0).unwrap().mean_photon;
        let out = apply_phase_shift(&apply_beam_splitter(&state, 0, 1, bs_theta, bs_phi).unwrap(), 1, shift).unwrap();
        prop_assert!((out.trace().unwrap() - state.trace().unwrap()).norm() < 1e-12);
        let (p0, p1) = (purity(&state).unwrap(), purity(&out).unwrap());
        prop_assert!((p0 - p1).abs() < 1e-12 * p0.max(1.0), "{p0} {p1}");
        let (n0, n1) = (photons(&state), photons(&out));
        prop_assert!((n0 - n1).abs() < 1e-12 * n0.max(1.0), "{n0} {n1}");
    }

    #[test]
    fn superposition_is_measured_entangled_state(
        v in 1.0f64..40.0, d in 0.0f64..5.0, phi in 0.0f64..(2.0 * PI), plus: bool,
    ) {
        let field = displaced_thermal(v, c(d)).unwrap();
        let bal = [c(0.5f64.sqrt()), c(0.5f64.sqrt())];
        let h = micro_macro_entangle(bal, &field, &[0], KerrConfig::new(phi)).unwrap();
        let via_qubit = measure_qubit(&h, sign(plus)).unwrap();
        let direct = thermal_superposition_conditional(v, c(d), phi, sign(plus)).unwrap();
        prop_assert!((via_qubit.probability() - direct.probability()).abs() < 1e-14);
        if let (Some(a), Some(b)) = (via_qubit.state(), direct.state()) {
            prop_assert!(a.approx_eq(b, 1e-14));
        }
        let other = measure_qubit(&h, sign(!plus)).unwrap();
        prop_assert!((via_qubit.probability() + other.probability() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn centred_superpositions_are_rotation_invariant(
        v in 1.5f64..40.0, phi in 0.0f64..(2.0 * PI), plus: bool, r in 0.0f64..3.0, arg in 0.0f64..(2.0 * PI), chi in 0.0f64..(2.0 * PI),
    ) {
        let Ok(state) = thermal_superposition(v, c(0.0), phi, sign(plus)) else { return Ok(()) };
        let b = C64::from_polar(r, arg);
        let (w1, w2) = (state.wigner(&[b]).unwrap(), state.wigner(&[b * C64::from_polar(1.0, chi)]).unwrap());
        prop_assert!((w1 - w2).abs() < 1e-9, "{w1} {w2}");
    }

    #[test]
    fn bell_statistics_are_complete(label in 0usize..4, v in 1.0f64..20.0, d in 0.0f64..9.0) {
        let label = BellLabel::ALL[label];
        let p = outcome_probabilities(label, v, d).unwrap();
        let q = closed_form_probabilities(label, v, d).unwrap();
        prop_assert!((p.total() - 1.0).abs() < 1e-14);
        for o in QubitOutcome::ALL {
            prop_assert!((p.get(o) - q.get(o)).abs() < 1e-10);
            if o.parity() != label.sign() {
                prop_assert!(p.get(o).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn homodyne_densities_are_normalized(label in 0usize..4, v in 1.0f64..20.0, d in 0.2f64..9.0, outcome in 0usize..4, det_c: bool) {
        let label = BellLabel::ALL[label];
        let detector = if det_c { Detector::C } else { Detector::D };
        let Ok(m) = homodyne_distribution(label, QubitOutcome::ALL[outcome], detector, v, d) else { return Ok(()) };
        prop_assert!((m.total() - 1.0).abs() < 1e-12);
        let (lo, hi) = m.support();
        for i in 0..=500 {
            prop_assert!(m.eval(lo + (hi - lo) * i as f64 / 500.0) >= -1e-12);
        }
    }

    #[test]
    fn distinguishability_grows_with_d(v in 1.0f64..30.0, d in 0.05f64..10.0, step in 0.01f64..2.0) {
        let (a, b) = (distinguishability(v, d).unwrap(), distinguishability(v, d + step).unwrap());
        prop_assert!(b >= a - 1e-12, "P_s({d}) = {a}, P_s({}) = {b}", d + step);
        prop_assert!(distinguishability(v, 20.0 * v.sqrt()).unwrap() >= 1.0 - 1e-12);
    }

    #[test]
    fn teleport_probabilities_sum_to_one(
        theta in 0.0f64..PI, ph in 0.0f64..(2.0 * PI), v in 1.0f64..20.0, d in 0.5f64..8.0, physical: bool,
    ) {
        let (a, b) = (c((theta / 2.0).cos()), C64::from_polar((theta / 2.0).sin(), ph));
        let q = ThermalQubit::new(a, b, v, d).unwrap();
        let mode = if physical { CorrectionMode::Physical } else { CorrectionMode::Formal };
        let reports = teleport(&q, BellLabel::PsiMinus, mode).unwrap();
        let total: f64 = reports.iter().map(|r| r.probability).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        for r in &reports {
            if let Some(o) = r.hs_overlap {
                prop_assert!(o <= 1.0 + 1e-9, "overlap {o}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn chsh_respects_tsirelson_and_reevaluates(
        tm: bool, v in 1.0f64..30.0, d in 0.0f64..6.0, theta in 0.0f64..PI, plus: bool, seed in 0u64..1000,
    ) {
        let family = if tm { ChshFamily::TwoModeThermal } else { ChshFamily::BsEntangled };
        let Ok(state) = family.state(v, d, theta, sign(plus)) else { return Ok(()) };
        let mut cfg = ChshConfig::for_family(family, v, d, theta);
        cfg.restarts = 4;
        cfg.seed = seed;
        let r = optimize_chsh(&state, &cfg).unwrap();
        prop_assert!(r.value <= TSIRELSON_BOUND + 1e-6, "B = {}", r.value);
        prop_assert_eq!(r.value, chsh_value(&state, &r.argmax).unwrap());
    }

    #[test]
    fn product_states_are_local(
        v in 1.0f64..10.0, d1 in 0.0f64..3.0, d2 in 0.0f64..3.0, phi in 0.0f64..(2.0 * PI), p1: bool, p2: bool, seed in 0u64..1000,
    ) {
        let (Ok(a), Ok(b)) = (thermal_superposition(v, c(d1), phi, sign(p1)), thermal_superposition(v, c(d2), PI, sign(p2))) else {
            return Ok(());
        };
        let product = a.tensor(&b);
        let mut cfg = ChshConfig { restarts: 6, seed, ..ChshConfig::default() };
        cfg.radius = 3.0 + d1.max(d2);
        let r = optimize_chsh(&product, &cfg).unwrap();
        prop_assert!(r.value <= 2.0 + 1e-6, "B = {}", r.value);
    }
}

/// `N(|d⟩ ± |−d⟩)` in a truncated Fock basis.
fn pure_cat(d: f64, plus: bool, cutoff: usize) -> FockDensityMatrix {
    let s = if plus { 1.0 } else { -1.0 };
    let mut psi = vec![C64::new(0.0, 0.0); cutoff];
    let mut term = (-d * d / 2.0).exp();
    for (n, amp) in psi.iter_mut().enumerate() {
        if n > 0 {
            term *= d / (n as f64).sqrt();
        }
        let parity = if n % 2 == 0 { 1.0 } else { -1.0 };
        *amp = c(term * (1.0 + s * parity));
    }
    let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    psi.iter_mut().for_each(|z| *z /= norm);
    FockDensityMatrix::pure(vec![cutoff], &psi).unwrap()
}

#[test]
fn unit_variance_gives_pure_cats() {
    for d in [0.5, 1.0, 2.0] {
        for plus in [true, false] {
            let s = thermal_superposition(1.0, c(d), PI, sign(plus)).unwrap();
            let cat = pure_cat(d, plus, 60);
            for (x, y) in [(0.0, 0.0), (0.3, -0.2), (d, 0.1), (-0.7, 1.1), (0.0, 0.9)] {
                let b = C64::new(x, y);
                let (w1, w2) = (s.wigner(&[b]).unwrap(), fock_wigner(&cat, &[b]).unwrap());
                assert!((w1 - w2).abs() < 1e-8, "d={d} plus={plus} {b}: {w1} vs {w2}");
            }
        }
    }
}

#[test]
fn unit_variance_two_mode_state_is_entangled_coherent_state() {
    // both modes rotate together: (|d,d⟩ ± |−d,−d⟩) up to normalization
    let s = two_mode_kerr_entangled(1.0, c(1.0), PI, Sign::Plus).unwrap();
    let even = thermal_bell(BellLabel::PhiPlus, 1.0, c(1.0)).unwrap();
    for (a, b) in [(c(0.2), c(-0.1)), (C64::new(0.0, 0.4), C64::new(0.1, -0.3)), (c(1.0), c(1.0))] {
        let (w1, w2) = (s.wigner(&[a, b]).unwrap(), even.wigner(&[a, b]).unwrap());
        assert!((w1 - w2).abs() < 1e-10, "{w1} {w2}");
    }
}

#[test]
fn tm_branches_agree_for_large_displacement() {
    for (v, d) in [(1.0, 6.0), (4.0, 20.0)] {
        let family = ChshFamily::TwoModeThermal;
        let cfg = ChshConfig::for_family(family, v, d, PI);
        let bp = optimize_chsh(&family.state(v, d, PI, Sign::Plus).unwrap(), &cfg).unwrap().value;
        let bm = optimize_chsh(&family.state(v, d, PI, Sign::Minus).unwrap(), &cfg).unwrap().value;
        assert!((bp - bm).abs() < 2e-3, "V={v} d={d}: {bp} vs {bm}");
    }
}

#[test]
fn wigner_integrates_to_one() {
    for (kind, v, d) in [(1u8, 2.0, 1.5), (1, 5.0, 0.5), (5, 3.0, 1.0), (0, 4.0, 2.0)] {
        let s = build(kind, v, d, PI, false).unwrap();
        let w = s.compile_wigner().unwrap();
        let half = d + 6.0 * v.sqrt();
        let n = 600;
        let h = 2.0 * half / n as f64;
        let mut acc = 0.0;
        for i in 0..=n {
            for j in 0..=n {
                let wx = if i == 0 || i == n { 0.5 } else { 1.0 };
                let wy = if j == 0 || j == n { 0.5 } else { 1.0 };
                acc += wx * wy * w.eval(&[-half + i as f64 * h, -half + j as f64 * h]);
            }
        }
        acc *= h * h;
        assert!((acc - 1.0).abs() < 1e-3, "kind {kind} V={v} d={d}: {acc}");
    }
}
