use cavity_sps::channel::*;
use cavity_sps::constants::to_db_loss;
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Trapezoid rule on a cubic-graded grid `h = h0 + span·u³`, which packs
/// nodes near the ground where the profile decays fastest.
fn graded_trapezoid<F: Fn(f64) -> f64>(f: F, h0: f64, top: f64, n: usize) -> f64 {
    let span = top - h0;
    let g = |u: f64| f(h0 + span * u * u * u) * 3.0 * span * u * u;
    let du = 1.0 / n as f64;
    let inner: f64 = (1..n).map(|i| g(i as f64 * du)).sum();
    du * (inner + 0.5 * (g(0.0) + g(1.0)))
}

fn moment_oracle(kind: PathKind, h0: f64, top: f64) -> f64 {
    let span = top - h0;
    graded_trapezoid(
        |h| {
            let x = (h - h0) / span;
            let w = match kind {
                PathKind::Uplink => (1.0 - x).max(0.0).powf(5.0 / 3.0),
                _ => x.powf(5.0 / 3.0),
            };
            hv_cn2(h, 10.0, 1.7e-13) * w
        },
        h0,
        top,
        100_000,
    )
}

#[test]
fn turbulence_moment_matches_trapezoid() {
    for (kind, h0) in [
        (PathKind::Uplink, 0.0),
        (PathKind::Uplink, 3e3),
        (PathKind::Downlink, 0.0),
        (PathKind::Downlink, 3e3),
    ] {
        let mu = turbulence_moment(kind, h0, 2e6, 10.0, 1.7e-13).unwrap();
        let oracle = moment_oracle(kind, h0, 2e6);
        assert!(rel(mu, oracle) < 1e-4, "{kind:?} h0={h0}: {mu:e} vs {oracle:e}");
    }
}

#[test]
fn presets_use_the_same_moment() {
    for h0 in [0.0, 3e3] {
        let p = FreeSpacePath::uplink(637e-9, h0, MIN_FILTER_WIDTH);
        let direct = turbulence_moment(PathKind::Uplink, h0, 2e6, 10.0, 1.7e-13).unwrap();
        assert_eq!(p.turbulence_moment().unwrap(), direct);
    }
}

#[test]
fn uniform_profile_gives_three_eighths() {
    let c = 2e-15;
    let span = 5e4;
    for w in [|x: f64| x.powf(5.0 / 3.0), |x: f64| (1.0 - x).powf(5.0 / 3.0)] {
        let mu = integrate(&|h: f64| c * w(h / span), 0.0, span, 1e-10).unwrap();
        assert!(rel(mu, c * span * 3.0 / 8.0) < 1e-8, "{mu:e}");
    }
}

#[test]
fn uplink_sees_more_turbulence() {
    for h0 in [0.0, 1e3, 3e3] {
        let up = turbulence_moment(PathKind::Uplink, h0, 2e6, 10.0, 1.7e-13).unwrap();
        let down = turbulence_moment(PathKind::Downlink, h0, 2e6, 10.0, 1.7e-13).unwrap();
        assert!(up > 1e3 * down, "h0={h0}: {up:e} vs {down:e}");
    }
}

#[test]
fn hv_profile_limits() {
    assert!(rel(hv_cn2(0.0, 21.0, 1.7e-14), 1.7e-14 + 2.7e-16) < 1e-12);
    assert!(hv_cn2(1e5, 21.0, 1.7e-14) < 1e-30);
    let calm = hv_cn2(1e4, 0.0, 1.7e-14);
    assert!(rel(calm, 2.7e-16 * (-1e4f64 / 1500.0).exp() + 1.7e-14 * (-100.0f64).exp()) < 1e-12);
    assert!(hv_cn2(1e4, 21.0, 1.7e-14) > calm);
}

#[test]
fn canary_beam_radius() {
    let c = FreeSpacePath::canary();
    let w = c.weff().unwrap();
    assert!(rel(w, 3.5) < 0.10, "{w}");
    let ec = to_db_loss(c.collection().unwrap());
    assert!((ec - 14.0).abs() < 2.0, "{ec}");
}

#[test]
fn downlink_beam_radius() {
    for (lam, target) in [(637e-9, 12.0), (1550e-9, 28.0)] {
        let p = FreeSpacePath::downlink(lam, MIN_FILTER_WIDTH);
        let w = p.weff().unwrap();
        assert!(rel(w, target) < 0.15, "{lam:e}: {w}");
    }
    let ec = to_db_loss(FreeSpacePath::downlink(637e-9, MIN_FILTER_WIDTH).collection().unwrap());
    assert!((ec - 24.0).abs() < 2.0, "{ec}");
}

#[test]
fn uplink_beam_radius() {
    let sea = FreeSpacePath::uplink(637e-9, 0.0, MIN_FILTER_WIDTH);
    let w = sea.weff().unwrap();
    assert!(rel(w, 31.0) < 0.30, "{w}");
    let ec = to_db_loss(sea.collection().unwrap());
    assert!((ec - 53.0).abs() < 2.0, "{ec}");

    let mountain = FreeSpacePath::uplink(637e-9, 3e3, MIN_FILTER_WIDTH);
    let w = mountain.weff().unwrap();
    assert!(rel(w, 3.0) < 0.30, "{w}");
    let ec = to_db_loss(mountain.collection().unwrap());
    assert!((ec - 30.0).abs() < 2.0, "{ec}");
}

#[test]
fn divergence_and_field_of_view() {
    assert!(rel(beam_divergence(850e-9, 0.0525), 5.15e-6) < 1e-3);
    assert!(rel(beam_divergence(637e-9, 0.035), 5.79e-6) < 1e-3);
    let (theta, omega) = fov_geometry(0.5e-3, 1.0, 39.0);
    assert!(rel(theta, 12.8e-6) < 0.01, "{theta:e}");
    assert!(rel(omega, std::f64::consts::PI * theta * theta) < 1e-12);
}

#[test]
fn no_turbulence_leaves_geometric_spread() {
    let theta = beam_divergence(794e-9, 0.0525);
    assert_eq!(terrestrial_weff(theta, 1e5, 0.0525, 794e-9, 0.0), theta * 1e5);
}

/// Range at which the waist equals the turbulence coherence scale.
fn wander_crossover(wavelength: f64) -> f64 {
    let k = 2.0 * std::f64::consts::PI / wavelength;
    0.0525f64.powf(-5.0 / 3.0) / (0.55 * k * k * 4e-16)
}

#[test]
fn beam_wander_takes_over_beyond_crossover() {
    for lam in [738e-9, 794e-9] {
        let l = wander_crossover(lam);
        assert!(rel(l, 10e3) < 0.30, "{lam:e}: {l}");
    }
    let l = wander_crossover(1550e-9);
    assert!(rel(l, 40e3) < 0.30, "{l}");
    for lam in [637e-9, 794e-9, 1550e-9] {
        let l = wander_crossover(lam);
        let theta = beam_divergence(lam, 0.0525);
        let ratio = terrestrial_weff(theta, l, 0.0525, lam, 4e-16) / (theta * l);
        assert!((ratio - 2f64.sqrt()).abs() < 1e-9, "{ratio}");
    }
}

#[test]
fn free_space_noise_spot_values() {
    let ne8 = DetectorSpec::silicon(1.0 / 30e9);
    let siv = DetectorSpec::silicon(1.0 / 65e9);
    let cases = [
        (ne8.dark_noise(), 3.3e-9),
        (FreeSpacePath::terrestrial(794e-9, 150e3, 0.15e-9).noise(&ne8), 1.6e-8),
        (FreeSpacePath::terrestrial(738e-9, 150e3, 0.30e-9).noise(&siv), 1.2e-8),
        (FreeSpacePath::uplink(794e-9, 0.0, 0.15e-9).noise(&ne8), 1.1e-8),
        (FreeSpacePath::downlink(794e-9, 0.15e-9).noise(&ne8), 7.4e-7),
        (DetectorSpec::tes(1e-10).dark_noise(), 2.1e-11),
    ];
    for (n, target) in cases {
        assert!(rel(n, target) < 0.15, "{n:e} vs {target:e}");
    }
}

#[test]
fn terrestrial_budget_matches_itemised_loss() {
    let det = DetectorSpec::silicon(1.0 / 30e9);
    let path = FreeSpacePath::terrestrial(794e-9, 150e3, 0.15e-9);
    let b = LinkBudget::free_space(&path, &det, DEFAULT_OPTICS, Some(4.5)).unwrap();
    assert!((b.eta_db() - 38.1).abs() < 1.0, "{}", b.eta_db());
}

fn budgets() -> Vec<LinkBudget> {
    let det = DetectorSpec::silicon(1.0 / 30e9);
    let mut out = vec![
        LinkBudget::fiber(
            &FiberChannel { attenuation: 2.5, length: 5.0, coupling: 0.5 },
            &det,
            DEFAULT_OPTICS,
        )
        .unwrap(),
        LinkBudget::fiber(
            &FiberChannel { attenuation: 0.2, length: 100.0, coupling: 1.0 },
            &DetectorSpec::tes(1e-10),
            DEFAULT_OPTICS,
        )
        .unwrap(),
    ];
    for path in [
        FreeSpacePath::terrestrial(794e-9, 150e3, 0.15e-9),
        FreeSpacePath::canary(),
        FreeSpacePath::uplink(794e-9, 0.0, 0.15e-9),
        FreeSpacePath::uplink(794e-9, 3e3, 0.15e-9),
        FreeSpacePath::downlink(794e-9, 0.15e-9),
    ] {
        out.push(LinkBudget::free_space(&path, &det, DEFAULT_OPTICS, None).unwrap());
        out.push(LinkBudget::free_space(&path, &det, DEFAULT_OPTICS, Some(4.5)).unwrap());
    }
    out
}

#[test]
fn budget_breakdown_sums_to_total() {
    for b in budgets() {
        let sum: f64 = b.breakdown_db().iter().map(|(_, db)| db).sum();
        assert!((sum - b.eta_db()).abs() < 1e-9, "{sum} vs {}", b.eta_db());
        for (_, c) in b.components() {
            assert!(c > 0.0 && c <= 1.0, "{c}");
        }
        assert!(b.eta() > 0.0 && b.eta() <= 1.0);
    }
}

#[test]
fn fiber_transmittance_examples() {
    assert!(rel(fiber_transmittance(0.2, 100.0), 0.01) < 1e-12);
    assert!(rel(fiber_transmittance(2.5, 4.0), 0.1) < 1e-12);
    assert_eq!(fiber_transmittance(3.0, 0.0), 1.0);
}

proptest! {
    #[test]
    fn weff_never_below_geometric(l in 1e3..3e5f64, cn2 in 0.0..1e-14f64, lam in 5e-7..1.6e-6f64) {
        let theta = beam_divergence(lam, 0.0525);
        prop_assert!(terrestrial_weff(theta, l, 0.0525, lam, cn2) >= theta * l);
    }

    #[test]
    fn collection_in_unit_interval_and_monotone(d in 0.01..2.0f64, w in 0.01..100.0f64) {
        let e = collection_efficiency(d, w);
        prop_assert!(e > 0.0 && e <= 1.0);
        prop_assert!(collection_efficiency(d, 1.1 * w) <= e);
        prop_assert!(collection_efficiency(1.1 * d, w) >= e);
    }

    #[test]
    fn noise_grows_with_each_input(
        hb in 1e-6..1e-2f64,
        omega in 1e-12..1e-8f64,
        area in 0.01..1.0f64,
        b in 1e-11..1e-9f64,
        r in 0.0..100.0f64,
        dt in 1e-11..1e-8f64,
    ) {
        let lam = 794e-9;
        let n = background_noise(hb, omega, area, b, lam, r, dt);
        prop_assert!(n >= 0.0);
        prop_assert!(background_noise(2.0 * hb, omega, area, b, lam, r, dt) > n);
        prop_assert!(background_noise(hb, 2.0 * omega, area, b, lam, r, dt) > n);
        prop_assert!(background_noise(hb, omega, 2.0 * area, b, lam, r, dt) > n);
        prop_assert!(background_noise(hb, omega, area, 2.0 * b, lam, r, dt) > n);
        prop_assert!(background_noise(hb, omega, area, b, lam, r + 1.0, dt) > n);
        prop_assert!(background_noise(hb, omega, area, b, lam, r, 2.0 * dt) > n);
    }

    #[test]
    fn slant_radius_grows_with_moment(mu in 0.0..1e-10f64, lam in 5e-7..1.6e-6f64) {
        let theta = beam_divergence(lam, 0.35);
        let w = satellite_weff(theta, 2e6, mu, lam);
        prop_assert!(w >= theta * 2e6);
        prop_assert!(satellite_weff(theta, 2e6, 2.0 * mu + 1e-14, lam) > w);
    }
}
