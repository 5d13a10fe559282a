use super::*;
use crate::geometry::{sample_hull, GridSpec, WigleyParams};

fn rectangular(length: f64, beam: f64, draft: f64) -> HullGrid<f64> {
    let grid = GridSpec::standard();
    HullGrid { y: vec![beam / 2.0; grid.len()], grid, length, beam_nominal: beam, draft_nominal: draft }
}

fn mid_hull() -> HullGrid<f64> {
    let p = WigleyParams::new(100.0, 14.0, 5.5, 0.70, 0.99, 0.80);
    sample_hull(&p, &GridSpec::standard()).unwrap()
}

fn high_hull() -> HullGrid<f64> {
    let p = WigleyParams::new(100.0, 12.5, 4.5, 0.55, 0.90, 0.72);
    sample_hull(&p, &GridSpec::standard()).unwrap()
}

/// Brute-force midpoint integration of the bilinear interpolant, written
/// independently of the panel formulas.
fn brute_force_pq(h: &HullGrid<f64>, u: f64, env: &HydroEnv<f64>, theta: f64, sub_x: usize, sub_z: usize) -> (f64, f64) {
    let l = h.length;
    let k0 = env.g / (u * u);
    let sec = 1.0 / theta.cos();
    let (nx, nz) = (h.grid.nx(), h.grid.nz());
    let xs: Vec<f64> = h.grid.x_stations().iter().map(|&v| v * l / 2.0).collect();
    let zs: Vec<f64> = h.grid.z_stations().iter().map(|&v| -v * h.draft_nominal).collect();
    let (mut p, mut q) = (0.0, 0.0);
    for i in 0..nx - 1 {
        let dx = xs[i + 1] - xs[i];
        for j in 0..nz - 1 {
            let dz = zs[j] - zs[j + 1];
            // slope of f = y/L in x is linear in z inside the cell
            let s_top = (h.at(i + 1, j) - h.at(i, j)) / l / dx;
            let s_bot = (h.at(i + 1, j + 1) - h.at(i, j + 1)) / l / dx;
            for a in 0..sub_x {
                let x = xs[i] + (a as f64 + 0.5) * dx / sub_x as f64;
                for b in 0..sub_z {
                    let t = (b as f64 + 0.5) / sub_z as f64;
                    let z = zs[j] - t * dz;
                    let slope = s_top * (1.0 - t) + s_bot * t;
                    let damp = (k0 * z * sec * sec).exp();
                    let w = dx / sub_x as f64 * dz / sub_z as f64;
                    // bow half (x > 0) and its mirrored stern half (slope flips sign)
                    p += w * slope * damp * ((k0 * x * sec).sin() - (-k0 * x * sec).sin());
                    q += w * slope * damp * ((k0 * x * sec).cos() - (-k0 * x * sec).cos());
                }
            }
        }
    }
    // dimensional x, z with f = y/L: P_dim = L * P
    (p / l, q / l)
}

#[test]
fn froude_unit_and_reference() {
    let env = HydroEnv::<f64>::default();
    let u = (env.g * 100.0f64).sqrt();
    assert!((froude(u, 100.0, &env) - 1.0).abs() < 1e-15);
    // 12.8611 / sqrt(9.80665 * 100) = 0.410693...
    let fr = froude(12.8611, 100.0, &env);
    assert!((fr - 0.410_693).abs() < 1e-6, "{fr}");
    assert!((froude(2.0 * 12.8611, 100.0, &env) - 2.0 * fr).abs() < 1e-15);
}

#[test]
fn reynolds_cases() {
    let unit = HydroEnv { g: 9.81, rho: 1000.0, nu: 1.0 };
    assert_eq!(reynolds(1.0, 1.0, &unit), 1.0);
    let env = HydroEnv::<f64>::default();
    let rn = reynolds(10.288, 100.0, &env);
    assert!((rn / 8.645_378e8 - 1.0).abs() < 1e-6, "{rn}");
    let half = HydroEnv { nu: env.nu / 2.0, ..env };
    assert!((reynolds(10.288, 100.0, &half) / rn - 2.0).abs() < 1e-15);
}

#[test]
fn prohaska_reference_value() {
    // B/d = 2, Cb B/L = 0.1
    let k: f64 = prohaska_k(20.0, 10.0, 0.5, 100.0);
    assert!((k - 0.2812).abs() < 1e-15, "{k}");
    let tiny: f64 = prohaska_k(1e-9, 1.0, 0.5, 100.0);
    assert!((tiny - 0.11).abs() < 1e-9);
}

#[test]
fn prohaska_horner_matches_naive() {
    for &(b, d, cb, l) in &[(14.0, 5.5, 0.7, 100.0), (20.0, 6.5, 0.85, 120.0), (9.0, 4.0, 0.5, 80.0)] {
        let (r, c) = (b / d, cb * b / l);
        let horner = 0.11 + r * (0.128 - 0.0157 * r) + c * (-3.1 + 28.8 * c);
        let k: f64 = prohaska_k(b, d, cb, l);
        assert!((k - horner).abs() <= 1e-15 * k.abs().max(1.0));
    }
}

#[test]
fn friction_line() {
    assert!((friction_cdf(1e8f64) - 1.328e-4).abs() < 1e-19);
    assert_eq!(friction_cdf(1.0f64), 1.328);
    let c = friction_cdf(3.3e8f64);
    assert!((friction_cdf(4.0 * 3.3e8) - c / 2.0).abs() < 1e-18);
}

#[test]
fn flat_sided_body_has_no_wave_drag() {
    let h = rectangular(100.0, 20.0, 10.0);
    let env = HydroEnv::default();
    let (p, q) = amplitude_pq(&h, 10.0, &env, 0.3).unwrap();
    assert_eq!((p, q), (0.0, 0.0));
    assert_eq!(wave_cdw(&h, 10.0, &env, &QuadratureSpec::default()).unwrap(), 0.0);
}

#[test]
fn amplitudes_match_brute_force() {
    let env = HydroEnv::default();
    let h = mid_hull();
    let u = knots_to_ms(20.0);
    for &theta in &[0.0, 0.6, 1.2] {
        let (p, q) = amplitude_pq(&h, u, &env, theta).unwrap();
        let (pb, qb) = brute_force_pq(&h, u, &env, theta, 64, 16);
        assert!((p - pb).abs() <= 1e-5 * pb.abs(), "theta {theta}: {p} vs {pb}");
        assert!(qb.abs() <= 1e-10 * pb.abs() && q.abs() <= 1e-10 * p.abs());
    }
}

#[test]
fn symmetric_hull_has_vanishing_q() {
    let env = HydroEnv::default();
    let h = high_hull();
    for m in 0..50 {
        let theta = m as f64 * 0.031;
        let (p, q) = amplitude_pq(&h, knots_to_ms(25.0), &env, theta).unwrap();
        assert!(q.abs() <= 1e-10 * p.abs().max(1e-300) || (p == 0.0 && q == 0.0), "theta {theta}: {p} {q}");
    }
}

#[test]
fn integrand_dies_toward_right_angle() {
    let env = HydroEnv::default();
    let h = mid_hull();
    let u = knots_to_ms(20.0);
    let integrand = |t: f64| {
        let (p, q) = amplitude_pq(&h, u, &env, t).unwrap();
        (p * p + q * q) / t.cos().powi(3)
    };
    let base = integrand(0.2);
    let near = integrand(std::f64::consts::FRAC_PI_2 - 1e-3);
    assert!(near < 1e-6 * base, "{near} vs {base}");
}

#[test]
fn production_quadrature_matches_refined_oracle() {
    let env = HydroEnv::default();
    let q = QuadratureSpec::default();
    for (h, kn) in [(mid_hull(), 20.0), (high_hull(), 25.0)] {
        let u = knots_to_ms(kn);
        let c = wave_cdw(&h, u, &env, &q).unwrap();
        let fine = wave_cdw(&h, u, &env, &q.refined()).unwrap();
        assert!(c > 0.0);
        assert!((c - fine).abs() / fine < 1e-4, "{c} vs {fine}");
    }
}

#[test]
fn refinement_differences_shrink_past_production_resolution() {
    let env = HydroEnv::default();
    let h = mid_hull();
    let u = knots_to_ms(20.0);
    let at = |n: usize| wave_cdw(&h, u, &env, &QuadratureSpec { n_theta: n, ..Default::default() }).unwrap();
    let vals: Vec<f64> = [512, 1024, 2048, 4096, 8192].iter().map(|&n| at(n)).collect();
    let diffs: Vec<f64> = vals.windows(2).map(|w| (w[1] - w[0]).abs() / w[1]).collect();
    for w in diffs.windows(2) {
        assert!(w[1] < w[0], "{diffs:?}");
    }
}

#[test]
fn convergence_check_reports_coarse_quadrature() {
    let env = HydroEnv::default();
    let q = QuadratureSpec { n_theta: 16, convergence_tol: Some(1e-8), ..Default::default() };
    let err = wave_cdw(&mid_hull(), knots_to_ms(20.0), &env, &q).unwrap_err();
    assert!(matches!(err, Error::QuadratureNonConverged { n_theta: 16, fine_panels: 32, .. }));
    let ok = QuadratureSpec { convergence_tol: Some(1e-4), ..Default::default() };
    assert!(wave_cdw(&mid_hull(), knots_to_ms(20.0), &env, &ok).is_ok());
}

#[test]
fn quadrature_spec_validation() {
    let bad = QuadratureSpec::<f64> { n_theta: 8, ..Default::default() };
    assert!(bad.validate().is_err());
    let bad = QuadratureSpec::<f64> { theta_max: 1.6, ..Default::default() };
    assert!(bad.validate().is_err());
    assert!(QuadratureSpec::<f64>::default().validate().is_ok());
}

#[test]
fn wave_drag_is_quadratic_in_beam() {
    let env = HydroEnv::default();
    let q = QuadratureSpec::default();
    let h = mid_hull();
    let mut wide = h.clone();
    wide.y.iter_mut().for_each(|v| *v *= 1.5);
    let u = knots_to_ms(20.0);
    let a = wave_cdw(&h, u, &env, &q).unwrap();
    let b = wave_cdw(&wide, u, &env, &q).unwrap();
    assert!((b / a - 2.25).abs() < 1e-12, "{}", b / a);
}

#[test]
fn drag_identity_holds_exactly() {
    let env = HydroEnv::default();
    let q = QuadratureSpec::default();
    for h in [mid_hull(), high_hull(), rectangular(100.0, 20.0, 10.0)] {
        let b = total_cd(&h, knots_to_ms(20.0), &env, &q).unwrap();
        assert_eq!(b.cd, (1.0 + b.k) * b.cdf + b.cdw);
        assert!(b.cdf > 0.0 && b.cdw >= 0.0);
    }
    let rect = total_cd(&rectangular(100.0, 20.0, 10.0), 5.0, &env, &q).unwrap();
    assert_eq!(rect.cdw, 0.0);
    assert_eq!(rect.cd, (1.0 + rect.k) * rect.cdf);
}

#[test]
fn tonnage_cases() {
    let env = HydroEnv::default();
    let rect = rectangular(100.0, 20.0, 10.0);
    assert!((displacement_tonnage(&rect, &env).unwrap() - 20_500.0).abs() < 1e-9);
    let heavy = HydroEnv { rho: 2050.0, ..env };
    assert!((displacement_tonnage(&rect, &heavy).unwrap() - 41_000.0).abs() < 1e-9);
    let w = displacement_tonnage(&mid_hull(), &env).unwrap();
    let nominal = 1025.0 * 0.70 * 100.0 * 14.0 * 5.5 / 1000.0;
    assert!((w / nominal - 1.0).abs() < 0.03, "{w} vs {nominal}");
}

#[test]
fn labels_are_deterministic() {
    let env = HydroEnv::default();
    let q = QuadratureSpec::default();
    let a = label_hull(&mid_hull(), 20.0, &env, &q).unwrap();
    let b = label_hull(&mid_hull(), 20.0, &env, &q).unwrap();
    assert_eq!(a.cd.to_bits(), b.cd.to_bits());
    assert_eq!(a.w.to_bits(), b.w.to_bits());
    assert_eq!(a.u, 20.0);
}

#[test]
fn degenerate_hull_is_rejected() {
    let env = HydroEnv::default();
    let mut h = mid_hull();
    h.draft_nominal = 0.0;
    assert!(matches!(wave_cdw(&h, 10.0, &env, &QuadratureSpec::default()), Err(Error::DegenerateHull(_))));
}

#[test]
fn single_precision_labels_track_double() {
    let p = WigleyParams::<f32>::new(100.0, 14.0, 5.5, 0.70, 0.99, 0.80);
    let h = sample_hull(&p, &GridSpec::standard()).unwrap();
    let l32 = label_hull(&h, 20.0f32, &HydroEnv::default(), &QuadratureSpec::default()).unwrap();
    let l64 = label_hull(&mid_hull(), 20.0, &HydroEnv::default(), &QuadratureSpec::default()).unwrap();
    assert!((l32.cd as f64 / l64.cd - 1.0).abs() < 1e-3);
    assert!((l32.w as f64 / l64.w - 1.0).abs() < 1e-4);
}
