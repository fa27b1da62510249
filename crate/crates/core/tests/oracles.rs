use std::f64::consts::PI;

use phfock::basis::BasisIndex;
use phfock::kernels::{k_ph, k_ph_diagonal};
use phfock::measures::{ball_mass, total_gaussian_mass, Atom, Shell};
use phfock::toeplitz::{assemble, gram_matrix, AssemblyOptions};
use phfock::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::{gamma_lr, ln_gamma};

fn params(n: usize) -> FockParams {
    FockParams::new(1.0, n).unwrap()
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

/// Direct monomial evaluation for one complex coordinate.
fn basis_1d(idx: &BasisIndex, z: Complex64, alpha: f64) -> Complex64 {
    let m = idx.multi_index().entries()[0];
    let v = z.powu(m) / (alpha.powi(m as i32) * factorial(m)).sqrt();
    if idx.is_holo() {
        v
    } else {
        v.conj()
    }
}

/// Trapezoid rule on the square `[-l, l]²` with step `h`.
fn grid_integral<F: Fn(Complex64) -> Complex64>(l: f64, h: f64, f: F) -> Complex64 {
    let k = (l / h).round() as i64;
    let mut total = Complex64::new(0.0, 0.0);
    for i in -k..=k {
        for j in -k..=k {
            total += f(Complex64::new(i as f64 * h, j as f64 * h));
        }
    }
    total * h * h
}

#[test]
fn basis_values_match_direct_monomials() {
    let p = FockParams::new(0.7, 1).unwrap();
    let t = enumerate_basis(&p, 9);
    let z = Complex64::new(0.8, -1.3);
    for idx in t.indices() {
        let got = eval_basis(idx, &ComplexPoint::new(vec![z]), &p);
        let want = basis_1d(idx, z, 0.7);
        assert!((got - want).norm() <= 1e-12 * want.norm().max(1.0), "{idx:?}");
    }
}

#[test]
fn gram_matrix_is_identity() {
    for (n, d) in [(1usize, 6usize), (2, 4)] {
        let p = params(n);
        let t = enumerate_basis(&p, d);
        let g = gram_matrix(&t, &p, 1e-11).unwrap();
        let size = t.len();
        assert_eq!(size, BasisTruncation::expected_size(n, d));
        for j in 0..size {
            for k in 0..size {
                let want = if j == k { 1.0 } else { 0.0 };
                assert!((g[(j, k)] - want).norm() < 1e-8, "n={n} ({j},{k}) {}", g[(j, k)]);
            }
        }
    }
}

#[test]
fn kernel_matches_series() {
    let p = FockParams::new(1.3, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let z = Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let w = Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let x = z * w.conj() / 1.3;
        // e^{x} + e^{x̄} − 1 by its power series
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = Complex64::new(0.0, 0.0);
        for m in 0..80 {
            if m > 0 {
                term = term * x / m as f64;
            }
            sum += term;
        }
        let series = sum + sum.conj() - 1.0;
        let got = k_ph(&ComplexPoint::new(vec![z]), &ComplexPoint::new(vec![w]), &p)
            .unwrap()
            .value;
        assert!((got - series).norm() < 1e-11 * series.norm().max(1.0));
    }
    let z = ComplexPoint::new(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)]);
    let d = k_ph_diagonal(&z, &params(2));
    assert!((d - (2.0 * 2f64.exp() - 1.0)).abs() < 1e-12 * d);
}

#[test]
fn off_center_gaussian_entries_match_grid() {
    let p = params(1);
    let w0 = Complex64::new(0.9, -0.4);
    let spec = MeasureSpec::GaussianDensity {
        c: 1.3,
        beta: 0.8,
        center: Some(ComplexPoint::new(vec![w0])),
    };
    let t = enumerate_basis(&p, 4);
    let m = assemble(&spec, &t, &p, &AssemblyOptions::new(1e-11)).unwrap();
    let idx = t.indices();
    for (j, bj) in idx.iter().enumerate() {
        for (k, bk) in idx.iter().enumerate() {
            let oracle = grid_integral(9.0, 0.06, |u| {
                basis_1d(bk, u, 1.0)
                    * basis_1d(bj, u, 1.0).conj()
                    * (-u.norm_sqr()).exp()
                    * 1.3
                    * (-0.8 * (u - w0).norm_sqr()).exp()
            });
            assert!(
                (m.entries[(j, k)] - oracle).norm() < 1e-9,
                "({j},{k}) {} vs {oracle}",
                m.entries[(j, k)]
            );
        }
    }
}

#[test]
fn radial_entries_match_gamma_oracle() {
    for n in [1usize, 2] {
        let p = params(n);
        let nf = n as f64;
        let t = enumerate_basis(&p, 5);
        let (c, k, s) = (0.7, 2u32, 1.5);
        let spec = MeasureSpec::RadialPowerGaussian { c, k, s };
        let m = assemble(&spec, &t, &p, &AssemblyOptions::new(1e-11)).unwrap();
        let shells = MeasureSpec::RadialShells(vec![
            Shell {
                radius: 0.5,
                weight: 2.0,
            },
            Shell {
                radius: 1.7,
                weight: 0.3,
            },
        ]);
        let ms = assemble(&shells, &t, &p, &AssemblyOptions::new(1e-11)).unwrap();
        let kappa = s + 1.0;
        for (j, idx) in t.indices().iter().enumerate() {
            let d = idx.multi_index().degree() as f64;
            let kf = k as f64;
            let want = c
                * PI.powf(nf)
                * (ln_gamma(d + kf + nf) - ln_gamma(nf + d) - (d + kf + nf) * kappa.ln()).exp();
            assert!((m.entries[(j, j)].re - want).abs() < 1e-10 * want, "n={n} {idx:?}");
            let want_shell: f64 = [(0.5f64, 2.0), (1.7, 0.3)]
                .iter()
                .map(|(r, w)| w * r.powf(2.0 * d) * (ln_gamma(nf) - ln_gamma(nf + d)).exp())
                .sum();
            assert!((ms.entries[(j, j)].re - want_shell).abs() < 1e-10 * want_shell);
        }
    }
}

/// Lens area of two disks of radii `r1`, `r2` at distance `d`.
fn lens_area(r1: f64, r2: f64, d: f64) -> f64 {
    if d >= r1 + r2 {
        return 0.0;
    }
    if d <= (r1 - r2).abs() {
        return PI * r1.min(r2).powi(2);
    }
    let a1 = ((d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1)).acos();
    let a2 = ((d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2)).acos();
    r1 * r1 * (a1 - a1.sin() * a1.cos()) + r2 * r2 * (a2 - a2.sin() * a2.cos())
}

#[test]
fn ball_masses_match_geometry() {
    let p = params(1);
    let ball = MeasureSpec::BallIndicator {
        c: 2.0,
        center: Some(ComplexPoint::scalar(0.5, 0.0)),
        radius: 1.2,
    };
    for (a, r) in [((0.5, 0.0), 0.3), ((1.5, 1.0), 0.9), ((3.0, 0.0), 0.5), ((-0.4, 0.6), 2.0)] {
        let center = ComplexPoint::scalar(a.0, a.1);
        let got = ball_mass(&ball, &center, r, &p).unwrap();
        let d = ((a.0 - 0.5f64).powi(2) + a.1 * a.1).sqrt();
        let want = 2.0 * lens_area(1.2, r, d);
        assert!((got - want).abs() < 1e-8 * want.max(1.0), "{a:?} {r}: {got} vs {want}");
    }

    let gauss = MeasureSpec::GaussianDensity {
        c: 1.0,
        beta: 1.0,
        center: None,
    };
    for (a, r) in [((0.0, 0.0), 1.0), ((1.5, -0.5), 0.7), ((4.0, 0.0), 1.0)] {
        let center = Complex64::new(a.0, a.1);
        let got = ball_mass(&gauss, &ComplexPoint::new(vec![center]), r, &p).unwrap();
        // polar Simpson rule around the ball center
        let (nr, nt) = (400usize, 400usize);
        let mut want = 0.0;
        for i in 0..=nr {
            let rho = r * i as f64 / nr as f64;
            let wr = if i == 0 || i == nr { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            let mut ring = 0.0;
            for k in 0..nt {
                let th = 2.0 * PI * k as f64 / nt as f64;
                let u = center + Complex64::from_polar(rho, th);
                ring += (-u.norm_sqr()).exp();
            }
            want += wr * rho * ring * (2.0 * PI / nt as f64);
        }
        want *= r / nr as f64 / 3.0;
        assert!((got - want).abs() < 1e-8 * want.max(1e-300), "{a:?}: {got} vs {want}");
    }
    // centered balls in C²: Lebesgue volume and Gaussian incomplete gamma
    let p2 = params(2);
    let o = ComplexPoint::origin(2);
    let leb = ball_mass(&MeasureSpec::ScaledLebesgue { c: 1.0 }, &o, 1.3, &p2).unwrap();
    assert!((leb - PI * PI * 1.3f64.powi(4) / 2.0).abs() < 1e-10);
    let g = ball_mass(&gauss, &o, 1.3, &p2).unwrap();
    assert!((g - PI * PI * gamma_lr(2.0, 1.69)).abs() < 1e-9);
}

#[test]
fn gaussian_masses_and_berezin_normalization() {
    let p = params(1);
    let g = MeasureSpec::GaussianDensity {
        c: 2.0,
        beta: 3.0,
        center: Some(ComplexPoint::scalar(1.0, 1.0)),
    };
    // ∫ e^{-|w|²} 2 e^{-3|w-w0|²} dA = 2π/4 · e^{-3·2/4}
    let want = 2.0 * PI / 4.0 * (-1.5f64).exp();
    assert!((total_gaussian_mass(&g, &p).unwrap() - want).abs() < 1e-12);

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in [1usize, 2] {
        let p = params(n);
        let id = MeasureSpec::ScaledLebesgue {
            c: p.gaussian_normalizer(),
        };
        let (count, reach) = if n == 1 { (20, 2.0) } else { (3, 0.6) };
        for _ in 0..count {
            let z = ComplexPoint::new(
                (0..n)
                    .map(|_| Complex64::new(rng.random_range(-reach..reach), rng.random_range(-reach..reach)))
                    .collect(),
            );
            let v = phfock::berezin::berezin_of_measure(&id, &z, &p, 1e-9).unwrap();
            assert!((v - 1.0).abs() < 1e-6, "n={n} {v}");
        }
    }
}

#[test]
fn atoms_reproduce_kernel_products() {
    let p = params(1);
    let w = Complex64::new(0.6, 0.2);
    let spec = MeasureSpec::AtomSet(vec![Atom {
        point: ComplexPoint::new(vec![w]),
        weight: 1.7,
    }]);
    let t = enumerate_basis(&p, 5);
    let m = assemble(&spec, &t, &p, &AssemblyOptions::new(1e-10)).unwrap();
    for (j, bj) in t.indices().iter().enumerate() {
        for (k, bk) in t.indices().iter().enumerate() {
            let want = 1.7 * basis_1d(bk, w, 1.0) * basis_1d(bj, w, 1.0).conj() * (-w.norm_sqr()).exp();
            assert!((m.entries[(j, k)] - want).norm() < 1e-14);
        }
    }
}
