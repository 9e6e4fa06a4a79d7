use std::f64::consts::FRAC_PI_2;

use spectral_core::linalg::sample_covariance_spectrum;
use spectral_core::rmt::*;
use spectral_core::synth::{spiked_sample, SpikedModelSpec};

/// Double-exponential (tanh-sinh) rule on `[a, b]`. Endpoint square-root
/// and inverse-square-root singularities are handled by the variable
/// change, so it shares nothing with the library's angular table.
fn tanh_sinh(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let h = 1.0 / 128.0;
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    let mut sum = 0.0;
    for k in -(6 * 128)..=(6 * 128) {
        let t = k as f64 * h;
        let u = FRAC_PI_2 * t.sinh();
        let w = FRAC_PI_2 * t.cosh() / u.cosh().powi(2);
        let x = mid + half * u.tanh();
        if w < 1e-300 || x <= a || x >= b {
            continue;
        }
        sum += w * f(x);
    }
    sum * h * half
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn gaussian_spectrum(n: usize, d: usize, seed: u64) -> EigenSpectrum {
    let x = spiked_sample(&SpikedModelSpec::noise(d, n, 1.0), seed).unwrap();
    sample_covariance_spectrum(&x).unwrap()
}

#[test]
fn mp_mass_matches_quadrature_oracle() {
    for q in [0.1, 0.5, 1.0, 2.0, 4.0] {
        let p = MpParams::new(1.0, q).unwrap();
        let mass = tanh_sinh(p.lambda_minus(), p.lambda_plus(), |l| {
            mp_density(l, &p).unwrap()
        });
        let expected = (1.0f64).min(1.0 / q);
        assert!((mass - expected).abs() < 1e-4, "q={q}: {mass}");
        assert!((MpDistribution::new(p).total_mass() - expected).abs() < 1e-10);
    }
}

#[test]
fn mp_density_closed_form_points() {
    let p = MpParams::new(1.0, 1.0).unwrap();
    let mid = mp_density(2.0, &p).unwrap();
    assert!((mid - 1.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-12);
    assert_eq!(mp_density(4.5, &p).unwrap(), 0.0);
    assert_eq!(mp_density(-1.0, &p).unwrap(), 0.0);
    assert!(mp_density(f64::NAN, &p).is_err());
}

#[test]
fn mp_support_cases_and_scaling() {
    assert_eq!(mp_support(1.0, 1.0).unwrap(), (0.0, 4.0));
    assert_eq!(mp_support(1.0, 0.25).unwrap(), (0.25, 2.25));
    assert_eq!(mp_support(2.0, 1.0).unwrap(), (0.0, 8.0));
    for q in [0.1, 0.3, 0.5, 1.0, 2.0, 4.0, 7.5] {
        let (lo, hi) = mp_support(1.3, q).unwrap();
        for a in [0.125, 0.5, 2.0, 4.0, 1024.0] {
            assert_eq!(
                mp_support(a * 1.3, q).unwrap(),
                (a * lo, a * hi),
                "q={q} a={a}"
            );
        }
        for a in [0.37, 3.0, 11.1] {
            let (l2, h2) = mp_support(a * 1.3, q).unwrap();
            assert!((l2 - a * lo).abs() <= 4.0 * f64::EPSILON * a * lo.max(1e-300));
            assert!((h2 - a * hi).abs() <= 4.0 * f64::EPSILON * a * hi);
        }
    }
    assert!(mp_support(0.0, 1.0).is_err());
    assert!(mp_support(1.0, -1.0).is_err());
}

#[test]
fn wigner_integrates_to_one() {
    for s2 in [0.25, 1.0, 3.0] {
        let r = 2.0 * f64::sqrt(s2);
        let mass = tanh_sinh(-r, r, |l| wigner_density(l, s2).unwrap());
        assert!((mass - 1.0).abs() < 1e-4, "{mass}");
    }
    assert!((wigner_density(0.0, 1.0).unwrap() - 1.0 / std::f64::consts::PI).abs() < 1e-12);
    assert_eq!(wigner_density(2.01, 1.0).unwrap(), 0.0);
}

#[test]
fn mp_median_matches_bisection_oracle() {
    let p = MpParams::new(1.0, 1.0).unwrap();
    let cdf = |m: f64| tanh_sinh(0.0, m, |l| mp_density(l, &p).unwrap());
    let (mut lo, mut hi) = (0.0, 4.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let oracle = 0.5 * (lo + hi);
    let got = mp_quantile(0.5, &p).unwrap();
    assert!((got - oracle).abs() < 1e-6, "{got} vs {oracle}");
}

#[test]
fn quantile_endpoints_monotone_and_round_trip() {
    for q in [0.1, 0.5, 1.0, 2.0, 4.0] {
        let p = MpParams::new(1.7, q).unwrap();
        assert!((mp_quantile(0.0, &p).unwrap() - p.lambda_minus()).abs() < 1e-12);
        assert!((mp_quantile(1.0, &p).unwrap() - p.lambda_plus()).abs() < 1e-12);
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=1000 {
            let v = mp_quantile(i as f64 / 1000.0, &p).unwrap();
            assert!(v >= prev);
            prev = v;
        }
        let width = p.lambda_plus() - p.lambda_minus();
        for i in 1..200 {
            let l = p.lambda_minus() + width * i as f64 / 200.0;
            let back = mp_quantile(mp_cdf(l, &p).unwrap(), &p).unwrap();
            assert!((back - l).abs() < 1e-6, "q={q} l={l} back={back}");
        }
    }
    let p = MpParams::new(1.0, 0.5).unwrap();
    assert!(mp_quantile(-0.1, &p).is_err());
    assert!(mp_quantile(1.1, &p).is_err());
}

#[test]
fn sigma2_quantile_cases() {
    let s = EigenSpectrum::from_values(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
    assert_eq!(estimate_sigma2_quantile(&s, 0.5).unwrap(), 2.5);
    assert_eq!(estimate_sigma2_quantile(&s, 0.0).unwrap(), 1.0);
    let c = EigenSpectrum::from_values(vec![3.25; 7]).unwrap();
    for tau in [0.0, 0.1, 0.5, 0.9, 1.0] {
        assert_eq!(estimate_sigma2_quantile(&c, tau).unwrap(), 3.25);
    }
}

#[test]
fn fit_recovers_gaussian_noise_variance() {
    let (n, d) = (2000, 500);
    let fits: Vec<f64> = (0..10)
        .map(|seed| {
            let s = gaussian_spectrum(n, d, 500 + seed);
            fit_mp(&s, d as f64 / n as f64, 0.5, DEFAULT_FIT_BINS)
                .unwrap()
                .sigma2()
        })
        .collect();
    let m = median(fits.clone());
    assert!((m - 1.0).abs() < 0.05, "median {m}, fits {fits:?}");
}

#[test]
fn fit_recovers_quantile_constructed_spectrum() {
    let d = 500;
    let p = MpParams::new(1.0, 0.5).unwrap();
    let values: Vec<f64> = (1..=d)
        .map(|i| mp_quantile((i as f64 - 0.5) / d as f64, &p).unwrap())
        .collect();
    let s = EigenSpectrum::from_eigenvalues(values, 1000, d).unwrap();
    let init = estimate_sigma2_quantile(&s, 0.5).unwrap();
    let fit = fit_sigma2(&s, 0.5, init, DEFAULT_FIT_BINS).unwrap();
    assert!((fit.sigma2() - 1.0).abs() < 0.02, "{}", fit.sigma2());
    let obj = FitObjective::new(&s, 0.5, init, DEFAULT_FIT_BINS).unwrap();
    assert!(obj.evaluate(fit.sigma2()) <= obj.evaluate(init));
}

#[test]
fn fit_rejects_degenerate_spectrum() {
    let s = EigenSpectrum::from_values(vec![0.0; 10]).unwrap();
    assert!(fit_mp(&s, 1.0, 0.5, 64).is_err());
}

#[test]
fn bbp_threshold_cases_and_symbolic_edge() {
    assert_eq!(bbp_threshold(1.0, 1.0).unwrap(), 2.0);
    assert_eq!(bbp_threshold(1.0, 0.25).unwrap(), 1.5);
    assert_eq!(bbp_threshold(2.0, 1.0).unwrap(), 4.0);
    for c in [0.05, 0.25, 0.5, 1.0, 2.0] {
        let theta = 1.0 + f64::sqrt(c);
        let at_threshold = theta + c * theta / (theta - 1.0);
        let edge = MpParams::new(1.0, c).unwrap().lambda_plus();
        assert!((at_threshold - edge).abs() < 1e-9);
        assert!((spike_location(theta, 1.0, c).unwrap() - edge).abs() < 1e-9);
    }
    assert!(bbp_threshold(0.0, 1.0).is_err());
}

#[test]
fn tw_standardization_and_tail() {
    let p = MpParams::new(1.0, 0.25).unwrap();
    assert_eq!(tw_standardize(p.lambda_plus(), &p, 1000).unwrap(), 0.0);
    let mut prev = f64::NEG_INFINITY;
    for i in 0..100 {
        let s = tw_standardize(1.0 + 0.03 * i as f64, &p, 1000).unwrap();
        assert!(s > prev);
        prev = s;
    }
    assert_eq!(tw_tail_probability(-50.0), 1.0);
    assert_eq!(tw_tail_probability(50.0), 0.0);
    let mut prev = 1.0;
    for i in 0..=400 {
        let t = tw_tail_probability(-8.0 + 0.03 * i as f64);
        assert!(t <= prev);
        prev = t;
    }
    let table = TwTable::embedded();
    assert!(table.len() >= 200);
    assert!(table.s()[0] <= -6.0 && *table.s().last().unwrap() >= 4.0);
}

#[test]
fn tw_statistic_median_on_gaussian_noise() {
    let (n, d) = (1000, 250);
    let p = MpParams::new(1.0, d as f64 / n as f64).unwrap();
    let stats: Vec<f64> = (0..200)
        .map(|seed| {
            let s = gaussian_spectrum(n, d, 10_000 + seed);
            tw_standardize(s.largest().unwrap(), &p, n).unwrap()
        })
        .collect();
    let m = median(stats);
    assert!((-2.5..=0.5).contains(&m), "median {m}");
}

#[test]
fn bidiagonal_model_matches_dense_sampling() {
    let (n, d, draws) = (60, 20, 2000);
    let chi = simulate_edge_statistics(n, d, draws, 3).unwrap();
    let p = MpParams::new(1.0, d as f64 / n as f64).unwrap();
    let dense: Vec<f64> = (0..draws as u64)
        .map(|seed| {
            let s = gaussian_spectrum(n, d, 70_000 + seed);
            tw_standardize(s.largest().unwrap(), &p, n).unwrap()
        })
        .collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let sd = |v: &[f64]| {
        let m = mean(v);
        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
    };
    let se = (sd(&chi).powi(2) / draws as f64 + sd(&dense).powi(2) / draws as f64).sqrt();
    assert!(
        (mean(&chi) - mean(&dense)).abs() < 4.0 * se,
        "{} vs {}",
        mean(&chi),
        mean(&dense)
    );
    assert!((sd(&chi) / sd(&dense) - 1.0).abs() < 0.1);
    // two-sample Kolmogorov-Smirnov at alpha ~ 1e-3
    let mut a = chi.clone();
    let mut b = dense.clone();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut ks) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        ks = ks.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    assert!(ks < 1.95 * (2.0 / draws as f64).sqrt(), "ks {ks}");
}

#[test]
fn bulk_stays_inside_edges() {
    for (n, d) in [(1000, 250), (400, 400)] {
        let p = MpParams::new(1.0, d as f64 / n as f64).unwrap();
        let delta = 3.0 * TwStandardization::for_params(&p, n).unwrap().scale;
        let fractions: Vec<f64> = (0..20)
            .map(|seed| {
                let s = gaussian_spectrum(n, d, 30_000 + seed);
                s.values()
                    .iter()
                    .filter(|&&v| v < p.lambda_minus() - delta || v > p.lambda_plus() + delta)
                    .count() as f64
                    / d as f64
            })
            .collect();
        let avg = fractions.iter().sum::<f64>() / 20.0;
        assert!(avg <= 2.0 / d as f64, "n={n} d={d}: {avg}");
    }
}
