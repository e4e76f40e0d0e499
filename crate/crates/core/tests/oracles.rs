//! Checks against independent numerical oracles: quadrature, finite
//! differences and plain bisection. None of these use the crate's own root
//! finder or closed forms.

use poisson_eiv::bias::{big_g, forward_map_g, forward_map_g_detailed, MapPath};
use poisson_eiv::corrected::inverse_map_h;
use poisson_eiv::{fit_naive, score, Dataset, DistSpec, FitOptions, ModelParams};

/// Composite Simpson rule.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = if n.is_multiple_of(2) { n } else { n + 1 };
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let x = a + i as f64 * h;
        s += if i % 2 == 1 { 4.0 * f(x) } else { 2.0 * f(x) };
    }
    s * h / 3.0
}

fn ln_gamma_fn(x: f64) -> f64 {
    // Lanczos approximation (g = 7, n = 9).
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + 7.5;
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

fn gamma_pdf(k: f64, rate: f64) -> impl Fn(f64) -> f64 {
    let c = k * rate.ln() - ln_gamma_fn(k);
    move |x: f64| {
        if x <= 0.0 {
            0.0
        } else {
            (c + (k - 1.0) * x.ln() - rate * x).exp()
        }
    }
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    assert!(flo * f(hi) < 0.0, "oracle bracket has no sign change");
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * mid.abs().max(1e-300) {
            break;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn gamma_mgf_by_quadrature() {
    let pdf = gamma_pdf(2.0, 1.2);
    let integral = simpson(|x| (0.3 * x).exp() * pdf(x), 0.0, 80.0, 200_000);
    assert!(
        (integral - 16.0 / 9.0).abs() < 1e-9,
        "quadrature {integral}"
    );
    let d = DistSpec::gamma(2.0, 1.2).unwrap();
    assert!((d.mgf(0.3).unwrap() - integral).abs() < 1e-9);
}

#[test]
fn cgf_derivatives_by_finite_differences_at_reference_point() {
    let d = DistSpec::gamma(2.0, 1.2).unwrap();
    let h = 1e-6;
    let log_m = |t: f64| d.mgf(t).unwrap().ln();
    let fd1 = (log_m(0.3 + h) - log_m(0.3 - h)) / (2.0 * h);
    assert!((fd1 - 2.0 / 0.9).abs() < 1e-6);
    assert!((d.cgf_prime(0.3).unwrap() - fd1).abs() < 1e-6);
    let fd2 = (d.cgf_prime(0.3 + h).unwrap() - d.cgf_prime(0.3 - h).unwrap()) / (2.0 * h);
    assert!((fd2 - 2.0 / 0.81).abs() < 1e-6);
    assert!((d.cgf_double_prime(0.3).unwrap() - fd2).abs() < 1e-6);
}

#[test]
fn generic_gamma_normal_slope_matches_bisection() {
    let x = DistSpec::gamma(1.5, 2.0).unwrap();
    let u = DistSpec::normal(0.0, 1.0).unwrap();
    let beta1 = 0.5;
    let oracle = bisect(|b1| big_g(&x, &u, beta1, b1).unwrap(), -20.0, 2.0 - 1e-9);
    let sol = forward_map_g_detailed(&x, &u, beta1).unwrap();
    assert_eq!(sol.path, MapPath::GammaNormal);
    assert!(
        (sol.value - oracle).abs() < 1e-10,
        "{} vs {oracle}",
        sol.value
    );
}

#[test]
fn table_slopes_match_bisection() {
    let x = DistSpec::gamma(2.0, 1.2).unwrap();
    let cases = [
        (DistSpec::normal(0.0, 0.05).unwrap(), -0.005993),
        (DistSpec::normal(0.0, 0.5).unwrap(), -0.05297),
        (DistSpec::normal(0.0, 2.0).unwrap(), -0.1454),
        (DistSpec::gamma(0.072, 1.2).unwrap(), -0.007887),
        (DistSpec::gamma(0.72, 1.2).unwrap(), -0.06378),
        (DistSpec::gamma(2.88, 1.2).unwrap(), -0.1558),
    ];
    for (u, printed) in cases {
        let printed: f64 = printed;
        let oracle = bisect(|b1| big_g(&x, &u, 0.3, b1).unwrap(), -20.0, 1.2 - 1e-9);
        let b1 = forward_map_g(&x, &u, 0.3).unwrap();
        assert!((b1 - oracle).abs() < 1e-10);
        // Printed to four significant figures.
        let half_ulp = 0.5 * 10f64.powi(printed.abs().log10().floor() as i32 - 3);
        assert!(((oracle - 0.3) - printed).abs() <= half_ulp * (1.0 + 1e-9));
    }
}

#[test]
fn inverse_map_matches_bisection() {
    let x = DistSpec::gamma(2.0, 1.2).unwrap();
    for u in [
        DistSpec::normal(0.0, 0.5).unwrap(),
        DistSpec::gamma(0.72, 1.2).unwrap(),
    ] {
        for &b1 in &[-0.8, -0.1, 0.2, 0.6, 1.0] {
            let target = u.cgf_prime(b1).unwrap() + x.cgf_prime(b1).unwrap() - u.mean();
            let oracle = bisect(
                |beta1| x.cgf_prime(beta1).unwrap() - target,
                -50.0,
                1.2 - 1e-12,
            );
            let h = inverse_map_h(&x, &u, b1).unwrap();
            assert!((h - oracle).abs() < 1e-10, "{u} b1={b1}: {h} vs {oracle}");
        }
    }
}

#[test]
fn two_point_fit_matches_profiled_bisection() {
    // Profile out the intercept: exp(b0) = sum(y) / sum(exp(b1 w)); then the
    // slope solves the second score component.
    let y = [1.0, 3.0];
    let w = [0.0, 1.0];
    let slope_eq = |b1: f64| {
        let e0 = (y[0] + y[1]) / (w.iter().map(|wi| (b1 * wi).exp()).sum::<f64>());
        y.iter()
            .zip(&w)
            .map(|(yi, wi)| (yi - e0 * (b1 * wi).exp()) * wi)
            .sum::<f64>()
    };
    let b1 = bisect(slope_eq, -10.0, 10.0);
    let b0 = (4.0 / (1.0 + b1.exp())).ln();

    let data = Dataset::new(vec![1, 3], w.to_vec()).unwrap();
    let est = fit_naive(&data, &FitOptions::default()).unwrap();
    assert!(est.score_norm <= 1e-10);
    assert!((est.params.beta1 - b1).abs() < 1e-9);
    assert!((est.params.beta0 - b0).abs() < 1e-9);
}

#[test]
fn score_by_hand() {
    let d = Dataset::new(vec![2, 1], vec![1.0, 0.0]).unwrap();
    let s = score(&ModelParams::new(0.0, 0.0).unwrap(), &d).unwrap();
    assert_eq!(s, [0.5, 0.5]);
}
