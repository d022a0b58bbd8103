use num_complex::Complex64;
use uavcomp_core::channel::*;
use uavcomp_core::geometry::{BsLayout, CompSet, Point2, Rect};
use uavcomp_core::rng::stream;
use uavcomp_core::specfun::gamma_sum_ccdf;

fn layout(sites: Vec<Point2>) -> BsLayout {
    BsLayout::from_sites(sites, Rect::centered(4000.0), 0.0, 20e-6).unwrap()
}

fn comp() -> CompSet {
    CompSet { members: [0, 1, 2], triangle: 0, fallback: false }
}

fn tri_sites() -> Vec<Point2> {
    vec![Point2::new(100.0, 0.0), Point2::new(-60.0, 90.0), Point2::new(-50.0, -120.0)]
}

#[test]
fn rayleigh_single_antenna_fit_is_exponential() {
    let p = fit_gain_params(0.0, 1, 200_000, &mut stream(21, 0)).unwrap();
    assert!((p.m2 - 1.0).abs() < 0.02, "m2 {}", p.m2);
    assert!((p.omega2 - 1.0).abs() < 0.02, "omega2 {}", p.omega2);
}

#[test]
fn fit_matches_moments_of_raw_gain() {
    let p = fitted_params(1.0, 8).unwrap();
    assert!((p.m1 - 32.0 / 3.0).abs() < 1e-12 && (p.omega1 - 1.5).abs() < 1e-12);
    let mut rng = stream(22, 0);
    let n = 200_000;
    let g: Vec<f64> = (0..n).map(|_| raw_interference_gain(1.0, 8, &mut rng)).collect();
    let mean = g.iter().sum::<f64>() / n as f64;
    let var = g.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    assert!((p.m2 * p.omega2 / mean - 1.0).abs() < 0.01);
    assert!((p.m2 * p.omega2 * p.omega2 / var - 1.0).abs() < 0.02);
    // the memo returns the same fit
    assert_eq!(fitted_params(1.0, 8).unwrap(), p);
}

#[test]
fn hand_computed_nofading_sir() {
    let mut sites = tri_sites();
    sites.push(Point2::new(700.0, 300.0));
    let l = layout(sites.clone());
    let h = 50.0;
    let alpha = 3.0;
    let p = Point2::new(5.0, -7.0);
    let s = sample_sir_nofading(&l, &comp(), h, p, alpha).unwrap();
    let d = |q: Point2| (q.dist2(p) + h * h).sqrt();
    let amp: f64 = sites[..3].iter().map(|&q| d(q).powf(-alpha / 2.0)).sum();
    let want = amp * amp / d(sites[3]).powf(-alpha);
    assert!((s.sir / want - 1.0).abs() < 1e-14);
    assert!(!s.interference_free);
}

#[test]
fn interferer_at_twice_the_distance() {
    // serving sites stacked at one point act as one coherent transmitter
    let l = layout(vec![Point2::new(0.0, 0.0), Point2::new(0.0, 0.0), Point2::new(0.0, 0.0), Point2::new(200.0, 0.0)]);
    let s = sample_sir_nofading(&l, &comp(), 0.0001, Point2::new(100.0, 0.0), 4.0).unwrap();
    // three equal amplitudes add coherently: factor 9
    assert!((s.sir / 9.0 - 1.0).abs() < 1e-9);
    let l = layout(vec![Point2::new(0.0, 0.0), Point2::new(1e7, 0.0), Point2::new(-1e7, 0.0), Point2::new(300.0, 0.0)]);
    let s = sample_sir_nofading(&l, &comp(), 0.0, Point2::new(100.0, 0.0), 4.0).unwrap();
    assert!((s.sir / 2f64.powi(4) - 1.0).abs() < 1e-6, "{}", s.sir);
}

#[test]
fn empty_interferer_set_is_flagged() {
    let l = layout(tri_sites());
    let s = sample_sir_nofading(&l, &comp(), 40.0, Point2::default(), 3.0).unwrap();
    assert!(s.interference_free && s.sir.is_infinite());
    let f = fitted_params(1.0, 4).unwrap();
    let s = sample_sir(&l, &comp(), 40.0, Point2::default(), &f, 3.0, &mut stream(1, 2)).unwrap();
    assert!(s.interference_free && s.sir.is_infinite());
    assert!(sample_sir_nofading(&l, &comp(), 40.0, Point2::default(), 2.0).is_err());
}

#[test]
fn serving_gain_mean_and_coherent_gain() {
    let f = fitted_params(1.0, 8).unwrap();
    let sites = tri_sites();
    let h = 50.0;
    let alpha = 3.0;
    let p = Point2::default();
    let w: Vec<f64> = sites.iter().map(|q| (q.dist2(p) + h * h).powf(-alpha / 2.0)).collect();
    let sw: f64 = w.iter().sum();
    let mut rng = stream(23, 0);
    let n = 100_000;
    let mut incoherent = 0.0;
    for _ in 0..n {
        incoherent += w.iter().map(|wi| wi * serving_amplitude(1.0, 8, &mut rng).powi(2)).sum::<f64>();
    }
    let r = incoherent / n as f64 / sw;
    assert!((r / (f.m1 * f.omega1) - 1.0).abs() < 0.01, "{r}");
    // the coherent sum beats the incoherent one and respects Cauchy-Schwarz
    let l = layout(sites);
    let mut coh = 0.0;
    for _ in 0..20_000 {
        coh += sample_sir(&l, &comp(), h, p, &f, alpha, &mut rng).unwrap().signal;
    }
    let c = coh / 20_000.0 / sw;
    assert!(c > 1.2 * f.m1 * f.omega1 && c <= 3.0 * f.m1 * f.omega1, "{c}");
}

#[test]
fn strong_los_converges_to_nofading() {
    let k = 1e3;
    let f = fitted_params(k, 8).unwrap();
    let mut sites = tri_sites();
    sites.extend([Point2::new(600.0, 100.0), Point2::new(-400.0, 500.0), Point2::new(0.0, -900.0)]);
    let l = layout(sites);
    let p = Point2::new(10.0, 10.0);
    let eta = sample_sir_nofading(&l, &comp(), 50.0, p, 3.0).unwrap().sir;
    let mut rng = stream(24, 0);
    let mut v: Vec<f64> = (0..2001).map(|_| sample_sir(&l, &comp(), 50.0, p, &f, 3.0, &mut rng).unwrap().sir).collect();
    v.sort_by(f64::total_cmp);
    assert!((v[1000] / eta - 1.0).abs() < 0.01, "{} vs {eta}", v[1000]);
}

#[test]
fn precoder_cancels_phase() {
    let mut rng = stream(25, 0);
    let h = ricean_vector(1.0, 8, &mut rng);
    let norm = h.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let rot: Vec<Complex64> = h.iter().enumerate().map(|(i, z)| z * Complex64::from_polar(1.0, 0.7 * i as f64 + 0.3)).collect();
    let rn = rot.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    // received amplitude |h^H h/||h|||
    let rx: Complex64 = rot.iter().map(|z| z.conj() * z / rn).sum();
    assert!((rx.norm() - norm).abs() < 1e-12 * norm);
    assert!(rx.im.abs() < 1e-12 * norm);
}

#[test]
fn power_scaling_cancels() {
    let mut sites = tri_sites();
    sites.push(Point2::new(500.0, 10.0));
    let l = layout(sites);
    let f = fitted_params(1.0, 4).unwrap();
    let s = sample_sir(&l, &comp(), 60.0, Point2::default(), &f, 3.0, &mut stream(26, 0)).unwrap();
    for &c in &[1e-3, 7.0, 1e6] {
        assert!((s.with_power(c).sir / s.sir - 1.0).abs() < 4.0 * f64::EPSILON);
    }
}

#[test]
fn closer_interferer_lowers_sir() {
    let f = fitted_params(1.0, 4).unwrap();
    for &x in &[800.0, 500.0, 300.0] {
        let mut far = tri_sites();
        far.extend([Point2::new(x, 0.0), Point2::new(0.0, 700.0)]);
        let mut near = far.clone();
        near[3] = Point2::new(x * 0.9, 0.0);
        let (lf, ln) = (layout(far), layout(near));
        let a = sample_sir(&lf, &comp(), 50.0, Point2::default(), &f, 3.0, &mut stream(27, 0)).unwrap();
        let b = sample_sir(&ln, &comp(), 50.0, Point2::default(), &f, 3.0, &mut stream(27, 0)).unwrap();
        assert!(b.sir < a.sir);
        let a = sample_sir_nofading(&lf, &comp(), 50.0, Point2::default(), 3.0).unwrap();
        let b = sample_sir_nofading(&ln, &comp(), 50.0, Point2::default(), 3.0).unwrap();
        assert!(b.sir < a.sir);
    }
}

#[test]
fn deterministic_given_stream() {
    let mut sites = tri_sites();
    sites.push(Point2::new(500.0, 10.0));
    let l = layout(sites);
    let f = fitted_params(1.0, 4).unwrap();
    let a = sample_sir(&l, &comp(), 60.0, Point2::default(), &f, 3.0, &mut stream(28, 3)).unwrap();
    let b = sample_sir(&l, &comp(), 60.0, Point2::default(), &f, 3.0, &mut stream(28, 3)).unwrap();
    assert_eq!(a, b);
    let opts = SirOptions { raw_interference: true, ..Default::default() };
    let a = sample_sir_with(&l, &comp(), 60.0, Point2::default(), &f, 3.0, &opts, &mut stream(28, 3)).unwrap();
    let b = sample_sir_with(&l, &comp(), 60.0, Point2::default(), &f, 3.0, &opts, &mut stream(28, 3)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn serving_gain_sum_ccdf_matches_truncated_series() {
    let f = fitted_params(1.0, 8).unwrap();
    let mut rng = stream(29, 0);
    let n = 100_000;
    let mut s: Vec<f64> = (0..n).map(|_| (0..3).map(|_| serving_amplitude(1.0, 8, &mut rng).powi(2)).sum()).collect();
    s.sort_by(f64::total_cmp);
    let mut worst: f64 = 0.0;
    for i in (0..n).step_by(500) {
        let x = s[i];
        let emp = 1.0 - i as f64 / n as f64;
        worst = worst.max((emp - gamma_sum_ccdf(x, 3.0 * f.m1, f.omega1)).abs());
    }
    assert!(worst < 1e-2, "max CCDF gap {worst}");
}

#[test]
fn far_field_tail_matches_explicit_sum() {
    // mean of the explicit ring sum equals the closed-form tail
    let lambda = 20e-6;
    let (r_in, r_out, h, alpha) = (800.0, 6000.0, 50.0, 3.0);
    let mut acc = 0.0;
    let trials = 400;
    for t in 0..trials {
        let lay = uavcomp_core::geometry::sample_ppp(lambda, Rect::centered(2.0 * r_out), 0.0, 900 + t).unwrap();
        acc += lay
            .sites
            .iter()
            .map(|q| q.norm())
            .filter(|&r| r > r_in && r < r_out)
            .map(|r| (r * r + h * h).powf(-alpha / 2.0))
            .sum::<f64>();
    }
    let emp = acc / trials as f64;
    let want = far_field_mean(lambda, 1.0, alpha, r_in, h) - far_field_mean(lambda, 1.0, alpha, r_out, h);
    assert!((emp / want - 1.0).abs() < 0.03, "{emp} {want}");
}
