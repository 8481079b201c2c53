use ssc_core::code::{Geometry, PauliKind};
use ssc_core::fit::{fit_threshold, scaling_form};
use ssc_core::montecarlo::{crossing_counts, from_csv, run, to_csv, wilson_interval, ResultPoint, RunConfig, TPolicy};
use ssc_core::noise::NoiseVariant;

fn config(noise: NoiseVariant, ls: Vec<usize>, ps: Vec<f64>, trials: u64) -> RunConfig {
    RunConfig {
        geometry: Geometry::Toric,
        noise,
        ls,
        ps,
        t_policy: TPolicy::EqualL,
        trials,
        seed: 12345,
        sector: PauliKind::X,
    }
}

#[test]
fn zero_noise_never_fails() {
    for noise in [
        NoiseVariant::CodeCapacity,
        NoiseVariant::CircuitBased,
        NoiseVariant::DirectParity,
    ] {
        let pts = run(&config(noise, vec![3], vec![0.0], 50), |_| {}).unwrap();
        assert_eq!(pts[0].failures, 0, "{noise}");
    }
}

#[test]
fn far_above_threshold_approaches_random_coset() {
    let pts = run(&config(NoiseVariant::CodeCapacity, vec![8], vec![0.25], 2000), |_| {}).unwrap();
    assert!(pts[0].rate > 0.5, "{}", pts[0].rate);
    assert!(pts[0].rate < 0.8);
}

#[test]
fn planar_code_capacity_runs() {
    let mut c = config(NoiseVariant::CodeCapacity, vec![4, 6], vec![0.02, 0.2], 400);
    c.geometry = Geometry::Planar;
    let pts = run(&c, |_| {}).unwrap();
    assert!(pts[0].rate < pts[1].rate);
    c.noise = NoiseVariant::CircuitBased;
    assert!(run(&c, |_| {}).is_err());
}

#[test]
fn reruns_are_identical_across_thread_counts() {
    let c = config(NoiseVariant::CircuitBased, vec![4, 6], vec![0.006, 0.01], 300);
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let a = one.install(|| run(&c, |_| {}).unwrap());
    let b = three.install(|| run(&c, |_| {}).unwrap());
    assert_eq!(a, b);
    let mut other = c.clone();
    other.seed += 1;
    let d = run(&other, |_| {}).unwrap();
    assert_ne!(
        a.iter().map(|p| p.failures).collect::<Vec<_>>(),
        d.iter().map(|p| p.failures).collect::<Vec<_>>()
    );
}

#[test]
fn invalid_configs_are_rejected() {
    assert!(run(&config(NoiseVariant::CodeCapacity, vec![4], vec![], 10), |_| {}).is_err());
    assert!(run(&config(NoiseVariant::CodeCapacity, vec![], vec![0.1], 10), |_| {}).is_err());
    assert!(run(&config(NoiseVariant::CodeCapacity, vec![4], vec![0.7], 10), |_| {}).is_err());
    assert!(run(&config(NoiseVariant::CodeCapacity, vec![4], vec![0.1], 0), |_| {}).is_err());
    let mut c = config(NoiseVariant::CircuitBased, vec![4], vec![0.01], 10);
    c.t_policy = TPolicy::Fixed(0);
    assert!(run(&c, |_| {}).is_err());
}

fn planted(theta: [f64; 5], ls: &[usize], ps: &[f64], trials: u64) -> Vec<ResultPoint> {
    let mut out = Vec::new();
    for &l in ls {
        for &p in ps {
            let rate = scaling_form(&theta, l, p);
            let failures = (rate * trials as f64).round() as u64;
            let (ci_low, ci_high) = wilson_interval(failures, trials);
            out.push(ResultPoint {
                geometry: Geometry::Toric,
                noise: NoiseVariant::CodeCapacity,
                l,
                t: 0,
                p,
                trials,
                failures,
                rate: failures as f64 / trials as f64,
                ci_low,
                ci_high,
            });
        }
    }
    out
}

#[test]
fn planted_threshold_survives_csv_and_fit() {
    let theta = [0.066, 1.5, 0.3, 2.0, 1.0];
    let ps: Vec<f64> = (0..7).map(|k| 0.05 + 0.005 * k as f64).collect();
    let pts = planted(theta, &[8, 12, 16, 24], &ps, 1_000_000);
    let back = from_csv(&to_csv(&pts)).unwrap();
    assert_eq!(back, pts);
    let fit = fit_threshold(&back).unwrap();
    assert!((fit.p_th - theta[0]).abs() < 1e-4, "{fit:?}");
    assert!((fit.nu - theta[1]).abs() < 0.05, "{fit:?}");
    assert!(crossing_counts(&back).iter().all(|&(_, _, n)| n == 1));
}
