use proptest::prelude::*;
use srd_core::{
    analyze_stationary, feasibility_range, inner_curves, lambda_value, mutual_information, outer_curve,
    rate_inner_markov, rate_inner_memoryless, DistortionTensor, MarkovKernel, SolverConfig, SourcePmf, Witness,
};

fn quick() -> SolverConfig {
    SolverConfig {
        restarts: 1,
        max_iters: 2000,
        ..SolverConfig::default()
    }
}

fn binary_tensor() -> impl Strategy<Value = DistortionTensor> {
    prop::collection::vec(0.0..2.0f64, 8).prop_map(|v| DistortionTensor::new(2, 2, v).unwrap())
}

fn binary_source() -> impl Strategy<Value = SourcePmf> {
    (0.05..0.95f64).prop_map(|a| SourcePmf::new(vec![a, 1.0 - a]).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn markov_bound_never_exceeds_memoryless(d in binary_tensor(), p in binary_source(), t in 0.0..1.0f64) {
        let cfg = quick();
        let r = feasibility_range(&p, &d, &cfg).unwrap();
        let target = r.d_min + t * (r.d_max - r.d_min);
        let m = rate_inner_memoryless(&p, &d, target, &cfg).unwrap();
        let k = rate_inner_markov(&p, &d, target, &cfg).unwrap();
        prop_assert!(m.is_feasible() && k.is_feasible());
        prop_assert!(k.rate().unwrap() <= m.rate().unwrap() + 1e-9);
    }

    #[test]
    fn memoryless_witness_replays(d in binary_tensor(), p in binary_source(), t in 0.0..1.0f64) {
        let cfg = quick();
        let r = feasibility_range(&p, &d, &cfg).unwrap();
        let target = r.d_min + t * (r.d_max - r.d_min);
        let a = rate_inner_memoryless(&p, &d, target, &cfg).unwrap();
        let pt = a.point().unwrap();
        let dist = lambda_value(&pt.witness, &p, &d).unwrap();
        let mi = mutual_information(&pt.witness.joint(&p)).unwrap();
        prop_assert!(dist <= target + 1e-9);
        prop_assert!((mi - pt.rate).abs() <= 1e-9);
    }

    #[test]
    fn markov_witness_replays(d in binary_tensor(), p in binary_source(), t in 0.0..1.0f64) {
        let cfg = quick();
        let r = feasibility_range(&p, &d, &cfg).unwrap();
        let target = r.d_min + t * (r.d_max - r.d_min);
        let a = rate_inner_markov(&p, &d, target, &cfg).unwrap();
        let pt = a.point().unwrap();
        let s = analyze_stationary(&pt.witness, &p, &d).unwrap();
        prop_assert!(s.distortion <= target + 1e-9);
        prop_assert!((s.rate_bits - pt.rate).abs() <= 1e-9);
    }

    #[test]
    fn feasibility_range_brackets_kernels(d in binary_tensor(), p in binary_source(), a in 0.0..1.0f64, b in 0.0..1.0f64) {
        let r = feasibility_range(&p, &d, &quick()).unwrap();
        let w = srd_core::MemorylessKernel::new(&[vec![a, 1.0 - a], vec![b, 1.0 - b]]).unwrap();
        let l = lambda_value(&w, &p, &d).unwrap();
        prop_assert!(l >= r.d_min - 1e-12);
        prop_assert!(r.d_min <= r.d_max + 1e-12);
    }
}

#[test]
fn curves_are_sandwiched_and_replayable() {
    let cfg = SolverConfig::default();
    let p = SourcePmf::uniform(2).unwrap();
    let d = DistortionTensor::fig2(0.5).unwrap();
    let grid: Vec<f64> = (0..13).map(|i| 0.05 * i as f64).collect();
    let (ri2, ri1) = inner_curves(&p, &d, &grid, &cfg).unwrap();
    let r1 = outer_curve(&p, &d, &grid, &cfg).unwrap();
    for ((a, b), o) in ri1.points.iter().zip(&ri2.points).zip(&r1.points) {
        if let (Some(a), Some(b)) = (a.rate, b.rate) {
            assert!(a <= b + 1e-9);
            assert!(o.rate.unwrap() <= a + 2e-2, "D={} R_1={:?} R_I1={a}", o.d, o.rate);
        }
        if let Some(Witness::Markov(k)) = &a.witness {
            let s = analyze_stationary(k, &p, &d).unwrap();
            assert!(s.distortion <= a.d + 1e-9);
        }
    }
}

#[test]
fn lifted_memoryless_kernel_keeps_its_values() {
    let p = SourcePmf::new(vec![0.3, 0.7]).unwrap();
    let d = DistortionTensor::gamma_hamming(0.4).unwrap();
    let w = srd_core::MemorylessKernel::new(&[vec![0.8, 0.2], vec![0.1, 0.9]]).unwrap();
    let s = analyze_stationary(&MarkovKernel::from_memoryless(&w), &p, &d).unwrap();
    assert!((s.distortion - lambda_value(&w, &p, &d).unwrap()).abs() < 1e-12);
    assert!((s.rate_bits - mutual_information(&w.joint(&p)).unwrap()).abs() < 1e-12);
}
