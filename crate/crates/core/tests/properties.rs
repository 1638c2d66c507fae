use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fourtran_core::correlate::{correlate_direct, correlate_fft};
use fourtran_core::encoder::Encoder;
use fourtran_core::field::{fiber_fourier, lift, rotate_field, RotateMode, ScalarField};
use fourtran_core::group::{FiniteRotationGroup, GroupName, Rot2, Rot3, Rotation, RotationSet, SamplingMethod};
use fourtran_core::harmonic::{so3_forward, Coefficients, Fiber, FourierCoeffs3};
use fourtran_core::harness::{gen_scene, SceneOptions, ShapeId};
use fourtran_core::rep::{act_left, act_right, RepSpec};
use fourtran_core::transporter::{grid_group, PoseDistribution};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn random_field(shape: &[usize], channels: usize, seed: u64) -> ScalarField {
    let mut r = rng(seed);
    let n: usize = shape.iter().product::<usize>() * channels;
    let data = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
    ScalarField::new(shape, 0.01, &vec![0.0; shape.len()], channels, data).unwrap()
}

fn any_dim() -> impl Strategy<Value = usize> {
    prop_oneof![Just(2usize), Just(3usize)]
}

fn rep_kinds() -> impl Strategy<Value = RepSpec> {
    prop_oneof![
        (0usize..=6).prop_map(RepSpec::WignerD),
        (0usize..=37).prop_map(RepSpec::So2Irrep),
        (2usize..=3).prop_map(RepSpec::Standard),
        Just(RepSpec::Trivial),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rotation_group_axioms(dim in any_dim(), seed in any::<u64>()) {
        let mut r = rng(seed);
        let (a, b, c) = (Rotation::random(dim, &mut r), Rotation::random(dim, &mut r), Rotation::random(dim, &mut r));
        let e = Rotation::identity(dim);
        let lhs = a.compose(&b).compose(&c);
        let rhs = a.compose(&b.compose(&c));
        prop_assert!(max_diff(&lhs.matrix(), &rhs.matrix()) < 1e-12);
        prop_assert!(max_diff(&a.compose(&e).matrix(), &a.matrix()) < 1e-12);
        prop_assert!(max_diff(&e.compose(&a).matrix(), &a.matrix()) < 1e-12);
        prop_assert!(a.compose(&a.inverse()).distance(&e) < 1e-7);
    }

    #[test]
    fn planar_angle_stays_canonical(t in -100.0f64..100.0, u in -100.0f64..100.0) {
        let g = Rot2::new(t).compose(&Rot2::new(u)).inverse();
        prop_assert!((0.0..std::f64::consts::TAU).contains(&g.theta()));
    }

    #[test]
    fn quaternions_stay_unit_and_canonical(seed in any::<u64>()) {
        let mut r = rng(seed);
        let g = Rot3::random(&mut r).compose(&Rot3::random(&mut r)).inverse();
        let q = g.quaternion();
        let norm = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!((norm - 1.0).abs() < 1e-12);
        prop_assert!(q[0] >= 0.0);
        let neg = Rot3::from_quaternion([-q[0], -q[1], -q[2], -q[3]]);
        prop_assert!(neg.distance(&g) < 1e-7);
    }

    #[test]
    fn sampling_is_reproducible(dim in any_dim(), m in 1usize..200, seed in any::<u64>(), uniform in any::<bool>()) {
        let method = if uniform { SamplingMethod::Uniform } else { SamplingMethod::LowDiscrepancy };
        let a = RotationSet::sample(dim, m, &method, seed).unwrap();
        let b = RotationSet::sample(dim, m, &method, seed).unwrap();
        prop_assert_eq!(a.rotations(), b.rotations());
        let total: f64 = a.weights().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn representations_are_orthogonal_homomorphisms(rep in rep_kinds(), seed in any::<u64>()) {
        let dim = match rep {
            RepSpec::WignerD(_) => 3,
            RepSpec::So2Irrep(_) => 2,
            RepSpec::Standard(d) => d,
            _ => 3,
        };
        let mut r = rng(seed);
        let (g, h) = (Rotation::random(dim, &mut r), Rotation::random(dim, &mut r));
        let (a, b) = (rep.evaluate(&g).unwrap(), rep.evaluate(&h).unwrap());
        let ab = rep.evaluate(&g.compose(&h)).unwrap();
        prop_assert!((&a * &b - &ab).norm() < 1e-8);
        let n = a.nrows();
        prop_assert!((a.transpose() * &a - nalgebra::DMatrix::<f64>::identity(n, n)).norm() < 1e-9);
    }

    #[test]
    fn regular_representation_is_a_homomorphism(name in prop_oneof![Just("c4"), Just("c90"), Just("o24"), Just("i60")], i in 0usize..90, j in 0usize..90) {
        let group = FiniteRotationGroup::parse(name).unwrap();
        let (i, j) = (i % group.order(), j % group.order());
        let rep = RepSpec::Regular(group.clone());
        let (g, h) = (group.element(i), group.element(j));
        let lhs = rep.evaluate(&g).unwrap() * rep.evaluate(&h).unwrap();
        prop_assert!((lhs - rep.evaluate(&g.compose(&h)).unwrap()).norm() < 1e-8);
    }

    #[test]
    fn left_and_right_actions_commute(seed in any::<u64>(), i in 0usize..24, j in 0usize..24) {
        let set = RotationSet::sample(3, 1, &SamplingMethod::Cosets { group: GroupName::Octahedral, reps: 2, two_sided: true }, seed).unwrap();
        let group = grid_group(3);
        let (g1, g2) = (group.element(i), group.element(j));
        let mut r = rng(seed);
        let values: Vec<f64> = (0..set.len()).map(|_| r.gen_range(-1.0..1.0)).collect();
        let lr = act_left(&set, &act_right(&set, &values, &g1, None).unwrap(), &g2, None).unwrap();
        let rl = act_right(&set, &act_left(&set, &values, &g2, None).unwrap(), &g1, None).unwrap();
        prop_assert_eq!(lr, rl);
    }
}

fn random_coeffs3(lmax: usize, seed: u64) -> FourierCoeffs3 {
    let mut r = rng(seed);
    let n = Fiber::So3 { lmax }.len();
    let v: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
    FourierCoeffs3::from_slice(lmax, &v)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn so3_coefficient_actions_match_sample_actions(lmax in 0usize..=4, seed in any::<u64>()) {
        let c = Coefficients::So3(random_coeffs3(lmax, seed));
        let mut r = rng(seed ^ 1);
        let (g, h) = (Rotation::random(3, &mut r), Rotation::random(3, &mut r));
        let left = c.act_left(&g).unwrap().evaluate(&h);
        prop_assert!((left - c.evaluate(&g.inverse().compose(&h))).abs() < 1e-9);
        let right = c.act_right(&g).unwrap().evaluate(&h);
        prop_assert!((right - c.evaluate(&h.compose(&g.inverse()))).abs() < 1e-9);
    }

    #[test]
    fn so3_forward_recovers_bandlimited_functions(lmax in 0usize..=3, seed in any::<u64>()) {
        let set = RotationSet::low_discrepancy(3, 384, 0).unwrap();
        let f = random_coeffs3(lmax, seed);
        let samples = Coefficients::So3(f.clone()).synthesize(&set);
        let back = so3_forward(&set, &samples, lmax).unwrap();
        prop_assert!(max_diff(&back.to_vec(), &f.to_vec()) < 1e-6);
    }

    #[test]
    fn so2_shift_matches_sample_shift(k in 0usize..=12, phi in -7.0f64..7.0, theta in -7.0f64..7.0, seed in any::<u64>()) {
        let mut r = rng(seed);
        let v: Vec<f64> = (0..2 * k + 1).map(|_| r.gen_range(-1.0..1.0)).collect();
        let c = fourtran_core::harmonic::FourierCoeffs2::from_slice(k, &v);
        prop_assert!((c.shift(phi).evaluate(theta) - c.evaluate(theta - phi)).abs() < 1e-9);
    }

    #[test]
    fn rotating_through_a_full_cycle_is_the_identity(dim in any_dim(), i in 0usize..24, seed in any::<u64>()) {
        let group = grid_group(dim);
        let g = group.element(i % group.order());
        let shape = vec![5; dim];
        let f = random_field(&shape, 2, seed);
        let mut cur = f.clone();
        let mut power = Rotation::identity(dim);
        loop {
            cur = rotate_field(&cur, &g, RotateMode::ExactSubgroup).unwrap();
            power = g.compose(&power);
            if power.distance(&Rotation::identity(dim)) < 1e-9 {
                break;
            }
        }
        prop_assert_eq!(cur.data(), f.data());
    }

    #[test]
    fn lift_channels_are_rotations(dim in any_dim(), seed in any::<u64>()) {
        let set = RotationSet::subgroup(&grid_group(dim));
        let f = random_field(&vec![5; dim], 1, seed);
        let lifted = lift(&f, &set).unwrap();
        for (i, g) in set.rotations().iter().enumerate() {
            let rotated = rotate_field(&f, g, RotateMode::ExactSubgroup).unwrap();
            let channel = lifted.channel(i).unwrap();
            prop_assert_eq!(channel.data(), rotated.data());
        }
    }

    #[test]
    fn fiber_fourier_is_linear(dim in any_dim(), a in -3.0f64..3.0, b in -3.0f64..3.0, seed in any::<u64>()) {
        let set = RotationSet::subgroup(&grid_group(dim));
        let order = if dim == 2 { 2 } else { 1 };
        let shape = vec![3; dim];
        let (f, h) = (random_field(&shape, set.len(), seed), random_field(&shape, set.len(), seed ^ 7));
        let combo: Vec<f64> = f.data().iter().zip(h.data()).map(|(x, y)| a * x + b * y).collect();
        let combo = ScalarField::new(&shape, 0.01, &vec![0.0; dim], set.len(), combo).unwrap();
        let (kf, kh, kc) = (
            fiber_fourier(&f, &set, order).unwrap(),
            fiber_fourier(&h, &set, order).unwrap(),
            fiber_fourier(&combo, &set, order).unwrap(),
        );
        let expect: Vec<f64> = kf.base.data().iter().zip(kh.base.data()).map(|(x, y)| a * x + b * y).collect();
        prop_assert!(max_diff(kc.base.data(), &expect) < 1e-9);
    }

    #[test]
    fn encoders_commute_with_grid_rotations(
        dim in any_dim(),
        i in 0usize..24,
        enc in prop_oneof![
            Just(Encoder::Identity),
            (0.3f64..2.0).prop_map(Encoder::IsotropicBlur),
            (0.0f64..2.5).prop_map(Encoder::LocalDensity),
        ],
        seed in any::<u64>(),
    ) {
        let group = grid_group(dim);
        let g = group.element(i % group.order());
        let f = random_field(&vec![7; dim], 2, seed);
        let a = enc.encode(&rotate_field(&f, &g, RotateMode::ExactSubgroup).unwrap()).unwrap();
        let b = rotate_field(&enc.encode(&f).unwrap(), &g, RotateMode::ExactSubgroup).unwrap();
        prop_assert_eq!(a.shape(), f.shape());
        prop_assert!(max_diff(a.data(), b.data()) < 1e-6);
    }

    #[test]
    fn fft_correlation_matches_direct(dim in any_dim(), k in prop_oneof![Just(1usize), Just(3), Just(5)], seed in any::<u64>()) {
        let signal = random_field(&vec![9; dim], 2, seed);
        let kernel = random_field(&vec![k; dim], 6, seed ^ 3);
        let a = correlate_fft(&kernel, 2, &signal).unwrap();
        let b = correlate_direct(&kernel, 2, &signal).unwrap();
        prop_assert_eq!(a.channels(), 3);
        prop_assert!(max_diff(a.data(), b.data()) < 1e-9);
    }

    #[test]
    fn softmax_normalizes_and_ignores_offsets(n in 1usize..300, offset in -50.0f64..50.0, seed in any::<u64>()) {
        let mut r = rng(seed);
        let scores: Vec<f64> = (0..n * 4).map(|_| r.gen_range(-20.0..20.0)).collect();
        let dist = |scores: Vec<f64>| PoseDistribution {
            shape: vec![n, 1],
            origin: vec![0.0, 0.0],
            cell_size: 0.01,
            rotations: RotationSet::subgroup(&FiniteRotationGroup::new(GroupName::Cyclic(4)).unwrap()),
            scores,
            normalized: false,
        };
        let p = dist(scores.clone()).normalize().unwrap();
        prop_assert!(p.scores.iter().all(|&s| s >= 0.0));
        prop_assert!((p.scores.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let shifted = dist(scores.iter().map(|s| s + offset).collect()).normalize().unwrap();
        prop_assert_eq!(p.argmax_index().unwrap(), shifted.argmax_index().unwrap());
        prop_assert_eq!(p.argmax_index().unwrap(), dist(scores).argmax_index().unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn scene_generation_is_deterministic(
        shape in prop_oneof![Just(ShapeId::LBlock2d), Just(ShapeId::KitShape2d(3)), Just(ShapeId::PegCube3d), Just(ShapeId::LBracket3d)],
        seed in any::<u64>(),
        grid_exact in any::<bool>(),
    ) {
        let opts = SceneOptions { grid_exact, ..Default::default() };
        let a = gen_scene(shape, seed, &opts).unwrap();
        let b = gen_scene(shape, seed, &opts).unwrap();
        prop_assert_eq!(a, b);
    }
}
