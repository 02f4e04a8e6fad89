use rfsep_autograd::gradcheck::{check_case, GradCase, OpKind};

#[test]
fn twenty_seeds_every_op_f32() {
    for kind in OpKind::ALL {
        for seed in 0..20 {
            let case = GradCase::random(kind, 1000 + seed);
            let r = check_case::<f32>(&case, 1e-3).unwrap();
            assert!(r.max_rel_error() <= 1e-3, "{kind:?} seed {seed}: {:?}", r.rel_errors);
        }
    }
}

#[test]
fn f64_shadow_is_tight() {
    for kind in OpKind::ALL {
        for seed in 0..5 {
            let case = GradCase::random(kind, 5000 + seed);
            let r = check_case::<f64>(&case, 1e-3).unwrap();
            assert!(r.max_rel_error() <= 1e-6, "{kind:?} seed {seed}: {:?}", r.rel_errors);
        }
    }
}
