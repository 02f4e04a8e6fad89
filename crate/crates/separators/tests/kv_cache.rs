use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rfsep_autograd::{ParamStore, Real, Tensor};
use rfsep_separators::decoder::window_of;
use rfsep_separators::{Decoder, DecoderConfig};

fn randomize<T: Real>(store: &mut ParamStore<T>, seed: u64) {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ids: Vec<_> = store.ids().collect();
    for id in ids {
        store.get_mut(id).data_mut().iter_mut().for_each(|v| *v = T::lit(rng.random_range(-0.2..0.2)));
    }
}

fn cfg() -> DecoderConfig {
    DecoderConfig { num_layers: 3, hidden_dim: 24, num_heads: 3, window_samples: 8, context_windows: 5, mlp_ratio: 4, residual_output: true }
}

#[test]
fn streaming_with_teacher_feedback_matches_batch() {
    let mut d = Decoder::<f32>::new(cfg(), 1).unwrap();
    randomize(d.params_mut(), 2);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let tokens = 14;
    let x = Tensor::<f32>::randn(&[2, 2, 8 * tokens], 1.0, &mut rng);
    let s = Tensor::<f32>::randn(&[2, 2, 8 * tokens], 1.0, &mut rng);
    let batch = d.infer_teacher_forced(&x, &s).unwrap();
    let mut state = d.stream_reset(2);
    let mut worst = 0.0f64;
    for t in 0..tokens {
        let fb = if t == 0 { Tensor::zeros(&[2, 2, 8]) } else { window_of(&s, t - 1, 8) };
        let y = d.stream_step(&mut state, &window_of(&x, t, 8), Some(&fb)).unwrap();
        worst = worst.max(y.max_abs_diff(&window_of(&batch, t, 8)).unwrap());
    }
    assert!(worst <= 1e-5, "stream and batch differ by {worst}");
}

#[test]
fn self_feedback_streaming_matches_infer() {
    let mut d = Decoder::<f64>::new(cfg(), 4).unwrap();
    randomize(d.params_mut(), 5);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let x = Tensor::<f64>::randn(&[1, 2, 80], 1.0, &mut rng);
    let whole = d.infer(&x).unwrap();
    let mut state = d.stream_reset(1);
    for t in 0..10 {
        let y = d.stream_step(&mut state, &window_of(&x, t, 8), None).unwrap();
        assert_eq!(y.data(), window_of(&whole, t, 8).data());
        assert_eq!(state.last_output().data(), y.data());
    }
}

#[test]
fn cache_is_bounded_and_reset_clears_it() {
    let d = Decoder::<f32>::new(cfg(), 7).unwrap();
    let k = cfg().context_windows;
    let mut state = d.stream_reset(1);
    assert_eq!(state.cache_lens(), vec![0; 3]);
    let w = Tensor::full(&[1, 2, 8], 0.5f32);
    for step in 1..=k + 10 {
        d.stream_step(&mut state, &w, None).unwrap();
        assert!(state.cache_lens().iter().all(|&n| n == step.min(k)));
    }
    assert_eq!(state.position(), k + 10);
    state.reset();
    assert_eq!(state.position(), 0);
    assert_eq!(state.cache_lens(), vec![0; 3]);
    assert!(state.last_output().data().iter().all(|&v| v == 0.0));
}
