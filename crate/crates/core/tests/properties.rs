//! Invariants over randomized inputs.

use abas::dsp::{self, autocorrelate, frame_signal, inverse_filter, levinson_durbin, synthesis_filter, Window};
use abas::metrics::{l1_distance, log_spectral_distance, ssnr, LsdParams, SsnrParams};
use abas::train::{generator_loss, hinge_d_loss, AdamState};
use abas::wavio::{decode_wav, encode_wav, pcm_to_real, real_to_pcm};
use proptest::collection::vec;
use proptest::prelude::*;

/// Predictor coefficients from reflection coefficients (step-up recursion).
fn step_up(k: &[f64]) -> Vec<f64> {
    let mut a: Vec<f64> = Vec::new();
    for (m, &km) in k.iter().enumerate() {
        let prev = a.clone();
        a.push(km);
        for j in 0..m {
            a[j] = prev[j] - km * prev[m - 1 - j];
        }
    }
    a
}

fn rel_err(x: &[f64], y: &[f64]) -> f64 {
    let num: f64 = x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum();
    let den: f64 = x.iter().map(|a| a * a).sum::<f64>().max(1e-300);
    (num / den).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn synthesis_inverts_inverse_filter(
        x in vec(-1.0f64..1.0, 1..400),
        k in vec(-0.95f64..0.95, 1..17),
        h in vec(-1.0f64..1.0, 16),
    ) {
        let a = step_up(&k);
        let hist = &h[..a.len()];
        let e = inverse_filter(&x, &a, hist).unwrap();
        let y = synthesis_filter(&e, &a, hist).unwrap();
        prop_assert!(rel_err(&x, &y) <= 1e-9);
    }

    #[test]
    fn analysis_synthesis_round_trip(x in vec(-1.0f64..1.0, 17..2000), order in 1usize..=16) {
        let (track, e) = dsp::analyze(&x, order, 320).unwrap();
        let y = dsp::synthesize(&e, &track).unwrap();
        prop_assert!(rel_err(&x, &y[..x.len()]) <= 1e-9);
        prop_assert!(track.frames.iter().all(|f| f.gain_error >= 0.0 && f.coeffs.len() == order));
    }

    #[test]
    fn error_power_non_increasing_in_order(x in vec(-1.0f64..1.0, 64..400)) {
        let r = autocorrelate(&x, 16, Window::Hamming).unwrap();
        let mut last = f64::INFINITY;
        for p in 1..=16 {
            let e = levinson_durbin(&r, p).unwrap().error_power;
            prop_assert!(e <= last * (1.0 + 1e-12));
            last = e;
        }
    }

    #[test]
    fn framing_concatenates_to_padded_input(x in vec(-1.0f64..1.0, 1..1000), fl in 1usize..400) {
        let joined: Vec<f64> = frame_signal(&x, fl).unwrap().concat();
        prop_assert_eq!(joined.len(), dsp::padded_len(x.len(), fl));
        prop_assert_eq!(&joined[..x.len()], &x[..]);
        prop_assert!(joined[x.len()..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn ssnr_clamped_and_scale_invariant(
        x in vec(-1.0f32..1.0, 320..1600),
        noise in vec(-0.3f32..0.3, 1600),
        shift in -4i32..4,
    ) {
        let y: Vec<f32> = x.iter().zip(&noise).map(|(a, n)| a + n).collect();
        let s = ssnr(&x, &y, SsnrParams::default()).unwrap();
        prop_assert!((-10.0..=35.0).contains(&s));
        let c = 2f32.powi(shift);
        let xs: Vec<f32> = x.iter().map(|v| v * c).collect();
        let ys: Vec<f32> = y.iter().map(|v| v * c).collect();
        let scaled = ssnr(&xs, &ys, SsnrParams::default()).unwrap();
        prop_assert!((s - scaled).abs() <= 1e-9, "{} vs {}", s, scaled);
    }

    #[test]
    fn l1_symmetric_lsd_zero_on_self(a in vec(-1.0f32..1.0, 1..800), b in vec(-1.0f32..1.0, 800)) {
        let b = &b[..a.len()];
        prop_assert_eq!(l1_distance(&a, b).unwrap(), l1_distance(b, &a).unwrap());
        prop_assert_eq!(l1_distance(&a, &a).unwrap(), 0.0);
        prop_assert_eq!(log_spectral_distance(&a, &a, LsdParams::default()).unwrap(), 0.0);
    }

    #[test]
    fn wav_round_trip_bit_exact(pcm in vec(any::<i16>(), 0..2000)) {
        let (spec, back) = decode_wav(&encode_wav(&pcm)).unwrap();
        prop_assert_eq!(spec.sample_rate, 16000);
        prop_assert_eq!(&back, &pcm);
        prop_assert!(pcm.iter().all(|&s| real_to_pcm(pcm_to_real(s)) == s));
    }

    #[test]
    fn hinge_non_negative_and_zero_iff_margins(
        pairs in vec((-3.0f64..3.0, -3.0f64..3.0), 1..16),
    ) {
        let (real, fake): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let h = hinge_d_loss(&real, &fake).unwrap();
        prop_assert!(h >= 0.0);
        let margins = real.iter().all(|&r| r >= 1.0) && fake.iter().all(|&f| f <= -1.0);
        prop_assert_eq!(h == 0.0, margins);
    }

    #[test]
    fn generator_loss_monotone(
        l1 in 0.0f64..2.0, dl in 1e-3f64..1.0, d in -3.0f64..3.0, dd in 1e-3f64..1.0, gamma in 1e-4f64..0.9999,
    ) {
        let base = generator_loss(l1, d, gamma).unwrap();
        prop_assert!(generator_loss(l1 + dl, d, gamma).unwrap() > base);
        prop_assert!(generator_loss(l1, d + dd, gamma).unwrap() < base);
    }

    #[test]
    fn vmax_never_decreases(grads in vec(-5.0f64..5.0, 1..60)) {
        let mut opt = AdamState::<f64>::new([1], 0.0006, (0.5, 0.99), 1e-8);
        let mut theta = [0.0f64];
        let mut last = 0.0;
        for g in grads {
            opt.update(&mut [&mut theta[..]], &[&[g][..]]).unwrap();
            prop_assert!(opt.moments[0].vmax[0] >= last);
            last = opt.moments[0].vmax[0];
        }
    }

    #[test]
    fn amsgrad_descends_quadratic(lr in 1e-4f64..=0.01) {
        let mut opt = AdamState::<f64>::new([1], lr, (0.5, 0.99), 1e-8);
        let mut theta = [1.0f64];
        let mut last = f64::INFINITY;
        for step in 0..200 {
            let g = 2.0 * theta[0];
            opt.update(&mut [&mut theta[..]], &[&[g][..]]).unwrap();
            if step > 0 {
                prop_assert!(theta[0].abs() < last, "step {}: {} vs {}", step, theta[0], last);
            }
            last = theta[0].abs();
        }
    }
}
