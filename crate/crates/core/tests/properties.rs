use physec_lora::pipeline::{bdr_bits, normalize, quantize_difference, quantize_threshold, Quantizer};
use physec_lora::reconcile::{default_codes, syndrome};
use physec_lora::trace::{align, parse_trace_csv, segment, write_trace_csv, ChannelProfile, Party, ProbeSample, ProbeTrace};
use physec_lora::Bits;
use proptest::prelude::*;

fn bits(len: usize) -> impl Strategy<Value = Bits> {
    prop::collection::vec(any::<bool>(), len).prop_map(Bits::new)
}

fn rssi() -> impl Strategy<Value = Option<f64>> {
    prop_oneof![
        3 => (-140.0f64..-20.0).prop_map(|v| Some((v * 100.0).round() / 100.0)),
        1 => Just(None),
    ]
}

fn trace_strategy() -> impl Strategy<Value = ProbeTrace> {
    prop::collection::vec((1u64..4, rssi(), rssi()), 1..300).prop_map(|rows| {
        let mut counter = 0;
        let samples = rows
            .into_iter()
            .map(|(step, dev, gw)| {
                counter += step;
                ProbeSample {
                    uplink_counter: counter,
                    t: counter as f64 * 10.0,
                    rssi_dev: dev,
                    rssi_gw: gw,
                    snr_dev: None,
                    snr_gw: None,
                }
            })
            .collect();
        ProbeTrace::new(samples, 10.0).unwrap()
    })
}

fn block(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-120.0f64..-40.0, len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trace_csv_round_trips(trace in trace_strategy()) {
        let mut buf = Vec::new();
        write_trace_csv(&trace, &mut buf).unwrap();
        let back = parse_trace_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(back.samples(), trace.samples());
    }

    #[test]
    fn align_is_idempotent(trace in trace_strategy()) {
        if let Ok(once) = align(&trace) {
            let twice = align(&once).unwrap();
            prop_assert_eq!(once.samples(), twice.samples());
            prop_assert!(once.samples().iter().all(ProbeSample::is_paired));
        }
    }

    #[test]
    fn segment_count_is_floor(n in 0usize..1200, m in 1usize..200) {
        let samples: Vec<_> = (0..n as u64).map(|i| ProbeSample::paired(i, i as f64, -80.0, -81.0)).collect();
        let trace = ProbeTrace::new(samples, 1.0).unwrap();
        if n < m {
            prop_assert!(segment(&trace, m).is_err());
            return Ok(());
        }
        let blocks = segment(&trace, m).unwrap();
        prop_assert_eq!(blocks.len(), n / m);
        prop_assert!(blocks.iter().all(|(a, b)| a.len() == m && b.len() == m));
    }

    #[test]
    fn normalize_removes_positive_affine_maps(values in block(128), scale in 0.01f64..100.0, shift in -500.0f64..500.0) {
        let a = normalize(&ChannelProfile::new(values.clone(), Party::Alice, 0));
        let b = normalize(&ChannelProfile::new(values.iter().map(|v| scale * v + shift).collect(), Party::Alice, 0));
        for (x, y) in a.values.iter().zip(&b.values) {
            prop_assert!((x - y).abs() < 1e-6);
        }
    }

    #[test]
    fn quantizers_ignore_positive_affine_maps(values in block(128), scale in 0.01f64..100.0, shift in -500.0f64..500.0) {
        let p = ChannelProfile::new(values.clone(), Party::Bob, 3);
        let q = ChannelProfile::new(values.iter().map(|v| scale * v + shift).collect(), Party::Bob, 3);
        for method in Quantizer::ALL {
            prop_assert_eq!(
                method.quantize(&normalize(&p)).bits,
                method.quantize(&normalize(&q)).bits
            );
        }
    }

    #[test]
    fn quantized_length_matches_block(values in block(64)) {
        let p = ChannelProfile::new(values, Party::Alice, 0);
        prop_assert_eq!(quantize_threshold(&p).len(), 64);
        prop_assert_eq!(quantize_difference(&p).len(), 64);
    }

    #[test]
    fn bdr_is_a_normalized_metric((a, b, c) in (bits(128), bits(128), bits(128))) {
        let ab = bdr_bits(&a, &b).unwrap();
        prop_assert_eq!(bdr_bits(&a, &a).unwrap(), 0.0);
        prop_assert_eq!(ab, bdr_bits(&b, &a).unwrap());
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert!(ab <= bdr_bits(&a, &c).unwrap() + bdr_bits(&c, &b).unwrap() + 1e-12);
    }

    #[test]
    fn syndrome_is_linear(code_ix in 0usize..17, (a, b) in (bits(127), bits(127))) {
        let code = &default_codes().codes()[code_ix];
        let xor: Bits = a.iter().zip(b.iter()).map(|(x, y)| x ^ y).collect();
        let sa = syndrome(&a, code).unwrap();
        let sb = syndrome(&b, code).unwrap();
        let expected: Bits = sa.iter().zip(sb.iter()).map(|(x, y)| x ^ y).collect();
        prop_assert_eq!(syndrome(&xor, code).unwrap(), expected);
    }

    #[test]
    fn bits_hex_round_trips(len in 1usize..300, seed in any::<u64>()) {
        let b: Bits = (0..len).map(|i| (seed.rotate_left(i as u32 % 64) ^ i as u64) & 1 == 1).collect();
        prop_assert_eq!(Bits::from_hex(&b.to_hex(), len).unwrap(), b);
    }
}
