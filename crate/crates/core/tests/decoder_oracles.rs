use mlcm_noma::oracle::{ml_decode_bruteforce, successive_map_oracle};
use mlcm_noma::polar::{
    design_frozen_set, encode, sc_decode, scl_decode, CrcSpec, DesignChannelParam, LlrVector, PolarCodeSpec,
};
use mlcm_noma::BitBlock;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn n8_k4() -> PolarCodeSpec {
    let frozen = design_frozen_set(8, 4, DesignChannelParam::Bec { erasure: 0.5 }).unwrap();
    PolarCodeSpec::new(8, frozen, None).unwrap()
}

fn random_llr(rng: &mut ChaCha8Rng, n: usize) -> LlrVector {
    // mixture of noisy-codeword-like and arbitrary LLRs
    let scale = rng.random_range(0.3..4.0);
    let normal = Normal::new(0.0, scale).unwrap();
    LlrVector::new((0..n).map(|_| normal.sample(rng)).collect())
}

#[test]
fn sc_equals_successive_map_on_all_trials() {
    let spec = n8_k4();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for t in 0..10_000 {
        let llr = random_llr(&mut rng, 8);
        assert_eq!(sc_decode(&llr, &spec).unwrap(), successive_map_oracle(&llr, &spec).unwrap(), "trial {t}");
    }
}

#[test]
fn scl16_equals_ml_on_all_trials() {
    let spec = n8_k4();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for t in 0..10_000 {
        let llr = random_llr(&mut rng, 8);
        let out = scl_decode(&llr, &spec, 16).unwrap();
        assert_eq!(out.crc_passed, None);
        assert_eq!(out.bits, ml_decode_bruteforce(&llr, &spec).unwrap(), "trial {t}");
    }
}

#[test]
fn sc_matches_oracle_on_other_frozen_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    for (n, k) in [(2, 1), (4, 2), (8, 6), (16, 8)] {
        let frozen = design_frozen_set(n, k, DesignChannelParam::BiAwgn { noise_variance: 0.8 }).unwrap();
        let spec = PolarCodeSpec::new(n, frozen, None).unwrap();
        for _ in 0..300 {
            let llr = random_llr(&mut rng, n);
            assert_eq!(sc_decode(&llr, &spec).unwrap(), successive_map_oracle(&llr, &spec).unwrap());
        }
    }
}

#[test]
fn list_decoding_is_bounded_by_ml() {
    // A list as large as the codebook is exhaustive; smaller lists can only
    // end on a less likely word.
    let frozen = design_frozen_set(16, 6, DesignChannelParam::BiAwgn { noise_variance: 0.7 }).unwrap();
    let spec = PolarCodeSpec::new(16, frozen, None).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    for _ in 0..300 {
        let llr = random_llr(&mut rng, 16);
        let ml = ml_decode_bruteforce(&llr, &spec).unwrap();
        let full = scl_decode(&llr, &spec, 64).unwrap();
        assert_eq!(full.bits, ml);
        for list in [1, 2, 4] {
            let out = scl_decode(&llr, &spec, list).unwrap();
            assert!(out.path_metric >= full.path_metric - 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn noiseless_decoding_recovers_payload(
        log_n in 4usize..9,
        rate in 0.1f64..0.95,
        seed in any::<u64>(),
        list in prop::sample::select(vec![1usize, 2, 8]),
    ) {
        let n = 1 << log_n;
        let k = ((n as f64 * rate) as usize).max(9);
        let frozen = design_frozen_set(n, k, DesignChannelParam::BiAwgn { noise_variance: 0.5 }).unwrap();
        let spec = PolarCodeSpec::new(n, frozen, Some(CrcSpec::CRC8)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let payload = BitBlock::random(spec.payload_count(), &mut rng);
        let x = spec.encode_payload(&payload).unwrap();
        let out = scl_decode(&LlrVector::from_hard(&x, 10.0), &spec, list).unwrap();
        prop_assert_eq!(out.crc_passed, Some(true));
        prop_assert_eq!(encode(&out.bits, &spec).unwrap(), x);
        prop_assert_eq!(&out.bits[..spec.payload_count()], &payload[..]);
    }

    #[test]
    fn list_output_is_a_codeword(seed in any::<u64>(), list in 1usize..9) {
        let frozen = design_frozen_set(32, 12, DesignChannelParam::Bec { erasure: 0.4 }).unwrap();
        let spec = PolarCodeSpec::new(32, frozen, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let llr = random_llr(&mut rng, 32);
        let out = scl_decode(&llr, &spec, list).unwrap();
        prop_assert_eq!(out.bits.len(), 12);
        // re-encoding and inverting gives zeros on frozen positions
        let x = encode(&out.bits, &spec).unwrap();
        let u = mlcm_noma::polar::polar_transform(&x).unwrap();
        for &f in spec.frozen_set() {
            prop_assert_eq!(u[f], 0);
        }
    }
}
