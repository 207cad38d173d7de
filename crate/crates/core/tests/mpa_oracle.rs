use mlcm_noma::modem::LevelMapper;
use mlcm_noma::oracle::two_user_stage_llrs;
use mlcm_noma::scma::{complex_normal, mpa_detect_stage, ChannelRealization, DetectorConfig, ScmaGraph, StageContext};
use mlcm_noma::BitBlock;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One subcarrier, two users, 2 bit levels: single-pass MPA is exact
/// marginalization, so it must match the explicit double loop.
#[test]
fn single_node_matches_exhaustive_marginalization() {
    let mapper = LevelMapper::new(2).unwrap();
    let graph = ScmaGraph::new(vec![vec![1, 1]]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let n = 4;
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let h = [complex_normal(&mut rng, 1.0), complex_normal(&mut rng, 1.0)];
        let nv = 10f64.powf(rng.random_range(-1.5..0.5));
        let ch = ChannelRealization { h: vec![h.to_vec()], noise_variance: nv };
        let labels: Vec<[usize; 2]> = (0..n).map(|_| [rng.random_range(0..4), rng.random_range(0..4)]).collect();
        let y: Vec<_> = labels
            .iter()
            .map(|l| h[0] * mapper.point(l[0]) + h[1] * mapper.point(l[1]) + complex_normal(&mut rng, nv))
            .collect();
        for stage in 0..2 {
            let known: Vec<Vec<BitBlock>> = (0..2)
                .map(|u| (0..stage).map(|lv| labels.iter().map(|l| ((l[u] >> lv) & 1) as u8).collect()).collect())
                .collect();
            let ctx = StageContext::new(stage, known);
            let got = mpa_detect_stage(
                std::slice::from_ref(&y),
                &ch,
                &graph,
                &mapper,
                &ctx,
                1,
                &DetectorConfig::default(),
                None,
            )
            .unwrap();
            for t in 0..n {
                let pre: Vec<Vec<u8>> =
                    (0..2).map(|u| (0..stage).map(|lv| ((labels[t][u] >> lv) & 1) as u8).collect()).collect();
                let want = two_user_stage_llrs(y[t], h, stage, [&pre[0], &pre[1]], &mapper, nv).unwrap();
                for u in 0..2 {
                    worst = worst.max((got[u].as_slice()[t] - want[u]).abs());
                }
            }
        }
    }
    assert!(worst <= 1e-9, "max deviation {worst:e}");
}

#[test]
fn known_stage_bits_are_saturated() {
    let mapper = LevelMapper::new(2).unwrap();
    let graph = ScmaGraph::new(vec![vec![1, 1]]).unwrap();
    let ch = ChannelRealization {
        h: vec![vec![complex_normal(&mut ChaCha8Rng::seed_from_u64(1), 1.0); 2]],
        noise_variance: 0.3,
    };
    let y = vec![vec![num_complex::Complex64::new(0.1, -0.2); 2]];
    let ctx = StageContext::new(0, vec![vec![BitBlock::from(vec![1, 0])], vec![]]);
    let llr = mpa_detect_stage(&y, &ch, &graph, &mapper, &ctx, 1, &DetectorConfig::default(), None).unwrap();
    assert_eq!(llr[0].as_slice(), &[-40.0, 40.0]);
    assert!(llr[1].as_slice().iter().all(|v| v.abs() < 40.0));
}
