use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Result};
use crate::modem::SymbolFrame;

use super::ScmaGraph;

/// Block-fading coefficients (one draw per frame) and noise level.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// `h[f][u]`, zero wherever the graph has no edge.
    pub h: Vec<Vec<Complex64>>,
    /// Total complex noise variance σ².
    pub noise_variance: f64,
}

/// Sample of CN(0, variance).
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(s * re, s * im)
}

pub fn sample_channel_with<R: Rng + ?Sized>(
    graph: &ScmaGraph,
    noise_variance: f64,
    rng: &mut R,
) -> Result<ChannelRealization> {
    if !(noise_variance > 0.0 && noise_variance.is_finite()) {
        return Err(invalid(format!("noise variance {noise_variance} must be positive")));
    }
    let h = (0..graph.subcarriers())
        .map(|f| {
            (0..graph.users())
                .map(|u| if graph.has_edge(f, u) { complex_normal(rng, 1.0) } else { Complex64::new(0.0, 0.0) })
                .collect()
        })
        .collect();
    Ok(ChannelRealization { h, noise_variance })
}

/// i.i.d. CN(0, 1) coefficients on the graph edges, seeded.
pub fn sample_channel(graph: &ScmaGraph, noise_variance: f64, seed: u64) -> Result<ChannelRealization> {
    sample_channel_with(graph, noise_variance, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// `Y[f][t] = Σ_u h[f][u] x_u(t) + w`, each user's symbol repeated on all of
/// its subcarriers, `w ~ CN(0, σ²)`.
pub fn transmit<R: Rng + ?Sized>(
    frames: &[SymbolFrame],
    graph: &ScmaGraph,
    channel: &ChannelRealization,
    noise_rng: &mut R,
) -> Result<Vec<Vec<Complex64>>> {
    let mut y = transmit_noiseless(frames, graph, channel)?;
    for row in y.iter_mut() {
        for v in row.iter_mut() {
            *v += complex_normal(noise_rng, channel.noise_variance);
        }
    }
    Ok(y)
}

/// Superposition without noise.
pub fn transmit_noiseless(
    frames: &[SymbolFrame],
    graph: &ScmaGraph,
    channel: &ChannelRealization,
) -> Result<Vec<Vec<Complex64>>> {
    if frames.len() != graph.users() {
        return Err(invalid(format!("{} frames for {} users", frames.len(), graph.users())));
    }
    if channel.h.len() != graph.subcarriers() || channel.h.iter().any(|r| r.len() != graph.users()) {
        return Err(invalid("channel matrix does not match graph dimensions"));
    }
    let n = frames[0].len();
    if frames.iter().any(|f| f.len() != n) {
        return Err(invalid("user frames of unequal length"));
    }
    Ok((0..graph.subcarriers())
        .map(|f| {
            (0..n).map(|t| graph.users_on(f).iter().map(|&u| channel.h[f][u] * frames[u].symbols[t]).sum()).collect()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(symbols: Vec<Complex64>) -> SymbolFrame {
        let labels = vec![0; symbols.len()];
        SymbolFrame { symbols, labels }
    }

    #[test]
    fn support_and_determinism() {
        let g = ScmaGraph::bundled_default();
        let a = sample_channel(&g, 0.1, 17).unwrap();
        let b = sample_channel(&g, 0.1, 17).unwrap();
        assert_eq!(a, b);
        for f in 0..4 {
            for u in 0..6 {
                assert_eq!(a.h[f][u] == Complex64::new(0.0, 0.0), !g.has_edge(f, u));
            }
        }
        assert!(sample_channel(&g, 0.0, 1).is_err());
    }

    #[test]
    fn unit_edge_variance() {
        let g = ScmaGraph::bundled_default();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let draws = 100_000;
        let mut acc = vec![vec![0.0; 6]; 4];
        let mut acc2 = vec![vec![0.0; 6]; 4];
        for _ in 0..draws {
            let ch = sample_channel_with(&g, 1.0, &mut rng).unwrap();
            for f in 0..4 {
                for u in 0..6 {
                    let p = ch.h[f][u].norm_sqr();
                    acc[f][u] += p;
                    acc2[f][u] += p * p;
                }
            }
        }
        for f in 0..4 {
            for &u in g.users_on(f) {
                let mean = acc[f][u] / draws as f64;
                let var = acc2[f][u] / draws as f64 - mean * mean;
                let se = (var / draws as f64).sqrt();
                assert!((mean - 1.0).abs() < 3.0 * se.max(1e-3), "edge ({f},{u}) mean {mean}");
            }
        }
    }

    #[test]
    fn single_user_noiseless_row() {
        let g = ScmaGraph::new(vec![vec![1]]).unwrap();
        let ch = ChannelRealization { h: vec![vec![Complex64::new(1.0, 0.0)]], noise_variance: 1e-30 };
        let x = vec![Complex64::new(0.3, -0.7), Complex64::new(-1.0, 0.2)];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let y = transmit(&[frame(x.clone())], &g, &ch, &mut rng).unwrap();
        for (a, b) in y[0].iter().zip(&x) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn superposition_matches_dense_product() {
        let g = ScmaGraph::bundled_default();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ch = sample_channel_with(&g, 0.5, &mut rng).unwrap();
        let n = 7;
        let frames: Vec<SymbolFrame> =
            (0..6).map(|_| frame((0..n).map(|_| complex_normal(&mut rng, 1.0)).collect())).collect();
        let y = transmit_noiseless(&frames, &g, &ch).unwrap();
        for f in 0..4 {
            for t in 0..n {
                let mut dense = Complex64::new(0.0, 0.0);
                for u in 0..6 {
                    dense += ch.h[f][u] * frames[u].symbols[t];
                }
                assert!((y[f][t] - dense).norm() < 1e-12);
            }
        }
        assert!(transmit_noiseless(&frames[..5], &g, &ch).is_err());
    }
}
