#![allow(dead_code)]

use mlcm_noma::modem::LevelMapper;
use num_complex::Complex64;

/// Gauss–Hermite nodes and weights for the weight `e^{-t²}` (Newton
/// iteration on the normalized Hermite recurrence).
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    const PIM4: f64 = 0.751_125_544_464_942_5;
    let nf = n as f64;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut z = 0.0f64;
    for i in 0..n.div_ceil(2) {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-0.16667),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..200 {
            let (mut p1, mut p2) = (PIM4, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-14 {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// `I(x; y)` in bits for equiprobable constellation points on the complex
/// AWGN channel with total noise variance `nv`, by tensor Gauss–Hermite
/// quadrature over the noise.
pub fn constellation_mi_quadrature(mapper: &LevelMapper, nv: f64, nodes: usize) -> f64 {
    let (t, w) = gauss_hermite(nodes);
    let pts = mapper.points();
    let sigma = nv.sqrt();
    let mut acc = 0.0;
    for &x in pts {
        for (ti, wi) in t.iter().zip(&w) {
            for (tj, wj) in t.iter().zip(&w) {
                let noise = Complex64::new(sigma * ti, sigma * tj);
                let lse: f64 = pts
                    .iter()
                    .map(|&xp| (-((x - xp + noise).norm_sqr() - noise.norm_sqr()) / nv).exp())
                    .sum::<f64>()
                    .log2();
                acc += wi * wj * lse;
            }
        }
    }
    let m = pts.len() as f64;
    m.log2() - acc / (std::f64::consts::PI * m)
}
