//! Gauss-Legendre rules and composite variants.

use std::f64::consts::PI;

/// Nodes (ascending) and weights of the n-point Gauss-Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Gauss rule mapped to [lo, hi].
pub fn gauss_on(lo: f64, hi: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let c = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    (x.iter().map(|t| c + h * t).collect(), w.iter().map(|v| h * v).collect())
}

/// Composite Gauss rule over consecutive breakpoints.
pub fn composite(breaks: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let mut nodes = Vec::with_capacity(n * breaks.len());
    let mut weights = Vec::with_capacity(n * breaks.len());
    for pair in breaks.windows(2) {
        let c = 0.5 * (pair[0] + pair[1]);
        let h = 0.5 * (pair[1] - pair[0]);
        for (t, v) in x.iter().zip(&w) {
            nodes.push(c + h * t);
            weights.push(h * v);
        }
    }
    (nodes, weights)
}

/// Breakpoints from `a` to `b` refined geometrically (ratio 1/4) toward both ends
/// down to `finest`, with interior panels of length at most `panel`.
pub fn graded_breaks(a: f64, b: f64, panel: f64, finest: f64) -> Vec<f64> {
    let len = b - a;
    let d = (0.25f64).min(len / 4.0);
    let mut offs = Vec::new();
    let mut t = d;
    while t > finest {
        offs.push(t);
        t *= 0.25;
    }
    let mut pts = vec![a];
    for &o in offs.iter().rev() {
        pts.push(a + o);
    }
    let inner = ((len - 2.0 * d) / panel).ceil().max(1.0) as usize;
    for k in 1..inner {
        pts.push(a + d + (len - 2.0 * d) * k as f64 / inner as f64);
    }
    for &o in &offs {
        pts.push(b - o);
    }
    pts.push(b);
    pts.dedup_by(|x, y| (*x - *y).abs() < 1e-300);
    pts
}

/// Barycentric weights for Lagrange interpolation on arbitrary distinct nodes.
pub fn barycentric_weights(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut w = vec![1.0; n];
    for j in 0..n {
        for k in 0..n {
            if k != j {
                w[j] /= nodes[j] - nodes[k];
            }
        }
    }
    // rescale to avoid under/overflow for large n
    let s = w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    w.iter().map(|v| v / s).collect()
}

/// Evaluate the interpolant through (nodes, values) at `x`.
pub fn barycentric_eval<T>(nodes: &[f64], bw: &[f64], values: &[T], x: f64) -> T
where
    T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T> + std::ops::Div<f64, Output = T>,
{
    let mut num: Option<T> = None;
    let mut den = 0.0;
    for j in 0..nodes.len() {
        let d = x - nodes[j];
        if d == 0.0 {
            return values[j];
        }
        let c = bw[j] / d;
        num = Some(match num {
            None => values[j] * c,
            Some(acc) => acc + values[j] * c,
        });
        den += c;
    }
    num.expect("empty node set") / den
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_and_symmetry() {
        for n in [1, 2, 5, 16, 64, 200] {
            let (x, w) = gauss_legendre(n);
            let s: f64 = w.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n={n} sum={s}");
            for i in 0..n {
                assert!((x[i] + x[n - 1 - i]).abs() < 1e-15);
            }
            assert!(x.windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn exact_for_polynomials() {
        let (x, w) = gauss_legendre(10);
        for k in 0..20 {
            let q: f64 = x.iter().zip(&w).map(|(t, v)| v * t.powi(k)).sum();
            let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-14, "k={k}");
        }
    }

    #[test]
    fn graded_covers_interval() {
        let b = graded_breaks(1.0, 5.0, 0.5, 1e-8);
        assert_eq!(b[0], 1.0);
        assert_eq!(*b.last().unwrap(), 5.0);
        assert!(b.windows(2).all(|p| p[0] < p[1]));
        let (x, w) = composite(&b, 8);
        let s: f64 = x.iter().zip(&w).map(|(t, v)| v * (t - 1.0).sqrt()).sum();
        assert!((s - 2.0 / 3.0 * 8.0).abs() < 1e-10);
    }

    #[test]
    fn barycentric_reproduces_polynomial() {
        let (x, _) = gauss_legendre(24);
        let bw = barycentric_weights(&x);
        let v: Vec<f64> = x.iter().map(|t| t.powi(9) - 3.0 * t).collect();
        let y = barycentric_eval(&x, &bw, &v, 0.3141);
        assert!((y - (0.3141f64.powi(9) - 3.0 * 0.3141)).abs() < 1e-13);
    }
}
