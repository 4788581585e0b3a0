//! Gauss–Hermite quadrature and adaptive Simpson integration.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

/// Gauss–Hermite rule for `∫ f(x) e^{-x²} dx`.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    /// Builds an `n`-point rule. Nodes are the eigenvalues of the Hermite
    /// Jacobi matrix, isolated by Sturm-sequence bisection; weights are the
    /// Christoffel numbers `√π / Σ_k p_k(x)²` in orthonormal polynomials,
    /// accumulated with rescaling so extreme nodes do not overflow.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Hermite rule needs at least one node");
        let off: Vec<f64> = (1..n).map(|k| (k as f64 / 2.0).sqrt()).collect();
        // Number of eigenvalues strictly below x.
        let count_below = |x: f64| -> usize {
            let mut count = 0;
            let mut d = -x;
            for k in 0..n {
                if k > 0 {
                    let denom = if d == 0.0 { f64::MIN_POSITIVE } else { d };
                    d = -x - off[k - 1] * off[k - 1] / denom;
                }
                if d < 0.0 {
                    count += 1;
                }
            }
            count
        };
        let bound = (2.0 * n as f64).sqrt() + 1.0;
        let mut nodes = vec![0.0; n];
        for (i, node) in nodes.iter_mut().enumerate() {
            // i-th smallest eigenvalue: count_below(x) <= i for x <= root.
            let (mut lo, mut hi) = (-bound, bound);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if count_below(mid) > i {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            *node = 0.5 * (lo + hi);
        }
        // Exact symmetry.
        for i in 0..n / 2 {
            let v = 0.5 * (nodes[n - 1 - i] - nodes[i]);
            nodes[i] = -v;
            nodes[n - 1 - i] = v;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        let weights = nodes
            .iter()
            .map(|&x| {
                let (mut prev, mut cur) = (0.0_f64, 1.0_f64);
                let mut sum = 1.0_f64;
                let mut log_scale = 0.0_f64;
                for k in 0..n - 1 {
                    let next = if k == 0 {
                        x * cur / off[0]
                    } else {
                        (x * cur - off[k - 1] * prev) / off[k]
                    };
                    prev = cur;
                    cur = next;
                    sum += cur * cur;
                    if sum > 1e200 {
                        prev *= 1e-100;
                        cur *= 1e-100;
                        sum *= 1e-200;
                        log_scale += 200.0 * std::f64::consts::LN_10;
                    }
                }
                (0.5 * PI.ln() - sum.ln() - log_scale).exp()
            })
            .collect();
        Self { nodes, weights }
    }

    /// Shared rule of size `n`, built once per process.
    pub fn cached(n: usize) -> Arc<GaussHermite> {
        static RULES: OnceLock<Mutex<HashMap<usize, Arc<GaussHermite>>>> = OnceLock::new();
        let rules = RULES.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(rule) = rules.lock().expect("rule cache poisoned").get(&n) {
            return Arc::clone(rule);
        }
        let rule = Arc::new(GaussHermite::new(n));
        rules
            .lock()
            .expect("rule cache poisoned")
            .entry(n)
            .or_insert(rule)
            .clone()
    }

    /// `E[f(ξ)]` for `ξ ~ N(0, 1)`.
    pub fn expect_normal<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        let scale = PI.sqrt().recip();
        let s2 = std::f64::consts::SQRT_2;
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * scale * f(s2 * x))
            .sum()
    }

    /// Standard-normal nodes and probability weights (weights sum to 1).
    pub fn normal_points(&self) -> Vec<(f64, f64)> {
        let scale = PI.sqrt().recip();
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| (std::f64::consts::SQRT_2 * x, w * scale))
            .collect()
    }
}

/// Adaptive Simpson integration of `f` over `[a, b]` to relative tolerance
/// `rel_tol` (with a small absolute floor).
pub fn adaptive_simpson<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let tol = (rel_tol * whole.abs()).max(1e-14);
    simpson_rec(&mut f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Composite Simpson rule on `2·panels + 1` evenly spaced points.
pub fn composite_simpson<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, panels: usize) -> f64 {
    let n = 2 * panels.max(1);
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + h * i as f64);
    }
    s * h / 3.0
}
