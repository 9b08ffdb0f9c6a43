//! Bessel functions of integer order.

/// `J_0(x), ..., J_kmax(x)` by Miller's backward recurrence with the
/// normalization `J_0 + 2 sum_k J_{2k} = 1`.
pub fn bessel_j_sequence(x: f64, kmax: usize) -> Vec<f64> {
    let mut out = vec![0.0; kmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let ax = x.abs();
    let start = (kmax.max(ax.ceil() as usize) + 20 + (10.0 * ax.cbrt()) as usize) | 1;
    let start = start + 1; // even
    let mut jp1 = 0.0f64;
    let mut j = 1e-300f64;
    let mut norm = 0.0f64;
    let two_over_x = 2.0 / ax;
    for k in (1..=start).rev() {
        let jm1 = k as f64 * two_over_x * j - jp1;
        jp1 = j;
        j = jm1;
        let idx = k - 1;
        if idx <= kmax {
            out[idx] = j;
        }
        if idx % 2 == 0 && idx > 0 {
            norm += 2.0 * j;
        }
        if j.abs() > 1e250 {
            j *= 1e-250;
            jp1 *= 1e-250;
            norm *= 1e-250;
            for v in out.iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    norm += j;
    for v in out.iter_mut() {
        *v /= norm;
    }
    if x < 0.0 {
        for (k, v) in out.iter_mut().enumerate() {
            if k % 2 == 1 {
                *v = -*v;
            }
        }
    }
    out
}

/// Order at which `|J_k(x)|` has fallen far below double precision.
pub fn bessel_cutoff(x: f64) -> usize {
    let ax = x.abs();
    (ax + 12.0 * ax.cbrt() + 30.0).ceil() as usize
}
