//! Matrix-vector kernels for row-major storage, with an AVX2/FMA variant
//! selected at run time on x86-64.

macro_rules! gemv_kernel {
    ($madd:path) => {
        /// `out = A x` for row-major `data` with `cols` columns.
        #[inline(always)]
        pub(super) fn gemv(data: &[f64], cols: usize, x: &[f64], out: &mut [f64]) {
            let mut rows = data.chunks_exact(cols);
            let mut outs = out.chunks_exact_mut(4);
            for o in &mut outs {
                let r0 = rows.next().unwrap();
                let r1 = rows.next().unwrap();
                let r2 = rows.next().unwrap();
                let r3 = rows.next().unwrap();
                let mut acc = [[0.0f64; 4]; 4];
                let body = cols - cols % 4;
                for ((((a0, a1), a2), a3), xv) in r0[..body]
                    .chunks_exact(4)
                    .zip(r1[..body].chunks_exact(4))
                    .zip(r2[..body].chunks_exact(4))
                    .zip(r3[..body].chunks_exact(4))
                    .zip(x[..body].chunks_exact(4))
                {
                    for l in 0..4 {
                        acc[0][l] = $madd(a0[l], xv[l], acc[0][l]);
                        acc[1][l] = $madd(a1[l], xv[l], acc[1][l]);
                        acc[2][l] = $madd(a2[l], xv[l], acc[2][l]);
                        acc[3][l] = $madd(a3[l], xv[l], acc[3][l]);
                    }
                }
                let mut k = body;
                let mut tail = [0.0f64; 4];
                while k < cols {
                    let xv = x[k];
                    tail[0] = $madd(r0[k], xv, tail[0]);
                    tail[1] = $madd(r1[k], xv, tail[1]);
                    tail[2] = $madd(r2[k], xv, tail[2]);
                    tail[3] = $madd(r3[k], xv, tail[3]);
                    k += 1;
                }
                for i in 0..4 {
                    let a = acc[i];
                    o[i] = ((a[0] + a[1]) + (a[2] + a[3])) + tail[i];
                }
            }
            for (o, row) in outs.into_remainder().iter_mut().zip(rows) {
                let mut acc = [0.0f64; 4];
                let body = cols - cols % 4;
                for (a, xv) in row[..body].chunks_exact(4).zip(x[..body].chunks_exact(4)) {
                    for l in 0..4 {
                        acc[l] = $madd(a[l], xv[l], acc[l]);
                    }
                }
                let mut k = body;
                let mut tail = 0.0;
                while k < cols {
                    tail = $madd(row[k], x[k], tail);
                    k += 1;
                }
                *o = ((acc[0] + acc[1]) + (acc[2] + acc[3])) + tail;
            }
        }

    };
}

macro_rules! gemv_t_kernel {
    ($madd:path) => {
        /// `out = Aᵀ y` for row-major `data` with `cols` columns.
        #[inline(always)]
        pub(super) fn gemv_t(data: &[f64], cols: usize, y: &[f64], out: &mut [f64]) {
            out.fill(0.0);
            let mut rows = data.chunks_exact(cols);
            let mut ys = y.chunks_exact(4);
            for yb in &mut ys {
                let r0 = rows.next().unwrap();
                let r1 = rows.next().unwrap();
                let r2 = rows.next().unwrap();
                let r3 = rows.next().unwrap();
                let (y0, y1, y2, y3) = (yb[0], yb[1], yb[2], yb[3]);
                for j in 0..cols {
                    let mut v = out[j];
                    v = $madd(y0, r0[j], v);
                    v = $madd(y1, r1[j], v);
                    v = $madd(y2, r2[j], v);
                    v = $madd(y3, r3[j], v);
                    out[j] = v;
                }
            }
            for (&yi, row) in ys.remainder().iter().zip(rows) {
                for j in 0..cols {
                    out[j] = $madd(yi, row[j], out[j]);
                }
            }
        }
    };
}

#[inline(always)]
fn mul_add_plain(a: f64, b: f64, c: f64) -> f64 {
    a * b + c
}

mod plain {
    use super::mul_add_plain;
    gemv_kernel!(mul_add_plain);
    gemv_t_kernel!(mul_add_plain);
}

#[cfg(target_arch = "x86_64")]
mod fused {
    #[inline(always)]
    fn fma(a: f64, b: f64, c: f64) -> f64 {
        a.mul_add(b, c)
    }
    gemv_t_kernel!(fma);

    use std::arch::x86_64::*;

    #[target_feature(enable = "avx2,fma")]
    unsafe fn hsum(v: __m256d) -> f64 {
        let lo = _mm256_castpd256_pd128(v);
        let hi = _mm256_extractf128_pd(v, 1);
        let s = _mm_add_pd(lo, hi);
        _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)))
    }

    /// Four rows at a time with two accumulators per row.
    #[target_feature(enable = "avx2,fma")]
    pub(super) unsafe fn gemv_avx(data: &[f64], cols: usize, x: &[f64], out: &mut [f64]) {
        let rows = out.len();
        assert!(data.len() >= rows * cols && x.len() >= cols);
        let body = cols - cols % 8;
        let dp = data.as_ptr();
        let xp = x.as_ptr();
        let mut i = 0;
        while i + 4 <= rows {
            let p = [dp.add(i * cols), dp.add((i + 1) * cols), dp.add((i + 2) * cols), dp.add((i + 3) * cols)];
            let mut a = [_mm256_setzero_pd(); 8];
            let mut k = 0;
            while k < body {
                let x0 = _mm256_loadu_pd(xp.add(k));
                let x1 = _mm256_loadu_pd(xp.add(k + 4));
                for r in 0..4 {
                    a[2 * r] = _mm256_fmadd_pd(_mm256_loadu_pd(p[r].add(k)), x0, a[2 * r]);
                    a[2 * r + 1] = _mm256_fmadd_pd(_mm256_loadu_pd(p[r].add(k + 4)), x1, a[2 * r + 1]);
                }
                k += 8;
            }
            for r in 0..4 {
                let mut v = hsum(_mm256_add_pd(a[2 * r], a[2 * r + 1]));
                for kk in body..cols {
                    v = (*p[r].add(kk)).mul_add(*xp.add(kk), v);
                }
                out[i + r] = v;
            }
            i += 4;
        }
        while i < rows {
            let p = dp.add(i * cols);
            let (mut a0, mut a1) = (_mm256_setzero_pd(), _mm256_setzero_pd());
            let mut k = 0;
            while k < body {
                a0 = _mm256_fmadd_pd(_mm256_loadu_pd(p.add(k)), _mm256_loadu_pd(xp.add(k)), a0);
                a1 = _mm256_fmadd_pd(_mm256_loadu_pd(p.add(k + 4)), _mm256_loadu_pd(xp.add(k + 4)), a1);
                k += 8;
            }
            let mut v = hsum(_mm256_add_pd(a0, a1));
            for kk in body..cols {
                v = (*p.add(kk)).mul_add(*xp.add(kk), v);
            }
            out[i] = v;
            i += 1;
        }
    }

    #[target_feature(enable = "avx2,fma")]
    pub(super) unsafe fn gemv_t_avx(data: &[f64], cols: usize, y: &[f64], out: &mut [f64]) {
        gemv_t(data, cols, y, out)
    }
}

#[cfg(target_arch = "x86_64")]
fn has_fma() -> bool {
    use std::sync::OnceLock;
    static FLAG: OnceLock<bool> = OnceLock::new();
    *FLAG.get_or_init(|| is_x86_feature_detected!("avx2") && is_x86_feature_detected!("fma"))
}

/// `out = A x`; `data.len() = out.len() · cols`, `x.len() = cols > 0`.
pub(super) fn gemv(data: &[f64], cols: usize, x: &[f64], out: &mut [f64]) {
    #[cfg(target_arch = "x86_64")]
    if has_fma() {
        // SAFETY: the CPU supports the enabled features.
        unsafe { fused::gemv_avx(data, cols, x, out) };
        return;
    }
    plain::gemv(data, cols, x, out)
}

/// `out = Aᵀ y`; `data.len() = y.len() · cols`, `out.len() = cols > 0`.
pub(super) fn gemv_t(data: &[f64], cols: usize, y: &[f64], out: &mut [f64]) {
    #[cfg(target_arch = "x86_64")]
    if has_fma() {
        // SAFETY: the CPU supports the enabled features.
        unsafe { fused::gemv_t_avx(data, cols, y, out) };
        return;
    }
    plain::gemv_t(data, cols, y, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Sampler;

    #[test]
    fn variants_agree_with_naive_loops() {
        let mut s = Sampler::new(3, 0);
        for (m, n) in [(1, 1), (3, 5), (4, 4), (7, 13), (9, 2)] {
            let a: Vec<f64> = (0..m * n).map(|_| s.normal()).collect();
            let x: Vec<f64> = (0..n).map(|_| s.normal()).collect();
            let y: Vec<f64> = (0..m).map(|_| s.normal()).collect();
            let ax: Vec<f64> = (0..m).map(|i| (0..n).map(|j| a[i * n + j] * x[j]).sum()).collect();
            let aty: Vec<f64> = (0..n).map(|j| (0..m).map(|i| a[i * n + j] * y[i]).sum()).collect();
            let (mut o1, mut o2) = (vec![0.0; m], vec![0.0; n]);
            gemv(&a, n, &x, &mut o1);
            gemv_t(&a, n, &y, &mut o2);
            let (mut p1, mut p2) = (vec![0.0; m], vec![0.0; n]);
            plain::gemv(&a, n, &x, &mut p1);
            plain::gemv_t(&a, n, &y, &mut p2);
            for (u, v) in o1.iter().chain(&p1).zip(ax.iter().chain(&ax)) {
                assert!((u - v).abs() <= 1e-13 * (1.0 + v.abs()));
            }
            for (u, v) in o2.iter().chain(&p2).zip(aty.iter().chain(&aty)) {
                assert!((u - v).abs() <= 1e-13 * (1.0 + v.abs()));
            }
        }
    }
}
