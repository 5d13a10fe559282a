//! Scalar abstraction shared by the geometry, hydrodynamics and network code.

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Floating point scalar: `f32` or `f64`.
///
/// Besides the usual `num_traits` bounds, implementors provide a dense
/// row-major matrix product so the network engine can dispatch to the
/// matching BLAS kernel (system OpenBLAS with the `openblas` feature, large
/// products only; `matrixmultiply` otherwise).
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// `c = alpha * op(a) * op(b) + beta * c` for row-major operands.
    ///
    /// `op(a)` is `m x k`, `op(b)` is `k x n`, `c` is `m x n`. When a
    /// transpose flag is set the stored operand has the transposed shape.
    #[allow(clippy::too_many_arguments)]
    fn gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: &[Self],
        trans_a: bool,
        b: &[Self],
        trans_b: bool,
        beta: Self,
        c: &mut [Self],
    );

    /// Shorthand for `Self::from_f64(v).unwrap()` on literals.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable")
    }
}

/// Products smaller than this many multiply-adds skip the BLAS call overhead.
#[cfg(feature = "openblas")]
const BLAS_MIN_WORK: usize = 32 * 32 * 32;

#[cfg(feature = "openblas")]
mod cblas {
    use std::os::raw::c_int;

    pub const ROW_MAJOR: c_int = 101;
    pub const NO_TRANS: c_int = 111;
    pub const TRANS: c_int = 112;

    #[link(name = "openblas")]
    extern "C" {
        pub fn cblas_sgemm(
            order: c_int, ta: c_int, tb: c_int, m: c_int, n: c_int, k: c_int, alpha: f32,
            a: *const f32, lda: c_int, b: *const f32, ldb: c_int, beta: f32, c: *mut f32, ldc: c_int,
        );
        pub fn cblas_dgemm(
            order: c_int, ta: c_int, tb: c_int, m: c_int, n: c_int, k: c_int, alpha: f64,
            a: *const f64, lda: c_int, b: *const f64, ldb: c_int, beta: f64, c: *mut f64, ldc: c_int,
        );
    }
}

macro_rules! impl_real {
    ($t:ty, $kernel:path, $blas:ident) => {
        impl Real for $t {
            fn gemm(
                m: usize,
                k: usize,
                n: usize,
                alpha: Self,
                a: &[Self],
                trans_a: bool,
                b: &[Self],
                trans_b: bool,
                beta: Self,
                c: &mut [Self],
            ) {
                assert!(a.len() >= m * k, "gemm: lhs too short");
                assert!(b.len() >= k * n, "gemm: rhs too short");
                assert!(c.len() >= m * n, "gemm: output too short");
                if m == 0 || n == 0 {
                    return;
                }
                #[cfg(feature = "openblas")]
                if m * n * k >= BLAS_MIN_WORK && k > 0 {
                    use std::os::raw::c_int;
                    let flag = |t: bool| if t { cblas::TRANS } else { cblas::NO_TRANS };
                    let lda = if trans_a { m } else { k };
                    let ldb = if trans_b { k } else { n };
                    // SAFETY: bounds checked above; leading dimensions match
                    // dense row-major storage.
                    unsafe {
                        cblas::$blas(
                            cblas::ROW_MAJOR,
                            flag(trans_a),
                            flag(trans_b),
                            m as c_int,
                            n as c_int,
                            k as c_int,
                            alpha,
                            a.as_ptr(),
                            lda as c_int,
                            b.as_ptr(),
                            ldb as c_int,
                            beta,
                            c.as_mut_ptr(),
                            n as c_int,
                        );
                    }
                    return;
                }
                let (rsa, csa) = if trans_a { (1, m as isize) } else { (k as isize, 1) };
                let (rsb, csb) = if trans_b { (1, k as isize) } else { (n as isize, 1) };
                // SAFETY: bounds checked above; strides describe dense row-major
                // storage of the (possibly transposed) operands.
                unsafe {
                    $kernel(
                        m,
                        k,
                        n,
                        alpha,
                        a.as_ptr(),
                        rsa,
                        csa,
                        b.as_ptr(),
                        rsb,
                        csb,
                        beta,
                        c.as_mut_ptr(),
                        n as isize,
                        1,
                    );
                }
            }
        }
    };
}

impl_real!(f32, matrixmultiply::sgemm, cblas_sgemm);
impl_real!(f64, matrixmultiply::dgemm, cblas_dgemm);
