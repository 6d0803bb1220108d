//! Row-major matrix products on flat slices, backed by `matrixmultiply`.

/// Storage order of a GEMM operand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    /// Stored as written: `rows x cols` row-major.
    N,
    /// Stored transposed: the logical `rows x cols` operand is kept `cols x rows`.
    T,
}

fn strides(op: Op, cols: usize, rows: usize) -> (isize, isize) {
    match op {
        Op::N => (cols as isize, 1),
        Op::T => (1, rows as isize),
    }
}

/// `c = alpha * op(a) * op(b) + beta * c` with logical shapes
/// `op(a): m x k`, `op(b): k x n`, `c: m x n`.
///
/// When `beta == 0` the previous contents of `c` are ignored.
#[allow(clippy::too_many_arguments)]
pub fn gemm(
    m: usize,
    k: usize,
    n: usize,
    alpha: f64,
    a: &[f64],
    op_a: Op,
    b: &[f64],
    op_b: Op,
    beta: f64,
    c: &mut [f64],
) {
    assert!(a.len() >= m * k, "gemm: lhs too short");
    assert!(b.len() >= k * n, "gemm: rhs too short");
    assert!(c.len() >= m * n, "gemm: output too short");
    if m == 0 || n == 0 {
        return;
    }
    let (rsa, csa) = strides(op_a, k, m);
    let (rsb, csb) = strides(op_b, n, k);
    // SAFETY: the assertions above bound every index the kernel touches:
    // op(a) spans m*k elements, op(b) k*n and c m*n, all with in-range strides.
    unsafe {
        matrixmultiply::dgemm(
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
