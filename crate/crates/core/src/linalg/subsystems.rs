//! Index bookkeeping for operators on tensor products of subsystems.
//!
//! Subsystem 0 is the most significant digit of a flat index, so
//! `(A ⊗ B)[i·dB + k, j·dB + l] = A[i,j]·B[k,l]`.

use super::{C64, CMat};

pub(crate) fn total_dim(dims: &[usize]) -> usize {
    dims.iter().product()
}

/// Splits a flat index into per-subsystem digits.
pub(crate) fn digits(mut index: usize, dims: &[usize], out: &mut [usize]) {
    for k in (0..dims.len()).rev() {
        out[k] = index % dims[k];
        index /= dims[k];
    }
}

pub(crate) fn flatten(digits: &[usize], dims: &[usize]) -> usize {
    let mut index = 0;
    for (d, n) in digits.iter().zip(dims) {
        index = index * n + d;
    }
    index
}

/// For every flat index, the flat index restricted to `keep` and to its complement.
fn split_indices(dims: &[usize], keep: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let n = total_dim(dims);
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !keep.contains(k)).collect();
    let keep_dims: Vec<usize> = keep.iter().map(|&k| dims[k]).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&k| dims[k]).collect();
    let mut dig = vec![0; dims.len()];
    let mut kd = vec![0; keep.len()];
    let mut td = vec![0; traced.len()];
    let mut kept_idx = Vec::with_capacity(n);
    let mut traced_idx = Vec::with_capacity(n);
    for i in 0..n {
        digits(i, dims, &mut dig);
        for (slot, &k) in kd.iter_mut().zip(keep) {
            *slot = dig[k];
        }
        for (slot, &k) in td.iter_mut().zip(&traced) {
            *slot = dig[k];
        }
        kept_idx.push(flatten(&kd, &keep_dims));
        traced_idx.push(flatten(&td, &traced_dims));
    }
    (kept_idx, traced_idx)
}

/// Partial trace over every subsystem not listed in `keep` (sorted, unique).
pub(crate) fn partial_trace_mat(x: &CMat, dims: &[usize], keep: &[usize]) -> CMat {
    let n = total_dim(dims);
    let m: usize = keep.iter().map(|&k| dims[k]).product();
    let (kept, traced) = split_indices(dims, keep);
    let mut out = CMat::zeros(m, m);
    for j in 0..n {
        for i in 0..n {
            if traced[i] == traced[j] {
                out[(kept[i], kept[j])] += x[(i, j)];
            }
        }
    }
    out
}

/// Adjoint of the partial trace: embeds `x` (on `dims[keep]`) as `x ⊗ 1` with the
/// identity placed on the complementary subsystems.
pub(crate) fn identity_extend_mat(x: &CMat, dims_out: &[usize], keep: &[usize]) -> CMat {
    let n = total_dim(dims_out);
    let (kept, traced) = split_indices(dims_out, keep);
    let mut out = CMat::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            if traced[i] == traced[j] {
                out[(i, j)] = x[(kept[i], kept[j])];
            }
        }
    }
    out
}

pub(crate) fn partial_transpose_mat(x: &CMat, dims: &[usize], sub: usize) -> CMat {
    let n = total_dim(dims);
    let stride: usize = dims[sub + 1..].iter().product();
    let d = dims[sub];
    let mut out = CMat::zeros(n, n);
    for j in 0..n {
        let dj = (j / stride) % d;
        for i in 0..n {
            let di = (i / stride) % d;
            // swap the `sub` digits between row and column
            let i2 = i - di * stride + dj * stride;
            let j2 = j - dj * stride + di * stride;
            out[(i, j)] = x[(i2, j2)];
        }
    }
    out
}

/// Reorders subsystems: output subsystem `k` is input subsystem `perm[k]`.
pub(crate) fn permute_mat(x: &CMat, dims: &[usize], perm: &[usize]) -> CMat {
    let n = total_dim(dims);
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let mut old_dig = vec![0; dims.len()];
    let mut new_dig = vec![0; dims.len()];
    let mut map = vec![0; n];
    for (inew, slot) in map.iter_mut().enumerate() {
        digits(inew, &new_dims, &mut new_dig);
        for (k, &p) in perm.iter().enumerate() {
            old_dig[p] = new_dig[k];
        }
        *slot = flatten(&old_dig, dims);
    }
    let mut out = CMat::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            out[(i, j)] = x[(map[i], map[j])];
        }
    }
    out
}

pub(crate) fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMat::zeros(ar * br, ac * bc);
    for j in 0..ac {
        for i in 0..ar {
            let s = a[(i, j)];
            if s == C64::new(0.0, 0.0) {
                continue;
            }
            for l in 0..bc {
                for k in 0..br {
                    out[(i * br + k, j * bc + l)] = s * b[(k, l)];
                }
            }
        }
    }
    out
}
