use super::subsystems::{partial_trace_mat, total_dim};
use super::{CMat, HermitianOperator};
use crate::error::{Error, Result};

const MAP_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub enum MapRepr {
    Kraus(Vec<CMat>),
    /// Choi operator Σ_ij |i⟩⟨j| ⊗ Φ(|i⟩⟨j|) on input ⊗ output.
    Choi(HermitianOperator),
}

/// Completely positive, trace non-increasing map between operator spaces.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearMapOnOperators {
    repr: MapRepr,
    input_dims: Vec<usize>,
    output_dims: Vec<usize>,
}

impl LinearMapOnOperators {
    pub fn from_kraus(kraus: Vec<CMat>, input_dims: Vec<usize>, output_dims: Vec<usize>) -> Result<Self> {
        let din = total_dim(&input_dims);
        let dout = total_dim(&output_dims);
        if kraus.is_empty() {
            return Err(Error::input("empty Kraus list"));
        }
        for (k, op) in kraus.iter().enumerate() {
            if op.nrows() != dout || op.ncols() != din {
                return Err(Error::input(format!(
                    "Kraus operator {k} is {}x{}, expected {dout}x{din}",
                    op.nrows(),
                    op.ncols()
                )));
            }
        }
        let map = LinearMapOnOperators { repr: MapRepr::Kraus(kraus), input_dims, output_dims };
        let excess = map.kraus_sum().map_spectrum(|v| v - 1.0).max_eigenvalue();
        if excess > MAP_TOL {
            return Err(Error::input(format!("map increases trace (Σ K†K exceeds identity by {excess:.3e})")));
        }
        Ok(map)
    }

    /// Accepts a PSD Choi operator and converts it to Kraus form.
    pub fn from_choi(choi: HermitianOperator, input_dims: Vec<usize>, output_dims: Vec<usize>) -> Result<Self> {
        let din = total_dim(&input_dims);
        let dout = total_dim(&output_dims);
        if choi.dim() != din * dout {
            return Err(Error::input(format!("Choi operator side {} does not match {din}x{dout}", choi.dim())));
        }
        let (vals, vecs) = choi.eigh();
        if vals[0] < -MAP_TOL {
            return Err(Error::input(format!("Choi operator is not PSD (λ_min = {:.3e})", vals[0])));
        }
        let mut kraus = Vec::new();
        for (k, &v) in vals.iter().enumerate() {
            if v <= MAP_TOL {
                continue;
            }
            let s = v.sqrt();
            let mut op = CMat::zeros(dout, din);
            for i in 0..din {
                for o in 0..dout {
                    op[(o, i)] = vecs[(i * dout + o, k)] * s;
                }
            }
            kraus.push(op);
        }
        if kraus.is_empty() {
            kraus.push(CMat::zeros(dout, din));
        }
        Self::from_kraus(kraus, input_dims, output_dims)
    }

    pub fn identity(dims: Vec<usize>) -> Self {
        let n = total_dim(&dims);
        LinearMapOnOperators { repr: MapRepr::Kraus(vec![CMat::identity(n, n)]), input_dims: dims.clone(), output_dims: dims }
    }

    /// X ↦ U X U†.
    pub fn unitary(u: CMat, dims: Vec<usize>) -> Result<Self> {
        Self::from_kraus(vec![u], dims.clone(), dims)
    }

    /// The same map stored as its Choi operator.
    pub fn to_choi_form(&self) -> Self {
        LinearMapOnOperators {
            repr: MapRepr::Choi(self.choi()),
            input_dims: self.input_dims.clone(),
            output_dims: self.output_dims.clone(),
        }
    }

    pub fn repr(&self) -> &MapRepr {
        &self.repr
    }

    pub fn input_dims(&self) -> &[usize] {
        &self.input_dims
    }

    pub fn output_dims(&self) -> &[usize] {
        &self.output_dims
    }

    pub fn kraus(&self) -> Vec<CMat> {
        match &self.repr {
            MapRepr::Kraus(k) => k.clone(),
            MapRepr::Choi(c) => {
                Self::from_choi(c.clone(), self.input_dims.clone(), self.output_dims.clone())
                    .map(|m| m.kraus())
                    .unwrap_or_default()
            }
        }
    }

    /// Σ K†K on the input space.
    pub fn kraus_sum(&self) -> HermitianOperator {
        let n = total_dim(&self.input_dims);
        let mut acc = CMat::zeros(n, n);
        for k in self.kraus() {
            acc += k.adjoint() * &k;
        }
        HermitianOperator::from_raw(self.input_dims.clone(), acc)
    }

    pub fn is_trace_preserving(&self, tol: f64) -> bool {
        self.kraus_sum().max_abs_diff(&HermitianOperator::identity(self.input_dims.clone())) <= tol
    }

    pub fn choi(&self) -> HermitianOperator {
        if let MapRepr::Choi(c) = &self.repr {
            return c.clone();
        }
        let din = total_dim(&self.input_dims);
        let dout = total_dim(&self.output_dims);
        let mut out = CMat::zeros(din * dout, din * dout);
        for k in self.kraus() {
            // vec(K) with input index first: |K⟩⟩ = Σ_i |i⟩ ⊗ K|i⟩
            let mut v = CMat::zeros(din * dout, 1);
            for i in 0..din {
                for o in 0..dout {
                    v[(i * dout + o, 0)] = k[(o, i)];
                }
            }
            out += &v * v.adjoint();
        }
        let mut dims = self.input_dims.clone();
        dims.extend_from_slice(&self.output_dims);
        HermitianOperator::from_raw(dims, out)
    }

    /// Applies the map to a general (not necessarily Hermitian) matrix.
    pub(crate) fn apply_mat(&self, x: &CMat) -> CMat {
        match &self.repr {
            MapRepr::Kraus(ks) => {
                let dout = total_dim(&self.output_dims);
                let mut acc = CMat::zeros(dout, dout);
                for k in ks {
                    acc += k * x * k.adjoint();
                }
                acc
            }
            MapRepr::Choi(c) => choi_apply(c.matrix(), x, &self.input_dims, &self.output_dims),
        }
    }
}

/// Φ(X) = tr_in[(Xᵀ ⊗ 1) J].
fn choi_apply(j: &CMat, x: &CMat, input_dims: &[usize], output_dims: &[usize]) -> CMat {
    let din = total_dim(input_dims);
    let dout = total_dim(output_dims);
    let xt_ext = super::subsystems::kron(&x.transpose(), &CMat::identity(dout, dout));
    partial_trace_mat(&(xt_ext * j), &[din, dout], &[1])
}

pub fn apply_map(m: &LinearMapOnOperators, x: &HermitianOperator) -> Result<HermitianOperator> {
    if x.dim() != total_dim(&m.input_dims) {
        return Err(Error::input(format!(
            "operator with dims {:?} does not match map input dims {:?}",
            x.dims(),
            m.input_dims
        )));
    }
    Ok(HermitianOperator::from_raw(m.output_dims.clone(), m.apply_mat(x.matrix())))
}

/// The Heisenberg-picture dual, in Kraus form. It is not trace non-increasing in
/// general, so the constructor check is bypassed.
pub fn adjoint_map(m: &LinearMapOnOperators) -> LinearMapOnOperators {
    let kraus = m.kraus().iter().map(|k| k.adjoint()).collect();
    LinearMapOnOperators {
        repr: MapRepr::Kraus(kraus),
        input_dims: m.output_dims.clone(),
        output_dims: m.input_dims.clone(),
    }
}
