use serde_json::{json, Value};

use super::{ConeProgram, ConeTag, ConstraintKind, LinOp, Sense};
use crate::io::OperatorDto;

fn op_value(op: &LinOp) -> Value {
    match op {
        LinOp::PartialTrace { dims_in, keep } => json!({"op": "partial_trace", "dims_in": dims_in, "keep": keep}),
        LinOp::IdentityExtend { dims_out, keep } => json!({"op": "identity_extend", "dims_out": dims_out, "keep": keep}),
        LinOp::PartialTranspose { subsystem } => json!({"op": "partial_transpose", "subsystem": subsystem}),
        LinOp::Permute { perm } => json!({"op": "permute", "perm": perm}),
        LinOp::Sandwich { k, dims_in, dims_out } => {
            let entries: Vec<Vec<[f64; 2]>> =
                (0..k.nrows()).map(|i| (0..k.ncols()).map(|j| [k[(i, j)].re, k[(i, j)].im]).collect()).collect();
            json!({"op": "sandwich", "dims_in": dims_in, "dims_out": dims_out, "k": entries})
        }
    }
}

pub(super) fn program_to_json(p: &ConeProgram) -> Value {
    let vars: Vec<Value> = p
        .variables()
        .iter()
        .map(|v| {
            let cone = match v.cone {
                ConeTag::Free => json!("FREE"),
                ConeTag::Psd => json!("PSD"),
                ConeTag::PsdPpt { subsystem } => json!({"PSD_AND_PPT": subsystem}),
            };
            json!({"name": v.name, "dims": v.dims, "cone": cone})
        })
        .collect();
    let cons: Vec<Value> = p
        .constraints()
        .iter()
        .map(|c| {
            let terms: Vec<Value> = c
                .terms
                .iter()
                .map(|t| {
                    json!({
                        "variable": p.variable(t.var).name,
                        "coeff": t.coeff,
                        "ops": t.ops.iter().map(op_value).collect::<Vec<_>>(),
                    })
                })
                .collect();
            let kind = match c.kind {
                ConstraintKind::Equality => "EQ",
                ConstraintKind::PsdInequality => "PSD_GEQ",
            };
            json!({"name": c.name, "kind": kind, "terms": terms, "rhs": OperatorDto::from(&c.rhs)})
        })
        .collect();
    let obj: Vec<Value> = p
        .objective()
        .iter()
        .map(|(v, c)| json!({"variable": p.variable(*v).name, "coeff": OperatorDto::from(c)}))
        .collect();
    let sense = match p.sense {
        Sense::Minimize => "MIN",
        Sense::Maximize => "MAX",
    };
    json!({
        "sense": sense,
        "variables": vars,
        "constraints": cons,
        "objective": {"terms": obj, "constant": p.objective_constant()},
    })
}
