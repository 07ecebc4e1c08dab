//! Self-describing JSON container for forms, used to make reports reproducible.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{BackendDescriptor, FormSpace, PQForm};
use crate::linalg::C64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormContainer {
    pub bidegree: (usize, usize),
    pub dim: usize,
    pub rank: usize,
    pub backend: BackendDescriptor,
    /// (components, rank, samples).
    pub shape: (usize, usize, usize),
    /// Coefficients as [re, im] pairs in storage order.
    pub coefficients: Vec<[f64; 2]>,
}

pub fn to_container(form: &PQForm) -> FormContainer {
    FormContainer {
        bidegree: (form.p(), form.q()),
        dim: form.dim(),
        rank: form.rank(),
        backend: form.space().descriptor(),
        shape: (form.layout().len(), form.rank(), form.samples()),
        coefficients: form.coeffs().iter().map(|z| [z.re, z.im]).collect(),
    }
}

/// Rebuilds a form on `space`, which must match the container's backend and shape.
pub fn from_container(container: &FormContainer, space: &Arc<FormSpace>) -> Result<PQForm> {
    if container.backend != space.descriptor() || container.dim != space.dim() || container.rank != space.rank() {
        return Err(Error::ShapeMismatch("container was written for a different space".into()));
    }
    let (p, q) = container.bidegree;
    let mut form = PQForm::zeros(space, p, q)?;
    let expected = (form.layout().len(), form.rank(), form.samples());
    if container.shape != expected || container.coefficients.len() != form.coeffs().len() {
        return Err(Error::ShapeMismatch(format!("container shape {:?}, expected {:?}", container.shape, expected)));
    }
    for (dst, [re, im]) in form.coeffs_mut().iter_mut().zip(&container.coefficients) {
        *dst = C64::new(*re, *im);
    }
    Ok(form)
}

pub fn to_json(form: &PQForm) -> Result<String> {
    Ok(serde_json::to_string(&to_container(form))?)
}

pub fn from_json(json: &str, space: &Arc<FormSpace>) -> Result<PQForm> {
    let container: FormContainer = serde_json::from_str(json)?;
    from_container(&container, space)
}
