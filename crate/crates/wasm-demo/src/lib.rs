//! Browser demo on the unit disk with the weighted Bergman kernel
//! `(1 − s t̄)^{−ν}`. The plain functions return flat `f64` arrays so they
//! can be tested natively; the `#[wasm_bindgen]` wrappers only convert errors.

use kernel_connect::connections::{
    connection_form, parallel_transport, Backend, ConnectionEvaluator, CovariantDerivative, Curve, Section,
};
use kernel_connect::kernels::{bergman_disk, BasePoint, Kernel, TangentVector};
use kernel_connect::numerics::{c64, C64};
use wasm_bindgen::prelude::*;

/// Points closer to the boundary than this are left out of the field.
pub const MAX_RADIUS: f64 = 0.95;

fn kernel(nu: f64) -> Result<Kernel, String> {
    bergman_disk(nu).map_err(|e| e.to_string())
}

fn inside(z: C64) -> Result<(), String> {
    if z.norm() < MAX_RADIUS {
        Ok(())
    } else {
        Err(format!("{z} is outside |z| < {MAX_RADIUS}"))
    }
}

/// `α_s(1)` on an `n × n` grid over `[−1, 1]²`, row-major from the top-left,
/// as `[re, im]` pairs; grid points outside the disk give `NaN`.
pub fn connection_field(nu: f64, n: usize) -> Result<Vec<f64>, String> {
    let k = kernel(nu)?;
    if n < 2 {
        return Err("grid needs at least 2 points per side".into());
    }
    let one = TangentVector::scalar(c64(1.0, 0.0));
    let mut out = Vec::with_capacity(2 * n * n);
    for row in 0..n {
        for col in 0..n {
            let x = -1.0 + 2.0 * col as f64 / (n - 1) as f64;
            let y = 1.0 - 2.0 * row as f64 / (n - 1) as f64;
            let s = c64(x, y);
            if s.norm() >= MAX_RADIUS {
                out.extend([f64::NAN, f64::NAN]);
                continue;
            }
            let a = connection_form(&k, &BasePoint::scalar(s))
                .and_then(|f| f.apply(&one))
                .map_err(|e| e.to_string())?;
            out.extend([a[(0, 0)].re, a[(0, 0)].im]);
        }
    }
    Ok(out)
}

/// Transport of `v₀ = 1` along the segment from 0 to `end`, sampled at
/// `samples + 1` evenly spaced times: `[x, y, re v, im v]` per sample.
pub fn transport_path(nu: f64, end_re: f64, end_im: f64, samples: usize) -> Result<Vec<f64>, String> {
    let k = kernel(nu)?;
    let end = c64(end_re, end_im);
    inside(end)?;
    let samples = samples.max(1);
    let mut out = Vec::with_capacity(4 * (samples + 1));
    out.extend([0.0, 0.0, 1.0, 0.0]);
    for i in 1..=samples {
        let t = i as f64 / samples as f64;
        let p = end * t;
        let gamma = Curve::line(vec![c64(0.0, 0.0)], vec![p]).map_err(|e| e.to_string())?;
        let v = parallel_transport(&k, &gamma, &[c64(1.0, 0.0)], 16 * i).map_err(|e| e.to_string())?;
        out.extend([p.re, p.im, v[0].re, v[0].im]);
    }
    Ok(out)
}

/// `∇_X σ` for `σ(z) = (1 + z)² − i z̄ z` from the closed, direct and sampled
/// backends as `[re, im]` pairs in that order, followed by the largest
/// pairwise distance.
pub fn backend_agreement(nu: f64, s_re: f64, s_im: f64, x_re: f64, x_im: f64) -> Result<Vec<f64>, String> {
    let k = kernel(nu)?;
    let s = c64(s_re, s_im);
    inside(s)?;
    let sigma = Section::new(|p| {
        let z = p.as_vector().expect("disk points are vectors")[0];
        let w = c64(1.0, 0.0) + z;
        Ok(vec![w * w - c64(0.0, 1.0) * z.conj() * z])
    });
    let (p, x) = (BasePoint::scalar(s), TangentVector::scalar(c64(x_re, x_im)));
    let mut values = Vec::new();
    for backend in [Backend::ClosedForm, Backend::Direct, Backend::Sampled] {
        let d = ConnectionEvaluator::new(&k, backend)
            .covariant_derivative(&sigma, &p, &x)
            .map_err(|e| e.to_string())?;
        values.push(d[0]);
    }
    let mut gap = 0.0f64;
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            gap = gap.max((values[i] - values[j]).norm());
        }
    }
    let mut out: Vec<f64> = values.iter().flat_map(|v| [v.re, v.im]).collect();
    out.push(gap);
    Ok(out)
}

#[wasm_bindgen(js_name = connectionField)]
pub fn connection_field_js(nu: f64, n: usize) -> Result<Vec<f64>, JsError> {
    connection_field(nu, n).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = transportPath)]
pub fn transport_path_js(nu: f64, end_re: f64, end_im: f64, samples: usize) -> Result<Vec<f64>, JsError> {
    transport_path(nu, end_re, end_im, samples).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = backendAgreement)]
pub fn backend_agreement_js(nu: f64, s_re: f64, s_im: f64, x_re: f64, x_im: f64) -> Result<Vec<f64>, JsError> {
    backend_agreement(nu, s_re, s_im, x_re, x_im).map_err(|e| JsError::new(&e))
}
