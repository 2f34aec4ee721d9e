use super::tensor::Tensor;

pub fn relu(x: &Tensor) -> Tensor {
    let mut out = x.clone();
    for v in out.data_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    out
}

/// Gradient of relu given the forward *input*; the subgradient at exactly 0
/// is taken as 0.
pub fn relu_backward(input: &Tensor, grad_out: &Tensor) -> Tensor {
    debug_assert_eq!(input.shape(), grad_out.shape());
    let mut gx = grad_out.clone();
    for (g, x) in gx.data_mut().iter_mut().zip(input.data()) {
        if *x <= 0.0 {
            *g = 0.0;
        }
    }
    gx
}

pub fn sigmoid_scalar(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub fn sigmoid(x: &Tensor) -> Tensor {
    let mut out = x.clone();
    for v in out.data_mut() {
        *v = sigmoid_scalar(*v);
    }
    out
}

/// Gradient of sigmoid given the forward *output* y = sigmoid(z).
pub fn sigmoid_backward(output: &Tensor, grad_out: &Tensor) -> Tensor {
    debug_assert_eq!(output.shape(), grad_out.shape());
    let mut gx = grad_out.clone();
    for (g, y) in gx.data_mut().iter_mut().zip(output.data()) {
        *g *= y * (1.0 - y);
    }
    gx
}

/// Numerically stable log(1 + exp(x)); -log sigmoid(z) == softplus(-z).
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}
