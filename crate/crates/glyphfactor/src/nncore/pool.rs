use crate::{GlyphError, Result};

use super::tensor::Tensor;

/// Anti-aliased 2x downsampling: depthwise convolution with the fixed kernel
/// [[1/4, 1/4], [1/4, 1/4]] at stride 2, i.e. each output cell is the mean of
/// a disjoint 2x2 input tile.
pub fn blurpool2x2(x: &Tensor) -> Result<Tensor> {
    let (c, h, w) = x.dims3()?;
    if h % 2 != 0 || w % 2 != 0 {
        return Err(GlyphError::shape(
            "blurpool2x2",
            "even spatial dimensions",
            format!("{h}x{w}"),
        ));
    }
    let (oh, ow) = (h / 2, w / 2);
    let mut out = vec![0.0; c * oh * ow];
    for ch in 0..c {
        let x_c = &x.data()[ch * h * w..(ch + 1) * h * w];
        let out_c = &mut out[ch * oh * ow..(ch + 1) * oh * ow];
        for oy in 0..oh {
            let r0 = &x_c[(2 * oy) * w..(2 * oy + 1) * w];
            let r1 = &x_c[(2 * oy + 1) * w..(2 * oy + 2) * w];
            for ox in 0..ow {
                out_c[oy * ow + ox] =
                    0.25 * (r0[2 * ox] + r0[2 * ox + 1] + r1[2 * ox] + r1[2 * ox + 1]);
            }
        }
    }
    Tensor::from_vec(&[c, oh, ow], out)
}

/// Backward pass: each upstream gradient cell distributes a quarter of itself
/// to the four cells of its input tile.
pub fn blurpool2x2_backward(input_shape: &[usize], grad_out: &Tensor) -> Result<Tensor> {
    let (c, h, w) = match input_shape {
        [c, h, w] => (*c, *h, *w),
        other => {
            return Err(GlyphError::shape(
                "blurpool2x2_backward",
                "rank-3 input shape",
                format!("{other:?}"),
            ))
        }
    };
    let (oh, ow) = (h / 2, w / 2);
    if grad_out.shape() != [c, oh, ow] {
        return Err(GlyphError::shape(
            "blurpool2x2_backward",
            format!("({c}, {oh}, {ow})"),
            format!("{:?}", grad_out.shape()),
        ));
    }
    let mut gx = vec![0.0; c * h * w];
    for ch in 0..c {
        let go_c = &grad_out.data()[ch * oh * ow..(ch + 1) * oh * ow];
        let gx_c = &mut gx[ch * h * w..(ch + 1) * h * w];
        for oy in 0..oh {
            for ox in 0..ow {
                let g = 0.25 * go_c[oy * ow + ox];
                gx_c[(2 * oy) * w + 2 * ox] = g;
                gx_c[(2 * oy) * w + 2 * ox + 1] = g;
                gx_c[(2 * oy + 1) * w + 2 * ox] = g;
                gx_c[(2 * oy + 1) * w + 2 * ox + 1] = g;
            }
        }
    }
    Tensor::from_vec(&[c, h, w], gx)
}
