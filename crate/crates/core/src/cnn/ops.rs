//! Forward pass and reverse-mode gradients.

use ndarray::{Array2, Array3};

use super::{Gradients, Model, N_CLASSES};
use crate::data::Window;
use crate::error::{Error, Result};

/// Per-window, per-channel standardization to zero mean and unit variance
/// (population variance, floored at 1e-8).
pub fn normalize_window(window: &Array2<f32>) -> Array2<f64> {
    let (c, t) = window.dim();
    let mut out = Array2::zeros((c, t));
    for ch in 0..c {
        let row = window.row(ch);
        let mean = row.iter().map(|&v| v as f64).sum::<f64>() / t as f64;
        let var = row
            .iter()
            .map(|&v| {
                let d = v as f64 - mean;
                d * d
            })
            .sum::<f64>()
            / t as f64;
        let inv_std = 1.0 / var.max(1e-8).sqrt();
        for (i, &v) in row.iter().enumerate() {
            out[[ch, i]] = (v as f64 - mean) * inv_std;
        }
    }
    out
}

/// Assemble normalized windows into a `[batch, channels, time]` tensor with
/// imagery label indices.
pub fn windows_to_batch(windows: &[&Window]) -> Result<(Array3<f64>, Vec<usize>)> {
    let first = windows
        .first()
        .ok_or_else(|| Error::invalid("empty window batch"))?;
    let (c, t) = first.data.dim();
    let mut batch = Array3::zeros((windows.len(), c, t));
    let mut labels = Vec::with_capacity(windows.len());
    for (b, w) in windows.iter().enumerate() {
        if w.data.dim() != (c, t) {
            return Err(Error::ShapeMismatch("windows differ in shape".into()));
        }
        let label = w
            .label
            .imagery_index()
            .ok_or_else(|| Error::invalid("rest windows cannot be decoded"))?;
        labels.push(label);
        let normalized = normalize_window(&w.data);
        for ch in 0..c {
            for i in 0..t {
                batch[[b, ch, i]] = normalized[[ch, i]];
            }
        }
    }
    Ok((batch, labels))
}

/// Intermediate activations kept for the backward pass.
struct ForwardCache {
    /// Block inputs, `[B, C_in, T_in]` per block.
    inputs: Vec<Array3<f64>>,
    /// Pre-activation conv outputs, `[B, C_out, T_conv]` per block.
    pre_activations: Vec<Array3<f64>>,
    /// Globally averaged features, `[B, F]`.
    pooled_features: Array2<f64>,
    /// Softmax outputs, `[B, 4]`.
    probs: Array2<f64>,
}

fn forward_full(model: &Model, batch: &Array3<f64>) -> Result<ForwardCache> {
    let (n_batch, c, t) = batch.dim();
    if c != model.arch.input_channels || t != model.arch.input_samples {
        return Err(Error::ShapeMismatch(format!(
            "batch is {c} x {t}, architecture expects {} x {}",
            model.arch.input_channels, model.arch.input_samples
        )));
    }
    let trace = model.arch.time_trace();
    let mut inputs = Vec::with_capacity(model.blocks.len());
    let mut pre_activations = Vec::with_capacity(model.blocks.len());
    let mut x = batch.clone();

    for (idx, (layer, &(t_conv, t_pool))) in model.blocks.iter().zip(&trace).enumerate() {
        let mut z = Array3::zeros((n_batch, layer.out_features, t_conv));
        for b in 0..n_batch {
            for o in 0..layer.out_features {
                let bias = layer.bias[o];
                let z_row = z
                    .slice_mut(ndarray::s![b, o, ..])
                    .into_slice()
                    .expect("contiguous");
                z_row.fill(bias);
                for i in 0..layer.in_features {
                    let x_row = x.slice(ndarray::s![b, i, ..]);
                    let x_row = x_row.as_slice().expect("contiguous");
                    for k in 0..layer.kernel_len {
                        let w = layer.weights[layer.weight_index(o, i, k)];
                        if w == 0.0 {
                            continue;
                        }
                        for (zt, &xv) in z_row.iter_mut().zip(&x_row[k..k + t_conv]) {
                            *zt += w * xv;
                        }
                    }
                }
            }
        }
        // ReLU then non-overlapping average pooling.
        let p = model.arch.blocks[idx].pool_len;
        let mut pooled = Array3::zeros((n_batch, layer.out_features, t_pool));
        for b in 0..n_batch {
            for o in 0..layer.out_features {
                for u in 0..t_pool {
                    let mut acc = 0.0;
                    for j in 0..p {
                        acc += z[[b, o, u * p + j]].max(0.0);
                    }
                    pooled[[b, o, u]] = acc / p as f64;
                }
            }
        }
        inputs.push(x);
        pre_activations.push(z);
        x = pooled;
    }

    // Global average over time, affine head, softmax.
    let features = model.head.in_features;
    let t_last = x.dim().2;
    let mut g = Array2::zeros((n_batch, features));
    for b in 0..n_batch {
        for f in 0..features {
            let mut acc = 0.0;
            for u in 0..t_last {
                acc += x[[b, f, u]];
            }
            g[[b, f]] = acc / t_last as f64;
        }
    }
    let mut probs = Array2::zeros((n_batch, N_CLASSES));
    for b in 0..n_batch {
        let mut logits = [0.0; N_CLASSES];
        for (cls, logit) in logits.iter_mut().enumerate() {
            let mut acc = model.head.bias[cls];
            for f in 0..features {
                acc += model.head.weights[cls * features + f] * g[[b, f]];
            }
            *logit = acc;
        }
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for (cls, &logit) in logits.iter().enumerate() {
            let e = (logit - max).exp();
            probs[[b, cls]] = e;
            sum += e;
        }
        for cls in 0..N_CLASSES {
            probs[[b, cls]] /= sum;
        }
    }

    Ok(ForwardCache { inputs, pre_activations, pooled_features: g, probs })
}

/// Class probabilities for a batch; each row sums to 1.
pub fn forward(model: &Model, batch: &Array3<f64>) -> Result<Array2<f64>> {
    Ok(forward_full(model, batch)?.probs)
}

/// Mean cross-entropy over the batch and gradients for every parameter,
/// in canonical parameter order.
pub fn loss_and_grad(
    model: &Model,
    batch: &Array3<f64>,
    labels: &[usize],
) -> Result<(f64, Gradients)> {
    let n_batch = batch.dim().0;
    if labels.len() != n_batch {
        return Err(Error::ShapeMismatch(format!(
            "{} labels for a batch of {n_batch}",
            labels.len()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= N_CLASSES) {
        return Err(Error::invalid(format!("label {bad} outside 0..{N_CLASSES}")));
    }
    let cache = forward_full(model, batch)?;
    let mut grads = Gradients::zeros_like(model);

    let mut loss = 0.0;
    for (b, &y) in labels.iter().enumerate() {
        loss -= cache.probs[[b, y]].max(f64::MIN_POSITIVE).ln();
    }
    loss /= n_batch as f64;

    // d loss / d logits = (probs - onehot) / B
    let features = model.head.in_features;
    let mut dlogits = Array2::zeros((n_batch, N_CLASSES));
    for b in 0..n_batch {
        for cls in 0..N_CLASSES {
            let indicator = if labels[b] == cls { 1.0 } else { 0.0 };
            dlogits[[b, cls]] = (cache.probs[[b, cls]] - indicator) / n_batch as f64;
        }
    }

    // Head parameters and input gradient.
    let n_tensors = grads.tensors.len();
    {
        let dhead_b = &mut grads.tensors[n_tensors - 1];
        for b in 0..n_batch {
            for cls in 0..N_CLASSES {
                dhead_b[cls] += dlogits[[b, cls]];
            }
        }
    }
    {
        let dhead_w = &mut grads.tensors[n_tensors - 2];
        for b in 0..n_batch {
            for cls in 0..N_CLASSES {
                let d = dlogits[[b, cls]];
                for f in 0..features {
                    dhead_w[cls * features + f] += d * cache.pooled_features[[b, f]];
                }
            }
        }
    }
    let mut dg = Array2::zeros((n_batch, features));
    for b in 0..n_batch {
        for f in 0..features {
            let mut acc = 0.0;
            for cls in 0..N_CLASSES {
                acc += dlogits[[b, cls]] * model.head.weights[cls * features + f];
            }
            dg[[b, f]] = acc;
        }
    }

    // Global average pool backward into the last block's pooled output.
    let trace = model.arch.time_trace();
    let t_last = trace.last().expect("3 blocks").1;
    let last_features = model.head.in_features;
    let mut d_pooled = Array3::zeros((n_batch, last_features, t_last));
    for b in 0..n_batch {
        for f in 0..last_features {
            let share = dg[[b, f]] / t_last as f64;
            for u in 0..t_last {
                d_pooled[[b, f, u]] = share;
            }
        }
    }

    // Blocks in reverse.
    for (idx, layer) in model.blocks.iter().enumerate().rev() {
        let (t_conv, t_pool) = trace[idx];
        let p = model.arch.blocks[idx].pool_len;
        let z = &cache.pre_activations[idx];
        let x_in = &cache.inputs[idx];
        let t_in = x_in.dim().2;

        // Unpool (mean) and gate through the ReLU.
        let mut dz = Array3::zeros((n_batch, layer.out_features, t_conv));
        for b in 0..n_batch {
            for o in 0..layer.out_features {
                for u in 0..t_pool {
                    let share = d_pooled[[b, o, u]] / p as f64;
                    for j in 0..p {
                        let tt = u * p + j;
                        if z[[b, o, tt]] > 0.0 {
                            dz[[b, o, tt]] = share;
                        }
                    }
                }
            }
        }

        // Parameter gradients.
        let (dw, db) = {
            let (left, right) = grads.tensors.split_at_mut(2 * idx + 1);
            (&mut left[2 * idx], &mut right[0])
        };
        for b in 0..n_batch {
            for o in 0..layer.out_features {
                let dz_row = dz.slice(ndarray::s![b, o, ..]);
                let dz_row = dz_row.as_slice().expect("contiguous");
                db[o] += dz_row.iter().sum::<f64>();
                for i in 0..layer.in_features {
                    let x_row = x_in.slice(ndarray::s![b, i, ..]);
                    let x_row = x_row.as_slice().expect("contiguous");
                    for k in 0..layer.kernel_len {
                        let mut acc = 0.0;
                        for (dzv, &xv) in dz_row.iter().zip(&x_row[k..k + t_conv]) {
                            acc += dzv * xv;
                        }
                        dw[layer.weight_index(o, i, k)] += acc;
                    }
                }
            }
        }

        // Input gradient feeds the previous block (skip for the first).
        if idx > 0 {
            let mut dx = Array3::zeros((n_batch, layer.in_features, t_in));
            for b in 0..n_batch {
                for o in 0..layer.out_features {
                    let dz_row = dz.slice(ndarray::s![b, o, ..]);
                    let dz_row = dz_row.as_slice().expect("contiguous");
                    for i in 0..layer.in_features {
                        let dx_row = dx
                            .slice_mut(ndarray::s![b, i, ..])
                            .into_slice()
                            .expect("contiguous");
                        for k in 0..layer.kernel_len {
                            let w = layer.weights[layer.weight_index(o, i, k)];
                            if w == 0.0 {
                                continue;
                            }
                            for (t, &dzv) in dz_row.iter().enumerate() {
                                dx_row[t + k] += w * dzv;
                            }
                        }
                    }
                }
            }
            d_pooled = dx;
        }
    }

    Ok((loss, grads))
}
