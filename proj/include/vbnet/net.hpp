#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "vbnet/errors.hpp"
#include "vbnet/matrix.hpp"
#include "vbnet/rng.hpp"

namespace vbnet {

enum class Activation { Relu, Tanh };

inline std::string to_string(Activation a) {
    return a == Activation::Relu ? "relu" : "tanh";
}

// Fully connected feed-forward architecture. layer_sizes = [p, h1, ..., hk, q]
// with the hidden activation applied after every layer except the last
// (identity output, regression only).
struct Architecture {
    std::vector<std::size_t> layer_sizes;
    Activation activation = Activation::Relu;

    std::size_t num_layers() const { return layer_sizes.size() - 1; }
    std::size_t input_dim() const { return layer_sizes.front(); }
    std::size_t output_dim() const { return layer_sizes.back(); }

    // |W| = sum over layers of (in + 1) * out.
    std::size_t param_count() const {
        std::size_t n = 0;
        for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
            n += (layer_sizes[l] + 1) * layer_sizes[l + 1];
        }
        return n;
    }

    void validate() const {
        if (layer_sizes.size() < 3) {
            throw ConfigError("Architecture: need at least one hidden layer");
        }
        for (std::size_t s : layer_sizes) {
            if (s < 1) throw ConfigError("Architecture: all layer sizes must be >= 1");
        }
    }
};

// All weights and biases in one contiguous vector. Packing order, layer by
// layer: weights of layer l row-major with shape (in x out), i.e.
// w[i * out + j] connects input i to unit j, followed by the out biases.
struct FlatParams {
    std::vector<double> values;

    FlatParams() = default;
    explicit FlatParams(std::size_t n, double fill = 0.0) : values(n, fill) {}

    std::size_t size() const { return values.size(); }
};

inline std::size_t layer_weight_offset(const Architecture& arch, std::size_t layer) {
    std::size_t off = 0;
    for (std::size_t l = 0; l < layer; ++l) {
        off += (arch.layer_sizes[l] + 1) * arch.layer_sizes[l + 1];
    }
    return off;
}

inline std::size_t layer_bias_offset(const Architecture& arch, std::size_t layer) {
    return layer_weight_offset(arch, layer) +
           arch.layer_sizes[layer] * arch.layer_sizes[layer + 1];
}

// Copy of layer weights as an (in x out) matrix.
inline Matrix unpack_layer_weights(const Architecture& arch, const FlatParams& w, std::size_t layer) {
    const std::size_t in = arch.layer_sizes[layer];
    const std::size_t out = arch.layer_sizes[layer + 1];
    Matrix m(in, out);
    const double* src = w.values.data() + layer_weight_offset(arch, layer);
    std::copy(src, src + in * out, m.data().begin());
    return m;
}

inline std::vector<double> unpack_layer_biases(const Architecture& arch, const FlatParams& w, std::size_t layer) {
    const std::size_t out = arch.layer_sizes[layer + 1];
    const double* src = w.values.data() + layer_bias_offset(arch, layer);
    return std::vector<double>(src, src + out);
}

inline FlatParams pack_params(const Architecture& arch,
                              const std::vector<Matrix>& weights,
                              const std::vector<std::vector<double>>& biases) {
    if (weights.size() != arch.num_layers() || biases.size() != arch.num_layers()) {
        throw ShapeError("pack_params: layer count mismatch");
    }
    FlatParams w(arch.param_count());
    for (std::size_t l = 0; l < arch.num_layers(); ++l) {
        const std::size_t in = arch.layer_sizes[l];
        const std::size_t out = arch.layer_sizes[l + 1];
        if (weights[l].rows() != in || weights[l].cols() != out || biases[l].size() != out) {
            throw ShapeError("pack_params: layer " + std::to_string(l) + " shape mismatch");
        }
        std::copy(weights[l].data().begin(), weights[l].data().end(),
                  w.values.begin() + layer_weight_offset(arch, l));
        std::copy(biases[l].begin(), biases[l].end(),
                  w.values.begin() + layer_bias_offset(arch, l));
    }
    return w;
}

// Symmetric uniform init, weights and biases in [-1/sqrt(fan_in), +1/sqrt(fan_in)].
inline FlatParams init_params(const Architecture& arch, RngState& rng) {
    FlatParams w(arch.param_count());
    for (std::size_t l = 0; l < arch.num_layers(); ++l) {
        const std::size_t in = arch.layer_sizes[l];
        const std::size_t out = arch.layer_sizes[l + 1];
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        double* dst = w.values.data() + layer_weight_offset(arch, l);
        for (std::size_t i = 0; i < (in + 1) * out; ++i) {
            dst[i] = rng.uniform(-bound, bound);
        }
    }
    return w;
}

namespace detail {

inline void apply_activation(Matrix& z, Activation act) {
    if (act == Activation::Relu) {
        for (double& v : z.data()) v = v > 0.0 ? v : 0.0;
    } else {
        for (double& v : z.data()) v = std::tanh(v);
    }
}

// layer output z = a * W + b, with W read in place from the flat vector.
inline Matrix affine(const Matrix& a, const Architecture& arch, const FlatParams& w, std::size_t layer) {
    const std::size_t in = arch.layer_sizes[layer];
    const std::size_t out = arch.layer_sizes[layer + 1];
    const double* wp = w.values.data() + layer_weight_offset(arch, layer);
    const double* bp = w.values.data() + layer_bias_offset(arch, layer);
    Matrix z(a.rows(), out);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* zrow = z.row_ptr(i);
        for (std::size_t j = 0; j < out; ++j) zrow[j] = bp[j];
        const double* arow = a.row_ptr(i);
        for (std::size_t k = 0; k < in; ++k) {
            const double aik = arow[k];
            const double* wrow = wp + k * out;
            for (std::size_t j = 0; j < out; ++j) {
                zrow[j] += aik * wrow[j];
            }
        }
    }
    return z;
}

} // namespace detail

// Pre-activations and activations of every layer, kept for the backward pass.
struct ForwardTrace {
    std::vector<Matrix> preacts;      // z_l, l = 0..L-1
    std::vector<Matrix> activations;  // a_0 = x, a_l = act(z_{l-1}), a_L = output
};

inline ForwardTrace forward_trace(const Architecture& arch, const FlatParams& w, const Matrix& x) {
    arch.validate();
    if (x.cols() != arch.input_dim()) {
        throw ShapeError("forward: input has " + x.shape_str() + " but architecture expects " +
                         std::to_string(arch.input_dim()) + " columns");
    }
    if (w.size() != arch.param_count()) {
        throw ShapeError("forward: parameter vector length " + std::to_string(w.size()) +
                         " does not match |W| = " + std::to_string(arch.param_count()));
    }
    ForwardTrace trace;
    trace.activations.push_back(x);
    const std::size_t L = arch.num_layers();
    for (std::size_t l = 0; l < L; ++l) {
        Matrix z = detail::affine(trace.activations.back(), arch, w, l);
        trace.preacts.push_back(z);
        if (l + 1 < L) {
            detail::apply_activation(z, arch.activation);
        }
        trace.activations.push_back(std::move(z));
    }
    return trace;
}

// yhat = phi(x; W), one row per observation.
inline Matrix forward(const Architecture& arch, const FlatParams& w, const Matrix& x) {
    return forward_trace(arch, w, x).activations.back();
}

struct NetGradients {
    FlatParams w_grad;   // d loss / d W, same packing as FlatParams
    Matrix x_grad;       // d loss / d x
};

// Reverse-mode pass: upstream is d loss / d yhat with the shape of the
// forward output. Static per-layer backward, no tape.
inline NetGradients backward(const Architecture& arch, const FlatParams& w,
                             const Matrix& x, const Matrix& upstream) {
    ForwardTrace trace = forward_trace(arch, w, x);
    const std::size_t L = arch.num_layers();
    const Matrix& out = trace.activations.back();
    if (upstream.rows() != out.rows() || upstream.cols() != out.cols()) {
        throw ShapeError("backward: upstream shape " + upstream.shape_str() +
                         " does not match output shape " + out.shape_str());
    }

    NetGradients grads;
    grads.w_grad = FlatParams(arch.param_count());

    Matrix delta = upstream; // d loss / d z_l while walking down
    for (std::size_t l = L; l-- > 0;) {
        if (l + 1 < L) {
            // chain through the activation of layer l
            const Matrix& z = trace.preacts[l];
            if (arch.activation == Activation::Relu) {
                for (std::size_t i = 0; i < delta.size(); ++i) {
                    if (z.data()[i] <= 0.0) delta.data()[i] = 0.0;
                }
            } else {
                for (std::size_t i = 0; i < delta.size(); ++i) {
                    const double t = std::tanh(z.data()[i]);
                    delta.data()[i] *= 1.0 - t * t;
                }
            }
        }
        const Matrix& a_in = trace.activations[l];
        const std::size_t in = arch.layer_sizes[l];
        const std::size_t out_sz = arch.layer_sizes[l + 1];

        // dW = a_in^T * delta, accumulated straight into the flat layout
        double* wg = grads.w_grad.values.data() + layer_weight_offset(arch, l);
        for (std::size_t i = 0; i < a_in.rows(); ++i) {
            const double* arow = a_in.row_ptr(i);
            const double* drow = delta.row_ptr(i);
            for (std::size_t k = 0; k < in; ++k) {
                const double aik = arow[k];
                double* wrow = wg + k * out_sz;
                for (std::size_t j = 0; j < out_sz; ++j) {
                    wrow[j] += aik * drow[j];
                }
            }
        }
        // db = column sums of delta
        double* bg = grads.w_grad.values.data() + layer_bias_offset(arch, l);
        for (std::size_t i = 0; i < delta.rows(); ++i) {
            const double* drow = delta.row_ptr(i);
            for (std::size_t j = 0; j < out_sz; ++j) {
                bg[j] += drow[j];
            }
        }
        // d loss / d a_{l-1} = delta * W_l^T
        const double* wp = w.values.data() + layer_weight_offset(arch, l);
        Matrix prev(delta.rows(), in, 0.0);
        for (std::size_t i = 0; i < delta.rows(); ++i) {
            const double* drow = delta.row_ptr(i);
            double* prow = prev.row_ptr(i);
            for (std::size_t k = 0; k < in; ++k) {
                const double* wrow = wp + k * out_sz;
                double dot = 0.0;
                for (std::size_t j = 0; j < out_sz; ++j) {
                    dot += drow[j] * wrow[j];
                }
                prow[k] = dot;
            }
        }
        delta = std::move(prev);
    }
    grads.x_grad = std::move(delta);
    return grads;
}

} // namespace vbnet
