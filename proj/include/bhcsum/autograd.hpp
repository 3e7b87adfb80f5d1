#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "bhcsum/errors.hpp"

namespace bhcsum {

// Row-major dense matrix of doubles. Everything in the model stack is 2-D:
// sequences are (len x dim), scalars are (1 x 1).
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> d;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), d(r * c, fill) {}

    double& at(std::size_t i, std::size_t j) { return d[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return d[i * cols + j]; }
    std::size_t size() const { return d.size(); }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

// Reverse-mode tape. Nodes are created in forward order; backward walks the
// creation order in reverse. Graphs are built per forward pass and thrown
// away afterwards.
class Tape {
public:
    struct Node {
        Matrix value;
        Matrix grad;
        std::function<void(Node&)> backprop;  // empty for leaves
    };
    using NodePtr = std::shared_ptr<Node>;

    NodePtr leaf(Matrix value) {
        auto n = std::make_shared<Node>();
        n->grad = Matrix(value.rows, value.cols);
        n->value = std::move(value);
        nodes_.push_back(n);
        return n;
    }

    NodePtr make(Matrix value, std::function<void(Node&)> backprop) {
        auto n = std::make_shared<Node>();
        n->grad = Matrix(value.rows, value.cols);
        n->value = std::move(value);
        n->backprop = std::move(backprop);
        nodes_.push_back(n);
        return n;
    }

    // Seeds the output gradient and propagates to every node.
    void backward(const NodePtr& output, double seed = 1.0) {
        if (output->value.size() != 1) throw DimensionMismatch("backward: output must be scalar");
        output->grad.d[0] = seed;
        for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
            if ((*it)->backprop) (*it)->backprop(**it);
        }
    }

    std::size_t size() const { return nodes_.size(); }

private:
    std::vector<NodePtr> nodes_;
};

using NodePtr = Tape::NodePtr;

namespace ops {

inline NodePtr matmul(Tape& tape, const NodePtr& a, const NodePtr& b) {
    if (a->value.cols != b->value.rows) throw DimensionMismatch("matmul: inner dimensions differ");
    Matrix out(a->value.rows, b->value.cols);
    for (std::size_t i = 0; i < a->value.rows; ++i) {
        for (std::size_t k = 0; k < a->value.cols; ++k) {
            const double av = a->value.at(i, k);
            if (av == 0.0) continue;
            for (std::size_t j = 0; j < b->value.cols; ++j) {
                out.at(i, j) += av * b->value.at(k, j);
            }
        }
    }
    return tape.make(std::move(out), [a, b](Tape::Node& n) {
        for (std::size_t i = 0; i < a->value.rows; ++i) {
            for (std::size_t j = 0; j < b->value.cols; ++j) {
                const double g = n.grad.at(i, j);
                if (g == 0.0) continue;
                for (std::size_t k = 0; k < a->value.cols; ++k) {
                    a->grad.at(i, k) += g * b->value.at(k, j);
                    b->grad.at(k, j) += g * a->value.at(i, k);
                }
            }
        }
    });
}

// a * b^T without materialising the transpose.
inline NodePtr matmul_nt(Tape& tape, const NodePtr& a, const NodePtr& b) {
    if (a->value.cols != b->value.cols) throw DimensionMismatch("matmul_nt: inner dimensions differ");
    Matrix out(a->value.rows, b->value.rows);
    for (std::size_t i = 0; i < a->value.rows; ++i) {
        for (std::size_t j = 0; j < b->value.rows; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a->value.cols; ++k) s += a->value.at(i, k) * b->value.at(j, k);
            out.at(i, j) = s;
        }
    }
    return tape.make(std::move(out), [a, b](Tape::Node& n) {
        for (std::size_t i = 0; i < a->value.rows; ++i) {
            for (std::size_t j = 0; j < b->value.rows; ++j) {
                const double g = n.grad.at(i, j);
                if (g == 0.0) continue;
                for (std::size_t k = 0; k < a->value.cols; ++k) {
                    a->grad.at(i, k) += g * b->value.at(j, k);
                    b->grad.at(j, k) += g * a->value.at(i, k);
                }
            }
        }
    });
}

inline NodePtr add(Tape& tape, const NodePtr& a, const NodePtr& b) {
    if (!a->value.same_shape(b->value)) throw DimensionMismatch("add: shape mismatch");
    Matrix out = a->value;
    for (std::size_t i = 0; i < out.size(); ++i) out.d[i] += b->value.d[i];
    return tape.make(std::move(out), [a, b](Tape::Node& n) {
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
            a->grad.d[i] += n.grad.d[i];
            b->grad.d[i] += n.grad.d[i];
        }
    });
}

// Adds a 1 x n bias row to every row of a.
inline NodePtr add_rowvec(Tape& tape, const NodePtr& a, const NodePtr& bias) {
    if (bias->value.rows != 1 || bias->value.cols != a->value.cols) {
        throw DimensionMismatch("add_rowvec: bias shape mismatch");
    }
    Matrix out = a->value;
    for (std::size_t i = 0; i < out.rows; ++i) {
        for (std::size_t j = 0; j < out.cols; ++j) out.at(i, j) += bias->value.at(0, j);
    }
    return tape.make(std::move(out), [a, bias](Tape::Node& n) {
        for (std::size_t i = 0; i < n.grad.rows; ++i) {
            for (std::size_t j = 0; j < n.grad.cols; ++j) {
                a->grad.at(i, j) += n.grad.at(i, j);
                bias->grad.at(0, j) += n.grad.at(i, j);
            }
        }
    });
}

inline NodePtr scale(Tape& tape, const NodePtr& a, double s) {
    Matrix out = a->value;
    for (double& v : out.d) v *= s;
    return tape.make(std::move(out), [a, s](Tape::Node& n) {
        for (std::size_t i = 0; i < n.grad.size(); ++i) a->grad.d[i] += s * n.grad.d[i];
    });
}

// Row softmax; with causal=true entry (i, j) for j > i is masked out.
inline NodePtr softmax_rows(Tape& tape, const NodePtr& a, bool causal = false) {
    Matrix out(a->value.rows, a->value.cols);
    for (std::size_t i = 0; i < out.rows; ++i) {
        const std::size_t hi = causal ? std::min(i + 1, out.cols) : out.cols;
        double mx = -1e300;
        for (std::size_t j = 0; j < hi; ++j) mx = std::max(mx, a->value.at(i, j));
        double z = 0.0;
        for (std::size_t j = 0; j < hi; ++j) {
            const double e = std::exp(a->value.at(i, j) - mx);
            out.at(i, j) = e;
            z += e;
        }
        for (std::size_t j = 0; j < hi; ++j) out.at(i, j) /= z;
    }
    return tape.make(std::move(out), [a, causal](Tape::Node& n) {
        for (std::size_t i = 0; i < n.value.rows; ++i) {
            const std::size_t hi = causal ? std::min(i + 1, n.value.cols) : n.value.cols;
            double dot = 0.0;
            for (std::size_t j = 0; j < hi; ++j) dot += n.grad.at(i, j) * n.value.at(i, j);
            for (std::size_t j = 0; j < hi; ++j) {
                a->grad.at(i, j) += (n.grad.at(i, j) - dot) * n.value.at(i, j);
            }
        }
    });
}

// Per-row layer normalisation with learned gain and bias (both 1 x n).
inline NodePtr layer_norm(Tape& tape, const NodePtr& x, const NodePtr& gamma, const NodePtr& beta,
                          double eps = 1e-5) {
    const std::size_t nC = x->value.cols;
    if (gamma->value.cols != nC || beta->value.cols != nC) {
        throw DimensionMismatch("layer_norm: parameter shape mismatch");
    }
    Matrix out(x->value.rows, nC);
    auto stats = std::make_shared<std::vector<std::pair<double, double>>>(x->value.rows);  // mean, inv std
    for (std::size_t i = 0; i < x->value.rows; ++i) {
        double mean = 0.0;
        for (std::size_t j = 0; j < nC; ++j) mean += x->value.at(i, j);
        mean /= static_cast<double>(nC);
        double var = 0.0;
        for (std::size_t j = 0; j < nC; ++j) {
            const double c = x->value.at(i, j) - mean;
            var += c * c;
        }
        var /= static_cast<double>(nC);
        const double inv = 1.0 / std::sqrt(var + eps);
        (*stats)[i] = {mean, inv};
        for (std::size_t j = 0; j < nC; ++j) {
            out.at(i, j) = (x->value.at(i, j) - mean) * inv * gamma->value.at(0, j) + beta->value.at(0, j);
        }
    }
    return tape.make(std::move(out), [x, gamma, beta, stats, nC](Tape::Node& n) {
        const double inv_n = 1.0 / static_cast<double>(nC);
        for (std::size_t i = 0; i < x->value.rows; ++i) {
            const auto [mean, inv] = (*stats)[i];
            double sum_dy_g = 0.0, sum_dy_g_xhat = 0.0;
            for (std::size_t j = 0; j < nC; ++j) {
                const double xhat = (x->value.at(i, j) - mean) * inv;
                const double dy = n.grad.at(i, j);
                gamma->grad.at(0, j) += dy * xhat;
                beta->grad.at(0, j) += dy;
                const double dyg = dy * gamma->value.at(0, j);
                sum_dy_g += dyg;
                sum_dy_g_xhat += dyg * xhat;
            }
            for (std::size_t j = 0; j < nC; ++j) {
                const double xhat = (x->value.at(i, j) - mean) * inv;
                const double dyg = n.grad.at(i, j) * gamma->value.at(0, j);
                x->grad.at(i, j) += inv * (dyg - inv_n * sum_dy_g - xhat * inv_n * sum_dy_g_xhat);
            }
        }
    });
}

// Exact GELU: x * Phi(x) with the erf formulation.
inline NodePtr gelu(Tape& tape, const NodePtr& a) {
    Matrix out = a->value;
    for (double& v : out.d) v = 0.5 * v * (1.0 + std::erf(v * 0.70710678118654752440));
    return tape.make(std::move(out), [a](Tape::Node& n) {
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
            const double x = a->value.d[i];
            const double cdf = 0.5 * (1.0 + std::erf(x * 0.70710678118654752440));
            const double pdf = 0.39894228040143267794 * std::exp(-0.5 * x * x);
            a->grad.d[i] += n.grad.d[i] * (cdf + x * pdf);
        }
    });
}

// Gathers embedding rows for a token id sequence.
inline NodePtr embedding(Tape& tape, const NodePtr& table, const std::vector<int>& ids) {
    Matrix out(ids.size(), table->value.cols);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const auto row = static_cast<std::size_t>(ids[i]);
        if (row >= table->value.rows) throw DimensionMismatch("embedding: token id out of range");
        for (std::size_t j = 0; j < table->value.cols; ++j) out.at(i, j) = table->value.at(row, j);
    }
    return tape.make(std::move(out), [table, ids](Tape::Node& n) {
        for (std::size_t i = 0; i < ids.size(); ++i) {
            const auto row = static_cast<std::size_t>(ids[i]);
            for (std::size_t j = 0; j < n.grad.cols; ++j) table->grad.at(row, j) += n.grad.at(i, j);
        }
    });
}

inline NodePtr slice_rows(Tape& tape, const NodePtr& a, std::size_t r0, std::size_t r1) {
    if (r1 > a->value.rows || r0 > r1) throw DimensionMismatch("slice_rows: bad range");
    Matrix out(r1 - r0, a->value.cols);
    for (std::size_t i = r0; i < r1; ++i) {
        for (std::size_t j = 0; j < a->value.cols; ++j) out.at(i - r0, j) = a->value.at(i, j);
    }
    return tape.make(std::move(out), [a, r0](Tape::Node& n) {
        for (std::size_t i = 0; i < n.grad.rows; ++i) {
            for (std::size_t j = 0; j < n.grad.cols; ++j) a->grad.at(r0 + i, j) += n.grad.at(i, j);
        }
    });
}

inline NodePtr slice_cols(Tape& tape, const NodePtr& a, std::size_t c0, std::size_t c1) {
    if (c1 > a->value.cols || c0 > c1) throw DimensionMismatch("slice_cols: bad range");
    Matrix out(a->value.rows, c1 - c0);
    for (std::size_t i = 0; i < a->value.rows; ++i) {
        for (std::size_t j = c0; j < c1; ++j) out.at(i, j - c0) = a->value.at(i, j);
    }
    return tape.make(std::move(out), [a, c0](Tape::Node& n) {
        for (std::size_t i = 0; i < n.grad.rows; ++i) {
            for (std::size_t j = 0; j < n.grad.cols; ++j) a->grad.at(i, c0 + j) += n.grad.at(i, j);
        }
    });
}

inline NodePtr concat_cols(Tape& tape, const std::vector<NodePtr>& parts) {
    if (parts.empty()) throw DimensionMismatch("concat_cols: no parts");
    const std::size_t rows = parts[0]->value.rows;
    std::size_t cols = 0;
    for (const auto& p : parts) {
        if (p->value.rows != rows) throw DimensionMismatch("concat_cols: row mismatch");
        cols += p->value.cols;
    }
    Matrix out(rows, cols);
    std::size_t off = 0;
    for (const auto& p : parts) {
        for (std::size_t i = 0; i < rows; ++i) {
            for (std::size_t j = 0; j < p->value.cols; ++j) out.at(i, off + j) = p->value.at(i, j);
        }
        off += p->value.cols;
    }
    return tape.make(std::move(out), [parts](Tape::Node& n) {
        std::size_t off2 = 0;
        for (const auto& p : parts) {
            for (std::size_t i = 0; i < p->grad.rows; ++i) {
                for (std::size_t j = 0; j < p->grad.cols; ++j) p->grad.at(i, j) += n.grad.at(i, off2 + j);
            }
            off2 += p->value.cols;
        }
    });
}

inline NodePtr sigmoid(Tape& tape, const NodePtr& a) {
    Matrix out = a->value;
    for (double& v : out.d) v = 1.0 / (1.0 + std::exp(-v));
    auto cached = std::make_shared<Matrix>(out);
    return tape.make(std::move(out), [a, cached](Tape::Node& n) {
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
            const double s = cached->d[i];
            a->grad.d[i] += n.grad.d[i] * s * (1.0 - s);
        }
    });
}

inline NodePtr mul(Tape& tape, const NodePtr& a, const NodePtr& b) {
    if (!a->value.same_shape(b->value)) throw DimensionMismatch("mul: shape mismatch");
    Matrix out = a->value;
    for (std::size_t i = 0; i < out.size(); ++i) out.d[i] *= b->value.d[i];
    return tape.make(std::move(out), [a, b](Tape::Node& n) {
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
            a->grad.d[i] += n.grad.d[i] * b->value.d[i];
            b->grad.d[i] += n.grad.d[i] * a->value.d[i];
        }
    });
}

inline NodePtr tanh_op(Tape& tape, const NodePtr& a) {
    Matrix out = a->value;
    for (double& v : out.d) v = std::tanh(v);
    auto cached = std::make_shared<Matrix>(out);
    return tape.make(std::move(out), [a, cached](Tape::Node& n) {
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
            a->grad.d[i] += n.grad.d[i] * (1.0 - cached->d[i] * cached->d[i]);
        }
    });
}

inline NodePtr concat_rows(Tape& tape, const std::vector<NodePtr>& parts) {
    if (parts.empty()) throw DimensionMismatch("concat_rows: no parts");
    const std::size_t cols = parts[0]->value.cols;
    std::size_t rows = 0;
    for (const auto& p : parts) {
        if (p->value.cols != cols) throw DimensionMismatch("concat_rows: column mismatch");
        rows += p->value.rows;
    }
    Matrix out(rows, cols);
    std::size_t off = 0;
    for (const auto& p : parts) {
        for (std::size_t i = 0; i < p->value.rows; ++i) {
            for (std::size_t j = 0; j < cols; ++j) out.at(off + i, j) = p->value.at(i, j);
        }
        off += p->value.rows;
    }
    return tape.make(std::move(out), [parts](Tape::Node& n) {
        std::size_t off2 = 0;
        for (const auto& p : parts) {
            for (std::size_t i = 0; i < p->grad.rows; ++i) {
                for (std::size_t j = 0; j < p->grad.cols; ++j) p->grad.at(i, j) += n.grad.at(off2 + i, j);
            }
            off2 += p->value.rows;
        }
    });
}

// Mean binary cross entropy with logits; logits are (n x 1), labels in {0,1}.
inline NodePtr bce_with_logits(Tape& tape, const NodePtr& logits, const std::vector<double>& labels) {
    if (logits->value.cols != 1 || logits->value.rows != labels.size()) {
        throw DimensionMismatch("bce_with_logits: shape mismatch");
    }
    const std::size_t n = labels.size();
    auto sig = std::make_shared<std::vector<double>>(n);
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double z = logits->value.d[i];
        // log(1 + e^-|z|) + max(z, 0) - z*y, numerically stable
        loss += std::log1p(std::exp(-std::abs(z))) + std::max(z, 0.0) - z * labels[i];
        (*sig)[i] = 1.0 / (1.0 + std::exp(-z));
    }
    Matrix out(1, 1);
    out.d[0] = loss / static_cast<double>(n);
    return tape.make(std::move(out), [logits, labels, sig, n](Tape::Node& node) {
        const double g = node.grad.d[0] / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            logits->grad.d[i] += g * ((*sig)[i] - labels[i]);
        }
    });
}

// Mean token-level cross entropy between logits (len x vocab) and target
// ids; positions whose target equals ignore_id contribute nothing.
inline NodePtr cross_entropy(Tape& tape, const NodePtr& logits, const std::vector<int>& targets,
                             int ignore_id = -1) {
    if (targets.size() != logits->value.rows) throw DimensionMismatch("cross_entropy: target length mismatch");
    const std::size_t vocab = logits->value.cols;
    auto probs = std::make_shared<Matrix>(logits->value.rows, vocab);
    double loss = 0.0;
    std::size_t counted = 0;
    for (std::size_t i = 0; i < logits->value.rows; ++i) {
        double mx = -1e300;
        for (std::size_t j = 0; j < vocab; ++j) mx = std::max(mx, logits->value.at(i, j));
        double z = 0.0;
        for (std::size_t j = 0; j < vocab; ++j) z += std::exp(logits->value.at(i, j) - mx);
        const double logz = std::log(z) + mx;
        for (std::size_t j = 0; j < vocab; ++j) {
            probs->at(i, j) = std::exp(logits->value.at(i, j) - logz);
        }
        if (targets[i] == ignore_id) continue;
        const auto t = static_cast<std::size_t>(targets[i]);
        if (t >= vocab) throw DimensionMismatch("cross_entropy: target id out of range");
        loss += logz - logits->value.at(i, t);
        ++counted;
    }
    if (counted == 0) throw DataError("cross_entropy: no unmasked target positions");
    Matrix out(1, 1);
    out.d[0] = loss / static_cast<double>(counted);
    return tape.make(std::move(out), [logits, targets, probs, ignore_id, counted](Tape::Node& n) {
        const double g = n.grad.d[0] / static_cast<double>(counted);
        for (std::size_t i = 0; i < logits->value.rows; ++i) {
            if (targets[i] == ignore_id) continue;
            const auto t = static_cast<std::size_t>(targets[i]);
            for (std::size_t j = 0; j < logits->value.cols; ++j) {
                logits->grad.at(i, j) += g * (probs->at(i, j) - (j == t ? 1.0 : 0.0));
            }
        }
    });
}

}  // namespace ops

}  // namespace bhcsum
