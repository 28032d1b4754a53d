#include "gazecomp/graph.hpp"

#include <algorithm>
#include <unordered_set>

namespace gazecomp {

namespace {

std::shared_ptr<GraphNode> make_node(const char* op, Tensor value,
                                     std::vector<std::shared_ptr<GraphNode>> inputs) {
    auto n = std::make_shared<GraphNode>();
    n->op = op;
    n->value = std::move(value);
    n->inputs = std::move(inputs);
    for (const auto& in : n->inputs)
        if (in->requires_grad) n->requires_grad = true;
    n->value.check_finite(op);
    return n;
}

void require_2d(const Var& v, const char* op) {
    if (v.value().rank() != 2) throw ShapeError(std::string(op) + ": expected rank-2 tensor, got " + v.value().shape_str());
}

}  // namespace

Var Var::leaf(Tensor value, bool requires_grad) {
    auto n = std::make_shared<GraphNode>();
    n->op = "leaf";
    n->value = std::move(value);
    n->requires_grad = requires_grad;
    n->value.check_finite("leaf");
    return Var(std::move(n));
}

double Var::scalar_value() const {
    if (node_->value.size() != 1) throw ShapeError("scalar_value on non-scalar " + node_->value.shape_str());
    return node_->value[0];
}

void Var::backward() {
    if (node_->value.size() != 1) throw ShapeError("backward() requires a scalar output");
    // Iterative post-order DFS; each node enters the order exactly once.
    std::vector<GraphNode*> order;
    std::unordered_set<GraphNode*> visited;
    std::vector<std::pair<GraphNode*, size_t>> stack;
    stack.push_back({node_.get(), 0});
    visited.insert(node_.get());
    while (!stack.empty()) {
        auto& [n, next] = stack.back();
        if (next < n->inputs.size()) {
            GraphNode* child = n->inputs[next++].get();
            if (child->requires_grad && !visited.count(child)) {
                visited.insert(child);
                stack.push_back({child, 0});
            }
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }
    node_->ensure_grad()[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        GraphNode* n = *it;
        if (n->backward_fn && n->requires_grad) n->backward_fn(*n);
    }
}

Var matmul(const Var& a, const Var& b) {
    require_2d(a, "matmul");
    require_2d(b, "matmul");
    const Tensor& A = a.value();
    const Tensor& B = b.value();
    if (A.cols() != B.rows()) {
        throw ShapeError("matmul: inner dimensions disagree, " + A.shape_str() + " x " + B.shape_str());
    }
    const int m = A.rows(), k = A.cols(), n = B.cols();
    Tensor C({m, n});
    const double* pa = A.data();
    const double* pb = B.data();
    double* pc = C.data();
    for (int i = 0; i < m; ++i) {
        const double* arow = pa + static_cast<size_t>(i) * k;
        double* crow = pc + static_cast<size_t>(i) * n;
        for (int kk = 0; kk < k; ++kk) {
            const double av = arow[kk];
            if (av == 0.0) continue;
            const double* brow = pb + static_cast<size_t>(kk) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
    auto node = make_node("matmul", std::move(C), {a.node(), b.node()});
    node->backward_fn = [m, k, n](GraphNode& self) {
        const Tensor& g = self.grad;
        auto& na = self.inputs[0];
        auto& nb = self.inputs[1];
        if (na->requires_grad) {
            // dA = dC * B^T
            Tensor& ga = na->ensure_grad();
            const double* pg = g.data();
            const double* pb = nb->value.data();
            double* pga = ga.data();
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) {
                    const double gv = pg[static_cast<size_t>(i) * n + j];
                    if (gv == 0.0) continue;
                    const double* brow = pb;  // B[kk][j] iterated over kk
                    for (int kk = 0; kk < k; ++kk)
                        pga[static_cast<size_t>(i) * k + kk] += gv * brow[static_cast<size_t>(kk) * n + j];
                }
        }
        if (nb->requires_grad) {
            // dB = A^T * dC
            Tensor& gb = nb->ensure_grad();
            const double* pg = g.data();
            const double* pa = na->value.data();
            double* pgb = gb.data();
            for (int kk = 0; kk < k; ++kk)
                for (int i = 0; i < m; ++i) {
                    const double av = pa[static_cast<size_t>(i) * k + kk];
                    if (av == 0.0) continue;
                    const double* grow = pg + static_cast<size_t>(i) * n;
                    double* gbrow = pgb + static_cast<size_t>(kk) * n;
                    for (int j = 0; j < n; ++j) gbrow[j] += av * grow[j];
                }
        }
    };
    return Var(node);
}

namespace {

Var binary_elementwise(const char* op, const Var& a, const Var& b,
                       double (*fwd)(double, double), double da_coef, double db_coef, bool is_mul) {
    if (!a.value().same_shape(b.value())) {
        throw ShapeError(std::string(op) + ": shape mismatch " + a.value().shape_str() + " vs " + b.value().shape_str());
    }
    Tensor out(a.value().shape());
    for (size_t i = 0; i < out.size(); ++i) out[i] = fwd(a.value()[i], b.value()[i]);
    auto node = make_node(op, std::move(out), {a.node(), b.node()});
    node->backward_fn = [da_coef, db_coef, is_mul](GraphNode& self) {
        auto& na = self.inputs[0];
        auto& nb = self.inputs[1];
        if (na->requires_grad) {
            Tensor& ga = na->ensure_grad();
            for (size_t i = 0; i < ga.size(); ++i)
                ga[i] += self.grad[i] * (is_mul ? nb->value[i] : da_coef);
        }
        if (nb->requires_grad) {
            Tensor& gb = nb->ensure_grad();
            for (size_t i = 0; i < gb.size(); ++i)
                gb[i] += self.grad[i] * (is_mul ? na->value[i] : db_coef);
        }
    };
    return Var(node);
}

}  // namespace

Var add(const Var& a, const Var& b) {
    return binary_elementwise("add", a, b, [](double x, double y) { return x + y; }, 1.0, 1.0, false);
}

Var sub(const Var& a, const Var& b) {
    return binary_elementwise("sub", a, b, [](double x, double y) { return x - y; }, 1.0, -1.0, false);
}

Var mul(const Var& a, const Var& b) {
    return binary_elementwise("mul", a, b, [](double x, double y) { return x * y; }, 0.0, 0.0, true);
}

Var scale(const Var& a, double c) {
    Tensor out(a.value().shape());
    for (size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * c;
    auto node = make_node("scale", std::move(out), {a.node()});
    node->backward_fn = [c](GraphNode& self) {
        auto& na = self.inputs[0];
        if (!na->requires_grad) return;
        Tensor& ga = na->ensure_grad();
        for (size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i] * c;
    };
    return Var(node);
}

Var add_rowvec(const Var& a, const Var& bias) {
    require_2d(a, "add_rowvec");
    const int m = a.value().rows(), n = a.value().cols();
    if (bias.value().size() != static_cast<size_t>(n)) {
        throw ShapeError("add_rowvec: bias length " + std::to_string(bias.value().size()) +
                         " vs row width " + std::to_string(n));
    }
    Tensor out({m, n});
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) out.at2(i, j) = a.value().at2(i, j) + bias.value()[j];
    auto node = make_node("add_rowvec", std::move(out), {a.node(), bias.node()});
    node->backward_fn = [m, n](GraphNode& self) {
        auto& na = self.inputs[0];
        auto& nb = self.inputs[1];
        if (na->requires_grad) {
            Tensor& ga = na->ensure_grad();
            for (size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i];
        }
        if (nb->requires_grad) {
            Tensor& gb = nb->ensure_grad();
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) gb[j] += self.grad.at2(i, j);
        }
    };
    return Var(node);
}

Var transpose(const Var& a) {
    require_2d(a, "transpose");
    const int m = a.value().rows(), n = a.value().cols();
    Tensor out({n, m});
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) out.at2(j, i) = a.value().at2(i, j);
    auto node = make_node("transpose", std::move(out), {a.node()});
    node->backward_fn = [m, n](GraphNode& self) {
        auto& na = self.inputs[0];
        if (!na->requires_grad) return;
        Tensor& ga = na->ensure_grad();
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) ga.at2(i, j) += self.grad.at2(j, i);
    };
    return Var(node);
}

Var slice_cols(const Var& a, int col0, int len) {
    require_2d(a, "slice_cols");
    const int m = a.value().rows(), n = a.value().cols();
    if (col0 < 0 || len <= 0 || col0 + len > n) throw ShapeError("slice_cols: range out of bounds");
    Tensor out({m, len});
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < len; ++j) out.at2(i, j) = a.value().at2(i, col0 + j);
    auto node = make_node("slice_cols", std::move(out), {a.node()});
    node->backward_fn = [m, len, col0](GraphNode& self) {
        auto& na = self.inputs[0];
        if (!na->requires_grad) return;
        Tensor& ga = na->ensure_grad();
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < len; ++j) ga.at2(i, col0 + j) += self.grad.at2(i, j);
    };
    return Var(node);
}

Var concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw ShapeError("concat_cols: no inputs");
    const int m = parts[0].value().rows();
    int total = 0;
    std::vector<std::shared_ptr<GraphNode>> inputs;
    std::vector<int> widths;
    for (const auto& p : parts) {
        require_2d(p, "concat_cols");
        if (p.value().rows() != m) throw ShapeError("concat_cols: row count mismatch");
        widths.push_back(p.value().cols());
        total += p.value().cols();
        inputs.push_back(p.node());
    }
    Tensor out({m, total});
    int off = 0;
    for (size_t k = 0; k < parts.size(); ++k) {
        const Tensor& src = parts[k].value();
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < widths[k]; ++j) out.at2(i, off + j) = src.at2(i, j);
        off += widths[k];
    }
    auto node = make_node("concat_cols", std::move(out), std::move(inputs));
    node->backward_fn = [m, widths](GraphNode& self) {
        int off = 0;
        for (size_t k = 0; k < self.inputs.size(); ++k) {
            auto& in = self.inputs[k];
            if (in->requires_grad) {
                Tensor& g = in->ensure_grad();
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < widths[k]; ++j) g.at2(i, j) += self.grad.at2(i, off + j);
            }
            off += widths[k];
        }
    };
    return Var(node);
}

Var slice_rows(const Var& a, int row0, int len) {
    require_2d(a, "slice_rows");
    const int m = a.value().rows(), n = a.value().cols();
    if (row0 < 0 || len <= 0 || row0 + len > m) throw ShapeError("slice_rows: range out of bounds");
    Tensor out({len, n});
    for (int i = 0; i < len; ++i)
        for (int j = 0; j < n; ++j) out.at2(i, j) = a.value().at2(row0 + i, j);
    auto node = make_node("slice_rows", std::move(out), {a.node()});
    node->backward_fn = [len, n, row0](GraphNode& self) {
        auto& na = self.inputs[0];
        if (!na->requires_grad) return;
        Tensor& ga = na->ensure_grad();
        for (int i = 0; i < len; ++i)
            for (int j = 0; j < n; ++j) ga.at2(row0 + i, j) += self.grad.at2(i, j);
    };
    return Var(node);
}

Var concat_rows(const std::vector<Var>& parts) {
    if (parts.empty()) throw ShapeError("concat_rows: no inputs");
    const int n = parts[0].value().cols();
    int total = 0;
    std::vector<std::shared_ptr<GraphNode>> inputs;
    std::vector<int> heights;
    for (const auto& p : parts) {
        require_2d(p, "concat_rows");
        if (p.value().cols() != n) throw ShapeError("concat_rows: column count mismatch");
        heights.push_back(p.value().rows());
        total += p.value().rows();
        inputs.push_back(p.node());
    }
    Tensor out({total, n});
    int off = 0;
    for (size_t k = 0; k < parts.size(); ++k) {
        const Tensor& src = parts[k].value();
        for (int i = 0; i < heights[k]; ++i)
            for (int j = 0; j < n; ++j) out.at2(off + i, j) = src.at2(i, j);
        off += heights[k];
    }
    auto node = make_node("concat_rows", std::move(out), std::move(inputs));
    node->backward_fn = [n, heights](GraphNode& self) {
        int off = 0;
        for (size_t k = 0; k < self.inputs.size(); ++k) {
            auto& in = self.inputs[k];
            if (in->requires_grad) {
                Tensor& g = in->ensure_grad();
                for (int i = 0; i < heights[k]; ++i)
                    for (int j = 0; j < n; ++j) g.at2(i, j) += self.grad.at2(off + i, j);
            }
            off += heights[k];
        }
    };
    return Var(node);
}

Var reshape(const Var& a, const std::vector<int>& shape) {
    Tensor out(shape);
    if (out.size() != a.value().size()) {
        throw ShapeError("reshape: element count mismatch " + a.value().shape_str() + " -> " +
                         out.shape_str());
    }
    std::copy(a.value().data(), a.value().data() + a.value().size(), out.data());
    auto node = make_node("reshape", std::move(out), {a.node()});
    node->backward_fn = [](GraphNode& self) {
        auto& in = self.inputs[0];
        if (!in->requires_grad) return;
        Tensor& g = in->ensure_grad();
        for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    };
    return Var(node);
}

Var softmax(const Var& a, int axis) {
    const auto& shape = a.value().shape();
    if (axis < 0 || axis >= static_cast<int>(shape.size())) {
        throw ShapeError("softmax: axis " + std::to_string(axis) + " invalid for " + a.value().shape_str());
    }
    const int axis_len = shape[axis];
    size_t inner = 1, outer = 1;
    for (int i = axis + 1; i < static_cast<int>(shape.size()); ++i) inner *= shape[i];
    for (int i = 0; i < axis; ++i) outer *= shape[i];

    Tensor out(shape);
    const double* px = a.value().data();
    double* py = out.data();
    for (size_t o = 0; o < outer; ++o) {
        for (size_t in = 0; in < inner; ++in) {
            const size_t base = o * axis_len * inner + in;
            double mx = px[base];
            for (int k = 1; k < axis_len; ++k) mx = std::max(mx, px[base + k * inner]);
            double sum = 0.0;
            for (int k = 0; k < axis_len; ++k) {
                double e = std::exp(px[base + k * inner] - mx);
                py[base + k * inner] = e;
                sum += e;
            }
            for (int k = 0; k < axis_len; ++k) py[base + k * inner] /= sum;
        }
    }
    auto node = make_node("softmax", std::move(out), {a.node()});
    node->backward_fn = [axis_len, inner, outer](GraphNode& self) {
        auto& na = self.inputs[0];
        if (!na->requires_grad) return;
        Tensor& ga = na->ensure_grad();
        const double* y = self.value.data();
        const double* gy = self.grad.data();
        for (size_t o = 0; o < outer; ++o) {
            for (size_t in = 0; in < inner; ++in) {
                const size_t base = o * axis_len * inner + in;
                double dot = 0.0;
                for (int k = 0; k < axis_len; ++k) dot += gy[base + k * inner] * y[base + k * inner];
                for (int k = 0; k < axis_len; ++k) {
                    const size_t idx = base + k * inner;
                    ga[idx] += y[idx] * (gy[idx] - dot);
                }
            }
        }
    };
    return Var(node);
}

Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps) {
    require_2d(x, "layer_norm");
    const int m = x.value().rows(), n = x.value().cols();
    if (gamma.value().size() != static_cast<size_t>(n) || beta.value().size() != static_cast<size_t>(n)) {
        throw ShapeError("layer_norm: gamma/beta length mismatch");
    }
    Tensor out({m, n});
    Tensor xhat({m, n});
    Tensor inv_std({m});
    for (int i = 0; i < m; ++i) {
        double mean = 0.0;
        for (int j = 0; j < n; ++j) mean += x.value().at2(i, j);
        mean /= n;
        double var = 0.0;
        for (int j = 0; j < n; ++j) {
            double d = x.value().at2(i, j) - mean;
            var += d * d;
        }
        var /= n;
        const double is = 1.0 / std::sqrt(var + eps);
        inv_std[i] = is;
        for (int j = 0; j < n; ++j) {
            double xh = (x.value().at2(i, j) - mean) * is;
            xhat.at2(i, j) = xh;
            out.at2(i, j) = gamma.value()[j] * xh + beta.value()[j];
        }
    }
    auto node = make_node("layer_norm", std::move(out), {x.node(), gamma.node(), beta.node()});
    node->backward_fn = [m, n, xhat = std::move(xhat), inv_std = std::move(inv_std)](GraphNode& self) {
        auto& nx = self.inputs[0];
        auto& ng = self.inputs[1];
        auto& nb = self.inputs[2];
        const Tensor& gy = self.grad;
        const Tensor& gam = ng->value;
        if (ng->requires_grad) {
            Tensor& gg = ng->ensure_grad();
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) gg[j] += gy.at2(i, j) * xhat.at2(i, j);
        }
        if (nb->requires_grad) {
            Tensor& gb = nb->ensure_grad();
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) gb[j] += gy.at2(i, j);
        }
        if (nx->requires_grad) {
            Tensor& gx = nx->ensure_grad();
            for (int i = 0; i < m; ++i) {
                double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
                for (int j = 0; j < n; ++j) {
                    const double dxh = gy.at2(i, j) * gam[j];
                    mean_dxhat += dxh;
                    mean_dxhat_xhat += dxh * xhat.at2(i, j);
                }
                mean_dxhat /= n;
                mean_dxhat_xhat /= n;
                for (int j = 0; j < n; ++j) {
                    const double dxh = gy.at2(i, j) * gam[j];
                    gx.at2(i, j) += inv_std[i] * (dxh - mean_dxhat - xhat.at2(i, j) * mean_dxhat_xhat);
                }
            }
        }
    };
    return Var(node);
}

Var gelu(const Var& x) {
    constexpr double kAlpha = 0.7978845608028654;  // sqrt(2/pi)
    constexpr double kBeta = 0.044715;
    Tensor out(x.value().shape());
    for (size_t i = 0; i < out.size(); ++i) {
        const double v = x.value()[i];
        out[i] = 0.5 * v * (1.0 + std::tanh(kAlpha * (v + kBeta * v * v * v)));
    }
    auto node = make_node("gelu", std::move(out), {x.node()});
    node->backward_fn = [](GraphNode& self) {
        auto& nx = self.inputs[0];
        if (!nx->requires_grad) return;
        constexpr double kAlpha = 0.7978845608028654;
        constexpr double kBeta = 0.044715;
        Tensor& gx = nx->ensure_grad();
        for (size_t i = 0; i < gx.size(); ++i) {
            const double v = nx->value[i];
            const double t = std::tanh(kAlpha * (v + kBeta * v * v * v));
            const double d = 0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * kAlpha * (1.0 + 3.0 * kBeta * v * v);
            gx[i] += self.grad[i] * d;
        }
    };
    return Var(node);
}

Var kl_divergence(const Var& pred, const Tensor& target, double eps, bool reverse,
                  int row_from, int row_to) {
    require_2d(pred, "kl_divergence");
    if (!pred.value().same_shape(target)) {
        throw ShapeError("kl_divergence: shape mismatch " + pred.value().shape_str() + " vs " +
                         const_cast<Tensor&>(target).shape_str());
    }
    const int m = pred.value().rows(), n = pred.value().cols();
    if (row_to < 0) row_to = m;
    if (row_from < 0 || row_from > row_to || row_to > m) throw ShapeError("kl_divergence: bad row range");

    double loss = 0.0;
    for (int i = row_from; i < row_to; ++i) {
        for (int j = 0; j < n; ++j) {
            const double p = pred.value().at2(i, j);
            const double q = target.at2(i, j);
            const double cp = std::max(p, eps);
            const double cq = std::max(q, eps);
            loss += reverse ? q * (std::log(cq) - std::log(cp)) : p * (std::log(cp) - std::log(cq));
        }
    }
    auto node = make_node("kl_divergence", Tensor::scalar(loss), {pred.node()});
    Tensor tgt = target;  // keep target alive for backward
    node->backward_fn = [m, n, eps, reverse, row_from, row_to, tgt = std::move(tgt)](GraphNode& self) {
        auto& np = self.inputs[0];
        if (!np->requires_grad) return;
        Tensor& gp = np->ensure_grad();
        const double g = self.grad[0];
        for (int i = row_from; i < row_to; ++i) {
            for (int j = 0; j < n; ++j) {
                const double p = np->value.at2(i, j);
                const double q = tgt.at2(i, j);
                const double cp = std::max(p, eps);
                const double cq = std::max(q, eps);
                double d;
                if (reverse) {
                    d = p > eps ? -q / cp : 0.0;
                } else {
                    d = std::log(cp) - std::log(cq) + (p > eps ? 1.0 : 0.0);
                }
                gp.at2(i, j) += g * d;
            }
        }
    };
    return Var(node);
}

}  // namespace gazecomp
