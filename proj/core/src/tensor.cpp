#include "trajllm/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace trajllm {

namespace {

thread_local int g_no_grad_depth = 0;

NodePtr make_node(Shape shape, std::vector<float> data, bool requires_grad) {
  auto n = std::make_shared<TensorNode>();
  n->shape = std::move(shape);
  n->data = std::move(data);
  n->requires_grad = requires_grad && g_no_grad_depth == 0;
  return n;
}

bool track(std::initializer_list<const Tensor*> inputs) {
  if (g_no_grad_depth > 0) return false;
  for (const Tensor* t : inputs)
    if (t->requires_grad()) return true;
  return false;
}

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                shape_str(a.shape()) + " vs " +
                                shape_str(b.shape()));
  }
}

void check_2d(const char* op, const Tensor& a) {
  if (a.ndim() != 2) {
    throw std::invalid_argument(std::string(op) + ": expected 2-d tensor, got " +
                                shape_str(a.shape()));
  }
}

int last_dim(const Tensor& x) { return x.shape().back(); }

}  // namespace

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) os << ",";
    os << s[i];
  }
  os << "]";
  return os.str();
}

int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int d : s) n *= d;
  return n;
}

NoGradGuard::NoGradGuard() { ++g_no_grad_depth; }
NoGradGuard::~NoGradGuard() { --g_no_grad_depth; }
bool grad_enabled() { return g_no_grad_depth == 0; }

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  auto n = shape_numel(shape);
  return Tensor(make_node(std::move(shape),
                          std::vector<float>(static_cast<size_t>(n), 0.0f),
                          requires_grad));
}

Tensor Tensor::full(Shape shape, float value, bool requires_grad) {
  auto n = shape_numel(shape);
  return Tensor(make_node(std::move(shape),
                          std::vector<float>(static_cast<size_t>(n), value),
                          requires_grad));
}

Tensor Tensor::from_data(Shape shape, std::vector<float> data,
                         bool requires_grad) {
  if (shape_numel(shape) != static_cast<int64_t>(data.size())) {
    throw std::invalid_argument("from_data: " + shape_str(shape) +
                                " does not hold " + std::to_string(data.size()) +
                                " values");
  }
  return Tensor(make_node(std::move(shape), std::move(data), requires_grad));
}

Tensor Tensor::randn(Shape shape, Rng& rng, float stddev, bool requires_grad) {
  auto n = shape_numel(shape);
  std::vector<float> data(static_cast<size_t>(n));
  for (auto& v : data) v = rng.normal(0.0f, stddev);
  return Tensor(make_node(std::move(shape), std::move(data), requires_grad));
}

float Tensor::item() const {
  if (numel() != 1) {
    throw std::invalid_argument("item(): tensor " + shape_str(shape()) +
                                " is not scalar");
  }
  return node_->data[0];
}

// ---------------------------------------------------------------------------
// ops

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape("add", a, b);
  std::vector<float> out(a.data().begin(), a.data().end());
  for (size_t i = 0; i < out.size(); ++i) out[i] += b.at(static_cast<int64_t>(i));
  auto node = make_node(a.shape(), std::move(out), track({&a, &b}));
  if (node->requires_grad) {
    node->parents = {a.node_ptr(), b.node_ptr()};
    node->backward_fn = [pa = a.node_ptr(), pb = b.node_ptr()](TensorNode& o) {
      for (TensorNode* p : {pa.get(), pb.get()}) {
        if (!p->requires_grad) continue;
        p->ensure_grad();
        for (size_t i = 0; i < o.grad.size(); ++i) p->grad[i] += o.grad[i];
      }
    };
  }
  return Tensor(node);
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape("sub", a, b);
  std::vector<float> out(a.data().begin(), a.data().end());
  for (size_t i = 0; i < out.size(); ++i) out[i] -= b.at(static_cast<int64_t>(i));
  auto node = make_node(a.shape(), std::move(out), track({&a, &b}));
  if (node->requires_grad) {
    node->parents = {a.node_ptr(), b.node_ptr()};
    node->backward_fn = [pa = a.node_ptr(), pb = b.node_ptr()](TensorNode& o) {
      if (pa->requires_grad) {
        pa->ensure_grad();
        for (size_t i = 0; i < o.grad.size(); ++i) pa->grad[i] += o.grad[i];
      }
      if (pb->requires_grad) {
        pb->ensure_grad();
        for (size_t i = 0; i < o.grad.size(); ++i) pb->grad[i] -= o.grad[i];
      }
    };
  }
  return Tensor(node);
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape("mul", a, b);
  std::vector<float> out(a.data().begin(), a.data().end());
  for (size_t i = 0; i < out.size(); ++i) out[i] *= b.at(static_cast<int64_t>(i));
  auto node = make_node(a.shape(), std::move(out), track({&a, &b}));
  if (node->requires_grad) {
    node->parents = {a.node_ptr(), b.node_ptr()};
    node->backward_fn = [pa = a.node_ptr(), pb = b.node_ptr()](TensorNode& o) {
      if (pa->requires_grad) {
        pa->ensure_grad();
        for (size_t i = 0; i < o.grad.size(); ++i)
          pa->grad[i] += o.grad[i] * pb->data[i];
      }
      if (pb->requires_grad) {
        pb->ensure_grad();
        for (size_t i = 0; i < o.grad.size(); ++i)
          pb->grad[i] += o.grad[i] * pa->data[i];
      }
    };
  }
  return Tensor(node);
}

Tensor scale(const Tensor& a, float s) {
  std::vector<float> out(a.data().begin(), a.data().end());
  for (auto& v : out) v *= s;
  auto node = make_node(a.shape(), std::move(out), track({&a}));
  if (node->requires_grad) {
    node->parents = {a.node_ptr()};
    node->backward_fn = [pa = a.node_ptr(), s](TensorNode& o) {
      pa->ensure_grad();
      for (size_t i = 0; i < o.grad.size(); ++i) pa->grad[i] += o.grad[i] * s;
    };
  }
  return Tensor(node);
}

Tensor add_rows(const Tensor& a, const Tensor& v) {
  check_2d("add_rows", a);
  if (v.ndim() != 1 || v.dim(0) != a.dim(1)) {
    throw std::invalid_argument("add_rows: vector " + shape_str(v.shape()) +
                                " does not match matrix " + shape_str(a.shape()));
  }
  const int m = a.dim(0), n = a.dim(1);
  std::vector<float> out(a.data().begin(), a.data().end());
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out[static_cast<size_t>(i) * n + j] += v.at(j);
  auto node = make_node(a.shape(), std::move(out), track({&a, &v}));
  if (node->requires_grad) {
    node->parents = {a.node_ptr(), v.node_ptr()};
    node->backward_fn = [pa = a.node_ptr(), pv = v.node_ptr(), m, n](TensorNode& o) {
      if (pa->requires_grad) {
        pa->ensure_grad();
        for (size_t i = 0; i < o.grad.size(); ++i) pa->grad[i] += o.grad[i];
      }
      if (pv->requires_grad) {
        pv->ensure_grad();
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < n; ++j)
            pv->grad[static_cast<size_t>(j)] += o.grad[static_cast<size_t>(i) * n + j];
      }
    };
  }
  return Tensor(node);
}

Tensor mul_rows(const Tensor& a, const Tensor& w) {
  check_2d("mul_rows", a);
  if (w.ndim() != 1 || w.dim(0) != a.dim(0)) {
    throw std::invalid_argument("mul_rows: weights " + shape_str(w.shape()) +
                                " do not match matrix " + shape_str(a.shape()));
  }
  const int m = a.dim(0), n = a.dim(1);
  std::vector<float> out(a.data().begin(), a.data().end());
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out[static_cast<size_t>(i) * n + j] *= w.at(i);
  auto node = make_node(a.shape(), std::move(out), track({&a, &w}));
  if (node->requires_grad) {
    node->parents = {a.node_ptr(), w.node_ptr()};
    node->backward_fn = [pa = a.node_ptr(), pw = w.node_ptr(), m, n](TensorNode& o) {
      if (pa->requires_grad) {
        pa->ensure_grad();
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < n; ++j)
            pa->grad[static_cast<size_t>(i) * n + j] +=
                o.grad[static_cast<size_t>(i) * n + j] * pw->data[static_cast<size_t>(i)];
      }
      if (pw->requires_grad) {
        pw->ensure_grad();
        for (int i = 0; i < m; ++i) {
          float g = 0.0f;
          for (int j = 0; j < n; ++j)
            g += o.grad[static_cast<size_t>(i) * n + j] * pa->data[static_cast<size_t>(i) * n + j];
          pw->grad[static_cast<size_t>(i)] += g;
        }
      }
    };
  }
  return Tensor(node);
}

namespace {

// C[m x n] += A[m x k] * B[k x n], cache-friendly i-k-j order.
void matmul_accum(const float* a, const float* b, float* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    const float* arow = a + static_cast<size_t>(i) * k;
    float* crow = c + static_cast<size_t>(i) * n;
    for (int l = 0; l < k; ++l) {
      const float av = arow[l];
      if (av == 0.0f) continue;
      const float* brow = b + static_cast<size_t>(l) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[m x k] += A[m x n] * B^T where B is [k x n] (dot products of rows).
void matmul_nt_accum(const float* a, const float* b, float* c, int m, int n, int k) {
  for (int i = 0; i < m; ++i) {
    const float* arow = a + static_cast<size_t>(i) * n;
    float* crow = c + static_cast<size_t>(i) * k;
    for (int l = 0; l < k; ++l) {
      const float* brow = b + static_cast<size_t>(l) * n;
      float acc = 0.0f;
      for (int j = 0; j < n; ++j) acc += arow[j] * brow[j];
      crow[l] += acc;
    }
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_2d("matmul", a);
  check_2d("matmul", b);
  if (a.dim(1) != b.dim(0)) {
    throw std::invalid_argument("matmul: inner dimensions differ: " +
                                shape_str(a.shape()) + " vs " +
                                shape_str(b.shape()));
  }
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<float> out(static_cast<size_t>(m) * n, 0.0f);
  matmul_accum(a.data().data(), b.data().data(), out.data(), m, k, n);
  auto node = make_node({m, n}, std::move(out), track({&a, &b}));
  if (node->requires_grad) {
    node->parents = {a.node_ptr(), b.node_ptr()};
    node->backward_fn = [pa = a.node_ptr(), pb = b.node_ptr(), m, k, n](TensorNode& o) {
      if (pa->requires_grad) {
        pa->ensure_grad();
        // dA = dC * B^T
        matmul_nt_accum(o.grad.data(), pb->data.data(), pa->grad.data(), m, n, k);
      }
      if (pb->requires_grad) {
        pb->ensure_grad();
        // dB = A^T * dC: dB[l,:] += A[i,l] * dC[i,:]
        for (int i = 0; i < m; ++i) {
          const float* grow = o.grad.data() + static_cast<size_t>(i) * n;
          const float* arow = pa->data.data() + static_cast<size_t>(i) * k;
          for (int l = 0; l < k; ++l) {
            const float av = arow[l];
            if (av == 0.0f) continue;
            float* brow = pb->grad.data() + static_cast<size_t>(l) * n;
            for (int j = 0; j < n; ++j) brow[j] += av * grow[j];
          }
        }
      }
    };
  }
  return Tensor(node);
}

Tensor transpose(const Tensor& a) {
  check_2d("transpose", a);
  const int m = a.dim(0), n = a.dim(1);
  std::vector<float> out(static_cast<size_t>(m) * n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      out[static_cast<size_t>(j) * m + i] = a.at(i, j);
  auto node = make_node({n, m}, std::move(out), track({&a}));
  if (node->requires_grad) {
    node->parents = {a.node_ptr()};
    node->backward_fn = [pa = a.node_ptr(), m, n](TensorNode& o) {
      pa->ensure_grad();
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j)
          pa->grad[static_cast<size_t>(j) * n + i] += o.grad[static_cast<size_t>(i) * m + j];
    };
  }
  return Tensor(node);
}

Tensor gather_rows(const Tensor& x, std::vector<int> indices) {
  check_2d("gather_rows", x);
  const int m = x.dim(0), n = x.dim(1);
  for (int idx : indices) {
    if (idx < 0 || idx >= m) {
      throw std::invalid_argument("gather_rows: index " + std::to_string(idx) +
                                  " out of range for " + shape_str(x.shape()));
    }
  }
  const int k = static_cast<int>(indices.size());
  std::vector<float> out(static_cast<size_t>(k) * n);
  for (int i = 0; i < k; ++i)
    std::copy_n(x.data().data() + static_cast<size_t>(indices[static_cast<size_t>(i)]) * n,
                n, out.data() + static_cast<size_t>(i) * n);
  auto node = make_node({k, n}, std::move(out), track({&x}));
  if (node->requires_grad) {
    node->parents = {x.node_ptr()};
    node->backward_fn = [px = x.node_ptr(), idx = std::move(indices), n](TensorNode& o) {
      px->ensure_grad();
      for (size_t i = 0; i < idx.size(); ++i) {
        float* dst = px->grad.data() + static_cast<size_t>(idx[i]) * n;
        const float* src = o.grad.data() + i * static_cast<size_t>(n);
        for (int j = 0; j < n; ++j) dst[j] += src[j];
      }
    };
  }
  return Tensor(node);
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no parts");
  const int n = parts.front().dim(1);
  int m = 0;
  bool rg = false;
  for (const Tensor& p : parts) {
    check_2d("concat_rows", p);
    if (p.dim(1) != n) {
      throw std::invalid_argument("concat_rows: column mismatch " +
                                  shape_str(p.shape()) + " vs " +
                                  shape_str(parts.front().shape()));
    }
    m += p.dim(0);
    rg = rg || p.requires_grad();
  }
  std::vector<float> out;
  out.reserve(static_cast<size_t>(m) * n);
  for (const Tensor& p : parts) out.insert(out.end(), p.data().begin(), p.data().end());
  auto node = make_node({m, n}, std::move(out), rg && grad_enabled());
  if (node->requires_grad) {
    std::vector<NodePtr> ps;
    for (const Tensor& p : parts) ps.push_back(p.node_ptr());
    node->parents = ps;
    node->backward_fn = [ps, n](TensorNode& o) {
      size_t off = 0;
      for (const NodePtr& p : ps) {
        const size_t len = p->data.size();
        if (p->requires_grad) {
          p->ensure_grad();
          for (size_t i = 0; i < len; ++i) p->grad[i] += o.grad[off + i];
        }
        off += len;
      }
    };
  }
  return Tensor(node);
}

Tensor slice_cols(const Tensor& x, int c0, int c1) {
  check_2d("slice_cols", x);
  const int m = x.dim(0), n = x.dim(1);
  if (c0 < 0 || c1 > n || c0 >= c1) {
    throw std::invalid_argument("slice_cols: bad range [" + std::to_string(c0) +
                                "," + std::to_string(c1) + ") for " +
                                shape_str(x.shape()));
  }
  const int w = c1 - c0;
  std::vector<float> out(static_cast<size_t>(m) * w);
  for (int i = 0; i < m; ++i)
    std::copy_n(x.data().data() + static_cast<size_t>(i) * n + c0, w,
                out.data() + static_cast<size_t>(i) * w);
  auto node = make_node({m, w}, std::move(out), track({&x}));
  if (node->requires_grad) {
    node->parents = {x.node_ptr()};
    node->backward_fn = [px = x.node_ptr(), m, n, c0, w](TensorNode& o) {
      px->ensure_grad();
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < w; ++j)
          px->grad[static_cast<size_t>(i) * n + c0 + j] += o.grad[static_cast<size_t>(i) * w + j];
    };
  }
  return Tensor(node);
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no parts");
  const int m = parts.front().dim(0);
  int n = 0;
  bool rg = false;
  for (const Tensor& p : parts) {
    check_2d("concat_cols", p);
    if (p.dim(0) != m) {
      throw std::invalid_argument("concat_cols: row mismatch " +
                                  shape_str(p.shape()) + " vs " +
                                  shape_str(parts.front().shape()));
    }
    n += p.dim(1);
    rg = rg || p.requires_grad();
  }
  std::vector<float> out(static_cast<size_t>(m) * n);
  int coff = 0;
  for (const Tensor& p : parts) {
    const int w = p.dim(1);
    for (int i = 0; i < m; ++i)
      std::copy_n(p.data().data() + static_cast<size_t>(i) * w, w,
                  out.data() + static_cast<size_t>(i) * n + coff);
    coff += w;
  }
  auto node = make_node({m, n}, std::move(out), rg && grad_enabled());
  if (node->requires_grad) {
    std::vector<NodePtr> ps;
    std::vector<int> widths;
    for (const Tensor& p : parts) {
      ps.push_back(p.node_ptr());
      widths.push_back(p.dim(1));
    }
    node->parents = ps;
    node->backward_fn = [ps, widths, m, n](TensorNode& o) {
      int off = 0;
      for (size_t pi = 0; pi < ps.size(); ++pi) {
        const int w = widths[pi];
        if (ps[pi]->requires_grad) {
          ps[pi]->ensure_grad();
          for (int i = 0; i < m; ++i)
            for (int j = 0; j < w; ++j)
              ps[pi]->grad[static_cast<size_t>(i) * w + j] +=
                  o.grad[static_cast<size_t>(i) * n + off + j];
        }
        off += w;
      }
    };
  }
  return Tensor(node);
}

Tensor softmax_lastdim(const Tensor& x) {
  const int c = last_dim(x);
  if (c < 1) throw std::invalid_argument("softmax_lastdim: empty last dim");
  const int64_t rows = x.numel() / c;
  std::vector<float> out(static_cast<size_t>(x.numel()));
  for (int64_t r = 0; r < rows; ++r) {
    const float* in = x.data().data() + r * c;
    float* o = out.data() + r * c;
    float mx = in[0];
    for (int j = 1; j < c; ++j) mx = std::max(mx, in[j]);
    double sum = 0.0;
    for (int j = 0; j < c; ++j) {
      o[j] = std::exp(in[j] - mx);
      sum += o[j];
    }
    const float inv = static_cast<float>(1.0 / sum);
    for (int j = 0; j < c; ++j) o[j] *= inv;
  }
  auto node = make_node(x.shape(), std::move(out), track({&x}));
  if (node->requires_grad) {
    node->parents = {x.node_ptr()};
    node->backward_fn = [px = x.node_ptr(), rows, c](TensorNode& o) {
      px->ensure_grad();
      for (int64_t r = 0; r < rows; ++r) {
        const float* y = o.data.data() + r * c;
        const float* gy = o.grad.data() + r * c;
        float* gx = px->grad.data() + r * c;
        double dot = 0.0;
        for (int j = 0; j < c; ++j) dot += static_cast<double>(gy[j]) * y[j];
        for (int j = 0; j < c; ++j)
          gx[j] += y[j] * (gy[j] - static_cast<float>(dot));
      }
    };
  }
  return Tensor(node);
}

Tensor causal_softmax(const Tensor& scores) {
  check_2d("causal_softmax", scores);
  if (scores.dim(0) != scores.dim(1)) {
    throw std::invalid_argument("causal_softmax: matrix must be square, got " +
                                shape_str(scores.shape()));
  }
  const int L = scores.dim(0);
  std::vector<float> out(static_cast<size_t>(L) * L, 0.0f);
  for (int i = 0; i < L; ++i) {
    const float* in = scores.data().data() + static_cast<size_t>(i) * L;
    float* o = out.data() + static_cast<size_t>(i) * L;
    float mx = in[0];
    for (int j = 1; j <= i; ++j) mx = std::max(mx, in[j]);
    double sum = 0.0;
    for (int j = 0; j <= i; ++j) {
      o[j] = std::exp(in[j] - mx);
      sum += o[j];
    }
    const float inv = static_cast<float>(1.0 / sum);
    for (int j = 0; j <= i; ++j) o[j] *= inv;
  }
  auto node = make_node(scores.shape(), std::move(out), track({&scores}));
  if (node->requires_grad) {
    node->parents = {scores.node_ptr()};
    node->backward_fn = [px = scores.node_ptr(), L](TensorNode& o) {
      px->ensure_grad();
      for (int i = 0; i < L; ++i) {
        const float* y = o.data.data() + static_cast<size_t>(i) * L;
        const float* gy = o.grad.data() + static_cast<size_t>(i) * L;
        float* gx = px->grad.data() + static_cast<size_t>(i) * L;
        double dot = 0.0;
        for (int j = 0; j <= i; ++j) dot += static_cast<double>(gy[j]) * y[j];
        for (int j = 0; j <= i; ++j)
          gx[j] += y[j] * (gy[j] - static_cast<float>(dot));
      }
    };
  }
  return Tensor(node);
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  float eps) {
  const int c = last_dim(x);
  if (gain.numel() != c || bias.numel() != c) {
    throw std::invalid_argument("layer_norm: gain/bias " + shape_str(gain.shape()) +
                                "/" + shape_str(bias.shape()) +
                                " do not match last dim of " + shape_str(x.shape()));
  }
  const int64_t rows = x.numel() / c;
  std::vector<float> out(static_cast<size_t>(x.numel()));
  std::vector<float> xhat(static_cast<size_t>(x.numel()));
  std::vector<float> rstd(static_cast<size_t>(rows));
  for (int64_t r = 0; r < rows; ++r) {
    const float* in = x.data().data() + r * c;
    double mean = 0.0;
    for (int j = 0; j < c; ++j) mean += in[j];
    mean /= c;
    double var = 0.0;
    for (int j = 0; j < c; ++j) {
      const double d = in[j] - mean;
      var += d * d;
    }
    var /= c;
    const float rs = static_cast<float>(1.0 / std::sqrt(var + eps));
    rstd[static_cast<size_t>(r)] = rs;
    for (int j = 0; j < c; ++j) {
      const float xh = (in[j] - static_cast<float>(mean)) * rs;
      xhat[static_cast<size_t>(r * c + j)] = xh;
      out[static_cast<size_t>(r * c + j)] = xh * gain.at(j) + bias.at(j);
    }
  }
  auto node = make_node(x.shape(), std::move(out), track({&x, &gain, &bias}));
  if (node->requires_grad) {
    node->parents = {x.node_ptr(), gain.node_ptr(), bias.node_ptr()};
    node->backward_fn = [px = x.node_ptr(), pg = gain.node_ptr(), pb = bias.node_ptr(),
                         xh = std::move(xhat), rs = std::move(rstd), rows, c](TensorNode& o) {
      if (pg->requires_grad) pg->ensure_grad();
      if (pb->requires_grad) pb->ensure_grad();
      if (px->requires_grad) px->ensure_grad();
      for (int64_t r = 0; r < rows; ++r) {
        const float* gy = o.grad.data() + r * c;
        const float* xhr = xh.data() + r * c;
        if (pg->requires_grad || pb->requires_grad) {
          for (int j = 0; j < c; ++j) {
            if (pg->requires_grad) pg->grad[static_cast<size_t>(j)] += gy[j] * xhr[j];
            if (pb->requires_grad) pb->grad[static_cast<size_t>(j)] += gy[j];
          }
        }
        if (px->requires_grad) {
          // dxhat = gy * gain; dx = (dxhat - mean(dxhat) - xhat*mean(dxhat*xhat)) * rstd
          double m1 = 0.0, m2 = 0.0;
          for (int j = 0; j < c; ++j) {
            const double dxh = static_cast<double>(gy[j]) * pg->data[static_cast<size_t>(j)];
            m1 += dxh;
            m2 += dxh * xhr[j];
          }
          m1 /= c;
          m2 /= c;
          float* gx = px->grad.data() + r * c;
          for (int j = 0; j < c; ++j) {
            const double dxh = static_cast<double>(gy[j]) * pg->data[static_cast<size_t>(j)];
            gx[j] += static_cast<float>((dxh - m1 - xhr[j] * m2) * rs[static_cast<size_t>(r)]);
          }
        }
      }
    };
  }
  return Tensor(node);
}

Tensor gelu(const Tensor& x) {
  constexpr float kInvSqrt2 = 0.70710678118654752440f;
  constexpr float kInvSqrt2Pi = 0.39894228040143267794f;
  std::vector<float> out(static_cast<size_t>(x.numel()));
  for (size_t i = 0; i < out.size(); ++i) {
    const float v = x.at(static_cast<int64_t>(i));
    out[i] = 0.5f * v * (1.0f + std::erf(v * kInvSqrt2));
  }
  auto node = make_node(x.shape(), std::move(out), track({&x}));
  if (node->requires_grad) {
    node->parents = {x.node_ptr()};
    node->backward_fn = [px = x.node_ptr(), kInvSqrt2, kInvSqrt2Pi](TensorNode& o) {
      px->ensure_grad();
      for (size_t i = 0; i < o.grad.size(); ++i) {
        const float v = px->data[i];
        const float cdf = 0.5f * (1.0f + std::erf(v * kInvSqrt2));
        const float pdf = kInvSqrt2Pi * std::exp(-0.5f * v * v);
        px->grad[i] += o.grad[i] * (cdf + v * pdf);
      }
    };
  }
  return Tensor(node);
}

Tensor tanh_op(const Tensor& x) {
  std::vector<float> out(static_cast<size_t>(x.numel()));
  for (size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(x.at(static_cast<int64_t>(i)));
  auto node = make_node(x.shape(), std::move(out), track({&x}));
  if (node->requires_grad) {
    node->parents = {x.node_ptr()};
    node->backward_fn = [px = x.node_ptr()](TensorNode& o) {
      px->ensure_grad();
      for (size_t i = 0; i < o.grad.size(); ++i)
        px->grad[i] += o.grad[i] * (1.0f - o.data[i] * o.data[i]);
    };
  }
  return Tensor(node);
}

Tensor sum_all(const Tensor& x) {
  double s = 0.0;
  for (float v : x.data()) s += v;
  auto node = make_node({1}, {static_cast<float>(s)}, track({&x}));
  if (node->requires_grad) {
    node->parents = {x.node_ptr()};
    node->backward_fn = [px = x.node_ptr()](TensorNode& o) {
      px->ensure_grad();
      for (auto& g : px->grad) g += o.grad[0];
    };
  }
  return Tensor(node);
}

Tensor mean_of(const std::vector<Tensor>& scalars) {
  if (scalars.empty()) throw std::invalid_argument("mean_of: empty list");
  double s = 0.0;
  bool rg = false;
  for (const Tensor& t : scalars) {
    s += t.item();
    rg = rg || t.requires_grad();
  }
  const float inv = 1.0f / static_cast<float>(scalars.size());
  auto node = make_node({1}, {static_cast<float>(s) * inv}, rg && grad_enabled());
  if (node->requires_grad) {
    std::vector<NodePtr> ps;
    for (const Tensor& t : scalars) ps.push_back(t.node_ptr());
    node->parents = ps;
    node->backward_fn = [ps, inv](TensorNode& o) {
      for (const NodePtr& p : ps) {
        if (!p->requires_grad) continue;
        p->ensure_grad();
        p->grad[0] += o.grad[0] * inv;
      }
    };
  }
  return Tensor(node);
}

Tensor cross_entropy_rows(const Tensor& logits, const std::vector<int>& targets) {
  check_2d("cross_entropy_rows", logits);
  const int rows = logits.dim(0), c = logits.dim(1);
  if (static_cast<int>(targets.size()) != rows) {
    throw std::invalid_argument("cross_entropy_rows: " + std::to_string(targets.size()) +
                                " targets for " + std::to_string(rows) + " rows");
  }
  std::vector<float> probs(static_cast<size_t>(rows) * c);
  double loss = 0.0;
  for (int r = 0; r < rows; ++r) {
    const int t = targets[static_cast<size_t>(r)];
    if (t < 0 || t >= c) {
      throw std::invalid_argument("cross_entropy_rows: target " + std::to_string(t) +
                                  " out of range for " + std::to_string(c) + " classes");
    }
    const float* in = logits.data().data() + static_cast<size_t>(r) * c;
    float* p = probs.data() + static_cast<size_t>(r) * c;
    float mx = in[0];
    for (int j = 1; j < c; ++j) mx = std::max(mx, in[j]);
    double sum = 0.0;
    for (int j = 0; j < c; ++j) {
      p[j] = std::exp(in[j] - mx);
      sum += p[j];
    }
    const float inv = static_cast<float>(1.0 / sum);
    for (int j = 0; j < c; ++j) p[j] *= inv;
    loss -= std::log(std::max(1e-30, static_cast<double>(p[t])));
  }
  loss /= rows;
  auto node = make_node({1}, {static_cast<float>(loss)}, track({&logits}));
  if (node->requires_grad) {
    node->parents = {logits.node_ptr()};
    node->backward_fn = [px = logits.node_ptr(), pr = std::move(probs),
                         tg = targets, rows, c](TensorNode& o) {
      px->ensure_grad();
      const float g = o.grad[0] / static_cast<float>(rows);
      for (int r = 0; r < rows; ++r) {
        const float* p = pr.data() + static_cast<size_t>(r) * c;
        float* gx = px->grad.data() + static_cast<size_t>(r) * c;
        for (int j = 0; j < c; ++j) gx[j] += g * p[j];
        gx[tg[static_cast<size_t>(r)]] -= g;
      }
    };
  }
  return Tensor(node);
}

void backward(const Tensor& loss, float seed) {
  TensorNode* root = loss.node();
  if (root == nullptr) throw std::invalid_argument("backward: undefined tensor");
  if (root->numel() != 1) {
    throw std::invalid_argument("backward: loss must be scalar, got " +
                                shape_str(root->shape));
  }
  if (root->consumed) {
    throw std::invalid_argument("backward: stale tape (already consumed; run a new forward)");
  }
  if (!root->requires_grad) {
    throw std::invalid_argument("backward: loss is not recorded on the tape");
  }

  // Reverse topological order: every op appears after all ops it feeds.
  std::vector<TensorNode*> tape;
  std::unordered_set<TensorNode*> visited;
  std::vector<std::pair<TensorNode*, size_t>> stack;
  stack.emplace_back(root, 0);
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      TensorNode* p = node->parents[next].get();
      ++next;
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      tape.push_back(node);
      stack.pop_back();
    }
  }

  root->ensure_grad();
  root->grad[0] += seed;
  for (auto it = tape.rbegin(); it != tape.rend(); ++it) {
    TensorNode* n = *it;
    if (n->backward_fn) n->backward_fn(*n);
  }
  // Clear the tape: interior nodes may not be backed through again, leaves
  // (parameters) stay live for the optimizer.
  for (TensorNode* n : tape) {
    if (n->backward_fn) {
      n->backward_fn = nullptr;
      n->parents.clear();
      n->consumed = true;
    }
  }
  if (root->parents.empty() && !root->backward_fn) root->consumed = true;
}

}  // namespace trajllm
