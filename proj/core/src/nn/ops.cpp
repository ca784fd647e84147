#include "fddm/nn/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <string>

#include "fddm/error.hpp"

namespace fddm::nn {

namespace {

using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

void require_shape(const Var& a, const Var& b, const char* what) {
  if (!(a->shape() == b->shape())) {
    throw Error(ErrorKind::DimensionMismatch,
                std::string(what) + ": " + a->shape().str() + " vs " + b->shape().str());
  }
}

Var scalar_node(double v, std::vector<Var> parents, std::function<void(Node&)> fn) {
  Tensor t(Shape{1, 1, 1, 1});
  t.data[0] = static_cast<float>(v);
  return make_node(std::move(t), std::move(parents), std::move(fn));
}

template <typename F, typename G>
Var unary(const Var& x, F f, G dfdx_from_xy) {
  Tensor y(x->shape());
  const auto& xv = x->value.data;
  for (std::size_t i = 0; i < xv.size(); ++i) y.data[i] = f(xv[i]);
  return make_node(std::move(y), {x}, [dfdx_from_xy](Node& self) {
    Node& px = *self.parents[0];
    if (!px.requires_grad) return;
    auto& gx = px.grad_buffer().data;
    const auto& xv = px.value.data;
    const auto& yv = self.value.data;
    const auto& gy = self.grad.data;
    for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] * dfdx_from_xy(xv[i], yv[i]);
  });
}

// Column buffer [Cin*K*K, Ho*Wo] of one sample; every entry is written.
void im2col(const float* x, int c, int h, int w, int k, int stride, int pad, int ho, int wo,
            float* col) {
  const std::size_t plane = static_cast<std::size_t>(ho) * wo;
  for (int ci = 0; ci < c; ++ci) {
    const float* src = x + static_cast<std::size_t>(ci) * h * w;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        float* dst = col + ((static_cast<std::size_t>(ci) * k + ky) * k + kx) * plane;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * stride - pad + ky;
          float* row = dst + static_cast<std::size_t>(oy) * wo;
          if (iy < 0 || iy >= h) {
            std::fill(row, row + wo, 0.0f);
            continue;
          }
          const float* line = src + static_cast<std::size_t>(iy) * w;
          if (stride == 1) {
            const int lo = std::clamp(pad - kx, 0, wo);
            const int hi = std::clamp(w + pad - kx, lo, wo);
            std::fill(row, row + lo, 0.0f);
            std::copy(line + lo - pad + kx, line + hi - pad + kx, row + lo);
            std::fill(row + hi, row + wo, 0.0f);
          } else {
            for (int ox = 0; ox < wo; ++ox) {
              const int ix = ox * stride - pad + kx;
              row[ox] = (ix < 0 || ix >= w) ? 0.0f : line[ix];
            }
          }
        }
      }
    }
  }
}

void col2im(const float* col, int c, int h, int w, int k, int stride, int pad, int ho, int wo,
            float* dx) {
  const std::size_t plane = static_cast<std::size_t>(ho) * wo;
  for (int ci = 0; ci < c; ++ci) {
    float* dst = dx + static_cast<std::size_t>(ci) * h * w;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const float* src = col + ((static_cast<std::size_t>(ci) * k + ky) * k + kx) * plane;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= h) continue;
          const float* row = src + static_cast<std::size_t>(oy) * wo;
          float* line = dst + static_cast<std::size_t>(iy) * w;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * stride - pad + kx;
            if (ix >= 0 && ix < w) line[ix] += row[ox];
          }
        }
      }
    }
  }
}

// Scratch reused across calls; the engine is single-threaded per tape.
FloatBuffer& scratch(int slot, std::size_t size) {
  thread_local FloatBuffer buffers[2];
  auto& b = buffers[slot];
  if (b.size() < size) b.resize(size);
  return b;
}

}  // namespace

// Per-sample lowering: out_n [Cout, Ho*Wo] = W [Cout, Cin*K*K] * col_n.
// Columns are rebuilt in the backward pass instead of being stored.
Var conv2d(const Var& x, const Var& weight, const Var& bias, int stride, int pad) {
  const Shape xs = x->shape();
  const Shape ws = weight->shape();
  if (ws.c != xs.c || ws.h != ws.w) {
    throw Error(ErrorKind::DimensionMismatch,
                "conv2d: input " + xs.str() + " vs weight " + ws.str());
  }
  const int k = ws.h;
  const int ho = (xs.h + 2 * pad - k) / stride + 1;
  const int wo = (xs.w + 2 * pad - k) / stride + 1;
  if (ho <= 0 || wo <= 0) throw Error(ErrorKind::DimensionMismatch, "conv2d: empty output");
  const int cout = ws.n;
  const int patch = xs.c * k * k;
  const int plane = ho * wo;
  const bool direct = (k == 1 && stride == 1 && pad == 0);

  Tensor y(Shape{xs.n, cout, ho, wo});
  const ConstMatrixMap wmat(weight->value.data.data(), cout, patch);
  for (int n = 0; n < xs.n; ++n) {
    const float* col = x->value.sample(n);
    if (!direct) {
      float* buf = scratch(0, static_cast<std::size_t>(patch) * plane).data();
      im2col(col, xs.c, xs.h, xs.w, k, stride, pad, ho, wo, buf);
      col = buf;
    }
    MatrixMap out(y.sample(n), cout, plane);
    out.noalias() = wmat * ConstMatrixMap(col, patch, plane);
    if (bias) {
      for (int co = 0; co < cout; ++co) out.row(co).array() += bias->value.data[co];
    }
  }

  std::vector<Var> parents = {x, weight};
  if (bias) parents.push_back(bias);
  return make_node(std::move(y), std::move(parents), [direct, k, stride, pad, ho, wo, cout, patch,
                                                      plane](Node& self) {
    Node& px = *self.parents[0];
    Node& pw = *self.parents[1];
    const Shape xs = px.value.shape;
    const ConstMatrixMap wmat(pw.value.data.data(), cout, patch);
    for (int n = 0; n < xs.n; ++n) {
      const ConstMatrixMap dy(self.grad.sample(n), cout, plane);
      if (pw.requires_grad) {
        const float* col = px.value.sample(n);
        if (!direct) {
          float* buf = scratch(0, static_cast<std::size_t>(patch) * plane).data();
          im2col(col, xs.c, xs.h, xs.w, k, stride, pad, ho, wo, buf);
          col = buf;
        }
        MatrixMap(pw.grad_buffer().data.data(), cout, patch).noalias() +=
            dy * ConstMatrixMap(col, patch, plane).transpose();
      }
      if (self.parents.size() > 2 && self.parents[2]->requires_grad) {
        auto& gb = self.parents[2]->grad_buffer().data;
        for (int co = 0; co < cout; ++co) gb[co] += dy.row(co).sum();
      }
      if (px.requires_grad) {
        float* gx = px.grad_buffer().sample(n);
        if (direct) {
          MatrixMap(gx, patch, plane).noalias() += wmat.transpose() * dy;
        } else {
          float* dcol = scratch(1, static_cast<std::size_t>(patch) * plane).data();
          MatrixMap(dcol, patch, plane).noalias() = wmat.transpose() * dy;
          col2im(dcol, xs.c, xs.h, xs.w, k, stride, pad, ho, wo, gx);
        }
      }
    }
  });
}

Var upsample_nearest(const Var& x) {
  const Shape s = x->shape();
  Tensor y(Shape{s.n, s.c, 2 * s.h, 2 * s.w});
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const float* src = x->value.channel(n, c);
      float* dst = y.channel(n, c);
      for (int yy = 0; yy < 2 * s.h; ++yy) {
        for (int xx = 0; xx < 2 * s.w; ++xx) dst[yy * 2 * s.w + xx] = src[(yy / 2) * s.w + xx / 2];
      }
    }
  }
  return make_node(std::move(y), {x}, [](Node& self) {
    Node& px = *self.parents[0];
    const Shape s = px.value.shape;
    Tensor& gx = px.grad_buffer();
    for (int n = 0; n < s.n; ++n) {
      for (int c = 0; c < s.c; ++c) {
        const float* src = self.grad.channel(n, c);
        float* dst = gx.channel(n, c);
        for (int yy = 0; yy < 2 * s.h; ++yy) {
          for (int xx = 0; xx < 2 * s.w; ++xx) dst[(yy / 2) * s.w + xx / 2] += src[yy * 2 * s.w + xx];
        }
      }
    }
  });
}

Var add(const Var& a, const Var& b) {
  require_shape(a, b, "add");
  Tensor y(a->shape());
  for (std::size_t i = 0; i < y.numel(); ++i) y.data[i] = a->value.data[i] + b->value.data[i];
  return make_node(std::move(y), {a, b}, [](Node& self) {
    for (auto& p : self.parents) {
      if (!p->requires_grad) continue;
      auto& g = p->grad_buffer().data;
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad.data[i];
    }
  });
}

Var sub(const Var& a, const Var& b) {
  require_shape(a, b, "sub");
  Tensor y(a->shape());
  for (std::size_t i = 0; i < y.numel(); ++i) y.data[i] = a->value.data[i] - b->value.data[i];
  return make_node(std::move(y), {a, b}, [](Node& self) {
    if (self.parents[0]->requires_grad) {
      auto& g = self.parents[0]->grad_buffer().data;
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad.data[i];
    }
    if (self.parents[1]->requires_grad) {
      auto& g = self.parents[1]->grad_buffer().data;
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad.data[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  require_shape(a, b, "mul");
  Tensor y(a->shape());
  for (std::size_t i = 0; i < y.numel(); ++i) y.data[i] = a->value.data[i] * b->value.data[i];
  return make_node(std::move(y), {a, b}, [](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    if (pa.requires_grad) {
      auto& g = pa.grad_buffer().data;
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad.data[i] * pb.value.data[i];
    }
    if (pb.requires_grad) {
      auto& g = pb.grad_buffer().data;
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad.data[i] * pa.value.data[i];
    }
  });
}

Var scale(const Var& x, float s) {
  Tensor y(x->shape());
  for (std::size_t i = 0; i < y.numel(); ++i) y.data[i] = s * x->value.data[i];
  return make_node(std::move(y), {x}, [s](Node& self) {
    auto& g = self.parents[0]->grad_buffer().data;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += s * self.grad.data[i];
  });
}

Var add_channel_bias(const Var& x, const Var& v) {
  const Shape s = x->shape();
  const Shape vs = v->shape();
  if (vs.n != s.n || vs.c != s.c || vs.h != 1 || vs.w != 1) {
    throw Error(ErrorKind::DimensionMismatch,
                "add_channel_bias: " + s.str() + " vs " + vs.str());
  }
  Tensor y = x->value;
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const float b = v->value.data[static_cast<std::size_t>(n) * s.c + c];
      float* dst = y.channel(n, c);
      for (std::size_t i = 0; i < s.plane(); ++i) dst[i] += b;
    }
  }
  return make_node(std::move(y), {x, v}, [](Node& self) {
    Node& px = *self.parents[0];
    Node& pv = *self.parents[1];
    const Shape s = px.value.shape;
    if (px.requires_grad) {
      auto& g = px.grad_buffer().data;
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad.data[i];
    }
    if (pv.requires_grad) {
      auto& g = pv.grad_buffer().data;
      for (int n = 0; n < s.n; ++n) {
        for (int c = 0; c < s.c; ++c) {
          const float* src = self.grad.channel(n, c);
          double acc = 0.0;
          for (std::size_t i = 0; i < s.plane(); ++i) acc += src[i];
          g[static_cast<std::size_t>(n) * s.c + c] += static_cast<float>(acc);
        }
      }
    }
  });
}

Var concat_channels(const std::vector<Var>& parts) {
  if (parts.empty()) throw Error(ErrorKind::DimensionMismatch, "concat_channels: no inputs");
  Shape s = parts.front()->shape();
  int channels = 0;
  for (const auto& p : parts) {
    const Shape ps = p->shape();
    if (ps.n != s.n || ps.h != s.h || ps.w != s.w) {
      throw Error(ErrorKind::DimensionMismatch,
                  "concat_channels: " + s.str() + " vs " + ps.str());
    }
    channels += ps.c;
  }
  Tensor y(Shape{s.n, channels, s.h, s.w});
  for (int n = 0; n < s.n; ++n) {
    int offset = 0;
    for (const auto& p : parts) {
      const float* src = p->value.sample(n);
      std::copy(src, src + p->shape().c * s.plane(), y.channel(n, offset));
      offset += p->shape().c;
    }
  }
  return make_node(std::move(y), parts, [](Node& self) {
    const Shape s = self.value.shape;
    int offset = 0;
    for (auto& p : self.parents) {
      const int pc = p->value.shape.c;
      if (p->requires_grad) {
        Tensor& g = p->grad_buffer();
        for (int n = 0; n < s.n; ++n) {
          const float* src = self.grad.channel(n, offset);
          float* dst = g.sample(n);
          for (std::size_t i = 0; i < pc * s.plane(); ++i) dst[i] += src[i];
        }
      }
      offset += pc;
    }
  });
}

Var slice_channels(const Var& x, int first, int count) {
  const Shape s = x->shape();
  if (first < 0 || count <= 0 || first + count > s.c) {
    throw Error(ErrorKind::DimensionMismatch, "slice_channels out of range on " + s.str());
  }
  Tensor y(Shape{s.n, count, s.h, s.w});
  for (int n = 0; n < s.n; ++n) {
    const float* src = x->value.channel(n, first);
    std::copy(src, src + count * s.plane(), y.sample(n));
  }
  return make_node(std::move(y), {x}, [first, count](Node& self) {
    Node& px = *self.parents[0];
    const Shape s = px.value.shape;
    Tensor& g = px.grad_buffer();
    for (int n = 0; n < s.n; ++n) {
      const float* src = self.grad.sample(n);
      float* dst = g.channel(n, first);
      for (std::size_t i = 0; i < count * s.plane(); ++i) dst[i] += src[i];
    }
  });
}

Var concat_batch(const std::vector<Var>& parts) {
  if (parts.empty()) throw Error(ErrorKind::DimensionMismatch, "concat_batch: no inputs");
  const Shape s = parts.front()->shape();
  int total = 0;
  for (const auto& p : parts) {
    const Shape ps = p->shape();
    if (ps.c != s.c || ps.h != s.h || ps.w != s.w) {
      throw Error(ErrorKind::DimensionMismatch, "concat_batch: " + s.str() + " vs " + ps.str());
    }
    total += ps.n;
  }
  Tensor y(Shape{total, s.c, s.h, s.w});
  std::size_t offset = 0;
  for (const auto& p : parts) {
    std::copy(p->value.data.begin(), p->value.data.end(), y.data.begin() + offset);
    offset += p->value.numel();
  }
  return make_node(std::move(y), parts, [](Node& self) {
    std::size_t offset = 0;
    for (auto& p : self.parents) {
      const std::size_t m = p->value.numel();
      if (p->requires_grad) {
        auto& g = p->grad_buffer().data;
        for (std::size_t i = 0; i < m; ++i) g[i] += self.grad.data[offset + i];
      }
      offset += m;
    }
  });
}

Var leaky_relu(const Var& x, float slope) {
  return unary(
      x, [slope](float v) { return v > 0.0f ? v : slope * v; },
      [slope](float v, float) { return v > 0.0f ? 1.0f : slope; });
}

Var relu(const Var& x) { return leaky_relu(x, 0.0f); }

Var silu(const Var& x) {
  return unary(
      x, [](float v) { return v / (1.0f + std::exp(-v)); },
      [](float v, float) {
        const float s = 1.0f / (1.0f + std::exp(-v));
        return s * (1.0f + v * (1.0f - s));
      });
}

Var tanh(const Var& x) {
  return unary(
      x, [](float v) { return std::tanh(v); }, [](float, float y) { return 1.0f - y * y; });
}

Var sigmoid(const Var& x) {
  return unary(
      x, [](float v) { return 1.0f / (1.0f + std::exp(-v)); },
      [](float, float y) { return y * (1.0f - y); });
}

Var group_norm(const Var& x, const Var& gamma, const Var& beta, int groups, float eps) {
  const Shape s = x->shape();
  if (groups <= 0 || s.c % groups != 0) {
    throw Error(ErrorKind::DimensionMismatch,
                "group_norm: " + std::to_string(s.c) + " channels, " + std::to_string(groups) +
                    " groups");
  }
  const int cpg = s.c / groups;
  const std::size_t group_size = static_cast<std::size_t>(cpg) * s.plane();
  auto xhat = std::make_shared<FloatBuffer>(s.numel());
  auto inv_std = std::make_shared<FloatBuffer>(static_cast<std::size_t>(s.n) * groups);
  Tensor y(s);
  for (int n = 0; n < s.n; ++n) {
    for (int g = 0; g < groups; ++g) {
      const std::size_t base =
          static_cast<std::size_t>(n) * s.c * s.plane() + static_cast<std::size_t>(g) * group_size;
      double sum = 0.0, sq = 0.0;
      for (std::size_t i = 0; i < group_size; ++i) {
        const double v = x->value.data[base + i];
        sum += v;
        sq += v * v;
      }
      const double mu = sum / group_size;
      const double var = std::max(0.0, sq / group_size - mu * mu);
      const float istd = static_cast<float>(1.0 / std::sqrt(var + eps));
      (*inv_std)[static_cast<std::size_t>(n) * groups + g] = istd;
      for (int cc = 0; cc < cpg; ++cc) {
        const int c = g * cpg + cc;
        const float ga = gamma->value.data[c];
        const float be = beta->value.data[c];
        for (std::size_t i = 0; i < s.plane(); ++i) {
          const std::size_t idx = base + cc * s.plane() + i;
          const float xh = static_cast<float>((x->value.data[idx] - mu) * istd);
          (*xhat)[idx] = xh;
          y.data[idx] = ga * xh + be;
        }
      }
    }
  }
  return make_node(std::move(y), {x, gamma, beta}, [xhat, inv_std, groups, cpg,
                                                    group_size](Node& self) {
    Node& px = *self.parents[0];
    Node& pg = *self.parents[1];
    Node& pb = *self.parents[2];
    const Shape s = px.value.shape;
    const auto& gy = self.grad.data;
    if (pg.requires_grad || pb.requires_grad) {
      auto& gg = pg.grad_buffer().data;
      auto& gbeta = pb.grad_buffer().data;
      for (int c = 0; c < s.c; ++c) {
        double dg = 0.0, db = 0.0;
        for (int n = 0; n < s.n; ++n) {
          const std::size_t base = (static_cast<std::size_t>(n) * s.c + c) * s.plane();
          for (std::size_t i = 0; i < s.plane(); ++i) {
            dg += gy[base + i] * (*xhat)[base + i];
            db += gy[base + i];
          }
        }
        gg[c] += static_cast<float>(dg);
        gbeta[c] += static_cast<float>(db);
      }
    }
    if (!px.requires_grad) return;
    auto& gx = px.grad_buffer().data;
    const auto& gamma = pg.value.data;
    for (int n = 0; n < s.n; ++n) {
      for (int g = 0; g < groups; ++g) {
        const std::size_t base = static_cast<std::size_t>(n) * s.c * s.plane() +
                                 static_cast<std::size_t>(g) * group_size;
        double sum_d = 0.0, sum_dx = 0.0;
        for (int cc = 0; cc < cpg; ++cc) {
          const float ga = gamma[g * cpg + cc];
          for (std::size_t i = 0; i < s.plane(); ++i) {
            const std::size_t idx = base + cc * s.plane() + i;
            const double d = gy[idx] * ga;
            sum_d += d;
            sum_dx += d * (*xhat)[idx];
          }
        }
        const double mean_d = sum_d / group_size;
        const double mean_dx = sum_dx / group_size;
        const float istd = (*inv_std)[static_cast<std::size_t>(n) * groups + g];
        for (int cc = 0; cc < cpg; ++cc) {
          const float ga = gamma[g * cpg + cc];
          for (std::size_t i = 0; i < s.plane(); ++i) {
            const std::size_t idx = base + cc * s.plane() + i;
            const double d = gy[idx] * ga;
            gx[idx] += static_cast<float>(istd * (d - mean_d - (*xhat)[idx] * mean_dx));
          }
        }
      }
    }
  });
}

namespace {

// dst(x', y') = src(map(x', y')) for a quarter turn; the gradient is the
// inverse permutation.
Var rotate(const Var& x, bool left) {
  const Shape s = x->shape();
  const Shape out_shape{s.n, s.c, s.w, s.h};
  auto source_index = [s, left](int ox, int oy) -> std::size_t {
    // Output is s.h wide and s.w tall.
    const int ix = left ? s.w - 1 - oy : oy;
    const int iy = left ? ox : s.h - 1 - ox;
    return static_cast<std::size_t>(iy) * s.w + ix;
  };
  Tensor y(out_shape);
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const float* src = x->value.channel(n, c);
      float* dst = y.channel(n, c);
      for (int oy = 0; oy < out_shape.h; ++oy) {
        for (int ox = 0; ox < out_shape.w; ++ox) dst[oy * out_shape.w + ox] = src[source_index(ox, oy)];
      }
    }
  }
  return make_node(std::move(y), {x}, [source_index, out_shape](Node& self) {
    Node& px = *self.parents[0];
    Tensor& g = px.grad_buffer();
    for (int n = 0; n < out_shape.n; ++n) {
      for (int c = 0; c < out_shape.c; ++c) {
        const float* src = self.grad.channel(n, c);
        float* dst = g.channel(n, c);
        for (int oy = 0; oy < out_shape.h; ++oy) {
          for (int ox = 0; ox < out_shape.w; ++ox) dst[source_index(ox, oy)] += src[oy * out_shape.w + ox];
        }
      }
    }
  });
}

}  // namespace

Var rotate_left(const Var& x) { return rotate(x, true); }
Var rotate_right(const Var& x) { return rotate(x, false); }

Var detach(const Var& x) { return constant(x->value); }

Var mean_abs_diff(const Var& a, const Var& b) {
  require_shape(a, b, "mean_abs_diff");
  const std::size_t m = a->value.numel();
  double s = 0.0;
  for (std::size_t i = 0; i < m; ++i) s += std::abs(static_cast<double>(a->value.data[i]) - b->value.data[i]);
  return scalar_node(s / m, {a, b}, [m](Node& self) {
    const float g = self.grad.data[0] / static_cast<float>(m);
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    for (std::size_t i = 0; i < m; ++i) {
      const float d = pa.value.data[i] - pb.value.data[i];
      const float sg = d > 0.0f ? g : (d < 0.0f ? -g : 0.0f);
      if (pa.requires_grad) pa.grad_buffer().data[i] += sg;
      if (pb.requires_grad) pb.grad_buffer().data[i] -= sg;
    }
  });
}

Var mean_squared_diff(const Var& a, const Var& b) {
  require_shape(a, b, "mean_squared_diff");
  const std::size_t m = a->value.numel();
  double s = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double d = static_cast<double>(a->value.data[i]) - b->value.data[i];
    s += d * d;
  }
  return scalar_node(s / m, {a, b}, [m](Node& self) {
    const float g = 2.0f * self.grad.data[0] / static_cast<float>(m);
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    for (std::size_t i = 0; i < m; ++i) {
      const float d = g * (pa.value.data[i] - pb.value.data[i]);
      if (pa.requires_grad) pa.grad_buffer().data[i] += d;
      if (pb.requires_grad) pb.grad_buffer().data[i] -= d;
    }
  });
}

Var half_sum_squares(const Var& x) {
  const int batch = x->shape().n;
  double s = 0.0;
  for (float v : x->value.data) s += static_cast<double>(v) * v;
  return scalar_node(0.5 * s / batch, {x}, [batch](Node& self) {
    const float g = self.grad.data[0] / static_cast<float>(batch);
    Node& px = *self.parents[0];
    auto& gx = px.grad_buffer().data;
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g * px.value.data[i];
  });
}

Var mean_softplus(const Var& x, float sign) {
  const std::size_t m = x->value.numel();
  double s = 0.0;
  for (float v : x->value.data) {
    const double z = sign * static_cast<double>(v);
    s += z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
  }
  return scalar_node(s / m, {x}, [m, sign](Node& self) {
    const float g = self.grad.data[0] / static_cast<float>(m);
    Node& px = *self.parents[0];
    auto& gx = px.grad_buffer().data;
    for (std::size_t i = 0; i < m; ++i) {
      const float z = sign * px.value.data[i];
      gx[i] += g * sign / (1.0f + std::exp(-z));
    }
  });
}

Var mean(const Var& x) {
  const std::size_t m = x->value.numel();
  double s = 0.0;
  for (float v : x->value.data) s += v;
  return scalar_node(s / m, {x}, [m](Node& self) {
    const float g = self.grad.data[0] / static_cast<float>(m);
    auto& gx = self.parents[0]->grad_buffer().data;
    for (auto& v : gx) v += g;
  });
}

}  // namespace fddm::nn
