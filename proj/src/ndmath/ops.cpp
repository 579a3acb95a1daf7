#include "adamoge/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "adamoge/fft.hpp"
#include "adamoge/kernels.hpp"

namespace adamoge::ops {

namespace {

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                                " vs " + shape_string(b.shape()));
  }
}

std::size_t leading_rows(const Shape& s) { return shape_size(s) / s.back(); }

}  // namespace

Var reshape(Var x, Shape shape) {
  Tape& t = *x.tape;
  Tensor out = x.value().reshaped(std::move(shape));
  const auto xi = x.id;
  return t.push(std::move(out), {x}, [xi](Tape& t, std::size_t self) {
    auto& gx = t.grad(xi);
    const auto& g = t.grad(self);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
}

Var swap_last_axes(Var x) {
  const auto& v = x.value();
  if (v.rank() != 3) throw std::invalid_argument("swap_last_axes needs a rank-3 tensor");
  const std::size_t A = v.dim(0), B = v.dim(1), C = v.dim(2);
  Tensor out({A, C, B});
  for (std::size_t a = 0; a < A; ++a)
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t c = 0; c < C; ++c) out.at(a, c, b) = v.at(a, b, c);
  const auto xi = x.id;
  return x.tape->push(std::move(out), {x}, [xi, A, B, C](Tape& t, std::size_t self) {
    auto& gx = t.grad(xi);
    const auto& g = t.grad(self);
    for (std::size_t a = 0; a < A; ++a)
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t c = 0; c < C; ++c) gx.at(a, b, c) += g.at(a, c, b);
  });
}

CVar rfft(Var x) {
  const Shape in_shape = x.shape();
  const std::size_t length = in_shape.back();
  if (length < 2) throw std::invalid_argument("rfft needs at least 2 samples along the last axis");
  const std::size_t rows = leading_rows(in_shape);
  const std::size_t bins = fft::half_bins(length);
  Shape out_shape = in_shape;
  out_shape.back() = bins;
  Tensor re(out_shape), im(out_shape);
  kernels::rfft_rows(x.value().data(), rows, length, re.data(), im.data());

  Tape& t = *x.tape;
  const auto xi = x.id;
  // Both halves share one adjoint; each part routes only its own gradient.
  Var vre = t.push(std::move(re), {x}, [xi, rows, length, bins](Tape& t, std::size_t self) {
    std::vector<double> zeros(rows * bins, 0.0);
    kernels::rfft_rows_adjoint(t.grad(self).data(), zeros, rows, length, t.grad(xi).data());
  });
  Var vim = t.push(std::move(im), {x}, [xi, rows, length, bins](Tape& t, std::size_t self) {
    std::vector<double> zeros(rows * bins, 0.0);
    kernels::rfft_rows_adjoint(zeros, t.grad(self).data(), rows, length, t.grad(xi).data());
  });
  return {vre, vim};
}

CVar scale(CVar x, double c) { return {scale(x.re, c), scale(x.im, c)}; }

Var irfft(CVar x, std::size_t length) {
  require_same_shape(x.re, x.im, "irfft");
  const Shape in_shape = x.re.shape();
  const std::size_t bins = in_shape.back();
  if (bins != fft::half_bins(length)) {
    throw std::invalid_argument("irfft: " + std::to_string(bins) +
                                " bins inconsistent with length " + std::to_string(length));
  }
  const std::size_t rows = leading_rows(in_shape);
  Shape out_shape = in_shape;
  out_shape.back() = length;
  Tensor out(out_shape);
  kernels::irfft_rows(x.re.value().data(), x.im.value().data(), rows, length, out.data());
  const auto ri = x.re.id, ii = x.im.id;
  return x.re.tape->push(std::move(out), {x.re, x.im},
                         [ri, ii, rows, length, bins](Tape& t, std::size_t self) {
                           std::vector<double> gre(rows * bins, 0.0), gim(rows * bins, 0.0);
                           kernels::irfft_rows_adjoint(t.grad(self).data(), rows, length, gre, gim);
                           if (t.requires_grad(ri)) {
                             auto& g = t.grad(ri);
                             for (std::size_t i = 0; i < g.size(); ++i) g[i] += gre[i];
                           }
                           if (t.requires_grad(ii)) {
                             auto& g = t.grad(ii);
                             for (std::size_t i = 0; i < g.size(); ++i) g[i] += gim[i];
                           }
                         });
}

CVar split_complex(Var stacked, const Shape& part_shape) {
  const std::size_t n = shape_size(part_shape);
  const auto& v = stacked.value();
  if (v.size() != 2 * n) throw std::invalid_argument("split_complex: size mismatch");
  Tensor re(part_shape), im(part_shape);
  std::copy_n(v.data().begin(), n, re.data().begin());
  std::copy_n(v.data().begin() + n, n, im.data().begin());
  const auto si = stacked.id;
  auto half = [si, n](std::size_t offset) {
    return [si, n, offset](Tape& t, std::size_t self) {
      auto& gs = t.grad(si);
      const auto& g = t.grad(self);
      for (std::size_t i = 0; i < n; ++i) gs[offset + i] += g[i];
    };
  };
  Tape& t = *stacked.tape;
  Var vre = t.push(std::move(re), {stacked}, half(0));
  Var vim = t.push(std::move(im), {stacked}, half(n));
  return {vre, vim};
}

Var magnitude(CVar x) {
  require_same_shape(x.re, x.im, "magnitude");
  const auto& re = x.re.value();
  const auto& im = x.im.value();
  Tensor out(re.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::hypot(re[i], im[i]);
  const auto ri = x.re.id, ii = x.im.id;
  return x.re.tape->push(std::move(out), {x.re, x.im}, [ri, ii](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    const auto& mag = t.value(self);
    const auto& re = t.value(ri);
    const auto& im = t.value(ii);
    const bool want_re = t.requires_grad(ri), want_im = t.requires_grad(ii);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (mag[i] == 0.0) continue;
      if (want_re) t.grad(ri)[i] += g[i] * re[i] / mag[i];
      if (want_im) t.grad(ii)[i] += g[i] * im[i] / mag[i];
    }
  });
}

Var mean_axis(Var x, std::size_t axis) {
  const auto& v = x.value();
  if (v.rank() != 3 || (axis != 1 && axis != 2)) {
    throw std::invalid_argument("mean_axis supports axis 1 or 2 of a rank-3 tensor");
  }
  const std::size_t A = v.dim(0), B = v.dim(1), C = v.dim(2);
  Tensor out(axis == 1 ? Shape{A, C} : Shape{A, B});
  const double inv = 1.0 / static_cast<double>(axis == 1 ? B : C);
  for (std::size_t a = 0; a < A; ++a)
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t c = 0; c < C; ++c) {
        if (axis == 1) out.at(a, c) += v.at(a, b, c) * inv;
        else out.at(a, b) += v.at(a, b, c) * inv;
      }
  const auto xi = x.id;
  return x.tape->push(std::move(out), {x}, [xi, axis, A, B, C, inv](Tape& t, std::size_t self) {
    auto& gx = t.grad(xi);
    const auto& g = t.grad(self);
    for (std::size_t a = 0; a < A; ++a)
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t c = 0; c < C; ++c) gx.at(a, b, c) += inv * (axis == 1 ? g.at(a, c) : g.at(a, b));
  });
}

Var concat_cols(Var a, Var b) {
  const auto& va = a.value();
  const auto& vb = b.value();
  if (va.rank() != 2 || vb.rank() != 2 || va.dim(0) != vb.dim(0)) {
    throw std::invalid_argument("concat_cols: incompatible shapes " + shape_string(va.shape()) +
                                " and " + shape_string(vb.shape()));
  }
  const std::size_t N = va.dim(0), ca = va.dim(1), cb = vb.dim(1);
  Tensor out({N, ca + cb});
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t j = 0; j < ca; ++j) out.at(n, j) = va.at(n, j);
    for (std::size_t j = 0; j < cb; ++j) out.at(n, ca + j) = vb.at(n, j);
  }
  const auto ai = a.id, bi = b.id;
  return a.tape->push(std::move(out), {a, b}, [ai, bi, N, ca, cb](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    if (t.requires_grad(ai)) {
      auto& ga = t.grad(ai);
      for (std::size_t n = 0; n < N; ++n)
        for (std::size_t j = 0; j < ca; ++j) ga.at(n, j) += g.at(n, j);
    }
    if (t.requires_grad(bi)) {
      auto& gb = t.grad(bi);
      for (std::size_t n = 0; n < N; ++n)
        for (std::size_t j = 0; j < cb; ++j) gb.at(n, j) += g.at(n, ca + j);
    }
  });
}

Var linear(Var x, Var w, Var b) {
  const auto& vx = x.value();
  const auto& vw = w.value();
  if (vx.rank() != 2 || vw.rank() != 2 || vx.dim(1) != vw.dim(1)) {
    throw std::invalid_argument("linear: incompatible shapes " + shape_string(vx.shape()) + " and " +
                                shape_string(vw.shape()));
  }
  const std::size_t N = vx.dim(0), in = vx.dim(1), out_dim = vw.dim(0);
  std::span<const double> bias;
  if (b.valid()) {
    if (b.value().size() != out_dim) throw std::invalid_argument("linear: bias length mismatch");
    bias = b.value().data();
  }
  Tensor out({N, out_dim});
  kernels::linear_forward(vx.data(), vw.data(), bias, N, in, out_dim, out.data());
  const auto xi = x.id, wi = w.id;
  const auto bi = b.valid() ? b.id : Var::kNone;
  return x.tape->push(std::move(out), {x, w, b}, [xi, wi, bi, N, in, out_dim](Tape& t, std::size_t self) {
    std::span<double> gx, gw, gb;
    if (t.requires_grad(xi)) gx = t.grad(xi).data();
    if (t.requires_grad(wi)) gw = t.grad(wi).data();
    if (bi != Var::kNone && t.requires_grad(bi)) gb = t.grad(bi).data();
    kernels::linear_backward(t.value(xi).data(), t.value(wi).data(), t.grad(self).data(), N, in,
                             out_dim, gx, gw, gb);
  });
}

namespace {

template <typename Fwd, typename Deriv>
Var unary(Var x, Fwd fwd, Deriv deriv) {
  const auto& v = x.value();
  Tensor out(v.shape());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = fwd(v[i]);
  const auto xi = x.id;
  return x.tape->push(std::move(out), {x}, [xi, deriv](Tape& t, std::size_t self) {
    auto& gx = t.grad(xi);
    const auto& g = t.grad(self);
    const auto& in = t.value(xi);
    const auto& y = t.value(self);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * deriv(in[i], y[i]);
  });
}

}  // namespace

Var relu(Var x) {
  return unary(x, [](double v) { return v > 0.0 ? v : 0.0; },
               [](double in, double) { return in > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(Var x) {
  return unary(
      x,
      [](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var scale(Var x, double c) {
  return unary(x, [c](double v) { return c * v; }, [c](double, double) { return c; });
}

Var add_scalar(Var x, double c) {
  return unary(x, [c](double v) { return v + c; }, [](double, double) { return 1.0; });
}

Var softmax_rows(Var x) {
  const auto& v = x.value();
  const std::size_t cols = v.shape().back();
  const std::size_t rows = v.size() / cols;
  Tensor out(v.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = v.data().data() + r * cols;
    double* o = out.data().data() + r * cols;
    const double mx = *std::max_element(in, in + cols);
    double total = 0.0;
    for (std::size_t j = 0; j < cols; ++j) total += (o[j] = std::exp(in[j] - mx));
    for (std::size_t j = 0; j < cols; ++j) o[j] /= total;
  }
  const auto xi = x.id;
  return x.tape->push(std::move(out), {x}, [xi, rows, cols](Tape& t, std::size_t self) {
    auto& gx = t.grad(xi);
    const auto& g = t.grad(self);
    const auto& p = t.value(self);
    for (std::size_t r = 0; r < rows; ++r) {
      double dot = 0.0;
      for (std::size_t j = 0; j < cols; ++j) dot += g[r * cols + j] * p[r * cols + j];
      for (std::size_t j = 0; j < cols; ++j) gx[r * cols + j] += p[r * cols + j] * (g[r * cols + j] - dot);
    }
  });
}

Var add(Var a, Var b) {
  require_same_shape(a, b, "add");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + b.value()[i];
  const auto ai = a.id, bi = b.id;
  return a.tape->push(std::move(out), {a, b}, [ai, bi](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    for (auto id : {ai, bi}) {
      if (!t.requires_grad(id)) continue;
      auto& gi = t.grad(id);
      for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i];
    }
  });
}

Var mul(Var a, Var b) {
  require_same_shape(a, b, "mul");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * b.value()[i];
  const auto ai = a.id, bi = b.id;
  return a.tape->push(std::move(out), {a, b}, [ai, bi](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    if (t.requires_grad(ai)) {
      auto& ga = t.grad(ai);
      const auto& vb = t.value(bi);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * vb[i];
    }
    if (t.requires_grad(bi)) {
      auto& gb = t.grad(bi);
      const auto& va = t.value(ai);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * va[i];
    }
  });
}

Var sum(Var x) {
  double total = 0.0;
  for (double v : x.value().data()) total += v;
  const auto xi = x.id;
  return x.tape->push(Tensor::scalar(total), {x}, [xi](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    auto& gx = t.grad(xi);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g;
  });
}

Var sum_squares(Var x) {
  double total = 0.0;
  for (double v : x.value().data()) total += v * v;
  const auto xi = x.id;
  return x.tape->push(Tensor::scalar(total), {x}, [xi](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    auto& gx = t.grad(xi);
    const auto& v = t.value(xi);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += 2.0 * g * v[i];
  });
}

Var mean_squared_error(Var pred, const Tensor& target) {
  if (pred.shape() != target.shape()) {
    throw std::invalid_argument("mse: shape mismatch " + shape_string(pred.shape()) + " vs " +
                                shape_string(target.shape()));
  }
  const auto& p = pred.value();
  const double inv = 1.0 / static_cast<double>(p.size());
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = p[i] - target[i];
    total += d * d;
  }
  const auto pi = pred.id;
  return pred.tape->push(Tensor::scalar(total * inv), {pred}, [pi, target, inv](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    auto& gp = t.grad(pi);
    const auto& p = t.value(pi);
    for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += 2.0 * g * inv * (p[i] - target[i]);
  });
}

}  // namespace adamoge::ops
