#include "adamoge/filterbank.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "adamoge/errors.hpp"
#include "adamoge/ops.hpp"

namespace adamoge::filterbank {

namespace {

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double logit(double p) { return std::log(p / (1.0 - p)); }

// Fraction of a segment kept clear of 0 and f_nyq at initialization, since the
// sigmoid parameterization cannot reach either end exactly.
constexpr double kEdgeInset = 0.01;

}  // namespace

FilterMode parse_mode(const std::string& name) {
  if (name == "dog") return FilterMode::Dog;
  if (name == "abs-dog") return FilterMode::AbsDog;
  if (name == "hard") return FilterMode::Hard;
  throw ConfigError("unknown filter mode '" + name + "' (expected dog, abs-dog or hard)");
}

std::string mode_name(FilterMode mode) {
  switch (mode) {
    case FilterMode::Dog: return "dog";
    case FilterMode::AbsDog: return "abs-dog";
    case FilterMode::Hard: return "hard";
  }
  return "dog";
}

// Distances are taken from the midpoint so that H vanishes exactly there.
double dog_response(double f, double f1, double f2, double sigma) {
  const double s2 = 2.0 * sigma * sigma;
  const double u = f - 0.5 * (f1 + f2), h = 0.5 * (f2 - f1);
  return std::exp(-(u + h) * (u + h) / s2) - std::exp(-(u - h) * (u - h) / s2);
}

std::pair<double, double> cutoff_parameters(double f1, double f2, double nyquist) {
  if (!(f1 > 0.0 && f1 < f2 && f2 < nyquist)) {
    throw std::invalid_argument("cutoffs must satisfy 0 < f1 < f2 < f_nyq");
  }
  return {logit(f1 / nyquist), logit((f2 - f1) / (nyquist - f1))};
}

FilterBank::FilterBank(ParameterStore& store, const std::string& prefix, BankConfig config)
    : config_(config) {
  if (config_.e_max < 1) throw std::invalid_argument("filter bank needs at least one filter");
  if (config_.bins < 2) throw std::invalid_argument("filter bank needs at least two bins");
  const double nyq = nyquist();
  sigma0_ = config_.sigma0 > 0.0 ? config_.sigma0 : nyq / (2.0 * static_cast<double>(config_.e_max));
  sigma_max_ = config_.sigma_max > 0.0 ? config_.sigma_max : nyq / 2.0;
  if (!(config_.sigma_min > 0.0) || sigma_max_ < config_.sigma_min) {
    throw std::invalid_argument("sigma clamp bounds must satisfy 0 < sigma_min <= sigma_max");
  }
  if (config_.mode == FilterMode::Hard) return;

  const std::size_t E = config_.e_max;
  const double width = nyq / static_cast<double>(E);
  Tensor a({E}), b({E});
  for (std::size_t e = 0; e < E; ++e) {
    const double lo = std::max(static_cast<double>(e) * width, kEdgeInset * width);
    const double hi = std::min(static_cast<double>(e + 1) * width, nyq - kEdgeInset * width);
    const auto [pa, pb] = cutoff_parameters(lo, hi, nyq);
    a[e] = pa;
    b[e] = pb;
  }
  a_ = &store.add(prefix + "filter.a", std::move(a));
  b_ = &store.add(prefix + "filter.b", std::move(b));
}

std::vector<Cutoffs> FilterBank::cutoffs() const {
  const double nyq = nyquist();
  std::vector<Cutoffs> out;
  for (std::size_t e = 0; e < config_.e_max; ++e) {
    if (!learnable()) {
      const double width = nyq / static_cast<double>(config_.e_max);
      out.push_back({static_cast<double>(e) * width, static_cast<double>(e + 1) * width});
      continue;
    }
    const double f1 = nyq * logistic(a_->value[e]);
    const double f2 = f1 + (nyq - f1) * logistic(b_->value[e]);
    out.push_back({f1, f2});
  }
  return out;
}

std::vector<double> FilterBank::response(std::size_t filter, double sigma) const {
  if (!(sigma > 0.0)) throw std::invalid_argument("filter bandwidth sigma must be positive");
  if (filter >= config_.e_max) throw std::out_of_range("filter index out of range");
  std::vector<double> h(config_.bins);
  if (!learnable()) {
    const auto masks = hard_masks(1);
    for (std::size_t f = 0; f < config_.bins; ++f) h[f] = masks.at(0, filter, f);
    return h;
  }
  const auto c = cutoffs()[filter];
  for (std::size_t f = 0; f < config_.bins; ++f) {
    h[f] = dog_response(static_cast<double>(f), c.f1, c.f2, sigma);
    if (config_.mode == FilterMode::AbsDog) h[f] = std::abs(h[f]);
  }
  return h;
}

std::vector<double> FilterBank::adaptive_sigma(std::size_t filter, const spectral::SpectrumBatch& spec) const {
  Tape tape;
  const CVar s{tape.constant(spec.values().re), tape.constant(spec.values().im)};
  const Var sig = sigma(cutoffs(tape), mean_power(s));
  std::vector<double> out(spec.batch());
  for (std::size_t b = 0; b < out.size(); ++b) out[b] = sig.value().at(b, filter);
  return out;
}

Tensor FilterBank::responses(const spectral::SpectrumBatch& spec) const {
  Tape tape;
  return responses(tape, CVar{tape.constant(spec.values().re), tape.constant(spec.values().im)}).value();
}

ComplexTensor FilterBank::apply(const spectral::SpectrumBatch& spec) const {
  if (spec.bins() != config_.bins) {
    throw std::invalid_argument("spectrum has " + std::to_string(spec.bins()) + " bins, filter bank expects " +
                                std::to_string(config_.bins));
  }
  const Tensor h = responses(spec);
  const std::size_t E = config_.e_max, B = spec.batch(), V = spec.vars(), F = spec.bins();
  ComplexTensor out(Shape{E, B, V, F});
  const auto& re = spec.values().re;
  const auto& im = spec.values().im;
  for (std::size_t e = 0; e < E; ++e)
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t v = 0; v < V; ++v)
        for (std::size_t f = 0; f < F; ++f) {
          const std::size_t o = ((e * B + b) * V + v) * F + f;
          out.re[o] = re.at(b, v, f) * h.at(b, e, f);
          out.im[o] = im.at(b, v, f) * h.at(b, e, f);
        }
  return out;
}

Tensor FilterBank::hard_masks(std::size_t batch) const {
  const std::size_t E = config_.e_max, F = config_.bins;
  Tensor m({batch, E, F});
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t f = 0; f < F; ++f) m.at(b, f * E / F, f) = 1.0;
  return m;
}

Var FilterBank::responses(Tape& tape, CVar spectrum) const {
  if (spectrum.re.shape().size() != 3 || spectrum.re.shape()[2] != config_.bins) {
    throw std::invalid_argument("spectrum bins do not match the filter bank");
  }
  if (!learnable()) return tape.constant(hard_masks(spectrum.re.shape()[0]));
  const Var cut = cutoffs(tape);
  return response_curves(cut, sigma(cut, mean_power(spectrum)));
}

Var FilterBank::cutoffs(Tape& tape) const {
  if (!learnable()) throw std::logic_error("hard filter bank has no learnable cutoffs");
  const Var a = tape.parameter(*a_);
  const Var b = tape.parameter(*b_);
  const std::size_t E = config_.e_max;
  const double nyq = nyquist();
  Tensor out({2, E});
  for (std::size_t e = 0; e < E; ++e) {
    const double f1 = nyq * logistic(a.value()[e]);
    out.at(0, e) = f1;
    out.at(1, e) = f1 + (nyq - f1) * logistic(b.value()[e]);
  }
  const auto ai = a.id, bi = b.id;
  return tape.push(std::move(out), {a, b}, [ai, bi, E, nyq](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    const auto& va = t.value(ai);
    const auto& vb = t.value(bi);
    for (std::size_t e = 0; e < E; ++e) {
      const double sa = logistic(va[e]);
      const double sb = logistic(vb[e]);
      const double f1 = nyq * sa;
      const double df1_da = nyq * sa * (1.0 - sa);
      const double g1 = g.at(0, e), g2 = g.at(1, e);
      if (t.requires_grad(ai)) t.grad(ai)[e] += g1 * df1_da + g2 * df1_da * (1.0 - sb);
      if (t.requires_grad(bi)) t.grad(bi)[e] += g2 * (nyq - f1) * sb * (1.0 - sb);
    }
  });
}

Var FilterBank::sigma(Var cutoffs, Var mean_power) const {
  const std::size_t E = config_.e_max;
  const std::size_t B = mean_power.value().size();
  const double scale = sigma0_ * config_.alpha;
  const double lo = config_.sigma_min, hi = sigma_max_;
  Tensor out({B, E});
  Tensor raw({B, E});
  const auto& c = cutoffs.value();
  const auto& p = mean_power.value();
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t e = 0; e < E; ++e) {
      const double d0 = 0.5 * (c.at(0, e) + c.at(1, e));
      raw.at(b, e) = scale / d0 * p[b];
      out.at(b, e) = std::clamp(raw.at(b, e), lo, hi);
    }
  const auto ci = cutoffs.id, pi = mean_power.id;
  return cutoffs.tape->push(std::move(out), {cutoffs, mean_power},
                            [ci, pi, B, E, scale, lo, hi, raw](Tape& t, std::size_t self) {
                              const auto& g = t.grad(self);
                              const auto& c = t.value(ci);
                              const bool want_c = t.requires_grad(ci), want_p = t.requires_grad(pi);
                              for (std::size_t b = 0; b < B; ++b)
                                for (std::size_t e = 0; e < E; ++e) {
                                  const double r = raw.at(b, e);
                                  if (r <= lo || r >= hi) continue;  // clamped: zero gradient
                                  const double d0 = 0.5 * (c.at(0, e) + c.at(1, e));
                                  const double gb = g.at(b, e);
                                  if (want_p) t.grad(pi)[b] += gb * scale / d0;
                                  if (want_c) {
                                    const double dd = -gb * r / d0 * 0.5;
                                    t.grad(ci).at(0, e) += dd;
                                    t.grad(ci).at(1, e) += dd;
                                  }
                                }
                            });
}

Var FilterBank::response_curves(Var cutoffs, Var sigma) const {
  const std::size_t E = config_.e_max, F = config_.bins;
  const std::size_t B = sigma.value().dim(0);
  const bool absolute = config_.mode == FilterMode::AbsDog;
  Tensor out({B, E, F});
  const auto& c = cutoffs.value();
  const auto& s = sigma.value();
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t e = 0; e < E; ++e)
      for (std::size_t f = 0; f < F; ++f) {
        const double h = dog_response(static_cast<double>(f), c.at(0, e), c.at(1, e), s.at(b, e));
        out.at(b, e, f) = absolute ? std::abs(h) : h;
      }
  const auto ci = cutoffs.id, si = sigma.id;
  return cutoffs.tape->push(std::move(out), {cutoffs, sigma}, [ci, si, B, E, F, absolute](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    const auto& c = t.value(ci);
    const auto& s = t.value(si);
    const bool want_c = t.requires_grad(ci), want_s = t.requires_grad(si);
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t e = 0; e < E; ++e) {
        const double f1 = c.at(0, e), f2 = c.at(1, e), sg = s.at(b, e);
        const double s2 = sg * sg;
        double gf1 = 0.0, gf2 = 0.0, gs = 0.0;
        for (std::size_t f = 0; f < F; ++f) {
          double gh = g.at(b, e, f);
          if (gh == 0.0) continue;
          const double x = static_cast<double>(f);
          const double u = x - 0.5 * (f1 + f2), hw = 0.5 * (f2 - f1);
          const double d1 = u + hw, d2 = u - hw;
          const double g1 = std::exp(-d1 * d1 / (2.0 * s2));
          const double g2 = std::exp(-d2 * d2 / (2.0 * s2));
          if (absolute) {
            const double raw = g1 - g2;
            gh = raw > 0.0 ? gh : (raw < 0.0 ? -gh : 0.0);
          }
          gf1 += gh * g1 * d1 / s2;
          gf2 -= gh * g2 * d2 / s2;
          gs += gh * (g1 * d1 * d1 - g2 * d2 * d2) / (s2 * sg);
        }
        if (want_c) {
          t.grad(ci).at(0, e) += gf1;
          t.grad(ci).at(1, e) += gf2;
        }
        if (want_s) t.grad(si).at(b, e) += gs;
      }
  });
}

Var mean_power(CVar spectrum) {
  const auto& re = spectrum.re.value();
  const auto& im = spectrum.im.value();
  if (re.rank() != 3) throw std::invalid_argument("mean_power expects a (B x V x F) spectrum");
  const std::size_t B = re.dim(0);
  const std::size_t per = re.dim(1) * re.dim(2);
  const double inv = 1.0 / static_cast<double>(per);
  Tensor out({B});
  for (std::size_t b = 0; b < B; ++b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < per; ++i) {
      const double r = re[b * per + i], m = im[b * per + i];
      acc += r * r + m * m;
    }
    out[b] = acc * inv;
  }
  const auto ri = spectrum.re.id, ii = spectrum.im.id;
  return spectrum.re.tape->push(std::move(out), {spectrum.re, spectrum.im},
                                [ri, ii, B, per, inv](Tape& t, std::size_t self) {
                                  const auto& g = t.grad(self);
                                  for (auto id : {ri, ii}) {
                                    if (!t.requires_grad(id)) continue;
                                    auto& gx = t.grad(id);
                                    const auto& x = t.value(id);
                                    for (std::size_t b = 0; b < B; ++b)
                                      for (std::size_t i = 0; i < per; ++i)
                                        gx[b * per + i] += 2.0 * g[b] * inv * x[b * per + i];
                                  }
                                });
}

}  // namespace adamoge::filterbank
