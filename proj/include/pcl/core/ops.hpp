#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "pcl/core/tape.hpp"

namespace pcl {

namespace detail {

inline void require(bool cond, const std::string& what) {
  if (!cond) throw ShapeError(what);
}

template <typename Scalar>
void require_same_tape(const Var<Scalar>& a, const Var<Scalar>& b) {
  if (a.tape != b.tape) throw ContractError("operands recorded on different tapes");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Linear algebra and layout
// ---------------------------------------------------------------------------

/// [m,k] x [k,n] -> [m,n]
template <typename Scalar>
Var<Scalar> matmul(Var<Scalar> a, Var<Scalar> b) {
  detail::require_same_tape(a, b);
  const auto& av = a.value();
  const auto& bv = b.value();
  detail::require(av.rank() == 2 && bv.rank() == 2 && av.dim(1) == bv.dim(0),
                  "matmul: incompatible shapes " + shape_str(av.shape()) + " x " + shape_str(bv.shape()));
  Tensor<Scalar> out({av.dim(0), bv.dim(1)});
  out.matrix().noalias() = av.matrix() * bv.matrix();
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape<Scalar>& t, const Tensor<Scalar>&, const Tensor<Scalar>& g) {
    if (t.requires_grad(a)) t.grad(a).matrix().noalias() += g.matrix() * t.value(b).matrix().transpose();
    if (t.requires_grad(b)) t.grad(b).matrix().noalias() += t.value(a).matrix().transpose() * g.matrix();
  });
}

template <typename Scalar>
Var<Scalar> transpose(Var<Scalar> a) {
  const auto& av = a.value();
  detail::require(av.rank() == 2, "transpose: expected rank 2, got " + shape_str(av.shape()));
  Tensor<Scalar> out({av.dim(1), av.dim(0)});
  out.matrix() = av.matrix().transpose();
  return a.tape->record(std::move(out), {a}, [a](Tape<Scalar>& t, const Tensor<Scalar>&, const Tensor<Scalar>& g) {
    t.grad(a).matrix() += g.matrix().transpose();
  });
}

template <typename Scalar>
Var<Scalar> reshape(Var<Scalar> a, Shape shape) {
  Tensor<Scalar> out = a.value().reshaped(std::move(shape));
  return a.tape->record(std::move(out), {a}, [a](Tape<Scalar>& t, const Tensor<Scalar>&, const Tensor<Scalar>& g) {
    t.grad(a).vector() += g.vector();
  });
}

/// Adds `bias` ([n]) to every row of `x` ([..., n]).
template <typename Scalar>
Var<Scalar> add_bias(Var<Scalar> x, Var<Scalar> bias) {
  detail::require_same_tape(x, bias);
  const auto& xv = x.value();
  const auto& bv = bias.value();
  detail::require(xv.rank() >= 1 && bv.rank() == 1 && xv.dim(-1) == bv.dim(0),
                  "add_bias: bias " + shape_str(bv.shape()) + " does not match " + shape_str(xv.shape()));
  Tensor<Scalar> out = xv;
  out.rows_view().rowwise() += bv.vector().transpose();
  return x.tape->record(std::move(out), {x, bias},
                        [x, bias](Tape<Scalar>& t, const Tensor<Scalar>&, const Tensor<Scalar>& g) {
                          if (t.requires_grad(x)) t.grad(x).vector() += g.vector();
                          if (t.requires_grad(bias)) {
                            t.grad(bias).vector() += g.rows_view().colwise().sum().transpose();
                          }
                        });
}

/// Concatenates along `axis`; all other dims must agree.
template <typename Scalar>
Var<Scalar> concat(const std::vector<Var<Scalar>>& parts, Index axis) {
  detail::require(!parts.empty(), "concat: no inputs");
  const Shape& first = parts.front().shape();
  const Index rank = static_cast<Index>(first.size());
  const Index ax = axis < 0 ? axis + rank : axis;
  detail::require(ax >= 0 && ax < rank, "concat: axis out of range");
  Index outer = 1;
  for (Index d = 0; d < ax; ++d) outer *= first[static_cast<std::size_t>(d)];
  Shape out_shape = first;
  out_shape[static_cast<std::size_t>(ax)] = 0;
  std::vector<Index> inner(parts.size());
  for (std::size_t p = 0; p < parts.size(); ++p) {
    detail::require_same_tape(parts[p], parts.front());
    const Shape& s = parts[p].shape();
    detail::require(static_cast<Index>(s.size()) == rank, "concat: rank mismatch");
    for (Index d = 0; d < rank; ++d) {
      if (d != ax) detail::require(s[static_cast<std::size_t>(d)] == first[static_cast<std::size_t>(d)], "concat: dim mismatch");
    }
    out_shape[static_cast<std::size_t>(ax)] += s[static_cast<std::size_t>(ax)];
    inner[p] = parts[p].value().size() / std::max<Index>(outer, 1);
  }
  Tensor<Scalar> out(out_shape);
  const Index row = out.size() / std::max<Index>(outer, 1);
  Index offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const auto& v = parts[p].value();
    for (Index o = 0; o < outer; ++o) {
      std::copy_n(v.data() + o * inner[p], inner[p], out.data() + o * row + offset);
    }
    offset += inner[p];
  }
  return parts.front().tape->record(
      std::move(out), parts, [parts, inner, outer, row](Tape<Scalar>& t, const Tensor<Scalar>&, const Tensor<Scalar>& g) {
        Index off = 0;
        for (std::size_t p = 0; p < parts.size(); ++p) {
          if (t.requires_grad(parts[p])) {
            auto& gp = t.grad(parts[p]);
            for (Index o = 0; o < outer; ++o) {
              for (Index i = 0; i < inner[p]; ++i) gp[o * inner[p] + i] += g[o * row + off + i];
            }
          }
          off += inner[p];
        }
      });
}

/// out[i] = x[i, index[i]] for a rank-2 `x`.
template <typename Scalar>
Var<Scalar> pick_per_row(Var<Scalar> x, std::vector<Index> index) {
  const auto& xv = x.value();
  detail::require(xv.rank() == 2 && xv.dim(0) == static_cast<Index>(index.size()), "pick_per_row: index length mismatch");
  const Index cols = xv.dim(1);
  Tensor<Scalar> out({xv.dim(0)});
  for (Index r = 0; r < xv.dim(0); ++r) {
    const Index c = index[static_cast<std::size_t>(r)];
    detail::require(c >= 0 && c < cols, "pick_per_row: index out of range");
    out[r] = xv.at(r, c);
  }
  return x.tape->record(std::move(out), {x},
                        [x, index = std::move(index), cols](Tape<Scalar>& t, const Tensor<Scalar>&, const Tensor<Scalar>& g) {
                          auto& gx = t.grad(x);
                          for (std::size_t r = 0; r < index.size(); ++r) {
                            gx[static_cast<Index>(r) * cols + index[r]] += g[static_cast<Index>(r)];
                          }
                        });
}

// ---------------------------------------------------------------------------
// Elementwise
// ---------------------------------------------------------------------------

template <typename Scalar>
Var<Scalar> relu(Var<Scalar> x) {
  Tensor<Scalar> out = x.value();
  for (Scalar& v : out.values()) v = v > Scalar(0) ? v : Scalar(0);
  return x.tape->record(std::move(out), {x}, [x](Tape<Scalar>& t, const Tensor<Scalar>& y, const Tensor<Scalar>& g) {
    auto& gx = t.grad(x);
    for (Index i = 0; i < y.size(); ++i) {
      if (y[i] > Scalar(0)) gx[i] += g[i];
    }
  });
}

template <typename Scalar>
Var<Scalar> scale(Var<Scalar> x, Scalar c) {
  Tensor<Scalar> out = x.value();
  out.vector() *= c;
  return x.tape->record(std::move(out), {x}, [x, c](Tape<Scalar>& t, const Tensor<Scalar>&, const Tensor<Scalar>& g) {
    t.grad(x).vector() += c * g.vector();
  });
}

template <typename Scalar>
Var<Scalar> add(Var<Scalar> a, Var<Scalar> b) {
  detail::require_same_tape(a, b);
  detail::require(a.shape() == b.shape(), "add: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  Tensor<Scalar> out = a.value();
  out.vector() += b.value().vector();
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape<Scalar>& t, const Tensor<Scalar>&, const Tensor<Scalar>& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

template <typename Scalar>
Var<Scalar> sub(Var<Scalar> a, Var<Scalar> b) {
  detail::require_same_tape(a, b);
  detail::require(a.shape() == b.shape(), "sub: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  Tensor<Scalar> out = a.value();
  out.vector() -= b.value().vector();
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape<Scalar>& t, const Tensor<Scalar>&, const Tensor<Scalar>& g) {
    if (t.requires_grad(a)) t.grad(a).vector() += g.vector();
    if (t.requires_grad(b)) t.grad(b).vector() -= g.vector();
  });
}

/// Elementwise product.
template <typename Scalar>
Var<Scalar> mul(Var<Scalar> a, Var<Scalar> b) {
  detail::require_same_tape(a, b);
  detail::require(a.shape() == b.shape(), "mul: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  Tensor<Scalar> out = a.value();
  out.vector().array() *= b.value().vector().array();
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape<Scalar>& t, const Tensor<Scalar>&, const Tensor<Scalar>& g) {
    if (t.requires_grad(a)) t.grad(a).vector().array() += g.vector().array() * t.value(b).vector().array();
    if (t.requires_grad(b)) t.grad(b).vector().array() += g.vector().array() * t.value(a).vector().array();
  });
}

// ---------------------------------------------------------------------------
// Reductions and normalizations
// ---------------------------------------------------------------------------

/// Sum of all entries -> [1]. Entries are added sequentially by index.
template <typename Scalar>
Var<Scalar> sum(Var<Scalar> x) {
  Scalar acc(0);
  for (Scalar v : x.value().values()) acc += v;
  return x.tape->record(Tensor<Scalar>::scalar(acc), {x}, [x](Tape<Scalar>& t, const Tensor<Scalar>&, const Tensor<Scalar>& g) {
    t.grad(x).vector().array() += g[0];
  });
}

template <typename Scalar>
Var<Scalar> mean(Var<Scalar> x) {
  const Index n = x.value().size();
  detail::require(n > 0, "mean of an empty tensor");
  return scale(sum(x), Scalar(1) / static_cast<Scalar>(n));
}

/// Softmax over the last axis of every row.
template <typename Scalar>
Var<Scalar> softmax_rows(Var<Scalar> x) {
  const auto& xv = x.value();
  detail::require(xv.rank() >= 1 && xv.dim(-1) > 0, "softmax_rows: empty rows");
  Tensor<Scalar> out = xv;
  auto y = out.rows_view();
  for (Index r = 0; r < y.rows(); ++r) {
    const Scalar m = y.row(r).maxCoeff();
    y.row(r) = (y.row(r).array() - m).exp().matrix();
    y.row(r) /= y.row(r).sum();
  }
  return x.tape->record(std::move(out), {x}, [x](Tape<Scalar>& t, const Tensor<Scalar>& out, const Tensor<Scalar>& g) {
    const auto y = out.rows_view();
    const auto gy = g.rows_view();
    auto gx = t.grad(x).rows_view();
    for (Index r = 0; r < y.rows(); ++r) {
      const Scalar dot = y.row(r).dot(gy.row(r));
      gx.row(r).array() += y.row(r).array() * (gy.row(r).array() - dot);
    }
  });
}

/// log(sum(exp(row))) over the last axis; the last axis is dropped (a rank-1
/// input yields [1]). Max subtraction keeps small temperatures finite.
template <typename Scalar>
Var<Scalar> log_sum_exp_rows(Var<Scalar> x) {
  const auto& xv = x.value();
  detail::require(xv.rank() >= 1 && xv.dim(-1) > 0, "log_sum_exp_rows: empty rows");
  const auto rows = xv.rows_view();
  Shape out_shape(xv.shape().begin(), xv.shape().end() - 1);
  if (out_shape.empty()) out_shape = {1};
  Tensor<Scalar> out(out_shape);
  for (Index r = 0; r < rows.rows(); ++r) {
    const Scalar m = rows.row(r).maxCoeff();
    out[r] = m + std::log((rows.row(r).array() - m).exp().sum());
  }
  return x.tape->record(std::move(out), {x}, [x](Tape<Scalar>& t, const Tensor<Scalar>& out, const Tensor<Scalar>& g) {
    const auto rows = t.value(x).rows_view();
    auto gx = t.grad(x).rows_view();
    for (Index r = 0; r < rows.rows(); ++r) {
      gx.row(r).array() += g[r] * (rows.row(r).array() - out[r]).exp();
    }
  });
}

/// Row-wise L2 normalization of a rank-2 tensor. Rows with norm below
/// `eps` are divided by `eps` instead of their norm.
template <typename Scalar>
Var<Scalar> l2_normalize_rows(Var<Scalar> x, Scalar eps = Scalar(1e-8)) {
  const auto& xv = x.value();
  detail::require(xv.rank() == 2, "l2_normalize_rows: expected rank 2, got " + shape_str(xv.shape()));
  Tensor<Scalar> out = xv;
  auto y = out.matrix();
  Vector<Scalar> denom(y.rows());
  for (Index r = 0; r < y.rows(); ++r) {
    denom(r) = std::max(y.row(r).norm(), eps);
    y.row(r) /= denom(r);
  }
  return x.tape->record(std::move(out), {x},
                        [x, denom, eps](Tape<Scalar>& t, const Tensor<Scalar>& out, const Tensor<Scalar>& g) {
                          const auto y = out.matrix();
                          const auto gy = g.matrix();
                          auto gx = t.grad(x).matrix();
                          for (Index r = 0; r < y.rows(); ++r) {
                            if (denom(r) > eps) {
                              gx.row(r) += (gy.row(r) - y.row(r) * y.row(r).dot(gy.row(r))) / denom(r);
                            } else {
                              gx.row(r) += gy.row(r) / eps;
                            }
                          }
                        });
}

/// Mean over the time axis: [N,T,F] -> [N,F], or [T,F] -> [F].
template <typename Scalar>
Var<Scalar> mean_over_time(Var<Scalar> x) {
  const auto& xv = x.value();
  detail::require(xv.rank() == 2 || xv.rank() == 3, "mean_over_time: expected [T,F] or [N,T,F], got " + shape_str(xv.shape()));
  const Index n = xv.rank() == 3 ? xv.dim(0) : 1;
  const Index steps = xv.dim(-2);
  const Index feat = xv.dim(-1);
  detail::require(steps > 0, "mean_over_time: zero time steps");
  Tensor<Scalar> out(xv.rank() == 3 ? Shape{n, feat} : Shape{feat});
  const Scalar inv = Scalar(1) / static_cast<Scalar>(steps);
  for (Index i = 0; i < n; ++i) {
    ConstMatrixMap<Scalar> block(xv.data() + i * steps * feat, steps, feat);
    Eigen::Map<Vector<Scalar>> o(out.data() + i * feat, feat);
    o.setZero();
    for (Index s = 0; s < steps; ++s) o += block.row(s).transpose();
    o *= inv;
  }
  return x.tape->record(std::move(out), {x},
                        [x, n, steps, feat, inv](Tape<Scalar>& t, const Tensor<Scalar>&, const Tensor<Scalar>& g) {
                          auto& gx = t.grad(x);
                          for (Index i = 0; i < n; ++i) {
                            MatrixMap<Scalar> block(gx.data() + i * steps * feat, steps, feat);
                            Eigen::Map<const Vector<Scalar>> gi(g.data() + i * feat, feat);
                            block.rowwise() += inv * gi.transpose();
                          }
                        });
}

/// Weighted sum over axis 1: x [N,L,...], w [L] -> [N,...].
template <typename Scalar>
Var<Scalar> weighted_layer_sum(Var<Scalar> x, Var<Scalar> w) {
  detail::require_same_tape(x, w);
  const auto& xv = x.value();
  const auto& wv = w.value();
  detail::require(xv.rank() >= 2 && wv.rank() == 1 && xv.dim(1) == wv.dim(0),
                  "weighted_layer_sum: weights " + shape_str(wv.shape()) + " do not match " + shape_str(xv.shape()));
  const Index n = xv.dim(0);
  const Index layers = xv.dim(1);
  const Index inner = layers == 0 ? 0 : xv.size() / (n * layers);
  Shape out_shape{n};
  out_shape.insert(out_shape.end(), xv.shape().begin() + 2, xv.shape().end());
  Tensor<Scalar> out(out_shape);
  for (Index i = 0; i < n; ++i) {
    Eigen::Map<Vector<Scalar>> o(out.data() + i * inner, inner);
    for (Index l = 0; l < layers; ++l) {
      o += wv[l] * Eigen::Map<const Vector<Scalar>>(xv.data() + (i * layers + l) * inner, inner);
    }
  }
  return x.tape->record(std::move(out), {x, w},
                        [x, w, n, layers, inner](Tape<Scalar>& t, const Tensor<Scalar>&, const Tensor<Scalar>& g) {
                          const auto& xv = t.value(x);
                          const auto& wv = t.value(w);
                          const bool gx_needed = t.requires_grad(x);
                          const bool gw_needed = t.requires_grad(w);
                          for (Index i = 0; i < n; ++i) {
                            Eigen::Map<const Vector<Scalar>> gi(g.data() + i * inner, inner);
                            for (Index l = 0; l < layers; ++l) {
                              const Index off = (i * layers + l) * inner;
                              if (gx_needed) Eigen::Map<Vector<Scalar>>(t.grad(x).data() + off, inner) += wv[l] * gi;
                              if (gw_needed) t.grad(w)[l] += gi.dot(Eigen::Map<const Vector<Scalar>>(xv.data() + off, inner));
                            }
                          }
                        });
}

// ---------------------------------------------------------------------------
// Convolution and pooling
// ---------------------------------------------------------------------------

/// Applies the same affine map to every time step: x [N,T,Fin] or [T,Fin],
/// weight [Fin,Fout], bias [Fout].
template <typename Scalar>
Var<Scalar> conv_pointwise_1d(Var<Scalar> x, Var<Scalar> weight, Var<Scalar> bias) {
  const auto& xv = x.value();
  const auto& wv = weight.value();
  detail::require(xv.rank() == 2 || xv.rank() == 3, "conv_pointwise_1d: expected [T,F] or [N,T,F], got " + shape_str(xv.shape()));
  detail::require(wv.rank() == 2 && wv.dim(0) == xv.dim(-1),
                  "conv_pointwise_1d: weight " + shape_str(wv.shape()) + " does not match input " + shape_str(xv.shape()));
  Shape out_shape = xv.shape();
  out_shape.back() = wv.dim(1);
  const Index rows = xv.size() / xv.dim(-1);
  Var<Scalar> flat = reshape(x, {rows, xv.dim(-1)});
  Var<Scalar> y = add_bias(matmul(flat, weight), bias);
  return reshape(y, out_shape);
}

/// Zero-padded stride-1 2-D convolution.
/// x [N,C,H,W], weight [Co,C,k,k], bias [Co] -> [N,Co,H+2p-k+1,W+2p-k+1].
template <typename Scalar>
Var<Scalar> conv2d(Var<Scalar> x, Var<Scalar> weight, Var<Scalar> bias, Index padding) {
  detail::require_same_tape(x, weight);
  detail::require_same_tape(x, bias);
  const auto& xv = x.value();
  const auto& wv = weight.value();
  detail::require(xv.rank() == 4 && wv.rank() == 4 && wv.dim(1) == xv.dim(1) && wv.dim(2) == wv.dim(3),
                  "conv2d: weight " + shape_str(wv.shape()) + " does not match input " + shape_str(xv.shape()));
  detail::require(bias.value().rank() == 1 && bias.value().dim(0) == wv.dim(0), "conv2d: bias length mismatch");
  const Index n = xv.dim(0), c = xv.dim(1), h = xv.dim(2), w = xv.dim(3);
  const Index co = wv.dim(0), k = wv.dim(2);
  const Index ho = h + 2 * padding - k + 1;
  const Index wo = w + 2 * padding - k + 1;
  detail::require(ho > 0 && wo > 0, "conv2d: kernel larger than padded input");
  const Index patch = c * k * k;
  const Index spatial = ho * wo;

  // Column buffer [patch, N*spatial].
  auto im2col = [=](const Tensor<Scalar>& in) {
    RowMatrix<Scalar> cols = RowMatrix<Scalar>::Zero(patch, n * spatial);
    for (Index ci = 0; ci < c; ++ci) {
      for (Index ky = 0; ky < k; ++ky) {
        for (Index kx = 0; kx < k; ++kx) {
          Scalar* dst = cols.data() + ((ci * k + ky) * k + kx) * n * spatial;
          for (Index b = 0; b < n; ++b) {
            const Scalar* src = in.data() + (b * c + ci) * h * w;
            for (Index oy = 0; oy < ho; ++oy) {
              const Index iy = oy + ky - padding;
              if (iy < 0 || iy >= h) continue;
              for (Index ox = 0; ox < wo; ++ox) {
                const Index ix = ox + kx - padding;
                if (ix >= 0 && ix < w) dst[b * spatial + oy * wo + ox] = src[iy * w + ix];
              }
            }
          }
        }
      }
    }
    return cols;
  };

  const RowMatrix<Scalar> cols = im2col(xv);
  const RowMatrix<Scalar> prod = wv.matrix(co, patch) * cols;  // [Co, N*spatial]
  Tensor<Scalar> out({n, co, ho, wo});
  const auto& bv = bias.value();
  for (Index b = 0; b < n; ++b) {
    for (Index o = 0; o < co; ++o) {
      Eigen::Map<Vector<Scalar>>(out.data() + (b * co + o) * spatial, spatial) =
          prod.row(o).segment(b * spatial, spatial).transpose().array() + bv[o];
    }
  }
  return x.tape->record(
      std::move(out), {x, weight, bias},
      [=](Tape<Scalar>& t, const Tensor<Scalar>&, const Tensor<Scalar>& g) {
        // Regroup the output gradient as [Co, N*spatial].
        RowMatrix<Scalar> gmat(co, n * spatial);
        for (Index b = 0; b < n; ++b) {
          for (Index o = 0; o < co; ++o) {
            gmat.row(o).segment(b * spatial, spatial) =
                Eigen::Map<const Vector<Scalar>>(g.data() + (b * co + o) * spatial, spatial).transpose();
          }
        }
        if (t.requires_grad(bias)) t.grad(bias).vector() += gmat.rowwise().sum();
        if (t.requires_grad(weight)) {
          const RowMatrix<Scalar> cols = im2col(t.value(x));
          t.grad(weight).matrix(co, patch).noalias() += gmat * cols.transpose();
        }
        if (t.requires_grad(x)) {
          const RowMatrix<Scalar> dcols = t.value(weight).matrix(co, patch).transpose() * gmat;
          auto& gx = t.grad(x);
          for (Index ci = 0; ci < c; ++ci) {
            for (Index ky = 0; ky < k; ++ky) {
              for (Index kx = 0; kx < k; ++kx) {
                const Scalar* src = dcols.data() + ((ci * k + ky) * k + kx) * n * spatial;
                for (Index b = 0; b < n; ++b) {
                  Scalar* dst = gx.data() + (b * c + ci) * h * w;
                  for (Index oy = 0; oy < ho; ++oy) {
                    const Index iy = oy + ky - padding;
                    if (iy < 0 || iy >= h) continue;
                    for (Index ox = 0; ox < wo; ++ox) {
                      const Index ix = ox + kx - padding;
                      if (ix >= 0 && ix < w) dst[iy * w + ix] += src[b * spatial + oy * wo + ox];
                    }
                  }
                }
              }
            }
          }
        }
      });
}

/// Non-overlapping max pooling with a square window; trailing rows/columns
/// that do not fill a window are dropped. Ties route to the first maximum.
template <typename Scalar>
Var<Scalar> maxpool2d(Var<Scalar> x, Index window = 2) {
  const auto& xv = x.value();
  detail::require(xv.rank() == 4, "maxpool2d: expected [N,C,H,W], got " + shape_str(xv.shape()));
  detail::require(window >= 1, "maxpool2d: window must be positive");
  const Index planes = xv.dim(0) * xv.dim(1), h = xv.dim(2), w = xv.dim(3);
  const Index ho = h / window, wo = w / window;
  detail::require(ho > 0 && wo > 0, "maxpool2d: input smaller than the pooling window");
  Tensor<Scalar> out({xv.dim(0), xv.dim(1), ho, wo});
  std::vector<Index> argmax(static_cast<std::size_t>(out.size()));
  for (Index p = 0; p < planes; ++p) {
    const Scalar* src = xv.data() + p * h * w;
    for (Index oy = 0; oy < ho; ++oy) {
      for (Index ox = 0; ox < wo; ++ox) {
        Index best = (oy * window) * w + ox * window;
        for (Index dy = 0; dy < window; ++dy) {
          for (Index dx = 0; dx < window; ++dx) {
            const Index idx = (oy * window + dy) * w + ox * window + dx;
            if (src[idx] > src[best]) best = idx;
          }
        }
        const Index o = (p * ho + oy) * wo + ox;
        out[o] = src[best];
        argmax[static_cast<std::size_t>(o)] = p * h * w + best;
      }
    }
  }
  return x.tape->record(std::move(out), {x},
                        [x, argmax = std::move(argmax)](Tape<Scalar>& t, const Tensor<Scalar>&, const Tensor<Scalar>& g) {
                          auto& gx = t.grad(x);
                          for (std::size_t o = 0; o < argmax.size(); ++o) gx[argmax[o]] += g[static_cast<Index>(o)];
                        });
}

/// Mean over the spatial axes: [N,C,H,W] -> [N,C].
template <typename Scalar>
Var<Scalar> global_avg_pool2d(Var<Scalar> x) {
  const auto& xv = x.value();
  detail::require(xv.rank() == 4, "global_avg_pool2d: expected [N,C,H,W], got " + shape_str(xv.shape()));
  const Index n = xv.dim(0), c = xv.dim(1);
  const Index spatial = xv.dim(2) * xv.dim(3);
  detail::require(spatial > 0, "global_avg_pool2d: empty spatial extent");
  return reshape(mean_over_time(reshape(x, {n * c, spatial, 1})), {n, c});
}

// ---------------------------------------------------------------------------
// Table-driven dispatch
// ---------------------------------------------------------------------------

enum class Primitive {
  matmul,
  add_bias,
  relu,
  softmax_rows,
  log_sum_exp_rows,
  conv_pointwise_1d,
  conv2d,
  maxpool2d,
  mean_over_time,
  l2_normalize_rows,
  scale,
  concat,
  weighted_layer_sum,
};

inline constexpr Primitive kAllPrimitives[] = {
    Primitive::matmul,           Primitive::add_bias,          Primitive::relu,       Primitive::softmax_rows,
    Primitive::log_sum_exp_rows, Primitive::conv_pointwise_1d, Primitive::conv2d,     Primitive::maxpool2d,
    Primitive::mean_over_time,   Primitive::l2_normalize_rows, Primitive::scale,      Primitive::concat,
    Primitive::weighted_layer_sum,
};

inline const char* primitive_name(Primitive p) {
  switch (p) {
    case Primitive::matmul: return "matmul";
    case Primitive::add_bias: return "add_bias";
    case Primitive::relu: return "relu";
    case Primitive::softmax_rows: return "softmax_rows";
    case Primitive::log_sum_exp_rows: return "log_sum_exp_rows";
    case Primitive::conv_pointwise_1d: return "conv_pointwise_1d";
    case Primitive::conv2d: return "conv2d";
    case Primitive::maxpool2d: return "maxpool2d";
    case Primitive::mean_over_time: return "mean_over_time";
    case Primitive::l2_normalize_rows: return "l2_normalize_rows";
    case Primitive::scale: return "scale";
    case Primitive::concat: return "concat";
    case Primitive::weighted_layer_sum: return "weighted_layer_sum";
  }
  return "unknown";
}

struct PrimitiveAttrs {
  double factor = 1.0;  // scale
  Index axis = -1;      // concat
  Index padding = 1;    // conv2d
  Index window = 2;     // maxpool2d
};

template <typename Scalar>
Var<Scalar> apply_primitive(Primitive kind, std::span<const Var<Scalar>> in, const PrimitiveAttrs& attrs = {}) {
  auto arity = [&](std::size_t n) {
    if (in.size() != n) {
      throw ShapeError(std::string(primitive_name(kind)) + " expects " + std::to_string(n) + " inputs, got " +
                       std::to_string(in.size()));
    }
  };
  switch (kind) {
    case Primitive::matmul: arity(2); return matmul(in[0], in[1]);
    case Primitive::add_bias: arity(2); return add_bias(in[0], in[1]);
    case Primitive::relu: arity(1); return relu(in[0]);
    case Primitive::softmax_rows: arity(1); return softmax_rows(in[0]);
    case Primitive::log_sum_exp_rows: arity(1); return log_sum_exp_rows(in[0]);
    case Primitive::conv_pointwise_1d: arity(3); return conv_pointwise_1d(in[0], in[1], in[2]);
    case Primitive::conv2d: arity(3); return conv2d(in[0], in[1], in[2], attrs.padding);
    case Primitive::maxpool2d: arity(1); return maxpool2d(in[0], attrs.window);
    case Primitive::mean_over_time: arity(1); return mean_over_time(in[0]);
    case Primitive::l2_normalize_rows: arity(1); return l2_normalize_rows(in[0]);
    case Primitive::scale: arity(1); return scale(in[0], static_cast<Scalar>(attrs.factor));
    case Primitive::concat:
      if (in.empty()) throw ShapeError("concat expects at least one input");
      return concat(std::vector<Var<Scalar>>(in.begin(), in.end()), attrs.axis);
    case Primitive::weighted_layer_sum: arity(2); return weighted_layer_sum(in[0], in[1]);
  }
  throw ContractError("unknown primitive");
}

}  // namespace pcl
