#pragma once

#include "adamoge/tape.hpp"

// Differentiable primitives over Tape values. Shapes are row-major; "rows"
// means all leading axes flattened and the last axis kept.
namespace adamoge::ops {

Var reshape(Var x, Shape shape);
// (A, B, C) -> (A, C, B)
Var swap_last_axes(Var x);

// Half-spectrum along the last axis: (..., L) -> (..., L/2+1) complex.
CVar rfft(Var x);
// Inverse along the last axis: (..., F) complex -> (..., length), F == length/2+1.
CVar scale(CVar x, double c);
Var irfft(CVar x, std::size_t length);

// Splits a (2 x n) value holding [re ; im] into two parts of the given shape.
CVar split_complex(Var stacked, const Shape& part_shape);

// sqrt(re^2 + im^2) with subgradient 0 at the origin.
Var magnitude(CVar x);

// Mean of a rank-3 tensor over axis 1 or 2, giving rank 2.
Var mean_axis(Var x, std::size_t axis);
// Concatenate two rank-2 tensors with equal row counts along columns.
Var concat_cols(Var a, Var b);

// x (N x in) * W^T (in x out) + b. b may be an invalid Var.
Var linear(Var x, Var w, Var b);

Var relu(Var x);
Var sigmoid(Var x);
Var softmax_rows(Var x);

Var add(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var x, double c);
Var add_scalar(Var x, double c);

Var sum(Var x);
Var sum_squares(Var x);
Var mean_squared_error(Var pred, const Tensor& target);

}  // namespace adamoge::ops
