#include <gtest/gtest.h>

#include <limits>

#include "adamoge/errors.hpp"
#include "adamoge/grad_check.hpp"
#include "adamoge/ops.hpp"

using namespace adamoge;

TEST(GradCheck, SumOfSquares) {
  ParameterStore s;
  s.add("theta", Tensor::vector({0.3, -1.2, 2.5}));
  const auto r = grad_check([](Tape& t, ParameterStore& st) { return ops::sum_squares(t.parameter(st.at("theta"))); },
                            s, 1e-5);
  EXPECT_LT(r.max_relative_error, 1e-8);
  EXPECT_EQ(r.checked, 3u);
}

TEST(GradCheck, ConstantLossHasZeroError) {
  ParameterStore s;
  s.add("theta", Tensor::vector({1.0, 2.0}));
  const auto r = grad_check(
      [](Tape& t, ParameterStore& st) {
        t.parameter(st.at("theta"));
        return t.constant(Tensor::scalar(4.0));
      },
      s, 1e-5);
  EXPECT_EQ(r.max_relative_error, 0.0);
  EXPECT_EQ(r.analytic, 0.0);
  EXPECT_EQ(r.numeric, 0.0);
}

TEST(GradCheck, RejectsEpsOutsideRange) {
  ParameterStore s;
  s.add("theta", Tensor::scalar(1.0));
  auto loss = [](Tape& t, ParameterStore& st) { return ops::sum_squares(t.parameter(st.at("theta"))); };
  EXPECT_THROW(grad_check(loss, s, 1e-8), std::invalid_argument);
  EXPECT_THROW(grad_check(loss, s, 1e-2), std::invalid_argument);
}

TEST(GradCheck, NonFiniteLossNamesParameter) {
  ParameterStore s;
  s.add("good", Tensor::scalar(1.0));
  s.add("bad", Tensor::scalar(1.0));
  auto loss = [](Tape& t, ParameterStore& st) {
    const Var g = ops::sum_squares(t.parameter(st.at("good")));
    return ops::add_scalar(ops::add(g, ops::sum(t.parameter(st.at("bad")))),
                           st.at("bad").value[0] > 1.0 ? std::numeric_limits<double>::quiet_NaN() : 0.0);
  };
  try {
    grad_check(loss, s, 1e-5);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("bad"), std::string::npos) << e.what();
  }
}

TEST(GradCheck, FilterSkipsParameters) {
  ParameterStore s;
  s.add("a", Tensor::vector({1.0, 2.0}));
  s.add("b", Tensor::vector({3.0}));
  const auto r = grad_check(
      [](Tape& t, ParameterStore& st) {
        return ops::add(ops::sum_squares(t.parameter(st.at("a"))), ops::sum_squares(t.parameter(st.at("b"))));
      },
      s, 1e-5, [](const Parameter& p) { return p.name == "b"; });
  EXPECT_EQ(r.checked, 1u);
}

TEST(GradCheck, SkipsNonTrainable) {
  ParameterStore s;
  s.add("a", Tensor::vector({1.0, 2.0}));
  s.add("frozen", Tensor::vector({3.0}), false);
  const auto r = grad_check(
      [](Tape& t, ParameterStore& st) {
        return ops::add(ops::sum_squares(t.parameter(st.at("a"))), ops::sum_squares(t.parameter(st.at("frozen"))));
      },
      s, 1e-5);
  EXPECT_EQ(r.checked, 2u);
}
