#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace sepvar {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Base class of every error raised by the library. Carries optional tags
/// (dataset index, solver method) that outer layers attach while the
/// exception propagates, so `throw;` keeps the dynamic type intact.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}

  virtual const char* kind() const noexcept { return "error"; }

  int dataset() const noexcept { return dataset_; }
  const std::string& method() const noexcept { return method_; }
  void set_dataset(int k) noexcept { dataset_ = k; }
  void set_method(std::string m) { method_ = std::move(m); }

 private:
  int dataset_ = -1;
  std::string method_;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "invalid-input"; }
};

class RankDeficient : public Error {
 public:
  RankDeficient(Index rank, Index cols)
      : Error("matrix is rank deficient: rank " + std::to_string(rank) + " < " +
              std::to_string(cols)),
        rank_(rank) {}
  const char* kind() const noexcept override { return "rank-deficient"; }
  Index rank() const noexcept { return rank_; }

 private:
  Index rank_;
};

class Overflow : public Error {
 public:
  explicit Overflow(Index index)
      : Error("exponent overflow at sample " + std::to_string(index)), index_(index) {}
  const char* kind() const noexcept override { return "overflow"; }
  Index index() const noexcept { return index_; }

 private:
  Index index_;
};

class EvaluationFailed : public Error {
 public:
  EvaluationFailed(const std::string& what, Vector iterate)
      : Error(what), iterate_(std::move(iterate)) {}
  const char* kind() const noexcept override { return "failed-evaluation"; }
  const Vector& iterate() const noexcept { return iterate_; }

 private:
  Vector iterate_;
};

class TooLarge : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "too-large"; }
};

class GenerationError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "generation"; }
};

}  // namespace sepvar
