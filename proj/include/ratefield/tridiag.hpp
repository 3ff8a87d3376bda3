#pragma once

#include <Eigen/Core>

#include "ratefield/errors.hpp"

namespace ratefield {

using Index = Eigen::Index;

// Symmetric tridiagonal matrix (main diagonal d, off diagonal e) with an
// in-place LDL^T factorization. Covers the posterior Hessian, the Newton
// solves, and the Crank-Nicolson stepping matrices; everything is O(n).
template <typename Scalar>
class SymTridiag {
public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  SymTridiag() = default;
  SymTridiag(Vector diag, Vector off) : d_(std::move(diag)), e_(std::move(off)) {
    if (e_.size() != d_.size() - 1)
      throw InvalidArgument("SymTridiag: off diagonal must have size n-1");
  }

  Eigen::Index size() const { return d_.size(); }
  const Vector& diagonal() const { return d_; }
  const Vector& off_diagonal() const { return e_; }

  Vector apply(const Vector& x) const {
    const Eigen::Index n = size();
    Vector y = d_.cwiseProduct(x);
    y.head(n - 1) += e_.cwiseProduct(x.tail(n - 1));
    y.tail(n - 1) += e_.cwiseProduct(x.head(n - 1));
    return y;
  }

  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> dense() const {
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> m =
        Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(size(), size());
    m.diagonal() = d_;
    if (size() > 1) {
      m.template diagonal<1>() = e_;
      m.template diagonal<-1>() = e_;
    }
    return m;
  }

  // LDL^T factorization; requires positive pivots (SPD input).
  class Factor {
  public:
    Factor(const SymTridiag& m) : D_(m.size()), L_(std::max<Eigen::Index>(m.size() - 1, 0)) {
      const Eigen::Index n = m.size();
      if (n == 0) throw InvalidArgument("SymTridiag::Factor: empty matrix");
      D_[0] = m.d_[0];
      for (Eigen::Index i = 1; i < n; ++i) {
        if (!(D_[i - 1] > Scalar(0)))
          throw NumericalFailure("SymTridiag::Factor: nonpositive pivot");
        L_[i - 1] = m.e_[i - 1] / D_[i - 1];
        D_[i] = m.d_[i] - L_[i - 1] * m.e_[i - 1];
      }
      if (!(D_[n - 1] > Scalar(0)))
        throw NumericalFailure("SymTridiag::Factor: nonpositive pivot");
    }

    Vector solve(Vector b) const {
      const Eigen::Index n = D_.size();
      for (Eigen::Index i = 1; i < n; ++i) b[i] -= L_[i - 1] * b[i - 1];
      b.array() /= D_.array();
      for (Eigen::Index i = n - 2; i >= 0; --i) b[i] -= L_[i] * b[i + 1];
      return b;
    }

    Scalar log_determinant() const { return D_.array().log().sum(); }
    const Vector& pivots() const { return D_; }

  private:
    Vector D_, L_;
  };

  Factor factorize() const { return Factor(*this); }

private:
  Vector d_, e_;
};

using SymTridiagd = SymTridiag<double>;

}  // namespace ratefield
