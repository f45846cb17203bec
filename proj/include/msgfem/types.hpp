#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace msgfem {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;
using Matrix6 = Eigen::Matrix<double, 6, 6>;
using Matrix3 = Eigen::Matrix3d;

/// Spatial point; 2D meshes keep z = 0.
using Point = Eigen::Vector3d;

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Violated precondition on user input (bad extents, counts, parameters).
class InvalidArgument : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

/// Factorization breakdown, eigensolver failure, non-convergence.
class SolverError : public Error {
public:
  using Error::Error;
};

} // namespace msgfem
