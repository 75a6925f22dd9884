#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hicontour/contour.hpp"

namespace hicontour {

// N x L column stack of every distance vector in a corpus.
struct ContourMatrix {
  Eigen::MatrixXd data;
  std::vector<int> object_index;  // source object of each column

  int n_bins() const noexcept { return static_cast<int>(data.rows()); }
  int n_contours() const noexcept { return static_cast<int>(data.cols()); }
};

enum class SubspaceMethod : std::uint32_t { Svd = 0, Fms = 1 };

const char* to_string(SubspaceMethod method) noexcept;
SubspaceMethod parse_method(const std::string& name);

struct FitMetadata {
  int iterations = 0;
  double final_objective = 0.0;
  std::vector<double> objective_trace;  // F(U_0), F(U_1), ...
  // max ||U_k^T U_k - I||_F over every iterate
  double max_orthonormality_error = 0.0;
};

struct SubspaceBasis {
  Eigen::MatrixXd basis;  // N x M, orthonormal columns
  SubspaceMethod method = SubspaceMethod::Svd;
  FitMetadata fit;

  int n_bins() const noexcept { return static_cast<int>(basis.rows()); }
  int rank() const noexcept { return static_cast<int>(basis.cols()); }
};

using Sha256 = std::array<std::uint8_t, 32>;

struct CoefficientSet {
  std::vector<Eigen::MatrixXd> omega;  // M x K_j per object
  Sha256 basis_hash{};
};

struct FmsOptions {
  double delta = 1e-10;
  int max_iter = 100;
  double tol = 1e-8;
};

// Throws InvalidArgument on an empty corpus, mismatched bin counts or
// negative/non-finite radii.
ContourMatrix build_contour_matrix(const std::vector<HierarchicalEncoding>& encodings);

// Top-M left singular vectors, largest-magnitude entry of each made positive.
SubspaceBasis svd_basis(const Eigen::MatrixXd& data, int rank);
inline SubspaceBasis svd_basis(const ContourMatrix& a, int rank) {
  return svd_basis(a.data, rank);
}

// Fast median subspace: iteratively reweighted eigen-decomposition that
// minimizes sum_j ||(I - U U^T) r_j||_2, warm-started from svd_basis.
SubspaceBasis fms_basis(const Eigen::MatrixXd& data, int rank,
                        const FmsOptions& options = {});
inline SubspaceBasis fms_basis(const ContourMatrix& a, int rank,
                               const FmsOptions& options = {}) {
  return fms_basis(a.data, rank, options);
}

SubspaceBasis fit_basis(const ContourMatrix& a, int rank, SubspaceMethod method,
                        const FmsOptions& options = {});

// sum_j ||(I - U U^T) r_j||_2
double median_objective(const Eigen::MatrixXd& basis, const Eigen::MatrixXd& data);

Eigen::MatrixXd radii_matrix(const HierarchicalEncoding& encoding);

CoefficientSet project(const SubspaceBasis& basis, const HierarchicalEncoding& encoding);
CoefficientSet project(const SubspaceBasis& basis,
                       const std::vector<HierarchicalEncoding>& encodings);

// U * Omega per object, clamped to >= 0 unless `clamp` is false.
std::vector<Eigen::MatrixXd> reconstruct_radii(const SubspaceBasis& basis,
                                               const CoefficientSet& coeffs,
                                               bool clamp = true);

// Encoding with its radii replaced by the columns of `radii`.
HierarchicalEncoding with_radii(const HierarchicalEncoding& encoding,
                                const Eigen::MatrixXd& radii);

// Singular values of A, descending.
Eigen::VectorXd singular_values(const Eigen::MatrixXd& data);

// (sum s)^2 / sum s^2 over the singular values of A.
double effective_rank(const Eigen::MatrixXd& data);
inline double effective_rank(const ContourMatrix& a) { return effective_rank(a.data); }

// sin of the largest principal angle between span(a) and span(b).
double max_principal_angle_sin(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);
double max_principal_angle(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

}  // namespace hicontour
