#include "hicontour/subspace.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/SVD>

#include "hicontour/error.hpp"
#include "hicontour/serialize.hpp"

namespace hicontour {

const char* to_string(SubspaceMethod method) noexcept {
  return method == SubspaceMethod::Svd ? "svd" : "fms";
}

SubspaceMethod parse_method(const std::string& name) {
  if (name == "svd") return SubspaceMethod::Svd;
  if (name == "fms") return SubspaceMethod::Fms;
  throw Error(ErrorCode::InvalidArgument, "unknown subspace method '" + name + "'");
}

namespace {

void check_rank(const Eigen::MatrixXd& data, int rank) {
  const auto limit = std::min(data.rows(), data.cols());
  if (rank < 1 || rank > limit) {
    throw Error(ErrorCode::InvalidArgument, "rank " + std::to_string(rank) +
                                                " outside [1, " + std::to_string(limit) + "]");
  }
  if (!data.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "contour matrix contains non-finite entries");
  }
}

void fix_signs(Eigen::MatrixXd& basis) {
  for (Eigen::Index c = 0; c < basis.cols(); ++c) {
    Eigen::Index best = 0;
    basis.col(c).cwiseAbs().maxCoeff(&best);
    if (basis(best, c) < 0.0) basis.col(c) *= -1.0;
  }
}

double orthonormality_error(const Eigen::MatrixXd& basis) {
  const auto m = basis.cols();
  return (basis.transpose() * basis - Eigen::MatrixXd::Identity(m, m)).norm();
}

Eigen::VectorXd residual_norms(const Eigen::MatrixXd& basis, const Eigen::MatrixXd& data) {
  const Eigen::MatrixXd residual = data - basis * (basis.transpose() * data);
  return residual.colwise().norm().transpose();
}

}  // namespace

ContourMatrix build_contour_matrix(const std::vector<HierarchicalEncoding>& encodings) {
  int n_bins = -1;
  Eigen::Index total = 0;
  for (const auto& enc : encodings) {
    for (const auto& c : enc.contours) {
      if (n_bins < 0) n_bins = c.n_bins();
      if (c.n_bins() != n_bins) {
        throw Error(ErrorCode::InvalidArgument, "contours disagree on the number of bins");
      }
      ++total;
    }
  }
  if (total == 0) throw Error(ErrorCode::InvalidArgument, "corpus has no contours");

  ContourMatrix out;
  out.data.resize(n_bins, total);
  out.object_index.reserve(total);
  Eigen::Index col = 0;
  for (std::size_t obj = 0; obj < encodings.size(); ++obj) {
    for (const auto& c : encodings[obj].contours) {
      for (int k = 0; k < n_bins; ++k) {
        const double r = c.radii[k];
        if (!std::isfinite(r) || r < 0.0) {
          throw Error(ErrorCode::InvalidArgument, "radii must be finite and non-negative");
        }
        out.data(k, col) = r;
      }
      out.object_index.push_back(static_cast<int>(obj));
      ++col;
    }
  }
  return out;
}

SubspaceBasis svd_basis(const Eigen::MatrixXd& data, int rank) {
  check_rank(data, rank);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(data, Eigen::ComputeThinU);
  SubspaceBasis out;
  out.basis = svd.matrixU().leftCols(rank);
  fix_signs(out.basis);
  out.method = SubspaceMethod::Svd;
  out.fit.final_objective = median_objective(out.basis, data);
  out.fit.objective_trace = {out.fit.final_objective};
  out.fit.max_orthonormality_error = orthonormality_error(out.basis);
  return out;
}

double median_objective(const Eigen::MatrixXd& basis, const Eigen::MatrixXd& data) {
  return residual_norms(basis, data).sum();
}

SubspaceBasis fms_basis(const Eigen::MatrixXd& data, int rank, const FmsOptions& options) {
  check_rank(data, rank);
  if (!(options.delta > 0.0) || options.max_iter < 0 || !(options.tol >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "invalid FMS options");
  }
  const Eigen::Index n = data.rows();

  SubspaceBasis out = svd_basis(data, rank);
  out.method = SubspaceMethod::Fms;
  Eigen::MatrixXd basis = out.basis;
  double objective = out.fit.final_objective;
  auto& fit = out.fit;

  Eigen::MatrixXd weighted(n, data.cols());
  Eigen::MatrixXd gram(n, n);
  for (int iter = 0; iter < options.max_iter; ++iter) {
    const Eigen::VectorXd res = residual_norms(basis, data);
    for (Eigen::Index j = 0; j < data.cols(); ++j) {
      weighted.col(j) = data.col(j) / std::sqrt(std::max(res[j], options.delta));
    }
    gram.setZero();
    gram.selfadjointView<Eigen::Lower>().rankUpdate(weighted);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
        gram.selfadjointView<Eigen::Lower>());
    // Eigenvalues ascend; keep the top `rank` in descending order.
    Eigen::MatrixXd next = eig.eigenvectors().rightCols(rank).rowwise().reverse();
    fix_signs(next);
    const double next_objective = median_objective(next, data);

    fit.iterations = iter + 1;
    fit.max_orthonormality_error =
        std::max(fit.max_orthonormality_error, orthonormality_error(next));

    // An uphill proposal is discarded; the iterate stays put and the loop ends.
    const double decrease = objective - next_objective;
    if (next_objective <= objective) {
      basis = std::move(next);
      objective = next_objective;
    }
    fit.objective_trace.push_back(objective);
    if (decrease < options.tol * (1.0 + objective)) break;
  }
  out.basis = std::move(basis);
  fit.final_objective = objective;
  return out;
}

SubspaceBasis fit_basis(const ContourMatrix& a, int rank, SubspaceMethod method,
                        const FmsOptions& options) {
  return method == SubspaceMethod::Svd ? svd_basis(a, rank) : fms_basis(a, rank, options);
}

Eigen::MatrixXd radii_matrix(const HierarchicalEncoding& encoding) {
  if (encoding.contours.empty()) return {};
  const int n = encoding.contours.front().n_bins();
  Eigen::MatrixXd r(n, encoding.size());
  for (int j = 0; j < encoding.size(); ++j) {
    const auto& radii = encoding.contours[j].radii;
    if (static_cast<int>(radii.size()) != n) {
      throw Error(ErrorCode::InvalidArgument, "contours disagree on the number of bins");
    }
    r.col(j) = Eigen::Map<const Eigen::VectorXd>(radii.data(), n);
  }
  return r;
}

CoefficientSet project(const SubspaceBasis& basis, const std::vector<HierarchicalEncoding>& encodings) {
  CoefficientSet out;
  out.basis_hash = basis_hash(basis);
  out.omega.reserve(encodings.size());
  for (const auto& enc : encodings) {
    const Eigen::MatrixXd r = radii_matrix(enc);
    if (r.cols() > 0 && r.rows() != basis.n_bins()) {
      throw Error(ErrorCode::InvalidArgument, "encoding bins do not match the basis");
    }
    if (r.cols() == 0) {
      out.omega.emplace_back(basis.rank(), 0);
    } else {
      out.omega.push_back(basis.basis.transpose() * r);
    }
  }
  return out;
}

CoefficientSet project(const SubspaceBasis& basis, const HierarchicalEncoding& encoding) {
  return project(basis, std::vector<HierarchicalEncoding>{encoding});
}

std::vector<Eigen::MatrixXd> reconstruct_radii(const SubspaceBasis& basis,
                                               const CoefficientSet& coeffs, bool clamp) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(coeffs.omega.size());
  for (const auto& omega : coeffs.omega) {
    if (omega.rows() != basis.rank()) {
      throw Error(ErrorCode::InvalidArgument, "coefficient rank does not match the basis");
    }
    Eigen::MatrixXd r = basis.basis * omega;
    if (clamp) r = r.cwiseMax(0.0);
    out.push_back(std::move(r));
  }
  return out;
}

HierarchicalEncoding with_radii(const HierarchicalEncoding& encoding, const Eigen::MatrixXd& radii) {
  if (radii.cols() != encoding.size()) {
    throw Error(ErrorCode::InvalidArgument, "radii column count does not match the encoding");
  }
  HierarchicalEncoding out = encoding;
  for (int j = 0; j < out.size(); ++j) {
    auto& dst = out.contours[j].radii;
    dst.assign(radii.col(j).data(), radii.col(j).data() + radii.rows());
  }
  return out;
}

Eigen::VectorXd singular_values(const Eigen::MatrixXd& data) {
  // Reduce the long side with a QR first; squaring through a Gram matrix
  // would put sqrt(eps)-sized noise on the zero singular values.
  const bool wide = data.cols() > data.rows();
  const Eigen::MatrixXd& tall = wide ? Eigen::MatrixXd(data.transpose()) : data;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(tall);
  const Eigen::Index n = tall.cols();
  const Eigen::MatrixXd r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(r);
  return svd.singularValues();
}

double effective_rank(const Eigen::MatrixXd& data) {
  if (data.size() == 0 || !data.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "effective_rank: empty or non-finite matrix");
  }
  const Eigen::VectorXd s = singular_values(data);
  const double l2 = s.squaredNorm();
  if (!(l2 > 0.0)) throw Error(ErrorCode::InvalidArgument, "effective_rank: zero matrix");
  const double l1 = s.sum();
  return l1 * l1 / l2;
}

double max_principal_angle_sin(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows()) throw Error(ErrorCode::InvalidArgument, "ambient dimension mismatch");
  const Eigen::MatrixXd residual = b - a * (a.transpose() * b);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(residual);
  return std::min(1.0, svd.singularValues()(0));
}

double max_principal_angle(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return std::asin(max_principal_angle_sin(a, b));
}

}  // namespace hicontour
