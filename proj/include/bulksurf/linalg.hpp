#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace bulksurf {

using Vec = Eigen::VectorXd;
using IVec = Eigen::VectorXi;
using Mat = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

} // namespace bulksurf
