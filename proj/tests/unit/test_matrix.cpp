#include "oracles.hpp"

#include "roundtrip/errors.hpp"
#include "roundtrip/matrix.hpp"

#include <gtest/gtest.h>

#include <limits>

using namespace roundtrip;

TEST(Matrix, ConstructionChecksShape) {
    EXPECT_THROW(Matrix(2, 2, std::vector<double>{1, 2, 3}), ShapeError);
    EXPECT_THROW(Matrix::from_rows({{1, 2}, {3}}), ShapeError);
    EXPECT_THROW(Matrix::from_external(1, 1, {std::numeric_limits<double>::quiet_NaN()}), InputError);
}

TEST(Matrix, ProductsAgreeWithEigen) {
    Rng rng(1);
    const Matrix a = oracle::random_matrix(rng, 4, 3);
    const Matrix b = oracle::random_matrix(rng, 3, 5);
    const Matrix c = oracle::random_matrix(rng, 5, 3);
    const Matrix d = oracle::random_matrix(rng, 4, 2);
    const auto ea = oracle::to_eigen(a);
    const Eigen::MatrixXd ab = ea * oracle::to_eigen(b);
    const Eigen::MatrixXd act = ea * oracle::to_eigen(c).transpose();
    const Eigen::MatrixXd atd = ea.transpose() * oracle::to_eigen(d);
    EXPECT_TRUE(oracle::to_eigen(matmul(a, b)).isApprox(ab, 1e-14));
    EXPECT_TRUE(oracle::to_eigen(matmul_bt(a, c)).isApprox(act, 1e-14));
    EXPECT_TRUE(oracle::to_eigen(matmul_at(a, d)).isApprox(atd, 1e-14));
    EXPECT_THROW(matmul(a, a), ShapeError);
}

TEST(Matrix, GatherAndTranspose) {
    const Matrix m = Matrix::from_rows({{1, 2}, {3, 4}, {5, 6}});
    const std::vector<std::size_t> idx{2, 0};
    EXPECT_EQ(m.gather_rows(idx), Matrix::from_rows({{5, 6}, {1, 2}}));
    EXPECT_EQ(m.transposed(), Matrix::from_rows({{1, 3, 5}, {2, 4, 6}}));
    const std::vector<std::size_t> bad{3};
    EXPECT_THROW(m.gather_rows(bad), ShapeError);
}
