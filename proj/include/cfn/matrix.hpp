#pragma once

#include <cstddef>
#include <vector>

namespace cfn {

// Minimal dense row-major matrix, enough for the clustering pipeline.
struct Matrix {
    std::size_t rows = 0, cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

struct EigenDecomposition {
    std::vector<double> eigenvalues;  // ascending
    Matrix eigenvectors;              // column z pairs with eigenvalues[z]
};

// Cyclic Jacobi rotations on a dense symmetric matrix. Unconditionally
// stable; fine for the desk-scale n used here.
EigenDecomposition jacobi_eigen_symmetric(const Matrix& a, int max_sweeps = 100);

}  // namespace cfn
