#include "cfn/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cfn {

EigenDecomposition jacobi_eigen_symmetric(const Matrix& input, int max_sweeps) {
    const std::size_t n = input.rows;
    if (n == 0 || input.cols != n) throw std::invalid_argument("jacobi: matrix not square");
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(input(i, j) - input(j, i)) >
                1e-9 * (1.0 + std::abs(input(i, j)) + std::abs(input(j, i))))
                throw std::invalid_argument("jacobi: matrix not symmetric");

    Matrix a = input;
    Matrix v(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

    auto off_norm = [&]() {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) s += a(i, j) * a(i, j);
        return std::sqrt(2.0 * s);
    };

    double scale = 0.0;
    for (double x : input.data) scale = std::max(scale, std::abs(x));
    const double tol = std::max(1e-300, 1e-14 * std::max(scale, 1.0));

    for (int sweep = 0; sweep < max_sweeps && off_norm() > tol; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) <= 1e-300) continue;
                const double app = a(p, p), aqq = a(q, q);
                const double theta = 0.5 * (aqq - app) / apq;
                // Smaller-angle root of t^2 + 2 t theta - 1 = 0.
                double t = (theta >= 0.0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                const double tau = s / (1.0 + c);

                a(p, p) = app - t * apq;
                a(q, q) = aqq + t * apq;
                a(p, q) = a(q, p) = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    if (i != p && i != q) {
                        const double aip = a(i, p), aiq = a(i, q);
                        a(i, p) = a(p, i) = aip - s * (aiq + tau * aip);
                        a(i, q) = a(q, i) = aiq + s * (aip - tau * aiq);
                    }
                    const double vip = v(i, p), viq = v(i, q);
                    v(i, p) = vip - s * (viq + tau * vip);
                    v(i, q) = viq + s * (vip - tau * viq);
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });

    EigenDecomposition out;
    out.eigenvalues.resize(n);
    out.eigenvectors = Matrix(n, n);
    for (std::size_t z = 0; z < n; ++z) {
        out.eigenvalues[z] = a(order[z], order[z]);
        for (std::size_t i = 0; i < n; ++i) out.eigenvectors(i, z) = v(i, order[z]);
    }
    return out;
}

}  // namespace cfn
