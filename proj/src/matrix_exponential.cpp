#include "dicke/matrix_exponential.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace dicke {

namespace {

constexpr std::array<double, 4> kB3 = {120.0, 60.0, 12.0, 1.0};
constexpr std::array<double, 6> kB5 = {30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0};
constexpr std::array<double, 8> kB7 = {17297280.0, 8648640.0, 1995840.0, 277200.0,
                                       25200.0,    1512.0,    56.0,      1.0};
constexpr std::array<double, 10> kB9 = {17643225600.0, 8821612800.0, 2075673600.0, 302702400.0,
                                        30270240.0,    2162160.0,    110880.0,     3960.0,
                                        90.0,          1.0};
constexpr std::array<double, 14> kB13 = {
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
    129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
    1323241920.0,        40840800.0,          960960.0,           16380.0,
    182.0,               1.0};

constexpr double kTheta3 = 1.495585217958292e-2;
constexpr double kTheta5 = 2.539398330063230e-1;
constexpr double kTheta7 = 9.504178996162932e-1;
constexpr double kTheta9 = 2.097847961257068e0;
constexpr double kTheta13 = 5.371920351148152e0;

// Low-degree approximant: U = A * sum_{odd k} b_k A^{k-1}, V = sum_{even k} b_k A^k.
template <std::size_t M>
void pade_low(const Eigen::MatrixXd& a, const std::array<double, M>& b, Eigen::MatrixXd& u,
              Eigen::MatrixXd& v) {
    const auto n = a.rows();
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd a2 = a * a;
    Eigen::MatrixXd power = id;
    Eigen::MatrixXd uu = b[1] * id;
    v = b[0] * id;
    for (std::size_t k = 2; k < M; k += 2) {
        power = power * a2;
        v += b[k] * power;
        if (k + 1 < M) uu += b[k + 1] * power;
    }
    u = a * uu;
}

void pade13(const Eigen::MatrixXd& a, Eigen::MatrixXd& u, Eigen::MatrixXd& v) {
    const auto& b = kB13;
    const auto n = a.rows();
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd a2 = a * a;
    const Eigen::MatrixXd a4 = a2 * a2;
    const Eigen::MatrixXd a6 = a4 * a2;
    Eigen::MatrixXd inner = b[13] * a6 + b[11] * a4 + b[9] * a2;
    u = a * (a6 * inner + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id);
    inner = b[12] * a6 + b[10] * a4 + b[8] * a2;
    v = a6 * inner + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;
}

}  // namespace

Eigen::MatrixXd expm(const Eigen::MatrixXd& a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("expm: matrix must be square");
    if (a.size() == 0) return a;
    if (!a.allFinite()) throw std::domain_error("expm: non-finite input");

    const double norm = a.cwiseAbs().colwise().sum().maxCoeff();
    Eigen::MatrixXd u, v;
    int squarings = 0;
    if (norm <= kTheta3) {
        pade_low(a, kB3, u, v);
    } else if (norm <= kTheta5) {
        pade_low(a, kB5, u, v);
    } else if (norm <= kTheta7) {
        pade_low(a, kB7, u, v);
    } else if (norm <= kTheta9) {
        pade_low(a, kB9, u, v);
    } else {
        squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm / kTheta13))));
        pade13(a * std::ldexp(1.0, -squarings), u, v);
    }

    Eigen::MatrixXd result = (v - u).partialPivLu().solve(v + u);
    for (int i = 0; i < squarings; ++i) result = result * result;
    return result;
}

}  // namespace dicke
