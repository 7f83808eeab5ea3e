#include "axon/matexp.hpp"

#include <cmath>

namespace axon {
namespace {

// L1-norm thresholds for the [3/3] ... [13/13] Pade approximants.
constexpr double kTheta3 = 1.495585217958292e-2;
constexpr double kTheta5 = 2.539398330063230e-1;
constexpr double kTheta7 = 9.504178996162932e-1;
constexpr double kTheta9 = 2.097847961257068e0;
constexpr double kTheta13 = 5.371920351148152e0;

using Mat = Eigen::MatrixXd;

void pade3(const Mat& A, const Mat& A2, Mat& U, Mat& V) {
    const double b[] = {120.0, 60.0, 12.0, 1.0};
    const Mat I = Mat::Identity(A.rows(), A.cols());
    U = A * (b[3] * A2 + b[1] * I);
    V = b[2] * A2 + b[0] * I;
}

void pade5(const Mat& A, const Mat& A2, const Mat& A4, Mat& U, Mat& V) {
    const double b[] = {30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0};
    const Mat I = Mat::Identity(A.rows(), A.cols());
    U = A * (b[5] * A4 + b[3] * A2 + b[1] * I);
    V = b[4] * A4 + b[2] * A2 + b[0] * I;
}

void pade7(const Mat& A, const Mat& A2, const Mat& A4, const Mat& A6, Mat& U, Mat& V) {
    const double b[] = {17297280.0, 8648640.0, 1995840.0, 277200.0,
                        25200.0,    1512.0,    56.0,      1.0};
    const Mat I = Mat::Identity(A.rows(), A.cols());
    U = A * (b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * I);
    V = b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * I;
}

void pade9(const Mat& A, const Mat& A2, const Mat& A4, const Mat& A6, Mat& U, Mat& V) {
    const double b[] = {17643225600.0, 8821612800.0, 2075673600.0, 302702400.0,
                        30270240.0,    2162160.0,    110880.0,     3960.0,
                        90.0,          1.0};
    const Mat I = Mat::Identity(A.rows(), A.cols());
    const Mat A8 = A6 * A2;
    U = A * (b[9] * A8 + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * I);
    V = b[8] * A8 + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * I;
}

void pade13(const Mat& A, const Mat& A2, const Mat& A4, const Mat& A6, Mat& U, Mat& V) {
    const double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                        1187353796428800.0,  129060195264000.0,   10559470521600.0,
                        670442572800.0,      33522128640.0,       1323241920.0,
                        40840800.0,          960960.0,            16380.0,
                        182.0,               1.0};
    const Mat I = Mat::Identity(A.rows(), A.cols());
    U = A * (A6 * (b[13] * A6 + b[11] * A4 + b[9] * A2) + b[7] * A6 + b[5] * A4 +
             b[3] * A2 + b[1] * I);
    V = A6 * (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 + b[4] * A4 + b[2] * A2 +
        b[0] * I;
}

}  // namespace

Eigen::MatrixXd expm(const Eigen::MatrixXd& A) {
    const double norm = A.cwiseAbs().colwise().sum().maxCoeff();  // induced 1-norm
    Mat U, V;
    if (norm <= kTheta9) {
        const Mat A2 = A * A;
        if (norm <= kTheta3) {
            pade3(A, A2, U, V);
        } else {
            const Mat A4 = A2 * A2;
            if (norm <= kTheta5) {
                pade5(A, A2, A4, U, V);
            } else {
                const Mat A6 = A4 * A2;
                if (norm <= kTheta7) {
                    pade7(A, A2, A4, A6, U, V);
                } else {
                    pade9(A, A2, A4, A6, U, V);
                }
            }
        }
        return (V - U).partialPivLu().solve(V + U);
    }

    const int squarings = std::max(0, int(std::ceil(std::log2(norm / kTheta13))));
    const Mat As = A / std::pow(2.0, squarings);
    const Mat A2 = As * As;
    const Mat A4 = A2 * A2;
    const Mat A6 = A4 * A2;
    pade13(As, A2, A4, A6, U, V);
    Mat E = (V - U).partialPivLu().solve(V + U);
    for (int i = 0; i < squarings; ++i) E = E * E;
    return E;
}

}  // namespace axon
