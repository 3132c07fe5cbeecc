#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qdc {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr cplx kI{0.0, 1.0};

/// Largest number of spin-1/2 sites a dense state may hold.
inline constexpr int kMaxSites = 22;

/// Bloch-sphere direction used for rotation axes.
struct Axis {
    double x = 0.0;
    double y = 0.0;
    double z = 1.0;

    static Axis X() { return {1.0, 0.0, 0.0}; }
    static Axis Y() { return {0.0, 1.0, 0.0}; }
    static Axis Z() { return {0.0, 0.0, 1.0}; }
    /// Unit vector in the x-y plane at angle phi from +x.
    static Axis in_plane(double phi);
    /// Unit vector in the x-z plane at polar angle theta from +z (x >= 0 for 0 < theta < pi).
    static Axis xz(double theta);

    double norm() const;
    Axis normalized() const;
    double dot(const Axis& o) const { return x * o.x + y * o.y + z * o.z; }
};

/// Raised when a numerical procedure cannot meet its requested tolerance.
class ToleranceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when population outside an encoded subspace exceeds a limit.
class LeakageError : public std::runtime_error {
public:
    LeakageError(const std::string& what, double leakage)
        : std::runtime_error(what), leakage_(leakage) {}
    double leakage() const { return leakage_; }

private:
    double leakage_;
};

inline std::size_t dim_of(int n_sites) { return std::size_t{1} << n_sites; }

}  // namespace qdc
