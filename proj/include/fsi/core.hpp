#ifndef FSI_CORE_HPP
#define FSI_CORE_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace fsi {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2 operator/(double s) const { return {x / s, y / s}; }
    Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
    Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double cross(const Vec2& o) const { return x * o.y - y * o.x; }
    double norm() const { return std::sqrt(x * x + y * y); }
    double norm2() const { return x * x + y * y; }
};

inline Vec2 operator*(double s, const Vec2& v) { return {s * v.x, s * v.y}; }

// Rotation of r by 90 degrees: the 2D analogue of e3 x r.
inline Vec2 perp(const Vec2& r) { return {-r.y, r.x}; }

struct Circle {
    Vec2 center;
    double radius = 0.0;
};

// Error taxonomy shared across modules. Each condition named by the module
// contracts gets its own type so callers and tests can discriminate.
struct FsiError : std::runtime_error {
    explicit FsiError(const std::string& msg) : std::runtime_error(msg) {}
};

#define FSI_DEFINE_ERROR(Name)                                              \
    struct Name : FsiError {                                                \
        explicit Name(const std::string& msg) : FsiError(#Name ": " + msg) {} \
    }

FSI_DEFINE_ERROR(InfeasibleGeometry);
FSI_DEFINE_ERROR(MeshingFailed);
FSI_DEFINE_ERROR(ParseError);
FSI_DEFINE_ERROR(MissingGroup);
FSI_DEFINE_ERROR(DegenerateProjection);
FSI_DEFINE_ERROR(PointOutsideDomain);
FSI_DEFINE_ERROR(UnsupportedDegree);
FSI_DEFINE_ERROR(InvalidField);
FSI_DEFINE_ERROR(NegativeJacobian);
FSI_DEFINE_ERROR(InconsistentDirichlet);
FSI_DEFINE_ERROR(NewtonDiverged);
FSI_DEFINE_ERROR(LinearSolveFailed);
FSI_DEFINE_ERROR(MeshTangled);
FSI_DEFINE_ERROR(ProximityViolation);
FSI_DEFINE_ERROR(ConnectivityMismatch);
FSI_DEFINE_ERROR(MaxIterationsExceeded);
FSI_DEFINE_ERROR(BreakdownDetected);
FSI_DEFINE_ERROR(SingularMatrix);
FSI_DEFINE_ERROR(FactorizationFailed);
FSI_DEFINE_ERROR(StepRejected);
FSI_DEFINE_ERROR(SimulationAborted);
FSI_DEFINE_ERROR(IncompatibleSampling);
FSI_DEFINE_ERROR(IoError);
FSI_DEFINE_ERROR(ConfigError);

#undef FSI_DEFINE_ERROR

} // namespace fsi

#endif
