#ifndef KESTEN_TYPES_HPP
#define KESTEN_TYPES_HPP

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <string_view>

namespace kesten {

/// Largest dimension handled by the Monte Carlo paths. Grid-based code is
/// further restricted to d <= 3.
inline constexpr int kMaxDim = 6;

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;

/// Outcome of a heuristic hypothesis check. `pass` always comes with a witness.
enum class Verdict { pass, fail, inconclusive };

/// Whether the semigroup preserves a proper convex cone (II) or not (I).
enum class ConeCase { I, II, unknown };

inline std::string_view to_string(Verdict v) {
    switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::inconclusive: return "inconclusive";
    }
    return "?";
}

inline std::string_view to_string(ConeCase c) {
    switch (c) {
    case ConeCase::I: return "I";
    case ConeCase::II: return "II";
    case ConeCase::unknown: return "unknown";
    }
    return "?";
}

/// Base of all library errors. `exit_code` follows the CLI contract.
class Error : public std::runtime_error {
public:
    Error(const std::string& what, int exit_code) : std::runtime_error(what), exit_code_(exit_code) {}
    int exit_code() const noexcept { return exit_code_; }

private:
    int exit_code_;
};

class NonConvergence : public Error {
public:
    explicit NonConvergence(const std::string& what) : Error(what, 1) {}
};

class InvalidInput : public Error {
public:
    explicit InvalidInput(const std::string& what) : Error(what, 2) {}
};

/// A standing hypothesis (negative Lyapunov exponent, existence of a root of
/// k(s) = 1, ...) is violated by the data.
class HypothesisViolation : public Error {
public:
    explicit HypothesisViolation(const std::string& what) : Error(what, 3) {}
};

/// Point estimate with a Monte Carlo standard error (0 for deterministic routes).
struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
};

} // namespace kesten

#endif // KESTEN_TYPES_HPP
