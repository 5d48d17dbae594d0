#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tvcbf {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Thrown when a strictly increasing convex/concave continuation of a
/// comparison function does not exist (e.g. zero or infinite slope at 0).
class DegenerateExtensionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Thrown when a beta composition is refused. `step()` names the failed
/// precondition ("domination", "beta-bound", ...).
class CompositionInfeasibleError : public std::runtime_error {
public:
    CompositionInfeasibleError(std::string step, const std::string& what)
        : std::runtime_error(what), step_(std::move(step)) {}
    const std::string& step() const { return step_; }

private:
    std::string step_;
};

enum class PieceKind { Linear, Power, SignedSqrt, Rational, Table, Polynomial };

/// One primitive analytic term. Evaluates sign * K(arg_sign * x + arg_shift)
/// where K is the raw descriptor. The affine inner/outer transforms are what
/// make reflections and shifted continuations exactly representable.
struct PieceTerm {
    PieceKind kind = PieceKind::Linear;
    std::vector<double> params;  // Linear {slope, intercept}; Power {coeff, exponent};
                                 // SignedSqrt {coeff}; Rational {coeff, denom_coeff};
                                 // Polynomial {c0, c1, ...}
    std::vector<double> xs, ys;  // Table only, xs strictly increasing
    double arg_shift = 0.0;
    double sign = 1.0;
    double arg_sign = 1.0;

    double eval(double x) const;
};

/// A piece of a piecewise function: sum of terms plus an offset, active on
/// [lo, hi]. Adjacent pieces must agree at shared breakpoints.
struct FnPiece {
    double lo = -kInf;
    double hi = kInf;
    std::vector<PieceTerm> terms;
    double offset = 0.0;

    double eval(double x) const;
};

enum class Shape { Linear, Convex, Concave, General };

std::string shape_name(Shape s);

struct Interval {
    double lo = -kInf;
    double hi = kInf;
    bool contains(double x) const { return x >= lo && x <= hi; }
};

/// Piecewise comparison function claimed to be class K (domain in R>=0) or
/// extended class K_e (domain containing negatives). Immutable after
/// construction; certify_class_ke() audits the claims.
class ClassKeFn {
public:
    std::vector<FnPiece> pieces;  // sorted by lo, tiling the domain
    Interval domain;
    Shape shape = Shape::General;
    bool extended = false;
    /// When set, strict monotonicity is relaxed to non-strict for x below
    /// this abscissa (used by extension constructions whose negative
    /// continuation only needs monotone convexity).
    std::optional<double> relaxed_below;

    double operator()(double x) const;

    static ClassKeFn linear(double slope, Interval dom = {-kInf, kInf});
    static ClassKeFn power(double coeff, double exponent, Interval dom);
    static ClassKeFn signed_sqrt(double coeff, Interval dom = {-kInf, kInf});
    static ClassKeFn rational(double coeff, double denom_coeff, Interval dom);
    static ClassKeFn polynomial(std::vector<double> coeffs, Shape shape, Interval dom);
    static ClassKeFn table(std::vector<double> xs, std::vector<double> ys, Shape shape);
    static ClassKeFn from_pieces(std::vector<FnPiece> pieces, Shape shape, Interval dom,
                                 bool extended);

    const FnPiece& piece_at(double x) const;
};

/// Evaluates f(x + arg_shift) + val_offset restricted to [new_lo, new_hi],
/// reusing f's pieces with adjusted transforms.
std::vector<FnPiece> restrict_shift(const ClassKeFn& f, double arg_shift, double val_offset,
                                    double new_lo, double new_hi);

/// Pieces of -f(-x) (odd reflection through the origin).
std::vector<FnPiece> reflect_pieces(const ClassKeFn& f);

/// Pieces of f + g on [lo, hi] (breakpoints merged).
std::vector<FnPiece> sum_pieces(const ClassKeFn& f, const ClassKeFn& g, double lo, double hi);

struct CertificationReport {
    bool pass = false;
    bool zero_at_zero = false;
    bool strictly_increasing = false;
    bool continuous = false;
    bool shape_ok = false;
    double first_violation = std::numeric_limits<double>::quiet_NaN();
    double worst_continuity_gap = 0.0;  // largest relative mismatch across breakpoints
    std::string detail;
};

struct CertifyOptions {
    int grid_resolution = 10000;
    // Infinite domain ends are clipped to this window for sampling.
    double window_lo = -100.0;
    double window_hi = 100.0;
    double shape_tol = 1e-9;
    double continuity_tol = 1e-12;
};

CertificationReport certify_class_ke(const ClassKeFn& f, int grid_resolution);
CertificationReport certify_class_ke(const ClassKeFn& f, const CertifyOptions& opts = {});

struct DominationResult {
    bool dominated = false;
    double worst_margin = 0.0;  // min over grid of -alpha_lambda(xi) - alpha(-xi)
    double worst_xi = 0.0;
};

/// Checks alpha(-xi) <= -alpha_lambda(xi) for xi in [0, Lambda] on a grid.
/// Lambda may be +inf, in which case an exponential grid up to 1e6 is used.
DominationResult check_domination(const ClassKeFn& alpha, const ClassKeFn& alpha_lambda,
                                  double Lambda, int grid = 1001);

/// Odd extension of a class K function: gamma(x) for x >= 0, -gamma(-x) below.
/// The result is exactly odd (the negative branch reuses gamma's pieces with
/// flipped transforms). Throws std::invalid_argument if gamma fails class-K
/// certification.
ClassKeFn negate_reflect(const ClassKeFn& gamma);

struct ExtendOptions {
    // Force the x >= A continuation to use a linear majorant with at least
    // this slope (keeps the extension globally convex at the junction).
    std::optional<double> min_majorant_slope;
    double majorant_range_factor = 10.0;  // X_max = factor * A for slope sampling
};

/// Convex extended class K_e continuation of alpha2 (class K convex on [0,A]):
/// linear slope-matched continuation below 0, alpha2 on [0,A], and
/// alpha2(A) + alpha1'(x-A) above, where alpha1' majorizes alpha1 on R>=0.
ClassKeFn extend_convex(const ClassKeFn& alpha2, const ClassKeFn& alpha1, double A,
                        const ExtendOptions& opts = {});

enum class BetaCase { Convex, Concave };

struct BetaComposition {
    ClassKeFn beta;
    BetaCase kind = BetaCase::Convex;
    double A = 0.0;  // +inf allowed in the concave case
    ClassKeFn alpha2_extended;
    // Validity metadata: the rectangle over which the sum bound was sampled.
    double x1_min = 0.0, x1_max = 0.0;
    double x2_min = 0.0, x2_max = 0.0;
    bool strengthened = false;  // construction escalated past the default choice
    double majorant_slope = std::numeric_limits<double>::quiet_NaN();
    long samples_checked = 0;
    double worst_violation = -kInf;  // max over samples of lhs - beta(sum); <= tol

    double operator()(double s) const { return beta(s); }
};

/// Upper bound beta with alpha1(x1) + alpha2(x2) <= beta(x1+x2) on
/// [-A, x1_max] x [0, A], for convex class K alpha2 and finite A.
/// The construction is validated by dense sampling; if the default
/// continuation violates the bound it is rebuilt with a convexity-preserving
/// linear majorant. Throws CompositionInfeasibleError when domination fails.
BetaComposition compose_beta_convex(const ClassKeFn& alpha1, const ClassKeFn& alpha2, double A);

/// Concave counterpart; A may be +inf. Throws DegenerateExtensionError when
/// alpha2 has infinite slope at 0 (no concave continuation exists).
BetaComposition compose_beta_concave(const ClassKeFn& alpha1, const ClassKeFn& alpha2, double A);

/// Estimated one-sided derivatives (finite difference, h = 1e-6).
double right_derivative(const ClassKeFn& f, double x);
double left_derivative(const ClassKeFn& f, double x);

/// Analytic slope of the first piece at 0+; +inf for square-root-like kinds.
double analytic_right_slope_at_zero(const ClassKeFn& f);

}  // namespace tvcbf
