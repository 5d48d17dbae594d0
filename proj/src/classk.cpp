#include "tvcbf/classk.hpp"

#include <algorithm>
#include <random>
#include <sstream>

namespace tvcbf {

namespace {

double sgn(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

double table_interp(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    if (it == xs.begin()) return ys.front();
    if (it == xs.end()) return ys.back();
    size_t i = static_cast<size_t>(it - xs.begin());
    double t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
    return ys[i - 1] + t * (ys[i] - ys[i - 1]);
}

// Exponentially spaced xi grid {0} u [1e-6, hi] used when a range is infinite.
std::vector<double> exp_grid(double hi, int n) {
    std::vector<double> g;
    g.push_back(0.0);
    double lo = 1e-6;
    for (int i = 0; i < n; ++i) {
        double t = static_cast<double>(i) / (n - 1);
        g.push_back(lo * std::pow(hi / lo, t));
    }
    return g;
}

}  // namespace

double PieceTerm::eval(double x) const {
    const double t = arg_sign * x + arg_shift;
    double v = 0.0;
    switch (kind) {
        case PieceKind::Linear:
            v = params[0] * t + params[1];
            break;
        case PieceKind::Power:
            v = params[0] * sgn(t) * std::pow(std::abs(t), params[1]);
            break;
        case PieceKind::SignedSqrt:
            v = params[0] * sgn(t) * std::sqrt(std::abs(t));
            break;
        case PieceKind::Rational:
            v = params[0] * t / (1.0 + params[1] * t);
            break;
        case PieceKind::Table:
            v = table_interp(xs, ys, t);
            break;
        case PieceKind::Polynomial: {
            double acc = 0.0;
            for (auto it = params.rbegin(); it != params.rend(); ++it) acc = acc * t + *it;
            v = acc;
            break;
        }
    }
    return sign * v;
}

double FnPiece::eval(double x) const {
    double v = offset;
    for (const auto& term : terms) v += term.eval(x);
    return v;
}

const FnPiece& ClassKeFn::piece_at(double x) const {
    if (pieces.empty()) throw std::domain_error("ClassKeFn: no pieces");
    // last piece whose lo <= x; shared breakpoints agree by invariant
    auto it = std::upper_bound(pieces.begin(), pieces.end(), x,
                               [](double v, const FnPiece& p) { return v < p.lo; });
    if (it == pieces.begin()) return pieces.front();
    return *(it - 1);
}

double ClassKeFn::operator()(double x) const {
    if (!domain.contains(x)) {
        std::ostringstream os;
        os << "ClassKeFn: x=" << x << " outside domain [" << domain.lo << ", " << domain.hi << "]";
        throw std::domain_error(os.str());
    }
    double v = piece_at(x).eval(x);
    if (!std::isfinite(v)) throw std::domain_error("ClassKeFn: non-finite evaluation");
    return v;
}

ClassKeFn ClassKeFn::linear(double slope, Interval dom) {
    FnPiece p{dom.lo, dom.hi, {PieceTerm{PieceKind::Linear, {slope, 0.0}}}, 0.0};
    return from_pieces({p}, Shape::Linear, dom, dom.lo < 0);
}

ClassKeFn ClassKeFn::power(double coeff, double exponent, Interval dom) {
    FnPiece p{dom.lo, dom.hi, {PieceTerm{PieceKind::Power, {coeff, exponent}}}, 0.0};
    Shape s = exponent > 1.0 ? Shape::Convex : (exponent < 1.0 ? Shape::Concave : Shape::Linear);
    if (dom.lo < 0) s = Shape::General;  // odd powers are neither on R
    return from_pieces({p}, s, dom, dom.lo < 0);
}

ClassKeFn ClassKeFn::signed_sqrt(double coeff, Interval dom) {
    FnPiece p{dom.lo, dom.hi, {PieceTerm{PieceKind::SignedSqrt, {coeff}}}, 0.0};
    Shape s = dom.lo >= 0 ? Shape::Concave : Shape::General;
    return from_pieces({p}, s, dom, dom.lo < 0);
}

ClassKeFn ClassKeFn::rational(double coeff, double denom_coeff, Interval dom) {
    FnPiece p{dom.lo, dom.hi, {PieceTerm{PieceKind::Rational, {coeff, denom_coeff}}}, 0.0};
    Shape s = dom.lo >= 0 && denom_coeff > 0 ? Shape::Concave : Shape::General;
    return from_pieces({p}, s, dom, dom.lo < 0);
}

ClassKeFn ClassKeFn::polynomial(std::vector<double> coeffs, Shape shape, Interval dom) {
    FnPiece p{dom.lo, dom.hi, {PieceTerm{PieceKind::Polynomial, std::move(coeffs)}}, 0.0};
    return from_pieces({p}, shape, dom, dom.lo < 0);
}

ClassKeFn ClassKeFn::table(std::vector<double> xs, std::vector<double> ys, Shape shape) {
    if (xs.size() < 2 || xs.size() != ys.size())
        throw std::invalid_argument("ClassKeFn::table: need >= 2 matching knots");
    Interval dom{xs.front(), xs.back()};
    PieceTerm t{PieceKind::Table, {}};
    t.xs = std::move(xs);
    t.ys = std::move(ys);
    FnPiece p{dom.lo, dom.hi, {std::move(t)}, 0.0};
    return from_pieces({p}, shape, dom, dom.lo < 0);
}

ClassKeFn ClassKeFn::from_pieces(std::vector<FnPiece> pieces, Shape shape, Interval dom,
                                 bool extended) {
    if (pieces.empty()) throw std::invalid_argument("ClassKeFn: empty piece list");
    std::sort(pieces.begin(), pieces.end(),
              [](const FnPiece& a, const FnPiece& b) { return a.lo < b.lo; });
    ClassKeFn f;
    f.pieces = std::move(pieces);
    f.domain = dom;
    f.shape = shape;
    f.extended = extended;
    return f;
}

std::vector<FnPiece> restrict_shift(const ClassKeFn& f, double arg_shift, double val_offset,
                                    double new_lo, double new_hi) {
    std::vector<FnPiece> out;
    for (const auto& p : f.pieces) {
        double lo = std::max(new_lo, p.lo - arg_shift);
        double hi = std::min(new_hi, p.hi - arg_shift);
        if (lo >= hi) continue;  // drop empty and zero-width slivers
        FnPiece q;
        q.lo = lo;
        q.hi = hi;
        q.offset = p.offset + val_offset;
        for (auto term : p.terms) {
            term.arg_shift += term.arg_sign * arg_shift;
            q.terms.push_back(std::move(term));
        }
        out.push_back(std::move(q));
    }
    return out;
}

std::vector<FnPiece> reflect_pieces(const ClassKeFn& f) {
    std::vector<FnPiece> out;
    for (const auto& p : f.pieces) {
        FnPiece q;
        q.lo = -p.hi;
        q.hi = -p.lo;
        q.offset = -p.offset;
        for (auto term : p.terms) {
            term.sign = -term.sign;
            term.arg_sign = -term.arg_sign;
            q.terms.push_back(std::move(term));
        }
        out.push_back(std::move(q));
    }
    std::sort(out.begin(), out.end(), [](const FnPiece& a, const FnPiece& b) { return a.lo < b.lo; });
    return out;
}

std::vector<FnPiece> sum_pieces(const ClassKeFn& f, const ClassKeFn& g, double lo, double hi) {
    std::vector<double> bps{lo, hi};
    for (const auto& p : f.pieces) {
        if (p.lo > lo && p.lo < hi) bps.push_back(p.lo);
        if (p.hi > lo && p.hi < hi) bps.push_back(p.hi);
    }
    for (const auto& p : g.pieces) {
        if (p.lo > lo && p.lo < hi) bps.push_back(p.lo);
        if (p.hi > lo && p.hi < hi) bps.push_back(p.hi);
    }
    std::sort(bps.begin(), bps.end());
    bps.erase(std::unique(bps.begin(), bps.end()), bps.end());
    std::vector<FnPiece> out;
    for (size_t i = 0; i + 1 < bps.size(); ++i) {
        double mid = std::isfinite(bps[i + 1]) ? 0.5 * (bps[i] + bps[i + 1])
                                               : bps[i] + 1.0;
        const FnPiece& pf = f.piece_at(mid);
        const FnPiece& pg = g.piece_at(mid);
        FnPiece q;
        q.lo = bps[i];
        q.hi = bps[i + 1];
        q.offset = pf.offset + pg.offset;
        q.terms = pf.terms;
        q.terms.insert(q.terms.end(), pg.terms.begin(), pg.terms.end());
        out.push_back(std::move(q));
    }
    return out;
}

CertificationReport certify_class_ke(const ClassKeFn& f, int grid_resolution) {
    CertifyOptions opts;
    opts.grid_resolution = grid_resolution;
    return certify_class_ke(f, opts);
}

CertificationReport certify_class_ke(const ClassKeFn& f, const CertifyOptions& opts) {
    if (opts.grid_resolution < 2)
        throw std::invalid_argument("certify_class_ke: grid_resolution must be >= 2");
    CertificationReport rep;
    std::ostringstream detail;

    double lo = std::max(f.domain.lo, opts.window_lo);
    double hi = std::min(f.domain.hi, opts.window_hi);
    if (!(lo <= 0.0 && hi >= 0.0)) {
        rep.detail = "domain does not contain 0";
        return rep;
    }

    auto eval = [&](double x) { return f.piece_at(x).eval(x); };

    rep.zero_at_zero = std::abs(eval(0.0)) <= 1e-12;
    if (!rep.zero_at_zero && std::isnan(rep.first_violation)) rep.first_violation = 0.0;

    // continuity across interior breakpoints (relative 1e-12)
    rep.continuous = true;
    for (size_t i = 0; i + 1 < f.pieces.size(); ++i) {
        double bp = f.pieces[i].hi;
        if (bp != f.pieces[i + 1].lo) continue;
        double a = f.pieces[i].eval(bp);
        double b = f.pieces[i + 1].eval(bp);
        double gap = std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
        rep.worst_continuity_gap = std::max(rep.worst_continuity_gap, gap);
        if (gap > opts.continuity_tol) {
            rep.continuous = false;
            if (std::isnan(rep.first_violation)) rep.first_violation = bp;
            detail << "discontinuity at x=" << bp << " gap=" << std::abs(a - b) << "; ";
        }
    }

    const int n = opts.grid_resolution;
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) {
        double x = lo + (hi - lo) * i / (n - 1);
        v[i] = eval(x);
    }

    rep.strictly_increasing = true;
    for (int i = 0; i + 1 < n; ++i) {
        double x0 = lo + (hi - lo) * i / (n - 1);
        bool relaxed = f.relaxed_below && x0 < *f.relaxed_below;
        double d = v[i + 1] - v[i];
        if ((relaxed && d < -1e-12) || (!relaxed && d <= 0.0)) {
            rep.strictly_increasing = false;
            if (std::isnan(rep.first_violation)) rep.first_violation = x0;
            detail << "monotonicity fails near x=" << x0 << "; ";
            break;
        }
    }

    rep.shape_ok = true;
    if (f.shape != Shape::General) {
        for (int i = 1; i + 1 < n; ++i) {
            double sd = v[i + 1] - 2.0 * v[i] + v[i - 1];
            bool ok = true;
            if (f.shape == Shape::Convex) ok = sd >= -opts.shape_tol;
            else if (f.shape == Shape::Concave) ok = sd <= opts.shape_tol;
            else ok = std::abs(sd) <= opts.shape_tol;
            if (!ok) {
                rep.shape_ok = false;
                double x = lo + (hi - lo) * i / (n - 1);
                if (std::isnan(rep.first_violation)) rep.first_violation = x;
                detail << shape_name(f.shape) << " shape fails near x=" << x << "; ";
                break;
            }
        }
    }

    rep.pass = rep.zero_at_zero && rep.strictly_increasing && rep.continuous && rep.shape_ok;
    rep.detail = detail.str();
    return rep;
}

std::string shape_name(Shape s) {
    switch (s) {
        case Shape::Linear: return "linear";
        case Shape::Convex: return "convex";
        case Shape::Concave: return "concave";
        default: return "general";
    }
}

DominationResult check_domination(const ClassKeFn& alpha, const ClassKeFn& alpha_lambda,
                                  double Lambda, int grid) {
    if (Lambda < 0) throw std::domain_error("check_domination: Lambda must be >= 0");
    if (std::isfinite(Lambda) && Lambda > alpha_lambda.domain.hi + 1e-12)
        throw std::domain_error("check_domination: Lambda outside alpha_lambda domain");

    std::vector<double> xis;
    if (!std::isfinite(Lambda)) {
        double hi = std::min(1e6, alpha_lambda.domain.hi);
        xis = exp_grid(hi, std::max(2, grid - 1));
    } else if (Lambda == 0.0) {
        xis = {0.0};
    } else {
        for (int i = 0; i < std::max(1, grid); ++i)
            xis.push_back(Lambda * i / std::max(1, grid - 1));
    }

    DominationResult r;
    r.worst_margin = kInf;
    for (double xi : xis) {
        double m = -alpha_lambda(xi) - alpha(-xi);
        if (m < r.worst_margin) {
            r.worst_margin = m;
            r.worst_xi = xi;
        }
    }
    r.dominated = r.worst_margin >= -1e-12;
    return r;
}

ClassKeFn negate_reflect(const ClassKeFn& gamma) {
    if (gamma.domain.lo < 0)
        throw std::invalid_argument("negate_reflect: gamma must be class K on R>=0");
    CertificationReport rep = certify_class_ke(gamma);
    if (!rep.pass)
        throw std::invalid_argument("negate_reflect: gamma fails class-K certification: " +
                                    rep.detail);
    std::vector<FnPiece> pieces = reflect_pieces(gamma);
    pieces.insert(pieces.end(), gamma.pieces.begin(), gamma.pieces.end());
    Shape s = gamma.shape == Shape::Linear ? Shape::Linear : Shape::General;
    return ClassKeFn::from_pieces(std::move(pieces), s, {-gamma.domain.hi, gamma.domain.hi}, true);
}

double right_derivative(const ClassKeFn& f, double x) {
    const double h = 1e-6;
    return (f.piece_at(x + h).eval(x + h) - f.piece_at(x).eval(x)) / h;
}

double left_derivative(const ClassKeFn& f, double x) {
    const double h = 1e-6;
    return (f.piece_at(x).eval(x) - f.piece_at(x - h).eval(x - h)) / h;
}

double analytic_right_slope_at_zero(const ClassKeFn& f) {
    const FnPiece& p = f.piece_at(1e-12);
    double slope = 0.0;
    for (const auto& t : p.terms) {
        switch (t.kind) {
            case PieceKind::Linear:
                slope += t.sign * t.params[0] * t.arg_sign;
                break;
            case PieceKind::Power:
                if (t.params[1] < 1.0) return kInf;
                if (t.params[1] == 1.0) slope += t.sign * t.params[0] * t.arg_sign;
                break;
            case PieceKind::SignedSqrt:
                return kInf;
            case PieceKind::Rational:
                slope += t.sign * t.params[0] * t.arg_sign;
                break;
            case PieceKind::Polynomial:
                if (t.params.size() > 1) slope += t.sign * t.params[1] * t.arg_sign;
                break;
            case PieceKind::Table: {
                if (t.xs.size() >= 2)
                    slope += t.sign * t.arg_sign * (t.ys[1] - t.ys[0]) / (t.xs[1] - t.xs[0]);
                break;
            }
        }
    }
    return slope;
}

namespace {

// Linear majorant slope: sup over a sampled grid of alpha1(x)/x on (0, xmax].
double sampled_majorant_slope(const ClassKeFn& alpha1, double xmax) {
    double hi = std::min(xmax, alpha1.domain.hi);
    double slope = 0.0;
    const int n = 2048;
    for (int i = 1; i <= n; ++i) {
        double x = hi * i / n;
        slope = std::max(slope, alpha1(x) / x);
    }
    return slope;
}

bool convex_on_nonneg(const ClassKeFn& f, double hi) {
    double h = std::min(hi, f.domain.hi);
    const int n = 2001;
    double prev2 = f(0.0), prev1 = f(h / (n - 1));
    for (int i = 2; i < n; ++i) {
        double v = f(h * i / (n - 1));
        if (v - 2.0 * prev1 + prev2 < -1e-9) return false;
        prev2 = prev1;
        prev1 = v;
    }
    return true;
}

}  // namespace

ClassKeFn extend_convex(const ClassKeFn& alpha2, const ClassKeFn& alpha1, double A,
                        const ExtendOptions& opts) {
    if (!(A > 0) || !std::isfinite(A))
        throw std::invalid_argument("extend_convex: A must be positive finite");
    {
        CertifyOptions co;
        co.window_lo = 0.0;
        co.window_hi = A;
        ClassKeFn a2 = alpha2;
        a2.shape = Shape::Convex;
        CertificationReport rep = certify_class_ke(a2, co);
        if (!rep.pass)
            throw std::invalid_argument("extend_convex: alpha2 not convex class K on [0,A]: " +
                                        rep.detail);
    }

    const double s0 = right_derivative(alpha2, 0.0);
    if (s0 < 1e-12)
        throw DegenerateExtensionError(
            "extend_convex: alpha2 has zero right derivative at 0; no strictly increasing "
            "convex continuation exists (perturb alpha2, e.g. add eps*x)");

    const double sA = left_derivative(alpha2, A);
    const double xmax = opts.majorant_range_factor * A;

    // alpha1' choice: alpha1 itself when convex on R>=0, else a linear majorant.
    bool use_alpha1 = convex_on_nonneg(alpha1, xmax) && !opts.min_majorant_slope;
    double M = 0.0;
    if (!use_alpha1) {
        M = sampled_majorant_slope(alpha1, xmax);
        if (opts.min_majorant_slope) M = std::max(M, *opts.min_majorant_slope);
    }

    std::vector<FnPiece> pieces;
    pieces.push_back(FnPiece{-kInf, 0.0, {PieceTerm{PieceKind::Linear, {s0, 0.0}}}, 0.0});
    for (auto p : restrict_shift(alpha2, 0.0, 0.0, 0.0, A)) pieces.push_back(std::move(p));

    const double a2A = alpha2(A);
    double hi_ext;
    if (use_alpha1) {
        hi_ext = std::isfinite(alpha1.domain.hi) ? A + alpha1.domain.hi : kInf;
        ClassKeFn a1pos = alpha1;
        a1pos.domain = {0.0, alpha1.domain.hi};
        for (auto p : restrict_shift(a1pos, -A, a2A, A, hi_ext)) pieces.push_back(std::move(p));
    } else {
        hi_ext = kInf;
        FnPiece tail{A, kInf, {PieceTerm{PieceKind::Linear, {M, -M * A}}}, a2A};
        pieces.push_back(std::move(tail));
    }

    ClassKeFn out = ClassKeFn::from_pieces(std::move(pieces), Shape::Convex, {-kInf, hi_ext}, true);
    out.relaxed_below = 0.0;
    return out;
}

namespace {

struct ValidationResult {
    double worst = -kInf;
    double at_x1 = 0.0, at_x2 = 0.0;
    long samples = 0;
};

// Samples lhs - beta(sum) over the rectangle; exponential spacing on
// infinite edges (up to 1e6).
ValidationResult validate_beta(const ClassKeFn& alpha1, const ClassKeFn& alpha2,
                               const ClassKeFn& beta, double x1_lo, double x1_hi, double x2_hi) {
    ValidationResult res;
    auto axis = [&](double lo, double hi, int n) {
        std::vector<double> g;
        if (!std::isfinite(hi)) {
            g = exp_grid(1e6, n - 1);
            if (lo < 0) {
                auto neg = exp_grid(-lo > 1e6 ? 1e6 : -lo, n / 2);
                for (double v : neg)
                    if (v > 0) g.push_back(-v);
            }
            std::sort(g.begin(), g.end());
        } else {
            for (int i = 0; i < n; ++i) g.push_back(lo + (hi - lo) * i / (n - 1));
        }
        return g;
    };
    auto grid1 = axis(x1_lo, x1_hi, 512);
    auto grid2 = axis(0.0, x2_hi, 256);
    auto check = [&](double x1, double x2) {
        double v = alpha1(x1) + alpha2(x2) - beta(x1 + x2);
        ++res.samples;
        if (v > res.worst) {
            res.worst = v;
            res.at_x1 = x1;
            res.at_x2 = x2;
        }
    };
    for (double x1 : grid1)
        for (double x2 : grid2) check(x1, x2);
    std::mt19937 rng(0xC0FFEE);
    double r1hi = std::isfinite(x1_hi) ? x1_hi : 1e6;
    double r2hi = std::isfinite(x2_hi) ? x2_hi : 1e6;
    std::uniform_real_distribution<double> u1(x1_lo, r1hi), u2(0.0, r2hi);
    for (int i = 0; i < 100000; ++i) check(u1(rng), u2(rng));
    return res;
}

ClassKeFn assemble_beta_convex(const ClassKeFn& a2ext, double A) {
    // beta(s) = a2ext(s) for s <= 0, a2ext(s+A) - a2ext(A) for s > 0
    std::vector<FnPiece> pieces = restrict_shift(a2ext, 0.0, 0.0, -kInf, 0.0);
    const double offs = a2ext(A);
    double hi = std::isfinite(a2ext.domain.hi) ? a2ext.domain.hi - A : kInf;
    for (auto p : restrict_shift(a2ext, A, -offs, 0.0, hi)) pieces.push_back(std::move(p));
    ClassKeFn beta = ClassKeFn::from_pieces(std::move(pieces), Shape::General,
                                            {-kInf, hi}, true);
    beta.relaxed_below = a2ext.relaxed_below;
    return beta;
}

}  // namespace

BetaComposition compose_beta_convex(const ClassKeFn& alpha1, const ClassKeFn& alpha2, double A) {
    if (!(A > 0) || !std::isfinite(A))
        throw std::invalid_argument("compose_beta_convex: A must be positive finite");
    DominationResult dom = check_domination(alpha1, alpha2, A);
    if (!dom.dominated) {
        std::ostringstream os;
        os << "compose_beta_convex: domination alpha1(-x) <= -alpha2(x) fails at x=" << dom.worst_xi
           << " (margin " << dom.worst_margin << "); no class K_e bound exists";
        throw CompositionInfeasibleError("domination", os.str());
    }

    const double tol = 1e-9;
    const double x1_hi = std::min(10.0 * A, alpha1.domain.hi);

    BetaComposition bc;
    bc.kind = BetaCase::Convex;
    bc.A = A;
    bc.x1_min = -A;
    bc.x1_max = x1_hi;
    bc.x2_min = 0.0;
    bc.x2_max = A;

    ClassKeFn a2ext = extend_convex(alpha2, alpha1, A);
    ClassKeFn beta = assemble_beta_convex(a2ext, A);
    ValidationResult v = validate_beta(alpha1, alpha2, beta, -A, x1_hi, A);

    if (v.worst > tol) {
        // The default continuation broke the bound (the junction at A lost
        // convexity). Rebuild with a linear majorant steep enough to keep
        // the extension globally convex.
        ExtendOptions opts;
        opts.min_majorant_slope = std::max(left_derivative(alpha2, A), 0.0);
        a2ext = extend_convex(alpha2, alpha1, A, opts);
        beta = assemble_beta_convex(a2ext, A);
        bc.strengthened = true;
        bc.majorant_slope = *opts.min_majorant_slope;
        v = validate_beta(alpha1, alpha2, beta, -A, x1_hi, A);
        if (v.worst > tol) {
            std::ostringstream os;
            os << "compose_beta_convex: bound violated by " << v.worst << " at (x1,x2)=("
               << v.at_x1 << "," << v.at_x2 << ") even after strengthening";
            throw CompositionInfeasibleError("beta-bound", os.str());
        }
    }

    bc.beta = std::move(beta);
    bc.alpha2_extended = std::move(a2ext);
    bc.samples_checked = v.samples;
    bc.worst_violation = v.worst;
    return bc;
}

BetaComposition compose_beta_concave(const ClassKeFn& alpha1, const ClassKeFn& alpha2, double A) {
    if (!(A > 0)) throw std::invalid_argument("compose_beta_concave: A must be positive");
    {
        CertifyOptions co;
        co.window_lo = 0.0;
        co.window_hi = std::isfinite(A) ? A : std::min(1e3, alpha2.domain.hi);
        ClassKeFn a2 = alpha2;
        a2.shape = Shape::Concave;
        CertificationReport rep = certify_class_ke(a2, co);
        if (!rep.pass)
            throw std::invalid_argument("compose_beta_concave: alpha2 not concave class K: " +
                                        rep.detail);
    }
    DominationResult dom = check_domination(alpha1, alpha2, A);
    if (!dom.dominated) {
        std::ostringstream os;
        os << "compose_beta_concave: domination alpha1(-x) <= -alpha2(x) fails at x="
           << dom.worst_xi << " (margin " << dom.worst_margin << ")";
        throw CompositionInfeasibleError("domination", os.str());
    }

    const double k = analytic_right_slope_at_zero(alpha2);
    if (!std::isfinite(k))
        throw DegenerateExtensionError(
            "compose_beta_concave: alpha2 has infinite slope at 0 (square-root-like); "
            "concavity forces left slopes >= right slopes, so no class K_e continuation exists");
    if (k < 1e-12)
        throw DegenerateExtensionError("compose_beta_concave: alpha2 slope at 0 is zero");

    // alpha2' : linear slope-k continuation below 0, alpha2 above.
    std::vector<FnPiece> extp;
    extp.push_back(FnPiece{-kInf, 0.0, {PieceTerm{PieceKind::Linear, {k, 0.0}}}, 0.0});
    for (auto p : restrict_shift(alpha2, 0.0, 0.0, 0.0, alpha2.domain.hi))
        extp.push_back(std::move(p));
    ClassKeFn a2ext =
        ClassKeFn::from_pieces(std::move(extp), Shape::Concave, {-kInf, alpha2.domain.hi}, true);

    const double sum_hi = std::min(alpha1.domain.hi, alpha2.domain.hi);
    auto build_paper_beta = [&]() {
        // beta(s) = a2ext(s) for s < 0, alpha1(s) + alpha2(s) for s >= 0
        std::vector<FnPiece> pieces = restrict_shift(a2ext, 0.0, 0.0, -kInf, 0.0);
        for (auto p : sum_pieces(alpha1, a2ext, 0.0, sum_hi)) pieces.push_back(std::move(p));
        return ClassKeFn::from_pieces(std::move(pieces), Shape::General, {-kInf, sum_hi}, true);
    };

    const double tol = 1e-9;
    const double x1_hi = std::isfinite(A) ? std::min(10.0 * A, alpha1.domain.hi)
                                          : std::min(1e6, alpha1.domain.hi);
    const double x2_hi = std::isfinite(A) ? A : std::min(1e6, alpha2.domain.hi);

    BetaComposition bc;
    bc.kind = BetaCase::Concave;
    bc.A = A;
    bc.x1_min = std::isfinite(A) ? -A : -1e6;
    bc.x1_max = x1_hi;
    bc.x2_min = 0.0;
    bc.x2_max = x2_hi;

    ClassKeFn beta = build_paper_beta();
    ValidationResult v = validate_beta(alpha1, alpha2, beta, bc.x1_min, x1_hi, x2_hi);

    if (v.worst > tol && std::isfinite(A)) {
        // Tighten the negative branch to the sampled-supremum bound
        // alpha2(s+A) - alpha2(A), which dominates the sum there whenever
        // domination holds; keep the positive branch.
        std::vector<FnPiece> pieces;
        const double off = alpha2(A);
        pieces.push_back(FnPiece{-kInf, -A, {PieceTerm{PieceKind::Linear, {k, k * A}}}, -off});
        for (auto p : restrict_shift(alpha2, A, -off, -A, 0.0)) pieces.push_back(std::move(p));
        for (auto p : sum_pieces(alpha1, a2ext, 0.0, sum_hi)) pieces.push_back(std::move(p));
        beta = ClassKeFn::from_pieces(std::move(pieces), Shape::General, {-kInf, sum_hi}, true);
        bc.strengthened = true;
        v = validate_beta(alpha1, alpha2, beta, bc.x1_min, x1_hi, x2_hi);
    }
    if (v.worst > tol) {
        std::ostringstream os;
        os << "compose_beta_concave: bound violated by " << v.worst << " at (x1,x2)=(" << v.at_x1
           << "," << v.at_x2 << ")";
        throw CompositionInfeasibleError("beta-bound", os.str());
    }

    bc.beta = std::move(beta);
    bc.alpha2_extended = std::move(a2ext);
    bc.samples_checked = v.samples;
    bc.worst_violation = v.worst;
    return bc;
}

}  // namespace tvcbf
