#include "superhedge/pwl.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace superhedge {

namespace {

struct Point {
    double x;
    double y;
};

// > 0 for a left turn o -> a -> b
double cross(const Point& o, const Point& a, const Point& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

bool near(double a, double b) {
    return std::abs(a - b) <= kDefaultTol * std::max(1.0, std::abs(a));
}

}  // namespace

Interval Interval::make(double lo, double hi) {
    if (!(lo >= 0.0) || !(hi >= lo) || !std::isfinite(hi)) {
        std::ostringstream os;
        os << "invalid interval [" << lo << ", " << hi << "]";
        throw std::domain_error(os.str());
    }
    return Interval{lo, hi};
}

PwlFunction::PwlFunction(std::vector<double> breakpoints, std::vector<double> values,
                         double left_slope, double right_slope)
    : xs_(std::move(breakpoints)), ys_(std::move(values)), left_slope_(left_slope),
      right_slope_(right_slope) {
    if (xs_.empty()) throw std::invalid_argument("PwlFunction needs at least one breakpoint");
    if (xs_.size() != ys_.size())
        throw std::invalid_argument("PwlFunction breakpoints/values size mismatch");
    if (!std::isfinite(left_slope_) || !std::isfinite(right_slope_))
        throw std::invalid_argument("PwlFunction extension slopes must be finite");
    for (std::size_t i = 0; i < xs_.size(); ++i) {
        if (!std::isfinite(xs_[i]) || xs_[i] < 0.0)
            throw std::invalid_argument("PwlFunction breakpoints must be finite and >= 0");
        if (!std::isfinite(ys_[i])) throw std::invalid_argument("PwlFunction values must be finite");
        if (i > 0 && !(xs_[i] > xs_[i - 1]))
            throw std::invalid_argument("PwlFunction breakpoints must be strictly increasing");
    }
}

PwlFunction PwlFunction::constant(double c) { return PwlFunction({0.0}, {c}, 0.0, 0.0); }

PwlFunction PwlFunction::affine(double slope, double intercept) {
    return PwlFunction({0.0}, {intercept}, slope, slope);
}

PwlFunction PwlFunction::call(double strike) {
    if (!(strike >= 0.0)) throw std::domain_error("call strike must be >= 0");
    return PwlFunction({strike}, {0.0}, 0.0, 1.0);
}

PwlFunction PwlFunction::put(double strike) {
    if (!(strike >= 0.0)) throw std::domain_error("put strike must be >= 0");
    return PwlFunction({strike}, {0.0}, -1.0, 0.0);
}

double PwlFunction::operator()(double x) const {
    if (!(x >= 0.0)) throw std::domain_error("PwlFunction evaluated at a negative point");
    if (x <= xs_.front()) return ys_.front() + left_slope_ * (x - xs_.front());
    if (x >= xs_.back()) return ys_.back() + right_slope_ * (x - xs_.back());
    const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
    const auto i = static_cast<std::size_t>(it - xs_.begin()) - 1;
    const double t = (x - xs_[i]) / (xs_[i + 1] - xs_[i]);
    return ys_[i] + t * (ys_[i + 1] - ys_[i]);
}

std::vector<double> PwlFunction::segment_slopes() const {
    std::vector<double> s;
    s.reserve(xs_.size() + 1);
    s.push_back(left_slope_);
    for (std::size_t i = 1; i < xs_.size(); ++i)
        s.push_back((ys_[i] - ys_[i - 1]) / (xs_[i] - xs_[i - 1]));
    s.push_back(right_slope_);
    return s;
}

double PwlFunction::left_derivative(double x) const {
    const auto j = static_cast<std::size_t>(std::lower_bound(xs_.begin(), xs_.end(), x) - xs_.begin());
    if (j == 0) return left_slope_;
    if (j == xs_.size()) return right_slope_;
    return (ys_[j] - ys_[j - 1]) / (xs_[j] - xs_[j - 1]);
}

double PwlFunction::right_derivative(double x) const {
    const auto j = static_cast<std::size_t>(std::upper_bound(xs_.begin(), xs_.end(), x) - xs_.begin());
    if (j == 0) return left_slope_;
    if (j == xs_.size()) return right_slope_;
    return (ys_[j] - ys_[j - 1]) / (xs_[j] - xs_[j - 1]);
}

bool PwlFunction::is_convex(double tol) const {
    const auto s = segment_slopes();
    // the left extension is irrelevant when the first breakpoint sits at 0
    const std::size_t first = xs_.front() == 0.0 ? 1 : 0;
    for (std::size_t i = first + 1; i < s.size(); ++i)
        if (s[i] < s[i - 1] - tol * std::max(1.0, std::abs(s[i - 1]))) return false;
    return true;
}

bool PwlFunction::is_concave(double tol) const {
    const auto s = segment_slopes();
    const std::size_t first = xs_.front() == 0.0 ? 1 : 0;
    for (std::size_t i = first + 1; i < s.size(); ++i)
        if (s[i] > s[i - 1] + tol * std::max(1.0, std::abs(s[i - 1]))) return false;
    return true;
}

bool PwlFunction::is_nonnegative(double tol) const {
    if ((*this)(0.0) < -tol) return false;
    if (right_slope_ < 0.0) return false;
    return std::all_of(ys_.begin(), ys_.end(), [tol](double y) { return y >= -tol; });
}

std::string PwlFunction::to_string() const {
    std::ostringstream os;
    os.precision(12);
    os << "PwlFunction{left_slope=" << left_slope_ << ", points=[";
    for (std::size_t i = 0; i < xs_.size(); ++i) os << (i ? ", " : "") << '(' << xs_[i] << ", " << ys_[i] << ')';
    os << "], right_slope=" << right_slope_ << '}';
    return os.str();
}

PwlFunction scale_compose(const PwlFunction& f, double k) {
    if (!(k > 0.0) || !std::isfinite(k)) throw std::domain_error("scale_compose needs k > 0");
    if (k == 1.0) return f;
    std::vector<double> xs(f.breakpoints().begin(), f.breakpoints().end());
    for (auto& x : xs) x /= k;
    // division can collapse distinct neighbours only when they were already
    // within rounding of each other
    std::vector<double> keep_x;
    std::vector<double> keep_y;
    const auto ys = f.values();
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!keep_x.empty() && !(xs[i] > keep_x.back())) continue;
        keep_x.push_back(xs[i]);
        keep_y.push_back(ys[i]);
    }
    return PwlFunction(std::move(keep_x), std::move(keep_y), f.left_slope() * k,
                       f.right_slope() * k);
}

PwlFunction convex_combine(const PwlFunction& f, const PwlFunction& g, double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0))
        throw std::domain_error("convex_combine needs lambda in [0, 1]");
    if (lambda == 1.0) return f;
    if (lambda == 0.0) return g;

    std::vector<double> merged;
    merged.reserve(f.size() + g.size());
    std::merge(f.breakpoints().begin(), f.breakpoints().end(), g.breakpoints().begin(),
               g.breakpoints().end(), std::back_inserter(merged));
    std::vector<double> xs;
    xs.reserve(merged.size());
    for (double x : merged)
        if (xs.empty() || !near(xs.back(), x)) xs.push_back(x);

    std::vector<double> ys;
    ys.reserve(xs.size());
    for (double x : xs) ys.push_back(lambda * f(x) + (1.0 - lambda) * g(x));
    return PwlFunction(std::move(xs), std::move(ys),
                       lambda * f.left_slope() + (1.0 - lambda) * g.left_slope(),
                       lambda * f.right_slope() + (1.0 - lambda) * g.right_slope());
}

Envelope upper_concave_envelope(const PwlFunction& f, Interval dom) {
    dom = Interval::make(dom.lo, dom.hi);
    if (dom.degenerate())
        return Envelope{PwlFunction({dom.lo}, {f(dom.lo)}, 0.0, 0.0), dom, true};

    std::vector<Point> pts;
    pts.reserve(f.size() + 2);
    auto push = [&pts](double x, double y) {
        if (!pts.empty() && near(pts.back().x, x)) {
            pts.back().y = std::max(pts.back().y, y);
            return;
        }
        pts.push_back({x, y});
    };
    push(dom.lo, f(dom.lo));
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double x = f.breakpoints()[i];
        if (x > dom.lo && x < dom.hi) push(x, f.values()[i]);
    }
    if (near(pts.back().x, dom.hi) && pts.size() > 1) {
        // keep the exact endpoint abscissa
        pts.back().x = dom.hi;
        pts.back().y = std::max(pts.back().y, f(dom.hi));
    } else {
        push(dom.hi, f(dom.hi));
    }
    if (pts.size() == 1)
        return Envelope{PwlFunction({dom.lo}, {pts.front().y}, 0.0, 0.0), dom, true};

    std::vector<Point> hull;
    hull.reserve(pts.size());
    for (const auto& p : pts) {
        while (hull.size() >= 2 && cross(hull[hull.size() - 2], hull.back(), p) >= 0.0)
            hull.pop_back();
        hull.push_back(p);
    }

    std::vector<double> xs;
    std::vector<double> ys;
    xs.reserve(hull.size());
    ys.reserve(hull.size());
    for (const auto& p : hull) {
        xs.push_back(p.x);
        ys.push_back(p.y);
    }
    const double first = (ys[1] - ys[0]) / (xs[1] - xs[0]);
    const std::size_t n = xs.size();
    const double last = (ys[n - 1] - ys[n - 2]) / (xs[n - 1] - xs[n - 2]);
    return Envelope{PwlFunction(std::move(xs), std::move(ys), first, last), dom, false};
}

SlopeRange superdifferential(const PwlFunction& h, double x, Interval dom) {
    if (!dom.contains(x)) {
        std::ostringstream os;
        os << "superdifferential at " << x << " outside [" << dom.lo << ", " << dom.hi << "]";
        throw std::domain_error(os.str());
    }
    if (dom.degenerate()) return SlopeRange{0.0, 0.0, true};
    if (x == dom.lo) {
        const double r = h.right_derivative(x);
        return SlopeRange{r, r, true};
    }
    if (x == dom.hi) {
        const double l = h.left_derivative(x);
        return SlopeRange{l, l, true};
    }
    return SlopeRange{h.right_derivative(x), h.left_derivative(x), false};
}

bool dominates(const AffineFunction& a, const PwlFunction& f, Interval dom, double tol) {
    auto ok = [&](double x) { return a(x) >= f(x) - tol; };
    if (!ok(dom.lo) || !ok(dom.hi)) return false;
    for (double x : f.breakpoints())
        if (x > dom.lo && x < dom.hi && !ok(x)) return false;
    return true;
}

}  // namespace superhedge
