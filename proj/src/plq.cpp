#include "gks/plq.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <sstream>

namespace gks {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double sgn(double x) { return (x > 0.0) - (x < 0.0); }
double soft(double y, double t) { return sgn(y) * std::max(std::abs(y) - t, 0.0); }

double huber_value(double kappa, double x) {
  const double a = std::abs(x);
  return a <= kappa ? 0.5 * x * x : kappa * a - 0.5 * kappa * kappa;
}

double huber_prox(double kappa, double eta, double y) {
  return std::abs(y) <= kappa * (1.0 + eta) ? y / (1.0 + eta) : y - eta * kappa * sgn(y);
}

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::InvalidArgument, what);
}

void check_block(const Vec& r, std::size_t block) {
  if (block != 0 && r.size() % static_cast<Eigen::Index>(block) != 0)
    throw Error(ErrorCode::DimensionMismatch, "vector length is not a multiple of the group size");
}

// Applies f to each group of a GroupL2 vector.
template <class F>
void for_each_group(const Vec& r, std::size_t block, F&& f) {
  const Eigen::Index b = block == 0 ? r.size() : static_cast<Eigen::Index>(block);
  if (b == 0) return;
  for (Eigen::Index off = 0; off < r.size(); off += b) f(off, b);
}

}  // namespace

void check_loss(const ScalarLoss& loss) {
  std::visit(overloaded{
                 [](const Huber& l) { require(l.kappa > 0.0, "huber kappa must be positive"); },
                 [](const Vapnik& l) { require(l.eps >= 0.0, "vapnik eps must be nonnegative"); },
                 [](const HuberInsensitive& l) {
                   require(l.kappa > 0.0, "huber-ins kappa must be positive");
                   require(l.eps >= 0.0, "huber-ins eps must be nonnegative");
                 },
                 [](const ElasticNet& l) { require(l.alpha >= 0.0 && l.alpha <= 1.0, "enet alpha must lie in [0,1]"); },
                 [](const auto&) {},
             },
             loss);
}

ScalarLoss parse_loss(std::string_view spec) {
  const auto colon = spec.find(':');
  const std::string name(spec.substr(0, colon));
  std::vector<std::pair<std::string, double>> params;
  if (colon != std::string_view::npos) {
    std::stringstream ss{std::string(spec.substr(colon + 1))};
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto eq = item.find('=');
      require(eq != std::string::npos, "loss parameter '" + item + "' is not key=value");
      double value = 0.0;
      const std::string v = item.substr(eq + 1);
      const auto res = std::from_chars(v.data(), v.data() + v.size(), value);
      require(res.ec == std::errc() && res.ptr == v.data() + v.size(), "bad number in loss parameter '" + item + "'");
      params.emplace_back(item.substr(0, eq), value);
    }
  }
  auto take = [&](const char* key, double def) {
    for (auto it = params.begin(); it != params.end(); ++it) {
      if (it->first == key) {
        const double v = it->second;
        params.erase(it);
        return v;
      }
    }
    return def;
  };
  ScalarLoss out;
  if (name == "l2" || name == "quadratic") {
    out = Quadratic{};
  } else if (name == "l1") {
    out = L1{};
  } else if (name == "huber") {
    out = Huber{take("kappa", 1.0)};
  } else if (name == "vapnik") {
    out = Vapnik{take("eps", 0.0)};
  } else if (name == "huber-ins" || name == "huber-insensitive") {
    const double kappa = take("kappa", 1.0);
    out = HuberInsensitive{kappa, take("eps", 0.0)};
  } else if (name == "enet" || name == "elastic-net") {
    out = ElasticNet{take("alpha", 0.5)};
  } else if (name == "group-l2") {
    out = GroupL2{};
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown loss '" + name + "'");
  }
  require(params.empty(), "unknown parameter '" + (params.empty() ? std::string() : params.front().first) +
                              "' for loss " + name);
  check_loss(out);
  return out;
}

std::string loss_to_string(const ScalarLoss& loss) {
  auto num = [](double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
  };
  return std::visit(overloaded{
                        [](const Quadratic&) { return std::string("l2"); },
                        [](const L1&) { return std::string("l1"); },
                        [&](const Huber& l) { return "huber:kappa=" + num(l.kappa); },
                        [&](const Vapnik& l) { return "vapnik:eps=" + num(l.eps); },
                        [&](const HuberInsensitive& l) {
                          return "huber-ins:kappa=" + num(l.kappa) + ",eps=" + num(l.eps);
                        },
                        [&](const ElasticNet& l) { return "enet:alpha=" + num(l.alpha); },
                        [](const GroupL2&) { return std::string("group-l2"); },
                    },
                    loss);
}

bool is_smooth(const ScalarLoss& loss) {
  return std::holds_alternative<Quadratic>(loss) || std::holds_alternative<Huber>(loss);
}

bool is_group(const ScalarLoss& loss) { return std::holds_alternative<GroupL2>(loss); }

double eval(const ScalarLoss& loss, double x) {
  return std::visit(overloaded{
                        [&](const Quadratic&) { return 0.5 * x * x; },
                        [&](const L1&) { return std::abs(x); },
                        [&](const Huber& l) { return huber_value(l.kappa, x); },
                        [&](const Vapnik& l) { return std::max(std::abs(x) - l.eps, 0.0); },
                        [&](const HuberInsensitive& l) {
                          return huber_value(l.kappa, std::max(std::abs(x) - l.eps, 0.0));
                        },
                        [&](const ElasticNet& l) { return l.alpha * std::abs(x) + (1.0 - l.alpha) * 0.5 * x * x; },
                        [&](const GroupL2&) { return std::abs(x); },
                    },
                    loss);
}

double eval_sum(const ScalarLoss& loss, const Vec& r, std::size_t block) {
  if (is_group(loss)) {
    check_block(r, block);
    double total = 0.0;
    for_each_group(r, block, [&](Eigen::Index off, Eigen::Index b) { total += r.segment(off, b).norm(); });
    return total;
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) total += eval(loss, r(i));
  return total;
}

double eval_sum(const ScalarLoss& loss, const Mat& W, const Vec& r, std::size_t block) {
  return eval_sum(loss, Vec(W * r), block);
}

double prox_scalar(const ScalarLoss& loss, double eta, double y) {
  return std::visit(overloaded{
                        [&](const Quadratic&) { return y / (1.0 + eta); },
                        [&](const L1&) { return soft(y, eta); },
                        [&](const Huber& l) { return huber_prox(l.kappa, eta, y); },
                        [&](const Vapnik& l) {
                          const double a = std::abs(y);
                          if (a <= l.eps) return y;
                          if (a <= l.eps + eta) return l.eps * sgn(y);
                          return y - eta * sgn(y);
                        },
                        [&](const HuberInsensitive& l) {
                          const double a = std::abs(y);
                          if (a <= l.eps) return y;
                          return sgn(y) * (l.eps + huber_prox(l.kappa, eta, a - l.eps));
                        },
                        [&](const ElasticNet& l) { return soft(y, eta * l.alpha) / (1.0 + eta * (1.0 - l.alpha)); },
                        [&](const GroupL2&) { return soft(y, eta); },
                    },
                    loss);
}

Vec prox(const ScalarLoss& loss, double eta, const Vec& y, std::size_t block) {
  if (!(eta > 0.0)) throw Error(ErrorCode::InvalidArgument, "prox requires eta > 0");
  Vec out(y.size());
  if (is_group(loss)) {
    check_block(y, block);
    for_each_group(y, block, [&](Eigen::Index off, Eigen::Index b) {
      const double nrm = y.segment(off, b).norm();
      const double scale = nrm > eta ? 1.0 - eta / nrm : 0.0;
      out.segment(off, b) = scale * y.segment(off, b);
    });
    return out;
  }
  for (Eigen::Index i = 0; i < y.size(); ++i) out(i) = prox_scalar(loss, eta, y(i));
  return out;
}

Vec prox_conjugate(const ScalarLoss& loss, double eta, const Vec& y, std::size_t block) {
  if (!(eta > 0.0)) throw Error(ErrorCode::InvalidArgument, "prox requires eta > 0");
  return y - eta * prox(loss, 1.0 / eta, y / eta, block);
}

std::pair<double, double> subdifferential(const ScalarLoss& loss, double x) {
  auto point = [](double g) { return std::pair<double, double>{g, g}; };
  return std::visit(
      overloaded{
          [&](const Quadratic&) { return point(x); },
          [&](const L1&) { return x == 0.0 ? std::pair<double, double>{-1.0, 1.0} : point(sgn(x)); },
          [&](const Huber& l) { return point(std::clamp(x, -l.kappa, l.kappa)); },
          [&](const Vapnik& l) {
            const double a = std::abs(x);
            if (a < l.eps) return point(0.0);
            if (a > l.eps) return point(sgn(x));
            if (l.eps == 0.0) return std::pair<double, double>{-1.0, 1.0};
            return x > 0 ? std::pair<double, double>{0.0, 1.0} : std::pair<double, double>{-1.0, 0.0};
          },
          [&](const HuberInsensitive& l) {
            const double a = std::abs(x);
            if (a <= l.eps) return point(0.0);
            return point(sgn(x) * std::min(a - l.eps, l.kappa));
          },
          [&](const ElasticNet& l) {
            const double q = (1.0 - l.alpha) * x;
            if (x == 0.0) return std::pair<double, double>{-l.alpha, l.alpha};
            return point(l.alpha * sgn(x) + q);
          },
          [&](const GroupL2&) { return x == 0.0 ? std::pair<double, double>{-1.0, 1.0} : point(sgn(x)); },
      },
      loss);
}

double subgradient(const ScalarLoss& loss, double x) {
  const auto [lo, hi] = subdifferential(loss, x);
  return std::clamp(0.0, lo, hi);
}

Vec subgradient(const ScalarLoss& loss, const Vec& r, std::size_t block) {
  Vec g(r.size());
  if (is_group(loss)) {
    check_block(r, block);
    for_each_group(r, block, [&](Eigen::Index off, Eigen::Index b) {
      const double nrm = r.segment(off, b).norm();
      if (nrm > 0.0)
        g.segment(off, b) = r.segment(off, b) / nrm;
      else
        g.segment(off, b).setZero();
    });
    return g;
  }
  for (Eigen::Index i = 0; i < r.size(); ++i) g(i) = subgradient(loss, r(i));
  return g;
}

Vec gradient(const ScalarLoss& loss, const Vec& r) {
  if (!is_smooth(loss))
    throw Error(ErrorCode::NonSmoothLoss, "gradient requested for nonsmooth loss " + loss_to_string(loss));
  Vec g(r.size());
  for (Eigen::Index i = 0; i < r.size(); ++i) g(i) = subdifferential(loss, r(i)).first;
  return g;
}

double conjugate_eval(const ScalarLoss& loss, double w) {
  const double a = std::abs(w);
  return std::visit(overloaded{
                        [&](const Quadratic&) { return 0.5 * w * w; },
                        [&](const L1&) { return a <= 1.0 ? 0.0 : kInf; },
                        [&](const Huber& l) { return a <= l.kappa ? 0.5 * w * w : kInf; },
                        [&](const Vapnik& l) { return a <= 1.0 ? l.eps * a : kInf; },
                        [&](const HuberInsensitive& l) { return a <= l.kappa ? l.eps * a + 0.5 * w * w : kInf; },
                        [&](const ElasticNet& l) {
                          if (l.alpha == 1.0) return a <= 1.0 ? 0.0 : kInf;
                          const double e = std::max(a - l.alpha, 0.0);
                          return e * e / (2.0 * (1.0 - l.alpha));
                        },
                        [&](const GroupL2&) { return a <= 1.0 ? 0.0 : kInf; },
                    },
                    loss);
}

namespace {

PlqPenalty make_plq(Vec b, Mat B, Mat M, Mat H, Vec h) {
  return PlqPenalty{std::move(b), std::move(B), std::move(M), std::move(H), std::move(h)};
}

// V = [lo, hi] on a single coordinate: Hᵀv ≤ h with H = [1, -1].
PlqPenalty interval_plq(double lo, double hi, double m) {
  return make_plq(Vec::Zero(1), Mat::Ones(1, 1), Mat::Constant(1, 1, m), (Mat(1, 2) << 1.0, -1.0).finished(),
                  (Vec(2) << hi, -lo).finished());
}

// Two-coordinate dead-zone encodings: b = (−ε, −ε), B = (1, −1), V = [0, c]².
PlqPenalty deadzone_plq(double eps, double cap, double m) {
  Mat H(2, 4);
  H << 1, 0, -1, 0, 0, 1, 0, -1;
  return make_plq(Vec::Constant(2, -eps), (Mat(2, 1) << 1.0, -1.0).finished(), m * Mat::Identity(2, 2), H,
                  (Vec(4) << cap, cap, 0.0, 0.0).finished());
}

}  // namespace

PlqPenalty plq_encoding(const ScalarLoss& loss) {
  check_loss(loss);
  return std::visit(
      overloaded{
          [](const Quadratic&) {
            return make_plq(Vec::Zero(1), Mat::Ones(1, 1), Mat::Ones(1, 1), Mat::Zero(1, 0), Vec::Zero(0));
          },
          [](const L1&) { return interval_plq(-1.0, 1.0, 0.0); },
          [](const Huber& l) { return interval_plq(-l.kappa, l.kappa, 1.0); },
          [](const Vapnik& l) { return deadzone_plq(l.eps, 1.0, 0.0); },
          [](const HuberInsensitive& l) { return deadzone_plq(l.eps, l.kappa, 1.0); },
          [](const ElasticNet& l) {
            if (l.alpha == 0.0) return plq_encoding(Quadratic{});
            if (l.alpha == 1.0) return plq_encoding(L1{});
            Mat M = Mat::Zero(2, 2);
            M(1, 1) = 1.0;
            Mat H = Mat::Zero(2, 2);
            H(0, 0) = 1.0;
            H(0, 1) = -1.0;
            return make_plq(Vec::Zero(2), (Mat(2, 1) << 1.0, std::sqrt(1.0 - l.alpha)).finished(), M, H,
                            (Vec(2) << l.alpha, l.alpha).finished());
          },
          [](const GroupL2&) -> PlqPenalty {
            throw Error(ErrorCode::UnsupportedLoss, "group-l2 has no polyhedral dual set");
          },
      },
      loss);
}

std::vector<std::string> check_plq(const PlqPenalty& p) {
  std::vector<std::string> out;
  const auto k = static_cast<Eigen::Index>(p.k());
  if (p.B.rows() != k || p.M.rows() != k || p.M.cols() != k || p.H.rows() != k || p.H.cols() != p.h.size()) {
    out.push_back("dimension mismatch");
    return out;
  }
  if (p.B.cols() > 0) {
    Eigen::JacobiSVD<Mat> svd(p.B);
    const Vec& sv = svd.singularValues();
    if (sv.size() < p.B.cols() || sv(sv.size() - 1) <= 1e-10 * sv(0)) out.push_back("B not injective");
  }
  if (p.h.size() > 0 && p.h.minCoeff() < 0.0) out.push_back("0 not in V (h has a negative entry)");
  if (k > 0) {
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (p.M + p.M.transpose()), Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff()))
      out.push_back("M not PSD");
  }
  return out;
}

Vec project(const ConstraintSet& set, const Vec& y) {
  return std::visit(
      overloaded{
          [&](const Unconstrained&) { return y; },
          [&](const Box& b) {
            if (b.lo.size() != y.size() || b.hi.size() != y.size())
              throw Error(ErrorCode::DimensionMismatch, "box bounds do not match the vector size");
            return Vec(y.cwiseMax(b.lo).cwiseMin(b.hi));
          },
          [&](const Ball2& b) {
            const double nrm = y.norm();
            return nrm <= b.tau ? y : Vec(y * (b.tau / nrm));
          },
          [&](const BallInf& b) { return Vec(y.cwiseMax(-b.tau).cwiseMin(b.tau)); },
          [&](const Ball1& b) {
            if (y.lpNorm<1>() <= b.tau) return y;
            std::vector<double> u(y.size());
            for (Eigen::Index i = 0; i < y.size(); ++i) u[i] = std::abs(y(i));
            std::sort(u.begin(), u.end(), std::greater<>());
            double cum = 0.0, theta = 0.0;
            for (std::size_t j = 0; j < u.size(); ++j) {
              cum += u[j];
              const double t = (cum - b.tau) / static_cast<double>(j + 1);
              if (u[j] - t > 0.0) theta = t;
            }
            Vec out(y.size());
            for (Eigen::Index i = 0; i < y.size(); ++i) out(i) = soft(y(i), theta);
            return out;
          },
          [&](const Polyhedral&) -> Vec {
            throw Error(ErrorCode::NotImplemented, "projection onto a general polyhedron; use the interior-point solver");
          },
      },
      set);
}

bool contains(const ConstraintSet& set, const Vec& x, double tol) {
  return std::visit(overloaded{
                        [&](const Unconstrained&) { return true; },
                        [&](const Box& b) {
                          return (x - b.lo).minCoeff() >= -tol && (b.hi - x).minCoeff() >= -tol;
                        },
                        [&](const Ball2& b) { return x.norm() <= b.tau + tol; },
                        [&](const Ball1& b) { return x.lpNorm<1>() <= b.tau + tol; },
                        [&](const BallInf& b) { return x.lpNorm<Eigen::Infinity>() <= b.tau + tol; },
                        [&](const Polyhedral& p) {
                          const Vec r = p.D.transpose() * x - p.d;
                          for (Eigen::Index i = 0; i < r.size(); ++i) {
                            const bool eq = !p.equality.empty() && p.equality[i];
                            if (eq ? std::abs(r(i)) > tol : r(i) > tol) return false;
                          }
                          return true;
                        },
                    },
                    set);
}

bool is_unconstrained(const ConstraintSet& set) { return std::holds_alternative<Unconstrained>(set); }

Box state_box(const Vec& lo, const Vec& hi, std::size_t N) {
  Box b;
  b.lo = lo.replicate(static_cast<Eigen::Index>(N + 1), 1);
  b.hi = hi.replicate(static_cast<Eigen::Index>(N + 1), 1);
  return b;
}

}  // namespace gks
