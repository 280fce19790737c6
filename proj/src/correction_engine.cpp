#include "driftmc/correction_engine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "driftmc/parallel.hpp"

namespace driftmc {

namespace {

constexpr double kDegenerate = 1e-14;

// Shared machinery for both traces: the centre value and the perturbation
// buffer live here so a xi evaluation touches psi at most 4R + 1 times.
class Stencil {
public:
    Stencil(const PsiFunction& psi, double t, std::span<const double> x, const PathObservables& y)
        : psi_(psi), t_(t), x_(x), y_(y), point_(x.begin(), x.end()) {
        double scale = 1.0;
        for (double v : x) scale = std::max(scale, std::abs(v));
        step_ = 1e-3 * scale;
        center_ = psi_.value(t_, x_, y_);
        evaluations_ = 1;
    }

    // Second derivative of psi along the unit vector e.
    double along(std::span<const double> e) {
        double h = step_;
        for (int attempt = 0; !admissible(e, h); ++attempt) {
            if (attempt == 60) {
                throw std::runtime_error("xi: no admissible finite-difference step inside the psi domain");
            }
            h *= 0.5;
        }
        for (std::size_t i = 0; i < point_.size(); ++i) point_[i] = x_[i] + h * e[i];
        const double up = psi_.value(t_, point_, y_);
        for (std::size_t i = 0; i < point_.size(); ++i) point_[i] = x_[i] - h * e[i];
        const double down = psi_.value(t_, point_, y_);
        evaluations_ += 2;
        return (up - 2.0 * center_ + down) / (h * h);
    }

    std::size_t evaluations() const { return evaluations_; }

private:
    // Only coordinates that move are checked: an absorbed asset sitting at 0
    // under a Black-Scholes psi carries no diffusion and stays put.
    bool admissible(std::span<const double> e, double h) const {
        if (psi_.simplified().exponent == 0) return true;
        for (std::size_t i = 0; i < e.size(); ++i) {
            if (e[i] != 0.0 && (x_[i] - h * std::abs(e[i]) <= 0.0)) return false;
        }
        return true;
    }

    const PsiFunction& psi_;
    double t_;
    std::span<const double> x_;
    const PathObservables& y_;
    std::vector<double> point_;
    double step_ = 0.0;
    double center_ = 0.0;
    std::size_t evaluations_ = 0;
};

// Column r of diag(c) C split into unit direction and squared length.
double column_direction(const Eigen::MatrixXd& loadings, std::size_t r, std::span<const double> c,
                        std::vector<double>& unit) {
    const std::size_t d = c.size();
    unit.resize(d);
    double norm2 = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        unit[i] = c[i] * loadings(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(r));
        norm2 += unit[i] * unit[i];
    }
    const double norm = std::sqrt(norm2);
    if (norm < kDegenerate) return 0.0;
    for (double& u : unit) u /= norm;
    return norm2;
}

void check_dims(const PsiFunction& psi, std::span<const double> x, std::span<const double> c) {
    if (x.size() != psi.dimension() || c.size() != psi.dimension()) {
        throw std::invalid_argument("xi: state dimension does not match psi");
    }
}

}  // namespace

double directional_laplacian(const PsiFunction& psi, double t, std::span<const double> x,
                             const PathObservables& y, std::span<const double> c,
                             const CorrelationFactor& factor, std::size_t* evaluations) {
    check_dims(psi, x, c);
    Stencil stencil(psi, t, x, y);
    std::vector<double> unit;
    double trace = 0.0;
    for (std::size_t r = 0; r < factor.rank(); ++r) {
        const double norm2 = column_direction(factor.loadings, r, c, unit);
        if (norm2 > 0.0) trace += norm2 * stencil.along(unit);
    }
    if (evaluations) *evaluations += stencil.evaluations();
    return trace;
}

double xi(const PsiFunction& psi, double t, std::span<const double> x,
          std::span<const double> sigma_t, const PathObservables& y, std::size_t* evaluations) {
    check_dims(psi, x, sigma_t);
    const SimplifiedModel& model = psi.simplified();
    const std::size_t d = x.size();
    std::vector<double> tilde(d);
    for (std::size_t i = 0; i < d; ++i) tilde[i] = model.diffusion(i, x[i]);

    Stencil stencil(psi, t, x, y);
    std::vector<double> u;
    std::vector<double> v;
    double actual = 0.0;
    double simplified = 0.0;
    for (std::size_t r = 0; r < model.factor.rank(); ++r) {
        const double nu = column_direction(model.factor.loadings, r, sigma_t, u);
        const double nv = column_direction(model.factor.loadings, r, tilde, v);
        double du = 0.0;
        if (nu > 0.0) du = stencil.along(u);
        if (nv > 0.0) {
            const double dv = (nu > 0.0 && u == v) ? du : stencil.along(v);
            simplified += nv * dv;
        }
        actual += nu * du;
    }
    if (evaluations) *evaluations += stencil.evaluations();
    return 0.5 * (actual - simplified);
}

std::string IntegrationMethod::label() const {
    std::ostringstream s;
    if (kind == Kind::Legendre) {
        s << "legendre(" << nodes << ")";
    } else {
        s << "riemann(" << dt << ")";
    }
    return s.str();
}

NodePlan plan_nodes(const IntegrationMethod& method, const TimeGrid& grid, const PayoffSpec& payoff) {
    NodePlan plan;
    if (method.kind == IntegrationMethod::Kind::Riemann) {
        if (!(method.dt > 0.0)) throw std::invalid_argument("plan_nodes: Riemann dt must be positive");
        if (grid.max_step() > method.dt * (1.0 + 1e-9)) {
            std::ostringstream msg;
            msg << "plan_nodes: grid step " << grid.max_step() << " exceeds Riemann dt " << method.dt;
            throw std::invalid_argument(msg.str());
        }
        for (std::size_t j = 0; j + 1 < grid.size(); ++j) {
            plan.index.push_back(j);
            plan.weight.push_back(grid.times[j + 1] - grid.times[j]);
        }
        return plan;
    }
    if (method.nodes == 0) throw std::invalid_argument("plan_nodes: Legendre rule needs at least one node");
    const QuadratureRule rule = gauss_legendre(method.nodes);
    const std::vector<double> bounds = payoff.segment_boundaries();
    for (std::size_t s = 0; s + 1 < bounds.size(); ++s) {
        const double a = bounds[s];
        const double len = bounds[s + 1] - a;
        for (std::size_t k = 0; k < rule.size(); ++k) {
            const double t = a + rule.abscissas[k] * len;
            const auto j = grid.find(t);
            if (!j) {
                std::ostringstream msg;
                msg.precision(17);
                msg << "plan_nodes: quadrature node t=" << t << " missing from simulation grid";
                throw std::invalid_argument(msg.str());
            }
            plan.index.push_back(*j);
            plan.weight.push_back(rule.weights[k] * len);
        }
    }
    return plan;
}

PathObservables initial_observables(const PayoffSpec& payoff, std::span<const double> forward0) {
    PathObservables obs;
    if (payoff.path_dependent()) obs = update_observables(payoff, obs, 0.0, forward0[0] * payoff.spot_factor(0.0));
    return obs;
}

double initial_psi(const PsiFunction& psi, const PayoffSpec& payoff, std::span<const double> forward0) {
    return psi.value(0.0, forward0, initial_observables(payoff, forward0));
}

std::vector<CorrectionSample> integrate_correction(const PathSource& paths, const PayoffSpec& payoff,
                                                   const PsiFunction& psi,
                                                   std::span<const IntegrationMethod> methods) {
    const TimeGrid& grid = paths.grid();
    const std::size_t n_paths = paths.n_paths();
    const std::size_t d = paths.dimension();
    if (d != psi.dimension()) throw std::invalid_argument("integrate_correction: psi dimension mismatch");
    if (std::abs(grid.horizon() - payoff.maturity) > 1e-12) {
        throw std::invalid_argument("integrate_correction: grid horizon differs from payoff maturity");
    }
    for (double f : payoff.fixing_dates) {
        if (!grid.find(f)) throw std::invalid_argument("integrate_correction: fixing date missing from grid");
    }

    const std::size_t n_methods = methods.size();
    std::vector<NodePlan> plans;
    std::vector<CorrectionSample> samples(n_methods);
    // at_index[j]: (method, node) pairs evaluated at grid index j.
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> at_index(grid.size());
    for (std::size_t m = 0; m < n_methods; ++m) {
        plans.push_back(plan_nodes(methods[m], grid, payoff));
        for (std::size_t p = 0; p < plans[m].index.size(); ++p) at_index[plans[m].index[p]].emplace_back(m, p);
        samples[m].method = methods[m];
        samples[m].J.assign(n_paths, 0.0);
        samples[m].Z.assign(n_paths, 0.0);
        for (std::size_t j : plans[m].index) samples[m].node_times.push_back(grid.times[j]);
    }

    // Fixed-size chunks keep the node-mean reduction order independent of the
    // thread count.
    constexpr std::size_t kChunk = 64;
    const std::size_t n_chunks = (n_paths + kChunk - 1) / kChunk;
    std::vector<std::vector<std::vector<double>>> chunk_sums(n_chunks);
    std::vector<double> Z(n_paths, 0.0);

    parallel_for(n_chunks, [&](std::size_t begin, std::size_t end) {
        std::vector<double> terminal(d);
        std::vector<double> acc(n_methods);
        for (std::size_t c = begin; c < end; ++c) {
            auto& sums = chunk_sums[c];
            sums.resize(n_methods);
            for (std::size_t m = 0; m < n_methods; ++m) sums[m].assign(plans[m].index.size(), 0.0);
            const std::size_t last = std::min(n_paths, (c + 1) * kChunk);
            for (std::size_t n = c * kChunk; n < last; ++n) {
                PathObservables obs;
                std::fill(acc.begin(), acc.end(), 0.0);
                paths.visit(n, [&](std::size_t j, const StateView& s) {
                    const double t = grid.times[j];
                    if (payoff.path_dependent()) {
                        obs = update_observables(payoff, obs, t, s.asset[0] * payoff.spot_factor(t));
                    }
                    if (!at_index[j].empty()) {
                        double value = 0.0;
                        try {
                            value = xi(psi, t, s.asset, s.diffusion, obs);
                        } catch (const std::exception& e) {
                            std::ostringstream msg;
                            msg.precision(17);
                            msg << "xi evaluation failed on path " << n << " at t=" << t << ": " << e.what();
                            throw std::runtime_error(msg.str());
                        }
                        for (auto [m, p] : at_index[j]) {
                            acc[m] += plans[m].weight[p] * value;
                            sums[m][p] += value;
                        }
                    }
                    if (j + 1 == grid.size()) std::copy(s.asset.begin(), s.asset.end(), terminal.begin());
                });
                for (std::size_t m = 0; m < n_methods; ++m) samples[m].J[n] = acc[m];
                Z[n] = terminal_payoff(payoff, obs, terminal);
            }
        }
    });

    for (std::size_t m = 0; m < n_methods; ++m) {
        samples[m].Z = Z;
        samples[m].node_mean.assign(plans[m].index.size(), 0.0);
        for (const auto& sums : chunk_sums) {
            for (std::size_t p = 0; p < sums[m].size(); ++p) samples[m].node_mean[p] += sums[m][p];
        }
        for (double& v : samples[m].node_mean) v /= static_cast<double>(std::max<std::size_t>(n_paths, 1));
    }
    return samples;
}

CorrectionSample integrate_correction(const PathSource& paths, const PayoffSpec& payoff,
                                      const PsiFunction& psi, const IntegrationMethod& method) {
    return std::move(integrate_correction(paths, payoff, psi, std::span(&method, 1)).front());
}

MeanStd mean_std(std::span<const double> values) {
    MeanStd r;
    if (values.empty()) return r;
    double sum = 0.0;
    for (double v : values) sum += v;
    r.mean = sum / static_cast<double>(values.size());
    if (values.size() < 2) return r;
    double ss = 0.0;
    for (double v : values) ss += (v - r.mean) * (v - r.mean);
    r.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
    return r;
}

PriceEstimate estimate_price(double psi0, const CorrectionSample& sample) {
    if (sample.J.size() < 2) throw std::invalid_argument("estimate_price: need at least two paths");
    const MeanStd s = mean_std(sample.J);
    return {psi0 + s.mean, s.sd / std::sqrt(static_cast<double>(sample.J.size())), sample.J.size()};
}

PriceEstimate crude_estimate(std::span<const double> payoffs) {
    if (payoffs.size() < 2) throw std::invalid_argument("crude_estimate: need at least two paths");
    const MeanStd s = mean_std(payoffs);
    return {s.mean, s.sd / std::sqrt(static_cast<double>(payoffs.size())), payoffs.size()};
}

}  // namespace driftmc
