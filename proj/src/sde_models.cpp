#include "driftmc/sde_models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "driftmc/parallel.hpp"
#include "driftmc/rng.hpp"

namespace driftmc {

namespace {

constexpr double kTimeTolerance = 1e-12;

double beta_power(double x, double beta) {
    if (x <= 0.0) return beta == 0.0 ? 1.0 : 0.0;
    if (beta == 1.0) return x;
    if (beta == 0.5) return std::sqrt(x);
    if (beta == 0.0) return 1.0;
    return std::pow(x, beta);
}

void require(bool condition, const std::string& message) {
    if (!condition) throw std::invalid_argument("ModelSpec: " + message);
}

}  // namespace

std::string to_string(Dynamics d) {
    switch (d) {
        case Dynamics::Heston: return "Heston";
        case Dynamics::Sabr: return "SABR";
        case Dynamics::Gbm: return "GBM";
        case Dynamics::Abm: return "ABM";
    }
    return "unknown";
}

std::vector<double> ModelSpec::initial_forward(double horizon) const {
    const double growth = std::exp(carry_rate() * horizon);
    std::vector<double> f(x0);
    for (auto& v : f) v *= growth;
    return f;
}

double ModelSpec::initial_vol(std::size_t asset) const {
    switch (kind) {
        case Dynamics::Heston: return heston->v0.at(asset);
        case Dynamics::Sabr: return sabr->v0.at(asset);
        case Dynamics::Gbm:
        case Dynamics::Abm: return sigma.at(asset);
    }
    return 0.0;
}

double ModelSpec::local_diffusion(std::size_t /*asset*/, double x, double vol) const {
    switch (kind) {
        case Dynamics::Heston: return std::sqrt(std::max(vol, 0.0)) * x;
        case Dynamics::Sabr: return vol * beta_power(x, sabr->beta);
        case Dynamics::Gbm: return vol * x;
        case Dynamics::Abm: return vol;
    }
    return 0.0;
}

Eigen::MatrixXd ModelSpec::correlation() const {
    const auto d = static_cast<Eigen::Index>(dimension());
    if (asset_corr.size() == 0) return Eigen::MatrixXd::Identity(d, d);
    return asset_corr;
}

void ModelSpec::validate() const {
    const std::size_t d = dimension();
    require(d >= 1, "at least one asset is required");
    for (double x : x0) require(x > 0.0 && std::isfinite(x), "x0 entries must be positive");

    auto check_vector = [&](const std::vector<double>& v, const char* name, bool strictly) {
        require(v.size() == d, std::string(name) + " must have one entry per asset");
        for (double e : v) {
            require(std::isfinite(e) && (strictly ? e > 0.0 : e >= 0.0),
                    std::string(name) + (strictly ? " entries must be positive"
                                                  : " entries must be nonnegative"));
        }
    };

    switch (kind) {
        case Dynamics::Heston:
            require(heston.has_value(), "Heston dynamics need heston parameters");
            check_vector(heston->v0, "v0", true);
            if (!heston->theta.empty()) check_vector(heston->theta, "theta", false);
            require(heston->kappa >= 0.0, "kappa must be nonnegative");
            require(heston->gamma >= 0.0, "gamma must be nonnegative");
            require(std::abs(heston->rho_sv) <= 1.0, "rho_sv must lie in [-1, 1]");
            break;
        case Dynamics::Sabr:
            require(sabr.has_value(), "SABR dynamics need sabr parameters");
            check_vector(sabr->v0, "v0", true);
            require(sabr->alpha >= 0.0, "alpha must be nonnegative");
            require(sabr->beta >= 0.0 && sabr->beta <= 1.0, "beta must lie in [0, 1]");
            require(std::abs(sabr->rho_sv) <= 1.0, "rho_sv must lie in [-1, 1]");
            break;
        case Dynamics::Gbm:
        case Dynamics::Abm:
            check_vector(sigma, "sigma", false);
            break;
    }
    if (asset_corr.size() != 0) {
        require(asset_corr.rows() == static_cast<Eigen::Index>(d) &&
                    asset_corr.cols() == static_cast<Eigen::Index>(d),
                "asset_corr must be d x d");
        factor_correlation(asset_corr);
    }
}

CorrelationFactor factor_correlation(const Eigen::MatrixXd& rho) {
    if (rho.rows() != rho.cols() || rho.rows() == 0) {
        throw std::invalid_argument("factor_correlation: matrix must be square and nonempty");
    }
    const Eigen::Index d = rho.rows();
    for (Eigen::Index i = 0; i < d; ++i) {
        if (std::abs(rho(i, i) - 1.0) > 1e-12) {
            throw std::invalid_argument("factor_correlation: diagonal entries must equal 1");
        }
        for (Eigen::Index j = 0; j < i; ++j) {
            if (std::abs(rho(i, j) - rho(j, i)) > 1e-12) {
                throw std::invalid_argument("factor_correlation: matrix is not symmetric");
            }
        }
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(rho);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("factor_correlation: eigen-decomposition failed");
    }
    const Eigen::VectorXd& lambda = solver.eigenvalues();
    if (lambda.minCoeff() < -1e-12) {
        throw std::invalid_argument("factor_correlation: matrix is not positive semidefinite");
    }

    std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return lambda(a) > lambda(b); });

    CorrelationFactor factor;
    std::vector<Eigen::VectorXd> columns;
    for (Eigen::Index idx : order) {
        if (lambda(idx) < 1e-12) continue;
        Eigen::VectorXd v = solver.eigenvectors().col(idx);
        Eigen::Index pivot = 0;
        v.cwiseAbs().maxCoeff(&pivot);
        if (v(pivot) < 0.0) v = -v;
        columns.push_back(std::sqrt(lambda(idx)) * v);
        factor.eigenvalues.push_back(lambda(idx));
    }
    factor.loadings.resize(d, static_cast<Eigen::Index>(columns.size()));
    for (std::size_t k = 0; k < columns.size(); ++k) {
        factor.loadings.col(static_cast<Eigen::Index>(k)) = columns[k];
    }
    return factor;
}

double TimeGrid::max_step() const {
    double step = 0.0;
    for (std::size_t i = 1; i < times.size(); ++i) step = std::max(step, times[i] - times[i - 1]);
    return step;
}

std::optional<std::size_t> TimeGrid::find(double t) const {
    auto it = std::lower_bound(times.begin(), times.end(), t - kTimeTolerance);
    if (it == times.end() || std::abs(*it - t) > kTimeTolerance) return std::nullopt;
    return static_cast<std::size_t>(it - times.begin());
}

TimeGrid build_grid(double horizon, double dt, const QuadratureRule* quad,
                    std::span<const double> fixings) {
    if (!(horizon > 0.0)) throw std::invalid_argument("build_grid: horizon must be positive");
    if (!(dt > 0.0)) throw std::invalid_argument("build_grid: dt must be positive");

    struct Special {
        double t;
        std::uint8_t mark;
        bool exact;
    };
    std::vector<Special> specials{{0.0, kPlain, true}, {horizon, kPlain, true}};
    std::vector<double> boundaries{0.0, horizon};
    for (double f : fixings) {
        if (f < -kTimeTolerance || f > horizon + kTimeTolerance) {
            std::ostringstream msg;
            msg << "build_grid: fixing date " << f << " outside [0, " << horizon << "]";
            throw std::invalid_argument(msg.str());
        }
        const double clamped = std::clamp(f, 0.0, horizon);
        specials.push_back({clamped, kFixingDate, true});
        boundaries.push_back(clamped);
    }
    std::sort(boundaries.begin(), boundaries.end());
    if (quad != nullptr) {
        for (std::size_t s = 0; s + 1 < boundaries.size(); ++s) {
            const double a = boundaries[s];
            const double b = boundaries[s + 1];
            if (b - a <= kTimeTolerance) continue;
            for (double node : quad->abscissas) {
                specials.push_back({a + node * (b - a), kQuadratureNode, false});
            }
        }
    }
    std::stable_sort(specials.begin(), specials.end(),
                     [](const Special& x, const Special& y) { return x.t < y.t; });

    std::vector<Special> merged;
    for (const auto& s : specials) {
        if (!merged.empty() && s.t - merged.back().t <= kTimeTolerance) {
            merged.back().mark |= s.mark;
            if (s.exact && !merged.back().exact) {
                merged.back().t = s.t;
                merged.back().exact = true;
            }
            continue;
        }
        merged.push_back(s);
    }

    TimeGrid grid;
    for (std::size_t i = 0; i < merged.size(); ++i) {
        grid.times.push_back(merged[i].t);
        grid.marks.push_back(merged[i].mark);
        if (i + 1 == merged.size()) break;
        const double a = merged[i].t;
        const double b = merged[i + 1].t;
        const auto steps =
            std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((b - a) / dt - 1e-9)));
        for (std::size_t k = 1; k < steps; ++k) {
            grid.times.push_back(a + (b - a) * static_cast<double>(k) / static_cast<double>(steps));
            grid.marks.push_back(kPlain);
        }
    }
    return grid;
}

PathSimulator::PathSimulator(ModelSpec model, TimeGrid grid, std::size_t n_paths,
                             std::uint64_t seed)
    : model_(std::move(model)), grid_(std::move(grid)), n_paths_(n_paths), seed_(seed) {
    model_.validate();
    if (grid_.size() < 2) throw std::invalid_argument("PathSimulator: grid needs two or more times");
    factor_ = factor_correlation(model_.correlation());
    forward0_ = model_.initial_forward(grid_.horizon());
    if (model_.kind == Dynamics::Heston) {
        theta_ = model_.heston->theta.empty() ? model_.heston->v0 : model_.heston->theta;
    }
}

void PathSimulator::visit(std::size_t path, const PathVisitor& visitor) const {
    const std::size_t d = model_.dimension();
    const std::size_t rank = factor_.rank();
    const Eigen::MatrixXd& c = factor_.loadings;

    NormalStream rng(seed_, path);
    std::vector<double> f(forward0_);
    std::vector<double> log_f(d);
    std::vector<double> v(d);
    std::vector<double> vol(d);
    std::vector<double> diffusion(d);
    std::vector<double> drift(d, 0.0);
    std::vector<double> factor_draws(rank);
    std::vector<double> z(d);
    for (std::size_t i = 0; i < d; ++i) {
        log_f[i] = std::log(f[i]);
        v[i] = model_.initial_vol(i);
        vol[i] = v[i];
        diffusion[i] = model_.local_diffusion(i, f[i], vol[i]);
    }
    const StateView view{f, diffusion, vol, drift};
    visitor(0, view);

    const bool stochastic_vol = model_.kind == Dynamics::Heston || model_.kind == Dynamics::Sabr;
    const double rho_sv = model_.kind == Dynamics::Heston ? model_.heston->rho_sv
                          : model_.kind == Dynamics::Sabr ? model_.sabr->rho_sv
                                                          : 0.0;
    const double rho_perp = std::sqrt(std::max(0.0, 1.0 - rho_sv * rho_sv));

    for (std::size_t j = 1; j < grid_.size(); ++j) {
        const double dt = grid_.times[j] - grid_.times[j - 1];
        const double sq = std::sqrt(dt);

        for (std::size_t k = 0; k < rank; ++k) factor_draws[k] = rng.next();
        for (std::size_t i = 0; i < d; ++i) {
            double zi = 0.0;
            for (std::size_t k = 0; k < rank; ++k) {
                zi += c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) *
                      factor_draws[k];
            }
            z[i] = zi;
        }

        for (std::size_t i = 0; i < d; ++i) {
            const double w = stochastic_vol ? rho_sv * z[i] + rho_perp * rng.next() : 0.0;
            switch (model_.kind) {
                case Dynamics::Heston: {
                    const auto& p = *model_.heston;
                    const double vp = std::max(v[i], 0.0);
                    const double sv = std::sqrt(vp);
                    log_f[i] += -0.5 * vp * dt + sv * sq * z[i];
                    v[i] += p.kappa * (theta_[i] - vp) * dt + p.gamma * sv * sq * w;
                    f[i] = std::exp(log_f[i]);
                    vol[i] = std::max(v[i], 0.0);
                    break;
                }
                case Dynamics::Sabr: {
                    const auto& p = *model_.sabr;
                    if (p.beta == 1.0) {
                        log_f[i] += -0.5 * v[i] * v[i] * dt + v[i] * sq * z[i];
                        f[i] = std::exp(log_f[i]);
                    } else if (f[i] > 0.0) {
                        f[i] += v[i] * beta_power(f[i], p.beta) * sq * z[i];
                        if (f[i] < 0.0) f[i] = 0.0;
                    }
                    v[i] *= std::exp(p.alpha * sq * w - 0.5 * p.alpha * p.alpha * dt);
                    vol[i] = v[i];
                    break;
                }
                case Dynamics::Gbm: {
                    const double s = model_.sigma[i];
                    log_f[i] += -0.5 * s * s * dt + s * sq * z[i];
                    f[i] = std::exp(log_f[i]);
                    break;
                }
                case Dynamics::Abm:
                    f[i] += model_.sigma[i] * sq * z[i];
                    break;
            }
            diffusion[i] = model_.local_diffusion(i, f[i], vol[i]);
            if (!std::isfinite(f[i]) || !std::isfinite(v[i])) {
                std::ostringstream msg;
                msg << "simulate: non-finite state on path " << path << " at t=" << grid_.times[j]
                    << " (asset " << i << ")";
                throw std::runtime_error(msg.str());
            }
        }
        visitor(j, view);
    }
}

void PathSet::visit(std::size_t path, const PathVisitor& visitor) const {
    for (std::size_t j = 0; j < time_grid.size(); ++j) {
        const std::size_t o = offset(path, j);
        visitor(j, StateView{std::span(asset).subspan(o, dim), std::span(diffusion).subspan(o, dim),
                             std::span(vol).subspan(o, dim), std::span(drift).subspan(o, dim)});
    }
}

PathSet simulate(const ModelSpec& model, const TimeGrid& grid, std::size_t n_paths,
                 std::uint64_t seed) {
    const PathSimulator simulator(model, grid, n_paths, seed);
    PathSet set;
    set.time_grid = grid;
    set.paths = n_paths;
    set.dim = model.dimension();
    set.rng_seed = seed;
    const std::size_t total = n_paths * grid.size() * set.dim;
    set.asset.resize(total);
    set.diffusion.resize(total);
    set.vol.resize(total);
    set.drift.resize(total);

    parallel_for(n_paths, [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            simulator.visit(p, [&](std::size_t j, const StateView& s) {
                const std::size_t o = set.offset(p, j);
                std::copy(s.asset.begin(), s.asset.end(), set.asset.begin() + o);
                std::copy(s.diffusion.begin(), s.diffusion.end(), set.diffusion.begin() + o);
                std::copy(s.vol.begin(), s.vol.end(), set.vol.begin() + o);
                std::copy(s.drift.begin(), s.drift.end(), set.drift.begin() + o);
            });
        }
    });
    return set;
}

}  // namespace driftmc
