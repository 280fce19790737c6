#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "driftmc/quadrature.hpp"

namespace driftmc {

enum class Dynamics { Heston, Sabr, Gbm, Abm };

std::string to_string(Dynamics d);

struct HestonParams {
    std::vector<double> v0;
    double kappa = 0.0;
    std::vector<double> theta;  // empty means theta = v0
    double gamma = 0.0;         // vol of variance
    double rho_sv = 0.0;
    double r = 0.0;
};

struct SabrParams {
    std::vector<double> v0;
    double alpha = 0.0;
    double beta = 1.0;
    double rho_sv = 0.0;
};

/// Original dynamics of d assets. Assets are simulated as forwards to the
/// horizon T, F_t = X_t exp(r (T - t)), which are driftless.
struct ModelSpec {
    Dynamics kind = Dynamics::Gbm;
    std::vector<double> x0;
    std::optional<HestonParams> heston;
    std::optional<SabrParams> sabr;
    std::vector<double> sigma;  // GBM: relative vol, ABM: absolute vol
    Eigen::MatrixXd asset_corr;  // empty means identity

    std::size_t dimension() const { return x0.size(); }
    double carry_rate() const { return heston ? heston->r : 0.0; }
    std::vector<double> initial_forward(double horizon) const;

    /// Initial instantaneous vol state per asset (variance for Heston, vol for
    /// SABR, sigma for GBM/ABM).
    double initial_vol(std::size_t asset) const;

    /// Diffusion coefficient of asset `i` at forward level x and vol state v.
    double local_diffusion(std::size_t asset, double x, double vol) const;

    Eigen::MatrixXd correlation() const;

    /// Throws std::invalid_argument describing the first violated invariant.
    void validate() const;
};

/// Loadings C (d x R) with C C^T = rho; columns sqrt(lambda_i) v_i ordered by
/// descending eigenvalue.
struct CorrelationFactor {
    Eigen::MatrixXd loadings;
    std::vector<double> eigenvalues;

    std::size_t dimension() const { return static_cast<std::size_t>(loadings.rows()); }
    std::size_t rank() const { return static_cast<std::size_t>(loadings.cols()); }
};

CorrelationFactor factor_correlation(const Eigen::MatrixXd& rho);

enum GridMark : std::uint8_t {
    kPlain = 0,
    kQuadratureNode = 1,
    kFixingDate = 2,
};

struct TimeGrid {
    std::vector<double> times;
    std::vector<std::uint8_t> marks;

    std::size_t size() const { return times.size(); }
    double horizon() const { return times.back(); }
    double max_step() const;
    double mean_step() const { return horizon() / static_cast<double>(times.size() - 1); }
    /// Index of the grid time within 1e-12 of t; nullopt if absent.
    std::optional<std::size_t> find(double t) const;
};

/// Grid on [0, T] containing 0, T, every fixing date and, when `quad` is set,
/// the rule's nodes mapped onto each segment between consecutive fixings.
/// Remaining gaps are split uniformly so that no step exceeds dt.
TimeGrid build_grid(double horizon, double dt, const QuadratureRule* quad,
                    std::span<const double> fixings);

/// Per-time simulated state of one path: forwards, diffusion coefficients and
/// vol states, each of length d.
struct StateView {
    std::span<const double> asset;
    std::span<const double> diffusion;
    std::span<const double> vol;
    std::span<const double> drift;
};

using PathVisitor = std::function<void(std::size_t time_index, const StateView&)>;

/// Abstract source of paths on a fixed grid. Visiting path `i` twice yields
/// identical states.
class PathSource {
public:
    virtual ~PathSource() = default;
    virtual std::size_t n_paths() const = 0;
    virtual std::size_t dimension() const = 0;
    virtual const TimeGrid& grid() const = 0;
    virtual void visit(std::size_t path, const PathVisitor& visitor) const = 0;
};

/// Euler-type stepping of the original dynamics under the forward measure.
/// Heston: log-Euler on F with full truncation of v; SABR: Euler on F with
/// absorption at zero and exact lognormal v; GBM/ABM: exact.
class PathSimulator final : public PathSource {
public:
    PathSimulator(ModelSpec model, TimeGrid grid, std::size_t n_paths, std::uint64_t seed);

    std::size_t n_paths() const override { return n_paths_; }
    std::size_t dimension() const override { return model_.dimension(); }
    const TimeGrid& grid() const override { return grid_; }
    const ModelSpec& model() const { return model_; }
    std::uint64_t seed() const { return seed_; }
    void visit(std::size_t path, const PathVisitor& visitor) const override;

private:
    ModelSpec model_;
    TimeGrid grid_;
    std::size_t n_paths_;
    std::uint64_t seed_;
    CorrelationFactor factor_;
    std::vector<double> forward0_;
    std::vector<double> theta_;
};

/// Fully materialized paths, laid out [path][time][asset].
struct PathSet final : public PathSource {
    TimeGrid time_grid;
    std::size_t paths = 0;
    std::size_t dim = 0;
    std::uint64_t rng_seed = 0;
    std::vector<double> asset;
    std::vector<double> diffusion;
    std::vector<double> vol;
    std::vector<double> drift;

    std::size_t n_paths() const override { return paths; }
    std::size_t dimension() const override { return dim; }
    const TimeGrid& grid() const override { return time_grid; }
    void visit(std::size_t path, const PathVisitor& visitor) const override;

    std::size_t offset(std::size_t path, std::size_t time) const {
        return (path * time_grid.size() + time) * dim;
    }
    double asset_at(std::size_t path, std::size_t time, std::size_t k = 0) const {
        return asset[offset(path, time) + k];
    }
};

PathSet simulate(const ModelSpec& model, const TimeGrid& grid, std::size_t n_paths,
                 std::uint64_t seed);

}  // namespace driftmc
