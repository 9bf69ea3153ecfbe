#include "ccs/smolyak.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <mutex>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include "ccs/errors.hpp"

namespace ccs {

namespace {

constexpr std::size_t kMaxNodes = 8000;  // dense LU of the basis matrix stays under ~0.5 GB

std::atomic<long> g_extrapolations{0};

// New 1D nodes introduced at level i (nested Chebyshev extrema).
std::vector<double> node_increment(int i)
{
    if (i == 1) return {0.0};
    if (i == 2) return {-1.0, 1.0};
    const int m = (1 << (i - 1)) + 1;
    std::vector<double> x;
    for (int j = 1; j < m - 1; j += 2)
        x.push_back(-std::cos(std::numbers::pi * j / (m - 1)));
    return x;
}

// Chebyshev degrees introduced at level i.
std::vector<int> degree_increment(int i)
{
    if (i == 1) return {0};
    if (i == 2) return {1, 2};
    std::vector<int> d;
    for (int n = (1 << (i - 2)) + 1; n <= (1 << (i - 1)); ++n)
        d.push_back(n);
    return d;
}

std::size_t increment_size(int i)
{
    if (i == 1) return 1;
    if (i == 2) return 2;
    return std::size_t{1} << (i - 2);
}

// Visits every admissible multi-index: i_k <= levels_k + 1, sum (i_k - 1) <= max level.
template <class F>
void for_each_index(const std::vector<int>& levels, F&& f)
{
    const int d = static_cast<int>(levels.size());
    const int budget = *std::max_element(levels.begin(), levels.end());
    std::vector<int> idx(d, 1);
    auto rec = [&](auto&& self, int k, int used) -> void {
        if (k == d) {
            f(idx);
            return;
        }
        for (int i = 1; i <= levels[k] + 1 && used + i - 1 <= budget; ++i) {
            idx[k] = i;
            self(self, k + 1, used + i - 1);
        }
    };
    rec(rec, 0, 0);
}

// T_0..T_n at u, and derivatives if requested.
void chebyshev(double u, int n, double* t, double* dt)
{
    t[0] = 1.0;
    if (n >= 1) t[1] = u;
    for (int k = 2; k <= n; ++k)
        t[k] = 2.0 * u * t[k - 1] - t[k - 2];
    if (!dt) return;
    // T_k' = k U_{k-1}; U_0 = 1, U_1 = 2u.
    dt[0] = 0.0;
    double um2 = 0.0, um1 = 1.0;  // U_{-1}, U_0
    for (int k = 1; k <= n; ++k) {
        dt[k] = k * um1;
        const double next = (k == 1) ? 2.0 * u : 2.0 * u * um1 - um2;
        um2 = um1;
        um1 = next;
    }
}

} // namespace

GridSpec GridSpec::isotropic(std::vector<double> lo, std::vector<double> hi, int level)
{
    GridSpec s;
    s.levels.assign(lo.size(), level);
    s.lo = std::move(lo);
    s.hi = std::move(hi);
    return s;
}

int GridSpec::max_level() const
{
    return levels.empty() ? 0 : *std::max_element(levels.begin(), levels.end());
}

void GridSpec::validate() const
{
    if (lo.empty() || lo.size() != hi.size() || lo.size() != levels.size())
        throw DomainError("grid spec needs matching bounds and levels in every dimension");
    for (std::size_t k = 0; k < lo.size(); ++k) {
        if (!(lo[k] < hi[k]))
            throw DomainError("grid bounds must satisfy lo < hi in dimension " + std::to_string(k));
        if (levels[k] < 1)
            throw DomainError("approximation level must be at least 1");
    }
}

bool GridSpec::contains(std::span<const double> x, double tol) const
{
    for (std::size_t k = 0; k < lo.size(); ++k) {
        const double w = hi[k] - lo[k];
        if (x[k] < lo[k] - tol * w || x[k] > hi[k] + tol * w)
            return false;
    }
    return true;
}

std::size_t SmolyakBasis::count(const std::vector<int>& levels)
{
    std::size_t n = 0;
    for_each_index(levels, [&](const std::vector<int>& idx) {
        std::size_t c = 1;
        for (int i : idx) c *= increment_size(i);
        n += c;
    });
    return n;
}

SmolyakBasis::SmolyakBasis(std::vector<int> levels) : levels_(std::move(levels))
{
    if (levels_.empty())
        throw DomainError("Smolyak basis needs at least one dimension");
    for (int l : levels_)
        if (l < 1) throw DomainError("approximation level must be at least 1");
    size_ = count(levels_);
    if (size_ > kMaxNodes)
        throw ResourceError("Smolyak grid with " + std::to_string(size_) +
                            " nodes exceeds the memory budget of " + std::to_string(kMaxNodes));

    const int d = dimension();
    nodes_.reserve(size_ * d);
    degrees_.reserve(size_ * d);
    max_degree_.assign(d, 0);

    for_each_index(levels_, [&](const std::vector<int>& idx) {
        std::vector<std::vector<double>> xs(d);
        std::vector<std::vector<int>> ds(d);
        for (int k = 0; k < d; ++k) {
            xs[k] = node_increment(idx[k]);
            ds[k] = degree_increment(idx[k]);
            max_degree_[k] = std::max(max_degree_[k], ds[k].back());
        }
        std::vector<std::size_t> c(d, 0);
        while (true) {
            for (int k = 0; k < d; ++k) {
                nodes_.push_back(xs[k][c[k]]);
                degrees_.push_back(ds[k][c[k]]);
            }
            int k = 0;
            while (k < d && ++c[k] == xs[k].size()) c[k++] = 0;
            if (k == d) break;
        }
    });

    Eigen::MatrixXd b(size_, size_);
    std::vector<std::vector<double>> t(d);
    for (std::size_t n = 0; n < size_; ++n) {
        for (int k = 0; k < d; ++k) {
            t[k].resize(max_degree_[k] + 1);
            chebyshev(unit_node(n, k), max_degree_[k], t[k].data(), nullptr);
        }
        for (std::size_t m = 0; m < size_; ++m) {
            double v = 1.0;
            for (int k = 0; k < d; ++k) v *= t[k][degree(m, k)];
            b(n, m) = v;
        }
    }
    lu_.compute(b);
}

std::shared_ptr<const SmolyakBasis> SmolyakBasis::get(const std::vector<int>& levels)
{
    static std::mutex mu;
    static std::map<std::vector<int>, std::shared_ptr<const SmolyakBasis>> cache;
    std::lock_guard lock(mu);
    auto it = cache.find(levels);
    if (it != cache.end()) return it->second;
    auto b = std::make_shared<const SmolyakBasis>(levels);
    cache.emplace(levels, b);
    return b;
}

Eigen::VectorXd SmolyakBasis::solve(const Eigen::VectorXd& values) const
{
    return lu_.solve(values);
}

SmolyakGrid::SmolyakGrid(GridSpec spec) : spec_(std::move(spec))
{
    spec_.validate();
    basis_ = SmolyakBasis::get(spec_.levels);
}

std::vector<double> SmolyakGrid::node(std::size_t n) const
{
    const int d = dimension();
    std::vector<double> x(d);
    for (int k = 0; k < d; ++k)
        x[k] = spec_.lo[k] + 0.5 * (basis_->unit_node(n, k) + 1.0) * (spec_.hi[k] - spec_.lo[k]);
    return x;
}

std::vector<std::vector<double>> SmolyakGrid::nodes() const
{
    std::vector<std::vector<double>> out(size());
    for (std::size_t n = 0; n < size(); ++n) out[n] = node(n);
    return out;
}

void SmolyakGrid::evaluate(std::span<const double> x, std::span<const int> grad_dims,
                           BasisPoint& out) const
{
    const int d = dimension();
    const std::size_t n = size();
    const auto& b = *basis_;

    // Per-dimension Chebyshev values; small fixed stack buffers cover practical levels.
    constexpr int kMaxDeg = 64;
    double t[16][kMaxDeg + 1];
    double dt[16][kMaxDeg + 1];
    double scale[16];
    if (d > 16) throw ResourceError("Smolyak evaluation supports at most 16 dimensions");
    std::vector<bool> want(d, false);
    for (int g : grad_dims) want[g] = true;
    bool outside = false;
    for (int k = 0; k < d; ++k) {
        if (b.max_degree(k) > kMaxDeg) throw ResourceError("Chebyshev degree too large");
        const double w = spec_.hi[k] - spec_.lo[k];
        const double u = 2.0 * (x[k] - spec_.lo[k]) / w - 1.0;
        if (u < -1.0 - 1e-9 || u > 1.0 + 1e-9) outside = true;
        scale[k] = 2.0 / w;
        chebyshev(u, b.max_degree(k), t[k], want[k] ? dt[k] : nullptr);
    }

    if (outside) g_extrapolations.fetch_add(1, std::memory_order_relaxed);

    out.phi.resize(n);
    out.grad_dims.assign(grad_dims.begin(), grad_dims.end());
    out.dphi.resize(n * grad_dims.size());
    for (std::size_t m = 0; m < n; ++m) {
        const int* deg = b.degrees(m);
        double v = 1.0;
        for (int k = 0; k < d; ++k) v *= t[k][deg[k]];
        out.phi[m] = v;
        for (std::size_t g = 0; g < grad_dims.size(); ++g) {
            const int j = grad_dims[g];
            double dv = dt[j][deg[j]] * scale[j];
            for (int k = 0; k < d; ++k)
                if (k != j) dv *= t[k][deg[k]];
            out.dphi[g * n + m] = dv;
        }
    }
}

long extrapolation_count()
{
    return g_extrapolations.load(std::memory_order_relaxed);
}

Interpolant::Interpolant(std::shared_ptr<const SmolyakGrid> grid, Eigen::VectorXd coefficients)
    : grid_(std::move(grid)), coef_(std::move(coefficients))
{
    if (static_cast<std::size_t>(coef_.size()) != grid_->size())
        throw DataError("coefficient count does not match the grid");
}

double Interpolant::eval(std::span<const double> x) const
{
    BasisPoint p;
    grid_->evaluate(x, {}, p);
    return eval(p);
}

std::vector<double> Interpolant::gradient(std::span<const double> x) const
{
    const int d = grid_->dimension();
    std::vector<int> dims(d);
    for (int k = 0; k < d; ++k) dims[k] = k;
    BasisPoint p;
    grid_->evaluate(x, dims, p);
    std::vector<double> g(d);
    for (int k = 0; k < d; ++k) g[k] = partial(p, k);
    return g;
}

double Interpolant::eval(const BasisPoint& p) const
{
    const std::size_t n = p.phi.size();
    double s = 0.0;
    for (std::size_t m = 0; m < n; ++m) s += coef_[m] * p.phi[m];
    return s;
}

double Interpolant::partial(const BasisPoint& p, int g) const
{
    const std::size_t n = p.phi.size();
    const double* dp = p.dphi.data() + g * n;
    double s = 0.0;
    for (std::size_t m = 0; m < n; ++m) s += coef_[m] * dp[m];
    return s;
}

void Interpolant::write(std::ostream& os) const
{
    const auto& s = spec();
    os << "smolyak-interpolant 1\n";
    os << "dimension " << s.dimension() << "\n";
    os << "levels";
    for (int l : s.levels) os << ' ' << l;
    os << "\n" << std::setprecision(17);
    for (int k = 0; k < s.dimension(); ++k)
        os << "bounds " << s.lo[k] << ' ' << s.hi[k] << "\n";
    os << "coefficients " << coef_.size() << "\n";
    for (Eigen::Index m = 0; m < coef_.size(); ++m) os << coef_[m] << "\n";
}

Interpolant Interpolant::read(std::istream& is)
{
    auto expect = [&](const std::string& word) {
        std::string w;
        if (!(is >> w) || w != word)
            throw DataError("interpolant file: expected '" + word + "', found '" + w + "'");
    };
    expect("smolyak-interpolant");
    int version = 0;
    is >> version;
    if (version != 1) throw DataError("interpolant file: unsupported version");
    expect("dimension");
    int d = 0;
    is >> d;
    if (d <= 0) throw DataError("interpolant file: bad dimension");
    GridSpec s;
    expect("levels");
    s.levels.resize(d);
    for (auto& l : s.levels) is >> l;
    s.lo.resize(d);
    s.hi.resize(d);
    for (int k = 0; k < d; ++k) {
        expect("bounds");
        is >> s.lo[k] >> s.hi[k];
    }
    expect("coefficients");
    std::size_t n = 0;
    is >> n;
    Eigen::VectorXd c(n);
    for (std::size_t m = 0; m < n; ++m) is >> c[m];
    if (!is) throw DataError("interpolant file: truncated");
    return Interpolant(std::make_shared<const SmolyakGrid>(std::move(s)), std::move(c));
}

std::vector<std::vector<double>> build_nodes(const GridSpec& spec)
{
    return SmolyakGrid(spec).nodes();
}

Interpolant fit(std::shared_ptr<const SmolyakGrid> grid, std::span<const double> values)
{
    if (values.size() != grid->size())
        throw DataError("fit: got " + std::to_string(values.size()) + " values for " +
                        std::to_string(grid->size()) + " nodes");
    Eigen::VectorXd v(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i]))
            throw DataError("fit: non-finite value at node " + std::to_string(i));
        v[i] = values[i];
    }
    Eigen::VectorXd c = grid->basis().solve(v);
    return Interpolant(std::move(grid), std::move(c));
}

Interpolant fit(const GridSpec& spec, std::span<const double> values)
{
    return fit(std::make_shared<const SmolyakGrid>(spec), values);
}

} // namespace ccs
